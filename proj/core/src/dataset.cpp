#include "stgp/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>

#include "stgp/errors.hpp"

namespace stgp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct LexLess {
  bool operator()(const Vector& a, const Vector& b) const {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                        b.data() + b.size());
  }
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool is_missing_token(std::string_view cell) {
  if (cell.empty()) return true;
  std::string lower(cell);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower == "nan" || lower == "na";
}

double parse_number(std::string_view cell, std::size_t line, std::string_view column) {
  double value = 0.0;
  const auto* first = cell.data();
  const auto* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ParseError("column '" + std::string(column) + "': cannot parse '" + std::string(cell) +
                         "' as a finite number",
                     line);
  }
  return value;
}

}  // namespace

bool GridDataset::observed(Index n, Index k) const { return std::isfinite(values(n, k)); }

Index GridDataset::num_observed() const {
  return static_cast<Index>((values.array() == values.array()).count());
}

GridDataset make_dataset(const std::vector<Observation>& rows) {
  if (rows.empty()) throw DataError("empty dataset: no observation rows");
  const Index dim = rows.front().s.size();
  std::map<double, Index> time_index;
  std::map<Vector, Index, LexLess> site_index;
  for (const auto& r : rows) {
    if (r.s.size() != dim) throw DataError("inconsistent spatial dimension across rows");
    if (!std::isfinite(r.t) || !r.s.allFinite()) throw DataError("non-finite time or coordinate");
    time_index.emplace(r.t, 0);
    site_index.emplace(r.s, 0);
  }
  GridDataset out;
  out.times.resize(static_cast<Index>(time_index.size()));
  out.sites.resize(static_cast<Index>(site_index.size()), dim);
  Index i = 0;
  for (auto& [t, idx] : time_index) {
    idx = i;
    out.times(i++) = t;
  }
  i = 0;
  for (auto& [s, idx] : site_index) {
    idx = i;
    out.sites.row(i++) = s.transpose();
  }
  out.values = Matrix::Constant(out.num_times(), out.num_sites(), kNaN);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> seen =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(out.num_times(),
                                                                    out.num_sites(), false);
  for (const auto& r : rows) {
    const Index n = time_index.at(r.t);
    const Index k = site_index.at(r.s);
    if (seen(n, k)) {
      std::ostringstream msg;
      msg << "duplicate site at t=" << r.t << " s=(" << r.s.transpose() << ")";
      throw DataError(msg.str());
    }
    seen(n, k) = true;
    out.values(n, k) = r.y;
  }
  return out;
}

GridDataset parse_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> header;
  std::string header_line;
  while (std::getline(in, header_line)) {
    ++line_no;
    if (!trim(header_line).empty()) break;
  }
  if (trim(header_line).empty()) throw DataError("empty dataset: file has no header");
  header = split_commas(header_line);
  if (header.size() < 3 || header.front() != "t" || header.back() != "y") {
    throw ParseError("header must read t,s1[,s2,...],y", line_no);
  }
  const std::size_t dim = header.size() - 2;
  std::vector<Observation> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(cells.size()),
                       line_no);
    }
    Observation obs;
    obs.t = parse_number(cells[0], line_no, header[0]);
    obs.s.resize(static_cast<Index>(dim));
    for (std::size_t j = 0; j < dim; ++j) {
      obs.s(static_cast<Index>(j)) = parse_number(cells[j + 1], line_no, header[j + 1]);
    }
    obs.y = is_missing_token(cells.back()) ? kNaN : parse_number(cells.back(), line_no, "y");
    rows.push_back(std::move(obs));
  }
  if (rows.empty()) throw DataError("empty dataset: no observation rows");
  return make_dataset(rows);
}

GridDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_csv(in);
}

QueryTable parse_query_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::string header_line;
  while (std::getline(in, header_line)) {
    ++line_no;
    if (!trim(header_line).empty()) break;
  }
  if (trim(header_line).empty()) throw DataError("empty query: file has no header");
  const auto header = split_commas(header_line);
  const bool with_y = header.back() == "y";
  const std::size_t dim = header.size() - 1 - (with_y ? 1 : 0);
  if (header.front() != "t" || dim < 1) throw ParseError("header must read t,s1[,s2,...][,y]", line_no);
  std::vector<double> times;
  std::vector<double> coords;
  std::vector<double> targets;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(cells.size()),
                       line_no);
    }
    times.push_back(parse_number(cells[0], line_no, header[0]));
    for (std::size_t j = 0; j < dim; ++j) coords.push_back(parse_number(cells[j + 1], line_no, header[j + 1]));
    if (with_y) {
      targets.push_back(is_missing_token(cells.back()) ? kNaN : parse_number(cells.back(), line_no, "y"));
    }
  }
  if (times.empty()) throw DataError("empty query: no rows");
  QueryTable q;
  const Index rows = static_cast<Index>(times.size());
  q.times = Eigen::Map<const Vector>(times.data(), rows);
  q.sites = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      coords.data(), rows, static_cast<Index>(dim));
  if (with_y) q.targets = Eigen::Map<const Vector>(targets.data(), rows);
  return q;
}

QueryTable load_query_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_query_csv(in);
}

void write_csv(std::ostream& out, const GridDataset& data) {
  out << "t";
  for (Index j = 0; j < data.spatial_dim(); ++j) out << ",s" << (j + 1);
  out << ",y\n";
  out.precision(17);
  for (Index n = 0; n < data.num_times(); ++n) {
    for (Index k = 0; k < data.num_sites(); ++k) {
      out << data.times(n);
      for (Index j = 0; j < data.spatial_dim(); ++j) out << ',' << data.sites(k, j);
      if (data.observed(n, k)) {
        out << ',' << data.values(n, k) << '\n';
      } else {
        out << ",nan\n";
      }
    }
  }
}

void save_csv(const std::string& path, const GridDataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_csv(out, data);
}

Vector vec(const Matrix& values) {
  Vector out(values.size());
  const Index ns = values.cols();
  for (Index n = 0; n < values.rows(); ++n) out.segment(n * ns, ns) = values.row(n).transpose();
  return out;
}

Matrix unvec(const Vector& v, Index num_times, Index num_sites) {
  if (v.size() != num_times * num_sites) throw DimensionError("unvec: size mismatch");
  Matrix out(num_times, num_sites);
  for (Index n = 0; n < num_times; ++n) out.row(n) = v.segment(n * num_sites, num_sites).transpose();
  return out;
}

std::pair<GridDataset, GridDataset> kfold_split(const GridDataset& data, int folds, int fold,
                                                std::uint64_t seed) {
  if (folds < 2 || fold < 0 || fold >= folds) throw DomainError("kfold_split: bad fold index");
  std::vector<Index> observed;
  for (Index n = 0; n < data.num_times(); ++n) {
    for (Index k = 0; k < data.num_sites(); ++k) {
      if (data.observed(n, k)) observed.push_back(n * data.num_sites() + k);
    }
  }
  std::mt19937_64 rng(seed);
  std::shuffle(observed.begin(), observed.end(), rng);
  GridDataset train = data;
  GridDataset test = data;
  test.values.setConstant(kNaN);
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (static_cast<int>(i % static_cast<std::size_t>(folds)) != fold) continue;
    const Index n = observed[i] / data.num_sites();
    const Index k = observed[i] % data.num_sites();
    test.values(n, k) = data.values(n, k);
    train.values(n, k) = kNaN;
  }
  return {std::move(train), std::move(test)};
}

bool InputScaling::identity() const {
  return time_offset == 0.0 && time_scale == 1.0 &&
         (space_offset.size() == 0 || space_offset.isZero(0.0)) &&
         (space_scale.size() == 0 || (space_scale.array() == 1.0).all());
}

Vector InputScaling::map_site(const Vector& s) const {
  if (space_offset.size() == 0) return s;
  return ((s - space_offset).array() / space_scale.array()).matrix();
}

InputScaling fit_scaling(const GridDataset& data) {
  InputScaling sc;
  sc.time_offset = data.num_times() > 0 ? data.times(0) : 0.0;
  if (data.num_times() > 1) {
    std::vector<double> steps(static_cast<std::size_t>(data.num_times() - 1));
    for (Index n = 1; n < data.num_times(); ++n) steps[n - 1] = data.times(n) - data.times(n - 1);
    std::nth_element(steps.begin(), steps.begin() + steps.size() / 2, steps.end());
    sc.time_scale = steps[steps.size() / 2];
  }
  const Index dim = data.spatial_dim();
  sc.space_offset = data.sites.colwise().mean().transpose();
  sc.space_scale = Vector::Ones(dim);
  if (data.num_sites() > 1) {
    for (Index j = 0; j < dim; ++j) {
      const double sd = std::sqrt((data.sites.col(j).array() - sc.space_offset(j)).square().sum() /
                                  static_cast<double>(data.num_sites() - 1));
      if (sd > 0.0) sc.space_scale(j) = sd;
    }
  }
  return sc;
}

GridDataset apply_scaling(const GridDataset& data, const InputScaling& scaling) {
  GridDataset out = data;
  for (Index n = 0; n < out.num_times(); ++n) out.times(n) = scaling.map_time(data.times(n));
  for (Index k = 0; k < out.num_sites(); ++k) {
    out.sites.row(k) = scaling.map_site(data.sites.row(k).transpose()).transpose();
  }
  return out;
}

}  // namespace stgp
