#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "stgp/config.hpp"
#include "stgp/dataset.hpp"
#include "stgp/errors.hpp"
#include "stgp/harness.hpp"
#include "stgp/metrics.hpp"
#include "stgp/optimizer.hpp"
#include "stgp/synthesize.hpp"
#include "test_util.hpp"

namespace stgp {
namespace {

using testing::Rng;

const double kNaN = std::numeric_limits<double>::quiet_NaN();

GridDataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

bool same_table(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Index i = 0; i < a.size(); ++i) {
    const double x = a.data()[i];
    const double y = b.data()[i];
    if (std::isnan(x) != std::isnan(y)) return false;
    if (!std::isnan(x) && x != y) return false;
  }
  return true;
}

TEST(Dataset, TwoRowsSameTimeDifferentSites) {
  const GridDataset d = parse("t,s1,y\n0.5,1.0,3\n0.5,2.0,4\n");
  EXPECT_EQ(d.num_times(), 1);
  EXPECT_EQ(d.num_sites(), 2);
  EXPECT_TRUE(d.fully_gridded());
  EXPECT_DOUBLE_EQ(d.values(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(d.values(0, 1), 4.0);
}

TEST(Dataset, EmptyInputsAreRejected) {
  EXPECT_THROW(parse(""), DataError);
  EXPECT_THROW(parse("t,s1,y\n"), DataError);
}

TEST(Dataset, MalformedRowReportsLineNumber) {
  try {
    parse("t,s1,y\n0,0,1\n1,abc,2\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    parse("t,s1,y\n0,0,1\n1,0,2\n2,0\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  EXPECT_THROW(parse("time,s1,y\n0,0,1\n"), ParseError);
}

TEST(Dataset, DuplicateSiteWithinTimestamp) {
  EXPECT_THROW(parse("t,s1,s2,y\n0,1,2,3\n0,1,2,4\n"), DataError);
}

TEST(Dataset, MissingMarkersAndOrdering) {
  const GridDataset d = parse("t,s1,y\n2,0.5,nan\n1,0.5,1\n1,0.1,\n2,0.1,7\n");
  ASSERT_EQ(d.num_times(), 2);
  EXPECT_DOUBLE_EQ(d.times(0), 1.0);
  EXPECT_DOUBLE_EQ(d.sites(0, 0), 0.1);
  EXPECT_TRUE(std::isnan(d.values(0, 0)));
  EXPECT_DOUBLE_EQ(d.values(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(d.values(1, 0), 7.0);
  EXPECT_TRUE(std::isnan(d.values(1, 1)));
  EXPECT_EQ(d.num_missing(), 2);
}

TEST(Dataset, IrregularSitesTakeTheUnion) {
  const GridDataset d = parse("t,s1,y\n0,0,1\n1,1,2\n");
  EXPECT_EQ(d.num_sites(), 2);
  EXPECT_EQ(d.num_observed(), 2);
  EXPECT_FALSE(d.fully_gridded());
}

TEST(Dataset, CityGridStyleFileLoads) {
  // 447 cells of a 30x30 grid over 10 days.
  const auto path = std::filesystem::path(::testing::TempDir()) / "city_grid.csv";
  {
    std::ofstream out(path);
    out << "t,s1,s2,y\n";
    for (int day = 0; day < 10; ++day) {
      for (int cell = 0; cell < 900; ++cell) {
        if ((cell * 7) % 900 >= 447) continue;
        out << day << ',' << cell / 30 << ',' << cell % 30 << ',' << (cell + day) % 5 << '\n';
      }
    }
  }
  const GridDataset d = load_csv(path.string());
  EXPECT_EQ(d.num_times(), 10);
  EXPECT_EQ(d.num_sites(), 447);
  EXPECT_EQ(d.num_observed(), 4470);
  std::filesystem::remove(path);
}

TEST(Dataset, VecRoundTripAfterLoading) {
  Rng rng(7);
  const GridDataset d = testing::random_gaussian_grid(rng, 6, 4, 2, 0.2);
  std::stringstream buf;
  write_csv(buf, d);
  const GridDataset back = parse_csv(buf);
  const Vector v = vec(back.values);
  EXPECT_TRUE(same_table(unvec(v, back.num_times(), back.num_sites()), back.values));
  for (Index n = 0; n < back.num_times(); ++n) {
    for (Index k = 0; k < back.num_sites(); ++k) {
      const double x = v(n * back.num_sites() + k);
      EXPECT_TRUE(std::isnan(x) ? std::isnan(back.values(n, k)) : x == back.values(n, k));
    }
  }
  EXPECT_TRUE(same_table(back.values, d.values));
  EXPECT_EQ(back.times, d.times);
  EXPECT_EQ(back.sites, d.sites);
  EXPECT_THROW(unvec(v, 5, 4), DimensionError);
}

TEST(Dataset, KFoldPartitionsObservations) {
  Rng rng(3);
  const GridDataset d = testing::random_gaussian_grid(rng, 10, 5, 1, 0.1);
  Matrix coverage = Matrix::Zero(d.num_times(), d.num_sites());
  for (int fold = 0; fold < 5; ++fold) {
    const auto [train, test] = kfold_split(d, 5, fold, 11);
    EXPECT_EQ(train.num_observed() + test.num_observed(), d.num_observed());
    EXPECT_NEAR(static_cast<double>(test.num_observed()) / d.num_observed(), 0.2, 0.05);
    for (Index n = 0; n < d.num_times(); ++n) {
      for (Index k = 0; k < d.num_sites(); ++k) {
        EXPECT_FALSE(train.observed(n, k) && test.observed(n, k));
        if (test.observed(n, k)) coverage(n, k) += 1.0;
      }
    }
  }
  for (Index n = 0; n < d.num_times(); ++n) {
    for (Index k = 0; k < d.num_sites(); ++k) {
      EXPECT_EQ(coverage(n, k), d.observed(n, k) ? 1.0 : 0.0);
    }
  }
  const auto a = kfold_split(d, 5, 2, 11);
  const auto b = kfold_split(d, 5, 2, 11);
  EXPECT_TRUE(same_table(a.second.values, b.second.values));
  EXPECT_THROW(kfold_split(d, 1, 0, 0), DomainError);
}

TEST(Dataset, ScalingMapsToUnitMedianStep) {
  const GridDataset d = parse("t,s1,y\n10,2,1\n12,4,1\n14,6,1\n20,2,1\n");
  const InputScaling sc = fit_scaling(d);
  EXPECT_DOUBLE_EQ(sc.time_scale, 2.0);
  const GridDataset z = apply_scaling(d, sc);
  EXPECT_DOUBLE_EQ(z.times(0), 0.0);
  EXPECT_DOUBLE_EQ(z.times(1), 1.0);
  EXPECT_NEAR(z.sites.col(0).mean(), 0.0, 1e-14);
  EXPECT_NEAR((z.sites.col(0).array().square().sum()) / 2.0, 1.0, 1e-14);
  EXPECT_FALSE(sc.identity());
  EXPECT_TRUE(InputScaling{}.identity());
}

TEST(Synthesize, DeterministicForFixedSeed) {
  for (SynthKind kind : {SynthKind::kPseudoPeriodic, SynthKind::kLgcpCounts}) {
    SynthOptions o;
    o.kind = kind;
    o.num_times = 20;
    o.num_sites = 4;
    o.seed = 42;
    std::stringstream a;
    std::stringstream b;
    write_csv(a, synthesize(o));
    write_csv(b, synthesize(o));
    EXPECT_EQ(a.str(), b.str());
    o.seed = 43;
    std::stringstream c;
    write_csv(c, synthesize(o));
    EXPECT_NE(a.str(), c.str());
  }
}

TEST(Synthesize, PseudoPeriodicAmplitudeBound) {
  const double bound = 50.0 * (1.0 / 8 + 1.0 / 16 + 1.0 / 32 + 1.0 / 64 + 1.0 / 128);
  EXPECT_NEAR(bound, 12.109375, 1e-12);
  std::mt19937_64 rng(5);
  for (int draw = 0; draw < 5; ++draw) {
    const PseudoPeriodic fn(rng);
    for (int i = 3; i <= 7; ++i) {
      EXPECT_GE(fn.shifts()[i - 3], 0.0);
      EXPECT_LT(fn.shifts()[i - 3], std::ldexp(1.0, i));
    }
    for (int n = 0; n <= 2000; ++n) {
      const double t = n / 2000.0;
      for (double r : {0.125, 0.25, 0.6}) EXPECT_LE(std::abs(fn(t, r)), bound + 1e-12);
    }
  }
}

TEST(Synthesize, PseudoPeriodicVanishesAtOrigin) {
  std::mt19937_64 rng(9);
  const PseudoPeriodic fn(rng);
  for (int n = 0; n <= 100; ++n) EXPECT_EQ(fn(n * 0.01, 0.0), 0.0);
}

TEST(Synthesize, MatchesTheClosedForm) {
  const double shifts[5] = {1.0, 2.0, 3.0, 4.0, 5.0};
  const PseudoPeriodic fn(shifts);
  const double t = 0.37;
  const double r = 0.21;
  double phi = 0.0;
  for (int i = 3; i <= 7; ++i) {
    phi += std::pow(2.0, -i) *
           std::sin(2.0 * std::numbers::pi * (std::pow(2.0, 2 + i) + shifts[i - 3]) * t * 3.0);
  }
  EXPECT_NEAR(fn(t, r), 50.0 * phi * std::sin(4.0 * std::numbers::pi * r), 1e-12);
}

TEST(Synthesize, ShapesAndCounts) {
  SynthOptions o;
  o.num_times = 100;
  o.num_sites = 10;
  o.seed = 1;
  const GridDataset d = synthesize(o);
  EXPECT_EQ(d.num_times(), 100);
  EXPECT_EQ(d.num_sites(), 10);
  EXPECT_TRUE(d.fully_gridded());
  o.kind = SynthKind::kLgcpCounts;
  const GridDataset c = synthesize(o);
  EXPECT_TRUE((c.values.array() >= 0.0).all());
  EXPECT_TRUE(((c.values.array() - c.values.array().round()).abs() == 0.0).all());
  EXPECT_EQ(parse_synth_kind("lgcp_counts"), SynthKind::kLgcpCounts);
  EXPECT_THROW(parse_synth_kind("other"), DomainError);
  o.num_sites = 0;
  EXPECT_THROW(synthesize(o), DomainError);
}

TEST(Metrics, PerfectPredictionsHaveZeroRmse) {
  const Vector truth = (Vector(3) << 1.0, -2.0, 0.5).finished();
  EXPECT_EQ(rmse(truth, truth), 0.0);
}

TEST(Metrics, ConstantOffsetGivesUnitRmse) {
  const Vector truth = (Vector(4) << 1.0, -2.0, 0.5, 3.0).finished();
  EXPECT_NEAR(rmse((truth.array() + 1.0).matrix(), truth), 1.0, 1e-15);
}

TEST(Metrics, SingleGaussianPointAtItsMean) {
  const Likelihood lik = Likelihood::gaussian(1e-300);
  const Vector y = Vector::Constant(1, 0.3);
  EXPECT_NEAR(mean_nlpd(lik, y, y, Vector::Ones(1)), 0.5 * std::log(2.0 * std::numbers::pi), 1e-12);
}

TEST(Metrics, ThreePointGaussianFixture) {
  const Likelihood lik = Likelihood::gaussian(0.5);
  const Vector truth = (Vector(3) << 1.0, 2.0, 3.0).finished();
  const Vector mean = (Vector(3) << 1.5, 2.0, 2.0).finished();
  const Vector var = (Vector(3) << 0.5, 1.0, 0.25).finished();
  const double l2pi = std::log(2.0 * std::numbers::pi);
  const double expected_nlpd =
      (0.5 * (l2pi + std::log(1.0) + 0.25 / 1.0) + 0.5 * (l2pi + std::log(1.5)) +
       0.5 * (l2pi + std::log(0.75) + 1.0 / 0.75)) /
      3.0;
  const Metrics m = evaluate_metrics(lik, truth, mean, var);
  EXPECT_NEAR(m.rmse, std::sqrt(1.25 / 3.0), 1e-12);
  EXPECT_NEAR(m.nlpd, expected_nlpd, 1e-12);
  EXPECT_EQ(m.count, 3);
}

TEST(Metrics, SkipsMissingTruth) {
  const Vector truth = (Vector(3) << 1.0, kNaN, 3.0).finished();
  const Vector mean = (Vector(3) << 0.0, 100.0, 3.0).finished();
  EXPECT_NEAR(rmse(mean, truth), std::sqrt(0.5), 1e-15);
  EXPECT_THROW(rmse(mean, Vector::Constant(3, kNaN)), DataError);
  EXPECT_THROW(rmse(mean, Vector::Zero(2)), DimensionError);
}

TEST(Config, DefaultsAndOverrides) {
  const RunConfig d = parse_run_config("{}");
  EXPECT_EQ(d.variant, ModelVariant::kStVgp);
  EXPECT_EQ(d.effective_beta(), 1.0);
  const RunConfig c = parse_run_config(R"({
    "model": "mf-st-svgp",
    "kernel": {"temporal": "matern52", "spatial": "matern12", "variance": 2.0,
               "lengthscale_t": 0.3, "lengthscale_s": [0.1, 0.2]},
    "likelihood": {"family": "poisson", "bin_area": 0.5},
    "inducing": {"count": 4, "optimize": true, "seed": 3},
    "training": {"rho": 0.0, "iterations": 7},
    "filter": {"mode": "parallel", "threads": 2},
    "normalize_inputs": true
  })");
  EXPECT_EQ(c.variant, ModelVariant::kMfStSvgp);
  EXPECT_EQ(c.temporal_family, MaternOrder::kFiveHalves);
  EXPECT_EQ(c.spatial_family, MaternOrder::kHalf);
  EXPECT_EQ(c.likelihood.family, LikelihoodFamily::kPoisson);
  EXPECT_EQ(c.effective_beta(), 0.1);
  EXPECT_EQ(c.inducing_count, 4);
  EXPECT_TRUE(c.optimize_inducing);
  EXPECT_EQ(c.filter, FilterMode::kParallel);
  EXPECT_EQ(c.threads, 2u);
  EXPECT_TRUE(c.model_config().mean_field);
  const Hyperparameters h = c.initial_hypers(2);
  EXPECT_DOUBLE_EQ(h.lengthscale_s(1), 0.2);
  EXPECT_THROW(c.initial_hypers(3), DataError);

  const RunConfig again = parse_run_config(run_config_to_json(c));
  EXPECT_EQ(run_config_to_json(again), run_config_to_json(c));
}

TEST(Config, RejectsInvalidInput) {
  EXPECT_THROW(parse_run_config("{\"colour\": 1}"), DataError);
  EXPECT_THROW(parse_run_config("{\"kernel\": {\"lengthscale\": 1}}"), DataError);
  EXPECT_THROW(parse_run_config("{\"model\": \"gp\"}"), DataError);
  EXPECT_THROW(parse_run_config("{\"training\": {\"beta\": 0}}"), DataError);
  EXPECT_THROW(parse_run_config("{\"training\": {\"rho\": -1}}"), DataError);
  EXPECT_THROW(parse_run_config("{\"inducing\": {\"count\": 3}}"), DataError);
  EXPECT_THROW(parse_run_config("{\"kernel\": {\"temporal\": \"rbf\"}}"), DataError);
  EXPECT_THROW(parse_run_config("{\"likelihood\": {\"noise_variance\": -1}}"), DataError);
  EXPECT_THROW(parse_run_config("[1, 2]"), DataError);
  EXPECT_THROW(parse_run_config("{"), DataError);
}

TEST(Harness, ModelJsonRoundTripPreservesPredictions) {
  for (ModelVariant variant : {ModelVariant::kStVgp, ModelVariant::kStSvgp}) {
    Rng rng(21);
    const GridDataset d = testing::random_gaussian_grid(rng, 8, 4, 1, 0.1);
    RunConfig c;
    c.variant = variant;
    c.likelihood = Likelihood::gaussian(0.2);
    c.lengthscale_t = 0.5;
    c.iterations = 3;
    c.normalize_inputs = true;
    if (is_sparse(variant)) c.inducing_count = 2;
    const FittedModel fitted = run_fit(c, d);
    EXPECT_EQ(fitted.training_state().elbo_trace.size(), 3u);

    const std::string text = model_to_json(fitted);
    const FittedModel loaded = model_from_json(text);
    EXPECT_EQ(model_to_json(loaded), text);

    PredictionQuery q = grid_query(d);
    q.times(0) += 0.013;
    const Prediction a = run_predict(fitted, q);
    const Prediction b = run_predict(loaded, q);
    EXPECT_LE((a.mean - b.mean).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((a.var - b.var).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_THROW(model_from_json("{}"), DataError);
  EXPECT_THROW(model_from_json("not json"), DataError);
}

TEST(Harness, RejectsEmptyAndMismatchedInputs) {
  GridDataset d = parse("t,s1,y\n0,0,nan\n1,0,nan\n");
  EXPECT_THROW(run_fit(RunConfig{}, d), DataError);
  Rng rng(1);
  d = testing::random_gaussian_grid(rng, 4, 3, 1, 0.0);
  RunConfig c;
  c.variant = ModelVariant::kStSvgp;
  c.inducing_points = Matrix::Zero(2, 2);
  c.iterations = 1;
  EXPECT_THROW(run_fit(c, d), DataError);
}

TEST(Harness, GridQueryIsTimeMajor) {
  Rng rng(2);
  const GridDataset d = testing::random_gaussian_grid(rng, 3, 2, 1, 0.0);
  const PredictionQuery q = grid_query(d);
  ASSERT_EQ(q.times.size(), 6);
  EXPECT_EQ(q.times(1), d.times(0));
  EXPECT_EQ(q.times(2), d.times(1));
  EXPECT_EQ(q.sites.row(1), d.sites.row(1));
}

TEST(Harness, IdenticalRunsGiveIdenticalTraces) {
  SynthOptions o;
  o.kind = SynthKind::kLgcpCounts;
  o.num_times = 15;
  o.num_sites = 3;
  const GridDataset d = synthesize(o);
  RunConfig c = parse_run_config(R"({"likelihood": {"family": "poisson"},
                                     "kernel": {"lengthscale_t": 0.2, "lengthscale_s": 0.3},
                                     "training": {"iterations": 5}})");
  const auto a = run_fit(c, d).training_state().elbo_trace;
  const auto b = run_fit(c, d).training_state().elbo_trace;
  EXPECT_EQ(a, b);
}

TEST(Optimizer, AdamFirstStepMovesByLearningRate) {
  Vector x = (Vector(2) << 1.0, -1.0).finished();
  AdamState s;
  s.reset(2);
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  adam_ascent_step(x, (Vector(2) << 3.0, -0.5).finished(), s, cfg);
  EXPECT_NEAR(x(0), 1.1, 1e-8);
  EXPECT_NEAR(x(1), -1.1, 1e-8);
  EXPECT_EQ(s.steps, 1);
}

TEST(Optimizer, AdamClimbsAConcaveObjective) {
  const Vector target = (Vector(3) << 0.5, -1.0, 2.0).finished();
  Vector x = Vector::Zero(3);
  AdamState s;
  s.reset(3);
  AdamConfig cfg;
  cfg.learning_rate = 0.05;
  for (int i = 0; i < 2000; ++i) adam_ascent_step(x, (target - x).eval(), s, cfg);
  EXPECT_LE((x - target).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Optimizer, FiniteDifferenceGradient) {
  const auto f = [](const Vector& v) { return std::sin(v(0)) * v(1) * v(1) + std::exp(v(0)); };
  const Vector x = (Vector(2) << 0.3, 2.5).finished();
  const Vector g = fd_gradient(f, x, 1e-5);
  EXPECT_NEAR(g(0), std::cos(0.3) * 6.25 + std::exp(0.3), 1e-7);
  EXPECT_NEAR(g(1), 2.0 * std::sin(0.3) * 2.5, 1e-7);
  const auto bad = [](const Vector& v) { return v(1) > 1.0 ? kNaN : v(0); };
  try {
    fd_gradient(bad, (Vector(2) << 0.0, 1.0).finished());
    FAIL() << "expected GradientError";
  } catch (const GradientError& e) {
    EXPECT_EQ(e.coordinate(), 1);
  }
}

}  // namespace
}  // namespace stgp
