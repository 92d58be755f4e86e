#include "stgp/errors.hpp"

namespace stgp {

namespace {

std::string definiteness_message(const std::string& parameter, std::optional<Index> pivot,
                                 std::optional<Index> step) {
  std::string msg = "matrix '" + parameter + "' is not positive definite";
  if (pivot) msg += " (failing pivot " + std::to_string(*pivot) + ")";
  if (step) msg += " at step " + std::to_string(*step);
  return msg;
}

}  // namespace

DefinitenessError::DefinitenessError(std::string parameter, std::optional<Index> pivot,
                                     std::optional<Index> step)
    : Error(definiteness_message(parameter, pivot, step)),
      parameter_(std::move(parameter)),
      pivot_(pivot),
      step_(step) {}

ParseError::ParseError(const std::string& what, std::size_t line)
    : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

}  // namespace stgp
