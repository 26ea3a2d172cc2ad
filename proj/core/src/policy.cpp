#include "ttlnet/policy.hpp"

namespace ttlnet {

std::string_view to_string(Policy p) noexcept {
  switch (p) {
    case Policy::R:
      return "R";
    case Policy::Sigma:
      return "Sigma";
    case Policy::MinSigmaR:
      return "MinSigmaR";
  }
  return "?";
}

std::optional<Policy> parse_policy(std::string_view name) noexcept {
  if (name == "R") {
    return Policy::R;
  }
  if (name == "Sigma") {
    return Policy::Sigma;
  }
  if (name == "MinSigmaR" || name == "min") {
    return Policy::MinSigmaR;
  }
  return std::nullopt;
}

}  // namespace ttlnet
