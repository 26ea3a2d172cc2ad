#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace ttlnet {

/// TTL refresh policy. R resets the timer on every request, Sigma only on
/// misses, MinSigmaR evicts at the earlier of one timer of each kind.
enum class Policy { R, Sigma, MinSigmaR };

std::string_view to_string(Policy p) noexcept;

/// Accepts "R", "Sigma", "MinSigmaR" (alias "min").
std::optional<Policy> parse_policy(std::string_view name) noexcept;

}  // namespace ttlnet
