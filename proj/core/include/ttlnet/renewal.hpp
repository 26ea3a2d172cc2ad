#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ttlnet/phase_type.hpp"
#include "ttlnet/policy.hpp"

namespace ttlnet {

struct Exponential {
  double rate = 1.0;
  friend bool operator==(const Exponential&, const Exponential&) = default;
};

struct Deterministic {
  double value = 1.0;
  friend bool operator==(const Deterministic&, const Deterministic&) = default;
};

struct Erlang {
  std::size_t stages = 1;
  double rate = 1.0;
  friend bool operator==(const Erlang&, const Erlang&) = default;
};

/// Piecewise-linear density on the knots 0, step, 2*step, ...; zero past the
/// last knot. The density is rescaled so its exact integral is 1.
class Tabulated {
 public:
  Tabulated(double step, std::vector<double> density);

  double step() const noexcept { return step_; }
  const std::vector<double>& density() const noexcept { return density_; }
  double support_end() const noexcept { return step_ * static_cast<double>(density_.size() - 1); }

  double pdf(double x) const;
  double cdf(double x) const;
  double mean() const;
  /// Inverse-CDF draw.
  double quantile(double u) const;

  friend bool operator==(const Tabulated& a, const Tabulated& b) {
    return a.step_ == b.step_ && a.density_ == b.density_;
  }

 private:
  double step_;
  std::vector<double> density_;
  std::vector<double> cumulative_;  // CDF at each knot
};

/// Law of an i.i.d. sequence of inter-request times or TTLs.
class RenewalSpec {
 public:
  using Kind = std::variant<Exponential, Deterministic, Erlang, Tabulated>;

  static RenewalSpec exponential(double rate);
  static RenewalSpec deterministic(double value);
  static RenewalSpec erlang(std::size_t stages, double rate);
  /// Integral of the piecewise-linear density must be 1 within 1e-6.
  static RenewalSpec tabulated(double step, std::vector<double> density);

  const Kind& kind() const noexcept { return kind_; }
  bool is_exponential() const noexcept;
  bool is_deterministic() const noexcept;
  /// Exponential rate, or nullopt.
  std::optional<double> exponential_rate() const noexcept;

  double mean() const;
  /// E[e^{-omega X}]. Negative omega is allowed where the transform is finite.
  double laplace(double omega) const;
  /// 1 - E[e^{-omega X}] computed without cancellation.
  double laplace_complement(double omega) const;
  /// P(X <= x).
  double cdf(double x) const;
  /// P(X > x).
  double survival(double x) const;
  /// P(X >= x). Differs from survival() only at an atom.
  double tail(double x) const;
  /// Point beyond which P(X > x) < eps. Infinite support is cut there.
  double upper_bound(double eps = 1e-16) const;
  /// Knots and atoms where the law is not smooth.
  std::vector<double> breakpoints() const;

  double sample(Rng& rng) const;

  /// PH representation. Deterministic values map to an Erlang of the given order.
  PhaseTypeDistribution to_phase_type(std::size_t deterministic_stages = 20) const;

  std::string describe() const;

  friend bool operator==(const RenewalSpec& a, const RenewalSpec& b) { return a.kind_ == b.kind_; }

 private:
  explicit RenewalSpec(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

/// Exponentially tilted law: density e^{-omega x} f(x) / lx.
struct TiltedDistribution {
  RenewalSpec base;
  double omega;
  double lx;
  RenewalSpec tilted;
};

/// Throws DomainError for negative omega.
TiltedDistribution tilt(const RenewalSpec& x, double omega);

struct StoppingPolicy {
  Policy tag = Policy::R;
  RenewalSpec t;
  std::optional<RenewalSpec> t_r;

  static StoppingPolicy r(RenewalSpec t);
  static StoppingPolicy sigma(RenewalSpec t);
  static StoppingPolicy min(RenewalSpec t_sigma, RenewalSpec t_r);
};

enum class Method { ClosedForm, Series, Lattice, Quadrature, MonteCarlo };

std::string_view to_string(Method m) noexcept;

struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
  Method method = Method::ClosedForm;
  std::size_t terms = 0;
};

struct SeriesOptions {
  double tol = 1e-12;
  /// Lattice step; 0 picks mean(X)/200.
  double step = 0.0;
  std::size_t max_terms = 100000;
};

struct MonteCarloOptions {
  std::size_t samples = 1000000;
  std::uint64_t seed = 1;
};

/// E[e^{-omega X} 1{X <= T}].
double psi(const RenewalSpec& x, const RenewalSpec& t, double omega);

/// P(X <= T) and P(X > T), each evaluated directly.
struct Race {
  double le = 0.0;
  double gt = 0.0;
};
Race race(const RenewalSpec& x, const RenewalSpec& t);

/// E[min(X, T)].
double expected_min(const RenewalSpec& x, const RenewalSpec& t);

/// Laplace transform of S_tau under policy R. Throws HypothesisViolation if
/// psi(omega) >= 1.
Estimate transform_r(const RenewalSpec& x, const RenewalSpec& t, double omega);

/// Laplace transform of S_tau under policy Sigma.
Estimate transform_sigma(const RenewalSpec& x, const RenewalSpec& t, double omega,
                         const SeriesOptions& opts = {});

/// Laplace transform of S_tau under min(Sigma, R).
Estimate transform_min(const RenewalSpec& x, const RenewalSpec& t_sigma, const RenewalSpec& t_r,
                       double omega, const MonteCarloOptions& mc = {});

Estimate transform(const RenewalSpec& x, const StoppingPolicy& policy, double omega,
                   const SeriesOptions& opts = {}, const MonteCarloOptions& mc = {});

/// Direct simulation of tau under the policy's stopping rule.
Estimate simulate_stopping_time(const RenewalSpec& x, const StoppingPolicy& policy, Rng& rng,
                                std::size_t samples);

/// Direct simulation of E[e^{-omega S_tau}] under the original measure.
Estimate simulate_stopped_transform(const RenewalSpec& x, const StoppingPolicy& policy,
                                    double omega, Rng& rng, std::size_t samples);

Estimate expected_tau(const RenewalSpec& x, const StoppingPolicy& policy,
                      const SeriesOptions& opts = {}, const MonteCarloOptions& mc = {});

struct HitMiss {
  double hit = 0.0;
  double miss = 0.0;
  /// Standard error of miss (0 unless estimated by simulation).
  double standard_error = 0.0;
  Estimate tau;
};

/// M = 1 / E[tau]. Throws DivergenceError if the TTL never lets a miss happen.
HitMiss hit_miss_renewal(const RenewalSpec& x, const StoppingPolicy& policy,
                         const SeriesOptions& opts = {}, const MonteCarloOptions& mc = {});

Estimate occupancy_renewal(const RenewalSpec& x, const StoppingPolicy& policy,
                           const SeriesOptions& opts = {}, const MonteCarloOptions& mc = {});

/// E[S_tau] = E[tau] E[X].
Estimate expected_stopped_sum(const RenewalSpec& x, const StoppingPolicy& policy,
                              const SeriesOptions& opts = {}, const MonteCarloOptions& mc = {});

}  // namespace ttlnet
