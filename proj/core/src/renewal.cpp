#include "ttlnet/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "ttlnet/errors.hpp"

namespace ttlnet {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidationError(std::string(what) + " must be positive and finite");
  }
}

struct ErlangView {
  double k;
  double a;
};

std::optional<ErlangView> as_erlang(const RenewalSpec& s) {
  if (const auto* e = std::get_if<Exponential>(&s.kind())) {
    return ErlangView{1.0, e->rate};
  }
  if (const auto* e = std::get_if<Erlang>(&s.kind())) {
    return ErlangView{static_cast<double>(e->stages), e->rate};
  }
  return std::nullopt;
}

std::optional<double> as_deterministic(const RenewalSpec& s) {
  if (const auto* d = std::get_if<Deterministic>(&s.kind())) {
    return d->value;
  }
  return std::nullopt;
}

double pdf(const RenewalSpec& s, double x) {
  return std::visit(Overloaded{
                        [&](const Exponential& e) { return x < 0 ? 0.0 : e.rate * std::exp(-e.rate * x); },
                        [&](const Erlang& e) {
                          return x < 0 ? 0.0
                                       : e.rate * boost::math::gamma_p_derivative(
                                                      static_cast<double>(e.stages), e.rate * x);
                        },
                        [&](const Tabulated& t) { return t.pdf(x); },
                        [&](const Deterministic&) -> double {
                          throw DomainError("deterministic law has no density");
                        },
                    },
                    s.kind());
}

// Integral of f over [a, b], split at the given cut points.
double integrate(const std::function<double(double)>& f, double a, double b,
                 std::vector<double> cuts) {
  if (!(b > a)) {
    return 0.0;
  }
  cuts.push_back(a);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  double lo = a;
  for (double c : cuts) {
    if (c <= lo) {
      continue;
    }
    const double hi = std::min(c, b);
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 12, 1e-14);
    lo = hi;
    if (lo >= b) {
      break;
    }
  }
  return total;
}

std::vector<double> merged_breakpoints(const RenewalSpec& x, const RenewalSpec& t) {
  auto cuts = x.breakpoints();
  const auto more = t.breakpoints();
  cuts.insert(cuts.end(), more.begin(), more.end());
  return cuts;
}

// Tilt allowing negative omega where the transform stays finite.
TiltedDistribution tilt_any(const RenewalSpec& x, double omega) {
  if (omega == 0.0) {
    return {x, 0.0, 1.0, x};
  }
  return std::visit(
      Overloaded{
          [&](const Exponential& e) -> TiltedDistribution {
            if (!(e.rate + omega > 0.0)) {
              throw DomainError("Laplace transform diverges at omega = " + std::to_string(omega));
            }
            return {x, omega, e.rate / (e.rate + omega), RenewalSpec::exponential(e.rate + omega)};
          },
          [&](const Erlang& e) -> TiltedDistribution {
            if (!(e.rate + omega > 0.0)) {
              throw DomainError("Laplace transform diverges at omega = " + std::to_string(omega));
            }
            return {x, omega, x.laplace(omega), RenewalSpec::erlang(e.stages, e.rate + omega)};
          },
          [&](const Deterministic& d) -> TiltedDistribution {
            return {x, omega, std::exp(-omega * d.value), x};
          },
          [&](const Tabulated& t) -> TiltedDistribution {
            const double lx = x.laplace(omega);
            std::vector<double> dens = t.density();
            double mass = 0.0;
            for (std::size_t i = 0; i < dens.size(); ++i) {
              dens[i] *= std::exp(-omega * t.step() * static_cast<double>(i));
              if (i > 0) mass += 0.5 * t.step() * (dens[i - 1] + dens[i]);
            }
            // Grid renormalization; lx itself is exact for the piecewise-linear density.
            for (auto& d : dens) d /= mass;
            return {x, omega, lx, RenewalSpec::tabulated(t.step(), std::move(dens))};
          },
      },
      x.kind());
}

// h_t = P(X_1 + ... + X_t <= T) for t = 1, 2, ...
class HSequence {
 public:
  HSequence(const RenewalSpec& x, const RenewalSpec& t, const SeriesOptions& opts) : x_(x), t_(t) {
    if (as_deterministic(x) || as_erlang(x)) {
      method_ = Method::Series;
      return;
    }
    method_ = Method::Lattice;
    const double step = opts.step > 0.0 ? opts.step : x.mean() / 200.0;
    const double upper = t.upper_bound();
    const auto n = static_cast<std::size_t>(std::floor(upper / step)) + 2;
    kernel_.resize(n);
    double prev = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double c = x.cdf((static_cast<double>(j) + 0.5) * step);
      kernel_[j] = c - prev;
      prev = c;
    }
    weights_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      weights_[j] = t.tail(static_cast<double>(j) * step);
    }
  }

  Method method() const { return method_; }

  double next() {
    ++index_;
    const double n = static_cast<double>(index_);
    if (auto d = as_deterministic(x_)) {
      return t_.tail(n * *d);
    }
    if (auto e = as_erlang(x_)) {
      const double k = e->k * n;
      if (auto e_t = as_deterministic(t_)) {
        return boost::math::gamma_p(k, e->a * *e_t);
      }
      if (auto et = as_erlang(t_)) {
        // P(Erlang(k, a) <= Erlang(j, b)): k a-events before j b-events.
        const double p = et->a / (e->a + et->a);
        return boost::math::ibetac(et->k, k, p);
      }
      const double a = e->a;
      const auto f = [&](double y) { return pdf(t_, y) * boost::math::gamma_p(k, a * y); };
      return integrate(f, 0.0, t_.upper_bound(), t_.breakpoints());
    }
    dist_ = dist_.empty() ? kernel_ : convolve(dist_, kernel_);
    double h = 0.0;
    for (std::size_t j = 0; j < dist_.size(); ++j) {
      h += dist_[j] * weights_[j];
    }
    return h;
  }

 private:
  static std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == 0.0) {
        continue;
      }
      for (std::size_t j = 0; i + j < out.size(); ++j) {
        out[i + j] += a[i] * b[j];
      }
    }
    return out;
  }

  const RenewalSpec& x_;
  const RenewalSpec& t_;
  Method method_;
  std::size_t index_ = 0;
  std::vector<double> kernel_;
  std::vector<double> weights_;
  std::vector<double> dist_;
};

struct Cycle {
  std::size_t tau = 0;
  double s_tau = 0.0;
  double occupied = 0.0;
};

// One miss-to-miss cycle under the policy's stopping rule. x drives the
// inter-request times; TTLs are always drawn from their own laws.
Cycle run_cycle(const RenewalSpec& x, const StoppingPolicy& policy, Rng& rng) {
  Cycle c;
  switch (policy.tag) {
    case Policy::R:
      for (;;) {
        const double xs = x.sample(rng);
        const double ts = policy.t.sample(rng);
        ++c.tau;
        c.s_tau += xs;
        c.occupied += std::min(xs, ts);
        if (xs > ts) {
          return c;
        }
      }
    case Policy::Sigma: {
      const double ts = policy.t.sample(rng);
      for (;;) {
        c.s_tau += x.sample(rng);
        ++c.tau;
        if (c.s_tau > ts) {
          c.occupied = ts;
          return c;
        }
      }
    }
    case Policy::MinSigmaR: {
      const double ts = policy.t.sample(rng);
      double r_sum = 0.0;
      for (;;) {
        const double xs = x.sample(rng);
        const double tr = policy.t_r->sample(rng);
        ++c.tau;
        c.s_tau += xs;
        r_sum += std::min(xs, tr);
        if (c.s_tau > ts || xs > tr) {
          c.occupied = std::min(r_sum, ts);
          return c;
        }
      }
    }
  }
  return c;
}

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  double standard_error() const {
    return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : kInf;
  }
};

void require_samples(std::size_t samples) {
  if (samples < 2) {
    throw ValidationError("Monte Carlo needs at least 2 samples");
  }
}

void require_policy(const StoppingPolicy& p) {
  if ((p.tag == Policy::MinSigmaR) != p.t_r.has_value()) {
    throw ValidationError("min(Sigma,R) carries exactly two TTL laws; R and Sigma carry one");
  }
}

bool all_exponential(const RenewalSpec& x, const StoppingPolicy& p) {
  return x.is_exponential() && p.t.is_exponential() && (!p.t_r || p.t_r->is_exponential());
}

}  // namespace

Tabulated::Tabulated(double step, std::vector<double> density) : step_(step), density_(std::move(density)) {
  require_positive(step_, "tabulated grid step");
  if (density_.size() < 2) {
    throw ValidationError("tabulated density needs at least two knots");
  }
  for (double v : density_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ValidationError("tabulated density values must be non-negative and finite");
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < density_.size(); ++i) {
    total += 0.5 * step_ * (density_[i] + density_[i + 1]);
  }
  if (!(total > 0.0)) {
    throw ValidationError("tabulated density has zero mass");
  }
  for (auto& v : density_) {
    v /= total;
  }
  cumulative_.resize(density_.size());
  cumulative_[0] = 0.0;
  for (std::size_t i = 0; i + 1 < density_.size(); ++i) {
    cumulative_[i + 1] = cumulative_[i] + 0.5 * step_ * (density_[i] + density_[i + 1]);
  }
  cumulative_.back() = 1.0;
}

double Tabulated::pdf(double x) const {
  if (x < 0.0 || x > support_end()) {
    return 0.0;
  }
  const auto i = std::min(static_cast<std::size_t>(x / step_), density_.size() - 2);
  const double s = x - step_ * static_cast<double>(i);
  return density_[i] + (density_[i + 1] - density_[i]) * s / step_;
}

double Tabulated::cdf(double x) const {
  if (x <= 0.0) {
    return 0.0;
  }
  if (x >= support_end()) {
    return 1.0;
  }
  const auto i = std::min(static_cast<std::size_t>(x / step_), density_.size() - 2);
  const double s = x - step_ * static_cast<double>(i);
  const double slope = (density_[i + 1] - density_[i]) / step_;
  return std::min(1.0, cumulative_[i] + density_[i] * s + 0.5 * slope * s * s);
}

double Tabulated::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < density_.size(); ++i) {
    const double x0 = step_ * static_cast<double>(i);
    m += x0 * step_ * 0.5 * (density_[i] + density_[i + 1]) +
         step_ * step_ * (density_[i] / 6.0 + density_[i + 1] / 3.0);
  }
  return m;
}

double Tabulated::quantile(double u) const {
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) {
    return support_end();
  }
  const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - cumulative_.begin() - 1, 0));
  const double r = u - cumulative_[i];
  const double f0 = density_[i];
  const double slope = (density_[i + 1] - density_[i]) / step_;
  const double disc = std::sqrt(std::max(0.0, f0 * f0 + 2.0 * slope * r));
  const double denom = f0 + disc;
  const double s = denom > 0.0 ? 2.0 * r / denom : 0.0;
  return step_ * static_cast<double>(i) + std::min(s, step_);
}

RenewalSpec RenewalSpec::exponential(double rate) {
  require_positive(rate, "exponential rate");
  return RenewalSpec(Exponential{rate});
}

RenewalSpec RenewalSpec::deterministic(double value) {
  require_positive(value, "deterministic value");
  return RenewalSpec(Deterministic{value});
}

RenewalSpec RenewalSpec::erlang(std::size_t stages, double rate) {
  require_positive(rate, "Erlang rate");
  if (stages == 0) {
    throw ValidationError("Erlang needs at least one stage");
  }
  return RenewalSpec(Erlang{stages, rate});
}

RenewalSpec RenewalSpec::tabulated(double step, std::vector<double> density) {
  require_positive(step, "tabulated grid step");
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < density.size(); ++i) {
    total += 0.5 * step * (density[i] + density[i + 1]);
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw ValidationError("tabulated density integrates to " + std::to_string(total) + ", not 1");
  }
  return RenewalSpec(Tabulated(step, std::move(density)));
}

bool RenewalSpec::is_exponential() const noexcept { return std::holds_alternative<Exponential>(kind_); }

bool RenewalSpec::is_deterministic() const noexcept {
  return std::holds_alternative<Deterministic>(kind_);
}

std::optional<double> RenewalSpec::exponential_rate() const noexcept {
  if (const auto* e = std::get_if<Exponential>(&kind_)) {
    return e->rate;
  }
  return std::nullopt;
}

double RenewalSpec::mean() const {
  return std::visit(Overloaded{
                        [](const Exponential& e) { return 1.0 / e.rate; },
                        [](const Deterministic& d) { return d.value; },
                        [](const Erlang& e) { return static_cast<double>(e.stages) / e.rate; },
                        [](const Tabulated& t) { return t.mean(); },
                    },
                    kind_);
}

double RenewalSpec::laplace(double omega) const {
  if (omega == 0.0) {
    return 1.0;
  }
  return std::visit(
      Overloaded{
          [&](const Exponential& e) {
            if (!(e.rate + omega > 0.0)) {
              throw DomainError("Laplace transform diverges");
            }
            return e.rate / (e.rate + omega);
          },
          [&](const Deterministic& d) { return std::exp(-omega * d.value); },
          [&](const Erlang& e) {
            if (!(e.rate + omega > 0.0)) {
              throw DomainError("Laplace transform diverges");
            }
            return std::pow(e.rate / (e.rate + omega), static_cast<double>(e.stages));
          },
          [&](const Tabulated& t) {
            double total = 0.0;
            const auto& f = t.density();
            for (std::size_t i = 0; i + 1 < f.size(); ++i) {
              const double x0 = t.step() * static_cast<double>(i);
              const auto g = [&](double s) {
                return (f[i] + (f[i + 1] - f[i]) * s / t.step()) * std::exp(-omega * (x0 + s));
              };
              total += boost::math::quadrature::gauss<double, 10>::integrate(g, 0.0, t.step());
            }
            return total;
          },
      },
      kind_);
}

double RenewalSpec::laplace_complement(double omega) const {
  if (omega == 0.0) {
    return 0.0;
  }
  return std::visit(Overloaded{
                        [&](const Exponential& e) { return omega / (e.rate + omega); },
                        [&](const Deterministic& d) { return -std::expm1(-omega * d.value); },
                        [&](const Erlang& e) {
                          return -std::expm1(-static_cast<double>(e.stages) *
                                             std::log1p(omega / e.rate));
                        },
                        [&](const Tabulated&) { return 1.0 - laplace(omega); },
                    },
                    kind_);
}

double RenewalSpec::cdf(double x) const {
  return std::visit(Overloaded{
                        [&](const Exponential& e) { return x <= 0 ? 0.0 : -std::expm1(-e.rate * x); },
                        [&](const Deterministic& d) { return x >= d.value ? 1.0 : 0.0; },
                        [&](const Erlang& e) {
                          return x <= 0 ? 0.0
                                        : boost::math::gamma_p(static_cast<double>(e.stages), e.rate * x);
                        },
                        [&](const Tabulated& t) { return t.cdf(x); },
                    },
                    kind_);
}

double RenewalSpec::survival(double x) const {
  return std::visit(Overloaded{
                        [&](const Exponential& e) { return x <= 0 ? 1.0 : std::exp(-e.rate * x); },
                        [&](const Deterministic& d) { return x < d.value ? 1.0 : 0.0; },
                        [&](const Erlang& e) {
                          return x <= 0 ? 1.0
                                        : boost::math::gamma_q(static_cast<double>(e.stages), e.rate * x);
                        },
                        [&](const Tabulated& t) { return 1.0 - t.cdf(x); },
                    },
                    kind_);
}

double RenewalSpec::tail(double x) const {
  if (const auto* d = std::get_if<Deterministic>(&kind_)) {
    return x <= d->value ? 1.0 : 0.0;
  }
  return survival(x);
}

double RenewalSpec::upper_bound(double eps) const {
  return std::visit(Overloaded{
                        [&](const Exponential& e) { return -std::log(eps) / e.rate; },
                        [&](const Deterministic& d) { return d.value; },
                        [&](const Erlang& e) {
                          return boost::math::gamma_q_inv(static_cast<double>(e.stages), eps) / e.rate;
                        },
                        [&](const Tabulated& t) { return t.support_end(); },
                    },
                    kind_);
}

std::vector<double> RenewalSpec::breakpoints() const {
  if (const auto* d = std::get_if<Deterministic>(&kind_)) {
    return {d->value};
  }
  if (const auto* t = std::get_if<Tabulated>(&kind_)) {
    std::vector<double> knots(t->density().size());
    for (std::size_t i = 0; i < knots.size(); ++i) {
      knots[i] = t->step() * static_cast<double>(i);
    }
    return knots;
  }
  return {};
}

double RenewalSpec::sample(Rng& rng) const {
  return std::visit(
      Overloaded{
          [&](const Exponential& e) { return std::exponential_distribution<double>(e.rate)(rng); },
          [&](const Deterministic& d) { return d.value; },
          [&](const Erlang& e) {
            return std::gamma_distribution<double>(static_cast<double>(e.stages), 1.0 / e.rate)(rng);
          },
          [&](const Tabulated& t) { return t.quantile(std::uniform_real_distribution<double>()(rng)); },
      },
      kind_);
}

PhaseTypeDistribution RenewalSpec::to_phase_type(std::size_t deterministic_stages) const {
  return std::visit(
      Overloaded{
          [](const Exponential& e) { return PhaseTypeDistribution::exponential(e.rate); },
          [&](const Deterministic& d) {
            const auto k = static_cast<double>(deterministic_stages);
            return PhaseTypeDistribution::erlang(deterministic_stages, k / d.value);
          },
          [](const Erlang& e) { return PhaseTypeDistribution::erlang(e.stages, e.rate); },
          [](const Tabulated&) -> PhaseTypeDistribution {
            throw ValidationError("tabulated law has no phase-type representation");
          },
      },
      kind_);
}

std::string RenewalSpec::describe() const {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const Exponential& e) { out << "exp(" << e.rate << ")"; },
                 [&](const Deterministic& d) { out << "det(" << d.value << ")"; },
                 [&](const Erlang& e) { out << "erlang(" << e.stages << "," << e.rate << ")"; },
                 [&](const Tabulated& t) {
                   out << "tabulated(step=" << t.step() << ",knots=" << t.density().size() << ")";
                 },
             },
             kind_);
  return out.str();
}

TiltedDistribution tilt(const RenewalSpec& x, double omega) {
  if (!(omega >= 0.0)) {
    throw DomainError("tilt requires omega >= 0");
  }
  return tilt_any(x, omega);
}

StoppingPolicy StoppingPolicy::r(RenewalSpec t) { return {Policy::R, std::move(t), std::nullopt}; }

StoppingPolicy StoppingPolicy::sigma(RenewalSpec t) {
  return {Policy::Sigma, std::move(t), std::nullopt};
}

StoppingPolicy StoppingPolicy::min(RenewalSpec t_sigma, RenewalSpec t_r) {
  return {Policy::MinSigmaR, std::move(t_sigma), std::move(t_r)};
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::ClosedForm:
      return "closed_form";
    case Method::Series:
      return "series";
    case Method::Lattice:
      return "lattice";
    case Method::Quadrature:
      return "quadrature";
    case Method::MonteCarlo:
      return "monte_carlo";
  }
  return "?";
}

Race race(const RenewalSpec& x, const RenewalSpec& t) {
  if (auto d = as_deterministic(x)) {
    const double le = t.tail(*d);
    return {le, t.is_deterministic() ? 1.0 - le : t.cdf(*d)};
  }
  if (auto e = as_deterministic(t)) {
    return {x.cdf(*e), x.survival(*e)};
  }
  const auto ex = as_erlang(x);
  const auto et = as_erlang(t);
  if (ex && et) {
    if (ex->k == 1.0 && et->k == 1.0) {
      const double s = ex->a + et->a;
      return {ex->a / s, et->a / s};
    }
    // T < X iff j T-events happen before k X-events.
    const double p = et->a / (ex->a + et->a);
    return {boost::math::ibetac(et->k, ex->k, p), boost::math::ibeta(et->k, ex->k, p)};
  }
  const auto cuts = merged_breakpoints(x, t);
  const double upper = std::min(x.upper_bound(), t.upper_bound());
  const double le = integrate([&](double y) { return pdf(x, y) * t.tail(y); }, 0.0, upper, cuts);
  const double gt_inside = integrate([&](double y) { return pdf(x, y) * t.cdf(y); }, 0.0, upper, cuts);
  return {le, gt_inside + x.survival(upper)};
}

double psi(const RenewalSpec& x, const RenewalSpec& t, double omega) {
  const auto tx = tilt_any(x, omega);
  return tx.lx * race(tx.tilted, t).le;
}

double expected_min(const RenewalSpec& x, const RenewalSpec& t) {
  if (auto r = x.exponential_rate()) {
    return t.laplace_complement(*r) / *r;
  }
  if (auto r = t.exponential_rate()) {
    return x.laplace_complement(*r) / *r;
  }
  const auto dx = as_deterministic(x);
  const auto dt = as_deterministic(t);
  if (dx && dt) {
    return std::min(*dx, *dt);
  }
  if (dx || dt) {
    const double d = dx ? *dx : *dt;
    const RenewalSpec& other = dx ? t : x;
    if (auto e = as_erlang(other)) {
      return e->k / e->a * boost::math::gamma_p(e->k + 1.0, e->a * d) +
             d * boost::math::gamma_q(e->k, e->a * d);
    }
    return integrate([&](double y) { return other.survival(y); }, 0.0, d, other.breakpoints());
  }
  const double upper = std::min(x.upper_bound(), t.upper_bound());
  return integrate([&](double y) { return x.survival(y) * t.survival(y); }, 0.0, upper,
                   merged_breakpoints(x, t));
}

Estimate transform_r(const RenewalSpec& x, const RenewalSpec& t, double omega) {
  const auto tx = tilt_any(x, omega);
  const auto r = race(tx.tilted, t);
  const double psi_value = tx.lx * r.le;
  if (!(r.gt > 0.0) || psi_value >= 1.0) {
    throw HypothesisViolation("psi(omega) = " + std::to_string(psi_value) +
                              " >= 1; the TTL never expires before a request");
  }
  const double head = tx.lx * r.gt;
  Estimate e;
  e.value = head / (x.laplace_complement(omega) + head);
  const bool exact = as_erlang(x) || as_deterministic(x) || as_erlang(t) || as_deterministic(t);
  e.method = exact ? Method::ClosedForm : Method::Quadrature;
  return e;
}

Estimate transform_sigma(const RenewalSpec& x, const RenewalSpec& t, double omega,
                         const SeriesOptions& opts) {
  if (!(opts.tol > 0.0)) {
    throw ValidationError("series tolerance must be positive");
  }
  Estimate e;
  if (auto lambda = x.exponential_rate()) {
    // N(T) of the tilted Poisson stream is mixed-Poisson; its PGF collapses
    // to the Laplace transform of T.
    e.value = x.laplace(omega) * t.laplace(omega);
    return e;
  }
  if (auto mu = t.exponential_rate()) {
    const double l2 = x.laplace(omega + *mu);
    e.value = (x.laplace(omega) - l2) / (1.0 - l2);
    return e;
  }
  if (omega == 0.0) {
    e.value = 1.0;
    return e;
  }
  const auto tx = tilt_any(x, omega);
  HSequence h(tx.tilted, t, opts);
  e.method = h.method();
  double h_prev = 1.0;
  double weight = 1.0;
  double sum = 0.0;
  for (std::size_t n = 1; n <= opts.max_terms; ++n) {
    weight *= tx.lx;
    const double h_n = h.next();
    sum += weight * (h_prev - h_n);
    if (weight * tx.lx * h_n < opts.tol) {
      e.value = sum;
      e.terms = n;
      return e;
    }
    h_prev = h_n;
  }
  throw ConvergenceError("Sigma transform series did not converge within " +
                         std::to_string(opts.max_terms) + " terms");
}

Estimate transform_min(const RenewalSpec& x, const RenewalSpec& t_sigma, const RenewalSpec& t_r,
                       double omega, const MonteCarloOptions& mc) {
  Estimate e;
  if (x.is_exponential() && t_sigma.is_exponential() && t_r.is_exponential()) {
    const double nu = *t_sigma.exponential_rate() + *t_r.exponential_rate();
    e.value = x.laplace(omega) * nu / (nu + omega);
    return e;
  }
  if (omega == 0.0) {
    e.value = 1.0;
    return e;
  }
  require_samples(mc.samples);
  const auto tx = tilt_any(x, omega);
  const auto policy = StoppingPolicy::min(t_sigma, t_r);
  Rng rng(mc.seed);
  Moments m;
  for (std::size_t i = 0; i < mc.samples; ++i) {
    const auto c = run_cycle(tx.tilted, policy, rng);
    m.add(std::pow(tx.lx, static_cast<double>(c.tau)));
  }
  e.value = m.mean;
  e.standard_error = m.standard_error();
  e.method = Method::MonteCarlo;
  e.terms = mc.samples;
  return e;
}

Estimate transform(const RenewalSpec& x, const StoppingPolicy& policy, double omega,
                   const SeriesOptions& opts, const MonteCarloOptions& mc) {
  require_policy(policy);
  switch (policy.tag) {
    case Policy::R:
      return transform_r(x, policy.t, omega);
    case Policy::Sigma:
      return transform_sigma(x, policy.t, omega, opts);
    case Policy::MinSigmaR:
      return transform_min(x, policy.t, *policy.t_r, omega, mc);
  }
  return {};
}

Estimate simulate_stopping_time(const RenewalSpec& x, const StoppingPolicy& policy, Rng& rng,
                                std::size_t samples) {
  require_policy(policy);
  require_samples(samples);
  Moments m;
  for (std::size_t i = 0; i < samples; ++i) {
    m.add(static_cast<double>(run_cycle(x, policy, rng).tau));
  }
  return {m.mean, m.standard_error(), Method::MonteCarlo, samples};
}

Estimate simulate_stopped_transform(const RenewalSpec& x, const StoppingPolicy& policy,
                                    double omega, Rng& rng, std::size_t samples) {
  require_policy(policy);
  require_samples(samples);
  Moments m;
  for (std::size_t i = 0; i < samples; ++i) {
    m.add(std::exp(-omega * run_cycle(x, policy, rng).s_tau));
  }
  return {m.mean, m.standard_error(), Method::MonteCarlo, samples};
}

Estimate expected_tau(const RenewalSpec& x, const StoppingPolicy& policy, const SeriesOptions& opts,
                      const MonteCarloOptions& mc) {
  require_policy(policy);
  Estimate e;
  switch (policy.tag) {
    case Policy::R: {
      const auto r = race(x, policy.t);
      if (!(r.gt > 0.0)) {
        throw DivergenceError("P(X > T) = 0 under policy R; misses never occur");
      }
      e.value = 1.0 / r.gt;
      return e;
    }
    case Policy::Sigma: {
      if (auto lambda = x.exponential_rate()) {
        e.value = 1.0 + *lambda * policy.t.mean();
        return e;
      }
      if (auto mu = policy.t.exponential_rate()) {
        e.value = 1.0 / x.laplace_complement(*mu);
        return e;
      }
      HSequence h(x, policy.t, opts);
      e.method = h.method();
      double sum = 1.0;
      double h_prev = 1.0;
      for (std::size_t n = 1; n <= opts.max_terms; ++n) {
        const double h_n = h.next();
        sum += h_n;
        const double ratio = h_prev > 0.0 ? h_n / h_prev : 0.0;
        if (h_n == 0.0 || (ratio < 1.0 && h_n / (1.0 - ratio) < opts.tol)) {
          e.value = sum;
          e.terms = n;
          return e;
        }
        h_prev = h_n;
      }
      throw ConvergenceError("E[tau] series did not converge within " +
                             std::to_string(opts.max_terms) + " terms");
    }
    case Policy::MinSigmaR: {
      if (all_exponential(x, policy)) {
        const double nu = *policy.t.exponential_rate() + *policy.t_r->exponential_rate();
        e.value = (*x.exponential_rate() + nu) / nu;
        return e;
      }
      Rng rng(mc.seed);
      return simulate_stopping_time(x, policy, rng, mc.samples);
    }
  }
  return e;
}

HitMiss hit_miss_renewal(const RenewalSpec& x, const StoppingPolicy& policy, const SeriesOptions& opts,
                         const MonteCarloOptions& mc) {
  require_policy(policy);
  HitMiss hm;
  if (policy.tag == Policy::R) {
    const auto r = race(x, policy.t);
    if (!(r.gt > 0.0)) {
      throw DivergenceError("P(X > T) = 0 under policy R; misses never occur");
    }
    hm.hit = r.le;
    hm.miss = r.gt;
    hm.tau = {1.0 / r.gt, 0.0, Method::ClosedForm, 0};
    return hm;
  }
  hm.tau = expected_tau(x, policy, opts, mc);
  if (!std::isfinite(hm.tau.value)) {
    throw DivergenceError("E[tau] is infinite");
  }
  hm.miss = 1.0 / hm.tau.value;
  hm.hit = 1.0 - hm.miss;
  hm.standard_error = hm.tau.standard_error / (hm.tau.value * hm.tau.value);
  return hm;
}

Estimate occupancy_renewal(const RenewalSpec& x, const StoppingPolicy& policy, const SeriesOptions& opts,
                           const MonteCarloOptions& mc) {
  require_policy(policy);
  Estimate e;
  switch (policy.tag) {
    case Policy::R: {
      e.value = expected_min(x, policy.t) / x.mean();
      const bool exact = x.is_exponential() || policy.t.is_exponential() ||
                         ((x.is_deterministic() || policy.t.is_deterministic()) &&
                          (as_erlang(x) || as_erlang(policy.t) ||
                           (x.is_deterministic() && policy.t.is_deterministic())));
      e.method = exact ? Method::ClosedForm : Method::Quadrature;
      return e;
    }
    case Policy::Sigma: {
      const auto tau = expected_tau(x, policy, opts, mc);
      e.value = policy.t.mean() / (tau.value * x.mean());
      e.standard_error = e.value * tau.standard_error / tau.value;
      e.method = tau.method;
      e.terms = tau.terms;
      return e;
    }
    case Policy::MinSigmaR: {
      if (all_exponential(x, policy)) {
        const double lambda = *x.exponential_rate();
        e.value = lambda / (lambda + *policy.t.exponential_rate() + *policy.t_r->exponential_rate());
        return e;
      }
      require_samples(mc.samples);
      Rng rng(mc.seed);
      double sum_a = 0.0;
      double sum_b = 0.0;
      std::vector<std::pair<double, double>> cycles;
      cycles.reserve(mc.samples);
      for (std::size_t i = 0; i < mc.samples; ++i) {
        const auto c = run_cycle(x, policy, rng);
        sum_a += c.occupied;
        sum_b += c.s_tau;
        cycles.emplace_back(c.occupied, c.s_tau);
      }
      const double ratio = sum_a / sum_b;
      const double n = static_cast<double>(mc.samples);
      const double mean_b = sum_b / n;
      double var = 0.0;
      for (const auto& [a, b] : cycles) {
        const double d = a - ratio * b;
        var += d * d;
      }
      var /= (n - 1.0);
      e.value = ratio;
      e.standard_error = std::sqrt(var / n) / mean_b;
      e.method = Method::MonteCarlo;
      e.terms = mc.samples;
      return e;
    }
  }
  return e;
}

Estimate expected_stopped_sum(const RenewalSpec& x, const StoppingPolicy& policy, const SeriesOptions& opts,
                              const MonteCarloOptions& mc) {
  auto tau = expected_tau(x, policy, opts, mc);
  if (!std::isfinite(tau.value)) {
    throw DivergenceError("E[tau] is infinite");
  }
  const double m = x.mean();
  tau.value *= m;
  tau.standard_error *= m;
  return tau;
}

}  // namespace ttlnet
