#pragma once

// Convex/concave split potentials. Every potential type exposes the same
// surface (see the SplitPotential concept) so that the time stepper and the
// steady-state solver are templates over it.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nlch/nonlocal.hpp"
#include "nlch/types.hpp"

namespace nlch {

template <class P>
concept SplitPotential = requires(const P& p, double s, double a, double v) {
  { p.beta(s) } -> std::convertible_to<double>;
  { p.beta_prime(s) } -> std::convertible_to<double>;
  { p.beta_hat(s) } -> std::convertible_to<double>;
  { p.pi(s) } -> std::convertible_to<double>;
  { p.pi_prime(s) } -> std::convertible_to<double>;
  { p.pi_hat(s) } -> std::convertible_to<double>;
  // unique s with a*s + beta(s) = v, for a >= 0
  { p.solve_convex(a, v) } -> std::convertible_to<double>;
  { P::singular } -> std::convertible_to<bool>;
};

namespace detail {

/// Root of c1*x + c2*(theta/2)*ln((1+x)/(1-x)) = v on (-1, 1); c1 >= 0, c2*theta > 0.
/// Safeguarded Newton: every Newton point outside the current bracket is
/// replaced by bisection, so the iteration cannot leave (-1, 1).
inline double solve_log_monotone(double c1, double c2, double theta, double v) {
  if (v == 0.0) return 0.0;
  if (!std::isfinite(v)) throw SolverError("solve_log_monotone: non-finite right-hand side");
  const double k = c2 * theta;
  auto f = [&](double x) { return c1 * x + 0.5 * k * (std::log1p(x) - std::log1p(-x)) - v; };
  auto df = [&](double x) { return c1 + k / ((1.0 - x) * (1.0 + x)); };
  double lo = -1.0;
  double hi = 1.0;
  double x = std::tanh(v / (c1 + k));
  for (int it = 0; it < 300; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (fx > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    double next = x - fx / df(x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x || std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x) ||
        hi - lo <= 4.0 * std::numeric_limits<double>::epsilon()) {
      return next;
    }
    x = next;
  }
  std::ostringstream os;
  os << "solve_log_monotone did not converge for v=" << v;
  throw SolverError(os.str());
}

/// Root of c1*b + c2*tanh(b/theta) = v; c1 > 0, c2 >= 0. The root lies in
/// [(v - c2)/c1, (v + c2)/c1]; Newton steps leaving the bracket are bisected.
inline double solve_tanh_monotone(double c1, double c2, double theta, double v) {
  if (v == 0.0) return 0.0;
  if (!std::isfinite(v)) throw SolverError("solve_tanh_monotone: non-finite right-hand side");
  auto f = [&](double b) { return c1 * b + c2 * std::tanh(b / theta) - v; };
  auto df = [&](double b) {
    const double c = std::cosh(b / theta);
    return c1 + c2 / (theta * c * c);
  };
  double lo = (v - c2) / c1;
  double hi = (v + c2) / c1;
  double x = v / (c1 + c2 / theta);
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  for (int it = 0; it < 300; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (fx > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    double next = x - fx / df(x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x || std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x) ||
        hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
      return next;
    }
    x = next;
  }
  std::ostringstream os;
  os << "solve_tanh_monotone did not converge for v=" << v;
  throw SolverError(os.str());
}

}  // namespace detail

/// Logarithmic potential: beta_hat(s) = (Theta/2)[(1+s)ln(1+s) + (1-s)ln(1-s)],
/// pi_hat(s) = -Theta0 s^2 / 2. Bulk and boundary share the same functions.
struct LogPotential {
  static constexpr bool singular = true;
  double theta = 1.0;
  double theta0 = 1.2;

  static void check_open(double s, const char* fn) {
    if (!(std::abs(s) < 1.0)) {
      throw DomainError(std::string(fn) + ": argument outside (-1, 1)", s);
    }
  }

  double beta(double s) const {
    check_open(s, "beta");
    return 0.5 * theta * (std::log1p(s) - std::log1p(-s));
  }
  double beta_prime(double s) const {
    check_open(s, "beta_prime");
    return theta / ((1.0 - s) * (1.0 + s));
  }
  double beta_hat(double s) const {
    if (!(std::abs(s) <= 1.0)) throw DomainError("beta_hat: argument outside [-1, 1]", s);
    auto xlogx = [](double x) { return x == 0.0 ? 0.0 : x * std::log(x); };
    return 0.5 * theta * (xlogx(1.0 + s) + xlogx(1.0 - s));
  }
  double pi(double s) const { return -theta0 * s; }
  double pi_prime(double) const { return -theta0; }
  double pi_hat(double s) const { return -0.5 * theta0 * s * s; }

  /// Lower bound of beta'.
  double alpha() const { return theta; }
  /// Lipschitz constant of pi (gamma_1 = gamma_2).
  double gamma() const { return theta0; }

  double solve_convex(double a, double v) const { return detail::solve_log_monotone(a, 1.0, theta, v); }

  bool operator==(const LogPotential&) const = default;

  void validate() const {
    if (!(theta > 0.0)) throw ConfigError("potential.theta must be positive");
    if (!(theta0 > 0.0)) throw ConfigError("potential.theta0 must be positive");
  }
};

/// Regular double well s^4/4 - Theta0 s^2/2; only used to smoke-test solvers.
struct QuarticPotential {
  static constexpr bool singular = false;
  double theta0 = 1.0;

  double beta(double s) const { return s * s * s; }
  double beta_prime(double s) const { return 3.0 * s * s; }
  double beta_hat(double s) const { return 0.25 * s * s * s * s; }
  double pi(double s) const { return -theta0 * s; }
  double pi_prime(double) const { return -theta0; }
  double pi_hat(double s) const { return -0.5 * theta0 * s * s; }

  double solve_convex(double a, double v) const {
    // a*s + s^3 is strictly increasing; Newton from the cube-root side converges monotonically
    if (v == 0.0) return 0.0;
    double x = std::cbrt(v);
    if (a > 0.0 && std::abs(v / a) < std::abs(x)) x = v / a;
    for (int it = 0; it < 200; ++it) {
      const double fx = a * x + x * x * x - v;
      const double dx = fx / (a + 3.0 * x * x);
      x -= dx;
      const double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x));
      if (fx == 0.0 || std::abs(dx) <= tol) return x;
    }
    throw SolverError("QuarticPotential::solve_convex did not converge");
  }
};

/// Yosida regularisation of the logarithmic potential. R_eps(s) solves
/// R + eps*beta(R) = s; beta_eps(s) = (s - R_eps(s))/eps = beta(R_eps(s)).
/// Everything is parametrised by b = beta_eps(s), the root of
/// eps*b + tanh(b/Theta) = s, which stays well conditioned when R_eps(s)
/// rounds to +-1 (|s| large).
struct YosidaLogPotential {
  static constexpr bool singular = false;
  LogPotential base;
  double epsilon = 1e-2;

  double resolvent(double s) const { return std::tanh(beta(s) / base.theta); }

  double beta(double s) const { return detail::solve_tanh_monotone(epsilon, 1.0, base.theta, s); }
  /// beta'(R) = Theta cosh^2(b/Theta), so beta_eps' = 1/(eps + sech^2(b/Theta)/Theta).
  double beta_prime(double s) const {
    const double c = std::cosh(beta(s) / base.theta);
    return 1.0 / (epsilon + 1.0 / (base.theta * c * c));
  }
  /// Moreau envelope: beta_hat(R) + (eps/2) beta_eps(s)^2.
  double beta_hat(double s) const {
    const double b = beta(s);
    return base.beta_hat(std::tanh(b / base.theta)) + 0.5 * epsilon * b * b;
  }
  double pi(double s) const { return base.pi(s); }
  double pi_prime(double s) const { return base.pi_prime(s); }
  double pi_hat(double s) const { return base.pi_hat(s); }

  double solve_convex(double a, double v) const {
    // s = tanh(b/Theta) + eps*b, so a*s + b = v reads (1 + a*eps) b + a tanh(b/Theta) = v
    const double b = detail::solve_tanh_monotone(1.0 + a * epsilon, a, base.theta, v);
    return std::tanh(b / base.theta) + epsilon * b;
  }
};

/// beta_eps evaluated directly from its resolvent definition.
inline double yosida_beta(double s, const YosidaLogPotential& y) { return (s - y.resolvent(s)) / y.epsilon; }

/// Upper bound for the Yosida parameter:
/// min{1/(2|J|_{L1} + 2 gamma + 1), 1/(2|K|_{L1} + 2 gamma + 1)}, with the kernel
/// L1 norms over the domain taken as a^* and a^(circled *).
inline double epsilon_star(const LogPotential& pot, const KernelPair& kp) {
  const double g = pot.gamma();
  return std::min(1.0 / (2.0 * kp.constants.a_upper + 2.0 * g + 1.0),
                  1.0 / (2.0 * kp.constants.a_upper_surf + 2.0 * g + 1.0));
}

struct AssumptionClause {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionClause> clauses;
  double c_star = 0.0;  // min{a_* + alpha - gamma_1, a_(circled *) + alpha - gamma_2}
  double epsilon_star = 0.0;

  bool pass() const {
    return std::all_of(clauses.begin(), clauses.end(), [](const auto& c) { return c.pass; });
  }
  const AssumptionClause* first_failure() const {
    for (const auto& c : clauses) {
      if (!c.pass) return &c;
    }
    return nullptr;
  }
};

inline AssumptionReport validate_assumptions(const LogPotential& pot, const KernelPair& kp) {
  AssumptionReport rep;
  const double alpha = pot.alpha();
  const double g = pot.gamma();
  const double margin = alpha / (1.0 + alpha);
  const auto& c = kp.constants;
  auto fmt = [](double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
  };

  rep.clauses.push_back({"A1", c.a_lower > 0.0 && c.a_lower_surf > 0.0,
                         "a_*=" + fmt(c.a_lower) + " a_surf*=" + fmt(c.a_lower_surf)});
  rep.clauses.push_back({"A2", alpha > 0.0, "alpha=" + fmt(alpha)});
  const bool a3_bulk = g > 0.0 && g < c.a_lower + margin;
  rep.clauses.push_back({"A3", a3_bulk,
                         "gamma_1=" + fmt(g) + (a3_bulk ? " < " : " >= ") + "a_* + alpha/(1+alpha)=" +
                             fmt(c.a_lower + margin)});
  const bool a3_surf = g > 0.0 && g < c.a_lower_surf + margin;
  rep.clauses.push_back({"A3_surface", a3_surf,
                         "gamma_2=" + fmt(g) + (a3_surf ? " < " : " >= ") +
                             "a_surf* + alpha/(1+alpha)=" + fmt(c.a_lower_surf + margin)});

  // A7: 1/beta(1-2d) * |ln d|^kappa stays bounded as d -> 0, with kappa = 1 (> 1/2 in 2D).
  {
    double worst = 0.0;
    bool finite = true;
    for (double d = 1e-2; d >= 1e-12; d *= 0.1) {
      const double v = std::abs(std::log(d)) / pot.beta(1.0 - 2.0 * d);
      finite = finite && std::isfinite(v);
      worst = std::max(worst, v);
    }
    rep.clauses.push_back({"A7", finite && worst <= 4.0 / pot.theta,
                           "sup |ln d|/beta(1-2d)=" + fmt(worst) + " (kappa=1)"});
  }
  // A8: 1/beta'(1-2d) <= C0 d with C0 = max(1, 4/Theta).
  {
    const double c0 = std::max(1.0, 4.0 / pot.theta);
    bool ok = true;
    for (double d = 0.49; d >= 1e-12; d *= 0.5) {
      // use the distance actually represented by the rounded sample point
      const double s = 1.0 - 2.0 * d;
      const double d_eff = 0.5 * (1.0 - s);
      ok = ok && (1.0 / pot.beta_prime(s) <= c0 * d_eff * (1.0 + 1e-12)) &&
           (1.0 / pot.beta_prime(-s) <= c0 * d_eff * (1.0 + 1e-12));
    }
    rep.clauses.push_back({"A8", ok, "C0=" + fmt(c0)});
  }
  // A9: beta' nondecreasing on [1 - delta_1, 1) and nonincreasing on (-1, -1 + delta_1].
  {
    bool ok = true;
    double prev = pot.beta_prime(0.5);
    double prev_neg = pot.beta_prime(-0.5);
    for (int k = 1; k <= 400; ++k) {
      const double s = 0.5 + 0.5 * (1.0 - std::pow(0.95, k));
      const double cur = pot.beta_prime(s);
      const double cur_neg = pot.beta_prime(-s);
      ok = ok && cur >= prev && cur_neg >= prev_neg;
      prev = cur;
      prev_neg = cur_neg;
    }
    rep.clauses.push_back({"A9", ok, "delta_1=0.5"});
  }

  rep.c_star = std::min(c.a_lower + alpha - g, c.a_lower_surf + alpha - g);
  rep.epsilon_star = epsilon_star(pot, kp);
  return rep;
}

}  // namespace nlch
