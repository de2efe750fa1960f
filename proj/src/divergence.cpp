#include "wrcp/divergence.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "wrcp/errors.hpp"

namespace wrcp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBisectTol = 1e-10;
}  // namespace

FDivergenceSpec FDivergenceSpec::kl() {
  FDivergenceSpec s;
  s.kind = Kind::KL;
  s.name = "kl";
  s.f = [](double t) { return t * std::log(t); };
  s.f_at_zero = 0.0;
  s.recession_slope = kInf;
  return s;
}

FDivergenceSpec FDivergenceSpec::tv() {
  FDivergenceSpec s;
  s.kind = Kind::TV;
  s.name = "tv";
  s.f = [](double t) { return 0.5 * std::fabs(t - 1.0); };
  s.f_at_zero = 0.5;
  s.recession_slope = 0.5;
  return s;
}

FDivergenceSpec FDivergenceSpec::chi_squared() {
  FDivergenceSpec s;
  s.kind = Kind::ChiSq;
  s.name = "chisq";
  s.f = [](double t) { return (t - 1.0) * (t - 1.0); };
  s.f_at_zero = 1.0;
  s.recession_slope = kInf;
  return s;
}

FDivergenceSpec FDivergenceSpec::custom(std::string name,
                                        std::function<double(double)> f,
                                        double f_at_zero, double recession_slope) {
  FDivergenceSpec s;
  s.kind = Kind::Custom;
  s.name = std::move(name);
  s.f = std::move(f);
  s.f_at_zero = f_at_zero;
  s.recession_slope = recession_slope;
  return s;
}

FDivergenceSpec FDivergenceSpec::from_name(const std::string& name) {
  std::string n;
  for (char c : name) n.push_back(static_cast<char>(std::tolower(c)));
  if (n == "kl") return kl();
  if (n == "tv") return tv();
  if (n == "chisq" || n == "chi2" || n == "chi-squared") return chi_squared();
  throw ConfigError("unknown divergence '" + name + "' (expected kl|tv|chisq)");
}

namespace {

// One perspective term c * f(a/c) under the boundary conventions.
double perspective_term(const FDivergenceSpec& spec, double a, double c) {
  if (c == 0.0) {
    if (a == 0.0) return 0.0;  // 0 * f(0/0) := 0
    return std::isinf(spec.recession_slope) ? kInf : a * spec.recession_slope;
  }
  if (a == 0.0) {
    return std::isinf(spec.f_at_zero) ? kInf : c * spec.f_at_zero;
  }
  return c * spec.f(a / c);
}

}  // namespace

double eval_perspective(const FDivergenceSpec& spec, double beta, double z) {
  const double first = perspective_term(spec, z, beta);
  if (std::isinf(first)) return kInf;
  const double second = perspective_term(spec, 1.0 - z, 1.0 - beta);
  if (std::isinf(second)) return kInf;
  // h is a two-point f-divergence, hence >= 0; clamp roundoff.
  return std::max(first + second, 0.0);
}

double g_value(const FDivergenceSpec& spec, RobustLevel rho, double beta) {
  if (rho.rho < 0.0) throw DataError("g_value: rho must be nonnegative");
  if (beta <= 0.0) return 0.0;
  if (std::isinf(rho.rho)) return 0.0;
  if (rho.rho == 0.0) return beta;
  if (eval_perspective(spec, beta, 0.0) <= rho.rho) return 0.0;

  // h(.; beta) is nonincreasing on [0, beta] with h(beta) = 0, so the
  // feasible set on that interval is [z*, beta]; bisect for z*.
  double lo = 0.0;   // h(lo) > rho
  double hi = beta;  // h(hi) <= rho
  while (hi - lo > kBisectTol) {
    const double mid = 0.5 * (lo + hi);
    if (eval_perspective(spec, beta, mid) <= rho.rho) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double g_inverse(const FDivergenceSpec& spec, RobustLevel rho, double tau) {
  if (tau < 0.0 || tau > 1.0) throw DataError("g_inverse: tau outside [0,1]");
  if (rho.rho == 0.0) return tau;
  if (g_value(spec, rho, 1.0) <= tau) return 1.0;

  // g(beta) <= beta, so beta = tau is always feasible; g is nondecreasing.
  double lo = tau;  // g(lo) <= tau
  double hi = 1.0;  // g(hi) > tau
  while (hi - lo > kBisectTol) {
    const double mid = 0.5 * (lo + hi);
    if (g_value(spec, rho, mid) <= tau) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

bool g_condition_check(const FDivergenceSpec& spec, RobustLevel rho, double alpha) {
  if (alpha <= 0.0 || alpha >= 1.0) throw DataError("g_condition_check: alpha outside (0,1)");
  return g_value(spec, rho, 1.0) >= 1.0 - alpha;
}

}  // namespace wrcp
