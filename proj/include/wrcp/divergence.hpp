#pragma once

#include <functional>
#include <string>

namespace wrcp {

/// An f-divergence generator: a convex f with f(1) = 0 together with the two
/// extended-real limits needed to evaluate perspective terms at the boundary,
///   f_at_zero      = lim_{t -> 0+} f(t)
///   recession_slope = lim_{t -> inf} f(t)/t   (gives the 0 * f(a/0) convention).
struct FDivergenceSpec {
  enum class Kind { KL, TV, ChiSq, Custom };

  Kind kind = Kind::Custom;
  std::string name;
  std::function<double(double)> f;  // defined on (0, inf)
  double f_at_zero = 0.0;           // may be +inf
  double recession_slope = 0.0;     // may be +inf

  static FDivergenceSpec kl();
  static FDivergenceSpec tv();
  static FDivergenceSpec chi_squared();
  /// A user-supplied generator. No symbolic limit computation is attempted;
  /// both limits must be given explicitly.
  static FDivergenceSpec custom(std::string name, std::function<double(double)> f,
                                double f_at_zero, double recession_slope);

  /// Parse "kl" | "tv" | "chisq" (case-insensitive).
  static FDivergenceSpec from_name(const std::string& name);
};

/// Radius of the f-divergence ball bounding the conditional (Y|X) shift.
/// rho == 0 means the conditional law is assumed unshifted.
struct RobustLevel {
  double rho = 0.0;
};

/// The two-point divergence  h(z; beta) = beta f(z/beta) + (1-beta) f((1-z)/(1-beta)),
/// evaluated with the perspective-function boundary conventions
///   c * f(a/c) = a * recession_slope  when c == 0   (and 0 when a == 0 too),
///   c * f(0/c) = c * f_at_zero        when a == 0, c > 0.
/// Nonnegative, zero at z == beta; +inf is a legal return value.
double eval_perspective(const FDivergenceSpec& spec, double beta, double z);

/// g_{f,rho}(beta) = inf{ z in [0,1] : h(z; beta) <= rho }, by bisection on
/// [0, beta] (h is nonincreasing there and h(beta) = 0). Absolute tolerance 1e-10.
double g_value(const FDivergenceSpec& spec, RobustLevel rho, double beta);

/// g^{-1}_{f,rho}(tau) = sup{ beta in [0,1] : g_{f,rho}(beta) <= tau }, by
/// bisection over beta (g is nondecreasing in beta). Absolute tolerance 1e-10.
double g_inverse(const FDivergenceSpec& spec, RobustLevel rho, double tau);

/// Whether g_{f,rho}(1) >= 1 - alpha, i.e. whether the exact 1-alpha guarantee
/// holds rather than the weaker g(g^{-1}(1-alpha)) bound.
bool g_condition_check(const FDivergenceSpec& spec, RobustLevel rho, double alpha);

}  // namespace wrcp
