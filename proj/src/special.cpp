#include "netval/special.hpp"

#include <array>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/erf.hpp>

#include "netval/error.hpp"

namespace netval {

double normal_cdf(double x) noexcept {
  if (x == std::numeric_limits<double>::infinity()) return 1.0;
  if (x == -std::numeric_limits<double>::infinity()) return 0.0;
  return 0.5 * std::erfc(-x * M_SQRT1_2);
}

double normal_interval(double a, double b) noexcept {
  if (!(a < b)) return 0.0;
  // Upper tail: difference of survival functions keeps relative accuracy.
  if (a > 0.0) return normal_cdf(-a) - normal_cdf(-b);
  return normal_cdf(b) - normal_cdf(a);
}

double normal_quantile(double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw Error(ErrorKind::invalid_input, "normal quantile requires u in [0,1]");
  if (u == 0.0) return -std::numeric_limits<double>::infinity();
  if (u == 1.0) return std::numeric_limits<double>::infinity();
  return -M_SQRT2 * boost::math::erfc_inv(2.0 * u);
}

namespace {

// 15-point Gauss-Legendre nodes/weights on [-1,1].
constexpr std::array<double, 8> kNodes = {
    0.0000000000000000000000000, 0.2011940939974345223006283, 0.3941513470775633698972074,
    0.5709721726085388475372267, 0.7244177313601700474161861, 0.8482065834104272162006483,
    0.9372733924007059043077589, 0.9879925180204854284895657};
constexpr std::array<double, 8> kWeights = {
    0.2025782419255612728806202, 0.1984314853271115764561183, 0.1861610000155622110268006,
    0.1662692058169939335532009, 0.1395706779261543144478048, 0.1071592204671719350118695,
    0.0703660474881081247092674, 0.0307532419961172683546284};

double gauss15(const std::function<double(double)>& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = kWeights[0] * f(mid);
  for (std::size_t k = 1; k < kNodes.size(); ++k) {
    const double dx = half * kNodes[k];
    sum += kWeights[k] * (f(mid - dx) + f(mid + dx));
  }
  return sum * half;
}

constexpr int kMaxDepth = 60;

double refine(const std::function<double(double)>& f, double a, double b, double whole, double tol, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = gauss15(f, a, mid);
  const double right = gauss15(f, mid, b);
  const double both = left + right;
  if (!std::isfinite(both)) throw Error(ErrorKind::model, "integrand is not finite on the interval");
  if (std::abs(both - whole) <= tol || (b - a) <= 1e-15 * std::max(1.0, std::abs(a))) return both;
  if (depth >= kMaxDepth) throw Error(ErrorKind::model, "quadrature did not converge (non-integrable map?)");
  return refine(f, a, mid, left, 0.5 * tol, depth + 1) + refine(f, mid, b, right, 0.5 * tol, depth + 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol, double rel_tol) {
  if (a == b) return 0.0;
  if (!(std::isfinite(a) && std::isfinite(b))) throw Error(ErrorKind::invalid_input, "integration bounds must be finite");
  const double whole = gauss15(f, a, b);
  const double tol = std::max(abs_tol, rel_tol * std::abs(whole));
  return refine(f, a, b, whole, tol, 0);
}

}  // namespace netval
