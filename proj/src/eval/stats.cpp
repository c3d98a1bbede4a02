#include "eegdiff/eval/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "eegdiff/errors.hpp"

namespace eegdiff::eval {

namespace {

constexpr double kTolerance = 1e-10;
constexpr int kMaxTerms = 500;

double beta_continued_fraction(double a, double b, double x) {
  const double tiny = std::numeric_limits<double>::min() / kTolerance;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxTerms; ++m) {
    const double m2 = 2.0 * m;
    // even step
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    // odd step
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kTolerance) return h;
  }
  throw NumericError("regularized_incomplete_beta: continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("regularized_incomplete_beta: a and b must be > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("regularized_incomplete_beta: x must be in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
  return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("student_t_cdf: dof must be > 0");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
  return t > 0 ? 1.0 - tail : tail;
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b, double alpha) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("paired_ttest: length mismatch " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  if (a.size() < 2) throw std::invalid_argument("paired_ttest: need at least 2 pairs");
  const double n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) throw std::invalid_argument("paired_ttest: differences have zero variance");

  TTestResult r;
  r.t_statistic = mean / (sd / std::sqrt(n));
  r.degrees_of_freedom = static_cast<int>(a.size()) - 1;
  const double dof = r.degrees_of_freedom;
  r.p_value = regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + r.t_statistic * r.t_statistic));
  r.significant = r.p_value < alpha;
  return r;
}

}  // namespace eegdiff::eval
