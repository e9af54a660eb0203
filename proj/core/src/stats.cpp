#include "pnerw/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pnerw::stats {

double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 32) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean of empty span");
  return pairwise_sum(x) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("variance needs at least two samples");
  const double m = mean(x);
  std::vector<double> sq(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - m) * (x[i] - m);
  return pairwise_sum(sq) / static_cast<double>(x.size() - 1);
}

double quantile(std::span<const double> x, double q) {
  if (x.empty()) throw std::invalid_argument("quantile of empty span");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile fraction outside [0, 1]");
  std::vector<double> copy(x.begin(), x.end());
  const std::size_t idx = std::min(
      static_cast<std::size_t>(q * static_cast<double>(copy.size())), copy.size() - 1);
  std::nth_element(copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(idx), copy.end());
  return copy[idx];
}

double median(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("median of empty span");
  std::vector<double> copy(x.begin(), x.end());
  const std::size_t mid = copy.size() / 2;
  std::nth_element(copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(mid), copy.end());
  double hi = copy[mid];
  if (copy.size() % 2 == 1) return hi;
  double lo = *std::max_element(copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double normal_pdf(double x) {
  static const double inv_sqrt_2pi = 0.3989422804014326779;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_distance of empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max(d, f - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
  }
  return d;
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) = 1 - P(a, x), valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p domain");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double chi_square_cdf(double x, int dof) {
  if (dof < 1) throw std::invalid_argument("chi_square_cdf: dof must be >= 1");
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * dof, 0.5 * x);
}

double chi_square_sf(double x, int dof) {
  if (dof < 1) throw std::invalid_argument("chi_square_sf: dof must be >= 1");
  if (x <= 0.0) return 1.0;
  if (x < 0.5 * dof + 1.0) return 1.0 - gamma_p_series(0.5 * dof, 0.5 * x);
  return gamma_q_cf(0.5 * dof, 0.5 * x);
}

double chi_square_quantile(double p, int dof) {
  if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("chi_square_quantile: p in (0,1)");
  double lo = 0.0;
  double hi = dof + 40.0 * std::sqrt(static_cast<double>(dof)) + 100.0;
  while (chi_square_cdf(hi, dof) < p) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi_square_cdf(mid, dof) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-12 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

double chi_square_statistic(std::span<const std::uint64_t> observed,
                            std::span<const double> expected) {
  if (observed.size() != expected.size())
    throw std::invalid_argument("chi_square_statistic: size mismatch");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) {
      if (observed[i] != 0)
        stat = std::numeric_limits<double>::infinity();
      continue;
    }
    const double diff = static_cast<double>(observed[i]) - expected[i];
    stat += diff * diff / expected[i];
  }
  return stat;
}

ChiSquareTest chi_square_gof(std::span<const std::uint64_t> observed,
                             std::span<const double> probabilities, double min_expected) {
  if (observed.size() != probabilities.size() || observed.empty())
    throw std::invalid_argument("chi_square_gof: size mismatch");
  std::uint64_t total = 0;
  for (auto o : observed) total += o;
  if (total == 0) throw std::invalid_argument("chi_square_gof: empty sample");

  // Pool low-expectation cells left-to-right.
  std::vector<std::uint64_t> obs;
  std::vector<double> exp;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = probabilities[i] * static_cast<double>(total);
    if (!exp.empty() && (e < min_expected || exp.back() < min_expected)) {
      exp.back() += e;
      obs.back() += observed[i];
    } else {
      exp.push_back(e);
      obs.push_back(observed[i]);
    }
  }
  ChiSquareTest t;
  t.dof = static_cast<int>(obs.size()) - 1;
  if (t.dof < 1) {
    t.dof = 0;
    t.statistic = 0.0;
    t.p_value = 1.0;  // a single cell fits trivially
    return t;
  }
  t.statistic = chi_square_statistic(obs, exp);
  t.p_value = chi_square_sf(t.statistic, t.dof);
  return t;
}

ChiSquareTest chi_square_independence(std::span<const std::uint64_t> table, int rows, int cols) {
  if (rows < 2 || cols < 2 || table.size() != static_cast<std::size_t>(rows) * cols)
    throw std::invalid_argument("chi_square_independence: bad table shape");
  std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
  double total = 0.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double v = static_cast<double>(table[static_cast<std::size_t>(r) * cols + c]);
      row_sum[r] += v;
      col_sum[c] += v;
      total += v;
    }
  if (total <= 0.0) throw std::invalid_argument("chi_square_independence: empty table");

  ChiSquareTest t;
  t.statistic = 0.0;
  int effective_rows = 0, effective_cols = 0;
  for (int r = 0; r < rows; ++r)
    if (row_sum[r] > 0.0) ++effective_rows;
  for (int c = 0; c < cols; ++c)
    if (col_sum[c] > 0.0) ++effective_cols;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double e = row_sum[r] * col_sum[c] / total;
      if (e <= 0.0) continue;
      const double diff = static_cast<double>(table[static_cast<std::size_t>(r) * cols + c]) - e;
      t.statistic += diff * diff / e;
    }
  t.dof = std::max(1, (effective_rows - 1) * (effective_cols - 1));
  t.p_value = chi_square_sf(t.statistic, t.dof);
  return t;
}

double binomial_ci_halfwidth(double p_hat, std::uint64_t n, double z) {
  if (n == 0) throw std::invalid_argument("binomial_ci_halfwidth: n must be positive");
  return z * std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n));
}

}  // namespace pnerw::stats
