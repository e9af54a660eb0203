#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pnerw::stats {

/// Pairwise (tree) summation: a fixed reduction shape, so totals do not
/// depend on how replicas were interleaved across workers.
double pairwise_sum(std::span<const double> x);

double mean(std::span<const double> x);

/// Unbiased sample variance (n - 1 denominator), two-pass.
double variance(std::span<const double> x);

/// Order statistic at fraction q in [0, 1] (lower interpolation point of the
/// sorted copy). Median is quantile(x, 0.5) averaged with its upper neighbor
/// for even sizes.
double quantile(std::span<const double> x, double q);
double median(std::span<const double> x);

double normal_pdf(double x);
double normal_cdf(double x);

/// Two-sided Kolmogorov-Smirnov distance of samples against a continuous CDF.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Limiting Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_sf(double lambda);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

double chi_square_cdf(double x, int dof);
double chi_square_sf(double x, int dof);
double chi_square_quantile(double p, int dof);

/// Pearson statistic of observed counts against expected counts.
double chi_square_statistic(std::span<const std::uint64_t> observed,
                            std::span<const double> expected);

struct ChiSquareTest {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Goodness of fit of counts against a finite mass function. Cells with
/// expected count below min_expected are pooled into their left neighbor.
ChiSquareTest chi_square_gof(std::span<const std::uint64_t> observed,
                             std::span<const double> probabilities, double min_expected = 5.0);

/// Independence test on an a x b contingency table (row-major).
ChiSquareTest chi_square_independence(std::span<const std::uint64_t> table, int rows, int cols);

/// Halfwidth of the 95% normal-approximation binomial interval.
double binomial_ci_halfwidth(double p_hat, std::uint64_t n, double z = 1.96);

}  // namespace pnerw::stats
