#ifndef KPZLAB_STATS_HPP
#define KPZLAB_STATS_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace kpzlab::stats {

double mean(const std::vector<double>& x);
/// Unbiased sample variance.
double variance(const std::vector<double>& x);
double covariance(const std::vector<double>& x, const std::vector<double>& y);
/// Standard error of the sample mean.
double standard_error(const std::vector<double>& x);
/// Standard error of the unbiased sample variance, from the fourth central moment.
double variance_standard_error(const std::vector<double>& x);
/// Standard error of the sample covariance, from the spread of centered products.
double covariance_standard_error(const std::vector<double>& x, const std::vector<double>& y);

/// Batch-means confidence interval for the mean of a (possibly serially
/// correlated) series. Consecutive data are grouped into `batches` blocks; the
/// interval uses the Student t quantile on batches - 1 degrees of freedom.
struct BatchMeans {
  double mean = 0.0;
  double stderr_ = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t batches = 0;
};
BatchMeans batch_means(const std::vector<double>& x, std::size_t batches = 20, double level = 0.95);

/// Weighted least-squares line in log-log coordinates.
struct PowerFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Slope of log(moment) against log(delta). Requires at least 5 points
/// spanning at least one decade in delta and positive moments. `sigma`, when
/// given, is the standard error of each moment; log-space weights are then
/// (moment/sigma)^2. Degenerate (constant) data give slope 0.
PowerFit scaling_exponent(const std::vector<double>& delta, const std::vector<double>& moment,
                          const std::vector<double>& sigma = {});

struct HolderEstimate {
  double gamma = 0.0;  // slope / 2, capped at 1
  PowerFit fit;
  std::vector<double> lags;
  std::vector<double> structure;
};

/// Structure-function estimator on a uniformly sampled path of at least 1024
/// points: slope of log E|X(t+D) - X(t)|^2 against log D over dyadic lags
/// 1..N/16 steps, halved.
HolderEstimate holder_estimate(const std::vector<double>& path, double dt);
/// Same with the structure function averaged over several independent paths.
HolderEstimate holder_estimate(const std::vector<std::vector<double>>& paths, double dt);

/// y ~ c1 x1 + c2 x2 with c1, c2 >= 0.
struct TwoTermFit {
  double c1 = 0.0;
  double c2 = 0.0;
  double r2 = 0.0;
};
TwoTermFit fit_two_term(const std::vector<double>& x1, const std::vector<double>& x2, const std::vector<double>& y);

/// y ~ c x through the origin; r2 relative to the mean of y.
struct OneTermFit {
  double c = 0.0;
  double r2 = 0.0;
};
OneTermFit fit_one_term(const std::vector<double>& x, const std::vector<double>& y);

/// Two-sided critical |z| for `tests` simultaneous three-sigma tests
/// (Bonferroni: per-test level 0.0027 / tests).
double bonferroni_z(std::size_t tests, double family_level = 0.0026997960632601866);

double normal_cdf(double z);
/// Upper tail of chi-square with `dof` degrees of freedom.
double chi_square_sf(double stat, double dof);

/// Jarque-Bera statistic and its asymptotic chi-square(2) p-value.
struct NormalityTest {
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double statistic = 0.0;
  double p_value = 1.0;
};
NormalityTest jarque_bera(const std::vector<double>& x);

/// One-sample Kolmogorov-Smirnov distance and asymptotic p-value.
struct KsTest {
  double distance = 0.0;
  double p_value = 1.0;
};
KsTest ks_test(std::vector<double> x, const std::function<double(double)>& cdf);
/// Kolmogorov limiting tail P(K > lambda).
double kolmogorov_sf(double lambda);

/// Covariance structure of a family of fields against a white-noise target.
/// samples[g][r] is the value of field g in replica r; expected[g][h] is the
/// target covariance.
struct WhiteNoiseReport {
  struct Pair {
    std::size_t g = 0, h = 0;
    double sample = 0.0;
    double expected = 0.0;
    double stderr_ = 0.0;
    double z = 0.0;
  };
  std::vector<Pair> pairs;
  std::vector<NormalityTest> normality;
  double z_threshold = 0.0;
  double p_threshold = 0.0;
  bool pass = true;
};
WhiteNoiseReport white_noise_marginal_test(const std::vector<std::vector<double>>& samples,
                                           const std::vector<std::vector<double>>& expected);

}  // namespace kpzlab::stats

#endif  // KPZLAB_STATS_HPP
