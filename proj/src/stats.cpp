#include "kpzlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace kpzlab::stats {

double mean(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("mean of empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double covariance(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("covariance: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("covariance: need at least two samples");
  const double mx = mean(x), my = mean(y);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
  return s / static_cast<double>(x.size() - 1);
}

double variance(const std::vector<double>& x) { return covariance(x, x); }

double standard_error(const std::vector<double>& x) {
  return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

double covariance_standard_error(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("covariance_standard_error: bad sample");
  const double mx = mean(x), my = mean(y);
  std::vector<double> prod(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) prod[i] = (x[i] - mx) * (y[i] - my);
  return standard_error(prod);
}

double variance_standard_error(const std::vector<double>& x) { return covariance_standard_error(x, x); }

BatchMeans batch_means(const std::vector<double>& x, std::size_t batches, double level) {
  if (batches < 2) throw std::invalid_argument("batch_means: need at least two batches");
  if (x.size() < batches) throw std::invalid_argument("batch_means: fewer samples than batches");
  const std::size_t per = x.size() / batches;
  std::vector<double> bm(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < per; ++i) s += x[b * per + i];
    bm[b] = s / static_cast<double>(per);
  }
  BatchMeans out;
  out.batches = batches;
  out.mean = mean(bm);
  out.stderr_ = standard_error(bm);
  boost::math::students_t dist(static_cast<double>(batches - 1));
  const double tq = boost::math::quantile(dist, 0.5 + 0.5 * level);
  out.lo = out.mean - tq * out.stderr_;
  out.hi = out.mean + tq * out.stderr_;
  return out;
}

namespace {

PowerFit weighted_line(const std::vector<double>& X, const std::vector<double>& Y, const std::vector<double>& W) {
  PowerFit f;
  f.points = X.size();
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    sw += W[i];
    sx += W[i] * X[i];
    sy += W[i] * Y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    sxx += W[i] * (X[i] - mx) * (X[i] - mx);
    sxy += W[i] * (X[i] - mx) * (Y[i] - my);
    syy += W[i] * (Y[i] - my) * (Y[i] - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double r = Y[i] - f.intercept - f.slope * X[i];
    rss += W[i] * r * r;
  }
  // Residual-based slope error, normalized so that it does not depend on the
  // overall scale of the weights.
  const double dof = static_cast<double>(X.size()) - 2.0;
  f.slope_stderr = std::sqrt(rss / dof / sxx);
  f.r2 = syy > 0.0 ? 1.0 - rss / syy : 1.0;
  return f;
}

}  // namespace

PowerFit scaling_exponent(const std::vector<double>& delta, const std::vector<double>& moment,
                          const std::vector<double>& sigma) {
  if (delta.size() != moment.size()) throw std::invalid_argument("scaling_exponent: length mismatch");
  if (!sigma.empty() && sigma.size() != delta.size()) throw std::invalid_argument("scaling_exponent: sigma length mismatch");
  if (delta.size() < 5) throw std::invalid_argument("scaling_exponent: need at least 5 points");
  const auto [dmin, dmax] = std::minmax_element(delta.begin(), delta.end());
  if (!(*dmin > 0.0) || *dmax / *dmin < 10.0 * (1.0 - 1e-12))
    throw std::invalid_argument("scaling_exponent: points must span at least one decade");
  std::vector<double> X(delta.size()), Y(delta.size()), W(delta.size(), 1.0);
  for (std::size_t i = 0; i < delta.size(); ++i) {
    if (!(moment[i] > 0.0)) throw std::invalid_argument("scaling_exponent: moments must be positive");
    X[i] = std::log(delta[i]);
    Y[i] = std::log(moment[i]);
    if (!sigma.empty()) {
      if (!(sigma[i] > 0.0)) throw std::invalid_argument("scaling_exponent: sigma must be positive");
      const double rel = sigma[i] / moment[i];
      W[i] = 1.0 / (rel * rel);
    }
  }
  return weighted_line(X, Y, W);
}

HolderEstimate holder_estimate(const std::vector<std::vector<double>>& paths, double dt) {
  if (paths.empty()) throw std::invalid_argument("holder_estimate: no paths");
  const std::size_t N = paths.front().size();
  for (const auto& p : paths)
    if (p.size() != N) throw std::invalid_argument("holder_estimate: paths of unequal length");
  if (N < 1024) throw std::invalid_argument("holder_estimate: need at least 1024 points");
  if (!(dt > 0.0)) throw std::invalid_argument("holder_estimate: dt must be positive");
  HolderEstimate est;
  for (std::size_t lag = 1; lag <= N / 16; lag *= 2) {
    double s = 0.0;
    std::size_t cnt = 0;
    for (const auto& p : paths)
      for (std::size_t i = 0; i + lag < N; ++i) {
        const double d = p[i + lag] - p[i];
        s += d * d;
        ++cnt;
      }
    est.lags.push_back(static_cast<double>(lag) * dt);
    est.structure.push_back(s / static_cast<double>(cnt));
  }
  std::vector<double> X, Y, W;
  for (std::size_t i = 0; i < est.lags.size(); ++i) {
    if (!(est.structure[i] > 0.0)) continue;
    X.push_back(std::log(est.lags[i]));
    Y.push_back(std::log(est.structure[i]));
    W.push_back(1.0);
  }
  if (X.size() < 2) {
    est.gamma = 1.0;  // constant path
    return est;
  }
  est.fit = weighted_line(X, Y, W);
  est.gamma = std::min(1.0, est.fit.slope / 2.0);
  return est;
}

HolderEstimate holder_estimate(const std::vector<double>& path, double dt) {
  return holder_estimate(std::vector<std::vector<double>>{path}, dt);
}

OneTermFit fit_one_term(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("fit_one_term: bad input");
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
  }
  OneTermFit f;
  f.c = sxx > 0.0 ? std::max(0.0, sxy / sxx) : 0.0;
  const double my = mean(y);
  double rss = 0, tss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    rss += (y[i] - f.c * x[i]) * (y[i] - f.c * x[i]);
    tss += (y[i] - my) * (y[i] - my);
  }
  f.r2 = tss > 0.0 ? 1.0 - rss / tss : (rss == 0.0 ? 1.0 : 0.0);
  return f;
}

TwoTermFit fit_two_term(const std::vector<double>& x1, const std::vector<double>& x2, const std::vector<double>& y) {
  if (x1.size() != y.size() || x2.size() != y.size() || y.size() < 3) throw std::invalid_argument("fit_two_term: bad input");
  double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    a11 += x1[i] * x1[i];
    a12 += x1[i] * x2[i];
    a22 += x2[i] * x2[i];
    b1 += x1[i] * y[i];
    b2 += x2[i] * y[i];
  }
  const double my = mean(y);
  auto score = [&](double c1, double c2) {
    double rss = 0, tss = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double r = y[i] - c1 * x1[i] - c2 * x2[i];
      rss += r * r;
      tss += (y[i] - my) * (y[i] - my);
    }
    return tss > 0.0 ? 1.0 - rss / tss : (rss == 0.0 ? 1.0 : 0.0);
  };
  TwoTermFit best;
  best.r2 = -std::numeric_limits<double>::infinity();
  auto consider = [&](double c1, double c2) {
    if (c1 < 0.0 || c2 < 0.0) return;
    const double r2 = score(c1, c2);
    if (r2 > best.r2) best = {c1, c2, r2};
  };
  const double det = a11 * a22 - a12 * a12;
  if (det > 0.0) consider((b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det);
  if (a11 > 0.0) consider(std::max(0.0, b1 / a11), 0.0);
  if (a22 > 0.0) consider(0.0, std::max(0.0, b2 / a22));
  consider(0.0, 0.0);
  return best;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double bonferroni_z(std::size_t tests, double family_level) {
  if (tests == 0) tests = 1;
  const double per = family_level / static_cast<double>(tests);
  boost::math::normal dist;
  return boost::math::quantile(boost::math::complement(dist, per / 2.0));
}

double chi_square_sf(double stat, double dof) {
  if (stat <= 0.0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

NormalityTest jarque_bera(const std::vector<double>& x) {
  if (x.size() < 8) throw std::invalid_argument("jarque_bera: need at least 8 samples");
  const double m = mean(x);
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  const double N = static_cast<double>(x.size());
  m2 /= N;
  m3 /= N;
  m4 /= N;
  NormalityTest t;
  if (m2 <= 0.0) {
    t.p_value = 0.0;
    t.statistic = std::numeric_limits<double>::infinity();
    return t;
  }
  t.skewness = m3 / std::pow(m2, 1.5);
  t.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  t.statistic = N / 6.0 * (t.skewness * t.skewness + 0.25 * t.excess_kurtosis * t.excess_kurtosis);
  t.p_value = chi_square_sf(t.statistic, 2.0);
  return t;
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-300) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

KsTest ks_test(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw std::invalid_argument("ks_test: empty sample");
  std::sort(x.begin(), x.end());
  const double N = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / N - F, F - static_cast<double>(i) / N});
  }
  KsTest t;
  t.distance = d;
  const double sn = std::sqrt(N);
  t.p_value = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
  return t;
}

WhiteNoiseReport white_noise_marginal_test(const std::vector<std::vector<double>>& samples,
                                           const std::vector<std::vector<double>>& expected) {
  const std::size_t G = samples.size();
  if (expected.size() != G) throw std::invalid_argument("white_noise_marginal_test: expected matrix size");
  WhiteNoiseReport rep;
  const std::size_t tests = G * (G + 1) / 2 + G;  // covariances + normality
  rep.z_threshold = bonferroni_z(tests);
  rep.p_threshold = 0.0026997960632601866 / static_cast<double>(tests);
  for (std::size_t g = 0; g < G; ++g)
    for (std::size_t h = g; h < G; ++h) {
      WhiteNoiseReport::Pair p;
      p.g = g;
      p.h = h;
      p.sample = covariance(samples[g], samples[h]);
      p.expected = expected[g][h];
      p.stderr_ = covariance_standard_error(samples[g], samples[h]);
      p.z = p.stderr_ > 0.0 ? (p.sample - p.expected) / p.stderr_ : (p.sample == p.expected ? 0.0 : INFINITY);
      if (std::abs(p.z) > rep.z_threshold) rep.pass = false;
      rep.pairs.push_back(p);
    }
  for (std::size_t g = 0; g < G; ++g) {
    rep.normality.push_back(jarque_bera(samples[g]));
    if (rep.normality.back().p_value < rep.p_threshold) rep.pass = false;
  }
  return rep;
}

}  // namespace kpzlab::stats
