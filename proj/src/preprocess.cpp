#include "photonids/preprocess.hpp"

#include <cmath>
#include <cstddef>
#include <numeric>

namespace photonids::preprocess {

namespace {

// Solves the small SPD normal-equations system in place (Cholesky).
void solve_spd(std::vector<double>& a, std::vector<double>& b, int n) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (int k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      if (i == j) {
        if (s <= 0.0)
          throw Error(ErrorCategory::Internal,
                      "singular normal equations in savgol fit");
        a[i * n + i] = std::sqrt(s);
      } else {
        a[i * n + j] = s / a[j * n + j];
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
}

// Coefficients c such that sum_k c[k] * y[first+k] is the least-squares
// polynomial of `order` fit over offsets [first..last], evaluated at 0.
// Offsets are relative to the output sample.
std::vector<double> fit_coeffs(int first, int last, int order) {
  int m = last - first + 1;
  // A truncated edge window can hold fewer points than order+1; drop the
  // order to keep the fit determined.
  if (order > m - 1) order = m - 1;
  int n = order + 1;
  // A[k][j] = offset^j; coefficients = e0^T (A^T A)^{-1} A^T
  std::vector<double> ata(n * n, 0.0), rhs(n, 0.0);
  for (int k = 0; k < m; ++k) {
    double x = first + k;
    double pj = 1.0;
    std::vector<double> pows(n);
    for (int j = 0; j < n; ++j) {
      pows[j] = pj;
      pj *= x;
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) ata[i * n + j] += pows[i] * pows[j];
  }
  rhs[0] = 1.0;  // evaluate the polynomial at offset 0
  solve_spd(ata, rhs, n);
  // c[k] = sum_j rhs[j] * offset_k^j
  std::vector<double> c(m);
  for (int k = 0; k < m; ++k) {
    double x = first + k;
    double pj = 1.0, acc = 0.0;
    for (int j = 0; j < n; ++j) {
      acc += rhs[j] * pj;
      pj *= x;
    }
    c[k] = acc;
  }
  return c;
}

}  // namespace

std::vector<double> savgol_filter(std::span<const double> samples, int window,
                                  int order) {
  if (window < 1 || window % 2 == 0)
    throw Error(ErrorCategory::InvalidArgument, "window must be odd");
  if (order < 0 || order >= window)
    throw Error(ErrorCategory::InvalidArgument,
                "order must be smaller than the window");
  auto n = static_cast<int>(samples.size());
  if (n < window)
    throw Error(ErrorCategory::InsufficientSamples,
                "input shorter than the filter window");

  int half = window / 2;
  std::vector<double> center = fit_coeffs(-half, half, order);
  std::vector<double> out(n);
  for (int i = half; i < n - half; ++i) {
    double acc = 0.0;
    for (int k = 0; k < window; ++k) acc += center[k] * samples[i - half + k];
    out[i] = acc;
  }
  // One-sided truncated windows at the edges.
  for (int i = 0; i < half; ++i) {
    auto c = fit_coeffs(-i, half, order);  // window covers samples [0, i+half]
    double acc = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) acc += c[k] * samples[k];
    out[i] = acc;
  }
  for (int i = n - half; i < n; ++i) {
    int avail = n - 1 - i;  // samples to the right
    auto c = fit_coeffs(-half, avail, order);
    double acc = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k)
      acc += c[k] * samples[i - half + k];
    out[i] = acc;
  }
  return out;
}

std::vector<double> cubic_interpolate(std::span<const double> samples,
                                      int factor) {
  auto n = static_cast<std::size_t>(samples.size());
  if (n < 4)
    throw Error(ErrorCategory::InsufficientSamples,
                "need at least 4 samples for cubic interpolation");
  if (factor < 1)
    throw Error(ErrorCategory::InvalidArgument, "factor must be >= 1");
  if (factor == 1) return {samples.begin(), samples.end()};

  // Natural cubic spline on the unit grid: tridiagonal solve for second
  // derivatives M with M[0] = M[n-1] = 0.
  std::vector<double> m(n, 0.0), diag(n, 0.0), rhs(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    diag[i] = 4.0;
    rhs[i] = 6.0 * (samples[i - 1] - 2.0 * samples[i] + samples[i + 1]);
  }
  // Thomas algorithm over interior rows (sub/super diagonals are 1).
  for (std::size_t i = 2; i + 1 < n; ++i) {
    double w = 1.0 / diag[i - 1];
    diag[i] -= w;
    rhs[i] -= w * rhs[i - 1];
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    double upper = (i + 2 < n) ? m[i + 1] : 0.0;
    m[i] = (rhs[i] - upper) / diag[i];
    if (i == 1) break;
  }

  std::vector<double> out((n - 1) * factor + 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double y0 = samples[i], y1 = samples[i + 1];
    double m0 = m[i], m1 = m[i + 1];
    for (int j = 0; j < factor; ++j) {
      double t = static_cast<double>(j) / factor;
      double omt = 1.0 - t;
      out[i * factor + j] = omt * y0 + t * y1 +
                            (omt * omt * omt - omt) * m0 / 6.0 +
                            (t * t * t - t) * m1 / 6.0;
    }
    out[i * factor] = samples[i];  // knots exact, no roundoff drift
  }
  out.back() = samples[n - 1];
  return out;
}

ProcessedWaveform preprocess_event(const CapturedEvent& event,
                                   const PreprocessConfig& cfg,
                                   double sample_period_ns) {
  auto n = event.samples.size();
  if (n == 0)
    throw Error(ErrorCategory::InsufficientSamples, "empty event");
  if (cfg.pre_samples <= 0 || static_cast<std::size_t>(cfg.pre_samples) > n)
    throw Error(ErrorCategory::InvalidArgument, "bad pre_samples");

  double baseline = 0.0;
  for (int i = 0; i < cfg.pre_samples; ++i) baseline += event.samples[i];
  baseline /= cfg.pre_samples;

  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = event.samples[i] - baseline;

  auto filtered = savgol_filter(v, cfg.savgol_window, cfg.savgol_order);
  auto up = cubic_interpolate(filtered, cfg.upsample_factor);

  ProcessedWaveform out;
  out.samples = std::move(up);
  out.sample_period = sample_period_ns / cfg.upsample_factor;
  out.baseline = baseline;
  return out;
}

}  // namespace photonids::preprocess
