#include "photonids/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace photonids::calibrate {

void ChannelCalibrator::validate() const {
  auto m = knot_t.size();
  if (m < 2 || knot_u.size() != m || slope.size() != m)
    throw Error(ErrorCategory::InvalidArgument, "calibrator needs >= 2 knots");
  for (std::size_t i = 1; i < m; ++i) {
    if (!(knot_t[i] > knot_t[i - 1]))
      throw Error(ErrorCategory::InvalidArgument,
                  "knot abscissae must strictly increase");
    if (knot_u[i] < knot_u[i - 1])
      throw Error(ErrorCategory::NonMonotoneKnots,
                  "knot values must be non-decreasing");
  }
}

std::vector<double> fritsch_carlson_slopes(std::span<const double> t,
                                           std::span<const double> u) {
  auto m = t.size();
  if (m < 2 || u.size() != m)
    throw Error(ErrorCategory::InvalidArgument, "need >= 2 knots");
  std::vector<double> h(m - 1), d(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    h[i] = t[i + 1] - t[i];
    if (!(h[i] > 0.0))
      throw Error(ErrorCategory::InvalidArgument,
                  "knot abscissae must strictly increase");
    d[i] = (u[i + 1] - u[i]) / h[i];
    if (d[i] < 0.0)
      throw Error(ErrorCategory::NonMonotoneKnots,
                  "knot values must be non-decreasing");
  }
  std::vector<double> s(m);
  // One-sided secants at the ends stay within 3x of the interval secant
  // automatically, so they never break monotonicity.
  s[0] = d[0];
  s[m - 1] = d[m - 2];
  for (std::size_t k = 1; k + 1 < m; ++k) {
    if (d[k - 1] == 0.0 || d[k] == 0.0) {
      s[k] = 0.0;  // flat on either side pins the slope
    } else {
      double w1 = 2.0 * h[k] + h[k - 1];
      double w2 = h[k] + 2.0 * h[k - 1];
      s[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
    }
  }
  return s;
}

double ChannelCalibrator::eval(double t) const {
  const auto& xs = knot_t;
  auto m = xs.size();
  if (t <= xs.front()) return knot_u.front() + slope.front() * (t - xs.front());
  if (t >= xs.back()) return knot_u.back() + slope.back() * (t - xs.back());
  // Containing interval by binary search: xs[i] <= t < xs[i+1].
  auto it = std::upper_bound(xs.begin(), xs.end(), t);
  auto i = static_cast<std::size_t>(it - xs.begin()) - 1;
  if (i + 1 >= m) i = m - 2;
  double h = xs[i + 1] - xs[i];
  double s = (t - xs[i]) / h;
  double s2 = s * s;
  double s3 = s2 * s;
  double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  double h10 = s3 - 2.0 * s2 + s;
  double h01 = -2.0 * s3 + 3.0 * s2;
  double h11 = s3 - s2;
  return h00 * knot_u[i] + h * h10 * slope[i] + h01 * knot_u[i + 1] +
         h * h11 * slope[i + 1];
}

ChannelCalibrator fit_channel(std::span<const double> raw,
                              std::span<const double> target, int bins) {
  if (bins < 2) throw Error(ErrorCategory::InvalidArgument, "bins must be >= 2");
  auto n = raw.size();
  if (target.size() != n)
    throw Error(ErrorCategory::InvalidArgument, "pair length mismatch");
  if (n < 2 * static_cast<std::size_t>(bins))
    throw Error(ErrorCategory::InsufficientSamples,
                "need at least 2 pairs per bin");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (raw[a] != raw[b]) return raw[a] < raw[b];
    return a < b;  // stable under ties for determinism
  });

  // Equal-count quantile bins; the remainder spreads over the first bins.
  std::vector<double> bt, bu;
  std::vector<double> bw;  // bin weights for the isotonic pass
  std::size_t base = n / bins, extra = n % bins, pos = 0;
  for (int b = 0; b < bins; ++b) {
    std::size_t count = base + (static_cast<std::size_t>(b) < extra ? 1 : 0);
    double st = 0.0, su = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
      st += raw[order[pos + j]];
      su += target[order[pos + j]];
    }
    pos += count;
    bt.push_back(st / count);
    bu.push_back(su / count);
    bw.push_back(static_cast<double>(count));
  }

  // Ties in bin abscissae (heavily repeated raw values) merge into one knot.
  std::vector<double> kt, ku, kw;
  for (std::size_t i = 0; i < bt.size(); ++i) {
    if (!kt.empty() && bt[i] <= kt.back()) {
      double w = kw.back() + bw[i];
      ku.back() = (ku.back() * kw.back() + bu[i] * bw[i]) / w;
      kw.back() = w;
    } else {
      kt.push_back(bt[i]);
      ku.push_back(bu[i]);
      kw.push_back(bw[i]);
    }
  }
  if (kt.size() < 2)
    throw Error(ErrorCategory::DegenerateFeature,
                "raw predictions are effectively constant");

  // Pool-adjacent-violators: weighted isotonic repair of the knot targets.
  {
    std::vector<double> vu, vw;
    std::vector<std::size_t> span_count;
    for (std::size_t i = 0; i < ku.size(); ++i) {
      vu.push_back(ku[i]);
      vw.push_back(kw[i]);
      span_count.push_back(1);
      while (vu.size() > 1 && vu[vu.size() - 2] > vu.back()) {
        double w = vw[vw.size() - 2] + vw.back();
        double u = (vu[vu.size() - 2] * vw[vw.size() - 2] +
                    vu.back() * vw.back()) /
                   w;
        vu.pop_back();
        vw.pop_back();
        auto c = span_count.back();
        span_count.pop_back();
        vu.back() = u;
        vw.back() = w;
        span_count.back() += c;
      }
    }
    std::size_t idx = 0;
    for (std::size_t blk = 0; blk < vu.size(); ++blk)
      for (std::size_t j = 0; j < span_count[blk]; ++j) ku[idx++] = vu[blk];
  }

  ChannelCalibrator cal;
  cal.knot_t = std::move(kt);
  cal.knot_u = std::move(ku);
  cal.slope = fritsch_carlson_slopes(cal.knot_t, cal.knot_u);
  cal.validate();
  return cal;
}

CalibratorModel fit_calibrator(
    const std::array<std::vector<double>, 4>& raw,
    const std::array<std::vector<double>, 4>& target, int bins) {
  CalibratorModel model;
  for (int k = 0; k < 4; ++k)
    model.channel[k] = fit_channel(raw[k], target[k], bins);
  return model;
}

PseudoPosition apply_calibration(const CalibratorModel& cal,
                                 const PseudoPosition& raw) {
  PseudoPosition out;
  for (int k = 0; k < 4; ++k) out[k] = cal.channel[k].eval(raw[k]);
  return out;
}

}  // namespace photonids::calibrate
