#include "uap/audio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uap/errors.hpp"

namespace uap {

void validate_sample(const AudioSample& sample) {
  if (sample.samples.empty()) throw InvalidInput("audio sample is empty");
  for (double s : sample.samples) {
    if (!(s >= 0.0 && s <= 1.0)) throw InvalidInput("audio sample amplitude outside [0,1]");
  }
}

double rms_power(std::span<const double> v) {
  if (v.empty()) throw InvalidInput("rms_power of an empty vector");
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double spl(std::span<const double> v) {
  return 20.0 * std::log10(std::max(rms_power(v), kPowerFloor));
}

double snr(std::span<const double> x, std::span<const double> v) {
  if (x.size() != v.size()) throw InvalidInput("snr: length mismatch");
  const double px = std::max(rms_power(x), kPowerFloor);
  const double pv = std::max(rms_power(v), kPowerFloor);
  return 20.0 * std::log10(px / pv);
}

namespace {

double positive_peak(std::span<const double> v, const char* which) {
  double peak = 0.0;
  for (double e : v) peak = std::max(peak, e);
  if (!(peak > 0.0)) {
    throw UndefinedMetric(std::string("rel_loudness: no positive entry in ") + which);
  }
  return peak;
}

}  // namespace

double rel_loudness(std::span<const double> x, std::span<const double> v) {
  // max_n 20 log10(v_n) is 20 log10 of the largest positive entry.
  const double pv = positive_peak(v, "perturbation");
  const double px = positive_peak(x, "signal");
  return 20.0 * std::log10(pv) - 20.0 * std::log10(px);
}

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double linf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace uap
