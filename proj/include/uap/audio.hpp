#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace uap {

inline constexpr int kDefaultSampleRate = 16000;
/// RMS floor used by spl/snr so that a zero signal still has a finite level.
inline constexpr double kPowerFloor = 1e-12;

/// Fixed-length waveform with every amplitude in [0, 1].
struct AudioSample {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;
  std::optional<int> label;

  std::size_t size() const { return samples.size(); }
};

/// Throws InvalidInput unless the sample is non-empty and within [0, 1].
void validate_sample(const AudioSample& sample);

double rms_power(std::span<const double> v);

/// Sound pressure level 20*log10(max(rms, floor)) in dB.
double spl(std::span<const double> v);

/// 20*log10(P(x) / P(v)); higher means a quieter perturbation.
double snr(std::span<const double> x, std::span<const double> v);

/// Peak-based loudness of v relative to x in dB. Only strictly positive
/// entries take part in each maximum; throws UndefinedMetric if there are none.
double rel_loudness(std::span<const double> x, std::span<const double> v);

double l2_norm(std::span<const double> v);
double linf_norm(std::span<const double> v);

}  // namespace uap
