#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "uap/audio.hpp"

namespace uap {

/// 16-bit PCM value to the [0,1] amplitude used throughout the toolkit.
double pcm_to_unit(std::int16_t s);
/// Inverse of pcm_to_unit with rounding and saturation.
std::int16_t unit_to_pcm(double x);

/// Reads a RIFF/WAVE file holding 16-bit little-endian mono PCM.
/// Throws FormatError for anything else.
AudioSample load_wav(const std::filesystem::path& path);

/// Writes 16-bit mono PCM at 16 kHz.
void save_wav(const AudioSample& sample, const std::filesystem::path& path);

}  // namespace uap
