#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace uap {

/// Writes values as little-endian IEEE-754 float32.
void write_f32_blob(const std::filesystem::path& path, std::span<const double> values);
void append_f32(std::vector<unsigned char>& out, std::span<const double> values);
std::vector<double> read_f32_blob(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// Version string recorded in manifests.
inline constexpr const char* kLibraryVersion = "0.1.0";

}  // namespace uap
