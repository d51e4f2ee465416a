#pragma once

#include <cstdint>
#include <string>

namespace tda {

// shortest round-trip formatting used by every CSV/JSON emitter
std::string fmt_g17(double v);

// two-significant-digit scientific rounding for headline figures
std::string fmt_2sig(double v);

std::uint64_t fnv1a64(const std::string& s);
std::string hex64(std::uint64_t v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace tda
