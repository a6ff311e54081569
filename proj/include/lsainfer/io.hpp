#pragma once

#include <string>
#include <string_view>

namespace lsa::io {

/// Shortest round-trip decimal representation; locale independent.
std::string format_double(double x);

/// Writes `content` to `path`, throwing lsa::Error on failure.
void write_text(const std::string& path, std::string_view content);

std::string read_text(const std::string& path);

}  // namespace lsa::io
