#pragma once

#include <string>

namespace quattro {

/// Whole file as bytes. Throws quattro::Error if it cannot be read.
std::string read_file(const std::string& path);

/// Writes through `<path>.tmp` and renames it into place.
void write_file_atomic(const std::string& path, const std::string& bytes);

}  // namespace quattro
