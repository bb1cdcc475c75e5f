#pragma once

#include <string>

namespace abrlab {

/// Whole-file helpers; both throw DataError on I/O failure.
std::string read_file(const std::string &path);
void write_file(const std::string &path, const std::string &contents);

}  // namespace abrlab
