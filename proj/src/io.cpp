#include "abrlab/io.hpp"

#include <fstream>
#include <sstream>

#include "abrlab/error.hpp"

namespace abrlab {

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw DataError("read failed: " + path);
  return ss.str();
}

void write_file(const std::string &path, const std::string &contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << contents;
  out.close();
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace abrlab
