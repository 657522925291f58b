#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ratelat::csv {

// Fixed "%.12g" formatting keeps CSV bodies byte-identical across runs with
// the same seed, which the output contract relies on.
inline std::string fmt(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

inline std::string fmt(int x) { return std::to_string(x); }
inline std::string fmt(long x) { return std::to_string(x); }
inline std::string fmt(std::size_t x) { return std::to_string(x); }
inline std::string fmt(unsigned long long x) { return std::to_string(x); }
inline std::string fmt(bool x) { return x ? "1" : "0"; }
inline std::string fmt(const char* x) { return x; }
inline std::string fmt(const std::string& x) { return x; }

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path.string()) {
    if (path.has_parent_path())
      std::filesystem::create_directories(path.parent_path());
    out_.open(path);
    if (!out_)
      throw std::runtime_error("csv: cannot open '" + path_ + "' for writing");
  }

  void comment(const std::string& line) { out_ << "# " << line << "\n"; }

  template <class... Cols>
  void row(const Cols&... cols) {
    bool first = true;
    ((out_ << (first ? "" : ","), first = false, out_ << fmt(cols)), ...);
    out_ << "\n";
  }

  void close() {
    out_.close();
    if (out_.fail())
      throw std::runtime_error("csv: write to '" + path_ + "' failed");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace ratelat::csv
