#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <unistd.h>

#include "symptomrank/error.hpp"

namespace symptomrank::io {

namespace fs = std::filesystem;

inline std::ifstream open_input(const fs::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error("cannot open input file: " + path.string());
  return in;
}

inline std::string read_file(const fs::path& path) {
  auto in = open_input(path, true);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes a file through a temporary sibling and renames it into place, so a
/// reader never observes a partially written output.
inline void write_atomically(const fs::path& path, const std::function<void(std::ostream&)>& writer) {
  static std::atomic<unsigned> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open output file: " + tmp.string());
    writer(out);
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("failed writing output file: " + path.string());
    }
  }
  fs::rename(tmp, path);
}

inline void write_file(const fs::path& path, const std::string& content) {
  write_atomically(path, [&](std::ostream& out) { out << content; });
}

}  // namespace symptomrank::io
