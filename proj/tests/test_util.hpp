#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <string>

// Fresh per-call scratch directory under the system temp root.
inline std::string testing_tmpdir() {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("lfa-tests-" + std::to_string(::getpid()) + "-" +
              std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline std::string read_whole_file(const std::string& path) {
  std::string out;
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) return out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) out.append(buf, n);
  std::fclose(f);
  return out;
}
