#pragma once

#include <filesystem>
#include <fstream>
#include <string>

namespace starwave::testutil {

inline std::filesystem::path temp_dir() {
  auto d = std::filesystem::temp_directory_path() / "starwave_tests";
  std::filesystem::create_directories(d);
  return d;
}

inline std::string write_temp(const std::string& name, const std::string& content) {
  const auto p = temp_dir() / name;
  std::ofstream(p) << content;
  return p.string();
}

}  // namespace starwave::testutil
