#pragma once

#include <chrono>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace radscat::cli {

inline constexpr int kUsageError = 2;
inline constexpr int kNumericalError = 1;

std::string sha256_hex(const std::string& bytes);

// Collects the inputs read and outputs written by one command, then writes
// <command>.manifest.json next to the outputs.
class Run {
 public:
  Run(std::string command, std::filesystem::path out_dir);

  // Reads a file and records its hash.
  std::string read_input(const std::string& path);
  // Writes out_dir/name and records it.
  void write(const std::string& name, const std::string& bytes);
  void write_json(const std::string& name, const nlohmann::json& j);

  const std::string& command() const { return command_; }
  const std::filesystem::path& out_dir() const { return out_dir_; }
  std::filesystem::path path(const std::string& name) const { return out_dir_ / name; }

  void finish(const nlohmann::json& config, const std::vector<std::string>& argv);

 private:
  std::string command_;
  std::filesystem::path out_dir_;
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json outputs_ = nlohmann::json::array();
  std::chrono::steady_clock::time_point t0_;
};

// 17 significant digits.
std::string csv_num(double v);

// gnuplot script text; `body` holds the plot commands.
std::string gnuplot_script(const std::string& title, const std::string& png, const std::string& body);

}  // namespace radscat::cli
