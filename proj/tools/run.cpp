#include "run.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef RADSCAT_VERSION
#define RADSCAT_VERSION "unknown"
#endif

namespace radscat::cli {

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int n = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &n, EVP_sha256(), nullptr))
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < n; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

Run::Run(std::string command, std::filesystem::path out_dir)
    : command_(std::move(command)), out_dir_(std::move(out_dir)), t0_(std::chrono::steady_clock::now()) {}

std::string Run::read_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string bytes = ss.str();
  inputs_.push_back({{"path", path}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
  return bytes;
}

void Run::write(const std::string& name, const std::string& bytes) {
  std::filesystem::create_directories(out_dir_);
  const auto p = path(name);
  std::ofstream out(p, std::ios::binary);
  out << bytes;
  if (!out) throw std::runtime_error("cannot write " + p.string());
  outputs_.push_back({{"path", p.string()}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
}

void Run::write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

void Run::finish(const nlohmann::json& config, const std::vector<std::string>& argv) {
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  nlohmann::json m;
  m["schema"] = "radscat.manifest/1";
  m["command"] = command_;
  m["argv"] = argv;
  m["version"] = RADSCAT_VERSION;
  m["config"] = config;
  m["inputs"] = inputs_;
  m["outputs"] = outputs_;
  m["wall_seconds"] = wall;
  std::filesystem::create_directories(out_dir_);
  std::string name = command_;
  for (auto& c : name)
    if (c == ' ') c = '_';
  std::ofstream out(path(name + ".manifest.json"));
  out << m.dump(2) << "\n";
}

std::string csv_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string gnuplot_script(const std::string& title, const std::string& png, const std::string& body) {
  std::ostringstream os;
  os << "# gnuplot script; run from the output directory\n"
     << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set title '" << title << "'\n"
     << "set terminal pngcairo size 900,600\n"
     << "set output '" << png << "'\n"
     << body;
  if (body.empty() || body.back() != '\n') os << "\n";
  return os.str();
}

}  // namespace radscat::cli
