#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "radscat/classical.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("radscat_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Result run(const std::string& args) {
  const auto err = scratch("stderr") / "err.txt";
  const std::string cmd = std::string(RADSCAT_CLI) + " " + args + " 2>" + err.string();
  FILE* p = ::popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  for (size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;) out.append(buf, n);
  const int status = ::pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out, slurp(err)};
}

fs::path cos_problem(const fs::path& dir) {
  const auto p = dir / "cos.json";
  std::ofstream(p) << R"({"v0": [[1, 1.0, 0.0]], "circumference": 6.283185307179586})";
  return p;
}

// Output path -> sha256, from a manifest.
std::map<std::string, std::string> output_hashes(const fs::path& manifest, const fs::path& dir) {
  std::map<std::string, std::string> h;
  const auto m = json::parse(slurp(manifest));
  for (const auto& o : m["outputs"])
    h[fs::relative(o["path"].get<std::string>(), dir).string()] = o["sha256"];
  return h;
}

}  // namespace

TEST(Cli, ClassifyMatchesLibrary) {
  const auto d = scratch("classify");
  const auto prob = cos_problem(d);
  const auto r = run("--out " + d.string() + " classify --problem " + prob.string() + " --lambda 5");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["schema"], "radscat.classify/1");
  const auto& pts = j["radial_points"];
  ASSERT_EQ(pts.size(), 4u);

  const radscat::BoundaryData b({{1, 1.0, 0.0}}, {}, 2 * M_PI);
  const auto ref = radscat::radial_points(b, 5.0);
  ASSERT_EQ(ref.size(), pts.size());
  for (size_t i = 0; i < ref.size(); ++i) {
    EXPECT_EQ(pts[i]["y"].get<double>(), ref[i].crit.y_c);
    EXPECT_EQ(pts[i]["nu"].get<double>(), ref[i].nu_t);
    EXPECT_EQ(pts[i]["kind"], radscat::radial_kind_name(ref[i].kind));
    EXPECT_EQ(pts[i]["r1"].get<double>(), ref[i].r1.real());
    EXPECT_EQ(pts[i]["r2"].get<double>(), ref[i].r2.real());
    EXPECT_EQ(pts[i]["resonant"].get<bool>(), ref[i].resonant);
  }
  EXPECT_EQ(json::parse(slurp(d / "classify.json")), j);
  EXPECT_TRUE(fs::exists(d / "classify.manifest.json"));
}

TEST(Cli, UnknownFlagIsUsageError) {
  const auto d = scratch("usage");
  const auto prob = cos_problem(d);
  EXPECT_EQ(run("classify --problem " + prob.string() + " --lambda 5 --no-such-flag").code, 2);
  EXPECT_EQ(run("no-such-command").code, 2);
  EXPECT_EQ(run("classify --problem " + prob.string()).code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST(Cli, NumericalFailureIsJsonOnStderr) {
  const auto d = scratch("numerical");
  const auto prob = cos_problem(d);
  // No center above lambda_Hess.
  const auto r = run("--out " + d.string() + " expand center --problem " + prob.string() + " --lambda 5");
  EXPECT_EQ(r.code, 1);
  const auto e = json::parse(r.err);
  EXPECT_EQ(e["schema"], "radscat.error/1");
  EXPECT_EQ(e["error"], "WrongKind");
  EXPECT_FALSE(e["message"].get<std::string>().empty());
}

TEST(Cli, AcceptFastTable) {
  const auto d = scratch("accept");
  const auto r = run("--out " + d.string() + " accept --tier fast");
  std::istringstream lines(r.out);
  std::vector<int> ids;
  bool all_pass = true;
  for (std::string line; std::getline(lines, line);) {
    int id = 0;
    char status[8] = {};
    if (std::sscanf(line.c_str(), "%4s [%d]", status, &id) == 2) {
      ids.push_back(id);
      all_pass = all_pass && std::string(status) == "PASS";
    }
  }
  EXPECT_EQ(ids, (std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8}));
  EXPECT_EQ(r.code, all_pass ? 0 : 1);
  const auto j = json::parse(slurp(d / "accept.json"));
  EXPECT_EQ(j["criteria"].size(), 8u);
}

TEST(Cli, ConfigFileBelowFlags) {
  const auto d = scratch("config");
  const auto prob = cos_problem(d);
  const auto cfg = d / "run.toml";
  std::ofstream(cfg) << "root-tol = 1e-11\n[classify]\nlambda = 0.5\n";
  auto r = run("--config " + cfg.string() + " --out " + d.string() + " classify --problem " + prob.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["lambda"].get<double>(), 0.5);
  auto m = json::parse(slurp(d / "classify.manifest.json"));
  EXPECT_EQ(m["config"]["tolerances"]["root_tol"].get<double>(), 1e-11);

  r = run("--config " + cfg.string() + " --root-tol 1e-10 --out " + d.string() + " classify --problem " +
          prob.string() + " --lambda 5");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["lambda"].get<double>(), 5.0);
  m = json::parse(slurp(d / "classify.manifest.json"));
  EXPECT_EQ(m["config"]["tolerances"]["root_tol"].get<double>(), 1e-10);
  EXPECT_EQ(m["config"]["classify"]["lambda"], "5");
}

TEST(Cli, ManifestRecordsInputsAndOutputs) {
  const auto d = scratch("manifest");
  const auto prob = cos_problem(d);
  ASSERT_EQ(run("--out " + d.string() + " eikonal --problem " + prob.string() + " --lambda 5 --samples 101").code, 0);
  const auto m = json::parse(slurp(d / "eikonal.manifest.json"));
  EXPECT_EQ(m["schema"], "radscat.manifest/1");
  EXPECT_EQ(m["command"], "eikonal");
  EXPECT_EQ(m["inputs"].size(), 1u);
  EXPECT_EQ(m["inputs"][0]["bytes"].get<size_t>(), fs::file_size(prob));
  for (const auto& o : m["outputs"]) EXPECT_EQ(fs::file_size(o["path"].get<std::string>()), o["bytes"].get<size_t>());
  EXPECT_TRUE(m["config"].contains("tolerances"));
  EXPECT_GE(m["wall_seconds"].get<double>(), 0.0);
  // CSV header and one row per sample.
  std::istringstream csv(slurp(d / "eikonal.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "y,Phi,dPhi,residual");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 101);
}

// Same command, different job counts and repeated runs: identical output bytes.
TEST(Cli, DeterministicOutputs) {
  const auto base = scratch("determinism");
  const auto prob = cos_problem(base);
  const std::vector<std::string> cmds = {
      "flow --problem " + prob.string() + " --lambda 5 --random 200 --seed 11",
      "morse --problem " + prob.string() + " --lambda 5",
      "expand center --problem " + prob.string() + " --lambda 0.5 --coeffs 1,0:0.5 --nx 64 --ny 32 --residual",
      "oracle-solve --problem " + prob.string() + " --lambda 2 --ny 32 --x-min 0.02",
  };
  for (const auto& c : cmds) {
    std::vector<std::map<std::string, std::string>> hashes;
    for (int jobs : {1, 4, 4}) {
      const auto d = base / std::to_string(hashes.size());
      fs::remove_all(d);
      const auto r = run("--jobs " + std::to_string(jobs) + " --out " + d.string() + " " + c);
      ASSERT_EQ(r.code, 0) << c << "\n" << r.err;
      for (const auto& e : fs::directory_iterator(d))
        if (e.path().string().ends_with(".manifest.json"))
          hashes.push_back(output_hashes(e.path(), d));
    }
    ASSERT_EQ(hashes.size(), 3u);
    EXPECT_FALSE(hashes[0].empty());
    EXPECT_EQ(hashes[0], hashes[1]) << c;
    EXPECT_EQ(hashes[1], hashes[2]) << c;
  }
}
