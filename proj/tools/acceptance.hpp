#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace radscat::accept {

enum class Tier { Fast, Full };

const char* tier_name(Tier t);

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Outcome {
  int id = 0;
  std::string title;
  Tier tier = Tier::Fast;
  double seconds = 0.0;
  double time_limit = 0.0;  // 0: none
  std::vector<Check> checks;
  std::vector<std::pair<std::string, double>> metrics;
  std::string error;  // exception text when the run aborted

  bool pass() const;
  void check(const std::string& name, bool ok, const std::string& detail = {});
  void metric(const std::string& name, double v) { metrics.emplace_back(name, v); }
};

struct Criterion {
  int id;
  const char* title;
  Tier tier;
  double time_limit;  // seconds, 0: none
  std::function<void(Outcome&, int jobs)> run;
};

const std::vector<Criterion>& criteria();

// Criteria in `tier` (Full includes Fast), run in id order.
std::vector<Outcome> run_suite(Tier tier, int jobs = 1, const std::vector<int>& only = {});
Outcome run_one(const Criterion& c, int jobs = 1);

std::string summary_line(const Outcome& o);
// Failed checks with their details, one per line.
std::string failure_details(const Outcome& o);

}  // namespace radscat::accept
