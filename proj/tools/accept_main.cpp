#include <CLI11.hpp>
#include <iostream>

#include "acceptance.hpp"

using namespace radscat::accept;

int main(int argc, char** argv) {
  CLI::App app{"radscat acceptance suite"};
  std::string tier = "full";
  int jobs = 1;
  std::vector<int> only;
  bool verbose = false;
  app.add_option("--tier", tier, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--only", only, "criterion ids");
  app.add_flag("-v,--verbose", verbose, "print measured values");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  bool ok = true;
  for (const auto& c : criteria()) {
    if (tier == "fast" && c.tier != Tier::Fast) continue;
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto o = run_one(c, jobs);
    std::cout << summary_line(o) << "\n" << failure_details(o);
    if (verbose)
      for (const auto& [k, v] : o.metrics) std::cout << "      " << k << " = " << v << "\n";
    std::cout << std::flush;
    ok = ok && o.pass();
  }
  return ok ? 0 : 1;
}
