#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "stablelike/runner.hpp"

int main(int argc, char** argv) {
  using namespace stablelike;
  CLI::App app{"Numerical experiments for stable-like SDEs"};
  app.require_subcommand(1);

  CliOverrides cli;
  std::string config_path;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;

  for (const auto& name : subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "64-bit seed");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  auto* sub = app.get_subcommands().front();
  if (sub->count("--config")) cli.config_path = config_path;
  if (sub->count("--seed")) cli.seed = seed;
  if (sub->count("--jobs")) cli.jobs = jobs;
  if (sub->count("--out")) cli.out = out;

  RunResult r = run_from_cli(sub->get_name(), cli);
  std::cout << sub->get_name() << ": " << r.status;
  if (!r.out_dir.empty()) std::cout << " (" << r.out_dir << ")";
  std::cout << "\n";
  if (!r.message.empty()) std::cerr << r.message << "\n";
  return r.exit_code;
}
