#include "bubbles/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <thread>

int main(int argc, char** argv) {
  CLI::App app{"Small double-bubble expansions in Riemannian charts"};
  app.require_subcommand(1);
  std::string config, out;
  int jobs = 1;
  for (const auto& name : bubbles::cli::commands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config,-c", config, "key = value configuration file");
    sub->add_option("--out,-o", out, "output directory (stdout when omitted)");
    sub->add_option("--jobs,-j", jobs, "worker threads; 0 uses all cores")->check(CLI::Range(0, 1024));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : bubbles::cli::kConfigError;
  }
  if (jobs == 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return bubbles::cli::run(app.get_subcommands().front()->get_name(), config, out, jobs, std::cout, std::cerr);
}
