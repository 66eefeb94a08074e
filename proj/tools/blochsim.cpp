#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "blochsim/cli/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bloch oscillation simulator: band structure, DNLS dynamics and continuum cross-checks"};
  std::string config;
  std::string output;
  unsigned jobs = 0;
  app.add_option("config", config, "experiment configuration file")->required();
  app.add_option("--output", output, "output directory (overrides output_dir in the config)");
  app.add_option("--jobs", jobs, "worker threads for sweeps and quadratures (0 = all cores)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : blochsim::cli::exit_config;
  }

  blochsim::cli::RunOptions opt;
  if (!output.empty()) opt.output_dir = output;
  opt.jobs = jobs;
  try {
    const auto r = blochsim::cli::run(config, opt);
    std::cout << r.summary.text() << "written to " << r.output_dir.string() << "\n";
    return blochsim::cli::exit_ok;
  } catch (const std::exception& e) {
    const int code = blochsim::cli::exit_code_for(e);
    std::cerr << "blochsim: " << e.what() << "\n";
    return code;
  }
}
