// fibernoise: run | fit | verify | units
//
// Errors are reported on stderr as one line
//     fibernoise: error: <category>: <message>
// with exit status 2 (configuration or input data), 3 (simulation) or 4 (I/O).

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fibernoise/commands.hpp"
#include "fibernoise/errors.hpp"

namespace {

void add_common(CLI::App* cmd, std::optional<std::string>& config,
                std::optional<std::string>& out) {
  cmd->add_option("--config", config, "configuration file");
  cmd->add_option("--out", out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fibernoise;
  CLI::App app{"Stochastic simulation of quantum noise in optical fibers"};
  app.require_subcommand(1);

  CommandOptions o;
  std::optional<std::string> config, out, input;
  std::optional<std::uint64_t> seed;
  std::optional<long long> trajectories;
  std::optional<int> threads, terms;
  std::optional<std::string> unit;

  auto* run = app.add_subcommand("run", "propagate an ensemble and write observables");
  add_common(run, config, out);
  run->add_option("--seed", seed, "master seed (overrides run.seed)");
  run->add_option("--trajectories", trajectories, "trajectory count (overrides run.trajectories)");
  run->add_option("--threads", threads, "worker threads (overrides FIBERNOISE_THREADS and run.threads)");

  auto* fit = app.add_subcommand("fit", "fit a Lorentzian response model to a Raman gain table");
  add_common(fit, config, out);
  fit->add_option("--input", input, "two- or three-column gain table (overrides fit.input)");
  fit->add_option("--terms", terms, "number of Lorentzian terms (overrides fit.terms)");
  fit->add_option("--units", unit, "frequency unit of the table: dimensionless, THz or cm-1");

  auto* verify = app.add_subcommand("verify", "check every noise generator against its target correlations");
  add_common(verify, config, out);
  verify->add_option("--seed", seed, "master seed (overrides run.seed)");

  auto* units = app.add_subcommand("units", "print the dimensionless-unit report");
  add_common(units, config, out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e);
    return status == 0 ? 0 : 2;
  }

  if (config) o.config = *config;
  if (out) o.out = *out;
  if (input) o.input = *input;
  o.seed = seed;
  o.trajectories = trajectories;
  o.threads = threads;
  o.terms = terms;
  o.frequency_unit = unit;

  try {
    if (run->parsed()) return cmd_run(o, std::cout);
    if (fit->parsed()) return cmd_fit(o, std::cout);
    if (verify->parsed()) return cmd_verify(o, std::cout);
    return cmd_units(o, std::cout);
  } catch (const Error& e) {
    std::cerr << "fibernoise: error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "fibernoise: error: internal: " << e.what() << '\n';
    return 3;
  }
}
