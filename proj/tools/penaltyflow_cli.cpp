#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "penaltyflow/experiment.hpp"

using namespace penaltyflow;

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> out;
  std::optional<double> tmax;
  std::optional<double> tol;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  bool plot = false;
  std::optional<std::string> mode;
};

RunConfig load_run(const Flags& f) {
  RunConfig c = run_config_from_json(load_json_file(f.config));
  if (f.out) c.output_dir = *f.out;
  if (f.tmax) c.set_horizon(*f.tmax);
  if (f.tol) c.set_tolerance(*f.tol);
  if (f.plot) c.plot = true;
  return c;
}

CheckHConfig load_check_h(const Flags& f) {
  CheckHConfig c = check_h_config_from_json(load_json_file(f.config));
  if (f.out) c.output_dir = *f.out;
  if (f.tmax) {
    if (!(*f.tmax > 0.0)) throw ConfigError("--tmax: must be positive");
    c.t_max = *f.tmax;
  }
  if (f.mode) c.mode = parse_h_mode(*f.mode, "--mode");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalty-driven second-order dynamics: simulation and diagnostics"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON config file")->required();
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--tmax", f.tmax, "time horizon");
  };
  auto* run = app.add_subcommand("run", "integrate one problem and write trajectory, energy and report");
  common(run);
  run->add_option("--tol", f.tol, "integrator relative tolerance");
  run->add_flag("--plot", f.plot, "also write trajectory.svg");

  auto* check_h = app.add_subcommand("check-h", "integrability of the conjugate gap for each p");
  common(check_h);
  check_h->add_option("--mode", f.mode, "closed_form or quadrature");

  auto* compare = app.add_subcommand("compare", "second-order system vs first-order flow");
  common(compare);
  compare->add_option("--tol", f.tol, "integrator relative tolerance");

  auto* sweep = app.add_subcommand("sweep", "terminal distance over a (gamma, alpha) grid");
  common(sweep);
  sweep->add_option("--tol", f.tol, "integrator relative tolerance");
  sweep->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(load_run(f), std::cerr);
    if (check_h->parsed()) return cmd_check_h(load_check_h(f), std::cout);
    if (compare->parsed()) return cmd_compare(load_run(f), std::cerr);
    if (sweep->parsed()) return cmd_sweep(load_run(f), f.workers, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_error;
  } catch (const ConjugateUnavailable& e) {
    std::cerr << "unsupported: " << e.what() << '\n';
    return exit_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_error;
  }
  return exit_error;
}
