#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mottlab/conductivity.hpp"
#include "mottlab/lab/config.hpp"
#include "mottlab/lab/experiments.hpp"
#include "mottlab/lab/persist.hpp"
#include "mottlab/network.hpp"
#include "mottlab/solver.hpp"

using namespace mottlab;
using namespace mottlab::lab;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "override run.master_seed");
  cmd->add_option("--out", opts.out, "override run.output_dir");
  cmd->add_option("--workers", opts.workers, "override run.workers");
}

ExperimentConfig load(const CommonOptions& opts) {
  ExperimentConfig c = load_config(opts.config_path);
  if (opts.seed) c.run.master_seed = *opts.seed;
  if (opts.out) c.run.output_dir = *opts.out;
  if (opts.workers) c.run.workers = *opts.workers;
  c.validate();
  return c;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

void emit(const OutputDir& out, const std::string& name, const std::string& content) {
  if (out.enabled()) {
    out.write_atomic(name, content);
    std::cout << "wrote " << (out.root() / name).string() << '\n';
  } else {
    std::cout << content;
  }
}

int cmd_generate(const CommonOptions& opts, int realization) {
  const ExperimentConfig c = load(opts);
  const auto seed = stream_seed(c.run.master_seed, Stream::Stripe, realization);
  const MarkedConfiguration sample = sample_stripe_configuration(c, seed);
  emit(OutputDir(c.run.output_dir), "configuration.json", to_json(sample).dump(1) + "\n");
  return 0;
}

int cmd_solve(const CommonOptions& opts, int realization, std::optional<double> ell,
              std::optional<double> beta) {
  const ExperimentConfig c = load(opts);
  const double ell_v = ell.value_or(c.geometry.ells.back());
  const double beta_v = beta.value_or(c.model.beta);
  const auto seed = stream_seed(c.run.master_seed, Stream::Stripe, realization);
  const MarkedConfiguration sample = sample_stripe_configuration(c, seed);
  const StripeNetwork net = build_stripe_network(sample, c.kernel(beta_v), ell_v, c.truncation());
  const PotentialField pot = solve_potential(net, c.run.solver_tol);
  const ConductivityReport report =
      analyze_conductivity(net, pot, c.run.solver_tol, {seed, beta_v, c.model.alpha, c.model.gamma});

  const OutputDir out(c.run.output_dir);
  if (out.enabled()) {
    std::ostringstream nodes, edges, potential;
    write_nodes(nodes, net);
    write_edges(edges, net);
    write_potential_csv(potential, net, pot);
    emit(out, "nodes.txt", nodes.str());
    emit(out, "edges.txt", edges.str());
    emit(out, "potential.csv", potential.str());
  }
  std::ostringstream row;
  row << conductivity_csv_header() << '\n';
  write_conductivity_row(row, report);
  std::cout << row.str();
  std::cerr << "nodes=" << net.size() << " edges=" << net.edges.size()
            << " cg_iters=" << pot.iterations << " residual=" << pot.residual_norm << '\n';
  return 0;
}

int cmd_sigma(const CommonOptions& opts) {
  const ExperimentConfig c = load(opts);
  const OutputDir out(c.run.output_dir);
  Manifest manifest(out, c, "sigma");
  const auto cells = run_stripe_cells(c, c.model.beta, c.geometry.ells, out, &manifest);
  manifest.write();
  emit(out, "sigma.csv", sigma_csv(c, cells));
  return 0;
}

int cmd_corrector(const CommonOptions& opts) {
  const ExperimentConfig c = load(opts);
  const OutputDir out(c.run.output_dir);
  Manifest manifest(out, c, "corrector");
  const EnsembleDiffusion s = run_corrector_ensemble(c, out, &manifest);
  manifest.write();
  emit(out, "corrector.csv", corrector_csv(c, s));
  std::cerr << "mean m*D11 = " << format_double(s.mD11) << " +- "
            << format_double(s.mD11_stderr) << '\n';
  return 0;
}

int cmd_walk(const CommonOptions& opts) {
  const ExperimentConfig c = load(opts);
  const OutputDir out(c.run.output_dir);
  Manifest manifest(out, c, "walk");
  const WalkSummary s = run_walk_ensemble(c, out, &manifest);
  manifest.write();
  print_warnings(s.warnings);
  emit(out, "walk.csv", walk_csv(c, s));
  std::cerr << "mean m*D11 = " << format_double(s.mD11) << " +- "
            << format_double(s.mD11_stderr) << '\n';
  return 0;
}

int cmd_sweep(const CommonOptions& opts) {
  const ExperimentConfig c = load(opts);
  const Theorem1Result r = run_theorem1_sweep(c);
  print_warnings(r.warnings);
  std::cout << theorem1_csv(c, r);
  return 0;
}

int cmd_profile(const CommonOptions& opts) {
  const ExperimentConfig c = load(opts);
  const Theorem2Result r = run_theorem2_check(c);
  print_warnings(r.warnings);
  std::cout << "ell,eps,n,median_err,q25,q75\n";
  for (const auto& row : r.rows) {
    std::cout << format_double(row.ell) << ',' << format_double(row.eps) << ',' << row.n << ','
              << format_double(row.median_error) << ',' << format_double(row.q25) << ','
              << format_double(row.q75) << '\n';
  }
  std::cout << "log-log slope " << format_double(r.trend.slope) << ", r2 "
            << format_double(r.trend.r2) << '\n';
  return 0;
}

int cmd_mott(const CommonOptions& opts) {
  const ExperimentConfig c = load(opts);
  const MottFit fit = run_mott_scaling(c);
  print_warnings(fit.warnings);
  std::cout << "beta,beta_theta,n_ok,median_sigma,flag\n";
  for (const auto& p : fit.points) {
    std::cout << format_double(p.beta) << ',' << format_double(p.abscissa) << ',' << p.n_ok
              << ',' << format_double(p.median_sigma) << ',' << p.flag << '\n';
  }
  std::cout << "theta " << format_double(fit.theta) << ", kappa " << format_double(fit.kappa)
            << ", intercept " << format_double(fit.intercept) << ", r2 "
            << format_double(fit.r2) << ", points " << fit.n_used << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Miller-Abrahams random resistor networks and the Mott random walk"};
  app.set_version_flag("--version", std::string(MOTTLAB_VERSION));
  app.require_subcommand(1);

  CommonOptions opts;
  int realization = 0;
  std::optional<double> ell;
  std::optional<double> beta;

  auto* generate = app.add_subcommand("generate", "sample one marked configuration");
  add_common(generate, opts);
  generate->add_option("--realization", realization, "realization index")->check(CLI::NonNegativeNumber);

  auto* solve = app.add_subcommand("solve", "solve one stripe and write network and potential");
  add_common(solve, opts);
  solve->add_option("--realization", realization, "realization index")->check(CLI::NonNegativeNumber);
  solve->add_option("--ell", ell, "stripe side (default: largest configured)");
  solve->add_option("--beta", beta, "inverse temperature (default: model.beta)");

  auto* sigma = app.add_subcommand("sigma", "conductivity for every seed and ell");
  add_common(sigma, opts);
  auto* corrector = app.add_subcommand("corrector", "corrector ensemble on the torus");
  add_common(corrector, opts);
  auto* walk = app.add_subcommand("walk", "Mott random walk diffusion estimate");
  add_common(walk, opts);
  auto* sweep = app.add_subcommand("sweep", "rescaled conductivity against m D_11");
  add_common(sweep, opts);
  auto* profile = app.add_subcommand("profile", "potential profile against the linear profile");
  add_common(profile, opts);
  auto* mott = app.add_subcommand("mott", "Mott-law fit over the beta grid");
  add_common(mott, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) return cmd_generate(opts, realization);
    if (*solve) return cmd_solve(opts, realization, ell, beta);
    if (*sigma) return cmd_sigma(opts);
    if (*corrector) return cmd_corrector(opts);
    if (*walk) return cmd_walk(opts);
    if (*sweep) return cmd_sweep(opts);
    if (*profile) return cmd_profile(opts);
    if (*mott) return cmd_mott(opts);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
