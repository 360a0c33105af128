#include "mottlab/lab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <tuple>

#include "mottlab/network.hpp"
#include "mottlab/rng.hpp"
#include "mottlab/solver.hpp"

namespace mottlab::lab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string join(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) line += ',';
    line += fields[k];
  }
  return line;
}

std::string fmt(double v) { return format_double(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }

// Model columns repeated on every emitted row.
std::string model_header() { return "d,alpha,gamma_loc,master_seed"; }
std::string model_fields(const ExperimentConfig& c) {
  return join({fmt(c.model.dimension), fmt(c.model.alpha), fmt(c.model.gamma),
               fmt(c.run.master_seed)});
}

// Runs job(k) for k < n on up to `workers` threads; the first exception is
// rethrown after all threads stop.
template <class Job>
void run_pool(std::size_t n, int workers, Job job) {
  const std::size_t n_threads =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (n_threads <= 1) {
    for (std::size_t k = 0; k < n; ++k) job(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> threads;
  for (std::size_t t = 0; t < n_threads; ++t) {
    threads.emplace_back([&] {
      while (!failed) {
        const std::size_t k = next++;
        if (k >= n) return;
        try {
          job(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  threads.clear();
  if (error) std::rethrow_exception(error);
}

// ---- stripe journal ------------------------------------------------------

constexpr const char* kStripeJournal = "journal_stripe.csv";
constexpr const char* kStripeJournalHeader =
    "realization,seed,ell,beta,sigma_boundary,sigma_energy,sigma_cross_min,sigma_cross_max,"
    "rescaled,cg_iters,condition_proxy,profile_err,m_hat,nodes,status";
constexpr std::size_t kStripeJournalFields = 15;

std::string journal_line(const StripeCell& c) {
  return join({fmt(c.realization), fmt(c.seed), fmt(c.ell), fmt(c.beta), fmt(c.sigma_boundary),
               fmt(c.sigma_energy), fmt(c.cross_min), fmt(c.cross_max), fmt(c.rescaled),
               fmt(c.cg_iters), fmt(c.condition_proxy), fmt(c.profile_error), fmt(c.m_hat),
               fmt(c.nodes), to_string(c.status)});
}

CellStatus cell_status_from_string(const std::string& s) {
  if (s == "ok") return CellStatus::Ok;
  if (s == "not_converged") return CellStatus::NotConverged;
  if (s == "inexact") return CellStatus::Inexact;
  throw InvalidArgument("unknown cell status " + s);
}

StripeCell cell_from_row(const std::vector<std::string>& f) {
  StripeCell c;
  c.realization = std::stoi(f[0]);
  c.seed = std::stoull(f[1]);
  c.ell = std::stod(f[2]);
  c.beta = std::stod(f[3]);
  c.sigma_boundary = std::stod(f[4]);
  c.sigma_energy = std::stod(f[5]);
  c.cross_min = std::stod(f[6]);
  c.cross_max = std::stod(f[7]);
  c.rescaled = std::stod(f[8]);
  c.cg_iters = std::stoi(f[9]);
  c.condition_proxy = std::stod(f[10]);
  c.profile_error = std::stod(f[11]);
  c.m_hat = std::stod(f[12]);
  c.nodes = std::stoull(f[13]);
  c.status = cell_status_from_string(f[14]);
  return c;
}

using CellKey = std::tuple<std::uint64_t, std::string, std::string>;

CellKey key_of(std::uint64_t seed, double ell, double beta) {
  return {seed, fmt(ell), fmt(beta)};
}

std::string cell_name(std::uint64_t seed, double ell, double beta) {
  return "stripe/seed=" + fmt(seed) + ",ell=" + fmt(ell) + ",beta=" + fmt(beta);
}

void sort_cells(std::vector<StripeCell>& cells) {
  std::sort(cells.begin(), cells.end(), [](const StripeCell& a, const StripeCell& b) {
    return std::tie(a.beta, a.ell, a.realization) < std::tie(b.beta, b.ell, b.realization);
  });
}

std::vector<double> ok_values(std::span<const StripeCell> cells, double ell,
                              double StripeCell::*field) {
  std::vector<double> v;
  for (const auto& c : cells) {
    if (c.ell == ell && c.status == CellStatus::Ok) v.push_back(c.*field);
  }
  return v;
}

// ---- corrector / walk journals --------------------------------------------

constexpr const char* kCorrectorJournal = "journal_corrector.csv";
constexpr const char* kWalkJournal = "journal_walk.csv";

std::string corrector_journal_header(int d) {
  std::string h = "realization,seed,m_hat";
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) h += ",D" + std::to_string(a + 1) + std::to_string(b + 1);
  }
  return h;
}

std::string corrector_journal_line(int r, const EnsembleRealization& e) {
  std::vector<std::string> f{fmt(r), fmt(e.seed), fmt(e.intensity)};
  for (int a = 0; a < e.D.rows(); ++a) {
    for (int b = 0; b < e.D.cols(); ++b) f.push_back(fmt(e.D(a, b)));
  }
  return join(f);
}

std::string per_direction(const std::string& name, int d) {
  std::string h;
  for (int a = 1; a <= d; ++a) h += "," + name + std::to_string(a);
  return h;
}

std::string walk_journal_header(int d) {
  return "environment,seed,m_hat,n_walkers,mean_jumps" + per_direction("slope_", d) +
         per_direction("D_", d) + per_direction("stderr_", d);
}

std::string walk_journal_line(int e, const WalkCell& w) {
  std::vector<std::string> f{fmt(e), fmt(w.seed), fmt(w.intensity), fmt(w.n_walkers),
                             fmt(w.mean_jumps)};
  for (const auto* v : {&w.slope, &w.D, &w.stderr_}) {
    for (double x : *v) f.push_back(fmt(x));
  }
  return join(f);
}

Box torus_window(const ExperimentConfig& config) {
  return Box::cube(config.model.dimension, 0.0, config.geometry.torus_L);
}

// Writes the manifest whether the recipe finishes or throws.
template <class Body>
auto with_manifest(const OutputDir& out, const ExperimentConfig& config,
                   const std::string& command, Body body) {
  Manifest manifest(out, config, command);
  try {
    auto result = body(manifest);
    manifest.write();
    return result;
  } catch (...) {
    manifest.write();
    throw;
  }
}

}  // namespace

const char* to_string(CellStatus s) {
  switch (s) {
    case CellStatus::Ok: return "ok";
    case CellStatus::NotConverged: return "not_converged";
    case CellStatus::Inexact: return "inexact";
  }
  return "?";
}

double StripeCell::formula_spread() const {
  const double hi = std::max({sigma_boundary, sigma_energy, cross_max});
  const double lo = std::min({sigma_boundary, sigma_energy, cross_min});
  return (hi - lo) / std::abs(sigma_energy);
}

double ReferenceProfile::operator()(const Point& x) const {
  return std::clamp(x[0] + 0.5, 0.0, 1.0);
}

double profile_l2_error(const StripeNetwork& net, std::span<const double> values) {
  require(values.size() == net.size(), "potential size does not match the network");
  const double eps = 1.0 / net.ell;
  const ReferenceProfile psi;
  double sum = 0.0;
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (net.nodes[i].cls != NodeClass::Interior) continue;
    Point x = net.nodes[i].x;
    for (int k = 0; k < net.dimension; ++k) x[k] *= eps;
    const double diff = values[i] - psi(x);
    sum += diff * diff;
  }
  return std::sqrt(std::pow(eps, net.dimension) * sum);
}

std::uint64_t stream_seed(std::uint64_t master, Stream stream, std::uint64_t index) {
  return derive_seed(derive_seed(master, static_cast<std::uint64_t>(stream)), index);
}

MarkedConfiguration sample_stripe_configuration(const ExperimentConfig& config,
                                                std::uint64_t seed) {
  const double ell = config.geometry.ells.back();
  const double depth = stripe_depth(config.kernel(), ell, config.truncation());
  return sample_configuration(config.process_spec(),
                              stripe_window(config.model.dimension, ell, depth), seed);
}

StripeCell solve_stripe_cell(const ExperimentConfig& config, const MarkedConfiguration& sample,
                             int realization, double ell, double beta,
                             bool tolerate_inexact) {
  StripeCell cell;
  cell.realization = realization;
  cell.seed = sample.seed;
  cell.ell = ell;
  cell.beta = beta;
  const StripeNetwork net = build_stripe_network(sample, config.kernel(beta), ell,
                                                 config.truncation());
  cell.nodes = net.size();
  cell.m_hat = static_cast<double>(net.count(NodeClass::Interior)) /
               std::pow(ell, config.model.dimension);
  PotentialField potential;
  try {
    potential = solve_potential(net, config.run.solver_tol);
  } catch (const NotConverged& e) {
    cell.status = CellStatus::NotConverged;
    cell.cg_iters = e.iterations();
    const double nan = std::nan("");
    cell.sigma_boundary = cell.sigma_energy = cell.cross_min = cell.cross_max = nan;
    cell.rescaled = cell.condition_proxy = cell.profile_error = nan;
    return cell;
  }
  cell.cg_iters = potential.iterations;
  cell.profile_error = profile_l2_error(net, potential.values);
  const RunTag tag{sample.seed, beta, config.model.alpha, config.model.gamma};
  try {
    const ConductivityReport report =
        analyze_conductivity(net, potential, config.run.solver_tol, tag);
    cell.sigma_boundary = report.sigma_boundary;
    cell.sigma_energy = report.sigma_energy;
    cell.cross_min = report.cross_min();
    cell.cross_max = report.cross_max();
    cell.rescaled = report.rescaled;
    cell.condition_proxy = report.condition_proxy;
  } catch (const EquivalenceFailure&) {
    if (!tolerate_inexact) throw;
    cell.status = CellStatus::Inexact;
    cell.sigma_boundary = sigma_boundary_current(net, potential.values);
    cell.sigma_energy = sigma_energy(net, potential.values);
    cell.cross_min = cell.cross_max = cell.sigma_boundary;
    for (double plane : default_cross_sections(ell)) {
      const double s = sigma_cross_section(net, potential.values, plane);
      cell.cross_min = std::min(cell.cross_min, s);
      cell.cross_max = std::max(cell.cross_max, s);
    }
    cell.rescaled = rescaled_conductivity(cell.sigma_energy, ell, net.dimension);
    cell.condition_proxy = condition_proxy(net);
  }
  return cell;
}

std::vector<StripeCell> run_stripe_cells(const ExperimentConfig& config, double beta,
                                         std::span<const double> ells, const OutputDir& out,
                                         Manifest* manifest, bool tolerate_inexact) {
  std::map<CellKey, StripeCell> done;
  for (const auto& row : out.read_rows(kStripeJournal, kStripeJournalFields)) {
    StripeCell c = cell_from_row(row);
    done[key_of(c.seed, c.ell, c.beta)] = c;
  }

  const int n = config.run.n_realizations;
  std::vector<std::vector<StripeCell>> per_realization(n);
  run_pool(n, config.run.workers, [&](std::size_t r) {
    const std::uint64_t seed = stream_seed(config.run.master_seed, Stream::Stripe, r);
    std::optional<MarkedConfiguration> sample;
    for (double ell : ells) {
      if (auto it = done.find(key_of(seed, ell, beta)); it != done.end()) {
        per_realization[r].push_back(it->second);
        continue;
      }
      const auto t0 = Clock::now();
      if (!sample) sample = sample_stripe_configuration(config, seed);
      StripeCell cell = solve_stripe_cell(config, *sample, static_cast<int>(r), ell, beta,
                                          tolerate_inexact);
      out.append_line(kStripeJournal, kStripeJournalHeader, journal_line(cell));
      if (manifest) manifest->record(cell_name(seed, ell, beta), seconds_since(t0));
      per_realization[r].push_back(cell);
    }
  });

  std::vector<StripeCell> cells;
  for (auto& v : per_realization) cells.insert(cells.end(), v.begin(), v.end());
  sort_cells(cells);
  return cells;
}

EnsembleDiffusion run_corrector_ensemble(const ExperimentConfig& config, const OutputDir& out,
                                        Manifest* manifest) {
  const int d = config.model.dimension;
  const double L = config.geometry.torus_L;
  const double R = config.torus_radius();
  const std::size_t n_fields = 3 + static_cast<std::size_t>(d * d);
  std::map<int, EnsembleRealization> done;
  for (const auto& row : out.read_rows(kCorrectorJournal, n_fields)) {
    EnsembleRealization e;
    e.seed = std::stoull(row[1]);
    e.intensity = std::stod(row[2]);
    e.D.resize(d, d);
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) e.D(a, b) = std::stod(row[3 + a * d + b]);
    }
    done[std::stoi(row[0])] = e;
  }

  const int n = config.run.corrector_realizations;
  std::vector<EnsembleRealization> reals(n);
  run_pool(n, config.run.workers, [&](std::size_t r) {
    const std::uint64_t seed = stream_seed(config.run.master_seed, Stream::Corrector, r);
    if (auto it = done.find(static_cast<int>(r)); it != done.end() && it->second.seed == seed) {
      reals[r] = it->second;
      return;
    }
    const auto t0 = Clock::now();
    reals[r] = corrector_realization(config.process_spec(), config.kernel(), L, R, seed,
                                     config.run.solver_tol);
    out.append_line(kCorrectorJournal, corrector_journal_header(d),
                    corrector_journal_line(static_cast<int>(r), reals[r]));
    if (manifest) manifest->record("corrector/seed=" + fmt(seed), seconds_since(t0));
  });

  return summarize_ensemble(std::move(reals), L, R);
}

WalkSummary run_walk_ensemble(const ExperimentConfig& config, const OutputDir& out,
                              Manifest* manifest) {
  const int d = config.model.dimension;
  const double R = config.torus_radius();
  const auto& wc = config.run.walk;
  std::map<int, WalkCell> done;
  for (const auto& row : out.read_rows(kWalkJournal, 5 + 3 * static_cast<std::size_t>(d))) {
    WalkCell w;
    w.seed = std::stoull(row[1]);
    w.intensity = std::stod(row[2]);
    w.n_walkers = std::stoi(row[3]);
    w.mean_jumps = std::stod(row[4]);
    for (int a = 0; a < d; ++a) {
      w.slope.push_back(std::stod(row[5 + a]));
      w.D.push_back(std::stod(row[5 + d + a]));
      w.stderr_.push_back(std::stod(row[5 + 2 * d + a]));
    }
    done[std::stoi(row[0])] = w;
  }

  const int n = wc.environments;
  std::vector<WalkCell> cells(n);
  std::vector<std::vector<std::string>> warnings(n);
  run_pool(n, config.run.workers, [&](std::size_t e) {
    const std::uint64_t seed = stream_seed(config.run.master_seed, Stream::Walk, e);
    if (auto it = done.find(static_cast<int>(e)); it != done.end() && it->second.seed == seed) {
      cells[e] = it->second;
      return;
    }
    const auto t0 = Clock::now();
    const MarkedConfiguration sample =
        sample_configuration(config.process_spec(), torus_window(config), seed);
    const WalkEnvironment env(build_periodic_environment(sample, config.kernel(), R));
    const DiffusionEstimate est = estimate_diffusion(env, wc.walkers_per_environment,
                                                     wc.horizon, derive_seed(seed, 2));
    WalkCell& w = cells[e];
    w.seed = seed;
    w.intensity = empirical_intensity(sample);
    w.n_walkers = est.n_walkers;
    w.slope = est.slope;
    w.D = est.D;
    w.stderr_ = est.stderr_;
    w.mean_jumps = est.mean_jumps;
    warnings[e] = est.warnings;
    out.append_line(kWalkJournal, walk_journal_header(d), walk_journal_line(int(e), w));
    if (manifest) manifest->record("walk/seed=" + fmt(seed), seconds_since(t0));
  });

  WalkSummary summary;
  std::vector<double> mD11;
  std::vector<double> D11;
  std::vector<double> jumps;
  for (const auto& w : cells) {
    mD11.push_back(w.intensity * w.D[0]);
    D11.push_back(w.D[0]);
    jumps.push_back(w.mean_jumps);
  }
  summary.D11 = mean(D11);
  summary.mD11 = mean(mD11);
  if (n > 1) {
    summary.mD11_stderr = stddev(mD11) / std::sqrt(double(n));
  } else {
    summary.mD11_stderr = cells[0].intensity * cells[0].stderr_[0];
  }
  summary.mean_jumps = mean(jumps);
  for (auto& w : warnings) {
    summary.warnings.insert(summary.warnings.end(), w.begin(), w.end());
  }
  summary.cells = std::move(cells);
  return summary;
}

std::string sigma_csv(const ExperimentConfig& config, std::span<const StripeCell> cells) {
  std::string s = conductivity_csv_header() + ",realization,status\n";
  for (const auto& c : cells) {
    s += join({fmt(c.seed), fmt(config.model.dimension), fmt(c.ell), fmt(c.beta),
               fmt(config.model.alpha), fmt(config.model.gamma), fmt(c.sigma_boundary),
               fmt(c.sigma_energy), fmt(c.cross_min), fmt(c.cross_max), fmt(c.rescaled),
               fmt(c.cg_iters), fmt(c.condition_proxy), fmt(c.realization),
               to_string(c.status)});
    s += '\n';
  }
  return s;
}

std::string corrector_csv(const ExperimentConfig& config, const EnsembleDiffusion& summary) {
  const int d = config.model.dimension;
  std::string entries;
  std::string errors;
  for (int a = 1; a <= d; ++a) {
    for (int b = a; b <= d; ++b) {
      entries += ",D_" + std::to_string(a) + std::to_string(b);
      errors += ",stderr_" + std::to_string(a) + std::to_string(b);
    }
  }
  std::string s = "seed," + model_header() + ",beta,L,R,m_hat" + entries +
                  ",offdiag_max" + errors + ",mD11\n";
  for (const auto& e : summary.realizations) {
    std::vector<std::string> f{fmt(e.seed), model_fields(config), fmt(config.model.beta),
                               fmt(summary.L), fmt(summary.R), fmt(e.intensity)};
    double offdiag = 0.0;
    for (int a = 0; a < d; ++a) {
      for (int b = a; b < d; ++b) {
        f.push_back(fmt(e.D(a, b)));
        if (a != b) offdiag = std::max(offdiag, std::abs(e.D(a, b)));
      }
    }
    f.push_back(fmt(offdiag));
    for (int a = 0; a < d; ++a) {
      for (int b = a; b < d; ++b) f.push_back(fmt(summary.stderr_(a, b)));
    }
    f.push_back(fmt(e.intensity * e.D(0, 0)));
    s += join(f) + '\n';
  }
  return s;
}

std::string walk_csv(const ExperimentConfig& config, const WalkSummary& summary) {
  const int d = config.model.dimension;
  std::string s = "seed," + model_header() + ",beta,L,R,T,n_walkers,m_hat" +
                  per_direction("slope_", d) + per_direction("D_", d) +
                  per_direction("stderr_", d) + ",mean_jumps_per_walker,mD11\n";
  for (const auto& w : summary.cells) {
    std::vector<std::string> f{fmt(w.seed),
                               model_fields(config),
                               fmt(config.model.beta),
                               fmt(config.geometry.torus_L),
                               fmt(config.torus_radius()),
                               fmt(config.run.walk.horizon),
                               fmt(w.n_walkers),
                               fmt(w.intensity)};
    for (const auto* v : {&w.slope, &w.D, &w.stderr_}) {
      for (double x : *v) f.push_back(fmt(x));
    }
    f.push_back(fmt(w.mean_jumps));
    f.push_back(fmt(w.intensity * w.D[0]));
    s += join(f) + '\n';
  }
  return s;
}

std::string theorem1_csv(const ExperimentConfig& config, const Theorem1Result& result) {
  std::string s = model_header() +
                  ",beta,ell,n,median_rescaled,q25,q75,median_stderr,mD11_corrector,"
                  "mD11_corrector_stderr,mD11_walk,mD11_walk_stderr\n";
  for (const auto& r : result.rows) {
    s += join({model_fields(config), fmt(config.model.beta), fmt(r.ell), fmt(r.n),
               fmt(r.median), fmt(r.q25), fmt(r.q75), fmt(r.median_stderr),
               fmt(result.corrector.mD11), fmt(result.corrector.mD11_stderr),
               fmt(result.walk.mD11), fmt(result.walk.mD11_stderr)});
    s += '\n';
  }
  return s;
}

std::string zero_diffusivity_warning(const ExperimentConfig& config) {
  const auto& m = config.model;
  if (m.dimension == 1 && m.kernel == "nearest_neighbor") {
    return "finite-range kernel in d=1: any gap longer than the range disconnects the "
           "chain, so D_11 may be 0";
  }
  if (m.process == "lattice" && m.kernel == "nearest_neighbor" && m.nn_range < std::sqrt(2.0)) {
    // Site-percolation thresholds of the hypercubic lattice.
    const double threshold = m.dimension == 2 ? 0.592746 : 0.3116;
    if (m.intensity <= threshold) {
      return "retention probability " + fmt(m.intensity) +
             " is at or below the site-percolation threshold, so D_11 = 0";
    }
  }
  return {};
}

Theorem1Result run_theorem1_sweep(const ExperimentConfig& config) {
  config.validate();
  const OutputDir out(config.run.output_dir);
  return with_manifest(out, config, "sweep", [&](Manifest& manifest) {
    Theorem1Result result;
    result.cells =
        run_stripe_cells(config, config.model.beta, config.geometry.ells, out, &manifest);
    out.write_atomic("sigma.csv", sigma_csv(config, result.cells));

    result.corrector = run_corrector_ensemble(config, out, &manifest);
    out.write_atomic("corrector.csv", corrector_csv(config, result.corrector));
    result.walk = run_walk_ensemble(config, out, &manifest);
    out.write_atomic("walk.csv", walk_csv(config, result.walk));
    result.warnings = result.walk.warnings;

    for (double ell : config.geometry.ells) {
      auto v = ok_values(result.cells, ell, &StripeCell::rescaled);
      Theorem1Row row;
      row.ell = ell;
      row.n = v.size();
      if (v.empty()) {
        result.warnings.push_back("no converged cell at ell=" + fmt(ell));
        row.median = row.q25 = row.q75 = row.median_stderr = std::nan("");
      } else {
        row.median = median(v);
        row.q25 = quantile(v, 0.25);
        row.q75 = quantile(v, 0.75);
        row.median_stderr = v.size() > 1 ? median_stderr(v) : 0.0;
      }
      result.rows.push_back(row);
    }
    out.write_atomic("theorem1.csv", theorem1_csv(config, result));
    return result;
  });
}

Theorem2Result run_theorem2_check(const ExperimentConfig& config) {
  config.validate();
  const OutputDir out(config.run.output_dir);
  return with_manifest(out, config, "profile", [&](Manifest& manifest) {
    Theorem2Result result;
    if (auto w = zero_diffusivity_warning(config); !w.empty()) result.warnings.push_back(w);
    result.cells =
        run_stripe_cells(config, config.model.beta, config.geometry.ells, out, &manifest);

    std::string cells_csv = "seed," + model_header() + ",beta,ell,eps,profile_err,status\n";
    for (const auto& c : result.cells) {
      cells_csv += join({fmt(c.seed), model_fields(config), fmt(c.beta), fmt(c.ell),
                         fmt(1.0 / c.ell), fmt(c.profile_error), to_string(c.status)}) +
                   '\n';
    }
    out.write_atomic("profile.csv", cells_csv);

    std::vector<double> log_eps;
    std::vector<double> log_err;
    for (double ell : config.geometry.ells) {
      auto v = ok_values(result.cells, ell, &StripeCell::profile_error);
      Theorem2Row row;
      row.ell = ell;
      row.eps = 1.0 / ell;
      row.n = v.size();
      if (v.empty()) {
        result.warnings.push_back("no converged cell at ell=" + fmt(ell));
        row.median_error = row.q25 = row.q75 = std::nan("");
      } else {
        row.median_error = median(v);
        row.q25 = quantile(v, 0.25);
        row.q75 = quantile(v, 0.75);
        if (row.median_error > 0.0) {
          log_eps.push_back(std::log(row.eps));
          log_err.push_back(std::log(row.median_error));
        }
      }
      result.rows.push_back(row);
    }
    if (log_eps.size() >= 2) result.trend = linear_fit(log_eps, log_err);

    std::string summary = model_header() + ",beta,ell,eps,n,median_err,q25,q75\n";
    for (const auto& r : result.rows) {
      summary += join({model_fields(config), fmt(config.model.beta), fmt(r.ell), fmt(r.eps),
                       fmt(r.n), fmt(r.median_error), fmt(r.q25), fmt(r.q75)}) +
                 '\n';
    }
    out.write_atomic("profile_summary.csv", summary);
    out.write_atomic("profile_fit.csv",
                     model_header() + ",beta,log_slope,log_intercept,r2,n\n" +
                         join({model_fields(config), fmt(config.model.beta),
                               fmt(result.trend.slope), fmt(result.trend.intercept),
                               fmt(result.trend.r2), fmt(result.trend.n)}) +
                         '\n');
    return result;
  });
}

MottFit run_mott_scaling(const ExperimentConfig& config) {
  config.validate();
  const auto& grid = config.model.beta_grid;
  if (grid.size() < 5) {
    throw InvalidArgument("Mott scaling needs a beta grid of at least 5 points, got " +
                          std::to_string(grid.size()));
  }
  const OutputDir out(config.run.output_dir);
  return with_manifest(out, config, "mott", [&](Manifest& manifest) {
    MottFit fit;
    fit.theta = mott_exponent(config.model.alpha, config.model.dimension);
    const std::vector<double> ells{config.geometry.ells.back()};
    std::vector<double> xs;
    std::vector<double> ys;
    for (double beta : grid) {
      auto cells = run_stripe_cells(config, beta, ells, out, &manifest, true);
      MottPoint p;
      p.beta = beta;
      p.abscissa = std::pow(beta, fit.theta);
      std::vector<double> sigmas;
      std::size_t unusable = 0;
      std::size_t inexact = 0;
      for (const auto& c : cells) {
        const bool usable = c.status == CellStatus::Ok ||
                            (c.status == CellStatus::Inexact &&
                             c.formula_spread() <= kMottSpreadLimit);
        if (!usable) {
          ++unusable;
          continue;
        }
        if (c.status == CellStatus::Inexact) ++inexact;
        sigmas.push_back(c.sigma_energy);
      }
      p.n_ok = sigmas.size();
      p.median_sigma = sigmas.empty() ? 0.0 : median(sigmas);
      if (sigmas.empty()) {
        p.dropped = true;
        p.flag = "no_converged_cell";
      } else if (!(p.median_sigma > 1e-300) || !std::isfinite(p.median_sigma)) {
        p.dropped = true;
        p.flag = "underflow";
      } else if (unusable > 0) {
        p.flag = "partial";
      } else if (inexact > 0) {
        p.flag = "inexact";
      }
      if (!p.dropped) {
        xs.push_back(p.abscissa);
        ys.push_back(std::log(p.median_sigma));
      }
      fit.points.push_back(p);
      fit.cells.insert(fit.cells.end(), cells.begin(), cells.end());
    }
    fit.n_used = xs.size();
    if (xs.size() >= 2) {
      const LinearFit lf = linear_fit(xs, ys);
      fit.kappa = -lf.slope;
      fit.intercept = lf.intercept;
      fit.r2 = lf.r2;
      const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
      if (*hi - *lo < std::log(10.0)) {
        fit.warnings.push_back("sigma varies by less than one decade over the beta grid");
      }
    } else {
      fit.warnings.push_back("fewer than two usable beta points, no fit");
      fit.kappa = fit.intercept = fit.r2 = std::nan("");
    }
    for (const auto& p : fit.points) {
      if (p.dropped) fit.warnings.push_back("beta=" + fmt(p.beta) + " dropped: " + p.flag);
    }

    sort_cells(fit.cells);
    out.write_atomic("mott.csv", sigma_csv(config, fit.cells));
    std::string summary =
        model_header() + ",ell,beta,theta,beta_theta,n_ok,median_sigma,dropped,flag\n";
    for (const auto& p : fit.points) {
      summary += join({model_fields(config), fmt(ells[0]), fmt(p.beta), fmt(fit.theta),
                       fmt(p.abscissa), fmt(p.n_ok), fmt(p.median_sigma),
                       p.dropped ? "1" : "0", p.flag}) +
                 '\n';
    }
    out.write_atomic("mott_summary.csv", summary);
    out.write_atomic("mott_fit.csv",
                     model_header() + ",ell,theta,kappa,intercept,r2,n_used\n" +
                         join({model_fields(config), fmt(ells[0]), fmt(fit.theta),
                               fmt(fit.kappa), fmt(fit.intercept), fmt(fit.r2),
                               fmt(fit.n_used)}) +
                         '\n');
    return fit;
  });
}

}  // namespace mottlab::lab
