#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mottlab/conductivity.hpp"
#include "mottlab/corrector.hpp"
#include "mottlab/environment.hpp"
#include "mottlab/lab/config.hpp"
#include "mottlab/lab/persist.hpp"
#include "mottlab/lab/stats.hpp"
#include "mottlab/mott_walk.hpp"

namespace mottlab::lab {

// psi(x) = x_1 + 1/2 on the unit box, 0 on the left half-stripe, 1 on the
// right one (rescaled coordinates).
struct ReferenceProfile {
  double operator()(const Point& x) const;
};

/// [eps^d sum_{x interior} (V(x) - psi(eps x))^2]^(1/2) with eps = 1/ell.
double profile_l2_error(const StripeNetwork& net, std::span<const double> values);

// Independent random streams derived from the master seed.
enum class Stream : std::uint64_t { Stripe = 0, Corrector = 1, Walk = 2 };
std::uint64_t stream_seed(std::uint64_t master, Stream stream, std::uint64_t index);

/// Configuration of realization `index`, sampled once on the window of the
/// largest stripe so every ell sees the same environment.
MarkedConfiguration sample_stripe_configuration(const ExperimentConfig& config,
                                                std::uint64_t seed);

// Inexact: the formulas disagree beyond tol_equiv; only the Mott recipe
// keeps such cells instead of aborting.
enum class CellStatus { Ok, NotConverged, Inexact };
const char* to_string(CellStatus s);

// One (seed, ell, beta) cell of a stripe recipe.
struct StripeCell {
  int realization = 0;
  std::uint64_t seed = 0;
  double ell = 0.0;
  double beta = 0.0;
  CellStatus status = CellStatus::Ok;
  double sigma_boundary = 0.0;
  double sigma_energy = 0.0;
  double cross_min = 0.0;
  double cross_max = 0.0;
  double rescaled = 0.0;
  int cg_iters = 0;
  double condition_proxy = 0.0;
  double profile_error = 0.0;
  double m_hat = 0.0;  // interior points per unit volume
  std::size_t nodes = 0;

  // Largest relative disagreement among the conductivity formulas.
  double formula_spread() const;
};

/// Solves one cell on an already sampled configuration.
StripeCell solve_stripe_cell(const ExperimentConfig& config, const MarkedConfiguration& sample,
                             int realization, double ell, double beta,
                             bool tolerate_inexact = false);

// Walk estimate on one periodized environment; vectors run over directions.
struct WalkCell {
  std::uint64_t seed = 0;
  double intensity = 0.0;
  int n_walkers = 0;
  std::vector<double> slope;
  std::vector<double> D;
  std::vector<double> stderr_;
  double mean_jumps = 0.0;
};

struct WalkSummary {
  std::vector<WalkCell> cells;
  double D11 = 0.0;
  double mD11 = 0.0;
  double mD11_stderr = 0.0;
  double mean_jumps = 0.0;
  std::vector<std::string> warnings;
};

struct Theorem1Row {
  double ell = 0.0;
  std::size_t n = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double median_stderr = 0.0;
};

struct Theorem1Result {
  std::vector<StripeCell> cells;
  std::vector<Theorem1Row> rows;
  EnsembleDiffusion corrector;
  WalkSummary walk;
  std::vector<std::string> warnings;
};

struct Theorem2Row {
  double ell = 0.0;
  double eps = 0.0;
  std::size_t n = 0;
  double median_error = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

struct Theorem2Result {
  std::vector<StripeCell> cells;
  std::vector<Theorem2Row> rows;
  // log(median error) against log(eps).
  LinearFit trend;
  std::vector<std::string> warnings;
};

struct MottPoint {
  double beta = 0.0;
  double abscissa = 0.0;  // beta^theta
  std::size_t n_ok = 0;
  double median_sigma = 0.0;
  bool dropped = false;
  std::string flag;
};

struct MottFit {
  double theta = 1.0;
  double kappa = 0.0;  // minus the fitted slope
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n_used = 0;
  std::vector<MottPoint> points;
  std::vector<StripeCell> cells;
  std::vector<std::string> warnings;
};

/// Solves every (realization, ell) cell at inverse temperature `beta`.
/// Cells already journaled in `out` are reloaded instead of recomputed.
std::vector<StripeCell> run_stripe_cells(const ExperimentConfig& config, double beta,
                                         std::span<const double> ells, const OutputDir& out,
                                         Manifest* manifest, bool tolerate_inexact = false);

EnsembleDiffusion run_corrector_ensemble(const ExperimentConfig& config, const OutputDir& out,
                                        Manifest* manifest);

WalkSummary run_walk_ensemble(const ExperimentConfig& config, const OutputDir& out,
                              Manifest* manifest);

/// Conductivity sweep over ell with the corrector and walk estimates of
/// m D_11 alongside. Writes sigma.csv, corrector.csv, walk.csv,
/// theorem1.csv and manifest.json when `config.run.output_dir` is set.
Theorem1Result run_theorem1_sweep(const ExperimentConfig& config);

/// L2 distance between the rescaled potential and psi for each ell. Writes
/// profile.csv and profile_summary.csv.
Theorem2Result run_theorem2_check(const ExperimentConfig& config);

/// Fits ln(median sigma) against beta^theta over model.beta_grid at the
/// largest ell. Inexact cells count when their formulas agree within
/// kMottSpreadLimit. Throws InvalidArgument on fewer than five grid points.
inline constexpr double kMottSpreadLimit = 1e-3;

MottFit run_mott_scaling(const ExperimentConfig& config);

// CSV writers shared by the recipes and the CLI.
std::string sigma_csv(const ExperimentConfig& config, std::span<const StripeCell> cells);
std::string corrector_csv(const ExperimentConfig& config, const EnsembleDiffusion& summary);
std::string walk_csv(const ExperimentConfig& config, const WalkSummary& summary);
std::string theorem1_csv(const ExperimentConfig& config, const Theorem1Result& result);

/// Warning text when the model may have D_11 = 0, empty otherwise.
std::string zero_diffusivity_warning(const ExperimentConfig& config);

}  // namespace mottlab::lab
