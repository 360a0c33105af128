#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mottlab/environment.hpp"
#include "mottlab/kernel.hpp"
#include "mottlab/network.hpp"

namespace mottlab::lab {

struct ModelConfig {
  int dimension = 2;
  std::string process = "poisson";  // "poisson" | "lattice"
  double intensity = 1.0;           // lambda, or retention p for "lattice"
  std::optional<std::vector<double>> lattice_shift;
  std::string kernel = "miller_abrahams";  // | "nearest_neighbor"
  double beta = 2.0;
  double gamma = 1.0;
  double nn_weight = 1.0;
  double nn_range = 1.0;
  std::string mark_law = "power_law";  // | "point_mass"
  double alpha = 0.0;
  double A = 1.0;
  double mark_value = 0.0;
  std::vector<double> beta_grid;  // Mott-law recipe only
};

struct TruncationConfig {
  double depth_tol = 1e-10;
  std::optional<double> cutoff_radius;
  bool exact = false;
};

struct GeometryConfig {
  std::vector<double> ells{8.0, 16.0, 32.0};
  TruncationConfig truncation;
  double torus_L = 40.0;
  std::optional<double> torus_R;
};

struct WalkConfig {
  int environments = 10;
  int walkers_per_environment = 200;
  double horizon = 10000.0;
};

struct RunConfig {
  int n_realizations = 20;
  std::uint64_t master_seed = 1;
  double solver_tol = 1e-10;
  std::string output_dir;
  int corrector_realizations = 5;
  WalkConfig walk;
  int workers = 1;
};

struct ExperimentConfig {
  ModelConfig model;
  GeometryConfig geometry;
  RunConfig run;

  /// Throws InvalidArgument on a broken invariant.
  void validate() const;

  ProcessSpec process_spec() const;
  ConductanceKernel kernel(double beta) const;
  ConductanceKernel kernel() const { return kernel(model.beta); }
  TruncationPolicy truncation() const;
  double torus_radius() const;
};

/// Strict parse: unknown keys anywhere are an error. Accepts "epsilons" in
/// place of "ells" (ell = 1/eps, sorted increasing in ell).
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

// FNV-1a over the canonical JSON dump.
std::uint64_t config_hash(const ExperimentConfig& c);

}  // namespace mottlab::lab
