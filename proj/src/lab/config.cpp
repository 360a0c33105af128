#include "mottlab/lab/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace mottlab::lab {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw InvalidArgument("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <class T>
void read_optional(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

void ExperimentConfig::validate() const {
  const auto& m = model;
  require(m.dimension >= 1 && m.dimension <= kMaxDim, "model.dimension must be 1, 2 or 3");
  require(m.process == "poisson" || m.process == "lattice", "model.process must be poisson or lattice");
  require(m.kernel == "miller_abrahams" || m.kernel == "nearest_neighbor",
          "model.kernel must be miller_abrahams or nearest_neighbor");
  require(m.mark_law == "power_law" || m.mark_law == "point_mass",
          "model.mark_law must be power_law or point_mass");
  require(m.intensity > 0.0, "model.intensity must be positive");
  require(m.beta >= 0.0 && m.gamma > 0.0, "need beta >= 0 and gamma > 0");
  require(m.alpha >= 0.0 && m.A > 0.0, "need alpha >= 0 and A > 0");
  require(m.nn_weight > 0.0 && m.nn_range > 0.0, "nearest-neighbor weight and range must be positive");
  for (double b : m.beta_grid) require(b >= 0.0, "beta grid entries must be >= 0");
  if (m.lattice_shift) {
    require(static_cast<int>(m.lattice_shift->size()) == m.dimension,
            "model.lattice_shift must have one entry per dimension");
  }
  require(!geometry.ells.empty(), "geometry.ells must not be empty");
  for (std::size_t i = 0; i < geometry.ells.size(); ++i) {
    require(geometry.ells[i] > 0.0, "ells must be positive");
    if (i > 0) require(geometry.ells[i] > geometry.ells[i - 1], "ells must be strictly increasing");
  }
  require(geometry.truncation.depth_tol > 0.0 && geometry.truncation.depth_tol < 1.0,
          "truncation.depth_tol must lie in (0, 1)");
  if (geometry.truncation.cutoff_radius) {
    require(*geometry.truncation.cutoff_radius > 0.0, "truncation.cutoff_radius must be positive");
  }
  require(geometry.torus_L > 0.0, "geometry.torus_L must be positive");
  if (geometry.torus_R) {
    require(*geometry.torus_R > 0.0 && *geometry.torus_R < 0.5 * geometry.torus_L,
            "geometry.torus_R must lie in (0, torus_L/2)");
  }
  require(run.n_realizations >= 1, "run.n_realizations must be >= 1");
  require(run.solver_tol > 0.0, "run.solver_tol must be positive");
  require(run.corrector_realizations >= 2, "run.corrector_realizations must be >= 2");
  require(run.walk.environments >= 1 && run.walk.walkers_per_environment >= 2,
          "walk needs >= 1 environment and >= 2 walkers per environment");
  require(run.walk.horizon > 0.0, "walk.horizon must be positive");
  require(run.workers >= 1, "run.workers must be >= 1");
  process_spec().validate();
}

ProcessSpec ExperimentConfig::process_spec() const {
  ProcessSpec spec;
  spec.dimension = model.dimension;
  spec.intensity = model.intensity;
  spec.kind = model.process == "lattice" ? ProcessKind::PerturbedLatticePercolation
                                         : ProcessKind::PoissonHomogeneous;
  if (model.mark_law == "point_mass") {
    spec.marks = PointMass{model.mark_value};
  } else {
    spec.marks = PowerLaw{model.alpha, model.A};
  }
  if (model.lattice_shift) {
    Point u{};
    std::copy(model.lattice_shift->begin(), model.lattice_shift->end(), u.begin());
    spec.lattice_shift = u;
  }
  return spec;
}

ConductanceKernel ExperimentConfig::kernel(double beta) const {
  if (model.kernel == "nearest_neighbor") {
    return ConductanceKernel::nearest_neighbor(model.nn_weight, model.nn_range);
  }
  return ConductanceKernel::miller_abrahams(beta, model.gamma);
}

TruncationPolicy ExperimentConfig::truncation() const {
  TruncationPolicy p;
  p.depth_tol = geometry.truncation.depth_tol;
  p.cutoff_radius = geometry.truncation.cutoff_radius;
  p.exact = geometry.truncation.exact;
  return p;
}

double ExperimentConfig::torus_radius() const {
  if (geometry.torus_R) return *geometry.torus_R;
  const double natural = kernel().cutoff_radius(1e-14);
  return std::min(natural, 0.5 * geometry.torus_L * (1.0 - 1e-9));
}

namespace {

ExperimentConfig parse_config(const json& j) {
  reject_unknown(j, {"model", "geometry", "run"}, "config");
  ExperimentConfig c;
  if (j.contains("model")) {
    const json& m = j.at("model");
    reject_unknown(m,
                   {"dimension", "process", "intensity", "lattice_shift", "kernel", "beta", "gamma",
                    "nn_weight", "nn_range", "mark_law", "alpha", "A", "mark_value", "beta_grid"},
                   "model");
    auto& o = c.model;
    read(m, "dimension", o.dimension);
    read(m, "process", o.process);
    read(m, "intensity", o.intensity);
    read_optional(m, "lattice_shift", o.lattice_shift);
    read(m, "kernel", o.kernel);
    read(m, "beta", o.beta);
    read(m, "gamma", o.gamma);
    read(m, "nn_weight", o.nn_weight);
    read(m, "nn_range", o.nn_range);
    read(m, "mark_law", o.mark_law);
    read(m, "alpha", o.alpha);
    read(m, "A", o.A);
    read(m, "mark_value", o.mark_value);
    read(m, "beta_grid", o.beta_grid);
  }
  if (j.contains("geometry")) {
    const json& g = j.at("geometry");
    reject_unknown(g, {"ells", "epsilons", "truncation", "torus_L", "torus_R"}, "geometry");
    auto& o = c.geometry;
    require(!(g.contains("ells") && g.contains("epsilons")),
            "geometry takes either ells or epsilons, not both");
    read(g, "ells", o.ells);
    if (g.contains("epsilons")) {
      o.ells.clear();
      for (double eps : g.at("epsilons").get<std::vector<double>>()) {
        require(eps > 0.0, "epsilons must be positive");
        o.ells.push_back(1.0 / eps);
      }
      std::sort(o.ells.begin(), o.ells.end());
    }
    if (g.contains("truncation")) {
      const json& t = g.at("truncation");
      reject_unknown(t, {"depth_tol", "cutoff_radius", "exact"}, "geometry.truncation");
      read(t, "depth_tol", o.truncation.depth_tol);
      read_optional(t, "cutoff_radius", o.truncation.cutoff_radius);
      read(t, "exact", o.truncation.exact);
    }
    read(g, "torus_L", o.torus_L);
    read_optional(g, "torus_R", o.torus_R);
  }
  if (j.contains("run")) {
    const json& r = j.at("run");
    reject_unknown(r,
                   {"n_realizations", "master_seed", "solver_tol", "output_dir",
                    "corrector_realizations", "walk", "workers"},
                   "run");
    auto& o = c.run;
    read(r, "n_realizations", o.n_realizations);
    read(r, "master_seed", o.master_seed);
    read(r, "solver_tol", o.solver_tol);
    read(r, "output_dir", o.output_dir);
    read(r, "corrector_realizations", o.corrector_realizations);
    read(r, "workers", o.workers);
    if (r.contains("walk")) {
      const json& w = r.at("walk");
      reject_unknown(w, {"environments", "walkers_per_environment", "horizon"}, "run.walk");
      read(w, "environments", o.walk.environments);
      read(w, "walkers_per_environment", o.walk.walkers_per_environment);
      read(w, "horizon", o.walk.horizon);
    }
  }
  c.validate();
  return c;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  try {
    return parse_config(j);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed config: ") + e.what());
  }
}

json to_json(const ExperimentConfig& c) {
  const auto& m = c.model;
  json model = {{"dimension", m.dimension}, {"process", m.process},   {"intensity", m.intensity},
                {"kernel", m.kernel},       {"beta", m.beta},         {"gamma", m.gamma},
                {"nn_weight", m.nn_weight}, {"nn_range", m.nn_range}, {"mark_law", m.mark_law},
                {"alpha", m.alpha},         {"A", m.A},               {"mark_value", m.mark_value},
                {"beta_grid", m.beta_grid}};
  model["lattice_shift"] = m.lattice_shift ? json(*m.lattice_shift) : json(nullptr);
  const auto& g = c.geometry;
  json trunc = {{"depth_tol", g.truncation.depth_tol}, {"exact", g.truncation.exact}};
  trunc["cutoff_radius"] =
      g.truncation.cutoff_radius ? json(*g.truncation.cutoff_radius) : json(nullptr);
  json geometry = {{"ells", g.ells}, {"truncation", trunc}, {"torus_L", g.torus_L}};
  geometry["torus_R"] = g.torus_R ? json(*g.torus_R) : json(nullptr);
  const auto& r = c.run;
  json run = {{"n_realizations", r.n_realizations},
              {"master_seed", r.master_seed},
              {"solver_tol", r.solver_tol},
              {"output_dir", r.output_dir},
              {"corrector_realizations", r.corrector_realizations},
              {"workers", r.workers},
              {"walk",
               {{"environments", r.walk.environments},
                {"walkers_per_environment", r.walk.walkers_per_environment},
                {"horizon", r.walk.horizon}}}};
  return {{"model", model}, {"geometry", geometry}, {"run", run}};
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidArgument("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  json j = to_json(c);
  j["run"].erase("output_dir");
  j["run"].erase("workers");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mottlab::lab
