#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mottlab/conductivity.hpp"
#include "mottlab/lab/config.hpp"
#include "mottlab/lab/experiments.hpp"
#include "mottlab/lab/persist.hpp"
#include "mottlab/lab/stats.hpp"
#include "mottlab/network.hpp"
#include "mottlab/solver.hpp"

using namespace mottlab;
using namespace mottlab::lab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_config_json() {
  return json::parse(R"({
    "model": {"dimension": 2, "process": "poisson", "intensity": 1.0,
              "kernel": "miller_abrahams", "beta": 1.0, "gamma": 1.0,
              "mark_law": "power_law", "alpha": 0.0, "A": 1.0},
    "geometry": {"ells": [4, 8], "torus_L": 10},
    "run": {"n_realizations": 3, "master_seed": 7, "solver_tol": 1e-10,
            "corrector_realizations": 2,
            "walk": {"environments": 2, "walkers_per_environment": 10, "horizon": 50}}
  })");
}

ExperimentConfig small_config(const std::string& out = "") {
  ExperimentConfig c = config_from_json(small_config_json());
  c.run.output_dir = out;
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mottlab_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("config parsing is strict") {
  SUBCASE("round trip") {
    const ExperimentConfig c = small_config();
    const ExperimentConfig back = config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(config_hash(back) == config_hash(c));
  }
  SUBCASE("unknown keys rejected at any level") {
    for (const char* section : {"model", "geometry", "run"}) {
      json j = small_config_json();
      j[section]["typo"] = 1;
      CHECK_THROWS_AS(config_from_json(j), InvalidArgument);
    }
    json j = small_config_json();
    j["extra"] = {};
    CHECK_THROWS_AS(config_from_json(j), InvalidArgument);
    j = small_config_json();
    j["run"]["walk"]["speed"] = 2;
    CHECK_THROWS_AS(config_from_json(j), InvalidArgument);
  }
  SUBCASE("type errors become InvalidArgument") {
    json j = small_config_json();
    j["model"]["beta"] = "hot";
    CHECK_THROWS_AS(config_from_json(j), InvalidArgument);
  }
  SUBCASE("epsilons map to increasing ells") {
    json j = small_config_json();
    j["geometry"].erase("ells");
    j["geometry"]["epsilons"] = {0.125, 0.25};
    const auto c = config_from_json(j);
    REQUIRE(c.geometry.ells.size() == 2);
    CHECK(c.geometry.ells[0] == 4.0);
    CHECK(c.geometry.ells[1] == 8.0);
  }
  SUBCASE("invariants") {
    auto bad = [](auto mutate) {
      ExperimentConfig c = small_config();
      mutate(c);
      CHECK_THROWS_AS(c.validate(), InvalidArgument);
    };
    bad([](ExperimentConfig& c) { c.geometry.ells = {8, 4}; });
    bad([](ExperimentConfig& c) { c.geometry.ells = {8, 8}; });
    bad([](ExperimentConfig& c) { c.geometry.ells = {}; });
    bad([](ExperimentConfig& c) { c.run.n_realizations = 0; });
    bad([](ExperimentConfig& c) { c.model.gamma = 0.0; });
    bad([](ExperimentConfig& c) { c.model.beta = -1.0; });
    bad([](ExperimentConfig& c) { c.model.intensity = 0.0; });
    bad([](ExperimentConfig& c) { c.model.dimension = 4; });
    bad([](ExperimentConfig& c) { c.run.solver_tol = 0.0; });
  }
  SUBCASE("hash changes with any parameter") {
    ExperimentConfig a = small_config(), b = small_config();
    b.run.master_seed = 8;
    CHECK(config_hash(a) != config_hash(b));
  }
}

TEST_CASE("statistics helpers") {
  const std::vector<double> v{4.0, 1.0, 3.0, 2.0};
  CHECK(mean(v) == 2.5);
  CHECK(stddev(v) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(median(v) == 2.5);
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 4.0);
  CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
  CHECK(median({5.0}) == 5.0);
  CHECK(median_stderr(v) == doctest::Approx(std::sqrt(M_PI / 2.0) * stddev(v) / 2.0));
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const LinearFit f = linear_fit(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
}

TEST_CASE("reference profile and L2 error") {
  const ReferenceProfile psi;
  CHECK(psi({-0.7, 0, 0}) == 0.0);
  CHECK(psi({0.7, 0, 0}) == 1.0);
  CHECK(psi({0.25, 3, 0}) == 0.75);
  CHECK(psi({-0.5, 0, 0}) == 0.0);
  CHECK(psi({0.5, 0, 0}) == 1.0);

  // 1d uniform chain at integer sites: the discrete solution is affine.
  const double ell = 8.0;
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  for (int i = 0; i <= 8; ++i) {
    const double x = -ell / 2 + i;
    nodes.push_back({{x, 0, 0}, 0.0, classify({x, 0, 0}, 1, ell)});
    if (i > 0) edges.push_back({std::uint32_t(i - 1), std::uint32_t(i), 1.0});
  }
  const auto net = make_network(1, ell, nodes, edges);
  const auto pot = solve_potential(net, 1e-14);
  // Nodes at -4 and 4 are boundary, so V(x) = (x + 4)/8 = psi(x/ell) exactly.
  CHECK(profile_l2_error(net, pot.values) <= 1e-12);

  std::vector<double> exact(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    Point x = net.nodes[i].x;
    x[0] /= ell;
    exact[i] = psi(x);
  }
  CHECK(profile_l2_error(net, exact) == 0.0);
  CHECK_THROWS_AS(profile_l2_error(net, std::vector<double>(3, 0.0)), InvalidArgument);
}

TEST_CASE("seed streams are distinct and stable") {
  CHECK(stream_seed(1, Stream::Stripe, 0) != stream_seed(1, Stream::Corrector, 0));
  CHECK(stream_seed(1, Stream::Stripe, 0) != stream_seed(1, Stream::Stripe, 1));
  CHECK(stream_seed(1, Stream::Walk, 3) == stream_seed(1, Stream::Walk, 3));
  CHECK(stream_seed(1, Stream::Walk, 3) == derive_seed(derive_seed(1, 2), 3));
}

TEST_CASE("sweep in memory: shape, nesting and single ell") {
  ExperimentConfig c = small_config();
  const Theorem1Result r = run_theorem1_sweep(c);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.cells.size() == 6);
  for (const auto& row : r.rows) {
    CHECK(row.n == 3);
    CHECK(row.q25 <= row.median);
    CHECK(row.median <= row.q75);
  }
  // Rows carry the seed of the realization they came from.
  for (const auto& cell : r.cells) {
    CHECK(cell.seed == stream_seed(7, Stream::Stripe, cell.realization));
    CHECK(cell.status == CellStatus::Ok);
  }
  CHECK(r.corrector.mD11 > 0.0);
  CHECK(r.walk.mD11 > 0.0);

  c.geometry.ells = {8.0};
  const Theorem1Result single = run_theorem1_sweep(c);
  CHECK(single.rows.size() == 1);
  // The ell=8 cells are the same whether or not ell=4 was also requested.
  for (const auto& cell : single.cells) {
    bool matched = false;
    for (const auto& other : r.cells) {
      if (other.seed == cell.seed && other.ell == 8.0) {
        CHECK(other.sigma_energy == cell.sigma_energy);
        matched = true;
      }
    }
    CHECK(matched);
  }
}

TEST_CASE("sweep is deterministic and resumable") {
  const fs::path a = fresh_dir("sweep_a"), b = fresh_dir("sweep_b");
  run_theorem1_sweep(small_config(a.string()));
  run_theorem1_sweep(small_config(b.string()));
  for (const char* name : {"sigma.csv", "corrector.csv", "walk.csv", "theorem1.csv"}) {
    CHECK(fs::exists(a / name));
    CHECK(slurp(a / name) == slurp(b / name));
  }
  CHECK(fs::exists(a / "manifest.json"));
  const json manifest = json::parse(slurp(a / "manifest.json"));
  CHECK(manifest.contains("config_hash"));
  CHECK(manifest.contains("code_version"));

  // Rerun over a complete journal adds nothing and reproduces the tables.
  const std::size_t journal_lines = line_count(a / "journal_stripe.csv");
  const std::string theorem1 = slurp(a / "theorem1.csv");
  run_theorem1_sweep(small_config(a.string()));
  CHECK(line_count(a / "journal_stripe.csv") == journal_lines);
  CHECK(slurp(a / "theorem1.csv") == theorem1);

  // Drop some journal rows and a torn tail: only missing cells are recomputed.
  std::string journal = slurp(a / "journal_stripe.csv");
  std::vector<std::string> lines;
  std::stringstream ss(journal);
  for (std::string line; std::getline(ss, line);) lines.push_back(line);
  {
    std::ofstream outf(a / "journal_stripe.csv", std::ios::trunc);
    for (std::size_t i = 0; i + 2 < lines.size(); ++i) outf << lines[i] << '\n';
    outf << "123,4,";  // partial row from an interrupted write
  }
  run_theorem1_sweep(small_config(a.string()));
  CHECK(slurp(a / "theorem1.csv") == theorem1);
  CHECK(slurp(a / "sigma.csv") == slurp(b / "sigma.csv"));
  const std::size_t repaired = line_count(a / "journal_stripe.csv");
  run_theorem1_sweep(small_config(a.string()));
  CHECK(line_count(a / "journal_stripe.csv") == repaired);

  // A different config refuses to share the directory.
  ExperimentConfig other = small_config(a.string());
  other.run.master_seed = 99;
  CHECK_THROWS_AS(run_theorem1_sweep(other), InvalidArgument);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("worker count does not change results") {
  ExperimentConfig c = small_config();
  const auto serial = run_stripe_cells(c, 1.0, c.geometry.ells, OutputDir(), nullptr);
  c.run.workers = 3;
  const auto parallel = run_stripe_cells(c, 1.0, c.geometry.ells, OutputDir(), nullptr);
  CHECK(sigma_csv(c, serial) == sigma_csv(c, parallel));
}

TEST_CASE("profile check produces one row per ell") {
  const Theorem2Result r = run_theorem2_check(small_config());
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].eps == 0.25);
  CHECK(r.rows[1].eps == 0.125);
  for (const auto& row : r.rows) CHECK(row.median_error > 0.0);
}

TEST_CASE("zero diffusivity warning") {
  ExperimentConfig c = small_config();
  CHECK(zero_diffusivity_warning(c).empty());
  c.model.process = "lattice";
  c.model.kernel = "nearest_neighbor";
  c.model.intensity = 0.5;
  CHECK_FALSE(zero_diffusivity_warning(c).empty());
}

TEST_CASE("Mott recipe preconditions and output") {
  ExperimentConfig c = small_config();
  c.model.beta_grid = {1.0};
  CHECK_THROWS_AS(run_mott_scaling(c), InvalidArgument);
  c.model.beta_grid = {1, 2, 3, 4};
  CHECK_THROWS_AS(run_mott_scaling(c), InvalidArgument);

  c.model.beta_grid = {1, 2, 4, 8, 16};
  c.geometry.ells = {6.0};
  const MottFit fit = run_mott_scaling(c);
  CHECK(fit.theta == doctest::Approx(1.0 / 3.0));
  CHECK(fit.points.size() == 5);
  CHECK(fit.kappa > 0.0);
  for (std::size_t i = 1; i < fit.points.size(); ++i) {
    CHECK(fit.points[i].median_sigma < fit.points[i - 1].median_sigma);
  }
}

TEST_CASE("output directory primitives") {
  const fs::path p = fresh_dir("outdir");
  const OutputDir out(p.string());
  CHECK(out.enabled());
  out.write_atomic("a.txt", "hello\n");
  CHECK(slurp(p / "a.txt") == "hello\n");
  out.append_line("j.csv", "x,y", "1,2");
  out.append_line("j.csv", "x,y", "3,4");
  CHECK(slurp(p / "j.csv") == "x,y\n1,2\n3,4\n");
  const auto rows = out.read_rows("j.csv", 2);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][0] == "3");
  CHECK(out.read_rows("missing.csv", 2).empty());
  std::ofstream(p / "j.csv", std::ios::app) << "5,";
  CHECK(out.read_rows("j.csv", 2).size() == 2);
  out.append_line("j.csv", "x,y", "6,7");
  CHECK(out.read_rows("j.csv", 2).size() == 3);
  const OutputDir none;
  CHECK_FALSE(none.enabled());
  none.write_atomic("ignored.txt", "x");
  fs::remove_all(p);
}
