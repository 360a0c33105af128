#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mottlab/conductivity.hpp"
#include "mottlab/environment.hpp"
#include "mottlab/network.hpp"
#include "mottlab/solver.hpp"

using namespace mottlab;

namespace {

StripeNetwork single_node(double c1, double c2) {
  std::vector<Node> nodes{{{-1, 0, 0}, 0, NodeClass::LeftBoundary},
                          {{0, 0, 0}, 0, NodeClass::Interior},
                          {{1, 0, 0}, 0, NodeClass::RightBoundary}};
  return make_network(1, 1.0, nodes, {{0, 1, c1}, {1, 2, c2}});
}

// Poisson lambda = 1 Miller-Abrahams stripe with about `n` nodes in 2d.
StripeNetwork random_network(double ell, std::uint64_t seed, double beta = 2.0) {
  ProcessSpec spec;
  spec.dimension = 2;
  const auto kernel = ConductanceKernel::miller_abrahams(beta, 1.0);
  const double depth = stripe_depth(kernel, ell, {});
  const auto cfg = sample_configuration(spec, stripe_window(2, ell, depth), seed);
  return build_stripe_network(cfg, kernel, ell);
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("single interior node") {
  for (auto [c1, c2] : {std::pair{1.0, 1.0}, {0.3, 2.5}, {1e-3, 7.0}}) {
    const auto net = single_node(c1, c2);
    const auto pot = solve_potential(net);
    CHECK(pot.values[0] == 0.0);
    CHECK(pot.values[2] == 1.0);
    CHECK(pot.values[1] == doctest::Approx(c2 / (c1 + c2)).epsilon(1e-14));
    const auto direct = solve_potential_direct(net);
    CHECK(direct.solver_kind == SolverKind::Direct);
    CHECK(direct.values[1] == doctest::Approx(c2 / (c1 + c2)).epsilon(1e-14));
  }
}

TEST_CASE("mirror-symmetric network puts the centre at 1/2") {
  std::vector<Node> nodes{{{-2, 0, 0}, 0, NodeClass::LeftBoundary},
                          {{-1, 0, 0}, 0, NodeClass::Interior},
                          {{0, 0, 0}, 0, NodeClass::Interior},
                          {{1, 0, 0}, 0, NodeClass::Interior},
                          {{2, 0, 0}, 0, NodeClass::RightBoundary}};
  const auto net = make_network(1, 3.0, nodes,
                                {{0, 1, 0.7}, {1, 2, 1.9}, {2, 3, 1.9}, {3, 4, 0.7}, {1, 3, 0.2}});
  const auto pot = solve_potential(net);
  CHECK(pot.values[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pot.values[1] + pot.values[3] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("CG agrees with the dense direct oracle") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto net = random_network(14.0, s);
    CHECK(net.size() >= 150);
    CHECK(net.size() <= 500);
    const auto cg = solve_potential(net, 1e-12);
    const auto direct = solve_potential_direct(net);
    CHECK(cg.solver_kind == SolverKind::CG);
    CHECK(sup_diff(cg.values, direct.values) <= 1e-8);
  }
}

TEST_CASE("maximum principle, boundary values and harmonicity") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto net = random_network(16.0, 50 + s, 3.0);
    const double tol = 1e-10;
    const auto pot = solve_potential(net, tol);
    CHECK(pot.residual_norm <= tol);
    for (std::size_t i = 0; i < net.size(); ++i) {
      if (net.nodes[i].cls == NodeClass::LeftBoundary) REQUIRE(pot.values[i] == 0.0);
      if (net.nodes[i].cls == NodeClass::RightBoundary) REQUIRE(pot.values[i] == 1.0);
      CHECK(pot.values[i] >= -tol);
      CHECK(pot.values[i] <= 1.0 + tol);
    }
    for (double r : kirchhoff_residuals(net, pot.values)) CHECK(r <= 1e-8);
  }
}

TEST_CASE("dirichlet energy") {
  const auto net = single_node(0.4, 1.6);
  CHECK(dirichlet_energy(net, std::vector<double>{0.3, 0.3, 0.3}) == 0.0);

  std::vector<Node> pair{{{-1, 0, 0}, 0, NodeClass::LeftBoundary},
                         {{0, 0, 0}, 0, NodeClass::Interior},
                         {{1, 0, 0}, 0, NodeClass::RightBoundary}};
  const auto two = make_network(1, 1.0, pair, {{0, 1, 2.5}, {1, 2, 1.0}});
  CHECK(dirichlet_energy(two, std::vector<double>{0.0, 1.0, 1.0}) == 2.5);

  const auto big = random_network(12.0, 3);
  const auto pot = solve_potential(big);
  const double e = dirichlet_energy(big, pot.values);
  CHECK(std::abs(e - sigma_boundary_current(big, pot.values)) <= 1e-8 * e);
}

TEST_CASE("variational minimality") {
  SUBCASE("zero perturbation") {
    const auto net = random_network(10.0, 4);
    const auto pot = solve_potential(net);
    CHECK(verify_minimality(net, pot, 5, 0.0));
  }
  SUBCASE("single-node bump raises the energy by (c1 + c2) delta^2") {
    const double c1 = 0.6, c2 = 1.7;
    const auto net = single_node(c1, c2);
    const auto pot = solve_potential_direct(net);
    const double base = dirichlet_energy(net, pot.values);
    for (double delta : {0.1, -0.05, 0.3}) {
      auto v = pot.values;
      v[1] += delta;
      CHECK(dirichlet_energy(net, v) - base ==
            doctest::Approx((c1 + c2) * delta * delta).epsilon(1e-12));
    }
  }
  SUBCASE("N = 500 network, 50 perturbations of size 0.1") {
    const auto net = random_network(20.0, 5);
    CHECK(net.size() >= 400);
    const auto pot = solve_potential(net);
    CHECK(verify_minimality(net, pot, 50, 0.1, 99));
  }
  SUBCASE("a non-minimizer is caught") {
    const auto net = single_node(1.0, 1.0);
    PotentialField wrong;
    wrong.values = {0.0, 0.9, 1.0};
    CHECK_FALSE(verify_minimality(net, wrong, 50, 0.1, 1));
  }
}

TEST_CASE("scale covariance") {
  const auto net = random_network(12.0, 6);
  const auto pot = solve_potential(net, 1e-12);
  for (double s : {4.0, 0.125, 3.7}) {
    auto scaled = net;
    for (auto& e : scaled.edges) e.weight *= s;
    const auto pot_s = solve_potential(scaled, 1e-12);
    CHECK(sup_diff(pot.values, pot_s.values) <= 1e-9);
    const double e0 = dirichlet_energy(net, pot.values);
    const double e1 = dirichlet_energy(scaled, pot.values);
    if (s == 4.0 || s == 0.125) {
      CHECK(e1 == s * e0);
    } else {
      CHECK(e1 == doctest::Approx(s * e0).epsilon(1e-14));
    }
  }
}

TEST_CASE("solver errors") {
  const auto net = random_network(16.0, 7);
  CHECK_THROWS_AS(solve_potential(net, 1e-12, 1), NotConverged);
  try {
    solve_potential(net, 1e-12, 2);
  } catch (const NotConverged& e) {
    CHECK(e.iterations() == 2);
    CHECK(e.residual() > 1e-12);
  }

  std::vector<Node> nodes{{{-1, 0, 0}, 0, NodeClass::LeftBoundary},
                          {{-0.2, 0, 0}, 0, NodeClass::Interior},
                          {{0.4, 0, 0}, 0, NodeClass::Interior},
                          {{1, 0, 0}, 0, NodeClass::RightBoundary}};
  auto cut = make_network(1, 1.0, nodes, {{0, 1, 1.0}, {1, 3, 1.0}});
  cut.floating.assign(cut.size(), 0);
  CHECK_THROWS_AS(solve_potential(cut), SingularComponent);
}

TEST_CASE("potential CSV export") {
  const auto net = single_node(1.0, 3.0);
  const auto pot = solve_potential(net);
  std::ostringstream os;
  write_potential_csv(os, net, pot);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "node_index,x1,class,V");
  std::getline(in, line);
  CHECK(line == "0,-1,LeftBoundary,0");
  std::getline(in, line);
  CHECK(line == "1,0,Interior,0.75");
}
