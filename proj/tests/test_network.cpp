#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "mottlab/conductivity.hpp"
#include "mottlab/environment.hpp"
#include "mottlab/network.hpp"
#include "mottlab/solver.hpp"

using namespace mottlab;

namespace {

MarkedConfiguration points_1d(std::vector<std::pair<double, double>> xe, Box window) {
  MarkedConfiguration c;
  c.dimension = 1;
  c.window = window;
  for (auto [x, e] : xe) c.points.push_back({{x, 0.0, 0.0}, e});
  return c;
}

MarkedConfiguration poisson_stripe(int d, double ell, double depth, std::uint64_t seed,
                                   double lambda = 1.0) {
  ProcessSpec spec;
  spec.dimension = d;
  spec.intensity = lambda;
  return sample_configuration(spec, stripe_window(d, ell, depth), seed);
}

double sigma_direct(const StripeNetwork& net) {
  const auto pot = solve_potential_direct(net);
  return sigma_energy(net, pot.values);
}

}  // namespace

TEST_CASE("three collinear points") {
  const auto cfg = points_1d({{-1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}}, Box::cube(1, -2.0, 2.0));
  const auto net = build_stripe_network(cfg, ConductanceKernel::miller_abrahams(1.0, 1.0), 1.5,
                                        TruncationPolicy::exact_mode());
  REQUIRE(net.size() == 3);
  CHECK(net.nodes[0].cls == NodeClass::LeftBoundary);
  CHECK(net.nodes[1].cls == NodeClass::Interior);
  CHECK(net.nodes[2].cls == NodeClass::RightBoundary);
  // The pair (-1, 1) has no interior endpoint.
  REQUIRE(net.edges.size() == 2);
  for (const auto& e : net.edges) CHECK((e.i == 1 || e.j == 1));
}

TEST_CASE("classification at the interfaces") {
  CHECK(classify({-0.75, 0, 0}, 1, 1.5) == NodeClass::LeftBoundary);
  CHECK(classify({0.75, 0, 0}, 1, 1.5) == NodeClass::RightBoundary);
  CHECK(classify({std::nextafter(-0.75, 0.0), 0, 0}, 1, 1.5) == NodeClass::Interior);
  CHECK(classify({std::nextafter(0.75, 0.0), 0, 0}, 1, 1.5) == NodeClass::Interior);
}

TEST_CASE("exact mode enumerates every pair with an interior endpoint") {
  const double ell = 4.0;
  const auto cfg = poisson_stripe(2, ell, 2.0, 3, 50.0 / 32.0);
  const auto net = build_stripe_network(cfg, ConductanceKernel::miller_abrahams(0.0, 1.0), ell,
                                        TruncationPolicy::exact_mode());
  const std::size_t ni = net.count(NodeClass::Interior);
  const std::size_t nb = net.size() - ni;
  CHECK(net.edges.size() == ni * (ni - 1) / 2 + ni * nb);
  CHECK(std::isinf(net.truncation.cutoff_radius));
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (const auto& e : net.edges) {
    CHECK(seen.insert({std::min(e.i, e.j), std::max(e.i, e.j)}).second);
  }
}

TEST_CASE("every node lies in the truncated stripe, every edge touches the interior") {
  const double ell = 10.0;
  const auto cfg = poisson_stripe(2, ell, 8.0, 5);
  TruncationPolicy policy;
  policy.depth = 3.0;
  const auto net = build_stripe_network(cfg, ConductanceKernel::miller_abrahams(2.0, 1.0), ell, policy);
  for (const auto& n : net.nodes) {
    CHECK(std::abs(n.x[0]) <= ell / 2 + 3.0);
    CHECK(std::abs(n.x[1]) < ell / 2);
    CHECK(n.cls == classify(n.x, 2, ell));
  }
  for (const auto& e : net.edges) {
    CHECK((net.nodes[e.i].cls == NodeClass::Interior || net.nodes[e.j].cls == NodeClass::Interior));
    CHECK(e.weight > 0.0);
    CHECK(std::isfinite(e.weight));
  }
}

TEST_CASE("default depth rule") {
  const auto k = ConductanceKernel::miller_abrahams(2.0, 1.0);
  TruncationPolicy p;
  CHECK(stripe_depth(k, 100.0, p) == doctest::Approx(0.5 * std::log(1e10)));
  CHECK(stripe_depth(k, 8.0, p) == 4.0);
  p.depth_tol = 1e-4;
  CHECK(stripe_depth(k, 100.0, p) == doctest::Approx(0.5 * std::log(1e4)));
  CHECK(stripe_depth(ConductanceKernel::miller_abrahams(2.0, 3.0), 100.0, TruncationPolicy{}) ==
        doctest::Approx(1.5 * std::log(1e10)));
}

TEST_CASE("cutoff R = 20 leaves a negligible tail") {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const double ell = 16.0;
    const auto cfg = poisson_stripe(2, ell, 8.0, s);
    TruncationPolicy p;
    p.cutoff_radius = 20.0;
    const auto net = build_stripe_network(cfg, ConductanceKernel::miller_abrahams(2.0, 1.0), ell, p);
    CHECK(net.truncation.neglected_total_bound < 1e-8 * net.truncation.retained_total_weight);
  }
}

TEST_CASE("truncation soundness: 0 <= sigma_exact - sigma_R <= bound") {
  const auto k = ConductanceKernel::miller_abrahams(1.0, 1.0);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const double ell = 6.0;
    const auto cfg = poisson_stripe(2, ell, 3.0, 100 + s, 2.0);
    REQUIRE(cfg.size() <= 200);
    const auto exact = build_stripe_network(cfg, k, ell, TruncationPolicy::exact_mode());
    for (double R : {1.5, 2.5, 4.0}) {
      TruncationPolicy p;
      p.cutoff_radius = R;
      const auto cut = build_stripe_network(cfg, k, ell, p);
      const double gap = sigma_direct(exact) - sigma_direct(cut);
      CHECK(gap >= -1e-12);
      CHECK(gap <= cut.truncation.neglected_total_bound);
      CHECK(exact.truncation.retained_total_weight - cut.truncation.retained_total_weight <=
            cut.truncation.neglected_total_bound);
    }
  }
}

TEST_CASE("weights are non-increasing in beta for fixed geometry") {
  const auto cfg = poisson_stripe(2, 6.0, 3.0, 9);
  const auto lo = build_stripe_network(cfg, ConductanceKernel::miller_abrahams(1.0, 1.0), 6.0,
                                       TruncationPolicy::exact_mode());
  const auto hi = build_stripe_network(cfg, ConductanceKernel::miller_abrahams(3.0, 1.0), 6.0,
                                       TruncationPolicy::exact_mode());
  REQUIRE(lo.edges.size() == hi.edges.size());
  for (std::size_t e = 0; e < lo.edges.size(); ++e) {
    REQUIRE(lo.edges[e].i == hi.edges[e].i);
    REQUIRE(lo.edges[e].j == hi.edges[e].j);
    CHECK(hi.edges[e].weight <= lo.edges[e].weight);
  }
}

TEST_CASE("covariance: translated dyadic configurations give identical weights") {
  // Dyadic coordinates keep x - y exact under translation.
  SplitMix64 rng(21);
  const auto k = ConductanceKernel::miller_abrahams(2.0, 1.0);
  for (int t = 0; t < 2000; ++t) {
    Point x{}, y{}, a{};
    for (int c = 0; c < 3; ++c) {
      x[c] = std::ldexp(double(rng() % 4096), -8);
      y[c] = std::ldexp(double(rng() % 4096), -8);
      a[c] = std::ldexp(double(rng() % 4096), -6) - 32.0;
    }
    const double ex = uniform01(rng) - 0.5;
    const double ey = uniform01(rng) - 0.5;
    CHECK(k(x + a, y + a, ex, ey) == k(x, y, ex, ey));
  }
  // A larger sampling window with the same points builds the same network.
  const auto cfg = poisson_stripe(2, 8.0, 4.0, 2);
  auto moved = cfg;
  moved.window.lo[0] -= 5.0;
  moved.window.hi[0] += 5.0;
  const auto a = build_stripe_network(cfg, k, 8.0);
  const auto b = build_stripe_network(moved, k, 8.0);
  REQUIRE(a.edges.size() == b.edges.size());
  for (std::size_t e = 0; e < a.edges.size(); ++e) CHECK(a.edges[e].weight == b.edges[e].weight);
}

TEST_CASE("assembled weight matrix is symmetric") {
  const auto cfg = poisson_stripe(2, 8.0, 4.0, 12);
  const auto net = build_stripe_network(cfg, ConductanceKernel::miller_abrahams(2.0, 1.0), 8.0);
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> w;
  for (const auto& e : net.edges) {
    w[{e.i, e.j}] += e.weight;
    w[{e.j, e.i}] += e.weight;
  }
  for (const auto& [ij, c] : w) CHECK(w.at({ij.second, ij.first}) == c);
  // Each weight equals the kernel evaluated in either order.
  const auto k = ConductanceKernel::miller_abrahams(2.0, 1.0);
  for (const auto& e : net.edges) {
    const auto& a = net.nodes[e.i];
    const auto& b = net.nodes[e.j];
    CHECK(e.weight == k(b.x, a.x, b.mark, a.mark));
  }
}

TEST_CASE("merge_boundary") {
  SUBCASE("parallel conductances add") {
    std::vector<Node> nodes{{{-2, 0, 0}, 0, NodeClass::LeftBoundary},
                            {{-1.5, 0, 0}, 0, NodeClass::LeftBoundary},
                            {{0, 0, 0}, 0, NodeClass::Interior},
                            {{2, 0, 0}, 0, NodeClass::RightBoundary}};
    const auto net = make_network(1, 2.0, nodes, {{0, 2, 0.3}, {1, 2, 0.45}, {2, 3, 1.0}});
    const auto m = merge_boundary(net);
    CHECK(m.merged);
    REQUIRE(m.size() == 3);
    double to_left = 0.0;
    for (const auto& e : m.edges) {
      if (m.nodes[e.i].cls == NodeClass::LeftBoundary || m.nodes[e.j].cls == NodeClass::LeftBoundary)
        to_left += e.weight;
    }
    CHECK(to_left == doctest::Approx(0.75).epsilon(1e-15));
    const auto again = merge_boundary(m);
    CHECK(again.edges.size() == m.edges.size());
    CHECK(again.size() == m.size());
  }
  SUBCASE("conductivity is unchanged") {
    for (std::uint64_t s = 0; s < 3; ++s) {
      const auto cfg = poisson_stripe(2, 8.0, 4.0, 40 + s);
      const auto net = build_stripe_network(cfg, ConductanceKernel::miller_abrahams(2.0, 1.0), 8.0);
      const auto m = merge_boundary(net);
      CHECK(m.count(NodeClass::LeftBoundary) == 1);
      CHECK(m.count(NodeClass::RightBoundary) == 1);
      const double a = sigma_direct(net);
      const double b = sigma_direct(m);
      CHECK(std::abs(a - b) <= 1e-12 * a);
    }
  }
}

TEST_CASE("floating components are flagged") {
  // Node 2 has no edge at all.
  std::vector<Node> nodes{{{-1, 0, 0}, 0, NodeClass::LeftBoundary},
                          {{-0.2, 0, 0}, 0, NodeClass::Interior},
                          {{0.4, 0, 0}, 0, NodeClass::Interior},
                          {{1, 0, 0}, 0, NodeClass::RightBoundary}};
  const auto net = make_network(1, 1.0, nodes, {{0, 1, 1.0}, {1, 3, 1.0}});
  CHECK(net.floating[2] == 1);
  CHECK(net.floating[1] == 0);
  const auto pot = solve_potential(net);
  CHECK(pot.values[2] == 0.5);
  CHECK(pot.values[1] == doctest::Approx(0.5));
}

TEST_CASE("errors") {
  const auto k = ConductanceKernel::miller_abrahams(1.0, 1.0);
  SUBCASE("empty boundary") {
    const auto cfg = points_1d({{0.0, 0.0}, {0.2, 0.0}, {1.0, 0.0}}, Box::cube(1, -3.0, 3.0));
    CHECK_THROWS_AS(build_stripe_network(cfg, k, 1.5), EmptyBoundary);
  }
  SUBCASE("window too small") {
    const auto cfg = points_1d({{-1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}}, Box::cube(1, -1.2, 1.2));
    CHECK_THROWS_AS(build_stripe_network(cfg, k, 1.5), WindowTooSmall);
  }
  SUBCASE("edge without interior endpoint") {
    std::vector<Node> nodes{{{-1, 0, 0}, 0, NodeClass::LeftBoundary},
                            {{0, 0, 0}, 0, NodeClass::Interior},
                            {{1, 0, 0}, 0, NodeClass::RightBoundary}};
    CHECK_THROWS_AS(make_network(1, 1.0, nodes, {{0, 2, 1.0}}), InvalidArgument);
    CHECK_THROWS_AS(make_network(1, 1.0, nodes, {{0, 1, -1.0}}), InvalidArgument);
  }
}

TEST_CASE("network text export round-trips exactly") {
  const auto cfg = poisson_stripe(3, 4.0, 2.0, 8);
  const auto net = build_stripe_network(cfg, ConductanceKernel::miller_abrahams(1.5, 0.7), 4.0);
  std::stringstream nodes, edges;
  write_nodes(nodes, net);
  write_edges(edges, net);
  const auto back = read_network(nodes, edges, 3, 4.0);
  REQUIRE(back.size() == net.size());
  REQUIRE(back.edges.size() == net.edges.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    CHECK(back.nodes[i].x == net.nodes[i].x);
    CHECK(back.nodes[i].mark == net.nodes[i].mark);
    CHECK(back.nodes[i].cls == net.nodes[i].cls);
  }
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    CHECK(back.edges[e].i == net.edges[e].i);
    CHECK(back.edges[e].j == net.edges[e].j);
    CHECK(back.edges[e].weight == net.edges[e].weight);
  }
}
