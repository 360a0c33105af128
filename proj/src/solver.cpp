#include "mottlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include <Eigen/Dense>

#include "mottlab/rng.hpp"

namespace mottlab {

namespace {

constexpr std::uint32_t kNotUnknown = 0xffffffffU;

// Interior block L_II in CSR form plus the coupling to the right boundary.
struct InteriorSystem {
  std::vector<std::uint32_t> unknown_of;  // node -> row, or kNotUnknown
  std::vector<std::uint32_t> node_of;     // row -> node
  std::vector<std::size_t> row_start;
  std::vector<std::uint32_t> cols;
  std::vector<double> vals;
  std::vector<double> diag;
  std::vector<double> rhs;

  std::size_t size() const { return node_of.size(); }

  void multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t r = 0; r < size(); ++r) {
      double acc = diag[r] * x[r];
      for (std::size_t s = row_start[r]; s < row_start[r + 1]; ++s) acc -= vals[s] * x[cols[s]];
      y[r] = acc;
    }
  }
};

void check_flags(const StripeNetwork& net) {
  // Recompute anchoring; a stale or missing flag makes L_II singular.
  std::vector<std::vector<std::uint32_t>> adj(net.size());
  for (const auto& e : net.edges) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  std::vector<std::uint8_t> seen(net.size(), 0);
  std::vector<std::uint32_t> stack;
  for (std::uint32_t i = 0; i < net.size(); ++i) {
    if (net.nodes[i].cls != NodeClass::Interior) {
      seen[i] = 1;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const std::uint32_t a = stack.back();
    stack.pop_back();
    for (std::uint32_t b : adj[a]) {
      if (!seen[b]) {
        seen[b] = 1;
        stack.push_back(b);
      }
    }
  }
  for (std::uint32_t i = 0; i < net.size(); ++i) {
    if (!seen[i] && !net.floating[i]) {
      throw SingularComponent("interior node " + std::to_string(i) +
                              " is cut off from both boundaries but not flagged");
    }
  }
}

InteriorSystem assemble(const StripeNetwork& net) {
  net.validate();
  check_flags(net);
  InteriorSystem sys;
  sys.unknown_of.assign(net.size(), kNotUnknown);
  for (std::uint32_t i = 0; i < net.size(); ++i) {
    if (net.nodes[i].cls == NodeClass::Interior && !net.floating[i]) {
      sys.unknown_of[i] = static_cast<std::uint32_t>(sys.node_of.size());
      sys.node_of.push_back(i);
    }
  }
  const std::size_t n = sys.size();
  sys.diag.assign(n, 0.0);
  sys.rhs.assign(n, 0.0);
  std::vector<std::size_t> count(n + 1, 0);
  for (const auto& e : net.edges) {
    const auto a = sys.unknown_of[e.i];
    const auto b = sys.unknown_of[e.j];
    if (a != kNotUnknown && b != kNotUnknown) {
      ++count[a + 1];
      ++count[b + 1];
    }
  }
  std::partial_sum(count.begin(), count.end(), count.begin());
  sys.row_start = count;
  sys.cols.resize(count[n]);
  sys.vals.resize(count[n]);
  std::vector<std::size_t> fill(count.begin(), count.end() - 1);
  for (const auto& e : net.edges) {
    const auto a = sys.unknown_of[e.i];
    const auto b = sys.unknown_of[e.j];
    if (a != kNotUnknown) sys.diag[a] += e.weight;
    if (b != kNotUnknown) sys.diag[b] += e.weight;
    if (a != kNotUnknown && b != kNotUnknown) {
      sys.cols[fill[a]] = b;
      sys.vals[fill[a]++] = e.weight;
      sys.cols[fill[b]] = a;
      sys.vals[fill[b]++] = e.weight;
    } else if (a != kNotUnknown && net.nodes[e.j].cls == NodeClass::RightBoundary) {
      sys.rhs[a] += e.weight;
    } else if (b != kNotUnknown && net.nodes[e.i].cls == NodeClass::RightBoundary) {
      sys.rhs[b] += e.weight;
    }
  }
  return sys;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double relative_residual(const InteriorSystem& sys, std::span<const double> x) {
  std::vector<double> r(sys.size());
  sys.multiply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = sys.rhs[i] - r[i];
  const double b = norm2(sys.rhs);
  return b > 0.0 ? norm2(r) / b : norm2(r);
}

PotentialField scatter(const StripeNetwork& net, const InteriorSystem& sys,
                       std::span<const double> x) {
  PotentialField out;
  out.values.assign(net.size(), 0.0);
  for (std::uint32_t i = 0; i < net.size(); ++i) {
    switch (net.nodes[i].cls) {
      case NodeClass::LeftBoundary: out.values[i] = 0.0; break;
      case NodeClass::RightBoundary: out.values[i] = 1.0; break;
      case NodeClass::Interior:
        out.values[i] = net.floating[i] ? 0.5 : x[sys.unknown_of[i]];
        break;
    }
  }
  return out;
}

}  // namespace

PotentialField solve_potential(const StripeNetwork& net, double tol,
                               std::optional<int> max_iter) {
  require(tol > 0.0, "solver tolerance must be positive");
  const InteriorSystem sys = assemble(net);
  const std::size_t n = sys.size();
  const int cap = max_iter.value_or(
      static_cast<int>(std::ceil(50.0 * std::sqrt(static_cast<double>(std::max<std::size_t>(n, 1))))));

  std::vector<double> x(n, 0.0), r(sys.rhs), z(n), p(n), q(n);
  const double bnorm = norm2(sys.rhs);
  int it = 0;
  double rel = 0.0;
  if (n > 0 && bnorm > 0.0) {
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / sys.diag[i];
    p = z;
    double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    rel = norm2(r) / bnorm;
    while (rel > tol && it < cap) {
      sys.multiply(p, q);
      const double alpha = rz / std::inner_product(p.begin(), p.end(), q.begin(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / sys.diag[i];
      const double rz_next = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
      const double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
      ++it;
      rel = norm2(r) / bnorm;
    }
    // The recursive residual drifts; confirm against the true one.
    rel = relative_residual(sys, x);
    if (rel > tol) {
      throw NotConverged("potential solve stopped at relative residual " +
                             format_scientific(rel) + " after " + std::to_string(it) +
                             " iterations",
                         it, rel);
    }
  }
  PotentialField out = scatter(net, sys, x);
  out.iterations = it;
  out.residual_norm = rel;
  out.solver_kind = SolverKind::CG;
  return out;
}

PotentialField solve_potential_direct(const StripeNetwork& net) {
  const InteriorSystem sys = assemble(net);
  const auto n = static_cast<Eigen::Index>(sys.size());
  require(n <= 6000, "dense direct solve limited to 6000 interior nodes");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    A(r, r) = sys.diag[static_cast<std::size_t>(r)];
    b(r) = sys.rhs[static_cast<std::size_t>(r)];
    for (std::size_t s = sys.row_start[static_cast<std::size_t>(r)];
         s < sys.row_start[static_cast<std::size_t>(r) + 1]; ++s) {
      A(r, static_cast<Eigen::Index>(sys.cols[s])) -= sys.vals[s];
    }
  }
  const Eigen::VectorXd x = A.ldlt().solve(b);
  std::vector<double> xv(x.data(), x.data() + n);
  PotentialField out = scatter(net, sys, xv);
  out.residual_norm = n > 0 ? relative_residual(sys, xv) : 0.0;
  out.iterations = 0;
  out.solver_kind = SolverKind::Direct;
  return out;
}

double dirichlet_energy(const StripeNetwork& net, std::span<const double> values) {
  require(values.size() == net.size(), "potential size does not match network");
  double e = 0.0;
  for (const auto& edge : net.edges) {
    const double dv = values[edge.i] - values[edge.j];
    e += edge.weight * dv * dv;
  }
  return e;
}

std::vector<double> kirchhoff_residuals(const StripeNetwork& net,
                                        std::span<const double> values) {
  require(values.size() == net.size(), "potential size does not match network");
  std::vector<double> flux(net.size(), 0.0), weight(net.size(), 0.0);
  for (const auto& e : net.edges) {
    const double i = e.weight * (values[e.j] - values[e.i]);
    flux[e.i] += i;
    flux[e.j] -= i;
    weight[e.i] += e.weight;
    weight[e.j] += e.weight;
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (net.nodes[i].cls != NodeClass::Interior) continue;
    out.push_back(net.floating[i] || weight[i] == 0.0 ? 0.0 : std::abs(flux[i]) / weight[i]);
  }
  return out;
}

bool verify_minimality(const StripeNetwork& net, const PotentialField& potential,
                       int n_trials, double magnitude, std::uint64_t seed, double tol) {
  const double base = dirichlet_energy(net, potential.values);
  SplitMix64 rng(seed);
  std::vector<double> trial(potential.values);
  for (int t = 0; t < n_trials; ++t) {
    for (std::size_t i = 0; i < net.size(); ++i) {
      trial[i] = potential.values[i];
      if (net.nodes[i].cls == NodeClass::Interior) {
        trial[i] += magnitude * (2.0 * uniform01(rng) - 1.0);
      }
    }
    if (dirichlet_energy(net, trial) < base - 10.0 * tol * base) return false;
  }
  return true;
}

void write_potential_csv(std::ostream& os, const StripeNetwork& net,
                         const PotentialField& potential) {
  os << "node_index";
  for (int k = 0; k < net.dimension; ++k) os << ",x" << (k + 1);
  os << ",class,V\n" << std::setprecision(17);
  for (std::size_t i = 0; i < net.size(); ++i) {
    os << i;
    for (int k = 0; k < net.dimension; ++k) os << ',' << net.nodes[i].x[k];
    os << ',' << to_string(net.nodes[i].cls) << ',' << potential.values[i] << '\n';
  }
}

}  // namespace mottlab
