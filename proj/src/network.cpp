#include "mottlab/network.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mottlab/spatial_grid.hpp"

namespace mottlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Edge cutoff default: envelope below this relative level is dropped.
constexpr double kCutoffEnvelope = 1e-14;
constexpr double kTinyWeightRatio = 1e-300;

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t a) {
    while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
    return a;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

double ball_volume(int d, double r) {
  if (r <= 0.0) return 0.0;
  switch (d) {
    case 1: return 2.0 * r;
    case 2: return std::numbers::pi * r * r;
    default: return 4.0 / 3.0 * std::numbers::pi * r * r * r;
  }
}

// Bound on sum_{y : |y - x| >= r0} c(x, y) when every unit cell holds at
// most `occupancy` points: points at distance in [r, r+1) sit in cells inside
// the annulus thickened by one cell diagonal.
double tail_bound(const ConductanceKernel& kernel, int d, double r0,
                  std::size_t occupancy, double max_distance) {
  if (!std::isfinite(r0) || occupancy == 0) return 0.0;
  const double diag = std::sqrt(static_cast<double>(d));
  double total = 0.0;
  for (int k = 0;; ++k) {
    const double r = r0 + k;
    if (r > max_distance + 1.0) break;
    const double env = kernel.distance_envelope(r);
    if (env == 0.0) break;
    const double cells = ball_volume(d, r + 1.0 + diag) - ball_volume(d, r - diag);
    const double term = static_cast<double>(occupancy) * cells * env;
    total += term;
    if (!std::isfinite(total)) break;
    if (k > 8 && term < 1e-18 * total) break;
  }
  return total;
}

std::vector<std::uint8_t> floating_flags(const std::vector<Node>& nodes,
                                         const std::vector<Edge>& edges) {
  UnionFind uf(nodes.size());
  for (const auto& e : edges) uf.unite(e.i, e.j);
  std::vector<std::uint8_t> anchored(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].cls != NodeClass::Interior) anchored[uf.find(i)] = 1;
  }
  std::vector<std::uint8_t> out(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out[i] = nodes[i].cls == NodeClass::Interior && !anchored[uf.find(i)];
  }
  return out;
}

}  // namespace

const char* to_string(NodeClass c) {
  switch (c) {
    case NodeClass::Interior: return "Interior";
    case NodeClass::LeftBoundary: return "LeftBoundary";
    case NodeClass::RightBoundary: return "RightBoundary";
  }
  return "?";
}

NodeClass node_class_from_string(const std::string& s) {
  if (s == "Interior") return NodeClass::Interior;
  if (s == "LeftBoundary") return NodeClass::LeftBoundary;
  if (s == "RightBoundary") return NodeClass::RightBoundary;
  throw InvalidArgument("unknown node class '" + s + "'");
}

std::size_t StripeNetwork::count(NodeClass c) const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [c](const Node& n) { return n.cls == c; }));
}

void StripeNetwork::validate() const {
  if (count(NodeClass::LeftBoundary) == 0 || count(NodeClass::RightBoundary) == 0) {
    throw EmptyBoundary("stripe network needs nodes on both boundary half-stripes");
  }
  if (count(NodeClass::Interior) == 0) {
    throw EmptyBoundary("stripe network has no interior node");
  }
  require(floating.size() == nodes.size(), "floating flags out of sync with nodes");
  for (const auto& e : edges) {
    require(e.i < nodes.size() && e.j < nodes.size() && e.i != e.j, "edge endpoint out of range");
    require(nodes[e.i].cls == NodeClass::Interior || nodes[e.j].cls == NodeClass::Interior,
            "edge without interior endpoint");
    require(std::isfinite(e.weight) && e.weight > 0.0, "edge weight must be finite and > 0");
  }
}

NodeClass classify(const Point& x, int dimension, double ell) {
  (void)dimension;
  if (x[0] <= -0.5 * ell) return NodeClass::LeftBoundary;
  if (x[0] >= 0.5 * ell) return NodeClass::RightBoundary;
  return NodeClass::Interior;
}

StripeNetwork make_network(int dimension, double ell, std::vector<Node> nodes,
                           std::vector<Edge> edges) {
  StripeNetwork net;
  net.dimension = dimension;
  net.ell = ell;
  net.nodes = std::move(nodes);
  net.edges = std::move(edges);
  net.floating = floating_flags(net.nodes, net.edges);
  net.truncation.cutoff_radius = kInf;
  for (const auto& e : net.edges) net.truncation.retained_total_weight += e.weight;
  net.truncation.floating_nodes = static_cast<std::size_t>(
      std::count(net.floating.begin(), net.floating.end(), std::uint8_t{1}));
  net.validate();
  return net;
}

Box stripe_window(int dimension, double ell, double depth) {
  Box b = Box::cube(dimension, -0.5 * ell, 0.5 * ell);
  b.lo[0] -= depth;
  b.hi[0] += depth;
  return b;
}

double stripe_depth(const ConductanceKernel& kernel, double ell,
                    const TruncationPolicy& policy) {
  if (policy.depth) return *policy.depth;
  if (kernel.is_miller_abrahams()) {
    return std::min(0.5 * ell, kernel.cutoff_radius(policy.depth_tol));
  }
  const double range = kernel.cutoff_radius(policy.depth_tol);
  return std::isfinite(range) ? range : 0.5 * ell;
}

StripeNetwork build_stripe_network(const MarkedConfiguration& config,
                                   const ConductanceKernel& kernel, double ell,
                                   const TruncationPolicy& policy) {
  require(ell > 0.0, "stripe side ell must be positive");
  const int d = config.dimension;
  const double half = 0.5 * ell;
  const double depth = stripe_depth(kernel, ell, policy);
  require(depth >= 0.0, "stripe depth must be non-negative");

  const Box& w = config.window;
  bool covers = w.lo[0] <= -half - depth && w.hi[0] >= half + depth;
  for (int k = 1; k < d; ++k) covers = covers && w.lo[k] <= -half && w.hi[k] >= half;
  if (!covers) {
    throw WindowTooSmall("sampling window does not cover the truncated stripe");
  }

  StripeNetwork net;
  net.dimension = d;
  net.ell = ell;
  for (const auto& p : config.points) {
    bool inside = p.x[0] >= -half - depth && p.x[0] <= half + depth;
    for (int k = 1; k < d; ++k) inside = inside && p.x[k] > -half && p.x[k] < half;
    if (!inside) continue;
    net.nodes.push_back({p.x, p.mark, classify(p.x, d, ell)});
  }
  if (net.count(NodeClass::LeftBoundary) == 0 || net.count(NodeClass::RightBoundary) == 0 ||
      net.count(NodeClass::Interior) == 0) {
    throw EmptyBoundary("stripe of side " + std::to_string(ell) +
                        " has an empty interior or boundary class");
  }

  const double radius = policy.exact
                            ? kInf
                            : policy.cutoff_radius.value_or(kernel.cutoff_radius(kCutoffEnvelope));
  require(radius > 0.0, "cutoff radius must be positive");

  std::vector<Point> xs;
  xs.reserve(net.nodes.size());
  for (const auto& n : net.nodes) xs.push_back(n.x);

  std::vector<Edge> edges;
  auto add = [&](std::uint32_t i, std::uint32_t j) {
    const Node& a = net.nodes[i];
    const Node& b = net.nodes[j];
    const double c = kernel(a.x, b.x, a.mark, b.mark);
    if (c > 0.0) edges.push_back({i, j, c});
  };
  auto want = [&](std::uint32_t i, std::uint32_t j) {
    // Interior-interior pairs are visited from both ends; keep one.
    return net.nodes[j].cls != NodeClass::Interior || j > i;
  };

  Box extent = stripe_window(d, ell, depth);
  if (std::isfinite(radius)) {
    const SpatialGrid grid(extent, radius, xs);
    for (std::uint32_t i = 0; i < net.nodes.size(); ++i) {
      if (net.nodes[i].cls != NodeClass::Interior) continue;
      grid.for_each_within(xs[i], radius, i, [&](std::uint32_t j, const Point&) {
        if (want(i, j)) add(i, j);
      });
    }
  } else {
    for (std::uint32_t i = 0; i < net.nodes.size(); ++i) {
      if (net.nodes[i].cls != NodeClass::Interior) continue;
      for (std::uint32_t j = 0; j < net.nodes.size(); ++j) {
        if (j != i && want(i, j)) add(i, j);
      }
    }
  }

  double wmax = 0.0;
  for (const auto& e : edges) wmax = std::max(wmax, e.weight);
  TruncationReport& report = net.truncation;
  for (const auto& e : edges) {
    if (e.weight < kTinyWeightRatio * wmax) {
      ++report.dropped_tiny;
      continue;
    }
    net.edges.push_back(e);
    report.retained_total_weight += e.weight;
  }

  report.cutoff_radius = radius;
  report.depth = depth;
  double diameter = 0.0;
  for (int k = 0; k < d; ++k) diameter += std::pow(extent.hi[k] - extent.lo[k], 2);
  diameter = std::sqrt(diameter);
  const SpatialGrid unit_cells(extent, 1.0, xs);
  // Pairs beyond the sampled window were never seen; bound them with the
  // same occupancy as the observed cells.
  const double far = diameter + radius;
  report.neglected_per_node_bound =
      std::isfinite(radius)
          ? tail_bound(kernel, d, radius, unit_cells.max_occupancy(), far)
          : 0.0;
  report.depth_per_node_bound =
      tail_bound(kernel, d, std::max(depth, 1e-300), unit_cells.max_occupancy(),
                 std::max(far, depth + diameter));
  report.neglected_total_bound = report.neglected_per_node_bound *
                                 static_cast<double>(net.count(NodeClass::Interior));

  net.floating = floating_flags(net.nodes, net.edges);
  report.floating_nodes = static_cast<std::size_t>(
      std::count(net.floating.begin(), net.floating.end(), std::uint8_t{1}));
  net.validate();
  return net;
}

StripeNetwork merge_boundary(const StripeNetwork& net) {
  if (net.merged || (net.count(NodeClass::LeftBoundary) == 1 &&
                     net.count(NodeClass::RightBoundary) == 1)) {
    return net;
  }
  std::vector<Node> nodes;
  std::vector<std::uint32_t> remap(net.size(), 0);
  for (std::uint32_t i = 0; i < net.size(); ++i) {
    if (net.nodes[i].cls == NodeClass::Interior) {
      remap[i] = static_cast<std::uint32_t>(nodes.size());
      nodes.push_back(net.nodes[i]);
    }
  }
  const auto n_interior = static_cast<std::uint32_t>(nodes.size());
  const std::uint32_t left = n_interior;
  const std::uint32_t right = n_interior + 1;
  Node l{}, r{};
  l.x[0] = -0.5 * net.ell;
  l.cls = NodeClass::LeftBoundary;
  r.x[0] = 0.5 * net.ell;
  r.cls = NodeClass::RightBoundary;
  nodes.push_back(l);
  nodes.push_back(r);
  for (std::uint32_t i = 0; i < net.size(); ++i) {
    if (net.nodes[i].cls == NodeClass::LeftBoundary) remap[i] = left;
    if (net.nodes[i].cls == NodeClass::RightBoundary) remap[i] = right;
  }

  std::vector<double> to_left(n_interior, 0.0), to_right(n_interior, 0.0);
  std::vector<Edge> edges;
  for (const auto& e : net.edges) {
    const std::uint32_t a = remap[e.i];
    const std::uint32_t b = remap[e.j];
    if (a < n_interior && b < n_interior) {
      edges.push_back({a, b, e.weight});
    } else {
      const std::uint32_t inner = a < n_interior ? a : b;
      const std::uint32_t outer = a < n_interior ? b : a;
      (outer == left ? to_left : to_right)[inner] += e.weight;
    }
  }
  for (std::uint32_t i = 0; i < n_interior; ++i) {
    if (to_left[i] > 0.0) edges.push_back({i, left, to_left[i]});
    if (to_right[i] > 0.0) edges.push_back({i, right, to_right[i]});
  }

  StripeNetwork out;
  out.dimension = net.dimension;
  out.ell = net.ell;
  out.nodes = std::move(nodes);
  out.edges = std::move(edges);
  out.truncation = net.truncation;
  out.floating = floating_flags(out.nodes, out.edges);
  out.merged = true;
  out.validate();
  return out;
}

void write_nodes(std::ostream& os, const StripeNetwork& net) {
  os << std::setprecision(17);
  for (std::size_t i = 0; i < net.size(); ++i) {
    os << i;
    for (int k = 0; k < net.dimension; ++k) os << ' ' << net.nodes[i].x[k];
    os << ' ' << net.nodes[i].mark << ' ' << to_string(net.nodes[i].cls) << '\n';
  }
}

void write_edges(std::ostream& os, const StripeNetwork& net) {
  os << std::setprecision(17);
  for (const auto& e : net.edges) os << e.i << ' ' << e.j << ' ' << e.weight << '\n';
}

StripeNetwork read_network(std::istream& nodes_in, std::istream& edges_in, int dimension,
                           double ell) {
  std::vector<Node> nodes;
  std::string line;
  while (std::getline(nodes_in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::size_t index = 0;
    Node n;
    std::string cls;
    ss >> index;
    for (int k = 0; k < dimension; ++k) ss >> n.x[k];
    ss >> n.mark >> cls;
    require(!ss.fail() && index == nodes.size(), "malformed node table line: " + line);
    n.cls = node_class_from_string(cls);
    nodes.push_back(n);
  }
  std::vector<Edge> edges;
  while (std::getline(edges_in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    Edge e;
    ss >> e.i >> e.j >> e.weight;
    require(!ss.fail(), "malformed edge line: " + line);
    edges.push_back(e);
  }
  return make_network(dimension, ell, std::move(nodes), std::move(edges));
}

}  // namespace mottlab
