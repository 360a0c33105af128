#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mottlab/common.hpp"
#include "mottlab/environment.hpp"
#include "mottlab/kernel.hpp"

namespace mottlab {

enum class NodeClass : std::uint8_t { Interior, LeftBoundary, RightBoundary };

const char* to_string(NodeClass c);
NodeClass node_class_from_string(const std::string& s);

struct Node {
  Point x{};
  double mark = 0.0;
  NodeClass cls = NodeClass::Interior;
};

struct Edge {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double weight = 0.0;
};

// How much of the infinite stripe and of the complete graph is kept.
struct TruncationPolicy {
  // Boundary nodes deeper than W beyond +-ell/2 are dropped, with
  // W = min(ell/2, gamma ln(1/depth_tol)/2) for Miller-Abrahams kernels.
  double depth_tol = 1e-10;
  std::optional<double> depth;
  // Pairs farther apart than R are dropped; default makes the envelope
  // exp(-2R/gamma) fall below 1e-14.
  std::optional<double> cutoff_radius;
  // All pairs, no cutoff (oracle mode).
  bool exact = false;

  static TruncationPolicy exact_mode() {
    TruncationPolicy p;
    p.exact = true;
    return p;
  }
};

struct TruncationReport {
  double cutoff_radius = 0.0;  // +inf in exact mode
  double depth = 0.0;
  // Rigorous upper bounds on the conductance of discarded pairs.
  double neglected_per_node_bound = 0.0;
  double neglected_total_bound = 0.0;
  double depth_per_node_bound = 0.0;
  double retained_total_weight = 0.0;
  std::size_t dropped_tiny = 0;
  std::size_t floating_nodes = 0;
};

// Weighted graph on the points of the truncated stripe; every edge has at
// least one interior endpoint.
struct StripeNetwork {
  int dimension = 1;
  double ell = 1.0;
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  TruncationReport truncation;
  // Interior nodes whose component reaches no boundary node. They are held
  // at 1/2 and carry no current.
  std::vector<std::uint8_t> floating;
  bool merged = false;

  std::size_t size() const { return nodes.size(); }
  std::size_t count(NodeClass c) const;

  /// Throws InvalidArgument / EmptyBoundary if an invariant is broken.
  void validate() const;
};

NodeClass classify(const Point& x, int dimension, double ell);

/// Builds a network from explicit nodes and edges (classes are taken as
/// given) and computes the floating-component flags.
StripeNetwork make_network(int dimension, double ell, std::vector<Node> nodes,
                           std::vector<Edge> edges);

/// Region the sampling window must cover for a stripe of side `ell` with
/// boundary depth `depth`.
Box stripe_window(int dimension, double ell, double depth);

double stripe_depth(const ConductanceKernel& kernel, double ell,
                    const TruncationPolicy& policy);

/// Restricts `config` to the truncated stripe, classifies nodes against
/// +-ell/2 and enumerates edges with an interior endpoint. Throws
/// WindowTooSmall if the window misses part of the truncated stripe and
/// EmptyBoundary if a boundary class (or the interior) is empty.
StripeNetwork build_stripe_network(const MarkedConfiguration& config,
                                   const ConductanceKernel& kernel, double ell,
                                   const TruncationPolicy& policy = {});

/// Collapses each boundary class into one super-node; parallel conductances
/// from an interior node to a class add up. Interior nodes keep their order,
/// the left and right super-nodes come last.
StripeNetwork merge_boundary(const StripeNetwork& net);

// Node table "i x1 .. xd E class" and edge list "i j c_ij", 17 digits.
void write_nodes(std::ostream& os, const StripeNetwork& net);
void write_edges(std::ostream& os, const StripeNetwork& net);
StripeNetwork read_network(std::istream& nodes, std::istream& edges, int dimension,
                           double ell);

}  // namespace mottlab
