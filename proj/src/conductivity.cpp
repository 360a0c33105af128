#include "mottlab/conductivity.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace mottlab {

double sigma_boundary_current(const StripeNetwork& net, std::span<const double> values) {
  require(values.size() == net.size(), "potential size does not match network");
  double sigma = 0.0;
  for (const auto& e : net.edges) {
    const NodeClass a = net.nodes[e.i].cls;
    const NodeClass b = net.nodes[e.j].cls;
    if (a == NodeClass::LeftBoundary && b == NodeClass::Interior) {
      sigma += e.weight * (values[e.j] - values[e.i]);
    } else if (b == NodeClass::LeftBoundary && a == NodeClass::Interior) {
      sigma += e.weight * (values[e.i] - values[e.j]);
    }
  }
  return sigma;
}

double sigma_cross_section(const StripeNetwork& net, std::span<const double> values,
                           double plane) {
  require(values.size() == net.size(), "potential size does not match network");
  if (!(plane >= -0.5 * net.ell && plane < 0.5 * net.ell)) {
    throw InvalidArgument("cross-section plane outside [-ell/2, ell/2)");
  }
  double sigma = 0.0;
  for (const auto& e : net.edges) {
    const double xi = net.nodes[e.i].x[0];
    const double xj = net.nodes[e.j].x[0];
    if (xi <= plane && plane < xj) {
      sigma += e.weight * (values[e.j] - values[e.i]);
    } else if (xj <= plane && plane < xi) {
      sigma += e.weight * (values[e.i] - values[e.j]);
    }
  }
  return sigma;
}

double sigma_energy(const StripeNetwork& net, std::span<const double> values) {
  return dirichlet_energy(net, values);
}

double rescaled_conductivity(double sigma, double ell, int dimension) {
  return std::pow(ell, 2 - dimension) * sigma;
}

std::vector<double> default_cross_sections(double ell) {
  std::vector<double> planes;
  for (int j = 0; j < 10; ++j) planes.push_back(-0.5 * ell + j * ell / 10.0);
  return planes;
}

double condition_proxy(const StripeNetwork& net) {
  std::vector<double> weight(net.size(), 0.0);
  for (const auto& e : net.edges) {
    weight[e.i] += e.weight;
    weight[e.j] += e.weight;
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (net.nodes[i].cls != NodeClass::Interior || net.floating[i]) continue;
    lo = std::min(lo, weight[i]);
    hi = std::max(hi, weight[i]);
  }
  return hi > 0.0 && std::isfinite(lo) ? hi / lo : 1.0;
}

double ConductivityReport::cross_min() const {
  double v = std::numeric_limits<double>::infinity();
  for (const auto& [plane, s] : sigma_cross) v = std::min(v, s);
  return v;
}

double ConductivityReport::cross_max() const {
  double v = -std::numeric_limits<double>::infinity();
  for (const auto& [plane, s] : sigma_cross) v = std::max(v, s);
  return v;
}

double ConductivityReport::max_relative_spread() const {
  double lo = std::min({sigma_boundary, sigma_energy, cross_min()});
  double hi = std::max({sigma_boundary, sigma_energy, cross_max()});
  const double scale = std::abs(sigma_energy);
  return scale > 0.0 ? (hi - lo) / scale : hi - lo;
}

ConductivityReport analyze_conductivity(const StripeNetwork& net,
                                        const PotentialField& potential,
                                        double solver_tol, const RunTag& tag,
                                        std::span<const double> planes) {
  ConductivityReport rep;
  rep.ell = net.ell;
  rep.dimension = net.dimension;
  rep.tag = tag;
  rep.cg_iters = potential.iterations;
  rep.sigma_boundary = sigma_boundary_current(net, potential.values);
  rep.sigma_energy = sigma_energy(net, potential.values);
  const std::vector<double> defaults = default_cross_sections(net.ell);
  if (planes.empty()) planes = defaults;
  for (double plane : planes) {
    rep.sigma_cross[plane] = sigma_cross_section(net, potential.values, plane);
  }
  rep.rescaled = rescaled_conductivity(rep.sigma_energy, net.ell, net.dimension);
  rep.condition_proxy = condition_proxy(net);
  rep.tol_equiv = std::max(1e-8, 100.0 * solver_tol * rep.condition_proxy);

  const double spread = rep.max_relative_spread();
  if (!(spread <= rep.tol_equiv)) {
    std::ostringstream msg;
    msg << std::setprecision(6) << "conductivity formulas disagree: relative spread "
        << spread << " exceeds " << rep.tol_equiv << " (seed " << tag.seed << ", ell "
        << net.ell << ")";
    throw EquivalenceFailure(msg.str());
  }
  return rep;
}

std::string conductivity_csv_header() {
  return "seed,d,ell,beta,alpha,gamma_loc,sigma_boundary,sigma_energy,sigma_cross_min,"
         "sigma_cross_max,rescaled,cg_iters,condition_proxy";
}

void write_conductivity_row(std::ostream& os, const ConductivityReport& r) {
  os << std::setprecision(17) << r.tag.seed << ',' << r.dimension << ',' << r.ell << ','
     << r.tag.beta << ',' << r.tag.alpha << ',' << r.tag.gamma_loc << ',' << r.sigma_boundary
     << ',' << r.sigma_energy << ',' << r.cross_min() << ',' << r.cross_max() << ','
     << r.rescaled << ',' << r.cg_iters << ',' << r.condition_proxy << '\n';
}

}  // namespace mottlab
