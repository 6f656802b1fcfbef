#include "frango/chart.hpp"

#include <cmath>
#include <sstream>

#include "frango/error.hpp"

namespace frango {

Box::Box(std::vector<Interval> axes) : axes_(std::move(axes)) {
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    const auto& iv = axes_[k];
    if (!(std::isfinite(iv.lower) && std::isfinite(iv.upper) && iv.upper > iv.lower)) {
      std::ostringstream os;
      os << "degenerate interval on axis " << k << ": [" << iv.lower << ", " << iv.upper << "]";
      throw DomainError(os.str());
    }
  }
}

std::vector<double> Box::base() const {
  std::vector<double> b(axes_.size());
  for (std::size_t k = 0; k < axes_.size(); ++k) b[k] = axes_[k].lower;
  return b;
}

std::vector<double> Box::center() const {
  std::vector<double> c(axes_.size());
  for (std::size_t k = 0; k < axes_.size(); ++k) c[k] = 0.5 * (axes_[k].lower + axes_[k].upper);
  return c;
}

bool Box::contains(std::span<const double> x, double tol) const {
  if (x.size() != axes_.size()) return false;
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    double slack = tol * std::max(1.0, axes_[k].upper - axes_[k].lower);
    if (x[k] < axes_[k].lower - slack || x[k] > axes_[k].upper + slack) return false;
  }
  return true;
}

void Box::require_contains(std::span<const double> x, double tol) const {
  if (x.size() != axes_.size()) {
    throw DomainError("point has " + std::to_string(x.size()) + " coordinates, chart has " +
                      std::to_string(axes_.size()));
  }
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    double slack = tol * std::max(1.0, axes_[k].upper - axes_[k].lower);
    if (x[k] < axes_[k].lower - slack || x[k] > axes_[k].upper + slack) {
      std::ostringstream os;
      os << "coordinate " << k << " = " << x[k] << " outside [" << axes_[k].lower << ", "
         << axes_[k].upper << "]";
      throw DomainError(os.str());
    }
  }
}

Chart::Chart(std::size_t n, std::size_t m, Box box) : Chart(n, m, std::move(box), 2) {}

Chart Chart::with_box(Box box) const { return Chart(n_, m_, std::move(box), 1); }

Chart Chart::tangent(std::size_t n, Box box) { return Chart(n, n, std::move(box), 1); }

Chart::Chart(std::size_t n, std::size_t m, Box box, std::size_t min_n) : n_(n), m_(m), box_(std::move(box)) {
  if (n < min_n || m < 1) {
    throw DomainError("chart needs n >= " + std::to_string(min_n) + " and m >= 1, got n = " + std::to_string(n) +
                      ", m = " + std::to_string(m));
  }
  if (box_.dim() != n + m) {
    throw DomainError("chart box has dimension " + std::to_string(box_.dim()) + ", expected " +
                      std::to_string(n + m));
  }
}

LatticeSpec LatticeSpec::uniform(std::size_t dim, int count, bool exclude_base) {
  return LatticeSpec{std::vector<int>(dim, count), exclude_base};
}

std::vector<double> lattice_axis(const Interval& iv, int count, bool exclude_base) {
  if (count < 1) throw DomainError("lattice axis needs at least one node");
  std::vector<double> nodes(static_cast<std::size_t>(count));
  double len = iv.upper - iv.lower;
  if (count == 1) {
    nodes[0] = iv.lower + 0.5 * len;
    return nodes;
  }
  for (int j = 0; j < count; ++j) {
    double t = exclude_base ? static_cast<double>(j + 1) / count
                            : static_cast<double>(j) / (count - 1);
    nodes[static_cast<std::size_t>(j)] = (j + 1 == count) ? iv.upper : iv.lower + t * len;
  }
  return nodes;
}

std::vector<std::vector<double>> lattice_points(const Box& box, const LatticeSpec& spec) {
  if (spec.counts.size() != box.dim()) {
    throw DomainError("lattice spec has " + std::to_string(spec.counts.size()) +
                      " axes, box has " + std::to_string(box.dim()));
  }
  std::vector<std::vector<double>> axes;
  std::size_t total = 1;
  for (std::size_t k = 0; k < box.dim(); ++k) {
    axes.push_back(lattice_axis(box.axis(k), spec.counts[k], spec.exclude_base));
    total *= axes.back().size();
  }
  std::vector<std::vector<double>> pts;
  pts.reserve(total);
  std::vector<std::size_t> idx(box.dim(), 0);
  for (std::size_t p = 0; p < total; ++p) {
    std::vector<double> x(box.dim());
    for (std::size_t k = 0; k < box.dim(); ++k) x[k] = axes[k][idx[k]];
    pts.push_back(std::move(x));
    for (std::size_t k = box.dim(); k-- > 0;) {
      if (++idx[k] < axes[k].size()) break;
      idx[k] = 0;
    }
  }
  return pts;
}

}  // namespace frango
