#include "dabs/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dabs/errors.hpp"

namespace dabs {

bool Box::contains(const Vec& p) const {
  for (size_t i = 0; i < dim(); ++i)
    if (p[i] < lower[i] || p[i] > upper[i]) return false;
  return true;
}

bool Box::inside(const Box& other) const {
  for (size_t i = 0; i < dim(); ++i)
    if (lower[i] < other.lower[i] || upper[i] > other.upper[i]) return false;
  return true;
}

bool Box::intersects(const Box& other) const {
  for (size_t i = 0; i < dim(); ++i)
    if (upper[i] < other.lower[i] || lower[i] > other.upper[i]) return false;
  return true;
}

void Box::validate(const char* what) const {
  if (lower.size() != upper.size())
    throw ConfigError(std::string(what) + ": lower/upper dimension mismatch");
  if (lower.empty()) throw ConfigError(std::string(what) + ": empty box");
  for (size_t i = 0; i < dim(); ++i)
    if (!(lower[i] <= upper[i]))
      throw ConfigError(std::string(what) + ": lower > upper in dimension " +
                        std::to_string(i));
}

UniformGrid::UniformGrid(Box box, Vec eta) : box_(std::move(box)), eta_(std::move(eta)) {
  box_.validate("grid box");
  if (eta_.size() != box_.dim())
    throw ConfigError("grid: eta dimension does not match the box");
  counts_.resize(eta_.size());
  strides_.resize(eta_.size());
  num_cells_ = 1;
  for (size_t d = 0; d < eta_.size(); ++d) {
    if (!(eta_[d] > 0)) throw ConfigError("grid: eta must be positive");
    double w = box_.width(d);
    double exact = w / (2.0 * eta_[d]);
    double rounded = std::round(exact);
    if (rounded < 1 || std::fabs(exact - rounded) > 1e-9 * std::max(1.0, exact))
      throw ConfigError("grid: box width " + format_real(w) + " in dimension " +
                        std::to_string(d) + " is not an exact multiple of 2*eta = " +
                        format_real(2 * eta_[d]));
    counts_[d] = static_cast<size_t>(rounded);
    strides_[d] = num_cells_;
    num_cells_ *= counts_[d];
  }
}

std::vector<size_t> UniformGrid::to_multi(size_t idx) const {
  std::vector<size_t> j(dim());
  for (size_t d = 0; d < dim(); ++d) {
    j[d] = idx % counts_[d];
    idx /= counts_[d];
  }
  return j;
}

size_t UniformGrid::from_multi(const std::vector<size_t>& j) const {
  size_t idx = 0;
  for (size_t d = 0; d < dim(); ++d) idx += strides_[d] * j[d];
  return idx;
}

Vec UniformGrid::cell_center(size_t idx) const {
  if (idx >= num_cells_) throw std::out_of_range("cell_center: index out of range");
  auto j = to_multi(idx);
  Vec c(dim());
  for (size_t d = 0; d < dim(); ++d)
    c[d] = box_.lower[d] + (2.0 * j[d] + 1.0) * eta_[d];
  return c;
}

Box UniformGrid::cell_bounds(size_t idx) const {
  Vec c = cell_center(idx);
  Box b;
  b.lower.resize(dim());
  b.upper.resize(dim());
  for (size_t d = 0; d < dim(); ++d) {
    b.lower[d] = c[d] - eta_[d];
    b.upper[d] = c[d] + eta_[d];
  }
  return b;
}

double UniformGrid::cell_volume() const {
  double v = 1;
  for (double e : eta_) v *= 2 * e;
  return v;
}

std::optional<size_t> UniformGrid::point_to_cell(const Vec& p) const {
  if (p.size() != dim()) throw std::out_of_range("point_to_cell: dimension mismatch");
  size_t idx = 0;
  for (size_t d = 0; d < dim(); ++d) {
    if (p[d] < box_.lower[d] || p[d] > box_.upper[d]) return std::nullopt;
    /* floor sends an exact shared face to the higher cell */
    double pos = (p[d] - box_.lower[d]) / (2.0 * eta_[d]);
    auto j = static_cast<long long>(std::floor(pos));
    if (j < 0) j = 0;
    if (j >= static_cast<long long>(counts_[d]))
      j = static_cast<long long>(counts_[d]) - 1;
    idx += strides_[d] * static_cast<size_t>(j);
  }
  return idx;
}

IndexRect UniformGrid::cells_overlapping_ball(const Vec& center, const Vec& radius) const {
  if (center.size() != dim() || radius.size() != dim())
    throw std::out_of_range("cells_overlapping_ball: dimension mismatch");
  IndexRect r;
  r.lo.resize(dim());
  r.hi.resize(dim());
  for (size_t d = 0; d < dim(); ++d) {
    if (radius[d] < 0)
      throw std::out_of_range("cells_overlapping_ball: negative radius");
    double lo = center[d] - radius[d];
    double hi = center[d] + radius[d];
    if (lo < box_.lower[d] || hi > box_.upper[d]) r.clipped = true;
    /* cell j covers offset [2 j eta, 2 (j+1) eta]; closed sets, so touching counts */
    double a = (lo - box_.lower[d]) / (2.0 * eta_[d]);
    double b = (hi - box_.lower[d]) / (2.0 * eta_[d]);
    if (b < 0.0 || a > static_cast<double>(counts_[d])) {
      r.empty = true;
      r.lo[d] = 0;
      r.hi[d] = 0;
      continue;
    }
    auto jlo = static_cast<long long>(std::ceil(a - 1.0));
    auto jhi = static_cast<long long>(std::floor(b));
    if (jlo < 0) jlo = 0;
    if (jhi > static_cast<long long>(counts_[d]) - 1)
      jhi = static_cast<long long>(counts_[d]) - 1;
    r.lo[d] = static_cast<size_t>(jlo);
    r.hi[d] = static_cast<size_t>(jhi);
  }
  return r;
}

UniformGrid UniformGrid::refine() const {
  Vec half(eta_);
  for (double& e : half) e *= 0.5;
  return UniformGrid(box_, half);
}

size_t parent_cell(const UniformGrid& coarse, const Vec& point) {
  auto idx = coarse.point_to_cell(point);
  if (!idx) throw ConfigError("parent_cell: point outside the coarse grid");
  return *idx;
}

}  // namespace dabs
