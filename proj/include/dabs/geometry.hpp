#ifndef DABS_GEOMETRY_HPP_
#define DABS_GEOMETRY_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "dabs/util.hpp"

namespace dabs {

/* axis-aligned closed box [lower, upper] */
struct Box {
  Vec lower, upper;

  size_t dim() const { return lower.size(); }
  double width(size_t i) const { return upper[i] - lower[i]; }
  bool contains(const Vec& p) const;
  /* true if this box is entirely inside the other */
  bool inside(const Box& other) const;
  /* true if the two closed boxes share at least one point */
  bool intersects(const Box& other) const;
  /* throws ConfigError if dimensions mismatch or lower > upper */
  void validate(const char* what) const;
};

/* axis-aligned block of cell indices, one closed index range per dimension;
 * clipped marks that the generating ball stuck out of the grid box, empty
 * that it misses the box entirely */
struct IndexRect {
  std::vector<size_t> lo, hi;
  bool clipped = false;
  bool empty = false;

  size_t count() const {
    if (empty) return 0;
    size_t n = 1;
    for (size_t d = 0; d < lo.size(); ++d) n *= hi[d] - lo[d] + 1;
    return n;
  }
};

/**
 * @brief Uniform rectangular partition of a box into congruent cells.
 *
 * Cell j (multi-index) covers lower + [2*j*eta, 2*(j+1)*eta] per dimension and
 * has center lower + (2*j+1)*eta, where eta is the vector of cell half-widths.
 * The box must be an exact multiple of 2*eta in every dimension; construction
 * rejects anything else. Flat indices are row-major with dimension 0 fastest:
 * index = j0 + counts[0]*(j1 + counts[1]*(j2 + ...)).
 */
class UniformGrid {
 public:
  /* throws ConfigError unless every width(i) is an exact multiple of 2*eta[i]
   * (relative tolerance 1e-9) */
  UniformGrid(Box box, Vec eta);

  size_t dim() const { return eta_.size(); }
  size_t num_cells() const { return num_cells_; }
  const Box& box() const { return box_; }
  const Vec& radii() const { return eta_; }
  const std::vector<size_t>& counts() const { return counts_; }

  /* throws std::out_of_range for idx >= num_cells() */
  Vec cell_center(size_t idx) const;

  /* closed cell bounds as a Box */
  Box cell_bounds(size_t idx) const;

  double cell_volume() const;

  /* nullopt if the point is outside the box; points exactly on a shared face
   * go to the cell with the larger index in that dimension */
  std::optional<size_t> point_to_cell(const Vec& p) const;

  /* all cells whose closed cell body intersects the closed infinity-norm ball
   * of the given per-dimension radii; the result is always a full index block */
  IndexRect cells_overlapping_ball(const Vec& center, const Vec& radius) const;

  /* same box, radii halved, 2^dim times the cells */
  UniformGrid refine() const;

  std::vector<size_t> to_multi(size_t idx) const;
  size_t from_multi(const std::vector<size_t>& j) const;

  /* visits every flat index inside the rect */
  template <typename F>
  void for_each_in_rect(const IndexRect& r, F&& fn) const {
    if (r.empty) return;
    std::vector<size_t> j(r.lo);
    for (;;) {
      fn(from_multi(j));
      size_t d = 0;
      while (d < j.size()) {
        if (j[d] < r.hi[d]) {
          ++j[d];
          break;
        }
        j[d] = r.lo[d];
        ++d;
      }
      if (d == j.size()) return;
    }
  }

 private:
  Box box_;
  Vec eta_;
  std::vector<size_t> counts_;
  std::vector<size_t> strides_;
  size_t num_cells_ = 0;
};

/* index of the coarse cell containing the given point (typically a fine-cell
 * center); throws ConfigError if the point lies outside the coarse grid */
size_t parent_cell(const UniformGrid& coarse, const Vec& point);

}  // namespace dabs

#endif
