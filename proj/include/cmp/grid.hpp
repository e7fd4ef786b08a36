#pragma once

// Masked rectilinear lattices over a bounding box.
//
// Nodes sit at box.lo + i*h for integer multi-indices i. A node belongs to the
// grid iff it is strictly inside the shape and not on the lattice boundary of
// the box; all other lattice points carry the homogeneous Dirichlet value and
// are not stored.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace cmp {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

// The whole bounding box.
struct Rectangle {};

// d-dimensional ball ("disk" in the plane).
struct Ball {
  std::vector<double> center;
  double radius = 1.0;
};

struct Annulus {
  std::vector<double> center;
  double inner_radius = 0.5;
  double outer_radius = 1.0;
};

// Two lobe x lobe squares joined along the x axis by a neck_length x
// neck_width channel centered at half the lobe height. Anchored at the lower
// corner of the box; planar only.
struct Dumbbell {
  double lobe = 1.0;
  double neck_length = 0.5;
  double neck_width = 0.125;
};

struct MaskShape {
  std::function<bool(std::span<const double>)> inside;
  std::string name = "mask";
  bool connected = true;
};

using Shape = std::variant<Rectangle, Ball, Annulus, Dumbbell, MaskShape>;

// Exponent w of the background conformal factor e^{2w}; empty means flat.
using BackgroundField = std::function<double(std::span<const double>)>;

struct GridSpec {
  int dimension = 2;
  double spacing = 0.0;
  std::vector<Interval> box;
  Shape shape = Rectangle{};
  BackgroundField background;

  static GridSpec rectangle(std::vector<Interval> box, double h);
  static GridSpec unit_cube(int dimension, double h);
  static GridSpec disk(std::vector<double> center, double radius, double h);
  static GridSpec annulus(std::vector<double> center, double inner, double outer, double h);
  static GridSpec dumbbell(double lobe, double neck_length, double neck_width, double h);

  std::string shape_name() const;
};

class Grid {
 public:
  static constexpr std::int32_t kAbsent = -1;

  std::int32_t size() const { return static_cast<std::int32_t>(weight_.size()); }
  int dimension() const { return spec_.dimension; }
  double spacing() const { return spec_.spacing; }
  double node_volume() const { return node_volume_; }

  std::span<const std::int32_t> coords(std::int32_t node) const {
    return {coords_.data() + static_cast<std::size_t>(node) * spec_.dimension,
            static_cast<std::size_t>(spec_.dimension)};
  }
  double position(std::int32_t node, int axis) const {
    return spec_.box[axis].lo + coords(node)[axis] * spec_.spacing;
  }
  std::vector<double> position(std::int32_t node) const;

  // direction = 2*axis for the -e_axis neighbor, 2*axis+1 for +e_axis;
  // kAbsent when that lattice point is outside the grid.
  std::int32_t neighbor(std::int32_t node, int direction) const {
    return neighbors_[static_cast<std::size_t>(node) * 2 * spec_.dimension + direction];
  }
  int directions() const { return 2 * spec_.dimension; }
  bool boundary_adjacent(std::int32_t node) const { return boundary_adjacent_[node] != 0; }

  // e^{2w} at the node.
  double background_weight(std::int32_t node) const { return weight_[node]; }
  // e^{2w} h^d: the node's share of the background volume.
  double volume_weight(std::int32_t node) const { return weight_[node] * node_volume_; }
  std::span<const double> background_weights() const { return weight_; }
  std::span<const double> background_exponent() const { return exponent_; }
  bool flat() const { return flat_; }

  // Lattice points per axis, boundary included.
  std::int32_t lattice_points(int axis) const { return extent_[axis]; }
  std::int32_t lattice_size() const { return static_cast<std::int32_t>(lattice_.size()); }
  // Node index at an integer multi-index, kAbsent if outside the grid or box.
  std::int32_t index_at(std::span<const std::int32_t> multi_index) const;

  const GridSpec& spec() const { return spec_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  friend Grid build_grid(const GridSpec& spec);

  GridSpec spec_;
  double node_volume_ = 0.0;
  bool flat_ = true;
  std::vector<std::int32_t> extent_;
  std::vector<std::int32_t> lattice_;
  std::vector<std::int32_t> coords_;
  std::vector<std::int32_t> neighbors_;
  std::vector<std::uint8_t> boundary_adjacent_;
  std::vector<double> exponent_;
  std::vector<double> weight_;
  std::vector<std::string> warnings_;
};

// Throws InputError for invalid specs and for an empty interior
// ("degenerate domain").
Grid build_grid(const GridSpec& spec);

// Sum of e^{2w} h^d over the nodes.
double domain_volume(const Grid& grid);

// Node permutation induced by reflecting the lattice across the box midplane
// normal to `axis`; empty when the node set is not mirror symmetric.
std::vector<std::int32_t> mirror_map(const Grid& grid, int axis);

// Number of 2d-connected components of the whole node set.
int grid_components(const Grid& grid);

// One row per node: node, integer coords, physical coords, e^{2w}.
void write_grid_csv(const Grid& grid, std::ostream& os);

}  // namespace cmp
