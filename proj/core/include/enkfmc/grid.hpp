#pragma once

#include <enkfmc/types.hpp>

#include <string_view>
#include <utility>
#include <vector>

namespace enkfmc {

enum class GridKind { ring1d, grid2d };
enum class Ordering { row_major, column_major };
enum class Boundary { clipped, periodic };

GridKind parse_grid_kind(std::string_view s);
Ordering parse_ordering(std::string_view s);
Boundary parse_boundary(std::string_view s);
std::string_view to_string(GridKind k);
std::string_view to_string(Ordering o);
std::string_view to_string(Boundary b);

struct Cell {
  Index row = 0;
  Index col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Rectangular grid (or ring) together with the labeling order of its cells.
///
/// A ring1d geometry is a single row of nx cells that always wraps around.
/// Component labels are the regression order used by the modified Cholesky
/// estimator: a component's predecessors are the box members with a smaller
/// label.
class GridGeometry {
 public:
  GridGeometry(GridKind kind, Index nx, Index ny, Ordering ordering = Ordering::row_major,
               Boundary boundary = Boundary::clipped);

  static GridGeometry ring(Index n);
  static GridGeometry grid(Index nx, Index ny, Ordering ordering = Ordering::row_major,
                           Boundary boundary = Boundary::clipped);

  GridKind kind() const noexcept { return kind_; }
  Index nx() const noexcept { return nx_; }
  Index ny() const noexcept { return ny_; }
  Ordering ordering() const noexcept { return ordering_; }
  Boundary boundary() const noexcept { return boundary_; }
  bool periodic() const noexcept { return boundary_ == Boundary::periodic; }
  Index nstate() const noexcept { return nx_ * ny_; }

  Index linear_index(Index row, Index col) const;
  Cell cell_of(Index label) const;

  /// Chebyshev distance between two cells; wraps per axis when periodic.
  Index distance(Index a, Index b) const;

 private:
  GridKind kind_;
  Index nx_;
  Index ny_;
  Ordering ordering_;
  Boundary boundary_;
};

struct LocalBox {
  Index center = 0;
  Index zeta = 0;
  IndexList members;  // sorted ascending
};

LocalBox local_box(const GridGeometry& geometry, Index center, Index zeta);

/// Box members with a label strictly smaller than `center`, ascending.
IndexList predecessors(const GridGeometry& geometry, Index center, Index zeta);

struct Subdomain {
  int id = 0;
  IndexList interior;     // sorted global labels
  IndexList halo;         // sorted global labels, disjoint from interior
  IndexList local_order;  // interior ∪ halo sorted by global label

  /// Position of each interior label inside local_order.
  IndexList interior_local_positions() const;
};

/// Block tiling chosen for `delta` subdomains: block_rows x block_cols blocks.
struct Tiling {
  Index block_rows = 1;
  Index block_cols = 1;
};

Tiling choose_tiling(const GridGeometry& geometry, int delta);

std::vector<Subdomain> decompose(const GridGeometry& geometry, int delta, Index zeta);

/// The nominal per-subdomain problem size N/delta + (2 zeta + 1)^2.
Index nominal_local_size(Index nstate, Index delta, Index zeta);

}  // namespace enkfmc
