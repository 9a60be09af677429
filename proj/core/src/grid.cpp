#include <enkfmc/errors.hpp>
#include <enkfmc/grid.hpp>

#include <algorithm>
#include <cstdlib>
#include <iterator>
#include <limits>
#include <string>
#include <tuple>

namespace enkfmc {

GridKind parse_grid_kind(std::string_view s) {
  if (s == "ring1d") return GridKind::ring1d;
  if (s == "grid2d") return GridKind::grid2d;
  throw ConfigError("unknown grid kind '" + std::string(s) + "' (expected ring1d or grid2d)");
}

Ordering parse_ordering(std::string_view s) {
  if (s == "row_major") return Ordering::row_major;
  if (s == "column_major") return Ordering::column_major;
  throw ConfigError("unknown ordering '" + std::string(s) +
                    "' (expected row_major or column_major)");
}

Boundary parse_boundary(std::string_view s) {
  if (s == "clipped") return Boundary::clipped;
  if (s == "periodic") return Boundary::periodic;
  throw ConfigError("unknown boundary '" + std::string(s) + "' (expected clipped or periodic)");
}

std::string_view to_string(GridKind k) { return k == GridKind::ring1d ? "ring1d" : "grid2d"; }
std::string_view to_string(Ordering o) {
  return o == Ordering::row_major ? "row_major" : "column_major";
}
std::string_view to_string(Boundary b) {
  return b == Boundary::clipped ? "clipped" : "periodic";
}

GridGeometry::GridGeometry(GridKind kind, Index nx, Index ny, Ordering ordering,
                           Boundary boundary)
    : kind_(kind), nx_(nx), ny_(ny), ordering_(ordering), boundary_(boundary) {
  if (nx <= 0 || ny <= 0) {
    throw ConfigError("grid dimensions must be positive (nx=" + std::to_string(nx) +
                      ", ny=" + std::to_string(ny) + ")");
  }
  if (kind_ == GridKind::ring1d) {
    if (ny_ != 1) throw ConfigError("ring1d geometry requires ny = 1");
    boundary_ = Boundary::periodic;
  }
}

GridGeometry GridGeometry::ring(Index n) {
  return GridGeometry(GridKind::ring1d, n, 1, Ordering::row_major, Boundary::periodic);
}

GridGeometry GridGeometry::grid(Index nx, Index ny, Ordering ordering, Boundary boundary) {
  return GridGeometry(GridKind::grid2d, nx, ny, ordering, boundary);
}

Index GridGeometry::linear_index(Index row, Index col) const {
  if (row < 0 || row >= ny_ || col < 0 || col >= nx_) {
    throw DomainError("cell (" + std::to_string(row) + ", " + std::to_string(col) +
                      ") outside " + std::to_string(ny_) + "x" + std::to_string(nx_) + " grid");
  }
  return ordering_ == Ordering::row_major ? row * nx_ + col : col * ny_ + row;
}

Cell GridGeometry::cell_of(Index label) const {
  if (label < 0 || label >= nstate()) {
    throw DomainError("component label " + std::to_string(label) + " outside [0, " +
                      std::to_string(nstate()) + ")");
  }
  if (ordering_ == Ordering::row_major) return {label / nx_, label % nx_};
  return {label % ny_, label / ny_};
}

namespace {

Index axis_distance(Index a, Index b, Index n, bool periodic) {
  Index d = std::abs(a - b);
  if (periodic) d = std::min(d, n - d);
  return d;
}

// Coordinates along one axis reachable from [lo, hi] by stepping at most
// zeta cells outward, clipped or wrapped into [0, n).
std::vector<Index> axis_span(Index lo, Index hi, Index zeta, Index n, bool periodic) {
  std::vector<Index> out;
  if (periodic) {
    if ((hi - lo + 1) + 2 * zeta >= n) {
      out.resize(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = i;
      return out;
    }
    for (Index i = lo - zeta; i <= hi + zeta; ++i) out.push_back(((i % n) + n) % n);
    std::sort(out.begin(), out.end());
    return out;
  }
  for (Index i = std::max<Index>(0, lo - zeta); i <= std::min(n - 1, hi + zeta); ++i) {
    out.push_back(i);
  }
  return out;
}

IndexList block_labels(const GridGeometry& g, const std::vector<Index>& rows,
                       const std::vector<Index>& cols) {
  IndexList labels;
  labels.reserve(rows.size() * cols.size());
  for (Index r : rows) {
    for (Index c : cols) labels.push_back(g.linear_index(r, c));
  }
  std::sort(labels.begin(), labels.end());
  return labels;
}

}  // namespace

Index GridGeometry::distance(Index a, Index b) const {
  const Cell ca = cell_of(a);
  const Cell cb = cell_of(b);
  const bool wrap = periodic();
  return std::max(axis_distance(ca.row, cb.row, ny_, wrap),
                  axis_distance(ca.col, cb.col, nx_, wrap));
}

LocalBox local_box(const GridGeometry& geometry, Index center, Index zeta) {
  if (zeta < 0) throw DomainError("radius zeta must be nonnegative");
  const Cell c = geometry.cell_of(center);
  const bool wrap = geometry.periodic();
  const auto rows = axis_span(c.row, c.row, zeta, geometry.ny(), wrap);
  const auto cols = axis_span(c.col, c.col, zeta, geometry.nx(), wrap);
  return LocalBox{center, zeta, block_labels(geometry, rows, cols)};
}

IndexList predecessors(const GridGeometry& geometry, Index center, Index zeta) {
  LocalBox box = local_box(geometry, center, zeta);
  // members are sorted, so the predecessors are a prefix
  auto end = std::lower_bound(box.members.begin(), box.members.end(), center);
  box.members.erase(end, box.members.end());
  return std::move(box.members);
}

IndexList Subdomain::interior_local_positions() const {
  IndexList pos;
  pos.reserve(interior.size());
  for (Index g : interior) {
    auto it = std::lower_bound(local_order.begin(), local_order.end(), g);
    pos.push_back(static_cast<Index>(std::distance(local_order.begin(), it)));
  }
  return pos;
}

Tiling choose_tiling(const GridGeometry& geometry, int delta) {
  if (delta < 1) throw ConfigError("delta must be >= 1 (got " + std::to_string(delta) + ")");
  const Index d = delta;
  if (geometry.kind() == GridKind::ring1d) {
    if (d > geometry.nx()) {
      throw ConfigError("delta=" + std::to_string(delta) + " exceeds the " +
                        std::to_string(geometry.nx()) + " cells of the ring");
    }
    return {1, d};
  }

  bool found = false;
  Tiling best;
  std::tuple<Index, bool, bool> best_key{std::numeric_limits<Index>::max(), true, true};
  for (Index pr = 1; pr <= d; ++pr) {
    if (d % pr != 0) continue;
    const Index pc = d / pr;
    if (pr > geometry.ny() || pc > geometry.nx()) continue;
    std::tuple<Index, bool, bool> key{std::abs(pr - pc), geometry.ny() % pr != 0, pr > pc};
    if (!found || key < best_key) {
      found = true;
      best_key = key;
      best = {pr, pc};
    }
  }
  if (!found) {
    throw ConfigError("delta=" + std::to_string(delta) + " cannot tile a " +
                      std::to_string(geometry.ny()) + "x" + std::to_string(geometry.nx()) +
                      " grid into nonempty rectangular blocks");
  }
  return best;
}

std::vector<Subdomain> decompose(const GridGeometry& geometry, int delta, Index zeta) {
  if (zeta < 0) throw ConfigError("zeta must be nonnegative");
  const Tiling tiling = choose_tiling(geometry, delta);
  const bool wrap = geometry.periodic();

  auto block_range = [](Index b, Index blocks, Index n) {
    const Index size = n / blocks;
    const Index lo = b * size;
    const Index hi = (b == blocks - 1) ? n - 1 : lo + size - 1;
    return std::pair<Index, Index>{lo, hi};
  };

  std::vector<Subdomain> out;
  out.reserve(static_cast<std::size_t>(delta));
  for (Index br = 0; br < tiling.block_rows; ++br) {
    const auto [r0, r1] = block_range(br, tiling.block_rows, geometry.ny());
    for (Index bc = 0; bc < tiling.block_cols; ++bc) {
      const auto [c0, c1] = block_range(bc, tiling.block_cols, geometry.nx());

      Subdomain sd;
      sd.id = static_cast<int>(out.size());
      std::vector<Index> rows, cols;
      for (Index r = r0; r <= r1; ++r) rows.push_back(r);
      for (Index c = c0; c <= c1; ++c) cols.push_back(c);
      sd.interior = block_labels(geometry, rows, cols);

      const IndexList reach =
          block_labels(geometry, axis_span(r0, r1, zeta, geometry.ny(), wrap),
                       axis_span(c0, c1, zeta, geometry.nx(), wrap));
      std::set_difference(reach.begin(), reach.end(), sd.interior.begin(), sd.interior.end(),
                          std::back_inserter(sd.halo));
      sd.local_order = reach;
      out.push_back(std::move(sd));
    }
  }
  return out;
}

Index nominal_local_size(Index nstate, Index delta, Index zeta) {
  if (delta < 1) throw ConfigError("delta must be >= 1");
  return nstate / delta + (2 * zeta + 1) * (2 * zeta + 1);
}

}  // namespace enkfmc
