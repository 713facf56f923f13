#ifndef TISSUESCALE_GRID_HPP
#define TISSUESCALE_GRID_HPP

#include "tissuescale/common.hpp"
#include "tissuescale/tensor.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace ts {

enum class Phase : std::uint8_t { Elastic = 0, Fluid = 1 };

/// Uniform quadrilateral grid on [0,a1] x [0,a2]. Node ids are lexicographic,
/// id = ix + (nx+1)*iy; element ids likewise with e = ex + nx*ey. When
/// `periodic` is set, opposite-face nodes are identified through
/// `periodic_rep` (max-face node -> min-face partner; an involution on the
/// identified pairs).
struct PeriodicGrid {
    int dim = 2;
    std::array<double, 2> cell_lengths{1.0, 1.0};
    int nx = 0, ny = 0;
    bool periodic = false;
    double hx = 0.0, hy = 0.0;

    int n_nodes() const { return (nx + 1) * (ny + 1); }
    int n_elements() const { return nx * ny; }
    int node_id(int ix, int iy) const { return ix + (nx + 1) * iy; }
    int elem_id(int ex, int ey) const { return ex + nx * ey; }
    std::array<int, 2> elem_xy(int e) const { return {e % nx, e / nx}; }

    Vec2 node_coord(int n) const {
        int ix = n % (nx + 1), iy = n / (nx + 1);
        return {ix * hx, iy * hy};
    }
    Vec2 elem_centroid(int e) const {
        auto [ex, ey] = elem_xy(e);
        return {(ex + 0.5) * hx, (ey + 0.5) * hy};
    }
    /// Corner nodes counter-clockwise from the lower-left.
    std::array<int, 4> elem_nodes(int e) const {
        auto [ex, ey] = elem_xy(e);
        return {node_id(ex, ey), node_id(ex + 1, ey), node_id(ex + 1, ey + 1), node_id(ex, ey + 1)};
    }
    double elem_area() const { return hx * hy; }
    double volume() const { return cell_lengths[0] * cell_lengths[1]; }

    /// Representative node under periodic identification (identity when not
    /// periodic).
    int periodic_rep_node(int n) const { return periodic ? rep_[n] : n; }

    static PeriodicGrid uniform(int nx, int ny, std::array<double, 2> lengths, bool periodic);

    std::vector<int> rep_; // periodic representative per node
};

/// One element face on the elastic/fluid interface. `normal` is the unit
/// normal of the staircase face pointing from the elastic phase into the
/// fluid; `smooth_normal` is the ideal inclusion's normal at the face
/// midpoint (same orientation), used for tangential-projection constraints
/// so that the constraint set converges to the smooth-geometry condition.
struct InterfaceFace {
    int elastic_elem = -1;
    int fluid_elem = -1;
    int node_a = -1, node_b = -1;
    Vec2 normal = Vec2::Zero();
    Vec2 smooth_normal = Vec2::Zero();
    double length = 0.0;
    bool membrane = false; // face belongs to the no-exchange patch
};

/// Boundary face of a non-periodic grid (used for external load terms).
struct BoundaryFace {
    int elem = -1;
    int node_a = -1, node_b = -1;
    Vec2 normal = Vec2::Zero();
    double length = 0.0;
    int side = 0; // 0=left 1=right 2=bottom 3=top
};

struct MaterialIndicator {
    std::vector<Phase> phase;     // per element
    std::vector<InterfaceFace> gamma;
    double theta_e = 1.0, theta_f = 0.0, theta_gamma = 0.0;

    bool is_elastic(int e) const { return phase[e] == Phase::Elastic; }
    bool is_fluid(int e) const { return phase[e] == Phase::Fluid; }
    int n_fluid() const;
    std::uint64_t geometry_hash(const PeriodicGrid& g) const;
};

struct InclusionSpec {
    enum class Shape { None, Circle, Square } shape = Shape::Circle;
    Vec2 center{0.5, 0.5};
    double size = 0.3; // radius, or half-width for squares
};

/// Angular arc (degrees, measured from the inclusion center) selecting the
/// membrane faces. Empty arcs (begin == end) select nothing.
struct MembraneArcSpec {
    double begin_deg = 0.0;
    double end_deg = 0.0;
    bool contains(double angle_deg) const;
    bool empty() const { return begin_deg == end_deg; }
};

/// Discretize the unit cell: phase labels assigned per element centroid,
/// interface faces collected between elastic and fluid elements the membrane
/// subset selected by centroid angle. Throws GeometryError when the inclusion
/// reaches the outermost element layer.
std::pair<PeriodicGrid, MaterialIndicator>
build_unit_cell(int resolution, const InclusionSpec& inclusion, const MembraneArcSpec& membrane,
                std::array<double, 2> lengths = {1.0, 1.0});

std::vector<BoundaryFace> boundary_faces(const PeriodicGrid& grid);

/// Connected components of a phase region under face adjacency (periodic
/// wrap-around included for periodic grids). Returns -1 for elements outside
/// the region, otherwise a component id.
std::vector<int> phase_components(const PeriodicGrid& grid, const MaterialIndicator& mat, Phase which,
                                  int* n_components);

} // namespace ts

#endif
