#include "tissuescale/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <sstream>

namespace ts {

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

PeriodicGrid PeriodicGrid::uniform(int nx, int ny, std::array<double, 2> lengths, bool periodic) {
    if (nx < 1 || ny < 1) throw ValidationError("grid: need at least one element per side");
    if (lengths[0] <= 0 || lengths[1] <= 0) throw ValidationError("grid: cell lengths must be positive");
    PeriodicGrid g;
    g.nx = nx;
    g.ny = ny;
    g.cell_lengths = lengths;
    g.hx = lengths[0] / nx;
    g.hy = lengths[1] / ny;
    g.periodic = periodic;
    if (periodic) {
        g.rep_.resize(g.n_nodes());
        for (int iy = 0; iy <= ny; ++iy)
            for (int ix = 0; ix <= nx; ++ix) {
                int rx = (ix == nx) ? 0 : ix;
                int ry = (iy == ny) ? 0 : iy;
                g.rep_[g.node_id(ix, iy)] = g.node_id(rx, ry);
            }
    }
    return g;
}

int MaterialIndicator::n_fluid() const {
    return static_cast<int>(std::count(phase.begin(), phase.end(), Phase::Fluid));
}

std::uint64_t MaterialIndicator::geometry_hash(const PeriodicGrid& g) const {
    std::uint64_t h = fnv1a(&g.nx, sizeof g.nx);
    h = fnv1a(&g.ny, sizeof g.ny, h);
    h = fnv1a(g.cell_lengths.data(), sizeof g.cell_lengths, h);
    h = fnv1a(phase.data(), phase.size() * sizeof(Phase), h);
    for (const auto& f : gamma) {
        h = fnv1a(&f.node_a, sizeof f.node_a, h);
        h = fnv1a(&f.membrane, sizeof f.membrane, h);
    }
    return h;
}

bool MembraneArcSpec::contains(double angle_deg) const {
    if (empty()) return false;
    auto wrap = [](double a) {
        a = std::fmod(a, 360.0);
        return a < 0 ? a + 360.0 : a;
    };
    double a = wrap(angle_deg), b = wrap(begin_deg), e = wrap(end_deg);
    if (b <= e) return a >= b && a <= e;
    return a >= b || a <= e; // arc wraps through 0
}

namespace {

bool inside_inclusion(const InclusionSpec& inc, const Vec2& p) {
    switch (inc.shape) {
    case InclusionSpec::Shape::None:
        return false;
    case InclusionSpec::Shape::Circle:
        return (p - inc.center).norm() < inc.size;
    case InclusionSpec::Shape::Square:
        return std::abs(p.x() - inc.center.x()) < inc.size && std::abs(p.y() - inc.center.y()) < inc.size;
    }
    return false;
}

/// Normal of the ideal inclusion boundary at p, pointing into the fluid.
Vec2 smooth_inward_normal(const InclusionSpec& inc, const Vec2& p) {
    Vec2 d = p - inc.center;
    if (inc.shape == InclusionSpec::Shape::Circle) {
        double n = d.norm();
        return n > 0 ? Vec2(-d / n) : Vec2(0, 0);
    }
    if (inc.shape == InclusionSpec::Shape::Square) {
        if (std::abs(d.x()) >= std::abs(d.y())) return {d.x() > 0 ? -1.0 : 1.0, 0.0};
        return {0.0, d.y() > 0 ? -1.0 : 1.0};
    }
    return Vec2::Zero();
}

} // namespace

std::pair<PeriodicGrid, MaterialIndicator>
build_unit_cell(int resolution, const InclusionSpec& inclusion, const MembraneArcSpec& membrane,
                std::array<double, 2> lengths) {
    if (resolution < 8) throw ValidationError("build_unit_cell: resolution must be >= 8");
    PeriodicGrid grid = PeriodicGrid::uniform(resolution, resolution, lengths, true);

    MaterialIndicator mat;
    mat.phase.resize(grid.n_elements(), Phase::Elastic);
    for (int e = 0; e < grid.n_elements(); ++e)
        if (inside_inclusion(inclusion, grid.elem_centroid(e))) mat.phase[e] = Phase::Fluid;

    // The fluid closure must stay strictly inside the cell: keep one full
    // elastic element layer against the cell boundary.
    for (int e = 0; e < grid.n_elements(); ++e) {
        if (!mat.is_fluid(e)) continue;
        auto [ex, ey] = grid.elem_xy(e);
        if (ex == 0 || ey == 0 || ex == grid.nx - 1 || ey == grid.ny - 1) {
            std::ostringstream os;
            os << "build_unit_cell: inclusion touches the cell boundary at element (" << ex << "," << ey
               << "); closure of the fluid part must be interior to the cell";
            throw GeometryError(os.str());
        }
    }

    // Interface faces between adjacent elastic/fluid elements.
    auto add_face = [&](int ee, int ef, int na, int nb, Vec2 n, double len) {
        InterfaceFace f;
        f.elastic_elem = ee;
        f.fluid_elem = ef;
        f.node_a = na;
        f.node_b = nb;
        f.normal = n;
        f.length = len;
        if (!membrane.empty()) {
            Vec2 mid = 0.5 * (grid.node_coord(na) + grid.node_coord(nb)) - inclusion.center;
            double ang = std::atan2(mid.y(), mid.x()) * 180.0 / M_PI;
            f.membrane = membrane.contains(ang);
        }
        mat.gamma.push_back(f);
    };
    for (int ey = 0; ey < grid.ny; ++ey)
        for (int ex = 0; ex < grid.nx; ++ex) {
            int e = grid.elem_id(ex, ey);
            if (ex + 1 < grid.nx) {
                int er = grid.elem_id(ex + 1, ey);
                if (mat.phase[e] != mat.phase[er]) {
                    int na = grid.node_id(ex + 1, ey), nb = grid.node_id(ex + 1, ey + 1);
                    bool e_elastic = mat.is_elastic(e);
                    add_face(e_elastic ? e : er, e_elastic ? er : e, na, nb,
                             e_elastic ? Vec2(1, 0) : Vec2(-1, 0), grid.hy);
                }
            }
            if (ey + 1 < grid.ny) {
                int eu = grid.elem_id(ex, ey + 1);
                if (mat.phase[e] != mat.phase[eu]) {
                    int na = grid.node_id(ex, ey + 1), nb = grid.node_id(ex + 1, ey + 1);
                    bool e_elastic = mat.is_elastic(e);
                    add_face(e_elastic ? e : eu, e_elastic ? eu : e, na, nb,
                             e_elastic ? Vec2(0, 1) : Vec2(0, -1), grid.hx);
                }
            }
        }

    int n_f = mat.n_fluid();
    double area = grid.elem_area();
    mat.theta_f = n_f * area / grid.volume();
    mat.theta_e = 1.0 - mat.theta_f;
    double glen = 0.0;
    for (const auto& f : mat.gamma) glen += f.length;
    mat.theta_gamma = glen / grid.volume();
    return {std::move(grid), std::move(mat)};
}

std::vector<BoundaryFace> boundary_faces(const PeriodicGrid& grid) {
    std::vector<BoundaryFace> faces;
    for (int ey = 0; ey < grid.ny; ++ey) {
        BoundaryFace l;
        l.elem = grid.elem_id(0, ey);
        l.node_a = grid.node_id(0, ey);
        l.node_b = grid.node_id(0, ey + 1);
        l.normal = Vec2(-1, 0);
        l.length = grid.hy;
        l.side = 0;
        faces.push_back(l);
        BoundaryFace r;
        r.elem = grid.elem_id(grid.nx - 1, ey);
        r.node_a = grid.node_id(grid.nx, ey);
        r.node_b = grid.node_id(grid.nx, ey + 1);
        r.normal = Vec2(1, 0);
        r.length = grid.hy;
        r.side = 1;
        faces.push_back(r);
    }
    for (int ex = 0; ex < grid.nx; ++ex) {
        BoundaryFace b;
        b.elem = grid.elem_id(ex, 0);
        b.node_a = grid.node_id(ex, 0);
        b.node_b = grid.node_id(ex + 1, 0);
        b.normal = Vec2(0, -1);
        b.length = grid.hx;
        b.side = 2;
        faces.push_back(b);
        BoundaryFace t;
        t.elem = grid.elem_id(ex, grid.ny - 1);
        t.node_a = grid.node_id(ex, grid.ny);
        t.node_b = grid.node_id(ex + 1, grid.ny);
        t.normal = Vec2(0, 1);
        t.length = grid.hx;
        t.side = 3;
        faces.push_back(t);
    }
    return faces;
}

std::vector<int> phase_components(const PeriodicGrid& grid, const MaterialIndicator& mat, Phase which,
                                  int* n_components) {
    std::vector<int> comp(grid.n_elements(), -1);
    int nc = 0;
    auto neighbor = [&](int ex, int ey, int d, int& rx, int& ry) -> bool {
        static const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        rx = ex + dx[d];
        ry = ey + dy[d];
        if (grid.periodic) {
            rx = (rx + grid.nx) % grid.nx;
            ry = (ry + grid.ny) % grid.ny;
            return true;
        }
        return rx >= 0 && ry >= 0 && rx < grid.nx && ry < grid.ny;
    };
    for (int seed = 0; seed < grid.n_elements(); ++seed) {
        if (mat.phase[seed] != which || comp[seed] >= 0) continue;
        std::deque<int> queue{seed};
        comp[seed] = nc;
        while (!queue.empty()) {
            int e = queue.front();
            queue.pop_front();
            auto [ex, ey] = grid.elem_xy(e);
            for (int d = 0; d < 4; ++d) {
                int rx, ry;
                if (!neighbor(ex, ey, d, rx, ry)) continue;
                int en = grid.elem_id(rx, ry);
                if (mat.phase[en] == which && comp[en] < 0) {
                    comp[en] = nc;
                    queue.push_back(en);
                }
            }
        }
        ++nc;
    }
    if (n_components) *n_components = nc;
    return comp;
}

} // namespace ts
