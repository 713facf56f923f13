#include "tissuescale/fem.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ts {

namespace {

DofMap build_map_impl(const PeriodicGrid& grid, const MaterialIndicator* mat,
                      std::optional<Phase> which, int components) {
    DofMap m;
    m.components = components;
    m.elem_pos.assign(grid.n_elements(), -1);
    for (int e = 0; e < grid.n_elements(); ++e) {
        if (which && mat->phase[e] != *which) continue;
        m.elem_pos[e] = static_cast<int>(m.elements.size());
        m.elements.push_back(e);
    }
    m.elem_dofs.resize(m.elements.size());
    for (std::size_t a = 0; a < m.elements.size(); ++a) {
        auto nodes = grid.elem_nodes(m.elements[a]);
        for (int i = 0; i < 4; ++i) {
            int rep = grid.periodic_rep_node(nodes[i]);
            auto [it, inserted] = m.node_to_dof.try_emplace(rep, m.n_dofs);
            if (inserted) {
                m.dof_node.push_back(rep);
                ++m.n_dofs;
            }
            m.elem_dofs[a][i] = it->second;
            if (nodes[i] != rep) m.node_to_dof.try_emplace(nodes[i], it->second);
        }
    }
    return m;
}

} // namespace

DofMap build_dof_map(const PeriodicGrid& grid, const MaterialIndicator* mat, Phase which,
                     int components) {
    return build_map_impl(grid, mat, which, components);
}

DofMap build_dof_map_all(const PeriodicGrid& grid, int components) {
    return build_map_impl(grid, nullptr, std::nullopt, components);
}

DofMap build_dof_map_split(const PeriodicGrid& grid, const MaterialIndicator& mat) {
    DofMap m = build_map_impl(grid, nullptr, std::nullopt, 1);

    // A node splits when every interface face through it lies in the membrane
    // patch; junction nodes where the patch meets the open part stay single.
    std::set<int> membrane_nodes, open_nodes;
    for (const auto& f : mat.gamma) {
        auto& target = f.membrane ? membrane_nodes : open_nodes;
        target.insert(grid.periodic_rep_node(f.node_a));
        target.insert(grid.periodic_rep_node(f.node_b));
    }
    for (int n : membrane_nodes) {
        if (open_nodes.count(n)) continue;
        m.fluid_copy[n] = m.n_dofs;
        m.dof_node.push_back(n);
        ++m.n_dofs;
    }
    if (m.fluid_copy.empty()) return m;
    for (std::size_t a = 0; a < m.elements.size(); ++a) {
        if (!mat.is_fluid(m.elements[a])) continue;
        auto nodes = grid.elem_nodes(m.elements[a]);
        for (int i = 0; i < 4; ++i) {
            auto it = m.fluid_copy.find(grid.periodic_rep_node(nodes[i]));
            if (it != m.fluid_copy.end()) m.elem_dofs[a][i] = it->second;
        }
    }
    return m;
}

void Constraints::pin(int dof, double value) { lines_[dof] = Line{{}, value}; }

void Constraints::tie(int slave, std::vector<std::pair<int, double>> masters, double offset) {
    lines_[slave] = Line{std::move(masters), offset};
}

void Constraints::distribute(Vector& x) const {
    for (const auto& [dof, line] : lines_) {
        double v = line.offset;
        for (auto [md, c] : line.terms) v += c * x[md];
        x[dof] = v;
    }
}

SystemBuilder::SystemBuilder(int n_dofs, const Constraints* constraints)
    : n_(n_dofs), constraints_(constraints), rhs_(Vector::Zero(n_dofs)),
      touched_constrained_(n_dofs, 0) {}

void SystemBuilder::add(int i, int j, double v) {
    if (v == 0.0) return;
    if (!constraints_ || constraints_->empty()) {
        trip_.emplace_back(i, j, v);
        return;
    }
    const Constraints::Line* li = constraints_->line(i);
    const Constraints::Line* lj = constraints_->line(j);
    if (!li && !lj) {
        trip_.emplace_back(i, j, v);
        return;
    }
    if (li) touched_constrained_[i] = 1;
    if (lj) touched_constrained_[j] = 1;
    // expand rows first, then columns; offsets move to the rhs
    auto expand_col = [&](int row, double w) {
        if (!lj) {
            trip_.emplace_back(row, j, w);
        } else {
            for (auto [mj, cj] : lj->terms) trip_.emplace_back(row, mj, w * cj);
            if (lj->offset != 0.0) rhs_[row] -= w * lj->offset;
        }
    };
    if (!li) {
        expand_col(i, v);
    } else {
        for (auto [mi, ci] : li->terms) expand_col(mi, ci * v);
    }
}

void SystemBuilder::add_rhs(int i, double v) {
    if (v == 0.0) return;
    const Constraints::Line* li = constraints_ ? constraints_->line(i) : nullptr;
    if (!li) {
        rhs_[i] += v;
        return;
    }
    touched_constrained_[i] = 1;
    for (auto [mi, ci] : li->terms) rhs_[mi] += ci * v;
}

void SystemBuilder::add_mean_constraint(Vector w, Vector nullvec, double target) {
    means_.push_back(std::move(w));
    mean_null_.push_back(std::move(nullvec));
    mean_targets_.push_back(target);
}

void SystemBuilder::add_local(const std::array<int, 4>& dofs, const double* ke, int n) {
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) add(dofs[i], dofs[j], ke[n * i + j]);
}

LinearSystem SystemBuilder::build(bool symmetric) {
    int total = n_ + static_cast<int>(means_.size());
    // constrained dofs keep their defining equation as an explicit row
    if (constraints_) {
        for (int i = 0; i < n_; ++i)
            if (const auto* l = constraints_->line(i)) {
                trip_.emplace_back(i, i, 1.0);
                for (auto [md, c] : l->terms) trip_.emplace_back(i, md, -c);
                rhs_[i] = l->offset;
            }
    }
    std::vector<Triplet> trip = std::move(trip_);
    for (std::size_t k = 0; k < means_.size(); ++k) {
        int row = n_ + static_cast<int>(k);
        const Vector& w = means_[k];
        for (int i = 0; i < n_; ++i)
            if (w[i] != 0.0) {
                trip.emplace_back(row, i, w[i]);
                trip.emplace_back(i, row, w[i]);
            }
    }
    LinearSystem sys;
    sys.A.resize(total, total);
    sys.A.setFromTriplets(trip.begin(), trip.end());
    sys.rhs = Vector::Zero(total);
    sys.rhs.head(n_) = rhs_;
    for (std::size_t k = 0; k < means_.size(); ++k) sys.rhs[n_ + static_cast<int>(k)] = mean_targets_[k];
    sys.symmetric = symmetric;
    sys.n_unknowns = n_;
    sys.n_lagrange = static_cast<int>(means_.size());
    sys.mean_weights = std::move(means_);
    sys.mean_null = std::move(mean_null_);
    sys.mean_targets = std::move(mean_targets_);
    return sys;
}

Quadrature::Quadrature(const PeriodicGrid& grid) {
    const double g = 0.5 / std::sqrt(3.0);
    const double pts[2] = {0.5 - g, 0.5 + g};
    int qp = 0;
    for (int jy = 0; jy < 2; ++jy)
        for (int jx = 0; jx < 2; ++jx, ++qp) {
            double x = pts[jx], y = pts[jy];
            xi[qp] = {x, y};
            N[qp] = {(1 - x) * (1 - y), x * (1 - y), x * y, (1 - x) * y};
            std::array<Vec2, 4> dref = {Vec2{-(1 - y), -(1 - x)}, Vec2{(1 - y), -x},
                                        Vec2{y, x}, Vec2{-y, (1 - x)}};
            for (int i = 0; i < 4; ++i) dN[qp][i] = {dref[i][0] / grid.hx, dref[i][1] / grid.hy};
        }
    w = grid.hx * grid.hy / 4.0;
}

void add_divergence(SystemBuilder& b, const DofMap& umap, int uoff, const DofMap& pmap, int poff,
                    const Quadrature& q, double sign) {
    for (std::size_t a = 0; a < umap.elements.size(); ++a) {
        int e = umap.elements[a];
        int ap = pmap.pos(e);
        const auto& ud = umap.elem_dofs[a];
        const auto& pd = pmap.elem_dofs[ap];
        for (int qp = 0; qp < Quadrature::n_qp; ++qp)
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    for (int c = 0; c < 2; ++c)
                        b.add(poff + pd[i], uoff + umap.vdof(ud[j], c),
                              sign * q.w * q.N[qp][i] * q.dN[qp][j][c]);
    }
}

void add_divergence_transposed(SystemBuilder& b, const DofMap& umap, int uoff, const DofMap& pmap,
                               int poff, const Quadrature& q, double sign) {
    for (std::size_t a = 0; a < umap.elements.size(); ++a) {
        int e = umap.elements[a];
        int ap = pmap.pos(e);
        const auto& ud = umap.elem_dofs[a];
        const auto& pd = pmap.elem_dofs[ap];
        for (int qp = 0; qp < Quadrature::n_qp; ++qp)
            for (int i = 0; i < 4; ++i)
                for (int c = 0; c < 2; ++c)
                    for (int j = 0; j < 4; ++j)
                        b.add(uoff + umap.vdof(ud[i], c), poff + pd[j],
                              sign * q.w * q.N[qp][j] * q.dN[qp][i][c]);
    }
}

void add_pressure_gradient(SystemBuilder& b, const DofMap& umap, int uoff, const DofMap& pmap, int poff,
                           const Quadrature& q, double sign) {
    for (std::size_t a = 0; a < umap.elements.size(); ++a) {
        int e = umap.elements[a];
        int ap = pmap.pos(e);
        const auto& ud = umap.elem_dofs[a];
        const auto& pd = pmap.elem_dofs[ap];
        for (int qp = 0; qp < Quadrature::n_qp; ++qp)
            for (int i = 0; i < 4; ++i)
                for (int c = 0; c < 2; ++c)
                    for (int j = 0; j < 4; ++j)
                        b.add(uoff + umap.vdof(ud[i], c), poff + pd[j],
                              sign * q.w * q.N[qp][i] * q.dN[qp][j][c]);
    }
}

void add_vector_scalar_mass(SystemBuilder& b, const DofMap& umap, int uoff, const DofMap& pmap, int poff,
                            const Quadrature& q, const std::function<Vec2(int, int, int)>& col,
                            double sign) {
    for (std::size_t a = 0; a < umap.elements.size(); ++a) {
        int e = umap.elements[a];
        int ap = pmap.pos(e);
        const auto& ud = umap.elem_dofs[a];
        const auto& pd = pmap.elem_dofs[ap];
        for (int qp = 0; qp < Quadrature::n_qp; ++qp) {
            Vec2 v = col(static_cast<int>(a), e, qp);
            for (int i = 0; i < 4; ++i)
                for (int c = 0; c < 2; ++c)
                    for (int j = 0; j < 4; ++j)
                        b.add(uoff + umap.vdof(ud[i], c), poff + pd[j],
                              sign * q.w * q.N[qp][i] * q.N[qp][j] * v[c]);
        }
    }
}

void add_bp_stabilization(SystemBuilder& b, const DofMap& pmap, int poff, const Quadrature& q,
                          const PeriodicGrid& grid, double mu, double alpha) {
    double h2 = grid.hx * grid.hy;
    double s = alpha * h2 / mu;
    add_diffusion(b, pmap, q, [s](int, int, int) { return Mat2(s * Mat2::Identity()); }, poff);
}

constexpr double FaceQuad::Na[2];

void add_face_scalar_rhs(SystemBuilder& b, const DofMap& m, int off, int node_a, int node_b,
                         double length, const std::array<double, 2>& g, double sign) {
    // dofs of the endpoints; face nodes always carry dofs in maps that contain
    // the adjacent element, both raw and periodic-representative ids occur
    auto dof = [&](int n) { return m.node_dof(n); };
    int da = dof(node_a), db = dof(node_b);
    double w = 0.5 * length * sign;
    b.add_rhs(off + da, w * (FaceQuad::Na[0] * g[0] + FaceQuad::Na[1] * g[1]));
    b.add_rhs(off + db, w * (FaceQuad::Na[1] * g[0] + FaceQuad::Na[0] * g[1]));
}

void add_face_vector_rhs(SystemBuilder& b, const DofMap& m, int off, int node_a, int node_b,
                         double length, const std::array<Vec2, 2>& g, double sign) {
    int da = m.node_dof(node_a), db = m.node_dof(node_b);
    double w = 0.5 * length * sign;
    for (int c = 0; c < 2; ++c) {
        b.add_rhs(off + m.vdof(da, c), w * (FaceQuad::Na[0] * g[0][c] + FaceQuad::Na[1] * g[1][c]));
        b.add_rhs(off + m.vdof(db, c), w * (FaceQuad::Na[1] * g[0][c] + FaceQuad::Na[0] * g[1][c]));
    }
}

void add_face_normal_coupling(SystemBuilder& b, const DofMap& rowmap, int rowoff, const DofMap& colmap,
                              int coloff, int node_a, int node_b, double length, const Vec2& normal,
                              double sign, bool row_scalar_col_vector) {
    int ra = rowmap.node_dof(node_a), rb = rowmap.node_dof(node_b);
    int ca = colmap.node_dof(node_a), cb = colmap.node_dof(node_b);
    // exact 2-node line mass matrix: L/6 [2 1; 1 2]
    const double m11 = length / 3.0, m12 = length / 6.0;
    int rows[2] = {ra, rb}, cols[2] = {ca, cb};
    const double mm[2][2] = {{m11, m12}, {m12, m11}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int c = 0; c < 2; ++c) {
                double v = sign * mm[i][j] * normal[c];
                if (row_scalar_col_vector)
                    b.add(rowoff + rows[i], coloff + colmap.vdof(cols[j], c), v);
                else
                    b.add(rowoff + rowmap.vdof(rows[i], c), coloff + cols[j], v);
            }
}

Vector mean_weight_vector(const DofMap& m, const Quadrature& q, int offset, int total) {
    Vector w = Vector::Zero(total);
    for (std::size_t a = 0; a < m.elements.size(); ++a)
        for (int qp = 0; qp < Quadrature::n_qp; ++qp)
            for (int i = 0; i < 4; ++i) w[offset + m.elem_dofs[a][i]] += q.w * q.N[qp][i];
    return w;
}

Vector rotation_weight_vector(const DofMap& m, const Quadrature& q, int offset, int total) {
    Vector w = Vector::Zero(total);
    for (std::size_t a = 0; a < m.elements.size(); ++a)
        for (int qp = 0; qp < Quadrature::n_qp; ++qp)
            for (int i = 0; i < 4; ++i) {
                w[offset + m.vdof(m.elem_dofs[a][i], 1)] += q.w * q.dN[qp][i][0];
                w[offset + m.vdof(m.elem_dofs[a][i], 0)] -= q.w * q.dN[qp][i][1];
            }
    return w;
}

double eval_scalar(const DofMap& m, const Vector& x, int a, const Quadrature& q, int qp, int offset) {
    double v = 0.0;
    for (int i = 0; i < 4; ++i) v += q.N[qp][i] * x[offset + m.elem_dofs[a][i]];
    return v;
}

Vec2 eval_vector(const DofMap& m, const Vector& x, int a, const Quadrature& q, int qp, int offset) {
    Vec2 v = Vec2::Zero();
    for (int i = 0; i < 4; ++i)
        for (int c = 0; c < 2; ++c) v[c] += q.N[qp][i] * x[offset + m.vdof(m.elem_dofs[a][i], c)];
    return v;
}

Vec2 eval_scalar_gradient(const DofMap& m, const Vector& x, int a, const Quadrature& q, int qp,
                          int offset) {
    Vec2 g = Vec2::Zero();
    for (int i = 0; i < 4; ++i) g += q.dN[qp][i] * x[offset + m.elem_dofs[a][i]];
    return g;
}

Mat2 eval_vector_gradient(const DofMap& m, const Vector& x, int a, const Quadrature& q, int qp,
                          int offset) {
    Mat2 g = Mat2::Zero();
    for (int i = 0; i < 4; ++i)
        for (int c = 0; c < 2; ++c)
            g.row(c) += q.dN[qp][i].transpose() * x[offset + m.vdof(m.elem_dofs[a][i], c)];
    return g;
}

} // namespace ts
