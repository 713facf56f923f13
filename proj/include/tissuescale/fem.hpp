#ifndef TISSUESCALE_FEM_HPP
#define TISSUESCALE_FEM_HPP

#include "tissuescale/grid.hpp"

#include <Eigen/Sparse>
#include <functional>
#include <unordered_map>
#include <vector>

namespace ts {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Vector = Eigen::VectorXd;

/// Scalar Q1 dof map over a subset of grid elements. Periodic identification
/// is applied when the grid is periodic; membrane splitting duplicates nodes
/// interior to the no-exchange patch so the field may jump across it.
struct DofMap {
    std::vector<int> elements;                // active grid elements, ascending
    std::vector<std::array<int, 4>> elem_dofs; // scalar dofs per active element
    std::vector<int> elem_pos;                // grid element -> active index (-1 outside)
    std::vector<int> dof_node;                // a grid node represented by each dof
    int n_dofs = 0;
    int components = 1;

    int pos(int grid_elem) const { return elem_pos[grid_elem]; }
    bool active(int grid_elem) const { return elem_pos[grid_elem] >= 0; }
    int vdof(int scalar_dof, int comp) const { return components * scalar_dof + comp; }
    int n_total() const { return components * n_dofs; }

    /// Scalar dof for a grid node (elastic-side copy when the node is split);
    /// -1 when the node carries no dof in this map.
    int node_dof(int grid_node) const {
        auto it = node_to_dof.find(grid_node);
        return it == node_to_dof.end() ? -1 : it->second;
    }

    std::unordered_map<int, int> node_to_dof;
    std::unordered_map<int, int> fluid_copy; // split node -> fluid-side dof
};

/// Mask selecting elements by phase; nullptr phases == all elements.
DofMap build_dof_map(const PeriodicGrid& grid, const MaterialIndicator* mat, Phase which,
                     int components = 1);
DofMap build_dof_map_all(const PeriodicGrid& grid, int components = 1);
/// Map over all elements with nodes interior to the membrane arc duplicated
/// (fluid-side elements reference the duplicate dof).
DofMap build_dof_map_split(const PeriodicGrid& grid, const MaterialIndicator& mat);

/// Affine constraints x_i = sum_k c_k x_k + b, eliminated symmetrically during
/// assembly (constrained dofs keep an identity row).
class Constraints {
public:
    void pin(int dof, double value);
    void tie(int slave, std::vector<std::pair<int, double>> masters, double offset = 0.0);
    bool constrained(int dof) const { return lines_.count(dof) != 0; }
    bool empty() const { return lines_.empty(); }

    struct Line {
        std::vector<std::pair<int, double>> terms;
        double offset = 0.0;
    };
    const Line* line(int dof) const {
        auto it = lines_.find(dof);
        return it == lines_.end() ? nullptr : &it->second;
    }
    /// Overwrite constrained entries of a solution vector from their lines.
    void distribute(Vector& x) const;

private:
    std::unordered_map<int, Line> lines_;
};

struct LinearSystem {
    SpMat A;
    Vector rhs;
    bool symmetric = true;
    int n_unknowns = 0; // dofs before trailing Lagrange rows
    int n_lagrange = 0;
    std::vector<Vector> mean_weights; // weight vectors of the mean constraints
    std::vector<Vector> mean_null;    // paired null-space vectors, for exact projection
    std::vector<double> mean_targets;
};

/// Accumulates element contributions with constraint elimination, then
/// appends one Lagrange row per mean-value constraint.
class SystemBuilder {
public:
    explicit SystemBuilder(int n_dofs, const Constraints* constraints = nullptr);

    void add(int i, int j, double v);
    void add_rhs(int i, double v);
    /// Append the constraint w . x = target as a Lagrange row/column. The
    /// paired null vector is the direction used to satisfy the constraint
    /// exactly after the solve.
    void add_mean_constraint(Vector w, Vector nullvec, double target = 0.0);

    void add_local(const std::array<int, 4>& dofs, const double* ke, int n); // n x n block
    int size() const { return n_; }

    LinearSystem build(bool symmetric = true);

private:
    int n_ = 0;
    const Constraints* constraints_ = nullptr;
    std::vector<Triplet> trip_;
    Vector rhs_;
    std::vector<Vector> means_;
    std::vector<Vector> mean_null_;
    std::vector<double> mean_targets_;
    std::vector<char> touched_constrained_;
};

/// Reference-element quadrature for uniform rectangles: 2x2 Gauss, exact for
/// the Q1 bilinear forms assembled here.
struct Quadrature {
    explicit Quadrature(const PeriodicGrid& grid);
    static constexpr int n_qp = 4;
    std::array<std::array<double, 4>, n_qp> N;  // shape values  [qp][node]
    std::array<std::array<Vec2, 4>, n_qp> dN;   // physical gradients
    std::array<Vec2, n_qp> xi;                  // reference coordinates
    double w = 0.0;                             // weight (equal at all qps)
};

// --- volume kernels -------------------------------------------------------
// Coefficient callables receive (active_index, grid_element, qp).

template <class Coef2>
void add_diffusion(SystemBuilder& b, const DofMap& m, const Quadrature& q, Coef2&& k, int offset = 0) {
    for (std::size_t a = 0; a < m.elements.size(); ++a) {
        const auto& dofs = m.elem_dofs[a];
        int e = m.elements[a];
        double ke[16] = {0};
        for (int qp = 0; qp < Quadrature::n_qp; ++qp) {
            Mat2 kq = k(static_cast<int>(a), e, qp);
            for (int i = 0; i < 4; ++i) {
                Vec2 kdni = kq * q.dN[qp][i];
                for (int j = 0; j < 4; ++j) ke[4 * i + j] += q.w * kdni.dot(q.dN[qp][j]);
            }
        }
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) b.add(offset + dofs[i], offset + dofs[j], ke[4 * i + j]);
    }
}

template <class CoefS>
void add_mass(SystemBuilder& b, const DofMap& m, const Quadrature& q, CoefS&& c, bool lumped,
              int offset = 0) {
    for (std::size_t a = 0; a < m.elements.size(); ++a) {
        const auto& dofs = m.elem_dofs[a];
        int e = m.elements[a];
        for (int qp = 0; qp < Quadrature::n_qp; ++qp) {
            double cq = c(static_cast<int>(a), e, qp) * q.w;
            for (int comp = 0; comp < m.components; ++comp)
                for (int i = 0; i < 4; ++i) {
                    int di = m.vdof(dofs[i], comp);
                    if (lumped) {
                        b.add(offset + di, offset + di, cq * q.N[qp][i]);
                    } else {
                        for (int j = 0; j < 4; ++j)
                            b.add(offset + di, offset + m.vdof(dofs[j], comp),
                                  cq * q.N[qp][i] * q.N[qp][j]);
                    }
                }
        }
    }
}

/// Strain of the vector shape function (node i, component c) at qp.
inline Mat2 shape_strain(const Quadrature& q, int qp, int i, int c) {
    Mat2 g = Mat2::Zero();
    g.row(c) = q.dN[qp][i].transpose();
    return sym(g);
}

template <class CoefE>
void add_elasticity(SystemBuilder& b, const DofMap& m, const Quadrature& q, CoefE&& ten, int offset = 0) {
    for (std::size_t a = 0; a < m.elements.size(); ++a) {
        const auto& dofs = m.elem_dofs[a];
        int e = m.elements[a];
        double ke[64] = {0};
        for (int qp = 0; qp < Quadrature::n_qp; ++qp) {
            const Tensor4 E = ten(static_cast<int>(a), e, qp);
            Mat2 s[8];
            Mat2 Es[8];
            for (int i = 0; i < 4; ++i)
                for (int c = 0; c < 2; ++c) {
                    s[2 * i + c] = shape_strain(q, qp, i, c);
                    Es[2 * i + c] = E.apply(s[2 * i + c]);
                }
            for (int r = 0; r < 8; ++r)
                for (int cidx = 0; cidx < 8; ++cidx)
                    ke[8 * r + cidx] += q.w * (Es[cidx].array() * s[r].array()).sum();
        }
        for (int i = 0; i < 4; ++i)
            for (int ci = 0; ci < 2; ++ci)
                for (int j = 0; j < 4; ++j)
                    for (int cj = 0; cj < 2; ++cj)
                        b.add(offset + m.vdof(dofs[i], ci), offset + m.vdof(dofs[j], cj),
                              ke[8 * (2 * i + ci) + (2 * j + cj)]);
    }
}

/// rhs_i -= int E(y) pre(y) : e(phi_i)  (prestrain load of the cell problems).
template <class CoefE, class CoefP>
void add_prestrain_rhs(SystemBuilder& b, const DofMap& m, const Quadrature& q, CoefE&& ten, CoefP&& pre,
                       int offset = 0) {
    for (std::size_t a = 0; a < m.elements.size(); ++a) {
        const auto& dofs = m.elem_dofs[a];
        int e = m.elements[a];
        for (int qp = 0; qp < Quadrature::n_qp; ++qp) {
            Mat2 stress = ten(static_cast<int>(a), e, qp).apply(pre(static_cast<int>(a), e, qp));
            for (int i = 0; i < 4; ++i)
                for (int c = 0; c < 2; ++c)
                    b.add_rhs(offset + m.vdof(dofs[i], c),
                              -q.w * (stress.array() * shape_strain(q, qp, i, c).array()).sum());
        }
    }
}

/// rhs_i += int f(y) . grad(phi_i)  (flux-type scalar source).
template <class CoefV>
void add_flux_rhs(SystemBuilder& b, const DofMap& m, const Quadrature& q, CoefV&& f, int offset = 0) {
    for (std::size_t a = 0; a < m.elements.size(); ++a) {
        const auto& dofs = m.elem_dofs[a];
        int e = m.elements[a];
        for (int qp = 0; qp < Quadrature::n_qp; ++qp) {
            Vec2 fq = f(static_cast<int>(a), e, qp);
            for (int i = 0; i < 4; ++i) b.add_rhs(offset + dofs[i], q.w * fq.dot(q.dN[qp][i]));
        }
    }
}

template <class CoefS>
void add_scalar_source(SystemBuilder& b, const DofMap& m, const Quadrature& q, CoefS&& f, int offset = 0) {
    for (std::size_t a = 0; a < m.elements.size(); ++a) {
        const auto& dofs = m.elem_dofs[a];
        int e = m.elements[a];
        for (int qp = 0; qp < Quadrature::n_qp; ++qp) {
            double fq = f(static_cast<int>(a), e, qp) * q.w;
            for (int i = 0; i < 4; ++i) b.add_rhs(offset + dofs[i], fq * q.N[qp][i]);
        }
    }
}

template <class CoefV>
void add_vector_source(SystemBuilder& b, const DofMap& m, const Quadrature& q, CoefV&& f, int offset = 0) {
    for (std::size_t a = 0; a < m.elements.size(); ++a) {
        const auto& dofs = m.elem_dofs[a];
        int e = m.elements[a];
        for (int qp = 0; qp < Quadrature::n_qp; ++qp) {
            Vec2 fq = f(static_cast<int>(a), e, qp) * q.w;
            for (int i = 0; i < 4; ++i)
                for (int c = 0; c < 2; ++c) b.add_rhs(offset + m.vdof(dofs[i], c), fq[c] * q.N[qp][i]);
        }
    }
}

/// Divergence coupling  B[p_i, (u_j,c)] += s * int psi_i d_c phi_j.
void add_divergence(SystemBuilder& b, const DofMap& umap, int uoff, const DofMap& pmap, int poff,
                    const Quadrature& q, double sign);

/// Transposed placement  A[(u_i,c), p_j] += s * int psi_j d_c phi_i
/// (the -(p, div eta) block of saddle-point systems when s = -1).
void add_divergence_transposed(SystemBuilder& b, const DofMap& umap, int uoff, const DofMap& pmap,
                               int poff, const Quadrature& q, double sign);

/// Gradient coupling  G[(u_i,c), p_j] += s * int phi_i d_c psi_j   (u rows).
void add_pressure_gradient(SystemBuilder& b, const DofMap& umap, int uoff, const DofMap& pmap, int poff,
                           const Quadrature& q, double sign);

/// Mass-type vector coupling M[(u_i,c), p_j] += s * int phi_i K(:,c)... see impl.
void add_vector_scalar_mass(SystemBuilder& b, const DofMap& umap, int uoff, const DofMap& pmap, int poff,
                            const Quadrature& q, const std::function<Vec2(int, int, int)>& col,
                            double sign);

/// Brezzi-Pitkaranta pressure stabilization  C_ij += alpha h^2/mu int grad psi_i . grad psi_j.
void add_bp_stabilization(SystemBuilder& b, const DofMap& pmap, int poff, const Quadrature& q,
                          const PeriodicGrid& grid, double mu, double alpha);

// --- surface kernels ------------------------------------------------------

/// 2-point Gauss rule along an element face given by grid nodes (a, b).
struct FaceQuad {
    static constexpr int n_qp = 2;
    // shape weights of (node_a, node_b) at the two quadrature points
    static constexpr double Na[2] = {0.7886751345948129, 0.2113248654051871};
};

/// rhs_i += s * int_face g(t) phi_i dt, g given at the two face quad points.
void add_face_scalar_rhs(SystemBuilder& b, const DofMap& m, int off, int node_a, int node_b,
                         double length, const std::array<double, 2>& g, double sign);
void add_face_vector_rhs(SystemBuilder& b, const DofMap& m, int off, int node_a, int node_b,
                         double length, const std::array<Vec2, 2>& g, double sign);

/// Matrix surface coupling  A[p_i, (u_j,c)] += s n_c int psi_i phi_j dt over a face.
void add_face_normal_coupling(SystemBuilder& b, const DofMap& rowmap, int rowoff, const DofMap& colmap,
                              int coloff, int node_a, int node_b, double length, const Vec2& normal,
                              double sign, bool row_scalar_col_vector);

/// L2 inner product weight vector (row of ones against the mass matrix) for a
/// subdomain; used for zero-mean constraints and projections.
Vector mean_weight_vector(const DofMap& m, const Quadrature& q, int offset, int total);

/// Weight vector of the discrete rotation functional int (d1 u2 - d2 u1).
Vector rotation_weight_vector(const DofMap& m, const Quadrature& q, int offset, int total);

/// Nodal interpolation helpers.
double eval_scalar(const DofMap& m, const Vector& x, int active_elem, const Quadrature& q, int qp,
                   int offset = 0);
Vec2 eval_vector(const DofMap& m, const Vector& x, int active_elem, const Quadrature& q, int qp,
                 int offset = 0);
Vec2 eval_scalar_gradient(const DofMap& m, const Vector& x, int active_elem, const Quadrature& q, int qp,
                          int offset = 0);
Mat2 eval_vector_gradient(const DofMap& m, const Vector& x, int active_elem, const Quadrature& q, int qp,
                          int offset = 0);

} // namespace ts

#endif
