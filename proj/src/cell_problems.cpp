#include "tissuescale/cell_problems.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>

namespace ts {

namespace {

void validate_spd2(const std::vector<Mat2>& k, const DofMap& m, const char* what) {
    for (int e : m.elements) {
        Eigen::SelfAdjointEigenSolver<Mat2> es(Mat2(0.5 * (k[e] + k[e].transpose())));
        if (!(es.eigenvalues().minCoeff() > 0.0))
            throw ValidationError(std::string(what) + ": coefficient not uniformly positive definite");
    }
}

void require_connected_elastic(const UnitCell& cell) {
    int nc = 0;
    phase_components(cell.grid, cell.mat, Phase::Elastic, &nc);
    if (nc != 1) throw SolverError("elastic phase is disconnected; cell problem is singular");
}

/// Zero-mean constraint (weight + null vector) for one component of a map.
void add_component_mean(SystemBuilder& b, const DofMap& m, const Quadrature& q, int comp, int total) {
    Vector ws = mean_weight_vector(m, q, 0, m.n_dofs);
    Vector w = Vector::Zero(total), z = Vector::Zero(total);
    for (int d = 0; d < m.n_dofs; ++d) {
        w[m.vdof(d, comp)] = ws[d];
        z[m.vdof(d, comp)] = 1.0;
    }
    b.add_mean_constraint(std::move(w), std::move(z));
}

double weighted_mean(const DofMap& m, const Quadrature& q, const Vector& x, int comp, double measure) {
    Vector ws = mean_weight_vector(m, q, 0, m.n_dofs);
    double s = 0.0;
    for (int d = 0; d < m.n_dofs; ++d) s += ws[d] * x[m.vdof(d, comp)];
    return s / measure;
}

struct Dsu {
    std::vector<int> parent;
    explicit Dsu(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace

UnitCell UnitCell::build(int resolution, const InclusionSpec& inclusion,
                         const MembraneArcSpec& membrane, std::array<double, 2> lengths) {
    auto [grid, mat] = build_unit_cell(resolution, inclusion, membrane, lengths);
    UnitCell cell;
    cell.grid = std::move(grid);
    cell.mat = std::move(mat);
    cell.scalar_e = build_dof_map(cell.grid, &cell.mat, Phase::Elastic, 1);
    cell.vec_e = build_dof_map(cell.grid, &cell.mat, Phase::Elastic, 2);
    cell.scalar_f = build_dof_map(cell.grid, &cell.mat, Phase::Fluid, 1);
    cell.vec_f = build_dof_map(cell.grid, &cell.mat, Phase::Fluid, 2);
    cell.scalar_y = build_dof_map_split(cell.grid, cell.mat);
    cell.geometry_hash = cell.mat.geometry_hash(cell.grid);
    return cell;
}

std::array<FieldResult, 3> solve_elastic_correctors(const UnitCell& cell,
                                                    const std::vector<Tensor4>& elasticity,
                                                    const SolveOptions& opt,
                                                    const std::array<const Vector*, 3>& warm) {
    const DofMap& m = cell.vec_e;
    for (int e : m.elements)
        if (!(elasticity[e].min_eigenvalue_sym() > 0.0))
            throw ValidationError("elasticity field violates the coercivity bound");
    require_connected_elastic(cell);

    Quadrature q(cell.grid);
    static const std::array<std::pair<int, int>, 3> pairs = {{{0, 0}, {1, 1}, {0, 1}}};
    std::array<FieldResult, 3> out;
    for (int idx = 0; idx < 3; ++idx) {
        auto [k, l] = pairs[idx];
        SystemBuilder b(m.n_total());
        add_elasticity(b, m, q, [&](int, int e, int) { return elasticity[e]; });
        Mat2 bkl = basis_dyad(k, l);
        add_prestrain_rhs(
            b, m, q, [&](int, int e, int) { return elasticity[e]; },
            [&](int, int, int) { return bkl; });
        add_component_mean(b, m, q, 0, m.n_total());
        add_component_mean(b, m, q, 1, m.n_total());
        LinearSystem sys = b.build();
        SolveReport rep;
        Vector warm_full;
        const Vector* ws = nullptr;
        if (warm[idx] && warm[idx]->size() == m.n_total()) {
            warm_full = Vector::Zero(sys.rhs.size());
            warm_full.head(m.n_total()) = *warm[idx];
            ws = &warm_full;
        }
        Vector x = solve_system(sys, opt, &rep, ws);
        FieldResult r;
        r.values = x.head(m.n_total());
        r.residual = rep.rel_residual;
        double measure = cell.mat.theta_e * cell.grid.volume();
        r.mean = std::max(std::abs(weighted_mean(m, q, r.values, 0, measure)),
                          std::abs(weighted_mean(m, q, r.values, 1, measure)));
        out[idx] = std::move(r);
    }
    return out;
}

PressureCorrectors solve_pressure_correctors(const UnitCell& cell, const std::vector<Mat2>& k_field,
                                             const SolveOptions& opt) {
    const DofMap& m = cell.scalar_e;
    validate_spd2(k_field, m, "permeability");
    require_connected_elastic(cell);
    Quadrature q(cell.grid);
    double measure = cell.mat.theta_e * cell.grid.volume();

    PressureCorrectors out;
    for (int k = 0; k < 2; ++k) {
        Vec2 ek = Vec2::Unit(k);
        // w_p: div(K(grad w + e_k)) = 0 in Y_e, K(grad w + e_k).n = 0 on Gamma
        {
            SystemBuilder b(m.n_dofs);
            add_diffusion(b, m, q, [&](int, int e, int) { return k_field[e]; });
            add_flux_rhs(b, m, q, [&](int, int e, int) { return Vec2(-(k_field[e] * ek)); });
            b.add_mean_constraint(mean_weight_vector(m, q, 0, m.n_dofs), Vector::Ones(m.n_dofs));
            LinearSystem sys = b.build();
            SolveReport rep;
            Vector x = solve_system(sys, opt, &rep);
            out.w_p[k] = {x.head(m.n_dofs), rep.rel_residual, 0.0};
            out.w_p[k].mean = weighted_mean(m, q, out.w_p[k].values, 0, measure);
        }
        // w_e: div(K grad w - e_k) = 0 in Y_e, (K grad w - e_k).n = 0 on Gamma
        {
            SystemBuilder b(m.n_dofs);
            add_diffusion(b, m, q, [&](int, int e, int) { return k_field[e]; });
            add_flux_rhs(b, m, q, [&](int, int, int) { return ek; });
            b.add_mean_constraint(mean_weight_vector(m, q, 0, m.n_dofs), Vector::Ones(m.n_dofs));
            LinearSystem sys = b.build();
            SolveReport rep;
            Vector x = solve_system(sys, opt, &rep);
            out.w_e[k] = {x.head(m.n_dofs), rep.rel_residual, 0.0};
            out.w_e[k].mean = weighted_mean(m, q, out.w_e[k].values, 0, measure);
        }
    }
    return out;
}

DiffusionCorrectors solve_diffusion_correctors(const UnitCell& cell, double d_e, double d_f,
                                               const SolveOptions& opt) {
    if (!(d_e > 0.0) || !(d_f > 0.0)) throw ValidationError("diffusion coefficients must be positive");
    Quadrature q(cell.grid);
    DiffusionCorrectors out;

    // omega_b on the elastic phase; the constant per-species diffusivity
    // cancels, so one Laplace corrector per direction serves all species
    {
        const DofMap& m = cell.scalar_e;
        double measure = cell.mat.theta_e * cell.grid.volume();
        for (int j = 0; j < 2; ++j) {
            SystemBuilder b(m.n_dofs);
            add_diffusion(b, m, q, [](int, int, int) { return Mat2(Mat2::Identity()); });
            add_flux_rhs(b, m, q, [&](int, int, int) { return Vec2(-Vec2::Unit(j)); });
            b.add_mean_constraint(mean_weight_vector(m, q, 0, m.n_dofs), Vector::Ones(m.n_dofs));
            LinearSystem sys = b.build();
            SolveReport rep;
            Vector x = solve_system(sys, opt, &rep);
            out.omega_b[j] = {x.head(m.n_dofs), rep.rel_residual, 0.0};
            out.omega_b[j].mean = weighted_mean(m, q, out.omega_b[j].values, 0, measure);
        }
    }

    // omega on the whole cell with the membrane jump
    {
        const DofMap& m = cell.scalar_y;
        auto dcoef = [&](int e) { return cell.mat.is_fluid(e) ? d_f : d_e; };
        Dsu dsu(m.n_dofs);
        for (const auto& dofs : m.elem_dofs)
            for (int i = 1; i < 4; ++i) dsu.unite(dofs[0], dofs[i]);
        std::vector<int> comp_of(m.n_dofs);
        std::vector<int> roots;
        for (int d = 0; d < m.n_dofs; ++d) {
            int r = dsu.find(d);
            auto it = std::find(roots.begin(), roots.end(), r);
            if (it == roots.end()) {
                roots.push_back(r);
                comp_of[d] = static_cast<int>(roots.size()) - 1;
            } else {
                comp_of[d] = static_cast<int>(it - roots.begin());
            }
        }
        out.n_components = static_cast<int>(roots.size());
        if (out.n_components > 1)
            std::cerr << "warning: membrane patch disconnects the cell scalar space ("
                      << out.n_components << " components); exchange is degenerate\n";

        Vector ws = mean_weight_vector(m, q, 0, m.n_dofs);
        for (int j = 0; j < 2; ++j) {
            SystemBuilder b(m.n_dofs);
            add_diffusion(b, m, q, [&](int, int e, int) { return Mat2(dcoef(e) * Mat2::Identity()); });
            add_flux_rhs(b, m, q, [&](int, int e, int) { return Vec2(-dcoef(e) * Vec2::Unit(j)); });
            for (int c = 0; c < out.n_components; ++c) {
                Vector w = Vector::Zero(m.n_dofs), z = Vector::Zero(m.n_dofs);
                for (int d = 0; d < m.n_dofs; ++d)
                    if (comp_of[d] == c) {
                        w[d] = ws[d];
                        z[d] = 1.0;
                    }
                b.add_mean_constraint(std::move(w), std::move(z));
            }
            LinearSystem sys = b.build();
            SolveReport rep;
            Vector x = solve_system(sys, opt, &rep);
            out.omega[j] = {x.head(m.n_dofs), rep.rel_residual, 0.0};
            out.omega[j].mean = weighted_mean(m, q, out.omega[j].values, 0, cell.grid.volume());
        }
    }
    return out;
}

FieldResult solve_convection_corrector(const UnitCell& cell, double d_f,
                                       const std::function<Vec2(int, int)>& g_field,
                                       const SolveOptions& opt) {
    if (!(d_f > 0.0)) throw ValidationError("fluid diffusivity must be positive");
    const DofMap& m = cell.scalar_f;
    if (m.elements.empty()) throw ValidationError("convection corrector needs a fluid phase");
    Quadrature q(cell.grid);
    SystemBuilder b(m.n_dofs);
    add_diffusion(b, m, q, [&](int, int, int) { return Mat2(d_f * Mat2::Identity()); });
    add_flux_rhs(b, m, q, [&](int, int e, int qp) { return g_field(e, qp); });
    b.add_mean_constraint(mean_weight_vector(m, q, 0, m.n_dofs), Vector::Ones(m.n_dofs));
    LinearSystem sys = b.build();
    SolveReport rep;
    Vector x = solve_system(sys, opt, &rep);
    FieldResult r{x.head(m.n_dofs), rep.rel_residual, 0.0};
    r.mean = weighted_mean(m, q, r.values, 0, cell.mat.theta_f * cell.grid.volume());
    return r;
}

FieldResult solve_flux_corrector(const UnitCell& cell, const std::vector<Mat2>& k_field,
                                 const std::vector<std::array<double, 2>>& normal_data,
                                 const SolveOptions& opt, double compat_tol) {
    const DofMap& m = cell.scalar_e;
    validate_spd2(k_field, m, "permeability");
    if (normal_data.size() != cell.mat.gamma.size())
        throw ValidationError("flux corrector: one data pair per interface face required");

    double defect = 0.0, scale = 0.0;
    for (std::size_t f = 0; f < normal_data.size(); ++f) {
        double len = cell.mat.gamma[f].length;
        defect += 0.5 * len * (normal_data[f][0] + normal_data[f][1]);
        scale += 0.5 * len * (std::abs(normal_data[f][0]) + std::abs(normal_data[f][1]));
    }
    if (scale > 0.0 && std::abs(defect) > compat_tol * scale) {
        std::ostringstream os;
        os << "flux corrector: incompatible boundary flux, defect=" << defect << " (scale=" << scale
           << ")";
        throw ValidationError(os.str());
    }

    Quadrature q(cell.grid);
    SystemBuilder b(m.n_dofs);
    add_diffusion(b, m, q, [&](int, int e, int) { return k_field[e]; });
    for (std::size_t f = 0; f < normal_data.size(); ++f) {
        const auto& face = cell.mat.gamma[f];
        add_face_scalar_rhs(b, m, 0, face.node_a, face.node_b, face.length, normal_data[f], -1.0);
    }
    b.add_mean_constraint(mean_weight_vector(m, q, 0, m.n_dofs), Vector::Ones(m.n_dofs));
    LinearSystem sys = b.build();
    SolveReport rep;
    Vector x = solve_system(sys, opt, &rep);
    FieldResult r{x.head(m.n_dofs), rep.rel_residual, 0.0};
    r.mean = weighted_mean(m, q, r.values, 0, cell.mat.theta_e * cell.grid.volume());
    return r;
}

StokesResponse solve_stokes(const UnitCell& cell, double mu, const Vec2& body_force,
                            const Vec2& wall_velocity, const SolveOptions& opt, double mass_over_dt,
                            const Vector* old_velocity,
                            const std::vector<std::array<double, 2>>* normal_stress_data) {
    if (!(mu > 0.0)) throw ValidationError("viscosity must be positive");
    const DofMap& u = cell.vec_f;
    const DofMap& p = cell.scalar_f;
    if (u.elements.empty()) throw ValidationError("stokes: fluid phase is empty");
    int nc = 0;
    phase_components(cell.grid, cell.mat, Phase::Fluid, &nc);
    if (nc != 1) throw SolverError("stokes: fluid phase is disconnected");

    Quadrature q(cell.grid);
    const int nu = u.n_total();
    const int np = p.n_dofs;

    // no-slip in the tangential direction: pin the component parallel to each
    // interface face (both components at staircase corners)
    Constraints bc;
    for (const auto& f : cell.mat.gamma) {
        int axis = std::abs(f.normal.x()) > 0.5 ? 0 : 1;
        int tang = 1 - axis;
        for (int n : {f.node_a, f.node_b}) bc.pin(u.vdof(u.node_dof(n), tang), wall_velocity[tang]);
    }

    SystemBuilder b(nu + np, &bc);
    const Tensor4 visc = Tensor4::isotropic(0.0, mu / 2.0); // stress  mu e(u)
    add_elasticity(b, u, q, [&](int, int, int) { return visc; });
    if (mass_over_dt > 0.0) add_mass(b, u, q, [&](int, int, int) { return mass_over_dt; }, false);
    add_divergence_transposed(b, u, 0, p, nu, q, -1.0); // -(p, div eta)
    add_divergence(b, u, 0, p, nu, q, -1.0);            // -(div u, psi) ...
    add_bp_stabilization(b, p, nu, q, cell.grid, mu, 0.1); // ... + c_bp(p, psi)
    add_vector_source(b, u, q, [&](int, int, int) { return body_force; });
    if (mass_over_dt > 0.0 && old_velocity) {
        add_vector_source(b, u, q, [&](int a, int, int qp) {
            return Vec2(mass_over_dt * eval_vector(u, *old_velocity, a, q, qp));
        });
    }
    if (normal_stress_data) {
        for (std::size_t f = 0; f < cell.mat.gamma.size(); ++f) {
            const auto& face = cell.mat.gamma[f];
            std::array<Vec2, 2> g = {Vec2((*normal_stress_data)[f][0] * face.normal),
                                     Vec2((*normal_stress_data)[f][1] * face.normal)};
            add_face_vector_rhs(b, u, 0, face.node_a, face.node_b, face.length, g, 1.0);
        }
    }
    LinearSystem sys = b.build();
    SolveReport rep;
    Vector x = solve_system(sys, opt, &rep);
    bc.distribute(x);

    StokesResponse r;
    r.velocity = x.head(nu);
    r.pressure = x.segment(nu, np);
    r.residual = rep.rel_residual;

    // continuity residual localized per element (constraint rows are exact)
    Vector res = sys.rhs - sys.A * x;
    for (std::size_t a = 0; a < p.elements.size(); ++a)
        for (int i = 0; i < 4; ++i)
            r.max_divergence = std::max(r.max_divergence, std::abs(res[nu + p.elem_dofs[a][i]]));

    for (std::size_t a = 0; a < u.elements.size(); ++a)
        for (int qp = 0; qp < Quadrature::n_qp; ++qp)
            r.mean_velocity += q.w * eval_vector(u, r.velocity, static_cast<int>(a), q, qp);
    r.mean_velocity /= cell.grid.volume();
    return r;
}

std::array<StokesResponse, 4> solve_stokes_unit_responses(const UnitCell& cell, double mu,
                                                          const SolveOptions& opt) {
    std::array<StokesResponse, 4> out;
    for (int k = 0; k < 2; ++k) out[k] = solve_stokes(cell, mu, -Vec2::Unit(k), Vec2::Zero(), opt);
    for (int k = 0; k < 2; ++k) out[2 + k] = solve_stokes(cell, mu, Vec2::Zero(), Vec2::Unit(k), opt);
    return out;
}

std::vector<std::array<double, 2>> interface_normal_trace(const UnitCell& cell, const Vector& velocity) {
    const DofMap& u = cell.vec_f;
    std::vector<std::array<double, 2>> data(cell.mat.gamma.size());
    for (std::size_t f = 0; f < cell.mat.gamma.size(); ++f) {
        const auto& face = cell.mat.gamma[f];
        int da = u.node_dof(face.node_a), db = u.node_dof(face.node_b);
        Vec2 va{velocity[u.vdof(da, 0)], velocity[u.vdof(da, 1)]};
        Vec2 vb{velocity[u.vdof(db, 0)], velocity[u.vdof(db, 1)]};
        for (int g = 0; g < 2; ++g) {
            Vec2 v = (g == 0 ? Vec2(FaceQuad::Na[0] * va + FaceQuad::Na[1] * vb)
                             : Vec2(FaceQuad::Na[1] * va + FaceQuad::Na[0] * vb));
            data[f][g] = v.dot(face.normal);
        }
    }
    return data;
}

} // namespace ts
