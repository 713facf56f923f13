#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tissuescale/cell_problems.hpp"

#include <cmath>

using namespace ts;

namespace {

const InclusionSpec kDisc{InclusionSpec::Shape::Circle, {0.5, 0.5}, 0.3};
const InclusionSpec kNone{InclusionSpec::Shape::None, {0.5, 0.5}, 0.0};

std::vector<Tensor4> uniform_tensor(const PeriodicGrid& g, const Tensor4& e) {
    return std::vector<Tensor4>(g.n_elements(), e);
}
std::vector<Mat2> uniform_matrix(const PeriodicGrid& g, const Mat2& k) {
    return std::vector<Mat2>(g.n_elements(), k);
}

double field_l2(const UnitCell& cell, const DofMap& m, const Vector& x) {
    Quadrature q(cell.grid);
    double s = 0.0;
    for (std::size_t a = 0; a < m.elements.size(); ++a)
        for (int qp = 0; qp < Quadrature::n_qp; ++qp) {
            if (m.components == 1) {
                double v = eval_scalar(m, x, static_cast<int>(a), q, qp);
                s += q.w * v * v;
            } else {
                s += q.w * eval_vector(m, x, static_cast<int>(a), q, qp).squaredNorm();
            }
        }
    return std::sqrt(s);
}

/// Elastic corrector energy  int_{Y_e} E (e(w)+b) : (e(w)+b) dy.
double corrector_energy(const UnitCell& cell, const std::vector<Tensor4>& E, const Vector& w,
                        const Mat2& bkl) {
    Quadrature q(cell.grid);
    const DofMap& m = cell.vec_e;
    double s = 0.0;
    for (std::size_t a = 0; a < m.elements.size(); ++a) {
        int e = m.elements[a];
        for (int qp = 0; qp < Quadrature::n_qp; ++qp) {
            Mat2 strain = sym(eval_vector_gradient(m, w, static_cast<int>(a), q, qp)) + sym(bkl);
            s += q.w * E[e].form(strain);
        }
    }
    return s;
}

} // namespace

TEST_CASE("elastic correctors vanish for a homogeneous cell without inclusion") {
    auto cell = UnitCell::build(16, kNone, {});
    auto E = uniform_tensor(cell.grid, Tensor4::isotropic(4.0, 3.0));
    auto w = solve_elastic_correctors(cell, E);
    for (const auto& r : w) {
        CHECK(field_l2(cell, cell.vec_e, r.values) <= 1e-9);
        CHECK(r.residual <= 1e-10);
        CHECK(std::abs(r.mean) <= 1e-10);
    }
}

TEST_CASE("disc symmetry: w11 and w22 related by 90 degree rotation") {
    auto cell = UnitCell::build(32, kDisc, {});
    auto E = uniform_tensor(cell.grid, Tensor4::isotropic(4.0, 3.0));
    auto w = solve_elastic_correctors(cell, E);
    // rotate w11 about the cell center: node (x,y) -> (1-y,x), components
    // (u1,u2) -> (-u2,u1); the image must equal w22
    const DofMap& m = cell.vec_e;
    double diff = 0.0, norm = 0.0;
    for (int n = 0; n < cell.grid.n_nodes(); ++n) {
        int d = m.node_dof(n);
        if (d < 0) continue;
        Vec2 p = cell.grid.node_coord(n);
        int ir = static_cast<int>(std::round((1.0 - p.y()) / cell.grid.hx));
        int jr = static_cast<int>(std::round(p.x() / cell.grid.hy));
        if (ir < 0 || jr < 0 || ir > cell.grid.nx || jr > cell.grid.ny) continue;
        int dr = m.node_dof(cell.grid.node_id(ir, jr));
        if (dr < 0) continue;
        Vec2 w11{w[0].values[m.vdof(d, 0)], w[0].values[m.vdof(d, 1)]};
        Vec2 w22_at_image{w[1].values[m.vdof(dr, 0)], w[1].values[m.vdof(dr, 1)]};
        Vec2 rotated{-w11.y(), w11.x()};
        diff += (w22_at_image - rotated).squaredNorm();
        norm += w11.squaredNorm();
    }
    CHECK(std::sqrt(diff) <= 1e-6 * std::max(1.0, std::sqrt(norm)));
}

TEST_CASE("elastic corrector energy is mesh-stable within 2%") {
    auto E = Tensor4::isotropic(4.0, 3.0);
    auto cell32 = UnitCell::build(32, kDisc, {});
    auto cell64 = UnitCell::build(64, kDisc, {});
    auto w32 = solve_elastic_correctors(cell32, uniform_tensor(cell32.grid, E));
    auto w64 = solve_elastic_correctors(cell64, uniform_tensor(cell64.grid, E));
    for (int idx : {0, 1, 2}) {
        Mat2 b = idx == 0 ? basis_dyad(0, 0) : (idx == 1 ? basis_dyad(1, 1) : basis_dyad(0, 1));
        double e32 = corrector_energy(cell32, uniform_tensor(cell32.grid, E), w32[idx].values, b);
        double e64 = corrector_energy(cell64, uniform_tensor(cell64.grid, E), w64[idx].values, b);
        CHECK(std::abs(e32 - e64) <= 0.02 * std::abs(e64));
    }
}

TEST_CASE("corrector fluctuation decreases monotonically with inclusion size") {
    auto E = Tensor4::isotropic(4.0, 3.0);
    double prev = 1e300;
    for (double r : {0.35, 0.25, 0.15}) {
        auto cell = UnitCell::build(32, {InclusionSpec::Shape::Circle, {0.5, 0.5}, r}, {});
        auto w = solve_elastic_correctors(cell, uniform_tensor(cell.grid, E));
        double energy = field_l2(cell, cell.vec_e, w[0].values);
        CHECK(energy < prev);
        prev = energy;
    }
}

TEST_CASE("pressure correctors vanish without inclusion") {
    auto cell = UnitCell::build(16, kNone, {});
    auto K = uniform_matrix(cell.grid, Mat2::Identity());
    auto pc = solve_pressure_correctors(cell, K);
    for (int k = 0; k < 2; ++k) {
        CHECK(field_l2(cell, cell.scalar_e, pc.w_p[k].values) <= 1e-9);
        CHECK(field_l2(cell, cell.scalar_e, pc.w_e[k].values) <= 1e-9);
    }
}

TEST_CASE("laminate pressure corrector matches the piecewise-linear closed form") {
    // K = k1 for y1 < 1/2, k2 otherwise; w_p^1 is one-dimensional with slope
    // H/k - 1, H the harmonic mean
    const double k1 = 1.0, k2 = 4.0;
    const double H = 1.0 / (0.5 / k1 + 0.5 / k2);
    auto cell = UnitCell::build(64, kNone, {});
    std::vector<Mat2> K(cell.grid.n_elements());
    for (int e = 0; e < cell.grid.n_elements(); ++e)
        K[e] = (cell.grid.elem_centroid(e).x() < 0.5 ? k1 : k2) * Mat2::Identity();
    auto pc = solve_pressure_correctors(cell, K);

    const double s1 = H / k1 - 1.0, s2 = H / k2 - 1.0;
    // w(x) = c + s1 x on [0,1/2], c + s1/2 + s2 (x-1/2) after; zero mean fixes c
    const double c = -(s1 / 8 + s1 / 4 + s2 / 8);
    auto exact = [&](double x) { return x < 0.5 ? c + s1 * x : c + s1 * 0.5 + s2 * (x - 0.5); };
    const DofMap& m = cell.scalar_e;
    double err = 0.0;
    for (int n = 0; n < cell.grid.n_nodes(); ++n) {
        int d = m.node_dof(n);
        if (d < 0) continue;
        err = std::max(err, std::abs(pc.w_p[0].values[d] - exact(cell.grid.node_coord(n).x())));
    }
    CHECK(err <= 1e-8);
    CHECK(field_l2(cell, m, pc.w_p[1].values) <= 1e-8);
}

TEST_CASE("disc mirror symmetry: w_p^1 antisymmetric about the vertical centerline") {
    auto cell = UnitCell::build(32, kDisc, {});
    auto pc = solve_pressure_correctors(cell, uniform_matrix(cell.grid, Mat2::Identity()));
    const DofMap& m = cell.scalar_e;
    double diff = 0.0;
    for (int n = 0; n < cell.grid.n_nodes(); ++n) {
        int d = m.node_dof(n);
        if (d < 0) continue;
        Vec2 p = cell.grid.node_coord(n);
        int im = static_cast<int>(std::round((1.0 - p.x()) / cell.grid.hx));
        int dm = m.node_dof(cell.grid.node_id(im, static_cast<int>(std::round(p.y() / cell.grid.hy))));
        if (dm < 0) continue;
        diff = std::max(diff, std::abs(pc.w_p[0].values[d] + pc.w_p[0].values[dm]));
    }
    CHECK(diff <= 1e-7);
}

TEST_CASE("diffusion correctors: no contrast and no membrane gives zero") {
    auto cell = UnitCell::build(16, kDisc, {});
    auto dc = solve_diffusion_correctors(cell, 1.0, 1.0);
    CHECK(dc.n_components == 1);
    for (int j = 0; j < 2; ++j) CHECK(field_l2(cell, cell.scalar_y, dc.omega[j].values) <= 1e-9);
}

TEST_CASE("vanishing-contrast omega approximates omega_b on the elastic phase") {
    auto cell = UnitCell::build(32, kDisc, {});
    auto dc = solve_diffusion_correctors(cell, 1.0, 1e-6);
    const DofMap& me = cell.scalar_e;
    const DofMap& my = cell.scalar_y;
    double diff = 0.0, norm = 0.0;
    for (int j = 0; j < 2; ++j) {
        double se = 0.0, sy = 0.0;
        int cnt = 0;
        for (int d = 0; d < me.n_dofs; ++d) {
            int node = me.dof_node[d];
            int dy = my.node_dof(node);
            if (dy < 0) continue;
            se += dc.omega_b[j].values[d];
            sy += dc.omega[j].values[dy];
            ++cnt;
        }
        double shift = (sy - se) / cnt;
        for (int d = 0; d < me.n_dofs; ++d) {
            int dy = my.node_dof(me.dof_node[d]);
            if (dy < 0) continue;
            diff += std::pow(dc.omega[j].values[dy] - shift - dc.omega_b[j].values[d], 2);
            norm += std::pow(dc.omega_b[j].values[d], 2);
        }
    }
    CHECK(std::sqrt(diff) <= 0.05 * std::sqrt(norm));
}

TEST_CASE("convection corrector: zero field gives zero; rotational field obeys the flux bound") {
    auto cell = UnitCell::build(32, kDisc, {});
    auto z0 = solve_convection_corrector(cell, 0.5, [](int, int) { return Vec2::Zero(); });
    CHECK(field_l2(cell, cell.scalar_f, z0.values) <= 1e-12);

    const double df = 0.5;
    Quadrature q(cell.grid);
    auto rot = [&](int e, int qp) {
        auto [ex, ey] = cell.grid.elem_xy(e);
        Vec2 p{(ex + q.xi[qp][0]) * cell.grid.hx, (ey + q.xi[qp][1]) * cell.grid.hy};
        Vec2 r = p - Vec2{0.5, 0.5};
        return Vec2{-r.y(), r.x()};
    };
    auto z = solve_convection_corrector(cell, df, rot);
    Vec2 flux = Vec2::Zero();
    const DofMap& m = cell.scalar_f;
    double gmax = 0.0;
    for (std::size_t a = 0; a < m.elements.size(); ++a)
        for (int qp = 0; qp < Quadrature::n_qp; ++qp) {
            flux += q.w * df * eval_scalar_gradient(m, z.values, static_cast<int>(a), q, qp);
            gmax = std::max(gmax, rot(m.elements[a], qp).norm());
        }
    CHECK(flux.norm() <= gmax * cell.mat.theta_f * cell.grid.volume());
}

TEST_CASE("convection corrector under constant drive is mesh-stable within 2%") {
    const double df = 0.5;
    Vec2 g{0.3, 0.0};
    auto mean_flux = [&](int res) {
        auto cell = UnitCell::build(res, kDisc, {});
        auto z = solve_convection_corrector(cell, df, [&](int, int) { return g; });
        Quadrature q(cell.grid);
        Vec2 v = Vec2::Zero();
        const DofMap& m = cell.scalar_f;
        for (std::size_t a = 0; a < m.elements.size(); ++a)
            for (int qp = 0; qp < Quadrature::n_qp; ++qp)
                v += q.w * (g - df * eval_scalar_gradient(m, z.values, static_cast<int>(a), q, qp));
        return Vec2(v / cell.grid.volume()); // the downstream v_f integrand
    };
    Vec2 v32 = mean_flux(32), v64 = mean_flux(64);
    CHECK((v32 - v64).norm() <= 0.02 * v64.norm());
}

TEST_CASE("flux corrector: zero data gives zero; constant-vector data is compatible") {
    auto cell = UnitCell::build(32, kDisc, {});
    auto K = uniform_matrix(cell.grid, Mat2::Identity());
    std::vector<std::array<double, 2>> zero(cell.mat.gamma.size(), {0.0, 0.0});
    auto q0 = solve_flux_corrector(cell, K, zero);
    CHECK(field_l2(cell, cell.scalar_e, q0.values) <= 1e-12);

    Vec2 v{0.7, -0.4};
    std::vector<std::array<double, 2>> data(cell.mat.gamma.size());
    for (std::size_t f = 0; f < data.size(); ++f) {
        double nv = cell.mat.gamma[f].normal.dot(v);
        data[f] = {nv, nv};
    }
    auto qc = solve_flux_corrector(cell, K, data);
    CHECK(qc.residual <= 1e-10);
    CHECK(std::abs(qc.mean) <= 1e-10);

    auto cell64 = UnitCell::build(64, kDisc, {});
    std::vector<std::array<double, 2>> data64(cell64.mat.gamma.size());
    for (std::size_t f = 0; f < data64.size(); ++f) {
        double nv = cell64.mat.gamma[f].normal.dot(v);
        data64[f] = {nv, nv};
    }
    auto q64 = solve_flux_corrector(cell64, uniform_matrix(cell64.grid, Mat2::Identity()), data64);
    auto kgrad = [](const UnitCell& c, const Vector& x) {
        Quadrature qq(c.grid);
        Vec2 s = Vec2::Zero();
        for (std::size_t a = 0; a < c.scalar_e.elements.size(); ++a)
            for (int qp = 0; qp < Quadrature::n_qp; ++qp)
                s += qq.w * eval_scalar_gradient(c.scalar_e, x, static_cast<int>(a), qq, qp);
        return s;
    };
    Vec2 g32 = kgrad(cell, qc.values), g64 = kgrad(cell64, q64.values);
    CHECK((g32 - g64).norm() <= 0.02 * std::max(1e-12, g64.norm()));
}

TEST_CASE("flux corrector rejects incompatible data with the measured defect") {
    auto cell = UnitCell::build(16, kDisc, {});
    auto K = uniform_matrix(cell.grid, Mat2::Identity());
    std::vector<std::array<double, 2>> bad(cell.mat.gamma.size(), {1.0, 1.0});
    try {
        solve_flux_corrector(cell, K, bad);
        FAIL("expected rejection");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        CHECK(msg.find("defect") != std::string::npos);
    }
}

TEST_CASE("stokes: zero forcing and boundary data gives zero velocity, constant pressure") {
    auto cell = UnitCell::build(16, kDisc, {});
    auto r = solve_stokes(cell, 1.0, Vec2::Zero(), Vec2::Zero());
    CHECK(field_l2(cell, cell.vec_f, r.velocity) <= 1e-12);
    CHECK(r.pressure.maxCoeff() - r.pressure.minCoeff() <= 1e-10);
}

TEST_CASE("stokes unit responses: signs, divergence, and refinement stability") {
    auto cell = UnitCell::build(32, kDisc, {});
    auto resp = solve_stokes_unit_responses(cell, 1.0, SolveOptions{1e-11, 200000});
    // response to +grad p = e1 flows along -e1; symmetry kills the y-mean
    CHECK(resp[0].mean_velocity.x() < 0.0);
    CHECK(std::abs(resp[0].mean_velocity.y()) <= 1e-8);
    for (const auto& r : resp) CHECK(r.max_divergence <= 1e-8);
    // tangential wall mode drags fluid along the wall direction
    CHECK(resp[2].mean_velocity.x() > 0.0);

    auto cell64 = UnitCell::build(64, kDisc, {});
    auto r64 = solve_stokes(cell64, 1.0, -Vec2::Unit(0), Vec2::Zero(), SolveOptions{1e-11, 400000});
    CHECK(std::abs(resp[0].mean_velocity.x() - r64.mean_velocity.x()) <=
          0.02 * std::abs(r64.mean_velocity.x()));
}

TEST_CASE("stokes: lid-type tangential data on a 16^2 cell keeps continuity residual <= 1e-8") {
    auto cell = UnitCell::build(16, kDisc, {});
    auto r = solve_stokes(cell, 1.0, Vec2::Zero(), Vec2::Unit(0), SolveOptions{1e-11, 100000});
    CHECK(r.max_divergence <= 1e-8);
}

TEST_CASE("residual scales down with solver tolerance") {
    auto cell = UnitCell::build(16, kDisc, {});
    auto K = uniform_matrix(cell.grid, Mat2::Identity());
    double prev = 1.0;
    for (double tol : {1e-6, 1e-8, 1e-10}) {
        auto pc = solve_pressure_correctors(cell, K, SolveOptions{tol, 100000});
        CHECK(pc.w_p[0].residual <= prev * (1 + 1e-12));
        prev = pc.w_p[0].residual;
    }
}
