#ifndef TISSUESCALE_CELL_PROBLEMS_HPP
#define TISSUESCALE_CELL_PROBLEMS_HPP

#include "tissuescale/fem.hpp"
#include "tissuescale/solve.hpp"

#include <array>
#include <functional>
#include <optional>

namespace ts {

/// Unit-cell discretization shared by every corrector solve. Dof maps are
/// built once; the solves only assemble coefficient-dependent operators.
struct UnitCell {
    PeriodicGrid grid;
    MaterialIndicator mat;
    DofMap scalar_e; // periodic scalar on the elastic phase
    DofMap vec_e;    // periodic vector on the elastic phase
    DofMap scalar_f; // scalar on the fluid phase (interior, nonperiodic in effect)
    DofMap vec_f;    // vector on the fluid phase
    DofMap scalar_y; // scalar on the whole cell, membrane nodes duplicated
    std::uint64_t geometry_hash = 0;

    Quadrature quad() const { return Quadrature(grid); }

    static UnitCell build(int resolution, const InclusionSpec& inclusion,
                          const MembraneArcSpec& membrane, std::array<double, 2> lengths = {1.0, 1.0});
};

struct FieldResult {
    Vector values;
    double residual = 0.0;
    double mean = 0.0; // mass-weighted mean after projection
};

/// Elastic correctors w^kl for the index pairs (11, 22, 12); Y-periodic,
/// zero mean per component over Y_e, traction-free on the interface.
/// The coefficient is a per-grid-element tensor (entries outside Y_e unused).
std::array<FieldResult, 3> solve_elastic_correctors(const UnitCell& cell,
                                                    const std::vector<Tensor4>& elasticity,
                                                    const SolveOptions& opt = {},
                                                    const std::array<const Vector*, 3>& warm = {});

/// Pressure correctors w_p^k (flux of K(grad w + e_k) vanishing on Gamma) and
/// coupling correctors w_e^k (flux of K grad w - e_k vanishing on Gamma).
struct PressureCorrectors {
    std::array<FieldResult, 2> w_p;
    std::array<FieldResult, 2> w_e;
};
PressureCorrectors solve_pressure_correctors(const UnitCell& cell, const std::vector<Mat2>& k_field,
                                             const SolveOptions& opt = {});

/// Diffusion correctors: omega_b^j on Y_e with no-flux on the whole interface
/// (independent of the constant per-species diffusivities), and omega^j on Y
/// with the piecewise coefficient D_e/D_f and a jump across the membrane.
struct DiffusionCorrectors {
    std::array<FieldResult, 2> omega_b;
    std::array<FieldResult, 2> omega;
    int n_components = 1; // connected components of the split scalar space
};
DiffusionCorrectors solve_diffusion_correctors(const UnitCell& cell, double d_e, double d_f,
                                               const SolveOptions& opt = {});

/// Convection corrector z on Y_f driven by a bounded field G (values taken at
/// element quadrature points).
FieldResult solve_convection_corrector(const UnitCell& cell, double d_f,
                                       const std::function<Vec2(int elem, int qp)>& g_field,
                                       const SolveOptions& opt = {});

/// Flux corrector q on Y_e for normal-velocity data on Gamma (two values per
/// interface face, at the face quadrature points). The compatibility defect
/// |int_Gamma data| must vanish to `compat_tol` relative to int_Gamma |data|.
FieldResult solve_flux_corrector(const UnitCell& cell, const std::vector<Mat2>& k_field,
                                 const std::vector<std::array<double, 2>>& normal_data,
                                 const SolveOptions& opt = {}, double compat_tol = 1e-8);

/// One steady Stokes response on the fluid phase.
struct StokesResponse {
    Vector velocity; // on vec_f dofs
    Vector pressure; // on scalar_f dofs
    double residual = 0.0;
    double max_divergence = 0.0; // max continuity-row residual over elements
    Vec2 mean_velocity = Vec2::Zero(); // (1/|Y|) int_{Y_f} v dy
};

/// Unit responses of the quasi-steady cell flow: modes 0,1 react to a unit
/// macroscopic pressure gradient e_k; modes 2,3 to a unit tangential wall
/// velocity e_k.
std::array<StokesResponse, 4> solve_stokes_unit_responses(const UnitCell& cell, double mu,
                                                          const SolveOptions& opt = {});

/// Solve one steady Stokes problem with a prescribed body force and wall
/// velocity (tangential trace pinned); building block of the unit responses
/// and of the full two-scale fluid mode.
StokesResponse solve_stokes(const UnitCell& cell, double mu, const Vec2& body_force,
                            const Vec2& wall_velocity, const SolveOptions& opt = {},
                            double mass_over_dt = 0.0, const Vector* old_velocity = nullptr,
                            const std::vector<std::array<double, 2>>* normal_stress_data = nullptr);

/// Normal-velocity trace of a fluid field on the interface faces (two values
/// per face), as consumed by solve_flux_corrector.
std::vector<std::array<double, 2>> interface_normal_trace(const UnitCell& cell, const Vector& velocity);

} // namespace ts

#endif
