#ifndef FINSWIM_FLOW_HPP
#define FINSWIM_FLOW_HPP

#include <memory>
#include <vector>

#include "finswim/body.hpp"
#include "finswim/common.hpp"
#include "finswim/fish.hpp"

namespace finswim {

/** Uniform Cartesian grid. Cell (i,j) spans [i h, (i+1) h) x [j h, (j+1) h)
 *  relative to origin; u lives on vertical faces, v on horizontal faces, p at
 *  cell centres. */
struct Grid {
    int nx = 0, ny = 0;
    double h = 0.0;
    Vec2 origin{0.0, 0.0};

    Vec2 cell_center(int i, int j) const {
        return {origin.x + (i + 0.5) * h, origin.y + (j + 0.5) * h};
    }
    Vec2 u_face(int i, int j) const { return {origin.x + i * h, origin.y + (j + 0.5) * h}; }
    Vec2 v_face(int i, int j) const { return {origin.x + (i + 0.5) * h, origin.y + j * h}; }
    double width() const { return nx * h; }
    double height() const { return ny * h; }
};

/** Physical and numerical parameters of the solver. */
struct SolverParams {
    double rho = 1.0;
    double U = 1.0;             ///< inflow speed
    double Re = 6000.0;         ///< Reynolds number based on U and char_length
    double char_length = 3.0;   ///< length scale entering Re
    double cfl = 0.5;           ///< CFL safety factor
    double kernel_width = 2.0;  ///< interface smoothing half-width, in cells
    double poisson_tol = 1e-6;  ///< bound on max |div u| after projection
    int poisson_max_cycles = 10000;

    double nu() const { return U * char_length / Re; }
};

/** Staggered velocity/pressure state. */
struct FlowField {
    Grid grid;
    Array2D u, v, p;  ///< u: (nx+1) x ny, v: nx x (ny+1), p: nx x ny
    double t = 0.0;

    FlowField() = default;
    FlowField(const Grid& g, double u0)
        : grid(g), u(g.nx + 1, g.ny, u0), v(g.nx, g.ny + 1, 0.0), p(g.nx, g.ny, 0.0) {}
};

/** Bilinear samplers on the staggered arrangement. */
double sample_u(const FlowField& f, Vec2 p);
double sample_v(const FlowField& f, Vec2 p);
double sample_p(const FlowField& f, Vec2 p);
Vec2 sample_velocity(const FlowField& f, Vec2 p);

/** Cell-centred vorticity dv/dx - du/dy by central differences. */
Array2D vorticity(const FlowField& f);

/** Max |div u| over cells, div by compact face differences. */
double max_divergence(const FlowField& f);

/** u sampled along a vertical line at station x (n points spanning the
 *  domain height). Throws ConfigError if x lies outside the domain. */
std::vector<double> velocity_profile(const FlowField& f, double x, int n);

class PoissonMG;

/**
 * Incompressible flow update: explicit two-stage predictor-corrector for
 * convection (quadratic upwind) and diffusion, immersed-body velocity
 * blending through a smoothed interface kernel, and a multigrid pressure
 * projection after each stage. Inflow on the left boundary, free-slip top
 * and bottom walls, convective outflow on the right.
 */
class FlowSolver {
  public:
    FlowSolver(const Grid& grid, const SolverParams& params);
    ~FlowSolver();

    /** Stable step size: CFL on |u|+|v| combined with the diffusive limit. */
    double compute_dt(const FlowField& f) const;

    /** Advance one step of size dt with the given (already moved) body. */
    void step(FlowField& f, const ImmersedBody& body, double dt);

    const SolverParams& params() const { return params_; }
    const Grid& grid() const { return grid_; }
    /** V-cycles used by the last pressure solve. */
    int last_poisson_cycles() const { return last_cycles_; }

    /** Interface kernel weight (1 = fluid, 0 = solid) for distance d in cells. */
    static double kernel_weight(double d_cells, double eps_cells);

  private:
    Grid grid_;
    SolverParams params_;
    Array2D mu_u_, mu_v_;    ///< kernel weights at u/v faces
    Array2D ub_u_, ub_v_;    ///< body velocity components at faces
    Array2D rhs_u_, rhs_v_;  ///< convection-diffusion right-hand sides
    Array2D us_, vs_;        ///< predictor stage field
    Array2D u0_, v0_;        ///< step start field
    Array2D div_, psi_;      ///< projection work arrays
    std::unique_ptr<PoissonMG> poisson_;
    int last_cycles_ = 0;
    bool weights_dirty_ = true;

    void update_body_weights(const ImmersedBody& body);
    void conv_diff(const Array2D& u, const Array2D& v, Array2D& ru, Array2D& rv) const;
    void blend(Array2D& u, Array2D& v) const;
    void enforce_bc(Array2D& u, Array2D& v) const;
    void outlet_update(Array2D& u, double dt) const;
    void mass_fix(Array2D& u) const;
    void project(Array2D& u, Array2D& v, Array2D& p_out, double stage_dt);
};

/**
 * Loads on the fluid integrated over the hull outline: pressure sampled just
 * outside the interface band along each panel normal, tangential viscous
 * stress from the near-surface velocity relative to the body.
 */
LinkLoads surface_loads(const FlowField& f, const BodyOutline& outline, const BodyFrame& frame,
                        const SolverParams& sp, double link_length);

/** Pressures at the fixed arc-fraction probes, sampled one offset outside the
 *  interface band. */
std::vector<double> probe_pressures(const FlowField& f, const BodyOutline& outline,
                                    int probe_count, const SolverParams& sp);

}  // namespace finswim

#endif
