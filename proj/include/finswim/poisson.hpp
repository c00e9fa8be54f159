#ifndef FINSWIM_POISSON_HPP
#define FINSWIM_POISSON_HPP

#include <vector>

#include "finswim/common.hpp"

namespace finswim {

/**
 * Geometric multigrid solver for the variable-coefficient pressure equation
 *
 *   sum_faces beta_f (psi_nb - psi_P) = rhs_P
 *
 * on a cell-centred grid, with face weights beta in [0,1] (zero on domain
 * boundaries and inside immersed solids). The system is pure-Neumann: the
 * right-hand side is projected onto the solvable subspace before cycling.
 * Convergence is measured in the max norm of the residual.
 */
class PoissonMG {
  public:
    PoissonMG(int nx, int ny);

    /** Install face weights (bu: (nx+1) x ny, bv: nx x (ny+1)) and restrict
     *  them through the hierarchy. */
    void set_coefficients(const Array2D& bu, const Array2D& bv);

    /**
     * Solve in place, using psi's current content as the initial guess.
     * Returns the number of V-cycles. Throws SolverError when max_cycles
     * V-cycles fail to reach tol_inf.
     */
    int solve(Array2D& psi, const Array2D& rhs, double tol_inf, int max_cycles);

    /** Residual max-norm for the current psi (diagnostic). */
    double residual_inf(const Array2D& psi, const Array2D& rhs) const;

  private:
    struct Level {
        int nx, ny;
        Array2D bu, bv, diag, rhs, psi, res;
    };
    std::vector<Level> levels_;

    void smooth(Level& L, int sweeps, bool reverse_colors);
    void compute_residual(Level& L);
    void restrict_to(const Level& fine, Level& coarse);
    void prolong_add(const Level& coarse, Level& fine);
    void vcycle(size_t l);
};

}  // namespace finswim

#endif
