#include "finswim/poisson.hpp"

#include <cmath>

namespace finswim {

PoissonMG::PoissonMG(int nx, int ny) {
    int cx = nx, cy = ny;
    while (true) {
        Level L;
        L.nx = cx;
        L.ny = cy;
        L.bu = Array2D(cx + 1, cy);
        L.bv = Array2D(cx, cy + 1);
        L.diag = Array2D(cx, cy);
        L.rhs = Array2D(cx, cy);
        L.psi = Array2D(cx, cy);
        L.res = Array2D(cx, cy);
        levels_.push_back(std::move(L));
        if (cx % 2 != 0 || cy % 2 != 0 || cx <= 4 || cy <= 4) break;
        cx /= 2;
        cy /= 2;
    }
}

void PoissonMG::set_coefficients(const Array2D& bu, const Array2D& bv) {
    Level& f = levels_[0];
    f.bu = bu;
    f.bv = bv;
    for (size_t l = 1; l < levels_.size(); l++) {
        const Level& F = levels_[l - 1];
        Level& C = levels_[l];
        for (int j = 0; j < C.ny; j++)
            for (int i = 0; i <= C.nx; i++)
                C.bu(i, j) = 0.5 * (F.bu(2 * i, 2 * j) + F.bu(2 * i, 2 * j + 1));
        for (int j = 0; j <= C.ny; j++)
            for (int i = 0; i < C.nx; i++)
                C.bv(i, j) = 0.5 * (F.bv(2 * i, 2 * j) + F.bv(2 * i + 1, 2 * j));
    }
    for (Level& L : levels_)
        for (int j = 0; j < L.ny; j++)
            for (int i = 0; i < L.nx; i++)
                L.diag(i, j) = L.bu(i, j) + L.bu(i + 1, j) + L.bv(i, j) + L.bv(i, j + 1);
}

void PoissonMG::smooth(Level& L, int sweeps, bool reverse_colors) {
    for (int s = 0; s < sweeps; s++) {
        for (int pass = 0; pass < 2; pass++) {
            int color = reverse_colors ? 1 - pass : pass;
            for (int j = 0; j < L.ny; j++) {
                int i0 = (color + j) % 2;
                for (int i = i0; i < L.nx; i += 2) {
                    double d = L.diag(i, j);
                    if (d <= 0.0) {
                        L.psi(i, j) = 0.0;
                        continue;
                    }
                    double s_nb = 0.0;
                    if (i > 0) s_nb += L.bu(i, j) * L.psi(i - 1, j);
                    if (i + 1 < L.nx) s_nb += L.bu(i + 1, j) * L.psi(i + 1, j);
                    if (j > 0) s_nb += L.bv(i, j) * L.psi(i, j - 1);
                    if (j + 1 < L.ny) s_nb += L.bv(i, j + 1) * L.psi(i, j + 1);
                    L.psi(i, j) = (s_nb - L.rhs(i, j)) / d;
                }
            }
        }
    }
}

void PoissonMG::compute_residual(Level& L) {
    for (int j = 0; j < L.ny; j++) {
        for (int i = 0; i < L.nx; i++) {
            double d = L.diag(i, j);
            if (d <= 0.0) {
                L.res(i, j) = 0.0;
                continue;
            }
            double ap = -d * L.psi(i, j);
            if (i > 0) ap += L.bu(i, j) * L.psi(i - 1, j);
            if (i + 1 < L.nx) ap += L.bu(i + 1, j) * L.psi(i + 1, j);
            if (j > 0) ap += L.bv(i, j) * L.psi(i, j - 1);
            if (j + 1 < L.ny) ap += L.bv(i, j + 1) * L.psi(i, j + 1);
            L.res(i, j) = L.rhs(i, j) - ap;
        }
    }
}

void PoissonMG::restrict_to(const Level& fine, Level& coarse) {
    for (int j = 0; j < coarse.ny; j++)
        for (int i = 0; i < coarse.nx; i++)
            coarse.rhs(i, j) = fine.res(2 * i, 2 * j) + fine.res(2 * i + 1, 2 * j) +
                               fine.res(2 * i, 2 * j + 1) + fine.res(2 * i + 1, 2 * j + 1);
}

void PoissonMG::prolong_add(const Level& coarse, Level& fine) {
    // bilinear prolongation for cell-centred data
    for (int j = 0; j < fine.ny; j++) {
        int J = j / 2;
        int dj = (j % 2 == 0) ? -1 : 1;
        int J2 = std::clamp(J + dj, 0, coarse.ny - 1);
        for (int i = 0; i < fine.nx; i++) {
            int I = i / 2;
            int di = (i % 2 == 0) ? -1 : 1;
            int I2 = std::clamp(I + di, 0, coarse.nx - 1);
            double val = 0.5625 * coarse.psi(I, J) + 0.1875 * coarse.psi(I2, J) +
                         0.1875 * coarse.psi(I, J2) + 0.0625 * coarse.psi(I2, J2);
            fine.psi(i, j) += val;
        }
    }
}

void PoissonMG::vcycle(size_t l) {
    Level& L = levels_[l];
    if (l + 1 == levels_.size()) {
        smooth(L, 20, false);
        return;
    }
    smooth(L, 2, false);
    compute_residual(L);
    Level& C = levels_[l + 1];
    restrict_to(L, C);
    C.psi.fill(0.0);
    vcycle(l + 1);
    prolong_add(C, L);
    smooth(L, 2, true);
}

double PoissonMG::residual_inf(const Array2D& psi, const Array2D& rhs) const {
    const Level& L = levels_[0];
    double m = 0.0;
    for (int j = 0; j < L.ny; j++) {
        for (int i = 0; i < L.nx; i++) {
            double d = L.diag(i, j);
            if (d <= 0.0) continue;
            double ap = -d * psi(i, j);
            if (i > 0) ap += L.bu(i, j) * psi(i - 1, j);
            if (i + 1 < L.nx) ap += L.bu(i + 1, j) * psi(i + 1, j);
            if (j > 0) ap += L.bv(i, j) * psi(i, j - 1);
            if (j + 1 < L.ny) ap += L.bv(i, j + 1) * psi(i, j + 1);
            m = std::max(m, std::fabs(rhs(i, j) - ap));
        }
    }
    return m;
}

int PoissonMG::solve(Array2D& psi, const Array2D& rhs, double tol_inf, int max_cycles) {
    Level& L = levels_[0];

    // project the right-hand side onto the solvable (zero-mean) subspace
    double sum = 0.0;
    long count = 0;
    for (int j = 0; j < L.ny; j++)
        for (int i = 0; i < L.nx; i++)
            if (L.diag(i, j) > 0.0) {
                sum += rhs(i, j);
                count++;
            }
    double shift = count > 0 ? sum / double(count) : 0.0;
    for (int j = 0; j < L.ny; j++)
        for (int i = 0; i < L.nx; i++)
            L.rhs(i, j) = L.diag(i, j) > 0.0 ? rhs(i, j) - shift : 0.0;

    L.psi = psi;
    for (int cycle = 0; cycle < max_cycles; cycle++) {
        if (residual_inf(L.psi, L.rhs) <= tol_inf) {
            psi = L.psi;
            return cycle;
        }
        vcycle(0);
    }
    if (residual_inf(L.psi, L.rhs) <= tol_inf) {
        psi = L.psi;
        return max_cycles;
    }
    throw SolverError(strfmt("pressure solve failed to reach %.3e in %d cycles", tol_inf,
                             max_cycles));
}

}  // namespace finswim
