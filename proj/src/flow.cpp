#include "finswim/flow.hpp"

#include <algorithm>
#include <cmath>

#include "finswim/poisson.hpp"

namespace finswim {

namespace {

/** Quadratic upwind face value from upwind, downwind and far-upwind samples. */
inline double quick(double up, double dn, double far_up) {
    return (6.0 * up + 3.0 * dn - far_up) * 0.125;
}

inline double lerp2(double a, double b, double f) { return a + f * (b - a); }

double bilinear(const Array2D& a, double gx, double gy) {
    int i0 = std::clamp(int(std::floor(gx)), 0, a.nx() - 2);
    int j0 = std::clamp(int(std::floor(gy)), 0, a.ny() - 2);
    double fx = std::clamp(gx - i0, 0.0, 1.0);
    double fy = std::clamp(gy - j0, 0.0, 1.0);
    double lo = lerp2(a(i0, j0), a(i0 + 1, j0), fx);
    double hi = lerp2(a(i0, j0 + 1), a(i0 + 1, j0 + 1), fx);
    return lerp2(lo, hi, fy);
}

}  // namespace

double sample_u(const FlowField& f, Vec2 p) {
    const Grid& g = f.grid;
    return bilinear(f.u, (p.x - g.origin.x) / g.h, (p.y - g.origin.y) / g.h - 0.5);
}

double sample_v(const FlowField& f, Vec2 p) {
    const Grid& g = f.grid;
    return bilinear(f.v, (p.x - g.origin.x) / g.h - 0.5, (p.y - g.origin.y) / g.h);
}

double sample_p(const FlowField& f, Vec2 p) {
    const Grid& g = f.grid;
    return bilinear(f.p, (p.x - g.origin.x) / g.h - 0.5, (p.y - g.origin.y) / g.h - 0.5);
}

Vec2 sample_velocity(const FlowField& f, Vec2 p) { return {sample_u(f, p), sample_v(f, p)}; }

Array2D vorticity(const FlowField& f) {
    const Grid& g = f.grid;
    int nx = g.nx, ny = g.ny;
    Array2D uc(nx, ny), vc(nx, ny), w(nx, ny);
    for (int j = 0; j < ny; j++)
        for (int i = 0; i < nx; i++) {
            uc(i, j) = 0.5 * (f.u(i, j) + f.u(i + 1, j));
            vc(i, j) = 0.5 * (f.v(i, j) + f.v(i, j + 1));
        }
    for (int j = 0; j < ny; j++)
        for (int i = 0; i < nx; i++) {
            int im = std::max(i - 1, 0), ip = std::min(i + 1, nx - 1);
            int jm = std::max(j - 1, 0), jp = std::min(j + 1, ny - 1);
            w(i, j) = (vc(ip, j) - vc(im, j)) / ((ip - im) * g.h) -
                      (uc(i, jp) - uc(i, jm)) / ((jp - jm) * g.h);
        }
    return w;
}

double max_divergence(const FlowField& f) {
    double m = 0.0;
    for (int j = 0; j < f.grid.ny; j++)
        for (int i = 0; i < f.grid.nx; i++) {
            double d = f.u(i + 1, j) - f.u(i, j) + f.v(i, j + 1) - f.v(i, j);
            m = std::max(m, std::fabs(d));
        }
    return m / f.grid.h;
}

std::vector<double> velocity_profile(const FlowField& f, double x, int n) {
    const Grid& g = f.grid;
    if (x < g.origin.x || x > g.origin.x + g.width())
        throw ConfigError(strfmt("velocity_profile: x=%g outside domain", x));
    std::vector<double> out(n);
    for (int k = 0; k < n; k++) {
        double y = g.origin.y + (k + 0.5) * g.height() / n;
        out[k] = sample_u(f, {x, y});
    }
    return out;
}

double FlowSolver::kernel_weight(double d_cells, double eps_cells) {
    if (d_cells >= eps_cells) return 1.0;
    if (d_cells <= -eps_cells) return 0.0;
    double r = d_cells / eps_cells;
    return 0.5 * (1.0 + r + std::sin(M_PI * r) / M_PI);
}

FlowSolver::FlowSolver(const Grid& grid, const SolverParams& params)
    : grid_(grid),
      params_(params),
      mu_u_(grid.nx + 1, grid.ny, 1.0),
      mu_v_(grid.nx, grid.ny + 1, 1.0),
      ub_u_(grid.nx + 1, grid.ny, 0.0),
      ub_v_(grid.nx, grid.ny + 1, 0.0),
      rhs_u_(grid.nx + 1, grid.ny, 0.0),
      rhs_v_(grid.nx, grid.ny + 1, 0.0),
      us_(grid.nx + 1, grid.ny, 0.0),
      vs_(grid.nx, grid.ny + 1, 0.0),
      u0_(grid.nx + 1, grid.ny, 0.0),
      v0_(grid.nx, grid.ny + 1, 0.0),
      div_(grid.nx, grid.ny, 0.0),
      psi_(grid.nx, grid.ny, 0.0),
      poisson_(std::make_unique<PoissonMG>(grid.nx, grid.ny)) {
    if (grid.nx < 8 || grid.ny < 8) throw ConfigError("FlowSolver: grid too small");
    if (!(grid.h > 0.0)) throw ConfigError("FlowSolver: cell size must be positive");
}

FlowSolver::~FlowSolver() = default;

double FlowSolver::compute_dt(const FlowField& f) const {
    double mu = f.u.max_abs(), mv = f.v.max_abs();
    if (!std::isfinite(mu) || !std::isfinite(mv))
        throw SolverError("compute_dt: non-finite velocity field");
    double speed = mu + mv;
    double conv = speed > 1e-12 ? grid_.h / speed : 1e30;
    double diff = grid_.h * grid_.h / (4.0 * params_.nu());
    return params_.cfl * std::min(conv, diff);
}

void FlowSolver::update_body_weights(const ImmersedBody& body) {
    mu_u_.fill(1.0);
    mu_v_.fill(1.0);
    ub_u_.fill(0.0);
    ub_v_.fill(0.0);
    const double eps = params_.kernel_width;
    if (!body.empty()) {
        Vec2 lo, hi;
        body.bounds(lo, hi);
        double m = (eps + 2.0) * grid_.h;
        int iu0 = std::max(0, int(std::floor((lo.x - m - grid_.origin.x) / grid_.h)));
        int iu1 = std::min(grid_.nx, int(std::ceil((hi.x + m - grid_.origin.x) / grid_.h)));
        int ju0 = std::max(0, int(std::floor((lo.y - m - grid_.origin.y) / grid_.h - 0.5)));
        int ju1 = std::min(grid_.ny - 1, int(std::ceil((hi.y + m - grid_.origin.y) / grid_.h)));
        for (int j = ju0; j <= ju1; j++)
            for (int i = iu0; i <= iu1; i++) {
                Vec2 pos = grid_.u_face(i, j);
                double d = body.signed_distance(pos) / grid_.h;
                if (d >= eps) continue;
                mu_u_(i, j) = kernel_weight(d, eps);
                ub_u_(i, j) = body.body_velocity(pos).x;
            }
        int iv0 = std::max(0, int(std::floor((lo.x - m - grid_.origin.x) / grid_.h - 0.5)));
        int iv1 = std::min(grid_.nx - 1, int(std::ceil((hi.x + m - grid_.origin.x) / grid_.h)));
        int jv0 = std::max(0, int(std::floor((lo.y - m - grid_.origin.y) / grid_.h)));
        int jv1 = std::min(grid_.ny, int(std::ceil((hi.y + m - grid_.origin.y) / grid_.h)));
        for (int j = jv0; j <= jv1; j++)
            for (int i = iv0; i <= iv1; i++) {
                Vec2 pos = grid_.v_face(i, j);
                double d = body.signed_distance(pos) / grid_.h;
                if (d >= eps) continue;
                mu_v_(i, j) = kernel_weight(d, eps);
                ub_v_(i, j) = body.body_velocity(pos).y;
            }
    }
    // domain-boundary normal faces are never corrected by the projection
    for (int j = 0; j < grid_.ny; j++) {
        mu_u_(0, j) = 0.0;
        mu_u_(grid_.nx, j) = 0.0;
    }
    for (int i = 0; i < grid_.nx; i++) {
        mu_v_(i, 0) = 0.0;
        mu_v_(i, grid_.ny) = 0.0;
    }
}

void FlowSolver::conv_diff(const Array2D& u, const Array2D& v, Array2D& ru, Array2D& rv) const {
    const int nx = grid_.nx, ny = grid_.ny;
    const double h = grid_.h, nu = params_.nu();

    // u-momentum on interior vertical faces
    for (int j = 0; j < ny; j++) {
        for (int i = 1; i < nx; i++) {
            double fx[2];
            for (int k = 0; k < 2; k++) {
                int ic = i - 1 + k;  // cell centre hosting the flux
                double uc = 0.5 * (u(ic, j) + u(ic + 1, j));
                double phi;
                if (uc >= 0.0)
                    phi = ic - 1 >= 0 ? quick(u(ic, j), u(ic + 1, j), u(ic - 1, j))
                                      : 0.5 * (u(ic, j) + u(ic + 1, j));
                else
                    phi = ic + 2 <= nx ? quick(u(ic + 1, j), u(ic, j), u(ic + 2, j))
                                       : 0.5 * (u(ic, j) + u(ic + 1, j));
                fx[k] = uc * phi;
            }
            double fy[2];
            for (int k = 0; k < 2; k++) {
                int jc = j + k;  // grid-node row hosting the flux
                if (jc == 0 || jc == ny) {
                    fy[k] = 0.0;  // wall-normal velocity vanishes exactly
                    continue;
                }
                double vc = 0.5 * (v(i - 1, jc) + v(i, jc));
                double phi;
                if (vc >= 0.0) {
                    double far = jc - 2 >= 0 ? u(i, jc - 2) : u(i, 0);
                    phi = quick(u(i, jc - 1), u(i, jc), far);
                } else {
                    double far = jc + 1 <= ny - 1 ? u(i, jc + 1) : u(i, ny - 1);
                    phi = quick(u(i, jc), u(i, jc - 1), far);
                }
                fy[k] = vc * phi;
            }
            double u_up = j + 1 <= ny - 1 ? u(i, j + 1) : u(i, j);
            double u_dn = j - 1 >= 0 ? u(i, j - 1) : u(i, j);
            double lap = (u(i + 1, j) - 2.0 * u(i, j) + u(i - 1, j) + u_up - 2.0 * u(i, j) +
                          u_dn) /
                         (h * h);
            ru(i, j) = -(fx[1] - fx[0] + fy[1] - fy[0]) / h + nu * lap;
        }
    }

    // v-momentum on interior horizontal faces
    for (int j = 1; j < ny; j++) {
        for (int i = 0; i < nx; i++) {
            double fy[2];
            for (int k = 0; k < 2; k++) {
                int jc = j - 1 + k;
                double vc = 0.5 * (v(i, jc) + v(i, jc + 1));
                double phi;
                if (vc >= 0.0)
                    phi = jc - 1 >= 0 ? quick(v(i, jc), v(i, jc + 1), v(i, jc - 1))
                                      : 0.5 * (v(i, jc) + v(i, jc + 1));
                else
                    phi = jc + 2 <= ny ? quick(v(i, jc + 1), v(i, jc), v(i, jc + 2))
                                       : 0.5 * (v(i, jc) + v(i, jc + 1));
                fy[k] = vc * phi;
            }
            double fx[2];
            for (int k = 0; k < 2; k++) {
                int ic = i + k;
                if (ic == 0) {
                    fx[k] = 0.0;  // inflow plane carries no transverse velocity
                    continue;
                }
                if (ic == nx) {
                    double uc = 0.5 * (u(nx, j - 1) + u(nx, j));
                    fx[k] = uc * v(nx - 1, j);  // zero-gradient outflow
                    continue;
                }
                double uc = 0.5 * (u(ic, j - 1) + u(ic, j));
                double phi;
                if (uc >= 0.0) {
                    double far = ic - 2 >= 0 ? v(ic - 2, j) : -v(0, j);
                    phi = quick(v(ic - 1, j), v(ic, j), far);
                } else {
                    double far = ic + 1 <= nx - 1 ? v(ic + 1, j) : v(nx - 1, j);
                    phi = quick(v(ic, j), v(ic - 1, j), far);
                }
                fx[k] = uc * phi;
            }
            double v_lf = i - 1 >= 0 ? v(i - 1, j) : -v(0, j);
            double v_rt = i + 1 <= nx - 1 ? v(i + 1, j) : v(nx - 1, j);
            double lap = (v_rt - 2.0 * v(i, j) + v_lf + v(i, j + 1) - 2.0 * v(i, j) +
                          v(i, j - 1)) /
                         (h * h);
            rv(i, j) = -(fy[1] - fy[0] + fx[1] - fx[0]) / h + nu * lap;
        }
    }
}

void FlowSolver::blend(Array2D& u, Array2D& v) const {
    for (int j = 0; j < grid_.ny; j++)
        for (int i = 1; i < grid_.nx; i++) {
            double m = mu_u_(i, j);
            if (m < 1.0) u(i, j) = m * u(i, j) + (1.0 - m) * ub_u_(i, j);
        }
    for (int j = 1; j < grid_.ny; j++)
        for (int i = 0; i < grid_.nx; i++) {
            double m = mu_v_(i, j);
            if (m < 1.0) v(i, j) = m * v(i, j) + (1.0 - m) * ub_v_(i, j);
        }
}

void FlowSolver::enforce_bc(Array2D& u, Array2D& v) const {
    for (int j = 0; j < grid_.ny; j++) u(0, j) = params_.U;
    for (int i = 0; i < grid_.nx; i++) {
        v(i, 0) = 0.0;
        v(i, grid_.ny) = 0.0;
    }
}

void FlowSolver::outlet_update(Array2D& u, double dt) const {
    const int nx = grid_.nx;
    double c = dt * params_.U / grid_.h;
    for (int j = 0; j < grid_.ny; j++)
        u(nx, j) -= c * (u(nx, j) - u(nx - 1, j));
}

void FlowSolver::mass_fix(Array2D& u) const {
    const int nx = grid_.nx, ny = grid_.ny;
    double in = 0.0, out = 0.0;
    for (int j = 0; j < ny; j++) {
        in += u(0, j);
        out += u(nx, j);
    }
    double corr = (in - out) / ny;
    for (int j = 0; j < ny; j++) u(nx, j) += corr;
}

void FlowSolver::project(Array2D& u, Array2D& v, Array2D& p_out, double stage_dt) {
    const int nx = grid_.nx, ny = grid_.ny;
    for (int j = 0; j < ny; j++)
        for (int i = 0; i < nx; i++)
            div_(i, j) = u(i + 1, j) - u(i, j) + v(i, j + 1) - v(i, j);

    int cap = std::max(1, params_.poisson_max_cycles / 100);
    last_cycles_ = poisson_->solve(psi_, div_, params_.poisson_tol * grid_.h, cap);

    for (int j = 0; j < ny; j++)
        for (int i = 1; i < nx; i++)
            u(i, j) -= mu_u_(i, j) * (psi_(i, j) - psi_(i - 1, j));
    for (int j = 1; j < ny; j++)
        for (int i = 0; i < nx; i++)
            v(i, j) -= mu_v_(i, j) * (psi_(i, j) - psi_(i, j - 1));

    double scale = params_.rho * grid_.h / stage_dt;
    for (int j = 0; j < ny; j++)
        for (int i = 0; i < nx; i++)
            p_out(i, j) = psi_(i, j) * scale;
}

void FlowSolver::step(FlowField& f, const ImmersedBody& body, double dt) {
    if (!(dt > 0.0)) throw ConfigError("step: dt must be positive");
    const int nx = grid_.nx, ny = grid_.ny;

    update_body_weights(body);
    poisson_->set_coefficients(mu_u_, mu_v_);

    outlet_update(f.u, dt);
    mass_fix(f.u);
    u0_ = f.u;
    v0_ = f.v;

    // predictor
    conv_diff(u0_, v0_, rhs_u_, rhs_v_);
    us_ = u0_;
    vs_ = v0_;
    for (int j = 0; j < ny; j++)
        for (int i = 1; i < nx; i++) us_(i, j) = u0_(i, j) + dt * rhs_u_(i, j);
    for (int j = 1; j < ny; j++)
        for (int i = 0; i < nx; i++) vs_(i, j) = v0_(i, j) + dt * rhs_v_(i, j);
    blend(us_, vs_);
    enforce_bc(us_, vs_);
    project(us_, vs_, f.p, dt);

    // corrector: average the predictor with a second increment from its state
    conv_diff(us_, vs_, rhs_u_, rhs_v_);
    for (int j = 0; j < ny; j++)
        for (int i = 1; i < nx; i++) f.u(i, j) = u0_(i, j) + dt * rhs_u_(i, j);
    for (int j = 1; j < ny; j++)
        for (int i = 0; i < nx; i++) f.v(i, j) = v0_(i, j) + dt * rhs_v_(i, j);
    blend(f.u, f.v);
    for (int j = 0; j < ny; j++)
        for (int i = 1; i < nx; i++) f.u(i, j) = 0.5 * (f.u(i, j) + us_(i, j));
    for (int j = 1; j < ny; j++)
        for (int i = 0; i < nx; i++) f.v(i, j) = 0.5 * (f.v(i, j) + vs_(i, j));
    enforce_bc(f.u, f.v);
    project(f.u, f.v, f.p, 0.5 * dt);

    // pin the gauge to a zero-mean inflow column
    double pm = 0.0;
    for (int j = 0; j < ny; j++) pm += f.p(0, j);
    pm /= ny;
    for (int j = 0; j < ny; j++)
        for (int i = 0; i < nx; i++) f.p(i, j) -= pm;

    f.t += dt;
}

LinkLoads surface_loads(const FlowField& f, const BodyOutline& outline, const BodyFrame& frame,
                        const SolverParams& sp, double link_length) {
    LinkLoads loads;
    const double off = (sp.kernel_width + 0.5) * f.grid.h;
    const double mu_visc = sp.rho * sp.nu();
    size_t n = outline.points.size();
    for (size_t k = 0; k < n; k++) {
        const SurfacePoint& a = outline.points[k];
        const SurfacePoint& b = outline.points[(k + 1) % n];
        Vec2 d = b.pos - a.pos;
        double len = d.norm();
        if (len < 1e-14) continue;
        Vec2 t{d.x / len, d.y / len};
        Vec2 nrm = t.perp();
        Vec2 mid = 0.5 * (a.pos + b.pos);
        double s_mid = 0.5 * (a.s + b.s);
        int link = std::clamp(int(s_mid / link_length), 0, 2);

        Vec2 sample_at = mid + off * nrm;
        double ps = sample_p(f, sample_at);
        Vec2 vf = sample_velocity(f, sample_at);
        Vec2 vb = link_point_velocity(frame, link, mid);
        double ut = (vf - vb).dot(t);
        double tau = mu_visc * ut / off;

        // force exerted by the fluid on the panel, then reversed onto the fluid
        Vec2 df_fluid = (-ps) * nrm + tau * t;
        Vec2 df = -len * df_fluid;
        loads.F[link] += df;
        loads.M[link] += (mid - frame.links[link].ref_pos).cross(df);
        loads.F_total += df;
    }
    return loads;
}

std::vector<double> probe_pressures(const FlowField& f, const BodyOutline& outline,
                                    int probe_count, const SolverParams& sp) {
    if (probe_count != 13) throw ConfigError("probe_pressures: the probe array has 13 sensors");
    const double off = (sp.kernel_width + 0.5) * f.grid.h;
    std::vector<double> out(probe_count, 0.0);
    size_t n = outline.points.size();
    for (int k = 0; k < probe_count; k++) {
        double target = (double(k) / probe_count) * outline.perimeter;
        double acc = 0.0;
        Vec2 pos = outline.points[0].pos, nrm{0.0, 1.0};
        for (size_t i = 0; i < n; i++) {
            Vec2 a = outline.points[i].pos, b = outline.points[(i + 1) % n].pos;
            Vec2 d = b - a;
            double len = d.norm();
            if (acc + len >= target || i + 1 == n) {
                double u = len > 0.0 ? (target - acc) / len : 0.0;
                pos = a + u * d;
                if (len > 0.0) nrm = Vec2{d.x / len, d.y / len}.perp();
                break;
            }
            acc += len;
        }
        out[k] = sample_p(f, pos + off * nrm);
    }
    return out;
}

}  // namespace finswim
