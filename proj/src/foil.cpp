#include "finswim/foil.hpp"

#include <algorithm>
#include <cmath>

#include "finswim/fish.hpp"
#include "finswim/flow.hpp"

namespace finswim {

PitchingFoil::PitchingFoil(double chord, double thickness_ratio, double freq, double amp_rad,
                           Vec2 leading_edge)
    : chord_(chord), thickness_(thickness_ratio * chord), freq_(freq), amp_(amp_rad),
      le_(leading_edge) {
    if (!(chord > 0.0) || !(thickness_ratio > 0.0))
        throw ConfigError("PitchingFoil: chord and thickness must be positive");
}

double PitchingFoil::half_thickness(double x) const {
    double xb = std::clamp(x / chord_, 0.0, 1.0);
    // 5 t poly(x) peaks at t/2 near the 30% chord station
    return 5.0 * thickness_ * naca00_thickness(xb);
}

void PitchingFoil::set_time(double t) {
    double w = 2.0 * M_PI * freq_;
    theta_ = amp_ * std::sin(w * t);
    omega_ = amp_ * w * std::cos(w * t);
    ct_ = std::cos(theta_);
    st_ = std::sin(theta_);
}

double PitchingFoil::signed_distance(Vec2 p) const {
    // into the foil frame (x along chord from the leading edge)
    Vec2 r = p - le_;
    double qx = ct_ * r.x + st_ * r.y;
    double qy = -st_ * r.x + ct_ * r.y;
    double ay = std::fabs(qy);
    if (qx < 0.0) return std::hypot(qx, ay);
    if (qx > chord_) return std::hypot(qx - chord_, std::max(0.0, ay - half_thickness(chord_)));
    return ay - half_thickness(qx);
}

Vec2 PitchingFoil::body_velocity(Vec2 p) const { return omega_ * (p - le_).perp(); }

void PitchingFoil::bounds(Vec2& lo, Vec2& hi) const {
    lo = hi = le_;
    double hmax = 0.5 * thickness_;
    Vec2 ex{ct_, st_}, ey{-st_, ct_};
    for (double cx : {0.0, chord_})
        for (double cy : {-hmax, hmax}) {
            Vec2 q = le_ + cx * ex + cy * ey;
            lo.x = std::min(lo.x, q.x);
            lo.y = std::min(lo.y, q.y);
            hi.x = std::max(hi.x, q.x);
            hi.y = std::max(hi.y, q.y);
        }
}

std::vector<Vec2> PitchingFoil::surface_polyline(int n_per_side) const {
    std::vector<Vec2> pts;
    pts.reserve(2 * n_per_side);
    Vec2 ex{ct_, st_}, ey{-st_, ct_};
    // cosine clustering toward the leading and trailing edges
    for (int k = 0; k < n_per_side; k++) {
        double x = 0.5 * chord_ * (1.0 - std::cos(M_PI * k / n_per_side));
        pts.push_back(le_ + x * ex + half_thickness(x) * ey);
    }
    for (int k = n_per_side; k > 0; k--) {
        double x = 0.5 * chord_ * (1.0 - std::cos(M_PI * k / n_per_side));
        pts.push_back(le_ + x * ex - half_thickness(x) * ey);
    }
    return pts;
}

FoilLoads foil_loads(const FlowField& f, const PitchingFoil& foil, const SolverParams& sp,
                     int n_per_side) {
    const double off = (sp.kernel_width + 0.5) * f.grid.h;
    const double mu_visc = sp.rho * sp.nu();
    std::vector<Vec2> pts = foil.surface_polyline(n_per_side);
    FoilLoads loads{};
    size_t n = pts.size();
    for (size_t k = 0; k < n; k++) {
        Vec2 a = pts[k], b = pts[(k + 1) % n];
        Vec2 d = b - a;
        double len = d.norm();
        if (len < 1e-14) continue;
        Vec2 t{d.x / len, d.y / len};
        Vec2 nrm = t.perp();  // outward for this clockwise traversal
        Vec2 mid = 0.5 * (a + b);

        Vec2 sample_at = mid + off * nrm;
        double ps = sample_p(f, sample_at);
        Vec2 vf = sample_velocity(f, sample_at);
        Vec2 vb = foil.surface_velocity(mid);
        double tau = mu_visc * (vf - vb).dot(t) / off;

        Vec2 df = -len * ((-ps) * nrm + tau * t);  // reaction onto the fluid
        loads.F += df;
        loads.P += df.dot(vb);
    }
    return loads;
}

}  // namespace finswim
