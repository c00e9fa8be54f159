#include "finswim/fish.hpp"

#include <algorithm>
#include <cmath>

namespace finswim {

/** Symmetric NACA four-digit thickness polynomial (unit chord, unit scale). */
double naca00_thickness(double x) {
    double sx = std::sqrt(std::max(x, 0.0));
    return 0.2969 * sx - 0.1260 * x - 0.3516 * x * x + 0.2843 * x * x * x -
           0.1015 * x * x * x * x;
}

namespace {

Vec2 unit_dir(double theta) { return {std::cos(theta), std::sin(theta)}; }

/** Proper segment intersection test (shared endpoints do not count). */
bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    auto orient = [](Vec2 p, Vec2 q, Vec2 r) {
        double v = (q - p).cross(r - p);
        if (v > 1e-14) return 1;
        if (v < -1e-14) return -1;
        return 0;
    };
    int o1 = orient(a, b, c), o2 = orient(a, b, d);
    int o3 = orient(c, d, a), o4 = orient(c, d, b);
    return o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

}  // namespace

double FishGeometry::half_width_at(double s) const {
    const double L = link_length;
    s = std::clamp(s, 0.0, 3.0 * L);
    if (s < nose_length) {
        double u = s / nose_length;
        return half_width * std::sqrt(std::max(0.0, u * (2.0 - u)));
    }
    if (s <= 2.0 * L) return half_width;
    double xi = (s - 2.0 * L) / L;
    return half_width * naca00_thickness(0.3 + 0.7 * xi) / naca00_thickness(0.3);
}

ActionVector apply_action(FishState& state, const ActionVector& action, double dt) {
    if (!(dt > 0.0)) throw ConfigError("apply_action: dt must be positive");
    ActionVector c{};
    for (int i = 0; i < 4; i++) c[i] = std::clamp(action[i], -kActionBound, kActionBound);
    for (int i = 0; i < 3; i++) {
        state.theta[i] += c[i];
        state.omega[i] = c[i] / dt;
    }
    state.y += c[3];
    state.ydot = c[3] / dt;
    return c;
}

FishFrame fish_frame(const FishState& state, const FishGeometry& geom, double ref_x) {
    const double L = geom.link_length;
    FishFrame f;
    f.joint0 = {ref_x, state.y};
    f.nose = f.joint0 - L * unit_dir(state.theta[0]);
    f.joint1 = f.joint0 + L * unit_dir(state.theta[1]);
    f.tail_tip = f.joint1 + L * unit_dir(state.theta[2]);
    return f;
}

BodyFrame body_frame(const FishState& state, const FishGeometry& geom, double ref_x) {
    FishFrame fr = fish_frame(state, geom, ref_x);
    Vec2 v0{0.0, state.ydot};
    BodyFrame b;
    b.links[0] = {fr.joint0, v0, state.omega[0]};
    b.links[1] = {fr.joint0, v0, state.omega[1]};
    // joint 1 rides on the trunk, so its velocity includes the trunk rotation
    Vec2 v1 = v0 + state.omega[1] * (fr.joint1 - fr.joint0).perp();
    b.links[2] = {fr.joint1, v1, state.omega[2]};
    return b;
}

Vec2 link_point_velocity(const BodyFrame& frame, int link, Vec2 p) {
    const LinkRef& r = frame.links[link];
    return r.ref_vel + r.omega * (p - r.ref_pos).perp();
}

Vec2 BodyOutline::at_fraction(double f) const {
    f -= std::floor(f);
    double target = f * perimeter;
    double acc = 0.0;
    size_t n = points.size();
    for (size_t i = 0; i < n; i++) {
        Vec2 a = points[i].pos, b = points[(i + 1) % n].pos;
        double len = (b - a).norm();
        if (acc + len >= target || i + 1 == n) {
            double u = len > 0.0 ? (target - acc) / len : 0.0;
            return a + u * (b - a);
        }
        acc += len;
    }
    return points.empty() ? Vec2{} : points[0].pos;
}

BodyOutline build_outline(const FishState& state, const FishGeometry& geom, double ref_x,
                          double ds) {
    const double L = geom.link_length;
    if (!(ds > 0.0)) throw ConfigError("build_outline: ds must be positive");
    FishFrame fr = fish_frame(state, geom, ref_x);
    std::array<Vec2, 3> start{fr.nose, fr.joint0, fr.joint1};
    std::array<Vec2, 3> dir{unit_dir(state.theta[0]), unit_dir(state.theta[1]),
                            unit_dir(state.theta[2])};
    std::array<Vec2, 3> nrm{dir[0].perp(), dir[1].perp(), dir[2].perp()};

    int per_link = std::max(4, int(std::lround(L / ds)));

    // midline stations with the normal to offset by: joints use the bisector
    struct Station {
        Vec2 pos, n;
        double s;
        int link;
    };
    std::vector<Station> st;
    st.reserve(3 * per_link + 1);
    for (int k = 0; k < 3; k++) {
        int j0 = (k == 0) ? 0 : 1;  // joint stations emitted once
        for (int j = j0; j <= per_link; j++) {
            double xi = L * double(j) / per_link;
            Vec2 pos = start[k] + xi * dir[k];
            Vec2 n = nrm[k];
            if (j == 0 && k > 0) {
                Vec2 bis = nrm[k - 1] + nrm[k];
                double bn = bis.norm();
                n = bn > 1e-12 ? (1.0 / bn) * bis : nrm[k];
            }
            st.push_back({pos, n, k * L + xi, (j == 0 && k > 0) ? k - 1 : k});
        }
    }

    BodyOutline out;
    out.points.reserve(2 * st.size() + 2);
    // top side, nose to tail
    out.points.push_back({fr.nose, 0.0, 0});
    for (size_t i = 1; i < st.size(); i++) {
        double w = geom.half_width_at(st[i].s);
        out.points.push_back({st[i].pos + w * st[i].n, st[i].s, st[i].link});
    }
    // blunt trailing-edge cap
    double w_te = geom.half_width_at(3.0 * L);
    out.points.push_back({fr.tail_tip + w_te * dir[2], 3.0 * L, 2});
    // bottom side, tail back to nose (the wrap panel closes at the nose)
    for (size_t i = st.size() - 1; i >= 1; i--) {
        double w = geom.half_width_at(st[i].s);
        out.points.push_back({st[i].pos - w * st[i].n, st[i].s, st[i].link});
    }

    size_t n = out.points.size();
    for (size_t i = 0; i < n; i++)
        out.perimeter += (out.points[(i + 1) % n].pos - out.points[i].pos).norm();

    // self-intersection scan over non-adjacent panel pairs
    for (size_t i = 0; i + 2 < n && out.simple; i++) {
        Vec2 a = out.points[i].pos, b = out.points[i + 1].pos;
        double xlo = std::min(a.x, b.x), xhi = std::max(a.x, b.x);
        for (size_t j = i + 2; j < n; j++) {
            if (i == 0 && j + 1 == n) continue;  // wrap panel adjacent to panel 0
            Vec2 c = out.points[j].pos, d = out.points[(j + 1) % n].pos;
            if (std::max(c.x, d.x) < xlo || std::min(c.x, d.x) > xhi) continue;
            if (segments_cross(a, b, c, d)) {
                out.simple = false;
                break;
            }
        }
    }
    return out;
}

BodyOutline body_surface(const FishState& state, const FishGeometry& geom, double ref_x,
                         double ds) {
    BodyOutline out = build_outline(state, geom, ref_x, ds);
    if (!out.simple) throw GeometryError("body outline self-intersects");
    return out;
}

std::vector<Vec2> probe_positions(const BodyOutline& outline, int probe_count) {
    if (probe_count != 13) throw ConfigError("probe_positions: the probe array has 13 sensors");
    std::vector<Vec2> probes;
    probes.reserve(probe_count);
    for (int k = 0; k < probe_count; k++)
        probes.push_back(outline.at_fraction(double(k) / probe_count));
    return probes;
}

FishBody::FishBody(const FishState& state, const FishGeometry& geom, double ref_x)
    : geom_(geom), frame_(body_frame(state, geom, ref_x)) {
    FishFrame fr = fish_frame(state, geom, ref_x);
    start_ = {fr.nose, fr.joint0, fr.joint1};
    dir_ = {unit_dir(state.theta[0]), unit_dir(state.theta[1]), unit_dir(state.theta[2])};
}

double FishBody::link_distance(int k, Vec2 p) const {
    const double L = geom_.link_length;
    Vec2 d = p - start_[k];
    double xl = d.dot(dir_[k]);
    double yl = dir_[k].cross(d);
    double xcl = std::clamp(xl, 0.0, L);
    double w = geom_.half_width_at(k * L + xcl);
    double ay = std::fabs(yl);
    if (xl >= 0.0 && xl <= L) return ay - w;
    double dx = (xl < 0.0) ? -xl : xl - L;
    double dy = std::max(ay - w, 0.0);
    return std::sqrt(dx * dx + dy * dy);
}

double FishBody::signed_distance(Vec2 p) const {
    double d = link_distance(0, p);
    d = std::min(d, link_distance(1, p));
    d = std::min(d, link_distance(2, p));
    return d;
}

Vec2 FishBody::body_velocity(Vec2 p) const {
    int best = 0;
    double bd = link_distance(0, p);
    for (int k = 1; k < 3; k++) {
        double dk = link_distance(k, p);
        if (dk < bd) {
            bd = dk;
            best = k;
        }
    }
    return link_point_velocity(frame_, best, p);
}

void FishBody::bounds(Vec2& lo, Vec2& hi) const {
    const double L = geom_.link_length;
    lo = {1e30, 1e30};
    hi = {-1e30, -1e30};
    for (int k = 0; k < 3; k++) {
        for (double xi : {0.0, L}) {
            Vec2 p = start_[k] + xi * dir_[k];
            lo.x = std::min(lo.x, p.x);
            lo.y = std::min(lo.y, p.y);
            hi.x = std::max(hi.x, p.x);
            hi.y = std::max(hi.y, p.y);
        }
    }
    double pad = geom_.half_width + 0.1 * L;
    lo = lo - Vec2{pad, pad};
    hi = hi + Vec2{pad, pad};
}

double link_power(const LinkLoads& loads, const BodyFrame& frame) {
    double p = 0.0;
    for (int i = 0; i < 3; i++)
        p += loads.F[i].dot(frame.links[i].ref_vel) + loads.M[i] * frame.links[i].omega;
    return p;
}

EnergyStep energy_decomposition(const LinkLoads& loads, const BodyFrame& frame, double dt) {
    EnergyStep e;
    for (int i = 0; i < 3; i++) {
        const LinkRef& r = frame.links[i];
        e.dW_x[i] = -loads.F[i].x * r.ref_vel.x * dt;
        e.dW_y[i] = -loads.F[i].y * r.ref_vel.y * dt;
        e.dW_M[i] = -loads.M[i] * r.omega * dt;
    }
    return e;
}

}  // namespace finswim
