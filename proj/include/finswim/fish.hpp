#ifndef FINSWIM_FISH_HPP
#define FINSWIM_FISH_HPP

#include <array>

#include "finswim/body.hpp"
#include "finswim/common.hpp"

namespace finswim {

/** Per-step increment bound for every articulation channel (radians / lengths). */
constexpr double kActionBound = 0.03;

/** One action: increments for the three link angles plus the vertical offset. */
using ActionVector = std::array<double, 4>;

/**
 * Three-link body plan: head, trunk and tail links of equal length joined by
 * two hinges. The hull is a tapered strip of maximum width 0.12 L — an
 * elliptic nose fairing, a parallel mid-section, and the rear portion of a
 * NACA0012 thickness profile (from its maximum-thickness station to the
 * trailing edge) rescaled onto the tail link.
 */

/** Symmetric NACA four-digit thickness polynomial (unit chord, unit scale). */
double naca00_thickness(double x);

struct FishGeometry {
    double link_length = 1.0;   ///< L, the unit of length
    double half_width = 0.06;   ///< half of the 0.12 L maximum width
    double nose_length = 0.3;   ///< extent of the elliptic nose fairing
    int probe_count = 13;       ///< surface pressure sensors

    double total_length() const { return 3.0 * link_length; }

    /** Hull half-width at midline arc position s in [0, 3L]. */
    double half_width_at(double s) const;
};

/**
 * Articulation state. Angles are absolute with respect to the horizontal;
 * the horizontal position of joint 0 (hinge between head and trunk) is held
 * fixed while its height y may translate. Rates are per-step increments
 * divided by the step size.
 */
struct FishState {
    std::array<double, 3> theta{0.0, 0.0, 0.0};
    double y = 0.0;
    std::array<double, 3> omega{0.0, 0.0, 0.0};
    double ydot = 0.0;
};

/**
 * Clamp the action to the per-channel bound, add the increments to the
 * corresponding degrees of freedom, and set the rates to increment / dt.
 * Returns the clamped action actually applied.
 */
ActionVector apply_action(FishState& state, const ActionVector& action, double dt);

/** Hinge and end-point positions for a given state (x of joint 0 = ref_x). */
struct FishFrame {
    Vec2 nose, joint0, joint1, tail_tip;
};
FishFrame fish_frame(const FishState& state, const FishGeometry& geom, double ref_x);

/** Rigid-motion data for one link: a reference point on it, that point's
 *  velocity, and the angular rate about it. */
struct LinkRef {
    Vec2 ref_pos;
    Vec2 ref_vel;
    double omega = 0.0;
};

/** Per-link rigid data: head and trunk pivot on joint 0, tail on joint 1. */
struct BodyFrame {
    std::array<LinkRef, 3> links;
};
BodyFrame body_frame(const FishState& state, const FishGeometry& geom, double ref_x);

/** One vertex of the closed hull outline. */
struct SurfacePoint {
    Vec2 pos;
    double s = 0.0;  ///< midline arc position in [0, 3L] (caps clamp to the ends)
    int link = 0;    ///< owning link, 0..2
};

/**
 * Closed hull outline, traversed nose -> top side -> tail tip -> bottom side.
 * Panels connect consecutive points (wrapping at the end). `simple` is false
 * when the polygon self-intersects, which invalidates the geometry.
 */
struct BodyOutline {
    std::vector<SurfacePoint> points;
    bool simple = true;
    double perimeter = 0.0;
    /** Position at a clockwise arc-length fraction in [0,1) from the nose. */
    Vec2 at_fraction(double f) const;
};

/**
 * Sample the hull outline with target spacing ds. Joint cross-sections fall
 * exactly on sample points; the outline is closed and tagged per link.
 */
BodyOutline build_outline(const FishState& state, const FishGeometry& geom, double ref_x,
                          double ds);

/** build_outline that throws GeometryError when the outline self-intersects. */
BodyOutline body_surface(const FishState& state, const FishGeometry& geom, double ref_x,
                         double ds);

/** Velocity of the surface/material point p belonging to the given link. */
Vec2 link_point_velocity(const BodyFrame& frame, int link, Vec2 p);

/** Positions of the pressure probes: fixed arc-length fractions k/probe_count
 *  of the closed outline, starting at the nose. */
std::vector<Vec2> probe_positions(const BodyOutline& outline, int probe_count);

/** Signed-distance / velocity view of the articulated fish for the solver. */
class FishBody : public ImmersedBody {
  public:
    FishBody(const FishState& state, const FishGeometry& geom, double ref_x);

    double signed_distance(Vec2 p) const override;
    Vec2 body_velocity(Vec2 p) const override;
    void bounds(Vec2& lo, Vec2& hi) const override;

  private:
    FishGeometry geom_;
    BodyFrame frame_;
    std::array<Vec2, 3> start_;  ///< link start points: nose, joint0, joint1
    std::array<Vec2, 3> dir_;    ///< unit direction of each link
    /** Distance of p to link k's profile slab (approximate but sign-exact). */
    double link_distance(int k, Vec2 p) const;
};

/** Integrated loads exerted by the body on the fluid. */
struct LinkLoads {
    std::array<Vec2, 3> F{};     ///< per-link force
    std::array<double, 3> M{};   ///< per-link torque about that link's pivot
    Vec2 F_total{};              ///< sum over links
};

/**
 * Actuation power: sum over links of F · v_ref + M · omega, the rate of work
 * done by the body on the fluid (positive when the actuators spend energy).
 */
double link_power(const LinkLoads& loads, const BodyFrame& frame);

/**
 * Step energy transfer seen from the fluid side: dW > 0 means the fluid put
 * energy into the link over the step. Same integrand as link_power with the
 * opposite sign, split per link into x-translation, y-translation and moment
 * channels, so sum(dW_x + dW_y + dW_M) = -link_power * dt.
 */
struct EnergyStep {
    std::array<double, 3> dW_x{}, dW_y{}, dW_M{};
};
EnergyStep energy_decomposition(const LinkLoads& loads, const BodyFrame& frame, double dt);

/** One row of a rollout trace. */
struct TrajectorySample {
    double t = 0.0, dt = 0.0;
    std::array<double, 3> theta{}, omega{};
    double y = 0.0;
    ActionVector action{};
    double Fx = 0.0, Fy = 0.0;   ///< total body-on-fluid force
    std::array<double, 3> M{};
    double P = 0.0;              ///< actuation power
};

}  // namespace finswim

#endif
