#ifndef FINSWIM_FOIL_HPP
#define FINSWIM_FOIL_HPP

#include "finswim/body.hpp"
#include "finswim/common.hpp"

namespace finswim {

/**
 * Symmetric four-digit airfoil pitching sinusoidally about its leading edge.
 * The pitch angle is theta(t) = amp * sin(2 pi freq t), so the motion starts
 * from the neutral position with maximum angular rate.
 */
class PitchingFoil : public ImmersedBody {
  public:
    PitchingFoil(double chord, double thickness_ratio, double freq, double amp_rad,
                 Vec2 leading_edge);

    /** Half-thickness of the section at chordwise position x in [0, chord]. */
    double half_thickness(double x) const;

    /** Move the foil to time t (pitch angle and angular rate). */
    void set_time(double t);

    double pitch_angle() const { return theta_; }
    double pitch_rate() const { return omega_; }
    double chord() const { return chord_; }

    double signed_distance(Vec2 p) const override;
    Vec2 body_velocity(Vec2 p) const override;
    void bounds(Vec2& lo, Vec2& hi) const override;
    bool empty() const override { return false; }

    /** Closed surface polyline (top from LE to TE, then bottom back), in world
     *  coordinates at the current pitch angle. */
    std::vector<Vec2> surface_polyline(int n_per_side) const;

    /** Velocity of the surface point p under the current pitch rate. */
    Vec2 surface_velocity(Vec2 p) const { return body_velocity(p); }

  private:
    double chord_, thickness_;
    double freq_, amp_;
    Vec2 le_;
    double theta_ = 0.0, omega_ = 0.0;
    double ct_ = 1.0, st_ = 0.0;  // cos/sin of the current pitch angle
};

/** Thrust/lateral force and actuator power exerted by the foil on the fluid,
 *  integrated over the surface polyline. */
struct FoilLoads {
    Vec2 F;      ///< force on the fluid
    double P;    ///< rate of work done by the foil on the fluid
};

struct FlowField;
struct SolverParams;
FoilLoads foil_loads(const FlowField& f, const PitchingFoil& foil, const SolverParams& sp,
                     int n_per_side = 200);

}  // namespace finswim

#endif
