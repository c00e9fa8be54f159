#ifndef FINSWIM_BODY_HPP
#define FINSWIM_BODY_HPP

#include "finswim/common.hpp"

namespace finswim {

/**
 * Immersed solid seen by the flow solver: a signed distance field (negative
 * inside), the local rigid-motion velocity, and loose bounds used to limit
 * kernel-weight updates to a narrow band around the body.
 */
class ImmersedBody {
  public:
    virtual ~ImmersedBody() = default;
    virtual double signed_distance(Vec2 p) const = 0;
    virtual Vec2 body_velocity(Vec2 p) const = 0;
    /** Axis-aligned box guaranteed to contain the solid. */
    virtual void bounds(Vec2& lo, Vec2& hi) const = 0;
    virtual bool empty() const { return false; }
};

/** Body-free domain: plain channel flow. */
class NoBody : public ImmersedBody {
  public:
    double signed_distance(Vec2) const override { return 1e30; }
    Vec2 body_velocity(Vec2) const override { return {0.0, 0.0}; }
    void bounds(Vec2& lo, Vec2& hi) const override {
        lo = {1e30, 1e30};
        hi = {-1e30, -1e30};
    }
    bool empty() const override { return true; }
};

}  // namespace finswim

#endif
