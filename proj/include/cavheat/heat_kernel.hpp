#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "quadrature.hpp"
#include "special_functions.hpp"
#include "vec3.hpp"

namespace cavheat {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kFourPi = 4.0 * std::numbers::pi;

/// A point of the space-time cylinder R^3 x (0, T).
struct SpaceTimePoint {
    Vec3 x;
    double t = 0.0;
};

/// Free-space heat kernel in radial form: Phi(r; s) with s = t - tau.
/// Returns 0 for s <= 0 (causality) and when the exponent underflows.
inline double eval_phi_radial(double r, double s) {
    if (s <= 0.0) return 0.0;
    const double q = r * r / (4.0 * s);
    if (q > 700.0) return 0.0;
    const double c = kFourPi * s;
    return std::exp(-q) / (c * std::sqrt(c));
}

/// Heat fundamental solution Phi(x, t; y, tau).
inline double eval_phi(const Vec3& x, double t, const Vec3& y, double tau) {
    return eval_phi_radial(distance(x, y), t - tau);
}

/// Spatial gradient grad_x Phi = -(x - y) / (2 (t - tau)) * Phi.
inline Vec3 eval_grad_phi(const Vec3& x, double t, const Vec3& y, double tau) {
    const double s = t - tau;
    if (s <= 0.0) return {};
    const double phi = eval_phi(x, t, y, tau);
    if (phi == 0.0) return {};
    return (y - x) * (phi / (2.0 * s));
}

/// Integral of Phi(r; t - tau) over tau in a trailing window of length s,
/// i.e. over tau in (t - s, t):
///
///   int Phi(r; t - tau) dtau = erfc(r / (2 sqrt(s))) / (4 pi r).
///
/// This is the cumulative kernel all product-integration weights are built
/// from; as s -> infinity it tends to the Laplace Green function 1/(4 pi r).
inline double time_integral_phi_window(double r, double s) {
    if (s <= 0.0) return 0.0;
    return special::erfc(r / (2.0 * std::sqrt(s))) / (kFourPi * r);
}

/// Exact value of int_{t0}^{t1} Phi(r; t - tau) dtau for 0 <= t0 <= t1.
/// The closed form comes from substituting delta = r / (2 sqrt(t - tau)).
/// Intervals extending past t contribute nothing (the kernel vanishes there).
inline double time_integral_phi(double r, double t0, double t1, double t) {
    if (!(r > 0.0)) throw std::invalid_argument("degenerate distance");
    if (t1 < t0) throw std::invalid_argument("inverted interval");
    return time_integral_phi_window(r, t - t0) - time_integral_phi_window(r, t - t1);
}

/// Heat mass inside a ball of radius R after diffusion time s, for a unit
/// point source at the center: int_{|z|<R} Phi(|z|; s) dz.
inline double heat_mass_in_ball(double radius, double s) {
    if (s <= 0.0) return 1.0;
    const double u = radius / (2.0 * std::sqrt(s));
    return special::erf(u) - (2.0 / std::sqrt(kPi)) * u * std::exp(-u * u);
}

/// int_{s0}^{s1} of heat_mass_in_ball(R, s) ds: the space-time weight of a
/// volume cell (as its volume-equivalent ball) against its own center over
/// one time step.  Smooth integrand; adaptive quadrature to ~1e-12.
inline double ball_self_weight(double radius, double s0, double s1) {
    if (s1 <= s0) return 0.0;
    const double scale = (s1 - s0);
    return adaptive_simpson([radius](double s) { return heat_mass_in_ball(radius, s); },
                            s0, s1, 1e-13 * (scale + 1.0), 40);
}

/// int_0^R erfc(rho / (2 sqrt(s))) drho, closed form.  Building block for
/// the disk-averaged self weight of surface panels.
inline double erfc_radial_integral(double radius, double s) {
    if (s <= 0.0) return 0.0;
    const double c = radius / (2.0 * std::sqrt(s));
    double expt = (c * c > 700.0) ? 0.0 : std::exp(-c * c);
    return radius * special::erfc(c) +
           (2.0 * std::sqrt(s) / std::sqrt(kPi)) * (1.0 - expt);
}

}  // namespace cavheat
