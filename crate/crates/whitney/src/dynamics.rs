//! Rod dynamics in the platform frame.
//!
//! The angle `alpha` is measured from the forward floor direction,
//! counterclockwise: `alpha in (0, pi)` is above the floor and
//! `alpha = pi/2` is upright. Falling forward means `alpha -> 0`,
//! falling backward means `alpha -> pi`. In free rotation `alpha` lives
//! on the whole real line (no modular reduction), so a rod may pass
//! below the floor and revolve.
//!
//! With platform acceleration `f''(t)`, the free field is
//!
//! ```text
//! d(alpha)/dt = omega
//! d(omega)/dt = (-g cos(alpha) + f''(t) sin(alpha)) / L_eff
//! ```
//!
//! where `L_eff = L` for a point mass at the tip and `L_eff = 2L/3` for
//! a uniform rod (torque/inertia about the pivot reduce both cases to
//! the same equation). The right side is evaluated in the shifted angle
//! `psi = alpha - pi/2`, using `-cos(alpha) = sin(psi)` and
//! `sin(alpha) = cos(psi)`, so the upright rest state is an exact fixed
//! point in floating point and the field is exactly equivariant under
//! the mirror map `(alpha, omega) -> (pi - alpha, -omega)` on a resting
//! platform.

use crate::profile::{smoothstep5, MotionProfile};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use thiserror::Error;

/// Mass distribution of the rod; fixes the effective length in the
/// angular equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RodModel {
    /// All mass at the tip: `L_eff = L`.
    PointMass,
    /// Uniform mass density: `L_eff = 2L/3`.
    UniformRod,
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("rod parameter `{name}` must be positive and finite, got {value}")]
    BadParam { name: &'static str, value: f64 },
    #[error("stick band delta must satisfy 0 < delta < pi/4, got {0}")]
    BadStickBand(f64),
    #[error("stick damping must be finite and >= 0, got {0}")]
    BadStickDamping(f64),
}

/// Gravity, rod geometry and the derived ratio `k = g / L_eff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RodParams {
    pub g: f64,
    pub length: f64,
    pub rod_model: RodModel,
}

impl RodParams {
    pub const DEFAULT_G: f64 = 9.81;

    pub fn new(g: f64, length: f64, rod_model: RodModel) -> Result<Self, DynamicsError> {
        if !(g.is_finite() && g > 0.0) {
            return Err(DynamicsError::BadParam {
                name: "g",
                value: g,
            });
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(DynamicsError::BadParam {
                name: "length",
                value: length,
            });
        }
        Ok(Self {
            g,
            length,
            rod_model,
        })
    }

    /// Point mass, `g = 9.81`, `L = 1` (so `L_eff = 1`).
    pub fn default_unit() -> Self {
        Self {
            g: Self::DEFAULT_G,
            length: 1.0,
            rod_model: RodModel::PointMass,
        }
    }

    #[inline]
    pub fn l_eff(&self) -> f64 {
        match self.rod_model {
            RodModel::PointMass => self.length,
            RodModel::UniformRod => 2.0 * self.length / 3.0,
        }
    }

    /// `k = g / L_eff`, the square of the linearized growth rate at the
    /// upright equilibrium.
    #[inline]
    pub fn k(&self) -> f64 {
        self.g / self.l_eff()
    }

    /// Linearized instability rate `sqrt(g / L_eff)` of the upright state.
    #[inline]
    pub fn lambda(&self) -> f64 {
        self.k().sqrt()
    }
}

/// Instantaneous rod state. `alpha` is unwrapped (free rotation keeps
/// counting turns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub alpha: f64,
    pub omega: f64,
}

impl State {
    pub fn new(t: f64, alpha: f64, omega: f64) -> Self {
        Self { t, alpha, omega }
    }

    /// Initial condition at rest, the problem's canonical start.
    pub fn at_rest(alpha: f64) -> Self {
        Self {
            t: 0.0,
            alpha,
            omega: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.alpha.is_finite() && self.omega.is_finite()
    }
}

/// Boundary regime at the floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Floor removed; the rod rotates freely on the whole circle.
    Free,
    /// Touching the floor sticks: the trajectory terminates at the first
    /// crossing (handled by the integrator's event logic; the vector
    /// field itself is the free one).
    Absorbing,
    /// Smooth surrogate for sticking: the inertial coupling fades to zero
    /// in a band of width `delta` at the floor and below it, and angular
    /// damping switches on there, so the rod settles under the floor
    /// without completing a revolution while the field stays C².
    SmoothStick { delta: f64, damping: f64 },
}

impl Mode {
    pub const DEFAULT_STICK_DELTA: f64 = 0.05;
    pub const DEFAULT_STICK_DAMPING: f64 = 5.0;

    pub fn smooth_stick(delta: f64, damping: f64) -> Result<Self, DynamicsError> {
        if !(delta.is_finite() && delta > 0.0 && delta < FRAC_PI_4) {
            return Err(DynamicsError::BadStickBand(delta));
        }
        if !(damping.is_finite() && damping >= 0.0) {
            return Err(DynamicsError::BadStickDamping(damping));
        }
        Ok(Mode::SmoothStick { delta, damping })
    }

    pub fn smooth_stick_default() -> Self {
        Mode::SmoothStick {
            delta: Self::DEFAULT_STICK_DELTA,
            damping: Self::DEFAULT_STICK_DAMPING,
        }
    }

    /// Whether trajectories in this mode terminate at the first floor
    /// crossing.
    pub fn absorbs(&self) -> bool {
        matches!(self, Mode::Absorbing)
    }
}

/// C² cutoff: 1 on `[delta, pi - delta]`, 0 outside `(0, pi)`, quintic
/// smoothstep on the bands. Exactly 1.0 inside the band, so the stick
/// field is bitwise equal to the free field there.
pub fn stick_cutoff(alpha: f64, delta: f64) -> f64 {
    if alpha <= 0.0 || alpha >= PI {
        0.0
    } else if alpha < delta {
        smoothstep5(alpha / delta)
    } else if alpha <= PI - delta {
        1.0
    } else {
        smoothstep5((PI - alpha) / delta)
    }
}

/// Field evaluation: `(d alpha/dt, d omega/dt)`.
///
/// Absorbing mode uses the free field; the sticking itself is an event,
/// not a force.
#[inline]
pub fn rhs(params: &RodParams, profile: &MotionProfile, mode: Mode, state: &State) -> (f64, f64) {
    debug_assert!(state.is_finite(), "rhs called on non-finite state");
    let accel = profile.accel(state.t);
    let l_eff = params.l_eff();
    let psi = state.alpha - FRAC_PI_2;
    let (sin_psi, cos_psi) = psi.sin_cos();
    let domega = match mode {
        Mode::Free | Mode::Absorbing => (params.g * sin_psi + accel * cos_psi) / l_eff,
        Mode::SmoothStick { delta, damping } => {
            let chi = stick_cutoff(state.alpha, delta);
            let mut d = (params.g * sin_psi + chi * accel * cos_psi) / l_eff;
            if chi < 1.0 {
                d -= damping * (1.0 - chi) * state.omega;
            }
            d
        }
    };
    (state.omega, domega)
}

/// Specific energy `(L_eff w)^2 / 2 + g L_eff sin(alpha)` (units m²/s²):
/// exactly conserved along free trajectories of a resting platform.
pub fn energy(params: &RodParams, state: &State) -> f64 {
    let l_eff = params.l_eff();
    let v = l_eff * state.omega;
    0.5 * v * v + params.g * l_eff * state.alpha.sin()
}

/// Angular distance to the nearer floor direction, `min(alpha, pi - alpha)`.
/// Meaningful for `alpha in [0, pi]`; negative once the rod is below.
#[inline]
pub fn floor_distance(alpha: f64) -> f64 {
    alpha.min(PI - alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> RodParams {
        RodParams::default_unit()
    }

    #[test]
    fn params_validation() {
        assert!(RodParams::new(0.0, 1.0, RodModel::PointMass).is_err());
        assert!(RodParams::new(9.81, -1.0, RodModel::PointMass).is_err());
        assert!(RodParams::new(f64::NAN, 1.0, RodModel::PointMass).is_err());
        let p = RodParams::new(9.81, 1.0, RodModel::UniformRod).unwrap();
        assert_relative_eq!(p.l_eff(), 2.0 / 3.0);
        assert_relative_eq!(p.k(), 9.81 * 1.5);
    }

    #[test]
    fn upright_rest_is_exact_equilibrium() {
        let rest = MotionProfile::rest();
        let s = State::at_rest(FRAC_PI_2);
        let (da, dw) = rhs(&unit(), &rest, Mode::Free, &s);
        assert_eq!(da, 0.0);
        assert_eq!(dw, 0.0);
    }

    #[test]
    fn floor_states_are_not_equilibria() {
        let rest = MotionProfile::rest();
        let at0 = rhs(&unit(), &rest, Mode::Free, &State::at_rest(0.0));
        let at_pi = rhs(&unit(), &rest, Mode::Free, &State::at_rest(PI));
        // d(omega)/dt = -g/L_eff at alpha = 0 and +g/L_eff at alpha = pi
        assert_relative_eq!(at0.1, -9.81, max_relative = 1e-12);
        assert_relative_eq!(at_pi.1, 9.81, max_relative = 1e-12);
    }

    #[test]
    fn forward_acceleration_tips_rod_backward() {
        // upright rod, f'' = +2, L_eff = 1: d(omega)/dt = +2 (toward pi)
        let p = MotionProfile::const_accel(2.0).unwrap();
        let (_, dw) = rhs(&unit(), &p, Mode::Free, &State::at_rest(FRAC_PI_2));
        assert_relative_eq!(dw, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn resting_platform_direct_substitution() {
        let rest = MotionProfile::rest();
        let (_, dw) = rhs(&unit(), &rest, Mode::Free, &State::at_rest(FRAC_PI_4));
        assert_relative_eq!(dw, -9.81 * FRAC_PI_4.cos(), epsilon = 1e-12);
        assert_relative_eq!(dw, -6.9367, epsilon = 1e-4);
    }

    #[test]
    fn energy_values() {
        let p = unit();
        assert_relative_eq!(energy(&p, &State::at_rest(FRAC_PI_2)), 9.81);
        assert_relative_eq!(energy(&p, &State::at_rest(0.0)), 0.0);
        let s = State::new(0.0, FRAC_PI_2, 2.0);
        assert_relative_eq!(energy(&p, &s), 2.0 + 9.81);
    }

    #[test]
    fn stick_field_equals_free_field_inside_band() {
        let params = unit();
        let profile = MotionProfile::sinusoid(3.0, 2.0, 0.0).unwrap();
        let mode = Mode::smooth_stick(0.05, 5.0).unwrap();
        for k in 0..200 {
            let alpha = 0.05 + (PI - 0.1) * k as f64 / 199.0;
            let s = State::new(0.37, alpha, -1.3);
            let free = rhs(&params, &profile, Mode::Free, &s);
            let stick = rhs(&params, &profile, mode, &s);
            assert_eq!(free.0.to_bits(), stick.0.to_bits());
            assert_eq!(free.1.to_bits(), stick.1.to_bits());
        }
    }

    #[test]
    fn stick_cutoff_band_shape() {
        let d = 0.05;
        assert_eq!(stick_cutoff(-0.3, d), 0.0);
        assert_eq!(stick_cutoff(0.0, d), 0.0);
        assert_eq!(stick_cutoff(d, d), 1.0);
        assert_eq!(stick_cutoff(FRAC_PI_2, d), 1.0);
        assert_eq!(stick_cutoff(PI - d, d), 1.0);
        assert_eq!(stick_cutoff(PI, d), 0.0);
        assert_eq!(stick_cutoff(4.0, d), 0.0);
        // strictly inside the ramp
        let mid = stick_cutoff(d / 2.0, d);
        assert!(mid > 0.0 && mid < 1.0);
        assert_relative_eq!(mid, 0.5, epsilon = 1e-12); // smoothstep(1/2) = 1/2
    }

    #[test]
    fn stick_damping_acts_below_floor() {
        let params = unit();
        let rest = MotionProfile::rest();
        let mode = Mode::smooth_stick(0.05, 5.0).unwrap();
        let s = State::new(0.0, -0.5, 2.0);
        let free = rhs(&params, &rest, Mode::Free, &s);
        let stick = rhs(&params, &rest, mode, &s);
        assert_relative_eq!(stick.1, free.1 - 5.0 * 2.0, max_relative = 1e-12);
    }

    #[test]
    fn mode_validation() {
        assert!(Mode::smooth_stick(0.0, 5.0).is_err());
        assert!(Mode::smooth_stick(FRAC_PI_4, 5.0).is_err());
        assert!(Mode::smooth_stick(0.05, -1.0).is_err());
        assert!(Mode::smooth_stick(0.05, 0.0).is_ok());
    }

    #[test]
    fn mirror_equivariance_on_resting_platform() {
        let params = unit();
        let rest = MotionProfile::rest();
        for k in 0..100 {
            let alpha = 0.02 + 3.1 * k as f64 / 99.0;
            let omega = -2.0 + 4.0 * (k as f64 * 0.618).fract();
            let s = State::new(0.0, alpha, omega);
            let m = State::new(0.0, PI - alpha, -omega);
            let (da, dw) = rhs(&params, &rest, Mode::Free, &s);
            let (da_m, dw_m) = rhs(&params, &rest, Mode::Free, &m);
            assert_relative_eq!(da_m, -da, epsilon = 1e-14);
            // mirrored angular acceleration flips sign up to rounding in pi - alpha
            assert_relative_eq!(dw_m, -dw, epsilon = 1e-11);
        }
    }

    #[test]
    fn fall_side_sign_inside_threshold_band() {
        // alpha in (0, arctan(g/A)), |f''| <= A, omega <= 0  =>  d(omega)/dt < 0
        let params = unit();
        let profile = MotionProfile::sinusoid(3.0, 2.0, 0.0).unwrap(); // |f''| <= 12
        let band = (9.81f64 / 12.0).atan();
        for i in 0..400 {
            let alpha = band * (i as f64 + 0.5) / 401.0;
            let t = 7.3 * (i as f64 * 0.217).fract();
            for &omega in &[0.0, -0.7, -5.0] {
                let s = State::new(t, alpha, omega);
                let (_, dw) = rhs(&params, &profile, Mode::Free, &s);
                assert!(dw < 0.0, "alpha={alpha} t={t} omega={omega} dw={dw}");
            }
        }
    }
}
