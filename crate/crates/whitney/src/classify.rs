//! The ±1 classifier: does an initial angle fall forward, fall backward,
//! or survive the horizon? Plus the guaranteed-fall threshold
//! `epsilon = arctan(g / A_max)`: below that angular distance to the
//! floor, with floor-directed (or zero) angular velocity and platform
//! acceleration bounded by `A_max`, gravity wins and the rod falls
//! monotonically. That threshold is what makes both fall basins
//! provably nonempty and seeds the survival search.

use crate::dynamics::{floor_distance, Mode, RodParams, State};
use crate::integrate::{integrate, IntegrateError, IntegrateOpts, Method, Side};
use crate::profile::{MotionProfile, ProfileError};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Outcome of one classification run. The sign convention of the
/// two-valued classifier is `FellForward -> +1`, `FellBackward -> -1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Classification {
    FellForward { t_fall: f64 },
    FellBackward { t_fall: f64 },
    Survived { horizon: f64 },
}

impl Classification {
    pub fn is_fallen(&self) -> bool {
        !matches!(self, Classification::Survived { .. })
    }

    pub fn t_fall(&self) -> Option<f64> {
        match self {
            Classification::FellForward { t_fall } | Classification::FellBackward { t_fall } => {
                Some(*t_fall)
            }
            Classification::Survived { .. } => None,
        }
    }

    /// The two-valued classifier: +1 forward, -1 backward, 0 neither.
    pub fn sign(&self) -> i8 {
        match self {
            Classification::FellForward { .. } => 1,
            Classification::FellBackward { .. } => -1,
            Classification::Survived { .. } => 0,
        }
    }

    pub fn side(&self) -> Option<Side> {
        match self {
            Classification::FellForward { .. } => Some(Side::Forward),
            Classification::FellBackward { .. } => Some(Side::Backward),
            Classification::Survived { .. } => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("initial angle must lie in [0, pi], got {0}")]
    AlphaOutOfRange(f64),
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("acceleration bound must be >= 0 and finite, got {0}")]
    BadAccelBound(f64),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Knobs for a classification run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOpts {
    pub rel_tol: f64,
    pub crossing_tol: f64,
    /// Initial angular velocity; the canonical problem starts at rest.
    pub omega0: f64,
}

impl Default for ClassifyOpts {
    fn default() -> Self {
        Self {
            rel_tol: crate::integrate::DEFAULT_REL_TOL,
            crossing_tol: crate::integrate::DEFAULT_CROSSING_TOL,
            omega0: 0.0,
        }
    }
}

impl ClassifyOpts {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    /// Same options with a 10x tighter integrator tolerance, for
    /// independent re-verification of search results.
    pub fn tightened(mut self) -> Self {
        self.rel_tol /= 10.0;
        self
    }

    /// The integrator options a classification run uses.
    pub fn integrate_opts(&self) -> IntegrateOpts {
        IntegrateOpts {
            method: Method::Adaptive {
                rel_tol: self.rel_tol,
            },
            crossing_tol: self.crossing_tol,
            ..IntegrateOpts::default()
        }
    }
}

/// Classify the trajectory started at rest (or at `opts.omega0`) from
/// `alpha0 in [0, pi]` by its first floor crossing within the horizon.
/// Uses the free field with first-crossing semantics, which coincides
/// with the absorbing run up to the event; starting exactly on the
/// floor counts as fallen at t = 0.
pub fn classify(
    params: &RodParams,
    profile: &MotionProfile,
    alpha0: f64,
    horizon: f64,
    opts: &ClassifyOpts,
) -> Result<Classification, ClassifyError> {
    if !(alpha0.is_finite() && (0.0..=PI).contains(&alpha0)) {
        return Err(ClassifyError::AlphaOutOfRange(alpha0));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(ClassifyError::BadHorizon(horizon));
    }
    let state0 = State::new(0.0, alpha0, opts.omega0);
    let traj = integrate(
        params,
        profile,
        Mode::Absorbing,
        state0,
        horizon,
        &opts.integrate_opts(),
    )?;
    Ok(match traj.event {
        Some(ev) => match ev.side {
            Side::Forward => Classification::FellForward { t_fall: ev.t_cross },
            Side::Backward => Classification::FellBackward { t_fall: ev.t_cross },
        },
        None => Classification::Survived { horizon },
    })
}

/// The guaranteed-fall threshold computed from an acceleration bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonThreshold {
    /// `arctan(g / a_max)`; `pi/2` for an unaccelerated platform.
    pub epsilon: f64,
    /// The bound it was computed from.
    pub a_max: f64,
}

/// `epsilon = arctan(g / A_max)`. For floor distance `H < epsilon` and
/// floor-directed (or zero) angular velocity, the angular acceleration
/// from gravity dominates any platform acceleration bounded by `A_max`,
/// so `H` is non-increasing until the crossing.
pub fn epsilon_threshold(
    params: &RodParams,
    a_max: f64,
) -> Result<EpsilonThreshold, ClassifyError> {
    if !(a_max.is_finite() && a_max >= 0.0) {
        return Err(ClassifyError::BadAccelBound(a_max));
    }
    let epsilon = if a_max == 0.0 {
        FRAC_PI_2
    } else {
        (params.g / a_max).atan()
    };
    Ok(EpsilonThreshold { epsilon, a_max })
}

/// Report from a monotone-fall check: once the trajectory enters the
/// band `{H < epsilon, velocity floor-directed or zero}`, the floor
/// distance must not increase until the crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotoneFallReport {
    pub classification: Classification,
    /// Time the trajectory first entered the guaranteed-fall band.
    pub entered_band_at: Option<f64>,
    pub monotone: bool,
}

/// Integrate from rest at `alpha0` and verify the guaranteed-fall band
/// behaves as the threshold lemma predicts (checked per accepted step,
/// with 1e-12 slack for rounding).
pub fn check_monotone_fall(
    params: &RodParams,
    profile: &MotionProfile,
    alpha0: f64,
    horizon: f64,
    a_max: f64,
    opts: &ClassifyOpts,
) -> Result<MonotoneFallReport, ClassifyError> {
    if !(alpha0.is_finite() && (0.0..=PI).contains(&alpha0)) {
        return Err(ClassifyError::AlphaOutOfRange(alpha0));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(ClassifyError::BadHorizon(horizon));
    }
    let eps = epsilon_threshold(params, a_max)?.epsilon;
    let traj = integrate(
        params,
        profile,
        Mode::Absorbing,
        State::new(0.0, alpha0, opts.omega0),
        horizon,
        &opts.integrate_opts(),
    )?;
    let classification = match traj.event {
        Some(ev) => match ev.side {
            Side::Forward => Classification::FellForward { t_fall: ev.t_cross },
            Side::Backward => Classification::FellBackward { t_fall: ev.t_cross },
        },
        None => Classification::Survived { horizon },
    };

    let mut entered: Option<f64> = None;
    let mut last_h = f64::INFINITY;
    let mut monotone = true;
    for s in &traj.samples {
        let h = floor_distance(s.alpha);
        if entered.is_none() {
            // floor-directed: toward alpha = 0 when on the forward half,
            // toward alpha = pi on the backward half; zero counts
            let directed = if s.alpha <= FRAC_PI_2 {
                s.omega <= 0.0
            } else {
                s.omega >= 0.0
            };
            if h < eps && directed && (0.0..=PI).contains(&s.alpha) {
                entered = Some(s.t);
                last_h = h;
            }
        } else if h > last_h + 1e-12 {
            monotone = false;
        } else {
            last_h = h;
        }
    }
    Ok(MonotoneFallReport {
        classification,
        entered_band_at: entered,
        monotone,
    })
}
