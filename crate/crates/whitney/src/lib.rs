//! Numerical laboratory for the inverted rod on a moving platform.
//!
//! A rigid rod is pivoted on a platform that moves along a straight
//! track by a prescribed smooth law `s = f(t)`; the rod swings in the
//! vertical plane of the track under gravity and the inertial force of
//! the platform's acceleration. However wild the motion law, some
//! initial angle keeps the rod off the floor for the whole journey.
//! This crate makes that existence argument computational:
//!
//! - [`profile`]: motion-law presets and natural-spline laws with C²
//!   evaluation and acceleration bounds;
//! - [`dynamics`]: the rod field in the platform frame with free,
//!   absorbing and smooth-stick boundary regimes;
//! - [`mod@integrate`]: RK4 and adaptive Dormand–Prince stepping with
//!   dense-output floor-crossing events;
//! - [`mod@classify`]: the fell-forward / fell-backward / survived
//!   classifier and the guaranteed-fall threshold `arctan(g/A)`;
//! - [`search`]: straddle bisection for never-falling angles, window
//!   measurement, openness margins, decay-law fitting;
//! - [`experiments`]: end-map continuity contrasts, the
//!   intermediate-value construction, deviation and extrapolation demos;
//! - [`report`]: deterministic CSV/JSON emission for all of the above.

pub mod classify;
pub mod dynamics;
pub mod experiments;
pub mod integrate;
pub mod profile;
pub mod report;
pub mod search;

pub use classify::{classify, epsilon_threshold, Classification, ClassifyOpts, EpsilonThreshold};
pub use dynamics::{energy, rhs, Mode, RodModel, RodParams, State};
pub use integrate::{
    integrate, locate_crossing, FallEvent, IntegrateOpts, Method, Side, Trajectory,
};
pub use profile::{MotionProfile, ProfileSpec};
pub use search::{
    decay_fit, openness_margin, survival_bisect, survival_search, survival_window, DecayFit,
    SurvivalBracket, SurvivalSearch, SurvivalWindow,
};
