//! Platform motion laws `s = f(t)` with C² evaluation of position,
//! velocity and acceleration, plus bounded-acceleration queries.
//!
//! A profile is defined for every `t >= 0`. Outside its natural span
//! (`t > t_end`) it continues inertially: the position extends linearly
//! and `f''` is identically zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Blend window (seconds) used by `StopForever` when none is given.
pub const DEFAULT_STOP_BLEND: f64 = 1.0;

fn default_blend() -> f64 {
    DEFAULT_STOP_BLEND
}

/// Declarative profile description; this is the on-disk JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// Stationary platform, `f(t) = 0`.
    Rest,
    /// Constant acceleration, `f(t) = accel * t^2 / 2`.
    ConstAccel { accel: f64 },
    /// `f(t) = amplitude * sin(omega * t + phase)`.
    Sinusoid {
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
    /// Follows `base` until `t_stop - blend`, then fades the velocity to
    /// zero with a C² ramp so the platform is at rest for `t >= t_stop`.
    StopForever {
        base: Box<ProfileSpec>,
        t_stop: f64,
        #[serde(default = "default_blend")]
        blend: f64,
    },
    /// Natural cubic spline through `(t, f)` knots.
    Spline { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("profile parameter `{name}` is not finite: {value}")]
    NonFiniteParam { name: &'static str, value: f64 },
    #[error("spline needs at least 2 knots, got {0}")]
    TooFewKnots(usize),
    #[error("spline knot times must be strictly increasing (knot {index}: {t_prev} -> {t})")]
    NonIncreasingKnots { index: usize, t_prev: f64, t: f64 },
    #[error("stop profile needs 0 < blend <= t_stop (blend {blend}, t_stop {t_stop})")]
    BadStopWindow { t_stop: f64, blend: f64 },
    #[error("profile evaluation time must be finite and >= 0, got {0}")]
    InvalidTime(f64),
    #[error("acceleration query needs 0 <= t0 < t1, got [{t0}, {t1}]")]
    BadInterval { t0: f64, t1: f64 },
    #[error("profile file: {0}")]
    Parse(#[from] serde_json::Error),
}

/// A compiled, immutable motion law. Construct with [`MotionProfile::new`]
/// or the preset helpers; evaluate with [`MotionProfile::eval`].
#[derive(Debug, Clone)]
pub struct MotionProfile {
    spec: ProfileSpec,
    body: Body,
}

#[derive(Debug, Clone)]
enum Body {
    Rest,
    ConstAccel {
        accel: f64,
    },
    Sinusoid {
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
    StopForever {
        base: Box<Body>,
        t_stop: f64,
        blend: f64,
        ramp: RampTable,
    },
    Spline(NaturalSpline),
}

impl MotionProfile {
    /// Compile a profile description, validating every parameter.
    pub fn new(spec: &ProfileSpec) -> Result<Self, ProfileError> {
        let body = Body::compile(spec)?;
        Ok(Self {
            spec: spec.clone(),
            body,
        })
    }

    pub fn rest() -> Self {
        Self::new(&ProfileSpec::Rest).expect("rest profile is always valid")
    }

    pub fn const_accel(accel: f64) -> Result<Self, ProfileError> {
        Self::new(&ProfileSpec::ConstAccel { accel })
    }

    pub fn sinusoid(amplitude: f64, omega: f64, phase: f64) -> Result<Self, ProfileError> {
        Self::new(&ProfileSpec::Sinusoid {
            amplitude,
            omega,
            phase,
        })
    }

    pub fn spline(knots: Vec<(f64, f64)>) -> Result<Self, ProfileError> {
        Self::new(&ProfileSpec::Spline { knots })
    }

    pub fn stop_forever(base: ProfileSpec, t_stop: f64, blend: f64) -> Result<Self, ProfileError> {
        Self::new(&ProfileSpec::StopForever {
            base: Box::new(base),
            t_stop,
            blend,
        })
    }

    /// The declarative form this profile was compiled from.
    pub fn spec(&self) -> &ProfileSpec {
        &self.spec
    }

    pub fn from_json(text: &str) -> Result<Self, ProfileError> {
        let spec: ProfileSpec = serde_json::from_str(text)?;
        Self::new(&spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.spec).expect("profile spec serializes")
    }

    /// End of the profile's natural span; `+inf` for perpetual presets.
    /// Beyond it, `f''` is identically zero.
    pub fn t_end(&self) -> f64 {
        self.body.t_end()
    }

    /// Evaluate `(f, f', f'')` at `t >= 0`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64, f64), ProfileError> {
        if !t.is_finite() || t < 0.0 {
            return Err(ProfileError::InvalidTime(t));
        }
        Ok(self.body.eval(t))
    }

    /// Platform acceleration `f''(t)`; panics on invalid `t` (internal hot path).
    #[inline]
    pub(crate) fn accel(&self, t: f64) -> f64 {
        self.body.eval(t).2
    }

    /// Upper bound for `sup |f''|` on `[t0, t1]`, exact for the analytic
    /// presets and for splines (piecewise-linear `f''` attains its extrema
    /// at knots). The stop ramp is bounded conservatively.
    pub fn max_abs_accel(&self, t0: f64, t1: f64) -> Result<f64, ProfileError> {
        if !t0.is_finite() || !t1.is_finite() || t0 < 0.0 || t0 >= t1 {
            return Err(ProfileError::BadInterval { t0, t1 });
        }
        Ok(self.body.max_abs_accel(t0, t1))
    }
}

fn require_finite(name: &'static str, value: f64) -> Result<f64, ProfileError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ProfileError::NonFiniteParam { name, value })
    }
}

impl Body {
    fn compile(spec: &ProfileSpec) -> Result<Self, ProfileError> {
        match spec {
            ProfileSpec::Rest => Ok(Body::Rest),
            ProfileSpec::ConstAccel { accel } => Ok(Body::ConstAccel {
                accel: require_finite("accel", *accel)?,
            }),
            ProfileSpec::Sinusoid {
                amplitude,
                omega,
                phase,
            } => Ok(Body::Sinusoid {
                amplitude: require_finite("amplitude", *amplitude)?,
                omega: require_finite("omega", *omega)?,
                phase: require_finite("phase", *phase)?,
            }),
            ProfileSpec::StopForever {
                base,
                t_stop,
                blend,
            } => {
                let t_stop = require_finite("t_stop", *t_stop)?;
                let blend = require_finite("blend", *blend)?;
                if !(blend > 0.0 && blend <= t_stop) {
                    return Err(ProfileError::BadStopWindow { t_stop, blend });
                }
                let base = Body::compile(base)?;
                let ramp = RampTable::build(&base, t_stop, blend);
                Ok(Body::StopForever {
                    base: Box::new(base),
                    t_stop,
                    blend,
                    ramp,
                })
            }
            ProfileSpec::Spline { knots } => Ok(Body::Spline(NaturalSpline::new(knots)?)),
        }
    }

    fn t_end(&self) -> f64 {
        match self {
            Body::Rest | Body::ConstAccel { .. } | Body::Sinusoid { .. } => f64::INFINITY,
            Body::StopForever { t_stop, .. } => *t_stop,
            Body::Spline(s) => s.t_last(),
        }
    }

    fn eval(&self, t: f64) -> (f64, f64, f64) {
        match self {
            Body::Rest => (0.0, 0.0, 0.0),
            Body::ConstAccel { accel } => (0.5 * accel * t * t, accel * t, *accel),
            Body::Sinusoid {
                amplitude,
                omega,
                phase,
            } => {
                let arg = omega * t + phase;
                (
                    amplitude * arg.sin(),
                    amplitude * omega * arg.cos(),
                    -amplitude * omega * omega * arg.sin(),
                )
            }
            Body::StopForever {
                base,
                t_stop,
                blend,
                ramp,
            } => {
                let t_blend = t_stop - blend;
                if t <= t_blend {
                    base.eval(t)
                } else if t < *t_stop {
                    ramp.eval(base, t)
                } else {
                    (ramp.final_pos, 0.0, 0.0)
                }
            }
            Body::Spline(s) => s.eval(t),
        }
    }

    fn max_abs_accel(&self, t0: f64, t1: f64) -> f64 {
        match self {
            Body::Rest => 0.0,
            Body::ConstAccel { accel } => accel.abs(),
            Body::Sinusoid {
                amplitude,
                omega,
                phase,
            } => amplitude.abs() * omega * omega * max_abs_sin(*omega, *phase, t0, t1),
            Body::StopForever {
                base,
                t_stop,
                blend,
                ..
            } => {
                let t_blend = t_stop - blend;
                let mut max = 0.0f64;
                if t0 < t_blend {
                    max = max.max(base.max_abs_accel(t0, t1.min(t_blend)));
                }
                if t1 > t_blend && t0 < *t_stop {
                    // |f''| = |a_b*w + v_b*w'/blend| <= sup|a_b| + sup|v_b| * 1.875/blend
                    // on the overlapped part of the ramp; max |w'| of the quintic
                    // smoothstep is 15/8.
                    let lo = t0.max(t_blend);
                    let hi = t1.min(*t_stop);
                    let a_base = base.max_abs_accel(lo, hi);
                    let v_base = base.max_abs_vel(lo, hi);
                    max = max.max(a_base + v_base * 1.875 / blend);
                }
                max
            }
            Body::Spline(s) => s.max_abs_accel(t0, t1),
        }
    }

    /// Upper bound for `sup |f'|` on `[t0, t1]`; used by the stop-ramp bound.
    fn max_abs_vel(&self, t0: f64, t1: f64) -> f64 {
        match self {
            Body::Rest => 0.0,
            Body::ConstAccel { accel } => accel.abs() * t0.abs().max(t1.abs()),
            Body::Sinusoid {
                amplitude, omega, ..
            } => amplitude.abs() * omega.abs(),
            Body::StopForever { base, t_stop, .. } => base.max_abs_vel(t0, t1.min(*t_stop)),
            Body::Spline(s) => s.max_abs_vel(t0, t1),
        }
    }
}

/// `max |sin(w t + phase)|` over `[t0, t1]`, exactly.
fn max_abs_sin(omega: f64, phase: f64, t0: f64, t1: f64) -> f64 {
    if omega == 0.0 {
        return phase.sin().abs();
    }
    let a = omega * t0 + phase;
    let b = omega * t1 + phase;
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    // |sin| peaks at pi/2 + k*pi; check whether any such point lies inside.
    let k = ((lo - std::f64::consts::FRAC_PI_2) / std::f64::consts::PI).ceil();
    let peak = std::f64::consts::FRAC_PI_2 + k * std::f64::consts::PI;
    if peak <= hi {
        1.0
    } else {
        lo.sin().abs().max(hi.sin().abs())
    }
}

/// Quintic smoothstep `s(u) = 6u^5 - 15u^4 + 10u^3` on `[0, 1]`;
/// `s` and its first two derivatives vanish at 0, and `s(1) = 1` with
/// vanishing derivatives, so gluing with it preserves C².
pub(crate) fn smoothstep5(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }
}

fn smoothstep5_deriv(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        30.0 * u * u * (1.0 - u) * (1.0 - u)
    }
}

/// Precomputed position table for the stop ramp. The ramp velocity is
/// `v(t) = f_base'(t) * (1 - s(u))` with `u = (t - (t_stop-blend))/blend`;
/// position comes from a Simpson-integrated Hermite table over the window.
#[derive(Debug, Clone)]
struct RampTable {
    t_start: f64,
    blend: f64,
    /// Cumulative positions at `SEGMENTS + 1` uniform nodes.
    pos: Vec<f64>,
    final_pos: f64,
}

impl RampTable {
    const SEGMENTS: usize = 512;

    fn ramp_vel(base: &Body, t_start: f64, blend: f64, t: f64) -> (f64, f64) {
        let (_, v, a) = base.eval(t);
        let u = (t - t_start) / blend;
        let w = 1.0 - smoothstep5(u);
        let dw = -smoothstep5_deriv(u) / blend;
        (v * w, a * w + v * dw)
    }

    fn build(base: &Body, t_stop: f64, blend: f64) -> Self {
        let t_start = t_stop - blend;
        let (p0, _, _) = base.eval(t_start);
        let n = Self::SEGMENTS;
        let h = blend / n as f64;
        let mut pos = Vec::with_capacity(n + 1);
        pos.push(p0);
        let mut acc = p0;
        for j in 0..n {
            let ta = t_start + j as f64 * h;
            let tm = ta + 0.5 * h;
            let tb = ta + h;
            let va = Self::ramp_vel(base, t_start, blend, ta).0;
            let vm = Self::ramp_vel(base, t_start, blend, tm).0;
            let vb = Self::ramp_vel(base, t_start, blend, tb).0;
            acc += h / 6.0 * (va + 4.0 * vm + vb);
            pos.push(acc);
        }
        Self {
            t_start,
            blend,
            pos,
            final_pos: acc,
        }
    }

    fn eval(&self, base: &Body, t: f64) -> (f64, f64, f64) {
        let n = Self::SEGMENTS;
        let h = self.blend / n as f64;
        let x = (t - self.t_start) / h;
        let j = (x.floor() as usize).min(n - 1);
        let ta = self.t_start + j as f64 * h;
        let tb = ta + h;
        let (va, _) = Self::ramp_vel(base, self.t_start, self.blend, ta);
        let (vb, _) = Self::ramp_vel(base, self.t_start, self.blend, tb);
        let (v, a) = Self::ramp_vel(base, self.t_start, self.blend, t);
        // Cubic Hermite on (pos, vel) node data for the position only.
        let s = (t - ta) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let p = (2.0 * s3 - 3.0 * s2 + 1.0) * self.pos[j]
            + (s3 - 2.0 * s2 + s) * h * va
            + (-2.0 * s3 + 3.0 * s2) * self.pos[j + 1]
            + (s3 - s2) * h * vb;
        (p, v, a)
    }
}

/// Natural cubic interpolant: C² with piecewise-linear `f''` that
/// vanishes at (and beyond) both end knots.
#[derive(Debug, Clone)]
struct NaturalSpline {
    t: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots (natural: first and last are 0).
    m: Vec<f64>,
}

impl NaturalSpline {
    fn new(knots: &[(f64, f64)]) -> Result<Self, ProfileError> {
        if knots.len() < 2 {
            return Err(ProfileError::TooFewKnots(knots.len()));
        }
        for (i, &(t, y)) in knots.iter().enumerate() {
            require_finite("knot time", t)?;
            require_finite("knot value", y)?;
            if i > 0 && t <= knots[i - 1].0 {
                return Err(ProfileError::NonIncreasingKnots {
                    index: i,
                    t_prev: knots[i - 1].0,
                    t,
                });
            }
        }
        let t: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let y: Vec<f64> = knots.iter().map(|k| k.1).collect();
        let m = Self::solve_moments(&t, &y);
        Ok(Self { t, y, m })
    }

    /// Thomas solve of the tridiagonal natural-spline system for the
    /// knot second derivatives.
    fn solve_moments(t: &[f64], y: &[f64]) -> Vec<f64> {
        let n = t.len();
        let mut m = vec![0.0; n];
        if n == 2 {
            return m;
        }
        let rows = n - 2;
        let mut diag = vec![0.0; rows];
        let mut upper = vec![0.0; rows];
        let mut rhs = vec![0.0; rows];
        for i in 0..rows {
            let h0 = t[i + 1] - t[i];
            let h1 = t[i + 2] - t[i + 1];
            diag[i] = (h0 + h1) / 3.0;
            upper[i] = h1 / 6.0;
            rhs[i] = (y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0;
        }
        // forward elimination (lower[i] equals upper[i-1] by symmetry)
        for i in 1..rows {
            let w = upper[i - 1] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut sol = vec![0.0; rows];
        sol[rows - 1] = rhs[rows - 1] / diag[rows - 1];
        for i in (0..rows - 1).rev() {
            sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i];
        }
        m[1..=rows].copy_from_slice(&sol);
        m
    }

    fn t_last(&self) -> f64 {
        *self.t.last().expect("spline has knots")
    }

    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let n = self.t.len();
        if t <= self.t[0] {
            // natural end: f'' = 0, extend linearly
            let slope = self.end_slope(0);
            return (self.y[0] + slope * (t - self.t[0]), slope, 0.0);
        }
        if t >= self.t[n - 1] {
            let slope = self.end_slope(n - 1);
            return (self.y[n - 1] + slope * (t - self.t[n - 1]), slope, 0.0);
        }
        let i = match self.t.partition_point(|&k| k <= t) {
            0 => 0,
            p => p - 1,
        };
        let h = self.t[i + 1] - self.t[i];
        let a = self.t[i + 1] - t;
        let b = t - self.t[i];
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let f = m0 * a * a * a / (6.0 * h)
            + m1 * b * b * b / (6.0 * h)
            + (self.y[i] / h - m0 * h / 6.0) * a
            + (self.y[i + 1] / h - m1 * h / 6.0) * b;
        let df = -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) + (self.y[i + 1] - self.y[i]) / h
            - (m1 - m0) * h / 6.0;
        let ddf = (m0 * a + m1 * b) / h;
        (f, df, ddf)
    }

    fn end_slope(&self, knot: usize) -> f64 {
        let n = self.t.len();
        if knot == 0 {
            let h = self.t[1] - self.t[0];
            (self.y[1] - self.y[0]) / h - self.m[1] * h / 6.0
        } else {
            let h = self.t[n - 1] - self.t[n - 2];
            (self.y[n - 1] - self.y[n - 2]) / h + self.m[n - 2] * h / 6.0
        }
    }

    fn max_abs_accel(&self, t0: f64, t1: f64) -> f64 {
        // piecewise-linear f'': extrema at window ends and interior knots
        let mut max = self.eval(t0).2.abs().max(self.eval(t1).2.abs());
        for &tk in &self.t {
            if tk > t0 && tk < t1 {
                max = max.max(self.eval(tk).2.abs());
            }
        }
        max
    }

    fn max_abs_vel(&self, t0: f64, t1: f64) -> f64 {
        // f' is piecewise quadratic: extrema at window ends, knots, and
        // the interior root of f'' within each segment
        let mut max = self.eval(t0).1.abs().max(self.eval(t1).1.abs());
        for &tk in &self.t {
            if tk > t0 && tk < t1 {
                max = max.max(self.eval(tk).1.abs());
            }
        }
        let n = self.t.len();
        for i in 0..n - 1 {
            let (m0, m1) = (self.m[i], self.m[i + 1]);
            if m0 != m1 {
                let root = self.t[i] + m0 / (m0 - m1) * (self.t[i + 1] - self.t[i]);
                if root > t0.max(self.t[i]) && root < t1.min(self.t[i + 1]) {
                    max = max.max(self.eval(root).1.abs());
                }
            }
        }
        max
    }
}
