//! Constructive search machinery: straddle bisection for a never-falling
//! initial angle, measurement of the surviving window around it, openness
//! margins of the fall basins, and the exponential decay of the window
//! width with the horizon.
//!
//! Straddle bisection maintains one falls-forward and one falls-backward
//! endpoint, seeded at half the guaranteed-fall threshold on each side so
//! the seed classifications cannot be wrong when the platform acceleration
//! is bounded. A probe that survives the horizon becomes the recorded
//! survivor; the search then localizes the window edge between the forward
//! basin and the survivor (and symmetrically on the backward side) down to
//! the requested tolerance.

use crate::classify::{classify, epsilon_threshold, Classification, ClassifyError, ClassifyOpts};
use crate::dynamics::RodParams;
use crate::profile::{MotionProfile, ProfileError};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

/// Hard floor for bisection tolerances on plain doubles; below this the
/// probes themselves are no longer distinguishable.
pub const RESOLUTION_FLOOR: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("tolerance {0} is below the double-precision resolution floor {RESOLUTION_FLOOR}")]
    ToleranceTooTight(f64),
    #[error(
        "predicted window width {predicted:.3e} at horizon {horizon} s is below tolerance \
         {tol:.3e}; the window is not resolvable in double precision"
    )]
    ResolutionFloor {
        horizon: f64,
        predicted: f64,
        tol: f64,
    },
    #[error(
        "seed bracket invalid: classify({lo}) = {lo_class:?}, classify({hi}) = {hi_class:?}; \
         expected forward / backward falls"
    )]
    InvalidSeedBracket {
        lo: f64,
        lo_class: Classification,
        hi: f64,
        hi_class: Classification,
    },
    #[error("no survivor found at horizon {horizon} s down to bracket width {width:.3e}")]
    NoSurvivor { horizon: f64, width: f64 },
    #[error("openness margin requires a fallen angle; classify({alpha0}) survived")]
    NotFallen { alpha0: f64 },
    #[error("openness margin below resolution at alpha0 = {alpha0}")]
    MarginBelowResolution { alpha0: f64 },
    #[error("decay fit needs at least 4 horizons, got {0}")]
    TooFewHorizons(usize),
    #[error("decay fit has fewer than 2 usable points after exclusions ({0} left)")]
    TooFewUsablePoints(usize),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// One probe of a bisection run, with the working straddle interval
/// right after it was applied.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BisectStep {
    pub probe: f64,
    pub outcome: i8,
    pub lo_after: f64,
    pub hi_after: f64,
}

/// Result of the straddle bisection.
///
/// `alpha_lo` / `alpha_hi` are the innermost verified falls-forward /
/// falls-backward probes. `width` is the converged width of the final
/// straddle interval, i.e. the achieved localization precision of the
/// survival-window edge (at most the requested tolerance whenever the
/// search converged).
#[derive(Debug, Clone, Serialize)]
pub struct SurvivalBracket {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub width: f64,
    pub survivor: Option<f64>,
    pub horizon: f64,
}

/// Maximal verified interval of surviving angles around the survivor.
/// `lo`/`hi` classify as survived; `lo_outside`/`hi_outside` are the
/// nearest verified fallen probes just beyond each edge.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SurvivalWindow {
    pub lo: f64,
    pub hi: f64,
    pub lo_outside: f64,
    pub hi_outside: f64,
    pub horizon: f64,
}

impl SurvivalWindow {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Full trace of one search, for invariant checks and diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct SearchTrace {
    pub steps: Vec<BisectStep>,
    pub diagnostics: Vec<String>,
}

/// Combined result of one survival search: the straddle bracket, the
/// measured window when a survivor was found, and the probe trace.
#[derive(Debug, Clone, Serialize)]
pub struct SurvivalSearch {
    pub bracket: SurvivalBracket,
    pub window: Option<SurvivalWindow>,
    pub trace: SearchTrace,
}

fn outcome_code(c: &Classification) -> i8 {
    c.sign()
}

/// Full survival search: straddle bisection plus window-edge refinement.
/// [`survival_bisect`] and [`survival_window`] are thin wrappers.
pub fn survival_search(
    params: &RodParams,
    profile: &MotionProfile,
    horizon: f64,
    tol: f64,
    opts: &ClassifyOpts,
) -> Result<SurvivalSearch, SearchError> {
    if !(tol.is_finite() && tol >= RESOLUTION_FLOOR) {
        return Err(SearchError::ToleranceTooTight(tol));
    }
    // precision envelope: the linearized window shrinks like
    // pi * exp(-sqrt(g/L_eff) * T); refuse anything predicted below tol
    let predicted = PI * (-params.lambda() * horizon).exp();
    if predicted < tol {
        return Err(SearchError::ResolutionFloor {
            horizon,
            predicted,
            tol,
        });
    }

    let a_max = profile.max_abs_accel(0.0, horizon)?;
    let eps = epsilon_threshold(params, a_max)?.epsilon;
    let mut lo = 0.5 * eps;
    let mut hi = PI - 0.5 * eps;
    let lo_class = classify(params, profile, lo, horizon, opts)?;
    let hi_class = classify(params, profile, hi, horizon, opts)?;
    if lo_class.sign() != 1 || hi_class.sign() != -1 {
        return Err(SearchError::InvalidSeedBracket {
            lo,
            lo_class,
            hi,
            hi_class,
        });
    }

    let mut trace = SearchTrace {
        steps: Vec::new(),
        diagnostics: Vec::new(),
    };
    let probe = |params: &RodParams,
                 alpha: f64,
                 lo: f64,
                 hi: f64,
                 trace: &mut SearchTrace|
     -> Result<i8, SearchError> {
        let c = classify(params, profile, alpha, horizon, opts)?;
        let code = outcome_code(&c);
        trace.steps.push(BisectStep {
            probe: alpha,
            outcome: code,
            lo_after: lo,
            hi_after: hi,
        });
        Ok(code)
    };

    // phase 1: plain straddle bisection until a probe survives
    let mut s_min: Option<f64> = None;
    let mut s_max: Option<f64> = None;
    while hi - lo > tol && s_min.is_none() {
        let mid = 0.5 * (lo + hi);
        match probe(params, mid, lo, hi, &mut trace)? {
            1 => lo = mid,
            -1 => hi = mid,
            _ => {
                s_min = Some(mid);
                s_max = Some(mid);
            }
        }
        if let Some(last) = trace.steps.last_mut() {
            last.lo_after = lo;
            last.hi_after = hi;
        }
    }

    let (Some(mut s_lo), Some(mut s_hi)) = (s_min, s_max) else {
        // window below the bisection resolution at this horizon
        let bracket = SurvivalBracket {
            alpha_lo: lo,
            alpha_hi: hi,
            width: hi - lo,
            survivor: None,
            horizon,
        };
        return Ok(SurvivalSearch {
            bracket,
            window: None,
            trace,
        });
    };

    // phase 2a: forward window edge, between the falls-forward side and
    // the smallest known survivor
    let mut a = lo;
    let mut edge_fwd = s_lo - a;
    while s_lo - a > tol {
        let mid = 0.5 * (a + s_lo);
        match probe(params, mid, lo, hi, &mut trace)? {
            1 => {
                a = mid;
                lo = lo.max(mid);
            }
            0 => s_lo = mid,
            _ => {
                // a backward fall below the survivor: the basins are not
                // intervals here; tighten the backward side and note it
                trace.diagnostics.push(format!(
                    "non-interval basin: backward fall at {mid} below survivor"
                ));
                hi = hi.min(mid);
                s_lo = mid.min(s_lo);
                break;
            }
        }
        edge_fwd = s_lo - a;
        if let Some(last) = trace.steps.last_mut() {
            last.lo_after = lo;
            last.hi_after = hi;
        }
    }

    // phase 2b: backward window edge
    let mut b = hi;
    let mut edge_bwd = b - s_hi;
    while b - s_hi > tol {
        let mid = 0.5 * (s_hi + b);
        match probe(params, mid, lo, hi, &mut trace)? {
            -1 => {
                b = mid;
                hi = hi.min(mid);
            }
            0 => s_hi = mid,
            _ => {
                trace.diagnostics.push(format!(
                    "non-interval basin: forward fall at {mid} above survivor"
                ));
                s_hi = mid.max(s_hi);
                break;
            }
        }
        edge_bwd = b - s_hi;
        if let Some(last) = trace.steps.last_mut() {
            last.lo_after = lo;
            last.hi_after = hi;
        }
    }

    // robust survivor: the midpoint of the measured window, re-verified;
    // falls back to a verified edge survivor if the window is exotic
    let center = 0.5 * (s_lo + s_hi);
    let survivor = if outcome_code(&classify(params, profile, center, horizon, opts)?) == 0 {
        center
    } else {
        trace.diagnostics.push(format!(
            "window center {center} did not survive; using edge survivor"
        ));
        s_lo
    };

    let bracket = SurvivalBracket {
        alpha_lo: a,
        alpha_hi: b,
        width: edge_fwd.max(edge_bwd),
        survivor: Some(survivor),
        horizon,
    };
    let window = Some(SurvivalWindow {
        lo: s_lo,
        hi: s_hi,
        lo_outside: a,
        hi_outside: b,
        horizon,
    });
    Ok(SurvivalSearch {
        bracket,
        window,
        trace,
    })
}

/// Straddle bisection for a never-falling initial angle at the given
/// horizon. Deterministic for fixed inputs.
pub fn survival_bisect(
    params: &RodParams,
    profile: &MotionProfile,
    horizon: f64,
    tol: f64,
    opts: &ClassifyOpts,
) -> Result<SurvivalBracket, SearchError> {
    Ok(survival_search(params, profile, horizon, tol, opts)?.bracket)
}

/// Same as [`survival_bisect`] but also returns the search trace.
pub fn survival_bisect_traced(
    params: &RodParams,
    profile: &MotionProfile,
    horizon: f64,
    tol: f64,
    opts: &ClassifyOpts,
) -> Result<(SurvivalBracket, SearchTrace), SearchError> {
    let ws = survival_search(params, profile, horizon, tol, opts)?;
    Ok((ws.bracket, ws.trace))
}

/// Measure the surviving window around the survivor at this horizon,
/// each edge localized to `tol`.
pub fn survival_window(
    params: &RodParams,
    profile: &MotionProfile,
    horizon: f64,
    tol: f64,
    opts: &ClassifyOpts,
) -> Result<SurvivalWindow, SearchError> {
    let ws = survival_search(params, profile, horizon, tol, opts)?;
    ws.window.ok_or(SearchError::NoSurvivor {
        horizon,
        width: ws.bracket.width,
    })
}

/// Largest verified symmetric margin around a fallen angle within which
/// every tested perturbation classifies the same way. Probes shrink
/// geometrically from 1e-2; the returned margin has also been checked at
/// a few interior offsets.
pub fn openness_margin(
    params: &RodParams,
    profile: &MotionProfile,
    alpha0: f64,
    horizon: f64,
    opts: &ClassifyOpts,
) -> Result<f64, SearchError> {
    let center = classify(params, profile, alpha0, horizon, opts)?;
    if !center.is_fallen() {
        return Err(SearchError::NotFallen { alpha0 });
    }
    let side = center.sign();
    let clamp = |a: f64| a.clamp(0.0, PI);
    let matches = |d: f64| -> Result<bool, SearchError> {
        let below = classify(params, profile, clamp(alpha0 - d), horizon, opts)?;
        let above = classify(params, profile, clamp(alpha0 + d), horizon, opts)?;
        Ok(below.sign() == side && above.sign() == side)
    };

    let mut d = 1e-2f64;
    while d >= RESOLUTION_FLOOR {
        if matches(d)? {
            // spot-check interior offsets before reporting d as verified
            for frac in [0.61, 0.37, 0.13] {
                if !matches(d * frac)? {
                    return Err(SearchError::MarginBelowResolution { alpha0 });
                }
            }
            return Ok(d);
        }
        d *= 0.5;
    }
    Err(SearchError::MarginBelowResolution { alpha0 })
}

/// Least-squares fit of `log w(T) = -lambda T + c` over measured window
/// widths.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    /// `(horizon, width)` pairs that entered the fit.
    pub points: Vec<(f64, f64)>,
    pub lambda: f64,
    pub intercept: f64,
    /// Root-mean-square residual of `log w` against the fit.
    pub residual: f64,
    /// Horizons excluded because their window was at the resolution
    /// floor or not measurable.
    pub excluded: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Measure windows over the given horizons and fit the decay law.
/// Horizons whose window cannot be resolved are excluded with a warning.
pub fn decay_fit(
    params: &RodParams,
    profile: &MotionProfile,
    horizons: &[f64],
    tol: f64,
    opts: &ClassifyOpts,
) -> Result<DecayFit, SearchError> {
    if horizons.len() < 4 {
        return Err(SearchError::TooFewHorizons(horizons.len()));
    }
    let measured: Vec<(f64, Result<SurvivalWindow, SearchError>)> = horizons
        .par_iter()
        .map(|&t| (t, survival_window(params, profile, t, tol, opts)))
        .collect();

    let mut points = Vec::new();
    let mut excluded = Vec::new();
    let mut warnings = Vec::new();
    for (t, res) in measured {
        match res {
            Ok(w) if w.width() > 4.0 * tol => points.push((t, w.width())),
            Ok(w) => {
                excluded.push(t);
                warnings.push(format!(
                    "horizon {t} s: window width {:.3e} is at the resolution floor; excluded",
                    w.width()
                ));
            }
            Err(e) => {
                excluded.push(t);
                warnings.push(format!("horizon {t} s: {e}; excluded"));
            }
        }
    }
    if points.len() < 2 {
        return Err(SearchError::TooFewUsablePoints(points.len()));
    }

    let n = points.len() as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for &(t, w) in &points {
        let y = w.ln();
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    let slope = (n * sty - st * sy) / (n * stt - st * st);
    let intercept = (sy - slope * st) / n;
    let lambda = -slope;
    let mut ss = 0.0;
    for &(t, w) in &points {
        let r = w.ln() - (slope * t + intercept);
        ss += r * r;
    }
    let residual = (ss / n).sqrt();
    Ok(DecayFit {
        points,
        lambda,
        intercept,
        residual,
        excluded,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn unit() -> RodParams {
        RodParams::default_unit()
    }

    fn opts() -> ClassifyOpts {
        ClassifyOpts::default()
    }

    #[test]
    fn resting_platform_bracket_contains_upright() {
        let (bracket, trace) =
            survival_bisect_traced(&unit(), &MotionProfile::rest(), 5.0, 1e-12, &opts()).unwrap();
        assert!(bracket.width <= 1e-12);
        assert!(bracket.alpha_lo < FRAC_PI_2 && FRAC_PI_2 < bracket.alpha_hi);
        let s = bracket.survivor.expect("survivor found");
        // symmetry puts the survivor at the upright angle
        assert!((s - FRAC_PI_2).abs() < 1e-6, "survivor {s}");
        let c = classify(&unit(), &MotionProfile::rest(), s, 5.0, &opts()).unwrap();
        assert_eq!(c.sign(), 0);
        // endpoint classifications are opposite falls
        let lo_c = classify(
            &unit(),
            &MotionProfile::rest(),
            bracket.alpha_lo,
            5.0,
            &opts(),
        )
        .unwrap();
        let hi_c = classify(
            &unit(),
            &MotionProfile::rest(),
            bracket.alpha_hi,
            5.0,
            &opts(),
        )
        .unwrap();
        assert_eq!(lo_c.sign(), 1);
        assert_eq!(hi_c.sign(), -1);
        // the first survivor probe was the midpoint of the seed interval
        let first_s = trace.steps.iter().find(|s| s.outcome == 0).unwrap();
        assert!((first_s.probe - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn bracket_invariant_holds_at_every_step() {
        let (bracket, trace) = survival_bisect_traced(
            &unit(),
            &MotionProfile::sinusoid(3.0, 2.0, 0.0).unwrap(),
            5.0,
            1e-12,
            &opts(),
        )
        .unwrap();
        let survivor = bracket.survivor.expect("survivor");
        for step in &trace.steps {
            assert!(step.lo_after < step.hi_after);
            // straddle endpoints keep their sides: forward below, backward above
            assert!(step.lo_after < survivor);
            assert!(step.hi_after > survivor);
            match step.outcome {
                1 => assert!(step.probe <= survivor),
                -1 => assert!(step.probe >= survivor),
                _ => {}
            }
        }
        assert!(trace.diagnostics.is_empty());
    }

    #[test]
    fn const_accel_survivor_leans_forward() {
        let params = unit();
        let profile = MotionProfile::const_accel(2.0).unwrap();
        let bracket = survival_bisect(&params, &profile, 5.0, 1e-12, &opts()).unwrap();
        let s = bracket.survivor.expect("survivor");
        // the rod leans against the backward pseudo-force: equilibrium of
        // the tilted effective gravity is at arctan(g/a), below upright
        let alpha_eq = (9.81f64 / 2.0).atan();
        assert!(s < FRAC_PI_2, "survivor {s} not below pi/2");
        assert!((s - alpha_eq).abs() < 1e-3, "survivor {s} vs {alpha_eq}");
        // already more than half a degree off vertical before it moves
        assert!(FRAC_PI_2 - s > 0.00873);
    }

    #[test]
    fn const_accel_dense_scan_confirms_window_location() {
        // coarse dense scan oracle: the survived region of a 1e3-point scan
        // must contain the bisection survivor and nothing survives far away
        let params = unit();
        let profile = MotionProfile::const_accel(2.0).unwrap();
        let horizon = 3.0;
        let bracket = survival_bisect(&params, &profile, horizon, 1e-10, &opts()).unwrap();
        let s = bracket.survivor.unwrap();
        let mut survived_at = Vec::new();
        for k in 0..=1000 {
            let alpha = 0.3 + (PI - 0.6) * k as f64 / 1000.0;
            let c = classify(&params, &profile, alpha, horizon, &opts()).unwrap();
            if c.sign() == 0 {
                survived_at.push(alpha);
            }
        }
        // scan spacing ~2.8e-3; everything surviving sits within one cell
        // of the bisection survivor
        for alpha in survived_at {
            assert!(
                (alpha - s).abs() < 6e-3,
                "stray survivor at {alpha}, s = {s}"
            );
        }
    }

    #[test]
    fn sinusoid_survivor_reverified_at_tighter_tolerance() {
        let params = unit();
        let profile = MotionProfile::sinusoid(3.0, 2.0, 0.0).unwrap();
        let bracket = survival_bisect(&params, &profile, 5.0, 1e-12, &opts()).unwrap();
        let s = bracket.survivor.expect("survivor");
        let c = classify(&params, &profile, s, 5.0, &opts().tightened()).unwrap();
        assert_eq!(c.sign(), 0, "survivor fails tighter re-verification");
    }

    #[test]
    fn window_edges_separate_survivors_from_falls() {
        let params = unit();
        let profile = MotionProfile::rest();
        let w = survival_window(&params, &profile, 3.0, 1e-12, &opts()).unwrap();
        assert!(w.lo < w.hi);
        assert!(w.lo_outside < w.lo && w.hi < w.hi_outside);
        let o = opts();
        assert_eq!(
            classify(&params, &profile, w.lo, 3.0, &o).unwrap().sign(),
            0
        );
        assert_eq!(
            classify(&params, &profile, w.hi, 3.0, &o).unwrap().sign(),
            0
        );
        assert_eq!(
            classify(&params, &profile, w.lo_outside, 3.0, &o)
                .unwrap()
                .sign(),
            1
        );
        assert_eq!(
            classify(&params, &profile, w.hi_outside, 3.0, &o)
                .unwrap()
                .sign(),
            -1
        );
        // centered at upright by symmetry
        let center = 0.5 * (w.lo + w.hi);
        assert!((center - FRAC_PI_2).abs() < 1e-7);
    }

    #[test]
    fn window_width_shrinks_with_horizon() {
        let params = unit();
        let profile = MotionProfile::rest();
        let w2 = survival_window(&params, &profile, 2.0, 1e-12, &opts())
            .unwrap()
            .width();
        let w3 = survival_window(&params, &profile, 3.0, 1e-12, &opts())
            .unwrap()
            .width();
        let w4 = survival_window(&params, &profile, 4.0, 1e-12, &opts())
            .unwrap()
            .width();
        assert!(w3 <= w2 * (1.0 + 1e-6));
        assert!(w4 <= w3 * (1.0 + 1e-6));
    }

    #[test]
    fn log_width_difference_matches_linearized_growth() {
        // cosh-growth oracle: w(T) ~ e^{-lambda T}, so measuring at
        // T = 2/lambda and 4/lambda gives a log-width difference of -2
        let params = unit();
        let profile = MotionProfile::rest();
        let lambda = params.lambda();
        let w1 = survival_window(&params, &profile, 2.0 / lambda, 1e-12, &opts())
            .unwrap()
            .width();
        let w2 = survival_window(&params, &profile, 4.0 / lambda, 1e-12, &opts())
            .unwrap()
            .width();
        let diff = w2.ln() - w1.ln();
        assert!((diff + 2.0).abs() <= 0.2, "log-width difference {diff}");
    }

    #[test]
    fn decay_fit_recovers_linearized_rate() {
        let params = unit();
        let profile = MotionProfile::rest();
        let horizons = [1.0, 1.5, 2.0, 2.5, 3.0];
        let fit = decay_fit(&params, &profile, &horizons, 1e-12, &opts()).unwrap();
        let expected = params.lambda();
        assert!(
            (fit.lambda - expected).abs() / expected <= 0.10,
            "lambda {} vs sqrt(g/L) {}",
            fit.lambda,
            expected
        );
        assert!(fit.excluded.is_empty());
        assert_eq!(fit.points.len(), 5);
        // widths strictly decreasing over the fitted range
        for pair in fit.points.windows(2) {
            assert!(pair[1].1 < pair[0].1);
        }
    }

    #[test]
    fn decay_fit_needs_enough_horizons() {
        let params = unit();
        assert!(matches!(
            decay_fit(
                &params,
                &MotionProfile::rest(),
                &[1.0, 2.0, 3.0],
                1e-12,
                &opts()
            ),
            Err(SearchError::TooFewHorizons(3))
        ));
    }

    #[test]
    fn sinusoid_decay_is_positive_and_monotone() {
        let params = unit();
        let profile = MotionProfile::sinusoid(3.0, 2.0, 0.0).unwrap();
        let horizons = [1.0, 1.5, 2.0, 2.5, 3.0];
        let fit = decay_fit(&params, &profile, &horizons, 1e-12, &opts()).unwrap();
        assert!(fit.lambda > 0.0);
        for pair in fit.points.windows(2) {
            assert!(pair[1].1 <= pair[0].1 * (1.0 + 1e-6));
        }
    }

    #[test]
    fn deep_horizon_is_refused() {
        let params = unit();
        // predicted window pi * e^{-3.13 * 12} ~ 1.6e-16 < 1e-12: refuse
        let res = survival_bisect(&params, &MotionProfile::rest(), 12.0, 1e-12, &opts());
        assert!(matches!(res, Err(SearchError::ResolutionFloor { .. })));
        let res = survival_bisect(&params, &MotionProfile::rest(), 5.0, 1e-14, &opts());
        assert!(matches!(res, Err(SearchError::ToleranceTooTight(_))));
    }

    #[test]
    fn bad_seed_bracket_is_reported() {
        // the epsilon-lemma guarantee assumes a resting start; a strong
        // initial spin drives both seeds to the same side and the search
        // must refuse rather than pretend to bracket
        let params = unit();
        let spun = ClassifyOpts {
            omega0: 8.0,
            ..ClassifyOpts::default()
        };
        let res = survival_bisect(&params, &MotionProfile::rest(), 5.0, 1e-10, &spun);
        assert!(matches!(res, Err(SearchError::InvalidSeedBracket { .. })));
    }

    #[test]
    fn search_works_on_spline_and_stop_profiles() {
        let params = unit();
        let spline = MotionProfile::spline(vec![
            (0.0, 0.0),
            (0.8, 0.9),
            (1.6, -0.3),
            (2.4, 0.6),
            (3.0, 0.0),
        ])
        .unwrap();
        let bracket = survival_bisect(&params, &spline, 3.0, 1e-10, &opts()).unwrap();
        let s = bracket.survivor.expect("survivor under spline forcing");
        assert_eq!(
            classify(&params, &spline, s, 3.0, &opts()).unwrap().sign(),
            0
        );

        let stopped = MotionProfile::stop_forever(
            crate::profile::ProfileSpec::Sinusoid {
                amplitude: 1.5,
                omega: 2.0,
                phase: 0.0,
            },
            2.0,
            1.0,
        )
        .unwrap();
        let bracket = survival_bisect(&params, &stopped, 3.0, 1e-10, &opts()).unwrap();
        let s = bracket.survivor.expect("survivor after the platform stops");
        assert_eq!(
            classify(&params, &stopped, s, 3.0, &opts()).unwrap().sign(),
            0
        );
    }

    #[test]
    fn openness_margin_deep_in_basin() {
        let params = unit();
        let d = openness_margin(
            &params,
            &MotionProfile::rest(),
            std::f64::consts::FRAC_PI_4,
            10.0,
            &opts(),
        )
        .unwrap();
        assert!(d >= 1e-3, "margin {d}");
    }

    #[test]
    fn openness_margin_near_basin_edge_is_small_but_positive() {
        let params = unit();
        let alpha0 = FRAC_PI_2 - 1e-8;
        // linearized flow: the surviving window at T = 10 has half-width
        // ~ (pi/2) e^{-31.3} ~ 4e-14, so this angle falls forward and its
        // margin is essentially its distance to the window edge, ~1e-8
        let d = openness_margin(&params, &MotionProfile::rest(), alpha0, 10.0, &opts()).unwrap();
        assert!(d > 1e-10, "margin {d}");
        assert!(d <= 1e-8 * 1.01, "margin {d} exceeds the linearized bound");
    }

    #[test]
    fn openness_margin_rejects_survivors() {
        let params = unit();
        let res = openness_margin(&params, &MotionProfile::rest(), FRAC_PI_2, 5.0, &opts());
        assert!(matches!(res, Err(SearchError::NotFallen { .. })));
    }

    #[test]
    fn openness_margin_positive_for_random_fallen_angles() {
        use rand::{Rng, SeedableRng};
        let params = unit();
        let profile = MotionProfile::sinusoid(3.0, 2.0, 0.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 12 {
            let alpha0: f64 = rng.gen_range(0.01..(PI - 0.01));
            let c = classify(&params, &profile, alpha0, 5.0, &opts()).unwrap();
            if !c.is_fallen() {
                continue;
            }
            let d = openness_margin(&params, &profile, alpha0, 5.0, &opts()).unwrap();
            assert!(d > 0.0);
            checked += 1;
        }
    }

    #[test]
    fn window_has_linearized_scale() {
        // cosh oracle: survive-to-T needs |delta0| cosh(lambda T) < Delta,
        // so the width is ~ 2 Delta e^{-lambda T} with Delta = O(1)
        let params = unit();
        let t = 3.0;
        let w = survival_window(&params, &MotionProfile::rest(), t, 1e-12, &opts())
            .unwrap()
            .width();
        let scale = 2.0 * (-params.lambda() * t).exp();
        assert!(
            w > 0.05 * scale && w < 20.0 * scale,
            "width {w} vs linearized scale {scale}"
        );
    }
}
