//! Deterministic CSV and JSON emission. All floating-point columns use
//! 17 significant digits so files round-trip bit-exactly; identical
//! inputs produce identical bytes.

use crate::classify::Classification;
use crate::dynamics::Mode;
use crate::experiments::EndMapTable;
use crate::integrate::Trajectory;
use crate::search::DecayFit;
use std::io::{self, Write};

/// One float, 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn outcome_label(c: &Classification) -> &'static str {
    match c {
        Classification::FellForward { .. } => "fell_forward",
        Classification::FellBackward { .. } => "fell_backward",
        Classification::Survived { .. } => "survived",
    }
}

fn mode_label(mode: Mode) -> &'static str {
    match mode {
        Mode::Free => "free",
        Mode::Absorbing => "absorbing",
        Mode::SmoothStick { .. } => "smooth_stick",
    }
}

/// Trajectory CSV: `t,alpha,omega,f,ddf` (SI units, header row).
pub fn write_trajectory_csv<W: Write>(mut out: W, traj: &Trajectory) -> io::Result<()> {
    writeln!(out, "t,alpha,omega,f,ddf")?;
    for s in &traj.samples {
        let (f, _, ddf) = traj.profile.eval(s.t).map_err(io::Error::other)?;
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(s.t),
            fmt_f64(s.alpha),
            fmt_f64(s.omega),
            fmt_f64(f),
            fmt_f64(ddf)
        )?;
    }
    Ok(())
}

/// End-map CSV: `alpha0,alpha_final,outcome,t_fall` (empty `t_fall` for
/// survivors).
pub fn write_end_map_csv<W: Write>(mut out: W, table: &EndMapTable) -> io::Result<()> {
    writeln!(out, "alpha0,alpha_final,outcome,t_fall")?;
    for row in &table.rows {
        let t_fall = row.outcome.t_fall().map(fmt_f64).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(row.alpha0),
            fmt_f64(row.alpha_final),
            outcome_label(&row.outcome),
            t_fall
        )?;
    }
    Ok(())
}

/// Decay-fit points CSV: `horizon,width,log_width`.
pub fn write_decay_points_csv<W: Write>(mut out: W, fit: &DecayFit) -> io::Result<()> {
    writeln!(out, "horizon,width,log_width")?;
    for &(t, w) in &fit.points {
        writeln!(out, "{},{},{}", fmt_f64(t), fmt_f64(w), fmt_f64(w.ln()))?;
    }
    Ok(())
}

/// Classification batch CSV: `index,alpha0,outcome,t_fall`.
pub fn write_classification_csv<W: Write>(
    mut out: W,
    rows: &[(f64, Classification)],
) -> io::Result<()> {
    writeln!(out, "index,alpha0,outcome,t_fall")?;
    for (i, (alpha0, c)) in rows.iter().enumerate() {
        let t_fall = c.t_fall().map(fmt_f64).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{}",
            i,
            fmt_f64(*alpha0),
            outcome_label(c),
            t_fall
        )?;
    }
    Ok(())
}

/// Pretty JSON with a trailing newline; serde_json's output is
/// deterministic for our derived types (struct field order).
pub fn to_json_line<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Human-readable mode tag used in CLI output file names and summaries.
pub fn mode_name(mode: Mode) -> &'static str {
    mode_label(mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{RodParams, State};
    use crate::integrate::{integrate, IntegrateOpts};
    use crate::profile::MotionProfile;

    #[test]
    fn trajectory_csv_has_header_and_rows() {
        let params = RodParams::default_unit();
        let profile = MotionProfile::rest();
        let traj = integrate(
            &params,
            &profile,
            Mode::Free,
            State::at_rest(1.0),
            1.0,
            &IntegrateOpts::rk4(0.01),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,alpha,omega,f,ddf");
        let first = lines.next().unwrap();
        assert!(
            first.starts_with("0.0000000000000000e0,1.0000000000000000e0"),
            "{first}"
        );
        assert_eq!(text.lines().count(), traj.samples.len() + 1);
    }

    #[test]
    fn float_format_round_trips() {
        for &x in &[
            0.0,
            1.0,
            std::f64::consts::PI,
            -2.2250738585072014e-308,
            0.1 + 0.2,
            9.81,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }
}
