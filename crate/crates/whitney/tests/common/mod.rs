//! Shared oracles for the integration tests. These stay independent of
//! the integrator: the resting-platform pendulum is evaluated in closed
//! form through Jacobi elliptic functions (AGM + descending Landen),
//! cross-checked against 30-digit references frozen below.

use std::f64::consts::FRAC_PI_2;
use whitney::dynamics::RodParams;

/// Jacobi `cd(u, m) = cn/dn` by the arithmetic-geometric mean and the
/// descending Landen backward recursion.
pub fn jacobi_cd(u: f64, m: f64) -> f64 {
    if m == 0.0 {
        return u.cos();
    }
    let mut a = [0.0f64; 40];
    let mut c = [0.0f64; 40];
    a[0] = 1.0;
    let mut b = (1.0 - m).sqrt();
    c[0] = m.sqrt();
    let mut n = 0;
    while c[n].abs() > 1e-17 && n < 39 {
        let an = 0.5 * (a[n] + b);
        let bn = (a[n] * b).sqrt();
        c[n + 1] = 0.5 * (a[n] - b);
        a[n + 1] = an;
        b = bn;
        n += 1;
    }
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for i in (1..=n).rev() {
        phi = 0.5 * (phi + (c[i] / a[i] * phi.sin()).asin());
    }
    let sn = phi.sin();
    let cn = phi.cos();
    let dn = (1.0 - m * sn * sn).sqrt();
    cn / dn
}

/// Closed-form rod angle on a resting platform, released from rest at
/// `alpha0` with `|alpha0| < pi/2` measured from the forward floor:
/// in the hanging-pendulum coordinate `phi = alpha + pi/2` the motion is
/// a libration of amplitude `phi_max = alpha0 + pi/2`, and
/// `sin(phi/2) = sin(phi_max/2) cd(sqrt(g/L) t, m)` with
/// `m = sin^2(phi_max/2)`.
pub fn rest_pendulum_alpha(params: &RodParams, alpha0: f64, t: f64) -> f64 {
    let k = ((alpha0 + FRAC_PI_2) / 2.0).sin();
    2.0 * (k * jacobi_cd(params.lambda() * t, k * k)).asin() - FRAC_PI_2
}

/// Reference values for `alpha0 = 1`, `g = 9.81`, `L_eff = 1`, frozen
/// from an independent 30-digit multiple-precision evaluation of the
/// same closed form (rounded to f64).
pub const REST_ALPHA0_1_REFS: [(f64, f64); 4] = [
    (1.0, -2.396_378_018_665_602_4),
    (2.0, -3.916_723_610_409_81),
    (5.0, -4.081_736_219_901_833),
    (7.0, 0.951_486_738_740_154_4),
];

/// Sanity gate: the local oracle must reproduce the frozen references.
pub fn assert_oracle_consistent(params: &RodParams) {
    for (t, want) in REST_ALPHA0_1_REFS {
        let got = rest_pendulum_alpha(params, 1.0, t);
        assert!(
            (got - want).abs() < 1e-13,
            "pendulum oracle drift at t = {t}: {got} vs {want}"
        );
    }
}
