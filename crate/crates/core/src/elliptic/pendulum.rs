//! Exact flow of `H = ρ²/2 + k cos φ` for constant `k ≥ 0`.
//!
//! With `θ = φ − π` this is the ordinary pendulum `ρ²/2 − k cos θ` whose stable
//! point is `θ = 0`. Librating and rotating orbits are advanced with the
//! Jacobi addition theorem from the initial `(sn, cn, dn)`, which avoids any
//! incomplete elliptic integral.

use super::jacobi_sn_cn_dn;
use crate::scalar::{wrap_phase, Real};

/// Orbits whose energy is this close (relative) to the separatrix go to the reference integrator.
const SEPARATRIX_TOL: f64 = 1e-12;

/// Taylor order of the reference integrator.
const TAYLOR_ORDER: usize = 24;
/// Local error target of the reference integrator, relative to `max(1, |ρ|)`.
const REFERENCE_TOL: f64 = 1e-13;

/// `ρ²/2 + k cos φ`.
pub fn pendulum_energy<T: Real>(phi: T, rho: T, k_rate: T) -> T {
    rho * rho / (T::one() + T::one()) + k_rate * phi.cos()
}

/// Advances `(φ, ρ)` by `dtau` under `H = ρ²/2 + k_rate cos φ`; `φ` is returned wrapped to `[−π, π)`.
pub fn pendulum_step<T: Real>(phi: T, rho: T, k_rate: T, dtau: T) -> (T, T) {
    if k_rate == T::zero() {
        return (wrap_phase(phi + rho * dtau), rho);
    }
    if k_rate < T::zero() || dtau < T::zero() {
        return pendulum_step_reference(phi, rho, k_rate, dtau);
    }

    let two = T::one() + T::one();
    let theta = wrap_phase(phi - T::PI());
    let (s, c) = (theta / two).sin_cos();
    let kinetic = rho * rho / two;
    // E + k and E − k written without cancellation.
    let above_bottom = kinetic + two * k_rate * s * s;
    let from_separatrix = kinetic - two * k_rate * c * c;
    if above_bottom == T::zero() {
        return (wrap_phase(phi), rho);
    }
    let tol = T::lit(SEPARATRIX_TOL).max(T::epsilon() * T::lit(16.0));
    if from_separatrix.abs() <= tol * above_bottom {
        return pendulum_step_reference(phi, rho, k_rate, dtau);
    }

    let omega = k_rate.sqrt();
    let (theta_new, rho_new) = if from_separatrix < T::zero() {
        librate(s, c, rho, omega, above_bottom / (two * k_rate), dtau)
    } else {
        rotate(theta, rho, omega, two * k_rate / above_bottom, dtau)
    };
    (wrap_phase(theta_new + T::PI()), rho_new)
}

/// Librating orbit: `sin(θ/2) = √m sn(ωt + u₀)`, `cos(θ/2) = dn`, `ρ = 2ω√m cn`.
/// Works with `√m·sn` and `√m·cn` so that small amplitudes stay accurate.
fn librate<T: Real>(s0: T, d0: T, rho: T, omega: T, m: T, dtau: T) -> (T, T) {
    let two = T::one() + T::one();
    let c0 = rho / (two * omega);
    // Parameter rounding can push m a hair past one for orbits next to the separatrix tolerance.
    let m = m.min(T::one());
    let v = jacobi_sn_cn_dn(omega * dtau, m).expect("m in [0, 1]");
    let den = T::one() - s0 * s0 * v.sn * v.sn;
    let sn = (s0 * v.cn * v.dn + c0 * d0 * v.sn) / den;
    let cn = (c0 * v.cn - s0 * d0 * v.sn * v.dn) / den;
    let dn = (d0 * v.dn - s0 * c0 * v.sn * v.cn) / den;
    (two * sn.atan2(dn), two * omega * cn)
}

/// Rotating orbit: `θ/2 = am(ωt/√m′ + u₀, m′)`, `ρ = 2ω dn / √m′`, with `m′ = 2k/(E+k)`.
fn rotate<T: Real>(theta: T, rho: T, omega: T, m: T, dtau: T) -> (T, T) {
    let two = T::one() + T::one();
    // The flow commutes with (θ, ρ) → (−θ, −ρ), so only forward rotation is needed.
    let sign = rho.signum();
    let theta = theta * sign;
    let rho = rho.abs();
    let m = m.min(T::one());
    let root_m = m.sqrt();
    let (sn0, cn0) = (theta / two).sin_cos();
    let dn0 = rho * root_m / (two * omega);
    let v = jacobi_sn_cn_dn(omega * dtau / root_m, m).expect("m in [0, 1]");
    let den = T::one() - m * sn0 * sn0 * v.sn * v.sn;
    let sn = (sn0 * v.cn * v.dn + cn0 * dn0 * v.sn) / den;
    let cn = (cn0 * v.cn - sn0 * dn0 * v.sn * v.dn) / den;
    let dn = (dn0 * v.dn - m * sn0 * cn0 * v.sn * v.cn) / den;
    (sign * two * sn.atan2(cn), sign * two * omega * dn / root_m)
}

/// Adaptive high-order Taylor-series integration of `φ' = ρ`, `ρ' = k sin φ`.
///
/// Independent of the elliptic machinery; used as the separatrix fallback and as a test oracle.
pub fn pendulum_step_reference<T: Real>(phi: T, rho: T, k_rate: T, dtau: T) -> (T, T) {
    if k_rate == T::zero() || dtau == T::zero() {
        return (wrap_phase(phi + rho * dtau), rho);
    }
    let direction = dtau.signum();
    let total = dtau.abs();
    let tol = T::lit(REFERENCE_TOL).max(T::epsilon() * T::lit(4.0));

    let mut p = [T::zero(); TAYLOR_ORDER + 1];
    let mut r = [T::zero(); TAYLOR_ORDER + 1];
    let mut s = [T::zero(); TAYLOR_ORDER + 1];
    let mut c = [T::zero(); TAYLOR_ORDER + 1];
    let (mut x, mut y) = (phi, rho);
    let mut elapsed = T::zero();

    while elapsed < total {
        p[0] = x;
        r[0] = y;
        let (sin0, cos0) = x.sin_cos();
        s[0] = sin0;
        c[0] = cos0;
        for j in 0..TAYLOR_ORDER {
            let next = T::from_usize_lossy(j + 1);
            p[j + 1] = r[j] / next;
            r[j + 1] = k_rate * s[j] / next;
            let mut ds = T::zero();
            let mut dc = T::zero();
            for i in 1..=j + 1 {
                let w = T::from_usize_lossy(i) * p[i];
                ds = ds + w * c[j + 1 - i];
                dc = dc + w * s[j + 1 - i];
            }
            s[j + 1] = ds / next;
            c[j + 1] = -dc / next;
        }

        // Step size from the decay of the two highest-order coefficients.
        let scale = T::one().max(y.abs());
        let mut h = total - elapsed;
        for j in [TAYLOR_ORDER - 1, TAYLOR_ORDER] {
            let size = p[j].abs().max(r[j].abs());
            if size > T::zero() {
                let exponent = T::one() / T::from_usize_lossy(j);
                h = h.min(T::lit(0.5) * (tol * scale / size).powf(exponent));
            }
        }
        let h = h.min(total - elapsed);
        let hs = h * direction;

        let mut nx = p[TAYLOR_ORDER];
        let mut ny = r[TAYLOR_ORDER];
        for j in (0..TAYLOR_ORDER).rev() {
            nx = nx * hs + p[j];
            ny = ny * hs + r[j];
        }
        x = nx;
        y = ny;
        elapsed = if total - elapsed - h <= T::epsilon() * total { total } else { elapsed + h };
    }
    (wrap_phase(x), y)
}
