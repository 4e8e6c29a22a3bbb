//! Jacobi elliptic functions and the exact pendulum flow built on them.
//!
//! Parameter convention: `m = k²` throughout.

mod pendulum;

pub use pendulum::{pendulum_energy, pendulum_step, pendulum_step_reference};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Upper bound on AGM / Landen iterations; convergence is quadratic so this
/// is never reached for `m` representable below one.
const MAX_AGM_ITER: usize = 64;

/// `(sn, cn, dn)` evaluated at one `(u, m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticTriple<T> {
    pub sn: T,
    pub cn: T,
    pub dn: T,
}

fn check_parameter<T: Real>(m: T, closed_at_one: bool) -> Result<()> {
    let ok = m >= T::zero() && if closed_at_one { m <= T::one() } else { m < T::one() };
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(m.to_f64_lossy()))
    }
}

/// Complete elliptic integral of the first kind,
/// `K(m) = ∫₀^{π/2} dθ / √(1 − m sin²θ) = π / (2 AGM(1, √(1−m)))`.
pub fn elliptic_k<T: Real>(m: T) -> Result<T> {
    check_parameter(m, false)?;
    let mut a = T::one();
    let mut b = (T::one() - m).sqrt();
    for _ in 0..MAX_AGM_ITER {
        if (a - b).abs() <= T::epsilon() * a {
            break;
        }
        let next = (a + b) / (T::one() + T::one());
        b = (a * b).sqrt();
        a = next;
    }
    Ok(T::FRAC_PI_2() / a)
}

/// Jacobi elliptic functions by descending Landen (AGM) transformation.
pub fn jacobi_sn_cn_dn<T: Real>(u: T, m: T) -> Result<EllipticTriple<T>> {
    check_parameter(m, true)?;
    if m == T::zero() {
        let (sn, cn) = u.sin_cos();
        return Ok(EllipticTriple { sn, cn, dn: T::one() });
    }
    if m == T::one() {
        let sech = T::one() / u.cosh();
        return Ok(EllipticTriple {
            sn: u.tanh(),
            cn: sech,
            dn: sech,
        });
    }

    let two = T::one() + T::one();
    // ratios[n] = c_n / a_n for n = 1..=N
    let mut ratios = [T::zero(); MAX_AGM_ITER];
    let mut a = T::one();
    let mut b = (T::one() - m).sqrt();
    let mut c = m.sqrt();
    let mut n = 0;
    while c.abs() > T::epsilon() && n < MAX_AGM_ITER {
        let a_next = (a + b) / two;
        c = (a - b) / two;
        b = (a * b).sqrt();
        a = a_next;
        ratios[n] = c / a;
        n += 1;
    }

    let mut phi = u * a * two.powi(n as i32);
    for i in (0..n).rev() {
        phi = (phi + (ratios[i] * phi.sin()).asin()) / two;
    }
    let (sn, cn) = phi.sin_cos();
    // dn² = (1 − m) + m cn²: no cancellation, unlike cn / cos(φ₁ − φ₀) near sn = ±1.
    let dn = ((T::one() - m) + m * cn * cn).sqrt();
    Ok(EllipticTriple { sn, cn, dn })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Composite Gauss–Legendre (8 nodes) on `n` panels of `[a, b]`.
    fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        const X: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
        const W: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let mid = a + (p as f64 + 0.5) * h;
                X.iter().zip(W).map(|(&x, w)| w * (f(mid - x * h / 2.0) + f(mid + x * h / 2.0))).sum::<f64>() * h / 2.0
            })
            .sum()
    }

    #[test]
    fn k_at_zero_is_half_pi() {
        assert_eq!(elliptic_k(0.0f64).unwrap(), PI / 2.0);
    }

    #[test]
    fn k_matches_quadrature_at_one_half() {
        let oracle = gauss_legendre(|t| 1.0 / (1.0 - 0.5 * t.sin().powi(2)).sqrt(), 0.0, PI / 2.0, 64);
        let k = elliptic_k(0.5f64).unwrap();
        assert!((k - oracle).abs() < 1e-12 * oracle, "{k} vs {oracle}");
        // frozen: K(1/2) = 1.854074677301372
        assert!((k - 1.854_074_677_301_372).abs() < 1e-13);
    }

    #[test]
    fn k_diverges_logarithmically_near_one() {
        let k = elliptic_k(1.0 - 1e-12f64).unwrap();
        assert!(k.is_finite() && k > 14.0, "{k}");
    }

    #[test]
    fn k_rejects_out_of_domain() {
        assert!(matches!(elliptic_k(1.0f64), Err(Error::Domain(_))));
        assert!(matches!(elliptic_k(-0.1f64), Err(Error::Domain(_))));
        assert!(matches!(jacobi_sn_cn_dn(0.3, 1.5f64), Err(Error::Domain(_))));
        assert!(matches!(jacobi_sn_cn_dn(0.3, -1e-3f64), Err(Error::Domain(_))));
    }

    #[test]
    fn circular_and_hyperbolic_limits() {
        for &u in &[-2.0, -0.3, 0.0, 0.7, 5.0] {
            let t = jacobi_sn_cn_dn(u, 0.0f64).unwrap();
            assert_eq!((t.sn, t.cn, t.dn), (u.sin(), u.cos(), 1.0));
            let h = jacobi_sn_cn_dn(u, 1.0f64).unwrap();
            assert!((h.sn - u.tanh()).abs() < 1e-15);
            assert!((h.cn - 1.0 / u.cosh()).abs() < 1e-15);
            assert!((h.dn - 1.0 / u.cosh()).abs() < 1e-15);
        }
    }

    #[test]
    fn quarter_period_identity() {
        let k = elliptic_k(0.7f64).unwrap();
        let t = jacobi_sn_cn_dn(k, 0.7f64).unwrap();
        assert!((t.sn - 1.0).abs() < 1e-12);
        assert!(t.cn.abs() < 1e-12);
        assert!((t.dn - 0.3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_cn_dn() {
        // d sn/du = cn dn, checked by a fourth-order central difference.
        for &(u, m) in &[(0.4, 0.3), (1.7, 0.9), (-2.2, 0.99), (0.1, 0.5)] {
            let h = 1e-3;
            let f = |x: f64| jacobi_sn_cn_dn(x, m).unwrap().sn;
            let d = (f(u - 2.0 * h) - 8.0 * f(u - h) + 8.0 * f(u + h) - f(u + 2.0 * h)) / (12.0 * h);
            let t = jacobi_sn_cn_dn(u, m).unwrap();
            assert!((d - t.cn * t.dn).abs() < 1e-10, "u={u} m={m}");
        }
    }

    #[test]
    fn single_precision_is_supported() {
        let t = jacobi_sn_cn_dn(0.8f32, 0.5f32).unwrap();
        let d = jacobi_sn_cn_dn(0.8f64, 0.5f64).unwrap();
        assert!((t.sn as f64 - d.sn).abs() < 1e-6);
        assert!((elliptic_k(0.5f32).unwrap() as f64 - 1.854_074_677_301_372).abs() < 1e-6);
    }

    proptest::proptest! {
        #[test]
        fn identities_hold(u in -20.0f64..20.0, m in 0.0f64..1.0) {
            let t = jacobi_sn_cn_dn(u, m).unwrap();
            proptest::prop_assert!((t.sn * t.sn + t.cn * t.cn - 1.0).abs() < 1e-12);
            proptest::prop_assert!((t.dn * t.dn + m * t.sn * t.sn - 1.0).abs() < 1e-12);
        }

        #[test]
        fn sn_has_period_four_k(u in -3.0f64..3.0, m in 0.0f64..0.999) {
            let k = elliptic_k(m).unwrap();
            let a = jacobi_sn_cn_dn(u, m).unwrap();
            let b = jacobi_sn_cn_dn(u + 4.0 * k, m).unwrap();
            proptest::prop_assert!((a.sn - b.sn).abs() < 1e-10);
        }
    }
}
