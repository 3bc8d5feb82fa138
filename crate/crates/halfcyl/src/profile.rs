//! Breakpoints w_k = (27/8)k^{3/2} and the smooth step ζ.
//!
//! ζ(t) = σ(t)/(σ(t)+σ(1−t)) with σ(t) = e^{−1/t} on t > 0, else 0. This is
//! C^∞, strictly increasing on (0,1), and satisfies ζ(t)+ζ(1−t) = 1 by
//! construction. The denominator σ(t)+σ(1−t) is bounded below by 2e^{−2} on
//! [0,1], so the quotient forms of ζ′ and ζ″ are well conditioned; σ itself
//! underflows for t ≲ 1/708, which just returns the correct limit 0.

use crate::error::{Error, Result};
use serde::Serialize;

pub const W1: f64 = 27.0 / 8.0;

fn sigma(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

// σ′(t) = σ(t)/t², σ″(t) = σ(t)(1−2t)/t⁴, both 0 for t ≤ 0
fn sigma_d1(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        sigma(t) / (t * t)
    }
}

fn sigma_d2(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        sigma(t) * (1.0 - 2.0 * t) / (t * t * t * t)
    }
}

/// (ζ, ζ′, ζ″) at t in one pass.
pub fn zeta_all(t: f64) -> [f64; 3] {
    if t <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    if t >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let u = sigma(t);
    let v = sigma(1.0 - t);
    let u1 = sigma_d1(t);
    let u2 = sigma_d2(t);
    // v(t) = σ(1−t): v′ = −σ′(1−t), v″ = +σ″(1−t)
    let v1 = -sigma_d1(1.0 - t);
    let v2 = sigma_d2(1.0 - t);
    let den = u + v;
    let z0 = u / den;
    let n1 = u1 * v - u * v1;
    let z1 = n1 / (den * den);
    let z2 = ((u2 * v - u * v2) * den - 2.0 * n1 * (u1 + v1)) / (den * den * den);
    [z0, z1, z2]
}

pub fn zeta(t: f64, order: u8) -> f64 {
    assert!(order <= 2, "order must be 0, 1, or 2");
    zeta_all(t)[order as usize]
}

/// Empirical derivative bounds of ζ from a dense scan; the working constants
/// downstream are all expressed through these.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CutoffProfile {
    pub sup_d1: f64,
    pub sup_d2: f64,
}

impl CutoffProfile {
    pub fn measure(n_points: usize) -> Self {
        assert!(n_points >= 2);
        let mut sup_d1 = 0.0f64;
        let mut sup_d2 = 0.0f64;
        for i in 0..n_points {
            let t = (i as f64 + 0.5) / n_points as f64;
            let z = zeta_all(t);
            sup_d1 = sup_d1.max(z[1].abs());
            sup_d2 = sup_d2.max(z[2].abs());
        }
        CutoffProfile { sup_d1, sup_d2 }
    }
}

impl Default for CutoffProfile {
    fn default() -> Self {
        Self::measure(100_000)
    }
}

pub fn w_of(k: u64) -> f64 {
    assert!(k >= 1);
    let kf = k as f64;
    3.375 * kf * kf.sqrt()
}

/// Unique k with w_k ≤ w < w_{k+1}.
pub fn band_of(w: f64) -> Result<u64> {
    if !(w >= W1) {
        return Err(Error::OutOfRange(format!("band_of needs w ≥ {W1}, got {w}")));
    }
    let mut k = ((w / 3.375).powf(2.0 / 3.0)).floor().max(1.0) as u64;
    while w_of(k + 1) <= w {
        k += 1;
    }
    while k > 1 && w_of(k) > w {
        k -= 1;
    }
    Ok(k)
}

/// w_{k+1} − w_k through the difference-of-powers identity
/// (27/8)(3k²+3k+1)/((k+1)^{3/2}+k^{3/2}), stable for large k.
pub fn gap(k: u64) -> f64 {
    assert!(k >= 1);
    let kf = k as f64;
    let k1 = kf + 1.0;
    3.375 * (3.0 * kf * kf + 3.0 * kf + 1.0) / (k1 * k1.sqrt() + kf * kf.sqrt())
}

/// (81/16)√k ≤ w_{k+1}−w_k ≤ (81/16)√(k+1), to 1e−9 relative.
pub fn gap_bounds_check(k: u64) -> bool {
    let g = gap(k);
    let lo = 5.0625 * (k as f64).sqrt();
    let hi = 5.0625 * ((k + 1) as f64).sqrt();
    let tol = 1e-9 * g;
    g >= lo - tol && g <= hi + tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn boundary_values_are_exact() {
        assert_eq!(zeta(0.0, 0), 0.0);
        assert_eq!(zeta(1.0, 0), 1.0);
        assert_eq!(zeta(-0.3, 0), 0.0);
        assert_eq!(zeta(1.7, 0), 1.0);
        for order in 1..=2 {
            assert_eq!(zeta(0.0, order), 0.0);
            assert_eq!(zeta(1.0, order), 0.0);
            assert_eq!(zeta(-2.0, order), 0.0);
            assert_eq!(zeta(3.0, order), 0.0);
        }
        // u = v at the midpoint, so the quotient is exactly one half
        assert_eq!(zeta(0.5, 0), 0.5);
    }

    #[test]
    fn symmetry_identity() {
        assert!((zeta(0.25, 0) + zeta(0.75, 0) - 1.0).abs() < 1e-12);
        for i in 0..1000 {
            let t = -0.5 + 2.0 * i as f64 / 999.0;
            let s = zeta(t, 0) + zeta(1.0 - t, 0);
            assert!((s - 1.0).abs() < 1e-12, "t = {t}: {s}");
        }
    }

    #[test]
    fn monotone_and_bounded() {
        // below t ≈ 1/708 the factor e^{−1/t} underflows and ζ′ is a clean 0;
        // strict positivity is testable on the representable interior
        for i in 0..1000 {
            let t = 0.002 + 0.996 * i as f64 / 999.0;
            let z = zeta_all(t);
            assert!(z[0] >= 0.0 && z[0] <= 1.0);
            assert!(z[1] > 0.0, "ζ′({t}) = {}", z[1]);
        }
        for i in 0..2000 {
            let t = -0.5 + 2.0 * i as f64 / 1999.0;
            assert!(zeta(t, 1) >= 0.0);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for i in 1..200 {
            let t = i as f64 / 200.0;
            let z = zeta_all(t);
            let d1 = (zeta(t + h, 0) - zeta(t - h, 0)) / (2.0 * h);
            let d2 = (zeta(t + h, 0) - 2.0 * zeta(t, 0) + zeta(t - h, 0)) / (h * h);
            assert!((z[1] - d1).abs() < 1e-6 * (1.0 + z[1].abs()), "t = {t}");
            assert!((z[2] - d2).abs() < 2e-3 * (1.0 + z[2].abs()), "t = {t}");
        }
    }

    #[test]
    fn profile_constants() {
        let p = CutoffProfile::measure(100_000);
        // ζ′(1/2) = 2 is the interior max for this σ
        assert!(p.sup_d1 >= 2.0 - 1e-6 && p.sup_d1 < 2.1, "sup_d1 = {}", p.sup_d1);
        assert!(p.sup_d2 > 2.0 && p.sup_d2 < 60.0, "sup_d2 = {}", p.sup_d2);
    }

    #[test]
    fn w_of_examples() {
        assert_eq!(w_of(1), 3.375);
        assert_relative_eq!(w_of(2), 3.375 * 2.0f64.powf(1.5) * 2.0 / 2.0, max_relative = 1e-14);
        assert_relative_eq!(w_of(2), 9.545941546018392, max_relative = 1e-12);
        assert_relative_eq!(w_of(6), 3.375 * 6.0f64.powf(1.5), max_relative = 1e-14);
        // (16/9)·w_k^{2/3} = 4k, the cancellation the scaled Laplacian leans on
        for k in 1..200u64 {
            let lhs = 16.0 / 9.0 * w_of(k).powf(2.0 / 3.0);
            assert_relative_eq!(lhs, 4.0 * k as f64, max_relative = 1e-12);
        }
    }

    #[test]
    fn band_of_examples_and_halfopen_convention() {
        assert_eq!(band_of(3.375).unwrap(), 1);
        assert_eq!(band_of(10.0).unwrap(), 2);
        assert!(band_of(3.3749).is_err());
        for k in 2..1000u64 {
            assert_eq!(band_of(w_of(k)).unwrap(), k, "left endpoint k = {k}");
            assert_eq!(band_of(w_of(k) - 1e-9).unwrap(), k - 1, "just below k = {k}");
        }
    }

    #[test]
    fn gap_bounds() {
        for k in 1..=10_000u64 {
            assert!(gap_bounds_check(k), "k = {k}");
        }
        for k in [100_000u64, 999_999, 1_000_000] {
            assert!(gap_bounds_check(k), "k = {k}");
            // stable form agrees with the naive difference where that is safe
            let naive = w_of(k + 1) - w_of(k);
            assert_relative_eq!(gap(k), naive, max_relative = 1e-6);
        }
    }
}
