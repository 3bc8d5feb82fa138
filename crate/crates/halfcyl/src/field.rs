//! The blended oscillator f₀ and the decaying field f = f₀·e^{−w^{4/3}}.
//!
//! On the band w_k ≤ w < w_{k+1},
//!
//!   f₀(w,y) = (1−ζ(s))·cos(a_k·y) + ζ(s)·cos(a_{k+1}·y),
//!   s = (w−w_k)/(w_{k+1}−w_k),
//!
//! so f₀ interpolates between eigenfunctions of −Δ_y with eigenvalues 4k+1
//! and 4k+5, while the envelope exponent w^{4/3} has (d/dw)² + fall-off
//! matching: e^{−w^{4/3}} satisfies (∂²_w − V)e^{−w^{4/3}} with
//! V = (16/9)w^{2/3} − (4/9)w^{−2/3} and (16/9)w_k^{2/3} = 4k exactly. The
//! near-cancellation of V against |a|² across each band is what keeps
//! Δf·e^{+w^{4/3}} uniformly bounded.
//!
//! f itself underflows past w ≈ 137, so every evaluator reports the mantissa
//! f₀ together with log_envelope = −w^{4/3}, and all downstream checks
//! compare envelope-scaled quantities.

use crate::error::{Error, Result};
use crate::lattice::{build_sequence, LatticeVec, SequenceCertificate};
use crate::profile::{band_of, w_of, zeta_all};
use crate::rng::{self, mc_max, uniform_y};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylPoint {
    pub w: f64,
    y: [f64; 3],
}

fn wrap_angle(v: f64) -> f64 {
    let r = v.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl CylPoint {
    pub fn new(w: f64, y: [f64; 3]) -> Self {
        assert!(w >= 0.0, "axial coordinate must be non-negative");
        CylPoint { w, y: y.map(wrap_angle) }
    }

    /// Torus coordinates, each in [0, 2π).
    pub fn y(&self) -> [f64; 3] {
        self.y
    }
}

/// (w, y) ↦ (n·w, n·y mod 2π).
pub fn rescale(x: CylPoint, n: u64) -> CylPoint {
    assert!(n >= 1);
    let nf = n as f64;
    CylPoint::new(nf * x.w, x.y.map(|v| nf * v))
}

/// The envelope exponent E(w) = w^{4/3}, via the cube root so every module
/// computes bit-identical values.
pub fn envelope_exponent(w: f64) -> f64 {
    w * w.cbrt()
}

/// log form of the envelope comparison: (w−r)^{4/3} ≥ w^{4/3} − (4/3)w^{1/3}r,
/// i.e. e^{−(w−r)^{4/3}} ≤ e^{(4/3)w^{1/3}r}·e^{−w^{4/3}}. With
/// r = 3/(4w^{1/3}) the right factor is exactly e.
pub fn envelope_ineq_check(w: f64, r: f64) -> bool {
    assert!(r >= 0.0 && r <= w, "need 0 ≤ r ≤ w");
    let lhs = envelope_exponent(w - r);
    let rhs = envelope_exponent(w) - 4.0 / 3.0 * w.cbrt() * r;
    lhs >= rhs - 1e-12 * rhs.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FieldSample {
    pub f0: f64,
    pub grad_w: f64,
    pub grad_y: [f64; 3],
    /// Δf · e^{+w^{4/3}}
    pub lap_f_scaled: f64,
    /// −w^{4/3}
    pub log_envelope: f64,
}

struct BandLocal {
    k: u64,
    inv_dw: f64,
    /// ζ, ζ′, ζ″ at the band coordinate s
    z: [f64; 3],
    cos_k: f64,
    cos_k1: f64,
    sin_k: f64,
    sin_k1: f64,
}

pub struct Field {
    seq: Vec<LatticeVec>,
    cert: SequenceCertificate,
    k_top: u64,
}

impl Field {
    /// Build with bands 2..=k_top usable; the sequence extends one member
    /// past k_top because band k blends a_k with a_{k+1}.
    pub fn with_bands(k_top: u64) -> Self {
        assert!(k_top >= 2);
        let (seq, cert) = build_sequence(k_top + 1);
        Field { seq, cert, k_top }
    }

    pub fn k_top(&self) -> u64 {
        self.k_top
    }

    pub fn certificate(&self) -> &SequenceCertificate {
        &self.cert
    }

    pub fn lattice(&self, k: u64) -> &LatticeVec {
        assert!(k >= 1 && k <= self.k_top + 1);
        &self.seq[(k - 1) as usize]
    }

    /// Smallest admissible w.
    pub fn w_min(&self) -> f64 {
        w_of(2)
    }

    /// Exclusive upper end of the last usable band.
    pub fn w_max(&self) -> f64 {
        w_of(self.k_top + 1)
    }

    fn band_local(&self, x: &CylPoint) -> Result<BandLocal> {
        if !(x.w >= w_of(2)) {
            return Err(Error::OutOfRange(format!(
                "field is defined for w ≥ w_2 = {:.6}, got {}",
                w_of(2),
                x.w
            )));
        }
        let k = band_of(x.w)?;
        if k > self.k_top {
            return Err(Error::OutOfRange(format!(
                "w = {} in band {k} but only bands ≤ {} are built",
                x.w, self.k_top
            )));
        }
        let wk = w_of(k);
        let wk1 = w_of(k + 1);
        let inv_dw = 1.0 / (wk1 - wk);
        let s = (x.w - wk) * inv_dw;
        let a = self.lattice(k).coords;
        let a1 = self.lattice(k + 1).coords;
        let phase = |a: [i64; 3]| -> f64 {
            a[0] as f64 * x.y[0] + a[1] as f64 * x.y[1] + a[2] as f64 * x.y[2]
        };
        let (sin_k, cos_k) = phase(a).sin_cos();
        let (sin_k1, cos_k1) = phase(a1).sin_cos();
        Ok(BandLocal { k, inv_dw, z: zeta_all(s), cos_k, cos_k1, sin_k, sin_k1 })
    }

    pub fn f0(&self, x: &CylPoint) -> Result<f64> {
        let b = self.band_local(x)?;
        Ok((1.0 - b.z[0]) * b.cos_k + b.z[0] * b.cos_k1)
    }

    pub fn grad_f0(&self, x: &CylPoint) -> Result<(f64, [f64; 3])> {
        let b = self.band_local(x)?;
        let gw = b.z[1] * b.inv_dw * (b.cos_k1 - b.cos_k);
        let a = self.lattice(b.k).coords;
        let a1 = self.lattice(b.k + 1).coords;
        let gy = std::array::from_fn(|i| {
            -(1.0 - b.z[0]) * b.sin_k * a[i] as f64 - b.z[0] * b.sin_k1 * a1[i] as f64
        });
        Ok((gw, gy))
    }

    /// Δf · e^{+w^{4/3}}, from the four analytic terms
    ///   (1−ζ)·B_k·cos(a_k·y) + ζ·B_{k+1}·cos(a_{k+1}·y)
    ///   − (8/3)w^{1/3}·ζ′/Δw·(cos_{k+1}−cos_k) + ζ″/Δw²·(cos_{k+1}−cos_k)
    /// with B_j = (16/9)w^{2/3} − (4/9)w^{−2/3} − |a_j|².
    pub fn lap_f_scaled(&self, x: &CylPoint) -> Result<f64> {
        let b = self.band_local(x)?;
        let c = x.w.cbrt();
        let w23 = c * c;
        let pot = 16.0 / 9.0 * w23 - 4.0 / 9.0 / w23;
        let bk = pot - (4 * b.k + 1) as f64;
        let bk1 = pot - (4 * b.k + 5) as f64;
        let dcos = b.cos_k1 - b.cos_k;
        Ok((1.0 - b.z[0]) * bk * b.cos_k + b.z[0] * bk1 * b.cos_k1
            - 8.0 / 3.0 * c * b.z[1] * b.inv_dw * dcos
            + b.z[2] * b.inv_dw * b.inv_dw * dcos)
    }

    pub fn sample(&self, x: &CylPoint) -> Result<FieldSample> {
        let f0 = self.f0(x)?;
        let (grad_w, grad_y) = self.grad_f0(x)?;
        let lap = self.lap_f_scaled(x)?;
        Ok(FieldSample {
            f0,
            grad_w,
            grad_y,
            lap_f_scaled: lap,
            log_envelope: -envelope_exponent(x.w),
        })
    }

    /// Empirical working constants over bands k_min..=k_max.
    pub fn measure_constants(
        &self,
        k_min: u64,
        k_max: u64,
        samples_per_band: u64,
        seed: u64,
    ) -> Result<FieldConstants> {
        if k_min < 2 || k_max > self.k_top || k_min > k_max {
            return Err(Error::OutOfRange(format!(
                "constants need 2 ≤ k_min ≤ k_max ≤ {}, got [{k_min}, {k_max}]",
                self.k_top
            )));
        }
        let mut grad_over_sqrtk_band_max = Vec::new();
        let mut lap_band_max = Vec::new();
        for k in k_min..=k_max {
            let (wk, wk1) = (w_of(k), w_of(k + 1));
            let band_seed = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(k);
            let g = mc_max(samples_per_band, band_seed, |rng| {
                let w = rng::uniform_in(rng, wk, wk1);
                let x = CylPoint::new(w, uniform_y(rng));
                let (gw, gy) = self.grad_f0(&x).unwrap();
                (gw * gw + gy.iter().map(|v| v * v).sum::<f64>()).sqrt()
            });
            let l = mc_max(samples_per_band, band_seed ^ 0xabcd, |rng| {
                let w = rng::uniform_in(rng, wk, wk1);
                let x = CylPoint::new(w, uniform_y(rng));
                self.lap_f_scaled(&x).unwrap().abs()
            });
            grad_over_sqrtk_band_max.push(g / (k as f64).sqrt());
            lap_band_max.push(l);
        }
        let sup_g = grad_over_sqrtk_band_max.iter().cloned().fold(0.0, f64::max);
        let sup_l = lap_band_max.iter().cloned().fold(0.0, f64::max);
        Ok(FieldConstants {
            k_min,
            k_max,
            samples_per_band,
            seed,
            c0: 1.05 * sup_g,
            c1: 1.05 * sup_l,
            grad_over_sqrtk_band_max,
            lap_band_max,
        })
    }
}

/// Working constants: C₀ bounds |∇f₀|/√k, C₁ bounds |Δf|·e^{+w^{4/3}}, both
/// frozen as 1.05 × the sampled band maxima.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldConstants {
    pub k_min: u64,
    pub k_max: u64,
    pub samples_per_band: u64,
    pub seed: u64,
    pub c0: f64,
    pub c1: f64,
    pub grad_over_sqrtk_band_max: Vec<f64>,
    pub lap_band_max: Vec<f64>,
}

impl FieldConstants {
    /// Least-squares slope of band-max |Δf|·e^{w^{4/3}} against k; a flat
    /// trend is the evidence that C₁ does not grow with k.
    pub fn lap_trend_slope(&self) -> f64 {
        let n = self.lap_band_max.len() as f64;
        let ks: Vec<f64> = (self.k_min..=self.k_max).map(|k| k as f64).collect();
        let mean_k = ks.iter().sum::<f64>() / n;
        let mean_l = self.lap_band_max.iter().sum::<f64>() / n;
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, l) in ks.iter().zip(self.lap_band_max.iter()) {
            num += (k - mean_k) * (l - mean_l);
            den += (k - mean_k) * (k - mean_k);
        }
        num / den
    }
}
