//! Node-centered masked grid over [w_lo, w_hi] × T³.
//!
//! Nodes: w_i = w_lo + i·dw (i = 0..n_w−1, dw = (w_hi−w_lo)/(n_w−1)),
//! y_j = i_j·dy (dy = 2π/n_y, periodic). A node is "in Ω" if its center is;
//! the unknowns of the Dirichlet system are the Ω nodes with 0 < iw < n_w−1.

use crate::error::{Error, Result};
use crate::field::{CylPoint, Field};
use crate::omega::{Omega, OmegaParams};
use rayon::prelude::*;
use std::f64::consts::TAU;
use std::io::{Read, Write};
use std::path::Path;

const SENTINEL: u32 = u32::MAX;
const MAGIC: &[u8; 8] = b"HCGRID01";

pub struct MaskedGrid {
    pub w_lo: f64,
    pub w_hi: f64,
    pub n_w: usize,
    pub n_y: usize,
    pub dw: f64,
    pub dy: f64,
    /// node center lies in Ω
    pub mask: Vec<bool>,
    /// per-node solution values; exactly 0 on non-Ω and w-boundary nodes
    pub values: Vec<f64>,
    /// values carry the e^{+w^{4/3}} scaling
    pub scaled: bool,
    /// h the mask was built with (0 for synthetic masks)
    pub h: f64,
    unknown_of: Vec<u32>,
    nodes: Vec<u64>,
}

impl MaskedGrid {
    /// Ω mask from node-center membership.
    pub fn discretize(
        field: &Field,
        band: (f64, f64),
        resolution: (usize, usize),
        p: &OmegaParams,
    ) -> Result<Self> {
        let (w_lo, w_hi) = band;
        let (n_w, n_y) = resolution;
        if !(w_lo >= field.w_min()) {
            return Err(Error::OutOfRange(format!(
                "band start {w_lo} below w_2 = {:.6}",
                field.w_min()
            )));
        }
        if !(w_hi > w_lo) || !(w_hi <= field.w_max()) {
            return Err(Error::OutOfRange(format!(
                "band end {w_hi} outside ({w_lo}, {:.4}]",
                field.w_max()
            )));
        }
        if n_w < 8 || n_y < 8 {
            return Err(Error::OutOfRange(format!(
                "resolution must be at least 8×8, got {n_w}×{n_y}"
            )));
        }
        let om = Omega::new(field, p.clone());
        let dw = (w_hi - w_lo) / (n_w - 1) as f64;
        let dy = TAU / n_y as f64;
        let slab = n_y * n_y * n_y;
        let mut mask = vec![false; n_w * slab];
        mask.par_chunks_mut(slab).enumerate().for_each(|(iw, chunk)| {
            let w = w_lo + iw as f64 * dw;
            for (j, m) in chunk.iter_mut().enumerate() {
                let i2 = j % n_y;
                let i1 = (j / n_y) % n_y;
                let i0 = j / (n_y * n_y);
                let y = [i0 as f64 * dy, i1 as f64 * dy, i2 as f64 * dy];
                *m = om.in_omega(&CylPoint::new(w, y)).unwrap();
            }
        });
        let mut g = MaskedGrid {
            w_lo,
            w_hi,
            n_w,
            n_y,
            dw,
            dy,
            values: vec![0.0; mask.len()],
            scaled: false,
            h: p.h,
            mask,
            unknown_of: Vec::new(),
            nodes: Vec::new(),
        };
        g.rebuild_index();
        if g.nodes.is_empty() {
            return Err(Error::EmptyMask(format!(
                "no interior node center lies in Ω at h = {} and resolution {n_w}×{n_y}",
                p.h
            )));
        }
        Ok(g)
    }

    /// Grid with a caller-supplied mask; used by synthetic test problems.
    pub fn with_mask(w_lo: f64, w_hi: f64, n_w: usize, n_y: usize, mask: Vec<bool>) -> Result<Self> {
        if !(w_hi > w_lo) || n_w < 3 || n_y < 4 {
            return Err(Error::OutOfRange(format!(
                "need w_hi > w_lo and n_w ≥ 3, n_y ≥ 4, got [{w_lo}, {w_hi}] at {n_w}×{n_y}"
            )));
        }
        let slab = n_y * n_y * n_y;
        if mask.len() != n_w * slab {
            return Err(Error::OutOfRange(format!(
                "mask length {} does not match {n_w}×{n_y}³ nodes",
                mask.len()
            )));
        }
        let mut g = MaskedGrid {
            w_lo,
            w_hi,
            n_w,
            n_y,
            dw: (w_hi - w_lo) / (n_w - 1) as f64,
            dy: TAU / n_y as f64,
            values: vec![0.0; mask.len()],
            scaled: false,
            h: 0.0,
            mask,
            unknown_of: Vec::new(),
            nodes: Vec::new(),
        };
        g.rebuild_index();
        if g.nodes.is_empty() {
            return Err(Error::EmptyMask("supplied mask has no interior node".into()));
        }
        Ok(g)
    }

    /// Synthetic grid whose Ω is the whole band (mask everywhere true); used
    /// by manufactured-solution convergence tests.
    pub fn full_band(w_lo: f64, w_hi: f64, n_w: usize, n_y: usize) -> Self {
        let mask = vec![true; n_w * n_y * n_y * n_y];
        Self::with_mask(w_lo, w_hi, n_w, n_y, mask).expect("all-true mask is never empty")
    }

    fn rebuild_index(&mut self) {
        let n = self.mask.len();
        self.unknown_of = vec![SENTINEL; n];
        self.nodes.clear();
        for nd in 0..n {
            let iw = nd / (self.n_y * self.n_y * self.n_y);
            if self.mask[nd] && iw > 0 && iw + 1 < self.n_w {
                self.unknown_of[nd] = self.nodes.len() as u32;
                self.nodes.push(nd as u64);
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.mask.len()
    }

    pub fn n_unknowns(&self) -> usize {
        self.nodes.len()
    }

    /// Fraction of all nodes whose center lies in Ω.
    pub fn mask_fraction(&self) -> f64 {
        self.mask.iter().filter(|&&m| m).count() as f64 / self.mask.len() as f64
    }

    #[inline]
    pub fn decode(&self, nd: usize) -> (usize, usize, usize, usize) {
        let ny = self.n_y;
        let i2 = nd % ny;
        let r = nd / ny;
        let i1 = r % ny;
        let r = r / ny;
        let i0 = r % ny;
        (r / ny, i0, i1, i2)
    }

    #[inline]
    pub fn encode(&self, iw: usize, i0: usize, i1: usize, i2: usize) -> usize {
        ((iw * self.n_y + i0) * self.n_y + i1) * self.n_y + i2
    }

    #[inline]
    pub fn unknown_index(&self, nd: usize) -> Option<usize> {
        let u = self.unknown_of[nd];
        if u == SENTINEL {
            None
        } else {
            Some(u as usize)
        }
    }

    #[inline]
    pub fn node_of_unknown(&self, u: usize) -> usize {
        self.nodes[u] as usize
    }

    pub fn w_at(&self, iw: usize) -> f64 {
        self.w_lo + iw as f64 * self.dw
    }

    pub fn point_of(&self, nd: usize) -> CylPoint {
        let (iw, i0, i1, i2) = self.decode(nd);
        CylPoint::new(
            self.w_at(iw),
            [i0 as f64 * self.dy, i1 as f64 * self.dy, i2 as f64 * self.dy],
        )
    }

    /// Scatter an unknown-vector into a full per-node array (zeros elsewhere).
    pub fn scatter(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nodes.len());
        let mut full = vec![0.0; self.n_nodes()];
        for (u, &nd) in self.nodes.iter().enumerate() {
            full[nd as usize] = x[u];
        }
        full
    }

    pub fn gather(&self, full: &[f64]) -> Vec<f64> {
        assert_eq!(full.len(), self.n_nodes());
        self.nodes.iter().map(|&nd| full[nd as usize]).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.dw * self.dy * self.dy * self.dy
    }

    /// Multilinear interpolation of `values` at x; w clamps to the band,
    /// y wraps periodically.
    pub fn interp(&self, values: &[f64], x: &CylPoint) -> f64 {
        assert_eq!(values.len(), self.n_nodes());
        let tw = ((x.w - self.w_lo) / self.dw).clamp(0.0, (self.n_w - 1) as f64);
        let iw0 = (tw.floor() as usize).min(self.n_w - 2);
        let fw = tw - iw0 as f64;
        let y = x.y();
        let mut iy = [0usize; 3];
        let mut fy = [0.0f64; 3];
        for j in 0..3 {
            let t = y[j] / self.dy;
            let i = t.floor() as isize;
            fy[j] = t - i as f64;
            iy[j] = i.rem_euclid(self.n_y as isize) as usize;
        }
        let mut acc = 0.0;
        for corner in 0..16u32 {
            let cw = (corner & 1) as usize;
            let c0 = ((corner >> 1) & 1) as usize;
            let c1 = ((corner >> 2) & 1) as usize;
            let c2 = ((corner >> 3) & 1) as usize;
            let wgt = (if cw == 1 { fw } else { 1.0 - fw })
                * (if c0 == 1 { fy[0] } else { 1.0 - fy[0] })
                * (if c1 == 1 { fy[1] } else { 1.0 - fy[1] })
                * (if c2 == 1 { fy[2] } else { 1.0 - fy[2] });
            if wgt == 0.0 {
                continue;
            }
            let nd = self.encode(
                iw0 + cw,
                (iy[0] + c0) % self.n_y,
                (iy[1] + c1) % self.n_y,
                (iy[2] + c2) % self.n_y,
            );
            acc += wgt * values[nd];
        }
        acc
    }

    /// Binary dump: magic "HCGRID01", version u32, flags u32 (bit0 = scaled),
    /// n_w u64, n_y u64, then w_lo, w_hi, dw, dy, h as f64, then n mask bytes,
    /// then n little-endian f64 values.
    pub fn dump(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(MAGIC)?;
        out.write_all(&1u32.to_le_bytes())?;
        out.write_all(&(self.scaled as u32).to_le_bytes())?;
        out.write_all(&(self.n_w as u64).to_le_bytes())?;
        out.write_all(&(self.n_y as u64).to_le_bytes())?;
        for v in [self.w_lo, self.w_hi, self.dw, self.dy, self.h] {
            out.write_all(&v.to_le_bytes())?;
        }
        let bytes: Vec<u8> = self.mask.iter().map(|&m| m as u8).collect();
        out.write_all(&bytes)?;
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut inp = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        inp.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Config("not a grid dump (bad magic)".into()));
        }
        let mut b4 = [0u8; 4];
        inp.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != 1 {
            return Err(Error::Config("unsupported grid dump version".into()));
        }
        inp.read_exact(&mut b4)?;
        let scaled = u32::from_le_bytes(b4) & 1 == 1;
        let mut b8 = [0u8; 8];
        inp.read_exact(&mut b8)?;
        let n_w = u64::from_le_bytes(b8) as usize;
        inp.read_exact(&mut b8)?;
        let n_y = u64::from_le_bytes(b8) as usize;
        let mut fs = [0.0f64; 5];
        for f in &mut fs {
            inp.read_exact(&mut b8)?;
            *f = f64::from_le_bytes(b8);
        }
        let n = n_w * n_y * n_y * n_y;
        let mut mask_bytes = vec![0u8; n];
        inp.read_exact(&mut mask_bytes)?;
        let mut values = vec![0.0f64; n];
        for v in &mut values {
            inp.read_exact(&mut b8)?;
            *v = f64::from_le_bytes(b8);
        }
        let mut g = MaskedGrid {
            w_lo: fs[0],
            w_hi: fs[1],
            n_w,
            n_y,
            dw: fs[2],
            dy: fs[3],
            h: fs[4],
            mask: mask_bytes.into_iter().map(|b| b != 0).collect(),
            values,
            scaled,
            unknown_of: Vec::new(),
            nodes: Vec::new(),
        };
        g.rebuild_index();
        Ok(g)
    }
}
