//! Periodic lattice, momentum lattice and the discrete Fourier transform.
//!
//! Spectral arrays use the raw (unnormalized) DFT in FFT order:
//! index `j < n/2` carries wavenumber `2πj/L`, index `j >= n/2` carries
//! `2π(j-n)/L`. Lattice sums weighted by `h^dim` approximate integrals over
//! the box, so by Parseval `h^dim Σ_x |f|^2 = (h^dim / N) Σ_k |f̂|^2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Plain-data description of a lattice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub box_length: f64,
    #[serde(rename = "m")]
    pub mass: f64,
    #[serde(rename = "lambda")]
    pub coupling: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n, self.box_length, self.mass, self.coupling)
    }
}

#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    n: usize,
    box_length: f64,
    mass: f64,
    coupling: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Per-axis wavenumbers in FFT order.
    axis_k: Vec<f64>,
    /// `|k|^2` for every spectral index.
    k2: Vec<f64>,
    /// `μ(k) = (m^2 + |k|^2)^{1/2}` for every spectral index.
    mu: Vec<f64>,
    /// Spectral indices kept by the 1/2-rule truncation.
    dealias_mask: Vec<bool>,
}

impl Grid {
    /// Validates the parameters and plans the transforms.
    pub fn new(dim: usize, n: usize, box_length: f64, mass: f64, coupling: f64) -> Result<Grid> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1, 2 or 3 (got {dim})")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8 (got {n})"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!("box_length must be > 0 (got {box_length})")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidGrid(format!("mass must be > 0 (got {mass})")));
        }
        if !(coupling.is_finite() && coupling >= 0.0) {
            return Err(Error::InvalidGrid(format!("coupling must be >= 0 (got {coupling})")));
        }

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        let dk = 2.0 * PI / box_length;
        let axis_k: Vec<f64> = (0..n).map(|j| dk * signed_index(j, n) as f64).collect();
        let total = n.pow(dim as u32);
        let mut k2 = Vec::with_capacity(total);
        let mut dealias_mask = Vec::with_capacity(total);
        let quarter = (n / 4) as i64;
        for idx in 0..total {
            let mut s = 0.0;
            let mut keep = true;
            let mut rem = idx;
            for _ in 0..dim {
                let j = rem % n;
                rem /= n;
                s += axis_k[j] * axis_k[j];
                keep &= signed_index(j, n).abs() < quarter;
            }
            k2.push(s);
            dealias_mask.push(keep);
        }
        let mu = k2.iter().map(|&q| (mass * mass + q).sqrt()).collect();

        Ok(Grid {
            inner: Arc::new(GridInner {
                dim,
                n,
                box_length,
                mass,
                coupling,
                forward,
                inverse,
                axis_k,
                k2,
                mu,
                dealias_mask,
            }),
        })
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            dim: self.dim(),
            n: self.n(),
            box_length: self.box_length(),
            mass: self.mass(),
            coupling: self.coupling(),
        }
    }

    /// Same lattice and mass with a different coupling constant.
    pub fn with_coupling(&self, coupling: f64) -> Result<Grid> {
        if !(coupling.is_finite() && coupling >= 0.0) {
            return Err(Error::InvalidGrid(format!("coupling must be >= 0 (got {coupling})")));
        }
        let g = &self.inner;
        Ok(Grid {
            inner: Arc::new(GridInner {
                dim: g.dim,
                n: g.n,
                box_length: g.box_length,
                mass: g.mass,
                coupling,
                forward: Arc::clone(&g.forward),
                inverse: Arc::clone(&g.inverse),
                axis_k: g.axis_k.clone(),
                k2: g.k2.clone(),
                mu: g.mu.clone(),
                dealias_mask: g.dealias_mask.clone(),
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Total number of lattice sites, `n^dim`.
    pub fn len(&self) -> usize {
        self.inner.k2.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn box_length(&self) -> f64 {
        self.inner.box_length
    }

    pub fn mass(&self) -> f64 {
        self.inner.mass
    }

    pub fn coupling(&self) -> f64 {
        self.inner.coupling
    }

    /// Lattice spacing `h = L / n`.
    pub fn spacing(&self) -> f64 {
        self.inner.box_length / self.inner.n as f64
    }

    /// `h^dim`, the quadrature weight of a lattice sum.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.inner.dim as i32)
    }

    /// Momentum lattice spacing `2π / L`.
    pub fn momentum_spacing(&self) -> f64 {
        2.0 * PI / self.inner.box_length
    }

    /// `(2π/L)^dim`, the quadrature weight on the momentum lattice.
    pub fn momentum_cell_volume(&self) -> f64 {
        self.momentum_spacing().powi(self.inner.dim as i32)
    }

    /// Largest resolved wavenumber `π n / L`.
    pub fn max_wavenumber(&self) -> f64 {
        PI * self.inner.n as f64 / self.inner.box_length
    }

    pub fn axis_wavenumbers(&self) -> &[f64] {
        &self.inner.axis_k
    }

    pub fn k_squared(&self) -> &[f64] {
        &self.inner.k2
    }

    /// `μ(k)` sampled on the momentum lattice in FFT order.
    pub fn mu(&self) -> &[f64] {
        &self.inner.mu
    }

    pub fn dealias_mask(&self) -> &[bool] {
        &self.inner.dealias_mask
    }

    /// Radial symbol `(m^2 + |k|^2)^{s/2}` on the momentum lattice.
    pub fn mu_power_symbol(&self, s: f64) -> Vec<f64> {
        let m2 = self.inner.mass * self.inner.mass;
        if s == 1.0 {
            return self.inner.mu.clone();
        }
        self.inner.k2.iter().map(|&q| (m2 + q).powf(0.5 * s)).collect()
    }

    /// Per-axis lattice coordinates of a flat index (row-major, last axis fastest).
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let n = self.inner.n;
        let mut out = [0usize; 3];
        let mut rem = flat;
        for axis in (0..self.inner.dim).rev() {
            out[axis] = rem % n;
            rem /= n;
        }
        out
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let n = self.inner.n;
        idx.iter().take(self.inner.dim).fold(0, |acc, &j| acc * n + j)
    }

    /// Centered coordinate of lattice site `j` along one axis, in `[-L/2, L/2)`.
    pub fn coordinate(&self, j: usize) -> f64 {
        signed_index(j, self.inner.n) as f64 * self.spacing()
    }

    /// Wavenumber of spectral index `flat` along `axis`.
    pub fn wavenumber(&self, flat: usize, axis: usize) -> f64 {
        self.inner.axis_k[self.multi_index(flat)[axis]]
    }

    /// Position of lattice site `flat` along `axis`.
    pub fn position(&self, flat: usize, axis: usize) -> f64 {
        self.coordinate(self.multi_index(flat)[axis])
    }

    /// Lattice parameters agree (the coupling is not part of the lattice).
    pub fn same_lattice(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.n == other.inner.n
                && self.inner.box_length == other.inner.box_length
                && self.inner.mass == other.inner.mass)
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self.same_lattice(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn scratch(&self) -> FftScratch {
        let len = self
            .inner
            .forward
            .get_inplace_scratch_len()
            .max(self.inner.inverse.get_inplace_scratch_len());
        FftScratch {
            scratch: vec![Complex64::new(0.0, 0.0); len],
            line: vec![Complex64::new(0.0, 0.0); self.inner.n],
        }
    }

    /// In-place unnormalized forward DFT over all axes.
    pub fn forward(&self, data: &mut [Complex64], ws: &mut FftScratch) {
        self.transform(data, ws, true);
    }

    /// In-place inverse DFT over all axes, normalized so that
    /// `inverse(forward(f)) == f`.
    pub fn inverse(&self, data: &mut [Complex64], ws: &mut FftScratch) {
        self.transform(data, ws, false);
        let scale = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Inverse DFT without the `1/N` factor: `f(x) = Σ_k F(k) e^{ikx}`.
    pub fn inverse_unnormalized(&self, data: &mut [Complex64], ws: &mut FftScratch) {
        self.transform(data, ws, false);
    }

    fn transform(&self, data: &mut [Complex64], ws: &mut FftScratch, forward: bool) {
        let g = &self.inner;
        debug_assert_eq!(data.len(), g.k2.len());
        let fft = if forward { &g.forward } else { &g.inverse };
        let n = g.n;
        // Last axis is contiguous.
        fft.process_with_scratch(data, &mut ws.scratch);
        let mut stride = n;
        for _ in 1..g.dim {
            let block = stride * n;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    for (j, slot) in ws.line.iter_mut().enumerate() {
                        *slot = data[base + offset + j * stride];
                    }
                    fft.process_with_scratch(&mut ws.line, &mut ws.scratch);
                    for (j, v) in ws.line.iter().enumerate() {
                        data[base + offset + j * stride] = *v;
                    }
                }
            }
            stride = block;
        }
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Grid) -> bool {
        self.same_lattice(other) && self.inner.coupling == other.inner.coupling
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .field("box_length", &self.inner.box_length)
            .field("mass", &self.inner.mass)
            .field("coupling", &self.inner.coupling)
            .finish()
    }
}

/// Reusable buffers for [`Grid::forward`] and [`Grid::inverse`].
pub struct FftScratch {
    scratch: Vec<Complex64>,
    line: Vec<Complex64>,
}

/// Index `j` of an `n`-periodic axis mapped to `{-n/2, ..., n/2-1}`.
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_from_parameters() {
        let g = Grid::new(1, 256, 32.0, 1.0, 0.1).unwrap();
        assert_eq!(g.spacing(), 0.125);
        assert_eq!(g.len(), 256);
    }

    #[test]
    fn free_theory_allowed() {
        let g = Grid::new(3, 32, 16.0, 1.0, 0.0).unwrap();
        assert_eq!(g.len(), 32 * 32 * 32);
        assert_eq!(g.coupling(), 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(Grid::new(2, 7, 10.0, 1.0, 0.1), Err(Error::InvalidGrid(_))));
        assert!(Grid::new(1, 4, 10.0, 1.0, 0.1).is_err());
        assert!(Grid::new(4, 8, 10.0, 1.0, 0.1).is_err());
        assert!(Grid::new(1, 64, 0.0, 1.0, 0.1).is_err());
        assert!(Grid::new(1, 64, 10.0, 0.0, 0.1).is_err());
        assert!(Grid::new(1, 64, 10.0, -1.0, 0.1).is_err());
        assert!(Grid::new(1, 64, 10.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn momentum_lattice_layout() {
        let g = Grid::new(1, 8, 2.0 * PI, 1.0, 0.0).unwrap();
        let k: Vec<f64> = g.axis_wavenumbers().to_vec();
        assert_eq!(k, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
        assert_eq!(g.coordinate(4), -PI);
    }

    #[test]
    fn transform_round_trip_3d() {
        let g = Grid::new(3, 8, 5.0, 1.0, 0.0).unwrap();
        let mut ws = g.scratch();
        let orig: Vec<Complex64> = (0..g.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        g.forward(&mut data, &mut ws);
        g.inverse(&mut data, &mut ws);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn plane_wave_lands_on_its_index() {
        let g = Grid::new(2, 16, 4.0, 1.0, 0.0).unwrap();
        let mut ws = g.scratch();
        let (kx, ky) = (g.axis_wavenumbers()[3], g.axis_wavenumbers()[14]);
        let mut data: Vec<Complex64> = (0..g.len())
            .map(|i| {
                let x = g.position(i, 0);
                let y = g.position(i, 1);
                Complex64::from_polar(1.0, kx * x + ky * y)
            })
            .collect();
        g.forward(&mut data, &mut ws);
        let peak = g.flat_index(&[3, 14]);
        for (i, v) in data.iter().enumerate() {
            if i == peak {
                assert!((v.re - g.len() as f64).abs() < 1e-9);
            } else {
                assert!(v.norm() < 1e-9);
            }
        }
    }
}
