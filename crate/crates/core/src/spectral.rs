//! Fourier multipliers and Sobolev inner products.
//!
//! `H^s` uses the weight `(m^2 + |k|^2)^s`, so `μ` is the canonical bridge
//! between `H^{s}` and `H^{s+1}`. Inner products are antilinear in the first
//! argument.

use num_complex::Complex64;

use crate::error::Result;
use crate::field::{ComplexProfile, PhaseSpacePoint, RealField};
use crate::grid::Grid;

/// Grid functions that can be multiplied by a real, even spectral symbol.
pub trait SpectralField: Sized {
    fn grid(&self) -> &Grid;
    /// Multiplies the spectral coefficients by `symbol` (FFT order).
    fn apply_symbol(&self, symbol: &[f64]) -> Self;
}

impl SpectralField for RealField {
    fn grid(&self) -> &Grid {
        RealField::grid(self)
    }

    fn apply_symbol(&self, symbol: &[f64]) -> Self {
        let mut spec = self.spectrum();
        for (c, &s) in spec.iter_mut().zip(symbol) {
            *c *= s;
        }
        RealField::from_spectrum(self.grid(), spec)
    }
}

impl SpectralField for ComplexProfile {
    fn grid(&self) -> &Grid {
        ComplexProfile::grid(self)
    }

    fn apply_symbol(&self, symbol: &[f64]) -> Self {
        let mut spec = self.spectrum();
        for (c, &s) in spec.iter_mut().zip(symbol) {
            *c *= s;
        }
        ComplexProfile::from_spectrum(self.grid(), spec)
    }
}

/// `μ^s f` with `μ = (-Δ + m^2)^{1/2}`.
pub fn apply_mu_power<F: SpectralField>(f: &F, s: f64) -> F {
    let symbol = f.grid().mu_power_symbol(s);
    f.apply_symbol(&symbol)
}

/// Spectral Laplacian of a real field.
pub fn laplacian(f: &RealField) -> RealField {
    let symbol: Vec<f64> = f.grid().k_squared().iter().map(|&q| -q).collect();
    f.apply_symbol(&symbol)
}

/// `⟨z1, z2⟩_{H^s} = h^d/N Σ_k conj(ẑ1) (m^2+|k|^2)^s ẑ2`.
pub fn sobolev_inner(z1: &ComplexProfile, z2: &ComplexProfile, s: f64) -> Result<Complex64> {
    z1.grid().check_same(z2.grid())?;
    let grid = z1.grid();
    let a = z1.spectrum();
    let b = z2.spectrum();
    Ok(weighted_sum(grid, &a, &b, s))
}

/// Same weighted sum on precomputed spectra.
pub(crate) fn weighted_sum(grid: &Grid, a: &[Complex64], b: &[Complex64], s: f64) -> Complex64 {
    let m2 = grid.mass() * grid.mass();
    let mut acc = Complex64::new(0.0, 0.0);
    for ((x, y), &q) in a.iter().zip(b).zip(grid.k_squared()) {
        let w = if s == 0.0 { 1.0 } else { (m2 + q).powf(s) };
        acc += x.conj() * y * w;
    }
    acc * (grid.cell_volume() / grid.len() as f64)
}

pub fn sobolev_norm(z: &ComplexProfile, s: f64) -> f64 {
    let spec = z.spectrum();
    weighted_sum(z.grid(), &spec, &spec, s).re.max(0.0).sqrt()
}

pub fn sobolev_norm_real(f: &RealField, s: f64) -> f64 {
    let spec = f.spectrum();
    weighted_sum(f.grid(), &spec, &spec, s).re.max(0.0).sqrt()
}

/// Norm of `H^1 ⊕ L_2`, the energy space of Cauchy data.
pub fn graph_norm(d: &PhaseSpacePoint) -> f64 {
    let a = sobolev_norm_real(&d.phi, 1.0);
    let b = sobolev_norm_real(&d.pi, 0.0);
    (a * a + b * b).sqrt()
}

pub fn graph_distance(a: &PhaseSpacePoint, b: &PhaseSpacePoint) -> Result<f64> {
    Ok(graph_norm(&a.sub(b)?))
}

pub fn h1_distance(a: &ComplexProfile, b: &ComplexProfile) -> Result<f64> {
    Ok(sobolev_norm(&a.sub(b)?, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(1, 128, 16.0, 1.3, 0.0).unwrap()
    }

    #[test]
    fn constant_picks_up_mass_power() {
        let g = grid();
        let c = RealField::from_fn(&g, |_| 2.5);
        for s in [-1.0, 0.5, 1.0, 2.0] {
            let out = apply_mu_power(&c, s);
            for v in out.values() {
                assert!((v - 2.5 * 1.3f64.powf(s)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_mode_is_eigenfunction() {
        let g = grid();
        let k = 2.0 * PI * 5.0 / 16.0;
        let f = RealField::from_fn(&g, |x| (k * x[0]).cos());
        let out = apply_mu_power(&f, 1.0);
        let eig = (1.3f64 * 1.3 + k * k).sqrt();
        for (o, v) in out.values().iter().zip(f.values()) {
            assert!((o - eig * v).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_power_undoes() {
        let g = grid();
        let f = RealField::from_fn(&g, |x| (-(x[0] - 1.0).powi(2)).exp() + 0.1 * x[0].sin());
        let back = apply_mu_power(&apply_mu_power(&f, 0.7), -0.7);
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_profiles_have_zero_product() {
        let g = grid();
        let z = ComplexProfile::zeros(&g);
        assert_eq!(sobolev_inner(&z, &z, 0.5).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn l2_product_matches_lattice_sum() {
        let g = grid();
        let f = RealField::from_fn(&g, |x| (-(x[0] * x[0])).exp());
        let direct = f.l2_norm();
        let spectral = sobolev_norm_real(&f, 0.0);
        assert!((direct - spectral).abs() < 1e-13);
    }
}
