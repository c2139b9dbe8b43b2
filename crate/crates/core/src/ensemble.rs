//! Seeded random Cauchy data and analytic preset profiles.
//!
//! Ensemble contract (stable across versions with the same major number):
//! 1. `ChaCha20Rng::seed_from_u64(seed)`, stream set to the sample index.
//! 2. Draw `φ` then `π` as i.i.d. standard normals per site, row-major.
//! 3. Multiply each spectrum by `exp(-|k|² / (2 k_c²))`.
//! 4. Multiply by the window `exp(-|x|² / (2 w²))` about the box center.
//! 5. Rescale so the `H¹ ⊕ L₂` norm equals `amplitude`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::{ComplexProfile, PhaseSpacePoint, RealField};
use crate::grid::Grid;
use crate::spectral::graph_norm;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    /// Target `H¹ ⊕ L₂` norm.
    pub amplitude: f64,
    /// Spectral cutoff `k_c`.
    pub cutoff: f64,
    /// Spatial window width `w`.
    pub window: f64,
}

impl Default for Ensemble {
    fn default() -> Self {
        Ensemble {
            amplitude: 0.1,
            cutoff: 1.5,
            window: 2.0,
        }
    }
}

impl Ensemble {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(invalid("amplitude", "must be finite and >= 0"));
        }
        if !(self.cutoff > 0.0) {
            return Err(invalid("cutoff", "must be > 0"));
        }
        if !(self.window > 0.0) {
            return Err(invalid("window", "must be > 0"));
        }
        Ok(())
    }

    /// Sample `index` of the ensemble for `seed`.
    pub fn sample(&self, grid: &Grid, seed: u64, index: u64) -> Result<PhaseSpacePoint> {
        self.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let mut draw = || -> Vec<f64> { (0..grid.len()).map(|_| StandardNormal.sample(&mut rng)).collect() };
        let phi_raw = draw();
        let pi_raw = draw();
        let shape = |raw: Vec<f64>| -> RealField {
            let mut spec: Vec<Complex64> = raw.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
            let mut ws = grid.scratch();
            grid.forward(&mut spec, &mut ws);
            for (c, &q) in spec.iter_mut().zip(grid.k_squared()) {
                *c *= (-q / (2.0 * self.cutoff * self.cutoff)).exp();
            }
            let smooth = RealField::from_spectrum(grid, spec);
            let window = RealField::from_fn(grid, |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (-r2 / (2.0 * self.window * self.window)).exp()
            });
            let values = smooth.values().iter().zip(window.values()).map(|(a, b)| a * b).collect();
            RealField::from_vec_unchecked(grid, values)
        };
        let d = PhaseSpacePoint {
            phi: shape(phi_raw),
            pi: shape(pi_raw),
        };
        let norm = graph_norm(&d);
        Ok(if norm > 0.0 { d.scaled(self.amplitude / norm) } else { d })
    }
}

/// `amplitude · e^{i phase} · exp(-|x - center|² / (2 width²))`.
pub fn gaussian_profile(grid: &Grid, center: &[f64], width: f64, amplitude: f64, phase: f64) -> Result<ComplexProfile> {
    if !(width > 0.0) {
        return Err(invalid("width", "must be > 0"));
    }
    if center.len() != grid.dim() {
        return Err(invalid("center", format!("needs {} components", grid.dim())));
    }
    let c = Complex64::from_polar(amplitude, phase);
    let env = RealField::from_fn(grid, |x| {
        let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
        (-r2 / (2.0 * width * width)).exp()
    });
    Ok(ComplexProfile::from_vec_unchecked(
        grid,
        env.values().iter().map(|&v| c * v).collect(),
    ))
}

/// `amplitude · e^{i k·x}` with integer mode numbers `k` (wavenumber `2πk/L`).
pub fn mode_profile(grid: &Grid, k: &[i64], amplitude: f64) -> Result<ComplexProfile> {
    if k.len() != grid.dim() {
        return Err(invalid("k", format!("needs {} components", grid.dim())));
    }
    let base = 2.0 * std::f64::consts::PI / grid.box_length();
    let values = (0..grid.len())
        .map(|i| {
            let phase: f64 = (0..grid.dim()).map(|a| base * k[a] as f64 * grid.position(i, a)).sum();
            Complex64::from_polar(amplitude, phase)
        })
        .collect();
    Ok(ComplexProfile::from_vec_unchecked(grid, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(1, 256, 32.0, 1.0, 0.1).unwrap()
    }

    #[test]
    fn samples_are_normalized_and_reproducible() {
        let g = grid();
        let e = Ensemble {
            amplitude: 0.2,
            ..Ensemble::default()
        };
        let a = e.sample(&g, 7, 0).unwrap();
        assert!((graph_norm(&a) - 0.2).abs() < 1e-14);
        assert_eq!(a, e.sample(&g, 7, 0).unwrap());
        assert_ne!(a, e.sample(&g, 7, 1).unwrap());
        assert_ne!(a, e.sample(&g, 8, 0).unwrap());
    }

    #[test]
    fn samples_are_localized() {
        let g = grid();
        let a = Ensemble::default().sample(&g, 1, 3).unwrap();
        let edge = (0..g.len())
            .filter(|&i| g.position(i, 0).abs() > 12.0)
            .map(|i| a.phi.values()[i].abs())
            .fold(0.0, f64::max);
        assert!(edge < 1e-6 * a.phi.sup_norm());
    }

    #[test]
    fn presets() {
        let g = grid();
        let z = gaussian_profile(&g, &[0.0], 1.0, 0.5, 0.0).unwrap();
        assert!((z.sup_norm() - 0.5).abs() < 1e-15);
        assert!(gaussian_profile(&g, &[0.0, 1.0], 1.0, 0.5, 0.0).is_err());
        let m = mode_profile(&g, &[2], 0.3).unwrap();
        assert!(m.values().iter().all(|c| (c.norm() - 0.3).abs() < 1e-15));
    }
}
