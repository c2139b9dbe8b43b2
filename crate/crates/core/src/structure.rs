//! The complex structure on Cauchy data and the discrete symmetries.
//!
//! `R(φ, π) = φ + i μ^{-1} π` identifies real Cauchy data with a complex
//! profile; `J = R^{-1} i R` acts as `(φ, π) ↦ (-μ^{-1} π, μ φ)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexProfile, PhaseSpacePoint, RealField};
use crate::spectral::apply_mu_power;

pub fn map_r(d: &PhaseSpacePoint) -> ComplexProfile {
    let im = apply_mu_power(&d.pi, -1.0);
    ComplexProfile::from_parts(&d.phi, &im).expect("phase-space components share a grid")
}

pub fn map_r_inv(z: &ComplexProfile) -> PhaseSpacePoint {
    let phi = z.re();
    let pi = apply_mu_power(&z.im(), 1.0);
    PhaseSpacePoint { phi, pi }
}

pub fn apply_j(d: &PhaseSpacePoint) -> PhaseSpacePoint {
    PhaseSpacePoint {
        phi: apply_mu_power(&d.pi, -1.0).scaled(-1.0),
        pi: apply_mu_power(&d.phi, 1.0),
    }
}

/// `Θᵀ(φ, π) = (φ, -π)`.
pub fn time_reflect(d: &PhaseSpacePoint) -> PhaseSpacePoint {
    PhaseSpacePoint {
        phi: d.phi.clone(),
        pi: d.pi.scaled(-1.0),
    }
}

/// `Θᴾ(φ, π)(x) = (φ(-x), π(-x))` on the periodic lattice.
pub fn space_reflect(d: &PhaseSpacePoint) -> PhaseSpacePoint {
    PhaseSpacePoint {
        phi: reflect_field(&d.phi),
        pi: reflect_field(&d.pi),
    }
}

pub fn reflect_field(f: &RealField) -> RealField {
    let g = f.grid();
    let n = g.n();
    let values = (0..g.len())
        .map(|i| {
            let idx = g.multi_index(i);
            let mut mirror = [0usize; 3];
            for a in 0..g.dim() {
                mirror[a] = (n - idx[a]) % n;
            }
            f.values()[g.flat_index(&mirror[..g.dim()])]
        })
        .collect();
    RealField::from_vec_unchecked(g, values)
}

/// `Θᵀ Θᴾ`.
pub fn pt_reflect(d: &PhaseSpacePoint) -> PhaseSpacePoint {
    time_reflect(&space_reflect(d))
}

/// Spatial translation `f ↦ f(· - a)` realized as the spectral phase
/// `e^{-i k·a}`. Requires `a` to be a whole number of lattice sites so the
/// result is again a lattice function.
pub fn translate_profile(z: &ComplexProfile, shift: &[f64]) -> Result<ComplexProfile> {
    let g = z.grid();
    let h = g.spacing();
    for &a in shift {
        let sites = a / h;
        if (sites - sites.round()).abs() > 1e-9 {
            return Err(Error::NonCommensurateShift(a));
        }
    }
    let mut spec = z.spectrum();
    for (i, c) in spec.iter_mut().enumerate() {
        let mut phase = 0.0;
        for (axis, &a) in shift.iter().enumerate().take(g.dim()) {
            phase -= g.wavenumber(i, axis) * a;
        }
        *c *= Complex64::from_polar(1.0, phase);
    }
    Ok(ComplexProfile::from_spectrum(g, spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn data() -> PhaseSpacePoint {
        let g = Grid::new(1, 64, 12.0, 1.0, 0.0).unwrap();
        PhaseSpacePoint {
            phi: RealField::from_fn(&g, |x| (-(x[0] - 0.5).powi(2)).exp()),
            pi: RealField::from_fn(&g, |x| x[0] * (-(x[0] * x[0])).exp()),
        }
    }

    #[test]
    fn real_data_maps_to_real_profile() {
        let d = data();
        let d0 = PhaseSpacePoint {
            phi: d.phi.clone(),
            pi: RealField::zeros(d.grid()),
        };
        let z = map_r(&d0);
        assert_eq!(z.sup_imag(), 0.0);
    }

    #[test]
    fn j_squares_to_minus_one() {
        let d = data();
        let jj = apply_j(&apply_j(&d));
        let err = jj.add(&d).unwrap();
        assert!(err.phi.sup_norm() < 1e-14 && err.pi.sup_norm() < 1e-14);
    }

    #[test]
    fn reflections_are_involutions() {
        let d = data();
        assert_eq!(time_reflect(&time_reflect(&d)), d);
        assert_eq!(space_reflect(&space_reflect(&d)), d);
        let even = RealField::from_fn(d.grid(), |x| (-(x[0] * x[0])).exp());
        assert_eq!(reflect_field(&even), even);
    }

    #[test]
    fn translation_requires_lattice_shift() {
        let d = data();
        let z = map_r(&d);
        assert!(matches!(
            translate_profile(&z, &[0.1]),
            Err(Error::NonCommensurateShift(_))
        ));
        let h = d.grid().spacing();
        let shifted = translate_profile(&z, &[3.0 * h]).unwrap();
        let rolled = z.shifted_sites(&[3]);
        for (a, b) in shifted.values().iter().zip(rolled.values()) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
