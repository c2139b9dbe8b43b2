//! Low-order Born terms of `RWR⁻¹` and Wick monomials on coherent vectors.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::evolution::step_plan;
use crate::field::{ComplexProfile, RealField};
use crate::fit::log_log_slope;
use crate::fock::{coherent_inner, CoherentCombo};
use crate::scattering::MatchingParams;
use crate::spectral::sobolev_norm;
use crate::wick::{kernel, rwr};

/// `R₁ = id`.
pub fn born_first(z: &ComplexProfile) -> ComplexProfile {
    z.clone()
}

/// Third-order term at the grid's coupling.
pub fn born_third(z: &ComplexProfile, mp: &MatchingParams) -> Result<ComplexProfile> {
    born_third_with(z, mp, z.grid().coupling())
}

/// Third-order term with unit coupling.
pub fn born_third_unit(z: &ComplexProfile, mp: &MatchingParams) -> Result<ComplexProfile> {
    born_third_with(z, mp, 1.0)
}

/// `-λ ∫_{-T}^0 e^{iμτ} i μ⁻¹ [(Re e^{-iμτ} z)³]^ dτ` in the z-coordinate:
/// the first Duhamel iterate with the free in-solution in the source, each
/// source slice carried to time zero by the exact free flow. Trapezoidal in
/// `τ` with the integrator step.
pub fn born_third_with(z: &ComplexProfile, mp: &MatchingParams, coupling: f64) -> Result<ComplexProfile> {
    mp.validate()?;
    let grid = z.grid();
    let (steps, h) = step_plan(mp.t_match, mp.integrator.dt);
    let zhat = z.spectrum();
    let mu = grid.mu();
    let mask = grid.dealias_mask();
    let dealias = mp.integrator.dealias;
    let mut ws = grid.scratch();
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    for i in 0..=steps {
        let tau = -mp.t_match + i as f64 * h;
        let weight = if i == 0 || i == steps { 0.5 * h } else { h };
        for (k, b) in buf.iter_mut().enumerate() {
            *b = if !dealias || mask[k] {
                zhat[k] * Complex64::from_polar(1.0, -mu[k] * tau)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        grid.inverse(&mut buf, &mut ws);
        for b in buf.iter_mut() {
            let phi = b.re;
            *b = Complex64::new(phi * phi * phi, 0.0);
        }
        grid.forward(&mut buf, &mut ws);
        for (k, a) in acc.iter_mut().enumerate() {
            if !dealias || mask[k] {
                *a += buf[k] * Complex64::from_polar(weight / mu[k], mu[k] * tau + std::f64::consts::FRAC_PI_2);
            }
        }
    }
    acc.iter_mut().for_each(|a| *a *= -coupling);
    Ok(ComplexProfile::from_spectrum(grid, acc))
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub eps: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingFit {
    pub rows: Vec<ScalingRow>,
    pub exponent: Option<f64>,
    /// All values at roundoff relative to the probe size.
    pub degenerate: bool,
}

fn fit(rows: Vec<ScalingRow>, scale: f64) -> ScalingFit {
    let degenerate = rows.iter().all(|r| r.value <= 1e-13 * scale.max(f64::MIN_POSITIVE) * r.eps);
    let xs: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.value).collect();
    ScalingFit {
        exponent: if degenerate { None } else { log_log_slope(&xs, &ys) },
        rows,
        degenerate,
    }
}

/// Fits `‖rwr(εz) - εz‖_{H¹} ~ ε^q`.
pub fn order_scaling(z: &ComplexProfile, mp: &MatchingParams, eps_list: &[f64]) -> Result<ScalingFit> {
    let rows = eps_list
        .par_iter()
        .map(|&eps| {
            let probe = z.scaled_re(eps);
            let diff = rwr(&probe, mp)?.sub(&probe)?;
            Ok(ScalingRow {
                eps,
                value: sobolev_norm(&diff, 1.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fit(rows, sobolev_norm(z, 1.0)))
}

/// Fits `‖rwr(εz) + rwr(-εz)‖/2 ~ ε^q`; an even part would show `q = 2`.
pub fn parity_scaling(z: &ComplexProfile, mp: &MatchingParams, eps_list: &[f64]) -> Result<ScalingFit> {
    let rows = eps_list
        .par_iter()
        .map(|&eps| {
            let a = rwr(&z.scaled_re(eps), mp)?;
            let b = rwr(&z.scaled_re(-eps), mp)?;
            Ok(ScalingRow {
                eps,
                value: 0.5 * sobolev_norm(&a.add(&b)?, 1.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fit(rows, sobolev_norm(z, 1.0)))
}

/// Fits `‖rwr(εz) - εz - ε³ λ B₃(z)‖_{H¹} ~ ε^q` with `B₃` at unit coupling.
pub fn remainder_scaling(z: &ComplexProfile, mp: &MatchingParams, eps_list: &[f64]) -> Result<ScalingFit> {
    let b3 = born_third(z, mp)?;
    let rows = eps_list
        .par_iter()
        .map(|&eps| {
            let probe = z.scaled_re(eps);
            let r = rwr(&probe, mp)?.sub(&probe)?.sub(&b3.scaled_re(eps * eps * eps))?;
            Ok(ScalingRow {
                eps,
                value: sobolev_norm(&r, 1.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fit(rows, sobolev_norm(z, 1.0)))
}

/// `:φ_in(f₁)…φ_in(f_n):(χ₁, χ₂)` with `φ_in(f) = 2^{-1/2}(a(f) + a*(f))`
/// and `a(f) e_z = √2 (∫ f z) e_z`, summed over all subsets `K`.
pub fn wick_monomial(fs: &[RealField], chi1: &CoherentCombo, chi2: &CoherentCombo) -> Result<Complex64> {
    let n = fs.len();
    if n > 16 {
        return Err(invalid("fs", "at most 16 test functions"));
    }
    let norm = 2f64.powf(-(n as f64) / 2.0);
    let r2 = std::f64::consts::SQRT_2;
    let mut total = Complex64::new(0.0, 0.0);
    for (a1, z1) in chi1.terms() {
        let left: Vec<Complex64> = fs.iter().map(|f| z1.integrate_against(f).map(|v| v * r2)).collect::<Result<_>>()?;
        for (a2, z2) in chi2.terms() {
            let right: Vec<Complex64> =
                fs.iter().map(|f| z2.integrate_against(f).map(|v| v * r2)).collect::<Result<_>>()?;
            let mut sum = Complex64::new(0.0, 0.0);
            for subset in 0u32..(1u32 << n) {
                let mut term = Complex64::new(1.0, 0.0);
                for k in 0..n {
                    term *= if subset & (1 << k) != 0 { left[k].conj() } else { right[k] };
                }
                sum += term;
            }
            total += a1.conj() * a2 * coherent_inner(z1, z2)? * sum * norm;
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, Serialize)]
pub struct BornComparison {
    pub residual: f64,
    pub profile_norm: f64,
}

/// `‖kernel profile - ½[(w + B₃ w) + conj(w̄ + B₃ w̄)]‖_{H¹}`, `w = z̄₁ + z₂`.
pub fn kernel_vs_born(z1: &ComplexProfile, z2: &ComplexProfile, mp: &MatchingParams) -> Result<BornComparison> {
    let kv = kernel(z1, z2, mp)?;
    let w = z1.conj().add(z2)?;
    let wc = w.conj();
    let (a, b) = rayon::join(|| born_third(&w, mp), || born_third(&wc, mp));
    let approx = w.add(&a?)?.add(&wc.add(&b?)?.conj())?.scaled_re(0.5);
    Ok(BornComparison {
        residual: sobolev_norm(&kv.profile.sub(&approx)?, 1.0),
        profile_norm: sobolev_norm(&kv.profile, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::gaussian_profile;
    use crate::evolution::{IntegratorParams, SplittingOrder};
    use crate::grid::Grid;
    use proptest::prelude::*;

    fn mp() -> MatchingParams {
        MatchingParams::new(4.0, IntegratorParams::new(0.01, SplittingOrder::Fourth, true).unwrap()).unwrap()
    }

    fn grid(lambda: f64) -> Grid {
        Grid::new(1, 128, 32.0, 1.0, lambda).unwrap()
    }

    #[test]
    fn born_third_scalings() {
        let g = grid(0.1);
        let z = gaussian_profile(&g, &[0.0], 1.0, 0.3, 0.4).unwrap();
        let b = born_third(&z, &mp()).unwrap();
        let b2 = born_third_with(&z, &mp(), 0.2).unwrap();
        assert!(b2.sub(&b.scaled_re(2.0)).unwrap().sup_norm() <= 1e-12 * b.sup_norm());
        let b3 = born_third(&z.scaled_re(2.0), &mp()).unwrap();
        assert!(b3.sub(&b.scaled_re(8.0)).unwrap().sup_norm() <= 1e-12 * b3.sup_norm());
        assert_eq!(born_third(&ComplexProfile::zeros(&g), &mp()).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn born_third_matches_weak_coupling_solver() {
        // At tiny λ, rwr(z) - z is λ B₃ up to O(λ²).
        let g = grid(1e-4);
        let z = gaussian_profile(&g, &[0.0], 1.0, 0.5, 0.2).unwrap();
        let diff = rwr(&z, &mp()).unwrap().sub(&z).unwrap();
        let b = born_third(&z, &mp()).unwrap();
        let rel = sobolev_norm(&diff.sub(&b).unwrap(), 1.0) / sobolev_norm(&b, 1.0);
        assert!(rel < 1e-3, "relative mismatch {rel}");
    }

    #[test]
    fn wick_monomial_vanishes_on_vacuum() {
        let g = grid(0.0);
        let vac = CoherentCombo::single(ComplexProfile::zeros(&g));
        let f = RealField::from_fn(&g, |x| (-(x[0] * x[0])).exp());
        assert_eq!(wick_monomial(&[f.clone()], &vac, &vac).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(wick_monomial(&[f.clone(), f], &vac, &vac).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn wick_monomial_closed_form() {
        // On single coherent vectors the subset sum factorizes into
        // exp⟨z1,z2⟩ Π_k ∫ f_k (z̄1 + z2).
        let g = grid(0.0);
        let z1 = gaussian_profile(&g, &[0.3], 1.0, 0.4, 0.7).unwrap();
        let z2 = gaussian_profile(&g, &[-0.5], 1.2, 0.3, -0.4).unwrap();
        let fs: Vec<RealField> = (0..3)
            .map(|k| RealField::from_fn(&g, move |x| (-(x[0] - k as f64 * 0.4).powi(2)).exp()))
            .collect();
        let chi1 = CoherentCombo::single(z1.clone());
        let chi2 = CoherentCombo::single(z2.clone());
        let got = wick_monomial(&fs, &chi1, &chi2).unwrap();
        let w = z1.conj().add(&z2).unwrap();
        let mut expected = coherent_inner(&z1, &z2).unwrap();
        for f in &fs {
            expected *= w.integrate_against(f).unwrap();
        }
        assert!((got - expected).norm() < 1e-13 * expected.norm());
    }

    proptest! {
        #[test]
        fn wick_monomial_symmetries(
            a in -2.0f64..2.0, b in -2.0f64..2.0, shift in -2.0f64..2.0, perm in 0usize..6
        ) {
            let g = Grid::new(1, 64, 16.0, 1.0, 0.0).unwrap();
            let z1 = gaussian_profile(&g, &[shift], 1.0, 0.3, a).unwrap();
            let z2 = gaussian_profile(&g, &[-shift], 1.1, 0.2, b).unwrap();
            let chi1 = CoherentCombo::new(vec![(Complex64::new(a, b), z1.clone()), (Complex64::new(0.5, -0.1), z2.clone())]).unwrap();
            let chi2 = CoherentCombo::new(vec![(Complex64::new(b, 1.0), z2)]).unwrap();
            let fs: Vec<RealField> = (0..3)
                .map(|k| RealField::from_fn(&g, move |x| (-(x[0] - k as f64 + shift).powi(2)).exp()))
                .collect();
            let base = wick_monomial(&fs, &chi1, &chi2).unwrap();
            let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let permuted: Vec<RealField> = orders[perm].iter().map(|&i| fs[i].clone()).collect();
            let p = wick_monomial(&permuted, &chi1, &chi2).unwrap();
            prop_assert!((p - base).norm() <= 1e-12 * base.norm().max(1e-300));
            let c = Complex64::new(a, -b);
            let s1 = wick_monomial(&fs, &chi1.scaled(c), &chi2).unwrap();
            prop_assert!((s1 - base * c.conj()).norm() <= 1e-12 * (base * c).norm().max(1e-300));
            let s2 = wick_monomial(&fs, &chi1, &chi2.scaled(c)).unwrap();
            prop_assert!((s2 - base * c).norm() <= 1e-12 * (base * c).norm().max(1e-300));
        }
    }

    #[test]
    fn free_case_born_comparison_is_exact() {
        let g = grid(0.0);
        let z1 = gaussian_profile(&g, &[0.3], 1.0, 0.2, 0.7).unwrap();
        let z2 = gaussian_profile(&g, &[-0.5], 1.2, 0.2, -0.4).unwrap();
        assert!(kernel_vs_born(&z1, &z2, &mp()).unwrap().residual < 1e-12);
        let zero = ComplexProfile::zeros(&g);
        assert_eq!(kernel_vs_born(&zero, &zero, &mp()).unwrap().residual, 0.0);
    }

    #[test]
    fn order_scaling_flags_free_case() {
        let g = grid(0.0);
        let z = gaussian_profile(&g, &[0.0], 1.0, 1.0, 0.0).unwrap();
        assert!(order_scaling(&z, &mp(), &[0.1, 0.2]).unwrap().degenerate);
    }
}
