//! Coherent-state kernels of the interacting and outgoing fields.
//!
//! `φ(e_{z1}, e_{z2}) = exp⟨z1, z2⟩ · ½(RWR⁻¹(w) + conj RWR⁻¹(conj w))` with
//! `w = conj(z1) + z2`. Values are kept factored as (prefactor, profile).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::evolution::{damped_flow_z, free_flow_z, free_propagate};
use crate::fit::log_log_slope;
use crate::fock::{coherent_inner, CoherentCombo};
use crate::field::{ComplexProfile, RealField};
use crate::scattering::{scatter, wave_in, wave_out_inverse, MatchingParams};
use crate::spectral::{apply_mu_power, sobolev_inner, sobolev_norm};
use crate::structure::{map_r, map_r_inv, translate_profile};

/// `R W_in R⁻¹`.
pub fn rwr(z: &ComplexProfile, mp: &MatchingParams) -> Result<ComplexProfile> {
    Ok(map_r(&wave_in(&map_r_inv(z), mp)?))
}

/// `R S R⁻¹`.
pub fn rsr(z: &ComplexProfile, mp: &MatchingParams) -> Result<ComplexProfile> {
    Ok(map_r(&scatter(&map_r_inv(z), mp)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelValue {
    pub prefactor: Complex64,
    pub profile: ComplexProfile,
}

impl KernelValue {
    pub fn full(&self) -> ComplexProfile {
        self.profile.scaled(self.prefactor)
    }
}

fn symmetrized(
    z1: &ComplexProfile,
    z2: &ComplexProfile,
    map: impl Fn(&ComplexProfile) -> Result<ComplexProfile> + Sync,
) -> Result<KernelValue> {
    let prefactor = coherent_inner(z1, z2)?;
    let w = z1.conj().add(z2)?;
    let wc = w.conj();
    let (a, b) = rayon::join(|| map(&w), || map(&wc));
    let profile = a?.add(&b?.conj())?.scaled_re(0.5);
    Ok(KernelValue { prefactor, profile })
}

/// Kernel of the interacting field at time zero.
pub fn kernel(z1: &ComplexProfile, z2: &ComplexProfile, mp: &MatchingParams) -> Result<KernelValue> {
    symmetrized(z1, z2, |w| rwr(w, mp))
}

/// Kernel of the outgoing field.
pub fn kernel_out(z1: &ComplexProfile, z2: &ComplexProfile, mp: &MatchingParams) -> Result<KernelValue> {
    symmetrized(z1, z2, |w| rsr(w, mp))
}

/// `kernel_out` assembled from `W_out⁻¹ ∘ W_in` as two separate stages.
pub fn kernel_out_factored(z1: &ComplexProfile, z2: &ComplexProfile, mp: &MatchingParams) -> Result<KernelValue> {
    symmetrized(z1, z2, |w| {
        let wave = wave_in(&map_r_inv(w), mp)?;
        Ok(map_r(&wave_out_inverse(&wave, mp)?))
    })
}

/// `prefactor · ∫ profile · h`.
pub fn smear(kv: &KernelValue, h: &RealField) -> Result<Complex64> {
    Ok(kv.prefactor * kv.profile.integrate_against(h)?)
}

/// `prefactor · ⟨conj(profile), μ⁻¹ h⟩_{H^{1/2}}`, the same number through
/// the one-particle pairing.
pub fn smear_dual(kv: &KernelValue, h: &RealField) -> Result<Complex64> {
    let test = apply_mu_power(h, -1.0).to_complex();
    Ok(kv.prefactor * sobolev_inner(&kv.profile.conj(), &test, 0.5)?)
}

/// Kernel between `e(exp(iμt1 - μs1) z1)` and `e(exp(iμt2 - μs2) z2)`.
pub fn kernel_evolved(
    z1: &ComplexProfile,
    z2: &ComplexProfile,
    (t1, s1): (f64, f64),
    (t2, s2): (f64, f64),
    mp: &MatchingParams,
) -> Result<KernelValue> {
    let a = damped_flow_z(z1, t1, s1)?;
    let b = damped_flow_z(z2, t2, s2)?;
    kernel(&a, &b, mp)
}

/// `Σ_{ij} conj(α1_i) α2_j φ(e_{z1_i}, e_{z2_j})`.
pub fn bilinear_form(chi1: &CoherentCombo, chi2: &CoherentCombo, mp: &MatchingParams) -> Result<ComplexProfile> {
    let pairs: Vec<(usize, usize)> = (0..chi1.terms().len())
        .flat_map(|i| (0..chi2.terms().len()).map(move |j| (i, j)))
        .collect();
    let parts: Vec<ComplexProfile> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, z1) = &chi1.terms()[i];
            let (b, z2) = &chi2.terms()[j];
            let kv = kernel(z1, z2, mp)?;
            Ok(kv.profile.scaled(a.conj() * b * kv.prefactor))
        })
        .collect::<Result<_>>()?;
    let grid = chi1
        .terms()
        .first()
        .or(chi2.terms().first())
        .map(|(_, z)| z.grid().clone())
        .ok_or_else(|| invalid("chi", "empty combination"))?;
    parts
        .iter()
        .try_fold(ComplexProfile::zeros(&grid), |acc, p| acc.add(p))
}

/// Diagonal `u(t) = profile of kernel(z_t, z_t)` with `z_t = free_flow_z(z, -t)`.
pub fn diagonal_trajectory(z: &ComplexProfile, times: &[f64], mp: &MatchingParams) -> Result<Vec<RealField>> {
    times
        .par_iter()
        .map(|&t| {
            let zt = free_flow_z(z, -t);
            let kv = kernel(&zt, &zt, mp)?;
            let residue = kv.profile.sup_imag();
            if residue > 1e-9 {
                return Err(invalid("diagonal", format!("profile not real (residue {residue:.2e})")));
            }
            Ok(kv.profile.re())
        })
        .collect()
}

/// Central-difference residual of the NLKG equation along a diagonal
/// trajectory sampled at `t0 - dt, t0, t0 + dt`.
pub fn diagonal_pde_residual(z: &ComplexProfile, t0: f64, dt: f64, mp: &MatchingParams) -> Result<f64> {
    let u = diagonal_trajectory(z, &[t0 - dt, t0, t0 + dt], mp)?;
    crate::evolution::field_residual(&u[0], &u[1], &u[2], dt)
}

#[derive(Clone, Debug, Serialize)]
pub struct HolomorphyReport {
    pub steps: Vec<f64>,
    /// `|∂g/∂ᾱ₂|` by central differences.
    pub cr_holomorphic: Vec<f64>,
    /// `|∂g/∂α₁|` by central differences.
    pub cr_antiholomorphic: Vec<f64>,
    pub slope_holomorphic: Option<f64>,
    pub slope_antiholomorphic: Option<f64>,
    pub circle_residual: f64,
    pub center_value: Complex64,
    /// `|g_dt - g_{dt/2}|` at the center.
    pub noise_floor: f64,
}

/// Holomorphy diagnostics of `g(α1, α2) = smear(kernel(α1 z_a, α2 z_b), h)`
/// around `center`.
pub fn holomorphy_check(
    z_a: &ComplexProfile,
    z_b: &ComplexProfile,
    h: &RealField,
    center: (Complex64, Complex64),
    steps: &[f64],
    radius: f64,
    circle_points: usize,
    mp: &MatchingParams,
) -> Result<HolomorphyReport> {
    if !(radius > 0.0) || circle_points < 3 {
        return Err(invalid("radius", "need radius > 0 and at least 3 circle points"));
    }
    let eval = |a1: Complex64, a2: Complex64, mp: &MatchingParams| -> Result<Complex64> {
        let kv = kernel(&z_a.scaled(a1), &z_b.scaled(a2), mp)?;
        smear(&kv, h)
    };
    let (c1, c2) = center;
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    // Evaluation points: for each step, ±δ and ±iδ in α2 then in α1.
    let mut points: Vec<(Complex64, Complex64)> = Vec::new();
    for &d in steps {
        for dir in [one, -one, i, -i] {
            points.push((c1, c2 + dir * d));
        }
        for dir in [one, -one, i, -i] {
            points.push((c1 + dir * d, c2));
        }
    }
    for k in 0..circle_points {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / circle_points as f64;
        points.push((c1, c2 + Complex64::from_polar(radius, theta)));
    }
    points.push((c1, c2));
    let values: Vec<Complex64> = points
        .par_iter()
        .map(|&(a1, a2)| eval(a1, a2, mp))
        .collect::<Result<_>>()?;
    let fine = mp.with_dt(0.5 * mp.integrator.dt);
    let center_fine = eval(c1, c2, &fine)?;

    let mut cr_h = Vec::new();
    let mut cr_a = Vec::new();
    for (s, &d) in steps.iter().enumerate() {
        let v = &values[8 * s..8 * s + 8];
        let dx2 = (v[0] - v[1]) / (2.0 * d);
        let dy2 = (v[2] - v[3]) / (2.0 * d);
        cr_h.push((0.5 * (dx2 + i * dy2)).norm());
        let dx1 = (v[4] - v[5]) / (2.0 * d);
        let dy1 = (v[6] - v[7]) / (2.0 * d);
        cr_a.push((0.5 * (dx1 - i * dy1)).norm());
    }
    let circle = &values[8 * steps.len()..8 * steps.len() + circle_points];
    let center_value = values[values.len() - 1];
    let mean: Complex64 = circle.iter().sum::<Complex64>() / circle_points as f64;
    Ok(HolomorphyReport {
        steps: steps.to_vec(),
        slope_holomorphic: log_log_slope(steps, &cr_h),
        slope_antiholomorphic: log_log_slope(steps, &cr_a),
        cr_holomorphic: cr_h,
        cr_antiholomorphic: cr_a,
        circle_residual: (mean - center_value).norm(),
        center_value,
        noise_floor: (center_value - center_fine).norm(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub smear: f64,
    pub denominator: f64,
    pub ratio: f64,
}

/// `|⟨h, φ(e_{z1}, e_{z2})⟩| / (‖h‖_{L₂} exp(Re⟨z1,z2⟩) ‖conj z1 + z2‖_{H¹})`.
pub fn bound_check(z1: &ComplexProfile, z2: &ComplexProfile, h: &RealField, mp: &MatchingParams) -> Result<BoundReport> {
    let kv = kernel(z1, z2, mp)?;
    let s = smear(&kv, h)?.norm();
    let w = z1.conj().add(z2)?;
    let denominator = h.l2_norm() * sobolev_inner(z1, z2, 0.5)?.re.exp() * sobolev_norm(&w, 1.0);
    let ratio = if denominator > 0.0 { s / denominator } else { 0.0 };
    Ok(BoundReport {
        smear: s,
        denominator,
        ratio,
    })
}

/// Translation covariance residual. Side (i) evolves the labels by `t` with
/// the diagonal phase, evaluates the kernel and shifts the resulting profile
/// by `shift` lattice units. Side (ii) propagates the labels through
/// `R U₀ R⁻¹` on Cauchy data, translates them spectrally and evaluates the
/// kernel. Returns the `H¹` norm of the difference of full values plus the
/// prefactor mismatch.
pub fn covariance_check(
    z1: &ComplexProfile,
    z2: &ComplexProfile,
    t: f64,
    shift: &[f64],
    mp: &MatchingParams,
) -> Result<f64> {
    let grid = z1.grid();
    if shift.len() != grid.dim() {
        return Err(invalid("shift", format!("needs {} components", grid.dim())));
    }
    // Validates commensurability before any expensive work.
    translate_profile(z1, shift)?;
    if t == 0.0 && shift.iter().all(|&a| a == 0.0) {
        return Ok(0.0);
    }
    let sites: Vec<i64> = shift.iter().map(|a| (a / grid.spacing()).round() as i64).collect();
    let side_i = || -> Result<KernelValue> {
        let a = free_flow_z(z1, -t);
        let b = free_flow_z(z2, -t);
        let kv = kernel(&a, &b, mp)?;
        Ok(KernelValue {
            prefactor: kv.prefactor,
            profile: kv.profile.shifted_sites(&sites),
        })
    };
    let side_ii = || -> Result<KernelValue> {
        let label = |z: &ComplexProfile| -> Result<ComplexProfile> {
            let evolved = map_r(&free_propagate(&map_r_inv(z), -t));
            translate_profile(&evolved, shift)
        };
        kernel(&label(z1)?, &label(z2)?, mp)
    };
    let (a, b) = rayon::join(side_i, side_ii);
    let (a, b) = (a?, b?);
    let diff = sobolev_norm(&a.full().sub(&b.full())?, 1.0);
    Ok(diff + (a.prefactor - b.prefactor).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{gaussian_profile, mode_profile};
    use crate::evolution::{IntegratorParams, SplittingOrder};
    use crate::grid::Grid;

    fn mp() -> MatchingParams {
        MatchingParams::new(4.0, IntegratorParams::new(0.02, SplittingOrder::Fourth, true).unwrap()).unwrap()
    }

    fn profiles(g: &Grid) -> (ComplexProfile, ComplexProfile) {
        (
            gaussian_profile(g, &[0.5], 1.0, 0.2, 0.3).unwrap(),
            gaussian_profile(g, &[-1.0], 1.3, 0.15, -1.1).unwrap(),
        )
    }

    #[test]
    fn free_kernel_is_wick_symbol() {
        let g = Grid::new(1, 128, 32.0, 1.0, 0.0).unwrap();
        let (z1, z2) = profiles(&g);
        let kv = kernel(&z1, &z2, &mp()).unwrap();
        let symbol = z1.conj().add(&z2).unwrap();
        assert!(kv.profile.sub(&symbol).unwrap().sup_norm() < 1e-12);
        assert_eq!(kv.prefactor, coherent_inner(&z1, &z2).unwrap());
        let out = kernel_out(&z1, &z2, &mp()).unwrap();
        assert!(out.profile.sub(&symbol).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn hermitian_symmetry_is_exact() {
        let g = Grid::new(1, 128, 32.0, 1.0, 0.1).unwrap();
        let (z1, z2) = profiles(&g);
        let a = kernel(&z1, &z2, &mp()).unwrap().full();
        let b = kernel(&z2, &z1, &mp()).unwrap().full();
        assert!(a.conj().sub(&b).unwrap().sup_norm() < 1e-15);
    }

    #[test]
    fn real_diagonal_matches_direct_route() {
        let g = Grid::new(1, 128, 32.0, 1.0, 0.1).unwrap();
        let z = gaussian_profile(&g, &[0.0], 1.0, 0.2, 0.0).unwrap();
        let kv = kernel(&z, &z, &mp()).unwrap();
        // Independent route: W applied to (2 Re z, 0).
        let d = crate::field::PhaseSpacePoint {
            phi: z.re().scaled(2.0),
            pi: RealField::zeros(&g),
        };
        let direct = wave_in(&d, &mp()).unwrap().phi;
        assert!(kv.profile.re().sub(&direct).unwrap().sup_norm() < 1e-13);
        assert_eq!(kv.profile.sup_imag(), 0.0);
    }

    #[test]
    fn smear_routes_agree() {
        let g = Grid::new(1, 128, 32.0, 1.0, 0.1).unwrap();
        let (z1, z2) = profiles(&g);
        let kv = kernel(&z1, &z2, &mp()).unwrap();
        let h = RealField::from_fn(&g, |x| (-(x[0] - 0.3).powi(2)).exp());
        let a = smear(&kv, &h).unwrap();
        let b = smear_dual(&kv, &h).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm());
        assert_eq!(smear(&kv, &RealField::zeros(&g)).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn single_mode_smear_in_free_case() {
        let g = Grid::new(1, 64, 16.0, 1.0, 0.0).unwrap();
        let z2 = mode_profile(&g, &[1], 0.5).unwrap();
        let zero = ComplexProfile::zeros(&g);
        let kv = kernel(&zero, &z2, &mp()).unwrap();
        let k = 2.0 * std::f64::consts::PI / 16.0;
        let h = RealField::from_fn(&g, |x| (k * x[0]).cos());
        // ∫ 0.5 e^{ikx} cos(kx) dx = 0.5 · L / 2.
        let v = smear(&kv, &h).unwrap();
        assert!((v - Complex64::new(4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn damping_to_vacuum() {
        let g = Grid::new(1, 64, 16.0, 1.0, 0.1).unwrap();
        let (z1, z2) = profiles(&g);
        let kv = kernel_evolved(&z1, &z2, (0.3, 60.0), (-0.2, 60.0), &mp()).unwrap();
        assert!(kv.profile.sup_norm() < 1e-20);
        assert!((kv.prefactor - 1.0).norm() < 1e-20);
        assert!(kernel_evolved(&z1, &z2, (0.0, -1.0), (0.0, 0.0), &mp()).is_err());
    }

    #[test]
    fn bilinear_form_scaling() {
        let g = Grid::new(1, 64, 16.0, 1.0, 0.1).unwrap();
        let (z1, z2) = profiles(&g);
        let chi1 = CoherentCombo::new(vec![(Complex64::new(1.0, 0.5), z1.clone()), (Complex64::new(-0.3, 0.2), z2.clone())]).unwrap();
        let chi2 = CoherentCombo::single(z2.clone());
        let c = Complex64::new(0.7, -1.3);
        let base = bilinear_form(&chi1, &chi2, &mp()).unwrap();
        let scaled = bilinear_form(&chi1.scaled(c), &chi2, &mp()).unwrap();
        assert!(scaled.sub(&base.scaled(c.conj())).unwrap().sup_norm() < 1e-14);
        let swapped = bilinear_form(&chi2, &chi1, &mp()).unwrap();
        assert!(swapped.sub(&base.conj()).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn covariance_free_is_exact() {
        let g = Grid::new(1, 64, 16.0, 1.0, 0.0).unwrap();
        let (z1, z2) = profiles(&g);
        assert_eq!(covariance_check(&z1, &z2, 0.0, &[0.0], &mp()).unwrap(), 0.0);
        assert!(covariance_check(&z1, &z2, 0.5, &[2.0], &mp()).unwrap() < 1e-11);
        assert!(covariance_check(&z1, &z2, 0.5, &[0.3], &mp()).is_err());
    }

    #[test]
    fn bound_ratio_in_free_case() {
        let g = Grid::new(1, 64, 16.0, 1.0, 0.0).unwrap();
        let (z1, z2) = profiles(&g);
        let h = RealField::from_fn(&g, |x| (-(x[0] * x[0])).exp());
        let r = bound_check(&z1, &z2, &h, &mp()).unwrap();
        assert!(r.ratio <= 1.0 && r.ratio > 0.0);
        let zero = ComplexProfile::zeros(&g);
        assert_eq!(bound_check(&zero, &zero, &h, &mp()).unwrap().ratio, 0.0);
    }
}
