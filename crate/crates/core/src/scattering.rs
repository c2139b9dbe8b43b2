//! Finite-T Møller wave operators and the scattering map.
//!
//! `W_in = U(0 ← -T) U₀(-T ← 0)`, `W_out = U(0 ← T) U₀(T ← 0)`,
//! `S = W_out⁻¹ W_in`. The true operators are `T → ∞` limits; everything here
//! is evaluated at the configured `T` and the Cauchy-in-T table is the
//! diagnostic of how far that is from the limit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::evolution::{energy, free_energy, free_propagate, nonlinear_evolve, IntegratorParams};
use crate::field::PhaseSpacePoint;
use crate::spectral::{graph_distance, graph_norm};
use crate::structure::{pt_reflect, time_reflect};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingParams {
    /// Matching time `T`.
    #[serde(rename = "T")]
    pub t_match: f64,
    pub integrator: IntegratorParams,
    /// Also evaluate at `2T` and report the difference.
    #[serde(default)]
    pub cauchy_check: bool,
}

impl MatchingParams {
    pub fn new(t_match: f64, integrator: IntegratorParams) -> Result<Self> {
        let mp = MatchingParams {
            t_match,
            integrator,
            cauchy_check: false,
        };
        mp.validate()?;
        Ok(mp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_match.is_finite() && self.t_match > 0.0) {
            return Err(invalid("T", format!("must be > 0 (got {})", self.t_match)));
        }
        self.integrator.validate()
    }

    pub fn with_t(&self, t_match: f64) -> MatchingParams {
        MatchingParams { t_match, ..*self }
    }

    pub fn with_dt(&self, dt: f64) -> MatchingParams {
        MatchingParams {
            integrator: IntegratorParams {
                dt,
                ..self.integrator
            },
            ..*self
        }
    }

    /// Whether a packet moving at unit speed stays within `0.4 L` over `T`.
    pub fn within_no_wrap(&self, box_length: f64) -> bool {
        self.t_match <= 0.4 * box_length
    }
}

fn warn_wrap(d: &PhaseSpacePoint, mp: &MatchingParams) {
    if !mp.within_no_wrap(d.grid().box_length()) {
        log::warn!(
            "T = {} exceeds 0.4 L = {}; outgoing radiation may wrap around the box",
            mp.t_match,
            0.4 * d.grid().box_length()
        );
    }
}

/// `W_in`: free-propagate to `-T`, then evolve nonlinearly back to 0.
pub fn wave_in(d_in: &PhaseSpacePoint, mp: &MatchingParams) -> Result<PhaseSpacePoint> {
    mp.validate()?;
    warn_wrap(d_in, mp);
    let past = free_propagate(d_in, -mp.t_match);
    nonlinear_evolve(&past, mp.t_match, &mp.integrator)
}

/// `W_out`: free-propagate to `+T`, then evolve nonlinearly back to 0.
pub fn wave_out(d_out: &PhaseSpacePoint, mp: &MatchingParams) -> Result<PhaseSpacePoint> {
    mp.validate()?;
    warn_wrap(d_out, mp);
    let future = free_propagate(d_out, mp.t_match);
    nonlinear_evolve(&future, -mp.t_match, &mp.integrator)
}

/// `W_out⁻¹`: evolve nonlinearly to `+T`, then free-propagate back to 0.
pub fn wave_out_inverse(d: &PhaseSpacePoint, mp: &MatchingParams) -> Result<PhaseSpacePoint> {
    mp.validate()?;
    let future = nonlinear_evolve(d, mp.t_match, &mp.integrator)?;
    Ok(free_propagate(&future, -mp.t_match))
}

/// `W_in⁻¹`: evolve nonlinearly to `-T`, then free-propagate forward to 0.
pub fn wave_in_inverse(d: &PhaseSpacePoint, mp: &MatchingParams) -> Result<PhaseSpacePoint> {
    mp.validate()?;
    let past = nonlinear_evolve(d, -mp.t_match, &mp.integrator)?;
    Ok(free_propagate(&past, mp.t_match))
}

/// `S = W_out⁻¹ W_in`.
pub fn scatter(d_in: &PhaseSpacePoint, mp: &MatchingParams) -> Result<PhaseSpacePoint> {
    wave_out_inverse(&wave_in(d_in, mp)?, mp)
}

/// `‖U(t) W_in d - W_in U₀(t) d‖` in `H¹ ⊕ L₂`.
pub fn check_intertwining(d_in: &PhaseSpacePoint, t: f64, mp: &MatchingParams) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    if t.abs() > 0.25 * mp.t_match {
        log::warn!("intertwining time {t} is not small against T = {}", mp.t_match);
    }
    let (lhs, rhs) = rayon::join(
        || -> Result<PhaseSpacePoint> { nonlinear_evolve(&wave_in(d_in, mp)?, t, &mp.integrator) },
        || wave_in(&free_propagate(d_in, t), mp),
    );
    graph_distance(&lhs?, &rhs?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CauchyRow {
    pub t_from: f64,
    pub t_to: f64,
    pub difference: f64,
}

/// `‖W_in(d; T_i) - W_in(d; T_{i+1})‖` for consecutive entries of `t_list`.
pub fn convergence_report(d_in: &PhaseSpacePoint, t_list: &[f64], mp: &MatchingParams) -> Result<Vec<CauchyRow>> {
    if t_list.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("T_list", "must be strictly increasing"));
    }
    let images: Vec<PhaseSpacePoint> = t_list
        .par_iter()
        .map(|&t| wave_in(d_in, &mp.with_t(t)))
        .collect::<Result<_>>()?;
    t_list
        .windows(2)
        .zip(images.windows(2))
        .map(|(t, w)| {
            Ok(CauchyRow {
                t_from: t[0],
                t_to: t[1],
                difference: graph_distance(&w[0], &w[1])?,
            })
        })
        .collect()
}

/// `‖W_out d - Θᵀ W_in Θᵀ d‖`.
pub fn t_symmetry_residual(d: &PhaseSpacePoint, mp: &MatchingParams) -> Result<f64> {
    let direct = wave_out(d, mp)?;
    let mirrored = time_reflect(&wave_in(&time_reflect(d), mp)?);
    graph_distance(&direct, &mirrored)
}

/// `‖W_out d - Θᵀ Θᴾ W_in Θᴾ Θᵀ d‖`.
pub fn pt_symmetry_residual(d: &PhaseSpacePoint, mp: &MatchingParams) -> Result<f64> {
    let direct = wave_out(d, mp)?;
    let mirrored = pt_reflect(&wave_in(&pt_reflect(d), mp)?);
    graph_distance(&direct, &mirrored)
}

/// `‖Θᵀ S Θᵀ (S d) - d‖`.
pub fn s_inverse_residual(d: &PhaseSpacePoint, mp: &MatchingParams) -> Result<f64> {
    let s = scatter(d, mp)?;
    let back = time_reflect(&scatter(&time_reflect(&s), mp)?);
    graph_distance(&back, d)
}

/// Same with `Θᵀ Θᴾ`.
pub fn s_inverse_residual_pt(d: &PhaseSpacePoint, mp: &MatchingParams) -> Result<f64> {
    let s = scatter(d, mp)?;
    let back = pt_reflect(&scatter(&pt_reflect(&s), mp)?);
    graph_distance(&back, d)
}

/// Self-convergence error of an operator built on `nonlinear_evolve`:
/// distance between the result at `dt` and at `dt/2`.
pub fn solver_tolerance(
    d: &PhaseSpacePoint,
    mp: &MatchingParams,
    op: impl Fn(&PhaseSpacePoint, &MatchingParams) -> Result<PhaseSpacePoint> + Sync,
) -> Result<f64> {
    let fine = mp.with_dt(0.5 * mp.integrator.dt);
    let (a, b) = rayon::join(|| op(d, mp), || op(d, &fine));
    graph_distance(&a?, &b?)
}

/// Summary of one scattering run.
#[derive(Clone, Debug, Serialize)]
pub struct ScatterReport {
    pub norm_in: f64,
    pub norm_wave: f64,
    pub norm_out: f64,
    pub relative_change: f64,
    pub energy_interacting: f64,
    pub free_energy_in: f64,
    pub free_energy_out: f64,
    pub free_energy_mismatch: f64,
    pub t_symmetry: f64,
    pub s_inverse: f64,
    pub cauchy_2t: Option<f64>,
    pub no_wrap: bool,
}

pub struct ScatterRun {
    pub wave: PhaseSpacePoint,
    pub out: PhaseSpacePoint,
    pub report: ScatterReport,
}

/// Runs `W_in` and `S` on `d_in` with the standard diagnostics.
pub fn scatter_with_report(d_in: &PhaseSpacePoint, mp: &MatchingParams) -> Result<ScatterRun> {
    let wave = wave_in(d_in, mp)?;
    let out = wave_out_inverse(&wave, mp)?;
    let (t_sym, s_inv) = rayon::join(|| t_symmetry_residual(d_in, mp), || s_inverse_residual(d_in, mp));
    let cauchy_2t = if mp.cauchy_check {
        let far = wave_in(d_in, &mp.with_t(2.0 * mp.t_match))?;
        Some(graph_distance(&wave, &far)?)
    } else {
        None
    };
    let norm_in = graph_norm(d_in);
    let e_in = free_energy(d_in);
    let e_out = free_energy(&out);
    let report = ScatterReport {
        norm_in,
        norm_wave: graph_norm(&wave),
        norm_out: graph_norm(&out),
        relative_change: if norm_in > 0.0 {
            graph_distance(&out, d_in)? / norm_in
        } else {
            0.0
        },
        energy_interacting: energy(&wave),
        free_energy_in: e_in,
        free_energy_out: e_out,
        free_energy_mismatch: if e_in > 0.0 { (e_out - e_in).abs() / e_in } else { 0.0 },
        t_symmetry: t_sym?,
        s_inverse: s_inv?,
        cauchy_2t,
        no_wrap: mp.within_no_wrap(d_in.grid().box_length()),
    };
    Ok(ScatterRun { wave, out, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::SplittingOrder;
    use crate::field::RealField;
    use crate::grid::Grid;

    fn setup(lambda: f64) -> (PhaseSpacePoint, MatchingParams) {
        let g = Grid::new(1, 128, 32.0, 1.0, lambda).unwrap();
        let d = PhaseSpacePoint {
            phi: RealField::from_fn(&g, |x| 0.2 * (-0.5 * x[0] * x[0]).exp()),
            pi: RealField::from_fn(&g, |x| 0.1 * x[0] * (-0.5 * x[0] * x[0]).exp()),
        };
        let p = IntegratorParams::new(0.02, SplittingOrder::Fourth, true).unwrap();
        (d, MatchingParams::new(5.0, p).unwrap())
    }

    #[test]
    fn free_case_is_identity() {
        let (d, mp) = setup(0.0);
        for out in [
            wave_in(&d, &mp).unwrap(),
            wave_out(&d, &mp).unwrap(),
            wave_out_inverse(&d, &mp).unwrap(),
            scatter(&d, &mp).unwrap(),
        ] {
            assert!(graph_distance(&out, &d).unwrap() < 1e-12);
        }
        assert!(check_intertwining(&d, 1.0, &mp).unwrap() < 1e-12);
    }

    #[test]
    fn zero_data_stays_zero() {
        let (d, mp) = setup(0.1);
        let zero = PhaseSpacePoint::zeros(d.grid());
        assert_eq!(graph_norm(&scatter(&zero, &mp).unwrap()), 0.0);
        assert_eq!(check_intertwining(&d, 0.0, &mp).unwrap(), 0.0);
    }

    #[test]
    fn inverses_compose_to_identity() {
        let (d, mp) = setup(0.1);
        let a = wave_out_inverse(&wave_out(&d, &mp).unwrap(), &mp).unwrap();
        let b = wave_in_inverse(&wave_in(&d, &mp).unwrap(), &mp).unwrap();
        assert!(graph_distance(&a, &d).unwrap() < 1e-12);
        assert!(graph_distance(&b, &d).unwrap() < 1e-12);
    }

    #[test]
    fn scattering_is_nontrivial_with_coupling() {
        let (d, mp) = setup(0.1);
        let s = scatter(&d, &mp).unwrap();
        assert!(graph_distance(&s, &d).unwrap() > 1e-6 * graph_norm(&d));
        assert!(t_symmetry_residual(&d, &mp).unwrap() < 1e-13);
        assert!(s_inverse_residual(&d, &mp).unwrap() < 1e-11);
    }

    #[test]
    fn cauchy_table_sorted_and_validated() {
        let (d, mp) = setup(0.1);
        let rows = convergence_report(&d, &[2.0, 4.0, 6.0], &mp).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].t_from < rows[1].t_from);
        assert!(convergence_report(&d, &[4.0, 2.0], &mp).is_err());
    }

    #[test]
    fn rejects_nonpositive_t() {
        let (_, mp) = setup(0.1);
        assert!(MatchingParams::new(0.0, mp.integrator).is_err());
    }
}
