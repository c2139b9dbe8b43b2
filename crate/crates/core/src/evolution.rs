//! Free Klein–Gordon flow and the split-step integrator for
//! `□u + m²u + λu³ = 0`.
//!
//! The free flow is applied exactly as a Fourier multiplier. The cubic term
//! is a pointwise flow on `π` with `φ` frozen, `π ← π - λ τ φ³`, which is
//! also exact. Strang composition of the two gives order 2; the Yoshida
//! triple jump of Strang steps gives order 4. Both compositions are
//! symmetric, so a step of `-dt` inverts a step of `dt` and the discrete
//! flow commutes with `Θᵀ` exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{ComplexProfile, PhaseSpacePoint, RealField};
use crate::grid::{FftScratch, Grid};
use crate::spectral::laplacian;

/// Abort threshold for `sup|φ|`.
pub const BLOW_UP_LIMIT: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum SplittingOrder {
    /// Strang splitting.
    Second,
    /// Yoshida triple jump of Strang steps.
    Fourth,
}

impl SplittingOrder {
    pub fn as_int(self) -> u32 {
        match self {
            SplittingOrder::Second => 2,
            SplittingOrder::Fourth => 4,
        }
    }
}

impl TryFrom<u32> for SplittingOrder {
    type Error = String;

    fn try_from(v: u32) -> std::result::Result<Self, String> {
        match v {
            2 => Ok(SplittingOrder::Second),
            4 => Ok(SplittingOrder::Fourth),
            other => Err(format!("splitting order must be 2 or 4 (got {other})")),
        }
    }
}

impl From<SplittingOrder> for u32 {
    fn from(o: SplittingOrder) -> u32 {
        o.as_int()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorParams {
    pub dt: f64,
    pub order: SplittingOrder,
    pub dealias: bool,
    /// Warn when `dt · max μ` exceeds this value.
    #[serde(default = "default_stability_guard")]
    pub stability_guard: f64,
}

fn default_stability_guard() -> f64 {
    std::f64::consts::PI
}

impl Default for IntegratorParams {
    fn default() -> Self {
        IntegratorParams {
            dt: 1e-3,
            order: SplittingOrder::Fourth,
            dealias: true,
            stability_guard: default_stability_guard(),
        }
    }
}

impl IntegratorParams {
    pub fn new(dt: f64, order: SplittingOrder, dealias: bool) -> Result<Self> {
        let p = IntegratorParams {
            dt,
            order,
            dealias,
            stability_guard: default_stability_guard(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be > 0 (got {})", self.dt)));
        }
        if !(self.stability_guard > 0.0) {
            return Err(invalid("stability_guard", "must be > 0"));
        }
        Ok(())
    }

    /// Same scheme with the step divided by `factor`.
    pub fn refined(&self, factor: f64) -> IntegratorParams {
        IntegratorParams {
            dt: self.dt / factor,
            ..*self
        }
    }

    /// `dt · max_k μ(k)`.
    pub fn stability_number(&self, grid: &Grid) -> f64 {
        let max_mu = grid.mu().iter().cloned().fold(0.0, f64::max);
        self.dt * max_mu
    }
}

/// Spectral coefficients of `(φ, π)`.
#[derive(Clone, Debug)]
pub(crate) struct SpectralState {
    pub phi: Vec<Complex64>,
    pub pi: Vec<Complex64>,
}

impl SpectralState {
    pub fn from_point(d: &PhaseSpacePoint) -> Self {
        SpectralState {
            phi: d.phi.spectrum(),
            pi: d.pi.spectrum(),
        }
    }

    pub fn to_point(&self, grid: &Grid) -> PhaseSpacePoint {
        PhaseSpacePoint {
            phi: RealField::from_spectrum(grid, self.phi.clone()),
            pi: RealField::from_spectrum(grid, self.pi.clone()),
        }
    }
}

/// Multiplier tables of the exact free flow over a fixed duration.
#[derive(Clone, Debug)]
pub(crate) struct FreeFlow {
    cos: Vec<f64>,
    sin_over_mu: Vec<f64>,
    mu_sin: Vec<f64>,
}

impl FreeFlow {
    pub fn new(grid: &Grid, t: f64) -> Self {
        let mu = grid.mu();
        let mut cos = Vec::with_capacity(mu.len());
        let mut sin_over_mu = Vec::with_capacity(mu.len());
        let mut mu_sin = Vec::with_capacity(mu.len());
        for &w in mu {
            let (s, c) = (w * t).sin_cos();
            cos.push(c);
            sin_over_mu.push(s / w);
            mu_sin.push(w * s);
        }
        FreeFlow {
            cos,
            sin_over_mu,
            mu_sin,
        }
    }

    pub fn apply(&self, state: &mut SpectralState) {
        for i in 0..self.cos.len() {
            let p = state.phi[i];
            let q = state.pi[i];
            state.phi[i] = p * self.cos[i] + q * self.sin_over_mu[i];
            state.pi[i] = q * self.cos[i] - p * self.mu_sin[i];
        }
    }
}

/// `U₀(t)`: exact free Klein–Gordon propagation of Cauchy data.
pub fn free_propagate(d: &PhaseSpacePoint, t: f64) -> PhaseSpacePoint {
    if t == 0.0 {
        return d.clone();
    }
    let mut state = SpectralState::from_point(d);
    FreeFlow::new(d.grid(), t).apply(&mut state);
    state.to_point(d.grid())
}

/// `R U₀(t) R⁻¹`: on the positive-frequency coordinate the free flow is the
/// diagonal phase `ẑ(k) ↦ e^{-iμ(k)t} ẑ(k)`.
pub fn free_flow_z(z: &ComplexProfile, t: f64) -> ComplexProfile {
    if t == 0.0 {
        return z.clone();
    }
    let grid = z.grid();
    let mut spec = z.spectrum();
    for (c, &w) in spec.iter_mut().zip(grid.mu()) {
        *c *= Complex64::from_polar(1.0, -w * t);
    }
    ComplexProfile::from_spectrum(grid, spec)
}

/// The holomorphic semigroup `ẑ(k) ↦ e^{iμ(k)t - μ(k)s} ẑ(k)`, `s ≥ 0`.
///
/// At `s = 0` this is `free_flow_z(z, -t)`: the label of `e^{itH} e_z` is
/// `e^{iμt} z`, the opposite rotation to the classical flow of `R⁻¹z`.
pub fn damped_flow_z(z: &ComplexProfile, t: f64, s: f64) -> Result<ComplexProfile> {
    if !(s >= 0.0) {
        return Err(invalid("s", format!("damping must be >= 0 (got {s})")));
    }
    if t == 0.0 && s == 0.0 {
        return Ok(z.clone());
    }
    let grid = z.grid();
    let mut spec = z.spectrum();
    for (c, &w) in spec.iter_mut().zip(grid.mu()) {
        *c *= Complex64::from_polar((-w * s).exp(), w * t);
    }
    Ok(ComplexProfile::from_spectrum(grid, spec))
}

enum Stage {
    Free(usize),
    Kick(f64),
}

/// Stepper for the nonlinear flow. Holds the state in spectral form.
pub struct Evolver {
    grid: Grid,
    params: IntegratorParams,
    coupling: f64,
    state: SpectralState,
    flows: Vec<FreeFlow>,
    stages: Vec<Stage>,
    step: f64,
    time: f64,
    ws: FftScratch,
    buf: Vec<Complex64>,
}

const YOSHIDA_W1: f64 = 1.351_207_191_959_657_8; // 1 / (2 - 2^{1/3})
const YOSHIDA_W0: f64 = -1.702_414_383_919_315_3; // -2^{1/3} / (2 - 2^{1/3})

impl Evolver {
    /// Prepares to integrate with signed step `step` (negative steps run backward).
    pub fn new(d: &PhaseSpacePoint, params: &IntegratorParams, step: f64) -> Result<Evolver> {
        params.validate()?;
        if !(step.is_finite() && step != 0.0) {
            return Err(invalid("step", "must be finite and nonzero"));
        }
        if !d.is_finite() {
            return Err(Error::NonFinite("initial data"));
        }
        let grid = d.grid().clone();
        let guard = step.abs() * grid.mu().iter().cloned().fold(0.0, f64::max);
        if guard > params.stability_guard {
            log::warn!(
                "dt * max mu = {guard:.3} exceeds the stability guard {:.3}; splitting accuracy degrades",
                params.stability_guard
            );
        }
        let (flows, stages) = match params.order {
            SplittingOrder::Second => (
                vec![FreeFlow::new(&grid, 0.5 * step)],
                vec![Stage::Free(0), Stage::Kick(step), Stage::Free(0)],
            ),
            SplittingOrder::Fourth => {
                let (a, b) = (YOSHIDA_W1 * step, YOSHIDA_W0 * step);
                (
                    vec![FreeFlow::new(&grid, 0.5 * a), FreeFlow::new(&grid, 0.5 * (a + b))],
                    vec![
                        Stage::Free(0),
                        Stage::Kick(a),
                        Stage::Free(1),
                        Stage::Kick(b),
                        Stage::Free(1),
                        Stage::Kick(a),
                        Stage::Free(0),
                    ],
                )
            }
        };
        Ok(Evolver {
            coupling: grid.coupling(),
            params: *params,
            state: SpectralState::from_point(d),
            ws: grid.scratch(),
            buf: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid,
            flows,
            stages,
            step,
            time: 0.0,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn state(&self) -> PhaseSpacePoint {
        self.state.to_point(&self.grid)
    }

    /// Advances by one step.
    pub fn step(&mut self) -> Result<()> {
        for i in 0..self.stages.len() {
            match self.stages[i] {
                Stage::Free(j) => self.flows[j].apply(&mut self.state),
                Stage::Kick(tau) => self.kick(tau)?,
            }
        }
        self.time += self.step;
        Ok(())
    }

    pub fn run(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    fn kick(&mut self, tau: f64) -> Result<()> {
        if self.coupling == 0.0 {
            return Ok(());
        }
        let mask = self.grid.dealias_mask();
        let dealias = self.params.dealias;
        for (i, (b, &p)) in self.buf.iter_mut().zip(&self.state.phi).enumerate() {
            *b = if !dealias || mask[i] { p } else { Complex64::new(0.0, 0.0) };
        }
        self.grid.inverse(&mut self.buf, &mut self.ws);
        let mut sup = 0.0f64;
        let mut finite = true;
        for b in self.buf.iter_mut() {
            let phi = b.re;
            finite &= phi.is_finite();
            sup = sup.max(phi.abs());
            *b = Complex64::new(phi * phi * phi, 0.0);
        }
        if !finite || sup > BLOW_UP_LIMIT {
            return Err(Error::BlowUp {
                time: self.time,
                sup: if finite { sup } else { f64::INFINITY },
            });
        }
        self.grid.forward(&mut self.buf, &mut self.ws);
        let c = self.coupling * tau;
        for (i, (q, b)) in self.state.pi.iter_mut().zip(&self.buf).enumerate() {
            if !dealias || mask[i] {
                *q -= b * c;
            }
        }
        Ok(())
    }
}

/// Number of steps and signed step used to cover `t` with steps of at most `dt`.
pub fn step_plan(t: f64, dt: f64) -> (usize, f64) {
    let steps = ((t.abs() / dt) - 1e-9).ceil().max(1.0) as usize;
    (steps, t / steps as f64)
}

/// One step of the nonlinear flow with step `params.dt`.
pub fn nonlinear_step(d: &PhaseSpacePoint, params: &IntegratorParams) -> Result<PhaseSpacePoint> {
    let mut ev = Evolver::new(d, params, params.dt)?;
    ev.step()?;
    Ok(ev.state())
}

/// `U(t)`: the nonlinear flow over signed time `t`. At zero coupling this is
/// the free flow, applied in one step.
pub fn nonlinear_evolve(d: &PhaseSpacePoint, t: f64, params: &IntegratorParams) -> Result<PhaseSpacePoint> {
    if t == 0.0 {
        return Ok(d.clone());
    }
    if d.grid().coupling() == 0.0 {
        params.validate()?;
        return Ok(free_propagate(d, t));
    }
    let (steps, step) = step_plan(t, params.dt);
    let mut ev = Evolver::new(d, params, step)?;
    ev.run(steps)?;
    Ok(ev.state())
}

/// Evolves over `t`, handing every `stride`-th state (including the first
/// and the last) to `observe`.
pub fn nonlinear_evolve_observed(
    d: &PhaseSpacePoint,
    t: f64,
    params: &IntegratorParams,
    stride: usize,
    mut observe: impl FnMut(f64, &PhaseSpacePoint),
) -> Result<PhaseSpacePoint> {
    let stride = stride.max(1);
    observe(0.0, d);
    if t == 0.0 {
        return Ok(d.clone());
    }
    let (steps, step) = step_plan(t, params.dt);
    let mut ev = Evolver::new(d, params, step)?;
    for i in 1..=steps {
        ev.step()?;
        if i % stride == 0 || i == steps {
            observe(ev.time(), &ev.state());
        }
    }
    Ok(ev.state())
}

/// `E = ∫ ½π² + ½|∇φ|² + ½m²φ² + (λ/4)φ⁴`.
pub fn energy(d: &PhaseSpacePoint) -> f64 {
    let grid = d.grid();
    let h = grid.cell_volume();
    let spec = d.phi.spectrum();
    let m2 = grid.mass() * grid.mass();
    let quad: f64 = spec
        .iter()
        .zip(grid.k_squared())
        .map(|(c, &q)| c.norm_sqr() * (m2 + q))
        .sum::<f64>()
        * h
        / grid.len() as f64;
    let kinetic: f64 = d.pi.values().iter().map(|p| p * p).sum::<f64>() * h;
    let quartic: f64 = d.phi.values().iter().map(|p| p.powi(4)).sum::<f64>() * h;
    0.5 * kinetic + 0.5 * quad + 0.25 * grid.coupling() * quartic
}

/// Free energy (λ = 0 part) of Cauchy data.
pub fn free_energy(d: &PhaseSpacePoint) -> f64 {
    let quartic: f64 = d.phi.values().iter().map(|p| p.powi(4)).sum::<f64>() * d.grid().cell_volume();
    energy(d) - 0.25 * d.grid().coupling() * quartic
}

/// Sup norm of `∂ₜ²φ - Δφ + m²φ + λφ³` with the time derivative replaced by
/// the centered second difference of three snapshots spaced `dt` apart.
pub fn pde_residual(
    prev: &PhaseSpacePoint,
    cur: &PhaseSpacePoint,
    next: &PhaseSpacePoint,
    dt: f64,
) -> Result<f64> {
    cur.grid().check_same(prev.grid())?;
    cur.grid().check_same(next.grid())?;
    field_residual(&prev.phi, &cur.phi, &next.phi, dt)
}

pub(crate) fn field_residual(prev: &RealField, cur: &RealField, next: &RealField, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(invalid("dt", "must be > 0"));
    }
    let grid = cur.grid();
    let lap = laplacian(cur);
    let m2 = grid.mass() * grid.mass();
    let lambda = grid.coupling();
    let mut sup = 0.0f64;
    for i in 0..grid.len() {
        let u = cur.values()[i];
        let utt = (next.values()[i] - 2.0 * u + prev.values()[i]) / (dt * dt);
        let r = utt - lap.values()[i] + m2 * u + lambda * u * u * u;
        sup = sup.max(r.abs());
    }
    Ok(sup)
}

/// One row of the evolution log.
#[derive(Clone, Debug, Serialize)]
pub struct LogRow {
    pub t: f64,
    pub energy: f64,
    pub sup_norm: f64,
    pub l2_norm: f64,
}

impl LogRow {
    pub fn of(t: f64, d: &PhaseSpacePoint) -> LogRow {
        LogRow {
            t,
            energy: energy(d),
            sup_norm: d.phi.sup_norm(),
            l2_norm: d.phi.l2_norm(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{graph_distance, graph_norm, sobolev_norm};
    use crate::structure::{map_r, map_r_inv, time_reflect};
    use std::f64::consts::PI;

    fn grid(lambda: f64) -> Grid {
        Grid::new(1, 128, 32.0, 1.0, lambda).unwrap()
    }

    fn packet(g: &Grid, a: f64) -> PhaseSpacePoint {
        PhaseSpacePoint {
            phi: RealField::from_fn(g, |x| a * (-0.5 * x[0] * x[0]).exp()),
            pi: RealField::from_fn(g, |x| 0.5 * a * x[0] * (-0.5 * x[0] * x[0]).exp()),
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let d = packet(&grid(0.1), 0.2);
        assert_eq!(free_propagate(&d, 0.0), d);
        assert_eq!(nonlinear_evolve(&d, 0.0, &IntegratorParams::default()).unwrap(), d);
    }

    #[test]
    fn single_mode_free_solution() {
        let g = grid(0.0);
        let k = 2.0 * PI * 3.0 / 32.0;
        let w = (1.0 + k * k).sqrt();
        let d = PhaseSpacePoint {
            phi: RealField::from_fn(&g, |x| (k * x[0]).cos()),
            pi: RealField::zeros(&g),
        };
        for t in [0.3, 7.1, -12.0] {
            let out = free_propagate(&d, t);
            let exact = PhaseSpacePoint {
                phi: RealField::from_fn(&g, |x| (w * t).cos() * (k * x[0]).cos()),
                pi: RealField::from_fn(&g, |x| -w * (w * t).sin() * (k * x[0]).cos()),
            };
            assert!(graph_distance(&out, &exact).unwrap() < 1e-12);
        }
    }

    #[test]
    fn free_flow_reverses() {
        let d = packet(&grid(0.0), 0.3);
        let back = free_propagate(&free_propagate(&d, 4.2), -4.2);
        assert!(graph_distance(&back, &d).unwrap() < 1e-13);
    }

    #[test]
    fn z_flow_matches_conjugated_free_propagation() {
        let d = packet(&grid(0.0), 0.3);
        let z = map_r(&d);
        for t in [0.5, -2.0, 9.0] {
            let fast = free_flow_z(&z, t);
            let slow = map_r(&free_propagate(&map_r_inv(&z), t));
            assert!(fast.sub(&slow).unwrap().sup_norm() < 1e-13);
            assert!((sobolev_norm(&fast, 0.5) - sobolev_norm(&z, 0.5)).abs() < 1e-13);
        }
    }

    #[test]
    fn damping_contracts_and_rejects_negative() {
        let z = map_r(&packet(&grid(0.0), 0.3));
        assert!(damped_flow_z(&z, 0.0, -1.0).is_err());
        let s = 0.7;
        let out = damped_flow_z(&z, 1.3, s).unwrap();
        assert!(sobolev_norm(&out, 1.0) <= (-s).exp() * sobolev_norm(&z, 1.0));
        let same = damped_flow_z(&z, 1.3, 0.0).unwrap();
        assert!(same.sub(&free_flow_z(&z, -1.3)).unwrap().sup_norm() < 1e-13);
        let gone = damped_flow_z(&z, 0.0, 60.0).unwrap();
        assert!(gone.sup_norm() < 1e-20);
    }

    #[test]
    fn free_coupling_matches_free_flow() {
        let d = packet(&grid(0.0), 0.3);
        for order in [SplittingOrder::Second, SplittingOrder::Fourth] {
            let p = IntegratorParams::new(0.37, order, true).unwrap();
            let out = nonlinear_evolve(&d, 5.0, &p).unwrap();
            assert!(graph_distance(&out, &free_propagate(&d, 5.0)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn evolution_reverses() {
        let d = packet(&grid(0.1), 0.25);
        let p = IntegratorParams::new(0.01, SplittingOrder::Fourth, true).unwrap();
        let fwd = nonlinear_evolve(&d, 3.0, &p).unwrap();
        let back = nonlinear_evolve(&fwd, -3.0, &p).unwrap();
        assert!(graph_distance(&back, &d).unwrap() < 1e-12);
    }

    #[test]
    fn discrete_flow_commutes_with_time_reflection() {
        let d = packet(&grid(0.1), 0.25);
        let p = IntegratorParams::new(0.01, SplittingOrder::Fourth, true).unwrap();
        let a = nonlinear_evolve(&time_reflect(&d), 2.0, &p).unwrap();
        let b = time_reflect(&nonlinear_evolve(&d, -2.0, &p).unwrap());
        assert!(graph_distance(&a, &b).unwrap() <= 1e-14 * graph_norm(&d));
    }

    #[test]
    fn blow_up_guard_fires() {
        let g = grid(1.0);
        let d = PhaseSpacePoint {
            phi: RealField::from_fn(&g, |_| 1e7),
            pi: RealField::zeros(&g),
        };
        let p = IntegratorParams::new(0.01, SplittingOrder::Second, false).unwrap();
        assert!(matches!(nonlinear_evolve(&d, 0.1, &p), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn energy_of_single_mode() {
        let g = grid(0.0);
        let k = 2.0 * PI * 2.0 / 32.0;
        let a = 0.7;
        let d = PhaseSpacePoint {
            phi: RealField::from_fn(&g, |x| a * (k * x[0]).cos()),
            pi: RealField::zeros(&g),
        };
        let exact = 0.5 * a * a * (k * k + 1.0) * 32.0 / 2.0;
        assert!((energy(&d) - exact).abs() < 1e-12 * exact);
        assert_eq!(energy(&PhaseSpacePoint::zeros(&g)), 0.0);
    }

    #[test]
    fn step_plan_covers_interval() {
        assert_eq!(step_plan(1.0, 0.1), (10, 0.1));
        let (n, h) = step_plan(-1.05, 0.1);
        assert_eq!(n, 11);
        assert!((h * n as f64 + 1.05).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_order_value() {
        assert!(SplittingOrder::try_from(3).is_err());
        assert!(IntegratorParams::new(0.0, SplittingOrder::Second, true).is_err());
    }
}
