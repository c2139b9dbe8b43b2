//! The acceptance suite. Each criterion returns an [`Outcome`] with its
//! measured values; [`run_suite`] collects them into a serializable summary.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::ensemble::Ensemble;
use crate::error::{invalid, Result};
use crate::evolution::{energy, free_flow_z, free_propagate, nonlinear_evolve, nonlinear_evolve_observed, IntegratorParams, SplittingOrder};
use crate::field::{ComplexProfile, PhaseSpacePoint, RealField};
use crate::fit::{log_log_slope, refinement_ratios};
use crate::fock::{identity_defect, lower, vacuum_e0, CoherentCombo, FockBasis, MultiIndex, DEFAULT_DEGREE_CAP};
use crate::grid::{Grid, GridSpec};
use crate::perturbative::{kernel_vs_born, order_scaling, parity_scaling, remainder_scaling, ScalingFit};
use crate::scattering::{
    check_intertwining, pt_symmetry_residual, s_inverse_residual, s_inverse_residual_pt, scatter, solver_tolerance,
    t_symmetry_residual, wave_in, MatchingParams,
};
use crate::spectral::{graph_distance, graph_norm, sobolev_inner, sobolev_norm};
use crate::structure::{apply_j, map_r, map_r_inv};
use crate::tolerances as tol;
use crate::wick::{
    bilinear_form, bound_check, covariance_check, diagonal_pde_residual, holomorphy_check, kernel, kernel_out, smear,
    smear_dual, HolomorphyReport,
};

/// Version of the summary layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmokeConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub box_length: f64,
    #[serde(rename = "T")]
    pub t_match: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub grid: GridSpec,
    pub integrator: IntegratorParams,
    #[serde(rename = "T")]
    pub t_match: f64,
    pub ensemble: Ensemble,
    /// Number of random profiles used by the symmetry checks.
    pub samples: usize,
    pub seed: u64,
    /// Three-dimensional energy-conservation run.
    pub smoke: Option<SmokeConfig>,
}

impl SuiteConfig {
    pub fn acceptance() -> SuiteConfig {
        SuiteConfig {
            grid: GridSpec {
                dim: 1,
                n: 512,
                box_length: 64.0,
                mass: 1.0,
                coupling: 0.1,
            },
            integrator: IntegratorParams {
                dt: 1e-3,
                order: SplittingOrder::Fourth,
                dealias: true,
                stability_guard: std::f64::consts::PI,
            },
            t_match: 20.0,
            ensemble: Ensemble {
                amplitude: 0.04,
                cutoff: 1.5,
                window: 2.0,
            },
            samples: 5,
            seed: 1,
            smoke: Some(SmokeConfig {
                n: 32,
                box_length: 16.0,
                t_match: 4.0,
            }),
        }
    }

    /// Reduced configuration for fast repeat runs.
    pub fn quick() -> SuiteConfig {
        SuiteConfig {
            grid: GridSpec {
                dim: 1,
                n: 128,
                box_length: 32.0,
                mass: 1.0,
                coupling: 0.1,
            },
            integrator: IntegratorParams {
                dt: 0.01,
                ..SuiteConfig::acceptance().integrator
            },
            t_match: 5.0,
            samples: 2,
            smoke: None,
            ..SuiteConfig::acceptance()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        self.matching()?;
        self.ensemble.validate()?;
        if self.samples == 0 {
            return Err(invalid("samples", "must be >= 1"));
        }
        if let Some(s) = &self.smoke {
            GridSpec {
                dim: 3,
                n: s.n,
                box_length: s.box_length,
                ..self.grid
            }
            .build()?;
            if !(s.t_match > 0.0) {
                return Err(invalid("smoke.T", "must be > 0"));
            }
        }
        Ok(())
    }

    pub fn matching(&self) -> Result<MatchingParams> {
        MatchingParams::new(self.t_match, self.integrator)
    }

    fn sample(&self, grid: &Grid, index: u64) -> Result<PhaseSpacePoint> {
        self.ensemble.sample(grid, self.seed, index)
    }

    fn sample_with(&self, grid: &Grid, index: u64, amplitude: f64) -> Result<PhaseSpacePoint> {
        Ensemble {
            amplitude,
            ..self.ensemble
        }
        .sample(grid, self.seed, index)
    }
}

pub const CRITERIA: [(u8, &str); 14] = [
    (1, "energy conservation"),
    (2, "free-flow exactness"),
    (3, "complex structure"),
    (4, "T-symmetry"),
    (5, "S-inverse symmetry"),
    (6, "S nontriviality"),
    (7, "intertwining"),
    (8, "basis kinematics"),
    (9, "kernel algebra"),
    (10, "holomorphy"),
    (11, "classical diagonal"),
    (12, "Born consistency"),
    (13, "covariance"),
    (14, "determinism"),
];

pub fn criterion_name(id: u8) -> &'static str {
    CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("unknown")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub metrics: Map<String, Value>,
}

impl Outcome {
    /// One-line rendering of the headline metrics.
    pub fn line(&self) -> String {
        let metrics: Vec<String> = self
            .metrics
            .iter()
            .filter(|(_, v)| v.is_number() || v.is_boolean())
            .map(|(k, v)| match v.as_f64() {
                Some(x) if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e4) => format!("{k}={x:.3e}"),
                Some(x) => format!("{k}={x:.4}"),
                None => format!("{k}={v}"),
            })
            .collect();
        format!(
            "[{}] {:>2} {:<20} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            metrics.join(" ")
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub config: SuiteConfig,
    pub outcomes: Vec<Outcome>,
    pub passed: bool,
}

struct Metrics(Map<String, Value>);

impl Metrics {
    fn new() -> Self {
        Metrics(Map::new())
    }

    fn put(&mut self, key: &str, value: impl Into<Value>) {
        self.0.insert(key.to_string(), value.into());
    }

    fn series(&mut self, key: &str, values: &[f64]) {
        self.0.insert(key.to_string(), Value::from(values.to_vec()));
    }

    fn slope(&mut self, key: &str, s: Option<f64>) {
        self.0.insert(key.to_string(), s.map(Value::from).unwrap_or(Value::Null));
    }
}

fn outcome(id: u8, passed: bool, m: Metrics) -> Outcome {
    Outcome {
        id,
        name: criterion_name(id).to_string(),
        passed,
        metrics: m.0,
    }
}

fn within(value: Option<f64>, target: f64, slack: f64) -> bool {
    value.is_some_and(|v| (v - target).abs() <= slack)
}

/// Runs one criterion.
pub fn run_criterion(id: u8, cfg: &SuiteConfig) -> Result<Outcome> {
    cfg.validate()?;
    match id {
        1 => energy_conservation(cfg),
        2 => free_flow_exactness(cfg),
        3 => complex_structure(cfg),
        4 => t_symmetry(cfg),
        5 => s_inverse(cfg),
        6 => s_nontriviality(cfg),
        7 => intertwining(cfg),
        8 => basis_kinematics(cfg),
        9 => kernel_algebra(cfg),
        10 => holomorphy(cfg),
        11 => classical_diagonal(cfg),
        12 => born_consistency(cfg),
        13 => covariance(cfg),
        14 => determinism(cfg),
        other => Err(invalid("criterion", format!("no criterion {other}"))),
    }
}

/// Runs the listed criteria in order.
pub fn run_suite(cfg: &SuiteConfig, ids: &[u8]) -> Result<Summary> {
    let outcomes: Vec<Outcome> = ids.iter().map(|&id| run_criterion(id, cfg)).collect::<Result<_>>()?;
    Ok(Summary {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        passed: outcomes.iter().all(|o| o.passed),
        outcomes,
    })
}

fn max_energy_drift(d: &PhaseSpacePoint, ip: &IntegratorParams, horizon: f64) -> Result<f64> {
    let e0 = energy(d);
    let stride = ((0.05 / ip.dt).round() as usize).max(1);
    let mut worst = 0.0f64;
    nonlinear_evolve_observed(d, horizon, ip, stride, |_, s| {
        worst = worst.max((energy(s) - e0).abs() / e0);
    })?;
    Ok(worst)
}

fn energy_conservation(cfg: &SuiteConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let d = cfg.sample(&grid, 0)?;
    let mut m = Metrics::new();
    let drift = max_energy_drift(&d, &cfg.integrator, tol::ENERGY_HORIZON)?;
    let ladder: Vec<f64> = tol::ENERGY_DT_LADDER
        .iter()
        .map(|&dt| max_energy_drift(&d, &IntegratorParams { dt, ..cfg.integrator }, tol::ENERGY_HORIZON))
        .collect::<Result<_>>()?;
    let slope = log_log_slope(&tol::ENERGY_DT_LADDER, &ladder);
    m.put("drift", drift);
    m.series("ladder_drift", &ladder);
    m.slope("drift_exponent", slope);
    let mut passed = drift <= tol::ENERGY_DRIFT && within(slope, tol::ENERGY_ORDER, tol::ENERGY_ORDER_SLACK);
    if let Some(s) = &cfg.smoke {
        let g3 = GridSpec {
            dim: 3,
            n: s.n,
            box_length: s.box_length,
            ..cfg.grid
        }
        .build()?;
        let d3 = cfg.sample(&g3, 0)?;
        let drift3 = max_energy_drift(&d3, &cfg.integrator, s.t_match)?;
        m.put("drift_3d", drift3);
        passed &= drift3 <= tol::ENERGY_DRIFT;
    }
    Ok(outcome(1, passed, m))
}

fn free_flow_exactness(cfg: &SuiteConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let k = 2.0 * std::f64::consts::PI * 3.0 / grid.box_length();
    let w = (grid.mass() * grid.mass() + k * k).sqrt();
    let d = PhaseSpacePoint {
        phi: RealField::from_fn(&grid, |x| (k * x[0]).cos()),
        pi: RealField::zeros(&grid),
    };
    let mut exact_err = 0.0f64;
    for t in [0.5, 3.7, 20.0, -11.3, 250.0] {
        let exact = PhaseSpacePoint {
            phi: RealField::from_fn(&grid, |x| (w * t).cos() * (k * x[0]).cos()),
            pi: RealField::from_fn(&grid, |x| -w * (w * t).sin() * (k * x[0]).cos()),
        };
        exact_err = exact_err.max(graph_distance(&free_propagate(&d, t), &exact)?);
    }
    let mut unitary = 0.0f64;
    let mut paths = 0.0f64;
    for i in 0..cfg.samples as u64 {
        let z = map_r(&cfg.sample_with(&grid, i, 1.0)?);
        let n0 = sobolev_norm(&z, 0.5);
        for t in [0.5, -3.0, 17.0] {
            let f = free_flow_z(&z, t);
            unitary = unitary.max((sobolev_norm(&f, 0.5) - n0).abs());
            let slow = map_r(&free_propagate(&map_r_inv(&z), t));
            paths = paths.max(f.sub(&slow)?.sup_norm());
        }
    }
    let mut m = Metrics::new();
    m.put("single_mode_error", exact_err);
    m.put("unitarity_error", unitary);
    m.put("two_path_error", paths);
    let passed = exact_err <= tol::FREE_FLOW_EXACT && unitary <= tol::FREE_FLOW_UNITARY && paths <= tol::FREE_FLOW_UNITARY;
    Ok(outcome(2, passed, m))
}

/// `⟨z1, z2⟩_{H^s}` by explicit double sums over sites and wavenumbers.
fn sobolev_inner_direct(z1: &ComplexProfile, z2: &ComplexProfile, s: f64) -> Complex64 {
    let g = z1.grid();
    let m2 = g.mass() * g.mass();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..g.len() {
        let mut a = Complex64::new(0.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        let mut k2 = 0.0;
        for axis in 0..g.dim() {
            let kv = g.wavenumber(k, axis);
            k2 += kv * kv;
        }
        for j in 0..g.len() {
            let phase: f64 = (0..g.dim()).map(|axis| g.wavenumber(k, axis) * g.position(j, axis)).sum();
            let e = Complex64::from_polar(1.0, -phase);
            a += z1.values()[j] * e;
            b += z2.values()[j] * e;
        }
        acc += a.conj() * b * (m2 + k2).powf(s);
    }
    acc * g.cell_volume() / g.len() as f64
}

fn complex_structure(cfg: &SuiteConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let d = cfg.sample_with(&grid, 0, 1.0)?;
    let jj = apply_j(&apply_j(&d));
    let j2 = graph_norm(&jj.add(&d)?);
    let rj = map_r(&apply_j(&d));
    let ir = map_r(&d).scaled(Complex64::new(0.0, 1.0));
    let rj_err = sobolev_norm(&rj.sub(&ir)?, 1.0);
    let round = graph_distance(&map_r_inv(&map_r(&d)), &d)?;
    let isometry = (sobolev_norm(&map_r(&d), 1.0) - graph_norm(&d)).abs();
    // The direct double sum is O(N²); use a one-dimensional lattice for it.
    let ograd = if grid.len() <= 4096 {
        grid.clone()
    } else {
        GridSpec { dim: 1, ..cfg.grid }.build()?
    };
    let z1 = map_r(&cfg.sample_with(&ograd, 0, 1.0)?);
    let z2 = map_r(&cfg.sample_with(&ograd, 1, 1.0)?).scaled(Complex64::new(0.3, -0.8));
    let mut oracle = 0.0f64;
    for s in [0.0, 0.5, 1.0, -0.5] {
        let fast = sobolev_inner(&z1, &z2, s)?;
        let slow = sobolev_inner_direct(&z1, &z2, s);
        oracle = oracle.max((fast - slow).norm() / slow.norm().max(f64::MIN_POSITIVE));
    }
    let mut m = Metrics::new();
    m.put("j_squared", j2);
    m.put("rj_minus_ir", rj_err);
    m.put("round_trip", round);
    m.put("r_isometry", isometry);
    m.put("sobolev_oracle_rel", oracle);
    let passed = j2 <= tol::COMPLEX_STRUCTURE
        && rj_err <= tol::COMPLEX_STRUCTURE
        && round <= tol::COMPLEX_STRUCTURE
        && isometry <= tol::COMPLEX_STRUCTURE
        && oracle <= tol::SOBOLEV_ORACLE;
    Ok(outcome(3, passed, m))
}

fn t_symmetry(cfg: &SuiteConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let mp = cfg.matching()?;
    let mut t_res = Vec::new();
    let mut pt_res = Vec::new();
    let mut tols = Vec::new();
    for i in 0..cfg.samples as u64 {
        let d = cfg.sample(&grid, i)?;
        t_res.push(t_symmetry_residual(&d, &mp)?);
        pt_res.push(pt_symmetry_residual(&d, &mp)?);
        tols.push(solver_tolerance(&d, &mp, wave_in)?);
    }
    let passed = (0..t_res.len()).all(|i| t_res[i].max(pt_res[i]) <= tol::SOLVER_TOLERANCE_FACTOR * tols[i]);
    let mut m = Metrics::new();
    m.put("max_residual", t_res.iter().cloned().fold(0.0, f64::max));
    m.put("max_pt_residual", pt_res.iter().cloned().fold(0.0, f64::max));
    m.put("min_solver_tol", tols.iter().cloned().fold(f64::INFINITY, f64::min));
    m.series("residuals", &t_res);
    m.series("pt_residuals", &pt_res);
    m.series("solver_tolerances", &tols);
    Ok(outcome(4, passed, m))
}

fn s_inverse(cfg: &SuiteConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let mp = cfg.matching()?;
    let mut res = Vec::new();
    let mut pt = Vec::new();
    let mut tols = Vec::new();
    for i in 0..cfg.samples as u64 {
        let d = cfg.sample(&grid, i)?;
        res.push(s_inverse_residual(&d, &mp)?);
        pt.push(s_inverse_residual_pt(&d, &mp)?);
        tols.push(solver_tolerance(&d, &mp, scatter)?);
    }
    let ratio = (0..res.len()).map(|i| res[i].max(pt[i]) / tols[i]).fold(0.0, f64::max);
    let passed = (0..res.len()).all(|i| res[i].max(pt[i]) <= tol::SOLVER_TOLERANCE_FACTOR * tols[i]);
    let mut m = Metrics::new();
    m.put("max_residual", res.iter().cloned().fold(0.0, f64::max));
    m.put("max_pt_residual", pt.iter().cloned().fold(0.0, f64::max));
    m.put("worst_ratio_to_tol", ratio);
    m.series("residuals", &res);
    m.series("pt_residuals", &pt);
    m.series("solver_tolerances", &tols);
    Ok(outcome(5, passed, m))
}

fn s_nontriviality(cfg: &SuiteConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let mp = cfg.matching()?;
    let d = cfg.sample(&grid, 0)?;
    let norm = graph_norm(&d);
    let change = graph_distance(&scatter(&d, &mp)?, &d)?;
    let stol = solver_tolerance(&d, &mp, scatter)?;
    let sweep: Vec<f64> = tol::COUPLING_SWEEP
        .iter()
        .map(|&l| {
            let dl = d.on_grid(&grid.with_coupling(l)?)?;
            graph_distance(&scatter(&dl, &mp)?, &dl)
        })
        .collect::<Result<_>>()?;
    let slope = log_log_slope(&tol::COUPLING_SWEEP, &sweep);
    let mut m = Metrics::new();
    m.put("relative_change", change / norm);
    m.put("relative_solver_tol", stol / norm);
    m.put("change_over_tol", if stol > 0.0 { change / stol } else { f64::INFINITY });
    m.series("lambda_sweep", &sweep);
    m.slope("lambda_slope", slope);
    let passed = change >= tol::NONTRIVIALITY_FACTOR * stol && within(slope, tol::S_LAMBDA_SLOPE, tol::S_LAMBDA_SLACK);
    Ok(outcome(6, passed, m))
}

fn intertwining(cfg: &SuiteConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let mp = cfg.matching()?;
    let mut worst = [0.0f64; 2];
    for i in 0..cfg.samples as u64 {
        let d = cfg.sample(&grid, i)?;
        for (slot, &t) in tol::INTERTWINING_TIMES.iter().enumerate() {
            worst[slot] = worst[slot].max(check_intertwining(&d, t, &mp)?);
        }
    }
    let mut m = Metrics::new();
    m.put("residual_t0.5", worst[0]);
    m.put("residual_t1.0", worst[1]);
    let passed = worst.iter().all(|&r| r <= tol::INTERTWINING);
    Ok(outcome(7, passed, m))
}

struct BasisErrors {
    gram: f64,
    commutator: f64,
}

fn basis_errors(grid: &Grid) -> Result<BasisErrors> {
    let b = FockBasis::new(grid, DEFAULT_DEGREE_CAP);
    let idx = MultiIndex::up_to_degree(grid.dim(), 3);
    let low = MultiIndex::up_to_degree(grid.dim(), 2);
    let mut commutator = 0.0f64;
    for axis in 0..grid.dim() {
        commutator = commutator.max(identity_defect(&b.commutator_matrix(&low, axis)?));
    }
    Ok(BasisErrors {
        gram: identity_defect(&b.gram(&idx)?),
        commutator,
    })
}

fn ladder_ok(errors: &[f64]) -> (bool, Vec<f64>) {
    let ratios = refinement_ratios(errors);
    let informative: Vec<f64> = errors
        .windows(2)
        .zip(&ratios)
        .filter(|(w, _)| w[0] > tol::BASIS_FLOOR)
        .map(|(_, &r)| r)
        .collect();
    let ok = !informative.is_empty() && informative.iter().all(|&r| r >= tol::BASIS_REFINEMENT);
    (ok, ratios)
}

fn basis_kinematics(cfg: &SuiteConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let b = FockBasis::new(&grid, DEFAULT_DEGREE_CAP);
    let idx = MultiIndex::up_to_degree(grid.dim(), 3);
    let errs = basis_errors(&grid)?;
    let phi_gram = identity_defect(&b.phi_gram(&idx)?);
    let mut reality = 0.0f64;
    let mut momentum_reality = 0.0f64;
    let mut time_conj = 0.0f64;
    for k in &idx {
        let e = b.element(k)?;
        reality = reality.max(e.position_imag());
        momentum_reality = momentum_reality.max(e.momentum.reality_defect());
        reality = reality.max(b.phi_k(k, 0.0)?.sup_imag());
        let fwd = b.phi_k(k, 0.8)?;
        let bwd = b.phi_k(k, -0.8)?;
        time_conj = time_conj.max(fwd.conj().sub(&bwd)?.sup_norm());
    }
    let e0 = vacuum_e0(&grid);
    let mut annihilation = 0.0f64;
    for axis in 0..grid.dim() {
        annihilation = annihilation.max(lower(&e0, axis)?.sup_norm());
    }
    let mut ladder_gram = Vec::new();
    let mut ladder_comm = Vec::new();
    for &n in &tol::BASIS_LADDER {
        let g = Grid::new(1, n, tol::BASIS_LADDER_BOX, cfg.grid.mass, 0.0)?;
        let e = basis_errors(&g)?;
        ladder_gram.push(e.gram);
        ladder_comm.push(e.commutator);
    }
    let (gram_ok, gram_ratios) = ladder_ok(&ladder_gram);
    let (comm_ok, comm_ratios) = ladder_ok(&ladder_comm);
    let vac3 = (vacuum_e0(&Grid::new(3, 64, 32.0, cfg.grid.mass, 0.0)?).norm() - 1.0).abs();
    let mut m = Metrics::new();
    m.put("gram", errs.gram);
    m.put("commutator", errs.commutator);
    m.put("phi_gram", phi_gram);
    m.put("reality", reality);
    m.put("momentum_reality", momentum_reality);
    m.put("time_conjugation", time_conj);
    m.put("b_e0", annihilation);
    m.put("vacuum_norm_3d", vac3);
    m.series("ladder_gram", &ladder_gram);
    m.series("ladder_commutator", &ladder_comm);
    m.series("gram_ratios", &gram_ratios);
    m.series("commutator_ratios", &comm_ratios);
    let passed = errs.gram <= tol::BASIS_KINEMATICS
        && errs.commutator <= tol::BASIS_KINEMATICS
        && phi_gram <= tol::BASIS_KINEMATICS
        && reality <= tol::BASIS_REALITY
        && momentum_reality <= tol::BASIS_REALITY
        && annihilation <= 1e-6
        && vac3 <= tol::VACUUM_NORM_3D
        && gram_ok
        && comm_ok;
    Ok(outcome(8, passed, m))
}

fn test_function(grid: &Grid) -> RealField {
    RealField::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (-r2 / 4.0).exp()
    })
}

fn rel(diff: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

fn kernel_algebra(cfg: &SuiteConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let mp = cfg.matching()?;
    let z1 = map_r(&cfg.sample(&grid, 0)?);
    let z2 = map_r(&cfg.sample(&grid, 1)?);
    let h = test_function(&grid);

    let k12 = kernel(&z1, &z2, &mp)?;
    let k21 = kernel(&z2, &z1, &mp)?;
    let herm = rel(k12.full().conj().sub(&k21.full())?.sup_norm(), k12.full().sup_norm());
    let o12 = kernel_out(&z1, &z2, &mp)?;
    let o21 = kernel_out(&z2, &z1, &mp)?;
    let herm_out = rel(o12.full().conj().sub(&o21.full())?.sup_norm(), o12.full().sup_norm());

    let free = grid.with_coupling(0.0)?;
    let (f1, f2) = (z1.on_grid(&free)?, z2.on_grid(&free)?);
    let symbol = f1.conj().add(&f2)?;
    let kf = kernel(&f1, &f2, &mp)?;
    let kof = kernel_out(&f1, &f2, &mp)?;
    let free_err = rel(
        kf.profile.sub(&symbol)?.sup_norm().max(kof.profile.sub(&symbol)?.sup_norm()),
        symbol.sup_norm(),
    )
    .max((kf.prefactor - crate::fock::coherent_inner(&f1, &f2)?).norm());

    let chi1 = CoherentCombo::new(vec![
        (Complex64::new(1.0, 0.5), z1.clone()),
        (Complex64::new(-0.3, 0.2), z2.clone()),
    ])?;
    let chi2 = CoherentCombo::new(vec![
        (Complex64::new(0.4, -0.9), z2.clone()),
        (Complex64::new(0.6, 0.1), z1.scaled(Complex64::new(0.0, 1.0))),
    ])?;
    let c = Complex64::new(0.7, -1.3);
    let base = bilinear_form(&chi1, &chi2, &mp)?;
    let scale = base.sup_norm() * c.norm();
    let anti = rel(
        bilinear_form(&chi1.scaled(c), &chi2, &mp)?.sub(&base.scaled(c.conj()))?.sup_norm(),
        scale,
    );
    let lin = rel(
        bilinear_form(&chi1, &chi2.scaled(c), &mp)?.sub(&base.scaled(c))?.sup_norm(),
        scale,
    );
    let bherm = rel(
        bilinear_form(&chi2, &chi1, &mp)?.sub(&base.conj())?.sup_norm(),
        base.sup_norm(),
    );

    let s_direct = smear(&k12, &h)?;
    let s_dual = smear_dual(&k12, &h)?;
    let dual = rel((s_direct - s_dual).norm(), s_direct.norm());

    let mut ratios = Vec::new();
    for f in [0.5, 1.0, 2.0, 4.0] {
        ratios.push(bound_check(&z1.scaled_re(f), &z2.scaled_re(f), &h, &mp)?.ratio);
    }
    for &l in &tol::COUPLING_SWEEP {
        let gl = grid.with_coupling(l)?;
        ratios.push(bound_check(&z1.on_grid(&gl)?, &z2.on_grid(&gl)?, &h, &mp)?.ratio);
    }
    let free_ratio = bound_check(&f1, &f2, &h.clone(), &mp)?.ratio;
    let rmax = ratios.iter().cloned().fold(0.0, f64::max);
    let rmin = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = rmax / rmin;

    let mut m = Metrics::new();
    m.put("hermitian", herm.max(herm_out));
    m.put("free_reduction", free_err);
    m.put("antilinearity", anti);
    m.put("linearity", lin);
    m.put("bilinear_hermitian", bherm);
    m.put("smear_dual", dual);
    m.put("bound_ratio_max", rmax);
    m.put("bound_ratio_spread", spread);
    m.put("bound_ratio_free", free_ratio);
    m.series("bound_ratios", &ratios);
    let passed = herm.max(herm_out) <= tol::KERNEL_ALGEBRA
        && free_err <= tol::KERNEL_ALGEBRA
        && anti <= tol::KERNEL_ALGEBRA
        && lin <= tol::KERNEL_ALGEBRA
        && bherm <= tol::BILINEAR_HERMITIAN
        && dual <= tol::SMEAR_DUAL
        && ratios.iter().all(|r| r.is_finite())
        && spread <= tol::BOUND_SPREAD
        && free_ratio <= 1.0;
    Ok(outcome(9, passed, m))
}

/// Whether a step-refinement series converges at the expected rate down to
/// the noise floor.
fn cr_series_ok(steps: &[f64], values: &[f64], floor: f64) -> (bool, Option<f64>) {
    let (xs, ys): (Vec<f64>, Vec<f64>) = steps
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > floor)
        .map(|(&s, &v)| (s, v))
        .unzip();
    if xs.len() < 2 {
        return (true, None);
    }
    let slope = log_log_slope(&xs, &ys);
    (within(slope, tol::HOLOMORPHY_SLOPE, tol::HOLOMORPHY_SLACK), slope)
}

fn holomorphy_verdict(rep: &HolomorphyReport) -> (bool, f64, Option<f64>, Option<f64>) {
    let floor = tol::NOISE_FACTOR * rep.noise_floor + 1e-14 * rep.center_value.norm();
    let (h_ok, hs) = cr_series_ok(&rep.steps, &rep.cr_holomorphic, floor);
    let (a_ok, as_) = cr_series_ok(&rep.steps, &rep.cr_antiholomorphic, floor);
    (h_ok && a_ok && rep.circle_residual <= floor, floor, hs, as_)
}

fn holomorphy(cfg: &SuiteConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let mp = cfg.matching()?;
    let za = map_r(&cfg.sample(&grid, 0)?);
    let zb = map_r(&cfg.sample(&grid, 1)?);
    let h = test_function(&grid);
    let center = (Complex64::new(0.8, 0.3), Complex64::new(0.7, -0.4));
    let run = |za: &ComplexProfile, zb: &ComplexProfile| {
        holomorphy_check(
            za,
            zb,
            &h,
            center,
            &tol::HOLOMORPHY_STEPS,
            tol::HOLOMORPHY_RADIUS,
            tol::HOLOMORPHY_CIRCLE_POINTS,
            &mp,
        )
    };
    let rep = run(&za, &zb)?;
    let (passed, floor, hs, as_) = holomorphy_verdict(&rep);
    let free = grid.with_coupling(0.0)?;
    let control = run(&za.on_grid(&free)?, &zb.on_grid(&free)?)?;
    let (control_ok, _, chs, _) = holomorphy_verdict(&control);
    let mut m = Metrics::new();
    m.series("cr_holomorphic", &rep.cr_holomorphic);
    m.series("cr_antiholomorphic", &rep.cr_antiholomorphic);
    m.slope("slope_holomorphic", hs);
    m.slope("slope_antiholomorphic", as_);
    m.put("circle_residual", rep.circle_residual);
    m.put("noise_floor", floor);
    m.put("free_control_pass", control_ok);
    m.slope("free_control_slope", chs);
    m.put("free_control_circle", control.circle_residual);
    Ok(outcome(10, passed, m))
}

fn classical_diagonal(cfg: &SuiteConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let mp = cfg.matching()?;
    let z = map_r(&cfg.sample(&grid, 0)?);
    let t0 = tol::DIAGONAL_TIME;
    let diag: Vec<f64> = tol::DIAGONAL_DT_LADDER
        .iter()
        .map(|&dt| diagonal_pde_residual(&z, t0, dt, &mp))
        .collect::<Result<_>>()?;
    // Control: the NLKG solution through the same data at time zero.
    let start = wave_in(&map_r_inv(&z.conj().add(&z)?), &mp)?;
    let control: Vec<f64> = tol::DIAGONAL_DT_LADDER
        .iter()
        .map(|&dt| {
            let a = nonlinear_evolve(&start, t0 - dt, &cfg.integrator)?;
            let b = nonlinear_evolve(&start, t0, &cfg.integrator)?;
            let c = nonlinear_evolve(&start, t0 + dt, &cfg.integrator)?;
            crate::evolution::pde_residual(&a, &b, &c, dt)
        })
        .collect::<Result<_>>()?;
    let ratios = refinement_ratios(&diag);
    let control_ratios = refinement_ratios(&control);
    let ok = |r: &[f64]| r.iter().all(|&x| (x - tol::DIAGONAL_RATIO).abs() <= tol::DIAGONAL_RATIO_SLACK);
    let mut m = Metrics::new();
    m.series("residuals", &diag);
    m.series("ratios", &ratios);
    m.put("worst_ratio", ratios.iter().cloned().fold(f64::INFINITY, |a, b| if (b - 4.0).abs() > (a - 4.0).abs() || a.is_infinite() { b } else { a }));
    m.series("control_residuals", &control);
    m.series("control_ratios", &control_ratios);
    m.put("control_pass", ok(&control_ratios));
    Ok(outcome(11, ok(&ratios), m))
}

fn fit_metrics(m: &mut Metrics, key: &str, f: &ScalingFit) {
    let values: Vec<f64> = f.rows.iter().map(|r| r.value).collect();
    m.series(&format!("{key}_values"), &values);
    m.slope(&format!("{key}_slope"), f.exponent);
}

fn born_consistency(cfg: &SuiteConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let mp = cfg.matching()?;
    let z = map_r(&cfg.sample_with(&grid, 0, 1.0)?);
    let rem = remainder_scaling(&z, &mp, &tol::BORN_EPS)?;
    let order = order_scaling(&z, &mp, &tol::BORN_EPS)?;
    let parity = parity_scaling(&z, &mp, &tol::BORN_EPS)?;
    let z1 = map_r(&cfg.sample_with(&grid, 0, tol::BORN_PROBE_AMPLITUDE)?);
    let z2 = map_r(&cfg.sample_with(&grid, 1, tol::BORN_PROBE_AMPLITUDE)?);
    let kvb: Vec<f64> = tol::COUPLING_SWEEP
        .iter()
        .map(|&l| {
            let gl = grid.with_coupling(l)?;
            Ok(kernel_vs_born(&z1.on_grid(&gl)?, &z2.on_grid(&gl)?, &mp)?.residual)
        })
        .collect::<Result<_>>()?;
    let kvb_slope = log_log_slope(&tol::COUPLING_SWEEP, &kvb);
    let parity_ok = parity.degenerate || parity.exponent.is_some_and(|s| s >= tol::BORN_PARITY_MIN_SLOPE);
    let mut m = Metrics::new();
    fit_metrics(&mut m, "remainder", &rem);
    fit_metrics(&mut m, "order", &order);
    fit_metrics(&mut m, "parity", &parity);
    m.put("parity_identically_zero", parity.degenerate);
    m.series("kernel_vs_born", &kvb);
    m.slope("kernel_vs_born_slope", kvb_slope);
    let passed = within(rem.exponent, tol::BORN_REMAINDER_SLOPE, tol::BORN_REMAINDER_SLACK)
        && within(order.exponent, tol::BORN_ORDER_SLOPE, tol::BORN_ORDER_SLACK)
        && parity_ok
        && within(kvb_slope, tol::BORN_LAMBDA_SLOPE, tol::BORN_LAMBDA_SLACK);
    Ok(outcome(12, passed, m))
}

fn covariance(cfg: &SuiteConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let mp = cfg.matching()?;
    let z1 = map_r(&cfg.sample(&grid, 0)?);
    let z2 = map_r(&cfg.sample(&grid, 1)?);
    let mut shift = vec![0.0; grid.dim()];
    shift[0] = grid.box_length() / 8.0;
    let r = covariance_check(&z1, &z2, tol::COVARIANCE_TIME, &shift, &mp)?;
    let free = grid.with_coupling(0.0)?;
    let r0 = covariance_check(&z1.on_grid(&free)?, &z2.on_grid(&free)?, tol::COVARIANCE_TIME, &shift, &mp)?;
    let mut m = Metrics::new();
    m.put("residual", r);
    m.put("residual_free", r0);
    Ok(outcome(13, r <= tol::COVARIANCE && r0 <= tol::COVARIANCE_FREE, m))
}

fn determinism(cfg: &SuiteConfig) -> Result<Outcome> {
    let quick = SuiteConfig {
        seed: cfg.seed,
        ..SuiteConfig::quick()
    };
    let ids: Vec<u8> = (1..=13).collect();
    let a = serde_json::to_vec(&run_suite(&quick, &ids)?).map_err(|e| crate::Error::Format(e.to_string()))?;
    let b = serde_json::to_vec(&run_suite(&quick, &ids)?).map_err(|e| crate::Error::Format(e.to_string()))?;
    let mut m = Metrics::new();
    m.put("bytes", a.len() as u64);
    m.put("identical", a == b);
    Ok(outcome(14, a == b, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_double_sum_matches_fft_route() {
        let g = Grid::new(1, 32, 8.0, 1.0, 0.0).unwrap();
        let e = Ensemble::default();
        let z1 = map_r(&e.sample(&g, 3, 0).unwrap());
        let z2 = map_r(&e.sample(&g, 3, 1).unwrap());
        let a = sobolev_inner(&z1, &z2, 0.5).unwrap();
        let b = sobolev_inner_direct(&z1, &z2, 0.5);
        assert!((a - b).norm() < 1e-12 * b.norm());
    }

    #[test]
    fn ladder_rule() {
        assert!(ladder_ok(&[1e-2, 1e-5, 1e-15]).0);
        assert!(!ladder_ok(&[1e-2, 5e-3]).0);
        assert!(!ladder_ok(&[1e-15, 2e-15]).0);
    }

    #[test]
    fn cr_rule() {
        let steps = [0.2, 0.1, 0.05];
        assert!(cr_series_ok(&steps, &[4e-4, 1e-4, 2.5e-5], 1e-12).0);
        assert!(!cr_series_ok(&steps, &[1e-3, 1e-3, 1e-3], 1e-12).0);
        assert!(cr_series_ok(&steps, &[1e-13, 1e-13, 1e-13], 1e-12).0);
    }

    #[test]
    fn configs_validate_and_round_trip() {
        for c in [SuiteConfig::acceptance(), SuiteConfig::quick()] {
            c.validate().unwrap();
            let s = serde_json::to_string(&c).unwrap();
            let back: SuiteConfig = serde_json::from_str(&s).unwrap();
            assert_eq!(back, c);
        }
        assert!(run_criterion(15, &SuiteConfig::quick()).is_err());
    }
}
