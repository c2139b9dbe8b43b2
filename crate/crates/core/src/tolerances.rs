//! Acceptance thresholds. Every bound used by `verify` lives here.

/// Relative energy drift over `T = 10` at the default step.
pub const ENERGY_DRIFT: f64 = 1e-8;
/// Expected drift exponent of the order-4 scheme and its allowance.
pub const ENERGY_ORDER: f64 = 4.0;
pub const ENERGY_ORDER_SLACK: f64 = 0.3;
/// Step ladder for the drift exponent; coarse enough to sit above roundoff.
pub const ENERGY_DT_LADDER: [f64; 3] = [0.1, 0.05, 0.025];
pub const ENERGY_HORIZON: f64 = 10.0;

/// Free flow against the single-mode solution, `H¹ ⊕ L₂`.
pub const FREE_FLOW_EXACT: f64 = 1e-12;
/// `‖free_flow_z(z, t)‖ - ‖z‖` in `H^{1/2}`.
pub const FREE_FLOW_UNITARY: f64 = 1e-13;

/// `J² = -1`, `RJ = iR`, `R⁻¹R = id` on unit-norm data.
pub const COMPLEX_STRUCTURE: f64 = 1e-13;
/// `sobolev_inner` against the direct double sum, relative.
pub const SOBOLEV_ORACLE: f64 = 1e-12;

/// Symmetry residuals are bounded by this multiple of the `dt/2`
/// self-convergence error of the same operator.
pub const SOLVER_TOLERANCE_FACTOR: f64 = 10.0;

/// `‖S d - d‖` must exceed this multiple of the solver tolerance.
pub const NONTRIVIALITY_FACTOR: f64 = 100.0;
pub const COUPLING_SWEEP: [f64; 4] = [0.025, 0.05, 0.1, 0.2];
pub const S_LAMBDA_SLOPE: f64 = 1.0;
pub const S_LAMBDA_SLACK: f64 = 0.1;

pub const INTERTWINING: f64 = 1e-7;
pub const INTERTWINING_TIMES: [f64; 2] = [0.5, 1.0];

/// Gram, ladder commutator and `φ_k` orthonormality, entrywise.
pub const BASIS_KINEMATICS: f64 = 1e-5;
/// Imaginary part of position-space basis functions.
pub const BASIS_REALITY: f64 = 1e-9;
/// Minimum error reduction per doubling of `n`.
pub const BASIS_REFINEMENT: f64 = 4.0;
/// Below this the error is at roundoff and the ratio is not informative.
pub const BASIS_FLOOR: f64 = 1e-12;
pub const BASIS_LADDER: [usize; 3] = [64, 128, 256];
pub const BASIS_LADDER_BOX: f64 = 64.0;
/// `‖e₀‖ = 1` on the three-dimensional lattice.
pub const VACUUM_NORM_3D: f64 = 1e-8;

pub const KERNEL_ALGEBRA: f64 = 1e-12;
pub const BILINEAR_HERMITIAN: f64 = 1e-10;
pub const SMEAR_DUAL: f64 = 1e-10;
/// Largest allowed spread `max/min` of the kernel bound ratio over a sweep.
pub const BOUND_SPREAD: f64 = 2.0;

pub const HOLOMORPHY_SLOPE: f64 = 2.0;
pub const HOLOMORPHY_SLACK: f64 = 0.3;
pub const HOLOMORPHY_STEPS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
pub const HOLOMORPHY_RADIUS: f64 = 0.1;
pub const HOLOMORPHY_CIRCLE_POINTS: usize = 16;
/// Residuals below this multiple of the `dt/2` noise count as zero.
pub const NOISE_FACTOR: f64 = 10.0;

pub const DIAGONAL_RATIO: f64 = 4.0;
pub const DIAGONAL_RATIO_SLACK: f64 = 0.5;
/// Snapshot spacings; the control trajectory refines at ratio 4 on all of them.
pub const DIAGONAL_DT_LADDER: [f64; 5] = [0.1, 0.05, 0.025, 0.0125, 0.00625];
pub const DIAGONAL_TIME: f64 = 1.0;

pub const BORN_EPS: [f64; 4] = [0.05, 0.1, 0.2, 0.4];
pub const BORN_REMAINDER_SLOPE: f64 = 5.0;
pub const BORN_REMAINDER_SLACK: f64 = 0.4;
pub const BORN_ORDER_SLOPE: f64 = 3.0;
pub const BORN_ORDER_SLACK: f64 = 0.2;
pub const BORN_PARITY_MIN_SLOPE: f64 = 2.8;
pub const BORN_LAMBDA_SLOPE: f64 = 2.0;
pub const BORN_LAMBDA_SLACK: f64 = 0.3;
/// Amplitude of the probe profiles in the Born checks.
pub const BORN_PROBE_AMPLITUDE: f64 = 0.25;

pub const COVARIANCE: f64 = 1e-7;
pub const COVARIANCE_FREE: f64 = 1e-11;
pub const COVARIANCE_TIME: f64 = 0.5;
