//! Run configuration: a TOML file with one section per concern. Every field
//! has a default, so an empty file is a valid configuration.

use std::path::PathBuf;

use nlkg_core::ensemble::{gaussian_profile, mode_profile, Ensemble};
use nlkg_core::structure::map_r;
use nlkg_core::verify::SuiteConfig;
use nlkg_core::{ComplexProfile, FockBasis, Grid, GridSpec, IntegratorParams, MatchingParams, MultiIndex, SplittingOrder};
use serde::{Deserialize, Serialize};

/// A configuration problem, reported with the offending key.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(field: &str, reason: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("{field}: {reason}"))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub box_length: f64,
    pub m: f64,
    pub lambda: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            dim: 1,
            n: 512,
            box_length: 64.0,
            m: 1.0,
            lambda: 0.1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: f64,
    pub order: u32,
    pub dealias: bool,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection {
            dt: 1e-3,
            order: 4,
            dealias: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingSection {
    #[serde(rename = "T")]
    pub t_match: f64,
    /// Also compute `W_in` at `2T` and report the difference.
    pub cauchy_check: bool,
}

impl Default for MatchingSection {
    fn default() -> Self {
        MatchingSection {
            t_match: 20.0,
            cauchy_check: false,
        }
    }
}

/// Initial data, given as a complex profile `z`; the field data is `R⁻¹ z`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Profile {
    Gaussian {
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default = "one")]
        width: f64,
        #[serde(default = "small")]
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    Mode {
        k: Vec<i64>,
        #[serde(default = "small")]
        amplitude: f64,
    },
    /// The one-particle basis function `φ_k` at time zero.
    Hermite {
        index: Vec<usize>,
        #[serde(default = "small")]
        amplitude: f64,
    },
    /// A draw from the seeded random ensemble, scaled to graph norm `amplitude`.
    Ensemble {
        #[serde(default)]
        index: u64,
        #[serde(default = "small")]
        amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn small() -> f64 {
    0.1
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Gaussian {
            center: None,
            width: 1.0,
            amplitude: 0.1,
            phase: 0.0,
        }
    }
}

impl Profile {
    fn validate(&self, field: &str, dim: usize) -> Result<(), ConfigError> {
        let amplitude = match self {
            Profile::Gaussian {
                center, width, amplitude, ..
            } => {
                if let Some(c) = center {
                    if c.len() != dim {
                        return Err(bad(&format!("{field}.center"), format!("needs {dim} components")));
                    }
                }
                if !(*width > 0.0) {
                    return Err(bad(&format!("{field}.width"), format!("must be > 0 (got {width})")));
                }
                *amplitude
            }
            Profile::Mode { k, amplitude } => {
                if k.len() != dim {
                    return Err(bad(&format!("{field}.k"), format!("needs {dim} components")));
                }
                *amplitude
            }
            Profile::Hermite { index, amplitude } => {
                if index.len() != dim {
                    return Err(bad(&format!("{field}.index"), format!("needs {dim} components")));
                }
                *amplitude
            }
            Profile::Ensemble { amplitude, .. } => *amplitude,
        };
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(bad(&format!("{field}.amplitude"), format!("must be >= 0 (got {amplitude})")));
        }
        Ok(())
    }

    pub fn build(&self, grid: &Grid, seed: u64) -> nlkg_core::Result<ComplexProfile> {
        match self {
            Profile::Gaussian {
                center,
                width,
                amplitude,
                phase,
            } => {
                let c = center.clone().unwrap_or_else(|| vec![0.0; grid.dim()]);
                gaussian_profile(grid, &c, *width, *amplitude, *phase)
            }
            Profile::Mode { k, amplitude } => mode_profile(grid, k, *amplitude),
            Profile::Hermite { index, amplitude } => {
                let basis = FockBasis::new(grid, index.iter().sum::<usize>().max(1));
                Ok(basis.phi_k(&MultiIndex(index.clone()), 0.0)?.scaled_re(*amplitude))
            }
            Profile::Ensemble { index, amplitude } => {
                let e = Ensemble {
                    amplitude: *amplitude,
                    ..Ensemble::default()
                };
                Ok(map_r(&e.sample(grid, seed, *index)?))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSection {
    /// Final time; negative runs backward.
    pub t: f64,
    /// Log every `stride` steps.
    pub stride: usize,
}

impl Default for EvolveSection {
    fn default() -> Self {
        EvolveSection { t: 10.0, stride: 100 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterSection {
    /// Matching times for the Cauchy table; empty skips it.
    pub cauchy_times: Vec<f64>,
}

impl Default for ScatterSection {
    fn default() -> Self {
        ScatterSection {
            cauchy_times: vec![5.0, 10.0, 20.0],
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    /// Second argument of the kernel; defaults to the main profile.
    pub partner: Option<Profile>,
    /// Width of the Gaussian test function used for smearing.
    pub smear_width: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisSection {
    pub max_degree: usize,
}

impl Default for BasisSection {
    fn default() -> Self {
        BasisSection { max_degree: 3 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BornSection {
    pub eps: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl Default for BornSection {
    fn default() -> Self {
        BornSection {
            eps: vec![0.05, 0.1, 0.2, 0.4],
            lambdas: vec![0.025, 0.05, 0.1, 0.2],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Use the reduced quick preset instead of the grid/integrator sections.
    pub quick: bool,
    /// Criteria to run; empty means all.
    pub criteria: Vec<u8>,
    pub samples: usize,
    pub amplitude: f64,
    /// Run the three-dimensional energy check.
    pub smoke: bool,
}

impl Default for VerifySection {
    fn default() -> Self {
        let a = SuiteConfig::acceptance();
        VerifySection {
            quick: false,
            criteria: Vec::new(),
            samples: a.samples,
            amplitude: a.ensemble.amplitude,
            smoke: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub snapshots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            snapshots: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub grid: GridSection,
    pub integrator: IntegratorSection,
    pub matching: MatchingSection,
    pub profile: Profile,
    pub evolve: EvolveSection,
    pub scatter: ScatterSection,
    pub kernel: KernelSection,
    pub basis: BasisSection,
    pub born: BornSection,
    pub verify: VerifySection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            grid: GridSection::default(),
            integrator: IntegratorSection::default(),
            matching: MatchingSection::default(),
            profile: Profile::default(),
            evolve: EvolveSection::default(),
            scatter: ScatterSection::default(),
            kernel: KernelSection::default(),
            basis: BasisSection::default(),
            born: BornSection::default(),
            verify: VerifySection::default(),
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    /// Parses TOML text. Syntax and type errors carry the line and key.
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        if !(1..=3).contains(&g.dim) {
            return Err(bad("grid.dim", format!("must be 1, 2 or 3 (got {})", g.dim)));
        }
        if g.n < 8 || !g.n.is_power_of_two() {
            return Err(bad("grid.n", format!("must be a power of two >= 8 (got {})", g.n)));
        }
        if !(g.box_length > 0.0 && g.box_length.is_finite()) {
            return Err(bad("grid.L", format!("must be > 0 (got {})", g.box_length)));
        }
        if !(g.m > 0.0 && g.m.is_finite()) {
            return Err(bad("grid.m", format!("must be > 0 (got {})", g.m)));
        }
        if !(g.lambda >= 0.0 && g.lambda.is_finite()) {
            return Err(bad("grid.lambda", format!("must be >= 0 (got {})", g.lambda)));
        }
        let i = &self.integrator;
        if !(i.dt > 0.0 && i.dt.is_finite()) {
            return Err(bad("integrator.dt", format!("must be > 0 (got {})", i.dt)));
        }
        if i.order != 2 && i.order != 4 {
            return Err(bad("integrator.order", format!("must be 2 or 4 (got {})", i.order)));
        }
        if !(self.matching.t_match > 0.0 && self.matching.t_match.is_finite()) {
            return Err(bad("matching.T", format!("must be > 0 (got {})", self.matching.t_match)));
        }
        self.profile.validate("profile", g.dim)?;
        if let Some(p) = &self.kernel.partner {
            p.validate("kernel.partner", g.dim)?;
        }
        if let Some(w) = self.kernel.smear_width {
            if !(w > 0.0) {
                return Err(bad("kernel.smear_width", format!("must be > 0 (got {w})")));
            }
        }
        if !self.evolve.t.is_finite() {
            return Err(bad("evolve.t", "must be finite"));
        }
        if self.evolve.stride == 0 {
            return Err(bad("evolve.stride", "must be >= 1"));
        }
        if self.scatter.cauchy_times.windows(2).any(|w| w[1] <= w[0])
            || self.scatter.cauchy_times.iter().any(|&t| !(t > 0.0))
        {
            return Err(bad("scatter.cauchy_times", "must be positive and strictly increasing"));
        }
        if self.born.eps.len() < 2 || self.born.eps.iter().any(|&e| !(e > 0.0)) {
            return Err(bad("born.eps", "needs at least two positive values"));
        }
        if self.born.lambdas.len() < 2 || self.born.lambdas.iter().any(|&l| !(l > 0.0)) {
            return Err(bad("born.lambdas", "needs at least two positive values"));
        }
        if self.verify.criteria.iter().any(|&c| !(1..=14).contains(&c)) {
            return Err(bad("verify.criteria", "criteria are numbered 1 to 14"));
        }
        if self.verify.samples == 0 {
            return Err(bad("verify.samples", "must be >= 1"));
        }
        if !(self.verify.amplitude > 0.0) {
            return Err(bad("verify.amplitude", format!("must be > 0 (got {})", self.verify.amplitude)));
        }
        // Remaining structural checks are the core's own.
        self.grid().map_err(|e| bad("grid", e))?;
        self.matching().map_err(|e| bad("matching", e))?;
        Ok(())
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            dim: self.grid.dim,
            n: self.grid.n,
            box_length: self.grid.box_length,
            mass: self.grid.m,
            coupling: self.grid.lambda,
        }
    }

    pub fn grid(&self) -> nlkg_core::Result<Grid> {
        self.grid_spec().build()
    }

    pub fn integrator(&self) -> IntegratorParams {
        IntegratorParams {
            dt: self.integrator.dt,
            order: if self.integrator.order == 2 {
                SplittingOrder::Second
            } else {
                SplittingOrder::Fourth
            },
            dealias: self.integrator.dealias,
            ..IntegratorParams::default()
        }
    }

    pub fn matching(&self) -> nlkg_core::Result<MatchingParams> {
        let mut mp = MatchingParams::new(self.matching.t_match, self.integrator())?;
        mp.cauchy_check = self.matching.cauchy_check;
        Ok(mp)
    }

    pub fn suite(&self) -> SuiteConfig {
        if self.verify.quick {
            return SuiteConfig {
                seed: self.seed,
                ..SuiteConfig::quick()
            };
        }
        let base = SuiteConfig::acceptance();
        SuiteConfig {
            grid: self.grid_spec(),
            integrator: self.integrator(),
            t_match: self.matching.t_match,
            ensemble: Ensemble {
                amplitude: self.verify.amplitude,
                ..base.ensemble
            },
            samples: self.verify.samples,
            seed: self.seed,
            smoke: if self.verify.smoke { base.smoke } else { None },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let c = RunConfig::parse("").unwrap();
        c.validate().unwrap();
        assert_eq!(c.grid.n, 512);
    }

    #[test]
    fn shipped_config_is_the_default() {
        let c = RunConfig::parse(include_str!("../../../configs/default.toml")).unwrap();
        c.validate().unwrap();
        let d = RunConfig::default();
        assert_eq!(serde_json::to_value(&c).unwrap(), serde_json::to_value(&d).unwrap());
    }

    #[test]
    fn negative_mass_names_the_field() {
        let c = RunConfig::parse("[grid]\nm = -1.0\n").unwrap();
        assert!(c.validate().unwrap_err().0.starts_with("grid.m"));
    }

    #[test]
    fn unknown_key_reports_line() {
        let e = RunConfig::parse("seed = 3\n[grid]\nmass = 1.0\n").unwrap_err();
        assert!(e.0.contains("line 3"), "{e}");
        assert!(e.0.contains("mass"), "{e}");
    }

    #[test]
    fn profile_kinds_parse() {
        let c = RunConfig::parse("[profile]\nkind = \"mode\"\nk = [3]\namplitude = 0.5\n").unwrap();
        c.validate().unwrap();
        assert!(matches!(c.profile, Profile::Mode { .. }));
        let c = RunConfig::parse("[profile]\nkind = \"hermite\"\nindex = [1, 0]\n").unwrap();
        assert!(c.validate().is_err());
    }
}
