//! Grid functions: real fields, complex profiles and Cauchy data.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// A real sample array over the lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

/// A complex sample array over the lattice: a point of `H^s(ℝ^d, ℂ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexProfile {
    grid: Grid,
    values: Vec<Complex64>,
}

/// Cauchy data `(φ, π)` of the classical field.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpacePoint {
    pub phi: RealField,
    pub pi: RealField,
}

fn check_len(grid: &Grid, got: usize) -> Result<()> {
    if got != grid.len() {
        return Err(Error::Length {
            expected: grid.len(),
            got,
        });
    }
    Ok(())
}

impl RealField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        check_len(grid, values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("real field"));
        }
        Ok(RealField {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_vec_unchecked(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        RealField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        RealField::from_vec_unchecked(grid, vec![0.0; grid.len()])
    }

    /// Samples `f` at every lattice site; `f` receives centered coordinates.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|i| {
                let idx = grid.multi_index(i);
                let mut x = [0.0; 3];
                for a in 0..dim {
                    x[a] = grid.coordinate(idx[a]);
                }
                f(&x[..dim])
            })
            .collect();
        RealField::from_vec_unchecked(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Lattice approximation of `∫ f^2`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Lattice approximation of `∫ f g`.
    pub fn integral_product(&self, other: &RealField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(self.grid.cell_volume() * s)
    }

    pub fn scaled(&self, c: f64) -> RealField {
        RealField::from_vec_unchecked(&self.grid, self.values.iter().map(|v| c * v).collect())
    }

    pub fn add(&self, other: &RealField) -> Result<RealField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RealField) -> Result<RealField> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Result<RealField> {
        self.grid.check_same(&other.grid)?;
        Ok(RealField::from_vec_unchecked(
            &self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn to_complex(&self) -> ComplexProfile {
        ComplexProfile::from_vec_unchecked(
            &self.grid,
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    /// Unnormalized DFT of the samples.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut ws = self.grid.scratch();
        self.grid.forward(&mut data, &mut ws);
        data
    }

    /// Inverse of [`RealField::spectrum`]. The imaginary roundoff is dropped
    /// after checking that it is negligible.
    pub fn from_spectrum(grid: &Grid, mut spec: Vec<Complex64>) -> RealField {
        let mut ws = grid.scratch();
        grid.inverse(&mut spec, &mut ws);
        debug_assert!(imag_residual(&spec) < 1e-12, "real field has imaginary residue {}", imag_residual(&spec));
        RealField::from_vec_unchecked(grid, spec.into_iter().map(|c| c.re).collect())
    }
}

/// `sup|Im| / max(1, sup|Re|)`.
pub(crate) fn imag_residual(v: &[Complex64]) -> f64 {
    let (mut im, mut re) = (0.0f64, 0.0f64);
    for c in v {
        im = im.max(c.im.abs());
        re = re.max(c.re.abs());
    }
    im / re.max(1.0)
}

impl ComplexProfile {
    pub fn new(grid: &Grid, values: Vec<Complex64>) -> Result<Self> {
        check_len(grid, values.len())?;
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("complex profile"));
        }
        Ok(ComplexProfile {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_vec_unchecked(grid: &Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ComplexProfile {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        ComplexProfile::from_vec_unchecked(grid, vec![Complex64::new(0.0, 0.0); grid.len()])
    }

    pub fn from_parts(re: &RealField, im: &RealField) -> Result<Self> {
        re.grid.check_same(&im.grid)?;
        Ok(ComplexProfile::from_vec_unchecked(
            &re.grid,
            re.values
                .iter()
                .zip(&im.values)
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect(),
        ))
    }

    /// Builds a profile from its unnormalized DFT.
    pub fn from_spectrum(grid: &Grid, mut spec: Vec<Complex64>) -> Self {
        let mut ws = grid.scratch();
        grid.inverse(&mut spec, &mut ws);
        ComplexProfile::from_vec_unchecked(grid, spec)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut data = self.values.clone();
        let mut ws = self.grid.scratch();
        self.grid.forward(&mut data, &mut ws);
        data
    }

    pub fn re(&self) -> RealField {
        RealField::from_vec_unchecked(&self.grid, self.values.iter().map(|c| c.re).collect())
    }

    pub fn im(&self) -> RealField {
        RealField::from_vec_unchecked(&self.grid, self.values.iter().map(|c| c.im).collect())
    }

    /// Pointwise complex conjugate of the position-space samples.
    pub fn conj(&self) -> ComplexProfile {
        ComplexProfile::from_vec_unchecked(&self.grid, self.values.iter().map(|c| c.conj()).collect())
    }

    pub fn scaled(&self, c: Complex64) -> ComplexProfile {
        ComplexProfile::from_vec_unchecked(&self.grid, self.values.iter().map(|v| c * v).collect())
    }

    pub fn scaled_re(&self, c: f64) -> ComplexProfile {
        ComplexProfile::from_vec_unchecked(&self.grid, self.values.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &ComplexProfile) -> Result<ComplexProfile> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexProfile) -> Result<ComplexProfile> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &ComplexProfile,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<ComplexProfile> {
        self.grid.check_same(&other.grid)?;
        Ok(ComplexProfile::from_vec_unchecked(
            &self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn sup_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    /// Lattice approximation of `∫ f(x) h(x) dx` (no conjugation).
    pub fn integrate_against(&self, h: &RealField) -> Result<Complex64> {
        self.grid.check_same(h.grid())?;
        let s: Complex64 = self.values.iter().zip(h.values()).map(|(a, &b)| a * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    /// Cyclic lattice shift: `out(x) = self(x - shift)` with `shift` in sites.
    pub fn shifted_sites(&self, shift: &[i64]) -> ComplexProfile {
        let g = &self.grid;
        let n = g.n() as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        for (i, slot) in out.iter_mut().enumerate() {
            let idx = g.multi_index(i);
            let mut src = [0usize; 3];
            for a in 0..g.dim() {
                src[a] = (idx[a] as i64 - shift.get(a).copied().unwrap_or(0)).rem_euclid(n) as usize;
            }
            *slot = self.values[g.flat_index(&src[..g.dim()])];
        }
        ComplexProfile::from_vec_unchecked(g, out)
    }
}

impl PhaseSpacePoint {
    pub fn new(phi: RealField, pi: RealField) -> Result<Self> {
        phi.grid.check_same(&pi.grid)?;
        Ok(PhaseSpacePoint { phi, pi })
    }

    pub fn zeros(grid: &Grid) -> Self {
        PhaseSpacePoint {
            phi: RealField::zeros(grid),
            pi: RealField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.phi.grid()
    }

    pub fn scaled(&self, c: f64) -> PhaseSpacePoint {
        PhaseSpacePoint {
            phi: self.phi.scaled(c),
            pi: self.pi.scaled(c),
        }
    }

    pub fn add(&self, other: &PhaseSpacePoint) -> Result<PhaseSpacePoint> {
        Ok(PhaseSpacePoint {
            phi: self.phi.add(&other.phi)?,
            pi: self.pi.add(&other.pi)?,
        })
    }

    pub fn sub(&self, other: &PhaseSpacePoint) -> Result<PhaseSpacePoint> {
        Ok(PhaseSpacePoint {
            phi: self.phi.sub(&other.phi)?,
            pi: self.pi.sub(&other.pi)?,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.phi.values.iter().chain(&self.pi.values).all(|v| v.is_finite())
    }

    /// Rebinds the data to a grid with the same lattice (e.g. another coupling).
    pub fn on_grid(&self, grid: &Grid) -> Result<PhaseSpacePoint> {
        self.grid().check_same(grid)?;
        Ok(PhaseSpacePoint {
            phi: RealField::from_vec_unchecked(grid, self.phi.values.clone()),
            pi: RealField::from_vec_unchecked(grid, self.pi.values.clone()),
        })
    }
}

impl ComplexProfile {
    pub fn on_grid(&self, grid: &Grid) -> Result<ComplexProfile> {
        self.grid.check_same(grid)?;
        Ok(ComplexProfile::from_vec_unchecked(grid, self.values.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(1, 64, 8.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn rejects_wrong_length_and_nan() {
        let g = grid();
        assert!(matches!(RealField::new(&g, vec![0.0; 10]), Err(Error::Length { .. })));
        let mut v = vec![0.0; 64];
        v[3] = f64::NAN;
        assert!(matches!(RealField::new(&g, v), Err(Error::NonFinite(_))));
    }

    #[test]
    fn spectrum_round_trip() {
        let g = grid();
        let f = RealField::from_fn(&g, |x| (-x[0] * x[0]).exp() * (3.0 * x[0]).sin());
        let back = RealField::from_spectrum(&g, f.spectrum());
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() <= 1e-13 * f.sup_norm());
        }
    }

    #[test]
    fn shift_moves_samples() {
        let g = grid();
        let f = RealField::from_fn(&g, |x| x[0]).to_complex();
        let s = f.shifted_sites(&[2]);
        assert_eq!(s.values()[5], f.values()[3]);
        assert_eq!(s.values()[0], f.values()[62]);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = RealField::zeros(&grid());
        let b = RealField::zeros(&Grid::new(1, 64, 9.0, 1.0, 0.0).unwrap());
        assert!(matches!(a.add(&b), Err(Error::GridMismatch)));
    }
}
