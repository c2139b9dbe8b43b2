//! Hyperboloid Hermite basis, ladder operators and coherent vectors.
//!
//! Basis elements are momentum-space samples `F(p)` on the dual lattice with
//! the one-particle product `⟨F, G⟩ = Σ_p h_p^d conj(F) G / μ(p)`. Their
//! position-space form is `G(x) = Σ_p F(p) e^{ipx}`, under which
//! multiplication by `x` is `i∇_p`. The relativistic coordinate is
//! `q = μ^{1/2} x μ^{-1/2}` in that picture, i.e. `μ^{1/2} i∇_p μ^{-1/2}` on
//! `F`, and `b = (q + ip)/√2`, `b* = (q - ip)/√2`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::ComplexProfile;
use crate::grid::{signed_index, Grid};
use crate::spectral::sobolev_inner;

pub const DEFAULT_DEGREE_CAP: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// All indices of total degree `≤ max_degree`, ordered by degree then
    /// lexicographically.
    pub fn up_to_degree(dim: usize, max_degree: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for deg in 0..=max_degree {
            let mut level = Vec::new();
            fill(dim, deg, &mut Vec::new(), &mut level);
            level.sort();
            level.reverse();
            out.extend(level);
        }
        out
    }
}

fn fill(dim: usize, remaining: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
    if prefix.len() + 1 == dim {
        prefix.push(remaining);
        out.push(MultiIndex(prefix.clone()));
        prefix.pop();
        return;
    }
    for k in 0..=remaining {
        prefix.push(k);
        fill(dim, remaining - k, prefix, out);
        prefix.pop();
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A momentum-space function on the dual lattice (FFT order).
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumFunction {
    grid: Grid,
    samples: Vec<Complex64>,
}

impl MomentumFunction {
    pub fn new(grid: &Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Length {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        Ok(MomentumFunction {
            grid: grid.clone(),
            samples,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn scaled(&self, c: Complex64) -> MomentumFunction {
        MomentumFunction {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|v| v * c).collect(),
        }
    }

    pub fn sub(&self, other: &MomentumFunction) -> Result<MomentumFunction> {
        self.grid.check_same(&other.grid)?;
        Ok(MomentumFunction {
            grid: self.grid.clone(),
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect(),
        })
    }

    /// `Σ_p h_p^d conj(F) G / μ`.
    pub fn inner(&self, other: &MomentumFunction) -> Result<Complex64> {
        self.grid.check_same(&other.grid)?;
        let hp = self.grid.momentum_cell_volume();
        let sum: Complex64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .zip(self.grid.mu())
            .map(|((a, b), &w)| a.conj() * b / w)
            .sum();
        Ok(sum * hp)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).map(|c| c.re.max(0.0).sqrt()).unwrap_or(0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `G(x_j) = Σ_p F(p) e^{ip x_j}`.
    pub fn position_space(&self) -> ComplexProfile {
        let mut buf = self.samples.clone();
        let mut ws = self.grid.scratch();
        self.grid.inverse_unnormalized(&mut buf, &mut ws);
        ComplexProfile::from_vec_unchecked(&self.grid, buf)
    }

    fn from_position_space(grid: &Grid, mut g: Vec<Complex64>) -> MomentumFunction {
        let mut ws = grid.scratch();
        grid.forward(&mut g, &mut ws);
        let inv = 1.0 / grid.len() as f64;
        g.iter_mut().for_each(|c| *c *= inv);
        MomentumFunction {
            grid: grid.clone(),
            samples: g,
        }
    }

    /// `max_p |F(p) - conj(F(-p))|`.
    pub fn reality_defect(&self) -> f64 {
        let g = &self.grid;
        let n = g.n();
        (0..g.len())
            .map(|i| {
                let idx = g.multi_index(i);
                let mut m = [0usize; 3];
                for a in 0..g.dim() {
                    m[a] = (n - idx[a]) % n;
                }
                let j = g.flat_index(&m[..g.dim()]);
                (self.samples[i] - self.samples[j].conj()).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Samples of `p_j` along `axis` with the Nyquist entry set to zero.
fn momentum_axis(grid: &Grid, axis: usize) -> Vec<f64> {
    let n = grid.n();
    (0..grid.len())
        .map(|i| {
            let j = grid.multi_index(i)[axis];
            if n % 2 == 0 && j == n / 2 {
                0.0
            } else {
                grid.wavenumber(i, axis)
            }
        })
        .collect()
}

/// `q_j F = μ^{1/2} i∇_{p_j} μ^{-1/2} F`, realized as multiplication by the
/// centered coordinate in the position picture.
pub fn coordinate_op(f: &MomentumFunction, axis: usize) -> MomentumFunction {
    let g = f.grid();
    let half = g.mu_power_symbol(0.5);
    let inv_half = g.mu_power_symbol(-0.5);
    let scaled: Vec<Complex64> = f.samples.iter().zip(&inv_half).map(|(c, s)| c * s).collect();
    let mut pos = MomentumFunction {
        grid: g.clone(),
        samples: scaled,
    }
    .position_space()
    .into_values();
    let h = g.spacing();
    let n = g.n();
    for (i, v) in pos.iter_mut().enumerate() {
        let j = g.multi_index(i)[axis];
        let x = if n % 2 == 0 && j == n / 2 {
            0.0
        } else {
            signed_index(j, n) as f64 * h
        };
        *v *= x;
    }
    let mut out = MomentumFunction::from_position_space(g, pos);
    out.samples.iter_mut().zip(&half).for_each(|(c, s)| *c *= s);
    out
}

fn ladder(f: &MomentumFunction, axis: usize, sign: f64) -> Result<MomentumFunction> {
    if axis >= f.grid().dim() {
        return Err(invalid("axis", format!("must be < {}", f.grid().dim())));
    }
    let q = coordinate_op(f, axis);
    let p = momentum_axis(f.grid(), axis);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let samples = q
        .samples
        .iter()
        .zip(&f.samples)
        .zip(&p)
        .map(|((qv, fv), &pv)| (qv + Complex64::new(0.0, sign * pv) * fv) * r)
        .collect();
    Ok(MomentumFunction {
        grid: f.grid().clone(),
        samples,
    })
}

/// `b*_j`.
pub fn raise(f: &MomentumFunction, axis: usize) -> Result<MomentumFunction> {
    ladder(f, axis, -1.0)
}

/// `b_j`.
pub fn lower(f: &MomentumFunction, axis: usize) -> Result<MomentumFunction> {
    ladder(f, axis, 1.0)
}

/// `e₀(p) = π^{-d/4} (m² + p²)^{1/4} e^{-p²/2}`, unit norm under `d^d p / μ`.
pub fn vacuum_e0(grid: &Grid) -> MomentumFunction {
    let c = std::f64::consts::PI.powf(-(grid.dim() as f64) / 4.0);
    let samples = grid
        .mu()
        .iter()
        .zip(grid.k_squared())
        .map(|(&w, &q)| Complex64::new(c * w.sqrt() * (-0.5 * q).exp(), 0.0))
        .collect();
    MomentumFunction {
        grid: grid.clone(),
        samples,
    }
}

/// `e^{-p²/2}` at the largest lattice momentum along an axis.
pub fn support_edge_value(grid: &Grid) -> f64 {
    let p = grid.max_wavenumber();
    (-0.5 * p * p).exp()
}

#[derive(Clone, Debug)]
pub struct BasisElement {
    pub index: MultiIndex,
    pub momentum: MomentumFunction,
}

impl BasisElement {
    pub fn position_space(&self) -> ComplexProfile {
        self.momentum.position_space()
    }

    /// `sup |Im G(x)|`.
    pub fn position_imag(&self) -> f64 {
        self.position_space().sup_imag()
    }
}

/// Memoized basis `e_k` on one grid.
pub struct FockBasis {
    grid: Grid,
    cap: usize,
    cache: RwLock<HashMap<MultiIndex, Arc<BasisElement>>>,
}

impl FockBasis {
    pub fn new(grid: &Grid, cap: usize) -> FockBasis {
        let edge = support_edge_value(grid);
        if edge > 1e-14 {
            log::warn!(
                "momentum lattice edge {:.3} leaves e^(-p^2/2) = {edge:.2e}; basis tails are truncated",
                grid.max_wavenumber()
            );
        }
        FockBasis {
            grid: grid.clone(),
            cap,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    fn check(&self, k: &MultiIndex) -> Result<()> {
        if k.dim() != self.grid.dim() {
            return Err(invalid("k", format!("needs {} components", self.grid.dim())));
        }
        if let Some(&d) = k.0.iter().find(|&&d| d > self.cap) {
            return Err(Error::DegreeCap { degree: d, cap: self.cap });
        }
        Ok(())
    }

    /// `e_k = Π_j (b*_j)^{k_j} e₀ / √(k!)`.
    pub fn element(&self, k: &MultiIndex) -> Result<Arc<BasisElement>> {
        self.check(k)?;
        if let Some(e) = self.cache.read().expect("basis cache poisoned").get(k) {
            return Ok(e.clone());
        }
        let momentum = match k.0.iter().position(|&d| d > 0) {
            None => vacuum_e0(&self.grid),
            Some(axis) => {
                let mut prev = k.clone();
                prev.0[axis] -= 1;
                let base = self.element(&prev)?;
                raise(&base.momentum, axis)?.scaled(Complex64::new(1.0 / (k.0[axis] as f64).sqrt(), 0.0))
            }
        };
        let e = Arc::new(BasisElement {
            index: k.clone(),
            momentum,
        });
        let mut cache = self.cache.write().expect("basis cache poisoned");
        Ok(cache.entry(k.clone()).or_insert(e).clone())
    }

    /// `φ_k(t, x) = c Σ_p h_p^d e^{iμt - ipx} e_k(p) / μ(p)` with `c = (2π)^{-d/2}`.
    pub fn phi_k(&self, k: &MultiIndex, t: f64) -> Result<ComplexProfile> {
        let e = self.element(k)?;
        let g = &self.grid;
        let c = (2.0 * std::f64::consts::PI).powf(-(g.dim() as f64) / 2.0) * g.momentum_cell_volume();
        let mut buf: Vec<Complex64> = e
            .momentum
            .samples()
            .iter()
            .zip(g.mu())
            .map(|(f, &w)| f * Complex64::from_polar(c / w, w * t))
            .collect();
        let mut ws = g.scratch();
        g.forward(&mut buf, &mut ws);
        Ok(ComplexProfile::from_vec_unchecked(g, buf))
    }

    /// Gram matrix `⟨e_k, e_l⟩` over `indices`.
    pub fn gram(&self, indices: &[MultiIndex]) -> Result<Vec<Vec<Complex64>>> {
        let elems: Vec<Arc<BasisElement>> = indices.iter().map(|k| self.element(k)).collect::<Result<_>>()?;
        elems
            .iter()
            .map(|a| elems.iter().map(|b| a.momentum.inner(&b.momentum)).collect())
            .collect()
    }

    /// Matrix elements `⟨e_k, [b_j, b*_j] e_l⟩`.
    pub fn commutator_matrix(&self, indices: &[MultiIndex], axis: usize) -> Result<Vec<Vec<Complex64>>> {
        let elems: Vec<Arc<BasisElement>> = indices.iter().map(|k| self.element(k)).collect::<Result<_>>()?;
        let comm: Vec<MomentumFunction> = elems
            .iter()
            .map(|e| {
                let ab = lower(&raise(&e.momentum, axis)?, axis)?;
                let ba = raise(&lower(&e.momentum, axis)?, axis)?;
                ab.sub(&ba)
            })
            .collect::<Result<_>>()?;
        elems
            .iter()
            .map(|a| comm.iter().map(|c| a.momentum.inner(c)).collect())
            .collect()
    }

    /// Gram matrix of `φ_k(0, ·)` in `H^{1/2}`.
    pub fn phi_gram(&self, indices: &[MultiIndex]) -> Result<Vec<Vec<Complex64>>> {
        let phis: Vec<ComplexProfile> = indices.iter().map(|k| self.phi_k(k, 0.0)).collect::<Result<_>>()?;
        phis.iter()
            .map(|a| phis.iter().map(|b| sobolev_inner(a, b, 0.5)).collect())
            .collect()
    }
}

/// Largest entrywise deviation of a square matrix from the identity.
pub fn identity_defect(m: &[Vec<Complex64>]) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).norm());
        }
    }
    worst
}

/// Finite linear combination `Σ α_j e(z_j)` of coherent vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherentCombo {
    terms: Vec<(Complex64, ComplexProfile)>,
}

impl CoherentCombo {
    pub fn new(terms: Vec<(Complex64, ComplexProfile)>) -> Result<Self> {
        if let Some((_, first)) = terms.first() {
            for (_, z) in &terms[1..] {
                first.grid().check_same(z.grid())?;
            }
        }
        Ok(CoherentCombo { terms })
    }

    pub fn single(z: ComplexProfile) -> Self {
        CoherentCombo {
            terms: vec![(Complex64::new(1.0, 0.0), z)],
        }
    }

    pub fn terms(&self) -> &[(Complex64, ComplexProfile)] {
        &self.terms
    }

    pub fn scaled(&self, c: Complex64) -> CoherentCombo {
        CoherentCombo {
            terms: self.terms.iter().map(|(a, z)| (a * c, z.clone())).collect(),
        }
    }

    /// `(χ, χ')` in Fock space.
    pub fn inner(&self, other: &CoherentCombo) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, z) in &self.terms {
            for (b, w) in &other.terms {
                acc += a.conj() * b * coherent_inner(z, w)?;
            }
        }
        Ok(acc)
    }
}

/// `(e_{z1}, e_{z2}) = exp⟨z1, z2⟩_{H^{1/2}}`.
pub fn coherent_inner(z1: &ComplexProfile, z2: &ComplexProfile) -> Result<Complex64> {
    Ok(sobolev_inner(z1, z2, 0.5)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis() -> FockBasis {
        FockBasis::new(&Grid::new(1, 256, 48.0, 1.0, 0.0).unwrap(), DEFAULT_DEGREE_CAP)
    }

    #[test]
    fn vacuum_is_normalized_and_annihilated() {
        let b = basis();
        let e0 = vacuum_e0(b.grid());
        assert!((e0.norm() - 1.0).abs() < 1e-12);
        assert!(lower(&e0, 0).unwrap().sup_norm() < 1e-10);
        assert!(e0.position_space().sup_imag() < 1e-12);
    }

    #[test]
    fn first_excitation_closed_form() {
        // b* e₀ = -i √2 p e₀.
        let b = basis();
        let e1 = b.element(&MultiIndex(vec![1])).unwrap();
        let e0 = vacuum_e0(b.grid());
        let p = momentum_axis(b.grid(), 0);
        for ((v, z), &pv) in e1.momentum.samples().iter().zip(e0.samples()).zip(&p) {
            let exact = Complex64::new(0.0, -std::f64::consts::SQRT_2 * pv) * z;
            assert!((v - exact).norm() < 1e-10);
        }
    }

    #[test]
    fn degree_cap_enforced() {
        let b = FockBasis::new(&Grid::new(1, 64, 32.0, 1.0, 0.0).unwrap(), 2);
        assert!(matches!(b.element(&MultiIndex(vec![3])), Err(Error::DegreeCap { .. })));
        assert!(b.element(&MultiIndex(vec![1, 0])).is_err());
    }

    #[test]
    fn gram_is_identity() {
        let b = basis();
        let idx = MultiIndex::up_to_degree(1, 3);
        assert!(identity_defect(&b.gram(&idx).unwrap()) < 1e-8);
        assert!(identity_defect(&b.phi_gram(&idx).unwrap()) < 1e-8);
    }

    #[test]
    fn phi_k_time_reversal_is_conjugation() {
        let b = basis();
        let k = MultiIndex(vec![2]);
        let fwd = b.phi_k(&k, 0.7).unwrap();
        let bwd = b.phi_k(&k, -0.7).unwrap();
        assert!(fwd.conj().sub(&bwd).unwrap().sup_norm() < 1e-12);
        assert!(b.phi_k(&k, 0.0).unwrap().sup_imag() < 1e-12);
    }

    #[test]
    fn index_enumeration() {
        assert_eq!(MultiIndex::up_to_degree(1, 3).len(), 4);
        let two = MultiIndex::up_to_degree(2, 2);
        assert_eq!(two.len(), 6);
        assert_eq!(two[1], MultiIndex(vec![1, 0]));
        assert_eq!(MultiIndex::up_to_degree(3, 3).len(), 20);
    }

    #[test]
    fn coherent_overlap_identities() {
        let g = Grid::new(1, 64, 16.0, 1.0, 0.0).unwrap();
        let z = crate::ensemble::gaussian_profile(&g, &[0.0], 1.0, 0.3, 0.4).unwrap();
        let w = crate::ensemble::gaussian_profile(&g, &[1.0], 1.5, 0.2, -0.3).unwrap();
        let zero = ComplexProfile::zeros(&g);
        assert_eq!(coherent_inner(&zero, &zero).unwrap(), Complex64::new(1.0, 0.0));
        let a = coherent_inner(&z, &w).unwrap();
        let b = coherent_inner(&w, &z).unwrap();
        assert!((a - b.conj()).norm() < 1e-15);
        assert!(coherent_inner(&z, &z).unwrap().re > 1.0);
    }
}
