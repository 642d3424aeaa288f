//! Jump measures with finitely many atoms, their power moments, and the
//! orthonormal polynomial basis behind the Teugels martingales.
//!
//! For a Lévy measure `ν = Σ λ_k δ_{a_k}` without Gaussian part, the Teugels
//! martingales are built from the polynomials `q_i(x) = Σ_{k≤i} c_{i,k} x^{k-1}`
//! that are orthonormal in `L²(μ)` with `μ(dx) = x² ν(dx)`. With `m` distinct
//! atoms exactly `m` such polynomials exist.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gram matrices whose spectral condition number exceeds this are rejected.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub size: f64,
    pub intensity: f64,
}

impl Atom {
    pub fn new(size: f64, intensity: f64) -> Self {
        Self { size, intensity }
    }
}

/// Lévy measure made of `m` atoms with distinct nonzero sizes and positive
/// intensities (per unit time).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpMeasure {
    atoms: Vec<Atom>,
}

impl JumpMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("at least one atom is required".into()));
        }
        for (k, a) in atoms.iter().enumerate() {
            if !a.size.is_finite() || a.size == 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "atom {k}: size must be finite and nonzero, got {}",
                    a.size
                )));
            }
            if !a.intensity.is_finite() || a.intensity <= 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "atom {k}: intensity must be finite and positive, got {}",
                    a.intensity
                )));
            }
            for (j, b) in atoms[..k].iter().enumerate() {
                if b.size == a.size {
                    return Err(Error::InvalidMeasure(format!("atoms {j} and {k} share the size {}", a.size)));
                }
            }
        }
        Ok(Self { atoms })
    }

    /// Convenience constructor from `(size, intensity)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(s, l)| Atom::new(s, l)).collect())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Number of distinct jump sizes.
    pub fn dim(&self) -> usize {
        self.atoms.len()
    }

    pub fn sizes(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.size).collect()
    }

    pub fn total_intensity(&self) -> f64 {
        self.atoms.iter().map(|a| a.intensity).sum()
    }

    /// The same sizes with every intensity multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.atoms.iter().map(|a| Atom::new(a.size, a.intensity * factor)).collect())
    }

    /// Atoms of `μ(dx) = x² ν(dx)` as `(point, weight)` pairs.
    pub fn mu_weights(&self) -> Vec<(f64, f64)> {
        self.atoms.iter().map(|a| (a.size, a.size * a.size * a.intensity)).collect()
    }
}

/// `E[L_1^{(i)}] = Σ_k λ_k a_k^i` for `i = 1..=max_order`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerMomentTable {
    moments: Vec<f64>,
}

impl PowerMomentTable {
    /// Moment of order `i` (1-based). Panics when `i` is zero or beyond the
    /// table.
    pub fn get(&self, i: usize) -> f64 {
        assert!(i >= 1 && i <= self.moments.len(), "moment order {i} outside 1..={}", self.moments.len());
        self.moments[i - 1]
    }

    pub fn max_order(&self) -> usize {
        self.moments.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.moments
    }
}

pub fn power_moments(measure: &JumpMeasure, max_order: usize) -> Result<PowerMomentTable> {
    if max_order < 1 {
        return Err(Error::InvalidOrder(max_order));
    }
    let moments =
        (1..=max_order).map(|i| measure.atoms.iter().map(|a| a.intensity * a.size.powi(i as i32)).sum()).collect();
    Ok(PowerMomentTable { moments })
}

/// Symmetric Gram matrix of the monomials `1, x, …, x^{m-1}` in `L²(μ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramMatrix {
    dim: usize,
    entries: Vec<f64>,
    weights: Vec<(f64, f64)>,
}

impl GramMatrix {
    /// Wraps an explicit row-major matrix. The result carries no measure
    /// weights, so bases built from it cannot be re-integrated.
    pub fn from_entries(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        Ok(Self { dim, entries, weights: Vec::new() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry at 0-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn weights(&self) -> &[(f64, f64)] {
        &self.weights
    }

    /// Ratio of extreme eigenvalues; infinite when the smallest is not
    /// positive.
    pub fn condition_number(&self) -> f64 {
        let m = DMatrix::from_row_slice(self.dim, self.dim, &self.entries);
        let eig = SymmetricEigen::new(m).eigenvalues;
        let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

/// `G[j][k] = Σ_r w_r a_r^{j+k}` (0-based powers) with `w_r = a_r² λ_r`.
pub fn gram_matrix(measure: &JumpMeasure) -> Result<GramMatrix> {
    let m = measure.dim();
    let weights = measure.mu_weights();
    let mut entries = vec![0.0; m * m];
    for j in 0..m {
        for k in 0..=j {
            let v: f64 = weights.iter().map(|&(a, w)| w * a.powi((j + k) as i32)).sum();
            entries[j * m + k] = v;
            entries[k * m + j] = v;
        }
    }
    let gram = GramMatrix { dim: m, entries, weights };
    let condition = gram.condition_number();
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::NearSingular { condition, limit: CONDITION_LIMIT });
    }
    Ok(gram)
}

/// Orthonormal polynomials `q_i(x) = Σ_{k≤i} c_{i,k} x^{k-1}` with positive
/// leading coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthoBasis {
    dim: usize,
    coeffs: Vec<f64>,
    weights: Vec<(f64, f64)>,
}

/// Cholesky factorization `G = L Lᵀ` followed by `C = L⁻¹`. Row `i` of `C`
/// holds the monomial coefficients of `q_{i+1}`, so `C G Cᵀ = I`.
pub fn orthonormalize(gram: &GramMatrix) -> Result<OrthoBasis> {
    let m = gram.dim;
    let l = if gram.weights.len() == m { vandermonde_factor(&gram.weights)? } else { cholesky(gram)? };
    // Forward substitution, column by column: L C = I.
    let mut c = vec![0.0; m * m];
    for col in 0..m {
        for row in col..m {
            let mut s = if row == col { 1.0 } else { 0.0 };
            for k in col..row {
                s -= l[row * m + k] * c[k * m + col];
            }
            c[row * m + col] = s / l[row * m + row];
        }
    }
    Ok(OrthoBasis { dim: m, coeffs: c, weights: gram.weights.clone() })
}

/// Cholesky factor from the QR of `V[r][k] = sqrt(w_r) a_r^k`: `G = VᵀV = RᵀR`,
/// so `L = Rᵀ` after fixing signs. Loses half as many digits as factoring `G`.
fn vandermonde_factor(weights: &[(f64, f64)]) -> Result<Vec<f64>> {
    let m = weights.len();
    let v = DMatrix::from_fn(m, m, |r, k| weights[r].1.sqrt() * weights[r].0.powi(k as i32));
    let r = v.qr().r();
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        let d = r[(i, i)];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: i + 1, value: d * d });
        }
        for j in 0..=i {
            l[i * m + j] = r[(j, j)].signum() * r[(j, i)];
        }
    }
    Ok(l)
}

fn cholesky(gram: &GramMatrix) -> Result<Vec<f64>> {
    let m = gram.dim;
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = gram.get(i, j);
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::NotPositiveDefinite { pivot: i + 1, value: s });
                }
                l[i * m + i] = s.sqrt();
            } else {
                l[i * m + j] = s / l[j * m + j];
            }
        }
    }
    Ok(l)
}

impl OrthoBasis {
    /// Gram matrix, Cholesky and inversion in one go.
    pub fn for_measure(measure: &JumpMeasure) -> Result<Self> {
        orthonormalize(&gram_matrix(measure)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `c_{i,k}` with 1-based indices; zero above the diagonal.
    pub fn coeff(&self, i: usize, k: usize) -> f64 {
        self.coeffs[(i - 1) * self.dim + (k - 1)]
    }

    /// Coefficients of `q_i` in increasing powers, `c_{i,1}, …, c_{i,i}`.
    pub fn row(&self, i: usize) -> &[f64] {
        let start = (i - 1) * self.dim;
        &self.coeffs[start..start + i]
    }

    pub fn measure_weights(&self) -> &[(f64, f64)] {
        &self.weights
    }

    /// Horner evaluation of `q_i(x)`.
    pub fn eval_q(&self, i: usize, x: f64) -> Result<f64> {
        if i == 0 || i > self.dim {
            return Err(Error::IndexOutOfRange { index: i, dim: self.dim });
        }
        Ok(self.row(i).iter().rev().fold(0.0, |acc, &c| acc * x + c))
    }

    /// `max_{i,j} |Σ_k w_k q_i(a_k) q_j(a_k) − δ_ij|` over the stored measure
    /// weights. Returns `None` for bases built from a bare matrix.
    pub fn orthonormality_residual(&self) -> Option<f64> {
        if self.weights.is_empty() {
            return None;
        }
        let values: Vec<Vec<f64>> =
            (1..=self.dim).map(|i| self.weights.iter().map(|&(a, _)| self.eval_q(i, a).unwrap()).collect()).collect();
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let ip: f64 = self.weights.iter().enumerate().map(|(k, &(_, w))| w * values[i][k] * values[j][k]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).abs());
            }
        }
        Some(worst)
    }
}
