use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::{check_shapes, terminal_layer, DriverSpec, JumpLattice, Solution, TerminalSpec};

/// Denominators below this (relative to the operands) count as zero.
pub const QUOTIENT_ZERO: f64 = 1e-14;

fn quotient(num: f64, x1: f64, x2: f64) -> f64 {
    let den = x1 - x2;
    if den.abs() <= QUOTIENT_ZERO * x1.abs().max(x2.abs()).max(1.0) {
        0.0
    } else {
        num / den
    }
}

/// Per-node coefficients of the linearized difference equation, steps `k < N`.
#[derive(Debug, Clone, Serialize)]
pub struct LinearizedCoeffs {
    dim: usize,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
}

impl LinearizedCoeffs {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self, k: usize, node: usize) -> f64 {
        self.a[k][node]
    }

    pub fn b(&self, k: usize, node: usize) -> f64 {
        self.b[k][node]
    }

    pub fn c(&self, k: usize, node: usize) -> f64 {
        self.c[k][node]
    }

    pub fn beta(&self, k: usize, node: usize) -> &[f64] {
        &self.beta[k][node * self.dim..(node + 1) * self.dim]
    }

    /// Coefficients given directly, one value per node of each layer `k < N`.
    pub fn from_fields(
        lattice: &JumpLattice,
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        beta: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let m = lattice.dim();
        let n = lattice.steps();
        for field in [&a, &b, &c] {
            if field.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: field.len() });
            }
        }
        if beta.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: beta.len() });
        }
        for k in 0..n {
            let len = lattice.layer(k).len();
            for field in [&a, &b, &c] {
                if field[k].len() != len {
                    return Err(Error::DimensionMismatch { expected: len, found: field[k].len() });
                }
            }
            if beta[k].len() != len * m {
                return Err(Error::DimensionMismatch { expected: len * m, found: beta[k].len() });
            }
        }
        Ok(Self { dim: m, a, b, c, beta })
    }

    /// Builds coefficients node by node from a closure returning
    /// `(a, b, c, beta)`.
    pub fn from_fn(
        lattice: &JumpLattice,
        mut f: impl FnMut(usize, usize) -> (f64, f64, f64, Vec<f64>),
    ) -> Result<Self> {
        let m = lattice.dim();
        let n = lattice.steps();
        let (mut a, mut b, mut c, mut beta) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for k in 0..n {
            let len = lattice.layer(k).len();
            let (mut ak, mut bk, mut ck, mut betak) =
                (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len * m]);
            for node in 0..len {
                let (x, y, z, w) = f(k, node);
                if w.len() != m {
                    return Err(Error::DimensionMismatch { expected: m, found: w.len() });
                }
                ak[node] = x;
                bk[node] = y;
                ck[node] = z;
                betak[node * m..(node + 1) * m].copy_from_slice(&w);
            }
            a.push(ak);
            b.push(bk);
            c.push(ck);
            beta.push(betak);
        }
        Ok(Self { dim: m, a, b, c, beta })
    }
}

/// The data gaps `ξ̄`, `f̄ = f¹(Y², Z²) − f²(Y², Z²)`, `h̄`, `ḡ` on the lattice.
#[derive(Debug, Clone, Serialize)]
pub struct DataGaps {
    pub xi: Vec<f64>,
    pub f: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
}

impl DataGaps {
    /// All gaps zero except `ξ̄`.
    pub fn terminal_only(lattice: &JumpLattice, xi: Vec<f64>) -> Self {
        let zeros: Vec<Vec<f64>> = (0..lattice.steps()).map(|k| vec![0.0; lattice.layer(k).len()]).collect();
        Self { xi, f: zeros.clone(), h: zeros.clone(), g: zeros }
    }
}

/// Two solutions on one lattice with their data.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonCase<'a> {
    pub lattice: &'a JumpLattice,
    pub driver1: &'a DriverSpec,
    pub driver2: &'a DriverSpec,
    pub terminal1: &'a TerminalSpec,
    pub terminal2: &'a TerminalSpec,
    pub sol1: &'a Solution,
    pub sol2: &'a Solution,
}

impl ComparisonCase<'_> {
    pub fn validate(&self) -> Result<()> {
        let (s1, s2) = (self.sol1, self.sol2);
        check_shapes(self.lattice, s1.brownian(), s1.clock())?;
        if s1.brownian() != s2.brownian() || s1.clock() != s2.clock() || s1.steps() != s2.steps() {
            return Err(Error::Mismatched);
        }
        for k in 0..=self.lattice.steps() {
            if s1.y_layer(k).len() != self.lattice.layer(k).len() || s2.y_layer(k).len() != self.lattice.layer(k).len()
            {
                return Err(Error::Mismatched);
            }
        }
        if self.driver1.g_depends_on_z() || self.driver2.g_depends_on_z() {
            return Err(Error::InvalidArgument("comparison needs z-free g".into()));
        }
        Ok(())
    }
}

fn finite(v: f64, step: usize, node: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { step, node })
    }
}

pub fn difference_quotients(case: &ComparisonCase<'_>) -> Result<LinearizedCoeffs> {
    case.validate()?;
    let lattice = case.lattice;
    let (d1, s1, s2) = (case.driver1, case.sol1, case.sol2);
    let m = lattice.dim();
    let mut err = None;
    let coeffs = LinearizedCoeffs::from_fn(lattice, |k, node| {
        let t = lattice.grid().time(k);
        let (y1, y2) = (s1.y(k, node), s2.y(k, node));
        let (z1, z2) = (s1.z(k, node), s2.z(k, node));
        let a = quotient(d1.f(t, y1, z1) - d1.f(t, y2, z1), y1, y2);
        let b = quotient(d1.h(t, y1) - d1.h(t, y2), y1, y2);
        let c = quotient(d1.g(t, y1, z1) - d1.g(t, y2, z1), y1, y2);
        let mut beta = vec![0.0; m];
        let mut prev = z1.to_vec();
        let mut f_prev = d1.f(t, y2, &prev);
        for i in 0..m {
            let mut next = prev.clone();
            next[i] = z2[i];
            let f_next = d1.f(t, y2, &next);
            beta[i] = quotient(f_prev - f_next, z1[i], z2[i]);
            prev = next;
            f_prev = f_next;
        }
        for v in [a, b, c].iter().chain(&beta) {
            if let Err(e) = finite(*v, k, node) {
                err.get_or_insert(e);
            }
        }
        (a, b, c, beta)
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(coeffs)
}

pub fn data_gaps(case: &ComparisonCase<'_>) -> Result<DataGaps> {
    case.validate()?;
    let lattice = case.lattice;
    let (s1, s2) = (case.sol1, case.sol2);
    let xi1 = terminal_layer(lattice, case.terminal1, s1.brownian(), s1.clock())?;
    let xi2 = terminal_layer(lattice, case.terminal2, s2.brownian(), s2.clock())?;
    let xi = xi1.iter().zip(&xi2).map(|(a, b)| a - b).collect();
    let (mut f, mut h, mut g) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..lattice.steps() {
        let t = lattice.grid().time(k);
        let len = lattice.layer(k).len();
        let (mut fk, mut hk, mut gk) = (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
        for node in 0..len {
            let (y2, z2) = (s2.y(k, node), s2.z(k, node));
            fk.push(finite(case.driver1.f(t, y2, z2) - case.driver2.f(t, y2, z2), k, node)?);
            hk.push(finite(case.driver1.h(t, y2) - case.driver2.h(t, y2), k, node)?);
            gk.push(finite(case.driver1.g(t, y2, z2) - case.driver2.g(t, y2, z2), k, node)?);
        }
        f.push(fk);
        h.push(hk);
        g.push(gk);
    }
    Ok(DataGaps { xi, f, h, g })
}

/// Largest `|a Ȳ + Σ β^i Z̄^i + f̄ − (f¹(Y¹, Z¹) − f²(Y², Z²))|` over nodes.
pub fn linearization_residual(case: &ComparisonCase<'_>, coeffs: &LinearizedCoeffs, gaps: &DataGaps) -> f64 {
    let lattice = case.lattice;
    let (s1, s2) = (case.sol1, case.sol2);
    let mut worst = 0.0f64;
    for k in 0..lattice.steps() {
        let t = lattice.grid().time(k);
        for node in 0..lattice.layer(k).len() {
            let (y1, y2) = (s1.y(k, node), s2.y(k, node));
            let (z1, z2) = (s1.z(k, node), s2.z(k, node));
            let lin = coeffs.a(k, node) * (y1 - y2)
                + coeffs.beta(k, node).iter().zip(z1.iter().zip(z2)).map(|(b, (p, q))| b * (p - q)).sum::<f64>()
                + gaps.f[k][node];
            let exact = case.driver1.f(t, y1, z1) - case.driver2.f(t, y2, z2);
            worst = worst.max((lin - exact).abs());
        }
    }
    worst
}

/// Global minimum of `1 + Σ_i β^i_k e^{(i)}(branch)` over steps, nodes and
/// branches (the no-jump branch included), and whether it is positive.
pub fn check_jump_condition(lattice: &JumpLattice, coeffs: &LinearizedCoeffs) -> (bool, f64) {
    let mut min = f64::INFINITY;
    for k in 0..coeffs.steps() {
        for node in 0..lattice.layer(k).len() {
            let beta = coeffs.beta(k, node);
            for b in 0..lattice.branches() {
                let v = 1.0 + beta.iter().zip(lattice.increments(b)).map(|(x, e)| x * e).sum::<f64>();
                min = min.min(v);
            }
        }
    }
    if coeffs.steps() == 0 {
        min = 1.0;
    }
    (min > 0.0, min)
}
