use serde::{Deserialize, Serialize};

use super::gamma::{GammaConvention, GammaInputs};
use super::quotients::{check_jump_condition, data_gaps, difference_quotients, ComparisonCase};
use super::representation::representation_check;
use crate::error::{Error, Result};

/// Node-wise ordering tolerance.
pub const ORDER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    #[default]
    Weak,
    Strict,
}

/// Claimed orderings `ξ¹ ≥ ξ²`, `f¹ ≥ f²`, `h¹ ≥ h²`; spot-checked on the
/// lattice before anything is asserted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Certificates {
    pub xi: Order,
    pub f: Order,
    pub h: Order,
}

impl Certificates {
    pub fn any_strict(&self) -> bool {
        [self.xi, self.f, self.h].contains(&Order::Strict)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    StrictHolds,
    /// The jump condition (or positivity of the implicit factor) fails, so
    /// nothing is asserted.
    Inapplicable,
    Violated,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub min_gap: f64,
    pub min_gap_at: (usize, usize),
    /// Minimum gap over the region where strict order is expected: all steps
    /// for a strict `ξ` certificate, `t < T` otherwise.
    pub strict_gap: f64,
    pub jump_condition_min: f64,
    pub implicit_factor_min: f64,
    pub representation_residual: f64,
    pub strict: bool,
    pub verdict: Verdict,
}

impl ComparisonReport {
    /// Turns a violation into [`Error::ComparisonViolated`].
    pub fn ensure(self) -> Result<Self> {
        if self.verdict == Verdict::Violated {
            let (step, node) = self.min_gap_at;
            return Err(Error::ComparisonViolated { step, node, gap: self.min_gap });
        }
        Ok(self)
    }
}

fn certificate_error(what: &str, step: usize, node: usize, gap: f64) -> Error {
    Error::InvalidArgument(format!("certificate {what} fails at step {step}, node {node} (gap {gap:e})"))
}

/// Checks the certificates at every node, evaluating `f`, `h` at both
/// solutions' values, and that both equations share `g`.
pub fn check_certificates(case: &ComparisonCase<'_>, certs: &Certificates, gaps_xi: &[f64]) -> Result<()> {
    let lattice = case.lattice;
    let n = lattice.steps();
    for (node, &gap) in gaps_xi.iter().enumerate() {
        let bad = match certs.xi {
            Order::Weak => gap < 0.0,
            Order::Strict => gap <= 0.0,
        };
        if bad {
            return Err(certificate_error("xi1 >= xi2", n, node, gap));
        }
    }
    let (d1, d2) = (case.driver1, case.driver2);
    for k in 0..n {
        let t = lattice.grid().time(k);
        for node in 0..lattice.layer(k).len() {
            for sol in [case.sol1, case.sol2] {
                let (y, z) = (sol.y(k, node), sol.z(k, node));
                let fg = d1.f(t, y, z) - d2.f(t, y, z);
                if fg < 0.0 || (certs.f == Order::Strict && fg <= 0.0) {
                    return Err(certificate_error("f1 >= f2", k, node, fg));
                }
                let hg = d1.h(t, y) - d2.h(t, y);
                if hg < 0.0 || (certs.h == Order::Strict && hg <= 0.0) {
                    return Err(certificate_error("h1 >= h2", k, node, hg));
                }
                let gg = d1.g(t, y, z) - d2.g(t, y, z);
                if gg != 0.0 {
                    return Err(certificate_error("g1 = g2", k, node, gg));
                }
            }
        }
    }
    Ok(())
}

pub fn compare(case: &ComparisonCase<'_>, certs: &Certificates) -> Result<ComparisonReport> {
    let coeffs = difference_quotients(case)?;
    let gaps = data_gaps(case)?;
    check_certificates(case, certs, &gaps.xi)?;
    let lattice = case.lattice;
    let (_, jump_condition_min) = check_jump_condition(lattice, &coeffs);
    let inputs = GammaInputs {
        lattice,
        coeffs: &coeffs,
        clock: case.sol1.clock(),
        bpath: case.sol1.brownian(),
        convention: GammaConvention::ImplicitScheme,
    };
    let implicit_factor_min = inputs.min_implicit_denominator();
    let rep = representation_check(lattice, case.sol1, case.sol2, &coeffs, &gaps)?;

    let n = lattice.steps();
    let mut min_gap = f64::INFINITY;
    let mut min_gap_at = (0, 0);
    let mut strict_gap = f64::INFINITY;
    for k in 0..=n {
        for node in 0..lattice.layer(k).len() {
            let gap = case.sol1.y(k, node) - case.sol2.y(k, node);
            if gap < min_gap {
                min_gap = gap;
                min_gap_at = (k, node);
            }
            if k < n || certs.xi == Order::Strict {
                strict_gap = strict_gap.min(gap);
            }
        }
    }
    let strict = certs.any_strict();
    let verdict = if !(jump_condition_min > 0.0 && implicit_factor_min > 0.0) {
        Verdict::Inapplicable
    } else if min_gap < -ORDER_TOL || (strict && !(strict_gap > 0.0)) {
        Verdict::Violated
    } else if strict {
        Verdict::StrictHolds
    } else {
        Verdict::Holds
    };
    Ok(ComparisonReport {
        min_gap,
        min_gap_at,
        strict_gap,
        jump_condition_min,
        implicit_factor_min,
        representation_residual: rep.max_residual.max(rep.root_residual),
        strict,
        verdict,
    })
}
