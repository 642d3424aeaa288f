use serde::Serialize;

use super::ladder::LadderResult;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchyRow {
    pub n: u32,
    pub next_n: u32,
    /// `E∫|Y^n − Y^{n'}|²(ds + dA)`.
    pub y_gap: f64,
    /// `E∫‖Z^n − Z^{n'}‖²ds`.
    pub z_gap: f64,
    /// `z_gap / √y_gap`; `None` when both gaps vanish.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CauchyReport {
    pub rows: Vec<CauchyRow>,
    /// Smallest `C'` with `z_gap ≤ C'·√y_gap` on every row; infinite when a
    /// Z-gap survives a vanishing Y-gap.
    pub fitted_constant: f64,
    /// The constant computed from the data before solving.
    pub apriori_constant: f64,
    pub bounded: bool,
    /// Y-gaps strictly decrease from the second row on.
    pub y_gaps_decreasing: bool,
}

pub fn cauchy_diagnostics(result: &LadderResult) -> Result<CauchyReport> {
    if result.rungs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "Cauchy diagnostics need at least 3 rungs, got {}",
            result.rungs.len()
        )));
    }
    let rows: Vec<CauchyRow> = result
        .rungs
        .windows(2)
        .filter_map(|w| {
            let gap = w[1].gap?;
            let ratio = if gap.y_l2 > 0.0 {
                Some(gap.z_l2 / gap.y_l2.sqrt())
            } else if gap.z_l2 > 0.0 {
                Some(f64::INFINITY)
            } else {
                None
            };
            Some(CauchyRow { n: w[0].n, next_n: w[1].n, y_gap: gap.y_l2, z_gap: gap.z_l2, ratio })
        })
        .collect();
    let fitted_constant = rows.iter().filter_map(|r| r.ratio).fold(0.0, f64::max);
    let y_gaps_decreasing = rows.windows(2).skip(1).all(|w| w[1].y_gap < w[0].y_gap);
    Ok(CauchyReport {
        rows,
        fitted_constant,
        apriori_constant: result.cauchy_bound,
        bounded: fitted_constant <= result.cauchy_bound,
        y_gaps_decreasing,
    })
}
