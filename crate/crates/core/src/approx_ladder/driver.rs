use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::convolution::LipschitzApprox;
use crate::error::{Error, Result};
use crate::solver::{DriverSpec, GrowthCheck};

/// Which envelope the ladder climbs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Inf-convolutions, increasing in `n`, giving the minimal solution.
    #[default]
    Min,
    /// Sup-convolutions, decreasing in `n`, giving the maximal solution.
    Max,
}

/// A driver whose `f` and `h` are only continuous, with the growth constant
/// `K` and processes `f_t`, `h_t` declared on the wrapped [`DriverSpec`].
/// `g` is used as is and must not depend on `z`.
///
/// Approximations convolve in `y` only, with `(t, z)` frozen. Since `f` is
/// `K`-Lipschitz in `z`, the result is Lipschitz in `(y, z)`.
#[derive(Debug, Clone)]
pub struct ContinuousDriver {
    spec: DriverSpec,
    radius: f64,
    delta: f64,
    outer_radius: f64,
}

impl ContinuousDriver {
    /// `radius` is `R` of the domain box `[−R, R]^{1+m}`. The grid spacing
    /// defaults to `10⁻³R` and the search box to `[−4R, 4R]`.
    pub fn new(spec: DriverSpec, radius: f64) -> Result<Self> {
        spec.validate()?;
        if spec.g_depends_on_z() {
            return Err(Error::InvalidArgument("continuous drivers need a z-free g".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("domain radius must be positive, got {radius}")));
        }
        Ok(Self { spec, radius, delta: 1e-3 * radius, outer_radius: 4.0 * radius })
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {delta}")));
        }
        self.delta = delta;
        Ok(self)
    }

    pub fn with_outer_radius(mut self, outer_radius: f64) -> Result<Self> {
        if !(outer_radius >= self.radius) {
            return Err(Error::InvalidArgument(format!(
                "search radius {outer_radius} is smaller than the domain radius {}",
                self.radius
            )));
        }
        self.outer_radius = outer_radius;
        Ok(self)
    }

    pub fn spec(&self) -> &DriverSpec {
        &self.spec
    }

    pub fn k(&self) -> f64 {
        self.spec.k()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    /// Growth spot check on the domain box.
    pub fn spot_check(&self, horizon: f64, dim: usize, samples: usize, seed: u64) -> GrowthCheck {
        self.spec.spot_check_growth(horizon, self.radius, dim, samples, seed)
    }

    pub fn approximation(&self, n: u32) -> Result<LipschitzApprox> {
        LipschitzApprox::new(n, self.k(), self.delta, self.outer_radius)
    }

    /// `(f_n, h_n)` in place of `(f, h)`, same `g`, growth and `K`.
    pub fn approximate(&self, n: u32, direction: Direction) -> Result<DriverSpec> {
        let approx = self.approximation(n)?;
        let sign = match direction {
            Direction::Min => 1.0,
            Direction::Max => -1.0,
        };
        let k = self.k();
        let spec = self.spec.clone();
        let f = Arc::new(move |t: f64, y: f64, z: &[f64]| {
            let zn = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let (v, _) = approx.inf_1d(|u| sign * spec.f(t, u, z), spec.f_t(t) + k * zn, y);
            sign * v
        });
        let spec = self.spec.clone();
        let h = Arc::new(move |t: f64, y: f64| {
            let (v, _) = approx.inf_1d(|u| sign * spec.h(t, u), spec.h_t(t), y);
            sign * v
        });
        Ok(self.spec.replace_fh(f, h))
    }
}
