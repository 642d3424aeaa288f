use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::path_engine::{path_rng, Stream};

pub type DriverFn = Arc<dyn Fn(f64, f64, &[f64]) -> f64 + Send + Sync>;
pub type CoefFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type BoundFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Coefficient of the backward Brownian integral.
#[derive(Clone)]
pub enum NoiseCoef {
    Plain(CoefFn),
    /// `g(t, y, z)`, only admissible in Lipschitz mode.
    WithZ(DriverFn),
}

/// Constants of the Lipschitz mode: `alpha` is the z-contraction constant of
/// `g`; `beta1`, `beta2` are recorded for diagnostics only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzConstants {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
}

/// The coefficients `(f, h, g)` with their declared growth processes and
/// constants.
#[derive(Clone)]
pub struct DriverSpec {
    f: DriverFn,
    h: CoefFn,
    g: NoiseCoef,
    f_t: BoundFn,
    h_t: BoundFn,
    g_t: BoundFn,
    k: f64,
    g_k: Option<f64>,
    lipschitz: Option<LipschitzConstants>,
}

impl fmt::Debug for DriverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriverSpec")
            .field("k", &self.k)
            .field("g_depends_on_z", &self.g_depends_on_z())
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

impl Default for DriverSpec {
    fn default() -> Self {
        Self::zero()
    }
}

impl DriverSpec {
    /// `f = g = h = 0`, zero growth processes and `K = 1`.
    pub fn zero() -> Self {
        Self {
            f: Arc::new(|_, _, _| 0.0),
            h: Arc::new(|_, _| 0.0),
            g: NoiseCoef::Plain(Arc::new(|_, _| 0.0)),
            f_t: Arc::new(|_| 0.0),
            h_t: Arc::new(|_| 0.0),
            g_t: Arc::new(|_| 0.0),
            k: 1.0,
            g_k: None,
            lipschitz: None,
        }
    }

    pub fn with_f(mut self, f: impl Fn(f64, f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.f = Arc::new(f);
        self
    }

    pub fn with_h(mut self, h: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.h = Arc::new(h);
        self
    }

    pub fn with_g(mut self, g: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.g = NoiseCoef::Plain(Arc::new(g));
        self
    }

    /// z-dependent `g`; requires [`DriverSpec::lipschitz`] before solving.
    pub fn with_g_z(mut self, g: impl Fn(f64, f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.g = NoiseCoef::WithZ(Arc::new(g));
        self
    }

    pub fn with_growth(
        mut self,
        f_t: impl Fn(f64) -> f64 + Send + Sync + 'static,
        h_t: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_t: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.f_t = Arc::new(f_t);
        self.h_t = Arc::new(h_t);
        self.g_t = Arc::new(g_t);
        self
    }

    /// Constant growth processes.
    pub fn with_constant_growth(self, f_t: f64, h_t: f64, g_t: f64) -> Self {
        self.with_growth(move |_| f_t, move |_| h_t, move |_| g_t)
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    /// Separate constant for `g`: `|g(t, y)| ≤ g_t + K_g|y|` and `g` is
    /// `K_g`-Lipschitz in `y`. Defaults to `K`.
    pub fn with_g_k(mut self, k: f64) -> Self {
        self.g_k = Some(k);
        self
    }

    pub fn lipschitz(mut self, alpha: f64, beta1: f64, beta2: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        self.lipschitz = Some(LipschitzConstants { alpha, beta1, beta2 });
        Ok(self)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn g_k(&self) -> f64 {
        self.g_k.unwrap_or(self.k)
    }

    pub fn lipschitz_constants(&self) -> Option<LipschitzConstants> {
        self.lipschitz
    }

    pub fn g_depends_on_z(&self) -> bool {
        matches!(self.g, NoiseCoef::WithZ(_))
    }

    pub fn f(&self, t: f64, y: f64, z: &[f64]) -> f64 {
        (self.f)(t, y, z)
    }

    pub fn h(&self, t: f64, y: f64) -> f64 {
        (self.h)(t, y)
    }

    pub fn g(&self, t: f64, y: f64, z: &[f64]) -> f64 {
        match &self.g {
            NoiseCoef::Plain(g) => g(t, y),
            NoiseCoef::WithZ(g) => g(t, y, z),
        }
    }

    pub fn f_t(&self, t: f64) -> f64 {
        (self.f_t)(t)
    }

    pub fn h_t(&self, t: f64) -> f64 {
        (self.h_t)(t)
    }

    pub fn g_t(&self, t: f64) -> f64 {
        (self.g_t)(t)
    }

    pub(crate) fn replace_fh(&self, f: DriverFn, h: CoefFn) -> Self {
        Self { f, h, ..self.clone() }
    }

    /// Rejects z-dependent `g` outside Lipschitz mode.
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidArgument(format!("growth constant K must be positive, got {}", self.k)));
        }
        if !(self.g_k() >= 0.0 && self.g_k().is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "growth constant of g must be nonnegative, got {}",
                self.g_k()
            )));
        }
        if self.g_depends_on_z() && self.lipschitz.is_none() {
            return Err(Error::InvalidArgument("a z-dependent g requires Lipschitz mode".into()));
        }
        Ok(())
    }

    /// Samples `(t, y, z)` uniformly in `[0, T] × [−R, R]^{1+m}` and returns
    /// the largest excess of `|f|`, `|h|`, `|g|` over their declared growth
    /// bounds (0 when every bound held).
    pub fn spot_check_growth(&self, horizon: f64, radius: f64, dim: usize, samples: usize, seed: u64) -> GrowthCheck {
        let mut rng = path_rng(seed, 0, Stream::Lattice);
        let mut worst = GrowthCheck::default();
        let mut z = vec![0.0; dim];
        for _ in 0..samples {
            let t = rng.random_range(0.0..=horizon);
            let y = rng.random_range(-radius..=radius);
            for zi in z.iter_mut() {
                *zi = rng.random_range(-radius..=radius);
            }
            let zn = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            worst.f = worst.f.max(self.f(t, y, &z).abs() - self.f_t(t) - self.k * (y.abs() + zn));
            worst.h = worst.h.max(self.h(t, y).abs() - self.h_t(t) - self.k * y.abs());
            let g_bound = self.g_t(t) + self.g_k() * y.abs() + self.lipschitz.map_or(0.0, |l| l.alpha.sqrt() * zn);
            worst.g = worst.g.max(self.g(t, y, &z).abs() - g_bound);
        }
        worst
    }

    /// Samples pairs and returns the largest observed Lipschitz ratios: `f` in
    /// `(y, z)` and `h` in `y` (against `K`), `g` in `y` (against `K_g`), and
    /// `g` in `z` (against `√alpha`).
    pub fn spot_check_lipschitz(
        &self,
        horizon: f64,
        radius: f64,
        dim: usize,
        samples: usize,
        seed: u64,
    ) -> LipschitzCheck {
        let mut rng = path_rng(seed, 1, Stream::Lattice);
        let mut out = LipschitzCheck::default();
        let mut z1 = vec![0.0; dim];
        let mut z2 = vec![0.0; dim];
        for _ in 0..samples {
            let t = rng.random_range(0.0..=horizon);
            let (y1, y2) = (rng.random_range(-radius..=radius), rng.random_range(-radius..=radius));
            for i in 0..dim {
                z1[i] = rng.random_range(-radius..=radius);
                z2[i] = rng.random_range(-radius..=radius);
            }
            let dy = (y1 - y2).abs();
            let dz = z1.iter().zip(&z2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if dy + dz > 0.0 {
                out.f = out.f.max((self.f(t, y1, &z1) - self.f(t, y2, &z2)).abs() / (dy + dz));
            }
            if dy > 0.0 {
                out.h = out.h.max((self.h(t, y1) - self.h(t, y2)).abs() / dy);
                out.g_y = out.g_y.max((self.g(t, y1, &z1) - self.g(t, y2, &z1)).abs() / dy);
            }
            if dz > 0.0 {
                out.g_z = out.g_z.max((self.g(t, y1, &z1) - self.g(t, y1, &z2)).abs() / dz);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct GrowthCheck {
    pub f: f64,
    pub h: f64,
    pub g: f64,
}

impl GrowthCheck {
    pub fn holds(&self, slack: f64) -> bool {
        self.f <= slack && self.h <= slack && self.g <= slack
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LipschitzCheck {
    pub f: f64,
    pub h: f64,
    pub g_y: f64,
    pub g_z: f64,
}

/// What the terminal condition may look at.
#[derive(Debug, Clone, Copy)]
pub struct TerminalState<'a> {
    pub counts: &'a [u32],
    pub levy: f64,
    pub clock: f64,
    pub brownian: f64,
}

/// `ξ` as a function of the terminal lattice state.
#[derive(Clone)]
pub struct TerminalSpec(Arc<dyn Fn(&TerminalState<'_>) -> f64 + Send + Sync>);

impl fmt::Debug for TerminalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TerminalSpec(..)")
    }
}

impl TerminalSpec {
    pub fn new(xi: impl Fn(&TerminalState<'_>) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(xi))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    /// `c0 + c_L L_T + c_A A_T + c_B B_T`.
    pub fn affine(c0: f64, levy: f64, clock: f64, brownian: f64) -> Self {
        Self::new(move |s| c0 + levy * s.levy + clock * s.clock + brownian * s.brownian)
    }

    pub fn eval(&self, state: &TerminalState<'_>) -> f64 {
        (self.0)(state)
    }
}
