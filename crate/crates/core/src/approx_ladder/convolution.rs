use serde::Serialize;

use crate::error::{Error, Result};

/// Penalty `n`, growth constant `K` and the search grid of an inf/sup
/// convolution.
///
/// For `x` the grid is the union of the anchored lattice `{x + δj}` and the
/// global lattice `{δj}`, `j ∈ Z^p`, restricted to the box `[−R', R']^p` (the
/// point `x` itself is always included). The anchored part gives `φ_n ≤ φ`
/// exactly; the global part holds 0 and the other multiples of `δ`, where
/// continuous drivers typically lose their Lipschitz property. In one dimension
/// the points `x ± δ2^{-k}` and `±δ2^{-k}`, `k = 1..=REFINE_LEVELS`, are added
/// as well: without them a minimizer closer to 0 than `δ` (as for `√|y|` once
/// `n > 1/(2√δ)`) is missed. The search set does not depend on `n`, so the
/// value stays monotone in `n`. Any minimizer of
/// `φ(y) + n|x − y|` satisfies `(n − K)|x − y| ≤ φ(x) + φ_t + K|x|`, so only
/// that 1-norm ball is scanned.
pub const REFINE_LEVELS: i32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzApprox {
    n: u32,
    k: f64,
    delta: f64,
    outer_radius: f64,
}

/// Result of one convolution evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convolved {
    pub value: f64,
    /// `(n + K)δ`.
    pub error_bar: f64,
    /// Grid point attaining the value.
    pub argmin: Vec<f64>,
    /// False when the certified search ball leaves the box, in which case the
    /// value is the convolution of `φ` restricted to the box.
    pub certified: bool,
}

impl LipschitzApprox {
    pub fn new(n: u32, k: f64, delta: f64, outer_radius: f64) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!("growth constant must be finite and nonnegative, got {k}")));
        }
        if f64::from(n) < k {
            return Err(Error::PenaltyBelowGrowth { n: f64::from(n), k });
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {delta}")));
        }
        if !(outer_radius > 0.0) {
            return Err(Error::InvalidArgument(format!("search radius must be positive, got {outer_radius}")));
        }
        Ok(Self { n, k, delta, outer_radius })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    pub fn error_bar(&self) -> f64 {
        (f64::from(self.n) + self.k) * self.delta
    }

    /// Radius of the 1-norm ball around `x` that must contain a minimizer,
    /// given `φ(x)` and the growth level `φ_t`.
    pub fn window(&self, phi_x: f64, phi_t: f64, x_norm: f64) -> f64 {
        let slack = f64::from(self.n) - self.k;
        if slack <= 0.0 {
            return f64::INFINITY;
        }
        ((phi_x + phi_t + self.k * x_norm) / slack).max(0.0)
    }

    /// One-dimensional inf-convolution, scanning outward from `x` on both
    /// lattices and stopping on each side once the growth lower bound exceeds
    /// the best value found.
    pub(crate) fn inf_1d(&self, phi: impl Fn(f64) -> f64, phi_t: f64, x: f64) -> (f64, f64) {
        let n = f64::from(self.n);
        let slack = n - self.k;
        let floor = -phi_t - self.k * x.abs();
        let mut best = phi(x);
        let mut arg = x;
        let below = (x / self.delta).floor();
        // Anchored offsets start one step out; global points start at the
        // neighbours of x.
        for (start, anchored) in [(x, true), (below * self.delta, false)] {
            for side in [-1.0, 1.0] {
                let mut j: u64 = if anchored || side > 0.0 { 1 } else { 0 };
                loop {
                    let y = start + side * j as f64 * self.delta;
                    let d = (x - y).abs();
                    if y.abs() > self.outer_radius || (slack > 0.0 && floor + slack * d >= best) {
                        break;
                    }
                    let v = phi(y) + n * d;
                    if v < best {
                        best = v;
                        arg = y;
                    }
                    j += 1;
                }
            }
        }
        for base in [x, 0.0] {
            for k in 1..=REFINE_LEVELS {
                let step = self.delta * 2f64.powi(-k);
                for y in [base - step, base + step] {
                    let d = (x - y).abs();
                    if y.abs() > self.outer_radius {
                        continue;
                    }
                    let v = phi(y) + n * d;
                    if v < best {
                        best = v;
                        arg = y;
                    }
                }
            }
        }
        (best, arg)
    }
}

fn one_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

/// `min over the grid of φ(y) + n|x − y|_1`.
pub fn inf_convolution(phi: impl Fn(&[f64]) -> f64, approx: &LipschitzApprox, phi_t: f64, x: &[f64]) -> Convolved {
    let x_norm = one_norm(x);
    let phi_x = phi(x);
    let w = approx.window(phi_x, phi_t, x_norm);
    let r = approx.outer_radius;
    let certified = x.iter().all(|v| v.abs() + w <= r);
    let error_bar = approx.error_bar();
    if x.len() == 1 {
        let (value, arg) = approx.inf_1d(|y| phi(&[y]), phi_t, x[0]);
        return Convolved { value, error_bar, argmin: vec![arg], certified };
    }
    let n = f64::from(approx.n);
    let delta = approx.delta;
    let mut best = phi_x;
    let mut argmin = x.to_vec();
    let anchored: Vec<f64> = x.to_vec();
    let global: Vec<f64> = x.iter().map(|v| (v / delta).round() * delta).collect();
    for origin in [&anchored, &global] {
        scan_box(origin, x, w, r, delta, |y, d| {
            let v = phi(y) + n * d;
            if v < best {
                best = v;
                argmin.copy_from_slice(y);
            }
        });
    }
    Convolved { value: best, error_bar, argmin, certified }
}

/// Visits `origin + δj` inside `[−r, r]^p` with `|x − y|_1 ≤ w`, passing the
/// point and its distance to `x`.
fn scan_box(origin: &[f64], x: &[f64], w: f64, r: f64, delta: f64, mut visit: impl FnMut(&[f64], f64)) {
    let p = x.len();
    let ranges: Vec<(i64, i64)> = origin
        .iter()
        .zip(x)
        .map(|(&o, &xi)| {
            let lo = ((-r - o) / delta).ceil().max(((xi - w - o) / delta).ceil());
            let hi = ((r - o) / delta).floor().min(((xi + w - o) / delta).floor());
            (lo as i64, hi as i64)
        })
        .collect();
    if ranges.iter().any(|(lo, hi)| lo > hi) {
        return;
    }
    let mut j: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    let mut y = vec![0.0; p];
    loop {
        for i in 0..p {
            y[i] = origin[i] + j[i] as f64 * delta;
        }
        let d: f64 = y.iter().zip(x).map(|(a, b)| (a - b).abs()).sum();
        if d <= w {
            visit(&y, d);
        }
        let mut i = 0;
        while i < p {
            j[i] += 1;
            if j[i] <= ranges[i].1 {
                break;
            }
            j[i] = ranges[i].0;
            i += 1;
        }
        if i == p {
            return;
        }
    }
}

/// `max over the grid of φ(y) − n|x − y|_1`, the mirror of
/// [`inf_convolution`].
pub fn sup_convolution(phi: impl Fn(&[f64]) -> f64, approx: &LipschitzApprox, phi_t: f64, x: &[f64]) -> Convolved {
    let mut out = inf_convolution(|y| -phi(y), approx, phi_t, x);
    out.value = -out.value;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(phi: impl Fn(f64) -> f64, n: f64, x: f64, lo: f64, hi: f64, step: f64, sign: f64) -> f64 {
        let count = ((hi - lo) / step).round() as usize;
        (0..=count)
            .map(|i| lo + i as f64 * step)
            .map(|y| sign * phi(y) + n * (x - y).abs())
            .fold(f64::INFINITY, f64::min)
            * sign
    }

    #[test]
    fn penalty_below_growth_rejected() {
        assert!(matches!(LipschitzApprox::new(1, 2.0, 1e-3, 1.0), Err(Error::PenaltyBelowGrowth { .. })));
        assert!(LipschitzApprox::new(2, 2.0, 1e-3, 1.0).is_ok());
    }

    #[test]
    fn absolute_value_is_fixed() {
        let a = LipschitzApprox::new(3, 1.0, 1e-3, 5.0).unwrap();
        for x in [-2.3, -0.4, 0.0, 0.77, 4.1] {
            let c = inf_convolution(|y| y[0].abs(), &a, 0.0, &[x]);
            assert_eq!(c.value, x.abs());
            assert_eq!(c.argmin, vec![x]);
            assert_eq!(sup_convolution(|y| y[0].abs(), &a, 0.0, &[x]).value, x.abs());
        }
    }

    #[test]
    fn constant_is_fixed() {
        let a = LipschitzApprox::new(0, 0.0, 1e-2, 3.0).unwrap();
        let c = inf_convolution(|_| 1.7, &a, 1.7, &[0.3, -0.2]);
        assert_eq!(c.value, 1.7);
        assert_eq!(sup_convolution(|_| 1.7, &a, 1.7, &[0.3, -0.2]).value, 1.7);
    }

    #[test]
    fn square_on_box_matches_envelope() {
        // x² ≤ 15 + 2|x| on [−5, 5].
        let a = LipschitzApprox::new(4, 2.0, 1e-3, 5.0).unwrap();
        for x in [-4.9, -3.0, -2.0, -1.2, 0.0, 0.5, 1.999, 2.5, 4.0, 5.0] {
            let c = inf_convolution(|y| y[0] * y[0], &a, 15.0, &[x]);
            let envelope = if x.abs() <= 2.0 { x * x } else { 4.0 * x.abs() - 4.0 };
            let dense = brute_force(|y| y * y, 4.0, x, -5.0, 5.0, 1e-5, 1.0);
            assert!((dense - envelope).abs() < 1e-6, "{x}");
            assert!(c.value >= envelope - 1e-12 && c.value - envelope <= a.error_bar(), "{x}: {}", c.value);
        }
    }

    #[test]
    fn square_sup_matches_brute_force() {
        let a = LipschitzApprox::new(4, 2.0, 1e-3, 5.0).unwrap();
        for x in [-4.0, -1.0, 0.0, 0.3, 2.5] {
            let c = sup_convolution(|y| y[0] * y[0], &a, 15.0, &[x]);
            let dense = brute_force(|y| y * y, 4.0, x, -5.0, 5.0, 1e-5, -1.0);
            assert!(c.value <= dense + 1e-12 && dense - c.value <= a.error_bar(), "{x}: {} vs {dense}", c.value);
        }
    }

    #[test]
    fn sqrt_peak_below_grid_spacing_is_found() {
        // sup_u √|u| − n|u| = 1/(4n) at |u| = 1/(4n²), far below δ here.
        for n in [8, 32, 128] {
            let a = LipschitzApprox::new(n, 0.5, 2e-3, 8.0).unwrap();
            let c = sup_convolution(|y| y[0].abs().sqrt(), &a, 1.0, &[0.0]);
            let exact = 0.25 / f64::from(n);
            assert!(c.value <= exact + 1e-15 && c.value >= 0.9 * exact, "n = {n}: {} vs {exact}", c.value);
        }
    }

    #[test]
    fn two_dimensional_matches_brute_force() {
        let phi = |y: &[f64]| (3.0 * y[0]).sin() + (y[1] - 0.2).abs().sqrt();
        let a = LipschitzApprox::new(2, 1.0, 1e-2, 2.0).unwrap();
        let x = [0.35, -0.4];
        let c = inf_convolution(phi, &a, 2.2, &x);
        let mut dense = f64::INFINITY;
        let step = 2.5e-3;
        for i in 0..=1600 {
            for j in 0..=1600 {
                let y = [-2.0 + i as f64 * step, -2.0 + j as f64 * step];
                dense = dense.min(phi(&y) + 2.0 * ((x[0] - y[0]).abs() + (x[1] - y[1]).abs()));
            }
        }
        assert!(c.value >= dense - 0.05 && c.value <= dense + 0.1, "{} vs {dense}", c.value);
        assert!(c.value <= phi(&x));
    }

    #[test]
    fn uncertified_when_window_leaves_box() {
        let a = LipschitzApprox::new(2, 1.0, 1e-2, 1.0).unwrap();
        assert!(!inf_convolution(|y| 10.0 + y[0], &a, 10.0, &[0.5]).certified);
        assert!(inf_convolution(|y| y[0].abs(), &a, 0.0, &[0.2]).certified);
    }

    proptest! {
        #[test]
        fn convolution_properties_in_one_dimension(
            amp in 0.1f64..2.0,
            freq in 0.5f64..3.0,
            phase in 0.0f64..6.0,
            x in -1.5f64..1.5,
            y in -1.5f64..1.5,
        ) {
            // |φ| ≤ amp + |x|, slope ≤ amp·freq + 1.
            let phi = move |v: &[f64]| amp * (freq * v[0] + phase).sin() + v[0].abs();
            let (k, delta, radius) = (1.0, 1e-3, 4.0);
            let mut prev = f64::NEG_INFINITY;
            for n in [1u32, 2, 4, 8] {
                let a = LipschitzApprox::new(n, k, delta, radius).unwrap();
                let vx = inf_convolution(phi, &a, amp, &[x]).value;
                let vy = inf_convolution(phi, &a, amp, &[y]).value;
                prop_assert!(vx.abs() <= amp + k * x.abs() + 1e-12);
                prop_assert!(vx >= prev);
                prop_assert!(vx <= phi(&[x]));
                let lip = amp * freq + k;
                prop_assert!((vx - vy).abs() <= f64::from(n) * (x - y).abs() + (f64::from(n) + lip) * delta / 2.0 + 1e-12);
                prev = vx;
            }
        }
    }
}
