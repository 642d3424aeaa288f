//! Order-stable summation and sample statistics.

/// Neumaier-compensated sum. Results depend only on the input order, never on
/// thread scheduling.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Sample mean and its estimated standard error (sample standard deviation
/// over the square root of the sample size).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl MeanEstimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std_error: f64::NAN, samples: 0 };
        }
        let mean = compensated_sum(values.iter().copied()) / n as f64;
        if n == 1 {
            return Self { mean, std_error: 0.0, samples: 1 };
        }
        let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
        let var = ss / (n - 1) as f64;
        Self { mean, std_error: (var / n as f64).sqrt(), samples: n }
    }

    /// Distance to `target` in units of the standard error. A zero standard
    /// error with an exact hit counts as zero.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }

    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        self.z_score(target) <= sigmas
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn mean_estimate_of_constant() {
        let m = MeanEstimate::from_samples(&[3.0; 10]);
        assert_eq!(m.mean, 3.0);
        assert_eq!(m.std_error, 0.0);
        assert!(m.within(3.0, 5.0));
    }
}
