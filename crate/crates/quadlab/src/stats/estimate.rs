use std::fmt;

/// A Monte Carlo estimate with its standard error and provenance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation divided by `sqrt(samples)`.
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    /// Samples dropped because an iteration cap was hit or the orbit was
    /// trapped on a floating-point fixed point.
    pub cap_hits: u64,
}

impl McEstimate {
    /// Mean and standard error of `values`, summed in index order.
    pub fn from_values(values: &[f64], seed: u64, cap_hits: u64) -> McEstimate {
        let n = values.len();
        if n == 0 {
            return McEstimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                samples: 0,
                seed,
                cap_hits,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        McEstimate {
            mean,
            stderr: (var / n as f64).sqrt(),
            samples: n,
            seed,
            cap_hits,
        }
    }

    /// A proportion `k / n` with binomial standard error.
    pub fn from_count(k: usize, n: usize, seed: u64, cap_hits: u64) -> McEstimate {
        let p = k as f64 / n as f64;
        McEstimate {
            mean: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            samples: n,
            seed,
            cap_hits,
        }
    }

    /// Multiply mean and error by a constant.
    pub fn scaled(self, c: f64) -> McEstimate {
        McEstimate {
            mean: self.mean * c,
            stderr: self.stderr * c.abs(),
            ..self
        }
    }

    /// `(self - other) / sqrt(se1^2 + se2^2)`.
    pub fn z_against(&self, other: &McEstimate) -> f64 {
        (self.mean - other.mean) / self.stderr.hypot(other.stderr)
    }
}

impl fmt::Display for McEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6e} ± {:.2e} (n = {}", self.mean, self.stderr, self.samples)?;
        if self.cap_hits > 0 {
            write!(f, ", {} capped", self.cap_hits)?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_error() {
        let e = McEstimate::from_values(&[1.0, 2.0, 3.0, 4.0], 0, 0);
        assert_eq!(e.mean, 2.5);
        assert!((e.stderr - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn proportion() {
        let e = McEstimate::from_count(25, 100, 0, 0);
        assert_eq!(e.mean, 0.25);
        assert!((e.stderr - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }
}
