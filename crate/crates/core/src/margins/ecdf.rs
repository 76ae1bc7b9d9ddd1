use crate::error::{Error, Result};

/// Empirical distribution with average-rank ties and the `rank / (n + 1)`
/// convention, linearly interpolated between distinct sample values.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
    /// Distinct sample values, ascending.
    knots: Vec<f64>,
    /// `average_rank / (n + 1)` at each knot.
    levels: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InsufficientData("empty sample".into()));
        }
        if sample.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("sample contains non-finite values".into()));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self::from_sorted(sorted))
    }

    fn from_sorted(sorted: Vec<f64>) -> Self {
        let n1 = sorted.len() as f64 + 1.0;
        let mut knots = Vec::new();
        let mut levels = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            // ranks i+1 ..= j+1
            let avg_rank = 0.5 * ((i + 1) + (j + 1)) as f64;
            knots.push(sorted[i]);
            levels.push(avg_rank / n1);
            i = j + 1;
        }
        Self {
            sorted,
            knots,
            levels,
        }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_sample(&self) -> &[f64] {
        &self.sorted
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    /// Interpolated cdf; constant below the minimum and above the maximum.
    pub fn cdf(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0] {
            return self.levels[0];
        }
        let last = k.len() - 1;
        if x >= k[last] {
            return self.levels[last];
        }
        let j = k.partition_point(|&v| v <= x);
        let (x0, x1) = (k[j - 1], k[j]);
        let (l0, l1) = (self.levels[j - 1], self.levels[j]);
        l0 + (l1 - l0) * (x - x0) / (x1 - x0)
    }

    /// Inverse of [`EmpiricalCdf::cdf`]; clamps to the sample range outside
    /// the attainable levels.
    pub fn quantile(&self, u: f64) -> f64 {
        let l = &self.levels;
        if u <= l[0] {
            return self.knots[0];
        }
        let last = l.len() - 1;
        if u >= l[last] {
            return self.knots[last];
        }
        let j = l.partition_point(|&v| v <= u);
        let (l0, l1) = (l[j - 1], l[j]);
        let (x0, x1) = (self.knots[j - 1], self.knots[j]);
        x0 + (x1 - x0) * (u - l0) / (l1 - l0)
    }

    /// Number of sample points strictly above `x`.
    pub fn count_above(&self, x: f64) -> usize {
        self.sorted.len() - self.sorted.partition_point(|&v| v <= x)
    }

    pub fn values_above(&self, x: f64) -> &[f64] {
        &self.sorted[self.sorted.partition_point(|&v| v <= x)..]
    }
}
