use serde::{Deserialize, Serialize};

use super::gpd::GpdParams;
use crate::error::{Error, Result};

/// Map `H` applied to PIT values before weighting coordinates of an impact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginTransform {
    Identity,
    /// Unit exponential quantile `-ln(1 - u)`.
    Exponential,
    /// GPD quantile with threshold 0.
    Gpd { shape: f64, scale: f64 },
}

impl MarginTransform {
    pub fn apply(&self, u: f64) -> Result<f64> {
        match *self {
            MarginTransform::Identity => {
                if !(0.0..=1.0).contains(&u) {
                    return Err(Error::Domain(format!("level {u} outside [0,1]")));
                }
                Ok(u)
            }
            MarginTransform::Exponential => {
                check_open(u)?;
                Ok(-(-u).ln_1p())
            }
            MarginTransform::Gpd { shape, scale } => {
                check_open(u)?;
                self.reference()
                    .expect("gpd transform has a reference tail")
                    .quantile(u)
                    .map_err(|_| Error::Domain(format!("invalid GPD transform ({shape}, {scale})")))
            }
        }
    }

    /// The GPD law of `H(U)` for unbounded transforms.
    pub fn reference(&self) -> Option<GpdParams> {
        match *self {
            MarginTransform::Identity => None,
            MarginTransform::Exponential => GpdParams::new(0.0, 1.0, 0.0, 0.5).ok(),
            MarginTransform::Gpd { shape, scale } => GpdParams::new(shape, scale, 0.0, 0.5).ok(),
        }
    }
}

fn check_open(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("level {u} outside (0,1)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_examples() {
        assert_eq!(MarginTransform::Identity.apply(0.3).unwrap(), 0.3);
        let e = MarginTransform::Exponential.apply(0.8).unwrap();
        assert!((e - 1.609_437_912_434_100_3).abs() < 1e-12);
        let g = MarginTransform::Gpd { shape: 0.0, scale: 1.0 }.apply(0.8).unwrap();
        assert!((g - e).abs() < 1e-15);
        assert!(MarginTransform::Exponential.apply(1.0).is_err());
        assert!(MarginTransform::Gpd { shape: 0.1, scale: 1.0 }.apply(0.0).is_err());
    }
}
