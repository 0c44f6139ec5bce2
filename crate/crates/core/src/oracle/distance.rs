use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{Error, Result};

const MAD_FLOOR: f64 = 1e-6;

/// Proximity cost between a query and its explanation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    /// `Σ |xᵢ − cᵢ|`
    #[serde(rename = "l1")]
    L1,
    /// `Σ (xᵢ − cᵢ)²`
    #[serde(rename = "l2")]
    L2,
    /// `Σ |xᵢ − cᵢ| / MADᵢ`
    #[serde(rename = "l1_mad")]
    L1Mad,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::L1, Metric::L2, Metric::L1Mad];

    pub fn name(self) -> &'static str {
        match self {
            Metric::L1 => "l1",
            Metric::L2 => "l2",
            Metric::L1Mad => "l1_mad",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" | "L1" => Ok(Metric::L1),
            "l2" | "L2" => Ok(Metric::L2),
            "l1_mad" | "L1_MAD" | "l1/mad" => Ok(Metric::L1Mad),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

fn check<'a>(x: &[f64], c: &[f64], metric: Metric, mad: Option<&'a [f64]>) -> Result<Option<&'a [f64]>> {
    if x.len() != c.len() {
        return Err(Error::Input("distance between vectors of different length".into()));
    }
    if metric != Metric::L1Mad {
        return Ok(None);
    }
    let mad = mad.ok_or_else(|| Error::Config("L1/MAD metric requires MAD values".into()))?;
    if mad.len() != x.len() || mad.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::Config("MAD values must be positive, one per feature".into()));
    }
    Ok(Some(mad))
}

pub fn distance(x: &[f64], c: &[f64], metric: Metric, mad: Option<&[f64]>) -> Result<f64> {
    let mad = check(x, c, metric, mad)?;
    let diffs = x.iter().zip(c).map(|(a, b)| a - b);
    Ok(match metric {
        Metric::L1 => diffs.map(f64::abs).sum(),
        Metric::L2 => diffs.map(|d| d * d).sum(),
        Metric::L1Mad => diffs.zip(mad.expect("checked")).map(|(d, m)| d.abs() / m).sum(),
    })
}

/// (Sub)gradient of [`distance`] with respect to `c`; zero where `cᵢ = xᵢ`.
pub(crate) fn distance_grad(x: &[f64], c: &[f64], metric: Metric, mad: Option<&[f64]>, out: &mut [f64]) {
    for (i, ((xi, ci), o)) in x.iter().zip(c).zip(out.iter_mut()).enumerate() {
        let d = ci - xi;
        let sign = if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        };
        *o = match metric {
            Metric::L1 => sign,
            Metric::L2 => 2.0 * d,
            Metric::L1Mad => sign / mad.map(|m| m[i]).unwrap_or(1.0),
        };
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Per-feature median absolute deviation, floored at 1e-6.
pub fn mad_stats(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = rows
        .first()
        .ok_or_else(|| Error::Input("cannot compute MAD of no data".into()))?;
    (0..first.len())
        .map(|j| {
            let mut col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let med = median(&mut col);
            let mut dev: Vec<f64> = col.iter().map(|v| (v - med).abs()).collect();
            Ok(median(&mut dev).max(MAD_FLOOR))
        })
        .collect()
}

pub fn mad_stats_dataset(reference: &Dataset) -> Result<Vec<f64>> {
    mad_stats(&reference.features())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_is_zero() {
        let x = [1.0, -2.0, 3.5];
        for m in Metric::ALL {
            assert_eq!(distance(&x, &x, m, Some(&[1.0, 1.0, 1.0])).unwrap(), 0.0);
        }
    }

    #[test]
    fn hand_computed_distances() {
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0], Metric::L2, None).unwrap(), 25.0);
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0], Metric::L1, None).unwrap(), 7.0);
        let d = distance(&[0.0, 0.0], &[1.0, 1.0], Metric::L1Mad, Some(&[0.5, 2.0])).unwrap();
        assert_eq!(d, 2.5);
    }

    #[test]
    fn mad_requirements() {
        assert!(distance(&[0.0], &[1.0], Metric::L1Mad, None).is_err());
        assert!(distance(&[0.0], &[1.0], Metric::L1Mad, Some(&[0.0])).is_err());
        assert!(distance(&[0.0], &[1.0, 2.0], Metric::L2, None).is_err());
    }

    #[test]
    fn mad_known_values() {
        assert_eq!(mad_stats(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap(), vec![1.0]);
        assert_eq!(mad_stats(&[vec![5.0], vec![5.0]]).unwrap(), vec![1e-6]);
    }

    proptest! {
        #[test]
        fn mad_is_translation_invariant(
            col in prop::collection::vec(-100.0f64..100.0, 1..40),
            shift in -50.0f64..50.0,
        ) {
            let a: Vec<Vec<f64>> = col.iter().map(|v| vec![*v]).collect();
            let b: Vec<Vec<f64>> = col.iter().map(|v| vec![v + shift]).collect();
            let (ma, mb) = (mad_stats(&a).unwrap()[0], mad_stats(&b).unwrap()[0]);
            prop_assert!((ma - mb).abs() < 1e-9);
        }

        #[test]
        fn distances_are_nonnegative(
            x in prop::collection::vec(-10.0f64..10.0, 4),
            c in prop::collection::vec(-10.0f64..10.0, 4),
        ) {
            for m in Metric::ALL {
                let d = distance(&x, &c, m, Some(&[0.5, 1.0, 2.0, 3.0])).unwrap();
                prop_assert!(d >= 0.0);
                prop_assert_eq!(d == 0.0, x == c);
            }
        }
    }
}
