use std::f64::consts::PI;

use rand::Rng as _;

use super::{Dataset, Provenance, Row};
use crate::rng;
use crate::{Error, Result};

/// Both synthetic datasets live on `[SYN_LOW, SYN_HIGH]²`.
pub const SYN_LOW: f64 = 0.0;
pub const SYN_HIGH: f64 = 6.0;

/// Class 1 iff `x₁ + x₂ > 6`.
pub fn syn_linear_label(x: &[f64]) -> u8 {
    u8::from(x[0] + x[1] > 6.0)
}

/// Class 1 iff `x₂ > 3 + 1.5·sin(π·x₁/3)`.
pub fn syn_nonlinear_label(x: &[f64]) -> u8 {
    u8::from(x[1] > 3.0 + 1.5 * (PI * x[0] / 3.0).sin())
}

fn generate(n: usize, seed: u64, label: fn(&[f64]) -> u8, provenance: Provenance) -> Result<Dataset> {
    if n < 4 {
        return Err(Error::Input(format!("need at least 4 points, got {n}")));
    }
    let mut rng = rng::seeded(seed);
    let rows = (0..n)
        .map(|_| {
            let features = vec![rng.gen_range(SYN_LOW..=SYN_HIGH), rng.gen_range(SYN_LOW..=SYN_HIGH)];
            Row {
                label: label(&features),
                features,
            }
        })
        .collect();
    Dataset::new(vec!["x1".into(), "x2".into()], rows, provenance)
}

/// `n` uniform points on `[0, 6]²` split by a straight line.
pub fn gen_syn_linear(n: usize, seed: u64) -> Result<Dataset> {
    generate(n, seed, syn_linear_label, Provenance::SyntheticLinear)
}

/// `n` uniform points on `[0, 6]²` split by an S-shaped curve.
pub fn gen_syn_nonlinear(n: usize, seed: u64) -> Result<Dataset> {
    generate(n, seed, syn_nonlinear_label, Provenance::SyntheticNonlinear)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_corners() {
        assert_eq!(syn_linear_label(&[0.0, 0.0]), 0);
        assert_eq!(syn_linear_label(&[6.0, 6.0]), 1);
    }

    #[test]
    fn nonlinear_corners() {
        assert_eq!(syn_nonlinear_label(&[0.0, 6.0]), 1);
        assert_eq!(syn_nonlinear_label(&[0.0, 0.0]), 0);
    }

    #[test]
    fn nonlinear_boundary_stays_in_band() {
        // boundary height 3 + 1.5·sin(·) evaluated on a dense grid
        for i in 0..=6000 {
            let x1 = i as f64 / 1000.0;
            let h = 3.0 + 1.5 * (PI * x1 / 3.0).sin();
            assert!((1.5..=4.5).contains(&h));
            assert_eq!(syn_nonlinear_label(&[x1, 4.5 + 1e-9]), 1);
            assert_eq!(syn_nonlinear_label(&[x1, 1.5 - 1e-9]), 0);
        }
    }

    #[test]
    fn uniform_means() {
        for d in [
            gen_syn_linear(10_000, 3).unwrap(),
            gen_syn_nonlinear(10_000, 4).unwrap(),
        ] {
            for j in 0..2 {
                let mean = d.rows().iter().map(|r| r.features[j]).sum::<f64>() / d.len() as f64;
                assert!((mean - 3.0).abs() < 0.1, "mean {mean}");
            }
            assert!(d
                .rows()
                .iter()
                .all(|r| r.features.iter().all(|v| (0.0..=6.0).contains(v))));
        }
    }

    #[test]
    fn label_balance() {
        for d in [
            gen_syn_linear(10_000, 8).unwrap(),
            gen_syn_nonlinear(10_000, 9).unwrap(),
        ] {
            let frac = d.class_counts()[1] as f64 / d.len() as f64;
            assert!((0.4..=0.6).contains(&frac), "class-1 fraction {frac}");
        }
    }

    #[test]
    fn determinism_and_size_guard() {
        assert_eq!(gen_syn_linear(50, 1).unwrap(), gen_syn_linear(50, 1).unwrap());
        assert_ne!(gen_syn_linear(50, 1).unwrap(), gen_syn_linear(50, 2).unwrap());
        assert!(matches!(gen_syn_nonlinear(3, 1), Err(Error::Input(_))));
    }
}
