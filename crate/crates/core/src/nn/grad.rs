use super::model::{MlpModel, Trace};
use crate::{Error, Result};

const LOG_CLAMP: f64 = 1e-12;

/// Parameter gradients, laid out exactly like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Gradients {
            layers: model
                .layers()
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
                .collect(),
        }
    }

    fn scale(&mut self, s: f64) {
        for (w, b) in &mut self.layers {
            w.iter_mut().chain(b.iter_mut()).for_each(|g| *g *= s);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
    }
}

/// Mean binary cross-entropy with probabilities clamped to `[1e-12, 1 - 1e-12]`.
pub fn bce_loss(probs: &[f64], labels: &[u8]) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::Input("empty batch".into()));
    }
    if probs.len() != labels.len() {
        return Err(Error::Input(format!(
            "{} probabilities for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(total / probs.len() as f64)
}

/// Backpropagates `d(out)/d(final pre-activation) = upstream`.
/// Accumulates parameter gradients into `acc` (if given) and returns the input gradient.
fn backward(model: &MlpModel, trace: &Trace, upstream: f64, mut acc: Option<&mut Gradients>) -> Vec<f64> {
    let layers = model.layers();
    let mut delta = vec![upstream];
    for li in (0..layers.len()).rev() {
        let layer = &layers[li];
        if li != layers.len() - 1 {
            for (d, (&z, &a)) in delta.iter_mut().zip(trace.pre[li].iter().zip(&trace.post[li])) {
                *d *= layer.activation.derivative(z, a);
            }
        }
        let input = if li == 0 { &trace.input } else { &trace.post[li - 1] };
        if let Some(g) = acc.as_deref_mut() {
            let (gw, gb) = &mut g.layers[li];
            for (o, &d) in delta.iter().enumerate() {
                gb[o] += d;
                let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                for (gwi, &xi) in row.iter_mut().zip(input) {
                    *gwi += d * xi;
                }
            }
        }
        let mut prev = vec![0.0; layer.inputs];
        for (o, &d) in delta.iter().enumerate() {
            let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
            for (p, &w) in prev.iter_mut().zip(row) {
                *p += d * w;
            }
        }
        delta = prev;
    }
    delta
}

/// Exact gradient of the mean BCE over `batch` with respect to every parameter.
///
/// Uses `∂ℓ/∂z = p − y` at the sigmoid head, i.e. the derivative of the
/// unclamped loss.
pub fn grad_params(model: &MlpModel, inputs: &[&[f64]], labels: &[u8]) -> Result<Gradients> {
    if inputs.is_empty() {
        return Err(Error::Input("empty batch".into()));
    }
    if inputs.len() != labels.len() {
        return Err(Error::Input("inputs and labels differ in length".into()));
    }
    let mut g = Gradients::zeros_like(model);
    for (&x, &y) in inputs.iter().zip(labels) {
        model.forward(x)?;
        accumulate(model, x, y, &mut g);
    }
    g.scale(1.0 / inputs.len() as f64);
    Ok(g)
}

/// Adds one sample's BCE gradient into `g`; returns the sample's probability.
pub(crate) fn accumulate(model: &MlpModel, x: &[f64], y: u8, g: &mut Gradients) -> f64 {
    let trace = model.trace(x);
    let p = trace.post.last().expect("validated model has layers")[0];
    backward(model, &trace, p - f64::from(y), Some(g));
    p
}

pub(crate) fn finish_mean(g: &mut Gradients, n: usize) {
    g.scale(1.0 / n as f64);
}

/// Gradient of `p(target_class | x)` with respect to `x`.
pub fn grad_input(model: &MlpModel, x: &[f64], target_class: u8) -> Result<Vec<f64>> {
    model.forward(x)?;
    Ok(grad_input_unchecked(model, x, target_class).1)
}

/// Returns `(p_target, ∂p_target/∂x)`.
pub(crate) fn grad_input_unchecked(model: &MlpModel, x: &[f64], target_class: u8) -> (f64, Vec<f64>) {
    let trace = model.trace(x);
    let p1 = trace.post.last().expect("validated model has layers")[0];
    let sign = if target_class == 1 { 1.0 } else { -1.0 };
    let g = backward(model, &trace, sign * p1 * (1.0 - p1), None);
    let p = if target_class == 1 { p1 } else { 1.0 - p1 };
    (p, g)
}

/// Returns `(s, ∂s/∂x)` for the target-class logit `s = ±z`.
pub(crate) fn grad_target_logit_unchecked(model: &MlpModel, x: &[f64], target_class: u8) -> (f64, Vec<f64>) {
    let trace = model.trace(x);
    let z = trace.pre.last().expect("validated model has layers")[0];
    let sign = if target_class == 1 { 1.0 } else { -1.0 };
    (sign * z, backward(model, &trace, sign, None))
}

/// Gradient of the class-1 logit with respect to `x`.
pub fn grad_logit_input(model: &MlpModel, x: &[f64]) -> Result<Vec<f64>> {
    model.forward(x)?;
    let trace = model.trace(x);
    Ok(backward(model, &trace, 1.0, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{mlp_init, Activation, Architecture, Layer};
    use rand::Rng;

    fn linear(theta: &[f64], b: f64) -> MlpModel {
        MlpModel::from_layers(vec![Layer {
            inputs: theta.len(),
            outputs: 1,
            activation: Activation::Sigmoid,
            weights: theta.to_vec(),
            bias: vec![b],
        }])
        .unwrap()
    }

    #[test]
    fn bce_known_values() {
        assert!((bce_loss(&[0.5], &[1]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(bce_loss(&[1.0], &[1]).unwrap() < 1e-11);
        let v = bce_loss(&[0.9, 0.1], &[1, 0]).unwrap();
        let by_hand = (-(0.9f64).ln() - (0.9f64).ln()) / 2.0;
        assert!((v - by_hand).abs() < 1e-15);
        assert!((v - 0.105_360_515_657_826_3).abs() < 1e-12);
        assert!(bce_loss(&[0.0], &[1]).unwrap().is_finite());
        assert!(matches!(bce_loss(&[], &[]), Err(Error::Input(_))));
    }

    #[test]
    fn symmetric_batch_has_zero_weight_gradient() {
        let m = MlpModel::zeros(&Architecture::mlp(&[2, 1]).unwrap()).unwrap();
        let xs: Vec<&[f64]> = vec![&[1.0, 2.0], &[-1.0, -2.0], &[3.0, -1.0], &[-3.0, 1.0]];
        let g = grad_params(&m, &xs, &[1, 1, 0, 0]).unwrap();
        let (w, b) = &g.layers[0];
        // p = 0.5 everywhere: Σ (p - y) x over a batch whose points cancel pairwise
        // (1,2)+(-1,-2) for label 1 and (3,-1)+(-3,1) for label 0.
        assert!(w.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(b[0], 0.0);
    }

    #[test]
    fn duplicated_batch_gives_same_gradient() {
        let m = mlp_init(&Architecture::mlp(&[3, 4, 1]).unwrap(), 5).unwrap();
        let a: &[f64] = &[0.2, -0.4, 1.0];
        let b: &[f64] = &[1.5, 0.3, -0.7];
        let g1 = grad_params(&m, &[a, b], &[1, 0]).unwrap();
        let g2 = grad_params(&m, &[a, b, a, b], &[1, 0, 1, 0]).unwrap();
        for (u, v) in g1.iter().zip(g2.iter()) {
            assert!((u - v).abs() <= 1e-15 * u.abs().max(1.0));
        }
    }

    #[test]
    fn input_gradient_of_linear_model() {
        let m = linear(&[1.0, 0.0], -3.0);
        assert_eq!(grad_input(&m, &[3.0, 1.0], 1).unwrap(), vec![0.25, 0.0]);
        assert_eq!(grad_input(&m, &[3.0, 1.0], 0).unwrap(), vec![-0.25, 0.0]);
    }

    #[test]
    fn logit_gradient_of_linear_model_is_theta() {
        let m = linear(&[0.3, -2.0], 1.0);
        assert_eq!(grad_logit_input(&m, &[5.0, 1.0]).unwrap(), vec![0.3, -2.0]);
    }

    #[test]
    fn two_layer_input_gradient_matches_finite_difference() {
        let m = mlp_init(&Architecture::mlp(&[3, 6, 1]).unwrap(), 11).unwrap();
        let mut rng = crate::rng::seeded(2);
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let g = grad_input(&m, &x, 1).unwrap();
            for i in 0..3 {
                let h = 1e-5;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (m.prob(&xp).unwrap() - m.prob(&xm).unwrap()) / (2.0 * h);
                let err = (g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1e-8);
                assert!(err < 1e-4 || (g[i] - fd).abs() < 1e-9, "{} vs {}", g[i], fd);
            }
        }
    }
}
