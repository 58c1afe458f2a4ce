//! Finite-difference gradient check against an independent f64 forward pass.

#![allow(dead_code)]

use lowp_core::train::{inject_quantizers, softmax_cross_entropy, Layer, Model, QuantConfig};
use lowp_core::{FloatFormat, QuantSpec, RoundingMode, RngStream, Tensor};

/// Mean softmax cross-entropy of a Linear/ReLU network in f64.
/// `params` is `[W0, b0, W1, b1, ...]` with `W` stored `out x in`.
fn loss_f64(params: &[Vec<f64>], widths: &[usize], x: &[f64], labels: &[usize]) -> f64 {
    let batch = labels.len();
    let mut h: Vec<f64> = x.to_vec();
    let layers = widths.len() - 1;
    for l in 0..layers {
        let (nin, nout) = (widths[l], widths[l + 1]);
        let (w, b) = (&params[2 * l], &params[2 * l + 1]);
        let mut next = vec![0.0; batch * nout];
        for r in 0..batch {
            for o in 0..nout {
                let mut s = b[o];
                for i in 0..nin {
                    s += h[r * nin + i] * w[o * nin + i];
                }
                next[r * nout + o] = if l + 1 < layers { s.max(0.0) } else { s };
            }
        }
        h = next;
    }
    let classes = widths[layers];
    let mut loss = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        let row = &h[r * classes..(r + 1) * classes];
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        loss += lse - row[y];
    }
    loss / batch as f64
}

/// Worst relative error over every parameter of a 2-layer MLP with
/// identity-format quantizers injected, for one seeded draw. The
/// denominator is floored at `1e-4` so parameters with vanishing gradient
/// are judged on absolute error.
pub fn max_relative_error(draw: u64) -> f64 {
    let widths = [6usize, 12, 2];
    let identity = QuantSpec::new(FloatFormat::SINGLE, RoundingMode::NearestEven, draw);
    let mut model = inject_quantizers(Model::mlp(&widths, draw).unwrap(), &QuantConfig::uniform(identity)).unwrap();
    let batch = 8;
    let x = Tensor::uniform(&[batch, widths[0]], RngStream::new(draw ^ 0xabc), 0).scale(4.0);
    let x = x.sub(&Tensor::new(x.shape().to_vec(), vec![2.0; x.len()]).unwrap()).unwrap();
    let labels: Vec<usize> = (0..batch).map(|i| (RngStream::new(draw).bits(7, i as u64) % 2) as usize).collect();

    let (logits, cache) = model.forward(&x).unwrap();
    let (_, g) = softmax_cross_entropy(&logits, &labels).unwrap();
    let grads = model.backward(&cache, &g).unwrap();
    let analytic: Vec<&Tensor> = grads.linear.iter().flat_map(|l| [&l.weight, &l.bias]).collect();

    let mut params: Vec<Vec<f64>> = model.parameters().iter().map(|p| p.data().iter().map(|&v| v as f64).collect()).collect();
    assert_eq!(params.iter().map(Vec::len).sum::<usize>(), 110);
    assert_eq!(model.layers().iter().filter(|l| matches!(l, Layer::Linear(_))).count(), 2);
    let xs: Vec<f64> = x.data().iter().map(|&v| v as f64).collect();

    let mut worst = 0.0f64;
    for p in 0..params.len() {
        for j in 0..params[p].len() {
            let orig = params[p][j];
            let h = 1e-6 * orig.abs().max(1.0);
            params[p][j] = orig + h;
            let up = loss_f64(&params, &widths, &xs, &labels);
            params[p][j] = orig - h;
            let down = loss_f64(&params, &widths, &xs, &labels);
            params[p][j] = orig;
            let fd = (up - down) / (2.0 * h);
            let a = analytic[p].data()[j] as f64;
            let err = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-4);
            worst = worst.max(err);
        }
    }
    worst
}
