//! Membership of every quantized training tensor in its format's
//! enumerated representable set.

#![allow(dead_code)]

use lowp_core::quant::block_exponents;
use lowp_core::tensor::BlockLayout;
use lowp_core::train::{inject_quantizers, softmax_cross_entropy, Dataset, Layer, LowPrecisionOptimizer, Model, QuantConfig};
use lowp_core::{enumerate_representable, NumberFormat, Tensor};

/// Elements of `t` outside the representable set of `fmt`; block formats
/// use each block's own shared exponent.
pub fn non_members(what: &str, t: &Tensor, fmt: &NumberFormat) -> usize {
    let mut bad = 0;
    let mut report = |v: f32| {
        if bad < 5 {
            eprintln!("{what}: {v:e} not in {fmt}");
        }
        bad += 1;
    };
    match fmt {
        NumberFormat::Block(b) => {
            let exps = block_exponents(t, b.block()).unwrap();
            let layout = BlockLayout::new(t.shape(), b.block()).unwrap();
            let sets: Vec<Vec<f32>> = exps
                .iter()
                .map(|e| e.map(|e| enumerate_representable(fmt, Some(e)).unwrap()).unwrap_or_else(|| vec![0.0]))
                .collect();
            for (i, v) in t.data().iter().enumerate() {
                let v = if *v == 0.0 { 0.0 } else { *v };
                if sets[layout.block_of(i)].binary_search_by(|p| p.total_cmp(&v)).is_err() {
                    report(v);
                }
            }
        }
        _ => {
            let set = enumerate_representable(fmt, None).unwrap();
            for v in t.data() {
                let v = if *v == 0.0 { 0.0 } else { *v };
                if set.binary_search_by(|p| p.total_cmp(&v)).is_err() {
                    report(v);
                }
            }
        }
    }
    bad
}

/// Three full training steps of a 4-8-8-2 MLP under `cfg` (which must set
/// all five categories); after each, every quantized tensor is checked.
/// Returns the number of violations.
pub fn violations_after_steps(cfg: QuantConfig) -> usize {
    let data = Dataset::blobs(64, 4, 0.5, 2).unwrap();
    let mut model = inject_quantizers(Model::mlp(&[4, 8, 8, 2], 4).unwrap(), &cfg).unwrap();
    let mut opt = LowPrecisionOptimizer::new(&mut model, 0.1, 0.9, &cfg).unwrap();
    let mut bad = 0;
    for _ in 0..3 {
        let (x, y) = data.batch(&(0..16).collect::<Vec<_>>());
        let (logits, cache) = model.forward(&x).unwrap();
        let (_, g) = softmax_cross_entropy(&logits, &y).unwrap();
        let grads = model.backward(&cache, &g).unwrap();
        opt.step(&mut model, &grads).unwrap();

        let act = cfg.activation.unwrap().format;
        let layers = model.layers();
        let mut checked = 0;
        for (i, layer) in layers.iter().enumerate() {
            if matches!(layer, Layer::ActivationQuant(_)) {
                let out = if i + 1 < layers.len() { cache.input(i + 1) } else { &logits };
                bad += non_members("activation", out, &act);
                checked += 1;
            }
        }
        assert_eq!(checked, 3);
        assert_eq!(grads.errors.len(), 3);
        for e in &grads.errors {
            bad += non_members("error", e, &cfg.error.unwrap().format);
        }
        for g in opt.last_gradients() {
            bad += non_members("gradient", g, &cfg.gradient.unwrap().format);
        }
        for a in opt.accumulators().iter().chain(opt.velocities()) {
            bad += non_members("accumulator", a, &cfg.accumulator.unwrap().format);
        }
        for w in model.parameters() {
            bad += non_members("weight", w, &cfg.weight.unwrap().format);
        }
    }
    bad
}
