//! Central finite-difference check of the analytic gradients.

use super::model::{loss_and_grad, normalized_adjacency, teacher_forcing, EncodedInput, ModelDims, Params, PARAM_NAMES};

#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub name: &'static str,
    pub max_rel_error: f64,
    pub max_abs_grad: f64,
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compare analytic and numeric gradients of the summed loss for every
/// entry of every parameter tensor.
pub fn gradient_check(params: &Params, hops: usize, input: &EncodedInput, inputs: &[u32], targets: &[u32], eps: f64) -> Vec<TensorCheck> {
    let mut grads = params.clone();
    for t in grads.tensors_mut() {
        t.fill(0.0);
    }
    let mut scratch = grads.clone();
    loss_and_grad(params, hops, input, inputs, targets, 1.0, &mut grads);
    let mut loss_at = |p: &Params| loss_and_grad(p, hops, input, inputs, targets, 0.0, &mut scratch);

    let mut work = params.clone();
    let mut out = Vec::new();
    for (k, name) in PARAM_NAMES.iter().enumerate() {
        let n = params.tensors()[k].data.len();
        let mut worst = 0.0f64;
        let mut biggest = 0.0f64;
        for i in 0..n {
            let orig = params.tensors()[k].data[i];
            work.tensors_mut()[k].data[i] = orig + eps;
            let up = loss_at(&work);
            work.tensors_mut()[k].data[i] = orig - eps;
            let down = loss_at(&work);
            work.tensors_mut()[k].data[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let analytic = grads.tensors()[k].data[i];
            worst = worst.max(relative_error(analytic, numeric, 1e-5));
            biggest = biggest.max(analytic.abs());
        }
        out.push(TensorCheck {
            name,
            max_rel_error: worst,
            max_abs_grad: biggest,
        });
    }
    out
}

/// A tiny random model and input: width 8, vocabularies of 20, five code
/// tokens, a six-node tree and a four-token target. Biases are random too.
pub fn tiny_problem(seed: u64) -> (Params, EncodedInput, Vec<u32>, Vec<u32>) {
    use rand::{Rng, SeedableRng};
    let dims = ModelDims { d: 8, hops: 2, v_in: 20, v_out: 20 };
    let mut params = Params::random(dims, seed);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for b in [&mut params.enc_b, &mut params.dec_b, &mut params.out_b] {
        b.data.iter_mut().for_each(|x| *x = rng.gen_range(-0.5..0.5));
    }
    let edges = [(0, 1), (1, 2), (1, 3), (3, 4), (3, 5)];
    let input = EncodedInput {
        code_ids: (0..5).map(|_| rng.gen_range(6..20)).collect(),
        ast_ids: (0..6).map(|_| rng.gen_range(6..20)).collect(),
        adjacency: normalized_adjacency(6, &edges),
    };
    let target: Vec<u32> = (0..4).map(|_| rng.gen_range(6..20)).collect();
    let (inputs, targets) = teacher_forcing(&target);
    (params, input, inputs, targets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(1.0, 1.0, 1e-5), 0.0);
        assert!((relative_error(2e-9, 1e-9, 1e-5) - 1e-4).abs() < 1e-12);
    }

    #[test]
    fn tiny_model_gradients() {
        let (p, input, inputs, targets) = tiny_problem(7);
        for c in gradient_check(&p, 2, &input, &inputs, &targets, 1e-4) {
            assert!(c.max_rel_error < 1e-3, "{c:?}");
            assert!(c.max_abs_grad > 0.0, "{c:?}");
        }
    }
}
