//! Minimal dense row-major matrices for the summarizer.

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Uniform in `[-scale, scale]`, rounded to f32 precision so the values
    /// survive the on-disk format exactly.
    pub fn uniform(rows: usize, cols: usize, scale: f64, rng: &mut impl Rng) -> Self {
        let data = (0..rows * cols)
            .map(|_| (rng.gen_range(-scale..=scale) as f32) as f64)
            .collect();
        Tensor { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Round every entry to the nearest f32.
    pub fn snap_f32(&mut self) {
        self.data.iter_mut().for_each(|x| *x = (*x as f32) as f64);
    }
}

/// `x · W` for a row vector `x` of length `W.rows`, restricted to columns
/// `[c0, c1)`.
pub fn vec_mat_cols(x: &[f64], w: &Tensor, c0: usize, c1: usize) -> Vec<f64> {
    debug_assert_eq!(x.len(), w.rows);
    let mut out = vec![0.0; c1 - c0];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row = &w.row(i)[c0..c1];
        for (o, &wv) in out.iter_mut().zip(row) {
            *o += xi * wv;
        }
    }
    out
}

pub fn vec_mat(x: &[f64], w: &Tensor) -> Vec<f64> {
    vec_mat_cols(x, w, 0, w.cols)
}

/// `g · W[:, c0..c1]ᵀ`, i.e. the gradient w.r.t. `x` of `x · W[:, c0..c1]`.
pub fn vec_mat_t_cols(g: &[f64], w: &Tensor, c0: usize, c1: usize) -> Vec<f64> {
    debug_assert_eq!(g.len(), c1 - c0);
    (0..w.rows)
        .map(|i| w.row(i)[c0..c1].iter().zip(g).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn vec_mat_t(g: &[f64], w: &Tensor) -> Vec<f64> {
    vec_mat_t_cols(g, w, 0, w.cols)
}

/// `dW[:, c0..] += xᵀ g`.
pub fn add_outer_cols(dw: &mut Tensor, x: &[f64], g: &[f64], c0: usize) {
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row = &mut dw.row_mut(i)[c0..c0 + g.len()];
        for (d, &gv) in row.iter_mut().zip(g) {
            *d += xi * gv;
        }
    }
}

pub fn add_outer(dw: &mut Tensor, x: &[f64], g: &[f64]) {
    add_outer_cols(dw, x, g, 0)
}

pub fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `log(sum(exp(xs)))`, stable.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
