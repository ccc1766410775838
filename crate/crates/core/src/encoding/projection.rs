//! Linear token and CLS projections from contextualizer width `n_lm` down
//! to `n_t` and `n_c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::{Fnv1a64, SplitMix64};

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("matrix data", rows * cols, data.len()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `self · x + bias`, accumulated in f64.
    fn affine(&self, x: &[f32], bias: &[f32]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                let acc: f64 = self
                    .row(r)
                    .iter()
                    .zip(x)
                    .map(|(&w, &v)| f64::from(w) * f64::from(v))
                    .sum();
                acc + f64::from(bias[r])
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionParams {
    w_tok: Matrix,
    b_tok: Vec<f32>,
    w_cls: Matrix,
    b_cls: Vec<f32>,
}

impl ProjectionParams {
    pub fn new(w_tok: Matrix, b_tok: Vec<f32>, w_cls: Matrix, b_cls: Vec<f32>) -> Result<Self> {
        if b_tok.len() != w_tok.rows {
            return Err(Error::dim("b_tok", w_tok.rows, b_tok.len()));
        }
        if b_cls.len() != w_cls.rows {
            return Err(Error::dim("b_cls", w_cls.rows, b_cls.len()));
        }
        // An empty projection has no columns to compare.
        if w_tok.rows > 0 && w_cls.rows > 0 && w_tok.cols != w_cls.cols {
            return Err(Error::dim("w_cls columns", w_tok.cols, w_cls.cols));
        }
        let all = w_tok.data.iter().chain(&b_tok).chain(&w_cls.data).chain(&b_cls);
        if all.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("projection parameters must be finite".into()));
        }
        Ok(ProjectionParams {
            w_tok,
            b_tok,
            w_cls,
            b_cls,
        })
    }

    /// Reproducible initialization: weights drawn from SplitMix64 in
    /// [-1, 1) and scaled by 1/sqrt(n_lm), biases zero.
    pub fn seeded(seed: u64, n_lm: usize, n_t: usize, n_c: usize) -> Self {
        let mut h = Fnv1a64::new();
        h.write(&seed.to_le_bytes());
        h.write(b"projection");
        let mut rng = SplitMix64::new(h.finish());
        let scale = 1.0 / (n_lm.max(1) as f64).sqrt();
        let mut draw = |n: usize| -> Vec<f32> { (0..n).map(|_| (rng.next_signed_unit() * scale) as f32).collect() };
        let w_tok = Matrix {
            rows: n_t,
            cols: n_lm,
            data: draw(n_t * n_lm),
        };
        let w_cls = Matrix {
            rows: n_c,
            cols: n_lm,
            data: draw(n_c * n_lm),
        };
        ProjectionParams {
            w_tok,
            b_tok: vec![0.0; n_t],
            w_cls,
            b_cls: vec![0.0; n_c],
        }
    }

    pub fn n_t(&self) -> usize {
        self.w_tok.rows
    }

    pub fn n_c(&self) -> usize {
        self.w_cls.rows
    }

    pub fn w_tok(&self) -> &Matrix {
        &self.w_tok
    }

    pub fn w_cls(&self) -> &Matrix {
        &self.w_cls
    }

    /// Input width, if any projection is non-empty.
    pub fn n_lm(&self) -> Option<usize> {
        if self.w_tok.rows > 0 {
            Some(self.w_tok.cols)
        } else if self.w_cls.rows > 0 {
            Some(self.w_cls.cols)
        } else {
            None
        }
    }
}

/// `w_tok · v + b_tok` for every contextualizer output.
pub fn project_tokens(lm_vectors: &[Vec<f32>], params: &ProjectionParams) -> Result<Vec<Vec<f32>>> {
    let n_t = params.n_t();
    lm_vectors
        .iter()
        .map(|v| {
            if n_t == 0 {
                return Ok(Vec::new());
            }
            if v.len() != params.w_tok.cols {
                return Err(Error::dim("token lm vector", params.w_tok.cols, v.len()));
            }
            Ok(params
                .w_tok
                .affine(v, &params.b_tok)
                .into_iter()
                .map(|x| x as f32)
                .collect())
        })
        .collect()
}

/// Subtracts the mean and divides by sqrt(population variance + 1e-5).
/// No learned scale or shift.
pub fn layer_norm(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let denom = (var + LAYER_NORM_EPS).sqrt();
    v.iter_mut().for_each(|x| *x = (*x - mean) / denom);
}

/// `w_cls · v + b_cls`, optionally layer-normalized. `None` when `n_c = 0`.
pub fn project_cls(lm_cls: &[f32], params: &ProjectionParams, cls_layer_norm: bool) -> Result<Option<Vec<f32>>> {
    if params.n_c() == 0 {
        return Ok(None);
    }
    if lm_cls.len() != params.w_cls.cols {
        return Err(Error::dim("cls lm vector", params.w_cls.cols, lm_cls.len()));
    }
    let mut v = params.w_cls.affine(lm_cls, &params.b_cls);
    if cls_layer_norm {
        layer_norm(&mut v);
    }
    Ok(Some(v.into_iter().map(|x| x as f32).collect()))
}
