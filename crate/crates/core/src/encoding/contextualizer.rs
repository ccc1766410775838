//! Deterministic reference contextualizer.
//!
//! Stands in for a trained language model at desk scale. Each token id gets
//! a fixed pseudo-random unit vector; each position then blends its own base
//! vector with the mean of its neighbours inside a window, so identical
//! tokens in different contexts get different outputs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::{token_hash, SplitMix64};
use crate::model::{TokenId, TokenSeq};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StubContextualizer {
    pub seed: u64,
    pub window: usize,
    pub mix_weight: f64,
}

impl Default for StubContextualizer {
    fn default() -> Self {
        StubContextualizer {
            seed: 0,
            window: 2,
            mix_weight: 0.5,
        }
    }
}

/// Contextualizer output: one `n_lm` vector per position plus the CLS slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Contextualized {
    pub positions: Vec<Vec<f32>>,
    pub cls: Vec<f32>,
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

impl StubContextualizer {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mix_weight) {
            return Err(Error::Config(format!(
                "mix_weight must lie in [0, 1], got {}",
                self.mix_weight
            )));
        }
        Ok(())
    }

    /// Unit vector for a token id, independent of context.
    pub fn base_vector(&self, token: TokenId, n_lm: usize) -> Vec<f64> {
        let mut rng = SplitMix64::new(token_hash(self.seed, token));
        let mut v: Vec<f64> = (0..n_lm).map(|_| rng.next_signed_unit()).collect();
        normalize(&mut v);
        v
    }

    pub fn contextualize(&self, seq: &TokenSeq, n_lm: usize) -> Result<Contextualized> {
        if n_lm == 0 {
            return Err(Error::Config("n_lm must be ≥ 1".into()));
        }
        self.validate()?;

        let mut cache: HashMap<TokenId, Vec<f64>> = HashMap::new();
        let bases: Vec<&Vec<f64>> = {
            for &t in &seq.token_ids {
                cache.entry(t).or_insert_with(|| self.base_vector(t, n_lm));
            }
            seq.token_ids.iter().map(|t| &cache[t]).collect()
        };

        let len = bases.len();
        let mixing = self.window > 0 && self.mix_weight > 0.0;
        let mut outputs: Vec<Vec<f64>> = Vec::with_capacity(len);
        for i in 0..len {
            let lo = i.saturating_sub(self.window);
            let hi = (i + self.window).min(len.saturating_sub(1));
            let neighbours = hi - lo;
            if !mixing || neighbours == 0 {
                outputs.push(bases[i].clone());
                continue;
            }
            let mut mean = vec![0.0f64; n_lm];
            for (j, base) in bases.iter().enumerate().take(hi + 1).skip(lo) {
                if j != i {
                    mean.iter_mut().zip(base.iter()).for_each(|(m, b)| *m += b);
                }
            }
            let inv = 1.0 / neighbours as f64;
            let mut out: Vec<f64> = bases[i]
                .iter()
                .zip(&mean)
                .map(|(b, m)| (1.0 - self.mix_weight) * b + self.mix_weight * (m * inv))
                .collect();
            normalize(&mut out);
            outputs.push(out);
        }

        let mut cls = vec![0.0f64; n_lm];
        if len > 0 {
            for out in &outputs {
                cls.iter_mut().zip(out).for_each(|(c, x)| *c += x);
            }
            let inv = 1.0 / len as f64;
            cls.iter_mut().for_each(|c| *c *= inv);
            normalize(&mut cls);
        }

        Ok(Contextualized {
            positions: outputs.iter().map(|v| to_f32(v)).collect(),
            cls: to_f32(&cls),
        })
    }
}
