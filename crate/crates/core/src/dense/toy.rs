//! Deterministic hash-seeded token embeddings, a stand-in for a neural encoder.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{normalize, SingleVector, TokenMatrix};
use crate::error::{Error, Result};

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn token_vector(token: &str, dim: usize, seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(fnv1a(token.as_bytes()) ^ splitmix64(seed)));
    loop {
        let mut v: Vec<f32> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        if normalize(&mut v).is_some() {
            return v;
        }
    }
}

/// Caching embedder: identical tokens always map to the identical unit vector.
#[derive(Debug, Clone)]
pub struct ToyEmbedder {
    dim: usize,
    seed: u64,
    cache: HashMap<String, Vec<f32>>,
}

impl ToyEmbedder {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Config(format!("toy embeddings need dim >= 2, got {dim}")));
        }
        Ok(Self { dim, seed, cache: HashMap::new() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn vector(&mut self, token: &str) -> &[f32] {
        let (dim, seed) = (self.dim, self.seed);
        self.cache
            .entry(token.to_string())
            .or_insert_with(|| token_vector(token, dim, seed))
    }

    /// One row per token.
    pub fn embed(&mut self, id: &str, tokens: &[String]) -> Result<TokenMatrix> {
        if tokens.is_empty() {
            return Err(Error::EmptyInput(format!("no tokens to embed for {id}")));
        }
        let mut data = Vec::with_capacity(tokens.len() * self.dim);
        for t in tokens {
            data.extend_from_slice(self.vector(t));
        }
        TokenMatrix::new(id, self.dim, data)
    }

    /// Normalized mean of the token vectors.
    pub fn embed_single(&mut self, id: &str, tokens: &[String]) -> Result<SingleVector> {
        if tokens.is_empty() {
            return Err(Error::EmptyInput(format!("no tokens to embed for {id}")));
        }
        let mut sum = vec![0.0f64; self.dim];
        for t in tokens {
            let v = self.vector(t);
            sum.iter_mut().zip(v).for_each(|(s, &x)| *s += x as f64);
        }
        let mut mean: Vec<f32> = sum.into_iter().map(|s| s as f32).collect();
        normalize(&mut mean).ok_or_else(|| Error::Input(format!("token vectors of {id} cancel out")))?;
        SingleVector::new(id, mean)
    }
}

/// Embeds `tokens` as a token matrix; see [`ToyEmbedder::embed`].
pub fn toy_embed(tokens: &[String], dim: usize, seed: u64) -> Result<TokenMatrix> {
    ToyEmbedder::new(dim, seed)?.embed("", tokens)
}

/// Embeds `tokens` as one pooled vector; see [`ToyEmbedder::embed_single`].
pub fn toy_single_vector(tokens: &[String], dim: usize, seed: u64) -> Result<SingleVector> {
    ToyEmbedder::new(dim, seed)?.embed_single("", tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn same_token_same_row() {
        let m = toy_embed(&toks("euro euro"), 8, 7).unwrap();
        let rows: Vec<&[f32]> = m.rows().collect();
        assert_eq!(rows[0], rows[1]);
        assert_eq!(m.n_rows(), 2);
    }

    #[test]
    fn seeds_differ() {
        let a = toy_embed(&toks("euro bank"), 8, 1).unwrap();
        let b = toy_embed(&toks("euro bank"), 8, 2).unwrap();
        assert_ne!(a, b);
        assert_eq!(a, toy_embed(&toks("euro bank"), 8, 1).unwrap());
    }

    #[test]
    fn rows_are_unit_length() {
        let m = toy_embed(&toks("a b c d e f g"), 16, 3).unwrap();
        for row in m.rows() {
            let n: f64 = row.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-6);
        }
        let v = toy_single_vector(&toks("a b c"), 16, 3).unwrap();
        let n: f64 = v.as_slice().iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-6);
    }

    #[test]
    fn errors() {
        assert!(matches!(toy_embed(&[], 8, 0), Err(Error::EmptyInput(_))));
        assert!(matches!(toy_embed(&toks("a"), 1, 0), Err(Error::Config(_))));
        assert!(matches!(toy_single_vector(&[], 8, 0), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn distinct_tokens_are_nearly_orthogonal_in_high_dim() {
        let m = toy_embed(&toks("alpha beta"), 256, 0).unwrap();
        let rows: Vec<&[f32]> = m.rows().collect();
        let d: f32 = rows[0].iter().zip(rows[1]).map(|(a, b)| a * b).sum();
        assert!(d.abs() < 0.3);
    }
}
