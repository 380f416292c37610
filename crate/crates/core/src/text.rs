//! Frozen deterministic text encoder.
//!
//! A hashing bag-of-words over a fixed random projection: tokens are
//! lowercased, split on whitespace/punctuation, FNV-1a-hashed into one of
//! `vocab_buckets` rows of a seeded projection matrix, summed, and
//! L2-normalized. The projection is drawn once at construction and never
//! mutated, so the same (seed, buckets, dim) triple reproduces the same
//! embedding for the same text on any platform.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{fnv1a64, Rng};
use crate::tensor::Tensor;

pub const DEFAULT_VOCAB_BUCKETS: usize = 4096;
pub const DEFAULT_EMBED_DIM: usize = 32;

/// Serialized form: everything needed to rebuild the encoder bit-for-bit.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TextEncoderSpec {
    pub seed: u64,
    pub vocab_buckets: usize,
    pub embed_dim: usize,
    pub hash: String,
    pub tokenizer: String,
}

#[derive(Debug, Clone)]
pub struct FrozenTextEncoder {
    spec: TextEncoderSpec,
    projection: Tensor, // vocab_buckets x embed_dim, immutable
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| c.is_whitespace() || (c.is_ascii_punctuation() && c != '\''))
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

impl FrozenTextEncoder {
    pub fn new(seed: u64, vocab_buckets: usize, embed_dim: usize) -> Self {
        let mut rng = Rng::new(seed).split_str("text-encoder-projection");
        let data: Vec<f64> = (0..vocab_buckets * embed_dim).map(|_| rng.normal()).collect();
        FrozenTextEncoder {
            spec: TextEncoderSpec {
                seed,
                vocab_buckets,
                embed_dim,
                hash: "fnv1a64".to_string(),
                tokenizer: "lower+split".to_string(),
            },
            projection: Tensor::new(vocab_buckets, embed_dim, data),
        }
    }

    pub fn with_defaults(seed: u64) -> Self {
        Self::new(seed, DEFAULT_VOCAB_BUCKETS, DEFAULT_EMBED_DIM)
    }

    pub fn from_spec(spec: &TextEncoderSpec) -> Self {
        Self::new(spec.seed, spec.vocab_buckets, spec.embed_dim)
    }

    pub fn spec(&self) -> &TextEncoderSpec {
        &self.spec
    }

    pub fn embed_dim(&self) -> usize {
        self.spec.embed_dim
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a64(token.as_bytes()) % self.spec.vocab_buckets as u64) as usize
    }

    /// Unit-norm embedding of a nonempty text.
    pub fn embed_text(&self, text: &str) -> Result<Vec<f64>> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(Error::EmptyText);
        }
        let d = self.spec.embed_dim;
        let mut acc = vec![0.0; d];
        for tok in &tokens {
            let row = self.projection.row(self.bucket(tok));
            for j in 0..d {
                acc[j] += row[j];
            }
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-12 {
            return Err(Error::DegenerateInput(
                "text embedding cancelled to zero norm".into(),
            ));
        }
        for v in &mut acc {
            *v /= norm;
        }
        Ok(acc)
    }

    /// K x d matrix of unit-norm label-sentence embeddings.
    pub fn embed_labels(&self, label_sentences: &[String]) -> Result<Tensor> {
        if label_sentences.len() < 2 {
            return Err(Error::Contract(format!(
                "embed_labels requires K >= 2, got {}",
                label_sentences.len()
            )));
        }
        let d = self.spec.embed_dim;
        let mut data = Vec::with_capacity(label_sentences.len() * d);
        for s in label_sentences {
            data.extend(self.embed_text(s)?);
        }
        Ok(Tensor::new(label_sentences.len(), d, data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_embedding() {
        let e = FrozenTextEncoder::with_defaults(5);
        assert_eq!(e.embed_text("graph").unwrap(), e.embed_text("graph").unwrap());
        // Determinism across reconstruction from spec.
        let e2 = FrozenTextEncoder::from_spec(e.spec());
        assert_eq!(e.embed_text("a social item").unwrap(), e2.embed_text("a social item").unwrap());
    }

    #[test]
    fn unit_norm_output() {
        let e = FrozenTextEncoder::with_defaults(5);
        for s in ["graph", "a longer sentence about things", "x"] {
            let v = e.embed_text(s).unwrap();
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn bucket_matches_reference_fnv() {
        // Independent FNV-1a reference, written out long-hand.
        fn reference_fnv(s: &str) -> u64 {
            let mut h: u64 = 14695981039346656037;
            for b in s.bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(1099511628211);
            }
            h
        }
        let e = FrozenTextEncoder::with_defaults(0);
        assert_eq!(e.bucket("ai"), (reference_fnv("ai") % 4096) as usize);
        assert_eq!(e.bucket("graph"), (reference_fnv("graph") % 4096) as usize);
    }

    #[test]
    fn empty_text_rejected() {
        let e = FrozenTextEncoder::with_defaults(0);
        assert!(matches!(e.embed_text("  ,. !"), Err(Error::EmptyText)));
    }

    #[test]
    fn label_rows_unit_norm_and_kappa_bound() {
        let e = FrozenTextEncoder::with_defaults(3);
        let labels = vec![
            "a paper about machine learning".to_string(),
            "a paper about databases".to_string(),
            "a paper about theory".to_string(),
        ];
        let z = e.embed_labels(&labels).unwrap();
        for i in 0..z.rows {
            let norm: f64 = z.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-12);
        }
        // ||Z_a - Z_b|| <= 2 for unit rows.
        for a in 0..z.rows {
            for b in 0..z.rows {
                let dist: f64 = z
                    .row(a)
                    .iter()
                    .zip(z.row(b))
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                assert!(dist <= 2.0 + 1e-12);
            }
        }
    }

    #[test]
    fn identical_sentences_identical_rows() {
        let e = FrozenTextEncoder::with_defaults(3);
        let labels = vec!["same sentence".to_string(), "same sentence".to_string()];
        let z = e.embed_labels(&labels).unwrap();
        assert_eq!(z.row(0), z.row(1));
    }

    #[test]
    fn distinct_topics_rarely_collinear() {
        // 100 encoder seeds, d = 32: pairwise cosine of distinct topic
        // sentences stays away from 1.
        let labels = vec![
            "an item about sports and fitness".to_string(),
            "an item about cooking recipes".to_string(),
            "an item about quantum physics".to_string(),
        ];
        let mut failures = 0;
        for seed in 0..100 {
            let e = FrozenTextEncoder::with_defaults(seed);
            let z = e.embed_labels(&labels).unwrap();
            for a in 0..3 {
                for b in (a + 1)..3 {
                    let cos: f64 = z.row(a).iter().zip(z.row(b)).map(|(x, y)| x * y).sum();
                    if cos >= 1.0 - 1e-6 {
                        failures += 1;
                    }
                }
            }
        }
        assert_eq!(failures, 0);
    }
}
