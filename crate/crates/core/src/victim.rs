//! The black-box boundary between attacker and victim: subgraph in,
//! embedding out, with budget accounting and optional deployment defenses.
//!
//! Defenses compose in a fixed order — orthonormal projection (truncation),
//! then coordinate quantization over [-1, 1], then additive Gaussian noise —
//! and the noisy result is returned WITHOUT re-normalization, so whether to
//! normalize is the attacker's choice.

use serde::{Deserialize, Serialize};

use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tag::Subgraph;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DefenseConfig {
    /// Gaussian noise std; 0 disables.
    #[serde(default)]
    pub noise_std: f64,
    /// Project onto the span of the first t vectors of a fixed seeded
    /// orthonormal basis (output stays d-dimensional), then re-normalize.
    #[serde(default)]
    pub truncate_dim: Option<usize>,
    /// Uniform symmetric quantization of each coordinate over [-1, 1].
    #[serde(default)]
    pub quantize_bits: Option<u32>,
    /// Max queries per logical session.
    #[serde(default)]
    pub rate_limit: Option<u64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for DefenseConfig {
    fn default() -> Self {
        DefenseConfig {
            noise_std: 0.0,
            truncate_dim: None,
            quantize_bits: None,
            rate_limit: None,
            seed: 0,
        }
    }
}

impl DefenseConfig {
    pub fn is_identity(&self) -> bool {
        self.noise_std == 0.0 && self.truncate_dim.is_none() && self.quantize_bits.is_none()
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.noise_std < 0.0 {
            return Err(Error::Config("noise_std must be >= 0".into()));
        }
        if let Some(t) = self.truncate_dim {
            if t < 1 || t > d {
                return Err(Error::Config(format!(
                    "truncate_dim {t} not in [1, {d}]"
                )));
            }
        }
        if let Some(q) = self.quantize_bits {
            if q < 1 || q > 52 {
                return Err(Error::Config(format!("quantize_bits {q} not in [1, 52]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct QueryRecord {
    pub subgraph: Subgraph,
    /// Defended victim embedding; unit norm only when no defense is active.
    pub embedding: Vec<f64>,
    pub query_index: u64,
}

/// Seeded orthonormal basis (columns) via modified Gram-Schmidt on a
/// Gaussian matrix.
pub fn truncation_basis(d: usize, seed: u64) -> Tensor {
    let mut rng = Rng::new(seed).split_str("truncation-basis");
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        for q in &cols {
            let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= dot * qi;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue; // numerically dependent draw; resample
        }
        for x in &mut v {
            *x /= norm;
        }
        cols.push(v);
    }
    let mut q = Tensor::zeros(d, d);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..d {
            q.set(i, j, col[i]);
        }
    }
    q
}

/// Defense order: truncate/project -> quantize -> add noise; no final
/// re-normalization after noise.
pub fn apply_defense(
    embedding: &[f64],
    defense: &DefenseConfig,
    basis: Option<&Tensor>,
    noise_rng: &mut Rng,
) -> Vec<f64> {
    let d = embedding.len();
    let mut out = embedding.to_vec();

    if let Some(t) = defense.truncate_dim {
        let q = basis.expect("truncation requires a basis");
        // coords in the basis, keep the first t, map back
        let mut coeffs = vec![0.0; t];
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c = (0..d).map(|i| q.get(i, j) * out[i]).sum();
        }
        let mut proj = vec![0.0; d];
        for (j, c) in coeffs.iter().enumerate() {
            for (i, p) in proj.iter_mut().enumerate() {
                *p += c * q.get(i, j);
            }
        }
        let norm: f64 = proj.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for x in &mut proj {
                *x /= norm;
            }
        }
        out = proj;
    }

    if let Some(q) = defense.quantize_bits {
        let levels = 1u64 << q;
        let width = 2.0 / levels as f64;
        for x in &mut out {
            let clamped = x.clamp(-1.0, 1.0);
            let mut idx = ((clamped + 1.0) / width).floor() as i64;
            idx = idx.clamp(0, levels as i64 - 1);
            *x = -1.0 + (idx as f64 + 0.5) * width;
        }
    }

    if defense.noise_std > 0.0 {
        for x in &mut out {
            *x += defense.noise_std * noise_rng.normal();
        }
    }
    out
}

/// Query access to a victim encoder. The encoder itself is private: callers
/// see only embeddings, the spent counter, and structural metadata.
pub struct VictimHandle {
    victim: Encoder,
    budget: Option<u64>,
    spent: u64,
    session_spent: u64,
    defense: DefenseConfig,
    noise_rng: Rng,
    basis: Option<Tensor>,
    transcript: Vec<String>,
}

#[derive(Serialize)]
struct TranscriptLine<'a> {
    query_index: u64,
    center: usize,
    node_count: usize,
    embedding: &'a [f64],
}

impl VictimHandle {
    pub fn new(victim: Encoder, budget: Option<u64>, defense: DefenseConfig) -> Result<Self> {
        let d = victim.config.output_dim;
        defense.validate(d)?;
        let basis = defense.truncate_dim.map(|_| truncation_basis(d, defense.seed));
        let noise_rng = Rng::new(defense.seed).split_str("defense-noise");
        Ok(VictimHandle {
            victim,
            budget,
            spent: 0,
            session_spent: 0,
            defense,
            noise_rng,
            basis,
            transcript: Vec::new(),
        })
    }

    pub fn spent(&self) -> u64 {
        self.spent
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    pub fn output_dim(&self) -> usize {
        self.victim.config.output_dim
    }

    /// Structural metadata for cost reports; exposes no parameter values.
    pub fn victim_param_count(&self) -> usize {
        self.victim.param_count()
    }

    /// Start a new logical session (resets the rate-limit counter only).
    pub fn new_session(&mut self) {
        self.session_spent = 0;
    }

    pub fn query(&mut self, subgraph: &Subgraph) -> Result<QueryRecord> {
        if let Some(b) = self.budget {
            if self.spent >= b {
                return Err(Error::BudgetExhausted { spent: self.spent });
            }
        }
        if let Some(limit) = self.defense.rate_limit {
            if self.session_spent >= limit {
                return Err(Error::Throttled {
                    spent: self.session_spent,
                    limit,
                });
            }
        }
        let raw = self.victim.embed(subgraph)?;
        let embedding = apply_defense(&raw, &self.defense, self.basis.as_ref(), &mut self.noise_rng);
        let record = QueryRecord {
            subgraph: subgraph.clone(),
            embedding,
            query_index: self.spent,
        };
        self.spent += 1;
        self.session_spent += 1;
        self.transcript.push(
            serde_json::to_string(&TranscriptLine {
                query_index: record.query_index,
                center: subgraph.center,
                node_count: subgraph.node_count(),
                embedding: &record.embedding,
            })
            .expect("transcript serialization cannot fail"),
        );
        Ok(record)
    }

    /// Line-delimited JSON audit log of every successful query.
    pub fn transcript_jsonl(&self) -> String {
        let mut s = self.transcript.join("\n");
        if !s.is_empty() {
            s.push('\n');
        }
        s
    }
}
