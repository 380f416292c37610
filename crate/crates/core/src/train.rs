//! Losses, optimizer, and the two training loops: contrastive victim
//! pretraining over graph/summary pairs, and attacker embedding regression
//! against queried victim outputs.
//!
//! The contrastive objective is one-directional (graph rows against text
//! rows), computed with a row-max-stabilized softmax. The regression
//! objective the optimizer sees is the SUM of squared residuals over the
//! batch; logs report the per-sample mean so runs with different budgets
//! stay comparable.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::encoder::{Encoder, EncoderConfig};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tag::{sample_subgraph, split_nodes, SamplerConfig, Subgraph, TextAttributedGraph};
use crate::tensor::{Op, Tape, Tensor, TensorId};
use crate::text::FrozenTextEncoder;
use crate::victim::QueryRecord;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Contrastive temperature.
    pub temperature: f64,
    pub lambda_mse: f64,
    pub lambda_contrast: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            weight_decay: 1e-5,
            batch_size: 32,
            epochs: 2,
            temperature: 0.07,
            lambda_mse: 1.0,
            lambda_contrast: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if self.temperature <= 0.0 {
            return Err(Error::Config("temperature must be > 0".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainLog {
    pub epoch_mean_loss: Vec<f64>,
    /// Cumulative wall time at the end of each epoch.
    pub epoch_wall_seconds: Vec<f64>,
    pub wall_seconds: f64,
    pub param_hash: u64,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,mean_loss,wall_seconds\n");
        for (e, (loss, wall)) in self
            .epoch_mean_loss
            .iter()
            .zip(&self.epoch_wall_seconds)
            .enumerate()
        {
            s.push_str(&format!("{e},{loss},{wall}\n"));
        }
        s
    }
}

fn check_unit_rows(t: &Tensor, what: &str) -> Result<()> {
    for i in 0..t.rows {
        let norm: f64 = t.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::Contract(format!(
                "{what} row {i} has norm {norm}, expected unit"
            )));
        }
    }
    Ok(())
}

/// Stack 1 x d row tensors into an N x d matrix on the tape.
pub fn stack_rows(tape: &mut Tape, rows: &[TensorId]) -> Result<TensorId> {
    if rows.is_empty() {
        return Err(Error::Contract("cannot stack zero rows".into()));
    }
    let mut wide = tape.apply(Op::Transpose, &[rows[0]])?; // d x 1
    for &r in &rows[1..] {
        let col = tape.apply(Op::Transpose, &[r])?;
        wide = tape.apply(Op::ConcatCols, &[wide, col])?;
    }
    tape.apply(Op::Transpose, &[wide])
}

/// InfoNCE over matched graph/text rows (graph -> text direction):
/// -(1/N) sum_i log softmax_row_i(sim/tau)[i].
pub fn contrastive_loss_on_tape(
    tape: &mut Tape,
    graph_rows: TensorId,
    text_rows: TensorId,
    tau: f64,
) -> Result<TensorId> {
    if tau <= 0.0 {
        return Err(Error::Contract(format!("temperature {tau} must be > 0")));
    }
    let g = tape.value(graph_rows).clone();
    let t = tape.value(text_rows).clone();
    if g.rows != t.rows || g.cols != t.cols {
        return Err(Error::Dimension {
            op: "contrastive_loss",
            detail: format!("{}x{} vs {}x{}", g.rows, g.cols, t.rows, t.cols),
        });
    }
    check_unit_rows(&g, "graph embeddings")?;
    check_unit_rows(&t, "text embeddings")?;
    let n = g.rows;
    let tt = tape.apply(Op::Transpose, &[text_rows])?;
    let sim = tape.apply(Op::MatMul, &[graph_rows, tt])?;
    let scaled = tape.apply(Op::Scale(1.0 / tau), &[sim])?;
    let probs = tape.apply(Op::SoftmaxRows, &[scaled])?;
    let logp = tape.apply(Op::Log, &[probs])?;
    let mut eye = Tensor::zeros(n, n);
    for i in 0..n {
        eye.set(i, i, 1.0);
    }
    let eye = tape.constant(eye);
    let diag = tape.apply(Op::Mul, &[logp, eye])?;
    let total = tape.apply(Op::Sum, &[diag])?;
    tape.apply(Op::Scale(-1.0 / n as f64), &[total])
}

/// Sum of squared residuals between attacker rows and constant victim rows.
pub fn mse_loss_on_tape(
    tape: &mut Tape,
    attacker_rows: TensorId,
    victim_rows: TensorId,
) -> Result<TensorId> {
    let a = tape.value(attacker_rows);
    let b = tape.value(victim_rows);
    if a.rows != b.rows || a.cols != b.cols {
        return Err(Error::Dimension {
            op: "mse_regression_loss",
            detail: format!("{}x{} vs {}x{}", a.rows, a.cols, b.rows, b.cols),
        });
    }
    let neg = tape.apply(Op::Scale(-1.0), &[victim_rows])?;
    let diff = tape.apply(Op::Add, &[attacker_rows, neg])?;
    let sq = tape.apply(Op::Mul, &[diff, diff])?;
    tape.apply(Op::Sum, &[sq])
}

/// Eager scalar value of the contrastive loss.
pub fn contrastive_loss(graph_rows: &Tensor, text_rows: &Tensor, tau: f64) -> Result<f64> {
    let mut tape = Tape::new();
    let g = tape.constant(graph_rows.clone());
    let t = tape.constant(text_rows.clone());
    let loss = contrastive_loss_on_tape(&mut tape, g, t, tau)?;
    Ok(tape.value(loss).data[0])
}

/// Eager scalar value of the summed regression loss.
pub fn mse_regression_loss(attacker_rows: &Tensor, victim_rows: &Tensor) -> Result<f64> {
    let mut tape = Tape::new();
    let a = tape.constant(attacker_rows.clone());
    let b = tape.constant(victim_rows.clone());
    let loss = mse_loss_on_tape(&mut tape, a, b)?;
    Ok(tape.value(loss).data[0])
}

/// lambda_mse * regression + lambda_contrast * contrastive.
pub fn combined_loss(
    attacker_rows: &Tensor,
    victim_rows: &Tensor,
    text_rows: Option<&Tensor>,
    tau: f64,
    lambda_mse: f64,
    lambda_contrast: f64,
) -> Result<f64> {
    let mut total = lambda_mse * mse_regression_loss(attacker_rows, victim_rows)?;
    if lambda_contrast > 0.0 {
        let text = text_rows.ok_or_else(|| {
            Error::MissingData("combined loss with lambda_contrast > 0 needs text embeddings".into())
        })?;
        total += lambda_contrast * contrastive_loss(attacker_rows, text, tau)?;
    }
    Ok(total)
}

/// AdamW with decoupled weight decay: decay is applied to the parameter
/// directly, separately from the bias-corrected adaptive step.
pub struct AdamW {
    pub lr: f64,
    pub wd: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamW {
    pub fn new(lr: f64, wd: f64, params: &[Tensor]) -> Self {
        AdamW {
            lr,
            wd,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: params.iter().map(|p| Tensor::zeros(p.rows, p.cols)).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.rows, p.cols)).collect(),
        }
    }

    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor], names: &[String]) -> Result<()> {
        assert_eq!(params.len(), grads.len());
        for (i, g) in grads.iter().enumerate() {
            if !g.all_finite() {
                let name = names.get(i).map(String::as_str).unwrap_or("<unnamed>");
                return Err(Error::Optimizer(name.to_string()));
            }
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for k in 0..p.data.len() {
                // decoupled decay
                p.data[k] -= self.lr * self.wd * p.data[k];
                m.data[k] = self.beta1 * m.data[k] + (1.0 - self.beta1) * g.data[k];
                v.data[k] = self.beta2 * v.data[k] + (1.0 - self.beta2) * g.data[k] * g.data[k];
                let mhat = m.data[k] / bc1;
                let vhat = v.data[k] / bc2;
                p.data[k] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Seeded per-epoch batch order. Trailing batches of size 1 are merged into
/// the previous batch when `merge_singletons` (contrastive loss degenerates
/// to 0 on a single pair).
fn epoch_batches(
    n: usize,
    batch_size: usize,
    merge_singletons: bool,
    rng: &mut Rng,
) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size).map(<[usize]>::to_vec).collect();
    if merge_singletons && batches.len() > 1 {
        if let Some(last) = batches.last() {
            if last.len() == 1 {
                let last = batches.pop().unwrap();
                batches.last_mut().unwrap().extend(last);
            }
        }
    }
    batches
}

/// Contrastive pretraining of the victim over (subgraph, summary) pairs.
/// The text encoder stays frozen; only the graph encoder's parameters move.
pub fn pretrain_victim(
    graphs: &[TextAttributedGraph],
    summaries: &BTreeMap<String, Vec<String>>,
    text_encoder: &FrozenTextEncoder,
    encoder_config: &EncoderConfig,
    train_config: &TrainConfig,
    sampler_config: &SamplerConfig,
) -> Result<(Encoder, TrainLog)> {
    train_config.validate()?;
    if graphs.is_empty() {
        return Err(Error::MissingData("no pretraining graphs".into()));
    }
    let start = Instant::now();

    // Samples: one (subgraph, summary embedding) pair per training-split node.
    let mut samples: Vec<(Subgraph, Vec<f64>)> = Vec::new();
    for g in graphs {
        let lines = summaries.get(&g.graph_id).ok_or_else(|| {
            Error::MissingData(format!("no summaries for graph {}", g.graph_id))
        })?;
        if lines.len() != g.node_count {
            return Err(Error::MissingData(format!(
                "graph {} has {} nodes but {} summaries",
                g.graph_id,
                g.node_count,
                lines.len()
            )));
        }
        let split = split_nodes(g, train_config.seed)?;
        for &v in &split.train_ids {
            let sub = sample_subgraph(g, v, sampler_config)?;
            let text_emb = text_encoder.embed_text(&lines[v])?;
            samples.push((sub, text_emb));
        }
    }

    let mut encoder = Encoder::new(encoder_config.clone())?;
    let mut opt = AdamW::new(train_config.learning_rate, train_config.weight_decay, &encoder.params);
    let names = encoder.param_names().to_vec();
    let mut log = TrainLog {
        epoch_mean_loss: Vec::new(),
        epoch_wall_seconds: Vec::new(),
        wall_seconds: 0.0,
        param_hash: 0,
    };
    let root = Rng::new(train_config.seed).split_str("pretrain-epochs");

    for epoch in 0..train_config.epochs {
        let mut rng = root.split(epoch as u64);
        let batches = epoch_batches(samples.len(), train_config.batch_size, true, &mut rng);
        let mut weighted_loss = 0.0;
        for batch in &batches {
            let mut tape = Tape::new();
            let param_ids = encoder.leaf_params(&mut tape, true);
            let mut emb_ids = Vec::with_capacity(batch.len());
            let mut text = Tensor::zeros(batch.len(), text_encoder.embed_dim());
            for (bi, &si) in batch.iter().enumerate() {
                let (sub, text_emb) = &samples[si];
                emb_ids.push(encoder.forward(&mut tape, &param_ids, sub)?);
                for (j, &x) in text_emb.iter().enumerate() {
                    text.set(bi, j, x);
                }
            }
            let graph_rows = stack_rows(&mut tape, &emb_ids)?;
            let text_rows = tape.constant(text);
            let loss = contrastive_loss_on_tape(
                &mut tape,
                graph_rows,
                text_rows,
                train_config.temperature,
            )?;
            let loss_val = tape.value(loss).data[0];
            tape.backward(loss)?;
            let grads: Vec<Tensor> = param_ids.iter().map(|&id| tape.grad_or_zero(id)).collect();
            opt.step(&mut encoder.params, &grads, &names)?;
            weighted_loss += loss_val * batch.len() as f64;
        }
        log.epoch_mean_loss.push(weighted_loss / samples.len() as f64);
        log.epoch_wall_seconds.push(start.elapsed().as_secs_f64());
    }
    log.wall_seconds = start.elapsed().as_secs_f64();
    log.param_hash = encoder.param_hash();
    Ok((encoder, log))
}

/// Embedding regression: fit the attacker to the victim's returned
/// embeddings. The targets are frozen constants.
pub fn train_attacker(
    records: &[QueryRecord],
    attacker_config: &EncoderConfig,
    train_config: &TrainConfig,
) -> Result<(Encoder, TrainLog)> {
    train_config.validate()?;
    if records.is_empty() {
        return Err(Error::Contract("train_attacker needs at least one query record".into()));
    }
    let start = Instant::now();
    let mut encoder = Encoder::new(attacker_config.clone())?;
    let mut opt = AdamW::new(train_config.learning_rate, train_config.weight_decay, &encoder.params);
    let names = encoder.param_names().to_vec();
    let mut log = TrainLog {
        epoch_mean_loss: Vec::new(),
        epoch_wall_seconds: Vec::new(),
        wall_seconds: 0.0,
        param_hash: 0,
    };
    let root = Rng::new(train_config.seed).split_str("attacker-epochs");
    let d = attacker_config.output_dim;

    for epoch in 0..train_config.epochs {
        let mut rng = root.split(epoch as u64);
        let batches = epoch_batches(records.len(), train_config.batch_size, false, &mut rng);
        let mut total_loss = 0.0;
        for batch in &batches {
            let mut tape = Tape::new();
            let param_ids = encoder.leaf_params(&mut tape, true);
            let mut emb_ids = Vec::with_capacity(batch.len());
            let mut targets = Tensor::zeros(batch.len(), d);
            for (bi, &ri) in batch.iter().enumerate() {
                let rec = &records[ri];
                if rec.embedding.len() != d {
                    return Err(Error::Dimension {
                        op: "train_attacker",
                        detail: format!(
                            "record embedding dim {} != attacker output dim {d}",
                            rec.embedding.len()
                        ),
                    });
                }
                emb_ids.push(encoder.forward(&mut tape, &param_ids, &rec.subgraph)?);
                for (j, &x) in rec.embedding.iter().enumerate() {
                    targets.set(bi, j, x);
                }
            }
            let attacker_rows = stack_rows(&mut tape, &emb_ids)?;
            let victim_rows = tape.constant(targets);
            let loss = mse_loss_on_tape(&mut tape, attacker_rows, victim_rows)?;
            let loss_val = tape.value(loss).data[0];
            tape.backward(loss)?;
            let grads: Vec<Tensor> = param_ids.iter().map(|&id| tape.grad_or_zero(id)).collect();
            opt.step(&mut encoder.params, &grads, &names)?;
            total_loss += loss_val;
        }
        log.epoch_mean_loss.push(total_loss / records.len() as f64);
        log.epoch_wall_seconds.push(start.elapsed().as_secs_f64());
    }
    log.wall_seconds = start.elapsed().as_secs_f64();
    log.param_hash = encoder.param_hash();
    Ok((encoder, log))
}
