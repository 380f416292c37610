//! Zero-shot prediction, accuracy/fidelity metrics, and the empirical
//! verifier for the similarity-margin bound.
//!
//! The bound: if the victim/attacker embeddings of a test node and of its
//! nearest queried node are pairwise within epsilon (three legs: victim
//! test-vs-query, attacker test-vs-query, attacker-query-vs-victim-query),
//! then the attacker's similarity margin Delta between its own predicted
//! label and the victim's predicted label is below 3 * kappa * epsilon,
//! where kappa is the distance between the two predicted labels' text
//! embeddings. The verifier measures epsilon per test node as the max of
//! the three legs, so a violation is an implementation bug, never a data
//! artifact.

use serde::Serialize;

use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::tag::{sample_subgraph, split_nodes, SamplerConfig, TextAttributedGraph};
use crate::tensor::Tensor;
use crate::text::FrozenTextEncoder;
use crate::victim::QueryRecord;

#[derive(Debug, Clone, Serialize)]
pub struct PredictionSet {
    pub node_ids: Vec<usize>,
    pub classes: Vec<usize>,
    /// Per node: dot product against every label row.
    pub similarities: Vec<Vec<f64>>,
}

/// Argmax over label rows; ties break to the lowest class index.
pub fn zero_shot_predict(embedding: &[f64], label_matrix: &Tensor) -> (usize, Vec<f64>) {
    assert!(label_matrix.rows >= 2, "need at least two label rows");
    let sims: Vec<f64> = (0..label_matrix.rows)
        .map(|k| label_matrix.row(k).iter().zip(embedding).map(|(z, e)| z * e).sum())
        .collect();
    let mut best = 0;
    for (k, &s) in sims.iter().enumerate() {
        if s > sims[best] {
            best = k;
        }
    }
    (best, sims)
}

pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != labels.len() {
        return Err(Error::UndefinedMetric);
    }
    let hits = predictions.iter().zip(labels).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / predictions.len() as f64)
}

pub fn fidelity(attacker_predictions: &[usize], victim_predictions: &[usize]) -> Result<f64> {
    accuracy(attacker_predictions, victim_predictions)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LemmaDiagnostics {
    pub epsilon_measured: Vec<f64>,
    pub kappa: Vec<f64>,
    pub delta: Vec<f64>,
    pub bound_holds: Vec<bool>,
    /// Query index of the nearest queried node per test node.
    pub coverage_nn: Vec<usize>,
}

fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Margin diagnostics for one test node given its measured epsilon.
/// Returns (kappa, delta, bound_holds).
pub fn lemma_node_diagnostics(
    attacker_emb: &[f64],
    victim_emb: &[f64],
    epsilon: f64,
    label_matrix: &Tensor,
) -> (f64, f64, bool) {
    let (c_attack, sims_a) = zero_shot_predict(attacker_emb, label_matrix);
    let (c_victim, _) = zero_shot_predict(victim_emb, label_matrix);
    let kappa = l2_dist(label_matrix.row(c_attack), label_matrix.row(c_victim));
    let delta = sims_a[c_attack] - sims_a[c_victim];
    let holds = delta <= 0.0 || delta < 3.0 * kappa * epsilon;
    (kappa, delta, holds)
}

/// Verify the bound on every test subgraph against the query set: epsilon is
/// measured per node as the max of the three triangle legs through the
/// nearest queried node (nearest under victim-embedding distance).
pub fn lemma1_verify(
    attacker: &Encoder,
    victim: &Encoder,
    query_records: &[QueryRecord],
    test_subgraphs: &[crate::tag::Subgraph],
    label_matrix: &Tensor,
) -> Result<LemmaDiagnostics> {
    if query_records.is_empty() {
        return Err(Error::Contract("bound verification needs at least one query".into()));
    }
    // Cache both encoders' views of every queried subgraph.
    let mut q_victim: Vec<Vec<f64>> = Vec::with_capacity(query_records.len());
    let mut q_attacker: Vec<Vec<f64>> = Vec::with_capacity(query_records.len());
    for rec in query_records {
        q_victim.push(victim.embed(&rec.subgraph)?);
        q_attacker.push(attacker.embed(&rec.subgraph)?);
    }

    let mut diag = LemmaDiagnostics::default();
    for sub in test_subgraphs {
        let b = victim.embed(sub)?;
        let a = attacker.embed(sub)?;
        let (nn, _) = q_victim
            .iter()
            .map(|qb| l2_dist(&b, qb))
            .enumerate()
            .min_by(|(_, x), (_, y)| x.partial_cmp(y).unwrap())
            .unwrap();
        let leg_victim = l2_dist(&b, &q_victim[nn]);
        let leg_attacker = l2_dist(&a, &q_attacker[nn]);
        let leg_cross = l2_dist(&q_attacker[nn], &q_victim[nn]);
        let epsilon = leg_victim.max(leg_attacker).max(leg_cross);
        let (kappa, delta, holds) = lemma_node_diagnostics(&a, &b, epsilon, label_matrix);
        diag.epsilon_measured.push(epsilon);
        diag.kappa.push(kappa);
        diag.delta.push(delta);
        diag.bound_holds.push(holds);
        diag.coverage_nn.push(nn);
    }
    Ok(diag)
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphReport {
    pub graph_id: String,
    pub attacker_acc: f64,
    pub victim_acc: f64,
    pub fidelity: f64,
    pub n_test: usize,
    pub frac_bound_holds: f64,
    pub max_delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma: Option<LemmaDiagnostics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub rows: Vec<GraphReport>,
    pub query_count: u64,
    pub attacker_param_count: usize,
    pub victim_param_count: usize,
    pub attacker_wall_seconds: f64,
    pub victim_wall_seconds: f64,
}

impl ScenarioReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "graph_id,attacker_acc,victim_acc,fidelity,n_test,frac_bound_holds,max_delta\n",
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.graph_id,
                r.attacker_acc,
                r.victim_acc,
                r.fidelity,
                r.n_test,
                r.frac_bound_holds,
                r.max_delta
            ));
        }
        s
    }

    /// JSON document; per-node bound diagnostics included only when verbose.
    pub fn to_json(&self, verbose: bool) -> Result<String> {
        if verbose {
            return Ok(serde_json::to_string_pretty(self)?);
        }
        let mut slim = self.clone();
        for r in &mut slim.rows {
            r.lemma = None;
        }
        Ok(serde_json::to_string_pretty(&slim)?)
    }

    pub fn mean_fidelity(&self) -> f64 {
        self.rows.iter().map(|r| r.fidelity).sum::<f64>() / self.rows.len() as f64
    }

    pub fn mean_attacker_acc(&self) -> f64 {
        self.rows.iter().map(|r| r.attacker_acc).sum::<f64>() / self.rows.len() as f64
    }

    pub fn mean_victim_acc(&self) -> f64 {
        self.rows.iter().map(|r| r.victim_acc).sum::<f64>() / self.rows.len() as f64
    }

    pub fn all_bounds_hold(&self) -> bool {
        self.rows.iter().all(|r| r.frac_bound_holds == 1.0)
    }
}

/// Evaluate attacker and victim side by side on every eval graph's test
/// split, with bound diagnostics against the query set.
pub fn evaluate_pair(
    attacker: &Encoder,
    victim: &Encoder,
    eval_graphs: &[TextAttributedGraph],
    text_encoder: &FrozenTextEncoder,
    sampler: &SamplerConfig,
    query_records: &[QueryRecord],
    split_seed: u64,
) -> Result<ScenarioReport> {
    if eval_graphs.is_empty() {
        return Err(Error::MissingData("no eval graphs".into()));
    }
    let mut rows = Vec::with_capacity(eval_graphs.len());
    for g in eval_graphs {
        let label_matrix = text_encoder.embed_labels(&g.label_sentences)?;
        let split = split_nodes(g, split_seed)?;
        let mut subs = Vec::with_capacity(split.test_ids.len());
        let mut preds_a = Vec::new();
        let mut preds_v = Vec::new();
        let mut truth = Vec::new();
        for &v in &split.test_ids {
            let sub = sample_subgraph(g, v, sampler)?;
            let a = attacker.embed(&sub)?;
            let b = victim.embed(&sub)?;
            preds_a.push(zero_shot_predict(&a, &label_matrix).0);
            preds_v.push(zero_shot_predict(&b, &label_matrix).0);
            truth.push(g.labels[v]);
            subs.push(sub);
        }
        let lemma = if query_records.is_empty() {
            None
        } else {
            Some(lemma1_verify(attacker, victim, query_records, &subs, &label_matrix)?)
        };
        let (frac_bound_holds, max_delta) = match &lemma {
            Some(d) if !d.bound_holds.is_empty() => (
                d.bound_holds.iter().filter(|&&b| b).count() as f64 / d.bound_holds.len() as f64,
                d.delta.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            ),
            _ => (1.0, 0.0),
        };
        rows.push(GraphReport {
            graph_id: g.graph_id.clone(),
            attacker_acc: accuracy(&preds_a, &truth)?,
            victim_acc: accuracy(&preds_v, &truth)?,
            fidelity: fidelity(&preds_a, &preds_v)?,
            n_test: split.test_ids.len(),
            frac_bound_holds,
            max_delta,
            lemma,
        });
    }
    Ok(ScenarioReport {
        rows,
        query_count: query_records.len() as u64,
        attacker_param_count: attacker.param_count(),
        victim_param_count: victim.param_count(),
        attacker_wall_seconds: 0.0,
        victim_wall_seconds: 0.0,
    })
}

/// Highest class frequency; chance-level baseline for zero-shot accuracy.
pub fn majority_class_rate(labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let k = labels.iter().max().unwrap() + 1;
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    *counts.iter().max().unwrap() as f64 / labels.len() as f64
}
