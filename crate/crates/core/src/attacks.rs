//! The six extraction scenarios as configurable pipelines over the victim's
//! query API: full-model, domain-specific, budget-constrained,
//! graph-specific, synthetic-graph (feature synthesis from a partially
//! visible graph), and data-free (queries built from non-pretraining
//! graphs).
//!
//! Everything here sees the victim only through `VictimHandle::query`; the
//! evaluation harness, not this module, gets direct victim access.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::encoder::{Encoder, EncoderConfig};
use crate::error::{Error, Result};
use crate::eval::{evaluate_pair, ScenarioReport};
use crate::rng::Rng;
use crate::tag::{
    sample_subgraph, split_nodes, Corpus, SamplerConfig, TextAttributedGraph,
};
use crate::tensor::Tensor;
use crate::text::FrozenTextEncoder;
use crate::train::{train_attacker, TrainConfig, TrainLog};
use crate::victim::{QueryRecord, VictimHandle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    FullModel,
    DomainSpecific,
    BudgetConstrained,
    GraphSpecific,
    SyntheticGraphs,
    DataFree,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub kind: AttackKind,
    /// Graph-id selectors; empty means the kind's natural default sources.
    #[serde(default)]
    pub query_sources: Vec<String>,
    #[serde(default)]
    pub target_domain: Option<String>,
    #[serde(default)]
    pub budget: Option<u64>,
    /// Per-source budget fractions; uniform when absent.
    #[serde(default)]
    pub mix_weights: Option<Vec<f64>>,
    /// Fraction of nodes whose features the synthetic-graph attacker knows.
    #[serde(default)]
    pub visibility_fraction: Option<f64>,
    /// 1-hop vs 2-hop mixing weight for feature synthesis.
    #[serde(default)]
    pub alpha: Option<f64>,
    pub attacker_config: EncoderConfig,
    pub train_config: TrainConfig,
    pub sampler: SamplerConfig,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            AttackKind::BudgetConstrained => {
                if self.budget.is_none() {
                    return Err(Error::Config("budget_constrained requires a budget".into()));
                }
            }
            AttackKind::SyntheticGraphs => {
                let vis = self.visibility_fraction.ok_or_else(|| {
                    Error::Config("synthetic_graphs requires visibility_fraction".into())
                })?;
                if !(vis > 0.0 && vis <= 1.0) {
                    return Err(Error::Config(format!(
                        "visibility_fraction {vis} not in (0, 1]"
                    )));
                }
                let alpha = self
                    .alpha
                    .ok_or_else(|| Error::Config("synthetic_graphs requires alpha".into()))?;
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(Error::Config(format!("alpha {alpha} not in [0, 1]")));
                }
            }
            AttackKind::DomainSpecific => {
                if self.target_domain.is_none() {
                    return Err(Error::Config("domain_specific requires target_domain".into()));
                }
            }
            AttackKind::GraphSpecific => {
                if self.query_sources.len() != 1 {
                    return Err(Error::Config(
                        "graph_specific requires exactly one source graph".into(),
                    ));
                }
            }
            _ => {}
        }
        if let Some(w) = &self.mix_weights {
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("mix_weights sum to {sum}, expected 1")));
            }
            if w.iter().any(|&x| x < 0.0) {
                return Err(Error::Config("mix_weights must be non-negative".into()));
            }
        }
        Ok(())
    }
}

/// Paper-style default epoch counts per scenario; budget-constrained runs
/// get more epochs at smaller budgets.
pub fn default_epochs(kind: AttackKind, budget: Option<u64>) -> usize {
    match kind {
        AttackKind::FullModel => 2,
        AttackKind::DomainSpecific => 8,
        AttackKind::BudgetConstrained => match budget.unwrap_or(1000) {
            0..=100 => 200,
            101..=250 => 120,
            251..=500 => 60,
            _ => 30,
        },
        AttackKind::GraphSpecific => 60,
        AttackKind::SyntheticGraphs => 2,
        AttackKind::DataFree => 4,
    }
}

/// Floor-allocate `budget` over `weights`; any remainder goes to the last
/// source.
pub fn allocate_mixed(budget: u64, weights: &[f64]) -> Vec<u64> {
    let mut counts: Vec<u64> = weights.iter().map(|w| (budget as f64 * w).floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    if let Some(last) = counts.last_mut() {
        *last += budget - assigned;
    }
    counts
}

/// A partially visible graph: the attacker knows features only for the
/// nodes it controls, plus edge structure out to 2 hops around them.
#[derive(Debug, Clone)]
pub struct PartialGraphView {
    pub graph_id: String,
    pub visible_ids: BTreeSet<usize>,
    pub visible_features: BTreeMap<usize, Vec<f64>>,
    pub known_edges: Vec<(usize, usize)>,
}

impl PartialGraphView {
    pub fn build(graph: &TextAttributedGraph, visible_ids: BTreeSet<usize>) -> Self {
        let adj = graph.adjacency_lists();
        // nodes within 2 hops of any visible node
        let mut within: BTreeSet<usize> = visible_ids.clone();
        for &v in &visible_ids {
            for &u in &adj[v] {
                within.insert(u);
                for &w in &adj[u] {
                    within.insert(w);
                }
            }
        }
        let known_edges: Vec<(usize, usize)> = graph
            .edges
            .iter()
            .copied()
            .filter(|&(u, v)| within.contains(&u) && within.contains(&v))
            .collect();
        let visible_features = visible_ids
            .iter()
            .map(|&v| (v, graph.features.row(v).to_vec()))
            .collect();
        PartialGraphView {
            graph_id: graph.graph_id.clone(),
            visible_ids,
            visible_features,
            known_edges,
        }
    }

    fn adjacency(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(u, v) in &self.known_edges {
            adj.entry(u).or_default().push(v);
            adj.entry(v).or_default().push(u);
        }
        adj
    }
}

/// Impute a hidden node's features from the means of its visible 1-hop and
/// 2-hop neighbors: alpha * mean_1hop + (1 - alpha) * mean_2hop. An empty
/// hop set's weight is reassigned to the other.
pub fn synthesize_attributes(
    view: &PartialGraphView,
    target: usize,
    alpha: f64,
) -> Result<Vec<f64>> {
    let adj = view.adjacency();
    let empty = Vec::new();
    let hop1: Vec<usize> = adj
        .get(&target)
        .unwrap_or(&empty)
        .iter()
        .copied()
        .filter(|u| view.visible_ids.contains(u))
        .collect();
    let mut hop2_set = BTreeSet::new();
    for u in adj.get(&target).unwrap_or(&empty) {
        for &w in adj.get(u).unwrap_or(&empty) {
            if w != target && !adj.get(&target).unwrap_or(&empty).contains(&w) {
                hop2_set.insert(w);
            }
        }
    }
    let hop2: Vec<usize> = hop2_set
        .into_iter()
        .filter(|u| view.visible_ids.contains(u))
        .collect();

    let mean_of = |ids: &[usize]| -> Option<Vec<f64>> {
        if ids.is_empty() {
            return None;
        }
        let d = view.visible_features[&ids[0]].len();
        let mut m = vec![0.0; d];
        for &u in ids {
            for (j, &x) in view.visible_features[&u].iter().enumerate() {
                m[j] += x;
            }
        }
        for x in &mut m {
            *x /= ids.len() as f64;
        }
        Some(m)
    };

    match (mean_of(&hop1), mean_of(&hop2)) {
        (Some(m1), Some(m2)) => Ok(m1
            .iter()
            .zip(&m2)
            .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
            .collect()),
        (Some(m1), None) => Ok(m1),
        (None, Some(m2)) => Ok(m2),
        (None, None) => Err(Error::Unsynthesizable(target)),
    }
}

/// One synthetic query graph assembled from a partial view: visible nodes
/// keep real features, hidden nodes within 2 hops get imputed features,
/// unreachable nodes are dropped.
#[derive(Debug, Clone)]
pub struct SyntheticQueryGraph {
    pub graph: TextAttributedGraph,
    /// Local ids of the query centers (visible training-split nodes).
    pub centers: Vec<usize>,
    pub view: PartialGraphView,
    /// Nodes dropped because no visible neighbor exists within 2 hops.
    pub skipped_nodes: usize,
    /// Fraction of originally hidden nodes that could be imputed.
    pub synthesized_fraction: f64,
}

/// Assemble synthetic query graphs for every pretrain graph. Visible sets
/// are sampled over all nodes; query centers are the visible nodes that lie
/// in the training split, so full visibility reproduces the full-model
/// attack's query set exactly.
pub fn build_synthetic_query_graphs(
    corpus: &Corpus,
    visibility_fraction: f64,
    alpha: f64,
    split_seed: u64,
    seed: u64,
) -> Result<Vec<SyntheticQueryGraph>> {
    let root = Rng::new(seed).split_str("synthetic-visibility");
    let mut out = Vec::new();
    // same source ordering as the direct query-set builder
    let mut sources: Vec<&TextAttributedGraph> = corpus.pretrain.iter().collect();
    sources.sort_by(|a, b| a.graph_id.cmp(&b.graph_id));
    for g in sources {
        let n = g.node_count;
        let n_visible = ((visibility_fraction * n as f64).round() as usize).clamp(1, n);
        let visible: BTreeSet<usize> = {
            let mut rng = root.split_str(&g.graph_id);
            rng.sample_indices(n, n_visible).into_iter().collect()
        };
        let view = PartialGraphView::build(g, visible.clone());

        // impute every hidden node that has a visible neighbor within 2 hops
        let mut kept: Vec<usize> = Vec::new();
        let mut features: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        let mut skipped = 0;
        let mut hidden_total = 0;
        let mut hidden_filled = 0;
        for v in 0..n {
            if visible.contains(&v) {
                kept.push(v);
                features.insert(v, g.features.row(v).to_vec());
                continue;
            }
            hidden_total += 1;
            match synthesize_attributes(&view, v, alpha) {
                Ok(f) => {
                    kept.push(v);
                    features.insert(v, f);
                    hidden_filled += 1;
                }
                Err(Error::Unsynthesizable(_)) => skipped += 1,
                Err(e) => return Err(e),
            }
        }

        // compact to local ids, ascending original order
        let local: BTreeMap<usize, usize> = kept.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut feat = Tensor::zeros(kept.len(), g.features.cols);
        for (&v, &i) in &local {
            for (j, &x) in features[&v].iter().enumerate() {
                feat.set(i, j, x);
            }
        }
        let edges: Vec<(usize, usize)> = g
            .edges
            .iter()
            .filter_map(|&(u, v)| match (local.get(&u), local.get(&v)) {
                (Some(&lu), Some(&lv)) => Some(if lu < lv { (lu, lv) } else { (lv, lu) }),
                _ => None,
            })
            .collect();
        let synthetic = TextAttributedGraph {
            graph_id: format!("{}-synthetic", g.graph_id),
            domain: g.domain.clone(),
            node_count: kept.len(),
            edges,
            texts: kept.iter().map(|&v| g.texts[v].clone()).collect(),
            features: feat,
            labels: kept.iter().map(|&v| g.labels[v]).collect(),
            label_sentences: g.label_sentences.clone(),
        };

        let split = split_nodes(g, split_seed)?;
        let train_set: BTreeSet<usize> = split.train_ids.iter().copied().collect();
        let centers: Vec<usize> = kept
            .iter()
            .filter(|v| visible.contains(v) && train_set.contains(v))
            .map(|v| local[v])
            .collect();
        out.push(SyntheticQueryGraph {
            graph: synthetic,
            centers,
            view,
            skipped_nodes: skipped,
            synthesized_fraction: if hidden_total == 0 {
                1.0
            } else {
                hidden_filled as f64 / hidden_total as f64
            },
        });
    }
    Ok(out)
}

fn source_graphs<'a>(config: &ScenarioConfig, corpus: &'a Corpus) -> Result<Vec<&'a TextAttributedGraph>> {
    let pool: Vec<&TextAttributedGraph> = match config.kind {
        AttackKind::DataFree => corpus.extra.iter().collect(),
        AttackKind::GraphSpecific => corpus.all_graphs().collect(),
        _ => corpus.pretrain.iter().collect(),
    };
    let mut selected: Vec<&TextAttributedGraph> = if config.query_sources.is_empty() {
        match config.kind {
            AttackKind::DomainSpecific => {
                let dom = config.target_domain.as_deref().unwrap_or_default();
                pool.into_iter().filter(|g| g.domain == dom).collect()
            }
            _ => pool,
        }
    } else {
        let mut picked = Vec::new();
        for id in &config.query_sources {
            let g = pool
                .iter()
                .find(|g| &g.graph_id == id)
                .ok_or_else(|| Error::Config(format!("unknown source graph '{id}'")))?;
            picked.push(*g);
        }
        picked
    };
    selected.sort_by(|a, b| a.graph_id.cmp(&b.graph_id));
    if selected.is_empty() {
        return Err(Error::Config("no source graphs match the scenario".into()));
    }
    Ok(selected)
}

/// Query the victim once per chosen center. Centers are every training-split
/// node of each source, or a seeded budget-limited sample; records are
/// ordered by (graph id, center id).
pub fn build_query_set(
    config: &ScenarioConfig,
    corpus: &Corpus,
    handle: &mut VictimHandle,
) -> Result<Vec<QueryRecord>> {
    config.validate()?;
    let sources = source_graphs(config, corpus)?;
    let mut chosen: Vec<(&TextAttributedGraph, Vec<usize>)> = Vec::new();
    match config.budget {
        None => {
            for g in sources {
                let split = split_nodes(g, config.seed)?;
                chosen.push((g, split.train_ids.clone()));
            }
        }
        Some(b) => {
            let weights: Vec<f64> = match &config.mix_weights {
                Some(w) => {
                    if w.len() != sources.len() {
                        return Err(Error::Config(format!(
                            "{} mix weights for {} sources",
                            w.len(),
                            sources.len()
                        )));
                    }
                    w.clone()
                }
                None => vec![1.0 / sources.len() as f64; sources.len()],
            };
            let counts = allocate_mixed(b, &weights);
            let rng = Rng::new(config.seed).split_str("budget-sampling");
            for (g, &count) in sources.iter().zip(&counts) {
                let split = split_nodes(g, config.seed)?;
                if count as usize > split.train_ids.len() {
                    return Err(Error::Config(format!(
                        "budget share {count} exceeds {} available centers in {}",
                        split.train_ids.len(),
                        g.graph_id
                    )));
                }
                let mut grng = rng.split_str(&g.graph_id);
                let picks = grng.sample_indices(split.train_ids.len(), count as usize);
                let mut centers: Vec<usize> = picks.into_iter().map(|i| split.train_ids[i]).collect();
                centers.sort_unstable();
                chosen.push((g, centers));
            }
        }
    }

    let mut records = Vec::new();
    for (g, centers) in chosen {
        for v in centers {
            let sub = sample_subgraph(g, v, &config.sampler)?;
            records.push(handle.query(&sub)?);
        }
    }
    Ok(records)
}

fn synthetic_query_set(
    config: &ScenarioConfig,
    corpus: &Corpus,
    handle: &mut VictimHandle,
) -> Result<Vec<QueryRecord>> {
    let vis = config.visibility_fraction.unwrap();
    let alpha = config.alpha.unwrap();
    let graphs = build_synthetic_query_graphs(corpus, vis, alpha, config.seed, config.seed)?;
    let mut records = Vec::new();
    for sq in &graphs {
        for &c in &sq.centers {
            let sub = sample_subgraph(&sq.graph, c, &config.sampler)?;
            records.push(handle.query(&sub)?);
        }
    }
    Ok(records)
}

#[derive(Debug)]
pub struct ScenarioOutcome {
    pub attacker: Encoder,
    pub report: ScenarioReport,
    pub records: Vec<QueryRecord>,
    pub train_log: TrainLog,
}

/// Full pipeline: build queries per scenario kind, fit the attacker by
/// embedding regression, evaluate attacker vs victim on the eval graphs.
/// `victim_for_eval` is the experimenter's copy of the victim used only for
/// measurement, never for query construction.
pub fn run_scenario(
    config: &ScenarioConfig,
    corpus: &Corpus,
    handle: &mut VictimHandle,
    victim_for_eval: &Encoder,
    text_encoder: &FrozenTextEncoder,
) -> Result<ScenarioOutcome> {
    config.validate()?;
    let records = match config.kind {
        AttackKind::SyntheticGraphs => synthetic_query_set(config, corpus, handle)?,
        _ => build_query_set(config, corpus, handle)?,
    };
    let (attacker, train_log) = train_attacker(&records, &config.attacker_config, &config.train_config)?;

    let eval_graphs: Vec<TextAttributedGraph> = match config.kind {
        AttackKind::GraphSpecific => {
            let id = &config.query_sources[0];
            vec![corpus
                .find_graph(id)
                .ok_or_else(|| Error::Config(format!("unknown source graph '{id}'")))?
                .clone()]
        }
        _ => corpus.eval.to_vec(),
    };
    let mut report = evaluate_pair(
        &attacker,
        victim_for_eval,
        &eval_graphs,
        text_encoder,
        &config.sampler,
        &records,
        config.seed,
    )?;
    report.query_count = records.len() as u64;
    report.attacker_wall_seconds = train_log.wall_seconds;
    Ok(ScenarioOutcome {
        attacker,
        report,
        records,
        train_log,
    })
}
