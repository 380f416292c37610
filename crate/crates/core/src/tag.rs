//! Text-attributed graphs: synthetic corpus generation, node splits,
//! subgraph extraction, random-walk positional encodings, and adjacency
//! normalization.
//!
//! Graphs are generated by a planted-partition process with an explicit
//! homophily knob: labels are sampled uniformly, then each node pair is
//! connected with probability `p_in` (same class) or `p_out` (different
//! class), calibrated so the expected edge density and the expected edge
//! homophily match the config. Node texts are templated over a per-class
//! topic vocabulary; summaries append topic words of sampled neighbors.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;
use crate::text::FrozenTextEncoder;

#[derive(Debug, Clone)]
pub struct TextAttributedGraph {
    pub graph_id: String,
    pub domain: String,
    pub node_count: usize,
    /// Sorted edge list with u < v; symmetric, no self-loops.
    pub edges: Vec<(usize, usize)>,
    pub texts: Vec<String>,
    /// n x d_in dense features; empty (n x 0) until attached from the text
    /// encoder.
    pub features: Tensor,
    pub labels: Vec<usize>,
    pub label_sentences: Vec<String>,
}

impl TextAttributedGraph {
    pub fn class_count(&self) -> usize {
        self.label_sentences.len()
    }

    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        adj
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.class_count();
        if k < 2 {
            return Err(Error::Config(format!(
                "{}: needs at least 2 classes",
                self.graph_id
            )));
        }
        if self.texts.len() != self.node_count || self.labels.len() != self.node_count {
            return Err(Error::Config(format!(
                "{}: texts/labels length != node count",
                self.graph_id
            )));
        }
        let mut seen = HashSet::new();
        for &(u, v) in &self.edges {
            if u >= v {
                return Err(Error::Config(format!(
                    "{}: edge ({u},{v}) not in u < v form",
                    self.graph_id
                )));
            }
            if v >= self.node_count {
                return Err(Error::Config(format!(
                    "{}: edge endpoint {v} out of range",
                    self.graph_id
                )));
            }
            if !seen.insert((u, v)) {
                return Err(Error::Config(format!(
                    "{}: duplicate edge ({u},{v})",
                    self.graph_id
                )));
            }
        }
        for (i, t) in self.texts.iter().enumerate() {
            if t.trim().is_empty() {
                return Err(Error::Config(format!("{}: node {i} has empty text", self.graph_id)));
            }
        }
        for (i, &l) in self.labels.iter().enumerate() {
            if l >= k {
                return Err(Error::Config(format!(
                    "{}: node {i} label {l} >= K={k}",
                    self.graph_id
                )));
            }
        }
        Ok(())
    }

    /// Fill `features` with the text encoder's embedding of each node text.
    pub fn attach_features(&mut self, encoder: &FrozenTextEncoder) -> Result<()> {
        let d = encoder.embed_dim();
        let mut data = Vec::with_capacity(self.node_count * d);
        for t in &self.texts {
            data.extend(encoder.embed_text(t)?);
        }
        self.features = Tensor::new(self.node_count, d, data);
        Ok(())
    }

    /// Fraction of edges joining same-class endpoints.
    pub fn edge_homophily(&self) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        let same = self
            .edges
            .iter()
            .filter(|&&(u, v)| self.labels[u] == self.labels[v])
            .count();
        same as f64 / self.edges.len() as f64
    }
}

/// Induced subgraph around a center node, with node features and
/// random-walk positional encodings.
#[derive(Debug, Clone)]
pub struct Subgraph {
    /// Center node id in the parent graph.
    pub center: usize,
    /// Parent node ids, in extraction order; local index i maps to node_ids[i].
    pub node_ids: Vec<usize>,
    /// |V_sub| x d_in.
    pub features: Tensor,
    /// Local-index edges, u < v.
    pub edges: Vec<(usize, usize)>,
    /// |V_sub| x r random-walk return probabilities; n x 0 until computed.
    pub positional: Tensor,
}

impl Subgraph {
    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    fn induce(graph: &TextAttributedGraph, center: usize, node_ids: Vec<usize>) -> Self {
        let n = node_ids.len();
        let local: BTreeMap<usize, usize> =
            node_ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut edges = Vec::new();
        for &(u, v) in &graph.edges {
            if let (Some(&lu), Some(&lv)) = (local.get(&u), local.get(&v)) {
                let (a, b) = if lu < lv { (lu, lv) } else { (lv, lu) };
                edges.push((a, b));
            }
        }
        edges.sort_unstable();
        let d = graph.features.cols;
        let mut data = Vec::with_capacity(n * d);
        for &v in &node_ids {
            data.extend_from_slice(graph.features.row(v));
        }
        Subgraph {
            center,
            node_ids,
            features: Tensor::new(n, d, data),
            edges,
            positional: Tensor::zeros(n, 0),
        }
    }

    pub fn local_adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count()];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        adj
    }

    /// Encoder input: features with positional columns concatenated.
    pub fn input_matrix(&self) -> Tensor {
        let n = self.node_count();
        let (df, dp) = (self.features.cols, self.positional.cols);
        let mut out = Tensor::zeros(n, df + dp);
        for i in 0..n {
            for j in 0..df {
                out.set(i, j, self.features.get(i, j));
            }
            for j in 0..dp {
                out.set(i, df + j, self.positional.get(i, j));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSplit {
    pub train_ids: Vec<usize>,
    pub val_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
}

/// 60/10/30 split with floor rule; train takes the remainder.
pub fn split_nodes(graph: &TextAttributedGraph, seed: u64) -> Result<NodeSplit> {
    let n = graph.node_count;
    if n < 10 {
        return Err(Error::TooSmall(format!("split needs n >= 10, got {n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = Rng::new(seed).split_str(&format!("split/{}", graph.graph_id));
    rng.shuffle(&mut perm);
    let n_val = n / 10;
    let n_test = (3 * n) / 10;
    let n_train = n - n_val - n_test;
    let mut train_ids: Vec<usize> = perm[..n_train].to_vec();
    let mut val_ids: Vec<usize> = perm[n_train..n_train + n_val].to_vec();
    let mut test_ids: Vec<usize> = perm[n_train + n_val..].to_vec();
    train_ids.sort_unstable();
    val_ids.sort_unstable();
    test_ids.sort_unstable();
    Ok(NodeSplit {
        train_ids,
        val_ids,
        test_ids,
    })
}

/// BFS out to depth k; over `max_nodes`, keep lowest-depth nodes first,
/// ties broken by ascending node id.
pub fn extract_khop_subgraph(
    graph: &TextAttributedGraph,
    v: usize,
    k: usize,
    max_nodes: usize,
) -> Result<Subgraph> {
    if v >= graph.node_count {
        return Err(Error::Contract(format!("center {v} out of range")));
    }
    if max_nodes == 0 {
        return Err(Error::Contract("max_nodes must be >= 1".into()));
    }
    let adj = graph.adjacency_lists();
    let mut depth = vec![usize::MAX; graph.node_count];
    depth[v] = 0;
    let mut queue = VecDeque::from([v]);
    let mut reached: Vec<(usize, usize)> = vec![(0, v)];
    while let Some(u) = queue.pop_front() {
        if depth[u] == k {
            continue;
        }
        for &w in &adj[u] {
            if depth[w] == usize::MAX {
                depth[w] = depth[u] + 1;
                reached.push((depth[w], w));
                queue.push_back(w);
            }
        }
    }
    reached.sort_unstable();
    reached.truncate(max_nodes);
    let node_ids: Vec<usize> = reached.into_iter().map(|(_, id)| id).collect();
    Ok(Subgraph::induce(graph, v, node_ids))
}

/// Union of nodes visited by `n_walks` random walks with restart from `v`.
pub fn sample_rw_subgraph(
    graph: &TextAttributedGraph,
    v: usize,
    walk_len: usize,
    n_walks: usize,
    restart_p: f64,
    seed: u64,
) -> Result<Subgraph> {
    if walk_len < 1 || n_walks < 1 {
        return Err(Error::Contract("walk_len and n_walks must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&restart_p) {
        return Err(Error::Contract(format!("restart_p {restart_p} not in [0,1)")));
    }
    let adj = graph.adjacency_lists();
    let mut rng = Rng::new(seed).split_str(&format!("rw/{}/{}", graph.graph_id, v));
    let mut visited: HashSet<usize> = HashSet::from([v]);
    for _ in 0..n_walks {
        let mut cur = v;
        for _ in 0..walk_len {
            if restart_p > 0.0 && rng.next_f64() < restart_p {
                cur = v;
                continue;
            }
            if adj[cur].is_empty() {
                break;
            }
            cur = adj[cur][rng.next_below(adj[cur].len())];
            visited.insert(cur);
        }
    }
    let mut node_ids: Vec<usize> = visited.into_iter().collect();
    node_ids.sort_unstable();
    Ok(Subgraph::induce(graph, v, node_ids))
}

/// RW-PE: column t (1-based) holds the diagonal of (D^-1 A_local)^t, the
/// probability of returning to the start node after t steps. Isolated nodes
/// get all-zero rows.
pub fn compute_positional_encodings(sub: &Subgraph, r: usize) -> Result<Tensor> {
    if r < 1 {
        return Err(Error::Contract("r must be >= 1".into()));
    }
    let n = sub.node_count();
    let adj = sub.local_adjacency_lists();
    let mut trans = Tensor::zeros(n, n);
    for (u, nbrs) in adj.iter().enumerate() {
        if nbrs.is_empty() {
            continue;
        }
        let p = 1.0 / nbrs.len() as f64;
        for &w in nbrs {
            trans.set(u, w, p);
        }
    }
    let mut pe = Tensor::zeros(n, r);
    let mut power = trans.clone();
    for t in 0..r {
        for i in 0..n {
            pe.set(i, t, power.get(i, i));
        }
        if t + 1 < r {
            power = dense_matmul(&power, &trans);
        }
    }
    Ok(pe)
}

fn dense_matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut out = Tensor::zeros(m, n);
    for i in 0..m {
        for p in 0..k {
            let av = a.get(i, p);
            if av == 0.0 {
                continue;
            }
            for j in 0..n {
                out.set(i, j, out.get(i, j) + av * b.get(p, j));
            }
        }
    }
    out
}

/// Symmetric GCN normalization with self-loops:
/// A~ = D~^{-1/2} (A + I) D~^{-1/2}.
pub fn normalize_adjacency(n: usize, edges: &[(usize, usize)]) -> Tensor {
    let mut deg = vec![1.0f64; n]; // self-loop
    for &(u, v) in edges {
        deg[u] += 1.0;
        deg[v] += 1.0;
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut out = Tensor::zeros(n, n);
    for i in 0..n {
        out.set(i, i, inv_sqrt[i] * inv_sqrt[i]);
    }
    for &(u, v) in edges {
        let w = inv_sqrt[u] * inv_sqrt[v];
        out.set(u, v, w);
        out.set(v, u, w);
    }
    out
}

// ---------------------------------------------------------------------------
// Corpus generation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphRole {
    Pretrain,
    Eval,
    /// Non-pretraining public source graphs, used by the data-free attack.
    Extra,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSpec {
    pub node_count: usize,
    pub edge_density: f64,
    /// Probability that an edge joins same-class nodes.
    pub homophily: f64,
    /// Controls how many random noise tokens each node text carries.
    pub feature_noise: f64,
    pub role: GraphRole,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainConfig {
    pub name: String,
    pub class_count: usize,
    pub topic_vocab: Vec<String>,
    pub graphs: Vec<GraphSpec>,
    /// Disjoint vocabulary for extra (non-pretraining) graphs; falls back to
    /// `topic_vocab` when absent.
    #[serde(default)]
    pub extra_topic_vocab: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub seed: u64,
    pub domains: Vec<DomainConfig>,
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.domains.is_empty() {
            return Err(Error::Config("corpus needs at least one domain".into()));
        }
        for d in &self.domains {
            if d.class_count < 2 {
                return Err(Error::Config(format!(
                    "domain '{}': class_count must be >= 2",
                    d.name
                )));
            }
            if d.topic_vocab.len() < d.class_count {
                return Err(Error::Config(format!(
                    "domain '{}': topic_vocab smaller than class_count",
                    d.name
                )));
            }
            for (i, g) in d.graphs.iter().enumerate() {
                if !(0.0..=1.0).contains(&g.homophily) {
                    return Err(Error::Config(format!(
                        "domain '{}' graph {i}: homophily {} not in [0,1]",
                        d.name, g.homophily
                    )));
                }
                if g.node_count < d.class_count {
                    return Err(Error::Config(format!(
                        "domain '{}' graph {i}: node_count {} < class_count {}",
                        d.name, g.node_count, d.class_count
                    )));
                }
                if !(0.0..=1.0).contains(&g.edge_density) {
                    return Err(Error::Config(format!(
                        "domain '{}' graph {i}: edge_density {} not in [0,1]",
                        d.name, g.edge_density
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub pretrain: Vec<TextAttributedGraph>,
    pub eval: Vec<TextAttributedGraph>,
    pub extra: Vec<TextAttributedGraph>,
    /// Per-node summary strings by graph id (pretrain and extra graphs).
    pub summaries: BTreeMap<String, Vec<String>>,
}

impl Corpus {
    pub fn all_graphs(&self) -> impl Iterator<Item = &TextAttributedGraph> {
        self.pretrain.iter().chain(self.eval.iter()).chain(self.extra.iter())
    }

    pub fn find_graph(&self, graph_id: &str) -> Option<&TextAttributedGraph> {
        self.all_graphs().find(|g| g.graph_id == graph_id)
    }

    pub fn attach_features(&mut self, encoder: &FrozenTextEncoder) -> Result<()> {
        for g in self
            .pretrain
            .iter_mut()
            .chain(self.eval.iter_mut())
            .chain(self.extra.iter_mut())
        {
            g.attach_features(encoder)?;
        }
        Ok(())
    }
}

/// Topic words assigned to class `c`: round-robin chunk of the vocabulary.
fn class_topics(vocab: &[String], class_count: usize, c: usize) -> Vec<&str> {
    vocab
        .iter()
        .enumerate()
        .filter(|(i, _)| i % class_count == c)
        .map(|(_, w)| w.as_str())
        .collect()
}

fn label_sentence(domain: &str, topics: &[&str]) -> String {
    format!("a {domain} item about {}", topics.join(" "))
}

fn generate_graph(
    domain: &DomainConfig,
    spec: &GraphSpec,
    graph_id: &str,
    vocab: &[String],
    rng: &mut Rng,
) -> Result<TextAttributedGraph> {
    let n = spec.node_count;
    let k = domain.class_count;
    let labels: Vec<usize> = (0..n).map(|_| rng.next_below(k)).collect();

    // Calibrate p_in / p_out against the actual same/different pair counts.
    let mut same_pairs = 0u64;
    let total_pairs = (n as u64) * (n as u64 - 1) / 2;
    for u in 0..n {
        for v in (u + 1)..n {
            if labels[u] == labels[v] {
                same_pairs += 1;
            }
        }
    }
    let diff_pairs = total_pairs - same_pairs;
    let target_edges = spec.edge_density * total_pairs as f64;
    let p_in = if same_pairs == 0 {
        0.0
    } else {
        spec.homophily * target_edges / same_pairs as f64
    };
    let p_out = if diff_pairs == 0 {
        0.0
    } else {
        (1.0 - spec.homophily) * target_edges / diff_pairs as f64
    };
    if p_in > 1.0 || p_out > 1.0 {
        return Err(Error::Config(format!(
            "{graph_id}: density {} with homophily {} is unsatisfiable (p_in={p_in:.3}, p_out={p_out:.3})",
            spec.edge_density, spec.homophily
        )));
    }
    if spec.homophily > 0.0 && same_pairs == 0 {
        return Err(Error::Config(format!(
            "{graph_id}: homophily {} requested but no same-class pairs exist",
            spec.homophily
        )));
    }

    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            if p > 0.0 && rng.next_f64() < p {
                edges.push((u, v));
            }
        }
    }

    let n_noise = (spec.feature_noise * 4.0).round().max(0.0) as usize;
    let mut texts = Vec::with_capacity(n);
    for &label in &labels {
        let topics = class_topics(vocab, k, label);
        let mut text = format!("a {} item about {}", domain.name, topics.join(" "));
        for _ in 0..n_noise {
            text.push_str(&format!(" noise{}", rng.next_below(1000)));
        }
        texts.push(text);
    }

    let label_sentences: Vec<String> = (0..k)
        .map(|c| label_sentence(&domain.name, &class_topics(vocab, k, c)))
        .collect();

    let graph = TextAttributedGraph {
        graph_id: graph_id.to_string(),
        domain: domain.name.clone(),
        node_count: n,
        edges,
        texts,
        features: Tensor::zeros(n, 0),
        labels,
        label_sentences,
    };
    graph.validate()?;
    Ok(graph)
}

fn make_summaries(graph: &TextAttributedGraph, vocab: &[String], rng: &mut Rng) -> Vec<String> {
    let adj = graph.adjacency_lists();
    let k = graph.class_count();
    (0..graph.node_count)
        .map(|v| {
            let mut s = graph.texts[v].clone();
            let nbrs = &adj[v];
            if !nbrs.is_empty() {
                let take = nbrs.len().min(3);
                let picks = rng.sample_indices(nbrs.len(), take);
                let mut words = Vec::new();
                for &pi in &picks {
                    let u = nbrs[pi];
                    words.extend(class_topics(vocab, k, graph.labels[u]));
                }
                s.push_str(&format!(" with neighbors about {}", words.join(" ")));
            }
            s
        })
        .collect()
}

/// Deterministic synthetic multi-domain corpus. Features are attached later
/// from the text encoder.
pub fn generate_corpus(config: &CorpusConfig) -> Result<Corpus> {
    config.validate()?;
    let root = Rng::new(config.seed).split_str("corpus");
    let mut corpus = Corpus::default();
    for domain in &config.domains {
        let mut counters: BTreeMap<&'static str, usize> = BTreeMap::new();
        for spec in &domain.graphs {
            let role_name = match spec.role {
                GraphRole::Pretrain => "pretrain",
                GraphRole::Eval => "eval",
                GraphRole::Extra => "extra",
            };
            let idx = counters.entry(role_name).or_insert(0);
            let graph_id = format!("{}-{}-{}", domain.name, role_name, idx);
            *idx += 1;

            let vocab: &[String] = match spec.role {
                GraphRole::Extra => domain
                    .extra_topic_vocab
                    .as_deref()
                    .unwrap_or(&domain.topic_vocab),
                _ => &domain.topic_vocab,
            };
            let mut grng = root.split_str(&format!("graph/{graph_id}"));
            let graph = generate_graph(domain, spec, &graph_id, vocab, &mut grng)?;
            if matches!(spec.role, GraphRole::Pretrain | GraphRole::Extra) {
                let mut srng = root.split_str(&format!("summaries/{graph_id}"));
                corpus
                    .summaries
                    .insert(graph_id.clone(), make_summaries(&graph, vocab, &mut srng));
            }
            match spec.role {
                GraphRole::Pretrain => corpus.pretrain.push(graph),
                GraphRole::Eval => corpus.eval.push(graph),
                GraphRole::Extra => corpus.extra.push(graph),
            }
        }
    }
    // id order matches what load_corpus produces from a directory walk, so
    // in-memory and round-tripped corpora drive identical training batches
    for bucket in [&mut corpus.pretrain, &mut corpus.eval, &mut corpus.extra] {
        bucket.sort_by(|a, b| a.graph_id.cmp(&b.graph_id));
    }
    Ok(corpus)
}

// ---------------------------------------------------------------------------
// Subgraph sampler configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMode {
    Khop,
    RandomWalk,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SamplerConfig {
    pub mode: SamplerMode,
    pub k: usize,
    pub max_nodes: usize,
    pub walk_len: usize,
    pub n_walks: usize,
    pub restart_p: f64,
    /// Positional-encoding depth r.
    pub pe_dim: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            mode: SamplerMode::Khop,
            k: 2,
            max_nodes: 32,
            walk_len: 16,
            n_walks: 4,
            restart_p: 0.2,
            pe_dim: 4,
            seed: 0,
        }
    }
}

/// Extract a subgraph around `v` per the sampler config, with positional
/// encodings attached.
pub fn sample_subgraph(
    graph: &TextAttributedGraph,
    v: usize,
    cfg: &SamplerConfig,
) -> Result<Subgraph> {
    let mut sub = match cfg.mode {
        SamplerMode::Khop => extract_khop_subgraph(graph, v, cfg.k, cfg.max_nodes)?,
        SamplerMode::RandomWalk => {
            sample_rw_subgraph(graph, v, cfg.walk_len, cfg.n_walks, cfg.restart_p, cfg.seed)?
        }
    };
    sub.positional = compute_positional_encodings(&sub, cfg.pe_dim)?;
    Ok(sub)
}

// ---------------------------------------------------------------------------
// On-disk graph format
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct GraphJson {
    graph_id: String,
    domain: String,
    n: usize,
    edges: Vec<(usize, usize)>,
    texts: Vec<String>,
    labels: Vec<usize>,
    label_sentences: Vec<String>,
}

pub fn graph_to_json(graph: &TextAttributedGraph) -> Result<String> {
    let j = GraphJson {
        graph_id: graph.graph_id.clone(),
        domain: graph.domain.clone(),
        n: graph.node_count,
        edges: graph.edges.clone(),
        texts: graph.texts.clone(),
        labels: graph.labels.clone(),
        label_sentences: graph.label_sentences.clone(),
    };
    Ok(serde_json::to_string_pretty(&j)?)
}

pub fn graph_from_json(json: &str) -> Result<TextAttributedGraph> {
    let j: GraphJson = serde_json::from_str(json)?;
    let g = TextAttributedGraph {
        graph_id: j.graph_id,
        domain: j.domain,
        node_count: j.n,
        edges: j.edges,
        texts: j.texts,
        features: Tensor::zeros(j.n, 0),
        labels: j.labels,
        label_sentences: j.label_sentences,
    };
    g.validate()?;
    Ok(g)
}

/// Write `pretrain/<domain>/<id>.json`, `eval/...`, `extra/...`, and
/// `summaries/<id>.json` under `dir`.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<()> {
    for (role, graphs) in [
        ("pretrain", &corpus.pretrain),
        ("eval", &corpus.eval),
        ("extra", &corpus.extra),
    ] {
        for g in graphs {
            let sub = dir.join(role).join(&g.domain);
            std::fs::create_dir_all(&sub)?;
            std::fs::write(sub.join(format!("{}.json", g.graph_id)), graph_to_json(g)?)?;
        }
    }
    let sdir = dir.join("summaries");
    std::fs::create_dir_all(&sdir)?;
    for (gid, lines) in &corpus.summaries {
        std::fs::write(
            sdir.join(format!("{gid}.json")),
            serde_json::to_string_pretty(lines)?,
        )?;
    }
    Ok(())
}

pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    for (role, bucket) in [("pretrain", 0usize), ("eval", 1), ("extra", 2)] {
        let rdir = dir.join(role);
        if !rdir.exists() {
            continue;
        }
        let mut paths = Vec::new();
        for domain_entry in std::fs::read_dir(&rdir)? {
            let ddir = domain_entry?.path();
            if !ddir.is_dir() {
                continue;
            }
            for f in std::fs::read_dir(&ddir)? {
                let p = f?.path();
                if p.extension().is_some_and(|e| e == "json") {
                    paths.push(p);
                }
            }
        }
        paths.sort();
        for p in paths {
            let g = graph_from_json(&std::fs::read_to_string(&p)?)?;
            match bucket {
                0 => corpus.pretrain.push(g),
                1 => corpus.eval.push(g),
                _ => corpus.extra.push(g),
            }
        }
    }
    let sdir = dir.join("summaries");
    if sdir.exists() {
        let mut paths: Vec<_> = std::fs::read_dir(&sdir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        paths.sort();
        for p in paths {
            let gid = p
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::MissingData(format!("bad summary file {}", p.display())))?
                .to_string();
            let lines: Vec<String> = serde_json::from_str(&std::fs::read_to_string(&p)?)?;
            corpus.summaries.insert(gid, lines);
        }
    }
    Ok(corpus)
}

// ---------------------------------------------------------------------------

/// Small helper for hand-built test graphs.
pub fn graph_from_edges(
    graph_id: &str,
    n: usize,
    edges: &[(usize, usize)],
    d_in: usize,
) -> TextAttributedGraph {
    TextAttributedGraph {
        graph_id: graph_id.to_string(),
        domain: "test".to_string(),
        node_count: n,
        edges: edges.to_vec(),
        texts: (0..n).map(|i| format!("node {i}")).collect(),
        features: Tensor::zeros(n, d_in),
        labels: vec![0; n],
        label_sentences: vec!["class a".to_string(), "class b".to_string()],
    }
}
