//! Trainable graph encoders: GCN and GAT stacks with mean-pool readout and
//! final L2 normalization, built on the tape so the same forward code serves
//! inference and training.
//!
//! GAT attention is computed densely with a mask: scores for non-neighbors
//! (self-loops allowed) are pushed to -1e30 before the row softmax, which
//! zeroes them exactly after stabilization. Multi-head layers concatenate;
//! the final layer is a single linear head.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{fnv1a64, Rng};
use crate::tag::{normalize_adjacency, Subgraph};
use crate::tensor::{Op, Tape, Tensor, TensorId};

const MASK_NEG: f64 = -1e30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gcn,
    Gat,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EncoderConfig {
    pub family: Family,
    pub layers: usize,
    pub hidden_dim: usize,
    /// GAT heads per non-final layer; ignored for GCN. The final layer is
    /// always a single linear head so the output stays `output_dim`-wide.
    pub heads: usize,
    /// d_in + r: node features with positional columns concatenated.
    pub input_dim: usize,
    /// Must equal the text encoder dimension.
    pub output_dim: usize,
    pub init_seed: u64,
    /// Pool only the center row instead of all subgraph rows.
    #[serde(default)]
    pub pool_center_only: bool,
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers < 1 {
            return Err(Error::Config("encoder needs at least 1 layer".into()));
        }
        if self.hidden_dim < 1 || self.input_dim < 1 || self.output_dim < 1 {
            return Err(Error::Config("encoder dims must be >= 1".into()));
        }
        if matches!(self.family, Family::Gat) && self.heads < 1 {
            return Err(Error::Config("GAT needs at least 1 head".into()));
        }
        Ok(())
    }

    /// Per-layer (input_dim, output_dim, heads) triples.
    fn layer_dims(&self) -> Vec<(usize, usize, usize)> {
        let mut dims = Vec::with_capacity(self.layers);
        let mut d_in = self.input_dim;
        for l in 0..self.layers {
            let last = l + 1 == self.layers;
            let (d_out, heads) = if last {
                (self.output_dim, 1)
            } else {
                match self.family {
                    Family::Gcn => (self.hidden_dim, 1),
                    Family::Gat => (self.hidden_dim, self.heads),
                }
            };
            dims.push((d_in, d_out, heads));
            d_in = d_out * heads;
        }
        dims
    }

    /// Exact scalar parameter count in closed form.
    pub fn param_count(&self) -> usize {
        self.layer_dims()
            .iter()
            .map(|&(d_in, d_out, heads)| {
                let per_head = match self.family {
                    Family::Gcn => d_in * d_out,
                    Family::Gat => d_in * d_out + 2 * d_out,
                };
                per_head * heads
            })
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct Encoder {
    pub config: EncoderConfig,
    /// Flat parameter list; order fixed by `param_names`.
    pub params: Vec<Tensor>,
    names: Vec<String>,
}

fn glorot(rng: &mut Rng, rows: usize, cols: usize) -> Tensor {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.uniform(-limit, limit)).collect();
    Tensor::new(rows, cols, data)
}

impl Encoder {
    pub fn new(config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let mut params = Vec::new();
        let mut names = Vec::new();
        let root = Rng::new(config.init_seed).split_str("encoder-init");
        for (l, (d_in, d_out, heads)) in config.layer_dims().into_iter().enumerate() {
            for h in 0..heads {
                let mut rng = root.split_str(&format!("layer{l}/head{h}"));
                names.push(format!("layer{l}.head{h}.w"));
                params.push(glorot(&mut rng, d_in, d_out));
                if matches!(config.family, Family::Gat) {
                    names.push(format!("layer{l}.head{h}.a"));
                    params.push(glorot(&mut rng, 2 * d_out, 1));
                }
            }
        }
        Ok(Encoder { config, params, names })
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.len()).sum()
    }

    pub fn param_names(&self) -> &[String] {
        &self.names
    }

    /// FNV-1a over the little-endian bytes of every parameter, in order.
    pub fn param_hash(&self) -> u64 {
        let mut bytes = Vec::new();
        for p in &self.params {
            for v in &p.data {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        fnv1a64(&bytes)
    }

    /// Register all parameters on a tape, as gradients leaves or constants.
    pub fn leaf_params(&self, tape: &mut Tape, requires_grad: bool) -> Vec<TensorId> {
        self.params
            .iter()
            .map(|p| tape.leaf(p.clone(), requires_grad))
            .collect()
    }

    /// Forward pass on an existing tape with pre-registered parameter ids;
    /// returns a 1 x output_dim unit-norm embedding.
    pub fn forward(
        &self,
        tape: &mut Tape,
        param_ids: &[TensorId],
        sub: &Subgraph,
    ) -> Result<TensorId> {
        if sub.node_count() == 0 {
            return Err(Error::Contract("cannot encode empty subgraph".into()));
        }
        let input = sub.input_matrix();
        if input.cols != self.config.input_dim {
            return Err(Error::Dimension {
                op: "encode_subgraph",
                detail: format!(
                    "subgraph input width {} != configured input_dim {}",
                    input.cols, self.config.input_dim
                ),
            });
        }
        let n = sub.node_count();
        let mut h = tape.constant(input);
        let mut pi = 0;
        let dims = self.config.layer_dims();

        // Shared per-graph constants.
        let gcn_ahat = matches!(self.config.family, Family::Gcn)
            .then(|| tape.constant(normalize_adjacency(n, &sub.edges)));
        let gat_consts = matches!(self.config.family, Family::Gat).then(|| {
            let mut mask = Tensor::new(n, n, vec![MASK_NEG; n * n]);
            for i in 0..n {
                mask.set(i, i, 0.0);
            }
            for &(u, v) in &sub.edges {
                mask.set(u, v, 0.0);
                mask.set(v, u, 0.0);
            }
            (
                tape.constant(mask),
                tape.constant(Tensor::new(1, n, vec![1.0; n])), // row of ones
                tape.constant(Tensor::new(n, 1, vec![1.0; n])), // column of ones
            )
        });

        for (l, &(d_in, d_out, heads)) in dims.iter().enumerate() {
            let last = l + 1 == dims.len();
            let mut head_outs = Vec::with_capacity(heads);
            for _ in 0..heads {
                let out = match self.config.family {
                    Family::Gcn => {
                        let w = param_ids[pi];
                        pi += 1;
                        let ah = tape.apply(Op::MatMul, &[gcn_ahat.unwrap(), h])?;
                        tape.apply(Op::MatMul, &[ah, w])?
                    }
                    Family::Gat => {
                        let (w, a) = (param_ids[pi], param_ids[pi + 1]);
                        pi += 2;
                        let (mask, ones_row, ones_col) = gat_consts.unwrap();
                        let wh = tape.apply(Op::MatMul, &[h, w])?; // n x d_out
                        // Split a into source/destination halves via constant
                        // selector matrices.
                        let mut sel_src = Tensor::zeros(d_out, 2 * d_out);
                        let mut sel_dst = Tensor::zeros(d_out, 2 * d_out);
                        for j in 0..d_out {
                            sel_src.set(j, j, 1.0);
                            sel_dst.set(j, d_out + j, 1.0);
                        }
                        let sel_src = tape.constant(sel_src);
                        let sel_dst = tape.constant(sel_dst);
                        let a_src = tape.apply(Op::MatMul, &[sel_src, a])?; // d_out x 1
                        let a_dst = tape.apply(Op::MatMul, &[sel_dst, a])?;
                        let s_src = tape.apply(Op::MatMul, &[wh, a_src])?; // n x 1
                        let s_dst = tape.apply(Op::MatMul, &[wh, a_dst])?;
                        // e[v][u] = s_src[v] + s_dst[u]
                        let src_mat = tape.apply(Op::MatMul, &[s_src, ones_row])?;
                        let s_dst_t = tape.apply(Op::Transpose, &[s_dst])?;
                        let dst_mat = tape.apply(Op::MatMul, &[ones_col, s_dst_t])?;
                        let scores = tape.apply(Op::Add, &[src_mat, dst_mat])?;
                        let scores = tape.apply(Op::LeakyRelu(0.2), &[scores])?;
                        let masked = tape.apply(Op::Add, &[scores, mask])?;
                        let alpha = tape.apply(Op::SoftmaxRows, &[masked])?;
                        tape.apply(Op::MatMul, &[alpha, wh])?
                    }
                };
                head_outs.push(out);
            }
            let mut layer_out = head_outs[0];
            for &next in &head_outs[1..] {
                layer_out = tape.apply(Op::ConcatCols, &[layer_out, next])?;
            }
            h = if last {
                layer_out // final layer stays linear
            } else {
                tape.apply(Op::Relu, &[layer_out])?
            };
            debug_assert_eq!(tape.value(h).cols, d_out * heads);
            let _ = d_in;
        }

        let pooled = if self.config.pool_center_only {
            let center_local = sub
                .node_ids
                .iter()
                .position(|&v| v == sub.center)
                .ok_or_else(|| Error::Contract("center not in subgraph".into()))?;
            tape.apply(Op::GatherRows(vec![center_local]), &[h])?
        } else {
            tape.apply(Op::MeanRows, &[h])?
        };
        tape.apply(Op::L2NormalizeRows, &[pooled])
    }

    /// Inference convenience: unit-norm embedding on a throwaway tape.
    pub fn embed(&self, sub: &Subgraph) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let ids = self.leaf_params(&mut tape, false);
        let out = self.forward(&mut tape, &ids, sub)?;
        Ok(tape.value(out).data.clone())
    }
}

// ---------------------------------------------------------------------------
// Checkpoints: JSON header line, then a flat little-endian f64 blob.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    config: EncoderConfig,
    shapes: Vec<(usize, usize)>,
}

pub fn save_encoder(encoder: &Encoder, path: &std::path::Path) -> Result<()> {
    let header = CheckpointHeader {
        config: encoder.config.clone(),
        shapes: encoder.params.iter().map(|p| (p.rows, p.cols)).collect(),
    };
    let mut bytes = serde_json::to_string(&header)?.into_bytes();
    bytes.push(b'\n');
    for p in &encoder.params {
        for v in &p.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn load_encoder(path: &std::path::Path) -> Result<Encoder> {
    let bytes = std::fs::read(path)?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::MissingData(format!("{}: no checkpoint header", path.display())))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..nl])?;
    let mut encoder = Encoder::new(header.config)?;
    let expected: Vec<(usize, usize)> =
        encoder.params.iter().map(|p| (p.rows, p.cols)).collect();
    if expected != header.shapes {
        return Err(Error::MissingData(format!(
            "{}: checkpoint shapes do not match its config",
            path.display()
        )));
    }
    let blob = &bytes[nl + 1..];
    let total: usize = expected.iter().map(|(r, c)| r * c).sum();
    if blob.len() != total * 8 {
        return Err(Error::MissingData(format!(
            "{}: parameter blob has {} bytes, expected {}",
            path.display(),
            blob.len(),
            total * 8
        )));
    }
    let mut off = 0;
    for p in &mut encoder.params {
        for v in &mut p.data {
            *v = f64::from_le_bytes(blob[off..off + 8].try_into().unwrap());
            off += 8;
        }
        if !p.all_finite() {
            return Err(Error::DegenerateInput("non-finite checkpoint parameter".into()));
        }
    }
    Ok(encoder)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tag::{compute_positional_encodings, extract_khop_subgraph, graph_from_edges};
    use crate::tensor::gradient_check;

    fn gcn_cfg(layers: usize, hidden: usize, d_in: usize, d_out: usize, seed: u64) -> EncoderConfig {
        EncoderConfig {
            family: Family::Gcn,
            layers,
            hidden_dim: hidden,
            heads: 1,
            input_dim: d_in,
            output_dim: d_out,
            init_seed: seed,
            pool_center_only: false,
        }
    }

    fn gat_cfg(layers: usize, hidden: usize, heads: usize, d_in: usize, d_out: usize, seed: u64) -> EncoderConfig {
        EncoderConfig {
            family: Family::Gat,
            layers,
            hidden_dim: hidden,
            heads,
            input_dim: d_in,
            output_dim: d_out,
            init_seed: seed,
            pool_center_only: false,
        }
    }

    fn random_subgraph(seed: u64, n: usize, d_in: usize, pe: usize) -> Subgraph {
        let mut rng = Rng::new(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.next_f64() < 0.5 {
                    edges.push((u, v));
                }
            }
        }
        let mut g = graph_from_edges("rnd", n, &edges, d_in);
        for i in 0..n {
            for j in 0..d_in {
                g.features.set(i, j, rng.uniform(-1.0, 1.0));
            }
        }
        let mut sub = extract_khop_subgraph(&g, 0, n, n).unwrap();
        sub.positional = compute_positional_encodings(&sub, pe).unwrap();
        sub
    }

    /// Raw single-layer GCN product on the tape, without pooling.
    fn gcn_layer(n: usize, edges: &[(usize, usize)], h: Tensor, w: Tensor, relu: bool) -> Tensor {
        let mut t = Tape::new();
        let ah = t.constant(normalize_adjacency(n, edges));
        let h = t.constant(h);
        let w = t.constant(w);
        let hw = t.apply(Op::MatMul, &[h, w]).unwrap();
        let mut out = t.apply(Op::MatMul, &[ah, hw]).unwrap();
        if relu {
            out = t.apply(Op::Relu, &[out]).unwrap();
        }
        t.value(out).clone()
    }

    #[test]
    fn gcn_layer_isolated_node() {
        let out = gcn_layer(1, &[], Tensor::scalar(2.0), Tensor::scalar(0.5), true);
        assert_eq!(out.data, vec![1.0]);
    }

    #[test]
    fn gcn_layer_two_node_path() {
        // A~ rows are (0.5, 0.5); features [[1],[3]] average to 2 everywhere
        let out = gcn_layer(
            2,
            &[(0, 1)],
            Tensor::new(2, 1, vec![1.0, 3.0]),
            Tensor::scalar(1.0),
            true,
        );
        for v in &out.data {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gcn_layer_zero_weight() {
        let out = gcn_layer(
            2,
            &[(0, 1)],
            Tensor::new(2, 1, vec![1.0, 3.0]),
            Tensor::scalar(0.0),
            true,
        );
        assert_eq!(out.data, vec![0.0, 0.0]);
    }

    #[test]
    fn param_count_closed_form() {
        // single GCN layer, no bias: 36 x 32
        assert_eq!(gcn_cfg(1, 99, 36, 32, 0).param_count(), 1152);
        // GCN 2 layers 36 -> 16 -> 32
        assert_eq!(gcn_cfg(2, 16, 36, 32, 0).param_count(), 36 * 16 + 16 * 32);
        // GAT single head single layer: W 36x32 plus attention vector 2x32
        assert_eq!(gat_cfg(1, 99, 1, 36, 32, 0).param_count(), 1152 + 64);
        // doubling hidden roughly quadruples the middle h x h term
        let narrow = gcn_cfg(3, 8, 36, 32, 0).param_count();
        let wide = gcn_cfg(3, 16, 36, 32, 0).param_count();
        assert!(wide > 2 * narrow);
    }

    #[test]
    fn param_count_matches_materialized() {
        for cfg in [gcn_cfg(3, 16, 36, 32, 1), gat_cfg(3, 8, 4, 36, 32, 1)] {
            let enc = Encoder::new(cfg.clone()).unwrap();
            assert_eq!(enc.param_count(), cfg.param_count());
            assert_eq!(enc.params.len(), enc.param_names().len());
        }
    }

    /// Straightforward dense GAT re-implementation, independent of the tape.
    fn gat_oracle(sub: &Subgraph, w: &Tensor, a: &Tensor, relu: bool) -> Tensor {
        let n = sub.node_count();
        let h = sub.input_matrix();
        let d_out = w.cols;
        let mut wh = Tensor::zeros(n, d_out);
        for i in 0..n {
            for j in 0..d_out {
                let mut s = 0.0;
                for p in 0..h.cols {
                    s += h.get(i, p) * w.get(p, j);
                }
                wh.set(i, j, s);
            }
        }
        let adj = sub.local_adjacency_lists();
        let mut out = Tensor::zeros(n, d_out);
        for v in 0..n {
            let mut nbrs = vec![v];
            nbrs.extend(adj[v].iter().copied());
            let scores: Vec<f64> = nbrs
                .iter()
                .map(|&u| {
                    let mut s = 0.0;
                    for j in 0..d_out {
                        s += a.get(j, 0) * wh.get(v, j) + a.get(d_out + j, 0) * wh.get(u, j);
                    }
                    if s > 0.0 {
                        s
                    } else {
                        0.2 * s
                    }
                })
                .collect();
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
            let denom: f64 = exps.iter().sum();
            for (idx, &u) in nbrs.iter().enumerate() {
                let alpha = exps[idx] / denom;
                for j in 0..d_out {
                    out.set(v, j, out.get(v, j) + alpha * wh.get(u, j));
                }
            }
        }
        if relu {
            for x in &mut out.data {
                if *x < 0.0 {
                    *x = 0.0;
                }
            }
        }
        out
    }

    fn gat_single_layer_tape(enc: &Encoder, sub: &Subgraph) -> Tensor {
        // Single-layer GAT: final layer, linear, one head; strip the readout
        // by recomputing pooled pre-normalization via the oracle comparison
        // on the mean instead. Here we just run the full forward and compare
        // to oracle mean-pool + normalize.
        let emb = enc.embed(sub).unwrap();
        Tensor::new(1, emb.len(), emb)
    }

    #[test]
    fn gat_matches_dense_oracle_on_star() {
        // 3-node star (plus one extra leaf): random params, one layer
        let mut g = graph_from_edges("star", 4, &[(0, 1), (0, 2), (0, 3)], 5);
        let mut rng = Rng::new(21);
        for i in 0..4 {
            for j in 0..5 {
                g.features.set(i, j, rng.uniform(-1.0, 1.0));
            }
        }
        let mut sub = extract_khop_subgraph(&g, 0, 1, 10).unwrap();
        sub.positional = compute_positional_encodings(&sub, 2).unwrap();
        let enc = Encoder::new(gat_cfg(1, 8, 1, 7, 6, 3)).unwrap();
        let got = gat_single_layer_tape(&enc, &sub);
        // oracle: linear layer, mean pool, normalize
        let raw = gat_oracle(&sub, &enc.params[0], &enc.params[1], false);
        let mut mean = vec![0.0; raw.cols];
        for i in 0..raw.rows {
            for j in 0..raw.cols {
                mean[j] += raw.get(i, j) / raw.rows as f64;
            }
        }
        let norm: f64 = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (g, o) in got.data.iter().zip(&mean) {
            assert!((g - o / norm).abs() < 1e-10, "tape {g} vs oracle {}", o / norm);
        }
    }

    #[test]
    fn gat_zero_attention_is_mean_aggregation() {
        // a = 0 makes attention uniform over N(v) ∪ {v}.
        let mut sub = random_subgraph(5, 5, 4, 2);
        sub.positional = compute_positional_encodings(&sub, 2).unwrap();
        let mut enc = Encoder::new(gat_cfg(1, 8, 1, 6, 4, 9)).unwrap();
        for v in &mut enc.params[1].data {
            *v = 0.0;
        }
        let got = enc.embed(&sub).unwrap();
        // With zero scores the oracle's softmax is uniform over the
        // neighborhood, i.e. plain mean aggregation.
        let raw = gat_oracle(&sub, &enc.params[0], &enc.params[1], false);
        let mut mean = vec![0.0; raw.cols];
        for i in 0..raw.rows {
            for j in 0..raw.cols {
                mean[j] += raw.get(i, j) / raw.rows as f64;
            }
        }
        let norm: f64 = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (g, o) in got.iter().zip(&mean) {
            assert!((g - o / norm).abs() < 1e-10);
        }
    }

    #[test]
    fn embeddings_unit_norm_property() {
        let enc_gcn = Encoder::new(gcn_cfg(2, 8, 6, 5, 2)).unwrap();
        let enc_gat = Encoder::new(gat_cfg(2, 8, 2, 6, 5, 2)).unwrap();
        for seed in 0..100 {
            let sub = random_subgraph(seed, 2 + (seed as usize % 6), 4, 2);
            for enc in [&enc_gcn, &enc_gat] {
                let emb = enc.embed(&sub).unwrap();
                let norm: f64 = emb.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() <= 1e-12, "seed {seed}: norm {norm}");
            }
        }
    }

    #[test]
    fn single_node_subgraph_pooling_identity() {
        let sub = random_subgraph(3, 1, 4, 2);
        let enc = Encoder::new(gcn_cfg(2, 8, 6, 5, 4)).unwrap();
        let emb = enc.embed(&sub).unwrap();
        assert_eq!(emb.len(), 5);
        let norm: f64 = emb.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn permutation_invariance() {
        for (name, cfg) in [
            ("gcn", gcn_cfg(2, 8, 6, 5, 7)),
            ("gat", gat_cfg(2, 8, 2, 6, 5, 7)),
        ] {
            let enc = Encoder::new(cfg).unwrap();
            let sub = random_subgraph(11, 6, 4, 2);
            let base = enc.embed(&sub).unwrap();
            // relabel local nodes by a rotation
            let n = sub.node_count();
            let perm: Vec<usize> = (0..n).map(|i| (i + 2) % n).collect(); // old -> new
            let mut inv = vec![0; n];
            for (old, &new) in perm.iter().enumerate() {
                inv[new] = old;
            }
            let mut feats = Tensor::zeros(n, sub.features.cols);
            let mut pos = Tensor::zeros(n, sub.positional.cols);
            let mut node_ids = vec![0; n];
            for new in 0..n {
                let old = inv[new];
                node_ids[new] = sub.node_ids[old];
                for j in 0..feats.cols {
                    feats.set(new, j, sub.features.get(old, j));
                }
                for j in 0..pos.cols {
                    pos.set(new, j, sub.positional.get(old, j));
                }
            }
            let mut edges: Vec<(usize, usize)> = sub
                .edges
                .iter()
                .map(|&(u, v)| {
                    let (a, b) = (perm[u], perm[v]);
                    if a < b {
                        (a, b)
                    } else {
                        (b, a)
                    }
                })
                .collect();
            edges.sort_unstable();
            let permuted = Subgraph {
                center: sub.center,
                node_ids,
                features: feats,
                edges,
                positional: pos,
            };
            let out = enc.embed(&permuted).unwrap();
            for (a, b) in base.iter().zip(&out) {
                assert!((a - b).abs() < 1e-10, "{name}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn full_encoder_gradient_check_both_families() {
        // Scalar loss: dot of the embedding with a fixed vector.
        for (name, cfg) in [
            ("gcn", gcn_cfg(2, 5, 6, 4, 13)),
            ("gat", gat_cfg(2, 5, 2, 6, 4, 13)),
        ] {
            let enc = Encoder::new(cfg).unwrap();
            let sub = random_subgraph(31, 6, 4, 2);
            let probe = Tensor::new(1, 4, vec![0.3, -0.7, 1.1, 0.5]);
            let err = gradient_check(
                |t, ids| {
                    let emb = enc.forward(t, ids, &sub)?;
                    let p = t.constant(probe.clone());
                    let prod = t.apply(Op::Mul, &[emb, p])?;
                    t.apply(Op::Sum, &[prod])
                },
                &enc.params,
                1e-5,
            )
            .unwrap();
            assert!(err < 1e-4, "{name}: rel error {err}");
        }
    }

    #[test]
    fn checkpoint_roundtrip_byte_exact() {
        let enc = Encoder::new(gat_cfg(2, 6, 2, 6, 4, 99)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.ckpt");
        let p2 = dir.path().join("b.ckpt");
        save_encoder(&enc, &p1).unwrap();
        let back = load_encoder(&p1).unwrap();
        assert_eq!(back.param_hash(), enc.param_hash());
        assert_eq!(back.config, enc.config);
        save_encoder(&back, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn seed_changes_initialization() {
        let a = Encoder::new(gcn_cfg(2, 8, 6, 5, 1)).unwrap();
        let b = Encoder::new(gcn_cfg(2, 8, 6, 5, 2)).unwrap();
        assert_ne!(a.param_hash(), b.param_hash());
        let c = Encoder::new(gcn_cfg(2, 8, 6, 5, 1)).unwrap();
        assert_eq!(a.param_hash(), c.param_hash());
    }

    #[test]
    fn wrong_input_width_rejected() {
        let enc = Encoder::new(gcn_cfg(1, 8, 10, 5, 1)).unwrap();
        let sub = random_subgraph(1, 4, 4, 2); // width 6 != 10
        assert!(matches!(enc.embed(&sub), Err(Error::Dimension { .. })));
    }
}
