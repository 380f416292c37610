//! Python bindings: generate a corpus, pretrain a victim, run any of the
//! six extraction scenarios, and inspect embeddings and reports from
//! Python. Thin wrappers over the core crate; all heavy lifting stays in
//! Rust.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use gfm_lab::attacks::{run_scenario, AttackKind};
use gfm_lab::defaults;
use gfm_lab::encoder::Encoder;
use gfm_lab::tag::{generate_corpus, sample_subgraph, Corpus as CoreCorpus, CorpusConfig};
use gfm_lab::tensor::Tensor;
use gfm_lab::text::FrozenTextEncoder;
use gfm_lab::train::pretrain_victim;
use gfm_lab::victim::{DefenseConfig, VictimHandle};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows_to_tensor(rows: Vec<Vec<f64>>) -> PyResult<Tensor> {
    if rows.is_empty() {
        return Err(err("need at least one row"));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(err("ragged rows"));
    }
    Ok(Tensor::from_rows(&rows))
}

/// A generated text-attributed-graph corpus with features attached.
#[pyclass(name = "Corpus")]
struct PyCorpus {
    corpus: CoreCorpus,
    text: FrozenTextEncoder,
}

#[pymethods]
impl PyCorpus {
    /// Build a corpus from a config JSON string (default three-domain
    /// config when None) and attach text features.
    #[new]
    #[pyo3(signature = (config_json=None, seed=7))]
    fn new(config_json: Option<&str>, seed: u64) -> PyResult<Self> {
        let cfg: CorpusConfig = match config_json {
            Some(s) => serde_json::from_str(s).map_err(err)?,
            None => defaults::default_corpus_config(seed),
        };
        let mut corpus = generate_corpus(&cfg).map_err(err)?;
        let text = defaults::default_text_encoder(7);
        corpus.attach_features(&text).map_err(err)?;
        Ok(PyCorpus { corpus, text })
    }

    fn graph_ids(&self) -> Vec<String> {
        self.corpus.all_graphs().map(|g| g.graph_id.clone()).collect()
    }

    fn node_count(&self, graph_id: &str) -> PyResult<usize> {
        Ok(self
            .corpus
            .find_graph(graph_id)
            .ok_or_else(|| err(format!("unknown graph '{graph_id}'")))?
            .node_count)
    }

    fn edge_homophily(&self, graph_id: &str) -> PyResult<f64> {
        Ok(self
            .corpus
            .find_graph(graph_id)
            .ok_or_else(|| err(format!("unknown graph '{graph_id}'")))?
            .edge_homophily())
    }
}

/// A graph encoder (victim or extracted surrogate).
#[pyclass(name = "Encoder")]
struct PyEncoder {
    encoder: Encoder,
}

#[pymethods]
impl PyEncoder {
    fn param_count(&self) -> usize {
        self.encoder.param_count()
    }

    fn param_hash(&self) -> u64 {
        self.encoder.param_hash()
    }

    /// Embed the default-sampler subgraph around one node.
    fn embed(&self, corpus: &PyCorpus, graph_id: &str, center: usize) -> PyResult<Vec<f64>> {
        let g = corpus
            .corpus
            .find_graph(graph_id)
            .ok_or_else(|| err(format!("unknown graph '{graph_id}'")))?;
        let sub = sample_subgraph(g, center, &defaults::default_sampler()).map_err(err)?;
        self.encoder.embed(&sub).map_err(err)
    }
}

/// Pretrain the default victim encoder on the corpus.
#[pyfunction]
#[pyo3(signature = (corpus, seed=1))]
fn pretrain(corpus: &PyCorpus, seed: u64) -> PyResult<PyEncoder> {
    let (victim, _) = pretrain_victim(
        &corpus.corpus.pretrain,
        &corpus.corpus.summaries,
        &corpus.text,
        &defaults::default_victim_config(seed),
        &defaults::default_victim_train(seed),
        &defaults::default_sampler(),
    )
    .map_err(err)?;
    Ok(PyEncoder { encoder: victim })
}

/// Run one extraction scenario against the victim; returns the extracted
/// surrogate and the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (corpus, victim, kind="full_model", seed=7, epochs=None, budget=None, noise_std=0.0, target_domain=None, source=None))]
#[allow(clippy::too_many_arguments)]
fn attack(
    corpus: &PyCorpus,
    victim: &PyEncoder,
    kind: &str,
    seed: u64,
    epochs: Option<usize>,
    budget: Option<u64>,
    noise_std: f64,
    target_domain: Option<String>,
    source: Option<String>,
) -> PyResult<(PyEncoder, String)> {
    let kind: AttackKind =
        serde_json::from_value(serde_json::Value::String(kind.to_string())).map_err(err)?;
    let mut scenario = defaults::default_scenario(kind, seed);
    if budget.is_some() {
        scenario.budget = budget;
        scenario.train_config = defaults::default_attacker_train(kind, budget, seed);
    }
    if let Some(e) = epochs {
        scenario.train_config.epochs = e;
    }
    scenario.target_domain = target_domain;
    if let Some(src) = source {
        scenario.query_sources = vec![src];
    }
    let defense = DefenseConfig {
        noise_std,
        ..DefenseConfig::default()
    };
    let mut handle =
        VictimHandle::new(victim.encoder.clone(), scenario.budget, defense).map_err(err)?;
    let outcome = run_scenario(
        &scenario,
        &corpus.corpus,
        &mut handle,
        &victim.encoder,
        &corpus.text,
    )
    .map_err(err)?;
    let report = outcome.report.to_json(false).map_err(err)?;
    Ok((
        PyEncoder {
            encoder: outcome.attacker,
        },
        report,
    ))
}

/// Alignment loss between row-matched graph and text embedding matrices.
#[pyfunction]
fn contrastive_loss(graph_rows: Vec<Vec<f64>>, text_rows: Vec<Vec<f64>>, tau: f64) -> PyResult<f64> {
    gfm_lab::train::contrastive_loss(
        &rows_to_tensor(graph_rows)?,
        &rows_to_tensor(text_rows)?,
        tau,
    )
    .map_err(err)
}

/// Summed squared residual between surrogate and victim embedding rows.
#[pyfunction]
fn mse_loss(attacker_rows: Vec<Vec<f64>>, victim_rows: Vec<Vec<f64>>) -> PyResult<f64> {
    gfm_lab::train::mse_regression_loss(
        &rows_to_tensor(attacker_rows)?,
        &rows_to_tensor(victim_rows)?,
    )
    .map_err(err)
}

/// The built-in corpus config as a JSON string.
#[pyfunction]
#[pyo3(signature = (seed=7))]
fn default_corpus_config(seed: u64) -> PyResult<String> {
    serde_json::to_string_pretty(&defaults::default_corpus_config(seed)).map_err(err)
}

#[pymodule]
fn gfm_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyEncoder>()?;
    m.add_function(wrap_pyfunction!(pretrain, m)?)?;
    m.add_function(wrap_pyfunction!(attack, m)?)?;
    m.add_function(wrap_pyfunction!(contrastive_loss, m)?)?;
    m.add_function(wrap_pyfunction!(mse_loss, m)?)?;
    m.add_function(wrap_pyfunction!(default_corpus_config, m)?)?;
    Ok(())
}
