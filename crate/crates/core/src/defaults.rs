//! Canonical default configurations: the three-domain synthetic corpus, the
//! victim and attacker encoder shapes, and per-scenario training settings.
//! Every knob remains overridable through config files; these are just the
//! settings the command-line tools fall back to.

use crate::attacks::{default_epochs, AttackKind, ScenarioConfig};
use crate::encoder::{EncoderConfig, Family};
use crate::tag::{CorpusConfig, DomainConfig, GraphRole, GraphSpec, SamplerConfig};
use crate::text::FrozenTextEncoder;
use crate::train::TrainConfig;

/// Hash-bucket count of the frozen text encoder.
pub const TEXT_VOCAB_BUCKETS: usize = 4096;
/// Text/graph shared embedding dimension.
pub const EMBED_DIM: usize = 32;
/// Random-walk positional-encoding columns appended to node features.
pub const PE_DIM: usize = 4;
/// Node feature dimension seen by the encoders.
pub const INPUT_DIM: usize = EMBED_DIM + PE_DIM;

fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn graph_specs() -> Vec<GraphSpec> {
    let spec = |role, feature_noise| GraphSpec {
        node_count: 200,
        edge_density: 0.04,
        homophily: 0.9,
        feature_noise,
        role,
    };
    // extra graphs carry heavier noise-token mixes: the shared noise pool is
    // what lets surrogates trained on them transfer back to the pretraining
    // text distribution
    vec![
        spec(GraphRole::Pretrain, 0.25),
        spec(GraphRole::Pretrain, 0.25),
        spec(GraphRole::Pretrain, 0.25),
        spec(GraphRole::Eval, 0.25),
        spec(GraphRole::Extra, 1.0),
        spec(GraphRole::Extra, 1.0),
        spec(GraphRole::Extra, 1.0),
    ]
}

/// Three domains, each with three pretraining graphs, one held-out eval
/// graph, and three extra graphs (disjoint vocabulary) for data-free
/// attacks.
pub fn default_corpus_config(seed: u64) -> CorpusConfig {
    CorpusConfig {
        seed,
        domains: vec![
            DomainConfig {
                name: "citations".into(),
                class_count: 3,
                topic_vocab: words(&[
                    "neural", "networks", "gradient", "descent", "proofs", "lattice",
                    "algebra", "topology", "genome", "protein", "enzyme", "receptor",
                ]),
                graphs: graph_specs(),
                extra_topic_vocab: Some(words(&[
                    "quasar", "nebula", "photon", "plasma", "isotope", "neutrino",
                    "magnetar", "pulsar", "redshift", "parallax", "albedo", "corona",
                ])),
            },
            DomainConfig {
                name: "products".into(),
                class_count: 3,
                topic_vocab: words(&[
                    "laptop", "charger", "keyboard", "monitor", "jacket", "sneaker",
                    "denim", "scarf", "blender", "kettle", "skillet", "whisk",
                ]),
                graphs: graph_specs(),
                extra_topic_vocab: Some(words(&[
                    "canoe", "paddle", "tent", "lantern", "compass", "thermos",
                    "carabiner", "crampon", "bivouac", "gaiter", "trowel", "hatchet",
                ])),
            },
            DomainConfig {
                name: "forums".into(),
                class_count: 3,
                topic_vocab: words(&[
                    "playoffs", "transfer", "goalkeeper", "stadium", "ballot", "senate",
                    "policy", "caucus", "sequel", "trailer", "soundtrack", "premiere",
                ]),
                graphs: graph_specs(),
                extra_topic_vocab: Some(words(&[
                    "sourdough", "espresso", "ramen", "brisket", "gnocchi", "tiramisu",
                    "harissa", "kimchi", "focaccia", "tahini", "ceviche", "panko",
                ])),
            },
        ],
    }
}

pub fn default_text_encoder(seed: u64) -> FrozenTextEncoder {
    FrozenTextEncoder::new(seed, TEXT_VOCAB_BUCKETS, EMBED_DIM)
}

pub fn default_sampler() -> SamplerConfig {
    SamplerConfig::default()
}

/// Victim: a 2-layer, 2-head attention encoder with hidden width 64.
pub fn default_victim_config(init_seed: u64) -> EncoderConfig {
    EncoderConfig {
        family: Family::Gat,
        layers: 2,
        hidden_dim: 64,
        heads: 2,
        input_dim: INPUT_DIM,
        output_dim: EMBED_DIM,
        init_seed,
        pool_center_only: false,
    }
}

/// Default surrogate: a much smaller convolutional encoder.
pub fn default_attacker_gcn(init_seed: u64) -> EncoderConfig {
    EncoderConfig {
        family: Family::Gcn,
        layers: 2,
        hidden_dim: 16,
        heads: 1,
        input_dim: INPUT_DIM,
        output_dim: EMBED_DIM,
        init_seed,
        pool_center_only: false,
    }
}

/// Alternate surrogate: a small attention encoder.
pub fn default_attacker_gat(init_seed: u64) -> EncoderConfig {
    EncoderConfig {
        family: Family::Gat,
        layers: 2,
        hidden_dim: 8,
        heads: 2,
        input_dim: INPUT_DIM,
        output_dim: EMBED_DIM,
        init_seed,
        pool_center_only: false,
    }
}

/// Victim pretraining settings: contrastive alignment only.
pub fn default_victim_train(seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 0.01,
        lambda_mse: 0.0,
        lambda_contrast: 1.0,
        epochs: 10,
        seed,
        ..TrainConfig::default()
    }
}

/// Attacker training settings: embedding regression only, with the
/// per-scenario epoch schedule.
pub fn default_attacker_train(kind: AttackKind, budget: Option<u64>, seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 0.02,
        lambda_mse: 1.0,
        lambda_contrast: 0.0,
        epochs: default_epochs(kind, budget),
        seed,
        ..TrainConfig::default()
    }
}

pub fn default_scenario(kind: AttackKind, seed: u64) -> ScenarioConfig {
    let (visibility_fraction, alpha) = match kind {
        AttackKind::SyntheticGraphs => (Some(0.1), Some(0.5)),
        _ => (None, None),
    };
    let budget = match kind {
        AttackKind::BudgetConstrained => Some(1000),
        _ => None,
    };
    ScenarioConfig {
        kind,
        query_sources: vec![],
        target_domain: None,
        budget,
        mix_weights: None,
        visibility_fraction,
        alpha,
        attacker_config: default_attacker_gcn(seed.wrapping_add(1)),
        train_config: default_attacker_train(kind, budget, seed),
        sampler: default_sampler(),
        seed,
    }
}
