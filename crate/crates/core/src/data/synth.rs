use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Label, QuestionType, WiqaExample};
use crate::error::{Error, Result};

/// Words that may not be used as entity names: they carry the structure of
/// the generated sentences and questions.
const RESERVED: &[&str] = &[
    "suppose", "more", "less", "happens", "how", "will", "it", "affect", "increases",
    "decreases",
];

pub fn default_entity_names() -> Vec<String> {
    [
        "rain", "clouds", "wind", "heat", "snow", "ice", "soil", "roots", "seeds", "leaves",
        "sunlight", "water", "rivers", "floods", "erosion", "sediment", "plants", "oxygen",
        "algae", "fish", "insects", "birds", "pollen", "flowers", "fruit", "bees", "forests",
        "fires", "smoke", "ash", "lava", "magma", "rocks", "sand", "dust", "storms", "waves",
        "tides", "salt", "minerals",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub num_examples: usize,
    /// Entities per generated graph.
    pub num_entities: usize,
    /// Probability that a node gets an incoming edge.
    pub edge_density: f64,
    pub max_hops: u8,
    pub entity_names: Vec<String>,
    pub seed: u64,
    /// Graph resamples allowed per example before giving up.
    pub max_retries: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            num_examples: 1000,
            num_entities: 6,
            edge_density: 0.8,
            max_hops: 3,
            entity_names: default_entity_names(),
            seed: 0,
            max_retries: 200,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(1..=3).contains(&self.max_hops) {
            return bad(format!("max_hops must be in 1..=3, got {}", self.max_hops));
        }
        if !(0.0..=1.0).contains(&self.edge_density) {
            return bad(format!("edge_density {} outside [0, 1]", self.edge_density));
        }
        if self.num_entities < 2 || self.num_entities > self.entity_names.len() {
            return bad(format!(
                "num_entities {} must be at least 2 and at most the {} names given",
                self.num_entities,
                self.entity_names.len()
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for name in &self.entity_names {
            let lower = name.to_lowercase();
            if name.is_empty() || !name.chars().all(char::is_alphanumeric) {
                return bad(format!("entity name {name:?} must be one alphanumeric word"));
            }
            if RESERVED.contains(&lower.as_str()) || super::POLARITY_PAIRS
                .iter()
                .any(|&(a, b)| a == lower || b == lower)
            {
                return bad(format!("entity name {name:?} is a reserved word"));
            }
            if !seen.insert(lower) {
                return bad(format!("duplicate entity name {name:?}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedEdge {
    pub source: usize,
    pub target: usize,
    pub positive: bool,
}

/// A forest of signed edges: every node has at most one parent, so any
/// ordered pair is joined by one directed path or none.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceGraph {
    pub names: Vec<String>,
    pub edges: Vec<SignedEdge>,
}

impl InfluenceGraph {
    fn parent(&self, node: usize) -> Option<&SignedEdge> {
        self.edges.iter().find(|e| e.target == node)
    }

    /// Hop count and sign of the path `source → target`, if any.
    pub fn path(&self, source: usize, target: usize) -> Option<(u8, bool)> {
        if source == target {
            return None;
        }
        let (mut node, mut hops, mut positive) = (target, 0u8, true);
        while let Some(e) = self.parent(node) {
            hops += 1;
            positive ^= !e.positive;
            if e.source == source {
                return Some((hops, positive));
            }
            node = e.source;
        }
        None
    }

    pub fn label(&self, source: usize, target: usize) -> (Label, u8) {
        match self.path(source, target) {
            Some((h, true)) => (Label::More, h),
            Some((h, false)) => (Label::Less, h),
            None => (Label::NoEffect, 0),
        }
    }

    pub fn sentences(&self) -> Vec<String> {
        self.edges
            .iter()
            .map(|e| {
                format!(
                    "{} {} {}.",
                    self.names[e.source],
                    if e.positive { "increases" } else { "decreases" },
                    self.names[e.target]
                )
            })
            .collect()
    }

    fn mentioned(&self) -> Vec<usize> {
        (0..self.names.len())
            .filter(|&n| self.edges.iter().any(|e| e.source == n || e.target == n))
            .collect()
    }

    fn sample<R: Rng>(spec: &SyntheticSpec, rng: &mut R) -> Self {
        let names: Vec<String> = spec
            .entity_names
            .choose_multiple(rng, spec.num_entities)
            .cloned()
            .collect();
        let mut depth = vec![0u8; names.len()];
        let mut edges = Vec::new();
        for node in 1..names.len() {
            if !rng.gen_bool(spec.edge_density) {
                continue;
            }
            let parents: Vec<usize> = (0..node).filter(|&p| depth[p] < spec.max_hops).collect();
            if let Some(&p) = parents.choose(rng) {
                depth[node] = depth[p] + 1;
                edges.push(SignedEdge {
                    source: p,
                    target: node,
                    positive: rng.gen_bool(0.5),
                });
            }
        }
        edges.shuffle(rng);
        Self { names, edges }
    }
}

pub fn question_text(cause: &str, effect: &str) -> String {
    format!("suppose more {cause} happens , how will it affect {effect} ?")
}

/// Generates oracle-labelled examples. Labels cycle through
/// more / less / no_effect before shuffling; effect hops are uniform in
/// `1..=max_hops`.
pub fn synth_generate(spec: &SyntheticSpec) -> Result<Vec<WiqaExample>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.num_examples);
    for i in 0..spec.num_examples {
        let target = Label::ALL[i % 3];
        let hops = match target {
            Label::NoEffect => 0,
            _ => rng.gen_range(1..=spec.max_hops),
        };
        let mut made = None;
        for _ in 0..=spec.max_retries {
            let graph = InfluenceGraph::sample(spec, &mut rng);
            let mentioned = graph.mentioned();
            let pairs: Vec<(usize, usize)> = mentioned
                .iter()
                .flat_map(|&a| mentioned.iter().map(move |&b| (a, b)))
                .filter(|&(a, b)| a != b && graph.label(a, b) == (target, hops))
                .collect();
            if let Some(&(a, b)) = pairs.choose(&mut rng) {
                made = Some((graph, a, b));
                break;
            }
        }
        let (graph, a, b) = made.ok_or_else(|| {
            Error::Generation(format!(
                "no {target} query with {hops} hops after {} graph samples; \
                 raise num_entities or edge_density",
                spec.max_retries + 1
            ))
        })?;
        out.push(WiqaExample::new(
            format!("synth-{}-{i:06}", spec.seed),
            question_text(&graph.names[a], &graph.names[b]),
            graph.sentences(),
            Some(target),
            Some(if target == Label::NoEffect {
                QuestionType::NoEffect
            } else {
                QuestionType::InPara
            }),
            Some(hops),
        ));
    }
    out.shuffle(&mut rng);
    Ok(out)
}
