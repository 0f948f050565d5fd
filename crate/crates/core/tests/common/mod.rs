//! Shared fixtures and independent oracles for the integration tests.
//!
//! The oracles recompute model quantities from the raw parameter vector by
//! direct enumeration of every ⟨t, ℓ, s⟩ triple, with naive softmaxes and a
//! dense forward pass, sharing no code with the library's inference path.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use syncount::lexicon::{parse_unimorph, Lexicon, Overabundance};
use syncount::model::{Model, SlotModelKind};
use syncount::synth::{generate_lexicon, ParadigmSpec, SynthSpec};
use syncount::CountTable;

pub const GERMAN: &str = include_str!("../fixtures/german.tsv");
pub const ENGLISH: &str = include_str!("../fixtures/english.tsv");

pub fn lexicon(text: &str) -> Arc<Lexicon> {
    Arc::new(parse_unimorph(text, Overabundance::Error).unwrap())
}

pub fn counts(pairs: &[(&str, f64)]) -> CountTable {
    pairs.iter().map(|(f, c)| (f.to_string(), *c)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn paradigm(pos: &str, dims: &[&[&str]], lexemes: usize) -> ParadigmSpec {
    ParadigmSpec {
        pos: pos.into(),
        grid: dims.iter().map(|d| d.iter().map(|f| f.to_string()).collect()).collect(),
        lexemes,
    }
}

/// Every slot-model variant the tests sweep over.
pub fn all_kinds() -> Vec<SlotModelKind> {
    vec![
        SlotModelKind::Unif,
        SlotModelKind::Free,
        SlotModelKind::Linear,
        SlotModelKind::neural(1, 4),
        SlotModelKind::neural(2, 3),
        SlotModelKind::neural(3, 3),
        SlotModelKind::Neural {
            layers: 2,
            hidden: 3,
            bias: true,
        },
    ]
}

/// A small random lexicon. The two-letter alphabet makes forms collide
/// across lexemes and tags, so both kinds of ambiguity occur.
pub fn random_lexicon(r: &mut ChaCha8Rng) -> Arc<Lexicon> {
    let nouns = paradigm(
        "N",
        &[&["NOM", "ACC", "GEN"][..r.random_range(1..=3)], &["SG", "PL"]],
        r.random_range(1..=3),
    );
    let verbs = paradigm("V", &[&["PST", "PRS"], &["1", "3"][..r.random_range(1..=2)]], r.random_range(1..=3));
    let paradigms = if r.random_bool(0.5) { vec![nouns, verbs] } else { vec![nouns] };
    let spec = SynthSpec {
        paradigms,
        rate: r.random_range(0.0..0.6),
        alphabet: vec!['a', 'b'],
        min_len: 2,
        max_len: 4,
        collision_free: false,
        seed: r.random(),
    };
    Arc::new(generate_lexicon(&spec).unwrap().lexicon)
}

/// Integer counts in 0..20 on a random subset of the lexicon's forms.
pub fn random_counts(r: &mut ChaCha8Rng, lexicon: &Lexicon) -> CountTable {
    let mut table = CountTable::new();
    for form in lexicon.forms() {
        if r.random_bool(0.8) {
            table.add(form, r.random_range(0..20) as f64).unwrap();
        }
    }
    table
}

pub fn random_model(r: &mut ChaCha8Rng, lexicon: Arc<Lexicon>, kind: SlotModelKind, scale: f64) -> Model {
    let mut model = Model::new(lexicon, kind).unwrap();
    for p in model.params_mut() {
        *p = scale * (2.0 * r.random::<f64>() - 1.0);
    }
    model
}

fn naive_softmax(x: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|v| v / z).collect()
}

/// Slot scores recomputed from the parameter vector with dense multi-hot
/// inputs.
pub fn oracle_slot_scores(model: &Model) -> Vec<f64> {
    let lex = model.lexicon();
    let space = model.feature_space();
    let layout = model.layout();
    let theta = model.params();
    (0..lex.slots().len())
        .map(|s| {
            let tag = lex.tag(lex.slot_tag(s));
            let v = space.featurize(tag, lex.slot(s)).unwrap();
            match model.kind() {
                SlotModelKind::Unif => 0.0,
                SlotModelKind::Free => theta[layout.slots.start + s],
                SlotModelKind::Linear => v.iter().zip(&theta[layout.slots.clone()]).map(|(a, b)| a * b).sum(),
                SlotModelKind::Neural { .. } => {
                    let mut h = v;
                    for layer in &layout.layers {
                        let w = &theta[layer.weights.clone()];
                        h = (0..layer.rows)
                            .map(|j| {
                                let mut z: f64 = (0..layer.cols).map(|c| w[j * layer.cols + c] * h[c]).sum();
                                if let Some(b) = &layer.bias {
                                    z += theta[b.start + j];
                                }
                                z.tanh()
                            })
                            .collect();
                    }
                    h.iter().zip(&theta[layout.output.clone()]).map(|(a, b)| a * b).sum()
                }
            }
        })
        .collect()
}

/// `p(t) p(ℓ|t) p(s|t)` for every listed triple, keyed by global indexes.
pub fn oracle_joint(model: &Model) -> BTreeMap<(usize, usize, usize), f64> {
    let lex = model.lexicon();
    let theta = model.params();
    let layout = model.layout();
    let p_tag = naive_softmax(&theta[layout.tags.clone()]);
    let scores = oracle_slot_scores(model);
    let mut out = BTreeMap::new();
    for (t, pt) in p_tag.iter().enumerate() {
        let lr = lex.lexeme_range(t);
        let sr = lex.slot_range(t);
        let p_lex = naive_softmax(&theta[layout.lexemes.start + lr.start..layout.lexemes.start + lr.end]);
        let p_slot = naive_softmax(&scores[sr.clone()]);
        for (i, l) in lr.clone().enumerate() {
            for (j, s) in sr.clone().enumerate() {
                out.insert((t, l, s), pt * p_lex[i] * p_slot[j]);
            }
        }
    }
    out
}

/// `p(f)` by summing the joint over every triple that realizes `f`.
pub fn oracle_marginals(model: &Model) -> BTreeMap<String, f64> {
    let lex = model.lexicon();
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for ((_, l, s), p) in oracle_joint(model) {
        let forms = lex.realizations(l, s);
        for f in forms {
            *out.entry(f.clone()).or_insert(0.0) += p / forms.len() as f64;
        }
    }
    out
}

/// `Σ_f c(f) ln p(f) − (λ/2) ‖θ‖²`.
pub fn oracle_objective(model: &Model, counts: &CountTable, lambda: f64) -> f64 {
    let marginals = oracle_marginals(model);
    let ll: f64 = counts.iter().filter(|(_, c)| *c > 0.0).map(|(f, c)| c * marginals[f].ln()).sum();
    ll - 0.5 * lambda * model.params().iter().map(|p| p * p).sum::<f64>()
}

/// Posterior over the analyses of `form`, keyed by (lexeme, slot).
pub fn oracle_posterior(model: &Model, form: &str) -> BTreeMap<(usize, usize), f64> {
    let lex = model.lexicon();
    let mut out = BTreeMap::new();
    for ((_, l, s), p) in oracle_joint(model) {
        let forms = lex.realizations(l, s);
        if forms.iter().any(|f| f == form) {
            out.insert((l, s), p / forms.len() as f64);
        }
    }
    let z: f64 = out.values().sum();
    out.values_mut().for_each(|p| *p /= z);
    out
}

/// Central differences of [`Model::objective`].
pub fn finite_difference_gradient(model: &Model, counts: &CountTable, lambda: f64, step: f64) -> Vec<f64> {
    let mut probe = model.clone();
    (0..model.params().len())
        .map(|i| {
            let x = model.params()[i];
            probe.params_mut()[i] = x + step;
            let up = probe.objective(counts, lambda).unwrap();
            probe.params_mut()[i] = x - step;
            let down = probe.objective(counts, lambda).unwrap();
            probe.params_mut()[i] = x;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Relative error with a floor of 1e-2 on the denominator; components
/// smaller than that are compared absolutely at the same scale.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-2)
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| relative_error(*a, *n))
        .fold(0.0, f64::max)
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
