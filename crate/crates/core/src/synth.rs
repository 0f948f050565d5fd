//! Synthetic lexicons with controlled syncretism, ground-truth models over
//! them, and corpora sampled from those models with their hidden analyses.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::counts::CountTable;
use crate::error::{Error, Result};
use crate::eval::ReferenceCounts;
use crate::lexicon::{format_bundle, Analysis, AttributeValue, LexemeId, Lexicon, LexiconEntry, Overabundance, Slot, Tag};
use crate::model::{Model, SlotModelKind};
use crate::rng;
use crate::sampling::AncestralSampler;

pub const DEFAULT_ALPHABET: &str = "aeiouklmnprst";

/// One part of speech: its slots are the cartesian product of `grid`, each
/// dimension a list of UniMorph features (e.g. `[[NOM, ACC], [SG, PL]]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ParadigmSpec {
    pub pos: String,
    pub grid: Vec<Vec<String>>,
    pub lexemes: usize,
}

impl ParadigmSpec {
    /// Slots in grid order, first dimension varying slowest.
    pub fn slots(&self) -> Vec<Slot> {
        let mut cells: Vec<Vec<AttributeValue>> = vec![Vec::new()];
        for dimension in &self.grid {
            cells = cells
                .into_iter()
                .flat_map(|prefix| {
                    dimension.iter().map(move |f| {
                        let mut cell = prefix.clone();
                        cell.push(AttributeValue::from_unimorph(f));
                        cell
                    })
                })
                .collect();
        }
        cells.into_iter().map(Slot::new).collect()
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.pos.trim().is_empty() || self.pos.contains(|c: char| c == ';' || c.is_whitespace()) {
            return bad(format!("bad part of speech {:?}", self.pos));
        }
        if self.lexemes == 0 {
            return bad(format!("paradigm {} has no lexemes", self.pos));
        }
        if self.grid.is_empty() || self.grid.iter().any(|d| d.is_empty()) {
            return bad(format!("paradigm {} has no slots", self.pos));
        }
        let mut seen = HashSet::new();
        for feature in self.grid.iter().flatten() {
            if feature.is_empty() || feature.contains(|c: char| c == ';' || c.is_whitespace()) {
                return bad(format!("bad feature {feature:?}"));
            }
            if AttributeValue::from_unimorph(feature).attribute == "pos" {
                return bad(format!("{feature} is a part of speech, not an inflectional feature"));
            }
            if !seen.insert(feature.as_str()) {
                return bad(format!("feature {feature} appears twice in paradigm {}", self.pos));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub paradigms: Vec<ParadigmSpec>,
    /// Probability that a slot after the first copies an earlier slot's form.
    pub rate: f64,
    pub alphabet: Vec<char>,
    pub min_len: usize,
    pub max_len: usize,
    /// Make fresh forms unique across the whole lexicon, so the only
    /// ambiguity is the syncretism the generator put there.
    pub collision_free: bool,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            paradigms: Vec::new(),
            rate: 0.0,
            alphabet: DEFAULT_ALPHABET.chars().collect(),
            min_len: 3,
            max_len: 8,
            collision_free: false,
            seed: 0,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.paradigms.is_empty() {
            return bad("no paradigms to generate");
        }
        if !(0.0..=1.0).contains(&self.rate) {
            return bad("syncretism rate must lie in [0, 1]");
        }
        let alphabet: BTreeSet<char> = self.alphabet.iter().copied().collect();
        if alphabet.is_empty() || alphabet.len() != self.alphabet.len() {
            return bad("alphabet must be non-empty without repeats");
        }
        if alphabet.iter().any(|c| c.is_whitespace() || c.is_control()) {
            return bad("alphabet must not contain whitespace");
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad("form lengths must satisfy 1 <= min <= max");
        }
        let mut tags = HashSet::new();
        for p in &self.paradigms {
            p.validate()?;
            if !tags.insert(p.pos.as_str()) {
                return Err(Error::InvalidArgument(format!("part of speech {} listed twice", p.pos)));
            }
        }
        Ok(())
    }
}

/// Where each cell's form came from: `Some(slot)` if it was copied from
/// `slot` of the same lexeme, `None` if freshly generated.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SyncretismMap {
    cells: BTreeMap<(LexemeId, Slot), Option<Slot>>,
}

impl SyncretismMap {
    pub fn source(&self, lexeme: &LexemeId, slot: &Slot) -> Option<&Slot> {
        self.cells.get(&(lexeme.clone(), slot.clone()))?.as_ref()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LexemeId, &Slot, Option<&Slot>)> {
        self.cells.iter().map(|((l, s), src)| (l, s, src.as_ref()))
    }

    /// Fraction of cells that copy another cell, over the cells that could
    /// (all but the first slot of each paradigm).
    pub fn copied_fraction(&self) -> f64 {
        let lexemes: BTreeSet<&LexemeId> = self.cells.keys().map(|(l, _)| l).collect();
        let eligible = self.cells.len() - lexemes.len();
        let copied = self.cells.values().filter(|src| src.is_some()).count();
        if eligible == 0 {
            0.0
        } else {
            copied as f64 / eligible as f64
        }
    }

    /// `lemma<TAB>features<TAB>source` rows, `source` empty for fresh forms.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("lemma\tfeatures\tsource\n");
        for ((lexeme, slot), src) in &self.cells {
            let source = src.as_ref().map(|s| format_bundle(&lexeme.tag, s)).unwrap_or_default();
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                lexeme.lemma,
                format_bundle(&lexeme.tag, slot),
                source
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticLexicon {
    pub lexicon: Lexicon,
    pub syncretism: SyncretismMap,
}

fn random_form(rng: &mut ChaCha8Rng, spec: &SynthSpec) -> String {
    let len = rng.random_range(spec.min_len..=spec.max_len);
    (0..len).map(|_| *spec.alphabet.choose(rng).expect("non-empty alphabet")).collect()
}

/// Builds a lexicon whose paradigms follow the configured grids. The first slot
/// of every lexeme gets a fresh form; each later slot copies the form of a
/// uniformly chosen earlier slot with probability `rate`, and otherwise gets
/// a fresh form distinct from the rest of its paradigm.
pub fn generate_lexicon(spec: &SynthSpec) -> Result<SyntheticLexicon> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, "synth-lexicon");
    let mut used_forms: HashSet<String> = HashSet::new();
    let mut entries = Vec::new();
    let mut syncretism = SyncretismMap::default();
    for paradigm in &spec.paradigms {
        let tag = Tag::new(paradigm.pos.clone());
        let slots = paradigm.slots();
        let width = paradigm.lexemes.to_string().len();
        for i in 0..paradigm.lexemes {
            let lexeme = LexemeId::new(tag.clone(), format!("{}{:0width$}", paradigm.pos.to_lowercase(), i));
            let mut forms: Vec<String> = Vec::with_capacity(slots.len());
            for (j, slot) in slots.iter().enumerate() {
                let source = (j > 0 && rng.random_bool(spec.rate)).then(|| rng.random_range(0..j));
                let form = match source {
                    Some(k) => forms[k].clone(),
                    None => fresh_form(&mut rng, spec, &forms, &used_forms)?,
                };
                if spec.collision_free {
                    used_forms.insert(form.clone());
                }
                syncretism
                    .cells
                    .insert((lexeme.clone(), slot.clone()), source.map(|k| slots[k].clone()));
                entries.push(LexiconEntry::new(lexeme.clone(), slot.clone(), form.clone()));
                forms.push(form);
            }
        }
    }
    let lexicon = Lexicon::from_entries(entries, Overabundance::Error)?;
    Ok(SyntheticLexicon { lexicon, syncretism })
}

fn fresh_form(
    rng: &mut ChaCha8Rng,
    spec: &SynthSpec,
    paradigm: &[String],
    used: &HashSet<String>,
) -> Result<String> {
    for _ in 0..10_000 {
        let form = random_form(rng, spec);
        if !paradigm.contains(&form) && !used.contains(&form) {
            return Ok(form);
        }
    }
    Err(Error::InvalidArgument(
        "alphabet and length range are too small for the requested lexicon".into(),
    ))
}

/// A FREE model over `lexicon` whose lexeme and slot logits are drawn from
/// N(0, skew²). Tag logits are zero, so `skew = 0` gives uniform factors.
pub fn skewed_free_model(lexicon: Arc<Lexicon>, skew: f64, seed: u64) -> Result<Model> {
    if !(skew >= 0.0 && skew.is_finite()) {
        return Err(Error::InvalidArgument("skew must be non-negative".into()));
    }
    let mut model = Model::new(lexicon, SlotModelKind::Free)?;
    let layout = model.layout().clone();
    let mut rng = rng::stream(seed, "synth-truth");
    let params = model.params_mut();
    // Lexeme and slot weights are adjacent in the FREE layout.
    for p in &mut params[layout.lexemes.start..layout.slots.end] {
        let z: f64 = StandardNormal.sample(&mut rng);
        *p = skew * z;
    }
    Ok(model)
}

/// Draws `num_tokens` i.i.d. tokens from the model. Returns the surface
/// counts and the hidden analysis of every token.
pub fn sample_corpus(model: &Model, num_tokens: u64, seed: u64) -> Result<(CountTable, ReferenceCounts)> {
    if num_tokens == 0 {
        return Err(Error::InvalidArgument("must sample at least one token".into()));
    }
    let lexicon = model.lexicon();
    let sampler = AncestralSampler::new(model)?;
    let mut rng = rng::stream(seed, "synth-corpus");
    let mut tallies: BTreeMap<(usize, usize, &str), u64> = BTreeMap::new();
    let mut accepted = 0u64;
    let mut rejected = 0u64;
    while accepted < num_tokens {
        match sampler.draw(&mut rng) {
            Some(d) => {
                *tallies.entry((d.lexeme, d.slot, d.form)).or_insert(0) += 1;
                accepted += 1;
            }
            None => {
                rejected += 1;
                if rejected > 1000 * num_tokens.max(1000) {
                    return Err(Error::Numerical(
                        "the model almost never produces a listed form".into(),
                    ));
                }
            }
        }
    }
    let mut counts = CountTable::new();
    let mut reference = ReferenceCounts::new();
    for ((l, s, form), n) in tallies {
        let analysis = Analysis {
            tag: lexicon.tag(lexicon.lexeme_tag(l)).clone(),
            lexeme: lexicon.lexeme(l).clone(),
            slot: lexicon.slot(s).clone(),
        };
        counts.add(form, n as f64)?;
        reference.add(analysis, form, n as f64)?;
    }
    Ok((counts, reference))
}
