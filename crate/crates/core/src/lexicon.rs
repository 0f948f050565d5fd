//! Inflected lexicons: ⟨tag, lexeme, slot, form⟩ tuples and the indexes the
//! model needs over them.
//!
//! Entries are read from UniMorph TSV (`lemma<TAB>form<TAB>F1;F2;...`). One
//! feature of each bundle must be a part-of-speech value; it becomes the
//! [`Tag`]. The remaining features form the [`Slot`]. Bare UniMorph features
//! are mapped to `attribute=value` pairs through a built-in dimension table
//! (`PL` becomes `num=pl`); features the table does not know become
//! `x=<literal>`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::Range;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const FEATURE_TABLE: &str = include_str!("../data/unimorph_features.tsv");

/// Attribute used for the part-of-speech coordinate of the feature space.
pub const POS_ATTRIBUTE: &str = "pos";
/// Attribute given to features missing from the dimension table.
pub const UNKNOWN_ATTRIBUTE: &str = "x";

struct FeatureTable {
    forward: HashMap<&'static str, &'static str>,
    reverse: HashMap<(&'static str, String), &'static str>,
}

fn feature_table() -> &'static FeatureTable {
    static TABLE: OnceLock<FeatureTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut forward = HashMap::new();
        let mut reverse = HashMap::new();
        for line in FEATURE_TABLE.lines() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let (feature, dimension) = line.split_once('\t').expect("feature table row");
            forward.insert(feature, dimension);
            reverse.insert((dimension, canonical_value(dimension, feature)), feature);
        }
        FeatureTable { forward, reverse }
    })
}

fn canonical_value(dimension: &str, feature: &str) -> String {
    if dimension == POS_ATTRIBUTE {
        feature.to_string()
    } else {
        feature.to_lowercase()
    }
}

/// One `attribute=value` pair such as `num=pl`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttributeValue {
    pub attribute: String,
    pub value: String,
}

impl AttributeValue {
    pub fn new(attribute: impl Into<String>, value: impl Into<String>) -> Self {
        AttributeValue {
            attribute: attribute.into(),
            value: value.into(),
        }
    }

    /// Maps a bare UniMorph feature to its attribute-value pair.
    pub fn from_unimorph(feature: &str) -> Self {
        match feature_table().forward.get(feature) {
            Some(&dimension) => AttributeValue::new(dimension, canonical_value(dimension, feature)),
            None => AttributeValue::new(UNKNOWN_ATTRIBUTE, feature),
        }
    }

    /// Inverse of [`AttributeValue::from_unimorph`].
    pub fn to_unimorph(&self) -> String {
        if self.attribute == UNKNOWN_ATTRIBUTE {
            return self.value.clone();
        }
        let table = feature_table();
        match table.reverse.get(&(self.attribute.as_str(), self.value.clone())) {
            Some(feature) => (*feature).to_string(),
            None => format!("{}={}", self.attribute, self.value),
        }
    }

    fn is_pos(&self) -> bool {
        self.attribute == POS_ATTRIBUTE
    }
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.attribute, self.value)
    }
}

/// An inflectional slot: a bundle of features, without the POS.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Slot {
    features: BTreeSet<AttributeValue>,
}

impl Slot {
    pub fn new(features: impl IntoIterator<Item = AttributeValue>) -> Self {
        Slot {
            features: features.into_iter().collect(),
        }
    }

    pub fn features(&self) -> impl Iterator<Item = &AttributeValue> {
        self.features.iter()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn contains(&self, feature: &AttributeValue) -> bool {
        self.features.contains(feature)
    }

    /// Value of `attribute`, if the slot has exactly one.
    pub fn value_of(&self, attribute: &str) -> Option<&str> {
        let mut values = self.features.iter().filter(|f| f.attribute == attribute);
        let first = values.next()?;
        match values.next() {
            Some(_) => None,
            None => Some(first.value.as_str()),
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        f.write_str("{")?;
        for feature in &self.features {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            write!(f, "{feature}")?;
        }
        f.write_str("}")
    }
}

/// Part-of-speech tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Tag(String);

impl Tag {
    pub fn new(pos: impl Into<String>) -> Self {
        Tag(pos.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn feature(&self) -> AttributeValue {
        AttributeValue::new(POS_ATTRIBUTE, self.0.clone())
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A lexeme. Lemmas can be ambiguous, so the id pairs the lemma with its tag
/// and a disambiguator (always 0 for data read from UniMorph).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LexemeId {
    pub tag: Tag,
    pub lemma: String,
    pub disambiguator: u32,
}

impl LexemeId {
    pub fn new(tag: Tag, lemma: impl Into<String>) -> Self {
        LexemeId {
            tag,
            lemma: lemma.into(),
            disambiguator: 0,
        }
    }
}

/// A latent analysis ⟨t, ℓ, s⟩ of a surface form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Analysis {
    pub tag: Tag,
    pub lexeme: LexemeId,
    pub slot: Slot,
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{}, {}, {}⟩", self.tag, self.lexeme.lemma, self.slot)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LexiconEntry {
    pub tag: Tag,
    pub lexeme: LexemeId,
    pub slot: Slot,
    pub form: String,
}

impl LexiconEntry {
    pub fn new(lexeme: LexemeId, slot: Slot, form: impl Into<String>) -> Self {
        LexiconEntry {
            tag: lexeme.tag.clone(),
            lexeme,
            slot,
            form: form.into(),
        }
    }

    pub fn analysis(&self) -> Analysis {
        Analysis {
            tag: self.tag.clone(),
            lexeme: self.lexeme.clone(),
            slot: self.slot.clone(),
        }
    }
}

/// How to treat a ⟨t, ℓ, s⟩ listed with more than one form.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Overabundance {
    /// Reject the lexicon.
    #[default]
    Error,
    /// Split δ uniformly over the listed forms.
    Uniform,
}

/// Index-level view of one analysis of a form.
///
/// `lexeme` and `slot` are global indexes into [`Lexicon::lexeme`] and
/// [`Lexicon::slot`]; `weight` is δ(f | t, ℓ, s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisRef {
    pub tag: usize,
    pub lexeme: usize,
    pub slot: usize,
    pub weight: f64,
}

/// Kinds of ambiguity a surface form can exhibit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ambiguity {
    /// Not in the lexicon.
    Unknown,
    Unambiguous,
    /// Fills several slots of one paradigm.
    Syncretic,
    /// Belongs to several paradigms, each at most once.
    InterParadigmatic,
    Both,
}

/// An inflected lexicon with its derived indexes. Immutable once built.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: BTreeSet<LexiconEntry>,
    tags: Vec<Tag>,
    lexemes: Vec<LexemeId>,
    slots: Vec<Slot>,
    lexeme_tag: Vec<usize>,
    slot_tag: Vec<usize>,
    lexeme_ranges: Vec<Range<usize>>,
    slot_ranges: Vec<Range<usize>>,
    forms: BTreeMap<String, Vec<AnalysisRef>>,
    realizations: BTreeMap<(usize, usize), Vec<String>>,
    overabundance: Overabundance,
}

impl Lexicon {
    /// Builds a lexicon from entries. Duplicate entries collapse.
    pub fn from_entries(
        entries: impl IntoIterator<Item = LexiconEntry>,
        overabundance: Overabundance,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for entry in entries {
            validate_entry(&entry)?;
            set.insert(entry);
        }
        Self::build(set, overabundance, &HashMap::new())
    }

    fn build(
        entries: BTreeSet<LexiconEntry>,
        overabundance: Overabundance,
        lines: &HashMap<LexiconEntry, usize>,
    ) -> Result<Self> {
        let mut per_tag: BTreeMap<&Tag, (BTreeSet<&LexemeId>, BTreeSet<&Slot>)> = BTreeMap::new();
        for e in &entries {
            let (lexemes, slots) = per_tag.entry(&e.tag).or_default();
            lexemes.insert(&e.lexeme);
            slots.insert(&e.slot);
        }

        let mut tags = Vec::new();
        let mut lexemes = Vec::new();
        let mut slots = Vec::new();
        let mut lexeme_tag = Vec::new();
        let mut slot_tag = Vec::new();
        let mut lexeme_ranges = Vec::new();
        let mut slot_ranges = Vec::new();
        let mut lexeme_index = HashMap::new();
        let mut slot_index = HashMap::new();
        for (t, (tag, (tag_lexemes, tag_slots))) in per_tag.into_iter().enumerate() {
            tags.push(tag.clone());
            let start = lexemes.len();
            for lexeme in tag_lexemes {
                lexeme_index.insert(lexeme.clone(), lexemes.len());
                lexemes.push(lexeme.clone());
                lexeme_tag.push(t);
            }
            lexeme_ranges.push(start..lexemes.len());
            let start = slots.len();
            for slot in tag_slots {
                slot_index.insert((t, slot.clone()), slots.len());
                slots.push(slot.clone());
                slot_tag.push(t);
            }
            slot_ranges.push(start..slots.len());
        }

        let mut realizations: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
        let mut keyed = Vec::with_capacity(entries.len());
        for e in &entries {
            let l = lexeme_index[&e.lexeme];
            let t = lexeme_tag[l];
            let s = slot_index[&(t, e.slot.clone())];
            let forms = realizations.entry((l, s)).or_default();
            if let (Overabundance::Error, Some(first)) = (overabundance, forms.first()) {
                return Err(Error::Overabundance {
                    line: lines.get(e).copied().unwrap_or(0),
                    message: format!(
                        "⟨{}, {}, {}⟩ is realized as both {first:?} and {:?}",
                        e.tag, e.lexeme.lemma, e.slot, e.form
                    ),
                });
            }
            forms.push(e.form.clone());
            keyed.push((t, l, s, e.form.as_str()));
        }

        let mut forms: BTreeMap<String, Vec<AnalysisRef>> = BTreeMap::new();
        for (t, l, s, form) in keyed {
            let weight = 1.0 / realizations[&(l, s)].len() as f64;
            forms.entry(form.to_string()).or_default().push(AnalysisRef {
                tag: t,
                lexeme: l,
                slot: s,
                weight,
            });
        }
        for refs in forms.values_mut() {
            refs.sort_by_key(|a| (a.tag, a.lexeme, a.slot));
        }

        Ok(Lexicon {
            entries,
            tags,
            lexemes,
            slots,
            lexeme_tag,
            slot_tag,
            lexeme_ranges,
            slot_ranges,
            forms,
            realizations,
            overabundance,
        })
    }

    pub fn entries(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn overabundance(&self) -> Overabundance {
        self.overabundance
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn tag(&self, t: usize) -> &Tag {
        &self.tags[t]
    }

    pub fn tag_index(&self, tag: &Tag) -> Option<usize> {
        self.tags.binary_search(tag).ok()
    }

    /// All listed ⟨t, ℓ⟩ pairs, grouped by tag.
    pub fn lexemes(&self) -> &[LexemeId] {
        &self.lexemes
    }

    pub fn lexeme(&self, l: usize) -> &LexemeId {
        &self.lexemes[l]
    }

    pub fn lexeme_tag(&self, l: usize) -> usize {
        self.lexeme_tag[l]
    }

    /// Global indexes of the lexemes listed with tag `t`.
    pub fn lexeme_range(&self, t: usize) -> Range<usize> {
        self.lexeme_ranges[t].clone()
    }

    pub fn lexeme_index(&self, lexeme: &LexemeId) -> Option<usize> {
        let t = self.tag_index(&lexeme.tag)?;
        let range = self.lexeme_range(t);
        self.lexemes[range.clone()]
            .binary_search(lexeme)
            .ok()
            .map(|i| range.start + i)
    }

    /// All listed ⟨t, s⟩ pairs, grouped by tag.
    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn slot(&self, s: usize) -> &Slot {
        &self.slots[s]
    }

    pub fn slot_tag(&self, s: usize) -> usize {
        self.slot_tag[s]
    }

    pub fn slot_range(&self, t: usize) -> Range<usize> {
        self.slot_ranges[t].clone()
    }

    pub fn slot_index(&self, tag: &Tag, slot: &Slot) -> Option<usize> {
        let t = self.tag_index(tag)?;
        let range = self.slot_range(t);
        self.slots[range.clone()]
            .binary_search(slot)
            .ok()
            .map(|i| range.start + i)
    }

    /// Slots listed with `tag`, in canonical order.
    pub fn slots_of(&self, tag: &Tag) -> Option<&[Slot]> {
        self.tag_index(tag).map(|t| &self.slots[self.slot_range(t)])
    }

    /// Lexemes listed with `tag`, in canonical order.
    pub fn lexemes_of(&self, tag: &Tag) -> Option<&[LexemeId]> {
        self.tag_index(tag).map(|t| &self.lexemes[self.lexeme_range(t)])
    }

    /// All distinct surface forms, sorted.
    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.forms.keys().map(String::as_str)
    }

    pub fn num_forms(&self) -> usize {
        self.forms.len()
    }

    pub fn contains_form(&self, form: &str) -> bool {
        self.forms.contains_key(form)
    }

    /// Index-level analyses of `form`; empty if the form is not listed.
    pub fn analysis_refs(&self, form: &str) -> &[AnalysisRef] {
        self.forms.get(form).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every analysis whose entry realizes `form`, in canonical order.
    pub fn analyses_of(&self, form: &str) -> Vec<Analysis> {
        self.analysis_refs(form)
            .iter()
            .map(|a| self.analysis(a))
            .collect()
    }

    pub fn analysis(&self, a: &AnalysisRef) -> Analysis {
        Analysis {
            tag: self.tags[a.tag].clone(),
            lexeme: self.lexemes[a.lexeme].clone(),
            slot: self.slots[a.slot].clone(),
        }
    }

    /// Forms realizing the lexeme/slot pair given by global indexes.
    pub fn realizations(&self, lexeme: usize, slot: usize) -> &[String] {
        self.realizations
            .get(&(lexeme, slot))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Global index pair for an analysis, if the lexicon lists it.
    pub fn locate(&self, analysis: &Analysis) -> Option<(usize, usize)> {
        let l = self.lexeme_index(&analysis.lexeme)?;
        let s = self.slot_index(&analysis.tag, &analysis.slot)?;
        if analysis.lexeme.tag != analysis.tag {
            return None;
        }
        Some((l, s))
    }

    /// The realization function δ(f | t, ℓ, s).
    pub fn delta(&self, analysis: &Analysis, form: &str) -> f64 {
        match self.locate(analysis) {
            Some((l, s)) => {
                let forms = self.realizations(l, s);
                if forms.iter().any(|f| f == form) {
                    1.0 / forms.len() as f64
                } else {
                    0.0
                }
            }
            None => 0.0,
        }
    }

    pub fn contains(&self, analysis: &Analysis, form: &str) -> bool {
        self.delta(analysis, form) > 0.0
    }

    pub fn ambiguity(&self, form: &str) -> Ambiguity {
        let refs = self.analysis_refs(form);
        if refs.is_empty() {
            return Ambiguity::Unknown;
        }
        let mut per_paradigm: BTreeMap<usize, usize> = BTreeMap::new();
        for a in refs {
            *per_paradigm.entry(a.lexeme).or_default() += 1;
        }
        let syncretic = per_paradigm.values().any(|&n| n > 1);
        let inter = per_paradigm.len() > 1;
        match (syncretic, inter) {
            (false, false) => Ambiguity::Unambiguous,
            (true, false) => Ambiguity::Syncretic,
            (false, true) => Ambiguity::InterParadigmatic,
            (true, true) => Ambiguity::Both,
        }
    }

    pub fn feature_space(&self) -> FeatureSpace {
        FeatureSpace::from_lexicon(self)
    }

    /// Canonical UniMorph TSV, one line per entry in sorted order.
    pub fn to_unimorph(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.lexeme.lemma);
            out.push('\t');
            out.push_str(&e.form);
            out.push('\t');
            out.push_str(&format_bundle(&e.tag, &e.slot));
            out.push('\n');
        }
        out
    }

    /// Hex SHA-256 of the canonical serialization; identifies the lexicon
    /// a checkpoint was trained against.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_unimorph().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn validate_entry(e: &LexiconEntry) -> Result<()> {
    if e.form.is_empty() {
        return Err(Error::InvalidEntry("empty form".into()));
    }
    if e.tag.as_str().is_empty() {
        return Err(Error::InvalidEntry("empty tag".into()));
    }
    if e.lexeme.tag != e.tag {
        return Err(Error::InvalidEntry(format!(
            "lexeme {} has tag {} but entry has tag {}",
            e.lexeme.lemma, e.lexeme.tag, e.tag
        )));
    }
    Ok(())
}

/// Splits a `;`-separated UniMorph bundle into its tag and slot.
pub fn parse_bundle(bundle: &str) -> std::result::Result<(Tag, Slot), String> {
    let bundle = bundle.trim();
    if bundle.is_empty() {
        return Err("empty feature bundle".into());
    }
    let mut pos = None;
    let mut features = BTreeSet::new();
    for raw in bundle.split(';') {
        let raw = raw.trim();
        if raw.is_empty() {
            return Err(format!("empty feature in bundle {bundle:?}"));
        }
        let feature = AttributeValue::from_unimorph(raw);
        if feature.is_pos() {
            if pos.replace(feature.value).is_some() {
                return Err(format!("several part-of-speech features in {bundle:?}"));
            }
        } else if !features.insert(feature) {
            return Err(format!("feature {raw} repeated in {bundle:?}"));
        }
    }
    let pos = pos.ok_or_else(|| format!("no part-of-speech feature in {bundle:?}"))?;
    Ok((Tag::new(pos), Slot { features }))
}

/// Inverse of [`parse_bundle`]: POS first, then slot features in order.
pub fn format_bundle(tag: &Tag, slot: &Slot) -> String {
    let mut parts = vec![tag.feature().to_unimorph()];
    parts.extend(slot.features().map(AttributeValue::to_unimorph));
    parts.join(";")
}

/// Splits a TSV line into fields after removing a trailing CR.
pub(crate) fn tsv_fields(line: &str) -> Vec<&str> {
    line.strip_suffix('\r').unwrap_or(line).split('\t').collect()
}

/// Parses a UniMorph TSV document.
pub fn parse_unimorph(text: &str, overabundance: Overabundance) -> Result<Lexicon> {
    let mut entries = BTreeSet::new();
    let mut lines = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields = tsv_fields(line);
        if fields.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let (lemma, form) = (fields[0].trim(), fields[1].trim());
        if lemma.is_empty() || form.is_empty() {
            return Err(Error::parse(lineno, "empty lemma or form"));
        }
        let (tag, slot) = parse_bundle(fields[2]).map_err(|m| Error::parse(lineno, m))?;
        let entry = LexiconEntry::new(LexemeId::new(tag, lemma), slot, form);
        lines.entry(entry.clone()).or_insert(lineno);
        entries.insert(entry);
    }
    Lexicon::build(entries, overabundance, &lines)
}

/// Coordinates of the multi-hot feature vectors `v_{t,s}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpace {
    features: Vec<AttributeValue>,
    index: HashMap<AttributeValue, usize>,
}

impl FeatureSpace {
    pub fn from_lexicon(lexicon: &Lexicon) -> Self {
        let mut all = BTreeSet::new();
        for tag in lexicon.tags() {
            all.insert(tag.feature());
        }
        for slot in lexicon.slots() {
            all.extend(slot.features().cloned());
        }
        Self::from_features(all)
    }

    /// Coordinates follow the lexicographic order of `attribute=value`.
    pub fn from_features(features: impl IntoIterator<Item = AttributeValue>) -> Self {
        let mut keyed: Vec<(String, AttributeValue)> = features
            .into_iter()
            .map(|f| (f.to_string(), f))
            .collect();
        keyed.sort();
        keyed.dedup_by(|a, b| a.1 == b.1);
        let features: Vec<AttributeValue> = keyed.into_iter().map(|(_, f)| f).collect();
        let index = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i))
            .collect();
        FeatureSpace { features, index }
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[AttributeValue] {
        &self.features
    }

    pub fn coordinate(&self, feature: &AttributeValue) -> Option<usize> {
        self.index.get(feature).copied()
    }

    /// Sorted indexes of the coordinates set in `v_{t,s}`.
    pub fn active_coordinates(&self, tag: &Tag, slot: &Slot) -> Result<Vec<usize>> {
        let mut coords = Vec::with_capacity(slot.len() + 1);
        for feature in std::iter::once(tag.feature()).chain(slot.features().cloned()) {
            let c = self
                .coordinate(&feature)
                .ok_or_else(|| Error::FeatureNotInSpace(feature.to_string()))?;
            coords.push(c);
        }
        coords.sort_unstable();
        Ok(coords)
    }

    /// The multi-hot vector `v_{t,s}`.
    pub fn featurize(&self, tag: &Tag, slot: &Slot) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.dim()];
        for c in self.active_coordinates(tag, slot)? {
            v[c] = 1.0;
        }
        Ok(v)
    }
}



#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    fn bundle() -> impl Strategy<Value = String> {
        let pos = prop::sample::select(vec!["N", "V", "ADJ"]);
        let feats = prop::sample::subsequence(
            vec!["NOM", "ACC", "GEN", "SG", "PL", "PST", "PRS", "1", "3", "FOO"],
            0..4,
        );
        (pos, feats).prop_map(|(p, f)| {
            let mut parts = vec![p];
            parts.extend(f);
            parts.join(";")
        })
    }

    fn document() -> impl Strategy<Value = String> {
        prop::collection::vec(("[a-c]{1,3}", "[a-e]{1,4}", bundle()), 0..25).prop_map(|rows| {
            rows.into_iter()
                .map(|(l, f, b)| format!("{l}\t{f}\t{b}\n"))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn round_trip_preserves_entries(text in document()) {
            let lex = parse_unimorph(&text, Overabundance::Uniform).unwrap();
            let again = parse_unimorph(&lex.to_unimorph(), Overabundance::Uniform).unwrap();
            prop_assert!(lex.entries().eq(again.entries()));
            prop_assert_eq!(lex.to_unimorph(), again.to_unimorph());
        }

        #[test]
        fn featurize_is_injective(text in document()) {
            let lex = parse_unimorph(&text, Overabundance::Uniform).unwrap();
            let space = lex.feature_space();
            let mut seen = std::collections::HashMap::new();
            for s in 0..lex.slots().len() {
                let tag = lex.tag(lex.slot_tag(s));
                let v: Vec<u8> = space.featurize(tag, lex.slot(s)).unwrap()
                    .iter().map(|&x| x as u8).collect();
                prop_assert_eq!(v.iter().filter(|&&x| x == 1).count(), lex.slot(s).len() + 1);
                if let Some(prev) = seen.insert(v, s) {
                    prop_assert!(false, "slots {} and {} share a vector", prev, s);
                }
            }
        }

        #[test]
        fn every_entry_is_indexed(text in document()) {
            let lex = parse_unimorph(&text, Overabundance::Uniform).unwrap();
            for e in lex.entries() {
                prop_assert!(lex.delta(&e.analysis(), &e.form) > 0.0);
                prop_assert!(lex.analyses_of(&e.form).contains(&e.analysis()));
            }
            for form in lex.forms() {
                prop_assert!(!lex.analysis_refs(form).is_empty());
            }
        }
    }
}
