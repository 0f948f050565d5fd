//! Held-out perplexity and divergence from supervised analyses.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use crate::counts::CountTable;
use crate::error::{Error, Result};
use crate::lexicon::{format_bundle, parse_bundle, tsv_fields, Analysis, LexemeId, Lexicon};
use crate::model::{AnalysisDistribution, Model};

pub const REFERENCE_HEADER: &str = "lemma\tform\tfeatures\tcount";

/// Token counts of disambiguated ⟨t, ℓ, s, f⟩ tuples.
///
/// Tuples the lexicon does not list can be moved out with
/// [`ReferenceCounts::restrict_to`]; their total is kept in
/// [`ReferenceCounts::dropped`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceCounts {
    counts: BTreeMap<String, BTreeMap<Analysis, f64>>,
    dropped: f64,
}

impl ReferenceCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, analysis: Analysis, form: impl Into<String>, count: f64) -> Result<()> {
        if !(count.is_finite() && count >= 0.0) {
            return Err(Error::InvalidArgument(format!("count {count} is not a non-negative number")));
        }
        *self
            .counts
            .entry(form.into())
            .or_default()
            .entry(analysis)
            .or_insert(0.0) += count;
        Ok(())
    }

    /// Replaces the counts of one form wholesale.
    pub(crate) fn set_form(&mut self, form: String, entries: BTreeMap<Analysis, f64>) {
        self.counts.insert(form, entries);
    }

    pub fn get(&self, analysis: &Analysis, form: &str) -> f64 {
        self.counts
            .get(form)
            .and_then(|m| m.get(analysis))
            .copied()
            .unwrap_or(0.0)
    }

    /// `(form, analysis, count)` in form order, then analysis order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Analysis, f64)> {
        self.counts
            .iter()
            .flat_map(|(f, m)| m.iter().map(move |(a, &c)| (f.as_str(), a, c)))
    }

    pub fn forms(&self) -> impl Iterator<Item = (&str, &BTreeMap<Analysis, f64>)> {
        self.counts.iter().map(|(f, m)| (f.as_str(), m))
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total reference tokens per form, each summed in analysis order.
    pub fn form_totals(&self) -> BTreeMap<&str, f64> {
        self.counts
            .iter()
            .map(|(f, m)| (f.as_str(), m.values().sum()))
            .collect()
    }

    pub fn form_counts(&self) -> CountTable {
        self.form_totals()
            .into_iter()
            .map(|(f, c)| (f.to_string(), c))
            .collect()
    }

    /// Sum over forms of the per-form totals.
    pub fn total(&self) -> f64 {
        self.form_totals().values().sum()
    }

    pub fn dropped(&self) -> f64 {
        self.dropped
    }

    /// Keeps tuples the lexicon lists and moves the rest to `dropped`.
    pub fn restrict_to(&self, lexicon: &Lexicon) -> ReferenceCounts {
        let mut kept = ReferenceCounts {
            counts: BTreeMap::new(),
            dropped: self.dropped,
        };
        for (form, analysis, c) in self.iter() {
            if lexicon.contains(analysis, form) {
                kept.add(analysis.clone(), form, c).expect("valid count");
            } else {
                kept.dropped += c;
            }
        }
        kept
    }

    /// Reads `lemma<TAB>form<TAB>features<TAB>count` rows after a header line.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut refs = ReferenceCounts::new();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields = tsv_fields(line);
            if !header_seen {
                if fields.first().map(|f| f.trim()) != Some("lemma") {
                    return Err(Error::parse(lineno, format!("expected header {REFERENCE_HEADER:?}")));
                }
                header_seen = true;
                continue;
            }
            if fields.len() != 4 {
                return Err(Error::parse(
                    lineno,
                    format!("expected 4 tab-separated fields, found {}", fields.len()),
                ));
            }
            let (tag, slot) = parse_bundle(fields[2]).map_err(|m| Error::parse(lineno, m))?;
            let count: f64 = fields[3]
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad count {:?}", fields[3])))?;
            let analysis = Analysis {
                lexeme: LexemeId::new(tag.clone(), fields[0].trim()),
                tag,
                slot,
            };
            refs.add(analysis, fields[1].trim(), count)
                .map_err(|e| Error::parse(lineno, e.to_string()))?;
        }
        Ok(refs)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(REFERENCE_HEADER);
        out.push('\n');
        for (form, a, c) in self.iter() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                a.lexeme.lemma,
                form,
                format_bundle(&a.tag, &a.slot),
                c
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerplexityReport {
    pub perplexity: f64,
    /// In-lexicon tokens the perplexity is averaged over.
    pub token_count: f64,
    pub oov_tokens_dropped: f64,
}

/// `2^(−(1/N) Σ_f c(f) log₂ p(f))` over in-lexicon forms.
pub fn perplexity(model: &Model, counts: &CountTable) -> Result<PerplexityReport> {
    let (kept, dropped) = counts.restrict_to(model.lexicon());
    let n = kept.total();
    if n <= 0.0 {
        return Err(Error::NoTokens);
    }
    let inf = model.inference();
    let mut log_likelihood = 0.0;
    for (form, c) in kept.iter() {
        if c > 0.0 {
            log_likelihood += c * inf.log_marginal(form);
        }
    }
    let bits = -log_likelihood / (n * LN_2);
    if !bits.is_finite() {
        return Err(Error::Numerical("held-out log-likelihood is not finite".into()));
    }
    Ok(PerplexityReport {
        perplexity: bits.exp2(),
        token_count: n,
        oov_tokens_dropped: dropped,
    })
}

/// The supervised maximum-likelihood posterior p̂(t,ℓ,s | f) per form.
pub fn supervised_mle(reference: &ReferenceCounts) -> Vec<AnalysisDistribution> {
    reference
        .forms()
        .filter_map(|(form, m)| {
            let total: f64 = m.values().sum();
            (total > 0.0).then(|| AnalysisDistribution {
                form: form.to_string(),
                entries: m
                    .iter()
                    .filter(|(_, &c)| c > 0.0)
                    .map(|(a, &c)| (a.clone(), c / total))
                    .collect(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlReport {
    /// `Σ_f p̂(f) KL(p̂(·|f) ‖ p(·|f))` in bits.
    pub weighted_kl_bits: f64,
    /// `(1/N) Σ_i log₂ p̂(aᵢ|fᵢ) / p(aᵢ|fᵢ)` in bits.
    pub token_average_bits: f64,
    pub token_count: f64,
    pub dropped: f64,
}

impl KlReport {
    pub fn identity_gap(&self) -> f64 {
        (self.weighted_kl_bits - self.token_average_bits).abs()
    }
}

/// KL divergence of the model posterior from the supervised one, computed
/// both as a form-weighted KL and as a per-token average.
///
/// Every reference tuple must be in the lexicon; filter with
/// [`ReferenceCounts::restrict_to`] first.
pub fn kl_eval(model: &Model, reference: &ReferenceCounts) -> Result<KlReport> {
    let lexicon = model.lexicon();
    for (form, a, _) in reference.iter() {
        if !lexicon.contains(a, form) {
            return Err(Error::InvalidArgument(format!(
                "reference tuple {a} → {form:?} is not in the lexicon"
            )));
        }
    }
    let n = reference.total();
    if n <= 0.0 {
        return Err(Error::NoTokens);
    }
    let inf = model.inference();
    let mut posteriors = BTreeMap::new();
    for (form, _) in reference.forms() {
        posteriors.insert(form, inf.posterior(form)?);
    }

    let totals = reference.form_totals();
    let mut weighted = 0.0;
    for p_hat in supervised_mle(reference) {
        let post = &posteriors[p_hat.form.as_str()];
        let n_f = totals[p_hat.form.as_str()];
        let kl: f64 = p_hat
            .entries
            .iter()
            .map(|(a, q)| q * (q / post.probability(a)).log2())
            .sum();
        weighted += (n_f / n) * kl;
    }

    let mut token_sum = 0.0;
    for (form, m) in reference.forms() {
        let n_f: f64 = m.values().sum();
        let post = &posteriors[form];
        for (a, &c) in m.iter().filter(|(_, &c)| c > 0.0) {
            token_sum += c * ((c / n_f).log2() - post.probability(a).log2());
        }
    }

    Ok(KlReport {
        weighted_kl_bits: weighted,
        token_average_bits: token_sum / n,
        token_count: n,
        dropped: reference.dropped(),
    })
}
