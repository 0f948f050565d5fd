//! Type-level disambiguation: partitioning form counts among analyses, and
//! drawing distinct word types in the order a corpus would reveal them.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::counts::CountTable;
use crate::error::{Error, Result};
use crate::eval::ReferenceCounts;
use crate::lexicon::Analysis;
use crate::model::Model;
use crate::rng;
use crate::sampling::AncestralSampler;

/// Splits each `c(f)` over the analyses of `f` in proportion to the model
/// posterior. The parts of each form sum to `c(f)` exactly when added in
/// analysis order.
pub fn fractional_counts(model: &Model, counts: &CountTable) -> Result<ReferenceCounts> {
    let inf = model.inference();
    let mut out = ReferenceCounts::new();
    for (form, c) in counts.iter() {
        let mut post = inf.posterior(form)?.entries;
        if c == 0.0 {
            continue;
        }
        post.sort_by(|a, b| a.0.cmp(&b.0));
        let mut parts: Vec<f64> = post.iter().map(|(_, p)| c * p).collect();
        exact_partition(&mut parts, c);
        let entries: BTreeMap<Analysis, f64> = post.into_iter().map(|(a, _)| a).zip(parts).collect();
        out.set_form(form.to_string(), entries);
    }
    Ok(out)
}

fn ordered_sum(parts: &[f64]) -> f64 {
    parts.iter().sum()
}

/// Adjusts `parts` (non-negative) so their left-to-right sum is exactly
/// `target`. One part is moved to the smallest value that reaches the
/// target; if rounding ties skip over it, a neighbour is moved one ulp and
/// the search repeated.
fn exact_partition(parts: &mut [f64], target: f64) {
    if parts.is_empty() || ordered_sum(parts) == target {
        return;
    }
    let mut order: Vec<usize> = (0..parts.len()).collect();
    order.sort_by(|&a, &b| parts[b].total_cmp(&parts[a]));
    for attempt in 0..64 {
        for &k in &order {
            if settle(parts, k, target) {
                return;
            }
        }
        // No single part can hit the target; perturb one part and retry.
        let j = order[(attempt + 1) % order.len()];
        parts[j] = if attempt % 2 == 0 { parts[j].next_up() } else { parts[j].next_down().max(0.0) };
    }
    debug_assert!(false, "could not partition {target} exactly");
}

/// Sets `parts[k]` to the smallest non-negative float whose ordered sum
/// reaches `target`; true if the sum then equals it.
fn settle(parts: &mut [f64], k: usize, target: f64) -> bool {
    let original = parts[k];
    let mut lo = 0u64;
    let mut hi = target.to_bits();
    parts[k] = f64::from_bits(hi);
    if ordered_sum(parts) < target {
        parts[k] = original;
        return false;
    }
    // Non-negative floats order like their bit patterns.
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        parts[k] = f64::from_bits(mid);
        if ordered_sum(parts) >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    parts[k] = f64::from_bits(lo);
    if ordered_sum(parts) == target {
        return true;
    }
    parts[k] = original;
    false
}

/// What counts as a distinct word type when sampling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SampleMode {
    /// Distinct ⟨t, ℓ, s, f⟩ tuples.
    #[default]
    Tuples,
    /// Distinct surface forms.
    Forms,
}

impl FromStr for SampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tuples" => Ok(SampleMode::Tuples),
            "forms" => Ok(SampleMode::Forms),
            _ => Err(Error::InvalidArgument(format!("unknown sample mode {s:?}"))),
        }
    }
}

impl fmt::Display for SampleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleMode::Tuples => "tuples",
            SampleMode::Forms => "forms",
        })
    }
}

/// A sampled word type. `analysis` is set in [`SampleMode::Tuples`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledType {
    pub form: String,
    pub analysis: Option<Analysis>,
}

pub const DEFAULT_MAX_DRAWS: u64 = 50_000_000;

/// Simulates a corpus drawn i.i.d. from the model and returns the first `n`
/// distinct types in order of first occurrence.
pub fn sample_types(
    model: &Model,
    n: usize,
    mode: SampleMode,
    seed: u64,
    max_draws: u64,
) -> Result<Vec<SampledType>> {
    if n == 0 {
        return Err(Error::InvalidArgument("must sample at least one type".into()));
    }
    let lexicon = model.lexicon();
    let support = match mode {
        SampleMode::Tuples => lexicon.len(),
        SampleMode::Forms => lexicon.num_forms(),
    };
    if n > support {
        return Err(Error::InsufficientSupport {
            requested: n,
            found: support,
            draws: 0,
        });
    }
    let sampler = AncestralSampler::new(model)?;
    let mut rng = rng::stream(seed, "sample-types");
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    let mut draws = 0;
    while out.len() < n {
        if draws >= max_draws {
            return Err(Error::InsufficientSupport {
                requested: n,
                found: out.len(),
                draws,
            });
        }
        draws += 1;
        let Some(d) = sampler.draw(&mut rng) else {
            continue;
        };
        let key = match mode {
            SampleMode::Tuples => (d.lexeme, d.slot, d.form),
            SampleMode::Forms => (usize::MAX, usize::MAX, d.form),
        };
        if seen.insert(key) {
            out.push(SampledType {
                form: d.form.to_string(),
                analysis: match mode {
                    SampleMode::Tuples => Some(Analysis {
                        tag: lexicon.tag(d.tag).clone(),
                        lexeme: lexicon.lexeme(d.lexeme).clone(),
                        slot: lexicon.slot(d.slot).clone(),
                    }),
                    SampleMode::Forms => None,
                },
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{parse_unimorph, Overabundance};
    use crate::model::SlotModelKind;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn model(text: &str, kind: SlotModelKind) -> Model {
        Model::new(Arc::new(parse_unimorph(text, Overabundance::Error).unwrap()), kind).unwrap()
    }

    #[test]
    fn unambiguous_form_keeps_its_count() {
        let m = model("a\tx\tN;SG\na\ty\tN;PL\n", SlotModelKind::Free);
        let mut c = CountTable::new();
        c.add("x", 7.0).unwrap();
        let fc = fractional_counts(&m, &c).unwrap();
        let rows: Vec<_> = fc.iter().collect();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].2, 7.0);
    }

    #[test]
    fn unif_splits_evenly() {
        let m = model("a\tx\tN;NOM;PL\na\tx\tN;ACC;PL\n", SlotModelKind::Unif);
        let mut c = CountTable::new();
        c.add("x", 10.0).unwrap();
        let fc = fractional_counts(&m, &c).unwrap();
        let values: Vec<f64> = fc.iter().map(|r| r.2).collect();
        assert_eq!(values, [5.0, 5.0]);
    }

    #[test]
    fn unknown_form_is_an_error() {
        let m = model("a\tx\tN;SG\n", SlotModelKind::Unif);
        let c = CountTable::from_text("nope");
        assert!(matches!(fractional_counts(&m, &c), Err(Error::UnknownForm(_))));
    }

    #[test]
    fn sample_rejects_oversized_requests() {
        let m = model("a\tx\tN;SG\na\ty\tN;PL\n", SlotModelKind::Unif);
        assert!(matches!(
            sample_types(&m, 3, SampleMode::Tuples, 0, 1000),
            Err(Error::InsufficientSupport { .. })
        ));
        assert!(sample_types(&m, 0, SampleMode::Tuples, 0, 1000).is_err());
    }

    #[test]
    fn sample_full_support_is_a_permutation() {
        let m = model(crate::lexicon::test_fixtures::GERMAN, SlotModelKind::Unif);
        let lex = m.lexicon().clone();
        let all = sample_types(&m, lex.len(), SampleMode::Tuples, 11, DEFAULT_MAX_DRAWS).unwrap();
        let mut got: Vec<_> = all.iter().map(|s| (s.analysis.clone().unwrap(), s.form.clone())).collect();
        got.sort();
        let mut want: Vec<_> = lex.entries().map(|e| (e.analysis(), e.form.clone())).collect();
        want.sort();
        assert_eq!(got, want);

        let forms = sample_types(&m, lex.num_forms(), SampleMode::Forms, 11, DEFAULT_MAX_DRAWS).unwrap();
        let mut got: Vec<_> = forms.iter().map(|s| s.form.as_str()).collect();
        got.sort();
        assert_eq!(got, lex.forms().collect::<Vec<_>>());
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = model(crate::lexicon::test_fixtures::GERMAN, SlotModelKind::Unif);
        let a = sample_types(&m, 6, SampleMode::Tuples, 5, DEFAULT_MAX_DRAWS).unwrap();
        let b = sample_types(&m, 6, SampleMode::Tuples, 5, DEFAULT_MAX_DRAWS).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn draw_budget_is_enforced() {
        // Two slots; make one nearly impossible so the budget runs out.
        let mut m = model("a\tx\tN;SG\na\ty\tN;PL\n", SlotModelKind::Free);
        let slots = m.layout().slots.clone();
        m.params_mut()[slots.start] = 40.0;
        let err = sample_types(&m, 2, SampleMode::Forms, 1, 1000).unwrap_err();
        assert!(matches!(err, Error::InsufficientSupport { found: 1, draws: 1000, .. }), "{err}");
    }

    proptest! {
        #[test]
        fn partition_sums_exactly(
            probs in prop::collection::vec(1e-9f64..1.0, 1..12),
            count in prop_oneof![(0u32..100_000).prop_map(f64::from), 0.0f64..1e7],
        ) {
            let z: f64 = probs.iter().sum();
            let mut parts: Vec<f64> = probs.iter().map(|p| count * p / z).collect();
            exact_partition(&mut parts, count);
            prop_assert_eq!(parts.iter().sum::<f64>(), count);
            prop_assert!(parts.iter().all(|&p| p >= 0.0));
        }
    }
}
