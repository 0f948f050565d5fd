mod common;

use std::collections::BTreeMap;

use common::*;
use syncount::disambiguate::fractional_counts;
use syncount::eval::{kl_eval, perplexity, supervised_mle, ReferenceCounts};
use syncount::lexicon::{Analysis, Lexicon};
use syncount::model::{Model, SlotModelKind};
use syncount::Error;

#[test]
fn uniform_model_has_perplexity_v() {
    let lex = lexicon("a\tp\tV;PST\na\tq\tV;PRS\na\tr\tV;FUT\na\ts\tV;IPFV\na\tt\tV;PFV\n");
    let model = Model::new(lex, SlotModelKind::Unif).unwrap();
    let report = perplexity(&model, &counts(&[("p", 3.0), ("q", 17.0), ("t", 1.0)])).unwrap();
    assert!((report.perplexity - 5.0).abs() < 1e-12);
    assert_eq!(report.token_count, 21.0);
}

#[test]
fn half_probability_form_has_perplexity_two() {
    let model = Model::new(lexicon("a\tx\tV;PST\na\ty\tV;PRS\n"), SlotModelKind::Unif).unwrap();
    let report = perplexity(&model, &counts(&[("x", 10.0)])).unwrap();
    assert!((report.perplexity - 2.0).abs() < 1e-12);
}

#[test]
fn perplexity_matches_enumerated_marginals() {
    let mut r = rng(20);
    for kind in all_kinds() {
        let lex = random_lexicon(&mut r);
        let model = random_model(&mut r, lex.clone(), kind, 1.5);
        let mut c = random_counts(&mut r, &lex);
        c.add("not-a-form", 4.0).unwrap();
        let report = perplexity(&model, &c).unwrap();
        let marginals = oracle_marginals(&model);
        let (mut bits, mut n) = (0.0, 0.0);
        for (f, k) in c.iter().filter(|(f, k)| *k > 0.0 && lex.contains_form(f)) {
            bits -= k * marginals[f].log2();
            n += k;
        }
        let want = (bits / n).exp2();
        assert!((report.perplexity - want).abs() < 1e-9 * want, "{kind}");
        assert_eq!(report.oov_tokens_dropped, 4.0);
        assert_eq!(report.token_count, n);
    }
}

#[test]
fn perplexity_without_tokens_is_an_error() {
    let model = Model::new(lexicon("a\tx\tV;PST\n"), SlotModelKind::Unif).unwrap();
    assert!(matches!(perplexity(&model, &counts(&[("zz", 3.0)])), Err(Error::NoTokens)));
}

fn english_analysis(lex: &Lexicon, form: &str, bundle: &str) -> Analysis {
    lex.analyses_of(form)
        .into_iter()
        .find(|a| syncount::lexicon::format_bundle(&a.tag, &a.slot) == bundle)
        .unwrap()
}

#[test]
fn supervised_mle_examples() {
    let lex = lexicon(ENGLISH);
    let mut reference = ReferenceCounts::new();
    reference.add(english_analysis(&lex, "talked", "V;PST"), "talked", 3.0).unwrap();
    reference.add(english_analysis(&lex, "talked", "V.PTCP;PST"), "talked", 1.0).unwrap();
    reference.add(english_analysis(&lex, "sang", "V;PST"), "sang", 2.5).unwrap();
    let mle = supervised_mle(&reference);
    let talked = mle.iter().find(|d| d.form == "talked").unwrap();
    assert_eq!(talked.probability(&english_analysis(&lex, "talked", "V;PST")), 0.75);
    assert_eq!(talked.probability(&english_analysis(&lex, "talked", "V.PTCP;PST")), 0.25);
    let sang = mle.iter().find(|d| d.form == "sang").unwrap();
    assert_eq!(sang.entries.len(), 1);
    assert_eq!(sang.entries[0].1, 1.0);
    for d in &mle {
        let total: f64 = d.entries.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn kl_is_zero_when_model_posterior_is_the_reference() {
    let mut r = rng(21);
    for kind in all_kinds() {
        let lex = random_lexicon(&mut r);
        let model = random_model(&mut r, lex.clone(), kind, 2.0);
        let c = random_counts(&mut r, &lex);
        let reference = fractional_counts(&model, &c).unwrap();
        if reference.is_empty() {
            continue;
        }
        let report = kl_eval(&model, &reference).unwrap();
        assert!(report.weighted_kl_bits.abs() < 1e-12, "{kind}: {}", report.weighted_kl_bits);
    }
}

#[test]
fn kl_is_zero_on_unambiguous_forms() {
    let lex = lexicon(ENGLISH);
    let mut r = rng(22);
    let model = random_model(&mut r, lex.clone(), SlotModelKind::neural(2, 3), 2.0);
    let mut reference = ReferenceCounts::new();
    for form in ["sang", "sung", "ran", "running", "sings"] {
        assert_eq!(lex.analysis_refs(form).len(), 1);
        reference.add(lex.analyses_of(form)[0].clone(), form, 5.0).unwrap();
    }
    assert_eq!(kl_eval(&model, &reference).unwrap().weighted_kl_bits, 0.0);
}

#[test]
fn unif_kl_matches_direct_summation() {
    let lex = lexicon(GERMAN);
    let model = Model::new(lex.clone(), SlotModelKind::Unif).unwrap();
    let mut reference = ReferenceCounts::new();
    let mut skew = 1.0;
    for e in lex.entries() {
        reference.add(e.analysis(), e.form.clone(), skew).unwrap();
        skew *= 1.7;
    }
    let report = kl_eval(&model, &reference).unwrap();

    let mut per_form: BTreeMap<&str, Vec<(Analysis, f64)>> = BTreeMap::new();
    for (f, a, c) in reference.iter() {
        per_form.entry(f).or_default().push((a.clone(), c));
    }
    let n = reference.total();
    let mut want = 0.0;
    for (f, rows) in per_form {
        let n_f: f64 = rows.iter().map(|(_, c)| c).sum();
        let oracle = oracle_posterior(&model, f);
        for (a, c) in rows {
            let p_hat = c / n_f;
            let (l, s) = lex.locate(&a).unwrap();
            want += (n_f / n) * p_hat * (p_hat / oracle[&(l, s)]).log2();
        }
    }
    assert!(want > 0.1);
    assert!((report.weighted_kl_bits - want).abs() < 1e-12);
    assert!(report.identity_gap() < 1e-12);
}

#[test]
fn kl_rejects_tuples_outside_the_lexicon() {
    let lex = lexicon(ENGLISH);
    let model = Model::new(lex.clone(), SlotModelKind::Unif).unwrap();
    let mut reference = ReferenceCounts::new();
    reference.add(english_analysis(&lex, "talked", "V;PST"), "sang", 1.0).unwrap();
    assert!(kl_eval(&model, &reference).is_err());
    let kept = reference.restrict_to(&lex);
    assert_eq!(kept.dropped(), 1.0);
}

#[test]
fn reference_tsv_round_trips() {
    let lex = lexicon(GERMAN);
    let mut r = rng(23);
    let model = random_model(&mut r, lex.clone(), SlotModelKind::Free, 1.0);
    let fc = fractional_counts(&model, &counts(&[("Wörter", 7.0), ("Herren", 3.0)])).unwrap();
    let text = fc.to_tsv();
    assert!(text.starts_with("lemma\tform\tfeatures\tcount\n"));
    let back = ReferenceCounts::parse_tsv(&text).unwrap();
    assert_eq!(back.to_tsv(), text);
    assert_eq!(back.form_totals(), fc.form_totals());
}
