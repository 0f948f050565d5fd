mod common;

use common::*;
use syncount::lexicon::{LexemeId, Tag};
use syncount::model::{Model, SlotModelKind};
use syncount::training::{train, TrainConfig};

#[test]
fn marginals_match_direct_summation() {
    let mut r = rng(10);
    for kind in all_kinds() {
        for _ in 0..10 {
            let lex = random_lexicon(&mut r);
            let model = random_model(&mut r, lex.clone(), kind, 2.0);
            let oracle = oracle_marginals(&model);
            let mut total = 0.0;
            for form in lex.forms() {
                let p = model.form_marginal(form);
                assert!((p - oracle[form]).abs() < 1e-12, "{kind} {form}: {p} vs {}", oracle[form]);
                total += p;
            }
            assert!((total - 1.0).abs() < 1e-12, "{kind}: marginals sum to {total}");
        }
    }
}

#[test]
fn posteriors_match_direct_summation() {
    let mut r = rng(11);
    for kind in all_kinds() {
        let lex = random_lexicon(&mut r);
        let model = random_model(&mut r, lex.clone(), kind, 2.0);
        for form in lex.forms() {
            let oracle = oracle_posterior(&model, form);
            let post = model.posterior(form).unwrap();
            assert_eq!(post.entries.len(), oracle.len());
            for (analysis, p) in &post.entries {
                let (l, s) = lex.locate(analysis).unwrap();
                assert!((p - oracle[&(l, s)]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn objective_matches_direct_summation() {
    let mut r = rng(12);
    for kind in all_kinds() {
        let lex = random_lexicon(&mut r);
        let counts = random_counts(&mut r, &lex);
        let model = random_model(&mut r, lex, kind, 1.5);
        for lambda in [0.0, 0.1] {
            let got = model.objective(&counts, lambda).unwrap();
            let want = oracle_objective(&model, &counts, lambda);
            assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{kind}: {got} vs {want}");
        }
    }
}

#[test]
fn free_posterior_on_five_form_lexicon() {
    // Hand-set FREE weights on a 5-form lexicon; posteriors are normalized
    // products of the three factors.
    let lex = lexicon(
        "sing\tsang\tV;PST\nsing\tsung\tV;PTCP;PST\nsing\tsings\tV;PRS;3;SG\n\
         talk\ttalked\tV;PST\ntalk\ttalked\tV;PTCP;PST\ntalk\ttalks\tV;PRS;3;SG\n\
         talk\ttalks\tN;PL\n",
    );
    let mut model = Model::new(lex.clone(), SlotModelKind::Free).unwrap();
    let layout = model.layout().clone();
    let theta = model.params_mut();
    theta[layout.tags.start] = 0.5; // N
    let talk = lex.lexeme_index(&LexemeId::new(Tag::new("V"), "talk")).unwrap();
    theta[layout.lexemes.start + talk] = 2f64.ln(); // twice as likely as sing
    let v = lex.tag_index(&Tag::new("V")).unwrap();
    let slots = lex.slot_range(v);
    // Weights: PST 1, PTCP;PST -0.5, PRS;3;SG 0.
    for s in slots.clone() {
        let slot = lex.slot(s);
        let w = match (slot.value_of("tense"), slot.len()) {
            (Some("pst"), 1) => 1.0,
            (Some("pst"), _) => -0.5,
            _ => 0.0,
        };
        theta[layout.slots.start + s] = w;
    }

    let z_tag = 0.5f64.exp() + 1.0;
    let (p_n, p_v) = (0.5f64.exp() / z_tag, 1.0 / z_tag);
    let z_slot = 1f64.exp() + (-0.5f64).exp() + 1.0;
    let (p_pst, p_ptcp, _p_prs) = (1f64.exp() / z_slot, (-0.5f64).exp() / z_slot, 1.0 / z_slot);
    let p_talk = 2.0 / 3.0;

    let post = model.posterior("talked").unwrap();
    let pst = p_pst / (p_pst + p_ptcp);
    let got: Vec<f64> = post.entries.iter().map(|(_, p)| *p).collect();
    let mut want = vec![pst, 1.0 - pst];
    if post.entries[0].0.slot.len() != 1 {
        want.reverse();
    }
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-12, "{got:?} vs {want:?}");
    }

    // "talks": verb ⟨talk, PRS;3;SG⟩ against noun ⟨talk, PL⟩ (one lexeme, one slot).
    let verb = p_v * p_talk * (1.0 / z_slot);
    let noun = p_n * 1.0 * 1.0;
    let post = model.posterior("talks").unwrap();
    let p_noun = post.entries.iter().find(|(a, _)| a.tag == Tag::new("N")).unwrap().1;
    assert!((p_noun - noun / (noun + verb)).abs() < 1e-12);
    assert_eq!(model.posterior("sang").unwrap().entries[0].1, 1.0);
}

#[test]
fn unseen_lexeme_keeps_positive_probability() {
    let lex = lexicon("a\tx\tN;SG\na\txs\tN;PL\nb\ty\tN;SG\nb\tys\tN;PL\n");
    let c = counts(&[("x", 30.0), ("xs", 10.0)]);
    let config = TrainConfig {
        kind: SlotModelKind::Free,
        lambda: 1.0,
        epochs: 300,
        restarts: 1,
        ..TrainConfig::default()
    };
    let model = train(&lex, &c, &config).unwrap().model;
    let p = model.lexeme_distribution(&Tag::new("N")).unwrap();
    assert!(p[1] > 0.0 && p[1] < p[0], "{p:?}");
    assert!(model.form_marginal("y") > 0.0);
}

#[test]
fn two_slot_unif_toy_splits_evenly() {
    let model = Model::new(lexicon("a\tx\tV;PST\na\ty\tV;PRS\n"), SlotModelKind::Unif).unwrap();
    assert_eq!(model.form_marginal("x"), 0.5);
    assert_eq!(model.form_marginal("y"), 0.5);
    assert_eq!(model.form_marginal("z"), 0.0);
}

#[test]
fn linear_two_by_two_grid_factorizes_by_enumeration() {
    let lex = lexicon("a\tw\tN;NOM;SG\na\tx\tN;NOM;PL\na\ty\tN;ACC;SG\na\tz\tN;ACC;PL\n");
    let mut r = rng(13);
    for _ in 0..20 {
        let model = random_model(&mut r, lex.clone(), SlotModelKind::Linear, 3.0);
        let tag = Tag::new("N");
        let p = model.slot_distribution(&tag).unwrap();
        let slots = lex.slots_of(&tag).unwrap();
        let marginal = |attr: &str, v: &str| -> f64 {
            slots.iter().zip(&p).filter(|(s, _)| s.value_of(attr) == Some(v)).map(|(_, q)| q).sum()
        };
        for (s, q) in slots.iter().zip(&p) {
            let prod = marginal("case", s.value_of("case").unwrap()) * marginal("num", s.value_of("num").unwrap());
            assert!((q - prod).abs() < 1e-12);
        }
    }
}

#[test]
fn german_gradient_matches_finite_differences() {
    let lex = lexicon(GERMAN);
    let c = counts(&[("Wörter", 17.0), ("Herren", 9.0), ("Wort", 3.0), ("Herrn", 5.0), ("Wortes", 2.0)]);
    let mut r = rng(14);
    for kind in all_kinds() {
        let model = random_model(&mut r, lex.clone(), kind, 1.0);
        let analytic = model.gradient(&c, 0.05).unwrap();
        let numeric = finite_difference_gradient(&model, &c, 0.05, 1e-5);
        let err = max_relative_error(&analytic, &numeric);
        assert!(err < 1e-6, "{kind}: {err:e}");
    }
}

#[test]
fn checkpoint_rejects_other_lexicon() {
    let model = Model::new(lexicon(GERMAN), SlotModelKind::Linear).unwrap();
    let text = model.to_checkpoint();
    let back = Model::from_checkpoint(&text, lexicon(GERMAN)).unwrap();
    assert_eq!(back.params(), model.params());
    assert!(Model::from_checkpoint(&text, lexicon(ENGLISH)).is_err());
    assert!(Model::from_checkpoint("{}", lexicon(GERMAN)).is_err());
}
