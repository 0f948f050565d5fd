//! Ancestral sampling through the model's factors: t, then ℓ|t and s|t,
//! then a form through δ. Draws whose ⟨t,ℓ,s⟩ has no listed form are
//! rejected, which conditions on a form being produced.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::model::Model;

pub(crate) struct Draw<'a> {
    pub tag: usize,
    pub lexeme: usize,
    pub slot: usize,
    pub form: &'a str,
}

pub(crate) struct AncestralSampler<'a> {
    lexicon: &'a Lexicon,
    tags: WeightedIndex<f64>,
    lexemes: Vec<WeightedIndex<f64>>,
    slots: Vec<WeightedIndex<f64>>,
}

fn categorical(log_probs: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(log_probs.iter().map(|l| l.exp()))
        .map_err(|e| Error::Numerical(format!("cannot sample from distribution: {e}")))
}

impl<'a> AncestralSampler<'a> {
    pub fn new(model: &'a Model) -> Result<Self> {
        let lexicon = &**model.lexicon();
        if lexicon.is_empty() {
            return Err(Error::InvalidArgument("cannot sample from an empty lexicon".into()));
        }
        let f = model.factors();
        let tags = categorical(&f.tag)?;
        let mut lexemes = Vec::new();
        let mut slots = Vec::new();
        for t in 0..lexicon.tags().len() {
            lexemes.push(categorical(&f.lexeme[lexicon.lexeme_range(t)])?);
            slots.push(categorical(&f.slot[lexicon.slot_range(t)])?);
        }
        Ok(AncestralSampler {
            lexicon,
            tags,
            lexemes,
            slots,
        })
    }

    /// One ancestral draw; `None` when the sampled triple has no form.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Draw<'a>> {
        let tag = self.tags.sample(rng);
        let lexeme = self.lexicon.lexeme_range(tag).start + self.lexemes[tag].sample(rng);
        let slot = self.lexicon.slot_range(tag).start + self.slots[tag].sample(rng);
        let forms = self.lexicon.realizations(lexeme, slot);
        let form = match forms.len() {
            0 => return None,
            1 => &forms[0],
            n => &forms[rng.random_range(0..n)],
        };
        Some(Draw {
            tag,
            lexeme,
            slot,
            form,
        })
    }
}
