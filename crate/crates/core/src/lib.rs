//! Unsupervised partitioning of unigram form counts among the analyses an
//! inflected lexicon lists for each form.
//!
//! A form such as `talked` may realize several ⟨tag, lexeme, slot⟩ triples.
//! Given raw counts of forms, [`model::Model`] is fitted by maximum likelihood
//! over a latent-variable model `p(t) p(ℓ|t) p(s|t) δ(f|t,ℓ,s)`, and its
//! posterior splits each count among the candidate analyses.
//!
//! The crate is organised as:
//!
//! - [`lexicon`]: UniMorph parsing, realization indexes, feature space.
//! - [`model`]: slot-model variants, marginals, posteriors, objective, gradient.
//! - [`training`]: gradient ascent, EM, token splits, grid search.
//! - [`eval`]: held-out perplexity and KL against supervised counts.
//! - [`disambiguate`]: fractional counts and type sampling.
//! - [`synth`]: synthetic lexicons and corpora with known ground truth.

pub mod counts;
pub mod disambiguate;
pub mod error;
pub mod eval;
pub mod lexicon;
pub mod math;
pub mod model;
pub mod rng;
mod sampling;
pub mod synth;
pub mod training;

pub use counts::CountTable;
pub use error::{Error, Result};
pub use eval::ReferenceCounts;
pub use lexicon::{Analysis, Lexicon, Overabundance};
pub use model::{Model, SlotModelKind};
