//! The latent-variable model over analyses of surface forms:
//!
//! ```text
//! p(f) = Σ_{t,ℓ,s} p(t) p(ℓ|t) p(s|t) δ(f|t,ℓ,s)
//! p(t) ∝ exp ω_t        p(ℓ|t) ∝ exp ω_{t,ℓ}        p(s|t) ∝ exp score(t,s)
//! ```
//!
//! The slot score depends on [`SlotModelKind`]: zero (UNIF), a free
//! parameter per ⟨t,s⟩ (FREE), `u·v_{t,s}` (LINEAR), or a tanh network over
//! `v_{t,s}` (NEURAL). All distributions are normalized only over what the
//! lexicon lists, so every listed analysis has positive probability.
//!
//! Parameters live in one flat vector. Its layout is canonical: tag weights,
//! lexeme weights, slot weights (FREE/LINEAR), then the hidden layers
//! (row-major weights, optional bias) and the output vector (NEURAL).

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::counts::CountTable;
use crate::error::{Error, Result};
use crate::lexicon::{Analysis, AnalysisRef, FeatureSpace, Lexicon, Tag};
use crate::math::{log_softmax, log_sum_exp};

/// Which parameterization of `p(s|t)` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SlotModelKind {
    Unif,
    Free,
    Linear,
    Neural {
        layers: usize,
        hidden: usize,
        #[serde(default)]
        bias: bool,
    },
}

impl SlotModelKind {
    pub fn neural(layers: usize, hidden: usize) -> Self {
        SlotModelKind::Neural {
            layers,
            hidden,
            bias: false,
        }
    }

    /// Number of hidden layers; LINEAR counts as depth 0.
    pub fn depth(&self) -> usize {
        match self {
            SlotModelKind::Neural { layers, .. } => *layers,
            _ => 0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SlotModelKind::Unif => "unif",
            SlotModelKind::Free => "free",
            SlotModelKind::Linear => "linear",
            SlotModelKind::Neural { .. } => "neural",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let SlotModelKind::Neural { layers, hidden, .. } = *self {
            if layers == 0 || hidden == 0 {
                return Err(Error::InvalidArgument(format!(
                    "neural slot model needs at least one layer and one hidden unit, got k={layers} d={hidden}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for SlotModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotModelKind::Neural {
                layers,
                hidden,
                bias,
            } => {
                write!(f, "neural(k={layers},d={hidden}")?;
                if *bias {
                    f.write_str(",bias")?;
                }
                f.write_str(")")
            }
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for SlotModelKind {
    type Err = Error;

    /// Accepts `unif`, `free`, `linear`, `neural` (k=1, d=100) and
    /// `neural:K` or `neural:K:D`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let mut parts = lower.split(':');
        let kind = match parts.next().unwrap_or_default() {
            "unif" | "uniform" => SlotModelKind::Unif,
            "free" => SlotModelKind::Free,
            "linear" => SlotModelKind::Linear,
            "neural" => {
                let mut num = |default: usize| -> Result<usize> {
                    match parts.next() {
                        Some(p) => p
                            .parse()
                            .map_err(|_| Error::InvalidArgument(format!("bad slot model {s:?}"))),
                        None => Ok(default),
                    }
                };
                let layers = num(1)?;
                let hidden = num(100)?;
                SlotModelKind::neural(layers, hidden)
            }
            _ => return Err(Error::InvalidArgument(format!("unknown slot model {s:?}"))),
        };
        if parts.next().is_some() {
            return Err(Error::InvalidArgument(format!("bad slot model {s:?}")));
        }
        kind.validate()?;
        Ok(kind)
    }
}

/// One hidden layer `h = tanh(W h_prev + b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerLayout {
    pub weights: Range<usize>,
    pub bias: Option<Range<usize>>,
    pub rows: usize,
    pub cols: usize,
}

/// Where each parameter group sits in the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub tags: Range<usize>,
    pub lexemes: Range<usize>,
    /// FREE: one weight per listed ⟨t,s⟩. LINEAR: one weight per feature.
    pub slots: Range<usize>,
    pub layers: Vec<LayerLayout>,
    /// NEURAL output vector.
    pub output: Range<usize>,
    pub len: usize,
}

impl ParamLayout {
    fn new(lexicon: &Lexicon, space: &FeatureSpace, kind: SlotModelKind) -> Self {
        let mut next = 0;
        let mut take = |n: usize| {
            let r = next..next + n;
            next += n;
            r
        };
        let tags = take(lexicon.tags().len());
        let lexemes = take(lexicon.lexemes().len());
        let slots = match kind {
            SlotModelKind::Free => take(lexicon.slots().len()),
            SlotModelKind::Linear => take(space.dim()),
            _ => take(0),
        };
        let mut layers = Vec::new();
        let mut output = take(0);
        if let SlotModelKind::Neural {
            layers: k,
            hidden,
            bias,
        } = kind
        {
            let mut cols = space.dim();
            for _ in 0..k {
                let weights = take(hidden * cols);
                let bias = bias.then(|| take(hidden));
                layers.push(LayerLayout {
                    weights,
                    bias,
                    rows: hidden,
                    cols,
                });
                cols = hidden;
            }
            output = take(hidden);
        }
        ParamLayout {
            tags,
            lexemes,
            slots,
            layers,
            output,
            len: next,
        }
    }
}

/// Log-probabilities of the three factors for the current parameters.
#[derive(Debug, Clone)]
pub struct Factors {
    /// `ln p(t)` per tag.
    pub tag: Vec<f64>,
    /// `ln p(ℓ|t)` per listed lexeme.
    pub lexeme: Vec<f64>,
    /// `ln p(s|t)` per listed ⟨t,s⟩.
    pub slot: Vec<f64>,
}

impl Factors {
    pub fn log_joint(&self, a: &AnalysisRef) -> f64 {
        self.tag[a.tag] + self.lexeme[a.lexeme] + self.slot[a.slot] + a.weight.ln()
    }
}

/// Expected (or observed) counts of tags, lexemes and slots: the sufficient
/// statistics of the supervised log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedCounts {
    pub tag: Vec<f64>,
    pub lexeme: Vec<f64>,
    pub slot: Vec<f64>,
}

impl ExpectedCounts {
    pub fn zeros(lexicon: &Lexicon) -> Self {
        ExpectedCounts {
            tag: vec![0.0; lexicon.tags().len()],
            lexeme: vec![0.0; lexicon.lexemes().len()],
            slot: vec![0.0; lexicon.slots().len()],
        }
    }

    pub fn add(&mut self, a: &AnalysisRef, count: f64) {
        self.tag[a.tag] += count;
        self.lexeme[a.lexeme] += count;
        self.slot[a.slot] += count;
    }

    pub fn total(&self) -> f64 {
        self.tag.iter().sum()
    }
}

/// Posterior `p(t,ℓ,s | f)` over the analyses of one form.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisDistribution {
    pub form: String,
    pub entries: Vec<(Analysis, f64)>,
}

impl AnalysisDistribution {
    pub fn probability(&self, analysis: &Analysis) -> f64 {
        self.entries
            .iter()
            .find(|(a, _)| a == analysis)
            .map_or(0.0, |(_, p)| *p)
    }
}

#[derive(Debug, Clone)]
pub struct Model {
    lexicon: Arc<Lexicon>,
    space: FeatureSpace,
    kind: SlotModelKind,
    layout: ParamLayout,
    slot_features: Vec<Vec<usize>>,
    params: Vec<f64>,
}

impl Model {
    /// A model with every parameter at zero.
    pub fn new(lexicon: Arc<Lexicon>, kind: SlotModelKind) -> Result<Self> {
        kind.validate()?;
        let space = lexicon.feature_space();
        let slot_features = (0..lexicon.slots().len())
            .map(|s| space.active_coordinates(lexicon.tag(lexicon.slot_tag(s)), lexicon.slot(s)))
            .collect::<Result<Vec<_>>>()?;
        let layout = ParamLayout::new(&lexicon, &space, kind);
        let params = vec![0.0; layout.len];
        Ok(Model {
            lexicon,
            space,
            kind,
            layout,
            slot_features,
            params,
        })
    }

    pub fn lexicon(&self) -> &Arc<Lexicon> {
        &self.lexicon
    }

    pub fn feature_space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn kind(&self) -> SlotModelKind {
        self.kind
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        if params.len() != self.layout.len {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters, got {}",
                self.layout.len,
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("parameters must be finite".into()));
        }
        self.params = params;
        Ok(())
    }

    /// Draws the slot-model weights from N(0, scale²); ω weights and biases
    /// are set to zero.
    pub fn initialize<R: Rng + ?Sized>(&mut self, rng: &mut R, scale: f64) -> Result<()> {
        self.params.iter_mut().for_each(|p| *p = 0.0);
        let normal = Normal::new(0.0, scale)
            .map_err(|e| Error::InvalidArgument(format!("init scale {scale}: {e}")))?;
        let mut random: Vec<Range<usize>> = Vec::new();
        if self.kind == SlotModelKind::Linear {
            random.push(self.layout.slots.clone());
        }
        random.extend(self.layout.layers.iter().map(|l| l.weights.clone()));
        random.push(self.layout.output.clone());
        for range in random {
            for p in &mut self.params[range] {
                *p = normal.sample(rng);
            }
        }
        Ok(())
    }

    pub fn squared_norm(&self) -> f64 {
        self.params.iter().map(|p| p * p).sum()
    }

    /// Unnormalized slot scores, one per listed ⟨t,s⟩.
    pub fn slot_scores(&self) -> Vec<f64> {
        let n = self.lexicon.slots().len();
        match self.kind {
            SlotModelKind::Unif => vec![0.0; n],
            SlotModelKind::Free => self.params[self.layout.slots.clone()].to_vec(),
            SlotModelKind::Linear => {
                let u = &self.params[self.layout.slots.clone()];
                self.slot_features
                    .iter()
                    .map(|coords| coords.iter().map(|&c| u[c]).sum())
                    .collect()
            }
            SlotModelKind::Neural { .. } => (0..n)
                .map(|s| {
                    let acts = self.forward(s);
                    dot(&self.params[self.layout.output.clone()], acts.last().unwrap())
                })
                .collect(),
        }
    }

    /// Hidden activations `h_1..h_k` for slot `s`.
    fn forward(&self, s: usize) -> Vec<Vec<f64>> {
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layout.layers.len());
        for (i, layer) in self.layout.layers.iter().enumerate() {
            let w = &self.params[layer.weights.clone()];
            let mut h = match &layer.bias {
                Some(b) => self.params[b.clone()].to_vec(),
                None => vec![0.0; layer.rows],
            };
            for (j, hj) in h.iter_mut().enumerate() {
                let row = &w[j * layer.cols..(j + 1) * layer.cols];
                let z = if i == 0 {
                    self.slot_features[s].iter().map(|&c| row[c]).sum::<f64>()
                } else {
                    dot(row, &acts[i - 1])
                };
                *hj = (*hj + z).tanh();
            }
            acts.push(h);
        }
        acts
    }

    /// Adds `Σ_s gscore[s] · ∂score(s)/∂θ` into `grad`.
    fn backprop_slot_scores(&self, gscore: &[f64], grad: &mut [f64]) {
        match self.kind {
            SlotModelKind::Unif => {}
            SlotModelKind::Free => {
                for (g, gs) in grad[self.layout.slots.clone()].iter_mut().zip(gscore) {
                    *g += gs;
                }
            }
            SlotModelKind::Linear => {
                let start = self.layout.slots.start;
                for (coords, &gs) in self.slot_features.iter().zip(gscore) {
                    for &c in coords {
                        grad[start + c] += gs;
                    }
                }
            }
            SlotModelKind::Neural { .. } => {
                let u = &self.params[self.layout.output.clone()];
                for (s, &gs) in gscore.iter().enumerate() {
                    if gs == 0.0 {
                        continue;
                    }
                    let acts = self.forward(s);
                    let top = acts.last().unwrap();
                    let out = self.layout.output.start;
                    for (j, hj) in top.iter().enumerate() {
                        grad[out + j] += gs * hj;
                    }
                    let mut gh: Vec<f64> = u.iter().map(|uj| gs * uj).collect();
                    for (i, layer) in self.layout.layers.iter().enumerate().rev() {
                        let h = &acts[i];
                        let gz: Vec<f64> = gh.iter().zip(h).map(|(g, hj)| g * (1.0 - hj * hj)).collect();
                        if let Some(b) = &layer.bias {
                            for (j, g) in gz.iter().enumerate() {
                                grad[b.start + j] += g;
                            }
                        }
                        let w0 = layer.weights.start;
                        if i == 0 {
                            for (j, g) in gz.iter().enumerate() {
                                for &c in &self.slot_features[s] {
                                    grad[w0 + j * layer.cols + c] += g;
                                }
                            }
                        } else {
                            let prev = &acts[i - 1];
                            let w = &self.params[layer.weights.clone()];
                            let mut gprev = vec![0.0; layer.cols];
                            for (j, g) in gz.iter().enumerate() {
                                let row = j * layer.cols;
                                for c in 0..layer.cols {
                                    grad[w0 + row + c] += g * prev[c];
                                    gprev[c] += w[row + c] * g;
                                }
                            }
                            gh = gprev;
                        }
                    }
                }
            }
        }
    }

    /// Log-probabilities of all three factors.
    pub fn factors(&self) -> Factors {
        let lex = &*self.lexicon;
        let tag = log_softmax(&self.params[self.layout.tags.clone()]);
        let omega_lex = &self.params[self.layout.lexemes.clone()];
        let scores = self.slot_scores();
        let mut lexeme = vec![0.0; lex.lexemes().len()];
        let mut slot = vec![0.0; lex.slots().len()];
        for t in 0..lex.tags().len() {
            let r = lex.lexeme_range(t);
            lexeme[r.clone()].copy_from_slice(&log_softmax(&omega_lex[r]));
            let r = lex.slot_range(t);
            slot[r.clone()].copy_from_slice(&log_softmax(&scores[r]));
        }
        Factors { tag, lexeme, slot }
    }

    pub fn tag_distribution(&self) -> Vec<f64> {
        self.factors().tag.into_iter().map(f64::exp).collect()
    }

    /// `p(ℓ|t)` over the lexemes listed with `tag`, in canonical order.
    pub fn lexeme_distribution(&self, tag: &Tag) -> Result<Vec<f64>> {
        let t = self.tag_index(tag)?;
        let r = self.lexicon.lexeme_range(t);
        Ok(self.factors().lexeme[r].iter().map(|l| l.exp()).collect())
    }

    /// `p(s|t)` over the slots listed with `tag`, in canonical order.
    pub fn slot_distribution(&self, tag: &Tag) -> Result<Vec<f64>> {
        let t = self.tag_index(tag)?;
        let r = self.lexicon.slot_range(t);
        Ok(self.factors().slot[r].iter().map(|l| l.exp()).collect())
    }

    fn tag_index(&self, tag: &Tag) -> Result<usize> {
        self.lexicon
            .tag_index(tag)
            .ok_or_else(|| Error::UnknownTag(tag.to_string()))
    }

    /// A view that caches the factor log-probabilities for repeated queries.
    pub fn inference(&self) -> Inference<'_> {
        Inference {
            model: self,
            factors: self.factors(),
        }
    }

    /// `p(f)`; zero for forms the lexicon does not list.
    pub fn form_marginal(&self, form: &str) -> f64 {
        self.inference().log_marginal(form).exp()
    }

    pub fn posterior(&self, form: &str) -> Result<AnalysisDistribution> {
        self.inference().posterior(form)
    }

    /// `Σ_f c(f) ln p(f) − (λ/2)‖θ‖²`.
    pub fn objective(&self, counts: &CountTable, lambda: f64) -> Result<f64> {
        let inf = self.inference();
        let mut ll = 0.0;
        for (form, c) in counts.iter() {
            if c == 0.0 {
                continue;
            }
            ll += c * inf.checked_log_marginal(form)?;
        }
        Ok(ll - 0.5 * lambda * self.squared_norm())
    }

    pub fn gradient(&self, counts: &CountTable, lambda: f64) -> Result<Vec<f64>> {
        Ok(self.evaluate(counts, lambda)?.1)
    }

    /// Objective and its gradient in one pass.
    pub fn evaluate(&self, counts: &CountTable, lambda: f64) -> Result<(f64, Vec<f64>)> {
        let inf = self.inference();
        let mut ll = 0.0;
        let mut expected = ExpectedCounts::zeros(&self.lexicon);
        for (form, c) in counts.iter() {
            if c == 0.0 {
                continue;
            }
            let (log_p, post) = inf.posterior_refs(form)?;
            ll += c * log_p;
            for (a, r) in self.lexicon.analysis_refs(form).iter().zip(post) {
                expected.add(a, c * r);
            }
        }
        let objective = ll - 0.5 * lambda * self.squared_norm();
        let grad = self.supervised_gradient_with(&inf.factors, &expected, lambda);
        Ok((objective, grad))
    }

    /// E-step: each count `c(f)` split over analyses by the posterior,
    /// accumulated into tag, lexeme and slot totals.
    pub fn expected_counts(&self, counts: &CountTable) -> Result<ExpectedCounts> {
        let inf = self.inference();
        let mut expected = ExpectedCounts::zeros(&self.lexicon);
        for (form, c) in counts.iter() {
            if c == 0.0 {
                continue;
            }
            let (_, post) = inf.posterior_refs(form)?;
            for (a, r) in self.lexicon.analysis_refs(form).iter().zip(post) {
                expected.add(a, c * r);
            }
        }
        Ok(expected)
    }

    /// Supervised regularized log-likelihood of the given statistics
    /// (δ terms omitted; they do not depend on θ).
    pub fn supervised_objective(&self, expected: &ExpectedCounts, lambda: f64) -> f64 {
        let f = self.factors();
        let term = |counts: &[f64], logs: &[f64]| -> f64 {
            counts
                .iter()
                .zip(logs)
                .filter(|(c, _)| **c != 0.0)
                .map(|(c, l)| c * l)
                .sum()
        };
        term(&expected.tag, &f.tag) + term(&expected.lexeme, &f.lexeme) + term(&expected.slot, &f.slot)
            - 0.5 * lambda * self.squared_norm()
    }

    pub fn supervised_gradient(&self, expected: &ExpectedCounts, lambda: f64) -> Vec<f64> {
        self.supervised_gradient_with(&self.factors(), expected, lambda)
    }

    fn supervised_gradient_with(&self, f: &Factors, e: &ExpectedCounts, lambda: f64) -> Vec<f64> {
        let lex = &*self.lexicon;
        let mut grad = vec![0.0; self.layout.len];
        let total = e.total();
        let tg = self.layout.tags.start;
        for t in 0..lex.tags().len() {
            grad[tg + t] = e.tag[t] - total * f.tag[t].exp();
        }
        let lg = self.layout.lexemes.start;
        for l in 0..lex.lexemes().len() {
            let t = lex.lexeme_tag(l);
            grad[lg + l] = e.lexeme[l] - e.tag[t] * f.lexeme[l].exp();
        }
        let gscore: Vec<f64> = (0..lex.slots().len())
            .map(|s| e.slot[s] - e.tag[lex.slot_tag(s)] * f.slot[s].exp())
            .collect();
        self.backprop_slot_scores(&gscore, &mut grad);
        if lambda != 0.0 {
            for (g, p) in grad.iter_mut().zip(&self.params) {
                *g -= lambda * p;
            }
        }
        grad
    }

    /// Serializes kind, feature-space order and parameters.
    pub fn to_checkpoint(&self) -> String {
        let ckpt = Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            kind: self.kind,
            lexicon_sha256: self.lexicon.fingerprint(),
            tags: self.lexicon.tags().iter().map(ToString::to_string).collect(),
            feature_space: self.space.features().iter().map(ToString::to_string).collect(),
            num_lexemes: self.lexicon.lexemes().len(),
            num_slots: self.lexicon.slots().len(),
            params: self.params.clone(),
        };
        let mut text = serde_json::to_string_pretty(&ckpt).expect("checkpoint serializes");
        text.push('\n');
        text
    }

    /// Rebuilds a model from [`Model::to_checkpoint`] output. The lexicon
    /// must be the one the checkpoint was written with.
    pub fn from_checkpoint(text: &str, lexicon: Arc<Lexicon>) -> Result<Self> {
        let ckpt: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format {} v{}",
                ckpt.format, ckpt.version
            )));
        }
        if ckpt.lexicon_sha256 != lexicon.fingerprint() {
            return Err(Error::Checkpoint(
                "checkpoint was trained on a different lexicon".into(),
            ));
        }
        let mut model = Model::new(lexicon, ckpt.kind)?;
        let space: Vec<String> = model.space.features().iter().map(ToString::to_string).collect();
        if space != ckpt.feature_space {
            return Err(Error::Checkpoint("feature space mismatch".into()));
        }
        model
            .set_params(ckpt.params)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(model)
    }
}

const CHECKPOINT_FORMAT: &str = "syncount-model";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    kind: SlotModelKind,
    lexicon_sha256: String,
    tags: Vec<String>,
    feature_space: Vec<String>,
    num_lexemes: usize,
    num_slots: usize,
    params: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A model with its factor log-probabilities precomputed.
pub struct Inference<'a> {
    model: &'a Model,
    factors: Factors,
}

impl Inference<'_> {
    pub fn factors(&self) -> &Factors {
        &self.factors
    }

    /// `ln p(f)`; `-∞` for unknown forms.
    pub fn log_marginal(&self, form: &str) -> f64 {
        let joint: Vec<f64> = self
            .model
            .lexicon
            .analysis_refs(form)
            .iter()
            .map(|a| self.factors.log_joint(a))
            .collect();
        log_sum_exp(&joint)
    }

    fn checked_log_marginal(&self, form: &str) -> Result<f64> {
        if !self.model.lexicon.contains_form(form) {
            return Err(Error::UnknownForm(form.to_string()));
        }
        let lp = self.log_marginal(form);
        if lp == f64::NEG_INFINITY {
            return Err(Error::ZeroMarginal(form.to_string()));
        }
        if !lp.is_finite() {
            return Err(Error::Diverged);
        }
        Ok(lp)
    }

    pub fn form_marginal(&self, form: &str) -> f64 {
        self.log_marginal(form).exp()
    }

    /// `ln p(f)` and the posterior over `lexicon.analysis_refs(form)`.
    pub fn posterior_refs(&self, form: &str) -> Result<(f64, Vec<f64>)> {
        let refs = self.model.lexicon.analysis_refs(form);
        if refs.is_empty() {
            return Err(Error::UnknownForm(form.to_string()));
        }
        let joint: Vec<f64> = refs.iter().map(|a| self.factors.log_joint(a)).collect();
        let lp = log_sum_exp(&joint);
        if lp == f64::NEG_INFINITY {
            return Err(Error::ZeroMarginal(form.to_string()));
        }
        if !lp.is_finite() {
            return Err(Error::Diverged);
        }
        Ok((lp, joint.iter().map(|j| (j - lp).exp()).collect()))
    }

    pub fn posterior(&self, form: &str) -> Result<AnalysisDistribution> {
        let (_, post) = self.posterior_refs(form)?;
        let lex = &self.model.lexicon;
        Ok(AnalysisDistribution {
            form: form.to_string(),
            entries: lex
                .analysis_refs(form)
                .iter()
                .zip(post)
                .map(|(a, p)| (lex.analysis(a), p))
                .collect(),
        })
    }
}
