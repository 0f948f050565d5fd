//! Fitting model parameters: full-batch gradient ascent with restarts, EM,
//! the 80/10/10 token split and the dev-perplexity grid search.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counts::CountTable;
use crate::error::{Error, Result};
use crate::eval::perplexity;
use crate::lexicon::Lexicon;
use crate::model::{ExpectedCounts, Model, SlotModelKind};
use crate::rng;

/// Regularization strengths searched by default.
pub const DEFAULT_LAMBDAS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
pub const DEFAULT_LEARNING_RATES: [f64; 3] = [1.0, 0.1, 0.01];
pub const DEFAULT_HIDDEN: usize = 100;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Fixed-step gradient ascent on the marginal log-likelihood.
    #[default]
    Gradient,
    /// One EM iteration per epoch.
    Em,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient" => Ok(Method::Gradient),
            "em" => Ok(Method::Em),
            _ => Err(Error::InvalidArgument(format!("unknown training method {s:?}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Gradient => "gradient",
            Method::Em => "em",
        })
    }
}

/// Settings for one training run.
///
/// The step applied each epoch is `learning_rate / N · ∇L`, where `N` is
/// the number of training tokens, so one learning rate suits corpora of any
/// size. This rescales the step only; the optimum is that of `L` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub lambda: f64,
    pub restarts: usize,
    pub kind: SlotModelKind,
    pub seed: u64,
    pub init_scale: f64,
    /// Stop once `|ΔL| ≤ tol · max(|L|, 1)`.
    pub convergence_tol: f64,
    pub method: Method,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1.0,
            epochs: 500,
            lambda: 1e-3,
            restarts: 3,
            kind: SlotModelKind::neural(1, DEFAULT_HIDDEN),
            seed: 0,
            init_scale: 0.1,
            convergence_tol: 1e-7,
            method: Method::Gradient,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be non-negative");
        }
        if self.restarts == 0 {
            return bad("restarts must be positive");
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad("init scale must be positive");
        }
        if self.convergence_tol.is_nan() || self.convergence_tol < 0.0 {
            return bad("convergence tolerance must be non-negative");
        }
        self.kind.validate()
    }

    /// Stable identifier used to derive this configuration's seed in a grid.
    pub fn label(&self) -> String {
        format!(
            "{}/lr={}/lambda={}/method={}",
            self.kind, self.learning_rate, self.lambda, self.method
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub restart: usize,
    pub epoch: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartStatus {
    Converged,
    EpochsExhausted,
    Diverged,
}

impl fmt::Display for RestartStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RestartStatus::Converged => "converged",
            RestartStatus::EpochsExhausted => "epochs-exhausted",
            RestartStatus::Diverged => "diverged",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartSummary {
    pub restart: usize,
    pub status: RestartStatus,
    pub epochs: usize,
    pub final_objective: Option<f64>,
}

/// Per-epoch objective values of every restart.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub restarts: Vec<RestartSummary>,
}

impl Trace {
    pub fn objectives(&self, restart: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.restart == restart)
            .map(|r| r.objective)
            .collect()
    }

    /// `epoch<TAB>restart<TAB>objective` lines with a header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("epoch\trestart\tobjective\n");
        for r in &self.records {
            out.push_str(&format!("{}\t{}\t{}\n", r.epoch, r.restart, r.objective));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub trace: Trace,
    pub best_restart: usize,
    pub final_objective: f64,
}

fn step_scale(counts: &CountTable) -> f64 {
    counts.total().max(1.0)
}

fn converged(prev: f64, next: f64, tol: f64) -> bool {
    (next - prev).abs() <= tol * prev.abs().max(1.0)
}

/// Trains `config.restarts` models from independent initializations and
/// keeps the one with the highest final training objective.
pub fn train(lexicon: &Arc<Lexicon>, counts: &CountTable, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if !counts.iter().all(|(f, _)| lexicon.contains_form(f)) {
        let f = counts.iter().find(|(f, _)| !lexicon.contains_form(f)).unwrap().0;
        return Err(Error::UnknownForm(f.to_string()));
    }
    let mut trace = Trace::default();
    let mut best: Option<(usize, f64, Model)> = None;
    for restart in 0..config.restarts {
        let mut model = Model::new(lexicon.clone(), config.kind)?;
        let mut rng = rng::stream(config.seed, &format!("restart/{restart}"));
        model.initialize(&mut rng, config.init_scale)?;
        let (status, epochs, objective) = match config.method {
            Method::Gradient => ascend(&mut model, counts, config, restart, &mut trace.records),
            Method::Em => run_em(&mut model, counts, config, restart, &mut trace.records),
        };
        trace.restarts.push(RestartSummary {
            restart,
            status,
            epochs,
            final_objective: objective,
        });
        if let Some(obj) = objective {
            if best.as_ref().is_none_or(|(_, b, _)| obj > *b) {
                best = Some((restart, obj, model));
            }
        }
    }
    let (best_restart, final_objective, model) = best.ok_or(Error::AllRestartsDiverged {
        restarts: config.restarts,
    })?;
    Ok(TrainOutcome {
        model,
        trace,
        best_restart,
        final_objective,
    })
}

fn ascend(
    model: &mut Model,
    counts: &CountTable,
    config: &TrainConfig,
    restart: usize,
    records: &mut Vec<TraceRecord>,
) -> (RestartStatus, usize, Option<f64>) {
    let step = config.learning_rate / step_scale(counts);
    let Ok((mut objective, mut grad)) = model.evaluate(counts, config.lambda) else {
        return (RestartStatus::Diverged, 0, None);
    };
    records.push(TraceRecord {
        restart,
        epoch: 0,
        objective,
    });
    for epoch in 1..=config.epochs {
        for (p, g) in model.params_mut().iter_mut().zip(&grad) {
            *p += step * g;
        }
        let next = match model.evaluate(counts, config.lambda) {
            Ok((obj, g)) if obj.is_finite() && g.iter().all(|x| x.is_finite()) => (obj, g),
            _ => return (RestartStatus::Diverged, epoch, None),
        };
        records.push(TraceRecord {
            restart,
            epoch,
            objective: next.0,
        });
        let done = converged(objective, next.0, config.convergence_tol);
        (objective, grad) = next;
        if done {
            return (RestartStatus::Converged, epoch, Some(objective));
        }
    }
    (RestartStatus::EpochsExhausted, config.epochs, Some(objective))
}

fn run_em(
    model: &mut Model,
    counts: &CountTable,
    config: &TrainConfig,
    restart: usize,
    records: &mut Vec<TraceRecord>,
) -> (RestartStatus, usize, Option<f64>) {
    let mstep = MStepConfig {
        learning_rate: config.learning_rate,
        ..MStepConfig::default()
    };
    let Ok(mut objective) = model.objective(counts, config.lambda) else {
        return (RestartStatus::Diverged, 0, None);
    };
    records.push(TraceRecord {
        restart,
        epoch: 0,
        objective,
    });
    for epoch in 1..=config.epochs {
        let next = em_step(model, counts, config.lambda, &mstep)
            .and_then(|m| Ok((m.objective(counts, config.lambda)?, m)));
        let (obj, next_model) = match next {
            Ok((obj, m)) if obj.is_finite() => (obj, m),
            _ => return (RestartStatus::Diverged, epoch, None),
        };
        *model = next_model;
        records.push(TraceRecord {
            restart,
            epoch,
            objective: obj,
        });
        let done = converged(objective, obj, config.convergence_tol);
        objective = obj;
        if done {
            return (RestartStatus::Converged, epoch, Some(objective));
        }
    }
    (RestartStatus::EpochsExhausted, config.epochs, Some(objective))
}

/// Inner optimizer of the EM M-step.
#[derive(Debug, Clone, PartialEq)]
pub struct MStepConfig {
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Stop once the per-token gradient ∞-norm falls below this.
    pub gradient_tol: f64,
}

impl Default for MStepConfig {
    fn default() -> Self {
        MStepConfig {
            learning_rate: 1.0,
            max_iterations: 1000,
            gradient_tol: 1e-10,
        }
    }
}

/// One EM iteration: the E-step splits each count by the current posterior,
/// the M-step climbs the supervised objective of those fractional counts.
///
/// A step that would lower the supervised objective is halved until it does
/// not, so the marginal objective never decreases.
pub fn em_step(model: &Model, counts: &CountTable, lambda: f64, mstep: &MStepConfig) -> Result<Model> {
    let expected = model.expected_counts(counts)?;
    maximize_supervised(model, &expected, lambda, mstep)
}

fn maximize_supervised(
    model: &Model,
    expected: &ExpectedCounts,
    lambda: f64,
    mstep: &MStepConfig,
) -> Result<Model> {
    let scale = expected.total().max(1.0);
    let mut current = model.clone();
    let mut q = current.supervised_objective(expected, lambda);
    let mut rate = mstep.learning_rate;
    for _ in 0..mstep.max_iterations {
        let grad = current.supervised_gradient(expected, lambda);
        let norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) / scale;
        if norm <= mstep.gradient_tol {
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let mut candidate = current.clone();
            let step = rate / scale;
            for (p, g) in candidate.params_mut().iter_mut().zip(&grad) {
                *p += step * g;
            }
            let q_new = candidate.supervised_objective(expected, lambda);
            if q_new.is_finite() && q_new >= q {
                current = candidate;
                q = q_new;
                accepted = true;
                break;
            }
            rate *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !q.is_finite() {
        return Err(Error::Diverged);
    }
    Ok(current)
}

/// Splits each form's integer count into train/dev/test parts by an
/// independent multinomial draw per form.
pub fn split_tokens(
    counts: &CountTable,
    fractions: [f64; 3],
    seed: u64,
) -> Result<(CountTable, CountTable, CountTable)> {
    if fractions.iter().any(|&f| f.is_nan() || f <= 0.0) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split fractions {fractions:?} must be positive and sum to 1"
        )));
    }
    if !counts.is_integral() {
        return Err(Error::InvalidArgument("token split needs integer counts".into()));
    }
    let mut rng = rng::stream(seed, "split-tokens");
    let dev_share = fractions[1] / (fractions[1] + fractions[2]);
    let (mut train, mut dev, mut test) = (CountTable::new(), CountTable::new(), CountTable::new());
    for (form, c) in counts.iter() {
        let n = c as u64;
        if n == 0 {
            continue;
        }
        let to_train = Binomial::new(n, fractions[0]).expect("valid binomial").sample(&mut rng);
        let rest = n - to_train;
        let to_dev = if rest == 0 {
            0
        } else {
            Binomial::new(rest, dev_share).expect("valid binomial").sample(&mut rng)
        };
        let to_test = rest - to_dev;
        for (table, k) in [(&mut train, to_train), (&mut dev, to_dev), (&mut test, to_test)] {
            if k > 0 {
                table.add(form, k as f64)?;
            }
        }
    }
    Ok((train, dev, test))
}

/// Hyperparameter grid; every combination of kind × learning rate × λ is
/// trained and scored by dev perplexity.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub kinds: Vec<SlotModelKind>,
    pub learning_rates: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub epochs: usize,
    pub restarts: usize,
    pub init_scale: f64,
    pub convergence_tol: f64,
    pub method: Method,
    pub seed: u64,
}

impl Default for Grid {
    fn default() -> Self {
        let mut kinds = vec![SlotModelKind::Unif, SlotModelKind::Free, SlotModelKind::Linear];
        kinds.extend((1..=4).map(|k| SlotModelKind::neural(k, DEFAULT_HIDDEN)));
        let base = TrainConfig::default();
        Grid {
            kinds,
            learning_rates: DEFAULT_LEARNING_RATES.to_vec(),
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            epochs: base.epochs,
            restarts: base.restarts,
            init_scale: base.init_scale,
            convergence_tol: base.convergence_tol,
            method: base.method,
            seed: base.seed,
        }
    }
}

impl Grid {
    /// The configurations in canonical order. Each point's seed is derived
    /// from its label, so adding points leaves the others unchanged.
    pub fn configs(&self) -> Vec<TrainConfig> {
        let mut out = Vec::new();
        for &kind in &self.kinds {
            for &learning_rate in &self.learning_rates {
                for &lambda in &self.lambdas {
                    let mut config = TrainConfig {
                        learning_rate,
                        epochs: self.epochs,
                        lambda,
                        restarts: self.restarts,
                        kind,
                        seed: 0,
                        init_scale: self.init_scale,
                        convergence_tol: self.convergence_tol,
                        method: self.method,
                    };
                    config.seed = rng::derive_seed(self.seed, &config.label());
                    out.push(config);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct GridPoint {
    pub config: TrainConfig,
    /// Dev perplexity, or the failure message.
    pub result: std::result::Result<f64, String>,
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub best: TrainConfig,
    pub model: Model,
    pub dev_perplexity: f64,
    pub training: TrainOutcome,
    pub points: Vec<GridPoint>,
}

/// Trains every grid point on `train` and returns the one with the lowest
/// perplexity on `dev`. Ties go to smaller λ, then shallower networks, then
/// the lexicographically smaller label. `jobs` caps worker threads.
pub fn grid_search(
    lexicon: &Arc<Lexicon>,
    train_counts: &CountTable,
    dev_counts: &CountTable,
    grid: &Grid,
    jobs: usize,
) -> Result<GridOutcome> {
    let configs = grid.configs();
    if configs.is_empty() {
        return Err(Error::InvalidArgument("empty hyperparameter grid".into()));
    }
    let run = |config: &TrainConfig| -> Result<(f64, TrainOutcome)> {
        let outcome = train(lexicon, train_counts, config)?;
        let ppl = perplexity(&outcome.model, dev_counts)?.perplexity;
        Ok((ppl, outcome))
    };
    let results: Vec<Result<(f64, TrainOutcome)>> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pool.install(|| configs.par_iter().map(run).collect())
    } else {
        configs.iter().map(run).collect()
    };

    let mut points = Vec::with_capacity(configs.len());
    let mut best: Option<(usize, f64, TrainOutcome)> = None;
    for (i, (config, result)) in configs.iter().zip(results).enumerate() {
        match result {
            Ok((ppl, outcome)) => {
                points.push(GridPoint {
                    config: config.clone(),
                    result: Ok(ppl),
                });
                let better = match &best {
                    None => true,
                    Some((j, best_ppl, _)) => {
                        let other = &configs[*j];
                        let key = |c: &TrainConfig, p: f64| (p, c.lambda, c.kind.depth(), c.label());
                        key(config, ppl)
                            .partial_cmp(&key(other, *best_ppl))
                            .is_some_and(|o| o.is_lt())
                    }
                };
                if better {
                    best = Some((i, ppl, outcome));
                }
            }
            Err(e) => points.push(GridPoint {
                config: config.clone(),
                result: Err(e.to_string()),
            }),
        }
    }
    let (i, dev_perplexity, training) = best.ok_or(Error::AllGridPointsFailed {
        points: configs.len(),
    })?;
    Ok(GridOutcome {
        best: configs[i].clone(),
        model: training.model.clone(),
        dev_perplexity,
        training,
        points,
    })
}
