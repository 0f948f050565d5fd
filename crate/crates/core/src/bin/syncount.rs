use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use syncount::disambiguate::{fractional_counts, sample_types, SampleMode, DEFAULT_MAX_DRAWS};
use syncount::error::ErrorClass;
use syncount::eval::{kl_eval, perplexity, ReferenceCounts};
use syncount::lexicon::{format_bundle, parse_unimorph, Lexicon, Overabundance};
use syncount::model::{Model, SlotModelKind};
use syncount::synth::{generate_lexicon, sample_corpus, skewed_free_model, ParadigmSpec, SynthSpec};
use syncount::training::{
    grid_search, split_tokens, train, Grid, Method, TrainConfig, DEFAULT_HIDDEN, DEFAULT_LAMBDAS,
    DEFAULT_LEARNING_RATES,
};
use syncount::{CountTable, Error};

const KL_IDENTITY_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "syncount", version, about = "Type-disambiguated unigram counts from an inflected lexicon")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to form counts and write a checkpoint.
    Train(Box<TrainArgs>),
    /// Report perplexity and/or KL against supervised counts.
    Eval(EvalArgs),
    /// Split each form's count among its analyses.
    Disambiguate(DisambiguateArgs),
    /// Split integer counts into train/dev/test.
    Split(SplitArgs),
    /// Draw distinct word types from a trained model.
    Sample(SampleArgs),
    /// Generate a synthetic lexicon and corpus.
    Synth(SynthArgs),
    /// Count whitespace-separated tokens of a text file.
    Count(CountArgs),
}

#[derive(Args)]
struct LexiconArgs {
    #[arg(long, env = "SYNCOUNT_LEXICON")]
    lexicon: PathBuf,
    /// Split δ over the listed forms instead of rejecting overabundant cells.
    #[arg(long, env = "SYNCOUNT_OVERABUNDANT")]
    overabundant: bool,
}

impl LexiconArgs {
    fn load(&self) -> Result<Arc<Lexicon>, CliError> {
        let mode = if self.overabundant {
            Overabundance::Uniform
        } else {
            Overabundance::Error
        };
        let text = read(&self.lexicon)?;
        Ok(Arc::new(parse_unimorph(&text, mode).map_err(at(&self.lexicon))?))
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    lexicon: LexiconArgs,
    #[arg(long, env = "SYNCOUNT_COUNTS")]
    counts: PathBuf,
    /// Dev counts; when given, the grid is searched and the best point kept.
    #[arg(long, env = "SYNCOUNT_DEV")]
    dev: Option<PathBuf>,
    /// TOML file of defaults; command-line flags take precedence.
    #[arg(long, env = "SYNCOUNT_CONFIG")]
    config: Option<PathBuf>,
    /// Slot model(s): unif, free, linear, neural, or neural:K:D.
    #[arg(long, env = "SYNCOUNT_KIND", value_delimiter = ',')]
    kind: Vec<String>,
    /// Hidden layers of `neural` (comma-separated in a grid).
    #[arg(long, env = "SYNCOUNT_LAYERS", value_delimiter = ',')]
    layers: Vec<usize>,
    #[arg(long, env = "SYNCOUNT_HIDDEN")]
    hidden: Option<usize>,
    #[arg(long, env = "SYNCOUNT_LAMBDA", value_delimiter = ',')]
    lambda: Vec<f64>,
    #[arg(long, env = "SYNCOUNT_LR", value_delimiter = ',')]
    lr: Vec<f64>,
    #[arg(long, env = "SYNCOUNT_EPOCHS")]
    epochs: Option<usize>,
    #[arg(long, env = "SYNCOUNT_RESTARTS")]
    restarts: Option<usize>,
    #[arg(long, env = "SYNCOUNT_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "SYNCOUNT_JOBS")]
    jobs: Option<usize>,
    /// gradient or em.
    #[arg(long, env = "SYNCOUNT_METHOD")]
    method: Option<Method>,
    #[arg(long, env = "SYNCOUNT_INIT_SCALE")]
    init_scale: Option<f64>,
    #[arg(long, env = "SYNCOUNT_TOL")]
    tol: Option<f64>,
    /// Checkpoint path.
    #[arg(long, env = "SYNCOUNT_OUT")]
    out: PathBuf,
    /// Per-epoch objective trace (TSV).
    #[arg(long, env = "SYNCOUNT_TRACE")]
    trace: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct TrainFile {
    kind: Option<OneOrMany<String>>,
    layers: Option<OneOrMany<usize>>,
    hidden: Option<usize>,
    lambda: Option<OneOrMany<f64>>,
    lr: Option<OneOrMany<f64>>,
    epochs: Option<usize>,
    restarts: Option<usize>,
    seed: Option<u64>,
    jobs: Option<usize>,
    method: Option<Method>,
    init_scale: Option<f64>,
    tol: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

fn pick<T>(cli: Vec<T>, file: Option<OneOrMany<T>>) -> Vec<T> {
    if cli.is_empty() {
        file.map(OneOrMany::into_vec).unwrap_or_default()
    } else {
        cli
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, env = "SYNCOUNT_CHECKPOINT")]
    checkpoint: PathBuf,
    #[command(flatten)]
    lexicon: LexiconArgs,
    /// Held-out form counts for perplexity.
    #[arg(long, env = "SYNCOUNT_COUNTS")]
    counts: Option<PathBuf>,
    /// Annotated counts for KL.
    #[arg(long, env = "SYNCOUNT_REFERENCE")]
    reference: Option<PathBuf>,
    /// Language label used in the records.
    #[arg(long, env = "SYNCOUNT_LANGUAGE", default_value = "-")]
    language: String,
    /// Write `record, language, model, metric, value` rows here.
    #[arg(long, env = "SYNCOUNT_RECORDS")]
    records: Option<PathBuf>,
}

#[derive(Args)]
struct DisambiguateArgs {
    #[arg(long, env = "SYNCOUNT_CHECKPOINT")]
    checkpoint: PathBuf,
    #[command(flatten)]
    lexicon: LexiconArgs,
    #[arg(long, env = "SYNCOUNT_COUNTS")]
    counts: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long, env = "SYNCOUNT_OUT")]
    out: Option<PathBuf>,
    /// Accepted for uniformity; disambiguation draws no randomness.
    #[arg(long, env = "SYNCOUNT_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long, env = "SYNCOUNT_COUNTS")]
    counts: PathBuf,
    #[arg(long, env = "SYNCOUNT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "SYNCOUNT_FRACTIONS", value_delimiter = ',', num_args = 3, default_values_t = [0.8, 0.1, 0.1])]
    fractions: Vec<f64>,
    /// Directory for train.tsv, dev.tsv and test.tsv.
    #[arg(long, env = "SYNCOUNT_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, env = "SYNCOUNT_CHECKPOINT")]
    checkpoint: PathBuf,
    #[command(flatten)]
    lexicon: LexiconArgs,
    /// Number of distinct types.
    #[arg(short, long, env = "SYNCOUNT_N")]
    n: usize,
    #[arg(long, env = "SYNCOUNT_MODE", default_value_t = SampleMode::Tuples)]
    mode: SampleMode,
    /// Rows before this rank are marked `train`, the rest `test`.
    #[arg(long, env = "SYNCOUNT_TRAIN_N")]
    train_n: Option<usize>,
    #[arg(long, env = "SYNCOUNT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "SYNCOUNT_MAX_DRAWS", default_value_t = DEFAULT_MAX_DRAWS)]
    max_draws: u64,
    #[arg(long, env = "SYNCOUNT_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// `POS:F1,F2;G1,G2:LEXEMES`, e.g. `N:NOM,ACC,GEN;SG,PL:50`. Repeatable.
    #[arg(long, env = "SYNCOUNT_PARADIGM", required = true)]
    paradigm: Vec<String>,
    /// Syncretism rate.
    #[arg(long, env = "SYNCOUNT_RATE", default_value_t = 0.0)]
    rate: f64,
    #[arg(long, env = "SYNCOUNT_TOKENS", default_value_t = 100_000)]
    tokens: u64,
    /// Standard deviation of the true lexeme and slot logits.
    #[arg(long, env = "SYNCOUNT_SKEW", default_value_t = 2.0)]
    skew: f64,
    #[arg(long, env = "SYNCOUNT_COLLISION_FREE")]
    collision_free: bool,
    #[arg(long, env = "SYNCOUNT_SEED", default_value_t = 0)]
    seed: u64,
    /// Directory for lexicon.tsv, counts.tsv, reference.tsv, truth.json and
    /// syncretism.tsv.
    #[arg(long, env = "SYNCOUNT_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct CountArgs {
    /// UTF-8 text, one or more tokens per line.
    text: PathBuf,
    #[arg(long, env = "SYNCOUNT_OUT")]
    out: Option<PathBuf>,
}

struct CliError {
    class: ErrorClass,
    message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            class: e.class(),
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        class: ErrorClass::Usage,
        message: message.into(),
    }
}

/// Prefixes a library error with the file it came from.
fn at(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| CliError {
        class: e.class(),
        message: format!("{}: {e}", path.display()),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| at(path)(Error::Io(e)))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| at(path)(Error::Io(e)))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_counts(path: &Path) -> Result<CountTable, CliError> {
    CountTable::parse_tsv(&read(path)?).map_err(at(path))
}

fn load_model(checkpoint: &Path, lexicon: Arc<Lexicon>) -> Result<Model, CliError> {
    Model::from_checkpoint(&read(checkpoint)?, lexicon).map_err(at(checkpoint))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => cmd_train(*a),
        Command::Eval(a) => cmd_eval(a),
        Command::Disambiguate(a) => cmd_disambiguate(a),
        Command::Split(a) => cmd_split(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Count(a) => cmd_count(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(match e.class {
                ErrorClass::Io => 1,
                ErrorClass::Usage => 2,
                ErrorClass::Parse => 3,
                ErrorClass::Numerical => 4,
            })
        }
    }
}

fn expand_kinds(names: &[String], layers: &[usize], hidden: usize) -> Result<Vec<SlotModelKind>, CliError> {
    let mut kinds = Vec::new();
    for name in names {
        if name.trim().eq_ignore_ascii_case("neural") && !layers.is_empty() {
            for &k in layers {
                let kind = SlotModelKind::neural(k, hidden);
                kind.validate()?;
                kinds.push(kind);
            }
        } else if name.trim().eq_ignore_ascii_case("neural") {
            kinds.push(SlotModelKind::neural(1, hidden));
        } else {
            kinds.push(name.parse()?);
        }
    }
    Ok(kinds)
}

fn cmd_train(a: TrainArgs) -> Result<(), CliError> {
    let file: TrainFile = match &a.config {
        Some(path) => toml::from_str(&read(path)?).map_err(|e| CliError {
            class: ErrorClass::Parse,
            message: format!("{}: {e}", path.display()),
        })?,
        None => TrainFile::default(),
    };
    let base = TrainConfig::default();
    let grid_mode = a.dev.is_some();
    let hidden = a.hidden.or(file.hidden).unwrap_or(DEFAULT_HIDDEN);
    let layers = pick(a.layers, file.layers);
    let mut kind_names = pick(a.kind, file.kind);
    let mut lambdas = pick(a.lambda, file.lambda);
    let mut lrs = pick(a.lr, file.lr);
    if grid_mode {
        if kind_names.is_empty() {
            kind_names = ["unif", "free", "linear", "neural"].map(String::from).to_vec();
        }
        if lambdas.is_empty() {
            lambdas = DEFAULT_LAMBDAS.to_vec();
        }
        if lrs.is_empty() {
            lrs = DEFAULT_LEARNING_RATES.to_vec();
        }
    }
    let layers = if grid_mode && layers.is_empty() { vec![1, 2, 3, 4] } else { layers };
    let kinds = if kind_names.is_empty() {
        vec![base.kind]
    } else {
        expand_kinds(&kind_names, &layers, hidden)?
    };
    let grid = Grid {
        kinds,
        learning_rates: if lrs.is_empty() { vec![base.learning_rate] } else { lrs },
        lambdas: if lambdas.is_empty() { vec![base.lambda] } else { lambdas },
        epochs: a.epochs.or(file.epochs).unwrap_or(base.epochs),
        restarts: a.restarts.or(file.restarts).unwrap_or(base.restarts),
        init_scale: a.init_scale.or(file.init_scale).unwrap_or(base.init_scale),
        convergence_tol: a.tol.or(file.tol).unwrap_or(base.convergence_tol),
        method: a.method.or(file.method).unwrap_or(base.method),
        seed: a.seed.or(file.seed).unwrap_or(base.seed),
    };
    let jobs = a.jobs.or(file.jobs).unwrap_or(1).max(1);

    let lexicon = a.lexicon.load()?;
    let (counts, oov) = load_counts(&a.counts)?.restrict_to(&lexicon);
    if oov > 0.0 {
        eprintln!("note: dropped {oov} out-of-lexicon training tokens");
    }

    let (model, outcome, config) = if let Some(dev_path) = &a.dev {
        let dev = load_counts(dev_path)?;
        let out = grid_search(&lexicon, &counts, &dev, &grid, jobs)?;
        for p in &out.points {
            match &p.result {
                Ok(ppl) => println!("grid\t{}\tdev_perplexity\t{ppl}", p.config.label()),
                Err(e) => println!("grid\t{}\tfailed\t{e}", p.config.label()),
            }
        }
        println!("dev_perplexity\t{}", out.dev_perplexity);
        (out.model, out.training, out.best)
    } else {
        let configs = grid.configs();
        if configs.len() != 1 {
            return Err(usage("several hyperparameter values given without --dev"));
        }
        // A lone configuration keeps the seed it was given.
        let config = TrainConfig {
            seed: grid.seed,
            ..configs[0].clone()
        };
        let out = train(&lexicon, &counts, &config)?;
        (out.model.clone(), out, config)
    };

    write(&a.out, &model.to_checkpoint())?;
    if let Some(path) = &a.trace {
        write(path, &outcome.trace.to_tsv())?;
    }
    let chosen = &outcome.trace.restarts[outcome.best_restart];
    println!("config\t{}", config.label());
    println!("seed\t{}", config.seed);
    println!("final_objective\t{}", outcome.final_objective);
    println!("restart\t{}", outcome.best_restart);
    println!("epochs\t{}", chosen.epochs);
    println!("status\t{}", chosen.status);
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    if a.counts.is_none() && a.reference.is_none() {
        return Err(usage("eval needs --counts and/or --reference"));
    }
    let lexicon = a.lexicon.load()?;
    let model = load_model(&a.checkpoint, lexicon.clone())?;
    let name = model.kind().to_string();
    let mut records = String::from("record\tlanguage\tmodel\tmetric\tvalue\n");
    let mut row = |record: &str, metric: &str, value: f64| {
        records.push_str(&format!("{record}\t{}\t{name}\t{metric}\t{value}\n", a.language));
    };
    println!("model\t{name}");
    if let Some(path) = &a.counts {
        let report = perplexity(&model, &load_counts(path)?).map_err(at(path))?;
        println!("perplexity\t{}", report.perplexity);
        println!("tokens\t{}", report.token_count);
        println!("oov_tokens_dropped\t{}", report.oov_tokens_dropped);
        row("figure-unsupervised", "perplexity", report.perplexity);
        row("stat", "test_tokens", report.token_count);
        row("stat", "oov_tokens_dropped", report.oov_tokens_dropped);
    }
    if let Some(path) = &a.reference {
        let reference = ReferenceCounts::parse_tsv(&read(path)?).map_err(at(path))?;
        let kept = reference.restrict_to(&lexicon);
        let report = kl_eval(&model, &kept).map_err(at(path))?;
        let gap = report.identity_gap();
        println!("kl_bits\t{}", report.weighted_kl_bits);
        println!("kl_token_average_bits\t{}", report.token_average_bits);
        println!("kl_identity_gap\t{gap:e}");
        println!("reference_tokens\t{}", report.token_count);
        println!("reference_tokens_dropped\t{}", kept.dropped());
        if gap.is_nan() || gap > KL_IDENTITY_TOL {
            return Err(CliError {
                class: ErrorClass::Numerical,
                message: format!("KL computations disagree by {gap:e} bits"),
            });
        }
        row("figure-supervised", "kl_bits", report.weighted_kl_bits);
        row("stat", "reference_tokens", report.token_count);
        row("stat", "reference_tokens_dropped", kept.dropped());
    }
    if let Some(path) = &a.records {
        write(path, &records)?;
    }
    Ok(())
}

fn cmd_disambiguate(a: DisambiguateArgs) -> Result<(), CliError> {
    let lexicon = a.lexicon.load()?;
    let model = load_model(&a.checkpoint, lexicon.clone())?;
    let (counts, oov) = load_counts(&a.counts)?.restrict_to(&lexicon);
    if oov > 0.0 {
        eprintln!("note: dropped {oov} out-of-lexicon tokens");
    }
    let fractional = fractional_counts(&model, &counts)?;
    emit(a.out.as_deref(), &fractional.to_tsv())
}

fn cmd_split(a: SplitArgs) -> Result<(), CliError> {
    let counts = load_counts(&a.counts)?;
    let fractions: [f64; 3] = a.fractions.try_into().map_err(|_| usage("need three fractions"))?;
    let (train, dev, test) = split_tokens(&counts, fractions, a.seed).map_err(at(&a.counts))?;
    fs::create_dir_all(&a.out).map_err(|e| at(&a.out)(Error::Io(e)))?;
    for (name, table) in [("train.tsv", &train), ("dev.tsv", &dev), ("test.tsv", &test)] {
        write(&a.out.join(name), &table.to_tsv())?;
        println!("{name}\t{}", table.total());
    }
    Ok(())
}

fn cmd_sample(a: SampleArgs) -> Result<(), CliError> {
    let lexicon = a.lexicon.load()?;
    let model = load_model(&a.checkpoint, lexicon)?;
    let train_n = a.train_n.unwrap_or(a.n);
    if train_n > a.n {
        return Err(usage("--train-n exceeds -n"));
    }
    let types = sample_types(&model, a.n, a.mode, a.seed, a.max_draws)?;
    let mut out = String::from("rank\tsplit\tform\tlemma\tfeatures\n");
    for (i, t) in types.iter().enumerate() {
        let split = if i < train_n { "train" } else { "test" };
        let (lemma, features) = match &t.analysis {
            Some(an) => (an.lexeme.lemma.as_str(), format_bundle(&an.tag, &an.slot)),
            None => ("", String::new()),
        };
        out.push_str(&format!("{}\t{split}\t{}\t{lemma}\t{features}\n", i + 1, t.form));
    }
    emit(a.out.as_deref(), &out)
}

fn parse_paradigm(text: &str) -> Result<ParadigmSpec, CliError> {
    let bad = || usage(format!("bad paradigm {text:?}; expected POS:F1,F2;G1,G2:LEXEMES"));
    let mut parts = text.split(':');
    let (Some(pos), Some(grid), Some(n), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
        return Err(bad());
    };
    let grid = grid
        .split(';')
        .map(|dim| dim.split(',').map(|f| f.trim().to_string()).filter(|f| !f.is_empty()).collect())
        .collect();
    Ok(ParadigmSpec {
        pos: pos.trim().to_string(),
        grid,
        lexemes: n.trim().parse().map_err(|_| bad())?,
    })
}

fn cmd_synth(a: SynthArgs) -> Result<(), CliError> {
    let spec = SynthSpec {
        paradigms: a.paradigm.iter().map(|p| parse_paradigm(p)).collect::<Result<_, _>>()?,
        rate: a.rate,
        collision_free: a.collision_free,
        seed: a.seed,
        ..SynthSpec::default()
    };
    let synthetic = generate_lexicon(&spec)?;
    let lexicon = Arc::new(synthetic.lexicon);
    let truth = skewed_free_model(lexicon.clone(), a.skew, a.seed)?;
    let (counts, reference) = sample_corpus(&truth, a.tokens, a.seed)?;
    fs::create_dir_all(&a.out).map_err(|e| at(&a.out)(Error::Io(e)))?;
    write(&a.out.join("lexicon.tsv"), &lexicon.to_unimorph())?;
    write(&a.out.join("counts.tsv"), &counts.to_tsv())?;
    write(&a.out.join("reference.tsv"), &reference.to_tsv())?;
    write(&a.out.join("truth.json"), &truth.to_checkpoint())?;
    write(&a.out.join("syncretism.tsv"), &synthetic.syncretism.to_tsv())?;
    println!("entries\t{}", lexicon.len());
    println!("forms\t{}", lexicon.num_forms());
    println!("copied_fraction\t{}", synthetic.syncretism.copied_fraction());
    println!("tokens\t{}", counts.total());
    Ok(())
}

fn cmd_count(a: CountArgs) -> Result<(), CliError> {
    let counts = CountTable::from_text(&read(&a.text)?);
    emit(a.out.as_deref(), &counts.to_tsv())
}
