//! `labelcast`: every stage of the payload pipeline as a batch subcommand.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for anything wrong
//! with the data. Diagnostics go to stderr; data goes to `--out` or stdout.

use std::fs;
use std::io::{self, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use labelcast::codec::{self, EncodeOptions, LabelEncoding, MaskEncoding};
use labelcast::labeling::{self, EmptyClassPolicy};
use labelcast::scoring::{self, metric_by_name};
use labelcast::selection::{KeepRatio, SelectionInput, StrategyParams, StrategyRegistry};
use labelcast::sim::{self, SimConfig, SimReport};
use labelcast::{table, Direction, Error, LogitMatrix, ScoreVector, SelectionResult};

#[derive(Parser, Debug)]
#[command(
    name = "labelcast",
    version,
    about = "Score, prune, label and encode teacher logits into compact payloads"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-row uncertainty scores from a PLG1 logits file.
    Score(ScoreArgs),
    /// Kept indices from one or more score tables.
    Select(SelectArgs),
    /// Hard labels, class prototypes, Dirichlet concentrations or weights.
    Label(LabelArgs),
    /// Pack kept indices and labels into a PLP1 container.
    Encode(EncodeArgs),
    /// Unpack a PLP1 container back to index and label tables.
    Decode(DecodeArgs),
    /// Payload sizes under every encoding.
    Analyze(AnalyzeArgs),
    /// Run the synthetic bench.
    Simulate(SimulateArgs),
    /// Near-duplicate pairs between two vector files.
    Dedup(DedupArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MetricArg {
    Energy,
    Entropy,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Top,
    Inverse,
    Consensus,
    Safetynet,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DirectionArg {
    Lowest,
    Highest,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MaskArg {
    Bitmap,
    Delta,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LabelsEncArg {
    Fixed,
    Huffman,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LabelKind {
    Hard,
    Prototypes,
    Dirichlet,
    Weights,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EmptyClassArg {
    Error,
    Uniform,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Text,
}

#[derive(Args, Debug)]
struct Output {
    /// Write here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// PLG1 logits file.
    logits: PathBuf,
    #[arg(long, value_enum, default_value = "energy")]
    metric: MetricArg,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct SelectArgs {
    /// Score table (`row_index,score`). Repeat for consensus.
    #[arg(long = "scores", required = true)]
    scores: Vec<PathBuf>,
    /// Pseudo-labels for every row (`index,label`), needed by safetynet.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Number of classes; defaults to the largest label plus one.
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long, value_enum, default_value = "top")]
    strategy: StrategyArg,
    #[arg(long)]
    keep: f64,
    #[arg(long, value_enum, default_value = "lowest")]
    direction: DirectionArg,
    #[arg(long, default_value_t = -0.2, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    reserve: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct LabelArgs {
    /// PLG1 logits file.
    logits: PathBuf,
    /// Kept indices (`index`); all rows when absent.
    #[arg(long)]
    selection: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "hard")]
    kind: LabelKind,
    /// Softmax temperature for soft labels and the energy behind weights.
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = 1.0)]
    weight_temperature: f64,
    #[arg(long, value_enum, default_value = "error")]
    empty_class: EmptyClassArg,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    /// Labels of the kept rows (`index,label`); the indices are the mask.
    #[arg(long)]
    labels: PathBuf,
    /// Kept indices (`index`); must match the label table when given.
    #[arg(long)]
    selection: Option<PathBuf>,
    #[arg(long)]
    n_ref: usize,
    #[arg(long)]
    classes: usize,
    #[arg(long, value_enum, default_value = "delta")]
    mask: MaskArg,
    #[arg(long, value_enum, default_value = "huffman")]
    labels_enc: LabelsEncArg,
    #[arg(long, value_enum, default_value = "on")]
    zstd: Switch,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    /// PLP1 container.
    payload: PathBuf,
    /// Where to write the kept indices.
    #[arg(long)]
    selection_out: Option<PathBuf>,
    /// Where to write `index,label`; stdout when absent.
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Labels of the kept rows (`index,label`).
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    n_ref: usize,
    #[arg(long)]
    classes: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// `key = value` config; built-in defaults when absent.
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Half-open seed range `a..b`, run in parallel.
    #[arg(long, value_parser = parse_range)]
    seeds: Option<Range<u64>>,
    #[arg(long)]
    keep: Option<f64>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct DedupArgs {
    /// PLG1 file of vectors in [0, 1] (one per row).
    a: PathBuf,
    b: PathBuf,
    #[arg(long, default_value_t = 1024)]
    bins: usize,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    #[command(flatten)]
    output: Output,
}

fn parse_range(s: &str) -> Result<Range<u64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected a..b")?;
    let a: u64 = a.parse().map_err(|e| format!("{e}"))?;
    let b: u64 = b.parse().map_err(|e| format!("{e}"))?;
    if a >= b {
        return Err("empty seed range".into());
    }
    Ok(a..b)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> labelcast::Result<()> {
    match command {
        Command::Score(a) => score(a),
        Command::Select(a) => select(a),
        Command::Label(a) => label(a),
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Analyze(a) => analyze(a),
        Command::Simulate(a) => simulate(a),
        Command::Dedup(a) => dedup(a),
    }
}

fn emit(out: &Output, text: &str) -> labelcast::Result<()> {
    write_to(out.out.as_deref(), text)
}

fn write_to(path: Option<&Path>, text: &str) -> labelcast::Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read_text(path: &Path) -> labelcast::Result<String> {
    Ok(fs::read_to_string(path)?)
}

fn score(a: ScoreArgs) -> labelcast::Result<()> {
    let m = labelcast::read_logits(&a.logits)?;
    let name = match a.metric {
        MetricArg::Energy => "energy",
        MetricArg::Entropy => "entropy",
    };
    let s = metric_by_name(name)?.score(&m, a.temperature)?;
    emit(&a.output, &table::write_scores(s.scores()))
}

fn select(a: SelectArgs) -> labelcast::Result<()> {
    let scores = a
        .scores
        .iter()
        .map(|p| ScoreVector::external(table::read_scores(&read_text(p)?)?))
        .collect::<labelcast::Result<Vec<_>>>()?;
    let n = scores[0].len();
    let labels = match &a.labels {
        Some(p) => Some(dense_labels(&read_text(p)?, n)?),
        None => None,
    };
    let mut input = SelectionInput::scores(&scores);
    if let Some(l) = &labels {
        let classes = a
            .classes
            .unwrap_or_else(|| l.iter().max().map_or(1, |&m| m as usize + 1));
        input = input.with_labels(l, classes);
    }
    let params = StrategyParams {
        direction: match a.direction {
            DirectionArg::Lowest => Direction::LowestFirst,
            DirectionArg::Highest => Direction::HighestFirst,
        },
        alpha: a.alpha,
        reserve_fraction: a.reserve,
    };
    let name = match a.strategy {
        StrategyArg::Top => "top",
        StrategyArg::Inverse => "inverse",
        StrategyArg::Consensus => "consensus",
        StrategyArg::Safetynet => "safetynet",
    };
    let strategy = StrategyRegistry::with_builtins().build(name, &params)?;
    let sel = strategy.select(&input, KeepRatio::new(a.keep)?)?;
    emit(&a.output, &table::write_indices(sel.kept()))
}

/// Labels for rows `0..n`, in order.
fn dense_labels(text: &str, n: usize) -> labelcast::Result<Vec<u32>> {
    let (indices, labels) = table::read_labels(text)?;
    if indices.len() != n || indices.iter().enumerate().any(|(i, &j)| i != j) {
        return Err(Error::InvalidShape(format!(
            "label table must list rows 0..{n} in order"
        )));
    }
    Ok(labels)
}

fn label(a: LabelArgs) -> labelcast::Result<()> {
    let m = labelcast::read_logits(&a.logits)?;
    let kept: Vec<usize> = match &a.selection {
        Some(p) => table::read_indices(&read_text(p)?)?,
        None => (0..m.n()).collect(),
    };
    let sel = SelectionResult::from_indices(kept, m.n())?;
    let sub = rows_of(&m, sel.kept())?;
    let hard = labeling::hard_labels(&sub);
    let policy = match a.empty_class {
        EmptyClassArg::Error => EmptyClassPolicy::Error,
        EmptyClassArg::Uniform => EmptyClassPolicy::Uniform,
    };
    let text = match a.kind {
        LabelKind::Hard => table::write_labels(sel.kept(), &hard),
        LabelKind::Prototypes => table::write_class_matrix(&labeling::average_soft_labels(
            &sub,
            &hard,
            a.temperature,
            policy,
        )?),
        LabelKind::Dirichlet => table::write_class_matrix(&labeling::dirichlet_mom(
            &sub,
            &hard,
            a.temperature,
            policy,
        )?),
        LabelKind::Weights => {
            let e = scoring::energy(&sub, a.temperature)?;
            table::write_weights(
                sel.kept(),
                &labeling::importance_weights(&e, a.weight_temperature)?,
            )
        }
    };
    emit(&a.output, &text)
}

fn rows_of(m: &LogitMatrix, kept: &[usize]) -> labelcast::Result<LogitMatrix> {
    let mut v = Vec::with_capacity(kept.len() * m.k());
    for &i in kept {
        v.extend_from_slice(m.row(i));
    }
    LogitMatrix::new(kept.len(), m.k(), v)
}

fn encode_options(mask: MaskArg, labels: LabelsEncArg, zstd: Switch) -> EncodeOptions {
    EncodeOptions::new(
        match mask {
            MaskArg::Bitmap => MaskEncoding::Bitmap,
            MaskArg::Delta => MaskEncoding::DeltaIndex,
        },
        match labels {
            LabelsEncArg::Fixed => LabelEncoding::FixedWidth,
            LabelsEncArg::Huffman => LabelEncoding::Huffman,
        },
        matches!(zstd, Switch::On),
    )
}

fn encode(a: EncodeArgs) -> labelcast::Result<()> {
    let (indices, labels) = table::read_labels(&read_text(&a.labels)?)?;
    if let Some(p) = &a.selection {
        let sel = table::read_indices(&read_text(p)?)?;
        if sel != indices {
            return Err(Error::InvalidShape(
                "selection and label table list different rows".into(),
            ));
        }
    }
    let sel = SelectionResult::from_indices(indices, a.n_ref)?;
    let bytes = codec::encode(
        &sel,
        &labels,
        a.classes,
        encode_options(a.mask, a.labels_enc, a.zstd),
    )?;
    fs::write(&a.out, &bytes)?;
    eprintln!(
        "{} rows kept of {}, {} bytes",
        sel.len(),
        sel.n_ref(),
        bytes.len()
    );
    Ok(())
}

fn decode(a: DecodeArgs) -> labelcast::Result<()> {
    let d = codec::decode(&fs::read(&a.payload)?)?;
    if let Some(p) = &a.selection_out {
        fs::write(p, table::write_indices(d.selection.kept()))?;
    }
    write_to(
        a.labels_out.as_deref(),
        &table::write_labels(d.selection.kept(), &d.labels),
    )?;
    eprintln!(
        "n_ref {}  k {}  kept {}  mask {}  labels {}  zstd {}",
        d.selection.n_ref(),
        d.k,
        d.selection.len(),
        d.options.mask.name(),
        d.options.labels.name(),
        if d.options.zstd { "on" } else { "off" }
    );
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> labelcast::Result<()> {
    let (indices, labels) = table::read_labels(&read_text(&a.labels)?)?;
    let sel = SelectionResult::from_indices(indices, a.n_ref)?;
    emit(
        &a.output,
        &codec::analyze(&sel, &labels, a.classes)?.to_csv(),
    )
}

fn simulate(a: SimulateArgs) -> labelcast::Result<()> {
    let mut cfg = match &a.config {
        Some(p) => SimConfig::parse(&read_text(p)?)?,
        None => SimConfig::default(),
    };
    if let Some(k) = a.keep {
        cfg.keep = k;
    }
    if let Some(s) = a.strategy {
        cfg.strategy = match s {
            StrategyArg::Top => "top",
            StrategyArg::Inverse => "inverse",
            StrategyArg::Consensus => "consensus",
            StrategyArg::Safetynet => "safetynet",
        }
        .into();
    }
    let seeds = match (a.seed, a.seeds) {
        (Some(s), _) => s..s + 1,
        (None, Some(r)) => r,
        (None, None) => cfg.seed..cfg.seed + 1,
    };
    cfg.validate()?;

    let reports: Vec<labelcast::Result<SimReport>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .map(|seed| {
                let cfg = SimConfig {
                    seed,
                    ..cfg.clone()
                };
                scope.spawn(move || sim::run_configured(&cfg))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    let reports = reports.into_iter().collect::<labelcast::Result<Vec<_>>>()?;

    let text = match a.format {
        Format::Csv => {
            let mut s = format!("{}\n", SimReport::CSV_HEADER);
            for r in &reports {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            s
        }
        Format::Text => {
            let mut s: String = reports.iter().map(|r| format!("{r}\n")).collect();
            if reports.len() > 1 {
                let n = reports.len() as f64;
                let mean =
                    |f: fn(&SimReport) -> f64| 100.0 * reports.iter().map(f).sum::<f64>() / n;
                s.push_str(&format!(
                    "mean over {} seeds: teacher {:.2}%  student {:.2}%  baseline {:.2}%\n",
                    reports.len(),
                    mean(|r| r.teacher_acc),
                    mean(|r| r.student_acc),
                    mean(|r| r.baseline_acc)
                ));
            }
            s
        }
    };
    emit(&a.output, &text)
}

fn dedup(a: DedupArgs) -> labelcast::Result<()> {
    let set_a = labelcast::read_logits(&a.a)?;
    let set_b = labelcast::read_logits(&a.b)?;
    let rows_a: Vec<&[f64]> = set_a.rows().collect();
    let rows_b: Vec<&[f64]> = set_b.rows().collect();
    let pairs = sim::find_duplicates(&rows_a, &rows_b, a.bins, a.eps)?;
    emit(&a.output, &table::write_pairs(&pairs))
}
