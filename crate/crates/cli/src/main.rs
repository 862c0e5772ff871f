//! Command-line front end: analogy completion, relational similarity,
//! rating evaluation, comparison-design generation, difference-vector
//! plots, and the symmetry / triangle-inequality audits.
//!
//! Every subcommand is deterministic given its inputs, flags, and seed.
//! Exit codes: 0 success, 2 data error, 64 usage error, 70 internal error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use relspace::analogy::{complete_parallelogram, AnalogyQuery};
use relspace::audit::{
    model_symmetry_check, symmetry_audit, triad_audit_human, triad_audit_model,
    ModelSymmetryResult, SymmetryAuditResult, TriadAuditResult, TriadModelResult,
};
use relspace::dataset::{
    generate_comparisons, load_comparisons, load_ratings, load_taxonomy, load_triad_ratings,
    load_triads, write_comparisons, ComparisonKind, DesignParams, RelationTaxonomy, SubtypeRef,
};
use relspace::embedding::{self, EmbeddingSpace, LoadReport};
use relspace::eval::{evaluate_by_type, EvalReport, DEFAULT_POOLING};
use relspace::projection::{fit_pca, project_pairs, write_arrows_csv, ArrowPlot};
use relspace::relsim::{batch_relsim, BatchOutcome, Metric, MissingPolicy, WordPair};
use relspace::svg::render_svg;

const EXIT_DATA: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_INTERNAL: u8 = 70;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

/// Loader/data-shape problems are data errors; anything else reaching the
/// top level unclassified is treated as internal.
fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "relspace",
    version,
    about = "Analogy and relational-similarity toolkit over word embeddings"
)]
struct Cli {
    /// Worker thread count (default: RELSPACE_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Auto,
    Text,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Table,
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Cosine,
    Euclidean,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Cosine => Metric::CosineOfDifferences,
            MetricArg::Euclidean => Metric::EuclideanOfDifferences,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MissingArg {
    Error,
    Skip,
}

impl From<MissingArg> for MissingPolicy {
    fn from(m: MissingArg) -> MissingPolicy {
        match m {
            MissingArg::Error => MissingPolicy::Error,
            MissingArg::Skip => MissingPolicy::SkipAndReport,
        }
    }
}

#[derive(Debug, Args)]
struct EmbeddingArgs {
    /// Embedding file (text or binary interchange format).
    #[arg(long)]
    embeddings: PathBuf,

    /// Input format; `auto` sniffs the header.
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,

    /// Fail on malformed text lines instead of skip-and-count.
    #[arg(long)]
    strict: bool,

    /// Scale every vector to unit Euclidean norm after loading.
    #[arg(long)]
    normalize: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load an embedding file and report its shape.
    Info {
        #[command(flatten)]
        embedding: EmbeddingArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Complete the analogy a : b :: c : ? by vector offset.
    Analogy {
        #[command(flatten)]
        embedding: EmbeddingArgs,
        a: String,
        b: String,
        c: String,
        /// Number of ranked candidates to report.
        #[arg(short, long, default_value_t = 5)]
        k: usize,
        /// Keep a, b, c in the candidate ranking.
        #[arg(long)]
        include_inputs: bool,
        /// Retry missing tokens lowercased.
        #[arg(long)]
        fold_case: bool,
        #[arg(long, value_enum, default_value = "table")]
        output_format: OutputFormat,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Relational similarity between word pairs.
    Relsim {
        #[command(flatten)]
        embedding: EmbeddingArgs,
        /// Four tokens: first pair then second pair.
        #[arg(num_args = 4, conflicts_with = "pairs")]
        tokens: Vec<String>,
        /// CSV of pair-of-pairs: left1,left2,right1,right2 (optional id).
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "cosine")]
        metric: MetricArg,
        #[arg(long, value_enum, default_value = "error")]
        missing: MissingArg,
        #[arg(long, value_enum, default_value = "table")]
        output_format: OutputFormat,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Per-relation-type correlation of model scores with mean ratings.
    Eval {
        #[command(flatten)]
        embedding: EmbeddingArgs,
        #[arg(long)]
        comparisons: PathBuf,
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long, value_enum, default_value = "cosine")]
        metric: MetricArg,
        /// Comma-separated comparison kinds to pool.
        #[arg(long, value_delimiter = ',')]
        pooling: Vec<String>,
        #[arg(long, value_enum, default_value = "skip")]
        missing: MissingArg,
        #[arg(long, value_enum, default_value = "json")]
        output_format: OutputFormat,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate the seeded three-part comparison design from a taxonomy.
    GenComparisons {
        #[arg(long)]
        taxonomy: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        pairs_per_subtype: usize,
        #[arg(long, default_value_t = 925)]
        n_between_subtype: usize,
        #[arg(long, default_value_t = 925)]
        n_between_type: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// PCA arrow plot of a subtype's word pairs (one panel per subtype).
    Project {
        #[command(flatten)]
        embedding: EmbeddingArgs,
        #[arg(long)]
        taxonomy: PathBuf,
        /// Comma-separated `type:subtype` refs; default is every subtype.
        #[arg(long, value_delimiter = ',')]
        subtypes: Vec<String>,
        #[arg(long, default_value_t = 3)]
        columns: usize,
        #[arg(long, value_enum, default_value = "svg")]
        output_format: OutputFormat,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Presentation-order symmetry audit (human ratings, model check, or both).
    AuditSymmetry {
        #[arg(long, requires = "ratings")]
        comparisons: Option<PathBuf>,
        #[arg(long, requires = "comparisons")]
        ratings: Option<PathBuf>,
        /// Run the model-side check against this embedding file.
        #[arg(long, requires = "seed")]
        embeddings: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "auto")]
        format: FormatArg,
        #[arg(long)]
        normalize: bool,
        #[arg(long, value_enum, default_value = "cosine")]
        metric: MetricArg,
        /// Seed for the model-side pair-of-pairs sample.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Triangle-inequality audit on triads (human ratings, model, or both).
    AuditTriangle {
        #[arg(long)]
        triads: PathBuf,
        #[arg(long)]
        ratings: Option<PathBuf>,
        /// Run the model-side check against this embedding file.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "auto")]
        format: FormatArg,
        #[arg(long)]
        normalize: bool,
        #[arg(long, value_enum, default_value = "cosine")]
        metric: MetricArg,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let kind = e.kind();
            let _ = e.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_USAGE)
            };
        }
    };
    let threads = cli.threads.or_else(|| {
        std::env::var("RELSPACE_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INTERNAL);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))
}

/// Sniff the header and reconcile with an explicit --format. A mismatch
/// between the sniffed layout and the requested one is rejected rather
/// than trusted either way.
fn resolve_format(path: &Path, requested: FormatArg) -> Result<FormatArg, CliError> {
    let mut prefix = [0u8; 256];
    let n = open(path)?
        .read(&mut prefix)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let sniffed = if embedding::looks_binary(&prefix[..n]) {
        FormatArg::Binary
    } else {
        FormatArg::Text
    };
    match requested {
        FormatArg::Auto => Ok(sniffed),
        explicit if explicit == sniffed => Ok(explicit),
        explicit => Err(CliError::Data(format!(
            "{}: header sniffing says {sniffed:?} but --format says {explicit:?}",
            path.display()
        ))),
    }
}

fn load_space_from(
    path: &Path,
    format: FormatArg,
    strict: bool,
    normalize: bool,
) -> Result<(EmbeddingSpace, LoadReport, &'static str), CliError> {
    let format = resolve_format(path, format)?;
    let reader = open(path)?;
    let (space, report, name) = match format {
        FormatArg::Binary => {
            let (s, r) = embedding::load_binary(reader).map_err(data)?;
            (s, r, "binary")
        }
        _ => {
            let (s, r) = embedding::load_text(reader, strict).map_err(data)?;
            (s, r, "text")
        }
    };
    let space = if normalize {
        space.normalize().map_err(data)?
    } else {
        space
    };
    eprintln!(
        "loaded {} tokens ({}d, {name}) from {}",
        space.len(),
        space.dim(),
        path.display()
    );
    Ok((space, report, name))
}

fn load_space(
    args: &EmbeddingArgs,
) -> Result<(EmbeddingSpace, LoadReport, &'static str), CliError> {
    load_space_from(&args.embeddings, args.format, args.strict, args.normalize)
}

fn write_output(output: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match output {
        Some(path) => {
            let mut w =
                BufWriter::new(File::create(path).map_err(|e| {
                    CliError::Data(format!("cannot create {}: {e}", path.display()))
                })?);
            w.write_all(bytes).and_then(|()| w.flush()).map_err(data)
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|()| out.flush())
                .map_err(data)
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut buf =
        serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    buf.push(b'\n');
    Ok(buf)
}

fn load_taxonomy_file(path: &Path) -> Result<RelationTaxonomy, CliError> {
    let (taxonomy, report) = load_taxonomy(open(path)?).map_err(data)?;
    if !report.duplicate_pairs.is_empty() {
        eprintln!(
            "taxonomy: dropped {} duplicate pair(s)",
            report.duplicate_pairs.len()
        );
    }
    Ok(taxonomy)
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Info { embedding, output } => {
            let (_, report, format) = load_space(&embedding)?;
            #[derive(Serialize)]
            struct Info<'a> {
                format: &'a str,
                #[serde(flatten)]
                report: &'a LoadReport,
            }
            write_output(
                output.as_deref(),
                &to_json(&Info {
                    format,
                    report: &report,
                })?,
            )
        }
        Command::Analogy {
            embedding,
            a,
            b,
            c,
            k,
            include_inputs,
            fold_case,
            output_format,
            output,
        } => {
            if k == 0 {
                return Err(CliError::Usage("-k must be >= 1".to_owned()));
            }
            let (space, _, _) = load_space(&embedding)?;
            let mut query = AnalogyQuery::new(&a, &b, &c, k);
            query.exclude_inputs = !include_inputs;
            query.fold_case = fold_case;
            let result = complete_parallelogram(&space, &query).map_err(data)?;
            let bytes = match output_format {
                OutputFormat::Json => {
                    #[derive(Serialize)]
                    struct Out<'a> {
                        a: &'a str,
                        b: &'a str,
                        c: &'a str,
                        k: usize,
                        exclude_inputs: bool,
                        candidates: &'a [relspace::vector::Neighbor],
                    }
                    to_json(&Out {
                        a: &a,
                        b: &b,
                        c: &c,
                        k,
                        exclude_inputs: query.exclude_inputs,
                        candidates: &result.candidates,
                    })?
                }
                OutputFormat::Table => {
                    let mut s = format!("{a} : {b} :: {c} : ?\n");
                    for (i, n) in result.candidates.iter().enumerate() {
                        s.push_str(&format!("{:>4}  {:<24} {:.6}\n", i + 1, n.token, n.score));
                    }
                    s.into_bytes()
                }
                other => {
                    return Err(CliError::Usage(format!(
                        "analogy supports table or json output, not {other:?}"
                    )))
                }
            };
            write_output(output.as_deref(), &bytes)
        }
        Command::Relsim {
            embedding,
            tokens,
            pairs,
            metric,
            missing,
            output_format,
            output,
        } => {
            let (space, _, _) = load_space(&embedding)?;
            let metric: Metric = metric.into();
            let batch: Vec<(String, WordPair, WordPair)> = match (&pairs, tokens.len()) {
                (Some(path), 0) => load_pairs_file(path)?,
                (None, 4) => vec![(
                    "p000001".to_owned(),
                    WordPair::new(&tokens[0], &tokens[1]),
                    WordPair::new(&tokens[2], &tokens[3]),
                )],
                _ => {
                    return Err(CliError::Usage(
                        "provide either four tokens or --pairs FILE".to_owned(),
                    ))
                }
            };
            let outcomes = batch_relsim(&space, &batch, metric, missing.into()).map_err(data)?;
            let bytes = render_relsim(&batch, &outcomes, metric, output_format)?;
            write_output(output.as_deref(), &bytes)
        }
        Command::Eval {
            embedding,
            comparisons,
            ratings,
            metric,
            pooling,
            missing,
            output_format,
            output,
        } => {
            let (space, _, _) = load_space(&embedding)?;
            let mut comps = load_comparisons(open(&comparisons)?).map_err(data)?;
            let report = load_ratings(open(&ratings)?, &mut comps).map_err(data)?;
            if !report.unknown_ids.is_empty() {
                eprintln!(
                    "ratings: {} row(s) referenced unknown comparison ids",
                    report.unknown_ids.len()
                );
            }
            let pooling: Vec<ComparisonKind> = if pooling.is_empty() {
                DEFAULT_POOLING.to_vec()
            } else {
                pooling
                    .iter()
                    .map(|s| s.parse().map_err(CliError::Usage))
                    .collect::<Result<_, _>>()?
            };
            let report = evaluate_by_type(&space, &comps, metric.into(), &pooling, missing.into())
                .map_err(data)?;
            let bytes = render_eval(&report, output_format)?;
            write_output(output.as_deref(), &bytes)
        }
        Command::GenComparisons {
            taxonomy,
            seed,
            pairs_per_subtype,
            n_between_subtype,
            n_between_type,
            output,
        } => {
            let taxonomy = load_taxonomy_file(&taxonomy)?;
            let params = DesignParams {
                pairs_per_subtype,
                n_between_subtype,
                n_between_type,
            };
            let comps = generate_comparisons(&taxonomy, seed, &params).map_err(data)?;
            eprintln!("generated {} comparisons", comps.len());
            let mut buf = Vec::new();
            write_comparisons(&comps, &mut buf).map_err(data)?;
            write_output(output.as_deref(), &buf)
        }
        Command::Project {
            embedding,
            taxonomy,
            subtypes,
            columns,
            output_format,
            output,
        } => {
            if columns == 0 {
                return Err(CliError::Usage("--columns must be >= 1".to_owned()));
            }
            let (space, _, _) = load_space(&embedding)?;
            let taxonomy = load_taxonomy_file(&taxonomy)?;
            let plots = build_panels(&space, &taxonomy, &subtypes)?;
            let bytes = match output_format {
                OutputFormat::Svg => render_svg(&plots, columns),
                OutputFormat::Csv => {
                    if plots.len() != 1 {
                        return Err(CliError::Usage(format!(
                            "csv output needs exactly one subtype panel, got {}",
                            plots.len()
                        )));
                    }
                    let mut buf = Vec::new();
                    write_arrows_csv(&plots[0], &mut buf).map_err(data)?;
                    buf
                }
                other => {
                    return Err(CliError::Usage(format!(
                        "project supports svg or csv output, not {other:?}"
                    )))
                }
            };
            write_output(output.as_deref(), &bytes)
        }
        Command::AuditSymmetry {
            comparisons,
            ratings,
            embeddings,
            format,
            normalize,
            metric,
            seed,
            samples,
            alpha,
            output,
        } => {
            let human = match (&comparisons, &ratings) {
                (Some(cpath), Some(rpath)) => {
                    let mut comps = load_comparisons(open(cpath)?).map_err(data)?;
                    load_ratings(open(rpath)?, &mut comps).map_err(data)?;
                    Some(symmetry_audit(&comps, alpha).map_err(data)?)
                }
                _ => None,
            };
            let model = match &embeddings {
                Some(path) => {
                    let seed = seed.ok_or_else(|| {
                        CliError::Usage("model-side audit requires --seed".to_owned())
                    })?;
                    let (space, _, _) = load_space_from(path, format, false, normalize)?;
                    Some(model_symmetry_check(&space, metric.into(), samples, seed))
                }
                None => None,
            };
            if human.is_none() && model.is_none() {
                return Err(CliError::Usage(
                    "nothing to audit: pass --comparisons/--ratings and/or --embeddings".to_owned(),
                ));
            }
            #[derive(Serialize)]
            struct Out {
                #[serde(skip_serializing_if = "Option::is_none")]
                human: Option<SymmetryAuditResult>,
                #[serde(skip_serializing_if = "Option::is_none")]
                model: Option<ModelSymmetryResult>,
            }
            write_output(output.as_deref(), &to_json(&Out { human, model })?)
        }
        Command::AuditTriangle {
            triads,
            ratings,
            embeddings,
            format,
            normalize,
            metric,
            alpha,
            output,
        } => {
            let mut triads = load_triads(open(&triads)?).map_err(data)?;
            let human = match &ratings {
                Some(rpath) => {
                    load_triad_ratings(open(rpath)?, &mut triads).map_err(data)?;
                    Some(triad_audit_human(&triads, alpha).map_err(data)?)
                }
                None => None,
            };
            let model = match &embeddings {
                Some(path) => {
                    let (space, _, _) = load_space_from(path, format, false, normalize)?;
                    Some(triad_audit_model(&space, &triads, metric.into()).map_err(data)?)
                }
                None => None,
            };
            if human.is_none() && model.is_none() {
                return Err(CliError::Usage(
                    "nothing to audit: pass --ratings and/or --embeddings".to_owned(),
                ));
            }
            #[derive(Serialize)]
            struct Out {
                #[serde(skip_serializing_if = "Option::is_none")]
                human: Option<TriadAuditResult>,
                #[serde(skip_serializing_if = "Option::is_none")]
                model: Option<TriadModelResult>,
            }
            write_output(output.as_deref(), &to_json(&Out { human, model })?)
        }
    }
}

/// CSV of pair-of-pairs: columns left1,left2,right1,right2 plus an
/// optional id (generated as p000001... when absent).
fn load_pairs_file(path: &Path) -> Result<Vec<(String, WordPair, WordPair)>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let headers = reader.headers().map_err(data)?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(l1), Some(l2), Some(r1), Some(r2)) =
        (col("left1"), col("left2"), col("right1"), col("right2"))
    else {
        return Err(CliError::Data(format!(
            "{}: expected columns left1,left2,right1,right2",
            path.display()
        )));
    };
    let id_col = col("id");
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(data)?;
        let field = |c: usize| -> Result<&str, CliError> {
            rec.get(c).ok_or_else(|| {
                CliError::Data(format!("{}: short row at line {}", path.display(), i + 2))
            })
        };
        let id = match id_col {
            Some(c) => field(c)?.to_owned(),
            None => format!("p{:06}", i + 1),
        };
        out.push((
            id,
            WordPair::new(field(l1)?, field(l2)?),
            WordPair::new(field(r1)?, field(r2)?),
        ));
    }
    Ok(out)
}

fn render_relsim(
    batch: &[(String, WordPair, WordPair)],
    outcomes: &[(String, BatchOutcome)],
    metric: Metric,
    format: OutputFormat,
) -> Result<Vec<u8>, CliError> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["id", "left", "right", "metric", "value", "skipped_reason"])
                .map_err(data)?;
            for ((id, p, q), (_, outcome)) in batch.iter().zip(outcomes) {
                let (value, reason) = match outcome {
                    BatchOutcome::Scored(s) => (format!("{}", s.value), String::new()),
                    BatchOutcome::Skipped { reason } => (String::new(), reason.clone()),
                };
                w.write_record([
                    id.as_str(),
                    &p.label(),
                    &q.label(),
                    metric.name(),
                    &value,
                    &reason,
                ])
                .map_err(data)?;
            }
            w.into_inner()
                .map_err(|e| CliError::Internal(e.to_string()))
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Row<'a> {
                id: &'a str,
                left: String,
                right: String,
                #[serde(skip_serializing_if = "Option::is_none")]
                value: Option<f64>,
                #[serde(skip_serializing_if = "Option::is_none")]
                skipped_reason: Option<&'a str>,
            }
            let rows: Vec<Row> = batch
                .iter()
                .zip(outcomes)
                .map(|((id, p, q), (_, outcome))| {
                    let (value, skipped_reason) = match outcome {
                        BatchOutcome::Scored(s) => (Some(s.value), None),
                        BatchOutcome::Skipped { reason } => (None, Some(reason.as_str())),
                    };
                    Row {
                        id,
                        left: p.label(),
                        right: q.label(),
                        value,
                        skipped_reason,
                    }
                })
                .collect();
            #[derive(Serialize)]
            struct Out<'a> {
                metric: &'a str,
                rows: Vec<Row<'a>>,
            }
            to_json(&Out {
                metric: metric.name(),
                rows,
            })
        }
        OutputFormat::Table => {
            let mut s = String::new();
            for ((id, p, q), (_, outcome)) in batch.iter().zip(outcomes) {
                match outcome {
                    BatchOutcome::Scored(score) => s.push_str(&format!(
                        "{id}  {}({}, {}) = {:.6}\n",
                        metric.name(),
                        p.label(),
                        q.label(),
                        score.value
                    )),
                    BatchOutcome::Skipped { reason } => s.push_str(&format!(
                        "{id}  {}({}, {}) skipped: {reason}\n",
                        metric.name(),
                        p.label(),
                        q.label()
                    )),
                }
            }
            Ok(s.into_bytes())
        }
        other => Err(CliError::Usage(format!(
            "relsim supports table, json, or csv output, not {other:?}"
        ))),
    }
}

fn render_eval(report: &EvalReport, format: OutputFormat) -> Result<Vec<u8>, CliError> {
    match format {
        OutputFormat::Json => to_json(report),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["type_id", "n", "n_skipped", "r", "error"])
                .map_err(data)?;
            for row in &report.rows {
                w.write_record([
                    row.type_id.to_string(),
                    row.n.to_string(),
                    row.n_skipped.to_string(),
                    row.r.map(|r| format!("{r}")).unwrap_or_default(),
                    row.error.clone().unwrap_or_default(),
                ])
                .map_err(data)?;
            }
            w.into_inner()
                .map_err(|e| CliError::Internal(e.to_string()))
        }
        OutputFormat::Table => {
            let mut s = String::from("type    n  skipped        r\n");
            for row in &report.rows {
                let r = row
                    .r
                    .map(|r| format!("{r:8.4}"))
                    .unwrap_or_else(|| format!("     -- ({})", row.error.as_deref().unwrap_or("")));
                s.push_str(&format!(
                    "{:>4} {:>4} {:>8} {r}\n",
                    row.type_id, row.n, row.n_skipped
                ));
            }
            Ok(s.into_bytes())
        }
        other => Err(CliError::Usage(format!(
            "eval supports table, json, or csv output, not {other:?}"
        ))),
    }
}

/// One PCA arrow panel per requested subtype: the projection is fitted on
/// the subtype's word vectors and each member pair becomes one arrow.
fn build_panels(
    space: &EmbeddingSpace,
    taxonomy: &RelationTaxonomy,
    subtype_refs: &[String],
) -> Result<Vec<ArrowPlot>, CliError> {
    let selected: Vec<SubtypeRef> = if subtype_refs.is_empty() {
        taxonomy
            .types
            .iter()
            .flat_map(|t| {
                t.subtypes.iter().map(|s| SubtypeRef {
                    type_id: t.id,
                    subtype_id: s.id.clone(),
                })
            })
            .collect()
    } else {
        subtype_refs
            .iter()
            .map(|s| {
                let (t, sub) = s.split_once(':').ok_or_else(|| {
                    CliError::Usage(format!("subtype ref {s:?} is not type:subtype"))
                })?;
                Ok(SubtypeRef {
                    type_id: t.parse().map_err(|_| {
                        CliError::Usage(format!("subtype ref {s:?} has a non-integer type id"))
                    })?,
                    subtype_id: sub.to_owned(),
                })
            })
            .collect::<Result<_, CliError>>()?
    };
    let mut plots = Vec::with_capacity(selected.len());
    for sref in &selected {
        let subtype = taxonomy
            .subtype(sref)
            .ok_or_else(|| CliError::Data(format!("subtype {sref} not in taxonomy")))?;
        let pairs: Vec<WordPair> = subtype.members.iter().map(|m| m.pair.clone()).collect();
        let mut vectors = Vec::with_capacity(2 * pairs.len());
        for pair in &pairs {
            vectors.push(space.vector(&pair.first, false).map_err(data)?);
            vectors.push(space.vector(&pair.second, false).map_err(data)?);
        }
        let projection = fit_pca(&vectors).map_err(data)?;
        let title = format!("{sref} {}", subtype.name);
        plots.push(project_pairs(&projection, &pairs, space, &title).map_err(data)?);
    }
    Ok(plots)
}
