use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use memplan::bench::{self, BenchConfig};
use memplan::bounds::{bounds, naive_footprint};
use memplan::generate::{generate_model, instance_name, small_params, standard_params, GenParams};
use memplan::model::{InputDocument, TensorUsageRecord, DEFAULT_ALIGNMENT};
use memplan::oracle::{self, OracleError};
use memplan::plan::{Mode, PlanDocument, Strategy};
use memplan::profile::positional_maximums;
use memplan::published;
use memplan::render::{self, Format as RenderFormat};
use memplan::shared::SuitabilityIndex;

const EXIT_USAGE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_ORACLE_CAP: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "memplan",
    version,
    about = "Static memory planner for inference graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Plan a model or records document and print the plan as JSON.
    Plan {
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        strategy: String,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Suitability::Auto)]
        suitability: Suitability,
    },
    /// Print the lower bounds for both modes.
    Bounds {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check a plan against its model; exits 0 iff the plan is valid.
    Validate {
        plan: PathBuf,
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Solve a small instance exactly.
    Oracle {
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Largest instance to attempt; defaults to 10 (shared) or 8 (offsets).
        #[arg(long)]
        oracle_cap: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Draw a plan as text or SVG.
    Render {
        plan: PathBuf,
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = RenderFormatArg::Ascii)]
        format: RenderFormatArg,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a random model document, or a whole corpus with --corpus.
    Gen {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        ops: usize,
        /// Intermediate tensors; defaults to ops + ops / 2.
        #[arg(long)]
        tensors: Option<usize>,
        #[arg(long, default_value_t = 1 << 16)]
        max_size: u64,
        #[arg(long, default_value_t = 0.3)]
        residual_prob: f64,
        /// Write `count` documents named corpus-NNNN.json into this directory.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 500, requires = "corpus")]
        count: u64,
        /// Use the oracle-sized corpus parameters (at most 8 tensors).
        #[arg(long, requires = "corpus")]
        small: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run strategies over every JSON document in a directory.
    Bench {
        corpus: PathBuf,
        /// Comma-separated strategy names; defaults to every greedy strategy plus naive.
        #[arg(long, value_delimiter = ',')]
        strategy: Vec<String>,
        #[arg(long, value_enum, default_value_t = BenchFormat::Csv)]
        format: BenchFormat,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also solve instances with at most this many records exactly.
        #[arg(long)]
        oracle_cap: Option<usize>,
        /// Fill the time_us column with measured wall time.
        #[arg(long)]
        timing: bool,
        #[arg(long, value_enum, default_value_t = Suitability::Auto)]
        suitability: Suitability,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Byte alignment applied to tensor sizes from graph documents.
    #[arg(long = "align", default_value_t = DEFAULT_ALIGNMENT)]
    align: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Shared,
    Offsets,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Shared => Mode::Shared,
            ModeArg::Offsets => Mode::Offsets,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Suitability {
    Auto,
    Linear,
    Tree,
}

impl From<Suitability> for SuitabilityIndex {
    fn from(s: Suitability) -> SuitabilityIndex {
        match s {
            Suitability::Auto => SuitabilityIndex::Auto,
            Suitability::Linear => SuitabilityIndex::Linear,
            Suitability::Tree => SuitabilityIndex::Tree,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RenderFormatArg {
    Ascii,
    Svg,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BenchFormat {
    Csv,
    Json,
}

/// A failure carrying the process exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: anyhow::Error) -> Self {
        Failure { code, error }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure::new(EXIT_USAGE, error)
    }
}

type CmdResult = Result<(), Failure>;

fn read_text(path: &Path) -> anyhow::Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_records(path: &Path, align: u64) -> anyhow::Result<Vec<TensorUsageRecord>> {
    let text = read_text(path)?;
    let doc =
        InputDocument::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    doc.into_records(align)
        .with_context(|| format!("resolving {}", path.display()))
}

fn load_plan(path: &Path) -> anyhow::Result<PlanDocument> {
    let text = read_text(path)?;
    PlanDocument::from_json(&text).with_context(|| format!("parsing plan {}", path.display()))
}

fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Plan {
            input,
            mode,
            strategy,
            common,
            suitability,
        } => {
            let strategy = Strategy::parse(&strategy, mode.into()).map_err(anyhow::Error::from)?;
            let records = load_records(&input, common.align)?;
            let plan = strategy.run(&records, suitability.into());
            let report = plan.validate(&records);
            if !report.ok {
                return Err(Failure::new(
                    EXIT_INVALID,
                    anyhow!(
                        "{} produced an invalid plan: {:?}",
                        strategy.name(),
                        report.violations
                    ),
                ));
            }
            for w in &report.warnings {
                log::warn!("{w}");
            }
            log::info!("{}: footprint {}", strategy.name(), plan.footprint());
            emit(
                common.output.as_deref(),
                &with_newline(plan.to_document().to_json()),
            )?;
        }
        Command::Bounds { input, common } => {
            let records = load_records(&input, common.align)?;
            let b = bounds(&records);
            let value = json!({
                "records": records.len(),
                "shared_lower_bound": b.shared_lower_bound,
                "offset_lower_bound": b.offset_lower_bound,
                "naive": naive_footprint(&records),
                "positional_maximums": positional_maximums(&records).values,
            });
            emit(
                common.output.as_deref(),
                &with_newline(serde_json::to_string_pretty(&value).map_err(anyhow::Error::from)?),
            )?;
        }
        Command::Validate {
            plan,
            input,
            common,
        } => {
            let records = load_records(&input, common.align)?;
            let doc = load_plan(&plan)?;
            let report = doc.validate(&records);
            let text = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?;
            emit(common.output.as_deref(), &with_newline(text))?;
            if !report.ok {
                return Err(Failure::new(
                    EXIT_INVALID,
                    anyhow!("plan is invalid ({} violations)", report.violations.len()),
                ));
            }
        }
        Command::Oracle {
            input,
            mode,
            oracle_cap,
            common,
        } => {
            let records = load_records(&input, common.align)?;
            let mode = Mode::from(mode);
            let cap_failure = |e: OracleError| Failure::new(EXIT_ORACLE_CAP, e.into());
            let (optimum, explored, plan) = match mode {
                Mode::Shared => {
                    let cap = oracle_cap.unwrap_or(oracle::DEFAULT_SHARED_CAP);
                    let r = oracle::optimal_shared(&records, cap).map_err(cap_failure)?;
                    (r.optimum, r.explored, memplan::Plan::Shared(r.witness_plan))
                }
                Mode::Offsets => {
                    let cap = oracle_cap.unwrap_or(oracle::DEFAULT_OFFSETS_CAP);
                    let r = oracle::optimal_offsets(&records, cap).map_err(cap_failure)?;
                    (
                        r.optimum,
                        r.explored,
                        memplan::Plan::Offsets(r.witness_plan),
                    )
                }
            };
            let value = json!({
                "mode": mode,
                "optimum": optimum,
                "explored": explored,
                "plan": plan.to_document(),
            });
            emit(
                common.output.as_deref(),
                &with_newline(serde_json::to_string_pretty(&value).map_err(anyhow::Error::from)?),
            )?;
        }
        Command::Render {
            plan,
            input,
            format,
            common,
        } => {
            let records = load_records(&input, common.align)?;
            let doc = load_plan(&plan)?;
            let report = doc.validate(&records);
            if !report.ok {
                return Err(Failure::new(
                    EXIT_INVALID,
                    anyhow!(
                        "refusing to render an invalid plan: {:?}",
                        report.violations
                    ),
                ));
            }
            let format = match format {
                RenderFormatArg::Ascii => RenderFormat::Ascii,
                RenderFormatArg::Svg => RenderFormat::Svg,
            };
            emit(
                common.output.as_deref(),
                &render::render(&doc.to_plan(), &records, format),
            )?;
        }
        Command::Gen {
            seed,
            ops,
            tensors,
            max_size,
            residual_prob,
            corpus,
            count,
            small,
            output,
        } => match corpus {
            Some(dir) => {
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for s in 1..=count {
                    let params = if small {
                        small_params(s)
                    } else {
                        standard_params(s)
                    };
                    let doc = generate_model(&params).map_err(anyhow::Error::from)?;
                    let path = dir.join(format!("{}.json", instance_name("corpus", s)));
                    let text = serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)?;
                    fs::write(&path, with_newline(text))
                        .with_context(|| format!("writing {}", path.display()))?;
                }
                log::info!("wrote {count} documents to {}", dir.display());
            }
            None => {
                if !(0.0..=1.0).contains(&residual_prob) {
                    return Err(anyhow!("--residual-prob must lie in [0, 1]").into());
                }
                let params = GenParams {
                    seed,
                    n_ops: ops,
                    n_tensors: tensors.unwrap_or(ops + ops / 2),
                    max_size,
                    residual_prob,
                };
                let doc = generate_model(&params).map_err(anyhow::Error::from)?;
                let text = serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)?;
                emit(output.as_deref(), &with_newline(text))?;
            }
        },
        Command::Bench {
            corpus,
            strategy,
            format,
            jobs,
            oracle_cap,
            timing,
            suitability,
            common,
        } => {
            let mut cfg = BenchConfig {
                jobs: jobs.max(1),
                oracle_cap,
                timing,
                index: suitability.into(),
                ..BenchConfig::default()
            };
            if !strategy.is_empty() {
                cfg.strategies = strategy
                    .iter()
                    .map(|name| {
                        Strategy::parse(name, Mode::Shared)
                            .or_else(|_| Strategy::parse(name, Mode::Offsets))
                    })
                    .collect::<Result<_, _>>()
                    .map_err(anyhow::Error::from)?;
            }
            let (instances, skipped) = bench::load_corpus(&corpus, common.align)
                .with_context(|| format!("reading corpus {}", corpus.display()))?;
            for s in &skipped {
                log::warn!("skipped {s}");
            }
            if instances.is_empty() {
                return Err(anyhow!("no usable instances in {}", corpus.display()).into());
            }
            let rows = bench::run_bench(&instances, &cfg);
            let text = match format {
                BenchFormat::Csv => bench::to_csv(&rows, oracle_cap.is_some()),
                BenchFormat::Json => with_newline(bench::to_json(&rows)),
            };
            emit(common.output.as_deref(), &text)?;

            for row in rows
                .iter()
                .filter(|r| published::lookup(&r.instance).is_some())
            {
                for r in &row.results {
                    log::info!(
                        "{} {}: {:.4} MB",
                        row.instance,
                        r.strategy,
                        published::to_mb(r.footprint)
                    );
                }
            }
            let violations: Vec<String> = rows.iter().flat_map(|r| r.violations()).collect();
            if !violations.is_empty() {
                for v in &violations {
                    eprintln!("violation: {v}");
                }
                return Err(Failure::new(
                    EXIT_INVALID,
                    anyhow!("{} invariant violations", violations.len()),
                ));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
