//! Command-line front end. Thin argument handling over the library: load a
//! model and an instance table, then explain, evaluate, count, or cross-check
//! against enumeration. Exit codes: 1 for load/input/contract errors, 2 when
//! an enumeration budget refuses the job, 3 when a cross-check finds a
//! mismatch.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use paxp::io::{self, InstanceRow};
use paxp::oracle::{self, ExecMode};
use paxp::report::{
    render_rational, render_set, evaluate, EvalSpec, ExplanationKind, Explainer, OrderChoice,
};
use paxp::types::{Error, FeatureSet, Instance, Threshold};

#[derive(Parser)]
#[command(
    name = "paxp",
    version,
    about = "Exact probabilistic abductive explanations for tree, Bayes, diagram, and circuit classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explain one instance; prints the feature set and, below 1, its precision.
    Explain(ExplainArgs),
    /// Explain every instance for each threshold and kind; prints a report table.
    Eval(EvalArgs),
    /// Print the exact count pair behind one conditional probability.
    Count(CountArgs),
    /// Recount random queries by brute-force enumeration and compare.
    OracleCheck(OracleCheckArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Model file: the structured container, or a raw circuit file.
    #[arg(long)]
    model: PathBuf,
    /// Decimal places kept when quantizing Bayes log-probabilities.
    #[arg(long, default_value_t = 3)]
    decimals: u32,
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance table (CSV, header row of feature names, optional class column).
    #[arg(long)]
    instances: PathBuf,
    /// 1-based row of the instance table.
    #[arg(long, default_value_t = 1)]
    row: usize,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    instance: InstanceArgs,
    /// axp, lmpaxp, or minpaxp.
    #[arg(long, default_value = "lmpaxp")]
    kind: String,
    /// Precision threshold, as `p/q` or a decimal literal.
    #[arg(long, default_value = "1")]
    delta: String,
    /// Removal order: default, lex, or loss.
    #[arg(long, default_value = "default")]
    order: String,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Instance table (CSV, header row of feature names, optional class column).
    #[arg(long)]
    instances: PathBuf,
    /// Precision thresholds; repeat or comma-separate for several.
    #[arg(long = "delta", value_delimiter = ',', default_value = "1")]
    deltas: Vec<String>,
    /// Explanation kinds; repeat or comma-separate for several.
    #[arg(long = "kind", value_delimiter = ',', default_value = "lmpaxp")]
    kinds: Vec<String>,
    /// Removal order: default, lex, or loss.
    #[arg(long, default_value = "default")]
    order: String,
    /// Verify each locally-minimal set and report how many are subset-minimal.
    #[arg(long)]
    check_minimality: bool,
    /// Write the per-record report here, one structured record per line.
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Args)]
struct CountArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    instance: InstanceArgs,
    /// Features to fix, by name or 1-based index, comma-separated;
    /// `all` fixes every feature, `none` or omission fixes none.
    #[arg(long, default_value = "none")]
    fixed: String,
    /// Class to count, by name; defaults to the model's prediction.
    #[arg(long)]
    class: Option<String>,
}

#[derive(Args)]
struct OracleCheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Number of random queries to recount.
    #[arg(long, default_value_t = 1000)]
    queries: usize,
    #[arg(long, default_value_t = 20)]
    seed: u64,
    /// Largest completion space enumeration will accept, in points.
    #[arg(long, default_value_t = oracle::DEFAULT_BUDGET)]
    budget: u64,
}

/// A count disagreed with enumeration; carries its own exit code.
#[derive(Debug)]
struct Mismatch(String);

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for Mismatch {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Mismatch>().is_some() {
        return 3;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::Budget { .. }) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Explain(args) => cmd_explain(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Count(args) => cmd_count(args),
        Command::OracleCheck(args) => cmd_oracle_check(args),
    }
}

fn load_explainer(args: &ModelArgs) -> anyhow::Result<Explainer> {
    Ok(Explainer::new(io::load_model(&args.model)?, args.decimals))
}

fn pick_row<'a>(
    rows: &'a [InstanceRow],
    row: usize,
    path: &Path,
) -> anyhow::Result<&'a InstanceRow> {
    if row == 0 {
        return Err(Error::input("rows are numbered from 1").into());
    }
    rows.get(row - 1).ok_or_else(|| {
        Error::input(format!(
            "row {row} not in {} ({} rows)",
            path.display(),
            rows.len()
        ))
        .into()
    })
}

fn load_instance(explainer: &Explainer, args: &InstanceArgs) -> anyhow::Result<Instance> {
    let rows = io::load_instances(&args.instances, explainer.meta())?;
    let row = pick_row(&rows, args.row, &args.instances)?;
    Ok(explainer.instance(row)?)
}

fn cmd_explain(args: ExplainArgs) -> anyhow::Result<()> {
    let explainer = load_explainer(&args.model)?;
    let v = load_instance(&explainer, &args.instance)?;
    let kind = ExplanationKind::parse(&args.kind)?;
    let delta = Threshold::parse(&args.delta)?;
    let order = OrderChoice::parse(&args.order)?;
    let outcome = explainer.explain(&v, kind, &delta, order)?;
    let set = render_set(explainer.meta(), &outcome.set);
    if outcome.counts.target == outcome.counts.total {
        println!("{set}");
    } else {
        let (fraction, _) = render_rational(&outcome.counts.precision());
        println!("{set} precision {fraction}");
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<()> {
    let explainer = load_explainer(&args.model)?;
    let rows = io::load_instances(&args.instances, explainer.meta())?;
    let deltas = args
        .deltas
        .iter()
        .map(|d| Threshold::parse(d))
        .collect::<Result<Vec<_>, _>>()?;
    let kinds = args
        .kinds
        .iter()
        .map(|k| ExplanationKind::parse(k))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = EvalSpec {
        deltas,
        kinds,
        order: OrderChoice::parse(&args.order)?,
        check_minimality: args.check_minimality,
        mode: ExecMode::default(),
    };
    let report = evaluate(&explainer, &rows, &spec);
    print!("{}", report.render_table());
    if let Some(path) = &args.report_out {
        let jsonl = report.to_jsonl()?;
        std::fs::write(path, jsonl)
            .with_context(|| format!("writing report to {}", path.display()))?;
    }
    Ok(())
}

/// Accepts feature names or 1-based indices; `all` and `none` as shorthands.
fn parse_fixed(explainer: &Explainer, text: &str) -> anyhow::Result<FeatureSet> {
    let meta = explainer.meta();
    let m = meta.feature_count();
    match text.trim() {
        "" | "none" => Ok(FeatureSet::empty()),
        "all" => Ok(FeatureSet::full(m)),
        list => {
            let mut indices = Vec::new();
            for token in list.split(',') {
                let token = token.trim();
                let index = meta
                    .feature_index(token)
                    .or_else(|| token.parse::<usize>().ok())
                    .ok_or_else(|| Error::input(format!("unknown feature \"{token}\"")))?;
                indices.push(index);
            }
            Ok(FeatureSet::new(m, indices)?)
        }
    }
}

fn cmd_count(args: CountArgs) -> anyhow::Result<()> {
    let explainer = load_explainer(&args.model)?;
    let v = load_instance(&explainer, &args.instance)?;
    let fixed = parse_fixed(&explainer, &args.fixed)?;
    let meta = explainer.meta();
    let class = match &args.class {
        Some(name) => meta
            .class_index(name)
            .ok_or_else(|| Error::input(format!("unknown class \"{name}\"")))?,
        None => v.class(),
    };
    let pair = explainer.backend().count(v.values(), &fixed, class);
    println!("{} / {}", pair.target, pair.total);
    let (fraction, decimal) = render_rational(&pair.precision());
    println!("precision {fraction} ({decimal})");
    Ok(())
}

fn cmd_oracle_check(args: OracleCheckArgs) -> anyhow::Result<()> {
    let explainer = load_explainer(&args.model)?;
    let backend = explainer.backend();
    let outcome = oracle::spot_check(
        &backend,
        ExecMode::default(),
        args.queries,
        args.seed,
        args.budget,
    )?;
    match outcome {
        None => {
            println!(
                "checked {} random queries against enumeration: all counts match",
                args.queries
            );
            Ok(())
        }
        Some(found) => {
            let meta = explainer.meta();
            let point: Vec<&str> = found
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| meta.domain_values(i + 1)[v].as_str())
                .collect();
            Err(Mismatch(format!(
                "count mismatch at point ({}) fixing {} for class {}: \
                 model says {} / {}, enumeration says {} / {}",
                point.join(","),
                render_set(meta, &found.fixed),
                meta.class_name(found.class),
                found.backend.target,
                found.backend.total,
                found.oracle.target,
                found.oracle.total,
            ))
            .into())
        }
    }
}
