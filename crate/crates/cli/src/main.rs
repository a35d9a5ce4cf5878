use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use changehound::corpus::{self, CorpusApp};
use changehound::impact::{
    build_combined_map, compute_change_impact, load_change_set, ImpactError, TargetSet,
};
use changehound::metrics::{aggregate, evaluate, AggregateRow, MetricsError, RunReport};
use changehound::model::{validate_app_model, AppModel, ModelError};
use changehound::runner::{Guidance, RunError, StrategyConfig};
use changehound::strategies::{StrategyKind, DEFAULT_BUDGET, DEFAULT_MAX_SEQUENCES};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(
    name = "changehound",
    version,
    about = "Change-focused GUI test generation on declarative app models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file and list every violated invariant.
    Validate {
        /// Model file or corpus app name.
        #[arg(long)]
        app: String,
    },
    /// Compute the change-affected elements, activities and functions.
    Analyze {
        #[command(flatten)]
        input: Input,
        /// Also write the combined GUI-function map in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run one strategy for each seed and write trace, report and sequences.
    Run {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "cat")]
        strategy: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run several strategies over several seeds and summarize.
    Compare {
        /// Model file or corpus app name; omit with --corpus.
        #[arg(long, required_unless_present = "corpus")]
        app: Option<String>,
        #[arg(long)]
        changes: Option<PathBuf>,
        /// Compare over every app of the corpus.
        #[arg(long, conflicts_with_all = ["app", "changes"])]
        corpus: bool,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "cat,dfs,start-biased,random")]
        strategy: String,
        #[arg(long, default_value = "compare")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Input {
    /// Model file or corpus app name.
    #[arg(long)]
    app: String,
    /// Change set; defaults to the corpus app's own.
    #[arg(long)]
    changes: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma-separated seeds or an inclusive range such as `1-10`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    guidance: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_SEQUENCES)]
    max_sequences: usize,
}

/// Errors that map to exit status 1 rather than 2.
#[derive(Debug)]
struct Findings(String);

impl std::fmt::Display for Findings {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Findings {}

struct Loaded {
    name: String,
    model: AppModel,
    model_digest: String,
    changes_digest: String,
    targets: TargetSet,
}

fn digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(&Sha256::digest(&bytes)[..6]))
}

/// A model path, or a corpus app name.
fn locate(app: &str) -> Result<(PathBuf, Option<CorpusApp>)> {
    let path = Path::new(app);
    if path.is_file() {
        return Ok((path.to_owned(), None));
    }
    if path.components().count() == 1 && !app.ends_with(".json") {
        if let Ok(found) = corpus::find_app(corpus::corpus_dir(), app) {
            return Ok((found.model_path(), Some(found)));
        }
    }
    bail!("cannot read {app}: no such file or corpus app")
}

fn load(app: &str, changes: Option<&Path>) -> Result<Loaded> {
    let (model_path, corpus_app) = locate(app)?;
    let model = match changehound::model::load_app_model(&model_path) {
        Ok(m) => m,
        Err(ModelError::Validation(v)) => {
            let lines: Vec<String> = v.iter().map(ToString::to_string).collect();
            return Err(Findings(format!(
                "{} is invalid:\n{}",
                model_path.display(),
                lines.join("\n")
            ))
            .into());
        }
        Err(e) => return Err(e.into()),
    };
    let changes_path = match (changes, &corpus_app) {
        (Some(p), _) => p.to_owned(),
        (None, Some(c)) => c.changes_path(),
        (None, None) => bail!("--changes is required when --app is a file"),
    };
    let change_set = load_change_set(&changes_path)?;
    let map = build_combined_map(&model);
    let targets = match compute_change_impact(&model, &map, &change_set) {
        Ok(t) => t,
        Err(e @ ImpactError::UnknownChangeEntry(_)) => return Err(Findings(e.to_string()).into()),
        Err(e) => return Err(e.into()),
    };
    Ok(Loaded {
        name: model.name.clone(),
        model_digest: digest(&model_path)?,
        changes_digest: digest(&changes_path)?,
        model,
        targets,
    })
}

fn parse_seeds(run: &RunArgs, default: &[u64]) -> Result<Vec<u64>> {
    let seeds: Vec<u64> = match (&run.seed, &run.seeds) {
        (Some(s), _) => vec![*s],
        (None, Some(list)) => {
            let mut out = Vec::new();
            for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                match part.split_once('-') {
                    Some((a, b)) => {
                        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
                        if a > b {
                            bail!("empty seed range `{part}`");
                        }
                        out.extend(a..=b);
                    }
                    None => out.push(part.parse().with_context(|| format!("bad seed `{part}`"))?),
                }
            }
            out
        }
        (None, None) => default.to_vec(),
    };
    if seeds.is_empty() {
        bail!("no seeds given");
    }
    let distinct: BTreeSet<_> = seeds.iter().collect();
    if distinct.len() != seeds.len() {
        bail!("seeds must be distinct");
    }
    Ok(seeds)
}

fn parse_strategies(list: &str) -> Result<Vec<StrategyKind>> {
    let kinds = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<StrategyKind>().map_err(anyhow::Error::msg))
        .collect::<Result<Vec<_>>>()?;
    if kinds.is_empty() {
        bail!("no strategy given");
    }
    Ok(kinds)
}

fn configs(
    kind: StrategyKind,
    run: &RunArgs,
    guidance: &Option<Guidance>,
    seed: u64,
) -> StrategyConfig {
    let mut c = StrategyConfig::new(kind, seed)
        .with_budget(run.budget)
        .with_max_sequences(run.max_sequences);
    if let Some(g) = guidance {
        c = c.with_guidance(g.clone());
    }
    c
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_validate(app: &str) -> Result<ExitCode> {
    let (path, _) = locate(app)?;
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let model = AppModel::from_json_str(&text)?;
    let violations = validate_app_model(&model);
    if violations.is_empty() {
        println!("{}: ok", path.display());
        return Ok(ExitCode::SUCCESS);
    }
    for v in &violations {
        println!("{v}");
    }
    Ok(ExitCode::from(1))
}

fn cmd_analyze(input: &Input, dot: Option<&Path>, out: &Path) -> Result<ExitCode> {
    let loaded = load(&input.app, input.changes.as_deref())?;
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    write_json(&out.join("targets.json"), &loaded.targets)?;
    if let Some(dot) = dot {
        let map = build_combined_map(&loaded.model);
        std::fs::write(dot, map.to_dot())
            .with_context(|| format!("cannot write {}", dot.display()))?;
    }
    let t = &loaded.targets;
    let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(", ");
    println!("app: {}", loaded.name);
    println!("target elements: {}", join(&t.target_elements));
    println!("target activities: {}", join(&t.target_activities));
    println!("affected functions: {}", t.affected_functions.len());
    if !t.pending_dynamic_activities.is_empty() {
        println!(
            "pending dynamic activities: {}",
            join(&t.pending_dynamic_activities)
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn echo_config(loaded: &Loaded, strategy: &str, seeds: &str, run: &RunArgs) -> Result<String> {
    let guidance = run.guidance.as_deref();
    let guidance = match guidance {
        Some(p) => format!("sha256:{}", digest(p)?),
        None => "none".into(),
    };
    Ok(format!(
        "changehound {} app={} model=sha256:{} changes=sha256:{} strategy={strategy} budget={} seed={seeds} max_sequences={} guidance={}",
        env!("CARGO_PKG_VERSION"),
        loaded.name,
        loaded.model_digest,
        loaded.changes_digest,
        run.budget,
        run.max_sequences,
        guidance
    ))
}

fn cmd_run(input: &Input, run: &RunArgs, strategy: &str, out: &Path) -> Result<ExitCode> {
    let loaded = load(&input.app, input.changes.as_deref())?;
    let kinds = parse_strategies(strategy)?;
    let seeds = parse_seeds(run, &[1])?;
    let guidance = run.guidance.as_deref().map(Guidance::load).transpose()?;
    for kind in kinds {
        for &seed in &seeds {
            let config = configs(kind, run, &guidance, seed);
            println!(
                "{}",
                echo_config(&loaded, kind.as_str(), &seed.to_string(), run)?
            );
            let eval = match evaluate(&loaded.model, &loaded.targets, &config) {
                Ok(e) => e,
                Err(MetricsError::Run(e @ RunError::GuidanceMismatch { .. })) => {
                    return Err(Findings(e.to_string()).into())
                }
                Err(e) => return Err(e.into()),
            };
            let dir = out
                .join(&loaded.name)
                .join(kind.as_str())
                .join(format!("seed-{seed}"));
            std::fs::create_dir_all(&dir)
                .with_context(|| format!("cannot create {}", dir.display()))?;
            std::fs::write(dir.join("trace.ndjson"), eval.output.trace.to_ndjson())?;
            write_json(&dir.join("report.json"), &eval.report)?;
            if kind == StrategyKind::Cat {
                write_json(&dir.join("sequences.json"), &eval.output.sequences)?;
            }
            println!("{}", summarize(&eval.report));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn summarize(r: &RunReport) -> String {
    let first = r
        .first_target_interaction_index
        .map_or("Failure".to_owned(), |i| i.to_string());
    let mut line = format!(
        "  first interaction {first}, interactions {}, coverage {:.2}, events {}",
        r.target_interaction_count, r.affected_function_coverage, r.total_events
    );
    for f in &r.revealed_faults {
        let _ = write!(line, ", fault {} at {}", f.fault_id, f.index);
        if let Some(c) = f.classification {
            let _ = write!(line, " ({c})");
        }
    }
    line
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("Failure".to_owned(), |v| format!("{v:.1}"))
}

fn write_summary(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record([
        "app",
        "strategy",
        "seed-count",
        "mean_first_interaction",
        "failures",
        "mean_interactions",
        "mean_coverage",
        "faults_revealed",
    ])?;
    for r in rows {
        w.write_record([
            r.app.clone(),
            r.strategy.to_string(),
            r.seeds.len().to_string(),
            fmt_opt(r.mean_first_interaction),
            r.failures.to_string(),
            format!("{:.1}", r.mean_interactions),
            format!("{:.3}", r.mean_coverage),
            r.faults_cell(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn ranking_table(rows: &[AggregateRow]) -> String {
    let mut out = format!(
        "{:<20} {:<13} {:>12} {:>9} {:>13} {:>9}\n",
        "app", "strategy", "first-inter.", "failures", "interactions", "coverage"
    );
    let apps: BTreeSet<&str> = rows.iter().map(|r| r.app.as_str()).collect();
    for app in apps {
        let mut group: Vec<&AggregateRow> = rows.iter().filter(|r| r.app == app).collect();
        group.sort_by(|a, b| {
            let key = |r: &AggregateRow| r.mean_first_interaction.unwrap_or(f64::INFINITY);
            key(a)
                .total_cmp(&key(b))
                .then(b.mean_interactions.total_cmp(&a.mean_interactions))
        });
        for r in group {
            let _ = writeln!(
                out,
                "{:<20} {:<13} {:>12} {:>9} {:>13.1} {:>9.3}",
                r.app,
                r.strategy.as_str(),
                fmt_opt(r.mean_first_interaction),
                r.failures,
                r.mean_interactions,
                r.mean_coverage
            );
        }
    }
    out
}

fn cmd_compare(apps: Vec<Loaded>, run: &RunArgs, strategy: &str, out: &Path) -> Result<ExitCode> {
    let kinds = parse_strategies(strategy)?;
    let seeds = parse_seeds(run, &(1..=10).collect::<Vec<_>>())?;
    let guidance = run.guidance.as_deref().map(Guidance::load).transpose()?;
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;

    let mut cells = Vec::new();
    for a in 0..apps.len() {
        for &k in &kinds {
            cells.extend(seeds.iter().map(|&s| (a, k, s)));
        }
    }
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(a, kind, seed)| {
            let app = &apps[a];
            let config = configs(kind, run, &guidance, seed);
            (
                a,
                kind,
                seed,
                evaluate(&app.model, &app.targets, &config).map(|e| e.report),
            )
        })
        .collect();

    let mut reports = Vec::new();
    let mut errors = Vec::new();
    for (a, kind, seed, result) in results {
        match result {
            Ok(r) => reports.push(r),
            Err(e) => errors.push(format!("{},{kind},{seed},{e}", apps[a].name)),
        }
    }
    let kind_list: Vec<&str> = kinds.iter().map(|k| k.as_str()).collect();
    let seed_list: Vec<String> = seeds.iter().map(u64::to_string).collect();
    for app in &apps {
        println!(
            "{}",
            echo_config(app, &kind_list.join(","), &seed_list.join(","), run)?
        );
    }
    write_json(&out.join("reports.json"), &reports)?;
    if !errors.is_empty() {
        for e in &errors {
            eprintln!("error: {e}");
        }
        std::fs::write(
            out.join("errors.csv"),
            format!("app,strategy,seed,error\n{}\n", errors.join("\n")),
        )?;
    }
    if reports.is_empty() {
        return Err(Findings("every run failed".into()).into());
    }
    let rows = aggregate(&reports)?;
    write_summary(&out.join("summary.csv"), &rows)?;
    print!("{}", ranking_table(&rows));
    println!("wrote {}", out.join("summary.csv").display());
    Ok(if errors.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate { app } => cmd_validate(&app),
        Command::Analyze { input, dot, out } => cmd_analyze(&input, dot.as_deref(), &out),
        Command::Run {
            input,
            run,
            strategy,
            out,
        } => cmd_run(&input, &run, &strategy, &out),
        Command::Compare {
            app,
            changes,
            corpus,
            run,
            strategy,
            out,
        } => {
            let apps = if corpus {
                let root = corpus::corpus_dir();
                corpus::app_names(&root)?
                    .iter()
                    .map(|n| load(n, None))
                    .collect::<Result<Vec<_>>>()?
            } else {
                vec![load(
                    app.as_deref().expect("clap enforces --app"),
                    changes.as_deref(),
                )?]
            };
            cmd_compare(apps, &run, &strategy, &out)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Findings>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
