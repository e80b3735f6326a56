//! `stlmine` command-line front end.
//!
//! Exit codes: 0 success or SAT, 1 UNSAT or no result, 2 usage or I/O error.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use stlmine::classifier::{
    classify_split, naive_timepoint_baseline, split_dataset, ClassifierConfig, ClassifierError, LabeledTraces,
};
use stlmine::enumeration::{Enumerator, Operator};
use stlmine::extraction::extract_stl;
use stlmine::falsification::{falsify, ControlPointSpec, Interpolation};
use stlmine::miner::{mine, MiningOutcome, SCHEMA_VERSION};
use stlmine::models::{delay_pair_dataset, DelayPairConfig, ModelConfig, TimeDomain};
use stlmine::pstl::{ParamUse, ParametricFormula};
use stlmine::{parse_formula, parse_template, robustness, Formula, TimedTrace};

use config::Config;

#[derive(Parser)]
#[command(name = "stlmine", version, about = "Mine STL environment assumptions for black-box components")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Robustness of a formula on a trace at time 0.
    Monitor(MonitorArgs),
    /// Learn an STL classifier from good/bad trace directories.
    Classify(ClassifyArgs),
    /// Mine an environment assumption for a model.
    Mine(MineArgs),
    /// Search for an input satisfying an assumption whose output violates a requirement.
    Falsify(FalsifyArgs),
    /// Print the first templates of the enumeration.
    Enumerate(EnumerateArgs),
    /// Write the delayed-response dataset as good/ and bad/ trace CSVs.
    GenDataset(GenDatasetArgs),
}

/// A formula given inline or as `@path`.
fn formula_text(s: &str) -> Result<String> {
    match s.strip_prefix('@') {
        Some(path) => Ok(fs::read_to_string(path).with_context(|| format!("reading {path}"))?.trim().to_string()),
        None => Ok(s.to_string()),
    }
}

fn formula(s: &str) -> Result<Formula> {
    let text = formula_text(s)?;
    parse_formula(&text).with_context(|| format!("parsing `{text}`"))
}

#[derive(Args)]
struct MonitorArgs {
    /// Formula text, or @file.
    #[arg(long, short)]
    formula: String,
    #[arg(long, short)]
    trace: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    good: PathBuf,
    #[arg(long)]
    bad: PathBuf,
    /// Fixed template (text or @file); without it, templates are enumerated.
    #[arg(long)]
    template: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter range, `name=lo:hi`; repeatable.
    #[arg(long = "range", value_parser = parse_named_range)]
    ranges: Vec<(String, (f64, f64))>,
    /// Range of time parameters, `lo:hi`.
    #[arg(long, value_parser = parse_range)]
    time_range: Option<(f64, f64)>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    max_length: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    split_ratio: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also score a tree trained on raw per-timepoint values.
    #[arg(long)]
    baseline: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the training feature matrix as CSV.
    #[arg(long)]
    features: Option<PathBuf>,
}

#[derive(Args)]
struct MineArgs {
    /// `delay` or `oscillator`; other models come from the config file.
    #[arg(long)]
    model: Option<String>,
    /// Output requirement (text or @file).
    #[arg(long)]
    requirement: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    max_length: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    traces: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct FalsifyArgs {
    #[arg(long)]
    model: Option<String>,
    /// Candidate assumption over the inputs (text or @file).
    #[arg(long)]
    assumption: String,
    /// Output requirement (text or @file).
    #[arg(long)]
    requirement: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    control_points: Option<usize>,
    #[arg(long, value_parser = parse_interpolation)]
    interpolation: Option<Interpolation>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the counterexample input trace here.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Comma-separated signal names.
    #[arg(long, value_delimiter = ',', required = true)]
    signals: Vec<String>,
    #[arg(long, short, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    max_length: usize,
    /// Use `G[0,?t]` windows.
    #[arg(long)]
    anchored: bool,
    /// Include the until operator.
    #[arg(long)]
    until: bool,
}

#[derive(Args)]
struct GenDatasetArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 300)]
    good: usize,
    #[arg(long, default_value_t = 300)]
    bad: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((lo, hi))
}

fn parse_named_range(s: &str) -> Result<(String, (f64, f64)), String> {
    let (name, r) = s.split_once('=').ok_or("expected name=lo:hi")?;
    Ok((name.trim().trim_start_matches('?').to_string(), parse_range(r)?))
}

fn parse_interpolation(s: &str) -> Result<Interpolation, String> {
    match s {
        "constant" | "piecewise_constant" => Ok(Interpolation::PiecewiseConstant),
        "linear" | "piecewise_linear" => Ok(Interpolation::PiecewiseLinear),
        _ => Err("expected `constant` or `linear`".into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Monitor(a) => cmd_monitor(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Mine(a) => cmd_mine(a),
        Command::Falsify(a) => cmd_falsify(a),
        Command::Enumerate(a) => cmd_enumerate(a),
        Command::GenDataset(a) => cmd_gen_dataset(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn cmd_monitor(a: MonitorArgs) -> Result<bool> {
    let phi = formula(&a.formula)?;
    let x = TimedTrace::load(&a.trace).with_context(|| format!("loading {}", a.trace.display()))?;
    let rho = robustness(&phi, &x, 0.0)?;
    let sat = rho >= 0.0;
    println!("robustness: {rho}");
    println!("verdict: {}", if sat { "SAT" } else { "UNSAT" });
    Ok(sat)
}

fn load_dir(dir: &Path) -> Result<Vec<TimedTrace>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "csv"));
    paths.sort();
    if paths.is_empty() {
        bail!("no .csv traces in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| TimedTrace::load(p).with_context(|| format!("loading {}", p.display())))
        .collect()
}

#[derive(Serialize)]
struct ClassifyReport {
    schema_version: u32,
    template: Option<String>,
    formula: Option<String>,
    train_accuracy: Option<f64>,
    test_accuracy: Option<f64>,
    valuations: usize,
    tree_size: Option<usize>,
    templates_tried: usize,
    passed_gate: bool,
    baseline_accuracy: Option<f64>,
}

fn cmd_classify(a: ClassifyArgs) -> Result<bool> {
    let cfg = Config::load(a.config.as_deref())?;
    let mut cc = cfg.classify;
    if let Some(v) = a.samples {
        cc.samples = v;
    }
    if let Some(v) = a.max_length {
        cc.max_length = v;
    }
    if let Some(v) = a.epsilon {
        cc.epsilon = v;
    }
    if let Some(v) = a.split_ratio {
        cc.split_ratio = v;
    }
    if let Some(v) = a.seed {
        cc.seed = v;
    }
    if a.time_range.is_some() {
        cc.time_range = a.time_range;
    }
    cc.ranges.extend(a.ranges);

    let data = LabeledTraces {
        good: load_dir(&a.good)?,
        bad: load_dir(&a.bad)?,
    };
    let (train, test) = split_dataset(&data, cc.split_ratio, cc.seed)?;
    let class_cfg = ClassifierConfig {
        split_ratio: cc.split_ratio,
        samples: cc.samples,
        tree: cc.tree,
        seed: cc.seed,
    };

    // default ranges: observed extent of each signal, and the shortest horizon
    let mut extent: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for tr in data.good.iter().chain(&data.bad) {
        for (name, vals) in tr.channels() {
            let e = extent.entry(name.clone()).or_insert((f64::INFINITY, f64::NEG_INFINITY));
            for &v in vals {
                e.0 = e.0.min(v);
                e.1 = e.1.max(v);
            }
        }
    }
    let horizon = data.good.iter().chain(&data.bad).map(TimedTrace::duration).fold(f64::INFINITY, f64::min);
    let time_range = cc.time_range.unwrap_or((0.0, horizon));
    let range_of = |name: &str, u: &ParamUse| -> Option<(f64, f64)> {
        cc.ranges.get(name).copied().or(match u {
            ParamUse::Time => Some(time_range),
            ParamUse::Value { signal } => extent.get(signal).copied(),
        })
    };

    let templates: Vec<_> = match &a.template {
        Some(t) => {
            let text = formula_text(t)?;
            vec![parse_template(&text).with_context(|| format!("parsing `{text}`"))?]
        }
        None => {
            let signals: Vec<String> = extent.keys().cloned().collect();
            let grammar = stlmine::enumeration::GrammarConfig {
                max_length: cc.max_length.saturating_sub(1),
                ..cc.grammar.clone()
            };
            Enumerator::new(signals, grammar).collect()
        }
    };

    let mut report = ClassifyReport {
        schema_version: SCHEMA_VERSION,
        template: None,
        formula: None,
        train_accuracy: None,
        test_accuracy: None,
        valuations: 0,
        tree_size: None,
        templates_tried: 0,
        passed_gate: false,
        baseline_accuracy: None,
    };
    let fixed = a.template.is_some();
    for template in templates {
        report.templates_tried += 1;
        let psi = match ParametricFormula::new(template, &range_of) {
            Ok(p) => p,
            Err(e) if !fixed => {
                eprintln!("skipping template: {e}");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let c = match classify_split(&psi, &train, &test, &class_cfg) {
            Ok(c) => c,
            Err(ClassifierError::Pstl(e)) if !fixed => {
                eprintln!("skipping `{psi}`: {e}");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let passed = c.test_accuracy > 1.0 - cc.epsilon;
        if passed || fixed {
            report.template = Some(psi.to_string());
            report.formula = extract_stl(&c.tree, &psi, &c.valuations).ok().map(|f| f.to_string());
            report.train_accuracy = Some(c.train_accuracy);
            report.test_accuracy = Some(c.test_accuracy);
            report.valuations = c.valuations.len();
            report.tree_size = Some(c.tree.size());
            report.passed_gate = passed;
            if let Some(path) = &a.features {
                c.train.write_csv(fs::File::create(path)?)?;
            }
            break;
        }
    }
    if a.baseline {
        report.baseline_accuracy = Some(naive_timepoint_baseline(&train, &test, &cc.tree)?);
    }
    match &report.formula {
        Some(f) => eprintln!("formula: {f}"),
        None => eprintln!("no template passed the accuracy gate"),
    }
    emit_json(&report, a.report.as_deref(), true)?;
    Ok(report.passed_gate)
}

fn emit_json<T: Serialize>(value: &T, path: Option<&Path>, stdout_fallback: bool) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None if stdout_fallback => {
            use std::io::Write;
            writeln!(std::io::stdout().lock(), "{text}").context("writing to stdout")?
        }
        None => {}
    }
    Ok(())
}

fn model_config(name: Option<&str>, cfg: &Config) -> Result<ModelConfig> {
    match name {
        Some("delay") => Ok(match &cfg.model {
            Some(m @ ModelConfig::Delay { .. }) => m.clone(),
            _ => ModelConfig::Delay {
                delay: 1.0,
                default: 1.0,
                range: (-1.0, 1.0),
            },
        }),
        Some("oscillator") => Ok(ModelConfig::Oscillator),
        Some(other) => match &cfg.model {
            Some(m @ ModelConfig::Subprocess { .. }) if other == "subprocess" => Ok(m.clone()),
            _ => bail!("unknown model `{other}` (expected delay, oscillator, or a [model] table)"),
        },
        None => cfg.model.clone().context("no model given: pass --model or add a [model] table"),
    }
}

fn cmd_mine(a: MineArgs) -> Result<bool> {
    let cfg = Config::load(a.config.as_deref())?;
    let model = model_config(a.model.as_deref(), &cfg)?.build()?;
    let phi_out = formula(&a.requirement)?;
    let mut mc = cfg.miner;
    if let Some(v) = a.seed {
        mc.seed = v;
    }
    if let Some(v) = a.budget {
        mc.falsifier.budget = v;
    }
    if let Some(v) = a.max_length {
        mc.max_length = v;
    }
    if let Some(v) = a.samples {
        mc.samples = v;
    }
    if let Some(v) = a.traces {
        mc.traces = v;
    }
    if let Some(v) = a.epsilon {
        mc.epsilon = v;
    }
    let report = mine(model.as_ref(), &phi_out, &mc)?;
    emit_json(&report, a.report.as_deref(), false)?;
    if a.json {
        emit_json(&report, None, true)?;
    } else {
        match &report.result {
            MiningOutcome::Assumption {
                formula,
                template,
                test_accuracy,
            } => {
                println!("assumption: {formula}");
                println!("template: {template}");
                println!("test accuracy: {test_accuracy}");
            }
            MiningOutcome::Failure { reason } => println!("failure: {reason}"),
        }
        println!("candidates: {}", report.candidates.len());
        println!("counterexamples: {}", report.counterexamples);
        println!("simulations: {}", report.simulations);
        println!("wall time: {:.2} s", report.wall_time_s);
    }
    Ok(matches!(report.result, MiningOutcome::Assumption { .. }))
}

fn cmd_falsify(a: FalsifyArgs) -> Result<bool> {
    let cfg = Config::load(a.config.as_deref())?;
    let model = model_config(a.model.as_deref(), &cfg)?.build()?;
    let phi_in = formula(&a.assumption)?;
    let phi_out = formula(&a.requirement)?;
    let mut fc = cfg.miner.falsifier.clone();
    if let Some(v) = a.budget {
        fc.budget = v;
    }
    if let Some(v) = a.k {
        fc.k = v;
    }
    if let Some(v) = a.seed {
        fc.seed = v;
    }
    let time = TimeDomain {
        duration: a.duration.unwrap_or(cfg.miner.time.duration),
        dt: a.dt.unwrap_or(cfg.miner.time.dt),
    };
    let spec = ControlPointSpec::for_model(
        model.as_ref(),
        a.control_points.unwrap_or(cfg.miner.control_points),
        a.interpolation.unwrap_or(cfg.miner.interpolation),
        time,
    );
    let out = falsify(model.as_ref(), &phi_in, &phi_out, &spec, &fc)?;
    println!("simulations: {}", out.simulations);
    match out.counterexample {
        Some(c) => {
            println!("counterexample: found");
            println!("assumption robustness: {}", c.rho_in);
            println!("requirement robustness: {}", c.rho_out);
            if let Some(p) = &a.output {
                c.input.save(p).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        None => println!("counterexample: none"),
    }
    Ok(true)
}

fn cmd_enumerate(a: EnumerateArgs) -> Result<bool> {
    let mut grammar = stlmine::enumeration::GrammarConfig {
        max_length: a.max_length,
        anchored_intervals: a.anchored,
        ..Default::default()
    };
    if a.until {
        grammar.operators.push(Operator::Until);
    }
    for t in Enumerator::new(a.signals, grammar).take(a.n) {
        println!("{t}");
    }
    Ok(true)
}

fn cmd_gen_dataset(a: GenDatasetArgs) -> Result<bool> {
    let data = delay_pair_dataset(a.good, a.bad, a.seed, &DelayPairConfig::default())?;
    for (sub, traces) in [("good", &data.good), ("bad", &data.bad)] {
        let dir = a.out.join(sub);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for (i, tr) in traces.iter().enumerate() {
            let p = dir.join(format!("{i:04}.csv"));
            tr.save(&p).with_context(|| format!("writing {}", p.display()))?;
        }
    }
    println!("wrote {} good and {} bad traces to {}", data.good.len(), data.bad.len(), a.out.display());
    Ok(true)
}
