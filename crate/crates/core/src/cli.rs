//! Command-line front end. Every rational in machine-readable output is a
//! `p/q` string unless `--decimal` is given.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::instance::{feasible, parse_instance_doc, Instance, ObjectiveKind};
use crate::mechanisms::{in_range, Mechanism, MechanismSpec};
use crate::objectives::{eval_cost, optimum};
use crate::predictions::{delta_c, delta_r, f_rand, f_robust, f_util, gamma_max};
use crate::rational::{Extended, Rational};
use crate::verification::{
    check_sp_deterministic, check_sp_in_expectation, gen_family, measure_ratio, report_for, sweep, write_csv,
    DeviationSet, Family, GeneratorSpec, MedianProfile, PredictionModel, RandomModel, SweepConfig,
};

const DECIMAL_PLACES: u32 = 6;

#[derive(Parser, Debug)]
#[command(name = "facloc", version, about = "Facility location on the line with outliers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal location, cost and retained window.
    Solve(InstanceArgs),
    /// Run a mechanism and report its approximation ratio.
    Run(MechArgs),
    /// Search the default deviation grid for a profitable misreport.
    VerifySp(MechArgs),
    /// Ratio sweep over seeded random instances.
    Sweep(SweepArgs),
    /// Guarantee formulas on a grid of (n, z).
    Bounds(BoundsArgs),
    /// Recompute a published quantity and check it.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Render rationals as fixed-point decimals.
    #[arg(long)]
    decimal: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct InstanceArgs {
    /// Instance JSON file, `-` for stdin.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    objective: Option<ObjectiveKind>,
    /// Replace the file's outlier budget.
    #[arg(long)]
    z_override: Option<usize>,
    /// Replace the file's prediction.
    #[arg(long, allow_hyphen_values = true)]
    prediction: Option<Rational>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct MechArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Short form (`left_z`, `kth:3`, `phantom:-inf;0;inf`, `in_range:1`) or JSON tag.
    #[arg(long, allow_hyphen_values = true)]
    mech: MechanismSpec,
    /// Confidence parameter for `in_range`.
    #[arg(long)]
    gamma: Option<usize>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, allow_hyphen_values = true)]
    mech: MechanismSpec,
    #[arg(long)]
    gamma: Option<usize>,
    #[arg(long, default_value = "utilitarian")]
    objective: ObjectiveKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    z: usize,
    #[arg(long, default_value = "uniform")]
    model: RandomModel,
    #[arg(long, default_value = "none")]
    prediction_model: PredictionModel,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// Only this n; otherwise 3..=n-max.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 12)]
    n_max: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    target: Target,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Target {
    #[value(name = "figure1")]
    Frontier,
    #[value(name = "table1")]
    BoundsTable,
    #[value(name = "example-5-2-2")]
    WorkedExample,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code: 0 success, 1 failed bound or SP check, 2 bad input.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// `Ok(false)` means a check failed.
fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Run(a) => cmd_run(&a),
        Command::VerifySp(a) => cmd_verify_sp(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Bounds(a) => cmd_bounds(&a),
        Command::Reproduce(a) => cmd_reproduce(&a),
    }
}

fn io_err(path: &std::path::Path, e: io::Error) -> Error {
    Error::Malformed(format!("{}: {e}", path.display()))
}

fn load(args: &InstanceArgs) -> Result<(Instance, ObjectiveKind)> {
    let text = if args.instance.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| io_err(&args.instance, e))?;
        s
    } else {
        fs::read_to_string(&args.instance).map_err(|e| io_err(&args.instance, e))?
    };
    let doc = parse_instance_doc(&text)?;
    let mut inst = doc.instance;
    if let Some(z) = args.z_override {
        inst = inst.with_z(z)?;
    }
    if let Some(p) = &args.prediction {
        inst = inst.with_prediction(Some(p.clone()));
    }
    let objective = args.objective.or(doc.objective).unwrap_or(ObjectiveKind::Utilitarian);
    Ok((inst, objective))
}

fn with_gamma(mech: &MechanismSpec, gamma: Option<usize>) -> Result<MechanismSpec> {
    match (mech, gamma) {
        (_, None) => Ok(mech.clone()),
        (MechanismSpec::InRange { .. }, Some(gamma)) => Ok(MechanismSpec::InRange { gamma }),
        (other, Some(_)) => Err(Error::InvalidParameters(format!("--gamma only applies to in_range, not {other}"))),
    }
}

/// Rewrites every string that parses as a rational into a decimal.
fn decimalize(value: Value) -> Value {
    match value {
        Value::String(s) => Value::String(decimal_field(&s)),
        Value::Array(items) => Value::Array(items.into_iter().map(decimalize).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, decimalize(v))).collect()),
        other => other,
    }
}

fn decimal_field(s: &str) -> String {
    match s.parse::<Rational>() {
        Ok(r) => r.to_decimal_string(DECIMAL_PLACES),
        Err(_) => s.to_string(),
    }
}

fn write_out(output: &Output, text: &str) -> Result<()> {
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|e| io_err(path, e)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::Malformed(format!("stdout: {e}")))
        }
    }
}

fn emit_json<S: Serialize>(output: &Output, value: &S) -> Result<()> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Malformed(format!("json: {e}")))?;
    if output.decimal {
        v = decimalize(v);
    }
    let mut text = serde_json::to_string_pretty(&v).map_err(|e| Error::Malformed(format!("json: {e}")))?;
    text.push('\n');
    write_out(output, &text)
}

fn csv_text<S: Serialize>(rows: &[S], decimal: bool) -> Result<String> {
    let csv_err = |e: csv::Error| Error::Malformed(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Malformed(format!("csv: {e}")))?;
    if !decimal {
        return Ok(String::from_utf8_lossy(&bytes).into_owned());
    }
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(r.headers().map_err(csv_err)?).map_err(csv_err)?;
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        w.write_record(rec.iter().map(decimal_field)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Malformed(format!("csv: {e}")))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

fn cmd_solve(args: &InstanceArgs) -> Result<bool> {
    let (inst, objective) = load(args)?;
    emit_json(&args.output, &optimum(&inst, objective))?;
    Ok(true)
}

fn cmd_run(args: &MechArgs) -> Result<bool> {
    let (inst, objective) = load(&args.inst)?;
    let mech = with_gamma(&args.mech, args.gamma)?;
    let outcome = mech.outcome(&inst)?;
    let report = report_for(&mech, &inst, objective, &outcome);
    let ok = report.within_bound;
    emit_json(
        &args.inst.output,
        &json!({
            "mechanism": mech.to_string(),
            "objective": objective,
            "outcome": outcome,
            "report": report,
        }),
    )?;
    Ok(ok)
}

fn cmd_verify_sp(args: &MechArgs) -> Result<bool> {
    let (inst, _) = load(&args.inst)?;
    let mech = with_gamma(&args.mech, args.gamma)?;
    let cert = if mech.is_randomized() {
        check_sp_in_expectation(&mech, &inst, &DeviationSet::DefaultGrid)?
    } else {
        check_sp_deterministic(&mech, &inst, &DeviationSet::DefaultGrid)?
    };
    let ok = cert.is_none();
    emit_json(&args.inst.output, &json!({ "mechanism": mech.to_string(), "certificate": cert }))?;
    Ok(ok)
}

fn cmd_sweep(args: &SweepArgs) -> Result<bool> {
    let config = SweepConfig {
        mechanism: with_gamma(&args.mech, args.gamma)?,
        objective: args.objective,
        generator: GeneratorSpec::new(args.n, args.z, args.model).with_prediction(args.prediction_model),
        count: args.count,
        seed: args.seed,
        workers: args.workers,
    };
    let report = sweep(&config)?;
    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(&args.output, &report)?,
        Format::Csv => {
            if args.output.decimal {
                write_out(&args.output, &csv_text(&report.rows, true)?)?;
            } else {
                let mut buf = Vec::new();
                write_csv(&report.rows, &mut buf)?;
                write_out(&args.output, &String::from_utf8_lossy(&buf))?;
            }
            eprintln!(
                "max ratio {} over {} instances, {} outside the bound",
                report.max_ratio, report.count, report.out_of_bound
            );
        }
    }
    Ok(report.all_within_bound)
}

/// Guarantee values for one `(n, z)`; entries outside a formula's domain are null.
pub fn bounds_entry(n: usize, z: usize) -> Value {
    let s = |r: Result<Rational>| r.ok().map(|v| v.to_string());
    json!({
        "n": n,
        "z": z,
        "f_util": s(f_util(n, z)),
        "f_rand": s(f_rand(n, z)),
        "f_robust": s(f_robust(n, z)),
        "gamma_max": gamma_max(n, z).ok(),
        "delta_c": delta_c(n, z).ok(),
        "delta_r": delta_r(n, z).ok(),
    })
}

fn cmd_bounds(args: &BoundsArgs) -> Result<bool> {
    let ns: Vec<usize> = match args.n {
        Some(n) => vec![n],
        None => (3..=args.n_max).collect(),
    };
    let mut table = Map::new();
    for n in ns {
        for z in 1..=n.saturating_sub(1) / 2 {
            table.insert(format!("{n},{z}"), bounds_entry(n, z));
        }
    }
    if table.is_empty() {
        return Err(Error::InvalidParameters("no feasible (n, z) in range".into()));
    }
    emit_json(&args.output, &Value::Object(table))?;
    Ok(true)
}

/// Worst left-median ratio on the tightness profile next to its formula.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrontierRow {
    pub n: usize,
    pub z: usize,
    pub f: Rational,
    pub attained: Extended,
    pub equal: bool,
}

pub fn frontier_rows() -> Result<Vec<FrontierRow>> {
    let mut rows = Vec::new();
    for n in [8usize, 12, 16, 20] {
        for z in 1..=(n - 1) / 2 {
            let f = f_util(n, z)?;
            let family = Family::MedianTightness { profile: MedianProfile::LeftHeavy, n, z, d: Rational::one() };
            let inst = gen_family(&family)?;
            let attained = measure_ratio(&MechanismSpec::LeftMedian, &inst, ObjectiveKind::Utilitarian)?.ratio;
            let equal = attained == Extended::Finite(f.clone());
            rows.push(FrontierRow { n, z, f, attained, equal });
        }
    }
    Ok(rows)
}

/// Upper and lower bounds per objective; `-` where none is stated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundsRow {
    pub objective: ObjectiveKind,
    pub n: usize,
    pub z: usize,
    pub deterministic_upper: String,
    pub deterministic_lower: String,
    pub randomized_upper: String,
    pub randomized_lower: String,
}

pub fn bounds_table_rows(n_max: usize) -> Result<Vec<BoundsRow>> {
    let dash = || "-".to_string();
    let mut rows = Vec::new();
    for n in 3..=n_max {
        for z in (1..=(n - 1) / 2).filter(|&z| feasible(n, z)) {
            let util = f_util(n, z)?.to_string();
            let randomized_lower = match (n, z) {
                (4, 1) => "3/2".to_string(),
                (5, 2) => "2".to_string(),
                _ => dash(),
            };
            rows.push(BoundsRow {
                objective: ObjectiveKind::Utilitarian,
                n,
                z,
                deterministic_upper: util.clone(),
                deterministic_lower: util,
                randomized_upper: f_rand(n, z).map(|r| r.to_string()).unwrap_or_else(|_| dash()),
                randomized_lower,
            });
            let two = "2".to_string();
            rows.push(BoundsRow {
                objective: ObjectiveKind::Egalitarian,
                n,
                z,
                deterministic_upper: two.clone(),
                deterministic_lower: two.clone(),
                randomized_upper: two.clone(),
                randomized_lower: two,
            });
        }
    }
    Ok(rows)
}

/// Optimal cost, cost at the prediction and cost at the In-Range output on
/// the eight-agent example with z = 3.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WorkedExample {
    pub opt_cost: Rational,
    pub prediction_cost: Rational,
    pub in_range_location: Rational,
    pub in_range_cost: Rational,
}

impl WorkedExample {
    pub fn expected() -> (Rational, Rational, Rational) {
        (Rational::one(), Rational::new(14, 5), Rational::new(37, 10))
    }

    pub fn matches_expected(&self) -> bool {
        let (a, b, c) = Self::expected();
        self.opt_cost == a && self.prediction_cost == b && self.in_range_cost == c
    }
}

pub fn worked_example() -> Result<WorkedExample> {
    let inst = gen_family(&Family::WorkedExample)?;
    let objective = ObjectiveKind::Utilitarian;
    let prediction = inst.prediction().ok_or(Error::MissingPrediction)?.clone();
    let loc = in_range(&inst, &prediction, 0)?;
    Ok(WorkedExample {
        opt_cost: optimum(&inst, objective).cost,
        prediction_cost: eval_cost(&inst, &prediction, objective).cost,
        in_range_cost: eval_cost(&inst, &loc, objective).cost,
        in_range_location: loc,
    })
}

fn cmd_reproduce(args: &ReproduceArgs) -> Result<bool> {
    let output = &args.output;
    match args.target {
        Target::Frontier => {
            let rows = frontier_rows()?;
            let ok = rows.iter().all(|r| r.equal);
            match output.format.unwrap_or(Format::Csv) {
                Format::Csv => write_out(output, &csv_text(&rows, output.decimal)?)?,
                Format::Json => emit_json(output, &rows)?,
            }
            if !ok {
                eprintln!("attained ratio differs from the formula");
            }
            Ok(ok)
        }
        Target::BoundsTable => {
            let rows = bounds_table_rows(12)?;
            match output.format.unwrap_or(Format::Csv) {
                Format::Csv => write_out(output, &csv_text(&rows, output.decimal)?)?,
                Format::Json => emit_json(output, &rows)?,
            }
            Ok(true)
        }
        Target::WorkedExample => {
            let ex = worked_example()?;
            let ok = ex.matches_expected();
            match output.format.unwrap_or(Format::Json) {
                Format::Json => emit_json(output, &ex)?,
                Format::Csv => write_out(output, &csv_text(std::slice::from_ref(&ex), output.decimal)?)?,
            }
            if !ok {
                eprintln!("recomputed values differ from (1, 14/5, 37/10)");
            }
            Ok(ok)
        }
    }
}
