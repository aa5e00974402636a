//! Command-line front end: `solve`, `check` and `bench`.
//!
//! Exit codes: 0 success, 1 configuration/parse/I-O error, 2 budget
//! exhausted without certification (solve) or a failed run (bench),
//! 3 weakly stationary only and 4 not stationary (check).

pub mod config;
pub mod svg;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data_io::{format_g, write_trace_file};
use crate::error::{Error, Result};
use crate::ippp::{ippp_solve, IpppOutcome, Multipliers, SelectOption, SolveStatus, SolveTrace};
use crate::model::Vector;
use crate::stationarity::{eps_stationary_check, stationarity_measure, KKTReport, Verdict};

pub use config::{parse_config_text, read_config_file, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_WEAK: i32 = 3;
pub const EXIT_NOT_STATIONARY: i32 = 4;

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "IPPP_SEED";

#[derive(Parser, Debug)]
#[command(name = "ippp", version, about = "Inexact proximal-point penalty solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the solver on one instance and certify the output.
    Solve(RunArgs),
    /// Certify a candidate point (and multipliers) read from a file.
    Check {
        #[command(flatten)]
        run: RunArgs,
        /// `key = value` file with `x`, and optionally `lambda` and `y`.
        #[arg(long)]
        point: PathBuf,
    },
    /// Run several configurations and write traces, a summary and a chart.
    Bench {
        /// Configuration files, one run each.
        configs: Vec<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override applied to every configuration.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// `key = value` configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in instance: qp1d, qp5d, wc, affine, mnpc2, mnpc3.
    #[arg(long)]
    fixture: Option<String>,
    /// LIBSVM dataset for an mNPC instance.
    #[arg(long)]
    data: Option<String>,
    /// convex, nonconvex, feasible or scaled.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    /// Output selection rule, I or II.
    #[arg(long)]
    option: Option<String>,
    #[arg(long = "k-max")]
    k_max: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Directory for the default trace and report files.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    trace: Option<String>,
    #[arg(long)]
    report: Option<String>,
    /// Any other configuration key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn apply_sets(map: &mut BTreeMap<String, String>, sets: &[String]) -> Result<()> {
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::config(format!("--set expects KEY=VALUE, found '{s}'")))?;
        let k = k.trim().to_ascii_lowercase().replace('-', "_");
        if !config::KEYS.contains(&k.as_str()) {
            return Err(Error::config(format!("unknown key '{k}'")));
        }
        map.insert(k, v.trim().to_string());
    }
    Ok(())
}

fn apply_seed_env(map: &mut BTreeMap<String, String>, seed_env: Option<&str>) {
    if let Some(s) = seed_env {
        map.insert("seed".into(), s.trim().to_string());
    }
}

impl RunArgs {
    fn to_map(&self, seed_env: Option<&str>) -> Result<BTreeMap<String, String>> {
        let mut map = match &self.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        let flags = [
            ("fixture", &self.fixture),
            ("data", &self.data),
            ("schedule", &self.schedule),
            ("gamma", &self.gamma),
            ("beta", &self.beta),
            ("eps", &self.eps),
            ("option", &self.option),
            ("k_max", &self.k_max),
            ("seed", &self.seed),
            ("out", &self.out),
            ("trace", &self.trace),
            ("report", &self.report),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                map.insert(k.to_string(), v.clone());
            }
        }
        apply_sets(&mut map, &self.set)?;
        apply_seed_env(&mut map, seed_env);
        Ok(map)
    }
}

/// Entry point used by the binary; reads `IPPP_SEED` from the environment.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let seed = std::env::var(SEED_ENV).ok();
    run_with_seed(args, seed.as_deref(), out, err)
}

/// As [`run`] with an explicit value standing in for `IPPP_SEED`.
pub fn run_with_seed<I, T>(args: I, seed_env: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ERROR,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => a.to_map(seed_env).and_then(|m| cmd_solve(&m, out, err)),
        Command::Check { run, point } => run.to_map(seed_env).and_then(|m| cmd_check(&m, point, out)),
        Command::Bench { configs, out: dir, set } => cmd_bench(configs, dir, set, seed_env, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Option I needs full eps-stationarity, Option II the weak form.
pub fn certified(option: SelectOption, verdict: Verdict) -> bool {
    match option {
        SelectOption::I => verdict == Verdict::EpsStationary,
        SelectOption::II => verdict != Verdict::Fail,
    }
}

pub fn status_label(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxOuter => "max_outer",
        SolveStatus::ProxBudget => "prox_budget",
        SolveStatus::InnerBudgetExhausted => "inner_budget_exhausted",
    }
}

/// A finished solve with its certification.
pub struct SolveRun {
    pub config: RunConfig,
    pub outcome: IpppOutcome,
    pub kkt: KKTReport,
}

impl SolveRun {
    pub fn exit_code(&self) -> i32 {
        if certified(self.config.option, self.kkt.verdict) {
            EXIT_OK
        } else {
            EXIT_BUDGET
        }
    }

    pub fn max_metric(&self) -> f64 {
        self.config.option.score(&self.outcome.report)
    }

    /// KKT block followed by run summary lines, all `key=value`.
    pub fn report_text(&self) -> String {
        let o = &self.outcome;
        let mut s = self.kkt.to_kv();
        s.push_str(&format!("max_metric={}\n", format_g(self.max_metric())));
        let r = o.trace.r_index.map_or_else(|| "none".to_string(), |i| i.to_string());
        s.push_str(&format!("R_K={r}\noption={}\n", o.trace.option.label()));
        s.push_str(&format!("status={}\n", status_label(o.status)));
        s.push_str(&format!("outer_iterations={}\n", o.trace.records.len()));
        s.push_str(&format!(
            "cum_steps={}\n",
            o.trace.records.last().map_or(0, |r| r.cum_steps)
        ));
        s.push_str(&format!("objective={}\n", format_g(o.trace.records.get(o.trace.r_index.unwrap_or(0)).map_or(f64::NAN, |r| r.objective))));
        s
    }
}

/// Resolves and runs one configuration.
pub fn execute(config: RunConfig) -> Result<SolveRun> {
    let r = config.resolve()?;
    let outcome = ippp_solve(&r.problem, &r.settings, &r.x0)?;
    let kkt = eps_stationary_check(&r.problem, &outcome.x_out, &outcome.multipliers, config.eps)?;
    Ok(SolveRun { config, outcome, kkt })
}

fn cmd_solve(map: &BTreeMap<String, String>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let config = RunConfig::from_pairs(map)?;
    let run = execute(config)?;
    if run.outcome.infeasible_start {
        let _ = writeln!(err, "warning: the feasible-start schedule was run from an infeasible point");
    }
    let trace_path = run.config.trace_path("trace.csv");
    ensure_parent(&trace_path)?;
    write_trace_file(&run.outcome.trace, &trace_path)?;
    let text = run.report_text();
    write_file(&run.config.report_path(), &text)?;
    let _ = write!(out, "{text}");
    Ok(run.exit_code())
}

/// Reads `x`, `lambda` and `y` from a `key = value` point file.
pub fn read_point_file(path: &Path) -> Result<(Vector, Option<Vector>, Option<Vector>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut x = None;
    let mut lambda = None;
    let mut y = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| Error::InvalidConfig(format!("{}:{}: {message}", path.display(), n + 1));
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key = value, found '{line}'")))?;
        let vals = Vector::from_vec(config::parse_list(k.trim(), v).map_err(|e| bad(e.to_string()))?);
        match k.trim() {
            "x" => x = Some(vals),
            "lambda" => lambda = Some(vals),
            "y" => y = Some(vals),
            other => return Err(bad(format!("unknown key '{other}' (expected x, lambda or y)"))),
        }
    }
    let x = x.ok_or_else(|| Error::config(format!("{}: no x entry", path.display())))?;
    Ok((x, lambda, y))
}

fn cmd_check(map: &BTreeMap<String, String>, point: &Path, out: &mut dyn Write) -> Result<i32> {
    let config = RunConfig::from_pairs(map)?;
    let (p, _) = config.build_problem()?;
    let (x, lambda, y) = read_point_file(point)?;
    let mult = Multipliers {
        lambda: lambda.unwrap_or_else(|| Vector::zeros(p.m())),
        y: y.unwrap_or_else(|| Vector::zeros(p.n())),
    };
    let report = eps_stationary_check(&p, &x, &mult, config.eps)?;
    let _ = write!(out, "{}", report.to_kv());
    match stationarity_measure(&p, &x) {
        Ok(v) => {
            let _ = writeln!(out, "stationarity_measure={}", format_g(v));
        }
        Err(e) => {
            let _ = writeln!(out, "stationarity_measure=unavailable ({e})");
        }
    }
    Ok(match report.verdict {
        Verdict::EpsStationary => EXIT_OK,
        Verdict::WeakEpsStationary => EXIT_WEAK,
        Verdict::Fail => EXIT_NOT_STATIONARY,
    })
}

/// Header of the bench summary.
pub const SUMMARY_HEADER: &str = "name,status,verdict,outer_iterations,cum_steps,R_K,objective,S,F,C";

fn summary_row(run: &SolveRun) -> String {
    let t = &run.outcome.trace;
    let sel = t.r_index.and_then(|i| t.records.get(i));
    let field = |f: fn(&crate::ippp::TraceRecord) -> f64| sel.map_or_else(String::new, |r| format_g(f(r)));
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        run.config.name,
        status_label(run.outcome.status),
        run.kkt.verdict.as_str(),
        t.records.len(),
        t.records.last().map_or(0, |r| r.cum_steps),
        t.r_index.map_or_else(|| "none".to_string(), |i| i.to_string()),
        field(|r| r.objective),
        field(|r| r.s),
        field(|r| r.f),
        field(|r| r.c),
    )
}

fn cmd_bench(
    configs: &[PathBuf],
    dir: &Path,
    sets: &[String],
    seed_env: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    if configs.is_empty() {
        return Err(Error::config("bench needs at least one configuration file"));
    }
    let mut loaded: Vec<Result<RunConfig>> = configs
        .iter()
        .map(|path| {
            let mut map = read_config_file(path)?;
            if !map.contains_key("name") {
                if let Some(stem) = path.file_stem() {
                    map.insert("name".into(), stem.to_string_lossy().into_owned());
                }
            }
            apply_sets(&mut map, sets)?;
            apply_seed_env(&mut map, seed_env);
            RunConfig::from_pairs(&map)
        })
        .collect();
    // run names become file names and must be distinct
    let mut seen = std::collections::BTreeSet::new();
    for c in loaded.iter_mut().flatten() {
        let base = c.name.clone();
        let mut i = 2;
        while !seen.insert(c.name.clone()) {
            c.name = format!("{base}_{i}");
            i += 1;
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let results: Vec<Result<SolveRun>> = std::thread::scope(|scope| {
        let handles: Vec<_> = loaded
            .into_iter()
            .map(|c| scope.spawn(move || c.and_then(execute)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::config("run panicked"))))
            .collect()
    });

    let mut summary = format!("{SUMMARY_HEADER}\n");
    let mut plotted: Vec<(String, SolveTrace)> = Vec::new();
    let mut failures = 0;
    for (path, res) in configs.iter().zip(results) {
        match res.and_then(|run| {
            write_trace_file(&run.outcome.trace, &dir.join(format!("{}.csv", run.config.name)))?;
            Ok(run)
        }) {
            Ok(run) => {
                summary.push_str(&summary_row(&run));
                summary.push('\n');
                let _ = writeln!(
                    out,
                    "{}: {} max_metric={} verdict={}",
                    run.config.name,
                    status_label(run.outcome.status),
                    format_g(run.max_metric()),
                    run.kkt.verdict.as_str()
                );
                plotted.push((run.config.name.clone(), run.outcome.trace));
            }
            Err(e) => {
                failures += 1;
                let _ = writeln!(err, "{}: run failed: {e}", path.display());
            }
        }
    }
    write_file(&dir.join("summary.csv"), &summary)?;
    write_file(&dir.join("bench.svg"), &svg::render(&plotted))?;
    Ok(if failures == 0 { EXIT_OK } else { EXIT_BUDGET })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with_seed(std::iter::once("ippp").chain(args.iter().copied()), None, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(call(&[]).0, EXIT_ERROR);
        assert_eq!(call(&["frobnicate"]).0, EXIT_ERROR);
        assert_eq!(call(&["solve", "--no-such-flag"]).0, EXIT_ERROR);
        assert_eq!(call(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn set_rejects_unknown_keys() {
        let (code, _, err) = call(&["solve", "--fixture", "qp1d", "--set", "colour=blue"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("colour"));
    }

    #[test]
    fn certification_depends_on_option() {
        assert!(certified(SelectOption::I, Verdict::EpsStationary));
        assert!(!certified(SelectOption::I, Verdict::WeakEpsStationary));
        assert!(certified(SelectOption::II, Verdict::WeakEpsStationary));
        assert!(!certified(SelectOption::II, Verdict::Fail));
    }
}
