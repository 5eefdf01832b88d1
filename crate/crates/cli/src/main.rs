//! `qcube`: command-line front end for the hypercube enumeration library.
//!
//! Every subcommand writes one JSON document `{command, params, result}` to
//! `--out` or standard output. Failures print a single JSON line on stderr.

mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qcube::asymptotics::{
    compute_b, compute_p, lambda_beta, log_count_asymptotic, log_z_asymptotic, r_table, structured_count, type_means,
    DivergingType, FixedType, ROptions,
};
use qcube::clusters::{ClusterOptions, ClusterSet, Observable};
use qcube::hypercube::Dim;
use qcube::numeric::{abs, ln_rat, real_from_rat, to_decimal_string, to_f64, DEFAULT_DIGITS};
use qcube::oracle::{odd_model_exact, size_profile_exhaustive, size_profile_with, OracleOptions};
use qcube::polymers::{census, census_with, enumerate_polymers_with, size_histogram, DefectType, DEFAULT_NODE_BUDGET};
use qcube::sampler::{cluster_type_means, defect_statistics, run_chains, write_csv, ChainConfig, StartState};
use qcube::symbolic::{parse_rat, rat_to_string, Rat, Var};
use qcube::validate::run_all;

#[derive(Parser, Debug)]
#[command(name = "qcube", version, about = "Independent sets in the hypercube: exact oracle, cluster expansion, asymptotics, sampler")]
struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true, env = "QCUBE_THREADS")]
    threads: Option<usize>,

    /// Write the JSON result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Precision {
    /// Decimal digits for high-precision evaluation.
    #[arg(long, default_value_t = DEFAULT_DIGITS)]
    digits: usize,
}

#[derive(Args, Debug, Clone)]
struct Budget {
    /// Allow R_j beyond the guaranteed range.
    #[arg(long)]
    best_effort: bool,

    /// Per-level cluster budget.
    #[arg(long)]
    budget: Option<u64>,
}

impl Budget {
    fn options(&self) -> ROptions {
        let mut o = ROptions { best_effort: self.best_effort, ..Default::default() };
        if let Some(b) = self.budget {
            o.budget = b;
        }
        o
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact independent-set counts i_m(Q_d) by size.
    Oracle {
        #[arg(long)]
        d: u32,
        /// Also report Z(λ) and E|I| at this fugacity.
        #[arg(long)]
        lambda: Option<String>,
        /// Permit the d = 6 transfer.
        #[arg(long)]
        allow_d6: bool,
        /// Use exhaustive subset enumeration (d ≤ 4).
        #[arg(long)]
        exhaustive: bool,
        /// Include the exact odd polymer model (d ≤ 4).
        #[arg(long)]
        odd_model: bool,
    },
    /// Polymer census by size and defect type.
    Polymers {
        #[arg(long)]
        d: u32,
        #[arg(long, default_value_t = 3)]
        max_size: usize,
        /// List every polymer (small d only).
        #[arg(long)]
        list: bool,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: u64,
    },
    /// Cluster strata, cluster sums and truncated log Ξ.
    Clusters {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        lambda: Option<String>,
        /// Observables: one, size^l, nbhd^l, mixed, type:<label>^l.
        #[arg(long = "observable", default_values_t = vec!["one".to_string()])]
        observables: Vec<String>,
        #[arg(long)]
        budget: Option<u64>,
        #[command(flatten)]
        precision: Precision,
    },
    /// Polynomials R_1..R_j.
    Rj {
        #[arg(long)]
        j: u32,
        #[command(flatten)]
        budget: Budget,
    },
    /// Fugacity coefficients B_1..B_r.
    Bj {
        #[arg(long)]
        r: u32,
        #[command(flatten)]
        budget: Budget,
    },
    /// Fixed-size coefficients P_1..P_{t-1}.
    Pj {
        #[arg(long)]
        t: u32,
        #[command(flatten)]
        budget: Budget,
    },
    /// The corrected fugacity λ_β.
    LambdaBeta {
        #[arg(long)]
        beta: String,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        t: u32,
        #[command(flatten)]
        budget: Budget,
    },
    /// log i_{⌊βN⌋}(Q_d) by the binomial and fugacity paths.
    Count {
        #[arg(long)]
        beta: String,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        t: u32,
        #[command(flatten)]
        precision: Precision,
        #[command(flatten)]
        budget: Budget,
    },
    /// Count with prescribed defect numbers: `--fixed LABEL=K`, `--diverging LABEL=S`.
    CountStructured {
        #[arg(long)]
        beta: String,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        t: u32,
        #[arg(long = "fixed")]
        fixed: Vec<String>,
        #[arg(long = "diverging")]
        diverging: Vec<String>,
        #[command(flatten)]
        precision: Precision,
        #[command(flatten)]
        budget: Budget,
    },
    /// Asymptotic log Z(λ).
    Zeta {
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        t: u32,
        #[command(flatten)]
        precision: Precision,
        #[command(flatten)]
        budget: Budget,
    },
    /// Glauber sampling with defect statistics.
    Sample {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        lambda: String,
        /// Snapshots per chain.
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        chains: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Sweeps between snapshots.
        #[arg(long, default_value_t = 1)]
        thin_sweeps: u64,
        /// Burn-in in sweeps; defaults to 10d.
        #[arg(long)]
        burn_in_sweeps: Option<u64>,
        #[arg(long, value_enum, default_value_t = Start::EvenFull)]
        start: Start,
        /// Largest defect size in the reference census.
        #[arg(long, default_value_t = 2)]
        census_size: usize,
        /// Add truncated cluster-expansion means up to this total size.
        #[arg(long)]
        cluster_k: Option<u32>,
        /// Per-snapshot CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the acceptance suite (all criteria unless some are given).
    Validate {
        criteria: Vec<u32>,
    },
    /// Merge earlier JSON outputs into a comparison table and plot data.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Directory for x-y plot data files.
        #[arg(long)]
        plot_dir: Option<PathBuf>,
        /// Emit the report as JSON instead of a text table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Start {
    Empty,
    EvenFull,
    OddFull,
}

impl From<Start> for StartState {
    fn from(s: Start) -> Self {
        match s {
            Start::Empty => StartState::Empty,
            Start::EvenFull => StartState::EvenFull,
            Start::OddFull => StartState::OddFull,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Core(qcube::Error),
    Usage(String),
    Io(String),
    /// Acceptance criteria failed.
    Failed(usize),
}

impl From<qcube::Error> for CliError {
    fn from(e: qcube::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_budget() => 2,
            CliError::Failed(_) => 3,
            _ => 1,
        }
    }

    fn kind(&self) -> String {
        match self {
            CliError::Core(e) => {
                let s = format!("{e:?}");
                s.split(['(', ' ', '{']).next().unwrap_or("Error").to_string()
            }
            CliError::Usage(_) => "Usage".into(),
            CliError::Io(_) => "Io".into(),
            CliError::Failed(_) => "AcceptanceFailed".into(),
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Usage(m) | CliError::Io(m) => m.clone(),
            CliError::Failed(n) => format!("{n} acceptance criteria failed"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn rat_arg(name: &str, s: &str) -> CliResult<Rat> {
    parse_rat(s).map_err(|_| CliError::Usage(format!("--{name}: cannot parse '{s}' as an exact rational")))
}

fn dim(d: u32) -> CliResult<Dim> {
    Ok(Dim::new(d)?)
}

/// Table holding `R_1..R_{t-1}`, enough for order-`t` formulas.
fn table_for(t: u32, b: &Budget) -> CliResult<qcube::asymptotics::RTable> {
    if t == 0 {
        return Err(CliError::Core(qcube::Error::InvalidParameter("truncation order t must be ≥ 1".into())));
    }
    Ok(r_table(t - 1, b.options())?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let msg: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .filter(|l| !l.is_empty())
                .collect();
            emit_error(&CliError::Usage(msg.join(" ").trim_start_matches("error: ").to_string()));
            return ExitCode::from(1);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            emit_error(&CliError::Usage("--threads must be at least 1".into()));
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            emit_error(&CliError::Usage(format!("thread pool: {e}")));
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            emit_error(&e);
            ExitCode::from(e.exit_code())
        }
    }
}

fn emit_error(e: &CliError) {
    let line = json!({"error": e.kind(), "exit": e.exit_code(), "message": e.message()});
    eprintln!("{line}");
}

pub fn write_output(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn envelope(command: &str, params: Value, result: Value) -> Value {
    json!({"command": command, "params": params, "result": result})
}

fn run(cli: &Cli) -> CliResult<()> {
    let doc = match &cli.command {
        Command::Report { inputs, plot_dir, json } => {
            let text = report::run(inputs, plot_dir.as_deref(), *json)?;
            return write_output(cli.out.as_deref(), &text);
        }
        Command::Validate { criteria } => return validate(cli, criteria),
        c => dispatch(c)?,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("json");
    text.push('\n');
    write_output(cli.out.as_deref(), &text)
}

fn dispatch(c: &Command) -> CliResult<Value> {
    Ok(match c {
        Command::Oracle { d, lambda, allow_d6, exhaustive, odd_model } => {
            let dd = dim(*d)?;
            let lam = lambda.as_deref().map(|s| rat_arg("lambda", s)).transpose()?;
            let profile = if *exhaustive { size_profile_exhaustive(dd)? } else { size_profile_with(dd, OracleOptions { allow_d6: *allow_d6 })? };
            let mut result = json!({"profile": profile.to_json(), "total": profile.total().to_string()});
            if let Some(l) = &lam {
                result["partition_function"] = json!(rat_to_string(&profile.partition_function(l)));
                result["expected_size"] = json!(rat_to_string(&profile.expected_size(l)));
            }
            if *odd_model {
                let om = odd_model_exact(dd)?;
                result["odd_model"] = json!({"xi": om.xi.to_string(), "z_odd": om.z_odd.to_string(), "polymers": om.polymers.len(), "configurations": om.configs.len()});
            }
            envelope("oracle", json!({"d": d, "lambda": lambda, "exhaustive": exhaustive}), result)
        }
        Command::Polymers { d, max_size, list, budget } => {
            let dd = dim(*d)?;
            let c = census_with(dd, *max_size, *budget)?;
            let mut result = json!({"census": c.to_json()});
            if *list {
                let ps = enumerate_polymers_with(dd, *max_size, *budget)?;
                result["histogram"] = json!(size_histogram(&ps));
                result["polymers"] = json!(ps.iter().map(|p| json!({"support": p.support.as_slice(), "nbhd": p.nbhd_size, "closure": p.closure_size})).collect::<Vec<_>>());
            }
            envelope("polymers", json!({"d": d, "max_size": max_size}), result)
        }
        Command::Clusters { d, k, lambda, observables, budget, precision } => clusters(*d, *k, lambda.as_deref(), observables, *budget, precision.digits)?,
        Command::Rj { j, budget } => envelope("rj", json!({"j": j, "best_effort": budget.best_effort}), r_table(*j, budget.options())?.to_json()),
        Command::Bj { r, budget } => {
            let rt = r_table(*r, budget.options())?;
            envelope("bj", json!({"r": r}), compute_b(&rt, *r as usize)?.to_json())
        }
        Command::Pj { t, budget } => {
            let rt = table_for(*t, budget)?;
            envelope("pj", json!({"t": t}), compute_p(&rt, *t)?.to_json())
        }
        Command::LambdaBeta { beta, d, t, budget } => {
            let b = rat_arg("beta", beta)?;
            let rt = table_for(*t, budget)?;
            envelope("lambda-beta", json!({"beta": rat_to_string(&b), "d": d, "t": t}), lambda_beta(&rt, &b, *d, *t)?.to_json())
        }
        Command::Count { beta, d, t, precision, budget } => {
            let b = rat_arg("beta", beta)?;
            let rt = table_for(*t, budget)?;
            let paths = log_count_asymptotic(&rt, &b, *d, *t, precision.digits)?;
            envelope("count", json!({"beta": rat_to_string(&b), "d": d, "t": t, "digits": precision.digits}), paths.to_json())
        }
        Command::CountStructured { beta, d, t, fixed, diverging, precision, budget } => {
            count_structured(beta, *d, *t, fixed, diverging, precision.digits, budget)?
        }
        Command::Zeta { lambda, d, t, precision, budget } => {
            let l = rat_arg("lambda", lambda)?;
            let rt = table_for(*t, budget)?;
            let lc = log_z_asymptotic(&rt, &l, *d, *t, precision.digits)?;
            envelope("zeta", json!({"lambda": rat_to_string(&l), "d": d, "t": t, "digits": precision.digits}), lc.to_json())
        }
        Command::Sample { d, lambda, samples, chains, seed, thin_sweeps, burn_in_sweeps, start, census_size, cluster_k, csv } => {
            let l = rat_arg("lambda", lambda)?;
            let dd = dim(*d)?;
            if *chains == 0 || *samples == 0 {
                return Err(CliError::Usage("--chains and --samples must be positive".into()));
            }
            let mut cfg = ChainConfig::with_samples(*d, l.clone(), *samples, *seed).thinned(*thin_sweeps);
            if let Some(b) = burn_in_sweeps {
                let n = cfg.snapshots();
                cfg.burn_in = b.saturating_mul(dd.num_vertices());
                cfg.steps = cfg.burn_in + n * cfg.thin;
            }
            cfg.start = (*start).into();
            cfg.validate()?;
            let records = run_chains(&cfg, *chains)?;
            let cen = census(dd, *census_size)?;
            let mut summary = defect_statistics(&records, &cen, &l)?;
            if let Some(k) = cluster_k {
                let types: Vec<DefectType> = cen.entries.keys().cloned().collect();
                summary = summary.with_cluster_means(&cluster_type_means(dd, &l, *k, &types)?);
            }
            if let Some(p) = csv {
                let f = std::fs::File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                write_csv(&records, std::io::BufWriter::new(f))?;
            }
            envelope("sample", json!({"config": cfg.to_json(), "chains": chains, "census_size": census_size}), summary.to_json())
        }
        Command::Validate { .. } | Command::Report { .. } => unreachable!("handled in run"),
    })
}

fn clusters(d: u32, k: u32, lambda: Option<&str>, observables: &[String], budget: Option<u64>, digits: usize) -> CliResult<Value> {
    let dd = dim(d)?;
    let obs: Vec<Observable> = observables.iter().map(|s| Observable::parse(s)).collect::<qcube::Result<_>>()?;
    let mut opts = ClusterOptions { keep_records: obs.iter().any(|o| *o != Observable::One), ..Default::default() };
    if let Some(b) = budget {
        opts.budget = b;
    }
    let set = ClusterSet::enumerate(dd, k, opts)?;
    let strata: Vec<Value> = set.strata.iter().map(|(&(kk, n), c)| json!({"k": kk, "n": n, "c": rat_to_string(c)})).collect();
    let mut sums = Vec::new();
    for o in &obs {
        for j in 1..=k {
            sums.push(set.cluster_sum(j, o)?.to_json());
        }
    }
    let mut result = json!({"counts_by_total": set.counts_by_total, "strata": strata, "sums": sums});
    if let Some(ls) = lambda {
        let l = rat_arg("lambda", ls)?;
        // exact log Ξ is available from the odd model in small dimensions
        let exact = if d <= 4 {
            let xi = odd_model_exact(dd)?.xi.eval(&[(Var::Lambda, l.clone())])?;
            Some(ln_rat(&xi, digits)?)
        } else {
            None
        };
        let mut rows = Vec::new();
        for j in 1..=k {
            let t = set.truncated_log_xi(&l, j)?;
            let mut row = json!({"k": j, "truncated_log_xi": to_decimal_string(&real_from_rat(&t, digits), 30)});
            if let Some(e) = &exact {
                let err = abs(&(real_from_rat(&t, digits) - e.clone()));
                row["abs_error"] = json!(to_f64(&err));
            }
            if j < k {
                row["next_stratum"] = json!(to_f64(&abs(&real_from_rat(&set.stratum_value(j + 1, &l), digits))));
            }
            rows.push(row);
        }
        result["lambda"] = json!(rat_to_string(&l));
        result["truncation"] = json!(rows);
        if let Some(e) = exact {
            result["exact_log_xi"] = json!(to_decimal_string(&e, 30));
        }
    }
    Ok(envelope("clusters", json!({"d": d, "k": k, "lambda": lambda, "observables": observables}), result))
}

fn split_pair(s: &str) -> CliResult<(String, Rat)> {
    let (label, v) = s.split_once('=').ok_or_else(|| CliError::Usage(format!("expected LABEL=VALUE, got '{s}'")))?;
    Ok((label.to_string(), rat_arg("value", v)?))
}

fn count_structured(beta: &str, d: u32, t: u32, fixed: &[String], diverging: &[String], digits: usize, budget: &Budget) -> CliResult<Value> {
    let b = rat_arg("beta", beta)?;
    let rt = table_for(t, budget)?;
    let lb = lambda_beta(&rt, &b, d, t)?;
    let fixed: Vec<(String, Rat)> = fixed.iter().map(|s| split_pair(s)).collect::<CliResult<_>>()?;
    let diverging: Vec<(String, Rat)> = diverging.iter().map(|s| split_pair(s)).collect::<CliResult<_>>()?;
    let mut types = Vec::new();
    for (label, _) in fixed.iter().chain(&diverging) {
        types.push(DefectType::parse_label(label)?);
    }
    let max_size = types.iter().map(|t| t.size).max().unwrap_or(1);
    let cen = census(dim(d)?, max_size)?;
    let means = type_means(&cen, &lb.value);
    let mean_of = |label: &str| -> CliResult<Rat> {
        let t = DefectType::parse_label(label)?;
        means.get(&t).cloned().ok_or_else(|| CliError::Core(qcube::Error::InvalidParameter(format!("type {label} does not occur in Q_{d}"))))
    };
    let mut ft = Vec::new();
    for (label, k) in &fixed {
        if !k.is_integer() || k < &Rat::from_integer(0.into()) {
            return Err(CliError::Usage(format!("fixed count for {label} must be a non-negative integer")));
        }
        let k: u64 = k.to_integer().try_into().map_err(|_| CliError::Usage(format!("fixed count for {label} too large")))?;
        ft.push(FixedType { label: label.clone(), rho: mean_of(label)?, k });
    }
    let mut dt = Vec::new();
    for (label, s) in &diverging {
        dt.push(DivergingType { label: label.clone(), m: mean_of(label)?, s: s.clone() });
    }
    let lc = structured_count(&rt, &b, d, t, &ft, &dt, digits)?;
    let used: Vec<Value> = ft.iter().map(|f| json!({"label": f.label, "mean": rat_to_string(&f.rho), "k": f.k}))
        .chain(dt.iter().map(|g| json!({"label": g.label, "mean": rat_to_string(&g.m), "s": rat_to_string(&g.s)})))
        .collect();
    Ok(envelope(
        "count-structured",
        json!({"beta": rat_to_string(&b), "d": d, "t": t, "digits": digits}),
        json!({"log_count": lc.to_json(), "lambda_beta": rat_to_string(&lb.value), "types": used}),
    ))
}

fn validate(cli: &Cli, criteria: &[u32]) -> CliResult<()> {
    let ids = (!criteria.is_empty()).then_some(criteria);
    if let Some(ids) = ids {
        if let Some(bad) = ids.iter().find(|&&i| !qcube::validate::CRITERIA.iter().any(|c| c.0 == i)) {
            return Err(CliError::Usage(format!("unknown criterion {bad}")));
        }
    }
    let results = run_all(ids);
    for r in &results {
        eprintln!("{}", r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let doc = envelope("validate", json!({"criteria": criteria}), json!({"results": results, "failed": failed}));
    let mut text = serde_json::to_string_pretty(&doc).expect("json");
    text.push('\n');
    write_output(cli.out.as_deref(), &text)?;
    if failed > 0 {
        return Err(CliError::Failed(failed));
    }
    Ok(())
}
