//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expansion::{default_order, expand};
use crate::field::{parse_rational, Field, Rational};
use crate::io::{expansion_json, render_json, report_json, sequence_json, PotentialSpec};
use crate::kernel::g0_kernel;
use crate::oracle::{remainder_slope, threshold4_analysis, KappaGrid, SlopeReport};
use crate::potential::{AnyPotential, FactorizedPotential};
use crate::threshold::{classify, ThresholdReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "dtl", about = "Threshold analysis of discrete Schrödinger operators on the integer lattice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Arithmetic; defaults to exact whenever the potential factorizes rationally.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: FormatArg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Threshold type, case and solution-space dimensions.
    Classify {
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        threshold: u8,
    },
    /// Bases of the generalized eigenspaces.
    Eigenbasis {
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        threshold: u8,
    },
    /// Resolvent expansion coefficients through the given order.
    Expand {
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        order: Option<i64>,
        /// Window for the text rendering of matrix elements.
        #[arg(long, allow_hyphen_values = true)]
        sites: Option<String>,
    },
    /// Remainder-order check against the exact resolvent.
    Verify {
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        order: Option<i64>,
        #[arg(long)]
        kappa_base: Option<String>,
        #[arg(long)]
        kappa_steps: Option<usize>,
        /// `a..b` or a comma-separated list; defaults to -3,0,4.
        #[arg(long, allow_hyphen_values = true)]
        sites: Option<String>,
    },
    /// Classification at the upper threshold.
    Threshold4 { input: PathBuf },
    /// Free kernel coefficients G_j⁰(n).
    Kernel {
        #[arg(long, allow_hyphen_values = true, default_value_t = 3)]
        order: i64,
        #[arg(long, allow_hyphen_values = true, default_value = "0..10")]
        sites: String,
    },
}

/// Normalized invocation.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub command: &'static str,
    pub order: Option<i64>,
    pub threshold: u8,
    pub mode: Option<ModeArg>,
    pub format: FormatArg,
    pub grid: KappaGrid,
    pub sites: Option<Vec<i64>>,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let mut cfg = RunConfig {
            input: None,
            command: "",
            order: None,
            threshold: 0,
            mode: cli.mode,
            format: cli.format,
            grid: KappaGrid::default(),
            sites: None,
        };
        match &cli.command {
            Command::Classify { input, threshold } | Command::Eigenbasis { input, threshold } => {
                cfg.command = if matches!(cli.command, Command::Classify { .. }) { "classify" } else { "eigenbasis" };
                cfg.input = Some(input.clone());
                cfg.threshold = *threshold;
            }
            Command::Expand { input, order, sites } => {
                cfg.command = "expand";
                cfg.input = Some(input.clone());
                cfg.order = *order;
                cfg.sites = sites.as_deref().map(parse_sites).transpose()?;
            }
            Command::Verify { input, order, kappa_base, kappa_steps, sites } => {
                cfg.command = "verify";
                cfg.input = Some(input.clone());
                cfg.order = *order;
                if let Some(b) = kappa_base {
                    cfg.grid.base = parse_rational(b)?;
                    if cfg.grid.base <= crate::field::rat_int(0) {
                        return Err(Error::DomainError("kappa base must be positive".into()));
                    }
                }
                if let Some(s) = kappa_steps {
                    cfg.grid.steps = *s;
                }
                cfg.sites = sites.as_deref().map(parse_sites).transpose()?;
            }
            Command::Threshold4 { input } => {
                cfg.command = "threshold4";
                cfg.input = Some(input.clone());
                cfg.threshold = 4;
            }
            Command::Kernel { order, sites } => {
                cfg.command = "kernel";
                cfg.order = Some(*order);
                cfg.sites = Some(parse_sites(sites)?);
            }
        }
        if cfg.threshold != 0 && cfg.threshold != 4 {
            return Err(Error::DomainError(format!("threshold must be 0 or 4, got {}", cfg.threshold)));
        }
        if cfg.order.is_some_and(|n| n < -2) {
            return Err(Error::DomainError("order must be at least -2".into()));
        }
        Ok(cfg)
    }
}

/// `a..b` (inclusive) or `a,b,c`.
pub fn parse_sites(text: &str) -> Result<Vec<i64>> {
    let bad = || Error::Parse(format!("cannot read sites {text:?}"));
    if let Some((a, b)) = text.split_once("..") {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

/// Existing paths are used as given; otherwise the file name is looked up in
/// `DTL_FIXTURES` (or the bundled fixtures), with `.json` appended if needed.
pub fn resolve_input(path: &Path) -> PathBuf {
    if path.exists() {
        return path.to_path_buf();
    }
    let dir = std::env::var_os("DTL_FIXTURES")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    let Some(name) = path.file_name() else { return path.to_path_buf() };
    let direct = dir.join(name);
    if direct.exists() {
        return direct;
    }
    let with_ext = dir.join(format!("{}.json", name.to_string_lossy()));
    if with_ext.exists() {
        with_ext
    } else {
        path.to_path_buf()
    }
}

pub fn load_potential(path: &Path, mode: Option<ModeArg>) -> Result<AnyPotential> {
    let pot = PotentialSpec::read(&resolve_input(path))?.build()?;
    match (mode, &pot) {
        (Some(ModeArg::Exact), AnyPotential::Float(_)) => Err(Error::MixedModes),
        (Some(ModeArg::Float), AnyPotential::Exact(_)) => Ok(AnyPotential::Float(pot.to_float())),
        _ => Ok(pot),
    }
}

pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::FloatingAmbiguous(_) => 2,
        _ => 1,
    }
}

/// Parses arguments (including the program name) and runs the command.
pub fn run_args<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match RunConfig::from_cli(&cli).and_then(|cfg| run(&cfg)) {
        Ok((ok, out)) => Outcome { code: if ok { 0 } else { 1 }, stdout: out, stderr: String::new() },
        Err(e) => Outcome { code: exit_code(&e), stdout: String::new(), stderr: format!("dtl: {e}\n") },
    }
}

/// Runs one command; the flag is false when a verification did not pass.
pub fn run(cfg: &RunConfig) -> Result<(bool, String)> {
    if cfg.command == "kernel" {
        return Ok((true, kernel_table(cfg)));
    }
    let input = cfg.input.as_ref().ok_or_else(|| Error::Parse("missing input file".into()))?;
    let pot = load_potential(input, cfg.mode)?;
    match &pot {
        AnyPotential::Exact(p) => run_with(cfg, p),
        AnyPotential::Float(p) => run_with(cfg, p),
    }
}

fn run_with<T: Field>(cfg: &RunConfig, pot: &FactorizedPotential<T>) -> Result<(bool, String)> {
    let text = cfg.format == FormatArg::Text;
    match cfg.command {
        "classify" | "eigenbasis" | "threshold4" => {
            let report = if cfg.threshold == 4 { threshold4_analysis(pot)? } else { classify(pot)? };
            let out = match (cfg.command, text) {
                ("eigenbasis", false) => {
                    let full = report_json(&report);
                    render_json(&json!({"threshold": full["threshold"], "dims": full["dims"], "bases": full["bases"], "alternating": full["alternating"]}))
                }
                ("eigenbasis", true) => eigenbasis_text(&report),
                (_, false) => render_json(&report_json(&report)),
                (_, true) => report_text(&report),
            };
            Ok((true, out))
        }
        "expand" => {
            let stage = classify(pot)?.stage;
            let order = cfg.order.unwrap_or_else(|| default_order(stage));
            let res = expand(pot, order)?;
            let out = if text {
                let sites = cfg.sites.clone().unwrap_or_else(|| (-3..=3).collect());
                let mut s = format!("stage {} (case {}), coefficients G_{}..G_{}\n", res.stage.number(), res.case_id(), res.j_min(), order);
                for c in &res.coefficients {
                    if c.is_zero_operator()? {
                        s += &format!("G_{}: zero\n", c.order);
                        continue;
                    }
                    s += &format!("G_{}:\n", c.order);
                    for &a in &sites {
                        let row: Vec<String> = sites.iter().map(|&b| c.element(a, b).render()).collect();
                        s += &format!("  {a:>4}: {}\n", row.join("  "));
                    }
                }
                s
            } else {
                render_json(&expansion_json(&res)?)
            };
            Ok((true, out))
        }
        "verify" => {
            let op = pot.operator().ok_or_else(|| Error::DomainError("verification needs the exact matrix of V".into()))?;
            let stage = classify(pot)?.stage;
            let order = cfg.order.unwrap_or_else(|| default_order(stage).min(2));
            let res = expand(pot, order)?;
            let sites = cfg.sites.clone().unwrap_or_else(|| vec![-3, 0, 4]);
            let report = remainder_slope(op, &res, order, &sites, &cfg.grid)?;
            let out = if text { slope_text(&report) } else { render_json(&serde_json::to_value(&report).map_err(|e| Error::Parse(e.to_string()))?) };
            Ok((report.pass, out))
        }
        other => Err(Error::Parse(format!("unknown command {other}"))),
    }
}

fn kernel_table(cfg: &RunConfig) -> String {
    let order = cfg.order.unwrap_or(3);
    let sites = cfg.sites.clone().unwrap_or_else(|| (0..=10).collect());
    let rows: Vec<(i64, Vec<Rational>)> =
        (-1..=order).map(|j| (j, sites.iter().map(|&n| g0_kernel(j, n)).collect())).collect();
    if cfg.format == FormatArg::Text {
        let mut s = String::new();
        for (j, vals) in &rows {
            let cells: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
            s += &format!("G_{j}: {}\n", cells.join(" "));
        }
        return s;
    }
    let mut map = serde_json::Map::new();
    for (j, vals) in rows {
        let entry: serde_json::Map<String, Value> =
            sites.iter().zip(vals).map(|(n, v)| (n.to_string(), Value::String(v.to_string()))).collect();
        map.insert(format!("G_{j}"), Value::Object(entry));
    }
    render_json(&Value::Object(map))
}

fn report_text<T: Field>(r: &ThresholdReport<T>) -> String {
    format!(
        "threshold {}: {} (stage {}, case {})\nd0 = {}, d = {}, dtilde = {}, dqs = {}\n{}{}",
        r.threshold,
        r.kind.name(),
        r.stage.number(),
        r.case.roman(),
        r.dims.d0,
        r.dims.d,
        r.dims.dtilde,
        r.dims.dqs,
        if r.exact { "exact\n" } else { "floating (tolerance dependent)\n" },
        if r.alternating { "solutions carry a factor (-1)^n\n" } else { "" },
    )
}

fn eigenbasis_text<T: Field>(r: &ThresholdReport<T>) -> String {
    let mut s = report_text(r);
    for (name, xs) in [
        ("eigen", &r.bases.eigen),
        ("bounded_mod_eigen", &r.bases.bounded_mod_eigen),
        ("growing_mod_bounded", &r.bases.growing_mod_bounded),
        ("quasi_symmetric", &r.bases.quasi_symmetric),
    ] {
        for x in xs.iter() {
            s += &format!("{name}: {}\n", sequence_json(x));
        }
    }
    s
}

fn slope_text(r: &SlopeReport) -> String {
    let mut s = format!("order {}: expected slope {} (pass at >= {:.1})\n", r.order, r.expected_slope, r.threshold);
    for e in &r.entries {
        let slope = e.slope.map_or("-".to_string(), |x| format!("{x:.3}"));
        s += &format!(
            "  ({:>3},{:>3}) slope {slope:>7} max residual {:.3e} {}\n",
            e.a,
            e.b,
            e.max_residual,
            if e.pass { "pass" } else { "FAIL" }
        );
    }
    s += if r.pass { "all pass\n" } else { "failures present\n" };
    s
}
