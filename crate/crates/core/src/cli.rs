//! Batch front end: `analyze`, `taus`, `verify-helmholtz`, `jacobi-check`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use crate::classify::{classify, prepare_eigen, ClassifyOptions, Multiplier, Verdict};
use crate::geometry::Geometry;
use crate::io::read_sode;
use crate::symexpr::{parse_expr, DEFAULT_SEED};
use crate::taucalc::{compute_tau_table, jacobi_identity_residuals};
use crate::verify::helmholtz_residuals;

#[derive(Parser, Debug)]
#[command(name = "varinv", version, about = "Inverse problem of the calculus of variations for second-order ODE systems")]
pub struct Cli {
    #[command(flatten)]
    pub config: AnalysisConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct AnalysisConfig {
    /// Sampling seed (default: $VARINV_SEED, else a fixed value)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sample points per zero test
    #[arg(long, global = true, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Residual tolerance
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Cap on the differential-ideal sequence (default: dimension)
    #[arg(long, global = true)]
    pub max_steps: Option<usize>,
    /// Also write a JSON report here
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify a system and decide the existence of a regular Lagrangian
    Analyze { file: PathBuf },
    /// Print the nonzero structure functions
    Taus { file: PathBuf },
    /// Check a multiplier against the Helmholtz conditions
    VerifyHelmholtz {
        file: PathBuf,
        /// JSON file `{"g": [["...", ...], ...]}`
        multiplier: PathBuf,
        #[arg(long, default_value_t = 25)]
        points: usize,
    },
    /// Evaluate the structure-function identities
    JacobiCheck {
        file: PathBuf,
        #[arg(long, default_value_t = 25)]
        points: usize,
    },
}

impl AnalysisConfig {
    fn seed(&self) -> u64 {
        self.seed
            .or_else(|| std::env::var("VARINV_SEED").ok().and_then(|s| s.parse().ok()))
            .unwrap_or(DEFAULT_SEED)
    }

    fn options(&self) -> ClassifyOptions {
        ClassifyOptions {
            trials: self.trials as usize,
            tol: self.tol,
            seed: self.seed(),
            max_steps: self.max_steps,
        }
    }
}

#[derive(Deserialize)]
struct MultiplierFile {
    g: Vec<Vec<String>>,
}

type CliResult = Result<i32, String>;

/// Runs one command; returns the process exit code (0 clean, 2
/// inconclusive, 1 error). Errors go to `err`, reports to `out`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 1;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> CliResult {
    let cfg = &cli.config;
    if cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err("--tol must be positive".into());
    }
    match &cli.command {
        Command::Analyze { file } => analyze(cfg, file, out),
        Command::Taus { file } => taus(cfg, file, out),
        Command::VerifyHelmholtz { file, multiplier, points } => verify(cfg, file, multiplier, *points, out),
        Command::JacobiCheck { file, points } => jacobi(cfg, file, *points, out),
    }
}

fn w(out: &mut dyn Write, s: impl AsRef<str>) -> Result<(), String> {
    writeln!(out, "{}", s.as_ref()).map_err(|e| e.to_string())
}

fn write_json(cfg: &AnalysisConfig, v: &serde_json::Value) -> Result<(), String> {
    if let Some(p) = &cfg.json {
        let mut text = serde_json::to_string_pretty(v).map_err(|e| e.to_string())?;
        text.push('\n');
        std::fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display()))?;
    }
    Ok(())
}

fn analyze(cfg: &AnalysisConfig, file: &Path, out: &mut dyn Write) -> CliResult {
    let sf = read_sode(file).map_err(|e| e.to_string())?;
    let report = classify(&sf.sode, sf.eigen, &cfg.options());
    w(out, format!("{}: {}", file.display(), report.summary()))?;
    if let Some(es) = &report.eigen {
        let l: Vec<String> = es.lambdas.iter().map(|e| e.to_string()).collect();
        w(out, format!("  eigenvalues: {}", l.join(", ")))?;
    }
    if !report.integrable.is_empty() {
        let flags: Vec<String> = report
            .integrable
            .iter()
            .enumerate()
            .map(|(a, &ok)| format!("D{}:{}", a + 1, if ok { "integrable" } else { "non-integrable" }))
            .collect();
        w(out, format!("  distributions: {}", flags.join(" ")))?;
    }
    for m in &report.sequence {
        let gens: Vec<String> = m.generators.iter().map(|g| crate::classify::generator_string(g)).collect();
        let di = if m.differential_ideal { "DI" } else { "not DI" };
        w(out, format!("  Σ{} = span{{{}}} ({di})", crate::classify::superscript(m.step), gens.join(", ")))?;
    }
    if let Some(cd) = &report.semi_separable {
        w(out, format!("  B_{} = {}, C = {}", cd.b + 1, cd.b_coeff, cd.c))?;
    }
    for (r, p) in &report.pk {
        let mu = p.mu.as_ref().map_or("-".to_string(), |m| m.to_string());
        w(out, format!("  factor {}: mu = {mu}, dmu = 0: {}", crate::classify::generator_string(r), p.closed))?;
    }
    for d in &report.diagnostics {
        w(out, format!("  note: {d}"))?;
    }
    write_json(cfg, &report.to_json())?;
    Ok(match report.verdict {
        Verdict::Inconclusive { .. } => 2,
        _ => 0,
    })
}

fn taus(cfg: &AnalysisConfig, file: &Path, out: &mut dyn Write) -> CliResult {
    let sf = read_sode(file).map_err(|e| e.to_string())?;
    let opts = cfg.options();
    let zt = opts.tester(&sf.sode);
    let g = Geometry::new(sf.sode);
    let es = prepare_eigen(&g, sf.eigen, &zt).map_err(|e| e.to_string())?;
    let tt = compute_tau_table(&g, &es);
    let nz = tt.nonzero(&zt).map_err(|e| e.to_string())?;
    let mut entries = serde_json::Map::new();
    for (e, v) in &nz {
        w(out, format!("{} = {v}", e.label()))?;
        entries.insert(e.label(), json!(v.to_string()));
    }
    if nz.is_empty() {
        w(out, "all structure functions vanish")?;
    }
    write_json(cfg, &json!({"schema": 1, "nonzero": entries}))?;
    Ok(0)
}

fn verify(cfg: &AnalysisConfig, file: &Path, mfile: &Path, points: usize, out: &mut dyn Write) -> CliResult {
    let sf = read_sode(file).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(mfile).map_err(|e| format!("cannot read {}: {e}", mfile.display()))?;
    let mf: MultiplierFile = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", mfile.display()))?;
    let names = sf.sode.symbol_names();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut g = Vec::new();
    for (i, row) in mf.g.iter().enumerate() {
        let mut r = Vec::new();
        for (j, s) in row.iter().enumerate() {
            r.push(parse_expr(s, &refs).map_err(|e| format!("g[{}][{}]: {e}", i + 1, j + 1))?);
        }
        g.push(r);
    }
    let geo = Geometry::new(sf.sode);
    let res = helmholtz_residuals(&geo, &Multiplier { g }, points, cfg.seed()).map_err(|e| e.to_string())?;
    for (name, v) in res.families() {
        w(out, format!("{name:<20} {v:.3e}"))?;
    }
    w(out, format!("{:<20} {:.3e}", "min |det g|", res.min_abs_det))?;
    let ok = res.passes(cfg.tol.max(1e-8), 1e-8);
    w(out, if ok { "PASS" } else { "FAIL" })?;
    write_json(cfg, &json!({"schema": 1, "residuals": res, "pass": ok}))?;
    Ok(0)
}

fn jacobi(cfg: &AnalysisConfig, file: &Path, points: usize, out: &mut dyn Write) -> CliResult {
    let sf = read_sode(file).map_err(|e| e.to_string())?;
    let opts = cfg.options();
    let zt = opts.tester(&sf.sode);
    let g = Geometry::new(sf.sode);
    let es = prepare_eigen(&g, sf.eigen, &zt).map_err(|e| e.to_string())?;
    let tt = compute_tau_table(&g, &es);
    let res = jacobi_identity_residuals(&g, &tt, &es, points, cfg.seed()).map_err(|e| e.to_string())?;
    for (fam, v) in &res {
        w(out, format!("{fam:<16} {v:.3e}"))?;
    }
    let worst = res.values().fold(0.0f64, |a, &b| a.max(b));
    w(out, format!("max {worst:.3e}"))?;
    write_json(cfg, &json!({"schema": 1, "residuals": res, "max": worst}))?;
    Ok(0)
}
