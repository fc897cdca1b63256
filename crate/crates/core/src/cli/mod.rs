//! Command-line driver: `constants`, `seminorm`, `sweep`, `verify`, `report`.

mod config;
mod report;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::asymptotics::{best_method, case_seed, sweep, verify_gamma_limit, SweepRecord, Verdict};
use crate::constants::{c_const, c_const_quadrature};
use crate::domain::ThinFilm;
use crate::error::Error;
use crate::quadrature::gagliardo_sq;

pub use config::{CaseDef, RunConfig, SeminormDef};
pub use report::{fmt_float, write_csv, write_dat, write_json, write_records, write_verdicts, Format, Meta, CSV_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "thinfilm", version, about = "Gagliardo seminorms on thin films and their ε → 0 limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate C_{s,d} (closed form vs quadrature).
    Constants(Common),
    /// Evaluate the entries of the [seminorms] table.
    Seminorm(Common),
    /// Emit sweep records for the selected cases.
    Sweep(Common),
    /// Run Γ-limit verifications and emit verdicts.
    Verify(Common),
    /// Write sweeps.csv, sweeps.dat and verdicts.json into --out (a directory).
    Report(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Restrict to the named case (repeatable).
    #[arg(long = "case")]
    cases: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo samples per estimate.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Usage(String),
    Run(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Run(format!("i/o error: {e}"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e.to_string())
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Constants(c) => constants(&c),
        Command::Seminorm(c) => seminorms(&c),
        Command::Sweep(c) => sweeps(&c),
        Command::Verify(c) => verify(&c),
        Command::Report(c) => report(&c),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            EXIT_FAIL
        }
    }
}

fn load(c: &Common, required: bool) -> Result<RunConfig, Failure> {
    let mut cfg = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None if required => return Err(Failure::Usage("--config <path> is required".into())),
        None => RunConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(n) = c.samples {
        cfg.quad.samples = n;
        cfg.quad.validate().map_err(|e| Failure::Usage(format!("--samples: {e}")))?;
    }
    Ok(cfg)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Run(format!("cannot write {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Indices into `names` selected by `--case`, all when none are given.
fn select(names: &[&str], wanted: &[String], table: &str) -> Result<Vec<usize>, Failure> {
    if wanted.is_empty() {
        return Ok((0..names.len()).collect());
    }
    wanted
        .iter()
        .map(|w| {
            names
                .iter()
                .position(|n| n == w)
                .ok_or_else(|| Failure::Usage(format!("no entry '{w}' in [{table}]")))
        })
        .collect()
}

#[derive(Serialize)]
struct ConstantRow {
    s: f64,
    d: usize,
    value: f64,
    error: f64,
    quadrature: f64,
    method: String,
}

fn constants(c: &Common) -> Result<i32, Failure> {
    let cfg = load(c, false)?;
    let (ss, ds) = &cfg.constants;
    let mut rows = Vec::new();
    for &d in ds {
        for &s in ss {
            let est = c_const(s, d, &cfg.quad).map_err(|e| Failure::Usage(format!("constants: {e}")))?;
            rows.push(ConstantRow {
                s,
                d,
                value: est.value,
                error: est.error,
                quadrature: c_const_quadrature(s, d, 1e-12).0,
                method: est.method.to_string(),
            });
        }
    }
    let mut out = output(c.out.as_deref())?;
    match c.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(&rows, &Meta::now(cfg.seed), &mut out)?,
        Format::Csv => {
            writeln!(out, "s,d,value,error,quadrature,method")?;
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    fmt_float(r.s),
                    r.d,
                    fmt_float(r.value),
                    fmt_float(r.error),
                    fmt_float(r.quadrature),
                    r.method
                )?;
            }
        }
        Format::Dat => {
            for (i, d) in ds.iter().enumerate() {
                if i > 0 {
                    writeln!(out, "\n")?;
                }
                writeln!(out, "# d = {d}  (s value error)")?;
                for r in rows.iter().filter(|r| r.d == *d) {
                    writeln!(out, "{} {} {}", fmt_float(r.s), fmt_float(r.value), fmt_float(r.error))?;
                }
            }
        }
    }
    out.flush()?;
    Ok(EXIT_OK)
}

fn seminorms(c: &Common) -> Result<i32, Failure> {
    let cfg = load(c, true)?;
    let names: Vec<&str> = cfg.seminorms.iter().map(|(n, _)| n.as_str()).collect();
    let mut records = Vec::new();
    let mut code = EXIT_OK;
    for i in select(&names, &c.cases, "seminorms")? {
        let (name, def) = &cfg.seminorms[i];
        let run = || -> crate::Result<SweepRecord> {
            let film = ThinFilm::new(def.omega.clone(), def.eps)?;
            let method = def.method.unwrap_or_else(|| best_method(&def.field, film.d()));
            let est = gagliardo_sq(&def.field, &film, def.s, &cfg.quad, method, case_seed(cfg.seed, i))?;
            Ok(SweepRecord {
                case_id: name.clone(),
                d: film.d(),
                s: def.s,
                eps: def.eps,
                scaling: 1.0,
                raw: est.value,
                scaled: est.value,
                error: est.error,
                method: est.method,
            })
        };
        match run() {
            Ok(r) => records.push(r),
            Err(e) => {
                eprintln!("error: {}", e.in_case(name));
                code = EXIT_FAIL;
            }
        }
    }
    let mut out = output(c.out.as_deref())?;
    write_records(&records, c.format.unwrap_or(Format::Csv), &Meta::now(cfg.seed), &mut out)?;
    Ok(code)
}

/// Runs the selected cases; verdicts only for Γ-cases. The flag reports engine errors.
fn run_cases(cfg: &RunConfig, wanted: &[String], verdicts_only: bool) -> Result<(Vec<SweepRecord>, Vec<Verdict>, bool), Failure> {
    let names: Vec<&str> = cfg.cases.iter().map(|(n, _)| n.as_str()).collect();
    let mut idx = select(&names, wanted, "cases")?;
    if verdicts_only {
        if let Some(&i) = idx.iter().find(|&&i| matches!(cfg.cases[i].1, CaseDef::Sweep(_)) && !wanted.is_empty()) {
            return Err(Failure::Usage(format!("case '{}' is a plain sweep without a verdict", names[i])));
        }
        idx.retain(|&i| matches!(cfg.cases[i].1, CaseDef::Gamma(_)));
    }
    let (mut records, mut verdicts, mut failed) = (Vec::new(), Vec::new(), false);
    for i in idx {
        let (name, def) = &cfg.cases[i];
        let seed = case_seed(cfg.seed, i);
        let res = match def {
            CaseDef::Sweep(spec) => sweep(spec, &cfg.quad, seed).map(|r| (r, None)),
            CaseDef::Gamma(g) => verify_gamma_limit(name, g, &cfg.quad, seed).map(|o| (o.records, Some(o.verdict))),
        };
        match res {
            Ok((r, v)) => {
                records.extend(r);
                if let Some(v) = v {
                    eprintln!(
                        "{} {name}: rel_err = {:.3e} (tolerance {})",
                        if v.pass { "PASS" } else { "FAIL" },
                        v.rel_err,
                        v.tolerance
                    );
                    verdicts.push(v);
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                failed = true;
            }
        }
    }
    Ok((records, verdicts, failed))
}

fn sweeps(c: &Common) -> Result<i32, Failure> {
    let cfg = load(c, true)?;
    // exit status reflects engine errors only, not verdicts
    let (records, _, engine_failed) = run_cases(&cfg, &c.cases, false)?;
    let mut out = output(c.out.as_deref())?;
    write_records(&records, c.format.unwrap_or(Format::Csv), &Meta::now(cfg.seed), &mut out)?;
    Ok(if engine_failed { EXIT_FAIL } else { EXIT_OK })
}

fn verify(c: &Common) -> Result<i32, Failure> {
    let cfg = load(c, true)?;
    let (records, verdicts, engine_failed) = run_cases(&cfg, &c.cases, true)?;
    let failed = engine_failed || verdicts.iter().any(|v| !v.pass);
    let meta = Meta::now(cfg.seed);
    let mut out = output(c.out.as_deref())?;
    match c.format.unwrap_or(Format::Json) {
        Format::Json => write_verdicts(&verdicts, &meta, &mut out)?,
        f => write_records(&records, f, &meta, &mut out)?,
    }
    Ok(if failed { EXIT_FAIL } else { EXIT_OK })
}

fn report(c: &Common) -> Result<i32, Failure> {
    let cfg = load(c, true)?;
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("report"));
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Run(format!("cannot create {}: {e}", dir.display())))?;
    let (records, verdicts, engine_failed) = run_cases(&cfg, &c.cases, false)?;
    let failed = engine_failed || verdicts.iter().any(|v| !v.pass);
    let meta = Meta::now(cfg.seed);
    write_csv(&records, output(Some(&dir.join("sweeps.csv")))?)?;
    write_dat(&records, output(Some(&dir.join("sweeps.dat")))?)?;
    write_verdicts(&verdicts, &meta, output(Some(&dir.join("verdicts.json")))?)?;
    Ok(if failed { EXIT_FAIL } else { EXIT_OK })
}
