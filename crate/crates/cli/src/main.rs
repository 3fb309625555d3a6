mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use config::ExperimentConfig;
use smeasure::acceptance::{self, AcceptanceConfig, Status};
use smeasure::measure::{kr_distance, solve_s_measure};
use smeasure::rotation::{build_partition, rotation_number};
use smeasure::tongue::{fd_derivative, tongue_point};
use smeasure::{Error, GridMeasure};

#[derive(Parser, Debug)]
#[command(name = "smeasure", version, about = "Conformal s-measures of critical circle maps")]
struct Cli {
    /// Experiment config (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Comma-separated criterion names for `verify`.
    #[arg(long, global = true, value_delimiter = ',')]
    select: Vec<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Certified rotation number and convergent ladder.
    Rho,
    /// Convergents of the target `alpha`.
    Cf,
    /// Dynamical partitions at levels 1..=levels.
    Partition,
    /// s-measures for every exponent, as CSV and AMU1 dumps.
    Measure,
    /// KR distance between two measure files.
    Kr { files: Vec<PathBuf> },
    /// Tongue trace over the ν grid.
    Tongue,
    /// Acceptance criteria.
    Verify,
    /// Tongue points and s-measures over ν grid × exponents.
    Sweep,
}

/// Exit codes: 0 success, 1 usage or config, 2 certification fallback, 3 non-convergence.
const EXIT_USAGE: u8 = 1;
const EXIT_UNCERTIFIED: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;
/// `verify` found a failing criterion.
const EXIT_VERIFY_FAILED: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Uncertified { .. } => EXIT_UNCERTIFIED,
                Error::NoConvergence { .. }
                | Error::SolverNotConverged { .. }
                | Error::DepthExhausted { .. }
                | Error::AccuracyFault(_)
                | Error::Linear(_) => EXIT_NO_CONVERGENCE,
                _ => EXIT_USAGE,
            };
        }
    }
    EXIT_USAGE
}

struct Run {
    cfg: ExperimentConfig,
    digest: String,
    out: PathBuf,
    select: Vec<String>,
}

impl Run {
    fn header(&self) -> String {
        format!("# config_sha256={}\n", self.digest)
    }

    fn write(&self, name: &str, body: &str) -> anyhow::Result<PathBuf> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::parse(&text).with_context(|| format!("invalid config {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    let workers = cli.workers.or(cfg.workers).unwrap_or(0);
    if workers > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(workers).build_global()?;
    }
    let out = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    let digest = cfg.digest();
    let run = Run { cfg, digest, out, select: cli.select };
    match cli.cmd {
        Cmd::Rho => cmd_rho(&run),
        Cmd::Cf => cmd_cf(&run),
        Cmd::Partition => cmd_partition(&run),
        Cmd::Measure => cmd_measure(&run),
        Cmd::Kr { files } => cmd_kr(&run, files),
        Cmd::Tongue => cmd_tongue(&run),
        Cmd::Verify => cmd_verify(&run),
        Cmd::Sweep => cmd_sweep(&run),
    }
}

fn cmd_rho(run: &Run) -> anyhow::Result<u8> {
    let map = run.cfg.resolve_map()?;
    let tol = &run.cfg.tolerances;
    let rn = rotation_number(&map, tol.rotation, tol.rotation_budget)?;
    let cf = rn.expansion();
    let mut report = run.header();
    writeln!(report, "rho = {}", rn.estimate)?;
    writeln!(report, "bracket = [{}, {}]", rn.lower.0 as f64 / rn.lower.1 as f64, rn.upper.0 as f64 / rn.upper.1 as f64)?;
    writeln!(report, "certified = {}", rn.certified)?;
    if rn.rational {
        writeln!(report, "rational = {}/{}", rn.lower.0, rn.lower.1)?;
    }
    writeln!(report, "quotients = {:?}", cf.quotients())?;
    print!("{report}");
    let mut csv = run.header();
    csv.push_str("level,p,q,value\n");
    for (i, (p, q)) in cf.convergents().iter().enumerate() {
        writeln!(csv, "{i},{p},{q},{}", *p as f64 / *q as f64)?;
    }
    run.write("rho_ladder.csv", &csv)?;
    Ok(if rn.certified { 0 } else { EXIT_UNCERTIFIED })
}

fn cmd_cf(run: &Run) -> anyhow::Result<u8> {
    let cf = run.cfg.alpha_cf()?;
    let mut csv = run.header();
    csv.push_str("level,quotient,p,q,value\n");
    for (i, ((p, q), k)) in cf.convergents().iter().zip(cf.quotients()).enumerate() {
        writeln!(csv, "{i},{k},{p},{q},{}", *p as f64 / *q as f64)?;
    }
    print!("{csv}");
    run.write("cf.csv", &csv)?;
    Ok(0)
}

fn cmd_partition(run: &Run) -> anyhow::Result<u8> {
    let map = run.cfg.resolve_map()?;
    let parts = (1..=run.cfg.levels)
        .into_par_iter()
        .map(|n| build_partition(&map, n))
        .collect::<smeasure::Result<Vec<_>>>()?;
    let mut buf = Vec::new();
    for (i, p) in parts.iter().enumerate() {
        let comments = if i == 0 { vec![format!("config_sha256={}", run.digest)] } else { Vec::new() };
        let mut part = Vec::new();
        p.write_csv(&mut part, &comments)?;
        // keep a single column header
        let text = String::from_utf8(part)?;
        let body: String = if i == 0 {
            text
        } else {
            text.lines().skip(1).map(|l| format!("{l}\n")).collect()
        };
        buf.push(body);
    }
    let path = run.write("partition.csv", &buf.concat())?;
    println!("wrote {} levels to {}", parts.len(), path.display());
    Ok(0)
}

fn init_measure(cfg: &ExperimentConfig) -> anyhow::Result<GridMeasure> {
    Ok(match cfg.init_dirac {
        Some(x) => GridMeasure::dirac(x, cfg.bins)?,
        None => GridMeasure::lebesgue(cfg.bins)?,
    })
}

fn measure_csv(mu: &GridMeasure, comments: &[String]) -> anyhow::Result<String> {
    let mut buf = Vec::new();
    mu.write_csv(&mut buf, comments)?;
    Ok(String::from_utf8(buf)?)
}

fn cmd_measure(run: &Run) -> anyhow::Result<u8> {
    let cfg = &run.cfg;
    if cfg.exponents.is_empty() {
        bail!("exponent list is empty");
    }
    let map = cfg.resolve_map()?;
    let init = init_measure(cfg)?;
    let opts = cfg.solve_options();
    let solved = cfg
        .exponents
        .par_iter()
        .map(|&s| solve_s_measure(&map, s, cfg.bins, &opts, &init))
        .collect::<smeasure::Result<Vec<_>>>()?;
    let mut report = run.header();
    report.push_str("s,residual,kr_gap,lambda,iterations,max_atom,csv,binary\n");
    for (&s, m) in cfg.exponents.iter().zip(&solved) {
        let stem = format!("measure_s{s}");
        let comments = vec![format!("config_sha256={}", run.digest), format!("s={s}")];
        run.write(&format!("{stem}.csv"), &measure_csv(&m.measure, &comments)?)?;
        let mut bin = Vec::new();
        m.measure.write_binary(&mut bin)?;
        fs::create_dir_all(&run.out)?;
        fs::write(run.out.join(format!("{stem}.amu")), bin)?;
        writeln!(
            report,
            "{s},{},{},{},{},{},{stem}.csv,{stem}.amu",
            m.residual,
            m.kr_gap,
            m.lambda,
            m.iterations,
            m.measure.max_atom()
        )?;
    }
    print!("{report}");
    run.write("residuals.csv", &report)?;
    Ok(0)
}

fn read_measure(path: &Path) -> anyhow::Result<GridMeasure> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mu = if path.extension().is_some_and(|e| e == "amu") {
        GridMeasure::read_binary(std::io::BufReader::new(file))
    } else {
        GridMeasure::read_csv(std::io::BufReader::new(file))
    };
    mu.with_context(|| format!("reading {}", path.display()))
}

fn cmd_kr(run: &Run, files: Vec<PathBuf>) -> anyhow::Result<u8> {
    let files = if files.is_empty() { run.cfg.measures.clone() } else { files };
    if files.len() != 2 {
        bail!("kr needs exactly two measure files (got {})", files.len());
    }
    let d = kr_distance(&read_measure(&files[0])?, &read_measure(&files[1])?)?;
    print!("{}kr = {d}\n", run.header());
    Ok(0)
}

fn nu_grid(cfg: &ExperimentConfig) -> Vec<f64> {
    if cfg.nu_grid.is_empty() {
        vec![cfg.family.as_ref().map_or(0.0, |f| f.nu)]
    } else {
        cfg.nu_grid.clone()
    }
}

fn cmd_tongue(run: &Run) -> anyhow::Result<u8> {
    let cfg = &run.cfg;
    let fam = cfg.family()?;
    let alpha = cfg.alpha_cf()?;
    let mut opts = cfg.tongue_options();
    opts.fd_step = None;
    let rows = nu_grid(cfg)
        .par_iter()
        .map(|&nu| -> smeasure::Result<_> {
            let (p, _) = tongue_point(&fam, &alpha, nu, &opts)?;
            let fd = match cfg.fd_step {
                Some(h) => Some(fd_derivative(&fam, &alpha, nu, h, opts.tol_a)?),
                None => None,
            };
            Ok((p, fd))
        })
        .collect::<smeasure::Result<Vec<_>>>()?;
    let mut csv = run.header();
    csv.push_str("nu,a,derivative,width,residual,iterations,fd_derivative,fd_stencil,fd_difference\n");
    for (p, fd) in rows {
        let fd_cols = match fd {
            Some((v, st)) => format!("{v},{},{}", format!("{st:?}").to_lowercase(), (v - p.derivative).abs()),
            None => ",,".into(),
        };
        writeln!(csv, "{},{},{},{},{},{},{fd_cols}", p.nu, p.a, p.derivative, p.width, p.residual, p.iterations)?;
    }
    print!("{csv}");
    run.write("tongue.csv", &csv)?;
    Ok(0)
}

fn cmd_verify(run: &Run) -> anyhow::Result<u8> {
    let outcomes =
        acceptance::run_selected(&run.select, AcceptanceConfig { baselines: run.cfg.baselines.clone() })?;
    let failed = outcomes.iter().filter(|o| o.status == Status::Fail).count();
    println!("{} criteria, {failed} failed", outcomes.len());
    Ok(if failed == 0 { 0 } else { EXIT_VERIFY_FAILED })
}

fn cmd_sweep(run: &Run) -> anyhow::Result<u8> {
    let cfg = &run.cfg;
    if cfg.exponents.is_empty() {
        bail!("exponent list is empty");
    }
    let fam = cfg.family()?;
    let alpha = cfg.alpha_cf()?;
    let init = init_measure(cfg)?;
    let opts = cfg.solve_options();
    let rows = nu_grid(cfg)
        .par_iter()
        .map(|&nu| -> smeasure::Result<Vec<String>> {
            let sol = smeasure::tongue::solve_tongue_point(&fam, &alpha, nu, cfg.tolerances.a)?;
            let map = fam.map(sol.a, nu)?;
            cfg.exponents
                .iter()
                .map(|&s| {
                    let m = solve_s_measure(&map, s, cfg.bins, &opts, &init)?;
                    Ok(format!(
                        "{nu},{s},{},{},{},{},{},{}\n",
                        sol.a,
                        m.residual,
                        m.kr_gap,
                        m.lambda,
                        m.iterations,
                        m.measure.max_atom()
                    ))
                })
                .collect()
        })
        .collect::<smeasure::Result<Vec<_>>>()?;
    let mut csv = run.header();
    csv.push_str("nu,s,a,residual,kr_gap,lambda,iterations,max_atom\n");
    csv.extend(rows.into_iter().flatten());
    print!("{csv}");
    run.write("sweep.csv", &csv)?;
    Ok(0)
}
