//! Batch command-line front end: analyze, profile, rates, verify, sample.
//!
//! One TOML configuration drives a run; every field can be overridden on
//! the command line, and the command line wins. Outputs land under
//! `<out>/<command>/<label>/` as CSV tables with a `meta.json` sidecar.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure,
//! 4 verification failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dka_core::config::{PointsSpec, RunConfig, ScheduleSpec};
use dka_core::error::Error;
use dka_core::iteration::{limit_profile_low, limit_profile_sparse, Regime, SymmetrySet};
use dka_core::rates::{
    contraction_check, matrix_b1, matrix_b2, rate_eval, sparse_rate_1, sparse_rate_2, ProfileEval,
};
use dka_core::report::{self, fmt_float};
use dka_core::simulate::{
    centered_covariance, covariance_convergence, high_disorder_limits, sample,
    sparse_discontinuity_demo, tail_rate_curve, weak_convergence_test,
};

#[derive(Parser)]
#[command(
    name = "dka",
    version,
    about = "Deep-limit analysis of iterated covariance kernels on the sphere"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the kernel's regime and report its parameters as JSON
    Analyze(CommonArgs),
    /// Compute the limit profile of the rescaled deficit on a grid (CSV)
    Profile(CommonArgs),
    /// Evaluate rate functions at argument vectors (CSV + matrix JSON)
    Rates(RatesArgs),
    /// Run the verification tables for the kernel's regime
    Verify(CommonArgs),
    /// Draw exact joint Gaussian samples of the centered field (CSV)
    Sample(CommonArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML run configuration; command-line flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Kernel kind: relu | exponential | linear | hermite | quadrature
    #[arg(long)]
    kernel: Option<String>,
    /// Exponential-family parameter (kind = exponential)
    #[arg(long)]
    gamma: Option<f64>,
    /// Gaussian-exp activation parameter (kind = quadrature)
    #[arg(long)]
    a: Option<f64>,
    /// Series coefficients, comma separated (kind = hermite)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    hermite: Option<Vec<f64>>,
    /// Activation for quadrature kernels: relu | gaussian-exp | linear
    #[arg(long)]
    activation: Option<String>,
    /// Quadrature order per axis
    #[arg(long)]
    order: Option<usize>,
    /// Exact expansion coefficient c, overriding the fit (needs --rho)
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Exact expansion exponent rho, overriding the fit (needs --c)
    #[arg(long)]
    rho: Option<f64>,
    /// Sphere dimension d (points live in R^{d+1})
    #[arg(long)]
    dim: Option<usize>,
    /// Point configuration: uniform:<m>:<seed> (inline rows via config)
    #[arg(long)]
    points: Option<String>,
    /// Centering: north-pole | spherical-average
    #[arg(long)]
    centering: Option<String>,
    /// Depth schedule: comma list or geometric:<start>:<factor>:<count>
    #[arg(long = "l-schedule")]
    l_schedule: Option<String>,
    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory root
    #[arg(long)]
    out: Option<String>,
    /// Run label (defaults to a timestamp)
    #[arg(long)]
    label: Option<String>,
    /// Number of draws (sample / verify)
    #[arg(long)]
    n: Option<usize>,
    /// Composition depth (sample)
    #[arg(long)]
    depth: Option<u64>,
    /// Worker thread cap (env DKA_THREADS is the fallback)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Clone)]
struct RatesArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// CSV file of argument vectors, one per line
    #[arg(long = "y-file")]
    y_file: Option<PathBuf>,
    /// Also run the contraction-principle check per vector
    #[arg(long)]
    contraction: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(args) => run_analyze(args),
        Command::Profile(args) => run_profile(args),
        Command::Rates(args) => run_rates(args),
        Command::Verify(args) => run_verify(args),
        Command::Sample(args) => run_sample(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Domain(_) => 2,
        _ => 3,
    }
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(kind) = &args.kernel {
        cfg.kernel.kind = kind.clone();
    }
    if let Some(gamma) = args.gamma {
        cfg.kernel.parameters.insert("gamma".into(), gamma);
    }
    if let Some(a) = args.a {
        cfg.kernel.parameters.insert("a".into(), a);
    }
    if let Some(coeffs) = &args.hermite {
        cfg.kernel.hermite_coeffs = Some(coeffs.clone());
        if args.kernel.is_none() {
            cfg.kernel.kind = "hermite".into();
        }
    }
    if let Some(activation) = &args.activation {
        cfg.kernel.activation = Some(activation.clone());
        if args.kernel.is_none() {
            cfg.kernel.kind = "quadrature".into();
        }
    }
    if let Some(order) = args.order {
        cfg.kernel.quadrature_order = Some(order);
    }
    match (args.c, args.rho) {
        (Some(c), Some(rho)) => {
            cfg.regularity = Some(dka_core::config::RegularityOverride { c, rho });
        }
        (None, None) => {}
        _ => {
            return Err(Error::Config(
                "--c and --rho must be supplied together".into(),
            ))
        }
    }
    if let Some(dim) = args.dim {
        cfg.dim = dim;
    }
    if let Some(points) = &args.points {
        cfg.points = Some(PointsSpec::Spec(points.clone()));
    }
    if let Some(centering) = &args.centering {
        cfg.centering = centering.clone();
    }
    if let Some(schedule) = &args.l_schedule {
        cfg.l_schedule = Some(parse_schedule_flag(schedule)?);
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    if let Some(label) = &args.label {
        cfg.label = Some(label.clone());
    }
    if let Some(n) = args.n {
        cfg.n = Some(n);
    }
    if let Some(depth) = args.depth {
        cfg.depth = Some(depth);
    }
    if cfg.kernel.kind.is_empty() {
        return Err(Error::Config(
            "no kernel configured (use --kernel or a config file)".into(),
        ));
    }
    init_threads(args.threads)?;
    Ok(cfg)
}

fn parse_schedule_flag(s: &str) -> Result<ScheduleSpec, Error> {
    if s.starts_with("geometric:") {
        Ok(ScheduleSpec::Spec(s.to_string()))
    } else {
        let list = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::Config(format!("bad depth '{p}' in schedule")))
            })
            .collect::<Result<Vec<u64>, Error>>()?;
        Ok(ScheduleSpec::List(list))
    }
}

fn init_threads(flag: Option<usize>) -> Result<(), Error> {
    let from_env = std::env::var("DKA_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(n) = flag.or(from_env) {
        if n == 0 {
            return Err(Error::Config("thread cap must be positive".into()));
        }
        // ignore the error when a pool already exists (tests, repeat calls)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Tolerances pinned by the library; recorded in every run's metadata.
#[derive(Serialize)]
struct ToleranceMeta {
    classify: f64,
    symmetry: f64,
    unit_set: f64,
    rank: f64,
    range: f64,
}

impl ToleranceMeta {
    fn effective(cfg: &RunConfig) -> Self {
        ToleranceMeta {
            classify: cfg
                .tolerances
                .classify
                .unwrap_or(dka_core::iteration::CLASSIFY_TOL),
            symmetry: cfg
                .tolerances
                .symmetry
                .unwrap_or(dka_core::iteration::SYMMETRY_TOL),
            unit_set: dka_core::iteration::UNIT_SET_TOL,
            rank: dka_core::rates::RANK_TOL,
            range: dka_core::rates::RANGE_TOL,
        }
    }
}

#[derive(Serialize)]
struct RunMeta {
    command: String,
    kernel: String,
    kernel_digest: String,
    dim: usize,
    seed: u64,
    centering: Option<String>,
    l_schedule: Option<Vec<u64>>,
    n: Option<usize>,
    depth: Option<u64>,
    tolerances: ToleranceMeta,
}

fn out_dir(cfg: &RunConfig, command: &str) -> Result<PathBuf, Error> {
    let label = cfg.label.clone().unwrap_or_else(|| {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        format!("run-{secs}")
    });
    let dir = Path::new(&cfg.out).join(command).join(label);
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_meta(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    kernel: &dka_core::Kernel,
    schedule: Option<&[u64]>,
) -> Result<(), Error> {
    let meta = RunMeta {
        command: command.into(),
        kernel: kernel.digest_label(),
        kernel_digest: report::digest8(&kernel.digest_label()),
        dim: cfg.dim,
        seed: cfg.seed,
        centering: Some(cfg.centering.clone()),
        l_schedule: schedule.map(|s| s.to_vec()),
        n: cfg.n,
        depth: cfg.depth,
        tolerances: ToleranceMeta::effective(cfg),
    };
    std::fs::write(dir.join("meta.json"), report::to_json_pretty(&meta))?;
    Ok(())
}

fn run_analyze(args: &CommonArgs) -> Result<ExitCode, Error> {
    let cfg = load_config(args)?;
    let kernel = cfg.build_kernel()?;
    let report_data = cfg.classify(&kernel)?;
    let json = report::regime_json(&report_data);
    print!("{json}");
    if cfg.label.is_some() {
        let dir = out_dir(&cfg, "analyze")?;
        std::fs::write(dir.join("report.json"), &json)?;
        write_meta(&dir, "analyze", &cfg, &kernel, None)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_profile(args: &CommonArgs) -> Result<ExitCode, Error> {
    let cfg = load_config(args)?;
    let kernel = cfg.build_kernel()?;
    let regime = cfg.classify(&kernel)?;
    let grid = cfg.profile.grid.build()?;
    let table = match regime.regime {
        Regime::LowDisorder => limit_profile_low(&kernel, &grid)?,
        Regime::Sparse => {
            let fit = regime.fit.clone().ok_or_else(|| {
                Error::RegimeMismatch(format!(
                    "unit-derivative kernel without a usable regularity fit: {}",
                    regime.fit_error.as_deref().unwrap_or("unknown")
                ))
            })?;
            limit_profile_sparse(&kernel, &grid, &fit, cfg.profile.sparse_depth)?
        }
        Regime::HighDisorder => {
            return Err(Error::RegimeMismatch(
                "no vanishing-deficit profile exists when kappa'(1) > 1".into(),
            ))
        }
    };
    let dir = out_dir(&cfg, "profile")?;
    std::fs::write(dir.join("profile.csv"), report::profile_csv(&table))?;
    write_meta(&dir, "profile", &cfg, &kernel, None)?;
    println!("wrote {}", dir.join("profile.csv").display());
    Ok(ExitCode::SUCCESS)
}

fn read_y_vectors(path: &Path, m: usize) -> Result<Vec<Vec<f64>>, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|p| {
                p.trim().parse::<f64>().map_err(|_| {
                    Error::Config(format!(
                        "{}:{}: bad number '{p}'",
                        path.display(),
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>, Error>>()?;
        if row.len() != m {
            return Err(Error::Config(format!(
                "{}:{}: expected {m} values, found {}",
                path.display(),
                lineno + 1,
                row.len()
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Config(format!(
            "{} contains no argument vectors",
            path.display()
        )));
    }
    Ok(rows)
}

fn run_rates(args: &RatesArgs) -> Result<ExitCode, Error> {
    let mut cfg = load_config(&args.common)?;
    if args.contraction {
        cfg.rates.contraction = true;
    }
    let kernel = cfg.build_kernel()?;
    let regime = cfg.classify(&kernel)?;
    let points = cfg.build_points()?;
    let profile = ProfileEval::from_kernel(&kernel, &regime)?;
    let b1 = matrix_b1(&profile, &points)?;
    let b2 = matrix_b2(&profile, &points, cfg.dim)?;

    let mut ys = cfg.rates.y.clone();
    if let Some(path) = &args.y_file {
        ys.extend(read_y_vectors(path, points.len())?);
    } else if let Some(path) = &cfg.rates.y_file {
        ys.extend(read_y_vectors(Path::new(path), points.len())?);
    }
    if ys.is_empty() {
        return Err(Error::Config(
            "no argument vectors: set rates.y in the config or pass --y-file".into(),
        ));
    }
    for (i, y) in ys.iter().enumerate() {
        if y.len() != points.len() {
            return Err(Error::Config(format!(
                "argument vector {i} has {} entries, expected {}",
                y.len(),
                points.len()
            )));
        }
    }

    let sparse = regime.regime == Regime::Sparse;
    let symmetry = regime.symmetry_set.unwrap_or(SymmetrySet::One);
    let mut csv = String::from(
        "index,i1,i1_in_range,i2,i2_in_range,sparse_i1,sparse_i2,\
         contraction_direct,contraction_contracted,contraction_gap,flags\n",
    );
    for (idx, y) in ys.iter().enumerate() {
        let r1 = rate_eval(&b1, y);
        let r2 = rate_eval(&b2, y);
        let (s1, s2, mut flags) = if sparse {
            let h = regime.h.expect("sparse regime carries h");
            let v1 = sparse_rate_1(&points, y, h, symmetry);
            let v2 = sparse_rate_2(&points, y, h, symmetry);
            let flags = v1.flags.clone();
            (fmt_float(v1.value), fmt_float(v2.value), flags)
        } else {
            (String::new(), String::new(), Vec::new())
        };
        let (cd, cc, cg) = if cfg.rates.contraction && !points.contains_north() {
            let check = contraction_check(&profile, &points, y, cfg.dim)?;
            (
                fmt_float(check.direct),
                fmt_float(check.contracted),
                fmt_float(check.gap),
            )
        } else {
            if cfg.rates.contraction && points.contains_north() {
                flags.push("contraction skipped: configuration contains the North Pole".into());
            }
            (String::new(), String::new(), String::new())
        };
        csv.push_str(&format!(
            "{idx},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_float(r1.value),
            r1.in_range,
            fmt_float(r2.value),
            r2.in_range,
            s1,
            s2,
            cd,
            cc,
            cg,
            flags.join(";")
        ));
    }

    let dir = out_dir(&cfg, "rates")?;
    std::fs::write(dir.join("rates.csv"), csv)?;
    std::fs::write(dir.join("b1.json"), b1.to_json() + "\n")?;
    std::fs::write(dir.join("b2.json"), b2.to_json() + "\n")?;
    write_meta(&dir, "rates", &cfg, &kernel, None)?;
    println!("wrote {}", dir.join("rates.csv").display());
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CheckResult {
    name: String,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
struct VerifySummary {
    regime: Regime,
    /// max |partial-sum reconstruction - kappa| at l_max = 60 (informational)
    spectral_reconstruction_error: f64,
    checks: Vec<CheckResult>,
    pass: bool,
}

fn default_schedule_for(regime: Regime) -> Vec<u64> {
    match regime {
        Regime::LowDisorder => vec![1, 2, 4, 8, 16, 32, 64],
        Regime::Sparse => vec![1, 4, 16, 64, 256, 1024, 4096, 16384],
        Regime::HighDisorder => vec![200],
    }
}

fn run_verify(args: &CommonArgs) -> Result<ExitCode, Error> {
    let cfg = load_config(args)?;
    let kernel = cfg.build_kernel()?;
    let regime = cfg.classify(&kernel)?;
    let centering = cfg.centering()?;
    let dir = out_dir(&cfg, "verify")?;
    let mut checks = Vec::new();

    let points = match &cfg.points {
        Some(spec) => spec.build(cfg.dim)?,
        None => dka_core::PointConfig::uniform(cfg.dim, 3, cfg.seed)?,
    };
    let schedule = match &cfg.l_schedule {
        Some(spec) => spec.build()?,
        None => default_schedule_for(regime.regime),
    };

    match regime.regime {
        Regime::HighDisorder => {
            let table = high_disorder_limits(&kernel, &points, cfg.verify.l_big)?;
            std::fs::write(dir.join("high_disorder.csv"), report::high_disorder_csv(&table))?;
            let worst = table
                .rows
                .iter()
                .map(|r| r.abs_error)
                .fold(0.0f64, f64::max);
            checks.push(CheckResult {
                name: "high-disorder covariance limits".into(),
                pass: worst <= 1e-6,
                detail: format!(
                    "max |entry - limit| = {} at depth {} (tolerance 1e-6)",
                    fmt_float(worst),
                    cfg.verify.l_big
                ),
            });
        }
        Regime::LowDisorder | Regime::Sparse => {
            let conv = covariance_convergence(&kernel, &points, centering, &schedule, &regime)?;
            std::fs::write(dir.join("convergence.csv"), report::convergence_csv(&conv))?;
            let last_l = *schedule.last().unwrap();
            let final_err = conv
                .iter()
                .filter(|r| r.l == last_l)
                .map(|r| r.abs_error)
                .fold(0.0f64, f64::max);
            let conv_tol = match regime.regime {
                Regime::LowDisorder => 1e-6,
                _ => 1e-3,
            };
            checks.push(CheckResult {
                name: "covariance rescaling".into(),
                pass: final_err <= conv_tol,
                detail: format!(
                    "max |v_L sigma - B| = {} at L = {last_l} (tolerance {conv_tol:e})",
                    fmt_float(final_err)
                ),
            });

            let theta = cfg
                .verify
                .theta
                .clone()
                .unwrap_or_else(|| vec![1.0; points.len()]);
            let tail = tail_rate_curve(
                &kernel,
                &points,
                centering,
                &theta,
                cfg.verify.a,
                &schedule,
                &regime,
            )?;
            std::fs::write(dir.join("tail_curve.csv"), report::tail_csv(&tail))?;
            let tail_err = tail.last().map(|r| r.abs_error).unwrap_or(f64::INFINITY);
            checks.push(CheckResult {
                name: "log-domain tail curve".into(),
                pass: tail_err <= 1e-2,
                detail: format!(
                    "|curve - limit| = {} at L = {last_l} (tolerance 1e-2)",
                    fmt_float(tail_err)
                ),
            });

            let weak_depth = cfg.verify.weak_depth.unwrap_or(match regime.regime {
                Regime::Sparse => 10_000,
                _ => 30,
            });
            let weak = weak_convergence_test(
                &kernel,
                &points,
                centering,
                weak_depth,
                cfg.verify.n,
                cfg.seed,
                &regime,
            )?;
            std::fs::write(
                dir.join("weak_convergence.csv"),
                report::weak_convergence_csv(&weak),
            )?;
            std::fs::write(
                dir.join("weak_convergence.json"),
                report::to_json_pretty(&weak),
            )?;
            checks.push(CheckResult {
                name: "finite-dimensional weak convergence".into(),
                pass: weak.pass,
                detail: if weak.insufficient_power {
                    format!("insufficient power at n = {}", weak.n)
                } else {
                    format!(
                        "{} covariance bands, all inside: {}",
                        weak.covariance_bands.len(),
                        weak.covariance_bands.iter().all(|b| b.inside)
                    )
                },
            });

            if regime.regime == Regime::Sparse {
                let demo = sparse_discontinuity_demo(
                    &kernel,
                    cfg.dim,
                    &cfg.verify.eps_schedule,
                    cfg.verify.demo_depth,
                    &regime,
                )?;
                std::fs::write(dir.join("discontinuity.csv"), report::discontinuity_csv(&demo))?;
                let h = regime.h.expect("sparse regime carries h");
                let worst = demo
                    .iter()
                    .map(|r| {
                        (r.diag_1 - 2.0 * h)
                            .abs()
                            .max((r.off_diag - r.expected_off).abs())
                    })
                    .fold(0.0f64, f64::max);
                let tol = 5e-3 * 2.0 * h; // acceptance scale, relative to 2h
                checks.push(CheckResult {
                    name: "sparse diagonal jump".into(),
                    pass: worst <= tol,
                    detail: format!(
                        "max deviation from (2h, h) structure = {} (tolerance {})",
                        fmt_float(worst),
                        fmt_float(tol)
                    ),
                });
            }
        }
    }

    // kernel spectrum in the weighted Gegenbauer basis, with the
    // partial-sum reconstruction error as an informational metric
    let spectrum = dka_core::sphere::spectral_expansion(&kernel, 60, cfg.dim)?;
    std::fs::write(dir.join("spectrum.csv"), report::spectral_csv(&spectrum))?;
    let mut reconstruction_error = 0.0f64;
    for i in 0..=200 {
        let t = -1.0 + i as f64 / 100.0;
        let rec: f64 = spectrum
            .coeffs
            .iter()
            .enumerate()
            .map(|(l, &dl)| dl * dka_core::sphere::gegenbauer(l, cfg.dim, t))
            .sum();
        reconstruction_error = reconstruction_error.max((rec - kernel.eval(t)).abs());
    }

    let pass = checks.iter().all(|c| c.pass);
    let summary = VerifySummary {
        regime: regime.regime,
        spectral_reconstruction_error: reconstruction_error,
        checks,
        pass,
    };
    std::fs::write(dir.join("summary.json"), report::to_json_pretty(&summary))?;
    write_meta(&dir, "verify", &cfg, &kernel, Some(&schedule))?;
    for check in &summary.checks {
        println!(
            "{}: {} ({})",
            check.name,
            if check.pass { "PASS" } else { "FAIL" },
            check.detail
        );
    }
    println!("verify: {}", if pass { "PASS" } else { "FAIL" });
    if pass {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(4))
    }
}

fn run_sample(args: &CommonArgs) -> Result<ExitCode, Error> {
    let cfg = load_config(args)?;
    let kernel = cfg.build_kernel()?;
    let points = cfg.build_points()?;
    let centering = cfg.centering()?;
    let depth = cfg.depth.unwrap_or(5);
    let n = cfg.n.unwrap_or(1000);
    let cc = centered_covariance(&kernel, &points, depth, centering)?;
    let batch = sample(&kernel, &cc, n, cfg.seed)?;
    let dir = out_dir(&cfg, "sample")?;
    std::fs::write(dir.join("samples.csv"), report::samples_csv(&batch))?;
    std::fs::write(
        dir.join("batch_meta.json"),
        report::to_json_pretty(&batch.meta),
    )?;
    write_meta(&dir, "sample", &cfg, &kernel, None)?;
    println!("wrote {}", dir.join("samples.csv").display());
    Ok(ExitCode::SUCCESS)
}
