use std::fs;
use std::io::{BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use padkit::bench::{time_methods, BenchSignal};
use padkit::calibration::{grid_search, sweep_delta, GridSpec, GATE_MAX_FPR};
use padkit::detector::certify_bound;
use padkit::signals::{generate_synthetic, labels_path, read_csv, read_labels, write_labeled, GeneratorSpec, Preset, Profile, Window};
use padkit::{fit, KernelMethod, TimeSeries};

use crate::error::{AppError, AppResult};
use crate::params::{check_shape, run_detect, DetectParams, DetectResponse, DEFAULT_DELTA};
use crate::store::SignalStore;

#[derive(Debug, Parser)]
#[command(name = "padkit", version, about = "Subspace anomaly detection for univariate time series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic signal.
    Gen(GenArgs),
    /// Fit on the first S samples and flag anomalies in the first N.
    Detect(DetectArgs),
    /// Grid search over L, S and delta against labeled windows.
    Calibrate(CalibrateArgs),
    /// Detection at several thresholds with one fitted kernel vector.
    Sweep(SweepArgs),
    /// Time the kernel backends on the reference signals.
    Bench(BenchArgs),
    /// Check the projector residual bound on in-sample lag vectors.
    Certify(CertifyArgs),
    /// Serve the JSON API on localhost.
    Serve(ServeArgs),
}

fn parse_method(s: &str) -> Result<KernelMethod, String> {
    s.parse().map_err(|e: padkit::PadError| e.to_string())
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    s.parse().map_err(|e: padkit::PadError| e.to_string())
}

fn parse_window(s: &str) -> Result<Window, String> {
    let (a, b) = s
        .split_once([':', '-', ','])
        .ok_or_else(|| format!("expected START:END, got {s:?}"))?;
    let a = a.trim().parse().map_err(|_| format!("bad window start in {s:?}"))?;
    let b = b.trim().parse().map_err(|_| format!("bad window end in {s:?}"))?;
    Ok((a, b))
}

#[derive(Debug, Clone, Args)]
pub struct ShapeArgs {
    /// Lag (window length).
    #[arg(long = "L", visible_alias = "lag", value_name = "L")]
    pub lag: usize,
    /// Training prefix length.
    #[arg(long = "S", visible_alias = "train-len", value_name = "S")]
    pub train_len: usize,
    /// Scan length; defaults to the whole series.
    #[arg(long = "N", visible_alias = "scan-len", value_name = "N")]
    pub scan_len: Option<usize>,
    /// Kernel residual tolerance; the model is marked degraded above it.
    #[arg(long, visible_alias = "kernel-tol", allow_hyphen_values = true)]
    pub nu: Option<f64>,
    /// ipm, eigh, svd-gram or svd.
    #[arg(long, default_value = "ipm", value_parser = parse_method)]
    pub method: KernelMethod,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ShapeArgs {
    fn params(&self, delta: f64) -> DetectParams {
        DetectParams {
            lag: self.lag,
            train_len: self.train_len,
            scan_len: self.scan_len,
            delta,
            nu: self.nu,
            method: self.method,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Output CSV; labels go to `<stem>.labels.csv` next to it.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Start from a reference signal: synthetic, massager or walking.
    #[arg(long)]
    pub preset: Option<String>,
    /// chirp, step_amplitude or gait.
    #[arg(long, value_parser = parse_profile)]
    pub profile: Option<Profile>,
    #[arg(long)]
    pub length: Option<usize>,
    /// Anomaly window START:END (1-based, inclusive); repeatable.
    #[arg(long = "window", value_parser = parse_window)]
    pub windows: Vec<Window>,
    #[arg(long, allow_hyphen_values = true)]
    pub noise_amp: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Input CSV: one value per line, or `time,value` rows.
    pub input: PathBuf,
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Threshold on |pᵀx_L(t)|.
    #[arg(long, visible_alias = "tolerance", default_value_t = DEFAULT_DELTA, allow_hyphen_values = true)]
    pub delta: f64,
    /// Output CSV with columns index,value,flag,masked. Defaults to `<stem>.detect.csv`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Print the API response JSON instead of the region list.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    pub input: PathBuf,
    /// Labels file; defaults to the `<stem>.labels.csv` sidecar.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long = "L", visible_alias = "lags", value_delimiter = ',', required = true)]
    pub lags: Vec<usize>,
    #[arg(long = "S", visible_alias = "train-lens", value_delimiter = ',', required = true)]
    pub train_lens: Vec<usize>,
    #[arg(long = "delta", visible_alias = "deltas", value_delimiter = ',', required = true)]
    pub deltas: Vec<f64>,
    #[arg(long = "N", visible_alias = "scan-len")]
    pub scan_len: Option<usize>,
    #[arg(long, default_value = "ipm", value_parser = parse_method)]
    pub method: KernelMethod,
    #[arg(long, default_value_t = GATE_MAX_FPR)]
    pub fpr_cap: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the full grid as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the full report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Thresholds, comma separated.
    #[arg(long = "delta", visible_alias = "deltas", value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub deltas: Vec<f64>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Write `delta,flag_count,recall,false_positive_rate` rows.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Reference signal to time; repeatable. Defaults to all.
    #[arg(long = "signal")]
    pub signals: Vec<String>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    pub input: PathBuf,
    #[arg(long = "L", visible_alias = "lag")]
    pub lag: usize,
    #[arg(long = "S", visible_alias = "train-len")]
    pub train_len: usize,
    /// Rank cut: singular values above eps span the projector.
    #[arg(long, allow_hyphen_values = true)]
    pub eps: f64,
    /// First certified index; defaults to L.
    #[arg(long)]
    pub from: Option<usize>,
    /// Last certified index; defaults to S.
    #[arg(long)]
    pub to: Option<usize>,
    /// Write every certificate as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Address to bind; use 0.0.0.0 to listen beyond localhost.
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: IpAddr,
    #[arg(long, env = "PADKIT_DATA_DIR", default_value = "padkit-data")]
    pub data_dir: PathBuf,
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let out = match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Detect(a) => cmd_detect(&a),
        Command::Calibrate(a) => cmd_calibrate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Certify(a) => cmd_certify(&a),
        Command::Serve(a) => cmd_serve(&a),
    };
    match out {
        Ok(()) => 0,
        Err(e) => {
            match &e.field {
                Some(f) => eprintln!("error ({f}): {e}"),
                None => eprintln!("error: {e}"),
            }
            e.exit_code()
        }
    }
}

fn read_input(path: &Path) -> AppResult<TimeSeries> {
    read_csv(path).map_err(|e| {
        let mut err = AppError::input("input", e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

fn read_windows(input: &Path, labels: Option<&Path>) -> AppResult<Vec<Window>> {
    let path = labels.map(Path::to_path_buf).unwrap_or_else(|| labels_path(input));
    read_labels(&path).map_err(|e| AppError::input("labels", e))
}

fn create(path: &Path) -> AppResult<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| AppError::io(format!("{}: {e}", path.display())))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> AppError + '_ {
    move |e| AppError::io(format!("{}: {e}", path.display()))
}

fn cmd_gen(a: &GenArgs) -> AppResult<()> {
    let preset = match &a.preset {
        Some(name) => Some(Preset::by_name(name).ok_or_else(|| {
            AppError::validation("preset", format!("unknown preset {name:?} (expected synthetic, massager or walking)"))
        })?),
        None => None,
    };
    let base = preset
        .as_ref()
        .map(|p| p.spec.clone())
        .unwrap_or_else(|| GeneratorSpec::new(Profile::Chirp, 2000, Vec::new(), 0.0, 0));
    let spec = GeneratorSpec {
        profile: a.profile.unwrap_or(base.profile),
        length: a.length.unwrap_or(base.length),
        windows: if a.windows.is_empty() { base.windows } else { a.windows.clone() },
        noise_amp: a.noise_amp.unwrap_or(base.noise_amp),
        seed: a.seed.unwrap_or(base.seed),
    };
    let signal = generate_synthetic(&spec).map_err(|e| {
        let windows = matches!(e, padkit::PadError::InvalidWindow(_));
        let mut err = AppError::from(e);
        if windows {
            err.field = Some("window".into());
        }
        err
    })?;
    write_labeled(&signal, &a.output).map_err(|e| AppError::io(format!("{}: {e}", a.output.display())))?;
    println!(
        "wrote {} samples ({}, {} windows) to {}",
        spec.length,
        spec.profile,
        spec.windows.len(),
        a.output.display()
    );
    if let Some(p) = preset {
        println!(
            "suggested: --L {} --S {} --delta {} --method {}",
            p.lag, p.train_len, p.delta, p.method
        );
    }
    Ok(())
}

fn default_output(input: &Path) -> PathBuf {
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    input.with_file_name(format!("{stem}.detect.csv"))
}

fn cmd_detect(a: &DetectArgs) -> AppResult<()> {
    let series = read_input(&a.input)?;
    let params = a.shape.params(a.delta);
    let outcome = run_detect(&series, &params)?;
    let output = a.output.clone().unwrap_or_else(|| default_output(&a.input));
    let mut w = create(&output)?;
    let werr = io_err(&output);
    writeln!(w, "index,value,flag,masked").map_err(&werr)?;
    let r = &outcome.result;
    for (i, ((x, f), m)) in series.values().iter().zip(&r.flags).zip(&r.masked).enumerate() {
        writeln!(w, "{},{x:.16e},{f},{m:.16e}", i + 1).map_err(&werr)?;
    }
    w.flush().map_err(&werr)?;

    if outcome.model.degraded() {
        eprintln!(
            "warning: kernel residual {:e} exceeds nu {:e}",
            outcome.model.achieved_residual(),
            outcome.model.nu()
        );
    }
    if a.json {
        let resp = DetectResponse::from(outcome);
        println!("{}", serde_json::to_string(&resp).expect("response is serializable"));
        return Ok(());
    }
    println!(
        "L={} S={} N={} delta={} method={} residual={:e}",
        params.lag,
        params.train_len,
        r.scan_len,
        params.delta,
        params.method,
        outcome.model.achieved_residual()
    );
    println!("flagged regions: {}", r.regions.len());
    for (s, e) in &r.regions {
        println!("  {s}-{e}");
    }
    println!("wrote {}", output.display());
    Ok(())
}

fn cmd_calibrate(a: &CalibrateArgs) -> AppResult<()> {
    let series = read_input(&a.input)?;
    let windows = read_windows(&a.input, a.labels.as_deref())?;
    if windows.is_empty() {
        return Err(AppError::validation("labels", "no labeled windows found; calibration needs ground truth"));
    }
    if !(a.fpr_cap >= 0.0 && a.fpr_cap <= 1.0) {
        return Err(AppError::validation("fpr-cap", "fpr-cap must lie in [0, 1]"));
    }
    let labeled = padkit::signals::LabeledSignal { series, anomaly_windows: windows, generator_spec: None };
    let mut spec = GridSpec::new(a.lags.clone(), a.train_lens.clone(), a.deltas.clone(), a.method);
    spec.fpr_cap = a.fpr_cap;
    spec.seed = a.seed;
    spec.scan_len = a.scan_len;
    let report = grid_search(&labeled, &spec)?;
    if let Some(path) = &a.csv {
        report.write_csv(create(path)?)?;
    }
    if let Some(path) = &a.json {
        fs::write(path, report.to_json()).map_err(io_err(path))?;
    }
    let best = report.best_entry();
    match &best.metrics {
        Some(m) => println!(
            "best: L={} S={} delta={} recall={:.4} fpr={:.4} flags={} gate={}",
            best.lag,
            best.train_len,
            best.delta,
            m.recall,
            m.false_positive_rate,
            m.flag_count,
            if report.best_meets_gate { "pass" } else { "fail" }
        ),
        None => println!("no grid cell could be fitted"),
    }
    println!("evaluated {} entries", report.entries.len());
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> AppResult<()> {
    let series = read_input(&a.input)?;
    let windows = read_windows(&a.input, a.labels.as_deref())?;
    let mut deltas = a.deltas.clone();
    if let Some(bad) = deltas.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(AppError::validation("delta", format!("delta ({bad}) must be positive and finite")));
    }
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let params = a.shape.params(deltas[0]);
    let scan_len = params.validate(series.len())?;
    let model = fit(&series, &params.fit_config())?;
    let points = sweep_delta(&model, &series, scan_len, &deltas, &windows)?;
    println!("{:>12} {:>8} {:>8} {:>8}", "delta", "flags", "recall", "fpr");
    for p in &points {
        println!(
            "{:>12} {:>8} {:>8.4} {:>8.4}",
            p.delta, p.flag_count, p.metrics.recall, p.metrics.false_positive_rate
        );
    }
    if let Some(path) = &a.output {
        let mut w = create(path)?;
        let werr = io_err(path);
        writeln!(w, "delta,flag_count,recall,false_positive_rate").map_err(&werr)?;
        for p in &points {
            writeln!(w, "{},{},{},{}", p.delta, p.flag_count, p.metrics.recall, p.metrics.false_positive_rate)
                .map_err(&werr)?;
        }
        w.flush().map_err(&werr)?;
    }
    Ok(())
}

/// The reference signals timed by `bench`, built from the presets.
pub fn bench_signals(names: &[String]) -> AppResult<Vec<BenchSignal>> {
    let presets: Vec<Preset> = if names.is_empty() {
        Preset::all().to_vec()
    } else {
        names
            .iter()
            .map(|n| Preset::by_name(n).ok_or_else(|| AppError::validation("signal", format!("unknown signal {n:?}"))))
            .collect::<AppResult<_>>()?
    };
    presets
        .into_iter()
        .map(|p| {
            let s = p.generate()?;
            Ok(BenchSignal { name: p.name.to_string(), series: s.series, lag: p.lag, train_len: p.train_len })
        })
        .collect()
}

fn cmd_bench(a: &BenchArgs) -> AppResult<()> {
    if a.trials < 1 {
        return Err(AppError::validation("trials", "trials must be at least 1"));
    }
    let signals = bench_signals(&a.signals)?;
    let report = time_methods(&signals, a.trials, a.seed)?;
    print!("{}", report.to_table());
    for r in report.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("{} {}: {}", r.signal, r.method.label(), r.error.as_deref().unwrap_or_default());
    }
    if let Some(path) = &a.csv {
        report.write_csv(create(path)?)?;
    }
    Ok(())
}

fn cmd_certify(a: &CertifyArgs) -> AppResult<()> {
    let series = read_input(&a.input)?;
    check_shape(a.lag, a.train_len, series.len())?;
    if !(a.eps > 0.0 && a.eps.is_finite()) {
        return Err(AppError::validation("eps", "eps must be positive and finite"));
    }
    let from = a.from.unwrap_or(a.lag);
    let to = a.to.unwrap_or(a.train_len);
    if from < a.lag || to > a.train_len || from > to {
        return Err(AppError::validation(
            "from",
            format!("--from {from} --to {to} must satisfy L <= from <= to <= S"),
        ));
    }
    let report = certify_bound(&series, a.lag, a.train_len, a.eps, from..=to)?;
    if let Some(path) = &a.json {
        let text = serde_json::to_string_pretty(&report).expect("report is serializable");
        fs::write(path, text).map_err(io_err(path))?;
    }
    let failed = report.certificates.iter().filter(|c| !c.holds()).count();
    println!(
        "r={} s_r={:.6} K_hat={:.6e} nu(eps)={:.6e} certified={} failed={failed}",
        report.r,
        report.s_r,
        report.k_hat,
        report.nu_eps,
        report.certificates.len()
    );
    if failed > 0 {
        return Err(AppError {
            kind: crate::error::ErrorKind::Numerical,
            field: None,
            message: format!("{failed} certificates violate the bound"),
        });
    }
    Ok(())
}

fn cmd_serve(a: &ServeArgs) -> AppResult<()> {
    let store = SignalStore::new(&a.data_dir);
    let addr = SocketAddr::new(a.bind, a.port);
    let rt = tokio::runtime::Runtime::new().map_err(|e| AppError::io(e.to_string()))?;
    rt.block_on(crate::server::serve(addr, store))
        .map_err(|e| AppError::io(format!("{addr}: {e}")))
}
