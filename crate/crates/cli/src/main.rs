//! Batch front end for the lamination laboratory: estimator orchestration,
//! reproducibility manifests, CSV/JSON emission.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_complex::Complex64;
use serde::Serialize;

use levilab::brownian::{
    drift_estimate, dynkin_check, heat_kernel, kernel_normalization, HeatKernelQuery,
};
use levilab::dimension::{
    box_counting, sample_limit_set, verify_dimension_inequality, InequalityParams,
};
use levilab::estimators::{
    harmonic_measure, kaimanovich_entropy_with, lyapunov_exponent, EntropyOptions,
};
use levilab::hyperbolic::P1Point;
use levilab::report::EstimatorReport;
use levilab::surface::{double_cover_invariants, p2_lyapunov, DivisorClass, RuledSurfaceContext};
use levilab::suspension::{flow_jacobian_check, SuspensionFoliation};
use levilab::verification::verify_suite;
use levilab::Error;

#[derive(Parser)]
#[command(
    name = "levilab",
    version,
    about = "Monte Carlo and exact computations for flat P¹-bundle laminations \
             over hyperbolic surfaces"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Optional key=value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker thread count (default: env LEVILAB_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write results to this path instead of stdout; a sibling
    /// `<path>.manifest.json` records the resolved configuration.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Mean escape rate of leafwise Brownian motion (exact value 1).
    Drift {
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Generator identity on the Poisson kernel (exact value −1).
    Dynkin {
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        n: Option<u64>,
    },
    /// Heat-kernel density table and total mass at time t.
    HeatKernel {
        #[arg(long)]
        t: Option<f64>,
        /// Largest radius in the density table.
        #[arg(long)]
        r_max: Option<f64>,
        /// Number of table rows.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Lyapunov exponent of the holonomy cocycle.
    Exponent {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Kaimanovich entropy of the leafwise heat kernel.
    Entropy {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Accept presets whose leaves are not simply connected.
        #[arg(long)]
        allow_multiply_connected: bool,
    },
    /// Stationary fiber histogram along Brownian paths.
    HarmonicMeasure {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Orbit of a base point under reduced words (CSV: re,im).
    LimitSet {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Box-counting dimension of the sampled limit set.
    Dimension {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        depth: Option<usize>,
        /// Comma-separated radius grid (default: geometric from 0.3).
        #[arg(long)]
        radii: Option<String>,
    },
    /// Entropy/exponent/dimension inequality check for a preset.
    VerifyInequality {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Monte Carlo check of the vertical-flow volume Jacobian.
    Jacobian {
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        n: Option<u64>,
    },
    /// Exact ruled-surface construction report for a genus.
    Surface {
        #[arg(long)]
        genus: Option<i64>,
    },
    /// Run the full verification suite (one row per check).
    Verify {
        /// Only run checks whose name contains this substring.
        #[arg(long)]
        filter: Option<String>,
    },
}

/// Resolved key=value pairs from the optional config file.
struct FileConfig(HashMap<String, String>);

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self, String> {
        let mut map = HashMap::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| format!("config line {} is not key=value", lineno + 1))?;
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Self(map))
    }

    /// Flag value if given, else config-file value, else default.
    fn get<T: FromStr + Copy>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, String>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.0.get(key) {
            Some(s) => s.parse().map_err(|e| format!("config key {key}: {e}")),
            None => Ok(default),
        }
    }

    fn get_string(&self, flag: Option<String>, key: &str, default: &str) -> String {
        flag.or_else(|| self.0.get(key).cloned()).unwrap_or_else(|| default.to_string())
    }
}

/// Reproducibility record written next to each output file.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    version: String,
    /// Unix timestamp (excluded from reproducibility comparisons).
    timestamp: u64,
    wall_time_seconds: f64,
    seed: u64,
    threads: usize,
    format: Format,
    /// Resolved parameters after merging flags and config file.
    parameters: HashMap<String, String>,
    /// Per-worker RNG stream ids are the sample indices 0..N.
    stream_ids: String,
}

fn preset_foliation(name: &str) -> levilab::Result<SuspensionFoliation> {
    match name {
        "fuchsian-boundary" => SuspensionFoliation::fuchsian_boundary(),
        "trivial" => SuspensionFoliation::trivial(),
        "schottky" => SuspensionFoliation::schottky(4.0, 1.0),
        other => {
            if let Some(args) = other.strip_prefix("schottky(").and_then(|s| s.strip_suffix(')')) {
                let parts: Vec<&str> = args.split(',').collect();
                if parts.len() == 2 {
                    let c: f64 = parts[0].trim().parse().map_err(|_| {
                        Error::InvalidParameter(format!("bad schottky parameter {}", parts[0]))
                    })?;
                    let r: f64 = parts[1].trim().parse().map_err(|_| {
                        Error::InvalidParameter(format!("bad schottky parameter {}", parts[1]))
                    })?;
                    return SuspensionFoliation::schottky(c, r);
                }
            }
            Err(Error::InvalidParameter(format!(
                "unknown preset {other}; expected fuchsian-boundary, trivial, schottky, \
                 or schottky(c,r)"
            )))
        }
    }
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::Numerical(_) | Error::ReductionFailure(_) => ExitCode::from(3),
        _ => ExitCode::from(2),
    }
}

fn emit(output: Option<&Path>, content: &str) -> Result<(), String> {
    match output {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn write_manifest(
    output: Option<&Path>,
    manifest: &RunManifest,
) -> Result<(), String> {
    if let Some(p) = output {
        let mut path = p.as_os_str().to_owned();
        path.push(".manifest.json");
        let text = serde_json::to_string_pretty(manifest).map_err(|e| e.to_string())?;
        std::fs::write(&path, text).map_err(|e| format!("cannot write manifest: {e}"))?;
    }
    Ok(())
}

fn report_output(report: &EstimatorReport, format: Format) -> String {
    match format {
        Format::Csv => format!(
            "quantity,value,std_error,N,horizon,step,seed\n{}\n",
            report.csv_row()
        ),
        Format::Json => {
            format!("{}\n", serde_json::to_string_pretty(report).unwrap_or_default())
        }
    }
}

#[derive(Serialize)]
struct SurfaceReport {
    genus: i64,
    chi: i64,
    canonical_class: DivisorClass,
    sigma_self_intersection: i64,
    e_plus_k: DivisorClass,
    e_plus_k_ample: bool,
    reider_l: DivisorClass,
    reider_identity_holds: bool,
    chi_cover: String,
    euler_class_cover: String,
    ratio: String,
    ratio_decimal: f64,
    p2_lyapunov_degree_2: String,
    p2_lyapunov_degree_5: String,
}

fn surface_report(genus: i64) -> levilab::Result<SurfaceReport> {
    let ctx = RuledSurfaceContext::new(genus)?;
    let chi = ctx.chi;
    let sigma = DivisorClass::new(1, 0);
    let e_plus_k = DivisorClass::new(1, 2 * (1 - 2 * chi));
    let e = DivisorClass::new(3, 2 * (1 - 2 * chi));
    let witness = ctx.reider_very_ample_witness(e)?;
    let cover = double_cover_invariants(&BigInt::from(genus))?;
    use num_traits::ToPrimitive;
    Ok(SurfaceReport {
        genus,
        chi,
        canonical_class: ctx.canonical_class(),
        sigma_self_intersection: ctx.intersect(sigma, sigma),
        e_plus_k,
        e_plus_k_ample: ctx.is_ample(e_plus_k),
        reider_l: witness.l,
        reider_identity_holds: witness.identity_holds,
        chi_cover: cover.chi_cover.to_string(),
        euler_class_cover: cover.euler_class_cover.to_string(),
        ratio: format!("{}", cover.ratio),
        ratio_decimal: cover.ratio.to_f64().unwrap_or(f64::NAN),
        p2_lyapunov_degree_2: format!("{}", p2_lyapunov(2)?),
        p2_lyapunov_degree_5: format!("{}", p2_lyapunov(5)?),
    })
}

fn run(cli: Cli) -> Result<(), (String, ExitCode)> {
    let started = Instant::now();
    let cfg = FileConfig::load(cli.config.as_deref())
        .map_err(|e| (e, ExitCode::from(2)))?;
    let validation = |e: String| (e, ExitCode::from(2));
    let domain = |e: Error| (e.to_string(), exit_code_for(&e));

    let seed = cfg.get(cli.seed, "seed", 7u64).map_err(validation)?;
    let threads = match cli.threads {
        Some(t) => t,
        None => match std::env::var("LEVILAB_THREADS") {
            Ok(s) => s
                .parse()
                .map_err(|_| validation(format!("bad LEVILAB_THREADS value {s}")))?,
            Err(_) => cfg.get(None, "threads", 0usize).map_err(validation)?,
        },
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| validation(format!("thread pool: {e}")))?;
    }
    let format = match cli.format {
        Some(f) => f,
        None => match cfg.get_string(None, "format", "csv").as_str() {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => return Err(validation(format!("unknown format {other}"))),
        },
    };
    let output = cli.output.as_deref();
    let mut params: HashMap<String, String> = HashMap::new();
    params.insert("seed".into(), seed.to_string());

    let (command_name, exit_override) = match &cli.cmd {
        Cmd::Drift { n, horizon, step } => {
            let n = cfg.get(*n, "n", 4096u64).map_err(validation)?;
            let horizon = cfg.get(*horizon, "horizon", 50.0).map_err(validation)?;
            let step = cfg.get(*step, "step", 0.01).map_err(validation)?;
            params.insert("n".into(), n.to_string());
            params.insert("horizon".into(), horizon.to_string());
            params.insert("step".into(), step.to_string());
            let r = drift_estimate(n, horizon, step, seed).map_err(domain)?;
            emit(output, &report_output(&r, format)).map_err(validation)?;
            ("drift", None)
        }
        Cmd::Dynkin { t, n } => {
            let t = cfg.get(*t, "t", 1.0).map_err(validation)?;
            let n = cfg.get(*n, "n", 10_000u64).map_err(validation)?;
            params.insert("t".into(), t.to_string());
            params.insert("n".into(), n.to_string());
            let r = dynkin_check(t, n, seed).map_err(domain)?;
            emit(output, &report_output(&r, format)).map_err(validation)?;
            ("dynkin", None)
        }
        Cmd::HeatKernel { t, r_max, points } => {
            let t = cfg.get(*t, "t", 1.0).map_err(validation)?;
            let r_max = cfg.get(*r_max, "r_max", 10.0).map_err(validation)?;
            let points = cfg.get(*points, "points", 100usize).map_err(validation)?;
            params.insert("t".into(), t.to_string());
            params.insert("r_max".into(), r_max.to_string());
            params.insert("points".into(), points.to_string());
            let mass = kernel_normalization(t).map_err(domain)?;
            let mut rows = Vec::with_capacity(points);
            for k in 0..points {
                let r = r_max * (k as f64 + 0.5) / points as f64;
                let p = heat_kernel(HeatKernelQuery { t, r }).map_err(domain)?;
                rows.push((r, p));
            }
            let content = match format {
                Format::Csv => {
                    let mut s = format!("# t = {t}, total mass = {mass:.9}\nr,density\n");
                    for (r, p) in rows {
                        s.push_str(&format!("{r},{p}\n"));
                    }
                    s
                }
                Format::Json => {
                    #[derive(Serialize)]
                    struct KernelTable {
                        t: f64,
                        total_mass: f64,
                        rows: Vec<(f64, f64)>,
                    }
                    format!(
                        "{}\n",
                        serde_json::to_string_pretty(&KernelTable { t, total_mass: mass, rows })
                            .unwrap_or_default()
                    )
                }
            };
            emit(output, &content).map_err(validation)?;
            ("heat-kernel", None)
        }
        Cmd::Exponent { preset, n, horizon, step } => {
            let preset = cfg.get_string(preset.clone(), "preset", "fuchsian-boundary");
            let n = cfg.get(*n, "n", 256u64).map_err(validation)?;
            let horizon = cfg.get(*horizon, "horizon", 50.0).map_err(validation)?;
            let step = cfg.get(*step, "step", 0.02).map_err(validation)?;
            params.insert("preset".into(), preset.clone());
            params.insert("n".into(), n.to_string());
            params.insert("horizon".into(), horizon.to_string());
            params.insert("step".into(), step.to_string());
            let f = preset_foliation(&preset).map_err(domain)?;
            let r = lyapunov_exponent(&f, horizon, n, step, seed).map_err(domain)?;
            emit(output, &report_output(&r, format)).map_err(validation)?;
            ("exponent", None)
        }
        Cmd::Entropy { preset, n, horizon, step, allow_multiply_connected } => {
            let preset = cfg.get_string(preset.clone(), "preset", "fuchsian-boundary");
            let n = cfg.get(*n, "n", 1024u64).map_err(validation)?;
            let horizon = cfg.get(*horizon, "horizon", 50.0).map_err(validation)?;
            let step = cfg.get(*step, "step", 0.02).map_err(validation)?;
            params.insert("preset".into(), preset.clone());
            params.insert("n".into(), n.to_string());
            params.insert("horizon".into(), horizon.to_string());
            params.insert("step".into(), step.to_string());
            let f = preset_foliation(&preset).map_err(domain)?;
            let opts = EntropyOptions {
                allow_multiply_connected: *allow_multiply_connected,
                rate: 1.0,
            };
            let r = kaimanovich_entropy_with(&f, horizon, n, step, seed, opts)
                .map_err(domain)?;
            if let Some(w) = &r.warning {
                eprintln!("warning: {w}");
            }
            emit(output, &report_output(&r, format)).map_err(validation)?;
            ("entropy", None)
        }
        Cmd::HarmonicMeasure { preset, n, horizon, bins } => {
            let preset = cfg.get_string(preset.clone(), "preset", "fuchsian-boundary");
            let n = cfg.get(*n, "n", 10_000u64).map_err(validation)?;
            let horizon = cfg.get(*horizon, "horizon", 20.0).map_err(validation)?;
            let bins = cfg.get(*bins, "bins", 64usize).map_err(validation)?;
            params.insert("preset".into(), preset.clone());
            params.insert("n".into(), n.to_string());
            params.insert("horizon".into(), horizon.to_string());
            params.insert("bins".into(), bins.to_string());
            let f = preset_foliation(&preset).map_err(domain)?;
            let h = harmonic_measure(&f, horizon, n, bins, seed).map_err(domain)?;
            let content = match format {
                Format::Csv => {
                    let mut s = String::from("bin,count\n");
                    for (i, c) in h.counts.iter().enumerate() {
                        s.push_str(&format!("{i},{c}\n"));
                    }
                    s
                }
                Format::Json => {
                    #[derive(Serialize)]
                    struct Hist {
                        bins: usize,
                        total: u64,
                        counts: Vec<u64>,
                    }
                    format!(
                        "{}\n",
                        serde_json::to_string_pretty(&Hist {
                            bins,
                            total: h.total,
                            counts: h.counts.clone(),
                        })
                        .unwrap_or_default()
                    )
                }
            };
            emit(output, &content).map_err(validation)?;
            ("harmonic-measure", None)
        }
        Cmd::LimitSet { preset, depth } => {
            let preset = cfg.get_string(preset.clone(), "preset", "schottky");
            let depth = cfg.get(*depth, "depth", 10usize).map_err(validation)?;
            params.insert("preset".into(), preset.clone());
            params.insert("depth".into(), depth.to_string());
            let f = preset_foliation(&preset).map_err(domain)?;
            let sample =
                sample_limit_set(&f.rep, depth, P1Point::finite(Complex64::new(0.0, 0.0)))
                    .map_err(domain)?;
            let mut s = String::from("re,im\n");
            for p in &sample.points {
                if let Some(z) = p.coord() {
                    s.push_str(&format!("{},{}\n", z.re, z.im));
                }
            }
            emit(output, &s).map_err(validation)?;
            ("limit-set", None)
        }
        Cmd::Dimension { preset, depth, radii } => {
            let preset = cfg.get_string(preset.clone(), "preset", "schottky");
            let depth = cfg.get(*depth, "depth", 10usize).map_err(validation)?;
            params.insert("preset".into(), preset.clone());
            params.insert("depth".into(), depth.to_string());
            let radii: Vec<f64> = match radii
                .clone()
                .or_else(|| cfg.0.get("radii").cloned())
            {
                Some(s) => s
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| validation(format!("bad radius: {e}")))?,
                None => (0..8).map(|k| 0.3 * 0.5f64.powi(k)).collect(),
            };
            params.insert(
                "radii".into(),
                radii.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
            );
            let f = preset_foliation(&preset).map_err(domain)?;
            let sample =
                sample_limit_set(&f.rep, depth, P1Point::finite(Complex64::new(0.0, 0.0)))
                    .map_err(domain)?;
            let rep = box_counting(&sample.points, &radii).map_err(domain)?;
            #[derive(Serialize)]
            struct DimOut {
                preset: String,
                depth: usize,
                points: usize,
                box_dimension: f64,
                fit_r_squared: f64,
                degenerate: bool,
            }
            let content = format!(
                "{}\n",
                serde_json::to_string_pretty(&DimOut {
                    preset,
                    depth,
                    points: sample.points.len(),
                    box_dimension: rep.box_dimension,
                    fit_r_squared: rep.fit_r_squared,
                    degenerate: rep.degenerate,
                })
                .unwrap_or_default()
            );
            emit(output, &content).map_err(validation)?;
            ("dimension", None)
        }
        Cmd::VerifyInequality { preset, n, horizon, step, depth } => {
            let preset = cfg.get_string(preset.clone(), "preset", "fuchsian-boundary");
            let n = cfg.get(*n, "n", 128u64).map_err(validation)?;
            let horizon = cfg.get(*horizon, "horizon", 30.0).map_err(validation)?;
            let step = cfg.get(*step, "step", 0.02).map_err(validation)?;
            let depth = cfg.get(*depth, "depth", 10usize).map_err(validation)?;
            params.insert("preset".into(), preset.clone());
            params.insert("n".into(), n.to_string());
            params.insert("horizon".into(), horizon.to_string());
            params.insert("step".into(), step.to_string());
            params.insert("depth".into(), depth.to_string());
            let f = preset_foliation(&preset).map_err(domain)?;
            let r = verify_dimension_inequality(
                &f,
                InequalityParams { horizon, n_paths: n, step, depth, seed },
            )
            .map_err(domain)?;
            #[derive(Serialize)]
            struct IneqOut {
                preset: String,
                lyapunov: f64,
                entropy: f64,
                dimension: f64,
                ratio: f64,
                margin: f64,
                pass: bool,
            }
            let content = format!(
                "{}\n",
                serde_json::to_string_pretty(&IneqOut {
                    preset,
                    lyapunov: r.lyapunov,
                    entropy: r.entropy,
                    dimension: r.dimension,
                    ratio: r.ratio,
                    margin: r.margin,
                    pass: r.pass,
                })
                .unwrap_or_default()
            );
            emit(output, &content).map_err(validation)?;
            ("verify-inequality", None)
        }
        Cmd::Jacobian { t, n } => {
            let t = cfg.get(*t, "t", 1.0).map_err(validation)?;
            let n = cfg.get(*n, "n", 1_000_000u64).map_err(validation)?;
            params.insert("t".into(), t.to_string());
            params.insert("n".into(), n.to_string());
            let r = flow_jacobian_check(t, n, seed).map_err(domain)?;
            #[derive(Serialize)]
            struct JacOut {
                t: f64,
                expected: f64,
                observed: f64,
                rel_error: f64,
                n: u64,
            }
            let content = format!(
                "{}\n",
                serde_json::to_string_pretty(&JacOut {
                    t: r.t,
                    expected: r.expected,
                    observed: r.observed,
                    rel_error: r.rel_error,
                    n: r.n,
                })
                .unwrap_or_default()
            );
            emit(output, &content).map_err(validation)?;
            ("jacobian", None)
        }
        Cmd::Surface { genus } => {
            let genus = cfg.get(*genus, "genus", 2i64).map_err(validation)?;
            params.insert("genus".into(), genus.to_string());
            let rep = surface_report(genus).map_err(domain)?;
            let content = match format {
                Format::Json => {
                    format!("{}\n", serde_json::to_string_pretty(&rep).unwrap_or_default())
                }
                Format::Csv => format!(
                    "genus               {}\n\
                     chi                 {}\n\
                     canonical class     ({}, {})\n\
                     sigma^2             {}\n\
                     E + K class         ({}, {})\n\
                     E + K ample         {}\n\
                     Reider witness L    ({}, {})\n\
                     4L + K = 2E         {}\n\
                     chi of double cover {}\n\
                     Euler class (cover) {}\n\
                     eu'/chi' ratio      {} = {:.6}\n\
                     plane Lyapunov d=2  {}\n\
                     plane Lyapunov d=5  {}\n",
                    rep.genus,
                    rep.chi,
                    rep.canonical_class.a,
                    rep.canonical_class.b,
                    rep.sigma_self_intersection,
                    rep.e_plus_k.a,
                    rep.e_plus_k.b,
                    rep.e_plus_k_ample,
                    rep.reider_l.a,
                    rep.reider_l.b,
                    rep.reider_identity_holds,
                    rep.chi_cover,
                    rep.euler_class_cover,
                    rep.ratio,
                    rep.ratio_decimal,
                    rep.p2_lyapunov_degree_2,
                    rep.p2_lyapunov_degree_5,
                ),
            };
            emit(output, &content).map_err(validation)?;
            ("surface", None)
        }
        Cmd::Verify { filter } => {
            let filter = filter.clone().or_else(|| cfg.0.get("filter").cloned());
            if let Some(f) = &filter {
                params.insert("filter".into(), f.clone());
            }
            let rows = verify_suite(seed, filter.as_deref()).map_err(domain)?;
            let any_fail = rows.iter().any(|r| !r.pass);
            let content = match format {
                Format::Json => {
                    format!("{}\n", serde_json::to_string_pretty(&rows).unwrap_or_default())
                }
                Format::Csv => {
                    let mut s = String::from("name,expected,observed,tolerance,pass\n");
                    for r in &rows {
                        s.push_str(&format!(
                            "{},\"{}\",\"{}\",\"{}\",{}\n",
                            r.name, r.expected, r.observed, r.tolerance, r.pass
                        ));
                    }
                    s
                }
            };
            emit(output, &content).map_err(validation)?;
            (
                "verify",
                if any_fail { Some(ExitCode::from(1)) } else { None },
            )
        }
    };

    let manifest = RunManifest {
        command: command_name.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        seed,
        threads,
        format,
        parameters: params,
        stream_ids: "0..N (one ChaCha8 stream per sample index)".to_string(),
    };
    write_manifest(output, &manifest).map_err(validation)?;
    if let Some(code) = exit_override {
        return Err((String::new(), code));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((msg, code)) => {
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            code
        }
    }
}
