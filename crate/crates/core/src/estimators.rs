//! Monte Carlo estimators for the ergodic quantities of a suspension:
//! Lyapunov exponent of the holonomy cocycle, Kaimanovich entropy of the
//! leafwise heat kernel, the harmonic (stationary) measure on the fiber,
//! and the local dimension of that measure.

use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::brownian::{
    ln_heat_kernel, path_rng, simulate_path_with_rate, HeatKernelQuery,
};
use crate::error::{Error, Result};
use crate::hyperbolic::{hyperbolic_distance, HPoint, P1Point};
use crate::report::{mean_and_std_error, EstimatorReport};
use crate::suspension::{FiberType, HolonomyTracker, SuspensionFoliation};

/// Separate RNG stream for start-point and fiber-start draws, so the path
/// noise and the initial-condition noise never alias.
fn start_rng(seed: u64, stream_id: u64) -> ChaCha8Rng {
    path_rng(seed ^ 0x5eed_0000_0000_5eed, stream_id)
}

/// Draw a fiber starting point: uniform on the circle, or area-uniform on
/// the round sphere (stereographic radius √((1+u)/(1−u)) with u uniform).
fn sample_fiber_start(fiber_type: FiberType, rng: &mut ChaCha8Rng) -> P1Point {
    match fiber_type {
        FiberType::Circle => {
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            P1Point::finite(Complex64::from_polar(1.0, theta))
        }
        FiberType::Sphere => {
            let u: f64 = rng.gen_range(-1.0..1.0);
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = ((1.0 + u) / (1.0 - u)).sqrt();
            if r.is_finite() {
                P1Point::finite(Complex64::from_polar(r, phi))
            } else {
                P1Point::Infinity
            }
        }
    }
}

/// Lyapunov exponent of the holonomy cocycle along leafwise Brownian paths.
///
/// Start points are sampled from the base area measure and fiber starts
/// uniformly; a burn-in of `horizon/2` lets the fiber point approach the
/// harmonic measure before `log |h′|` is accumulated over `horizon`.
pub fn lyapunov_exponent(
    f: &SuspensionFoliation,
    horizon: f64,
    n: u64,
    step: f64,
    seed: u64,
) -> Result<EstimatorReport> {
    if n < 64 {
        return Err(Error::InvalidParameter(format!("lyapunov estimator needs N ≥ 64, got {n}")));
    }
    if horizon < 10.0 {
        return Err(Error::InvalidParameter(format!(
            "lyapunov estimator needs horizon ≥ 10, got {horizon}"
        )));
    }
    let started = Instant::now();
    let burn = horizon / 2.0;
    let total = burn + horizon;
    let burn_steps = (burn / step).round() as usize;
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = start_rng(seed, i);
            let start = HPoint::disc(f.base.sample_interior_point(&mut rng))?;
            let fiber = sample_fiber_start(f.fiber_type, &mut rng);
            let path = simulate_path_with_rate(&start, total, step, seed, i, 1.0)?;
            let mut tracker = HolonomyTracker::new(f, &start, fiber)?;
            tracker.accumulate = false;
            for inc in &path.increments[..burn_steps] {
                tracker.step(inc)?;
            }
            tracker.accumulate = true;
            tracker.reset_log_deriv();
            for inc in &path.increments[burn_steps..] {
                tracker.step(inc)?;
            }
            Ok(tracker.log_deriv() / horizon)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (value, std_error) = mean_and_std_error(&values);
    Ok(EstimatorReport {
        quantity: "lyapunov".into(),
        value,
        std_error,
        n,
        horizon,
        step,
        seed,
        wall_time: started.elapsed().as_secs_f64(),
        warning: None,
    })
}

/// Options for the entropy estimator beyond the standard configuration.
#[derive(Clone, Copy, Debug)]
pub struct EntropyOptions {
    /// Accept foliations whose leaves are not simply connected. The
    /// universal-cover kernel then overestimates the true leafwise entropy;
    /// callers opting in get a warning on the report.
    pub allow_multiply_connected: bool,
    /// Generator scale (diagnostic): simulate `rate·Δ` and evaluate the
    /// kernel at `rate·t`; the entropy scales by `rate`.
    pub rate: f64,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        Self { allow_multiply_connected: false, rate: 1.0 }
    }
}

/// Kaimanovich entropy via the pointwise `−log p` of the universal-cover
/// heat kernel, differenced between `horizon/2` and `horizon`.
///
/// The plain `−(1/t) log p(t, r_t)` carries an `O(log t / t)` bias from the
/// polynomial kernel prefactor (≈ +0.12 at t = 50); the two-time increment
/// `(L(t) − L(t/2))/(t/2)` with `L(t) = −log p(t, r_t)` cancels it while
/// keeping the same pointwise form.
pub fn kaimanovich_entropy(
    f: &SuspensionFoliation,
    horizon: f64,
    n: u64,
    step: f64,
    seed: u64,
) -> Result<EstimatorReport> {
    kaimanovich_entropy_with(f, horizon, n, step, seed, EntropyOptions::default())
}

pub fn kaimanovich_entropy_with(
    f: &SuspensionFoliation,
    horizon: f64,
    n: u64,
    step: f64,
    seed: u64,
    opts: EntropyOptions,
) -> Result<EstimatorReport> {
    if !f.simply_connected_leaves && !opts.allow_multiply_connected {
        return Err(Error::InvalidParameter(
            "kernel entropy assumes simply connected leaves; this foliation's leaves are not \
             (opt in explicitly to use the universal-cover kernel anyway)"
                .into(),
        ));
    }
    if horizon.is_nan() || horizon <= 0.0 {
        return Err(Error::InvalidParameter(format!("horizon must be > 0, got {horizon}")));
    }
    let started = Instant::now();
    let rate = opts.rate;
    let half_steps = ((horizon / 2.0) / step).round() as usize;
    let pairs: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let mut rng = start_rng(seed, i);
            let start = HPoint::disc(f.base.sample_interior_point(&mut rng))?;
            let path = simulate_path_with_rate(&start, horizon, step, seed, i, rate)?;
            let mid = HPoint::half_plane(path.samples[half_steps])?;
            let end = HPoint::half_plane(path.end())?;
            let r_half = hyperbolic_distance(&start, &mid);
            let r_full = hyperbolic_distance(&start, &end);
            let l_half =
                -ln_heat_kernel(HeatKernelQuery { t: rate * horizon / 2.0, r: r_half })?;
            let l_full = -ln_heat_kernel(HeatKernelQuery { t: rate * horizon, r: r_full })?;
            let h = (l_full - l_half) / (rate * horizon / 2.0) * rate;
            Ok((h, r_full))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let (value, std_error) = mean_and_std_error(&values);
    let mut warning = None;
    if horizon < 20.0 {
        warning = Some("short horizon (< 20): entropy estimate is biased upward".into());
    } else {
        // Drift consistency gate: the same endpoints must reproduce the
        // known drift before the entropy value is accepted.
        let drifts: Vec<f64> = pairs.iter().map(|p| p.1 / horizon).collect();
        let (drift, _) = mean_and_std_error(&drifts);
        if (drift - rate).abs() > 0.1 * rate.max(1.0) {
            return Err(Error::Numerical(format!(
                "drift consistency check failed: measured {drift:.4}, expected {rate:.4}"
            )));
        }
    }
    if !f.simply_connected_leaves {
        warning = Some(
            "leaves are not simply connected: universal-cover kernel overestimates entropy"
                .into(),
        );
    }
    Ok(EstimatorReport {
        quantity: "entropy".into(),
        value,
        std_error,
        n,
        horizon,
        step,
        seed,
        wall_time: started.elapsed().as_secs_f64(),
        warning,
    })
}

/// Occupation histogram of the fiber coordinate.
#[derive(Clone, Debug)]
pub struct FiberHistogram {
    pub fiber_type: FiberType,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl FiberHistogram {
    /// Bin index of a fiber point: uniform angle bins on the circle,
    /// equal-area latitude bands on the sphere.
    pub fn bin_of(fiber_type: FiberType, bins: usize, p: &P1Point) -> usize {
        match fiber_type {
            FiberType::Circle => {
                let theta = p.coord().map(|z| z.arg()).unwrap_or(0.0);
                let frac = (theta + std::f64::consts::PI) / std::f64::consts::TAU;
                ((frac * bins as f64) as usize).min(bins - 1)
            }
            FiberType::Sphere => {
                let u = match p {
                    P1Point::Finite(z) => {
                        let n2 = z.norm_sqr();
                        (n2 - 1.0) / (n2 + 1.0)
                    }
                    P1Point::Infinity => 1.0,
                };
                let frac = (u + 1.0) / 2.0;
                ((frac * bins as f64) as usize).min(bins - 1)
            }
        }
    }
}

/// Endpoint fiber samples after transporting uniformly-started fibers for
/// `1.5 × horizon` (the first half serves as burn-in).
pub fn fiber_endpoint_samples(
    f: &SuspensionFoliation,
    horizon: f64,
    n: u64,
    step: f64,
    seed: u64,
) -> Result<Vec<P1Point>> {
    if horizon.is_nan() || horizon <= 0.0 {
        return Err(Error::InvalidParameter(format!("horizon must be > 0, got {horizon}")));
    }
    let total = 1.5 * horizon;
    (0..n)
        .into_par_iter()
        .map(|i| -> Result<P1Point> {
            let mut rng = start_rng(seed, i);
            let start = HPoint::disc(f.base.sample_interior_point(&mut rng))?;
            let fiber = sample_fiber_start(f.fiber_type, &mut rng);
            let path = simulate_path_with_rate(&start, total, step, seed, i, 1.0)?;
            let mut tracker = HolonomyTracker::new(f, &start, fiber)?;
            for inc in &path.increments {
                tracker.step(inc)?;
            }
            Ok(tracker.fiber_point())
        })
        .collect()
}

/// Harmonic-measure histogram: the stationary law of the fiber process,
/// estimated from path endpoints after burn-in.
pub fn harmonic_measure(
    f: &SuspensionFoliation,
    horizon: f64,
    n: u64,
    bins: usize,
    seed: u64,
) -> Result<FiberHistogram> {
    if bins < 16 {
        return Err(Error::InvalidParameter(format!("need bins ≥ 16, got {bins}")));
    }
    let samples = fiber_endpoint_samples(f, horizon, n, 0.02, seed)?;
    let mut counts = vec![0u64; bins];
    for p in &samples {
        counts[FiberHistogram::bin_of(f.fiber_type, bins, p)] += 1;
    }
    Ok(FiberHistogram { fiber_type: f.fiber_type, counts, total: n })
}

/// Least-squares fit diagnostics for a local-dimension regression.
#[derive(Clone, Debug)]
pub struct RegressionReport {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Set when R² < 0.9; the fit is reported but flagged.
    pub low_confidence: bool,
}

/// Local dimension of an empirical measure: the slope of
/// `⟨log μ(B(x, r))⟩` against `log r` over a geometric radius grid, with the
/// ball mass estimated from the samples themselves (chordal metric).
pub fn local_dimension(samples: &[P1Point], radii: &[f64]) -> Result<RegressionReport> {
    if samples.len() < 1000 {
        return Err(Error::InvalidParameter(format!(
            "local dimension needs ≥ 1000 samples, got {}",
            samples.len()
        )));
    }
    let (lo, hi) = radii.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| {
        (lo.min(r), hi.max(r))
    });
    if radii.len() < 4 || hi / lo < 100.0 {
        return Err(Error::InvalidParameter(
            "radii must span at least two decades (and at least 4 values)".into(),
        ));
    }
    // Average log-mass over a deterministic subset of centers.
    let centers: Vec<&P1Point> = samples.iter().step_by((samples.len() / 200).max(1)).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &r in radii {
        let mut logs = Vec::with_capacity(centers.len());
        for &c in &centers {
            let count = samples.iter().filter(|s| c.chordal_distance(s) <= r).count();
            logs.push((count as f64 / samples.len() as f64).ln());
        }
        let (mean_log, _) = mean_and_std_error(&logs);
        xs.push(r.ln());
        ys.push(mean_log);
    }
    let (sx, _) = mean_and_std_error(&xs);
    let (sy, _) = mean_and_std_error(&ys);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxx += (x - sx) * (x - sx);
        sxy += (x - sx) * (y - sy);
        syy += (y - sy) * (y - sy);
    }
    let slope = sxy / sxx;
    let intercept = sy - slope * sx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RegressionReport { slope, intercept, r_squared, low_confidence: r_squared < 0.9 })
}

/// Regularized lower incomplete gamma `P(a, x)` (series + continued
/// fraction), used for χ² tail probabilities.
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ln_gamma_a = ln_gamma(a);
    if x < a + 1.0 {
        // Series expansion.
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..500 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-15 {
                break;
            }
        }
        sum * (-x + a * x.ln() - ln_gamma_a).exp()
    } else {
        // Lentz continued fraction for Q(a, x).
        let mut b = x + 1.0 - a;
        let mut c = 1e300;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < 1e-300 {
                d = 1e-300;
            }
            c = b + an / c;
            if c.abs() < 1e-300 {
                c = 1e-300;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-15 {
                break;
            }
        }
        1.0 - (-x + a * x.ln() - ln_gamma_a).exp() * h
    }
}

/// Lanczos log-gamma.
fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for g in G {
        y += 1.0;
        ser += g / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// χ² goodness-of-fit p-value of counts against the uniform multinomial.
pub fn chi_squared_uniform_pvalue(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let k = counts.len() as f64;
    let expected = total as f64 / k;
    let stat: f64 =
        counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let df = k - 1.0;
    1.0 - regularized_gamma_p(df / 2.0, stat / 2.0)
}
