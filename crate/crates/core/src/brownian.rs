//! Brownian motion on the hyperbolic plane and its heat kernel.
//!
//! The generator is the full Laplace–Beltrami operator Δ (heat equation
//! ∂u/∂t = Δu), so in the half-plane the diffusion solves
//! `dX = √2 Y dW₁`, `dY = √2 Y dW₂`. Under this convention the radial drift
//! is 1 and the entropy of the heat kernel is 1.

use std::time::Instant;

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hyperbolic::{hyperbolic_distance, HPoint};
use crate::report::{mean_and_std_error, EstimatorReport};

/// One time step of the half-plane diffusion, stored in a frame-free form:
/// from `x + iy` the next sample is `x + y·shear + i·y·e^{log_ratio}`.
///
/// Because the increments are i.i.d. and the metric is homogeneous, a path
/// can be replayed from any frame (used by holonomy tracking, where the
/// globally developed coordinates would underflow).
#[derive(Clone, Copy, Debug)]
pub struct Increment {
    pub log_ratio: f64,
    pub shear: f64,
}

/// A sampled Brownian path in the half-plane model.
#[derive(Clone, Debug)]
pub struct BrownianPath {
    pub step: f64,
    pub horizon: f64,
    pub rng_stream_id: u64,
    /// Half-plane samples; `samples[0]` is the start point.
    pub samples: Vec<Complex64>,
    /// The `samples.len() − 1` increments generating the path.
    pub increments: Vec<Increment>,
}

impl BrownianPath {
    pub fn start(&self) -> Complex64 {
        self.samples[0]
    }

    pub fn end(&self) -> Complex64 {
        *self.samples.last().unwrap()
    }
}

/// Dedicated RNG stream for one path, keyed by (master seed, stream id) so
/// results do not depend on scheduling.
pub fn path_rng(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream_id.to_le_bytes());
    key[16..24].copy_from_slice(&0x6c65_7669_6c61_6221u64.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn draw_increment(rng: &mut ChaCha8Rng, step: f64, rate: f64) -> Increment {
    let g1: f64 = StandardNormal.sample(rng);
    let g2: f64 = StandardNormal.sample(rng);
    // Vertical coordinate is exact: log Y increments are N(−rate·h, 2·rate·h).
    let log_ratio = -rate * step + (2.0 * rate * step).sqrt() * g2;
    // Horizontal conditional variance 2·rate·∫Y² ds approximated by the
    // trapezoid of Y² over the step (Y normalized to 1 at the step start).
    let a = log_ratio.exp();
    let shear = (rate * step * (1.0 + a * a)).sqrt() * g1;
    Increment { log_ratio, shear }
}

fn validate_step_horizon(horizon: f64, step: f64) -> Result<()> {
    if !horizon.is_finite() || horizon < 0.0 {
        return Err(Error::InvalidParameter(format!("horizon must be ≥ 0, got {horizon}")));
    }
    if step.is_nan() || step <= 0.0 || step > 0.1 {
        return Err(Error::InvalidParameter(format!("step must lie in (0, 0.1], got {step}")));
    }
    Ok(())
}

/// Simulate one path with a scaled generator `rate·Δ` (diagnostic variant;
/// `rate = 1` is the standard convention, `rate = 1/2` gives the ½Δ check).
pub fn simulate_path_with_rate(
    start: &HPoint,
    horizon: f64,
    step: f64,
    seed: u64,
    stream_id: u64,
    rate: f64,
) -> Result<BrownianPath> {
    validate_step_horizon(horizon, step)?;
    if rate.is_nan() || rate <= 0.0 {
        return Err(Error::InvalidParameter(format!("rate must be > 0, got {rate}")));
    }
    let n = (horizon / step).round() as usize;
    let mut rng = path_rng(seed, stream_id);
    let w0 = start.half_plane_coord();
    let mut samples = Vec::with_capacity(n + 1);
    let mut increments = Vec::with_capacity(n);
    samples.push(w0);
    let (mut x, mut y) = (w0.re, w0.im);
    for _ in 0..n {
        let inc = draw_increment(&mut rng, step, rate);
        x += y * inc.shear;
        y *= inc.log_ratio.exp();
        samples.push(Complex64::new(x, y));
        increments.push(inc);
    }
    Ok(BrownianPath { step, horizon, rng_stream_id: stream_id, samples, increments })
}

/// Simulate one leafwise Brownian path from `start` over `[0, horizon]`.
pub fn simulate_path(
    start: &HPoint,
    horizon: f64,
    step: f64,
    seed: u64,
    stream_id: u64,
) -> Result<BrownianPath> {
    simulate_path_with_rate(start, horizon, step, seed, stream_id, 1.0)
}

// ---------------------------------------------------------------------------
// Heat kernel
// ---------------------------------------------------------------------------

/// A kernel evaluation request: time `t > 0` and geodesic distance `r ≥ 0`.
#[derive(Clone, Copy, Debug)]
pub struct HeatKernelQuery {
    pub t: f64,
    pub r: f64,
}

/// Gauss–Legendre nodes and weights on [−1, 1], computed by Newton iteration
/// on the Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Evaluate P_n(x) and P_n'(x) via the three-term recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

static GL128: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| gauss_legendre(128));

/// Natural log of the heat kernel `p(t, r)` for curvature −1 and generator Δ.
///
/// Uses the classical integral representation
/// `p = √2 e^{−t/4} (4πt)^{−3/2} ∫_r^∞ s e^{−s²/4t} (cosh s − cosh r)^{−1/2} ds`
/// with the substitution `s = r + v²`, which removes the inverse square-root
/// singularity at `s = r`, and the stable product form
/// `cosh s − cosh r = 2 sinh((s+r)/2) sinh((s−r)/2)`.
pub fn ln_heat_kernel(q: HeatKernelQuery) -> Result<f64> {
    let HeatKernelQuery { t, r } = q;
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::InvalidParameter(format!("kernel time must be > 0, got {t}")));
    }
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidParameter(format!("kernel distance must be ≥ 0, got {r}")));
    }
    // Truncate where the Gaussian factor e^{−(s²−r²)/4t} is below e^{−45}.
    let s_cut = (r * r + 180.0 * t).sqrt();
    let vmax = (s_cut - r).sqrt();
    let (nodes, weights) = (&GL128.0, &GL128.1);
    let mut integral = 0.0;
    for (x, w) in nodes.iter().zip(weights.iter()) {
        let v = 0.5 * vmax * (x + 1.0);
        let s = r + v * v;
        // s² − r² = v²(2r + v²), kept in product form.
        let expo = -(v * v * (2.0 * r + v * v)) / (4.0 * t);
        let root = 2.0 * ((s + r) / 2.0).sinh() * (v * v / 2.0).sinh();
        let g = if v == 0.0 {
            0.0
        } else {
            2.0 * v * s * expo.exp() / root.sqrt()
        };
        integral += w * g;
    }
    integral *= 0.5 * vmax;
    if !integral.is_finite() || integral <= 0.0 {
        return Err(Error::Numerical(format!(
            "heat-kernel quadrature failed at t = {t}, r = {r}: integral = {integral}"
        )));
    }
    let ln_pref = 0.5 * (2.0f64).ln()
        - t / 4.0
        - 1.5 * (4.0 * std::f64::consts::PI * t).ln()
        - r * r / (4.0 * t);
    Ok(ln_pref + integral.ln())
}

/// The heat kernel value `p(t, r)`.
pub fn heat_kernel(q: HeatKernelQuery) -> Result<f64> {
    Ok(ln_heat_kernel(q)?.exp())
}

/// `∫_ℍ p(t, ·) dvol = ∫_0^∞ p(t, r)·2π sinh r dr`, an independent radial
/// quadrature used as a normalization check.
pub fn kernel_normalization(t: f64) -> Result<f64> {
    let rmax = (3.0 * t + 30.0 * t.sqrt() + 10.0).min(200.0);
    let n = 4000; // Simpson panels (even count)
    let h = rmax / n as f64;
    let f = |r: f64| -> Result<f64> {
        if r == 0.0 {
            return Ok(0.0);
        }
        Ok(2.0 * std::f64::consts::PI * r.sinh() * heat_kernel(HeatKernelQuery { t, r })?)
    };
    let mut acc = f(0.0)? + f(rmax)?;
    for k in 1..n {
        acc += f(k as f64 * h)? * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    Ok(acc * h / 3.0)
}

/// Cumulative radial law `F(r) = ∫_0^r p(t, s)·2π sinh s ds` tabulated on a
/// uniform grid for interpolation (used for KS comparisons).
pub struct RadialCdf {
    pub t: f64,
    pub rmax: f64,
    pub values: Vec<f64>,
}

impl RadialCdf {
    pub fn build(t: f64, rmax: f64, n: usize) -> Result<Self> {
        let h = rmax / n as f64;
        let density = |r: f64| -> Result<f64> {
            if r == 0.0 {
                return Ok(0.0);
            }
            Ok(2.0 * std::f64::consts::PI * r.sinh() * heat_kernel(HeatKernelQuery { t, r })?)
        };
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        let mut acc = 0.0;
        let mut prev = density(0.0)?;
        for k in 1..=n {
            let cur = density(k as f64 * h)?;
            let mid = density((k as f64 - 0.5) * h)?;
            acc += h / 6.0 * (prev + 4.0 * mid + cur);
            values.push(acc);
            prev = cur;
        }
        Ok(Self { t, rmax, values })
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r >= self.rmax {
            return *self.values.last().unwrap();
        }
        let n = self.values.len() - 1;
        let pos = r / self.rmax * n as f64;
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

/// One-sample Kolmogorov–Smirnov distance between sorted samples and a CDF.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i as f64 + 1.0) / n - f).abs());
    }
    d
}

// ---------------------------------------------------------------------------
// Drift and Dynkin estimators
// ---------------------------------------------------------------------------

fn finish_report(
    quantity: &str,
    values: Vec<f64>,
    n: u64,
    horizon: f64,
    step: f64,
    seed: u64,
    started: Instant,
) -> EstimatorReport {
    let (value, std_error) = mean_and_std_error(&values);
    EstimatorReport {
        quantity: quantity.into(),
        value,
        std_error,
        n,
        horizon,
        step,
        seed,
        wall_time: started.elapsed().as_secs_f64(),
        warning: None,
    }
}

/// Mean of `d(start, γ(horizon))/horizon` over `n` paths; expected value 1.
pub fn drift_estimate(n: u64, horizon: f64, step: f64, seed: u64) -> Result<EstimatorReport> {
    drift_estimate_with_rate(n, horizon, step, seed, 1.0)
}

/// Drift estimator with a scaled generator (`rate = 1/2` checks the ½Δ
/// convention, which halves the drift).
pub fn drift_estimate_with_rate(
    n: u64,
    horizon: f64,
    step: f64,
    seed: u64,
    rate: f64,
) -> Result<EstimatorReport> {
    if n < 100 {
        return Err(Error::InvalidParameter(format!("drift estimator needs N ≥ 100, got {n}")));
    }
    let started = Instant::now();
    let start = HPoint::base_i();
    if horizon == 0.0 {
        // Degenerate request: raw distance at horizon 0 is identically 0.
        return Ok(finish_report("drift", vec![0.0; n as usize], n, horizon, step, seed, started));
    }
    validate_step_horizon(horizon, step)?;
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let path = simulate_path_with_rate(&start, horizon, step, seed, i, rate)
                .expect("validated parameters");
            let end = HPoint::half_plane(path.end()).expect("positive imaginary part");
            hyperbolic_distance(&start, &end) / horizon
        })
        .collect();
    Ok(finish_report("drift", values, n, horizon, step, seed, started))
}

/// Mean of `log φ(γ(t))/t` for the disc harmonic function
/// `φ(z) = (1 − |z|²)/|1 − z|²`; the Dynkin identity gives −1.
pub fn dynkin_check(t: f64, n: u64, seed: u64) -> Result<EstimatorReport> {
    if !(0.5..=20.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("dynkin time must lie in [0.5, 20], got {t}")));
    }
    let step = 0.01_f64.min(t / 200.0);
    let started = Instant::now();
    let start = HPoint::origin();
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let path =
                simulate_path(&start, t, step, seed, i).expect("validated parameters");
            let w = path.end();
            // log φ at the disc image of w, with both factors computed in
            // cancellation-free half-plane form:
            //   1 − |z|² = 4 Im w / |w + i|²,  |1 − z|² = 4/|w + i|².
            let i_unit = Complex64::new(0.0, 1.0);
            let one_minus_sq = 4.0 * w.im / (w + i_unit).norm_sqr();
            let denom = 4.0 / (w + i_unit).norm_sqr();
            (one_minus_sq.ln() - denom.ln()) / t
        })
        .collect();
    Ok(finish_report("dynkin", values, n, t, step, seed, started))
}

/// Circle average of `log φ(re^{iθ})`; equals `log(1 − r²)` exactly.
pub fn circle_mean_logphi(r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!("radius must lie in [0, 1), got {r}")));
    }
    let n = 8192;
    let mut acc = 0.0;
    for k in 0..n {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let z = Complex64::from_polar(r, theta);
        let phi = (1.0 - z.norm_sqr()) / (Complex64::new(1.0, 0.0) - z).norm_sqr();
        acc += phi.ln();
    }
    Ok(acc / n as f64)
}
