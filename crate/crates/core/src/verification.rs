//! End-to-end verification suite: each check pins a quantity the library
//! must reproduce (drift, Dynkin identity, kernel normalization, entropy,
//! Lyapunov exponent, dimension inequality, Jacobian scaling, geodesic
//! exactness, exact surface arithmetic, and cross-thread reproducibility)
//! and reports expected value, observed value, tolerance, and pass/fail.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::brownian::{
    drift_estimate, dynkin_check, kernel_normalization, ks_distance, simulate_path,
    RadialCdf,
};
use crate::dimension::{
    build_holonomy_ifs, box_counting, moran_bracket, verify_dimension_inequality,
    InequalityParams,
};
use crate::error::Result;
use crate::estimators::{kaimanovich_entropy, lyapunov_exponent};
use crate::hyperbolic::{hyperbolic_distance, BoundaryPoint, HPoint, MoebiusMap, P1Point};
use crate::surface::{
    double_cover_invariants, p2_lyapunov, DivisorClass, RuledSurfaceContext,
};
use crate::suspension::{
    flow_jacobian_check, lift_geodesic_trajectory, Letter, SuspensionFoliation,
};

/// One row of the verification table.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub tolerance: String,
    pub pass: bool,
}

impl CheckResult {
    fn new(
        name: impl Into<String>,
        expected: impl Into<String>,
        observed: impl Into<String>,
        tolerance: impl Into<String>,
        pass: bool,
    ) -> Self {
        Self {
            name: name.into(),
            expected: expected.into(),
            observed: observed.into(),
            tolerance: tolerance.into(),
            pass,
        }
    }
}

/// Brownian drift on the curvature −1 plane equals 1.
pub fn check_drift(seed: u64) -> Result<Vec<CheckResult>> {
    let r = drift_estimate(4096, 50.0, 0.01, seed)?;
    Ok(vec![CheckResult::new(
        "drift",
        "1",
        format!("{:.4} ± {:.4}", r.value, r.std_error),
        "value in [0.95, 1.05]",
        (0.95..=1.05).contains(&r.value),
    )])
}

/// Dynkin identity: `(1/t) E[log φ(γ(t))] = −1` for the Poisson kernel φ.
pub fn check_dynkin(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rows = Vec::new();
    for (k, t) in [1.0, 5.0, 10.0].into_iter().enumerate() {
        let r = dynkin_check(t, 10_000, seed + k as u64)?;
        let dev = (r.value + 1.0).abs();
        rows.push(CheckResult::new(
            format!("dynkin-t{t}"),
            "-1",
            format!("{:.4} ± {:.4}", r.value, r.std_error),
            "within 3 standard errors",
            dev <= 3.0 * r.std_error,
        ));
    }
    Ok(rows)
}

/// Heat-kernel normalization and the empirical radial law at t = 1.
pub fn check_heat_kernel(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rows = Vec::new();
    for t in [0.5, 1.0, 2.0] {
        let z = kernel_normalization(t)?;
        rows.push(CheckResult::new(
            format!("heat-kernel-mass-t{t}"),
            "1",
            format!("{z:.6}"),
            "1e-3",
            (z - 1.0).abs() < 1e-3,
        ));
    }
    let n = 100_000u64;
    let start = HPoint::base_i();
    let mut radii: Vec<f64> = (0..n)
        .map(|i| -> Result<f64> {
            let path = simulate_path(&start, 1.0, 0.01, seed, i)?;
            Ok(hyperbolic_distance(&start, &HPoint::half_plane(path.end())?))
        })
        .collect::<Result<Vec<f64>>>()?;
    radii.sort_by(f64::total_cmp);
    let cdf = RadialCdf::build(1.0, 15.0, 3000)?;
    let ks = ks_distance(&radii, |r| cdf.eval(r));
    rows.push(CheckResult::new(
        "heat-kernel-radial-ks",
        "0",
        format!("{ks:.4}"),
        "KS distance < 0.05",
        ks < 0.05,
    ));
    Ok(rows)
}

/// Kaimanovich entropy of the leafwise kernel equals 1.
pub fn check_entropy(seed: u64) -> Result<Vec<CheckResult>> {
    let f = SuspensionFoliation::fuchsian_boundary()?;
    let r = kaimanovich_entropy(&f, 50.0, 2048, 0.02, seed)?;
    Ok(vec![CheckResult::new(
        "entropy",
        "1",
        format!("{:.4} ± {:.4}", r.value, r.std_error),
        "value in [0.95, 1.05]",
        (0.95..=1.05).contains(&r.value),
    )])
}

/// Lyapunov exponent of the boundary-action suspension equals −1.
pub fn check_lyapunov(seed: u64) -> Result<Vec<CheckResult>> {
    let f = SuspensionFoliation::fuchsian_boundary()?;
    let r = lyapunov_exponent(&f, 50.0, 128, 0.02, seed)?;
    let in_window = (-1.05..=-0.95).contains(&r.value);
    Ok(vec![
        CheckResult::new(
            "lyapunov-fuchsian",
            "-1",
            format!("{:.4} ± {:.4}", r.value, r.std_error),
            "value in [-1.05, -0.95]",
            in_window,
        ),
        CheckResult::new(
            "lyapunov-upper-bound",
            "<= -0.95",
            format!("{:.4}", r.value),
            "one-sided",
            r.value <= -0.95,
        ),
    ])
}

/// Entropy/exponent/dimension inequality on both presets, plus the Moran
/// bracket cross-check on the verified holonomy IFS.
pub fn check_dimension_inequality(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rows = Vec::new();
    let fuchsian = SuspensionFoliation::fuchsian_boundary()?;
    let rf = verify_dimension_inequality(
        &fuchsian,
        InequalityParams { horizon: 30.0, n_paths: 128, step: 0.02, depth: 10, seed },
    )?;
    let near_equality = (rf.dimension - rf.ratio).abs() < 0.1 && (rf.dimension - 1.0).abs() < 0.1;
    rows.push(CheckResult::new(
        "dimension-fuchsian-near-equality",
        "d = h/|lambda| = 1",
        format!(
            "d = {:.3}, h/|lambda| = {:.3}/{:.3} = {:.3}",
            rf.dimension,
            rf.entropy,
            rf.lyapunov.abs(),
            rf.ratio
        ),
        "|d - h/|lambda|| < 0.1",
        near_equality,
    ));

    let schottky = SuspensionFoliation::schottky(4.0, 1.0)?;
    let rs = verify_dimension_inequality(
        &schottky,
        InequalityParams { horizon: 30.0, n_paths: 128, step: 0.02, depth: 10, seed: seed + 1 },
    )?;
    rows.push(CheckResult::new(
        "dimension-schottky-inequality",
        "d >= h/|lambda| - 0.1 with margin",
        format!(
            "d = {:.3}, h/|lambda| = {:.3}/{:.3} = {:.3}, margin = {:.3}",
            rs.dimension,
            rs.entropy,
            rs.lyapunov.abs(),
            rs.ratio,
            rs.margin
        ),
        "margin >= -0.1",
        rs.pass,
    ));

    // Moran bracket of the verified holonomy IFS contains the box-counting
    // estimate of its attractor.
    let a = Letter { gen: 0, inverse: false };
    let c = Letter { gen: 2, inverse: false };
    let ci = Letter { gen: 2, inverse: true };
    let ifs = build_holonomy_ifs(&schottky, 1.0, &[vec![a], vec![a, c], vec![a, ci]])?;
    let (lo, hi) = moran_bracket(&ifs)?;
    let mut pts = Vec::new();
    let mut stack = vec![(MoebiusMap::identity(), 0usize)];
    while let Some((m, d)) = stack.pop() {
        if d == 9 {
            pts.push(P1Point::finite(m.apply_complex(Complex64::new(0.0, 0.0))));
            continue;
        }
        for g in &ifs.maps {
            stack.push((m.compose(g), d + 1));
        }
    }
    let radii: Vec<f64> = (0..12).map(|k| 0.2 * 0.5f64.powi(k)).collect();
    let bc = box_counting(&pts, &radii)?;
    rows.push(CheckResult::new(
        "dimension-moran-bracket",
        format!("box estimate in [{lo:.3}, {hi:.3}]"),
        format!("{:.3}", bc.box_dimension),
        "bracket containment",
        bc.box_dimension >= lo - 1e-9 && bc.box_dimension <= hi + 1e-9,
    ));
    Ok(rows)
}

/// Jacobian of the vertical flow scales hyperbolic volume by e^t.
pub fn check_jacobian(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rows = Vec::new();
    for t in [0.5, 1.0, 2.0] {
        let r = flow_jacobian_check(t, 1_000_000, seed)?;
        rows.push(CheckResult::new(
            format!("jacobian-t{t}"),
            format!("{:.4}", r.expected),
            format!("{:.4}", r.observed),
            "relative error < 1%",
            r.rel_error < 0.01,
        ));
    }
    Ok(rows)
}

/// Lifted geodesic trajectories are exact unit-speed geodesics.
pub fn check_quasi_geodesic() -> Result<Vec<CheckResult>> {
    let f = SuspensionFoliation::fuchsian_boundary()?;
    let start = HPoint::disc(Complex64::new(0.1, -0.2))?;
    let direction = BoundaryPoint::disc(Complex64::from_polar(1.0, 0.7))?;
    let lift = lift_geodesic_trajectory(&f, &start, &direction, 20.0)?;
    Ok(vec![CheckResult::new(
        "quasi-geodesic-exactness",
        "0",
        format!("{:.2e}", lift.max_deviation),
        "max |d(a(s), a(t)) - |s - t|| < 1e-6",
        lift.max_deviation < 1e-6,
    )])
}

/// Exact intersection-theory identities on the ruled surface.
pub fn check_surface_exact() -> Result<Vec<CheckResult>> {
    let mut rows = Vec::new();
    let ctx = RuledSurfaceContext::new(2)?;
    rows.push(CheckResult::new(
        "surface-canonical-class",
        "(-2, 0)",
        format!("{:?}", ctx.canonical_class()),
        "exact",
        ctx.canonical_class() == DivisorClass::new(-2, 0),
    ));

    let mut all_ample = true;
    let mut identity_ok = true;
    for g in 2..=50 {
        let ctx = RuledSurfaceContext::new(g)?;
        let chi = ctx.chi;
        all_ample &= ctx.is_ample(DivisorClass::new(1, 2 * (1 - 2 * chi)));
        let e = DivisorClass::new(3, 2 * (1 - 2 * chi));
        match ctx.reider_very_ample_witness(e) {
            Ok(w) => {
                identity_ok &= w.identity_holds
                    && w.four_l_plus_k == DivisorClass::new(2 * e.a, 2 * e.b)
            }
            Err(_) => identity_ok = false,
        }
    }
    rows.push(CheckResult::new(
        "surface-ampleness-sweep",
        "E + K ample for genus 2..50",
        format!("{all_ample}"),
        "exact",
        all_ample,
    ));
    rows.push(CheckResult::new(
        "surface-very-ample-identity",
        "4L + K = 2E for genus 2..50",
        format!("{identity_ok}"),
        "exact",
        identity_ok,
    ));

    let inv2 = double_cover_invariants(&BigInt::from(2))?;
    rows.push(CheckResult::new(
        "surface-cover-ratio-g2",
        "1/6",
        format!("{}", inv2.ratio),
        "exact",
        inv2.ratio == BigRational::new(BigInt::from(1), BigInt::from(6)),
    ));
    let inv_big = double_cover_invariants(&BigInt::from(1_000_000u64))?;
    let gap = (BigRational::new(BigInt::from(1), BigInt::from(5)) - &inv_big.ratio)
        .to_f64()
        .unwrap_or(f64::NAN);
    rows.push(CheckResult::new(
        "surface-cover-ratio-limit",
        "1/5",
        format!("{}", inv_big.ratio),
        "within 1e-6 at genus 10^6",
        gap.abs() < 1e-6,
    ));

    let lam2 = p2_lyapunov(2)?;
    let lam5 = p2_lyapunov(5)?;
    rows.push(CheckResult::new(
        "surface-plane-lyapunov",
        "-4 and -7/4",
        format!("{lam2} and {lam5}"),
        "exact",
        lam2 == BigRational::from(BigInt::from(-4))
            && lam5 == BigRational::new(BigInt::from(-7), BigInt::from(4)),
    ));
    Ok(rows)
}

/// Identical bits from every thread-pool size.
pub fn check_reproducibility(seed: u64) -> Result<Vec<CheckResult>> {
    let run = || -> Result<(u64, u64)> {
        let d = drift_estimate(256, 10.0, 0.01, seed)?;
        let f = SuspensionFoliation::fuchsian_boundary()?;
        let l = lyapunov_exponent(&f, 10.0, 64, 0.02, seed)?;
        Ok((d.value.to_bits(), l.value.to_bits()))
    };
    let mut results = Vec::new();
    for threads in [1usize, 2, 4] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| crate::Error::Numerical(format!("thread pool: {e}")))?;
        results.push(pool.install(run)?);
    }
    let all_equal = results.windows(2).all(|w| w[0] == w[1]);
    Ok(vec![CheckResult::new(
        "reproducibility-across-threads",
        "identical bits for 1/2/4 threads",
        format!("{all_equal}"),
        "bitwise",
        all_equal,
    )])
}

/// Every check in the suite, in order, optionally filtered by substring.
/// Blocks whose name cannot match the filter are skipped entirely, so a
/// narrow filter runs quickly.
pub fn verify_suite(seed: u64, filter: Option<&str>) -> Result<Vec<CheckResult>> {
    type Block = (&'static str, Box<dyn Fn(u64) -> Result<Vec<CheckResult>>>);
    let blocks: Vec<Block> = vec![
        ("drift", Box::new(check_drift)),
        ("dynkin", Box::new(check_dynkin)),
        ("heat-kernel", Box::new(check_heat_kernel)),
        ("entropy", Box::new(check_entropy)),
        ("lyapunov", Box::new(check_lyapunov)),
        ("dimension", Box::new(check_dimension_inequality)),
        ("jacobian", Box::new(check_jacobian)),
        ("quasi-geodesic", Box::new(|_| check_quasi_geodesic())),
        ("surface", Box::new(|_| check_surface_exact())),
        ("reproducibility", Box::new(check_reproducibility)),
    ];
    let mut rows = Vec::new();
    for (name, block) in &blocks {
        let relevant = match filter {
            None => true,
            // Either the filter names this block (possibly a specific row
            // within it) or it is a broader substring of the block name.
            Some(f) => f.starts_with(name) || name.contains(f),
        };
        if relevant {
            rows.extend(block(seed)?);
        }
    }
    if let Some(f) = filter {
        rows.retain(|r| r.name.contains(f));
    }
    Ok(rows)
}
