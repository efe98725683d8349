//! Hyperbolic plane geometry in the disc and half-plane models.
//!
//! The metric convention is curvature −1: `ds² = 4|dz|²/(1−|z|²)²` on the
//! unit disc and `ds² = (dx² + dy²)/y²` on the upper half-plane. The two
//! models are exchanged by the Cayley transform `w ↦ (w − i)/(w + i)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Renormalize the determinant after this many compositions.
const RENORM_EVERY: u32 = 32;
/// A matrix with |det| below this is treated as non-invertible.
const DEGENERATE_DET: f64 = 1e-14;
/// Slack allowed when projecting a boundary point onto the unit circle.
const BOUNDARY_SLACK: f64 = 0.5;

/// Which conformal model a point lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Disc,
    HalfPlane,
}

/// A point of the hyperbolic plane in one of the two standard models.
#[derive(Clone, Copy, Debug)]
pub struct HPoint {
    model: Model,
    coord: Complex64,
}

impl HPoint {
    /// Point of the unit disc; requires `|z| < 1`.
    pub fn disc(z: Complex64) -> Result<Self> {
        if !z.re.is_finite() || !z.im.is_finite() || z.norm() >= 1.0 {
            return Err(Error::InvalidPoint(format!("disc point with |z| = {}", z.norm())));
        }
        Ok(Self { model: Model::Disc, coord: z })
    }

    /// Point of the upper half-plane; requires `Im z > 0`.
    pub fn half_plane(z: Complex64) -> Result<Self> {
        if !z.re.is_finite() || !z.im.is_finite() || z.im <= 0.0 {
            return Err(Error::InvalidPoint(format!("half-plane point with Im z = {}", z.im)));
        }
        Ok(Self { model: Model::HalfPlane, coord: z })
    }

    /// The disc origin.
    pub fn origin() -> Self {
        Self { model: Model::Disc, coord: Complex64::new(0.0, 0.0) }
    }

    /// The half-plane base point `i`.
    pub fn base_i() -> Self {
        Self { model: Model::HalfPlane, coord: Complex64::new(0.0, 1.0) }
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn coord(&self) -> Complex64 {
        self.coord
    }

    /// Coordinate of this point in the disc model.
    pub fn disc_coord(&self) -> Complex64 {
        match self.model {
            Model::Disc => self.coord,
            Model::HalfPlane => half_to_disc(self.coord),
        }
    }

    /// Coordinate of this point in the half-plane model.
    pub fn half_plane_coord(&self) -> Complex64 {
        match self.model {
            Model::Disc => disc_to_half(self.coord),
            Model::HalfPlane => self.coord,
        }
    }

    pub fn to_disc(&self) -> Self {
        Self { model: Model::Disc, coord: self.disc_coord() }
    }

    pub fn to_half_plane(&self) -> Self {
        Self { model: Model::HalfPlane, coord: self.half_plane_coord() }
    }
}

/// A point of the ideal boundary (unit circle, or `ℝ ∪ {∞}` for the half-plane).
#[derive(Clone, Copy, Debug)]
pub enum BoundaryPoint {
    /// Unit-modulus complex number on the boundary of the disc.
    Disc(Complex64),
    /// Finite real boundary point of the half-plane.
    Half(f64),
    /// The point at infinity of the half-plane.
    HalfInfinity,
}

impl BoundaryPoint {
    /// Boundary point of the disc; the input is projected onto the unit
    /// circle and rejected if it is far from it.
    pub fn disc(z: Complex64) -> Result<Self> {
        let n = z.norm();
        if !n.is_finite() || (n - 1.0).abs() > BOUNDARY_SLACK {
            return Err(Error::InvalidBoundary(n));
        }
        Ok(Self::Disc(z / n))
    }

    pub fn half(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::InvalidBoundary(f64::INFINITY));
        }
        Ok(Self::Half(x))
    }

    /// This boundary point in the disc model.
    pub fn disc_coord(&self) -> Complex64 {
        match *self {
            Self::Disc(z) => z,
            Self::Half(x) => {
                // (x − i)/(x + i) has modulus 1 for real x.
                let w = Complex64::new(x, 0.0);
                let i = Complex64::new(0.0, 1.0);
                (w - i) / (w + i)
            }
            Self::HalfInfinity => Complex64::new(1.0, 0.0),
        }
    }

    /// This boundary point in the half-plane model (`None` means ∞).
    pub fn half_coord(&self) -> Option<f64> {
        match *self {
            Self::Disc(z) => {
                let one = Complex64::new(1.0, 0.0);
                if (z - one).norm() < 1e-14 {
                    None
                } else {
                    let i = Complex64::new(0.0, 1.0);
                    Some((i * (one + z) / (one - z)).re)
                }
            }
            Self::Half(x) => Some(x),
            Self::HalfInfinity => None,
        }
    }

    pub fn to_disc(&self) -> Self {
        Self::Disc(self.disc_coord())
    }

    pub fn to_half(&self) -> Self {
        match self.half_coord() {
            Some(x) => Self::Half(x),
            None => Self::HalfInfinity,
        }
    }
}

/// Disc coordinate of a half-plane point: `(w − i)/(w + i)`.
pub fn half_to_disc(w: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    (w - i) / (w + i)
}

/// Half-plane coordinate of a disc point: `i(1 + z)/(1 − z)`.
pub fn disc_to_half(z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    i * (one + z) / (one - z)
}

/// Cayley transform: maps a point to the opposite model.
pub fn cayley(p: HPoint) -> HPoint {
    match p.model() {
        Model::Disc => p.to_half_plane(),
        Model::HalfPlane => p.to_disc(),
    }
}

/// `1 − |C(w)|²` for a half-plane point `w`, computed without cancellation.
///
/// Equals `4 Im w / |w + i|²`, which stays accurate when the disc image is
/// exponentially close to the boundary.
pub fn one_minus_sq_disc_norm(w: Complex64) -> f64 {
    let i = Complex64::new(0.0, 1.0);
    4.0 * w.im / (w + i).norm_sqr()
}

/// A point of the Riemann sphere P¹.
#[derive(Clone, Copy, Debug)]
pub enum P1Point {
    Finite(Complex64),
    Infinity,
}

impl P1Point {
    pub fn finite(z: Complex64) -> Self {
        Self::Finite(z)
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Self::Infinity)
    }

    /// Affine coordinate, if finite.
    pub fn coord(&self) -> Option<Complex64> {
        match *self {
            Self::Finite(z) => Some(z),
            Self::Infinity => None,
        }
    }

    /// Chordal distance on the round sphere (diameter 2 normalization).
    pub fn chordal_distance(&self, other: &Self) -> f64 {
        match (self, other) {
            (Self::Finite(a), Self::Finite(b)) => {
                2.0 * (a - b).norm()
                    / ((1.0 + a.norm_sqr()).sqrt() * (1.0 + b.norm_sqr()).sqrt())
            }
            (Self::Finite(a), Self::Infinity) | (Self::Infinity, Self::Finite(a)) => {
                2.0 / (1.0 + a.norm_sqr()).sqrt()
            }
            (Self::Infinity, Self::Infinity) => 0.0,
        }
    }
}

impl From<BoundaryPoint> for P1Point {
    fn from(b: BoundaryPoint) -> Self {
        match b {
            BoundaryPoint::Disc(z) => Self::Finite(z),
            BoundaryPoint::Half(x) => Self::Finite(Complex64::new(x, 0.0)),
            BoundaryPoint::HalfInfinity => Self::Infinity,
        }
    }
}

/// A Moebius transformation `z ↦ (az + b)/(cz + d)`, stored as a 2×2
/// complex matrix normalized to determinant 1 (up to overall sign).
#[derive(Clone, Copy, Debug)]
pub struct MoebiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    /// Compositions since the last renormalization.
    comps: u32,
}

impl MoebiusMap {
    /// Build from matrix entries, normalizing the determinant to 1.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() < DEGENERATE_DET {
            return Err(Error::DegenerateMap { det: det.norm() });
        }
        let s = det.sqrt();
        Ok(Self { a: a / s, b: b / s, c: c / s, d: d / s, comps: 0 })
    }

    pub fn identity() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
            comps: 0,
        }
    }

    /// Build from real entries (an isometry of the half-plane when det > 0).
    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::new(
            Complex64::new(a, 0.0),
            Complex64::new(b, 0.0),
            Complex64::new(c, 0.0),
            Complex64::new(d, 0.0),
        )
    }

    /// Disc isometry moving `p` (|p| < 1) to the origin.
    pub fn disc_translation_to_zero(p: Complex64) -> Result<Self> {
        if p.norm() >= 1.0 {
            return Err(Error::InvalidPoint("translation center outside disc".into()));
        }
        let s = 1.0 / (1.0 - p.norm_sqr()).sqrt();
        Self::new(
            Complex64::new(s, 0.0),
            -p * s,
            -p.conj() * s,
            Complex64::new(s, 0.0),
        )
    }

    /// Rotation of the disc about the origin by angle `phi`.
    pub fn rotation(phi: f64) -> Self {
        let h = Complex64::from_polar(1.0, phi / 2.0);
        Self { a: h, b: Complex64::new(0.0, 0.0), c: Complex64::new(0.0, 0.0), d: h.conj(), comps: 0 }
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    /// Matrix product `self ∘ rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &Self) -> Self {
        let mut m = Self {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
            comps: self.comps + rhs.comps + 1,
        };
        if m.comps >= RENORM_EVERY {
            let s = m.det().sqrt();
            m.a /= s;
            m.b /= s;
            m.c /= s;
            m.d /= s;
            m.comps = 0;
        }
        m
    }

    /// Inverse map (adjugate; exact for det = 1 up to sign).
    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a, comps: self.comps }
    }

    /// Whether all entries are real within `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        self.a.im.abs() < tol && self.b.im.abs() < tol && self.c.im.abs() < tol && self.d.im.abs() < tol
    }

    /// Whether the matrix has the `[[α, β], [β̄, ᾱ]]` shape of a disc isometry.
    pub fn is_disc_isometry(&self, tol: f64) -> bool {
        (self.a - self.d.conj()).norm() < tol && (self.b - self.c.conj()).norm() < tol
    }

    /// Apply to an affine complex coordinate. The caller is responsible for
    /// keeping away from the pole; see [`MoebiusMap::apply_p1`] otherwise.
    pub fn apply_complex(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// Apply as a map of the Riemann sphere, with pole handling.
    pub fn apply_p1(&self, p: P1Point) -> P1Point {
        match p {
            P1Point::Finite(z) => {
                let num = self.a * z + self.b;
                let den = self.c * z + self.d;
                // Relative test: den tiny compared to num means we hit the pole.
                if den.norm() <= 1e-300 || den.norm() < 1e-15 * num.norm() {
                    P1Point::Infinity
                } else {
                    P1Point::Finite(num / den)
                }
            }
            P1Point::Infinity => {
                if self.c.norm() <= 1e-15 * self.a.norm() {
                    P1Point::Infinity
                } else {
                    P1Point::Finite(self.a / self.c)
                }
            }
        }
    }

    /// Apply to a hyperbolic point, staying in its model.
    ///
    /// Half-plane points require real entries; disc points require the
    /// `su(1,1)` matrix shape. Anything else is not an isometry of that model.
    pub fn apply(&self, p: &HPoint) -> Result<HPoint> {
        match p.model() {
            Model::HalfPlane => {
                if !self.is_real(1e-9) {
                    return Err(Error::NotAnIsometry(
                        "half-plane action needs real entries".into(),
                    ));
                }
                HPoint::half_plane(self.apply_complex(p.coord()))
            }
            Model::Disc => {
                if !self.is_disc_isometry(1e-9) {
                    return Err(Error::NotAnIsometry(
                        "disc action needs an su(1,1)-shaped matrix".into(),
                    ));
                }
                HPoint::disc(self.apply_complex(p.coord()))
            }
        }
    }

    /// Apply to an ideal boundary point, staying in its model.
    pub fn apply_boundary(&self, b: &BoundaryPoint) -> Result<BoundaryPoint> {
        match *b {
            BoundaryPoint::Disc(z) => {
                if !self.is_disc_isometry(1e-9) {
                    return Err(Error::NotAnIsometry(
                        "disc action needs an su(1,1)-shaped matrix".into(),
                    ));
                }
                BoundaryPoint::disc(self.apply_complex(z))
            }
            BoundaryPoint::Half(_) | BoundaryPoint::HalfInfinity => {
                if !self.is_real(1e-9) {
                    return Err(Error::NotAnIsometry(
                        "half-plane action needs real entries".into(),
                    ));
                }
                let img = self.apply_p1(P1Point::from(*b));
                match img {
                    P1Point::Finite(z) => BoundaryPoint::half(z.re),
                    P1Point::Infinity => Ok(BoundaryPoint::HalfInfinity),
                }
            }
        }
    }

    /// Derivative magnitude in the round metric on P¹.
    ///
    /// For det = 1 this is `(1 + |z|²)/(|az + b|² + |cz + d|²)`, a pole-free
    /// expression; at `z = ∞` it degenerates to `1/(|a|² + |c|²)`. The chain
    /// rule holds exactly: it is multiplicative under composition.
    pub fn spherical_derivative(&self, p: P1Point) -> f64 {
        let dn = self.det().norm();
        match p {
            P1Point::Finite(z) => {
                let num = self.a * z + self.b;
                let den = self.c * z + self.d;
                dn * (1.0 + z.norm_sqr()) / (num.norm_sqr() + den.norm_sqr())
            }
            P1Point::Infinity => dn / (self.a.norm_sqr() + self.c.norm_sqr()),
        }
    }

    /// Conjugate a disc-model isometry into its half-plane matrix
    /// (real entries) and vice versa.
    pub fn conjugate_by_cayley(&self, to: Model) -> Self {
        // K = [[1, -i], [1, i]] / sqrt(2i) sends half-plane coords to disc coords.
        let i = Complex64::new(0.0, 1.0);
        let s = (2.0 * i).sqrt();
        let k = Self {
            a: Complex64::new(1.0, 0.0) / s,
            b: -i / s,
            c: Complex64::new(1.0, 0.0) / s,
            d: i / s,
            comps: 0,
        };
        match to {
            // m acts on disc coords; K⁻¹ m K acts on half-plane coords.
            Model::HalfPlane => k.inverse().compose(self).compose(&k),
            Model::Disc => k.compose(self).compose(&k.inverse()),
        }
    }
}

/// Hyperbolic distance between two points, in any mix of models.
pub fn hyperbolic_distance(x: &HPoint, y: &HPoint) -> f64 {
    let u = x.half_plane_coord();
    let v = y.half_plane_coord();
    let arg = 1.0 + (u - v).norm_sqr() / (2.0 * u.im * v.im);
    arg.max(1.0).acosh()
}

/// `cosh` of the distance, cheap form used in tight reduction loops.
pub fn cosh_distance_disc(z: Complex64, w: Complex64) -> f64 {
    1.0 + 2.0 * (z - w).norm_sqr() / ((1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr()))
}

/// Poisson kernel `P(ξ, z)` of the model containing `ξ`.
fn poisson_kernel(xi: &BoundaryPoint, z: Complex64) -> f64 {
    match *xi {
        BoundaryPoint::Disc(b) => (1.0 - z.norm_sqr()) / (b - z).norm_sqr(),
        BoundaryPoint::Half(x) => z.im / (z - Complex64::new(x, 0.0)).norm_sqr(),
        BoundaryPoint::HalfInfinity => z.im,
    }
}

/// Busemann cocycle `B_ξ(x, y) = log P(ξ, y) − log P(ξ, x)`.
///
/// Positive when `y` is closer to `ξ` than `x`; for `ξ = ∞` in the
/// half-plane this is `log(Im y / Im x)`.
pub fn busemann(xi: &BoundaryPoint, x: &HPoint, y: &HPoint) -> f64 {
    let (zx, zy) = match *xi {
        BoundaryPoint::Disc(_) => (x.disc_coord(), y.disc_coord()),
        _ => (x.half_plane_coord(), y.half_plane_coord()),
    };
    (poisson_kernel(xi, zy) / poisson_kernel(xi, zx)).ln()
}

/// Unit-speed geodesic ray from a start point toward a boundary point.
#[derive(Clone, Debug)]
pub struct GeodesicRay {
    start: HPoint,
    endpoint: BoundaryPoint,
    /// Real map sending the ray onto a vertical line, endpoint ↦ ∞.
    normalizer: MoebiusMap,
    /// Image of the start under the normalizer (a vertical ray ascends from it).
    x0: f64,
    y0: f64,
}

impl GeodesicRay {
    pub fn new(start: HPoint, endpoint: BoundaryPoint) -> Result<Self> {
        let w0 = start.half_plane_coord();
        let normalizer = match endpoint.to_half() {
            BoundaryPoint::HalfInfinity => MoebiusMap::identity(),
            BoundaryPoint::Half(xi) => {
                if (w0 - Complex64::new(xi, 0.0)).norm() < 1e-12 {
                    return Err(Error::InvalidPoint("start coincides with the endpoint".into()));
                }
                // The geodesic through w0 ending at xi is a half-circle with a
                // second real endpoint eta (or a vertical line if Re w0 = xi).
                if (w0.re - xi).abs() < 1e-14 {
                    // Vertical line: invert it to a vertical line through 0 ↦ ∞.
                    MoebiusMap::from_real(0.0, 1.0, 1.0, -xi)?
                } else {
                    let center = (w0.norm_sqr() - xi * xi) / (2.0 * (w0.re - xi));
                    let eta = 2.0 * center - xi;
                    if xi > eta {
                        MoebiusMap::from_real(1.0, -eta, -1.0, xi)?
                    } else {
                        MoebiusMap::from_real(1.0, -eta, 1.0, -xi)?
                    }
                }
            }
            BoundaryPoint::Disc(_) => unreachable!("to_half is half-plane"),
        };
        let img = normalizer.apply_complex(w0);
        if img.im <= 0.0 {
            return Err(Error::Numerical("geodesic normalizer left the half-plane".into()));
        }
        Ok(Self { start, endpoint, normalizer, x0: img.re, y0: img.im })
    }

    pub fn start(&self) -> HPoint {
        self.start
    }

    pub fn endpoint(&self) -> BoundaryPoint {
        self.endpoint
    }

    /// Point at arc-length `t` along the ray (negative `t` runs backwards).
    pub fn point_at(&self, t: f64) -> HPoint {
        let on_axis = Complex64::new(self.x0, self.y0 * t.exp());
        let w = self.normalizer.inverse().apply_complex(on_axis);
        HPoint { model: Model::HalfPlane, coord: w }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_real_isometry(rng: &mut StdRng) -> MoebiusMap {
        loop {
            let a = rng.gen_range(-2.0..2.0);
            let b = rng.gen_range(-2.0..2.0);
            let cc = rng.gen_range(-2.0..2.0);
            let d = rng.gen_range(-2.0..2.0);
            if (a * d - b * cc) > 0.1 {
                return MoebiusMap::from_real(a, b, cc, d).unwrap();
            }
        }
    }

    fn random_half_point(rng: &mut StdRng) -> HPoint {
        HPoint::half_plane(c(rng.gen_range(-3.0..3.0), rng.gen_range(0.05..4.0))).unwrap()
    }

    #[test]
    fn mobius_apply_basics() {
        let id = MoebiusMap::identity();
        let i = HPoint::half_plane(c(0.0, 1.0)).unwrap();
        assert!((id.apply(&i).unwrap().coord() - c(0.0, 1.0)).norm() < 1e-15);

        let tr = MoebiusMap::from_real(1.0, 1.0, 0.0, 1.0).unwrap();
        assert!((tr.apply(&i).unwrap().coord() - c(1.0, 1.0)).norm() < 1e-15);

        let inv = MoebiusMap::from_real(0.0, -1.0, 1.0, 0.0).unwrap();
        let two_i = HPoint::half_plane(c(0.0, 2.0)).unwrap();
        assert!((inv.apply(&two_i).unwrap().coord() - c(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn degenerate_matrix_rejected() {
        let r = MoebiusMap::new(c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0));
        assert!(matches!(r, Err(Error::DegenerateMap { .. })));
    }

    #[test]
    fn spherical_derivative_identity_and_diagonal() {
        let id = MoebiusMap::identity();
        for z in [c(0.0, 0.0), c(1.0, 2.0), c(-3.0, 0.5)] {
            assert!((id.spherical_derivative(P1Point::finite(z)) - 1.0).abs() < 1e-12);
        }
        assert!((id.spherical_derivative(P1Point::Infinity) - 1.0).abs() < 1e-12);

        // g = diag(2, 1/2) acts as z ↦ 4z; at the origin both chart factors are
        // trivial, so the round-metric derivative equals |g′(0)| = 4.
        // Frozen against the finite-difference oracle below.
        let g = MoebiusMap::new(c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)).unwrap();
        assert!((g.spherical_derivative(P1Point::finite(c(0.0, 0.0))) - 4.0).abs() < 1e-12);
    }

    /// Finite-difference oracle: the round-metric derivative is the limit of
    /// chordal-distance ratios.
    fn fd_spherical_derivative(g: &MoebiusMap, z: Complex64) -> f64 {
        let h = 1e-6;
        let p = P1Point::finite(z);
        let q = P1Point::finite(z + c(h, 0.0));
        g.apply_p1(p).chordal_distance(&g.apply_p1(q)) / p.chordal_distance(&q)
    }

    #[test]
    fn spherical_derivative_matches_finite_difference() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..200 {
            let g = random_real_isometry(&mut rng);
            let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let exact = g.spherical_derivative(P1Point::finite(z));
            let fd = fd_spherical_derivative(&g, z);
            assert!(
                (exact - fd).abs() < 1e-4 * exact.max(1.0),
                "deriv mismatch: exact {exact}, fd {fd}"
            );
        }
        // The diag(2, 1/2) example against the oracle.
        let g = MoebiusMap::new(c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)).unwrap();
        assert!((fd_spherical_derivative(&g, c(0.0, 0.0)) - 4.0).abs() < 1e-4);
    }

    #[test]
    fn rotation_is_round_isometry_on_circle() {
        let g = MoebiusMap::rotation(0.7);
        for k in 0..8 {
            let z = Complex64::from_polar(1.0, k as f64);
            let d = g.spherical_derivative(P1Point::finite(z));
            assert!((d - 1.0).abs() < 1e-12);
            assert!((fd_spherical_derivative(&g, z) - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn chain_rule_multiplicative() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..300 {
            let g = random_real_isometry(&mut rng);
            let h = random_real_isometry(&mut rng);
            let z = P1Point::finite(c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)));
            let lhs = g.compose(&h).spherical_derivative(z);
            let rhs = g.spherical_derivative(h.apply_p1(z)) * h.spherical_derivative(z);
            assert!((lhs - rhs).abs() < 1e-8 * lhs.max(1.0));
        }
    }

    #[test]
    fn distance_examples() {
        let x = HPoint::base_i();
        assert_eq!(hyperbolic_distance(&x, &x), 0.0);

        // Vertical segment i to e·i has length 1.
        let y = HPoint::half_plane(c(0.0, std::f64::consts::E)).unwrap();
        assert!((hyperbolic_distance(&x, &y) - 1.0).abs() < 1e-12);

        // Disc radial distance 0 to r is 2 artanh r; quadrature oracle for the
        // density 2/(1 − r²) (Simpson).
        let r = 0.62;
        let o = HPoint::origin();
        let p = HPoint::disc(c(r, 0.0)).unwrap();
        let exact = hyperbolic_distance(&o, &p);
        assert!((exact - 2.0 * r.atanh()).abs() < 1e-12);
        let n = 4000;
        let h = r / n as f64;
        let f = |s: f64| 2.0 / (1.0 - s * s);
        let mut quad = f(0.0) + f(r);
        for k in 1..n {
            quad += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        quad *= h / 3.0;
        assert!((exact - quad).abs() < 1e-9);
    }

    #[test]
    fn distance_isometry_invariance() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..1000 {
            let g = random_real_isometry(&mut rng);
            let x = random_half_point(&mut rng);
            let y = random_half_point(&mut rng);
            let d0 = hyperbolic_distance(&x, &y);
            let d1 = hyperbolic_distance(&g.apply(&x).unwrap(), &g.apply(&y).unwrap());
            assert!((d0 - d1).abs() < 1e-9, "isometry broke distance: {d0} vs {d1}");
        }
    }

    #[test]
    fn distance_triangle_and_symmetry() {
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..500 {
            let x = random_half_point(&mut rng);
            let y = random_half_point(&mut rng);
            let z = random_half_point(&mut rng);
            let dxy = hyperbolic_distance(&x, &y);
            assert!((dxy - hyperbolic_distance(&y, &x)).abs() < 1e-12);
            assert!(dxy <= hyperbolic_distance(&x, &z) + hyperbolic_distance(&z, &y) + 1e-10);
        }
    }

    #[test]
    fn cayley_round_trip_and_isometry() {
        let i = HPoint::base_i();
        assert!(cayley(i).coord().norm() < 1e-15);
        let o = HPoint::origin();
        assert!((cayley(o).coord() - c(0.0, 1.0)).norm() < 1e-15);

        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..500 {
            let x = random_half_point(&mut rng);
            let y = random_half_point(&mut rng);
            let back = cayley(cayley(x));
            assert!((back.coord() - x.coord()).norm() < 1e-12);
            let d0 = hyperbolic_distance(&x, &y);
            let d1 = hyperbolic_distance(&cayley(x), &cayley(y));
            assert!((d0 - d1).abs() < 1e-10);
        }
    }

    #[test]
    fn busemann_examples() {
        let xi = BoundaryPoint::HalfInfinity;
        let x = HPoint::base_i();
        assert_eq!(busemann(&xi, &x, &x), 0.0);
        let y = HPoint::half_plane(c(0.0, std::f64::consts::E)).unwrap();
        assert!((busemann(&xi, &x, &y) - 1.0).abs() < 1e-12);

        // Disc model with ξ = 1 measured from the origin: B = log φ(y) with
        // φ(z) = (1 − |z|²)/|1 − z|².
        let xi1 = BoundaryPoint::disc(c(1.0, 0.0)).unwrap();
        let o = HPoint::origin();
        let z = c(0.3, -0.4);
        let p = HPoint::disc(z).unwrap();
        let phi = (1.0 - z.norm_sqr()) / (c(1.0, 0.0) - z).norm_sqr();
        assert!((busemann(&xi1, &o, &p) - phi.ln()).abs() < 1e-12);
    }

    #[test]
    fn busemann_cocycle_identity() {
        let mut rng = StdRng::seed_from_u64(47);
        for _ in 0..500 {
            let xi = if rng.gen_bool(0.5) {
                BoundaryPoint::disc(Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))).unwrap()
            } else {
                BoundaryPoint::half(rng.gen_range(-3.0..3.0)).unwrap()
            };
            let x = random_half_point(&mut rng);
            let y = random_half_point(&mut rng);
            let z = random_half_point(&mut rng);
            let lhs = busemann(&xi, &x, &y) + busemann(&xi, &y, &z);
            let rhs = busemann(&xi, &x, &z);
            assert!((lhs - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn geodesic_ray_unit_speed() {
        let mut rng = StdRng::seed_from_u64(53);
        for _ in 0..50 {
            let start = random_half_point(&mut rng);
            let endpoint = if rng.gen_bool(0.3) {
                BoundaryPoint::HalfInfinity
            } else {
                BoundaryPoint::half(rng.gen_range(-4.0..4.0)).unwrap()
            };
            let ray = GeodesicRay::new(start, endpoint).unwrap();
            let err0 = (ray.point_at(0.0).coord() - start.half_plane_coord()).norm();
            assert!(err0 < 1e-9, "round trip error {err0:.3e} start {start:?} end {endpoint:?}");
            for _ in 0..20 {
                let s = rng.gen_range(0.0..10.0);
                let t = rng.gen_range(0.0..10.0);
                let d = hyperbolic_distance(&ray.point_at(s), &ray.point_at(t));
                assert!((d - (s - t).abs()).abs() < 1e-9, "not unit speed: {d} vs {}", (s - t).abs());
            }
            // The ray converges to its endpoint.
            let far = ray.point_at(30.0);
            let target = P1Point::from(endpoint.to_half());
            let got = P1Point::finite(far.half_plane_coord());
            assert!(got.chordal_distance(&target) < 1e-3);
        }
    }

    #[test]
    fn boundary_projection_and_conversion() {
        let b = BoundaryPoint::disc(c(0.6, 0.9)).unwrap();
        assert!((b.disc_coord().norm() - 1.0).abs() < 1e-12);
        assert!(BoundaryPoint::disc(c(0.1, 0.1)).is_err());

        // Half ↦ disc ↦ half round trip.
        let x = 1.7;
        let h = BoundaryPoint::half(x).unwrap();
        let back = h.to_disc().to_half();
        assert!((back.half_coord().unwrap() - x).abs() < 1e-10);
        assert!(BoundaryPoint::HalfInfinity.to_disc().to_half().half_coord().is_none());
    }

    #[test]
    fn cayley_conjugation_of_matrices() {
        // A disc rotation becomes a real half-plane matrix fixing i.
        let rot = MoebiusMap::rotation(1.1);
        let half = rot.conjugate_by_cayley(Model::HalfPlane);
        assert!(half.is_real(1e-10));
        assert!((half.apply_complex(c(0.0, 1.0)) - c(0.0, 1.0)).norm() < 1e-12);
        // Round trip.
        let back = half.conjugate_by_cayley(Model::Disc);
        let z = c(0.3, 0.2);
        assert!((back.apply_complex(z) - rot.apply_complex(z)).norm() < 1e-12);
    }

    #[test]
    fn renormalization_keeps_det_near_one() {
        // Near-identity factors so entry growth stays diffusive; the point is
        // that periodic renormalization holds the determinant at 1 over long
        // products.
        let mut rng = StdRng::seed_from_u64(61);
        let mut m = MoebiusMap::identity();
        for _ in 0..1000 {
            let mut e = || rng_small(&mut rng);
            let g = MoebiusMap::from_real(1.0 + e(), e(), e(), 1.0 + e()).unwrap();
            m = m.compose(&g);
        }
        assert!((m.det().norm() - 1.0).abs() < 1e-10);
    }

    fn rng_small(rng: &mut StdRng) -> f64 {
        rng.gen_range(-0.05..0.05)
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn entry() -> impl Strategy<Value = Complex64> {
        (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| Complex64::new(re, im))
    }

    fn moebius() -> impl Strategy<Value = MoebiusMap> {
        (entry(), entry(), entry(), entry())
            .prop_filter_map("degenerate matrix", |(a, b, c, d)| {
                MoebiusMap::new(a, b, c, d).ok().filter(|m| m.det().norm() > 0.1)
            })
    }

    fn disc_point() -> impl Strategy<Value = Complex64> {
        (0.0..0.95f64, 0.0..std::f64::consts::TAU)
            .prop_map(|(r, phi)| Complex64::from_polar(r, phi))
    }

    proptest! {
        #[test]
        fn composition_agrees_with_function_composition(
            m1 in moebius(), m2 in moebius(), z in entry()
        ) {
            let p = P1Point::finite(z);
            let lhs = m1.compose(&m2).apply_p1(p);
            let rhs = m1.apply_p1(m2.apply_p1(p));
            prop_assert!(lhs.chordal_distance(&rhs) < 1e-8);
        }

        #[test]
        fn spherical_derivative_chain_rule(
            m1 in moebius(), m2 in moebius(), z in entry()
        ) {
            let p = P1Point::finite(z);
            let lhs = m1.compose(&m2).spherical_derivative(p);
            let rhs = m1.spherical_derivative(m2.apply_p1(p)) * m2.spherical_derivative(p);
            prop_assert!((lhs - rhs).abs() <= 1e-6 * lhs.abs().max(rhs.abs()).max(1e-12));
        }

        #[test]
        fn inverse_undoes_a_map(m in moebius(), z in entry()) {
            let p = P1Point::finite(z);
            let back = m.inverse().apply_p1(m.apply_p1(p));
            prop_assert!(back.chordal_distance(&p) < 1e-8);
        }

        #[test]
        fn disc_translations_are_isometries(
            q in disc_point(), z in disc_point(), w in disc_point()
        ) {
            let m = MoebiusMap::disc_translation_to_zero(q).unwrap();
            let x = HPoint::disc(z).unwrap();
            let y = HPoint::disc(w).unwrap();
            let d0 = hyperbolic_distance(&x, &y);
            let d1 = hyperbolic_distance(&m.apply(&x).unwrap(), &m.apply(&y).unwrap());
            prop_assert!((d0 - d1).abs() < 1e-9 * (1.0 + d0));
        }

        #[test]
        fn model_maps_are_mutually_inverse(w in disc_point()) {
            let upper = Complex64::new(w.re, w.im.abs() + 0.05);
            let round = disc_to_half(half_to_disc(upper));
            prop_assert!((round - upper).norm() < 1e-10 * (1.0 + upper.norm()));
        }
    }
}
