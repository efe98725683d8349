//! Flat P¹-bundle laminations over a compact genus-2 hyperbolic surface.
//!
//! The base surface is the quotient of the disc by the Fuchsian group of the
//! regular hyperbolic octagon (all vertex angles π/4). A fiber representation
//! sends the four surface-group generators to Moebius maps of P¹; the
//! suspension glues `𝔻 × P¹` along the diagonal action. Holonomy along a
//! Brownian path is tracked by replaying the path's increments in the frame
//! of the fundamental domain, which keeps every coordinate well conditioned
//! at arbitrary horizons.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::brownian::{path_rng, BrownianPath, Increment};
use crate::error::{Error, Result};
use crate::hyperbolic::{
    cosh_distance_disc, half_to_disc, hyperbolic_distance, BoundaryPoint, GeodesicRay, HPoint,
    Model, MoebiusMap, P1Point,
};

/// Number of octagon sides.
const SIDES: usize = 8;
/// Strict-descent slack for the greedy reduction, on cosh of the distance.
const REDUCTION_SLACK: f64 = 1e-12;
/// Iteration cap for fundamental-domain reduction.
const REDUCTION_CAP: usize = 10_000;

/// A generator letter: index into `(a₁, b₁, a₂, b₂)` plus an inversion flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Letter {
    pub gen: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn inverted(self) -> Self {
        Self { gen: self.gen, inverse: !self.inverse }
    }
}

/// A word in the surface group, leftmost letter applied last.
pub type Word = Vec<Letter>;

/// One geodesic side of the fundamental octagon.
#[derive(Clone, Debug)]
pub struct Side {
    /// Disc coordinates of the side's endpoints (counterclockwise order).
    pub start: Complex64,
    pub end: Complex64,
    /// Index of the side this one is glued to.
    pub paired_with: usize,
    /// The generator letter labelling this side.
    pub letter: Letter,
}

/// Cocompact Fuchsian group of a genus-2 surface with its regular-octagon
/// fundamental domain.
#[derive(Clone, Debug)]
pub struct SurfaceGroup {
    /// Generators `(a₁, b₁, a₂, b₂)` as real half-plane matrices.
    pub generators: [MoebiusMap; 4],
    /// The same generators acting on the disc model.
    generators_disc: [MoebiusMap; 4],
    /// `fundamental_domain[j]` is the octagon side from vertex j to j+1.
    pub fundamental_domain: Vec<Side>,
    /// Deck transformation attached to each side: the image of the domain
    /// under `side_maps[j]` is the neighbor across side j.
    pub side_maps: [MoebiusMap; SIDES],
    side_map_inverses: [MoebiusMap; SIDES],
    /// Centers of the eight neighboring domain copies, in the disc.
    neighbor_centers: [Complex64; SIDES],
    pub vertices: [Complex64; SIDES],
    pub genus: usize,
}

/// Map a side index to its label as a word in `(a₁, b₁, a₂, b₂)`.
///
/// Sides carry, in order, the edge labels `a b a⁻¹ b⁻¹ c d c⁻¹ d⁻¹`; the
/// boundary cycle then spells the relator `a b⁻¹ a⁻¹ b c d⁻¹ c⁻¹ d`, so the
/// standard generators are `(a₁, b₁, a₂, b₂) = (a, b⁻¹, c, d⁻¹)`.
fn side_letter(j: usize) -> Letter {
    match j {
        0 => Letter { gen: 0, inverse: false },
        1 => Letter { gen: 1, inverse: true },
        2 => Letter { gen: 0, inverse: true },
        3 => Letter { gen: 1, inverse: false },
        4 => Letter { gen: 2, inverse: false },
        5 => Letter { gen: 3, inverse: true },
        6 => Letter { gen: 2, inverse: true },
        7 => Letter { gen: 3, inverse: false },
        _ => unreachable!("side index out of range"),
    }
}

/// Disc isometry mapping the oriented segment (p, q) onto (p2, q2):
/// translate both to the origin, then rotate to align directions.
fn pair_map(p: Complex64, q: Complex64, p2: Complex64, q2: Complex64) -> Result<MoebiusMap> {
    let t1 = MoebiusMap::disc_translation_to_zero(p)?;
    let t2 = MoebiusMap::disc_translation_to_zero(p2)?;
    let phi = t2.apply_complex(q2).arg() - t1.apply_complex(q).arg();
    Ok(t2.inverse().compose(&MoebiusMap::rotation(phi)).compose(&t1))
}

impl SurfaceGroup {
    /// Deck transformation for a generator letter, acting on the disc.
    pub fn letter_map_disc(&self, l: Letter) -> MoebiusMap {
        let m = self.generators_disc[l.gen];
        if l.inverse {
            m.inverse()
        } else {
            m
        }
    }

    /// Deck transformation for a generator letter, acting on the half-plane.
    pub fn letter_map_half(&self, l: Letter) -> MoebiusMap {
        let m = self.generators[l.gen];
        if l.inverse {
            m.inverse()
        } else {
            m
        }
    }

    /// Product of a word (leftmost letter applied last), on the disc.
    pub fn word_map_disc(&self, w: &[Letter]) -> MoebiusMap {
        let mut m = MoebiusMap::identity();
        for &l in w {
            m = m.compose(&self.letter_map_disc(l));
        }
        m
    }

    /// Whether a disc point lies in the (closed) fundamental octagon, i.e.
    /// no neighbor center is closer than the origin.
    pub fn contains_disc(&self, z: Complex64) -> bool {
        let c0 = cosh_distance_disc(z, Complex64::new(0.0, 0.0));
        self.neighbor_centers.iter().all(|&c| cosh_distance_disc(z, c) >= c0 - REDUCTION_SLACK)
    }

    /// Greedy reduction of a disc point into the fundamental domain.
    ///
    /// Returns the reduced point and the sides whose inverse maps were
    /// applied, in application order.
    fn reduce_disc(&self, mut z: Complex64) -> Result<(Complex64, Vec<usize>)> {
        let origin = Complex64::new(0.0, 0.0);
        let mut applied = Vec::new();
        for _ in 0..REDUCTION_CAP {
            let c0 = cosh_distance_disc(z, origin);
            let mut best: Option<(usize, f64)> = None;
            for (j, &c) in self.neighbor_centers.iter().enumerate() {
                let cj = cosh_distance_disc(z, c);
                if cj < c0 - REDUCTION_SLACK && best.is_none_or(|(_, b)| cj < b) {
                    best = Some((j, cj));
                }
            }
            match best {
                None => return Ok((z, applied)),
                Some((j, _)) => {
                    z = self.side_map_inverses[j].apply_complex(z);
                    applied.push(j);
                }
            }
        }
        Err(Error::ReductionFailure(REDUCTION_CAP))
    }

    /// Reduce an arbitrary point into the fundamental domain, returning the
    /// reduced point and the word of deck letters that was applied.
    pub fn reduce_to_domain(&self, z: &HPoint) -> Result<(HPoint, Word)> {
        let (zr, sides) = self.reduce_disc(z.disc_coord())?;
        let word: Word = sides.iter().map(|&j| side_letter(j).inverted()).collect();
        Ok((HPoint::disc(zr)?, word))
    }

    /// Circumradius of the octagon.
    pub fn circumradius(&self) -> f64 {
        let v = HPoint::disc(self.vertices[0]).expect("vertex inside disc");
        hyperbolic_distance(&HPoint::origin(), &v)
    }

    /// Sample a point of the fundamental domain from the hyperbolic area
    /// measure (polar sampling inside the circumscribed disc + rejection).
    pub fn sample_interior_point(&self, rng: &mut ChaCha8Rng) -> Complex64 {
        let rho_max = self.circumradius();
        let cap = rho_max.cosh() - 1.0;
        loop {
            let u: f64 = rng.gen();
            let rho = (1.0 + u * cap).acosh();
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let z = Complex64::from_polar((rho / 2.0).tanh(), theta);
            if self.contains_disc(z) {
                return z;
            }
        }
    }

    /// Residual of the surface-group relator `[a₁,b₁][a₂,b₂]` against ±I.
    pub fn relator_residual(&self) -> f64 {
        relator_residual_of(&self.generators_disc)
    }
}

/// Frobenius distance of `[a₁,b₁][a₂,b₂]` from ±identity.
fn relator_residual_of(images: &[MoebiusMap; 4]) -> f64 {
    let commutator = |x: &MoebiusMap, y: &MoebiusMap| {
        x.compose(y).compose(&x.inverse()).compose(&y.inverse())
    };
    let m = commutator(&images[0], &images[1]).compose(&commutator(&images[2], &images[3]));
    let dist_to = |s: f64| {
        let id = MoebiusMap::identity();
        ((m.a - s * id.a).norm_sqr()
            + (m.b - s * id.b).norm_sqr()
            + (m.c - s * id.c).norm_sqr()
            + (m.d - s * id.d).norm_sqr())
        .sqrt()
    };
    dist_to(1.0).min(dist_to(-1.0))
}

/// Construct the genus-2 surface group of the regular hyperbolic octagon.
///
/// The octagon is centered at the disc origin with vertices at Euclidean
/// radius `2^{−1/4}`, which makes every interior angle π/4 and the total
/// angle sum 2π (area 4π by Gauss–Bonnet). The deck transformation for side
/// j maps its glued partner onto side j with reversed orientation.
pub fn build_genus2_octagon() -> Result<SurfaceGroup> {
    let rv = 2.0_f64.powf(-0.25);
    let mut vertices = [Complex64::new(0.0, 0.0); SIDES];
    for (k, v) in vertices.iter_mut().enumerate() {
        *v = Complex64::from_polar(rv, std::f64::consts::PI / 4.0 * k as f64);
    }
    // Side j runs from vertex j to j+1; side j is glued to side j+2 mod 8
    // within each (a, a⁻¹) / (b, b⁻¹) pair: pairing partner of side j carrying
    // label x is the side carrying x⁻¹.
    let partner = |j: usize| -> usize {
        match j {
            0 => 2,
            1 => 3,
            2 => 0,
            3 => 1,
            4 => 6,
            5 => 7,
            6 => 4,
            7 => 5,
            _ => unreachable!(),
        }
    };
    // The deck map for side j sends its partner side k onto side j with
    // orientation reversed: vertices (k, k+1) ↦ (j+1, j).
    let mut side_maps = [MoebiusMap::identity(); SIDES];
    for j in 0..SIDES {
        let k = partner(j);
        side_maps[j] = pair_map(
            vertices[k],
            vertices[(k + 1) % SIDES],
            vertices[(j + 1) % SIDES],
            vertices[j],
        )?;
    }
    let mut side_map_inverses = [MoebiusMap::identity(); SIDES];
    let mut neighbor_centers = [Complex64::new(0.0, 0.0); SIDES];
    for j in 0..SIDES {
        side_map_inverses[j] = side_maps[j].inverse();
        neighbor_centers[j] = side_maps[j].apply_complex(Complex64::new(0.0, 0.0));
    }
    // Standard generators (a₁, b₁, a₂, b₂) = (a, b⁻¹, c, d⁻¹); the side maps
    // for sides 0, 1, 4, 5 carry exactly the labels a, b, c, d... with the
    // letter table inverting b and d.
    let generators_disc = [
        side_maps[0],
        side_maps[1].inverse(),
        side_maps[4],
        side_maps[5].inverse(),
    ];
    let generators = [
        generators_disc[0].conjugate_by_cayley(Model::HalfPlane),
        generators_disc[1].conjugate_by_cayley(Model::HalfPlane),
        generators_disc[2].conjugate_by_cayley(Model::HalfPlane),
        generators_disc[3].conjugate_by_cayley(Model::HalfPlane),
    ];
    let fundamental_domain: Vec<Side> = (0..SIDES)
        .map(|j| Side {
            start: vertices[j],
            end: vertices[(j + 1) % SIDES],
            paired_with: partner(j),
            letter: side_letter(j),
        })
        .collect();
    let group = SurfaceGroup {
        generators,
        generators_disc,
        fundamental_domain,
        side_maps,
        side_map_inverses,
        neighbor_centers,
        vertices,
        genus: 2,
    };
    let res = group.relator_residual();
    if res > 1e-6 {
        return Err(Error::RelatorViolation(res));
    }
    Ok(group)
}

/// The fiber half of a suspension: one Moebius image per generator.
#[derive(Clone, Debug)]
pub struct FiberRepresentation {
    pub images: [MoebiusMap; 4],
}

impl FiberRepresentation {
    pub fn new(images: [MoebiusMap; 4]) -> Result<Self> {
        let res = relator_residual_of(&images);
        if res > 1e-6 {
            return Err(Error::RelatorViolation(res));
        }
        Ok(Self { images })
    }

    pub fn trivial() -> Self {
        Self { images: [MoebiusMap::identity(); 4] }
    }

    pub fn image_of(&self, l: Letter) -> MoebiusMap {
        let m = self.images[l.gen];
        if l.inverse {
            m.inverse()
        } else {
            m
        }
    }

    /// Image of a word (leftmost letter applied last).
    pub fn word_image(&self, w: &[Letter]) -> MoebiusMap {
        let mut m = MoebiusMap::identity();
        for &l in w {
            m = m.compose(&self.image_of(l));
        }
        m
    }

    /// Conjugated representation `g ↦ m g m⁻¹`.
    pub fn conjugate(&self, m: &MoebiusMap) -> Self {
        let mi = m.inverse();
        Self {
            images: [
                m.compose(&self.images[0]).compose(&mi),
                m.compose(&self.images[1]).compose(&mi),
                m.compose(&self.images[2]).compose(&mi),
                m.compose(&self.images[3]).compose(&mi),
            ],
        }
    }
}

/// Transverse fiber geometry of a suspension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiberType {
    /// Boundary circle P¹(ℝ) realized as the unit circle of the disc model.
    Circle,
    /// The full Riemann sphere.
    Sphere,
}

/// A flat P¹-bundle over the genus-2 base: the lamination under study.
#[derive(Clone, Debug)]
pub struct SuspensionFoliation {
    pub base: SurfaceGroup,
    pub rep: FiberRepresentation,
    pub fiber_type: FiberType,
    /// Whether generic leaves of the suspension are simply connected, i.e.
    /// whether the representation is faithful on the surface group.
    pub simply_connected_leaves: bool,
}

impl SuspensionFoliation {
    pub fn new(
        base: SurfaceGroup,
        rep: FiberRepresentation,
        fiber_type: FiberType,
        simply_connected_leaves: bool,
    ) -> Result<Self> {
        if fiber_type == FiberType::Circle {
            // A circle fiber needs every image to preserve the unit circle.
            for m in &rep.images {
                if !m.is_disc_isometry(1e-8) {
                    return Err(Error::InvalidParameter(
                        "circle fiber type requires unit-circle-preserving images".into(),
                    ));
                }
            }
        }
        Ok(Self { base, rep, fiber_type, simply_connected_leaves })
    }

    /// The suspension with trivial fiber representation (a product bundle).
    /// Its leaves are copies of the closed base surface, hence not simply
    /// connected.
    pub fn trivial() -> Result<Self> {
        Self::new(build_genus2_octagon()?, FiberRepresentation::trivial(), FiberType::Circle, false)
    }

    /// The geodesic-flow suspension: the representation is the inclusion of
    /// the surface group acting on its own boundary circle.
    pub fn fuchsian_boundary() -> Result<Self> {
        let base = build_genus2_octagon()?;
        let rep = FiberRepresentation::new(base.generators_disc)?;
        Self::new(base, rep, FiberType::Circle, true)
    }

    /// Schottky-valued suspension: `a₁, a₂` go to two loxodromic maps with
    /// paired isometric circles of radius `r` centered at `±c` and `±ic`;
    /// `b₁, b₂` go to the identity (so the relator holds automatically, and
    /// generic leaves are *not* simply connected).
    pub fn schottky(c: f64, r: f64) -> Result<Self> {
        if !(c > 0.0 && r > 0.0 && 2.0 * r < 2.0 * c * (0.5f64).sqrt()) {
            return Err(Error::InvalidParameter(format!(
                "schottky preset needs disjoint isometric circles: c = {c}, r = {r}"
            )));
        }
        let base = build_genus2_octagon()?;
        // z ↦ (cz + c² + r²)/(z + c): sends the exterior of |z + c| = r onto
        // the interior of |z − c| = r; determinant −r² normalizes to 1, which
        // makes the map loxodromic with tr² = −4c²/r².
        let g1 = MoebiusMap::new(
            Complex64::new(c, 0.0),
            Complex64::new(c * c + r * r, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(c, 0.0),
        )?;
        // Conjugate by the quarter turn z ↦ iz to center the second pair of
        // circles at ±ic.
        let rot = MoebiusMap::rotation(std::f64::consts::FRAC_PI_2);
        let g2 = rot.compose(&g1).compose(&rot.inverse());
        let rep = FiberRepresentation::new([g1, MoebiusMap::identity(), g2, MoebiusMap::identity()])?;
        Self::new(base, rep, FiberType::Sphere, false)
    }
}

/// Snapshot of holonomy transport along a path.
#[derive(Clone, Debug)]
pub struct HolonomyState {
    /// The path's endpoint reduced into the fundamental domain.
    pub base_point: HPoint,
    /// Deck letters applied during reduction, in application order.
    pub word: Word,
    pub fiber_point: P1Point,
    /// Accumulated `log |h′|` in the round metric on P¹.
    pub log_deriv: f64,
}

/// Incremental holonomy transport in the reduced frame.
///
/// Each Brownian increment is replayed from the current reduced position;
/// when the step leaves the fundamental domain the crossing letters are
/// applied to the fiber. Steps crossing more than one side are recursively
/// bisected. Because the increments are i.i.d. and isometry-invariant in
/// law, the replayed path has the law of the original one.
pub struct HolonomyTracker<'a> {
    foliation: &'a SuspensionFoliation,
    /// Current position in half-plane coordinates of the reduced frame.
    w: Complex64,
    fiber: P1Point,
    word: Word,
    log_deriv: f64,
    /// When false, crossings still act on the fiber but `log_deriv` is not
    /// accumulated (burn-in phase).
    pub accumulate: bool,
}

impl<'a> HolonomyTracker<'a> {
    pub fn new(
        foliation: &'a SuspensionFoliation,
        start: &HPoint,
        fiber_start: P1Point,
    ) -> Result<Self> {
        let mut tracker = Self {
            foliation,
            w: Complex64::new(0.0, 1.0),
            fiber: fiber_start,
            word: Vec::new(),
            log_deriv: 0.0,
            accumulate: true,
        };
        let (reduced, word) = foliation.base.reduce_to_domain(start)?;
        for &l in &word {
            tracker.apply_letter(l);
        }
        tracker.word = word;
        tracker.w = reduced.half_plane_coord();
        Ok(tracker)
    }

    /// Apply the fiber action of one deck letter (the letter that was applied
    /// to the base point during reduction acts on the fiber through ρ).
    fn apply_letter(&mut self, l: Letter) {
        let m = self.foliation.rep.image_of(l);
        if self.accumulate {
            self.log_deriv += m.spherical_derivative(self.fiber).ln();
        }
        self.fiber = m.apply_p1(self.fiber);
    }

    fn advance(&mut self, log_ratio: f64, shear: f64) -> Result<()> {
        let a = log_ratio.exp();
        let w2 = Complex64::new(self.w.re + self.w.im * shear, self.w.im * a);
        let z2 = half_to_disc(w2);
        if self.foliation.base.contains_disc(z2) {
            self.w = w2;
            return Ok(());
        }
        // The fiber action depends only on the composite deck element (the
        // representation is a homomorphism and log-derivatives telescope),
        // so the greedy reduction word can be applied letter by letter.
        let (zr, sides) = self.foliation.base.reduce_disc(z2)?;
        for &j in &sides {
            let l = side_letter(j).inverted();
            self.apply_letter(l);
            self.word.push(l);
        }
        self.w = disc_to_half_checked(zr)?;
        Ok(())
    }

    /// Replay one Brownian increment.
    pub fn step(&mut self, inc: &Increment) -> Result<()> {
        self.advance(inc.log_ratio, inc.shear)
    }

    pub fn fiber_point(&self) -> P1Point {
        self.fiber
    }

    pub fn log_deriv(&self) -> f64 {
        self.log_deriv
    }

    /// Reset the accumulated derivative (end of a burn-in phase).
    pub fn reset_log_deriv(&mut self) {
        self.log_deriv = 0.0;
    }

    pub fn state(&self) -> Result<HolonomyState> {
        Ok(HolonomyState {
            base_point: HPoint::disc(half_to_disc(self.w))?,
            word: self.word.clone(),
            fiber_point: self.fiber,
            log_deriv: self.log_deriv,
        })
    }
}

fn disc_to_half_checked(z: Complex64) -> Result<Complex64> {
    let w = crate::hyperbolic::disc_to_half(z);
    if w.im > 0.0 {
        Ok(w)
    } else {
        Err(Error::Numerical("reduced point left the half-plane".into()))
    }
}

/// Transport holonomy along a whole Brownian path.
///
/// The path's increments are replayed in the reduced frame; the returned
/// state carries the crossing word, the final fiber point, and the
/// round-metric `log |h′|` accumulated over all crossings.
pub fn holonomy_along_path(
    f: &SuspensionFoliation,
    path: &BrownianPath,
    fiber_start: P1Point,
) -> Result<HolonomyState> {
    // One step must stay within a domain diameter for crossing detection.
    let diameter = 2.0 * f.base.circumradius();
    for inc in &path.increments {
        let a = inc.log_ratio.exp();
        let jump =
            (1.0 + (inc.shear * inc.shear + (1.0 - a) * (1.0 - a)) / (2.0 * a)).acosh();
        if jump > diameter {
            return Err(Error::InvalidParameter(format!(
                "path step jumps {jump:.3} > domain diameter {diameter:.3}; decrease the step"
            )));
        }
    }
    let start = HPoint::half_plane(path.start())?;
    let mut tracker = HolonomyTracker::new(f, &start, fiber_start)?;
    for inc in &path.increments {
        tracker.step(inc)?;
    }
    let state = tracker.state()?;
    // Internal consistency: the recorded word reproduces the fiber point.
    // The word is stored in application order, so the last letter is the
    // outermost factor of the composite map.
    let mut composite = MoebiusMap::identity();
    for &l in &state.word {
        composite = f.rep.image_of(l).compose(&composite);
    }
    let recomputed = composite.apply_p1(fiber_start);
    if recomputed.chordal_distance(&state.fiber_point) > 1e-6 {
        return Err(Error::Numerical(
            "holonomy word does not reproduce the fiber point".into(),
        ));
    }
    Ok(state)
}

/// Sampled lift of a geodesic trajectory with its quasi-geodesic constants.
#[derive(Clone, Debug)]
pub struct GeodesicLift {
    pub samples: Vec<(f64, HPoint)>,
    /// max over sample pairs of `|d(α(s), α(t)) − |s − t||`.
    pub max_deviation: f64,
    /// Multiplicative quasi-geodesic constant (max distortion ratio).
    pub rho: f64,
    /// The boundary point the trajectory converges to.
    pub delta: BoundaryPoint,
}

/// Lift of the model geodesic flow: a unit-speed geodesic ray from `start`
/// toward `direction`, sampled on `[0, T]` and checked for arc-length
/// exactness pairwise.
pub fn lift_geodesic_trajectory(
    _f: &SuspensionFoliation,
    start: &HPoint,
    direction: &BoundaryPoint,
    horizon: f64,
) -> Result<GeodesicLift> {
    if horizon.is_nan() || horizon <= 0.0 {
        return Err(Error::InvalidParameter(format!("horizon must be > 0, got {horizon}")));
    }
    let ray = GeodesicRay::new(*start, *direction)?;
    let n = 200;
    let samples: Vec<(f64, HPoint)> = (0..=n)
        .map(|k| {
            let t = horizon * k as f64 / n as f64;
            (t, ray.point_at(t))
        })
        .collect();
    let mut max_deviation: f64 = 0.0;
    let mut rho: f64 = 1.0;
    for i in 0..samples.len() {
        for j in (i + 1)..samples.len() {
            let (s, ref p) = samples[i];
            let (t, ref q) = samples[j];
            let d = hyperbolic_distance(p, q);
            max_deviation = max_deviation.max((d - (t - s)).abs());
            let ratio = d / (t - s);
            rho = rho.max(ratio.max(1.0 / ratio));
        }
    }
    Ok(GeodesicLift { samples, max_deviation, rho, delta: ray.endpoint() })
}

/// Monte Carlo check of the Jacobian of the vertical flow `x+iy ↦ x+ie^t y`.
#[derive(Clone, Debug)]
pub struct JacobianReport {
    pub t: f64,
    pub expected: f64,
    pub observed: f64,
    pub rel_error: f64,
    pub n: u64,
}

/// Estimate `vol_P(φ^{−t}(B))/vol_P(B)` for a reference box `B`; the exact
/// value is `e^t`.
pub fn flow_jacobian_check(t: f64, n: u64, seed: u64) -> Result<JacobianReport> {
    if !(0.0..=5.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("flow time must lie in [0, 5], got {t}")));
    }
    // B = [0,1] × [1,2]; vol_P(B) = ∫ 1/y² = 1/2 exactly.
    // φ^{−t}(B) = [0,1] × [e^{−t}, 2e^{−t}]: sample it uniformly and average 1/y².
    let scale = (-t).exp();
    let mut rng = path_rng(seed, 0xfeed);
    let mut values = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let y = scale * rng.gen_range(1.0..2.0);
        values.push(1.0 / (y * y));
    }
    let (mean, _) = crate::report::mean_and_std_error(&values);
    // Euclidean area of the preimage box is scale·1; pulled-back volume is
    // mean(1/y²)·area.
    let observed = mean * scale / 0.5;
    let expected = t.exp();
    Ok(JacobianReport {
        t,
        expected,
        observed,
        rel_error: (observed - expected).abs() / expected,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::simulate_path;
    use crate::hyperbolic::busemann;
    use rand::SeedableRng;

    fn octagon() -> SurfaceGroup {
        build_genus2_octagon().unwrap()
    }

    #[test]
    fn octagon_relator_and_regularity() {
        let g = octagon();
        assert!(g.relator_residual() < 1e-9, "relator residual {}", g.relator_residual());
        let r0 = g.circumradius();
        for v in &g.vertices {
            let d = hyperbolic_distance(&HPoint::origin(), &HPoint::disc(*v).unwrap());
            assert!((d - r0).abs() < 1e-12);
        }
        // Known closed form: circumradius = arcosh(cot²(π/8)).
        let cot = 1.0 / (std::f64::consts::PI / 8.0).tan();
        assert!((r0 - (cot * cot).acosh()).abs() < 1e-10);
        assert_eq!(g.genus, 2);
    }

    #[test]
    fn octagon_side_pairings_match_endpoints() {
        let g = octagon();
        for (j, side) in g.fundamental_domain.iter().enumerate() {
            let k = side.paired_with;
            let partner = &g.fundamental_domain[k];
            // The deck map of side j sends the partner side onto side j
            // with reversed orientation.
            let m = g.side_maps[j];
            assert!((m.apply_complex(partner.start) - side.end).norm() < 1e-8);
            assert!((m.apply_complex(partner.end) - side.start).norm() < 1e-8);
            // And the pairing is an involution on indices.
            assert_eq!(g.fundamental_domain[k].paired_with, j);
        }
    }

    #[test]
    fn octagon_generators_are_real_in_half_plane() {
        let g = octagon();
        for m in &g.generators {
            assert!(m.is_real(1e-9));
            assert!((m.det().norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn octagon_area_is_4pi() {
        // Monte Carlo over the circumscribed hyperbolic disc: area of the
        // domain = area(disc(R)) · acceptance fraction; area(disc(R)) =
        // 2π(cosh R − 1).
        let g = octagon();
        let rho_max = g.circumradius();
        let mut rng = path_rng(17, 0);
        let n = 400_000;
        let mut hits = 0u64;
        for _ in 0..n {
            let u: f64 = rng.gen();
            let rho = (1.0 + u * (rho_max.cosh() - 1.0)).acosh();
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let z = Complex64::from_polar((rho / 2.0).tanh(), theta);
            if g.contains_disc(z) {
                hits += 1;
            }
        }
        let disc_area = 2.0 * std::f64::consts::PI * (rho_max.cosh() - 1.0);
        let area = disc_area * hits as f64 / n as f64;
        let expected = 4.0 * std::f64::consts::PI;
        assert!(
            (area - expected).abs() / expected < 0.01,
            "octagon area {area}, expected {expected}"
        );
    }

    #[test]
    fn neighbor_centers_equidistant() {
        let g = octagon();
        let d0 = hyperbolic_distance(
            &HPoint::origin(),
            &HPoint::disc(g.neighbor_centers[0]).unwrap(),
        );
        for c in &g.neighbor_centers {
            let d = hyperbolic_distance(&HPoint::origin(), &HPoint::disc(*c).unwrap());
            assert!((d - d0).abs() < 1e-10);
        }
        // Twice the apothem: 2·arcosh(1 + √2).
        let expected = 2.0 * (1.0 + 2.0_f64.sqrt()).acosh();
        assert!((d0 - expected).abs() < 1e-10, "neighbor distance {d0}");
    }

    #[test]
    fn reduction_basic_cases() {
        let g = octagon();
        // Interior point: untouched.
        let z = HPoint::disc(Complex64::new(0.1, 0.05)).unwrap();
        let (r, w) = g.reduce_to_domain(&z).unwrap();
        assert!(w.is_empty());
        assert!((r.coord() - z.coord()).norm() < 1e-15);

        // a₁ applied to the center reduces back with word [a₁⁻¹].
        let a1 = g.generators_disc[0];
        let moved = HPoint::disc(a1.apply_complex(Complex64::new(0.0, 0.0))).unwrap();
        let (r, w) = g.reduce_to_domain(&moved).unwrap();
        assert!(r.coord().norm() < 1e-10);
        assert_eq!(w, vec![Letter { gen: 0, inverse: true }]);
    }

    #[test]
    fn reduction_round_trip_random() {
        let g = octagon();
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        for _ in 0..200 {
            // Random point pushed out by a random short word.
            let mut z = Complex64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
            for _ in 0..rng.gen_range(1..6) {
                let l = Letter { gen: rng.gen_range(0..4), inverse: rng.gen_bool(0.5) };
                z = g.letter_map_disc(l).apply_complex(z);
            }
            let (r, w) = g.reduce_to_domain(&HPoint::disc(z).unwrap()).unwrap();
            assert!(g.contains_disc(r.coord()));
            // Applying the inverse word (in reverse) recovers z.
            let mut back = r.coord();
            for &l in w.iter().rev() {
                back = g.letter_map_disc(l.inverted()).apply_complex(back);
            }
            assert!((back - z).norm() < 1e-7, "round-trip error {}", (back - z).norm());
        }
    }

    #[test]
    fn fiber_representation_relator_enforced() {
        let g = octagon();
        assert!(FiberRepresentation::new(g.generators_disc).is_ok());
        // A random non-commuting quadruple violates the relator.
        let bad = [
            MoebiusMap::from_real(2.0, 1.0, 1.0, 1.0).unwrap(),
            MoebiusMap::from_real(1.0, 2.0, 0.0, 1.0).unwrap(),
            MoebiusMap::from_real(1.0, 0.0, 3.0, 1.0).unwrap(),
            MoebiusMap::from_real(1.0, 1.0, 1.0, 2.0).unwrap(),
        ];
        assert!(matches!(
            FiberRepresentation::new(bad),
            Err(Error::RelatorViolation(_))
        ));
    }

    #[test]
    fn schottky_preset_geometry() {
        let f = SuspensionFoliation::schottky(4.0, 1.0).unwrap();
        let g1 = f.rep.images[0];
        // Loxodromic: tr² = −4c²/r² far from [0, 4].
        let tr2 = g1.trace() * g1.trace();
        assert!((tr2.re + 64.0).abs() < 1e-9 && tr2.im.abs() < 1e-9);
        // Isometric circle action: |z + c| = r maps to |g1(z) − c| = r.
        for k in 0..16 {
            let z = Complex64::new(-4.0, 0.0) + Complex64::from_polar(1.0, k as f64 * 0.4);
            let img = g1.apply_complex(z);
            assert!(((img - Complex64::new(4.0, 0.0)).norm() - 1.0).abs() < 1e-9);
        }
        // Exterior of the source circle maps inside the target circle.
        let far = Complex64::new(0.5, 0.7);
        assert!((g1.apply_complex(far) - Complex64::new(4.0, 0.0)).norm() < 1.0);
        // Overlapping circles are rejected.
        assert!(SuspensionFoliation::schottky(1.0, 1.0).is_err());
    }

    #[test]
    fn trivial_holonomy_has_zero_derivative() {
        let f = SuspensionFoliation::trivial().unwrap();
        let start = HPoint::origin();
        let path = simulate_path(&start, 10.0, 0.01, 3, 0).unwrap();
        let state =
            holonomy_along_path(&f, &path, P1Point::finite(Complex64::new(1.0, 0.0))).unwrap();
        assert_eq!(state.log_deriv, 0.0);
        assert!(f.base.contains_disc(state.base_point.disc_coord()));
    }

    #[test]
    fn fuchsian_stable_contraction_matches_busemann() {
        // For a deck word w and boundary point ξ, the round derivative of
        // w⁻¹ at ξ satisfies log |(w⁻¹)′(ξ)| = B_ξ(0, w(0)).
        let g = octagon();
        let mut rng = rand::rngs::StdRng::seed_from_u64(77);
        for _ in 0..100 {
            let mut w = MoebiusMap::identity();
            for _ in 0..rng.gen_range(1..5) {
                let l = Letter { gen: rng.gen_range(0..4), inverse: rng.gen_bool(0.5) };
                w = w.compose(&g.letter_map_disc(l));
            }
            let xi = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            let lhs = w.inverse().spherical_derivative(P1Point::finite(xi)).ln();
            let w0 = w.apply_complex(Complex64::new(0.0, 0.0));
            let rhs = busemann(
                &BoundaryPoint::disc(xi).unwrap(),
                &HPoint::origin(),
                &HPoint::disc(w0).unwrap(),
            );
            assert!((lhs - rhs).abs() < 1e-8, "lhs {lhs} rhs {rhs}");
        }
    }

    #[test]
    fn fuchsian_holonomy_contracts_at_unit_rate() {
        // Small-sample check that (1/t) log|h′| ≈ −1 for the boundary
        // suspension; the tight version lives in the estimator suite.
        let f = SuspensionFoliation::fuchsian_boundary().unwrap();
        let t = 40.0;
        let mut vals = Vec::new();
        for k in 0..8 {
            let path = simulate_path(&HPoint::origin(), t, 0.01, 123, k).unwrap();
            let xi = P1Point::finite(Complex64::from_polar(1.0, 0.7 + k as f64));
            let state = holonomy_along_path(&f, &path, xi).unwrap();
            vals.push(state.log_deriv / t);
        }
        let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((mean + 1.0).abs() < 0.45, "mean contraction rate {mean}");
    }

    #[test]
    fn holonomy_cocycle_additivity() {
        // Feeding a path in two halves through the tracker gives the same
        // word, fiber point, and log-derivative as one pass.
        let f = SuspensionFoliation::fuchsian_boundary().unwrap();
        let path = simulate_path(&HPoint::origin(), 20.0, 0.01, 5, 2).unwrap();
        let xi = P1Point::finite(Complex64::from_polar(1.0, 1.3));
        let full = holonomy_along_path(&f, &path, xi).unwrap();

        let start = HPoint::half_plane(path.start()).unwrap();
        let mut tracker = HolonomyTracker::new(&f, &start, xi).unwrap();
        let mid = path.increments.len() / 2;
        for inc in &path.increments[..mid] {
            tracker.step(inc).unwrap();
        }
        let log_first = tracker.log_deriv();
        for inc in &path.increments[mid..] {
            tracker.step(inc).unwrap();
        }
        let split = tracker.state().unwrap();
        assert_eq!(split.word, full.word);
        assert!((split.log_deriv - full.log_deriv).abs() < 1e-8);
        assert!(log_first.abs() < split.log_deriv.abs() + 1e-9);
        assert!(split.fiber_point.chordal_distance(&full.fiber_point) < 1e-10);
    }

    #[test]
    fn holonomy_rejects_giant_steps() {
        let f = SuspensionFoliation::trivial().unwrap();
        let mut path = simulate_path(&HPoint::origin(), 1.0, 0.01, 5, 2).unwrap();
        path.increments[3].shear = 100.0;
        let r = holonomy_along_path(&f, &path, P1Point::finite(Complex64::new(1.0, 0.0)));
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn geodesic_lift_is_unit_speed_and_converges() {
        let f = SuspensionFoliation::trivial().unwrap();
        let start = HPoint::base_i();
        let dir = BoundaryPoint::half(2.0).unwrap();
        let lift = lift_geodesic_trajectory(&f, &start, &dir, 20.0).unwrap();
        assert!(lift.max_deviation < 1e-6, "deviation {}", lift.max_deviation);
        assert!((lift.rho - 1.0).abs() < 1e-6);
        match lift.delta {
            BoundaryPoint::Half(x) => assert!((x - 2.0).abs() < 1e-12),
            _ => panic!("expected the input direction back"),
        }
        // Endpoint continuity in the start point.
        let eps = 1e-3;
        let start2 = HPoint::half_plane(Complex64::new(eps, 1.0)).unwrap();
        let lift2 = lift_geodesic_trajectory(&f, &start2, &dir, 20.0).unwrap();
        let d1 = P1Point::from(lift.delta);
        let d2 = P1Point::from(lift2.delta);
        assert!(d1.chordal_distance(&d2) < 10.0 * eps);
    }

    #[test]
    fn jacobian_matches_exponential() {
        for (t, tol) in [(0.0, 0.01), (1.0, 0.01), (2.0, 0.01)] {
            let r = flow_jacobian_check(t, 1_000_000, 5).unwrap();
            assert!(
                r.rel_error < tol,
                "jacobian at t = {t}: observed {}, expected {}",
                r.observed,
                r.expected
            );
        }
        assert!(flow_jacobian_check(9.0, 100, 5).is_err());
    }

    #[test]
    fn sample_interior_point_lands_in_domain() {
        let g = octagon();
        let mut rng = path_rng(31, 7);
        for _ in 0..100 {
            let z = g.sample_interior_point(&mut rng);
            assert!(g.contains_disc(z));
        }
    }
}
