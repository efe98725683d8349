//! Exact intersection theory on a ruled surface X = P(V) over a genus-g
//! curve: divisor classes in the basis {σ (section), φ (fiber)}, ampleness,
//! a Reider-style very-ampleness witness, the ramified double-cover
//! invariants, and the plane-foliation adjunction bookkeeping.
//!
//! Everything here is exact: `i64` for the bounded lattice operations,
//! arbitrary-width integers/rationals for the large-genus sweeps.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use serde::Serialize;

use crate::error::{Error, Result};

/// Numerical divisor class `a·σ + b·φ` on a ruled surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DivisorClass {
    pub a: i64,
    pub b: i64,
}

impl DivisorClass {
    pub fn new(a: i64, b: i64) -> Self {
        Self { a, b }
    }
}

/// Intersection lattice of the ruled surface over a genus-g curve, with
/// σ² = χ = 2 − 2g < 0, σ·φ = 1, φ² = 0.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RuledSurfaceContext {
    pub genus: i64,
    pub chi: i64,
}

impl RuledSurfaceContext {
    pub fn new(genus: i64) -> Result<Self> {
        let chi = 2 - 2 * genus;
        if chi >= 0 {
            return Err(Error::InvalidParameter(format!(
                "ruled-surface lattice needs χ = 2 − 2g < 0, got g = {genus}"
            )));
        }
        Ok(Self { genus, chi })
    }

    /// Intersection number `(a₁σ + b₁φ)·(a₂σ + b₂φ) = a₁a₂χ + a₁b₂ + a₂b₁`.
    pub fn intersect(&self, c1: DivisorClass, c2: DivisorClass) -> i64 {
        c1.a.checked_mul(c2.a)
            .and_then(|m| m.checked_mul(self.chi))
            .and_then(|m| m.checked_add(c1.a * c2.b))
            .and_then(|m| m.checked_add(c2.a * c1.b))
            .expect("intersection number overflow")
    }

    /// Canonical class `K_X = −2σ` (the φ-coefficient vanishes).
    pub fn canonical_class(&self) -> DivisorClass {
        DivisorClass::new(-2, 0)
    }

    /// Ampleness on the ruled surface: `a > 0` and `χa + b > 0`.
    pub fn is_ample(&self, c: DivisorClass) -> bool {
        c.a > 0 && self.chi * c.a + c.b > 0
    }

    /// Nakai–Moishezon brute force against the generating curve classes σ
    /// and φ: positive pairing with both and positive self-intersection.
    pub fn is_ample_nakai(&self, c: DivisorClass) -> bool {
        let sigma = DivisorClass::new(1, 0);
        let phi = DivisorClass::new(0, 1);
        self.intersect(c, sigma) > 0
            && self.intersect(c, phi) > 0
            && self.intersect(c, c) > 0
    }

    /// Very-ampleness witness: an ample `L` with `4L + K_X = 2E`. Requires
    /// `2E − K_X` divisible by 4 in the lattice.
    pub fn reider_very_ample_witness(&self, target_e: DivisorClass) -> Result<ReiderWitness> {
        let na = 2 * target_e.a - self.canonical_class().a;
        let nb = 2 * target_e.b - self.canonical_class().b;
        if na % 4 != 0 || nb % 4 != 0 {
            return Err(Error::InvalidParameter(format!(
                "2E − K_X = ({na}, {nb}) is not divisible by 4; no witness"
            )));
        }
        let l = DivisorClass::new(na / 4, nb / 4);
        let four_l_plus_k = DivisorClass::new(
            4 * l.a + self.canonical_class().a,
            4 * l.b + self.canonical_class().b,
        );
        let identity_holds =
            four_l_plus_k == DivisorClass::new(2 * target_e.a, 2 * target_e.b);
        debug_assert!(identity_holds);
        if !self.is_ample(l) {
            return Err(Error::InvalidParameter(format!(
                "candidate L = ({}, {}) is not ample",
                l.a, l.b
            )));
        }
        Ok(ReiderWitness { l, four_l_plus_k, identity_holds })
    }
}

/// Certificate returned by [`RuledSurfaceContext::reider_very_ample_witness`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ReiderWitness {
    pub l: DivisorClass,
    pub four_l_plus_k: DivisorClass,
    pub identity_holds: bool,
}

/// Invariants of the ramified double cover used in the circle-bundle
/// construction, exact for arbitrarily large genus.
#[derive(Clone, Debug)]
pub struct DoubleCoverInvariants {
    /// χ of the covering curve: 10χ − 4.
    pub chi_cover: BigInt,
    /// Euler class of the pulled-back circle bundle: 2χ.
    pub euler_class_cover: BigInt,
    /// eu′/χ′ = 2χ/(10χ − 4), stored exactly.
    pub ratio: BigRational,
}

/// Compute the double-cover invariants for a genus-g base (g ≥ 2).
pub fn double_cover_invariants(genus: &BigInt) -> Result<DoubleCoverInvariants> {
    let chi: BigInt = BigInt::from(2) - BigInt::from(2) * genus;
    if !chi.is_negative() {
        return Err(Error::InvalidParameter(format!("need genus ≥ 2, got {genus}")));
    }
    let chi_cover: BigInt = BigInt::from(10) * &chi - BigInt::from(4);
    let euler_class_cover: BigInt = BigInt::from(2) * &chi;
    let ratio = BigRational::new(euler_class_cover.clone(), chi_cover.clone());
    Ok(DoubleCoverInvariants { chi_cover, euler_class_cover, ratio })
}

/// One side of the adjunction identity `K_F = K_S|_F + N_F` given as a
/// formal degree, or left unknown to be solved for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegreeLabel {
    Known(i64),
    Unknown,
}

/// Solved adjunction triple with exactly one unknown filled in.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AdjunctionCertificate {
    pub k_foliation: i64,
    pub k_surface_restricted: i64,
    pub normal_bundle: i64,
}

/// Solve `K_F = K_S|_F + N_F` for the single unknown degree label.
pub fn foliation_adjunction_check(
    k_foliation: DegreeLabel,
    k_surface_restricted: DegreeLabel,
    normal_bundle: DegreeLabel,
) -> Result<AdjunctionCertificate> {
    use DegreeLabel::*;
    let cert = match (k_foliation, k_surface_restricted, normal_bundle) {
        (Unknown, Known(ks), Known(n)) => AdjunctionCertificate {
            k_foliation: ks + n,
            k_surface_restricted: ks,
            normal_bundle: n,
        },
        (Known(kf), Unknown, Known(n)) => AdjunctionCertificate {
            k_foliation: kf,
            k_surface_restricted: kf - n,
            normal_bundle: n,
        },
        (Known(kf), Known(ks), Unknown) => AdjunctionCertificate {
            k_foliation: kf,
            k_surface_restricted: ks,
            normal_bundle: kf - ks,
        },
        (Known(kf), Known(ks), Known(n)) => {
            if kf != ks + n {
                return Err(Error::InvalidParameter(format!(
                    "adjunction identity violated: {kf} ≠ {ks} + {n}"
                )));
            }
            AdjunctionCertificate {
                k_foliation: kf,
                k_surface_restricted: ks,
                normal_bundle: n,
            }
        }
        _ => {
            return Err(Error::InvalidParameter(
                "exactly one degree may be left unknown".into(),
            ))
        }
    };
    Ok(cert)
}

/// Lyapunov exponent of the degree-d plane foliation: −(d+2)/(d−1), exact.
pub fn p2_lyapunov(d: i64) -> Result<BigRational> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("need degree ≥ 2, got {d}")));
    }
    Ok(BigRational::new(BigInt::from(-(d + 2)), BigInt::from(d - 1)))
}
