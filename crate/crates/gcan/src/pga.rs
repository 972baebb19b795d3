//! Versors, the Pin group action by conjugation, and the plane/point
//! embeddings for Euclidean and projective three-dimensional space.
//!
//! Conventions fixed here (and relied on everywhere else):
//!
//! * `compose_reflections(&[u1, u2, ...])` applies u1 first; the stored
//!   versor value is therefore the geometric product in reverse list order
//!   (... * u2 * u1), mirroring how matrix products compose.
//! * A point (x, y, z) with homogeneous weight w embeds in G(3,0,1) as
//!   `x*e023 - y*e013 + z*e012 + w*e123`. This is the unique sign choice
//!   (up to overall scale) under which a motor built from parallel planes
//!   at offset d/2 translates extracted coordinates by exactly +d on every
//!   axis, and rotors rotate embedded points exactly as they rotate
//!   grade-1 vectors.

use std::sync::Arc;

use crate::algebra::{Algebra, AlgebraExt, Multivector, NULL_VERSOR_TOL};
use crate::error::{Error, Result};

/// Reflection-count parity of a versor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// A composed sequence of reflections: the product of k invertible
/// grade-1 elements, remembering k mod 2.
#[derive(Clone, Debug)]
pub struct Versor {
    value: Multivector,
    parity: Parity,
    normalized: bool,
}

impl Versor {
    pub fn identity(algebra: &Arc<Algebra>) -> Versor {
        Versor {
            value: algebra.scalar(1.0),
            parity: Parity::Even,
            normalized: true,
        }
    }

    /// Wraps an even-grade multivector as an even versor (rotor/motor).
    pub fn from_even(value: Multivector) -> Result<Versor> {
        if value.grades_present(0.0).iter().any(|g| g % 2 == 1) {
            return Err(Error::InvalidConfig(
                "even versor with odd-grade coefficients".into(),
            ));
        }
        Ok(Versor {
            value,
            parity: Parity::Even,
            normalized: false,
        })
    }

    pub fn value(&self) -> &Multivector {
        &self.value
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn negated(&self) -> Versor {
        Versor {
            value: self.value.scaled(-1.0),
            parity: self.parity,
            normalized: self.normalized,
        }
    }

    /// Scales the versor to unit norm |scalar(reverse(v) v)| = 1.
    pub fn normalize(&self) -> Result<Versor> {
        let s = self.value.reverse_product_scalar();
        if s.abs() <= NULL_VERSOR_TOL {
            return Err(Error::NullVersor { scalar: s });
        }
        Ok(Versor {
            value: self.value.scaled(1.0 / s.abs().sqrt()),
            parity: self.parity,
            normalized: true,
        })
    }

    /// The Pin group action v -> (-1)^(kl) u v u^(-1), applied per grade l
    /// of an inhomogeneous argument. Grade-preserving for invertible u.
    pub fn pin_action(&self, v: &Multivector) -> Result<Multivector> {
        let inverse = self.value.versor_inverse()?;
        let mut out = self
            .value
            .geometric_product(v)?
            .geometric_product(&inverse)?;
        if self.parity == Parity::Odd {
            let algebra = out.algebra().clone();
            let coeffs = out.coeffs_mut();
            for i in 0..coeffs.len() {
                if algebra.grade_of(i) % 2 == 1 {
                    coeffs[i] = -coeffs[i];
                }
            }
        }
        Ok(out)
    }
}

/// Checks that `u` is a pure grade-1 element with invertible square.
fn require_plane(u: &Multivector) -> Result<()> {
    let grades = u.grades_present(0.0);
    if grades != vec![1] {
        return Err(Error::NotAPlane { grades });
    }
    Ok(())
}

/// Reflects `v` in the hyperplane of the grade-1 element `u`:
/// v -> -u v u^(-1) on vectors, extended per grade via the Pin action.
pub fn reflect(u: &Multivector, v: &Multivector) -> Result<Multivector> {
    require_plane(u)?;
    let versor = Versor {
        value: u.clone(),
        parity: Parity::Odd,
        normalized: false,
    };
    versor.pin_action(v)
}

/// Composes reflections in the listed planes, applied first-to-last.
/// The versor value is the product in reverse list order; an empty list
/// yields the identity.
pub fn compose_reflections(planes: &[Multivector]) -> Result<Versor> {
    let Some(first) = planes.first() else {
        return Err(Error::InvalidConfig(
            "compose_reflections of an empty list needs an algebra; use Versor::identity".into(),
        ));
    };
    let algebra = first.algebra().clone();
    let mut value = algebra.scalar(1.0);
    for plane in planes {
        require_plane(plane)?;
        // refuse null planes early so the composite stays invertible
        let s = plane.reverse_product_scalar();
        if s.abs() <= NULL_VERSOR_TOL {
            return Err(Error::NullVersor { scalar: s });
        }
        value = plane.geometric_product(&value)?;
    }
    Ok(Versor {
        value,
        parity: if planes.len() % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        },
        normalized: false,
    })
}

/// A plane a x + b y + c z + delta = 0 in projective 3-space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneG301 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub delta: f64,
}

impl PlaneG301 {
    pub fn new(a: f64, b: f64, c: f64, delta: f64) -> Result<Self> {
        if a == 0.0 && b == 0.0 && c == 0.0 {
            return Err(Error::InvalidConfig(
                "plane normal (a,b,c) must be nonzero".into(),
            ));
        }
        Ok(Self { a, b, c, delta })
    }

    /// Embeds as the grade-1 element a e1 + b e2 + c e3 + delta e0.
    pub fn embed(&self, pga: &Arc<Algebra>) -> Result<Multivector> {
        check_pga(pga)?;
        pga.vector(&[self.delta, self.a, self.b, self.c])
    }
}

/// A Euclidean point with homogeneous weight (w = 1 for ordinary points).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointG301 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl PointG301 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z, w: 1.0 }
    }
}

fn check_pga(algebra: &Arc<Algebra>) -> Result<()> {
    let sig = algebra.signature();
    if (sig.p, sig.q, sig.r) != (3, 0, 1) {
        return Err(Error::InvalidConfig(format!(
            "expected G(3,0,1), got {sig}"
        )));
    }
    Ok(())
}

/// Blade indices (e012, e013, e023, e123) in canonical order for G(3,0,1).
fn trivector_indices(pga: &Arc<Algebra>) -> [usize; 4] {
    [
        pga.blade_index(&[0, 1, 2]),
        pga.blade_index(&[0, 1, 3]),
        pga.blade_index(&[0, 2, 3]),
        pga.blade_index(&[1, 2, 3]),
    ]
}

/// Embeds a point into the trivector components of G(3,0,1).
pub fn embed_point(pga: &Arc<Algebra>, p: &PointG301) -> Result<Multivector> {
    check_pga(pga)?;
    let [e012, e013, e023, e123] = trivector_indices(pga);
    let mut m = pga.zero();
    m.set_coeff(e023, p.x);
    m.set_coeff(e013, -p.y);
    m.set_coeff(e012, p.z);
    m.set_coeff(e123, p.w);
    Ok(m)
}

/// Reads a point back from trivector components, normalizing by the
/// homogeneous e123 weight. Near-zero weight is an error rather than an
/// ideal-point feature.
pub fn extract_point(m: &Multivector) -> Result<PointG301> {
    let pga = m.algebra();
    check_pga(pga)?;
    let [e012, e013, e023, e123] = trivector_indices(pga);
    let w = m.coeff(e123);
    if w.abs() < 1e-12 {
        return Err(Error::ZeroWeightPoint { weight: w });
    }
    Ok(PointG301 {
        x: m.coeff(e023) / w,
        y: -m.coeff(e013) / w,
        z: m.coeff(e012) / w,
        w: 1.0,
    })
}

/// Motor translating points by the displacement (dx, dy, dz), built from
/// two reflections in parallel planes offset by half the displacement.
pub fn translation_motor(pga: &Arc<Algebra>, dx: f64, dy: f64, dz: f64) -> Result<Versor> {
    check_pga(pga)?;
    let len = (dx * dx + dy * dy + dz * dz).sqrt();
    if len == 0.0 {
        return Ok(Versor::identity(pga));
    }
    let (nx, ny, nz) = (dx / len, dy / len, dz / len);
    let first = PlaneG301::new(nx, ny, nz, 0.0)?.embed(pga)?;
    let second = PlaneG301::new(nx, ny, nz, len / 2.0)?.embed(pga)?;
    compose_reflections(&[first, second])
}
