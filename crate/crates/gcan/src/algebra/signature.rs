use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the vector-space dimension; bounds the 2^n blade count.
pub const MAX_DIM: usize = 8;

/// The signature (p, q, r) of a geometric algebra: p basis vectors squaring
/// to +1, q to -1, and r to 0.
///
/// The metric is ordered with the r null vectors first. When r > 0 the basis
/// vectors are labeled e0, e1, ... (e0 null, matching the projective
/// convention); when r = 0 they are labeled e1 ... en.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub p: usize,
    pub q: usize,
    pub r: usize,
}

impl Signature {
    pub fn new(p: usize, q: usize, r: usize) -> Result<Self> {
        let n = p + q + r;
        if n > MAX_DIM {
            return Err(Error::DimensionCap { n, cap: MAX_DIM });
        }
        Ok(Self { p, q, r })
    }

    /// Total dimension n = p + q + r.
    pub fn dim(&self) -> usize {
        self.p + self.q + self.r
    }

    /// Number of basis blades, 2^n.
    pub fn blade_count(&self) -> usize {
        1 << self.dim()
    }

    /// Square of the basis vector at internal position `i` (0-based).
    ///
    /// Order: the r null vectors occupy positions 0..r, then the p positive
    /// ones, then the q negative ones.
    pub fn metric(&self, i: usize) -> i8 {
        debug_assert!(i < self.dim());
        if i < self.r {
            0
        } else if i < self.r + self.p {
            1
        } else {
            -1
        }
    }

    /// Display label of the basis vector at internal position `i`.
    ///
    /// Labels start at 0 when the algebra has null vectors (e0 is null) and
    /// at 1 otherwise, so G(3,0,0) has e1,e2,e3 and G(3,0,1) has e0..e3.
    pub fn vector_label(&self, i: usize) -> usize {
        if self.r > 0 {
            i
        } else {
            i + 1
        }
    }

    /// Inverse of [`vector_label`]: internal position for a display label.
    pub fn position_of_label(&self, label: usize) -> Option<usize> {
        let pos = if self.r > 0 {
            label
        } else {
            label.checked_sub(1)?
        };
        (pos < self.dim()).then_some(pos)
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "G({},{},{})", self.p, self.q, self.r)
    }
}

impl std::str::FromStr for Signature {
    type Err = Error;

    /// Parses "p,q,r" (also accepts "p,q" and "p").
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(',').map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad signature component {t:?}")))
        });
        let p = parts.next().transpose()?.unwrap_or(0);
        let q = parts.next().transpose()?.unwrap_or(0);
        let r = parts.next().transpose()?.unwrap_or(0);
        if parts.next().is_some() {
            return Err(Error::Parse(format!("too many components in {s:?}")));
        }
        Signature::new(p, q, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_ordering_puts_null_vectors_first() {
        let sig = Signature::new(3, 0, 1).unwrap();
        assert_eq!(sig.metric(0), 0);
        assert_eq!(sig.metric(1), 1);
        assert_eq!(sig.metric(3), 1);

        let sig = Signature::new(1, 1, 0).unwrap();
        assert_eq!(sig.metric(0), 1);
        assert_eq!(sig.metric(1), -1);
    }

    #[test]
    fn labels_depend_on_degeneracy() {
        let pga = Signature::new(3, 0, 1).unwrap();
        assert_eq!(pga.vector_label(0), 0);
        assert_eq!(pga.position_of_label(0), Some(0));
        let euc = Signature::new(3, 0, 0).unwrap();
        assert_eq!(euc.vector_label(0), 1);
        assert_eq!(euc.position_of_label(1), Some(0));
        assert_eq!(euc.position_of_label(0), None);
    }

    #[test]
    fn dimension_cap() {
        assert!(Signature::new(9, 0, 0).is_err());
        assert!(Signature::new(4, 4, 0).is_ok());
    }

    #[test]
    fn parses_signature_strings() {
        let sig: Signature = "3,0,1".parse().unwrap();
        assert_eq!(sig, Signature { p: 3, q: 0, r: 1 });
        assert!("3,x,1".parse::<Signature>().is_err());
        assert!("1,2,3,4".parse::<Signature>().is_err());
    }
}
