use super::signature::Signature;

/// A basis blade: a product of distinct basis vectors, stored as a bitmask
/// over internal vector positions (bit b set = vector at position b).
///
/// The empty mask is the scalar blade; the full mask is the pseudoscalar I.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisBlade {
    pub mask: u32,
}

impl BasisBlade {
    pub const SCALAR: BasisBlade = BasisBlade { mask: 0 };

    pub fn from_positions(positions: &[usize]) -> Self {
        let mut mask = 0u32;
        for &p in positions {
            debug_assert!(mask & (1 << p) == 0, "repeated basis vector");
            mask |= 1 << p;
        }
        BasisBlade { mask }
    }

    pub fn grade(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// Internal vector positions in increasing order.
    pub fn positions(&self) -> Vec<usize> {
        (0..32).filter(|b| self.mask & (1 << b) != 0).collect()
    }

    /// Sign of grade reversion, (-1)^(k(k-1)/2) for grade k.
    pub fn reversion_sign(&self) -> f64 {
        let k = self.grade();
        if (k * k.saturating_sub(1) / 2) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Display name under a signature's labeling, e.g. "1", "e1", "e012".
    pub fn name(&self, sig: &Signature) -> String {
        if self.mask == 0 {
            return "1".to_string();
        }
        let mut s = String::from("e");
        for pos in self.positions() {
            s.push_str(&sig.vector_label(pos).to_string());
        }
        s
    }
}

/// Canonical blade order for an algebra: grade-major, then lexicographic by
/// the sorted index tuple within a grade.
///
/// Everything in the crate (coefficient layout, Cayley tables, serialized
/// data) derives from this single ordering.
pub fn canonical_blade_order(n: usize) -> Vec<BasisBlade> {
    let mut blades: Vec<BasisBlade> = (0..(1u32 << n)).map(|mask| BasisBlade { mask }).collect();
    blades.sort_by(|a, b| {
        a.grade()
            .cmp(&b.grade())
            .then_with(|| a.positions().cmp(&b.positions()))
    });
    blades
}
