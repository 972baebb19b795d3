use super::blade::{canonical_blade_order, BasisBlade};
use super::signature::Signature;
use crate::error::Result;

/// Signed blade-by-blade multiplication table.
///
/// For blade indices (j, k) in canonical order, `target` gives the index of
/// the product blade and `sign` its coefficient in {-1, 0, +1}. The sign of
/// e_A * e_B is (-1)^(number of transpositions to sort the concatenation)
/// times the product of the metric over repeated basis vectors; it is zero
/// exactly when a repeated vector is null.
#[derive(Clone, Debug)]
pub struct CayleyTable {
    sig: Signature,
    blades: Vec<BasisBlade>,
    index_of_mask: Vec<usize>,
    target: Vec<u16>,
    sign: Vec<f64>,
}

/// Transposition parity for merging two sorted index sets: counts pairs
/// (j in a, i in b) with j > i.
fn reorder_sign(a: u32, b: u32) -> f64 {
    let mut shifted = a >> 1;
    let mut swaps = 0u32;
    while shifted != 0 {
        swaps += (shifted & b).count_ones();
        shifted >>= 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl CayleyTable {
    pub fn build(sig: Signature) -> Result<Self> {
        let n = sig.dim();
        let blades = canonical_blade_order(n);
        let dim = blades.len();
        let mut index_of_mask = vec![0usize; dim];
        for (i, b) in blades.iter().enumerate() {
            index_of_mask[b.mask as usize] = i;
        }

        let mut target = vec![0u16; dim * dim];
        let mut sign = vec![0.0f64; dim * dim];
        for (j, bj) in blades.iter().enumerate() {
            for (k, bk) in blades.iter().enumerate() {
                let mut s = reorder_sign(bj.mask, bk.mask);
                let shared = bj.mask & bk.mask;
                for pos in 0..n {
                    if shared & (1 << pos) != 0 {
                        s *= sig.metric(pos) as f64;
                    }
                }
                let out_mask = bj.mask ^ bk.mask;
                target[j * dim + k] = index_of_mask[out_mask as usize] as u16;
                sign[j * dim + k] = s;
            }
        }
        Ok(Self {
            sig,
            blades,
            index_of_mask,
            target,
            sign,
        })
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    /// Number of blades, 2^n.
    pub fn dim(&self) -> usize {
        self.blades.len()
    }

    pub fn blades(&self) -> &[BasisBlade] {
        &self.blades
    }

    pub fn blade(&self, index: usize) -> BasisBlade {
        self.blades[index]
    }

    pub fn index_of(&self, blade: BasisBlade) -> usize {
        self.index_of_mask[blade.mask as usize]
    }

    /// Product of the blades at indices (j, k): (result index, sign).
    pub fn product(&self, j: usize, k: usize) -> (usize, f64) {
        let at = j * self.dim() + k;
        (self.target[at] as usize, self.sign[at])
    }

    /// Three-tensor view: M[i][j][k] in {-1, 0, +1}.
    pub fn tensor(&self, i: usize, j: usize, k: usize) -> f64 {
        let (t, s) = self.product(j, k);
        if t == i {
            s
        } else {
            0.0
        }
    }

    /// Test hook: flips the sign of one table entry. Breaks the table on
    /// purpose so verification suites can prove they detect corruption.
    #[doc(hidden)]
    pub fn corrupt_entry_for_test(&mut self, j: usize, k: usize) {
        let dim = self.dim();
        let at = j * dim + k;
        self.sign[at] = if self.sign[at] == 0.0 {
            1.0
        } else {
            -self.sign[at]
        };
    }

    /// Renders the table as an aligned text grid of signed blade names.
    pub fn render_grid(&self) -> String {
        let names: Vec<String> = self.blades.iter().map(|b| b.name(&self.sig)).collect();
        let dim = self.dim();
        let mut cells = vec![vec![String::new(); dim + 1]; dim + 1];
        cells[0][0] = "*".to_string();
        for (i, name) in names.iter().enumerate() {
            cells[0][i + 1] = name.clone();
            cells[i + 1][0] = name.clone();
        }
        for j in 0..dim {
            for k in 0..dim {
                let (t, s) = self.product(j, k);
                cells[j + 1][k + 1] = if s == 0.0 {
                    "0".to_string()
                } else if s > 0.0 {
                    names[t].clone()
                } else {
                    format!("-{}", names[t])
                };
            }
        }
        let mut widths = vec![0usize; dim + 1];
        for row in &cells {
            for (c, cell) in row.iter().enumerate() {
                widths[c] = widths[c].max(cell.len());
            }
        }
        let mut out = String::new();
        for row in &cells {
            for (c, cell) in row.iter().enumerate() {
                if c > 0 {
                    out.push(' ');
                }
                out.push_str(&format!("{:>width$}", cell, width = widths[c]));
            }
            out.push('\n');
        }
        out
    }
}
