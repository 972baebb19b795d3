/// The eight canonical 4-cell tetromino point sets on the unit grid.
/// Coordinates are listed in docs/data_formats.md; every shape is centered
/// at its centroid before use.
pub const TETROMINOES: [[[f64; 3]; 4]; 8] = [
    // chiral L (left-handed)
    [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0]],
    // chiral L (right-handed)
    [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [1.0, -1.0, 0.0]],
    // square
    [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]],
    // line
    [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 2.0], [0.0, 0.0, 3.0]],
    // corner
    [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]],
    // L
    [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 2.0], [0.0, 1.0, 0.0]],
    // T
    [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 2.0], [0.0, 1.0, 1.0]],
    // zigzag
    [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [2.0, 1.0, 0.0]],
];

/// Shape `index`, centered at its centroid.
pub fn centered_shape(index: usize) -> [[f64; 3]; 4] {
    let shape = TETROMINOES[index];
    let mut centroid = [0.0; 3];
    for p in &shape {
        for (c, v) in centroid.iter_mut().zip(p) {
            *c += v / 4.0;
        }
    }
    let mut out = shape;
    for p in &mut out {
        for (v, c) in p.iter_mut().zip(&centroid) {
            *v -= c;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_shapes_have_zero_centroid_and_four_distinct_points() {
        for i in 0..8 {
            let s = centered_shape(i);
            for axis in 0..3 {
                let sum: f64 = s.iter().map(|p| p[axis]).sum();
                assert!(sum.abs() < 1e-12);
            }
            for a in 0..4 {
                for b in (a + 1)..4 {
                    let d: f64 = (0..3).map(|k| (s[a][k] - s[b][k]).powi(2)).sum();
                    assert!(d > 0.5, "shape {i} has coincident points");
                }
            }
        }
    }
}
