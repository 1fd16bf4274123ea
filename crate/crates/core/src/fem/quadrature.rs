//! Quadrature rules on the reference triangle and segment.

/// Degree-5, 7-point rule: (barycentric coordinates, weight), weights sum to 1.
pub fn triangle_deg5() -> [([f64; 3], f64); 7] {
    let s15 = 15f64.sqrt();
    let r1 = (6.0 - s15) / 21.0;
    let r2 = (6.0 + s15) / 21.0;
    let w1 = (155.0 - s15) / 1200.0;
    let w2 = (155.0 + s15) / 1200.0;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([r1, r1, 1.0 - 2.0 * r1], w1),
        ([r1, 1.0 - 2.0 * r1, r1], w1),
        ([1.0 - 2.0 * r1, r1, r1], w1),
        ([r2, r2, 1.0 - 2.0 * r2], w2),
        ([r2, 1.0 - 2.0 * r2, r2], w2),
        ([1.0 - 2.0 * r2, r2, r2], w2),
    ]
}

/// Gauss–Legendre on [0, 1]: (abscissa, weight), weights sum to 1.
pub fn gauss_segment(points: usize) -> Vec<(f64, f64)> {
    match points {
        1 => vec![(0.5, 1.0)],
        2 => {
            let d = 0.5 / 3f64.sqrt();
            vec![(0.5 - d, 0.5), (0.5 + d, 0.5)]
        }
        3 => {
            let d = 0.5 * (0.6f64).sqrt();
            vec![(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
        }
        _ => panic!("unsupported Gauss rule with {points} points"),
    }
}
