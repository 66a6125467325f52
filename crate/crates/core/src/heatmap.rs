//! Plain-text grayscale (PGM `P2`) rendering of kernel matrices.

use std::fmt::Write as _;

use nalgebra::DMatrix;

/// Sample order that groups classes together, stable within a class.
pub fn class_order(labels: &[usize]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..labels.len()).collect();
    idx.sort_by_key(|&i| labels[i]);
    idx
}

/// Gray level for a kernel value: 0 maps to white (255), 1 to black (0).
/// Values are clamped to `[0, 1]`.
pub fn gray(v: f64) -> u8 {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (255.0 * (1.0 - v)).round() as u8
}

/// Pixel grid for `k` with rows and columns permuted by `order`.
pub fn pixels(k: &DMatrix<f64>, order: &[usize]) -> Vec<Vec<u8>> {
    order
        .iter()
        .map(|&i| order.iter().map(|&j| gray(k[(i, j)])).collect())
        .collect()
}

/// PGM text for `k` with samples sorted by class.
pub fn render_pgm(k: &DMatrix<f64>, labels: &[usize]) -> String {
    let px = pixels(k, &class_order(labels));
    let n = px.len();
    let mut out = format!("P2\n{n} {n}\n255\n");
    for row in px {
        let line: Vec<String> = row.iter().map(u8::to_string).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

/// Mean pixel value inside the class blocks and outside them.
pub fn block_means(k: &DMatrix<f64>, labels: &[usize]) -> (f64, f64) {
    let (mut inside, mut ni, mut outside, mut no) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            let p = f64::from(gray(k[(i, j)]));
            if labels[i] == labels[j] {
                inside += p;
                ni += 1;
            } else {
                outside += p;
                no += 1;
            }
        }
    }
    (inside / ni.max(1) as f64, outside / no.max(1) as f64)
}
