#![allow(dead_code)]

use topicrate::synthgen::{DocLength, GeneratorSpec};
use topicrate::Matrix;

/// Block topics where each block also has one clearly modal word, at
/// offset 3 within the block.
pub fn peaked_topics(k: usize, v: usize) -> Matrix {
    let block = v / k;
    let mut phi = Matrix::zeros(k, v);
    for t in 0..k {
        let row = phi.row_mut(t);
        for x in row.iter_mut() {
            *x = 0.1 / v as f64;
        }
        for x in &mut row[t * block..(t + 1) * block] {
            *x += 0.7 / block as f64;
        }
        row[t * block + 3] += 0.2;
    }
    phi
}

pub fn spec(phi: Matrix, docs: usize, len: usize, alpha: f64, seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        planted_phi: phi,
        alpha,
        doc_count: docs,
        doc_length: DocLength::Fixed(len),
        fixed_theta: None,
        label_plan: None,
        seed,
    }
}

pub fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
        .0
}
