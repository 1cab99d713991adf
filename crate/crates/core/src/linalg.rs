use nalgebra::{DMatrix, DVector};

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
pub(crate) fn spectral_radius_psd(a: &DMatrix<f64>, iters: usize) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = a * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        lambda = v.dot(&w);
        v = w / nw;
    }
    lambda.max(0.0)
}

pub(crate) fn mat_vec(a: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (a * DVector::from_column_slice(v)).as_slice().to_vec()
}

pub(crate) fn mat_t_vec(a: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (a.tr_mul(&DVector::from_column_slice(v))).as_slice().to_vec()
}
