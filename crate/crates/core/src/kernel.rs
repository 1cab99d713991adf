//! Gaussian feature maps over a fixed set of centers.
//!
//! Feature entries use `exp(-d^2 / 2 sigma^2)`; the squared norms `R` use
//! `exp(-d^2 / sigma^2)`, i.e. the sum of squared feature entries. Keeping the
//! two exponents distinct is what makes `rho e_t = sqrt(R_t) / M * f_hat(x_t)`
//! hold exactly.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::sq_dist;

/// Width heuristic: the largest pairwise distance divided by `sqrt(2M)`.
pub fn sigma_heuristic(ds: &Dataset) -> Result<f64> {
    let pts = ds.points();
    let m = pts.len();
    if m < 2 {
        return Err(Error::InvalidArgument("width heuristic needs at least 2 samples".into()));
    }
    let mut max_d2 = 0.0f64;
    for i in 0..m {
        for j in (i + 1)..m {
            max_d2 = max_d2.max(sq_dist(pts[i], pts[j]));
        }
    }
    if max_d2 == 0.0 {
        return Err(Error::Degenerate("all samples coincide; kernel width would be zero".into()));
    }
    Ok(max_d2.sqrt() / (2.0 * m as f64).sqrt())
}

/// Gaussian RBF model with the training samples as centers.
#[derive(Clone, Debug)]
pub struct KernelModel {
    centers: Vec<Vec<f64>>,
    sigma: f64,
    gram: Arc<DMatrix<f64>>,
    row_norms: Vec<f64>,
}

impl KernelModel {
    /// Centers from `ds`, width from [`sigma_heuristic`].
    pub fn fit(ds: &Dataset) -> Result<Self> {
        let sigma = sigma_heuristic(ds)?;
        Self::with_sigma(ds.samples().iter().map(|s| s.x.clone()).collect(), sigma)
    }

    pub fn with_sigma(centers: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        let m = centers.len();
        if m == 0 {
            return Err(Error::InvalidArgument("kernel model needs at least one center".into()));
        }
        let n = centers[0].len();
        if let Some(c) = centers.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: c.len() });
        }
        let two_s2 = 2.0 * sigma * sigma;
        // Filled in storage order; sq_dist is exactly symmetric, so is gram
        // and column sums equal row sums. exp(-d^2 / sigma^2) is the square
        // of the Gram entry.
        let mut row_norms = vec![0.0; m];
        let gram = DMatrix::from_fn(m, m, |s, t| {
            let k = if s == t { 1.0 } else { (-sq_dist(&centers[s], &centers[t]) / two_s2).exp() };
            row_norms[t] += k * k;
            k
        });
        Ok(Self { centers, sigma, gram: Arc::new(gram), row_norms })
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `R_t`, the squared norm of the feature vector of center `t`.
    pub fn row_norms(&self) -> &[f64] {
        &self.row_norms
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// `f(x)_t = exp(-|x - c_t|^2 / 2 sigma^2)`.
    pub fn feature_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let two_s2 = 2.0 * self.sigma * self.sigma;
        Ok(self.centers.iter().map(|c| (-sq_dist(x, c) / two_s2).exp()).collect())
    }

    /// Unit-norm feature state and its squared norm
    /// `R = sum_t exp(-|x - c_t|^2 / sigma^2)`.
    pub fn feature_state(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.check_dim(x)?;
        let s2 = self.sigma * self.sigma;
        let r: f64 = self.centers.iter().map(|c| (-sq_dist(x, c) / s2).exp()).sum();
        if r <= 0.0 {
            return Err(Error::Degenerate(
                "feature vector underflows to zero; input is far from every center".into(),
            ));
        }
        let scale = r.sqrt().recip();
        let mut f = self.feature_vector(x)?;
        f.iter_mut().for_each(|v| *v *= scale);
        Ok((f, r))
    }

    /// Raw or unit-norm feature of an arbitrary point.
    pub fn features(&self, x: &[f64], normalize: bool) -> Result<Vec<f64>> {
        if normalize {
            Ok(self.feature_state(x)?.0)
        } else {
            self.feature_vector(x)
        }
    }

    /// Row `t` holds the feature of center `t`: the Gram matrix itself, or
    /// each row scaled by `1/sqrt(R_t)` when `normalize` is set.
    pub fn training_features(&self, normalize: bool) -> DMatrix<f64> {
        if !normalize {
            return self.gram.as_ref().clone();
        }
        let scale: Vec<f64> = self.row_norms.iter().map(|r| r.sqrt().recip()).collect();
        DMatrix::from_fn(self.len(), self.len(), |t, s| self.gram[(t, s)] * scale[t])
    }

    /// Whether `ds` holds exactly this model's centers, in order.
    pub fn centered_on(&self, ds: &Dataset) -> bool {
        ds.len() == self.len() && ds.samples().iter().zip(&self.centers).all(|(s, c)| s.x == *c)
    }

    /// Shared handle to the Gram matrix, avoiding a copy.
    pub fn shared_gram(&self) -> Arc<DMatrix<f64>> {
        Arc::clone(&self.gram)
    }

    /// Feature rows for every sample of `ds` against this model's centers.
    /// When `ds` holds exactly the centers this is [`Self::training_features`].
    pub fn feature_rows(&self, ds: &Dataset, normalize: bool) -> Result<DMatrix<f64>> {
        if self.centered_on(ds) {
            return Ok(self.training_features(normalize));
        }
        // Columns of the transpose are contiguous, so build that first.
        let mut out = DMatrix::zeros(self.len(), ds.len());
        for (i, s) in ds.samples().iter().enumerate() {
            let f = self.features(&s.x, normalize)?;
            out.column_mut(i).copy_from_slice(&f);
        }
        Ok(out.transpose())
    }

    pub fn density_operator(&self) -> DensityOperator {
        DensityOperator { rho: self.gram.as_ref() / self.len() as f64 }
    }
}

/// The kernel matrix normalized to unit trace.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    pub rho: DMatrix<f64>,
}

impl DensityOperator {
    pub fn trace(&self) -> f64 {
        self.rho.trace()
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// `rho * e_t`, i.e. column `t`.
    pub fn apply_basis(&self, t: usize) -> Vec<f64> {
        self.rho.column(t).iter().copied().collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.rho.clone().symmetric_eigenvalues().iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Label, Sample};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_ds(m: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..m)
            .map(|i| {
                let x = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                Sample::new(x, if i % 2 == 0 { Label::Pos } else { Label::Neg })
            })
            .collect();
        Dataset::new(samples).unwrap()
    }

    fn ds_from(points: &[[f64; 2]]) -> Dataset {
        Dataset::new(points.iter().map(|p| Sample::new(p.to_vec(), Label::Pos)).collect()).unwrap()
    }

    #[test]
    fn sigma_two_points() {
        let ds = ds_from(&[[0.0, 0.0], [1.0, 0.0]]);
        assert_eq!(sigma_heuristic(&ds).unwrap(), 0.5);
    }

    #[test]
    fn sigma_homogeneous() {
        let ds = random_ds(16, 1);
        let s = sigma_heuristic(&ds).unwrap();
        let s3 = sigma_heuristic(&ds.scaled(3.0)).unwrap();
        assert!((s3 - 3.0 * s).abs() <= 1e-14 * s3);
    }

    #[test]
    fn sigma_matches_pair_scan() {
        let ds = random_ds(16, 2);
        let pts = ds.points();
        let mut best = 0.0f64;
        let mut pairs = 0;
        for i in 0..16 {
            for j in 0..16 {
                if i < j {
                    pairs += 1;
                    let d = ((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt();
                    best = best.max(d);
                }
            }
        }
        assert_eq!(pairs, 120);
        assert!((sigma_heuristic(&ds).unwrap() - best / 32f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sigma_rejects_coincident() {
        let ds = ds_from(&[[0.3, 0.3], [0.3, 0.3], [0.3, 0.3]]);
        assert!(matches!(sigma_heuristic(&ds), Err(Error::Degenerate(_))));
    }

    #[test]
    fn feature_vector_basics() {
        let ds = random_ds(8, 3);
        let model = KernelModel::fit(&ds).unwrap();
        for (t, c) in model.centers().iter().enumerate() {
            assert_eq!(model.feature_vector(c).unwrap()[t], 1.0);
        }
        let x = [0.1, -0.7];
        let f = model.feature_vector(&x).unwrap();
        for (t, c) in model.centers().iter().enumerate() {
            let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
            let expect = (-d2 / (2.0 * model.sigma().powi(2))).exp();
            assert!((f[t] - expect).abs() < 1e-15);
            assert!(f[t] > 0.0 && f[t] <= 1.0);
        }
        assert!(model.feature_vector(&[0.0]).is_err());
    }

    #[test]
    fn feature_half_at_critical_distance() {
        let sigma = 0.3;
        let d = sigma * (2.0 * 2f64.ln()).sqrt();
        let model = KernelModel::with_sigma(vec![vec![d, 0.0], vec![-d, 0.0], vec![0.0, d]], sigma).unwrap();
        for v in model.feature_vector(&[0.0, 0.0]).unwrap() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn feature_state_normalization() {
        let model = KernelModel::with_sigma(vec![vec![0.2, 0.1]], 0.5).unwrap();
        let (f, r) = model.feature_state(&[0.0, 0.0]).unwrap();
        assert!((f[0] - 1.0).abs() < 1e-15);
        assert!((r - (-0.05f64 / 0.25).exp()).abs() < 1e-15);

        let ds = random_ds(8, 4);
        let model = KernelModel::fit(&ds).unwrap();
        for (t, c) in model.centers().iter().enumerate() {
            let (f, r) = model.feature_state(c).unwrap();
            assert!((r - model.row_norms()[t]).abs() < 1e-12);
            let norm: f64 = f.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gram_invariants() {
        let model = KernelModel::fit(&random_ds(16, 5)).unwrap();
        let g = model.gram();
        for s in 0..16 {
            assert_eq!(g[(s, s)], 1.0);
            for t in 0..16 {
                assert_eq!(g[(s, t)], g[(t, s)]);
                assert!(g[(s, t)] > 0.0 && g[(s, t)] <= 1.0);
            }
            assert!(model.row_norms()[s] >= 1.0);
        }
    }

    #[test]
    fn density_operator_small_cases() {
        let model = KernelModel::with_sigma(vec![vec![0.4, 0.4]], 1.0).unwrap();
        assert_eq!(model.density_operator().rho[(0, 0)], 1.0);

        let model = KernelModel::with_sigma(vec![vec![0.4, 0.4], vec![0.4, 0.4]], 1.0).unwrap();
        let rho = model.density_operator();
        for v in rho.rho.iter() {
            assert_eq!(*v, 0.5);
        }
        let mut ev = rho.eigenvalues();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(ev[0].abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn density_operator_basis_action() {
        let model = KernelModel::fit(&random_ds(8, 6)).unwrap();
        let rho = model.density_operator();
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        for (t, c) in model.centers().iter().enumerate() {
            let (f, _) = model.feature_state(c).unwrap();
            let scale = model.row_norms()[t].sqrt() / 8.0;
            for (a, b) in rho.apply_basis(t).iter().zip(&f) {
                assert!((a - scale * b).abs() <= 1e-12);
            }
        }
        assert!(rho.eigenvalues().iter().all(|&e| e >= -1e-12));
    }

    #[test]
    fn shift_invariance() {
        let ds = random_ds(12, 7);
        let a = KernelModel::fit(&ds).unwrap();
        let b = KernelModel::fit(&ds.translated(&[3.5, -1.25]).unwrap()).unwrap();
        assert!((a.gram() - b.gram()).amax() < 1e-12);
        for (x, y) in a.row_norms().iter().zip(b.row_norms()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
