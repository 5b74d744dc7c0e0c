//! Multivariate normal sampling through a Cholesky factor.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::RngStream;

const SYMMETRY_TOL: f64 = 1e-10;

/// Lower-triangular `L` with `L Lᵀ = a`. Fails on the first leading minor
/// that is not positive, reporting its order (1-based).
pub fn cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!("matrix is {}x{}, expected square", n, a.ncols())));
    }
    for i in 0..n {
        for j in 0..i {
            let scale = a[(i, j)].abs().max(a[(j, i)].abs()).max(1.0);
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite { minor: j + 1 });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// `n` draws (one per row) from `Normal(mean, cov)`.
pub fn mvn_sample(
    mean: &[f64],
    cov: &DMatrix<f64>,
    rng: &mut RngStream,
    n: usize,
) -> Result<DMatrix<f64>> {
    let dim = mean.len();
    if cov.nrows() != dim {
        return Err(Error::Dimension(format!(
            "mean has length {dim} but covariance is {}x{}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    let l = cholesky(cov)?;
    let mut out = DMatrix::<f64>::zeros(n, dim);
    let mut z = DVector::<f64>::zeros(dim);
    for row in 0..n {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(rng);
        }
        for i in 0..dim {
            let mut v = mean[i];
            for k in 0..=i {
                v += l[(i, k)] * z[k];
            }
            out[(row, i)] = v;
        }
    }
    Ok(out)
}

/// Sample covariance of the rows of `draws` (denominator `n - 1`).
pub fn sample_covariance(draws: &DMatrix<f64>) -> DMatrix<f64> {
    let n = draws.nrows() as f64;
    let means: Vec<f64> = (0..draws.ncols()).map(|j| draws.column(j).sum() / n).collect();
    let dim = draws.ncols();
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..=i {
            let s: f64 = draws
                .column(i)
                .iter()
                .zip(draws.column(j).iter())
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .sum();
            cov[(i, j)] = s / (n - 1.0);
            cov[(j, i)] = cov[(i, j)];
        }
    }
    cov
}
