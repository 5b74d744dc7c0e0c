//! Posterior modes, finite-difference Hessians and normal approximations.

use std::cell::Cell;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::discrete::GridPosterior;
use crate::dist::DistSpec;
use crate::error::{Error, Result};
use crate::models::{self, TwoGroupData};
use crate::mvn::cholesky;
use crate::optim::{fd_gradient, fd_hessian, max_abs, nelder_mead, solve};

const GRAD_STEP: f64 = 1e-5;
const HESS_STEP: f64 = 1e-4;
const GRAD_TOL: f64 = 1e-6;
const MAX_EVALS: usize = 10_000;

/// A log density known up to an additive constant.
///
/// `eval` should return `-inf` off the support; NaN is mapped to `-inf`.
#[derive(Clone)]
pub struct LogPosterior {
    pub dim: usize,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub support_note: String,
}

impl fmt::Debug for LogPosterior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LogPosterior")
            .field("dim", &self.dim)
            .field("support_note", &self.support_note)
            .finish_non_exhaustive()
    }
}

impl LogPosterior {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            dim,
            f: Arc::new(f),
            support_note: String::new(),
        }
    }

    /// A one-parameter log density.
    pub fn scalar(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(1, move |x: &[f64]| f(x[0]))
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.support_note = note.into();
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let v = (self.f)(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    /// The same density plus a constant.
    pub fn shifted(&self, c: f64) -> Self {
        let f = Arc::clone(&self.f);
        Self {
            dim: self.dim,
            f: Arc::new(move |x: &[f64]| f(x) + c),
            support_note: self.support_note.clone(),
        }
    }

    /// The two-group logistic posterior over `(beta0, beta1)`.
    pub fn two_group_logistic(d: TwoGroupData) -> Self {
        Self::new(2, move |b: &[f64]| models::two_group_logistic_logpost(&d, b))
            .with_note("beta0 and beta1 are unconstrained")
    }

    /// The commute-time posterior for a normal standard deviation.
    pub fn commute_sd() -> Self {
        Self::scalar(models::commute_sd_logpost()).with_note("sigma > 0; -inf elsewhere")
    }
}

mod rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("covariance must be square"));
        }
        Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }
}

/// A normal approximation centred at the posterior mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalApprox {
    pub mode: Vec<f64>,
    #[serde(with = "rows")]
    pub cov: DMatrix<f64>,
    pub logpost_at_mode: f64,
}

/// Maximize `lp` from `init`: a simplex search, then Newton steps using
/// finite-difference derivatives until the gradient max-norm is at most 1e-6.
pub fn find_mode(lp: &LogPosterior, init: &[f64]) -> Result<Vec<f64>> {
    if init.len() != lp.dim {
        return Err(Error::Dimension(format!("init has {} coordinates, expected {}", init.len(), lp.dim)));
    }
    if !lp.eval(init).is_finite() {
        return Err(Error::Domain("log posterior is not finite at the initial value".into()));
    }
    let evals = Cell::new(0usize);
    let f = |x: &[f64]| {
        evals.set(evals.get() + 1);
        lp.eval(x)
    };

    let nm = nelder_mead(|x| -f(x), init, 0.5, 1e-12, MAX_EVALS / 2);
    let mut x = nm.x;
    let mut fx = -nm.fx;

    while evals.get() < MAX_EVALS {
        let g = fd_gradient(f, &x, GRAD_STEP);
        if max_abs(&g) <= GRAD_TOL {
            return Ok(x);
        }
        let newton = fd_hessian(f, &x, HESS_STEP)
            .ok()
            .filter(|h| cholesky(&(-h)).is_ok())
            .and_then(|h| solve(&h, &g));
        let (dir, accept_flat) = match newton {
            // Newton step x - H^{-1} g; near the mode it is trusted even when
            // the change in lp is below roundoff
            Some(step) => (step.iter().map(|s| -s).collect::<Vec<_>>(), true),
            None => (g.clone(), false),
        };
        let slack = if accept_flat { 1e-12 * (1.0 + fx.abs()) } else { 0.0 };
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-10 && evals.get() < MAX_EVALS {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(xi, d)| xi + t * d).collect();
            let fc = f(&cand);
            if fc.is_finite() && cand.iter().all(|c| c.is_finite()) && fc >= fx - slack {
                x = cand;
                fx = fc.max(fx);
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Err(Error::NoConvergence {
        best: x,
        evaluations: evals.get(),
    })
}

/// Symmetric central-difference Hessian of `lp` at `x` with steps
/// `1e-4 (1 + |x_i|)`.
pub fn hessian_fd(lp: &LogPosterior, x: &[f64]) -> Result<DMatrix<f64>> {
    if x.len() != lp.dim {
        return Err(Error::Dimension(format!("point has {} coordinates, expected {}", x.len(), lp.dim)));
    }
    fd_hessian(|p| lp.eval(p), x, HESS_STEP)
}

/// Mode plus the inverse of the negated Hessian there.
pub fn laplace_fit(lp: &LogPosterior, init: &[f64]) -> Result<NormalApprox> {
    let mode = find_mode(lp, init)?;
    let h = hessian_fd(lp, &mode)?;
    let neg = -h;
    let l = match cholesky(&neg) {
        Ok(l) => l,
        Err(_) => {
            let eig = SymmetricEigen::new(neg.clone());
            return Err(Error::NotAMaximum {
                eigenvalues: eig.eigenvalues.iter().map(|e| -e).collect(),
            });
        }
    };
    let n = lp.dim;
    let linv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .expect("cholesky factor has a positive diagonal");
    let cov = linv.transpose() * &linv;
    let cov = (&cov + cov.transpose()) * 0.5;
    let logpost_at_mode = lp.eval(&mode);
    Ok(NormalApprox {
        mode,
        cov,
        logpost_at_mode,
    })
}

/// Normal distribution of `coef . theta` under the approximation.
pub fn marginal(na: &NormalApprox, coef: &[f64]) -> Result<DistSpec> {
    if coef.len() != na.mode.len() {
        return Err(Error::Dimension(format!(
            "coefficient vector has {} entries, expected {}",
            coef.len(),
            na.mode.len()
        )));
    }
    let mean: f64 = coef.iter().zip(&na.mode).map(|(c, m)| c * m).sum();
    let mut var = 0.0;
    for (i, ci) in coef.iter().enumerate() {
        for (j, cj) in coef.iter().enumerate() {
            var += ci * na.cov[(i, j)] * cj;
        }
    }
    if var <= 0.0 {
        return Err(Error::Domain(format!("linear combination has variance {var}")));
    }
    DistSpec::normal(mean, var.sqrt())
}

/// Default integration box for the two-group logistic example.
pub const LOGISTIC_BOX: [(f64, f64); 2] = [(-3.0, 2.0), (-2.0, 3.0)];

/// Marginal of coordinate `coord` of a two-parameter posterior, computed by
/// summing the product grid over the other coordinate. Each axis has
/// `steps + 1` points.
pub fn grid_marginal(lp: &LogPosterior, bounds: [(f64, f64); 2], steps: usize, coord: usize) -> Result<GridPosterior> {
    if lp.dim != 2 {
        return Err(Error::Dimension(format!("grid marginal needs dim 2, got {}", lp.dim)));
    }
    if coord > 1 {
        return Err(Error::Dimension(format!("coordinate {coord} out of range")));
    }
    if steps < 50 {
        return Err(Error::Domain(format!("need at least 50 steps per axis, got {steps}")));
    }
    for (lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Domain(format!("bad grid bounds ({lo}, {hi})")));
        }
    }
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect()
    };
    let xs = axis(bounds[0]);
    let ys = axis(bounds[1]);
    let mut vals = vec![f64::NEG_INFINITY; xs.len() * ys.len()];
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in ys.iter().enumerate() {
            vals[i * ys.len() + j] = lp.eval(&[*x, *y]);
        }
    }
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Contradiction("log posterior is -inf on the whole grid".into()));
    }
    let (keep, other) = if coord == 0 { (&xs, &ys) } else { (&ys, &xs) };
    let log_marg: Vec<f64> = (0..keep.len())
        .map(|k| {
            let s: f64 = (0..other.len())
                .map(|o| {
                    let idx = if coord == 0 { k * ys.len() + o } else { o * ys.len() + k };
                    (vals[idx] - max).exp()
                })
                .sum();
            s.ln() + max
        })
        .collect();
    let (lo, hi) = bounds[coord];
    GridPosterior::from_log_post(keep.clone(), (hi - lo) / steps as f64, log_marg)
}

/// Apply `h` to each row of a draws matrix.
pub fn transform_draws(draws: &DMatrix<f64>, h: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut row = vec![0.0; draws.ncols()];
    (0..draws.nrows())
        .map(|i| {
            for (j, r) in row.iter_mut().enumerate() {
                *r = draws[(i, j)];
            }
            h(&row)
        })
        .collect()
}
