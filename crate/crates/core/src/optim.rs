//! Small derivative-free and finite-difference numerics shared by the mode
//! finder and the beta elicitation solver.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead minimization of `f` from `x0`. Non-finite values are treated as
/// `+inf`, so constrained problems can signal infeasibility that way.
/// Stops when the spread of simplex values falls below `ftol` or after
/// `max_evals` evaluations.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], scale: f64, ftol: f64, max_evals: usize) -> Minimum {
    let n = x0.len();
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i] == 0.0 { scale } else { scale * v[i].abs().max(1.0) };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    while evals.get() < max_evals {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        values = idx.iter().map(|&i| values[i]).collect();

        let spread = (values[n] - values[0]).abs();
        if values[0].is_finite() && spread <= ftol * (1.0 + values[0].abs()) {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let xr = along(-alpha);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(-gamma);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(-rho);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, v)| b + sigma * (v - b))
                .collect();
            values[i] = eval(&shrunk);
            simplex[i] = shrunk;
        }
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        fx: values[best],
        evaluations: evals.get(),
        converged,
    }
}

/// Per-coordinate step `rel * (1 + |x_i|)`.
pub fn fd_step(x: f64, rel: f64) -> f64 {
    rel * (1.0 + x.abs())
}

/// Central-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], rel: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = fd_step(x[i], rel);
            xp[i] = x[i] + h;
            let up = f(&xp);
            xp[i] = x[i] - h;
            let down = f(&xp);
            xp[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Symmetrized central-difference Hessian. Any non-finite value inside the
/// stencil is an error naming the offending point.
pub fn fd_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64], rel: f64) -> Result<DMatrix<f64>> {
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|&xi| fd_step(xi, rel)).collect();
    let at = |shifts: &[(usize, f64)]| -> Result<f64> {
        let mut p = x.to_vec();
        for &(i, s) in shifts {
            p[i] += s * h[i];
        }
        let v = f(&p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Stencil { point: p })
        }
    };
    let f0 = at(&[])?;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let up = at(&[(i, 1.0)])?;
        let down = at(&[(i, -1.0)])?;
        m[(i, i)] = (up - 2.0 * f0 + down) / (h[i] * h[i]);
        for j in 0..i {
            let pp = at(&[(i, 1.0), (j, 1.0)])?;
            let pm = at(&[(i, 1.0), (j, -1.0)])?;
            let mp = at(&[(i, -1.0), (j, 1.0)])?;
            let mm = at(&[(i, -1.0), (j, -1.0)])?;
            let v = (pp - pm - mp + mm) / (4.0 * h[i] * h[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok((&m + m.transpose()) * 0.5)
}

/// Solve `a x = b` by LU, `None` when singular.
pub(crate) fn solve(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    a.clone()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .map(|v| v.iter().copied().collect())
}

/// Max-norm; NaN entries make it infinite.
pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter()
        .fold(0.0, |m: f64, x| if x.is_nan() { f64::INFINITY } else { m.max(x.abs()) })
}
