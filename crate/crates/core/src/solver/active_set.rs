//! Primal active-set solver for the small quadratic programs behind every
//! unmixing step:
//!
//! ```text
//! minimize  ½ aᵀ G a − cᵀ a   subject to  a ≥ 0  [and  1ᵀ a = 1]
//! ```
//!
//! with `G = SᵀS` positive definite. This is `‖x − S a‖²` up to a constant
//! when `c = Sᵀx`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solution of one constrained least-squares problem.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub a: DVector<f64>,
    /// Multiplier of the sum-to-one constraint (zero without it).
    pub nu: f64,
    pub iterations: usize,
}

/// Multiplier of the bound `a_i ≥ 0` at `a`: `(G a − c)_i + ν`.
///
/// At a KKT point these are zero on the free set and non-negative on the
/// active set.
pub fn bound_multipliers(gram: &DMatrix<f64>, c: &DVector<f64>, a: &DVector<f64>, nu: f64) -> DVector<f64> {
    (gram * a - c).add_scalar(nu)
}

/// Solves the equality-constrained subproblem restricted to `free`.
/// Returns the minimizer on the free coordinates and the equality multiplier.
fn solve_free(gram: &DMatrix<f64>, c: &DVector<f64>, free: &[usize], sum_to_one: bool) -> Result<(Vec<f64>, f64)> {
    let k = free.len();
    if k == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let sub = DMatrix::from_fn(k, k, |i, j| gram[(free[i], free[j])]);
    let rhs = DVector::from_fn(k, |i, _| c[free[i]]);
    let chol = sub
        .clone()
        .cholesky()
        .ok_or(Error::RankDeficient { rank: k - 1, cols: k })?;
    // Pivots relative to the diagonal are invariant to column scaling.
    let l = chol.l_dirty();
    if (0..k).any(|i| !(l[(i, i)] * l[(i, i)] > 1e-14 * sub[(i, i)])) {
        return Err(Error::RankDeficient { rank: k - 1, cols: k });
    }
    let y = chol.solve(&rhs);
    if !sum_to_one {
        return Ok((y.iter().copied().collect(), 0.0));
    }
    let w = chol.solve(&DVector::from_element(k, 1.0));
    let nu = (y.sum() - 1.0) / w.sum();
    let t = y - w * nu;
    Ok((t.iter().copied().collect(), nu))
}

/// Minimizes `½ aᵀ G a − cᵀ a` over `a ≥ 0`, optionally with `Σ a = 1`.
///
/// Without the sum constraint the iteration starts from `a = 0` with every
/// bound active; with it, from the barycenter with no active bounds. Among
/// violated multipliers the most negative enters the free set; ties, and ties
/// between blocking constraints, resolve to the lowest index.
pub fn solve(gram: &DMatrix<f64>, c: &DVector<f64>, sum_to_one: bool) -> Result<QpSolution> {
    let p = gram.nrows();
    if gram.ncols() != p || c.len() != p {
        return Err(Error::dim(format!(
            "gram matrix is {}x{}, linear term has {} entries",
            gram.nrows(),
            gram.ncols(),
            c.len()
        )));
    }
    if p == 0 {
        return Err(Error::invalid("no endmembers"));
    }

    let scale = c
        .iter()
        .map(|v| v.abs())
        .chain(gram.diagonal().iter().copied())
        .fold(f64::MIN_POSITIVE, f64::max);
    let mult_tol = 1e-13 * scale;

    let mut a = DVector::zeros(p);
    let mut is_free = vec![false; p];
    if sum_to_one {
        a.fill(1.0 / p as f64);
        is_free.fill(true);
    }

    let max_iter = 50 * p + 100;
    let mut nu = 0.0;
    for iter in 1..=max_iter {
        let free: Vec<usize> = (0..p).filter(|&i| is_free[i]).collect();
        let (target, nu_free) = solve_free(gram, c, &free, sum_to_one)?;

        // Step toward the subproblem minimizer, stopping at the first bound hit.
        let mut alpha = 1.0;
        let mut blocking = None;
        for (t, &i) in target.iter().zip(&free) {
            let step = t - a[i];
            if *t < 0.0 && step < 0.0 {
                let ratio = -a[i] / step;
                if ratio < alpha {
                    alpha = ratio;
                    blocking = Some(i);
                }
            }
        }

        match blocking {
            Some(b) => {
                for (t, &i) in target.iter().zip(&free) {
                    a[i] += alpha * (t - a[i]);
                }
                a[b] = 0.0;
                is_free[b] = false;
            }
            None => {
                for (t, &i) in target.iter().zip(&free) {
                    a[i] = *t;
                }
                nu = nu_free;
                let mu = bound_multipliers(gram, c, &a, nu);
                let mut entering: Option<usize> = None;
                for i in (0..p).filter(|&i| !is_free[i]) {
                    if mu[i] < -mult_tol && entering.is_none_or(|e| mu[i] < mu[e]) {
                        entering = Some(i);
                    }
                }
                match entering {
                    Some(i) => is_free[i] = true,
                    None => {
                        return Ok(QpSolution {
                            a,
                            nu,
                            iterations: iter,
                        })
                    }
                }
            }
        }
    }

    // Not reached for positive definite problems; return the last feasible point.
    Ok(QpSolution {
        a,
        nu,
        iterations: max_iter,
    })
}
