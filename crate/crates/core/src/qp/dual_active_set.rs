//! Goldfarb–Idnani dual active-set method.
//!
//! Constraints are handled in the form `nᵢᵀ z ≥ bᵢ`. The method keeps
//! `J = L⁻ᵀ` (with `H = L Lᵀ`) and an upper-triangular `R` such that
//! `Jᵀ N_active = [R; 0]`, updated by Givens rotations on every add/drop.

use nalgebra::{DMatrix, DVector};

use super::{check_kkt, KktCandidate, Multipliers, QpProblem, QpSolution, QpStatus, Tolerances, REGULARIZATION};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// `−G_r z ≥ −h_r`
    Row(usize),
    /// `z_j ≥ lower_j`
    Lower(usize),
    /// `−z_j ≥ −upper_j`
    Upper(usize),
}

struct Constraint {
    kind: Kind,
    rhs: f64,
    norm: f64,
}

struct Rows {
    /// Sparse `−G_r` per row.
    entries: Vec<Vec<(usize, f64)>>,
}

impl Rows {
    fn dot(&self, kind: Kind, v: &DVector<f64>) -> f64 {
        match kind {
            Kind::Row(r) => self.entries[r].iter().map(|&(i, a)| a * v[i]).sum(),
            Kind::Lower(j) => v[j],
            Kind::Upper(j) => -v[j],
        }
    }

    /// `d = Jᵀ n`
    fn jt_normal(&self, kind: Kind, j: &DMatrix<f64>, d: &mut DVector<f64>) {
        let n = j.ncols();
        match kind {
            Kind::Row(r) => {
                let row = &self.entries[r];
                for k in 0..n {
                    let col = j.column(k);
                    d[k] = row.iter().map(|&(i, a)| a * col[i]).sum();
                }
            }
            Kind::Lower(i) => {
                for k in 0..n {
                    d[k] = j[(i, k)];
                }
            }
            Kind::Upper(i) => {
                for k in 0..n {
                    d[k] = -j[(i, k)];
                }
            }
        }
    }
}

#[inline]
fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    let h = a.hypot(b);
    if h == 0.0 {
        (1.0, 0.0, 0.0)
    } else {
        (a / h, b / h, h)
    }
}

/// Rotates columns `p` and `p + 1` of `m` in place.
#[inline]
fn rotate_columns(m: &mut DMatrix<f64>, p: usize, c: f64, s: f64) {
    let nr = m.nrows();
    let (left, right) = m.as_mut_slice().split_at_mut((p + 1) * nr);
    let a = &mut left[p * nr..];
    let b = &mut right[..nr];
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xv, yv) = (*x, *y);
        *x = c * xv + s * yv;
        *y = -s * xv + c * yv;
    }
}

/// Returns `J = L⁻ᵀ` and whether regularisation was needed.
fn inverse_factor(h: &DMatrix<f64>) -> Result<(DMatrix<f64>, bool)> {
    let n = h.nrows();
    let diagonal = (0..n).all(|c| (0..n).all(|r| r == c || h[(r, c)] == 0.0));
    if diagonal && (0..n).all(|i| h[(i, i)] > 0.0) {
        return Ok((DMatrix::from_fn(n, n, |r, c| if r == c { 1.0 / h[(r, r)].sqrt() } else { 0.0 }), false));
    }
    let (chol, regularized) = match h.clone().cholesky() {
        Some(c) => (c, false),
        None => {
            let reg = h + DMatrix::identity(n, n) * REGULARIZATION;
            match reg.cholesky() {
                Some(c) => (c, true),
                None => {
                    return Err(Error::InvalidParameter(
                        "H is not positive semidefinite".into(),
                    ))
                }
            }
        }
    };
    let lt = chol.l().transpose();
    let j = lt
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::InvalidParameter("singular Cholesky factor".into()))?;
    Ok((j, regularized))
}

pub(super) fn solve(p: &QpProblem, tol: &Tolerances) -> Result<QpSolution> {
    let n = p.n_vars();
    let m = p.n_ineq();

    let mut constraints = Vec::with_capacity(m + 2 * n);
    let mut rows = Rows {
        entries: Vec::with_capacity(m),
    };
    for r in 0..m {
        let entries: Vec<(usize, f64)> = (0..n)
            .filter_map(|c| {
                let a = p.g[(r, c)];
                (a != 0.0).then_some((c, -a))
            })
            .collect();
        let norm = entries.iter().map(|(_, a)| a * a).sum::<f64>().sqrt();
        rows.entries.push(entries);
        if p.b[r] == f64::INFINITY {
            continue;
        }
        if norm == 0.0 {
            if p.b[r] < 0.0 {
                return Ok(finish(p, tol, DVector::zeros(n), &[], &[], &constraints, QpStatus::Infeasible, 0, false));
            }
            continue;
        }
        constraints.push(Constraint {
            kind: Kind::Row(r),
            rhs: -p.b[r],
            norm,
        });
    }
    for j in 0..n {
        if p.lower[j].is_finite() {
            constraints.push(Constraint {
                kind: Kind::Lower(j),
                rhs: p.lower[j],
                norm: 1.0,
            });
        }
        if p.upper[j].is_finite() {
            constraints.push(Constraint {
                kind: Kind::Upper(j),
                rhs: -p.upper[j],
                norm: 1.0,
            });
        }
    }

    let (mut jm, regularized) = inverse_factor(&p.h)?;

    // Unconstrained minimiser x = −J Jᵀ f.
    let mut x = -(&jm * (jm.transpose() * &p.f));

    let mut r_mat = DMatrix::<f64>::zeros(n, n);
    let mut active: Vec<usize> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    let mut is_active = vec![false; constraints.len()];
    let mut d = DVector::<f64>::zeros(n);
    let mut z = DVector::<f64>::zeros(n);
    let mut rvec: Vec<f64> = Vec::with_capacity(n);
    let mut iterations = 0usize;
    let select_tol = tol.feasibility * 1e-3;

    'outer: loop {
        // Most violated inactive constraint, measured in normalised distance.
        let mut pick: Option<(usize, f64)> = None;
        for (i, c) in constraints.iter().enumerate() {
            if is_active[i] {
                continue;
            }
            let s = (rows.dot(c.kind, &x) - c.rhs) / c.norm;
            if s < -select_tol && pick.is_none_or(|(_, best)| s < best) {
                pick = Some((i, s));
            }
        }
        let Some((pc, _)) = pick else {
            return Ok(finish(p, tol, x, &active, &mult, &constraints, QpStatus::Optimal, iterations, regularized));
        };
        let kind = constraints[pc].kind;
        let mut mult_p = 0.0;

        loop {
            if iterations >= tol.max_iterations {
                return Ok(finish(p, tol, x, &active, &mult, &constraints, QpStatus::MaxIterations, iterations, regularized));
            }
            let q = active.len();
            rows.jt_normal(kind, &jm, &mut d);

            // Primal direction z = J₂ d₂, dual direction r = R⁻¹ d₁.
            z.fill(0.0);
            for k in q..n {
                let dk = d[k];
                if dk != 0.0 {
                    z.axpy(dk, &jm.column(k), 1.0);
                }
            }
            rvec.clear();
            rvec.resize(q, 0.0);
            for i in (0..q).rev() {
                let mut acc = d[i];
                for k in (i + 1)..q {
                    acc -= r_mat[(i, k)] * rvec[k];
                }
                rvec[i] = acc / r_mat[(i, i)];
            }

            // Partial (dual) step length.
            let mut t1 = f64::INFINITY;
            let mut drop_at = None;
            for (k, &rk) in rvec.iter().enumerate() {
                if rk > 1e-14 {
                    let ratio = mult[k] / rk;
                    if ratio < t1 {
                        t1 = ratio;
                        drop_at = Some(k);
                    }
                }
            }

            // Full (primal) step length.
            let d2_sq: f64 = d.rows(q, n - q).norm_squared();
            let scale = d.norm_squared().max(1e-300);
            let slack = rows.dot(kind, &x) - constraints[pc].rhs;
            let t2 = if d2_sq > 1e-22 * scale {
                (-slack / d2_sq).max(0.0)
            } else {
                f64::INFINITY
            };

            let t = t1.min(t2);
            if !t.is_finite() {
                return Ok(finish(p, tol, x, &active, &mult, &constraints, QpStatus::Infeasible, iterations, regularized));
            }
            iterations += 1;

            if t2.is_finite() {
                x.axpy(t, &z, 1.0);
            }
            for (mk, rk) in mult.iter_mut().zip(&rvec) {
                *mk -= t * rk;
            }
            mult_p += t;

            if t2 <= t1 {
                // Full step: add the constraint to the active set.
                for k in ((q + 1)..n).rev() {
                    if d[k] == 0.0 {
                        continue;
                    }
                    let (c, s, h) = givens(d[k - 1], d[k]);
                    d[k - 1] = h;
                    d[k] = 0.0;
                    rotate_columns(&mut jm, k - 1, c, s);
                }
                for i in 0..=q {
                    r_mat[(i, q)] = d[i];
                }
                active.push(pc);
                mult.push(mult_p);
                is_active[pc] = true;
                continue 'outer;
            }

            // Partial step: drop the blocking constraint and retry.
            let l = drop_at.expect("finite partial step has a blocking constraint");
            is_active[active[l]] = false;
            active.remove(l);
            mult.remove(l);
            let q_new = q - 1;
            for col in l..q_new {
                for i in 0..=(col + 1) {
                    r_mat[(i, col)] = r_mat[(i, col + 1)];
                }
            }
            for i in 0..n {
                r_mat[(i, q_new)] = 0.0;
            }
            for j in l..q_new {
                let (c, s, h) = givens(r_mat[(j, j)], r_mat[(j + 1, j)]);
                r_mat[(j, j)] = h;
                r_mat[(j + 1, j)] = 0.0;
                for col in (j + 1)..q_new {
                    let (a, b) = (r_mat[(j, col)], r_mat[(j + 1, col)]);
                    r_mat[(j, col)] = c * a + s * b;
                    r_mat[(j + 1, col)] = -s * a + c * b;
                }
                rotate_columns(&mut jm, j, c, s);
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    p: &QpProblem,
    tol: &Tolerances,
    z: DVector<f64>,
    active: &[usize],
    mult: &[f64],
    constraints: &[Constraint],
    mut status: QpStatus,
    iterations: usize,
    regularized: bool,
) -> QpSolution {
    let n = p.n_vars();
    let mut multipliers = Multipliers::zeros(n, p.n_ineq());
    for (&c, &u) in active.iter().zip(mult) {
        match constraints[c].kind {
            Kind::Row(r) => multipliers.ineq[r] = u,
            Kind::Lower(j) => multipliers.lower[j] = u,
            Kind::Upper(j) => multipliers.upper[j] = u,
        }
    }
    let candidate = KktCandidate { z, multipliers };
    let report = check_kkt(p, &candidate).expect("dimensions are consistent by construction");
    if status == QpStatus::Optimal
        && (report.primal_feasibility > tol.feasibility || report.stationarity > tol.kkt)
    {
        status = QpStatus::MaxIterations;
    }
    QpSolution {
        objective: p.objective(&candidate.z),
        z: candidate.z,
        status,
        primal_residual: report.primal_feasibility,
        dual_residual: report.stationarity,
        multipliers: candidate.multipliers,
        iterations,
        regularized,
    }
}
