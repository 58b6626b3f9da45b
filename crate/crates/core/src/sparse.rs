//! Compressed sparse row matrices and a Jacobi-preconditioned conjugate
//! gradient solver for the symmetric positive definite systems assembled by
//! the LSCM and ABF solvers.

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    ///
    /// The triplets are sorted in place so that assembly order does not
    /// affect the summation order.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &mut [(usize, usize, f64)]) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in triplets.iter() {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for (r, out) in y.iter_mut().enumerate() {
            *out = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|r| self.row(r).find(|&(c, _)| c == r).map_or(0.0, |(_, v)| v))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖b − A x‖₂ / ‖b‖₂` of the returned iterate.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Solves `A x = b` for symmetric positive definite `A`.
///
/// Stops when the relative residual drops below `tol` or after `max_iter`
/// iterations. Zero diagonal entries are treated as unit preconditioner
/// entries; callers that need rank checks do them before solving.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> CgOutcome {
    let n = b.len();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }

    let mut r = a.mul_vec(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = norm2(&r) / b_norm;
    let mut iterations = 0;

    while rel > tol && iterations < max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        iterations += 1;
        rel = norm2(&r) / b_norm;
    }

    // Recompute the true residual; the recurrence drifts on hard systems.
    let ax = a.mul_vec(&x);
    let true_rel = norm2(&ax.iter().zip(b).map(|(ax, b)| b - ax).collect::<Vec<_>>()) / b_norm;
    CgOutcome {
        x,
        iterations,
        relative_residual: true_rel,
        converged: true_rel <= tol,
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &mut t)
    }

    #[test]
    fn duplicates_are_summed() {
        let mut t = vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0), (0, 1, -1.0)];
        let m = CsrMatrix::from_triplets(2, 2, &mut t);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.diagonal(), vec![4.0, 2.0]);
        assert_eq!(m.mul_vec(&[1.0, 1.0]), vec![3.0, 2.0]);
    }

    #[test]
    fn cg_solves_tridiagonal_system() {
        let n = 50;
        let a = laplacian_1d(n);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x_true);
        let out = conjugate_gradient(&a, &b, None, 1e-12, 10 * n);
        assert!(out.converged);
        for (x, t) in out.x.iter().zip(&x_true) {
            assert!((x - t).abs() < 1e-9);
        }
    }

    #[test]
    fn cg_reports_non_convergence() {
        let n = 200;
        let a = laplacian_1d(n);
        let b = vec![1.0; n];
        let out = conjugate_gradient(&a, &b, None, 1e-14, 3);
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
    }
}
