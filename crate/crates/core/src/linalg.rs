//! Sparse-matrix storage (compressed row) and Krylov solvers.
//!
//! CG handles the symmetric positive (semi)definite systems of the scheme
//! (phase step, mass solves, pressure Schur complement); BiCGSTAB handles the
//! nonsymmetric velocity step. Both support Jacobi preconditioning.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("solver did not converge after {} iterations (relative residual {:.3e})", .report.iterations, .report.residual)]
    NoConvergence { report: SolveReport, partial: Vec<f64> },
    #[error("solver breakdown at iteration {iteration}: {reason}")]
    Breakdown { iteration: usize, reason: &'static str },
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final relative residual ||b - Ax|| / ||b||.
    pub residual: f64,
    pub converged: bool,
}

/// Compressed-row sparse matrix. Column indices are strictly increasing
/// within each row.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a CSR matrix from (row, col, value) triplets; duplicate entries
    /// are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &mut Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in triplets.iter() {
            debug_assert!(r < n_rows && c < n_cols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        CsrMatrix { n_rows, n_cols, row_offsets, col_indices, values }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let lo = self.row_offsets[r];
        let hi = self.row_offsets[r + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// y = A x
    pub fn spmv(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols, "spmv: x length mismatch");
        assert_eq!(y.len(), self.n_rows, "spmv: y length mismatch");
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv(x, &mut y);
        y
    }

    /// y = A^T x (used by the pressure-gradient pairing).
    pub fn spmv_transpose(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_rows, "spmv_transpose: x length mismatch");
        assert_eq!(y.len(), self.n_cols, "spmv_transpose: y length mismatch");
        y.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let xr = x[r];
            if xr != 0.0 {
                for (&c, &v) in cols.iter().zip(vals) {
                    y[c] += v * xr;
                }
            }
        }
    }

    pub fn mul_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_cols];
        self.spmv_transpose(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_rows];
        for r in 0..self.n_rows.min(self.n_cols) {
            let (cols, vals) = self.row(r);
            if let Ok(k) = cols.binary_search(&r) {
                d[r] = vals[k];
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Sum of scaled matrices of identical shape.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> CsrMatrix {
        assert!(!terms.is_empty());
        let (n_rows, n_cols) = (terms[0].1.n_rows, terms[0].1.n_cols);
        let mut trips = Vec::with_capacity(terms.iter().map(|(_, m)| m.values.len()).sum());
        for &(alpha, m) in terms {
            assert_eq!((m.n_rows, m.n_cols), (n_rows, n_cols));
            if alpha == 0.0 {
                continue;
            }
            for r in 0..n_rows {
                let (cols, vals) = m.row(r);
                for (&c, &v) in cols.iter().zip(vals) {
                    trips.push((r, c, alpha * v));
                }
            }
        }
        CsrMatrix::from_triplets(n_rows, n_cols, &mut trips)
    }

    /// Checks |A_ij - A_ji| <= tol * max|A| for every stored entry.
    pub fn symmetry_defect(&self) -> f64 {
        assert_eq!(self.n_rows, self.n_cols);
        let mut defect = 0.0f64;
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let (tcols, tvals) = self.row(c);
                let vt = match tcols.binary_search(&r) {
                    Ok(k) => tvals[k],
                    Err(_) => 0.0,
                };
                defect = defect.max((v - vt).abs());
            }
        }
        defect
    }
}

/// Abstract linear operator; lets CG run on matrix-free operators such as the
/// pressure Schur complement.
pub trait LinOp {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinOp for CsrMatrix {
    fn dim(&self) -> usize {
        self.n_rows
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv(x, y);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn inv_diag(diag: Option<&[f64]>, n: usize) -> Vec<f64> {
    match diag {
        Some(d) => d.iter().map(|&v| if v.abs() > 0.0 { 1.0 / v } else { 1.0 }).collect(),
        None => vec![1.0; n],
    }
}

/// Preconditioned conjugate gradients for SPD (or consistent semidefinite)
/// operators. `diag` supplies the Jacobi preconditioner when requested.
pub fn cg_op(
    op: &dyn LinOp,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    maxit: usize,
    diag: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveReport), LinalgError> {
    let minv = inv_diag(diag, op.dim());
    let prec = move |r: &[f64], z: &mut [f64]| {
        for i in 0..r.len() {
            z[i] = r[i] * minv[i];
        }
    };
    cg_prec_op(op, b, x0, tol, maxit, &prec)
}

/// CG with an arbitrary SPD preconditioner given as an application closure
/// (z receives the preconditioned residual).
pub fn cg_prec_op(
    op: &dyn LinOp,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    maxit: usize,
    prec: &dyn Fn(&[f64], &mut [f64]),
) -> Result<(Vec<f64>, SolveReport), LinalgError> {
    let n = op.dim();
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch(format!("cg: b has length {}, operator dim {}", b.len(), n)));
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolveReport { iterations: 0, residual: 0.0, converged: true }));
    }
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut r = vec![0.0; n];
    op.apply(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z = vec![0.0; n];
    prec(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rnorm = norm2(&r);
    if rnorm / bnorm <= tol {
        return Ok((x, SolveReport { iterations: 0, residual: rnorm / bnorm, converged: true }));
    }
    // largest observed Rayleigh quotient, for the attainable-accuracy floor
    let mut op_norm_est = 0.0f64;
    for it in 1..=maxit {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(LinalgError::Breakdown { iteration: it, reason: "non-positive curvature in CG (operator not SPD on Krylov space)" });
        }
        op_norm_est = op_norm_est.max(pap / dot(&p, &p));
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = norm2(&r);
        if rnorm / bnorm <= tol {
            return Ok((x, SolveReport { iterations: it, residual: rnorm / bnorm, converged: true }));
        }
        // stop when the residual reaches the rounding floor of the recurrence;
        // iterating further only amplifies noise (seen when b is near zero,
        // e.g. projecting an almost divergence-free field)
        let floor = 32.0 * f64::EPSILON * (op_norm_est * norm2(&x) + bnorm);
        if rnorm <= floor {
            return Ok((x, SolveReport { iterations: it, residual: rnorm / bnorm, converged: true }));
        }
        prec(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(LinalgError::NoConvergence {
        report: SolveReport { iterations: maxit, residual: rnorm / bnorm, converged: false },
        partial: x,
    })
}

/// Cholesky factorization stored in a lower band, for SPD matrices whose
/// nonzeros sit near the diagonal (e.g. stiffness matrices of structured
/// meshes). Serves as a direct preconditioner for Laplacian-like operators.
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + j + self.bw - i
    }

    pub fn new(a: &CsrMatrix) -> Result<BandedCholesky, LinalgError> {
        if a.n_rows != a.n_cols {
            return Err(LinalgError::DimensionMismatch(format!("banded cholesky: {} x {} matrix", a.n_rows, a.n_cols)));
        }
        let n = a.n_rows;
        let mut bw = 0usize;
        for r in 0..n {
            let (cols, _) = a.row(r);
            for &c in cols {
                bw = bw.max(r.abs_diff(c));
            }
        }
        let mut chol = BandedCholesky { n, bw, l: vec![0.0; n * (bw + 1)] };
        for r in 0..n {
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if c <= r {
                    let k = chol.idx(r, c);
                    chol.l[k] = v;
                }
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut sum = chol.l[chol.idx(i, j)];
                for k in lo.max(j.saturating_sub(bw))..j {
                    sum -= chol.l[chol.idx(i, k)] * chol.l[chol.idx(j, k)];
                }
                let k = chol.idx(i, j);
                if j < i {
                    chol.l[k] = sum / chol.l[chol.idx(j, j)];
                } else {
                    if sum <= 0.0 {
                        return Err(LinalgError::Breakdown { iteration: i, reason: "non-positive pivot in Cholesky (matrix not SPD)" });
                    }
                    chol.l[k] = sum.sqrt();
                }
            }
        }
        Ok(chol)
    }

    /// Solves L L^T x = b by forward and backward substitution.
    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let mut s = b[i];
            for j in i.saturating_sub(self.bw)..i {
                s -= self.l[self.idx(i, j)] * x[j];
            }
            x[i] = s / self.l[self.idx(i, i)];
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for j in i + 1..(i + self.bw + 1).min(self.n) {
                s -= self.l[self.idx(j, i)] * x[j];
            }
            x[i] = s / self.l[self.idx(i, i)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        self.solve_into(b, &mut x);
        x
    }
}

/// CG on a CSR matrix with the SPD contract.
pub fn cg_solve(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    maxit: usize,
    precond: Preconditioner,
) -> Result<(Vec<f64>, SolveReport), LinalgError> {
    let diag = match precond {
        Preconditioner::Jacobi => Some(a.diagonal()),
        Preconditioner::None => None,
    };
    cg_op(a, b, None, tol, maxit, diag.as_deref())
}

/// BiCGSTAB with optional Jacobi preconditioning for nonsymmetric systems.
pub fn bicgstab_solve(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    maxit: usize,
    precond: Preconditioner,
) -> Result<(Vec<f64>, SolveReport), LinalgError> {
    let n = a.n_rows;
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch(format!("bicgstab: b has length {}, matrix has {} rows", b.len(), n)));
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolveReport { iterations: 0, residual: 0.0, converged: true }));
    }
    let minv = match precond {
        Preconditioner::Jacobi => inv_diag(Some(&a.diagonal()), n),
        Preconditioner::None => vec![1.0; n],
    };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut rnorm = norm2(&r);
    for it in 1..=maxit {
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < f64::MIN_POSITIVE {
            return Err(LinalgError::Breakdown { iteration: it, reason: "rho underflow in BiCGSTAB" });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        for i in 0..n {
            phat[i] = p[i] * minv[i];
        }
        a.spmv(&phat, &mut v);
        let r0v = dot(&r0, &v);
        if r0v.abs() < f64::MIN_POSITIVE {
            return Err(LinalgError::Breakdown { iteration: it, reason: "orthogonality breakdown in BiCGSTAB" });
        }
        alpha = rho / r0v;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) / bnorm <= tol {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            let res = check_residual(a, b, &x, bnorm);
            return Ok((x, SolveReport { iterations: it, residual: res, converged: true }));
        }
        for i in 0..n {
            shat[i] = s[i] * minv[i];
        }
        a.spmv(&shat, &mut t);
        let tt = dot(&t, &t);
        if tt < f64::MIN_POSITIVE {
            return Err(LinalgError::Breakdown { iteration: it, reason: "t underflow in BiCGSTAB" });
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        rnorm = norm2(&r);
        if rnorm / bnorm <= tol {
            let res = check_residual(a, b, &x, bnorm);
            return Ok((x, SolveReport { iterations: it, residual: res, converged: true }));
        }
        if omega.abs() < f64::MIN_POSITIVE {
            return Err(LinalgError::Breakdown { iteration: it, reason: "omega underflow in BiCGSTAB" });
        }
    }
    Err(LinalgError::NoConvergence {
        report: SolveReport { iterations: maxit, residual: rnorm / bnorm, converged: false },
        partial: x,
    })
}

fn check_residual(a: &CsrMatrix, b: &[f64], x: &[f64], bnorm: f64) -> f64 {
    let ax = a.mul(x);
    let mut s = 0.0;
    for i in 0..b.len() {
        let d = b[i] - ax[i];
        s += d * d;
    }
    s.sqrt() / bnorm
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_to_csr(rows: &[&[f64]]) -> CsrMatrix {
        let n = rows.len();
        let m = rows[0].len();
        let mut trips = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trips.push((r, c, v));
                }
            }
        }
        CsrMatrix::from_triplets(n, m, &mut trips)
    }

    #[test]
    fn spmv_identity_and_zero() {
        let b = vec![1.5, -2.0, 3.25];
        let id = CsrMatrix::identity(3);
        assert_eq!(id.mul(&b), b);
        let mut empty = Vec::new();
        let z = CsrMatrix::from_triplets(3, 3, &mut empty);
        assert_eq!(z.mul(&b), vec![0.0; 3]);
    }

    #[test]
    fn spmv_hand_example() {
        let a = dense_to_csr(&[&[4.0, 1.0], &[1.0, 3.0]]);
        assert_eq!(a.mul(&[1.0, 2.0]), vec![6.0, 7.0]);
    }

    #[test]
    fn from_triplets_sums_duplicates() {
        let mut trips = vec![(0, 1, 2.0), (0, 1, 3.0), (1, 0, 1.0)];
        let a = CsrMatrix::from_triplets(2, 2, &mut trips);
        assert_eq!(a.mul(&[1.0, 1.0]), vec![5.0, 1.0]);
        // strictly increasing columns within rows
        for r in 0..a.n_rows {
            let (cols, _) = a.row(r);
            for w in cols.windows(2) {
                assert!(w[0] < w[1]);
            }
        }
    }

    #[test]
    fn cg_identity_one_iteration() {
        let id = CsrMatrix::identity(4);
        let b = vec![1.0, -2.0, 0.5, 4.0];
        let (x, rep) = cg_solve(&id, &b, 1e-12, 10, Preconditioner::None).unwrap();
        assert!(rep.iterations <= 1);
        for i in 0..4 {
            assert!((x[i] - b[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn cg_2x2_hand_solve() {
        let a = dense_to_csr(&[&[4.0, 1.0], &[1.0, 3.0]]);
        let (x, rep) = cg_solve(&a, &[1.0, 2.0], 1e-14, 50, Preconditioner::Jacobi).unwrap();
        assert!(rep.converged);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-12);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn cg_zero_rhs() {
        let a = dense_to_csr(&[&[4.0, 1.0], &[1.0, 3.0]]);
        let (x, rep) = cg_solve(&a, &[0.0, 0.0], 1e-12, 50, Preconditioner::None).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(x, vec![0.0, 0.0]);
    }

    #[test]
    fn cg_singular_mean_zero_stays_in_complement() {
        // graph Laplacian of a path: constants in the kernel
        let a = dense_to_csr(&[
            &[1.0, -1.0, 0.0],
            &[-1.0, 2.0, -1.0],
            &[0.0, -1.0, 1.0],
        ]);
        let b = vec![1.0, 0.0, -1.0]; // mean-zero
        let (x, rep) = cg_solve(&a, &b, 1e-12, 100, Preconditioner::None).unwrap();
        assert!(rep.converged);
        let mean: f64 = x.iter().sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-12, "iterates left the kernel complement: mean {mean}");
        let r = {
            let ax = a.mul(&x);
            (0..3).map(|i| (b[i] - ax[i]).powi(2)).sum::<f64>().sqrt()
        };
        assert!(r < 1e-11);
    }

    #[test]
    fn cg_nonconvergence_reports() {
        let a = dense_to_csr(&[&[1.0, 0.0], &[0.0, 1e8]]);
        let err = cg_op(&a, &[1.0, 1.0], None, 1e-16, 1, None).unwrap_err();
        match err {
            LinalgError::NoConvergence { report, .. } => {
                assert!(!report.converged);
                assert_eq!(report.iterations, 1);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn bicgstab_identity_and_triangular() {
        let id = CsrMatrix::identity(3);
        let (x, _) = bicgstab_solve(&id, &[1.0, 2.0, 3.0], 1e-12, 10, Preconditioner::None).unwrap();
        for (xi, bi) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((xi - bi).abs() < 1e-12);
        }
        let a = dense_to_csr(&[&[2.0, 1.0], &[0.0, 1.0]]);
        let (x, _) = bicgstab_solve(&a, &[3.0, 1.0], 1e-13, 50, Preconditioner::Jacobi).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-10);
        assert!((x[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bicgstab_random_diagonally_dominant() {
        // deterministic LCG so the test is reproducible
        let mut seed = 0x12345678u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let n = 50;
        let mut trips = Vec::new();
        let mut b = vec![0.0; n];
        for i in 0..n {
            let mut off_sum = 0.0;
            for j in 0..n {
                if i != j && (i + j) % 7 == 0 {
                    let v = next();
                    off_sum += v.abs();
                    trips.push((i, j, v));
                }
            }
            trips.push((i, i, off_sum + 1.0 + next().abs()));
            b[i] = next();
        }
        let a = CsrMatrix::from_triplets(n, n, &mut trips);
        let tol = 1e-12;
        let (x, rep) = bicgstab_solve(&a, &b, tol, 500, Preconditioner::Jacobi).unwrap();
        assert!(rep.converged);
        // self-checking residual oracle: recompute ||b - Ax|| independently
        let ax = a.mul(&x);
        let r: f64 = (0..n).map(|i| (b[i] - ax[i]).powi(2)).sum::<f64>().sqrt();
        let bn = norm2(&b);
        assert!(r / bn <= 1.01 * tol.max(rep.residual) + 1e-15, "residual {r} vs reported {}", rep.residual);
    }

    #[test]
    fn cg_a_norm_error_monotone() {
        // instrumented run: track the A-norm of the error against the exact solve
        let a = dense_to_csr(&[
            &[4.0, 1.0, 0.0],
            &[1.0, 3.0, 1.0],
            &[0.0, 1.0, 5.0],
        ]);
        let b = vec![1.0, 2.0, 3.0];
        // exact solution via dense elimination
        let xstar = {
            let mut m = [[4.0, 1.0, 0.0, 1.0], [1.0, 3.0, 1.0, 2.0], [0.0, 1.0, 5.0, 3.0]];
            for k in 0..3 {
                for i in (k + 1)..3 {
                    let f = m[i][k] / m[k][k];
                    for j in k..4 {
                        m[i][j] -= f * m[k][j];
                    }
                }
            }
            let mut x = [0.0; 3];
            for i in (0..3).rev() {
                let mut s = m[i][3];
                for j in (i + 1)..3 {
                    s -= m[i][j] * x[j];
                }
                x[i] = s / m[i][i];
            }
            x
        };
        let anorm_err = |x: &[f64]| {
            let e: Vec<f64> = (0..3).map(|i| x[i] - xstar[i]).collect();
            dot(&e, &a.mul(&e)).sqrt()
        };
        let mut prev = f64::INFINITY;
        for it in 1..=6 {
            let x = match cg_op(&a, &b, None, 0.0, it, None) {
                Ok((x, _)) => x,
                Err(LinalgError::NoConvergence { partial, .. }) => partial,
                Err(e) => panic!("{e}"),
            };
            let err = anorm_err(&x);
            assert!(err <= prev + 1e-12, "A-norm error increased: {err} > {prev}");
            prev = err;
        }
    }

    #[test]
    fn banded_cholesky_solves_spd_systems() {
        // hand example: [[4,2],[2,3]] -> L = [[2,0],[1,sqrt(2)]]
        let a = dense_to_csr(&[&[4.0, 2.0], &[2.0, 3.0]]);
        let chol = BandedCholesky::new(&a).unwrap();
        let x = chol.solve(&[8.0, 7.0]);
        // solution of the 2x2 system: x = (5/4, 3/2)
        assert!((x[0] - 1.25).abs() < 1e-14);
        assert!((x[1] - 1.5).abs() < 1e-14);

        // random banded SPD system: A = B^T B + I with band 2
        let mut seed = 77u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let n = 40;
        let mut dense = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            dense[i][i] = 3.0 + next().abs();
            if i + 1 < n {
                let v = next();
                dense[i][i + 1] = v;
                dense[i + 1][i] = v;
            }
            if i + 2 < n {
                let v = 0.5 * next();
                dense[i][i + 2] = v;
                dense[i + 2][i] = v;
            }
        }
        let rows: Vec<&[f64]> = dense.iter().map(|r| r.as_slice()).collect();
        let a = dense_to_csr(&rows);
        let chol = BandedCholesky::new(&a).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let x = chol.solve(&b);
        let ax = a.mul(&x);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-11, "residual at {i}: {}", ax[i] - b[i]);
        }

        // indefinite matrix is rejected
        let bad = dense_to_csr(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(BandedCholesky::new(&bad), Err(LinalgError::Breakdown { .. })));
    }

    #[test]
    fn cg_with_exact_preconditioner_converges_immediately() {
        let a = dense_to_csr(&[
            &[4.0, 1.0, 0.0],
            &[1.0, 3.0, 1.0],
            &[0.0, 1.0, 5.0],
        ]);
        let chol = BandedCholesky::new(&a).unwrap();
        let prec = |r: &[f64], z: &mut [f64]| chol.solve_into(r, z);
        let b = [1.0, -2.0, 0.5];
        let (x, rep) = cg_prec_op(&a, &b, None, 1e-13, 10, &prec).unwrap();
        assert!(rep.iterations <= 2, "exact preconditioner should converge in one step, took {}", rep.iterations);
        let ax = a.mul(&x);
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn linear_combination_matches_dense_sum() {
        let mut t1 = vec![(0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0)];
        let a = CsrMatrix::from_triplets(2, 2, &mut t1);
        let mut t2 = vec![(0, 0, -1.0), (1, 0, 4.0)];
        let b = CsrMatrix::from_triplets(2, 2, &mut t2);
        let c = CsrMatrix::linear_combination(&[(2.0, &a), (0.5, &b)]);
        let x = [1.0, -1.0];
        let cx = c.mul(&x);
        let ax = a.mul(&x);
        let bx = b.mul(&x);
        for i in 0..2 {
            assert!((cx[i] - (2.0 * ax[i] + 0.5 * bx[i])).abs() < 1e-15);
        }
        // zero coefficients drop out entirely
        let z = CsrMatrix::linear_combination(&[(0.0, &a), (1.0, &b)]);
        assert_eq!(z.values.len(), b.values.len());
    }

    proptest! {
        #[test]
        fn spmv_is_linear(alpha in -5.0f64..5.0, beta in -5.0f64..5.0,
                          x in proptest::collection::vec(-10.0f64..10.0, 6),
                          y in proptest::collection::vec(-10.0f64..10.0, 6)) {
            let mut trips = Vec::new();
            for i in 0..6usize {
                for j in 0..6usize {
                    if (i * 6 + j) % 3 == 0 {
                        trips.push((i, j, ((i + 2 * j) as f64).sin()));
                    }
                }
            }
            let a = CsrMatrix::from_triplets(6, 6, &mut trips);
            let combo: Vec<f64> = (0..6).map(|i| alpha * x[i] + beta * y[i]).collect();
            let lhs = a.mul(&combo);
            let ax = a.mul(&x);
            let ay = a.mul(&y);
            for i in 0..6 {
                let rhs = alpha * ax[i] + beta * ay[i];
                prop_assert!((lhs[i] - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
            }
        }
    }
}
