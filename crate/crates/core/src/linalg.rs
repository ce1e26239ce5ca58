//! Matrix-free Krylov solvers with reproducible reductions.
//!
//! Inner products are summed over fixed-size chunks and the chunk partials are
//! added sequentially, so results are bitwise identical for any thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};

const CHUNK: usize = 4096;

pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final `‖b - A x‖ / ‖b‖`.
    pub relative_residual: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let partials: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partials.iter().sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn precondition(diag_inv: Option<&[f64]>, r: &[f64], z: &mut [f64]) {
    match diag_inv {
        Some(d) => z.par_iter_mut().zip(r.par_iter()).zip(d.par_iter()).for_each(|((zi, ri), di)| *zi = ri * di),
        None => z.copy_from_slice(r),
    }
}

/// Preconditioned conjugate gradients for a symmetric positive (semi)definite
/// operator. `x` carries the initial guess in and the solution out.
pub fn cg(op: &impl LinearOperator, diag_inv: Option<&[f64]>, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<SolveStats> {
    let n = op.dim();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, relative_residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    r.par_iter_mut().zip(b.par_iter()).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z = vec![0.0; n];
    precondition(diag_inv, &r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = norm2(&r) / bnorm;
    for it in 0..max_iter {
        if res <= tol {
            return Ok(SolveStats { iterations: it, relative_residual: res });
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        res = norm2(&r) / bnorm;
        precondition(diag_inv, &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(z.par_iter()).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    if res <= tol {
        return Ok(SolveStats { iterations: max_iter, relative_residual: res });
    }
    Err(Error::LinearSolver { iterations: max_iter, residual: res })
}

/// Right-preconditioned BiCGSTAB for general nonsingular operators.
pub fn bicgstab(op: &impl LinearOperator, diag_inv: Option<&[f64]>, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<SolveStats> {
    let n = op.dim();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, relative_residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    r.par_iter_mut().zip(b.par_iter()).for_each(|(ri, bi)| *ri = bi - *ri);
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut res = norm2(&r) / bnorm;
    for it in 0..max_iter {
        if res <= tol {
            return Ok(SolveStats { iterations: it, relative_residual: res });
        }
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        p.par_iter_mut()
            .zip(r.par_iter())
            .zip(v.par_iter())
            .for_each(|((pi, ri), vi)| *pi = ri + beta * (*pi - omega * vi));
        precondition(diag_inv, &p, &mut p_hat);
        op.apply(&p_hat, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            break;
        }
        alpha = rho / rv;
        s.par_iter_mut().zip(r.par_iter()).zip(v.par_iter()).for_each(|((si, ri), vi)| *si = ri - alpha * vi);
        let snorm = norm2(&s) / bnorm;
        if snorm <= tol {
            axpy(alpha, &p_hat, x);
            res = snorm;
            r.copy_from_slice(&s);
            return Ok(SolveStats { iterations: it + 1, relative_residual: res });
        }
        precondition(diag_inv, &s, &mut s_hat);
        op.apply(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        x.par_iter_mut()
            .zip(p_hat.par_iter())
            .zip(s_hat.par_iter())
            .for_each(|((xi, pi), si)| *xi += alpha * pi + omega * si);
        r.par_iter_mut().zip(s.par_iter()).zip(t.par_iter()).for_each(|((ri, si), ti)| *ri = si - omega * ti);
        res = norm2(&r) / bnorm;
    }
    if res <= tol {
        return Ok(SolveStats { iterations: max_iter, relative_residual: res });
    }
    Err(Error::LinearSolver { iterations: max_iter, residual: res })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1D `-u'' + shift*u` with Dirichlet ends, optionally with an advection term.
    struct Tridiag {
        n: usize,
        shift: f64,
        adv: f64,
    }

    impl LinearOperator for Tridiag {
        fn dim(&self) -> usize {
            self.n
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for i in 0..self.n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < self.n { x[i + 1] } else { 0.0 };
                y[i] = (2.0 + self.shift) * x[i] - l - r + self.adv * (r - l);
            }
        }
    }

    fn residual(op: &impl LinearOperator, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; b.len()];
        op.apply(x, &mut ax);
        ax.iter().zip(b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / norm2(b)
    }

    #[test]
    fn cg_solves_spd() {
        let op = Tridiag { n: 200, shift: 0.01, adv: 0.0 };
        let b: Vec<f64> = (0..200).map(|i| (i as f64 * 0.1).sin()).collect();
        let mut x = vec![0.0; 200];
        let st = cg(&op, None, &b, &mut x, 1e-12, 1000).unwrap();
        assert!(st.relative_residual <= 1e-12);
        assert!(residual(&op, &x, &b) < 1e-11);
    }

    #[test]
    fn bicgstab_solves_nonsymmetric() {
        let op = Tridiag { n: 300, shift: 0.5, adv: 0.3 };
        let b: Vec<f64> = (0..300).map(|i| ((i * 7 % 13) as f64) - 6.0).collect();
        let mut x = vec![0.0; 300];
        let d = vec![1.0 / 2.5; 300];
        bicgstab(&op, Some(&d), &b, &mut x, 1e-12, 2000).unwrap();
        assert!(residual(&op, &x, &b) < 1e-11);
    }

    #[test]
    fn zero_rhs_and_failure() {
        let op = Tridiag { n: 50, shift: 0.0, adv: 0.0 };
        let mut x = vec![1.0; 50];
        cg(&op, None, &vec![0.0; 50], &mut x, 1e-12, 10).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
        let b = vec![1.0; 50];
        let mut x = vec![0.0; 50];
        assert!(matches!(cg(&op, None, &b, &mut x, 1e-14, 2), Err(Error::LinearSolver { .. })));
    }

    #[test]
    fn dot_is_thread_count_independent() {
        let a: Vec<f64> = (0..100_000).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..100_000).map(|i| (i as f64 * 0.37).cos()).collect();
        let d1 = dot(&a, &b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let d2 = pool.install(|| dot(&a, &b));
        assert_eq!(d1.to_bits(), d2.to_bits());
    }
}
