//! Flexible GMRES with right preconditioning.
//!
//! The preconditioner may change between iterations (ours embeds truncated
//! multigrid and CG subsolves), so the preconditioned directions are stored
//! explicitly per Saad's FGMRES.

use super::vectors::{axpy, dot, norm};

pub trait Operator {
    fn apply(&mut self, x: &[f64], y: &mut [f64]);
}

pub trait Preconditioner {
    fn apply(&mut self, r: &[f64], z: &mut [f64]);
}

/// Identity preconditioner.
pub struct NoPrecond;

impl Preconditioner for NoPrecond {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

pub struct FgmresOptions {
    pub tol_abs: f64,
    pub restart: usize,
    pub max_iters: usize,
}

impl Default for FgmresOptions {
    fn default() -> Self {
        FgmresOptions { tol_abs: 1e-8, restart: 30, max_iters: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct FgmresResult {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub history: Vec<f64>,
}

/// Solve A x = b to absolute residual tolerance, starting from `x` in place.
pub fn fgmres(
    op: &mut impl Operator,
    precond: &mut impl Preconditioner,
    b: &[f64],
    x: &mut [f64],
    opts: &FgmresOptions,
) -> FgmresResult {
    let n = b.len();
    let m = opts.restart;
    let mut history = Vec::new();
    let mut total_iters = 0;

    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    op.apply(x, &mut w);
    for i in 0..n {
        r[i] = b[i] - w[i];
    }
    let mut beta = norm(&r);
    history.push(beta);
    if beta <= opts.tol_abs {
        return FgmresResult { iterations: 0, residual: beta, converged: true, history };
    }

    let mut v: Vec<Vec<f64>> = Vec::new(); // Krylov basis
    let mut z: Vec<Vec<f64>> = Vec::new(); // preconditioned directions
    let mut h = vec![vec![0.0_f64; m]; m + 1]; // Hessenberg, h[i][j]
    let mut cs = vec![0.0_f64; m];
    let mut sn = vec![0.0_f64; m];
    let mut g = vec![0.0_f64; m + 1];

    loop {
        v.clear();
        z.clear();
        let mut v0 = r.clone();
        let inv = 1.0 / beta;
        v0.iter_mut().for_each(|e| *e *= inv);
        v.push(v0);
        for gi in g.iter_mut() {
            *gi = 0.0;
        }
        g[0] = beta;
        let mut converged_inner = None;
        let mut k_used = 0;

        for k in 0..m {
            let mut zk = vec![0.0; n];
            precond.apply(&v[k], &mut zk);
            op.apply(&zk, &mut w);
            z.push(zk);
            // Modified Gram-Schmidt.
            for i in 0..=k {
                h[i][k] = dot(&w, &v[i]);
                axpy(-h[i][k], &v[i], &mut w);
            }
            h[k + 1][k] = norm(&w);
            if h[k + 1][k] > 0.0 {
                let inv = 1.0 / h[k + 1][k];
                let mut vk = w.clone();
                vk.iter_mut().for_each(|e| *e *= inv);
                v.push(vk);
            } else {
                v.push(vec![0.0; n]);
            }
            // Apply stored Givens rotations, then form a new one.
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            h[k][k] = cs[k] * h[k][k] + sn[k] * h[k + 1][k];
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total_iters += 1;
            k_used = k + 1;
            let res = g[k + 1].abs();
            history.push(res);
            if res <= opts.tol_abs || total_iters >= opts.max_iters {
                converged_inner = Some(res <= opts.tol_abs);
                break;
            }
        }

        // Back substitution for the inner solution.
        let k = k_used;
        let mut y = vec![0.0_f64; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i][j] * y[j];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for i in 0..k {
            axpy(y[i], &z[i], x);
        }

        // True residual for the restart/convergence decision.
        op.apply(x, &mut w);
        for i in 0..n {
            r[i] = b[i] - w[i];
        }
        beta = norm(&r);
        if let Some(conv) = converged_inner {
            if conv || total_iters >= opts.max_iters {
                return FgmresResult {
                    iterations: total_iters,
                    residual: beta,
                    converged: beta <= opts.tol_abs * 1.001 || conv,
                    history,
                };
            }
        }
        if beta <= opts.tol_abs {
            return FgmresResult { iterations: total_iters, residual: beta, converged: true, history };
        }
        if total_iters >= opts.max_iters {
            return FgmresResult { iterations: total_iters, residual: beta, converged: false, history };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dense {
        a: Vec<Vec<f64>>,
    }

    impl Operator for Dense {
        fn apply(&mut self, x: &[f64], y: &mut [f64]) {
            for (i, row) in self.a.iter().enumerate() {
                y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
            }
        }
    }

    #[test]
    fn solves_small_nonsymmetric_system() {
        let a = vec![
            vec![4.0, 1.0, 0.0],
            vec![-1.0, 3.5, 0.5],
            vec![0.2, 0.0, 2.0],
        ];
        let mut op = Dense { a };
        let b = vec![1.0, -2.0, 0.7];
        let mut x = vec![0.0; 3];
        let res = fgmres(
            &mut op,
            &mut NoPrecond,
            &b,
            &mut x,
            &FgmresOptions { tol_abs: 1e-12, restart: 3, max_iters: 50 },
        );
        assert!(res.converged, "{res:?}");
        let mut check = vec![0.0; 3];
        op.apply(&x, &mut check);
        for i in 0..3 {
            assert!((check[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn restart_still_converges() {
        // Moderately sized random-ish SPD-dominant system with restart 5.
        let n = 40;
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = if i == j {
                    6.0
                } else {
                    ((i * 31 + j * 17) % 13) as f64 / 26.0 - 0.25
                };
            }
        }
        let mut op = Dense { a };
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut x = vec![0.0; n];
        let res = fgmres(
            &mut op,
            &mut NoPrecond,
            &b,
            &mut x,
            &FgmresOptions { tol_abs: 1e-10, restart: 5, max_iters: 400 },
        );
        assert!(res.converged, "residual {}", res.residual);
    }
}
