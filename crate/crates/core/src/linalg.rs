//! Small dense symmetric linear algebra and a Lanczos eigensolver.
//!
//! Everything here is self-contained and generic over [`Real`]: desk-scale
//! problems (8×8 circuit matrices, few-thousand-dimensional spin blocks) use
//! cyclic Jacobi, which is simple and accurate to a few ulps; larger spin
//! systems go through [`lanczos_lowest`] with full reorthogonalization and
//! deflation so degenerate low-lying levels are resolved with multiplicity.

use crate::error::{CoreError, Result};
use crate::rng::CounterRng;
use crate::scalar::Real;

/// Dense symmetric matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<R> {
    n: usize,
    data: Vec<R>,
}

impl<R: Real> SymMatrix<R> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![R::zero(); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> R {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: R) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: R) {
        self.data[i * self.n + j] += v;
    }

    pub fn is_symmetric(&self, tol: R) -> bool {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn frobenius_norm(&self) -> R {
        self.data.iter().map(|&x| x * x).sum::<R>().sqrt()
    }

    pub fn matvec(&self, x: &[R], y: &mut [R]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            y[i] = row.iter().zip(x).map(|(&a, &b)| a * b).sum();
        }
    }

    /// Rows as slices, for serialization.
    pub fn rows(&self) -> impl Iterator<Item = &[R]> {
        self.data.chunks(self.n)
    }
}

/// Eigendecomposition of a symmetric matrix: `a = V diag(values) Vᵀ`,
/// eigenvalues ascending, eigenvectors in the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct Eigen<R> {
    pub values: Vec<R>,
    pub vectors: SymMatrix<R>,
}

/// Cyclic Jacobi eigensolver for dense symmetric matrices.
pub fn jacobi_eigen<R: Real>(a: &SymMatrix<R>) -> Eigen<R> {
    let n = a.dim();
    let mut m = a.clone();
    let mut v = SymMatrix::from_fn(n, |i, j| if i == j { R::one() } else { R::zero() });

    let eps = R::epsilon();
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut off = R::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += m.get(i, j) * m.get(i, j);
            }
        }
        let scale = m.frobenius_norm();
        if off.sqrt() <= eps * (scale + R::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == R::zero() {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                // Skip rotations that cannot change anything at working precision.
                if apq.abs() <= eps * (app.abs() + aqq.abs()) * R::of(0.5) {
                    m.set(p, q, R::zero());
                    m.set(q, p, R::zero());
                    continue;
                }
                let theta = (aqq - app) / (R::of(2.0) * apq);
                let t = {
                    let sign = if theta >= R::zero() {
                        R::one()
                    } else {
                        -R::one()
                    };
                    sign / (theta.abs() + (theta * theta + R::one()).sqrt())
                };
                let c = R::one() / (t * t + R::one()).sqrt();
                let s = t * c;
                let tau = s / (R::one() + c);

                m.set(p, p, app - t * apq);
                m.set(q, q, aqq + t * apq);
                m.set(p, q, R::zero());
                m.set(q, p, R::zero());
                for k in 0..n {
                    if k != p && k != q {
                        let akp = m.get(k, p);
                        let akq = m.get(k, q);
                        let new_kp = akp - s * (akq + tau * akp);
                        let new_kq = akq + s * (akp - tau * akq);
                        m.set(k, p, new_kp);
                        m.set(p, k, new_kp);
                        m.set(k, q, new_kq);
                        m.set(q, k, new_kq);
                    }
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp - s * (vkq + tau * vkp));
                    v.set(k, q, vkq + s * (vkp - tau * vkq));
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<R> = (0..n).map(|i| m.get(i, i)).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).expect("finite eigenvalues"));

    let values: Vec<R> = order.iter().map(|&i| diag[i]).collect();
    let vectors = SymMatrix::from_fn(n, |i, j| v.get(i, order[j]));
    Eigen { values, vectors }
}

/// Group sorted eigenvalues into `(value, multiplicity)` clusters.
pub fn group_eigenvalues<R: Real>(values: &[R], tol: R) -> Vec<(R, usize)> {
    let mut out: Vec<(R, usize)> = Vec::new();
    for &v in values {
        match out.last_mut() {
            Some((rep, count)) if (v - *rep).abs() <= tol => *count += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

/// Inverse of a symmetric positive-definite matrix via its spectral
/// decomposition, together with the 2-norm condition number.
pub fn spectral_inverse<R: Real>(a: &SymMatrix<R>) -> Result<(SymMatrix<R>, R)> {
    let n = a.dim();
    let eig = jacobi_eigen(a);
    let max_abs = eig.values.iter().fold(R::zero(), |m, &v| m.max(v.abs()));
    let min_abs = eig
        .values
        .iter()
        .fold(R::infinity(), |m, &v| m.min(v.abs()));
    if min_abs <= R::epsilon() * R::of(64.0) * max_abs {
        return Err(CoreError::numeric(format!(
            "matrix is singular to working precision (|lambda| range {min_abs:e}..{max_abs:e})"
        )));
    }
    let inv = SymMatrix::from_fn(n, |i, j| {
        (0..n)
            .map(|k| eig.vectors.get(i, k) * eig.vectors.get(j, k) / eig.values[k])
            .sum()
    });
    Ok((inv, max_abs / min_abs))
}

/// Linear operator with a matrix-free action, as consumed by Lanczos.
pub trait LinOp<R> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[R], y: &mut [R]);
}

impl<R: Real> LinOp<R> for SymMatrix<R> {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[R], y: &mut [R]) {
        self.matvec(x, y)
    }
}

fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn axpy<R: Real>(y: &mut [R], alpha: R, x: &[R]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Lowest `k` eigenvalues (with multiplicity) of a symmetric operator.
///
/// Full reorthogonalization plus deflation against converged eigenvectors:
/// each restart searches the orthogonal complement, so a d-fold degenerate
/// level is returned d times. Fails with the worst residual if the Krylov
/// budget is exhausted.
pub fn lanczos_lowest<R: Real>(
    op: &impl LinOp<R>,
    k: usize,
    max_basis: usize,
    tol: R,
    seed: u64,
) -> Result<Vec<R>> {
    let n = op.dim();
    if k == 0 {
        return Ok(Vec::new());
    }
    if n <= 2 * (k + 2) || n <= max_basis {
        // Small enough that dense is both faster and more robust.
        let mut dense = SymMatrix::zeros(n);
        let mut e = vec![R::zero(); n];
        let mut col = vec![R::zero(); n];
        for j in 0..n {
            e[j] = R::one();
            op.apply(&e, &mut col);
            for i in 0..n {
                dense.set(i, j, col[i]);
            }
            e[j] = R::zero();
        }
        let eig = jacobi_eigen(&dense);
        return Ok(eig.values.into_iter().take(k).collect());
    }

    let mut rng = CounterRng::new(seed, 0xece1);
    let mut converged_vecs: Vec<Vec<R>> = Vec::new();
    let mut converged_vals: Vec<R> = Vec::new();
    let mut worst_residual = R::zero();

    while converged_vals.len() < k {
        // Start vector orthogonal to everything already found.
        let mut q = vec![R::zero(); n];
        for qi in q.iter_mut() {
            *qi = R::of(rng.uniform() - 0.5);
        }
        for w in &converged_vecs {
            let c = dot(&q, w);
            axpy(&mut q, -c, w);
        }
        let norm = dot(&q, &q).sqrt();
        if norm < R::epsilon() {
            return Err(CoreError::numeric(
                "lanczos: start vector vanished after deflation",
            ));
        }
        for qi in q.iter_mut() {
            *qi /= norm;
        }

        let mut basis: Vec<Vec<R>> = vec![q];
        let mut alphas: Vec<R> = Vec::new();
        let mut betas: Vec<R> = Vec::new();
        let mut w = vec![R::zero(); n];
        let mut found_here = false;

        for m in 0..max_basis {
            op.apply(&basis[m], &mut w);
            let alpha = dot(&w, &basis[m]);
            alphas.push(alpha);
            axpy(&mut w, -alpha, &basis[m]);
            if m > 0 {
                let beta_prev = betas[m - 1];
                axpy(&mut w, -beta_prev, &basis[m - 1]);
            }
            // Full reorthogonalization against the basis and converged set.
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&w, b);
                    axpy(&mut w, -c, b);
                }
                for b in &converged_vecs {
                    let c = dot(&w, b);
                    axpy(&mut w, -c, b);
                }
            }
            let beta = dot(&w, &w).sqrt();

            // Check convergence of the lowest Ritz pair every few steps.
            let steps = alphas.len();
            if steps >= 2 && (steps % 5 == 0 || beta <= R::epsilon() || m + 1 == max_basis) {
                let t = SymMatrix::from_fn(steps, |i, j| {
                    if i == j {
                        alphas[i]
                    } else if j == i + 1 {
                        betas[i]
                    } else if i == j + 1 {
                        betas[j]
                    } else {
                        R::zero()
                    }
                });
                let te = jacobi_eigen(&t);
                let theta = te.values[0];
                let s_last = te.vectors.get(steps - 1, 0).abs();
                let residual = beta * s_last;
                let scale = theta.abs().max(R::one());
                if residual <= tol * scale || beta <= R::epsilon() {
                    // Assemble the Ritz vector and deflate.
                    let mut ritz = vec![R::zero(); n];
                    for (j, b) in basis.iter().enumerate() {
                        axpy(&mut ritz, te.vectors.get(j, 0), b);
                    }
                    for b in &converged_vecs {
                        let c = dot(&ritz, b);
                        axpy(&mut ritz, -c, b);
                    }
                    let rn = dot(&ritz, &ritz).sqrt();
                    if rn < R::epsilon() {
                        return Err(CoreError::numeric("lanczos: degenerate ritz vector"));
                    }
                    for ri in ritz.iter_mut() {
                        *ri /= rn;
                    }
                    converged_vecs.push(ritz);
                    converged_vals.push(theta);
                    found_here = true;
                    break;
                }
                worst_residual = worst_residual.max(residual);
            }

            if beta <= R::epsilon() {
                break;
            }
            let mut next = w.clone();
            for ni in next.iter_mut() {
                *ni /= beta;
            }
            betas.push(beta);
            basis.push(next);
        }

        if !found_here {
            return Err(CoreError::numeric(format!(
                "lanczos did not converge: {} of {k} eigenvalues found, worst residual {worst_residual:e}",
                converged_vals.len()
            )));
        }
    }

    converged_vals.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(converged_vals)
}
