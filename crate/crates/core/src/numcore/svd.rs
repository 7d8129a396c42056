use super::matrix::{axpy, dot, norm, Matrix};
use super::Rng;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct SvdOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

/// Leading right singular pairs of a matrix.
#[derive(Clone, Debug)]
pub struct TopSingular {
    /// `cols × k`, orthonormal columns.
    pub basis: Matrix,
    /// Nonincreasing.
    pub sigmas: Vec<f64>,
}

impl TopSingular {
    pub fn k(&self) -> usize {
        self.sigmas.len()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.basis.column(i)
    }
}

/// [`top_right_singular_with`] at the default tolerance and iteration cap.
pub fn top_right_singular(m: &Matrix, k: usize) -> Result<TopSingular> {
    top_right_singular_with(m, k, SvdOptions::default())
}

/// Top-`k` right singular vectors by block power iteration on `mᵀm`.
///
/// Each sweep multiplies the block by `mᵀm`, re-orthonormalizes it (which deflates
/// the directions already captured) and applies a Rayleigh-Ritz rotation so that
/// clustered singular values inside the block are separated exactly. A pair is
/// accepted once `‖mᵀm·v − θv‖ ≤ tol·θ₁`.
pub fn top_right_singular_with(m: &Matrix, k: usize, opts: SvdOptions) -> Result<TopSingular> {
    let n = m.cols();
    if k == 0 || k > m.rows().min(n) {
        return Err(Error::arg(format!(
            "k = {k} out of range for a {}x{} matrix",
            m.rows(),
            n
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::arg("tolerance must be positive"));
    }
    let gram = m.matmul_at(m);
    let block = n.min(2 * k + 2);

    let mut rng = Rng::new(0x5eed_5eed);
    let mut q = Matrix::from_fn(n, block, |_, _| rng.normal());
    orthonormalize_columns(&mut q, &mut rng);

    for _ in 0..opts.max_iter {
        let z = gram.matmul(&q);
        let h = q.matmul_at(&z);
        let (theta, s) = symmetric_eigen(&h)?;
        let q_rot = q.matmul(&s);
        let z_rot = z.matmul(&s);

        let scale = theta[0].max(0.0);
        let converged = (0..k).all(|i| {
            let r: f64 = (0..n)
                .map(|row| {
                    let d = z_rot.get(row, i) - theta[i] * q_rot.get(row, i);
                    d * d
                })
                .sum::<f64>()
                .sqrt();
            r <= opts.tol * scale
        });
        if converged || block == n && scale == 0.0 {
            return Ok(finish(m, q_rot, k));
        }
        q = z_rot;
        orthonormalize_columns(&mut q, &mut rng);
    }
    Err(Error::IterationLimit {
        what: "top_right_singular",
        max_iter: opts.max_iter,
    })
}

fn finish(m: &Matrix, q: Matrix, k: usize) -> TopSingular {
    let n = q.rows();
    let basis = Matrix::from_fn(n, k, |r, c| q.get(r, c));
    let mut sigmas = Vec::with_capacity(k);
    let mut prev = f64::INFINITY;
    for i in 0..k {
        let s = norm(&m.matvec(&basis.column(i))).min(prev);
        sigmas.push(s);
        prev = s;
    }
    TopSingular { basis, sigmas }
}

/// Modified Gram-Schmidt with one re-orthogonalization pass; columns that vanish
/// are replaced by fresh random directions.
fn orthonormalize_columns(q: &mut Matrix, rng: &mut Rng) {
    let (n, b) = q.shape();
    let mut cols: Vec<Vec<f64>> = (0..b).map(|c| q.column(c)).collect();
    for c in 0..b {
        let mut attempts = 0;
        loop {
            let orig = norm(&cols[c]);
            for _ in 0..2 {
                for p in 0..c {
                    let (done, rest) = cols.split_at_mut(c);
                    let proj = dot(&done[p], &rest[0]);
                    axpy(-proj, &done[p], &mut rest[0]);
                }
            }
            let nv = norm(&cols[c]);
            if nv > 1e-10 * orig.max(f64::MIN_POSITIVE) && nv > 0.0 {
                cols[c].iter_mut().for_each(|x| *x /= nv);
                break;
            }
            attempts += 1;
            assert!(attempts < 100, "failed to complete an orthonormal basis");
            cols[c] = (0..n).map(|_| rng.normal()).collect();
        }
    }
    for (c, col) in cols.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            q.set(r, c, *v);
        }
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues in nonincreasing order and the matching eigenvectors as columns.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::arg("symmetric_eigen needs a square matrix"));
    }
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let total = a.frobenius_norm_sq();
    let mut converged = false;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j) * m.get(i, j))
            .sum();
        if off <= 1e-30 * total || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    if !converged {
        return Err(Error::IterationLimit {
            what: "symmetric_eigen",
            max_iter: 100,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp(&m.get(i, i)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    Ok((values, vectors))
}

/// Thin singular value decomposition `m = u · diag(sigmas) · vᵀ`.
#[derive(Clone, Debug)]
pub struct FullSvd {
    /// `rows × r`.
    pub u: Matrix,
    /// Nonincreasing, length `r = min(rows, cols)`.
    pub sigmas: Vec<f64>,
    /// `cols × r`.
    pub v: Matrix,
}

/// One-sided (Hestenes) Jacobi SVD. Slow and accurate; used as a reference.
pub fn jacobi_svd(m: &Matrix) -> Result<FullSvd> {
    if m.rows() < m.cols() {
        let t = jacobi_svd(&m.transpose())?;
        return Ok(FullSvd {
            u: t.v,
            sigmas: t.sigmas,
            v: t.u,
        });
    }
    let (rows, n) = m.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|c| m.column(c)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|c| (0..n).map(|r| if r == c { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut converged = false;
    for _sweep in 0..200 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut vcols, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::IterationLimit {
            what: "jacobi_svd",
            max_iter: 200,
        });
    }
    let sig: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sig[j].total_cmp(&sig[i]));
    let sigmas: Vec<f64> = order.iter().map(|&i| sig[i]).collect();
    let u = Matrix::from_fn(rows, n, |r, c| {
        let s = sig[order[c]];
        if s > 0.0 {
            cols[order[c]][r] / s
        } else {
            0.0
        }
    });
    let v = Matrix::from_fn(n, n, |r, c| vcols[order[c]][r]);
    Ok(FullSvd { u, sigmas, v })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (a, b) = cols.split_at_mut(q);
    for (x, y) in a[p].iter_mut().zip(b[0].iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}
