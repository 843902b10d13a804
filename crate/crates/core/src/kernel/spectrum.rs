//! Hermitian eigenvalues of kernel operators.
//!
//! Small matrices (up to [`DENSE_LIMIT`]) go to cyclic Jacobi. Larger ones are
//! first compressed onto a seeded randomized range `A ~ Q B Q*`; when that
//! succeeds, the eigenvalues of `B` plus zeros approximate those of `A` within
//! the explicitly computed residual `||A - Q B Q*||_F` (Weyl). Matrices that are
//! not numerically low rank are reduced to tridiagonal form by Householder
//! reflections and finished with implicit QL; complex matrices are embedded as
//! real symmetric matrices of twice the size, whose eigenvalues come in pairs.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::KernelOperator;
use crate::error::{Error, Result};
use crate::tolerances::tol_herm;

/// Largest dimension diagonalized directly.
pub const DENSE_LIMIT: usize = 64;

const MAX_SWEEPS: usize = 80;
const OFF_REL: f64 = 1e-15;
const COMPRESS_REL: f64 = 1e-12;
const SKETCH_BLOCK: usize = 16;
const MAX_SKETCH_RANK: usize = 96;
const SKETCH_SEED: u64 = 0x5eed_5eed;

/// Eigenvalues of the operator `h k`, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    trace_norm: f64,
    error_bound: f64,
    rank: Option<usize>,
}

impl Spectrum {
    fn from_values(mut eigenvalues: Vec<f64>, error_bound: f64, rank: Option<usize>) -> Self {
        eigenvalues.sort_by(|a, b| a.total_cmp(b));
        let trace_norm = eigenvalues.iter().map(|v| v.abs()).sum();
        Self { eigenvalues, trace_norm, error_bound, rank }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn trace_norm(&self) -> f64 {
        self.trace_norm
    }

    /// Bound on the eigenvalue error introduced by compression (0 for dense solves).
    pub fn error_bound(&self) -> f64 {
        self.error_bound
    }

    /// Rank of the compressed representation, if compression was used.
    pub fn compressed_rank(&self) -> Option<usize> {
        self.rank
    }
}

/// Spectrum of `h k` for a Hermitian kernel.
pub fn hermitian_spectrum(omega: &KernelOperator) -> Result<Spectrum> {
    let defect = omega.hermitian_defect();
    let tolerance = tol_herm(omega.max_abs());
    if defect > tolerance {
        return Err(Error::NotHermitian { asymmetry: defect, tolerance });
    }
    let h = omega.grid().h();
    Ok(hermitian_matrix_spectrum(&omega.k().mapv(|v| v * h)))
}

/// Spectrum of a Hermitian matrix; only the Hermitian part is used.
pub fn hermitian_matrix_spectrum(a: &Array2<Complex64>) -> Spectrum {
    let n = a.nrows();
    let w = hermitian_part(a);
    if is_diagonal(&w, n) {
        return Spectrum::from_values((0..n).map(|i| w[i * n + i].re).collect(), 0.0, None);
    }
    if n > DENSE_LIMIT {
        if let Some(s) = compressed(&w, n) {
            return s;
        }
    }
    if n > DENSE_LIMIT {
        return Spectrum::from_values(tridiagonal_eigenvalues(&w, n), 0.0, None);
    }
    Spectrum::from_values(jacobi_in_place(w, n), 0.0, None)
}

/// Eigenvalues by Householder tridiagonalization and implicit QL, unsorted.
fn tridiagonal_eigenvalues(w: &[Complex64], n: usize) -> Vec<f64> {
    if w.iter().all(|z| z.im == 0.0) {
        let mut a: Vec<f64> = w.iter().map(|z| z.re).collect();
        return symmetric_eigenvalues(&mut a, n);
    }
    // [[Re, -Im], [Im, Re]] has every eigenvalue of the Hermitian matrix twice.
    let m = 2 * n;
    let mut a = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = w[i * n + j];
            a[i * m + j] = z.re;
            a[(i + n) * m + j + n] = z.re;
            a[(i + n) * m + j] = z.im;
            a[i * m + j + n] = -z.im;
        }
    }
    let mut ev = symmetric_eigenvalues(&mut a, m);
    ev.sort_by(|x, y| x.total_cmp(y));
    ev.into_iter().step_by(2).collect()
}

fn symmetric_eigenvalues(a: &mut [f64], n: usize) -> Vec<f64> {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(a, n, &mut d, &mut e);
    implicit_ql(&mut d, &mut e);
    d
}

/// Householder reduction of the lower triangle; `d` gets the diagonal and
/// `e[1..]` the subdiagonal.
fn tridiagonalize(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[i * n + k].abs()).sum();
            if scale == 0.0 {
                e[i] = a[i * n + l];
                continue;
            }
            let mut h = 0.0;
            for k in 0..=l {
                a[i * n + k] /= scale;
                h += a[i * n + k] * a[i * n + k];
            }
            let f = a[i * n + l];
            let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
            e[i] = scale * g;
            h -= f * g;
            a[i * n + l] = f - g;
            let mut f = 0.0;
            for j in 0..=l {
                let mut g = 0.0;
                for k in 0..=j {
                    g += a[j * n + k] * a[i * n + k];
                }
                for k in j + 1..=l {
                    g += a[k * n + j] * a[i * n + k];
                }
                e[j] = g / h;
                f += e[j] * a[i * n + j];
            }
            let hh = f / (h + h);
            for j in 0..=l {
                let f = a[i * n + j];
                let g = e[j] - hh * f;
                e[j] = g;
                for k in 0..=j {
                    a[j * n + k] -= f * e[k] + g * a[i * n + k];
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
    }
    e[0] = 0.0;
    for i in 0..n {
        d[i] = a[i * n + i];
    }
}

/// Implicit QL with Wilkinson-type shifts on a symmetric tridiagonal matrix.
fn implicit_ql(d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        for _ in 0..200 {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(a: &Array2<Complex64>) -> Vec<f64> {
    let n = a.nrows();
    let mut ev = jacobi_in_place(hermitian_part(a), n);
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

fn hermitian_part(a: &Array2<Complex64>) -> Vec<Complex64> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "square matrix required");
    let mut w = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            w[i * n + j] = (a[[i, j]] + a[[j, i]].conj()) * 0.5;
        }
    }
    w
}

fn is_diagonal(w: &[Complex64], n: usize) -> bool {
    (0..n).all(|i| (0..n).all(|j| i == j || w[i * n + j] == Complex64::new(0.0, 0.0)))
}

fn jacobi_in_place(mut w: Vec<Complex64>, n: usize) -> Vec<f64> {
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        let mut fro = 0.0;
        for i in 0..n {
            fro += w[i * n + i].norm_sqr();
            for j in i + 1..n {
                off += w[i * n + j].norm_sqr();
            }
        }
        fro += 2.0 * off;
        if off == 0.0 || off <= OFF_REL * OFF_REL * fro {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut w, n, p, q);
            }
        }
    }
    (0..n).map(|i| w[i * n + i].re).collect()
}

fn rotate(w: &mut [Complex64], n: usize, p: usize, q: usize) {
    let g = w[p * n + q];
    let r = g.norm();
    if r == 0.0 {
        return;
    }
    // Rephase column q so the pivot is real, then apply a real rotation.
    let phase = (g / r).conj();
    let app = w[p * n + p].re;
    let aqq = w[q * n + q].re;
    let theta = (aqq - app) / (2.0 * r);
    let t =
        if theta.abs() > 1e150 { 0.5 / theta } else { theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt()) };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    w[p * n + p] = Complex64::new(app - t * r, 0.0);
    w[q * n + q] = Complex64::new(aqq + t * r, 0.0);
    w[p * n + q] = Complex64::new(0.0, 0.0);
    w[q * n + p] = Complex64::new(0.0, 0.0);
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = w[k * n + p];
        let akq = w[k * n + q] * phase;
        let nkp = akp * c - akq * s;
        let nkq = akp * s + akq * c;
        w[k * n + p] = nkp;
        w[p * n + k] = nkp.conj();
        w[k * n + q] = nkq;
        w[q * n + k] = nkq.conj();
    }
}

fn matvec(w: &[Complex64], n: usize, x: &[Complex64]) -> Vec<Complex64> {
    (0..n).map(|i| w[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn vec_norm(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn compressed(w: &[Complex64], n: usize) -> Option<Spectrum> {
    let fro = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if fro == 0.0 {
        return Some(Spectrum::from_values(vec![0.0; n], 0.0, Some(0)));
    }
    let target = COMPRESS_REL * fro;
    let mut rng = ChaCha8Rng::seed_from_u64(SKETCH_SEED);
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut images: Vec<Vec<Complex64>> = Vec::new();
    loop {
        if basis.len() + SKETCH_BLOCK > MAX_SKETCH_RANK.min(n / 2) {
            return None;
        }
        let mut added = 0;
        let mut largest_remainder: f64 = 0.0;
        for _ in 0..SKETCH_BLOCK {
            let g: Vec<Complex64> =
                (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let g_norm = vec_norm(&g);
            let mut y = matvec(w, n, &g);
            for _ in 0..2 {
                for q in &basis {
                    let c = dot_conj(q, &y);
                    for (yi, qi) in y.iter_mut().zip(q) {
                        *yi -= c * qi;
                    }
                }
            }
            let norm = vec_norm(&y);
            largest_remainder = largest_remainder.max(norm / g_norm);
            if norm <= 1e-14 * fro * g_norm {
                continue;
            }
            for yi in y.iter_mut() {
                *yi /= norm;
            }
            images.push(matvec(w, n, &y));
            basis.push(y);
            added += 1;
        }
        if added == SKETCH_BLOCK && largest_remainder > target {
            continue;
        }
        let r = basis.len();
        let mut b = Array2::zeros((r, r));
        for i in 0..r {
            for j in 0..r {
                b[[i, j]] = dot_conj(&basis[i], &images[j]);
            }
        }
        let residual = residual_norm(w, n, &basis, &b);
        if residual <= target || added == 0 {
            let mut values = jacobi_eigenvalues(&b);
            values.resize(n, 0.0);
            return Some(Spectrum::from_values(values, residual, Some(r)));
        }
    }
}

/// `||A - Q B Q*||_F` formed explicitly.
fn residual_norm(w: &[Complex64], n: usize, basis: &[Vec<Complex64>], b: &Array2<Complex64>) -> f64 {
    let r = basis.len();
    let mut q = vec![Complex64::new(0.0, 0.0); n * r];
    for (l, col) in basis.iter().enumerate() {
        for i in 0..n {
            q[i * r + l] = col[i];
        }
    }
    let mut qb = vec![Complex64::new(0.0, 0.0); n * r];
    for i in 0..n {
        for l in 0..r {
            let mut s = Complex64::new(0.0, 0.0);
            for m in 0..r {
                s += q[i * r + m] * b[[m, l]];
            }
            qb[i * r + l] = s;
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        let qbi = &qb[i * r..(i + 1) * r];
        for j in 0..n {
            let qj = &q[j * r..(j + 1) * r];
            let approx: Complex64 = qbi.iter().zip(qj).map(|(a, c)| a * c.conj()).sum();
            total += (w[i * n + j] - approx).norm_sqr();
        }
    }
    total.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn two_by_two_closed_form() {
        let (a, d, b) = (1.5, -0.25, c(0.3, -0.7));
        let m = ndarray::arr2(&[[c(a, 0.0), b], [b.conj(), c(d, 0.0)]]);
        let ev = jacobi_eigenvalues(&m);
        let mid = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        assert!((ev[0] - (mid - rad)).abs() < 1e-14);
        assert!((ev[1] - (mid + rad)).abs() < 1e-14);
    }

    #[test]
    fn compression_matches_dense_on_low_rank() {
        let n = 150;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let vecs: Vec<Vec<Complex64>> = (0..5)
            .map(|_| (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
            .collect();
        let weights = [2.0, 1.0, 0.5, -0.25, 1e-3];
        let a = Array2::from_shape_fn((n, n), |(i, j)| {
            vecs.iter().zip(weights).map(|(v, wt)| v[i] * v[j].conj() * wt).sum::<Complex64>()
        });
        let fast = hermitian_matrix_spectrum(&a);
        assert!(fast.compressed_rank().is_some());
        let dense = jacobi_eigenvalues(&a);
        for (x, y) in fast.eigenvalues().iter().zip(&dense) {
            assert!((x - y).abs() < 1e-9 * dense.last().unwrap().abs(), "{x} vs {y}");
        }
    }

    #[test]
    fn tridiagonal_matches_jacobi() {
        let n = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut a = Array2::from_shape_fn((n, n), |_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        a = &a + &a.t().mapv(|v| v.conj());
        let reference = jacobi_eigenvalues(&a);
        let mut fast = tridiagonal_eigenvalues(&hermitian_part(&a), n);
        fast.sort_by(|x, y| x.total_cmp(y));
        for (x, y) in fast.iter().zip(&reference) {
            assert!((x - y).abs() < 1e-12 * n as f64, "{x} vs {y}");
        }
        let real = a.mapv(|v| c(v.re, 0.0));
        let reference = jacobi_eigenvalues(&real);
        let mut fast = tridiagonal_eigenvalues(&hermitian_part(&real), n);
        fast.sort_by(|x, y| x.total_cmp(y));
        for (x, y) in fast.iter().zip(&reference) {
            assert!((x - y).abs() < 1e-12 * n as f64, "{x} vs {y}");
        }
    }

    #[test]
    fn full_rank_falls_back_to_dense() {
        let n = 80;
        let a = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                c(1.0 + i as f64, 0.0)
            } else {
                c(1.0 / (1.0 + (i + j) as f64), 0.0)
            }
        });
        let s = hermitian_matrix_spectrum(&a);
        assert!(s.compressed_rank().is_none());
        let trace: f64 = (0..n).map(|i| a[[i, i]].re).sum();
        assert!((s.sum() - trace).abs() < 1e-9 * n as f64);
    }
}
