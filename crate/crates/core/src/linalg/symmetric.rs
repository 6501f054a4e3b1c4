use super::matrix::{Matrix, Scalar};

/// Number of eigenvalues of the symmetric tridiagonal matrix (d, e) below `x`.
fn sturm_count(d: &[f64], e2: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let sub = if i == 0 { 0.0 } else { e2[i - 1] / q };
        q = d[i] - x - sub;
        if q == 0.0 {
            q = -f64::EPSILON * (x.abs() + 1.0) * 1e-3;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(d: &[f64], e: &[f64]) -> (f64, f64) {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = (if i > 0 { e[i - 1].abs() } else { 0.0 }) + (if i + 1 < n { e[i].abs() } else { 0.0 });
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let pad = (hi - lo).abs().max(hi.abs()).max(lo.abs()) * 4.0 * f64::EPSILON + f64::MIN_POSITIVE;
    (lo - pad, hi + pad)
}

/// The `k`-th smallest eigenvalue (0-based) of the symmetric tridiagonal matrix with
/// diagonal `d` and off-diagonal `e`, by bisection on Sturm counts.
pub fn tridiagonal_eigenvalue(d: &[f64], e: &[f64], k: usize) -> f64 {
    assert!(k < d.len());
    assert_eq!(e.len() + 1, d.len());
    let e2: Vec<f64> = e.iter().map(|x| x * x).collect();
    let (mut lo, mut hi) = gershgorin(d, e);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, &e2, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All eigenvalues, ascending.
pub fn tridiagonal_eigenvalues(d: &[f64], e: &[f64]) -> Vec<f64> {
    (0..d.len()).map(|k| tridiagonal_eigenvalue(d, e, k)).collect()
}

/// Householder reduction of a Hermitian matrix to real symmetric tridiagonal form
/// (diagonal, off-diagonal magnitudes).
pub fn hermitian_tridiagonalize<T: Scalar>(a: &Matrix<T>) -> (Vec<f64>, Vec<f64>) {
    assert!(a.is_square());
    let n = a.rows();
    let mut a = a.clone();
    let mut e = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n.saturating_sub(1) {
        let x: Vec<T> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let alpha = x.iter().map(|z| z.abs_sqr()).sum::<f64>().sqrt();
        if alpha == 0.0 || (x.len() > 1 && x[1..].iter().all(|z| z.is_zero())) {
            e.push(x[0].abs());
            continue;
        }
        let phase = x[0].unit();
        let mut v = x;
        v[0] += phase * T::from_f64(alpha);
        let tau = 2.0 / v.iter().map(|z| z.abs_sqr()).sum::<f64>();
        let m = n - k - 1;
        // Two-sided update of the trailing block: A <- H A H with H = I - tau v v^H.
        let idx = |t: usize| k + 1 + t;
        let p: Vec<T> = (0..m)
            .map(|i| {
                let mut s = T::zero();
                for j in 0..m {
                    s += a[(idx(i), idx(j))] * v[j];
                }
                s * T::from_f64(tau)
            })
            .collect();
        let mut vhp = T::zero();
        for i in 0..m {
            vhp += v[i].conj() * p[i];
        }
        let half = T::from_f64(0.5 * tau) * vhp;
        let w: Vec<T> = (0..m).map(|i| p[i] - half * v[i]).collect();
        for i in 0..m {
            for j in 0..m {
                let d = v[i] * w[j].conj() + w[i] * v[j].conj();
                a[(idx(i), idx(j))] -= d;
            }
        }
        e.push(alpha);
        for i in k + 1..n {
            a[(i, k)] = T::zero();
            a[(k, i)] = T::zero();
        }
    }
    let d = (0..n).map(|i| a[(i, i)].re()).collect();
    (d, e)
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn hermitian_max_eigenvalue<T: Scalar>(a: &Matrix<T>) -> f64 {
    let (d, e) = hermitian_tridiagonalize(a);
    tridiagonal_eigenvalue(&d, &e, d.len() - 1)
}

/// Largest singular value, from the Gram matrix of the smaller side.
pub fn spectral_norm<T: Scalar>(m: &Matrix<T>) -> f64 {
    if m.max_abs() == 0.0 {
        return 0.0;
    }
    let gram = if m.rows() >= m.cols() { m.adjoint().matmul(m) } else { m.matmul(&m.adjoint()) };
    hermitian_max_eigenvalue(&gram).max(0.0).sqrt()
}
