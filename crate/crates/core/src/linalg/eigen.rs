use rayon::prelude::*;

use super::matrix::{CMatrix, Matrix, Scalar, C64};
use crate::error::{Error, Result};

/// Eigenvalues of a square matrix, with multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    pub source_dim: usize,
}

impl Spectrum {
    pub fn new(mut eigenvalues: Vec<C64>, source_dim: usize) -> Self {
        sort_desc(&mut eigenvalues);
        Spectrum { eigenvalues, source_dim }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Union of several spectra.
    pub fn union<'a>(parts: impl IntoIterator<Item = &'a Spectrum>) -> Spectrum {
        let mut all = Vec::new();
        let mut dim = 0;
        for p in parts {
            all.extend_from_slice(&p.eigenvalues);
            dim += p.source_dim;
        }
        Spectrum::new(all, dim)
    }

    /// Greedy nearest matching between two multisets; returns the largest matched
    /// distance. Infinite when the cardinalities differ.
    pub fn matching_distance(&self, other: &Spectrum) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        let mut used = vec![false; other.len()];
        let mut worst: f64 = 0.0;
        for z in &self.eigenvalues {
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for (j, w) in other.eigenvalues.iter().enumerate() {
                if used[j] {
                    continue;
                }
                let d = (z - w).norm();
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            used[best] = true;
            worst = worst.max(best_d);
        }
        worst
    }
}

/// Sorts by real part, then imaginary part, both descending.
pub fn sort_desc(v: &mut [C64]) {
    v.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

/// All eigenvalues of a square matrix.
///
/// The matrix is first split along the strongly connected components of its
/// nonzero pattern; each irreducible diagonal block then goes through Householder
/// Hessenberg reduction and shifted complex QR.
pub fn eigenvalues<T: Scalar>(m: &Matrix<T>) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("eigenvalues of a {}x{} matrix", m.rows(), m.cols())));
    }
    if !m.is_finite() {
        return Err(Error::Dimension("non-finite entry".into()));
    }
    let n = m.rows();
    let comps = strongly_connected_components(m);
    let parts: Vec<Result<Vec<C64>>> = comps
        .par_iter()
        .map(|c| {
            if c.len() == 1 {
                return Ok(vec![m[(c[0], c[0])].to_c64()]);
            }
            let sub = m.sub_matrix(c, c).to_complex();
            hessenberg_qr(sub)
        })
        .collect();
    let mut all = Vec::with_capacity(n);
    for p in parts {
        all.extend(p?);
    }
    Ok(Spectrum::new(all, n))
}

/// Strongly connected components of the graph with an edge i -> j wherever
/// `m[i][j] != 0` (iterative Tarjan). Each component is sorted ascending.
pub fn strongly_connected_components<T: Scalar>(m: &Matrix<T>) -> Vec<Vec<usize>> {
    let n = m.rows();
    let adj: Vec<Vec<usize>> =
        (0..n).map(|i| (0..n).filter(|&j| j != i && !m[(i, j)].is_zero()).collect()).collect();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < adj[v].len() {
                let w = adj[v][*next];
                *next += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Reduces `a` to upper Hessenberg form in place by Householder reflections.
pub fn hessenberg_reduce(a: &mut CMatrix) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let x: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let alpha = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if alpha == 0.0 || x[1..].iter().all(|z| z.norm_sqr() == 0.0) {
            continue;
        }
        let phase = x[0].unit();
        let mut v = x;
        v[0] += phase * alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        // H = I - 2 v v^H / (v^H v); apply from the left to rows k+1.., then from the right.
        let tau = 2.0 / vnorm2;
        let cols: Vec<usize> = (k..n).collect();
        let col_updates: Vec<(usize, C64)> = cols
            .par_iter()
            .map(|&j| {
                let mut s = C64::new(0.0, 0.0);
                for (t, i) in (k + 1..n).enumerate() {
                    s += v[t].conj() * a[(i, j)];
                }
                (j, s * tau)
            })
            .collect();
        for (j, s) in col_updates {
            for (t, i) in (k + 1..n).enumerate() {
                let d = v[t] * s;
                a[(i, j)] -= d;
            }
        }
        let ncols = a.cols();
        a.data_mut().par_chunks_mut(ncols).for_each(|row| {
            let mut s = C64::new(0.0, 0.0);
            for (t, j) in (k + 1..n).enumerate() {
                s += row[j] * v[t];
            }
            let s = s * tau;
            for (t, j) in (k + 1..n).enumerate() {
                row[j] -= s * v[t].conj();
            }
        });
        for i in k + 2..n {
            a[(i, k)] = C64::new(0.0, 0.0);
        }
    }
}

/// Eigenvalues of a general complex matrix (Hessenberg + single-shift QR).
pub fn hessenberg_qr(mut h: CMatrix) -> Result<Vec<C64>> {
    let n = h.rows();
    if n == 1 {
        return Ok(vec![h[(0, 0)]]);
    }
    hessenberg_reduce(&mut h);
    let anorm = h.max_abs().max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let cap = 100 * n;
    let mut eig = vec![C64::new(0.0, 0.0); n];
    let mut hi = n - 1;
    let mut total = 0usize;
    let mut its = 0usize;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut lo = hi;
        while lo > 0 {
            let mut s = h[(lo - 1, lo - 1)].l1_norm() + h[(lo, lo)].l1_norm();
            if s == 0.0 {
                s = anorm;
            }
            if h[(lo, lo - 1)].l1_norm() <= eps * s {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            its = 0;
            continue;
        }
        total += 1;
        its += 1;
        if total > cap {
            return Err(Error::Convergence { iterations: total, residual: h[(hi, hi - 1)].norm() });
        }
        let shift = if its % 11 == 10 {
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm() * 0.75, 0.0)
        } else {
            wilkinson(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        qr_sweep(&mut h, lo, hi, shift);
    }
    Ok(eig)
}

fn wilkinson(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mu1 = d - (b * c) / (half + disc);
    let mu2 = d - (b * c) / (half - disc);
    let pick = if (half + disc).norm() >= (half - disc).norm() { mu1 } else { mu2 };
    if pick.is_finite() {
        pick
    } else {
        d
    }
}

/// One explicitly shifted QR step on the active window `lo..=hi` by Givens rotations.
fn qr_sweep(h: &mut CMatrix, lo: usize, hi: usize, shift: C64) {
    for k in lo..=hi {
        h[(k, k)] -= shift;
    }
    let mut rots: Vec<(f64, C64)> = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
        for j in k..=hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = x * c + s * y;
            h[(k + 1, j)] = -s.conj() * x + y * c;
        }
        rots.push((c, s));
    }
    for (t, k) in (lo..hi).enumerate() {
        let (c, s) = rots[t];
        let top = (k + 2).min(hi);
        for i in lo..=top {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * c + y * s.conj();
            h[(i, k + 1)] = -x * s + y * c;
        }
    }
    for k in lo..=hi {
        h[(k, k)] += shift;
    }
}

/// Rotation `[c s; -conj(s) c]` mapping `(x, y)` to `(r, 0)`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ny = y.norm();
    if ny == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    let nx = x.norm();
    if nx == 0.0 {
        return (0.0, y.conj() / ny);
    }
    let r = nx.hypot(ny);
    let c = nx / r;
    let s = (x / nx) * y.conj() / r;
    (c, s)
}
