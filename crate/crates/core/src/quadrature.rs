//! Right Gauss-Radau collocation nodes, the integration matrix Q and its lower
//! triangular approximations.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{tridiagonal_eigenvalues, RMatrix};

pub const MAX_NODES: usize = 12;

/// Legendre `P_n(t)` and its derivative.
fn legendre(n: usize, t: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, t);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // P_n' from P_n and P_{n-1}; t = ±1 handled by the closed form n(n+1)/2 · t^{n+1}.
    let dp = if (1.0 - t * t).abs() < 1e-14 {
        let s = if t > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * (n * (n + 1)) as f64 / 2.0
    } else {
        n as f64 * (p0 - t * p1) / (1.0 - t * t)
    };
    (p1, dp)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let d = vec![0.0; n];
    let e: Vec<f64> = (1..n).map(|k| k as f64 / ((4 * k * k - 1) as f64).sqrt()).collect();
    let mut nodes = tridiagonal_eigenvalues(&d, &e);
    let mut weights = Vec::with_capacity(n);
    for t in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = legendre(n, *t);
            *t -= p / dp;
        }
        let (_, dp) = legendre(n, *t);
        weights.push(2.0 / ((1.0 - *t * *t) * dp * dp));
    }
    (nodes, weights)
}

/// `m` right Gauss-Radau nodes on (0, 1], ascending, last node exactly 1.
pub fn radau_nodes(m: usize) -> Result<Vec<f64>> {
    if m == 0 || m > MAX_NODES {
        return Err(Error::Range(format!("node count {m} outside 1..={MAX_NODES}")));
    }
    if m == 1 {
        return Ok(vec![1.0]);
    }
    // Interior nodes: zeros of the Jacobi polynomial P^{(1,0)}_{m-1} (Golub-Welsch).
    let k = m - 1;
    let d: Vec<f64> = (0..k).map(|n| -1.0 / (((2 * n + 1) * (2 * n + 3)) as f64)).collect();
    let e: Vec<f64> = (1..k).map(|n| ((n * (n + 1)) as f64).sqrt() / (2 * n + 1) as f64).collect();
    let mut ts = tridiagonal_eigenvalues(&d, &e);
    // Polish on P_m - P_{m-1}, whose roots are the Radau points.
    for t in ts.iter_mut() {
        for _ in 0..4 {
            let (pm, dpm) = legendre(m, *t);
            let (pk, dpk) = legendre(m - 1, *t);
            let step = (pm - pk) / (dpm - dpk);
            if !step.is_finite() {
                break;
            }
            *t -= step;
        }
    }
    let mut nodes: Vec<f64> = ts.iter().map(|t| 0.5 * (t + 1.0)).collect();
    nodes.push(1.0);
    Ok(nodes)
}

fn validate_nodes(nodes: &[f64]) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::Dimension("empty node set".into()));
    }
    if nodes.len() > MAX_NODES {
        return Err(Error::Range(format!("{} nodes exceed {MAX_NODES}", nodes.len())));
    }
    for w in nodes.windows(2) {
        if w[0] == w[1] {
            return Err(Error::Degeneracy(format!("duplicate node {}", w[0])));
        }
        if !(w[0] < w[1]) {
            return Err(Error::Degeneracy("nodes not ascending".into()));
        }
    }
    if nodes.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::Range("nodes must lie in (0, 1]".into()));
    }
    Ok(())
}

/// Lagrange basis polynomial `j` for `nodes`, evaluated at `x`.
pub fn lagrange(nodes: &[f64], j: usize, x: f64) -> f64 {
    nodes
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .map(|(_, &ti)| (x - ti) / (nodes[j] - ti))
        .product()
}

/// `q[i][j] = ∫_0^{τ_i} ℓ_j(τ) dτ`.
pub fn build_q(nodes: &[f64]) -> Result<RMatrix> {
    validate_nodes(nodes)?;
    let m = nodes.len();
    let (gx, gw) = gauss_legendre(m.max(1));
    Ok(RMatrix::from_fn(m, m, |i, j| {
        let half = 0.5 * nodes[i];
        gx.iter().zip(&gw).map(|(&x, &w)| w * half * lagrange(nodes, j, half * (x + 1.0))).sum()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QDeltaKind {
    /// Rectangle rule: `(Q_Δ)_{ij} = Δτ_j` for `j ≤ i`.
    ImplicitEuler,
    /// `Q_Δ = U^T` from `Q^T = L U` with unit lower `L`.
    Lu,
    /// Lower triangle of `Q` including the diagonal.
    Tril,
}

impl QDeltaKind {
    pub fn name(self) -> &'static str {
        match self {
            QDeltaKind::ImplicitEuler => "implicit-euler",
            QDeltaKind::Lu => "lu",
            QDeltaKind::Tril => "tril",
        }
    }
}

impl fmt::Display for QDeltaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QDeltaKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "implicit-euler" | "ie" => Ok(QDeltaKind::ImplicitEuler),
            "lu" => Ok(QDeltaKind::Lu),
            "tril" => Ok(QDeltaKind::Tril),
            other => Err(Error::Parse(format!("unknown Q_Δ kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub q: RMatrix,
}

impl QuadratureRule {
    pub fn radau(m: usize) -> Result<Self> {
        Self::from_nodes(radau_nodes(m)?)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        let q = build_q(&nodes)?;
        Ok(QuadratureRule { nodes, q })
    }

    pub fn m(&self) -> usize {
        self.nodes.len()
    }

    /// Weights of the full-interval quadrature: the last row of Q when the last node is 1.
    pub fn weights(&self) -> Vec<f64> {
        let m = self.m();
        (0..m).map(|j| self.q[(m - 1, j)]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QDelta {
    pub kind: QDeltaKind,
    pub matrix: RMatrix,
}

pub fn build_qdelta(rule: &QuadratureRule, kind: QDeltaKind) -> Result<QDelta> {
    let m = rule.m();
    let q = &rule.q;
    let matrix = match kind {
        QDeltaKind::ImplicitEuler => RMatrix::from_fn(m, m, |i, j| {
            if j > i {
                0.0
            } else if j == 0 {
                rule.nodes[0]
            } else {
                rule.nodes[j] - rule.nodes[j - 1]
            }
        }),
        QDeltaKind::Tril => RMatrix::from_fn(m, m, |i, j| if j > i { 0.0 } else { q[(i, j)] }),
        QDeltaKind::Lu => {
            // Doolittle on Q^T without pivoting; keep U.
            let mut a = q.transpose();
            for k in 0..m {
                let piv = a[(k, k)];
                if piv.abs() <= 1e-14 * q.max_abs() {
                    return Err(Error::Singular(format!("zero pivot {k} in LU of Q^T")));
                }
                for i in k + 1..m {
                    let f = a[(i, k)] / piv;
                    a[(i, k)] = f;
                    for j in k + 1..m {
                        let u = a[(k, j)];
                        a[(i, j)] -= f * u;
                    }
                }
            }
            let u = RMatrix::from_fn(m, m, |i, j| if j < i { 0.0 } else { a[(i, j)] });
            u.transpose()
        }
    };
    Ok(QDelta { kind, matrix })
}

/// The unit lower factor `L` of `Q^T = L U` (the companion of the LU variant).
pub fn lu_lower_factor(rule: &QuadratureRule) -> Result<RMatrix> {
    let qd = build_qdelta(rule, QDeltaKind::Lu)?;
    // L = Q^T U^{-1}; U = Q_Δ^T is upper triangular, so back-substitute row by row.
    let m = rule.m();
    let qt = rule.q.transpose();
    let u = qd.matrix.transpose();
    let mut l = RMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut s = qt[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * u[(k, j)];
            }
            l[(i, j)] = s / u[(j, j)];
        }
    }
    Ok(l)
}
