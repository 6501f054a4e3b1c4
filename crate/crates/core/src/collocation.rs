//! Single-interval and composite collocation problems.
//!
//! Space-time vectors are ordered `(l * M + m) * N + j` for interval `l`, node `m`
//! and grid point `j`.

use crate::error::{Error, Result};
use crate::linalg::{kron, RMatrix};
use crate::quadrature::QuadratureRule;
use crate::transfer::last_column_ones;

/// `(I - Δt Q ⊗ A) U = U_0` on one subinterval.
#[derive(Debug, Clone)]
pub struct CollocationProblem {
    pub a: RMatrix,
    pub rule: QuadratureRule,
    pub dt: f64,
    pub matrix: RMatrix,
}

impl CollocationProblem {
    pub fn m(&self) -> usize {
        self.rule.m()
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn dim(&self) -> usize {
        self.m() * self.n()
    }
}

pub fn collocation_matrix(a: &RMatrix, rule: &QuadratureRule, dt: f64) -> Result<CollocationProblem> {
    if !a.is_square() {
        return Err(Error::Dimension("spatial operator must be square".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Range(format!("time step {dt} must be positive")));
    }
    let qa = kron(&rule.q, a)?.scale(dt);
    Ok(CollocationProblem { a: a.clone(), rule: rule.clone(), dt, matrix: qa.identity_minus() })
}

/// `N_M ⊗ I_N`: copies the last node value to every node.
pub fn node_propagation(m: usize, n: usize) -> RMatrix {
    kron(&last_column_ones(m), &RMatrix::identity(n)).expect("small kron")
}

/// Unit subdiagonal `E` of size `l`.
pub fn subdiagonal(l: usize) -> RMatrix {
    RMatrix::from_fn(l, l, |i, j| if i == j + 1 { 1.0 } else { 0.0 })
}

/// Cyclic `Ê`: the unit subdiagonal plus a one in the top right corner.
pub fn cyclic_subdiagonal(l: usize) -> RMatrix {
    RMatrix::from_fn(l, l, |i, j| if (j + 1) % l == i { 1.0 } else { 0.0 })
}

/// Block lower-bidiagonal system over `l` subintervals.
#[derive(Debug, Clone)]
pub struct CompositeSystem {
    pub l: usize,
    pub problem: CollocationProblem,
    pub n_matrix: RMatrix,
    pub matrix: RMatrix,
    pub rhs: Vec<f64>,
}

impl CompositeSystem {
    pub fn dim(&self) -> usize {
        self.l * self.problem.dim()
    }

    pub fn m(&self) -> usize {
        self.problem.m()
    }

    pub fn n(&self) -> usize {
        self.problem.n()
    }
}

pub fn composite_system(problem: &CollocationProblem, l: usize, u0: &[f64]) -> Result<CompositeSystem> {
    if l == 0 {
        return Err(Error::Range("at least one subinterval required".into()));
    }
    let n = problem.n();
    if u0.len() != n {
        return Err(Error::Dimension(format!("initial value of length {} for {n} points", u0.len())));
    }
    let b = problem.dim();
    let n_matrix = node_propagation(problem.m(), n);
    let dim = l.checked_mul(b).filter(|d| d.checked_mul(*d).is_some_and(|e| e <= crate::linalg::MAX_ENTRIES));
    let dim = dim.ok_or_else(|| Error::Size(format!("composite system of {l} x {b} too large")))?;
    let mut matrix = RMatrix::zeros(dim, dim);
    let neg_n = n_matrix.scale(-1.0);
    for k in 0..l {
        matrix.set_block(k * b, k * b, &problem.matrix);
        if k > 0 {
            matrix.set_block(k * b, (k - 1) * b, &neg_n);
        }
    }
    let mut rhs = vec![0.0; dim];
    rhs[..b].copy_from_slice(&spread_initial(u0, problem.m(), 1));
    Ok(CompositeSystem { l, problem: problem.clone(), n_matrix, matrix, rhs })
}

/// `I - Δt I_L ⊗ Q ⊗ A - E ⊗ N_M ⊗ I_N`, built from Kronecker products.
pub fn three_layer_matrix(problem: &CollocationProblem, l: usize, periodic: bool) -> Result<RMatrix> {
    let m = problem.m();
    let n = problem.n();
    let il = RMatrix::identity(l);
    let qa = kron(&il, &kron(&problem.rule.q, &problem.a)?)?.scale(problem.dt);
    let e = if periodic { cyclic_subdiagonal(l) } else { subdiagonal(l) };
    let en = kron(&e, &node_propagation(m, n))?;
    Ok(qa.add_mat(&en).identity_minus())
}

/// `u0` copied to every node of every interval.
pub fn spread_initial(u0: &[f64], m: usize, l: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(u0.len() * m * l);
    for _ in 0..m * l {
        out.extend_from_slice(u0);
    }
    out
}

/// Values at the last node of interval `l`.
pub fn last_node(u: &[f64], m: usize, n: usize, l: usize) -> &[f64] {
    let start = (l * m + m - 1) * n;
    &u[start..start + n]
}
