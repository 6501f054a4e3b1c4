//! Periodic spatial operators as circulant matrices.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{root_of_unity, RMatrix, Spectrum, C64};

/// Circulant operator `(A u)_i = scale · Σ_o s_o u_{(i+o) mod n}`.
///
/// Entry `(i, j)` of the matrix is `scale · Σ_{o ≡ j-i (mod n)} s_o`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantOperator {
    pub n: usize,
    pub stencil: Vec<(i64, f64)>,
    pub scale: f64,
}

impl CirculantOperator {
    pub fn new(n: usize, stencil: Vec<(i64, f64)>, scale: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("grid size 0".into()));
        }
        if !scale.is_finite() || stencil.iter().any(|&(_, c)| !c.is_finite()) {
            return Err(Error::Dimension("non-finite stencil".into()));
        }
        Ok(CirculantOperator { n, stencil, scale })
    }

    fn wrap(&self, i: usize, o: i64) -> usize {
        (i as i64 + o).rem_euclid(self.n as i64) as usize
    }

    pub fn materialize(&self) -> RMatrix {
        let mut a = RMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for &(o, c) in &self.stencil {
                let j = self.wrap(i, o);
                a[(i, j)] += self.scale * c;
            }
        }
        a
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n);
        (0..self.n)
            .map(|i| self.scale * self.stencil.iter().map(|&(o, c)| c * u[self.wrap(i, o)]).sum::<f64>())
            .collect()
    }

    /// `λ_k = scale · Σ_o s_o exp(i 2π k o / n)`, in index order.
    pub fn symbol(&self) -> Vec<C64> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let s: C64 = self
                    .stencil
                    .iter()
                    .map(|&(o, c)| root_of_unity(k * (o.rem_euclid(n as i64) as usize), n) * c)
                    .sum();
                s * self.scale
            })
            .collect()
    }
}

/// Analytic spectrum, in index order (not re-sorted).
pub fn circulant_spectrum(op: &CirculantOperator) -> Spectrum {
    Spectrum { eigenvalues: op.symbol(), source_dim: op.n }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Diffusion,
    Advection,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Diffusion => "diffusion",
            ProblemKind::Advection => "advection",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "diffusion" | "heat" => Ok(ProblemKind::Diffusion),
            "advection" => Ok(ProblemKind::Advection),
            other => Err(Error::Parse(format!("unknown problem '{other}'"))),
        }
    }
}

/// Periodic model problem on [0, 1) with `n` points.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelProblem {
    pub kind: ProblemKind,
    pub n: usize,
    /// ν for diffusion, c for advection.
    pub coefficient: f64,
    pub operator: CirculantOperator,
    pub dx: f64,
}

impl ModelProblem {
    /// The same PDE discretized on a grid of `n` points.
    pub fn operator_on(&self, n: usize) -> Result<CirculantOperator> {
        operator_for(self.kind, n, self.coefficient)
    }

    /// Operator on the coarse grid of `n / 2` points.
    pub fn coarse_operator(&self) -> Result<CirculantOperator> {
        self.operator_on(self.n / 2)
    }

    pub fn cfl(&self, dt: f64) -> f64 {
        self.coefficient * dt / self.dx
    }

    pub fn diffusion_number(&self, dt: f64) -> f64 {
        self.coefficient * dt / (self.dx * self.dx)
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.dx).collect()
    }
}

fn operator_for(kind: ProblemKind, n: usize, coefficient: f64) -> Result<CirculantOperator> {
    let dx = 1.0 / n as f64;
    match kind {
        ProblemKind::Diffusion => {
            CirculantOperator::new(n, vec![(-1, 1.0), (0, -2.0), (1, 1.0)], coefficient / (dx * dx))
        }
        ProblemKind::Advection => CirculantOperator::new(
            n,
            vec![(-2, 1.0), (-1, -6.0), (0, 3.0), (1, 2.0)],
            -coefficient / (6.0 * dx),
        ),
    }
}

fn check_problem(n: usize, min: usize, coefficient: f64, what: &str) -> Result<()> {
    if n % 2 == 1 {
        return Err(Error::Parity(format!("grid size {n} is odd")));
    }
    if n < min {
        return Err(Error::Range(format!("grid size {n} below {min}")));
    }
    if !(coefficient > 0.0 && coefficient.is_finite()) {
        return Err(Error::Range(format!("{what} must be positive and finite, got {coefficient}")));
    }
    Ok(())
}

/// `u_t = ν u_xx` with the negative definite second difference.
pub fn make_diffusion(n: usize, nu: f64) -> Result<ModelProblem> {
    check_problem(n, 4, nu, "ν")?;
    Ok(ModelProblem {
        kind: ProblemKind::Diffusion,
        n,
        coefficient: nu,
        operator: operator_for(ProblemKind::Diffusion, n, nu)?,
        dx: 1.0 / n as f64,
    })
}

/// Transport `u(t, x) = u0(x - c t)` with the third-order upwind-biased stencil.
pub fn make_advection(n: usize, c: f64) -> Result<ModelProblem> {
    check_problem(n, 6, c, "c")?;
    Ok(ModelProblem {
        kind: ProblemKind::Advection,
        n,
        coefficient: c,
        operator: operator_for(ProblemKind::Advection, n, c)?,
        dx: 1.0 / n as f64,
    })
}

pub fn make_problem(kind: ProblemKind, n: usize, coefficient: f64) -> Result<ModelProblem> {
    match kind {
        ProblemKind::Diffusion => make_diffusion(n, coefficient),
        ProblemKind::Advection => make_advection(n, coefficient),
    }
}

/// PDE solution for `u0(x) = sin(2π k x)` sampled at `x_j = j / n`.
pub fn exact_solution(p: &ModelProblem, k: usize, t: f64) -> Result<Vec<f64>> {
    if k == 0 || k >= p.n {
        return Err(Error::Range(format!("wavenumber {k} outside 1..{}", p.n)));
    }
    let w = 2.0 * PI * k as f64;
    Ok(match p.kind {
        ProblemKind::Diffusion => {
            let amp = (-p.coefficient * w * w * t).exp();
            p.grid().iter().map(|&x| amp * (w * x).sin()).collect()
        }
        ProblemKind::Advection => p.grid().iter().map(|&x| (w * (x - p.coefficient * t)).sin()).collect(),
    })
}
