//! Circulant-interweaved (CI) interpolation and restriction between periodic grids
//! of `n` and `n / 2` points.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::linalg::{dft_matrix, kron, root_of_unity, RMatrix, C64};
use crate::space::CirculantOperator;

/// Stacks rows alternately: output row `2i` is row `i` of `a`, row `2i + 1` row `i` of `b`.
pub fn interweave(a: &RMatrix, b: &RMatrix) -> Result<RMatrix> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::Dimension(format!(
            "interweave of {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(RMatrix::from_fn(2 * a.rows(), a.cols(), |i, j| if i % 2 == 0 { a[(i / 2, j)] } else { b[(i / 2, j)] }))
}

/// Number of points of the symmetric midpoint stencil exact to `degree`.
pub fn stencil_points(degree: usize) -> usize {
    let p = degree + 1;
    p + p % 2
}

/// Lagrange weights at the midpoint 1/2 for nodes at offsets `-(p-1)..=p`, `2p` points.
pub fn midpoint_weights(points: usize) -> Vec<(i64, f64)> {
    assert!(points >= 2 && points % 2 == 0);
    let p = (points / 2) as i64;
    let offsets: Vec<i64> = (-(p - 1)..=p).collect();
    offsets
        .iter()
        .map(|&o| {
            let w: f64 = offsets
                .iter()
                .filter(|&&r| r != o)
                .map(|&r| (0.5 - r as f64) / (o - r) as f64)
                .product();
            (o, w)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferPair {
    pub n_fine: usize,
    pub n_coarse: usize,
    /// `T_C^F`, n_fine × n_coarse.
    pub interpolation: RMatrix,
    /// `T_F^C`, n_coarse × n_fine.
    pub restriction: RMatrix,
    pub generator_interp: CirculantOperator,
    pub generator_restr: CirculantOperator,
    pub restriction_scale: f64,
}

impl TransferPair {
    /// Pair from explicit generator circulants on the coarse grid.
    pub fn from_generators(
        n_fine: usize,
        generator_interp: CirculantOperator,
        generator_restr: CirculantOperator,
    ) -> Result<Self> {
        if n_fine < 2 || n_fine % 2 == 1 {
            return Err(Error::Parity(format!("fine grid size {n_fine} must be even")));
        }
        let nc = n_fine / 2;
        if generator_interp.n != nc || generator_restr.n != nc {
            return Err(Error::Dimension("generators must live on the coarse grid".into()));
        }
        let id = RMatrix::identity(nc);
        let interpolation = interweave(&id, &generator_interp.materialize())?;
        let restriction_scale = 0.5;
        let restriction = interweave(&id, &generator_restr.materialize())?.transpose().scale(restriction_scale);
        Ok(TransferPair {
            n_fine,
            n_coarse: nc,
            interpolation,
            restriction,
            generator_interp,
            generator_restr,
            restriction_scale,
        })
    }

    pub fn interpolate(&self, coarse: &[f64]) -> Vec<f64> {
        assert_eq!(coarse.len(), self.n_coarse);
        let mid = self.generator_interp.apply(coarse);
        let mut out = Vec::with_capacity(self.n_fine);
        for i in 0..self.n_coarse {
            out.push(coarse[i]);
            out.push(mid[i]);
        }
        out
    }

    pub fn restrict(&self, fine: &[f64]) -> Vec<f64> {
        assert_eq!(fine.len(), self.n_fine);
        let g = &self.generator_restr;
        let nc = self.n_coarse as i64;
        let mut out: Vec<f64> = (0..self.n_coarse).map(|i| fine[2 * i]).collect();
        // Transpose of the generator rows: fine odd point 2r+1 feeds coarse point r+o.
        for r in 0..self.n_coarse {
            let v = fine[2 * r + 1];
            for &(o, c) in &g.stencil {
                let i = (r as i64 + o).rem_euclid(nc) as usize;
                out[i] += g.scale * c * v;
            }
        }
        out.iter().map(|x| x * self.restriction_scale).collect()
    }
}

/// CI pair whose generators are symmetric midpoint stencils exact to the given degrees.
pub fn build_ci_pair(n_fine: usize, interp_degree: usize, restr_degree: usize) -> Result<TransferPair> {
    if n_fine < 2 || n_fine % 2 == 1 {
        return Err(Error::Parity(format!("fine grid size {n_fine} must be even")));
    }
    let nc = n_fine / 2;
    let make = |degree: usize| -> Result<CirculantOperator> {
        let pts = stencil_points(degree);
        if pts > nc {
            return Err(Error::Size(format!(
                "{pts}-point stencil (degree {degree}) wider than the {nc}-point coarse grid"
            )));
        }
        CirculantOperator::new(nc, midpoint_weights(pts), 1.0)
    };
    TransferPair::from_generators(n_fine, make(interp_degree)?, make(restr_degree)?)
}

/// Diagonals of the transformed transfer operators.
///
/// `Ψ^H T_C^F Ψ_C` has `d[k]` at `(k, k)` and `d_hat[k]` at `(n/2 + k, k)`;
/// `Ψ_C^H T_F^C Ψ` is `(1/2) [diag(f) diag(f_hat)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicDiagonals {
    pub d: Vec<C64>,
    pub d_hat: Vec<C64>,
    pub f: Vec<C64>,
    pub f_hat: Vec<C64>,
}

fn closed_form(generator: &CirculantOperator, n_fine: usize) -> (Vec<C64>, Vec<C64>) {
    let lam = generator.symbol();
    let mut d = Vec::with_capacity(lam.len());
    let mut dh = Vec::with_capacity(lam.len());
    for (k, l) in lam.iter().enumerate() {
        let t = l * root_of_unity(n_fine - k, n_fine);
        d.push((1.0 + t) / SQRT_2);
        dh.push((1.0 - t) / SQRT_2);
    }
    (d, dh)
}

/// Closed-form diagonals without the numerical structure check.
pub fn harmonic_diagonals_closed_form(pair: &TransferPair) -> HarmonicDiagonals {
    let (d, d_hat) = closed_form(&pair.generator_interp, pair.n_fine);
    let (dr, dr_hat) = closed_form(&pair.generator_restr, pair.n_fine);
    HarmonicDiagonals {
        d,
        d_hat,
        f: dr.iter().map(|z| z.conj()).collect(),
        f_hat: dr_hat.iter().map(|z| z.conj()).collect(),
    }
}

pub const STRUCTURE_TOL: f64 = 1e-12;

/// Residuals of the materialized transforms against the closed form:
/// (interpolation, restriction), each the max entrywise deviation.
pub fn transform_residuals(pair: &TransferPair, h: &HarmonicDiagonals) -> (f64, f64) {
    let n = pair.n_fine;
    let nc = pair.n_coarse;
    let psi = dft_matrix(n).expect("n > 0");
    let psi_c = dft_matrix(nc).expect("nc > 0");
    let ti = psi.adjoint().matmul(&pair.interpolation.to_complex()).matmul(&psi_c);
    let tr = psi_c.adjoint().matmul(&pair.restriction.to_complex()).matmul(&psi);
    let mut ri: f64 = 0.0;
    for i in 0..n {
        for k in 0..nc {
            let expect = if i == k {
                h.d[k]
            } else if i == k + nc {
                h.d_hat[k]
            } else {
                C64::new(0.0, 0.0)
            };
            ri = ri.max((ti[(i, k)] - expect).norm());
        }
    }
    let mut rr: f64 = 0.0;
    for k in 0..nc {
        for j in 0..n {
            let expect = if j == k {
                h.f[k] * 0.5
            } else if j == k + nc {
                h.f_hat[k] * 0.5
            } else {
                C64::new(0.0, 0.0)
            };
            rr = rr.max((tr[(k, j)] - expect).norm());
        }
    }
    (ri, rr)
}

/// Closed-form diagonals, verified against the materialized transforms.
pub fn harmonic_diagonals(pair: &TransferPair) -> Result<HarmonicDiagonals> {
    let h = harmonic_diagonals_closed_form(pair);
    let (ri, rr) = transform_residuals(pair, &h);
    if ri > STRUCTURE_TOL {
        return Err(Error::Consistency { what: "transformed interpolation structure".into(), residual: ri });
    }
    if rr > STRUCTURE_TOL {
        return Err(Error::Consistency { what: "transformed restriction structure".into(), residual: rr });
    }
    Ok(h)
}

/// Outcome of the restriction compatibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionCheck {
    pub ok: bool,
    /// `L = T_F^C N - Ñ T_F^C`.
    pub violation: RMatrix,
}

/// Node propagation block: ones in the last column.
pub fn last_column_ones(m: usize) -> RMatrix {
    RMatrix::from_fn(m, m, |_, j| if j + 1 == m { 1.0 } else { 0.0 })
}

/// Check with identical node sets on both levels (spatial coarsening only).
pub fn check_restriction_condition(pair: &TransferPair, m_nodes: usize) -> Result<RestrictionCheck> {
    check_restriction_condition_with(pair, &RMatrix::identity(m_nodes))
}

/// Check for a space-time restriction `temporal ⊗ T_F^C`, where `temporal` maps
/// `m` fine nodes to `temporal.rows()` coarse nodes.
pub fn check_restriction_condition_with(pair: &TransferPair, temporal: &RMatrix) -> Result<RestrictionCheck> {
    let (mc, mf) = (temporal.rows(), temporal.cols());
    let r = kron(temporal, &pair.restriction)?;
    let n_f = kron(&last_column_ones(mf), &RMatrix::identity(pair.n_fine))?;
    let n_c = kron(&last_column_ones(mc), &RMatrix::identity(pair.n_coarse))?;
    let violation = r.matmul(&n_f).sub_mat(&n_c.matmul(&r));
    let ok = violation.max_abs() == 0.0;
    Ok(RestrictionCheck { ok, violation })
}
