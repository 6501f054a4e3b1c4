//! Cross-checks between the matrix, algorithmic and block formulations.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::analysis::{Experiment, ExperimentConfig};
use crate::error::{Error, Result};
use crate::lfa::{block_spectra, tc_decompose, LfaInputs};
use crate::linalg::{eigenvalues, max_abs_diff, spectral_norm, RMatrix, C64};
use crate::space::ProblemKind;
use crate::transfer::{
    check_restriction_condition, check_restriction_condition_with, harmonic_diagonals_closed_form, transform_residuals,
    STRUCTURE_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    /// N = 32, M = 3, L = 4.
    Small,
    /// N = 128, M = 5, L = 4.
    Paper,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Small => "small",
            Scale::Paper => "paper",
        }
    }

    fn shape(self) -> (usize, usize, usize) {
        match self {
            Scale::Small => (32, 3, 4),
            Scale::Paper => (128, 5, 4),
        }
    }
}

impl FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "small" => Ok(Scale::Small),
            "paper" => Ok(Scale::Paper),
            other => Err(Error::Parse(format!("unknown scale '{other}'"))),
        }
    }
}

/// Deliberate corruption of one route, used to make sure the checks bite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Flip the sign of `Q_Δ` in the block formulas only.
    NegateQDelta,
}

impl FromStr for Fault {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "negate-qdelta" => Ok(Fault::NegateQDelta),
            other => Err(Error::Parse(format!("unknown fault '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub seconds: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<40} residual {:.3e} tol {:.1e} ({:.2}s)",
            if self.passed { "ok" } else { "FAIL" },
            self.name,
            self.residual,
            self.tolerance,
            self.seconds
        )
    }
}

fn check(name: String, tolerance: f64, f: impl FnOnce() -> Result<f64>) -> Check {
    let t = Instant::now();
    let (residual, passed) = match f() {
        Ok(r) => (r, r <= tolerance),
        Err(_) => (f64::INFINITY, false),
    };
    Check { name, passed, residual, tolerance, seconds: t.elapsed().as_secs_f64() }
}

pub const EQUIVALENCE_TOL: f64 = 1e-10;
pub const SPECTRUM_TOL: f64 = 1e-8;
pub const NORM_TOL: f64 = 1e-8;
pub const VERIFY_ITERATIONS: usize = 10;

fn config(kind: ProblemKind, scale: Scale) -> ExperimentConfig {
    let (n, m, l) = scale.shape();
    let mut cfg = ExperimentConfig::defaults(kind);
    cfg.n = n;
    cfg.m = m;
    cfg.l = l;
    cfg.iterations = VERIFY_ITERATIONS;
    if kind == ProblemKind::Diffusion {
        cfg = cfg.with_mu(crate::analysis::DEFAULT_MU);
    }
    cfg
}

fn inputs(exp: &Experiment, fault: Option<Fault>) -> Result<LfaInputs> {
    let mut inputs = exp.lfa_inputs()?;
    if fault == Some(Fault::NegateQDelta) {
        inputs.qdelta = inputs.qdelta.scale(-1.0);
    }
    Ok(inputs)
}

/// Max over iterations of the deviation between algorithmic and matrix PFASST.
pub fn algorithmic_vs_matrix(exp: &Experiment, iterations: usize) -> Result<f64> {
    let a = exp.algorithmic.run(&exp.u0, iterations)?;
    let b = exp.matrices.run(&exp.spread(), iterations)?;
    Ok(a.iter().zip(&b).map(|(x, y)| max_abs_diff(x, y)).fold(0.0, f64::max))
}

/// Matching distance between the full spectrum and the union of the
/// time-collocation block spectra, relative to `max(1, ρ)`.
pub fn block_vs_full_spectrum(exp: &Experiment, t: &RMatrix, fault: Option<Fault>) -> Result<f64> {
    let full = eigenvalues(t)?;
    let blocks = block_spectra(&tc_decompose(&inputs(exp, fault)?)?)?.union();
    Ok(full.matching_distance(&blocks) / full.spectral_radius().max(1.0))
}

/// Relative gap between the block-maximum norm and the full spectral norm.
pub fn norm_identity(exp: &Experiment, t: &RMatrix, fault: Option<Fault>) -> Result<f64> {
    let full = spectral_norm(t);
    let blocks = block_spectra(&tc_decompose(&inputs(exp, fault)?)?)?.norm;
    Ok((full - blocks).abs() / full.max(f64::MIN_POSITIVE))
}

/// Deviation from the two-diagonal structure plus the `k = 0` pair `{0, √2}`.
pub fn transfer_structure(exp: &Experiment) -> f64 {
    let h = harmonic_diagonals_closed_form(&exp.pair);
    let (ri, rr) = transform_residuals(&exp.pair, &h);
    let (zero, root2) = (C64::new(0.0, 0.0), C64::new(2f64.sqrt(), 0.0));
    let (a, b) = (h.d[0], h.d_hat[0]);
    let pair0 = ((a - zero).norm().max((b - root2).norm())).min((a - root2).norm().max((b - zero).norm()));
    ri.max(rr).max(pair0)
}

/// Zero when the spatial-only restriction passes and a broken temporal one is caught.
pub fn restriction_condition(exp: &Experiment) -> Result<f64> {
    let m = exp.cfg.m;
    let good = check_restriction_condition(&exp.pair, m)?;
    let mut broken = RMatrix::identity(m);
    if m > 1 {
        // Averaging the last two nodes moves the projection away from the last node.
        broken[(m - 1, m - 2)] = 0.5;
        broken[(m - 1, m - 1)] = 0.5;
    } else {
        broken[(0, 0)] = 0.5;
    }
    let bad = check_restriction_condition_with(&exp.pair, &broken)?;
    let mut residual = good.violation.max_abs();
    if bad.ok {
        residual = residual.max(1.0);
    }
    Ok(residual)
}

/// Runs all checks for both model problems.
pub fn run_verify(scale: Scale, fault: Option<Fault>) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for kind in [ProblemKind::Diffusion, ProblemKind::Advection] {
        let exp = Experiment::build(&config(kind, scale))?;
        let tag = kind.name();
        out.push(check(format!("{tag}: algorithmic vs matrix PFASST"), EQUIVALENCE_TOL, || {
            algorithmic_vs_matrix(&exp, VERIFY_ITERATIONS)
        }));
        let t = exp.matrices.iteration_matrix()?.t;
        out.push(check(format!("{tag}: block vs full spectrum"), SPECTRUM_TOL, || {
            block_vs_full_spectrum(&exp, &t, fault)
        }));
        out.push(check(format!("{tag}: block norm vs spectral norm"), NORM_TOL, || norm_identity(&exp, &t, fault)));
        out.push(check(format!("{tag}: transfer transform structure"), STRUCTURE_TOL, || Ok(transfer_structure(&exp))));
        out.push(check(format!("{tag}: restriction condition"), 0.0, || restriction_condition(&exp)));
    }
    Ok(out)
}
