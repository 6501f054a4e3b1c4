//! Error vectors, the four prediction strategies, and comparison with actual runs.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::collocation::{collocation_matrix, composite_system, spread_initial};
use crate::error::{Error, Result};
use crate::lfa::{block_spectra, decompose, transform_vector, BlockDecomposition, BlockMode, LfaInputs};
use crate::linalg::{eigenvalues, norm2, norm_inf, spectral_norm, sub_vec, RMatrix, C64};
use crate::quadrature::{build_qdelta, QDelta, QDeltaKind, QuadratureRule};
use crate::solvers::{AlgorithmicPfasst, PfasstMatrices};
use crate::space::{exact_solution, make_problem, CirculantOperator, ModelProblem, ProblemKind};
use crate::transfer::{build_ci_pair, stencil_points, TransferPair};

pub mod phases;

pub use phases::{detect_phases, PhaseSegmentation, Segment};

/// Largest space-time dimension the dense pipeline accepts.
pub const MAX_DIM: usize = 8192;
pub const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// `ρ(T)^κ ‖e⁰‖`.
    Rho,
    /// `‖T‖^κ ‖e⁰‖`.
    Norm,
    /// `‖T^κ‖ ‖e⁰‖`.
    NormPower,
    /// `‖T^κ e⁰‖`.
    Apply,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Rho, Strategy::Norm, Strategy::NormPower, Strategy::Apply];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Rho => "rho",
            Strategy::Norm => "norm",
            Strategy::NormPower => "norm-power",
            Strategy::Apply => "apply",
        }
    }

    /// Column-safe name (`norm_power`).
    pub fn column(self) -> &'static str {
        match self {
            Strategy::NormPower => "norm_power",
            s => s.name(),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rho" | "1" => Ok(Strategy::Rho),
            "norm" | "2" => Ok(Strategy::Norm),
            "norm-power" | "norm_power" | "3" => Ok(Strategy::NormPower),
            "apply" | "4" => Ok(Strategy::Apply),
            other => Err(Error::Parse(format!("unknown strategy '{other}'"))),
        }
    }
}

/// Parses a comma separated strategy list; duplicates are dropped, order kept.
pub fn parse_strategies(s: &str) -> Result<Vec<Strategy>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        if part.trim().is_empty() {
            return Err(Error::Parse(format!("empty entry in strategy list '{s}'")));
        }
        let st: Strategy = part.parse()?;
        if !out.contains(&st) {
            out.push(st);
        }
    }
    Ok(out)
}

/// Where predictions come from: a block decomposition or the full matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Blocks {
    Tc,
    C,
    Full,
}

impl Blocks {
    pub fn tag(self) -> &'static str {
        match self {
            Blocks::Tc => "tc",
            Blocks::C => "c",
            Blocks::Full => "full",
        }
    }

    fn block_mode(self) -> Option<BlockMode> {
        match self {
            Blocks::Tc => Some(BlockMode::TimeCollocation),
            Blocks::C => Some(BlockMode::Collocation),
            Blocks::Full => None,
        }
    }
}

impl fmt::Display for Blocks {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Blocks {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "tc" | "time-collocation" => Ok(Blocks::Tc),
            "c" | "collocation" => Ok(Blocks::C),
            "full" => Ok(Blocks::Full),
            other => Err(Error::Parse(format!("unknown block mode '{other}'"))),
        }
    }
}

pub fn parse_blocks(s: &str) -> Result<Vec<Blocks>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let b: Blocks = part.parse()?;
        if !out.contains(&b) {
            out.push(b);
        }
    }
    Ok(out)
}

/// What the error of an iterate is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// The solution of the composite collocation problem (fixed point of the iteration).
    Collocation,
    /// The PDE solution sampled at every node.
    Pde,
}

impl FromStr for Reference {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "collocation" => Ok(Reference::Collocation),
            "pde" | "exact" => Ok(Reference::Pde),
            other => Err(Error::Parse(format!("unknown reference '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub dt: f64,
    /// ν for diffusion, c for advection.
    pub coefficient: f64,
    /// Diffusion number `ν Δt / Δx²` when the coefficient was derived from it.
    pub mu: Option<f64>,
    pub wavenumber: usize,
    pub iterations: usize,
    pub qdelta: QDeltaKind,
    pub interp_degree: usize,
    pub restr_degree: usize,
    pub reference: Reference,
}

pub const DEFAULT_ADVECTION_SPEED: f64 = 4.88e-3;
pub const DEFAULT_MU: f64 = 10.0;

impl ExperimentConfig {
    /// N = 128, M = 5, L = 4, Δt = 0.1, k = 8; μ = 10 for diffusion, c = 4.88e-3 for advection.
    pub fn defaults(problem: ProblemKind) -> Self {
        let base = ExperimentConfig {
            problem,
            n: 128,
            m: 5,
            l: 4,
            dt: 0.1,
            coefficient: DEFAULT_ADVECTION_SPEED,
            mu: None,
            wavenumber: 8,
            iterations: 20,
            qdelta: QDeltaKind::Lu,
            interp_degree: 6,
            restr_degree: 1,
            reference: Reference::Collocation,
        };
        match problem {
            ProblemKind::Diffusion => {
                ExperimentConfig { qdelta: QDeltaKind::ImplicitEuler, ..base }.with_mu(DEFAULT_MU)
            }
            ProblemKind::Advection => base,
        }
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Sets ν from `μ = ν Δt / Δx²`.
    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self.coefficient = mu * self.dx() * self.dx() / self.dt;
        self
    }

    pub fn dim(&self) -> usize {
        self.n * self.m * self.l
    }

    pub fn validate(&self) -> Result<()> {
        let min_n = match self.problem {
            ProblemKind::Diffusion => 4,
            ProblemKind::Advection => 6,
        };
        if self.n % 2 == 1 {
            return Err(Error::Parity(format!("grid size {} is odd", self.n)));
        }
        if self.n < min_n {
            return Err(Error::Range(format!("grid size {} below {min_n}", self.n)));
        }
        if self.m == 0 || self.m > crate::quadrature::MAX_NODES {
            return Err(Error::Range(format!("node count {} outside 1..=12", self.m)));
        }
        if self.l == 0 {
            return Err(Error::Range("at least one subinterval required".into()));
        }
        match self.n.checked_mul(self.m).and_then(|x| x.checked_mul(self.l)) {
            Some(d) if d <= MAX_DIM => {}
            _ => return Err(Error::Size(format!("space-time dimension above {MAX_DIM}"))),
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Range(format!("time step {} must be positive", self.dt)));
        }
        if !(self.coefficient > 0.0 && self.coefficient.is_finite()) {
            return Err(Error::Range(format!("coefficient {} must be positive", self.coefficient)));
        }
        if let Some(mu) = self.mu {
            if self.problem != ProblemKind::Diffusion {
                return Err(Error::Configuration("μ only applies to diffusion".into()));
            }
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::Range(format!("μ = {mu} must be positive")));
            }
        }
        if self.wavenumber == 0 || self.wavenumber >= self.n {
            return Err(Error::Range(format!("wavenumber {} outside 1..{}", self.wavenumber, self.n)));
        }
        if self.iterations > MAX_ITERATIONS {
            return Err(Error::Range(format!("more than {MAX_ITERATIONS} iterations")));
        }
        let nc = self.n / 2;
        for (what, d) in [("interpolation", self.interp_degree), ("restriction", self.restr_degree)] {
            if stencil_points(d) > nc {
                return Err(Error::Size(format!(
                    "{what} degree {d} needs {} coarse points, grid has {nc}",
                    stencil_points(d)
                )));
            }
        }
        Ok(())
    }

    pub fn cfl(&self) -> Option<f64> {
        (self.problem == ProblemKind::Advection).then(|| self.coefficient * self.dt / self.dx())
    }

    pub fn diffusion_number(&self) -> Option<f64> {
        (self.problem == ProblemKind::Diffusion).then(|| self.coefficient * self.dt / (self.dx() * self.dx()))
    }
}

/// All assembled pieces of one experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub problem: ModelProblem,
    pub coarse_op: CirculantOperator,
    pub rule: QuadratureRule,
    pub qdelta: QDelta,
    pub pair: TransferPair,
    pub u0: Vec<f64>,
    pub matrices: PfasstMatrices,
    pub algorithmic: AlgorithmicPfasst,
}

impl Experiment {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let problem = make_problem(cfg.problem, cfg.n, cfg.coefficient)?;
        let coarse_op = problem.coarse_operator()?;
        let rule = QuadratureRule::radau(cfg.m)?;
        let qdelta = build_qdelta(&rule, cfg.qdelta)?;
        let pair = build_ci_pair(cfg.n, cfg.interp_degree, cfg.restr_degree)?;
        let u0 = exact_solution(&problem, cfg.wavenumber, 0.0)?;
        let coll = collocation_matrix(&problem.operator.materialize(), &rule, cfg.dt)?;
        let system = composite_system(&coll, cfg.l, &u0)?;
        let matrices = PfasstMatrices::new(system, &coarse_op.materialize(), &qdelta, pair.clone())?;
        let algorithmic =
            AlgorithmicPfasst::new(&problem.operator, &coarse_op, &rule, &qdelta, cfg.dt, cfg.l, pair.clone())?;
        Ok(Experiment { cfg: cfg.clone(), problem, coarse_op, rule, qdelta, pair, u0, matrices, algorithmic })
    }

    pub fn lfa_inputs(&self) -> Result<LfaInputs> {
        LfaInputs::new(&self.problem.operator, &self.coarse_op, &self.rule, &self.qdelta, self.cfg.dt, self.cfg.l, &self.pair)
    }

    pub fn spread(&self) -> Vec<f64> {
        spread_initial(&self.u0, self.cfg.m, self.cfg.l)
    }

    /// PDE solution at `t_l + Δt τ_m` for every interval and node.
    pub fn pde_solution(&self) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.cfg.dim());
        for l in 0..self.cfg.l {
            for &tau in &self.rule.nodes {
                let t = (l as f64 + tau) * self.cfg.dt;
                out.extend(exact_solution(&self.problem, self.cfg.wavenumber, t)?);
            }
        }
        Ok(out)
    }

    pub fn reference_solution(&self, reference: Reference) -> Result<Vec<f64>> {
        match reference {
            Reference::Collocation => self.matrices.collocation_solution(),
            Reference::Pde => self.pde_solution(),
        }
    }

    /// `iterate - reference`.
    pub fn error_vector(&self, iterate: &[f64], reference: Reference) -> Result<Vec<f64>> {
        let r = self.reference_solution(reference)?;
        if r.len() != iterate.len() {
            return Err(Error::Dimension("iterate length".into()));
        }
        Ok(sub_vec(iterate, &r))
    }

    pub fn initial_error(&self, reference: Reference) -> Result<Vec<f64>> {
        self.error_vector(&self.spread(), reference)
    }
}

/// `e = iterate - reference` with the configured reference.
pub fn error_vector(exp: &Experiment, iterate: &[f64]) -> Result<Vec<f64>> {
    exp.error_vector(iterate, exp.cfg.reference)
}

/// Aggregates of one prediction source.
#[derive(Debug, Clone)]
pub struct ModeAnalysis {
    pub blocks: Blocks,
    pub rho: f64,
    pub norm: f64,
    /// With zeroed collocation blocks restored (equal to `rho`/`norm` otherwise).
    pub rho_raw: f64,
    pub norm_raw: f64,
    /// `(k, j, λ)` for every eigenvalue in block order; indices are absent
    /// where the source has no such label.
    pub spectrum: Vec<(Option<usize>, Option<usize>, C64)>,
    pub decomposition: Option<BlockDecomposition>,
    pub full: Option<RMatrix>,
}

pub fn analyze_mode(exp: &Experiment, blocks: Blocks) -> Result<ModeAnalysis> {
    match blocks.block_mode() {
        Some(mode) => {
            let d = decompose(&exp.lfa_inputs()?, mode)?;
            let s = block_spectra(&d)?;
            let spectrum = s
                .blocks
                .iter()
                .flat_map(|b| b.spectrum.eigenvalues.iter().map(move |&z| (Some(b.k), b.j, z)))
                .collect();
            Ok(ModeAnalysis {
                blocks,
                rho: s.rho,
                norm: s.norm,
                rho_raw: s.rho_raw,
                norm_raw: s.norm_raw,
                spectrum,
                decomposition: Some(d),
                full: None,
            })
        }
        None => {
            let t = exp.matrices.iteration_matrix()?.t;
            let eigs = eigenvalues(&t)?;
            let rho = eigs.spectral_radius();
            let norm = spectral_norm(&t);
            Ok(ModeAnalysis {
                blocks,
                rho,
                norm,
                rho_raw: rho,
                norm_raw: norm,
                spectrum: eigs.eigenvalues.iter().map(|&z| (None, None, z)).collect(),
                decomposition: None,
                full: Some(t),
            })
        }
    }
}

/// Predicted 2-norm errors for `κ = 0..=kmax`.
///
/// `e0` is required by the a posteriori strategy `apply` only; `harmonics_only`
/// restricts it to the blocks excited by the configured wavenumber.
pub fn predict(
    exp: &Experiment,
    mode: &ModeAnalysis,
    strategy: Strategy,
    e0: Option<&[f64]>,
    kmax: usize,
    harmonics_only: bool,
) -> Result<Vec<f64>> {
    let e0_norm = match e0 {
        Some(e) => norm2(e),
        None if strategy == Strategy::Apply => {
            return Err(Error::Capability("strategy 'apply' needs an initial error vector".into()))
        }
        None => 1.0,
    };
    let powers = |x: f64| (0..=kmax).map(|k| x.powi(k as i32) * e0_norm).collect::<Vec<f64>>();
    Ok(match strategy {
        Strategy::Rho => powers(mode.rho),
        Strategy::Norm => powers(mode.norm),
        Strategy::NormPower => match (&mode.decomposition, &mode.full) {
            (Some(d), _) => d.power_norms(kmax).iter().map(|p| p * e0_norm).collect(),
            (None, Some(t)) => {
                let mut p = RMatrix::identity(t.rows());
                let mut out = vec![e0_norm];
                for _ in 0..kmax {
                    p = t.matmul(&p);
                    out.push(spectral_norm(&p) * e0_norm);
                }
                out
            }
            _ => unreachable!("mode analysis without a source"),
        },
        Strategy::Apply => {
            let e0 = e0.expect("checked above");
            match (&mode.decomposition, &mode.full) {
                (Some(d), _) => {
                    let x = transform_vector(&e0.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>(), &d.meta);
                    let subset = harmonics_only.then(|| d.meta.harmonic_blocks(exp.cfg.wavenumber));
                    d.propagate_norms(&x, kmax, subset.as_deref())
                }
                (None, Some(t)) => {
                    let mut v = e0.to_vec();
                    let mut out = vec![norm2(&v)];
                    for _ in 0..kmax {
                        v = t.matvec(&v);
                        out.push(norm2(&v));
                    }
                    out
                }
                _ => unreachable!("mode analysis without a source"),
            }
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub strategy: Strategy,
    pub blocks: Blocks,
    pub values: Vec<f64>,
}

impl Prediction {
    pub fn column(&self) -> String {
        format!("pred_{}_{}", self.strategy.column(), self.blocks.tag())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorTrace {
    pub iterations: usize,
    pub actual_inf: Vec<f64>,
    pub actual_2: Vec<f64>,
    /// Iterate minus reference, computed from the iterates of the real run.
    pub direct_2: Vec<f64>,
    pub predictions: Vec<Prediction>,
}

impl ErrorTrace {
    pub fn prediction(&self, strategy: Strategy, blocks: Blocks) -> Option<&Prediction> {
        self.predictions.iter().find(|p| p.strategy == strategy && p.blocks == blocks)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeSummary {
    pub blocks: Blocks,
    pub rho: f64,
    pub norm: f64,
    pub rho_raw: f64,
    pub norm_raw: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub trace: ErrorTrace,
    pub modes: Vec<ModeAnalysis>,
    pub phases: PhaseSegmentation,
    pub invariants: Vec<InvariantCheck>,
}

impl Report {
    pub fn summaries(&self) -> Vec<ModeSummary> {
        self.modes
            .iter()
            .map(|m| ModeSummary { blocks: m.blocks, rho: m.rho, norm: m.norm, rho_raw: m.rho_raw, norm_raw: m.norm_raw })
            .collect()
    }
}

/// Actual error norms below which relative comparisons are skipped.
pub const EXACTNESS_FLOOR: f64 = 1e-13;
pub const EXACTNESS_TOL: f64 = 1e-8;
/// Relative slack for the bound chain, which holds with equality at `κ ≤ 1`.
pub const BOUND_SLACK: f64 = 1e-12;

/// Error sequence of the algorithmic run.
///
/// Against the collocation reference the iteration error obeys `e^{k+1} = T e^k`,
/// so it is obtained without cancellation by running the same algorithm on the
/// homogeneous problem from `e⁰`. Against the PDE reference it is `iterate - u`.
pub fn actual_errors(exp: &Experiment, kmax: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let reference = exp.cfg.reference;
    let iterates = exp.algorithmic.run(&exp.u0, kmax)?;
    let r = exp.reference_solution(reference)?;
    let direct: Vec<f64> = iterates.iter().map(|u| norm2(&sub_vec(u, &r))).collect();
    let errors = match reference {
        Reference::Collocation => {
            let e0 = sub_vec(&iterates[0], &r);
            exp.algorithmic.run_from(&e0, &vec![0.0; exp.cfg.n], kmax)?
        }
        Reference::Pde => iterates.iter().map(|u| sub_vec(u, &r)).collect(),
    };
    Ok((errors, direct))
}

/// Runs PFASST, attaches the requested predictions, detects phases and checks
/// the built-in invariants.
pub fn run_and_compare(exp: &Experiment, strategies: &[Strategy], blocks: &[Blocks]) -> Result<Report> {
    let kmax = exp.cfg.iterations;
    let (errors, direct_2) = actual_errors(exp, kmax)?;
    let actual_2: Vec<f64> = errors.iter().map(|e| norm2(e)).collect();
    let actual_inf: Vec<f64> = errors.iter().map(|e| norm_inf(e)).collect();
    let e0 = &errors[0];
    let mut modes = Vec::new();
    let mut predictions = Vec::new();
    for &b in blocks {
        let mode = analyze_mode(exp, b)?;
        for &s in strategies {
            predictions.push(Prediction { strategy: s, blocks: b, values: predict(exp, &mode, s, Some(e0), kmax, true)? });
        }
        modes.push(mode);
    }
    let trace = ErrorTrace { iterations: kmax, actual_inf, actual_2, direct_2, predictions };
    let phases = detect_phases(&trace.actual_2);
    let invariants = check_invariants(exp, &trace);
    Ok(Report { trace, modes, phases, invariants })
}

fn check_invariants(exp: &Experiment, trace: &ErrorTrace) -> Vec<InvariantCheck> {
    let mut out = Vec::new();
    let collocation = exp.cfg.reference == Reference::Collocation;
    if let (Some(p), true) = (trace.prediction(Strategy::Apply, Blocks::Tc), collocation) {
        let worst = exactness_residual(&p.values, &trace.actual_2);
        out.push(InvariantCheck {
            name: "apply-tc-exactness".into(),
            passed: worst < EXACTNESS_TOL,
            residual: worst,
            tolerance: EXACTNESS_TOL,
            detail: format!("max relative deviation while actual > {EXACTNESS_FLOOR:e}"),
        });
    }
    for b in [Blocks::Tc, Blocks::Full] {
        let (Some(p2), Some(p3)) = (trace.prediction(Strategy::Norm, b), trace.prediction(Strategy::NormPower, b))
        else {
            continue;
        };
        if !collocation {
            continue;
        }
        let violations = bound_chain_violations(&trace.actual_2, &p3.values, &p2.values);
        out.push(InvariantCheck {
            name: format!("bound-chain-{}", b.tag()),
            passed: violations == 0,
            residual: violations as f64,
            tolerance: 0.0,
            detail: "iterations violating actual <= norm-power <= norm".into(),
        });
    }
    if collocation {
        let floor = trace.actual_2[0] * 1e-12;
        let worst = trace.direct_2.iter().zip(&trace.actual_2).map(|(d, a)| (d - a).abs()).fold(0.0, f64::max);
        out.push(InvariantCheck {
            name: "direct-vs-propagated-error".into(),
            passed: worst <= floor,
            residual: worst,
            tolerance: floor,
            detail: "iterate minus collocation solution vs homogeneous run".into(),
        });
    }
    out
}

/// Largest `|pred - actual| / actual` over iterations with `actual > 1e-13`.
pub fn exactness_residual(predicted: &[f64], actual: &[f64]) -> f64 {
    predicted
        .iter()
        .zip(actual)
        .filter(|(_, &a)| a > EXACTNESS_FLOOR)
        .map(|(p, a)| (p - a).abs() / a)
        .fold(0.0, f64::max)
}

/// Iterations where `actual <= norm-power <= norm` fails beyond rounding slack.
pub fn bound_chain_violations(actual: &[f64], norm_power: &[f64], norm: &[f64]) -> usize {
    actual
        .iter()
        .zip(norm_power)
        .zip(norm)
        .filter(|((&a, &p3), &p2)| a > p3 * (1.0 + BOUND_SLACK) || p3 > p2 * (1.0 + BOUND_SLACK))
        .count()
}
