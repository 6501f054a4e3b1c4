//! SDC, MLSDC and two-level PFASST as preconditioned iterations, plus a
//! sweep-by-sweep simulation of the PFASST schedule.

use std::fmt;

use crate::collocation::{last_node, spread_initial, CompositeSystem};
use crate::error::{Error, Result};
use crate::linalg::{add_vec, kron, sub_vec, BlockBidiagonal, Lu, RMatrix};
use crate::quadrature::{QDelta, QuadratureRule};
use crate::space::CirculantOperator;
use crate::transfer::{check_restriction_condition, check_restriction_condition_with, last_column_ones, TransferPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Fine,
    Coarse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreconditionerKind {
    SdcFine,
    SdcCoarse,
    Mlsdc,
    BlockGs,
    BlockJacobi,
    PfasstComposite,
}

#[derive(Debug, Clone)]
enum Action {
    Factored(BlockBidiagonal<f64>),
    /// Preconditioners defined through their inverse.
    Inverse(RMatrix),
}

/// A matrix `P` whose inverse defines one Richardson step `u + P^{-1}(c - M u)`.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    pub kind: PreconditionerKind,
    pub level: Level,
    pub matrix: RMatrix,
    action: Action,
}

fn sweep_block(a: &RMatrix, qdelta: &QDelta, dt: f64) -> Result<RMatrix> {
    Ok(kron(&qdelta.matrix, a)?.scale(dt).identity_minus())
}

impl Preconditioner {
    /// `P = I - Δt Q_Δ ⊗ A` on one interval.
    pub fn sdc(a: &RMatrix, qdelta: &QDelta, dt: f64, level: Level) -> Result<Self> {
        let d = sweep_block(a, qdelta, dt)?;
        let kind = match level {
            Level::Fine => PreconditionerKind::SdcFine,
            Level::Coarse => PreconditionerKind::SdcCoarse,
        };
        Self::factored(kind, level, BlockBidiagonal::new(1, d, None)?)
    }

    /// Block lower-bidiagonal: sweeps on each interval, `-N` couples consecutive ones.
    pub fn block_gs(a: &RMatrix, qdelta: &QDelta, dt: f64, l: usize, level: Level) -> Result<Self> {
        let d = sweep_block(a, qdelta, dt)?;
        let n = kron(&last_column_ones(qdelta.matrix.rows()), &RMatrix::identity(a.rows()))?;
        Self::factored(PreconditionerKind::BlockGs, level, BlockBidiagonal::new(l, d, Some(n))?)
    }

    /// Block diagonal: independent sweeps on each interval.
    pub fn block_jacobi(a: &RMatrix, qdelta: &QDelta, dt: f64, l: usize, level: Level) -> Result<Self> {
        let d = sweep_block(a, qdelta, dt)?;
        Self::factored(PreconditionerKind::BlockJacobi, level, BlockBidiagonal::new(l, d, None)?)
    }

    fn factored(kind: PreconditionerKind, level: Level, b: BlockBidiagonal<f64>) -> Result<Self> {
        Ok(Preconditioner { kind, level, matrix: b.materialize(), action: Action::Factored(b) })
    }

    /// Two-level preconditioner `P^{-1} = TPT + P_f^{-1} - P_f^{-1} M TPT` with
    /// `TPT = T_C^F P_c^{-1} T_F^C`. MLSDC for SDC sweeps, PFASST for block sweeps.
    pub fn two_level(
        fine: &Preconditioner,
        coarse: &Preconditioner,
        transfer: &SpaceTimeTransfer,
        m: &RMatrix,
    ) -> Result<Self> {
        let kind = match (fine.kind, coarse.kind) {
            (PreconditionerKind::SdcFine, PreconditionerKind::SdcCoarse) => PreconditionerKind::Mlsdc,
            (PreconditionerKind::BlockJacobi, PreconditionerKind::BlockGs) => PreconditionerKind::PfasstComposite,
            (f, c) => {
                return Err(Error::Configuration(format!("no two-level preconditioner from {f:?} and {c:?}")))
            }
        };
        let tpt = transfer.interpolation().matmul(&coarse.solve_matrix(&transfer.restriction()));
        let pf_inv = fine.solve_matrix(&RMatrix::identity(fine.dim()));
        let inverse = tpt.add_mat(&pf_inv).sub_mat(&fine.solve_matrix(&m.matmul(&tpt)));
        let matrix = Lu::factor(&inverse)?.inverse();
        Ok(Preconditioner { kind, level: Level::Fine, matrix, action: Action::Inverse(inverse) })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        match &self.action {
            Action::Factored(b) => b.solve(r),
            Action::Inverse(inv) => inv.matvec(r),
        }
    }

    pub fn solve_matrix(&self, r: &RMatrix) -> RMatrix {
        match &self.action {
            Action::Factored(b) => b.solve_matrix(r),
            Action::Inverse(inv) => inv.matmul(r),
        }
    }
}

fn check_dims(m: &RMatrix, c: &[f64], u: &[f64]) -> Result<()> {
    if !m.is_square() || m.rows() != c.len() || c.len() != u.len() {
        return Err(Error::Dimension(format!(
            "system {}x{}, rhs {}, iterate {}",
            m.rows(),
            m.cols(),
            c.len(),
            u.len()
        )));
    }
    Ok(())
}

pub fn residual(m: &RMatrix, c: &[f64], u: &[f64]) -> Vec<f64> {
    sub_vec(c, &m.matvec(u))
}

/// `u + P^{-1}(c - M u)`.
pub fn richardson_step(p: &Preconditioner, m: &RMatrix, c: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    check_dims(m, c, u)?;
    if p.dim() != u.len() {
        return Err(Error::Dimension("preconditioner size differs from system".into()));
    }
    Ok(add_vec(u, &p.solve(&residual(m, c, u))))
}

/// `I_{LM} ⊗ T_C^F` and `I_{LM} ⊗ T_F^C` applied node by node.
#[derive(Debug, Clone)]
pub struct SpaceTimeTransfer {
    pub pair: TransferPair,
    pub m: usize,
    pub l: usize,
}

impl SpaceTimeTransfer {
    /// Spatial coarsening with identical node sets; validates the restriction condition.
    pub fn new(pair: TransferPair, m: usize, l: usize) -> Result<Self> {
        if !check_restriction_condition(&pair, m)?.ok {
            return Err(Error::Configuration("restriction condition violated".into()));
        }
        Ok(SpaceTimeTransfer { pair, m, l })
    }

    /// Rejects temporal restrictions that break `T_F^C N = Ñ T_F^C`.
    pub fn validate_temporal(pair: &TransferPair, temporal: &RMatrix) -> Result<()> {
        let check = check_restriction_condition_with(pair, temporal)?;
        if check.ok {
            Ok(())
        } else {
            Err(Error::Configuration(format!(
                "restriction condition violated (max |L| = {:e})",
                check.violation.max_abs()
            )))
        }
    }

    fn slices(&self) -> usize {
        self.m * self.l
    }

    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        let n = self.pair.n_fine;
        assert_eq!(u.len(), self.slices() * n);
        u.chunks(n).flat_map(|c| self.pair.restrict(c)).collect()
    }

    pub fn interpolate(&self, u: &[f64]) -> Vec<f64> {
        let nc = self.pair.n_coarse;
        assert_eq!(u.len(), self.slices() * nc);
        u.chunks(nc).flat_map(|c| self.pair.interpolate(c)).collect()
    }

    pub fn interpolation(&self) -> RMatrix {
        kron(&RMatrix::identity(self.slices()), &self.pair.interpolation).expect("transfer size")
    }

    pub fn restriction(&self) -> RMatrix {
        kron(&RMatrix::identity(self.slices()), &self.pair.restriction).expect("transfer size")
    }

    /// Same transfer restricted to a single interval.
    pub fn single_interval(&self) -> SpaceTimeTransfer {
        SpaceTimeTransfer { pair: self.pair.clone(), m: self.m, l: 1 }
    }
}

/// Coarse correction followed by a fine sweep from the corrected iterate.
fn two_level_step(
    fine: &Preconditioner,
    coarse: &Preconditioner,
    transfer: &SpaceTimeTransfer,
    m: &RMatrix,
    c: &[f64],
    u: &[f64],
) -> Result<Vec<f64>> {
    check_dims(m, c, u)?;
    let slices = transfer.m * transfer.l;
    if fine.dim() != u.len() || slices * transfer.pair.n_fine != u.len() || coarse.dim() != slices * transfer.pair.n_coarse {
        return Err(Error::Dimension("preconditioners and transfer do not match the system".into()));
    }
    let r = residual(m, c, u);
    let corr = transfer.interpolate(&coarse.solve(&transfer.restrict(&r)));
    let half = add_vec(u, &corr);
    Ok(add_vec(&half, &fine.solve(&residual(m, c, &half))))
}

/// One MLSDC iteration on a single interval.
pub fn mlsdc_step(
    fine: &Preconditioner,
    coarse: &Preconditioner,
    transfer: &SpaceTimeTransfer,
    m: &RMatrix,
    c: &[f64],
    u: &[f64],
) -> Result<Vec<f64>> {
    if fine.kind != PreconditionerKind::SdcFine || coarse.kind != PreconditionerKind::SdcCoarse {
        return Err(Error::Configuration("MLSDC needs fine and coarse SDC preconditioners".into()));
    }
    two_level_step(fine, coarse, transfer, m, c, u)
}

/// One PFASST iteration in matrix form:
/// `u' = u + T_C^F P̃^{-1} T_F^C (c - M u)`, then `u'' = u' + P̂^{-1}(c - M u')`.
pub fn pfasst_step_matrix(
    coarse_gs: &Preconditioner,
    fine_jacobi: &Preconditioner,
    transfer: &SpaceTimeTransfer,
    m: &RMatrix,
    c: &[f64],
    u: &[f64],
) -> Result<Vec<f64>> {
    if coarse_gs.kind != PreconditionerKind::BlockGs || fine_jacobi.kind != PreconditionerKind::BlockJacobi {
        return Err(Error::Configuration("PFASST needs a coarse block-GS and a fine block-Jacobi".into()));
    }
    two_level_step(fine_jacobi, coarse_gs, transfer, m, c, u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationKind {
    Sdc,
    Mlsdc,
    Pfasst,
}

impl fmt::Display for IterationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IterationKind::Sdc => "T_SDC",
            IterationKind::Mlsdc => "T_MLSDC",
            IterationKind::Pfasst => "T_PFASST",
        })
    }
}

/// Error propagation matrix `e^{k+1} = T e^k`.
#[derive(Debug, Clone)]
pub struct IterationOperator {
    pub kind: IterationKind,
    pub t: RMatrix,
    pub description: String,
}

impl IterationOperator {
    pub fn apply(&self, e: &[f64]) -> Vec<f64> {
        self.t.matvec(e)
    }
}

/// Materializes `I - P^{-1} M` (SDC) or `(I - P^{-1} M)(I - T_C^F P̃^{-1} T_F^C M)`.
pub fn build_iteration_matrix(
    kind: IterationKind,
    m: &RMatrix,
    fine: &Preconditioner,
    coarse: Option<(&Preconditioner, &SpaceTimeTransfer)>,
) -> Result<IterationOperator> {
    let expected = match (kind, coarse) {
        (IterationKind::Sdc, None) => None,
        (IterationKind::Mlsdc, Some(_)) => Some((PreconditionerKind::SdcFine, PreconditionerKind::SdcCoarse)),
        (IterationKind::Pfasst, Some(_)) => Some((PreconditionerKind::BlockJacobi, PreconditionerKind::BlockGs)),
        _ => return Err(Error::Configuration(format!("{kind}: wrong set of components"))),
    };
    if let (Some(expected), Some((cp, _))) = (expected, coarse) {
        if (fine.kind, cp.kind) != expected {
            return Err(Error::Configuration(format!(
                "{kind} needs {:?}/{:?}, got {:?}/{:?}",
                expected.0, expected.1, fine.kind, cp.kind
            )));
        }
    }
    if !m.is_square() || fine.dim() != m.rows() {
        return Err(Error::Dimension(format!("preconditioner of size {} for system {}", fine.dim(), m.rows())));
    }
    let smoother = fine.solve_matrix(m).identity_minus();
    let t = match coarse {
        None => smoother,
        Some((cp, tr)) => {
            let rm = tr.restriction().matmul(m);
            if cp.dim() != rm.rows() {
                return Err(Error::Dimension("coarse preconditioner does not match the transfer".into()));
            }
            let cgc = tr.interpolation().matmul(&cp.solve_matrix(&rm)).identity_minus();
            smoother.matmul(&cgc)
        }
    };
    let description = format!("{kind} of dimension {}", t.rows());
    Ok(IterationOperator { kind, t, description })
}

/// Node-by-node SDC sweeps for `(I - Δt Q ⊗ A) U = rhs` with a circulant `A`.
#[derive(Debug, Clone)]
pub struct SdcSweeper {
    a: CirculantOperator,
    q: RMatrix,
    qd: RMatrix,
    dt: f64,
    node_solvers: Vec<Lu<f64>>,
}

impl SdcSweeper {
    pub fn new(a: &CirculantOperator, rule: &QuadratureRule, qdelta: &QDelta, dt: f64) -> Result<Self> {
        let am = a.materialize();
        let node_solvers = (0..rule.m())
            .map(|i| Lu::factor(&am.scale(dt * qdelta.matrix[(i, i)]).identity_minus()))
            .collect::<Result<Vec<_>>>()?;
        Ok(SdcSweeper { a: a.clone(), q: rule.q.clone(), qd: qdelta.matrix.clone(), dt, node_solvers })
    }

    pub fn m(&self) -> usize {
        self.q.rows()
    }

    pub fn n(&self) -> usize {
        self.a.n
    }

    fn apply_a(&self, u: &[f64]) -> Vec<Vec<f64>> {
        u.chunks(self.n()).map(|c| self.a.apply(c)).collect()
    }

    /// `U - Δt (Q ⊗ A) U` on one interval.
    pub fn apply_m(&self, u: &[f64]) -> Vec<f64> {
        let (m, n) = (self.m(), self.n());
        let au = self.apply_a(u);
        let mut out = u.to_vec();
        for i in 0..m {
            for j in 0..m {
                let w = self.dt * self.q[(i, j)];
                for p in 0..n {
                    out[i * n + p] -= w * au[j][p];
                }
            }
        }
        out
    }

    /// One sweep: for each node solve
    /// `(I - Δt qΔ_ii A) U_i = rhs_i + Δt Σ_{j<i} qΔ_ij A U'_j + Δt Σ_j (q_ij - qΔ_ij) A U_j`.
    pub fn sweep(&self, u: &[f64], rhs: &[f64]) -> Vec<f64> {
        let (m, n) = (self.m(), self.n());
        assert_eq!(u.len(), m * n);
        assert_eq!(rhs.len(), m * n);
        let au = self.apply_a(u);
        let mut new = vec![0.0; m * n];
        let mut au_new: Vec<Vec<f64>> = Vec::with_capacity(m);
        for i in 0..m {
            let mut b = rhs[i * n..(i + 1) * n].to_vec();
            for j in 0..m {
                let w = self.dt * (self.q[(i, j)] - self.qd[(i, j)]);
                for p in 0..n {
                    b[p] += w * au[j][p];
                }
            }
            for (j, aj) in au_new.iter().enumerate() {
                let w = self.dt * self.qd[(i, j)];
                for p in 0..n {
                    b[p] += w * aj[p];
                }
            }
            self.node_solvers[i].solve_in_place(&mut b);
            au_new.push(self.a.apply(&b));
            new[i * n..(i + 1) * n].copy_from_slice(&b);
        }
        new
    }
}

/// Sweep counts per level and iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sweeps {
    pub fine: usize,
    pub coarse: usize,
}

impl Default for Sweeps {
    fn default() -> Self {
        Sweeps { fine: 1, coarse: 1 }
    }
}

/// Two-level PFASST over `l` intervals, run processor by processor.
#[derive(Debug, Clone)]
pub struct AlgorithmicPfasst {
    pub fine: SdcSweeper,
    pub coarse: SdcSweeper,
    pub pair: TransferPair,
    pub l: usize,
    pub sweeps: Sweeps,
}

/// What processor `l` holds between iterations.
struct Processor {
    u: Vec<f64>,
}

impl AlgorithmicPfasst {
    pub fn new(
        fine_op: &CirculantOperator,
        coarse_op: &CirculantOperator,
        rule: &QuadratureRule,
        qdelta: &QDelta,
        dt: f64,
        l: usize,
        pair: TransferPair,
    ) -> Result<Self> {
        if fine_op.n != pair.n_fine || coarse_op.n != pair.n_coarse {
            return Err(Error::Dimension("operators do not match the transfer grids".into()));
        }
        if !check_restriction_condition(&pair, rule.m())?.ok {
            return Err(Error::Configuration("restriction condition violated".into()));
        }
        Ok(AlgorithmicPfasst {
            fine: SdcSweeper::new(fine_op, rule, qdelta, dt)?,
            coarse: SdcSweeper::new(coarse_op, rule, qdelta, dt)?,
            pair,
            l,
            sweeps: Sweeps::default(),
        })
    }

    fn restrict_nodes(&self, u: &[f64]) -> Vec<f64> {
        u.chunks(self.pair.n_fine).flat_map(|c| self.pair.restrict(c)).collect()
    }

    fn interpolate_nodes(&self, u: &[f64]) -> Vec<f64> {
        u.chunks(self.pair.n_coarse).flat_map(|c| self.pair.interpolate(c)).collect()
    }

    /// `K` iterations from the spread initial value; returns `K + 1` iterates.
    pub fn run(&self, u0: &[f64], iterations: usize) -> Result<Vec<Vec<f64>>> {
        let start = spread_initial(u0, self.fine.m(), self.l);
        self.run_from(&start, u0, iterations)
    }

    /// `K` iterations from an arbitrary composite iterate with initial value `u0`.
    pub fn run_from(&self, start: &[f64], u0: &[f64], iterations: usize) -> Result<Vec<Vec<f64>>> {
        let (m, n) = (self.fine.m(), self.fine.n());
        let b = m * n;
        if u0.len() != n || start.len() != self.l * b {
            return Err(Error::Dimension("initial data does not match the configuration".into()));
        }
        let mut procs: Vec<Processor> = start.chunks(b).map(|c| Processor { u: c.to_vec() }).collect();
        let mut trace = vec![start.to_vec()];
        for _ in 0..iterations {
            // Coarse pass in dependency order; the last coarse node is sent downstream.
            let mut coarse_msg = self.pair.restrict(u0);
            for p in procs.iter_mut() {
                let uc = self.restrict_nodes(&p.u);
                let tau = sub_vec(&self.coarse.apply_m(&uc), &self.restrict_nodes(&self.fine.apply_m(&p.u)));
                let rhs = add_vec(&spread_initial(&coarse_msg, m, 1), &tau);
                let mut unew = uc.clone();
                for _ in 0..self.sweeps.coarse {
                    unew = self.coarse.sweep(&unew, &rhs);
                }
                coarse_msg = last_node(&unew, m, self.pair.n_coarse, 0).to_vec();
                // Interpolated coarse correction, volume and last-node values alike.
                let corr = self.interpolate_nodes(&sub_vec(&unew, &uc));
                p.u = add_vec(&p.u, &corr);
            }
            // Fine sweeps; each processor starts from the corrected last node upstream.
            let inits: Vec<Vec<f64>> = (0..self.l)
                .map(|l| if l == 0 { u0.to_vec() } else { last_node(&procs[l - 1].u, m, n, 0).to_vec() })
                .collect();
            for (p, init) in procs.iter_mut().zip(&inits) {
                let rhs = spread_initial(init, m, 1);
                for _ in 0..self.sweeps.fine {
                    p.u = self.fine.sweep(&p.u, &rhs);
                }
            }
            trace.push(procs.iter().flat_map(|p| p.u.iter().copied()).collect());
        }
        Ok(trace)
    }
}

/// Matrix-form ingredients of two-level PFASST on a composite system.
#[derive(Debug, Clone)]
pub struct PfasstMatrices {
    pub system: CompositeSystem,
    pub fine_jacobi: Preconditioner,
    pub coarse_gs: Preconditioner,
    pub transfer: SpaceTimeTransfer,
}

impl PfasstMatrices {
    pub fn new(system: CompositeSystem, coarse_a: &RMatrix, qdelta: &QDelta, pair: TransferPair) -> Result<Self> {
        let p = &system.problem;
        let fine_jacobi = Preconditioner::block_jacobi(&p.a, qdelta, p.dt, system.l, Level::Fine)?;
        let coarse_gs = Preconditioner::block_gs(coarse_a, qdelta, p.dt, system.l, Level::Coarse)?;
        let transfer = SpaceTimeTransfer::new(pair, p.m(), system.l)?;
        Ok(PfasstMatrices { system, fine_jacobi, coarse_gs, transfer })
    }

    pub fn step(&self, u: &[f64]) -> Result<Vec<f64>> {
        pfasst_step_matrix(&self.coarse_gs, &self.fine_jacobi, &self.transfer, &self.system.matrix, &self.system.rhs, u)
    }

    pub fn run(&self, start: &[f64], iterations: usize) -> Result<Vec<Vec<f64>>> {
        let mut trace = vec![start.to_vec()];
        for _ in 0..iterations {
            let next = self.step(trace.last().expect("nonempty"))?;
            trace.push(next);
        }
        Ok(trace)
    }

    pub fn iteration_matrix(&self) -> Result<IterationOperator> {
        build_iteration_matrix(
            IterationKind::Pfasst,
            &self.system.matrix,
            &self.fine_jacobi,
            Some((&self.coarse_gs, &self.transfer)),
        )
    }

    /// The collocation solution `M^{-1} c`.
    pub fn collocation_solution(&self) -> Result<Vec<f64>> {
        let s = &self.system;
        Ok(BlockBidiagonal::new(s.l, s.problem.matrix.clone(), Some(s.n_matrix.clone()))?.solve(&s.rhs))
    }
}
