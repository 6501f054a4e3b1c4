//! Block Fourier diagonalization of the two-level PFASST iteration matrix.
//!
//! Time-collocation blocks (size `2LM`) are exact. Collocation blocks (size `2M`)
//! additionally assume periodicity in time.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    eigenvalues, norm2, root_of_unity, spectral_norm, BlockBidiagonal, CMatrix, Lu, RMatrix, Spectrum, C64,
};
use crate::quadrature::{QDelta, QuadratureRule};
use crate::space::CirculantOperator;
use crate::transfer::{harmonic_diagonals, last_column_ones, HarmonicDiagonals, TransferPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockMode {
    TimeCollocation,
    Collocation,
}

impl BlockMode {
    pub fn tag(self) -> &'static str {
        match self {
            BlockMode::TimeCollocation => "tc",
            BlockMode::Collocation => "c",
        }
    }
}

impl fmt::Display for BlockMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for BlockMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "tc" | "time-collocation" => Ok(BlockMode::TimeCollocation),
            "c" | "collocation" => Ok(BlockMode::Collocation),
            other => Err(Error::Parse(format!("unknown block mode '{other}'"))),
        }
    }
}

/// Everything the block formulas need: operator symbols, quadrature, transfer diagonals.
#[derive(Debug, Clone)]
pub struct LfaInputs {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub dt: f64,
    /// Eigenvalues of the fine operator, `k = 0..n`.
    pub fine_symbol: Vec<C64>,
    /// Eigenvalues of the coarse operator, `k = 0..n/2`.
    pub coarse_symbol: Vec<C64>,
    pub q: RMatrix,
    pub qdelta: RMatrix,
    pub diagonals: HarmonicDiagonals,
}

impl LfaInputs {
    pub fn new(
        fine: &CirculantOperator,
        coarse: &CirculantOperator,
        rule: &QuadratureRule,
        qdelta: &QDelta,
        dt: f64,
        l: usize,
        pair: &TransferPair,
    ) -> Result<Self> {
        let n = fine.n;
        if n % 2 == 1 {
            return Err(Error::Parity(format!("grid size {n} is odd")));
        }
        if coarse.n * 2 != n || pair.n_fine != n {
            return Err(Error::Dimension("fine, coarse and transfer grids disagree".into()));
        }
        if l == 0 {
            return Err(Error::Range("at least one subinterval required".into()));
        }
        Ok(LfaInputs {
            n,
            m: rule.m(),
            l,
            dt,
            fine_symbol: fine.symbol(),
            coarse_symbol: coarse.symbol(),
            q: rule.q.clone(),
            qdelta: qdelta.matrix.clone(),
            diagonals: harmonic_diagonals(pair)?,
        })
    }

    pub fn half(&self) -> usize {
        self.n / 2
    }
}

/// One block of the decomposition.
#[derive(Debug, Clone)]
pub struct Block {
    /// Spatial harmonic index `k` (pairs `k` and `n/2 + k`).
    pub k: usize,
    /// Time frequency (collocation mode only).
    pub j: Option<usize>,
    pub matrix: CMatrix,
    /// Set when the block was replaced by zero (collocation mode, `j = 0`).
    pub zeroed: bool,
    /// The block before zeroing, when it could be formed.
    pub raw: Option<CMatrix>,
}

/// Index maps of `F = (I_L ⊗ I_M ⊗ Ψ) Π` (time-collocation) or
/// `(Ψ_L ⊗ I_M ⊗ Ψ) Π` (collocation).
#[derive(Debug, Clone, PartialEq)]
pub struct TransformMeta {
    pub mode: BlockMode,
    pub n: usize,
    pub m: usize,
    pub l: usize,
}

impl TransformMeta {
    pub fn block_size(&self) -> usize {
        match self.mode {
            BlockMode::TimeCollocation => 2 * self.l * self.m,
            BlockMode::Collocation => 2 * self.m,
        }
    }

    pub fn block_count(&self) -> usize {
        match self.mode {
            BlockMode::TimeCollocation => self.n / 2,
            BlockMode::Collocation => self.n / 2 * self.l,
        }
    }

    pub fn dim(&self) -> usize {
        self.n * self.m * self.l
    }

    /// Block indices touched by the Fourier modes `k` and `n - k`.
    pub fn harmonic_blocks(&self, k: usize) -> Vec<usize> {
        let h = self.n / 2;
        let mut ks = vec![k % h, (self.n - k % self.n) % self.n % h];
        ks.sort_unstable();
        ks.dedup();
        match self.mode {
            BlockMode::TimeCollocation => ks,
            BlockMode::Collocation => ks.iter().flat_map(|&b| (0..self.l).map(move |j| b * self.l + j)).collect(),
        }
    }

    /// Position in the transformed vector of the coefficient for spatial mode
    /// `kappa`, node `m`, and interval `l` (time-collocation) or frequency `l` (collocation).
    pub fn position(&self, l: usize, m: usize, kappa: usize) -> usize {
        let h = self.n / 2;
        let (b, half) = (kappa % h, kappa / h);
        match self.mode {
            BlockMode::TimeCollocation => b * self.block_size() + half * self.l * self.m + l * self.m + m,
            BlockMode::Collocation => (b * self.l + l) * self.block_size() + half * self.m + m,
        }
    }
}

fn spatial_dft(v: &[C64], n: usize, inverse: bool) -> Vec<C64> {
    let s = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            let mut acc = C64::new(0.0, 0.0);
            for (j, x) in v.iter().enumerate() {
                let p = (k * j) % n;
                let w = if inverse { root_of_unity(p, n) } else { root_of_unity((n - p) % n, n) };
                acc += w * x;
            }
            acc * s
        })
        .collect()
}

/// `F^{-1} v`: spatial (and, in collocation mode, temporal) Fourier transform
/// followed by the harmonic pairing permutation. Unitary.
pub fn transform_vector(v: &[C64], meta: &TransformMeta) -> Vec<C64> {
    let (n, m, l) = (meta.n, meta.m, meta.l);
    assert_eq!(v.len(), meta.dim(), "space-time vector length");
    let mut hat: Vec<Vec<C64>> = v.chunks(n).map(|c| spatial_dft(c, n, false)).collect();
    if meta.mode == BlockMode::Collocation {
        hat = time_dft(&hat, m, l, false);
    }
    let mut out = vec![C64::new(0.0, 0.0); meta.dim()];
    for li in 0..l {
        for mi in 0..m {
            for (kappa, &x) in hat[li * m + mi].iter().enumerate() {
                out[meta.position(li, mi, kappa)] = x;
            }
        }
    }
    out
}

/// `F x`, the inverse of [`transform_vector`].
pub fn inverse_transform(x: &[C64], meta: &TransformMeta) -> Vec<C64> {
    let (n, m, l) = (meta.n, meta.m, meta.l);
    assert_eq!(x.len(), meta.dim(), "transformed vector length");
    let mut hat: Vec<Vec<C64>> = (0..l * m)
        .map(|s| (0..n).map(|kappa| x[meta.position(s / m, s % m, kappa)]).collect())
        .collect();
    if meta.mode == BlockMode::Collocation {
        hat = time_dft(&hat, m, l, true);
    }
    hat.iter().flat_map(|c| spatial_dft(c, n, true)).collect()
}

fn time_dft(slices: &[Vec<C64>], m: usize, l: usize, inverse: bool) -> Vec<Vec<C64>> {
    let n = slices[0].len();
    let s = 1.0 / (l as f64).sqrt();
    let mut out = vec![vec![C64::new(0.0, 0.0); n]; l * m];
    for j in 0..l {
        for li in 0..l {
            let p = (j * li) % l;
            let w = if inverse { root_of_unity(p, l) } else { root_of_unity((l - p) % l, l) } * s;
            for mi in 0..m {
                let src = &slices[li * m + mi];
                let dst = &mut out[j * m + mi];
                for (d, x) in dst.iter_mut().zip(src) {
                    *d += w * x;
                }
            }
        }
    }
    out
}

/// The unitary `F` as a dense matrix (for checks at small sizes).
pub fn transform_matrix(meta: &TransformMeta) -> CMatrix {
    let dim = meta.dim();
    let mut f = CMatrix::zeros(dim, dim);
    let mut e = vec![C64::new(0.0, 0.0); dim];
    for c in 0..dim {
        e[c] = C64::new(1.0, 0.0);
        f.set_column(c, &inverse_transform(&e, meta));
        e[c] = C64::new(0.0, 0.0);
    }
    f
}

/// Basic blocks for one spatial eigenvalue.
#[derive(Debug, Clone)]
pub struct BasicBlocks {
    /// `B^(M)`.
    pub b_m: CMatrix,
    /// Diagonal block of the block-Jacobi `B^(P)`.
    pub b_p: CMatrix,
    /// Diagonal block and coupling of the coarse `B^(P̃)`.
    pub b_p_coarse: CMatrix,
}

fn cq(q: &RMatrix, s: C64) -> CMatrix {
    q.to_complex().scale(s)
}

fn sweep_block(qdelta: &RMatrix, lambda_dt: C64) -> CMatrix {
    cq(qdelta, lambda_dt).identity_minus()
}

/// Time-collocation `B^(M) = I - E ⊗ N_M - λΔt I_L ⊗ Q`.
pub fn tc_b_m(inputs: &LfaInputs, lambda: C64) -> CMatrix {
    let (m, l) = (inputs.m, inputs.l);
    let lq = cq(&inputs.q, lambda * inputs.dt);
    let nm = last_column_ones(m).to_complex();
    let mut out = CMatrix::identity(l * m);
    for b in 0..l {
        let blk = out.block(b * m, b * m, m, m).sub_mat(&lq);
        out.set_block(b * m, b * m, &blk);
        if b > 0 {
            out.set_block(b * m, (b - 1) * m, &nm.scale(C64::new(-1.0, 0.0)));
        }
    }
    out
}

/// Collocation `B^(M)_{k,j} = I - λΔt Q - ω N_M` with `ω = exp(-i 2π j / L)`.
pub fn c_b_m(inputs: &LfaInputs, lambda: C64, omega: C64) -> CMatrix {
    let nm = last_column_ones(inputs.m).to_complex().scale(omega);
    cq(&inputs.q, lambda * inputs.dt).add_mat(&nm).identity_minus()
}

fn assemble(
    diag_s: [CMatrix; 2],
    coarse_solve: impl Fn(&CMatrix) -> Result<CMatrix>,
    b_m: [&CMatrix; 2],
    h: &HarmonicDiagonals,
    k: usize,
) -> Result<CMatrix> {
    let s = b_m[0].rows();
    // [f B_a, f_hat B_b]
    let mut rhs = CMatrix::zeros(s, 2 * s);
    rhs.set_block(0, 0, &b_m[0].scale(h.f[k]));
    rhs.set_block(0, s, &b_m[1].scale(h.f_hat[k]));
    let y = coarse_solve(&rhs)?;
    let mut cgc = CMatrix::identity(2 * s);
    let top = y.scale(h.d[k] * 0.5);
    let bottom = y.scale(h.d_hat[k] * 0.5);
    cgc.set_block(0, 0, &cgc.block(0, 0, s, 2 * s).sub_mat(&top));
    cgc.set_block(s, 0, &cgc.block(s, 0, s, 2 * s).sub_mat(&bottom));
    let mut smoother = CMatrix::zeros(2 * s, 2 * s);
    smoother.set_block(0, 0, &diag_s[0]);
    smoother.set_block(s, s, &diag_s[1]);
    Ok(smoother.matmul(&cgc))
}

/// Time-collocation block for harmonic pair `k`.
pub fn tc_block(inputs: &LfaInputs, k: usize) -> Result<CMatrix> {
    let h = inputs.half();
    let dt = inputs.dt;
    let lam = [inputs.fine_symbol[k], inputs.fine_symbol[k + h]];
    let b_m = [tc_b_m(inputs, lam[0]), tc_b_m(inputs, lam[1])];
    let mut diag_s = Vec::with_capacity(2);
    for i in 0..2 {
        let p = BlockBidiagonal::new(inputs.l, sweep_block(&inputs.qdelta, lam[i] * dt), None)?;
        diag_s.push(p.solve_matrix(&b_m[i]).identity_minus());
    }
    let coarse = BlockBidiagonal::new(
        inputs.l,
        sweep_block(&inputs.qdelta, inputs.coarse_symbol[k] * dt),
        Some(last_column_ones(inputs.m).to_complex()),
    )?;
    let [s0, s1]: [CMatrix; 2] = diag_s.try_into().expect("two harmonics");
    assemble([s0, s1], |r| Ok(coarse.solve_matrix(r)), [&b_m[0], &b_m[1]], &inputs.diagonals, k)
}

/// Collocation block for harmonic pair `k` and time frequency `j`, before zeroing.
pub fn c_block_raw(inputs: &LfaInputs, k: usize, j: usize) -> Result<CMatrix> {
    let h = inputs.half();
    let dt = inputs.dt;
    let omega = root_of_unity((inputs.l - j % inputs.l) % inputs.l, inputs.l);
    let lam = [inputs.fine_symbol[k], inputs.fine_symbol[k + h]];
    let b_m = [c_b_m(inputs, lam[0], omega), c_b_m(inputs, lam[1], omega)];
    let mut diag_s = Vec::with_capacity(2);
    for i in 0..2 {
        let p = Lu::factor(&sweep_block(&inputs.qdelta, lam[i] * dt))?;
        diag_s.push(p.solve_matrix(&b_m[i]).identity_minus());
    }
    let nm = last_column_ones(inputs.m).to_complex().scale(omega);
    let coarse = Lu::factor(&sweep_block(&inputs.qdelta, inputs.coarse_symbol[k] * dt).sub_mat(&nm))?;
    let [s0, s1]: [CMatrix; 2] = diag_s.try_into().expect("two harmonics");
    assemble([s0, s1], |r| Ok(coarse.solve_matrix(r)), [&b_m[0], &b_m[1]], &inputs.diagonals, k)
}

/// Basic blocks for spatial index `k` in time-collocation mode.
pub fn tc_basic_blocks(inputs: &LfaInputs, k: usize) -> BasicBlocks {
    let dt = inputs.dt;
    let kc = k % inputs.half();
    let nm = last_column_ones(inputs.m).to_complex();
    BasicBlocks {
        b_m: tc_b_m(inputs, inputs.fine_symbol[k]),
        b_p: bidiagonal(inputs.l, &sweep_block(&inputs.qdelta, inputs.fine_symbol[k] * dt), None),
        b_p_coarse: bidiagonal(inputs.l, &sweep_block(&inputs.qdelta, inputs.coarse_symbol[kc] * dt), Some(&nm)),
    }
}

/// `I_L ⊗ diag - E ⊗ coupling`.
fn bidiagonal(l: usize, diag: &CMatrix, coupling: Option<&CMatrix>) -> CMatrix {
    let s = diag.rows();
    let mut out = CMatrix::zeros(l * s, l * s);
    for b in 0..l {
        out.set_block(b * s, b * s, diag);
        if let (Some(c), true) = (coupling, b > 0) {
            out.set_block(b * s, (b - 1) * s, &c.scale(C64::new(-1.0, 0.0)));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub mode: BlockMode,
    pub blocks: Vec<Block>,
    pub meta: TransformMeta,
}

pub fn tc_decompose(inputs: &LfaInputs) -> Result<BlockDecomposition> {
    let blocks = (0..inputs.half())
        .into_par_iter()
        .map(|k| Ok(Block { k, j: None, matrix: tc_block(inputs, k)?, zeroed: false, raw: None }))
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockDecomposition {
        mode: BlockMode::TimeCollocation,
        blocks,
        meta: TransformMeta { mode: BlockMode::TimeCollocation, n: inputs.n, m: inputs.m, l: inputs.l },
    })
}

pub fn c_decompose(inputs: &LfaInputs) -> Result<BlockDecomposition> {
    let l = inputs.l;
    let size = 2 * inputs.m;
    let blocks = (0..inputs.half() * l)
        .into_par_iter()
        .map(|idx| {
            let (k, j) = (idx / l, idx % l);
            let raw = c_block_raw(inputs, k, j);
            if j == 0 {
                Ok(Block { k, j: Some(j), matrix: CMatrix::zeros(size, size), zeroed: true, raw: raw.ok() })
            } else {
                Ok(Block { k, j: Some(j), matrix: raw?, zeroed: false, raw: None })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockDecomposition {
        mode: BlockMode::Collocation,
        blocks,
        meta: TransformMeta { mode: BlockMode::Collocation, n: inputs.n, m: inputs.m, l },
    })
}

pub fn decompose(inputs: &LfaInputs, mode: BlockMode) -> Result<BlockDecomposition> {
    match mode {
        BlockMode::TimeCollocation => tc_decompose(inputs),
        BlockMode::Collocation => c_decompose(inputs),
    }
}

#[derive(Debug, Clone)]
pub struct BlockSpectrum {
    pub k: usize,
    pub j: Option<usize>,
    pub spectrum: Spectrum,
    pub norm: f64,
    pub zeroed: bool,
    /// Raw radius and norm of a zeroed block, when it could be formed.
    pub raw: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct BlockSpectra {
    pub blocks: Vec<BlockSpectrum>,
    pub rho: f64,
    pub norm: f64,
    /// Aggregates with zeroed blocks restored where possible.
    pub rho_raw: f64,
    pub norm_raw: f64,
}

impl BlockSpectra {
    pub fn union(&self) -> Spectrum {
        Spectrum::union(self.blocks.iter().map(|b| &b.spectrum))
    }
}

pub fn block_spectra(d: &BlockDecomposition) -> Result<BlockSpectra> {
    let blocks = d
        .blocks
        .par_iter()
        .map(|b| {
            let raw = match &b.raw {
                Some(r) => Some((eigenvalues(r)?.spectral_radius(), spectral_norm(r))),
                None => None,
            };
            Ok(BlockSpectrum {
                k: b.k,
                j: b.j,
                spectrum: eigenvalues(&b.matrix)?,
                norm: spectral_norm(&b.matrix),
                zeroed: b.zeroed,
                raw,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rho = blocks.iter().map(|b| b.spectrum.spectral_radius()).fold(0.0, f64::max);
    let norm = blocks.iter().map(|b| b.norm).fold(0.0, f64::max);
    let rho_raw = blocks.iter().map(|b| b.raw.map_or(b.spectrum.spectral_radius(), |r| r.0)).fold(0.0, f64::max);
    let norm_raw = blocks.iter().map(|b| b.raw.map_or(b.norm, |r| r.1)).fold(0.0, f64::max);
    Ok(BlockSpectra { blocks, rho, norm, rho_raw, norm_raw })
}

impl BlockDecomposition {
    /// `‖T^κ‖₂` for `κ = 0..=kmax`, as the maximum over blocks.
    pub fn power_norms(&self, kmax: usize) -> Vec<f64> {
        let per_block: Vec<Vec<f64>> = self
            .blocks
            .par_iter()
            .map(|b| {
                let mut p = CMatrix::identity(b.matrix.rows());
                let mut out = vec![if b.zeroed { 0.0 } else { 1.0 }];
                for _ in 0..kmax {
                    p = b.matrix.matmul(&p);
                    out.push(spectral_norm(&p));
                }
                out
            })
            .collect();
        (0..=kmax)
            .map(|kappa| {
                if kappa == 0 {
                    return 1.0;
                }
                per_block.iter().map(|v| v[kappa]).fold(0.0, f64::max)
            })
            .collect()
    }

    /// `‖T^κ x‖₂` for `κ = 0..=kmax` from a transformed vector `x`, using only the
    /// listed blocks (all when `None`).
    pub fn propagate_norms(&self, x: &[C64], kmax: usize, subset: Option<&[usize]>) -> Vec<f64> {
        let bs = self.meta.block_size();
        assert_eq!(x.len(), bs * self.blocks.len());
        let all: Vec<usize> = (0..self.blocks.len()).collect();
        let ids = subset.unwrap_or(&all);
        let per_block: Vec<Vec<f64>> = ids
            .par_iter()
            .map(|&b| {
                let mut v = x[b * bs..(b + 1) * bs].to_vec();
                let mut out = vec![norm2(&v).powi(2)];
                for _ in 0..kmax {
                    v = self.blocks[b].matrix.matvec(&v);
                    out.push(norm2(&v).powi(2));
                }
                out
            })
            .collect();
        (0..=kmax).map(|kappa| per_block.iter().map(|v| v[kappa]).sum::<f64>().sqrt()).collect()
    }

    /// Block-diagonal matrix of all blocks in transformed coordinates.
    pub fn block_diagonal(&self) -> CMatrix {
        let bs = self.meta.block_size();
        let mut out = CMatrix::zeros(self.meta.dim(), self.meta.dim());
        for (i, b) in self.blocks.iter().enumerate() {
            out.set_block(i * bs, i * bs, &b.matrix);
        }
        out
    }
}
