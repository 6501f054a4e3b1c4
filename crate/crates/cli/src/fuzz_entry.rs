//! Entry points shared by the fuzz targets and the corpus replay test.
//! Each must return without panicking for every input.

use pfasst_lfa::analysis::{parse_blocks, parse_strategies, Blocks, Experiment, ExperimentConfig, Reference, Strategy};
use pfasst_lfa::quadrature::QDeltaKind;
use pfasst_lfa::space::ProblemKind;
use pfasst_lfa::verify::{Fault, Scale};

use clap::Parser;

use crate::{resolve_config, Cli, Command};

/// Largest system the config target will actually assemble.
pub const FUZZ_BUILD_DIM: usize = 256;

/// Whitespace-split argv after the program name; analyze configs are resolved, not run.
pub fn argv(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let args = std::iter::once("pfasst-lfa").chain(text.split_whitespace());
    if let Ok(cli) = Cli::try_parse_from(args) {
        if let Command::Analyze(a) = cli.command {
            if let Ok(cfg) = resolve_config(&a) {
                assert!(cfg.validate().is_ok());
            }
        }
    }
}

/// Every enum and list parser on the same string.
pub fn lists(data: &[u8]) {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(v) = parse_strategies(s) {
        assert!(!v.is_empty());
        for st in v {
            assert_eq!(st.name().parse::<Strategy>().ok(), Some(st));
        }
    }
    if let Ok(v) = parse_blocks(s) {
        for b in v {
            assert_eq!(b.tag().parse::<Blocks>().ok(), Some(b));
        }
    }
    if let Ok(p) = s.parse::<ProblemKind>() {
        assert_eq!(p.name().parse::<ProblemKind>().ok(), Some(p));
    }
    if let Ok(q) = s.parse::<QDeltaKind>() {
        assert_eq!(q.name().parse::<QDeltaKind>().ok(), Some(q));
    }
    let _ = s.parse::<Reference>();
    let _ = s.parse::<Scale>();
    let _ = s.parse::<Fault>();
}

fn take<const K: usize>(data: &mut &[u8]) -> [u8; K] {
    let mut out = [0u8; K];
    let n = K.min(data.len());
    out[..n].copy_from_slice(&data[..n]);
    *data = &data[n..];
    out
}

/// Configuration decoded from raw bytes: small integers from single bytes,
/// reals from little-endian f64 bit patterns.
pub fn decode_config(mut data: &[u8]) -> ExperimentConfig {
    let [kind, n, m, l, k, iters, qd, di, dr, reference] = take::<10>(&mut data);
    let problem = if kind % 2 == 0 { ProblemKind::Diffusion } else { ProblemKind::Advection };
    let mut cfg = ExperimentConfig::defaults(problem);
    cfg.n = n as usize;
    cfg.m = (m % 16) as usize;
    cfg.l = (l % 8) as usize;
    cfg.wavenumber = k as usize;
    cfg.iterations = iters as usize;
    cfg.qdelta = [QDeltaKind::ImplicitEuler, QDeltaKind::Lu, QDeltaKind::Tril][(qd % 3) as usize];
    cfg.interp_degree = (di % 12) as usize;
    cfg.restr_degree = (dr % 12) as usize;
    cfg.reference = if reference % 2 == 0 { Reference::Collocation } else { Reference::Pde };
    cfg.dt = f64::from_le_bytes(take::<8>(&mut data));
    cfg.coefficient = f64::from_le_bytes(take::<8>(&mut data));
    cfg
}

/// Validation never panics; accepted small configs assemble or fail with an error.
pub fn config(data: &[u8]) {
    let cfg = decode_config(data);
    if cfg.validate().is_ok() && cfg.dim() <= FUZZ_BUILD_DIM {
        let _ = Experiment::build(&cfg);
    }
}
