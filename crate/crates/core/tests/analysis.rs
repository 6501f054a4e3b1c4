use std::f64::consts::PI;

use pfasst_lfa::analysis::*;
use pfasst_lfa::linalg::norm2;
use pfasst_lfa::quadrature::QDeltaKind;
use pfasst_lfa::space::ProblemKind;
use pfasst_lfa::Error;
use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

fn small(problem: ProblemKind) -> ExperimentConfig {
    let cfg = ExperimentConfig { n: 32, m: 3, l: 3, iterations: 8, ..ExperimentConfig::defaults(problem) };
    match problem {
        ProblemKind::Diffusion => cfg.with_mu(2.0),
        ProblemKind::Advection => ExperimentConfig { coefficient: 0.2, ..cfg },
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn strategy_and_block_parsing() {
    assert_eq!(parse_strategies("rho,4,norm_power").unwrap(), vec![Strategy::Rho, Strategy::Apply, Strategy::NormPower]);
    assert_eq!(parse_strategies("norm, norm").unwrap(), vec![Strategy::Norm]);
    assert!(matches!(parse_strategies("rho,,norm"), Err(Error::Parse(_))));
    assert!(matches!(parse_strategies("5"), Err(Error::Parse(_))));
    assert_eq!(parse_blocks("full,collocation,tc").unwrap(), vec![Blocks::Full, Blocks::C, Blocks::Tc]);
    assert!(parse_blocks("tc,").is_err());
    assert_eq!(Strategy::NormPower.column(), "norm_power");
    assert_eq!("exact".parse::<Reference>().unwrap(), Reference::Pde);
    let p = Prediction { strategy: Strategy::NormPower, blocks: Blocks::C, values: vec![] };
    assert_eq!(p.column(), "pred_norm_power_c");
}

#[test]
fn default_configs() {
    let d = ExperimentConfig::defaults(ProblemKind::Diffusion);
    assert_eq!((d.n, d.m, d.l, d.dt, d.wavenumber), (128, 5, 4, 0.1, 8));
    assert_eq!(d.coefficient, 6.103515625e-3);
    assert_eq!(d.qdelta, QDeltaKind::ImplicitEuler);
    assert!((d.diffusion_number().unwrap() - 10.0).abs() < 1e-12);
    assert_eq!(d.cfl(), None);
    let a = ExperimentConfig::defaults(ProblemKind::Advection);
    assert_eq!(a.qdelta, QDeltaKind::Lu);
    assert_eq!(a.mu, None);
    assert!((a.cfl().unwrap() - 0.062464).abs() < 1e-15);
    assert_eq!((a.interp_degree, a.restr_degree), (6, 1));
}

#[test]
fn config_validation() {
    let base = small(ProblemKind::Diffusion);
    let bad = [
        (ExperimentConfig { n: 31, ..base.clone() }, "parity"),
        (ExperimentConfig { n: 2, ..base.clone() }, "range"),
        (ExperimentConfig { m: 13, ..base.clone() }, "range"),
        (ExperimentConfig { l: 0, ..base.clone() }, "range"),
        (ExperimentConfig { n: 1024, m: 5, l: 4, ..base.clone() }, "size"),
        (ExperimentConfig { dt: -0.1, ..base.clone() }, "range"),
        (ExperimentConfig { coefficient: f64::NAN, ..base.clone() }, "range"),
        (ExperimentConfig { wavenumber: 32, ..base.clone() }, "range"),
        (ExperimentConfig { iterations: MAX_ITERATIONS + 1, ..base.clone() }, "range"),
        (ExperimentConfig { n: 8, wavenumber: 1, ..base.clone() }, "size"),
        (ExperimentConfig { problem: ProblemKind::Advection, ..base.clone() }, "configuration"),
    ];
    for (cfg, what) in bad {
        let e = cfg.validate().unwrap_err();
        let ok = match what {
            "parity" => matches!(e, Error::Parity(_)),
            "range" => matches!(e, Error::Range(_)),
            "size" => matches!(e, Error::Size(_)),
            _ => matches!(e, Error::Configuration(_)),
        };
        assert!(ok, "{what}: {e:?}");
    }
    base.validate().unwrap();
}

#[test]
fn pde_initial_error_formulas() {
    for problem in [ProblemKind::Diffusion, ProblemKind::Advection] {
        let cfg = ExperimentConfig { reference: Reference::Pde, ..small(problem) };
        let exp = Experiment::build(&cfg).unwrap();
        let e0 = exp.initial_error(Reference::Pde).unwrap();
        let w = 2.0 * PI * cfg.wavenumber as f64;
        let mut i = 0;
        for l in 0..cfg.l {
            for &tau in &exp.rule.nodes {
                let t = (l as f64 + tau) * cfg.dt;
                for j in 0..cfg.n {
                    let x = j as f64 / cfg.n as f64;
                    let want = match problem {
                        ProblemKind::Diffusion => (w * x).sin() * (1.0 - (-cfg.coefficient * w * w * t).exp()),
                        ProblemKind::Advection => (w * x).sin() - (w * (x - cfg.coefficient * t)).sin(),
                    };
                    assert!((e0[i] - want).abs() < 1e-14, "{problem} {i}");
                    i += 1;
                }
            }
        }
    }
}

#[test]
fn default_scale_block_aggregates() {
    // Frozen from extended-precision evaluation of the time-collocation blocks.
    let cases = [
        (ProblemKind::Diffusion, 0.6493924093138087, 0.92890626263734),
        (ProblemKind::Advection, 0.013588847586840838, 2.21761741481196),
    ];
    for (problem, rho, norm) in cases {
        let exp = Experiment::build(&ExperimentConfig::defaults(problem)).unwrap();
        let mode = analyze_mode(&exp, Blocks::Tc).unwrap();
        assert!(rel(mode.rho, rho) < 1e-12, "{problem} rho {}", mode.rho);
        assert!(rel(mode.norm, norm) < 1e-12, "{problem} norm {}", mode.norm);
        assert_eq!(mode.spectrum.len(), 2560);
    }
}

#[test]
fn mid_scale_norms_match_full_matrix() {
    let cases = [(ProblemKind::Diffusion, 0.952302350742551), (ProblemKind::Advection, 1.73854320506692)];
    for (problem, norm) in cases {
        let mut cfg = ExperimentConfig { n: 64, m: 3, ..ExperimentConfig::defaults(problem) };
        if problem == ProblemKind::Diffusion {
            cfg = cfg.with_mu(10.0);
        }
        let exp = Experiment::build(&cfg).unwrap();
        let tc = analyze_mode(&exp, Blocks::Tc).unwrap();
        let full = analyze_mode(&exp, Blocks::Full).unwrap();
        assert!(rel(tc.norm, norm) < 1e-12, "{problem} {}", tc.norm);
        assert!(rel(full.norm, tc.norm) < 1e-10);
        assert!((full.rho - tc.rho).abs() < 1e-10 * tc.rho.max(1.0));
        assert!(full.spectrum.iter().all(|(k, j, _)| k.is_none() && j.is_none()));
    }
}

#[test]
fn apply_prediction_only_needs_the_excited_harmonics() {
    let exp = Experiment::build(&small(ProblemKind::Advection)).unwrap();
    let mode = analyze_mode(&exp, Blocks::Tc).unwrap();
    let e0 = exp.initial_error(Reference::Collocation).unwrap();
    let a = predict(&exp, &mode, Strategy::Apply, Some(&e0), 6, true).unwrap();
    let b = predict(&exp, &mode, Strategy::Apply, Some(&e0), 6, false).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-10 * y.max(1e-300));
    }
    assert!(matches!(predict(&exp, &mode, Strategy::Apply, None, 3, true), Err(Error::Capability(_))));
    let r = predict(&exp, &mode, Strategy::Rho, None, 3, true).unwrap();
    assert_eq!(r[0], 1.0);
    assert!((r[3] - mode.rho.powi(3)).abs() < 1e-15);
    let z = predict(&exp, &mode, Strategy::NormPower, Some(&e0), 0, true).unwrap();
    assert_eq!(z, vec![norm2(&e0)]);
}

#[test]
fn report_on_small_problems() {
    for problem in [ProblemKind::Diffusion, ProblemKind::Advection] {
        let exp = Experiment::build(&small(problem)).unwrap();
        let report = run_and_compare(&exp, &Strategy::ALL, &[Blocks::Tc, Blocks::C, Blocks::Full]).unwrap();
        let tr = &report.trace;
        assert_eq!(tr.actual_2.len(), 9);
        assert_eq!(tr.predictions.len(), 12);
        for inv in &report.invariants {
            assert!(inv.passed, "{problem} {}: {:e}", inv.name, inv.residual);
        }
        assert_eq!(report.invariants.len(), 4);
        let apply_full = tr.prediction(Strategy::Apply, Blocks::Full).unwrap();
        assert!(exactness_residual(&apply_full.values, &tr.actual_2) < 1e-8);
        let s = report.summaries();
        assert_eq!(s.len(), 3);
        assert!(s[0].rho <= s[0].norm * (1.0 + 1e-12));
        // Inf norm never exceeds the 2 norm.
        assert!(tr.actual_inf.iter().zip(&tr.actual_2).all(|(i, t)| i <= t));
    }
}

#[test]
fn zero_iterations_report() {
    let cfg = ExperimentConfig { iterations: 0, ..small(ProblemKind::Diffusion) };
    let exp = Experiment::build(&cfg).unwrap();
    let report = run_and_compare(&exp, &Strategy::ALL, &[Blocks::Tc]).unwrap();
    assert_eq!(report.trace.actual_2.len(), 1);
    for p in &report.trace.predictions {
        assert_eq!(p.values.len(), 1);
        assert!(rel(p.values[0], report.trace.actual_2[0]) < 1e-14);
    }
    assert!(report.phases.count() <= 1);
}

#[test]
fn pde_reference_skips_collocation_invariants() {
    let cfg = ExperimentConfig { reference: Reference::Pde, iterations: 4, ..small(ProblemKind::Diffusion) };
    let exp = Experiment::build(&cfg).unwrap();
    let report = run_and_compare(&exp, &[Strategy::Apply, Strategy::Norm], &[Blocks::Tc]).unwrap();
    assert!(report.invariants.is_empty());
    // Error against the PDE solution stalls at the discretization error.
    let last = *report.trace.actual_2.last().unwrap();
    assert!(last > 1e-8);
}

#[test]
fn diffusion_defaults_show_two_phases() {
    let exp = Experiment::build(&ExperimentConfig::defaults(ProblemKind::Diffusion)).unwrap();
    let (errors, _) = actual_errors(&exp, 20).unwrap();
    let norms: Vec<f64> = errors.iter().map(|e| norm2(e)).collect();
    let ph = detect_phases(&norms);
    assert_eq!(ph.count(), 2);
    assert!(ph.segments[0].ratio < ph.segments[1].ratio);
}

#[test]
fn bound_chain_counting() {
    assert_eq!(bound_chain_violations(&[1.0, 0.5], &[1.0, 0.6], &[1.0, 0.7]), 0);
    assert_eq!(bound_chain_violations(&[1.0, 0.7], &[1.0, 0.6], &[1.0, 0.5]), 1);
    assert_eq!(exactness_residual(&[1.0, 2.0, 5.0], &[1.0, 1.0, 1e-14]), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn predictions_bound_the_actual_error(mu in 0.1f64..50.0, k in 1usize..8, lu in any::<bool>()) {
        let cfg = ExperimentConfig {
            n: 16, m: 2, l: 2, iterations: 6, wavenumber: k, interp_degree: 3,
            qdelta: if lu { QDeltaKind::Lu } else { QDeltaKind::ImplicitEuler },
            ..ExperimentConfig::defaults(ProblemKind::Diffusion)
        }.with_mu(mu);
        let exp = Experiment::build(&cfg).unwrap();
        let report = run_and_compare(&exp, &[Strategy::Norm, Strategy::NormPower, Strategy::Apply], &[Blocks::Tc]).unwrap();
        for inv in &report.invariants {
            prop_assert!(inv.passed, "{}: {:e}", inv.name, inv.residual);
        }
    }
}
