//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion, nonzero exit
//! status if any criterion fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use balm::bench::{generate_instance, history_to_string, run_matchup, Dims, InstanceKind, MethodParams, ProblemFile};
use balm::diagnostics::{
    alt_split_metric, balanced_metric, contraction_ledger, reference_solution, split_metric, vi_gap,
    ContractionCertificate,
};
use balm::linalg::{cholesky_factor, spectral_norm_sq, DenseMatrix};
use balm::multiplier::{build_h0, build_h2, build_hp, MultiplierMatrix};
use balm::par::Execution;
use balm::problem::Block;
use balm::prox::{prox_constrained, ScalarObjective};
use balm::solvers::{
    alt_split_step, balanced_alm_step, generalized_step, run, run_fixed, split_balanced_step, AltSplitConfig,
    AltSplitSystem, BalancedAlmConfig, BaselineConfig, BaselineMethod, MethodConfig, RunHistory, SplitConfig, StopRule,
};
use balm::{Instance, Model, ObjectiveSpec, PrimalDualPoint, Problem, Sense, SeparableProblem, SetSpec};
use common::*;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (usize, &'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

// 1 ---------------------------------------------------------------------------

fn criterion_positive_definiteness() -> Outcome {
    let mut rng = rng(1);
    let mut max_norm: f64 = 0.0;
    let mut deficient = 0;
    for draw in 0..100 {
        let m = rng.random_range(1..=8);
        let n1 = rng.random_range(1..=6);
        let n2 = rng.random_range(1..=6);
        let n = n1 + n2;
        let mut a = if draw % 3 == 0 {
            // rank-deficient product of thin factors
            let k = rng.random_range(1..=m.min(n));
            let left = uniform_matrix(&mut rng, m, k);
            let right = uniform_matrix(&mut rng, k, n);
            deficient += usize::from(k < m.min(n));
            ok(left.matmul(&right))?
        } else {
            uniform_matrix(&mut rng, m, n)
        };
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        a = a.scaled(scale);
        let r = 10f64.powf(rng.random_range(-2.0..2.0));
        let delta = 10f64.powf(rng.random_range(-3.0..1.0));
        let s = 10f64.powf(rng.random_range(-2.0..2.0));
        max_norm = max_norm.max(ok(spectral_norm_sq(&a))?);

        let mut cols1 = DenseMatrix::zeros(m, n1);
        let mut cols2 = DenseMatrix::zeros(m, n2);
        for i in 0..m {
            for j in 0..n {
                if j < n1 {
                    cols1.set(i, j, a.get(i, j));
                } else {
                    cols2.set(i, j - n1, a.get(i, j));
                }
            }
        }
        let blk = |a: DenseMatrix| Block {
            objective: ObjectiveSpec::Zero,
            set: SetSpec::WholeSpace,
            a,
        };
        let sep = ok(SeparableProblem::new(
            vec![blk(cols1.clone()), blk(cols2.clone())],
            vec![0.0; m],
            Sense::Equality,
        ))?;
        let r2 = 10f64.powf(rng.random_range(-2.0..2.0));
        let checks: [(&str, Result<DenseMatrix, balm::Error>); 5] = [
            ("H0", build_h0(&a, r, delta).map(|h| h.matrix().clone())),
            ("H", balanced_metric(&a, r, delta)),
            (
                "H_p",
                build_hp(&[(&cols1, r), (&cols2, r2)], delta).map(|h| h.matrix().clone()),
            ),
            ("H split", split_metric(&sep, &[r, r2], delta)),
            ("H alt-split", alt_split_metric(&sep, r, s, delta)),
        ];
        for (name, h) in checks {
            let h = ok(h)?;
            ok(cholesky_factor(&h)).map_err(|e| format!("draw {draw}: {name} not factorable: {e}"))?;
        }
        ok(build_h2(&cols2, r, s, delta))?;
    }
    Ok(format!(
        "500 matrices factored, {deficient} rank-deficient draws, max ||AᵀA|| = {max_norm:.3e}"
    ))
}

// 2 / 3 -----------------------------------------------------------------------

fn worst_slack(certs: &[ContractionCertificate]) -> f64 {
    certs.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min)
}

fn ledger_check(label: &str, h: &RunHistory, star: &PrimalDualPoint, alpha: f64) -> Result<f64, String> {
    let certs = ok(contraction_ledger(h, &h.metric, Some(star), alpha))?;
    let worst = worst_slack(&certs);
    ensure(certs.iter().all(ContractionCertificate::passed), || {
        format!("{label}: slack {worst:e} below tolerance")
    })?;
    ensure(!certs.is_empty(), || format!("{label}: no iterations"))?;
    Ok(worst)
}

const LEDGER_ITERS: usize = 300;

struct Library {
    eq_single: Vec<(Instance, PrimalDualPoint)>,
    eq_two_block: Vec<(Instance, PrimalDualPoint)>,
    ineq_single: Vec<(Instance, PrimalDualPoint)>,
    ineq_two_block: Vec<(Instance, PrimalDualPoint)>,
}

fn library() -> Result<Library, String> {
    let reference_cfg = BalancedAlmConfig::new(1.0, 0.1);
    let eq_single = (0..20)
        .map(|k| equality_qp(100 + k, 2 + (k as usize % 4), None))
        .collect();
    let eq_two_block = (0..20)
        .map(|k| equality_qp(200 + k, 2 + (k as usize % 3), Some(vec![2 + k as usize % 3, 3])))
        .collect();
    let ineq_single = (0..10)
        .map(|k| {
            let inst = inequality_qp(300 + k, 3 + k as usize % 3, 6);
            let star = ok(reference_solution(&inst, &reference_cfg))?;
            Ok((inst, star))
        })
        .collect::<Result<_, String>>()?;
    let ineq_two_block = (0..10)
        .map(|k| {
            let inst: Instance = inequality_two_block(400 + k, 3, 3, 3).into();
            let star = ok(reference_solution(&inst, &reference_cfg))?;
            Ok((inst, star))
        })
        .collect::<Result<_, String>>()?;
    Ok(Library {
        eq_single,
        eq_two_block,
        ineq_single,
        ineq_two_block,
    })
}

fn criterion_contraction(lib: &Library) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut runs = 0;
    let balanced = MethodConfig::Balanced(BalancedAlmConfig::new(0.7, 0.05));
    for (i, (inst, star)) in lib.eq_single.iter().chain(&lib.ineq_single).enumerate() {
        let h = ok(run_fixed(
            inst,
            &balanced,
            LEDGER_ITERS,
            &inst.default_start(),
            Some(star),
        ))?;
        worst = worst.min(ledger_check(&format!("balanced #{i}"), &h, star, 1.0)?);
        runs += 1;
    }
    for (i, (inst, star)) in lib.eq_two_block.iter().chain(&lib.ineq_two_block).enumerate() {
        let split = MethodConfig::Split(SplitConfig {
            r_list: vec![0.8, 1.3],
            delta: 0.05,
        });
        let alt = MethodConfig::AltSplit(AltSplitConfig {
            r: 0.9,
            s: 1.2,
            delta: 0.05,
        });
        for (name, method) in [("split", &split), ("alt-split", &alt), ("balanced", &balanced)] {
            let h = ok(run_fixed(inst, method, LEDGER_ITERS, &inst.default_start(), Some(star)))?;
            worst = worst.min(ledger_check(&format!("{name} two-block #{i}"), &h, star, 1.0)?);
            runs += 1;
        }
    }
    Ok(format!(
        "{runs} runs x {LEDGER_ITERS} iterations, worst slack {worst:.3e}"
    ))
}

fn criterion_relaxed(lib: &Library) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut runs = 0;
    for alpha in [0.5, 1.5, 1.9] {
        let m = MethodConfig::Balanced(BalancedAlmConfig::relaxed(0.7, 0.05, alpha));
        for (i, (inst, star)) in lib.eq_single.iter().chain(&lib.ineq_single).enumerate() {
            let h = ok(run_fixed(inst, &m, LEDGER_ITERS, &inst.default_start(), Some(star)))?;
            worst = worst.min(ledger_check(&format!("alpha {alpha} #{i}"), &h, star, alpha)?);
            runs += 1;
        }
    }
    // α = 1 through the relaxed step against the unrelaxed driver path.
    for (inst, _) in lib.eq_single.iter().chain(&lib.ineq_single) {
        let Instance::Single(p) = inst else { unreachable!() };
        let cfg = BalancedAlmConfig::relaxed(0.7, 0.05, 1.0);
        let sys = ok(build_h0(&p.a, cfg.r, cfg.delta))?;
        let h = ok(run_fixed(
            inst,
            &MethodConfig::Balanced(cfg),
            50,
            &inst.default_start(),
            None,
        ))?;
        let mut w = inst.default_start();
        for (k, expected) in h.iterates.iter().enumerate().skip(1) {
            w = ok(generalized_step(p, &cfg, &sys, &w))?.next;
            let same =
                w.x.iter()
                    .chain(&w.lambda)
                    .zip(expected.x.iter().chain(&expected.lambda))
                    .all(|(a, b)| a.to_bits() == b.to_bits());
            ensure(same, || format!("alpha = 1 differs from unrelaxed at iteration {k}"))?;
        }
    }
    Ok(format!(
        "{runs} relaxed runs, worst slack {worst:.3e}; alpha = 1 bit-identical on 30 runs"
    ))
}

// 4 ---------------------------------------------------------------------------

fn criterion_ergodic() -> Outcome {
    let mut instances: Vec<Instance> = vec![scalar_problem().into()];
    instances.extend((0..5).map(|k| equality_qp(500 + k, 3, None).0));
    let m = MethodConfig::Balanced(BalancedAlmConfig::new(1.0, 0.1));
    let mut worst = f64::NEG_INFINITY;
    let mut probes = 0;
    for (i, inst) in instances.iter().enumerate() {
        let h = ok(run_fixed(inst, &m, 1001, &inst.default_start(), None))?;
        for t in [10, 100, 1000] {
            let cert = ok(vi_gap(inst, &h, t, 500, 7 + t as u64))?;
            probes += cert.probe_points.len();
            worst = worst.max(cert.worst_excess);
            ensure(cert.passed, || {
                format!("instance {i}, t = {t}: lhs exceeds bound by {:e}", cert.worst_excess)
            })?;
        }
    }
    Ok(format!("{probes} probes, max(lhs - bound) = {worst:.3e}"))
}

// 5 ---------------------------------------------------------------------------

fn criterion_lcp() -> Outcome {
    let mut rng = rng(5);
    let mut max_err: f64 = 0.0;
    for inst in 0..200 {
        let m = rng.random_range(1..=10);
        let b = uniform_matrix(&mut rng, m, m);
        let mut h = b.gram_cols();
        h.add_diagonal(rng.random_range(0.01..1.0));
        let sys = ok(MultiplierMatrix::from_matrix(h.clone()))?;
        let lambda_k = uniform_vec(&mut rng, m, 1.0);
        let s = uniform_vec(&mut rng, m, 2.0);
        let got = ok(sys.solve_lcp(&lambda_k, &s))?;
        // y = H(λ − λᵏ) + s = Hλ + (s − Hλᵏ)
        let rows: Vec<Vec<f64>> = (0..m).map(|i| h.row(i).to_vec()).collect();
        let q: Vec<f64> = (0..m)
            .map(|i| s[i] - rows[i].iter().zip(&lambda_k).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let want = lcp_enumerate(&rows, &q).ok_or_else(|| format!("instance {inst}: enumeration found nothing"))?;
        let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        max_err = max_err.max(err);
        ensure(err <= 1e-7, || format!("instance {inst} (m = {m}): error {err:e}"))?;
    }
    Ok(format!("200 instances, max error {max_err:.3e}"))
}

// 6 ---------------------------------------------------------------------------

fn random_scalar(rng: &mut rand_chacha::ChaCha8Rng, kind: usize) -> ScalarObjective {
    match kind {
        0 => ScalarObjective::Zero,
        1 => ScalarObjective::L1 {
            weight: rng.random_range(0.0..3.0),
        },
        2 => ScalarObjective::Quadratic {
            p: rng.random_range(0.0..3.0),
            c: rng.random_range(-2.0..2.0),
        },
        _ => ScalarObjective::Linear {
            c: rng.random_range(-2.0..2.0),
        },
    }
}

fn criterion_prox() -> Outcome {
    let mut rng = rng(6);
    let mut max_err: f64 = 0.0;
    let mut coords = 0;
    for kind in 0..4 {
        for input in 0..200 {
            let n = rng.random_range(1..=3);
            let terms: Vec<ScalarObjective> = (0..n).map(|_| random_scalar(&mut rng, kind)).collect();
            let r = rng.random_range(0.5..10.0);
            let q = uniform_vec(&mut rng, n, 3.0);
            let set = match input % 3 {
                0 => SetSpec::WholeSpace,
                1 => SetSpec::NonnegativeOrthant,
                _ => {
                    let lower = uniform_vec(&mut rng, n, 2.0);
                    let upper = lower.iter().map(|l| l + rng.random_range(0.1..3.0)).collect();
                    ok(SetSpec::boxed(lower, upper))?
                }
            };
            // Each registered objective form reduces to these scalar terms.
            let specs: Vec<ObjectiveSpec> = {
                let mut v = vec![ObjectiveSpec::SeparableSum { terms: terms.clone() }];
                match terms[0] {
                    ScalarObjective::Zero => v.push(ObjectiveSpec::Zero),
                    ScalarObjective::L1 { weight } => {
                        v.push(ObjectiveSpec::l1(weight));
                    }
                    _ => {}
                }
                v
            };
            let uniform_l1 = matches!(terms[0], ScalarObjective::L1 { .. });
            let quad_spec = if kind == 2 {
                let diag: Vec<f64> = terms
                    .iter()
                    .map(|t| match t {
                        ScalarObjective::Quadratic { p, .. } => *p,
                        _ => 0.0,
                    })
                    .collect();
                let c: Vec<f64> = terms
                    .iter()
                    .map(|t| match t {
                        ScalarObjective::Quadratic { c, .. } => *c,
                        _ => 0.0,
                    })
                    .collect();
                Some(ok(ObjectiveSpec::quadratic(DenseMatrix::diagonal(&diag), c))?)
            } else {
                None
            };
            let linear_spec = (kind == 3).then(|| ObjectiveSpec::Linear {
                c: terms
                    .iter()
                    .map(|t| match t {
                        ScalarObjective::Linear { c } => *c,
                        _ => 0.0,
                    })
                    .collect(),
            });
            for (si, spec) in specs
                .iter()
                .chain(quad_spec.iter())
                .chain(linear_spec.iter())
                .enumerate()
            {
                let got = ok(prox_constrained(spec, &set, r, &q))?;
                for i in 0..n {
                    // ObjectiveSpec::l1 carries one weight: the first term's.
                    let term = if si == 1 && uniform_l1 { &terms[0] } else { &terms[i] };
                    let (lo, hi) = set.bounds(i);
                    let lo = lo.max(q[i] - 8.0);
                    let hi = hi.min(q[i] + 8.0);
                    let f = |y: f64| term.value(y) + 0.5 * r * (y - q[i]) * (y - q[i]);
                    let want = grid_argmin(f, lo, hi);
                    let err = (got[i] - want).abs();
                    max_err = max_err.max(err);
                    coords += 1;
                    ensure(err <= 1e-6, || {
                        format!(
                            "{term:?} r = {r} q = {} set {set:?}: prox {} oracle {want}",
                            q[i], got[i]
                        )
                    })?;
                }
            }
        }
    }
    // Coupled quadratics are not coordinatewise: check against (P + rI)y = rq − c.
    for input in 0..200 {
        let n = rng.random_range(2..=5);
        let f = uniform_matrix(&mut rng, n, n);
        let p = f.gram_cols();
        let c = uniform_vec(&mut rng, n, 2.0);
        let r = rng.random_range(0.5..10.0);
        let q = uniform_vec(&mut rng, n, 5.0);
        let got = ok(prox_constrained(
            &ok(ObjectiveSpec::quadratic(p.clone(), c.clone()))?,
            &SetSpec::WholeSpace,
            r,
            &q,
        ))?;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| p.get(i, j) + if i == j { r } else { 0.0 }).collect())
            .collect();
        let rhs: Vec<f64> = (0..n).map(|i| r * q[i] - c[i]).collect();
        let want = dense_solve(&rows, &rhs).ok_or("singular oracle system")?;
        for i in 0..n {
            let err = (got[i] - want[i]).abs();
            max_err = max_err.max(err);
            coords += 1;
            ensure(err <= 1e-6, || {
                format!("coupled quadratic #{input}: coordinate {i} off by {err:e}")
            })?;
        }
    }
    Ok(format!("{coords} coordinates checked, max error {max_err:.3e}"))
}

// 7 ---------------------------------------------------------------------------

fn criterion_agreement() -> Outcome {
    let stop = StopRule::new(400_000, 1e-10);
    let mut max_x: f64 = 0.0;
    let mut max_obj: f64 = 0.0;
    for k in 0..10 {
        let (inst, star) = equality_qp(700 + k, 3, Some(vec![3, 4]));
        let norm = ok(spectral_norm_sq(
            &ok(match &inst {
                Instance::Separable(p) => p.flatten(),
                Instance::Single(_) => unreachable!(),
            })?
            .a,
        ))?;
        let a2_norm = match &inst {
            Instance::Separable(p) => ok(spectral_norm_sq(&p.blocks()[1].a))?,
            Instance::Single(_) => unreachable!(),
        };
        let r = 1.0;
        let methods = [
            MethodConfig::Balanced(BalancedAlmConfig::new(r, 0.05)),
            MethodConfig::Split(SplitConfig::uniform(2, r, 0.05)),
            MethodConfig::AltSplit(AltSplitConfig { r, s: 1.0, delta: 0.05 }),
            MethodConfig::Baseline(BaselineConfig::new(BaselineMethod::ClassicAlm, r, 0.0)),
            MethodConfig::Baseline(BaselineConfig::new(BaselineMethod::Lalm, r, 1.01 * r * norm)),
            MethodConfig::Baseline(BaselineConfig::new(BaselineMethod::PrimalDual, r, 1.01 * norm / r)),
            MethodConfig::Baseline(BaselineConfig::new(BaselineMethod::Admm, r, 0.0)),
            MethodConfig::Baseline(BaselineConfig::new(
                BaselineMethod::LinearizedAdmm,
                r,
                1.01 * r * a2_norm,
            )),
        ];
        let target = inst.objective_value(&star.x);
        for m in &methods {
            let h = ok(run(&inst, m, &stop, &inst.default_start(), None))?;
            ensure(h.converged, || format!("instance {k}: {} did not converge", m.name()))?;
            let x = &h.last().x;
            let dx = x.iter().zip(&star.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let dobj = (inst.objective_value(x) - target).abs();
            max_x = max_x.max(dx);
            max_obj = max_obj.max(dobj);
            ensure(dx <= 1e-4 && dobj <= 1e-6, || {
                format!("instance {k}: {} off by {dx:e} in x, {dobj:e} in objective", m.name())
            })?;
        }
    }
    Ok(format!(
        "8 methods x 10 instances, max |x - x*| = {max_x:.2e}, max objective gap = {max_obj:.2e}"
    ))
}

// 8 ---------------------------------------------------------------------------

fn criterion_conditioning() -> Outcome {
    let mut rng = rng(8);
    let (m, n) = (10, 20);
    let a = uniform_matrix(&mut rng, m, n);
    let a = a.scaled(100.0 / ok(spectral_norm_sq(&a))?.sqrt());
    let norm = ok(spectral_norm_sq(&a))?;
    let x_feas = uniform_vec(&mut rng, n, 1.0);
    let b = ok(a.matvec(&x_feas))?;
    let objective = ok(ObjectiveSpec::quadratic(
        DenseMatrix::identity(n),
        uniform_vec(&mut rng, n, 1.0),
    ))?;
    let inst: Instance = ok(Problem::new(objective, SetSpec::WholeSpace, a, b, Sense::Equality))?.into();

    let tol = 1e-6;
    let w0 = inst.default_start();
    let balanced = ok(run(
        &inst,
        &MethodConfig::Balanced(BalancedAlmConfig::new(1.0, 0.01)),
        &StopRule::new(100_000, tol),
        &w0,
        None,
    ))?;
    ensure(balanced.converged, || {
        "balanced ALM did not reach 1e-6 within 1e5 iterations".into()
    })?;
    let lalm_cap = 2_000_000;
    let lalm = ok(run(
        &inst,
        &MethodConfig::Baseline(BaselineConfig::new(BaselineMethod::Lalm, 1.0, 1.01 * norm)),
        &StopRule::new(lalm_cap, tol),
        &w0,
        None,
    ))?;
    let lalm_count = if lalm.converged {
        lalm.iterations().to_string()
    } else {
        format!(">{lalm_cap}")
    };
    ensure(lalm.iterations() > balanced.iterations(), || {
        format!(
            "LALM took {lalm_count} iterations, balanced ALM {}",
            balanced.iterations()
        )
    })?;
    Ok(format!(
        "||AᵀA|| = {norm:.4e}: balanced ALM {} iterations, LALM {lalm_count}",
        balanced.iterations()
    ))
}

// 9 ---------------------------------------------------------------------------

fn criterion_determinism() -> Outcome {
    let methods: Vec<String> = [
        "balanced-alm",
        "relaxed-alm",
        "primal-dual",
        "split-alm",
        "alt-split-alm",
        "admm",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let single_methods: Vec<String> = ["balanced-alm", "relaxed-alm", "primal-dual", "lalm", "classic-alm"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let stop = StopRule::new(2_000, 1e-9);
    let mut tables = 0;
    let cases: [(InstanceKind, Dims, &[String]); 3] = [
        (InstanceKind::NonnegQpIneq, Dims::new(5, 8), &single_methods),
        (InstanceKind::LassoEq, Dims::new(4, 9), &methods),
        (InstanceKind::BasisPursuit, Dims::new(4, 10), &single_methods[..4]),
    ];
    for (kind, dims, list) in cases {
        let make = || -> Result<(String, Vec<String>), String> {
            let (inst, reference) = ok(generate_instance(kind, &dims, 99))?;
            let file = ok(ProblemFile::from_instance(&inst, reference).to_json())?;
            let entries = run_matchup(
                Execution::default(),
                &inst,
                list,
                &MethodParams::default(),
                &stop,
                &inst.default_start(),
                None,
            );
            let tables = entries
                .iter()
                .map(|e| match &e.history {
                    Some(h) => ok(history_to_string(h)),
                    None => Ok(format!("error: {:?}", e.row.error)),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((file, tables))
        };
        let first = make()?;
        let second = make()?;
        ensure(first == second, || {
            format!("{kind:?}: outputs differ between identical runs")
        })?;
        tables += first.1.len();
    }
    Ok(format!(
        "{tables} history tables and 3 problem files byte-identical across two runs"
    ))
}

// 10 --------------------------------------------------------------------------

fn criterion_fixtures() -> Outcome {
    let close = |w: &PrimalDualPoint, x: &[f64], l: &[f64]| {
        let target = PrimalDualPoint::new(x.to_vec(), l.to_vec());
        w.max_abs_diff(&target) <= 1e-12
    };
    // x¹ = prox(½x², r=1, q=0) = 0; λ¹ = 0 − (1/2)(−1) = ½.
    // x² = prox at q = ½ gives ¼; s = 2·¼ − 0 − 1 = −½; λ² = ½ + ¼.
    let p = scalar_problem();
    let cfg = BalancedAlmConfig::new(1.0, 1.0);
    let sys = ok(build_h0(&p.a, 1.0, 1.0))?;
    let w1 = ok(balanced_alm_step(&p, &cfg, &sys, &PrimalDualPoint::zeros(1, 1)))?;
    let w2 = ok(balanced_alm_step(&p, &cfg, &sys, &w1))?;
    ensure(close(&w1, &[0.0], &[0.5]), || format!("w1 = {w1:?}"))?;
    ensure(close(&w2, &[0.25], &[0.75]), || format!("w2 = {w2:?}"))?;

    // Both blocks: qᵢ = 0 so xᵢ = 0; s = −1 and H = 3 give λ¹ = 1/3.
    let sep = two_block_fixture();
    let one = DenseMatrix::identity(1);
    let split_sys = ok(build_hp(&[(&one, 1.0), (&one, 1.0)], 1.0))?;
    let split = ok(split_balanced_step(
        &sep,
        &SplitConfig::uniform(2, 1.0, 1.0),
        &split_sys,
        &PrimalDualPoint::zeros(2, 1),
    ))?;
    ensure(close(&split, &[0.0, 0.0], &[1.0 / 3.0]), || format!("split: {split:?}"))?;
    let alt_cfg = AltSplitConfig {
        r: 1.0,
        s: 1.0,
        delta: 1.0,
    };
    let alt_sys = ok(AltSplitSystem::new(&sep, &alt_cfg))?;
    let alt = ok(alt_split_step(&sep, &alt_cfg, &alt_sys, &PrimalDualPoint::zeros(2, 1)))?;
    ensure(close(&alt, &[0.0, 0.0], &[1.0 / 3.0]), || format!("alt-split: {alt:?}"))?;
    Ok("scalar trajectory and both two-block fixtures within 1e-12".into())
}

fn main() {
    let started = Instant::now();
    let lib = match panic::catch_unwind(library) {
        Ok(Ok(lib)) => Some(lib),
        Ok(Err(e)) => {
            eprintln!("test library construction failed: {e}");
            None
        }
        Err(_) => None,
    };
    let lib = lib.as_ref();
    let with_lib = |f: fn(&Library) -> Outcome| -> Box<dyn Fn() -> Outcome + '_> {
        Box::new(move || match lib {
            Some(l) => f(l),
            None => Err("test library unavailable".into()),
        })
    };
    let criteria: Vec<Criterion> = vec![
        (
            1,
            "positive definiteness of H0, H, H_p and the alt-split H",
            Box::new(criterion_positive_definiteness),
        ),
        (
            2,
            "contraction of balanced, split and alt-split iterations",
            with_lib(criterion_contraction),
        ),
        (
            3,
            "relaxed contraction for alpha in {0.5, 1.5, 1.9}; alpha = 1 bit-identical",
            with_lib(criterion_relaxed),
        ),
        (4, "ergodic O(1/t) VI-gap bound", Box::new(criterion_ergodic)),
        (5, "LCP solver against exhaustive enumeration", Box::new(criterion_lcp)),
        (
            6,
            "closed-form prox against grid-search oracle",
            Box::new(criterion_prox),
        ),
        (
            7,
            "cross-method agreement on two-block QPs",
            Box::new(criterion_agreement),
        ),
        (
            8,
            "conditioning robustness against LALM",
            Box::new(criterion_conditioning),
        ),
        (9, "deterministic history tables", Box::new(criterion_determinism)),
        (10, "hand-iteration fixtures", Box::new(criterion_fixtures)),
    ];
    let mut failed = 0;
    for (id, name, check) in &criteria {
        let t = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] criterion {id}: {name} ({detail}; {secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] criterion {id}: {name} ({detail}; {secs:.1}s)");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
