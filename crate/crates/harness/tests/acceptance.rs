//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line per criterion and exits nonzero if any failed.

use projfree_core::cgs::{inner_steps, run_cgs, CgsConfig};
use projfree_core::fw_subsolver::{solve_subproblem, SubproblemSpec};
use projfree_core::matreg::{cone_check, hessian_min_eigenvalue, random_feasible, rsc_margin, GenSpec};
use projfree_core::storc::minibatch_size;
use projfree_core::{CostLedger, NuclearBall, ParamMatrix, Problem, ProblemKind};
use projfree_harness::config::{ExperimentConfig, ReferencePolicy, SolverKind};
use projfree_harness::experiment::{run_solver, storc_config, Instance};
use projfree_harness::io::trace_to_csv;
use projfree_harness::{compute_reference, run_experiment, ReferenceSolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

const DECAY_RATIO: f64 = 0.75;
const PLATEAU_FACTOR: f64 = 100.0;
const REF_TOL: f64 = 1e-10;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn gaussian(d: usize, scale: f64, rng: &mut ChaCha8Rng) -> ParamMatrix {
    ParamMatrix::from_fn(d, d, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

fn spec(d: usize, r: usize, alpha: f64, w: Option<f64>, rho: f64, seed: u64) -> GenSpec {
    GenSpec {
        d,
        r,
        alpha,
        smoothness: 10.0,
        sigma_hat: 1.0,
        label_noise_std: 0.1,
        w_scale: w,
        rho,
        seed,
    }
}

/// The d = 30, r = 2, n = 600, L/σ̂ = 10 instances used by several criteria.
struct Shared {
    convex: Option<(Instance, ReferenceSolution)>,
    nonconvex: Option<(Instance, ReferenceSolution)>,
}

impl Shared {
    fn get(&mut self, w: Option<f64>) -> &(Instance, ReferenceSolution) {
        let slot = if w.is_some() { &mut self.nonconvex } else { &mut self.convex };
        slot.get_or_insert_with(|| {
            let inst = Instance::generate(&spec(30, 2, 10.0, w, 50.0, 1)).unwrap();
            let r = compute_reference(&inst.problem, &inst.ball, REF_TOL).unwrap();
            (inst, r)
        })
    }
}

fn base_config(g: GenSpec, solvers: Vec<SolverKind>, outer_iters: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        generator: g,
        solvers,
        cgs: Default::default(),
        storc: Default::default(),
        pgd: Default::default(),
        svrg: Default::default(),
        reference: ReferencePolicy::Compute { tol: REF_TOL },
        out_dir: PathBuf::from("unused"),
        seeds: vec![0],
        record_wall_time: false,
    };
    cfg.cgs.outer_iters = outer_iters;
    cfg.storc.outer_iters = outer_iters;
    cfg
}

/// Floor the gaps settle on: the smallest gap in the trailing run of epochs
/// that failed to contract, never below the reference tolerance.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn observed_plateau(gaps: &[f64], ref_tol: f64) -> f64 {
    let mut floor = 0.0f64;
    let mut t = gaps.len() - 1;
    let mut tail = Vec::new();
    while t >= 1 && (gaps[t] <= ref_tol || !(gaps[t] <= DECAY_RATIO * gaps[t - 1])) {
        tail.push(gaps[t].max(0.0));
        t -= 1;
    }
    if let Some(m) = tail.iter().copied().reduce(f64::min) {
        floor = m;
    }
    floor.max(ref_tol)
}

/// Ratios `gap_t / gap_{t−1}` for the epochs whose gap is above the plateau band.
fn checked_ratios(gaps: &[f64], ref_tol: f64) -> Vec<(usize, f64)> {
    let band = PLATEAU_FACTOR * observed_plateau(gaps, ref_tol);
    (1..gaps.len())
        .filter(|&t| gaps[t] > band)
        .map(|t| (t, gaps[t] / gaps[t - 1]))
        .collect()
}

fn decay_verdict(label: &str, gaps: &[f64], ref_tol: f64) -> (bool, String) {
    let ratios = checked_ratios(gaps, ref_tol);
    let worst = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let ok = !ratios.is_empty() && worst <= DECAY_RATIO;
    (
        ok,
        format!("{label}: {} epochs checked, worst ratio {worst:.3}, final gap {:.2e}", ratios.len(), gaps[gaps.len() - 1]),
    )
}

fn relative_fd_error(problem: &Problem, theta: &ParamMatrix) -> f64 {
    let g = problem.full_gradient(theta, &mut CostLedger::new()).unwrap();
    let h = 1e-5;
    let fd = ParamMatrix::from_fn(theta.rows(), theta.cols(), |i, j| {
        let mut plus = theta.clone();
        let mut minus = theta.clone();
        plus.set(i, j, theta.get(i, j) + h);
        minus.set(i, j, theta.get(i, j) - h);
        (problem.objective(&plus).unwrap() - problem.objective(&minus).unwrap()) / (2.0 * h)
    });
    fd.distance(&g).unwrap() / g.frobenius_norm()
}

fn c01_gradients(_: &mut Shared) -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for seed in 0..5 {
        for w in [None, Some(0.2)] {
            // n = round(1.4 · 1 · 5) = 7
            let inst = Instance::generate(&spec(5, 1, 1.4, w, 3.0, seed)).unwrap();
            assert_eq!(inst.problem.n(), 7);
            let theta = gaussian(5, 1.0, &mut rng);
            worst = worst.max(relative_fd_error(&inst.problem, &theta));
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-6 && elapsed < Duration::from_secs(1),
        format!("worst relative error {worst:.2e}, {:.3} s", elapsed.as_secs_f64()),
    )
}

fn c02_oracles(_: &mut Shared) -> Verdict {
    let start = Instant::now();
    let d = 20;
    let rho = 5.0;
    let ball = NuclearBall::new(rho, d).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut ledger = CostLedger::new();
    let (mut worst_lo, mut worst_vi) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..100 {
        let g = gaussian(d, 1.0, &mut rng);
        let s = ball.linear_oracle(&g, &mut rng, &mut ledger).unwrap();
        let sigma = g.singular_values().unwrap()[0];
        let exact = -rho * sigma;
        worst_lo = worst_lo.max((g.dot(&s) - exact).abs() / exact.abs());

        let scale = rng.random_range(0.02..0.5);
        let x = gaussian(d, scale, &mut rng);
        let p = ball.project(&x, &mut ledger).unwrap();
        let residual = x.sub(&p);
        for _ in 0..500 {
            let y = random_feasible(d, rho, &mut rng).unwrap();
            worst_vi = worst_vi.max(residual.dot(&y.sub(&p)));
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst_lo <= 1e-8 && worst_vi <= 1e-8 && elapsed < Duration::from_secs(30),
        format!(
            "LO worst rel. error {worst_lo:.2e}, projection worst <X-P,Y-P> {worst_vi:.2e}, {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c03_cgs_decay(shared: &mut Shared) -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    for (label, w) in [("convex", None), ("non-convex", Some(0.1))] {
        let (inst, reference) = shared.get(w);
        let cfg = CgsConfig::for_problem(&inst.problem, &inst.ball, inst.zero(), 10, 3).unwrap();
        let start = Instant::now();
        let run = run_cgs(&inst.problem, &inst.ball, &cfg, &mut CostLedger::new()).unwrap();
        let elapsed = start.elapsed();
        let gaps: Vec<f64> = run.epochs.iter().map(|e| e.f_value - reference.f_value).collect();
        let (ok, note) = decay_verdict(label, &gaps, reference.ref_tol);
        pass &= ok && elapsed < Duration::from_secs(60);
        notes.push(format!("{note}, {:.1} s", elapsed.as_secs_f64()));
    }
    verdict(pass, notes.join("; "))
}

fn c04_counter_laws(_: &mut Shared) -> Verdict {
    let inst = Instance::generate(&spec(10, 1, 5.0, None, 5.0, 4)).unwrap();
    let n = inst.problem.n() as u64;
    let outer = 3;
    let mut per_epoch = Vec::new();
    let mut pass = true;
    for ratio in [100.0, 400.0] {
        let mut cfg = CgsConfig::for_problem(&inst.problem, &inst.ball, inst.zero(), outer, 4).unwrap();
        cfg.smoothness = ratio * cfg.sigma_hat;
        let expected_steps = (8.0 * f64::sqrt(ratio)).ceil() as u64;
        let mut ledger = CostLedger::new();
        let run = run_cgs(&inst.problem, &inst.ball, &cfg, &mut ledger).unwrap();
        pass &= ledger.component_grad_evals == n * outer as u64 * expected_steps;
        pass &= inner_steps(cfg.smoothness, cfg.sigma_hat) as u64 == expected_steps;
        let counts: Vec<u64> = run
            .epochs
            .windows(2)
            .map(|w| w[1].ledger.component_grad_evals - w[0].ledger.component_grad_evals)
            .collect();
        pass &= counts.iter().all(|&c| c == n * expected_steps);
        per_epoch.push(counts[0]);
    }
    pass &= per_epoch[1] == 2 * per_epoch[0];
    verdict(
        pass,
        format!("n = {n}, per-epoch component gradients {} -> {}", per_epoch[0], per_epoch[1]),
    )
}

fn c05_storc_stochastic(_: &mut Shared) -> Verdict {
    let start = Instant::now();
    let seeds = 1..=5u64;
    let mut pass = true;
    let mut all_ratios: Vec<Vec<f64>> = Vec::new();
    let mut included: Option<Vec<bool>> = None;
    let mut comps = Vec::new();
    let mut batch = 0;
    for seed in seeds {
        // n = 100 · 2 · 30 = 6000
        let g = spec(30, 2, 100.0, None, 50.0, seed);
        let inst = Instance::generate(&g).unwrap();
        let reference = compute_reference(&inst.problem, &inst.ball, REF_TOL).unwrap();
        let mut cfg = base_config(g, vec![SolverKind::Cgs, SolverKind::Storc], 8);
        cfg.storc.scale_minibatch = 2e-4;
        let sc = storc_config(&inst, &cfg, seed).unwrap();
        batch = minibatch_size(&sc, inner_steps(sc.base.smoothness, sc.base.sigma_hat));
        pass &= batch < inst.problem.n();
        let storc = run_solver(&inst, SolverKind::Storc, &cfg, seed, &reference).unwrap();
        let cgs = run_solver(&inst, SolverKind::Cgs, &cfg, seed, &reference).unwrap();
        pass &= storc.ledger.component_grad_evals < cgs.ledger.component_grad_evals;
        comps.push((storc.ledger.component_grad_evals, cgs.ledger.component_grad_evals));
        let gaps: Vec<f64> = storc.rows.iter().map(|r| r.gap_to_ref).collect();
        let band = PLATEAU_FACTOR * observed_plateau(&gaps, reference.ref_tol);
        let above: Vec<bool> = (0..gaps.len()).map(|t| gaps[t] > band).collect();
        included = Some(match included {
            None => above,
            Some(prev) => prev.iter().zip(&above).map(|(a, b)| *a && *b).collect(),
        });
        all_ratios.push((1..gaps.len()).map(|t| gaps[t] / gaps[t - 1]).collect());
    }
    let included = included.unwrap();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for t in 1..included.len() {
        if included[t] {
            let mean = all_ratios.iter().map(|r| r[t - 1]).sum::<f64>() / all_ratios.len() as f64;
            worst = worst.max(mean);
            checked += 1;
        }
    }
    pass &= checked > 0 && worst <= DECAY_RATIO;
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    verdict(
        pass,
        format!(
            "m = {batch} < n = 6000, worst mean ratio {worst:.3} over {checked} epochs, component grads storc/cgs {:?}, {:.1} s",
            comps[0], elapsed.as_secs_f64()
        ),
    )
}

fn c06_bypass(shared: &mut Shared) -> Verdict {
    let (inst, reference) = shared.get(None);
    let mut cfg = base_config(inst.spec.clone(), vec![SolverKind::Cgs, SolverKind::Storc], 6);
    cfg.storc.scale_minibatch = 1.0;
    let sc = storc_config(inst, &cfg, 11).unwrap();
    let m = minibatch_size(&sc, inner_steps(sc.base.smoothness, sc.base.sigma_hat));
    let cgs = run_solver(inst, SolverKind::Cgs, &cfg, 11, reference).unwrap();
    let storc = run_solver(inst, SolverKind::Storc, &cfg, 11, reference).unwrap();
    let same_csv = trace_to_csv(&cgs.rows) == trace_to_csv(&storc.rows);
    let same_theta = cgs
        .run
        .epochs
        .iter()
        .zip(&storc.run.epochs)
        .all(|(a, b)| a.theta.as_slice().iter().zip(b.theta.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
    verdict(
        m >= inst.problem.n() && same_csv && same_theta && cgs.run.epochs.len() == storc.run.epochs.len(),
        format!("m = {m} >= n = {}, traces identical: {same_csv}, iterates bitwise equal: {same_theta}", inst.problem.n()),
    )
}

fn c07_variance_bound(_: &mut Shared) -> Verdict {
    let inst = Instance::generate(&spec(10, 1, 10.0, None, 5.0, 7)).unwrap();
    let p = &inst.problem;
    let reference = compute_reference(p, &inst.ball, REF_TOL).unwrap();
    let l = p.constants().component_smoothness;
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let trials = 200;
    let draws = 400;
    let mut ok = 0;
    let mut worst = 0.0f64;
    let mut scratch = CostLedger::new();
    for trial in 0..trials {
        let m = [1, 4, 16][trial % 3];
        let z = random_feasible(10, inst.spec.rho, &mut rng).unwrap();
        let y0 = random_feasible(10, inst.spec.rho, &mut rng).unwrap();
        let grad_z = p.full_gradient(&z, &mut scratch).unwrap();
        let grad_y0 = p.full_gradient(&y0, &mut scratch).unwrap();
        let second_moment = (0..draws)
            .map(|_| {
                let v = p.vr_gradient(&z, &y0, &grad_y0, m, &mut rng, &mut scratch).unwrap();
                v.sub(&grad_z).frobenius_norm_sq()
            })
            .sum::<f64>()
            / draws as f64;
        let bound = 4.0 * l / m as f64
            * ((p.objective(&z).unwrap() - reference.f_value) + (p.objective(&y0).unwrap() - reference.f_value));
        worst = worst.max(second_moment / bound);
        if second_moment <= bound {
            ok += 1;
        }
    }
    let frac = ok as f64 / trials as f64;
    verdict(
        frac >= 0.95,
        format!("bound held in {ok}/{trials} trials, largest moment/bound {worst:.3} (L = {l:.1})"),
    )
}

/// Smallest eigenvalue of `ZᵀZ/n − Σ_w` by a dense symmetric eigensolver.
fn dense_min_eigenvalue(problem: &Problem) -> f64 {
    let p = problem.dim() * problem.dim();
    let n = problem.n() as f64;
    let z = nalgebra::DMatrix::from_row_slice(problem.n(), p, problem.designs());
    let mut h = z.transpose() * &z / n;
    if let Some(w) = problem.noise_cov() {
        for i in 0..p {
            h[(i, i)] -= w[i];
        }
    }
    h.symmetric_eigen().eigenvalues.min()
}

fn c08_nonconvex(shared: &mut Shared) -> Verdict {
    let small = Instance::generate(&spec(10, 1, 2.0, Some(0.1), 5.0, 8)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let power = hessian_min_eigenvalue(&small.problem, 20_000, &mut rng);
    let dense = dense_min_eigenvalue(&small.problem);
    let mut pass = small.problem.n() == 20 && power < 0.0 && (power - dense).abs() <= 1e-6 * dense.abs().max(1.0);
    let mut notes = vec![format!("d = 10, n = 20: lambda_min {power:.4e} (dense {dense:.4e})")];

    let (inst, reference) = shared.get(Some(0.1));
    let big = hessian_min_eigenvalue(&inst.problem, 20_000, &mut rng);
    pass &= big < 0.0 && inst.problem.kind() == ProblemKind::Nonconvex;
    let mut cfg = base_config(inst.spec.clone(), vec![SolverKind::Storc], 10);
    cfg.storc.scale_minibatch = 6e-6;
    let sc = storc_config(inst, &cfg, 5).unwrap();
    let m = minibatch_size(&sc, inner_steps(sc.base.smoothness, sc.base.sigma_hat));
    pass &= m < inst.problem.n();
    let start = Instant::now();
    let out = run_solver(inst, SolverKind::Storc, &cfg, 5, reference).unwrap();
    let elapsed = start.elapsed();
    let gaps: Vec<f64> = out.rows.iter().map(|r| r.gap_to_ref).collect();
    let (ok, note) = decay_verdict("storc non-convex", &gaps, reference.ref_tol);
    pass &= ok && elapsed < Duration::from_secs(60);
    notes.push(format!(
        "d = 30, n = {}: lambda_min {big:.3e}; m = {m}; {note}, {:.1} s",
        inst.problem.n(),
        elapsed.as_secs_f64()
    ));
    verdict(pass, notes.join("; "))
}

fn c09_cost_asymmetry(_: &mut Shared) -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    for w in [None, Some(0.1)] {
        let g = spec(8, 1, 5.0, w, 4.0, 9);
        let inst = Instance::generate(&g).unwrap();
        let reference = compute_reference(&inst.problem, &inst.ball, 1e-8).unwrap();
        for scale in [1.0, 1e-5] {
            let mut cfg = base_config(g.clone(), SolverKind::ALL.to_vec(), 3);
            cfg.storc.scale_minibatch = scale;
            cfg.pgd.iters = 20;
            cfg.svrg.iters = 3;
            for solver in SolverKind::ALL {
                let out = run_solver(&inst, solver, &cfg, 9, &reference).unwrap();
                let l = out.ledger;
                let ok = match solver {
                    SolverKind::Cgs | SolverKind::Storc => l.projection_calls == 0 && l.lo_calls > 0,
                    SolverKind::Pgd | SolverKind::Svrg => l.lo_calls == 0 && l.projection_calls > 0,
                };
                if !ok {
                    notes.push(format!("{solver}: lo {} proj {}", l.lo_calls, l.projection_calls));
                }
                pass &= ok;
            }
        }
    }
    let detail = if notes.is_empty() {
        "16 runs: sliding solvers never project, baselines never call the oracle".to_string()
    } else {
        notes.join("; ")
    };
    verdict(pass, detail)
}

fn c10_subsolver(_: &mut Shared) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut gap_ok = 0;
    let mut value_ok = 0;
    let specs = 50;
    for _ in 0..specs {
        let d = rng.random_range(5..=15);
        let rho = rng.random_range(0.5..5.0);
        let ball = NuclearBall::new(rho, d).unwrap();
        let beta = 10f64.powf(rng.random_range(-1.0..1.0));
        let eta = 10f64.powf(rng.random_range(-4.0..-1.0));
        let center = gaussian(d, 1.0, &mut rng);
        let lin = gaussian(d, 1.0, &mut rng);
        let warm = random_feasible(d, rho, &mut rng).unwrap();
        let sp = SubproblemSpec::new(beta, center, lin, eta, warm.clone(), rho);
        let sol = solve_subproblem(&sp, &ball, &mut rng, &mut CostLedger::new()).unwrap();
        if sol.final_gap <= eta {
            gap_ok += 1;
        }
        // projected gradient on g with step 1/β
        let mut x = warm;
        for _ in 0..200 {
            let mut next = x.clone();
            next.axpy(-1.0 / beta, &sp.gradient(&x));
            x = ball.project(&next, &mut CostLedger::new()).unwrap();
        }
        if sp.value(&sol.x) <= sp.value(&x) + eta {
            value_ok += 1;
        }
    }
    verdict(
        gap_ok == specs && value_ok == specs,
        format!("{gap_ok}/{specs} exits with gap <= eta, {value_ok}/{specs} within eta of the PGD minimizer"),
    )
}

fn c11_diagnostics(shared: &mut Shared) -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    for (label, w) in [("convex", None), ("non-convex", Some(0.1))] {
        for seed in 0..3 {
            let g = spec(20, 2, 10.0, w, 20.0, seed);
            let inst = Instance::generate(&g).unwrap();
            let m = rsc_margin(&inst.problem, &g, 200, &mut rng).unwrap();
            let frac = m.satisfaction.iter().find(|(c, _)| *c == 16.0).unwrap().1;
            pass &= frac >= 0.95;
            if seed == 0 {
                notes.push(format!("rsc {label}: fraction at c = 16 is {frac:.3}, fitted c {:.3}", m.fitted_c));
            }
        }
    }
    for (label, w) in [("convex", None), ("non-convex", Some(0.1))] {
        let (inst, reference) = shared.get(w);
        let cfg = CgsConfig::for_problem(&inst.problem, &inst.ball, inst.zero(), 8, 3).unwrap();
        let run = run_cgs(&inst.problem, &inst.ball, &cfg, &mut CostLedger::new()).unwrap();
        let checks: Vec<_> = run
            .epochs
            .iter()
            .map(|e| cone_check(&e.theta, &reference.theta, &inst.truth, inst.spec.rho).unwrap())
            .collect();
        let held = checks.iter().filter(|c| c.holds).count();
        let min_slack = checks.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min);
        pass &= held == checks.len();
        notes.push(format!("cone {label}: {held}/{} iterates, min slack {min_slack:.3}", checks.len()));
    }
    verdict(pass, notes.join("; "))
}

fn c12_determinism(_: &mut Shared) -> Verdict {
    const HEADER: &str = "outer_t,f_value,gap_to_ref,dist_to_star_F,dist_to_ref_F,cum_component_grads,cum_full_grads,cum_lo_calls,cum_projections,wall_ms,max_inner_gap";
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base_config(spec(8, 1, 6.0, None, 4.0, 0), SolverKind::ALL.to_vec(), 3);
    cfg.seeds = vec![1, 2];
    cfg.pgd.iters = 10;
    cfg.svrg.iters = 3;
    cfg.storc.scale_minibatch = 1e-5;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        cfg.out_dir = tmp.path().join(run);
        outputs.push(run_experiment(&cfg).unwrap());
    }
    let mut identical = 0;
    let mut headers_ok = true;
    for (a, b) in outputs[0].csvs.iter().zip(&outputs[1].csvs) {
        let (x, y) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
        if x == y {
            identical += 1;
        }
        let text = String::from_utf8(x).unwrap();
        headers_ok &= text.split('\n').next() == Some(HEADER) && !text.contains('\r');
    }
    let total = outputs[0].csvs.len();
    verdict(
        total == 8 && identical == total && headers_ok,
        format!("{identical}/{total} CSVs byte-identical across reruns, header exact: {headers_ok}"),
    )
}

type Criterion = fn(&mut Shared) -> Verdict;

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, Criterion); 12] = [
        ("gradient correctness", c01_gradients),
        ("linear oracle and projection", c02_oracles),
        ("cgs geometric decay", c03_cgs_decay),
        ("cgs counter laws", c04_counter_laws),
        ("storc stochastic-regime decay", c05_storc_stochastic),
        ("storc bypass equivalence", c06_bypass),
        ("variance bound", c07_variance_bound),
        ("non-convexity witness and storc robustness", c08_nonconvex),
        ("cost asymmetry", c09_cost_asymmetry),
        ("subsolver contract", c10_subsolver),
        ("rsc and cone diagnostics", c11_diagnostics),
        ("determinism and csv format", c12_determinism),
    ];
    let mut shared = Shared {
        convex: None,
        nonconvex: None,
    };
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(|| check(&mut shared)))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                verdict(false, format!("panicked: {msg}"))
            });
        let tag = if v.pass { "PASS" } else { "FAIL" };
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {tag} {name} [{:.1} s] {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
