//! End-to-end acceptance run. Prints one verdict line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::Duration;

use qutrit_ybe::dynamics::{
    exact_propagator, hamiltonian_xy, spanning_trotter_probability, Evaluator, HamiltonianSpec, Method, TimeGrid,
};
use qutrit_ybe::linalg::{expm_hermitian, frobenius_distance, re, CMatrix, C64};
use qutrit_ybe::optimizer::{infidelity, lower_bound, multi_step_infidelity, OptimizerConfig};
use qutrit_ybe::spin::{self, Axis, Representation};
use qutrit_ybe::trotter::{
    compress, compressed_circuit, optimize_reflection, step_angle, trotter_circuit, Scheme,
};
use qutrit_ybe::turnover::{qubit_subspace_blocks, sample_angles, sampled_turnover, subspace_check, Family};
use qutrit_ybe_validation::Criterion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const J_VALUES: [f64; 3] = [0.1, 0.55, 1.0];
const T_TOTAL: f64 = 5.0;
const STEPS: usize = 200;
const SEED: u64 = 2024;

fn theta_for(j: f64) -> f64 {
    step_angle(j, T_TOTAL, STEPS)
}

fn algebra() -> Criterion {
    let mut c = Criterion::start(1, "exact spin-1 algebra");
    let tol = 1e-14;
    c.at_most("standard representation identities", spin::algebra_report(Representation::Standard), tol);
    c.at_most("adjoint representation identities", spin::algebra_report(Representation::Adjoint), tol);
    c.at_most("U_+ basis change S -> S~", spin::basis_change_residual(), tol);
    c.at_most("conjugation matrices unitary", spin::conjugation_unitarity_residual(), tol);
    c.at_most("conjugation relations", spin::conjugation_relation_residual(), tol);
    c.at_most("padded S~x = i(A(x)A+ - A+(x)A)", spin::padded_exchange_residual(), tol);
    c.at_most("padded S~x = I(x)A - A(x)I (literal 4x4 form)", spin::padded_literal_residual(), tol);
    c.finish(Some(Duration::from_secs(1)));
    c
}

fn turnover() -> Criterion {
    let mut c = Criterion::start(2, "exact turnover relation");
    let samples = 100;
    for (name, family) in [
        ("single axis", Family::SingleAxis),
        ("a±b", Family::AxisPairs),
        ("x±y±z", Family::AllThree),
    ] {
        let gens = family.generators();
        let worst = gens.iter().map(|&g| sampled_turnover(g, samples, SEED, 0.0)).fold(0.0, f64::max);
        c.check(
            format!("{name} family, {} generators x {samples} samples", gens.len()),
            worst < 1e-12,
            format!("max residual {worst:.3e} < 1e-12"),
        );
        let control = gens.iter().map(|&g| sampled_turnover(g, samples, SEED, 0.1)).fold(f64::INFINITY, f64::min);
        c.check(
            format!("{name} family, epsilon shifted by 0.1"),
            control > 1e-3,
            format!("min residual {control:.3e} > 1e-3"),
        );
    }
    c.finish(Some(Duration::from_secs(10)));
    c
}

fn subspace_blocks() -> Criterion {
    let mut c = Criterion::start(3, "effective-qubit block decomposition");
    for axis in Axis::ALL {
        let sizes = qubit_subspace_blocks(axis).block_sizes;
        c.check(format!("{axis:?} block sizes"), sizes == [1, 2, 2, 4, 2, 4, 4, 8], format!("{sizes:?}"));
        let (mut off, mut block, mut qubit) = (0.0f64, 0.0f64, 0.0f64);
        for [a, b, g, d] in sample_angles(100, SEED) {
            let s = subspace_check(axis, a, b, g, d);
            off = off.max(s.off_block_mass);
            block = block.max(s.block_residual);
            qubit = qubit.max(s.qubit_turnover_residual);
        }
        c.check(format!("{axis:?} off-block mass"), off < 1e-12, format!("{off:.3e} < 1e-12"));
        c.check(format!("{axis:?} blocks vs qubit YY gates"), block < 1e-12, format!("{block:.3e} < 1e-12"));
        c.check(format!("{axis:?} 8x8 qubit turnover"), qubit < 1e-12, format!("{qubit:.3e} < 1e-12"));
    }
    c.finish(None);
    c
}

type Grid = BTreeMap<(usize, Scheme, usize), f64>;

fn optimize_grid(schemes: &[Scheme], cfg: &OptimizerConfig) -> Grid {
    let mut jobs = Vec::new();
    for (ji, &j) in J_VALUES.iter().enumerate() {
        for &s in schemes {
            for nb in 1..=5 {
                jobs.push((ji, j, s, nb));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(ji, j, s, nb)| {
            let r = optimize_reflection(s, theta_for(j), nb, cfg).expect("valid grid point");
            ((ji, s, nb), r.best_infidelity)
        })
        .collect()
}

fn log10(c: f64) -> String {
    if c == 0.0 {
        "-inf".into()
    } else {
        format!("{:.2}", c.log10())
    }
}

fn reference_grid(cfg: &OptimizerConfig) -> (Criterion, Grid) {
    let mut c = Criterion::start(4, "reference identity reaches <= 1e-7 on the full grid");
    let grid = optimize_grid(&[Scheme::Tref], cfg);
    for ((ji, _, nb), v) in &grid {
        c.at_most(format!("TREF J={} nb={nb}", J_VALUES[*ji]), *v, 1e-7);
    }
    c.finish(Some(Duration::from_secs(120)));
    (c, grid)
}

fn scheme_grid(cfg: &OptimizerConfig, reference: &Grid) -> Criterion {
    let mut c = Criterion::start(5, "mirrored-step infidelities and per-panel ordering");
    let schemes = [Scheme::T1, Scheme::T2, Scheme::T3, Scheme::T4, Scheme::T5, Scheme::T6];
    let mut grid = optimize_grid(&schemes, cfg);
    grid.extend(reference.iter().map(|(k, v)| (*k, *v)));

    println!("    log10 infidelity, rows (J, scheme), columns nb = 1..5");
    for (ji, j) in J_VALUES.iter().enumerate() {
        for s in Scheme::ALL {
            let row: Vec<String> = (1..=5).map(|nb| format!("{:>7}", log10(grid[&(ji, s, nb)]))).collect();
            println!("    J={j:<5} {:<5}{}", s.to_string(), row.join(""));
        }
    }

    c.at_most("T3 nb=2 J=0.55", grid[&(1, Scheme::T3, 2)], 1e-6);
    c.at_most("T2 nb=5 J=1.0", grid[&(2, Scheme::T2, 5)], 1e-6);
    for ji in 0..J_VALUES.len() {
        for nb in 1..=5 {
            let values: Vec<f64> = schemes.iter().map(|&s| grid[&(ji, s, nb)]).collect();
            let best = values.iter().copied().fold(f64::INFINITY, f64::min);
            let worst = values.iter().copied().fold(0.0, f64::max);
            let tref = grid[&(ji, Scheme::Tref, nb)];
            c.check(
                format!("ordering J={} nb={nb}", J_VALUES[ji]),
                tref <= best && best <= worst,
                format!("TREF {} <= best {} <= worst {}", log10(tref), log10(best), log10(worst)),
            );
        }
    }
    c.finish(None);
    c
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let h = (&m + m.adjoint()) * re(0.5);
    let norm = h.clone().symmetric_eigen().eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    h * re(1.0 / norm)
}

fn multi_step_bound() -> Criterion {
    let mut c = Criterion::start(6, "multi-step infidelity lower bound");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut margin = f64::INFINITY;
    let samples = 100;
    for _ in 0..samples {
        let a = random_hermitian(&mut rng, 27);
        let b = random_hermitian(&mut rng, 27);
        let eps = rng.random_range(0.01..0.3);
        let wl = expm_hermitian(&a, 0.1);
        let wr = expm_hermitian(&(&a + &b * re(eps)), 0.1);
        let c1 = infidelity(&wl, &wr).expect("same shape");
        for nb in 2..=5 {
            let cn = multi_step_infidelity(&wl, &wr, nb).expect("same shape");
            margin = margin.min(cn - lower_bound(c1, nb));
        }
    }
    c.check(
        format!("{samples} near-identity pairs, nb = 2..5"),
        margin >= -1e-10,
        format!("min (C_nb - (1 - (1 - C_1)^nb)) = {margin:.3e} >= -1e-10"),
    );
    c.finish(None);
    c
}

fn closed_form_count(scheme: Scheme, nb: usize, n: usize) -> usize {
    match (scheme, nb) {
        (Scheme::T2, 4) => 2 * n / 5 - 1,
        (Scheme::T2, 5) if n % 6 == 0 => n / 3 - 1,
        (Scheme::T2, 5) => 2 * (n / 6),
        _ => unreachable!(),
    }
}

fn counting() -> Criterion {
    let mut c = Criterion::start(7, "compression gate counts");
    let theta = theta_for(1.0);
    let (_, r) = compressed_circuit(Scheme::T1, theta, STEPS, 1, &[theta; 4]).expect("valid");
    c.check("T1 nb=1 n=200 gate count", r.compressed_gate_count == 601, format!("{} == 601", r.compressed_gate_count));
    let (_, r) = compressed_circuit(Scheme::T3, theta, STEPS, 2, &[theta; 2]).expect("valid");
    c.check(
        "T3 nb=2 n=200 substitutions / merged",
        r.substitutions_performed == 66 && r.gates_merged == 132,
        format!("{} == 66, {} == 132", r.substitutions_performed, r.gates_merged),
    );
    for nb in [4, 5] {
        for n in [30, 60, 120, 200] {
            let (_, r) = compressed_circuit(Scheme::T2, theta, n, nb, &[theta; 4]).expect("valid");
            let want = closed_form_count(Scheme::T2, nb, n);
            c.check(
                format!("T2 nb={nb} n={n} reduced gates"),
                r.gates_merged == want,
                format!("{} == {want}", r.gates_merged),
            );
        }
    }
    c.finish(None);
    c
}

fn dynamics(cfg: &OptimizerConfig) -> Criterion {
    let mut c = Criterion::start(8, "return-probability dynamics");
    let grid = TimeGrid::default();
    let ts = grid.points();
    let compressed = [(Scheme::T3, 2), (Scheme::T2, 4), (Scheme::T2, 5)];
    let mut slowest = 0.0f64;
    for j in J_VALUES {
        let started = std::time::Instant::now();
        let spec = HamiltonianSpec::open(j);
        let exact = Evaluator::new(spec, Method::Exact, grid.t_max, cfg).expect("exact");
        let p_exact: Vec<f64> = exact.evaluate_all(&ts).expect("grid").into_iter().map(|(p, _)| p).collect();

        // (a)
        let mut at_zero = vec![("exact".to_string(), p_exact[0])];
        let trotter = Evaluator::new(spec, Method::Trotter { scheme: Scheme::T2, n_steps: STEPS }, grid.t_max, cfg)
            .expect("trotter");
        let p_trotter: Vec<f64> = trotter.evaluate_all(&ts).expect("grid").into_iter().map(|(p, _)| p).collect();
        at_zero.push(("trotter".into(), p_trotter[0]));
        let mut fitted = Vec::new();
        for (scheme, nb) in compressed {
            let m = Method::Compressed { scheme, n_steps: STEPS, n_b: nb };
            let e = Evaluator::new(spec, m.clone(), grid.t_max, cfg).expect("compressed");
            let p: Vec<f64> = e.evaluate_all(&ts).expect("grid").into_iter().map(|(p, _)| p).collect();
            at_zero.push((m.to_string(), p[0]));
            fitted.push((scheme, nb, e.fitted.expect("fitted").1, p));
        }
        let zero_ok = at_zero.iter().all(|(_, p)| *p == 1.0);
        c.check(
            format!("J={j} (a) p(0) == 1 exactly"),
            zero_ok,
            at_zero.iter().map(|(m, p)| format!("{m}={p}")).collect::<Vec<_>>().join(" "),
        );

        // (b)
        let dev = |n: usize| {
            ts.par_iter()
                .zip(p_exact.par_iter())
                .map(|(&t, &pe)| (spanning_trotter_probability(j, Scheme::T2, t, n).expect("trotter") - pe).abs())
                .reduce(|| 0.0, f64::max)
        };
        let ratio = dev(100) / dev(200);
        let h = hamiltonian_xy(&spec).expect("hamiltonian");
        let u_exact = exact_propagator(&h, T_TOTAL);
        let u_dev = |n: usize| {
            let u = trotter_circuit(Scheme::T2, step_angle(j, T_TOTAL, n), n).expect("circuit").unitary_fast().expect("unitary");
            frobenius_distance(&u, &u_exact)
        };
        let u_ratio = u_dev(100) / u_dev(200);
        c.check(
            format!("J={j} (b) p deviation ratio, 100 -> 200 steps"),
            (1.6..=2.4).contains(&ratio),
            format!("{ratio:.3} in [1.6, 2.4]; unitary-level ratio at t=5 is {u_ratio:.3}"),
        );

        // (c)
        for (scheme, nb, cost, p) in fitted {
            let subs = STEPS / (nb + 1);
            let limit = 10.0 * (subs as f64 * cost).sqrt();
            let worst = p.iter().zip(&p_trotter_for(&spec, scheme, &ts, cfg)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            c.check(
                format!("J={j} (c) {scheme} nb={nb} compressed vs Trotter"),
                worst <= limit,
                format!("max |dp| {worst:.3e} <= 10 sqrt({subs} x {cost:.3e}) = {limit:.3e}"),
            );
        }
        let secs = started.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
    }
    c.check("runtime per J", slowest <= 60.0, format!("slowest {slowest:.2} s <= 60 s"));
    c.finish(None);
    c
}

fn p_trotter_for(spec: &HamiltonianSpec, scheme: Scheme, ts: &[f64], cfg: &OptimizerConfig) -> Vec<f64> {
    Evaluator::new(*spec, Method::Trotter { scheme, n_steps: STEPS }, T_TOTAL, cfg)
        .and_then(|e| e.evaluate_all(ts))
        .expect("trotter")
        .into_iter()
        .map(|(p, _)| p)
        .collect()
}

fn cli(args: &[&str]) -> u8 {
    qutrit_ybe_cli::run(std::iter::once("qutrit-ybe").chain(args.iter().copied()))
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_default()
}

fn determinism() -> Criterion {
    let mut c = Criterion::start(9, "byte-identical re-runs under a fixed seed");
    let dir = tempfile::tempdir().expect("temp dir");
    let config = dir.path().join("sweep.json");
    std::fs::write(
        &config,
        r#"{"J": [0.55, 1.0], "schemes": ["T2", "T3", "TREF"], "nb": [2, 5], "theta": {"t": 5.0, "steps": 200}}"#,
    )
    .expect("write config");
    let config = config.to_str().expect("utf-8 path");

    let mut runs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("optimize{k}.jsonl"));
        let code = cli(&["--seed", "11", "optimize", "--config", config, "--out", out.to_str().expect("utf-8")]);
        runs.push((code, read(&out)));
    }
    c.check(
        "optimize JSON lines",
        runs[0].0 == 0 && runs[1].0 == 0 && !runs[0].1.is_empty() && runs[0].1 == runs[1].1,
        format!("exit codes {} {}, {} bytes, identical: {}", runs[0].0, runs[1].0, runs[0].1.len(), runs[0].1 == runs[1].1),
    );

    let mut runs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("circuit{k}.json"));
        let o = out.to_str().expect("utf-8");
        let code = cli(&["--seed", "11", "compress", "--scheme", "T3", "--J", "0.55", "--nb", "2", "--auto", "--out", o]);
        let mut bytes = read(&out);
        bytes.extend(read(&dir.path().join(format!("circuit{k}.json.report.json"))));
        runs.push((code, bytes));
    }
    c.check(
        "compress circuit and report JSON",
        runs[0].0 == 0 && runs[1].0 == 0 && !runs[0].1.is_empty() && runs[0].1 == runs[1].1,
        format!("exit codes {} {}, {} bytes, identical: {}", runs[0].0, runs[1].0, runs[0].1.len(), runs[0].1 == runs[1].1),
    );

    // the library path underneath, including the unitary comparison
    let theta = theta_for(0.55);
    let fit = |_| optimize_reflection(Scheme::T3, theta, 2, &OptimizerConfig { rng_seed: 11, ..Default::default() })
        .expect("fit");
    let (a, b) = (fit(0), fit(1));
    let same_fit = a == b;
    let (ca, ra) = compress(Scheme::T3, theta, STEPS, 2, &a.best_params).expect("compress");
    let (cb, rb) = compress(Scheme::T3, theta, STEPS, 2, &b.best_params).expect("compress");
    c.check(
        "library fit and compression",
        same_fit && ca.to_json().ok() == cb.to_json().ok() && ra == rb,
        format!("fit identical: {same_fit}, reports identical: {}", ra == rb),
    );
    c.finish(None);
    c
}

fn main() -> ExitCode {
    let cfg = OptimizerConfig::default();
    let mut results = Vec::new();
    let mut emit = |c: Criterion| {
        print!("{}", c.render());
        results.push((c.number, c.passed()));
    };
    emit(algebra());
    emit(turnover());
    emit(subspace_blocks());
    let (c4, reference) = reference_grid(&cfg);
    emit(c4);
    emit(scheme_grid(&cfg, &reference));
    emit(multi_step_bound());
    emit(counting());
    emit(dynamics(&cfg));
    emit(determinism());

    let failed: Vec<String> = results.iter().filter(|r| !r.1).map(|r| r.0.to_string()).collect();
    println!(
        "acceptance: {}/{} criteria passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join(", ")) }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
