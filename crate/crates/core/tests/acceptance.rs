//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use magic_square::ansatz::{cost, gradient, train, AnsatzShape, ParamSet, TrainConfig, TrainTrace};
use magic_square::game::{classical_value_bruteforce, quantum_game_value, spectrum, value_hamiltonian, GameSpec};
use magic_square::pauli::{commutes, dense, multiply, PauliString};
use magic_square::simulator::prepare_bell_stack;
use magic_square::verify::{expectation_grid, sample_game};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const CONVERGED_COST: f64 = -8.9;
const SHOTS: usize = 10_000;

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn classical_bound() -> Outcome {
    let start = Instant::now();
    let c = classical_value_bruteforce();
    let elapsed = start.elapsed();
    let exact = *c.value.numer() == 8 && *c.value.denom() == 9;
    check(
        exact && c.strategy_pairs == 4096 && elapsed < Duration::from_secs(1),
        format!("value {} over {} pairs in {elapsed:?}", c.value, c.strategy_pairs),
    )
}

fn hamiltonian_spectrum() -> Outcome {
    let start = Instant::now();
    let s = spectrum(&GameSpec::magic_square(), 1e-9);
    let elapsed = start.elapsed();
    check(
        (s.min + 9.0).abs() < 1e-9 && s.ground_dimension == 2 && elapsed < Duration::from_secs(1),
        format!("min {} ground dim {} in {elapsed:?}", s.min, s.ground_dimension),
    )
}

fn training_convergence(runs: &[TrainTrace], elapsed: Duration) -> Outcome {
    let passing = runs.iter().filter(|t| t.final_cost <= CONVERGED_COST).count();
    let values: Vec<String> = runs
        .iter()
        .map(|t| format!("{:.6}", quantum_game_value(t.final_cost).unwrap()))
        .collect();
    let all_values_ok = runs
        .iter()
        .filter(|t| t.final_cost <= CONVERGED_COST)
        .all(|t| quantum_game_value(t.final_cost).unwrap() >= 0.994);
    check(
        passing >= 4 && all_values_ok && elapsed < Duration::from_secs(120),
        format!("{passing}/5 seeds reach cost <= {CONVERGED_COST}; game values [{}] in {elapsed:?}", values.join(", ")),
    )
}

fn passing_runs(runs: &[TrainTrace]) -> impl Iterator<Item = &TrainTrace> {
    runs.iter().filter(|t| t.final_cost <= CONVERGED_COST)
}

fn grid_consistency(runs: &[TrainTrace]) -> Outcome {
    let spec = GameSpec::magic_square();
    let state = prepare_bell_stack();
    let mut worst_entry = f64::INFINITY;
    let mut worst_gap: f64 = 0.0;
    for t in passing_runs(runs) {
        let g = expectation_grid(&state, &spec, &t.final_params).unwrap();
        worst_entry = g.grid.iter().flatten().fold(worst_entry, |m, &v| m.min(v));
        worst_gap = worst_gap.max((g.implied_cost() - t.final_cost).abs());
    }
    check(
        worst_entry >= 0.9 && worst_gap <= 1e-10,
        format!("min grid entry {worst_entry:.6}, max |-sum(grid) - cost| {worst_gap:.2e}"),
    )
}

fn sampled_win_rate(runs: &[TrainTrace]) -> Outcome {
    let spec = GameSpec::magic_square();
    let state = prepare_bell_stack();
    let window = 5.0 / (SHOTS as f64).sqrt();
    let mut ok = true;
    let mut worst_overall = f64::INFINITY;
    let mut worst_dev: f64 = 0.0;
    for (k, t) in passing_runs(runs).enumerate() {
        let g = expectation_grid(&state, &spec, &t.final_params).unwrap();
        let w = sample_game(&state, &spec, &t.final_params, SHOTS, 1000 + k as u64).unwrap().win_rates();
        worst_overall = worst_overall.min(w.overall);
        ok &= w.overall >= 0.98;
        for i in 0..3 {
            for j in 0..3 {
                let dev = (w.per_input[i][j] - (1.0 + g.grid[i][j]) / 2.0).abs();
                worst_dev = worst_dev.max(dev);
                ok &= dev <= window;
            }
        }
    }
    check(
        ok,
        format!("min overall win rate {worst_overall:.4}, max per-input deviation {worst_dev:.4} (window {window:.4})"),
    )
}

fn gradient_oracle() -> Outcome {
    let spec = GameSpec::magic_square();
    let state = prepare_bell_stack();
    let shape = AnsatzShape::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let values = (0..shape.total_params()).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
        let p = ParamSet::from_flat(shape, values).unwrap();
        let g = gradient(&state, &spec, &p).unwrap();
        for k in 0..p.len() {
            let mut q = p.clone();
            q.values_mut()[k] += h;
            let plus = cost(&state, &spec, &q).unwrap();
            q.values_mut()[k] -= 2.0 * h;
            let minus = cost(&state, &spec, &q).unwrap();
            worst = worst.max((g.values()[k] - (plus - minus) / (2.0 * h)).abs());
        }
    }
    check(worst <= 1e-6, format!("max |shift - central difference| {worst:.2e} over 20 points x 162 coordinates"))
}

fn untrained_baseline() -> Outcome {
    let spec = GameSpec::magic_square();
    let state = prepare_bell_stack();
    // Dense oracle: <ψ|H|ψ> and <ψ|A_i⊗B_j|ψ> from explicit matrices.
    let v = DVector::from_column_slice(state.amplitudes());
    let dense_value = |m: &nalgebra::DMatrix<num_complex::Complex64>| (v.adjoint() * m * &v)[(0, 0)].re;
    let oracle_cost = dense_value(value_hamiltonian(&spec).matrix());
    let expected = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    let mut oracle_ok = (oracle_cost + 3.0).abs() < 1e-12;
    for i in 0..3 {
        for j in 0..3 {
            oracle_ok &= (dense_value(dense(&spec.joint(i, j).unwrap()).matrix()) - expected[i][j]).abs() < 1e-12;
        }
    }

    let p = ParamSet::zeros(AnsatzShape::new(0));
    let c = cost(&state, &spec, &p).unwrap();
    let g = expectation_grid(&state, &spec, &p).unwrap();
    let grid_ok = (0..9).all(|k| (g.grid[k / 3][k % 3] - expected[k / 3][k % 3]).abs() < 1e-12);
    let marginals_ok = g.alice_marginals.iter().chain(&g.bob_marginals).all(|m| m.abs() < 1e-12);
    let value = quantum_game_value(c).unwrap();
    check(
        oracle_ok && (c + 3.0).abs() < 1e-12 && grid_ok && marginals_ok && (value - 2.0 / 3.0).abs() < 1e-12,
        format!("cost {c}, game value {value}, dense oracle agrees: {oracle_ok}"),
    )
}

fn symbolic_algebra() -> Outcome {
    let spec = GameSpec::magic_square();
    let mut ok = true;
    for set in [&spec.rows, &spec.cols] {
        for a in set.iter() {
            for b in set.iter() {
                ok &= commutes(a, b).unwrap();
            }
        }
    }
    let minus_xxx: PauliString = "-XXX".parse().unwrap();
    let mut products = Vec::new();
    for set in [&spec.rows, &spec.cols] {
        let sym = multiply(&multiply(&set[0], &set[1]).unwrap(), &set[2]).unwrap();
        let oracle = dense(&set[0]).matmul(&dense(&set[1])).unwrap().matmul(&dense(&set[2])).unwrap();
        ok &= sym == minus_xxx;
        ok &= dense(&sym).max_abs_diff(&oracle).unwrap() < 1e-12;
        products.push(sym.to_string());
    }
    check(ok, format!("A0A1A2 = {}, B0B1B2 = {}", products[0], products[1]))
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_magic-square");
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"seed": 3, "layers": 3, "learning_rate": 0.1, "iterations": 200, "shots_per_input": 2000}"#).unwrap();
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let train = Command::new(bin)
            .args(["train", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        let verify = Command::new(bin)
            .args([
                "verify",
                "--params",
                out.join("params.json").to_str().unwrap(),
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        if !train.status.success() || !verify.status.success() {
            return check(false, "train or verify exited with failure");
        }
        files.push((
            fs::read(out.join("history.csv")).unwrap(),
            fs::read(out.join("params.json")).unwrap(),
            fs::read(out.join("report.json")).unwrap(),
        ));
    }
    check(files[0] == files[1], "history.csv, params.json and report.json byte-identical across two runs")
}

fn main() {
    let start = Instant::now();
    let runs: Vec<TrainTrace> = SEEDS
        .iter()
        .map(|&seed| train(&TrainConfig { seed, ..TrainConfig::default() }).unwrap())
        .collect();
    let training_time = start.elapsed();

    let results = [
        ("1 classical bound", classical_bound()),
        ("2 hamiltonian spectrum", hamiltonian_spectrum()),
        ("3 training convergence", training_convergence(&runs, training_time)),
        ("4 expectation grid", grid_consistency(&runs)),
        ("5 sampled win rate", sampled_win_rate(&runs)),
        ("6 gradient oracle", gradient_oracle()),
        ("7 untrained baseline", untrained_baseline()),
        ("8 symbolic algebra", symbolic_algebra()),
        ("9 determinism", determinism()),
    ];

    let mut failures = 0;
    for (name, r) in &results {
        println!("[{}] {name}: {}", if r.passed { "PASS" } else { "FAIL" }, r.detail);
        if !r.passed {
            failures += 1;
        }
    }
    println!("acceptance: {} passed, {failures} failed", results.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
