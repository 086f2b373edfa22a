//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed.

mod oracles;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use csrp::density::{fit_gaussian, fit_kde, fit_laplace, fit_poisson, DensityModel, Family};
use csrp::evaluate::expected_profit;
use csrp::ingest::split_by_date;
use csrp::lp::{solve_lp, LpProblem, MipOptions, ObjectiveSense, RowSense, Status};
use csrp::model::{CsrpInstance, ModelVariant, TemplateSplit};
use csrp::scenario::{Probability, ScenarioSet};
use csrp::solve::{
    solve_benders, solve_deterministic, solve_extensive, BendersOptions, BendersOutcome, BendersStatus, CutMode,
    ExtensiveOptions, SaaOptions,
};
use csrp::synthetic::{bimodal_panel, BimodalSpec};
use csrp::{compare_approaches, Approach, DemandDistributionSet, DemandPanel};
use oracles::Vertices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn random_instance(
    rng: &mut ChaCha8Rng,
    max_locations: usize,
    max_capacity: u64,
    max_scenarios: usize,
    max_demand: u64,
) -> (CsrpInstance<f64>, ScenarioSet) {
    let r = rng.random_range(2..=max_locations);
    let n = rng.random_range(1..=max_scenarios);
    let capacity = rng.random_range(1..=max_capacity);
    let revenue = (0..r).map(|_| rng.random_range(10..=30) as f64).collect();
    let holding = (0..r).map(|_| rng.random_range(0..=8) as f64).collect();
    let transfer = (0..r)
        .map(|i| (0..r).map(|j| if i == j { 0.0 } else { rng.random_range(1..=20) as f64 }).collect())
        .collect();
    let ids: Vec<u32> = (1..=r as u32).collect();
    let inst = CsrpInstance::new(ids.clone(), revenue, holding, transfer, capacity).unwrap();
    let demands: Vec<Vec<u64>> = (0..n).map(|_| (0..r).map(|_| rng.random_range(0..=max_demand)).collect()).collect();
    let set = if rng.random_bool(0.5) {
        ScenarioSet::uniform(ids, demands).unwrap()
    } else {
        let weights: Vec<u64> = (0..n).map(|_| rng.random_range(1..=5)).collect();
        let total: u64 = weights.iter().sum();
        let probs = weights.iter().map(|&w| Probability::new(w, total)).collect();
        ScenarioSet::new(ids, demands, probs).unwrap()
    };
    (inst, set)
}

struct BendersRun {
    outcome: BendersOutcome<f64>,
    reference: f64,
    xi: f64,
}

/// Instances shared by the Benders agreement and bound-behaviour criteria.
fn benders_runs() -> (Vec<BendersRun>, f64) {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let runs = (0..60)
        .map(|k| {
            let (inst, set) = random_instance(&mut rng, 5, 20, 10, 8);
            let mut options = BendersOptions { variant: ModelVariant::FlowBalance, ..Default::default() };
            match k % 4 {
                1 => options.cut_mode = CutMode::Multi,
                2 => options.split = TemplateSplit::FixedService,
                3 => options.xi = [1e-7, 1e-5, 1e-4][k % 3],
                _ => {}
            }
            let outcome = solve_benders(&inst, &set, &options).unwrap();
            let reference = solve_extensive(&inst, &set, ModelVariant::FlowBalance, &ExtensiveOptions::default())
                .unwrap()
                .objective;
            BendersRun { outcome, reference, xi: options.xi }
        })
        .collect();
    (runs, started.elapsed().as_secs_f64())
}

fn criterion_1(runs: &[BendersRun], seconds: f64) -> Outcome {
    let mut worst = 0.0f64;
    for (k, run) in runs.iter().enumerate() {
        let diff = (run.outcome.objective - run.reference).abs();
        let allowed = 1e-6 * (1.0 + run.reference.abs());
        worst = worst.max(diff / (1.0 + run.reference.abs()));
        if diff > allowed {
            return Err(format!("instance {k}: benders {} vs extensive {}", run.outcome.objective, run.reference));
        }
    }
    if seconds >= 60.0 {
        return Err(format!("{} instances took {seconds:.1} s", runs.len()));
    }
    Ok(format!("{} instances, worst scaled difference {worst:.1e}, {seconds:.1} s", runs.len()))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7_001);
    let mut count = 0;
    for k in 0..24 {
        let variant = if k % 2 == 0 { ModelVariant::FlowBalance } else { ModelVariant::PaperLiteral };
        let (inst, set) = random_instance(&mut rng, 3, 6, 4, 5);
        let brute = oracles::extensive(&inst, &set, variant);
        let solved = solve_extensive(&inst, &set, variant, &ExtensiveOptions::default()).map_err(|e| e.to_string())?;
        if (solved.objective - brute).abs() > 1e-9 * (1.0 + brute.abs()) {
            return Err(format!("instance {k} ({variant:?}): extensive {} vs enumeration {brute}", solved.objective));
        }
        count += 1;
    }
    Ok(format!("{count} instances, both variants"))
}

fn random_lp(rng: &mut ChaCha8Rng, capped: bool) -> LpProblem<f64> {
    let n = rng.random_range(1..=8);
    let m = rng.random_range(1..=if capped { 7 } else { 8 });
    let coef = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.2) {
            0.0
        } else {
            (rng.random_range(-5.0..10.0) * 100.0f64).round() / 100.0
        }
    };
    let sense = if !capped || rng.random_bool(0.5) { ObjectiveSense::Maximize } else { ObjectiveSense::Minimize };
    let mut p = LpProblem::new(sense, n);
    p.objective = (0..n).map(|_| coef(rng)).collect();
    let anchor: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
    let scrambled = rng.random_bool(0.1);
    for _ in 0..m {
        let row: Vec<f64> = (0..n).map(|_| coef(rng)).collect();
        let at: f64 = row.iter().zip(&anchor).map(|(a, x)| a * x).sum();
        let roll = rng.random_range(0.0..1.0);
        let (sense, rhs) = if roll < 0.6 {
            (RowSense::Le, at + rng.random_range(0.0..5.0))
        } else if roll < 0.85 {
            (RowSense::Ge, at - rng.random_range(0.0..5.0))
        } else {
            (RowSense::Eq, at)
        };
        let rhs = if scrambled { rng.random_range(-10.0..10.0) } else { rhs };
        p.add_row(row, sense, rhs);
    }
    if capped {
        let total: f64 = anchor.iter().sum();
        p.add_row(vec![1.0; n], RowSense::Le, total + rng.random_range(1.0..10.0));
    }
    p
}

fn check_lp(p: &LpProblem<f64>) -> Result<Status, String> {
    let sol = solve_lp(p).map_err(|e| e.to_string())?;
    let oracle = oracles::vertex_enumeration(p);
    let max = p.sense == ObjectiveSense::Maximize;
    match (sol.status, oracle) {
        (Status::Optimal, Vertices::Best(v)) => {
            if (sol.objective - v).abs() > 1e-7 {
                return Err(format!("simplex {} vs vertices {v}", sol.objective));
            }
            let y = sol.duals.as_ref().ok_or("optimal LP without duals")?;
            let dual_value: f64 = y.iter().zip(&p.rhs).map(|(y, b)| y * b).sum();
            if (dual_value - sol.objective).abs() > 1e-6 {
                return Err(format!("duality gap {}", (dual_value - sol.objective).abs()));
            }
            for (i, &yi) in y.iter().enumerate() {
                let wrong_sign = match (p.row_senses[i], max) {
                    (RowSense::Le, true) | (RowSense::Ge, false) => yi < -1e-7,
                    (RowSense::Ge, true) | (RowSense::Le, false) => yi > 1e-7,
                    (RowSense::Eq, _) => false,
                };
                if wrong_sign {
                    return Err(format!("dual {i} = {yi} has the wrong sign"));
                }
            }
            for j in 0..p.num_vars() {
                let aty: f64 = (0..p.num_rows()).map(|i| p.rows[i][j] * y[i]).sum();
                let reduced = p.objective[j] - aty;
                if (max && reduced > 1e-7) || (!max && reduced < -1e-7) {
                    return Err(format!("column {j} has reduced cost {reduced}"));
                }
            }
        }
        (Status::Infeasible, Vertices::Infeasible) => {}
        (Status::Unbounded, Vertices::Best(_)) => {
            let ray = sol.ray.as_ref().ok_or("unbounded LP without a ray")?;
            let scale = 1.0 + ray.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let tol = 1e-9 * scale;
            if ray.iter().any(|&v| v < -tol) {
                return Err("ray leaves x >= 0".into());
            }
            for (i, row) in p.rows.iter().enumerate() {
                let a: f64 = row.iter().zip(ray).map(|(a, r)| a * r).sum();
                let t = tol * (1.0 + row.iter().map(|a| a.abs()).sum::<f64>());
                let ok = match p.row_senses[i] {
                    RowSense::Le => a <= t,
                    RowSense::Ge => a >= -t,
                    RowSense::Eq => a.abs() <= t,
                };
                if !ok {
                    return Err(format!("ray violates row {i} ({a})"));
                }
            }
            let gain = p.objective_value(ray);
            if (max && gain <= tol) || (!max && gain >= -tol) {
                return Err(format!("ray does not improve the objective ({gain})"));
            }
        }
        (status, oracle) => return Err(format!("simplex says {status:?}, vertex enumeration says {oracle:?}")),
    }
    Ok(sol.status)
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31_337);
    let mut tally: BTreeMap<String, usize> = BTreeMap::new();
    for k in 0..300 {
        let capped = k < 240;
        let p = random_lp(&mut rng, capped);
        let status = check_lp(&p).map_err(|e| format!("LP {k}: {e}\n{}", p.to_lp_string()))?;
        if capped && status == Status::Unbounded {
            return Err(format!("LP {k} is bounded but simplex says unbounded"));
        }
        *tally.entry(format!("{status:?}").to_lowercase()).or_default() += 1;
    }
    let summary: Vec<String> = tally.iter().map(|(s, c)| format!("{c} {s}")).collect();
    Ok(format!("240 bounded + 60 uncapped LPs: {}", summary.join(", ")))
}

fn criterion_4() -> Outcome {
    let checks = [
        (fit_poisson(&[2.0, 4.0, 6.0]).unwrap(), DensityModel::Poisson { rate: 4.0 }),
        (fit_gaussian(&[0.0, 2.0]).unwrap(), DensityModel::Gaussian { mean: 1.0, variance: 1.0 }),
        (fit_laplace(&[1.0, 3.0]).unwrap(), DensityModel::Laplace { location: 2.0, scale: 1.0 }),
    ];
    for (got, want) in &checks {
        if got != want {
            return Err(format!("got {got:?}, expected {want:?}"));
        }
    }
    if fit_poisson(&[2.0f32, 4.0, 6.0]).unwrap() != (DensityModel::Poisson { rate: 4.0f32 }) {
        return Err("single-precision Poisson fit differs".into());
    }
    Ok("lambda = 4, mu = 1, sigma^2 = 1, b = 1".into())
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let n = rng.random_range(2..=300);
        let centre = rng.random_range(0.0..60.0);
        let spread = rng.random_range(0.5..20.0);
        let samples: Vec<f64> = if k % 2 == 0 {
            (0..n).map(|_| (centre + spread * rng.random_range(-1.0..1.0f64)).round().max(0.0)).collect()
        } else {
            (0..n).map(|_| centre + spread * rng.random_range(-1.0..1.0f64)).collect()
        };
        let model = fit_kde(&samples, None).map_err(|e| format!("KDE {k}: {e}"))?;
        let DensityModel::Kde { bandwidth: h, .. } = model else { unreachable!() };
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - 15.0 * h;
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 15.0 * h;
        let pieces = (((hi - lo) / (0.25 * h)).ceil() as usize).max(1);
        let mass = oracles::integrate(|x| model.pdf(x), lo, hi, pieces, 1e-12);
        worst = worst.max((mass - 1.0).abs());
        if (mass - 1.0).abs() > 1e-6 {
            return Err(format!("KDE {k} (n = {n}, h = {h}) integrates to {mass}"));
        }
    }
    Ok(format!("20 KDEs, worst |mass - 1| = {worst:.1e}"))
}

const SEEDS: u64 = 10;

fn bimodal_setup(seed: u64) -> (CsrpInstance<f64>, DemandPanel, DemandPanel) {
    let spec = BimodalSpec { days: 500, high_weight: 0.5, ..Default::default() };
    let mut inst = CsrpInstance::<f64>::homogeneous(4, 100.0, 20.0, 80.0, 10_000).unwrap();
    inst.location_ids = spec.location_ids.clone();
    let panel = bimodal_panel(&spec, 1000 + seed).unwrap();
    let cutoff = panel.dates()[399];
    let (train, test) = split_by_date(&panel, cutoff).unwrap();
    (inst, train, test)
}

fn criterion_6() -> Outcome {
    let mut gains = Vec::new();
    for seed in 0..SEEDS {
        let (inst, train, _) = bimodal_setup(seed);
        let dist = DemandDistributionSet::fit(&train, Family::Kde).map_err(|e| e.to_string())?;
        let set = ScenarioSet::generate(&dist, 50, seed * 100).map_err(|e| e.to_string())?;
        let options = BendersOptions::default();
        let sp = solve_benders(&inst, &set, &options).map_err(|e| e.to_string())?;
        let (_, det_plan) =
            solve_deterministic(&inst, &train.mean_demand(), ModelVariant::FlowBalance, &MipOptions::default())
                .map_err(|e| e.to_string())?;
        let sp_profit = expected_profit(&inst, &sp.plan, &set, ModelVariant::FlowBalance).map_err(|e| e.to_string())?;
        let det_profit =
            expected_profit(&inst, &det_plan, &set, ModelVariant::FlowBalance).map_err(|e| e.to_string())?;
        // The SP plan is optimal on this set up to the Benders tolerance.
        if sp_profit + options.xi * (1.0 + sp_profit.abs()) < det_profit {
            return Err(format!("seed {seed}: SP {sp_profit:.4} < deterministic {det_profit:.4}"));
        }
        gains.push(100.0 * (sp_profit - det_profit) / det_profit.abs());
    }
    let mean = gains.iter().sum::<f64>() / gains.len() as f64;
    let min = gains.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!("{SEEDS} seeds, VSS mean {mean:.2}% (min {min:.2}%)"))
}

fn criterion_7() -> Outcome {
    let approaches = [Approach::Kde, Approach::Gaussian, Approach::Laplace, Approach::Poisson];
    let mut sums = [0.0; 4];
    let mut kde_beats_poisson = 0;
    for seed in 0..SEEDS {
        let (inst, train, test) = bimodal_setup(seed);
        let saa = SaaOptions { replications: 3, scenarios: 50, seed: seed * 100, ..Default::default() };
        let reports = compare_approaches(&inst, &train, &test, &approaches, &saa).map_err(|e| e.to_string())?;
        for (sum, report) in sums.iter_mut().zip(&reports) {
            *sum += report.mean_profit;
        }
        if reports[0].mean_profit > reports[3].mean_profit {
            kde_beats_poisson += 1;
        }
    }
    let avg = sums.map(|s| s / SEEDS as f64);
    let detail = format!(
        "KDE > Poisson in {kde_beats_poisson}/{SEEDS} seeds; means KDE {:.1}, Gaussian {:.1}, Laplace {:.1}, Poisson {:.1}",
        avg[0], avg[1], avg[2], avg[3]
    );
    if kde_beats_poisson >= 9 && avg[0] >= avg[1] && avg[0] >= avg[2] {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let rel = path.strip_prefix(root).unwrap().to_path_buf();
            if rel.starts_with("diagnostics") {
                continue;
            }
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn criterion_8() -> Outcome {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("synthetic");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for name in ["trips.csv", "coords.csv", "run.toml"] {
        fs::copy(fixture.join(name), dir.path().join(name)).map_err(|e| e.to_string())?;
    }
    let config = dir.path().join("run.toml");
    let run_dir = dir.path().join("runs").join("synthetic");
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        if run_dir.exists() {
            fs::remove_dir_all(&run_dir).map_err(|e| e.to_string())?;
        }
        let out = Command::new(env!("CARGO_BIN_EXE_csrp"))
            .args(["pipeline", "--config", config.to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("pipeline failed: {}", String::from_utf8_lossy(&out.stderr)));
        }
        snapshots.push(snapshot(&run_dir));
    }
    let (a, b) = (&snapshots[0], &snapshots[1]);
    if a.keys().ne(b.keys()) {
        return Err("the two runs wrote different file sets".into());
    }
    if let Some((path, _)) = a.iter().find(|(p, bytes)| b[*p] != **bytes) {
        return Err(format!("{} differs between runs", path.display()));
    }
    Ok(format!("{} artifacts byte-identical across two runs", a.len()))
}

fn criterion_9(runs: &[BendersRun]) -> Outcome {
    let mut max_iterations = 0;
    for (k, run) in runs.iter().enumerate() {
        let trace = &run.outcome.trace;
        for w in trace.windows(2) {
            if w[1].lower_bound < w[0].lower_bound {
                return Err(format!("instance {k}: lower bound fell at iteration {}", w[1].iteration));
            }
            if w[1].upper_bound > w[0].upper_bound {
                return Err(format!("instance {k}: upper bound rose at iteration {}", w[1].iteration));
            }
        }
        let state = &run.outcome.state;
        let gap = state.upper_bound - state.lower_bound;
        if run.outcome.status != BendersStatus::Converged || gap > run.xi * (1.0 + state.upper_bound.abs()) {
            return Err(format!("instance {k}: exit gap {gap:e} with xi {}", run.xi));
        }
        if state.iterations > 500 {
            return Err(format!("instance {k}: {} iterations", state.iterations));
        }
        max_iterations = max_iterations.max(state.iterations);
    }
    Ok(format!("{} instances, at most {max_iterations} iterations", runs.len()))
}

fn panic_message(panic: Box<dyn std::any::Any + Send>) -> String {
    let msg = panic
        .downcast_ref::<String>()
        .cloned()
        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_default();
    format!("panicked: {msg}")
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|panic| Err(panic_message(panic)))
}

fn main() -> ExitCode {
    let runs = catch_unwind(benders_runs).map_err(panic_message);
    let with_runs = |f: &dyn Fn(&[BendersRun], f64) -> Outcome| match &runs {
        Ok((runs, secs)) => guarded(|| f(runs, *secs)),
        Err(e) => Err(e.clone()),
    };
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "benders matches extensive form", with_runs(&criterion_1)),
        (2, "extensive form matches enumeration", guarded(criterion_2)),
        (3, "simplex matches vertex enumeration", guarded(criterion_3)),
        (4, "maximum-likelihood closed forms", guarded(criterion_4)),
        (5, "KDE integrates to one", guarded(criterion_5)),
        (6, "stochastic plan beats mean-demand plan", guarded(criterion_6)),
        (7, "distribution ranking", guarded(criterion_7)),
        (8, "pipeline determinism", guarded(criterion_8)),
        (9, "benders bounds and termination", with_runs(&|r, _| criterion_9(r))),
    ];
    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n} {name}: PASS ({detail})"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL ({detail})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
