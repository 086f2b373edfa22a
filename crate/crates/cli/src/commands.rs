//! Pipeline stages. Each stage reads its predecessors' artifacts from the run
//! directory and writes its own. Files under `diagnostics/` hold timings and
//! solver traces and are the only outputs that differ between identical runs.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use chrono::NaiveDate;
use csrp::density::{DemandDistributionSet, Family};
use csrp::evaluate::{
    evaluate_plan_with, monthly_profit_charts, write_daily_csv, write_summary_csv, EvaluationReport, RunMetadata,
};
use csrp::ingest::{aggregate_daily, parse_trips, split_by_date, top_k_locations, DemandPanel, ParsedTrips};
use csrp::model::{CsrpInstance, FirstStagePlan, TemplateSplit};
use csrp::scenario::ScenarioSet;
use csrp::solve::{solve_deterministic, solve_saa, BendersOptions, ExtensiveOptions, SaaOptions, SaaResult};
use serde::Serialize;

use crate::config::LoadedConfig;

pub const PANEL: &str = "panel.csv";
pub const TRAIN: &str = "train.csv";
pub const TEST: &str = "test.csv";
pub const INGEST_SUMMARY: &str = "ingest.json";
pub const DISTRIBUTIONS: &str = "distributions";
pub const INSTANCE: &str = "instance.json";
pub const PLANS: &str = "plans.csv";
pub const SWEEP: &str = "scenario_sweep.csv";
pub const REPLICATIONS: &str = "replications.csv";
pub const SOLVE_SUMMARY: &str = "solve.json";
pub const REPORT: &str = "report";
pub const DIAGNOSTICS: &str = "diagnostics";

/// An artifact that must exist before a stage can run.
fn require(path: PathBuf, producer: &str) -> Result<PathBuf> {
    if path.is_file() {
        Ok(path)
    } else {
        bail!("missing {}; run the `{producer}` stage first", path.display())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_panel(path: &Path) -> Result<DemandPanel> {
    DemandPanel::read_csv(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn distribution_path(run: &Path, family: Family) -> PathBuf {
    run.join(DISTRIBUTIONS).join(format!("{family}.json"))
}

#[derive(Serialize)]
struct IngestSummary {
    trip_files: Vec<String>,
    rows: usize,
    records: usize,
    rejected: usize,
    zero_distance: usize,
    negative_fare: usize,
    first_date: NaiveDate,
    last_date: NaiveDate,
    split_date: NaiveDate,
    train_days: usize,
    test_days: usize,
    location_ids: Vec<u32>,
}

pub fn cmd_ingest(cfg: &LoadedConfig) -> Result<()> {
    let c = &cfg.config;
    let run = cfg.run_dir();
    let mut parsed = ParsedTrips::default();
    for trip in &c.paths.trips {
        let path = cfg.resolve(trip);
        let part = parse_trips(open(&path)?, &c.schema).with_context(|| format!("parsing {}", path.display()))?;
        log::info!("{}: {} records, {} rejected", path.display(), part.records.len(), part.rejected);
        parsed.extend(part);
    }
    let panel = aggregate_daily(&parsed.records)?;
    let k = c.pipeline.top_k.min(panel.num_locations());
    if k < c.pipeline.top_k {
        log::warn!("only {} locations in the data; top_k = {} reduced", panel.num_locations(), c.pipeline.top_k);
    }
    let panel = top_k_locations(&panel, k)?;
    let split = match c.pipeline.split_date {
        Some(d) => d,
        None => {
            let n = panel.num_days();
            if n < 2 {
                bail!("need at least two days of data to split into train and test");
            }
            panel.dates()[((n * 4) / 5).clamp(1, n - 1) - 1]
        }
    };
    let (train, test) = split_by_date(&panel, split)?;

    panel.write_csv(create(&run.join(PANEL))?)?;
    train.write_csv(create(&run.join(TRAIN))?)?;
    test.write_csv(create(&run.join(TEST))?)?;
    write_json(
        &run.join(INGEST_SUMMARY),
        &IngestSummary {
            trip_files: c.paths.trips.iter().map(|p| p.to_string_lossy().into_owned()).collect(),
            rows: parsed.rows,
            records: parsed.records.len(),
            rejected: parsed.rejected,
            zero_distance: parsed.zero_distance,
            negative_fare: parsed.negative_fare,
            first_date: panel.dates()[0],
            last_date: *panel.dates().last().expect("nonempty panel"),
            split_date: split,
            train_days: train.num_days(),
            test_days: test.num_days(),
            location_ids: panel.location_ids().to_vec(),
        },
    )?;
    println!(
        "ingest: {} records ({} rejected) -> {} days x {} locations, {} train / {} test",
        parsed.records.len(),
        parsed.rejected,
        panel.num_days(),
        panel.num_locations(),
        train.num_days(),
        test.num_days()
    );
    Ok(())
}

pub fn cmd_fit(cfg: &LoadedConfig) -> Result<()> {
    let run = cfg.run_dir();
    let train = read_panel(&require(run.join(TRAIN), "ingest")?)?;
    for &family in &cfg.config.pipeline.families {
        let dist = DemandDistributionSet::<f64>::fit(&train, family).with_context(|| format!("fitting {family}"))?;
        let path = distribution_path(&run, family);
        let mut w = create(&path)?;
        dist.write_json(&mut w)?;
        w.flush()?;
        println!("fit: {family} -> {}", path.display());
    }
    Ok(())
}

fn saa_options(cfg: &LoadedConfig, scenarios: usize) -> SaaOptions {
    let p = &cfg.config.pipeline;
    SaaOptions {
        replications: p.replications,
        scenarios,
        seed: cfg.config.seed,
        method: p.method,
        variant: p.variant,
        benders: BendersOptions {
            xi: p.xi,
            cut_mode: p.cut_mode,
            split: if p.paper_split { TemplateSplit::FixedService } else { TemplateSplit::LShaped },
            variant: p.variant,
            ..Default::default()
        },
        extensive: ExtensiveOptions { size_limit: p.extensive_size_limit, ..Default::default() },
    }
}

#[derive(Serialize)]
struct ApproachSummary {
    approach: String,
    scenarios: Option<usize>,
    replications: Option<usize>,
    mean_objective: Option<f64>,
    failures: usize,
    plan: Vec<u64>,
}

#[derive(Serialize)]
struct SolveSummary {
    seed: u64,
    variant: String,
    method: String,
    xi: f64,
    plan_scenarios: usize,
    location_ids: Vec<u32>,
    approaches: Vec<ApproachSummary>,
}

pub fn cmd_solve(cfg: &LoadedConfig) -> Result<()> {
    let c = &cfg.config;
    let p = &c.pipeline;
    let run = cfg.run_dir();
    let dists = p
        .families
        .iter()
        .map(|&family| {
            let path = require(distribution_path(&run, family), "fit")?;
            let dist = DemandDistributionSet::<f64>::read_json(open(&path)?)
                .with_context(|| format!("reading {}", path.display()))?;
            Ok((family, dist))
        })
        .collect::<Result<Vec<_>>>()?;
    let location_ids = match dists.first() {
        Some((_, d)) => d.location_ids().to_vec(),
        None => read_panel(&require(run.join(TRAIN), "ingest")?)?.location_ids().to_vec(),
    };
    if let Some((family, _)) = dists.iter().find(|(_, d)| d.location_ids() != location_ids.as_slice()) {
        bail!("{family} distributions cover different locations; re-run the `fit` stage");
    }
    let instance = cfg.instance_spec().build(&location_ids, c.seed, &cfg.base_dir)?;
    write_json(&run.join(INSTANCE), &instance)?;

    let plan_n = p.plan_scenarios();
    let mut counts = p.scenarios.clone();
    if !counts.contains(&plan_n) {
        counts.push(plan_n);
    }
    let mut sweep = csv::Writer::from_writer(create(&run.join(SWEEP))?);
    sweep.write_record(["approach", "scenarios", "mean_objective", "failures"])?;
    let mut reps = csv::Writer::from_writer(create(&run.join(REPLICATIONS))?);
    let mut header = vec!["approach".to_string(), "scenarios".into(), "replication".into(), "seed".into(), "objective".into()];
    header.extend(location_ids.iter().map(|id| format!("x_{id}")));
    header.push("error".into());
    reps.write_record(&header)?;
    let mut timings = csv::Writer::from_writer(create(&run.join(DIAGNOSTICS).join("solve_timings.csv"))?);
    timings.write_record(["approach", "scenarios", "replication", "seconds"])?;
    let mut trace = create(&run.join(DIAGNOSTICS).join("benders_trace.log"))?;

    let mut plans: Vec<(String, Option<usize>, FirstStagePlan)> = Vec::new();
    let mut summaries = Vec::new();
    for (family, dist) in &dists {
        for &n in &counts {
            let started = Instant::now();
            let result = solve_saa(&instance, dist, &saa_options(cfg, n)).with_context(|| format!("{family}, N = {n}"))?;
            log::info!("{family} N={n}: {:.3}s", started.elapsed().as_secs_f64());
            record_replications(&mut reps, &mut timings, &mut trace, family.name(), n, &result, location_ids.len())?;
            if p.scenarios.contains(&n) {
                sweep.write_record([
                    family.name().to_string(),
                    n.to_string(),
                    result.mean_objective().map(|v| v.to_string()).unwrap_or_default(),
                    result.failures().to_string(),
                ])?;
            }
            if n == plan_n {
                let plan = result
                    .mean_plan(instance.capacity)
                    .ok_or_else(|| anyhow!("every {family} replication failed at N = {n}"))?;
                summaries.push(ApproachSummary {
                    approach: family.name().into(),
                    scenarios: Some(n),
                    replications: Some(p.replications),
                    mean_objective: result.mean_objective(),
                    failures: result.failures(),
                    plan: plan.x.clone(),
                });
                plans.push((family.name().into(), Some(n), plan));
            }
        }
    }
    if p.deterministic_baseline {
        let train = read_panel(&require(run.join(TRAIN), "ingest")?)?;
        let mip = ExtensiveOptions::default().mip;
        let (objective, plan) = solve_deterministic(&instance, &train.mean_demand(), p.variant, &mip)?;
        summaries.push(ApproachSummary {
            approach: "deterministic".into(),
            scenarios: None,
            replications: None,
            mean_objective: Some(objective),
            failures: 0,
            plan: plan.x.clone(),
        });
        plans.push(("deterministic".into(), None, plan));
    }
    sweep.flush()?;
    reps.flush()?;
    timings.flush()?;
    trace.flush()?;

    let mut w = csv::Writer::from_writer(create(&run.join(PLANS))?);
    let mut header = vec!["approach".to_string(), "scenarios".into()];
    header.extend(location_ids.iter().map(|id| format!("x_{id}")));
    w.write_record(&header)?;
    for (label, n, plan) in &plans {
        let mut row = vec![label.clone(), n.map(|n| n.to_string()).unwrap_or_default()];
        row.extend(plan.x.iter().map(u64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    write_json(
        &run.join(SOLVE_SUMMARY),
        &SolveSummary {
            seed: c.seed,
            variant: p.variant.to_string(),
            method: p.method.to_string(),
            xi: p.xi,
            plan_scenarios: plan_n,
            location_ids,
            approaches: summaries,
        },
    )?;
    for (label, _, plan) in &plans {
        println!("solve: {label} plan {:?} (total {})", plan.x, plan.total());
    }
    Ok(())
}

fn record_replications<W: Write, V: Write, L: Write>(
    reps: &mut csv::Writer<W>,
    timings: &mut csv::Writer<V>,
    trace: &mut L,
    label: &str,
    n: usize,
    result: &SaaResult,
    locations: usize,
) -> Result<()> {
    for r in &result.replications {
        let mut row = vec![
            label.to_string(),
            n.to_string(),
            r.index.to_string(),
            r.seed.to_string(),
            r.objective.map(|v| v.to_string()).unwrap_or_default(),
        ];
        match &r.plan {
            Some(plan) => row.extend(plan.x.iter().map(u64::to_string)),
            None => row.extend(std::iter::repeat_n(String::new(), locations)),
        }
        row.push(r.error.clone().unwrap_or_default());
        reps.write_record(&row)?;
        timings.write_record([label.to_string(), n.to_string(), r.index.to_string(), r.seconds.to_string()])?;
        for entry in &r.trace {
            writeln!(trace, "approach={label} scenarios={n} replication={} {}", r.index, entry.log_line())?;
        }
    }
    Ok(())
}

/// Rows of `plans.csv`: label, scenario count, plan.
fn read_plans(path: &Path, location_ids: &[u32]) -> Result<Vec<(String, Option<usize>, FirstStagePlan)>> {
    let mut r = csv::Reader::from_reader(open(path)?);
    let header = r.headers()?.clone();
    let expected: Vec<String> = location_ids.iter().map(|id| format!("x_{id}")).collect();
    if header.len() != 2 + expected.len() || header.iter().skip(2).ne(expected.iter().map(String::as_str)) {
        bail!("{} does not match the instance locations; re-run the `solve` stage", path.display());
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            let n = match &rec[1] {
                "" => None,
                s => Some(s.parse().with_context(|| format!("bad scenario count `{s}` in {}", path.display()))?),
            };
            let x = rec
                .iter()
                .skip(2)
                .map(|v| v.parse::<u64>().with_context(|| format!("bad plan entry `{v}` in {}", path.display())))
                .collect::<Result<Vec<_>>>()?;
            Ok((rec[0].to_string(), n, FirstStagePlan::new(x)))
        })
        .collect()
}

pub fn cmd_evaluate(cfg: &LoadedConfig) -> Result<()> {
    let c = &cfg.config;
    let p = &c.pipeline;
    let run = cfg.run_dir();
    let test = read_panel(&require(run.join(TEST), "ingest")?)?;
    let instance_path = require(run.join(INSTANCE), "solve")?;
    let instance: CsrpInstance<f64> =
        serde_json::from_reader(open(&instance_path)?).with_context(|| format!("reading {}", instance_path.display()))?;
    let plans = read_plans(&require(run.join(PLANS), "solve")?, &instance.location_ids)?;
    if plans.is_empty() {
        bail!("{} lists no plans; re-run the `solve` stage", run.join(PLANS).display());
    }

    let reports = plans
        .iter()
        .map(|(label, n, plan)| {
            let mut report = evaluate_plan_with(&instance, plan, &test, p.variant, p.retain_moves)
                .with_context(|| format!("evaluating the {label} plan"))?;
            report.label = label.clone();
            report.metadata = RunMetadata {
                seed: n.map(|_| c.seed),
                scenarios: *n,
                replications: n.map(|_| p.replications),
                variant: p.variant,
            };
            Ok(report)
        })
        .collect::<Result<Vec<EvaluationReport>>>()?;

    let dir = run.join(REPORT);
    let mut w = create(&dir.join("daily_profit.csv"))?;
    write_daily_csv(&reports, &mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("summary.csv"))?;
    write_summary_csv(&reports, &instance.location_ids, &mut w)?;
    w.flush()?;
    write_json(&dir.join("summary.json"), &reports)?;
    if p.charts {
        for (month, svg) in monthly_profit_charts(&reports)? {
            fs::create_dir_all(dir.join("charts"))?;
            fs::write(dir.join("charts").join(format!("profit_{month}.svg")), svg)?;
        }
    }
    let mut table = String::new();
    for r in &reports {
        writeln!(table, "evaluate: {:<13} mean daily profit {:.2}", r.label, r.mean_profit)?;
    }
    print!("{table}");
    Ok(())
}

pub fn cmd_pipeline(cfg: &LoadedConfig) -> Result<()> {
    run_stage("ingest", || cmd_ingest(cfg))?;
    run_stage("fit", || cmd_fit(cfg))?;
    run_stage("solve", || cmd_solve(cfg))?;
    run_stage("evaluate", || cmd_evaluate(cfg))
}

/// Runs a stage, tagging any failure with the stage name.
pub fn run_stage(name: &str, f: impl FnOnce() -> Result<()>) -> Result<()> {
    f().with_context(|| format!("stage `{name}` failed"))
}

/// Writes every scenario set the SAA loop would draw for `family` at `n`.
pub fn write_scenario_sets(cfg: &LoadedConfig, family: Family, n: usize) -> Result<Vec<PathBuf>> {
    let run = cfg.run_dir();
    let dist = DemandDistributionSet::<f64>::read_json(open(&require(distribution_path(&run, family), "fit")?)?)?;
    (0..cfg.config.pipeline.replications)
        .map(|m| {
            let seed = cfg.config.seed.wrapping_add(m as u64);
            let set = ScenarioSet::generate(&dist, n, seed)?;
            let path = run.join("scenarios").join(format!("{family}_n{n}_r{m}.csv"));
            let mut w = create(&path)?;
            set.write_csv(&mut w)?;
            w.flush()?;
            Ok(path)
        })
        .collect()
}
