//! Out-of-sample evaluation of first-stage plans and the experiment harness
//! built on it.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{DemandDistributionSet, Family};
use crate::error::{Error, Result};
use crate::ingest::DemandPanel;
use crate::lp::{solve_mip_with, MipOptions, Status};
use crate::model::{build_recourse, CsrpInstance, FirstStagePlan, ModelVariant};
use crate::scalar::Scalar;
use crate::scenario::ScenarioSet;
use crate::solve::{solve_deterministic, solve_saa, SaaOptions, SolveMethod};

/// A way of producing a first-stage plan from training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    Kde,
    Gaussian,
    Laplace,
    Poisson,
    /// Deterministic model on mean training demand.
    Deterministic,
}

impl Approach {
    pub const ALL: [Approach; 5] =
        [Approach::Kde, Approach::Gaussian, Approach::Laplace, Approach::Poisson, Approach::Deterministic];

    pub fn family(self) -> Option<Family> {
        match self {
            Approach::Kde => Some(Family::Kde),
            Approach::Gaussian => Some(Family::Gaussian),
            Approach::Laplace => Some(Family::Laplace),
            Approach::Poisson => Some(Family::Poisson),
            Approach::Deterministic => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self.family() {
            Some(f) => f.name(),
            None => "deterministic",
        }
    }
}

impl From<Family> for Approach {
    fn from(f: Family) -> Self {
        match f {
            Family::Kde => Approach::Kde,
            Family::Gaussian => Approach::Gaussian,
            Family::Laplace => Approach::Laplace,
            Family::Poisson => Approach::Poisson,
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Approach {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "deterministic" | "mean" | "deterministic-mean" => Ok(Approach::Deterministic),
            other => other.parse::<Family>().map(Approach::from),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: Option<u64>,
    pub scenarios: Option<usize>,
    pub replications: Option<usize>,
    pub variant: ModelVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub label: String,
    pub plan: FirstStagePlan,
    pub dates: Vec<NaiveDate>,
    pub profits: Vec<f64>,
    pub mean_profit: f64,
    /// Per-day move matrices, kept only on request.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub moves: Option<Vec<Vec<Vec<u64>>>>,
    pub metadata: RunMetadata,
}

/// Replays every panel day against `plan`: profit is the recourse optimum
/// minus the holding cost, which is charged every day.
pub fn evaluate_plan<T: Scalar>(
    instance: &CsrpInstance<T>,
    plan: &FirstStagePlan,
    test_panel: &DemandPanel,
    variant: ModelVariant,
) -> Result<EvaluationReport> {
    evaluate_plan_with(instance, plan, test_panel, variant, false)
}

pub fn evaluate_plan_with<T: Scalar>(
    instance: &CsrpInstance<T>,
    plan: &FirstStagePlan,
    test_panel: &DemandPanel,
    variant: ModelVariant,
    retain_moves: bool,
) -> Result<EvaluationReport> {
    if test_panel.location_ids() != instance.location_ids.as_slice() {
        return Err(Error::InvalidArgument(format!(
            "panel locations {:?} do not match instance locations {:?}",
            test_panel.location_ids(),
            instance.location_ids
        )));
    }
    plan.check(instance)?;
    let days = test_panel
        .counts()
        .par_iter()
        .map(|demand| {
            let model = build_recourse(instance, plan, demand, variant)?;
            let sol = solve_mip_with(&model.problem, &MipOptions::default())?;
            if sol.status != Status::Optimal {
                return Err(Error::State(format!("recourse solve ended {:?}", sol.status)));
            }
            let profit = (sol.objective - model.holding_cost).as_f64();
            Ok((profit, retain_moves.then(|| model.decode(&sol.x).0)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (profits, moves): (Vec<f64>, Vec<Option<Vec<Vec<u64>>>>) = days.into_iter().unzip();
    let mean_profit = if profits.is_empty() { 0.0 } else { profits.iter().sum::<f64>() / profits.len() as f64 };
    Ok(EvaluationReport {
        label: "plan".into(),
        plan: plan.clone(),
        dates: test_panel.dates().to_vec(),
        profits,
        mean_profit,
        moves: if retain_moves { moves.into_iter().collect() } else { None },
        metadata: RunMetadata { variant, ..Default::default() },
    })
}

/// Expected profit of `plan` over a weighted scenario set.
pub fn expected_profit<T: Scalar>(
    instance: &CsrpInstance<T>,
    plan: &FirstStagePlan,
    scenarios: &ScenarioSet,
    variant: ModelVariant,
) -> Result<f64> {
    let values = scenarios
        .demands()
        .par_iter()
        .map(|demand| {
            let model = build_recourse(instance, plan, demand, variant)?;
            let sol = solve_mip_with(&model.problem, &MipOptions::default())?;
            if sol.status != Status::Optimal {
                return Err(Error::State(format!("recourse solve ended {:?}", sol.status)));
            }
            Ok(sol.objective.as_f64())
        })
        .collect::<Result<Vec<_>>>()?;
    let recourse: f64 = values.iter().enumerate().map(|(s, v)| scenarios.probability::<f64>(s) * v).sum();
    Ok(recourse - instance.holding_cost(plan).as_f64())
}

#[derive(Debug, Clone, Copy)]
pub struct CompareOptions {
    pub saa: SaaOptions,
}

/// The plan an approach derives from training data.
pub fn plan_for<T: Scalar>(
    instance: &CsrpInstance<T>,
    train_panel: &DemandPanel,
    approach: Approach,
    saa: &SaaOptions,
) -> Result<FirstStagePlan> {
    if train_panel.is_empty() {
        return Err(Error::EmptyInput("training panel has no days".into()));
    }
    match approach.family() {
        None => solve_deterministic(instance, &train_panel.mean_demand(), saa.variant, &saa.extensive.mip)
            .map(|(_, plan)| plan),
        Some(family) => {
            let dist = DemandDistributionSet::<T>::fit(train_panel, family)?;
            let result = solve_saa(instance, &dist, saa)?;
            result.mean_plan(instance.capacity).ok_or_else(|| {
                Error::State(format!("every SAA replication failed for {family}: {:?}", result.replications[0].error))
            })
        }
    }
}

/// Fits each approach on `train_panel`, derives its plan and replays it on
/// `test_panel`. Reports come back in the order of `approaches`.
pub fn compare_approaches<T: Scalar>(
    instance: &CsrpInstance<T>,
    train_panel: &DemandPanel,
    test_panel: &DemandPanel,
    approaches: &[Approach],
    saa: &SaaOptions,
) -> Result<Vec<EvaluationReport>> {
    approaches
        .iter()
        .map(|&approach| {
            let plan = plan_for(instance, train_panel, approach, saa)?;
            let mut report = evaluate_plan(instance, &plan, test_panel, saa.variant)?;
            report.label = approach.name().into();
            report.metadata = match approach {
                Approach::Deterministic => RunMetadata { variant: saa.variant, ..Default::default() },
                _ => RunMetadata {
                    seed: Some(saa.seed),
                    scenarios: Some(saa.scenarios),
                    replications: Some(saa.replications),
                    variant: saa.variant,
                },
            };
            Ok(report)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scenarios: usize,
    pub mean_objective: Option<f64>,
    pub mean_seconds: f64,
    pub failures: usize,
}

/// Runs SAA once per scenario count.
pub fn scenario_sweep<T: Scalar>(
    instance: &CsrpInstance<T>,
    dist: &DemandDistributionSet<T>,
    counts: &[usize],
    replications: usize,
    seed: u64,
    method: SolveMethod,
) -> Result<Vec<SweepRow>> {
    scenario_sweep_with(instance, dist, counts, &SaaOptions { replications, seed, method, ..Default::default() })
}

/// As [`scenario_sweep`], with every other SAA setting taken from `base`.
pub fn scenario_sweep_with<T: Scalar>(
    instance: &CsrpInstance<T>,
    dist: &DemandDistributionSet<T>,
    counts: &[usize],
    base: &SaaOptions,
) -> Result<Vec<SweepRow>> {
    if counts.is_empty() {
        return Err(Error::InvalidArgument("scenario counts must be nonempty".into()));
    }
    counts
        .iter()
        .map(|&n| {
            let started = Instant::now();
            let result = solve_saa(instance, dist, &SaaOptions { scenarios: n, ..*base })?;
            let elapsed = started.elapsed().as_secs_f64();
            Ok(SweepRow {
                scenarios: n,
                mean_objective: result.mean_objective(),
                mean_seconds: elapsed / base.replications as f64,
                failures: result.failures(),
            })
        })
        .collect()
}

/// Wide per-day table: `date,<label>...`.
pub fn write_daily_csv<W: Write>(reports: &[EvaluationReport], sink: W) -> Result<()> {
    let Some(first) = reports.first() else {
        return Err(Error::EmptyInput("no reports".into()));
    };
    if reports.iter().any(|r| r.dates != first.dates) {
        return Err(Error::Dimension("reports cover different dates".into()));
    }
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["date".to_string()];
    header.extend(reports.iter().map(|r| r.label.clone()));
    w.write_record(&header)?;
    for (d, date) in first.dates.iter().enumerate() {
        let mut row = vec![date.to_string()];
        row.extend(reports.iter().map(|r| r.profits[d].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `approach,mean_daily_profit,x_<id>...`, one row per report.
pub fn write_summary_csv<W: Write>(reports: &[EvaluationReport], location_ids: &[u32], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["approach".to_string(), "mean_daily_profit".to_string()];
    header.extend(location_ids.iter().map(|id| format!("x_{id}")));
    w.write_record(&header)?;
    for r in reports {
        let mut row = vec![r.label.clone(), r.mean_profit.to_string()];
        row.extend(r.plan.x.iter().map(u64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["scenarios", "mean_objective", "mean_seconds", "failures"])?;
    for row in rows {
        w.write_record([
            row.scenarios.to_string(),
            row.mean_objective.map(|v| v.to_string()).unwrap_or_default(),
            row.mean_seconds.to_string(),
            row.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// One SVG line chart per calendar month of the reports' dates, keyed by
/// `YYYY-MM`. All reports must share dates.
pub fn monthly_profit_charts(reports: &[EvaluationReport]) -> Result<BTreeMap<String, String>> {
    let Some(first) = reports.first() else {
        return Err(Error::EmptyInput("no reports".into()));
    };
    if reports.iter().any(|r| r.dates != first.dates) {
        return Err(Error::Dimension("reports cover different dates".into()));
    }
    let mut months: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (d, date) in first.dates.iter().enumerate() {
        months.entry(format!("{:04}-{:02}", date.year(), date.month())).or_default().push(d);
    }
    Ok(months
        .into_iter()
        .map(|(month, days)| {
            let svg = line_chart(&month, reports, &days, &first.dates);
            (month, svg)
        })
        .collect())
}

fn line_chart(title: &str, reports: &[EvaluationReport], days: &[usize], dates: &[NaiveDate]) -> String {
    let (width, height) = (720.0, 360.0);
    let (left, right, top, bottom) = (80.0, 140.0, 40.0, 50.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let values = reports.iter().flat_map(|r| days.iter().map(move |&d| r.profits[d]));
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let sx = |k: usize| left + if days.len() > 1 { plot_w * k as f64 / (days.len() - 1) as f64 } else { plot_w / 2.0 };
    let sy = |v: f64| top + plot_h * (hi - v) / (hi - lo);

    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    s += &format!("<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n");
    s += &format!("<text x=\"{}\" y=\"22\" font-size=\"14\" text-anchor=\"middle\">Daily profit {title}</text>\n", left + plot_w / 2.0);
    s += &format!(
        "<polyline points=\"{left},{top} {left},{b} {r},{b}\" fill=\"none\" stroke=\"black\"/>\n",
        b = top + plot_h,
        r = left + plot_w
    );
    for t in 0..=4 {
        let v = lo + (hi - lo) * t as f64 / 4.0;
        s += &format!("<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{v:.0}</text>\n", left - 6.0, sy(v) + 4.0);
    }
    for (k, &d) in days.iter().enumerate() {
        if k % 5 == 0 || k + 1 == days.len() {
            s += &format!(
                "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                sx(k),
                top + plot_h + 16.0,
                dates[d].day()
            );
        }
    }
    for (n, r) in reports.iter().enumerate() {
        let color = COLORS[n % COLORS.len()];
        let points: Vec<String> = days.iter().enumerate().map(|(k, &d)| format!("{:.1},{:.1}", sx(k), sy(r.profits[d]))).collect();
        s += &format!("<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n", points.join(" "));
        let ly = top + 14.0 * n as f64 + 6.0;
        s += &format!(
            "<line x1=\"{x0}\" y1=\"{ly}\" x2=\"{x1}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{tx}\" y=\"{ty}\">{label}</text>\n",
            x0 = left + plot_w + 12.0,
            x1 = left + plot_w + 32.0,
            tx = left + plot_w + 38.0,
            ty = ly + 4.0,
            label = r.label
        );
    }
    s += "</svg>\n";
    s
}
