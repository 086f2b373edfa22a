//! Instance parameters as they appear in a run configuration.
//!
//! ```toml
//! revenue = 100.0                      # or one value per location
//! holding = "gaussian(20, 9)"          # mean, variance; or an explicit list
//! transfer = "distance(coords.csv, min=10, max=100)"   # or an explicit matrix
//! capacity = 16000
//! ```

use std::collections::HashMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CsrpInstance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RevenueSpec {
    Scalar(f64),
    PerLocation(Vec<f64>),
}

impl Default for RevenueSpec {
    fn default() -> Self {
        RevenueSpec::Scalar(100.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ListOrText<f64>", into = "ListOrText<f64>")]
pub enum HoldingSpec {
    Explicit(Vec<f64>),
    /// Independent normal draws per location, truncated at zero.
    Gaussian { mean: f64, variance: f64 },
}

impl Default for HoldingSpec {
    fn default() -> Self {
        HoldingSpec::Gaussian { mean: 20.0, variance: 9.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ListOrText<Vec<f64>>", into = "ListOrText<Vec<f64>>")]
pub enum TransferSpec {
    Explicit(Vec<Vec<f64>>),
    /// Pairwise Euclidean distances between coordinates, mapped affinely onto
    /// `[min, max]`.
    Distance { coords: String, min: f64, max: f64 },
    /// The same cost on every arc.
    Uniform(f64),
}

impl Default for TransferSpec {
    fn default() -> Self {
        TransferSpec::Distance { coords: "coords.csv".into(), min: 10.0, max: 100.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ListOrText<T> {
    List(Vec<T>),
    Text(String),
}

/// Splits `name(a, b, k=v)` into the name and its arguments.
fn call_syntax(text: &str) -> Option<(&str, Vec<&str>)> {
    let text = text.trim();
    let open = text.find('(')?;
    let inner = text[open + 1..].strip_suffix(')')?;
    Some((text[..open].trim(), inner.split(',').map(str::trim).collect()))
}

fn number(s: &str) -> std::result::Result<f64, String> {
    s.parse().map_err(|_| format!("`{s}` is not a number"))
}

impl TryFrom<ListOrText<f64>> for HoldingSpec {
    type Error = String;
    fn try_from(v: ListOrText<f64>) -> std::result::Result<Self, String> {
        match v {
            ListOrText::List(list) => Ok(HoldingSpec::Explicit(list)),
            ListOrText::Text(text) => match call_syntax(&text) {
                Some(("gaussian", args)) if args.len() == 2 => Ok(HoldingSpec::Gaussian {
                    mean: number(args[0])?,
                    variance: number(args[1])?,
                }),
                _ => Err(format!("holding cost `{text}`: expected a list or `gaussian(mean, variance)`")),
            },
        }
    }
}

impl From<HoldingSpec> for ListOrText<f64> {
    fn from(h: HoldingSpec) -> Self {
        match h {
            HoldingSpec::Explicit(v) => ListOrText::List(v),
            HoldingSpec::Gaussian { mean, variance } => ListOrText::Text(format!("gaussian({mean}, {variance})")),
        }
    }
}

impl TryFrom<ListOrText<Vec<f64>>> for TransferSpec {
    type Error = String;
    fn try_from(v: ListOrText<Vec<f64>>) -> std::result::Result<Self, String> {
        match v {
            ListOrText::List(m) => Ok(TransferSpec::Explicit(m)),
            ListOrText::Text(text) => {
                let bad = || {
                    format!("transfer cost `{text}`: expected a matrix, `uniform(cost)` or `distance(file, min=.., max=..)`")
                };
                let args = match call_syntax(&text) {
                    Some(("distance", args)) => args,
                    Some(("uniform", args)) if args.len() == 1 => return Ok(TransferSpec::Uniform(number(args[0])?)),
                    _ => return Err(bad()),
                };
                let (mut min, mut max) = (10.0, 100.0);
                let coords = args.first().filter(|a| !a.contains('=')).ok_or_else(bad)?.to_string();
                for arg in &args[1..] {
                    match arg.split_once('=').map(|(k, v)| (k.trim(), v.trim())) {
                        Some(("min", v)) => min = number(v)?,
                        Some(("max", v)) => max = number(v)?,
                        _ => return Err(bad()),
                    }
                }
                Ok(TransferSpec::Distance { coords, min, max })
            }
        }
    }
}

impl From<TransferSpec> for ListOrText<Vec<f64>> {
    fn from(t: TransferSpec) -> Self {
        match t {
            TransferSpec::Explicit(m) => ListOrText::List(m),
            TransferSpec::Distance { coords, min, max } => {
                ListOrText::Text(format!("distance({coords}, min={min}, max={max})"))
            }
            TransferSpec::Uniform(c) => ListOrText::Text(format!("uniform({c})")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InstanceSpec {
    pub revenue: RevenueSpec,
    pub holding: HoldingSpec,
    pub transfer: TransferSpec,
    pub capacity: u64,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            revenue: RevenueSpec::default(),
            holding: HoldingSpec::default(),
            transfer: TransferSpec::default(),
            capacity: 16_000,
        }
    }
}

impl InstanceSpec {
    /// Materializes the instance for the given locations. Relative coordinate
    /// paths resolve against `base_dir`; `seed` drives random holding costs.
    pub fn build(&self, location_ids: &[u32], seed: u64, base_dir: &Path) -> Result<CsrpInstance<f64>> {
        let r = location_ids.len();
        let revenue = match &self.revenue {
            RevenueSpec::Scalar(v) => vec![*v; r],
            RevenueSpec::PerLocation(v) => v.clone(),
        };
        let holding = match &self.holding {
            HoldingSpec::Explicit(v) => v.clone(),
            HoldingSpec::Gaussian { mean, variance } => {
                let normal = Normal::new(*mean, variance.max(0.0).sqrt())
                    .map_err(|e| Error::InvalidArgument(format!("holding cost distribution: {e}")))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..r).map(|_| normal.sample(&mut rng).max(0.0)).collect()
            }
        };
        let transfer = match &self.transfer {
            TransferSpec::Explicit(m) => m.clone(),
            TransferSpec::Uniform(c) => {
                (0..r).map(|i| (0..r).map(|j| if i == j { 0.0 } else { *c }).collect()).collect()
            }
            TransferSpec::Distance { coords, min, max } => {
                let path = base_dir.join(coords);
                let points = read_coords(&path)?;
                distance_costs(location_ids, &points, *min, *max)?
            }
        };
        CsrpInstance::new(location_ids.to_vec(), revenue, holding, transfer, self.capacity)
    }
}

/// `location_id,x,y` rows.
pub fn read_coords(path: &Path) -> Result<HashMap<u32, (f64, f64)>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Error::InvalidArgument(format!("coordinates file {}: {e}", path.display())))?;
    let mut out = HashMap::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad coordinate row {:?}", rec)))
        };
        out.insert(parse(0)? as u32, (parse(1)?, parse(2)?));
    }
    Ok(out)
}

fn distance_costs(ids: &[u32], points: &HashMap<u32, (f64, f64)>, min: f64, max: f64) -> Result<Vec<Vec<f64>>> {
    let pts = ids
        .iter()
        .map(|id| points.get(id).copied().ok_or_else(|| Error::InvalidArgument(format!("no coordinates for location {id}"))))
        .collect::<Result<Vec<_>>>()?;
    let r = ids.len();
    let dist = |i: usize, j: usize| ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
    let off: Vec<f64> = (0..r).flat_map(|i| (0..r).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| dist(i, j)).collect();
    let lo = off.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = off.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((0..r)
        .map(|i| {
            (0..r)
                .map(|j| {
                    if i == j {
                        0.0
                    } else if hi > lo {
                        min + (dist(i, j) - lo) / (hi - lo) * (max - min)
                    } else {
                        min
                    }
                })
                .collect()
        })
        .collect())
}
