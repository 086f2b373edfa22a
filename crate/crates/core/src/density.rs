//! Per-location demand distributions: Gaussian-kernel KDE plus Gaussian,
//! Laplace and Poisson fitted by maximum likelihood.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::DemandPanel;
use crate::scalar::{round_half_up_nonneg, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Kde,
    Gaussian,
    Laplace,
    Poisson,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Kde, Family::Gaussian, Family::Laplace, Family::Poisson];

    pub fn name(self) -> &'static str {
        match self {
            Family::Kde => "kde",
            Family::Gaussian => "gaussian",
            Family::Laplace => "laplace",
            Family::Poisson => "poisson",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kde" => Ok(Family::Kde),
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "laplace" => Ok(Family::Laplace),
            "poisson" => Ok(Family::Poisson),
            other => Err(Error::InvalidArgument(format!("unknown distribution family `{other}`"))),
        }
    }
}

/// A fitted one-dimensional demand distribution.
///
/// Zero-spread models (`bandwidth`, `variance` or `scale` equal to zero) are
/// point masses: their density is zero off the support and infinite on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DensityModel<T> {
    Kde { samples: Vec<T>, bandwidth: T },
    Gaussian { mean: T, variance: T },
    Laplace { location: T, scale: T },
    Poisson { rate: T },
}

fn require_samples<T>(samples: &[T]) -> Result<()> {
    if samples.is_empty() {
        Err(Error::InvalidArgument("at least one sample is required".into()))
    } else {
        Ok(())
    }
}

fn mean<T: Scalar>(samples: &[T]) -> T {
    samples.iter().copied().sum::<T>() / T::of_usize(samples.len())
}

/// Type-7 (linear interpolation) quantile of sorted data.
fn quantile_sorted<T: Scalar>(sorted: &[T], q: f64) -> T {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = T::of(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * w
}

/// Silverman's rule of thumb, `0.9 * min(sd, IQR / 1.34) * n^(-1/5)`, with
/// the sample standard deviation alone when the IQR is zero.
pub fn silverman_bandwidth<T: Scalar>(samples: &[T]) -> Result<T> {
    require_samples(samples)?;
    let n = samples.len();
    let mu = mean(samples);
    let ss: T = samples.iter().map(|&x| (x - mu) * (x - mu)).sum();
    if n < 2 || ss <= T::zero() {
        return Err(Error::DegenerateData("all samples are identical; pass an explicit bandwidth".into()));
    }
    let sd = (ss / T::of_usize(n - 1)).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > T::zero() { sd.min(iqr / T::of(1.34)) } else { sd };
    Ok(T::of(0.9) * spread * T::of_usize(n).powf(T::of(-0.2)))
}

pub fn fit_kde<T: Scalar>(samples: &[T], bandwidth: Option<T>) -> Result<DensityModel<T>> {
    require_samples(samples)?;
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("samples must be finite".into()));
    }
    let h = match bandwidth {
        Some(h) if h > T::zero() && h.is_finite() => h,
        Some(h) => return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}"))),
        None => silverman_bandwidth(samples)?,
    };
    Ok(DensityModel::Kde { samples: samples.to_vec(), bandwidth: h })
}

/// Mean and mean squared deviation (divisor `N`).
pub fn fit_gaussian<T: Scalar>(samples: &[T]) -> Result<DensityModel<T>> {
    require_samples(samples)?;
    let mu = mean(samples);
    let variance = samples.iter().map(|&x| (x - mu) * (x - mu)).sum::<T>() / T::of_usize(samples.len());
    Ok(DensityModel::Gaussian { mean: mu, variance })
}

/// Location is the sample mean and scale the mean absolute deviation from it.
pub fn fit_laplace<T: Scalar>(samples: &[T]) -> Result<DensityModel<T>> {
    require_samples(samples)?;
    let mu = mean(samples);
    let scale = samples.iter().map(|&x| (x - mu).abs()).sum::<T>() / T::of_usize(samples.len());
    Ok(DensityModel::Laplace { location: mu, scale })
}

pub fn fit_poisson<T: Scalar>(samples: &[T]) -> Result<DensityModel<T>> {
    require_samples(samples)?;
    if samples.iter().any(|&x| x < T::zero()) {
        return Err(Error::InvalidArgument("Poisson samples must be nonnegative".into()));
    }
    Ok(DensityModel::Poisson { rate: mean(samples) })
}

/// Fits `family` for use in the pipeline. Constant data under KDE yields a
/// zero-bandwidth (point mass) model instead of an error.
pub fn fit_family<T: Scalar>(family: Family, samples: &[T]) -> Result<DensityModel<T>> {
    match family {
        Family::Kde => match fit_kde(samples, None) {
            Err(Error::DegenerateData(_)) => Ok(DensityModel::Kde { samples: samples.to_vec(), bandwidth: T::zero() }),
            other => other,
        },
        Family::Gaussian => fit_gaussian(samples),
        Family::Laplace => fit_laplace(samples),
        Family::Poisson => fit_poisson(samples),
    }
}

/// `ln k!`, exact summation for small `k`, Stirling series beyond.
pub(crate) fn ln_factorial(k: u64) -> f64 {
    if k < 32 {
        return (2..=k).map(|i| (i as f64).ln()).sum();
    }
    let x = k as f64;
    let x2 = x * x;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x * x2)
        + 1.0 / (1260.0 * x2 * x2 * x)
}

fn as_count<T: Scalar>(x: T) -> Option<u64> {
    if x >= T::zero() && x == x.round() {
        x.to_u64()
    } else {
        None
    }
}

impl<T: Scalar> DensityModel<T> {
    pub fn family(&self) -> Family {
        match self {
            DensityModel::Kde { .. } => Family::Kde,
            DensityModel::Gaussian { .. } => Family::Gaussian,
            DensityModel::Laplace { .. } => Family::Laplace,
            DensityModel::Poisson { .. } => Family::Poisson,
        }
    }

    pub fn mean(&self) -> T {
        match self {
            DensityModel::Kde { samples, .. } => mean(samples),
            DensityModel::Gaussian { mean, .. } => *mean,
            DensityModel::Laplace { location, .. } => *location,
            DensityModel::Poisson { rate } => *rate,
        }
    }

    /// Density at `x` (probability mass for Poisson, zero off the integers).
    pub fn pdf(&self, x: T) -> T {
        self.ln_pdf(x).exp()
    }

    pub fn ln_pdf(&self, x: T) -> T {
        let half_ln_2pi = T::of(0.5) * (T::of(2.0) * T::PI()).ln();
        match self {
            DensityModel::Kde { samples, bandwidth } => {
                let h = *bandwidth;
                if h <= T::zero() {
                    let hits = samples.iter().filter(|&&s| s == x).count();
                    return if hits > 0 { T::infinity() } else { T::neg_infinity() };
                }
                // log-sum-exp over kernels
                let exps: Vec<T> = samples
                    .iter()
                    .map(|&s| {
                        let z = (x - s) / h;
                        -T::of(0.5) * z * z
                    })
                    .collect();
                let top = exps.iter().copied().fold(T::neg_infinity(), T::max);
                let sum: T = exps.iter().map(|&e| (e - top).exp()).sum();
                top + sum.ln() - T::of_usize(samples.len()).ln() - h.ln() - half_ln_2pi
            }
            DensityModel::Gaussian { mean, variance } => {
                if *variance <= T::zero() {
                    return if x == *mean { T::infinity() } else { T::neg_infinity() };
                }
                let d = x - *mean;
                -d * d / (T::of(2.0) * *variance) - T::of(0.5) * variance.ln() - half_ln_2pi
            }
            DensityModel::Laplace { location, scale } => {
                if *scale <= T::zero() {
                    return if x == *location { T::infinity() } else { T::neg_infinity() };
                }
                -(x - *location).abs() / *scale - (T::of(2.0) * *scale).ln()
            }
            DensityModel::Poisson { rate } => match as_count(x) {
                None => T::neg_infinity(),
                Some(k) if *rate <= T::zero() => {
                    if k == 0 {
                        T::zero()
                    } else {
                        T::neg_infinity()
                    }
                }
                Some(k) => T::of_usize(k as usize) * rate.ln() - *rate - T::of(ln_factorial(k)),
            },
        }
    }

    /// Sum of log densities over `holdout`; `-inf` as soon as any density is zero.
    pub fn log_likelihood(&self, holdout: &[T]) -> T {
        let mut total = T::zero();
        for &x in holdout {
            let l = self.ln_pdf(x);
            if l == T::neg_infinity() {
                return T::neg_infinity();
            }
            total = total + l;
        }
        total
    }

    /// `n` integer demand draws from a generator seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, n)
    }

    /// Draws continuous values, truncates them at zero and rounds half-up.
    /// KDE draws pick a training sample uniformly and add `N(0, h^2)` noise.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<u64> {
        let draw = |v: f64| round_half_up_nonneg(v);
        match self {
            DensityModel::Kde { samples, bandwidth } => {
                let h = bandwidth.as_f64();
                let noise = Normal::new(0.0, h).expect("bandwidth is finite and nonnegative");
                (0..n)
                    .map(|_| {
                        let center = samples[rng.random_range(0..samples.len())].as_f64();
                        let eps = if h > 0.0 { noise.sample(rng) } else { 0.0 };
                        draw(center + eps)
                    })
                    .collect()
            }
            DensityModel::Gaussian { mean, variance } => {
                let normal = Normal::new(mean.as_f64(), variance.as_f64().max(0.0).sqrt()).expect("finite parameters");
                (0..n).map(|_| draw(normal.sample(rng))).collect()
            }
            DensityModel::Laplace { location, scale } => {
                let (mu, b) = (location.as_f64(), scale.as_f64().max(0.0));
                (0..n)
                    .map(|_| {
                        // inverse CDF with u uniform on (-1/2, 1/2)
                        let u: f64 = rng.random::<f64>() - 0.5;
                        draw(mu - b * u.signum() * (1.0 - 2.0 * u.abs()).ln())
                    })
                    .collect()
            }
            DensityModel::Poisson { rate } => {
                let lambda = rate.as_f64();
                if lambda <= 0.0 {
                    return vec![0; n];
                }
                let poisson = Poisson::new(lambda).expect("positive rate");
                (0..n).map(|_| draw(poisson.sample(rng))).collect()
            }
        }
    }
}

/// One fitted model per location, in panel column order.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandDistributionSet<T> {
    location_ids: Vec<u32>,
    models: Vec<DensityModel<T>>,
}

#[derive(Serialize, Deserialize)]
struct LocationRecord<T> {
    location_id: u32,
    #[serde(flatten)]
    model: DensityModel<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct SetFile<T> {
    locations: Vec<LocationRecord<T>>,
}

impl<T: Scalar> DemandDistributionSet<T> {
    pub fn new(location_ids: Vec<u32>, models: Vec<DensityModel<T>>) -> Result<Self> {
        if location_ids.len() != models.len() {
            return Err(Error::Dimension(format!(
                "{} locations but {} models",
                location_ids.len(),
                models.len()
            )));
        }
        Ok(Self { location_ids, models })
    }

    /// Same model at every location.
    pub fn uniform(location_ids: Vec<u32>, model: DensityModel<T>) -> Self {
        let models = vec![model; location_ids.len()];
        Self { location_ids, models }
    }

    pub fn fit(panel: &DemandPanel, family: Family) -> Result<Self> {
        let models = (0..panel.num_locations())
            .map(|i| {
                let col: Vec<T> = panel.column(i).into_iter().map(T::of).collect();
                fit_family(family, &col)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(panel.location_ids().to_vec(), models)
    }

    pub fn location_ids(&self) -> &[u32] {
        &self.location_ids
    }

    pub fn models(&self) -> &[DensityModel<T>] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// JSON with one record per location carrying the kind and parameters.
    pub fn write_json<W: Write>(&self, sink: W) -> Result<()> {
        let file = SetFile {
            locations: self
                .location_ids
                .iter()
                .zip(&self.models)
                .map(|(&location_id, model)| LocationRecord { location_id, model: model.clone() })
                .collect(),
        };
        serde_json::to_writer_pretty(sink, &file)?;
        Ok(())
    }

    pub fn read_json<R: Read>(source: R) -> Result<Self> {
        let file: SetFile<T> = serde_json::from_reader(source)?;
        let (ids, models) = file.locations.into_iter().map(|r| (r.location_id, r.model)).unzip();
        Self::new(ids, models)
    }
}
