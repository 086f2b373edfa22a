//! `csrp synth`: writes a self-contained synthetic dataset (trip file, zone
//! coordinates and a run config) for trying the pipeline without NYC data.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use csrp::ingest::write_trips;
use csrp::synthetic::{bimodal_panel, trips_from_panel, BimodalSpec};
use csrp::TripSchema;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct SynthOptions {
    pub days: usize,
    pub zones: Vec<u32>,
    pub low: f64,
    pub high: f64,
    pub top_k: usize,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self { days: 120, zones: vec![7, 41, 42, 74, 75, 166], low: 3.0, high: 12.0, top_k: 4, seed: 7 }
    }
}

pub fn write_dataset(dir: &Path, opts: &SynthOptions) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let spec = BimodalSpec {
        location_ids: opts.zones.clone(),
        low: opts.low,
        high: opts.high,
        days: opts.days,
        ..Default::default()
    };
    let panel = bimodal_panel(&spec, opts.seed)?;
    let trips = trips_from_panel(&panel, &opts.zones, opts.seed.wrapping_add(1))?;
    write_trips(&trips, &TripSchema::default(), fs::File::create(dir.join("trips.csv"))?)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(2));
    let mut coords = fs::File::create(dir.join("coords.csv"))?;
    writeln!(coords, "location_id,x,y")?;
    for id in &opts.zones {
        let (x, y): (f64, f64) = (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
        writeln!(coords, "{id},{:.3},{:.3}", x, y)?;
    }

    let split = panel.dates()[(opts.days * 4 / 5).max(1) - 1];
    let config = format!(
        "run_id = \"synthetic\"\nseed = {seed}\n\n\
         [paths]\ntrips = [\"trips.csv\"]\ncoords = \"coords.csv\"\noutput_dir = \"runs\"\n\n\
         [instance]\nrevenue = 100.0\nholding = \"gaussian(20, 9)\"\n\
         transfer = \"distance(coords.csv, min=10, max=100)\"\ncapacity = 16000\n\n\
         [pipeline]\ntop_k = {k}\nsplit_date = \"{split}\"\n\
         families = [\"kde\", \"gaussian\", \"laplace\", \"poisson\"]\n\
         scenarios = [10, 20]\nreplications = 3\nxi = 1e-6\n\
         variant = \"flow-balance\"\nmethod = \"benders\"\n",
        seed = opts.seed,
        k = opts.top_k,
    );
    fs::write(dir.join("run.toml"), config)?;
    Ok(())
}
