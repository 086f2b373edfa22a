//! Trip-record parsing and daily demand aggregation.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TripRecord {
    pub pickup_datetime: NaiveDateTime,
    pub dropoff_datetime: NaiveDateTime,
    pub pickup_location_id: u32,
    pub dropoff_location_id: u32,
    pub trip_distance: f64,
    pub fare_amount: f64,
}

/// Column names of the six fields read from a trip file. Defaults follow the
/// NYC TLC green-taxi layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TripSchema {
    pub pickup_datetime: String,
    pub dropoff_datetime: String,
    pub pickup_location_id: String,
    pub dropoff_location_id: String,
    pub trip_distance: String,
    pub fare_amount: String,
    pub delimiter: char,
}

impl Default for TripSchema {
    fn default() -> Self {
        Self {
            pickup_datetime: "lpep_pickup_datetime".into(),
            dropoff_datetime: "lpep_dropoff_datetime".into(),
            pickup_location_id: "PULocationID".into(),
            dropoff_location_id: "DOLocationID".into(),
            trip_distance: "trip_distance".into(),
            fare_amount: "fare_amount".into(),
            delimiter: ',',
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedTrips {
    pub records: Vec<TripRecord>,
    /// Data rows read, valid or not.
    pub rows: usize,
    pub rejected: usize,
    /// Retained records with a zero trip distance.
    pub zero_distance: usize,
    /// Retained records with a negative fare.
    pub negative_fare: usize,
}

impl ParsedTrips {
    pub fn extend(&mut self, other: ParsedTrips) {
        self.records.extend(other.records);
        self.rows += other.rows;
        self.rejected += other.rejected;
        self.zero_distance += other.zero_distance;
        self.negative_fare += other.negative_fare;
    }
}

const TIMESTAMP_FORMATS: &[&str] = &[
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%m/%d/%Y %I:%M:%S %p",
    "%m/%d/%Y %H:%M:%S",
    "%m/%d/%Y %H:%M",
];

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// Writes records with the schema's column names, timestamps as
/// `YYYY-MM-DD HH:MM:SS`.
pub fn write_trips<W: Write>(records: &[TripRecord], schema: &TripSchema, sink: W) -> Result<()> {
    let delimiter = u8::try_from(schema.delimiter)
        .map_err(|_| Error::InvalidArgument(format!("delimiter {:?} is not ASCII", schema.delimiter)))?;
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(sink);
    w.write_record([
        &schema.pickup_datetime,
        &schema.dropoff_datetime,
        &schema.pickup_location_id,
        &schema.dropoff_location_id,
        &schema.trip_distance,
        &schema.fare_amount,
    ])?;
    for r in records {
        w.write_record([
            r.pickup_datetime.format(TIMESTAMP_FORMATS[0]).to_string(),
            r.dropoff_datetime.format(TIMESTAMP_FORMATS[0]).to_string(),
            r.pickup_location_id.to_string(),
            r.dropoff_location_id.to_string(),
            r.trip_distance.to_string(),
            r.fare_amount.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads delimiter-separated trip records. Rows with bad timestamps, missing
/// or nonpositive location ids, unparseable numbers, or a dropoff before the
/// pickup are skipped and counted in `rejected`.
pub fn parse_trips<R: Read>(source: R, schema: &TripSchema) -> Result<ParsedTrips> {
    let delimiter = u8::try_from(schema.delimiter)
        .map_err(|_| Error::InvalidArgument(format!("delimiter {:?} is not a single byte", schema.delimiter)))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyInput("trip file has no header row".into()));
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let idx = [
        column(&schema.pickup_datetime)?,
        column(&schema.dropoff_datetime)?,
        column(&schema.pickup_location_id)?,
        column(&schema.dropoff_location_id)?,
        column(&schema.trip_distance)?,
        column(&schema.fare_amount)?,
    ];

    let mut out = ParsedTrips::default();
    for row in reader.records() {
        out.rows += 1;
        let Ok(row) = row else {
            out.rejected += 1;
            continue;
        };
        match parse_row(&row, &idx) {
            Some(rec) => {
                if rec.trip_distance == 0.0 {
                    out.zero_distance += 1;
                }
                if rec.fare_amount < 0.0 {
                    out.negative_fare += 1;
                }
                out.records.push(rec);
            }
            None => out.rejected += 1,
        }
    }
    Ok(out)
}

fn parse_row(row: &csv::StringRecord, idx: &[usize; 6]) -> Option<TripRecord> {
    let field = |k: usize| row.get(idx[k]).filter(|s| !s.is_empty());
    let pickup = parse_timestamp(field(0)?)?;
    let dropoff = parse_timestamp(field(1)?)?;
    let pu: u32 = field(2)?.parse().ok()?;
    let du: u32 = field(3)?.parse().ok()?;
    let trip_distance: f64 = field(4)?.parse().ok()?;
    let fare_amount: f64 = field(5)?.parse().ok()?;
    if pickup > dropoff || pu < 1 || du < 1 || !trip_distance.is_finite() || !fare_amount.is_finite() {
        return None;
    }
    Some(TripRecord {
        pickup_datetime: pickup,
        dropoff_datetime: dropoff,
        pickup_location_id: pu,
        dropoff_location_id: du,
        trip_distance,
        fare_amount,
    })
}

/// Daily pickup counts: one row per calendar date, one column per zone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandPanel {
    dates: Vec<NaiveDate>,
    location_ids: Vec<u32>,
    counts: Vec<Vec<u64>>,
}

impl DemandPanel {
    pub fn new(dates: Vec<NaiveDate>, location_ids: Vec<u32>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != dates.len() {
            return Err(Error::Dimension(format!("{} dates but {} count rows", dates.len(), counts.len())));
        }
        if let Some(row) = counts.iter().find(|r| r.len() != location_ids.len()) {
            return Err(Error::Dimension(format!(
                "count row has {} entries, expected {}",
                row.len(),
                location_ids.len()
            )));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("panel dates must be strictly increasing".into()));
        }
        let distinct: BTreeSet<_> = location_ids.iter().collect();
        if distinct.len() != location_ids.len() {
            return Err(Error::InvalidArgument("panel location ids must be distinct".into()));
        }
        Ok(Self { dates, location_ids, counts })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn location_ids(&self) -> &[u32] {
        &self.location_ids
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn num_days(&self) -> usize {
        self.dates.len()
    }

    pub fn num_locations(&self) -> usize {
        self.location_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Samples for one location, in date order.
    pub fn column(&self, loc: usize) -> Vec<f64> {
        self.counts.iter().map(|r| r[loc] as f64).collect()
    }

    pub fn mean_demand(&self) -> Vec<f64> {
        let days = self.num_days().max(1) as f64;
        (0..self.num_locations())
            .map(|i| self.counts.iter().map(|r| r[i]).sum::<u64>() as f64 / days)
            .collect()
    }

    /// Keeps the given columns, in the given order.
    pub fn select(&self, columns: &[usize]) -> Self {
        Self {
            dates: self.dates.clone(),
            location_ids: columns.iter().map(|&c| self.location_ids[c]).collect(),
            counts: self
                .counts
                .iter()
                .map(|r| columns.iter().map(|&c| r[c]).collect())
                .collect(),
        }
    }

    fn rows_where(&self, keep: impl Fn(NaiveDate) -> bool) -> Self {
        let (dates, counts) = self
            .dates
            .iter()
            .zip(&self.counts)
            .filter(|(d, _)| keep(**d))
            .map(|(d, r)| (*d, r.clone()))
            .unzip();
        Self { dates, location_ids: self.location_ids.clone(), counts }
    }

    /// CSV with an ISO-8601 date column followed by one column per location id.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let mut header = vec!["date".to_string()];
        header.extend(self.location_ids.iter().map(|id| id.to_string()));
        w.write_record(&header)?;
        for (d, row) in self.dates.iter().zip(&self.counts) {
            let mut rec = vec![d.format("%Y-%m-%d").to_string()];
            rec.extend(row.iter().map(|c| c.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(source);
        let headers = r.headers()?.clone();
        if headers.get(0) != Some("date") {
            return Err(Error::MissingColumn("date".into()));
        }
        let location_ids = headers
            .iter()
            .skip(1)
            .map(|h| h.parse::<u32>().map_err(|_| Error::Parse(format!("bad location id `{h}`"))))
            .collect::<Result<Vec<_>>>()?;
        let mut dates = Vec::new();
        let mut counts = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let d = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
                .map_err(|e| Error::Parse(format!("bad date `{}`: {e}", &rec[0])))?;
            let row = rec
                .iter()
                .skip(1)
                .map(|c| c.parse::<u64>().map_err(|_| Error::Parse(format!("bad count `{c}` on {d}"))))
                .collect::<Result<Vec<_>>>()?;
            dates.push(d);
            counts.push(row);
        }
        Self::new(dates, location_ids, counts)
    }
}

/// Counts pickups per zone per calendar date. Every date between the first
/// and last pickup gets a row, zero-filled when nothing happened.
pub fn aggregate_daily(records: &[TripRecord]) -> Result<DemandPanel> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no trip records to aggregate".into()));
    }
    let zones: BTreeSet<u32> = records.iter().map(|r| r.pickup_location_id).collect();
    let location_ids: Vec<u32> = zones.into_iter().collect();
    let col: BTreeMap<u32, usize> = location_ids.iter().enumerate().map(|(i, &z)| (z, i)).collect();
    let first = records.iter().map(|r| r.pickup_datetime.date()).min().expect("nonempty");
    let last = records.iter().map(|r| r.pickup_datetime.date()).max().expect("nonempty");
    let dates: Vec<NaiveDate> = first.iter_days().take_while(|d| *d <= last).collect();
    let mut counts = vec![vec![0u64; location_ids.len()]; dates.len()];
    for r in records {
        let day = (r.pickup_datetime.date() - first).num_days() as usize;
        counts[day][col[&r.pickup_location_id]] += 1;
    }
    DemandPanel::new(dates, location_ids, counts)
}

/// The `k` zones with the highest mean daily demand, sorted by descending
/// mean; ties go to the lower location id.
pub fn top_k_locations(panel: &DemandPanel, k: usize) -> Result<DemandPanel> {
    if k == 0 || k > panel.num_locations() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} but the panel has {} locations",
            panel.num_locations()
        )));
    }
    let totals: Vec<u64> = (0..panel.num_locations())
        .map(|i| panel.counts.iter().map(|r| r[i]).sum())
        .collect();
    let mut order: Vec<usize> = (0..panel.num_locations()).collect();
    // Every column shares the day count, so ranking by totals is exact.
    order.sort_by(|&a, &b| {
        totals[b]
            .cmp(&totals[a])
            .then(panel.location_ids[a].cmp(&panel.location_ids[b]))
    });
    order.truncate(k);
    Ok(panel.select(&order))
}

/// Rows dated on or before `cutoff` go to train, the rest to test. Both parts
/// must be nonempty.
pub fn split_by_date(panel: &DemandPanel, cutoff: NaiveDate) -> Result<(DemandPanel, DemandPanel)> {
    let (Some(&first), Some(&last)) = (panel.dates.first(), panel.dates.last()) else {
        return Err(Error::EmptyInput("cannot split an empty panel".into()));
    };
    if cutoff < first || cutoff >= last {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff} must lie in [{first}, {last}) so both splits are nonempty"
        )));
    }
    Ok((panel.rows_where(|d| d <= cutoff), panel.rows_where(|d| d > cutoff)))
}
