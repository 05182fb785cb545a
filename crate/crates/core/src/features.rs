//! Segment-level trajectory features, CDO adherence labelling, and assembly
//! of the 29-column feature matrix.
//!
//! A segment is the interval between two consecutive retained samples. A
//! segment counts as CDO-compliant when it descends with a gradient
//! (`-Δalt_ft / horizontal_ft`) of at least `level_threshold`. Adherence is
//! the compliant fraction of all segments, and the three-level category
//! uses the thresholds 0.30 and 0.55 with boundary values assigned to the
//! upper class.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{heading_change_deg, FEET_PER_NM};
use crate::ingest::{entry_sector, ArrivalTrack, IngestError, Sector, TmaConfig, TrackPoint};
use crate::matrix::Matrix;

pub use crate::geo::great_circle_nm;

/// Default minimum descent gradient for a compliant segment (about 30 ft/NM).
pub const DEFAULT_LEVEL_THRESHOLD: f64 = 0.005;

pub const N_OPERATIONAL: usize = 11;
pub const N_FEATURES: usize = 29;

/// Feature-matrix column order.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "Sector",
    "Altitude",
    "MSpeed",
    "MDRate",
    "FltSegments",
    "Distance_NM",
    "MDirection",
    "StartLati",
    "StartLong",
    "EndLati",
    "EndLong",
    "start_temp",
    "start_feels_like",
    "start_pressure",
    "start_humidity",
    "start_dew_point",
    "start_clouds",
    "start_wind_speed",
    "start_wind_deg",
    "start_weather",
    "end_temp",
    "end_feels_like",
    "end_pressure",
    "end_humidity",
    "end_dew_point",
    "end_clouds",
    "end_wind_speed",
    "end_wind_deg",
    "end_weather",
];

/// Weather fields, in the order used for both the `start_` and `end_` blocks.
pub const WEATHER_FIELDS: [&str; 9] = [
    "temp",
    "feels_like",
    "pressure",
    "humidity",
    "dew_point",
    "clouds",
    "wind_speed",
    "wind_deg",
    "weather",
];

pub fn feature_names() -> Vec<String> {
    FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("segment {index} has zero horizontal length")]
    ZeroLengthSegment { index: usize },
    #[error("no segments to score")]
    EmptySegments,
    #[error("adherence {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("unknown weather category `{0}`")]
    UnknownWeatherCategory(String),
    #[error("invalid weather record: {0}")]
    InvalidWeather(String),
    #[error("flight {flight_id} is missing {missing:?}")]
    IncompleteRow { flight_id: String, missing: Vec<String> },
    #[error("unknown CDO category `{0}`")]
    UnknownCategory(String),
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Interval between two consecutive samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub from: TrackPoint,
    pub to: TrackPoint,
    pub dist_nm: f64,
    /// `to.alt - from.alt`; negative when descending.
    pub d_alt_ft: f64,
    /// Smallest heading change in `[0, 180]`.
    pub heading_change_deg: f64,
}

impl Segment {
    pub fn between(from: TrackPoint, to: TrackPoint) -> Self {
        Segment {
            from,
            to,
            dist_nm: great_circle_nm(from.position(), to.position()),
            d_alt_ft: to.alt - from.alt,
            heading_change_deg: heading_change_deg(from.heading, to.heading),
        }
    }

    /// Descent gradient `-Δalt / horizontal distance` (both in feet).
    /// Positive when descending. Infinite or NaN for zero-length segments.
    pub fn descent_gradient(&self) -> f64 {
        -self.d_alt_ft / (self.dist_nm * FEET_PER_NM)
    }
}

pub fn segment_track(track: &ArrivalTrack) -> Vec<Segment> {
    track.points.windows(2).map(|w| Segment::between(w[0], w[1])).collect()
}

/// A segment is compliant when it descends with a gradient of at least
/// `level_threshold`; level-offs and climbs never are.
pub fn is_cdo_segment(seg: &Segment, level_threshold: f64) -> Result<bool, FeatureError> {
    if seg.dist_nm.is_nan() || seg.dist_nm <= 0.0 {
        return Err(FeatureError::ZeroLengthSegment { index: 0 });
    }
    Ok(seg.d_alt_ft < 0.0 && seg.descent_gradient() >= level_threshold)
}

/// `(compliant, total)` segment counts.
pub fn cdo_counts(segments: &[Segment], level_threshold: f64) -> Result<(usize, usize), FeatureError> {
    if segments.is_empty() {
        return Err(FeatureError::EmptySegments);
    }
    let mut compliant = 0;
    for (index, seg) in segments.iter().enumerate() {
        match is_cdo_segment(seg, level_threshold) {
            Ok(true) => compliant += 1,
            Ok(false) => {}
            Err(_) => return Err(FeatureError::ZeroLengthSegment { index }),
        }
    }
    Ok((compliant, segments.len()))
}

/// Fraction of compliant segments.
pub fn cdo_adherence(segments: &[Segment], level_threshold: f64) -> Result<f64, FeatureError> {
    let (compliant, total) = cdo_counts(segments, level_threshold)?;
    Ok(compliant as f64 / total as f64)
}

/// Three-level adherence category. Ordered `Low < Medium < High`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CdoCategory {
    Low,
    Medium,
    High,
}

impl CdoCategory {
    pub const ALL: [CdoCategory; 3] = [CdoCategory::Low, CdoCategory::Medium, CdoCategory::High];

    pub fn as_str(self) -> &'static str {
        match self {
            CdoCategory::Low => "Low",
            CdoCategory::Medium => "Medium",
            CdoCategory::High => "High",
        }
    }
}

impl fmt::Display for CdoCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CdoCategory {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "Low" => Ok(CdoCategory::Low),
            "Medium" => Ok(CdoCategory::Medium),
            "High" => Ok(CdoCategory::High),
            other => Err(FeatureError::UnknownCategory(other.to_string())),
        }
    }
}

/// Category thresholds: `< low_upper` is Low, `>= high_lower` is High.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdoThresholds {
    pub low_upper: f64,
    pub high_lower: f64,
}

impl Default for CdoThresholds {
    fn default() -> Self {
        CdoThresholds {
            low_upper: 0.30,
            high_lower: 0.55,
        }
    }
}

impl CdoThresholds {
    pub fn new(low_upper: f64, high_lower: f64) -> Result<Self, FeatureError> {
        if !(0.0 <= low_upper && low_upper < high_lower && high_lower <= 1.0) {
            return Err(FeatureError::InvalidThresholds(format!(
                "need 0 <= {low_upper} < {high_lower} <= 1"
            )));
        }
        Ok(CdoThresholds { low_upper, high_lower })
    }

    pub fn categorize(&self, adherence: f64) -> Result<CdoCategory, FeatureError> {
        if !(0.0..=1.0).contains(&adherence) {
            return Err(FeatureError::OutOfRange(adherence));
        }
        Ok(if adherence < self.low_upper {
            CdoCategory::Low
        } else if adherence < self.high_lower {
            CdoCategory::Medium
        } else {
            CdoCategory::High
        })
    }
}

/// Categorize with the default 0.30 / 0.55 thresholds.
pub fn cdocat(adherence: f64) -> Result<CdoCategory, FeatureError> {
    CdoThresholds::default().categorize(adherence)
}

/// Knobs for feature extraction and labelling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub level_threshold: f64,
    /// Multiplier applied to the dimensionless descent gradient when
    /// reporting MDRate. `1.0` keeps ft/ft; `6076.12` yields ft/NM.
    pub mdrate_scale: f64,
    pub thresholds: CdoThresholds,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            level_threshold: DEFAULT_LEVEL_THRESHOLD,
            mdrate_scale: 1.0,
            thresholds: CdoThresholds::default(),
        }
    }
}

/// The eleven trajectory-derived features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperationalFeatures {
    pub sector: Sector,
    pub altitude: f64,
    pub mspeed: f64,
    pub mdrate: f64,
    pub flt_segments: usize,
    pub distance_nm: f64,
    pub mdirection: f64,
    pub start_lati: f64,
    pub start_long: f64,
    pub end_lati: f64,
    pub end_long: f64,
}

impl OperationalFeatures {
    pub fn to_array(&self) -> [f64; N_OPERATIONAL] {
        [
            self.sector.code(),
            self.altitude,
            self.mspeed,
            self.mdrate,
            self.flt_segments as f64,
            self.distance_nm,
            self.mdirection,
            self.start_lati,
            self.start_long,
            self.end_lati,
            self.end_long,
        ]
    }
}

/// Computes the operational features of a clipped track. MSpeed averages
/// the endpoint-mean ground speed of each segment; MDRate averages the
/// descent gradient over descending segments only (0 if there are none).
pub fn extract_operational_features(
    track: &ArrivalTrack,
    segments: &[Segment],
    tma: &TmaConfig,
    cfg: &FeatureConfig,
) -> Result<OperationalFeatures, FeatureError> {
    if segments.is_empty() {
        return Err(FeatureError::EmptySegments);
    }
    let sector = entry_sector(track, tma)?;
    let n = segments.len() as f64;
    let mspeed = segments
        .iter()
        .map(|s| 0.5 * (s.from.gspeed + s.to.gspeed))
        .sum::<f64>()
        / n;
    let (grad_sum, n_desc) = segments
        .iter()
        .filter(|s| s.d_alt_ft < 0.0 && s.dist_nm > 0.0)
        .fold((0.0, 0usize), |(acc, k), s| (acc + s.descent_gradient(), k + 1));
    let mdrate = if n_desc == 0 {
        0.0
    } else {
        cfg.mdrate_scale * grad_sum / n_desc as f64
    };
    let distance_nm = segments.iter().map(|s| s.dist_nm).sum();
    let mdirection = segments.iter().map(|s| s.heading_change_deg).sum::<f64>() / n;
    let (first, last) = (track.first(), track.last());
    Ok(OperationalFeatures {
        sector,
        altitude: first.alt,
        mspeed,
        mdrate,
        flt_segments: segments.len(),
        distance_nm,
        mdirection,
        start_lati: first.lat,
        start_long: first.lon,
        end_lati: last.lat,
        end_long: last.lon,
    })
}

/// Operational features plus the adherence label of one flight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightProfile {
    pub flight_id: String,
    pub operational: OperationalFeatures,
    pub cdo_adherence: f64,
    pub cdocat: CdoCategory,
}

/// Clips nothing: `track` must already be restricted to the terminal area.
pub fn profile_track(
    track: &ArrivalTrack,
    tma: &TmaConfig,
    cfg: &FeatureConfig,
) -> Result<FlightProfile, FeatureError> {
    let segments = segment_track(track);
    let operational = extract_operational_features(track, &segments, tma, cfg)?;
    let cdo_adherence = cdo_adherence(&segments, cfg.level_threshold)?;
    let cdocat = cfg.thresholds.categorize(cdo_adherence)?;
    Ok(FlightProfile {
        flight_id: track.flight_id.clone(),
        operational,
        cdo_adherence,
        cdocat,
    })
}

/// Controlled weather vocabulary with its integer encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WeatherCategory {
    Clear,
    Clouds,
    Rain,
    Mist,
    Haze,
    Dust,
    Thunderstorm,
    Other,
}

impl WeatherCategory {
    pub const ALL: [WeatherCategory; 8] = [
        WeatherCategory::Clear,
        WeatherCategory::Clouds,
        WeatherCategory::Rain,
        WeatherCategory::Mist,
        WeatherCategory::Haze,
        WeatherCategory::Dust,
        WeatherCategory::Thunderstorm,
        WeatherCategory::Other,
    ];

    pub fn code(self) -> f64 {
        self as u8 as f64
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WeatherCategory::Clear => "clear",
            WeatherCategory::Clouds => "clouds",
            WeatherCategory::Rain => "rain",
            WeatherCategory::Mist => "mist",
            WeatherCategory::Haze => "haze",
            WeatherCategory::Dust => "dust",
            WeatherCategory::Thunderstorm => "thunderstorm",
            WeatherCategory::Other => "other",
        }
    }

    /// Maps unknown labels to `Other`, logging a warning.
    pub fn parse_or_other(label: &str) -> (Self, Option<String>) {
        match label.parse() {
            Ok(c) => (c, None),
            Err(e) => {
                let msg = format!("{e}; using `other`");
                warn!("{msg}");
                (WeatherCategory::Other, Some(msg))
            }
        }
    }
}

impl FromStr for WeatherCategory {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        WeatherCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == lower)
            .ok_or_else(|| FeatureError::UnknownWeatherCategory(s.to_string()))
    }
}

impl fmt::Display for WeatherCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Weather observation at the entry or exit of the arrival. Missing numeric
/// values are stored as NaN and a missing category as `None`; such records
/// are accepted here and rejected at dataset assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub temp: f64,
    pub feels_like: f64,
    pub pressure: f64,
    pub humidity: f64,
    pub dew_point: f64,
    pub clouds: f64,
    pub wind_speed: f64,
    pub wind_deg: f64,
    pub weather: Option<WeatherCategory>,
}

impl WeatherRecord {
    pub fn missing() -> Self {
        WeatherRecord {
            temp: f64::NAN,
            feels_like: f64::NAN,
            pressure: f64::NAN,
            humidity: f64::NAN,
            dew_point: f64::NAN,
            clouds: f64::NAN,
            wind_speed: f64::NAN,
            wind_deg: f64::NAN,
            weather: None,
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let pct = |name: &str, v: f64| {
            if v.is_nan() || (0.0..=100.0).contains(&v) {
                Ok(())
            } else {
                Err(FeatureError::InvalidWeather(format!("{name} {v} outside [0, 100]")))
            }
        };
        pct("humidity", self.humidity)?;
        pct("clouds", self.clouds)?;
        if !(self.wind_deg.is_nan() || (0.0..360.0).contains(&self.wind_deg)) {
            return Err(FeatureError::InvalidWeather(format!(
                "wind_deg {} outside [0, 360)",
                self.wind_deg
            )));
        }
        Ok(())
    }

    /// The nine modelling values; the category becomes its code.
    pub fn to_array(&self) -> [f64; 9] {
        [
            self.temp,
            self.feels_like,
            self.pressure,
            self.humidity,
            self.dew_point,
            self.clouds,
            self.wind_speed,
            self.wind_deg,
            self.weather.map_or(f64::NAN, WeatherCategory::code),
        ]
    }
}

/// Complete per-flight record: operational features, weather at both ends
/// and the adherence label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightFeatures {
    pub flight_id: String,
    pub operational: OperationalFeatures,
    pub start_weather: WeatherRecord,
    pub end_weather: WeatherRecord,
    pub cdo_adherence: f64,
    pub cdocat: CdoCategory,
}

impl FlightFeatures {
    /// The 29 values in [`FEATURE_NAMES`] order; missing weather is NaN.
    pub fn to_row(&self) -> [f64; N_FEATURES] {
        let mut row = [0.0; N_FEATURES];
        row[..N_OPERATIONAL].copy_from_slice(&self.operational.to_array());
        row[N_OPERATIONAL..N_OPERATIONAL + 9].copy_from_slice(&self.start_weather.to_array());
        row[N_OPERATIONAL + 9..].copy_from_slice(&self.end_weather.to_array());
        row
    }
}

pub fn join_weather(
    profile: FlightProfile,
    start: WeatherRecord,
    end: WeatherRecord,
) -> Result<FlightFeatures, FeatureError> {
    start.validate()?;
    end.validate()?;
    Ok(FlightFeatures {
        flight_id: profile.flight_id,
        operational: profile.operational,
        start_weather: start,
        end_weather: end,
        cdo_adherence: profile.cdo_adherence,
        cdocat: profile.cdocat,
    })
}

/// Feature matrix plus labels, one row per flight.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub flight_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub matrix: Matrix,
    pub cdo_adherence: Vec<f64>,
    pub labels: Vec<CdoCategory>,
}

impl Dataset {
    pub fn empty() -> Self {
        Dataset {
            flight_ids: Vec::new(),
            feature_names: feature_names(),
            matrix: Matrix::zeros(0, N_FEATURES),
            cdo_adherence: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }
}

/// Stacks complete flight records into the feature matrix.
pub fn assemble_dataset(flights: &[FlightFeatures]) -> Result<Dataset, FeatureError> {
    let mut rows = Vec::with_capacity(flights.len());
    for f in flights {
        let row = f.to_row();
        let missing: Vec<String> = row
            .iter()
            .zip(FEATURE_NAMES)
            .filter(|(v, _)| !v.is_finite())
            .map(|(_, n)| n.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(FeatureError::IncompleteRow {
                flight_id: f.flight_id.clone(),
                missing,
            });
        }
        rows.push(row);
    }
    Ok(Dataset {
        flight_ids: flights.iter().map(|f| f.flight_id.clone()).collect(),
        feature_names: feature_names(),
        matrix: Matrix::from_rows(&rows, N_FEATURES),
        cdo_adherence: flights.iter().map(|f| f.cdo_adherence).collect(),
        labels: flights.iter().map(|f| f.cdocat).collect(),
    })
}

fn dataset_header() -> Vec<String> {
    let mut h = vec!["flight_id".to_string()];
    h.extend(feature_names());
    h.push("cdo_adherence".into());
    h.push("cdocat".into());
    h
}

/// Writes `flight_id`, the 29 feature columns, `cdo_adherence` and `cdocat`.
pub fn write_dataset<W: Write>(mut writer: W, ds: &Dataset, preamble: &[String]) -> Result<(), FeatureError> {
    for line in preamble {
        writeln!(writer, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(dataset_header())?;
    for i in 0..ds.len() {
        let mut rec = vec![ds.flight_ids[i].clone()];
        rec.extend(ds.matrix.row(i).iter().map(|v| v.to_string()));
        rec.push(ds.cdo_adherence[i].to_string());
        rec.push(ds.labels[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv(path: impl AsRef<Path>) -> Result<Dataset, FeatureError> {
    read_dataset(File::open(path)?)
}

pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset, FeatureError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers != dataset_header() {
        return Err(FeatureError::BadHeader(format!(
            "expected `{}`",
            dataset_header().join(",")
        )));
    }
    let mut ds = Dataset::empty();
    let mut data = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |reason: String| FeatureError::MalformedRow { line, reason };
        ds.flight_ids.push(rec[0].to_string());
        for j in 0..N_FEATURES {
            let v: f64 = rec[j + 1]
                .parse()
                .map_err(|_| bad(format!("{} `{}`", FEATURE_NAMES[j], &rec[j + 1])))?;
            data.push(v);
        }
        let adh: f64 = rec[N_FEATURES + 1]
            .parse()
            .map_err(|_| bad(format!("cdo_adherence `{}`", &rec[N_FEATURES + 1])))?;
        ds.cdo_adherence.push(adh);
        ds.labels.push(rec[N_FEATURES + 2].parse()?);
    }
    ds.matrix = Matrix::new(ds.labels.len(), N_FEATURES, data);
    Ok(ds)
}

/// Start and end weather for one flight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherPair {
    pub start: WeatherRecord,
    pub end: WeatherRecord,
}

impl Default for WeatherPair {
    fn default() -> Self {
        WeatherPair {
            start: WeatherRecord::missing(),
            end: WeatherRecord::missing(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct WeatherTable {
    pub records: BTreeMap<String, WeatherPair>,
    pub warnings: Vec<String>,
}

const WEATHER_HEADER: [&str; 11] = [
    "flight_id",
    "point",
    "temp",
    "feels_like",
    "pressure",
    "humidity",
    "dew_point",
    "clouds",
    "wind_speed",
    "wind_deg",
    "weather",
];

pub fn read_weather_csv(path: impl AsRef<Path>) -> Result<WeatherTable, FeatureError> {
    read_weather(File::open(path)?)
}

/// Reads weather rows. Empty numeric cells are kept as missing values.
pub fn read_weather<R: Read>(reader: R) -> Result<WeatherTable, FeatureError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 11];
    for (slot, name) in idx.iter_mut().zip(WEATHER_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| FeatureError::BadHeader(format!("missing column `{name}`")))?;
    }
    let mut table = WeatherTable::default();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |reason: String| FeatureError::MalformedRow { line, reason };
        let get = |k: usize| rec.get(idx[k]).unwrap_or("");
        let mut nums = [f64::NAN; 8];
        for (k, n) in nums.iter_mut().enumerate() {
            let raw = get(k + 2);
            if !raw.is_empty() {
                *n = raw
                    .parse()
                    .map_err(|_| bad(format!("{} `{raw}`", WEATHER_HEADER[k + 2])))?;
            }
        }
        let raw_cat = get(10);
        let weather = if raw_cat.is_empty() {
            None
        } else {
            let (c, warning) = WeatherCategory::parse_or_other(raw_cat);
            if let Some(w) = warning {
                table.warnings.push(format!("line {line}: {w}"));
            }
            Some(c)
        };
        let record = WeatherRecord {
            temp: nums[0],
            feels_like: nums[1],
            pressure: nums[2],
            humidity: nums[3],
            dew_point: nums[4],
            clouds: nums[5],
            wind_speed: nums[6],
            wind_deg: nums[7],
            weather,
        };
        record.validate().map_err(|e| bad(e.to_string()))?;
        let pair = table.records.entry(get(0).to_string()).or_default();
        match get(1) {
            "start" => pair.start = record,
            "end" => pair.end = record,
            other => return Err(bad(format!("point must be `start` or `end`, got `{other}`"))),
        }
    }
    Ok(table)
}

pub fn write_weather<W: Write>(
    mut writer: W,
    rows: &[(String, WeatherPair)],
    preamble: &[String],
) -> Result<(), FeatureError> {
    for line in preamble {
        writeln!(writer, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(WEATHER_HEADER)?;
    let fmt = |v: f64| if v.is_nan() { String::new() } else { v.to_string() };
    for (id, pair) in rows {
        for (label, r) in [("start", &pair.start), ("end", &pair.end)] {
            w.write_record([
                id.clone(),
                label.to_string(),
                fmt(r.temp),
                fmt(r.feels_like),
                fmt(r.pressure),
                fmt(r.humidity),
                fmt(r.dew_point),
                fmt(r.clouds),
                fmt(r.wind_speed),
                fmt(r.wind_deg),
                r.weather.map_or(String::new(), |c| c.to_string()),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{destination, EARTH_RADIUS_NM};

    fn pt(ts: i64, lat: f64, lon: f64, alt: f64, heading: f64) -> TrackPoint {
        TrackPoint::new(ts, lat, lon, alt, 240.0, heading).unwrap()
    }

    fn seg(d_alt: f64, dist_nm: f64) -> Segment {
        let a = pt(0, 25.0, 51.0, 10_000.0, 0.0);
        let b = pt(1, 25.0, 51.0, 10_000.0 + d_alt, 0.0);
        Segment {
            from: a,
            to: b,
            dist_nm,
            d_alt_ft: d_alt,
            heading_change_deg: 0.0,
        }
    }

    fn spherical_cosine_nm(a: (f64, f64), b: (f64, f64)) -> f64 {
        let (p1, p2) = (a.0.to_radians(), b.0.to_radians());
        let dl = (b.1 - a.1).to_radians();
        let c = p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos();
        EARTH_RADIUS_NM * c.clamp(-1.0, 1.0).acos()
    }

    #[test]
    fn great_circle_matches_law_of_cosines() {
        let a = (25.2854, 51.6080);
        let b = (25.2854, 52.6080);
        let d = great_circle_nm(a, b);
        assert!((d - spherical_cosine_nm(a, b)).abs() < 1e-6);
        assert!((d - great_circle_nm(b, a)).abs() < 1e-12);
    }

    #[test]
    fn segments_of_hand_built_descent() {
        let pts = vec![
            pt(0, 25.6, 51.5, 12_000.0, 180.0),
            pt(20, 25.55, 51.52, 11_700.0, 170.0),
            pt(40, 25.50, 51.55, 11_700.0, 150.0),
            pt(60, 25.44, 51.56, 11_200.0, 175.0),
        ];
        let t = ArrivalTrack::new("F", pts.clone()).unwrap();
        let segs = segment_track(&t);
        assert_eq!(segs.len(), 3);
        let d_alts = [-300.0, 0.0, -500.0];
        let turns = [10.0, 20.0, 25.0];
        for (i, s) in segs.iter().enumerate() {
            let oracle = spherical_cosine_nm(pts[i].position(), pts[i + 1].position());
            assert!((s.dist_nm - oracle).abs() < 1e-6, "segment {i}");
            assert_eq!(s.d_alt_ft, d_alts[i]);
            assert!((s.heading_change_deg - turns[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn three_point_track_has_two_segments() {
        let t = ArrivalTrack::new(
            "F",
            vec![
                pt(0, 25.3, 51.5, 9000.0, 350.0),
                pt(1, 25.2, 51.5, 8900.0, 10.0),
                pt(2, 25.1, 51.5, 8800.0, 10.0),
            ],
        )
        .unwrap();
        let segs = segment_track(&t);
        assert_eq!(segs.len(), 2);
        assert!((segs[0].heading_change_deg - 20.0).abs() < 1e-12);
    }

    #[test]
    fn compliance_predicate() {
        // -300 ft over 1 NM: gradient 300 / 6076.12 = 0.04937
        assert!(is_cdo_segment(&seg(-300.0, 1.0), 0.005).unwrap());
        assert!(!is_cdo_segment(&seg(0.0, 1.0), 0.005).unwrap());
        assert!(!is_cdo_segment(&seg(200.0, 1.0), 0.005).unwrap());
        // 20 ft over 1 NM is a shallow level-off, gradient 0.0033
        assert!(!is_cdo_segment(&seg(-20.0, 1.0), 0.005).unwrap());
        assert!(matches!(
            is_cdo_segment(&seg(-300.0, 0.0), 0.005),
            Err(FeatureError::ZeroLengthSegment { .. })
        ));
    }

    #[test]
    fn adherence_arithmetic() {
        let mut segs: Vec<Segment> = (0..6).map(|_| seg(-300.0, 1.0)).collect();
        segs.extend((0..4).map(|_| seg(0.0, 1.0)));
        assert_eq!(cdo_adherence(&segs, 0.005).unwrap(), 0.6);
        assert_eq!(cdo_adherence(&segs[..6], 0.005).unwrap(), 1.0);
        assert_eq!(cdo_adherence(&segs[6..], 0.005).unwrap(), 0.0);
        assert!(matches!(cdo_adherence(&[], 0.005), Err(FeatureError::EmptySegments)));
    }

    #[test]
    fn category_thresholds() {
        assert_eq!(cdocat(0.20).unwrap(), CdoCategory::Low);
        assert_eq!(cdocat(0.40).unwrap(), CdoCategory::Medium);
        assert_eq!(cdocat(0.60).unwrap(), CdoCategory::High);
        assert_eq!(cdocat(0.30).unwrap(), CdoCategory::Medium);
        assert_eq!(cdocat(0.55).unwrap(), CdoCategory::High);
        assert_eq!(cdocat(0.0).unwrap(), CdoCategory::Low);
        assert_eq!(cdocat(1.0).unwrap(), CdoCategory::High);
        assert!(matches!(cdocat(1.2), Err(FeatureError::OutOfRange(_))));
        assert!(cdocat(f64::NAN).is_err());
        assert!(CdoThresholds::new(0.6, 0.5).is_err());
    }

    fn tma() -> TmaConfig {
        TmaConfig::new(25.27, 51.6, 60.0, 3500.0).unwrap()
    }

    #[test]
    fn straight_in_three_degree_descent() {
        let c = tma();
        let start = destination(c.center(), 10.0, 40.0);
        let per_nm = 3f64.to_radians().tan() * FEET_PER_NM;
        let pts: Vec<TrackPoint> = (0..30)
            .map(|i| {
                let (lat, lon) = destination(start, 190.0, i as f64);
                pt(i * 15, lat, lon, 12_000.0 - per_nm * i as f64, 190.0)
            })
            .collect();
        let t = ArrivalTrack::new("F", pts).unwrap();
        let segs = segment_track(&t);
        let f = extract_operational_features(&t, &segs, &c, &FeatureConfig::default()).unwrap();
        assert!((f.mdrate - 3f64.to_radians().tan()).abs() < 1e-9);
        assert_eq!(f.mdirection, 0.0);
        assert_eq!(f.flt_segments, 29);
        assert!((f.distance_nm - 29.0).abs() < 1e-9);
        assert_eq!(f.sector, Sector::North);
    }

    #[test]
    fn five_point_track_all_operational_fields() {
        // points along the 51.6E meridian, one arc-minute apart
        let c = tma();
        let lats = [
            25.9,
            25.9 - 1.0 / 60.0,
            25.9 - 2.0 / 60.0,
            25.9 - 3.0 / 60.0,
            25.9 - 4.0 / 60.0,
        ];
        let alts = [10_000.0, 9_800.0, 9_800.0, 9_500.0, 9_600.0];
        let speeds = [260.0, 250.0, 240.0, 230.0, 220.0];
        let headings = [180.0, 182.0, 178.0, 178.0, 190.0];
        let pts: Vec<TrackPoint> = (0..5)
            .map(|i| TrackPoint::new(i as i64 * 10, lats[i], 51.6, alts[i], speeds[i], headings[i]).unwrap())
            .collect();
        let t = ArrivalTrack::new("F", pts).unwrap();
        let segs = segment_track(&t);
        let f = extract_operational_features(&t, &segs, &c, &FeatureConfig::default()).unwrap();

        let arc_nm = EARTH_RADIUS_NM * (1.0f64 / 60.0).to_radians();
        let arc_ft = arc_nm * FEET_PER_NM;
        assert_eq!(f.sector, Sector::North);
        assert_eq!(f.altitude, 10_000.0);
        // segment means: 255, 245, 235, 225
        assert!((f.mspeed - 240.0).abs() < 1e-12);
        // descending segments: 200 ft and 300 ft over one arc-minute each
        assert!((f.mdrate - (200.0 / arc_ft + 300.0 / arc_ft) / 2.0).abs() < 1e-9);
        assert_eq!(f.flt_segments, 4);
        assert!((f.distance_nm - 4.0 * arc_nm).abs() < 1e-9);
        // turns: 2, 4, 0, 12
        assert!((f.mdirection - 4.5).abs() < 1e-12);
        assert_eq!((f.start_lati, f.start_long), (25.9, 51.6));
        assert_eq!((f.end_lati, f.end_long), (lats[4], 51.6));
    }

    fn wx(cat: WeatherCategory) -> WeatherRecord {
        WeatherRecord {
            temp: 90.0,
            feels_like: 95.0,
            pressure: 1008.0,
            humidity: 45.0,
            dew_point: 66.0,
            clouds: 20.0,
            wind_speed: 9.0,
            wind_deg: 320.0,
            weather: Some(cat),
        }
    }

    fn profile() -> FlightProfile {
        let t = ArrivalTrack::new(
            "F",
            vec![pt(0, 25.6, 51.6, 9000.0, 180.0), pt(10, 25.5, 51.6, 8500.0, 180.0)],
        )
        .unwrap();
        profile_track(&t, &tma(), &FeatureConfig::default()).unwrap()
    }

    #[test]
    fn weather_join_and_vocabulary() {
        let f = join_weather(profile(), wx(WeatherCategory::Dust), wx(WeatherCategory::Dust)).unwrap();
        let row = f.to_row();
        assert_eq!(row[11..20], row[20..29]);
        assert!(row.iter().all(|v| v.is_finite()));
        assert_eq!(row[19], 5.0);

        let (c, warn) = WeatherCategory::parse_or_other("Drizzle");
        assert_eq!(c, WeatherCategory::Other);
        assert!(warn.is_some());
        assert_eq!("Clouds".parse::<WeatherCategory>().unwrap(), WeatherCategory::Clouds);
        assert!(matches!(
            "Drizzle".parse::<WeatherCategory>(),
            Err(FeatureError::UnknownWeatherCategory(_))
        ));

        let mut bad = wx(WeatherCategory::Clear);
        bad.humidity = 140.0;
        assert!(join_weather(profile(), bad, wx(WeatherCategory::Clear)).is_err());
    }

    #[test]
    fn assemble_shapes_and_incomplete_rows() {
        let f = join_weather(profile(), wx(WeatherCategory::Clear), wx(WeatherCategory::Rain)).unwrap();
        let ds = assemble_dataset(&[f.clone(), f.clone()]).unwrap();
        assert_eq!((ds.matrix.n_rows(), ds.matrix.n_cols()), (2, 29));
        assert_eq!(ds.feature_index("MDRate"), Some(3));

        let mut g = f.clone();
        g.end_weather.pressure = f64::NAN;
        match assemble_dataset(&[f, g]) {
            Err(FeatureError::IncompleteRow { missing, .. }) => assert_eq!(missing, vec!["end_pressure"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dataset_csv_round_trip_and_stable_header() {
        let f = join_weather(profile(), wx(WeatherCategory::Haze), wx(WeatherCategory::Mist)).unwrap();
        let ds = assemble_dataset(&[f]).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_dataset(&mut a, &ds, &["seed=1".into()]).unwrap();
        write_dataset(&mut b, &ds, &["seed=1".into()]).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a.clone()).unwrap();
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("flight_id,Sector,Altitude,MSpeed,MDRate"));
        assert_eq!(read_dataset(a.as_slice()).unwrap(), ds);
    }

    #[test]
    fn weather_csv_round_trip_with_gaps() {
        let mut pair = WeatherPair {
            start: wx(WeatherCategory::Clear),
            end: wx(WeatherCategory::Thunderstorm),
        };
        pair.end.pressure = f64::NAN;
        let mut buf = Vec::new();
        write_weather(&mut buf, &[("F".into(), pair)], &[]).unwrap();
        let table = read_weather(buf.as_slice()).unwrap();
        let got = table.records["F"];
        assert_eq!(got.start, pair.start);
        assert!(got.end.pressure.is_nan());
        assert_eq!(got.end.weather, Some(WeatherCategory::Thunderstorm));
    }
}
