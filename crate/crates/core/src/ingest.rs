//! Arrival-track ingestion: CSV parsing, terminal-area clipping and entry
//! sector classification.
//!
//! Track files are comma-separated with the header
//! `flight_id,timestamp,lat,lon,alt_ft,gspeed_kt,heading_deg`. Lines starting
//! with `#` are treated as comments so generated files can carry a
//! provenance preamble.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{great_circle_nm, initial_bearing_deg};

/// Column names of the track CSV schema, in canonical order.
pub const TRACK_COLUMNS: [&str; 7] = [
    "flight_id",
    "timestamp",
    "lat",
    "lon",
    "alt_ft",
    "gspeed_kt",
    "heading_deg",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing column `{0}` in track header")]
    MissingColumn(String),
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("track file contains no data rows")]
    EmptyFile,
    #[error("flight {flight_id}: only {kept} point(s) left, need at least 2")]
    TooFewPoints { flight_id: String, kept: usize },
    #[error("flight {flight_id}: entry bearing {bearing:.1} deg is outside the North/East sectors")]
    UnsupportedSector { flight_id: String, bearing: f64 },
    #[error("invalid track: {0}")]
    InvalidTrack(String),
    #[error("invalid terminal-area configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// One surveillance sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    /// UTC seconds since the epoch.
    pub timestamp: i64,
    pub lat: f64,
    pub lon: f64,
    /// Altitude in feet.
    pub alt: f64,
    /// Ground speed in knots.
    pub gspeed: f64,
    /// Heading in degrees, `[0, 360)`.
    pub heading: f64,
}

impl TrackPoint {
    /// Builds a point, rejecting out-of-range fields.
    pub fn new(timestamp: i64, lat: f64, lon: f64, alt: f64, gspeed: f64, heading: f64) -> Result<Self, String> {
        let p = TrackPoint {
            timestamp,
            lat,
            lon,
            alt,
            gspeed,
            heading,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.lat.is_finite() && (-90.0..=90.0).contains(&self.lat)) {
            return Err(format!("lat {} outside [-90, 90]", self.lat));
        }
        if !(self.lon.is_finite() && (-180.0..=180.0).contains(&self.lon)) {
            return Err(format!("lon {} outside [-180, 180]", self.lon));
        }
        if !(self.alt.is_finite() && self.alt >= 0.0) {
            return Err(format!("alt_ft {} must be >= 0", self.alt));
        }
        if !(self.gspeed.is_finite() && self.gspeed >= 0.0) {
            return Err(format!("gspeed_kt {} must be >= 0", self.gspeed));
        }
        if !(self.heading.is_finite() && (0.0..360.0).contains(&self.heading)) {
            return Err(format!("heading_deg {} outside [0, 360)", self.heading));
        }
        Ok(())
    }

    pub fn position(&self) -> (f64, f64) {
        (self.lat, self.lon)
    }
}

/// The arrival-phase samples of one flight, ordered by time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalTrack {
    pub flight_id: String,
    pub points: Vec<TrackPoint>,
}

impl ArrivalTrack {
    /// Builds a track, requiring at least two points with strictly
    /// increasing timestamps.
    pub fn new(flight_id: impl Into<String>, points: Vec<TrackPoint>) -> Result<Self, IngestError> {
        let flight_id = flight_id.into();
        if points.len() < 2 {
            return Err(IngestError::TooFewPoints {
                flight_id,
                kept: points.len(),
            });
        }
        if let Some(w) = points.windows(2).find(|w| w[1].timestamp <= w[0].timestamp) {
            return Err(IngestError::InvalidTrack(format!(
                "flight {flight_id}: timestamp {} does not follow {}",
                w[1].timestamp, w[0].timestamp
            )));
        }
        Ok(ArrivalTrack { flight_id, points })
    }

    pub fn first(&self) -> &TrackPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &TrackPoint {
        &self.points[self.points.len() - 1]
    }
}

/// Terminal manoeuvring area, modelled as a great-circle disc plus an
/// altitude floor below which the arrival is considered finished.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TmaConfig {
    pub center_lat: f64,
    pub center_lon: f64,
    pub radius_nm: f64,
    pub altitude_floor_ft: f64,
}

impl TmaConfig {
    pub const DEFAULT_FLOOR_FT: f64 = 3500.0;

    pub fn new(center_lat: f64, center_lon: f64, radius_nm: f64, altitude_floor_ft: f64) -> Result<Self, IngestError> {
        let cfg = TmaConfig {
            center_lat,
            center_lon,
            radius_nm,
            altitude_floor_ft,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if !(self.center_lat.is_finite() && (-90.0..=90.0).contains(&self.center_lat)) {
            return Err(IngestError::InvalidConfig(format!("center_lat {}", self.center_lat)));
        }
        if !(self.center_lon.is_finite() && (-180.0..=180.0).contains(&self.center_lon)) {
            return Err(IngestError::InvalidConfig(format!("center_lon {}", self.center_lon)));
        }
        if !(self.radius_nm.is_finite() && self.radius_nm > 0.0) {
            return Err(IngestError::InvalidConfig(format!(
                "radius_nm must be > 0, got {}",
                self.radius_nm
            )));
        }
        if !(self.altitude_floor_ft.is_finite() && self.altitude_floor_ft >= 0.0) {
            return Err(IngestError::InvalidConfig(format!(
                "altitude floor must be >= 0, got {}",
                self.altitude_floor_ft
            )));
        }
        Ok(())
    }

    pub fn center(&self) -> (f64, f64) {
        (self.center_lat, self.center_lon)
    }

    /// Boundary points count as inside.
    pub fn in_geofence(&self, p: &TrackPoint) -> bool {
        great_circle_nm(self.center(), p.position()) <= self.radius_nm
    }

    pub fn above_floor(&self, p: &TrackPoint) -> bool {
        p.alt >= self.altitude_floor_ft
    }

    pub fn retains(&self, p: &TrackPoint) -> bool {
        self.in_geofence(p) && self.above_floor(p)
    }
}

/// Entry sector of an arrival relative to the airport reference point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sector {
    North,
    East,
}

impl Sector {
    /// Numeric encoding used in the feature matrix.
    pub fn code(self) -> f64 {
        match self {
            Sector::North => 0.0,
            Sector::East => 1.0,
        }
    }

    pub fn from_code(code: f64) -> Option<Self> {
        if code == 0.0 {
            Some(Sector::North)
        } else if code == 1.0 {
            Some(Sector::East)
        } else {
            None
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sector::North => f.write_str("North"),
            Sector::East => f.write_str("East"),
        }
    }
}

/// Parsed tracks plus any non-fatal diagnostics raised while reading.
#[derive(Debug, Clone, Default)]
pub struct TrackSet {
    pub tracks: Vec<ArrivalTrack>,
    pub warnings: Vec<String>,
}

pub fn parse_track_csv(path: impl AsRef<Path>) -> Result<TrackSet, IngestError> {
    read_tracks(File::open(path)?)
}

/// Reads a track CSV. Tracks come back in order of first appearance of
/// their `flight_id`; points are sorted by timestamp and, among equal
/// timestamps, the first row in file order is kept.
pub fn read_tracks<R: Read>(reader: R) -> Result<TrackSet, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 7];
    for (slot, name) in idx.iter_mut().zip(TRACK_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))?;
    }

    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<TrackPoint>> = HashMap::new();
    let mut n_rows = 0usize;
    for result in rdr.records() {
        let record = result.map_err(|e| match e.position() {
            Some(pos) => IngestError::MalformedRow {
                line: pos.line(),
                reason: e.to_string(),
            },
            None => IngestError::Csv(e),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |reason: String| IngestError::MalformedRow { line, reason };
        let field = |i: usize| record.get(i).unwrap_or("");

        let flight_id = field(idx[0]);
        if flight_id.is_empty() {
            return Err(malformed("empty flight_id".into()));
        }
        let timestamp: i64 = field(idx[1])
            .parse()
            .map_err(|_| malformed(format!("timestamp `{}` is not an integer", field(idx[1]))))?;
        let mut nums = [0.0f64; 5];
        for (k, n) in nums.iter_mut().enumerate() {
            let raw = field(idx[k + 2]);
            *n = raw
                .parse()
                .map_err(|_| malformed(format!("{} `{raw}` is not a number", TRACK_COLUMNS[k + 2])))?;
        }
        let point = TrackPoint::new(timestamp, nums[0], nums[1], nums[2], nums[3], nums[4]).map_err(malformed)?;

        n_rows += 1;
        match rows.get_mut(flight_id) {
            Some(v) => v.push(point),
            None => {
                order.push(flight_id.to_string());
                rows.insert(flight_id.to_string(), vec![point]);
            }
        }
    }
    if n_rows == 0 {
        return Err(IngestError::EmptyFile);
    }

    let mut set = TrackSet::default();
    for flight_id in order {
        let mut points = rows.remove(&flight_id).unwrap_or_default();
        points.sort_by_key(|p| p.timestamp);
        let before = points.len();
        points.dedup_by(|later, earlier| later.timestamp == earlier.timestamp);
        if points.len() < before {
            let msg = format!(
                "flight {flight_id}: dropped {} row(s) with duplicated timestamps",
                before - points.len()
            );
            warn!("{msg}");
            set.warnings.push(msg);
        }
        match ArrivalTrack::new(flight_id, points) {
            Ok(t) => set.tracks.push(t),
            Err(e) => {
                let msg = format!("skipping track: {e}");
                warn!("{msg}");
                set.warnings.push(msg);
            }
        }
    }
    Ok(set)
}

/// Writes tracks in canonical column order. Each line of `preamble` is
/// emitted as a `#` comment before the header.
pub fn write_tracks<W: Write>(writer: W, tracks: &[ArrivalTrack], preamble: &[String]) -> Result<(), IngestError> {
    let mut writer = writer;
    for line in preamble {
        writeln!(writer, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACK_COLUMNS)?;
    for t in tracks {
        for p in &t.points {
            w.write_record([
                t.flight_id.clone(),
                p.timestamp.to_string(),
                p.lat.to_string(),
                p.lon.to_string(),
                p.alt.to_string(),
                p.gspeed.to_string(),
                p.heading.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Keeps the first contiguous run of samples that lie inside the disc and
/// at or above the altitude floor. The arrival ends at the first sample
/// that leaves the disc or descends below the floor.
pub fn clip_to_tma(track: &ArrivalTrack, cfg: &TmaConfig) -> Result<ArrivalTrack, IngestError> {
    let kept: Vec<TrackPoint> = track
        .points
        .iter()
        .skip_while(|p| !cfg.retains(p))
        .take_while(|p| cfg.retains(p))
        .copied()
        .collect();
    ArrivalTrack::new(track.flight_id.clone(), kept)
}

/// Sector of the first sample, measured as the bearing from the airport
/// reference point: `[315, 45)` is North, `[45, 135)` is East.
pub fn entry_sector(track: &ArrivalTrack, cfg: &TmaConfig) -> Result<Sector, IngestError> {
    let bearing = initial_bearing_deg(cfg.center(), track.first().position());
    if !(45.0..315.0).contains(&bearing) {
        Ok(Sector::North)
    } else if bearing < 135.0 {
        Ok(Sector::East)
    } else {
        Err(IngestError::UnsupportedSector {
            flight_id: track.flight_id.clone(),
            bearing,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::destination;

    const HEADER: &str = "flight_id,timestamp,lat,lon,alt_ft,gspeed_kt,heading_deg\n";

    fn tma() -> TmaConfig {
        TmaConfig::new(25.27, 51.6, 60.0, 3500.0).unwrap()
    }

    fn point_at(ts: i64, bearing: f64, dist: f64, alt: f64) -> TrackPoint {
        let (lat, lon) = destination(tma().center(), bearing, dist);
        TrackPoint::new(ts, lat, lon, alt, 250.0, 180.0).unwrap()
    }

    #[test]
    fn two_flights_three_rows_each() {
        let csv = format!(
            "{HEADER}A,1,25,51,9000,250,10\nB,1,25,51,9000,250,10\nA,2,25.1,51,8800,250,10\n\
             B,2,25.1,51,8800,250,10\nA,3,25.2,51,8600,250,10\nB,3,25.2,51,8600,250,10\n"
        );
        let set = read_tracks(csv.as_bytes()).unwrap();
        assert_eq!(set.tracks.len(), 2);
        assert!(set.tracks.iter().all(|t| t.points.len() == 3));
        assert_eq!(set.tracks[0].flight_id, "A");
        assert!(set.warnings.is_empty());
    }

    #[test]
    fn heading_out_of_range_reports_line() {
        let csv = format!(
            "{HEADER}A,1,25,51,9000,250,10\nA,2,25,51,9000,250,10\nA,3,25,51,9000,250,10\n\
             A,4,25,51,9000,250,10\nA,5,25,51,9000,250,10\nA,6,25,51,9000,250,361\n"
        );
        match read_tracks(csv.as_bytes()) {
            Err(IngestError::MalformedRow { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_timestamp_keeps_first_row() {
        let csv = format!(
            "{HEADER}A,10,25.0,51,9000,250,10\nA,20,25.1,51,8800,250,10\n\
             A,20,25.9,51,1234,250,10\nA,30,25.2,51,8600,250,10\n"
        );
        let set = read_tracks(csv.as_bytes()).unwrap();
        let t = &set.tracks[0];
        assert_eq!(t.points.len(), 3);
        assert_eq!(t.points[1].alt, 8800.0);
        assert_eq!(set.warnings.len(), 1);
    }

    #[test]
    fn rows_are_sorted_by_timestamp() {
        let csv = format!("{HEADER}A,30,25,51,8000,250,10\nA,10,25,51,9000,250,10\n");
        let set = read_tracks(csv.as_bytes()).unwrap();
        assert_eq!(set.tracks[0].points[0].timestamp, 10);
    }

    #[test]
    fn missing_column_and_empty_file() {
        let csv = "flight_id,timestamp,lat,lon,alt_ft,gspeed_kt\nA,1,25,51,9000,250\n";
        assert!(matches!(
            read_tracks(csv.as_bytes()),
            Err(IngestError::MissingColumn(c)) if c == "heading_deg"
        ));
        assert!(matches!(read_tracks(HEADER.as_bytes()), Err(IngestError::EmptyFile)));
    }

    #[test]
    fn unparseable_number() {
        let csv = format!("{HEADER}A,1,25,abc,9000,250,10\n");
        assert!(matches!(
            read_tracks(csv.as_bytes()),
            Err(IngestError::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn comments_are_skipped() {
        let csv = format!("# seed=1\n{HEADER}A,1,25,51,9000,250,10\nA,2,25,51,8000,250,10\n");
        assert_eq!(read_tracks(csv.as_bytes()).unwrap().tracks.len(), 1);
    }

    #[test]
    fn clip_identity_when_all_inside() {
        let pts = (0..5).map(|i| point_at(i, 10.0, 40.0 - i as f64, 9000.0 - 100.0 * i as f64));
        let t = ArrivalTrack::new("A", pts.collect()).unwrap();
        assert_eq!(clip_to_tma(&t, &tma()).unwrap(), t);
    }

    #[test]
    fn clip_drops_samples_below_floor() {
        let mut pts: Vec<_> = (0..10)
            .map(|i| point_at(i, 10.0, 40.0 - i as f64, 6000.0 - 100.0 * i as f64))
            .collect();
        for (k, p) in pts.iter_mut().skip(5).enumerate() {
            p.alt = 3400.0 - 10.0 * k as f64;
        }
        let t = ArrivalTrack::new("A", pts.clone()).unwrap();
        let c = clip_to_tma(&t, &tma()).unwrap();
        assert_eq!(c.points, pts[..5].to_vec());
    }

    #[test]
    fn clip_skips_pre_entry_samples_and_keeps_boundary() {
        let pts = vec![
            point_at(0, 10.0, 62.0, 9000.0),
            point_at(1, 10.0, 61.0, 8900.0),
            point_at(2, 10.0, 59.0, 8800.0),
            point_at(3, 10.0, 58.0, 8700.0),
        ];
        let t = ArrivalTrack::new("A", pts.clone()).unwrap();
        let c = clip_to_tma(&t, &tma()).unwrap();
        assert_eq!(c.points, pts[2..].to_vec());

        // a point exactly on the boundary counts as inside
        let p = pts[2];
        let cfg = TmaConfig {
            radius_nm: great_circle_nm(tma().center(), p.position()),
            ..tma()
        };
        assert!(cfg.in_geofence(&p));
    }

    #[test]
    fn clip_outside_is_too_few_points() {
        let pts = (0..4).map(|i| point_at(i, 10.0, 100.0 - i as f64, 9000.0));
        let t = ArrivalTrack::new("A", pts.collect()).unwrap();
        assert!(matches!(
            clip_to_tma(&t, &tma()),
            Err(IngestError::TooFewPoints { kept: 0, .. })
        ));
    }

    #[test]
    fn sectors_on_axes() {
        let mk = |brg: f64| {
            ArrivalTrack::new(
                "A",
                vec![point_at(0, brg, 30.0, 9000.0), point_at(1, brg, 29.0, 8900.0)],
            )
            .unwrap()
        };
        assert_eq!(entry_sector(&mk(0.0), &tma()).unwrap(), Sector::North);
        assert_eq!(entry_sector(&mk(330.0), &tma()).unwrap(), Sector::North);
        assert_eq!(entry_sector(&mk(90.0), &tma()).unwrap(), Sector::East);
        assert!(matches!(
            entry_sector(&mk(180.0), &tma()),
            Err(IngestError::UnsupportedSector { .. })
        ));
        assert!(entry_sector(&mk(270.0), &tma()).is_err());
    }

    #[test]
    fn track_invariants() {
        let p = point_at(5, 0.0, 10.0, 9000.0);
        assert!(ArrivalTrack::new("A", vec![p]).is_err());
        assert!(ArrivalTrack::new("A", vec![p, p]).is_err());
        assert!(TmaConfig::new(25.0, 51.0, 0.0, 3500.0).is_err());
        assert!(TmaConfig::new(25.0, 51.0, 10.0, -1.0).is_err());
    }
}
