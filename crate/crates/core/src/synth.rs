//! Seeded synthetic arrivals with known segment compliance.
//!
//! Each flight is planned first (segment count, level-off runs, mean descent
//! gradient, mean heading change, path length), then laid out on the sphere
//! inside the terminal area. Level-offs are exact zero-altitude-change
//! segments; every other segment descends with a gradient well above the
//! compliance threshold. A few samples outside the disc precede the entry
//! and a few below the floor follow the exit, so clipping has work to do.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{
    assemble_dataset, is_cdo_segment, join_weather, profile_track, segment_track, CdoCategory, Dataset, FeatureConfig,
    FeatureError, WeatherCategory, WeatherPair, WeatherRecord,
};
use crate::fexai::{Consequent, FexaiError, FuzzyFeature, FuzzySystem, RuleBase};
use crate::geo::{destination, great_circle_nm, initial_bearing_deg, normalize_deg, FEET_PER_NM};
use crate::ingest::{clip_to_tma, ArrivalTrack, IngestError, TmaConfig, TrackPoint};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible spec: {0}")]
    InfeasibleSpec(String),
    #[error("flight {flight}: {reason}")]
    Inconsistent { flight: String, reason: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Fexai(#[from] FexaiError),
}

/// Closed interval `[lo, hi]` sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }

    fn valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

/// Geometric-mode adherence: `base + step * c + noise`, where `c` counts how
/// many of `MDRate > mdrate_pivot`, `FltSegments < segments_pivot` and
/// `MDirection > mdirection_pivot` hold and the noise is uniform in
/// `[-noise, noise]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricModel {
    pub mdrate_pivot: f64,
    pub segments_pivot: f64,
    pub mdirection_pivot: f64,
    pub base: f64,
    pub step: f64,
    pub noise: f64,
}

impl Default for GeometricModel {
    fn default() -> Self {
        GeometricModel {
            mdrate_pivot: 0.035,
            segments_pivot: 500.0,
            mdirection_pivot: 1.75,
            base: 0.15,
            step: 0.25,
            noise: 0.05,
        }
    }
}

impl GeometricModel {
    pub fn adherence<R: Rng>(&self, mdrate: f64, segments: usize, mdirection: f64, rng: &mut R) -> f64 {
        let c = u8::from(mdrate > self.mdrate_pivot)
            + u8::from((segments as f64) < self.segments_pivot)
            + u8::from(mdirection > self.mdirection_pivot);
        let noise = if self.noise > 0.0 {
            rng.random_range(-self.noise..=self.noise)
        } else {
            0.0
        };
        (self.base + self.step * c as f64 + noise).clamp(0.02, 0.98)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LabelMode {
    Geometric(GeometricModel),
    /// Antecedent cells are drawn from the rule base and each flight's
    /// adherence is placed inside the band its consequent requires.
    Rule {
        rules: RuleBase,
        system: FuzzySystem,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_flights: usize,
    pub seed: u64,
    pub tma: TmaConfig,
    pub features: FeatureConfig,
    pub mode: LabelMode,
    /// Mean descent gradient (ft/ft) over descending segments.
    pub mdrate: Range,
    pub segments: Range,
    /// Mean heading change per segment, degrees.
    pub mdirection: Range,
    pub path_nm: Range,
    pub entry_alt_ft: Range,
    pub gspeed_kt: Range,
    /// Entry radius as a fraction of the disc radius.
    pub entry_radius_frac: Range,
    pub max_level_run: usize,
    /// Spread of per-segment gradients and turns around their means.
    pub jitter: f64,
    pub start_time: i64,
    pub id_prefix: String,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_flights: 1000,
            seed: 42,
            tma: TmaConfig {
                center_lat: 25.2731,
                center_lon: 51.6081,
                radius_nm: 60.0,
                altitude_floor_ft: TmaConfig::DEFAULT_FLOOR_FT,
            },
            features: FeatureConfig::default(),
            mode: LabelMode::Geometric(GeometricModel::default()),
            mdrate: Range::new(0.010, 0.070),
            segments: Range::new(60.0, 1000.0),
            mdirection: Range::new(0.2, 3.5),
            path_nm: Range::new(12.0, 18.0),
            entry_alt_ft: Range::new(12000.0, 20000.0),
            gspeed_kt: Range::new(180.0, 280.0),
            entry_radius_frac: Range::new(0.95, 0.97),
            max_level_run: 8,
            jitter: 0.2,
            start_time: 1_700_000_000,
            id_prefix: "SYN".into(),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InfeasibleSpec(m.to_string()));
        for (name, r) in [
            ("mdrate", self.mdrate),
            ("segments", self.segments),
            ("mdirection", self.mdirection),
            ("path_nm", self.path_nm),
            ("entry_alt_ft", self.entry_alt_ft),
            ("gspeed_kt", self.gspeed_kt),
            ("entry_radius_frac", self.entry_radius_frac),
        ] {
            if !r.valid() {
                return bad(&format!("range {name} [{}, {}]", r.lo, r.hi));
            }
        }
        if !(0.0..0.5).contains(&self.jitter) {
            return bad("jitter must be in [0, 0.5)");
        }
        let min_grad = self.mdrate.lo * (1.0 - self.jitter) / (1.0 + self.jitter);
        if min_grad <= self.features.level_threshold * 1.2 {
            return bad("minimum segment gradient too close to the level threshold");
        }
        if self.segments.lo < 2.0 {
            return bad("need at least 2 segments");
        }
        if self.path_nm.lo <= 0.0 || self.gspeed_kt.lo <= 0.0 || self.max_level_run == 0 {
            return bad("path length, speed and level-run length must be positive");
        }
        if self.mdirection.lo < 0.0 || self.mdirection.hi * (1.0 + self.jitter) > 20.0 {
            return bad("mdirection out of range");
        }
        if self.entry_radius_frac.lo <= 0.5 || self.entry_radius_frac.hi >= 1.0 {
            return bad("entry radius fraction must be in (0.5, 1)");
        }
        // segments have equal length, so total descent is about mean gradient x path
        let worst = 1.01 * self.mdrate.hi * self.path_nm.hi * FEET_PER_NM;
        if self.entry_alt_ft.lo - worst < self.tma.altitude_floor_ft + 100.0 {
            return bad("entry altitude too low for the steepest, longest descent");
        }
        if self.path_nm.hi > self.entry_radius_frac.lo * self.tma.radius_nm {
            return bad("path longer than the distance to the airport");
        }
        if let LabelMode::Rule { rules, .. } = &self.mode {
            if rules.is_empty() {
                return bad("rule mode needs a non-empty rule base");
            }
        }
        Ok(())
    }
}

/// Per-flight plan before layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackPlan {
    pub n_segments: usize,
    pub level_offs: usize,
    /// `true` for descending segments, `false` for level-offs.
    pub compliance: Vec<bool>,
    pub mdrate: f64,
    pub mdirection: f64,
    pub path_nm: f64,
    pub entry_alt_ft: f64,
}

impl TrackPlan {
    /// Builds the compliance sequence with `level_offs` level segments
    /// grouped into runs of at most `max_run`.
    pub fn with_level_offs<R: Rng>(
        n: usize,
        level_offs: usize,
        max_run: usize,
        rng: &mut R,
    ) -> Result<Vec<bool>, SynthError> {
        if level_offs >= n {
            return Err(SynthError::InfeasibleSpec(format!(
                "{level_offs} level-offs in {n} segments"
            )));
        }
        let mut items: Vec<usize> = Vec::new();
        let mut left = level_offs;
        while left > 0 {
            let run = rng.random_range(1..=max_run.min(left));
            items.push(run);
            left -= run;
        }
        items.extend(std::iter::repeat_n(0, n - level_offs));
        items.shuffle(rng);
        let mut flags = Vec::with_capacity(n);
        for run in items {
            if run == 0 {
                flags.push(true);
            } else {
                flags.extend(std::iter::repeat_n(false, run));
            }
        }
        Ok(flags)
    }
}

/// Ground truth carried alongside a generated flight.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub flight_id: String,
    pub n_segments: usize,
    pub level_offs: usize,
    pub compliance: Vec<bool>,
    pub adherence: f64,
    pub category: CdoCategory,
    pub mdrate: f64,
    pub mdirection: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthFlight {
    /// Raw track including the samples clipping should drop.
    pub track: ArrivalTrack,
    pub truth: GroundTruth,
    pub weather: WeatherPair,
}

fn flight_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_F117_0000_0000);
    rng.set_stream(index as u64);
    rng
}

fn band_for(system: &FuzzySystem, feature: usize, set: u8, outer: Range) -> Range {
    let mf = &system.functions[feature];
    let margin = 0.05 * (mf.upper - mf.lower);
    match set {
        0 => Range::new(outer.lo.min(mf.lower - 2.0 * margin), mf.lower - margin),
        1 => Range::new(mf.lower + margin, mf.upper - margin),
        _ => Range::new(mf.upper + margin, outer.hi.max(mf.upper + 2.0 * margin)),
    }
}

/// Level-off count giving the adherence closest to `adherence`, keeping at
/// least one compliant segment.
fn level_offs_for(n: usize, adherence: f64) -> usize {
    let compliant = ((adherence * n as f64).round() as usize).clamp(1, n);
    n - compliant
}

/// Draws the per-flight plan.
pub fn plan_track(spec: &SynthSpec, index: usize) -> Result<TrackPlan, SynthError> {
    let mut rng = flight_rng(spec.seed, index);
    let (mdrate, n, mdirection, level_offs) = match &spec.mode {
        LabelMode::Geometric(model) => {
            let mdrate = spec.mdrate.sample(&mut rng);
            let n = spec.segments.sample(&mut rng).round() as usize;
            let mdirection = spec.mdirection.sample(&mut rng);
            let a = model.adherence(mdrate, n, mdirection, &mut rng);
            (mdrate, n, mdirection, level_offs_for(n, a))
        }
        LabelMode::Rule { rules, system } => {
            let rule = rules.rules()[rng.random_range(0..rules.len())];
            let sets = rule.antecedent.0;
            let mdrate = band_for(system, 0, sets[0], spec.mdrate).sample(&mut rng);
            let seg_band = band_for(system, 1, sets[1], spec.segments);
            let n = rng.random_range(seg_band.lo.ceil() as usize..=seg_band.hi.floor() as usize);
            let mdirection = band_for(system, 2, sets[2], spec.mdirection).sample(&mut rng);
            let t = spec.features.thresholds;
            let band = match rule.consequent {
                Consequent::Low => Range::new(0.05, t.low_upper - 0.05),
                Consequent::NotLow => Range::new(t.low_upper + 0.05, 0.95),
            };
            let mut k = level_offs_for(n, band.sample(&mut rng));
            // rounding must not move the flight across the Low boundary
            while k > 0 && rule.consequent == Consequent::NotLow && ((n - k) as f64 / n as f64) < t.low_upper {
                k -= 1;
            }
            while rule.consequent == Consequent::Low && ((n - k) as f64 / n as f64) >= t.low_upper {
                k += 1;
            }
            (mdrate, n, mdirection, k)
        }
    };
    if n < 2 {
        return Err(SynthError::InfeasibleSpec(format!("flight {index}: {n} segments")));
    }
    let compliance = TrackPlan::with_level_offs(n, level_offs, spec.max_level_run, &mut rng)?;
    Ok(TrackPlan {
        n_segments: n,
        level_offs,
        compliance,
        mdrate,
        mdirection,
        path_nm: spec.path_nm.sample(&mut rng),
        entry_alt_ft: spec.entry_alt_ft.sample(&mut rng),
    })
}

/// Positive weights with mean exactly 1.
fn unit_mean_weights<R: Rng>(n: usize, jitter: f64, rng: &mut R) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let w: Vec<f64> = (0..n)
        .map(|_| {
            if jitter > 0.0 {
                rng.random_range(1.0 - jitter..=1.0 + jitter)
            } else {
                1.0
            }
        })
        .collect();
    let mean = w.iter().sum::<f64>() / n as f64;
    w.into_iter().map(|v| v / mean).collect()
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

fn sample_weather<R: Rng>(rng: &mut R) -> WeatherRecord {
    let temp = rng.random_range(18.0..45.0f64);
    let humidity = rng.random_range(15.0..85.0f64).round();
    let weather = match rng.random_range(0..100) {
        0..60 => WeatherCategory::Clear,
        60..80 => WeatherCategory::Clouds,
        80..88 => WeatherCategory::Haze,
        88..94 => WeatherCategory::Dust,
        94..97 => WeatherCategory::Mist,
        97..99 => WeatherCategory::Rain,
        _ => WeatherCategory::Thunderstorm,
    };
    let round2 = |v: f64| (v * 100.0).round() / 100.0;
    WeatherRecord {
        temp: round2(temp),
        feels_like: round2(temp + rng.random_range(-2.0..6.0)),
        pressure: rng.random_range(995.0..1020.0f64).round(),
        humidity,
        dew_point: round2(temp - (100.0 - humidity) / 5.0),
        clouds: rng.random_range(0..=100) as f64,
        wind_speed: round2(rng.random_range(0.0..12.0)),
        wind_deg: rng.random_range(0..360) as f64,
        weather: Some(weather),
    }
}

/// Generates flight `index`: plan, layout, ground truth and weather.
pub fn gen_track(spec: &SynthSpec, index: usize) -> Result<SynthFlight, SynthError> {
    spec.validate()?;
    let plan = plan_track(spec, index)?;
    layout(spec, index, &plan)
}

fn layout(spec: &SynthSpec, index: usize, plan: &TrackPlan) -> Result<SynthFlight, SynthError> {
    let mut rng = flight_rng(spec.seed, index);
    rng.set_word_pos(1 << 40);
    let flight_id = format!("{}{:05}", spec.id_prefix, index);
    let tma = &spec.tma;
    let centre = tma.center();
    let n = plan.n_segments;

    // entry bearing inside the North or East sector, away from sector edges
    let entry_bearing = if rng.random_bool(0.5) {
        normalize_deg(rng.random_range(-38.0..38.0))
    } else {
        rng.random_range(52.0..128.0)
    };
    let entry_r = spec.entry_radius_frac.sample(&mut rng) * tma.radius_nm;
    let entry = destination(centre, entry_bearing, entry_r);

    let seg_len = plan.path_nm / n as f64;
    let turns: Vec<f64> = unit_mean_weights(n, spec.jitter, &mut rng)
        .into_iter()
        .map(|w| w * plan.mdirection)
        .collect();
    let desc = plan.compliance.iter().filter(|&&c| c).count();
    let mut grads = unit_mean_weights(desc, spec.jitter, &mut rng)
        .into_iter()
        .map(|w| w * plan.mdrate);

    // headings: start roughly inbound, then turn by the planned magnitudes,
    // steering back toward the airport when pointing too far away from it
    let mut positions = vec![entry];
    let mut headings = vec![normalize_deg(entry_bearing + 180.0 + rng.random_range(-20.0..20.0))];
    for (i, &turn) in turns.iter().enumerate() {
        let pos = positions[i];
        let hdg = headings[i];
        positions.push(destination(pos, hdg, seg_len));
        let to_centre = initial_bearing_deg(positions[i + 1], centre);
        let off = angle_diff(hdg, to_centre);
        let sign = if off.abs() > 40.0 {
            off.signum()
        } else if rng.random_bool(0.5) {
            1.0
        } else {
            -1.0
        };
        headings.push(normalize_deg(hdg + sign * turn));
    }

    // altitudes from actual segment lengths
    let mut alts = vec![plan.entry_alt_ft];
    for i in 0..n {
        let d = great_circle_nm(positions[i], positions[i + 1]);
        let next = if plan.compliance[i] {
            let g = grads.next().expect("one gradient per descending segment");
            alts[i] - g * d * FEET_PER_NM
        } else {
            alts[i]
        };
        alts.push(next);
    }

    let base_speed = spec.gspeed_kt.sample(&mut rng);
    let speed_at = |rng: &mut ChaCha8Rng| (base_speed + rng.random_range(-8.0..8.0f64)).max(1.0);
    let dt = ((seg_len / base_speed * 3600.0).round() as i64).max(1);
    let t0 = spec.start_time + index as i64 * 7200;

    let mut points = Vec::with_capacity(n + 7);
    // approach from outside the disc along the entry radial
    for (j, extra) in [3.0, 2.0, 1.0].into_iter().enumerate() {
        let p = destination(centre, entry_bearing, tma.radius_nm + extra);
        points.push((p, plan.entry_alt_ft + 300.0 * (3 - j) as f64, headings[0]));
    }
    for i in 0..=n {
        points.push((positions[i], alts[i], headings[i]));
    }
    // continue below the floor
    let mut tail_pos = positions[n];
    for j in 1..=3 {
        tail_pos = destination(tail_pos, headings[n], seg_len.max(0.05));
        let alt = (tma.altitude_floor_ft - 400.0 * j as f64).max(0.0);
        points.push((tail_pos, alt, headings[n]));
    }
    let points = points
        .into_iter()
        .enumerate()
        .map(|(j, ((lat, lon), alt, hdg))| {
            let p = TrackPoint {
                timestamp: t0 + j as i64 * dt,
                lat,
                lon,
                alt,
                gspeed: (speed_at(&mut rng) * 10.0).round() / 10.0,
                heading: hdg,
            };
            p.validate().map(|_| p)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|reason| SynthError::Inconsistent {
            flight: flight_id.clone(),
            reason,
        })?;
    let track = ArrivalTrack::new(flight_id.clone(), points)?;

    let in_disc = (0..=n).all(|i| great_circle_nm(centre, positions[i]) <= tma.radius_nm);
    if !in_disc || alts[n] < tma.altitude_floor_ft {
        return Err(SynthError::Inconsistent {
            flight: flight_id,
            reason: "layout left the terminal area".into(),
        });
    }

    let adherence = (n - plan.level_offs) as f64 / n as f64;
    let category = spec.features.thresholds.categorize(adherence)?;
    let weather = WeatherPair {
        start: sample_weather(&mut rng),
        end: sample_weather(&mut rng),
    };
    Ok(SynthFlight {
        track,
        truth: GroundTruth {
            flight_id,
            n_segments: n,
            level_offs: plan.level_offs,
            compliance: plan.compliance.clone(),
            adherence,
            category,
            mdrate: plan.mdrate,
            mdirection: plan.mdirection,
        },
        weather,
    })
}

#[derive(Debug, Clone)]
pub struct Fleet {
    pub flights: Vec<SynthFlight>,
    pub dataset: Dataset,
}

/// Generates all flights in parallel and pushes them through clipping,
/// feature extraction and weather joining. Generator ground truth is
/// checked against the scorer for every segment, and in rule mode every
/// label is checked against the rule base.
pub fn gen_fleet(spec: &SynthSpec) -> Result<Fleet, SynthError> {
    spec.validate()?;
    let flights: Vec<SynthFlight> = (0..spec.n_flights)
        .into_par_iter()
        .map(|i| gen_track(spec, i))
        .collect::<Result<_, _>>()?;
    let rows = flights
        .par_iter()
        .map(|f| features_for(spec, f))
        .collect::<Result<Vec<_>, _>>()?;
    let dataset = if rows.is_empty() {
        Dataset::empty()
    } else {
        assemble_dataset(&rows)?
    };
    Ok(Fleet { flights, dataset })
}

fn features_for(spec: &SynthSpec, f: &SynthFlight) -> Result<crate::features::FlightFeatures, SynthError> {
    let id = &f.truth.flight_id;
    let fail = |reason: String| SynthError::Inconsistent {
        flight: id.clone(),
        reason,
    };
    let clipped = clip_to_tma(&f.track, &spec.tma)?;
    let segs = segment_track(&clipped);
    if segs.len() != f.truth.n_segments {
        return Err(fail(format!(
            "{} segments after clipping, planned {}",
            segs.len(),
            f.truth.n_segments
        )));
    }
    for (i, (s, &truth)) in segs.iter().zip(&f.truth.compliance).enumerate() {
        if is_cdo_segment(s, spec.features.level_threshold)? != truth {
            return Err(fail(format!("segment {i} compliance disagrees with ground truth")));
        }
    }
    let profile = profile_track(&clipped, &spec.tma, &spec.features)?;
    if profile.cdocat != f.truth.category {
        return Err(fail("category disagrees with ground truth".into()));
    }
    if let LabelMode::Rule { rules, system } = &spec.mode {
        let op = &profile.operational;
        let values = [op.mdrate, op.flt_segments as f64, op.mdirection];
        let antecedent = system.antecedent(&values)?;
        let rule = rules
            .get(antecedent)
            .ok_or_else(|| fail(format!("antecedent {antecedent} not in the rule base")))?;
        let want = if profile.cdocat == CdoCategory::Low {
            Consequent::Low
        } else {
            Consequent::NotLow
        };
        if rule.consequent != want {
            return Err(fail(format!("label {} contradicts rule {}", profile.cdocat, rule)));
        }
    }
    Ok(join_weather(profile, f.weather.start, f.weather.end)?)
}

/// Names of the features whose values the generator controls directly.
pub fn generating_features() -> [&'static str; 3] {
    FuzzyFeature::ALL.map(FuzzyFeature::name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fexai::reference_rule_base;

    fn small(n: usize) -> SynthSpec {
        SynthSpec {
            n_flights: n,
            seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn level_off_sequence_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = TrackPlan::with_level_offs(10, 4, 3, &mut rng).unwrap();
        assert_eq!(f.len(), 10);
        assert_eq!(f.iter().filter(|&&c| !c).count(), 4);
        assert!(TrackPlan::with_level_offs(5, 5, 2, &mut rng).is_err());
        let none = TrackPlan::with_level_offs(6, 0, 2, &mut rng).unwrap();
        assert!(none.iter().all(|&c| c));
    }

    #[test]
    fn deterministic_per_index() {
        let spec = small(3);
        assert_eq!(gen_track(&spec, 2).unwrap(), gen_track(&spec, 2).unwrap());
        assert_ne!(gen_track(&spec, 1).unwrap().track, gen_track(&spec, 2).unwrap().track);
    }

    #[test]
    fn fleet_matches_ground_truth() {
        let spec = small(40);
        let fleet = gen_fleet(&spec).unwrap();
        assert_eq!(fleet.dataset.len(), 40);
        let mdr = fleet.dataset.feature_index("MDRate").unwrap();
        let md = fleet.dataset.feature_index("MDirection").unwrap();
        for (i, f) in fleet.flights.iter().enumerate() {
            let t = &f.truth;
            assert_eq!(
                fleet.dataset.cdo_adherence[i],
                (t.n_segments - t.level_offs) as f64 / t.n_segments as f64
            );
            assert!((fleet.dataset.matrix.get(i, mdr) - t.mdrate).abs() < 1e-9);
            assert!((fleet.dataset.matrix.get(i, md) - t.mdirection).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_fleet() {
        let fleet = gen_fleet(&small(0)).unwrap();
        assert!(fleet.dataset.is_empty());
    }

    #[test]
    fn rule_mode_is_consistent() {
        let spec = SynthSpec {
            n_flights: 60,
            mode: LabelMode::Rule {
                rules: reference_rule_base(),
                system: FuzzySystem::default(),
            },
            ..small(0)
        };
        assert_eq!(gen_fleet(&spec).unwrap().dataset.len(), 60);
    }

    #[test]
    fn infeasible_specs() {
        let mut spec = small(1);
        spec.mdrate = Range::new(0.004, 0.01);
        assert!(matches!(spec.validate(), Err(SynthError::InfeasibleSpec(_))));
        let mut spec = small(1);
        spec.entry_alt_ft = Range::new(4000.0, 5000.0);
        assert!(spec.validate().is_err());
    }
}
