//! Spherical-earth helpers shared by ingest, feature extraction and the
//! synthetic generator.

/// Mean earth radius in nautical miles.
pub const EARTH_RADIUS_NM: f64 = 3440.065;

/// Feet per nautical mile.
pub const FEET_PER_NM: f64 = 6076.12;

/// Great-circle (haversine) distance in nautical miles between two
/// `(lat, lon)` pairs given in degrees.
pub fn great_circle_nm(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let dlat = (lat2 - lat1) / 2.0;
    let dlon = (lon2 - lon1) / 2.0;
    let h = dlat.sin().powi(2) + lat1.cos() * lat2.cos() * dlon.sin().powi(2);
    2.0 * EARTH_RADIUS_NM * h.sqrt().min(1.0).asin()
}

/// Initial bearing from `a` to `b`, degrees in `[0, 360)`.
pub fn initial_bearing_deg(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let dlon = lon2 - lon1;
    let y = dlon.sin() * lat2.cos();
    let x = lat1.cos() * lat2.sin() - lat1.sin() * lat2.cos() * dlon.cos();
    normalize_deg(y.atan2(x).to_degrees())
}

/// Point reached from `origin` after travelling `dist_nm` along the
/// great circle with initial bearing `bearing_deg`.
pub fn destination(origin: (f64, f64), bearing_deg: f64, dist_nm: f64) -> (f64, f64) {
    let (lat1, lon1) = (origin.0.to_radians(), origin.1.to_radians());
    let brg = bearing_deg.to_radians();
    let delta = dist_nm / EARTH_RADIUS_NM;
    let lat2 = (lat1.sin() * delta.cos() + lat1.cos() * delta.sin() * brg.cos()).asin();
    let lon2 = lon1 + (brg.sin() * delta.sin() * lat1.cos()).atan2(delta.cos() - lat1.sin() * lat2.sin());
    let lon2 = (lon2.to_degrees() + 540.0).rem_euclid(360.0) - 180.0;
    (lat2.to_degrees(), lon2)
}

/// Wrap an angle into `[0, 360)`.
pub fn normalize_deg(deg: f64) -> f64 {
    let d = deg.rem_euclid(360.0);
    // rem_euclid can return 360.0 for tiny negative inputs
    if d >= 360.0 {
        0.0
    } else {
        d
    }
}

/// Smallest absolute angle between two headings, in `[0, 180]`.
pub fn heading_change_deg(from: f64, to: f64) -> f64 {
    let d = (to - from).abs().rem_euclid(360.0);
    d.min(360.0 - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_points_are_zero_apart() {
        assert_eq!(great_circle_nm((25.2854, 51.608), (25.2854, 51.608)), 0.0);
    }

    #[test]
    fn antipodal_meridian_arc() {
        let d = great_circle_nm((0.0, 0.0), (0.0, 180.0));
        assert!((d - std::f64::consts::PI * EARTH_RADIUS_NM).abs() < 1e-9);
    }

    #[test]
    fn bearing_axes() {
        let c = (25.0, 51.0);
        assert!((initial_bearing_deg(c, (26.0, 51.0)) - 0.0).abs() < 1e-9);
        assert!((initial_bearing_deg(c, (25.0, 52.0)) - 90.0).abs() < 1.0);
        assert!((initial_bearing_deg(c, (24.0, 51.0)) - 180.0).abs() < 1e-9);
    }

    #[test]
    fn destination_inverts_distance_and_bearing() {
        let o = (25.27, 51.6);
        let p = destination(o, 37.0, 12.5);
        assert!((great_circle_nm(o, p) - 12.5).abs() < 1e-9);
        assert!((initial_bearing_deg(o, p) - 37.0).abs() < 1e-9);
    }

    #[test]
    fn heading_wraparound() {
        assert!((heading_change_deg(350.0, 10.0) - 20.0).abs() < 1e-12);
        assert!((heading_change_deg(10.0, 350.0) - 20.0).abs() < 1e-12);
        assert_eq!(heading_change_deg(90.0, 90.0), 0.0);
        assert!((heading_change_deg(0.0, 180.0) - 180.0).abs() < 1e-12);
    }
}
