//! Coordinate transforms between WGS84 geographic coordinates, UTM and
//! local city frames.
//!
//! The forward and inverse projections use the 6th-order Krüger series for
//! the transverse Mercator projection on the WGS84 ellipsoid. Within a UTM
//! zone the series is accurate to well below a millimetre.
//!
//! The UTM zone is always supplied by the caller. Local city frames are a
//! plain translation of UTM coordinates by a fixed origin.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// WGS84 semi-major axis in metres.
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS84 inverse flattening.
pub const WGS84_INV_F: f64 = 298.257_223_563;
/// UTM central scale factor.
pub const UTM_K0: f64 = 0.9996;
/// UTM false easting in metres.
pub const UTM_FALSE_EASTING: f64 = 500_000.0;
/// UTM false northing applied in the southern hemisphere.
pub const UTM_FALSE_NORTHING_SOUTH: f64 = 10_000_000.0;
/// Maximum longitude offset from the central meridian accepted by
/// [`wgs84_to_utm`], in degrees.
pub const MAX_ZONE_OFFSET_DEG: f64 = 3.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("longitude {lon} is {offset:.3} deg from the central meridian of zone {zone} (max {max})", max = MAX_ZONE_OFFSET_DEG)]
    OutOfZone { lon: f64, zone: u8, offset: f64 },
    #[error("frame mismatch: point is in zone {point_zone}, frame '{frame}' is zone {frame_zone}")]
    FrameMismatch {
        point_zone: u8,
        frame: String,
        frame_zone: u8,
    },
    #[error("unknown city frame '{0}'")]
    UnknownFrame(String),
    #[error("frame config: {0}")]
    Config(String),
}

pub type Result<T, E = GeoError> = std::result::Result<T, E>;

/// A WGS84 latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = Self { lat, lon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lat.is_finite() || !self.lon.is_finite() {
            return Err(GeoError::InvalidInput(format!(
                "non-finite coordinate ({}, {})",
                self.lat, self.lon
            )));
        }
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err(GeoError::InvalidInput(format!(
                "latitude {} outside [-90, 90]",
                self.lat
            )));
        }
        if !(-180.0..180.0).contains(&self.lon) {
            return Err(GeoError::InvalidInput(format!(
                "longitude {} outside [-180, 180)",
                self.lon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hemisphere {
    North,
    South,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtmPoint {
    pub easting: f64,
    pub northing: f64,
    pub zone: u8,
    pub hemisphere: Hemisphere,
}

impl UtmPoint {
    pub fn north(easting: f64, northing: f64, zone: u8) -> Self {
        Self {
            easting,
            northing,
            zone,
            hemisphere: Hemisphere::North,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_zone(self.zone)?;
        if !self.easting.is_finite() || !self.northing.is_finite() {
            return Err(GeoError::InvalidInput("non-finite UTM coordinate".into()));
        }
        if !(self.easting > 0.0 && self.easting < 1_000_000.0) {
            return Err(GeoError::InvalidInput(format!(
                "easting {} outside (0, 1000000)",
                self.easting
            )));
        }
        if self.northing < 0.0 {
            return Err(GeoError::InvalidInput(format!("negative northing {}", self.northing)));
        }
        Ok(())
    }
}

/// A point in a local city frame, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalPoint {
    pub x: f64,
    pub y: f64,
}

impl LocalPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &LocalPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Sub for LocalPoint {
    type Output = LocalPoint;
    fn sub(self, rhs: LocalPoint) -> LocalPoint {
        LocalPoint::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Add for LocalPoint {
    type Output = LocalPoint;
    fn add(self, rhs: LocalPoint) -> LocalPoint {
        LocalPoint::new(self.x + rhs.x, self.y + rhs.y)
    }
}

/// A local Cartesian frame: a UTM zone plus an origin subtracted from
/// projected coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityFrame {
    pub name: String,
    pub zone: u8,
    pub origin_easting: f64,
    pub origin_northing: f64,
}

impl CityFrame {
    pub fn new(name: impl Into<String>, zone: u8, origin_easting: f64, origin_northing: f64) -> Result<Self> {
        let frame = Self {
            name: name.into(),
            zone,
            origin_easting,
            origin_northing,
        };
        frame.validate()?;
        Ok(frame)
    }

    pub fn validate(&self) -> Result<()> {
        check_zone(self.zone)?;
        if !self.origin_easting.is_finite() || !self.origin_northing.is_finite() {
            return Err(GeoError::InvalidInput(format!(
                "frame '{}' has a non-finite origin",
                self.name
            )));
        }
        Ok(())
    }

    /// Miami city frame, UTM zone 17N.
    pub fn miami() -> Self {
        Self {
            name: "miami".into(),
            zone: 17,
            origin_easting: 580_560.008_8,
            origin_northing: 2_850_959.999_9,
        }
    }

    /// Pittsburgh city frame, UTM zone 17N.
    pub fn pittsburgh() -> Self {
        Self {
            name: "pittsburgh".into(),
            zone: 17,
            origin_easting: 583_710.007_0,
            origin_northing: 4_477_259.999_9,
        }
    }

    pub fn presets() -> Vec<CityFrame> {
        vec![Self::miami(), Self::pittsburgh()]
    }
}

impl fmt::Display for CityFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (zone {}, origin {:.4} E {:.4} N)",
            self.name, self.zone, self.origin_easting, self.origin_northing
        )
    }
}

/// Named frames: the compiled-in presets, optionally extended or overridden
/// from a TOML file of `[[frame]]` tables.
#[derive(Debug, Clone)]
pub struct FrameRegistry {
    frames: Vec<CityFrame>,
}

#[derive(Deserialize)]
struct FrameFile {
    #[serde(default)]
    frame: Vec<CityFrame>,
}

impl Default for FrameRegistry {
    fn default() -> Self {
        Self {
            frames: CityFrame::presets(),
        }
    }
}

impl FrameRegistry {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: FrameFile = toml::from_str(text).map_err(|e| GeoError::Config(e.to_string()))?;
        let mut registry = Self::default();
        for frame in file.frame {
            frame.validate()?;
            registry.insert(frame);
        }
        Ok(registry)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GeoError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn insert(&mut self, frame: CityFrame) {
        match self.frames.iter_mut().find(|f| f.name == frame.name) {
            Some(existing) => *existing = frame,
            None => self.frames.push(frame),
        }
    }

    pub fn get(&self, name: &str) -> Result<CityFrame> {
        let wanted = name.to_ascii_lowercase();
        self.frames
            .iter()
            .find(|f| f.name.to_ascii_lowercase() == wanted)
            .cloned()
            .ok_or_else(|| GeoError::UnknownFrame(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.frames.iter().map(|f| f.name.as_str())
    }
}

fn check_zone(zone: u8) -> Result<()> {
    if (1..=60).contains(&zone) {
        Ok(())
    } else {
        Err(GeoError::InvalidInput(format!("UTM zone {zone} outside [1, 60]")))
    }
}

/// Central meridian of a UTM zone in degrees.
pub fn central_meridian(zone: u8) -> f64 {
    f64::from(zone) * 6.0 - 183.0
}

/// Ellipsoid-derived constants of the Krüger series.
struct Krueger {
    e: f64,
    /// Rectifying radius scaled by the central scale factor.
    k0_a: f64,
    alpha: [f64; 6],
    beta: [f64; 6],
}

impl Krueger {
    fn wgs84() -> Self {
        let f = 1.0 / WGS84_INV_F;
        let e = (f * (2.0 - f)).sqrt();
        let n = f / (2.0 - f);
        let n2 = n * n;
        let n3 = n2 * n;
        let n4 = n3 * n;
        let n5 = n4 * n;
        let n6 = n5 * n;
        let rect = WGS84_A / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);
        let alpha = [
            n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0 - 127.0 * n5 / 288.0 + 7891.0 * n6 / 37800.0,
            13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0 + 281.0 * n5 / 630.0
                - 1_983_433.0 * n6 / 1_935_360.0,
            61.0 * n3 / 240.0 - 103.0 * n4 / 140.0 + 15061.0 * n5 / 26880.0 + 167_603.0 * n6 / 181_440.0,
            49561.0 * n4 / 161_280.0 - 179.0 * n5 / 168.0 + 6_601_661.0 * n6 / 7_257_600.0,
            34729.0 * n5 / 80640.0 - 3_418_889.0 * n6 / 1_995_840.0,
            212_378_941.0 * n6 / 319_334_400.0,
        ];
        let beta = [
            n / 2.0 - 2.0 * n2 / 3.0 + 37.0 * n3 / 96.0 - n4 / 360.0 - 81.0 * n5 / 512.0 + 96199.0 * n6 / 604_800.0,
            n2 / 48.0 + n3 / 15.0 - 437.0 * n4 / 1440.0 + 46.0 * n5 / 105.0 - 1_118_711.0 * n6 / 3_870_720.0,
            17.0 * n3 / 480.0 - 37.0 * n4 / 840.0 - 209.0 * n5 / 4480.0 + 5569.0 * n6 / 90720.0,
            4397.0 * n4 / 161_280.0 - 11.0 * n5 / 504.0 - 830_251.0 * n6 / 7_257_600.0,
            4583.0 * n5 / 161_280.0 - 108_847.0 * n6 / 3_991_680.0,
            20_648_693.0 * n6 / 638_668_800.0,
        ];
        Self {
            e,
            k0_a: UTM_K0 * rect,
            alpha,
            beta,
        }
    }

    /// tan of the conformal latitude for a given tan(latitude).
    fn conformal_tan(&self, tau: f64) -> f64 {
        let e = self.e;
        let sigma = (e * (e * tau / tau.hypot(1.0)).atanh()).sinh();
        tau * sigma.hypot(1.0) - sigma * tau.hypot(1.0)
    }

    /// Inverts [`Self::conformal_tan`] by Newton iteration.
    fn geodetic_tan(&self, tau_prime: f64) -> f64 {
        let e2 = self.e * self.e;
        let mut tau = tau_prime / (1.0 - e2);
        for _ in 0..8 {
            let tp = self.conformal_tan(tau);
            let dtau =
                (tau_prime - tp) * (1.0 + (1.0 - e2) * tau * tau) / ((1.0 - e2) * tau.hypot(1.0) * tp.hypot(1.0));
            tau += dtau;
            if dtau.abs() <= 1e-15 * tau.abs().max(1.0) {
                break;
            }
        }
        tau
    }
}

fn krueger() -> &'static Krueger {
    static CONSTS: std::sync::OnceLock<Krueger> = std::sync::OnceLock::new();
    CONSTS.get_or_init(Krueger::wgs84)
}

/// Projects a geographic point into the given UTM zone.
pub fn wgs84_to_utm(p: GeoPoint, zone: u8) -> Result<UtmPoint> {
    p.validate()?;
    check_zone(zone)?;
    if !(-80.0..=84.0).contains(&p.lat) {
        return Err(GeoError::InvalidInput(format!(
            "latitude {} outside the UTM domain [-80, 84]",
            p.lat
        )));
    }
    let mut dlon = p.lon - central_meridian(zone);
    // Wrap across the antimeridian.
    if dlon > 180.0 {
        dlon -= 360.0;
    } else if dlon < -180.0 {
        dlon += 360.0;
    }
    if dlon.abs() > MAX_ZONE_OFFSET_DEG {
        return Err(GeoError::OutOfZone {
            lon: p.lon,
            zone,
            offset: dlon.abs(),
        });
    }

    let k = krueger();
    let phi = p.lat.to_radians();
    let lam = dlon.to_radians();
    let tau = phi.tan();
    let tau_p = if p.lat.abs() == 90.0 { tau } else { k.conformal_tan(tau) };
    let xi_p = tau_p.atan2(lam.cos());
    let eta_p = (lam.sin() / tau_p.hypot(lam.cos())).asinh();

    let mut xi = xi_p;
    let mut eta = eta_p;
    for (j, a) in k.alpha.iter().enumerate() {
        let m = 2.0 * (j as f64 + 1.0);
        xi += a * (m * xi_p).sin() * (m * eta_p).cosh();
        eta += a * (m * xi_p).cos() * (m * eta_p).sinh();
    }

    let hemisphere = if p.lat >= 0.0 {
        Hemisphere::North
    } else {
        Hemisphere::South
    };
    let false_northing = match hemisphere {
        Hemisphere::North => 0.0,
        Hemisphere::South => UTM_FALSE_NORTHING_SOUTH,
    };
    Ok(UtmPoint {
        easting: UTM_FALSE_EASTING + k.k0_a * eta,
        northing: false_northing + k.k0_a * xi,
        zone,
        hemisphere,
    })
}

/// Inverse of [`wgs84_to_utm`].
pub fn utm_to_wgs84(p: UtmPoint) -> Result<GeoPoint> {
    p.validate()?;
    let k = krueger();
    let false_northing = match p.hemisphere {
        Hemisphere::North => 0.0,
        Hemisphere::South => UTM_FALSE_NORTHING_SOUTH,
    };
    let xi = (p.northing - false_northing) / k.k0_a;
    let eta = (p.easting - UTM_FALSE_EASTING) / k.k0_a;

    let mut xi_p = xi;
    let mut eta_p = eta;
    for (j, b) in k.beta.iter().enumerate() {
        let m = 2.0 * (j as f64 + 1.0);
        xi_p -= b * (m * xi).sin() * (m * eta).cosh();
        eta_p -= b * (m * xi).cos() * (m * eta).sinh();
    }

    let s = eta_p.sinh();
    let c = xi_p.cos();
    let tau_p = xi_p.sin() / s.hypot(c);
    let tau = k.geodetic_tan(tau_p);
    let lat = tau.atan().to_degrees();
    let lon = central_meridian(p.zone) + s.atan2(c).to_degrees();
    let lon = if lon >= 180.0 {
        lon - 360.0
    } else if lon < -180.0 {
        lon + 360.0
    } else {
        lon
    };
    Ok(GeoPoint { lat, lon })
}

pub fn utm_to_local(p: UtmPoint, frame: &CityFrame) -> Result<LocalPoint> {
    if p.zone != frame.zone {
        return Err(GeoError::FrameMismatch {
            point_zone: p.zone,
            frame: frame.name.clone(),
            frame_zone: frame.zone,
        });
    }
    Ok(LocalPoint {
        x: p.easting - frame.origin_easting,
        y: p.northing - frame.origin_northing,
    })
}

/// Inverse of [`utm_to_local`]. The hemisphere is taken from the sign of the
/// resulting northing.
pub fn local_to_utm(p: LocalPoint, frame: &CityFrame) -> UtmPoint {
    UtmPoint {
        easting: p.x + frame.origin_easting,
        northing: p.y + frame.origin_northing,
        zone: frame.zone,
        hemisphere: Hemisphere::North,
    }
}

pub fn geo_to_local(p: GeoPoint, frame: &CityFrame) -> Result<LocalPoint> {
    utm_to_local(wgs84_to_utm(p, frame.zone)?, frame)
}

pub fn local_to_geo(p: LocalPoint, frame: &CityFrame) -> Result<GeoPoint> {
    utm_to_wgs84(local_to_utm(p, frame))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_meridian_equator_is_false_origin() {
        let u = wgs84_to_utm(GeoPoint::new(0.0, -81.0).unwrap(), 17).unwrap();
        assert_eq!(u.easting, 500_000.0);
        assert_eq!(u.northing, 0.0);
        let g = utm_to_wgs84(UtmPoint::north(500_000.0, 0.0, 17)).unwrap();
        assert_eq!(g.lat, 0.0);
        assert_eq!(g.lon, -81.0);
    }

    #[test]
    fn city_origins_map_to_zero() {
        let miami = CityFrame::miami();
        let p = utm_to_local(UtmPoint::north(580_560.008_8, 2_850_959.999_9, 17), &miami).unwrap();
        assert_eq!((p.x, p.y), (0.0, 0.0));
        let pit = CityFrame::pittsburgh();
        let p = utm_to_local(UtmPoint::north(583_710.007_0, 4_477_259.999_9, 17), &pit).unwrap();
        assert_eq!((p.x, p.y), (0.0, 0.0));
    }

    #[test]
    fn pure_translation() {
        let p = utm_to_local(UtmPoint::north(580_561.008_8, 2_850_961.999_9, 17), &CityFrame::miami()).unwrap();
        assert!((p.x - 1.0).abs() < 1e-9 && (p.y - 2.0).abs() < 1e-9, "{p:?}");
    }

    #[test]
    fn frame_zone_mismatch() {
        let err = utm_to_local(UtmPoint::north(500_000.0, 10.0, 18), &CityFrame::miami()).unwrap_err();
        assert!(matches!(err, GeoError::FrameMismatch { .. }));
    }

    #[test]
    fn composition_on_trivial_frame() {
        let frame = CityFrame::new("eq", 17, 500_000.0, 0.0).unwrap();
        let p = geo_to_local(GeoPoint::new(0.0, -81.0).unwrap(), &frame).unwrap();
        assert_eq!((p.x, p.y), (0.0, 0.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(GeoPoint::new(91.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, 180.0).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        let far = GeoPoint::new(30.0, -70.0).unwrap();
        assert!(matches!(wgs84_to_utm(far, 17), Err(GeoError::OutOfZone { .. })));
        // 3.4 deg off the meridian is still accepted
        assert!(wgs84_to_utm(GeoPoint::new(30.0, -77.6).unwrap(), 17).is_ok());
        assert!(wgs84_to_utm(GeoPoint::new(30.0, -81.0).unwrap(), 0).is_err());
    }

    #[test]
    fn southern_hemisphere_round_trip() {
        let g = GeoPoint::new(-33.9, 151.0).unwrap();
        let u = wgs84_to_utm(g, 56).unwrap();
        assert_eq!(u.hemisphere, Hemisphere::South);
        assert!(u.northing > 6_000_000.0);
        let back = utm_to_wgs84(u).unwrap();
        assert!((back.lat - g.lat).abs() < 1e-9 && (back.lon - g.lon).abs() < 1e-9);
    }

    #[test]
    fn equator_monotone_in_longitude() {
        let mut last = f64::NEG_INFINITY;
        for i in 0..=70 {
            let lon = -84.5 + i as f64 * 0.1;
            let e = wgs84_to_utm(GeoPoint::new(0.0, lon).unwrap(), 17).unwrap().easting;
            assert!(e > last);
            last = e;
        }
    }

    #[test]
    fn registry_from_toml() {
        let reg = FrameRegistry::from_toml_str(
            r#"
            [[frame]]
            name = "testville"
            zone = 18
            origin_easting = 400000.0
            origin_northing = 100.0
            "#,
        )
        .unwrap();
        assert_eq!(reg.get("Miami").unwrap(), CityFrame::miami());
        assert_eq!(reg.get("testville").unwrap().zone, 18);
        assert!(matches!(reg.get("atlantis"), Err(GeoError::UnknownFrame(_))));
        assert!(
            FrameRegistry::from_toml_str("[[frame]]\nname='x'\nzone=99\norigin_easting=1.0\norigin_northing=1.0")
                .is_err()
        );
    }
}
