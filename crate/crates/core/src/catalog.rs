//! Crater catalog: CSV ingestion, synthetic generation and region queries.
//!
//! Files carry latitude and longitude in degrees; records hold radians.
//! Craters are treated as points on the mean sphere; the diameter only
//! feeds the visibility threshold.

use std::collections::HashSet;
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{Read, Write};

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::frames::{mcmf_to_mci_dcm, selenographic_to_mcmf, MoonConstants, SelenographicPoint, Vec3};

pub type CraterId = u64;

/// Header of the canonical catalog CSV.
pub const CANONICAL_HEADER: [&str; 5] = ["id", "name", "lat", "lon", "diameter_km"];

/// Cumulative counts of the published global database: >1 km, >5 km, >20 km.
pub const LUNAR_COUNT_ABOVE_1KM: f64 = 1.3e6;
pub const LUNAR_COUNT_ABOVE_5KM: f64 = 83_000.0;
pub const LUNAR_COUNT_ABOVE_20KM: f64 = 6_972.0;
pub const LUNAR_TOTAL_COUNT: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CraterRecord {
    pub id: CraterId,
    pub name: Option<Box<str>>,
    /// rad, `[-π/2, π/2]`
    pub lat: f64,
    /// rad, `(-π, π]`
    pub lon: f64,
    pub diameter_km: f64,
}

impl CraterRecord {
    /// Crater centre on the mean sphere, MCMF frame.
    pub fn position_mcmf(&self, moon: &MoonConstants) -> Vec3 {
        selenographic_to_mcmf(&SelenographicPoint {
            lat: self.lat,
            lon: self.lon,
            radius: moon.radius_km,
        })
    }
}

/// Crater centre in MCI at Moon rotation angle `theta_m`.
pub fn crater_position_mci(rec: &CraterRecord, theta_m: f64, moon: &MoonConstants) -> Vec3 {
    mcmf_to_mci_dcm(theta_m).apply(&rec.position_mcmf(moon))
}

/// Closed latitude/longitude box. When `lon_start > lon_end` the box wraps
/// across the ±180° seam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_start: f64,
    pub lon_end: f64,
}

impl Region {
    pub fn new(lat_min: f64, lat_max: f64, lon_start: f64, lon_end: f64) -> Result<Self> {
        let lat_ok = |v: f64| (-FRAC_PI_2..=FRAC_PI_2).contains(&v);
        let lon_ok = |v: f64| (-PI..=PI).contains(&v);
        if !(lat_ok(lat_min) && lat_ok(lat_max) && lat_min <= lat_max) {
            return Err(Error::InvalidParameter(format!(
                "latitude range [{lat_min}, {lat_max}] is invalid"
            )));
        }
        if !(lon_ok(lon_start) && lon_ok(lon_end)) {
            return Err(Error::InvalidParameter(format!(
                "longitude range [{lon_start}, {lon_end}] is outside [-π, π]"
            )));
        }
        Ok(Self {
            lat_min,
            lat_max,
            lon_start,
            lon_end,
        })
    }

    pub fn full() -> Self {
        Self {
            lat_min: -FRAC_PI_2,
            lat_max: FRAC_PI_2,
            lon_start: -PI,
            lon_end: PI,
        }
    }

    pub fn wraps(&self) -> bool {
        self.lon_start > self.lon_end
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        if lat < self.lat_min || lat > self.lat_max {
            return false;
        }
        if self.wraps() {
            lon >= self.lon_start || lon <= self.lon_end
        } else {
            lon >= self.lon_start && lon <= self.lon_end
        }
    }

    fn lon_intervals(&self) -> impl Iterator<Item = (f64, f64)> {
        let (a, b) = if self.wraps() {
            ((self.lon_start, PI), Some((-PI, self.lon_end)))
        } else {
            ((self.lon_start, self.lon_end), None)
        };
        std::iter::once(a).chain(b)
    }
}

/// Latitude bands, each holding `(lon, record index)` sorted by longitude.
#[derive(Debug, Clone)]
struct BandIndex {
    band_height: f64,
    bands: Vec<Vec<(f64, u32)>>,
}

impl BandIndex {
    const BANDS: usize = 720;

    fn build(records: &[CraterRecord]) -> Self {
        let band_height = PI / Self::BANDS as f64;
        let mut bands = vec![Vec::new(); Self::BANDS];
        for (i, r) in records.iter().enumerate() {
            bands[Self::band_of(r.lat, band_height)].push((r.lon, i as u32));
        }
        for b in &mut bands {
            b.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        }
        Self { band_height, bands }
    }

    fn band_of(lat: f64, height: f64) -> usize {
        (((lat + FRAC_PI_2) / height).floor().max(0.0) as usize).min(Self::BANDS - 1)
    }

    fn query<'a>(&'a self, region: &'a Region) -> impl Iterator<Item = u32> + 'a {
        let first = Self::band_of(region.lat_min, self.band_height);
        let last = Self::band_of(region.lat_max, self.band_height);
        self.bands[first..=last].iter().flat_map(move |band| {
            region.lon_intervals().flat_map(move |(lo, hi)| {
                let start = band.partition_point(|e| e.0 < lo);
                let end = band.partition_point(|e| e.0 <= hi);
                band[start..end.max(start)].iter().map(|e| e.1)
            })
        })
    }
}

/// Immutable crater collection with a spatial index.
#[derive(Debug, Clone)]
pub struct CraterCatalog {
    records: Vec<CraterRecord>,
    index: BandIndex,
    source: String,
}

impl CraterCatalog {
    pub fn new(records: Vec<CraterRecord>, source: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            validate_record(r)?;
            if !seen.insert(r.id) {
                return Err(Error::InvalidParameter(format!("duplicate crater id {}", r.id)));
            }
        }
        if records.len() > u32::MAX as usize {
            return Err(Error::InvalidParameter("catalog too large".into()));
        }
        let index = BandIndex::build(&records);
        Ok(Self {
            records,
            index,
            source: source.into(),
        })
    }

    pub fn records(&self) -> &[CraterRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Every record inside the closed region, in index order.
    pub fn query_region(&self, region: &Region) -> Vec<&CraterRecord> {
        self.index
            .query(region)
            .map(|i| &self.records[i as usize])
            .filter(|r| region.contains(r.lat, r.lon))
            .collect()
    }

    /// Craters larger than each threshold (km), in the order given.
    pub fn count_larger_than(&self, thresholds: &[f64]) -> Vec<usize> {
        thresholds
            .iter()
            .map(|&d| self.records.iter().filter(|r| r.diameter_km > d).count())
            .collect()
    }

    pub fn summary(&self) -> CatalogSummary {
        let c = self.count_larger_than(&[1.0, 5.0, 20.0]);
        CatalogSummary {
            total: self.len(),
            above_1km: c[0],
            above_5km: c[1],
            above_20km: c[2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogSummary {
    pub total: usize,
    pub above_1km: usize,
    pub above_5km: usize,
    pub above_20km: usize,
}

fn validate_record(r: &CraterRecord) -> Result<()> {
    if !(-FRAC_PI_2..=FRAC_PI_2).contains(&r.lat) {
        return Err(Error::InvalidParameter(format!(
            "crater {}: latitude out of range",
            r.id
        )));
    }
    if !(r.lon > -PI && r.lon <= PI) {
        return Err(Error::InvalidParameter(format!(
            "crater {}: longitude out of range",
            r.id
        )));
    }
    if !(r.diameter_km > 0.0 && r.diameter_km.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "crater {}: diameter must be positive",
            r.id
        )));
    }
    Ok(())
}

/// Source column names for each record field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    /// Integer id column, used when present in the header; otherwise ids are
    /// the 1-based data row numbers. The name column is likewise optional.
    pub id: Option<String>,
    pub name: Option<String>,
    pub lat: String,
    pub lon: String,
    pub diameter: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            id: Some("id".into()),
            name: Some("name".into()),
            lat: "lat".into(),
            lon: "lon".into(),
            diameter: "diameter_km".into(),
        }
    }
}

impl ColumnMap {
    /// Column names of the published global lunar crater database export.
    /// Its crater identifiers are strings, so they become names.
    pub fn robbins() -> Self {
        Self {
            id: None,
            name: Some("CRATER_ID".into()),
            lat: "LAT_CIRC_IMG".into(),
            lon: "LON_CIRC_IMG".into(),
            diameter: "DIAM_CIRC_IMG".into(),
        }
    }

    /// Parses `field=column` pairs separated by commas, starting from the defaults.
    /// Fields: `id`, `name`, `lat`, `lon`, `diameter`. An empty column drops an optional field.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut map = match spec.trim() {
            "robbins" => return Ok(Self::robbins()),
            _ => Self::default(),
        };
        for pair in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (field, column) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("column map entry `{pair}` is not field=column")))?;
            let column = column.trim().to_string();
            let optional = if column.is_empty() { None } else { Some(column.clone()) };
            match field.trim() {
                "id" => map.id = optional,
                "name" => map.name = optional,
                "lat" => map.lat = column,
                "lon" => map.lon = column,
                "diameter" | "diameter_km" => map.diameter = column,
                other => return Err(Error::Config(format!("unknown column map field `{other}`"))),
            }
        }
        Ok(map)
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub column_map: ColumnMap,
    /// Rows with a smaller diameter (km) are skipped and counted, not rejected.
    pub min_diameter_km: Option<f64>,
    pub source_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowRejection {
    /// 1-based line number in the source, header included.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rejected: Vec<RowRejection>,
    pub below_min_diameter: usize,
}

impl LoadReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["line", "reason"])?;
        for r in &self.rejected {
            out.write_record([r.line.to_string(), r.reason.clone()])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

/// Reads a delimiter-separated catalog with a header row.
pub fn load_catalog<R: Read>(source: R, opts: &LoadOptions) -> Result<(CraterCatalog, LoadReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::NoValidRows { rejected: 0 });
    }
    let map = &opts.column_map;
    let required = |name: &str| column_index(&headers, name).ok_or_else(|| Error::MissingColumn(name.into()));
    let lat_col = required(&map.lat)?;
    let lon_col = required(&map.lon)?;
    let dia_col = required(&map.diameter)?;
    let id_col = map.id.as_deref().and_then(|n| column_index(&headers, n));
    let name_col = map.name.as_deref().and_then(|n| column_index(&headers, n));

    let mut report = LoadReport::default();
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let mut row = csv::StringRecord::new();
    loop {
        let more = match reader.read_record(&mut row) {
            Ok(more) => more,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                report.rejected.push(RowRejection {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if !more {
            break;
        }
        report.rows_read += 1;
        let line = row.position().map_or(0, |p| p.line());
        let default_id = report.rows_read as u64;
        match parse_row(&row, lat_col, lon_col, dia_col, id_col, name_col, default_id) {
            Ok(rec) => {
                if opts.min_diameter_km.is_some_and(|min| rec.diameter_km < min) {
                    report.below_min_diameter += 1;
                } else if !seen.insert(rec.id) {
                    report.rejected.push(RowRejection {
                        line,
                        reason: format!("duplicate id {}", rec.id),
                    });
                } else {
                    records.push(rec);
                }
            }
            Err(reason) => report.rejected.push(RowRejection { line, reason }),
        }
    }
    for r in &report.rejected {
        warn!("catalog line {}: {}", r.line, r.reason);
    }
    if records.is_empty() {
        return Err(Error::NoValidRows {
            rejected: report.rejected.len(),
        });
    }
    let name = opts.source_name.clone().unwrap_or_else(|| "csv".into());
    Ok((CraterCatalog::new(records, name)?, report))
}

fn parse_row(
    row: &csv::StringRecord,
    lat_col: usize,
    lon_col: usize,
    dia_col: usize,
    id_col: Option<usize>,
    name_col: Option<usize>,
    default_id: u64,
) -> std::result::Result<CraterRecord, String> {
    let field = |col: usize, what: &str| -> std::result::Result<f64, String> {
        let raw = row
            .get(col)
            .filter(|s| !s.is_empty())
            .ok_or(format!("missing {what}"))?;
        let v: f64 = raw.parse().map_err(|_| format!("{what} `{raw}` is not a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{what} is not finite"))
        }
    };
    let lat_deg = field(lat_col, "latitude")?;
    if !(-90.0..=90.0).contains(&lat_deg) {
        return Err(format!("latitude {lat_deg} outside [-90, 90]"));
    }
    let mut lon_deg = field(lon_col, "longitude")?;
    if !(-180.0..=360.0).contains(&lon_deg) {
        return Err(format!("longitude {lon_deg} outside [-180, 360]"));
    }
    // Exact for (180, 360]: both operands are within a factor of two.
    if lon_deg > 180.0 {
        lon_deg -= 360.0;
    }
    if lon_deg == -180.0 {
        lon_deg = 180.0;
    }
    let diameter_km = field(dia_col, "diameter")?;
    if !(diameter_km > 0.0) {
        return Err(format!("diameter {diameter_km} must be positive"));
    }
    let id = match id_col {
        Some(c) => {
            let raw = row.get(c).unwrap_or("");
            raw.parse::<u64>()
                .map_err(|_| format!("id `{raw}` is not a nonnegative integer"))?
        }
        None => default_id,
    };
    let name = name_col
        .and_then(|c| row.get(c))
        .filter(|s| !s.is_empty())
        .map(Box::from);
    Ok(CraterRecord {
        id,
        name,
        lat: lat_from_degrees(lat_deg),
        lon: lon_from_degrees(lon_deg),
        diameter_km,
    })
}

fn lat_from_degrees(deg: f64) -> f64 {
    deg.to_radians().clamp(-FRAC_PI_2, FRAC_PI_2)
}

fn lon_from_degrees(deg: f64) -> f64 {
    let rad = deg.to_radians();
    // ±180° both map to +π; rounding in to_radians can overshoot slightly.
    if rad > PI || rad <= -PI {
        PI
    } else {
        rad
    }
}

/// Degree value that converts back to exactly `rad` through the loader's
/// degree-to-radian path, when such a value exists.
pub fn degrees_for_radians(rad: f64, to_rad: fn(f64) -> f64) -> f64 {
    let guess = rad.to_degrees();
    if to_rad(guess) == rad {
        return guess;
    }
    let (mut up, mut down) = (guess, guess);
    for _ in 0..16 {
        up = up.next_up();
        down = down.next_down();
        if to_rad(up) == rad {
            return up;
        }
        if to_rad(down) == rad {
            return down;
        }
    }
    guess
}

/// Writes the canonical CSV. Records loaded from CSV or produced by
/// [`generate_synthetic`] survive a write/load cycle bit-exactly.
pub fn write_catalog<W: Write>(cat: &CraterCatalog, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CANONICAL_HEADER)?;
    for r in cat.records() {
        out.write_record([
            r.id.to_string(),
            r.name.as_deref().unwrap_or("").to_string(),
            degrees_for_radians(r.lat, lat_from_degrees).to_string(),
            degrees_for_radians(r.lon, lon_from_degrees).to_string(),
            r.diameter_km.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Parameters of a synthetic catalog: uniform positions on the sphere and a
/// truncated power-law size distribution `N(>D) ∝ D^-exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub count: usize,
    pub d_min_km: f64,
    pub d_max_km: f64,
    /// Cumulative size-frequency slope.
    pub exponent: f64,
    pub seed: u64,
}

/// Cumulative slope reproducing the >1 km to >5 km count ratio of the global database.
pub fn lunar_power_law_exponent() -> f64 {
    (LUNAR_COUNT_ABOVE_1KM / LUNAR_COUNT_ABOVE_5KM).ln() / 5.0_f64.ln()
}

impl SyntheticSpec {
    /// Two million craters whose cumulative counts above 1, 5 and 20 km track the
    /// global lunar database (the smallest diameter is set so that the total is 2M).
    pub fn lunar(seed: u64) -> Self {
        let exponent = lunar_power_law_exponent();
        let ratio = LUNAR_TOTAL_COUNT as f64 / LUNAR_COUNT_ABOVE_1KM;
        Self {
            count: LUNAR_TOTAL_COUNT,
            d_min_km: ratio.powf(-1.0 / exponent),
            d_max_km: 300.0,
            exponent,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidParameter("crater count must be positive".into()));
        }
        if !(self.d_min_km > 0.0 && self.d_min_km < self.d_max_km && self.d_max_km.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < d_min < d_max, got {} and {}",
                self.d_min_km, self.d_max_km
            )));
        }
        if !(self.exponent > 0.0 && self.exponent.is_finite()) {
            return Err(Error::InvalidParameter("power-law exponent must be positive".into()));
        }
        Ok(())
    }

    /// Inverse CDF of the truncated power law at `u ∈ [0, 1)`.
    pub fn diameter_quantile(&self, u: f64) -> f64 {
        let lo = self.d_min_km.powf(-self.exponent);
        let hi = self.d_max_km.powf(-self.exponent);
        (lo - u * (lo - hi)).powf(-1.0 / self.exponent)
    }
}

/// Deterministic synthetic catalog; ids run from 1 to `count`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<CraterCatalog> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut records = Vec::with_capacity(spec.count);
    for i in 0..spec.count {
        let u_lat: f64 = rng.random();
        let u_lon: f64 = rng.random();
        let u_dia: f64 = rng.random();
        // Positions are drawn in degrees so that they survive the CSV round trip.
        let lat_deg = (2.0 * u_lat - 1.0)
            .clamp(-1.0, 1.0)
            .asin()
            .to_degrees()
            .clamp(-90.0, 90.0);
        let lon_deg = 180.0 - 360.0 * u_lon;
        records.push(CraterRecord {
            id: i as u64 + 1,
            name: None,
            lat: lat_from_degrees(lat_deg),
            lon: lon_from_degrees(lon_deg),
            diameter_km: spec.diameter_quantile(u_dia),
        });
    }
    CraterCatalog::new(
        records,
        format!(
            "synthetic(n={}, d={}..{} km, slope={}, seed={})",
            spec.count, spec.d_min_km, spec.d_max_km, spec.exponent, spec.seed
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const MOON: MoonConstants = MoonConstants::LUNAR;

    fn rec(id: u64, lat_deg: f64, lon_deg: f64, d: f64) -> CraterRecord {
        CraterRecord {
            id,
            name: None,
            lat: lat_deg.to_radians(),
            lon: lon_from_degrees(lon_deg),
            diameter_km: d,
        }
    }

    fn load_str(s: &str) -> Result<(CraterCatalog, LoadReport)> {
        let opts = LoadOptions {
            column_map: ColumnMap {
                id: None,
                name: None,
                ..ColumnMap::default()
            },
            ..LoadOptions::default()
        };
        load_catalog(s.as_bytes(), &opts)
    }

    #[test]
    fn loads_three_row_fixture() {
        let (cat, report) = load_str("lat,lon,diameter_km\n10,20,5\n-45,170,1.2\n0,0,22\n").unwrap();
        assert_eq!(cat.len(), 3);
        assert!(report.rejected.is_empty());
        let r = &cat.records()[1];
        assert_eq!(r.id, 2);
        assert!((r.lat - (-45f64).to_radians()).abs() < 1e-15);
        assert!((r.lon - 170f64.to_radians()).abs() < 1e-15);
        assert_eq!(r.diameter_km, 1.2);
    }

    #[test]
    fn empty_source_has_no_valid_rows() {
        assert!(matches!(load_str(""), Err(Error::NoValidRows { .. })));
        assert!(matches!(
            load_str("lat,lon,diameter_km\n"),
            Err(Error::NoValidRows { rejected: 0 })
        ));
    }

    #[test]
    fn out_of_range_rows_are_reported() {
        let (cat, report) = load_str("lat,lon,diameter_km\n95,0,3\n10,20,5\n0,400,2\n1,1,-1\n2,2,x\n3,3\n").unwrap();
        assert_eq!(cat.len(), 1);
        let lines: Vec<u64> = report.rejected.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![2, 4, 5, 6, 7]);
        assert!(report.rejected[0].reason.contains("latitude"));
    }

    #[test]
    fn missing_mapped_column_is_an_error() {
        assert!(matches!(
            load_str("lat,longitude,diameter_km\n1,2,3\n"),
            Err(Error::MissingColumn(c)) if c == "lon"
        ));
    }

    #[test]
    fn robbins_columns_and_east_longitudes() {
        let csv = "CRATER_ID,LAT_CIRC_IMG,LON_CIRC_IMG,DIAM_CIRC_IMG\n\
                   00-1-000000,-19.83,264.18,940.0\n00-1-000001,44.77,328.62,249.0\n";
        let opts = LoadOptions {
            column_map: ColumnMap::robbins(),
            ..LoadOptions::default()
        };
        let (cat, _) = load_catalog(csv.as_bytes(), &opts).unwrap();
        assert_eq!(cat.records()[0].name.as_deref(), Some("00-1-000000"));
        assert!((cat.records()[0].lon - (264.18f64 - 360.0).to_radians()).abs() < 1e-15);
    }

    #[test]
    fn min_diameter_filter_and_duplicate_ids() {
        let csv = "id,lat,lon,diameter_km\n1,0,0,0.5\n2,0,1,2\n2,0,2,3\n";
        let opts = LoadOptions {
            min_diameter_km: Some(1.0),
            ..LoadOptions::default()
        };
        let (cat, report) = load_catalog(csv.as_bytes(), &opts).unwrap();
        assert_eq!(cat.len(), 1);
        assert_eq!(report.below_min_diameter, 1);
        assert_eq!(report.rejected.len(), 1);
        assert!(report.rejected[0].reason.contains("duplicate"));
    }

    #[test]
    fn column_map_parsing() {
        let m = ColumnMap::parse("lat=LAT,lon=LON,diameter=D,id=").unwrap();
        assert_eq!(m.lat, "LAT");
        assert_eq!(m.id, None);
        assert_eq!(ColumnMap::parse("robbins").unwrap(), ColumnMap::robbins());
        assert!(ColumnMap::parse("depth=x").is_err());
        assert!(ColumnMap::parse("lat").is_err());
    }

    #[test]
    fn crater_positions() {
        let r = rec(1, 0.0, 0.0, 1.0);
        let p = crater_position_mci(&r, 0.0, &MOON);
        assert!((p - Vec3::new(0.0, MOON.radius_km, 0.0)).norm() < 1e-12);
        let r = rec(2, 0.0, 90.0, 1.0);
        let p = crater_position_mci(&r, PI / 2.0, &MOON);
        assert!((p - Vec3::new(0.0, -MOON.radius_km, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn seam_wrapping_query() {
        let cat = CraterCatalog::new(vec![rec(1, 0.0, 175.0, 1.0), rec(2, 0.0, 0.0, 1.0)], "t").unwrap();
        let region = Region::new(-0.1, 0.1, 170f64.to_radians(), (-170f64).to_radians()).unwrap();
        let ids: Vec<u64> = cat.query_region(&region).iter().map(|r| r.id).collect();
        assert_eq!(ids, vec![1]);
        assert_eq!(cat.query_region(&Region::full()).len(), 2);
    }

    #[test]
    fn degenerate_region() {
        let cat = CraterCatalog::new(vec![rec(1, 10.0, 20.0, 1.0), rec(2, 0.0, 0.0, 1.0)], "t").unwrap();
        let (lat, lon) = (cat.records()[0].lat, cat.records()[0].lon);
        assert_eq!(cat.query_region(&Region::new(lat, lat, lon, lon).unwrap()).len(), 1);
        assert!(cat.query_region(&Region::new(0.3, 0.3, 1.0, 1.0).unwrap()).is_empty());
    }

    #[test]
    fn synthetic_is_deterministic_and_validated() {
        let spec = SyntheticSpec {
            count: 1000,
            d_min_km: 1.0,
            d_max_km: 100.0,
            exponent: 1.7,
            seed: 9,
        };
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a.records(), b.records());
        assert!(a.records().iter().all(|r| (1.0..=100.0).contains(&r.diameter_km)));
        assert!(generate_synthetic(&SyntheticSpec {
            d_min_km: 5.0,
            d_max_km: 1.0,
            ..spec
        })
        .is_err());
        assert!(generate_synthetic(&SyntheticSpec { count: 0, ..spec }).is_err());
    }

    #[test]
    fn synthetic_is_uniform_on_the_sphere() {
        let spec = SyntheticSpec {
            count: 200_000,
            d_min_km: 1.0,
            d_max_km: 100.0,
            exponent: 1.7,
            seed: 3,
        };
        let cat = generate_synthetic(&spec).unwrap();
        let n = cat.len() as f64;
        let mean_sin = cat.records().iter().map(|r| r.lat.sin()).sum::<f64>() / n;
        // sin(lat) is uniform on [-1, 1]: variance 1/3.
        let sigma = (1.0 / 3.0 / n).sqrt();
        assert!(mean_sin.abs() < 3.0 * sigma, "mean sin(lat) = {mean_sin}");
        let mean_lon = cat.records().iter().map(|r| r.lon).sum::<f64>() / n;
        assert!(mean_lon.abs() < 3.0 * PI / (3.0 * n).sqrt());
    }

    #[test]
    fn lunar_exponent_reproduces_published_ratios() {
        let spec = SyntheticSpec::lunar(1);
        // Fraction above 5 km among those above 1 km.
        let ratio = (5.0f64).powf(-spec.exponent);
        assert!((ratio - 83_000.0 / 1.3e6).abs() < 1e-3);
        assert!((spec.exponent - 1.7095).abs() < 1e-3);
        assert!((spec.d_min_km - 0.777).abs() < 1e-3);
        let small = SyntheticSpec { count: 400_000, ..spec };
        let cat = generate_synthetic(&small).unwrap();
        let c = cat.count_larger_than(&[1.0, 5.0]);
        let frac = c[1] as f64 / c[0] as f64;
        assert!((frac - 0.064).abs() < 0.003, "fraction {frac}");
    }

    #[test]
    fn degrees_search_finds_exact_preimage() {
        for deg in [
            0.1,
            33.333333333333336,
            -89.99999999999999,
            179.99999999999997,
            12.345678901234567,
        ] {
            let rad = lon_from_degrees(deg);
            let back = degrees_for_radians(rad, lon_from_degrees);
            assert_eq!(lon_from_degrees(back), rad);
        }
    }
}
