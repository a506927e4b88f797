//! Polygon dataset loading, dataset statistics, and chunk partitioning.
//!
//! Two input formats are supported: a WKT-per-line CSV (`pid,POLYGON(...)`)
//! and a minimal GeoJSON FeatureCollection holding Polygon or MultiPolygon
//! features. MultiPolygon parts are flattened into one polygon's ring list;
//! the even-odd containment rule handles disjoint parts and holes uniformly.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{AffineGeo, Mbr, Polygon, WorldPoint};

/// Aggregate statistics of a vector dataset, the vector-side inputs of the
/// cost model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VectorStats {
    pub polygon_count: u64,
    pub segment_count: u64,
    /// Mean segments per polygon.
    pub mean_segments_per_polygon: f64,
    /// Mean polygon MBR width, degrees.
    pub mean_polygon_width: f64,
    /// Mean polygon MBR height, degrees.
    pub mean_polygon_height: f64,
    /// Mean segment height, degrees. Approximated as
    /// `mean_polygon_height / (2 * mean_segments_per_polygon)`: the boundary
    /// of a closed polygon travels its height twice.
    pub mean_segment_height: f64,
    /// Source size in bytes.
    pub input_bytes: u64,
}

/// A validated polygon layer with precomputed statistics.
#[derive(Clone, Debug)]
pub struct VectorDataset {
    polygons: Vec<Polygon>,
    stats: VectorStats,
}

impl VectorDataset {
    /// Wrap polygons, checking pid uniqueness. `input_bytes` is the source
    /// size when known; synthetic datasets pass an in-memory estimate.
    pub fn new(polygons: Vec<Polygon>, input_bytes: u64) -> Result<Self> {
        let mut seen = HashSet::with_capacity(polygons.len());
        for p in &polygons {
            if !seen.insert(p.pid()) {
                return Err(Error::DuplicatePid { pid: p.pid() });
            }
        }
        let stats = compute_stats(&polygons, input_bytes);
        Ok(VectorDataset { polygons, stats })
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    pub fn stats(&self) -> &VectorStats {
        &self.stats
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn len(&self) -> usize {
        self.polygons.len()
    }

    pub fn pids(&self) -> impl Iterator<Item = u32> + '_ {
        self.polygons.iter().map(|p| p.pid())
    }
}

pub fn compute_stats(polygons: &[Polygon], input_bytes: u64) -> VectorStats {
    let np = polygons.len() as u64;
    let ns: u64 = polygons.iter().map(|p| p.segment_count()).sum();
    if np == 0 {
        return VectorStats {
            polygon_count: 0,
            segment_count: 0,
            mean_segments_per_polygon: 0.0,
            mean_polygon_width: 0.0,
            mean_polygon_height: 0.0,
            mean_segment_height: 0.0,
            input_bytes,
        };
    }
    let ns_bar = ns as f64 / np as f64;
    let wp = polygons.iter().map(|p| p.mbr().width()).sum::<f64>() / np as f64;
    let hp = polygons.iter().map(|p| p.mbr().height()).sum::<f64>() / np as f64;
    VectorStats {
        polygon_count: np,
        segment_count: ns,
        mean_segments_per_polygon: ns_bar,
        mean_polygon_width: wp,
        mean_polygon_height: hp,
        mean_segment_height: hp / (2.0 * ns_bar),
        input_bytes,
    }
}

/// Mean `|delta latitude|` over all segments, measured from the data rather
/// than approximated from polygon heights.
pub fn measured_mean_segment_height(polygons: &[Polygon]) -> f64 {
    let mut total = 0.0;
    let mut n = 0u64;
    for p in polygons {
        for s in p.segments() {
            total += (s.a.lat - s.b.lat).abs();
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VectorFormat {
    WktCsv,
    GeoJson,
}

/// Load a polygon layer. Parse failures name the line (WKT CSV) or feature
/// index (GeoJSON) they occurred on.
pub fn load_vector(path: &Path, format: VectorFormat) -> Result<VectorDataset> {
    let text = fs::read_to_string(path)?;
    let input_bytes = text.len() as u64;
    let polygons = match format {
        VectorFormat::WktCsv => parse_wkt_csv(path, &text)?,
        VectorFormat::GeoJson => parse_geojson(path, &text)?,
    };
    VectorDataset::new(polygons, input_bytes)
}

/// Pick the format from the file extension: `.json`/`.geojson` parse as
/// GeoJSON, anything else as WKT CSV.
pub fn load_vector_auto(path: &Path) -> Result<VectorDataset> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("json") | Some("geojson") => VectorFormat::GeoJson,
        _ => VectorFormat::WktCsv,
    };
    load_vector(path, format)
}

fn parse_err(path: &Path, line: usize, detail: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        detail: detail.into(),
    }
}

fn parse_wkt_csv(path: &Path, text: &str) -> Result<Vec<Polygon>> {
    let mut polygons = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (pid_str, wkt) = line
            .split_once(',')
            .ok_or_else(|| parse_err(path, lineno, "expected `pid,WKT`"))?;
        let pid: u32 = pid_str
            .trim()
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad polygon id {pid_str:?}")))?;
        let rings = parse_wkt(wkt.trim()).map_err(|detail| parse_err(path, lineno, detail))?;
        polygons.push(Polygon::new(pid, rings).map_err(|e| parse_err(path, lineno, e.to_string()))?);
    }
    Ok(polygons)
}

/// Parse the `POLYGON`/`MULTIPOLYGON` subset of WKT into a flat ring list.
fn parse_wkt(wkt: &str) -> std::result::Result<Vec<Vec<WorldPoint>>, String> {
    let s = wkt.trim();
    let (multi, rest) = if let Some(rest) = strip_keyword(s, "MULTIPOLYGON") {
        (true, rest)
    } else if let Some(rest) = strip_keyword(s, "POLYGON") {
        (false, rest)
    } else {
        return Err("expected POLYGON or MULTIPOLYGON".into());
    };
    let depth = if multi { 3 } else { 2 };
    let groups = parse_nested(rest.trim(), depth)?;
    let mut rings = Vec::new();
    if multi {
        match groups {
            Nested::List(parts) => {
                for part in &parts {
                    collect_rings(part, &mut rings)?;
                }
            }
            Nested::Coords(_) => return Err("malformed MULTIPOLYGON".into()),
        }
    } else {
        collect_rings(&groups, &mut rings)?;
    }
    if rings.is_empty() {
        return Err("geometry has no rings".into());
    }
    Ok(rings)
}

fn strip_keyword<'a>(s: &'a str, kw: &str) -> Option<&'a str> {
    let head = s.get(..kw.len())?;
    if head.eq_ignore_ascii_case(kw) {
        Some(&s[kw.len()..])
    } else {
        None
    }
}

enum Nested {
    Coords(Vec<WorldPoint>),
    List(Vec<Nested>),
}

/// Parse `depth` levels of parenthesis nesting; the innermost level holds
/// comma-separated `lon lat` pairs.
fn parse_nested(s: &str, depth: usize) -> std::result::Result<Nested, String> {
    let s = s.trim();
    if !s.starts_with('(') || !s.ends_with(')') {
        return Err(format!("expected parenthesized group, got {s:?}"));
    }
    let inner = &s[1..s.len() - 1];
    if depth == 1 {
        let mut pts = Vec::new();
        for pair in inner.split(',') {
            let mut it = pair.split_whitespace();
            let lon = it
                .next()
                .ok_or("empty coordinate")?
                .parse::<f64>()
                .map_err(|_| format!("bad coordinate in {pair:?}"))?;
            let lat = it
                .next()
                .ok_or_else(|| format!("missing latitude in {pair:?}"))?
                .parse::<f64>()
                .map_err(|_| format!("bad coordinate in {pair:?}"))?;
            if it.next().is_some() {
                return Err(format!("too many numbers in coordinate {pair:?}"));
            }
            pts.push(WorldPoint::new(lon, lat));
        }
        return Ok(Nested::Coords(pts));
    }
    // Split on commas at nesting level zero.
    let mut parts = Vec::new();
    let mut level = 0i32;
    let mut start = 0;
    for (i, ch) in inner.char_indices() {
        match ch {
            '(' => level += 1,
            ')' => {
                level -= 1;
                if level < 0 {
                    return Err("unbalanced parentheses".into());
                }
            }
            ',' if level == 0 => {
                parts.push(&inner[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if level != 0 {
        return Err("unbalanced parentheses".into());
    }
    parts.push(&inner[start..]);
    let mut out = Vec::with_capacity(parts.len());
    for p in parts {
        out.push(parse_nested(p, depth - 1)?);
    }
    Ok(Nested::List(out))
}

fn collect_rings(group: &Nested, rings: &mut Vec<Vec<WorldPoint>>) -> std::result::Result<(), String> {
    match group {
        Nested::List(items) => {
            for item in items {
                match item {
                    Nested::Coords(pts) => rings.push(pts.clone()),
                    Nested::List(_) => return Err("unexpected nesting in ring list".into()),
                }
            }
            Ok(())
        }
        Nested::Coords(_) => Err("expected a ring list".into()),
    }
}

fn parse_geojson(path: &Path, text: &str) -> Result<Vec<Polygon>> {
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| parse_err(path, e.line(), e.to_string()))?;
    let features = doc
        .get("features")
        .and_then(|f| f.as_array())
        .ok_or_else(|| parse_err(path, 1, "expected a FeatureCollection with a `features` array"))?;
    let mut polygons = Vec::with_capacity(features.len());
    for (i, feature) in features.iter().enumerate() {
        let geom = feature
            .get("geometry")
            .ok_or_else(|| parse_err(path, i + 1, format!("feature {i} has no geometry")))?;
        let gtype = geom.get("type").and_then(|t| t.as_str()).unwrap_or("");
        let coords = geom
            .get("coordinates")
            .ok_or_else(|| parse_err(path, i + 1, format!("feature {i} has no coordinates")))?;
        let read_ring = |ring: &serde_json::Value| -> std::result::Result<Vec<WorldPoint>, String> {
            ring.as_array()
                .ok_or("ring is not an array")?
                .iter()
                .map(|pt| {
                    let pair = pt.as_array().ok_or("coordinate is not an array")?;
                    if pair.len() < 2 {
                        return Err("coordinate needs two numbers".to_string());
                    }
                    Ok(WorldPoint::new(
                        pair[0].as_f64().ok_or("bad longitude")?,
                        pair[1].as_f64().ok_or("bad latitude")?,
                    ))
                })
                .collect()
        };
        let mut rings = Vec::new();
        let res: std::result::Result<(), String> = (|| {
            match gtype {
                "Polygon" => {
                    for ring in coords.as_array().ok_or("coordinates is not an array")? {
                        rings.push(read_ring(ring)?);
                    }
                }
                "MultiPolygon" => {
                    for part in coords.as_array().ok_or("coordinates is not an array")? {
                        for ring in part.as_array().ok_or("polygon part is not an array")? {
                            rings.push(read_ring(ring)?);
                        }
                    }
                }
                other => return Err(format!("unsupported geometry type {other:?}")),
            }
            Ok(())
        })();
        res.map_err(|detail| parse_err(path, i + 1, format!("feature {i}: {detail}")))?;
        let pid = feature
            .get("id")
            .and_then(|v| v.as_u64())
            .or_else(|| {
                feature
                    .get("properties")
                    .and_then(|p| p.get("pid"))
                    .and_then(|v| v.as_u64())
            })
            .unwrap_or(i as u64) as u32;
        polygons.push(Polygon::new(pid, rings).map_err(|e| parse_err(path, i + 1, e.to_string()))?);
    }
    Ok(polygons)
}

/// Serialize one polygon as a `pid,POLYGON(...)` line. Multi-ring polygons
/// render as POLYGON with several rings, which reparses to the identical
/// ring list.
pub fn polygon_to_wkt_line(poly: &Polygon) -> String {
    let rings: Vec<String> = poly
        .rings()
        .iter()
        .map(|ring| {
            let pts: Vec<String> = ring.iter().map(|p| format!("{} {}", p.lon, p.lat)).collect();
            format!("({})", pts.join(","))
        })
        .collect();
    format!("{},POLYGON({})", poly.pid(), rings.join(","))
}

/// Write a dataset as WKT CSV, one polygon per line.
pub fn write_wkt_csv(path: &Path, polygons: &[Polygon]) -> Result<()> {
    let mut out = String::new();
    for p in polygons {
        out.push_str(&polygon_to_wkt_line(p));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Partitioning

/// A fixed-capacity, spatially local group of polygons processed as one unit
/// of intersection work.
#[derive(Clone, Debug)]
pub struct VectorChunk {
    pub chunk_id: u32,
    pub polygons: Vec<Polygon>,
    pub mbr: Mbr,
}

impl VectorChunk {
    fn from_polygons(chunk_id: u32, polygons: Vec<Polygon>) -> Self {
        let mut mbr = Mbr::empty();
        for p in &polygons {
            mbr.expand(&p.mbr());
        }
        VectorChunk { chunk_id, polygons, mbr }
    }

    /// Chunk extent in pixels of a given raster grid: `ceil(extent / p)` on
    /// each axis.
    pub fn pixel_extent(&self, geo: &AffineGeo) -> (u64, u64) {
        let w = (self.mbr.width() / geo.pixel_size).ceil().max(0.0) as u64;
        let h = (self.mbr.height() / geo.pixel_size).ceil().max(0.0) as u64;
        (w, h)
    }
}

/// Split a dataset into chunks of at most `capacity` polygons; all chunks are
/// full except possibly one remainder.
///
/// With `spatial` set, polygons are packed sort-tile-recursively: sort by MBR
/// center longitude, cut into vertical slabs of `slab_count * capacity`
/// polygons, sort each slab by center latitude, and cut runs of `capacity`.
/// Without it, polygons are sliced in input order, reproducing a non-spatial
/// layout.
pub fn partition(dataset: &VectorDataset, capacity: usize, spatial: bool) -> Vec<VectorChunk> {
    assert!(capacity >= 1, "chunk capacity must be at least 1");
    let polys = dataset.polygons();
    if polys.is_empty() {
        return Vec::new();
    }
    let groups: Vec<Vec<Polygon>> = if spatial {
        str_pack(polys, capacity)
    } else {
        polys.chunks(capacity).map(|c| c.to_vec()).collect()
    };
    groups
        .into_iter()
        .enumerate()
        .map(|(i, g)| VectorChunk::from_polygons(i as u32, g))
        .collect()
}

fn str_pack(polys: &[Polygon], capacity: usize) -> Vec<Vec<Polygon>> {
    let n = polys.len();
    let leaves = n.div_ceil(capacity);
    let slab_count = (leaves as f64).sqrt().ceil() as usize;
    let slab_size = slab_count * capacity;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        polys[a]
            .mbr()
            .center()
            .lon
            .total_cmp(&polys[b].mbr().center().lon)
            .then_with(|| polys[a].pid().cmp(&polys[b].pid()))
    });

    let mut out = Vec::with_capacity(leaves);
    for slab in order.chunks(slab_size) {
        let mut slab: Vec<usize> = slab.to_vec();
        slab.sort_by(|&a, &b| {
            polys[a]
                .mbr()
                .center()
                .lat
                .total_cmp(&polys[b].mbr().center().lat)
                .then_with(|| polys[a].pid().cmp(&polys[b].pid()))
        });
        for run in slab.chunks(capacity) {
            out.push(run.iter().map(|&i| polys[i].clone()).collect());
        }
    }
    out
}
