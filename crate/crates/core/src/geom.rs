//! Geometric primitives: world/grid coordinates, the affine mappings between
//! them, and polygons with even-odd containment semantics.
//!
//! A pixel belongs to a polygon iff its center (as returned by
//! [`AffineGeo::grid_to_world`]) lies inside the polygon under the even-odd
//! rule. Every algorithm in this crate — the scanline intersection step, both
//! baselines, and the brute-force checks in the test suites — derives pixel
//! membership from the same crossing formula in [`crossing_lon`] so that
//! their outputs agree exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A position in world space, in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldPoint {
    pub lon: f64,
    pub lat: f64,
}

impl WorldPoint {
    pub fn new(lon: f64, lat: f64) -> Self {
        WorldPoint { lon, lat }
    }
}

/// A pixel position in the raster grid. Column `x` grows east, row `y` grows
/// south. Coordinates may fall outside the raster when produced from
/// out-of-extent world points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridPoint {
    pub x: i64,
    pub y: i64,
}

impl GridPoint {
    pub fn new(x: i64, y: i64) -> Self {
        GridPoint { x, y }
    }
}

/// North-up affine mapping between world coordinates (degrees) and grid
/// indices. Row indices grow southward from `lat0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineGeo {
    /// Longitude of the raster's west edge.
    pub lon0: f64,
    /// Latitude of the raster's north edge.
    pub lat0: f64,
    /// Pixel size in degrees. Always positive.
    pub pixel_size: f64,
}

impl AffineGeo {
    pub fn new(lon0: f64, lat0: f64, pixel_size: f64) -> Self {
        assert!(
            pixel_size > 0.0 && pixel_size.is_finite(),
            "pixel size must be positive and finite"
        );
        AffineGeo {
            lon0,
            lat0,
            pixel_size,
        }
    }

    /// World-to-grid mapping: the pixel containing a world point.
    pub fn world_to_grid(&self, pt: WorldPoint) -> GridPoint {
        GridPoint {
            x: ((pt.lon - self.lon0) / self.pixel_size).floor() as i64,
            y: ((self.lat0 - pt.lat) / self.pixel_size).floor() as i64,
        }
    }

    /// Grid-to-world mapping: the CENTER of a pixel.
    pub fn grid_to_world(&self, gp: GridPoint) -> WorldPoint {
        WorldPoint {
            lon: self.col_center(gp.x),
            lat: self.row_center(gp.y),
        }
    }

    /// Longitude of the center of pixel column `x`. This expression is the
    /// single source of truth for center longitudes.
    #[inline]
    pub fn col_center(&self, x: i64) -> f64 {
        self.lon0 + (x as f64 + 0.5) * self.pixel_size
    }

    /// Latitude of the center of pixel row `y`; decreases as `y` grows.
    #[inline]
    pub fn row_center(&self, y: i64) -> f64 {
        self.lat0 - (y as f64 + 0.5) * self.pixel_size
    }

    /// Smallest column whose center longitude is `>= lon`.
    ///
    /// The closed-form estimate can be off by one ulp when `lon` falls
    /// exactly on a pixel center, so the result is corrected against the
    /// canonical [`col_center`](Self::col_center) predicate.
    pub fn first_col_center_at_or_after(&self, lon: f64) -> i64 {
        let t = (lon - self.lon0) / self.pixel_size - 0.5;
        let mut x = t.ceil().clamp(-9.0e15, 9.0e15) as i64;
        while self.col_center(x) < lon {
            x += 1;
        }
        while self.col_center(x - 1) >= lon {
            x -= 1;
        }
        x
    }

    /// Smallest row whose center latitude is `< lat` (row centers decrease
    /// southward). Corrected against the canonical predicate like
    /// [`first_col_center_at_or_after`](Self::first_col_center_at_or_after).
    pub fn first_row_center_below(&self, lat: f64) -> i64 {
        let t = (self.lat0 - lat) / self.pixel_size - 0.5;
        let mut y = t.floor().clamp(-9.0e15, 9.0e15) as i64 + 1;
        while self.row_center(y) >= lat {
            y += 1;
        }
        while self.row_center(y - 1) < lat {
            y -= 1;
        }
        y
    }

    /// Largest row whose center latitude is `>= lat`.
    pub fn last_row_center_at_or_above(&self, lat: f64) -> i64 {
        self.first_row_center_below(lat) - 1
    }
}

/// Axis-aligned bounding rectangle in world degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mbr {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl Mbr {
    /// Inverted rectangle used as the identity for folds; expanding it with
    /// any point yields a valid MBR.
    pub fn empty() -> Self {
        Mbr {
            min_lon: f64::INFINITY,
            min_lat: f64::INFINITY,
            max_lon: f64::NEG_INFINITY,
            max_lat: f64::NEG_INFINITY,
        }
    }

    pub fn new(min_lon: f64, min_lat: f64, max_lon: f64, max_lat: f64) -> Self {
        debug_assert!(min_lon <= max_lon && min_lat <= max_lat);
        Mbr {
            min_lon,
            min_lat,
            max_lon,
            max_lat,
        }
    }

    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a WorldPoint>) -> Self {
        let mut mbr = Mbr::empty();
        for p in points {
            mbr.expand_point(*p);
        }
        mbr
    }

    pub fn expand_point(&mut self, p: WorldPoint) {
        self.min_lon = self.min_lon.min(p.lon);
        self.min_lat = self.min_lat.min(p.lat);
        self.max_lon = self.max_lon.max(p.lon);
        self.max_lat = self.max_lat.max(p.lat);
    }

    pub fn expand(&mut self, other: &Mbr) {
        self.min_lon = self.min_lon.min(other.min_lon);
        self.min_lat = self.min_lat.min(other.min_lat);
        self.max_lon = self.max_lon.max(other.max_lon);
        self.max_lat = self.max_lat.max(other.max_lat);
    }

    pub fn width(&self) -> f64 {
        self.max_lon - self.min_lon
    }

    pub fn height(&self) -> f64 {
        self.max_lat - self.min_lat
    }

    pub fn area(&self) -> f64 {
        if self.min_lon > self.max_lon || self.min_lat > self.max_lat {
            0.0
        } else {
            self.width() * self.height()
        }
    }

    pub fn center(&self) -> WorldPoint {
        WorldPoint {
            lon: 0.5 * (self.min_lon + self.max_lon),
            lat: 0.5 * (self.min_lat + self.max_lat),
        }
    }

    pub fn contains_point(&self, p: WorldPoint) -> bool {
        p.lon >= self.min_lon && p.lon <= self.max_lon && p.lat >= self.min_lat && p.lat <= self.max_lat
    }

    pub fn intersects(&self, other: &Mbr) -> bool {
        self.min_lon <= other.max_lon
            && self.max_lon >= other.min_lon
            && self.min_lat <= other.max_lat
            && self.max_lat >= other.min_lat
    }
}

/// One straight boundary edge of a polygon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: WorldPoint,
    pub b: WorldPoint,
    pub pid: u32,
}

/// A polygon made of one or more closed rings (an outer boundary plus
/// optional holes, or several disjoint parts). Containment is defined by the
/// even-odd rule over all rings, so the ring roles never need to be told
/// apart.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    pid: u32,
    rings: Vec<Vec<WorldPoint>>,
    mbr: Mbr,
}

impl Polygon {
    /// Build a polygon, validating that every ring closes (first point equals
    /// the last bit-for-bit), has at least four points, finite coordinates,
    /// and no zero-length edges.
    pub fn new(pid: u32, rings: Vec<Vec<WorldPoint>>) -> Result<Self> {
        if rings.is_empty() {
            return Err(Error::InvalidPolygon {
                pid,
                detail: "polygon has no rings".into(),
            });
        }
        let mut mbr = Mbr::empty();
        for (ri, ring) in rings.iter().enumerate() {
            if ring.len() < 4 {
                return Err(Error::InvalidPolygon {
                    pid,
                    detail: format!("ring {ri} has {} points, need at least 4", ring.len()),
                });
            }
            let first = ring[0];
            let last = *ring.last().unwrap();
            if first != last {
                return Err(Error::InvalidPolygon {
                    pid,
                    detail: format!("ring {ri} is not closed"),
                });
            }
            for (i, p) in ring.iter().enumerate() {
                if !p.lon.is_finite() || !p.lat.is_finite() {
                    return Err(Error::InvalidPolygon {
                        pid,
                        detail: format!("ring {ri} point {i} has non-finite coordinates"),
                    });
                }
                mbr.expand_point(*p);
            }
            for (i, w) in ring.windows(2).enumerate() {
                if w[0] == w[1] {
                    return Err(Error::InvalidPolygon {
                        pid,
                        detail: format!("ring {ri} has a zero-length edge at point {i}"),
                    });
                }
            }
        }
        Ok(Polygon { pid, rings, mbr })
    }

    /// Skip validation; used by tests that need deliberately broken rings.
    #[doc(hidden)]
    pub fn new_unchecked(pid: u32, rings: Vec<Vec<WorldPoint>>) -> Self {
        let mut mbr = Mbr::empty();
        for ring in &rings {
            for p in ring {
                mbr.expand_point(*p);
            }
        }
        Polygon { pid, rings, mbr }
    }

    pub fn pid(&self) -> u32 {
        self.pid
    }

    pub fn rings(&self) -> &[Vec<WorldPoint>] {
        &self.rings
    }

    pub fn mbr(&self) -> Mbr {
        self.mbr
    }

    /// Number of boundary edges over all rings (a closed ring of k points
    /// contributes k-1 edges).
    pub fn segment_count(&self) -> u64 {
        self.rings.iter().map(|r| (r.len() - 1) as u64).sum()
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        let pid = self.pid;
        self.rings
            .iter()
            .flat_map(move |ring| ring.windows(2).map(move |w| Segment { a: w[0], b: w[1], pid }))
    }
}

/// Tight bounding rectangle of a polygon.
pub fn polygon_mbr(poly: &Polygon) -> Mbr {
    poly.mbr()
}

/// Longitude at which segment `a -> b` crosses latitude `lat`.
///
/// Everything that reasons about boundary crossings evaluates this exact
/// expression with endpoints in ring order, so independent code paths see
/// bit-identical crossing longitudes.
#[inline]
pub fn crossing_lon(a: WorldPoint, b: WorldPoint, lat: f64) -> f64 {
    a.lon + (lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat)
}

/// Whether segment `a -> b` spans latitude `lat` under the half-open rule
/// `[min(lat), max(lat))`. Horizontal segments span nothing; a vertex shared
/// by two edges is counted exactly once unless it is a local extremum, in
/// which case it is counted twice or not at all — both keep parity even.
#[inline]
pub fn segment_spans_lat(a: WorldPoint, b: WorldPoint, lat: f64) -> bool {
    (a.lat > lat) != (b.lat > lat)
}

/// Even-odd containment test: `pt` is inside iff an eastward ray crosses the
/// boundary an odd number of times.
pub fn point_in_polygon(pt: WorldPoint, poly: &Polygon) -> bool {
    let mut inside = false;
    for ring in poly.rings() {
        for w in ring.windows(2) {
            let (a, b) = (w[0], w[1]);
            if segment_spans_lat(a, b, pt.lat) && crossing_lon(a, b, pt.lat) > pt.lon {
                inside = !inside;
            }
        }
    }
    inside
}
