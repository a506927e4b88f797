//! Seeded synthetic polygon layers for tests, benchmarks, and the CLI.
//!
//! Polygons are star-shaped: vertices sit at sorted angles around a center
//! with jittered radii, so they are always simple (non-self-intersecting).
//! Zero jitter produces regular convex polygons. Output order is shuffled so
//! that input-order chunking carries no accidental spatial locality.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geom::{Mbr, Polygon, WorldPoint};
use crate::vector::VectorDataset;

#[derive(Clone, Debug)]
pub struct PolygonGenConfig {
    pub count: usize,
    /// Inclusive vertex-count range per polygon.
    pub vertices_min: usize,
    pub vertices_max: usize,
    /// Circumradius range in degrees.
    pub radius_min: f64,
    pub radius_max: f64,
    /// Radius jitter in [0, 1): 0 gives regular convex polygons, larger
    /// values spikier stars.
    pub jitter: f64,
    /// Region the polygon centers are drawn from.
    pub extent: Mbr,
    /// Number of spatial clusters; 0 draws centers uniformly over the extent.
    pub clusters: usize,
    /// Radius of each cluster in degrees (ignored when `clusters == 0`).
    pub cluster_radius: f64,
    pub seed: u64,
}

impl Default for PolygonGenConfig {
    fn default() -> Self {
        PolygonGenConfig {
            count: 10,
            vertices_min: 3,
            vertices_max: 12,
            radius_min: 0.5,
            radius_max: 2.0,
            jitter: 0.4,
            extent: Mbr::new(0.0, 0.0, 100.0, 100.0),
            clusters: 0,
            cluster_radius: 1.0,
            seed: 0,
        }
    }
}

/// Generate `cfg.count` polygons with pids `0..count` assigned after the
/// spatial shuffle.
pub fn generate_polygons(cfg: &PolygonGenConfig) -> Vec<Polygon> {
    assert!(cfg.vertices_min >= 3 && cfg.vertices_max >= cfg.vertices_min);
    assert!(cfg.radius_min > 0.0 && cfg.radius_max >= cfg.radius_min);
    assert!((0.0..1.0).contains(&cfg.jitter));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let cluster_centers: Vec<WorldPoint> = (0..cfg.clusters)
        .map(|_| WorldPoint {
            lon: rng.random_range(cfg.extent.min_lon..cfg.extent.max_lon),
            lat: rng.random_range(cfg.extent.min_lat..cfg.extent.max_lat),
        })
        .collect();

    let mut centers: Vec<WorldPoint> = (0..cfg.count)
        .map(|_| {
            if cluster_centers.is_empty() {
                WorldPoint {
                    lon: rng.random_range(cfg.extent.min_lon..cfg.extent.max_lon),
                    lat: rng.random_range(cfg.extent.min_lat..cfg.extent.max_lat),
                }
            } else {
                let c = cluster_centers[rng.random_range(0..cluster_centers.len())];
                WorldPoint {
                    lon: c.lon + rng.random_range(-cfg.cluster_radius..cfg.cluster_radius),
                    lat: c.lat + rng.random_range(-cfg.cluster_radius..cfg.cluster_radius),
                }
            }
        })
        .collect();
    centers.shuffle(&mut rng);

    centers
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let verts = rng.random_range(cfg.vertices_min..=cfg.vertices_max);
            let radius = rng.random_range(cfg.radius_min..=cfg.radius_max);
            let rot = rng.random_range(0.0..std::f64::consts::TAU);
            let mut ring: Vec<WorldPoint> = (0..verts)
                .map(|k| {
                    let angle = rot + k as f64 / verts as f64 * std::f64::consts::TAU;
                    let r = radius * (1.0 - cfg.jitter * rng.random_range(0.0..1.0));
                    WorldPoint {
                        lon: c.lon + r * angle.cos(),
                        lat: c.lat + r * angle.sin(),
                    }
                })
                .collect();
            ring.push(ring[0]);
            Polygon::new(i as u32, vec![ring]).expect("star polygons are always valid")
        })
        .collect()
}

/// Generate polygons targeting a total segment count: `segments / vertices`
/// polygons of exactly `vertices` vertices each.
pub fn generate_for_segment_count(
    segments: u64,
    vertices: usize,
    base: &PolygonGenConfig,
) -> VectorDataset {
    let count = (segments as usize / vertices).max(1);
    let cfg = PolygonGenConfig {
        count,
        vertices_min: vertices,
        vertices_max: vertices,
        ..base.clone()
    };
    let polys = generate_polygons(&cfg);
    // 16 bytes per vertex is a fair stand-in for on-disk size.
    let bytes: u64 = polys.iter().map(|p| (p.segment_count() + 1) * 16).sum();
    VectorDataset::new(polys, bytes).expect("generated pids are unique")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        let cfg = PolygonGenConfig {
            count: 50,
            seed: 42,
            ..Default::default()
        };
        let a = generate_polygons(&cfg);
        let b = generate_polygons(&cfg);
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        for p in &a {
            assert!(p.segment_count() >= 3);
        }
    }

    #[test]
    fn clustered_centers_stay_near_clusters() {
        let cfg = PolygonGenConfig {
            count: 200,
            clusters: 4,
            cluster_radius: 2.0,
            radius_min: 0.1,
            radius_max: 0.2,
            seed: 7,
            ..Default::default()
        };
        let polys = generate_polygons(&cfg);
        // Centers must occupy few distinct 10x10 cells of the 100x100 extent:
        // each cluster (radius 2) touches at most 4 cells.
        let cells: std::collections::HashSet<(i64, i64)> = polys
            .iter()
            .map(|p| {
                let c = p.mbr().center();
                ((c.lon / 10.0).floor() as i64, (c.lat / 10.0).floor() as i64)
            })
            .collect();
        assert!(cells.len() <= 16, "centers spread over {} cells", cells.len());
    }

    #[test]
    fn segment_count_targeting() {
        let ds = generate_for_segment_count(1000, 10, &PolygonGenConfig::default());
        assert_eq!(ds.stats().segment_count, 1000);
        assert_eq!(ds.stats().polygon_count, 100);
    }
}
