//! Selection step: turn intersection-file footers into units of parallel
//! work, then stream `(pid, measurement)` pairs out of the raster tiles each
//! unit names.
//!
//! Split generation needs nothing but the footers: tiles absent from every
//! footer never appear in any split, which is what prunes untouched parts of
//! the raster. Each split pairs one vector chunk with a contiguous envelope
//! of tile ids from one raster file; the envelope may skip absent tids, and
//! its width is capped by `split_size`.

use crate::error::{Error, Result};
use crate::intersection::{IntersectionFooter, IntersectionReader};
use crate::raster::{PixelValue, RasterFile, TileId};

/// Smallest unit of selection work: one chunk against one tile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RaptorObject {
    pub chunk_id: u32,
    pub tid: u32,
}

/// One task: a vector chunk joined with the tile-id envelope
/// `[tid_lo, tid_hi]` within a single raster file. `workload` counts the
/// tiles actually present in the chunk's footer inside that envelope.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RaptorSplit {
    pub chunk_id: u32,
    pub raster_file_id: u32,
    pub tid_lo: u32,
    pub tid_hi: u32,
    pub workload: u32,
}

/// Tile-id range `[tid_lo, tid_hi]` owned by one raster file, for rasters
/// stored as several files. A single-file raster is one range covering all
/// tiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TileFileRange {
    pub file_id: u32,
    pub tid_lo: u32,
    pub tid_hi: u32,
}

impl TileFileRange {
    pub fn whole(file_id: u32, tile_count: u32) -> Self {
        TileFileRange {
            file_id,
            tid_lo: 0,
            tid_hi: tile_count.saturating_sub(1),
        }
    }
}

/// Build the task list for a set of chunks. Every `(chunk, present tid)`
/// pair lands in exactly one split; tids missing from all footers are
/// pruned. No split spans two raster files or an envelope wider than
/// `split_size` tiles.
pub fn generate_splits(
    footers: &[IntersectionFooter],
    file_ranges: &[TileFileRange],
    split_size: u32,
) -> Result<Vec<RaptorSplit>> {
    if split_size == 0 {
        return Err(Error::InvalidConfig("split size must be at least 1".into()));
    }
    let file_of = |tid: u32| -> Result<u32> {
        file_ranges
            .iter()
            .find(|r| tid >= r.tid_lo && tid <= r.tid_hi)
            .map(|r| r.file_id)
            .ok_or_else(|| Error::InvalidConfig(format!("tile {tid} belongs to no raster file range")))
    };

    let mut splits = Vec::new();
    for footer in footers {
        let mut current: Option<(RaptorSplit, u32)> = None; // split + its file id
        for &(tid, _) in &footer.tile_index {
            let file_id = file_of(tid)?;
            match current.as_mut() {
                Some((split, cur_file))
                    if *cur_file == file_id && tid - split.tid_lo + 1 <= split_size =>
                {
                    split.tid_hi = tid;
                    split.workload += 1;
                }
                _ => {
                    if let Some((done, _)) = current.take() {
                        splits.push(done);
                    }
                    current = Some((
                        RaptorSplit {
                            chunk_id: footer.chunk_id,
                            raster_file_id: file_id,
                            tid_lo: tid,
                            tid_hi: tid,
                            workload: 1,
                        },
                        file_id,
                    ));
                }
            }
        }
        if let Some((done, _)) = current {
            splits.push(done);
        }
    }
    Ok(splits)
}

/// Expand a split back into its RaptorObjects (the present tiles it covers).
pub fn split_objects(split: &RaptorSplit, footer: &IntersectionFooter) -> Vec<RaptorObject> {
    footer
        .tile_index
        .iter()
        .filter(|&&(tid, _)| tid >= split.tid_lo && tid <= split.tid_hi)
        .map(|&(tid, _)| RaptorObject {
            chunk_id: split.chunk_id,
            tid,
        })
        .collect()
}

/// Process one split: load each present tile once, walk its records, and
/// stream every covered pixel's `(pid, value)` to the sink. Pairs are never
/// materialized.
pub fn process_split(
    split: &RaptorSplit,
    raster: &RasterFile,
    reader: &IntersectionReader,
    sink: &mut impl FnMut(u32, PixelValue) -> Result<()>,
) -> Result<()> {
    let meta = raster.metadata();
    for &(tid, _) in reader
        .footer()
        .tile_index
        .iter()
        .filter(|&&(tid, _)| tid >= split.tid_lo && tid <= split.tid_hi)
    {
        let tile = raster.read_tile(TileId(tid))?;
        let (col0, col1) = meta.tile_col_range(TileId(tid));
        let (row0, row1) = meta.tile_row_range(TileId(tid));
        for rec in reader.records_for_tile(tid)? {
            let y = rec.y as u64;
            if y < row0 || y >= row1 || (rec.x_start as u64) < col0 || (rec.x_end as u64) > col1 || rec.x_start >= rec.x_end
            {
                return Err(Error::CorruptRecord {
                    detail: format!(
                        "record (tid {tid}, y {}, pid {}, x [{}, {})) escapes its tile",
                        rec.y, rec.pid, rec.x_start, rec.x_end
                    ),
                });
            }
            let local_y = (y - row0) as u32;
            for x in rec.x_start as u64..rec.x_end as u64 {
                let value = tile.get(local_y, (x - col0) as u32);
                sink(rec.pid, value)?;
            }
        }
    }
    Ok(())
}
