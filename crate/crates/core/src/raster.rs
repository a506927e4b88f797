//! Tiled raster model and its on-disk "RTIL" container.
//!
//! An RTIL file stores a dense 2-D grid of measurements as equi-sized tiles
//! identified by sequence numbers. The layout is, in order:
//!
//! * header: magic `RTIL`, version `u16`, cols `u64`, rows `u64`,
//!   tile width `u32`, tile height `u32`, pixel order `u8`, value type `u8`,
//!   compression `u8`, then the affine mapping as three `f64`
//!   (west edge, north edge, pixel size) — all little-endian;
//! * tile lookup table: `(offset u64, byte length u64)` per tile id;
//! * tile payloads, in tile-id order, each optionally deflate-compressed on
//!   its own so any single tile can be decoded independently.
//!
//! Tiles at the right/bottom edge are ragged (clipped, never padded), so the
//! pixel counts across tiles always sum to `cols * rows`. Readers are safe to
//! share across threads; every [`RasterFile::read_tile`] call bumps an atomic
//! tile-load counter that the pipelines and test suites use for IO
//! accounting.

use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use byteorder::{ByteOrder, LittleEndian, ReadBytesExt, WriteBytesExt};
use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::AffineGeo;

const MAGIC: &[u8; 4] = b"RTIL";
const VERSION: u16 = 1;
const HEADER_LEN: u64 = 4 + 2 + 8 + 8 + 4 + 4 + 1 + 1 + 1 + 24;
const LOOKUP_ENTRY_LEN: u64 = 16;

/// Storage order of pixels inside a tile. Tile numbering itself is always
/// row-major; this flag also selects the sort order of intersection records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PixelOrder {
    RowMajor,
    ColumnMajor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueType {
    Int32,
    Float64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Compression {
    None,
    Deflate,
}

/// Sequence number of a tile: `tile_row * tiles_per_row + tile_col`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TileId(pub u32);

/// Everything the intersection step is allowed to know about a raster:
/// dimensions, tile geometry, and the affine mapping. A few dozen bytes,
/// independent of pixel count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterMetadata {
    pub cols: u64,
    pub rows: u64,
    pub tile_w: u32,
    pub tile_h: u32,
    pub geo: AffineGeo,
    pub order: PixelOrder,
    pub value_type: ValueType,
}

impl RasterMetadata {
    pub fn new(
        cols: u64,
        rows: u64,
        tile_w: u32,
        tile_h: u32,
        geo: AffineGeo,
        order: PixelOrder,
        value_type: ValueType,
    ) -> Result<Self> {
        if cols == 0 || rows == 0 || tile_w == 0 || tile_h == 0 {
            return Err(Error::InvalidConfig(
                "raster dimensions and tile dimensions must all be at least 1".into(),
            ));
        }
        if cols > u32::MAX as u64 || rows > u32::MAX as u64 {
            return Err(Error::InvalidConfig("raster dimensions exceed u32 range".into()));
        }
        let meta = RasterMetadata {
            cols,
            rows,
            tile_w,
            tile_h,
            geo,
            order,
            value_type,
        };
        if meta.tiles_per_row().checked_mul(meta.tiles_per_col()).is_none_or(|n| n > u32::MAX as u64) {
            return Err(Error::InvalidConfig("tile count exceeds u32 range".into()));
        }
        Ok(meta)
    }

    pub fn tiles_per_row(&self) -> u64 {
        self.cols.div_ceil(self.tile_w as u64)
    }

    pub fn tiles_per_col(&self) -> u64 {
        self.rows.div_ceil(self.tile_h as u64)
    }

    pub fn tile_count(&self) -> u32 {
        (self.tiles_per_row() * self.tiles_per_col()) as u32
    }

    pub fn tile_row(&self, tid: TileId) -> u64 {
        tid.0 as u64 / self.tiles_per_row()
    }

    pub fn tile_col(&self, tid: TileId) -> u64 {
        tid.0 as u64 % self.tiles_per_row()
    }

    /// Tile containing global pixel `(x, y)`. Caller guarantees bounds.
    pub fn tile_of(&self, x: u64, y: u64) -> TileId {
        debug_assert!(x < self.cols && y < self.rows);
        TileId(((y / self.tile_h as u64) * self.tiles_per_row() + x / self.tile_w as u64) as u32)
    }

    /// Global column range `[start, end)` covered by a tile (ragged-aware).
    pub fn tile_col_range(&self, tid: TileId) -> (u64, u64) {
        let start = self.tile_col(tid) * self.tile_w as u64;
        (start, (start + self.tile_w as u64).min(self.cols))
    }

    /// Global row range `[start, end)` covered by a tile (ragged-aware).
    pub fn tile_row_range(&self, tid: TileId) -> (u64, u64) {
        let start = self.tile_row(tid) * self.tile_h as u64;
        (start, (start + self.tile_h as u64).min(self.rows))
    }

    /// Actual `(width, height)` of a tile in pixels.
    pub fn tile_dims(&self, tid: TileId) -> (u32, u32) {
        let (c0, c1) = self.tile_col_range(tid);
        let (r0, r1) = self.tile_row_range(tid);
        ((c1 - c0) as u32, (r1 - r0) as u32)
    }

    fn check_tid(&self, tid: TileId) -> Result<()> {
        if tid.0 >= self.tile_count() {
            return Err(Error::TileOutOfRange {
                tid: tid.0,
                count: self.tile_count(),
            });
        }
        Ok(())
    }
}

/// One measurement value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PixelValue {
    Int(i32),
    Float(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum TileData {
    Int(Vec<i32>),
    Float(Vec<f64>),
}

impl TileData {
    pub fn len(&self) -> usize {
        match self {
            TileData::Int(v) => v.len(),
            TileData::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A dense block of measurements. `values` are always row-major in memory
/// regardless of the file's pixel order.
#[derive(Clone, Debug, PartialEq)]
pub struct Tile {
    pub tid: TileId,
    pub width: u32,
    pub height: u32,
    pub values: TileData,
}

impl Tile {
    /// Value at tile-local coordinates.
    #[inline]
    pub fn get(&self, local_y: u32, local_x: u32) -> PixelValue {
        debug_assert!(local_x < self.width && local_y < self.height);
        let idx = local_y as usize * self.width as usize + local_x as usize;
        match &self.values {
            TileData::Int(v) => PixelValue::Int(v[idx]),
            TileData::Float(v) => PixelValue::Float(v[idx]),
        }
    }
}

fn format_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::RasterFormat {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

fn encode_header(meta: &RasterMetadata, compression: Compression) -> Vec<u8> {
    let mut h = Vec::with_capacity(HEADER_LEN as usize);
    h.extend_from_slice(MAGIC);
    h.write_u16::<LittleEndian>(VERSION).unwrap();
    h.write_u64::<LittleEndian>(meta.cols).unwrap();
    h.write_u64::<LittleEndian>(meta.rows).unwrap();
    h.write_u32::<LittleEndian>(meta.tile_w).unwrap();
    h.write_u32::<LittleEndian>(meta.tile_h).unwrap();
    h.push(match meta.order {
        PixelOrder::RowMajor => 0,
        PixelOrder::ColumnMajor => 1,
    });
    h.push(match meta.value_type {
        ValueType::Int32 => 0,
        ValueType::Float64 => 1,
    });
    h.push(match compression {
        Compression::None => 0,
        Compression::Deflate => 1,
    });
    h.write_f64::<LittleEndian>(meta.geo.lon0).unwrap();
    h.write_f64::<LittleEndian>(meta.geo.lat0).unwrap();
    h.write_f64::<LittleEndian>(meta.geo.pixel_size).unwrap();
    debug_assert_eq!(h.len() as u64, HEADER_LEN);
    h
}

fn decode_header(path: &Path, buf: &[u8]) -> Result<(RasterMetadata, Compression)> {
    if buf.len() < HEADER_LEN as usize {
        return Err(format_err(path, "truncated header"));
    }
    if &buf[0..4] != MAGIC {
        return Err(format_err(path, "bad magic"));
    }
    let mut r = &buf[4..];
    let version = r.read_u16::<LittleEndian>()?;
    if version != VERSION {
        return Err(format_err(path, format!("unsupported version {version}")));
    }
    let cols = r.read_u64::<LittleEndian>()?;
    let rows = r.read_u64::<LittleEndian>()?;
    let tile_w = r.read_u32::<LittleEndian>()?;
    let tile_h = r.read_u32::<LittleEndian>()?;
    let order = match r.read_u8()? {
        0 => PixelOrder::RowMajor,
        1 => PixelOrder::ColumnMajor,
        v => return Err(format_err(path, format!("bad pixel order byte {v}"))),
    };
    let value_type = match r.read_u8()? {
        0 => ValueType::Int32,
        1 => ValueType::Float64,
        v => return Err(format_err(path, format!("bad value type byte {v}"))),
    };
    let compression = match r.read_u8()? {
        0 => Compression::None,
        1 => Compression::Deflate,
        v => return Err(format_err(path, format!("bad compression byte {v}"))),
    };
    let lon0 = r.read_f64::<LittleEndian>()?;
    let lat0 = r.read_f64::<LittleEndian>()?;
    let pixel_size = r.read_f64::<LittleEndian>()?;
    if !(pixel_size > 0.0) || !pixel_size.is_finite() {
        return Err(format_err(path, "non-positive pixel size"));
    }
    let meta = RasterMetadata::new(
        cols,
        rows,
        tile_w,
        tile_h,
        AffineGeo::new(lon0, lat0, pixel_size),
        order,
        value_type,
    )
    .map_err(|e| format_err(path, e.to_string()))?;
    Ok((meta, compression))
}

/// Read only the file header. Never touches the lookup table or any tile
/// bytes, so calling this leaves every tile-load counter untouched.
pub fn read_metadata(path: &Path) -> Result<RasterMetadata> {
    let file = File::open(path)?;
    let mut buf = vec![0u8; HEADER_LEN as usize];
    file.read_exact_at(&mut buf, 0)
        .map_err(|_| format_err(path, "truncated header"))?;
    Ok(decode_header(path, &buf)?.0)
}

fn encode_payload(meta: &RasterMetadata, tile: &Tile, compression: Compression) -> Result<Vec<u8>> {
    let w = tile.width as usize;
    let h = tile.height as usize;
    let raw = match (&tile.values, meta.value_type) {
        (TileData::Int(v), ValueType::Int32) => {
            let mut raw = vec![0u8; v.len() * 4];
            match meta.order {
                PixelOrder::RowMajor => LittleEndian::write_i32_into(v, &mut raw),
                PixelOrder::ColumnMajor => {
                    for x in 0..w {
                        for y in 0..h {
                            let off = (x * h + y) * 4;
                            LittleEndian::write_i32(&mut raw[off..off + 4], v[y * w + x]);
                        }
                    }
                }
            }
            raw
        }
        (TileData::Float(v), ValueType::Float64) => {
            let mut raw = vec![0u8; v.len() * 8];
            match meta.order {
                PixelOrder::RowMajor => LittleEndian::write_f64_into(v, &mut raw),
                PixelOrder::ColumnMajor => {
                    for x in 0..w {
                        for y in 0..h {
                            let off = (x * h + y) * 8;
                            LittleEndian::write_f64(&mut raw[off..off + 8], v[y * w + x]);
                        }
                    }
                }
            }
            raw
        }
        _ => {
            return Err(Error::TileLayout {
                tid: tile.tid.0,
                detail: "tile data does not match the raster value type".into(),
            })
        }
    };
    match compression {
        Compression::None => Ok(raw),
        Compression::Deflate => {
            let mut enc = DeflateEncoder::new(Vec::new(), flate2::Compression::default());
            enc.write_all(&raw)?;
            Ok(enc.finish()?)
        }
    }
}

fn decode_payload(meta: &RasterMetadata, tid: TileId, bytes: &[u8], compression: Compression) -> Result<Tile> {
    let (w, h) = meta.tile_dims(tid);
    let n = w as usize * h as usize;
    let value_len = match meta.value_type {
        ValueType::Int32 => 4,
        ValueType::Float64 => 8,
    };
    let raw = match compression {
        Compression::None => bytes.to_vec(),
        Compression::Deflate => {
            let mut raw = Vec::with_capacity(n * value_len);
            DeflateDecoder::new(bytes).read_to_end(&mut raw)?;
            raw
        }
    };
    if raw.len() != n * value_len {
        return Err(Error::TileLayout {
            tid: tid.0,
            detail: format!("payload has {} bytes, expected {}", raw.len(), n * value_len),
        });
    }
    let values = match meta.value_type {
        ValueType::Int32 => {
            let mut v = vec![0i32; n];
            LittleEndian::read_i32_into(&raw, &mut v);
            if meta.order == PixelOrder::ColumnMajor {
                let mut t = vec![0i32; n];
                for x in 0..w as usize {
                    for y in 0..h as usize {
                        t[y * w as usize + x] = v[x * h as usize + y];
                    }
                }
                v = t;
            }
            TileData::Int(v)
        }
        ValueType::Float64 => {
            let mut v = vec![0f64; n];
            LittleEndian::read_f64_into(&raw, &mut v);
            if meta.order == PixelOrder::ColumnMajor {
                let mut t = vec![0f64; n];
                for x in 0..w as usize {
                    for y in 0..h as usize {
                        t[y * w as usize + x] = v[x * h as usize + y];
                    }
                }
                v = t;
            }
            TileData::Float(v)
        }
    };
    Ok(Tile {
        tid,
        width: w,
        height: h,
        values,
    })
}

/// Write a raster file from a producer that yields each tile exactly once,
/// in tile-id order. Yielding a tile out of sequence, twice, or not at all is
/// a format error.
pub fn write_raster(
    path: &Path,
    meta: &RasterMetadata,
    compression: Compression,
    tiles: impl IntoIterator<Item = Tile>,
) -> Result<()> {
    let count = meta.tile_count();
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&encode_header(meta, compression))?;
    // Reserve the lookup table; filled in after the payloads are sized.
    out.write_all(&vec![0u8; (count as u64 * LOOKUP_ENTRY_LEN) as usize])?;

    let mut lookup = Vec::with_capacity(count as usize);
    let mut offset = HEADER_LEN + count as u64 * LOOKUP_ENTRY_LEN;
    let mut next = 0u32;
    for tile in tiles {
        if tile.tid.0 != next {
            return Err(Error::TileSequence {
                expected: next,
                got: tile.tid.0,
            });
        }
        if next >= count {
            return Err(Error::TileSequence {
                expected: count,
                got: tile.tid.0,
            });
        }
        let (w, h) = meta.tile_dims(tile.tid);
        if tile.width != w || tile.height != h || tile.values.len() != (w as usize * h as usize) {
            return Err(Error::TileLayout {
                tid: tile.tid.0,
                detail: format!(
                    "tile is {}x{} with {} values, expected {w}x{h}",
                    tile.width,
                    tile.height,
                    tile.values.len()
                ),
            });
        }
        let payload = encode_payload(meta, &tile, compression)?;
        out.write_all(&payload)?;
        lookup.push((offset, payload.len() as u64));
        offset += payload.len() as u64;
        next += 1;
    }
    if next != count {
        return Err(Error::TileSequence {
            expected: next,
            got: count,
        });
    }

    out.flush()?;
    let mut file = out.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    file.seek(SeekFrom::Start(HEADER_LEN))?;
    let mut table = Vec::with_capacity(lookup.len() * LOOKUP_ENTRY_LEN as usize);
    for (off, len) in &lookup {
        table.write_u64::<LittleEndian>(*off).unwrap();
        table.write_u64::<LittleEndian>(*len).unwrap();
    }
    file.write_all(&table)?;
    file.sync_all()?;
    Ok(())
}

/// Read-only handle on a raster file. Safe to share across worker threads;
/// tile reads use positioned IO and bump a shared atomic load counter.
pub struct RasterFile {
    path: PathBuf,
    file: File,
    meta: RasterMetadata,
    compression: Compression,
    lookup: Vec<(u64, u64)>,
    tile_loads: AtomicU64,
}

impl RasterFile {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let mut head = vec![0u8; HEADER_LEN as usize];
        file.read_exact_at(&mut head, 0)
            .map_err(|_| format_err(path, "truncated header"))?;
        let (meta, compression) = decode_header(path, &head)?;
        let count = meta.tile_count() as u64;
        let mut table = vec![0u8; (count * LOOKUP_ENTRY_LEN) as usize];
        file.read_exact_at(&mut table, HEADER_LEN)
            .map_err(|_| format_err(path, "truncated tile lookup table"))?;
        let mut lookup = Vec::with_capacity(count as usize);
        let mut r = &table[..];
        for _ in 0..count {
            let off = r.read_u64::<LittleEndian>()?;
            let len = r.read_u64::<LittleEndian>()?;
            lookup.push((off, len));
        }
        Ok(RasterFile {
            path: path.to_path_buf(),
            file,
            meta,
            compression,
            lookup,
            tile_loads: AtomicU64::new(0),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn metadata(&self) -> &RasterMetadata {
        &self.meta
    }

    pub fn compression(&self) -> Compression {
        self.compression
    }

    /// Load and decode one tile. Counts one tile load.
    pub fn read_tile(&self, tid: TileId) -> Result<Tile> {
        self.meta.check_tid(tid)?;
        let (off, len) = self.lookup[tid.0 as usize];
        let mut buf = vec![0u8; len as usize];
        self.file.read_exact_at(&mut buf, off)?;
        self.tile_loads.fetch_add(1, Ordering::Relaxed);
        decode_payload(&self.meta, tid, &buf, self.compression)
    }

    /// Total tiles loaded through this handle since it was opened.
    pub fn tile_loads(&self) -> u64 {
        self.tile_loads.load(Ordering::Relaxed)
    }
}

/// Synthetic fill patterns for generated rasters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FillPattern {
    /// Every pixel holds the same value.
    Constant(f64),
    /// `pixel(x, y) = x + y` in global coordinates.
    Gradient,
    /// Per-tile seeded uniform values; bit-identical across runs and
    /// independent of tile iteration order.
    Random { seed: u64, max: u32 },
}

fn tile_seed(seed: u64, tid: u32) -> u64 {
    // splitmix64 round so neighbouring tile ids decorrelate.
    let mut z = seed ^ (tid as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Materialize one tile of a synthetic raster.
pub fn make_tile(meta: &RasterMetadata, tid: TileId, pattern: FillPattern) -> Tile {
    let (w, h) = meta.tile_dims(tid);
    let (c0, _) = meta.tile_col_range(tid);
    let (r0, _) = meta.tile_row_range(tid);
    let n = w as usize * h as usize;
    let mut rng = match pattern {
        FillPattern::Random { seed, .. } => Some(ChaCha8Rng::seed_from_u64(tile_seed(seed, tid.0))),
        _ => None,
    };
    let mut at = |x: u64, y: u64| -> f64 {
        match pattern {
            FillPattern::Constant(v) => v,
            FillPattern::Gradient => (x + y) as f64,
            FillPattern::Random { max, .. } => rng.as_mut().unwrap().random_range(0..max.max(1)) as f64,
        }
    };
    let values = match meta.value_type {
        ValueType::Int32 => {
            let mut v = Vec::with_capacity(n);
            for y in 0..h as u64 {
                for x in 0..w as u64 {
                    v.push(at(c0 + x, r0 + y) as i32);
                }
            }
            TileData::Int(v)
        }
        ValueType::Float64 => {
            let mut v = Vec::with_capacity(n);
            for y in 0..h as u64 {
                for x in 0..w as u64 {
                    v.push(at(c0 + x, r0 + y));
                }
            }
            TileData::Float(v)
        }
    };
    Tile {
        tid,
        width: w,
        height: h,
        values,
    }
}

/// Generate and write a synthetic raster. Deterministic for a given pattern.
pub fn generate_raster(
    path: &Path,
    meta: &RasterMetadata,
    compression: Compression,
    pattern: FillPattern,
) -> Result<()> {
    let tiles = (0..meta.tile_count()).map(|tid| make_tile(meta, TileId(tid), pattern));
    write_raster(path, meta, compression, tiles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::AffineGeo;
    use tempfile::TempDir;

    fn meta(cols: u64, rows: u64, tw: u32, th: u32, vt: ValueType) -> RasterMetadata {
        RasterMetadata::new(cols, rows, tw, th, AffineGeo::new(0.0, rows as f64, 1.0), PixelOrder::RowMajor, vt)
            .unwrap()
    }

    #[test]
    fn tiling_arithmetic() {
        let m = meta(4, 4, 2, 2, ValueType::Int32);
        assert_eq!(m.tile_count(), 4);
        assert_eq!(m.tile_col_range(TileId(3)), (2, 4));
        assert_eq!(m.tile_row_range(TileId(3)), (2, 4));

        let m = meta(5, 5, 2, 2, ValueType::Int32);
        assert_eq!(m.tile_count(), 9);
        assert_eq!(m.tile_dims(TileId(2)), (1, 2));
        assert_eq!(m.tile_dims(TileId(8)), (1, 1));

        let m = meta(40320, 16353, 128, 128, ValueType::Int32);
        assert_eq!(m.tiles_per_row(), 315);
        assert_eq!(m.tiles_per_col(), 128);
        assert_eq!(m.tile_count(), 40320);
    }

    #[test]
    fn tid_row_col_bijection() {
        let m = meta(37, 23, 8, 5, ValueType::Int32);
        let mut seen = std::collections::HashSet::new();
        for tid in 0..m.tile_count() {
            let key = (m.tile_row(TileId(tid)), m.tile_col(TileId(tid)));
            assert!(seen.insert(key));
            assert_eq!(
                tid as u64,
                key.0 * m.tiles_per_row() + key.1,
                "tid must be row-major over (tile_row, tile_col)"
            );
        }
    }

    #[test]
    fn pixel_counts_sum_to_grid() {
        for (c, r, tw, th) in [(4u64, 4u64, 2u32, 2u32), (5, 5, 2, 2), (33, 17, 8, 6), (1, 1, 4, 4)] {
            let m = meta(c, r, tw, th, ValueType::Int32);
            let total: u64 = (0..m.tile_count())
                .map(|t| {
                    let (w, h) = m.tile_dims(TileId(t));
                    w as u64 * h as u64
                })
                .sum();
            assert_eq!(total, c * r);
        }
    }

    fn roundtrip(meta: &RasterMetadata, compression: Compression, pattern: FillPattern) {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("t.rtil");
        generate_raster(&path, meta, compression, pattern).unwrap();

        assert_eq!(read_metadata(&path).unwrap(), *meta);

        let file = RasterFile::open(&path).unwrap();
        assert_eq!(file.compression(), compression);
        for tid in 0..meta.tile_count() {
            let tile = file.read_tile(TileId(tid)).unwrap();
            let expect = make_tile(meta, TileId(tid), pattern);
            assert_eq!(tile, expect);
        }
        assert_eq!(file.tile_loads(), meta.tile_count() as u64);
    }

    #[test]
    fn read_after_write_all_modes() {
        for vt in [ValueType::Int32, ValueType::Float64] {
            for compression in [Compression::None, Compression::Deflate] {
                let m = meta(13, 9, 4, 4, vt);
                roundtrip(&m, compression, FillPattern::Gradient);
                roundtrip(&m, compression, FillPattern::Random { seed: 1, max: 100 });
            }
        }
    }

    #[test]
    fn column_major_roundtrip() {
        let m = RasterMetadata::new(
            7,
            5,
            3,
            2,
            AffineGeo::new(0.0, 5.0, 1.0),
            PixelOrder::ColumnMajor,
            ValueType::Int32,
        )
        .unwrap();
        roundtrip(&m, Compression::None, FillPattern::Gradient);
    }

    #[test]
    fn constant_and_gradient_values() {
        let dir = TempDir::new().unwrap();
        let m = meta(4, 4, 2, 2, ValueType::Int32);

        let path = dir.path().join("c.rtil");
        generate_raster(&path, &m, Compression::None, FillPattern::Constant(7.0)).unwrap();
        let f = RasterFile::open(&path).unwrap();
        let t = f.read_tile(TileId(0)).unwrap();
        assert_eq!(t.values, TileData::Int(vec![7; 4]));

        let path = dir.path().join("g.rtil");
        generate_raster(&path, &m, Compression::None, FillPattern::Gradient).unwrap();
        let f = RasterFile::open(&path).unwrap();
        // tid 3 covers global pixels (2..4, 2..4); gradient = x + y.
        let t = f.read_tile(TileId(3)).unwrap();
        assert_eq!(t.values, TileData::Int(vec![4, 5, 5, 6]));
    }

    #[test]
    fn seeded_random_is_bit_identical() {
        let dir = TempDir::new().unwrap();
        let m = meta(10, 10, 3, 3, ValueType::Int32);
        let (a, b) = (dir.path().join("a.rtil"), dir.path().join("b.rtil"));
        let pat = FillPattern::Random { seed: 1, max: 1000 };
        generate_raster(&a, &m, Compression::Deflate, pat).unwrap();
        generate_raster(&b, &m, Compression::Deflate, pat).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn metadata_read_touches_no_tiles() {
        let dir = TempDir::new().unwrap();
        let m = meta(6, 6, 2, 2, ValueType::Int32);
        let path = dir.path().join("t.rtil");
        generate_raster(&path, &m, Compression::None, FillPattern::Gradient).unwrap();
        let file = RasterFile::open(&path).unwrap();
        let _ = read_metadata(&path).unwrap();
        assert_eq!(file.tile_loads(), 0);
    }

    #[test]
    fn header_errors() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("bad.rtil");
        std::fs::write(&path, b"RTIL\x01").unwrap();
        assert!(matches!(read_metadata(&path), Err(Error::RasterFormat { .. })));
        std::fs::write(&path, vec![0u8; 80]).unwrap();
        assert!(matches!(read_metadata(&path), Err(Error::RasterFormat { .. })));
    }

    #[test]
    fn tile_sequence_errors() {
        let dir = TempDir::new().unwrap();
        let m = meta(4, 4, 2, 2, ValueType::Int32);
        let path = dir.path().join("t.rtil");

        // Missing final tile.
        let tiles: Vec<Tile> = (0..3).map(|t| make_tile(&m, TileId(t), FillPattern::Constant(0.0))).collect();
        assert!(matches!(
            write_raster(&path, &m, Compression::None, tiles),
            Err(Error::TileSequence { .. })
        ));

        // Duplicate tile arrives where the next id was expected.
        let tiles = vec![
            make_tile(&m, TileId(0), FillPattern::Constant(0.0)),
            make_tile(&m, TileId(0), FillPattern::Constant(0.0)),
        ];
        assert!(matches!(
            write_raster(&path, &m, Compression::None, tiles),
            Err(Error::TileSequence { expected: 1, got: 0 })
        ));
    }

    #[test]
    fn out_of_range_tile_read() {
        let dir = TempDir::new().unwrap();
        let m = meta(4, 4, 2, 2, ValueType::Int32);
        let path = dir.path().join("t.rtil");
        generate_raster(&path, &m, Compression::None, FillPattern::Constant(1.0)).unwrap();
        let f = RasterFile::open(&path).unwrap();
        assert!(matches!(
            f.read_tile(TileId(4)),
            Err(Error::TileOutOfRange { tid: 4, count: 4 })
        ));
    }
}
