//! Intersection step: turn one vector chunk into a sorted, tile-indexed
//! intersection file using only the raster metadata.
//!
//! Boundary crossings are computed per scanline (pixel-center latitude),
//! quantized to the first pixel column whose center is at or after the
//! crossing, paired under the even-odd rule into half-open pixel runs
//! `[x_start, x_end)`, and split at tile column boundaries so every record
//! lies in exactly one tile. Records sort by `(tid, y, pid, x_start)` for
//! row-major rasters and `(tid, x_start, pid, y)` for column-major ones.
//!
//! File layout ("RIF1"):
//!
//! * record section: fixed-width 20-byte records
//!   (`tid u32, y u32, pid u32, x_start u32, x_end u32`, little-endian),
//!   optionally deflate-compressed as a whole;
//! * footer: compression flag, chunk id, record count and byte length,
//!   the distinct polygon ids present, and per-tile byte offsets of the
//!   first record in each tile (offsets address the uncompressed record
//!   stream);
//! * trailer: footer offset `u64` plus the magic `RIF1`.
//!
//! The footer is always stored uncompressed so it can be decoded without
//! touching any record bytes. Record sets larger than a configurable budget
//! are sorted with spill-to-disk runs and merged on write.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::OnceLock;

use byteorder::{ByteOrder, LittleEndian, ReadBytesExt, WriteBytesExt};
use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;

use crate::error::{Error, Result};
use crate::geom::{crossing_lon, Polygon};
use crate::raster::{PixelOrder, RasterMetadata};
use crate::vector::VectorChunk;

pub const RECORD_LEN: u64 = 20;
const TRAILER_LEN: u64 = 12;
const MAGIC: &[u8; 4] = b"RIF1";

/// A run of pixels `[x_start, x_end)` on row `y` inside polygon `pid`,
/// confined to tile `tid`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IntersectionRecord {
    pub tid: u32,
    pub y: u32,
    pub pid: u32,
    pub x_start: u32,
    pub x_end: u32,
}

impl IntersectionRecord {
    #[inline]
    fn sort_key(&self, order: PixelOrder) -> (u32, u32, u32, u32, u32) {
        match order {
            PixelOrder::RowMajor => (self.tid, self.y, self.pid, self.x_start, self.x_end),
            PixelOrder::ColumnMajor => (self.tid, self.x_start, self.pid, self.y, self.x_end),
        }
    }

    fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_u32::<LittleEndian>(self.tid)?;
        w.write_u32::<LittleEndian>(self.y)?;
        w.write_u32::<LittleEndian>(self.pid)?;
        w.write_u32::<LittleEndian>(self.x_start)?;
        w.write_u32::<LittleEndian>(self.x_end)?;
        Ok(())
    }

    fn read_from(r: &mut impl Read) -> std::io::Result<Self> {
        Ok(IntersectionRecord {
            tid: r.read_u32::<LittleEndian>()?,
            y: r.read_u32::<LittleEndian>()?,
            pid: r.read_u32::<LittleEndian>()?,
            x_start: r.read_u32::<LittleEndian>()?,
            x_end: r.read_u32::<LittleEndian>()?,
        })
    }
}

/// A raw scanline crossing: the left boundary pixel column (pre-clip) where
/// polygon `pid`'s boundary crosses row `y`'s center latitude.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RawCrossing {
    pub pid: u32,
    pub y: u32,
    pub x: i64,
}

/// Compute all scanline crossings for a set of polygons against a raster
/// grid, reading nothing but the metadata. Crossings are grouped per polygon
/// and sorted by `(y, x)` within each; the even-parity check runs per
/// `(pid, row)`.
pub fn compute_crossings(polygons: &[Polygon], meta: &RasterMetadata) -> Result<Vec<RawCrossing>> {
    let mut all = Vec::new();
    let mut scratch = Vec::new();
    for poly in polygons {
        scratch.clear();
        polygon_crossings(poly, meta, &mut scratch);
        scratch.sort_unstable_by_key(|c: &RawCrossing| (c.y, c.x));
        for group in scratch.chunk_by(|a, b| a.y == b.y) {
            if group.len() % 2 != 0 {
                return Err(Error::OddCrossingParity {
                    pid: poly.pid(),
                    row: group[0].y,
                });
            }
        }
        all.extend_from_slice(&scratch);
    }
    Ok(all)
}

/// Emit crossings of one polygon against every visible scanline.
fn polygon_crossings(poly: &Polygon, meta: &RasterMetadata, out: &mut Vec<RawCrossing>) {
    let geo = &meta.geo;
    let last_row = meta.rows as i64 - 1;
    for seg in poly.segments() {
        if seg.a.lat == seg.b.lat {
            continue;
        }
        let lo = seg.a.lat.min(seg.b.lat);
        let hi = seg.a.lat.max(seg.b.lat);
        // Rows whose center latitude falls in the half-open span [lo, hi).
        let y_first = geo.first_row_center_below(hi).max(0);
        let y_last = geo.last_row_center_at_or_above(lo).min(last_row);
        for y in y_first..=y_last {
            let lat = geo.row_center(y);
            let xw = crossing_lon(seg.a, seg.b, lat);
            out.push(RawCrossing {
                pid: seg.pid,
                y: y as u32,
                x: geo.first_col_center_at_or_after(xw),
            });
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IntersectionBuildOptions {
    pub compress: bool,
    /// Records held in memory before sorting spills to disk.
    pub spill_record_budget: usize,
}

impl Default for IntersectionBuildOptions {
    fn default() -> Self {
        IntersectionBuildOptions {
            compress: false,
            spill_record_budget: 10_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildSummary {
    pub crossings: u64,
    pub records: u64,
    pub bytes_written: u64,
}

/// Build one chunk's intersection file on disk. Touches only the raster
/// metadata.
pub fn build_intersection_file(
    chunk: &VectorChunk,
    meta: &RasterMetadata,
    path: &Path,
    opts: &IntersectionBuildOptions,
) -> Result<BuildSummary> {
    let mut sorter = ExternalSorter::new(meta.order, opts.spill_record_budget.max(1));
    let mut crossings = Vec::new();
    let mut crossing_count = 0u64;
    let cols = meta.cols as i64;

    for poly in &chunk.polygons {
        crossings.clear();
        polygon_crossings(poly, meta, &mut crossings);
        crossing_count += crossings.len() as u64;
        crossings.sort_unstable_by_key(|c| (c.y, c.x));
        for group in crossings.chunk_by(|a, b| a.y == b.y) {
            if group.len() % 2 != 0 {
                return Err(Error::OddCrossingParity {
                    pid: poly.pid(),
                    row: group[0].y,
                });
            }
            for pair in group.chunks(2) {
                let x_start = pair[0].x.max(0);
                let x_end = pair[1].x.min(cols);
                if x_start >= x_end {
                    continue;
                }
                // Split the run wherever it crosses a tile column boundary.
                let y = pair[0].y as u64;
                let mut x = x_start as u64;
                let end = x_end as u64;
                while x < end {
                    let tid = meta.tile_of(x, y);
                    let (_, tile_end) = meta.tile_col_range(tid);
                    let run_end = tile_end.min(end);
                    sorter.push(IntersectionRecord {
                        tid: tid.0,
                        y: pair[0].y,
                        pid: poly.pid(),
                        x_start: x as u32,
                        x_end: run_end as u32,
                    })?;
                    x = run_end;
                }
            }
        }
    }

    let records = sorter.len();
    let bytes_written = write_intersection_file(path, chunk.chunk_id, opts.compress, meta.order, sorter)?;
    Ok(BuildSummary {
        crossings: crossing_count,
        records,
        bytes_written,
    })
}

// ---------------------------------------------------------------------------
// External sort

struct ExternalSorter {
    order: PixelOrder,
    budget: usize,
    buf: Vec<IntersectionRecord>,
    runs: Vec<File>,
    total: u64,
}

impl ExternalSorter {
    fn new(order: PixelOrder, budget: usize) -> Self {
        ExternalSorter {
            order,
            budget,
            buf: Vec::new(),
            runs: Vec::new(),
            total: 0,
        }
    }

    fn len(&self) -> u64 {
        self.total
    }

    fn push(&mut self, rec: IntersectionRecord) -> Result<()> {
        self.buf.push(rec);
        self.total += 1;
        if self.buf.len() >= self.budget {
            self.spill()?;
        }
        Ok(())
    }

    fn spill(&mut self) -> Result<()> {
        let order = self.order;
        self.buf.sort_unstable_by_key(|r| r.sort_key(order));
        let mut file = BufWriter::new(tempfile::tempfile()?);
        for rec in &self.buf {
            rec.write_to(&mut file)?;
        }
        let mut file = file.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        file.seek(SeekFrom::Start(0))?;
        self.runs.push(file);
        self.buf.clear();
        Ok(())
    }

    /// Drain all records in sorted order.
    fn into_sorted(mut self) -> Result<SortedRecords> {
        let order = self.order;
        self.buf.sort_unstable_by_key(|r| r.sort_key(order));
        if self.runs.is_empty() {
            return Ok(SortedRecords::InMemory(self.buf.into_iter()));
        }
        let mut sources: Vec<RunReader> = Vec::with_capacity(self.runs.len() + 1);
        for file in self.runs {
            sources.push(RunReader::Spilled(BufReader::new(file)));
        }
        sources.push(RunReader::Buffered(self.buf.into_iter()));
        let mut heads = Vec::with_capacity(sources.len());
        for src in &mut sources {
            heads.push(src.next_record()?);
        }
        Ok(SortedRecords::Merging { order, sources, heads })
    }
}

enum RunReader {
    Spilled(BufReader<File>),
    Buffered(std::vec::IntoIter<IntersectionRecord>),
}

impl RunReader {
    fn next_record(&mut self) -> Result<Option<IntersectionRecord>> {
        match self {
            RunReader::Spilled(r) => match IntersectionRecord::read_from(r) {
                Ok(rec) => Ok(Some(rec)),
                Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => Ok(None),
                Err(e) => Err(e.into()),
            },
            RunReader::Buffered(it) => Ok(it.next()),
        }
    }
}

enum SortedRecords {
    InMemory(std::vec::IntoIter<IntersectionRecord>),
    Merging {
        order: PixelOrder,
        sources: Vec<RunReader>,
        heads: Vec<Option<IntersectionRecord>>,
    },
}

impl SortedRecords {
    fn next_record(&mut self) -> Result<Option<IntersectionRecord>> {
        match self {
            SortedRecords::InMemory(it) => Ok(it.next()),
            SortedRecords::Merging { order, sources, heads } => {
                let mut best: Option<usize> = None;
                for (i, head) in heads.iter().enumerate() {
                    if let Some(rec) = head {
                        let better = match best {
                            None => true,
                            Some(j) => {
                                rec.sort_key(*order).cmp(&heads[j].unwrap().sort_key(*order)) == Ordering::Less
                            }
                        };
                        if better {
                            best = Some(i);
                        }
                    }
                }
                match best {
                    None => Ok(None),
                    Some(i) => {
                        let rec = heads[i].take();
                        heads[i] = sources[i].next_record()?;
                        Ok(rec)
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// File writer

struct CountingWriter<W: Write> {
    inner: W,
    written: u64,
}

impl<W: Write> CountingWriter<W> {
    fn new(inner: W) -> Self {
        CountingWriter { inner, written: 0 }
    }
}

impl<W: Write> Write for CountingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.written += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

fn write_intersection_file(
    path: &Path,
    chunk_id: u32,
    compress: bool,
    order: PixelOrder,
    sorter: ExternalSorter,
) -> Result<u64> {
    let mut sorted = sorter.into_sorted()?;
    let mut out = CountingWriter::new(BufWriter::new(File::create(path)?));

    let mut pids: Vec<u32> = Vec::new();
    let mut seen_pids = std::collections::BTreeSet::new();
    let mut tile_index: Vec<(u32, u64)> = Vec::new();
    let mut record_count = 0u64;
    let mut last_key: Option<(u32, u32, u32, u32, u32)> = None;

    {
        let mut record_writer: Box<dyn Write> = if compress {
            Box::new(DeflateEncoder::new(&mut out, flate2::Compression::default()))
        } else {
            Box::new(&mut out)
        };
        while let Some(rec) = sorted.next_record()? {
            let key = rec.sort_key(order);
            debug_assert!(last_key.is_none_or(|k| k < key), "records must be strictly increasing");
            last_key = Some(key);
            if tile_index.last().map(|&(tid, _)| tid) != Some(rec.tid) {
                tile_index.push((rec.tid, record_count * RECORD_LEN));
            }
            if seen_pids.insert(rec.pid) {
                pids.push(rec.pid);
            }
            rec.write_to(&mut record_writer)?;
            record_count += 1;
        }
        record_writer.flush()?;
        // Dropping the boxed writer finishes the deflate stream.
    }
    pids.sort_unstable();

    let footer_offset = out.written;
    out.write_u8(u8::from(compress))?;
    out.write_u32::<LittleEndian>(chunk_id)?;
    out.write_u64::<LittleEndian>(record_count)?;
    out.write_u64::<LittleEndian>(record_count * RECORD_LEN)?;
    out.write_u32::<LittleEndian>(pids.len() as u32)?;
    for pid in &pids {
        out.write_u32::<LittleEndian>(*pid)?;
    }
    out.write_u32::<LittleEndian>(tile_index.len() as u32)?;
    for (tid, offset) in &tile_index {
        out.write_u32::<LittleEndian>(*tid)?;
        out.write_u64::<LittleEndian>(*offset)?;
    }
    out.write_u64::<LittleEndian>(footer_offset)?;
    out.write_all(MAGIC)?;
    let total = out.written;
    out.flush()?;
    Ok(total)
}

// ---------------------------------------------------------------------------
// Reading

/// Decoded footer of an intersection file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntersectionFooter {
    pub chunk_id: u32,
    pub compressed: bool,
    pub record_count: u64,
    /// Uncompressed byte length of the record section.
    pub record_bytes: u64,
    /// Distinct polygon ids present, ascending.
    pub pids: Vec<u32>,
    /// `(tid, byte offset of the tile's first record)`, ascending by tid.
    /// Offsets address the uncompressed record stream.
    pub tile_index: Vec<(u32, u64)>,
}

fn file_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::IntersectionFormat {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

fn read_footer_from(file: &File, path: &Path) -> Result<(IntersectionFooter, u64)> {
    let len = file.metadata()?.len();
    if len < TRAILER_LEN {
        return Err(file_err(path, "file shorter than its trailer"));
    }
    let mut trailer = [0u8; TRAILER_LEN as usize];
    file.read_exact_at(&mut trailer, len - TRAILER_LEN)?;
    if &trailer[8..12] != MAGIC {
        return Err(file_err(path, "bad trailer magic"));
    }
    let footer_offset = LittleEndian::read_u64(&trailer[0..8]);
    if footer_offset > len - TRAILER_LEN {
        return Err(file_err(path, "footer offset outside the file"));
    }
    let mut buf = vec![0u8; (len - TRAILER_LEN - footer_offset) as usize];
    file.read_exact_at(&mut buf, footer_offset)?;
    let mut r = &buf[..];
    let parse = |r: &mut &[u8]| -> std::io::Result<IntersectionFooter> {
        let compressed = r.read_u8()? != 0;
        let chunk_id = r.read_u32::<LittleEndian>()?;
        let record_count = r.read_u64::<LittleEndian>()?;
        let record_bytes = r.read_u64::<LittleEndian>()?;
        let pid_count = r.read_u32::<LittleEndian>()?;
        let mut pids = Vec::with_capacity(pid_count as usize);
        for _ in 0..pid_count {
            pids.push(r.read_u32::<LittleEndian>()?);
        }
        let tile_count = r.read_u32::<LittleEndian>()?;
        let mut tile_index = Vec::with_capacity(tile_count as usize);
        for _ in 0..tile_count {
            let tid = r.read_u32::<LittleEndian>()?;
            let offset = r.read_u64::<LittleEndian>()?;
            tile_index.push((tid, offset));
        }
        Ok(IntersectionFooter {
            chunk_id,
            compressed,
            record_count,
            record_bytes,
            pids,
            tile_index,
        })
    };
    let footer = parse(&mut r).map_err(|_| file_err(path, "truncated footer"))?;
    Ok((footer, footer_offset))
}

/// Decode only the footer (trailer plus footer bytes; no record bytes).
pub fn read_footer(path: &Path) -> Result<IntersectionFooter> {
    let file = File::open(path)?;
    Ok(read_footer_from(&file, path)?.0)
}

/// Random-access reader over one intersection file. For uncompressed files
/// each tile request reads exactly that tile's byte range; compressed files
/// inflate the record section once on first use.
pub struct IntersectionReader {
    path: PathBuf,
    file: File,
    footer: IntersectionFooter,
    /// File offset one past the record section (compressed or raw).
    records_file_end: u64,
    inflated: OnceLock<Vec<u8>>,
    record_bytes_read: AtomicU64,
}

impl IntersectionReader {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let (footer, footer_offset) = read_footer_from(&file, path)?;
        Ok(IntersectionReader {
            path: path.to_path_buf(),
            file,
            footer,
            records_file_end: footer_offset,
            inflated: OnceLock::new(),
            record_bytes_read: AtomicU64::new(0),
        })
    }

    pub fn footer(&self) -> &IntersectionFooter {
        &self.footer
    }

    /// Record-section bytes fetched so far (uncompressed accounting).
    pub fn record_bytes_read(&self) -> u64 {
        self.record_bytes_read.load(AtomicOrdering::Relaxed)
    }

    fn inflated_records(&self) -> Result<&[u8]> {
        if let Some(buf) = self.inflated.get() {
            return Ok(buf);
        }
        let mut raw = vec![0u8; self.records_file_end as usize];
        self.file.read_exact_at(&mut raw, 0)?;
        let mut out = Vec::with_capacity(self.footer.record_bytes as usize);
        DeflateDecoder::new(&raw[..]).read_to_end(&mut out)?;
        if out.len() as u64 != self.footer.record_bytes {
            return Err(file_err(&self.path, "record section inflates to the wrong length"));
        }
        Ok(self.inflated.get_or_init(|| out))
    }

    /// All records belonging to one tile, in file order. A tid absent from
    /// the footer yields an empty list.
    pub fn records_for_tile(&self, tid: u32) -> Result<Vec<IntersectionRecord>> {
        let idx = match self.footer.tile_index.binary_search_by_key(&tid, |&(t, _)| t) {
            Ok(i) => i,
            Err(_) => return Ok(Vec::new()),
        };
        let start = self.footer.tile_index[idx].1;
        let end = self
            .footer
            .tile_index
            .get(idx + 1)
            .map(|&(_, off)| off)
            .unwrap_or(self.footer.record_bytes);
        self.read_record_range(start, end)
    }

    fn read_record_range(&self, start: u64, end: u64) -> Result<Vec<IntersectionRecord>> {
        debug_assert!(start <= end && end <= self.footer.record_bytes);
        debug_assert_eq!((end - start) % RECORD_LEN, 0);
        let len = (end - start) as usize;
        let mut raw;
        let bytes: &[u8] = if self.footer.compressed {
            let all = self.inflated_records()?;
            &all[start as usize..end as usize]
        } else {
            raw = vec![0u8; len];
            self.file.read_exact_at(&mut raw, start)?;
            &raw
        };
        self.record_bytes_read.fetch_add(len as u64, AtomicOrdering::Relaxed);
        let mut records = Vec::with_capacity(len / RECORD_LEN as usize);
        let mut r = bytes;
        for _ in 0..len / RECORD_LEN as usize {
            records.push(IntersectionRecord::read_from(&mut r)?);
        }
        Ok(records)
    }

    /// The full sorted record list (footer-tile concatenation).
    pub fn read_all_records(&self) -> Result<Vec<IntersectionRecord>> {
        self.read_record_range(0, self.footer.record_bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{AffineGeo, WorldPoint};
    use crate::raster::ValueType;
    use crate::vector::{partition, VectorDataset};
    use tempfile::TempDir;

    fn meta(cols: u64, rows: u64, tw: u32, th: u32, geo: AffineGeo) -> RasterMetadata {
        RasterMetadata::new(cols, rows, tw, th, geo, PixelOrder::RowMajor, ValueType::Int32).unwrap()
    }

    fn poly(pid: u32, pts: &[(f64, f64)]) -> Polygon {
        let mut ring: Vec<WorldPoint> = pts.iter().map(|&(lon, lat)| WorldPoint::new(lon, lat)).collect();
        ring.push(ring[0]);
        Polygon::new(pid, vec![ring]).unwrap()
    }

    fn chunk_of(chunk_id: u32, polys: Vec<Polygon>) -> VectorChunk {
        let ds = VectorDataset::new(polys, 0).unwrap();
        let mut chunks = partition(&ds, usize::MAX >> 1, false);
        assert_eq!(chunks.len(), 1);
        let mut c = chunks.remove(0);
        c.chunk_id = chunk_id;
        c
    }

    fn build(chunk: &VectorChunk, meta: &RasterMetadata, opts: &IntersectionBuildOptions) -> (PathBuf, TempDir, BuildSummary) {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("c.rif");
        let summary = build_intersection_file(chunk, meta, &path, opts).unwrap();
        (path, dir, summary)
    }

    #[test]
    fn unit_square_crossings() {
        // Square (0,0)-(2,2) on a 4x4 grid, origin (0,4), p=1: the interior
        // pixel centers are (0,2),(1,2),(0,3),(1,3).
        let m = meta(4, 4, 2, 2, AffineGeo::new(0.0, 4.0, 1.0));
        let square = poly(42, &[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]);
        let crossings = compute_crossings(std::slice::from_ref(&square), &m).unwrap();
        let mut rows: Vec<(u32, i64)> = crossings.iter().map(|c| (c.y, c.x)).collect();
        rows.sort_unstable();
        assert_eq!(rows, vec![(2, 0), (2, 2), (3, 0), (3, 2)]);
    }

    #[test]
    fn triangle_row_run() {
        let m = meta(4, 4, 2, 2, AffineGeo::new(0.0, 4.0, 1.0));
        let tri = poly(1, &[(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)]);
        let chunk = chunk_of(0, vec![tri]);
        let (path, _dir, _) = build(&chunk, &m, &IntersectionBuildOptions::default());
        let reader = IntersectionReader::open(&path).unwrap();
        let recs: Vec<IntersectionRecord> = reader
            .read_all_records()
            .unwrap()
            .into_iter()
            .filter(|r| r.y == 3)
            .collect();
        // Row 3 (center lat 0.5) covers columns 0..3, split at tile col 2.
        assert_eq!(recs.len(), 2);
        assert_eq!((recs[0].x_start, recs[0].x_end), (0, 2));
        assert_eq!((recs[1].x_start, recs[1].x_end), (2, 3));
    }

    #[test]
    fn polygon_between_scanlines_has_no_crossings() {
        let m = meta(4, 4, 2, 2, AffineGeo::new(0.0, 4.0, 1.0));
        // Sits entirely between the centers of rows 0 (lat 3.5) and 1 (lat 2.5).
        let sliver = poly(5, &[(0.2, 2.6), (3.0, 2.6), (3.0, 3.4), (0.2, 3.4)]);
        let crossings = compute_crossings(&[sliver], &m).unwrap();
        assert!(crossings.is_empty());
    }

    #[test]
    fn run_splits_at_tile_boundaries() {
        // 512 wide, tiles 128 wide: a run over [0, 300) becomes three records.
        let m = meta(512, 4, 128, 4, AffineGeo::new(0.0, 4.0, 1.0));
        let wide = poly(9, &[(0.0, 0.0), (300.0, 0.0), (300.0, 1.0), (0.0, 1.0)]);
        let chunk = chunk_of(0, vec![wide]);
        let (path, _dir, summary) = build(&chunk, &m, &IntersectionBuildOptions::default());
        let reader = IntersectionReader::open(&path).unwrap();
        let recs = reader.read_all_records().unwrap();
        let row: Vec<&IntersectionRecord> = recs.iter().filter(|r| r.y == 3).collect();
        assert_eq!(row.len(), 3);
        assert_eq!((row[0].tid, row[0].x_start, row[0].x_end), (0, 0, 128));
        assert_eq!((row[1].tid, row[1].x_start, row[1].x_end), (1, 128, 256));
        assert_eq!((row[2].tid, row[2].x_start, row[2].x_end), (2, 256, 300));
        assert_eq!(summary.records, recs.len() as u64);
    }

    #[test]
    fn chunk_outside_raster_yields_empty_file() {
        let m = meta(4, 4, 2, 2, AffineGeo::new(0.0, 4.0, 1.0));
        let far = poly(3, &[(-10.0, 0.0), (-8.0, 0.0), (-8.0, 2.0), (-10.0, 2.0)]);
        let chunk = chunk_of(7, vec![far]);
        let (path, _dir, summary) = build(&chunk, &m, &IntersectionBuildOptions::default());
        assert_eq!(summary.records, 0);
        let footer = read_footer(&path).unwrap();
        assert_eq!(footer.chunk_id, 7);
        assert!(footer.tile_index.is_empty());
        assert!(footer.pids.is_empty());
        assert_eq!(footer.record_count, 0);
    }

    #[test]
    fn same_row_orders_by_pid_then_x() {
        let m = meta(8, 8, 8, 8, AffineGeo::new(0.0, 8.0, 1.0));
        let a = poly(2, &[(4.0, 0.0), (6.0, 0.0), (6.0, 8.0), (4.0, 8.0)]);
        let b = poly(1, &[(1.0, 0.0), (3.0, 0.0), (3.0, 8.0), (1.0, 8.0)]);
        let chunk = chunk_of(0, vec![a, b]);
        let (path, _dir, _) = build(&chunk, &m, &IntersectionBuildOptions::default());
        let recs = IntersectionReader::open(&path).unwrap().read_all_records().unwrap();
        let row0: Vec<&IntersectionRecord> = recs.iter().filter(|r| r.y == 0).collect();
        assert_eq!(row0.len(), 2);
        assert_eq!((row0[0].pid, row0[0].x_start), (1, 1));
        assert_eq!((row0[1].pid, row0[1].x_start), (2, 4));
    }

    #[test]
    fn records_strictly_sorted() {
        let m = meta(64, 64, 16, 16, AffineGeo::new(0.0, 64.0, 1.0));
        let polys = crate::synth::generate_polygons(&crate::synth::PolygonGenConfig {
            count: 30,
            extent: crate::geom::Mbr::new(0.0, 0.0, 64.0, 64.0),
            radius_min: 1.0,
            radius_max: 6.0,
            seed: 11,
            ..Default::default()
        });
        let chunk = chunk_of(0, polys);
        let (path, _dir, _) = build(&chunk, &m, &IntersectionBuildOptions::default());
        let recs = IntersectionReader::open(&path).unwrap().read_all_records().unwrap();
        assert!(!recs.is_empty());
        for w in recs.windows(2) {
            assert!(w[0].sort_key(PixelOrder::RowMajor) < w[1].sort_key(PixelOrder::RowMajor));
        }
    }

    #[test]
    fn footer_tile_offsets_point_at_their_tiles() {
        let m = meta(64, 64, 16, 16, AffineGeo::new(0.0, 64.0, 1.0));
        // Two distant polygons so several separated tids appear.
        let a = poly(1, &[(1.0, 1.0), (6.0, 1.0), (6.0, 6.0), (1.0, 6.0)]);
        let b = poly(2, &[(40.0, 40.0), (60.0, 40.0), (60.0, 60.0), (40.0, 60.0)]);
        let chunk = chunk_of(0, vec![a, b]);
        let (path, _dir, _) = build(&chunk, &m, &IntersectionBuildOptions::default());
        let reader = IntersectionReader::open(&path).unwrap();
        let footer = reader.footer();
        assert!(footer.tile_index.len() >= 2);
        assert!(footer.tile_index.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(footer.pids, vec![1, 2]);

        let all = reader.read_all_records().unwrap();
        for &(tid, offset) in &footer.tile_index {
            let at = (offset / RECORD_LEN) as usize;
            assert_eq!(all[at].tid, tid);
        }
    }

    #[test]
    fn records_for_tile_reads_only_that_range() {
        let m = meta(64, 64, 16, 16, AffineGeo::new(0.0, 64.0, 1.0));
        let a = poly(1, &[(1.0, 1.0), (6.0, 1.0), (6.0, 6.0), (1.0, 6.0)]);
        let b = poly(2, &[(40.0, 40.0), (60.0, 40.0), (60.0, 60.0), (40.0, 60.0)]);
        let chunk = chunk_of(0, vec![a, b]);
        let (path, _dir, _) = build(&chunk, &m, &IntersectionBuildOptions::default());
        let reader = IntersectionReader::open(&path).unwrap();

        let footer = reader.footer().clone();
        let (tid0, off0) = footer.tile_index[0];
        let end0 = footer.tile_index.get(1).map(|e| e.1).unwrap_or(footer.record_bytes);
        let recs = reader.records_for_tile(tid0).unwrap();
        assert!(recs.iter().all(|r| r.tid == tid0));
        assert_eq!(reader.record_bytes_read(), end0 - off0);

        // Absent tid: no records, no bytes.
        let before = reader.record_bytes_read();
        assert!(reader.records_for_tile(u32::MAX).unwrap().is_empty());
        assert_eq!(reader.record_bytes_read(), before);

        // Concatenation over footer tids equals the full list.
        let mut concat = Vec::new();
        for &(tid, _) in &footer.tile_index {
            concat.extend(reader.records_for_tile(tid).unwrap());
        }
        assert_eq!(concat, reader.read_all_records().unwrap());
    }

    #[test]
    fn empty_file_footer() {
        let m = meta(4, 4, 2, 2, AffineGeo::new(0.0, 4.0, 1.0));
        let chunk = VectorChunk {
            chunk_id: 0,
            polygons: vec![],
            mbr: crate::geom::Mbr::empty(),
        };
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("e.rif");
        build_intersection_file(&chunk, &m, &path, &IntersectionBuildOptions::default()).unwrap();
        let footer = read_footer(&path).unwrap();
        assert!(footer.tile_index.is_empty() && footer.pids.is_empty());
        let reader = IntersectionReader::open(&path).unwrap();
        assert!(reader.records_for_tile(0).unwrap().is_empty());
    }

    #[test]
    fn spill_path_produces_identical_bytes() {
        let m = meta(128, 128, 32, 32, AffineGeo::new(0.0, 128.0, 1.0));
        let polys = crate::synth::generate_polygons(&crate::synth::PolygonGenConfig {
            count: 40,
            extent: crate::geom::Mbr::new(0.0, 0.0, 128.0, 128.0),
            radius_min: 2.0,
            radius_max: 10.0,
            seed: 23,
            ..Default::default()
        });
        let chunk = chunk_of(0, polys);
        let dir = TempDir::new().unwrap();
        let (pa, pb) = (dir.path().join("a.rif"), dir.path().join("b.rif"));
        let big = IntersectionBuildOptions::default();
        let tiny = IntersectionBuildOptions {
            spill_record_budget: 17,
            ..big
        };
        let sa = build_intersection_file(&chunk, &m, &pa, &big).unwrap();
        let sb = build_intersection_file(&chunk, &m, &pb, &tiny).unwrap();
        assert_eq!(sa, sb);
        assert!(sa.records > 100, "fixture too small to exercise spilling");
        assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    }

    #[test]
    fn compressed_files_decode_identically() {
        let m = meta(64, 64, 16, 16, AffineGeo::new(0.0, 64.0, 1.0));
        let polys = crate::synth::generate_polygons(&crate::synth::PolygonGenConfig {
            count: 20,
            extent: crate::geom::Mbr::new(0.0, 0.0, 64.0, 64.0),
            seed: 5,
            ..Default::default()
        });
        let chunk = chunk_of(0, polys);
        let dir = TempDir::new().unwrap();
        let (pa, pb) = (dir.path().join("raw.rif"), dir.path().join("z.rif"));
        build_intersection_file(&chunk, &m, &pa, &IntersectionBuildOptions::default()).unwrap();
        build_intersection_file(
            &chunk,
            &m,
            &pb,
            &IntersectionBuildOptions {
                compress: true,
                ..Default::default()
            },
        )
        .unwrap();
        let ra = IntersectionReader::open(&pa).unwrap();
        let rb = IntersectionReader::open(&pb).unwrap();
        assert_eq!(ra.read_all_records().unwrap(), rb.read_all_records().unwrap());
        assert_eq!(ra.footer().tile_index, rb.footer().tile_index);
        for &(tid, _) in ra.footer().tile_index.iter() {
            assert_eq!(
                ra.records_for_tile(tid).unwrap(),
                rb.records_for_tile(tid).unwrap()
            );
        }
    }

    #[test]
    fn odd_parity_is_reported() {
        let m = meta(8, 8, 8, 8, AffineGeo::new(0.0, 8.0, 1.0));
        // An unclosed zig-zag smuggled past validation: one dangling edge
        // crossing several rows gives odd parity.
        let broken = Polygon::new_unchecked(
            13,
            vec![vec![
                WorldPoint::new(1.0, 0.0),
                WorldPoint::new(1.0, 8.0),
                WorldPoint::new(5.0, 8.0),
            ]],
        );
        match compute_crossings(&[broken], &m) {
            Err(Error::OddCrossingParity { pid: 13, .. }) => {}
            other => panic!("expected parity error, got {other:?}"),
        }
    }

    #[test]
    fn corrupt_trailer_rejected() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("bad.rif");
        std::fs::write(&path, b"shrt").unwrap();
        assert!(matches!(read_footer(&path), Err(Error::IntersectionFormat { .. })));
        std::fs::write(&path, vec![0u8; 64]).unwrap();
        assert!(matches!(read_footer(&path), Err(Error::IntersectionFormat { .. })));
    }
}
