//! Per-polygon aggregate state with partial/final merge semantics.
//!
//! Accumulators support any mix of count/min/max/sum plus an optional
//! histogram. Merge is associative and commutative with the empty
//! accumulator as identity, so worker-local partial maps can be folded in
//! any order. Integer rasters aggregate exactly in 64-bit sums; float
//! rasters use compensated summation to keep results stable across merge
//! orders.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::raster::{PixelValue, ValueType};

/// Aggregation settings shared by the pipeline, the baselines, and the CLI.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggConfig {
    pub histogram: bool,
    /// Bucket width for float-valued histograms; integer histograms bucket
    /// by exact value.
    pub float_bin_width: f64,
}

impl Default for AggConfig {
    fn default() -> Self {
        AggConfig {
            histogram: false,
            float_bin_width: 1.0,
        }
    }
}

/// Associative-commutative aggregate state for one polygon.
#[derive(Clone, Debug, PartialEq)]
pub enum Accumulator {
    Int {
        count: u64,
        min: i64,
        max: i64,
        sum: i64,
        hist: Option<BTreeMap<i64, u64>>,
    },
    Float {
        count: u64,
        min: f64,
        max: f64,
        sum: f64,
        compensation: f64,
        bin_width: f64,
        hist: Option<BTreeMap<i64, u64>>,
    },
}

impl Accumulator {
    pub fn new(value_type: ValueType, cfg: &AggConfig) -> Self {
        match value_type {
            ValueType::Int32 => Accumulator::Int {
                count: 0,
                min: i64::MAX,
                max: i64::MIN,
                sum: 0,
                hist: cfg.histogram.then(BTreeMap::new),
            },
            ValueType::Float64 => Accumulator::Float {
                count: 0,
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
                sum: 0.0,
                compensation: 0.0,
                bin_width: cfg.float_bin_width,
                hist: cfg.histogram.then(BTreeMap::new),
            },
        }
    }

    pub fn count(&self) -> u64 {
        match self {
            Accumulator::Int { count, .. } | Accumulator::Float { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// Fold one measurement in. `pid` is only used to name the polygon in
    /// overflow errors.
    pub fn accumulate(&mut self, value: PixelValue, pid: u32) -> Result<()> {
        match (self, value) {
            (
                Accumulator::Int {
                    count,
                    min,
                    max,
                    sum,
                    hist,
                },
                PixelValue::Int(v),
            ) => {
                let v = v as i64;
                *count += 1;
                *min = (*min).min(v);
                *max = (*max).max(v);
                *sum = sum.checked_add(v).ok_or(Error::SumOverflow { pid })?;
                if let Some(h) = hist {
                    *h.entry(v).or_insert(0) += 1;
                }
                Ok(())
            }
            (
                Accumulator::Float {
                    count,
                    min,
                    max,
                    sum,
                    compensation,
                    bin_width,
                    hist,
                },
                PixelValue::Float(v),
            ) => {
                *count += 1;
                *min = min.min(v);
                *max = max.max(v);
                kahan_add(sum, compensation, v);
                if let Some(h) = hist {
                    let bucket = (v / *bin_width).floor() as i64;
                    *h.entry(bucket).or_insert(0) += 1;
                }
                Ok(())
            }
            _ => Err(Error::AccumulatorMismatch),
        }
    }

    /// Merge another partial aggregate of the same variant into this one.
    pub fn merge(&mut self, other: &Accumulator) -> Result<()> {
        match (self, other) {
            (
                Accumulator::Int {
                    count,
                    min,
                    max,
                    sum,
                    hist,
                },
                Accumulator::Int {
                    count: c2,
                    min: m2,
                    max: x2,
                    sum: s2,
                    hist: h2,
                },
            ) => {
                *count += c2;
                *min = (*min).min(*m2);
                *max = (*max).max(*x2);
                *sum = sum.checked_add(*s2).ok_or(Error::SumOverflow { pid: 0 })?;
                if let (Some(h), Some(h2)) = (hist.as_mut(), h2.as_ref()) {
                    for (bucket, n) in h2 {
                        *h.entry(*bucket).or_insert(0) += n;
                    }
                }
                Ok(())
            }
            (
                Accumulator::Float {
                    count,
                    min,
                    max,
                    sum,
                    compensation,
                    hist,
                    ..
                },
                Accumulator::Float {
                    count: c2,
                    min: m2,
                    max: x2,
                    sum: s2,
                    compensation: k2,
                    hist: h2,
                    ..
                },
            ) => {
                *count += c2;
                *min = min.min(*m2);
                *max = max.max(*x2);
                kahan_add(sum, compensation, *s2);
                kahan_add(sum, compensation, *k2);
                if let (Some(h), Some(h2)) = (hist.as_mut(), h2.as_ref()) {
                    for (bucket, n) in h2 {
                        *h.entry(*bucket).or_insert(0) += n;
                    }
                }
                Ok(())
            }
            _ => Err(Error::AccumulatorMismatch),
        }
    }

    pub fn min(&self) -> Option<PixelValue> {
        if self.is_empty() {
            return None;
        }
        Some(match self {
            Accumulator::Int { min, .. } => PixelValue::Int(*min as i32),
            Accumulator::Float { min, .. } => PixelValue::Float(*min),
        })
    }

    pub fn max(&self) -> Option<PixelValue> {
        if self.is_empty() {
            return None;
        }
        Some(match self {
            Accumulator::Int { max, .. } => PixelValue::Int(*max as i32),
            Accumulator::Float { max, .. } => PixelValue::Float(*max),
        })
    }

    pub fn sum_f64(&self) -> f64 {
        match self {
            Accumulator::Int { sum, .. } => *sum as f64,
            Accumulator::Float { sum, compensation, .. } => *sum + *compensation,
        }
    }

    pub fn sum_i64(&self) -> Option<i64> {
        match self {
            Accumulator::Int { sum, .. } => Some(*sum),
            Accumulator::Float { .. } => None,
        }
    }

    pub fn mean(&self) -> Option<f64> {
        if self.is_empty() {
            None
        } else {
            Some(self.sum_f64() / self.count() as f64)
        }
    }

    pub fn histogram(&self) -> Option<&BTreeMap<i64, u64>> {
        match self {
            Accumulator::Int { hist, .. } | Accumulator::Float { hist, .. } => hist.as_ref(),
        }
    }
}

#[inline]
fn kahan_add(sum: &mut f64, compensation: &mut f64, v: f64) {
    let y = v - *compensation;
    let t = *sum + y;
    *compensation = (t - *sum) - y;
    *sum = t;
}

/// Final per-polygon aggregates, keyed by pid. Every polygon of the dataset
/// is present; polygons covering no pixel centers carry an empty accumulator.
#[derive(Clone, Debug, PartialEq)]
pub struct ZonalResult {
    pub per_polygon: BTreeMap<u32, Accumulator>,
}

impl ZonalResult {
    /// Merge worker-local partial maps and fill in empty accumulators for
    /// polygons that produced no pixels. Order-independent.
    pub fn finalize(
        partials: Vec<HashMap<u32, Accumulator>>,
        all_pids: impl IntoIterator<Item = u32>,
        value_type: ValueType,
        cfg: &AggConfig,
    ) -> Result<Self> {
        let mut merged: BTreeMap<u32, Accumulator> = BTreeMap::new();
        for partial in partials {
            for (pid, acc) in partial {
                match merged.entry(pid) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(acc);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        e.get_mut().merge(&acc)?;
                    }
                }
            }
        }
        for pid in all_pids {
            merged.entry(pid).or_insert_with(|| Accumulator::new(value_type, cfg));
        }
        Ok(ZonalResult { per_polygon: merged })
    }

    /// `pid,count,min,max,sum,mean` rows. Min, max, and mean are empty for
    /// polygons with no pixels; sums print their identity 0.
    pub fn write_csv(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "pid,count,min,max,sum,mean")?;
        for (pid, acc) in &self.per_polygon {
            let fmt = |v: Option<PixelValue>| match v {
                Some(PixelValue::Int(i)) => i.to_string(),
                Some(PixelValue::Float(f)) => f.to_string(),
                None => String::new(),
            };
            let sum = match acc.sum_i64() {
                Some(s) => s.to_string(),
                None => acc.sum_f64().to_string(),
            };
            let mean = acc.mean().map(|m| m.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{pid},{},{},{},{sum},{mean}",
                acc.count(),
                fmt(acc.min()),
                fmt(acc.max()),
            )?;
        }
        Ok(())
    }

    /// `pid,bucket,count` rows for every non-empty histogram.
    pub fn write_histogram_csv(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "pid,bucket,count")?;
        for (pid, acc) in &self.per_polygon {
            if let Some(hist) = acc.histogram() {
                for (bucket, n) in hist {
                    writeln!(w, "{pid},{bucket},{n}")?;
                }
            }
        }
        Ok(())
    }
}
