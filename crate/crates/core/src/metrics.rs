//! PAPR and its complementary CDF.
//!
//! PAPR is always measured against an explicit reference power rather than
//! the frame's own mean, so that the power added by constellation extension
//! shows up as a PAPR penalty.

use crate::stbc::AntennaTimeSet;
use crate::{Error, Result, Sample};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaprSample {
    pub value_db: f64,
    pub antenna: usize,
    pub frame_index: usize,
}

/// Empirical `Pr{PAPR >= t}` on a threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdfCurve {
    pub thresholds_db: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub n_frames: u64,
    pub seed: u64,
}

/// `10 log10(max |s|^2 / reference_power)`.
pub fn papr_db(samples: &[Sample], reference_power: f64) -> Result<f64> {
    if !(reference_power > 0.0 && reference_power.is_finite()) {
        return Err(Error::Domain(format!(
            "reference power must be positive and finite, got {reference_power}"
        )));
    }
    let peak = samples.iter().map(|s| s.norm_sqr()).fold(0.0, f64::max);
    Ok(10.0 * (peak / reference_power).log10())
}

/// Largest PAPR over every antenna and slot of a transmission.
pub fn overall_papr_db(set: &AntennaTimeSet) -> Result<f64> {
    set.frames()
        .iter()
        .flatten()
        .map(|f| papr_db(f, set.reference_power()))
        .try_fold(f64::NEG_INFINITY, |acc, p| p.map(|p| acc.max(p)))
}

/// Ascending grid `start, start + step, ...` up to and including `stop`.
pub fn threshold_grid(start_db: f64, stop_db: f64, step_db: f64) -> Result<Vec<f64>> {
    if step_db.is_nan() || step_db <= 0.0 || !start_db.is_finite() || !stop_db.is_finite() || stop_db < start_db {
        return Err(Error::Parameter(format!(
            "bad threshold grid {start_db}..{stop_db} step {step_db}"
        )));
    }
    let count = ((stop_db - start_db) / step_db + 1e-9).floor() as usize + 1;
    // rounded so that e.g. 4.0 + 23 * 0.1 prints as 6.3
    Ok((0..count)
        .map(|i| ((start_db + i as f64 * step_db) * 1e9).round() / 1e9)
        .collect())
}

/// Mergeable exceedance counter over a fixed threshold grid.
///
/// Merging is integer addition, so the result does not depend on how the
/// samples were partitioned or in what order they arrived.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdfAccumulator {
    thresholds_db: Vec<f64>,
    // bins[i] = samples with exactly i thresholds at or below them
    bins: Vec<u64>,
    total: u64,
}

impl CcdfAccumulator {
    pub fn new(thresholds_db: Vec<f64>) -> Result<Self> {
        if thresholds_db.is_empty() {
            return Err(Error::Empty("threshold grid"));
        }
        if thresholds_db
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::Parameter("thresholds must be strictly ascending".into()));
        }
        let bins = vec![0; thresholds_db.len() + 1];
        Ok(CcdfAccumulator {
            thresholds_db,
            bins,
            total: 0,
        })
    }

    pub fn push(&mut self, sample_db: f64) {
        let idx = self.thresholds_db.partition_point(|&t| t <= sample_db);
        self.bins[idx] += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        debug_assert_eq!(self.thresholds_db, other.thresholds_db);
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of samples at or above each threshold.
    pub fn exceedances(&self) -> Vec<u64> {
        let g = self.thresholds_db.len();
        let mut out = vec![0; g];
        let mut running = self.bins[g];
        for j in (0..g).rev() {
            out[j] = running;
            running += self.bins[j];
        }
        out
    }

    pub fn curve(&self, seed: u64) -> Result<CcdfCurve> {
        if self.total == 0 {
            return Err(Error::Empty("PAPR samples"));
        }
        let n = self.total as f64;
        Ok(CcdfCurve {
            thresholds_db: self.thresholds_db.clone(),
            probabilities: self.exceedances().into_iter().map(|c| c as f64 / n).collect(),
            n_frames: self.total,
            seed,
        })
    }
}

/// Empirical CCDF of `samples` on `thresholds_db`.
pub fn ccdf(samples: &[f64], thresholds_db: &[f64]) -> Result<CcdfCurve> {
    if samples.is_empty() {
        return Err(Error::Empty("PAPR samples"));
    }
    let mut acc = CcdfAccumulator::new(thresholds_db.to_vec())?;
    for &s in samples {
        acc.push(s);
    }
    acc.curve(0)
}

impl CcdfCurve {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Smallest strictly positive probability on the curve.
    pub fn floor_probability(&self) -> Option<f64> {
        self.probabilities.iter().copied().filter(|&p| p > 0.0).reduce(f64::min)
    }

    pub fn papr_at(&self, probability: f64) -> Result<f64> {
        papr_at_probability(self, probability)
    }
}

/// PAPR at which the curve crosses `probability`, interpolated linearly in
/// `(threshold_db, log10 probability)` between the grid points bracketing
/// the crossing.
pub fn papr_at_probability(curve: &CcdfCurve, probability: f64) -> Result<f64> {
    let probs = &curve.probabilities;
    let ts = &curve.thresholds_db;
    let max = probs.first().copied().unwrap_or(0.0);
    let min = curve.floor_probability().unwrap_or(0.0);
    let out_of_range = Error::Range { probability, min, max };
    if !(probability > 0.0 && probability <= 1.0) || probs.is_empty() || min == 0.0 {
        return Err(out_of_range);
    }
    if probability > max || probability < min {
        return Err(out_of_range);
    }
    let j = probs.iter().position(|&p| p <= probability).ok_or(out_of_range)?;
    if j == 0 || probs[j] == probability {
        return Ok(ts[j]);
    }
    let (p0, p1) = (probs[j - 1].log10(), probs[j].log10());
    let frac = (probability.log10() - p0) / (p1 - p0);
    Ok(ts[j - 1] + frac * (ts[j] - ts[j - 1]))
}
