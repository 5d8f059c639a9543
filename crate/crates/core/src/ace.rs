//! Iterative clip / filter / project ACE on a single frame.
//!
//! One iteration synthesizes the current symbols, clips the time samples to
//! amplitude `A`, returns to the frequency domain dropping out-of-band bins,
//! and projects every symbol back into the extension region of its original
//! nominal point.

use crate::constellation::{Constellation, Region};
use crate::metrics::papr_db;
use crate::transforms::{Ofdm, SymbolFrame, TimeFrame};
use crate::{Error, Result, Sample};

/// Clip level used throughout the reference experiments, in dB above the
/// mean power of the unextended frame.
pub const DEFAULT_CLIP_DB: f64 = 4.86;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AceParams {
    /// Clip level in dB above the reference power.
    pub clip_db: f64,
    pub iterations: usize,
    /// Stop as soon as the frame PAPR is at or below this value.
    pub target_papr_db: Option<f64>,
}

impl AceParams {
    pub fn new(clip_db: f64, iterations: usize) -> Result<Self> {
        if !clip_db.is_finite() {
            return Err(Error::Parameter(format!("clip level {clip_db} dB is not finite")));
        }
        Ok(AceParams {
            clip_db,
            iterations,
            target_papr_db: None,
        })
    }

    pub fn with_target(mut self, target_papr_db: f64) -> Self {
        self.target_papr_db = Some(target_papr_db);
        self
    }

    fn target_reached(&self, papr: f64) -> bool {
        self.target_papr_db.is_some_and(|t| papr <= t)
    }
}

impl Default for AceParams {
    fn default() -> Self {
        AceParams {
            clip_db: DEFAULT_CLIP_DB,
            iterations: 0,
            target_papr_db: None,
        }
    }
}

/// Per-iteration record of a run. Entry 0 describes the unmodified frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AceDiagnostics {
    pub papr_per_iteration_db: Vec<f64>,
    /// `sum_k |output(k) - original(k)|^2`.
    pub delta_power: f64,
    /// Samples above the clip amplitude in each iterate.
    pub clipped_sample_counts: Vec<usize>,
}

impl AceDiagnostics {
    /// Iterations actually run (fewer than requested after an early stop).
    pub fn iterations_run(&self) -> usize {
        self.papr_per_iteration_db.len().saturating_sub(1)
    }

    pub fn final_papr_db(&self) -> f64 {
        self.papr_per_iteration_db.last().copied().unwrap_or(f64::NAN)
    }
}

/// Result of [`ace_reduce`]: the last iterate, its time frame and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct AceOutput {
    pub symbols: SymbolFrame,
    pub time: TimeFrame,
    pub diagnostics: AceDiagnostics,
}

/// Soft limiter: samples above `a` keep their phase and get magnitude `a`.
pub fn clip(tf: &TimeFrame, a: f64) -> Result<TimeFrame> {
    check_amplitude(a)?;
    let mut out = tf.clone();
    clip_in_place(&mut out, a);
    Ok(out)
}

/// Clips in place and returns how many samples were limited.
pub fn clip_in_place(samples: &mut [Sample], a: f64) -> usize {
    let a_sqr = a * a;
    let mut clipped = 0;
    for s in samples.iter_mut() {
        let p = s.norm_sqr();
        if p > a_sqr {
            *s *= a / p.sqrt();
            clipped += 1;
        }
    }
    clipped
}

fn count_above(samples: &[Sample], a: f64) -> usize {
    let a_sqr = a * a;
    samples.iter().filter(|s| s.norm_sqr() > a_sqr).count()
}

fn check_amplitude(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("clip amplitude must be positive, got {a}")))
    }
}

/// `sqrt(reference_power * 10^(clip_db / 10))`.
pub fn clip_amplitude_from_db(clip_db: f64, reference_power: f64) -> Result<f64> {
    if reference_power.is_nan() || reference_power <= 0.0 {
        return Err(Error::Parameter(format!(
            "reference power must be positive, got {reference_power}"
        )));
    }
    Ok((reference_power * 10f64.powf(clip_db / 10.0)).sqrt())
}

/// Clip `time` to `a`, analyze, and project bin `k` onto `regions[k]`.
///
/// This is the shared inner step of every ACE variant; callers choose the
/// regions (frozen zero regions suppress bins).
pub fn clip_filter_project(ofdm: &Ofdm, time: &mut TimeFrame, a: f64, regions: &[Region]) -> Result<SymbolFrame> {
    check_amplitude(a)?;
    if regions.len() != ofdm.config().n_c() {
        return Err(Error::InputSize {
            expected: ofdm.config().n_c(),
            actual: regions.len(),
        });
    }
    clip_in_place(time, a);
    let mut freq = ofdm.analyze(time)?;
    for (s, r) in freq.iter_mut().zip(regions) {
        *s = r.project(*s);
    }
    Ok(freq)
}

/// One ACE iteration on `current` with regions anchored at `original`.
pub fn ace_iterate(
    ofdm: &Ofdm,
    original: &[Sample],
    current: &[Sample],
    a: f64,
    constellation: &Constellation,
) -> Result<SymbolFrame> {
    if original.len() != current.len() {
        return Err(Error::InputSize {
            expected: original.len(),
            actual: current.len(),
        });
    }
    let regions = constellation.regions(original)?;
    let mut time = ofdm.synthesize(current)?;
    clip_filter_project(ofdm, &mut time, a, &regions)
}

/// Runs the ACE loop with precomputed regions. PAPR and clip amplitude are
/// both referred to `reference_power`.
pub(crate) fn ace_reduce_with_regions(
    ofdm: &Ofdm,
    frame: &[Sample],
    regions: &[Region],
    params: &AceParams,
    reference_power: f64,
) -> Result<AceOutput> {
    let a = clip_amplitude_from_db(params.clip_db, reference_power)?;
    let mut current = SymbolFrame::new(frame.to_vec());
    let mut time = ofdm.synthesize(&current)?;

    let mut papr = papr_db(&time, reference_power)?;
    let mut diagnostics = AceDiagnostics {
        papr_per_iteration_db: vec![papr],
        delta_power: 0.0,
        clipped_sample_counts: vec![count_above(&time, a)],
    };

    for _ in 0..params.iterations {
        if params.target_reached(papr) {
            break;
        }
        current = clip_filter_project(ofdm, &mut time, a, regions)?;
        debug_assert!(current.iter().zip(regions).all(|(s, r)| r.contains(*s, 1e-12)));
        time = ofdm.synthesize(&current)?;
        papr = papr_db(&time, reference_power)?;
        diagnostics.papr_per_iteration_db.push(papr);
        diagnostics.clipped_sample_counts.push(count_above(&time, a));
    }

    diagnostics.delta_power = current.distance_sqr(frame);
    Ok(AceOutput {
        symbols: current,
        time,
        diagnostics,
    })
}

/// Iterative ACE on a frame of nominal points.
///
/// The reference power for the clip level and every PAPR reading is the mean
/// sample power of the unextended frame, `n_c / n` for a unit-power
/// constellation. The last iterate is returned.
pub fn ace_reduce(
    ofdm: &Ofdm,
    frame: &[Sample],
    params: &AceParams,
    constellation: &Constellation,
) -> Result<AceOutput> {
    let regions = constellation.regions(frame)?;
    ace_reduce_with_regions(ofdm, frame, &regions, params, ofdm.config().reference_power())
}
