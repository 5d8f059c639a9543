//! Oversampled OFDM synthesis and analysis.
//!
//! `synthesize` places the `n_c` symbols on bins `0..n_c` of an `n = l * n_c`
//! point inverse DFT and scales by `1/sqrt(n)`:
//!
//! ```text
//! s(n) = 1/sqrt(N) * sum_{k < Nc} S(k) * exp(+j 2 pi n k / N)
//! ```
//!
//! `analyze` is the matching forward transform restricted to the occupied
//! bins, so `analyze(synthesize(S)) == S` up to rounding.

use std::ops::{Deref, DerefMut};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::{Error, Result, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OversamplingConfig {
    n_c: usize,
    l: usize,
}

impl OversamplingConfig {
    pub fn new(n_c: usize, l: usize) -> Result<Self> {
        if n_c < 1 {
            return Err(Error::Parameter("n_c must be at least 1".into()));
        }
        if l < 1 {
            return Err(Error::Parameter("oversampling ratio must be at least 1".into()));
        }
        Ok(OversamplingConfig { n_c, l })
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }

    pub fn oversampling(&self) -> usize {
        self.l
    }

    /// Transform length `l * n_c`.
    pub fn n(&self) -> usize {
        self.l * self.n_c
    }

    /// Mean sample power of a synthesized frame of unit-power symbols.
    pub fn reference_power(&self) -> f64 {
        self.n_c as f64 / self.n() as f64
    }
}

/// A frequency-domain block of `n_c` symbols.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymbolFrame {
    symbols: Vec<Sample>,
}

impl SymbolFrame {
    pub fn new(symbols: Vec<Sample>) -> Self {
        SymbolFrame { symbols }
    }

    pub fn zeros(n_c: usize) -> Self {
        SymbolFrame {
            symbols: vec![Sample::new(0.0, 0.0); n_c],
        }
    }

    pub fn n_c(&self) -> usize {
        self.symbols.len()
    }

    pub fn into_inner(self) -> Vec<Sample> {
        self.symbols
    }

    pub fn conj(&self) -> Self {
        self.symbols.iter().map(|s| s.conj()).collect()
    }

    /// Sum of squared distances to `other`.
    pub fn distance_sqr(&self, other: &[Sample]) -> f64 {
        self.symbols.iter().zip(other).map(|(a, b)| (a - b).norm_sqr()).sum()
    }
}

impl Deref for SymbolFrame {
    type Target = [Sample];

    fn deref(&self) -> &[Sample] {
        &self.symbols
    }
}

impl DerefMut for SymbolFrame {
    fn deref_mut(&mut self) -> &mut [Sample] {
        &mut self.symbols
    }
}

impl FromIterator<Sample> for SymbolFrame {
    fn from_iter<I: IntoIterator<Item = Sample>>(iter: I) -> Self {
        SymbolFrame::new(iter.into_iter().collect())
    }
}

impl From<Vec<Sample>> for SymbolFrame {
    fn from(symbols: Vec<Sample>) -> Self {
        SymbolFrame::new(symbols)
    }
}

/// An oversampled time-domain block of `n` samples carrying `n_c` bins.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeFrame {
    samples: Vec<Sample>,
    n_c: usize,
}

impl TimeFrame {
    pub fn new(samples: Vec<Sample>, n_c: usize) -> Self {
        TimeFrame { samples, n_c }
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }

    pub fn into_inner(self) -> Vec<Sample> {
        self.samples
    }

    pub fn peak_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).fold(0.0, f64::max)
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.energy() / self.samples.len() as f64
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    pub fn scaled(&self, factor: Sample) -> Self {
        TimeFrame::new(self.samples.iter().map(|s| s * factor).collect(), self.n_c)
    }
}

impl Deref for TimeFrame {
    type Target = [Sample];

    fn deref(&self) -> &[Sample] {
        &self.samples
    }
}

impl DerefMut for TimeFrame {
    fn deref_mut(&mut self) -> &mut [Sample] {
        &mut self.samples
    }
}

/// Planned transform pair for one [`OversamplingConfig`].
///
/// Plans are shared (`Arc`) and the engine is `Sync`, so a single instance can
/// serve every worker. Transform calls are counted for diagnostics.
pub struct Ofdm {
    cfg: OversamplingConfig,
    inverse: Arc<dyn Fft<f64>>,
    forward: Arc<dyn Fft<f64>>,
    scale: f64,
    calls: AtomicU64,
}

impl std::fmt::Debug for Ofdm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ofdm")
            .field("cfg", &self.cfg)
            .field("calls", &self.fft_calls())
            .finish()
    }
}

impl Ofdm {
    pub fn new(cfg: OversamplingConfig) -> Self {
        let mut planner = FftPlanner::new();
        let n = cfg.n();
        Ofdm {
            cfg,
            inverse: planner.plan_fft_inverse(n),
            forward: planner.plan_fft_forward(n),
            scale: 1.0 / (n as f64).sqrt(),
            calls: AtomicU64::new(0),
        }
    }

    pub fn config(&self) -> OversamplingConfig {
        self.cfg
    }

    /// Number of transforms (either direction) executed so far.
    pub fn fft_calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    fn run(&self, plan: &dyn Fft<f64>, buf: &mut [Sample]) {
        let mut scratch = vec![Sample::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        self.calls.fetch_add(1, Ordering::Relaxed);
    }

    /// Zero-pads `frame` to `n` bins and applies the unitary inverse DFT.
    pub fn synthesize(&self, frame: &[Sample]) -> Result<TimeFrame> {
        let n_c = self.cfg.n_c();
        if frame.len() != n_c {
            return Err(Error::InputSize {
                expected: n_c,
                actual: frame.len(),
            });
        }
        let mut buf = vec![Sample::new(0.0, 0.0); self.cfg.n()];
        buf[..n_c].copy_from_slice(frame);
        self.run(self.inverse.as_ref(), &mut buf);
        for s in &mut buf {
            *s *= self.scale;
        }
        Ok(TimeFrame::new(buf, n_c))
    }

    /// Unitary forward DFT keeping only the occupied bins `0..n_c`.
    pub fn analyze(&self, tf: &[Sample]) -> Result<SymbolFrame> {
        let n = self.cfg.n();
        if tf.len() != n {
            return Err(Error::InputSize {
                expected: n,
                actual: tf.len(),
            });
        }
        let mut buf = tf.to_vec();
        self.run(self.forward.as_ref(), &mut buf);
        buf.truncate(self.cfg.n_c());
        for s in &mut buf {
            *s *= self.scale;
        }
        Ok(SymbolFrame::new(buf))
    }
}

/// Right circular shift by `d` (the `Z^-d` operator): `out(k) = v((k - d) mod len)`.
pub fn circular_shift(v: &[Sample], d: usize) -> SymbolFrame {
    let mut out = v.to_vec();
    if !out.is_empty() {
        out.rotate_right(d % v.len());
    }
    SymbolFrame::new(out)
}

/// `out(n) = conj(tf((-n) mod N))`. This is the time-domain image of
/// conjugating the frequency-domain symbols.
pub fn conj_time_reverse(tf: &TimeFrame) -> TimeFrame {
    let n = tf.n();
    let samples = (0..n).map(|i| tf[(n - i) % n].conj()).collect();
    TimeFrame::new(samples, tf.n_c())
}
