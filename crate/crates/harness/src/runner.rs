//! Per-transmission pipelines and the parallel Monte Carlo driver.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stace::ace::{ace_reduce, AceParams};
use stace::metrics::{overall_papr_db, CcdfAccumulator};
use stace::sfbc::{reconstruct_from_antenna, SfbcCode, SfbcSystem};
use stace::stbc::{ace_stbc_pipeline, stbc_time_frames, StbcScheme};
use stace::{AntennaTimeSet, CcdfCurve, Constellation, Ofdm, OversamplingConfig, SymbolFrame};

use crate::config::{Coding, ExperimentConfig, Method};

/// Probabilities read off every curve in a [`RunReport`].
pub const REPORT_PROBABILITIES: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

// Transmissions per work unit. Fixed so that summation order, and hence
// every reported float, is independent of the worker count.
const CHUNK: u64 = 1024;

/// Uniform bits for symbol block `block`, reproducible from `(seed, block)`.
pub fn block_bits(seed: u64, block: u64, n_bits: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let mut bits = Vec::with_capacity(n_bits);
    while bits.len() < n_bits {
        let word = rng.next_u64();
        let take = (n_bits - bits.len()).min(64);
        bits.extend((0..take).map(|i| ((word >> i) & 1) as u8));
    }
    bits
}

enum Engine {
    Single(Ofdm),
    Stbc(Ofdm, StbcScheme),
    Sfbc(SfbcSystem),
}

/// One transmission: source data, extended frames and antenna signals.
#[derive(Debug, Clone)]
pub struct Transmission {
    pub bits: Vec<Vec<u8>>,
    pub sources: Vec<SymbolFrame>,
    /// Symbol frames after extension, one per source.
    pub extended: Vec<SymbolFrame>,
    pub set: AntennaTimeSet,
}

impl Transmission {
    pub fn papr_db(&self) -> f64 {
        overall_papr_db(&self.set).expect("positive reference power")
    }

    /// Mean extension energy per source frame.
    pub fn delta_power(&self) -> f64 {
        let total: f64 = self
            .extended
            .iter()
            .zip(&self.sources)
            .map(|(e, s)| e.distance_sqr(s))
            .sum();
        total / self.sources.len() as f64
    }
}

/// Builds transmissions for a validated configuration.
pub struct Pipeline {
    cfg: ExperimentConfig,
    constellation: Constellation,
    params: AceParams,
    engine: Engine,
}

impl Pipeline {
    pub fn new(cfg: &ExperimentConfig) -> anyhow::Result<Self> {
        cfg.validate()?;
        let ofdm_cfg = OversamplingConfig::new(cfg.n_c, cfg.oversample)?;
        let iterations = if cfg.method == Method::None { 0 } else { cfg.iterations };
        let params = AceParams::new(cfg.clip_db, iterations)?;
        let engine = match cfg.coding {
            Coding::None => Engine::Single(Ofdm::new(ofdm_cfg)),
            Coding::Stbc2 | Coding::Stbc4 => {
                Engine::Stbc(Ofdm::new(ofdm_cfg), StbcScheme::for_antennas(cfg.coding.n_t())?)
            }
            Coding::Sfbc2 | Coding::Sfbc4 => {
                Engine::Sfbc(SfbcSystem::new(SfbcCode::for_antennas(cfg.coding.n_t())?, ofdm_cfg)?)
            }
        };
        Ok(Pipeline {
            cfg: cfg.clone(),
            constellation: cfg.constellation.build(),
            params,
            engine,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    /// Transforms executed so far, at any length.
    pub fn fft_calls(&self) -> u64 {
        match &self.engine {
            Engine::Single(o) | Engine::Stbc(o, _) => o.fft_calls(),
            Engine::Sfbc(sys) => {
                let (full, sub) = sys.fft_calls();
                full + sub
            }
        }
    }

    fn ofdm(&self) -> &Ofdm {
        match &self.engine {
            Engine::Single(o) | Engine::Stbc(o, _) => o,
            Engine::Sfbc(sys) => sys.ofdm(),
        }
    }

    pub fn transmit(&self, tx: u64) -> anyhow::Result<Transmission> {
        let slots = self.cfg.coding.slots() as u64;
        let n_bits = self.cfg.n_c * self.constellation.bits_per_symbol();
        let bits: Vec<Vec<u8>> = (0..slots)
            .map(|b| block_bits(self.cfg.seed, tx * slots + b, n_bits))
            .collect();
        let sources = bits
            .iter()
            .map(|b| self.constellation.map_bits(b))
            .collect::<stace::Result<Vec<_>>>()?;

        let reference = self.ofdm().config().reference_power();
        let (extended, set) = match (&self.engine, self.cfg.method) {
            (Engine::Single(ofdm), Method::None) => {
                let t = ofdm.synthesize(&sources[0])?;
                (sources.clone(), AntennaTimeSet::new(vec![vec![t]], reference)?)
            }
            (Engine::Single(ofdm), _) => {
                let out = ace_reduce(ofdm, &sources[0], &self.params, &self.constellation)?;
                (vec![out.symbols], AntennaTimeSet::new(vec![vec![out.time]], reference)?)
            }
            (Engine::Stbc(ofdm, scheme), Method::None) => {
                let times = sources
                    .iter()
                    .map(|s| ofdm.synthesize(s))
                    .collect::<stace::Result<Vec<_>>>()?;
                (sources.clone(), stbc_time_frames(&times, scheme.n_t(), reference)?)
            }
            (Engine::Stbc(ofdm, _), _) => {
                let out = ace_stbc_pipeline(ofdm, &sources, &self.params, &self.constellation)?;
                (out.reduced, out.set)
            }
            (Engine::Sfbc(sys), Method::None) => (sources.clone(), sys.transmit(&sources[0])?),
            (Engine::Sfbc(sys), Method::SubAce) => {
                let out = sys.sub_ace(&sources[0], &self.params, &self.constellation)?;
                (vec![out.symbols], out.set)
            }
            (Engine::Sfbc(sys), _) => {
                let (set, state) = sys.selective_ace(&sources[0], &self.params, &self.constellation)?;
                (vec![state.current], set)
            }
        };
        Ok(Transmission {
            bits,
            sources,
            extended,
            set,
        })
    }

    /// Bit errors after recovering the symbols from every transmitted
    /// antenna frame on its own and demapping to the nearest point.
    pub fn count_bit_errors(&self, tx: &Transmission) -> anyhow::Result<u64> {
        let con = &self.constellation;
        let errors = |frame: &[stace::Sample], bits: &[u8]| -> u64 {
            con.demap_nearest(frame)
                .iter()
                .zip(bits)
                .filter(|(a, b)| a != b)
                .count() as u64
        };
        let mut total = 0;
        match &self.engine {
            Engine::Single(ofdm) => {
                let y = ofdm.analyze(tx.set.get(0, 0))?;
                total += errors(&y, &tx.bits[0]);
            }
            Engine::Stbc(ofdm, scheme) => {
                for p in 0..scheme.n_t() {
                    for slot in 0..scheme.slots() {
                        let e = scheme.entry(p, slot);
                        let mut y = ofdm.analyze(tx.set.get(p, slot))?;
                        for v in y.iter_mut() {
                            if e.negate {
                                *v = -*v;
                            }
                            if e.conjugate {
                                *v = v.conj();
                            }
                        }
                        total += errors(&y, &tx.bits[e.source]);
                    }
                }
            }
            Engine::Sfbc(sys) => {
                for q in 0..sys.code().n_t() {
                    let y = sys.ofdm().analyze(tx.set.get(q, 0))?;
                    let s = reconstruct_from_antenna(&y, q, sys.code())?;
                    total += errors(&s, &tx.bits[0]);
                }
            }
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
    /// Demap every transmission and count bit errors.
    pub verify: bool,
    /// Progress ticker on stderr.
    pub progress: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaprReadout {
    pub probability: f64,
    /// `None` when the curve does not reach the probability.
    pub papr_db: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(remote = "CcdfCurve")]
struct CcdfCurveDef {
    thresholds_db: Vec<f64>,
    probabilities: Vec<f64>,
    n_frames: u64,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    #[serde(with = "CcdfCurveDef")]
    pub curve: CcdfCurve,
    pub papr_at: Vec<PaprReadout>,
    pub mean_delta_power: f64,
    pub fft_call_count: u64,
    /// Present when the run verified bit preservation.
    pub bit_errors: Option<u64>,
    /// Seconds. Not serialized, so reports of equal runs are identical.
    #[serde(skip)]
    pub wall_time: f64,
}

impl RunReport {
    pub fn papr_at(&self, probability: f64) -> stace::Result<f64> {
        self.curve.papr_at(probability)
    }
}

struct Partial {
    acc: CcdfAccumulator,
    delta_sum: f64,
    bit_errors: u64,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> anyhow::Result<RunReport> {
    run_experiment_with(cfg, &RunOptions::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, opts: &RunOptions) -> anyhow::Result<RunReport> {
    let start = Instant::now();
    let pipeline = Pipeline::new(cfg)?;
    let thresholds = cfg.thresholds.values()?;
    let workers = opts
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;

    let done = AtomicU64::new(0);
    let tick = (cfg.frames / 100).max(1);
    let n_chunks = cfg.frames.div_ceil(CHUNK);
    let run_chunk = |c: u64| -> anyhow::Result<Partial> {
        let mut part = Partial {
            acc: CcdfAccumulator::new(thresholds.clone())?,
            delta_sum: 0.0,
            bit_errors: 0,
        };
        for tx in c * CHUNK..((c + 1) * CHUNK).min(cfg.frames) {
            let t = pipeline.transmit(tx)?;
            part.acc.push(t.papr_db());
            part.delta_sum += t.delta_power();
            if opts.verify {
                part.bit_errors += pipeline.count_bit_errors(&t)?;
            }
            if opts.progress {
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                if n.is_multiple_of(tick) || n == cfg.frames {
                    eprint!("\r{n}/{} transmissions", cfg.frames);
                }
            }
        }
        Ok(part)
    };
    let parts = pool.install(|| {
        (0..n_chunks)
            .into_par_iter()
            .map(run_chunk)
            .collect::<anyhow::Result<Vec<_>>>()
    })?;
    if opts.progress {
        eprintln!();
    }

    let mut acc = CcdfAccumulator::new(thresholds)?;
    let mut delta_sum = 0.0;
    let mut bit_errors = 0;
    for p in &parts {
        acc.merge(&p.acc);
        delta_sum += p.delta_sum;
        bit_errors += p.bit_errors;
    }
    let curve = acc.curve(cfg.seed)?;
    let papr_at = REPORT_PROBABILITIES
        .iter()
        .map(|&p| PaprReadout {
            probability: p,
            papr_db: curve.papr_at(p).ok(),
        })
        .collect();
    Ok(RunReport {
        config: cfg.clone(),
        curve,
        papr_at,
        mean_delta_power: delta_sum / cfg.frames as f64,
        fft_call_count: pipeline.fft_calls(),
        bit_errors: opts.verify.then_some(bit_errors),
        wall_time: start.elapsed().as_secs_f64(),
    })
}
