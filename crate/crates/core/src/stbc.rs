//! Space-time block coding over whole OFDM frames, and ACE ahead of it.
//!
//! Every grid entry of the two supported codes is `±S_i` or `±S_i*` for one
//! of the input frames. In the time domain `S_i` becomes `s_i` and `S_i*`
//! becomes `conj_time_reverse(s_i)`, so each antenna slot is a signed,
//! possibly conjugated and time-reversed copy of one input frame, and has
//! exactly the same PAPR. Reducing the PAPR of the inputs therefore reduces
//! the PAPR of every antenna.

use crate::ace::{ace_reduce, AceDiagnostics, AceParams};
use crate::constellation::Constellation;
use crate::transforms::{conj_time_reverse, Ofdm, SymbolFrame, TimeFrame};
use crate::{Error, Result, Sample};

/// One grid cell: `(-1)^negate * S_source` or its conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeEntry {
    pub source: usize,
    pub conjugate: bool,
    pub negate: bool,
}

const fn e(source: usize, conjugate: bool, negate: bool) -> CodeEntry {
    CodeEntry {
        source,
        conjugate,
        negate,
    }
}

// [antenna][slot]
const ALAMOUTI: [[CodeEntry; 2]; 2] = [
    [e(0, false, false), e(1, true, true)],
    [e(1, false, false), e(0, true, false)],
];

const QUASI_ORTHOGONAL: [[CodeEntry; 4]; 4] = [
    [
        e(0, false, false),
        e(1, true, true),
        e(2, false, false),
        e(3, true, true),
    ],
    [
        e(1, false, false),
        e(0, true, false),
        e(3, false, false),
        e(2, true, false),
    ],
    [
        e(2, false, false),
        e(3, true, true),
        e(0, false, false),
        e(1, true, true),
    ],
    [
        e(3, false, false),
        e(2, true, false),
        e(1, false, false),
        e(0, true, false),
    ],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StbcScheme {
    /// Two antennas over two frames.
    Alamouti,
    /// Four antennas over four frames (quasi-orthogonal).
    QuasiOrthogonal4,
}

impl StbcScheme {
    pub fn for_antennas(n_t: usize) -> Result<Self> {
        match n_t {
            2 => Ok(StbcScheme::Alamouti),
            4 => Ok(StbcScheme::QuasiOrthogonal4),
            _ => Err(Error::Parameter(format!("STBC supports 2 or 4 antennas, got {n_t}"))),
        }
    }

    pub fn n_t(&self) -> usize {
        match self {
            StbcScheme::Alamouti => 2,
            StbcScheme::QuasiOrthogonal4 => 4,
        }
    }

    /// Frames consumed per transmission; equal to `n_t` for both codes.
    pub fn slots(&self) -> usize {
        self.n_t()
    }

    pub fn entry(&self, antenna: usize, slot: usize) -> CodeEntry {
        match self {
            StbcScheme::Alamouti => ALAMOUTI[antenna][slot],
            StbcScheme::QuasiOrthogonal4 => QUASI_ORTHOGONAL[antenna][slot],
        }
    }
}

/// Frequency-domain STBC output, indexed `[antenna][slot]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StbcGrid {
    scheme: StbcScheme,
    frames: Vec<Vec<SymbolFrame>>,
}

impl StbcGrid {
    pub fn scheme(&self) -> StbcScheme {
        self.scheme
    }

    pub fn n_t(&self) -> usize {
        self.frames.len()
    }

    pub fn slots(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }

    pub fn get(&self, antenna: usize, slot: usize) -> &SymbolFrame {
        &self.frames[antenna][slot]
    }

    pub fn frames(&self) -> &[Vec<SymbolFrame>] {
        &self.frames
    }

    /// Recovers the input frames by undoing the sign and conjugation of the
    /// first occurrence of each source in the grid.
    pub fn decode(&self) -> Vec<SymbolFrame> {
        (0..self.scheme.slots())
            .map(|source| {
                let (p, t, entry) = (0..self.n_t())
                    .flat_map(|p| (0..self.slots()).map(move |t| (p, t)))
                    .map(|(p, t)| (p, t, self.scheme.entry(p, t)))
                    .find(|(_, _, en)| en.source == source)
                    .expect("every source appears in the code");
                self.frames[p][t]
                    .iter()
                    .map(|&v| {
                        let v = if entry.negate { -v } else { v };
                        if entry.conjugate {
                            v.conj()
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

fn apply_freq(entry: CodeEntry, frame: &SymbolFrame) -> SymbolFrame {
    frame
        .iter()
        .map(|&v| {
            let v: Sample = if entry.conjugate { v.conj() } else { v };
            if entry.negate {
                -v
            } else {
                v
            }
        })
        .collect()
}

fn check_lengths<T: std::ops::Deref<Target = [Sample]>>(frames: &[T]) -> Result<()> {
    let n = frames.first().map_or(0, |f| f.len());
    for f in frames {
        if f.len() != n {
            return Err(Error::InputSize {
                expected: n,
                actual: f.len(),
            });
        }
    }
    Ok(())
}

/// Encodes `frames.len()` (2 or 4) frames with the matching STBC.
pub fn stbc_encode(frames: &[SymbolFrame]) -> Result<StbcGrid> {
    let scheme = StbcScheme::for_antennas(frames.len())?;
    check_lengths(frames)?;
    let grid = (0..scheme.n_t())
        .map(|p| {
            (0..scheme.slots())
                .map(|t| {
                    let en = scheme.entry(p, t);
                    apply_freq(en, &frames[en.source])
                })
                .collect()
        })
        .collect();
    Ok(StbcGrid { scheme, frames: grid })
}

/// Alamouti: antenna 1 sends `(S0, -S1*)`, antenna 2 sends `(S1, S0*)`.
pub fn stbc2_encode(s0: &SymbolFrame, s1: &SymbolFrame) -> Result<StbcGrid> {
    stbc_encode(&[s0.clone(), s1.clone()])
}

/// Four-antenna quasi-orthogonal code over four frames.
pub fn stbc4_encode(s0: &SymbolFrame, s1: &SymbolFrame, s2: &SymbolFrame, s3: &SymbolFrame) -> Result<StbcGrid> {
    stbc_encode(&[s0.clone(), s1.clone(), s2.clone(), s3.clone()])
}

/// Time-domain frames of one transmission, indexed `[antenna][slot]`, with
/// the reference power shared by every PAPR reading.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaTimeSet {
    frames: Vec<Vec<TimeFrame>>,
    reference_power: f64,
}

impl AntennaTimeSet {
    pub fn new(frames: Vec<Vec<TimeFrame>>, reference_power: f64) -> Result<Self> {
        let first = frames
            .first()
            .and_then(|row| row.first())
            .ok_or(Error::Empty("antenna frames"))?;
        let n = first.n();
        for f in frames.iter().flatten() {
            if f.n() != n {
                return Err(Error::InputSize {
                    expected: n,
                    actual: f.n(),
                });
            }
        }
        Ok(AntennaTimeSet {
            frames,
            reference_power,
        })
    }

    pub fn frames(&self) -> &[Vec<TimeFrame>] {
        &self.frames
    }

    pub fn get(&self, antenna: usize, slot: usize) -> &TimeFrame {
        &self.frames[antenna][slot]
    }

    pub fn n_t(&self) -> usize {
        self.frames.len()
    }

    pub fn reference_power(&self) -> f64 {
        self.reference_power
    }
}

/// Builds every antenna slot directly from the time-domain input frames.
///
/// For two antennas:
///
/// ```text
/// ant1: s0(n),  -conj(s1((-n) mod N))
/// ant2: s1(n),   conj(s0((-n) mod N))
/// ```
///
/// and the four-antenna rows follow the same rule entry by entry.
pub fn stbc_time_frames(times: &[TimeFrame], n_t: usize, reference_power: f64) -> Result<AntennaTimeSet> {
    let scheme = StbcScheme::for_antennas(n_t)?;
    if times.len() != scheme.slots() {
        return Err(Error::InputSize {
            expected: scheme.slots(),
            actual: times.len(),
        });
    }
    check_lengths(times)?;
    let frames = (0..scheme.n_t())
        .map(|p| {
            (0..scheme.slots())
                .map(|t| {
                    let en = scheme.entry(p, t);
                    let src = &times[en.source];
                    let base = if en.conjugate {
                        conj_time_reverse(src)
                    } else {
                        src.clone()
                    };
                    if en.negate {
                        base.scaled(Sample::new(-1.0, 0.0))
                    } else {
                        base
                    }
                })
                .collect()
        })
        .collect();
    AntennaTimeSet::new(frames, reference_power)
}

/// Result of ACE followed by STBC encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct StbcAceOutput {
    pub set: AntennaTimeSet,
    /// Extended input frames, in input order.
    pub reduced: Vec<SymbolFrame>,
    pub diagnostics: Vec<AceDiagnostics>,
}

/// Runs ACE on each input frame independently, then STBC-encodes the
/// reduced time frames.
pub fn ace_stbc_pipeline(
    ofdm: &Ofdm,
    frames: &[SymbolFrame],
    params: &AceParams,
    constellation: &Constellation,
) -> Result<StbcAceOutput> {
    let scheme = StbcScheme::for_antennas(frames.len())?;
    let mut reduced = Vec::with_capacity(frames.len());
    let mut times = Vec::with_capacity(frames.len());
    let mut diagnostics = Vec::with_capacity(frames.len());
    for f in frames {
        let out = ace_reduce(ofdm, f, params, constellation)?;
        reduced.push(out.symbols);
        times.push(out.time);
        diagnostics.push(out.diagnostics);
    }
    let set = stbc_time_frames(&times, scheme.n_t(), ofdm.config().reference_power())?;
    Ok(StbcAceOutput {
        set,
        reduced,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{overall_papr_db, papr_db};
    use crate::transforms::OversamplingConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Sample {
        Sample::new(re, im)
    }

    fn random_frame(rng: &mut ChaCha8Rng, n: usize) -> SymbolFrame {
        (0..n)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn alamouti_example() {
        let s0 = SymbolFrame::new(vec![c(1.0, 1.0)]);
        let s1 = SymbolFrame::new(vec![c(1.0, -1.0)]);
        let g = stbc2_encode(&s0, &s1).unwrap();
        assert_eq!(g.get(0, 0)[0], c(1.0, 1.0));
        assert_eq!(g.get(0, 1)[0], c(-1.0, -1.0));
        assert_eq!(g.get(1, 0)[0], c(1.0, -1.0));
        assert_eq!(g.get(1, 1)[0], c(1.0, -1.0));
    }

    #[test]
    fn alamouti_zero_and_real_inputs() {
        let s0: SymbolFrame = [1.0, -2.0, 0.5].iter().map(|&x| c(x, 0.0)).collect();
        let z = SymbolFrame::zeros(3);
        let g = stbc2_encode(&s0, &z).unwrap();
        assert!(g.get(0, 1).iter().all(|v| v.norm() == 0.0));
        assert!(g.get(1, 0).iter().all(|v| v.norm() == 0.0));

        let s1: SymbolFrame = [3.0, 0.0, -1.0].iter().map(|&x| c(x, 0.0)).collect();
        let g = stbc2_encode(&s0, &s1).unwrap();
        let neg = |f: &SymbolFrame| -> SymbolFrame { f.iter().map(|v| -v).collect() };
        assert_eq!(g.get(0, 0), &s0);
        assert_eq!(g.get(0, 1), &neg(&s1));
        assert_eq!(g.get(1, 0), &s1);
        assert_eq!(g.get(1, 1), &s0);
    }

    #[test]
    fn quasi_orthogonal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s: Vec<SymbolFrame> = (0..4).map(|_| random_frame(&mut rng, 8)).collect();
        let g = stbc4_encode(&s[0], &s[1], &s[2], &s[3]).unwrap();
        #[allow(clippy::needless_range_loop)]
        for k in 0..8 {
            let col1: Vec<Sample> = (0..4).map(|p| g.get(p, 0)[k]).collect();
            assert_eq!(col1, vec![s[0][k], s[1][k], s[2][k], s[3][k]]);
            let col2: Vec<Sample> = (0..4).map(|p| g.get(p, 1)[k]).collect();
            assert_eq!(
                col2,
                vec![-s[1][k].conj(), s[0][k].conj(), -s[3][k].conj(), s[2][k].conj()]
            );
        }
        let z = SymbolFrame::zeros(8);
        let g = stbc4_encode(&z, &z, &z, &z).unwrap();
        assert!(g
            .frames()
            .iter()
            .flatten()
            .flat_map(|f| f.iter())
            .all(|v| v.norm() == 0.0));
    }

    #[test]
    fn encode_errors() {
        let a = SymbolFrame::zeros(4);
        let b = SymbolFrame::zeros(5);
        assert!(matches!(stbc2_encode(&a, &b), Err(Error::InputSize { .. })));
        assert!(stbc_encode(&[a.clone(), a.clone(), a]).is_err());
        let tf = TimeFrame::new(vec![c(0.0, 0.0); 4], 1);
        assert!(stbc_time_frames(&[tf.clone(), tf.clone()], 3, 1.0).is_err());
        assert!(stbc_time_frames(&[tf], 2, 1.0).is_err());
    }

    #[test]
    fn decode_inverts_encode() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n_t in [2, 4] {
            let s: Vec<SymbolFrame> = (0..n_t).map(|_| random_frame(&mut rng, 16)).collect();
            assert_eq!(stbc_encode(&s).unwrap().decode(), s);
        }
    }

    #[test]
    fn time_identities_for_two_antennas() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ofdm = Ofdm::new(OversamplingConfig::new(16, 4).unwrap());
        let t0 = ofdm.synthesize(&random_frame(&mut rng, 16)).unwrap();
        let t1 = ofdm.synthesize(&random_frame(&mut rng, 16)).unwrap();
        let set = stbc_time_frames(&[t0.clone(), t1.clone()], 2, 0.25).unwrap();
        assert_eq!(set.get(0, 0), &t0);
        assert_eq!(set.get(1, 0), &t1);
        assert_eq!(set.get(0, 1), &conj_time_reverse(&t1).scaled(c(-1.0, 0.0)));
        assert_eq!(set.get(1, 1), &conj_time_reverse(&t0));
    }

    #[test]
    fn frequency_and_time_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ofdm = Ofdm::new(OversamplingConfig::new(32, 4).unwrap());
        for n_t in [2, 4] {
            for _ in 0..10 {
                let s: Vec<SymbolFrame> = (0..n_t).map(|_| random_frame(&mut rng, 32)).collect();
                let grid = stbc_encode(&s).unwrap();
                let times: Vec<TimeFrame> = s.iter().map(|f| ofdm.synthesize(f).unwrap()).collect();
                let set = stbc_time_frames(&times, n_t, 0.25).unwrap();
                for p in 0..n_t {
                    for t in 0..n_t {
                        let direct = ofdm.synthesize(grid.get(p, t)).unwrap();
                        for (a, b) in direct.iter().zip(set.get(p, t).iter()) {
                            assert!((a - b).norm() < 1e-10);
                        }
                        // exact PAPR equality with the source frame
                        let src = grid.scheme().entry(p, t).source;
                        assert_eq!(
                            papr_db(set.get(p, t), 0.25).unwrap(),
                            papr_db(&times[src], 0.25).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn pipeline_papr_is_max_of_inputs() {
        let con = Constellation::qpsk();
        let ofdm = Ofdm::new(OversamplingConfig::new(64, 4).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n_t in [2, 4] {
            let frames: Vec<SymbolFrame> = (0..n_t)
                .map(|_| {
                    let bits: Vec<u8> = (0..128).map(|_| rng.random_range(0..2u8)).collect();
                    con.map_bits(&bits).unwrap()
                })
                .collect();

            let plain = ace_stbc_pipeline(&ofdm, &frames, &AceParams::new(4.86, 0).unwrap(), &con).unwrap();
            let times: Vec<TimeFrame> = frames.iter().map(|f| ofdm.synthesize(f).unwrap()).collect();
            assert_eq!(plain.set, stbc_time_frames(&times, n_t, 0.25).unwrap());

            let out = ace_stbc_pipeline(&ofdm, &frames, &AceParams::new(4.86, 3).unwrap(), &con).unwrap();
            let expected = out
                .diagnostics
                .iter()
                .map(|d| d.final_papr_db())
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(overall_papr_db(&out.set).unwrap(), expected);
            for (r, f) in out.reduced.iter().zip(&frames) {
                assert_eq!(con.demap_nearest(r), con.demap_nearest(f));
            }
        }
    }
}
