//! Space-frequency block coding and the two SFBC-aware ACE variants.
//!
//! A frame `S` of `n_c` symbols is cut into `gamma` comb subblocks `X_i`
//! (symbol `S(i + j*gamma)` at index `j*gamma`, zero elsewhere), so that
//! `S = sum_i Z^-i X_i`. Antenna `p` transmits
//!
//! ```text
//! S_p = sum_i Z^-d(p,i) [ a(p,i) X_i + b(p,i) conj(X_i) ]
//! ```
//!
//! and, in the time domain with `x_i = synthesize(X_i)`,
//!
//! ```text
//! s_p(n) = sum_i exp(+j 2 pi n d(p,i) / N) [ a(p,i) x_i(n) + b(p,i) conj(x_i((-n) mod N)) ]
//! ```
//!
//! [`SfbcSystem::sub_ace`] reduces the PAPR of every `x_i` separately and
//! recombines. [`SfbcSystem::selective_ace`] runs one ACE step per iteration
//! on whichever antenna currently peaks highest and regenerates the frame
//! from it, so the code structure holds after every iteration.

use crate::ace::{ace_reduce_with_regions, clip_amplitude_from_db, clip_filter_project, AceDiagnostics, AceParams};
use crate::constellation::{Constellation, Region};
use crate::metrics::papr_db;
use crate::stbc::AntennaTimeSet;
use crate::transforms::{circular_shift, Ofdm, OversamplingConfig, SymbolFrame, TimeFrame};
use crate::{Error, Result, Sample};

const UNIT_TOLERANCE: f64 = 1e-12;

/// Coefficients of subblock `i` at one antenna. Exactly one of `a`, `b` is
/// nonzero and it has unit magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeTerm {
    pub a: Sample,
    pub b: Sample,
    pub shift: usize,
}

impl CodeTerm {
    pub fn direct(a: f64, shift: usize) -> Self {
        CodeTerm {
            a: Sample::new(a, 0.0),
            b: Sample::new(0.0, 0.0),
            shift,
        }
    }

    pub fn conjugate(b: f64, shift: usize) -> Self {
        CodeTerm {
            a: Sample::new(0.0, 0.0),
            b: Sample::new(b, 0.0),
            shift,
        }
    }

    #[inline]
    fn apply(&self, x: Sample) -> Sample {
        self.a * x + self.b * x.conj()
    }

    /// Inverse of [`CodeTerm::apply`] for a valid term.
    #[inline]
    fn invert(&self, y: Sample) -> Sample {
        if self.a.norm_sqr() > 0.0 {
            self.a.conj() * y
        } else {
            self.b * y.conj()
        }
    }
}

/// An SFBC code: `terms[p][i]` describes subblock `i` at antenna `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SfbcCode {
    gamma: usize,
    terms: Vec<Vec<CodeTerm>>,
}

impl SfbcCode {
    pub fn new(gamma: usize, terms: Vec<Vec<CodeTerm>>) -> Result<Self> {
        if gamma == 0 {
            return Err(Error::InvalidCode("code block length must be positive".into()));
        }
        if terms.is_empty() {
            return Err(Error::InvalidCode("code has no antennas".into()));
        }
        for (p, row) in terms.iter().enumerate() {
            if row.len() != gamma {
                return Err(Error::InvalidCode(format!(
                    "antenna {p} has {} terms, expected {gamma}",
                    row.len()
                )));
            }
            let mut seen = vec![false; gamma];
            for (i, t) in row.iter().enumerate() {
                let (na, nb) = (t.a.norm(), t.b.norm());
                let unit = |m: f64| (m - 1.0).abs() <= UNIT_TOLERANCE;
                let ok = (unit(na) && nb == 0.0) || (na == 0.0 && unit(nb));
                if !ok {
                    return Err(Error::InvalidCode(format!(
                        "antenna {p} subblock {i}: exactly one of a, b must be a unit coefficient"
                    )));
                }
                if t.shift >= gamma || seen[t.shift] {
                    return Err(Error::InvalidCode(format!(
                        "antenna {p}: shifts must be a permutation of 0..{gamma}"
                    )));
                }
                seen[t.shift] = true;
            }
        }
        Ok(SfbcCode { gamma, terms })
    }

    /// Two-antenna code on subcarrier pairs:
    /// antenna 1 sends `(S(2v), S(2v+1))`, antenna 2 sends `(S*(2v+1), -S*(2v))`.
    pub fn alamouti() -> Self {
        use CodeTerm as T;
        SfbcCode::new(
            2,
            vec![
                vec![T::direct(1.0, 0), T::direct(1.0, 1)],
                vec![T::conjugate(-1.0, 1), T::conjugate(1.0, 0)],
            ],
        )
        .expect("valid built-in code")
    }

    /// Four-antenna code on groups of four subcarriers. Rows per group:
    ///
    /// ```text
    /// ( S0,   S1,   S2,   S3  )
    /// (-S1*,  S0*, -S3*,  S2* )
    /// ( S2,   S3,   S0,   S1  )
    /// (-S3*,  S2*, -S1*,  S0* )
    /// ```
    pub fn quasi_orthogonal4() -> Self {
        use CodeTerm as T;
        SfbcCode::new(
            4,
            vec![
                vec![
                    T::direct(1.0, 0),
                    T::direct(1.0, 1),
                    T::direct(1.0, 2),
                    T::direct(1.0, 3),
                ],
                vec![
                    T::conjugate(1.0, 1),
                    T::conjugate(-1.0, 0),
                    T::conjugate(1.0, 3),
                    T::conjugate(-1.0, 2),
                ],
                vec![
                    T::direct(1.0, 2),
                    T::direct(1.0, 3),
                    T::direct(1.0, 0),
                    T::direct(1.0, 1),
                ],
                vec![
                    T::conjugate(1.0, 3),
                    T::conjugate(-1.0, 2),
                    T::conjugate(1.0, 1),
                    T::conjugate(-1.0, 0),
                ],
            ],
        )
        .expect("valid built-in code")
    }

    pub fn for_antennas(n_t: usize) -> Result<Self> {
        match n_t {
            2 => Ok(Self::alamouti()),
            4 => Ok(Self::quasi_orthogonal4()),
            _ => Err(Error::Parameter(format!("SFBC supports 2 or 4 antennas, got {n_t}"))),
        }
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn n_t(&self) -> usize {
        self.terms.len()
    }

    pub fn term(&self, antenna: usize, subblock: usize) -> CodeTerm {
        self.terms[antenna][subblock]
    }

    fn check_frame(&self, n_c: usize) -> Result<()> {
        if n_c == 0 || !n_c.is_multiple_of(self.gamma) {
            return Err(Error::Parameter(format!(
                "frame length {n_c} is not a multiple of the code block length {}",
                self.gamma
            )));
        }
        Ok(())
    }

    fn check_antenna(&self, q: usize) -> Result<()> {
        if q >= self.n_t() {
            return Err(Error::Parameter(format!(
                "antenna index {q} out of range for {} antennas",
                self.n_t()
            )));
        }
        Ok(())
    }
}

/// The `gamma` comb subblocks of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SubblockSet {
    gamma: usize,
    subblocks: Vec<SymbolFrame>,
}

impl SubblockSet {
    pub fn new(subblocks: Vec<SymbolFrame>) -> Result<Self> {
        let gamma = subblocks.len();
        let n_c = subblocks.first().map_or(0, |s| s.len());
        if gamma == 0 || n_c == 0 || !n_c.is_multiple_of(gamma) {
            return Err(Error::Parameter(format!(
                "{gamma} subblocks of length {n_c} do not form a subblock set"
            )));
        }
        for s in &subblocks {
            if s.len() != n_c {
                return Err(Error::InputSize {
                    expected: n_c,
                    actual: s.len(),
                });
            }
        }
        Ok(SubblockSet { gamma, subblocks })
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn subblocks(&self) -> &[SymbolFrame] {
        &self.subblocks
    }
}

/// `X_i` holds `S(i), S(i + gamma), ...` at indices `0, gamma, ...`.
pub fn split_subblocks(s: &[Sample], gamma: usize) -> Result<SubblockSet> {
    if gamma == 0 || s.is_empty() || !s.len().is_multiple_of(gamma) {
        return Err(Error::Parameter(format!(
            "code block length {gamma} does not divide frame length {}",
            s.len()
        )));
    }
    let subblocks = (0..gamma)
        .map(|i| {
            let mut x = SymbolFrame::zeros(s.len());
            for k in (0..s.len()).step_by(gamma) {
                x[k] = s[k + i];
            }
            x
        })
        .collect();
    Ok(SubblockSet { gamma, subblocks })
}

/// `S = sum_i Z^-i X_i`.
pub fn recompose(xs: &SubblockSet) -> Result<SymbolFrame> {
    let n_c = xs.subblocks.first().map_or(0, |x| x.len());
    let mut out = SymbolFrame::zeros(n_c);
    for (i, x) in xs.subblocks.iter().enumerate() {
        if x.len() != n_c {
            return Err(Error::InputSize {
                expected: n_c,
                actual: x.len(),
            });
        }
        for (o, v) in out.iter_mut().zip(circular_shift(x, i).iter()) {
            *o += v;
        }
    }
    Ok(out)
}

/// Frequency-domain frames of every antenna.
pub fn sfbc_encode(s: &[Sample], code: &SfbcCode) -> Result<Vec<SymbolFrame>> {
    code.check_frame(s.len())?;
    Ok((0..code.n_t()).map(|p| encode_antenna(s, code, p)).collect())
}

fn encode_antenna(s: &[Sample], code: &SfbcCode, p: usize) -> SymbolFrame {
    let g = code.gamma;
    let mut out = SymbolFrame::zeros(s.len());
    for base in (0..s.len()).step_by(g) {
        for (i, t) in code.terms[p].iter().enumerate() {
            out[base + t.shift] = t.apply(s[base + i]);
        }
    }
    out
}

/// Antenna `p`'s time frame from the time-domain subblocks `x_i`.
pub fn sfbc_time_synthesis(xs_time: &[TimeFrame], code: &SfbcCode, p: usize) -> Result<TimeFrame> {
    code.check_antenna(p)?;
    if xs_time.len() != code.gamma {
        return Err(Error::InputSize {
            expected: code.gamma,
            actual: xs_time.len(),
        });
    }
    let n = xs_time[0].n();
    let n_c = xs_time[0].n_c();
    for x in xs_time {
        if x.n() != n {
            return Err(Error::InputSize {
                expected: n,
                actual: x.n(),
            });
        }
    }
    let mut out = vec![Sample::new(0.0, 0.0); n];
    for (x, t) in xs_time.iter().zip(&code.terms[p]) {
        let step = 2.0 * std::f64::consts::PI / n as f64;
        let direct = t.a.norm_sqr() > 0.0;
        for (m, o) in out.iter_mut().enumerate() {
            let v = if direct {
                t.a * x[m]
            } else {
                t.b * x[(n - m) % n].conj()
            };
            let rot = if t.shift == 0 {
                Sample::new(1.0, 0.0)
            } else {
                Sample::from_polar(1.0, step * ((m * t.shift) % n) as f64)
            };
            *o += rot * v;
        }
    }
    Ok(TimeFrame::new(out, n_c))
}

/// Recovers the encoder input from the frame of antenna `q` alone.
pub fn reconstruct_from_antenna(sq: &[Sample], q: usize, code: &SfbcCode) -> Result<SymbolFrame> {
    code.check_antenna(q)?;
    code.check_frame(sq.len())?;
    let g = code.gamma;
    let mut out = SymbolFrame::zeros(sq.len());
    for base in (0..sq.len()).step_by(g) {
        for (i, t) in code.terms[q].iter().enumerate() {
            out[base + i] = t.invert(sq[base + t.shift]);
        }
    }
    Ok(out)
}

/// State carried through the Selective-ACE iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectiveAceState {
    /// Current extended frame (encoder input).
    pub current: SymbolFrame,
    /// Iterations run.
    pub iteration: usize,
    /// Antenna clipped at each iteration (0-based).
    pub selected_antenna_history: Vec<usize>,
    /// Overall PAPR before the first and after every iteration.
    pub papr_history_db: Vec<f64>,
}

impl SelectiveAceState {
    pub fn delta_power(&self, original: &[Sample]) -> f64 {
        self.current.distance_sqr(original)
    }
}

/// Output of [`SfbcSystem::sub_ace`].
#[derive(Debug, Clone, PartialEq)]
pub struct SubAceOutput {
    pub set: AntennaTimeSet,
    /// Recombined extended frame.
    pub symbols: SymbolFrame,
    /// One record per subblock; PAPR values there refer to the subframe power.
    pub diagnostics: Vec<AceDiagnostics>,
}

/// An SFBC transmitter with planned transforms for full frames and for the
/// decimated subframes used by Sub-ACE.
#[derive(Debug)]
pub struct SfbcSystem {
    code: SfbcCode,
    full: Ofdm,
    sub: Ofdm,
}

impl SfbcSystem {
    pub fn new(code: SfbcCode, cfg: OversamplingConfig) -> Result<Self> {
        code.check_frame(cfg.n_c())?;
        let sub_cfg = OversamplingConfig::new(cfg.n_c() / code.gamma, cfg.oversampling())?;
        Ok(SfbcSystem {
            full: Ofdm::new(cfg),
            sub: Ofdm::new(sub_cfg),
            code,
        })
    }

    pub fn code(&self) -> &SfbcCode {
        &self.code
    }

    pub fn ofdm(&self) -> &Ofdm {
        &self.full
    }

    /// Transforms executed as `(full length, subframe length)` counts.
    pub fn fft_calls(&self) -> (u64, u64) {
        (self.full.fft_calls(), self.sub.fft_calls())
    }

    pub fn reference_power(&self) -> f64 {
        self.full.config().reference_power()
    }

    fn synthesize_all(&self, s: &[Sample]) -> Result<Vec<TimeFrame>> {
        sfbc_encode(s, &self.code)?
            .iter()
            .map(|f| self.full.synthesize(f))
            .collect()
    }

    fn antenna_set(&self, times: Vec<TimeFrame>) -> Result<AntennaTimeSet> {
        AntennaTimeSet::new(times.into_iter().map(|t| vec![t]).collect(), self.reference_power())
    }

    /// Plain SFBC transmission of `s`.
    pub fn transmit(&self, s: &[Sample]) -> Result<AntennaTimeSet> {
        let times = self.synthesize_all(s)?;
        self.antenna_set(times)
    }

    /// Sub-ACE: ACE on each subframe `x_i` with the clip level referred to
    /// the subframe mean power `(n_c / gamma) / n`, then recombination.
    ///
    /// `X_i` only occupies bins that are multiples of `gamma`, so `x_i` is
    /// periodic with period `n / gamma` and its samples are those of the
    /// `(n / gamma)`-point synthesis of the `n_c / gamma` comb symbols,
    /// scaled by `1/sqrt(gamma)`. Clipping preserves the periodicity and the
    /// full-length analysis of the clipped subframe is zero off the comb, so
    /// each subblock loop runs exactly on the decimated transform with the
    /// same clip level in dB.
    pub fn sub_ace(&self, s: &[Sample], params: &AceParams, constellation: &Constellation) -> Result<SubAceOutput> {
        let g = self.code.gamma;
        self.code.check_frame(s.len())?;
        if s.len() != self.full.config().n_c() {
            return Err(Error::InputSize {
                expected: self.full.config().n_c(),
                actual: s.len(),
            });
        }
        let sub_ref = self.sub.config().reference_power();
        let tile_scale = 1.0 / (g as f64).sqrt();
        let n = self.full.config().n();

        let mut symbols = SymbolFrame::zeros(s.len());
        let mut xs_time = Vec::with_capacity(g);
        let mut diagnostics = Vec::with_capacity(g);
        for i in 0..g {
            let comb: Vec<Sample> = s.iter().skip(i).step_by(g).copied().collect();
            let regions = constellation.regions(&comb)?;
            let out = ace_reduce_with_regions(&self.sub, &comb, &regions, params, sub_ref)?;
            for (j, v) in out.symbols.iter().enumerate() {
                symbols[j * g + i] = *v;
            }
            let m = out.time.n();
            let x: Vec<Sample> = (0..n).map(|t| out.time[t % m] * tile_scale).collect();
            xs_time.push(TimeFrame::new(x, s.len()));
            diagnostics.push(out.diagnostics);
        }

        let times = (0..self.code.n_t())
            .map(|p| sfbc_time_synthesis(&xs_time, &self.code, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(SubAceOutput {
            set: self.antenna_set(times)?,
            symbols,
            diagnostics,
        })
    }

    /// Selective-ACE: per iteration, clip / filter / project the antenna with
    /// the largest PAPR (lowest index on ties) against the regions of that
    /// antenna's original symbols, rebuild the frame from it, and re-encode.
    ///
    /// Antenna symbols are signed and conjugated copies of frame symbols, and
    /// the regions commute with both operations, so projecting in the
    /// antenna domain keeps the rebuilt frame inside the original regions.
    pub fn selective_ace(
        &self,
        s: &[Sample],
        params: &AceParams,
        constellation: &Constellation,
    ) -> Result<(AntennaTimeSet, SelectiveAceState)> {
        let reference = self.reference_power();
        let a = clip_amplitude_from_db(params.clip_db, reference)?;
        let anchors: Vec<Vec<Region>> = sfbc_encode(s, &self.code)?
            .iter()
            .map(|f| constellation.regions(f))
            .collect::<Result<_>>()?;

        let mut state = SelectiveAceState {
            current: SymbolFrame::new(s.to_vec()),
            iteration: 0,
            selected_antenna_history: Vec::with_capacity(params.iterations),
            papr_history_db: Vec::with_capacity(params.iterations + 1),
        };
        let mut times = self.synthesize_all(s)?;
        let (mut q, mut papr) = self.peak_antenna(&times)?;
        state.papr_history_db.push(papr);

        for _ in 0..params.iterations {
            if params.target_papr_db.is_some_and(|t| papr <= t) {
                break;
            }
            let projected = clip_filter_project(&self.full, &mut times[q], a, &anchors[q])?;
            state.current = reconstruct_from_antenna(&projected, q, &self.code)?;
            state.selected_antenna_history.push(q);
            state.iteration += 1;

            times = self.synthesize_all(&state.current)?;
            (q, papr) = self.peak_antenna(&times)?;
            state.papr_history_db.push(papr);
        }
        Ok((self.antenna_set(times)?, state))
    }

    fn peak_antenna(&self, times: &[TimeFrame]) -> Result<(usize, f64)> {
        let mut best = (0, f64::NEG_INFINITY);
        for (p, t) in times.iter().enumerate() {
            let v = papr_db(t, self.reference_power())?;
            if v > best.1 {
                best = (p, v);
            }
        }
        Ok(best)
    }
}

/// Sub-ACE with a one-off [`SfbcSystem`].
pub fn sub_ace(
    s: &[Sample],
    code: &SfbcCode,
    cfg: OversamplingConfig,
    params: &AceParams,
    constellation: &Constellation,
) -> Result<SubAceOutput> {
    SfbcSystem::new(code.clone(), cfg)?.sub_ace(s, params, constellation)
}

/// Selective-ACE with a one-off [`SfbcSystem`].
pub fn selective_ace(
    s: &[Sample],
    code: &SfbcCode,
    cfg: OversamplingConfig,
    params: &AceParams,
    constellation: &Constellation,
) -> Result<(AntennaTimeSet, SelectiveAceState)> {
    SfbcSystem::new(code.clone(), cfg)?.selective_ace(s, params, constellation)
}
