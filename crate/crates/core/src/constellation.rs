//! Constellations, Gray bit mapping and the ACE extension regions.
//!
//! A point may only move into the region where it cannot get closer to any
//! other point of the constellation. For the square constellations used
//! here the region is a product of per-axis half lines: an outer component
//! (magnitude equal to the largest axis level) may grow outward, any other
//! component is frozen at its nominal value.

use std::fmt;

use crate::transforms::SymbolFrame;
use crate::{Error, Result, Sample};

/// Distance under which a sample is considered to be a nominal point.
pub const NOMINAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Qpsk,
    Qam16,
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modulation::Qpsk => f.write_str("qpsk"),
            Modulation::Qam16 => f.write_str("qam16"),
        }
    }
}

/// Which components of a point may be extended outward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionClass {
    /// Both components extendable.
    Corner,
    /// Only the real component is extendable (left/right edge).
    EdgeHorizontal,
    /// Only the imaginary component is extendable (top/bottom edge).
    EdgeVertical,
    /// Nothing may move.
    Interior,
}

impl RegionClass {
    fn from_flags(re: bool, im: bool) -> Self {
        match (re, im) {
            (true, true) => RegionClass::Corner,
            (true, false) => RegionClass::EdgeHorizontal,
            (false, true) => RegionClass::EdgeVertical,
            (false, false) => RegionClass::Interior,
        }
    }
}

/// Allowable region of one anchored symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    nominal: Sample,
    re_extendable: bool,
    im_extendable: bool,
}

impl Region {
    /// A region that collapses everything onto `value`.
    pub fn frozen(value: Sample) -> Self {
        Region {
            nominal: value,
            re_extendable: false,
            im_extendable: false,
        }
    }

    pub fn nominal(&self) -> Sample {
        self.nominal
    }

    pub fn class(&self) -> RegionClass {
        RegionClass::from_flags(self.re_extendable, self.im_extendable)
    }

    /// Orthogonal projection of `moved` onto the region.
    #[inline]
    pub fn project(&self, moved: Sample) -> Sample {
        Sample::new(
            project_axis(moved.re, self.nominal.re, self.re_extendable),
            project_axis(moved.im, self.nominal.im, self.im_extendable),
        )
    }

    /// Whether `p` lies in the region, up to `tol` per component.
    pub fn contains(&self, p: Sample, tol: f64) -> bool {
        axis_contains(p.re, self.nominal.re, self.re_extendable, tol)
            && axis_contains(p.im, self.nominal.im, self.im_extendable, tol)
    }

    /// Region of the conjugated anchor.
    pub fn conj(&self) -> Self {
        Region {
            nominal: self.nominal.conj(),
            ..*self
        }
    }

    /// Region of the negated anchor.
    pub fn neg(&self) -> Self {
        Region {
            nominal: -self.nominal,
            ..*self
        }
    }
}

#[inline]
fn project_axis(moved: f64, nominal: f64, extendable: bool) -> f64 {
    if !extendable {
        nominal
    } else if nominal > 0.0 {
        moved.max(nominal)
    } else {
        moved.min(nominal)
    }
}

fn axis_contains(value: f64, nominal: f64, extendable: bool, tol: f64) -> bool {
    if !extendable {
        (value - nominal).abs() <= tol
    } else if nominal > 0.0 {
        value >= nominal - tol
    } else {
        value <= nominal + tol
    }
}

/// A unit average power constellation whose point index equals its bit label
/// (most significant bit first).
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    kind: Modulation,
    points: Vec<Sample>,
    bits_per_symbol: usize,
    classes: Vec<RegionClass>,
    outer_level: f64,
}

impl Constellation {
    pub fn new(kind: Modulation) -> Self {
        match kind {
            Modulation::Qpsk => Self::qpsk(),
            Modulation::Qam16 => Self::qam16(),
        }
    }

    /// Gray QPSK: 00 -> (+,+), 01 -> (-,+), 11 -> (-,-), 10 -> (+,-).
    pub fn qpsk() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let points = (0..4u32)
            .map(|label| {
                let re = if label & 0b01 == 0 { a } else { -a };
                let im = if label & 0b10 == 0 { a } else { -a };
                Sample::new(re, im)
            })
            .collect();
        Self::from_points(Modulation::Qpsk, points, 2, a)
    }

    /// Gray 16-QAM on {±1, ±3}²/√10. The first bit pair selects the in-phase
    /// level and the second the quadrature level, each with the Gray axis map
    /// 00 -> +3, 01 -> +1, 11 -> -1, 10 -> -3.
    pub fn qam16() -> Self {
        let scale = 1.0 / 10f64.sqrt();
        let level = |pair: u32| -> f64 {
            match pair {
                0b00 => 3.0,
                0b01 => 1.0,
                0b11 => -1.0,
                _ => -3.0,
            }
        };
        let points = (0..16u32)
            .map(|label| Sample::new(level(label >> 2) * scale, level(label & 0b11) * scale))
            .collect();
        Self::from_points(Modulation::Qam16, points, 4, 3.0 * scale)
    }

    fn from_points(kind: Modulation, points: Vec<Sample>, bits_per_symbol: usize, outer_level: f64) -> Self {
        let classes = points
            .iter()
            .map(|p| RegionClass::from_flags(is_outer(p.re, outer_level), is_outer(p.im, outer_level)))
            .collect();
        Constellation {
            kind,
            points,
            bits_per_symbol,
            classes,
            outer_level,
        }
    }

    pub fn kind(&self) -> Modulation {
        self.kind
    }

    pub fn points(&self) -> &[Sample] {
        &self.points
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn region_classes(&self) -> &[RegionClass] {
        &self.classes
    }

    /// Index of the nominal point within [`NOMINAL_TOLERANCE`] of `p`.
    pub fn nominal_index(&self, p: Sample) -> Option<usize> {
        self.points.iter().position(|q| (q - p).norm() <= NOMINAL_TOLERANCE)
    }

    /// Region anchored at a nominal point. The anchor may be any point of the
    /// constellation, which for the square constellations includes every
    /// negation and conjugate of a point.
    pub fn region_of(&self, original: Sample) -> Result<Region> {
        let idx = self.nominal_index(original).ok_or_else(|| {
            Error::Domain(format!(
                "{} + {}j is not a nominal {} point",
                original.re, original.im, self.kind
            ))
        })?;
        let nominal = self.points[idx];
        Ok(Region {
            nominal,
            re_extendable: is_outer(nominal.re, self.outer_level),
            im_extendable: is_outer(nominal.im, self.outer_level),
        })
    }

    /// Regions for every symbol of a frame of nominal points.
    pub fn regions(&self, frame: &[Sample]) -> Result<Vec<Region>> {
        frame.iter().map(|&s| self.region_of(s)).collect()
    }

    /// Orthogonal projection of `moved` onto the region of `original`.
    pub fn project_to_region(&self, moved: Sample, original: Sample) -> Result<Sample> {
        Ok(self.region_of(original)?.project(moved))
    }

    /// Maps `bits` (one bit per byte, 0 or 1) onto a frame of nominal points.
    pub fn map_bits(&self, bits: &[u8]) -> Result<SymbolFrame> {
        let k = self.bits_per_symbol;
        if bits.is_empty() || !bits.len().is_multiple_of(k) {
            return Err(Error::InputSize {
                expected: (bits.len() / k).max(1) * k,
                actual: bits.len(),
            });
        }
        let symbols = bits
            .chunks_exact(k)
            .map(|chunk| {
                let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b & 1));
                self.points[label]
            })
            .collect();
        Ok(SymbolFrame::new(symbols))
    }

    /// Like [`Constellation::map_bits`] but enforces the frame length.
    pub fn map_bits_to(&self, bits: &[u8], n_c: usize) -> Result<SymbolFrame> {
        let expected = n_c * self.bits_per_symbol;
        if bits.len() != expected {
            return Err(Error::InputSize {
                expected,
                actual: bits.len(),
            });
        }
        self.map_bits(bits)
    }

    /// Index of the nearest nominal point; ties go to the lowest index.
    pub fn nearest_index(&self, p: Sample) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, q) in self.points.iter().enumerate() {
            let d = (q - p).norm_sqr();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Hard decision demapping of every symbol to the bits of its nearest
    /// nominal point.
    pub fn demap_nearest(&self, frame: &[Sample]) -> Vec<u8> {
        let k = self.bits_per_symbol;
        let mut bits = Vec::with_capacity(frame.len() * k);
        for &s in frame {
            let label = self.nearest_index(s);
            bits.extend((0..k).rev().map(|shift| ((label >> shift) & 1) as u8));
        }
        bits
    }
}

fn is_outer(component: f64, outer_level: f64) -> bool {
    (component.abs() - outer_level).abs() <= NOMINAL_TOLERANCE
}
