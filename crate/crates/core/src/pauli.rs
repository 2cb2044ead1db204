//! Phase-exact algebra of Pauli strings with a canonical phase-free representation.
//!
//! A string is stored as a symplectic bit pair: site i carries an X factor iff
//! x-bit i is set and a Z factor iff z-bit i is set (both set means Y, neither
//! means identity). Equality and hashing see only the masks, never a phase, so
//! strings can serve directly as set members during closure generation. Phases
//! reappear in [`ScaledPauli`], produced by [`PauliString::multiply`] and
//! [`PauliString::commutator`].
//!
//! Phase convention: the canonical single-site operator for bits (x, z) is
//! W(x,z) = i^{xz} X^x Z^z, i.e. W(1,1) = iXZ = Y. Products then compose with
//! a phase i^k that this module tracks exactly (mod 4).

use std::cmp::Ordering;
use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// One tensor factor of a Pauli string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SiteOp {
    I,
    X,
    Y,
    Z,
}

impl SiteOp {
    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => SiteOp::I,
            (true, false) => SiteOp::X,
            (true, true) => SiteOp::Y,
            (false, true) => SiteOp::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            SiteOp::I => (false, false),
            SiteOp::X => (true, false),
            SiteOp::Y => (true, true),
            SiteOp::Z => (false, true),
        }
    }

    fn letter(self) -> char {
        match self {
            SiteOp::I => 'I',
            SiteOp::X => 'X',
            SiteOp::Y => 'Y',
            SiteOp::Z => 'Z',
        }
    }
}

/// Bit words backing one mask; two inline words cover L <= 128 without
/// allocating (one word per mask for L <= 64).
type Words = SmallVec<[u64; 2]>;

/// Canonical phase-free Pauli string on `num_sites` sites.
///
/// Two strings are equal iff their site count and both masks are equal; no
/// phase is stored. Bits beyond `num_sites` are always zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    num_sites: u32,
    /// x words followed by z words, `words_per_mask` each.
    words: Words,
}

fn words_per_mask(num_sites: u32) -> usize {
    (num_sites as usize).div_ceil(64)
}

impl PauliString {
    /// The identity string I^L.
    pub fn identity(num_sites: u32) -> Self {
        assert!(num_sites > 0, "a Pauli string needs at least one site");
        let w = words_per_mask(num_sites);
        PauliString {
            num_sites,
            words: SmallVec::from_elem(0, 2 * w),
        }
    }

    /// Single-site operator `op` at 1-based `site`, identity elsewhere.
    pub fn single(num_sites: u32, site: usize, op: SiteOp) -> Result<Self> {
        let mut p = PauliString::identity(num_sites);
        p.set_site(site, op)?;
        Ok(p)
    }

    /// Build from a sequence of (1-based site, op) pairs; unlisted sites are identity.
    pub fn from_ops(num_sites: u32, ops: &[(usize, SiteOp)]) -> Result<Self> {
        let mut p = PauliString::identity(num_sites);
        for &(site, op) in ops {
            if site == 0 || site > num_sites as usize {
                return Err(Error::SiteOutOfRange {
                    site,
                    num_sites,
                });
            }
            if p.site_op(site) != SiteOp::I {
                return Err(Error::DuplicateSite(site));
            }
            p.set_site(site, op)?;
        }
        Ok(p)
    }

    pub fn num_sites(&self) -> u32 {
        self.num_sites
    }

    fn wpm(&self) -> usize {
        words_per_mask(self.num_sites)
    }

    /// x-mask words, least significant site first.
    pub fn x_words(&self) -> &[u64] {
        &self.words[..self.wpm()]
    }

    /// z-mask words, least significant site first.
    pub fn z_words(&self) -> &[u64] {
        &self.words[self.wpm()..]
    }

    /// x and z masks as single words; only valid for L <= 64.
    pub(crate) fn masks64(&self) -> (u64, u64) {
        debug_assert!(self.num_sites <= 64);
        (self.words[0], self.words[1])
    }

    pub(crate) fn from_masks64(num_sites: u32, x: u64, z: u64) -> Self {
        debug_assert!(num_sites <= 64);
        let mut words = Words::new();
        words.push(x);
        words.push(z);
        PauliString { num_sites, words }
    }

    /// Phase-free product (mask XOR). Callers must have checked site counts.
    pub(crate) fn xor_unchecked(&self, other: &Self) -> Self {
        debug_assert_eq!(self.num_sites, other.num_sites);
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        PauliString {
            num_sites: self.num_sites,
            words,
        }
    }

    /// Commutation test without the size check, for closure inner loops.
    pub(crate) fn anticommutes_unchecked(&self, other: &Self) -> bool {
        debug_assert_eq!(self.num_sites, other.num_sites);
        !symplectic_even(
            self.x_words(),
            self.z_words(),
            other.x_words(),
            other.z_words(),
        )
    }

    fn bit(words: &[u64], idx: usize) -> bool {
        words[idx / 64] >> (idx % 64) & 1 == 1
    }

    /// The tensor factor at 1-based `site`.
    pub fn site_op(&self, site: usize) -> SiteOp {
        assert!(site >= 1 && site <= self.num_sites as usize);
        let i = site - 1;
        SiteOp::from_bits(Self::bit(self.x_words(), i), Self::bit(self.z_words(), i))
    }

    /// Overwrite the factor at 1-based `site`.
    pub fn set_site(&mut self, site: usize, op: SiteOp) -> Result<()> {
        if site == 0 || site > self.num_sites as usize {
            return Err(Error::SiteOutOfRange {
                site,
                num_sites: self.num_sites,
            });
        }
        let i = site - 1;
        let (w, b) = (i / 64, i % 64);
        let (x, z) = op.bits();
        let wpm = self.wpm();
        set_bit(&mut self.words[w], b, x);
        set_bit(&mut self.words[wpm + w], b, z);
        Ok(())
    }

    /// True iff the string is the identity.
    pub fn is_identity(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Number of non-identity tensor factors.
    pub fn weight(&self) -> u32 {
        let wpm = self.wpm();
        (0..wpm)
            .map(|k| (self.words[k] | self.words[wpm + k]).count_ones())
            .sum()
    }

    fn check_sites(&self, other: &Self) -> Result<()> {
        if self.num_sites != other.num_sites {
            return Err(Error::size_mismatch(self.num_sites, other.num_sites));
        }
        Ok(())
    }

    /// True iff the strings commute (symplectic form is even).
    pub fn commutes_with(&self, other: &Self) -> Result<bool> {
        self.check_sites(other)?;
        Ok(symplectic_even(
            self.x_words(),
            self.z_words(),
            other.x_words(),
            other.z_words(),
        ))
    }

    /// Exact product `self * other = i^k * r` with unit magnitude.
    pub fn multiply(&self, other: &Self) -> Result<ScaledPauli> {
        self.check_sites(other)?;
        let phase = product_phase(
            self.x_words(),
            self.z_words(),
            other.x_words(),
            other.z_words(),
        );
        let mut words = Words::with_capacity(self.words.len());
        for (a, b) in self.words.iter().zip(other.words.iter()) {
            words.push(a ^ b);
        }
        Ok(ScaledPauli {
            phase_power: phase,
            magnitude: 1.0,
            string: PauliString {
                num_sites: self.num_sites,
                words,
            },
        })
    }

    /// Exact commutator `[self, other]`: zero when the strings commute,
    /// otherwise `2 * i^k * (self * other)` with magnitude exactly 2.
    pub fn commutator(&self, other: &Self) -> Result<ScaledPauli> {
        if self.commutes_with(other)? {
            return Ok(ScaledPauli::zero(self.num_sites));
        }
        let mut prod = self.multiply(other)?;
        prod.magnitude = 2.0;
        Ok(prod)
    }

    /// Render in token form, e.g. `"X1 Z3"`; the identity renders as `"I"`.
    pub fn format(&self) -> String {
        let mut out = String::new();
        for site in 1..=self.num_sites as usize {
            let op = self.site_op(site);
            if op == SiteOp::I {
                continue;
            }
            if !out.is_empty() {
                out.push(' ');
            }
            out.push(op.letter());
            out.push_str(&site.to_string());
        }
        if out.is_empty() {
            out.push('I');
        }
        out
    }

    /// Render as a length-L word over {I, X, Y, Z}, e.g. `"ZZXI"`.
    pub fn format_compact(&self) -> String {
        (1..=self.num_sites as usize)
            .map(|s| self.site_op(s).letter())
            .collect()
    }

    /// Parse either grammar: whitespace-separated tokens `[XYZ]<index>` with
    /// 1-based indices (empty list or the bare word `I` is the identity), or a
    /// compact length-L word over {I, X, Y, Z}.
    pub fn parse(text: &str, num_sites: u32) -> Result<Self> {
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "I" {
            return Ok(PauliString::identity(num_sites));
        }
        let compact = trimmed.chars().all(|c| matches!(c, 'I' | 'X' | 'Y' | 'Z'))
            && !trimmed.contains(char::is_whitespace);
        if compact && (trimmed.len() > 1 || num_sites == 1) {
            return Self::parse_compact(trimmed, num_sites);
        }
        let mut ops = Vec::new();
        for tok in trimmed.split_whitespace() {
            let mut chars = tok.chars();
            let letter = chars.next().expect("split_whitespace yields nonempty");
            let op = match letter {
                'X' => SiteOp::X,
                'Y' => SiteOp::Y,
                'Z' => SiteOp::Z,
                other => {
                    return Err(Error::Parse(format!(
                        "bad operator letter '{other}' in token '{tok}'"
                    )))
                }
            };
            let idx: usize = chars
                .as_str()
                .parse()
                .map_err(|_| Error::Parse(format!("bad site index in token '{tok}'")))?;
            if idx == 0 || idx > num_sites as usize {
                return Err(Error::SiteOutOfRange {
                    site: idx,
                    num_sites,
                });
            }
            ops.push((idx, op));
        }
        PauliString::from_ops(num_sites, &ops)
    }

    fn parse_compact(word: &str, num_sites: u32) -> Result<Self> {
        if word.len() != num_sites as usize {
            return Err(Error::Parse(format!(
                "compact word '{word}' has length {} but L={num_sites}",
                word.len()
            )));
        }
        let mut p = PauliString::identity(num_sites);
        for (i, c) in word.chars().enumerate() {
            let op = match c {
                'I' => SiteOp::I,
                'X' => SiteOp::X,
                'Y' => SiteOp::Y,
                'Z' => SiteOp::Z,
                other => return Err(Error::Parse(format!("bad letter '{other}'"))),
            };
            p.set_site(i + 1, op)?;
        }
        Ok(p)
    }
}

fn set_bit(word: &mut u64, bit: usize, value: bool) {
    if value {
        *word |= 1 << bit;
    } else {
        *word &= !(1 << bit);
    }
}

/// Parity test of the symplectic form <x1|z2> + <z1|x2>.
fn symplectic_even(x1: &[u64], z1: &[u64], x2: &[u64], z2: &[u64]) -> bool {
    let mut acc = 0u32;
    for k in 0..x1.len() {
        acc ^= (x1[k] & z2[k]).count_ones() ^ (z1[k] & x2[k]).count_ones();
    }
    acc & 1 == 0
}

/// Exponent k of the product phase i^k for canonical operators
/// W(x,z) = i^{xz} X^x Z^z multiplied sitewise:
/// k = n(x1,z1) + n(x2,z2) - n(x1^x2, z1^z2) + 2 <z1|x2>  (mod 4)
/// where n counts Y factors (popcount of x & z). The first three terms are
/// the canonicalization phases, the last is the ZX reorder sign.
fn product_phase(x1: &[u64], z1: &[u64], x2: &[u64], z2: &[u64]) -> u8 {
    let mut k = 0u32;
    for w in 0..x1.len() {
        let a = (x1[w] & z1[w]).count_ones();
        let b = (x2[w] & z2[w]).count_ones();
        let c = ((x1[w] ^ x2[w]) & (z1[w] ^ z2[w])).count_ones();
        let d = (z1[w] & x2[w]).count_ones();
        k = k.wrapping_add(a).wrapping_add(b).wrapping_sub(c).wrapping_add(2 * d);
    }
    (k & 3) as u8
}

impl Ord for PauliString {
    /// Total order used for canonical member sorting: by site count, then by
    /// the numeric value of the x-mask, then of the z-mask.
    fn cmp(&self, other: &Self) -> Ordering {
        self.num_sites
            .cmp(&other.num_sites)
            .then_with(|| cmp_mask(self.x_words(), other.x_words()))
            .then_with(|| cmp_mask(self.z_words(), other.z_words()))
    }
}

fn cmp_mask(a: &[u64], b: &[u64]) -> Ordering {
    for (wa, wb) in a.iter().rev().zip(b.iter().rev()) {
        match wa.cmp(wb) {
            Ordering::Equal => continue,
            ord => return ord,
        }
    }
    Ordering::Equal
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format())
    }
}

/// A Pauli string scaled by `magnitude * i^phase_power`.
///
/// Magnitude zero encodes the zero operator; consumers must ignore the string
/// field in that case.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPauli {
    pub phase_power: u8,
    pub magnitude: f64,
    pub string: PauliString,
}

impl ScaledPauli {
    pub fn zero(num_sites: u32) -> Self {
        ScaledPauli {
            phase_power: 0,
            magnitude: 0.0,
            string: PauliString::identity(num_sites),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.magnitude == 0.0
    }

    /// The scalar as a complex number magnitude * i^phase_power.
    pub fn coefficient(&self) -> num_complex::Complex64 {
        let m = self.magnitude;
        match self.phase_power & 3 {
            0 => num_complex::Complex64::new(m, 0.0),
            1 => num_complex::Complex64::new(0.0, m),
            2 => num_complex::Complex64::new(-m, 0.0),
            _ => num_complex::Complex64::new(0.0, -m),
        }
    }
}
