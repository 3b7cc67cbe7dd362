//! The Boolean cube `{-1,+1}^d` and functions on it.
//!
//! A point is a `d`-bit word. Bit `i` holds coordinate `i` (zero-based) with the
//! canonical encoding `0 -> -1`, `1 -> +1`. Textual bitstrings list coordinate 0
//! first.

use std::fmt;

use crate::error::{check_dim, Error, Result};

/// Largest dimension supported by exhaustive (explicit-table) operations.
pub const MAX_EXPLICIT_DIM: usize = 24;
/// Largest dimension a [`BitPoint`] can carry.
pub const MAX_DIM: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitPoint {
    bits: u64,
    dim: u8,
}

impl BitPoint {
    pub fn new(bits: u64, dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::OutOfRange(format!("dimension {dim} not in 1..=64")));
        }
        if dim < 64 && bits >> dim != 0 {
            return Err(Error::OutOfRange(format!(
                "bits {bits:#x} exceed dimension {dim}"
            )));
        }
        Ok(Self {
            bits,
            dim: dim as u8,
        })
    }

    /// Caller guarantees `bits < 2^dim`.
    #[inline]
    pub(crate) fn from_raw(bits: u64, dim: usize) -> Self {
        debug_assert!(dim == 64 || bits >> dim == 0);
        Self {
            bits,
            dim: dim as u8,
        }
    }

    /// Builds a point from signed coordinates (`-1` or `+1`).
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let mut bits = 0u64;
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => bits |= 1 << i,
                -1 => {}
                other => return Err(Error::OutOfRange(format!("coordinate value {other}"))),
            }
        }
        Self::new(bits, signs.len())
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn dim(self) -> usize {
        self.dim as usize
    }

    /// Whether coordinate `i` is `+1`.
    #[inline]
    pub fn get(self, i: usize) -> bool {
        (self.bits >> i) & 1 == 1
    }

    /// Coordinate `i` as `-1` or `+1`.
    #[inline]
    pub fn sign(self, i: usize) -> i8 {
        if self.get(i) {
            1
        } else {
            -1
        }
    }

    #[inline]
    pub fn with(self, i: usize, positive: bool) -> Self {
        let bits = if positive {
            self.bits | (1 << i)
        } else {
            self.bits & !(1 << i)
        };
        Self {
            bits,
            dim: self.dim,
        }
    }

    #[inline]
    pub fn flip(self, i: usize) -> Self {
        Self {
            bits: self.bits ^ (1 << i),
            dim: self.dim,
        }
    }

    pub fn to_bitstring(self) -> String {
        (0..self.dim())
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }

    pub fn from_bitstring(s: &str) -> Result<Self> {
        let mut bits = 0u64;
        let mut dim = 0usize;
        for (i, c) in s.chars().enumerate() {
            match c {
                '1' => bits |= 1u64.checked_shl(i as u32).unwrap_or(0),
                '0' => {}
                _ => return Err(Error::OutOfRange(format!("bad bitstring {s:?}"))),
            }
            dim = i + 1;
        }
        Self::new(bits, dim)
    }
}

impl fmt::Debug for BitPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitPoint({})", self.to_bitstring())
    }
}

impl fmt::Display for BitPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

/// Iterates every point of `{-1,+1}^dim` in increasing word order.
pub fn all_points(dim: usize) -> impl Iterator<Item = BitPoint> {
    assert!(
        dim <= MAX_EXPLICIT_DIM,
        "exhaustive enumeration capped at 24"
    );
    (0..1u64 << dim).map(move |b| BitPoint::from_raw(b, dim))
}

/// A binary label. The internal space is `{0,1}`; `signed()` gives `2y - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Label(pub bool);

impl Label {
    pub const ZERO: Label = Label(false);
    pub const ONE: Label = Label(true);

    #[inline]
    pub fn value(self) -> u8 {
        self.0 as u8
    }

    #[inline]
    pub fn signed(self) -> i8 {
        if self.0 {
            1
        } else {
            -1
        }
    }

    pub fn from_signed(s: i8) -> Result<Self> {
        match s {
            1 => Ok(Label(true)),
            -1 => Ok(Label(false)),
            other => Err(Error::OutOfRange(format!("signed label {other}"))),
        }
    }

    pub fn from_value(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Label(false)),
            1 => Ok(Label(true)),
            other => Err(Error::OutOfRange(format!("label {other}"))),
        }
    }

    #[inline]
    pub fn flipped(self) -> Self {
        Label(!self.0)
    }
}

/// A predicate `{-1,+1}^d -> {0,1}`.
pub trait BoolFn {
    fn dim(&self) -> usize;
    fn eval(&self, x: BitPoint) -> bool;

    /// Signed view `{-1,+1}^d -> {-1,+1}`.
    fn eval_signed(&self, x: BitPoint) -> i8 {
        if self.eval(x) {
            1
        } else {
            -1
        }
    }

    fn truth_table(&self) -> TruthTable {
        TruthTable::from_fn(self.dim(), |x| self.eval(x))
    }
}

impl<F: BoolFn + ?Sized> BoolFn for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: BitPoint) -> bool {
        (**self).eval(x)
    }
}

/// Materialized predicate on at most [`MAX_EXPLICIT_DIM`] coordinates.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    dim: usize,
    words: Vec<u64>,
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TruthTable(dim={}, ones={})",
            self.dim,
            self.count_ones()
        )
    }
}

impl TruthTable {
    pub fn constant(dim: usize, value: bool) -> Self {
        assert!(dim <= MAX_EXPLICIT_DIM);
        let n = 1usize << dim;
        let mut words = vec![if value { u64::MAX } else { 0 }; n.div_ceil(64)];
        if value && !n.is_multiple_of(64) {
            *words.last_mut().unwrap() = (1u64 << (n % 64)) - 1;
        }
        Self { dim, words }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(BitPoint) -> bool) -> Self {
        let mut t = Self::constant(dim, false);
        for x in all_points(dim) {
            if f(x) {
                t.set(x.bits(), true);
            }
        }
        t
    }

    /// Builds a table from the `2^dim` values listed in word order.
    pub fn from_values(dim: usize, values: &[bool]) -> Result<Self> {
        if dim > MAX_EXPLICIT_DIM || values.len() != 1 << dim {
            return Err(Error::OutOfRange(format!(
                "{} values for dimension {dim}",
                values.len()
            )));
        }
        Ok(Self::from_fn(dim, |x| values[x.bits() as usize]))
    }

    #[inline]
    pub fn get(&self, bits: u64) -> bool {
        (self.words[(bits >> 6) as usize] >> (bits & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, bits: u64, value: bool) {
        let w = &mut self.words[(bits >> 6) as usize];
        if value {
            *w |= 1 << (bits & 63);
        } else {
            *w &= !(1 << (bits & 63));
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_constant(&self) -> bool {
        let ones = self.count_ones();
        ones == 0 || ones == 1u64 << self.dim
    }

    /// Checks monotonicity along single-bit increases, which covers the
    /// coordinatewise partial order by transitivity.
    pub fn is_monotone(&self) -> bool {
        for b in 0..1u64 << self.dim {
            if !self.get(b) {
                continue;
            }
            // f(b) = 1 must imply f(b + e_i) = 1 for every clear bit i
            for i in 0..self.dim {
                if b >> i & 1 == 0 && !self.get(b | 1 << i) {
                    return false;
                }
            }
        }
        true
    }

    /// Coordinates the function actually depends on.
    pub fn relevant_coordinates(&self) -> Vec<usize> {
        (0..self.dim)
            .filter(|&i| {
                (0..1u64 << self.dim)
                    .any(|b| b >> i & 1 == 0 && self.get(b) != self.get(b | 1 << i))
            })
            .collect()
    }
}

impl BoolFn for TruthTable {
    fn dim(&self) -> usize {
        self.dim
    }
    #[inline]
    fn eval(&self, x: BitPoint) -> bool {
        self.get(x.bits())
    }
    fn truth_table(&self) -> TruthTable {
        self.clone()
    }
}

/// Partial assignment in `{-1, +1, *}^d`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Restriction {
    dim: usize,
    mask: u64,
    values: u64,
}

impl fmt::Debug for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Restriction({self})")
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            let c = match self.value(i) {
                None => '*',
                Some(true) => '+',
                Some(false) => '-',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl Restriction {
    pub fn free(dim: usize) -> Self {
        Self {
            dim,
            mask: 0,
            values: 0,
        }
    }

    pub fn from_values(values: &[Option<bool>]) -> Self {
        let mut r = Self::free(values.len());
        for (i, v) in values.iter().enumerate() {
            if let Some(b) = *v {
                r = r.fix(i, b);
            }
        }
        r
    }

    /// Parses `+`, `-`, `*` per coordinate.
    pub fn parse(s: &str) -> Result<Self> {
        let vals = s
            .chars()
            .map(|c| match c {
                '+' => Ok(Some(true)),
                '-' => Ok(Some(false)),
                '*' => Ok(None),
                _ => Err(Error::OutOfRange(format!("bad restriction {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_values(&vals))
    }

    pub fn fix(mut self, i: usize, positive: bool) -> Self {
        self.mask |= 1 << i;
        if positive {
            self.values |= 1 << i;
        } else {
            self.values &= !(1 << i);
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, i: usize) -> Option<bool> {
        (self.mask >> i & 1 == 1).then_some(self.values >> i & 1 == 1)
    }

    /// Number of specified coordinates `|rho|`.
    pub fn specified_count(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn values(&self) -> u64 {
        self.values
    }

    #[inline]
    pub fn is_consistent(&self, x: BitPoint) -> bool {
        x.bits() & self.mask == self.values
    }

    /// Free coordinates in increasing order.
    pub fn free_coordinates(&self) -> Vec<usize> {
        (0..self.dim).filter(|&i| self.mask >> i & 1 == 0).collect()
    }

    /// Maps a `(d - |rho|)`-bit input to the consistent point that uses the
    /// input for the free coordinates in order.
    pub fn project(&self, input: BitPoint) -> Result<BitPoint> {
        let free = self.free_coordinates();
        check_dim(free.len(), input.dim())?;
        let mut bits = self.values;
        for (j, &i) in free.iter().enumerate() {
            if input.get(j) {
                bits |= 1 << i;
            }
        }
        Ok(BitPoint::from_raw(bits, self.dim))
    }

    /// Every consistent point, `2^(d - |rho|)` of them.
    pub fn consistent_points(&self) -> Vec<BitPoint> {
        let free = self.free_coordinates();
        (0..1u64 << free.len())
            .map(|j| {
                let mut bits = self.values;
                for (k, &i) in free.iter().enumerate() {
                    if j >> k & 1 == 1 {
                        bits |= 1 << i;
                    }
                }
                BitPoint::from_raw(bits, self.dim)
            })
            .collect()
    }
}

/// The restricted function `f_rho(x) = f(proj_rho(x))` on `d - |rho|` coordinates.
pub fn apply_restriction<F: BoolFn + ?Sized>(f: &F, rho: &Restriction) -> Result<TruthTable> {
    check_dim(f.dim(), rho.dim())?;
    let free = rho.dim() - rho.specified_count();
    if free == 0 {
        // A fully specified restriction leaves a function of zero inputs; keep
        // one coordinate so the table stays well-formed.
        let v = f.eval(BitPoint::from_raw(rho.values(), rho.dim()));
        return Ok(TruthTable::constant(0, v));
    }
    let mut out = TruthTable::constant(free, false);
    for (j, x) in rho.consistent_points().into_iter().enumerate() {
        if f.eval(x) {
            out.set(j as u64, true);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn maj3() -> TruthTable {
        TruthTable::from_fn(3, |x| (0..3).map(|i| x.sign(i) as i32).sum::<i32>() > 0)
    }

    #[test]
    fn point_roundtrips_bitstring_and_signs() {
        let p = BitPoint::from_signs(&[1, -1, 1, 1]).unwrap();
        assert_eq!(p.bits(), 0b1101);
        assert_eq!(p.to_bitstring(), "1011");
        assert_eq!(BitPoint::from_bitstring("1011").unwrap(), p);
        assert_eq!(p.sign(1), -1);
        assert!(BitPoint::new(0b100, 2).is_err());
    }

    #[test]
    fn label_views_roundtrip() {
        for l in [Label::ZERO, Label::ONE] {
            assert_eq!(Label::from_signed(l.signed()).unwrap(), l);
            assert_eq!(Label::from_value(l.value()).unwrap(), l);
        }
        assert!(Label::from_signed(0).is_err());
    }

    #[test]
    fn restriction_counts_and_projection() {
        let rho = Restriction::parse("+*-*").unwrap();
        assert_eq!(rho.specified_count(), 2);
        let pts = rho.consistent_points();
        assert_eq!(pts.len(), 4);
        assert!(pts.iter().all(|&x| rho.is_consistent(x)));
        let x = rho
            .project(BitPoint::from_bitstring("01").unwrap())
            .unwrap();
        assert_eq!(x.to_bitstring(), "1001");
    }

    #[test]
    fn all_star_restriction_is_identity() {
        let f = maj3();
        let g = apply_restriction(&f, &Restriction::free(3)).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn fixing_projected_coordinate_gives_constant() {
        let proj1 = TruthTable::from_fn(3, |x| x.get(0));
        let rho = Restriction::free(3).fix(0, true);
        let g = apply_restriction(&proj1, &rho).unwrap();
        assert_eq!(g, TruthTable::constant(2, true));
    }

    #[test]
    fn maj3_with_third_fixed_high_is_or() {
        let rho = Restriction::free(3).fix(2, true);
        let g = apply_restriction(&maj3(), &rho).unwrap();
        let or = TruthTable::from_fn(2, |x| x.get(0) || x.get(1));
        assert_eq!(g, or);
        assert!(g.is_monotone());
    }

    #[test]
    fn monotonicity_check() {
        assert!(maj3().is_monotone());
        let parity = TruthTable::from_fn(2, |x| x.get(0) ^ x.get(1));
        assert!(!parity.is_monotone());
        assert_eq!(parity.relevant_coordinates(), vec![0, 1]);
    }
}
