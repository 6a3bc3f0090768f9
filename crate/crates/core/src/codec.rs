//! The OILU numeral system.
//!
//! Every decimal digit is drawn as a subset of the four sides of a square
//! ring. `O` (all sides) is 0, `I` (one side) is 1, and the four quarter-turn
//! orientations of `L` (two adjacent sides) and `U` (three sides) give the
//! even digits 2, 4, 6, 8 and the odd digits 3, 5, 7, 9.
//!
//! Turning a marker a quarter counter-clockwise permutes the digits by
//! `(2 4 6 8)(3 5 7 9)`, fixing 0 and 1. The four readings of a marker form
//! its facet group.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Upper bound on digits accepted by [`OiluNumber::parse`].
pub const MAX_DIGITS: usize = 16;

/// One side of a square ring, in clockwise order starting at the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Top = 0,
    Right = 1,
    Bottom = 2,
    Left = 3,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Top, Side::Right, Side::Bottom, Side::Left];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Side {
        Side::ALL[i % 4]
    }

    pub fn bit(self) -> u8 {
        1 << (self as u8)
    }

    /// Next side in clockwise order.
    pub fn clockwise(self) -> Side {
        Side::from_index(self.index() + 1)
    }

    /// Where this side ends up after `quarter_turns` counter-clockwise quarter turns.
    pub fn rotated_ccw(self, quarter_turns: i32) -> Side {
        // CCW moves RIGHT->TOP, TOP->LEFT: one step back in clockwise order.
        let k = quarter_turns.rem_euclid(4) as usize;
        Side::from_index(self.index() + 4 - k)
    }

    pub fn letter(self) -> char {
        match self {
            Side::Top => 'T',
            Side::Right => 'R',
            Side::Bottom => 'B',
            Side::Left => 'L',
        }
    }
}

/// Set of ring sides, as a 4-bit mask ordered top, right, bottom, left
/// (bit 0 = top).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SidePattern(u8);

impl SidePattern {
    pub const EMPTY: SidePattern = SidePattern(0);
    pub const FULL: SidePattern = SidePattern(0b1111);

    pub fn from_mask(mask: u8) -> SidePattern {
        SidePattern(mask & 0b1111)
    }

    pub fn from_sides(sides: &[Side]) -> SidePattern {
        SidePattern(sides.iter().fold(0, |m, s| m | s.bit()))
    }

    pub fn mask(self) -> u8 {
        self.0
    }

    pub fn contains(self, side: Side) -> bool {
        self.0 & side.bit() != 0
    }

    pub fn with(self, side: Side) -> SidePattern {
        SidePattern(self.0 | side.bit())
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn sides(self) -> impl Iterator<Item = Side> {
        Side::ALL.into_iter().filter(move |s| self.contains(*s))
    }

    /// Valid patterns: all four sides, any three, two adjacent, or one.
    pub fn is_valid(self) -> bool {
        match self.len() {
            0 => false,
            2 => self.0 != 0b0101 && self.0 != 0b1010,
            _ => true,
        }
    }

    pub fn rotate_ccw(self, quarter_turns: i32) -> SidePattern {
        SidePattern(
            self.sides()
                .fold(0, |m, s| m | s.rotated_ccw(quarter_turns).bit()),
        )
    }

    /// Compact text form such as `"TRBL"` or `"B"`.
    pub fn letters(self) -> String {
        self.sides().map(Side::letter).collect()
    }
}

impl fmt::Display for SidePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("-")
        } else {
            f.write_str(&self.letters())
        }
    }
}

impl Serialize for SidePattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// A decimal digit `0..=9`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digit(u8);

impl Digit {
    pub fn new(value: u8) -> Result<Digit> {
        if value <= 9 {
            Ok(Digit(value))
        } else {
            Err(Error::InvalidDigit(value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Digit> {
        (0..10).map(Digit)
    }
}

impl fmt::Display for Digit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

const T: u8 = 0b0001;
const R: u8 = 0b0010;
const B: u8 = 0b0100;
const L: u8 = 0b1000;

/// Canonical side set drawn for each digit. `I` is always emitted as the
/// bottom side; `L` starts as bottom+left and `U` opens at the top.
pub const DIGIT_PATTERNS: [SidePattern; 10] = [
    SidePattern(T | R | B | L),
    SidePattern(B),
    SidePattern(B | L),
    SidePattern(L | B | R),
    SidePattern(R | B),
    SidePattern(B | R | T),
    SidePattern(T | R),
    SidePattern(R | T | L),
    SidePattern(L | T),
    SidePattern(T | L | B),
];

pub fn digit_to_pattern(d: Digit) -> SidePattern {
    DIGIT_PATTERNS[d.0 as usize]
}

/// Inverse of [`digit_to_pattern`]; every single-side pattern reads as 1.
pub fn pattern_to_digit(p: SidePattern) -> Result<Digit> {
    pattern_to_digit_with(&DIGIT_PATTERNS, p)
}

/// Lookup against an explicit digit table. Used by the self-test to run the
/// codec laws against a substituted table.
pub fn pattern_to_digit_with(table: &[SidePattern; 10], p: SidePattern) -> Result<Digit> {
    if !p.is_valid() {
        return Err(Error::InvalidPattern(p.mask()));
    }
    if p.len() == 1 {
        return Ok(Digit(1));
    }
    table
        .iter()
        .position(|&q| q == p)
        .map(|i| Digit(i as u8))
        .ok_or(Error::InvalidPattern(p.mask()))
}

pub fn rotate_pattern_ccw(p: SidePattern, quarter_turns: i32) -> SidePattern {
    p.rotate_ccw(quarter_turns)
}

/// The quarter-turn digit permutation applied `quarter_turns` times.
pub fn rotate_digit(d: Digit, quarter_turns: i32) -> Digit {
    let k = quarter_turns.rem_euclid(4) as u8;
    match d.0 {
        0 | 1 => d,
        v => {
            // Even and odd digits each form a 4-cycle: 2->4->6->8, 3->5->7->9.
            let base = if v % 2 == 0 { 2 } else { 3 };
            let pos = (v - base) / 2;
            Digit(base + 2 * ((pos + k) % 4))
        }
    }
}

/// Digits of a marker, outermost ring first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OiluNumber {
    digits: Vec<Digit>,
}

impl OiluNumber {
    pub fn new(digits: Vec<Digit>) -> Result<OiluNumber> {
        if digits.is_empty() {
            return Err(Error::InvalidNumber(String::new()));
        }
        Ok(OiluNumber { digits })
    }

    /// Parses a decimal string of 1..=[`MAX_DIGITS`] digits. Leading zeros are
    /// significant: `"0467"` has four rings.
    pub fn parse(s: &str) -> Result<OiluNumber> {
        if s.is_empty() || s.len() > MAX_DIGITS || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::InvalidNumber(s.to_string()));
        }
        Ok(OiluNumber {
            digits: s.bytes().map(|b| Digit(b - b'0')).collect(),
        })
    }

    pub fn digits(&self) -> &[Digit] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn patterns(&self) -> Vec<SidePattern> {
        self.digits.iter().map(|&d| digit_to_pattern(d)).collect()
    }

    pub fn rotated(&self, quarter_turns: i32) -> OiluNumber {
        OiluNumber {
            digits: self
                .digits
                .iter()
                .map(|&d| rotate_digit(d, quarter_turns))
                .collect(),
        }
    }
}

impl fmt::Display for OiluNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.digits {
            write!(f, "{}", d.0)?;
        }
        Ok(())
    }
}

impl FromStr for OiluNumber {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OiluNumber::parse(s)
    }
}

impl Serialize for OiluNumber {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// The four readings of one marker; `values[k]` is the reading after `k`
/// counter-clockwise quarter turns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct FacetGroup {
    pub values: [OiluNumber; 4],
}

impl FacetGroup {
    pub fn contains(&self, n: &OiluNumber) -> bool {
        self.values.iter().any(|v| v == n)
    }

    /// Facet values as a sorted, deduplicated list of strings.
    pub fn as_set(&self) -> Vec<String> {
        let mut v: Vec<String> = self.values.iter().map(|n| n.to_string()).collect();
        v.sort();
        v.dedup();
        v
    }
}

pub fn facet_values(n: &OiluNumber) -> FacetGroup {
    FacetGroup {
        values: [n.clone(), n.rotated(1), n.rotated(2), n.rotated(3)],
    }
}
