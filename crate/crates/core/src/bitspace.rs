//! Binary vectors, integer encodings and Gray-code schedules.
//!
//! Bit order is LSB-first throughout: the first entry of a [`BitVec`] is the
//! least significant bit of its integer encoding, so `(0, 1, 1)` encodes 6.
//! Kernel rows and columns are indexed by that encoding.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest width accepted by [`bin`] and the state helpers.
pub const MAX_BITS: usize = 63;

/// An ordered binary string.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct BitVec {
    bits: Vec<u8>,
}

impl BitVec {
    /// Builds a vector from 0/1 entries.
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidArgument(format!("bit value {bad} is not 0 or 1")));
        }
        Ok(Self { bits })
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![0; n] }
    }

    /// `(1, 0, ..., 0)`.
    pub fn one_hot(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.bits[i] = 1;
        v
    }

    /// Parses a first-bit-first string such as `"01"` (which is `x = (0, 1)`, dec 2).
    pub fn parse(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidArgument(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> u8 {
        self.bits[i]
    }

    /// Copy with entry `i` flipped.
    pub fn flipped(&self, i: usize) -> Self {
        let mut v = self.clone();
        v.bits[i] ^= 1;
        v
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Concatenation `(self, tail)`.
    pub fn concat(&self, tail: &BitVec) -> Self {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&tail.bits);
        Self { bits }
    }
}

impl TryFrom<Vec<u8>> for BitVec {
    type Error = Error;

    fn try_from(bits: Vec<u8>) -> Result<Self> {
        Self::new(bits)
    }
}

impl From<BitVec> for Vec<u8> {
    fn from(v: BitVec) -> Self {
        v.bits
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Integer encoding `sum_i 2^(i-1) v_i`.
pub fn dec(v: &BitVec) -> u64 {
    assert!(v.len() <= MAX_BITS, "vector too long to encode");
    v.bits
        .iter()
        .enumerate()
        .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i))
}

/// The `n`-bit vector whose encoding is `k`.
pub fn bin(k: u64, n: usize) -> Result<BitVec> {
    if n > MAX_BITS {
        return Err(Error::Capacity(format!("{n} bits exceeds the {MAX_BITS}-bit limit")));
    }
    if k >> n != 0 {
        return Err(Error::OutOfRange(format!("{k} does not fit in {n} bits")));
    }
    Ok(BitVec { bits: (0..n).map(|i| ((k >> i) & 1) as u8).collect() })
}

pub fn hamming(a: &BitVec, b: &BitVec) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), found: b.len() });
    }
    Ok(a.bits.iter().zip(&b.bits).filter(|(x, y)| x != y).count())
}

/// 1-based index of the highest set entry; 0 for the zero vector.
pub fn largest_set_index(z: &BitVec) -> usize {
    z.bits.iter().rposition(|&b| b == 1).map_or(0, |i| i + 1)
}

/// Bit `i` of an encoded state.
#[inline]
pub(crate) fn state_bit(state: usize, i: usize) -> u8 {
    ((state >> i) & 1) as u8
}

/// A sequence of equal-length vectors with Hamming-1 steps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GrayCode {
    pub entries: Vec<BitVec>,
}

impl GrayCode {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn width(&self) -> usize {
        self.entries.first().map_or(0, BitVec::len)
    }

    /// True when consecutive entries differ in exactly one position.
    pub fn is_adjacent_chain(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| hamming(&w[0], &w[1]) == Ok(1))
    }

    /// True when the code visits every vector of the cube exactly once.
    pub fn is_full(&self) -> bool {
        let n = self.width();
        if n > 20 || self.entries.len() != 1usize << n {
            return false;
        }
        let mut seen = vec![false; 1 << n];
        for e in &self.entries {
            if e.len() != n {
                return false;
            }
            let k = dec(e) as usize;
            if seen[k] {
                return false;
            }
            seen[k] = true;
        }
        true
    }

    /// Position where entries `t` and `t + 1` differ.
    pub fn switched_bit(&self, t: usize) -> usize {
        switched_bit(&self.entries[t], &self.entries[t + 1])
    }
}

fn switched_bit(a: &BitVec, b: &BitVec) -> usize {
    a.bits
        .iter()
        .zip(&b.bits)
        .position(|(x, y)| x != y)
        .expect("vectors are identical")
}

/// Full Gray code on `{0,1}^s` running from `(1, 0, ..., 0)` to the zero vector.
///
/// This is the binary reflected code `k ^ (k >> 1)` traversed from
/// `k = 2^s - 1` down to 0, with the most significant bit of the code word
/// placed in the first position.
pub fn sharing_code(s: usize) -> Result<GrayCode> {
    if s == 0 {
        return Err(Error::InvalidArgument("sharing code needs s >= 1".into()));
    }
    if s > 20 {
        return Err(Error::Capacity(format!("sharing code of width {s} is too large")));
    }
    let entries = (0..1u64 << s)
        .rev()
        .map(|k| {
            let g = k ^ (k >> 1);
            BitVec { bits: (0..s).map(|i| ((g >> (s - 1 - i)) & 1) as u8).collect() }
        })
        .collect();
    Ok(GrayCode { entries })
}

/// Gray code over the face of the cube spanned by `free` positions, starting at `base`.
pub(crate) fn face_code(base: &BitVec, free: &[usize]) -> GrayCode {
    let mut entries = vec![base.clone()];
    let mut cur = base.clone();
    for t in 1..(1usize << free.len()) {
        cur = cur.flipped(free[t.trailing_zeros() as usize]);
        entries.push(cur.clone());
    }
    GrayCode { entries }
}

/// Collection of `2^b` partial Gray codes of equal length partitioning `{0,1}^m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialCodeSet {
    pub m: usize,
    pub b: usize,
    pub codes: Vec<Vec<BitVec>>,
}

impl PartialCodeSet {
    /// The pair of codes used for two outputs: `((1,0),(0,0))` and `((1,1),(0,1))`.
    pub fn two_bit() -> Self {
        let v = |a: u8, b: u8| BitVec { bits: vec![a, b] };
        Self { m: 2, b: 1, codes: vec![vec![v(1, 0), v(0, 0)], vec![v(1, 1), v(0, 1)]] }
    }

    pub fn code_len(&self) -> usize {
        self.codes.first().map_or(0, Vec::len)
    }

    /// First elements of every code.
    pub fn initial_states(&self) -> Vec<&BitVec> {
        self.codes.iter().filter_map(|c| c.first()).collect()
    }

    /// Positions on which the initial states disagree.
    pub fn free_positions(&self) -> Vec<usize> {
        let init = self.initial_states();
        (0..self.m)
            .filter(|&p| init.iter().any(|v| v.get(p) != init[0].get(p)))
            .collect()
    }

    /// Switched bit between `codes[i][k]` and `codes[i][k + 1]`.
    pub fn switched_bit(&self, i: usize, k: usize) -> usize {
        switched_bit(&self.codes[i][k], &self.codes[i][k + 1])
    }
}

/// Per-property outcome of [`validate_partial_codes`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialCodeReport {
    pub shape: bool,
    pub partition: bool,
    pub shared_initial_bits: bool,
    pub zero_last_in_first: bool,
    pub adjacency: bool,
    pub distinct_switches: bool,
}

impl PartialCodeReport {
    pub fn all_pass(&self) -> bool {
        self.shape
            && self.partition
            && self.shared_initial_bits
            && self.zero_last_in_first
            && self.adjacency
            && self.distinct_switches
    }
}

/// Checks the five schedule properties of a partial code set.
///
/// The shared-bits property is checked up to a relabelling of positions:
/// the first elements of the codes must agree on at least `m - b` positions,
/// that is, they must lie on a common `b`-dimensional face.
pub fn validate_partial_codes(set: &PartialCodeSet) -> PartialCodeReport {
    let (m, b) = (set.m, set.b);
    let n_codes = set.codes.len();
    let len = set.code_len();
    let shape = m <= 20
        && b <= m
        && n_codes == 1 << b
        && len == 1 << (m - b)
        && set.codes.iter().all(|c| c.len() == len && c.iter().all(|v| v.len() == m));
    if !shape {
        return PartialCodeReport {
            shape,
            partition: false,
            shared_initial_bits: false,
            zero_last_in_first: false,
            adjacency: false,
            distinct_switches: false,
        };
    }

    let mut seen = vec![0u32; 1 << m];
    for v in set.codes.iter().flatten() {
        seen[dec(v) as usize] += 1;
    }
    let partition = seen.iter().all(|&c| c == 1);

    let init = set.initial_states();
    let agreeing = (0..m).filter(|&p| init.iter().all(|v| v.get(p) == init[0].get(p))).count();
    let shared_initial_bits = agreeing >= m - b;

    let zero_last_in_first = set.codes[0].last().is_some_and(|v| v.count_ones() == 0);

    let adjacency = set.codes.iter().all(|c| {
        c.windows(2).all(|w| hamming(&w[0], &w[1]) == Ok(1))
    });

    let mut distinct_switches = adjacency;
    if adjacency {
        'outer: for k in 0..len.saturating_sub(1) {
            for i in 0..n_codes {
                for r in (i + 1)..n_codes {
                    let same_bit = set.switched_bit(i, k) == set.switched_bit(r, k);
                    let neighbours = hamming(&set.codes[i][k], &set.codes[r][k]) == Ok(1);
                    if same_bit && !neighbours {
                        distinct_switches = false;
                        break 'outer;
                    }
                }
            }
        }
    }

    PartialCodeReport {
        shape,
        partition,
        shared_initial_bits,
        zero_last_in_first,
        adjacency,
        distinct_switches,
    }
}

/// Node budget of the backtracking search in [`partial_codes`].
const SEARCH_BUDGET: u64 = 50_000_000;

/// Largest `m` the search accepts.
pub const MAX_PARTIAL_CODE_WIDTH: usize = 6;

/// Finds a partial code set for `m = 2^(b-1) + b`.
///
/// The returned set always has `(1, 0, ..., 0)` among its initial states,
/// which the deep construction relies on. For `m = 2` the known pair
/// [`PartialCodeSet::two_bit`] is returned; larger widths are searched.
pub fn partial_codes(m: usize, b: usize) -> Result<PartialCodeSet> {
    if b == 0 || b >= 8 || m != (1usize << (b - 1)) + b {
        return Err(Error::InvalidArgument(format!("m = {m} is not of the form 2^(b-1) + b for b = {b}")));
    }
    if m > MAX_PARTIAL_CODE_WIDTH {
        return Err(Error::Capacity(format!("partial code search is limited to m <= {MAX_PARTIAL_CODE_WIDTH}")));
    }
    if m == 2 {
        return Ok(PartialCodeSet::two_bit());
    }
    let mut search = Search::new(m, b);
    search.run()?;
    search.result.ok_or_else(|| Error::SearchFailed(format!("no partial code set found for m = {m}, b = {b}")))
}

struct Search {
    m: usize,
    b: usize,
    len: usize,
    n_codes: usize,
    /// `codes[i][k]` as encoded states.
    codes: Vec<Vec<usize>>,
    used: Vec<bool>,
    nodes: u64,
    result: Option<PartialCodeSet>,
}

impl Search {
    fn new(m: usize, b: usize) -> Self {
        let n_codes = 1 << b;
        let len = 1 << (m - b);
        Self {
            m,
            b,
            len,
            n_codes,
            codes: vec![Vec::with_capacity(len); n_codes],
            used: vec![false; 1 << m],
            nodes: 0,
            result: None,
        }
    }

    fn run(&mut self) -> Result<()> {
        let m = self.m;
        // Position 0 stays fixed at 1 so the zero vector is never an initial state.
        let positions: Vec<usize> = (1..m).collect();
        for free in combinations(&positions, self.b) {
            let face: Vec<usize> = (0..self.n_codes)
                .map(|t| {
                    free.iter()
                        .enumerate()
                        .fold(1usize, |acc, (bit, &p)| acc | (((t >> bit) & 1) << p))
                })
                .collect();
            for first in 0..self.n_codes {
                let mut order = vec![face[first]];
                order.extend(face.iter().enumerate().filter(|&(t, _)| t != first).map(|(_, &v)| v));
                for (i, &v) in order.iter().enumerate() {
                    self.codes[i].clear();
                    self.codes[i].push(v);
                    self.used[v] = true;
                }
                let found = self.extend(0, 0)?;
                for &v in &order {
                    self.used[v] = false;
                }
                if found {
                    return Ok(());
                }
            }
        }
        Ok(())
    }

    /// Chooses `codes[i][k + 1]` for codes `i..` in column `k`.
    fn extend(&mut self, k: usize, i: usize) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > SEARCH_BUDGET {
            return Err(Error::SearchFailed("partial code search budget exhausted".into()));
        }
        if k + 1 == self.len {
            self.result = Some(self.to_set());
            return Ok(true);
        }
        if i == self.n_codes {
            return self.extend(k + 1, 0);
        }
        let cur = self.codes[i][k];
        let last_step = k + 2 == self.len;
        for bit in 0..self.m {
            let next = cur ^ (1 << bit);
            if i == 0 {
                let remaining = self.len - (k + 2);
                let dist = next.count_ones() as usize;
                if dist > remaining || (remaining - dist) % 2 == 1 {
                    continue;
                }
                if last_step && next != 0 {
                    continue;
                }
            } else if next == 0 {
                continue;
            }
            if self.used[next] {
                continue;
            }
            let clash = (0..i).any(|r| {
                let other = self.codes[r][k];
                let other_bit = (other ^ self.codes[r][k + 1]).trailing_zeros() as usize;
                other_bit == bit && (other ^ cur).count_ones() != 1
            });
            if clash {
                continue;
            }
            self.used[next] = true;
            self.codes[i].push(next);
            if self.extend(k, i + 1)? {
                return Ok(true);
            }
            self.codes[i].pop();
            self.used[next] = false;
        }
        Ok(false)
    }

    fn to_set(&self) -> PartialCodeSet {
        let codes = self
            .codes
            .iter()
            .map(|c| c.iter().map(|&v| bin(v as u64, self.m).expect("state fits")).collect())
            .collect();
        PartialCodeSet { m: self.m, b: self.b, codes }
    }
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (idx, &first) in items.iter().enumerate() {
        for mut rest in combinations(&items[idx + 1..], k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(bits: &[u8]) -> BitVec {
        BitVec::new(bits.to_vec()).unwrap()
    }

    #[test]
    fn dec_examples() {
        assert_eq!(dec(&bv(&[1, 0])), 1);
        assert_eq!(dec(&bv(&[0, 0, 0])), 0);
        assert_eq!(dec(&bv(&[0, 1, 1])), 6);
    }

    #[test]
    fn bin_examples() {
        assert_eq!(bin(3, 2).unwrap(), bv(&[1, 1]));
        assert_eq!(bin(1, 3).unwrap(), bv(&[1, 0, 0]));
        assert_eq!(bin(6, 3).unwrap(), bv(&[0, 1, 1]));
        assert!(matches!(bin(4, 2), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming(&bv(&[0, 0]), &bv(&[0, 0])).unwrap(), 0);
        assert_eq!(hamming(&bv(&[1, 0]), &bv(&[0, 0])).unwrap(), 1);
        assert_eq!(hamming(&bv(&[1, 0, 1]), &bv(&[0, 1, 1])).unwrap(), 2);
        assert!(matches!(hamming(&bv(&[1]), &bv(&[1, 0])), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn largest_set_index_examples() {
        assert_eq!(largest_set_index(&bv(&[0, 0, 0])), 0);
        assert_eq!(largest_set_index(&bv(&[1, 1, 0])), 2);
        assert_eq!(largest_set_index(&bv(&[0, 0, 1])), 3);
    }

    #[test]
    fn rejects_non_binary_entries() {
        assert!(BitVec::new(vec![0, 2]).is_err());
        assert!(BitVec::parse("01x").is_err());
        assert_eq!(BitVec::parse("01").map(|v| dec(&v)).unwrap(), 2);
    }

    #[test]
    fn sharing_code_small() {
        let c = sharing_code(2).unwrap();
        let expect: Vec<BitVec> = [[1, 0], [1, 1], [0, 1], [0, 0]].iter().map(|b| bv(b)).collect();
        assert_eq!(c.entries, expect);
        assert_eq!(sharing_code(1).unwrap().entries, vec![bv(&[1]), bv(&[0])]);
        assert!(sharing_code(0).is_err());
    }

    #[test]
    fn face_code_walks_the_face() {
        let c = face_code(&bv(&[1, 0, 0, 0]), &[1, 3]);
        assert_eq!(c.len(), 4);
        assert!(c.is_adjacent_chain());
        assert!(c.entries.iter().all(|v| v.get(0) == 1 && v.get(2) == 0));
    }

    #[test]
    fn two_bit_codes_pass() {
        let r = validate_partial_codes(&PartialCodeSet::two_bit());
        assert!(r.all_pass(), "{r:?}");
    }

    #[test]
    fn repeated_vector_breaks_partition() {
        let mut set = PartialCodeSet::two_bit();
        set.codes[1][1] = bv(&[1, 0]);
        let r = validate_partial_codes(&set);
        assert!(!r.partition);
    }

    #[test]
    fn hamming_two_step_breaks_adjacency() {
        let mut set = PartialCodeSet::two_bit();
        set.codes[1] = vec![bv(&[0, 1]), bv(&[1, 0])];
        set.codes[0] = vec![bv(&[1, 1]), bv(&[0, 0])];
        let r = validate_partial_codes(&set);
        assert!(!r.adjacency);
        assert!(r.partition);
    }

    #[test]
    fn searched_codes_m4() {
        let set = partial_codes(4, 2).unwrap();
        assert_eq!(set.codes.len(), 4);
        assert!(set.codes.iter().all(|c| c.len() == 4));
        let r = validate_partial_codes(&set);
        assert!(r.all_pass(), "{r:?} {set:?}");
        assert!(set.initial_states().contains(&&BitVec::one_hot(4, 0)));
    }

    #[test]
    fn partial_codes_rejects_bad_shapes() {
        assert!(partial_codes(3, 1).is_err());
        assert!(partial_codes(7, 3).is_err());
    }
}
