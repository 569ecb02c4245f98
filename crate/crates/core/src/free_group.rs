//! Reduced words in the free group F_d, word-metric balls and the support
//! splitting used by the linearization step.
//!
//! Letters are signed generator indices: `k` is the k-th generator and `-k`
//! its inverse. The empty word is the identity.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of elements `ball` may produce.
pub const DEFAULT_BALL_BUDGET: usize = 1_000_000;

/// A reduced word. Ordered shortlex: first by length, then lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<i32>", into = "Vec<i32>")]
pub struct ReducedWord(Vec<i32>);

fn cancel_into(buf: &mut Vec<i32>, letters: &[i32]) {
    for &x in letters {
        if buf.last() == Some(&-x) {
            buf.pop();
        } else {
            buf.push(x);
        }
    }
}

fn check_letters(letters: &[i32], rank: usize) -> Result<()> {
    for &x in letters {
        if x == 0 || x.unsigned_abs() as usize > rank {
            return Err(Error::InvalidLetter { letter: x, rank });
        }
    }
    Ok(())
}

impl ReducedWord {
    pub fn identity() -> Self {
        ReducedWord(Vec::new())
    }

    /// The word consisting of one letter.
    pub fn letter(x: i32) -> Self {
        assert!(x != 0, "letter 0 is not a generator");
        ReducedWord(vec![x])
    }

    /// Free reduction of a raw letter sequence over rank `rank`.
    pub fn reduce(letters: &[i32], rank: usize) -> Result<Self> {
        check_letters(letters, rank)?;
        let mut buf = Vec::with_capacity(letters.len());
        cancel_into(&mut buf, letters);
        Ok(ReducedWord(buf))
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest generator index appearing in the word (0 for the identity).
    pub fn max_generator(&self) -> usize {
        self.0.iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub fn inverse(&self) -> Self {
        ReducedWord(self.0.iter().rev().map(|x| -x).collect())
    }

    pub fn mul(&self, other: &ReducedWord) -> Self {
        let mut buf = Vec::with_capacity(self.len() + other.len());
        buf.extend_from_slice(&self.0);
        cancel_into(&mut buf, &other.0);
        ReducedWord(buf)
    }

    /// `self⁻¹ · other`, the quotient used when splitting supports.
    pub fn left_quotient(&self, other: &ReducedWord) -> Self {
        self.inverse().mul(other)
    }

    fn from_reduced_unchecked(v: Vec<i32>) -> Self {
        ReducedWord(v)
    }
}

impl TryFrom<Vec<i32>> for ReducedWord {
    type Error = Error;

    fn try_from(v: Vec<i32>) -> Result<Self> {
        if let Some(&x) = v.iter().find(|&&x| x == 0) {
            return Err(Error::InvalidLetter { letter: x, rank: 0 });
        }
        let mut buf = Vec::with_capacity(v.len());
        cancel_into(&mut buf, &v);
        Ok(ReducedWord(buf))
    }
}

impl From<ReducedWord> for Vec<i32> {
    fn from(w: ReducedWord) -> Vec<i32> {
        w.0
    }
}

impl Ord for ReducedWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for ReducedWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "]")
    }
}

/// A finite set of group elements.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<ReducedWord>", into = "Vec<ReducedWord>")]
pub struct SupportSet {
    elements: BTreeSet<ReducedWord>,
}

impl From<Vec<ReducedWord>> for SupportSet {
    fn from(v: Vec<ReducedWord>) -> Self {
        v.into_iter().collect()
    }
}

impl From<SupportSet> for Vec<ReducedWord> {
    fn from(s: SupportSet) -> Self {
        s.elements.into_iter().collect()
    }
}

impl FromIterator<ReducedWord> for SupportSet {
    fn from_iter<I: IntoIterator<Item = ReducedWord>>(iter: I) -> Self {
        SupportSet { elements: iter.into_iter().collect() }
    }
}

impl SupportSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, w: ReducedWord) -> bool {
        self.elements.insert(w)
    }

    pub fn contains(&self, w: &ReducedWord) -> bool {
        self.elements.contains(w)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ReducedWord> {
        self.elements.iter()
    }

    /// Smallest l with every element in B_l.
    pub fn radius(&self) -> usize {
        self.elements.iter().map(ReducedWord::len).max().unwrap_or(0)
    }

    pub fn max_generator(&self) -> usize {
        self.elements.iter().map(ReducedWord::max_generator).max().unwrap_or(0)
    }

    pub fn is_symmetric(&self) -> bool {
        self.elements.iter().all(|w| self.elements.contains(&w.inverse()))
    }

    pub fn symmetric_closure(&self) -> SupportSet {
        self.elements.iter().flat_map(|w| [w.clone(), w.inverse()]).collect()
    }

    pub fn is_subset(&self, other: &SupportSet) -> bool {
        self.elements.is_subset(&other.elements)
    }

    /// Position of `w` in the shortlex order of the set.
    pub fn index_of(&self, w: &ReducedWord) -> Option<usize> {
        if !self.contains(w) {
            return None;
        }
        Some(self.elements.range(..w).count())
    }
}

/// Number of reduced words of length at most `l` over `d` generators.
pub fn ball_size(d: usize, l: usize) -> u128 {
    if d == 0 {
        return 1;
    }
    let mut total: u128 = 1;
    let mut sphere: u128 = 2 * d as u128;
    for _ in 0..l {
        total = total.saturating_add(sphere);
        sphere = sphere.saturating_mul(2 * d as u128 - 1);
    }
    total
}

/// All reduced words of length at most `l`, under the default budget.
pub fn ball(d: usize, l: usize) -> Result<SupportSet> {
    ball_with_budget(d, l, DEFAULT_BALL_BUDGET)
}

pub fn ball_with_budget(d: usize, l: usize, budget: usize) -> Result<SupportSet> {
    if d == 0 {
        return Err(Error::Dimension("rank must be at least 1".into()));
    }
    let needed = ball_size(d, l);
    if needed > budget as u128 {
        return Err(Error::Budget { what: format!("ball B_{l} in F_{d}"), needed, budget });
    }
    let letters = generator_letters(d);
    let mut out: Vec<ReducedWord> = vec![ReducedWord::identity()];
    let mut frontier = vec![Vec::<i32>::new()];
    for _ in 0..l {
        let mut next = Vec::with_capacity(frontier.len() * (2 * d - 1));
        for w in &frontier {
            for &x in &letters {
                if w.last() == Some(&-x) {
                    continue;
                }
                let mut v = w.clone();
                v.push(x);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned().map(ReducedWord::from_reduced_unchecked));
        frontier = next;
    }
    Ok(out.into_iter().collect())
}

/// Letters in the fixed order 1, -1, 2, -2, ..., d, -d.
pub fn generator_letters(d: usize) -> Vec<i32> {
    (1..=d as i32).flat_map(|k| [k, -k]).collect()
}

/// Result of splitting a support S ⊆ B_l into a symmetric S₁ ⊆ B_{l/2} with
/// S ⊆ S₁⁻¹S₁.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitSupport {
    /// S₁ including ∅.
    pub elements: SupportSet,
    /// Even radius actually used (odd inputs are padded).
    pub padded_radius: usize,
    /// True when ∅ is present only as the column index, i.e. no element of
    /// S needed it as a factor.
    pub identity_inserted: bool,
}

impl SplitSupport {
    /// |S₁| without an inserted ∅, bounded by 4|S|.
    pub fn core_len(&self) -> usize {
        self.elements.len() - usize::from(self.identity_inserted)
    }
}

/// Splits every element of `s` as g⁻¹h with g, h of length at most ⌈l/2⌉.
pub fn split_support(s: &SupportSet, l: usize) -> Result<SplitSupport> {
    let padded = l + (l % 2);
    let half = padded / 2;
    if s.radius() > padded {
        return Err(Error::Domain(format!(
            "support radius {} exceeds l = {l}",
            s.radius()
        )));
    }
    let mut out = SupportSet::new();
    let mut identity_needed = false;
    for w in s.iter() {
        // Split the shortlex-smaller of w, w⁻¹ so that a word and its inverse
        // share factors; S₁ is closed under inverses either way.
        let inv = w.inverse();
        let w = if inv < *w { &inv } else { w };
        let letters = w.letters();
        if w.len() <= half {
            out.insert(w.clone());
            out.insert(w.inverse());
            identity_needed = true;
        } else {
            // w = g⁻¹ h with g⁻¹ = prefix, h = suffix
            let p = w.len().div_ceil(2);
            let g_inv = ReducedWord(letters[..p].to_vec());
            let h = ReducedWord(letters[p..].to_vec());
            for x in [g_inv.clone(), g_inv.inverse(), h.inverse(), h] {
                out.insert(x);
            }
        }
    }
    let identity_inserted = !identity_needed;
    out.insert(ReducedWord::identity());
    Ok(SplitSupport { elements: out, padded_radius: padded, identity_inserted })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[i32]) -> ReducedWord {
        ReducedWord::reduce(v, 3).unwrap()
    }

    #[test]
    fn reduce_cancels() {
        assert!(w(&[1, -1]).is_identity());
        assert_eq!(w(&[1, 2, -2, 1]).letters(), &[1, 1]);
        assert_eq!(w(&[1, 2, -2, -1, 3]).letters(), &[3]);
    }

    #[test]
    fn reduce_rejects_bad_letters() {
        assert!(matches!(ReducedWord::reduce(&[0], 2), Err(Error::InvalidLetter { .. })));
        assert!(matches!(ReducedWord::reduce(&[3], 2), Err(Error::InvalidLetter { .. })));
    }

    #[test]
    fn small_balls() {
        assert_eq!(ball(2, 0).unwrap().len(), 1);
        assert_eq!(ball(2, 1).unwrap().len(), 5);
        assert_eq!(ball(2, 2).unwrap().len(), 17);
        assert_eq!(ball(1, 3).unwrap().len(), 7);
    }

    #[test]
    fn ball_budget_error() {
        assert!(matches!(ball_with_budget(2, 10, 1000), Err(Error::Budget { .. })));
    }

    #[test]
    fn split_examples() {
        let s: SupportSet = [ReducedWord::identity()].into_iter().collect();
        let sp = split_support(&s, 2).unwrap();
        assert_eq!(sp.elements.len(), 1);

        let s: SupportSet = [w(&[1, 2])].into_iter().collect();
        let sp = split_support(&s, 2).unwrap();
        let expect: SupportSet =
            [w(&[]), w(&[1]), w(&[-1]), w(&[2]), w(&[-2])].into_iter().collect();
        assert_eq!(sp.elements, expect);
        assert!(sp.identity_inserted);
        assert_eq!(sp.core_len(), 4);

        let s: SupportSet = [w(&[1]), w(&[-1])].into_iter().collect();
        let sp = split_support(&s, 2).unwrap();
        let expect: SupportSet = [w(&[]), w(&[1]), w(&[-1])].into_iter().collect();
        assert_eq!(sp.elements, expect);
        assert!(!sp.identity_inserted);
    }

    #[test]
    fn json_roundtrip() {
        let x = w(&[1, -2, 1]);
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, "[1,-2,1]");
        let y: ReducedWord = serde_json::from_str(&s).unwrap();
        assert_eq!(x, y);
        let e: ReducedWord = serde_json::from_str("[]").unwrap();
        assert!(e.is_identity());
        assert!(serde_json::from_str::<ReducedWord>("[1,0]").is_err());
    }

    #[test]
    fn shortlex_order() {
        assert!(w(&[3]) < w(&[1, 1]));
        assert!(w(&[-1]) < w(&[1]));
        let s: SupportSet = [w(&[1, 1]), w(&[2]), w(&[])].into_iter().collect();
        assert_eq!(s.index_of(&w(&[2])), Some(1));
        assert_eq!(s.index_of(&w(&[1, 1])), Some(2));
    }
}
