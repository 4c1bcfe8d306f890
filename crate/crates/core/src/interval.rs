use std::fmt;

use serde::{Deserialize, Serialize};

/// A contiguous run of chain sites `start..start + len`.
///
/// Printed as the inclusive interval `[a,b]`. A zero-length interval is
/// allowed; it is the window of the global identity string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Interval {
    start: usize,
    len: usize,
}

impl Interval {
    /// Inclusive interval `[first, last]`.
    ///
    /// # Panics
    /// If `last < first`.
    pub fn new(first: usize, last: usize) -> Self {
        assert!(last >= first, "interval [{first},{last}] is reversed");
        Interval {
            start: first,
            len: last - first + 1,
        }
    }

    pub fn with_len(start: usize, len: usize) -> Self {
        Interval { start, len }
    }

    pub fn empty() -> Self {
        Interval { start: 0, len: 0 }
    }

    /// The full chain `[0, n-1]`.
    pub fn chain(n: usize) -> Self {
        Interval { start: 0, len: n }
    }

    pub fn single(site: usize) -> Self {
        Interval { start: site, len: 1 }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// One past the last site.
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    /// Last site, `None` when empty.
    pub fn last(&self) -> Option<usize> {
        (self.len > 0).then(|| self.start + self.len - 1)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains_site(&self, site: usize) -> bool {
        site >= self.start && site < self.end()
    }

    /// Every site of `other` lies in `self`. The empty interval is contained
    /// in everything.
    pub fn contains(&self, other: &Interval) -> bool {
        other.is_empty() || (other.start >= self.start && other.end() <= self.end())
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        !self.is_empty() && !other.is_empty() && self.start < other.end() && other.start < self.end()
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let lo = self.start.max(other.start);
        let hi = self.end().min(other.end());
        if hi > lo {
            Interval::with_len(lo, hi - lo)
        } else {
            Interval::empty()
        }
    }

    /// Smallest interval covering both.
    pub fn hull(&self, other: &Interval) -> Interval {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        let lo = self.start.min(other.start);
        let hi = self.end().max(other.end());
        Interval::with_len(lo, hi - lo)
    }

    /// Grow by `l` sites on each side, clipped to a chain of `n` sites.
    pub fn expand(&self, l: usize, n: usize) -> Interval {
        let lo = self.start.saturating_sub(l);
        let hi = (self.end() + l).min(n);
        Interval::with_len(lo, hi.saturating_sub(lo))
    }

    /// Distance between the closest sites of two non-empty intervals, zero
    /// when they overlap.
    pub fn distance(&self, other: &Interval) -> usize {
        if self.overlaps(other) {
            0
        } else if self.end() <= other.start {
            other.start - (self.end() - 1)
        } else {
            self.start - (other.end() - 1)
        }
    }

    pub fn sites(&self) -> std::ops::Range<usize> {
        self.start..self.end()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.last() {
            Some(last) => write!(f, "[{},{}]", self.start, last),
            None => write!(f, "[]"),
        }
    }
}
