//! Multi-index combinatorics over the index set of finitely supported
//! sequences of non-negative integers.
//!
//! Indices are kept in canonical form (no trailing zeros), ordered first by
//! length and then lexicographically, so that enumerating a truncation yields
//! a linear extension of the componentwise partial order.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;

use crate::error::{CoreError, Result};

/// A finitely supported sequence of non-negative integers, stored without
/// trailing zeros. Entry `i` (zero-based) is the exponent of mode `i + 1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    entries: Vec<u32>,
}

impl MultiIndex {
    pub fn zero() -> Self {
        MultiIndex { entries: Vec::new() }
    }

    /// The unit index with a single 1 at mode `k` (1-based).
    pub fn unit(k: usize) -> Self {
        assert!(k >= 1, "modes are 1-based");
        let mut entries = vec![0; k];
        entries[k - 1] = 1;
        MultiIndex { entries }
    }

    pub fn from_entries(mut entries: Vec<u32>) -> Self {
        while entries.last() == Some(&0) {
            entries.pop();
        }
        MultiIndex { entries }
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    /// Exponent of mode `k` (1-based).
    pub fn get(&self, k: usize) -> u32 {
        assert!(k >= 1);
        self.entries.get(k - 1).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// |alpha|, the sum of all entries.
    pub fn length(&self) -> u64 {
        self.entries.iter().map(|&a| a as u64).sum()
    }

    /// Position of the last nonzero entry (1-based); 0 for the zero index.
    pub fn index_of(&self) -> usize {
        self.entries.len()
    }

    /// Exact product of entry factorials.
    pub fn factorial(&self) -> BigUint {
        let mut acc = BigUint::from(1u32);
        for &a in &self.entries {
            for j in 2..=a {
                acc *= BigUint::from(j);
            }
        }
        acc
    }

    pub fn factorial_f64(&self) -> f64 {
        let mut acc = 1.0f64;
        for &a in &self.entries {
            for j in 2..=a {
                acc *= j as f64;
            }
        }
        acc
    }

    /// log of (2N)^alpha = sum_n alpha_n * ln(2n).
    pub fn log_weight_base(&self) -> f64 {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, &a)| a as f64 * (2.0 * (i as f64 + 1.0)).ln())
            .sum()
    }

    /// (2N)^{q * alpha}, accumulated in log space.
    pub fn weight(&self, q: f64) -> f64 {
        (q * self.log_weight_base()).exp()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        let n = self.entries.len().max(other.entries.len());
        let mut entries = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.entries.get(i).copied().unwrap_or(0);
            let b = other.entries.get(i).copied().unwrap_or(0);
            entries.push(a + b);
        }
        MultiIndex::from_entries(entries)
    }

    /// Componentwise difference; `None` when any component would go negative.
    pub fn sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if other.entries.len() > self.entries.len() {
            return None;
        }
        let mut entries = self.entries.clone();
        for (i, &b) in other.entries.iter().enumerate() {
            if entries[i] < b {
                return None;
            }
            entries[i] -= b;
        }
        Some(MultiIndex::from_entries(entries))
    }

    /// Componentwise partial order beta <= alpha.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.sub_fits(other)
    }

    fn sub_fits(&self, other: &MultiIndex) -> bool {
        if self.entries.len() > other.entries.len() {
            return false;
        }
        self.entries
            .iter()
            .enumerate()
            .all(|(i, &a)| a <= other.entries[i])
    }

    /// All ordered pairs (beta, gamma) with beta + gamma = alpha.
    pub fn decompositions(&self) -> Vec<(MultiIndex, MultiIndex)> {
        let mut out = vec![(Vec::new(), Vec::new())];
        for &a in &self.entries {
            let mut next = Vec::with_capacity(out.len() * (a as usize + 1));
            for (b, g) in &out {
                for j in 0..=a {
                    let mut b2 = b.clone();
                    let mut g2 = g.clone();
                    b2.push(j);
                    g2.push(a - j);
                    next.push((b2, g2));
                }
            }
            out = next;
        }
        out.into_iter()
            .map(|(b, g)| (MultiIndex::from_entries(b), MultiIndex::from_entries(g)))
            .collect()
    }

    /// Compact list form used in CSV/JSON outputs, e.g. `[0,2,1]`; the zero
    /// index serializes as `[]`.
    pub fn to_compact_string(&self) -> String {
        let body: Vec<String> = self.entries.iter().map(|a| a.to_string()).collect();
        format!("[{}]", body.join(","))
    }

    pub fn parse_compact(s: &str) -> Result<MultiIndex> {
        let t = s.trim();
        let inner = t
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| CoreError::InvalidParameter(format!("bad multi-index literal {s:?}")))?;
        let inner = inner.trim();
        if inner.is_empty() {
            return Ok(MultiIndex::zero());
        }
        let entries = inner
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| CoreError::InvalidParameter(format!("bad multi-index literal {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MultiIndex::from_entries(entries))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_compact_string())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_compact_string())
    }
}

// Level-then-lex order. Within a level, canonical vectors compare like their
// zero-padded forms because no stored index ends in 0.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.length()
            .cmp(&other.length())
            .then_with(|| self.entries.cmp(&other.entries))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The finite truncation `|alpha| <= n && Index(alpha) <= m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncation {
    pub n: u32,
    pub m: u32,
}

impl Truncation {
    pub fn new(n: u32, m: u32) -> Result<Self> {
        if m < 1 {
            return Err(CoreError::InvalidParameter(
                "truncation requires m >= 1".into(),
            ));
        }
        Ok(Truncation { n, m })
    }

    pub fn contains(&self, alpha: &MultiIndex) -> bool {
        alpha.length() <= self.n as u64 && alpha.index_of() <= self.m as usize
    }

    /// Every index of the truncation in level-then-lex order.
    pub fn enumerate(&self) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut stack = vec![0u32; self.m as usize];
        gen(&mut stack, 0, self.n, &mut out);
        out.sort();
        out
    }

    pub fn cardinality(&self) -> u64 {
        binomial(self.n as u64 + self.m as u64, self.m as u64)
    }
}

fn gen(slots: &mut Vec<u32>, pos: usize, budget: u32, out: &mut Vec<MultiIndex>) {
    if pos == slots.len() {
        out.push(MultiIndex::from_entries(slots.clone()));
        return;
    }
    for v in 0..=budget {
        slots[pos] = v;
        gen(slots, pos + 1, budget - v, out);
    }
    slots[pos] = 0;
}

pub fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Sum of (2N)^{-p alpha} over the truncation.
pub fn weight_sum(p: f64, t: &Truncation) -> f64 {
    t.enumerate().iter().map(|a| a.weight(-p)).sum()
}
