//! Finite product-tree ground spaces.
//!
//! A [`ProductTreeSpace`] is the finite product `X = X_0 x ... x X_{d-1}` of
//! finite coordinate sets, viewed as a depth-`d` tree. Leaves are coordinate
//! sequences, inner nodes are prefixes, and every prefix `t` determines the
//! basic clopen set `O_t` of leaves extending it. The [`TreeMetric`] makes
//! `diam(O_t) = base^{|t|}` exact, which the cover-weight machinery relies on.

use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Hard cap on the number of leaves a space may have.
pub const MAX_LEAVES: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("space must have at least one level")]
    EmptyArities,
    #[error("arity at level {level} must be >= 1")]
    ZeroArity { level: usize },
    #[error("space has {leaves} leaves, exceeding the {MAX_LEAVES} budget")]
    TooManyLeaves { leaves: usize },
    #[error("invalid path: {reason}")]
    InvalidPath { reason: String },
    #[error("metric base {base} is outside (0, 1)")]
    BadMetricBase { base: f64 },
    #[error("leaf index {index} out of range for space with {leaves} leaves")]
    LeafOutOfRange { index: usize, leaves: usize },
}

/// A finite product `X_0 x ... x X_{d-1}` with `|X_i| = arities[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductTreeSpace {
    arities: Arc<Vec<usize>>,
    /// `strides[i]` = number of leaves below a depth-`i+1` node's subtree sibling step,
    /// i.e. product of arities at levels `i+1..d`.
    strides: Arc<Vec<usize>>,
    leaf_count: usize,
}

impl ProductTreeSpace {
    pub fn new(arities: Vec<usize>) -> Result<Self, SpaceError> {
        if arities.is_empty() {
            return Err(SpaceError::EmptyArities);
        }
        for (level, &k) in arities.iter().enumerate() {
            if k == 0 {
                return Err(SpaceError::ZeroArity { level });
            }
        }
        let mut leaf_count: usize = 1;
        for &k in &arities {
            leaf_count = leaf_count
                .checked_mul(k)
                .filter(|&n| n <= MAX_LEAVES)
                .ok_or(SpaceError::TooManyLeaves { leaves: usize::MAX })?;
        }
        let d = arities.len();
        let mut strides = vec![1usize; d];
        for i in (0..d - 1).rev() {
            strides[i] = strides[i + 1] * arities[i + 1];
        }
        Ok(Self {
            arities: Arc::new(arities),
            strides: Arc::new(strides),
            leaf_count,
        })
    }

    pub fn depth(&self) -> usize {
        self.arities.len()
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    /// Lexicographic rank of a leaf path.
    pub fn leaf_index(&self, leaf: &NodePath) -> Result<usize, SpaceError> {
        if leaf.len() != self.depth() {
            return Err(SpaceError::InvalidPath {
                reason: format!("leaf must have length {}, got {}", self.depth(), leaf.len()),
            });
        }
        self.validate_path(leaf)?;
        Ok(leaf
            .coords()
            .iter()
            .zip(self.strides.iter())
            .map(|(&c, &s)| c as usize * s)
            .sum())
    }

    /// Inverse of [`leaf_index`](Self::leaf_index).
    pub fn leaf_at(&self, index: usize) -> Result<NodePath, SpaceError> {
        if index >= self.leaf_count {
            return Err(SpaceError::LeafOutOfRange {
                index,
                leaves: self.leaf_count,
            });
        }
        let mut rest = index;
        let coords = self
            .strides
            .iter()
            .map(|&s| {
                let c = rest / s;
                rest %= s;
                c as u32
            })
            .collect();
        Ok(NodePath::new(coords))
    }

    /// All leaves in deterministic lexicographic order.
    pub fn leaves(&self) -> Vec<NodePath> {
        (0..self.leaf_count)
            .map(|i| self.leaf_at(i).expect("index in range"))
            .collect()
    }

    pub fn validate_path(&self, t: &NodePath) -> Result<(), SpaceError> {
        if t.len() > self.depth() {
            return Err(SpaceError::InvalidPath {
                reason: format!("path length {} exceeds depth {}", t.len(), self.depth()),
            });
        }
        for (i, &c) in t.coords().iter().enumerate() {
            if c as usize >= self.arities[i] {
                return Err(SpaceError::InvalidPath {
                    reason: format!("coordinate {c} at level {i} exceeds arity {}", self.arities[i]),
                });
            }
        }
        Ok(())
    }

    /// Contiguous lexicographic range `[lo, hi)` of leaf indices below `t`.
    pub fn leaf_range(&self, t: &NodePath) -> Result<(usize, usize), SpaceError> {
        self.validate_path(t)?;
        let mut lo = 0usize;
        for (i, &c) in t.coords().iter().enumerate() {
            lo += c as usize * self.strides[i];
        }
        let span = if t.len() == self.depth() {
            1
        } else {
            self.strides[t.len()] * self.arities[t.len()]
        };
        Ok((lo, lo + span))
    }

    /// The basic clopen set `O_t` of all leaves extending `t`.
    pub fn basic_open(&self, t: &NodePath) -> Result<PointSet, SpaceError> {
        let (lo, hi) = self.leaf_range(t)?;
        let mut set = PointSet::empty(self.leaf_count);
        for i in lo..hi {
            set.insert(i);
        }
        Ok(set)
    }

    pub fn empty_set(&self) -> PointSet {
        PointSet::empty(self.leaf_count)
    }

    pub fn full_set(&self) -> PointSet {
        PointSet::full(self.leaf_count)
    }

    pub fn set_from_leaves<'a, I>(&self, leaves: I) -> Result<PointSet, SpaceError>
    where
        I: IntoIterator<Item = &'a NodePath>,
    {
        let mut set = PointSet::empty(self.leaf_count);
        for leaf in leaves {
            set.insert(self.leaf_index(leaf)?);
        }
        Ok(set)
    }

    /// Union of basic opens. Lossless counterpart of [`canonical_decomposition`](Self::canonical_decomposition).
    pub fn set_from_paths<'a, I>(&self, paths: I) -> Result<PointSet, SpaceError>
    where
        I: IntoIterator<Item = &'a NodePath>,
    {
        let mut set = PointSet::empty(self.leaf_count);
        for t in paths {
            let (lo, hi) = self.leaf_range(t)?;
            for i in lo..hi {
                set.insert(i);
            }
        }
        Ok(set)
    }

    /// Set of leaves reachable on a ≤ 64-leaf space described by mask bits.
    pub fn set_from_mask(&self, mask: u64) -> PointSet {
        assert!(self.leaf_count <= 64, "mask constructor needs <= 64 leaves");
        let mut set = PointSet::empty(self.leaf_count);
        for i in 0..self.leaf_count {
            if mask >> i & 1 == 1 {
                set.insert(i);
            }
        }
        set
    }

    /// The unique minimal antichain of paths whose basic opens union to `set`.
    ///
    /// Works bottom-up: a node enters the antichain when its whole subtree is
    /// contained in `set` but its parent's is not.
    pub fn canonical_decomposition(&self, set: &PointSet) -> Vec<NodePath> {
        assert_eq!(set.universe(), self.leaf_count, "set is over a different space");
        let mut out = Vec::new();
        self.decompose_rec(&mut NodePath::root(), set, &mut out);
        out
    }

    fn decompose_rec(&self, t: &mut NodePath, set: &PointSet, out: &mut Vec<NodePath>) {
        let (lo, hi) = self.leaf_range(t).expect("path built in range");
        let mut all = true;
        let mut any = false;
        for i in lo..hi {
            if set.contains(i) {
                any = true;
            } else {
                all = false;
            }
        }
        if all {
            out.push(t.clone());
            return;
        }
        if !any || t.len() == self.depth() {
            return;
        }
        for c in 0..self.arities[t.len()] {
            t.push(c as u32);
            self.decompose_rec(t, set, out);
            t.pop();
        }
    }
}

/// A prefix in the tree; the empty path denotes the whole space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePath(Vec<u32>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn new(coords: Vec<u32>) -> Self {
        NodePath(coords)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coords(&self) -> &[u32] {
        &self.0
    }

    pub fn push(&mut self, c: u32) {
        self.0.push(c);
    }

    pub fn pop(&mut self) -> Option<u32> {
        self.0.pop()
    }

    pub fn child(&self, c: u32) -> NodePath {
        let mut coords = self.0.clone();
        coords.push(c);
        NodePath(coords)
    }

    /// True when `self` is an initial segment of `other` (or equal).
    pub fn is_prefix_of(&self, other: &NodePath) -> bool {
        self.len() <= other.len() && other.0[..self.len()] == self.0[..]
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "<root>");
        }
        if self.0.iter().all(|&c| c < 10) {
            for c in &self.0 {
                write!(f, "{c}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
            write!(f, "{}", parts.join("-"))
        }
    }
}

/// A set of leaves of one space, stored as a bitset over leaf indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointSet {
    words: Vec<u64>,
    universe: usize,
}

impl PointSet {
    pub fn empty(universe: usize) -> Self {
        PointSet {
            words: vec![0; universe.div_ceil(64)],
            universe,
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut s = Self::empty(universe);
        for i in 0..universe {
            s.insert(i);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.universe);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        assert!(i < self.universe);
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.universe && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.universe).filter(move |&i| self.contains(i))
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &PointSet) -> PointSet {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &PointSet) -> PointSet {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn is_subset_of(&self, other: &PointSet) -> bool {
        assert_eq!(self.universe, other.universe);
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(&a, &b)| a & !b == 0)
    }

    fn zip_with(&self, other: &PointSet, f: impl Fn(u64, u64) -> u64) -> PointSet {
        assert_eq!(self.universe, other.universe, "sets over different spaces");
        PointSet {
            words: self
                .words
                .iter()
                .zip(other.words.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
            universe: self.universe,
        }
    }

    /// Bitmask view; only valid for universes of at most 64 leaves.
    pub fn as_mask(&self) -> u64 {
        assert!(self.universe <= 64, "mask view needs <= 64 leaves");
        self.words.first().copied().unwrap_or(0)
    }
}

/// Ultrametric `d(x, y) = base^(longest common prefix length)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeMetric {
    base: f64,
}

impl Default for TreeMetric {
    fn default() -> Self {
        TreeMetric { base: 0.5 }
    }
}

impl TreeMetric {
    pub fn new(base: f64) -> Result<Self, SpaceError> {
        if !(base > 0.0 && base < 1.0) {
            return Err(SpaceError::BadMetricBase { base });
        }
        Ok(TreeMetric { base })
    }

    /// Parses either a rational string like `1/2` or a plain decimal.
    pub fn parse(text: &str) -> Result<Self, SpaceError> {
        let base = parse_ratio(text).ok_or(SpaceError::BadMetricBase { base: f64::NAN })?;
        Self::new(base)
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    /// `diam(O_t) = base^{|t|}`.
    pub fn diameter(&self, space: &ProductTreeSpace, t: &NodePath) -> Result<f64, SpaceError> {
        space.validate_path(t)?;
        Ok(self.base.powi(t.len() as i32))
    }

    pub fn distance(&self, x: &NodePath, y: &NodePath) -> f64 {
        if x == y {
            return 0.0;
        }
        let common = x
            .coords()
            .iter()
            .zip(y.coords())
            .take_while(|(a, b)| a == b)
            .count();
        self.base.powi(common as i32)
    }
}

pub(crate) fn parse_ratio(text: &str) -> Option<f64> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: f64 = num.trim().parse().ok()?;
        let den: f64 = den.trim().parse().ok()?;
        if den == 0.0 {
            return None;
        }
        Some(num / den)
    } else {
        text.parse().ok()
    }
}
