//! Good norms on finite sets, their iteration along a product tree, and the
//! capacities they derive.
//!
//! A good norm respects absolute value, is normalized at the constant-one
//! function, and on a finite set is strict: coordinatewise-strict domination
//! of absolute values strictly increases the norm. Iterating one good norm
//! per tree level produces a norm on step functions over the product, and
//! `c(A) = k(indicator of A)` is the derived probability submeasure. At
//! finite depth every indicator is a step function, so the whole limit-norm
//! construction specializes to one nested fold per evaluation.

use crate::space::{NodePath, PointSet, ProductTreeSpace};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Absolute comparison tolerance used by the norm-level checks.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormError {
    #[error("weights must be positive reals summing to 1 (got sum {sum})")]
    BadWeights { sum: f64 },
    #[error("exponent must satisfy p >= 1, got {p}")]
    BadExponent { p: f64 },
    #[error("table must list 2^arity values with value(empty)=0 and value(full)=1")]
    BadTable,
    #[error("tower has {levels} level norms but space depth is {depth}")]
    LevelMismatch { levels: usize, depth: usize },
    #[error("level {level} norm has arity {norm_arity}, space arity is {space_arity}")]
    ArityMismatch {
        level: usize,
        norm_arity: usize,
        space_arity: usize,
    },
    #[error("function has support outside O_t")]
    SupportViolation,
    #[error("k(O_t) = 0: relative norm undefined on a degenerate cell")]
    DegenerateCell,
    #[error("value vector has length {got}, expected {expected}")]
    BadLength { got: usize, expected: usize },
    #[error("norm axiom violated: {0}")]
    AxiomViolation(String),
}

/// Anything that evaluates like a norm on `R^arity`.
pub trait Norm {
    fn arity(&self) -> usize;
    fn eval(&self, values: &[f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    /// `n(f) = (sum_i w_i |f_i|^p)^{1/p}`, with `p = inf` meaning the sup
    /// norm over coordinates of positive weight.
    WeightedP { weights: Vec<f64>, p: f64 },
    /// `n(f) = max_i |f_i|`.
    Max,
    /// Values on indicator functions, extended to arbitrary `f` by the
    /// layer-cake rule `n(f) = sum_j (a_j - a_{j+1}) v({|f| >= a_j})`, which
    /// is homogeneous and monotone whenever `v` is monotone.
    Table { values: Vec<f64> },
}

/// A good norm on a finite coordinate set.
#[derive(Debug, Clone, PartialEq)]
pub struct GoodNorm {
    arity: usize,
    kind: NormKind,
}

impl GoodNorm {
    pub fn weighted_p(weights: Vec<f64>, p: f64) -> Result<Self, NormError> {
        let sum: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-12 {
            return Err(NormError::BadWeights { sum });
        }
        if !(p >= 1.0) {
            return Err(NormError::BadExponent { p });
        }
        Ok(GoodNorm {
            arity: weights.len(),
            kind: NormKind::WeightedP { weights, p },
        })
    }

    pub fn max(arity: usize) -> Self {
        GoodNorm {
            arity,
            kind: NormKind::Max,
        }
    }

    /// `values[mask]` is the norm of the indicator of the coordinate set
    /// given by `mask`; requires `values[0] = 0` and `values[full] = 1`.
    pub fn table(arity: usize, values: Vec<f64>) -> Result<Self, NormError> {
        let full = (1usize << arity) - 1;
        if values.len() != 1 << arity
            || values[0].abs() > 1e-12
            || (values[full] - 1.0).abs() > 1e-12
            || values.iter().any(|&v| v < 0.0)
        {
            return Err(NormError::BadTable);
        }
        Ok(GoodNorm {
            arity,
            kind: NormKind::Table { values },
        })
    }

    /// Strictness in the finite-set sense: everywhere-strict domination of
    /// absolute values strictly increases the norm. Holds for `Max` and for
    /// `WeightedP` with all weights positive; tables are not certified.
    pub fn is_strict(&self) -> bool {
        match &self.kind {
            NormKind::WeightedP { weights, .. } => weights.iter().all(|&w| w > 0.0),
            NormKind::Max => true,
            NormKind::Table { .. } => false,
        }
    }

    /// Stronger than [`is_strict`](Self::is_strict): increasing `|f|` at a
    /// single coordinate strictly increases the norm. `Max` fails this (a
    /// non-maximal coordinate can grow freely below the maximum), which is
    /// exactly what produces flat capacity spots in mixed towers.
    pub fn is_coordinate_strict(&self) -> bool {
        match &self.kind {
            NormKind::WeightedP { weights, p } => {
                weights.iter().all(|&w| w > 0.0) && p.is_finite()
            }
            NormKind::Max | NormKind::Table { .. } => false,
        }
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }
}

impl Norm for GoodNorm {
    fn arity(&self) -> usize {
        self.arity
    }

    fn eval(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.arity);
        match &self.kind {
            NormKind::WeightedP { weights, p } => {
                if p.is_infinite() {
                    values
                        .iter()
                        .zip(weights)
                        .filter(|(_, &w)| w > 0.0)
                        .map(|(v, _)| v.abs())
                        .fold(0.0, f64::max)
                } else if *p == 1.0 {
                    values.iter().zip(weights).map(|(v, w)| v.abs() * w).sum()
                } else {
                    let s: f64 = values
                        .iter()
                        .zip(weights)
                        .map(|(v, w)| w * v.abs().powf(*p))
                        .sum();
                    s.powf(1.0 / p)
                }
            }
            NormKind::Max => values.iter().map(|v| v.abs()).fold(0.0, f64::max),
            NormKind::Table { values: table } => {
                // Layer-cake: sort coordinates by |f| descending and charge
                // each level set for its increment.
                let mut order: Vec<usize> = (0..values.len()).collect();
                order.sort_by(|&a, &b| {
                    values[b]
                        .abs()
                        .partial_cmp(&values[a].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
                let mut total = 0.0;
                let mut mask = 0usize;
                for (rank, &i) in order.iter().enumerate() {
                    mask |= 1 << i;
                    let level = values[i].abs();
                    let next = if rank + 1 < order.len() {
                        values[order[rank + 1]].abs()
                    } else {
                        0.0
                    };
                    total += (level - next) * table[mask];
                }
                total
            }
        }
    }
}

/// The iteration `(n*m)(f) = n(x -> m(y -> f(x, y)))` on `X x Y`, with `f`
/// laid out row-major (`x` slow, `y` fast).
pub struct IteratedNorm<'a> {
    outer: &'a dyn Norm,
    inner: &'a dyn Norm,
}

pub fn iterate<'a>(outer: &'a dyn Norm, inner: &'a dyn Norm) -> IteratedNorm<'a> {
    IteratedNorm { outer, inner }
}

impl Norm for IteratedNorm<'_> {
    fn arity(&self) -> usize {
        self.outer.arity() * self.inner.arity()
    }

    fn eval(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.arity());
        let inner_arity = self.inner.arity();
        let reduced: Vec<f64> = values
            .chunks_exact(inner_arity)
            .map(|row| self.inner.eval(row))
            .collect();
        self.outer.eval(&reduced)
    }
}

/// Randomized check of the good-norm axioms on an arbitrary [`Norm`].
///
/// Verifies `n(1) = 1`, monotonicity in `|f|`, positive homogeneity, the
/// triangle inequality, and (when `strict` is requested) strictness under
/// everywhere-strict domination.
pub fn check_norm_axioms(
    norm: &dyn Norm,
    strict: bool,
    trials: usize,
    seed: u64,
) -> Result<(), NormError> {
    let arity = norm.arity();
    let ones = vec![1.0; arity];
    if (norm.eval(&ones) - 1.0).abs() > NORM_TOL {
        return Err(NormError::AxiomViolation(format!(
            "n(1) = {} != 1",
            norm.eval(&ones)
        )));
    }
    let zero = vec![0.0; arity];
    if norm.eval(&zero).abs() > NORM_TOL {
        return Err(NormError::AxiomViolation("n(0) != 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let f: Vec<f64> = (0..arity).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let g: Vec<f64> = (0..arity).map(|_| rng.gen_range(-2.0..2.0)).collect();

        // monotone in |f|: compare f against a pointwise-dominating h
        let h: Vec<f64> = f
            .iter()
            .map(|&v| v.abs() + rng.gen_range(0.0..1.0))
            .collect();
        if norm.eval(&f) > norm.eval(&h) + NORM_TOL {
            return Err(NormError::AxiomViolation("monotonicity failed".into()));
        }

        let lambda = rng.gen_range(0.0..3.0);
        let scaled: Vec<f64> = f.iter().map(|&v| lambda * v).collect();
        if (norm.eval(&scaled) - lambda * norm.eval(&f)).abs() > NORM_TOL {
            return Err(NormError::AxiomViolation("homogeneity failed".into()));
        }

        let summed: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        if norm.eval(&summed) > norm.eval(&f) + norm.eval(&g) + NORM_TOL {
            return Err(NormError::AxiomViolation("triangle inequality failed".into()));
        }

        if strict {
            let dominated: Vec<f64> = (0..arity).map(|_| rng.gen_range(0.0..1.0)).collect();
            let dominating: Vec<f64> = dominated
                .iter()
                .map(|&v| v + rng.gen_range(0.01..1.0))
                .collect();
            if norm.eval(&dominated) + NORM_TOL / 10.0 >= norm.eval(&dominating) {
                return Err(NormError::AxiomViolation("strictness failed".into()));
            }
        }
    }
    Ok(())
}

/// One good norm per level of a product-tree space.
#[derive(Debug, Clone)]
pub struct NormTower {
    space: ProductTreeSpace,
    levels: Vec<GoodNorm>,
}

impl NormTower {
    pub fn new(space: ProductTreeSpace, levels: Vec<GoodNorm>) -> Result<Self, NormError> {
        if levels.len() != space.depth() {
            return Err(NormError::LevelMismatch {
                levels: levels.len(),
                depth: space.depth(),
            });
        }
        for (level, (norm, &arity)) in levels.iter().zip(space.arities()).enumerate() {
            if norm.arity() != arity {
                return Err(NormError::ArityMismatch {
                    level,
                    norm_arity: norm.arity(),
                    space_arity: arity,
                });
            }
        }
        Ok(NormTower { space, levels })
    }

    pub fn space(&self) -> &ProductTreeSpace {
        &self.space
    }

    pub fn levels(&self) -> &[GoodNorm] {
        &self.levels
    }

    pub fn is_strict(&self) -> bool {
        self.levels.iter().all(GoodNorm::is_strict)
    }

    /// True when every level norm is coordinate-strict, so that adding any
    /// leaf strictly increases the derived capacity.
    pub fn is_coordinate_strict(&self) -> bool {
        self.levels.iter().all(GoodNorm::is_coordinate_strict)
    }

    /// Number of prefixes of length `j + 1`, i.e. the domain size of a
    /// depth-`j` step function.
    pub fn prefix_count(&self, j: usize) -> usize {
        self.space.arities()[..=j].iter().product()
    }

    /// `m_j(f)` where `f` is given on all prefixes of length `j + 1` in
    /// lexicographic order: the nested evaluation `n_0(n_1(...n_j(f)))`,
    /// folding the deepest level first.
    pub fn eval_step(&self, f: &[f64], j: usize) -> Result<f64, NormError> {
        assert!(j < self.space.depth(), "level {j} out of range");
        let expected = self.prefix_count(j);
        if f.len() != expected {
            return Err(NormError::BadLength {
                got: f.len(),
                expected,
            });
        }
        let mut current = f.to_vec();
        for i in (0..=j).rev() {
            let arity = self.space.arities()[i];
            current = current
                .chunks_exact(arity)
                .map(|chunk| self.levels[i].eval(chunk))
                .collect();
        }
        debug_assert_eq!(current.len(), 1);
        Ok(current[0])
    }

    /// The finite-depth limit norm applied to a function on leaves.
    pub fn eval_leaf_function(&self, f: &[f64]) -> Result<f64, NormError> {
        self.eval_step(f, self.space.depth() - 1)
    }

    /// `k_t(f)`: the norm built from levels `|t|..d` applied to `f`
    /// restricted to `O_t`. `f` is given on all leaves and must be supported
    /// inside `O_t`. When `t` is itself a leaf this is `|f(t)|`.
    pub fn relative_norm(&self, t: &NodePath, f: &[f64]) -> Result<f64, NormError> {
        let expected = self.space.leaf_count();
        if f.len() != expected {
            return Err(NormError::BadLength {
                got: f.len(),
                expected,
            });
        }
        let (lo, hi) = self
            .space
            .leaf_range(t)
            .map_err(|e| NormError::AxiomViolation(e.to_string()))?;
        if f.iter()
            .enumerate()
            .any(|(i, &v)| (i < lo || i >= hi) && v != 0.0)
        {
            return Err(NormError::SupportViolation);
        }
        let mut current: Vec<f64> = f[lo..hi].to_vec();
        for i in (t.len()..self.space.depth()).rev() {
            let arity = self.space.arities()[i];
            current = current
                .chunks_exact(arity)
                .map(|chunk| self.levels[i].eval(chunk))
                .collect();
        }
        debug_assert_eq!(current.len(), 1);
        Ok(current[0].abs())
    }
}

/// The probability submeasure `c(A) = k(indicator of A)` derived from a tower.
#[derive(Debug, Clone)]
pub struct DerivedCapacity {
    tower: NormTower,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error("epsilon must lie in (0, 1), got {0}")]
    BadEpsilon(f64),
}

impl DerivedCapacity {
    pub fn new(tower: NormTower) -> Self {
        DerivedCapacity { tower }
    }

    pub fn tower(&self) -> &NormTower {
        &self.tower
    }

    pub fn space(&self) -> &ProductTreeSpace {
        self.tower.space()
    }

    fn indicator(&self, a: &PointSet) -> Vec<f64> {
        let n = self.space().leaf_count();
        let mut f = vec![0.0; n];
        for i in a.iter() {
            f[i] = 1.0;
        }
        f
    }

    pub fn eval(&self, a: &PointSet) -> f64 {
        if a.is_empty() {
            return 0.0;
        }
        self.tower
            .eval_leaf_function(&self.indicator(a))
            .expect("indicator has leaf length")
    }

    /// Exact rational value, available when every level is a weight-1 norm
    /// with rational weights; such a tower is a weighted product measure, so
    /// the capacity is the rational sum of leaf weights.
    pub fn eval_exact(&self, a: &PointSet, rational_weights: &[Vec<BigRational>]) -> Option<BigRational> {
        if rational_weights.len() != self.space().depth() {
            return None;
        }
        for (norm, rw) in self.tower.levels().iter().zip(rational_weights) {
            match norm.kind() {
                NormKind::WeightedP { weights, p } if *p == 1.0 && weights.len() == rw.len() => {}
                _ => return None,
            }
        }
        let mut total = BigRational::zero();
        for leaf in a.iter() {
            let path = self.space().leaf_at(leaf).ok()?;
            let mut w = BigRational::from_integer(BigInt::from(1));
            for (level, &c) in path.coords().iter().enumerate() {
                w *= rational_weights[level][c as usize].clone();
            }
            total += w;
        }
        Some(total)
    }

    /// `A_eps`: leaves with some prefix where `A` has relative capacity
    /// exceeding `1 - eps` strictly.
    pub fn density_set(&self, a: &PointSet, epsilon: f64) -> Result<PointSet, CapacityError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(CapacityError::BadEpsilon(epsilon));
        }
        let space = self.space();
        let mut out = space.empty_set();
        let mut dense_nodes: Vec<(usize, usize)> = Vec::new(); // leaf ranges of dense prefixes
        let mut stack = vec![NodePath::root()];
        while let Some(t) = stack.pop() {
            let open = space.basic_open(&t).expect("in-range path");
            let c_open = self.eval(&open);
            let c_inter = self.eval(&a.intersection(&open));
            if c_inter > (1.0 - epsilon) * c_open {
                dense_nodes.push(space.leaf_range(&t).expect("in-range path"));
            }
            if t.len() < space.depth() {
                for c in 0..space.arities()[t.len()] {
                    stack.push(t.child(c as u32));
                }
            }
        }
        for (lo, hi) in dense_nodes {
            for i in lo..hi {
                out.insert(i);
            }
        }
        Ok(out)
    }

    /// `A ∪ ⋂_eps A_eps` over a decreasing epsilon grid, with stabilization
    /// detection: the intersection has stabilized when the last two grid
    /// values produce the same density set.
    pub fn tilde(&self, a: &PointSet, epsilon_grid: &[f64]) -> Result<TildeResult, CapacityError> {
        assert!(!epsilon_grid.is_empty(), "epsilon grid must be nonempty");
        let mut intersection: Option<PointSet> = None;
        let mut last: Option<PointSet> = None;
        let mut stabilized = false;
        for &eps in epsilon_grid {
            let dens = self.density_set(a, eps)?;
            stabilized = last.as_ref() == Some(&dens);
            intersection = Some(match intersection {
                None => dens.clone(),
                Some(acc) => acc.intersection(&dens),
            });
            last = Some(dens);
        }
        let set = a.union(&intersection.expect("nonempty grid"));
        Ok(TildeResult { set, stabilized })
    }

    /// Default epsilon grid `2^-1, ..., 2^-10`.
    pub fn default_epsilon_grid() -> Vec<f64> {
        (1..=10).map(|k| 0.5f64.powi(k)).collect()
    }

    /// Scans subset pairs in lexicographic mask order for a violation of
    /// strong subadditivity `c(A∪B) + c(A∩B) <= c(A) + c(B)`.
    pub fn strong_subadd_search(&self, max_pairs: u64) -> SubaddSearchOutcome {
        let n = self.space().leaf_count();
        assert!(n <= 16, "exhaustive search needs <= 16 leaves");
        let total = 1u64 << n;
        let table: Vec<f64> = (0..total)
            .map(|m| self.eval(&self.space().set_from_mask(m)))
            .collect();
        let mut scanned = 0u64;
        for a in 0..total {
            for b in 0..total {
                if scanned >= max_pairs {
                    return SubaddSearchOutcome {
                        witness: None,
                        pairs_scanned: scanned,
                        exhausted: false,
                    };
                }
                scanned += 1;
                let lhs = table[(a | b) as usize] + table[(a & b) as usize];
                let rhs = table[a as usize] + table[b as usize];
                if lhs > rhs + 1e-9 {
                    return SubaddSearchOutcome {
                        witness: Some(SubaddWitness {
                            a: self.space().set_from_mask(a),
                            b: self.space().set_from_mask(b),
                            lhs,
                            rhs,
                        }),
                        pairs_scanned: scanned,
                        exhausted: false,
                    };
                }
            }
        }
        SubaddSearchOutcome {
            witness: None,
            pairs_scanned: scanned,
            exhausted: true,
        }
    }

    /// `k_t(f)` with support validation; see [`NormTower::relative_norm`].
    pub fn relative_norm(&self, t: &NodePath, f: &[f64]) -> Result<f64, NormError> {
        self.tower.relative_norm(t, f)
    }

    /// Checks the identity `k_t(f) = k(f) / k(O_t)` for `f` supported on `O_t`.
    pub fn check_ratio_claim(&self, t: &NodePath, f: &[f64]) -> Result<bool, NormError> {
        let open = self
            .space()
            .basic_open(t)
            .map_err(|e| NormError::AxiomViolation(e.to_string()))?;
        let k_open = self.eval(&open);
        if k_open == 0.0 {
            return Err(NormError::DegenerateCell);
        }
        let relative = self.tower.relative_norm(t, f)?;
        let global = self.tower.eval_leaf_function(f)?;
        Ok((relative - global / k_open).abs() <= 1e-9)
    }
}

#[derive(Debug, Clone)]
pub struct TildeResult {
    pub set: PointSet,
    pub stabilized: bool,
}

#[derive(Debug, Clone)]
pub struct SubaddWitness {
    pub a: PointSet,
    pub b: PointSet,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct SubaddSearchOutcome {
    pub witness: Option<SubaddWitness>,
    pub pairs_scanned: u64,
    pub exhausted: bool,
}
