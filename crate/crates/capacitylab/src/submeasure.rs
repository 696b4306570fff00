//! A uniform evaluator interface over set functions.
//!
//! Joins, games, Hausdorff comparisons and the verification suite all
//! consume submeasures through [`SubmeasureHandle`]: a labelled evaluator
//! `PointSet -> R+` together with the properties its constructor *claims*
//! (claims are verified by the suite, never assumed).

use crate::norms::DerivedCapacity;
use crate::space::{PointSet, ProductTreeSpace};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// Properties a handle declares about itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DeclaredProperties {
    pub monotone: bool,
    pub subadditive: bool,
    pub strongly_subadditive: bool,
}

enum Evaluator {
    Tower(DerivedCapacity),
    Uniform { universe: usize },
    PointMass { leaf: usize },
    Table { values: Arc<Vec<f64>> },
    Custom(Arc<dyn Fn(&PointSet) -> f64 + Send + Sync>),
}

/// A labelled submeasure evaluator over one space.
pub struct SubmeasureHandle {
    label: String,
    declared: DeclaredProperties,
    evaluator: Evaluator,
    calls: AtomicU64,
}

impl std::fmt::Debug for SubmeasureHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SubmeasureHandle")
            .field("label", &self.label)
            .field("declared", &self.declared)
            .finish()
    }
}

impl SubmeasureHandle {
    /// Wraps a tower-derived capacity; keeps the tower reachable so that
    /// tower-specific checks (ratio claim, tilde stability) stay available.
    pub fn from_capacity(label: impl Into<String>, capacity: DerivedCapacity) -> Self {
        SubmeasureHandle {
            label: label.into(),
            declared: DeclaredProperties {
                monotone: true,
                subadditive: true,
                strongly_subadditive: false,
            },
            evaluator: Evaluator::Tower(capacity),
            calls: AtomicU64::new(0),
        }
    }

    /// The uniform probability measure on the leaves of `space`.
    pub fn uniform(label: impl Into<String>, space: &ProductTreeSpace) -> Self {
        SubmeasureHandle {
            label: label.into(),
            declared: DeclaredProperties {
                monotone: true,
                subadditive: true,
                strongly_subadditive: true,
            },
            evaluator: Evaluator::Uniform {
                universe: space.leaf_count(),
            },
            calls: AtomicU64::new(0),
        }
    }

    /// `c(A) = 1` iff `leaf` is a member of `A`.
    pub fn point_mass(label: impl Into<String>, leaf: usize) -> Self {
        SubmeasureHandle {
            label: label.into(),
            declared: DeclaredProperties {
                monotone: true,
                subadditive: true,
                strongly_subadditive: true,
            },
            evaluator: Evaluator::PointMass { leaf },
            calls: AtomicU64::new(0),
        }
    }

    /// Explicit per-subset table over a space of at most 20 leaves; `values`
    /// is indexed by leaf bitmask. No properties are declared for tables.
    pub fn from_table(label: impl Into<String>, universe: usize, values: Vec<f64>) -> Self {
        assert!(universe <= 20, "table handles need <= 20 leaves");
        assert_eq!(values.len(), 1 << universe, "table must cover all subsets");
        SubmeasureHandle {
            label: label.into(),
            declared: DeclaredProperties::default(),
            evaluator: Evaluator::Table {
                values: Arc::new(values),
            },
            calls: AtomicU64::new(0),
        }
    }

    pub fn from_fn(
        label: impl Into<String>,
        declared: DeclaredProperties,
        f: impl Fn(&PointSet) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SubmeasureHandle {
            label: label.into(),
            declared,
            evaluator: Evaluator::Custom(Arc::new(f)),
            calls: AtomicU64::new(0),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn declared(&self) -> DeclaredProperties {
        self.declared
    }

    /// The wrapped tower capacity, when this handle was built from one.
    pub fn as_capacity(&self) -> Option<&DerivedCapacity> {
        match &self.evaluator {
            Evaluator::Tower(c) => Some(c),
            _ => None,
        }
    }

    pub fn eval(&self, set: &PointSet) -> f64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        match &self.evaluator {
            Evaluator::Tower(c) => c.eval(set),
            Evaluator::Uniform { universe } => set.len() as f64 / *universe as f64,
            Evaluator::PointMass { leaf } => {
                if set.contains(*leaf) {
                    1.0
                } else {
                    0.0
                }
            }
            Evaluator::Table { values } => values[set.as_mask() as usize],
            Evaluator::Custom(f) => f(set),
        }
    }

    /// Number of evaluator invocations so far (the handle's only observable
    /// side effect).
    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Precomputed `c` over every subset of a ≤ `max_bits`-leaf space,
    /// indexed by leaf bitmask. The workhorse behind exhaustive scans.
    pub fn mask_table(&self, space: &ProductTreeSpace, max_bits: usize) -> Option<Vec<f64>> {
        let n = space.leaf_count();
        if n > max_bits || n > 24 {
            return None;
        }
        Some(
            (0..(1u64 << n))
                .map(|mask| self.eval(&space.set_from_mask(mask)))
                .collect(),
        )
    }
}
