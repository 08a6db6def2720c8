//! Brute-force noncontextual bounds.
//!
//! A deterministic noncontextual model assigns one fixed ±1 value to every
//! observable, whatever context it is measured in. The bounds below
//! enumerate every such assignment. General noncontextual models are convex
//! mixtures of deterministic ones and the inequalities are linear, so the
//! maximum over deterministic assignments is also the maximum over all
//! noncontextual models.
//!
//! Only labels and the expected product signs are used here; no matrices.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::observables::{MagicSquare, MagicStar, MeasurementContext};

/// One ±1 value per observable label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValueAssignment {
    values: BTreeMap<String, i8>,
}

impl ValueAssignment {
    pub fn new(values: BTreeMap<String, i8>) -> Self {
        debug_assert!(values.values().all(|v| v.abs() == 1));
        Self { values }
    }

    /// Every label set to `value`.
    pub fn uniform<'a>(labels: impl IntoIterator<Item = &'a str>, value: i8) -> Self {
        Self::new(labels.into_iter().map(|l| (l.to_string(), value)).collect())
    }

    pub fn get(&self, label: &str) -> Option<i8> {
        self.values.get(label).copied()
    }

    pub fn set(&mut self, label: &str, value: i8) {
        debug_assert!(value.abs() == 1);
        self.values.insert(label.to_string(), value);
    }

    pub fn values(&self) -> &BTreeMap<String, i8> {
        &self.values
    }
}

/// Product of the assigned values over the context's members.
pub fn context_value(v: &ValueAssignment, ctx: &MeasurementContext) -> Result<i8> {
    ctx.members().iter().try_fold(1i8, |acc, o| {
        v.get(o.label())
            .map(|x| acc * x)
            .ok_or_else(|| Error::MissingLabel(o.label().to_string()))
    })
}

/// Result of an exhaustive search.
#[derive(Debug, Clone, Serialize)]
pub struct OracleBound {
    /// Max of `Σ_c sign_c · value(c)` over all assignments.
    pub max_value: i32,
    /// First maximizer in enumeration order.
    pub witness: ValueAssignment,
    /// Number of assignments enumerated.
    pub visited: usize,
    /// Number of maximizing assignments.
    pub maximizers: usize,
    /// Largest number of contexts whose product matches the expected sign.
    pub max_satisfied: usize,
    pub contexts: usize,
}

/// Enumerates every ±1 assignment on the labels appearing in `contexts`.
///
/// Labels are sorted; assignment `n` gives label `i` the value −1 iff bit
/// `i` of `n` is set, so `n = 0` is the all-(+1) assignment and witnesses are
/// reproducible.
pub fn enumerate_bound(contexts: &[&MeasurementContext]) -> OracleBound {
    let mut labels: Vec<&str> = contexts
        .iter()
        .flat_map(|c| c.members().iter().map(|o| o.label()))
        .collect();
    labels.sort_unstable();
    labels.dedup();
    assert!(labels.len() < 32, "too many observables to enumerate");

    // member indices into `labels` per context
    let index: Vec<(Vec<usize>, i8)> = contexts
        .iter()
        .map(|c| {
            let idx = c
                .members()
                .iter()
                .map(|o| labels.binary_search(&o.label()).expect("label collected"))
                .collect();
            (idx, c.expected_product_sign())
        })
        .collect();

    let total = 1usize << labels.len();
    let mut best: Option<(i32, usize)> = None;
    let mut maximizers = 0;
    let mut max_satisfied = 0;
    for n in 0..total {
        let value_of = |i: usize| if n & (1 << i) != 0 { -1i32 } else { 1 };
        let mut score = 0i32;
        let mut satisfied = 0usize;
        for (members, sign) in &index {
            let v: i32 = members.iter().map(|&i| value_of(i)).product();
            let sign = i32::from(*sign);
            score += sign * v;
            if v == sign {
                satisfied += 1;
            }
        }
        max_satisfied = max_satisfied.max(satisfied);
        match best {
            Some((b, _)) if score < b => {}
            Some((b, _)) if score == b => maximizers += 1,
            _ => {
                best = Some((score, n));
                maximizers = 1;
            }
        }
    }
    let (max_value, arg) = best.expect("at least one assignment");
    let witness = ValueAssignment::new(
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.to_string(), if arg & (1 << i) != 0 { -1 } else { 1 }))
            .collect(),
    );
    OracleBound {
        max_value,
        witness,
        visited: total,
        maximizers,
        max_satisfied,
        contexts: contexts.len(),
    }
}

/// Largest ⟨R1⟩+⟨R2⟩+⟨R3⟩−⟨L1⟩−⟨L2⟩−⟨L3⟩ over the 512 assignments of the
/// magic square.
pub fn max_delta_noncontextual() -> OracleBound {
    let sq = MagicSquare::new();
    let ctx: Vec<_> = sq.contexts().collect();
    enumerate_bound(&ctx)
}

/// Largest −⟨E1⟩+⟨E2⟩+⟨E3⟩+⟨E4⟩+⟨E5⟩ over the 1024 assignments of the star.
pub fn max_beta_noncontextual() -> OracleBound {
    let star = MagicStar::new();
    let ctx: Vec<_> = star.edges().iter().collect();
    enumerate_bound(&ctx)
}

/// Best deterministic winning probability of the square game: the largest
/// fraction of the six context conditions a single assignment can satisfy.
pub fn max_win_noncontextual() -> Ratio<u32> {
    let b = max_delta_noncontextual();
    Ratio::new(b.max_satisfied as u32, b.contexts as u32)
}

/// Star analogue of [`max_win_noncontextual`] over five edges.
pub fn max_star_win_noncontextual() -> Ratio<u32> {
    let b = max_beta_noncontextual();
    Ratio::new(b.max_satisfied as u32, b.contexts as u32)
}
