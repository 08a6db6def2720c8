//! Invariant suites behind `verify-square` and `verify-star`.
//!
//! Each suite evaluates the built-in tables on a batch of seeded random
//! states and reports one [`Check`] per property.

use crate::engine::{
    bit_tuples, expectation_product, maximally_mixed, moment_probability,
    moment_probability_general, random_states, sequential_probability, DensityState,
};
use crate::error::Result;
use crate::game::{
    min_entropy, valid_rounds, Check, Scenario, SquareGame, StarGame,
};
use crate::observables::{MeasurementContext, TABLE_TOL};
use crate::oracle::{
    max_beta_noncontextual, max_delta_noncontextual, max_star_win_noncontextual,
    max_win_noncontextual,
};
use num_rational::Ratio;

/// Tolerance for quantities that are exact in principle (parity laws,
/// probabilities of the maximally mixed state).
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub states: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            states: 100,
            seed: 0,
            tol: crate::linalg::DEFAULT_TOL,
        }
    }
}

fn max_over<T>(items: &[T], f: impl Fn(&T) -> Result<f64>) -> Result<f64> {
    items.iter().try_fold(0.0f64, |m, x| Ok(m.max(f(x)?)))
}

fn contexts_valid<'a>(ctxs: impl Iterator<Item = &'a MeasurementContext>) -> bool {
    ctxs.into_iter().all(|c| c.validate(TABLE_TOL).is_ok())
}

/// All permutations of `0..n` (n ≤ 4 here).
fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Largest change in a sequential probability when the commuting members
/// are measured in a different order.
fn order_variation(rho: &DensityState, ctx: &MeasurementContext, tol: f64) -> Result<f64> {
    let members = ctx.members();
    let mut worst: f64 = 0.0;
    for bits in bit_tuples(members.len()) {
        let reference: Vec<_> = members.iter().zip(bits.iter().copied()).collect();
        let p0 = sequential_probability(rho, &reference, tol)?;
        for perm in permutations(members.len()) {
            let seq: Vec<_> = perm.iter().map(|&i| reference[i]).collect();
            worst = worst.max((sequential_probability(rho, &seq, tol)? - p0).abs());
        }
    }
    Ok(worst)
}

pub fn verify_square(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let tol = opts.tol;
    let game = SquareGame::with_tolerance(tol);
    let sq = game.square();
    let states = random_states(4, opts.states, opts.seed);
    let moment_states = &states[..states.len().min(50)];
    let mut checks = Vec::new();

    checks.push(Check::new("contexts_commute_with_signed_products", contexts_valid(sq.contexts()), TABLE_TOL));

    let dev = max_over(&states, |r| Ok((game.delta(r)? - 6.0).abs()))?;
    checks.push(Check::new("delta_equals_6_for_random_states", dev <= tol, tol));

    let oracle = max_delta_noncontextual();
    checks.push(Check::new(
        "oracle_delta_bound_is_4",
        oracle.max_value == 4 && oracle.visited == 512 && oracle.maximizers >= 1,
        0.0,
    ));
    checks.push(Check::new("oracle_win_bound_is_5_over_6", max_win_noncontextual() == Ratio::new(5, 6), 0.0));

    let dev = max_over(&states, |r| {
        Ok((game.win_probability(r)? - 0.5 * (1.0 + game.delta(r)? / 6.0)).abs())
    })?;
    checks.push(Check::new("win_probability_identity", dev <= tol, tol));

    let dev = max_over(&states, |r| Ok((game.alpha_weighted_sum(r)? - game.delta(r)?).abs()))?;
    checks.push(Check::new("alpha_sum_equals_delta", dev <= tol, tol));

    let dev = max_over(moment_states, |r| {
        let mut worst: f64 = 0.0;
        for inputs in valid_rounds() {
            let [a, b, c] = game.triple(inputs);
            for t in bit_tuples(3) {
                let m = moment_probability(r, a, b, c, t[0], t[1], t[2], tol)?;
                let s = game.probability(r, inputs, [t[0], t[1], t[2]])?;
                worst = worst.max((m - s).abs());
            }
        }
        Ok(worst)
    })?;
    checks.push(Check::new("moment_expansion_matches_sequential", dev <= tol, tol));

    let dev = max_over(moment_states, |r| {
        let mut worst: f64 = 0.0;
        for inputs in valid_rounds() {
            for t in bit_tuples(3) {
                let parity = t[0] ^ t[1] ^ t[2];
                let forbidden = if inputs.is_uniform() { parity == 1 } else { parity == 0 };
                if forbidden {
                    worst = worst.max(game.probability(r, inputs, [t[0], t[1], t[2]])?.abs());
                }
            }
        }
        Ok(worst)
    })?;
    checks.push(Check::new("parity_laws", dev <= EXACT_TOL, EXACT_TOL));

    let dev = max_over(&states[..states.len().min(10)], |r| {
        valid_rounds().iter().try_fold(0.0f64, |m, &inputs| {
            Ok(m.max(order_variation(r, &game.context_for(inputs)?, tol)?))
        })
    })?;
    checks.push(Check::new("measurement_order_invariance", dev <= tol, tol));

    let mixed = maximally_mixed(2)?;
    let g = game.guessing_probability(&mixed)?;
    checks.push(Check::new("maximally_mixed_guessing_is_1_over_4", (g.value - 0.25).abs() <= EXACT_TOL, EXACT_TOL));
    checks.push(Check::new("maximally_mixed_min_entropy_is_2", (min_entropy(g.value)? - 2.0).abs() <= tol, tol));

    let eig = DensityState::common_eigenstate(&[(sq.a(1), 0), (sq.b(1), 0), (sq.c(1), 0)])?;
    let g1 = game.guessing_probability(&eig)?;
    checks.push(Check::new("common_eigenstate_guessing_is_1", (g1.value - 1.0).abs() <= EXACT_TOL, EXACT_TOL));

    // G along the segment from I/4 to the eigenstate
    let mut last = 0.0;
    let mut monotone = true;
    for k in 0..=20 {
        let eps = f64::from(k) / 20.0;
        let g = game.guessing_probability(&mixed.mix(&eig, eps)?)?.value;
        monotone &= g >= last - tol;
        last = g;
    }
    checks.push(Check::new("guessing_monotone_toward_eigenstate", monotone, tol));

    let prep = game.preparation_equivalence_check(EXACT_TOL)?;
    checks.push(Check::new(
        "preparation_mixtures_equal_maximally_mixed",
        prep.all_equal_maximally_mixed && !prep.distinct_decomposition_pairs.is_empty(),
        EXACT_TOL,
    ));
    Ok(checks)
}

pub fn verify_star(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let tol = opts.tol;
    let game = StarGame::with_tolerance(tol);
    let star = game.star();
    let states = random_states(8, opts.states, opts.seed);
    let mut checks = Vec::new();

    checks.push(Check::new("edges_commute_with_signed_products", contexts_valid(star.edges().iter()), TABLE_TOL));
    let incidence_ok = star.observables().iter().all(|o| {
        star.edges()
            .iter()
            .filter(|e| e.members().iter().any(|m| m.label() == o.label()))
            .count()
            == 2
    });
    checks.push(Check::new("each_observable_on_two_edges", incidence_ok, 0.0));

    let dev = max_over(&states, |r| Ok((game.beta(r)? - 5.0).abs()))?;
    checks.push(Check::new("beta_equals_5_for_random_states", dev <= tol, tol));

    let dev = max_over(&states, |r| Ok((expectation_product(r, star.edge(1), tol)? + 1.0).abs()))?;
    checks.push(Check::new("e1_correlator_is_minus_1", dev <= tol, tol));

    let oracle = max_beta_noncontextual();
    checks.push(Check::new("oracle_beta_bound_is_3", oracle.max_value == 3 && oracle.visited == 1024, 0.0));
    checks.push(Check::new("oracle_win_bound_is_4_over_5", max_star_win_noncontextual() == Ratio::new(4, 5), 0.0));

    let dev = max_over(&states, |r| {
        Ok((game.win_probability(r)? - 0.5 * (1.0 + game.beta(r)? / 5.0)).abs())
    })?;
    checks.push(Check::new("win_probability_identity", dev <= tol, tol));

    let dev = max_over(&states[..states.len().min(20)], |r| {
        let mut worst: f64 = 0.0;
        for (j, edge) in star.edges().iter().enumerate() {
            let members: Vec<_> = edge.members().iter().collect();
            for t in bit_tuples(4) {
                let m = moment_probability_general(r, &members, &t, tol)?;
                worst = worst.max((m - game.probability(r, j + 1, &t)?).abs());
            }
        }
        Ok(worst)
    })?;
    checks.push(Check::new("moment_expansion_matches_sequential", dev <= tol, tol));

    let dev = max_over(&states[..states.len().min(10)], |r| {
        star.edges()
            .iter()
            .try_fold(0.0f64, |m, e| Ok(m.max(order_variation(r, e, tol)?)))
    })?;
    checks.push(Check::new("measurement_order_invariance", dev <= tol, tol));

    let mixed = maximally_mixed(3)?;
    let mut worst: f64 = 0.0;
    for (j, edge) in star.edges().iter().enumerate() {
        for t in bit_tuples(4) {
            let parity = t.iter().fold(0, |p, b| p ^ b);
            let allowed = (parity == 1) == (edge.expected_product_sign() < 0);
            let expected = if allowed { 0.125 } else { 0.0 };
            worst = worst.max((game.probability(&mixed, j + 1, &t)? - expected).abs());
        }
    }
    checks.push(Check::new("maximally_mixed_edge_probabilities", worst <= EXACT_TOL, EXACT_TOL));

    let g = game.guessing_probability(&mixed)?;
    checks.push(Check::new("maximally_mixed_guessing_is_1_over_8", (g.value - 0.125).abs() <= EXACT_TOL, EXACT_TOL));
    checks.push(Check::new("maximally_mixed_min_entropy_is_3", (min_entropy(g.value)? - 3.0).abs() <= tol, tol));
    Ok(checks)
}

pub fn verify(scenario: Scenario, opts: &VerifyOptions) -> Result<Vec<Check>> {
    match scenario {
        Scenario::Square => verify_square(opts),
        Scenario::Star => verify_star(opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_count() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(4).len(), 24);
    }

    #[test]
    fn suites_pass_on_small_batches() {
        let opts = VerifyOptions {
            states: 8,
            ..VerifyOptions::default()
        };
        for scenario in [Scenario::Square, Scenario::Star] {
            let checks = verify(scenario, &opts).unwrap();
            let failed: Vec<_> = checks.iter().filter(|c| !c.pass).collect();
            assert!(failed.is_empty(), "{scenario}: {failed:?}");
        }
    }
}
