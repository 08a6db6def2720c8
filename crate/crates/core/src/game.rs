//! The prepare-and-measure games built on the magic square and the magic
//! star, their inequality values, and the certified guessing probability.
//!
//! Square game: inputs `(x, y, z)` select `A_x`, `B_y`, `C_z` from the grid
//! and the three observables are measured in that order. A round is valid
//! when `x = y = z` (a row, product +I) or `y = x ⊕₃ 1, z = x ⊕₃ 2` (a
//! column, product −I). The round is won when the outcome parity is even on
//! row rounds and odd on column rounds.
//!
//! Star game: input `j` selects edge `E_j`, whose four members are measured
//! in table order. The round is won when the outcome parity matches the
//! edge's product sign (odd on `E1`, even elsewhere).

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{
    bit_tuples, bits_to_string, branch_mixture, expectation_product, maximally_mixed,
    sequential_branches, sequential_probability, DensityState, PreparedBranch,
};
use crate::error::{Error, Result};
use crate::linalg::DEFAULT_TOL;
use crate::observables::{MagicSquare, MagicStar, MeasurementContext, Observable};
use crate::oracle::{max_beta_noncontextual, max_delta_noncontextual};

/// Tolerance on the "quantum value reached" constraint. Looser than the
/// numeric tolerance so that user-supplied states can satisfy it.
pub const CONSTRAINT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Square,
    Star,
}

impl Scenario {
    pub fn n_qubits(self) -> usize {
        match self {
            Scenario::Square => 2,
            Scenario::Star => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Square => "square",
            Scenario::Star => "star",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(Scenario::Square),
            "star" => Ok(Scenario::Star),
            other => Err(Error::Config(format!("unknown scenario {other:?}"))),
        }
    }
}

/// Cyclic successor on {1, 2, 3}: `((x − 1 + k) mod 3) + 1`.
pub fn mod3_next(x: u8, k: u32) -> Result<u8> {
    if !(1..=3).contains(&x) {
        return Err(Error::InputOutOfRange(x));
    }
    Ok(((u32::from(x) - 1 + k) % 3) as u8 + 1)
}

/// A valid round of the square game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct GameInputs {
    pub x: u8,
    pub y: u8,
    pub z: u8,
}

impl GameInputs {
    pub fn new(x: u8, y: u8, z: u8) -> Result<Self> {
        for v in [x, y, z] {
            if !(1..=3).contains(&v) {
                return Err(Error::InputOutOfRange(v));
            }
        }
        let uniform = x == y && y == z;
        let cyclic = y == mod3_next(x, 1)? && z == mod3_next(x, 2)?;
        if !(uniform || cyclic) {
            return Err(Error::InvalidRound(x, y, z));
        }
        Ok(Self { x, y, z })
    }

    /// `x = y = z`; otherwise the round is cyclic.
    pub fn is_uniform(&self) -> bool {
        self.x == self.y && self.y == self.z
    }

    /// Sign of `A_x B_y C_z`: +1 on uniform rounds, −1 on cyclic ones.
    pub fn product_sign(&self) -> i8 {
        if self.is_uniform() {
            1
        } else {
            -1
        }
    }
}

impl fmt::Display for GameInputs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

/// The six valid rounds in lexicographic order.
pub fn valid_rounds() -> [GameInputs; 6] {
    let r = |x, y, z| GameInputs { x, y, z };
    [
        r(1, 1, 1),
        r(1, 2, 3),
        r(2, 2, 2),
        r(2, 3, 1),
        r(3, 1, 2),
        r(3, 3, 3),
    ]
}

/// Even parity on uniform rounds, odd parity on cyclic rounds.
pub fn winning_condition(inputs: GameInputs, a: u8, b: u8, c: u8) -> bool {
    let parity = (a ^ b ^ c) & 1;
    if inputs.is_uniform() {
        parity == 0
    } else {
        parity == 1
    }
}

/// [`winning_condition`] on raw indices; rejects invalid rounds.
pub fn winning_condition_raw(x: u8, y: u8, z: u8, a: u8, b: u8, c: u8) -> Result<bool> {
    Ok(winning_condition(GameInputs::new(x, y, z)?, a, b, c))
}

/// Star-game win: outcome parity agrees with the edge's product sign.
pub fn star_winning_condition(edge: &MeasurementContext, outcomes: &[u8]) -> bool {
    let parity = outcomes.iter().fold(0u8, |p, b| p ^ (b & 1));
    if edge.expected_product_sign() < 0 {
        parity == 1
    } else {
        parity == 0
    }
}

/// Where the largest joint probability was found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuessArgmax {
    /// `"(x,y,z)"` for the square, `"E<j>"` for the star.
    pub inputs: String,
    pub outcomes: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Guess {
    pub value: f64,
    pub argmax: GuessArgmax,
    /// Δ for the square, β for the star.
    pub inequality_value: f64,
    /// Whether the inequality reached its quantum maximum within
    /// [`CONSTRAINT_TOL`].
    pub constraint_satisfied: bool,
}

/// `−log₂ G`.
pub fn min_entropy(g: f64) -> Result<f64> {
    if !(g > 0.0 && g <= 1.0) {
        return Err(Error::GuessingOutOfRange(g));
    }
    Ok(-g.log2())
}

/// Maximum, first in iteration order wins ties.
fn argmax_first<T>(items: impl Iterator<Item = (f64, T)>) -> Option<(f64, T)> {
    items.fold(None, |best, (v, t)| match best {
        Some((b, _)) if v <= b => best,
        _ => Some((v, t)),
    })
}

/// The magic-square game.
#[derive(Debug, Clone)]
pub struct SquareGame {
    square: MagicSquare,
    tol: f64,
}

impl Default for SquareGame {
    fn default() -> Self {
        Self::new()
    }
}

impl SquareGame {
    pub const QUANTUM_DELTA: f64 = 6.0;

    pub fn new() -> Self {
        Self::with_tolerance(DEFAULT_TOL)
    }

    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            square: MagicSquare::new(),
            tol,
        }
    }

    pub fn square(&self) -> &MagicSquare {
        &self.square
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// `(A_x, B_y, C_z)` in measurement order.
    pub fn triple(&self, inputs: GameInputs) -> [&Observable; 3] {
        [
            self.square.a(inputs.x),
            self.square.b(inputs.y),
            self.square.c(inputs.z),
        ]
    }

    /// Commuting context `(A_x, B_y, C_z)` for the round, validated.
    pub fn context_for(&self, inputs: GameInputs) -> Result<MeasurementContext> {
        MeasurementContext::new(
            inputs.to_string(),
            self.triple(inputs).into_iter().cloned().collect(),
            inputs.product_sign(),
            self.tol,
        )
    }

    fn check_dim(&self, rho: &DensityState) -> Result<()> {
        if rho.dim() != 4 {
            return Err(Error::DimensionMismatch(rho.dim(), 4));
        }
        Ok(())
    }

    /// `P(a, b, c | x, y, z)` by the sequential formula.
    pub fn probability(&self, rho: &DensityState, inputs: GameInputs, bits: [u8; 3]) -> Result<f64> {
        let [a, b, c] = self.triple(inputs);
        sequential_probability(rho, &[(a, bits[0]), (b, bits[1]), (c, bits[2])], self.tol)
    }

    /// ⟨R1⟩+⟨R2⟩+⟨R3⟩−⟨L1⟩−⟨L2⟩−⟨L3⟩.
    pub fn delta(&self, rho: &DensityState) -> Result<f64> {
        self.check_dim(rho)?;
        let mut total = 0.0;
        for ctx in self.square.rows() {
            total += expectation_product(rho, ctx, self.tol)?;
        }
        for ctx in self.square.columns() {
            total -= expectation_product(rho, ctx, self.tol)?;
        }
        Ok(total)
    }

    /// Uniform average over the six rounds of the probability of winning,
    /// each term summed from sequential probabilities.
    pub fn win_probability(&self, rho: &DensityState) -> Result<f64> {
        self.check_dim(rho)?;
        let mut total = 0.0;
        for inputs in valid_rounds() {
            for t in bit_tuples(3) {
                if winning_condition(inputs, t[0], t[1], t[2]) {
                    total += self.probability(rho, inputs, [t[0], t[1], t[2]])?;
                }
            }
        }
        Ok(total / 6.0)
    }

    /// `Σ α·P` with `α = (−1)^{a⊕b⊕c}` on uniform rounds and
    /// `−(−1)^{a⊕b⊕c}` on cyclic rounds. Equals Δ.
    pub fn alpha_weighted_sum(&self, rho: &DensityState) -> Result<f64> {
        self.check_dim(rho)?;
        let mut total = 0.0;
        for inputs in valid_rounds() {
            for t in bit_tuples(3) {
                let parity_sign = if (t[0] ^ t[1] ^ t[2]) == 0 { 1.0 } else { -1.0 };
                let alpha = f64::from(inputs.product_sign()) * parity_sign;
                total += alpha * self.probability(rho, inputs, [t[0], t[1], t[2]])?;
            }
        }
        Ok(total)
    }

    /// Largest `P(a,b,c|x,y,z)` over the six rounds and eight outcomes;
    /// ties go to the lexicographically first `(x,y,z,a,b,c)`.
    pub fn guessing_probability(&self, rho: &DensityState) -> Result<Guess> {
        self.check_dim(rho)?;
        let mut cells = Vec::with_capacity(48);
        for inputs in valid_rounds() {
            for t in bit_tuples(3) {
                let p = self.probability(rho, inputs, [t[0], t[1], t[2]])?;
                cells.push((p, (inputs, t)));
            }
        }
        let (value, (inputs, bits)) = argmax_first(cells.into_iter()).expect("48 cells");
        let delta = self.delta(rho)?;
        Ok(Guess {
            value,
            argmax: GuessArgmax {
                inputs: inputs.to_string(),
                outcomes: bits_to_string(&bits),
            },
            inequality_value: delta,
            constraint_satisfied: (delta - Self::QUANTUM_DELTA).abs() <= CONSTRAINT_TOL,
        })
    }

    /// The six Alice-side preparations `(A_x, B_y)` used by the game.
    pub fn preparation_pairs(&self) -> Vec<(&Observable, &Observable)> {
        valid_rounds()
            .iter()
            .map(|r| (self.square.a(r.x), self.square.b(r.y)))
            .collect()
    }

    /// Runs every preparation `(A_x, B_y)` on `I/4` and checks that each
    /// probability-weighted mixture of post-measurement states is again `I/4`.
    pub fn preparation_equivalence_check(&self, tol: f64) -> Result<PreparationReport> {
        let rho = maximally_mixed(2)?;
        let mut preparations = Vec::new();
        let mut decompositions: Vec<Vec<PreparedBranch>> = Vec::new();
        for (a, b) in self.preparation_pairs() {
            let branches = sequential_branches(&rho, &[a, b], self.tol)?;
            let mixture = branch_mixture(&branches)?;
            let deviation = mixture.max_abs_diff(rho.matrix())?;
            let all_pure = branches.iter().all(|br| (br.state.purity() - 1.0).abs() <= tol);
            preparations.push(PreparationEntry {
                label: format!("{}{}", a.label(), b.label()),
                branch_weights: branches.iter().map(|br| br.probability).collect(),
                mixture_deviation: deviation,
                equals_maximally_mixed: deviation <= tol,
                pure_branches: all_pure,
            });
            decompositions.push(branches);
        }
        let mut distinct_pairs = Vec::new();
        for i in 0..decompositions.len() {
            for j in (i + 1)..decompositions.len() {
                if !same_decomposition(&decompositions[i], &decompositions[j], tol)? {
                    distinct_pairs.push((
                        preparations[i].label.clone(),
                        preparations[j].label.clone(),
                    ));
                }
            }
        }
        Ok(PreparationReport {
            all_equal_maximally_mixed: preparations.iter().all(|p| p.equals_maximally_mixed),
            preparations,
            distinct_decomposition_pairs: distinct_pairs,
            tolerance: tol,
        })
    }
}

/// Same set of branch states, each matched within `tol`.
fn same_decomposition(a: &[PreparedBranch], b: &[PreparedBranch], tol: f64) -> Result<bool> {
    if a.len() != b.len() {
        return Ok(false);
    }
    for x in a {
        let mut found = false;
        for y in b {
            if x.state.matrix().approx_eq(y.state.matrix(), tol)? {
                found = true;
                break;
            }
        }
        if !found {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Serialize)]
pub struct PreparationEntry {
    /// e.g. `"A1B1"`.
    pub label: String,
    pub branch_weights: Vec<f64>,
    pub mixture_deviation: f64,
    pub equals_maximally_mixed: bool,
    pub pure_branches: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PreparationReport {
    pub preparations: Vec<PreparationEntry>,
    pub all_equal_maximally_mixed: bool,
    /// Preparation pairs whose pure-state decompositions differ.
    pub distinct_decomposition_pairs: Vec<(String, String)>,
    pub tolerance: f64,
}

/// The magic-star game.
#[derive(Debug, Clone)]
pub struct StarGame {
    star: MagicStar,
    tol: f64,
}

impl Default for StarGame {
    fn default() -> Self {
        Self::new()
    }
}

impl StarGame {
    pub const QUANTUM_BETA: f64 = 5.0;

    pub fn new() -> Self {
        Self::with_tolerance(DEFAULT_TOL)
    }

    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            star: MagicStar::new(),
            tol,
        }
    }

    pub fn star(&self) -> &MagicStar {
        &self.star
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    fn check_dim(&self, rho: &DensityState) -> Result<()> {
        if rho.dim() != 8 {
            return Err(Error::DimensionMismatch(rho.dim(), 8));
        }
        Ok(())
    }

    /// `P(e | E_j)` by the sequential formula over the edge's members.
    pub fn probability(&self, rho: &DensityState, edge: usize, bits: &[u8]) -> Result<f64> {
        let members = self.star.edge(edge).members();
        assert_eq!(members.len(), bits.len(), "one bit per edge member");
        let seq: Vec<_> = members.iter().zip(bits.iter().copied()).collect();
        sequential_probability(rho, &seq, self.tol)
    }

    /// −⟨E1⟩+⟨E2⟩+⟨E3⟩+⟨E4⟩+⟨E5⟩.
    pub fn beta(&self, rho: &DensityState) -> Result<f64> {
        self.check_dim(rho)?;
        let mut total = 0.0;
        for edge in self.star.edges() {
            let sign = f64::from(edge.expected_product_sign());
            total += sign * expectation_product(rho, edge, self.tol)?;
        }
        Ok(total)
    }

    /// Average over the five edges of the probability that the outcome
    /// parity matches the edge sign.
    pub fn win_probability(&self, rho: &DensityState) -> Result<f64> {
        self.check_dim(rho)?;
        let mut total = 0.0;
        for (j, edge) in self.star.edges().iter().enumerate() {
            for t in bit_tuples(4) {
                if star_winning_condition(edge, &t) {
                    total += self.probability(rho, j + 1, &t)?;
                }
            }
        }
        Ok(total / self.star.edges().len() as f64)
    }

    /// Largest `P(e | E_j)` over 5 edges × 16 outcomes; ties go to the first
    /// `(j, e)` in lexicographic order.
    pub fn guessing_probability(&self, rho: &DensityState) -> Result<Guess> {
        self.check_dim(rho)?;
        let mut cells = Vec::with_capacity(80);
        for j in 1..=self.star.edges().len() {
            for t in bit_tuples(4) {
                cells.push((self.probability(rho, j, &t)?, (j, t)));
            }
        }
        let (value, (j, bits)) = argmax_first(cells.into_iter()).expect("80 cells");
        let beta = self.beta(rho)?;
        Ok(Guess {
            value,
            argmax: GuessArgmax {
                inputs: format!("E{j}"),
                outcomes: bits_to_string(&bits),
            },
            inequality_value: beta,
            constraint_satisfied: (beta - Self::QUANTUM_BETA).abs() <= CONSTRAINT_TOL,
        })
    }
}

/// A named pass/fail flag with the tolerance it was checked at.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub tolerance: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            pass,
            tolerance,
        }
    }
}

/// Exact certification of one state in one scenario.
#[derive(Debug, Clone, Serialize)]
pub struct CertificationReport {
    pub scenario: Scenario,
    /// Δ (square) or β (star).
    pub delta_or_beta: f64,
    pub classical_bound: f64,
    pub win_probability: f64,
    pub guessing_probability: f64,
    pub argmax: GuessArgmax,
    pub min_entropy_bits: f64,
    pub state_descriptor: String,
    pub checks: Vec<Check>,
}

impl CertificationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn inequality_name(&self) -> &'static str {
        match self.scenario {
            Scenario::Square => "delta",
            Scenario::Star => "beta",
        }
    }
}

/// Evaluates the inequality, winning probability and guessing probability
/// for `rho`, together with the consistency checks that tie them together.
pub fn certify(
    scenario: Scenario,
    rho: &DensityState,
    state_descriptor: &str,
    tol: f64,
) -> Result<CertificationReport> {
    match scenario {
        Scenario::Square => {
            let game = SquareGame::with_tolerance(tol);
            let delta = game.delta(rho)?;
            let win = game.win_probability(rho)?;
            let alpha = game.alpha_weighted_sum(rho)?;
            let guess = game.guessing_probability(rho)?;
            let bound = f64::from(max_delta_noncontextual().max_value);
            let h = min_entropy(guess.value)?;
            let checks = vec![
                Check::new("delta_reaches_quantum_value", guess.constraint_satisfied, CONSTRAINT_TOL),
                Check::new("delta_exceeds_classical_bound", delta > bound + tol, tol),
                Check::new("win_probability_identity", (win - 0.5 * (1.0 + delta / 6.0)).abs() <= tol, tol),
                Check::new("alpha_sum_equals_delta", (alpha - delta).abs() <= tol, tol),
                Check::new("min_entropy_consistent", (h + guess.value.log2()).abs() <= tol, tol),
            ];
            Ok(CertificationReport {
                scenario,
                delta_or_beta: delta,
                classical_bound: bound,
                win_probability: win,
                guessing_probability: guess.value,
                argmax: guess.argmax,
                min_entropy_bits: h,
                state_descriptor: state_descriptor.to_string(),
                checks,
            })
        }
        Scenario::Star => {
            let game = StarGame::with_tolerance(tol);
            let beta = game.beta(rho)?;
            let win = game.win_probability(rho)?;
            let guess = game.guessing_probability(rho)?;
            let bound = f64::from(max_beta_noncontextual().max_value);
            let h = min_entropy(guess.value)?;
            let checks = vec![
                Check::new("beta_reaches_quantum_value", guess.constraint_satisfied, CONSTRAINT_TOL),
                Check::new("beta_exceeds_classical_bound", beta > bound + tol, tol),
                Check::new("win_probability_identity", (win - 0.5 * (1.0 + beta / 5.0)).abs() <= tol, tol),
                Check::new("min_entropy_consistent", (h + guess.value.log2()).abs() <= tol, tol),
            ];
            Ok(CertificationReport {
                scenario,
                delta_or_beta: beta,
                classical_bound: bound,
                win_probability: win,
                guessing_probability: guess.value,
                argmax: guess.argmax,
                min_entropy_bits: h,
                state_descriptor: state_descriptor.to_string(),
                checks,
            })
        }
    }
}

/// Outcome of the random-restart search for small guessing probability.
/// This is numerical evidence only.
#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub scenario: Scenario,
    pub restarts: usize,
    pub steps_per_restart: usize,
    pub seed: u64,
    pub best_guessing_probability: f64,
    pub best_restart: usize,
    pub best_purity: f64,
}

/// Random-restart hill climbing over the state space, minimizing G among
/// states that keep the inequality at its quantum value.
///
/// Restart `r` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `r`,
/// so the merged result does not depend on scheduling.
pub fn search_min_guessing(
    scenario: Scenario,
    restarts: usize,
    steps: usize,
    seed: u64,
) -> Result<SearchReport> {
    let dim = 1usize << scenario.n_qubits();
    let guess = |rho: &DensityState| -> Result<Guess> {
        match scenario {
            Scenario::Square => SquareGame::new().guessing_probability(rho),
            Scenario::Star => StarGame::new().guessing_probability(rho),
        }
    };
    let results: Vec<Result<(f64, f64)>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let rank = rng.random_range(1..=dim);
            let mut current = DensityState::random(dim, rank, &mut rng);
            let mut g = guess(&current)?;
            for _ in 0..steps {
                let target = DensityState::random(dim, rng.random_range(1..=dim), &mut rng);
                let w: f64 = rng.random_range(0.0..0.5);
                let candidate = current.mix(&target, w)?;
                let cg = guess(&candidate)?;
                if cg.constraint_satisfied && cg.value < g.value {
                    current = candidate;
                    g = cg;
                }
            }
            Ok((g.value, current.purity()))
        })
        .collect();
    let mut best: Option<(usize, f64, f64)> = None;
    for (r, res) in results.into_iter().enumerate() {
        let (g, purity) = res?;
        if best.is_none_or(|(_, bg, _)| g < bg) {
            best = Some((r, g, purity));
        }
    }
    let (best_restart, best_g, best_purity) =
        best.ok_or_else(|| Error::Config("search needs at least one restart".into()))?;
    Ok(SearchReport {
        scenario,
        restarts,
        steps_per_restart: steps,
        seed,
        best_guessing_probability: best_g,
        best_restart,
        best_purity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mod3_examples() {
        assert_eq!(mod3_next(1, 1).unwrap(), 2);
        assert_eq!(mod3_next(3, 1).unwrap(), 1);
        assert_eq!(mod3_next(2, 2).unwrap(), 1);
        assert!(matches!(mod3_next(0, 1), Err(Error::InputOutOfRange(0))));
        assert!(matches!(mod3_next(4, 1), Err(Error::InputOutOfRange(4))));
    }

    #[test]
    fn game_inputs_validation() {
        assert!(GameInputs::new(1, 1, 1).is_ok());
        assert!(GameInputs::new(2, 3, 1).is_ok());
        assert!(matches!(GameInputs::new(1, 3, 2), Err(Error::InvalidRound(1, 3, 2))));
        assert!(matches!(GameInputs::new(1, 1, 2), Err(Error::InvalidRound(..))));
        assert!(matches!(GameInputs::new(0, 1, 2), Err(Error::InputOutOfRange(0))));
        let all: Vec<_> = (1..=3)
            .flat_map(|x| (1..=3).flat_map(move |y| (1..=3).map(move |z| (x, y, z))))
            .filter_map(|(x, y, z)| GameInputs::new(x, y, z).ok())
            .collect();
        assert_eq!(all, valid_rounds());
    }

    #[test]
    fn winning_rule() {
        assert!(winning_condition_raw(1, 1, 1, 0, 0, 0).unwrap());
        assert!(!winning_condition_raw(1, 2, 3, 0, 0, 0).unwrap());
        assert!(winning_condition_raw(1, 1, 1, 1, 1, 0).unwrap());
        assert!(winning_condition_raw(1, 2, 3, 1, 0, 0).unwrap());
        assert!(winning_condition_raw(1, 3, 2, 0, 0, 0).is_err());
    }

    #[test]
    fn context_for_rounds() {
        let game = SquareGame::new();
        let ctx = game.context_for(GameInputs::new(1, 1, 1).unwrap()).unwrap();
        let f: Vec<_> = ctx.members().iter().map(|o| o.factor_string()).collect();
        assert_eq!(f, ["XX", "ZY", "YZ"]);
        assert_eq!(ctx.expected_product_sign(), 1);
        let ctx = game.context_for(GameInputs::new(1, 2, 3).unwrap()).unwrap();
        let f: Vec<_> = ctx.members().iter().map(|o| o.factor_string()).collect();
        assert_eq!(f, ["XX", "YY", "ZZ"]);
        assert_eq!(ctx.expected_product_sign(), -1);
        for r in valid_rounds() {
            game.context_for(r).unwrap();
        }
    }

    #[test]
    fn min_entropy_values() {
        assert!((min_entropy(0.25).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(min_entropy(1.0).unwrap(), 0.0);
        assert!((min_entropy(0.125).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(min_entropy(0.0), Err(Error::GuessingOutOfRange(_))));
        assert!(matches!(min_entropy(1.5), Err(Error::GuessingOutOfRange(_))));
        assert!(min_entropy(f64::NAN).is_err());
    }

    #[test]
    fn maximally_mixed_square_certificate() {
        let rho = maximally_mixed(2).unwrap();
        let rep = certify(Scenario::Square, &rho, "maximally-mixed", 1e-9).unwrap();
        assert!((rep.delta_or_beta - 6.0).abs() < 1e-12);
        assert_eq!(rep.classical_bound, 4.0);
        assert!((rep.win_probability - 1.0).abs() < 1e-12);
        assert!((rep.guessing_probability - 0.25).abs() < 1e-12);
        assert!((rep.min_entropy_bits - 2.0).abs() < 1e-9);
        assert_eq!(rep.argmax.inputs, "(1,1,1)");
        assert_eq!(rep.argmax.outcomes, "000");
        assert!(rep.all_pass(), "{:?}", rep.checks);
    }

    #[test]
    fn common_eigenstate_has_no_randomness() {
        let game = SquareGame::new();
        let sq = game.square();
        let rho =
            DensityState::common_eigenstate(&[(sq.a(1), 0), (sq.b(1), 0), (sq.c(1), 0)]).unwrap();
        let g = game.guessing_probability(&rho).unwrap();
        assert!((g.value - 1.0).abs() < 1e-12);
        assert!(g.constraint_satisfied);
        assert_eq!(min_entropy(g.value.min(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn constraint_flag_for_wrong_dimension_and_rejection() {
        let game = SquareGame::new();
        let rho3 = maximally_mixed(3).unwrap();
        assert!(matches!(game.delta(&rho3), Err(Error::DimensionMismatch(8, 4))));
        let star = StarGame::new();
        assert!(matches!(
            star.beta(&maximally_mixed(2).unwrap()),
            Err(Error::DimensionMismatch(4, 8))
        ));
    }

    #[test]
    fn maximally_mixed_star_certificate() {
        let rho = maximally_mixed(3).unwrap();
        let rep = certify(Scenario::Star, &rho, "maximally-mixed", 1e-9).unwrap();
        assert!((rep.delta_or_beta - 5.0).abs() < 1e-12);
        assert_eq!(rep.classical_bound, 3.0);
        assert!((rep.guessing_probability - 0.125).abs() < 1e-12);
        assert!((rep.min_entropy_bits - 3.0).abs() < 1e-9);
        assert_eq!(rep.argmax.inputs, "E1");
        assert_eq!(rep.argmax.outcomes, "0001");
        assert!(rep.all_pass(), "{:?}", rep.checks);
    }

    #[test]
    fn star_even_parity_on_e1_vanishes() {
        let game = StarGame::new();
        let rho = maximally_mixed(3).unwrap();
        for t in bit_tuples(4) {
            let p = game.probability(&rho, 1, &t).unwrap();
            if t.iter().fold(0, |a, b| a ^ b) == 0 {
                assert!(p.abs() < 1e-12);
            } else {
                assert!((p - 0.125).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn preparation_equivalence() {
        let rep = SquareGame::new().preparation_equivalence_check(1e-12).unwrap();
        assert_eq!(rep.preparations.len(), 6);
        assert!(rep.all_equal_maximally_mixed);
        let p1 = &rep.preparations[0];
        assert_eq!(p1.label, "A1B1");
        assert!(p1.pure_branches);
        assert_eq!(p1.branch_weights.len(), 4);
        assert!(p1.branch_weights.iter().all(|w| (w - 0.25).abs() < 1e-12));
        assert!(rep
            .distinct_decomposition_pairs
            .iter()
            .any(|(a, b)| a == "A1B1" && b == "A2B3"));
    }

    #[test]
    fn search_is_deterministic_and_bounded_below() {
        let a = search_min_guessing(Scenario::Square, 4, 20, 7).unwrap();
        let b = search_min_guessing(Scenario::Square, 4, 20, 7).unwrap();
        assert_eq!(a.best_guessing_probability, b.best_guessing_probability);
        assert_eq!(a.best_restart, b.best_restart);
        // four allowed outcomes per round sum to one
        assert!(a.best_guessing_probability >= 0.25 - 1e-12);
        assert!(a.best_guessing_probability <= 1.0 + 1e-12);
    }
}
