//! Round-by-round Monte-Carlo simulation of the games.
//!
//! Each round draws its input uniformly from the valid rounds (or edges) and
//! then measures the selected observables one at a time, sampling each
//! outcome from the Born rule and collapsing the state with the Lüders rule
//! before the next measurement.
//!
//! Randomness: round `i` uses `ChaCha8Rng::seed_from_u64(seed)` switched to
//! stream `i`. The first draw picks the input, then one `f64` per
//! measurement decides its outcome (`u < P(0)` gives bit 0). Rounds never
//! share generator state, so parallel and serial execution produce the same
//! records.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{bit_tuples, bits_to_string, post_measurement_state, DensityState};
use crate::error::{Error, Result};
use crate::game::{
    min_entropy, star_winning_condition, valid_rounds, winning_condition, GameInputs, Scenario,
    SquareGame, StarGame,
};
use crate::linalg::DEFAULT_TOL;
use crate::observables::Observable;

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub scenario: Scenario,
    pub state: DensityState,
    pub state_descriptor: String,
    pub rounds: usize,
    pub seed: u64,
    pub tol: f64,
}

impl SimulationConfig {
    pub fn new(
        scenario: Scenario,
        state: DensityState,
        state_descriptor: impl Into<String>,
        rounds: usize,
        seed: u64,
    ) -> Self {
        Self {
            scenario,
            state,
            state_descriptor: state_descriptor.into(),
            rounds,
            seed,
            tol: DEFAULT_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        let dim = 1usize << self.scenario.n_qubits();
        if self.state.dim() != dim {
            return Err(Error::DimensionMismatch(self.state.dim(), dim));
        }
        DensityState::new(self.state.matrix().clone(), self.tol)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(untagged)]
pub enum RoundInputs {
    Square(GameInputs),
    /// 1-based edge index.
    Star(usize),
}

impl RoundInputs {
    pub fn label(&self) -> String {
        match self {
            RoundInputs::Square(g) => g.to_string(),
            RoundInputs::Star(j) => format!("E{j}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub round_index: u64,
    pub inputs: RoundInputs,
    pub outcomes: Vec<u8>,
    pub won: bool,
}

/// Measures `members` in order, sampling each outcome and collapsing.
fn measure_sequence(
    rho: &DensityState,
    members: &[&Observable],
    rng: &mut ChaCha8Rng,
    tol: f64,
) -> Result<Vec<u8>> {
    let mut state = rho.clone();
    let mut bits = Vec::with_capacity(members.len());
    for obs in members {
        let p0 = 0.5 * (1.0 + state.expectation(obs.matrix(), tol)?);
        let u: f64 = rng.random();
        let preferred = if u < p0 { 0 } else { 1 };
        let (bit, next) = match post_measurement_state(&state, obs, preferred, tol) {
            Ok((_, s)) => (preferred, s),
            // the draw landed on a branch of negligible weight
            Err(Error::ZeroProbabilityBranch(_)) => {
                let other = 1 - preferred;
                (other, post_measurement_state(&state, obs, other, tol)?.1)
            }
            Err(e) => return Err(e),
        };
        bits.push(bit);
        state = next;
    }
    Ok(bits)
}

fn round_rng(seed: u64, round_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round_index);
    rng
}

/// Runs `cfg.rounds` independent rounds. Identical configs give identical
/// record lists.
pub fn run_trials(cfg: &SimulationConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    match cfg.scenario {
        Scenario::Square => {
            let game = SquareGame::with_tolerance(cfg.tol);
            let rounds = valid_rounds();
            (0..cfg.rounds as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = round_rng(cfg.seed, i);
                    let inputs = rounds[rng.random_range(0..rounds.len())];
                    let outcomes = measure_sequence(&cfg.state, &game.triple(inputs), &mut rng, cfg.tol)?;
                    let won = winning_condition(inputs, outcomes[0], outcomes[1], outcomes[2]);
                    Ok(TrialRecord {
                        round_index: i,
                        inputs: RoundInputs::Square(inputs),
                        outcomes,
                        won,
                    })
                })
                .collect()
        }
        Scenario::Star => {
            let game = StarGame::with_tolerance(cfg.tol);
            let edges = game.star().edges();
            (0..cfg.rounds as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = round_rng(cfg.seed, i);
                    let j = rng.random_range(0..edges.len());
                    let members: Vec<_> = edges[j].members().iter().collect();
                    let outcomes = measure_sequence(&cfg.state, &members, &mut rng, cfg.tol)?;
                    let won = star_winning_condition(&edges[j], &outcomes);
                    Ok(TrialRecord {
                        round_index: i,
                        inputs: RoundInputs::Star(j + 1),
                        outcomes,
                        won,
                    })
                })
                .collect()
        }
    }
}

/// A round type with its outcome tuples and their probabilities.
type RoundTable = (RoundInputs, Vec<(Vec<u8>, f64)>);

/// Cross-check sampler: draws each round's outcome tuple directly from the
/// precomputed joint distribution (inverse CDF over lexicographic outcome
/// order) instead of measuring sequentially.
pub fn run_trials_joint(cfg: &SimulationConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let table: Vec<RoundTable> = match cfg.scenario {
        Scenario::Square => {
            let game = SquareGame::with_tolerance(cfg.tol);
            valid_rounds()
                .iter()
                .map(|&r| {
                    let probs = bit_tuples(3)
                        .map(|t| {
                            let p = game.probability(&cfg.state, r, [t[0], t[1], t[2]])?;
                            Ok((t, p))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok((RoundInputs::Square(r), probs))
                })
                .collect::<Result<_>>()?
        }
        Scenario::Star => {
            let game = StarGame::with_tolerance(cfg.tol);
            (1..=game.star().edges().len())
                .map(|j| {
                    let probs = bit_tuples(4)
                        .map(|t| {
                            let p = game.probability(&cfg.state, j, &t)?;
                            Ok((t, p))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok((RoundInputs::Star(j), probs))
                })
                .collect::<Result<_>>()?
        }
    };
    let star = StarGame::new();
    Ok((0..cfg.rounds as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = round_rng(cfg.seed, i);
            let (inputs, probs) = &table[rng.random_range(0..table.len())];
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = &probs.last().expect("nonempty").0;
            for (bits, p) in probs {
                acc += p.max(0.0);
                if u < acc {
                    chosen = bits;
                    break;
                }
            }
            let won = match inputs {
                RoundInputs::Square(g) => winning_condition(*g, chosen[0], chosen[1], chosen[2]),
                RoundInputs::Star(j) => star_winning_condition(star.star().edge(*j), chosen),
            };
            TrialRecord {
                round_index: i,
                inputs: *inputs,
                outcomes: chosen.clone(),
                won,
            }
        })
        .collect())
}

/// A point estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrequencyRow {
    pub inputs: String,
    pub outcomes: String,
    pub count: u64,
    pub frequency: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalReport {
    pub scenario: Scenario,
    pub rounds: usize,
    /// Δ̂ or β̂; absent unless every round type was sampled.
    pub inequality: Option<Estimate>,
    pub win_probability: Estimate,
    pub guessing_probability: Estimate,
    pub guessing_argmax: FrequencyRow,
    pub min_entropy_bits: f64,
    /// Rounds whose outcome parity violates the winning condition.
    pub forbidden_outcomes: u64,
    pub frequencies: Vec<FrequencyRow>,
}

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Empirical frequencies and estimates from a record list.
pub fn estimate(records: &[TrialRecord]) -> Result<EmpiricalReport> {
    let first = records.first().ok_or(Error::EmptyRecords)?;
    let scenario = match first.inputs {
        RoundInputs::Square(_) => Scenario::Square,
        RoundInputs::Star(_) => Scenario::Star,
    };
    let width = if scenario == Scenario::Square { 3 } else { 4 };

    let mut counts: BTreeMap<RoundInputs, BTreeMap<Vec<u8>, u64>> = BTreeMap::new();
    let mut wins: BTreeMap<RoundInputs, u64> = BTreeMap::new();
    for r in records {
        let same_kind = matches!(
            (scenario, r.inputs),
            (Scenario::Square, RoundInputs::Square(_)) | (Scenario::Star, RoundInputs::Star(_))
        );
        if !same_kind || r.outcomes.len() != width {
            return Err(Error::Config(format!(
                "record {} does not belong to a {scenario} run",
                r.round_index
            )));
        }
        *counts
            .entry(r.inputs)
            .or_default()
            .entry(r.outcomes.clone())
            .or_default() += 1;
        if r.won {
            *wins.entry(r.inputs).or_default() += 1;
        }
    }

    let star = StarGame::new();
    let sign_of = |inputs: &RoundInputs| -> f64 {
        match inputs {
            RoundInputs::Square(g) => f64::from(g.product_sign()),
            RoundInputs::Star(j) => f64::from(star.star().edge(*j).expected_product_sign()),
        }
    };

    let mut frequencies = Vec::new();
    let mut best: Option<FrequencyRow> = None;
    let mut ineq = 0.0;
    let mut ineq_var = 0.0;
    let mut win_sum = 0.0;
    let mut win_var = 0.0;
    for (inputs, by_outcome) in &counts {
        let n: u64 = by_outcome.values().sum();
        let mut parity_balance = 0i64;
        for bits in bit_tuples(width) {
            let count = by_outcome.get(&bits).copied().unwrap_or(0);
            let f = count as f64 / n as f64;
            let parity = bits.iter().fold(0u8, |p, b| p ^ b);
            parity_balance += if parity == 0 { count as i64 } else { -(count as i64) };
            let row = FrequencyRow {
                inputs: inputs.label(),
                outcomes: bits_to_string(&bits),
                count,
                frequency: f,
                std_error: binomial_se(f, n),
            };
            if best.as_ref().is_none_or(|b| f > b.frequency) {
                best = Some(row.clone());
            }
            frequencies.push(row);
        }
        // correlator ⟨product⟩ = P(even) − P(odd)
        let corr = parity_balance as f64 / n as f64;
        ineq += sign_of(inputs) * corr;
        ineq_var += (1.0 - corr * corr).max(0.0) / n as f64;
        let w = wins.get(inputs).copied().unwrap_or(0) as f64 / n as f64;
        win_sum += w;
        win_var += binomial_se(w, n).powi(2);
    }
    let types = counts.len() as f64;
    let expected_types = match scenario {
        Scenario::Square => 6,
        Scenario::Star => 5,
    };
    let best = best.expect("at least one record");
    let forbidden = records.iter().filter(|r| !r.won).count() as u64;
    Ok(EmpiricalReport {
        scenario,
        rounds: records.len(),
        inequality: (counts.len() == expected_types).then(|| Estimate {
            value: ineq,
            std_error: ineq_var.sqrt(),
        }),
        win_probability: Estimate {
            value: win_sum / types,
            std_error: win_var.sqrt() / types,
        },
        guessing_probability: Estimate {
            value: best.frequency,
            std_error: best.std_error,
        },
        min_entropy_bits: min_entropy(best.frequency)?,
        guessing_argmax: best,
        forbidden_outcomes: forbidden,
        frequencies,
    })
}

/// Largest deviation between empirical and exact probabilities, in units of
/// the binomial standard error of the exact value. Cells whose exact
/// probability is 0 or 1 must match exactly; a mismatch is counted in
/// `exact_mismatches`.
#[derive(Debug, Clone, Serialize)]
pub struct FidelitySummary {
    pub max_z: f64,
    pub exact_mismatches: u64,
}

pub fn compare_with_exact(
    report: &EmpiricalReport,
    rho: &DensityState,
    tol: f64,
) -> Result<FidelitySummary> {
    let square = SquareGame::with_tolerance(tol);
    let star = StarGame::with_tolerance(tol);
    let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
    for row in &report.frequencies {
        *totals.entry(row.inputs.as_str()).or_default() += row.count;
    }
    let mut max_z: f64 = 0.0;
    let mut mismatches = 0;
    for row in &report.frequencies {
        let bits: Vec<u8> = row.outcomes.bytes().map(|c| c - b'0').collect();
        let p = match report.scenario {
            Scenario::Square => {
                let digits: Vec<u8> = row
                    .inputs
                    .bytes()
                    .filter(u8::is_ascii_digit)
                    .map(|c| c - b'0')
                    .collect();
                let inputs = GameInputs::new(digits[0], digits[1], digits[2])?;
                square.probability(rho, inputs, [bits[0], bits[1], bits[2]])?
            }
            Scenario::Star => {
                let j: usize = row.inputs[1..]
                    .parse()
                    .map_err(|_| Error::Config(format!("bad edge label {}", row.inputs)))?;
                star.probability(rho, j, &bits)?
            }
        };
        let n = totals[row.inputs.as_str()];
        if p <= tol || p >= 1.0 - tol {
            if (row.frequency - p.clamp(0.0, 1.0)).abs() > tol {
                mismatches += 1;
            }
            continue;
        }
        let z = (row.frequency - p).abs() / binomial_se(p, n);
        max_z = max_z.max(z);
    }
    Ok(FidelitySummary {
        max_z,
        exact_mismatches: mismatches,
    })
}

/// One CSV row per round:
/// `round_index,x,y,z,a,b,c,won` (square) or
/// `round_index,edge,a,b,c,d,won` (star). `won` is 1 or 0.
pub fn write_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let star = matches!(records.first().map(|r| r.inputs), Some(RoundInputs::Star(_)));
    if star {
        w.write_record(["round_index", "edge", "a", "b", "c", "d", "won"])?;
    } else {
        w.write_record(["round_index", "x", "y", "z", "a", "b", "c", "won"])?;
    }
    for r in records {
        let mut row: Vec<String> = vec![r.round_index.to_string()];
        match r.inputs {
            RoundInputs::Square(g) => {
                row.extend([g.x, g.y, g.z].iter().map(u8::to_string));
            }
            RoundInputs::Star(j) => row.push(j.to_string()),
        }
        row.extend(r.outcomes.iter().map(u8::to_string));
        row.push(if r.won { "1" } else { "0" }.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
