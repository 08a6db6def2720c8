//! Density states, Lüders measurement, and the two routes to joint outcome
//! probabilities: the sequential projector sandwich and the moment
//! expansion over products of observables.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DEFAULT_TOL};
use crate::observables::{projector, MeasurementContext, Observable};

/// A validated density matrix on 2 or 3 qubits (or any dimension, when built
/// through [`DensityState::new`]).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    matrix: ComplexMatrix,
}

impl DensityState {
    /// Validates Hermiticity, unit trace and positivity within `tol`.
    pub fn new(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        let dev = matrix.hermitian_deviation();
        if dev > tol {
            return Err(Error::NotHermitian(dev));
        }
        let tr = matrix.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::InvalidTrace(tr.re));
        }
        if !matrix.is_psd(tol) {
            return Err(Error::NotPsd(tol));
        }
        Ok(Self { matrix })
    }

    /// Normalizes `|ψ⟩⟨ψ|`. Panics on a zero vector.
    pub fn pure(psi: &[Complex64]) -> Self {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        assert!(norm > 0.0, "zero state vector");
        Self {
            matrix: ComplexMatrix::outer(psi).scale_real(1.0 / norm),
        }
    }

    /// Random state from a complex Ginibre matrix of the given rank:
    /// `G G† / Tr[G G†]`. Rank 1 gives a Haar-random pure state.
    pub fn random<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Self {
        assert!(rank >= 1 && rank <= dim, "rank must be in 1..=dim");
        let mut gauss = || Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let g: Vec<Complex64> = (0..dim * rank).map(|_| gauss()).collect();
        let gg = ComplexMatrix::from_fn(dim, |i, j| {
            (0..rank).map(|k| g[i * rank + k] * g[j * rank + k].conj()).sum()
        });
        let tr = gg.trace().re;
        Self {
            matrix: gg.scale_real(1.0 / tr),
        }
    }

    /// Normalized joint eigenprojector `Π₁Π₂⋯/Tr[⋯]` for commuting
    /// observables and the given outcome bits.
    pub fn common_eigenstate(members: &[(&Observable, u8)]) -> Result<Self> {
        let proj = ComplexMatrix::product(
            members
                .iter()
                .map(|(o, bit)| projector(o, *bit))
                .collect::<Vec<_>>()
                .iter(),
        )?;
        let tr = proj.trace().re;
        if tr <= DEFAULT_TOL {
            return Err(Error::ZeroProbabilityBranch(tr));
        }
        Self::new(proj.scale_real(1.0 / tr), DEFAULT_TOL)
    }

    /// `(1 − weight)·self + weight·other`, for weight in [0, 1].
    pub fn mix(&self, other: &Self, weight: f64) -> Result<Self> {
        assert!((0.0..=1.0).contains(&weight), "mixing weight outside [0,1]");
        let m = self
            .matrix
            .scale_real(1.0 - weight)
            .try_add(&other.matrix.scale_real(weight))?;
        Ok(Self { matrix: m })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Tr[ρ²].
    pub fn purity(&self) -> f64 {
        self.matrix
            .mul(&self.matrix)
            .expect("same dimension")
            .trace()
            .re
    }

    /// Tr[ρ M], real part. The imaginary part is checked against `tol`.
    pub fn expectation(&self, m: &ComplexMatrix, tol: f64) -> Result<f64> {
        real_within(self.matrix.mul(m)?.trace(), tol)
    }
}

/// `count` seeded random states of dimension `dim`. State `i` has rank
/// `1 + i mod dim` (so pure and mixed states alternate) and is drawn from
/// `ChaCha8Rng::seed_from_u64(seed)` on stream `i`.
pub fn random_states(dim: usize, count: usize, seed: u64) -> Vec<DensityState> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            DensityState::random(dim, 1 + i % dim, &mut rng)
        })
        .collect()
}

fn real_within(z: Complex64, tol: f64) -> Result<f64> {
    if z.im.abs() > tol {
        return Err(Error::ComplexProbability(z.im));
    }
    Ok(z.re)
}

/// `I / 2^n` for two or three qubits.
pub fn maximally_mixed(n_qubits: usize) -> Result<DensityState> {
    if !(2..=3).contains(&n_qubits) {
        return Err(Error::UnsupportedQubits(n_qubits));
    }
    let dim = 1 << n_qubits;
    Ok(DensityState {
        matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
    })
}

fn check_dims(rho: &DensityState, obs: &Observable) -> Result<()> {
    if rho.dim() != obs.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), obs.dim()));
    }
    Ok(())
}

/// Probability of obtaining the listed outcomes when the observables are
/// measured one after another with Lüders collapse in between:
///
/// `Tr[Π_{k−1}⋯Π₁ ρ Π₁⋯Π_{k−1} Π_k]`.
pub fn sequential_probability(
    rho: &DensityState,
    seq: &[(&Observable, u8)],
    tol: f64,
) -> Result<f64> {
    let ((last, last_bit), init) = seq.split_last().ok_or(Error::EmptySequence)?;
    let mut sandwiched = rho.matrix.clone();
    for (obs, bit) in init {
        check_dims(rho, obs)?;
        let p = projector(obs, *bit);
        sandwiched = p.mul(&sandwiched)?.mul(&p)?;
    }
    check_dims(rho, last)?;
    real_within(sandwiched.mul(&projector(last, *last_bit))?.trace(), tol)
}

/// Lüders update for a single projective measurement. Returns the branch
/// probability and the normalized post-measurement state.
pub fn post_measurement_state(
    rho: &DensityState,
    obs: &Observable,
    outcome: u8,
    tol: f64,
) -> Result<(f64, DensityState)> {
    check_dims(rho, obs)?;
    let p = projector(obs, outcome);
    let unnormalized = p.mul(&rho.matrix)?.mul(&p)?;
    let prob = real_within(unnormalized.trace(), tol)?;
    if prob <= tol {
        return Err(Error::ZeroProbabilityBranch(prob));
    }
    Ok((
        prob,
        DensityState {
            matrix: unnormalized.scale_real(1.0 / prob),
        },
    ))
}

fn ensure_commuting(obs: &[&Observable], tol: f64) -> Result<()> {
    for (i, a) in obs.iter().enumerate() {
        for b in &obs[i + 1..] {
            if !a.matrix().commutes_with(b.matrix(), tol)? {
                return Err(Error::NonCommuting(
                    a.label().to_string(),
                    b.label().to_string(),
                ));
            }
        }
    }
    Ok(())
}

/// Joint probability from the moment expansion over every subset `S` of the
/// observables:
///
/// `P(bits) = 2^{−k} Σ_S (−1)^{⊕_{i∈S} bit_i} ⟨Π_{i∈S} M_i⟩`.
///
/// Requires pairwise-commuting observables.
pub fn moment_probability_general(
    rho: &DensityState,
    obs: &[&Observable],
    bits: &[u8],
    tol: f64,
) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::EmptySequence);
    }
    assert_eq!(obs.len(), bits.len(), "one bit per observable");
    for o in obs {
        check_dims(rho, o)?;
    }
    ensure_commuting(obs, tol)?;
    let k = obs.len();
    let id = ComplexMatrix::identity(rho.dim());
    let mut total = 0.0;
    for subset in 0u32..(1 << k) {
        let mut prod = id.clone();
        let mut parity = 0u8;
        for (i, (o, b)) in obs.iter().zip(bits).enumerate() {
            if subset & (1 << i) != 0 {
                prod = prod.mul(o.matrix())?;
                parity ^= b & 1;
            }
        }
        let sign = if parity == 0 { 1.0 } else { -1.0 };
        total += sign * rho.expectation(&prod, tol)?;
    }
    Ok(total / f64::from(1u32 << k))
}

/// Three-observable moment expansion, written out term by term:
/// `(1/8)[1 + (−1)^a⟨A⟩ + (−1)^b⟨B⟩ + (−1)^c⟨C⟩ + (−1)^{a⊕b}⟨AB⟩
///  + (−1)^{b⊕c}⟨BC⟩ + (−1)^{a⊕c}⟨AC⟩ + (−1)^{a⊕b⊕c}⟨ABC⟩]`.
#[allow(clippy::too_many_arguments)]
pub fn moment_probability(
    rho: &DensityState,
    a_obs: &Observable,
    b_obs: &Observable,
    c_obs: &Observable,
    a: u8,
    b: u8,
    c: u8,
    tol: f64,
) -> Result<f64> {
    for o in [a_obs, b_obs, c_obs] {
        check_dims(rho, o)?;
    }
    ensure_commuting(&[a_obs, b_obs, c_obs], tol)?;
    let s = |bit: u8| if bit & 1 == 0 { 1.0 } else { -1.0 };
    let (am, bm, cm) = (a_obs.matrix(), b_obs.matrix(), c_obs.matrix());
    let ev = |m: &ComplexMatrix| rho.expectation(m, tol);
    let ab = am.mul(bm)?;
    let bc = bm.mul(cm)?;
    let ac = am.mul(cm)?;
    let abc = ab.mul(cm)?;
    let sum = 1.0
        + s(a) * ev(am)?
        + s(b) * ev(bm)?
        + s(c) * ev(cm)?
        + s(a ^ b) * ev(&ab)?
        + s(b ^ c) * ev(&bc)?
        + s(a ^ c) * ev(&ac)?
        + s(a ^ b ^ c) * ev(&abc)?;
    Ok(sum / 8.0)
}

/// `Tr[ρ · M₁M₂⋯M_k]` over the context's ordered members.
pub fn expectation_product(
    rho: &DensityState,
    ctx: &MeasurementContext,
    tol: f64,
) -> Result<f64> {
    for o in ctx.members() {
        check_dims(rho, o)?;
    }
    rho.expectation(&ctx.product()?, tol)
}

/// Iterates all bit tuples of length `k` in lexicographic order.
pub fn bit_tuples(k: usize) -> impl Iterator<Item = Vec<u8>> {
    (0u32..(1 << k)).map(move |n| {
        (0..k)
            .map(|i| ((n >> (k - 1 - i)) & 1) as u8)
            .collect()
    })
}

pub fn bits_to_string(bits: &[u8]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

/// Joint outcome distribution for one context.
#[derive(Debug, Clone, Serialize)]
pub struct OutcomeDistribution {
    pub context: String,
    pub probs: BTreeMap<String, f64>,
}

impl OutcomeDistribution {
    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    pub fn get(&self, bits: &[u8]) -> f64 {
        self.probs[&bits_to_string(bits)]
    }

    /// Range and normalization check.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.probs
            .values()
            .all(|&p| p >= -tol && p <= 1.0 + tol)
            && (self.total() - 1.0).abs() <= tol * self.probs.len() as f64
    }
}

/// Sequential probabilities of every outcome tuple for the given
/// measurement order.
pub fn joint_distribution(
    rho: &DensityState,
    label: &str,
    members: &[&Observable],
    tol: f64,
) -> Result<OutcomeDistribution> {
    let mut probs = BTreeMap::new();
    for bits in bit_tuples(members.len()) {
        let seq: Vec<_> = members.iter().copied().zip(bits.iter().copied()).collect();
        probs.insert(bits_to_string(&bits), sequential_probability(rho, &seq, tol)?);
    }
    Ok(OutcomeDistribution {
        context: label.to_string(),
        probs,
    })
}

/// One branch of a sequential preparation.
#[derive(Debug, Clone)]
pub struct PreparedBranch {
    pub outcomes: Vec<u8>,
    pub probability: f64,
    pub state: DensityState,
}

/// Measures `members` in order on `rho`, returning every nonzero branch with
/// its probability and post-measurement state.
pub fn sequential_branches(
    rho: &DensityState,
    members: &[&Observable],
    tol: f64,
) -> Result<Vec<PreparedBranch>> {
    let mut frontier = vec![PreparedBranch {
        outcomes: Vec::new(),
        probability: 1.0,
        state: rho.clone(),
    }];
    for obs in members {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for br in &frontier {
            for bit in 0..=1u8 {
                match post_measurement_state(&br.state, obs, bit, tol) {
                    Ok((p, state)) => {
                        let mut outcomes = br.outcomes.clone();
                        outcomes.push(bit);
                        next.push(PreparedBranch {
                            outcomes,
                            probability: br.probability * p,
                            state,
                        });
                    }
                    Err(Error::ZeroProbabilityBranch(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        frontier = next;
    }
    Ok(frontier)
}

/// `Σ p(bits)·ρ_bits` over all branches of a sequential measurement.
pub fn branch_mixture(branches: &[PreparedBranch]) -> Result<ComplexMatrix> {
    let first = branches.first().ok_or(Error::EmptySequence)?;
    let mut acc = ComplexMatrix::zeros(first.state.dim());
    for br in branches {
        acc = acc.try_add(&br.state.matrix.scale_real(br.probability))?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::MagicSquare;

    const TOL: f64 = 1e-9;

    #[test]
    fn maximally_mixed_states() {
        let rho = maximally_mixed(2).unwrap();
        assert_eq!(rho.matrix(), &ComplexMatrix::identity(4).scale_real(0.25));
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-15);
        let rho3 = maximally_mixed(3).unwrap();
        assert_eq!(rho3.matrix(), &ComplexMatrix::identity(8).scale_real(0.125));
        assert!(matches!(maximally_mixed(4), Err(Error::UnsupportedQubits(4))));
        assert!(matches!(maximally_mixed(1), Err(Error::UnsupportedQubits(1))));
    }

    #[test]
    fn density_validation() {
        let id = ComplexMatrix::identity(2);
        assert!(matches!(DensityState::new(id.clone(), TOL), Err(Error::InvalidTrace(_))));
        let z = ComplexMatrix::from_real_rows(&[&[1.5, 0.0], &[0.0, -0.5]]);
        assert!(matches!(DensityState::new(z, TOL), Err(Error::NotPsd(_))));
        let nh = ComplexMatrix::from_real_rows(&[&[0.5, 0.3], &[0.0, 0.5]]);
        assert!(matches!(DensityState::new(nh, TOL), Err(Error::NotHermitian(_))));
        assert!(DensityState::new(id.scale_real(0.5), TOL).is_ok());
    }

    #[test]
    fn random_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for rank in 1..=4 {
            let rho = DensityState::random(4, rank, &mut rng);
            DensityState::new(rho.matrix().clone(), TOL).unwrap();
        }
        let pure = DensityState::random(8, 1, &mut rng);
        assert!((pure.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sequential_probability_maximally_mixed_row() {
        let sq = MagicSquare::new();
        let rho = maximally_mixed(2).unwrap();
        let (a, b, c) = (sq.a(1), sq.b(1), sq.c(1));
        let p = sequential_probability(&rho, &[(a, 0), (b, 0), (c, 0)], TOL).unwrap();
        assert!((p - 0.25).abs() < 1e-12);
        let p = sequential_probability(&rho, &[(a, 0), (b, 0), (c, 1)], TOL).unwrap();
        assert!(p.abs() < 1e-12);
    }

    #[test]
    fn sequential_probability_common_eigenstate() {
        let sq = MagicSquare::new();
        let (a, b, c) = (sq.a(1), sq.b(1), sq.c(1));
        let rho = DensityState::common_eigenstate(&[(a, 0), (b, 0), (c, 0)]).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        let p = sequential_probability(&rho, &[(a, 0), (b, 0), (c, 0)], TOL).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sequential_probability_errors() {
        let sq = MagicSquare::new();
        let rho = maximally_mixed(3).unwrap();
        assert!(matches!(
            sequential_probability(&rho, &[(sq.a(1), 0)], TOL),
            Err(Error::DimensionMismatch(8, 4))
        ));
        assert!(matches!(
            sequential_probability(&rho, &[], TOL),
            Err(Error::EmptySequence)
        ));
    }

    #[test]
    fn post_measurement_examples() {
        let sq = MagicSquare::new();
        let a1 = sq.a(1);
        let rho = maximally_mixed(2).unwrap();
        let (p, state) = post_measurement_state(&rho, a1, 0, TOL).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let expected = projector(a1, 0).scale_real(0.5);
        assert!(state.matrix().approx_eq(&expected, 1e-12).unwrap());

        let eig = DensityState::common_eigenstate(&[(a1, 0), (sq.b(1), 0)]).unwrap();
        let (p, state) = post_measurement_state(&eig, a1, 0, TOL).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        assert!(state.matrix().approx_eq(eig.matrix(), 1e-12).unwrap());
        assert!(matches!(
            post_measurement_state(&eig, a1, 1, TOL),
            Err(Error::ZeroProbabilityBranch(_))
        ));
    }

    #[test]
    fn moment_expansion_maximally_mixed() {
        let sq = MagicSquare::new();
        let rho = maximally_mixed(2).unwrap();
        let (a, b, c) = (sq.a(1), sq.b(1), sq.c(1));
        let p = moment_probability(&rho, a, b, c, 0, 0, 0, TOL).unwrap();
        assert!((p - 0.25).abs() < 1e-12);
        let total: f64 = bit_tuples(3)
            .map(|t| moment_probability(&rho, a, b, c, t[0], t[1], t[2], TOL).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moment_expansion_rejects_noncommuting() {
        let sq = MagicSquare::new();
        let rho = maximally_mixed(2).unwrap();
        // A1 = XX and A2 = ZX anticommute
        let err = moment_probability(&rho, sq.a(1), sq.a(2), sq.c(1), 0, 0, 0, TOL).unwrap_err();
        assert!(matches!(err, Error::NonCommuting(_, _)));
    }

    #[test]
    fn moment_general_matches_triple_form() {
        let sq = MagicSquare::new();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = DensityState::random(4, 2, &mut rng);
        let (a, b, c) = (sq.a(2), sq.b(3), sq.c(1));
        for t in bit_tuples(3) {
            let p1 = moment_probability(&rho, a, b, c, t[0], t[1], t[2], TOL).unwrap();
            let p2 = moment_probability_general(&rho, &[a, b, c], &t, TOL).unwrap();
            assert!((p1 - p2).abs() < 1e-12);
        }
    }

    #[test]
    fn expectation_products_are_state_independent() {
        let sq = MagicSquare::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = DensityState::random(4, 3, &mut rng);
        for ctx in sq.rows() {
            assert!((expectation_product(&rho, ctx, TOL).unwrap() - 1.0).abs() < 1e-12);
        }
        for ctx in sq.columns() {
            assert!((expectation_product(&rho, ctx, TOL).unwrap() + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bit_tuples_order() {
        let all: Vec<_> = bit_tuples(2).map(|t| bits_to_string(&t)).collect();
        assert_eq!(all, ["00", "01", "10", "11"]);
    }

    #[test]
    fn branches_and_mixture() {
        let sq = MagicSquare::new();
        let rho = maximally_mixed(2).unwrap();
        let branches = sequential_branches(&rho, &[sq.a(1), sq.b(1)], TOL).unwrap();
        assert_eq!(branches.len(), 4);
        for br in &branches {
            assert!((br.probability - 0.25).abs() < 1e-12);
            assert!((br.state.purity() - 1.0).abs() < 1e-12);
        }
        let mix = branch_mixture(&branches).unwrap();
        assert!(mix.approx_eq(rho.matrix(), 1e-12).unwrap());
    }

    #[test]
    fn joint_distribution_valid() {
        let sq = MagicSquare::new();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = DensityState::random(4, 1, &mut rng);
        let d = joint_distribution(&rho, "L2", &[sq.a(3), sq.b(1), sq.c(2)], TOL).unwrap();
        assert!(d.is_valid(TOL));
        assert_eq!(d.probs.len(), 8);
    }
}
