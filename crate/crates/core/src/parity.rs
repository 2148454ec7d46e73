//! Block-code combinatorics and parity-guessing probabilities.
//!
//! A secret parity bit `b` is spread over `N` blocks of `k` identical bits,
//! and the `N·k` physical bits are scattered over channels by a secret
//! permutation. The valid channel strings are exactly those whose popcount
//! is a multiple of `k`; the parity is `(popcount / k) mod 2`.

use num_bigint::BigUint;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Bit;

/// Default largest `N·k` for which exhaustive enumeration is allowed.
pub const DEFAULT_ENUM_BOUND: usize = 20;
/// Hard ceiling on enumeration regardless of the configured bound.
const MAX_ENUM_BITS: usize = 40;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParityError {
    #[error("N and k must be at least 1 (got N={n}, k={k})")]
    InvalidParameters { n: usize, k: usize },
    #[error("enumeration of N·k = {nk} bits exceeds the bound {bound}")]
    EnumerationBound { nk: usize, bound: usize },
    #[error("inconsistent evidence")]
    InconsistentEvidence,
    #[error("evidence has {got} entries, expected {expected}")]
    EvidenceLength { got: usize, expected: usize },
    #[error("assignment is not a bijection onto N blocks of k slots")]
    BadAssignment,
    #[error("popcount {popcount} is not a multiple of k = {k}")]
    NotBlockDecomposable { popcount: usize, k: usize },
}

fn check(n: usize, k: usize) -> Result<(), ParityError> {
    if n == 0 || k == 0 {
        return Err(ParityError::InvalidParameters { n, k });
    }
    Ok(())
}

/// Block structure plus the channel → (block, slot) assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCode {
    n: usize,
    k: usize,
    assignment: Vec<(usize, usize)>,
}

impl BlockCode {
    pub fn new(n: usize, k: usize, assignment: Vec<(usize, usize)>) -> Result<Self, ParityError> {
        check(n, k)?;
        if assignment.len() != n * k {
            return Err(ParityError::BadAssignment);
        }
        let mut seen = vec![false; n * k];
        for &(block, slot) in &assignment {
            if block >= n || slot >= k || std::mem::replace(&mut seen[block * k + slot], true) {
                return Err(ParityError::BadAssignment);
            }
        }
        Ok(BlockCode { n, k, assignment })
    }

    /// Channels `j·k .. (j+1)·k` form block `j`.
    pub fn contiguous(n: usize, k: usize) -> Result<Self, ParityError> {
        BlockCode::new(n, k, (0..n * k).map(|c| (c / k, c % k)).collect())
    }

    /// Uniformly random assignment.
    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self, ParityError> {
        check(n, k)?;
        let mut slots: Vec<(usize, usize)> = (0..n * k).map(|c| (c / k, c % k)).collect();
        slots.shuffle(rng);
        Ok(BlockCode { n, k, assignment: slots })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn channels(&self) -> usize {
        self.n * self.k
    }

    pub fn block_of(&self, channel: usize) -> usize {
        self.assignment[channel].0
    }

    pub fn assignment(&self) -> &[(usize, usize)] {
        &self.assignment
    }

    /// Channels of `block`, in slot order.
    pub fn channels_of(&self, block: usize) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for (c, &(b, s)) in self.assignment.iter().enumerate() {
            if b == block {
                out[s] = c;
            }
        }
        out
    }
}

/// A channel string whose popcount is a multiple of `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockString {
    bits: Vec<Bit>,
    k: usize,
}

impl BlockString {
    pub fn new(bits: Vec<Bit>, k: usize) -> Result<Self, ParityError> {
        if k == 0 || bits.is_empty() || !bits.len().is_multiple_of(k) {
            return Err(ParityError::InvalidParameters { n: bits.len() / k.max(1), k });
        }
        let popcount = bits.iter().filter(|b| b.is_one()).count();
        if popcount % k != 0 {
            return Err(ParityError::NotBlockDecomposable { popcount, k });
        }
        Ok(BlockString { bits, k })
    }

    pub fn bits(&self) -> &[Bit] {
        &self.bits
    }

    pub fn one_blocks(&self) -> usize {
        self.bits.iter().filter(|b| b.is_one()).count() / self.k
    }

    pub fn parity(&self) -> Bit {
        Bit::from(self.one_blocks() % 2 == 1)
    }
}

/// A committed secret: block values under a concrete assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecretString {
    code: BlockCode,
    block_values: Vec<Bit>,
}

impl SecretString {
    pub fn new(code: BlockCode, block_values: Vec<Bit>) -> Result<Self, ParityError> {
        if block_values.len() != code.n {
            return Err(ParityError::BadAssignment);
        }
        Ok(SecretString { code, block_values })
    }

    /// Block values uniform among the `2^{N−1}` vectors of parity `parity`,
    /// assignment uniform among all permutations.
    pub fn sample<R: Rng + ?Sized>(
        n: usize,
        k: usize,
        parity: Bit,
        rng: &mut R,
    ) -> Result<Self, ParityError> {
        let code = BlockCode::random(n, k, rng)?;
        let mut values: Vec<Bit> = (0..n - 1).map(|_| Bit::from(rng.gen::<bool>())).collect();
        let partial = values.iter().fold(Bit::ZERO, |acc, &b| acc ^ b);
        values.push(partial ^ parity);
        Ok(SecretString { code, block_values: values })
    }

    pub fn code(&self) -> &BlockCode {
        &self.code
    }

    pub fn block_values(&self) -> &[Bit] {
        &self.block_values
    }

    pub fn set_block_value(&mut self, block: usize, value: Bit) {
        self.block_values[block] = value;
    }

    pub fn value(&self, channel: usize) -> Bit {
        self.block_values[self.code.block_of(channel)]
    }

    pub fn channel_bits(&self) -> Vec<Bit> {
        (0..self.code.channels()).map(|c| self.value(c)).collect()
    }

    pub fn parity(&self) -> Bit {
        self.block_values.iter().fold(Bit::ZERO, |acc, &b| acc ^ b)
    }
}

/// Numbers of valid strings with an even and odd count of one-blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockCounts {
    pub even: BigUint,
    pub odd: BigUint,
}

impl BlockCounts {
    pub fn total(&self) -> BigUint {
        &self.even + &self.odd
    }
}

/// `S_even = Σ_{l even} C(Nk, lk)`, `S_odd = Σ_{l odd} C(Nk, lk)`.
pub fn count_block_strings(n: usize, k: usize) -> Result<BlockCounts, ParityError> {
    check(n, k)?;
    let nk = BigUint::from(n * k);
    let mut counts = [BigUint::zero(), BigUint::zero()];
    for l in 0..=n {
        counts[l % 2] += binomial(nk.clone(), BigUint::from(l * k));
    }
    let [even, odd] = counts;
    Ok(BlockCounts { even, odd })
}

/// Roots-of-unity filter carried out exactly: `(1 + x)^{Nk}` reduced modulo
/// `x^{2k} − 1` collects `Σ_{j ≡ r (mod 2k)} C(Nk, j)` in coefficient `r`.
/// Even strings sit at `r = 0`, odd strings at `r = k`.
pub fn count_block_strings_closed(n: usize, k: usize) -> Result<BlockCounts, ParityError> {
    check(n, k)?;
    let m = 2 * k;
    let cyclic_mul = |a: &[BigUint], b: &[BigUint]| {
        let mut out = vec![BigUint::zero(); m];
        for (i, x) in a.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
            for (j, y) in b.iter().enumerate().filter(|(_, y)| !y.is_zero()) {
                out[(i + j) % m] += x * y;
            }
        }
        out
    };
    let mut base = vec![BigUint::zero(); m];
    base[0] += 1u32;
    base[1 % m] += 1u32;
    let mut acc = vec![BigUint::zero(); m];
    acc[0] = BigUint::one();
    let mut e = n * k;
    while e > 0 {
        if e & 1 == 1 {
            acc = cyclic_mul(&acc, &base);
        }
        base = cyclic_mul(&base, &base);
        e >>= 1;
    }
    Ok(BlockCounts { even: acc[0].clone(), odd: acc[k % m].clone() })
}

/// Brute force over all `2^{Nk}` strings.
pub fn enumerate_block_strings(
    n: usize,
    k: usize,
    bound: usize,
) -> Result<BlockCounts, ParityError> {
    check(n, k)?;
    let nk = n * k;
    if nk > bound || nk > MAX_ENUM_BITS {
        return Err(ParityError::EnumerationBound { nk, bound });
    }
    let (even, odd) = (0u64..1u64 << nk)
        .into_par_iter()
        .fold(
            || (0u64, 0u64),
            |(e, o), s| {
                let ones = s.count_ones() as usize;
                match (ones % k, (ones / k) % 2) {
                    (0, 0) => (e + 1, o),
                    (0, _) => (e, o + 1),
                    _ => (e, o),
                }
            },
        )
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(BlockCounts { even: even.into(), odd: odd.into() })
}

/// The trigonometric form of the total count,
/// `(2^{Nk}/k) Σ_{l=1}^{k} cos^{Nk}(lπ/k) cos(Nlπ)`, in floating point.
pub fn block_string_total_trig(n: usize, k: usize) -> f64 {
    let nk = (n * k) as i32;
    let sum: f64 = (1..=k)
        .map(|l| {
            let theta = l as f64 * std::f64::consts::PI / k as f64;
            theta.cos().powi(nk) * if (n * l).is_multiple_of(2) { 1.0 } else { -1.0 }
        })
        .sum();
    2f64.powi(nk) / k as f64 * sum
}

fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("finite below 2^1000").log2();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().expect("fits").log2() + shift as f64
}

/// `α(N, k) = log₂(S_even + S_odd) / (N·k)`.
pub fn alpha(n: usize, k: usize) -> Result<f64, ParityError> {
    let counts = count_block_strings_closed(n, k)?;
    Ok(log2_big(&counts.total()) / (n * k) as f64)
}

/// Correct-guess probability for plain parity coding at half access:
/// `1/2 + 2^{−(N+1)}`.
pub fn pc_parity_plain(n: usize) -> f64 {
    0.5 + 0.5f64.powi(n as i32 + 1)
}

/// The block-coded guessing bound `1/2 + 2^{−α(N,k)·N·k}`.
pub fn pc_parity_block_bound(n: usize, k: usize) -> Result<f64, ParityError> {
    Ok(0.5 + p_acc_scattered(n, k)?)
}

/// Probability `2^{−α(N,k)·N·k}` of enough accessible outcomes to pin down
/// a scattered block string.
pub fn p_acc_scattered(n: usize, k: usize) -> Result<f64, ParityError> {
    let a = alpha(n, k)?;
    Ok((-a * (n * k) as f64).exp2())
}

/// At least one of `k` half-accessible states of a block fires: `1 − 2^{−k}`.
pub fn p_fixed_block(k: usize) -> f64 {
    1.0 - 0.5f64.powi(k as i32)
}

/// `(1 − 2^{−k})^N`.
pub fn p_acc_fixed(n: usize, k: usize) -> f64 {
    p_fixed_block(k).powi(n as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Guess {
    pub parity: Bit,
    /// Posterior probability of the guessed parity.
    pub confidence: f64,
}

/// Prior over the number of one-blocks induced by the secret sampler:
/// a given string with `l` one-blocks has probability
/// `C(N, l) / (2^N · C(Nk, lk))`, independent of which channels hold the ones.
#[derive(Debug, Clone)]
pub struct BlockCensus {
    n: usize,
    k: usize,
    string_weight: Vec<BigRational>,
}

impl BlockCensus {
    pub fn new(n: usize, k: usize) -> Result<Self, ParityError> {
        check(n, k)?;
        let two_n = BigUint::one() << n;
        let string_weight = (0..=n)
            .map(|l| {
                let num = binomial(BigUint::from(n), BigUint::from(l));
                let den = &two_n * binomial(BigUint::from(n * k), BigUint::from(l * k));
                BigRational::new(num.into(), den.into())
            })
            .collect();
        Ok(BlockCensus { n, k, string_weight })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn tally(&self, evidence: &[Option<Bit>]) -> Result<(usize, usize), ParityError> {
        let expected = self.n * self.k;
        if evidence.len() != expected {
            return Err(ParityError::EvidenceLength { got: evidence.len(), expected });
        }
        let fired = evidence.iter().filter(|e| e.is_some()).count();
        let ones = evidence.iter().filter(|e| matches!(e, Some(b) if b.is_one())).count();
        Ok((fired, ones))
    }

    fn decide(&self, completions: &[BigUint]) -> Result<Guess, ParityError> {
        let mut mass = [BigRational::zero(), BigRational::zero()];
        for (l, count) in completions.iter().enumerate() {
            if !count.is_zero() {
                mass[l % 2] += &self.string_weight[l] * BigRational::from_integer(count.clone().into());
            }
        }
        let total = &mass[0] + &mass[1];
        if total.is_zero() {
            return Err(ParityError::InconsistentEvidence);
        }
        let parity = Bit::from(mass[1] > mass[0]);
        let confidence = (&mass[parity.as_index()] / total).to_f64().unwrap_or(f64::NAN);
        Ok(Guess { parity, confidence })
    }

    /// Bayes-optimal parity guess from per-channel evidence (`None` for
    /// channels that have not fired), enumerating every completion of the
    /// unfired channels. Ties go to 0.
    pub fn guess_enumerated(
        &self,
        evidence: &[Option<Bit>],
        bound: usize,
    ) -> Result<Guess, ParityError> {
        let (fired, ones) = self.tally(evidence)?;
        let nk = self.n * self.k;
        if nk > bound || nk > MAX_ENUM_BITS {
            return Err(ParityError::EnumerationBound { nk, bound });
        }
        let free = nk - fired;
        let k = self.k;
        let counts = (0u64..1u64 << free)
            .into_par_iter()
            .fold(
                || vec![0u64; self.n + 1],
                |mut acc, mask| {
                    let total = ones + mask.count_ones() as usize;
                    if total.is_multiple_of(k) {
                        acc[total / k] += 1;
                    }
                    acc
                },
            )
            .reduce(
                || vec![0u64; self.n + 1],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        let counts: Vec<BigUint> = counts.into_iter().map(BigUint::from).collect();
        self.decide(&counts)
    }

    /// Same posterior as [`BlockCensus::guess_enumerated`], counting the
    /// completions with `l` one-blocks as `C(Nk − f, lk − a)`.
    pub fn guess(&self, evidence: &[Option<Bit>]) -> Result<Guess, ParityError> {
        let (fired, ones) = self.tally(evidence)?;
        let nk = self.n * self.k;
        let free = BigUint::from(nk - fired);
        let counts: Vec<BigUint> = (0..=self.n)
            .map(|l| {
                let need = l * self.k;
                if need < ones || need - ones > nk - fired {
                    BigUint::zero()
                } else {
                    binomial(free.clone(), BigUint::from(need - ones))
                }
            })
            .collect();
        self.decide(&counts)
    }

    /// Success probability of the Bayes-optimal guesser when each channel
    /// has fired independently with probability `fire_prob`.
    pub fn exact_success(&self, fire_prob: f64) -> f64 {
        let (n, k) = (self.n, self.k);
        let nk = n * k;
        let c = |a: usize, b: usize| -> f64 {
            if b > a {
                0.0
            } else {
                binomial(BigUint::from(a), BigUint::from(b)).to_f64().unwrap_or(f64::INFINITY)
            }
        };
        let weight: Vec<f64> = self.string_weight.iter().map(|w| w.to_f64().unwrap_or(0.0)).collect();
        let mut success = 0.0;
        for f in 0..=nk {
            let p_pattern = c(nk, f) * fire_prob.powi(f as i32) * (1.0 - fire_prob).powi((nk - f) as i32);
            if p_pattern == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for a in 0..=f {
                let mut mass = [0.0, 0.0];
                for l in 0..=n {
                    let need = l * k;
                    if need >= a && need - a <= nk - f {
                        mass[l % 2] += weight[l] * c(nk - f, need - a);
                    }
                }
                inner += c(f, a) * mass[0].max(mass[1]);
            }
            success += p_pattern * inner;
        }
        success
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn counts(even: u64, odd: u64) -> BlockCounts {
        BlockCounts { even: even.into(), odd: odd.into() }
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_block_strings(1, 1).unwrap(), counts(1, 1));
        assert_eq!(count_block_strings(2, 2).unwrap(), counts(2, 6));
        assert_eq!(count_block_strings_closed(2, 2).unwrap(), counts(2, 6));
        assert_eq!(count_block_strings_closed(2, 2).unwrap().total(), BigUint::from(8u32));
        assert_eq!(enumerate_block_strings(2, 2, DEFAULT_ENUM_BOUND).unwrap(), counts(2, 6));
        for n in 1..12 {
            let half = 1u64 << (n - 1);
            assert_eq!(count_block_strings_closed(n, 1).unwrap(), counts(half, half));
        }
    }

    #[test]
    fn sixteen_bit_strings_by_hand() {
        // N = 2, k = 2: keep strings with popcount 0, 2 or 4
        let mut even = 0;
        let mut odd = 0;
        for s in 0u32..16 {
            match s.count_ones() {
                0 | 4 => even += 1,
                2 => odd += 1,
                _ => {}
            }
        }
        assert_eq!((even, odd), (2, 6));
    }

    #[test]
    fn enumeration_respects_bound() {
        assert_eq!(
            enumerate_block_strings(3, 7, DEFAULT_ENUM_BOUND),
            Err(ParityError::EnumerationBound { nk: 21, bound: 20 })
        );
        assert!(enumerate_block_strings(3, 7, 21).is_ok());
    }

    #[test]
    fn closed_form_matches_direct_sum_for_large_sizes() {
        for (n, k) in [(10, 7), (25, 4), (40, 3), (7, 31)] {
            assert_eq!(count_block_strings(n, k).unwrap(), count_block_strings_closed(n, k).unwrap());
        }
    }

    #[test]
    fn trig_form_tracks_exact_total() {
        for (n, k) in [(1, 1), (2, 2), (3, 4), (5, 3), (6, 6)] {
            let exact = count_block_strings(n, k).unwrap().total().to_f64().unwrap();
            let trig = block_string_total_trig(n, k);
            assert!((trig - exact).abs() <= 1e-9 * exact, "({n},{k}) {trig} vs {exact}");
        }
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha(1, 1).unwrap(), 1.0);
        assert!((alpha(2, 2).unwrap() - 0.75).abs() < 1e-15);
        for n in 1..6 {
            assert!((alpha(n, 1).unwrap() - 1.0).abs() < 1e-15);
            for k in 1..12 {
                let a = alpha(n, k).unwrap();
                assert!(a > 0.0 && a <= 1.0);
            }
        }
        // a single block: only the all-zero and all-one strings, α = 1/k
        for k in 1..12 {
            assert!((alpha(1, k).unwrap() - 1.0 / k as f64).abs() < 1e-15);
        }
        // for N ≥ 2, α dips at k = 3 and then climbs back towards 1
        let a2: Vec<f64> = (1..=5).map(|k| alpha(2, k).unwrap()).collect();
        let want = [1.0, 0.75, 22f64.log2() / 6.0, 72f64.log2() / 8.0, 254f64.log2() / 10.0];
        for (got, want) in a2.iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!(a2[2] < a2[1] && a2[3] > a2[2] && a2[4] > a2[3]);
    }

    #[test]
    fn closed_form_probabilities() {
        assert_eq!(pc_parity_plain(1), 0.75);
        assert_eq!(pc_parity_plain(10), 0.5 + 2f64.powi(-11));
        assert!((pc_parity_plain(200) - 0.5).abs() < 1e-60);
        for n in 1..10 {
            assert!((pc_parity_block_bound(n, 1).unwrap() - (0.5 + 2f64.powi(-(n as i32)))).abs() < 1e-15);
        }
        assert!((pc_parity_block_bound(2, 2).unwrap() - 0.625).abs() < 1e-15);
        assert!(pc_parity_block_bound(20, 20).unwrap() - 0.5 < 1e-100);
        assert_eq!(p_fixed_block(1), 0.5);
        assert_eq!(p_fixed_block(3), 0.875);
        assert_eq!(p_acc_fixed(4, 3), 0.875f64.powi(4));
    }

    #[test]
    fn fixed_blocks_leak_more_than_scattered_blocks() {
        for n in 1..8 {
            for k in 1..8 {
                assert!(p_acc_fixed(n, k) >= p_acc_scattered(n, k).unwrap() - 1e-15, "({n},{k})");
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(count_block_strings(0, 3).is_err());
        assert!(count_block_strings_closed(3, 0).is_err());
        assert!(BlockCensus::new(0, 1).is_err());
    }

    #[test]
    fn block_code_validation() {
        assert!(BlockCode::new(2, 2, vec![(0, 0), (0, 1), (1, 0), (1, 1)]).is_ok());
        assert_eq!(
            BlockCode::new(2, 2, vec![(0, 0), (0, 0), (1, 0), (1, 1)]),
            Err(ParityError::BadAssignment)
        );
        assert_eq!(BlockCode::new(2, 2, vec![(0, 0), (0, 1), (1, 0)]), Err(ParityError::BadAssignment));
        assert_eq!(
            BlockCode::new(2, 2, vec![(0, 0), (0, 1), (2, 0), (1, 1)]),
            Err(ParityError::BadAssignment)
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let code = BlockCode::random(4, 3, &mut rng).unwrap();
        assert!(BlockCode::new(4, 3, code.assignment().to_vec()).is_ok());
        for b in 0..4 {
            assert!(code.channels_of(b).iter().all(|&c| code.block_of(c) == b));
        }
    }

    #[test]
    fn block_string_invariants() {
        let bits = |v: &[u8]| v.iter().map(|&b| Bit::try_from(b).unwrap()).collect::<Vec<_>>();
        let s = BlockString::new(bits(&[1, 0, 1, 0]), 2).unwrap();
        assert_eq!(s.parity(), Bit::ONE);
        assert_eq!(
            BlockString::new(bits(&[1, 0, 0, 0]), 2),
            Err(ParityError::NotBlockDecomposable { popcount: 1, k: 2 })
        );
    }

    #[test]
    fn sampled_secrets_have_requested_parity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..200 {
            let parity = Bit::from(i % 2 == 0);
            let s = SecretString::sample(5, 3, parity, &mut rng).unwrap();
            assert_eq!(s.parity(), parity);
            let bs = BlockString::new(s.channel_bits(), 3).unwrap();
            assert_eq!(bs.parity(), parity);
        }
    }

    #[test]
    fn guesser_examples() {
        let census = BlockCensus::new(3, 2).unwrap();
        let g = census.guess_enumerated(&[None; 6], DEFAULT_ENUM_BOUND).unwrap();
        assert_eq!(g, Guess { parity: Bit::ZERO, confidence: 0.5 });
        assert_eq!(census.guess(&[None; 6]).unwrap(), g);

        let full = [1u8, 1, 0, 0, 1, 1].map(|b| Some(Bit::try_from(b).unwrap()));
        let g = census.guess_enumerated(&full, DEFAULT_ENUM_BOUND).unwrap();
        assert_eq!(g, Guess { parity: Bit::ZERO, confidence: 1.0 });

        let census = BlockCensus::new(2, 1).unwrap();
        for b in [Bit::ZERO, Bit::ONE] {
            let g = census.guess_enumerated(&[Some(b), None], DEFAULT_ENUM_BOUND).unwrap();
            assert_eq!(g.confidence, 0.5);
            assert_eq!(g.parity, Bit::ZERO);
        }
    }

    #[test]
    fn guesser_rejects_inconsistent_evidence() {
        let census = BlockCensus::new(2, 2).unwrap();
        let e = [Some(Bit::ONE), Some(Bit::ZERO), Some(Bit::ZERO), Some(Bit::ZERO)];
        assert_eq!(census.guess_enumerated(&e, 20), Err(ParityError::InconsistentEvidence));
        assert_eq!(census.guess(&e), Err(ParityError::InconsistentEvidence));
        assert!(matches!(census.guess(&e[..3]), Err(ParityError::EvidenceLength { .. })));
        let big = BlockCensus::new(7, 3).unwrap();
        assert!(matches!(
            big.guess_enumerated(&[None; 21], 20),
            Err(ParityError::EnumerationBound { .. })
        ));
    }

    #[test]
    fn census_and_enumeration_agree_on_all_evidence() {
        for (n, k) in [(1, 1), (2, 1), (2, 2), (3, 2), (2, 3), (4, 2)] {
            let census = BlockCensus::new(n, k).unwrap();
            let nk = n * k;
            // every assignment of {unfired, 0, 1} to each channel
            for code in 0..3usize.pow(nk as u32) {
                let mut c = code;
                let evidence: Vec<Option<Bit>> = (0..nk)
                    .map(|_| {
                        let d = c % 3;
                        c /= 3;
                        match d {
                            0 => None,
                            1 => Some(Bit::ZERO),
                            _ => Some(Bit::ONE),
                        }
                    })
                    .collect();
                let a = census.guess_enumerated(&evidence, 20);
                let b = census.guess(&evidence);
                match (a, b) {
                    (Ok(a), Ok(b)) => {
                        assert_eq!(a.parity, b.parity);
                        assert!((a.confidence - b.confidence).abs() < 1e-15);
                    }
                    (Err(a), Err(b)) => assert_eq!(a, b),
                    other => panic!("disagreement {other:?}"),
                }
            }
        }
    }

    #[test]
    fn exact_success_matches_independent_enumeration() {
        // values from a separate rational-arithmetic enumeration over fire
        // patterns and hypergeometric evidence likelihoods
        let cases = [
            ((1, 1), 0.75),
            ((1, 2), 0.875),
            ((2, 1), 0.625),
            ((2, 2), 0.78125),
            ((2, 3), 0.8828125),
            ((3, 2), 0.6875),
            ((3, 3), 0.788818359375),
            ((4, 2), 0.630859375),
        ];
        for ((n, k), want) in cases {
            let got = BlockCensus::new(n, k).unwrap().exact_success(0.5);
            assert!((got - want).abs() < 1e-14, "({n},{k}) {got} vs {want}");
        }
        for n in 1..10 {
            let got = BlockCensus::new(n, 1).unwrap().exact_success(0.5);
            assert!((got - pc_parity_plain(n)).abs() < 1e-15);
        }
        assert!((BlockCensus::new(3, 3).unwrap().exact_success(1.0) - 1.0).abs() < 1e-15);
        assert!((BlockCensus::new(3, 3).unwrap().exact_success(0.0) - 0.5).abs() < 1e-15);
    }
}
