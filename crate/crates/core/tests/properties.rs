use nalgebra::DMatrix;
use num_bigint::BigUint;
use proptest::prelude::*;

use relbc_core::measurement::{helstrom_error, GammaOperator, PriorPair};
use relbc_core::parity::{count_block_strings, count_block_strings_closed, BlockCensus};
use relbc_core::protocol::{AbortReason, Verdict};
use relbc_core::wavepacket::{
    delayed_overlap, DelayedState, Profile, StretchedState, Waveform, Window,
};
use relbc_core::Bit;

fn binomial(n: u64, r: u64) -> BigUint {
    (0..r).fold(BigUint::from(1u32), |acc, i| acc * (n - i) / (i + 1))
}

fn profile(tailed: bool) -> std::sync::Arc<Profile> {
    if tailed {
        Profile::tailed(1.0, 3.0).unwrap()
    } else {
        Profile::compact(1.0).unwrap()
    }
}

fn density(theta: f64, purity: f64) -> DMatrix<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    DMatrix::from_row_slice(2, 2, &[c * c, c * s, c * s, s * s]) * purity
        + DMatrix::identity(2, 2) * (0.5 * (1.0 - purity))
}

/// Minimum decision error over all projectors: rank 0, rank 2, and rank-1
/// projectors on a fine angle grid refined by golden-section search.
fn brute_force_error(p: PriorPair, rho0: &DMatrix<f64>, rho1: &DMatrix<f64>) -> f64 {
    let id = DMatrix::identity(2, 2);
    let err = |pi0: &DMatrix<f64>| p.p0() * (rho0 * (&id - pi0)).trace() + p.p1() * (rho1 * pi0).trace();
    let rank1 = |t: f64| {
        let (c, s) = (t.cos(), t.sin());
        err(&DMatrix::from_row_slice(2, 2, &[c * c, c * s, c * s, s * s]))
    };
    let steps = 4096;
    let h = std::f64::consts::PI / steps as f64;
    let best_i = (0..steps).min_by(|&a, &b| rank1(a as f64 * h).total_cmp(&rank1(b as f64 * h))).unwrap();
    let (mut lo, mut hi) = ((best_i as f64 - 1.0) * h, (best_i as f64 + 1.0) * h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let (a, b) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if rank1(a) < rank1(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    rank1(0.5 * (lo + hi)).min(err(&DMatrix::zeros(2, 2))).min(err(&id))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn window_mass_is_translation_invariant(
        tailed in any::<bool>(),
        bit in any::<bool>(),
        shift in -50.0f64..50.0,
        lo in -5.0f64..15.0,
        width in 0.01f64..10.0,
    ) {
        let s = StretchedState::new(profile(tailed), 8.0, Bit::from(bit)).unwrap();
        let w = Window::new(lo, lo + width).unwrap();
        let moved = s.translate(shift).window_mass(&w.shift(shift));
        prop_assert!((moved - s.window_mass(&w)).abs() < 1e-12);
    }

    #[test]
    fn delayed_overlap_never_exceeds_one_half(
        tailed in any::<bool>(),
        weights in prop::collection::vec(0.05f64..1.0, 1..4),
        offsets in prop::collection::vec(2.5f64..14.0, 4),
    ) {
        let p = profile(tailed);
        let honest = StretchedState::new(p.clone(), 8.0, Bit::ZERO).unwrap();
        let front = honest.hump_windows()[0];
        let comps: Vec<(f64, Waveform)> = weights
            .iter()
            .zip(&offsets)
            .map(|(&c, &x)| (c, Waveform::new(p.clone(), x)))
            .filter(|(_, w)| !w.nominal_window().intersects(&front))
            .collect();
        prop_assume!(!comps.is_empty());
        let delayed = DelayedState::new(comps).unwrap();
        let overlap = delayed_overlap(&delayed, &honest).unwrap();
        prop_assert!((0.0..=0.5 + 1e-9).contains(&overlap), "overlap {}", overlap);
    }

    #[test]
    fn helstrom_matches_projector_search(
        p0 in 0.01f64..0.99,
        t0 in 0.0f64..std::f64::consts::PI,
        t1 in 0.0f64..std::f64::consts::PI,
        q0 in 0.0f64..=1.0,
        q1 in 0.0f64..=1.0,
    ) {
        let prior = PriorPair::new(p0, 1.0 - p0).unwrap();
        let (rho0, rho1) = (density(t0, q0), density(t1, q1));
        let gamma = GammaOperator::from_ensemble(prior, &rho0, &rho1, 1.0).unwrap();
        let exact = helstrom_error(prior, &gamma, 1.0).unwrap().error;
        let brute = brute_force_error(prior, &rho0, &rho1);
        prop_assert!((exact - brute).abs() < 1e-10, "{} vs {}", exact, brute);
    }

    #[test]
    fn helstrom_scales_with_accessible_mass(
        p0 in 0.01f64..0.99,
        t in 0.0f64..std::f64::consts::PI,
        mass in 0.0f64..=1.0,
    ) {
        let prior = PriorPair::new(p0, 1.0 - p0).unwrap();
        let gamma = GammaOperator::from_ensemble(prior, &density(0.0, 1.0), &density(t, 1.0), 1.0).unwrap();
        let full = helstrom_error(prior, &gamma, 1.0).unwrap().error;
        let part = helstrom_error(prior, &gamma, mass).unwrap().error;
        prop_assert!((part - mass * full).abs() < 1e-12);
        prop_assert!(full <= p0.min(1.0 - p0) + 1e-12);
    }

    #[test]
    fn counting_routes_agree(n in 1usize..40, k in 1usize..12) {
        let a = count_block_strings(n, k).unwrap();
        let b = count_block_strings_closed(n, k).unwrap();
        prop_assert_eq!(&a, &b);
        let nk = (n * k) as u64;
        let total = (0..=n as u64).fold(BigUint::from(0u32), |s, l| s + binomial(nk, l * k as u64));
        prop_assert_eq!(a.total(), total);
    }

    #[test]
    fn census_guess_equals_enumeration(
        n in 1usize..5,
        k in 1usize..4,
        bits in prop::collection::vec(any::<bool>(), 12),
        fired in prop::collection::vec(any::<bool>(), 12),
    ) {
        let census = BlockCensus::new(n, k).unwrap();
        let evidence: Vec<Option<Bit>> = (0..n * k)
            .map(|c| fired[c].then(|| Bit::from(bits[c])))
            .collect();
        let a = census.guess(&evidence);
        let b = census.guess_enumerated(&evidence, 20);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.parity, b.parity);
                prop_assert!((a.confidence - b.confidence).abs() < 1e-12);
                prop_assert!(a.confidence >= 0.5);
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn verdict_codes_round_trip(channel in 0usize..10_000, r in 0usize..5, bit in any::<bool>()) {
        let aborted = Verdict::Aborted { channel, reason: AbortReason::ALL[r] };
        prop_assert_eq!(aborted.to_string().parse::<Verdict>().unwrap(), aborted);
        let accepted = Verdict::Accepted(Bit::from(bit));
        prop_assert_eq!(accepted.to_string().parse::<Verdict>().unwrap(), accepted);
    }
}

#[test]
fn no_fired_channels_gives_even_odds() {
    for (n, k) in [(1, 1), (2, 2), (3, 4), (5, 2)] {
        let census = BlockCensus::new(n, k).unwrap();
        let g = census.guess(&vec![None; n * k]).unwrap();
        assert_eq!(g.confidence, 0.5);
        assert_eq!(g.parity, Bit::ZERO);
    }
}
