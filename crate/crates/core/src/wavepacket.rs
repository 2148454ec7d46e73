//! Light-cone amplitude profiles and the two-hump stretched states built from
//! them.
//!
//! A [`Profile`] is a normalized shape centred at the origin. It owns an
//! immutable cumulative-mass table, built once by Gauss–Legendre quadrature,
//! so window masses cost one table lookup plus one partial-cell rule and
//! inverse-CDF draws cost a binary search plus a safeguarded Newton solve.
//! [`Waveform`]s are `(Arc<Profile>, centre)` pairs and are cheap to clone.
//!
//! Two families are provided:
//!
//! - `CompactBump { width }`: `f(τ) ∝ cos²(πτ / 2Δτ)` on `(−Δτ, Δτ)`, zero
//!   outside.
//! - `Tailed { width, xi }`: a Gaussian whose mass outside `(−Δτ, Δτ)` is
//!   exactly `e^{−ξ}`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;
use thiserror::Error;

use crate::quad;
use crate::Bit;

const COMPACT_CELLS: usize = 4096;
const TAILED_CELLS: usize = 16384;
/// Half-width of the tabulated range of a tailed profile, in standard deviations.
const TAIL_SIGMAS: f64 = 40.0;
const INNER_PANELS: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WavepacketError {
    #[error("invalid profile parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate window [{lo}, {hi}]")]
    DegenerateWindow { lo: f64, hi: f64 },
    #[error("compact humps overlap: separation {separation} must exceed {min}")]
    OverlappingHumps { separation: f64, min: f64 },
    #[error("support covers front hump")]
    SupportCoversFrontHump,
}

/// Shape family of a light-cone profile. `width` is the half-length Δτ of
/// the localization interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    CompactBump { width: f64 },
    Tailed { width: f64, xi: f64 },
}

impl Family {
    pub fn width(&self) -> f64 {
        match *self {
            Family::CompactBump { width } | Family::Tailed { width, .. } => width,
        }
    }

    /// Mass outside the nominal interval `(−Δτ, Δτ)`.
    pub fn tail_mass(&self) -> f64 {
        match *self {
            Family::CompactBump { .. } => 0.0,
            Family::Tailed { xi, .. } => (-xi).exp(),
        }
    }

    pub fn is_compact(&self) -> bool {
        matches!(self, Family::CompactBump { .. })
    }
}

/// A normalized profile centred at zero with its cumulative mass table.
#[derive(Debug)]
pub struct Profile {
    family: Family,
    sigma: f64,
    lo: f64,
    hi: f64,
    step: f64,
    norm: f64,
    cum: Vec<f64>,
}

impl Profile {
    pub fn new(family: Family) -> Result<Arc<Profile>, WavepacketError> {
        let width = family.width();
        if !(width.is_finite() && width > 0.0) {
            return Err(WavepacketError::InvalidParameter(format!(
                "width must be positive and finite, got {width}"
            )));
        }
        let (sigma, half, cells) = match family {
            Family::CompactBump { .. } => (0.0, width, COMPACT_CELLS),
            Family::Tailed { xi, .. } => {
                if !(xi.is_finite() && xi > 0.0) {
                    return Err(WavepacketError::InvalidParameter(format!(
                        "tail exponent must be positive and finite, got {xi}"
                    )));
                }
                // erfc(Δτ / σ√2) = e^{−ξ}
                let sigma = width / (SQRT_2 * erfc_inv((-xi).exp()));
                (sigma, width.max(TAIL_SIGMAS * sigma), TAILED_CELLS)
            }
        };
        let mut profile = Profile {
            family,
            sigma,
            lo: -half,
            hi: half,
            step: 2.0 * half / cells as f64,
            norm: 1.0,
            cum: Vec::with_capacity(cells + 1),
        };
        let mut acc = 0.0;
        profile.cum.push(0.0);
        for i in 0..cells {
            let a = profile.node(i);
            acc += quad::gl8(|x| profile.raw(x), a, a + profile.step);
            profile.cum.push(acc);
        }
        profile.norm = acc;
        for c in &mut profile.cum {
            *c /= acc;
        }
        Ok(Arc::new(profile))
    }

    pub fn compact(width: f64) -> Result<Arc<Profile>, WavepacketError> {
        Profile::new(Family::CompactBump { width })
    }

    pub fn tailed(width: f64, xi: f64) -> Result<Arc<Profile>, WavepacketError> {
        Profile::new(Family::Tailed { width, xi })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn width(&self) -> f64 {
        self.family.width()
    }

    /// Standard deviation of a tailed profile; zero for compact ones.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Tabulated range. Outside it the density is exactly zero (compact) or
    /// below any representable mass (tailed).
    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn cells(&self) -> usize {
        self.cum.len() - 1
    }

    fn node(&self, i: usize) -> f64 {
        self.lo + self.step * i as f64
    }

    fn raw(&self, x: f64) -> f64 {
        match self.family {
            Family::CompactBump { width } => {
                if x.abs() >= width {
                    0.0
                } else {
                    let c = (PI * x / (2.0 * width)).cos();
                    let c2 = c * c;
                    c2 * c2
                }
            }
            Family::Tailed { .. } => (-0.5 * (x / self.sigma).powi(2)).exp(),
        }
    }

    /// `|f(x)|²`.
    pub fn density(&self, x: f64) -> f64 {
        self.raw(x) / self.norm
    }

    /// `f(x)`, real and non-negative for both families.
    pub fn amplitude(&self, x: f64) -> f64 {
        self.density(x).sqrt()
    }

    /// Mass of `(−∞, x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let i = (((x - self.lo) / self.step) as usize).min(self.cells() - 1);
        let a = self.node(i);
        self.cum[i] + quad::gl8(|t| self.raw(t), a, x) / self.norm
    }

    /// Inverse of [`Profile::cdf`].
    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.lo;
        }
        if u >= 1.0 {
            return self.hi;
        }
        let i = self
            .cum
            .partition_point(|&c| c <= u)
            .saturating_sub(1)
            .min(self.cells() - 1);
        let (mut a, mut b) = (self.node(i), self.node(i + 1));
        let target = u - self.cum[i];
        let cell_mass = self.cum[i + 1] - self.cum[i];
        let left = a;
        let partial = |x: f64| quad::gl8(|t| self.raw(t), left, x) / self.norm - target;
        let mut x = if cell_mass > 0.0 {
            a + (b - a) * (target / cell_mass).clamp(0.0, 1.0)
        } else {
            0.5 * (a + b)
        };
        for _ in 0..60 {
            let g = partial(x);
            if g > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let d = self.density(x);
            let mut next = if d > 0.0 { x - g / d } else { f64::NAN };
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || b - a <= 1e-15 * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }
}

/// A light-cone interval `[lo, hi]`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    lo: f64,
    hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Window, WavepacketError> {
        if lo.is_nan() || hi.is_nan() || hi <= lo {
            return Err(WavepacketError::DegenerateWindow { lo, hi });
        }
        Ok(Window { lo, hi })
    }

    pub fn all() -> Window {
        Window { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    /// `(−∞, hi]`. An infinite `hi` gives the whole line.
    pub fn up_to(hi: f64) -> Window {
        Window { lo: f64::NEG_INFINITY, hi }
    }

    pub fn from(lo: f64) -> Window {
        Window { lo, hi: f64::INFINITY }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn shift(&self, delta: f64) -> Window {
        Window { lo: self.lo + delta, hi: self.hi + delta }
    }

    pub fn contains(&self, tau: f64) -> bool {
        self.lo <= tau && tau <= self.hi
    }

    pub fn intersects(&self, other: &Window) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }
}

#[derive(Debug, Clone)]
pub struct Waveform {
    profile: Arc<Profile>,
    center: f64,
}

impl Waveform {
    pub fn new(profile: Arc<Profile>, center: f64) -> Waveform {
        Waveform { profile, center }
    }

    pub fn compact(width: f64, center: f64) -> Result<Waveform, WavepacketError> {
        Ok(Waveform::new(Profile::compact(width)?, center))
    }

    pub fn tailed(width: f64, xi: f64, center: f64) -> Result<Waveform, WavepacketError> {
        Ok(Waveform::new(Profile::tailed(width, xi)?, center))
    }

    pub fn profile(&self) -> &Arc<Profile> {
        &self.profile
    }

    pub fn family(&self) -> Family {
        self.profile.family
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn shifted(&self, delta: f64) -> Waveform {
        Waveform { profile: Arc::clone(&self.profile), center: self.center + delta }
    }

    pub fn amplitude(&self, tau: f64) -> f64 {
        self.profile.amplitude(tau - self.center)
    }

    pub fn density(&self, tau: f64) -> f64 {
        self.profile.density(tau - self.center)
    }

    pub fn cdf(&self, tau: f64) -> f64 {
        self.profile.cdf(tau - self.center)
    }

    pub fn mass(&self, window: &Window) -> f64 {
        (self.cdf(window.hi) - self.cdf(window.lo)).max(0.0)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        self.center + self.profile.quantile(u)
    }

    /// `(centre − Δτ, centre + Δτ)`; the exact support for compact bumps.
    pub fn nominal_window(&self) -> Window {
        let w = self.profile.width();
        Window { lo: self.center - w, hi: self.center + w }
    }

    fn effective_range(&self) -> (f64, f64) {
        let (lo, hi) = self.profile.range();
        (self.center + lo, self.center + hi)
    }
}

/// `∫ a(τ) b(τ) dτ` for real amplitudes.
pub fn inner_product(a: &Waveform, b: &Waveform) -> f64 {
    let (alo, ahi) = a.effective_range();
    let (blo, bhi) = b.effective_range();
    let (lo, hi) = (alo.max(blo), ahi.min(bhi));
    if hi <= lo {
        return 0.0;
    }
    quad::composite(|t| a.amplitude(t) * b.amplitude(t), lo, hi, INNER_PANELS)
}

/// A stretched state: front hump at `translation`, rear hump at
/// `translation + separation`, sharing one internal bit.
#[derive(Debug, Clone)]
pub struct StretchedState {
    front: Waveform,
    rear: Waveform,
    internal_bit: Bit,
    translation: f64,
}

impl StretchedState {
    pub fn new(
        profile: Arc<Profile>,
        separation: f64,
        internal_bit: Bit,
    ) -> Result<StretchedState, WavepacketError> {
        if !(separation.is_finite() && separation > 0.0) {
            return Err(WavepacketError::InvalidParameter(format!(
                "hump separation must be positive and finite, got {separation}"
            )));
        }
        let min = 2.0 * profile.width();
        if profile.family.is_compact() && separation <= min {
            return Err(WavepacketError::OverlappingHumps { separation, min });
        }
        Ok(StretchedState {
            front: Waveform::new(Arc::clone(&profile), 0.0),
            rear: Waveform::new(profile, separation),
            internal_bit,
            translation: 0.0,
        })
    }

    pub fn internal_bit(&self) -> Bit {
        self.internal_bit
    }

    pub fn with_internal_bit(&self, bit: Bit) -> StretchedState {
        StretchedState { internal_bit: bit, ..self.clone() }
    }

    pub fn separation(&self) -> f64 {
        self.rear.center - self.front.center
    }

    pub fn translation(&self) -> f64 {
        self.translation
    }

    pub fn profile(&self) -> &Arc<Profile> {
        self.front.profile()
    }

    /// Front hump in absolute light-cone coordinates.
    pub fn front_hump(&self) -> Waveform {
        self.front.shifted(self.translation)
    }

    /// Rear hump in absolute light-cone coordinates.
    pub fn rear_hump(&self) -> Waveform {
        self.rear.shifted(self.translation)
    }

    pub fn translate(&self, delta: f64) -> StretchedState {
        StretchedState { translation: self.translation + delta, ..self.clone() }
    }

    /// Nominal localization intervals of the front and rear humps.
    pub fn hump_windows(&self) -> [Window; 2] {
        [self.front_hump().nominal_window(), self.rear_hump().nominal_window()]
    }

    /// Outcome probability density `(|f(τ)|² + |f(τ − τ₀)|²) / 2`.
    pub fn density(&self, tau: f64) -> f64 {
        let t = tau - self.translation;
        0.5 * (self.front.density(t) + self.rear.density(t))
    }

    /// `(f(τ) + f(τ − τ₀)) / √2`.
    pub fn amplitude(&self, tau: f64) -> f64 {
        let t = tau - self.translation;
        FRAC_1_SQRT_2 * (self.front.amplitude(t) + self.rear.amplitude(t))
    }

    pub fn window_mass(&self, window: &Window) -> f64 {
        let w = window.shift(-self.translation);
        (0.5 * (self.front.mass(&w) + self.rear.mass(&w))).clamp(0.0, 1.0)
    }

    /// Draws a light-cone outcome time: a hump with probability 1/2 each,
    /// then an inverse-CDF draw within it.
    pub fn sample_fire_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let hump = if rng.gen::<bool>() { &self.rear } else { &self.front };
        hump.quantile(rng.gen::<f64>()) + self.translation
    }
}

/// A pure state substituted for an honest stretched state after a delay:
/// a real superposition `Σ cᵢ wᵢ(τ)` of waveforms.
#[derive(Debug, Clone)]
pub struct DelayedState {
    components: Vec<(f64, Waveform)>,
}

impl DelayedState {
    pub fn new(components: Vec<(f64, Waveform)>) -> Result<DelayedState, WavepacketError> {
        if components.is_empty() || components.iter().all(|(c, _)| *c == 0.0) {
            return Err(WavepacketError::InvalidParameter(
                "delayed state needs a non-zero component".into(),
            ));
        }
        Ok(DelayedState { components })
    }

    pub fn single(w: Waveform) -> DelayedState {
        DelayedState { components: vec![(1.0, w)] }
    }

    /// Only the rear hump of `honest`, carrying its full normalization.
    pub fn rear_hump_of(honest: &StretchedState) -> DelayedState {
        DelayedState::single(honest.rear_hump())
    }

    pub fn components(&self) -> &[(f64, Waveform)] {
        &self.components
    }

    fn norm_sq(&self) -> f64 {
        let mut acc = 0.0;
        for (ci, wi) in &self.components {
            for (cj, wj) in &self.components {
                acc += ci * cj * inner_product(wi, wj);
            }
        }
        acc
    }

    /// Draws an outcome time from the component-mass mixture `Σ cᵢ² |wᵢ|²`
    /// (exact when the components have disjoint supports).
    pub fn sample_fire_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total: f64 = self.components.iter().map(|(c, _)| c * c).sum();
        let mut u = rng.gen::<f64>() * total;
        let v = rng.gen::<f64>();
        for (c, w) in &self.components {
            let m = c * c;
            if u < m {
                return w.quantile(v);
            }
            u -= m;
        }
        let (_, w) = self.components.last().expect("non-empty");
        w.quantile(v)
    }
}

/// Probability `|⟨g|h⟩|²` that a delayed state `h` produces an outcome in the
/// honest projector built from `g = (f + f_shift)/√2`.
///
/// Fails if any component of `h` reaches into the honest front-hump interval.
pub fn delayed_overlap(
    delayed: &DelayedState,
    honest: &StretchedState,
) -> Result<f64, WavepacketError> {
    let front = honest.front_hump();
    let rear = honest.rear_hump();
    let guard = front.nominal_window();
    if delayed
        .components
        .iter()
        .any(|(c, w)| *c != 0.0 && w.nominal_window().intersects(&guard))
    {
        return Err(WavepacketError::SupportCoversFrontHump);
    }
    let g_norm_sq = 1.0 + inner_product(&front, &rear);
    let overlap: f64 = delayed
        .components
        .iter()
        .map(|(c, w)| c * FRAC_1_SQRT_2 * (inner_product(&front, w) + inner_product(&rear, w)))
        .sum();
    Ok(overlap * overlap / (g_norm_sq * delayed.norm_sq()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Closed-form CDF of the normalized cos⁴ bump on (−w, w).
    fn bump_cdf(x: f64, w: f64) -> f64 {
        if x <= -w {
            return 0.0;
        }
        if x >= w {
            return 1.0;
        }
        let prim = |y: f64| {
            let t = PI * y / (2.0 * w);
            3.0 * t / 8.0 + (2.0 * t).sin() / 4.0 + (4.0 * t).sin() / 32.0
        };
        (prim(x) - prim(-w)) / (prim(w) - prim(-w))
    }

    fn gauss_cdf(x: f64, sigma: f64) -> f64 {
        0.5 * statrs::function::erf::erfc(-x / (sigma * SQRT_2))
    }

    #[test]
    fn compact_profile_matches_closed_form() {
        for &w in &[0.25, 1.0, 3.5] {
            let p = Profile::compact(w).unwrap();
            assert!((p.cdf(w) - 1.0).abs() < 1e-12);
            for i in 0..=200 {
                let x = -w + 2.0 * w * i as f64 / 200.0;
                assert!((p.cdf(x) - bump_cdf(x, w)).abs() < 1e-13, "w={w} x={x}");
            }
        }
    }

    #[test]
    fn compact_profile_vanishes_outside_support() {
        let p = Profile::compact(1.0).unwrap();
        assert_eq!(p.density(1.0), 0.0);
        assert_eq!(p.density(-1.5), 0.0);
        assert!(p.density(0.0) > 0.0);
    }

    #[test]
    fn tailed_profile_tail_mass() {
        for &xi in &[0.5, 2.0, 4.0, 6.0, 12.0] {
            let p = Profile::tailed(1.0, xi).unwrap();
            let inside = p.cdf(1.0) - p.cdf(-1.0);
            assert!((1.0 - inside - (-xi).exp()).abs() < 1e-9, "xi={xi}");
            // statrs erfc is only good to ~1e-11 here
            assert!((p.cdf(0.7) - gauss_cdf(0.7, p.sigma())).abs() < 1e-10);
            assert!((p.cdf(p.range().1) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tailed_cdf_high_precision_reference() {
        // 0.5·erfc(−0.7 / σ√2) at σ = 0.66961771180625107, evaluated to 30 digits
        let p = Profile::tailed(1.0, 2.0).unwrap();
        assert!((p.sigma() - 0.669_617_711_806_251_1).abs() < 1e-9);
        let reference = 0.852_074_599_454_853_1;
        let shifted = 0.7 * p.sigma() / 0.669_617_711_806_251_1;
        assert!((p.cdf(shifted) - reference).abs() < 1e-14);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for p in [Profile::compact(1.0).unwrap(), Profile::tailed(1.0, 3.0).unwrap()] {
            for i in 1..1000 {
                let u = i as f64 / 1000.0;
                let x = p.quantile(u);
                assert!((p.cdf(x) - u).abs() < 1e-12, "u={u}");
            }
        }
    }

    #[test]
    fn degenerate_window_rejected() {
        assert!(matches!(Window::new(1.0, 1.0), Err(WavepacketError::DegenerateWindow { .. })));
        assert!(Window::new(2.0, 1.0).is_err());
        assert!(Window::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn overlapping_compact_humps_rejected() {
        let p = Profile::compact(1.0).unwrap();
        assert!(matches!(
            StretchedState::new(p.clone(), 2.0, Bit::ZERO),
            Err(WavepacketError::OverlappingHumps { .. })
        ));
        assert!(StretchedState::new(p, 2.01, Bit::ZERO).is_ok());
        // tailed humps may overlap
        let t = Profile::tailed(1.0, 2.0).unwrap();
        assert!(StretchedState::new(t, 1.0, Bit::ZERO).is_ok());
    }

    fn state() -> StretchedState {
        StretchedState::new(Profile::compact(1.0).unwrap(), 10.0, Bit::ONE).unwrap()
    }

    #[test]
    fn window_mass_examples() {
        let s = state();
        assert!((s.window_mass(&Window::all()) - 1.0).abs() < 1e-12);
        assert!((s.window_mass(&Window::new(-1.0, 1.0).unwrap()) - 0.5).abs() < 1e-12);
        assert_eq!(s.window_mass(&Window::new(2.0, 8.0).unwrap()), 0.0);
        assert_eq!(s.window_mass(&Window::up_to(-1.0)), 0.0);
    }

    #[test]
    fn translate_examples() {
        let s = state();
        let same = s.translate(0.0);
        assert_eq!(same.translation(), s.translation());
        assert_eq!(same.internal_bit(), s.internal_bit());
        let moved = s.translate(3.25);
        assert_eq!(moved.internal_bit(), Bit::ONE);
        let w = Window::new(-1.0 + 3.25, 1.0 + 3.25).unwrap();
        assert!((moved.window_mass(&w) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tailed_state_masses() {
        let xi = 4.0;
        let s = StretchedState::new(Profile::tailed(1.0, xi).unwrap(), 10.0, Bit::ZERO).unwrap();
        let [f, r] = s.hump_windows();
        let expected = 0.5 - 0.5 * (-xi).exp();
        // each hump window also catches a negligible sliver of the other hump
        assert!((s.window_mass(&f) - expected).abs() < 1e-9);
        assert!((s.window_mass(&r) - expected).abs() < 1e-9);
        let span = s.window_mass(&Window::new(-1.0, 11.0).unwrap());
        assert!(span < 1.0 && span > 1.0 - (-xi).exp());
    }

    #[test]
    fn delayed_overlap_rear_hump_is_half() {
        let s = state();
        let v = delayed_overlap(&DelayedState::rear_hump_of(&s), &s).unwrap();
        assert!((v - 0.5).abs() < 1e-12, "{v}");
    }

    #[test]
    fn delayed_overlap_disjoint_is_zero() {
        let s = state();
        let far = DelayedState::single(Waveform::compact(1.0, 5.0).unwrap());
        assert_eq!(delayed_overlap(&far, &s).unwrap(), 0.0);
    }

    #[test]
    fn delayed_overlap_rejects_front_coverage() {
        let s = state();
        let bad = DelayedState::single(Waveform::compact(1.0, 1.5).unwrap());
        assert_eq!(delayed_overlap(&bad, &s), Err(WavepacketError::SupportCoversFrontHump));
    }

    #[test]
    fn sampled_fire_times_follow_density() {
        let s = state();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let below = (0..n).filter(|_| s.sample_fire_time(&mut rng) <= 0.3).count();
        let p = s.window_mass(&Window::up_to(0.3));
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!(((below as f64 / n as f64) - p).abs() < 4.0 * sd);
    }
}
