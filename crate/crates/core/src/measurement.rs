//! Outcome sampling, verification and minimum-error discrimination.
//!
//! The receiver's measurement is the three-outcome resolution
//! `{P₀, P₁, P⊥}`. `P₀`/`P₁` are localized to the nominal hump windows of
//! the agreed state shape, so an honest compact state only ever lands in the
//! channel of its internal bit. A tailed state lands in `P⊥` whenever its
//! outcome falls outside both windows.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wavepacket::{delayed_overlap, DelayedState, StretchedState, WavepacketError};
use crate::Bit;

const HERMITIAN_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error("operator is not Hermitian")]
    NotHermitian,
    #[error("operator must be square and non-empty, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },
    #[error("invalid prior ({0}, {1})")]
    InvalidPrior(f64, f64),
    #[error(transparent)]
    Wavepacket(#[from] WavepacketError),
}

/// Which projector fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ch0,
    Ch1,
    Perp,
}

impl Outcome {
    pub fn for_bit(bit: Bit) -> Outcome {
        if bit.is_one() {
            Outcome::Ch1
        } else {
            Outcome::Ch0
        }
    }

    /// The logical value carried by a `Ch0`/`Ch1` outcome.
    pub fn bit(self) -> Option<Bit> {
        match self {
            Outcome::Ch0 => Some(Bit::ZERO),
            Outcome::Ch1 => Some(Bit::ONE),
            Outcome::Perp => None,
        }
    }
}

/// Result of measuring one channel up to some horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum DetectionRecord {
    Fired { outcome: Outcome, fire_time: f64 },
    Silent,
}

impl DetectionRecord {
    pub fn fire_time(&self) -> Option<f64> {
        match *self {
            DetectionRecord::Fired { fire_time, .. } => Some(fire_time),
            DetectionRecord::Silent => None,
        }
    }

    pub fn outcome(&self) -> Option<Outcome> {
        match *self {
            DetectionRecord::Fired { outcome, .. } => Some(outcome),
            DetectionRecord::Silent => None,
        }
    }

    /// The same record as seen by an observer whose light-cone horizon is
    /// `horizon`: anything that fires later is still silent.
    pub fn truncate(&self, horizon: f64) -> DetectionRecord {
        match *self {
            DetectionRecord::Fired { fire_time, .. } if fire_time > horizon => {
                DetectionRecord::Silent
            }
            other => other,
        }
    }
}

/// Draws the outcome of measuring `state` with an apparatus that can reach
/// light-cone times up to `horizon`.
pub fn sample_detection<R: Rng + ?Sized>(
    state: &StretchedState,
    horizon: f64,
    rng: &mut R,
) -> DetectionRecord {
    let fire_time = state.sample_fire_time(rng);
    classify(state, fire_time).truncate(horizon)
}

/// Projector hit by an honest state whose outcome occurred at `fire_time`.
pub(crate) fn classify(state: &StretchedState, fire_time: f64) -> DetectionRecord {
    let in_window = state.hump_windows().iter().any(|w| w.contains(fire_time));
    let outcome = if in_window {
        Outcome::for_bit(state.internal_bit())
    } else {
        Outcome::Perp
    };
    DetectionRecord::Fired { outcome, fire_time }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verification {
    Consistent,
    Discrepant,
}

/// Compares a record with the announced value. Silent records and `Perp`
/// outcomes are discrepant; callers decide when silence is admissible.
pub fn verify_outcome(announced: Bit, record: &DetectionRecord) -> Verification {
    match record.outcome().and_then(Outcome::bit) {
        Some(b) if b == announced => Verification::Consistent,
        _ => Verification::Discrepant,
    }
}

/// Draws the outcome for a delayed state measured against the honest
/// projectors of `honest`. It fires in the honest channel with probability
/// [`delayed_overlap`] and in `P⊥` otherwise.
pub fn sample_cheat_detection<R: Rng + ?Sized>(
    delayed: &DelayedState,
    honest: &StretchedState,
    rng: &mut R,
) -> Result<DetectionRecord, MeasurementError> {
    let p = delayed_overlap(delayed, honest)?;
    Ok(cheat_record(p, delayed, honest.internal_bit(), rng))
}

pub(crate) fn cheat_record<R: Rng + ?Sized>(
    overlap: f64,
    delayed: &DelayedState,
    announced: Bit,
    rng: &mut R,
) -> DetectionRecord {
    let pass = rng.gen::<f64>() < overlap;
    let fire_time = delayed.sample_fire_time(rng);
    let outcome = if pass { Outcome::for_bit(announced) } else { Outcome::Perp };
    DetectionRecord::Fired { outcome, fire_time }
}

/// [`sample_cheat_detection`] with the overlap computed once up front.
#[derive(Debug, Clone)]
pub struct CheatSampler {
    delayed: DelayedState,
    announced: Bit,
    overlap: f64,
}

impl CheatSampler {
    pub fn new(delayed: DelayedState, honest: &StretchedState) -> Result<Self, MeasurementError> {
        let overlap = delayed_overlap(&delayed, honest)?;
        Ok(CheatSampler { delayed, announced: honest.internal_bit(), overlap })
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    /// Same sampler, announcing `bit` instead.
    pub fn announcing(&self, bit: Bit) -> CheatSampler {
        CheatSampler { announced: bit, ..self.clone() }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DetectionRecord {
        cheat_record(self.overlap, &self.delayed, self.announced, rng)
    }
}

/// Prior probabilities of the two hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorPair {
    p0: f64,
    p1: f64,
}

impl PriorPair {
    pub fn new(p0: f64, p1: f64) -> Result<PriorPair, MeasurementError> {
        if !(p0 >= 0.0 && p1 >= 0.0 && (p0 + p1 - 1.0).abs() <= 1e-12) {
            return Err(MeasurementError::InvalidPrior(p0, p1));
        }
        Ok(PriorPair { p0, p1 })
    }

    pub fn uniform() -> PriorPair {
        PriorPair { p0: 0.5, p1: 0.5 }
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }
}

/// `Γ = π₁ρ₁ − π₀ρ₀` on the internal space, together with the spatial mass
/// factor of the accessible window.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaOperator {
    matrix: DMatrix<f64>,
    spatial_mass: f64,
}

impl GammaOperator {
    pub fn new(matrix: DMatrix<f64>, spatial_mass: f64) -> Result<Self, MeasurementError> {
        let (rows, cols) = matrix.shape();
        if rows == 0 || rows != cols {
            return Err(MeasurementError::BadShape { rows, cols });
        }
        let scale = matrix.amax().max(1.0);
        if (&matrix - matrix.transpose()).amax() > HERMITIAN_TOL * scale {
            return Err(MeasurementError::NotHermitian);
        }
        Ok(GammaOperator { matrix, spatial_mass })
    }

    pub fn from_ensemble(
        prior: PriorPair,
        rho0: &DMatrix<f64>,
        rho1: &DMatrix<f64>,
        spatial_mass: f64,
    ) -> Result<Self, MeasurementError> {
        if rho0.shape() != rho1.shape() {
            let (rows, cols) = rho1.shape();
            return Err(MeasurementError::BadShape { rows, cols });
        }
        GammaOperator::new(rho1 * prior.p1 - rho0 * prior.p0, spatial_mass)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn spatial_mass(&self) -> f64 {
        self.spatial_mass
    }

    /// Trace of the full operator, internal trace times spatial mass.
    pub fn trace(&self) -> f64 {
        self.matrix.trace() * self.spatial_mass
    }

    /// Eigenvalues in ascending order with unit eigenvectors as columns.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<f64>) {
        if self.matrix.nrows() == 2 {
            return eigen_2x2(&self.matrix);
        }
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.matrix.nrows(), order.len(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        (values, vectors)
    }
}

fn eigen_2x2(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (a, b, d) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    let mean = 0.5 * (a + d);
    let radius = (0.5 * (a - d)).hypot(b);
    let (lo, hi) = (mean - radius, mean + radius);
    // eigenvector of the lower eigenvalue, orthogonal complement for the upper
    let (x, y) = if b.abs() > 0.0 {
        let (x, y) = (b, lo - a);
        let n = x.hypot(y);
        (x / n, y / n)
    } else if a <= d {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    (vec![lo, hi], DMatrix::from_row_slice(2, 2, &[x, -y, y, x]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HelstromResult {
    /// Minimum error probability restricted to the accessible window.
    pub error: f64,
    /// Optimal operator for deciding "0": projector onto the negative
    /// eigenspace of Γ. The decision for "1" is its complement.
    pub projector: DMatrix<f64>,
}

/// Minimum-error discrimination: `P_e = m · (π₀ + Σ_{γᵢ ≤ 0} γᵢ)` where `m`
/// is the accessible spatial mass.
pub fn helstrom_error(
    prior: PriorPair,
    gamma: &GammaOperator,
    accessible_mass: f64,
) -> Result<HelstromResult, MeasurementError> {
    let (values, vectors) = gamma.eigen();
    let d = gamma.matrix.nrows();
    let mut projector = DMatrix::zeros(d, d);
    let mut negative = 0.0;
    for (i, &v) in values.iter().enumerate() {
        if v <= 0.0 {
            negative += v;
        }
        if v < -EIGEN_TOL {
            let col = vectors.column(i);
            projector += col * col.transpose();
        }
    }
    let error = (accessible_mass * (prior.p0 + negative)).max(0.0);
    Ok(HelstromResult { error, projector })
}

/// Total error when the outcome fires with probability `p_fire`:
/// `pe_silent·(1 − p_fire) + pe_fired·p_fire`.
pub fn composite_error(p_fire: f64, pe_fired: f64, pe_silent: f64) -> f64 {
    pe_silent * (1.0 - p_fire) + pe_fired * p_fire
}
