//! Complex Gaussian vectors, their concentration bounds, and formally
//! Fourier-conjugate families.
//!
//! A Gaussian vector in `C^D` has i.i.d. coefficients `cᵢ ~ N_C(0, 1/D)`: real and
//! imaginary parts are independent `N(0, 1/(2D))`. Normal deviates come from
//! `rand_distr::StandardNormal` (ziggurat method) driven by a ChaCha20 substream,
//! so a sampler built from the same seed yields a bit-identical stream.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qit::{CVector, PureState, C64};
use crate::random::complex_normal;
use crate::rng::{self, StreamRng};
use crate::stats::wilson_upper_99;

#[derive(Debug, Clone)]
pub struct GaussianSampler {
    dim: usize,
    rng: StreamRng,
}

impl GaussianSampler {
    pub fn new(dim: usize, master_seed: u64, label: &str, index: u64) -> Result<Self> {
        Self::from_rng(dim, rng::stream(master_seed, label, index))
    }

    pub fn from_rng(dim: usize, rng: StreamRng) -> Result<Self> {
        if dim == 0 {
            return Err(Error::OutOfRange {
                what: "ambient dimension",
                value: 0.0,
                range: ">= 1",
            });
        }
        Ok(Self { dim, rng })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample(&mut self) -> PureState {
        let var = 1.0 / self.dim as f64;
        let rng = &mut self.rng;
        PureState::from_vector(CVector::from_fn(self.dim, |_, _| complex_normal(var, rng)))
    }

    pub fn sample_many(&mut self, count: usize) -> Vec<PureState> {
        (0..count).map(|_| self.sample()).collect()
    }

    pub(crate) fn rng_mut(&mut self) -> &mut StreamRng {
        &mut self.rng
    }
}

fn dft_family(v: &[PureState], sign: f64) -> Result<Vec<PureState>> {
    let n = v.len();
    let first = v.first().ok_or(Error::EmptyFamily)?;
    let dim = first.dim();
    if let Some(bad) = v.iter().find(|x| x.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.dim(),
        });
    }
    let s = 1.0 / (n as f64).sqrt();
    Ok((0..n)
        .map(|k| {
            let mut w = CVector::zeros(dim);
            for (j, vj) in v.iter().enumerate() {
                let phase = sign * 2.0 * PI * ((j * k) % n) as f64 / n as f64;
                w.axpy(C64::from_polar(s, phase), vj.vector(), C64::new(1.0, 0.0));
            }
            PureState::from_vector(w)
        })
        .collect())
}

/// `w_k = (1/√N) Σⱼ e^{2πi jk/N} vⱼ` with indices from zero. No normalization is assumed.
pub fn fourier_conjugate_family(v: &[PureState]) -> Result<Vec<PureState>> {
    dft_family(v, 1.0)
}

/// Inverse of [`fourier_conjugate_family`].
pub fn inverse_fourier_family(w: &[PureState]) -> Result<Vec<PureState>> {
    dft_family(w, -1.0)
}

/// The four deviation events of the concentration lemma.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TailBound {
    /// `|⟨g|g⟩ − 1| > ε`
    #[serde(rename = "length")]
    Length,
    /// `|Σₖ ⟨gₖ|P|gₖ⟩ − rK/D| > ε rK/D` for a rank-r projector P.
    #[serde(rename = "projector_sum")]
    ProjectorSum,
    /// `⟨g|A|g⟩ > (1+ε) tr A / D`
    #[serde(rename = "trA_plus")]
    TrAPlus,
    /// `⟨g|A|g⟩ < (1−ε) tr A / D`
    #[serde(rename = "trA_minus")]
    TrAMinus,
}

impl TailBound {
    pub const ALL: [TailBound; 4] = [
        TailBound::Length,
        TailBound::ProjectorSum,
        TailBound::TrAPlus,
        TailBound::TrAMinus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TailBound::Length => "length",
            TailBound::ProjectorSum => "projector_sum",
            TailBound::TrAPlus => "trA_plus",
            TailBound::TrAMinus => "trA_minus",
        }
    }

    /// Largest ε for which the bound is stated.
    pub fn max_epsilon(self) -> f64 {
        match self {
            TailBound::Length | TailBound::ProjectorSum => 1.0,
            TailBound::TrAPlus | TailBound::TrAMinus => 1.0 / 3.0,
        }
    }
}

/// Parameters of a concentration experiment.
///
/// The observable `A` is given by its diagonal in the sampling basis; every
/// `0 ⪯ A ⪯ 1` is unitarily equivalent to such a diagonal. The projector `P`
/// of the projector-sum event is the span of the first `rank` basis vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailParams {
    pub dim: usize,
    pub epsilon: f64,
    pub rank: usize,
    pub copies: usize,
    pub a_diag: Vec<f64>,
}

impl TailParams {
    /// `A = P` = projector onto the first `rank` coordinates.
    pub fn with_projector(dim: usize, epsilon: f64, rank: usize, copies: usize) -> Self {
        let a_diag = (0..dim).map(|i| if i < rank { 1.0 } else { 0.0 }).collect();
        Self {
            dim,
            epsilon,
            rank,
            copies,
            a_diag,
        }
    }

    pub fn trace_a(&self) -> f64 {
        self.a_diag.iter().sum()
    }

    fn validate(&self, bound: TailBound) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::OutOfRange {
                what: "ambient dimension",
                value: 0.0,
                range: ">= 1",
            });
        }
        let max_eps = bound.max_epsilon();
        if !(self.epsilon >= 0.0 && self.epsilon <= max_eps) {
            return Err(Error::OutOfRange {
                what: "epsilon",
                value: self.epsilon,
                range: if max_eps < 1.0 { "[0, 1/3]" } else { "[0, 1]" },
            });
        }
        match bound {
            TailBound::Length => {}
            TailBound::ProjectorSum => {
                if self.rank == 0 || self.rank > self.dim || self.copies == 0 {
                    return Err(Error::Invalid(format!(
                        "projector rank {} must be in 1..={} and copies {} >= 1",
                        self.rank, self.dim, self.copies
                    )));
                }
            }
            TailBound::TrAPlus | TailBound::TrAMinus => {
                if self.a_diag.len() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        found: self.a_diag.len(),
                    });
                }
                if let Some(&a) = self.a_diag.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                    return Err(Error::OutOfRange {
                        what: "eigenvalue of A",
                        value: a,
                        range: "[0, 1]",
                    });
                }
            }
        }
        Ok(())
    }
}

/// Theoretical bound on the probability of the deviation event (natural exponentials).
pub fn tail_bound(bound: TailBound, params: &TailParams) -> Result<f64> {
    params.validate(bound)?;
    let eps2 = params.epsilon * params.epsilon;
    Ok(match bound {
        TailBound::Length => 2.0 * (-eps2 * params.dim as f64 / 6.0).exp(),
        TailBound::ProjectorSum => {
            2.0 * (-((params.rank * params.copies) as f64) * eps2 / 6.0).exp()
        }
        TailBound::TrAPlus | TailBound::TrAMinus => (-eps2 / 4.0 * params.trace_a()).exp(),
    })
}

/// Draws what the event needs and reports whether the deviation occurred.
pub fn tail_event<R: Rng + ?Sized>(bound: TailBound, params: &TailParams, rng: &mut R) -> bool {
    let d = params.dim;
    let var = 1.0 / d as f64;
    let eps = params.epsilon;
    match bound {
        TailBound::Length => {
            let len: f64 = (0..d).map(|_| complex_normal(var, rng).norm_sqr()).sum();
            (len - 1.0).abs() > eps
        }
        TailBound::ProjectorSum => {
            let mut total = 0.0;
            for _ in 0..params.copies {
                for i in 0..d {
                    let c = complex_normal(var, rng).norm_sqr();
                    if i < params.rank {
                        total += c;
                    }
                }
            }
            let mean = (params.rank * params.copies) as f64 / d as f64;
            (total - mean).abs() > eps * mean
        }
        TailBound::TrAPlus | TailBound::TrAMinus => {
            let q: f64 = params
                .a_diag
                .iter()
                .map(|&a| a * complex_normal(var, rng).norm_sqr())
                .sum();
            let mean = params.trace_a() / d as f64;
            if bound == TailBound::TrAPlus {
                q > (1.0 + eps) * mean
            } else {
                q < (1.0 - eps) * mean
            }
        }
    }
}

/// Monte Carlo audit of one concentration bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBoundReport {
    pub bound_name: TailBound,
    pub epsilon: f64,
    pub theoretical: f64,
    pub empirical: f64,
    pub trials: u64,
    pub wilson_upper: f64,
}

impl TailBoundReport {
    pub fn from_counts(bound: TailBound, epsilon: f64, theoretical: f64, events: u64, trials: u64) -> Self {
        Self {
            bound_name: bound,
            epsilon,
            theoretical,
            empirical: events as f64 / trials as f64,
            trials,
            wilson_upper: wilson_upper_99(events, trials),
        }
    }

    pub fn vacuous(&self) -> bool {
        self.theoretical >= 1.0
    }

    /// Passes when the 99% upper limit sits below the bound, or the bound is vacuous.
    pub fn passed(&self) -> bool {
        self.vacuous() || self.wilson_upper <= self.theoretical
    }
}

pub const MIN_TAIL_TRIALS: u64 = 1000;

/// Runs `trials` independent deviation trials; trial `i` uses substream `(seed, bound, i)`.
pub fn empirical_tail(
    bound: TailBound,
    params: &TailParams,
    trials: u64,
    seed: u64,
) -> Result<TailBoundReport> {
    let theoretical = tail_bound(bound, params)?;
    if trials < MIN_TAIL_TRIALS {
        return Err(Error::OutOfRange {
            what: "trials",
            value: trials as f64,
            range: ">= 1000",
        });
    }
    let label = format!("tail/{}", bound.name());
    let events = (0..trials)
        .into_par_iter()
        .filter(|&i| {
            let mut r = rng::stream(seed, &label, i);
            tail_event(bound, params, &mut r)
        })
        .count() as u64;
    Ok(TailBoundReport::from_counts(
        bound,
        params.epsilon,
        theoretical,
        events,
        trials,
    ))
}

/// `E exp(t a |c|²) = 1 / (1 − t a / D)` for `c ~ N_C(0, 1/D)`.
pub fn mgf_reference(t: f64, a: f64, dim: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::OutOfRange {
            what: "weight a",
            value: a,
            range: "[0, 1]",
        });
    }
    let ratio = t * a / dim as f64;
    if ratio >= 1.0 {
        return Err(Error::Divergence { ratio });
    }
    Ok(1.0 / (1.0 - ratio))
}

/// Sample mean of `exp(t a |c|²)`.
pub fn empirical_mgf(t: f64, a: f64, dim: usize, samples: u64, seed: u64) -> Result<f64> {
    mgf_reference(t, a, dim)?;
    let mut sampler = GaussianSampler::new(dim, seed, "mgf", 0)?;
    let var = 1.0 / dim as f64;
    let rng = sampler.rng_mut();
    let sum: f64 = (0..samples)
        .map(|_| (t * a * complex_normal(var, rng).norm_sqr()).exp())
        .sum();
    Ok(sum / samples as f64)
}

/// Outcome of checking the two logarithm lower bounds on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogBoundReport {
    pub delta: f64,
    pub points: usize,
    /// `min ln(1+x) − (x − x²/(2(1−δ)))` over grid points in `[−δ, 0]`.
    pub min_slack_negative: Option<f64>,
    /// `min ln(1+x) − (x − x²/2)` over grid points in `[0, 1]`.
    pub min_slack_positive: Option<f64>,
    pub holds: bool,
}

/// Checks `ln(1+x) ≥ x − x²/(2(1−δ))` on `[−δ, 0]` and `ln(1+x) ≥ x − x²/2` on `[0, 1]`.
pub fn log_lower_bound_check(delta: f64, grid: &[f64]) -> Result<LogBoundReport> {
    if !(delta < 1.0) || delta < 0.0 {
        return Err(Error::OutOfRange {
            what: "delta",
            value: delta,
            range: "[0, 1)",
        });
    }
    let mut neg: Option<f64> = None;
    let mut pos: Option<f64> = None;
    for &x in grid {
        if !(x >= -delta && x <= 1.0) {
            return Err(Error::OutOfRange {
                what: "grid point",
                value: x,
                range: "[-delta, 1]",
            });
        }
        let ln = x.ln_1p();
        if x <= 0.0 {
            let s = ln - (x - x * x / (2.0 * (1.0 - delta)));
            neg = Some(neg.map_or(s, |m| m.min(s)));
        }
        if x >= 0.0 {
            let s = ln - (x - x * x / 2.0);
            pos = Some(pos.map_or(s, |m| m.min(s)));
        }
    }
    let holds = neg.map_or(true, |s| s >= 0.0) && pos.map_or(true, |s| s >= 0.0);
    Ok(LogBoundReport {
        delta,
        points: grid.len(),
        min_slack_negative: neg,
        min_slack_positive: pos,
        holds,
    })
}
