//! Theory-side checks on simulated chains and graphs: the martingale
//! `X_j(t) = I_j(t) / prod_{tau < t} (1 - j / (2m - 2 tau - 1))`, the
//! deterministic trajectory of `I_j`, drift of `A(t)`, Poisson limits of
//! loop and parallel-pair counts, and the largest-component scaling record.

use alloc::vec::Vec;

use thiserror::Error;

use crate::degree::{DegreeSequence, EmpiricalDistribution};
use crate::exploration::{ChainSnapshot, ExplorationTrace};
use crate::pairing::ComponentReport;

/// Fewest reports accepted by [`poisson_limit_check`].
pub const MIN_POISSON_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("horizon exceeded: 2t = {two_t} must stay below 2m = {two_m}")]
    HorizonExceeded { two_t: u64, two_m: u64 },
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("no steps to average")]
    NoSteps,
}

/// `1 - j / (2m - 2 tau - 1)`, clamped at 0 once the pool is smaller than `j`.
#[inline]
pub fn survival_factor(j: u32, two_m: u64, tau: u64) -> f64 {
    let pool = two_m as f64 - 2.0 * tau as f64 - 1.0;
    (1.0 - j as f64 / pool).max(0.0)
}

/// `prod_{tau=0}^{t-1} (1 - j / (2m - 2 tau - 1))`.
pub fn survival_product(j: u32, two_m: u64, t: u64) -> f64 {
    (0..t).map(|tau| survival_factor(j, two_m, tau)).product()
}

/// `X_j(t)`; `None` when the normalizing product has vanished.
pub fn martingale_value(state: &ChainSnapshot, j: u32) -> Option<f64> {
    let norm = survival_product(j, state.two_m, state.t);
    (norm > 0.0).then(|| state.inactive(j) as f64 / norm)
}

/// `E[X_j(t+1) | state]` computed from the one-step transition law.
pub fn expected_next_martingale(state: &ChainSnapshot, j: u32) -> Option<f64> {
    let law = state.transition_law()?;
    let expected_i = state.inactive(j) as f64 - law.join_probability(j);
    let norm = survival_product(j, state.two_m, state.t + 1);
    (norm > 0.0).then(|| expected_i / norm)
}

/// Deterministic prediction for `I_j(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPrediction {
    pub j: u32,
    pub t: u64,
    /// `(n p_j - [j = d_v]) prod_{tau < t} (1 - j / (n d - 2 tau - 1))`.
    pub predicted_i: f64,
    /// `n p_j (1 - 2t / (n d))^(j/2)`.
    pub closed_form_i: f64,
    /// The product alone.
    pub product: f64,
    /// `(1 - 2t / (n d))^(j/2)`.
    pub closed_form_factor: f64,
}

impl TrajectoryPrediction {
    /// Relative gap between the product and its closed-form approximation.
    pub fn relative_gap(&self) -> f64 {
        (self.product - self.closed_form_factor).abs() / self.closed_form_factor
    }

    /// `5 j (t + 1) / (n d)`.
    pub fn gap_bound(&self, two_m: u64) -> f64 {
        5.0 * self.j as f64 * (self.t + 1) as f64 / two_m as f64
    }
}

pub fn predict_trajectory(
    dist: &EmpiricalDistribution,
    root_degree: u32,
    j: u32,
    t: u64,
) -> Result<TrajectoryPrediction, DiagnosticsError> {
    let two_m = dist.two_m();
    if 2 * t >= two_m {
        return Err(DiagnosticsError::HorizonExceeded { two_t: 2 * t, two_m });
    }
    let product = survival_product(j, two_m, t);
    let closed_form_factor = libm::pow(1.0 - 2.0 * t as f64 / two_m as f64, j as f64 / 2.0);
    Ok(TrajectoryPrediction {
        j,
        t,
        predicted_i: initial_inactive(dist, root_degree, j) as f64 * product,
        closed_form_i: dist.count(j) as f64 * closed_form_factor,
        product,
        closed_form_factor,
    })
}

fn initial_inactive(dist: &EmpiricalDistribution, root_degree: u32, j: u32) -> u64 {
    dist.count(j) - u64::from(j == root_degree && dist.count(j) > 0)
}

/// `max_{t <= T_v} |I_j(t) - predicted_I(j, t)| / n` along a recorded trace.
pub fn trajectory_deviation(trace: &ExplorationTrace, dist: &EmpiricalDistribution, j: u32) -> f64 {
    let two_m = dist.two_m();
    let n = dist.n() as f64;
    let initial = initial_inactive(dist, trace.root_degree, j) as f64;
    let mut observed = initial;
    let mut product = 1.0;
    let mut worst = 0.0f64;
    for (tau, rec) in trace.steps.iter().enumerate() {
        product *= survival_factor(j, two_m, tau as u64);
        if rec.partner_degree == j {
            observed -= 1.0;
        }
        worst = worst.max((observed - initial * product).abs() / n);
    }
    worst
}

/// `E[A(1) - A(0)]` for a root of the given degree, from the one-step law
/// at the initial state `A(0) = d_v`, `I_j(0) = n p_j - [j = d_v]`.
pub fn initial_drift(dist: &EmpiricalDistribution, root_degree: u32) -> Option<f64> {
    let mut inactive_counts = dist.counts().to_vec();
    let slot = inactive_counts.get_mut(root_degree as usize)?;
    *slot = slot.checked_sub(1)?;
    let snapshot = ChainSnapshot {
        t: 0,
        active: u64::from(root_degree),
        inactive_counts,
        two_m: dist.two_m(),
    };
    Some(snapshot.expected_next_active()? - root_degree as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftEstimate {
    /// Mean `A(t+1) - A(t)` over steps with `t < window`.
    pub mean_increment: f64,
    pub std_error: f64,
    pub samples: usize,
    /// Exact one-step drift at `t = 0`, averaged over the traces' roots.
    pub exact_initial: f64,
}

impl DriftEstimate {
    pub fn z_score(&self) -> f64 {
        (self.mean_increment - self.exact_initial) / self.std_error
    }
}

pub fn drift_estimate(
    traces: &[ExplorationTrace],
    dist: &EmpiricalDistribution,
    window: u64,
) -> Result<DriftEstimate, DiagnosticsError> {
    let increments: Vec<f64> = traces
        .iter()
        .flat_map(|tr| tr.steps.iter().take(window as usize))
        .map(|rec| rec.delta_active as f64)
        .collect();
    if increments.is_empty() || traces.is_empty() {
        return Err(DiagnosticsError::NoSteps);
    }
    let (mean, var) = mean_and_variance(&increments);
    let exact_initial = traces
        .iter()
        .map(|tr| initial_drift(dist, tr.root_degree).unwrap_or(0.0))
        .sum::<f64>()
        / traces.len() as f64;
    Ok(DriftEstimate {
        mean_increment: mean,
        std_error: libm::sqrt(var / increments.len() as f64),
        samples: increments.len(),
        exact_initial,
    })
}

/// `exp(-nu/2 - nu^2/4)`.
pub fn predicted_simple_probability(nu: f64) -> f64 {
    libm::exp(-nu / 2.0 - nu * nu / 4.0)
}

/// Sample moments of loop and parallel-pair counts with z-scores against
/// the Poisson limits `X ~ Po(nu/2)`, `Y ~ Po(nu^2/4)`, independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonStats {
    pub samples: usize,
    pub nu: f64,
    pub mean_loops: f64,
    pub mean_parallel: f64,
    pub var_loops: f64,
    pub var_parallel: f64,
    pub p_simple: f64,
    pub correlation: f64,
    pub z_loops: f64,
    pub z_parallel: f64,
    pub z_simple: f64,
    pub z_correlation: f64,
}

impl PoissonStats {
    pub fn expected_loops(&self) -> f64 {
        self.nu / 2.0
    }

    pub fn expected_parallel(&self) -> f64 {
        self.nu * self.nu / 4.0
    }

    pub fn expected_simple(&self) -> f64 {
        predicted_simple_probability(self.nu)
    }
}

pub fn poisson_limit_check(reports: &[ComponentReport], nu: f64) -> Result<PoissonStats, DiagnosticsError> {
    let n = reports.len();
    if n < MIN_POISSON_SAMPLES {
        return Err(DiagnosticsError::InsufficientSamples {
            needed: MIN_POISSON_SAMPLES,
            got: n,
        });
    }
    let xs: Vec<f64> = reports.iter().map(|r| r.loops as f64).collect();
    let ys: Vec<f64> = reports.iter().map(|r| r.parallel_pairs as f64).collect();
    let (mx, vx) = mean_and_variance(&xs);
    let (my, vy) = mean_and_variance(&ys);
    let cov = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / (n as f64 - 1.0);
    let correlation = if vx > 0.0 && vy > 0.0 { cov / libm::sqrt(vx * vy) } else { 0.0 };
    let p_simple = reports.iter().filter(|r| r.simple).count() as f64 / n as f64;

    let nf = n as f64;
    let target_x = nu / 2.0;
    let target_y = nu * nu / 4.0;
    let target_p = predicted_simple_probability(nu);
    Ok(PoissonStats {
        samples: n,
        nu,
        mean_loops: mx,
        mean_parallel: my,
        var_loops: vx,
        var_parallel: vy,
        p_simple,
        correlation,
        z_loops: z(mx - target_x, vx / nf),
        z_parallel: z(my - target_y, vy / nf),
        z_simple: z(p_simple - target_p, target_p * (1.0 - target_p) / nf),
        // Under independence the sample correlation has sd ~ 1/sqrt(n).
        z_correlation: correlation * libm::sqrt(nf),
    })
}

fn z(diff: f64, var_of_mean: f64) -> f64 {
    if var_of_mean > 0.0 {
        diff / libm::sqrt(var_of_mean)
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}

/// Mean and unbiased variance (0 for a single sample).
pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

/// Linear-interpolation quantile (type 7) of an ascending slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `n^(1/gamma) ln n`.
pub fn scaling_normalizer(n: usize, gamma: f64) -> f64 {
    let n = n as f64;
    libm::pow(n, 1.0 / gamma) * libm::log(n)
}

/// `max_v d_v / n^(1/gamma)`.
pub fn max_degree_ratio(seq: &DegreeSequence, gamma: f64) -> f64 {
    seq.max_degree() as f64 / libm::pow(seq.n() as f64, 1.0 / gamma)
}

/// Largest component of one replicate against `n^(1/gamma) ln n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRecord {
    pub n: usize,
    pub gamma: f64,
    pub nu_actual: f64,
    pub replicate: u64,
    pub largest: u32,
    pub normalized: f64,
}

impl ScalingRecord {
    pub fn new(seq: &DegreeSequence, gamma: f64, replicate: u64, largest: u32) -> Self {
        let n = seq.n();
        Self {
            n,
            gamma,
            nu_actual: seq.distribution().nu(),
            replicate,
            largest,
            normalized: largest as f64 / scaling_normalizer(n, gamma),
        }
    }
}
