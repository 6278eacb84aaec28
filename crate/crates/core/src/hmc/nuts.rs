//! Leapfrog integration and the No-U-Turn trajectory builder with
//! multinomial candidate selection (Hoffman & Gelman 2014; Betancourt 2017).

use rand::Rng;
use rand_distr::StandardNormal;

use super::TargetDensity;
use crate::stats::log_sum_exp;

/// Energy error above which a transition counts as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1000.0;

/// Diagonal metric: kinetic energy `p^T M^{-1} p / 2` with `M^{-1}` stored
/// per coordinate. The identity metric is the default.
#[derive(Debug, Clone)]
pub struct DiagMetric {
    inv_mass: Vec<f64>,
    sqrt_mass: Vec<f64>,
}

impl DiagMetric {
    pub fn identity(dim: usize) -> Self {
        DiagMetric {
            inv_mass: vec![1.0; dim],
            sqrt_mass: vec![1.0; dim],
        }
    }

    /// Metric from an estimate of the posterior variances: `M^{-1} = var`.
    pub fn from_variance(var: &[f64]) -> Self {
        DiagMetric {
            inv_mass: var.to_vec(),
            sqrt_mass: var.iter().map(|&v| 1.0 / v.sqrt()).collect(),
        }
    }

    pub fn inv_mass(&self) -> &[f64] {
        &self.inv_mass
    }

    fn kinetic(&self, momentum: &[f64]) -> f64 {
        0.5 * momentum
            .iter()
            .zip(&self.inv_mass)
            .map(|(&p, &im)| p * p * im)
            .sum::<f64>()
    }

    fn sample_momentum<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        for (p, &sm) in out.iter_mut().zip(&self.sqrt_mass) {
            let z: f64 = rng.sample(StandardNormal);
            *p = z * sm;
        }
    }
}

/// A point on the Hamiltonian trajectory with its cached gradient.
#[derive(Debug, Clone)]
pub struct PhasePoint {
    pub position: Vec<f64>,
    pub momentum: Vec<f64>,
    pub gradient: Vec<f64>,
    pub log_density: f64,
}

impl PhasePoint {
    /// Evaluate the target at `position` with the given momentum.
    pub fn new<T: TargetDensity + ?Sized>(
        target: &T,
        position: Vec<f64>,
        momentum: Vec<f64>,
    ) -> PhasePoint {
        let mut gradient = vec![0.0; position.len()];
        let log_density = target.evaluate(&position, &mut gradient);
        PhasePoint {
            position,
            momentum,
            gradient,
            log_density,
        }
    }

    pub fn energy(&self, metric: &DiagMetric) -> f64 {
        -self.log_density + metric.kinetic(&self.momentum)
    }
}

/// One symplectic leapfrog step. Non-finite gradients or densities do not
/// crash; they surface as a divergent energy in the caller's check.
pub fn leapfrog<T: TargetDensity + ?Sized>(
    target: &T,
    point: &PhasePoint,
    step_size: f64,
    metric: &DiagMetric,
) -> PhasePoint {
    let dim = point.position.len();
    let mut momentum = vec![0.0; dim];
    let mut position = vec![0.0; dim];
    for i in 0..dim {
        momentum[i] = point.momentum[i] + 0.5 * step_size * point.gradient[i];
    }
    for i in 0..dim {
        position[i] = point.position[i] + step_size * metric.inv_mass[i] * momentum[i];
    }
    let mut gradient = vec![0.0; dim];
    let log_density = target.evaluate(&position, &mut gradient);
    for i in 0..dim {
        momentum[i] += 0.5 * step_size * gradient[i];
    }
    PhasePoint {
        position,
        momentum,
        gradient,
        log_density,
    }
}

/// Outcome of one NUTS transition.
#[derive(Debug)]
pub struct NutsOutcome {
    pub point: PhasePoint,
    /// Mean Metropolis statistic over the trajectory's leapfrog steps.
    pub accept_stat: f64,
    pub divergent: bool,
    pub depth: usize,
}

struct Subtree {
    left: PhasePoint,
    right: PhasePoint,
    proposal: PhasePoint,
    log_sum_weight: f64,
    sum_accept: f64,
    n_leaves: usize,
    turning: bool,
    divergent: bool,
}

/// One NUTS transition from `current`: refresh the momentum, grow a
/// doubling trajectory until a U-turn, divergence, or the depth cap, and
/// return a multinomially selected point.
pub fn nuts_step<T: TargetDensity + ?Sized, R: Rng>(
    target: &T,
    mut current: PhasePoint,
    step_size: f64,
    max_depth: usize,
    metric: &DiagMetric,
    rng: &mut R,
) -> NutsOutcome {
    metric.sample_momentum(rng, &mut current.momentum);
    let h0 = current.energy(metric);

    let mut left = current.clone();
    let mut right = current.clone();
    let mut proposal = current;
    let mut log_sum_weight = 0.0; // the initial point carries weight exp(0)
    let mut sum_accept = 0.0;
    let mut n_leaves = 0usize;
    let mut depth = 0;
    let mut divergent = false;

    while depth < max_depth {
        let forward = rng.gen::<bool>();
        let subtree = if forward {
            build_subtree(target, &right, step_size, depth, h0, metric, rng)
        } else {
            build_subtree(target, &left, -step_size, depth, h0, metric, rng)
        };

        sum_accept += subtree.sum_accept;
        n_leaves += subtree.n_leaves;

        if subtree.divergent {
            divergent = true;
            break;
        }
        if subtree.turning {
            break;
        }

        // Biased progressive sampling across doublings.
        let accept_new = (subtree.log_sum_weight - log_sum_weight).min(0.0).exp();
        if rng.gen::<f64>() < accept_new {
            proposal = subtree.proposal;
        }
        log_sum_weight = log_sum_exp(&[log_sum_weight, subtree.log_sum_weight]);

        if forward {
            right = subtree.right;
        } else {
            left = subtree.left;
        }
        if is_turning(&left, &right, metric) {
            depth += 1;
            break;
        }
        depth += 1;
    }

    let accept_stat = if n_leaves > 0 {
        sum_accept / n_leaves as f64
    } else {
        0.0
    };
    NutsOutcome {
        point: proposal,
        accept_stat,
        divergent,
        depth,
    }
}

fn build_subtree<T: TargetDensity + ?Sized, R: Rng>(
    target: &T,
    from: &PhasePoint,
    step: f64,
    depth: usize,
    h0: f64,
    metric: &DiagMetric,
    rng: &mut R,
) -> Subtree {
    if depth == 0 {
        let next = leapfrog(target, from, step, metric);
        let delta_h = next.energy(metric) - h0;
        let divergent = !delta_h.is_finite() || delta_h > DIVERGENCE_THRESHOLD;
        let log_weight = if divergent { f64::NEG_INFINITY } else { -delta_h };
        let accept = if delta_h.is_finite() {
            (-delta_h).min(0.0).exp()
        } else {
            0.0
        };
        return Subtree {
            left: next.clone(),
            right: next.clone(),
            proposal: next,
            log_sum_weight: log_weight,
            sum_accept: accept,
            n_leaves: 1,
            turning: false,
            divergent,
        };
    }

    let first = build_subtree(target, from, step, depth - 1, h0, metric, rng);
    if first.divergent || first.turning {
        return first;
    }
    let grow_from = if step > 0.0 { &first.right } else { &first.left };
    let second = build_subtree(target, grow_from, step, depth - 1, h0, metric, rng);

    let sum_accept = first.sum_accept + second.sum_accept;
    let n_leaves = first.n_leaves + second.n_leaves;
    if second.divergent || second.turning {
        return Subtree {
            left: first.left,
            right: first.right,
            proposal: first.proposal,
            log_sum_weight: first.log_sum_weight,
            sum_accept,
            n_leaves,
            turning: second.turning,
            divergent: second.divergent,
        };
    }

    // Multinomial selection between the two halves.
    let log_sum_weight = log_sum_exp(&[first.log_sum_weight, second.log_sum_weight]);
    let take_second = (second.log_sum_weight - log_sum_weight).exp();
    let proposal = if rng.gen::<f64>() < take_second {
        second.proposal
    } else {
        first.proposal
    };
    let (left, right) = if step > 0.0 {
        (first.left, second.right)
    } else {
        (second.left, first.right)
    };
    let turning = is_turning(&left, &right, metric);
    Subtree {
        left,
        right,
        proposal,
        log_sum_weight,
        sum_accept,
        n_leaves,
        turning,
        divergent: false,
    }
}

/// Generalized U-turn criterion on the subtree endpoints.
fn is_turning(left: &PhasePoint, right: &PhasePoint, metric: &DiagMetric) -> bool {
    let mut dot_left = 0.0;
    let mut dot_right = 0.0;
    for i in 0..left.position.len() {
        let dq = right.position[i] - left.position[i];
        dot_left += dq * metric.inv_mass[i] * left.momentum[i];
        dot_right += dq * metric.inv_mass[i] * right.momentum[i];
    }
    dot_left < 0.0 || dot_right < 0.0
}

/// Double or halve the step size until the one-step acceptance crosses 1/2
/// (Hoffman & Gelman 2014, algorithm 4).
pub fn find_reasonable_step_size<T: TargetDensity + ?Sized, R: Rng>(
    target: &T,
    position: &[f64],
    metric: &DiagMetric,
    rng: &mut R,
) -> f64 {
    let mut point = PhasePoint::new(target, position.to_vec(), vec![0.0; position.len()]);
    metric.sample_momentum(rng, &mut point.momentum);
    let h0 = point.energy(metric);

    let log_accept_at = |eps: f64| -> f64 {
        let next = leapfrog(target, &point, eps, metric);
        let delta = h0 - next.energy(metric);
        if delta.is_finite() {
            delta.min(0.0)
        } else {
            f64::NEG_INFINITY
        }
    };

    let mut eps = 1.0;
    let mut log_a = log_accept_at(eps);
    while !log_a.is_finite() && eps > 1e-10 {
        eps *= 0.1;
        log_a = log_accept_at(eps);
    }
    let half = (0.5f64).ln();
    let direction: f64 = if log_a > half { 1.0 } else { -1.0 };
    for _ in 0..100 {
        let candidate = eps * 2f64.powf(direction);
        if !(1e-10..=1e3).contains(&candidate) {
            break;
        }
        let log_a = log_accept_at(candidate);
        if (direction > 0.0 && log_a <= half) || (direction < 0.0 && log_a > half) {
            break;
        }
        eps = candidate;
    }
    eps.clamp(1e-10, 1e3)
}
