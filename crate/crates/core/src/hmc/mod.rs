//! Gradient-based MCMC: Hamiltonian dynamics with No-U-Turn termination,
//! dual-averaging step-size adaptation, embarrassingly parallel chains, and
//! split R-hat diagnostics. Generic over any differentiable log-density.

mod adapt;
mod diagnostics;
mod nuts;

pub use adapt::{DualAveraging, RunningVariance};
pub use diagnostics::{potential_scale_reduction, quantile, summarize, ParamSummary};
pub use nuts::{
    find_reasonable_step_size, leapfrog, nuts_step, DiagMetric, NutsOutcome, PhasePoint,
    DIVERGENCE_THRESHOLD,
};

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// A differentiable unnormalized log-density. Evaluation must be
/// deterministic and safe to call concurrently.
pub trait TargetDensity: Sync {
    fn dim(&self) -> usize;

    /// Write the gradient into `grad` (length `dim`) and return the
    /// log-density value.
    fn evaluate(&self, position: &[f64], grad: &mut [f64]) -> f64;
}

/// Metric handling during warmup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassAdaptation {
    /// Identity metric throughout (the default).
    Identity,
    /// Estimate a diagonal metric from warmup draws.
    Diagonal,
}

/// Multi-chain sampling configuration. The defaults reproduce the reference
/// budget: 16 chains of 4,000 retained draws each.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub n_chains: usize,
    pub n_samples: usize,
    pub n_warmup: usize,
    pub target_accept: f64,
    pub max_tree_depth: usize,
    pub seed: u64,
    pub mass_adaptation: MassAdaptation,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            n_chains: 16,
            n_samples: 4000,
            n_warmup: 1000,
            target_accept: 0.8,
            max_tree_depth: 10,
            seed: 0,
            mass_adaptation: MassAdaptation::Identity,
        }
    }
}

impl ChainConfig {
    fn validate(&self) -> Result<()> {
        if self.n_chains == 0 || self.n_samples == 0 || self.n_warmup == 0 {
            return Err(Error::domain("chains, samples, and warmup must be positive"));
        }
        if !(0.0 < self.target_accept && self.target_accept < 1.0) {
            return Err(Error::domain("target_accept must lie in (0, 1)"));
        }
        if self.max_tree_depth == 0 {
            return Err(Error::domain("max_tree_depth must be positive"));
        }
        Ok(())
    }
}

/// Retained posterior draws with chain provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    dim: usize,
    n_chains: usize,
    n_per_chain: usize,
    /// Chain-major, then draw-major, row stride `dim`.
    draws: Vec<f64>,
    log_densities: Vec<f64>,
    mean_accept: Vec<f64>,
    divergences: Vec<usize>,
    step_sizes: Vec<f64>,
}

impl PosteriorSamples {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_chains(&self) -> usize {
        self.n_chains
    }

    pub fn n_per_chain(&self) -> usize {
        self.n_per_chain
    }

    pub fn total(&self) -> usize {
        self.n_chains * self.n_per_chain
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        &self.draws[i * self.dim..(i + 1) * self.dim]
    }

    pub fn draws_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.draws.chunks_exact(self.dim)
    }

    pub fn log_density(&self, i: usize) -> f64 {
        self.log_densities[i]
    }

    pub fn param_column(&self, j: usize) -> Vec<f64> {
        self.draws_iter().map(|row| row[j]).collect()
    }

    pub fn chain_column(&self, chain: usize, j: usize) -> Vec<f64> {
        let start = chain * self.n_per_chain;
        (start..start + self.n_per_chain)
            .map(|i| self.draws[i * self.dim + j])
            .collect()
    }

    pub fn chain_of_draw(&self, i: usize) -> usize {
        i / self.n_per_chain
    }

    pub fn total_divergences(&self) -> usize {
        self.divergences.iter().sum()
    }

    pub fn mean_accept(&self) -> &[f64] {
        &self.mean_accept
    }

    pub fn step_sizes(&self) -> &[f64] {
        &self.step_sizes
    }

    /// Assemble from per-chain draw lists (used by tests and by samplers
    /// other than `run_chains`).
    pub fn from_chain_draws(chains: Vec<Vec<Vec<f64>>>) -> Result<PosteriorSamples> {
        if chains.is_empty() || chains[0].is_empty() {
            return Err(Error::domain("no draws"));
        }
        let n_per_chain = chains[0].len();
        let dim = chains[0][0].len();
        if chains.iter().any(|c| c.len() != n_per_chain) {
            return Err(Error::domain("chains must have equal length"));
        }
        let n_chains = chains.len();
        let mut draws = Vec::with_capacity(n_chains * n_per_chain * dim);
        for chain in &chains {
            for row in chain {
                if row.len() != dim {
                    return Err(Error::domain("inconsistent draw dimension"));
                }
                draws.extend_from_slice(row);
            }
        }
        Ok(PosteriorSamples {
            dim,
            n_chains,
            n_per_chain,
            draws,
            log_densities: vec![f64::NAN; n_chains * n_per_chain],
            mean_accept: vec![f64::NAN; n_chains],
            divergences: vec![0; n_chains],
            step_sizes: vec![f64::NAN; n_chains],
        })
    }

    /// Apply a density-preserving reparameterization (such as a label
    /// permutation) to every draw.
    pub fn transformed(&self, f: impl Fn(&mut [f64])) -> PosteriorSamples {
        let mut out = self.clone();
        for row in out.draws.chunks_exact_mut(self.dim) {
            f(row);
        }
        out
    }

    /// One row per draw: the parameter columns followed by the chain id.
    pub fn write_draws_csv<W: Write>(&self, names: &[&str], mut out: W) -> Result<()> {
        writeln!(out, "{},chain", names.join(","))?;
        for (i, row) in self.draws_iter().enumerate() {
            for v in row {
                write!(out, "{v},")?;
            }
            writeln!(out, "{}", self.chain_of_draw(i))?;
        }
        Ok(())
    }

    /// Parse draws written by [`write_draws_csv`]; returns the parameter
    /// names from the header.
    pub fn read_draws_csv<R: std::io::Read>(reader: R) -> Result<(Vec<String>, PosteriorSamples)> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = csv_reader.headers()?.clone();
        if headers.len() < 2 || headers.iter().last() != Some("chain") {
            return Err(Error::invalid_input("draws CSV must end with a chain column"));
        }
        let names: Vec<String> = headers.iter().take(headers.len() - 1).map(String::from).collect();
        let dim = names.len();
        let mut chains: Vec<Vec<Vec<f64>>> = Vec::new();
        for (i, row) in csv_reader.records().enumerate() {
            let row = row?;
            let parse = |idx: usize| -> Result<f64> {
                row.get(idx)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::invalid_input(format!("row {}: bad draw", i + 1)))
            };
            let mut values = Vec::with_capacity(dim);
            for j in 0..dim {
                values.push(parse(j)?);
            }
            let chain: usize = row
                .get(dim)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::invalid_input(format!("row {}: bad chain id", i + 1)))?;
            if chain >= chains.len() {
                chains.resize_with(chain + 1, Vec::new);
            }
            chains[chain].push(values);
        }
        let samples = PosteriorSamples::from_chain_draws(chains)?;
        Ok((names, samples))
    }
}

struct ChainOutput {
    draws: Vec<f64>,
    log_densities: Vec<f64>,
    mean_accept: f64,
    divergences: usize,
    step_size: f64,
}

/// Run independent NUTS chains from the given per-chain initial positions.
/// Chains derive their RNG streams from `(seed, chain index)` and run in
/// parallel; the result is identical for any thread count.
pub fn run_chains<T: TargetDensity>(
    target: &T,
    config: &ChainConfig,
    inits: &[Vec<f64>],
) -> Result<PosteriorSamples> {
    config.validate()?;
    if inits.len() != config.n_chains {
        return Err(Error::domain(format!(
            "need one initial position per chain: got {} for {} chains",
            inits.len(),
            config.n_chains
        )));
    }
    if inits.iter().any(|q| q.len() != target.dim()) {
        return Err(Error::domain("initial position dimension mismatch"));
    }

    let outputs: Vec<Result<ChainOutput>> = inits
        .par_iter()
        .enumerate()
        .map(|(c, init)| run_single_chain(target, config, init, c as u64))
        .collect();

    let dim = target.dim();
    let mut draws = Vec::with_capacity(config.n_chains * config.n_samples * dim);
    let mut log_densities = Vec::with_capacity(config.n_chains * config.n_samples);
    let mut mean_accept = Vec::with_capacity(config.n_chains);
    let mut divergences = Vec::with_capacity(config.n_chains);
    let mut step_sizes = Vec::with_capacity(config.n_chains);
    for output in outputs {
        let output = output?;
        draws.extend_from_slice(&output.draws);
        log_densities.extend_from_slice(&output.log_densities);
        mean_accept.push(output.mean_accept);
        divergences.push(output.divergences);
        step_sizes.push(output.step_size);
    }

    let samples = PosteriorSamples {
        dim,
        n_chains: config.n_chains,
        n_per_chain: config.n_samples,
        draws,
        log_densities,
        mean_accept,
        divergences,
        step_sizes,
    };

    let total_div = samples.total_divergences();
    let budget = samples.total() / 20;
    if total_div > budget {
        return Err(Error::quality(format!(
            "{total_div} divergent transitions out of {} post-warmup draws (over the 5% budget)",
            samples.total()
        )));
    }
    Ok(samples)
}

fn run_single_chain<T: TargetDensity>(
    target: &T,
    config: &ChainConfig,
    init: &[f64],
    chain_index: u64,
) -> Result<ChainOutput> {
    let mut rng = stream_rng(config.seed, chain_index);
    let dim = target.dim();

    let mut current = PhasePoint::new(target, init.to_vec(), vec![0.0; dim]);
    if !current.log_density.is_finite() {
        return Err(Error::domain(format!(
            "chain {chain_index}: initial position has non-finite log-density"
        )));
    }

    let mut metric = DiagMetric::identity(dim);
    let eps0 = find_reasonable_step_size(target, &current.position, &metric, &mut rng);
    let mut dual_avg = DualAveraging::new(config.target_accept, eps0);
    let mut step_size = dual_avg.current();

    // With diagonal adaptation: 15% step-size only, then variance collection
    // until 90%, metric swap, and a final step-size-only stretch.
    let collect_start = config.n_warmup * 15 / 100;
    let collect_end = config.n_warmup * 90 / 100;
    let mut variance = RunningVariance::new(dim);

    let mut draws = Vec::with_capacity(config.n_samples * dim);
    let mut log_densities = Vec::with_capacity(config.n_samples);
    let mut accept_sum = 0.0;
    let mut divergences = 0usize;

    let total = config.n_warmup + config.n_samples;
    for iter in 0..total {
        let warming = iter < config.n_warmup;
        let outcome = nuts_step(
            target,
            current,
            step_size,
            config.max_tree_depth,
            &metric,
            &mut rng,
        );
        current = outcome.point;

        if warming {
            dual_avg.update(outcome.accept_stat);
            step_size = dual_avg.current();

            if config.mass_adaptation == MassAdaptation::Diagonal {
                if iter >= collect_start && iter < collect_end {
                    variance.update(&current.position);
                }
                if iter + 1 == collect_end && variance.count() > 10 {
                    metric = DiagMetric::from_variance(&variance.variance());
                    let eps = find_reasonable_step_size(target, &current.position, &metric, &mut rng);
                    dual_avg.restart(eps);
                    step_size = dual_avg.current();
                }
            }
            if iter + 1 == config.n_warmup {
                step_size = dual_avg.adapted();
            }
        } else {
            if outcome.divergent {
                divergences += 1;
            }
            accept_sum += outcome.accept_stat;
            draws.extend_from_slice(&current.position);
            log_densities.push(current.log_density);
        }
    }

    Ok(ChainOutput {
        draws,
        log_densities,
        mean_accept: accept_sum / config.n_samples as f64,
        divergences,
        step_size,
    })
}
