//! Convergence diagnostics and posterior summaries.

use serde::Serialize;

use super::PosteriorSamples;
use crate::error::{Error, Result};

/// Split-chain potential scale reduction for one parameter: each chain is
/// halved (middle draw dropped when odd) and the classic between/within
/// variance ratio is taken over the half-chains. Zero within-chain variance
/// is flagged as infinite rather than crashing.
pub fn potential_scale_reduction(samples: &PosteriorSamples, param: usize) -> Result<f64> {
    if samples.n_chains() < 2 {
        return Err(Error::domain("R-hat needs at least 2 chains"));
    }
    if samples.n_per_chain() < 4 {
        return Err(Error::domain("R-hat needs at least 4 draws per chain"));
    }
    let mut halves: Vec<Vec<f64>> = Vec::with_capacity(2 * samples.n_chains());
    for c in 0..samples.n_chains() {
        let chain = samples.chain_column(c, param);
        let half = chain.len() / 2;
        halves.push(chain[..half].to_vec());
        halves.push(chain[chain.len() - half..].to_vec());
    }
    Ok(split_rhat_from_halves(&halves))
}

fn split_rhat_from_halves(halves: &[Vec<f64>]) -> f64 {
    let n = halves[0].len() as f64;
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let vars: Vec<f64> = halves.iter().map(|h| sample_variance(h)).collect();
    let between = n * sample_variance(&means);
    let within = mean(&vars);
    if within <= 0.0 {
        return f64::INFINITY;
    }
    (((n - 1.0) / n) + between / (n * within)).sqrt()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Linear-interpolation empirical quantile of a sorted slice.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty slice");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Per-parameter marginal summary.
#[derive(Debug, Clone, Serialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q2_5: f64,
    pub q50: f64,
    pub q97_5: f64,
    pub rhat: f64,
}

/// Empirical moments, central 95% interval bounds, and split R-hat for
/// every parameter.
pub fn summarize(samples: &PosteriorSamples, names: &[&str]) -> Result<Vec<ParamSummary>> {
    if names.len() != samples.dim() {
        return Err(Error::domain("one name per parameter required"));
    }
    let mut out = Vec::with_capacity(samples.dim());
    for (j, name) in names.iter().enumerate() {
        let mut column = samples.param_column(j);
        let m = mean(&column);
        let sd = if column.len() > 1 {
            sample_variance(&column).sqrt()
        } else {
            0.0
        };
        column.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
        let rhat = if samples.n_chains() >= 2 && samples.n_per_chain() >= 4 {
            potential_scale_reduction(samples, j)?
        } else {
            f64::NAN
        };
        out.push(ParamSummary {
            name: name.to_string(),
            mean: m,
            sd,
            q2_5: quantile(&column, 0.025),
            q50: quantile(&column, 0.5),
            q97_5: quantile(&column, 0.975),
            rhat,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    use crate::rng::stream_rng;

    fn samples_from_chains(chains: Vec<Vec<f64>>) -> PosteriorSamples {
        let wrapped: Vec<Vec<Vec<f64>>> = chains
            .into_iter()
            .map(|c| c.into_iter().map(|x| vec![x]).collect())
            .collect();
        PosteriorSamples::from_chain_draws(wrapped).unwrap()
    }

    #[test]
    fn rhat_near_one_for_identical_distributions() {
        let mut rng = stream_rng(7, 0);
        let chains: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..4000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let samples = samples_from_chains(chains);
        let rhat = potential_scale_reduction(&samples, 0).unwrap();
        assert!(rhat < 1.01, "rhat = {rhat}");
        assert!(rhat >= 0.99, "rhat = {rhat}");
    }

    #[test]
    fn rhat_detects_disagreeing_chains() {
        let mut rng = stream_rng(8, 0);
        let a: Vec<f64> = (0..1000).map(|_| -10.0 + rng.sample::<f64, _>(StandardNormal)).collect();
        let b: Vec<f64> = (0..1000).map(|_| 10.0 + rng.sample::<f64, _>(StandardNormal)).collect();
        let rhat = potential_scale_reduction(&samples_from_chains(vec![a, b]), 0).unwrap();
        assert!(rhat > 1.2, "rhat = {rhat}");
    }

    #[test]
    fn rhat_flags_degenerate_chains() {
        let constant = vec![3.0; 100];
        let rhat =
            potential_scale_reduction(&samples_from_chains(vec![constant.clone(), constant]), 0)
                .unwrap();
        assert!(rhat.is_infinite());
    }

    #[test]
    fn rhat_preconditions() {
        let one_chain = samples_from_chains(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        assert!(potential_scale_reduction(&one_chain, 0).is_err());
        let short = samples_from_chains(vec![vec![1.0, 2.0], vec![1.5, 2.5]]);
        assert!(potential_scale_reduction(&short, 0).is_err());
    }

    #[test]
    fn summaries_on_known_inputs() {
        // constant draws
        let samples = samples_from_chains(vec![vec![2.5; 50], vec![2.5; 50]]);
        let s = &summarize(&samples, &["x"]).unwrap()[0];
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.sd, 0.0);

        // 1..=100 has median 50.5 under the interpolated definition
        let xs: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let samples = samples_from_chains(vec![xs[..50].to_vec(), xs[50..].to_vec()]);
        let s = &summarize(&samples, &["x"]).unwrap()[0];
        assert_abs_diff_eq!(s.q50, 50.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.mean, 50.5, epsilon = 1e-12);
    }

    #[test]
    fn normal_quantiles_recovered() {
        let mut rng = stream_rng(9, 0);
        let chains: Vec<Vec<f64>> = (0..16)
            .map(|_| (0..4000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let samples = samples_from_chains(chains);
        let s = &summarize(&samples, &["z"]).unwrap()[0];
        assert_abs_diff_eq!(s.q2_5, -1.96, epsilon = 0.04);
        assert_abs_diff_eq!(s.q97_5, 1.96, epsilon = 0.04);
        assert_abs_diff_eq!(s.sd, 1.0, epsilon = 0.02);
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_abs_diff_eq!(quantile(&xs, 0.5), 2.5, epsilon = 1e-15);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
    }
}
