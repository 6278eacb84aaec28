//! Warmup adaptation: dual-averaging step size control and an online
//! variance estimator for the optional diagonal metric.

/// Nesterov dual averaging toward a target acceptance statistic
/// (Hoffman & Gelman 2014, the Stan parameterization).
#[derive(Debug, Clone)]
pub struct DualAveraging {
    target_accept: f64,
    mu: f64,
    log_eps: f64,
    log_eps_bar: f64,
    h_bar: f64,
    gamma: f64,
    t0: f64,
    kappa: f64,
    step: usize,
}

impl DualAveraging {
    pub fn new(target_accept: f64, init_eps: f64) -> Self {
        DualAveraging {
            target_accept,
            mu: (10.0 * init_eps).ln(),
            log_eps: init_eps.ln(),
            log_eps_bar: init_eps.ln(),
            h_bar: 0.0,
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
            step: 0,
        }
    }

    pub fn update(&mut self, accept_stat: f64) {
        self.step += 1;
        let m = self.step as f64;
        let w = 1.0 / (m + self.t0);
        self.h_bar = (1.0 - w) * self.h_bar + w * (self.target_accept - accept_stat);
        self.log_eps = self.mu - (m.sqrt() / self.gamma) * self.h_bar;
        let decay = m.powf(-self.kappa);
        self.log_eps_bar = decay * self.log_eps + (1.0 - decay) * self.log_eps_bar;
    }

    /// Step size to use while still adapting.
    pub fn current(&self) -> f64 {
        self.log_eps.exp()
    }

    /// Smoothed step size to freeze at the end of warmup.
    pub fn adapted(&self) -> f64 {
        self.log_eps_bar.exp()
    }

    /// Restart averaging around a new initial step size.
    pub fn restart(&mut self, init_eps: f64) {
        *self = DualAveraging::new(self.target_accept, init_eps);
    }
}

/// Welford online variance, one accumulator per coordinate.
#[derive(Debug, Clone)]
pub struct RunningVariance {
    mean: Vec<f64>,
    m2: Vec<f64>,
    count: usize,
}

impl RunningVariance {
    pub fn new(dim: usize) -> Self {
        RunningVariance {
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
            count: 0,
        }
    }

    pub fn update(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for i in 0..x.len() {
            let delta = x[i] - self.mean[i];
            self.mean[i] += delta / n;
            self.m2[i] += delta * (x[i] - self.mean[i]);
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Sample variance per coordinate, floored away from zero; identity
    /// when fewer than two samples were seen.
    pub fn variance(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![1.0; self.mean.len()];
        }
        let denom = (self.count - 1) as f64;
        self.m2.iter().map(|&m| (m / denom).max(1e-10)).collect()
    }

    pub fn reset(&mut self) {
        self.mean.fill(0.0);
        self.m2.fill(0.0);
        self.count = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn controller_direction() {
        // acceptance persistently 1.0: step size grows monotonically
        let mut da = DualAveraging::new(0.8, 0.1);
        let mut last = da.current();
        for _ in 0..50 {
            da.update(1.0);
            assert!(da.current() >= last);
            last = da.current();
        }
        assert!(da.adapted() > 0.1);

        // acceptance persistently 0.0: step size shrinks
        let mut da = DualAveraging::new(0.8, 0.1);
        let mut last = da.current();
        for _ in 0..50 {
            da.update(0.0);
            assert!(da.current() <= last);
            last = da.current();
        }
        assert!(da.adapted() < 0.1);
    }

    #[test]
    fn controller_settles_on_target() {
        let mut da = DualAveraging::new(0.8, 1.0);
        for _ in 0..500 {
            da.update(0.8);
        }
        assert!(da.adapted().is_finite() && da.adapted() > 0.0);
    }

    #[test]
    fn welford_matches_two_pass() {
        let data = [[1.0, 10.0], [2.0, 20.0], [3.0, 30.0], [4.0, 40.0], [5.0, 50.0]];
        let mut rv = RunningVariance::new(2);
        for row in &data {
            rv.update(row);
        }
        let var = rv.variance();
        assert_abs_diff_eq!(var[0], 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(var[1], 250.0, epsilon = 1e-12);
        rv.reset();
        assert_eq!(rv.variance(), vec![1.0, 1.0]);
    }
}
