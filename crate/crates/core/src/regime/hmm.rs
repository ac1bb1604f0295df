use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::{derive_seed, Execution};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Hidden Markov model with diagonal Gaussian emissions.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeModel {
    pub pi: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub means: Vec<Vec<f64>>,
    pub vars: Vec<Vec<f64>>,
}

impl RegimeModel {
    pub fn n_states(&self) -> usize {
        self.pi.len()
    }

    pub fn log_emission(&self, i: usize, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((&xk, &m), &v) in x.iter().zip(&self.means[i]).zip(&self.vars[i]) {
            let d = xk - m;
            s += -0.5 * (LN_2PI + v.ln() + d * d / v);
        }
        s
    }

    /// Log-likelihood of `obs` (scaled forward pass).
    pub fn log_likelihood(&self, obs: &[Vec<f64>]) -> f64 {
        forward_backward(self, obs, false).ll
    }

    /// States reordered by ascending mean of feature 0.
    pub fn sorted_by_first_feature(&self) -> RegimeModel {
        let k = self.n_states();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| self.means[i][0].total_cmp(&self.means[j][0]).then(i.cmp(&j)));
        RegimeModel {
            pi: order.iter().map(|&i| self.pi[i]).collect(),
            a: order.iter().map(|&i| order.iter().map(|&j| self.a[i][j]).collect()).collect(),
            means: order.iter().map(|&i| self.means[i].clone()).collect(),
            vars: order.iter().map(|&i| self.vars[i].clone()).collect(),
        }
    }

    /// Plain-text key-value dump for audit.
    pub fn dump(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| crate::report::fmt9(*x)).collect::<Vec<_>>().join(",");
        let mut s = format!("n_states = {}\npi = {}\n", self.n_states(), join(&self.pi));
        for (i, row) in self.a.iter().enumerate() {
            s += &format!("a.{i} = {}\n", join(row));
        }
        for i in 0..self.n_states() {
            s += &format!("mean.{i} = {}\nvar.{i} = {}\n", join(&self.means[i]), join(&self.vars[i]));
        }
        s
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    pub n_states: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub restarts: usize,
    pub var_floor: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            n_states: 4,
            max_iter: 200,
            tol: 1e-6,
            restarts: 10,
            var_floor: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: RegimeModel,
    /// Log-likelihood before each M-step of the kept restart, then the final value.
    pub ll_trace: Vec<f64>,
    /// Final log-likelihood of every restart.
    pub restart_ll: Vec<f64>,
    /// Traces of every restart.
    pub traces: Vec<Vec<f64>>,
    pub floor_engaged: bool,
}

struct Posterior {
    ll: f64,
    gamma: Vec<Vec<f64>>,
    xi_sum: Vec<Vec<f64>>,
}

fn forward_backward(m: &RegimeModel, obs: &[Vec<f64>], want_posterior: bool) -> Posterior {
    let k = m.n_states();
    let t_len = obs.len();
    let mut b = vec![vec![0.0; k]; t_len];
    let mut shift = vec![0.0; t_len];
    for (t, x) in obs.iter().enumerate() {
        let logs: Vec<f64> = (0..k).map(|i| m.log_emission(i, x)).collect();
        let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        shift[t] = mx;
        for i in 0..k {
            b[t][i] = (logs[i] - mx).exp();
        }
    }
    let mut alpha = vec![vec![0.0; k]; t_len];
    let mut c = vec![0.0; t_len];
    for t in 0..t_len {
        for j in 0..k {
            let prior = if t == 0 {
                m.pi[j]
            } else {
                (0..k).map(|i| alpha[t - 1][i] * m.a[i][j]).sum()
            };
            alpha[t][j] = prior * b[t][j];
        }
        c[t] = alpha[t].iter().sum::<f64>().max(f64::MIN_POSITIVE);
        for j in 0..k {
            alpha[t][j] /= c[t];
        }
    }
    let ll = (0..t_len).map(|t| c[t].ln() + shift[t]).sum();
    if !want_posterior {
        return Posterior {
            ll,
            gamma: Vec::new(),
            xi_sum: Vec::new(),
        };
    }
    let mut beta = vec![vec![1.0; k]; t_len];
    for t in (0..t_len.saturating_sub(1)).rev() {
        for i in 0..k {
            beta[t][i] = (0..k).map(|j| m.a[i][j] * b[t + 1][j] * beta[t + 1][j]).sum::<f64>() / c[t + 1];
        }
    }
    let gamma: Vec<Vec<f64>> = (0..t_len)
        .map(|t| {
            let g: Vec<f64> = (0..k).map(|i| alpha[t][i] * beta[t][i]).collect();
            let s: f64 = g.iter().sum::<f64>().max(f64::MIN_POSITIVE);
            g.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let mut xi_sum = vec![vec![0.0; k]; k];
    for t in 0..t_len.saturating_sub(1) {
        for i in 0..k {
            for j in 0..k {
                xi_sum[i][j] += alpha[t][i] * m.a[i][j] * b[t + 1][j] * beta[t + 1][j] / c[t + 1];
            }
        }
    }
    Posterior { ll, gamma, xi_sum }
}

fn m_step(m: &RegimeModel, obs: &[Vec<f64>], post: &Posterior, var_floor: f64, floored: &mut bool) -> RegimeModel {
    let k = m.n_states();
    let d = obs[0].len();
    let mut out = m.clone();
    let g0: f64 = post.gamma[0].iter().sum();
    out.pi = post.gamma[0].iter().map(|g| g / g0).collect();
    for i in 0..k {
        let row: f64 = post.xi_sum[i].iter().sum();
        if row > 1e-300 {
            out.a[i] = post.xi_sum[i].iter().map(|x| x / row).collect();
        }
        let w: f64 = post.gamma.iter().map(|g| g[i]).sum();
        if w <= 1e-300 {
            continue;
        }
        for f in 0..d {
            let mu = obs.iter().zip(&post.gamma).map(|(x, g)| g[i] * x[f]).sum::<f64>() / w;
            let var = obs
                .iter()
                .zip(&post.gamma)
                .map(|(x, g)| g[i] * (x[f] - mu) * (x[f] - mu))
                .sum::<f64>()
                / w;
            out.means[i][f] = mu;
            if var < var_floor {
                *floored = true;
            }
            out.vars[i][f] = var.max(var_floor);
        }
    }
    out
}

fn init_model(obs: &[Vec<f64>], k: usize, seed: u64, var_floor: f64) -> RegimeModel {
    let d = obs[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, obs.len(), k.min(obs.len())).into_vec();
    let mut global_var = vec![0.0; d];
    for f in 0..d {
        let mu = obs.iter().map(|x| x[f]).sum::<f64>() / obs.len() as f64;
        global_var[f] = (obs.iter().map(|x| (x[f] - mu).powi(2)).sum::<f64>() / obs.len() as f64).max(var_floor);
    }
    let stay = 0.8;
    RegimeModel {
        pi: vec![1.0 / k as f64; k],
        a: (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        if k == 1 {
                            1.0
                        } else if i == j {
                            stay
                        } else {
                            (1.0 - stay) / (k - 1) as f64
                        }
                    })
                    .collect()
            })
            .collect(),
        means: (0..k).map(|i| obs[picks[i % picks.len()]].clone()).collect(),
        vars: vec![global_var; k],
    }
}

fn fit_once(obs: &[Vec<f64>], cfg: &FitConfig, seed: u64) -> (RegimeModel, Vec<f64>, bool) {
    let mut m = init_model(obs, cfg.n_states, seed, cfg.var_floor);
    let mut trace = Vec::new();
    let mut floored = false;
    for _ in 0..cfg.max_iter {
        let post = forward_backward(&m, obs, true);
        let converged = trace.last().is_some_and(|&prev: &f64| post.ll - prev < cfg.tol);
        trace.push(post.ll);
        if converged {
            return (m, trace, floored);
        }
        m = m_step(&m, obs, &post, cfg.var_floor, &mut floored);
    }
    trace.push(m.log_likelihood(obs));
    (m, trace, floored)
}

/// Baum-Welch with seeded restarts; the restart with the highest final
/// likelihood is kept and its states are ordered by the first feature.
pub fn fit_baum_welch(obs: &[Vec<f64>], cfg: &FitConfig, seed: u64, exec: Execution) -> Result<FitResult> {
    if cfg.n_states == 0 {
        return Err(Error::Config("n_states must be >= 1".into()));
    }
    if obs.len() < 4 * cfg.n_states {
        return Err(Error::InsufficientData(format!(
            "HMM with {} states needs >= {} observations, got {}",
            cfg.n_states,
            4 * cfg.n_states,
            obs.len()
        )));
    }
    let d = obs[0].len();
    if d == 0 || obs.iter().any(|x| x.len() != d || x.iter().any(|v| !v.is_finite())) {
        return Err(Error::Domain("observations must be finite vectors of equal length".into()));
    }
    let runs = exec.map_range(cfg.restarts.max(1), |r| fit_once(obs, cfg, derive_seed(seed, &[r as u64])));
    let restart_ll: Vec<f64> = runs.iter().map(|r| *r.1.last().unwrap()).collect();
    let best = (0..runs.len())
        .max_by(|&i, &j| restart_ll[i].total_cmp(&restart_ll[j]).then(j.cmp(&i)))
        .unwrap();
    let floor_engaged = runs.iter().any(|r| r.2);
    if floor_engaged {
        log::warn!("HMM: variance floor {} engaged", cfg.var_floor);
    }
    let traces: Vec<Vec<f64>> = runs.iter().map(|r| r.1.clone()).collect();
    let (model, ll_trace, _) = runs.into_iter().nth(best).unwrap();
    Ok(FitResult {
        model: model.sorted_by_first_feature(),
        ll_trace,
        restart_ll,
        traces,
        floor_engaged,
    })
}

/// Most likely state sequence (log-space Viterbi, ties to the lower state).
pub fn viterbi_path(model: &RegimeModel, obs: &[Vec<f64>]) -> Vec<usize> {
    let k = model.n_states();
    if obs.is_empty() {
        return Vec::new();
    }
    let ln = |x: f64| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY };
    let la: Vec<Vec<f64>> = model.a.iter().map(|r| r.iter().map(|&x| ln(x)).collect()).collect();
    let mut delta: Vec<f64> = (0..k).map(|i| ln(model.pi[i]) + model.log_emission(i, &obs[0])).collect();
    let mut back = vec![vec![0usize; k]; obs.len()];
    for t in 1..obs.len() {
        let mut next = vec![0.0; k];
        for j in 0..k {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for i in 0..k {
                let v = delta[i] + la[i][j];
                if v > best {
                    best = v;
                    arg = i;
                }
            }
            next[j] = best + model.log_emission(j, &obs[t]);
            back[t][j] = arg;
        }
        delta = next;
    }
    let mut s = 0;
    for i in 1..k {
        if delta[i] > delta[s] {
            s = i;
        }
    }
    let mut path = vec![s; obs.len()];
    for t in (1..obs.len()).rev() {
        s = back[t][s];
        path[t - 1] = s;
    }
    path
}
