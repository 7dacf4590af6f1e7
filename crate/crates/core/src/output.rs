//! Molecule-number statistics under repeated sweeps (pumping) and molecular
//! loss.
//!
//! Each pulse converts an atom pair into a molecule with probability
//! `|D2(n)|^2`, where `n` is the molecule number already present. Pulses
//! arrive at rate `r_a = 1/(T + tau)` and molecules decay at rate `gamma`:
//!
//! ```text
//! dp_n/dt = -r_a |D2(n)|^2 p_n + r_a |D2(n-1)|^2 p_{n-1} - gamma n p_n + gamma (n+1) p_{n+1}
//! ```
//!
//! The ladder is truncated at `n_max` with a reflecting top (no pumping out
//! of `n_max`), so total probability is conserved exactly.

use crate::dk2::survival_probability;
use crate::error::{Error, Result};
use crate::model::{block_coeffs, PhysicalParams};
use crate::tdse::REGIME_RATIO;

/// Largest admissible `p[n_max]` for an accepted steady state.
pub const TAIL_MASS_LIMIT: f64 = 1e-8;

/// Pulse period beyond which the pumping picture stops being realistic.
pub const TAU_FEASIBILITY: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpLossParams {
    pub gamma: f64,
    pub r_a: f64,
    pub tau: Option<f64>,
    pub n_ex: f64,
    pub n_max: usize,
}

/// Smallest truncation accepted for a mean pumping `n_ex`.
pub fn min_truncation(n_ex: f64) -> usize {
    (n_ex + 10.0 * n_ex.sqrt()).ceil() as usize + 5
}

impl PumpLossParams {
    /// Loss rate `gamma` and pump-to-loss ratio `n_ex`; `r_a = n_ex gamma`.
    pub fn new(gamma: f64, n_ex: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::param("gamma", "must be positive and finite"));
        }
        if !(n_ex >= 0.0) || !n_ex.is_finite() {
            return Err(Error::param("n_ex", "must be non-negative and finite"));
        }
        Ok(Self {
            gamma,
            r_a: n_ex * gamma,
            tau: None,
            n_ex,
            n_max: min_truncation(n_ex),
        })
    }

    /// Pumping set by the pulse train: `r_a = 1/(t_ramp + tau)`.
    pub fn from_pulses(gamma: f64, t_ramp: f64, tau: f64) -> Result<Self> {
        if !(tau >= 0.0) || !(t_ramp >= 0.0) || !(t_ramp + tau > 0.0) || !tau.is_finite() {
            return Err(Error::param("tau", "t_ramp + tau must be positive and finite"));
        }
        let r_a = 1.0 / (t_ramp + tau);
        let mut p = Self::new(gamma, r_a / gamma)?;
        p.r_a = r_a;
        p.tau = Some(tau);
        Ok(p)
    }

    /// Raw rates without the truncation certificate; `gamma = 0` (pure
    /// pumping) and `r_a = 0` (pure loss) are allowed here for transient runs.
    pub fn from_rates(r_a: f64, gamma: f64, n_max: usize) -> Result<Self> {
        if !(r_a >= 0.0) || !(gamma >= 0.0) || !r_a.is_finite() || !gamma.is_finite() {
            return Err(Error::param("rates", "r_a and gamma must be non-negative and finite"));
        }
        Ok(Self {
            gamma,
            r_a,
            tau: None,
            n_ex: r_a / gamma,
            n_max,
        })
    }

    pub fn with_n_max(mut self, n_max: usize) -> Result<Self> {
        let min = min_truncation(self.n_ex);
        if n_max < min {
            return Err(Error::param(
                "n_max",
                format!("must be at least {min} for n_ex = {}", self.n_ex),
            ));
        }
        self.n_max = n_max;
        Ok(self)
    }

    /// Stability bound on the explicit time step.
    pub fn max_dt(&self) -> f64 {
        0.1 / (self.gamma * self.n_max as f64 + self.r_a)
    }

    /// Note for pulse periods beyond the regime `tau <~ 100/chi`.
    pub fn feasibility_warning(&self) -> Option<String> {
        match self.tau {
            Some(tau) if tau > TAU_FEASIBILITY => Some(format!(
                "tau = {tau} exceeds {TAU_FEASIBILITY}/chi; pulses may no longer be short against 1/gamma"
            )),
            _ => None,
        }
    }
}

/// Per-level conversion probabilities `|D2(n)|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    pub d2_sq: Vec<f64>,
    /// `true` where `k - |a(n)| < 10 c(n)`, i.e. the sweep does not start and
    /// end far from resonance for that level.
    pub out_of_regime: Vec<bool>,
}

impl TransitionTable {
    pub fn uniform(value: f64, len: usize) -> Self {
        Self {
            d2_sq: vec![value; len],
            out_of_regime: vec![false; len],
        }
    }

    pub fn from_values(d2_sq: Vec<f64>) -> Self {
        let n = d2_sq.len();
        Self {
            d2_sq,
            out_of_regime: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.d2_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d2_sq.is_empty()
    }
}

/// `|D2(n)|^2 = 1 - |D1(n)|^2` for `n = 0..=n_max`.
pub fn transition_table(p: &PhysicalParams, n_max: usize) -> Result<TransitionTable> {
    p.validate()?;
    let mut d2_sq = Vec::with_capacity(n_max + 1);
    let mut out_of_regime = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let (a, c) = block_coeffs(n, p);
        let survival = survival_probability(a, p.k, c, p.t_ramp)?;
        d2_sq.push((1.0 - survival).clamp(0.0, 1.0));
        out_of_regime.push(p.k - a.abs() < REGIME_RATIO * c);
    }
    Ok(TransitionTable { d2_sq, out_of_regime })
}

/// Probabilities `p_0..=p_{n_max}` over the molecule number.
#[derive(Debug, Clone, PartialEq)]
pub struct NumberDistribution {
    pub probs: Vec<f64>,
}

impl NumberDistribution {
    pub fn vacuum(n_max: usize) -> Self {
        Self::fock(0, n_max)
    }

    pub fn fock(n: usize, n_max: usize) -> Self {
        let mut probs = vec![0.0; n_max + 1];
        probs[n] = 1.0;
        Self { probs }
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| (n as f64 - mean).powi(2) * p)
            .sum()
    }

    pub fn total_variation(&self, other: &NumberDistribution) -> f64 {
        let len = self.probs.len().max(other.probs.len());
        let get = |d: &NumberDistribution, n: usize| d.probs.get(n).copied().unwrap_or(0.0);
        0.5 * (0..len).map(|n| (get(self, n) - get(other, n)).abs()).sum::<f64>()
    }

    fn check_normalized(&self, tol: f64) -> Result<()> {
        let total = self.total();
        if self.probs.is_empty() || (total - 1.0).abs() > tol || self.probs.iter().any(|p| *p < 0.0) {
            return Err(Error::NotNormalized { norm: total });
        }
        Ok(())
    }
}

fn check_table(table: &TransitionTable, n_max: usize) -> Result<()> {
    if table.len() < n_max {
        return Err(Error::param(
            "table",
            format!("needs at least {n_max} entries, got {}", table.len()),
        ));
    }
    Ok(())
}

/// Stationary solution by detailed balance,
/// `p_n = p_{n-1} |D2(n-1)|^2 n_ex / n`, accumulated in log space.
pub fn steady_state(table: &TransitionTable, params: &PumpLossParams) -> Result<NumberDistribution> {
    let n_max = params.n_max;
    check_table(table, n_max)?;
    if !(params.gamma > 0.0) {
        return Err(Error::param("gamma", "steady state needs a positive loss rate"));
    }
    let ln_n_ex = params.n_ex.ln();
    let mut log_p = Vec::with_capacity(n_max + 1);
    log_p.push(0.0_f64);
    for n in 1..=n_max {
        let prev = log_p[n - 1];
        log_p.push(prev + table.d2_sq[n - 1].ln() + ln_n_ex - (n as f64).ln());
    }
    let peak = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = log_p.iter().map(|l| (l - peak).exp()).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);

    let tail = probs[n_max];
    if tail > TAIL_MASS_LIMIT {
        return Err(Error::TailMass {
            n_max,
            tail,
            limit: TAIL_MASS_LIMIT,
        });
    }
    Ok(NumberDistribution { probs })
}

/// Right-hand side of the master equation on the truncated ladder.
pub fn master_rhs(probs: &[f64], table: &TransitionTable, params: &PumpLossParams) -> Vec<f64> {
    let n_max = probs.len() - 1;
    let (r, g) = (params.r_a, params.gamma);
    (0..=n_max)
        .map(|n| {
            let nf = n as f64;
            let mut d = -g * nf * probs[n];
            if n < n_max {
                d += -r * table.d2_sq[n] * probs[n] + g * (nf + 1.0) * probs[n + 1];
            }
            if n > 0 {
                d += r * table.d2_sq[n - 1] * probs[n - 1];
            }
            d
        })
        .collect()
}

fn rk4_step(p: &mut [f64], dt: f64, table: &TransitionTable, params: &PumpLossParams) {
    let shifted = |base: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        base.iter().zip(k).map(|(b, k)| b + s * k).collect()
    };
    let k1 = master_rhs(p, table, params);
    let k2 = master_rhs(&shifted(p, &k1, 0.5 * dt), table, params);
    let k3 = master_rhs(&shifted(p, &k2, 0.5 * dt), table, params);
    let k4 = master_rhs(&shifted(p, &k3, dt), table, params);
    for n in 0..p.len() {
        p[n] += dt / 6.0 * (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n]);
    }
}

/// Integrates the master equation with classical RK4 over `horizon`, calling
/// `observe(t, dist)` at `t = 0` and after every `every`-th step.
pub fn evolve_master_observed<F>(
    initial: &NumberDistribution,
    table: &TransitionTable,
    params: &PumpLossParams,
    horizon: f64,
    dt: f64,
    every: usize,
    mut observe: F,
) -> Result<NumberDistribution>
where
    F: FnMut(f64, &NumberDistribution),
{
    let n_max = initial.n_max();
    check_table(table, n_max)?;
    initial.check_normalized(1e-12)?;
    let bound = 0.1 / (params.gamma * n_max as f64 + params.r_a);
    if !(dt > 0.0) || dt > bound {
        return Err(Error::Unstable { dt, bound });
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::param("horizon", "must be non-negative and finite"));
    }
    let steps = (horizon / dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { horizon / steps as f64 };
    let mut p = initial.probs.clone();
    observe(0.0, initial);
    for i in 1..=steps {
        rk4_step(&mut p, h, table, params);
        if every > 0 && (i % every == 0 || i == steps) {
            observe(i as f64 * h, &NumberDistribution { probs: p.clone() });
        }
    }
    let out = NumberDistribution { probs: p };
    out.check_normalized(1e-9)?;
    Ok(out)
}

pub fn evolve_master(
    initial: &NumberDistribution,
    table: &TransitionTable,
    params: &PumpLossParams,
    horizon: f64,
    dt: f64,
) -> Result<NumberDistribution> {
    evolve_master_observed(initial, table, params, horizon, dt, 0, |_, _| {})
}

/// `ln n!` for `n = 0..=n_max`.
fn ln_factorials(n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for n in 1..=n_max {
        acc += (n as f64).ln();
        out.push(acc);
    }
    out
}

/// Poisson probabilities `0..=n_max` with mean `lambda`.
pub fn poisson_pmf(lambda: f64, n_max: usize) -> Vec<f64> {
    if lambda == 0.0 {
        let mut v = vec![0.0; n_max + 1];
        v[0] = 1.0;
        return v;
    }
    let ln_lambda = lambda.ln();
    ln_factorials(n_max)
        .iter()
        .enumerate()
        .map(|(n, lf)| (n as f64 * ln_lambda - lambda - lf).exp())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputStats {
    pub mean: f64,
    pub variance: f64,
    /// `variance / mean - 1`; `None` for the vacuum.
    pub mandel_q: Option<f64>,
    /// Total-variation distance from the Poisson law with the same mean.
    pub tv_poisson: f64,
    /// `9 gamma / n_ex`; `None` without pumping.
    pub linewidth: Option<f64>,
}

impl OutputStats {
    pub fn is_super_poissonian(&self) -> bool {
        self.mandel_q.is_some_and(|q| q > 0.0)
    }
}

pub fn statistics(dist: &NumberDistribution, gamma: f64, n_ex: f64) -> Result<OutputStats> {
    dist.check_normalized(1e-9)?;
    let mean = dist.mean();
    let variance = dist.variance();
    let mandel_q = (mean > 0.0).then(|| variance / mean - 1.0);
    let poisson = poisson_pmf(mean, dist.n_max());
    let inside: f64 = poisson.iter().sum();
    let diff: f64 = dist.probs.iter().zip(&poisson).map(|(p, q)| (p - q).abs()).sum();
    let tv_poisson = (0.5 * (diff + (1.0 - inside).max(0.0))).clamp(0.0, 1.0);
    let linewidth = (n_ex > 0.0).then(|| 9.0 * gamma / n_ex);
    Ok(OutputStats {
        mean,
        variance,
        mandel_q,
        tv_poisson,
        linewidth,
    })
}
