//! Exact event-driven simulation of `X^N`, the law-of-large-numbers
//! experiments, and exponentially tilted sampling for rare endpoint events.
//!
//! Every replication draws from its own ChaCha8 stream `(seed, index)`, so
//! batch experiments are reproducible regardless of how they are scheduled.

use std::io::Write;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::evolution::lattice_state;
use crate::markov::{
    fmt_real, harmonic_partial, jump_rates, JumpRates, ModelParams, ProbabilityVector,
};
use crate::optimal::{ParabolaParams, PathCase};
use crate::quadrature::{integrate, QuadOptions};

/// Quadrature tolerance for tilt compensators without a closed form.
pub const TILT_QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    Point(usize),
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub seed: u64,
    pub initial: InitialCondition,
    pub replications: usize,
}

impl SimConfig {
    pub fn new(
        horizon: f64,
        seed: u64,
        initial: InitialCondition,
        replications: usize,
    ) -> Result<Self> {
        let config = Self {
            horizon,
            seed,
            initial,
            replications,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return domain(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.replications == 0 {
            return domain("replications must be at least 1");
        }
        Ok(())
    }
}

/// RNG for replication `index` of an experiment seeded with `seed`.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Inverse-CDF sampler for the stationary law `π(m) ∝ 1/m`.
#[derive(Debug, Clone)]
pub struct StationarySampler {
    cdf: Vec<f64>,
}

impl StationarySampler {
    pub fn new(params: &ModelParams<f64>) -> Result<Self> {
        params.validate()?;
        let total = harmonic_partial::<f64>(params.n_states as u64)?.sum;
        let mut acc = crate::scalar::CompensatedSum::new();
        let cdf = (1..=params.n_states)
            .map(|m| {
                acc.add(1.0 / m as f64);
                acc.value() / total
            })
            .collect();
        Ok(Self { cdf })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        (self.cdf.partition_point(|&c| c <= u) + 1).min(self.cdf.len())
    }
}

fn initial_state<R: Rng + ?Sized>(
    params: &ModelParams<f64>,
    initial: InitialCondition,
    sampler: Option<&StationarySampler>,
    rng: &mut R,
) -> Result<usize> {
    match initial {
        InitialCondition::Point(m) => {
            params.check_state(m)?;
            Ok(m)
        }
        InitialCondition::Stationary => Ok(match sampler {
            Some(s) => s.sample(rng),
            None => StationarySampler::new(params)?.sample(rng),
        }),
    }
}

/// Streams the jumps of one exact trajectory up to `horizon`.
pub struct Walker<'a, R> {
    rates: &'a [JumpRates<f64>],
    state: usize,
    time: f64,
    horizon: f64,
    rng: R,
}

fn rate_table(params: &ModelParams<f64>) -> Result<Vec<JumpRates<f64>>> {
    (1..=params.n_states)
        .map(|m| jump_rates(params, m))
        .collect()
}

impl<'a, R: Rng> Walker<'a, R> {
    pub fn new(rates: &'a [JumpRates<f64>], state: usize, horizon: f64, rng: R) -> Self {
        Self {
            rates,
            state,
            time: 0.0,
            horizon,
            rng,
        }
    }

    pub fn state(&self) -> usize {
        self.state
    }
}

impl<R: Rng> Iterator for Walker<'_, R> {
    /// `(jump time, state entered)`.
    type Item = (f64, usize);

    fn next(&mut self) -> Option<Self::Item> {
        let r = self.rates[self.state - 1];
        let total = r.total();
        if total <= 0.0 {
            return None;
        }
        let hold: f64 = self.rng.sample::<f64, _>(Exp1) / total;
        let when = self.time + hold;
        if when >= self.horizon {
            self.time = self.horizon;
            return None;
        }
        let u: f64 = self.rng.random();
        self.state = if u * total < r.up {
            self.state + 1
        } else {
            self.state - 1
        };
        self.time = when;
        Some((when, self.state))
    }
}

/// Piecewise-constant sample path, stored as jumps only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial_state: usize,
    pub jump_times: Vec<f64>,
    pub states_after_jump: Vec<usize>,
    pub horizon: f64,
}

impl Trajectory {
    pub fn constant(state: usize, horizon: f64) -> Self {
        Self {
            initial_state: state,
            jump_times: Vec::new(),
            states_after_jump: Vec::new(),
            horizon,
        }
    }

    pub fn num_jumps(&self) -> usize {
        self.jump_times.len()
    }

    pub fn final_state(&self) -> usize {
        self.states_after_jump
            .last()
            .copied()
            .unwrap_or(self.initial_state)
    }

    /// State at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> usize {
        match self.jump_times.partition_point(|&s| s <= t) {
            0 => self.initial_state,
            k => self.states_after_jump[k - 1],
        }
    }

    /// `(start, end, state)` for each sojourn, the last one censored at the horizon.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        let starts = std::iter::once(0.0).chain(self.jump_times.iter().copied());
        let ends = self
            .jump_times
            .iter()
            .copied()
            .chain(std::iter::once(self.horizon));
        let states =
            std::iter::once(self.initial_state).chain(self.states_after_jump.iter().copied());
        starts.zip(ends).zip(states).map(|((a, b), m)| (a, b, m))
    }

    /// Durations of completed sojourns, excluding the one censored at the horizon.
    pub fn holding_times(&self) -> Vec<(usize, f64)> {
        let n = self.num_jumps();
        self.segments()
            .take(n)
            .map(|(a, b, m)| (m, b - a))
            .collect()
    }

    /// The path read backwards in time, `t ↦ X(T − t)`.
    pub fn time_reversed(&self) -> Self {
        let n = self.num_jumps();
        let jump_times = self
            .jump_times
            .iter()
            .rev()
            .map(|&t| self.horizon - t)
            .collect();
        let mut visited: Vec<usize> = std::iter::once(self.initial_state)
            .chain(self.states_after_jump.iter().copied())
            .collect();
        visited.reverse();
        Self {
            initial_state: visited[0],
            jump_times,
            states_after_jump: visited[1..=n].to_vec(),
            horizon: self.horizon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.jump_times.len() != self.states_after_jump.len() {
            return domain("jump times and states differ in length");
        }
        if self.jump_times.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("jump times must be strictly increasing");
        }
        if self
            .jump_times
            .iter()
            .any(|&t| !(t > 0.0 && t <= self.horizon))
        {
            return domain("jump times must lie in (0, horizon]");
        }
        let mut prev = self.initial_state;
        for &m in &self.states_after_jump {
            if m.abs_diff(prev) != 1 {
                return domain(format!("jump {prev} -> {m} is not a unit step"));
            }
            prev = m;
        }
        Ok(())
    }

    /// CSV `time,state`; each row is the state entered at that time, starting with `0,initial`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time", "state"])?;
        w.write_record([fmt_real(0.0), self.initial_state.to_string()])?;
        for (t, m) in self.jump_times.iter().zip(&self.states_after_jump) {
            w.write_record([fmt_real(*t), m.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `ξ^N = X^N / N` along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledTrajectory {
    pub initial_value: f64,
    pub jump_times: Vec<f64>,
    pub values_after_jump: Vec<f64>,
    pub horizon: f64,
}

pub fn scaled_path(trajectory: &Trajectory, params: &ModelParams<f64>) -> ScaledTrajectory {
    let n = params.n_states as f64;
    ScaledTrajectory {
        initial_value: trajectory.initial_state as f64 / n,
        jump_times: trajectory.jump_times.clone(),
        values_after_jump: trajectory
            .states_after_jump
            .iter()
            .map(|&m| m as f64 / n)
            .collect(),
        horizon: trajectory.horizon,
    }
}

fn run_walker<R: Rng>(rates: &[JumpRates<f64>], start: usize, horizon: f64, rng: R) -> Trajectory {
    let mut traj = Trajectory::constant(start, horizon);
    for (t, m) in Walker::new(rates, start, horizon, rng) {
        traj.jump_times.push(t);
        traj.states_after_jump.push(m);
    }
    traj
}

/// One exact trajectory (replication 0 of `config.seed`).
pub fn sample_path(params: &ModelParams<f64>, config: &SimConfig) -> Result<Trajectory> {
    sample_replication(params, config, 0)
}

/// Replication `index` of `config`.
pub fn sample_replication(
    params: &ModelParams<f64>,
    config: &SimConfig,
    index: u64,
) -> Result<Trajectory> {
    params.validate()?;
    config.validate()?;
    let rates = rate_table(params)?;
    let mut rng = replication_rng(config.seed, index);
    let start = initial_state(params, config.initial, None, &mut rng)?;
    Ok(run_walker(&rates, start, config.horizon, rng))
}

/// Fraction of `[0, T]` spent in each state.
pub fn occupation_fractions(
    trajectory: &Trajectory,
    n_states: usize,
) -> Result<ProbabilityVector<f64>> {
    if !(trajectory.horizon > 0.0) {
        return domain("horizon must be positive");
    }
    let mut time = vec![0.0; n_states];
    for (a, b, m) in trajectory.segments() {
        if m == 0 || m > n_states {
            return domain(format!(
                "trajectory visits state {m} outside 1..={n_states}"
            ));
        }
        time[m - 1] += b - a;
    }
    ProbabilityVector::from_weights(time)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub replications: usize,
    pub seed: u64,
    pub params: ModelParams<f64>,
}

impl McEstimate {
    fn from_indicators(hits: &[bool], seed: u64, params: ModelParams<f64>) -> Self {
        let n = hits.len();
        let p = hits.iter().filter(|&&h| h).count() as f64 / n as f64;
        Self {
            estimate: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            replications: n,
            seed,
            params,
        }
    }

    fn from_samples(values: &[f64], seed: u64, params: ModelParams<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            estimate: mean,
            stderr: (var / n).sqrt(),
            replications: values.len(),
            seed,
            params,
        }
    }

    /// `|estimate − reference|` in units of the standard error.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = (self.estimate - reference).abs();
        if self.stderr > 0.0 {
            diff / self.stderr
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Estimates `P(sup_{t ≤ T} |ξ^N(t) − γ₀| ≥ ε)` from `X(0) = round(γ₀N)`.
///
/// The initial condition in `config` is ignored; the start is always the lattice point nearest `γ₀N`.
pub fn lln_point_experiment(
    params: &ModelParams<f64>,
    gamma0: f64,
    epsilon: f64,
    config: &SimConfig,
) -> Result<McEstimate> {
    params.validate()?;
    config.validate()?;
    if !(gamma0 > 0.0 && gamma0 <= 1.0) {
        return domain(format!("gamma0 = {gamma0} must lie in (0, 1]"));
    }
    if !(epsilon > 0.0) {
        return domain(format!("epsilon must be positive, got {epsilon}"));
    }
    let n = params.n_states as f64;
    let start = (gamma0 * n).round() as usize;
    params.check_state(start)?;
    let rates = rate_table(params)?;
    let deviates = |m: usize| (m as f64 / n - gamma0).abs() >= epsilon;
    let hits: Vec<bool> = (0..config.replications as u64)
        .into_par_iter()
        .map(|i| {
            let rng = replication_rng(config.seed, i);
            deviates(start)
                || Walker::new(&rates, start, config.horizon, rng).any(|(_, m)| deviates(m))
        })
        .collect();
    Ok(McEstimate::from_indicators(&hits, config.seed, *params))
}

/// Largest state `m` with `m/N < u`; `None` when no state qualifies.
pub fn sublevel_max_state(n_states: usize, u: f64) -> Option<usize> {
    let n = n_states as f64;
    let guess = ((u * n).ceil() as usize).min(n_states + 1);
    (1..=guess.min(n_states))
        .rev()
        .find(|&m| (m as f64) / n < u)
}

/// Estimates `P(ξ^N(tᵢ) < u for all i)` under a stationary start.
pub fn lln_stationary_experiment(
    params: &ModelParams<f64>,
    threshold: f64,
    sample_times: &[f64],
    config: &SimConfig,
) -> Result<McEstimate> {
    params.validate()?;
    config.validate()?;
    if config.initial != InitialCondition::Stationary {
        return domain("lln_stationary_experiment needs a stationary initial condition");
    }
    if sample_times.is_empty() {
        return domain("sample_times must be non-empty");
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return domain(format!("threshold u = {threshold} must lie in (0, 1]"));
    }
    if sample_times
        .iter()
        .any(|&t| !(t >= 0.0 && t <= config.horizon))
    {
        return domain("sample times must lie in [0, horizon]");
    }
    let mut times = sample_times.to_vec();
    times.sort_by(f64::total_cmp);
    let last = *times.last().expect("non-empty");
    let n = params.n_states as f64;
    let rates = rate_table(params)?;
    let sampler = StationarySampler::new(params)?;
    let hits: Vec<bool> = (0..config.replications as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replication_rng(config.seed, i);
            let start = sampler.sample(&mut rng);
            let mut walker =
                Walker::new(&rates, start, last.max(f64::MIN_POSITIVE), rng).peekable();
            let mut state = start;
            for &t in &times {
                while let Some(&(s, m)) = walker.peek() {
                    if s > t {
                        break;
                    }
                    state = m;
                    walker.next();
                }
                if !((state as f64) / n < threshold) {
                    return false;
                }
            }
            true
        })
        .collect();
    Ok(McEstimate::from_indicators(&hits, config.seed, *params))
}

/// Time-dependent tilt `z(t) > 0` multiplying up-rates by `z` and down-rates by `1/z`.
pub trait TiltSchedule: Sync {
    fn z(&self, t: f64) -> f64;

    /// `(min z, max z)` over `[a, b]`.
    fn range(&self, a: f64, b: f64) -> (f64, f64);

    fn integral_z(&self, a: f64, b: f64) -> f64 {
        integrate(|t| self.z(t), a, b, QuadOptions::with_tol(TILT_QUAD_TOL)).value
    }

    fn integral_inverse_z(&self, a: f64, b: f64) -> f64 {
        integrate(
            |t| self.z(t).recip(),
            a,
            b,
            QuadOptions::with_tol(TILT_QUAD_TOL),
        )
        .value
    }

    /// Checks positivity and finiteness on `[0, horizon]`.
    fn validate(&self, horizon: f64) -> Result<()> {
        let (lo, hi) = self.range(0.0, horizon);
        if !(lo > 0.0 && hi.is_finite()) {
            return domain(format!(
                "tilt must be positive and finite on [0, {horizon}], range ({lo}, {hi})"
            ));
        }
        for i in 0..=1000 {
            let t = horizon * i as f64 / 1000.0;
            let z = self.z(t);
            if !(z > 0.0 && z.is_finite()) {
                return domain(format!("tilt z({t}) = {z} is not positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantTilt(pub f64);

impl TiltSchedule for ConstantTilt {
    fn z(&self, _t: f64) -> f64 {
        self.0
    }

    fn range(&self, _a: f64, _b: f64) -> (f64, f64) {
        (self.0, self.0)
    }

    fn integral_z(&self, a: f64, b: f64) -> f64 {
        self.0 * (b - a)
    }

    fn integral_inverse_z(&self, a: f64, b: f64) -> f64 {
        (b - a) / self.0
    }
}

/// The optimal dual `z(t) = 1/(λt − c₁) + 1` of a solved path, with exact compensators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualTilt(pub ParabolaParams<f64>);

impl TiltSchedule for DualTilt {
    fn z(&self, t: f64) -> f64 {
        self.0.dual_unchecked(t)
    }

    /// `z` is non-increasing because `ż = −λ(z − 1)²`.
    fn range(&self, a: f64, b: f64) -> (f64, f64) {
        (self.z(b), self.z(a))
    }

    fn integral_z(&self, a: f64, b: f64) -> f64 {
        self.0.integral_dual(a, b)
    }

    fn integral_inverse_z(&self, a: f64, b: f64) -> f64 {
        self.0.integral_inverse_dual(a, b)
    }

    fn validate(&self, horizon: f64) -> Result<()> {
        let p = &self.0;
        if p.case == PathCase::Constant {
            return Ok(());
        }
        let (s0, s1) = (-p.c1, p.lambda * horizon - p.c1);
        if s0.max(s1) >= -1.0 && s0.min(s1) <= 0.0 {
            return domain(format!(
                "dual of this path is singular or non-positive on [0, {horizon}]"
            ));
        }
        Ok(())
    }
}

/// Monotone tilt given as a closure; compensators by adaptive quadrature.
pub struct MonotoneTilt<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> TiltSchedule for MonotoneTilt<F> {
    fn z(&self, t: f64) -> f64 {
        (self.0)(t)
    }

    fn range(&self, a: f64, b: f64) -> (f64, f64) {
        let (za, zb) = (self.z(a), self.z(b));
        (za.min(zb), za.max(zb))
    }
}

/// A trajectory under the tilted law with `ln(dP_nominal/dP_tilted)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTrajectory {
    pub trajectory: Trajectory,
    pub log_weight: f64,
}

fn compensator<S: TiltSchedule + ?Sized>(tilt: &S, r: JumpRates<f64>, a: f64, b: f64) -> f64 {
    let mut c = 0.0;
    if r.up > 0.0 {
        c += r.up * (tilt.integral_z(a, b) - (b - a));
    }
    if r.down > 0.0 {
        c += r.down * (tilt.integral_inverse_z(a, b) - (b - a));
    }
    c
}

/// Thinning sampler for the tilted chain. Consumes the RNG in the same order
/// as [`Walker`] when the tilt is identically 1.
fn run_tilted<S: TiltSchedule + ?Sized, R: Rng>(
    rates: &[JumpRates<f64>],
    tilt: &S,
    start: usize,
    horizon: f64,
    mut rng: R,
) -> WeightedTrajectory {
    let mut traj = Trajectory::constant(start, horizon);
    let mut log_weight = 0.0;
    let mut state = start;
    let mut entered = 0.0;
    let mut now = 0.0;
    loop {
        let r = rates[state - 1];
        if r.total() <= 0.0 {
            break;
        }
        let (z_lo, z_hi) = tilt.range(now, horizon);
        let bound = r.up * z_hi + r.down / z_lo;
        let when = now + rng.sample::<f64, _>(Exp1) / bound;
        if when >= horizon {
            break;
        }
        now = when;
        let z = tilt.z(when);
        let (up, down) = (r.up * z, r.down / z);
        let total = up + down;
        if total < bound {
            let accept: f64 = rng.random();
            if accept * bound >= total {
                continue;
            }
        }
        log_weight += compensator(tilt, r, entered, when);
        let u: f64 = rng.random();
        if u * total < up {
            state += 1;
            log_weight -= z.ln();
        } else {
            state -= 1;
            log_weight += z.ln();
        }
        entered = when;
        traj.jump_times.push(when);
        traj.states_after_jump.push(state);
    }
    log_weight += compensator(tilt, rates[state - 1], entered, horizon);
    WeightedTrajectory {
        trajectory: traj,
        log_weight,
    }
}

/// Replication `index` under the tilted law.
pub fn tilted_replication<S: TiltSchedule + ?Sized>(
    params: &ModelParams<f64>,
    tilt: &S,
    config: &SimConfig,
    index: u64,
) -> Result<WeightedTrajectory> {
    params.validate()?;
    config.validate()?;
    tilt.validate(config.horizon)?;
    let rates = rate_table(params)?;
    let mut rng = replication_rng(config.seed, index);
    let start = initial_state(params, config.initial, None, &mut rng)?;
    Ok(run_tilted(&rates, tilt, start, config.horizon, rng))
}

/// One tilted trajectory (replication 0).
pub fn tilted_sample_path<S: TiltSchedule + ?Sized>(
    params: &ModelParams<f64>,
    tilt: &S,
    config: &SimConfig,
) -> Result<WeightedTrajectory> {
    tilted_replication(params, tilt, config, 0)
}

/// Importance-sampling estimate of `P(X(T) ∈ window)`.
pub fn tilted_window_estimate<S: TiltSchedule + ?Sized>(
    params: &ModelParams<f64>,
    tilt: &S,
    window: RangeInclusive<usize>,
    config: &SimConfig,
) -> Result<McEstimate> {
    params.validate()?;
    config.validate()?;
    tilt.validate(config.horizon)?;
    if window.is_empty() {
        return domain("window is empty");
    }
    let rates = rate_table(params)?;
    let sampler = match config.initial {
        InitialCondition::Stationary => Some(StationarySampler::new(params)?),
        InitialCondition::Point(m) => {
            params.check_state(m)?;
            None
        }
    };
    let values: Vec<f64> = (0..config.replications as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replication_rng(config.seed, i);
            let start = initial_state(params, config.initial, sampler.as_ref(), &mut rng)
                .expect("validated");
            let w = run_tilted(&rates, tilt, start, config.horizon, rng);
            if window.contains(&w.trajectory.final_state()) {
                w.log_weight.exp()
            } else {
                0.0
            }
        })
        .collect();
    Ok(McEstimate::from_samples(&values, config.seed, *params))
}

/// Plain Monte Carlo estimate of `P(X(T) ∈ window)`.
pub fn window_frequency(
    params: &ModelParams<f64>,
    window: RangeInclusive<usize>,
    config: &SimConfig,
) -> Result<McEstimate> {
    params.validate()?;
    config.validate()?;
    let counts = endpoint_counts(params, config)?;
    let hits: usize = window
        .filter(|m| *m >= 1 && *m <= params.n_states)
        .map(|m| counts[m - 1])
        .sum();
    let flags: Vec<bool> = (0..config.replications).map(|i| i < hits).collect();
    Ok(McEstimate::from_indicators(&flags, config.seed, *params))
}

/// Histogram of `X(T)` over the replications of `config`.
pub fn endpoint_counts(params: &ModelParams<f64>, config: &SimConfig) -> Result<Vec<usize>> {
    params.validate()?;
    config.validate()?;
    let rates = rate_table(params)?;
    let sampler = match config.initial {
        InitialCondition::Stationary => Some(StationarySampler::new(params)?),
        InitialCondition::Point(m) => {
            params.check_state(m)?;
            None
        }
    };
    let finals: Vec<usize> = (0..config.replications as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replication_rng(config.seed, i);
            let start = initial_state(params, config.initial, sampler.as_ref(), &mut rng)
                .expect("validated");
            let mut walker = Walker::new(&rates, start, config.horizon, rng);
            walker.by_ref().for_each(drop);
            walker.state()
        })
        .collect();
    let mut counts = vec![0usize; params.n_states];
    for m in finals {
        counts[m - 1] += 1;
    }
    Ok(counts)
}

/// Start state `round(γ₀N)` as an initial condition.
pub fn point_start(n_states: usize, gamma0: f64) -> InitialCondition {
    InitialCondition::Point(lattice_state(n_states, gamma0))
}
