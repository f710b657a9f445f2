//! Exact transition probabilities by uniformization of the tridiagonal generator.

use std::io::Write;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::markov::{fmt_real, jump_rates, ModelParams, ProbabilityVector};
use crate::optimal::optimal_action;
use crate::scalar::{compensated_sum, Real};

/// Window masses below this are recomputed in log space.
pub const LOG_SPACE_THRESHOLD: f64 = 1e-300;
/// Largest N the oracle is intended for.
pub const PRACTICAL_N_CAP: usize = 5000;

/// Tridiagonal generator: `up[i]` is the rate `i+1 → i+2`, `down[i]` the rate `i+1 → i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix<T> {
    up: Vec<T>,
    down: Vec<T>,
    diag: Vec<T>,
}

impl<T: Real> GeneratorMatrix<T> {
    pub fn new(params: &ModelParams<T>) -> Result<Self> {
        params.validate()?;
        let n = params.n_states;
        let mut up = Vec::with_capacity(n);
        let mut down = Vec::with_capacity(n);
        for m in 1..=n {
            let r = jump_rates(params, m)?;
            up.push(r.up);
            down.push(r.down);
        }
        let diag = up.iter().zip(&down).map(|(&u, &d)| -(u + d)).collect();
        Ok(Self { up, down, diag })
    }

    pub fn dimension(&self) -> usize {
        self.diag.len()
    }

    /// Entry `Q[i][j]` for 1-based states.
    pub fn entry(&self, i: usize, j: usize) -> T {
        let n = self.dimension();
        if i == 0 || j == 0 || i > n || j > n {
            return T::zero();
        }
        if i == j {
            self.diag[i - 1]
        } else if j == i + 1 {
            self.up[i - 1]
        } else if i == j + 1 {
            self.down[i - 1]
        } else {
            T::zero()
        }
    }

    pub fn row_sum(&self, i: usize) -> T {
        self.up[i - 1] + self.down[i - 1] + self.diag[i - 1]
    }

    pub fn max_exit_rate(&self) -> T {
        self.diag.iter().fold(T::zero(), |acc, d| acc.max(-*d))
    }
}

/// Uniformized kernel `P = I + Q/Λ` with `Λ = 2λN`.
struct Kernel<T> {
    stay: Vec<T>,
    up: Vec<T>,
    down: Vec<T>,
    rate: T,
}

impl<T: Real> Kernel<T> {
    fn new(params: &ModelParams<T>) -> Result<Self> {
        let q = GeneratorMatrix::new(params)?;
        let rate = T::lit(2.0) * params.lambda * params.n();
        let stay = q.diag.iter().map(|&d| T::one() + d / rate).collect();
        let up = q.up.iter().map(|&u| u / rate).collect();
        let down = q.down.iter().map(|&d| d / rate).collect();
        Ok(Self {
            stay,
            up,
            down,
            rate,
        })
    }

    /// `out = v P` (row vector times kernel).
    fn step(&self, v: &[T], out: &mut [T]) {
        let n = v.len();
        for j in 0..n {
            let mut acc = v[j] * self.stay[j];
            if j > 0 {
                acc = acc + v[j - 1] * self.up[j - 1];
            }
            if j + 1 < n {
                acc = acc + v[j + 1] * self.down[j + 1];
            }
            out[j] = acc;
        }
    }

    /// Same in log space.
    fn step_log(&self, v: &[T], out: &mut [T]) {
        let n = v.len();
        for j in 0..n {
            let mut terms = [
                v[j] + self.stay[j].ln(),
                T::neg_infinity(),
                T::neg_infinity(),
            ];
            if j > 0 {
                terms[1] = v[j - 1] + self.up[j - 1].ln();
            }
            if j + 1 < n {
                terms[2] = v[j + 1] + self.down[j + 1].ln();
            }
            out[j] = log_sum_exp(&terms);
        }
    }
}

fn log_add<T: Real>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let hi = a.max(b);
    hi + (-(a - b).abs()).exp().ln_1p()
}

fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::neg_infinity(), |acc, &x| log_add(acc, x))
}

fn check_time_tol<T: Real>(t: T, tol: T) -> Result<()> {
    if !(t >= T::zero()) || !t.is_finite() {
        return domain(format!("time must be non-negative and finite, got {t}"));
    }
    if !(tol > T::zero() && tol <= T::lit(1e-6)) {
        return domain(format!("tol must lie in (0, 1e-6], got {tol}"));
    }
    Ok(())
}

/// Poisson(q) weights in log space. `visit(k, log_weight)` consumes term `k`
/// and returns the log of a reference mass; terms stop once the certified
/// right-tail bound is below `tail` times that reference.
fn poisson_terms<T: Real>(q: T, tail: T, mut visit: impl FnMut(usize, T) -> T) {
    let mut log_w = -q;
    let log_q = q.ln();
    let log_tail = tail.ln();
    let mut k = 0usize;
    loop {
        let reference = visit(k, log_w);
        let next = T::from_usize_lossy(k + 1);
        if next > q {
            // Σ_{j>k} w_j ≤ w_k · r/(1 − r) with r = q/(k+1) < 1.
            let r = q / next;
            let log_bound = log_w + (r / (T::one() - r)).ln();
            if log_bound <= log_tail + reference || log_w == T::neg_infinity() {
                return;
            }
        }
        log_w = log_w + log_q - next.ln();
        k += 1;
    }
}

/// Evolves a (sub-)probability vector for time `t`; the Poisson mixture is
/// divided by its retained weight, so total mass is preserved up to rounding.
pub fn evolve_masses<T: Real>(
    params: &ModelParams<T>,
    initial: &[T],
    t: T,
    tol: T,
) -> Result<Vec<T>> {
    check_time_tol(t, tol)?;
    if initial.len() != params.n_states {
        return domain("initial vector does not match N");
    }
    if t == T::zero() || params.n_states == 1 {
        return Ok(initial.to_vec());
    }
    let kernel = Kernel::new(params)?;
    let q = kernel.rate * t;
    let n = params.n_states;
    let mut v = initial.to_vec();
    let mut next = vec![T::zero(); n];
    let mut acc = vec![T::zero(); n];
    let mut weight = T::zero();
    poisson_terms(q, tol * T::lit(0.5), |k, log_w| {
        if k > 0 {
            kernel.step(&v, &mut next);
            std::mem::swap(&mut v, &mut next);
        }
        let w = log_w.exp();
        if w > T::zero() {
            weight = weight + w;
            for (a, x) in acc.iter_mut().zip(&v) {
                *a = *a + w * *x;
            }
        }
        T::zero()
    });
    Ok(acc.into_iter().map(|a| a / weight).collect())
}

/// Log-space counterpart of [`evolve_masses`]: takes and returns log masses.
///
/// With a `window`, truncation is relative to the mass accumulated there, so
/// windows far from the initial mass are resolved rather than cut off.
pub fn evolve_log_masses<T: Real>(
    params: &ModelParams<T>,
    log_initial: &[T],
    t: T,
    tol: T,
    window: Option<RangeInclusive<usize>>,
) -> Result<Vec<T>> {
    check_time_tol(t, tol)?;
    if log_initial.len() != params.n_states {
        return domain("initial vector does not match N");
    }
    if t == T::zero() || params.n_states == 1 {
        return Ok(log_initial.to_vec());
    }
    let kernel = Kernel::new(params)?;
    let q = kernel.rate * t;
    let n = params.n_states;
    let mut v = log_initial.to_vec();
    let mut next = vec![T::neg_infinity(); n];
    let mut acc = vec![T::neg_infinity(); n];
    let mut log_weight = T::neg_infinity();
    poisson_terms(q, tol * T::lit(0.5), |k, log_w| {
        if k > 0 {
            kernel.step_log(&v, &mut next);
            std::mem::swap(&mut v, &mut next);
        }
        log_weight = log_add(log_weight, log_w);
        for (a, x) in acc.iter_mut().zip(&v) {
            *a = log_add(*a, log_w + *x);
        }
        match &window {
            Some(w) => log_sum_exp(&acc[w.start() - 1..*w.end()]).min(T::zero()),
            None => T::zero(),
        }
    });
    Ok(acc.into_iter().map(|a| a - log_weight).collect())
}

/// Law of `X(t)` given `X(0) = m0`.
pub fn endpoint_distribution<T: Real>(
    params: &ModelParams<T>,
    m0: usize,
    t: T,
    tol: T,
) -> Result<ProbabilityVector<T>> {
    params.validate()?;
    params.check_state(m0)?;
    let start = ProbabilityVector::point_mass(params.n_states, m0)?;
    evolve_distribution(params, &start, t, tol)
}

/// Law of `X(t)` for a general initial law.
pub fn evolve_distribution<T: Real>(
    params: &ModelParams<T>,
    initial: &ProbabilityVector<T>,
    t: T,
    tol: T,
) -> Result<ProbabilityVector<T>> {
    let masses = evolve_masses(params, initial.as_slice(), t, tol)?;
    ProbabilityVector::from_weights(masses.into_iter().map(|x| x.max(T::zero())).collect())
}

fn check_window<T: Real>(params: &ModelParams<T>, window: &RangeInclusive<usize>) -> Result<()> {
    if window.is_empty() {
        return domain("window is empty");
    }
    params.check_state(*window.start())?;
    params.check_state(*window.end())?;
    Ok(())
}

/// `P(X(t) ∈ window | X(0) = m0)` in linear space.
pub fn window_probability<T: Real>(
    params: &ModelParams<T>,
    m0: usize,
    t: T,
    window: RangeInclusive<usize>,
    tol: T,
) -> Result<T> {
    check_window(params, &window)?;
    let dist = endpoint_distribution(params, m0, t, tol)?;
    Ok(compensated_sum(window.map(|m| dist.get(m))).min(T::one()))
}

/// `ln P(X(t) ∈ window | X(0) = m0)`, switching to log-space propagation when
/// the linear result falls below [`LOG_SPACE_THRESHOLD`].
pub fn log_window_probability<T: Real>(
    params: &ModelParams<T>,
    m0: usize,
    t: T,
    window: RangeInclusive<usize>,
    tol: T,
) -> Result<T> {
    let p = window_probability(params, m0, t, window.clone(), tol)?;
    if p >= T::lit(LOG_SPACE_THRESHOLD).max(T::min_positive_value() * T::lit(1e8)) {
        return Ok(p.ln());
    }
    let mut log_start = vec![T::neg_infinity(); params.n_states];
    log_start[m0 - 1] = T::zero();
    let logs = evolve_log_masses(params, &log_start, t, tol, Some(window.clone()))?;
    let lp = log_sum_exp(&logs[*window.start() - 1..*window.end()]) - log_sum_exp(&logs);
    if lp == T::neg_infinity() {
        return Err(Error::Underflow(format!(
            "window {window:?} has zero probability"
        )));
    }
    Ok(lp.min(T::zero()))
}

/// `P(X(tᵢ) ≤ max_state for every i)` starting from `initial`.
pub fn sublevel_probability<T: Real>(
    params: &ModelParams<T>,
    initial: &ProbabilityVector<T>,
    max_state: usize,
    times: &[T],
    tol: T,
) -> Result<T> {
    if times.is_empty() {
        return domain("sample times must be non-empty");
    }
    let mut sorted = times.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut v = initial.as_slice().to_vec();
    let mut now = T::zero();
    for &t in &sorted {
        if !(t >= T::zero()) {
            return domain(format!("sample time {t} is negative"));
        }
        v = evolve_masses(params, &v, t - now, tol)?;
        now = t;
        for x in v.iter_mut().skip(max_state.min(params.n_states)) {
            *x = T::zero();
        }
    }
    Ok(compensated_sum(v).min(T::one()).max(T::zero()))
}

/// One point `(N, a_N)` of the empirical rate curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint<T> {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "a_N")]
    pub a_n: T,
    pub window_prob: T,
    pub log_window_prob: T,
    #[serde(rename = "I_ref")]
    pub i_ref: T,
}

/// Lattice window `{round((γ_T − h)N), …, round((γ_T + h)N)}` clipped to `{1, …, N}`.
pub fn rate_window(n_states: usize, gamma_t: f64, half_width: f64) -> RangeInclusive<usize> {
    let n = n_states as f64;
    let lo = ((gamma_t - half_width) * n).round().max(1.0) as usize;
    let hi = ((gamma_t + half_width) * n).round().min(n) as usize;
    lo..=hi
}

/// Initial lattice state `round(γ₀N)`, at least 1.
pub fn lattice_state(n_states: usize, gamma: f64) -> usize {
    ((gamma * n_states as f64).round() as usize).clamp(1, n_states)
}

/// `a_N = −(1/N) ln P(ξ^N(T) ∈ window | ξ^N(0) ≈ γ₀)` along a ladder of chain sizes.
pub fn empirical_rate_curve(
    params_list: &[ModelParams<f64>],
    gamma0: f64,
    gamma_t: f64,
    horizon: f64,
    half_width: f64,
    tol: f64,
) -> Result<Vec<RatePoint<f64>>> {
    if params_list.is_empty() {
        return domain("N ladder is empty");
    }
    for (name, g) in [("gamma0", gamma0), ("gammaT", gamma_t)] {
        if !(g > 0.0 && g < 1.0) {
            return domain(format!("{name} = {g} must lie in (0, 1)"));
        }
    }
    if !(half_width > 0.0) {
        return domain("half_width must be positive");
    }
    params_list
        .iter()
        .map(|params| {
            params.validate()?;
            let n = params.n_states;
            let lp = log_window_probability(
                params,
                lattice_state(n, gamma0),
                horizon,
                rate_window(n, gamma_t, half_width),
                tol,
            )?;
            let i_ref = optimal_action(gamma0, gamma_t, horizon, params.lambda)?.value;
            Ok(RatePoint {
                n,
                a_n: -lp / n as f64,
                window_prob: lp.exp(),
                log_window_prob: lp,
                i_ref,
            })
        })
        .collect()
}

/// CSV with columns `N,a_N,window_prob,I_ref`.
pub fn write_rate_curve_csv<W: Write>(points: &[RatePoint<f64>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["N", "a_N", "window_prob", "I_ref"])?;
    for p in points {
        w.write_record([
            p.n.to_string(),
            fmt_real(p.a_n),
            fmt_real(p.window_prob),
            fmt_real(p.i_ref),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::stationary_distribution;
    use approx::assert_abs_diff_eq;

    fn p(n: usize, lambda: f64) -> ModelParams<f64> {
        ModelParams::new(n, lambda).unwrap()
    }

    #[test]
    fn generator_rows_sum_to_zero() {
        for n in [1, 2, 9, 300] {
            let q = GeneratorMatrix::new(&p(n, 1.3)).unwrap();
            for i in 1..=n {
                assert!(q.row_sum(i).abs() < 1e-14);
                for j in 1..=n {
                    if i != j {
                        assert!(q.entry(i, j) >= 0.0);
                    }
                }
            }
        }
        let q = GeneratorMatrix::new(&p(4, 1.0)).unwrap();
        assert_eq!(q.entry(1, 2), 1.0);
        assert_eq!(q.entry(4, 3), 4.0);
        assert_eq!(q.entry(2, 4), 0.0);
        assert_eq!(q.max_exit_rate(), 6.0);
    }

    #[test]
    fn time_zero_is_point_mass() {
        let d = endpoint_distribution(&p(10, 1.0), 4, 0.0, 1e-12).unwrap();
        assert_eq!(d.get(4), 1.0);
        assert_eq!(d.total(), 1.0);
    }

    #[test]
    fn two_state_closed_form() {
        for t in [0.1, 0.5, 1.0, 10.0] {
            let d = endpoint_distribution(&p(2, 1.0), 1, t, 1e-13).unwrap();
            assert_abs_diff_eq!(
                d.get(1),
                2.0 / 3.0 + (-3.0 * t).exp() / 3.0,
                epsilon = 1e-11
            );
        }
    }

    #[test]
    fn converges_to_stationary() {
        let params = p(20, 1.0);
        let pi = stationary_distribution(&params).unwrap();
        // Spectral gap is about 0.16 at N = 20; dense expm gives TV = 2.7927e-4 at t = 50.
        let d = endpoint_distribution(&params, 17, 50.0, 1e-12).unwrap();
        assert_abs_diff_eq!(d.total_variation(&pi), 2.7927e-4, epsilon = 1e-7);
        let d = endpoint_distribution(&params, 17, 250.0, 1e-12).unwrap();
        assert!(d.total_variation(&pi) < 1e-10);
    }

    #[test]
    fn bad_inputs() {
        let params = p(10, 1.0);
        assert!(endpoint_distribution(&params, 3, -1.0, 1e-10).is_err());
        assert!(endpoint_distribution(&params, 3, 1.0, 1e-3).is_err());
        assert!(endpoint_distribution(&params, 3, 1.0, 0.0).is_err());
        assert!(endpoint_distribution(&params, 11, 1.0, 1e-10).is_err());
        #[allow(clippy::reversed_empty_ranges)]
        let empty = 5..=4;
        assert!(window_probability(&params, 3, 1.0, empty, 1e-10).is_err());
        assert!(window_probability(&params, 3, 1.0, 5..=11, 1e-10).is_err());
    }

    #[test]
    fn window_examples() {
        let params = p(30, 1.0);
        assert_abs_diff_eq!(
            window_probability(&params, 7, 2.0, 1..=30, 1e-12).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_eq!(
            window_probability(&params, 7, 0.0, 7..=7, 1e-12).unwrap(),
            1.0
        );
    }

    #[test]
    fn window_regression_fixture() {
        // N = 100, λ = 1, t = 1, m0 = 50, window 78..=82, tol 1e-12.
        let v = window_probability(&p(100, 1.0), 50, 1.0, 78..=82, 1e-12).unwrap();
        assert_abs_diff_eq!(v, WINDOW_FIXTURE, epsilon = 1e-14);
    }

    const WINDOW_FIXTURE: f64 = 4.377_798_794_993_138e-3;

    #[test]
    fn chapman_kolmogorov() {
        let tol = 1e-12;
        for n in [5, 23, 50] {
            let params = p(n, 0.7);
            let direct = endpoint_distribution(&params, 2, 1.3, tol).unwrap();
            let mid = endpoint_distribution(&params, 2, 0.5, tol).unwrap();
            let composed = evolve_distribution(&params, &mid, 0.8, tol).unwrap();
            assert!(direct.total_variation(&composed) <= 20.0 * tol);
        }
    }

    #[test]
    fn semigroup_reversibility() {
        let tol = 1e-12;
        let params = p(40, 1.0);
        let pi = stationary_distribution(&params).unwrap();
        for (a, b) in [(3, 17), (1, 40), (20, 21)] {
            let pab = endpoint_distribution(&params, a, 0.6, tol).unwrap().get(b);
            let pba = endpoint_distribution(&params, b, 0.6, tol).unwrap().get(a);
            assert_abs_diff_eq!(pi.get(a) * pab, pi.get(b) * pba, epsilon = 10.0 * tol);
        }
    }

    #[test]
    fn log_space_matches_linear() {
        let params = p(60, 1.0);
        let lin = window_probability(&params, 5, 0.4, 50..=60, 1e-12).unwrap();
        let mut start = vec![f64::NEG_INFINITY; 60];
        start[4] = 0.0;
        let logs = evolve_log_masses(&params, &start, 0.4, 1e-12, None).unwrap();
        let lp = log_sum_exp(&logs[49..60]);
        assert!((lp - lin.ln()).abs() < 1e-9, "{lp} vs {}", lin.ln());
    }

    #[test]
    fn log_fallback_below_threshold() {
        // Far-off window at short time: mass is below 1e-300.
        let params = p(400, 1.0);
        let lin = window_probability(&params, 10, 0.05, 390..=400, 1e-12).unwrap();
        assert!(lin < LOG_SPACE_THRESHOLD);
        let lp = log_window_probability(&params, 10, 0.05, 390..=400, 1e-12).unwrap();
        assert!(lp.is_finite() && lp < LOG_SPACE_THRESHOLD.ln());
        // Reaching 390 needs at least 380 up-steps of the kernel, each with
        // probability at most 1/2, among K ~ Poisson(40) steps:
        // P <= E[C(K, 380)] 2^-380 = (40/2)^380 / 380!.
        let bound = 380.0 * 20f64.ln() - (1..=380).map(|k| (k as f64).ln()).sum::<f64>();
        assert!(lp <= bound, "{lp} vs {bound}");
    }

    #[test]
    fn sublevel_single_time_equals_window() {
        let params = p(30, 1.0);
        let start = ProbabilityVector::point_mass(30, 10).unwrap();
        let a = sublevel_probability(&params, &start, 12, &[0.7], 1e-12).unwrap();
        let b = window_probability(&params, 10, 0.7, 1..=12, 1e-12).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        assert!(sublevel_probability(&params, &start, 12, &[], 1e-12).is_err());
    }

    #[test]
    fn rate_window_rounding() {
        assert_eq!(rate_window(100, 0.8, 0.02), 78..=82);
        assert_eq!(rate_window(400, 0.8, 0.02), 312..=328);
        assert_eq!(rate_window(10, 0.95, 0.2), 8..=10);
        assert_eq!(lattice_state(1000, 0.5), 500);
        assert_eq!(lattice_state(10, 0.0), 1);
    }

    #[test]
    fn rate_curve_monotone_in_half_width() {
        let ladder = [p(100, 1.0)];
        let narrow = empirical_rate_curve(&ladder, 0.5, 0.7, 1.0, 0.01, 1e-12).unwrap();
        let wide = empirical_rate_curve(&ladder, 0.5, 0.7, 1.0, 0.02, 1e-12).unwrap();
        assert!(wide[0].a_n <= narrow[0].a_n);
        assert!(empirical_rate_curve(&[], 0.5, 0.7, 1.0, 0.02, 1e-12).is_err());
    }

    #[test]
    fn rate_curve_csv_header() {
        let pts = empirical_rate_curve(&[p(50, 1.0)], 0.5, 0.5, 1.0, 0.04, 1e-12).unwrap();
        let mut buf = Vec::new();
        write_rate_curve_csv(&pts, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("N,a_N,window_prob,I_ref\n50,"));
    }
}
