//! Hamiltonian, Lagrangian (Legendre transform), the prelimit nonlinear
//! generator, and the action functional `I(γ) = ∫ L(γ, γ̇) dt`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::markov::{fmt_real, jump_rates, ModelParams};
use crate::optimal::ParabolaParams;
use crate::quadrature::{integrate, QuadOptions};
use crate::scalar::{CompensatedSum, Real};

/// Absolute tolerance of the action quadrature.
pub const ACTION_TOL: f64 = 1e-10;

fn check_unit<T: Real>(gamma: T) -> Result<()> {
    if gamma >= T::zero() && gamma <= T::one() {
        Ok(())
    } else {
        domain(format!("gamma = {gamma} outside [0, 1]"))
    }
}

fn check_kappa<T: Real>(kappa: T) -> Result<()> {
    if kappa.abs() > T::exp_guard() || kappa.is_nan() {
        Err(Error::Overflow {
            kappa: kappa.to_f64().unwrap_or(f64::NAN),
        })
    } else {
        Ok(())
    }
}

/// `H(γ, κ) = λγ(e^κ − 1) + λγ(e^{−κ} − 1)`, evaluated as `4λγ sinh²(κ/2)`.
pub fn hamiltonian<T: Real>(gamma: T, kappa: T, lambda: T) -> Result<T> {
    check_unit(gamma)?;
    check_kappa(kappa)?;
    let s = (kappa * T::lit(0.5)).sinh();
    Ok(T::lit(4.0) * lambda * gamma * s * s)
}

/// `∂H/∂κ = 2λγ sinh κ`.
pub fn hamiltonian_dkappa<T: Real>(gamma: T, kappa: T, lambda: T) -> Result<T> {
    check_unit(gamma)?;
    check_kappa(kappa)?;
    Ok(T::lit(2.0) * lambda * gamma * kappa.sinh())
}

/// Maximiser of `κu − H(γ, κ)`: `asinh(u / 2λγ)`.
pub fn kappa_star<T: Real>(gamma: T, u: T, lambda: T) -> Result<T> {
    if gamma == T::zero() {
        return if u == T::zero() {
            Ok(T::zero())
        } else {
            domain("gamma = 0 with u != 0: supremum is +inf")
        };
    }
    if !(gamma > T::zero()) {
        return domain(format!("kappa_star needs gamma > 0, got {gamma}"));
    }
    Ok((u / (T::lit(2.0) * lambda * gamma)).asinh())
}

/// Closed-form Lagrangian `u·asinh(u/2λγ) + 2λγ − √(u² + (2λγ)²)`.
///
/// `L(0, 0) = 0` and `L(0, u ≠ 0) = +∞`. The last two terms are combined as
/// `−u²/(2λγ + √(u² + (2λγ)²))`, which has no cancellation.
pub fn lagrangian<T: Real>(gamma: T, u: T, lambda: T) -> T {
    if gamma <= T::zero() {
        return if u == T::zero() {
            T::zero()
        } else {
            T::infinity()
        };
    }
    let a = T::lit(2.0) * lambda * gamma;
    let r = u.hypot(a);
    u * (u / a).asinh() - u * u / (a + r)
}

/// The rate-function integrand exactly as printed:
/// `u·ln(x + √(x² + 1)) − u + 2λγ − (2λγ)²/(u + √(u² + (2λγ)²))` with `x = u/2λγ`.
///
/// Both logarithm argument and denominator cancel for negative `u`; use
/// [`lagrangian`] for computation.
pub fn rf_integrand_printed<T: Real>(gamma: T, u: T, lambda: T) -> T {
    let a = T::lit(2.0) * lambda * gamma;
    let x = u / a;
    u * (x + (x * x + T::one()).sqrt()).ln() - u + a - a * a / (u + (u * u + a * a).sqrt())
}

/// Golden-section maximisation of a concave function on `[lo, hi]`.
/// Returns `(argmax, max)` or an error if the maximiser sits on the bracket.
fn golden_max<T: Real, F: Fn(T) -> T>(g: F, lo: T, hi: T, tol: T) -> Result<(T, T)> {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) * T::lit(0.5);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..400 {
        if (b - a).abs() <= tol * (T::one() + c.abs().max(d.abs())) {
            break;
        }
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    let (x, v) = if gc > gd { (c, gc) } else { (d, gd) };
    let margin = (hi - lo) * T::lit(1e-9);
    if x - lo <= margin || hi - x <= margin || !v.is_finite() {
        return Err(Error::Bracket(format!(
            "maximiser {x} at edge of [{lo}, {hi}]"
        )));
    }
    Ok((x, v))
}

/// Lagrangian as `sup_κ (κu − H(γ, κ))` by golden-section search; independent of [`lagrangian`].
pub fn lagrangian_numeric<T: Real>(gamma: T, u: T, lambda: T) -> Result<T> {
    if !(gamma > T::zero()) || gamma > T::one() {
        return domain(format!(
            "lagrangian_numeric needs gamma in (0, 1], got {gamma}"
        ));
    }
    let half_width = (u.abs() / (T::lit(2.0) * lambda * gamma)).asinh() + T::lit(2.0);
    check_kappa(half_width)?;
    let (_, v) = golden_max(
        |k| k * u - hamiltonian(gamma, k, lambda).unwrap_or_else(|_| T::infinity()),
        -half_width,
        half_width,
        T::lit(1e-12),
    )?;
    Ok(v)
}

/// Fenchel inverse `sup_u (κu − L(γ, u))`, which should recover `H(γ, κ)`.
pub fn hamiltonian_from_lagrangian<T: Real>(gamma: T, kappa: T, lambda: T) -> Result<T> {
    if !(gamma > T::zero()) || gamma > T::one() {
        return domain(format!(
            "Fenchel inverse needs gamma in (0, 1], got {gamma}"
        ));
    }
    check_kappa(kappa)?;
    let a = T::lit(2.0) * lambda * gamma;
    let half_width = a * kappa.abs().sinh() + a + T::one();
    let (_, v) = golden_max(
        |u| kappa * u - lagrangian(gamma, u, lambda),
        -half_width,
        half_width,
        T::lit(1e-12),
    )?;
    Ok(v)
}

type ScalarFn<T> = Box<dyn Fn(T) -> T + Send + Sync>;

/// Probe function `f` on `[0, 1]` with its derivative.
pub struct ProbeFunction<T> {
    f: ScalarFn<T>,
    df: ScalarFn<T>,
    zero_slope_at_one: bool,
}

impl<T: Real> ProbeFunction<T> {
    /// When `zero_slope_at_one` is set, `f′(1)` is checked to vanish.
    pub fn new(
        f: impl Fn(T) -> T + Send + Sync + 'static,
        df: impl Fn(T) -> T + Send + Sync + 'static,
        zero_slope_at_one: bool,
    ) -> Result<Self> {
        if zero_slope_at_one && df(T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(16.0))
        {
            return domain("probe flagged with f'(1) = 0 but derivative does not vanish at 1");
        }
        Ok(Self {
            f: Box::new(f),
            df: Box::new(df),
            zero_slope_at_one,
        })
    }

    /// `f(x) = (1 − x)²/2`.
    pub fn quadratic_well() -> Self {
        let half = T::lit(0.5);
        Self::new(
            move |x: T| (T::one() - x) * (T::one() - x) * half,
            |x: T| x - T::one(),
            true,
        )
        .expect("f'(1) = 0")
    }

    pub fn value(&self, x: T) -> T {
        (self.f)(x)
    }

    pub fn derivative(&self, x: T) -> T {
        (self.df)(x)
    }

    pub fn zero_slope_at_one(&self) -> bool {
        self.zero_slope_at_one
    }
}

impl<T> std::fmt::Debug for ProbeFunction<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProbeFunction")
            .field("zero_slope_at_one", &self.zero_slope_at_one)
            .finish_non_exhaustive()
    }
}

/// `H^N f(m/N) = (1/N) Σ_± rate_±(m) (e^{N(f((m±1)/N) − f(m/N))} − 1)`.
///
/// With the reflecting rates this gives the single-sided prefactors `λ/N` at
/// `γ = 1/N` and `λ` at `γ = 1`.
pub fn prelimit_hamiltonian_at<T: Real>(
    f: &ProbeFunction<T>,
    params: &ModelParams<T>,
    m: usize,
) -> Result<T> {
    let rates = jump_rates(params, m)?;
    let n = params.n();
    let at = |k: usize| f.value(T::from_usize_lossy(k) / n);
    let here = at(m);
    let term = |rate: T, k: usize| -> Result<T> {
        if rate == T::zero() {
            return Ok(T::zero());
        }
        let exponent = n * (at(k) - here);
        check_kappa(exponent)?;
        Ok(rate * exponent.exp_m1())
    };
    let up = term(rates.up, m + 1)?;
    let down = if m > 1 {
        term(rates.down, m - 1)?
    } else {
        T::zero()
    };
    Ok((up + down) / n)
}

/// [`prelimit_hamiltonian_at`] addressed by the lattice point `γ ∈ {1/N, …, 1}`.
pub fn prelimit_hamiltonian<T: Real>(
    f: &ProbeFunction<T>,
    params: &ModelParams<T>,
    gamma: T,
) -> Result<T> {
    params.validate()?;
    let scaled = gamma * params.n();
    let m = scaled.round();
    if (scaled - m).abs() > T::lit(1e-8) || m < T::one() || m > params.n() {
        return domain(format!(
            "gamma = {gamma} is not on the lattice {{1/N, ..., 1}}"
        ));
    }
    prelimit_hamiltonian_at(f, params, m.to_usize().expect("positive"))
}

/// `sup_γ |H^N f(γ) − H(γ, f′(γ))|` over the lattice, with the maximising state.
pub fn prelimit_sup_error<T: Real>(
    f: &ProbeFunction<T>,
    params: &ModelParams<T>,
) -> Result<(T, usize)> {
    let n = params.n();
    let mut best = (T::zero(), 1);
    for m in 1..=params.n_states {
        let gamma = T::from_usize_lossy(m) / n;
        let err = (prelimit_hamiltonian_at(f, params, m)?
            - hamiltonian(gamma, f.derivative(gamma), params.lambda)?)
        .abs();
        if err > best.0 {
            best = (err, m);
        }
    }
    Ok(best)
}

/// Closed-form description of a path attached to a [`GridPath`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathDescriptor<T> {
    Constant(T),
    Parabola(ParabolaParams<T>),
}

impl<T: Real> PathDescriptor<T> {
    pub fn value(&self, t: T) -> T {
        match self {
            Self::Constant(level) => *level,
            Self::Parabola(p) => p.value_unchecked(t),
        }
    }

    pub fn derivative(&self, t: T) -> T {
        match self {
            Self::Constant(_) => T::zero(),
            Self::Parabola(p) => p.derivative_unchecked(t),
        }
    }
}

/// A path sampled on a time grid with derivative values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath<T> {
    times: Vec<T>,
    values: Vec<T>,
    derivatives: Vec<T>,
    descriptor: Option<PathDescriptor<T>>,
}

impl<T: Real> GridPath<T> {
    /// From samples; missing derivatives are filled by central differences (one-sided at the ends).
    pub fn from_samples(
        times: Vec<T>,
        values: Vec<T>,
        derivatives: Option<Vec<T>>,
    ) -> Result<Self> {
        if times.len() < 2 {
            return domain("a grid path needs at least two nodes");
        }
        if values.len() != times.len() {
            return domain("times and values differ in length");
        }
        if times[0] != T::zero() {
            return domain("grid must start at t = 0");
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("grid times must be strictly increasing");
        }
        for v in &values {
            check_unit(*v)?;
        }
        let derivatives = match derivatives {
            Some(d) if d.len() == times.len() => d,
            Some(_) => return domain("derivatives differ in length from times"),
            None => finite_differences(&times, &values),
        };
        Ok(Self {
            times,
            values,
            derivatives,
            descriptor: None,
        })
    }

    /// Samples a closed-form path on a uniform grid of `grid_size` nodes, derivatives analytic.
    pub fn from_descriptor(
        descriptor: PathDescriptor<T>,
        horizon: T,
        grid_size: usize,
    ) -> Result<Self> {
        if grid_size < 2 {
            return domain("grid_size must be at least 2");
        }
        if !(horizon > T::zero()) {
            return domain("horizon must be positive");
        }
        let last = T::from_usize_lossy(grid_size - 1);
        let times: Vec<T> = (0..grid_size)
            .map(|i| {
                if i + 1 == grid_size {
                    horizon
                } else {
                    horizon * T::from_usize_lossy(i) / last
                }
            })
            .collect();
        let mut values = Vec::with_capacity(grid_size);
        for &t in &times {
            let v = descriptor.value(t);
            let v = clamp_roundoff(v);
            check_unit(v)?;
            values.push(v);
        }
        let derivatives = times.iter().map(|&t| descriptor.derivative(t)).collect();
        Ok(Self {
            times,
            values,
            derivatives,
            descriptor: Some(descriptor),
        })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn derivatives(&self) -> &[T] {
        &self.derivatives
    }

    pub fn descriptor(&self) -> Option<&PathDescriptor<T>> {
        self.descriptor.as_ref()
    }

    pub fn horizon(&self) -> T {
        *self.times.last().expect("non-empty grid")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Cubic Hermite interpolation on segment `i` at local parameter `t`.
    fn hermite(&self, i: usize, t: T) -> (T, T) {
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.derivatives[i] * h, self.derivatives[i + 1] * h);
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        let value = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let six = T::lit(6.0);
        let four = T::lit(4.0);
        let slope = (six * s2 - six * s) * y0
            + (three * s2 - four * s + T::one()) * m0
            + (-six * s2 + six * s) * y1
            + (three * s2 - two * s) * m1;
        (value, slope / h)
    }

    /// Reads `t,gamma[,dgamma]` CSV.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let (Some(ti), Some(gi)) = (col("t"), col("gamma")) else {
            return domain("path CSV needs columns t and gamma");
        };
        let di = col("dgamma");
        let (mut times, mut values, mut derivs) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<T> {
                let raw = rec.get(i).unwrap_or("").trim();
                raw.parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| Error::Domain(format!("bad number {raw:?}: {e}")))
            };
            times.push(parse(ti)?);
            values.push(parse(gi)?);
            if let Some(di) = di {
                derivs.push(parse(di)?);
            }
        }
        Self::from_samples(times, values, di.map(|_| derivs))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "gamma", "dgamma"])?;
        for i in 0..self.len() {
            w.write_record([
                fmt_real(self.times[i]),
                fmt_real(self.values[i]),
                fmt_real(self.derivatives[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn clamp_roundoff<T: Real>(v: T) -> T {
    let slack = T::lit(1e-12);
    if v < T::zero() && v > -slack {
        T::zero()
    } else if v > T::one() && v < T::one() + slack {
        T::one()
    } else {
        v
    }
}

fn finite_differences<T: Real>(times: &[T], values: &[T]) -> Vec<T> {
    let n = times.len();
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i + 1 == n => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            (values[b] - values[a]) / (times[b] - times[a])
        })
        .collect()
}

/// Result of an action evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionReport<T> {
    #[serde(rename = "I")]
    pub value: T,
    pub quadrature_error_estimate: T,
    pub grid_size: usize,
}

/// `I(γ) = ∫₀ᵀ L(γ(t), γ̇(t)) dt`.
///
/// Closed-form paths are integrated directly; sampled paths through a
/// piecewise cubic Hermite interpolant with grid nodes as breakpoints.
/// Returns `+∞` if the path sits at 0 with non-zero slope at an interior node.
pub fn rate_functional<T: Real>(path: &GridPath<T>, lambda: T) -> Result<ActionReport<T>> {
    if !(lambda > T::zero()) {
        return Err(Error::InvalidParams(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    for v in path.values() {
        check_unit(*v)?;
    }
    let grid_size = path.len();
    let infinite = ActionReport {
        value: T::infinity(),
        quadrature_error_estimate: T::zero(),
        grid_size,
    };
    let n = grid_size;
    if (1..n - 1).any(|i| path.values[i] == T::zero() && path.derivatives[i] != T::zero()) {
        return Ok(infinite);
    }
    let tol = T::lit(ACTION_TOL).max(T::epsilon() * T::lit(1e3));
    let opts = QuadOptions::with_tol(tol);
    if let Some(desc) = path.descriptor {
        let r = integrate(
            |t| {
                lagrangian(
                    clamp_roundoff(desc.value(t)).max(T::zero()),
                    desc.derivative(t),
                    lambda,
                )
            },
            T::zero(),
            path.horizon(),
            opts,
        );
        return finish(r.value, r.error_estimate, r.converged, grid_size);
    }
    let seg_opts = QuadOptions {
        abs_tol: tol / T::from_usize_lossy(n - 1),
        ..opts
    };
    let mut total = CompensatedSum::new();
    let mut err = CompensatedSum::new();
    let mut converged = true;
    for i in 0..n - 1 {
        let r = integrate(
            |t| {
                let (g, dg) = path.hermite(i, t);
                lagrangian(g.max(T::zero()), dg, lambda)
            },
            path.times[i],
            path.times[i + 1],
            seg_opts,
        );
        if r.value.is_infinite() {
            return Ok(infinite);
        }
        total.add(r.value);
        err.add(r.error_estimate);
        converged &= r.converged;
    }
    finish(total.value(), err.value(), converged, grid_size)
}

fn finish<T: Real>(
    value: T,
    error: T,
    converged: bool,
    grid_size: usize,
) -> Result<ActionReport<T>> {
    if value.is_infinite() {
        return Ok(ActionReport {
            value: T::infinity(),
            quadrature_error_estimate: T::zero(),
            grid_size,
        });
    }
    if !converged && error > T::lit(1e-6) {
        return domain(format!(
            "action quadrature did not converge (error estimate {error})"
        ));
    }
    Ok(ActionReport {
        value: value.max(T::zero()),
        quadrature_error_estimate: error,
        grid_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hamiltonian_examples() {
        assert_eq!(hamiltonian(0.5, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(hamiltonian(0.0, 3.0, 2.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            hamiltonian(1.0, 2f64.ln(), 1.0).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert!(matches!(
            hamiltonian(0.5, 701.0, 1.0),
            Err(Error::Overflow { .. })
        ));
        assert!(hamiltonian(1.5, 0.1, 1.0).is_err());
    }

    #[test]
    fn hamiltonian_matches_exponential_form() {
        for &(g, k, l) in &[(0.3, 1.2, 1.0), (0.9, -2.5, 3.0), (1.0, 1e-4, 0.5)] {
            let direct: f64 = l * g * (f64::exp(k) - 1.0) + l * g * (f64::exp(-k) - 1.0);
            assert_abs_diff_eq!(hamiltonian(g, k, l).unwrap(), direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn kappa_star_examples() {
        assert_eq!(kappa_star(0.4, 0.0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            kappa_star(0.5, 1f64.sinh(), 1.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let k = kappa_star(0.3, 0.7, 2.0).unwrap();
        assert_eq!(kappa_star(0.3, -0.7, 2.0).unwrap(), -k);
        assert_eq!(kappa_star(0.0, 0.0, 1.0).unwrap(), 0.0);
        assert!(kappa_star(0.0, 0.1, 1.0).is_err());
        // Stationarity: dH/dκ at κ* = u.
        assert_abs_diff_eq!(
            hamiltonian_dkappa(0.3, k, 2.0).unwrap(),
            0.7,
            epsilon = 1e-10
        );
    }

    #[test]
    fn lagrangian_examples() {
        assert_eq!(lagrangian(0.7, 0.0, 1.3), 0.0);
        let u = 1f64.sinh();
        assert_abs_diff_eq!(
            lagrangian(0.5, u, 1.0),
            1f64.sinh() + 1.0 - 1f64.cosh(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(lagrangian(0.5, u, 1.0), 0.632_120_6, epsilon = 1e-7);
        assert_eq!(lagrangian(0.3, 0.8, 1.0), lagrangian(0.3, -0.8, 1.0));
        assert_eq!(lagrangian(0.0, 0.0, 1.0), 0.0);
        assert!(lagrangian(0.0, 0.1, 1.0f64).is_infinite());
    }

    #[test]
    fn lagrangian_numeric_examples() {
        assert_abs_diff_eq!(
            lagrangian_numeric(0.6, 0.0, 1.0).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let closed = 0.5f64.asinh() + 2.0 - 5f64.sqrt();
        assert_abs_diff_eq!(
            lagrangian_numeric(1.0, 1.0, 1.0).unwrap(),
            closed,
            epsilon = 1e-10
        );
        assert!(lagrangian_numeric(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn printed_integrand_well_conditioned_region() {
        for &(g, u) in &[(0.5, 0.3), (0.05, 1.7), (1.0, 2.0), (0.2, -0.05)] {
            assert_abs_diff_eq!(
                rf_integrand_printed(g, u, 1.0),
                lagrangian(g, u, 1.0),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn fenchel_inverse_pointwise() {
        for &(g, k) in &[(0.05, -3.0), (0.5, 0.0), (1.0, 2.2)] {
            let h = hamiltonian(g, k, 1.0).unwrap();
            assert_abs_diff_eq!(
                hamiltonian_from_lagrangian(g, k, 1.0).unwrap(),
                h,
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn probe_validation() {
        assert!(ProbeFunction::<f64>::new(|x| x, |_| 1.0, true).is_err());
        assert!(ProbeFunction::<f64>::new(|x| x, |_| 1.0, false).is_ok());
        assert!(ProbeFunction::<f64>::quadratic_well().zero_slope_at_one());
    }

    #[test]
    fn prelimit_examples() {
        let params = ModelParams::new(50, 1.0).unwrap();
        let constant = ProbeFunction::new(|_| 0.7, |_| 0.0, true).unwrap();
        for m in 1..=50 {
            assert_eq!(prelimit_hamiltonian_at(&constant, &params, m).unwrap(), 0.0);
        }
        let identity = ProbeFunction::new(|x: f64| x, |_| 1.0, false).unwrap();
        for n in [10usize, 100, 1000] {
            let params = ModelParams::new(n, 1.0).unwrap();
            let gamma = 0.5;
            let expected = gamma * (1f64.exp() - 1.0) + gamma * ((-1f64).exp() - 1.0);
            assert_abs_diff_eq!(
                prelimit_hamiltonian(&identity, &params, gamma).unwrap(),
                expected,
                epsilon = 1e-9
            );
        }
        assert!(prelimit_hamiltonian(&identity, &params, 0.011).is_err());
        assert!(prelimit_hamiltonian(&identity, &params, 0.0).is_err());
    }

    #[test]
    fn prelimit_boundary_prefactors() {
        let f = ProbeFunction::quadratic_well();
        let n = 20usize;
        let params = ModelParams::new(n, 2.0).unwrap();
        let nf = n as f64;
        let lower = 2.0 / nf * ((nf * (f.value(2.0 / nf) - f.value(1.0 / nf))).exp() - 1.0);
        assert_abs_diff_eq!(
            prelimit_hamiltonian_at(&f, &params, 1).unwrap(),
            lower,
            epsilon = 1e-13
        );
        let upper = 2.0 * ((nf * (f.value(1.0 - 1.0 / nf) - f.value(1.0))).exp() - 1.0);
        assert_abs_diff_eq!(
            prelimit_hamiltonian_at(&f, &params, n).unwrap(),
            upper,
            epsilon = 1e-13
        );
    }

    #[test]
    fn prelimit_error_shrinks_like_one_over_n() {
        let f = ProbeFunction::quadratic_well();
        let errs: Vec<f64> = [100usize, 1000, 10_000]
            .iter()
            .map(|&n| {
                prelimit_sup_error(&f, &ModelParams::new(n, 1.0).unwrap())
                    .unwrap()
                    .0
                    * n as f64
            })
            .collect();
        // N·error stays put.
        for w in errs.windows(2) {
            assert!((w[0] / w[1] - 1.0).abs() < 0.05, "{errs:?}");
        }
    }

    #[test]
    fn grid_path_validation() {
        assert!(GridPath::from_samples(vec![0.0], vec![0.5], None).is_err());
        assert!(GridPath::from_samples(vec![0.0, 0.0], vec![0.5, 0.5], None).is_err());
        assert!(GridPath::from_samples(vec![0.0, 1.0], vec![0.5, 1.5], None).is_err());
        assert!(GridPath::from_samples(vec![0.1, 1.0], vec![0.5, 0.5], None).is_err());
        let p = GridPath::from_samples(vec![0.0, 1.0, 2.0], vec![0.1, 0.2, 0.4], None).unwrap();
        assert_eq!(p.derivatives(), &[0.1, 0.15000000000000002, 0.2]);
    }

    #[test]
    fn constant_path_zero_action() {
        let p = GridPath::from_descriptor(PathDescriptor::Constant(0.4), 3.0, 11).unwrap();
        assert_eq!(rate_functional(&p, 1.0).unwrap().value, 0.0);
        let q = GridPath::from_samples(vec![0.0, 1.0], vec![0.0, 0.0], None).unwrap();
        assert_eq!(rate_functional(&q, 1.0).unwrap().value, 0.0);
    }

    #[test]
    fn interior_zero_with_slope_is_infinite() {
        let p = GridPath::from_samples(
            vec![0.0, 1.0, 2.0],
            vec![0.2, 0.0, 0.2],
            Some(vec![-0.2, -0.1, 0.2]),
        )
        .unwrap();
        assert!(rate_functional(&p, 1.0f64).unwrap().value.is_infinite());
    }

    #[test]
    fn csv_path_round_trip() {
        let t: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let g: Vec<f64> = t.iter().map(|x| 0.3 + 0.2 * x * x).collect();
        let d: Vec<f64> = t.iter().map(|x| 0.4 * x).collect();
        let p = GridPath::from_samples(t, g, Some(d)).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let back = GridPath::<f64>::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, p);
        let no_d = "t,gamma\n0,0.5\n1,0.6\n";
        let q = GridPath::<f64>::read_csv(no_d.as_bytes()).unwrap();
        assert_abs_diff_eq!(q.derivatives()[0], 0.1, epsilon = 1e-15);
        assert!(GridPath::<f64>::read_csv("x,y\n0,1\n".as_bytes()).is_err());
    }
}
