//! Closed-form solutions of the Hamiltonian boundary-value problem: the
//! optimal paths are parabolas `γ(t) = c₂(λt − c₁)(λt − c₁ + 1)` with dual
//! variable `z(t) = e^{κ(t)} = 1/(λt − c₁) + 1`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ldp::{rate_functional, ActionReport, GridPath, PathDescriptor};
use crate::markov::fmt_real;
use crate::scalar::Real;

/// Endpoints closer than this are treated as the constant path.
pub const EQUAL_ENDPOINT_TOL: f64 = 1e-14;
/// Nodes used by the post-hoc admissibility check.
pub const ADMISSIBILITY_GRID: usize = 1000;
/// Grid used when turning a solved path into a [`GridPath`].
pub const ACTION_GRID: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathCase {
    /// `γ₀ = γ_T`; the level is `gamma0`.
    Constant,
    FromZero,
    ToZero,
    GeneralIncreasing,
    GeneralDecreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolaParams<T> {
    pub c1: T,
    pub c2: T,
    pub case: PathCase,
    pub lambda: T,
    #[serde(rename = "T")]
    pub horizon: T,
    pub gamma0: T,
    #[serde(rename = "gammaT")]
    pub gamma_t: T,
}

impl<T: Real> ParabolaParams<T> {
    pub fn is_constant(&self) -> bool {
        self.case == PathCase::Constant
    }

    fn shift(&self, t: T) -> T {
        self.lambda * t - self.c1
    }

    pub fn value_unchecked(&self, t: T) -> T {
        if self.is_constant() {
            return self.gamma0;
        }
        let s = self.shift(t);
        self.c2 * s * (s + T::one())
    }

    pub fn derivative_unchecked(&self, t: T) -> T {
        if self.is_constant() {
            return T::zero();
        }
        self.c2 * self.lambda * (T::lit(2.0) * self.shift(t) + T::one())
    }

    /// Dual `z(t)`; may be non-positive or infinite outside the admissible range.
    pub fn dual_unchecked(&self, t: T) -> T {
        if self.is_constant() {
            return T::one();
        }
        T::one() / self.shift(t) + T::one()
    }

    /// `ż = −λ(z − 1)²`.
    pub fn dual_derivative_unchecked(&self, t: T) -> T {
        if self.is_constant() {
            return T::zero();
        }
        let s = self.shift(t);
        -self.lambda / (s * s)
    }

    /// `∫ₐᵇ z dt` in closed form.
    pub fn integral_dual(&self, a: T, b: T) -> T {
        if self.is_constant() {
            return b - a;
        }
        (b - a) + (self.shift(b) / self.shift(a)).abs().ln() / self.lambda
    }

    /// `∫ₐᵇ 1/z dt` in closed form.
    pub fn integral_inverse_dual(&self, a: T, b: T) -> T {
        if self.is_constant() {
            return b - a;
        }
        (b - a)
            - ((self.shift(b) + T::one()) / (self.shift(a) + T::one()))
                .abs()
                .ln()
                / self.lambda
    }

    /// Time of the parabola's vertex, `(c₁ − 1/2)/λ`; `None` for constant paths.
    pub fn vertex_time(&self) -> Option<T> {
        (!self.is_constant()).then(|| (self.c1 - T::lit(0.5)) / self.lambda)
    }

    pub fn descriptor(&self) -> PathDescriptor<T> {
        if self.is_constant() {
            PathDescriptor::Constant(self.gamma0)
        } else {
            PathDescriptor::Parabola(*self)
        }
    }

    fn check_time(&self, t: T) -> Result<()> {
        if t >= T::zero() && t <= self.horizon {
            Ok(())
        } else {
            domain(format!("t = {t} outside [0, {}]", self.horizon))
        }
    }
}

fn check_inputs<T: Real>(gamma0: T, gamma_t: T, horizon: T, lambda: T) -> Result<()> {
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return domain(format!("horizon must be positive, got {horizon}"));
    }
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidParams(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    for (name, g) in [("gamma0", gamma0), ("gammaT", gamma_t)] {
        if !(g >= T::zero() && g <= T::one()) {
            return domain(format!("{name} = {g} outside [0, 1]"));
        }
    }
    Ok(())
}

/// Both roots of `x² + bx + c = 0`, computed without cancellation, in ascending order.
fn quadratic_roots<T: Real>(b: T, c: T) -> Result<(T, T)> {
    let disc = b * b - T::lit(4.0) * c;
    if disc < T::zero() {
        return domain(format!("quadratic has no real roots (discriminant {disc})"));
    }
    let sign = if b >= T::zero() { T::one() } else { -T::one() };
    let q = -(b + sign * disc.sqrt()) * T::lit(0.5);
    let (r1, r2) = if q == T::zero() {
        (T::zero(), T::zero())
    } else {
        (q, c / q)
    };
    Ok((r1.min(r2), r1.max(r2)))
}

/// Solves for the optimal parabola joining `γ(0) = gamma0` to `γ(T) = gamma_t`.
pub fn solve_boundary<T: Real>(
    gamma0: T,
    gamma_t: T,
    horizon: T,
    lambda: T,
) -> Result<ParabolaParams<T>> {
    check_inputs(gamma0, gamma_t, horizon, lambda)?;
    let a = lambda * horizon;
    let make = |c1: T, c2: T, case| ParabolaParams {
        c1,
        c2,
        case,
        lambda,
        horizon,
        gamma0,
        gamma_t,
    };
    let params = if (gamma0 - gamma_t).abs() <= T::lit(EQUAL_ENDPOINT_TOL) {
        return Ok(make(T::zero(), T::zero(), PathCase::Constant));
    } else if gamma0 == T::zero() {
        make(
            T::zero(),
            gamma_t / (a * (a + T::one())),
            PathCase::FromZero,
        )
    } else if gamma_t == T::zero() {
        make(
            a + T::one(),
            gamma0 / (a * (a + T::one())),
            PathCase::ToZero,
        )
    } else {
        let delta = gamma_t - gamma0;
        let b = T::lit(2.0) * a * gamma0 / delta - T::one();
        let c = -a * (a + T::one()) * gamma0 / delta;
        let (minus_root, plus_root) = quadratic_roots(b, c)?;
        let (c1, case) = if delta > T::zero() {
            (minus_root, PathCase::GeneralIncreasing)
        } else {
            (plus_root, PathCase::GeneralDecreasing)
        };
        make(c1, gamma0 / (c1 * (c1 - T::one())), case)
    };
    verify_admissible(&params)?;
    Ok(params)
}

/// Checks `c₂ > 0` and `0 ≤ γ(t) ≤ 1` on a dense grid, naming the first violating time.
pub fn verify_admissible<T: Real>(params: &ParabolaParams<T>) -> Result<()> {
    if params.is_constant() {
        return Ok(());
    }
    if !(params.c2 > T::zero()) || !params.c2.is_finite() {
        return domain(format!("c2 = {} is not a positive constant", params.c2));
    }
    let slack = T::lit(1e-12);
    let steps = T::from_usize_lossy(ADMISSIBILITY_GRID);
    for i in 0..=ADMISSIBILITY_GRID {
        let t = params.horizon * T::from_usize_lossy(i) / steps;
        let v = params.value_unchecked(t);
        if !(v >= -slack && v <= T::one() + slack) {
            return Err(Error::Inadmissible {
                t: t.to_f64().unwrap_or(f64::NAN),
                value: v.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(())
}

/// `γ(t)` on `[0, T]`.
pub fn path_value<T: Real>(params: &ParabolaParams<T>, t: T) -> Result<T> {
    params.check_time(t)?;
    Ok(params.value_unchecked(t))
}

/// `z(t) = e^{κ(t)}`; errors where `λt − c₁ ∈ [−1, 0]`.
pub fn dual_value<T: Real>(params: &ParabolaParams<T>, t: T) -> Result<T> {
    params.check_time(t)?;
    if params.is_constant() {
        return Ok(T::one());
    }
    let s = params.shift(t);
    if s >= -T::one() && s <= T::zero() {
        return domain(format!(
            "dual is singular or non-positive at t = {t} (lambda*t - c1 = {s})"
        ));
    }
    Ok(params.dual_unchecked(t))
}

/// `κ(t) = ln z(t)`.
pub fn kappa_value<T: Real>(params: &ParabolaParams<T>, t: T) -> Result<T> {
    dual_value(params, t).map(|z| z.ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals<T> {
    /// `max |γ̇ − λγ(z − 1/z)|`.
    pub gamma: T,
    /// `max |κ̇ + λ(z + 1/z − 2)|`.
    pub kappa: T,
}

/// Residuals of the Hamiltonian system on `grid_size` interior points.
pub fn hamiltonian_residual<T: Real>(
    params: &ParabolaParams<T>,
    grid_size: usize,
) -> Result<Residuals<T>> {
    if params.is_constant() {
        return Ok(Residuals {
            gamma: T::zero(),
            kappa: T::zero(),
        });
    }
    if grid_size == 0 {
        return domain("grid_size must be positive");
    }
    let lambda = params.lambda;
    let denom = T::from_usize_lossy(grid_size + 1);
    let mut out = Residuals {
        gamma: T::zero(),
        kappa: T::zero(),
    };
    for i in 1..=grid_size {
        let t = params.horizon * T::from_usize_lossy(i) / denom;
        let z = dual_value(params, t)?;
        let gamma = params.value_unchecked(t);
        let r_gamma = (params.derivative_unchecked(t) - lambda * gamma * (z - z.recip())).abs();
        let kappa_dot = params.dual_derivative_unchecked(t) / z;
        let r_kappa = (kappa_dot + lambda * (z + z.recip() - T::lit(2.0))).abs();
        out.gamma = out.gamma.max(r_gamma);
        out.kappa = out.kappa.max(r_kappa);
    }
    Ok(out)
}

/// Action of the optimal path between the boundary values.
pub fn optimal_action<T: Real>(
    gamma0: T,
    gamma_t: T,
    horizon: T,
    lambda: T,
) -> Result<ActionReport<T>> {
    let params = solve_boundary(gamma0, gamma_t, horizon, lambda)?;
    action_of(&params)
}

pub fn action_of<T: Real>(params: &ParabolaParams<T>) -> Result<ActionReport<T>> {
    let path = GridPath::from_descriptor(params.descriptor(), params.horizon, ACTION_GRID)?;
    rate_functional(&path, params.lambda)
}

/// One row of a sampled optimal path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample<T> {
    pub t: T,
    pub gamma: T,
    pub z: T,
    pub kappa: T,
}

/// Samples `(t, γ, z, κ)` on `grid_size` uniform nodes. At endpoints where the
/// path touches 0 the dual is reported as `+∞` or `0` (κ = ±∞).
pub fn sample_path<T: Real>(
    params: &ParabolaParams<T>,
    grid_size: usize,
) -> Result<Vec<PathSample<T>>> {
    if grid_size < 2 {
        return domain("grid_size must be at least 2");
    }
    let last = T::from_usize_lossy(grid_size - 1);
    Ok((0..grid_size)
        .map(|i| {
            let t = if i + 1 == grid_size {
                params.horizon
            } else {
                params.horizon * T::from_usize_lossy(i) / last
            };
            let z = params.dual_unchecked(t);
            let z = if z < T::zero() { T::zero() } else { z };
            PathSample {
                t,
                gamma: params.value_unchecked(t),
                z,
                kappa: z.ln(),
            }
        })
        .collect())
}

/// Writes samples as CSV with columns `t,gamma,z,kappa`.
pub fn write_samples_csv<T: Real, W: Write>(samples: &[PathSample<T>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "gamma", "z", "kappa"])?;
    for s in samples {
        w.write_record([
            fmt_real(s.t),
            fmt_real(s.gamma),
            fmt_real(s.z),
            fmt_real(s.kappa),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_case() {
        let p = solve_boundary(0.3, 0.3, 2.0, 1.0).unwrap();
        assert_eq!(p.case, PathCase::Constant);
        assert_eq!(path_value(&p, 1.7).unwrap(), 0.3);
        assert_eq!(dual_value(&p, 0.4).unwrap(), 1.0);
        assert_eq!(
            hamiltonian_residual(&p, 10).unwrap(),
            Residuals {
                gamma: 0.0,
                kappa: 0.0
            }
        );
        assert_eq!(optimal_action(0.3, 0.3, 2.0, 1.0).unwrap().value, 0.0);
        let near = solve_boundary(0.3, 0.3 + 1e-15, 2.0, 1.0).unwrap();
        assert_eq!(near.case, PathCase::Constant);
    }

    #[test]
    fn from_zero_case() {
        let p = solve_boundary(0.0, 0.5, 2.0, 1.0).unwrap();
        assert_eq!(p.case, PathCase::FromZero);
        assert_eq!(p.c1, 0.0);
        assert_abs_diff_eq!(p.c2, 1.0 / 12.0, epsilon = 1e-16);
        assert_eq!(path_value(&p, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(path_value(&p, 1.0).unwrap(), 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(path_value(&p, 2.0).unwrap(), 0.5, epsilon = 1e-15);
        assert!(dual_value(&p, 0.0).is_err());
        let r = hamiltonian_residual(&p, 1000).unwrap();
        assert!(r.gamma <= 1e-10 && r.kappa <= 1e-10, "{r:?}");
    }

    #[test]
    fn to_zero_case() {
        let p = solve_boundary(0.5, 0.0, 2.0, 1.0).unwrap();
        assert_eq!(p.case, PathCase::ToZero);
        assert_eq!(p.c1, 3.0);
        for t in [0.0, 0.5, 1.0, 1.5, 2.0] {
            assert_abs_diff_eq!(
                path_value(&p, t).unwrap(),
                (2.0 - t) * (3.0 - t) / 12.0,
                epsilon = 1e-15
            );
        }
        assert_abs_diff_eq!(path_value(&p, 1.0).unwrap(), 1.0 / 6.0, epsilon = 1e-15);
        assert!(dual_value(&p, 2.0).is_err());
    }

    #[test]
    fn worked_quadratic_instance() {
        let p = solve_boundary(0.5, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(p.case, PathCase::GeneralIncreasing);
        let expected = (-3.0 - 33f64.sqrt()) / 2.0;
        assert_abs_diff_eq!(p.c1, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(p.c1, -4.37228, epsilon = 1e-5);
        assert_abs_diff_eq!(p.c2, 0.5 / (expected * (expected - 1.0)), epsilon = 1e-15);
        assert_abs_diff_eq!(p.c2, 0.021_286_4, epsilon = 1e-7);
        assert_abs_diff_eq!(path_value(&p, 2.0).unwrap(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(
            dual_value(&p, 0.0).unwrap(),
            1.0 / 4.37228 + 1.0,
            epsilon = 1e-5
        );
        let r = hamiltonian_residual(&p, 1000).unwrap();
        assert!(r.gamma <= 1e-10 && r.kappa <= 1e-10, "{r:?}");
    }

    #[test]
    fn quadratic_roots_stable() {
        let (lo, hi) = quadratic_roots(3.0, -6.0).unwrap();
        assert_abs_diff_eq!(lo, (-3.0 - 33f64.sqrt()) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(hi, (-3.0 + 33f64.sqrt()) / 2.0, epsilon = 1e-14);
        // Large |b|: naive formula loses the small root entirely.
        let (lo, hi) = quadratic_roots(1e9, 1.0).unwrap();
        assert_abs_diff_eq!(hi, -1e-9, epsilon = 1e-22);
        assert_abs_diff_eq!(lo, -1e9, epsilon = 1e-6);
        assert!(quadratic_roots(0.0, 1.0).is_err());
    }

    #[test]
    fn vertex_location() {
        let inc = solve_boundary(0.2, 0.7, 2.0, 1.0).unwrap();
        assert!(inc.vertex_time().unwrap() < 0.0);
        let dec = solve_boundary(0.7, 0.2, 2.0, 1.0).unwrap();
        assert!(dec.vertex_time().unwrap() > 2.0);
    }

    #[test]
    fn dual_sign_follows_direction() {
        let inc = solve_boundary(0.2, 0.7, 2.0, 1.5).unwrap();
        let dec = solve_boundary(0.7, 0.2, 2.0, 1.5).unwrap();
        for i in 0..=100 {
            let t = 2.0 * i as f64 / 100.0;
            assert!(dual_value(&inc, t).unwrap() > 1.0);
            let z = dual_value(&dec, t).unwrap();
            assert!(z > 0.0 && z < 1.0);
        }
    }

    #[test]
    fn closed_form_dual_integrals() {
        let p = solve_boundary(0.5, 0.8, 1.0, 1.0).unwrap();
        let n = 200_000;
        let (a, b) = (0.1, 0.9);
        let h = (b - a) / n as f64;
        let (mut iz, mut iinv) = (0.0, 0.0);
        for i in 0..n {
            let t = a + (i as f64 + 0.5) * h;
            iz += p.dual_unchecked(t) * h;
            iinv += h / p.dual_unchecked(t);
        }
        assert_abs_diff_eq!(p.integral_dual(a, b), iz, epsilon = 1e-10);
        assert_abs_diff_eq!(p.integral_inverse_dual(a, b), iinv, epsilon = 1e-10);
    }

    #[test]
    fn input_errors() {
        assert!(solve_boundary(0.2, 0.5, 0.0, 1.0).is_err());
        assert!(solve_boundary(0.2, 0.5, -1.0, 1.0).is_err());
        assert!(solve_boundary(0.2, 1.5, 1.0, 1.0).is_err());
        assert!(solve_boundary(0.2, 0.5, 1.0, 0.0).is_err());
        let p = solve_boundary(0.2, 0.5, 1.0, 1.0).unwrap();
        assert!(path_value(&p, 1.1).is_err());
        assert!(path_value(&p, -0.1).is_err());
    }

    #[test]
    fn inadmissible_reported_with_time() {
        let mut p = solve_boundary(0.2, 0.5, 1.0, 1.0).unwrap();
        p.c2 *= 10.0;
        match verify_admissible(&p) {
            Err(Error::Inadmissible { t, value }) => {
                assert!((0.0..=1.0).contains(&t) && value > 1.0)
            }
            other => panic!("expected inadmissible, got {other:?}"),
        }
    }

    #[test]
    fn json_layout() {
        let p = solve_boundary(0.5, 1.0, 2.0, 1.0).unwrap();
        let v = serde_json::to_value(p).unwrap();
        for key in ["c1", "c2", "case", "lambda", "T", "gamma0", "gammaT"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["case"], "general_increasing");
        let back: ParabolaParams<f64> = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn samples_csv_header() {
        let p = solve_boundary(0.0, 0.3, 2.0, 1.0f64).unwrap();
        let s = sample_path(&p, 5).unwrap();
        assert!(s[0].z.is_infinite());
        let mut buf = Vec::new();
        write_samples_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,gamma,z,kappa\n"));
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn single_precision_solve() {
        let p: ParabolaParams<f32> = solve_boundary(0.5, 1.0, 2.0, 1.0).unwrap();
        assert!((p.c1 - (-4.372_281)).abs() < 1e-5);
        assert!((path_value(&p, 2.0).unwrap() - 1.0).abs() < 1e-5);
    }
}
