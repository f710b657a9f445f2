//! Closed-form analytics of the chain: rates, stationary law, harmonic sums,
//! and the embedded jump chain.

use std::io::Write;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::scalar::{compensated_sum, Real};

/// Above this index harmonic sums switch from direct summation to the Euler expansion.
pub const HARMONIC_DIRECT_LIMIT: u64 = 10_000_000;

/// Chain size `N` and rate scale `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub n_states: usize,
    pub lambda: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(n_states: usize, lambda: T) -> Result<Self> {
        let params = Self { n_states, lambda };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 {
            return Err(Error::InvalidParams("n_states must be at least 1".into()));
        }
        if !(self.lambda > T::zero() && self.lambda.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    pub fn check_state(&self, m: usize) -> Result<()> {
        if m == 0 || m > self.n_states {
            Err(Error::StateOutOfRange {
                state: m,
                n_states: self.n_states,
            })
        } else {
            Ok(())
        }
    }

    /// `N` as a scalar.
    pub fn n(&self) -> T {
        T::from_usize_lossy(self.n_states)
    }
}

/// Up and down rates out of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpRates<T> {
    pub up: T,
    pub down: T,
}

impl<T: Real> JumpRates<T> {
    pub fn total(&self) -> T {
        self.up + self.down
    }
}

/// Rates out of state `m`: `λm` in each direction, with reflecting endpoints.
pub fn jump_rates<T: Real>(params: &ModelParams<T>, m: usize) -> Result<JumpRates<T>> {
    params.validate()?;
    params.check_state(m)?;
    let rate = params.lambda * T::from_usize_lossy(m);
    let up = if m < params.n_states { rate } else { T::zero() };
    let down = if m > 1 { rate } else { T::zero() };
    Ok(JumpRates { up, down })
}

/// A distribution over `{1, …, N}`. Index with [`ProbabilityVector::get`] using 1-based states.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector<T> {
    mass: Vec<T>,
}

impl<T: Real> ProbabilityVector<T> {
    /// Validates non-negativity and unit total mass.
    pub fn new(mass: Vec<T>) -> Result<Self> {
        if mass.is_empty() {
            return domain("probability vector must be non-empty");
        }
        if let Some((i, x)) = mass.iter().enumerate().find(|(_, x)| !(**x >= T::zero())) {
            return domain(format!("negative or NaN mass {x} at state {}", i + 1));
        }
        let total = compensated_sum(mass.iter().copied());
        if (total - T::one()).abs() > T::mass_tolerance() {
            return domain(format!("masses sum to {total}, not 1"));
        }
        Ok(Self { mass })
    }

    /// Scales non-negative weights to unit mass.
    pub fn from_weights(weights: Vec<T>) -> Result<Self> {
        let total = compensated_sum(weights.iter().copied());
        if !(total > T::zero()) || !total.is_finite() {
            return domain("weights must have positive finite total");
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn point_mass(n_states: usize, m: usize) -> Result<Self> {
        if m == 0 || m > n_states {
            return Err(Error::StateOutOfRange { state: m, n_states });
        }
        let mut mass = vec![T::zero(); n_states];
        mass[m - 1] = T::one();
        Ok(Self { mass })
    }

    pub fn n_states(&self) -> usize {
        self.mass.len()
    }

    /// Mass at 1-based state `m`; zero outside the support.
    pub fn get(&self, m: usize) -> T {
        if m == 0 {
            T::zero()
        } else {
            self.mass.get(m - 1).copied().unwrap_or_else(T::zero)
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.mass
    }

    pub fn into_vec(self) -> Vec<T> {
        self.mass
    }

    pub fn total(&self) -> T {
        compensated_sum(self.mass.iter().copied())
    }

    /// Total-variation distance; distributions of different size are padded with zeros.
    pub fn total_variation(&self, other: &Self) -> T {
        let n = self.n_states().max(other.n_states());
        let diff = compensated_sum((1..=n).map(|m| (self.get(m) - other.get(m)).abs()));
        diff * T::lit(0.5)
    }

    /// Mean state `Σ m·p(m)`.
    pub fn mean(&self) -> T {
        compensated_sum(
            self.mass
                .iter()
                .enumerate()
                .map(|(i, &p)| T::from_usize_lossy(i + 1) * p),
        )
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["state", "mass"])?;
        for (i, p) in self.mass.iter().enumerate() {
            w.write_record([(i + 1).to_string(), fmt_real(*p)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rows: Vec<(usize, T)> = Vec::new();
        for rec in csv::Reader::from_reader(reader).deserialize::<StateMass<f64>>() {
            let rec = rec?;
            rows.push((rec.state, T::lit(rec.mass)));
        }
        Self::from_rows(rows)
    }

    fn from_rows(mut rows: Vec<(usize, T)>) -> Result<Self> {
        rows.sort_by_key(|r| r.0);
        for (i, (state, _)) in rows.iter().enumerate() {
            if *state != i + 1 {
                return domain(format!(
                    "states must be exactly 1..=N, found {state} at row {}",
                    i + 1
                ));
            }
        }
        Self::new(rows.into_iter().map(|r| r.1).collect())
    }
}

/// 17 significant digits, `.` as decimal separator.
pub fn fmt_real<T: Real>(x: T) -> String {
    format!("{:.16e}", x)
}

#[derive(Serialize, Deserialize)]
struct StateMass<T> {
    state: usize,
    mass: T,
}

impl<T: Real + Serialize> Serialize for ProbabilityVector<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(
            self.mass
                .iter()
                .enumerate()
                .map(|(i, &mass)| StateMass { state: i + 1, mass }),
        )
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for ProbabilityVector<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<StateMass<T>>::deserialize(deserializer)?;
        Self::from_rows(rows.into_iter().map(|r| (r.state, r.mass)).collect())
            .map_err(serde::de::Error::custom)
    }
}

/// `H_k` and its Euler residual `ε_k = H_k − ln k − γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicSum<T> {
    pub sum: T,
    pub euler_residual: T,
}

/// Harmonic partial sum, compensated direct summation up to [`HARMONIC_DIRECT_LIMIT`].
pub fn harmonic_partial<T: Real>(k: u64) -> Result<HarmonicSum<T>> {
    if k == 0 {
        return domain("harmonic sum index must be at least 1");
    }
    let kf = T::from_u64(k).expect("u64 representable");
    let sum = if k <= HARMONIC_DIRECT_LIMIT {
        // Smallest terms first.
        compensated_sum(
            (1..=k)
                .rev()
                .map(|m| T::one() / T::from_u64(m).expect("u64 representable")),
        )
    } else {
        let inv = T::one() / kf;
        let inv2 = inv * inv;
        kf.ln() + T::euler_gamma() + inv * T::lit(0.5) - inv2 / T::lit(12.0)
            + inv2 * inv2 / T::lit(120.0)
    };
    Ok(HarmonicSum {
        sum,
        euler_residual: sum - kf.ln() - T::euler_gamma(),
    })
}

/// Stationary law `π(m) = (1/m)/H_N`.
pub fn stationary_distribution<T: Real>(params: &ModelParams<T>) -> Result<ProbabilityVector<T>> {
    params.validate()?;
    let norm = harmonic_partial::<T>(params.n_states as u64)?.sum;
    let mass = (1..=params.n_states)
        .map(|m| T::one() / (T::from_usize_lossy(m) * norm))
        .collect();
    ProbabilityVector::new(mass)
}

/// `π({1, …, m_max}) = H_{m_max} / H_N`.
pub fn prefix_mass<T: Real>(params: &ModelParams<T>, m_max: usize) -> Result<T> {
    params.validate()?;
    params.check_state(m_max)?;
    if m_max == params.n_states {
        return Ok(T::one());
    }
    let num = harmonic_partial::<T>(m_max as u64)?.sum;
    let den = harmonic_partial::<T>(params.n_states as u64)?.sum;
    Ok(num / den)
}

/// Sparse row of the embedded jump chain.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow<T> {
    pub entries: Vec<(usize, T)>,
}

impl<T: Real> TransitionRow<T> {
    pub fn prob_to(&self, target: usize) -> T {
        self.entries
            .iter()
            .find(|(s, _)| *s == target)
            .map(|(_, p)| *p)
            .unwrap_or_else(T::zero)
    }
}

fn require_embedded<T: Real>(params: &ModelParams<T>) -> Result<()> {
    params.validate()?;
    if params.n_states < 2 {
        return domain("the embedded chain needs N >= 2");
    }
    Ok(())
}

/// Embedded chain: symmetric ±1 steps, reflected at 1 and N.
pub fn embedded_transition_row<T: Real>(
    params: &ModelParams<T>,
    m: usize,
) -> Result<TransitionRow<T>> {
    require_embedded(params)?;
    params.check_state(m)?;
    let entries = if m == 1 {
        vec![(2, T::one())]
    } else if m == params.n_states {
        vec![(m - 1, T::one())]
    } else {
        let half = T::lit(0.5);
        vec![(m - 1, half), (m + 1, half)]
    };
    Ok(TransitionRow { entries })
}

/// One step `p ↦ pP` of the embedded chain.
pub fn embedded_step<T: Real>(
    params: &ModelParams<T>,
    p: &ProbabilityVector<T>,
) -> Result<ProbabilityVector<T>> {
    require_embedded(params)?;
    if p.n_states() != params.n_states {
        return domain("distribution size does not match N");
    }
    let mut out = vec![T::zero(); params.n_states];
    for m in 1..=params.n_states {
        for (target, prob) in embedded_transition_row(params, m)?.entries {
            out[target - 1] = out[target - 1] + p.get(m) * prob;
        }
    }
    Ok(ProbabilityVector { mass: out })
}

/// Stationary law of the embedded chain: `1/(2(N−1))` at the ends, `1/(N−1)` inside.
pub fn embedded_stationary<T: Real>(params: &ModelParams<T>) -> Result<ProbabilityVector<T>> {
    require_embedded(params)?;
    let n = params.n_states;
    let inner = T::one() / T::from_usize_lossy(n - 1);
    let edge = inner * T::lit(0.5);
    let mass = (1..=n)
        .map(|m| if m == 1 || m == n { edge } else { inner })
        .collect();
    ProbabilityVector::new(mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_rational::Ratio;

    fn p(n: usize, lambda: f64) -> ModelParams<f64> {
        ModelParams::new(n, lambda).unwrap()
    }

    #[test]
    fn rates_examples() {
        assert_eq!(
            jump_rates(&p(10, 1.0), 5).unwrap(),
            JumpRates { up: 5.0, down: 5.0 }
        );
        assert_eq!(
            jump_rates(&p(10, 1.0), 1).unwrap(),
            JumpRates { up: 1.0, down: 0.0 }
        );
        assert_eq!(
            jump_rates(&p(10, 2.0), 10).unwrap(),
            JumpRates {
                up: 0.0,
                down: 20.0
            }
        );
        assert_eq!(
            jump_rates(&p(1, 3.0), 1).unwrap(),
            JumpRates { up: 0.0, down: 0.0 }
        );
        assert!(matches!(
            jump_rates(&p(10, 1.0), 0),
            Err(Error::StateOutOfRange { .. })
        ));
        assert!(matches!(
            jump_rates(&p(10, 1.0), 11),
            Err(Error::StateOutOfRange { .. })
        ));
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0, 1.0).is_err());
        assert!(ModelParams::new(3, 0.0).is_err());
        assert!(ModelParams::new(3, f64::NAN).is_err());
        assert!(ModelParams::new(1, 0.5).is_ok());
    }

    /// Exact rational oracle for the stationary law.
    fn exact_stationary(n: i64) -> Vec<Ratio<i64>> {
        let h: Ratio<i64> = (1..=n).map(|m| Ratio::new(1, m)).sum();
        (1..=n).map(|m| Ratio::new(1, m) / h).collect()
    }

    #[test]
    fn stationary_examples() {
        assert_eq!(
            stationary_distribution(&p(1, 1.0)).unwrap().as_slice(),
            &[1.0]
        );
        let two = stationary_distribution(&p(2, 1.0)).unwrap();
        assert_abs_diff_eq!(two.get(1), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(two.get(2), 1.0 / 3.0, epsilon = 1e-15);
        let four = stationary_distribution(&p(4, 1.0)).unwrap();
        for (m, expected) in exact_stationary(4).iter().enumerate() {
            assert_eq!(
                *expected,
                [
                    Ratio::new(12, 25),
                    Ratio::new(6, 25),
                    Ratio::new(4, 25),
                    Ratio::new(3, 25)
                ][m]
            );
            let e = *expected.numer() as f64 / *expected.denom() as f64;
            assert_abs_diff_eq!(four.get(m + 1), e, epsilon = 1e-15);
        }
    }

    #[test]
    fn stationary_detailed_balance() {
        for n in [2, 7, 100, 5000] {
            let params = p(n, 1.7);
            let pi = stationary_distribution(&params).unwrap();
            for m in 1..n {
                let r = jump_rates(&params, m).unwrap();
                let r1 = jump_rates(&params, m + 1).unwrap();
                assert_abs_diff_eq!(pi.get(m) * r.up, pi.get(m + 1) * r1.down, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn prefix_mass_examples() {
        assert_eq!(prefix_mass(&p(4, 1.0), 4).unwrap(), 1.0);
        assert_abs_diff_eq!(prefix_mass(&p(4, 1.0), 2).unwrap(), 0.72, epsilon = 1e-15);
        assert_abs_diff_eq!(
            prefix_mass(&p(1_000_000, 1.0), 100_000).unwrap(),
            0.8400,
            epsilon = 1e-3
        );
        assert!(prefix_mass(&p(4, 1.0), 5).is_err());
        assert!(prefix_mass(&p(4, 1.0), 0).is_err());
    }

    #[test]
    fn harmonic_examples() {
        assert_eq!(harmonic_partial::<f64>(1).unwrap().sum, 1.0);
        assert_abs_diff_eq!(
            harmonic_partial::<f64>(4).unwrap().sum,
            25.0 / 12.0,
            epsilon = 1e-15
        );
        let k = 1_000_000u64;
        let h = harmonic_partial::<f64>(k).unwrap();
        assert!((k as f64 * h.euler_residual - 0.5).abs() < 1e-3);
        assert!(harmonic_partial::<f64>(0).is_err());
    }

    #[test]
    fn harmonic_increments() {
        let mut prev = harmonic_partial::<f64>(1).unwrap().sum;
        for k in (2..=1_000_000u64).step_by(49_999) {
            let before = harmonic_partial::<f64>(k - 1).unwrap().sum;
            let cur = harmonic_partial::<f64>(k).unwrap().sum;
            assert!(
                (cur - before - 1.0 / k as f64).abs() <= 4.0 * f64::EPSILON * cur,
                "k = {k}"
            );
            assert!(cur > prev);
            prev = cur;
        }
    }

    #[test]
    fn harmonic_asymptotic_continuity() {
        let direct = harmonic_partial::<f64>(HARMONIC_DIRECT_LIMIT).unwrap().sum;
        let asym = harmonic_partial::<f64>(HARMONIC_DIRECT_LIMIT + 1)
            .unwrap()
            .sum;
        let step = 1.0 / (HARMONIC_DIRECT_LIMIT + 1) as f64;
        assert!((asym - direct - step).abs() < 1e-13);
    }

    #[test]
    fn embedded_rows() {
        let params = p(10, 1.0);
        let row = embedded_transition_row(&params, 5).unwrap();
        assert_eq!(row.prob_to(4), 0.5);
        assert_eq!(row.prob_to(6), 0.5);
        assert_eq!(
            embedded_transition_row(&params, 1).unwrap().entries,
            vec![(2, 1.0)]
        );
        assert_eq!(
            embedded_transition_row(&params, 10).unwrap().entries,
            vec![(9, 1.0)]
        );
        assert!(matches!(
            embedded_transition_row(&p(1, 1.0), 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn embedded_stationary_examples() {
        let five = embedded_stationary(&p(5, 1.0)).unwrap();
        assert_eq!(five.as_slice(), &[0.125, 0.25, 0.25, 0.25, 0.125]);
        assert_eq!(
            embedded_stationary(&p(2, 1.0)).unwrap().as_slice(),
            &[0.5, 0.5]
        );
        assert!(embedded_stationary(&p(1, 1.0)).is_err());
        for n in [2, 3, 17, 400] {
            let params = p(n, 1.0);
            let pi = embedded_stationary(&params).unwrap();
            assert_abs_diff_eq!(pi.total(), 1.0, epsilon = 1e-12);
            let next = embedded_step(&params, &pi).unwrap();
            assert!(pi.total_variation(&next) < 1e-12);
        }
    }

    #[test]
    fn vector_validation() {
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![-0.1, 1.1]).is_err());
        assert!(ProbabilityVector::<f64>::new(vec![]).is_err());
        assert!(ProbabilityVector::new(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn csv_and_json_formats() {
        let four = stationary_distribution(&p(4, 1.0)).unwrap();
        let csv = four.to_csv_string().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("state,mass"));
        assert_eq!(lines.next(), Some("1,4.7999999999999998e-1"));
        let back = ProbabilityVector::<f64>::read_csv(csv.as_bytes()).unwrap();
        assert_eq!(back, four);

        let json = serde_json::to_value(&four).unwrap();
        assert_eq!(json[0]["state"], 1);
        assert_eq!(json[3]["mass"].as_f64().unwrap(), four.get(4));
        let back: ProbabilityVector<f64> = serde_json::from_value(json).unwrap();
        assert_eq!(back, four);
    }

    #[test]
    fn single_precision_instantiation() {
        let pi = stationary_distribution(&ModelParams::<f32>::new(4, 1.0).unwrap()).unwrap();
        assert!((pi.get(1) - 0.48).abs() < 1e-6);
    }
}
