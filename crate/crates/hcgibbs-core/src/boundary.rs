//! Boundary-law vectors, their consistency residuals and normalisability.
//!
//! A translation-invariant boundary law normalized at 0 has components
//! `z_i = λ_i/(1+A)^k` for `i ≠ 0` and `z_0 = 1`; the sum `Σ_{i≠0} z_i`
//! equals `Λ/(1+A)^k`, which closes the consistency equation exactly when
//! `A` is the root of `A(1+A)^k = Λ`. Two-periodic laws come in pairs
//! `(z, z̃)` built from the swapped sums `(B, A)`.
//!
//! Laws are lazy: components are evaluated on demand from the activity spec.
//! Finite perturbations and synthetic power-law tails can be injected for
//! diagnostics; they participate in sums, residuals and the normalisability
//! test.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activities::{ActivitySpec, SeriesSum, Weight};
use crate::error::{domain, Error, Result};
use crate::phase;

/// Probe radius for the consistency residual.
const PROBE_RADIUS: i64 = 64;
/// Number of random far-tail probe indices.
const PROBE_TAIL_COUNT: usize = 16;
/// Far-tail probe indices are drawn from `[PROBE_RADIUS+1, PROBE_TAIL_MAX]`.
const PROBE_TAIL_MAX: i64 = 1_000_000;

/// Diagnostic replacement of boundary-law components.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum LawOverride {
    /// The law follows its defining formula everywhere.
    #[default]
    None,
    /// Finitely many components are replaced.
    Values(BTreeMap<i64, f64>),
    /// The whole vector is replaced by `z_j = coeff·|j|^{−exponent}`.
    PowerLaw { coeff: f64, exponent: f64 },
}

/// A one-parity boundary-law vector `i ↦ z_i`, normalized to `z_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLaw {
    spec: ActivitySpec,
    k: u32,
    built_from: f64,
    denom: f64,
    overrides: LawOverride,
}

impl BoundaryLaw {
    /// The law with components `z_i = λ_i/(1+a)^k`.
    pub fn from_sum(spec: ActivitySpec, k: u32, a: f64) -> Result<Self> {
        if k < 2 {
            return Err(domain(format!("tree order k must be ≥ 2, got {k}")));
        }
        if !(a.is_finite() && a >= 0.0) {
            return Err(domain(format!("law parameter A must be finite and ≥ 0, got {a}")));
        }
        spec.validate()?;
        let denom = (1.0 + a).powi(k as i32);
        Ok(BoundaryLaw { spec, k, built_from: a, denom, overrides: LawOverride::None })
    }

    /// Replace finitely many components (diagnostic use).
    pub fn with_value_overrides(mut self, values: BTreeMap<i64, f64>) -> Result<Self> {
        for (&j, &v) in &values {
            if j == 0 {
                return Err(domain("component 0 is pinned to 1 by normalization"));
            }
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain(format!("override at {j} must be finite and ≥ 0, got {v}")));
            }
        }
        self.overrides = LawOverride::Values(values);
        Ok(self)
    }

    /// Replace the whole vector by a synthetic power-law tail (diagnostic use).
    pub fn with_power_law(mut self, coeff: f64, exponent: f64) -> Result<Self> {
        if !(coeff.is_finite() && coeff > 0.0) || !(exponent.is_finite() && exponent > 0.0) {
            return Err(domain("power-law override needs positive finite coeff and exponent"));
        }
        self.overrides = LawOverride::PowerLaw { coeff, exponent };
        Ok(self)
    }

    pub fn spec(&self) -> &ActivitySpec {
        &self.spec
    }

    pub fn order(&self) -> u32 {
        self.k
    }

    /// The sum parameter the law was built from.
    pub fn built_from(&self) -> f64 {
        self.built_from
    }

    /// Component accessor; `z(0) = 1`.
    pub fn z(&self, i: i64) -> f64 {
        if i == 0 {
            return 1.0;
        }
        match &self.overrides {
            LawOverride::None => self.base_z(i),
            LawOverride::Values(map) => map.get(&i).copied().unwrap_or_else(|| self.base_z(i)),
            LawOverride::PowerLaw { coeff, exponent } => {
                coeff * (i.unsigned_abs() as f64).powf(-exponent)
            }
        }
    }

    fn base_z(&self, i: i64) -> f64 {
        self.spec.lambda_at(i).map(|l| l / self.denom).unwrap_or(0.0)
    }

    /// `z(i)` when `λ_i` has already been evaluated (bulk path; avoids
    /// re-deriving the activity term).
    pub(crate) fn z_given_lambda(&self, i: i64, lambda_i: f64) -> f64 {
        match &self.overrides {
            LawOverride::None => lambda_i / self.denom,
            LawOverride::Values(map) => {
                map.get(&i).copied().unwrap_or(lambda_i / self.denom)
            }
            LawOverride::PowerLaw { coeff, exponent } => {
                coeff * (i.unsigned_abs() as f64).powf(-exponent)
            }
        }
    }

    /// `Σ_{i≠0} z_i` with certified tail.
    ///
    /// For an unperturbed law this is `Λ/(1+A)^k` via the activity sum's
    /// closed form.
    pub fn sum(&self, tol: f64) -> Result<SeriesSum> {
        if tol <= 0.0 {
            return Err(domain("tolerance must be positive"));
        }
        match &self.overrides {
            LawOverride::None => {
                let total = self.spec.sum(tol * self.denom)?;
                Ok(SeriesSum {
                    value: total.value / self.denom,
                    tail_bound: total.tail_bound / self.denom,
                    terms_used: total.terms_used,
                })
            }
            LawOverride::Values(map) => {
                let total = self.spec.sum(tol * self.denom)?;
                let mut value = total.value / self.denom;
                for (&j, &v) in map {
                    value += v - self.base_z(j);
                }
                Ok(SeriesSum {
                    value,
                    tail_bound: total.tail_bound / self.denom,
                    terms_used: total.terms_used + map.len(),
                })
            }
            LawOverride::PowerLaw { coeff, exponent } => {
                power_series_sum(*coeff, *exponent, tol)
            }
        }
    }

    /// Upper bound on `Σ_{|j|>n} z_j`.
    fn sum_tail_bound(&self, n: u64) -> f64 {
        match &self.overrides {
            LawOverride::None => self.spec.tail_remainder(n) / self.denom,
            LawOverride::Values(map) => {
                let mut extra = 0.0;
                for (&j, &v) in map {
                    if j.unsigned_abs() > n {
                        extra += v;
                    }
                }
                self.spec.tail_remainder(n) / self.denom + extra
            }
            LawOverride::PowerLaw { coeff, exponent } => {
                if *exponent <= 1.0 {
                    f64::INFINITY
                } else {
                    2.0 * coeff * (n as f64).powf(1.0 - exponent) / (exponent - 1.0)
                }
            }
        }
    }

    /// Sup-residual of the consistency equation over the probe set.
    ///
    /// Probes `0 < |i| ≤ 64` plus 16 deterministic pseudo-random far
    /// indices; each probe compares `z_i` against `λ_i/(1+Σ_j z_j)^k`.
    pub fn consistency_residual(&self, tol: f64) -> Result<f64> {
        let total = self.sum(tol)?;
        self.residual_against(total.value)
    }

    fn residual_against(&self, partner_sum: f64) -> Result<f64> {
        if !partner_sum.is_finite() {
            return Err(Error::Divergence(
                "law sum is not finite; the consistency equation has no positive solution".into(),
            ));
        }
        let denom = (1.0 + partner_sum).powi(self.k as i32);
        let mut worst: f64 = 0.0;
        for i in probe_indices() {
            let expected = self.spec.lambda_at(i)? / denom;
            worst = worst.max((self.z(i) - expected).abs());
        }
        Ok(worst)
    }

    /// Whether `Σ_j z_j^{(k+1)/k}` converges, with the computed power sum as
    /// certificate when it does.
    ///
    /// Laws derived from the supported activity kinds are always
    /// normalisable: their component sums converge, so components vanish and
    /// the higher power converges as well. A synthetic power-law tail
    /// `z_j = c|j|^{−p}` is normalisable iff `p(k+1)/k > 1`.
    pub fn normalisability(&self, tol: f64) -> Result<Normalisability> {
        if tol <= 0.0 {
            return Err(domain("tolerance must be positive"));
        }
        let power = (self.k as f64 + 1.0) / self.k as f64;
        if let LawOverride::PowerLaw { coeff, exponent } = &self.overrides {
            let q = exponent * power;
            if q <= 1.0 {
                return Ok(Normalisability { normalisable: false, power_sum: None });
            }
            let sum = power_series_sum(coeff.powf(power), q, tol)?;
            return Ok(Normalisability { normalisable: true, power_sum: Some(sum) });
        }
        if let ActivitySpec::Explicit { .. } = &self.spec {
            // Finite support: the power sum is a finite sum.
            let mut value = 0.0;
            let mut terms = 0usize;
            if let ActivitySpec::Explicit { values, .. } = &self.spec {
                for &j in values.keys() {
                    value += self.z(j).powf(power);
                    terms += 1;
                }
            }
            if let LawOverride::Values(map) = &self.overrides {
                for (&j, _) in map {
                    if self.spec.lambda_at(j)? == 0.0 {
                        value += self.z(j).powf(power);
                        terms += 1;
                    }
                }
            }
            return Ok(Normalisability {
                normalisable: true,
                power_sum: Some(SeriesSum { value, tail_bound: 0.0, terms_used: terms }),
            });
        }

        // Σ z^p = Σ z·z^{p−1} ≤ (sup tail z)^{p−1} · Σ tail z.
        let mut acc = crate::activities::Accumulator::default();
        let mut n: u64 = 0;
        loop {
            n += 1;
            acc.add(self.z(n as i64).powf(power));
            acc.add(self.z(-(n as i64)).powf(power));
            let tail = self.sum_tail_bound(n) * self.tail_sup(n).powf(power - 1.0);
            if tail <= tol {
                return Ok(Normalisability {
                    normalisable: true,
                    power_sum: Some(SeriesSum {
                        value: acc.value(),
                        tail_bound: tail,
                        terms_used: 2 * n as usize,
                    }),
                });
            }
            if n >= (1 << 27) {
                return Err(Error::Divergence(
                    "normalisability tail bound failed to close".into(),
                ));
            }
        }
    }
}

impl Weight for BoundaryLaw {
    fn at(&self, j: i64) -> f64 {
        self.z(j)
    }

    fn tail_sup(&self, n: u64) -> f64 {
        let base = self.spec.lambda_tail_sup(n) / self.denom;
        match &self.overrides {
            LawOverride::None => base,
            LawOverride::Values(map) => map
                .iter()
                .filter(|(j, _)| j.unsigned_abs() > n)
                .map(|(_, &v)| v)
                .fold(base, f64::max),
            LawOverride::PowerLaw { coeff, exponent } => {
                coeff * ((n + 1) as f64).powf(-exponent)
            }
        }
    }
}

/// Outcome of the normalisability test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalisability {
    pub normalisable: bool,
    /// `Σ_{j≠0} z_j^{(k+1)/k}` when convergent.
    pub power_sum: Option<SeriesSum>,
}

/// Partial sum of `Σ_{j≠0} c|j|^{−q}` with integral tail bound (`q > 1`).
fn power_series_sum(c: f64, q: f64, tol: f64) -> Result<SeriesSum> {
    if q <= 1.0 {
        return Err(Error::Divergence(format!(
            "Σ |j|^(−{q}) diverges (exponent must exceed 1)"
        )));
    }
    let mut acc = crate::activities::Accumulator::default();
    let mut n: u64 = 0;
    loop {
        n += 1;
        acc.add(2.0 * c * (n as f64).powf(-q));
        let tail = 2.0 * c * (n as f64).powf(1.0 - q) / (q - 1.0);
        if tail <= tol {
            return Ok(SeriesSum { value: acc.value(), tail_bound: tail, terms_used: 2 * n as usize });
        }
        if n >= (1 << 27) {
            return Err(Error::Divergence(format!(
                "power series tail failed to reach {tol:e} (exponent {q} too close to 1)"
            )));
        }
    }
}

/// Deterministic probe set: all `0 < |i| ≤ 64` plus 16 pseudo-random far
/// indices. A law violating the consistency equation does so uniformly in
/// `i`, so the probe set catches implementation errors without an
/// impossible all-of-ℤ check.
fn probe_indices() -> Vec<i64> {
    let mut probes: Vec<i64> = (1..=PROBE_RADIUS).flat_map(|i| [i, -i]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4843_5052_4f42); // fixed probe seed
    for _ in 0..PROBE_TAIL_COUNT {
        let i = rng.random_range(PROBE_RADIUS + 1..=PROBE_TAIL_MAX);
        probes.push(if rng.random::<bool>() { i } else { -i });
    }
    probes
}

/// The even/odd pair of laws behind a two-periodic measure.
///
/// `even` carries `z_i = λ_i/(1+B)^k` (component sum `A`), `odd` carries
/// `z̃_i = λ_i/(1+A)^k` (component sum `B`). Swapping the two laws yields
/// the second periodic measure.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicLawPair {
    even: BoundaryLaw,
    odd: BoundaryLaw,
    sum_even: f64,
    sum_odd: f64,
}

impl PeriodicLawPair {
    /// Build the pair from the sums `(A, B)` of the even and odd laws.
    pub fn from_sums(spec: ActivitySpec, k: u32, a: f64, b: f64) -> Result<Self> {
        let even = BoundaryLaw::from_sum(spec.clone(), k, b)?;
        let odd = BoundaryLaw::from_sum(spec, k, a)?;
        Ok(PeriodicLawPair { even, odd, sum_even: a, sum_odd: b })
    }

    pub fn even(&self) -> &BoundaryLaw {
        &self.even
    }

    pub fn odd(&self) -> &BoundaryLaw {
        &self.odd
    }

    /// Declared sums `(A, B) = (Σz, Σz̃)`.
    pub fn sums(&self) -> (f64, f64) {
        (self.sum_even, self.sum_odd)
    }

    pub fn order(&self) -> u32 {
        self.even.k
    }

    pub fn spec(&self) -> &ActivitySpec {
        &self.even.spec
    }

    /// The σ-swapped pair (the other non-diagonal solution).
    pub fn swapped(&self) -> Self {
        PeriodicLawPair {
            even: self.odd.clone(),
            odd: self.even.clone(),
            sum_even: self.sum_odd,
            sum_odd: self.sum_even,
        }
    }

    /// Sup-residual of the two-line consistency system over the probe set:
    /// `z_i` against `λ_i/(1+Σz̃)^k` and `z̃_i` against `λ_i/(1+Σz)^k`.
    pub fn consistency_residual(&self, tol: f64) -> Result<f64> {
        let sum_even = self.even.sum(tol)?.value;
        let sum_odd = self.odd.sum(tol)?.value;
        let r_even = self.even.residual_against(sum_odd)?;
        let r_odd = self.odd.residual_against(sum_even)?;
        Ok(r_even.max(r_odd))
    }
}

/// The translation-invariant law of a spec: solves `A(1+A)^k = Λ` and
/// materializes the law at the root.
pub fn ti_law(spec: &ActivitySpec, k: u32, tol: f64) -> Result<BoundaryLaw> {
    let lambda = spec.sum(tol)?.value;
    let a0 = phase::solve_translation_invariant(k, lambda, tol)?;
    BoundaryLaw::from_sum(spec.clone(), k, a0)
}

/// The two-periodic pair of a spec, when the regime admits one.
pub fn periodic_pair(spec: &ActivitySpec, k: u32, tol: f64) -> Result<Option<PeriodicLawPair>> {
    let lambda = spec.sum(tol)?.value;
    match phase::solve_two_periodic(k, lambda, tol)? {
        Some((a, b)) => Ok(Some(PeriodicLawPair::from_sums(spec.clone(), k, a, b)?)),
        None => Ok(None),
    }
}
