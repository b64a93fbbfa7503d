//! Activity sequences `{λ_j}` over the nonzero integers and their sums.
//!
//! An [`ActivitySpec`] describes a positive sequence `λ_j`, `j ∈ ℤ\{0}`, from
//! one of the supported parametric families (or an explicit finite table).
//! The total activity `Λ = Σ_j λ_j` and weighted sums `Σ_j λ_j w_j` are
//! evaluated with certified tail bounds: every [`SeriesSum`] carries an upper
//! bound on the omitted mass, so `value ≤ true sum ≤ value + tail_bound` for
//! these positive-term series.
//!
//! `λ_0` is fixed to 1 by the normalization of the boundary-law recursion and
//! is not part of the spec.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// The omitted index 0 carries activity 1 by normalization.
pub const LAMBDA_ZERO: f64 = 1.0;

/// Hard ceiling on partial sums before we declare divergence.
const DIVERGENCE_CEILING: f64 = 1e12;

/// Hard ceiling on the number of index rings summed before giving up.
const MAX_RINGS: u64 = 1 << 27;

/// A positive activity sequence over `ℤ\{0}`.
///
/// The four kinds:
/// - `Geometric`: `λ_j = c·α(1−α)^j` for `j ≥ 1`, `λ_{−j} = c·β(1−β)^j`.
/// - `Poisson`: `λ_j = c·r₊^j e^{−r₊}/j!` for `j ≥ 1`, mirrored with `r₋`.
/// - `Telescoping`: `λ_j = 9c/((4j−3)(4j−1))` for `j ≥ 1`,
///   `λ_j = 9c/((4j−1)(4j+1))` for `j ≤ −1`.
/// - `Explicit`: a finite table; indices not listed carry `λ_j = 0`, which
///   deviates from the strict positivity of the parametric kinds (see
///   [`ActivitySpec::support_note`]). An explicit table may additionally be
///   flagged `divergent` to stand in for a sequence whose sum does not
///   converge; sums then fail with [`Error::Divergence`] and the phase
///   classifier reports that no measure exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "lowercase",
    try_from = "RawActivitySpec"
)]
pub enum ActivitySpec {
    Geometric { alpha: f64, beta: f64, scale: f64 },
    Poisson { rate_pos: f64, rate_neg: f64, scale: f64 },
    Telescoping { scale: f64 },
    Explicit {
        values: BTreeMap<i64, f64>,
        divergent: bool,
    },
}

/// Flat mirror of the JSON schema; unknown fields are rejected here and the
/// kind-specific field mix is checked in `TryFrom`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawActivitySpec {
    kind: String,
    alpha: Option<f64>,
    beta: Option<f64>,
    scale: Option<f64>,
    rate_pos: Option<f64>,
    rate_neg: Option<f64>,
    values: Option<BTreeMap<i64, f64>>,
    divergent: Option<bool>,
}

impl TryFrom<RawActivitySpec> for ActivitySpec {
    type Error = Error;

    fn try_from(raw: RawActivitySpec) -> Result<Self> {
        fn require(field: Option<f64>, name: &str, kind: &str) -> Result<f64> {
            field.ok_or_else(|| {
                Error::InvalidSpec(format!("{kind} spec requires field `{name}`"))
            })
        }
        fn forbid<T>(field: &Option<T>, name: &str, kind: &str) -> Result<()> {
            if field.is_some() {
                return Err(Error::InvalidSpec(format!(
                    "field `{name}` is not valid for a {kind} spec"
                )));
            }
            Ok(())
        }

        let spec = match raw.kind.as_str() {
            "geometric" => {
                forbid(&raw.rate_pos, "rate_pos", "geometric")?;
                forbid(&raw.rate_neg, "rate_neg", "geometric")?;
                forbid(&raw.values, "values", "geometric")?;
                forbid(&raw.divergent, "divergent", "geometric")?;
                ActivitySpec::Geometric {
                    alpha: require(raw.alpha, "alpha", "geometric")?,
                    beta: require(raw.beta, "beta", "geometric")?,
                    scale: require(raw.scale, "scale", "geometric")?,
                }
            }
            "poisson" => {
                forbid(&raw.alpha, "alpha", "poisson")?;
                forbid(&raw.beta, "beta", "poisson")?;
                forbid(&raw.values, "values", "poisson")?;
                forbid(&raw.divergent, "divergent", "poisson")?;
                ActivitySpec::Poisson {
                    rate_pos: require(raw.rate_pos, "rate_pos", "poisson")?,
                    rate_neg: require(raw.rate_neg, "rate_neg", "poisson")?,
                    scale: require(raw.scale, "scale", "poisson")?,
                }
            }
            "telescoping" => {
                forbid(&raw.alpha, "alpha", "telescoping")?;
                forbid(&raw.beta, "beta", "telescoping")?;
                forbid(&raw.rate_pos, "rate_pos", "telescoping")?;
                forbid(&raw.rate_neg, "rate_neg", "telescoping")?;
                forbid(&raw.values, "values", "telescoping")?;
                forbid(&raw.divergent, "divergent", "telescoping")?;
                ActivitySpec::Telescoping {
                    scale: require(raw.scale, "scale", "telescoping")?,
                }
            }
            "explicit" => {
                forbid(&raw.alpha, "alpha", "explicit")?;
                forbid(&raw.beta, "beta", "explicit")?;
                forbid(&raw.scale, "scale", "explicit")?;
                forbid(&raw.rate_pos, "rate_pos", "explicit")?;
                forbid(&raw.rate_neg, "rate_neg", "explicit")?;
                ActivitySpec::Explicit {
                    values: raw.values.ok_or_else(|| {
                        Error::InvalidSpec("explicit spec requires field `values`".into())
                    })?,
                    divergent: raw.divergent.unwrap_or(false),
                }
            }
            other => {
                return Err(Error::InvalidSpec(format!(
                    "unknown kind `{other}` (expected geometric, poisson, telescoping or explicit)"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl ActivitySpec {
    pub fn geometric(alpha: f64, beta: f64, scale: f64) -> Result<Self> {
        let spec = ActivitySpec::Geometric { alpha, beta, scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn poisson(rate_pos: f64, rate_neg: f64, scale: f64) -> Result<Self> {
        let spec = ActivitySpec::Poisson { rate_pos, rate_neg, scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn telescoping(scale: f64) -> Result<Self> {
        let spec = ActivitySpec::Telescoping { scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn explicit(values: BTreeMap<i64, f64>) -> Result<Self> {
        let spec = ActivitySpec::Explicit { values, divergent: false };
        spec.validate()?;
        Ok(spec)
    }

    /// An explicit table whose total activity is declared divergent.
    pub fn explicit_divergent(values: BTreeMap<i64, f64>) -> Result<Self> {
        let spec = ActivitySpec::Explicit { values, divergent: true };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let check_unit = |x: f64, name: &str| -> Result<()> {
            if !(x.is_finite() && x > 0.0 && x < 1.0) {
                return Err(Error::InvalidSpec(format!("{name} must lie in (0, 1), got {x}")));
            }
            Ok(())
        };
        let check_pos = |x: f64, name: &str| -> Result<()> {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::InvalidSpec(format!("{name} must be positive, got {x}")));
            }
            Ok(())
        };
        match self {
            ActivitySpec::Geometric { alpha, beta, scale } => {
                check_unit(*alpha, "alpha")?;
                check_unit(*beta, "beta")?;
                check_pos(*scale, "scale")
            }
            ActivitySpec::Poisson { rate_pos, rate_neg, scale } => {
                check_pos(*rate_pos, "rate_pos")?;
                check_pos(*rate_neg, "rate_neg")?;
                check_pos(*scale, "scale")
            }
            ActivitySpec::Telescoping { scale } => check_pos(*scale, "scale"),
            ActivitySpec::Explicit { values, .. } => {
                for (&j, &v) in values {
                    if j == 0 {
                        return Err(Error::InvalidSpec(
                            "explicit spec must not list index 0 (λ_0 = 1 is fixed)".into(),
                        ));
                    }
                    check_pos(v, &format!("values[{j}]"))?;
                }
                Ok(())
            }
        }
    }

    /// Whether the spec declares its total activity divergent.
    pub fn is_divergent(&self) -> bool {
        matches!(self, ActivitySpec::Explicit { divergent: true, .. })
    }

    /// A note on how the spec deviates from strictly positive activities.
    pub fn support_note(&self) -> Option<&'static str> {
        match self {
            ActivitySpec::Explicit { .. } => Some(
                "explicit spec has finite support; λ_j = 0 outside the listed indices",
            ),
            _ => None,
        }
    }

    /// Evaluate `λ_j`. Index 0 is outside the domain.
    pub fn lambda_at(&self, j: i64) -> Result<f64> {
        if j == 0 {
            return Err(domain("λ_0 is fixed to 1 by normalization and not part of the spec"));
        }
        Ok(match self {
            ActivitySpec::Geometric { alpha, beta, scale } => {
                if j > 0 {
                    scale * alpha * int_pow(1.0 - alpha, j as u64)
                } else {
                    scale * beta * int_pow(1.0 - beta, (-j) as u64)
                }
            }
            ActivitySpec::Poisson { rate_pos, rate_neg, scale } => {
                if j > 0 {
                    poisson_term(*scale, *rate_pos, j as u64)
                } else {
                    poisson_term(*scale, *rate_neg, (-j) as u64)
                }
            }
            ActivitySpec::Telescoping { scale } => {
                let jf = j as f64;
                if j > 0 {
                    scale * 9.0 / ((4.0 * jf - 3.0) * (4.0 * jf - 1.0))
                } else {
                    scale * 9.0 / ((4.0 * jf - 1.0) * (4.0 * jf + 1.0))
                }
            }
            ActivitySpec::Explicit { values, .. } => values.get(&j).copied().unwrap_or(0.0),
        })
    }

    /// Total activity `Λ = Σ_{j≠0} λ_j` using the kind's closed form.
    pub fn sum(&self, tol: f64) -> Result<SeriesSum> {
        if tol <= 0.0 {
            return Err(domain("tolerance must be positive"));
        }
        if self.is_divergent() {
            return Err(Error::Divergence(
                "spec is flagged divergent; Σλ_j does not converge".into(),
            ));
        }
        Ok(match self {
            ActivitySpec::Geometric { alpha, beta, scale } => SeriesSum {
                value: scale * ((1.0 - alpha) + (1.0 - beta)),
                tail_bound: 0.0,
                terms_used: 0,
            },
            ActivitySpec::Poisson { rate_pos, rate_neg, scale } => SeriesSum {
                value: scale * (-(-rate_pos).exp_m1() + -(-rate_neg).exp_m1()),
                tail_bound: 0.0,
                terms_used: 0,
            },
            // Σ over both sides runs through all consecutive odd pairs, so the
            // series telescopes to 9c/2.
            ActivitySpec::Telescoping { scale } => SeriesSum {
                value: 4.5 * scale,
                tail_bound: 0.0,
                terms_used: 0,
            },
            ActivitySpec::Explicit { values, .. } => {
                let mut acc = Accumulator::default();
                for &v in values.values() {
                    acc.add(v);
                }
                SeriesSum { value: acc.value(), tail_bound: 0.0, terms_used: values.len() }
            }
        })
    }

    /// Weighted sum `Σ_{j≠0} λ_j w_j` by partial summation over index rings
    /// `±1, ±2, …`, stopping once the certified tail drops below `tol`.
    pub fn sum_weighted(&self, weights: &dyn Weight, tol: f64) -> Result<SeriesSum> {
        if tol <= 0.0 {
            return Err(domain("tolerance must be positive"));
        }
        if self.is_divergent() {
            return Err(Error::Divergence(
                "spec is flagged divergent; weighted sums are not defined".into(),
            ));
        }
        if let ActivitySpec::Explicit { values, .. } = self {
            let mut acc = Accumulator::default();
            for (&j, &v) in values {
                let w = weights.at(j);
                check_weight(w, j)?;
                acc.add(v * w);
            }
            return Ok(SeriesSum { value: acc.value(), tail_bound: 0.0, terms_used: values.len() });
        }

        let mut acc = Accumulator::default();
        let mut n: u64 = 0;
        for (lp, lm) in self.rings() {
            n += 1;
            let (wp, wm) = (weights.at(n as i64), weights.at(-(n as i64)));
            check_weight(wp, n as i64)?;
            check_weight(wm, -(n as i64))?;
            acc.add(lp * wp);
            acc.add(lm * wm);
            let tail = self.tail_remainder(n) * weights.tail_sup(n);
            if tail <= tol {
                return Ok(SeriesSum {
                    value: acc.value(),
                    tail_bound: tail,
                    terms_used: 2 * n as usize,
                });
            }
            if acc.value() > DIVERGENCE_CEILING {
                return Err(Error::Divergence(format!(
                    "partial sums exceeded {DIVERGENCE_CEILING:e} before the tail bound closed"
                )));
            }
            if n >= MAX_RINGS {
                return Err(Error::Divergence(format!(
                    "tail bound failed to close within {MAX_RINGS} index rings (reached {:e})",
                    tail
                )));
            }
        }
        unreachable!("ring iterator is infinite for parametric kinds")
    }

    /// Iterator over `(λ_n, λ_{−n})` for `n = 1, 2, …` with O(1) steps.
    ///
    /// Bulk paths (kernel rows, windowed sums) use this instead of repeated
    /// [`ActivitySpec::lambda_at`] calls, whose Poisson evaluation is O(n).
    pub(crate) fn rings(&self) -> RingTerms<'_> {
        let kind = match self {
            ActivitySpec::Geometric { alpha, beta, scale } => RingKind::Geometric {
                t_pos: scale * alpha,
                t_neg: scale * beta,
                q_pos: 1.0 - alpha,
                q_neg: 1.0 - beta,
            },
            ActivitySpec::Poisson { rate_pos, rate_neg, scale } => RingKind::Poisson {
                t_pos: scale * (-rate_pos).exp(),
                t_neg: scale * (-rate_neg).exp(),
                r_pos: *rate_pos,
                r_neg: *rate_neg,
            },
            ActivitySpec::Telescoping { scale } => RingKind::Telescoping { scale: *scale },
            ActivitySpec::Explicit { values, .. } => RingKind::Explicit(values),
        };
        RingTerms { kind, n: 0 }
    }

    /// Upper bound on the omitted mass `Σ_{|j|>n} λ_j`.
    ///
    /// Exact for the geometric, telescoping and explicit kinds; for the
    /// Poisson kind a geometric-ratio majorant is used once the tail index
    /// clears the rate.
    pub fn tail_remainder(&self, n: u64) -> f64 {
        match self {
            ActivitySpec::Geometric { alpha, beta, scale } => {
                scale * (int_pow(1.0 - alpha, n + 1) + int_pow(1.0 - beta, n + 1))
            }
            ActivitySpec::Poisson { rate_pos, rate_neg, scale } => {
                poisson_side_tail(*scale, *rate_pos, n) + poisson_side_tail(*scale, *rate_neg, n)
            }
            ActivitySpec::Telescoping { scale } => {
                // Rings 1..=n cover the first 2n odd-pair terms exactly.
                4.5 * scale / (4.0 * n as f64 + 1.0)
            }
            ActivitySpec::Explicit { values, .. } => {
                let mut acc = Accumulator::default();
                for (&j, &v) in values {
                    if j.unsigned_abs() > n {
                        acc.add(v);
                    }
                }
                acc.value()
            }
        }
    }

    /// Upper bound on `sup_{|j|>n} λ_j`.
    pub fn lambda_tail_sup(&self, n: u64) -> f64 {
        match self {
            ActivitySpec::Geometric { alpha, beta, scale } => {
                let pos = scale * alpha * int_pow(1.0 - alpha, n + 1);
                let neg = scale * beta * int_pow(1.0 - beta, n + 1);
                pos.max(neg)
            }
            ActivitySpec::Poisson { rate_pos, rate_neg, scale } => {
                poisson_side_sup(*scale, *rate_pos, n).max(poisson_side_sup(*scale, *rate_neg, n))
            }
            ActivitySpec::Telescoping { scale } => {
                let m = n as f64 + 1.0;
                scale * 9.0 / ((4.0 * m - 3.0) * (4.0 * m - 1.0))
            }
            ActivitySpec::Explicit { values, .. } => values
                .iter()
                .filter(|(j, _)| j.unsigned_abs() > n)
                .map(|(_, &v)| v)
                .fold(0.0, f64::max),
        }
    }

    /// `sup_j λ_j` over the whole support.
    pub fn lambda_sup(&self) -> f64 {
        self.lambda_tail_sup(0)
    }

    /// Minimal ring count `n` with `tail_remainder(n) ≤ tol`.
    pub fn required_tail_cut(&self, tol: f64) -> Result<u64> {
        self.required_weighted_cut(&UnitWeight, tol)
    }

    /// Minimal ring count `n` with `tail_remainder(n)·tail_sup(n) ≤ tol`.
    pub fn required_weighted_cut(&self, weights: &dyn Weight, tol: f64) -> Result<u64> {
        if tol <= 0.0 {
            return Err(domain("tolerance must be positive"));
        }
        let bound = |n: u64| self.tail_remainder(n) * weights.tail_sup(n);
        if bound(1) <= tol {
            return Ok(1);
        }
        let mut hi: u64 = 1;
        loop {
            hi = hi.saturating_mul(2);
            if bound(hi) <= tol {
                break;
            }
            if hi >= (1 << 40) {
                return Err(Error::Divergence(format!(
                    "weighted tail bound does not reach {tol:e} within 2^40 index rings"
                )));
            }
        }
        // bound is nonincreasing in n: bisect for the minimal sufficient ring.
        let mut lo = hi / 2;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if bound(mid) <= tol {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

fn check_weight(w: f64, j: i64) -> Result<()> {
    if !w.is_finite() || w < 0.0 {
        return Err(domain(format!("weight at index {j} must be finite and ≥ 0, got {w}")));
    }
    Ok(())
}

/// See [`ActivitySpec::rings`].
pub(crate) struct RingTerms<'a> {
    kind: RingKind<'a>,
    n: u64,
}

enum RingKind<'a> {
    Geometric { t_pos: f64, t_neg: f64, q_pos: f64, q_neg: f64 },
    Poisson { t_pos: f64, t_neg: f64, r_pos: f64, r_neg: f64 },
    Telescoping { scale: f64 },
    Explicit(&'a std::collections::BTreeMap<i64, f64>),
}

impl Iterator for RingTerms<'_> {
    type Item = (f64, f64);

    fn next(&mut self) -> Option<(f64, f64)> {
        self.n += 1;
        let n = self.n;
        Some(match &mut self.kind {
            RingKind::Geometric { t_pos, t_neg, q_pos, q_neg } => {
                *t_pos *= *q_pos;
                *t_neg *= *q_neg;
                (*t_pos, *t_neg)
            }
            RingKind::Poisson { t_pos, t_neg, r_pos, r_neg } => {
                *t_pos *= *r_pos / n as f64;
                *t_neg *= *r_neg / n as f64;
                (*t_pos, *t_neg)
            }
            RingKind::Telescoping { scale } => {
                let nf = n as f64;
                (
                    *scale * 9.0 / ((4.0 * nf - 3.0) * (4.0 * nf - 1.0)),
                    *scale * 9.0 / ((-4.0 * nf - 1.0) * (-4.0 * nf + 1.0)),
                )
            }
            RingKind::Explicit(values) => (
                values.get(&(n as i64)).copied().unwrap_or(0.0),
                values.get(&-(n as i64)).copied().unwrap_or(0.0),
            ),
        })
    }
}

/// `base^exp` for integer exponents.
fn int_pow(base: f64, exp: u64) -> f64 {
    if exp <= i32::MAX as u64 {
        base.powi(exp as i32)
    } else {
        base.powf(exp as f64)
    }
}

/// `c · r^j e^{−r} / j!`, evaluated by running product to avoid overflow.
fn poisson_term(c: f64, r: f64, j: u64) -> f64 {
    let mut t = c * (-r).exp();
    for i in 1..=j {
        t *= r / i as f64;
        if t == 0.0 {
            break;
        }
    }
    t
}

/// Upper bound on `Σ_{j>n} c r^j e^{−r}/j!` for one side.
fn poisson_side_tail(c: f64, r: f64, n: u64) -> f64 {
    if (n + 1) as f64 <= r {
        // Tail index has not cleared the mode; bound by the whole side sum.
        return c * -(-r).exp_m1();
    }
    let q = r / (n as f64 + 2.0);
    poisson_term(c, r, n + 1) / (1.0 - q)
}

/// Upper bound on `sup_{j>n}` of one Poisson side.
///
/// Terms increase up to the mode `⌊r⌋` and decrease after it.
fn poisson_side_sup(c: f64, r: f64, n: u64) -> f64 {
    let mode = r.floor() as u64;
    if n + 1 >= mode {
        poisson_term(c, r, n + 1)
    } else {
        poisson_term(c, r, mode)
    }
}

/// A nonnegative weight sequence with an analytically controlled tail.
///
/// `tail_sup(n)` must bound `sup_{|j|>n} w_j` from above; it is what turns a
/// remainder on `Σ λ_j` into a certified remainder on `Σ λ_j w_j`.
pub trait Weight {
    fn at(&self, j: i64) -> f64;
    fn tail_sup(&self, n: u64) -> f64;
}

/// Weights identically 1.
pub struct UnitWeight;

impl Weight for UnitWeight {
    fn at(&self, _j: i64) -> f64 {
        1.0
    }
    fn tail_sup(&self, _n: u64) -> f64 {
        1.0
    }
}

/// Weights given by a closure plus a caller-supplied uniform bound.
pub struct FnWeight<F: Fn(i64) -> f64> {
    pub f: F,
    pub sup: f64,
}

impl<F: Fn(i64) -> f64> Weight for FnWeight<F> {
    fn at(&self, j: i64) -> f64 {
        (self.f)(j)
    }
    fn tail_sup(&self, _n: u64) -> f64 {
        self.sup
    }
}

/// A partial sum of a positive-term series together with a certified bound on
/// the omitted mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSum {
    pub value: f64,
    pub tail_bound: f64,
    pub terms_used: usize,
}

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice.
pub(crate) fn compensated_sum(xs: &[f64]) -> f64 {
    let mut acc = Accumulator::default();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tel(scale: f64) -> ActivitySpec {
        ActivitySpec::telescoping(scale).unwrap()
    }

    #[test]
    fn telescoping_terms_match_closed_fractions() {
        let spec = tel(0.25);
        assert_eq!(spec.lambda_at(1).unwrap(), 0.75);
        assert_eq!(spec.lambda_at(-1).unwrap(), 0.15);
        assert!((spec.lambda_at(2).unwrap() - 9.0 / 140.0).abs() < 1e-17);
        assert!((spec.lambda_at(-2).unwrap() - 9.0 / 252.0).abs() < 1e-17);
    }

    #[test]
    fn lambda_at_zero_is_a_domain_error() {
        let spec = tel(1.0);
        assert!(matches!(spec.lambda_at(0), Err(Error::Domain(_))));
    }

    #[test]
    fn symmetric_geometric_is_even_in_j() {
        let spec = ActivitySpec::geometric(0.3, 0.3, 2.5).unwrap();
        for j in [1i64, 2, 7, 40] {
            assert_eq!(spec.lambda_at(j).unwrap(), spec.lambda_at(-j).unwrap());
        }
    }

    #[test]
    fn total_activity_closed_forms() {
        // 9c/2 at c = 1/4.
        let s = tel(0.25).sum(1e-12).unwrap();
        assert_eq!(s.value, 1.125);
        assert_eq!(s.tail_bound, 0.0);

        let geo = ActivitySpec::geometric(0.4, 0.475, 1.0).unwrap();
        assert!((geo.sum(1e-12).unwrap().value - 1.125).abs() < 1e-15);

        let geo5 = ActivitySpec::geometric(1.0 / 3.0, 1.0 / 3.0, 4.0).unwrap();
        assert!((geo5.sum(1e-12).unwrap().value - 16.0 / 3.0).abs() < 1e-14);

        let poi = ActivitySpec::poisson(2.4, 8.0, 1.0).unwrap();
        assert!((poi.sum(1e-12).unwrap().value - 1.908_946_584_082_685).abs() < 1e-14);
    }

    #[test]
    fn closed_forms_match_brute_partial_sums() {
        let specs = [
            ActivitySpec::geometric(0.17, 0.62, 1.3).unwrap(),
            ActivitySpec::poisson(2.4, 8.0, 1.0).unwrap(),
            tel(0.25),
        ];
        for spec in &specs {
            let mut acc = Accumulator::default();
            for n in 1..=1_000_000i64 {
                acc.add(spec.lambda_at(n).unwrap());
                acc.add(spec.lambda_at(-n).unwrap());
            }
            let brute = acc.value();
            let closed = spec.sum(1e-12).unwrap().value;
            let slack = spec.tail_remainder(1_000_000);
            assert!(
                (closed - brute).abs() <= 1e-10 + slack,
                "closed {closed} vs brute {brute} for {spec:?}"
            );
        }
    }

    #[test]
    fn unit_and_zero_weights() {
        let spec = tel(0.25);
        let s = spec.sum_weighted(&UnitWeight, 1e-5).unwrap();
        assert!((s.value - 1.125).abs() < 1e-5);
        // Bracketing: partial sum below, partial + tail above.
        assert!(s.value <= 1.125 && 1.125 <= s.value + s.tail_bound);

        let zero = FnWeight { f: |_| 0.0, sup: 0.0 };
        assert_eq!(spec.sum_weighted(&zero, 1e-12).unwrap().value, 0.0);
    }

    /// Example-1 boundary-law weights `w_j = λ_j·4/9` with their decaying
    /// tail bound.
    struct LawLikeWeight;

    impl Weight for LawLikeWeight {
        fn at(&self, j: i64) -> f64 {
            tel(0.25).lambda_at(j).unwrap() * 4.0 / 9.0
        }
        fn tail_sup(&self, n: u64) -> f64 {
            tel(0.25).lambda_tail_sup(n) * 4.0 / 9.0
        }
    }

    #[test]
    fn weighted_sum_matches_brute_force_oracle() {
        // S = Σ λ_j z_j for the telescoping c = 1/4 law at A = 1/2:
        // weights w_j = λ_j/(1+1/2)² = λ_j·4/9.
        let spec = tel(0.25);
        let s = spec.sum_weighted(&LawLikeWeight, 1e-13).unwrap();

        // Brute force: ≥ 10^6 terms plus interval tail control.
        let mut acc = Accumulator::default();
        for n in 1..=1_000_000i64 {
            let lp = spec.lambda_at(n).unwrap();
            let lm = spec.lambda_at(-n).unwrap();
            acc.add(lp * lp * 4.0 / 9.0);
            acc.add(lm * lm * 4.0 / 9.0);
        }
        let brute = acc.value();
        // λ_j ≤ 9c/(4|j|−3)², so the omitted mass beyond 10^6 rings is below
        // (4/9)·Σ_{|j|>10^6} λ_j² ≤ 1e-18.
        assert!((s.value - brute).abs() < 1e-12, "{} vs {}", s.value, brute);
        // Independent closed form: (4/9)·81c²(π²/16 − 1/2).
        let analytic = 4.0 / 9.0 * 81.0 * 0.0625 * (std::f64::consts::PI.powi(2) / 16.0 - 0.5);
        assert!((s.value - analytic).abs() < 1e-12);
        assert!((s.value - 0.262_913_118_903_191_06).abs() < 1e-12);
    }

    #[test]
    fn divergent_flag_blocks_sums() {
        let mut m = BTreeMap::new();
        m.insert(1, 0.5);
        let spec = ActivitySpec::explicit_divergent(m).unwrap();
        assert!(spec.is_divergent());
        assert!(matches!(spec.sum(1e-9), Err(Error::Divergence(_))));
        assert!(matches!(spec.sum_weighted(&UnitWeight, 1e-9), Err(Error::Divergence(_))));
    }

    #[test]
    fn explicit_sum_and_tail() {
        let mut m = BTreeMap::new();
        m.insert(1, 0.5);
        m.insert(-1, 0.25);
        m.insert(2, 0.125);
        let spec = ActivitySpec::explicit(m).unwrap();
        assert_eq!(spec.sum(1e-12).unwrap().value, 0.875);
        assert_eq!(spec.lambda_at(3).unwrap(), 0.0);
        assert_eq!(spec.tail_remainder(2), 0.0);
        assert_eq!(spec.required_tail_cut(1e-15).unwrap(), 2);
    }

    #[test]
    fn tail_remainders_bound_true_remainders() {
        let specs = [
            ActivitySpec::geometric(0.25, 0.5, 2.0).unwrap(),
            ActivitySpec::poisson(3.0, 1.2, 0.7).unwrap(),
            tel(2.0),
        ];
        for spec in &specs {
            let total = spec.sum(1e-12).unwrap().value;
            for n in [1u64, 4, 16, 64, 256] {
                let mut acc = Accumulator::default();
                for j in 1..=n as i64 {
                    acc.add(spec.lambda_at(j).unwrap());
                    acc.add(spec.lambda_at(-j).unwrap());
                }
                let true_rem = total - acc.value();
                let bound = spec.tail_remainder(n);
                assert!(
                    bound >= true_rem - 1e-13,
                    "remainder bound {bound} < true remainder {true_rem} at n={n} for {spec:?}"
                );
            }
        }
    }

    #[test]
    fn required_cut_is_minimal() {
        let spec = tel(0.25);
        let tol = 1e-6;
        let n = spec.required_tail_cut(tol).unwrap();
        assert!(spec.tail_remainder(n) <= tol);
        assert!(spec.tail_remainder(n - 1) > tol);
    }

    #[test]
    fn json_schema_examples_parse() {
        let cases = [
            r#"{"kind":"geometric","alpha":0.4,"beta":0.475,"scale":1.0}"#,
            r#"{"kind":"poisson","rate_pos":2.4,"rate_neg":8.0,"scale":1.0}"#,
            r#"{"kind":"telescoping","scale":0.25}"#,
            r#"{"kind":"explicit","values":{"1":0.5,"-1":0.25,"2":0.125}}"#,
        ];
        for case in cases {
            let spec: ActivitySpec = serde_json::from_str(case).unwrap();
            spec.validate().unwrap();
            // Round-trip through the documented schema.
            let json = serde_json::to_string(&spec).unwrap();
            let back: ActivitySpec = serde_json::from_str(&json).unwrap();
            assert_eq!(spec, back);
        }
    }

    #[test]
    fn json_rejects_unknown_and_misplaced_fields() {
        let unknown = r#"{"kind":"telescoping","scale":0.25,"shift":1}"#;
        assert!(serde_json::from_str::<ActivitySpec>(unknown).is_err());
        let misplaced = r#"{"kind":"geometric","alpha":0.4,"beta":0.5,"scale":1.0,"rate_pos":2.0}"#;
        assert!(serde_json::from_str::<ActivitySpec>(misplaced).is_err());
        let zero_key = r#"{"kind":"explicit","values":{"0":1.0}}"#;
        assert!(serde_json::from_str::<ActivitySpec>(zero_key).is_err());
        let bad_alpha = r#"{"kind":"geometric","alpha":1.4,"beta":0.5,"scale":1.0}"#;
        assert!(serde_json::from_str::<ActivitySpec>(bad_alpha).is_err());
    }
}
