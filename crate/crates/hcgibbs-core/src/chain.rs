//! Transition kernels of the tree-indexed Markov chains and their
//! closed-form stationary distributions.
//!
//! In the translation-invariant chain a vertex with spin `i ≠ 0` forces spin
//! 0 on its successor, while a 0-spin vertex hands out spin `j` with
//! probability `λ_j z_j/(1+S)`, `S = Σ_l λ_l z_l`. The stationary vector is
//! `x_0 = (1+S)/(1+2S)`, `x_j = λ_j z_j/(1+2S)` — no linear solve needed.
//! For a two-periodic pair the analogous two-step product kernel has rows
//! `i ≠ 0` equal to the z̃-step distribution and stationary vector
//! `x_0 = (1+S)/(1+S̃+S)`, `x_j = λ_j z̃_j/(1+S̃+S)`.
//!
//! Kernels are truncated to a window `[−N, N]` and renormalized; the tail
//! mass removed is certified against the requested tolerance up front.

use serde::Serialize;

use crate::activities::{ActivitySpec, Accumulator};
use crate::boundary::{BoundaryLaw, PeriodicLawPair};
use crate::error::{domain, Error, Result};

/// Ceiling on the truncation window (2N+1 entries are materialized per row).
const MAX_TRUNCATION: u64 = 1 << 24;

/// Which chain a kernel belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// Single-step kernel of the translation-invariant chain.
    TranslationInvariant,
    /// Two-step product kernel of a periodic pair.
    PeriodicProduct,
}

/// The shared row used for every `i ≠ 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OffZeroRow {
    /// All mass on spin 0 (translation-invariant single step).
    PointMassAtZero,
    /// Dense distribution shared by all nonzero rows (periodic product).
    Dense(Vec<f64>),
}

/// Row-stochastic kernel over the spin window `[−N, N]`.
///
/// Only row 0 and one shared off-zero row are stored; the kernel has `O(N)`
/// distinct entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionKernel {
    kind: KernelKind,
    truncation: u64,
    /// Truncated `S = Σ_{0<|l|≤N} λ_l z_l`.
    s: f64,
    /// Truncated `S̃` for the periodic product.
    s_tilde: Option<f64>,
    row_zero: Vec<f64>,
    off_row: OffZeroRow,
}

impl TransitionKernel {
    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// Window half-width `N`.
    pub fn truncation(&self) -> u64 {
        self.truncation
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn s_tilde(&self) -> Option<f64> {
        self.s_tilde
    }

    /// Spins of the window in storage order.
    pub fn spins(&self) -> impl Iterator<Item = i64> + '_ {
        let n = self.truncation as i64;
        -n..=n
    }

    fn idx(&self, j: i64) -> usize {
        (j + self.truncation as i64) as usize
    }

    /// Transition probability `p(i → j)` within the window.
    pub fn prob(&self, i: i64, j: i64) -> f64 {
        debug_assert!(i.unsigned_abs() <= self.truncation && j.unsigned_abs() <= self.truncation);
        if i == 0 {
            self.row_zero[self.idx(j)]
        } else {
            match &self.off_row {
                OffZeroRow::PointMassAtZero => {
                    if j == 0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                OffZeroRow::Dense(row) => row[self.idx(j)],
            }
        }
    }

    pub fn row_zero(&self) -> &[f64] {
        &self.row_zero
    }

    pub fn off_zero_row(&self) -> &OffZeroRow {
        &self.off_row
    }
}

fn check_truncation(n: u64) -> Result<()> {
    if n == 0 {
        return Err(domain("truncation must be ≥ 1"));
    }
    if n > MAX_TRUNCATION {
        return Err(domain(format!(
            "truncation {n} exceeds the supported maximum {MAX_TRUNCATION}"
        )));
    }
    Ok(())
}

/// Minimal window `N` whose omitted `λ·z` mass is certified ≤ `tol`.
pub fn required_truncation(spec: &ActivitySpec, law: &BoundaryLaw, tol: f64) -> Result<u64> {
    spec.required_weighted_cut(law, tol)
}

/// Compensated `Σ_{0<|l|≤N} λ_l·ζ_l` without materializing the window.
fn windowed_law_sum(spec: &ActivitySpec, law: &BoundaryLaw, n: u64) -> f64 {
    let mut acc = Accumulator::default();
    for (ring, (lp, lm)) in spec.rings().take(n as usize).enumerate() {
        let j = ring as i64 + 1;
        acc.add(lp * law.z_given_lambda(j, lp));
        acc.add(lm * law.z_given_lambda(-j, lm));
    }
    acc.value()
}

/// The products `λ_j·ζ_j` over the window `[−N, N]` in spin order (0 at the
/// center), together with their compensated sum `S_N`.
pub(crate) fn weighted_window(
    spec: &ActivitySpec,
    law: &BoundaryLaw,
    n: u64,
) -> (Vec<f64>, f64) {
    let center = n as usize;
    let mut vals = vec![0.0; 2 * center + 1];
    let mut acc = Accumulator::default();
    for (ring, (lp, lm)) in spec.rings().take(center).enumerate() {
        let j = ring as i64 + 1;
        let vp = lp * law.z_given_lambda(j, lp);
        let vm = lm * law.z_given_lambda(-j, lm);
        vals[center + j as usize] = vp;
        vals[center - j as usize] = vm;
        acc.add(vp);
        acc.add(vm);
    }
    (vals, acc.value())
}

/// Build `2N+1` step probabilities `{0 ↦ 1/(1+S_N), j ↦ λ_j ζ_j/(1+S_N)}`
/// and renormalize them to unit mass.
pub(crate) fn step_row(spec: &ActivitySpec, law: &BoundaryLaw, n: u64) -> Result<(Vec<f64>, f64)> {
    let (mut row, s_n) = weighted_window(spec, law, n);
    let denom = 1.0 + s_n;
    for v in row.iter_mut() {
        *v /= denom;
    }
    row[n as usize] = 1.0 / denom;
    renormalize(&mut row);
    Ok((row, s_n))
}

fn renormalize(row: &mut [f64]) {
    let total = crate::activities::compensated_sum(row);
    if total > 0.0 && total.is_finite() {
        for p in row.iter_mut() {
            *p /= total;
        }
    }
}

/// Single-step kernel of the translation-invariant chain.
///
/// Row 0 is the step distribution of the law; every other row is a point
/// mass at 0. Fails with [`Error::TruncationTooSmall`] when the window
/// cannot certify the requested tail mass.
pub fn build_ti_kernel(
    spec: &ActivitySpec,
    law: &BoundaryLaw,
    n: u64,
    tol: f64,
) -> Result<TransitionKernel> {
    check_truncation(n)?;
    let required = required_truncation(spec, law, tol)?;
    if n < required {
        return Err(Error::TruncationTooSmall { given: n, required });
    }
    let (row_zero, s_n) = step_row(spec, law, n)?;
    Ok(TransitionKernel {
        kind: KernelKind::TranslationInvariant,
        truncation: n,
        s: s_n,
        s_tilde: None,
        row_zero,
        off_row: OffZeroRow::PointMassAtZero,
    })
}

/// Two-step product kernel of a periodic pair.
///
/// Rows `i ≠ 0` all equal the z̃-step distribution; row 0 carries
/// `c_{0j} = λ_j z̃_j/((1+S)(1+S̃))` off zero and
/// `c_{00} = 1 − S̃/((1+S)(1+S̃))`.
pub fn build_periodic_kernel(
    spec: &ActivitySpec,
    pair: &PeriodicLawPair,
    n: u64,
    tol: f64,
) -> Result<TransitionKernel> {
    check_truncation(n)?;
    let required = required_truncation(spec, pair.even(), tol)?
        .max(required_truncation(spec, pair.odd(), tol)?);
    if n < required {
        return Err(Error::TruncationTooSmall { given: n, required });
    }

    let (shared, s_tilde_n) = step_row(spec, pair.odd(), n)?;
    let (odd_products, _) = weighted_window(spec, pair.odd(), n);
    let s_n = windowed_law_sum(spec, pair.even(), n);

    let gate = 1.0 + s_n;
    let denom_odd = 1.0 + s_tilde_n;
    let mut row_zero = odd_products;
    for v in row_zero.iter_mut() {
        *v /= gate * denom_odd;
    }
    row_zero[n as usize] = 1.0 - s_tilde_n / (gate * denom_odd);
    renormalize(&mut row_zero);

    Ok(TransitionKernel {
        kind: KernelKind::PeriodicProduct,
        truncation: n,
        s: s_n,
        s_tilde: Some(s_tilde_n),
        row_zero,
        off_row: OffZeroRow::Dense(shared),
    })
}

/// Stationary distribution in closed form.
///
/// Lazy over the full countable spin set; [`StationaryDist::window`]
/// materializes a truncated vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDist {
    /// Law whose components appear in the off-zero masses
    /// (`z` for the TI chain, `z̃` for the periodic product).
    law: BoundaryLaw,
    s: f64,
    s_tilde: Option<f64>,
}

impl StationaryDist {
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn s_tilde(&self) -> Option<f64> {
        self.s_tilde
    }

    pub fn law(&self) -> &BoundaryLaw {
        &self.law
    }

    fn denom(&self) -> f64 {
        match self.s_tilde {
            None => 1.0 + 2.0 * self.s,
            Some(st) => 1.0 + st + self.s,
        }
    }

    /// Probability of spin `j`.
    pub fn x(&self, j: i64) -> f64 {
        if j == 0 {
            (1.0 + self.s) / self.denom()
        } else {
            let lambda = self.law.spec().lambda_at(j).unwrap_or(0.0);
            lambda * self.law.z(j) / self.denom()
        }
    }

    /// The vector restricted to `[−n, n]`, in spin order.
    pub fn window(&self, n: u64) -> Vec<f64> {
        let denom = self.denom();
        let (mut vals, _) = weighted_window(self.law.spec(), &self.law, n);
        for v in vals.iter_mut() {
            *v /= denom;
        }
        vals[n as usize] = (1.0 + self.s) / denom;
        vals
    }
}

/// Stationary vector of the translation-invariant chain:
/// `x_0 = (1+S)/(1+2S)`, `x_j = λ_j z_j/(1+2S)`.
pub fn stationary_ti(spec: &ActivitySpec, law: &BoundaryLaw, tol: f64) -> Result<StationaryDist> {
    let s = spec.sum_weighted(law, tol)?.value;
    Ok(StationaryDist { law: law.clone(), s, s_tilde: None })
}

/// Stationary vector of the periodic product chain:
/// `x_0 = (1+S)/(1+S̃+S)`, `x_j = λ_j z̃_j/(1+S̃+S)`.
pub fn stationary_periodic(
    spec: &ActivitySpec,
    pair: &PeriodicLawPair,
    tol: f64,
) -> Result<StationaryDist> {
    let s = spec.sum_weighted(pair.even(), tol)?.value;
    let s_tilde = spec.sum_weighted(pair.odd(), tol)?.value;
    Ok(StationaryDist { law: pair.odd().clone(), s, s_tilde: Some(s_tilde) })
}

/// Sup-norm of `X·P − X` with `X` restricted and renormalized to the
/// kernel's window.
pub fn stationarity_residual(dist: &StationaryDist, kernel: &TransitionKernel) -> f64 {
    let n = kernel.truncation;
    let mut x = dist.window(n);
    renormalize(&mut x);
    residual_of_vector(&x, kernel)
}

/// Sup-norm of `v·P − v` for an arbitrary probability vector on the window.
pub fn residual_of_vector(v: &[f64], kernel: &TransitionKernel) -> f64 {
    let center = kernel.truncation as usize;
    assert_eq!(v.len(), 2 * center + 1);
    let x0 = v[center];
    let mut off = Accumulator::default();
    for (i, &p) in v.iter().enumerate() {
        if i != center {
            off.add(p);
        }
    }
    let off_mass = off.value();

    let mut worst: f64 = 0.0;
    for (i, &xi) in v.iter().enumerate() {
        let from_zero = x0 * kernel.row_zero[i];
        let from_rest = match &kernel.off_row {
            OffZeroRow::PointMassAtZero => {
                if i == center {
                    off_mass
                } else {
                    0.0
                }
            }
            OffZeroRow::Dense(row) => off_mass * row[i],
        };
        worst = worst.max((from_zero + from_rest - xi).abs());
    }
    worst
}

/// Compensated sum of a kernel row (diagnostic).
pub fn row_sum(row: &[f64]) -> f64 {
    crate::activities::compensated_sum(row)
}
