//! Scalar fixed-point systems in the boundary-law sums and the phase diagram.
//!
//! With total activity `Λ`, the translation-invariant sum solves
//! `A(1+A)^k = Λ`, which has exactly one positive root. Two-periodic sums
//! solve the swap system `A(1+B)^k = B(1+A)^k = Λ`, equivalently they are
//! fixed points of `h = f∘f` with `f(x) = Λ/(1+x)^k`. `h` is S-shaped, so it
//! has one fixed point for `Λ ≤ Λ_cr(k) = k^k/(k−1)^{k+1}` and exactly three
//! above the threshold; the outer two form the non-diagonal pair.

use serde::{Deserialize, Serialize};

use crate::activities::SeriesSum;
use crate::error::{domain, Error, Result};

/// Grid resolution of the fixed-point scan.
const SCAN_POINTS: usize = 4096;

/// Bisection refinement width for scanned roots.
const REFINE_TOL: f64 = 1e-12;

/// Band around `Λ_cr` inside which the scan is replaced by bracketing around
/// the collapse point `1/(k−1)`.
const NEAR_TANGENCY: f64 = 1e-6;

/// Tree order plus the total activity (or a divergence marker).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub k: u32,
    pub lambda: LambdaInput,
}

/// Total activity fed to the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaInput {
    Finite(SeriesSum),
    Divergent,
}

/// Phase regime of the model at a given `(k, Λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `Σλ_j` diverges: no translation-invariant and no two-periodic measure.
    NoMeasure,
    /// `0 < Λ ≤ Λ_cr`: a unique periodic measure, the translation-invariant one.
    UniqueTi,
    /// `Λ > Λ_cr`: exactly three periodic measures, one translation-invariant.
    ThreePeriodic,
}

/// Residuals of the defining equations at the reported roots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub ti: Option<f64>,
    pub pair_low: Option<f64>,
    pub pair_high: Option<f64>,
}

/// Full classification output: threshold, regime and all roots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub k: u32,
    pub lambda: Option<f64>,
    pub lambda_cr: f64,
    pub regime: Regime,
    /// Unique positive root of `A(1+A)^k = Λ`.
    pub a0: Option<f64>,
    /// Non-diagonal pair `(A_low, A_high)`, present iff `regime == ThreePeriodic`.
    pub pair: Option<(f64, f64)>,
    pub residuals: Residuals,
}

/// `Λ_cr(k) = k^k/(k−1)^{k+1}`.
pub fn critical_lambda(k: u32) -> Result<f64> {
    if k < 2 {
        return Err(domain(format!("tree order k must be ≥ 2, got {k}")));
    }
    let kf = k as f64;
    Ok(kf.powi(k as i32) / (kf - 1.0).powi(k as i32 + 1))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(domain(format!("Λ must be positive and finite, got {lambda}")));
    }
    Ok(())
}

/// `A(1+A)^k` — strictly increasing on `[0, ∞)`.
fn ti_map(k: u32, a: f64) -> f64 {
    a * (1.0 + a).powi(k as i32)
}

/// Unique positive root of `A(1+A)^k = Λ`.
///
/// Bisection on `[0, Λ]` (the map vanishes at 0 and dominates `Λ` at `Λ`),
/// polished by Newton steps; the residual is checked against
/// `tol·max(1, Λ)`.
pub fn solve_translation_invariant(k: u32, lambda: f64, tol: f64) -> Result<f64> {
    critical_lambda(k)?; // validates k
    check_lambda(lambda)?;
    if tol <= 0.0 {
        return Err(domain("tolerance must be positive"));
    }

    let mut lo = 0.0f64;
    let mut hi = lambda;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ti_map(k, mid) < lambda {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    let mut a = 0.5 * (lo + hi);
    // Newton polish: φ(A) = A(1+A)^k − Λ, φ'(A) = (1+A)^{k−1}(1+(k+1)A).
    for _ in 0..4 {
        let base = (1.0 + a).powi(k as i32 - 1);
        let phi = a * base * (1.0 + a) - lambda;
        let dphi = base * (1.0 + (k as f64 + 1.0) * a);
        if !phi.is_finite() || !dphi.is_finite() || dphi == 0.0 {
            break;
        }
        let next = a - phi / dphi;
        if next.is_finite() && next > 0.0 {
            a = next;
        }
    }
    let residual = (ti_map(k, a) - lambda).abs();
    if residual > tol * lambda.max(1.0) {
        return Err(Error::ScanFailed {
            expected: 1,
            found: 0,
            k,
            lambda,
            intervals: vec![(lo, hi)],
        });
    }
    Ok(a)
}

fn f_map(k: u32, lambda: f64, x: f64) -> f64 {
    lambda / (1.0 + x).powi(k as i32)
}

fn h_map(k: u32, lambda: f64, x: f64) -> f64 {
    f_map(k, lambda, f_map(k, lambda, x))
}

/// Bisect `g(x) = h(x) − x` on a bracket with `g(lo) > 0 > g(hi)`.
///
/// Refinement is relative, so roots orders of magnitude below 1 (which occur
/// for large `Λ` and `k`) are still resolved to `REFINE_TOL` in relative
/// terms.
fn bisect_h(k: u32, lambda: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g = h_map(k, lambda, mid) - mid;
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= REFINE_TOL * hi.abs().max(REFINE_TOL) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Locate the outer fixed points by bracketing around the middle root.
///
/// For `Λ > Λ_cr` the sign pattern of `g = h − x` is `+,−,+,−` across
/// `x₁ < x₀ < x₂`, so `[0, x₀−δ]` and `[x₀+δ, Λ]` bracket the outer roots
/// once `δ` is small enough that `g(x₀−δ) < 0 < g(x₀+δ)`.
fn outer_pair_by_brackets(k: u32, lambda: f64, x0: f64) -> Option<(f64, f64)> {
    let g = |x: f64| h_map(k, lambda, x) - x;
    let floor = 1e-14 * x0.max(1.0);

    let mut delta = 0.25 * x0;
    while g(x0 - delta) >= 0.0 {
        delta *= 0.5;
        if delta < floor {
            return None;
        }
    }
    let x1 = bisect_h(k, lambda, 0.0, x0 - delta);

    let mut delta = 0.25 * x0.max(1.0);
    while g(x0 + delta) <= 0.0 {
        delta *= 0.5;
        if delta < floor {
            return None;
        }
    }
    let x2 = bisect_h(k, lambda, x0 + delta, lambda);
    Some((x1, x2))
}

/// All fixed points of `h = f∘f` on `[0, Λ]`, sorted ascending.
///
/// One root is returned for `Λ ≤ Λ_cr`, three for `Λ > Λ_cr`. The generic
/// path scans `h(x) − x` for sign changes on a uniform grid over
/// `[h(0), Λ]` and refines each by bisection; near the tangency at
/// `Λ_cr` the outer roots are instead bracketed around the collapse point.
pub fn fixed_points_of_h(k: u32, lambda: f64, tol: f64) -> Result<Vec<f64>> {
    let lambda_cr = critical_lambda(k)?;
    check_lambda(lambda)?;
    let x0 = solve_translation_invariant(k, lambda, tol)?;

    if lambda <= lambda_cr {
        // Unique fixed point; the scan is redundant but cheap, and the
        // TI root is the refined answer either way.
        return Ok(vec![x0]);
    }

    if lambda - lambda_cr < NEAR_TANGENCY {
        // Roots cluster at 1/(k−1); a uniform grid cannot separate them.
        return match outer_pair_by_brackets(k, lambda, x0) {
            Some((x1, x2)) => Ok(vec![x1, x0, x2]),
            None => Err(Error::ScanFailed {
                expected: 3,
                found: 1,
                k,
                lambda,
                intervals: vec![(x0, x0)],
            }),
        };
    }

    let lo = h_map(k, lambda, 0.0);
    let hi = lambda;
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut roots: Vec<f64> = Vec::new();
    let mut prev_x = lo;
    let mut prev_g = h_map(k, lambda, lo) - lo;
    for i in 1..SCAN_POINTS {
        let x = lo + step * i as f64;
        let g = h_map(k, lambda, x) - x;
        if prev_g == 0.0 {
            roots.push(prev_x);
        } else if g != 0.0 && prev_g.signum() != g.signum() {
            intervals.push((prev_x, x));
            let root = if prev_g > 0.0 {
                bisect_h(k, lambda, prev_x, x)
            } else {
                // g goes − → +: bisect the mirrored bracket on −g.
                let (mut blo, mut bhi) = (prev_x, x);
                for _ in 0..200 {
                    let mid = 0.5 * (blo + bhi);
                    if h_map(k, lambda, mid) - mid < 0.0 {
                        blo = mid;
                    } else {
                        bhi = mid;
                    }
                    if bhi - blo <= REFINE_TOL * bhi.abs().max(REFINE_TOL) {
                        break;
                    }
                }
                0.5 * (blo + bhi)
            };
            roots.push(root);
        }
        prev_x = x;
        prev_g = g;
    }
    if prev_g == 0.0 {
        roots.push(prev_x);
    }

    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= 10.0 * tol);

    if roots.len() == 3 {
        return Ok(roots);
    }
    // The scan missed a pair (or noise split a root); fall back to the
    // bracket construction around the TI root.
    if let Some((x1, x2)) = outer_pair_by_brackets(k, lambda, x0) {
        if x2 - x1 > 10.0 * tol {
            return Ok(vec![x1, x0, x2]);
        }
    }
    Err(Error::ScanFailed {
        expected: 3,
        found: roots.len(),
        k,
        lambda,
        intervals,
    })
}

/// The non-diagonal pair `(A_low, A_high)` solving
/// `A(1+B)^k = B(1+A)^k = Λ`, or `None` for `Λ ≤ Λ_cr`.
pub fn solve_two_periodic(k: u32, lambda: f64, tol: f64) -> Result<Option<(f64, f64)>> {
    let lambda_cr = critical_lambda(k)?;
    check_lambda(lambda)?;
    if lambda <= lambda_cr {
        return Ok(None);
    }
    let roots = fixed_points_of_h(k, lambda, tol)?;
    let low = roots[0];
    // The outer fixed points of h swap under f; taking the partner as
    // f(low) makes the second pair equation hold to rounding and cancels
    // the first-order error of the first one near the tangency.
    let high = f_map(k, lambda, low);
    let scale = lambda.max(1.0);
    let swap_ok = (high - roots[2]).abs() <= 1e-6 * scale
        && (f_map(k, lambda, high) - low).abs() <= 1e-6 * scale;
    if !swap_ok {
        return Err(Error::ScanFailed {
            expected: 3,
            found: roots.len(),
            k,
            lambda,
            intervals: vec![(low, high)],
        });
    }
    Ok(Some((low, high)))
}

/// Closed-form pair for `k = 2`:
/// `(Λ−2 ∓ √(Λ(Λ−4)))/2`, defined for `Λ > 4`.
pub fn closed_form_pair_k2(lambda: f64) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    if lambda <= 4.0 {
        return Err(domain(format!(
            "the k=2 pair exists only for Λ > 4 (the pair collapses at Λ = 4); got Λ = {lambda}"
        )));
    }
    let disc = (lambda * (lambda - 4.0)).sqrt();
    Ok(((lambda - 2.0 - disc) / 2.0, (lambda - 2.0 + disc) / 2.0))
}

/// Assemble the full phase report for `(k, Λ)`.
///
/// Divergent input short-circuits to `NoMeasure` without invoking any solver.
pub fn classify(k: u32, input: LambdaInput, tol: f64) -> Result<PhaseReport> {
    let lambda_cr = critical_lambda(k)?;
    let sum = match input {
        LambdaInput::Divergent => {
            return Ok(PhaseReport {
                k,
                lambda: None,
                lambda_cr,
                regime: Regime::NoMeasure,
                a0: None,
                pair: None,
                residuals: Residuals::default(),
            })
        }
        LambdaInput::Finite(sum) => sum,
    };
    let lambda = sum.value;
    check_lambda(lambda)?;

    let a0 = solve_translation_invariant(k, lambda, tol)?;
    let mut residuals = Residuals {
        ti: Some((ti_map(k, a0) - lambda).abs()),
        ..Residuals::default()
    };
    let pair = solve_two_periodic(k, lambda, tol)?;
    if let Some((low, high)) = pair {
        residuals.pair_low = Some((low * (1.0 + high).powi(k as i32) - lambda).abs());
        residuals.pair_high = Some((high * (1.0 + low).powi(k as i32) - lambda).abs());
    }
    let regime = if pair.is_some() {
        Regime::ThreePeriodic
    } else {
        Regime::UniqueTi
    };
    Ok(PhaseReport {
        k,
        lambda: Some(lambda),
        lambda_cr,
        regime,
        a0: Some(a0),
        pair,
        residuals,
    })
}
