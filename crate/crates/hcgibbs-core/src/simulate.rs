//! Seeded sampling of admissible configurations on the Cayley-tree ball.
//!
//! The root spin is drawn from the stationary vector of the chosen measure's
//! chain; every child of an occupied vertex is vacant; children of a vacant
//! vertex draw i.i.d. from the single-step distribution of the law attached
//! to the parent's parity class (both parities share one law under the
//! translation-invariant measure). Spins are drawn by inverse CDF over the
//! truncated index set ordered `0, 1, −1, 2, −2, …` with the certified tail
//! renormalized away.
//!
//! Randomness is counter-based: one ChaCha8 key per sample seed, one stream
//! per vertex address, so a sample is reproducible bit-for-bit regardless of
//! traversal order or parallel generation of other samples.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activities::ActivitySpec;
use crate::boundary::{BoundaryLaw, PeriodicLawPair};
use crate::chain::{self, StationaryDist};
use crate::error::{domain, Error, Result};

/// Ceiling on materialized ball sizes.
const MAX_VERTICES: u64 = 1 << 26;

/// Tail mass dropped from sampled distributions (tightened by the caller's
/// tolerance when stricter).
const SAMPLER_TAIL: f64 = 1e-12;

/// Ball `V_n` of the Cayley tree of order `k`: the root has `k+1`
/// successors, every other vertex has `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeBall {
    k: u32,
    depth: u32,
}

impl TreeBall {
    pub fn new(k: u32, depth: u32) -> Result<Self> {
        if k < 1 {
            return Err(domain(format!("tree order k must be ≥ 1, got {k}")));
        }
        let ball = TreeBall { k, depth };
        // Reject balls too large to materialize.
        let mut total: u128 = 0;
        for m in 0..=depth {
            total += ball.level_width_u128(m);
            if total > MAX_VERTICES as u128 {
                return Err(domain(format!(
                    "ball V_{depth} of the order-{k} tree exceeds {MAX_VERTICES} vertices"
                )));
            }
        }
        Ok(ball)
    }

    pub fn order(&self) -> u32 {
        self.k
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    fn level_width_u128(&self, m: u32) -> u128 {
        if m == 0 {
            1
        } else {
            (self.k as u128 + 1) * (self.k as u128).pow(m - 1)
        }
    }

    /// `|W_m|`: 1 at the root, `(k+1)k^{m−1}` for `m ≥ 1`.
    pub fn level_width(&self, m: u32) -> u64 {
        self.level_width_u128(m) as u64
    }

    /// `|V_depth|`.
    pub fn vertex_count(&self) -> u64 {
        (0..=self.depth).map(|m| self.level_width(m)).sum()
    }

    /// Number of direct successors of a vertex at the given level.
    pub fn successors_at(&self, level: u32) -> u32 {
        if level == 0 {
            self.k + 1
        } else {
            self.k
        }
    }
}

/// Which Gibbs measure a sample was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureTag {
    Mu0,
    Mu1,
    Mu2,
}

impl fmt::Display for MeasureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureTag::Mu0 => write!(f, "mu0"),
            MeasureTag::Mu1 => write!(f, "mu1"),
            MeasureTag::Mu2 => write!(f, "mu2"),
        }
    }
}

/// The two non-diagonal branches of a periodic pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Mu1,
    Mu2,
}

/// The measure to sample from.
#[derive(Debug, Clone)]
pub enum Measure {
    /// Translation-invariant measure of a boundary law.
    TranslationInvariant(BoundaryLaw),
    /// One branch of a two-periodic pair. Under `Mu1` even vertices carry
    /// the pair's even law; `Mu2` is the swap.
    Periodic { pair: PeriodicLawPair, branch: Branch },
}

impl Measure {
    pub fn tag(&self) -> MeasureTag {
        match self {
            Measure::TranslationInvariant(_) => MeasureTag::Mu0,
            Measure::Periodic { branch: Branch::Mu1, .. } => MeasureTag::Mu1,
            Measure::Periodic { branch: Branch::Mu2, .. } => MeasureTag::Mu2,
        }
    }

    fn order(&self) -> u32 {
        match self {
            Measure::TranslationInvariant(law) => law.order(),
            Measure::Periodic { pair, .. } => pair.order(),
        }
    }

    fn spec(&self) -> &ActivitySpec {
        match self {
            Measure::TranslationInvariant(law) => law.spec(),
            Measure::Periodic { pair, .. } => pair.spec(),
        }
    }
}

/// An admissible configuration on the ball, with its provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeSample {
    k: u32,
    depth: u32,
    seed: u64,
    tag: MeasureTag,
    spins: Vec<Vec<i64>>,
}

impl TreeSample {
    pub fn order(&self) -> u32 {
        self.k
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tag(&self) -> MeasureTag {
        self.tag
    }

    pub fn spin(&self, level: u32, index: u64) -> i64 {
        self.spins[level as usize][index as usize]
    }

    pub fn level(&self, m: u32) -> &[i64] {
        &self.spins[m as usize]
    }

    pub fn vertex_count(&self) -> u64 {
        self.spins.iter().map(|l| l.len() as u64).sum()
    }

    /// True iff `σ(x)·σ(y) = 0` across every edge of the ball.
    pub fn admissible(&self) -> bool {
        let ball = TreeBall { k: self.k, depth: self.depth };
        for m in 0..self.depth {
            let fan = ball.successors_at(m) as u64;
            let (parents, children) = (&self.spins[m as usize], &self.spins[m as usize + 1]);
            for (p, &ps) in parents.iter().enumerate() {
                for t in 0..fan {
                    let c = children[(p as u64 * fan + t) as usize];
                    if ps != 0 && c != 0 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// `(level, index, spin)` records in breadth-first order.
    pub fn records(&self) -> impl Iterator<Item = (u32, u64, i64)> + '_ {
        self.spins.iter().enumerate().flat_map(|(m, row)| {
            row.iter()
                .enumerate()
                .map(move |(i, &s)| (m as u32, i as u64, s))
        })
    }

    /// Hand-assemble a sample (test and import use).
    pub fn from_levels(k: u32, seed: u64, tag: MeasureTag, spins: Vec<Vec<i64>>) -> Result<Self> {
        if spins.is_empty() {
            return Err(domain("a sample needs at least the root level"));
        }
        let depth = (spins.len() - 1) as u32;
        let ball = TreeBall::new(k, depth)?;
        for (m, row) in spins.iter().enumerate() {
            if row.len() as u64 != ball.level_width(m as u32) {
                return Err(domain(format!(
                    "level {m} has {} spins, expected {}",
                    row.len(),
                    ball.level_width(m as u32)
                )));
            }
        }
        Ok(TreeSample { k, depth, seed, tag, spins })
    }
}

/// Inverse-CDF sampler over the truncated spin set.
#[derive(Debug, Clone)]
struct SpinSampler {
    spins: Vec<i64>,
    cdf: Vec<f64>,
}

impl SpinSampler {
    /// Probabilities are taken in the order `0, 1, −1, 2, −2, …, N, −N` and
    /// renormalized over the window.
    fn build(n: u64, prob: impl Fn(i64) -> f64) -> SpinSampler {
        let mut spins = Vec::with_capacity(2 * n as usize + 1);
        spins.push(0i64);
        for j in 1..=n as i64 {
            spins.push(j);
            spins.push(-j);
        }
        let mut cdf = Vec::with_capacity(spins.len());
        let mut acc = crate::activities::Accumulator::default();
        for &j in &spins {
            acc.add(prob(j).max(0.0));
            cdf.push(acc.value());
        }
        let total = acc.value();
        if total > 0.0 {
            for c in cdf.iter_mut() {
                *c /= total;
            }
        }
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        SpinSampler { spins, cdf }
    }

    fn draw(&self, u: f64) -> i64 {
        let i = self.cdf.partition_point(|&c| c <= u);
        self.spins[i.min(self.spins.len() - 1)]
    }

    #[cfg(test)]
    fn prob_of(&self, spin: i64) -> f64 {
        let i = self.spins.iter().position(|&s| s == spin).unwrap();
        if i == 0 {
            self.cdf[0]
        } else {
            self.cdf[i] - self.cdf[i - 1]
        }
    }
}

/// Prepared sampling pipeline for one measure.
///
/// Building the truncated distributions once and reusing them across samples
/// is the fast path for Monte-Carlo runs; [`sample_tree`] wraps it for
/// one-shot use.
#[derive(Debug, Clone)]
pub struct Sampler {
    k: u32,
    tag: MeasureTag,
    root: SpinSampler,
    /// Step distribution out of even-level vacant parents.
    step_even: SpinSampler,
    /// Step distribution out of odd-level vacant parents.
    step_odd: SpinSampler,
}

impl Sampler {
    pub fn new(measure: &Measure, tol: f64) -> Result<Self> {
        if tol <= 0.0 {
            return Err(domain("tolerance must be positive"));
        }
        let tail = tol.min(SAMPLER_TAIL);
        let spec = measure.spec().clone();
        let k = measure.order();

        let (root_dist, law_even, law_odd): (StationaryDist, BoundaryLaw, BoundaryLaw) =
            match measure {
                Measure::TranslationInvariant(law) => (
                    chain::stationary_ti(&spec, law, tail)?,
                    law.clone(),
                    law.clone(),
                ),
                Measure::Periodic { pair, branch } => {
                    let oriented = match branch {
                        Branch::Mu1 => pair.clone(),
                        Branch::Mu2 => pair.swapped(),
                    };
                    (
                        chain::stationary_periodic(&spec, &oriented, tail)?,
                        oriented.even().clone(),
                        oriented.odd().clone(),
                    )
                }
            };

        let n = spec
            .required_weighted_cut(&law_even, tail)?
            .max(spec.required_weighted_cut(&law_odd, tail)?);

        let step_of = |law: &BoundaryLaw| -> Result<SpinSampler> {
            let (row, _s) = chain::step_row(&spec, law, n)?;
            let ni = n as i64;
            Ok(SpinSampler::build(n, |j| row[(j + ni) as usize]))
        };
        let step_even = step_of(&law_even)?;
        let step_odd = step_of(&law_odd)?;
        let root = SpinSampler::build(n, |j| root_dist.x(j));

        Ok(Sampler { k, tag: measure.tag(), root, step_even, step_odd })
    }

    /// Draw the configuration on `V_depth` for one seed.
    pub fn sample(&self, depth: u32, seed: u64) -> Result<TreeSample> {
        let ball = TreeBall::new(self.k, depth)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |vertex_id: u64| -> f64 {
            rng.set_stream(vertex_id);
            rng.set_word_pos(0);
            rng.random::<f64>()
        };

        let mut spins: Vec<Vec<i64>> = Vec::with_capacity(depth as usize + 1);
        spins.push(vec![self.root.draw(uniform(0))]);
        let mut offset: u64 = 1;
        for m in 0..depth {
            let fan = ball.successors_at(m) as u64;
            let parents = &spins[m as usize];
            let step = if m % 2 == 0 { &self.step_even } else { &self.step_odd };
            let mut next = Vec::with_capacity((parents.len() as u64 * fan) as usize);
            for (p, &ps) in parents.iter().enumerate() {
                for t in 0..fan {
                    let child_id = offset + p as u64 * fan + t;
                    let spin = if ps != 0 { 0 } else { step.draw(uniform(child_id)) };
                    next.push(spin);
                }
            }
            offset += next.len() as u64;
            spins.push(next);
        }
        Ok(TreeSample { k: self.k, depth, seed, tag: self.tag, spins })
    }

    #[cfg(test)]
    fn root_sampler(&self) -> &SpinSampler {
        &self.root
    }
}

/// One-shot sampling of the ball `V_depth`.
pub fn sample_tree(measure: &Measure, depth: u32, seed: u64, tol: f64) -> Result<TreeSample> {
    Sampler::new(measure, tol)?.sample(depth, seed)
}

/// Which vertex parity to pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityFilter {
    Even,
    Odd,
    All,
}

impl ParityFilter {
    fn accepts(&self, level: u32) -> bool {
        match self {
            ParityFilter::Even => level % 2 == 0,
            ParityFilter::Odd => level % 2 == 1,
            ParityFilter::All => true,
        }
    }
}

/// Mergeable occupation counts (a commutative monoid under [`merge`]).
///
/// [`merge`]: MarginalCounts::merge
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarginalCounts {
    counts: BTreeMap<i64, u64>,
    total: u64,
}

impl MarginalCounts {
    pub fn add_sample(&mut self, sample: &TreeSample, parity: ParityFilter) {
        for (m, row) in sample.spins.iter().enumerate() {
            if parity.accepts(m as u32) {
                for &s in row {
                    *self.counts.entry(s).or_insert(0) += 1;
                    self.total += 1;
                }
            }
        }
    }

    pub fn merge(mut self, other: MarginalCounts) -> MarginalCounts {
        for (s, c) in other.counts {
            *self.counts.entry(s).or_insert(0) += c;
        }
        self.total += other.total;
        self
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, spin: i64) -> u64 {
        self.counts.get(&spin).copied().unwrap_or(0)
    }

    /// Normalized occupation frequencies.
    pub fn frequencies(&self) -> BTreeMap<i64, f64> {
        self.counts
            .iter()
            .map(|(&s, &c)| (s, c as f64 / self.total as f64))
            .collect()
    }
}

/// Pooled occupation frequencies over vertices of the requested parity.
///
/// All samples must carry the same measure tag.
pub fn empirical_marginals(
    samples: &[TreeSample],
    parity: ParityFilter,
) -> Result<BTreeMap<i64, f64>> {
    let first = samples
        .first()
        .ok_or_else(|| domain("empirical marginals need at least one sample"))?;
    let tag = first.tag;
    let mut counts = MarginalCounts::default();
    for s in samples {
        if s.tag != tag {
            return Err(Error::MixedSamples(format!("{} vs {}", tag, s.tag)));
        }
        counts.add_sample(s, parity);
    }
    Ok(counts.frequencies())
}
