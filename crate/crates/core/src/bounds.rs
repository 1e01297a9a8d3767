//! Union bounds for sparse random graphs, evaluated in log space.
//!
//! Two families are covered:
//!
//! * sparse sets: `Σ_{i ≤ t} C(N, i)·C(C(i,2), ⌈αi⌉)·p^⌈αi⌉`, the expected
//!   number of sets of at most `t` vertices spanning at least `α` times their
//!   size in edges, next to the simplified bound
//!   `Σ (eN/i)^i (e·i·p/(2α))^{αi}`;
//! * cuts: `C(N, s)·C(N, t)·C(ts, m)·p^m` for set pairs of sizes `s` and `t`
//!   with at least `m` edges between them.
//!
//! Binomials use Stirling's series with the exact remainder for small
//! arguments, so values stay finite for `N` far beyond `f64` factorial range.
//! For `N ≤ 40` an exact rational evaluation is available as a cross-check.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Sums with more terms than this are sampled instead of summed.
pub const EXHAUSTIVE_TERMS: u64 = 20_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("probability {0} is not in [0, 1]")]
    Probability(f64),
    #[error("edge multiplier {0} must exceed 1")]
    Alpha(f64),
    #[error("invalid size: {0}")]
    Size(String),
    #[error("exact rational evaluation needs an integer vertex count of at most 40")]
    TooLargeForRational,
}

// ---------------------------------------------------------------------------
// Log-space primitives
// ---------------------------------------------------------------------------

/// `ln(x!) - [(x + 1/2) ln x - x + ln √(2π)]` for integer-valued `x ≥ 1`.
fn stirling_remainder(x: f64) -> f64 {
    if x < 16.0 {
        let k = x.round() as u32;
        let ln_fact: f64 = (2..=k).map(|j| (j as f64).ln()).sum();
        return ln_fact - ((x + 0.5) * x.ln() - x + LN_SQRT_2PI);
    }
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))
}

/// `ln C(n, k)` for integer-valued `n, k`; `-∞` outside `0 ≤ k ≤ n`.
pub fn ln_choose(n: f64, k: f64) -> f64 {
    if k < 0.0 || k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0.0 || k == n {
        return 0.0;
    }
    let j = n - k;
    stirling_remainder(n) - stirling_remainder(k) - stirling_remainder(j) + k * (n / k).ln()
        - j * (-k / n).ln_1p()
        + 0.5 * (n.ln() - k.ln() - j.ln())
        - LN_SQRT_2PI
}

/// Running `ln Σ exp(x_i)` with compensated summation of the scaled terms.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    max: f64,
    sum: f64,
    comp: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            sum: 0.0,
            comp: 0.0,
        }
    }
}

impl LogSum {
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            let scale = (self.max - x).exp();
            self.sum *= scale;
            self.comp *= scale;
            self.max = x;
            self.push(1.0);
        } else {
            self.push((x - self.max).exp());
        }
    }

    fn push(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn ln(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + (self.sum + self.comp).ln()
        }
    }
}

// ---------------------------------------------------------------------------
// Sparse sets
// ---------------------------------------------------------------------------

/// Edge multiplier, kept as an exact ratio when one is known so that
/// `⌈α·i⌉` is computed without rounding error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Alpha {
    pub value: f64,
    pub ratio: Option<(u64, u64)>,
}

impl Alpha {
    pub fn ratio(num: u64, den: u64) -> Self {
        Alpha {
            value: num as f64 / den as f64,
            ratio: Some((num, den)),
        }
    }

    pub fn real(value: f64) -> Self {
        Alpha { value, ratio: None }
    }

    /// `⌈α·i⌉`.
    pub fn ceil_times(&self, i: u64) -> u64 {
        match self.ratio {
            Some((a, b)) => {
                let x = a as u128 * i as u128;
                x.div_ceil(b as u128) as u64
            }
            None => {
                let x = self.value * i as f64;
                let r = x.round();
                if (x - r).abs() <= 4.0 * f64::EPSILON * x.abs() {
                    r as u64
                } else {
                    x.ceil() as u64
                }
            }
        }
    }
}

/// Parameters of the sparse-set sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SparseSetsParams {
    /// Vertices of the random graph (`N`).
    pub vertices: f64,
    /// Reference size `n` in the normalisation `(i/n)^(α-1)`.
    pub scale_n: f64,
    pub p: f64,
    pub alpha: Alpha,
    /// Largest set size `t`.
    pub max_size: u64,
    /// Sizes below this form the head regime, the rest the tail.
    pub split: f64,
}

impl SparseSetsParams {
    /// `G(n, 64/n)`, sets of at most `196n/10^7` vertices and `12/7` edges per vertex.
    pub fn two_colour(n: f64) -> Self {
        SparseSetsParams {
            vertices: n,
            scale_n: n,
            p: 64.0 / n,
            alpha: Alpha::ratio(12, 7),
            max_size: (196.0 * n / 1e7).floor() as u64,
            split: n.sqrt(),
        }
    }

    /// `G(kn, c·ln k/n)` with `α = 2 ln k/(ln k + 2)` and sets of at most
    /// `2n/(c³·k·ln²k)` vertices. `k` is given through `ln k`.
    pub fn multicolour(n: f64, ln_k: f64, c: f64) -> Self {
        let k = ln_k.exp();
        let alpha = if ln_k.fract() == 0.0 && ln_k > 0.0 {
            Alpha::ratio(2 * ln_k as u64, ln_k as u64 + 2)
        } else {
            Alpha::real(2.0 * ln_k / (ln_k + 2.0))
        };
        SparseSetsParams {
            vertices: (k * n).round(),
            scale_n: n,
            p: c * ln_k / n,
            alpha,
            max_size: (2.0 * n / (c.powi(3) * k * ln_k * ln_k)).floor() as u64,
            split: n.sqrt(),
        }
    }

    pub fn validate(&self) -> Result<(), BoundsError> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(BoundsError::Probability(self.p));
        }
        if !(self.alpha.value > 1.0) {
            return Err(BoundsError::Alpha(self.alpha.value));
        }
        if !(self.vertices >= 1.0 && self.vertices.is_finite() && self.vertices.fract() == 0.0) {
            return Err(BoundsError::Size(format!("vertex count {}", self.vertices)));
        }
        if self.max_size as f64 > self.vertices {
            return Err(BoundsError::Size(format!(
                "largest set size {} exceeds vertex count {}",
                self.max_size, self.vertices
            )));
        }
        if !(self.scale_n > 0.0) {
            return Err(BoundsError::Size(format!("reference size {}", self.scale_n)));
        }
        Ok(())
    }

    /// `ln` of the `i`-th exact summand.
    pub fn ln_exact_summand(&self, i: u64) -> f64 {
        let k = self.alpha.ceil_times(i);
        let fi = i as f64;
        let pairs = fi * (fi - 1.0) / 2.0;
        if k as f64 > pairs {
            return f64::NEG_INFINITY;
        }
        ln_choose(self.vertices, fi) + ln_choose(pairs, k as f64) + ln_power(self.p, k as f64)
    }

    /// `ln` of the simplified bracket `(eN/i)(e·i·p/(2α))^α`; the `i`-th
    /// simplified summand is the bracket to the power `i`.
    pub fn ln_bracket(&self, i: u64) -> f64 {
        let fi = i as f64;
        let a = self.alpha.value;
        1.0 + (self.vertices / fi).ln() + a * (1.0 + (fi * self.p / (2.0 * a)).ln())
    }

    /// `ln` of the bracket divided by `(i/n)^(α-1)`. The ratio does not
    /// depend on `i`.
    pub fn ln_bracket_coefficient(&self) -> f64 {
        let i = self.max_size.max(1);
        self.ln_bracket(i) - (self.alpha.value - 1.0) * (i as f64 / self.scale_n).ln()
    }

    fn head_last(&self) -> u64 {
        // i < split  <=>  i <= ceil(split) - 1
        ((self.split.ceil() as u64).saturating_sub(1)).min(self.max_size)
    }
}

fn ln_power(base: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        0.0
    } else {
        exponent * base.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Head,
    Tail,
}

/// One evaluated summand. Bases are the `i`-th roots of the summands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummandRow {
    pub i: u64,
    pub edge_threshold: u64,
    pub regime: Regime,
    pub ln_exact: f64,
    pub ln_simplified: f64,
    pub exact_base: f64,
    pub simplified_base: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeSummary {
    pub first: u64,
    pub last: u64,
    /// `None` when the sum was sampled rather than summed.
    pub ln_total_exact: Option<f64>,
    pub ln_total_simplified: Option<f64>,
    /// `None` for an empty regime.
    pub max_exact_base: Option<f64>,
    pub max_simplified_base: Option<f64>,
}

impl RegimeSummary {
    fn new(first: u64, last: u64) -> Self {
        RegimeSummary {
            first,
            last,
            ln_total_exact: None,
            ln_total_simplified: None,
            max_exact_base: None,
            max_simplified_base: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.first > self.last
    }

    fn see(&mut self, exact_base: f64, simplified_base: f64) {
        let up = |slot: &mut Option<f64>, v: f64| {
            *slot = Some(slot.map_or(v, |s: f64| s.max(v)));
        };
        up(&mut self.max_exact_base, exact_base);
        up(&mut self.max_simplified_base, simplified_base);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseSetsReport {
    pub params: SparseSetsParams,
    /// Every `i ≤ t` was evaluated.
    pub exhaustive: bool,
    pub ln_total_exact: Option<f64>,
    pub ln_total_simplified: Option<f64>,
    pub bracket_coefficient: f64,
    pub head: RegimeSummary,
    pub tail: RegimeSummary,
    /// Exact summand ≤ simplified summand at every evaluated `i`.
    pub termwise_ok: bool,
    pub rows: Vec<SummandRow>,
}

impl SparseSetsReport {
    pub fn total(&self) -> Option<f64> {
        self.ln_total_exact.map(f64::exp)
    }
}

fn sample_sizes(t: u64, head_last: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (1..=t.min(64)).collect();
    let mut x = 64f64;
    while x < t as f64 {
        x = (x * 1.02).ceil();
        out.push((x as u64).min(t));
    }
    out.extend([head_last, head_last + 1, t]);
    out.retain(|&i| i >= 1 && i <= t);
    out.sort_unstable();
    out.dedup();
    out
}

fn le_with_slack(a: f64, b: f64) -> bool {
    a == f64::NEG_INFINITY || a <= b + 1e-12 * b.abs().max(1.0)
}

/// Evaluates the sparse-set union bound. Sums are exact over every `i` when
/// `t ≤ EXHAUSTIVE_TERMS`; beyond that only sampled rows and regime maxima
/// are reported (the simplified bracket grows with `i`, so its regime
/// maximum sits at the regime's last size, which is always sampled).
pub fn sparse_sets_bound(params: &SparseSetsParams) -> Result<SparseSetsReport, BoundsError> {
    params.validate()?;
    let t = params.max_size;
    let head_last = params.head_last();
    let mut head = RegimeSummary::new(1, head_last);
    let mut tail = RegimeSummary::new(head_last + 1, t);
    let exhaustive = t <= EXHAUSTIVE_TERMS;
    let mut termwise_ok = true;

    let eval = |i: u64| {
        let e = params.ln_exact_summand(i);
        let b = params.ln_bracket(i);
        let s = i as f64 * b;
        (e, s, (e / i as f64).exp(), b.exp())
    };

    let (mut totals, mut head_sums, mut tail_sums) = ([LogSum::default(); 2], [LogSum::default(); 2], [LogSum::default(); 2]);
    if exhaustive {
        for i in 1..=t {
            let (e, s, eb, sb) = eval(i);
            termwise_ok &= le_with_slack(e, s);
            let (sums, summary) = if i <= head_last {
                (&mut head_sums, &mut head)
            } else {
                (&mut tail_sums, &mut tail)
            };
            sums[0].add(e);
            sums[1].add(s);
            totals[0].add(e);
            totals[1].add(s);
            summary.see(eb, sb);
        }
        for (summary, sums) in [(&mut head, head_sums), (&mut tail, tail_sums)] {
            summary.ln_total_exact = Some(sums[0].ln());
            summary.ln_total_simplified = Some(sums[1].ln());
        }
    }

    let mut rows = Vec::new();
    for i in sample_sizes(t, head_last) {
        let (e, s, eb, sb) = eval(i);
        let regime = if i <= head_last { Regime::Head } else { Regime::Tail };
        if !exhaustive {
            termwise_ok &= le_with_slack(e, s);
            match regime {
                Regime::Head => head.see(eb, sb),
                Regime::Tail => tail.see(eb, sb),
            }
        }
        rows.push(SummandRow {
            i,
            edge_threshold: params.alpha.ceil_times(i),
            regime,
            ln_exact: e,
            ln_simplified: s,
            exact_base: eb,
            simplified_base: sb,
        });
    }

    Ok(SparseSetsReport {
        params: *params,
        exhaustive,
        ln_total_exact: exhaustive.then(|| totals[0].ln()),
        ln_total_simplified: exhaustive.then(|| totals[1].ln()),
        bracket_coefficient: params.ln_bracket_coefficient().exp(),
        head,
        tail,
        termwise_ok,
        rows,
    })
}

/// Simplified bracket at the largest set size of the multicolour setting,
/// as a continuous function of `c` (no rounding of sizes).
pub fn multicolour_tail_base(ln_k: f64, c: f64) -> f64 {
    let k = ln_k.exp();
    let a = 2.0 * ln_k / (ln_k + 2.0);
    let x = 2.0 / (c.powi(3) * k * ln_k * ln_k);
    let ln = 1.0 + ln_k - x.ln() + a * (1.0 + (c * x * ln_k / (2.0 * a)).ln());
    ln.exp()
}

/// Smallest `c` (to within a relative `1e-9`) for which
/// [`multicolour_tail_base`] is at most `target`, searched over `[1, 1e15]`.
/// The base falls with `c` only when `ln k > 6`.
pub fn min_c_for_multicolour_tail(ln_k: f64, target: f64) -> Option<f64> {
    if ln_k <= 6.0 {
        return None;
    }
    let ok = |c: f64| multicolour_tail_base(ln_k, c) <= target;
    let (mut lo, mut hi) = (0f64, 15f64 * std::f64::consts::LN_10);
    if ok(lo.exp()) {
        return Some(1.0);
    }
    if !ok(hi.exp()) {
        return None;
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if ok(mid.exp()) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi.exp())
}

// ---------------------------------------------------------------------------
// Cuts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutParams {
    pub vertices: f64,
    pub s: f64,
    pub t: f64,
    /// Edges required between the two sets.
    pub edge_threshold: f64,
    pub p: f64,
    /// The bound is reported as `base^unit`.
    pub exponent_unit: f64,
}

impl CutParams {
    /// `G(n, 64/n)` with `s = 21n/10^7`, `t = 175n/10^7`, `⌈95s/7⌉` edges;
    /// reported per vertex.
    pub fn two_colour(n: f64) -> Self {
        let s = (21.0 * n / 1e7).round();
        CutParams {
            vertices: n,
            s,
            t: (175.0 * n / 1e7).round(),
            edge_threshold: ((95 * s as u64).div_ceil(7)) as f64,
            p: 64.0 / n,
            exponent_unit: n,
        }
    }

    /// `G(kn, c·ln k/n)` with `s = n/(c³k ln³k)`, `t = 2n/(c³k ln²k)` and
    /// `⌈8s·ln k⌉` edges; reported per `2t`.
    pub fn multicolour(n: f64, ln_k: f64, c: f64) -> Self {
        let k = ln_k.exp();
        let base = n / (c.powi(3) * k);
        let s = (base / ln_k.powi(3)).round();
        let t = (2.0 * base / ln_k.powi(2)).round();
        CutParams {
            vertices: (k * n).round(),
            s,
            t,
            edge_threshold: (8.0 * s * ln_k).ceil(),
            p: c * ln_k / n,
            exponent_unit: 2.0 * t,
        }
    }

    pub fn validate(&self) -> Result<(), BoundsError> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(BoundsError::Probability(self.p));
        }
        let int = |x: f64| x >= 0.0 && x.is_finite() && x.fract() == 0.0;
        if !(int(self.vertices) && int(self.s) && int(self.t) && int(self.edge_threshold)) {
            return Err(BoundsError::Size("sizes must be non-negative integers".into()));
        }
        if self.s > self.vertices || self.t > self.vertices {
            return Err(BoundsError::Size(format!(
                "set sizes {} and {} exceed vertex count {}",
                self.s, self.t, self.vertices
            )));
        }
        if self.edge_threshold > self.s * self.t {
            return Err(BoundsError::Size(format!(
                "edge threshold {} exceeds s·t = {}",
                self.edge_threshold,
                self.s * self.t
            )));
        }
        if !(self.exponent_unit > 0.0) {
            return Err(BoundsError::Size(format!("exponent unit {}", self.exponent_unit)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutReport {
    pub params: CutParams,
    pub ln_bound: f64,
    /// `ln` of `(eN/s)^s (eN/t)^t (e·ts/m)^m p^m`.
    pub ln_simplified: f64,
    /// `exp(ln_bound / unit)`.
    pub base: f64,
    pub simplified_base: f64,
    /// Zero threshold or a bound of at least 1: says nothing.
    pub vacuous: bool,
}

fn ln_pow_ratio(x: f64, e_num: f64) -> f64 {
    // x·ln(e·num/x), zero when x = 0
    if x == 0.0 {
        0.0
    } else {
        x * (1.0 + (e_num / x).ln())
    }
}

pub fn cut_bound(params: &CutParams) -> Result<CutReport, BoundsError> {
    params.validate()?;
    let CutParams {
        vertices,
        s,
        t,
        edge_threshold: m,
        p,
        exponent_unit: unit,
    } = *params;
    let ln_p = ln_power(p, m);
    let ln_bound = ln_choose(vertices, s) + ln_choose(vertices, t) + ln_choose(t * s, m) + ln_p;
    let ln_simplified = ln_pow_ratio(s, vertices) + ln_pow_ratio(t, vertices) + ln_pow_ratio(m, t * s) + ln_p;
    Ok(CutReport {
        params: *params,
        ln_bound,
        ln_simplified,
        base: (ln_bound / unit).exp(),
        simplified_base: (ln_simplified / unit).exp(),
        vacuous: m == 0.0 || ln_bound >= 0.0,
    })
}

/// `ln` of the per-vertex base of the two-colour cut bound in closed form:
/// `(10^7 e/21)^(21/10^7) (10^7 e/175)^(175/10^7) (1225·64e/(95·10^7))^(95·21/(7·10^7))`.
pub fn two_colour_cut_closed_form_ln_base() -> f64 {
    let e = std::f64::consts::E;
    21e-7 * (1e7 * e / 21.0).ln() + 175e-7 * (1e7 * e / 175.0).ln()
        + (95.0 * 21.0 / 7e7) * (1225.0 * 64.0 * e / 95e7).ln()
}

/// Closed form `e³/(32·c·ln²k)` of the multicolour cut base.
pub fn multicolour_cut_closed_form_base(ln_k: f64, c: f64) -> f64 {
    std::f64::consts::E.powi(3) / (32.0 * c * ln_k * ln_k)
}

// ---------------------------------------------------------------------------
// Named evaluations with pass/fail thresholds
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundTarget {
    /// Sparse sets in `G(n, 64/n)`.
    SparseTwo,
    /// Dense cuts in `G(n, 64/n)`.
    CutTwo,
    /// Sparse sets in `G(kn, c·ln k/n)`.
    SparseMulti,
    /// Dense cuts in `G(kn, c·ln k/n)`.
    CutMulti,
}

impl BoundTarget {
    pub const ALL: [BoundTarget; 4] = [
        BoundTarget::SparseTwo,
        BoundTarget::CutTwo,
        BoundTarget::SparseMulti,
        BoundTarget::CutMulti,
    ];

    /// Smallest round size at which every regime is populated: the
    /// two-colour tail needs `196n/10^7 ≥ √n`, the multicolour one
    /// `2n/(c³k ln²k) ≥ √n`.
    pub fn default_n(self) -> f64 {
        match self {
            BoundTarget::SparseTwo => 1e12,
            BoundTarget::CutTwo => 1e10,
            BoundTarget::SparseMulti | BoundTarget::CutMulti => 1e30,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundTarget::SparseTwo => "sparse-two",
            BoundTarget::CutTwo => "cut-two",
            BoundTarget::SparseMulti => "sparse-multi",
            BoundTarget::CutMulti => "cut-multi",
        }
    }
}

impl std::str::FromStr for BoundTarget {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BoundTarget::ALL
            .into_iter()
            .find(|t| t.name() == s.replace('_', "-"))
            .ok_or_else(|| format!("unknown bound '{s}' (expected sparse-two, cut-two, sparse-multi or cut-multi)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Relation::Lt => value < threshold,
            Relation::Le => value <= threshold,
            Relation::Ge => value >= threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub quantity: &'static str,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl BoundCheck {
    fn new(quantity: &'static str, value: f64, relation: Relation, threshold: f64) -> Self {
        BoundCheck {
            quantity,
            value,
            relation,
            threshold,
            pass: relation.holds(value, threshold),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetReport {
    pub target: BoundTarget,
    pub n: f64,
    pub ln_k: Option<f64>,
    pub c: Option<f64>,
    pub checks: Vec<BoundCheck>,
    /// Smallest `c` meeting the multicolour tail threshold at this `ln k`.
    pub feasible_c: Option<f64>,
    pub sparse: Option<SparseSetsReport>,
    pub cut: Option<CutReport>,
}

impl TargetReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Evaluates one bound and compares its headline quantities against the
/// thresholds that make the union bound useful. `ln_k` and `c` only apply
/// to the multicolour targets. Cut bases are compared in log space.
pub fn evaluate_target(target: BoundTarget, n: f64, ln_k: f64, c: f64) -> Result<TargetReport, BoundsError> {
    let multi = matches!(target, BoundTarget::SparseMulti | BoundTarget::CutMulti);
    let mut report = TargetReport {
        target,
        n,
        ln_k: multi.then_some(ln_k),
        c: multi.then_some(c),
        checks: Vec::new(),
        feasible_c: None,
        sparse: None,
        cut: None,
    };
    let nan = f64::NAN;
    match target {
        BoundTarget::SparseTwo | BoundTarget::SparseMulti => {
            let params = if multi {
                SparseSetsParams::multicolour(n, ln_k, c)
            } else {
                SparseSetsParams::two_colour(n)
            };
            let r = sparse_sets_bound(&params)?;
            let tail = r.tail.max_simplified_base.unwrap_or(nan);
            if multi {
                report.checks.push(BoundCheck::new("tail_simplified_base", tail, Relation::Le, 0.5));
                report.feasible_c = min_c_for_multicolour_tail(ln_k, 0.5);
            } else {
                report.checks.extend([
                    BoundCheck::new("bracket_coefficient", r.bracket_coefficient, Relation::Le, 2280.0),
                    BoundCheck::new("bracket_coefficient", r.bracket_coefficient, Relation::Ge, 2000.0),
                    BoundCheck::new("tail_simplified_base", tail, Relation::Le, 0.99),
                ]);
            }
            report.checks.push(BoundCheck::new(
                "termwise_exact_le_simplified",
                if r.termwise_ok { 1.0 } else { 0.0 },
                Relation::Ge,
                1.0,
            ));
            report.sparse = Some(r);
        }
        BoundTarget::CutTwo | BoundTarget::CutMulti => {
            let params = if multi {
                CutParams::multicolour(n, ln_k, c)
            } else {
                CutParams::two_colour(n)
            };
            let r = cut_bound(&params)?;
            let ln_base = r.ln_bound / params.exponent_unit;
            if multi {
                report.checks.extend([
                    BoundCheck::new("ln_base", ln_base, Relation::Lt, 0.0),
                    BoundCheck::new("closed_form_base", multicolour_cut_closed_form_base(ln_k, c), Relation::Lt, 1.0),
                ]);
            } else {
                let target = (-1e-7f64).ln_1p();
                report.checks.extend([
                    BoundCheck::new("ln_base", ln_base, Relation::Lt, target),
                    BoundCheck::new("closed_form_ln_base", two_colour_cut_closed_form_ln_base(), Relation::Lt, target),
                ]);
            }
            report.checks.push(BoundCheck::new(
                "non_vacuous",
                if r.vacuous { 0.0 } else { 1.0 },
                Relation::Ge,
                1.0,
            ));
            report.cut = Some(r);
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Exact rational path
// ---------------------------------------------------------------------------

/// `ln x` for a positive rational, accurate to `f64` precision.
pub fn ln_rational(x: &BigRational) -> f64 {
    fn ln_int(v: &BigInt) -> f64 {
        let bits = v.bits();
        let shift = bits.saturating_sub(64);
        let top = (v >> shift).to_f64().expect("64-bit value fits f64");
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }
    if !x.is_positive() {
        return f64::NEG_INFINITY;
    }
    ln_int(x.numer()) - ln_int(x.denom())
}

fn binom(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for j in 0..k {
        acc = acc * (n - j) / (j + 1);
    }
    acc
}

fn exact_probability(p: f64) -> BigRational {
    BigRational::from_float(p).expect("finite probability")
}

fn small_vertices(v: f64) -> Result<u64, BoundsError> {
    if v <= 40.0 && v >= 0.0 && v.fract() == 0.0 {
        Ok(v as u64)
    } else {
        Err(BoundsError::TooLargeForRational)
    }
}

/// Exact value of the sparse-set sum for at most 40 vertices.
pub fn sparse_sets_total_rational(params: &SparseSetsParams) -> Result<BigRational, BoundsError> {
    params.validate()?;
    let n = small_vertices(params.vertices)?;
    let p = exact_probability(params.p);
    let mut total = BigRational::zero();
    for i in 1..=params.max_size {
        let k = params.alpha.ceil_times(i);
        let pairs = i * (i - 1) / 2;
        if k > pairs {
            continue;
        }
        let count = BigInt::from(binom(n, i) * binom(pairs, k));
        total += BigRational::from_integer(count) * num_traits::pow(p.clone(), k as usize);
    }
    Ok(total)
}

/// Exact value of the cut bound for at most 40 vertices.
pub fn cut_bound_rational(params: &CutParams) -> Result<BigRational, BoundsError> {
    params.validate()?;
    let n = small_vertices(params.vertices)?;
    let (s, t, m) = (params.s as u64, params.t as u64, params.edge_threshold as u64);
    let count = BigInt::from(binom(n, s) * binom(n, t) * binom(t * s, m));
    Ok(BigRational::from_integer(count) * num_traits::pow(exact_probability(params.p), m as usize))
}
