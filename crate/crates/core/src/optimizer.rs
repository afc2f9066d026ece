//! Optimal comparison depths.
//!
//! The subset criteria pick the depth maximizing a single block value h_r(d).
//! For the whole parameter vector, [`optimize_full`] maximizes the concave
//! objective Φ(w) = Σ_r p_r ln(Σ_d w_d h_r(d)) over depth weights.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::design_space::{count_pairs, ModelSpec, PairSpace};
use crate::equivalence::{kw_certify, kw_certify_exact, Certificate, DEFAULT_KW_TOL};
use crate::error::{DesignError, Result};
use crate::information::{h_table, h_values, log_det, mix_h, ratio, rational_to_f64, Rational};

/// Largest denominator accepted when reading refined weights as fractions.
pub const MAX_FRACTION_DENOMINATOR: i64 = 10_000;

const PRUNE_THRESHOLD: f64 = 1e-8;
const INTERNAL_KW_TOL: f64 = 1e-9;
const LINE_SEARCH_TOL: f64 = 1e-12;
/// Away-step vertex direction runs until the excess drops below this
/// (relative to p), then Newton polishes on the support.
const SWITCH_TOL: f64 = 1e-5;

/// An invariant design: weights over comparison depths 1..=S.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthDesign {
    spec: ModelSpec,
    /// w_1..w_S
    weights: Vec<f64>,
}

impl DepthDesign {
    /// Builds a design from (depth, weight) entries; unlisted depths get 0.
    pub fn new(spec: ModelSpec, entries: &[(usize, f64)]) -> Result<Self> {
        let mut weights = vec![0.0; spec.s()];
        for &(d, w) in entries {
            if d == 0 || d > spec.s() {
                return Err(DesignError::Validation(format!(
                    "depth {d} outside 1..={}",
                    spec.s()
                )));
            }
            weights[d - 1] += w;
        }
        Self::from_weights(spec, weights)
    }

    /// Builds a design from the full vector w_1..w_S.
    pub fn from_weights(spec: ModelSpec, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != spec.s() {
            return Err(DesignError::Validation(format!(
                "expected {} depth weights, got {}",
                spec.s(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(DesignError::Validation(format!("invalid depth weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(DesignError::Validation(format!(
                "depth weights sum to {total}, not 1"
            )));
        }
        Ok(DepthDesign { spec, weights })
    }

    pub fn from_rationals(spec: ModelSpec, entries: &[(usize, Rational)]) -> Result<Self> {
        let mut total = Rational::zero();
        for (_, w) in entries {
            total += w;
        }
        if total != ratio(1, 1) || entries.iter().any(|(_, w)| w.is_negative()) {
            return Err(DesignError::Validation(format!(
                "rational depth weights must be nonnegative and sum to 1, got total {total}"
            )));
        }
        let floats: Vec<(usize, f64)> = entries
            .iter()
            .map(|(d, w)| (*d, rational_to_f64(w)))
            .collect();
        // rounding of individual fractions may leave a residue below 1e-15
        let mut design = Self::new_unnormalized(spec, &floats)?;
        let sum: f64 = design.weights.iter().sum();
        design.weights.iter_mut().for_each(|w| *w /= sum);
        Ok(design)
    }

    fn new_unnormalized(spec: ModelSpec, entries: &[(usize, f64)]) -> Result<Self> {
        let mut weights = vec![0.0; spec.s()];
        for &(d, w) in entries {
            if d == 0 || d > spec.s() {
                return Err(DesignError::Validation(format!(
                    "depth {d} outside 1..={}",
                    spec.s()
                )));
            }
            weights[d - 1] += w;
        }
        Ok(DepthDesign { spec, weights })
    }

    pub fn point_mass(spec: ModelSpec, d: usize) -> Result<Self> {
        Self::new(spec, &[(d, 1.0)])
    }

    pub fn spec(&self) -> ModelSpec {
        self.spec
    }

    /// w_1..w_S.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, d: usize) -> f64 {
        if d == 0 {
            0.0
        } else {
            self.weights.get(d - 1).copied().unwrap_or(0.0)
        }
    }

    /// (d, w_d) for d = 1..=S.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().enumerate().map(|(i, w)| (i + 1, *w))
    }

    /// Depths carrying positive weight, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(d, _)| d)
            .collect()
    }

    /// Φ(w) = ln det M, or a singularity signal.
    pub fn log_det(&self) -> Result<f64> {
        log_det(&mix_h(self))
    }
}

fn argmax_depths(space: &PairSpace, block: usize) -> Result<BTreeSet<usize>> {
    let values: Vec<Rational> = (1..=space.s())
        .map(|d| h_values(space, d).map(|b| b.h()[block].clone()))
        .collect::<Result<_>>()?;
    let best = values.iter().max().cloned().unwrap_or_else(Rational::zero);
    Ok(values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v == best)
        .map(|(i, _)| i + 1)
        .collect())
}

/// Best depth for the main effects alone: always the full depth S.
pub fn optimal_depth_main(space: &impl AsRef<PairSpace>) -> BTreeSet<usize> {
    BTreeSet::from([space.as_ref().s()])
}

/// Best depths for the first-order interactions: S/2, or both neighbours of
/// S/2 when S is odd.
pub fn optimal_depth_first_order(space: &impl AsRef<PairSpace>) -> BTreeSet<usize> {
    let s = space.as_ref().s();
    if s % 2 == 0 {
        BTreeSet::from([s / 2])
    } else {
        // S = 1 leaves only depth 1
        [(s - 1) / 2, s.div_ceil(2)]
            .into_iter()
            .filter(|&d| d >= 1)
            .collect()
    }
}

/// Best depths for the second-order interactions.
pub fn optimal_depth_second_order(space: &impl AsRef<PairSpace>) -> Result<BTreeSet<usize>> {
    match space.as_ref().s() {
        s if s < 3 => Err(DesignError::Domain(format!(
            "second-order interactions need S >= 3, got S={s}"
        ))),
        3 => Ok(BTreeSet::from([1, 3])),
        s => Ok(BTreeSet::from([s])),
    }
}

/// Full argmax set of h4(d) over d = 1..=S. The set is symmetric under
/// d -> S - d, so it usually holds two depths.
pub fn optimal_depth_third_order(space: &impl AsRef<PairSpace>) -> Result<BTreeSet<usize>> {
    let space = space.as_ref();
    if space.s() < 4 {
        return Err(DesignError::Domain(format!(
            "third-order interactions need S >= 4, got S={}",
            space.s()
        )));
    }
    argmax_depths(space, 3)
}

/// Argmax of h_r(d) over d = 1..=S, by exact evaluation.
pub fn argmax_block(space: &impl AsRef<PairSpace>, r: usize) -> Result<BTreeSet<usize>> {
    if !(1..=4).contains(&r) {
        return Err(DesignError::Domain(format!("block r={r} outside 1..=4")));
    }
    argmax_depths(space.as_ref(), r - 1)
}

/// The design uniform on every pair of nonzero depth: w_d ∝ N_d.
/// For K = S = 4 this is the D-optimal design.
pub fn uniform_on_all_pairs(spec: ModelSpec) -> Result<(DepthDesign, Vec<(usize, Rational)>)> {
    let counts: Vec<u128> = (1..=spec.s())
        .map(|d| count_pairs(&spec, d))
        .collect::<Result<_>>()?;
    let total: u128 = counts.iter().sum();
    let exact: Vec<(usize, Rational)> = counts
        .iter()
        .enumerate()
        .map(|(i, &n)| (i + 1, ratio(n as i128, total as i128)))
        .collect();
    Ok((DepthDesign::from_rationals(spec, &exact)?, exact))
}

/// Two-depth design d* = ⌊(S+1)/3⌋, d1* = S + 1 - d* with weights
/// d1*/(S+1) and d*/(S+1). Only defined for S >= 5.
pub fn conjectured_design(spec: ModelSpec) -> Result<(DepthDesign, Vec<(usize, Rational)>)> {
    let s = spec.s();
    if s < 5 {
        return Err(DesignError::Domain(format!(
            "the two-depth pattern needs S >= 5 (got S={s}); for S = 4 use uniform_on_all_pairs"
        )));
    }
    let low = (s + 1) / 3;
    let high = s + 1 - low;
    let exact = vec![
        (low, ratio(high as i128, (s + 1) as i128)),
        (high, ratio(low as i128, (s + 1) as i128)),
    ];
    Ok((DepthDesign::from_rationals(spec, &exact)?, exact))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimOptions {
    /// Relative KW tolerance for the reported certificate.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions {
            tol: DEFAULT_KW_TOL,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub design: DepthDesign,
    pub log_det: f64,
    /// max_d V(d) - p at the returned design.
    pub kw_excess: f64,
    pub iterations: usize,
    pub support: Vec<usize>,
    /// The weights read as fractions with denominator <= 10^4, when every
    /// weight admits one within 1e-9 and the fractions pass the KW check in
    /// exact arithmetic.
    pub exact_weights: Option<Vec<(usize, Rational)>>,
    pub certificate: Certificate,
}

impl OptimResult {
    /// Whether the fractional weights pass the KW check in exact arithmetic.
    pub fn exact_certified(&self) -> bool {
        match &self.exact_weights {
            Some(w) => kw_certify_exact(&self.design.spec(), w).unwrap_or(false),
            None => false,
        }
    }

    pub fn record(&self) -> OptimRecord {
        let spec = self.design.spec();
        OptimRecord {
            k: spec.k(),
            s: spec.s(),
            support: self.support.clone(),
            weights: self
                .support
                .iter()
                .map(|&d| self.design.weight(d))
                .collect(),
            logdet: self.log_det,
            kw_excess: self.kw_excess,
            certified: self.certificate.optimal,
        }
    }
}

/// Wire form of an [`OptimResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimRecord {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "S")]
    pub s: usize,
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
    pub logdet: f64,
    pub kw_excess: f64,
    pub certified: bool,
}

/// Objective state for the depth-weight problem.
struct Objective {
    /// h_r(d), indexed [d][r], d = 0..=S
    table: Vec<[f64; 4]>,
    blocks: [f64; 4],
    p: f64,
}

impl Objective {
    fn new(spec: &ModelSpec) -> Result<Self> {
        let blocks = spec.dims().blocks().map(|b| b as f64);
        Ok(Objective {
            table: h_table(&spec.space())?,
            blocks,
            p: spec.p() as f64,
        })
    }

    /// Mixed block values for weights w_1..w_S.
    fn mix(&self, w: &[f64]) -> [f64; 4] {
        let mut h = [0.0; 4];
        for (i, wd) in w.iter().enumerate() {
            for (acc, x) in h.iter_mut().zip(&self.table[i + 1]) {
                *acc += wd * x;
            }
        }
        h
    }

    fn phi(&self, h: &[f64; 4]) -> f64 {
        if h.iter().any(|v| *v <= 0.0) {
            return f64::NEG_INFINITY;
        }
        (0..4).map(|r| self.blocks[r] * h[r].ln()).sum()
    }

    /// ∂Φ/∂w_d = Σ_r p_r h_r(d) / h_r, which equals V(d).
    fn gradient(&self, h: &[f64; 4]) -> Vec<f64> {
        self.table[1..]
            .iter()
            .map(|hd| (0..4).map(|r| self.blocks[r] * hd[r] / h[r]).sum())
            .collect()
    }

    /// Maximizes Φ(h + α·dir) over α in [0, alpha_max] by bisection on the
    /// derivative. `dir` is the change in block values per unit step.
    fn line_search(&self, h: &[f64; 4], dir: &[f64; 4], alpha_max: f64) -> f64 {
        let slope = |a: f64| -> f64 {
            (0..4)
                .map(|r| {
                    let denom = h[r] + a * dir[r];
                    if denom <= 0.0 {
                        if dir[r] < 0.0 {
                            f64::NEG_INFINITY
                        } else {
                            f64::INFINITY
                        }
                    } else {
                        self.blocks[r] * dir[r] / denom
                    }
                })
                .sum()
        };
        if slope(alpha_max) >= 0.0 {
            return alpha_max;
        }
        let (mut lo, mut hi) = (0.0, alpha_max);
        while hi - lo > LINE_SEARCH_TOL * alpha_max.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if slope(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn block_direction(&self, v: &[f64]) -> [f64; 4] {
        self.mix(v)
    }
}

/// One away-step vertex-direction move. Returns false when no move improves.
fn vertex_direction_step(obj: &Objective, w: &mut [f64]) -> bool {
    let h = obj.mix(w);
    let grad = obj.gradient(&h);
    let n = w.len();
    let (toward, v_max) =
        grad.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &g)| if g > acc.1 { (i, g) } else { acc },
        );
    let (away, v_min) = grad.iter().enumerate().filter(|(i, _)| w[*i] > 0.0).fold(
        (0, f64::INFINITY),
        |acc, (i, &g)| if g < acc.1 { (i, g) } else { acc },
    );
    let gain_toward = v_max - obj.p;
    let gain_away = obj.p - v_min;

    let mut dir = vec![0.0; n];
    let alpha_max;
    let take_away = gain_away > gain_toward && w[away] < 1.0;
    if take_away {
        dir.copy_from_slice(w);
        dir[away] -= 1.0;
        alpha_max = w[away] / (1.0 - w[away]);
    } else {
        for i in 0..n {
            dir[i] = -w[i];
        }
        dir[toward] += 1.0;
        alpha_max = 1.0;
    }
    let hdir = obj.block_direction(&dir);
    let alpha = obj.line_search(&h, &hdir, alpha_max);
    if alpha <= 0.0 {
        return false;
    }
    for i in 0..n {
        w[i] += alpha * dir[i];
        if w[i] < 0.0 {
            w[i] = 0.0;
        }
    }
    if take_away && alpha == alpha_max {
        w[away] = 0.0;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    true
}

fn prune(w: &mut [f64]) {
    for x in w.iter_mut() {
        if *x < PRUNE_THRESHOLD {
            *x = 0.0;
        }
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
}

/// Damped Newton on Φ restricted to the current support and the simplex.
/// Returns the number of Newton steps taken.
fn newton_refine(obj: &Objective, w: &mut [f64], budget: usize) -> usize {
    let mut steps = 0;
    while steps < budget.min(100) {
        let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
        let m = support.len();
        if m <= 1 {
            return steps;
        }
        steps += 1;
        let h = obj.mix(w);
        let grad = obj.gradient(&h);
        // KKT system [Q -1; 1ᵀ 0] [Δ; λ] = [-g; 0]
        let mut kkt = DMatrix::<f64>::zeros(m + 1, m + 1);
        let mut rhs = DVector::<f64>::zeros(m + 1);
        for (a, &da) in support.iter().enumerate() {
            for (b, &db) in support.iter().enumerate() {
                kkt[(a, b)] = -(0..4)
                    .map(|r| {
                        obj.blocks[r] * obj.table[da + 1][r] * obj.table[db + 1][r] / (h[r] * h[r])
                    })
                    .sum::<f64>();
            }
            kkt[(a, m)] = -1.0;
            kkt[(m, a)] = 1.0;
            rhs[a] = -grad[da];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else {
            return steps;
        };
        let step: Vec<f64> = (0..m).map(|a| sol[a]).collect();
        if step.iter().all(|s| s.abs() < 1e-16) {
            return steps;
        }
        let phi0 = obj.phi(&h);
        let mut t = 1.0;
        // keep all supported weights positive
        for (a, &i) in support.iter().enumerate() {
            if step[a] < 0.0 {
                t = f64::min(t, 0.99 * w[i] / -step[a]);
            }
        }
        let mut accepted = false;
        while t > 1e-12 {
            let trial: Vec<f64> = {
                let mut x = w.to_vec();
                for (a, &i) in support.iter().enumerate() {
                    x[i] += t * step[a];
                }
                x
            };
            if obj.phi(&obj.mix(&trial)) >= phi0 - 1e-14 * phi0.abs().max(1.0) {
                w.copy_from_slice(&trial);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return steps;
        }
        for x in w.iter_mut() {
            if *x < PRUNE_THRESHOLD {
                *x = 0.0;
            }
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
    }
    steps
}

fn excess(obj: &Objective, w: &[f64]) -> f64 {
    let h = obj.mix(w);
    if h.iter().any(|v| *v <= 0.0) {
        return f64::INFINITY;
    }
    obj.gradient(&h)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
        - obj.p
}

/// Best rational approximation with denominator at most `max_den`.
pub fn best_fraction(x: f64, max_den: i64) -> (i64, i64) {
    // continued fraction convergents with a final semiconvergent
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut rem = x;
    loop {
        let a = rem.floor();
        let ai = a as i64;
        let q2 = ai.saturating_mul(q1).saturating_add(q0);
        if q2 > max_den {
            let k = (max_den - q0) / q1.max(1);
            let (ps, qs) = (p0 + k * p1, q0 + k * q1);
            let better_semi = (x - ps as f64 / qs as f64).abs() < (x - p1 as f64 / q1 as f64).abs();
            return if better_semi && qs > 0 {
                (ps, qs)
            } else {
                (p1, q1)
            };
        }
        let p2 = ai * p1 + p0;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = rem - a;
        if frac.abs() < 1e-15 || (x - p1 as f64 / q1 as f64).abs() < 1e-15 {
            return (p1, q1);
        }
        rem = 1.0 / frac;
    }
}

fn rationalize(design: &DepthDesign) -> Option<Vec<(usize, Rational)>> {
    let mut out = Vec::new();
    let mut total = Rational::zero();
    for (d, w) in design.iter().filter(|(_, w)| *w > 0.0) {
        let (num, den) = best_fraction(w, MAX_FRACTION_DENOMINATOR);
        if (w - num as f64 / den as f64).abs() > 1e-9 {
            return None;
        }
        let q = ratio(num.into(), den.into());
        total += &q;
        out.push((d, q));
    }
    if total != ratio(1, 1) {
        return None;
    }
    // a fraction within 1e-9 can be a coincidence; keep only exact optima
    kw_certify_exact(&design.spec(), &out)
        .unwrap_or(false)
        .then_some(out)
}

/// D-optimal depth weights for the full parameter vector.
///
/// Away-step vertex direction ascent with exact line search, then pruning
/// and damped Newton polishing on the support. The polished design must pass
/// the KW check at an internal tolerance of 1e-9·p; otherwise the ascent
/// resumes from it.
pub fn optimize_full(spec: ModelSpec, options: OptimOptions) -> Result<OptimResult> {
    let obj = Objective::new(&spec)?;
    let s = spec.s();
    let mut w = vec![0.0; s];
    let init = (s - 1).max(1);
    for x in w.iter_mut().take(init) {
        *x = 1.0 / init as f64;
    }

    let mut iterations = 0;
    let mut best = w.clone();
    let mut best_excess = excess(&obj, &w);
    loop {
        while iterations < options.max_iter && excess(&obj, &w) > SWITCH_TOL * obj.p {
            iterations += 1;
            if !vertex_direction_step(&obj, &mut w) {
                break;
            }
        }
        prune(&mut w);
        iterations += newton_refine(&obj, &mut w, options.max_iter.saturating_sub(iterations));
        let current = excess(&obj, &w);
        if current < best_excess {
            best_excess = current;
            best = w.clone();
        }
        if current <= INTERNAL_KW_TOL * obj.p {
            break;
        }
        if iterations >= options.max_iter {
            let design = DepthDesign::from_weights(spec, best.clone())?;
            let cert_excess = kw_certify(&design, options.tol).map(|c| c.max_excess);
            if let Ok(e) = cert_excess {
                if e <= options.tol * obj.p {
                    break;
                }
            }
            return Err(DesignError::NonConvergence {
                iterations,
                excess: best_excess,
                best_weights: best,
            });
        }
        // resume ascent; one forced step re-admits the most violated depth
        iterations += 1;
        if !vertex_direction_step(&obj, &mut w) {
            return Err(DesignError::NonConvergence {
                iterations,
                excess: best_excess,
                best_weights: best,
            });
        }
    }
    let w = if excess(&obj, &w) <= best_excess {
        w
    } else {
        best
    };

    let design = DepthDesign::from_weights(spec, w)?;
    let certificate = kw_certify(&design, options.tol)?;
    let support = design.support();
    if support.len() > 4 {
        return Err(DesignError::Validation(format!(
            "certified design uses {} depths, more than the bound of four",
            support.len()
        )));
    }
    let exact_weights = rationalize(&design);
    Ok(OptimResult {
        log_det: design.log_det()?,
        kw_excess: certificate.max_excess,
        iterations,
        support,
        exact_weights,
        certificate,
        design,
    })
}
