//! Variance functions and Kiefer–Wolfowitz certification.
//!
//! For an invariant design the variance function is constant on each depth
//! orbit, so D-optimality reduces to checking V(d) <= p for d = 1..=S.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::design_space::{difference_for_terms, ComparisonPair, ExplicitDesign, ModelSpec};
use crate::error::{DesignError, Result};
use crate::information::{
    cubic_factor, info_matrix_exact, mix_h, mix_h_exact, quartic_factor, ratio, BlockInfo,
    DenseInfo, Rational,
};
use crate::optimizer::DepthDesign;

/// Default relative tolerance for reported certification.
pub const DEFAULT_KW_TOL: f64 = 1e-6;

/// Ties in the argmax of V are resolved at this absolute tolerance.
const ARGMAX_TOL: f64 = 1e-9;

/// V(d, ξ) for d = 1..=S.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceProfile {
    pub values: BTreeMap<usize, f64>,
    pub p: usize,
    pub max_value: f64,
    pub argmax_depths: Vec<usize>,
}

impl VarianceProfile {
    fn from_values(values: BTreeMap<usize, f64>, p: usize) -> Self {
        let max_value = values.values().copied().fold(f64::NEG_INFINITY, f64::max);
        let argmax_depths = values
            .iter()
            .filter(|(_, v)| max_value - **v <= ARGMAX_TOL)
            .map(|(d, _)| *d)
            .collect();
        VarianceProfile {
            values,
            p,
            max_value,
            argmax_depths,
        }
    }

    /// V(d); depth 0 is defined as 0.
    pub fn at(&self, d: usize) -> f64 {
        self.values.get(&d).copied().unwrap_or(0.0)
    }

    /// V(d)/p by depth.
    pub fn normalized(&self) -> Vec<(usize, f64)> {
        self.values
            .iter()
            .map(|(d, v)| (*d, v / self.p as f64))
            .collect()
    }
}

/// The closed-form variance at depth `d` for block values `info`.
///
/// The block values must be positive.
pub fn variance_at(info: &BlockInfo<f64>, d: usize) -> f64 {
    let s = info.space().s() as f64;
    let [h1, h2, h3, h4] = *info.h();
    let si = info.space().s() as i128;
    let di = d as i128;
    let df = d as f64;
    4.0 * df
        * (1.0 / h1
            + (s - df) / h2
            + cubic_factor(si, di) as f64 / (6.0 * h3)
            + (s - df) * quartic_factor(si, di) as f64 / (6.0 * h4))
}

fn ensure_nonsingular(info: &BlockInfo<f64>) -> Result<()> {
    let zero = info.zero_blocks();
    if zero.is_empty() {
        Ok(())
    } else {
        Err(DesignError::singular_blocks(zero))
    }
}

/// Variance function of an invariant design at every depth 1..=S.
pub fn variance_profile(design: &DepthDesign) -> Result<VarianceProfile> {
    let info = mix_h(design);
    ensure_nonsingular(&info)?;
    let spec = design.spec();
    let values = (1..=spec.s()).map(|d| (d, variance_at(&info, d))).collect();
    Ok(VarianceProfile::from_values(values, spec.p()))
}

/// Exact variance function for rational depth weights, indexed by depth 1..=S.
pub fn variance_profile_exact(
    spec: &ModelSpec,
    weights: &[(usize, Rational)],
) -> Result<BTreeMap<usize, Rational>> {
    let info = mix_h_exact(spec, weights)?;
    let zero = info.zero_blocks();
    if !zero.is_empty() {
        return Err(DesignError::singular_blocks(zero));
    }
    let [h1, h2, h3, h4] = info.h();
    let s = spec.s() as i128;
    Ok((1..=spec.s())
        .map(|d| {
            let di = d as i128;
            let six = ratio(6, 1);
            let bracket = ratio(1, 1) / h1
                + ratio(s - di, 1) / h2
                + ratio(cubic_factor(s, di), 1) / (&six * h3)
                + ratio((s - di) * quartic_factor(s, di), 1) / (&six * h4);
            (d, ratio(4 * di, 1) * bracket)
        })
        .collect())
}

/// V(d, ξ_{d'}) for the uniform design on a single depth `d_prime`.
pub fn variance_uniform(d: usize, d_prime: usize, spec: &ModelSpec) -> Result<f64> {
    let s = spec.s();
    for (name, v) in [("d", d), ("d'", d_prime)] {
        if v == 0 || v > s {
            return Err(DesignError::Domain(format!("{name}={v} outside 1..={s}")));
        }
    }
    let (si, di, dpi) = (s as i128, d as i128, d_prime as i128);
    let q_prime = quartic_factor(si, dpi);
    let mut zero_blocks = Vec::new();
    if si == dpi {
        zero_blocks.push(2);
    }
    if si == dpi || q_prime == 0 {
        zero_blocks.push(4);
    }
    if !zero_blocks.is_empty() {
        return Err(DesignError::singular_blocks(zero_blocks));
    }
    let dims = spec.dims();
    let (p1, p2, p3, p4) = (
        dims.p1 as f64,
        dims.p2 as f64,
        dims.p3 as f64,
        dims.p4 as f64,
    );
    let bracket = p1
        + p2 * (si - di) as f64 / (si - dpi) as f64
        + p3 * cubic_factor(si, di) as f64 / cubic_factor(si, dpi) as f64
        + p4 * ((si - di) * quartic_factor(si, di)) as f64 / ((si - dpi) * q_prime) as f64;
    Ok(d as f64 / d_prime as f64 * bracket)
}

/// Dense variance function (f(i)-f(j))ᵀ M⁻¹ (f(i)-f(j)) for an explicit design.
pub fn variance_exact(pair: &ComparisonPair, design: &ExplicitDesign) -> Result<f64> {
    ExactVariance::new(design)?.at(pair)
}

/// Dense variance function with the information matrix factorized once.
pub struct ExactVariance {
    spec: ModelSpec,
    terms: Vec<Vec<usize>>,
    info: DenseInfo,
}

impl ExactVariance {
    pub fn new(design: &ExplicitDesign) -> Result<Self> {
        let info = info_matrix_exact(design)?;
        Self::from_info(info)
    }

    pub fn from_info(info: DenseInfo) -> Result<Self> {
        // fail early on singular matrices
        info.log_det()?;
        let spec = info.spec();
        Ok(ExactVariance {
            spec,
            terms: spec.terms(),
            info,
        })
    }

    pub fn at(&self, pair: &ComparisonPair) -> Result<f64> {
        pair.validate(&self.spec)?;
        if pair.depth() == 0 {
            return Ok(0.0);
        }
        let delta: Vec<f64> = difference_for_terms(pair, &self.terms)
            .into_iter()
            .map(f64::from)
            .collect();
        self.info.inverse_quadratic_form(&delta)
    }
}

/// Outcome of a Kiefer–Wolfowitz check on an invariant design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "S")]
    pub s: usize,
    /// Depth weights w_1..w_S.
    pub weights: Vec<f64>,
    #[serde(rename = "V")]
    pub variance: VarianceProfile,
    pub p: usize,
    /// max_d V(d) - p.
    pub max_excess: f64,
    pub tol: f64,
    /// True iff max excess <= tol·p.
    pub optimal: bool,
    /// True iff every supported depth has |V(d) - p| <= tol·p.
    pub support_condition: bool,
    pub verdict: String,
}

impl Certificate {
    /// Table layout: one row of V(d)/p at 3 decimals, supported depths starred.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:>4}", "d");
        for d in 1..=self.s {
            let _ = write!(out, "{d:>8}");
        }
        out.push('\n');
        let _ = write!(out, "{:>4}", "V/p");
        for (d, v) in self.variance.normalized() {
            let mark = if self.weights[d - 1] > 0.0 { "*" } else { " " };
            let _ = write!(out, "{:>7.3}{mark}", v);
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
        out
    }
}

/// Certifies D-optimality of an invariant design: optimal iff
/// max_d V(d) - p <= tol·p. Singular designs are an error, never "not optimal".
pub fn kw_certify(design: &DepthDesign, tol: f64) -> Result<Certificate> {
    let spec = design.spec();
    let variance = variance_profile(design)?;
    let p = spec.p() as f64;
    let max_excess = variance.max_value - p;
    let optimal = max_excess <= tol * p;
    let support_condition = design
        .support()
        .iter()
        .all(|&d| (variance.at(d) - p).abs() <= tol * p);
    let verdict = if optimal {
        "D-optimal".to_string()
    } else {
        "not optimal".to_string()
    };
    Ok(Certificate {
        k: spec.k(),
        s: spec.s(),
        weights: design.weights().to_vec(),
        variance,
        p: spec.p(),
        max_excess,
        tol,
        optimal,
        support_condition,
        verdict,
    })
}

/// Exact check: V(d) <= p at every depth and V(d) = p on the support.
pub fn kw_certify_exact(spec: &ModelSpec, weights: &[(usize, Rational)]) -> Result<bool> {
    let values = variance_profile_exact(spec, weights)?;
    let p = ratio(spec.p() as i128, 1);
    let bounded = values.values().all(|v| *v <= p);
    let flat = weights
        .iter()
        .filter(|(_, w)| !w.is_zero())
        .all(|(d, _)| values[d] == p);
    Ok(bounded && flat)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(k: usize, s: usize, w: &[(usize, f64)]) -> DepthDesign {
        DepthDesign::new(ModelSpec::new(k, s).unwrap(), w).unwrap()
    }

    #[test]
    fn four_attribute_design_is_flat() {
        let des = design(
            4,
            4,
            &[(1, 4.0 / 15.0), (2, 0.4), (3, 4.0 / 15.0), (4, 1.0 / 15.0)],
        );
        let prof = variance_profile(&des).unwrap();
        for d in 1..=4 {
            assert!((prof.at(d) - 15.0).abs() < 1e-10);
        }
        assert_eq!(prof.argmax_depths, vec![1, 2, 3, 4]);
        let cert = kw_certify(&des, DEFAULT_KW_TOL).unwrap();
        assert!(cert.optimal && cert.support_condition);
        assert!(cert.max_excess.abs() < 1e-10);
    }

    #[test]
    fn four_attribute_design_is_flat_exactly() {
        let spec = ModelSpec::new(4, 4).unwrap();
        let w: Vec<(usize, Rational)> = [(1, "4/15"), (2, "2/5"), (3, "4/15"), (4, "1/15")]
            .into_iter()
            .map(|(d, q)| (d, q.parse().unwrap()))
            .collect();
        let v = variance_profile_exact(&spec, &w).unwrap();
        assert!(v.values().all(|x| *x == ratio(15, 1)));
        assert!(kw_certify_exact(&spec, &w).unwrap());
    }

    #[test]
    fn table3_rows_k5_k8() {
        let rows = [
            (
                5,
                vec![(2, 2.0 / 3.0), (4, 1.0 / 3.0)],
                vec![0.938, 1.0, 0.938, 1.0, 0.938],
            ),
            (
                8,
                vec![(3, 2.0 / 3.0), (6, 1.0 / 3.0)],
                vec![0.759, 0.998, 1.0, 0.954, 0.954, 1.0, 0.998, 0.759],
            ),
        ];
        for (k, w, expected) in rows {
            let prof = variance_profile(&design(k, k, &w)).unwrap();
            for (d, v) in prof.normalized() {
                assert!((v - expected[d - 1]).abs() <= 5e-4, "K={k} d={d} got {v}");
            }
        }
    }

    #[test]
    fn uniform_variance_equals_p_on_own_depth() {
        let spec = ModelSpec::new(7, 6).unwrap();
        for d in [1, 2, 4, 5] {
            assert!((variance_uniform(d, d, &spec).unwrap() - spec.p() as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_variance_matches_point_mass_profile() {
        let spec = ModelSpec::new(5, 5).unwrap();
        let prof = variance_profile(&DepthDesign::point_mass(spec, 1).unwrap()).unwrap();
        assert!((variance_uniform(5, 1, &spec).unwrap() - prof.at(5)).abs() < 1e-9);
    }

    #[test]
    fn uniform_variance_singular_cases() {
        let spec = ModelSpec::new(4, 4).unwrap();
        assert!(matches!(
            variance_uniform(1, 2, &spec),
            Err(DesignError::Singular { ref zero_blocks, .. }) if zero_blocks == &vec![4]
        ));
        assert!(matches!(
            variance_uniform(1, 4, &spec),
            Err(DesignError::Singular { ref zero_blocks, .. }) if zero_blocks == &vec![2, 4]
        ));
        assert!(matches!(
            variance_uniform(0, 1, &spec),
            Err(DesignError::Domain(_))
        ));
    }

    #[test]
    fn singular_design_is_an_error_not_a_verdict() {
        let des = DepthDesign::point_mass(ModelSpec::new(4, 4).unwrap(), 4).unwrap();
        assert!(matches!(
            kw_certify(&des, 1e-6),
            Err(DesignError::Singular { .. })
        ));
    }

    #[test]
    fn single_depth_two_is_not_optimal_for_five() {
        let des = DepthDesign::point_mass(ModelSpec::new(5, 5).unwrap(), 2).unwrap();
        let cert = kw_certify(&des, DEFAULT_KW_TOL).unwrap();
        assert!(!cert.optimal);
        assert!(cert.variance.at(4) > 30.0);
        assert!(cert.max_excess > 0.0);
    }

    #[test]
    fn depth_zero_pair_has_zero_variance() {
        let spec = ModelSpec::new(4, 4).unwrap();
        let des = ExplicitDesign::uniform_on_orbit(spec, 1).unwrap();
        let pair: ComparisonPair = "1,1,-1,1|1,1,-1,1".parse().unwrap();
        assert_eq!(variance_exact(&pair, &des).unwrap(), 0.0);
    }

    #[test]
    fn certificate_table_marks_support() {
        let cert = kw_certify(&design(5, 5, &[(2, 2.0 / 3.0), (4, 1.0 / 3.0)]), 1e-6).unwrap();
        let table = cert.table();
        assert!(
            table.ends_with("  0.938   1.000*  0.938   1.000*  0.938\n"),
            "{table:?}"
        );
    }
}
