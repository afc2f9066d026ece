//! Information matrices for paired comparisons.
//!
//! Invariant designs have a block-diagonal information matrix with one
//! scalar per parameter block, [`BlockInfo`]. The dense brute-force matrix
//! ([`DenseInfo`], [`OrbitGram`]) exists to check the closed forms and is
//! never used by the optimizer.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::design_space::{
    count_pairs, difference_for_terms, enumerate_orbit, param_dims, ExplicitDesign, ModelSpec,
    PairSpace, ParamDims,
};
use crate::error::{DesignError, Result};
use crate::optimizer::DepthDesign;

pub type Rational = BigRational;

/// Largest parameter count the brute-force oracle accepts.
pub const ORACLE_MAX_PARAMS: usize = 500;
/// Largest number of pairs the brute-force oracle accepts.
pub const ORACLE_MAX_PAIRS: u128 = 10_000_000;

pub(crate) fn ratio(num: i128, den: i128) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub(crate) fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Closed-form information of an invariant design: h_r times the identity on
/// parameter block r, for r = 1..4.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockInfo<T = f64> {
    space: PairSpace,
    h: [T; 4],
}

impl<T> BlockInfo<T> {
    pub fn space(&self) -> PairSpace {
        self.space
    }

    /// The four block values (h1, h2, h3, h4).
    pub fn h(&self) -> &[T; 4] {
        &self.h
    }

    pub fn dims(&self) -> ParamDims {
        // h values are only ever built for K >= 4
        param_dims(self.space.k()).expect("BlockInfo always has K >= 4")
    }
}

impl BlockInfo<f64> {
    pub fn new(space: PairSpace, h: [f64; 4]) -> Result<Self> {
        param_dims(space.k())?;
        if h.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(DesignError::Validation(format!(
                "block values {h:?} must be finite and nonnegative"
            )));
        }
        Ok(BlockInfo { space, h })
    }

    pub fn zero_blocks(&self) -> Vec<usize> {
        (1..=4).filter(|r| self.h[r - 1] <= 0.0).collect()
    }

    pub fn is_nonsingular(&self) -> bool {
        self.zero_blocks().is_empty()
    }

    /// Σ_r p_r h_r.
    pub fn trace(&self) -> f64 {
        self.dims()
            .blocks()
            .iter()
            .zip(&self.h)
            .map(|(&p, h)| p as f64 * h)
            .sum()
    }

    /// Expands to the p×p block-diagonal matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let blocks = self.dims().blocks();
        let diag: Vec<f64> = blocks
            .iter()
            .zip(&self.h)
            .flat_map(|(&p, &h)| std::iter::repeat_n(h, p))
            .collect();
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))
    }
}

impl BlockInfo<Rational> {
    pub fn to_f64(&self) -> BlockInfo<f64> {
        BlockInfo {
            space: self.space,
            h: [
                rational_to_f64(&self.h[0]),
                rational_to_f64(&self.h[1]),
                rational_to_f64(&self.h[2]),
                rational_to_f64(&self.h[3]),
            ],
        }
    }

    pub fn zero_blocks(&self) -> Vec<usize> {
        (1..=4).filter(|r| !self.h[r - 1].is_positive()).collect()
    }

    pub fn is_nonsingular(&self) -> bool {
        self.zero_blocks().is_empty()
    }

    /// Serializable record with exact fraction strings.
    pub fn record(&self) -> BlockRecord {
        BlockRecord {
            k: self.space.k(),
            s: self.space.s(),
            h1: self.h[0].to_string(),
            h2: self.h[1].to_string(),
            h3: self.h[2].to_string(),
            h4: self.h[3].to_string(),
        }
    }
}

/// Wire form of a [`BlockInfo`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRecord {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "S")]
    pub s: usize,
    pub h1: String,
    pub h2: String,
    pub h3: String,
    pub h4: String,
}

impl TryFrom<&BlockRecord> for BlockInfo<Rational> {
    type Error = DesignError;

    fn try_from(rec: &BlockRecord) -> Result<Self> {
        let space = PairSpace::new(rec.k, rec.s)?;
        param_dims(rec.k)?;
        let parse = |s: &str| {
            s.parse::<Rational>()
                .map_err(|_| DesignError::Parse(format!("bad fraction {s:?}")))
        };
        Ok(BlockInfo {
            space,
            h: [
                parse(&rec.h1)?,
                parse(&rec.h2)?,
                parse(&rec.h3)?,
                parse(&rec.h4)?,
            ],
        })
    }
}

/// The quadratic factor of h3 and of the second-order term of V.
pub(crate) fn cubic_factor(s: i128, d: i128) -> i128 {
    3 * s * s - 6 * s * d + 4 * d * d - 3 * s + 2
}

/// The quadratic factor shared by h4 and the third-order term of V.
pub(crate) fn quartic_factor(s: i128, d: i128) -> i128 {
    2 * d * d - 2 * s * d + s * s - 3 * s + 4
}

/// Exact block values of the uniform design on depth `d`.
pub fn h_values(space: &impl AsRef<PairSpace>, d: usize) -> Result<BlockInfo<Rational>> {
    let space = *space.as_ref();
    param_dims(space.k())?;
    space.check_depth(d)?;
    let (k, s, d) = (space.k() as i128, space.s() as i128, d as i128);
    let h = [
        ratio(4 * d, k),
        ratio(8 * d * (s - d), k * (k - 1)),
        ratio(4 * d * cubic_factor(s, d), k * (k - 1) * (k - 2)),
        ratio(
            16 * d * (s - d) * quartic_factor(s, d),
            k * (k - 1) * (k - 2) * (k - 3),
        ),
    ];
    Ok(BlockInfo { space, h })
}

/// Floating-point table of h_r(d) for d = 0..=S, indexed `[d][r - 1]`.
pub(crate) fn h_table(space: &PairSpace) -> Result<Vec<[f64; 4]>> {
    (0..=space.s())
        .map(|d| h_values(space, d).map(|b| *b.to_f64().h()))
        .collect()
}

/// Block values of an invariant design: h_r = Σ_d w_d h_r(d).
pub fn mix_h(design: &DepthDesign) -> BlockInfo<f64> {
    let spec = design.spec();
    let table = h_table(&spec.space()).expect("DepthDesign carries a valid ModelSpec");
    let mut h = [0.0; 4];
    for (d, w) in design.iter() {
        for r in 0..4 {
            h[r] += w * table[d][r];
        }
    }
    BlockInfo {
        space: spec.space(),
        h,
    }
}

/// Exact mixture for rational weights on depths.
///
/// Weights must be nonnegative, sum to exactly 1, and sit on depths 1..=S.
pub fn mix_h_exact(spec: &ModelSpec, weights: &[(usize, Rational)]) -> Result<BlockInfo<Rational>> {
    let mut total = Rational::zero();
    let mut h = [
        Rational::zero(),
        Rational::zero(),
        Rational::zero(),
        Rational::zero(),
    ];
    for (d, w) in weights {
        if *d == 0 {
            return Err(DesignError::Validation(
                "depth 0 carries no information and cannot hold weight".into(),
            ));
        }
        if w.is_negative() {
            return Err(DesignError::Validation(format!(
                "negative weight {w} on depth {d}"
            )));
        }
        let hd = h_values(spec, *d)?;
        for (acc, x) in h.iter_mut().zip(&hd.h) {
            *acc += w * x;
        }
        total += w;
    }
    if total != ratio(1, 1) {
        return Err(DesignError::Validation(format!(
            "depth weights sum to {total}, not 1"
        )));
    }
    Ok(BlockInfo {
        space: spec.space(),
        h,
    })
}

/// Σ_r p_r ln h_r, or a singularity signal naming the zero blocks.
pub fn log_det(info: &BlockInfo<f64>) -> Result<f64> {
    let zero = info.zero_blocks();
    if !zero.is_empty() {
        return Err(DesignError::singular_blocks(zero));
    }
    Ok(info
        .dims()
        .blocks()
        .iter()
        .zip(info.h())
        .map(|(&p, h)| p as f64 * h.ln())
        .sum())
}

/// True iff every parameter block has positive information.
pub fn is_identifiable(design: &DepthDesign) -> bool {
    mix_h(design).is_nonsingular()
}

/// A dense information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseInfo {
    spec: ModelSpec,
    matrix: DMatrix<f64>,
}

impl DenseInfo {
    pub fn spec(&self) -> ModelSpec {
        self.spec
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.matrix.nrows();
        (0..n).all(|i| (0..i).all(|j| (self.matrix[(i, j)] - self.matrix[(j, i)]).abs() <= tol))
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Log-determinant by Cholesky factorization.
    pub fn log_det(&self) -> Result<f64> {
        let chol = self.cholesky()?;
        Ok(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
    }

    /// Quadratic form xᵀ M⁻¹ x.
    pub fn inverse_quadratic_form(&self, x: &[f64]) -> Result<f64> {
        let chol = self.cholesky()?;
        let v = nalgebra::DVector::from_column_slice(x);
        let sol = chol.solve(&v);
        Ok(v.dot(&sol))
    }

    fn cholesky(&self) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        // Relative pivot floor keeps rounding-level pivots from passing as PD.
        let scale = self.matrix.diagonal().amax().max(f64::MIN_POSITIVE);
        let chol = self
            .matrix
            .clone()
            .cholesky()
            .ok_or_else(|| DesignError::Singular {
                zero_blocks: vec![],
                detail: "information matrix is not positive definite".into(),
            })?;
        if chol.l().diagonal().iter().any(|&l| l * l <= 1e-12 * scale) {
            return Err(DesignError::Singular {
                zero_blocks: vec![],
                detail: "information matrix is numerically singular".into(),
            });
        }
        Ok(chol)
    }

    /// Row-major, tab-separated text with one row per line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for row in self.matrix.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(spec: ModelSpec, text: &str) -> Result<Self> {
        let p = spec.p();
        let values = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .flat_map(|l| l.split('\t'))
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| DesignError::Parse(format!("bad matrix entry {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != p * p {
            return Err(DesignError::Parse(format!(
                "expected {} entries for a {p}x{p} matrix, found {}",
                p * p,
                values.len()
            )));
        }
        Ok(DenseInfo {
            spec,
            matrix: DMatrix::from_row_slice(p, p, &values),
        })
    }
}

fn check_oracle_gate(spec: &ModelSpec, pairs: u128) -> Result<()> {
    if spec.p() > ORACLE_MAX_PARAMS {
        return Err(DesignError::OracleTooLarge(format!(
            "p={} exceeds the oracle limit of {ORACLE_MAX_PARAMS} parameters",
            spec.p()
        )));
    }
    if pairs > ORACLE_MAX_PAIRS {
        return Err(DesignError::OracleTooLarge(format!(
            "{pairs} pairs exceed the oracle limit of {ORACLE_MAX_PAIRS}"
        )));
    }
    Ok(())
}

/// Brute-force information matrix Σ w (f(i)-f(j))(f(i)-f(j))ᵀ.
pub fn info_matrix_exact(design: &ExplicitDesign) -> Result<DenseInfo> {
    let spec = design.spec();
    check_oracle_gate(&spec, design.entries().len() as u128)?;
    let terms = spec.terms();
    let p = spec.p();
    let mut m = DMatrix::<f64>::zeros(p, p);
    for (pair, w) in design.entries() {
        if *w == 0.0 {
            continue;
        }
        let delta = difference_for_terms(pair, &terms);
        let nz: Vec<(usize, f64)> = delta
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0)
            .map(|(i, v)| (i, f64::from(*v)))
            .collect();
        for &(a, va) in &nz {
            for &(b, vb) in &nz {
                m[(a, b)] += w * va * vb;
            }
        }
    }
    Ok(DenseInfo { spec, matrix: m })
}

/// Exact integer sum of Δ Δᵀ over one orbit, Δ = f(i) - f(j).
///
/// Dividing by `count` gives the information matrix of the uniform design on
/// the orbit in exact arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitGram {
    spec: ModelSpec,
    depth: usize,
    count: u128,
    sums: Vec<i64>,
}

impl OrbitGram {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn count(&self) -> u128 {
        self.count
    }

    pub fn sum(&self, row: usize, col: usize) -> i64 {
        self.sums[row * self.spec.p() + col]
    }

    /// Entry of the uniform-orbit information matrix as an exact fraction.
    pub fn entry(&self, row: usize, col: usize) -> Rational {
        if self.count == 0 {
            return Rational::zero();
        }
        Rational::new(BigInt::from(self.sum(row, col)), BigInt::from(self.count))
    }

    pub fn to_dense(&self) -> DenseInfo {
        let p = self.spec.p();
        let n = self.count.max(1) as f64;
        DenseInfo {
            spec: self.spec,
            matrix: DMatrix::from_fn(p, p, |r, c| self.sum(r, c) as f64 / n),
        }
    }

    /// Adds another partial sum over a disjoint chunk of the same orbit.
    pub fn merge(&mut self, other: &OrbitGram) {
        assert_eq!((self.spec, self.depth), (other.spec, other.depth));
        self.count += other.count;
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
    }
}

/// Accumulates the exact Gram sum over every pair of depth `d`.
pub fn orbit_gram(spec: &ModelSpec, d: usize) -> Result<OrbitGram> {
    let n = count_pairs(spec, d)?;
    check_oracle_gate(spec, n)?;
    gram_of_pairs(spec, d, enumerate_orbit(spec, d)?)
}

/// Gram sum over an arbitrary chunk of pairs of depth `d`.
pub fn gram_of_pairs(
    spec: &ModelSpec,
    d: usize,
    pairs: impl IntoIterator<Item = crate::design_space::ComparisonPair>,
) -> Result<OrbitGram> {
    let terms = spec.terms();
    let p = spec.p();
    let mut sums = vec![0i64; p * p];
    let mut count = 0u128;
    for pair in pairs {
        if pair.depth() != d {
            return Err(DesignError::Validation(format!(
                "pair {pair} has depth {}, expected {d}",
                pair.depth()
            )));
        }
        let delta = difference_for_terms(&pair, &terms);
        let nz: Vec<(usize, i64)> = delta
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0)
            .map(|(i, v)| (i, i64::from(*v)))
            .collect();
        for &(a, va) in &nz {
            let row = &mut sums[a * p..(a + 1) * p];
            for &(b, vb) in &nz {
                row[b] += va * vb;
            }
        }
        count += 1;
    }
    Ok(OrbitGram {
        spec: *spec,
        depth: d,
        count,
        sums,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn hv(k: usize, s: usize, d: usize) -> Vec<String> {
        h_values(&PairSpace::new(k, s).unwrap(), d)
            .unwrap()
            .h()
            .iter()
            .map(|q| q.to_string())
            .collect()
    }

    #[test]
    fn h_values_full_profiles_k4() {
        assert_eq!(hv(4, 4, 0), ["0", "0", "0", "0"]);
        assert_eq!(hv(4, 4, 1), ["1", "2", "3", "4"]);
        assert_eq!(hv(4, 4, 2), ["2", "8/3", "2", "0"]);
        assert_eq!(hv(4, 4, 4), ["4", "0", "4", "0"]);
    }

    #[test]
    fn h_values_rejects_bad_depth() {
        let space = PairSpace::new(4, 4).unwrap();
        assert!(matches!(h_values(&space, 5), Err(DesignError::Domain(_))));
        assert!(h_values(&PairSpace::new(3, 3).unwrap(), 1).is_err());
    }

    #[test]
    fn theorem4_mixture_is_flat() {
        let spec = ModelSpec::new(4, 4).unwrap();
        let w = [
            (1, frac("4/15")),
            (2, frac("2/5")),
            (3, frac("4/15")),
            (4, frac("1/15")),
        ];
        let mixed = mix_h_exact(&spec, &w).unwrap();
        for h in mixed.h() {
            assert_eq!(*h, frac("32/15"));
        }
    }

    #[test]
    fn mix_exact_validates() {
        let spec = ModelSpec::new(4, 4).unwrap();
        assert!(mix_h_exact(&spec, &[(1, frac("1/2"))]).is_err());
        assert!(mix_h_exact(&spec, &[(0, frac("1"))]).is_err());
        assert!(mix_h_exact(&spec, &[(1, frac("3/2")), (2, frac("-1/2"))]).is_err());
    }

    #[test]
    fn log_det_cases() {
        let space = PairSpace::new(4, 4).unwrap();
        let unit = BlockInfo::new(space, [1.0; 4]).unwrap();
        assert_eq!(log_det(&unit).unwrap(), 0.0);

        let d1 = h_values(&space, 1).unwrap().to_f64();
        assert!((log_det(&d1).unwrap() - 9.939_626_599_152).abs() < 1e-9);

        let d4 = h_values(&space, 4).unwrap().to_f64();
        match log_det(&d4) {
            Err(DesignError::Singular {
                zero_blocks,
                detail,
            }) => {
                assert_eq!(zero_blocks, vec![2, 4]);
                assert_eq!(detail, "h2=h4=0");
            }
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn dense_log_det_matches_block_form() {
        let spec = ModelSpec::new(4, 4).unwrap();
        let dense = orbit_gram(&spec, 1).unwrap().to_dense();
        assert!((dense.log_det().unwrap() - 9.939_626_599_152).abs() < 1e-9);
        let singular = orbit_gram(&spec, 4).unwrap().to_dense();
        assert!(singular.log_det().is_err());
    }

    #[test]
    fn single_pair_is_rank_one() {
        let spec = ModelSpec::new(4, 4).unwrap();
        let pair: crate::design_space::ComparisonPair = "1,1,1,1|1,-1,1,1".parse().unwrap();
        let delta = crate::design_space::difference_vector(&pair, &spec).unwrap();
        let design = ExplicitDesign::new(spec, vec![(pair, 1.0)]).unwrap();
        let m = info_matrix_exact(&design).unwrap();
        let expected: f64 = delta.iter().map(|&v| f64::from(v).powi(2)).sum();
        assert_eq!(m.trace(), expected);
        assert_eq!(m.matrix().rank(1e-9), 1);
    }

    #[test]
    fn tsv_round_trip() {
        let spec = ModelSpec::new(4, 4).unwrap();
        let dense = orbit_gram(&spec, 2).unwrap().to_dense();
        let back = DenseInfo::from_tsv(spec, &dense.to_tsv()).unwrap();
        assert_eq!(back, dense);
    }

    #[test]
    fn block_record_round_trip() {
        let info = h_values(&PairSpace::new(4, 4).unwrap(), 2).unwrap();
        let json = serde_json::to_string(&info.record()).unwrap();
        assert_eq!(
            json,
            r#"{"K":4,"S":4,"h1":"2","h2":"8/3","h3":"2","h4":"0"}"#
        );
        let rec: BlockRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(BlockInfo::try_from(&rec).unwrap(), info);
    }

    #[test]
    fn chunked_grams_merge() {
        let spec = ModelSpec::new(5, 4).unwrap();
        let all: Vec<_> = enumerate_orbit(&spec, 2).unwrap().collect();
        let (a, b) = all.split_at(all.len() / 3);
        let mut left = gram_of_pairs(&spec, 2, a.to_vec()).unwrap();
        left.merge(&gram_of_pairs(&spec, 2, b.to_vec()).unwrap());
        assert_eq!(left, orbit_gram(&spec, 2).unwrap());
    }
}
