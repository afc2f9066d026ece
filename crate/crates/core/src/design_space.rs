//! Alternatives, comparison pairs and the depth-partitioned design region.
//!
//! Levels are kept as `i8` in {-1, 0, +1} everywhere; they only become
//! floating point inside matrix arithmetic. A level of 0 marks an attribute
//! that is not shown in a partial profile.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use num_integer::binomial;
use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Result};

/// Largest attribute count accepted for enumeration. Sign patterns are
/// enumerated with a `u64` mask.
pub const MAX_ATTRIBUTES: usize = 63;

/// The geometry of the design region: `k` two-level attributes of which
/// exactly `s` are shown in every alternative.
///
/// Unlike [`ModelSpec`] this carries no identifiability requirement, so it
/// also describes the small regions (S < 4) used by the subset criteria and
/// by enumeration tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairSpace {
    k: usize,
    s: usize,
}

impl PairSpace {
    pub fn new(k: usize, s: usize) -> Result<Self> {
        if s == 0 || s > k {
            return Err(DesignError::Dimension(format!(
                "profile strength S={s} must satisfy 1 <= S <= K={k}"
            )));
        }
        if k > MAX_ATTRIBUTES {
            return Err(DesignError::Dimension(format!(
                "K={k} exceeds the supported maximum of {MAX_ATTRIBUTES} attributes"
            )));
        }
        Ok(PairSpace { k, s })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub(crate) fn check_depth(&self, d: usize) -> Result<()> {
        if d > self.s {
            return Err(DesignError::Domain(format!(
                "comparison depth d={d} outside 0..={}",
                self.s
            )));
        }
        Ok(())
    }
}

impl AsRef<PairSpace> for PairSpace {
    fn as_ref(&self) -> &PairSpace {
        self
    }
}

/// Dimensions of the four parameter blocks (main effects, first-, second-
/// and third-order interactions) and their total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamDims {
    pub p1: usize,
    pub p2: usize,
    pub p3: usize,
    pub p4: usize,
    pub p: usize,
}

impl ParamDims {
    /// Block sizes as an array indexed by `r - 1`.
    pub fn blocks(&self) -> [usize; 4] {
        [self.p1, self.p2, self.p3, self.p4]
    }
}

/// Parameter block dimensions for `k` attributes.
pub fn param_dims(k: usize) -> Result<ParamDims> {
    if k < 4 {
        return Err(DesignError::Dimension(format!(
            "K={k} attributes leave the third-order interaction block empty; \
             the model needs K >= 4 and profile strength S >= 4 for identifiability"
        )));
    }
    let p1 = k;
    let p2 = k * (k - 1) / 2;
    let p3 = k * (k - 1) * (k - 2) / 6;
    let p4 = k * (k - 1) * (k - 2) * (k - 3) / 24;
    Ok(ParamDims {
        p1,
        p2,
        p3,
        p4,
        p: p1 + p2 + p3 + p4,
    })
}

/// Problem dimensions of the third-order interactions model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct ModelSpec {
    space: PairSpace,
    dims: ParamDims,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "S")]
    s: usize,
}

impl TryFrom<RawSpec> for ModelSpec {
    type Error = DesignError;

    fn try_from(raw: RawSpec) -> Result<Self> {
        ModelSpec::new(raw.k, raw.s)
    }
}

impl From<ModelSpec> for RawSpec {
    fn from(spec: ModelSpec) -> Self {
        RawSpec {
            k: spec.k(),
            s: spec.s(),
        }
    }
}

impl ModelSpec {
    pub fn new(k: usize, s: usize) -> Result<Self> {
        let dims = param_dims(k)?;
        if s < 4 {
            return Err(DesignError::Dimension(format!(
                "profile strength S={s} < 4: third-order interactions are not identifiable"
            )));
        }
        let space = PairSpace::new(k, s)?;
        Ok(ModelSpec { space, dims })
    }

    pub fn k(&self) -> usize {
        self.space.k
    }

    pub fn s(&self) -> usize {
        self.space.s
    }

    pub fn dims(&self) -> ParamDims {
        self.dims
    }

    pub fn p(&self) -> usize {
        self.dims.p
    }

    pub fn space(&self) -> PairSpace {
        self.space
    }

    /// Index tuples of all model terms in column order: each block sorted
    /// lexicographically, blocks ordered mains, pairs, triples, quads.
    pub fn terms(&self) -> Vec<Vec<usize>> {
        (1..=4)
            .flat_map(|r| (0..self.k()).combinations(r))
            .collect()
    }
}

impl AsRef<PairSpace> for ModelSpec {
    fn as_ref(&self) -> &PairSpace {
        &self.space
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K={} S={}", self.k(), self.s())
    }
}

/// One alternative: a level vector over {-1, 0, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Profile {
    levels: Vec<i8>,
}

impl Profile {
    /// Builds a profile, checking only that every level is -1, 0 or +1.
    pub fn new(levels: Vec<i8>) -> Result<Self> {
        if let Some(bad) = levels.iter().find(|&&l| !(-1..=1).contains(&l)) {
            return Err(DesignError::Validation(format!(
                "level {bad} is not one of -1, 0, 1"
            )));
        }
        Ok(Profile { levels })
    }

    /// Builds a profile and checks it against the region's K and S.
    pub fn in_space(levels: Vec<i8>, space: &impl AsRef<PairSpace>) -> Result<Self> {
        let profile = Profile::new(levels)?;
        profile.validate(space)?;
        Ok(profile)
    }

    pub fn validate(&self, space: &impl AsRef<PairSpace>) -> Result<()> {
        let space = space.as_ref();
        if self.levels.len() != space.k {
            return Err(DesignError::Validation(format!(
                "profile has {} levels, expected K={}",
                self.levels.len(),
                space.k
            )));
        }
        if self.strength() != space.s {
            return Err(DesignError::Validation(format!(
                "profile shows {} attributes, expected S={}",
                self.strength(),
                space.s
            )));
        }
        Ok(())
    }

    pub fn levels(&self) -> &[i8] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Number of attributes shown (nonzero levels).
    pub fn strength(&self) -> usize {
        self.levels.iter().filter(|&&l| l != 0).count()
    }

    fn same_support(&self, other: &Profile) -> bool {
        self.levels.len() == other.levels.len()
            && self
                .levels
                .iter()
                .zip(&other.levels)
                .all(|(a, b)| (*a == 0) == (*b == 0))
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.levels.iter().join(","))
    }
}

impl FromStr for Profile {
    type Err = DesignError;

    fn from_str(s: &str) -> Result<Self> {
        let levels = s
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<i8>()
                    .map_err(|_| DesignError::Parse(format!("bad level {tok:?} in profile {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Profile::new(levels)
    }
}

/// An ordered pair of alternatives shown on the same attributes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComparisonPair {
    first: Profile,
    second: Profile,
    depth: usize,
}

impl ComparisonPair {
    pub fn new(first: Profile, second: Profile) -> Result<Self> {
        let depth = comparison_depth(&first, &second)?;
        Ok(ComparisonPair {
            first,
            second,
            depth,
        })
    }

    pub fn in_space(
        first: Profile,
        second: Profile,
        space: &impl AsRef<PairSpace>,
    ) -> Result<Self> {
        first.validate(space)?;
        second.validate(space)?;
        ComparisonPair::new(first, second)
    }

    pub fn first(&self) -> &Profile {
        &self.first
    }

    pub fn second(&self) -> &Profile {
        &self.second
    }

    /// Number of shown attributes on which the two alternatives differ.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn validate(&self, space: &impl AsRef<PairSpace>) -> Result<()> {
        self.first.validate(space)?;
        self.second.validate(space)
    }
}

impl fmt::Display for ComparisonPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.first, self.second)
    }
}

impl FromStr for ComparisonPair {
    type Err = DesignError;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('|')
            .ok_or_else(|| DesignError::Parse(format!("pair {s:?} lacks a '|' separator")))?;
        ComparisonPair::new(a.parse()?, b.parse()?)
    }
}

/// Counts the positions where two profiles with a common support differ.
pub fn comparison_depth(first: &Profile, second: &Profile) -> Result<usize> {
    if !first.same_support(second) {
        return Err(DesignError::InvalidPair(format!(
            "profiles {first} and {second} do not show the same attributes"
        )));
    }
    Ok(first
        .levels
        .iter()
        .zip(&second.levels)
        .filter(|(a, b)| a != b)
        .count())
}

/// N_d: the number of ordered pairs of depth `d` in the region.
pub fn count_pairs(space: &impl AsRef<PairSpace>, d: usize) -> Result<u128> {
    let space = space.as_ref();
    space.check_depth(d)?;
    let (k, s) = (space.k as u128, space.s as u128);
    Ok((1u128 << space.s) * binomial(k, s) * binomial(s, d as u128))
}

/// Streams every ordered pair of depth `d` exactly once.
///
/// Order: supports as lexicographic index sets, then the first profile's
/// signs read as a binary counter over the support (first shown attribute
/// most significant, -1 before +1), then the flipped positions as
/// lexicographic index sets within the support.
pub fn enumerate_orbit(
    space: &impl AsRef<PairSpace>,
    d: usize,
) -> Result<impl Iterator<Item = ComparisonPair> + Clone + Send> {
    let space = *space.as_ref();
    space.check_depth(d)?;
    let (k, s) = (space.k, space.s);
    Ok((0..k).combinations(s).flat_map(move |support| {
        (0u64..1u64 << s).flat_map(move |mask| {
            let support = support.clone();
            (0..s).combinations(d).map(move |flips| {
                let mut first = vec![0i8; k];
                for (t, &attr) in support.iter().enumerate() {
                    first[attr] = if mask >> (s - 1 - t) & 1 == 1 { 1 } else { -1 };
                }
                let mut second = first.clone();
                for &t in &flips {
                    second[support[t]] = -second[support[t]];
                }
                ComparisonPair {
                    first: Profile { levels: first },
                    second: Profile { levels: second },
                    depth: d,
                }
            })
        })
    }))
}

/// The regression vector f(i): mains, then products over all index pairs,
/// triples and quadruples, each block in lexicographic order.
pub fn regression_vector(profile: &Profile, spec: &ModelSpec) -> Result<Vec<i8>> {
    profile.validate(spec)?;
    Ok(regression_vector_for_terms(profile.levels(), &spec.terms()))
}

pub(crate) fn regression_vector_for_terms(levels: &[i8], terms: &[Vec<usize>]) -> Vec<i8> {
    terms
        .iter()
        .map(|t| t.iter().map(|&k| levels[k]).product())
        .collect()
}

/// f(i) - f(j), with entries in {-2, 0, 2}.
pub fn difference_vector(pair: &ComparisonPair, spec: &ModelSpec) -> Result<Vec<i8>> {
    pair.validate(spec)?;
    Ok(difference_for_terms(pair, &spec.terms()))
}

pub(crate) fn difference_for_terms(pair: &ComparisonPair, terms: &[Vec<usize>]) -> Vec<i8> {
    let fi = regression_vector_for_terms(pair.first.levels(), terms);
    let fj = regression_vector_for_terms(pair.second.levels(), terms);
    fi.iter().zip(&fj).map(|(a, b)| a - b).collect()
}

/// A design given pair by pair: weights on explicit comparison pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitDesign {
    spec: ModelSpec,
    entries: Vec<(ComparisonPair, f64)>,
}

impl ExplicitDesign {
    pub fn new(spec: ModelSpec, entries: Vec<(ComparisonPair, f64)>) -> Result<Self> {
        let mut total = 0.0;
        for (pair, w) in &entries {
            pair.validate(&spec)?;
            if !(w.is_finite() && *w >= 0.0) {
                return Err(DesignError::Validation(format!(
                    "weight {w} on pair {pair} is not a nonnegative number"
                )));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(DesignError::Validation(format!(
                "pair weights sum to {total}, not 1"
            )));
        }
        Ok(ExplicitDesign { spec, entries })
    }

    /// Uniform weight on every pair of one orbit.
    pub fn uniform_on_orbit(spec: ModelSpec, d: usize) -> Result<Self> {
        let n = count_pairs(&spec, d)? as f64;
        let entries = enumerate_orbit(&spec, d)?
            .map(|pair| (pair, 1.0 / n))
            .collect();
        ExplicitDesign::new(spec, entries)
    }

    /// Realizes depth weights explicitly: each pair of orbit d gets w_d / N_d.
    /// Depths with zero weight are omitted.
    pub fn from_depth_weights(spec: ModelSpec, weights: &[(usize, f64)]) -> Result<Self> {
        let mut entries = Vec::new();
        for &(d, w) in weights {
            if w == 0.0 {
                continue;
            }
            let n = count_pairs(&spec, d)? as f64;
            entries.extend(enumerate_orbit(&spec, d)?.map(|pair| (pair, w / n)));
        }
        ExplicitDesign::new(spec, entries)
    }

    pub fn spec(&self) -> ModelSpec {
        self.spec
    }

    pub fn entries(&self) -> &[(ComparisonPair, f64)] {
        &self.entries
    }

    /// Total weight per comparison depth, indexed 0..=S.
    pub fn depth_totals(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.spec.s() + 1];
        for (pair, w) in &self.entries {
            totals[pair.depth()] += w;
        }
        totals
    }
}
