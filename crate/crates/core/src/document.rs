//! Design files: the JSON design document and the CSV pair plan.
//!
//! CSV plans have the header `pair_id,i_1..i_K,j_1..j_K,weight`, levels
//! written as -1/0/1 and weights with 17 significant digits so that they
//! read back bit-exact.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::design_space::{count_pairs, ComparisonPair, ExplicitDesign, ModelSpec, Profile};
use crate::equivalence::Certificate;
use crate::error::{DesignError, Result};
use crate::information::Rational;
use crate::optimizer::{DepthDesign, OptimResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthWeight {
    pub depth: usize,
    /// Exact weight, e.g. "4/15", when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<String>,
    pub decimal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub i: Vec<i8>,
    pub j: Vec<i8>,
    pub weight: f64,
}

/// A design as exchanged between commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDocument {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "S")]
    pub s: usize,
    pub depth_weights: Vec<DepthWeight>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit_rows: Option<Vec<PlanRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certification: Option<Certificate>,
}

impl DesignDocument {
    /// Document for an invariant design; `exact` supplies fraction strings.
    pub fn from_design(
        design: &DepthDesign,
        exact: Option<&[(usize, Rational)]>,
        certification: Option<Certificate>,
    ) -> Self {
        let spec = design.spec();
        let depth_weights = design
            .iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(d, w)| DepthWeight {
                depth: d,
                fraction: exact
                    .and_then(|e| e.iter().find(|(ed, _)| *ed == d))
                    .map(|(_, q)| q.to_string()),
                decimal: w,
            })
            .collect();
        DesignDocument {
            k: spec.k(),
            s: spec.s(),
            depth_weights,
            explicit_rows: None,
            certification,
        }
    }

    pub fn from_result(result: &OptimResult) -> Self {
        Self::from_design(
            &result.design,
            result.exact_weights.as_deref(),
            Some(result.certificate.clone()),
        )
    }

    /// Adds the explicit rows realizing the depth weights (w_d / N_d per pair).
    pub fn with_rows(mut self) -> Result<Self> {
        let explicit = ExplicitDesign::from_depth_weights(self.spec()?, &self.decimal_weights())?;
        self.explicit_rows = Some(rows_of(&explicit));
        Ok(self)
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        ModelSpec::new(self.k, self.s)
    }

    fn decimal_weights(&self) -> Vec<(usize, f64)> {
        self.depth_weights
            .iter()
            .map(|w| (w.depth, w.decimal))
            .collect()
    }

    /// Exact weights when every entry carries a fraction.
    pub fn exact_weights(&self) -> Result<Option<Vec<(usize, Rational)>>> {
        if self.depth_weights.is_empty() || self.depth_weights.iter().any(|w| w.fraction.is_none())
        {
            return Ok(None);
        }
        self.depth_weights
            .iter()
            .map(|w| {
                let text = w.fraction.as_deref().unwrap_or_default();
                text.parse::<Rational>()
                    .map(|q| (w.depth, q))
                    .map_err(|_| DesignError::Parse(format!("bad fraction {text:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// The invariant design: from the depth weights when present, otherwise
    /// from per-depth totals of the explicit rows.
    pub fn depth_design(&self) -> Result<DepthDesign> {
        let spec = self.spec()?;
        if !self.depth_weights.is_empty() {
            if let Some(exact) = self.exact_weights()? {
                return DepthDesign::from_rationals(spec, &exact);
            }
            return DepthDesign::new(spec, &self.decimal_weights());
        }
        match self.explicit_design()? {
            Some(explicit) => depth_design_of(&explicit),
            None => Err(DesignError::Parse(
                "design document has neither depth weights nor explicit rows".into(),
            )),
        }
    }

    pub fn explicit_design(&self) -> Result<Option<ExplicitDesign>> {
        let Some(rows) = &self.explicit_rows else {
            return Ok(None);
        };
        let spec = self.spec()?;
        let entries = rows
            .iter()
            .map(|row| {
                let pair = ComparisonPair::in_space(
                    Profile::new(row.i.clone())?,
                    Profile::new(row.j.clone())?,
                    &spec,
                )?;
                Ok((pair, row.weight))
            })
            .collect::<Result<Vec<_>>>()?;
        ExplicitDesign::new(spec, entries).map(Some)
    }

    /// Checks that explicit rows, when present, spread each depth weight
    /// uniformly over its orbit.
    pub fn check_rows_realize_weights(&self) -> Result<()> {
        let Some(explicit) = self.explicit_design()? else {
            return Ok(());
        };
        let spec = explicit.spec();
        let design = self.depth_design()?;
        let mut seen = vec![0u128; spec.s() + 1];
        for (pair, w) in explicit.entries() {
            let d = pair.depth();
            seen[d] += 1;
            let expected = design.weight(d) / count_pairs(&spec, d)? as f64;
            if (w - expected).abs() > 1e-12 * expected.max(1e-300) + 1e-300 {
                return Err(DesignError::Validation(format!(
                    "row {pair} has weight {w}, expected w_{d}/N_{d} = {expected}"
                )));
            }
        }
        for d in design.support() {
            if seen[d] != count_pairs(&spec, d)? {
                return Err(DesignError::Validation(format!(
                    "depth {d} has {} rows, expected {}",
                    seen[d],
                    count_pairs(&spec, d)?
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("design documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| DesignError::Parse(e.to_string()))
    }
}

fn rows_of(design: &ExplicitDesign) -> Vec<PlanRow> {
    design
        .entries()
        .iter()
        .map(|(pair, w)| PlanRow {
            i: pair.first().levels().to_vec(),
            j: pair.second().levels().to_vec(),
            weight: *w,
        })
        .collect()
}

/// Sums explicit row weights per depth into an invariant design.
pub fn depth_design_of(explicit: &ExplicitDesign) -> Result<DepthDesign> {
    let totals = explicit.depth_totals();
    if totals[0] > 0.0 {
        return Err(DesignError::Validation(
            "pairs of depth 0 carry no information and cannot hold weight".into(),
        ));
    }
    let w: Vec<f64> = totals[1..].to_vec();
    let sum: f64 = w.iter().sum();
    DepthDesign::from_weights(explicit.spec(), w.iter().map(|x| x / sum).collect())
}

/// Formats a weight with 17 significant digits in plain decimal notation.
pub fn format_weight(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (16 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn write_plan_csv(design: &ExplicitDesign, writer: impl Write) -> Result<()> {
    let k = design.spec().k();
    let mut csv = csv::Writer::from_writer(writer);
    let header: Vec<String> = std::iter::once("pair_id".to_string())
        .chain((1..=k).map(|t| format!("i_{t}")))
        .chain((1..=k).map(|t| format!("j_{t}")))
        .chain(std::iter::once("weight".to_string()))
        .collect();
    csv.write_record(&header).map_err(io_err)?;
    for (id, (pair, w)) in design.entries().iter().enumerate() {
        let record: Vec<String> = std::iter::once((id + 1).to_string())
            .chain(pair.first().levels().iter().map(|l| l.to_string()))
            .chain(pair.second().levels().iter().map(|l| l.to_string()))
            .chain(std::iter::once(format_weight(*w)))
            .collect();
        csv.write_record(&record).map_err(io_err)?;
    }
    csv.flush().map_err(|e| DesignError::Parse(e.to_string()))
}

fn io_err(e: csv::Error) -> DesignError {
    DesignError::Parse(e.to_string())
}

/// Reads a CSV plan. K comes from the header and S from the first row.
pub fn read_plan_csv(reader: impl Read) -> Result<ExplicitDesign> {
    let mut csv = csv::Reader::from_reader(reader);
    let header = csv.headers().map_err(io_err)?.clone();
    let n = header.len();
    if n < 4 || (n - 2) % 2 != 0 || &header[0] != "pair_id" || &header[n - 1] != "weight" {
        return Err(DesignError::Parse(format!(
            "unexpected plan header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let k = (n - 2) / 2;
    for t in 1..=k {
        if header[t] != *format!("i_{t}") || header[k + t] != *format!("j_{t}") {
            return Err(DesignError::Parse(format!(
                "bad level column names around column {t}"
            )));
        }
    }
    let mut pairs = Vec::new();
    for record in csv.records() {
        let record = record.map_err(io_err)?;
        let level = |idx: usize| -> Result<i8> {
            record[idx]
                .trim()
                .parse::<i8>()
                .map_err(|_| DesignError::Parse(format!("bad level {:?}", &record[idx])))
        };
        let i = (1..=k).map(level).collect::<Result<Vec<_>>>()?;
        let j = (k + 1..=2 * k).map(level).collect::<Result<Vec<_>>>()?;
        let w: f64 = record[n - 1]
            .trim()
            .parse()
            .map_err(|_| DesignError::Parse(format!("bad weight {:?}", &record[n - 1])))?;
        pairs.push((ComparisonPair::new(Profile::new(i)?, Profile::new(j)?)?, w));
    }
    let s = pairs
        .first()
        .map(|(pair, _)| pair.first().strength())
        .ok_or_else(|| DesignError::Parse("plan has no rows".into()))?;
    ExplicitDesign::new(ModelSpec::new(k, s)?, pairs)
}
