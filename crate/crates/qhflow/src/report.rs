//! Input file schemas and the machine-readable analysis report.
//!
//! All exact quantities are serialized as rational strings; floats appear
//! only where a value is intrinsically approximate (quadrature results).

use crate::error::{Error, Result};
use crate::Rational;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// One monomial record `c·x^i y^j` with an exact rational coefficient string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialRecord {
    pub x: u32,
    pub y: u32,
    pub c: String,
}

/// Input system: `(P, Q)` as monomial lists, optional type and truncation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub qh_type: Option<(i64, i64)>,
    #[serde(rename = "P")]
    pub p: Vec<MonomialRecord>,
    #[serde(rename = "Q")]
    pub q: Vec<MonomialRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_degree: Option<i64>,
}

/// Input file for hypothesis checks on a Hamiltonian alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub qh_type: Option<(i64, i64)>,
    pub h: Vec<MonomialRecord>,
}

/// Candidate-factor file: either a bare monomial list or `{"w": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FactorSpec {
    Wrapped { w: Vec<MonomialRecord> },
    Bare(Vec<MonomialRecord>),
}

impl FactorSpec {
    pub fn records(&self) -> &[MonomialRecord] {
        match self {
            FactorSpec::Wrapped { w } => w,
            FactorSpec::Bare(v) => v,
        }
    }
}

/// Parse an exact rational from `"p"` or `"p/q"`; anything else is rejected.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty coefficient".into()));
    }
    let (num_s, den_s) = match s.split_once('/') {
        None => (s, "1"),
        Some((n, d)) => (n, d),
    };
    let num = BigInt::from_str(num_s.trim())
        .map_err(|_| Error::Parse(format!("bad rational numerator {num_s:?}")))?;
    let den = BigInt::from_str(den_s.trim())
        .map_err(|_| Error::Parse(format!("bad rational denominator {den_s:?}")))?;
    if den == BigInt::from(0) {
        return Err(Error::Parse("zero denominator".into()));
    }
    Ok(Rational::new(num, den))
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub degree: i64,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisJson {
    pub h1: bool,
    pub h2: bool,
    pub h2_checked_degrees: Vec<i64>,
    pub monodromic: bool,
    pub sign: i8,
    pub n0: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormDegree {
    pub degree: i64,
    pub corange_basis: Vec<String>,
    pub coefficients: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictJson {
    /// `integrable_up_to_degree` | `aiif` | `no_aiif`
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_degree: Option<i64>,
    pub formal_iif: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor_leading_part: Option<String>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyJson {
    pub monodromic: bool,
    pub sign: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterJson {
    pub i: f64,
    pub abs_error_estimate: f64,
    pub certificate: bool,
    /// `center` | `unstable_focus` | `stable_focus` | `inconclusive`
    pub verdict: String,
    pub notes: Vec<String>,
}

/// Self-describing analysis report; field order is the serialization order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub input: SystemSpec,
    pub config: ReportConfig,
    #[serde(rename = "type")]
    pub qh_type: (i64, i64),
    pub r: i64,
    pub h: String,
    pub hypothesis: HypothesisJson,
    pub normal_form: Vec<NormalFormDegree>,
    pub verdict: VerdictJson,
    pub monodromy: MonodromyJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<CenterJson>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Plain-text rendering of the same content.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.input.name {
            out.push_str(&format!("system: {name}\n"));
        }
        out.push_str(&format!(
            "type: ({},{})   r: {}   degree cap: {}\n",
            self.qh_type.0, self.qh_type.1, self.r, self.config.degree
        ));
        out.push_str(&format!("h = {}\n", self.h));
        out.push_str(&format!(
            "H1: {}   H2: {} (degrees {:?})   monodromic: {} (sign {})   n0: {}\n",
            tick(self.hypothesis.h1),
            tick(self.hypothesis.h2),
            self.hypothesis.h2_checked_degrees,
            tick(self.hypothesis.monodromic),
            self.hypothesis.sign,
            self.hypothesis.n0
        ));
        for nf in &self.normal_form {
            let pairs: Vec<String> = nf
                .corange_basis
                .iter()
                .zip(nf.coefficients.iter())
                .map(|(b, c)| format!("{c}·{b}"))
                .collect();
            out.push_str(&format!("  degree {}: {}\n", nf.degree, pairs.join(" + ")));
        }
        out.push_str(&format!("verdict: {}", self.verdict.kind));
        if let Some(n) = self.verdict.n {
            out.push_str(&format!(" (N = {n}"));
            if let Some(e) = &self.verdict.exponent {
                out.push_str(&format!(", exponent {e}"));
            }
            out.push(')');
        }
        if let Some(wd) = self.verdict.witness_degree {
            out.push_str(&format!(" (witness degree {wd})"));
        }
        out.push('\n');
        if let Some(c) = &self.center {
            out.push_str(&format!(
                "center stage: I = {} (± {}), certificate: {}, verdict: {}\n",
                c.i, c.abs_error_estimate, c.certificate, c.verdict
            ));
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out
    }
}

fn tick(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Report for standalone factor verification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<String>,
    pub defect: String,
    pub notes: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("3").unwrap(), rat(3, 1));
        assert_eq!(parse_rational("-3/4").unwrap(), rat(-3, 4));
        assert_eq!(parse_rational(" 7/2 ").unwrap(), rat(7, 2));
        assert!(parse_rational("1.5").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn factor_spec_accepts_both_shapes() {
        let bare: FactorSpec =
            serde_json::from_str(r#"[{"x":1,"y":0,"c":"1"}]"#).unwrap();
        assert_eq!(bare.records().len(), 1);
        let wrapped: FactorSpec =
            serde_json::from_str(r#"{"w":[{"x":1,"y":0,"c":"1"},{"x":0,"y":1,"c":"2"}]}"#).unwrap();
        assert_eq!(wrapped.records().len(), 2);
    }
}
