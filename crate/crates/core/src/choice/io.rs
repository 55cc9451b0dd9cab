//! JSON model and oracle files.
//!
//! Item indices in files are 1-based. Numbers are JSON floats, or `"p/q"`
//! strings for exact rationals; decimal strings are also accepted.

use serde::{Deserialize, Serialize};

use super::{EmpiricalTable, MixtureModel, OracleTable, Slate, WeightVector};
use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, Rational, Scalar};

/// A number as it appears in a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Float(f64),
    Text(String),
}

impl Number {
    pub fn to_f64(&self) -> Result<f64> {
        match self {
            Number::Float(x) => Ok(*x),
            Number::Text(s) => parse_rational(s)
                .map(|r| r.to_f64_lossy())
                .ok_or_else(|| Error::Format(format!("cannot parse number {s:?}"))),
        }
    }

    /// Floats go through their shortest decimal representation, so `0.4`
    /// reads as `2/5`.
    pub fn to_rational(&self) -> Result<Rational> {
        let text = match self {
            Number::Float(x) => format!("{x}"),
            Number::Text(s) => s.clone(),
        };
        parse_rational(&text).ok_or_else(|| Error::Format(format!("cannot parse number {text:?}")))
    }
}

/// Conversion of backend scalars to file numbers.
pub trait ToNumber {
    fn to_number(&self) -> Number;
}

impl ToNumber for f64 {
    fn to_number(&self) -> Number {
        Number::Float(*self)
    }
}

impl ToNumber for Rational {
    fn to_number(&self) -> Number {
        Number::Text(format_rational(self))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Number>,
    /// Alternative to `lambda`: the mixing weight of `a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Number>,
    pub a: Vec<Number>,
    pub b: Vec<Number>,
}

impl ModelFile {
    pub fn from_model<T: Scalar + ToNumber>(m: &MixtureModel<T>) -> Self {
        Self {
            n: m.n(),
            lambda: Some(m.lambda().to_number()),
            mu: None,
            a: m.a().as_slice().iter().map(ToNumber::to_number).collect(),
            b: m.b().as_slice().iter().map(ToNumber::to_number).collect(),
        }
    }

    fn check_shape(&self) -> Result<()> {
        if self.a.len() != self.n || self.b.len() != self.n {
            return Err(Error::Format(format!(
                "model declares n = {} but has {} and {} weights",
                self.n,
                self.a.len(),
                self.b.len()
            )));
        }
        Ok(())
    }

    pub fn to_model(&self) -> Result<MixtureModel> {
        self.check_shape()?;
        let conv = |v: &[Number]| v.iter().map(Number::to_f64).collect::<Result<Vec<_>>>();
        let a = WeightVector::new(conv(&self.a)?)?;
        let b = WeightVector::new(conv(&self.b)?)?;
        match (&self.lambda, &self.mu) {
            (Some(l), None) => MixtureModel::new(a, b, l.to_f64()?),
            (None, Some(mu)) => MixtureModel::from_mu(a, b, mu.to_f64()?),
            _ => Err(Error::Format("exactly one of lambda and mu must be given".into())),
        }
    }

    pub fn to_exact_model(&self) -> Result<MixtureModel<Rational>> {
        self.check_shape()?;
        let conv = |v: &[Number]| v.iter().map(Number::to_rational).collect::<Result<Vec<_>>>();
        let a = WeightVector::new(conv(&self.a)?)?;
        let b = WeightVector::new(conv(&self.b)?)?;
        match (&self.lambda, &self.mu) {
            (Some(l), None) => MixtureModel::new(a, b, l.to_rational()?),
            (None, Some(mu)) => MixtureModel::from_mu(a, b, mu.to_rational()?),
            _ => Err(Error::Format("exactly one of lambda and mu must be given".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub items: Vec<usize>,
    #[serde(rename = "C")]
    pub c: Vec<Number>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFile {
    pub n: usize,
    pub lambda: Number,
    pub slates: Vec<OracleRow>,
}

impl OracleFile {
    pub fn from_table<T: Scalar + ToNumber>(t: &OracleTable<T>) -> Self {
        Self {
            n: t.n(),
            lambda: t.lambda().to_number(),
            slates: t
                .iter()
                .map(|(s, row)| OracleRow {
                    items: s.items().iter().map(|i| i + 1).collect(),
                    c: row.iter().map(ToNumber::to_number).collect(),
                })
                .collect(),
        }
    }

    pub fn to_table(&self) -> Result<OracleTable<f64>> {
        let mut t = OracleTable::new(self.n, self.lambda.to_f64()?);
        for row in &self.slates {
            if row.items.iter().any(|&i| i == 0) {
                return Err(Error::Format("item indices are 1-based".into()));
            }
            let slate = Slate::new(row.items.iter().map(|i| i - 1).collect())?;
            let values = row.c.iter().map(Number::to_f64).collect::<Result<Vec<_>>>()?;
            t.insert(slate, values)?;
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub items: Vec<usize>,
    pub samples: u64,
    pub counts: Vec<u64>,
    #[serde(rename = "C")]
    pub c: Vec<f64>,
}

/// Simulated choice tallies with their scaled empirical values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplesFile {
    pub n: usize,
    pub lambda: f64,
    pub seed: u64,
    pub slates: Vec<SampleRow>,
}

impl SamplesFile {
    pub fn from_table(t: &EmpiricalTable) -> Self {
        Self {
            n: t.n(),
            lambda: t.lambda(),
            seed: t.seed(),
            slates: t
                .iter()
                .map(|(s, row)| SampleRow {
                    items: s.items().iter().map(|i| i + 1).collect(),
                    samples: row.samples,
                    counts: row.counts.clone(),
                    c: row.scaled(t.lambda()),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{oracle_table, random_instance, DEFAULT_WEIGHT_FLOOR};

    #[test]
    fn model_roundtrip_f64() {
        let m = random_instance(4, 2.0, 7, DEFAULT_WEIGHT_FLOOR).unwrap();
        let json = serde_json::to_string(&ModelFile::from_model(&m)).unwrap();
        let back: ModelFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_model().unwrap(), m);
    }

    #[test]
    fn exact_model_parses_fractions_and_decimals() {
        let json = r#"{"n":4,"lambda":"2","a":["2/5","2/5",0.1,"1/10"],"b":[0.3,"3/10","1/5","0.2"]}"#;
        let f: ModelFile = serde_json::from_str(json).unwrap();
        let m = f.to_exact_model().unwrap();
        assert_eq!(m.a()[2], Rational::from_ratio(1, 10));
        assert_eq!(m.b()[0], Rational::from_ratio(3, 10));
        let text = serde_json::to_string(&ModelFile::from_model(&m)).unwrap();
        assert!(text.contains("\"2/5\""));
    }

    #[test]
    fn mu_and_lambda_are_exclusive() {
        let json = r#"{"n":3,"mu":0.25,"a":[0.2,0.3,0.5],"b":[0.5,0.3,0.2]}"#;
        let m = serde_json::from_str::<ModelFile>(json).unwrap().to_model().unwrap();
        assert!((m.lambda() - 3.0).abs() < 1e-12);
        let both = r#"{"n":3,"mu":0.25,"lambda":3,"a":[0.2,0.3,0.5],"b":[0.5,0.3,0.2]}"#;
        assert!(serde_json::from_str::<ModelFile>(both).unwrap().to_model().is_err());
    }

    #[test]
    fn oracle_roundtrip() {
        let m = random_instance(4, 2.0, 3, DEFAULT_WEIGHT_FLOOR).unwrap();
        let t = oracle_table(&m, Slate::all_within(4).iter()).unwrap();
        let file = OracleFile::from_table(&t);
        assert_eq!(file.slates[0].items, vec![1, 2]);
        let json = serde_json::to_string(&file).unwrap();
        let back: OracleFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_table().unwrap(), t);
    }
}
