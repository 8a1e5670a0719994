//! Potential input files (JSON or TOML), canonical re-serialization, and JSON
//! renderings of reports.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expansion::{ExpansionCoefficient, ExpansionResult};
use crate::field::{parse_rational, Field, Rational};
use crate::matrix::Matrix;
use crate::potential::{from_multiplicative, from_symmetric_matrix, from_weighted_terms, AnyPotential, WeightedTerm};
use crate::sequence::{CompactSequence, PolyTailSequence};
use crate::threshold::ThresholdReport;

/// A rational given as an integer or a "p/q" / decimal string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Text(String),
}

impl Number {
    pub fn to_rational(&self) -> Result<Rational> {
        match self {
            Number::Int(n) => Ok(crate::field::rat_int(*n)),
            Number::Text(s) => parse_rational(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub sign: i8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<Number>,
    pub vector: BTreeMap<String, Number>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub sites: Vec<i64>,
    pub entries: Vec<Vec<Number>>,
}

/// Exactly one of the three forms must be present.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplicative: Option<BTreeMap<String, Number>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_one_terms: Option<Vec<TermSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixSpec>,
}

fn site(key: &str) -> Result<i64> {
    key.trim().parse().map_err(|_| Error::Parse(format!("site index {key:?} is not an integer")))
}

fn sparse(map: &BTreeMap<String, Number>) -> Result<BTreeMap<i64, Rational>> {
    let mut out = BTreeMap::new();
    for (k, v) in map {
        let value = v.to_rational()?;
        let n = site(k)?;
        if out.insert(n, value).is_some() {
            return Err(Error::Parse(format!("site {n} listed twice")));
        }
    }
    Ok(out)
}

fn render_map(map: &BTreeMap<i64, Rational>) -> BTreeMap<String, Number> {
    map.iter()
        .filter(|(_, v)| !Field::is_zero(*v))
        .map(|(n, v)| (n.to_string(), Number::Text(v.to_string())))
        .collect()
}

impl PotentialSpec {
    pub fn parse_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn parse_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads a file, choosing TOML for a `.toml` extension and JSON otherwise.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "toml") {
            Self::parse_toml(&text)
        } else {
            Self::parse_json(&text)
        }
    }

    fn check_single_form(&self) -> Result<()> {
        let count = [self.multiplicative.is_some(), self.rank_one_terms.is_some(), self.matrix.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if count != 1 {
            return Err(Error::Parse("expected exactly one of multiplicative, rank_one_terms, matrix".into()));
        }
        Ok(())
    }

    fn weighted_terms(terms: &[TermSpec]) -> Result<Vec<WeightedTerm>> {
        terms
            .iter()
            .map(|t| {
                let weight = t.weight.as_ref().map_or(Ok(crate::field::rat_int(1)), Number::to_rational)?;
                Ok(WeightedTerm { sign: t.sign, weight, vector: CompactSequence::new(sparse(&t.vector)?) })
            })
            .collect()
    }

    pub fn build(&self) -> Result<AnyPotential> {
        self.check_single_form()?;
        if let Some(m) = &self.multiplicative {
            return from_multiplicative(&sparse(m)?);
        }
        if let Some(terms) = &self.rank_one_terms {
            let terms = Self::weighted_terms(terms)?;
            if terms.iter().any(|t| t.sign != 1 && t.sign != -1) {
                return Err(Error::DomainError("sign must be 1 or -1".into()));
            }
            if terms.iter().any(|t| t.vector.is_zero()) {
                return Err(Error::DomainError("rank-one vector is zero".into()));
            }
            return from_weighted_terms(&terms);
        }
        let m = self.matrix.as_ref().expect("single form checked");
        let rows: Vec<Vec<Rational>> = m
            .entries
            .iter()
            .map(|r| r.iter().map(Number::to_rational).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        if rows.len() != m.sites.len() || rows.iter().any(|r| r.len() != m.sites.len()) {
            return Err(Error::Parse("matrix entries must be square over the site list".into()));
        }
        let entries = if rows.is_empty() { Matrix::zeros(0, 0) } else { Matrix::from_rows(rows) };
        from_symmetric_matrix(&m.sites, &entries)
    }

    /// Same potential with normalized rationals, zeros dropped, unit weights
    /// omitted, and sorted maps.
    pub fn canonical(&self) -> Result<Self> {
        self.check_single_form()?;
        let mut out = PotentialSpec::default();
        if let Some(m) = &self.multiplicative {
            out.multiplicative = Some(render_map(&sparse(m)?));
        }
        if let Some(terms) = &self.rank_one_terms {
            let weighted = Self::weighted_terms(terms)?;
            out.rank_one_terms = Some(
                weighted
                    .iter()
                    .map(|t| TermSpec {
                        sign: t.sign,
                        weight: (t.weight != crate::field::rat_int(1)).then(|| Number::Text(t.weight.to_string())),
                        vector: render_map(&t.vector.iter().map(|(n, v)| (n, v.clone())).collect()),
                    })
                    .collect(),
            );
        }
        if let Some(m) = &self.matrix {
            out.matrix = Some(MatrixSpec {
                sites: m.sites.clone(),
                entries: m
                    .entries
                    .iter()
                    .map(|r| r.iter().map(|x| Ok(Number::Text(x.to_rational()?.to_string()))).collect::<Result<Vec<_>>>())
                    .collect::<Result<_>>()?,
            });
        }
        Ok(out)
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        let value = serde_json::to_value(self.canonical()?).map_err(|e| Error::Parse(e.to_string()))?;
        serde_json::to_string_pretty(&value).map_err(|e| Error::Parse(e.to_string()))
    }
}

pub fn sequence_json<T: Field>(x: &PolyTailSequence<T>) -> Value {
    let core: serde_json::Map<String, Value> = (x.lo()..=x.hi())
        .zip(x.values(x.lo(), x.hi()))
        .map(|(n, v)| (n.to_string(), Value::String(v.render())))
        .collect();
    let tail = |p: &crate::sequence::Poly<T>| Value::Array(p.coeffs().iter().map(|c| Value::String(c.render())).collect());
    json!({
        "core": core,
        "left_tail": tail(x.left_tail()),
        "right_tail": tail(x.right_tail()),
    })
}

fn sequences_json<T: Field>(xs: &[PolyTailSequence<T>]) -> Value {
    Value::Array(xs.iter().map(sequence_json).collect())
}

pub fn report_json<T: Field>(r: &ThresholdReport<T>) -> Value {
    json!({
        "threshold": r.threshold,
        "type": r.kind.name(),
        "case": {"stage": r.stage, "label": r.case.roman()},
        "trivial_auxiliary_space": r.trivial_auxiliary_space,
        "dims": {"d0": r.dims.d0, "d": r.dims.d, "dtilde": r.dims.dtilde, "dqs": r.dims.dqs},
        "bases": {
            "eigen": sequences_json(&r.bases.eigen),
            "bounded_mod_eigen": sequences_json(&r.bases.bounded_mod_eigen),
            "growing_mod_bounded": sequences_json(&r.bases.growing_mod_bounded),
            "quasi_symmetric": sequences_json(&r.bases.quasi_symmetric),
        },
        "exact": r.exact,
        "tolerance_dependent": !r.exact,
        "alternating": r.alternating,
        "beta": "∞",
    })
}

/// "zero" for a vanishing coefficient, otherwise the free kernel (if any)
/// and the correction terms.
pub fn coefficient_json<T: Field>(c: &ExpansionCoefficient<T>) -> Result<Value> {
    if c.is_zero_operator()? {
        return Ok(Value::String("zero".into()));
    }
    let free = if c.free {
        Value::Array(
            crate::kernel::kernel_poly(c.order)
                .coeffs()
                .iter()
                .map(|x| Value::String(x.to_string()))
                .collect(),
        )
    } else {
        Value::Null
    };
    let corrections: Vec<Value> = c
        .corrections
        .iter()
        .map(|t| json!({"left": sequence_json(&t.left), "right": sequence_json(&t.right), "weight": t.weight.render()}))
        .collect();
    Ok(json!({"order": c.order, "free_kernel_in_abs_n": free, "corrections": corrections}))
}

pub fn expansion_json<T: Field>(e: &ExpansionResult<T>) -> Result<Value> {
    let mut coeffs = serde_json::Map::new();
    for c in &e.coefficients {
        coeffs.insert(format!("G_{}", c.order), coefficient_json(c)?);
    }
    Ok(json!({
        "case": e.case_id(),
        "stage": e.stage,
        "order": e.order,
        "j_min": e.j_min(),
        "convention": "kappa",
        "z_mapping": "z^(j/2) = (i kappa)^j",
        "g_minus2_sign": "+projection onto E",
        "exact": e.exact,
        "coefficients": coeffs,
    }))
}

/// Deterministic pretty JSON (serde_json maps are key-sorted).
pub fn render_json(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values always serialize")
}
