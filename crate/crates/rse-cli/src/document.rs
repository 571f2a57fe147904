//! Serialized report documents.
//!
//! Non-finite numbers are written as the strings `"inf"`, `"-inf"` and `"nan"`
//! so every document is valid JSON and round-trips.

use std::collections::BTreeMap;

use rse_core::problems::{RegValue, RseReport};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An `f64` whose non-finite values serialize as strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let x = self.0;
        if x.is_finite() {
            s.serialize_f64(x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                match v {
                    "inf" => Ok(Num(f64::INFINITY)),
                    "-inf" => Ok(Num(f64::NEG_INFINITY)),
                    "nan" => Ok(Num(f64::NAN)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegDoc {
    Exact { value: Num },
    Bracket { lower: Num, upper: Num },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub spec_sha256: String,
    pub seed: Option<u64>,
    pub wall_time_seconds: f64,
}

/// Output of `rse`, `reg` and `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub command: String,
    pub problem: String,
    pub rse: Num,
    pub reg: RegDoc,
    pub reg_source: String,
    pub exponent: u32,
    pub product: Option<[Num; 2]>,
    pub predicted_bounds: Option<[Num; 2]>,
    pub product_in_bounds: Option<bool>,
    pub ill_posed: bool,
    pub certified: bool,
    pub diagnostics: BTreeMap<String, Num>,
    pub vectors: BTreeMap<String, Vec<Num>>,
    pub notes: Vec<String>,
    pub provenance: Provenance,
}

fn pair(p: Option<(f64, f64)>) -> Option<[Num; 2]> {
    p.map(|(a, b)| [Num(a), Num(b)])
}

impl ReportDocument {
    pub fn from_report(command: &str, r: &RseReport, provenance: Provenance) -> Self {
        Self {
            command: command.into(),
            problem: r.problem.clone(),
            rse: Num(r.rse),
            reg: match r.reg {
                RegValue::Exact(v) => RegDoc::Exact { value: Num(v) },
                RegValue::Bracket { lower, upper } => RegDoc::Bracket { lower: Num(lower), upper: Num(upper) },
            },
            reg_source: r.reg_source.clone(),
            exponent: r.exponent,
            product: pair(r.product),
            predicted_bounds: pair(r.predicted_bounds),
            product_in_bounds: r.product_in_bounds,
            ill_posed: r.ill_posed,
            certified: r.certified,
            diagnostics: r.diagnostics.iter().map(|(k, v)| (k.clone(), Num(*v))).collect(),
            vectors: r.vectors.iter().map(|(k, v)| (k.clone(), v.iter().map(|x| Num(*x)).collect())).collect(),
            notes: r.notes.clone(),
            provenance,
        }
    }
}

/// Output of `mc-analyze`. Vertex indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McDocument {
    pub command: String,
    pub well_posed: bool,
    pub bipartite_components: Vec<Vec<usize>>,
    pub isolated_zeros: Vec<usize>,
    pub rse_sq: Num,
    pub rse: Num,
    pub kept: Vec<[usize; 2]>,
    pub removed: Vec<[usize; 2]>,
    pub mode: String,
    pub certified: bool,
    pub nodes: usize,
    pub lambda_min: Num,
    pub reg_bracket: [Num; 2],
    pub reg_exact: Num,
    pub unobserved_mass: Num,
    pub kernel_witness: Option<Vec<Num>>,
    pub provenance: Provenance,
}

/// Output of `maxcut`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxCutDocument {
    pub command: String,
    pub vertices: usize,
    pub edges: usize,
    pub maxcut_via_rse: u64,
    pub brute_force: Option<u64>,
    pub agrees: Option<bool>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_round_trip() {
        for x in [f64::INFINITY, f64::NEG_INFINITY, 0.5, -3.0, 1e-300] {
            let s = serde_json::to_string(&Num(x)).unwrap();
            assert_eq!(serde_json::from_str::<Num>(&s).unwrap(), Num(x));
        }
        assert_eq!(serde_json::to_string(&Num(f64::INFINITY)).unwrap(), "\"inf\"");
        let n: Num = serde_json::from_str(&serde_json::to_string(&Num(f64::NAN)).unwrap()).unwrap();
        assert!(n.0.is_nan());
        assert!(serde_json::from_str::<Num>("\"infinity\"").is_err());
    }

    #[test]
    fn report_document_round_trips() {
        use rse_core::mc_graph::McMode;
        use rse_core::problems::{build_report, OptimizerConfig, ProblemInstance};
        use rse_core::{Measure, PsdMatrix};

        let prov = Provenance { tool_version: "t".into(), spec_sha256: "0".repeat(64), seed: Some(4), wall_time_seconds: 0.25 };
        for diag in [[4.0, 1.0, 0.3], [2.0, 2.0, 1.0]] {
            let inst = ProblemInstance::Pca { data: Measure::gaussian(PsdMatrix::diag(&diag).unwrap()), q: 1 };
            let r = build_report(&inst, &OptimizerConfig::default(), McMode::BranchBound).unwrap();
            let doc = ReportDocument::from_report("report", &r, prov.clone());
            let text = serde_json::to_string_pretty(&doc).unwrap();
            let back: ReportDocument = serde_json::from_str(&text).unwrap();
            assert_eq!(back, doc);
            assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
        }
    }

    #[test]
    fn integers_parse_as_numbers() {
        assert_eq!(serde_json::from_str::<Num>("3").unwrap(), Num(3.0));
        assert_eq!(serde_json::from_str::<Num>("-2").unwrap(), Num(-2.0));
    }
}
