//! Outcome records shared by every check.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::operator::ComplexVector;

/// `f64` that survives JSON: non-finite values travel as `"inf"`, `"-inf"`
/// or `"nan"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Real(pub f64);

impl From<f64> for Real {
    fn from(v: f64) -> Self {
        Real(v)
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct RealVisitor;
        impl Visitor<'_> for RealVisitor {
            type Value = Real;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Real, E> {
                Ok(Real(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Real, E> {
                match v {
                    "inf" => Ok(Real(f64::INFINITY)),
                    "-inf" => Ok(Real(f64::NEG_INFINITY)),
                    "nan" => Ok(Real(f64::NAN)),
                    other => Err(E::custom(format!("unexpected string {other:?}"))),
                }
            }
        }
        d.deserialize_any(RealVisitor)
    }
}

/// Ordered from best to worst; the aggregate of a run is the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Skipped,
    Advisory,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Skipped => "skipped",
            Status::Advisory => "advisory",
            Status::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Sampled { seed: u64, n: u64 },
}

/// A vector or scalar that demonstrates a failure (or attains a bound).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub value: Real,
    /// First 16 hex digits of SHA-256 over the little-endian entries.
    pub digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<[f64; 2]>>,
}

impl Witness {
    pub fn scalar(label: impl Into<String>, value: f64) -> Self {
        Self {
            label: label.into(),
            value: Real(value),
            digest: digest_of(&[[value, 0.0]]),
            data: None,
        }
    }

    pub fn vector(label: impl Into<String>, value: f64, v: &ComplexVector) -> Self {
        let data: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        Self {
            label: label.into(),
            value: Real(value),
            digest: digest_of(&data),
            data: Some(data),
        }
    }

    pub fn without_data(mut self) -> Self {
        self.data = None;
        self
    }
}

fn digest_of(data: &[[f64; 2]]) -> String {
    let mut hasher = Sha256::new();
    for [re, im] in data {
        hasher.update(re.to_le_bytes());
        hasher.update(im.to_le_bytes());
    }
    let full = hex::encode(hasher.finalize());
    full[..16].to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubCheck {
    pub name: String,
    pub status: Status,
    pub value: Real,
    pub tolerance: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub check: String,
    pub status: Status,
    pub values: BTreeMap<String, Real>,
    pub tolerance: Real,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subchecks: Vec<SubCheck>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ConditionReport {
    pub fn new(check: impl Into<String>, provenance: Provenance, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            status: Status::Pass,
            values: BTreeMap::new(),
            tolerance: Real(tolerance),
            witness: None,
            provenance,
            subchecks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_value(mut self, key: impl Into<String>, v: f64) -> Self {
        self.values.insert(key.into(), Real(v));
        self
    }

    pub fn set_value(&mut self, key: impl Into<String>, v: f64) {
        self.values.insert(key.into(), Real(v));
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.values.get(key).map(|r| r.0)
    }

    pub fn push_sub(&mut self, name: impl Into<String>, passed: bool, value: f64, tolerance: f64) {
        self.subchecks.push(SubCheck {
            name: name.into(),
            status: if passed { Status::Pass } else { Status::Fail },
            value: Real(value),
            tolerance: Real(tolerance),
        });
    }

    pub fn push_skipped(&mut self, name: impl Into<String>, value: f64, tolerance: f64) {
        self.subchecks.push(SubCheck {
            name: name.into(),
            status: Status::Skipped,
            value: Real(value),
            tolerance: Real(tolerance),
        });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn sub(&self, name: &str) -> Option<&SubCheck> {
        self.subchecks.iter().find(|s| s.name == name)
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Sets the status to the worst sub-check (pass when there are none) and
    /// guarantees that a failing report carries a witness.
    pub fn finish(mut self) -> Self {
        if let Some(worst) = self.subchecks.iter().map(|s| s.status).max() {
            self.status = self.status.max(worst);
        }
        self.ensure_witness();
        self
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self.ensure_witness();
        self
    }

    fn ensure_witness(&mut self) {
        if self.status == Status::Fail && self.witness.is_none() {
            let w = self
                .subchecks
                .iter()
                .find(|s| s.status == Status::Fail)
                .map(|s| Witness::scalar(s.name.clone(), s.value.0))
                .unwrap_or_else(|| Witness::scalar(self.check.clone(), f64::NAN));
            self.witness = Some(w);
        }
    }
}

pub fn worst_status<'a, I: IntoIterator<Item = &'a ConditionReport>>(reports: I) -> Status {
    reports
        .into_iter()
        .map(|r| r.status)
        .max()
        .unwrap_or(Status::Pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failing_report_gets_witness() {
        let mut r = ConditionReport::new("x", Provenance::Exact, 1e-9);
        r.push_sub("a", true, 0.0, 1e-9);
        r.push_sub("b", false, 3.0, 1e-9);
        let r = r.finish();
        assert_eq!(r.status, Status::Fail);
        let w = r.witness.unwrap();
        assert_eq!(w.label, "b");
        assert_eq!(w.value, Real(3.0));
    }

    #[test]
    fn status_order() {
        assert!(Status::Fail > Status::Advisory);
        assert!(Status::Advisory > Status::Skipped);
        assert!(Status::Skipped > Status::Pass);
    }

    #[test]
    fn non_finite_reals_round_trip() {
        let r = ConditionReport::new("beta_max", Provenance::Sampled { seed: 1, n: 2 }, 1e-8)
            .with_value("beta_max", f64::INFINITY)
            .with_value("low", f64::NEG_INFINITY);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"inf\""));
        let back: ConditionReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back.value("beta_max"), Some(f64::INFINITY));
        assert_eq!(back, r);
    }
}
