//! Result documents (JSON) and the tabular CSV form.

use serde::{Deserialize, Serialize};

use crate::spec::ModelKind;

pub const CSV_HEADER: &str = "model,A,exact,mc,se,z,terms,ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Standard error too large relative to the exact value to judge.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSummary {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Agreement {
    /// `None` when the standard error is zero and the values differ.
    pub z: Option<f64>,
    pub relative_se: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub exact_ms: f64,
    pub mc_ms: Option<f64>,
}

impl Timing {
    pub fn total_ms(&self) -> f64 {
        self.exact_ms + self.mc_ms.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub model: ModelKind,
    pub index_set: Vec<usize>,
    pub exact: f64,
    pub terms: u128,
    pub mc: Option<McSummary>,
    pub agreement: Option<Agreement>,
    pub timing: Timing,
}

impl ResultRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn verdict(&self) -> Option<Verdict> {
        self.agreement.as_ref().map(|a| a.verdict)
    }

    pub fn to_csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let index: Vec<String> = self.index_set.iter().map(|i| i.to_string()).collect();
        format!(
            "{},\"({})\",{},{},{},{},{},{:.3}",
            self.model,
            index.join(","),
            self.exact,
            opt(self.mc.as_ref().map(|m| m.value)),
            opt(self.mc.as_ref().map(|m| m.std_error)),
            opt(self.agreement.as_ref().and_then(|a| a.z)),
            self.terms,
            self.timing.total_ms()
        )
    }
}
