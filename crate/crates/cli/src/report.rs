use std::collections::BTreeMap;
use std::process::ExitCode;

use cproots_core::RootCertificate;
use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Accepted,
    Pass,
    Rejected,
    Refuted,
    Fail,
    Inconclusive,
}

impl Outcome {
    pub fn exit_code(self) -> ExitCode {
        match self {
            Outcome::Accepted | Outcome::Pass => ExitCode::SUCCESS,
            Outcome::Rejected | Outcome::Refuted | Outcome::Fail => ExitCode::from(2),
            Outcome::Inconclusive => ExitCode::from(3),
        }
    }

    pub fn from_flag(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub verdict: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Value>,
    pub residuals: BTreeMap<String, f64>,
    pub details: Map<String, Value>,
    pub artifacts: Vec<String>,
    pub seed: Option<u64>,
    pub tool_version: &'static str,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            verdict: Outcome::Pass,
            reason: None,
            certificate: None,
            residuals: BTreeMap::new(),
            details: Map::new(),
            artifacts: Vec::new(),
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.inputs.insert(key.to_string(), json!(value));
        self
    }

    pub fn residual(&mut self, key: &str, value: f64) -> &mut Self {
        self.residuals.insert(key.to_string(), value);
        self
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.details.insert(key.to_string(), json!(value));
        self
    }

    /// Records a certificate and takes its verdict.
    pub fn certify(&mut self, cert: &RootCertificate) -> &mut Self {
        self.certificate = Some(certificate_value(cert));
        self.residual("power", cert.residual_power);
        self.residual("min_properness_margin", cert.min_margin());
        self.residual("choi_min_eig", cert.choi_min_eig);
        self.residual("unitality", cert.unitality_residual);
        if cert.is_accepted() {
            self.verdict = Outcome::Accepted;
        } else {
            self.verdict = Outcome::Rejected;
            self.reason = cert.reason().map(str::to_string);
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

pub fn certificate_value(cert: &RootCertificate) -> Value {
    json!({
        "n": cert.n,
        "residual_power": cert.residual_power,
        "properness_margins": cert.properness_margins,
        "choi_min_eig": cert.choi_min_eig,
        "unitality_residual": cert.unitality_residual,
        "accepted": cert.is_accepted(),
        "reason": cert.reason(),
    })
}
