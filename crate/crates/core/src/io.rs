//! CSV population files and JSON documents.
//!
//! Population files are UTF-8 CSV with the header `phi,x`, one unit per row.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimators::{Estimate, EstimatorConfig};
use crate::montecarlo::SimulationReport;
use crate::population::{Design, PopulationFrame, PopulationParams, SummaryStatistics};
use crate::theory::{ComparisonReport, SensitivityReport, TheoryReport};

pub fn parse_population_csv<R: Read>(reader: R) -> Result<PopulationFrame> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.len() != 2 || &headers[0] != "phi" || &headers[1] != "x" {
        return Err(Error::Schema(format!(
            "expected header `phi,x`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut phi = Vec::new();
    let mut x = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let indicator = match &record[0] {
            "0" => 0u8,
            "1" => 1u8,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("phi must be 0 or 1, found `{other}`"),
                })
            }
        };
        let value: f64 = record[1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("x is not a decimal number: `{}`", &record[1]),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("x is not finite: `{}`", &record[1]),
            });
        }
        phi.push(indicator);
        x.push(value);
    }
    PopulationFrame::new(phi, x)
}

pub fn read_population_csv(path: &Path) -> Result<PopulationFrame> {
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_population_csv(file)
}

pub fn write_population_csv<W: Write>(frame: &PopulationFrame, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["phi", "x"]).map_err(io)?;
    for (phi, x) in frame.records() {
        // `{}` on f64 prints the shortest representation that round-trips
        w.write_record([phi.to_string(), format!("{x}")])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ComputedFromFrame,
    UserSupplied,
}

/// Population parameters plus the sampling design, as stored on disk.
///
/// User-supplied documents need only the published summary statistics;
/// `sx2` and `sp2` are then reconstructed from the coefficients of variation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDocument {
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub population_size: usize,
    #[serde(default)]
    pub sample_size: Option<usize>,
    pub proportion: f64,
    pub xbar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sx2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sp2: Option<f64>,
    pub cp: f64,
    pub cx: f64,
    pub rho_pb: f64,
    pub lambda03: f64,
    pub lambda04: f64,
    pub lambda12: f64,
}

impl ParamsDocument {
    pub fn from_params(params: &PopulationParams, sample_size: Option<usize>) -> Self {
        Self {
            provenance: Provenance::ComputedFromFrame,
            note: None,
            population_size: params.population_size,
            sample_size,
            proportion: params.proportion,
            xbar: params.xbar,
            sx2: Some(params.sx2),
            sp2: Some(params.sp2),
            cp: params.cp,
            cx: params.cx,
            rho_pb: params.rho_pb,
            lambda03: params.lambda03,
            lambda04: params.lambda04,
            lambda12: params.lambda12,
        }
    }

    pub fn params(&self) -> Result<PopulationParams> {
        let mut p = PopulationParams::from_summary(SummaryStatistics {
            population_size: self.population_size,
            proportion: self.proportion,
            xbar: self.xbar,
            rho_pb: self.rho_pb,
            cp: self.cp,
            cx: self.cx,
            lambda12: self.lambda12,
            lambda04: self.lambda04,
            lambda03: self.lambda03,
        })?;
        if let Some(sx2) = self.sx2 {
            p.sx2 = sx2;
        }
        if let Some(sp2) = self.sp2 {
            p.sp2 = sp2;
        }
        Ok(p)
    }

    pub fn design(&self) -> Result<Design> {
        let n = self
            .sample_size
            .ok_or_else(|| Error::Schema("params document has no sample_size".into()))?;
        Design::new(n, self.population_size)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line() as u64,
            message: e.to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Everything a command produced, with enough context to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    /// SHA-256 of the input file.
    pub input_digest: String,
    pub configurations: Vec<EstimatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory: Option<TheoryReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparisons: Option<ComparisonReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimates: Option<Vec<Estimate>>,
}

impl ReportDocument {
    pub fn new(input_digest: String, configurations: Vec<EstimatorConfig>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            input_digest,
            configurations,
            theory: None,
            comparisons: None,
            simulation: None,
            sensitivity: None,
            estimates: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line() as u64,
            message: e.to_string(),
        })
    }
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
