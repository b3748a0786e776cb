//! JSON manifests: the on-disk description of a chart, its splittings,
//! connection, sections, and run parameters.
//!
//! Exact rationals are always strings (`"3/2"`), never floats, and
//! polynomials use the text grammar of the polynomial module, so a manifest
//! round-trips without loss.  Indices in correction and Christoffel tables
//! are 1-based, matching the way frames are numbered in reports.

use crate::bundled;
use crate::exponential_charts::GradedConnection;
use crate::filtration::{default_sample_points, FilteredChart, Splitting, ValidatedChart};
use crate::polyfields::{PolyError, Polynomial, VarSet};
use crate::rational::{format_rat, parse_rat, Rat};
use crate::tangent_algebroid::{GradedSection, HSection};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("json parse error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{context}: {source}")]
    Poly {
        context: String,
        source: PolyError,
    },
    #[error("{context}: {message}")]
    Value { context: String, message: String },
    #[error(transparent)]
    Filtration(#[from] crate::filtration::FiltrationError),
    #[error(transparent)]
    Chart(#[from] crate::exponential_charts::ChartError),
    #[error(transparent)]
    Section(#[from] crate::tangent_algebroid::SectionError),
    #[error("chart failed filtration validation:\n{0}")]
    InvalidChart(String),
    #[error("no manifest file or bundled example named `{0}`")]
    NotFound(String),
    #[error("io error reading `{path}`: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChartSpec {
    pub dim: usize,
    pub depth: u32,
    pub coordinates: Vec<String>,
    /// One entry per frame field; each entry lists the n coordinate
    /// component polynomials.
    pub frame: Vec<Vec<String>>,
    pub orders: Vec<u32>,
    /// Optional; defaults to the origin plus seeded pseudorandom points.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sample_points: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CorrectionSpec {
    /// 1-based graded index (the field being split).
    pub a: usize,
    /// 1-based frame index of the lower-order correction direction.
    pub b: usize,
    pub poly: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SplittingSpec {
    #[serde(default)]
    pub corrections: Vec<CorrectionSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChristoffelSpec {
    /// 1-based coordinate direction.
    pub c: usize,
    /// 1-based frame indices `a → b`.
    pub a: usize,
    pub b: usize,
    pub poly: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConnectionSpec {
    #[serde(default)]
    pub christoffels: Vec<ChristoffelSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SectionSpec {
    /// `"h"` for frame-coefficient sections of `TM × ℝ`, `"graded"` for
    /// sections of the graded bundle.
    pub kind: String,
    /// Frame coefficient polynomials in the chart variables and `t`.
    pub coeffs: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunParams {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_steps")]
    pub steps: u32,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_t_seq")]
    pub t_seq: Vec<String>,
    #[serde(default = "default_degree_cap")]
    pub degree_cap: u32,
}

fn default_seed() -> u64 {
    42
}
fn default_steps() -> u32 {
    256
}
fn default_tol() -> f64 {
    1e-10
}
fn default_newton_tol() -> f64 {
    1e-12
}
fn default_radius() -> f64 {
    1.0
}
fn default_t_seq() -> Vec<String> {
    vec!["1".into(), "1/2".into(), "1/4".into(), "1/8".into()]
}
fn default_degree_cap() -> u32 {
    bundled::BUNDLED_DEGREE_CAP
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            seed: default_seed(),
            steps: default_steps(),
            tol: default_tol(),
            newton_tol: default_newton_tol(),
            radius: default_radius(),
            t_seq: default_t_seq(),
            degree_cap: default_degree_cap(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub name: String,
    pub chart: ChartSpec,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub splittings: BTreeMap<String, SplittingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<ConnectionSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sections: BTreeMap<String, SectionSpec>,
    #[serde(default)]
    pub params: RunParams,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Manifest, ManifestError> {
        serde_json::from_str(text).map_err(|e| ManifestError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Serializes a chart back into manifest form with canonical
    /// polynomial strings.
    pub fn for_chart(name: &str, chart: &FilteredChart) -> Manifest {
        Manifest {
            name: name.to_string(),
            chart: ChartSpec {
                dim: chart.dim(),
                depth: chart.depth(),
                coordinates: chart.vars().names().to_vec(),
                frame: chart
                    .frame()
                    .iter()
                    .map(|f| f.components().iter().map(|p| p.to_string()).collect())
                    .collect(),
                orders: chart.orders().to_vec(),
                sample_points: chart
                    .sample_points()
                    .iter()
                    .map(|p| p.iter().map(format_rat).collect())
                    .collect(),
            },
            splittings: BTreeMap::new(),
            connection: Some(ConnectionSpec {
                christoffels: Vec::new(),
            }),
            sections: BTreeMap::new(),
            params: RunParams::default(),
        }
    }

    fn varset(&self) -> Result<Arc<VarSet>, ManifestError> {
        if self.chart.coordinates.len() != self.chart.dim {
            return Err(ManifestError::Value {
                context: "chart.coordinates".to_string(),
                message: format!(
                    "{} names for dim {}",
                    self.chart.coordinates.len(),
                    self.chart.dim
                ),
            });
        }
        if self.chart.coordinates.iter().any(|n| n == "t") {
            return Err(ManifestError::Value {
                context: "chart.coordinates".to_string(),
                message: "`t` is reserved for the deformation parameter".to_string(),
            });
        }
        Ok(VarSet::with_cap(
            self.chart.coordinates.clone(),
            self.params.degree_cap,
        ))
    }

    fn poly(
        &self,
        vars: &Arc<VarSet>,
        text: &str,
        context: impl Fn() -> String,
    ) -> Result<Polynomial, ManifestError> {
        Polynomial::parse(vars, text).map_err(|e| ManifestError::Poly {
            context: context(),
            source: e,
        })
    }

    /// Builds the (unvalidated) chart.
    pub fn build_chart(&self) -> Result<FilteredChart, ManifestError> {
        let vars = self.varset()?;
        let n = self.chart.dim;
        let mut frame = Vec::with_capacity(self.chart.frame.len());
        for (a, components) in self.chart.frame.iter().enumerate() {
            if components.len() != n {
                return Err(ManifestError::Value {
                    context: format!("chart.frame[{}]", a + 1),
                    message: format!("{} components for dim {n}", components.len()),
                });
            }
            let polys: Vec<Polynomial> = components
                .iter()
                .enumerate()
                .map(|(i, text)| {
                    self.poly(&vars, text, || format!("chart.frame[{}][{}]", a + 1, i + 1))
                })
                .collect::<Result<_, _>>()?;
            frame.push(crate::polyfields::PolyVectorField::new(polys));
        }
        let sample_points = if self.chart.sample_points.is_empty() {
            default_sample_points(n)
        } else {
            self.chart
                .sample_points
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    p.iter()
                        .map(|s| {
                            parse_rat(s).map_err(|m| ManifestError::Value {
                                context: format!("chart.sample_points[{}]", i + 1),
                                message: m,
                            })
                        })
                        .collect::<Result<Vec<Rat>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?
        };
        Ok(FilteredChart::new(
            vars,
            frame,
            self.chart.orders.clone(),
            self.chart.depth,
            sample_points,
        )?)
    }

    /// Builds and validates the chart, or reports the failed checks.
    pub fn build_validated(&self) -> Result<ValidatedChart, ManifestError> {
        self.build_chart()?
            .validated()
            .map_err(|report| ManifestError::InvalidChart(report.to_string()))
    }

    /// Builds a named splitting; the canonical splitting when the name is
    /// `"canonical"` or absent from the table.
    pub fn build_splitting(
        &self,
        chart: &ValidatedChart,
        name: &str,
    ) -> Result<Splitting, ManifestError> {
        match self.splittings.get(name) {
            None if name == "canonical" => Ok(Splitting::canonical(chart)),
            None => Err(ManifestError::Value {
                context: "splittings".to_string(),
                message: format!("no splitting named `{name}`"),
            }),
            Some(spec) => {
                let mut corrections = BTreeMap::new();
                for c in &spec.corrections {
                    if c.a == 0 || c.b == 0 || c.a > chart.dim() || c.b > chart.dim() {
                        return Err(ManifestError::Value {
                            context: format!("splittings.{name}"),
                            message: format!("correction index ({}, {}) out of range", c.a, c.b),
                        });
                    }
                    let poly = self.poly(chart.vars(), &c.poly, || {
                        format!("splittings.{name}.corrections[{},{}]", c.a, c.b)
                    })?;
                    corrections.insert((c.a - 1, c.b - 1), poly);
                }
                Ok(Splitting::new(chart, corrections)?)
            }
        }
    }

    /// Builds the connection; flat when the manifest has none.
    pub fn build_connection(
        &self,
        chart: &ValidatedChart,
    ) -> Result<GradedConnection, ManifestError> {
        let Some(spec) = &self.connection else {
            return Ok(GradedConnection::flat(chart));
        };
        let mut table = BTreeMap::new();
        for entry in &spec.christoffels {
            if entry.c == 0
                || entry.a == 0
                || entry.b == 0
                || entry.c > chart.dim()
                || entry.a > chart.dim()
                || entry.b > chart.dim()
            {
                return Err(ManifestError::Value {
                    context: "connection.christoffels".to_string(),
                    message: format!(
                        "index ({}, {}, {}) out of range",
                        entry.c, entry.a, entry.b
                    ),
                });
            }
            let poly = self.poly(chart.vars(), &entry.poly, || {
                format!(
                    "connection.christoffels[{},{},{}]",
                    entry.c, entry.a, entry.b
                )
            })?;
            table.insert((entry.c - 1, entry.a - 1, entry.b - 1), poly);
        }
        Ok(GradedConnection::new(chart, table)?)
    }

    /// Builds a named section (either kind shares the coefficient format).
    pub fn build_section(
        &self,
        chart: &ValidatedChart,
        name: &str,
    ) -> Result<ManifestSection, ManifestError> {
        let spec = self
            .sections
            .get(name)
            .ok_or_else(|| ManifestError::Value {
                context: "sections".to_string(),
                message: format!("no section named `{name}`"),
            })?;
        let vars = chart.vars().extended("t");
        let coeffs: Vec<Polynomial> = spec
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, text)| {
                self.poly(&vars, text, || format!("sections.{name}.coeffs[{}]", i + 1))
            })
            .collect::<Result<_, _>>()?;
        match spec.kind.as_str() {
            "h" => Ok(ManifestSection::H(HSection::new(chart, coeffs)?)),
            "graded" => Ok(ManifestSection::Graded(GradedSection::new(chart, coeffs)?)),
            other => Err(ManifestError::Value {
                context: format!("sections.{name}.kind"),
                message: format!("expected `h` or `graded`, got `{other}`"),
            }),
        }
    }

    /// The manifest's t-sequence as exact rationals.
    pub fn t_sequence(&self) -> Result<Vec<Rat>, ManifestError> {
        self.params
            .t_seq
            .iter()
            .map(|s| {
                parse_rat(s).map_err(|m| ManifestError::Value {
                    context: "params.t_seq".to_string(),
                    message: m,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub enum ManifestSection {
    H(HSection),
    Graded(GradedSection),
}

/// Bundled manifest by name (see [`bundled`]).
pub fn bundled_manifest(name: &str) -> Option<Manifest> {
    let chart = bundled::chart_by_name(name)?;
    Some(Manifest::for_chart(name, &chart))
}

/// Loads a manifest from a path, falling back to the bundled example of
/// that name when no such file exists.
pub fn load_manifest(path_or_name: &str) -> Result<Manifest, ManifestError> {
    let path = Path::new(path_or_name);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| ManifestError::Io {
            path: path_or_name.to_string(),
            message: e.to_string(),
        })?;
        return Manifest::from_json(&text);
    }
    bundled_manifest(path_or_name).ok_or_else(|| ManifestError::NotFound(path_or_name.to_string()))
}
