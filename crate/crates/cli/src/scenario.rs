//! Scenario files: strict JSON schema, loading with JSON-pointer errors and
//! writing back.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use labgauge_core::exprfield::{Chart, Expr};
use labgauge_core::forms::{Connection, ConnectionTable, FormTable, KForm, SmoothMap};
use labgauge_core::gauge::Scenario;
use labgauge_core::liecore::{make_algebra, AlgebraSpec, FibreMetric};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("FileNotFound: {0}")]
    FileNotFound(PathBuf),
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("SchemaError at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("ValidationError: {0}")]
    Validation(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub dim: usize,
    pub metric_signs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<String>>,
    /// Sampling box as `[lo, hi]` per coordinate; defaults to `[-1, 1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<[f64; 2]>>,
}

/// On-disk scenario. Fibre indices in `nabla`, `zeta` and `A` are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure_constants: Option<Vec<Vec<Vec<f64>>>>,
    pub kappa: Vec<Vec<f64>>,
    #[serde(rename = "chart_M")]
    pub chart_m: ChartSpec,
    #[serde(rename = "chart_N")]
    pub chart_n: ChartSpec,
    /// `b -> a -> "dx_i" -> expression` with `nabla_i e_a = sum_b Gamma e_b`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nabla: Option<ConnectionTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<FormTable>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub gauge_field: Option<FormTable>,
    #[serde(rename = "V", default = "zero_potential")]
    pub potential: String,
    #[serde(rename = "X")]
    pub map: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    /// Per-check tolerance overrides keyed by check id.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

fn zero_potential() -> String {
    "0".into()
}

/// RFC 6901 pointer for a deserialization path.
fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        let token = match seg {
            Segment::Seq { index } => index.to_string(),
            Segment::Map { key } => key.clone(),
            Segment::Enum { variant } => variant.clone(),
            Segment::Unknown => continue,
        };
        out.push('/');
        out.push_str(&token.replace('~', "~0").replace('/', "~1"));
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, LoadError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            LoadError::Schema {
                pointer: pointer(e.path()),
                message: e.inner().to_string(),
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files serialize") + "\n"
    }

    /// Builds and validates the scenario; defaults are a flat connection, a
    /// zero twist and a zero gauge field.
    pub fn build(&self) -> Result<Scenario, LoadError> {
        let invalid = |e: labgauge_core::Error| LoadError::Validation(e.to_string());
        let algebra = match (&self.algebra, &self.structure_constants) {
            (Some(tag), None) => make_algebra(&AlgebraSpec::Named(tag.clone())),
            (None, Some(c)) => make_algebra(&AlgebraSpec::Constants(c.clone())),
            _ => {
                return Err(LoadError::Validation(
                    "exactly one of \"algebra\" and \"structure_constants\" is required".into(),
                ))
            }
        }
        .map_err(|e| invalid(e.into()))?;
        let algebra = Arc::new(algebra);
        let spacetime = Arc::new(chart(&self.chart_m, "chart_M")?);
        let target = Arc::new(chart(&self.chart_n, "chart_N")?);
        let fibre_metric = FibreMetric::from_rows(&self.kappa).map_err(|e| invalid(e.into()))?;
        let connection = match &self.nabla {
            Some(t) => Connection::from_table(target.clone(), algebra.clone(), t).map_err(invalid)?,
            None => Connection::flat(target.clone(), algebra.clone()),
        };
        let form = |c: &Arc<Chart>, t: &Option<FormTable>, degree| match t {
            Some(t) => KForm::from_table(c.clone(), algebra.clone(), degree, t).map_err(invalid),
            None => Ok(KForm::zero(c.clone(), algebra.clone(), degree)),
        };
        let twist = form(&target, &self.zeta, 2)?;
        let gauge_field = form(&spacetime, &self.gauge_field, 1)?;
        let potential = target.parse(&self.potential).map_err(|e| invalid(e.into()))?;
        let comps = self
            .map
            .iter()
            .map(|e| spacetime.parse(e))
            .collect::<Result<Vec<Expr>, _>>()
            .map_err(|e| invalid(e.into()))?;
        let map = SmoothMap::new(spacetime.clone(), target.clone(), comps).map_err(invalid)?;
        let s = Scenario {
            spacetime,
            spacetime_signs: self.chart_m.metric_signs.clone(),
            target,
            target_metric: self.chart_n.metric_signs.clone(),
            algebra,
            fibre_metric,
            connection,
            twist,
            potential,
            map,
            gauge_field,
        };
        s.validate().map_err(invalid)?;
        Ok(s)
    }

    pub fn from_scenario(s: &Scenario, algebra_tag: Option<&str>, seed: u64) -> Self {
        let spec = |c: &Chart, signs: &[f64]| ChartSpec {
            dim: c.dim(),
            metric_signs: signs.to_vec(),
            coordinates: Some(c.coordinate_names().to_vec()),
            domain: None,
        };
        let names = s.spacetime.coordinate_names();
        let nonzero = |t: FormTable| (!t.is_empty()).then_some(t);
        Self {
            algebra: algebra_tag.map(String::from),
            structure_constants: algebra_tag.is_none().then(|| s.algebra.structure_constants()),
            kappa: s.fibre_metric.rows(),
            chart_m: spec(&s.spacetime, &s.spacetime_signs),
            chart_n: spec(&s.target, &s.target_metric),
            nabla: (!s.connection.is_literal_flat()).then(|| s.connection.to_table()),
            zeta: nonzero(s.twist.to_table()),
            gauge_field: nonzero(s.gauge_field.to_table()),
            potential: s.potential.display_with(s.target.coordinate_names()).to_string(),
            map: s
                .map
                .components()
                .iter()
                .map(|e| e.display_with(names).to_string())
                .collect(),
            seed,
            tolerances: BTreeMap::new(),
        }
    }
}

fn chart(spec: &ChartSpec, what: &str) -> Result<Chart, LoadError> {
    let invalid = |m: String| LoadError::Validation(format!("{what}: {m}"));
    if spec.dim == 0 || spec.dim > 64 {
        return Err(invalid("dim must be in 1..=64".into()));
    }
    let mut c = match &spec.coordinates {
        Some(names) if names.len() != spec.dim => {
            return Err(invalid(format!("{} coordinate names for dim {}", names.len(), spec.dim)))
        }
        Some(names) => Chart::with_names(names.clone()).map_err(|e| invalid(e.to_string()))?,
        None => Chart::euclidean(spec.dim),
    };
    if let Some(domain) = &spec.domain {
        c = c
            .with_domain(domain.iter().map(|[lo, hi]| (*lo, *hi)).collect())
            .map_err(|e| invalid(e.to_string()))?;
    }
    Ok(c)
}

/// A loaded scenario with the digest of the file bytes it came from.
pub struct Loaded {
    pub file: ScenarioFile,
    pub scenario: Scenario,
    pub digest: String,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn load_scenario(path: &Path) -> Result<Loaded, LoadError> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => LoadError::FileNotFound(path.to_path_buf()),
        _ => LoadError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        },
    })?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| LoadError::Schema {
        pointer: "/".into(),
        message: format!("file is not UTF-8: {e}"),
    })?;
    let file = ScenarioFile::parse(&text)?;
    let scenario = file.build()?;
    Ok(Loaded {
        file,
        scenario,
        digest: digest(&bytes),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"algebra":"u1","chart_M":{"dim":2,"metric_signs":[1,1]},"chart_N":{"dim":1,"metric_signs":[1]},"kappa":[[1]],"X":["x1"],"V":"0","seed":7}"#;

    #[test]
    fn minimal_file_gets_defaults() {
        let f = ScenarioFile::parse(MINIMAL).unwrap();
        assert_eq!(f.seed, 7);
        let s = f.build().unwrap();
        assert!(s.connection.is_literal_flat());
        assert!(s.twist.expressions().all(Expr::is_zero));
        assert!(s.gauge_field.expressions().all(Expr::is_zero));
    }

    #[test]
    fn unknown_key_points_at_it() {
        let text = MINIMAL.replace("\"seed\":7", "\"seed\":7,\"zetta\":{}");
        match ScenarioFile::parse(&text) {
            Err(LoadError::Schema { pointer, .. }) => assert_eq!(pointer, "/zetta"),
            other => panic!("{other:?}"),
        }
        let nested = MINIMAL.replace("\"dim\":1,", "\"dim\":1,\"sign\":1,");
        match ScenarioFile::parse(&nested) {
            Err(LoadError::Schema { pointer, .. }) => assert_eq!(pointer, "/chart_N/sign"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn type_errors_carry_a_path() {
        let text = MINIMAL.replace("\"X\":[\"x1\"]", "\"X\":[1]");
        match ScenarioFile::parse(&text) {
            Err(LoadError::Schema { pointer, .. }) => assert_eq!(pointer, "/X/0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn jacobi_failure_is_a_validation_error() {
        let mut c = vec![vec![vec![0.0; 3]; 3]; 3];
        for (a, b, d) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            c[a][b][d] = 1.0;
            c[a][d][b] = -1.0;
        }
        c[0][1][2] = -1.0;
        let text = MINIMAL
            .replace("\"algebra\":\"u1\"", &format!("\"structure_constants\":{}", serde_json::to_string(&c).unwrap()))
            .replace("[[1]]", "[[1,0,0],[0,1,0],[0,0,1]]");
        let err = ScenarioFile::parse(&text).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("JacobiViolation"), "{err}");
    }

    #[test]
    fn round_trip_through_file() {
        let s = ScenarioFile::parse(MINIMAL).unwrap().build().unwrap();
        let f = ScenarioFile::from_scenario(&s, Some("u1"), 7);
        let again = ScenarioFile::parse(&f.to_json()).unwrap();
        assert_eq!(f, again);
        again.build().unwrap();
    }
}
