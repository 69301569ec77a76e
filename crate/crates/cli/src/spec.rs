//! Manifold spec and algebra file ingestion.

use std::sync::Arc;

use flatcert::geometry::{Metric, Space, VectorField};
use flatcert::scalar::parse_rational;
use flatcert::subriemann::SubRiemannian;
use flatcert::symexpr::Point;
use flatcert::{CarnotAlgebra, Chart, ExprMatrix, Rational, RationalMatrix, SampleConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Rational written as a JSON integer or as a `"p/q"` string.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum RationalText {
    Int(i64),
    Text(String),
}

impl RationalText {
    pub fn parse(&self, at: &str) -> Result<Rational, CliError> {
        match self {
            RationalText::Int(v) => Ok(Rational::from_integer((*v).into())),
            RationalText::Text(t) => {
                parse_rational(t).ok_or_else(|| CliError::Spec(format!("{at}: '{t}' is not a rational number")))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SpecMode {
    #[default]
    Coordinates,
    ConstantStructure,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartBlock {
    pub dim: Option<usize>,
    #[serde(default)]
    pub coordinates: Vec<String>,
    #[serde(default)]
    pub constraints: Vec<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureBlock {
    pub basis: Vec<String>,
    #[serde(default)]
    pub brackets: Vec<(usize, usize, usize, RationalText)>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameBlock {
    #[serde(default)]
    pub names: Vec<String>,
    pub fields: Vec<Vec<String>>,
}

/// Input document for every manifold command.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub mode: SpecMode,
    #[serde(default)]
    pub chart: ChartBlock,
    pub structure: Option<StructureBlock>,
    pub frame: Option<FrameBlock>,
    pub metric: Option<Vec<Vec<String>>>,
}

fn expr_error(at: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Spec(format!("{at}: {e}"))
}

impl ManifoldSpec {
    pub fn from_json(text: &str) -> Result<ManifoldSpec, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Spec(e.to_string()))
    }

    pub fn space(&self) -> Result<Arc<Space>, CliError> {
        match self.mode {
            SpecMode::Coordinates => {
                if self.structure.is_some() {
                    return Err(CliError::Spec("structure block given in coordinates mode".into()));
                }
                let names: Vec<&str> = self.chart.coordinates.iter().map(String::as_str).collect();
                if let Some(d) = self.chart.dim {
                    if d != names.len() {
                        return Err(CliError::Spec(format!(
                            "chart.dim is {d} but {} coordinates are named",
                            names.len()
                        )));
                    }
                }
                let mut chart = Chart::new(&names).map_err(|e| expr_error("chart.coordinates", e))?;
                for (i, c) in self.chart.constraints.iter().enumerate() {
                    chart = chart.with_constraint(c).map_err(|e| expr_error(&format!("chart.constraints[{i}]"), e))?;
                }
                Ok(Space::coordinates(chart))
            }
            SpecMode::ConstantStructure => {
                let s = self
                    .structure
                    .as_ref()
                    .ok_or_else(|| CliError::Spec("constant-structure mode needs a structure block".into()))?;
                if !self.chart.coordinates.is_empty() {
                    return Err(CliError::Spec("constant-structure mode takes no coordinates".into()));
                }
                let mut brackets = Vec::new();
                for (n, (i, j, k, c)) in s.brackets.iter().enumerate() {
                    brackets.push((*i, *j, *k, c.parse(&format!("structure.brackets[{n}]"))?));
                }
                let basis: Vec<&str> = s.basis.iter().map(String::as_str).collect();
                Space::constant_structure(&basis, &brackets).map_err(|e| expr_error("structure", e))
            }
        }
    }

    pub fn fields(&self, space: &Arc<Space>) -> Result<Vec<VectorField>, CliError> {
        let frame = self.frame.as_ref().ok_or_else(|| CliError::Spec("command needs a frame block".into()))?;
        let mut out = Vec::new();
        for (i, comps) in frame.fields.iter().enumerate() {
            if comps.len() != space.dim() {
                return Err(CliError::Spec(format!(
                    "frame.fields[{i}] has {} components, dimension is {}",
                    comps.len(),
                    space.dim()
                )));
            }
            for (j, c) in comps.iter().enumerate() {
                space.chart().parse(c).map_err(|e| expr_error(&format!("frame.fields[{i}][{j}]"), e))?;
            }
            let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
            out.push(space.field(&refs).map_err(|e| expr_error(&format!("frame.fields[{i}]"), e))?);
        }
        Ok(out)
    }

    pub fn sub_riemannian(&self) -> Result<SubRiemannian, CliError> {
        let space = self.space()?;
        let sr = SubRiemannian::new(self.fields(&space)?).map_err(|e| expr_error("frame", e))?;
        let names = &self.frame.as_ref().map(|f| f.names.clone()).unwrap_or_default();
        if names.is_empty() {
            return Ok(sr);
        }
        if names.len() != sr.rank() {
            return Err(CliError::Spec(format!("frame.names has {} entries for {} fields", names.len(), sr.rank())));
        }
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Ok(sr.with_names(&refs))
    }

    pub fn metric(&self, config: &SampleConfig) -> Result<Metric, CliError> {
        let rows = self.metric.as_ref().ok_or_else(|| CliError::Spec("command needs a metric block".into()))?;
        if self.mode != SpecMode::Coordinates {
            return Err(CliError::Spec("metric commands need coordinates mode".into()));
        }
        let space = self.space()?;
        let n = space.dim();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(CliError::Spec(format!("metric must be {n}x{n}")));
        }
        let mut entries = Vec::with_capacity(n);
        for (i, row) in rows.iter().enumerate() {
            let mut parsed = Vec::with_capacity(n);
            for (j, text) in row.iter().enumerate() {
                parsed.push(space.chart().parse(text).map_err(|e| expr_error(&format!("metric[{i}][{j}]"), e))?);
            }
            entries.push(parsed);
        }
        Metric::new(&space, ExprMatrix::from_rows(entries), config).map_err(|e| expr_error("metric", e))
    }
}

/// Parses `a,b,c` into a point with exact coordinates.
pub fn parse_point(text: &str, dim: usize) -> Result<Point, CliError> {
    let coords = parse_vector(text)?;
    if coords.len() != dim {
        return Err(CliError::Usage(format!("point has {} coordinates, dimension is {dim}", coords.len())));
    }
    Ok(Point::new(coords))
}

pub fn parse_vector(text: &str) -> Result<Vec<Rational>, CliError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| parse_rational(t).ok_or_else(|| CliError::Usage(format!("'{}' is not a rational number", t.trim()))))
        .collect()
}

/// Interchange format for stratified algebras.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraFile {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub strata: Vec<usize>,
    #[serde(default)]
    pub names: Vec<String>,
    pub brackets: Vec<(usize, usize, usize, RationalText)>,
    /// Inner product on the first stratum; identity when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<Vec<Vec<RationalText>>>,
}

impl AlgebraFile {
    pub fn from_json(text: &str) -> Result<AlgebraFile, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Spec(e.to_string()))
    }

    pub fn algebra(&self) -> Result<CarnotAlgebra, CliError> {
        let n: usize = self.strata.iter().sum();
        let names = if self.names.is_empty() { (1..=n).map(|i| format!("e{i}")).collect() } else { self.names.clone() };
        let mut brackets = Vec::new();
        for (idx, (i, j, k, c)) in self.brackets.iter().enumerate() {
            brackets.push((*i, *j, *k, c.parse(&format!("brackets[{idx}]"))?));
        }
        let m = self.strata.first().copied().unwrap_or(0);
        let gram = match &self.gram {
            None => RationalMatrix::identity(m),
            Some(rows) => {
                let mut parsed = Vec::new();
                for (i, row) in rows.iter().enumerate() {
                    let mut r = Vec::new();
                    for (j, v) in row.iter().enumerate() {
                        r.push(v.parse(&format!("gram[{i}][{j}]"))?);
                    }
                    parsed.push(r);
                }
                if parsed.iter().any(|r| r.len() != parsed.len()) {
                    return Err(CliError::Spec("gram must be square".into()));
                }
                RationalMatrix::from_rows(parsed)
            }
        };
        CarnotAlgebra::new(names, self.strata.clone(), &brackets, gram).map_err(|e| CliError::Spec(e.to_string()))
    }

    pub fn from_algebra(alg: &CarnotAlgebra, name: &str) -> AlgebraFile {
        let gram = alg.gram();
        AlgebraFile {
            name: name.to_string(),
            strata: alg.strata().to_vec(),
            names: alg.names().to_vec(),
            brackets: alg
                .nonzero_brackets()
                .into_iter()
                .map(|(i, j, k, c)| (i, j, k, RationalText::Text(c.to_string())))
                .collect(),
            gram: Some(
                (0..gram.rows())
                    .map(|i| gram.row(i).iter().map(|v| RationalText::Text(v.to_string())).collect())
                    .collect(),
            ),
        }
    }
}
