//! File formats: instance JSON (finite and real backends), paths JSON and
//! trace CSV.
//!
//! Finite instance:
//!
//! ```json
//! {"backend":"finite","labels":["a","b"],
//!  "metric":{"type":"explicit","matrix":[[0,1],[1,0]]},
//!  "relation":{"type":"edges","pairs":[[0,1]]},
//!  "map":[1,1],"x0":0,"epsilon":1.5,"k":0.5}
//! ```
//!
//! `metric` may instead be `{"type":"embedding","coords":[[..]],"norm":"l2"}`
//! (`l1`, `l2` or `linf`), and `relation` one of `total-index-order`,
//! `strict-index-order`, `universal` or `componentwise-le` (embedding only).
//!
//! Real instance: `{"backend":"real","map":["0.5*x1+0.25"],"x0":[1],
//! "epsilon":1,"k":0.5,"bounds":{"lo":[-1],"hi":[2]}}` with `bounds`
//! optional.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::expr::{Bounds, RealMap};
use crate::fmt::g17;
use crate::paths::Polyline;
use crate::solver::{IterationTrace, RealInstance};
use crate::space::{FiniteInstance, FiniteSpace, Norm, Relation, RelationKind, SelfMapTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MetricSpec {
    Explicit { matrix: Vec<Vec<f64>> },
    Embedding { coords: Vec<Vec<f64>>, norm: Norm },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RelationSpec {
    Edges { pairs: Vec<(usize, usize)> },
    TotalIndexOrder,
    StrictIndexOrder,
    Universal,
    ComponentwiseLe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub metric: MetricSpec,
    pub relation: RelationSpec,
    pub map: Vec<usize>,
    pub x0: usize,
    pub epsilon: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealSpec {
    pub map: Vec<String>,
    pub x0: Vec<f64>,
    pub epsilon: f64,
    pub k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "lowercase")]
pub enum InstanceFile {
    Finite(FiniteSpec),
    Real(RealSpec),
}

impl FiniteSpec {
    pub fn from_instance(inst: &FiniteInstance) -> Self {
        let metric = match inst.space.embedding() {
            Some(e) => MetricSpec::Embedding { coords: e.coords.clone(), norm: e.norm },
            None => MetricSpec::Explicit { matrix: inst.space.rows() },
        };
        let relation = match inst.relation.kind() {
            RelationKind::TotalIndexOrder => RelationSpec::TotalIndexOrder,
            RelationKind::StrictIndexOrder => RelationSpec::StrictIndexOrder,
            RelationKind::Universal => RelationSpec::Universal,
            RelationKind::ExplicitEdges | RelationKind::ComponentwiseLe => {
                RelationSpec::Edges { pairs: inst.relation.pairs().collect() }
            }
        };
        FiniteSpec {
            labels: inst.space.labels().map(<[String]>::to_vec),
            metric,
            relation,
            map: inst.map.image().to_vec(),
            x0: inst.x0,
            epsilon: inst.epsilon,
            k: inst.k,
        }
    }

    pub fn to_instance(&self) -> Result<FiniteInstance> {
        let mut space = match &self.metric {
            MetricSpec::Explicit { matrix } => FiniteSpace::from_matrix(matrix.clone())?,
            MetricSpec::Embedding { coords, norm } => FiniteSpace::from_coords(coords.clone(), *norm)?,
        };
        if let Some(labels) = &self.labels {
            space = space.with_labels(labels.clone())?;
        }
        let n = space.len();
        let relation = match &self.relation {
            RelationSpec::Edges { pairs } => Relation::from_pairs(n, pairs)?,
            RelationSpec::TotalIndexOrder => Relation::total_index_order(n)?,
            RelationSpec::StrictIndexOrder => Relation::strict_index_order(n)?,
            RelationSpec::Universal => Relation::universal(n)?,
            RelationSpec::ComponentwiseLe => match &self.metric {
                MetricSpec::Embedding { coords, .. } => Relation::componentwise_le(coords)?,
                MetricSpec::Explicit { .. } => {
                    return Err(invalid("componentwise-le needs an embedding metric"));
                }
            },
        };
        FiniteInstance::new(space, relation, SelfMapTable::new(self.map.clone())?, self.x0, self.epsilon, self.k)
    }
}

impl RealSpec {
    pub fn to_instance(&self) -> Result<RealInstance> {
        let map = RealMap::parse(&self.map)?;
        let bounds = self.bounds.as_ref().map(|b| Bounds::new(b.lo.clone(), b.hi.clone())).transpose()?;
        RealInstance::new(map, self.x0.clone(), self.k, self.epsilon, bounds)
    }
}

pub enum Instance {
    Finite(FiniteInstance),
    Real(RealInstance),
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        InstanceFile::parse(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<Instance> {
        Ok(match self {
            InstanceFile::Finite(spec) => Instance::Finite(spec.to_instance()?),
            InstanceFile::Real(spec) => Instance::Real(spec.to_instance()?),
        })
    }
}

/// Loads a file that must describe a finite instance.
pub fn load_finite(path: impl AsRef<Path>) -> Result<FiniteInstance> {
    match InstanceFile::load(path)? {
        InstanceFile::Finite(spec) => spec.to_instance(),
        InstanceFile::Real(_) => Err(invalid("expected a finite instance, got the real backend")),
    }
}

/// Instance JSON with fixed float formatting and key order.
pub fn instance_json(inst: &FiniteInstance) -> Result<String> {
    Ok(crate::fmt::to_json(&InstanceFile::Finite(FiniteSpec::from_instance(inst)))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsFile {
    pub gamma0: Vec<Vec<f64>>,
    pub map: Vec<String>,
    pub k: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon: f64,
    #[serde(default = "default_refinement")]
    pub refinement: usize,
}

fn default_refinement() -> usize {
    1
}

impl PathsFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn gamma0(&self) -> Result<Polyline> {
        Polyline::new(self.gamma0.clone())
    }

    pub fn real_map(&self) -> Result<RealMap> {
        RealMap::parse(&self.map)
    }
}

/// Trace CSV with columns `n,point,step_dist,step_bound,tail_bound`. One row
/// per iterate; cells without a value are empty.
pub fn write_trace_csv<P, W: Write>(trace: &IterationTrace<P>, point: impl Fn(&P) -> String, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "point", "step_dist", "step_bound", "tail_bound"])?;
    for (n, p) in trace.iterates.iter().enumerate() {
        let row = trace.bounds.as_ref().and_then(|b| b.rows.get(n));
        w.write_record([
            n.to_string(),
            point(p),
            trace.step_dists.get(n).map(|&d| g17(d)).unwrap_or_default(),
            row.map(|r| g17(r.step_bound)).unwrap_or_default(),
            row.and_then(|r| r.tail_bound).map(g17).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Space-separated coordinates for real-backend traces.
pub fn format_vector(v: &[f64]) -> String {
    v.iter().map(|&x| g17(x)).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    const GEO5: &str = r#"{"backend":"finite",
        "metric":{"type":"embedding","coords":[[0],[1],[1.5],[1.75],[1.875]],"norm":"l2"},
        "relation":{"type":"total-index-order"},"map":[1,2,3,4,4],"x0":0,"epsilon":1.1,"k":0.5}"#;

    #[test]
    fn finite_round_trip() {
        let InstanceFile::Finite(spec) = InstanceFile::parse(GEO5).unwrap() else { panic!() };
        let inst = spec.to_instance().unwrap();
        assert_eq!(inst.dist(0, 4), 1.875);
        let text = instance_json(&inst).unwrap();
        let InstanceFile::Finite(again) = InstanceFile::parse(&text).unwrap() else { panic!() };
        assert_eq!(again, spec);
        assert_eq!(instance_json(&again.to_instance().unwrap()).unwrap(), text);
        assert!(text.starts_with("{\n  \"backend\": \"finite\""));
    }

    #[test]
    fn edges_and_explicit() {
        let text = r#"{"backend":"finite","labels":["a","b"],
            "metric":{"type":"explicit","matrix":[[0,1],[1,0]]},
            "relation":{"type":"edges","pairs":[[0,1]]},"map":[1,1],"x0":0,"epsilon":1.5,"k":0.5}"#;
        let InstanceFile::Finite(spec) = InstanceFile::parse(text).unwrap() else { panic!() };
        let inst = spec.to_instance().unwrap();
        assert!(inst.relation.holds(0, 1) && !inst.relation.holds(1, 0));
        assert_eq!(inst.space.labels().unwrap(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(InstanceFile::parse("{").is_err());
        assert!(InstanceFile::parse(r#"{"backend":"other"}"#).is_err());
        let bad_map = GEO5.replace("[1,2,3,4,4]", "[1,2,3,4,9]");
        let InstanceFile::Finite(spec) = InstanceFile::parse(&bad_map).unwrap() else { panic!() };
        assert!(spec.to_instance().is_err());
    }

    #[test]
    fn real_backend() {
        let text = r#"{"backend":"real","map":["0.5*x1+0.25"],"x0":[1],"epsilon":1,"k":0.5,
            "bounds":{"lo":[-1],"hi":[2]}}"#;
        let Instance::Real(inst) = InstanceFile::parse(text).unwrap().build().unwrap() else { panic!() };
        assert_eq!(inst.map.eval(&[1.0]).unwrap(), vec![0.75]);
        let bad = text.replace("x1+", "x2+");
        assert!(InstanceFile::parse(&bad).unwrap().build().is_err());
    }

    #[test]
    fn trace_csv() {
        let InstanceFile::Finite(spec) = InstanceFile::parse(GEO5).unwrap() else { panic!() };
        let inst = spec.to_instance().unwrap();
        let mut t = crate::solver::iterate(&inst, &Default::default()).unwrap();
        t.attach_bounds(1, 0.5, 1.1).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&t, |p| p.to_string(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,point,step_dist,step_bound,tail_bound");
        assert_eq!(lines[1], "0,0,1,1.1000000000000001,");
        assert_eq!(lines[3], "2,2,0.25,0.27500000000000002,1.1000000000000001");
        assert_eq!(lines.len(), 7);
        assert!(lines[6].starts_with("5,4,,"));
    }
}
