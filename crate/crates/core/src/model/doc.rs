//! Text document form of a model (YAML), with a version header and
//! referential checks on load.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{ActionEdge, ActionKind, AspectNode, AtgModel, EdgeKey, Feature};
use crate::error::{AtgError, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
struct ModelDoc<T> {
    atg_version: u32,
    thin_var: T,
    features: Vec<Feature<T>>,
    nodes: Vec<AspectNode>,
    edges: Vec<EdgeDoc<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
struct EdgeDoc<T> {
    src: String,
    kind: ActionKind,
    dst: String,
    visit_count: u64,
    q: T,
    mean: Vec<T>,
    cov: Matrix<T>,
    samples: Vec<Vec<T>>,
}

impl<T: Real + Serialize> AtgModel<T> {
    pub fn to_document(&self) -> Result<String> {
        self.to_document_with_header(&[])
    }

    /// Serializes with `# `-prefixed comment lines in front of the document.
    pub fn to_document_with_header(&self, header: &[String]) -> Result<String> {
        let doc = ModelDoc {
            atg_version: MODEL_FORMAT_VERSION,
            thin_var: self.thin_var,
            features: self.features.clone(),
            nodes: self.nodes.values().cloned().collect(),
            edges: self
                .edges
                .values()
                .map(|e| EdgeDoc {
                    src: e.src.clone(),
                    kind: e.kind,
                    dst: e.dst.clone(),
                    visit_count: e.visit_count,
                    q: e.q,
                    mean: e.dist.mean.clone(),
                    cov: e.dist.cov.clone(),
                    samples: e.samples.clone(),
                })
                .collect(),
        };
        let body = serde_yaml::to_string(&doc).map_err(|e| AtgError::Document(e.to_string()))?;
        let mut out = String::new();
        for line in header {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&body);
        Ok(out)
    }
}

impl<T: Real + DeserializeOwned> AtgModel<T> {
    pub fn from_document(text: &str) -> Result<Self> {
        let doc: ModelDoc<T> = serde_yaml::from_str(text).map_err(|e| match e.location() {
            Some(loc) => AtgError::Parse {
                line: loc.line(),
                column: loc.column(),
                message: e.to_string(),
            },
            None => AtgError::Document(e.to_string()),
        })?;
        if doc.atg_version != MODEL_FORMAT_VERSION {
            return Err(AtgError::Document(format!(
                "unsupported atg_version {} (expected {MODEL_FORMAT_VERSION})",
                doc.atg_version
            )));
        }
        let mut model = AtgModel::new(doc.thin_var);
        model.features = doc.features;
        for node in doc.nodes {
            if model.nodes.insert(node.key.clone(), node).is_some() {
                return Err(AtgError::Document("duplicate node key".into()));
            }
        }
        for e in doc.edges {
            let key = EdgeKey::new(e.src.clone(), e.kind, e.dst.clone());
            if e.samples.is_empty() {
                return Err(AtgError::Document(format!("edge {key:?} has no samples")));
            }
            let dist = e.kind.fit(&e.samples, model.thin_var)?;
            if dist.mean != e.mean || dist.cov != e.cov {
                return Err(AtgError::Document(format!(
                    "edge {key:?} distribution does not match its samples"
                )));
            }
            let edge = ActionEdge {
                src: e.src,
                dst: e.dst,
                kind: e.kind,
                samples: e.samples,
                dist,
                q: e.q,
                visit_count: e.visit_count,
            };
            if model.edges.insert(key, edge).is_some() {
                return Err(AtgError::Document("duplicate edge".into()));
            }
        }
        model.check_integrity()?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Experience;

    fn sample_model() -> AtgModel<f64> {
        let mut m = AtgModel::new(1e-6);
        let id = m.upsert_feature("ARtag", "3", [0.1, 0.2, 0.3], Matrix::identity(3).scale(0.5));
        m.get_or_create_node("ARtag:3", &[id]).unwrap();
        m.get_or_create_node("∅", &[]).unwrap();
        for rho in [0.1, 0.2, 0.1 + 1e-17, -3.0] {
            m.record_experience(&Experience {
                s: "ARtag:3".into(),
                kind: ActionKind::Orbit,
                rho: vec![rho],
                s_prime: "∅".into(),
            })
            .unwrap();
        }
        m.set_q(&EdgeKey::new("ARtag:3", ActionKind::Orbit, "∅"), 0.1234567890123)
            .unwrap();
        m
    }

    #[test]
    fn empty_round_trip() {
        let m = AtgModel::<f64>::new(1e-6);
        let text = m.to_document().unwrap();
        assert!(text.contains("atg_version: 1"));
        assert_eq!(AtgModel::<f64>::from_document(&text).unwrap(), m);
    }

    #[test]
    fn populated_round_trip_is_exact() {
        let m = sample_model();
        let text = m
            .to_document_with_header(&["seed: 7".into(), "config_hash: abc".into()])
            .unwrap();
        assert!(text.starts_with("# seed: 7\n# config_hash: abc\n"));
        let back = AtgModel::<f64>::from_document(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_document_with_header(&["seed: 7".into(), "config_hash: abc".into()]).unwrap(), text);
    }

    #[test]
    fn dangling_edge_rejected() {
        let text = sample_model().to_document().unwrap();
        let broken = text.replace("- key: ∅\n  feature_ids: []\n", "");
        assert_ne!(broken, text);
        assert!(AtgModel::<f64>::from_document(&broken).is_err());
    }

    #[test]
    fn malformed_reports_location() {
        let err = AtgModel::<f64>::from_document("atg_version: 1\nthin_var: [\n").unwrap_err();
        assert!(matches!(err, AtgError::Parse { line, .. } if line >= 2), "{err:?}");
    }

    #[test]
    fn wrong_version_rejected() {
        let text = AtgModel::<f64>::new(1e-6).to_document().unwrap();
        let text = text.replace("atg_version: 1", "atg_version: 2");
        assert!(matches!(
            AtgModel::<f64>::from_document(&text),
            Err(AtgError::Document(_))
        ));
    }

    #[test]
    fn tampered_distribution_rejected() {
        let m = sample_model();
        let text = m.to_document().unwrap();
        let tampered = text.replacen("- -3.0\n", "- -2.5\n", 1);
        assert_ne!(tampered, text);
        assert!(AtgModel::<f64>::from_document(&tampered).is_err());
    }
}
