use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simnet::Cover;
use crate::tables::{Schema, VarId};

/// One cover edge: class labels and the features judged relevant to
/// telling them apart.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeConfig {
    pub classes: Vec<String>,
    pub features: Vec<String>,
}

/// Similarity-network inputs, read from TOML:
///
/// ```toml
/// order = ["c", "x1", "x2"]   # optional
///
/// [[edge]]
/// classes = ["a", "b"]
/// features = ["x1", "x2"]
/// ```
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimnetConfig {
    #[serde(default)]
    pub order: Option<Vec<String>>,
    pub edge: Vec<EdgeConfig>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedSimnet {
    pub cover: Cover,
    pub features: Vec<Vec<VarId>>,
    pub order: Option<Vec<VarId>>,
}

impl SimnetConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        SimnetConfig::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Resolves class labels and variable names against a dataset schema.
    pub fn resolve(&self, schema: &Schema) -> Result<ResolvedSimnet> {
        let class = schema.require_class()?;
        let cvar = &schema.vars()[class];
        let mut edges = Vec::with_capacity(self.edge.len());
        let mut features = Vec::with_capacity(self.edge.len());
        for e in &self.edge {
            let classes = e
                .classes
                .iter()
                .map(|l| {
                    cvar.label_code(l)
                        .ok_or_else(|| Error::InvalidCover(format!("`{l}` is not a value of `{}`", cvar.name)))
                })
                .collect::<Result<Vec<_>>>()?;
            let f = e.features.iter().map(|n| schema.index_of(n)).collect::<Result<Vec<_>>>()?;
            if f.contains(&class) {
                return Err(Error::InvalidCover("the class cannot be a relevant feature".into()));
            }
            edges.push(classes);
            features.push(f);
        }
        let order = match &self.order {
            None => None,
            Some(names) => Some(names.iter().map(|n| schema.index_of(n)).collect::<Result<Vec<_>>>()?),
        };
        Ok(ResolvedSimnet { cover: Cover::new(edges), features, order })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::{Role, Variable};

    #[test]
    fn resolves_labels_and_names() {
        let schema = Schema::new(vec![
            Variable::new("x1", 2, Role::Feature),
            Variable::with_labels("digit", Role::Class, vec!["a".into(), "b".into(), "z".into()]),
        ])
        .unwrap();
        let cfg = SimnetConfig::from_toml(
            "order = [\"digit\", \"x1\"]\n[[edge]]\nclasses = [\"a\", \"b\"]\nfeatures = [\"x1\"]\n[[edge]]\nclasses = [\"b\", \"z\"]\nfeatures = [\"x1\"]\n",
        )
        .unwrap();
        let r = cfg.resolve(&schema).unwrap();
        assert_eq!(r.cover.edges, vec![vec![0, 1], vec![1, 2]]);
        assert_eq!(r.features, vec![vec![0], vec![0]]);
        assert_eq!(r.order, Some(vec![1, 0]));
        let bad = SimnetConfig::from_toml("[[edge]]\nclasses = [\"q\"]\nfeatures = [\"x1\"]\n").unwrap();
        assert!(bad.resolve(&schema).is_err());
    }
}
