use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{FiniteMdp, LabelSet, LabelTable, LABEL_NAMES};
use crate::error::{Error, Result};

/// JSON interchange form of an MDP together with its label tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpFile {
    pub num_states: usize,
    pub num_actions: usize,
    pub next: Vec<Vec<usize>>,
    pub labels: BTreeMap<String, Vec<f64>>,
}

impl MdpFile {
    pub fn from_parts(mdp: &FiniteMdp, labels: &LabelSet) -> Self {
        Self {
            num_states: mdp.num_states(),
            num_actions: mdp.num_actions(),
            next: mdp.rows().map(<[usize]>::to_vec).collect(),
            labels: labels.iter().map(|(k, v)| (k.clone(), v.values().to_vec())).collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }

    /// Validates the file and splits it into the MDP and its labels.
    pub fn into_parts(self) -> Result<(FiniteMdp, LabelSet)> {
        let mdp = FiniteMdp::new(self.next)?;
        if mdp.num_states() != self.num_states || mdp.num_actions() != self.num_actions {
            return Err(Error::InvalidMdp(format!(
                "declared {}x{} but table is {}x{}",
                self.num_states,
                self.num_actions,
                mdp.num_states(),
                mdp.num_actions()
            )));
        }
        let mut labels = LabelSet::new();
        for (name, values) in self.labels {
            if !LABEL_NAMES.contains(&name.as_str()) {
                return Err(Error::Parse(format!("unknown label `{name}`")));
            }
            let table = LabelTable::new(values)?;
            mdp.check_labels(&name, &table)?;
            labels.insert(name, table);
        }
        Ok((mdp, labels))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_split() {
        let text = r#"{"labels":{"l":[0.5]},"next":[[0]],"num_actions":1,"num_states":1}"#;
        let (mdp, labels) = MdpFile::parse(text).unwrap().into_parts().unwrap();
        assert_eq!(mdp.num_states(), 1);
        assert_eq!(labels["l"].get(0), 0.5);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"num_states":1,"num_actions":1,"next":[[0]],"labels":{},"extra":1}"#;
        assert!(MdpFile::parse(text).is_err());
        let text = r#"{"num_states":1,"num_actions":1,"next":[[0]],"labels":{"q":[1]}}"#;
        assert!(MdpFile::parse(text).unwrap().into_parts().is_err());
    }

    #[test]
    fn declared_sizes_checked() {
        let text = r#"{"num_states":2,"num_actions":1,"next":[[0]],"labels":{}}"#;
        assert!(MdpFile::parse(text).unwrap().into_parts().is_err());
        let text = r#"{"num_states":1,"num_actions":1,"next":[[0]],"labels":{"g":[1,2]}}"#;
        assert!(matches!(
            MdpFile::parse(text).unwrap().into_parts(),
            Err(Error::LabelSize { .. })
        ));
    }
}
