use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Physical,
    Mac,
    Routing,
    Transport,
    Application,
    Addon,
}

impl Slot {
    /// The five slots every culture must fill exactly once.
    pub const LAYERS: [Slot; 5] = [
        Slot::Physical,
        Slot::Mac,
        Slot::Routing,
        Slot::Transport,
        Slot::Application,
    ];

    fn needs_ops(self) -> bool {
        matches!(self, Slot::Routing | Slot::Transport | Slot::Application)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Slot::Physical => "physical",
            Slot::Mac => "mac",
            Slot::Routing => "routing",
            Slot::Transport => "transport",
            Slot::Application => "application",
            Slot::Addon => "addon",
        })
    }
}

impl FromStr for Slot {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "physical" => Slot::Physical,
            "mac" => Slot::Mac,
            "routing" => Slot::Routing,
            "transport" => Slot::Transport,
            "application" => Slot::Application,
            "addon" | "add-on" => Slot::Addon,
            other => return Err(format!("unknown slot `{other}`")),
        })
    }
}

/// Basic-needs taxonomy: plain layer functionality, or one of the three
/// device needs (energy, privacy, security).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Layer,
    Energy,
    Privacy,
    Security,
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "layer" => Category::Layer,
            "energy" => Category::Energy,
            "privacy" => Category::Privacy,
            "security" => Category::Security,
            other => return Err(format!("unknown category `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtSpec {
    pub name: String,
    pub slot: Slot,
    pub category: Category,
    pub declared_ops: BTreeSet<String>,
    pub params: BTreeMap<String, String>,
}

impl ArtSpec {
    pub fn new(
        name: impl Into<String>,
        slot: Slot,
        category: Category,
        ops: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self, ModelError> {
        let art = ArtSpec {
            name: name.into(),
            slot,
            category,
            declared_ops: ops.into_iter().map(Into::into).collect(),
            params: BTreeMap::new(),
        };
        art.validate()?;
        Ok(art)
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_owned(), value.to_string());
        self
    }

    pub fn param_f64(&self, key: &str) -> Option<f64> {
        self.params.get(key).and_then(|v| v.parse().ok())
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub(crate) fn validate(&self) -> Result<(), ModelError> {
        if self.slot == Slot::Addon && self.category == Category::Layer {
            return Err(ModelError::BadCategory {
                name: self.name.clone(),
                reason: "add-on arts must be energy, privacy or security".into(),
            });
        }
        if self.slot.needs_ops() && self.declared_ops.is_empty() {
            return Err(ModelError::EmptyOps(self.name.clone()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn addon_must_carry_a_need_category() {
        let err = ArtSpec::new("Watchdog", Slot::Addon, Category::Layer, ["observe"]).unwrap_err();
        assert!(matches!(err, ModelError::BadCategory { .. }));
        assert!(ArtSpec::new("Watchdog", Slot::Addon, Category::Security, ["observe"]).is_ok());
    }

    #[test]
    fn service_layers_need_operations() {
        let none: [&str; 0] = [];
        assert_eq!(
            ArtSpec::new("FTP", Slot::Application, Category::Layer, none),
            Err(ModelError::EmptyOps("FTP".into()))
        );
        assert!(ArtSpec::new("CSMA", Slot::Mac, Category::Layer, none).is_ok());
    }

    #[test]
    fn slot_names_parse() {
        for slot in Slot::LAYERS {
            assert_eq!(slot.to_string().parse::<Slot>(), Ok(slot));
        }
        assert!("network".parse::<Slot>().is_err());
    }
}
