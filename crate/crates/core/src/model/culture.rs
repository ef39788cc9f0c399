use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{ArtSpec, Category, Machine, ModelError, Slot};
use crate::ids::NodeId;
use crate::sim::{LinkProfile, SimTime};

pub(crate) const PROACTIVE: &str = "proactive";

/// A validated composition of arts: one per layer slot plus optional add-ons.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CultureSpec {
    pub name: String,
    /// Human-facing service label recorded in society tables.
    pub service: String,
    pub arts: Vec<ArtSpec>,
}

impl CultureSpec {
    pub fn compose(
        name: impl Into<String>,
        arts: Vec<ArtSpec>,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        let culture = CultureSpec {
            service: name.clone(),
            name,
            arts,
        };
        culture.validate()?;
        Ok(culture)
    }

    pub fn with_service(mut self, service: impl Into<String>) -> Self {
        self.service = service.into();
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut by_slot: BTreeMap<Slot, &str> = BTreeMap::new();
        for art in &self.arts {
            art.validate()?;
            if art.slot == Slot::Addon {
                continue;
            }
            if let Some(first) = by_slot.insert(art.slot, &art.name) {
                return Err(ModelError::SlotConflict {
                    culture: self.name.clone(),
                    slot: art.slot,
                    first: first.to_owned(),
                    second: art.name.clone(),
                });
            }
        }
        if let Some(&slot) = Slot::LAYERS.iter().find(|s| !by_slot.contains_key(s)) {
            return Err(ModelError::IncompleteStack {
                culture: self.name.clone(),
                slot,
            });
        }
        let mut ops = BTreeSet::new();
        for op in self.arts.iter().flat_map(|a| a.declared_ops.iter()) {
            if !ops.insert(op) {
                return Err(ModelError::DuplicateOp {
                    culture: self.name.clone(),
                    op: op.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn art(&self, slot: Slot) -> Option<&ArtSpec> {
        self.arts.iter().find(|a| a.slot == slot)
    }

    pub fn addons(&self) -> impl Iterator<Item = &ArtSpec> {
        self.arts.iter().filter(|a| a.slot == Slot::Addon)
    }

    pub fn has_addon_category(&self, category: Category) -> bool {
        self.addons().any(|a| a.category == category)
    }

    pub fn declared_ops(&self) -> BTreeSet<&str> {
        self.arts
            .iter()
            .flat_map(|a| a.declared_ops.iter().map(String::as_str))
            .collect()
    }

    pub fn exposes(&self, op: &str) -> bool {
        self.owner_of(op).is_some()
    }

    pub fn owner_of(&self, op: &str) -> Option<&ArtSpec> {
        self.arts.iter().find(|a| a.declared_ops.contains(op))
    }

    pub fn application(&self) -> &str {
        self.art(Slot::Application).map_or("", |a| a.name.as_str())
    }

    pub fn routing(&self) -> &str {
        self.art(Slot::Routing).map_or("", |a| a.name.as_str())
    }

    /// Whether the routing art keeps tables fresh with periodic advertisements.
    pub fn is_proactive(&self) -> bool {
        self.art(Slot::Routing)
            .and_then(|a| a.param("mode"))
            .is_some_and(|m| m == PROACTIVE)
    }

    /// Link behavior from the physical (disc radius factor) and MAC (hop delay) arts.
    pub fn link_profile(&self, base_range: f64) -> LinkProfile {
        let factor = self
            .art(Slot::Physical)
            .and_then(|a| a.param_f64("range_factor"))
            .unwrap_or(1.0);
        let delay = self
            .art(Slot::Mac)
            .and_then(|a| a.param_f64("hop_delay"))
            .unwrap_or(DEFAULT_HOP_DELAY);
        LinkProfile {
            range: base_range * factor,
            hop_delay: SimTime::from_secs(delay),
        }
    }
}

pub const DEFAULT_HOP_DELAY: f64 = 0.01;

/// Art and culture registry. Populated during scenario setup, read-only while a
/// run executes.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    arts: BTreeMap<String, ArtSpec>,
    cultures: BTreeMap<String, CultureSpec>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry::default()
    }

    pub fn define_art(
        &mut self,
        name: &str,
        slot: Slot,
        category: Category,
        declared_ops: impl IntoIterator<Item = impl Into<String>>,
        params: impl IntoIterator<Item = (String, String)>,
    ) -> Result<&ArtSpec, ModelError> {
        let mut art = ArtSpec::new(name, slot, category, declared_ops)?;
        art.params.extend(params);
        self.insert_art(art)
    }

    pub fn insert_art(&mut self, art: ArtSpec) -> Result<&ArtSpec, ModelError> {
        art.validate()?;
        if self.arts.contains_key(&art.name) {
            return Err(ModelError::DuplicateArt(art.name));
        }
        let name = art.name.clone();
        Ok(self.arts.entry(name).or_insert(art))
    }

    pub fn art(&self, name: &str) -> Result<&ArtSpec, ModelError> {
        self.arts
            .get(name)
            .ok_or_else(|| ModelError::UnknownArt(name.to_owned()))
    }

    pub fn arts(&self) -> impl Iterator<Item = &ArtSpec> {
        self.arts.values()
    }

    /// Validates and registers a culture built from registered arts.
    pub fn compose_culture<S: AsRef<str>>(
        &mut self,
        name: &str,
        art_names: &[S],
    ) -> Result<&CultureSpec, ModelError> {
        self.compose_service(name, name, art_names)
    }

    pub fn compose_service<S: AsRef<str>>(
        &mut self,
        name: &str,
        service: &str,
        art_names: &[S],
    ) -> Result<&CultureSpec, ModelError> {
        if self.cultures.contains_key(name) {
            return Err(ModelError::DuplicateCulture(name.to_owned()));
        }
        let arts = art_names
            .iter()
            .map(|n| self.art(n.as_ref()).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        let culture = CultureSpec::compose(name, arts)?.with_service(service);
        Ok(self.cultures.entry(name.to_owned()).or_insert(culture))
    }

    pub fn culture(&self, name: &str) -> Result<&CultureSpec, ModelError> {
        let culture = self
            .cultures
            .get(name)
            .ok_or_else(|| ModelError::UnknownCulture(name.to_owned()))?;
        debug_assert!(culture.validate().is_ok());
        Ok(culture)
    }

    pub fn cultures(&self) -> impl Iterator<Item = &CultureSpec> {
        self.cultures.values()
    }

    /// Re-checks the five-slot invariant on every registered culture.
    pub fn validate_all(&self) -> Result<(), ModelError> {
        self.cultures.values().try_for_each(CultureSpec::validate)
    }

    /// A machine of `culture_name` on `host`, with a provisional identity until
    /// its community commits.
    pub fn instantiate_machine(
        &self,
        culture_name: &str,
        host: NodeId,
    ) -> Result<Machine, ModelError> {
        let culture = self.culture(culture_name)?;
        Ok(Machine::new(&culture.name, host))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InvokeArgs, Outcome};

    #[test]
    fn custom_and_file_cultures_compose() {
        let reg = Registry::standard();
        for name in ["Culture 1", "Culture 2", "Culture 3", "F"] {
            assert!(reg.culture(name).is_ok(), "{name}");
        }
        let f = reg.culture("F").unwrap();
        assert_eq!(f.routing(), "DSDV");
        assert_eq!(f.service, "File service");
        assert!(f.is_proactive());
        assert!(!reg.culture("Culture 3").unwrap().is_proactive());
        reg.validate_all().unwrap();
    }

    #[test]
    fn removing_any_art_breaks_the_stack() {
        let base = Registry::standard();
        for name in ["Culture 1", "Culture 2", "Culture 3"] {
            let arts: Vec<String> = base
                .culture(name)
                .unwrap()
                .arts
                .iter()
                .map(|a| a.name.clone())
                .collect();
            for skip in 0..arts.len() {
                let mut reg = base.clone();
                let partial: Vec<&String> =
                    arts.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, a)| a).collect();
                let err = reg.compose_culture("partial", &partial).unwrap_err();
                assert!(matches!(err, ModelError::IncompleteStack { .. }), "{err}");
            }
        }
    }

    #[test]
    fn two_routing_arts_conflict() {
        let mut reg = Registry::standard();
        let err = reg
            .compose_culture("bad", &["Free space", "CSMA", "DSDV", "AODV", "TCP", "FTP"])
            .unwrap_err();
        assert!(matches!(err, ModelError::SlotConflict { slot: Slot::Routing, .. }));
    }

    #[test]
    fn unknown_art_and_duplicates() {
        let mut reg = Registry::standard();
        assert_eq!(
            reg.compose_culture("x", &["Free space", "Carrier Pigeon"]).unwrap_err(),
            ModelError::UnknownArt("Carrier Pigeon".into())
        );
        assert_eq!(
            reg.compose_culture("F", &["Free space"]).unwrap_err(),
            ModelError::DuplicateCulture("F".into())
        );
        let err = reg
            .define_art("FTP", Slot::Application, Category::Layer, ["put"], [])
            .unwrap_err();
        assert_eq!(err, ModelError::DuplicateArt("FTP".into()));
    }

    #[test]
    fn duplicate_operation_names_are_rejected() {
        let mut reg = Registry::standard();
        reg.define_art("Echo", Slot::Addon, Category::Energy, ["put"], [])
            .unwrap();
        let err = reg
            .compose_culture("dup", &["Free space", "CSMA", "DSDV", "TCP", "FTP", "Echo"])
            .unwrap_err();
        assert!(matches!(err, ModelError::DuplicateOp { .. }));
    }

    #[test]
    fn watchdog_is_a_security_addon() {
        let reg = Registry::standard();
        let w = reg.art("Watchdog").unwrap();
        assert_eq!((w.slot, w.category), (Slot::Addon, Category::Security));
    }

    #[test]
    fn machines_from_registered_cultures_only() {
        let reg = Registry::standard();
        let m = reg.instantiate_machine("F", NodeId(0)).unwrap();
        assert_eq!(m.mc, "F");
        assert_eq!(m.mid, None);
        assert_eq!(m.host, NodeId(0));
        let t = reg.instantiate_machine("Culture 3", NodeId(0)).unwrap();
        assert_eq!(t.host, m.host);
        assert_eq!(
            reg.instantiate_machine("nope", NodeId(0)).unwrap_err(),
            ModelError::UnknownCulture("nope".into())
        );
    }

    #[test]
    fn link_profiles_follow_physical_and_mac_arts() {
        let reg = Registry::standard();
        let c1 = reg.culture("Culture 1").unwrap().link_profile(10.0);
        assert_eq!(c1.range, 10.0);
        assert_eq!(c1.hop_delay, SimTime::from_secs(0.01));
        let c2 = reg.culture("Culture 2").unwrap().link_profile(10.0);
        assert_eq!(c2.range, 8.0);
        assert_eq!(c2.hop_delay, SimTime::from_secs(0.02));
    }

    #[test]
    fn invoke_respects_the_declared_set() {
        let reg = Registry::standard();
        let f = reg.culture("F").unwrap();
        let mut m = reg.instantiate_machine("F", NodeId(0)).unwrap();
        assert_eq!(m.invoke(f, "connect", &InvokeArgs::default()), Ok(Outcome::Accepted));
        assert_eq!(
            m.invoke(f, "telnet-login", &InvokeArgs::default()),
            Err(ModelError::OpNotExposed("telnet-login".into()))
        );
    }
}
