use super::culture::PROACTIVE;
use super::{ArtSpec, Category, Registry, Slot};

const NO_OPS: [&str; 0] = [];

fn layer(name: &str, slot: Slot, ops: &[&str]) -> ArtSpec {
    ArtSpec::new(name, slot, Category::Layer, ops.iter().copied()).expect("catalog art")
}

/// Built-in arts and the reference cultures.
///
/// Physical arts map to disc-radius factors, MAC arts to fixed hop delays,
/// routing arts are tagged proactive or reactive, and the remaining arts
/// declare the operations their handlers accept.
pub(crate) fn standard_arts() -> Vec<ArtSpec> {
    let mut arts = vec![
        ArtSpec::new("Free space", Slot::Physical, Category::Layer, NO_OPS)
            .unwrap()
            .with_param("range_factor", 1.0),
        ArtSpec::new("Two-Ray", Slot::Physical, Category::Layer, NO_OPS)
            .unwrap()
            .with_param("range_factor", 0.8),
    ];
    for (mac, delay) in [("CSMA", 0.01), ("802.11", 0.02), ("MACA", 0.015), ("TSMA", 0.015)] {
        arts.push(
            ArtSpec::new(mac, Slot::Mac, Category::Layer, NO_OPS)
                .unwrap()
                .with_param("hop_delay", delay),
        );
    }
    for proactive in ["Bellman-Ford", "DSDV", "FSR", "OSPF", "WRP"] {
        arts.push(layer(proactive, Slot::Routing, &["route", "refresh"]).with_param("mode", PROACTIVE));
    }
    for reactive in ["DSR", "AODV", "LAR"] {
        arts.push(layer(reactive, Slot::Routing, &["route", "discover"]).with_param("mode", "reactive"));
    }
    arts.extend([
        layer("TCP", Slot::Transport, &["connect", "send", "close"]),
        layer("UDP", Slot::Transport, &["send"]),
        layer("FTP", Slot::Application, &["put", "get", "ack"]),
        layer("Telnet", Slot::Application, &["login", "echo", "reply"]),
        layer("CBR", Slot::Application, &["emit"]),
        layer("NameService", Slot::Application, &["register", "resolve", "answer"]),
        ArtSpec::new("Watchdog", Slot::Addon, Category::Security, ["observe"]).unwrap(),
    ]);
    arts
}

impl Registry {
    /// Registry preloaded with the built-in arts and the cultures
    /// `Culture 1`, `Culture 2`, `Culture 3`, `F` (file service) and
    /// `N` (name service).
    pub fn standard() -> Self {
        let mut reg = Registry::empty();
        for art in standard_arts() {
            reg.insert_art(art).expect("catalog names are unique");
        }
        let cultures: [(&str, &str, [&str; 5]); 5] = [
            ("Culture 1", "Culture 1", ["Free space", "CSMA", "Bellman-Ford", "TCP", "FTP"]),
            ("Culture 2", "Culture 2", ["Two-Ray", "802.11", "DSR", "TCP", "CBR"]),
            ("Culture 3", "Culture 3", ["Two-Ray", "CSMA", "AODV", "TCP", "Telnet"]),
            ("F", "File service", ["Free space", "CSMA", "DSDV", "TCP", "FTP"]),
            ("N", "Name Service", ["Free space", "CSMA", "AODV", "UDP", "NameService"]),
        ];
        for (name, service, arts) in cultures {
            reg.compose_service(name, service, &arts)
                .expect("catalog cultures are complete");
        }
        reg
    }
}
