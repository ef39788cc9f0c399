#![no_main]

use libfuzzer_sys::fuzz_target;

use humanet::scenario::Scenario;

fuzz_target!(|input: &str| {
    if let Ok(sc) = Scenario::parse(input) {
        // Accepted scenarios always yield a registry and a topology.
        sc.registry().expect("validated scenario has a registry");
        assert_eq!(sc.topology().len(), sc.nodes.len());
    }
});
