//! Line-oriented scenario files.
//!
//! ```text
//! humanet-scenario 1
//! [network]
//! radio_range = 1.2
//! duration = 10
//! [nodes]
//! N1 0 0 gateway
//! N2 1 0
//! [events]
//! 0.0 N1 start F as C1
//! 0.5 N2 join C1
//! 2.0 N2 send C1 N1 send hello
//! ```
//!
//! Blank lines and `#` comments are ignored. Sections: `[network]`,
//! `[watchdog]`, `[nodes]`, `[art NAME]`, `[culture NAME]`, `[events]`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use thiserror::Error;

use crate::ids::{Mid, NodeId};
use crate::model::{Category, ModelError, Registry, Slot};
use crate::protocol::{Command, CommunityRef, Network, NetworkConfig, NodeInfo, Target};
use crate::services::ftp::{DEFAULT_CHUNK_SIZE, DEFAULT_WINDOW};
use crate::sim::Topology;
use crate::stack::{classify_environment, select_protocol, Environment, WatchdogParams};

pub const HEADER: &str = "humanet-scenario 1";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Model {
        line: usize,
        #[source]
        source: ModelError,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn perr(line: usize, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse {
        line,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSection {
    pub radio_range: f64,
    pub duration: f64,
    pub seed: u64,
    pub loss_rate: f64,
    pub environment: Option<Environment>,
    pub join_window: f64,
    pub refresh_interval: f64,
    pub baseline_interval: f64,
    pub rreq_ttl: u8,
    pub friend_ttl: u8,
    pub tx_cost: f64,
    pub rx_cost: f64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            radio_range: 1.0,
            duration: 100.0,
            seed: 0,
            loss_rate: 0.0,
            environment: None,
            join_window: 1.0,
            refresh_interval: 5.0,
            baseline_interval: 5.0,
            rreq_ttl: 8,
            friend_ttl: 8,
            tx_cost: 1.0,
            rx_cost: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub gateway: bool,
    pub misbehaving: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArtDecl {
    pub line: usize,
    pub name: String,
    pub slot: Slot,
    pub category: Category,
    pub ops: Vec<String>,
    pub params: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CultureDecl {
    pub line: usize,
    pub name: String,
    pub service: Option<String>,
    pub arts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventSpec {
    pub line: usize,
    pub time: f64,
    pub node: NodeId,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub network: NetworkSection,
    pub watchdog: WatchdogParams,
    pub nodes: Vec<NodeSpec>,
    pub arts: Vec<ArtDecl>,
    pub cultures: Vec<CultureDecl>,
    pub events: Vec<EventSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Network,
    Watchdog,
    Nodes,
    Art(usize),
    Culture(usize),
    Events,
}

impl Scenario {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses and validates a scenario. Event lines are resolved after all
    /// nodes are known, so sections may appear in any order.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, strip_comment(l).trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, h)) if h == HEADER => {}
            Some((n, _)) => return Err(perr(n, format!("expected `{HEADER}`"))),
            None => return Err(perr(1, "empty scenario")),
        }
        let mut sc = Scenario {
            network: NetworkSection::default(),
            watchdog: WatchdogParams::default(),
            nodes: Vec::new(),
            arts: Vec::new(),
            cultures: Vec::new(),
            events: Vec::new(),
        };
        let mut seen_sections = BTreeSet::new();
        let mut event_lines = Vec::new();
        let mut section = Section::None;
        for (n, line) in lines {
            if let Some(head) = line.strip_prefix('[') {
                let head = head
                    .strip_suffix(']')
                    .ok_or_else(|| perr(n, "unterminated section header"))?
                    .trim();
                section = sc.open_section(n, head)?;
                if matches!(section, Section::Network | Section::Watchdog | Section::Nodes | Section::Events)
                    && !seen_sections.insert(head.to_owned())
                {
                    return Err(perr(n, format!("duplicate section [{head}]")));
                }
                continue;
            }
            match section {
                Section::None => return Err(perr(n, "content outside any section")),
                Section::Network => sc.network_kv(n, line)?,
                Section::Watchdog => sc.watchdog_kv(n, line)?,
                Section::Nodes => sc.node_line(n, line)?,
                Section::Art(i) => art_kv(&mut sc.arts[i], n, line)?,
                Section::Culture(i) => culture_kv(&mut sc.cultures[i], n, line)?,
                Section::Events => event_lines.push((n, line.to_owned())),
            }
        }
        if sc.nodes.is_empty() {
            return Err(ScenarioError::Invalid("scenario declares no nodes".into()));
        }
        for (n, line) in event_lines {
            let ev = sc.event_line(n, &line)?;
            sc.events.push(ev);
        }
        sc.validate()?;
        Ok(sc)
    }

    fn open_section(&mut self, n: usize, head: &str) -> Result<Section, ScenarioError> {
        let (kind, name) = match head.split_once(char::is_whitespace) {
            Some((k, rest)) => (k, rest.trim()),
            None => (head, ""),
        };
        Ok(match (kind, name.is_empty()) {
            ("network", true) => Section::Network,
            ("watchdog", true) => Section::Watchdog,
            ("nodes", true) => Section::Nodes,
            ("events", true) => Section::Events,
            ("art", false) => {
                self.arts.push(ArtDecl {
                    line: n,
                    name: name.to_owned(),
                    slot: Slot::Application,
                    category: Category::Layer,
                    ops: Vec::new(),
                    params: BTreeMap::new(),
                });
                Section::Art(self.arts.len() - 1)
            }
            ("culture", false) => {
                self.cultures.push(CultureDecl {
                    line: n,
                    name: name.to_owned(),
                    service: None,
                    arts: Vec::new(),
                });
                Section::Culture(self.cultures.len() - 1)
            }
            _ => return Err(perr(n, format!("unknown section [{head}]"))),
        })
    }

    fn network_kv(&mut self, n: usize, line: &str) -> Result<(), ScenarioError> {
        let (k, v) = kv(n, line)?;
        let s = &mut self.network;
        match k {
            "radio_range" => s.radio_range = positive(n, k, v)?,
            "duration" => s.duration = positive(n, k, v)?,
            "seed" => s.seed = num(n, k, v)?,
            "loss_rate" => {
                s.loss_rate = num(n, k, v)?;
                if !(0.0..1.0).contains(&s.loss_rate) {
                    return Err(perr(n, "loss_rate must be in [0, 1)"));
                }
            }
            "environment" => s.environment = Some(v.parse().map_err(|e: String| perr(n, e))?),
            "join_window" => s.join_window = non_negative(n, k, v)?,
            "refresh_interval" => s.refresh_interval = non_negative(n, k, v)?,
            "baseline_interval" => s.baseline_interval = positive(n, k, v)?,
            "rreq_ttl" => s.rreq_ttl = num(n, k, v)?,
            "friend_ttl" => s.friend_ttl = num(n, k, v)?,
            "tx_cost" => s.tx_cost = non_negative(n, k, v)?,
            "rx_cost" => s.rx_cost = non_negative(n, k, v)?,
            _ => return Err(perr(n, format!("unknown network key `{k}`"))),
        }
        Ok(())
    }

    fn watchdog_kv(&mut self, n: usize, line: &str) -> Result<(), ScenarioError> {
        let (k, v) = kv(n, line)?;
        let w = &mut self.watchdog;
        let x: f64 = non_negative(n, k, v)?;
        match k {
            "initial" => w.initial = x,
            "drop_penalty" => w.drop_penalty = x,
            "forward_reward" => w.forward_reward = x,
            "threshold" => w.threshold = x,
            _ => return Err(perr(n, format!("unknown watchdog key `{k}`"))),
        }
        Ok(())
    }

    fn node_line(&mut self, n: usize, line: &str) -> Result<(), ScenarioError> {
        let mut it = line.split_whitespace();
        let name = it.next().expect("line is non-empty");
        if name.starts_with('#') || self.nodes.iter().any(|x| x.name == name) {
            return Err(perr(n, format!("bad or duplicate node name `{name}`")));
        }
        let x: f64 = num(n, "x", it.next().ok_or_else(|| perr(n, "missing x"))?)?;
        let y: f64 = num(n, "y", it.next().ok_or_else(|| perr(n, "missing y"))?)?;
        if !x.is_finite() || !y.is_finite() {
            return Err(perr(n, "coordinates must be finite"));
        }
        let mut spec = NodeSpec {
            name: name.to_owned(),
            x,
            y,
            gateway: false,
            misbehaving: false,
        };
        for flag in it {
            match flag {
                "gateway" => spec.gateway = true,
                "misbehaving" => spec.misbehaving = true,
                other => return Err(perr(n, format!("unknown node flag `{other}`"))),
            }
        }
        self.nodes.push(spec);
        Ok(())
    }

    fn node_id(&self, n: usize, name: &str) -> Result<NodeId, ScenarioError> {
        self.nodes
            .iter()
            .position(|x| x.name == name)
            .map(|i| NodeId(i as u32))
            .ok_or_else(|| perr(n, format!("unknown node `{name}`")))
    }

    fn target(&self, n: usize, word: &str) -> Result<Target, ScenarioError> {
        match word.strip_prefix('#') {
            Some(m) => Ok(Target::Mid(Mid(num(n, "member id", m)?))),
            None => Ok(Target::Host(self.node_id(n, word)?)),
        }
    }

    fn event_line(&self, n: usize, line: &str) -> Result<EventSpec, ScenarioError> {
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.len() < 3 {
            return Err(perr(n, "expected `<time> <node> <verb> ...`"));
        }
        let time: f64 = non_negative(n, "time", words[0])?;
        let node = self.node_id(n, words[1])?;
        let verb = words[2];
        let args = &words[3..];
        let need = |k: usize, usage: &str| -> Result<(), ScenarioError> {
            if args.len() < k {
                Err(perr(n, format!("usage: {verb} {usage}")))
            } else {
                Ok(())
            }
        };
        let community = |w: &str| CommunityRef::Alias(w.to_owned());
        let command = match verb {
            "start" => {
                // Culture names may contain spaces: `start Culture 1 as C1`.
                let (culture, alias) = match args.iter().position(|w| *w == "as") {
                    Some(i) if i + 2 == args.len() => (args[..i].join(" "), Some(args[i + 1].to_owned())),
                    Some(_) => return Err(perr(n, "usage: start CULTURE [as ALIAS]")),
                    None => (args.join(" "), None),
                };
                if culture.is_empty() {
                    return Err(perr(n, "usage: start CULTURE [as ALIAS]"));
                }
                Command::Start { culture, alias }
            }
            "join" | "late_join" => {
                need(1, "COMMUNITY")?;
                let community = community(args[0]);
                if verb == "join" {
                    Command::Join { community }
                } else {
                    Command::LateJoin { community }
                }
            }
            "send" | "friend" => {
                need(3, "COMMUNITY TARGET OP [TEXT...]")?;
                let (community, target, op) = (community(args[0]), self.target(n, args[1])?, args[2].to_owned());
                let payload = args[3..].join(" ").into_bytes();
                if verb == "send" {
                    Command::Send { community, target, op, payload }
                } else {
                    Command::Friend { community, target, op, payload }
                }
            }
            "ftp" => {
                need(3, "COMMUNITY TARGET size=N [chunk=N] [window=N]")?;
                let opts = options(n, &args[2..], &["size", "chunk", "window"])?;
                let size: usize = opts.get("size").map(|v| num(n, "size", v)).transpose()?.ok_or_else(|| perr(n, "ftp needs size=N"))?;
                let chunk_size: usize = opts.get("chunk").map(|v| num(n, "chunk", v)).transpose()?.unwrap_or(DEFAULT_CHUNK_SIZE);
                let window: u32 = opts.get("window").map(|v| num(n, "window", v)).transpose()?.unwrap_or(DEFAULT_WINDOW);
                if chunk_size == 0 || window == 0 {
                    return Err(perr(n, "chunk and window must be positive"));
                }
                Command::Ftp {
                    community: community(args[0]),
                    target: self.target(n, args[1])?,
                    payload: file_pattern(size),
                    chunk_size,
                    window,
                }
            }
            "register" => {
                need(3, "COMMUNITY NAME #MID [of COMMUNITY]")?;
                let mid = match self.target(n, args[2])? {
                    Target::Mid(m) => m,
                    Target::Host(_) => return Err(perr(n, "register takes a member id like #2")),
                };
                let of = match &args[3..] {
                    [] => None,
                    ["of", c] => Some(community(c)),
                    _ => return Err(perr(n, "usage: register COMMUNITY NAME #MID [of COMMUNITY]")),
                };
                Command::Register {
                    community: community(args[0]),
                    name: args[1].to_owned(),
                    mid,
                    of,
                }
            }
            "resolve" => {
                need(2, "COMMUNITY NAME")?;
                Command::Resolve {
                    community: community(args[0]),
                    name: args[1].to_owned(),
                }
            }
            "cbr" => {
                need(2, "COMMUNITY TARGET [count=N] [interval=S] [size=N]")?;
                let opts = options(n, &args[2..], &["count", "interval", "size"])?;
                let interval: f64 = opts.get("interval").map(|v| positive(n, "interval", v)).transpose()?.unwrap_or(1.0);
                Command::Cbr {
                    community: community(args[0]),
                    target: self.target(n, args[1])?,
                    count: opts.get("count").map(|v| num(n, "count", v)).transpose()?.unwrap_or(1),
                    interval,
                    size: opts.get("size").map(|v| num(n, "size", v)).transpose()?.unwrap_or(64),
                }
            }
            "telnet" => {
                need(2, "COMMUNITY TARGET [TEXT...]")?;
                Command::Telnet {
                    community: community(args[0]),
                    target: self.target(n, args[1])?,
                    text: args[2..].join(" "),
                }
            }
            other => return Err(perr(n, format!("unknown event verb `{other}`"))),
        };
        Ok(EventSpec {
            line: n,
            time,
            node,
            command,
        })
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        self.registry()?;
        let mut aliases = BTreeSet::new();
        for ev in &self.events {
            if let Command::Start { alias: Some(a), .. } = &ev.command {
                if !aliases.insert(a.as_str()) {
                    return Err(perr(ev.line, format!("alias `{a}` is defined twice")));
                }
            }
        }
        for ev in &self.events {
            if ev.time > self.network.duration {
                return Err(perr(ev.line, "event scheduled after the end of the run"));
            }
            for r in community_refs(&ev.command) {
                if let CommunityRef::Alias(a) = r {
                    if !aliases.contains(a.as_str()) {
                        return Err(perr(ev.line, format!("no start event defines `{a}`")));
                    }
                }
            }
        }
        Ok(())
    }

    /// The standard catalog plus this scenario's arts and cultures.
    pub fn registry(&self) -> Result<Registry, ScenarioError> {
        let mut reg = Registry::standard();
        for a in &self.arts {
            reg.define_art(&a.name, a.slot, a.category, a.ops.iter().cloned(), a.params.clone())
                .map_err(|source| ScenarioError::Model { line: a.line, source })?;
        }
        for c in &self.cultures {
            let service = c.service.as_deref().unwrap_or(&c.name);
            reg.compose_service(&c.name, service, &c.arts)
                .map_err(|source| ScenarioError::Model { line: c.line, source })?;
        }
        Ok(reg)
    }

    pub fn misbehaving(&self) -> BTreeSet<NodeId> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.misbehaving)
            .map(|(i, _)| NodeId(i as u32))
            .collect()
    }

    pub fn environment(&self) -> Environment {
        classify_environment(self.network.environment, &self.misbehaving())
    }

    pub fn topology(&self) -> Topology {
        Topology::new(self.nodes.iter().map(|n| (n.x, n.y)).collect(), self.network.radio_range)
            .with_misbehaving(self.misbehaving())
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        self.nodes.get(id.index()).map_or("?", |n| n.name.as_str())
    }

    pub fn config(&self, seed: u64, trace: bool) -> NetworkConfig {
        let s = &self.network;
        NetworkConfig {
            seed,
            loss_rate: s.loss_rate,
            join_window: s.join_window,
            refresh_interval: s.refresh_interval,
            horizon: s.duration,
            rreq_ttl: s.rreq_ttl,
            friend_ttl: s.friend_ttl,
            protocol: select_protocol(self.environment()),
            watchdog: self.watchdog,
            trace,
            ..NetworkConfig::default()
        }
    }

    /// A ready-to-run network with every event queued.
    pub fn build(&self, seed: Option<u64>, trace: bool) -> Result<Network, ScenarioError> {
        let info = self
            .nodes
            .iter()
            .map(|n| NodeInfo {
                name: n.name.clone(),
                gateway: n.gateway,
            })
            .collect();
        let config = self.config(seed.unwrap_or(self.network.seed), trace);
        let mut net = Network::new(self.registry()?, self.topology(), info, config);
        for ev in &self.events {
            net.schedule(ev.time, ev.node, ev.command.clone())
                .map_err(|e| perr(ev.line, e.to_string()))?;
        }
        Ok(net)
    }
}

fn community_refs(cmd: &Command) -> Vec<&CommunityRef> {
    match cmd {
        Command::Start { .. } => vec![],
        Command::Register { community, of, .. } => std::iter::once(community).chain(of.as_ref()).collect(),
        Command::Join { community }
        | Command::LateJoin { community }
        | Command::Send { community, .. }
        | Command::Friend { community, .. }
        | Command::Ftp { community, .. }
        | Command::Resolve { community, .. }
        | Command::Cbr { community, .. }
        | Command::Telnet { community, .. } => vec![community],
    }
}

fn art_kv(a: &mut ArtDecl, n: usize, line: &str) -> Result<(), ScenarioError> {
    let (k, v) = kv(n, line)?;
    match k {
        "slot" => a.slot = v.parse().map_err(|e: String| perr(n, e))?,
        "category" => a.category = v.parse().map_err(|e: String| perr(n, e))?,
        "ops" => a.ops = list(v),
        _ => match k.strip_prefix("param.") {
            Some(p) if !p.is_empty() => {
                a.params.insert(p.to_owned(), v.to_owned());
            }
            _ => return Err(perr(n, format!("unknown art key `{k}`"))),
        },
    }
    Ok(())
}

fn culture_kv(c: &mut CultureDecl, n: usize, line: &str) -> Result<(), ScenarioError> {
    let (k, v) = kv(n, line)?;
    match k {
        "service" => c.service = Some(v.to_owned()),
        "arts" => c.arts = list(v),
        _ => return Err(perr(n, format!("unknown culture key `{k}`"))),
    }
    Ok(())
}

fn strip_comment(line: &str) -> &str {
    // `#` starts a comment only at the beginning or after whitespace, so
    // member ids like `#2` survive.
    let bytes = line.as_bytes();
    for (i, b) in bytes.iter().enumerate() {
        if *b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            let rest = &line[i + 1..];
            if !rest.starts_with(|c: char| c.is_ascii_digit()) {
                return &line[..i];
            }
        }
    }
    line
}

fn kv(n: usize, line: &str) -> Result<(&str, &str), ScenarioError> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| perr(n, "expected `key = value`"))?;
    Ok((k.trim(), v.trim()))
}

fn list(v: &str) -> Vec<String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

fn num<T: std::str::FromStr>(n: usize, key: &str, v: &str) -> Result<T, ScenarioError> {
    v.parse()
        .map_err(|_| perr(n, format!("`{key}`: cannot parse `{v}`")))
}

fn non_negative(n: usize, key: &str, v: &str) -> Result<f64, ScenarioError> {
    let x: f64 = num(n, key, v)?;
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(perr(n, format!("`{key}` must be a finite non-negative number")))
    }
}

fn positive(n: usize, key: &str, v: &str) -> Result<f64, ScenarioError> {
    let x = non_negative(n, key, v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(perr(n, format!("`{key}` must be positive")))
    }
}

fn options<'a>(n: usize, words: &[&'a str], allowed: &[&str]) -> Result<BTreeMap<&'a str, &'a str>, ScenarioError> {
    let mut out = BTreeMap::new();
    for w in words {
        let (k, v) = w
            .split_once('=')
            .ok_or_else(|| perr(n, format!("expected key=value, got `{w}`")))?;
        if !allowed.contains(&k) {
            return Err(perr(n, format!("unknown option `{k}`")));
        }
        if out.insert(k, v).is_some() {
            return Err(perr(n, format!("option `{k}` given twice")));
        }
    }
    Ok(out)
}

/// Deterministic file contents for generated transfers.
pub fn file_pattern(size: usize) -> Vec<u8> {
    (0..size as u64)
        .map(|i| (i.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 56) as u8)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "humanet-scenario 1
[network]
radio_range = 1.2
duration = 5
[nodes]
N1 0 0 gateway
N2 1 0
N3 0 1
N4 2 0   # far end
[events]
0.0 N1 start F as C1
0.5 N2 join C1
0.5 N3 join C1
0.5 N4 join C1
2.0 N4 send C1 #2 send hello world
";

    #[test]
    fn parses_sections_and_events() {
        let sc = Scenario::parse(SQUARE).unwrap();
        assert_eq!(sc.nodes.len(), 4);
        assert!(sc.nodes[0].gateway);
        assert_eq!(sc.network.radio_range, 1.2);
        assert_eq!(sc.events.len(), 5);
        assert_eq!(
            sc.events[4].command,
            Command::Send {
                community: CommunityRef::Alias("C1".into()),
                target: Target::Mid(Mid(2)),
                op: "send".into(),
                payload: b"hello world".to_vec(),
            }
        );
        assert_eq!(sc.environment(), Environment::Closed);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = SQUARE.replace("0.5 N3 join C1", "0.5 N9 join C1");
        match Scenario::parse(&bad) {
            Err(ScenarioError::Parse { line, .. }) => assert_eq!(line, 13),
            other => panic!("{other:?}"),
        }
        let bad = SQUARE.replace("0.5 N2 join C1", "0.5 N2 join C7");
        assert!(matches!(Scenario::parse(&bad), Err(ScenarioError::Parse { line: 12, .. })));
        assert!(matches!(Scenario::parse("nope"), Err(ScenarioError::Parse { line: 1, .. })));
    }

    #[test]
    fn custom_arts_and_cultures() {
        let text = "humanet-scenario 1
[nodes]
A 0 0
[art Gossip]
slot = routing
ops = route, gossip
param.mode = proactive
[culture G]
service = Gossip service
arts = Free space, CSMA, Gossip, UDP, CBR
";
        let sc = Scenario::parse(text).unwrap();
        let reg = sc.registry().unwrap();
        let g = reg.culture("G").unwrap();
        assert!(g.is_proactive());
        assert!(g.exposes("gossip"));
        let broken = text.replace("arts = Free space, ", "arts = ");
        assert!(matches!(Scenario::parse(&broken), Err(ScenarioError::Model { line: 8, .. })));
    }

    #[test]
    fn misbehaving_nodes_open_the_environment() {
        let sc = Scenario::parse(&SQUARE.replace("N3 0 1", "N3 0 1 misbehaving")).unwrap();
        assert_eq!(sc.environment(), Environment::Open);
        let sc = Scenario::parse(&SQUARE.replace("duration = 5", "duration = 5\nenvironment = closed").replace("N3 0 1", "N3 0 1 misbehaving")).unwrap();
        assert_eq!(sc.environment(), Environment::Closed);
    }

    #[test]
    fn build_and_run() {
        let sc = Scenario::parse(SQUARE).unwrap();
        let mut net = sc.build(None, false).unwrap();
        net.run();
        assert!(net.log().errors.is_empty(), "{:?}", net.log().errors);
        assert_eq!(net.log().delivered, 1);
    }
}
