//! AC power flow on small networks, maximum loadability search and a
//! synthetic synchrophasor source built on top of both.
//!
//! Buses are Slack, PV or PQ. Lines are a single series admittance with no
//! shunt charging, so one current flows end to end. Generator real power may
//! optionally be shared between the slack bus and PV buses through
//! participation factors (a distributed slack); without participation the
//! slack bus alone balances the network.

mod loadability;
mod solver;
mod synth;

pub use loadability::{
    max_loadability, two_bus_feasible, two_bus_max_power, LoadDirection, LoadabilityResult,
    LAMBDA_RESOLUTION,
};
pub use solver::{solve_power_flow, SolverOptions};
pub use synth::{frame_from_solution, generate_frames, FrameSource, GeneratedFrames};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{BusId, LineId};
use crate::phasor::Phasor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusKind {
    Slack,
    #[serde(rename = "PV")]
    Pv,
    #[serde(rename = "PQ")]
    Pq,
}

/// Bus data. `p`/`q` are consumption for PQ buses and `p` is generation for
/// PV buses; the slack bus ignores both.
#[derive(Clone, Debug, PartialEq)]
pub struct PfBus {
    pub id: BusId,
    pub kind: BusKind,
    pub v_set: f64,
    pub angle_deg: f64,
    pub p: f64,
    pub q: f64,
    /// Share of the distributed slack picked up by this generator.
    pub participation: f64,
}

impl PfBus {
    pub fn slack(id: &str, v_set: f64, angle_deg: f64) -> Self {
        PfBus {
            id: BusId::new(id),
            kind: BusKind::Slack,
            v_set,
            angle_deg,
            p: 0.0,
            q: 0.0,
            participation: 0.0,
        }
    }

    pub fn pv(id: &str, p_gen: f64, v_set: f64) -> Self {
        PfBus {
            id: BusId::new(id),
            kind: BusKind::Pv,
            v_set,
            angle_deg: 0.0,
            p: p_gen,
            q: 0.0,
            participation: 0.0,
        }
    }

    pub fn pq(id: &str, p_load: f64, q_load: f64) -> Self {
        PfBus {
            id: BusId::new(id),
            kind: BusKind::Pq,
            v_set: 1.0,
            angle_deg: 0.0,
            p: p_load,
            q: q_load,
            participation: 0.0,
        }
    }

    pub fn with_participation(mut self, k: f64) -> Self {
        self.participation = k;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PfLine {
    pub id: LineId,
    pub from: BusId,
    pub to: BusId,
    pub y: Phasor,
}

impl PfLine {
    pub fn new(id: &str, from: &str, to: &str, y: Phasor) -> Self {
        PfLine {
            id: LineId::new(id),
            from: BusId::new(from),
            to: BusId::new(to),
            y,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("network needs exactly one slack bus, found {0}")]
    SlackCount(usize),
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("line `{line}` references unknown bus `{bus}`")]
    UnknownBus { line: LineId, bus: BusId },
    #[error("line `{0}` has zero admittance")]
    ZeroAdmittance(LineId),
    #[error("bus `{0}` is not connected to the slack bus")]
    Disconnected(BusId),
    #[error("PQ bus `{0}` has negative real consumption")]
    NegativeLoad(BusId),
    #[error("bus `{bus}`: {msg}")]
    BadBus { bus: BusId, msg: String },
    #[error("network file: {0}")]
    Parse(String),
    #[error("reading network file: {0}")]
    Io(String),
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum PfError {
    #[error(
        "power flow did not converge after {iterations} iterations (mismatch {mismatch:.3e} pu)"
    )]
    NonConvergence { iterations: usize, mismatch: f64 },
    #[error("singular Jacobian at iteration {0}")]
    SingularJacobian(usize),
}

/// A validated power-flow network.
#[derive(Clone, Debug, PartialEq)]
pub struct PfNetwork {
    buses: Vec<PfBus>,
    lines: Vec<PfLine>,
    index: HashMap<BusId, usize>,
    slack: usize,
}

impl PfNetwork {
    pub fn new(buses: Vec<PfBus>, lines: Vec<PfLine>) -> Result<Self, NetworkError> {
        let slacks: Vec<usize> = buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == BusKind::Slack)
            .map(|(i, _)| i)
            .collect();
        if slacks.len() != 1 {
            return Err(NetworkError::SlackCount(slacks.len()));
        }
        let mut index = HashMap::new();
        for (i, b) in buses.iter().enumerate() {
            if index.insert(b.id.clone(), i).is_some() {
                return Err(NetworkError::DuplicateId(b.id.0.clone()));
            }
            let finite = [b.v_set, b.angle_deg, b.p, b.q, b.participation]
                .iter()
                .all(|x| x.is_finite());
            if !finite {
                return Err(NetworkError::BadBus {
                    bus: b.id.clone(),
                    msg: "non-finite value".into(),
                });
            }
            if b.kind != BusKind::Pq && b.v_set <= 0.0 {
                return Err(NetworkError::BadBus {
                    bus: b.id.clone(),
                    msg: "voltage set point must be positive".into(),
                });
            }
            if b.participation < 0.0 || (b.kind == BusKind::Pq && b.participation != 0.0) {
                return Err(NetworkError::BadBus {
                    bus: b.id.clone(),
                    msg: "participation must be nonnegative and on a generator".into(),
                });
            }
            if b.kind == BusKind::Pq && b.p < 0.0 {
                return Err(NetworkError::NegativeLoad(b.id.clone()));
            }
        }
        let mut line_ids = HashSet::new();
        for l in &lines {
            if !line_ids.insert(l.id.0.clone()) {
                return Err(NetworkError::DuplicateId(l.id.0.clone()));
            }
            for end in [&l.from, &l.to] {
                if !index.contains_key(end) {
                    return Err(NetworkError::UnknownBus {
                        line: l.id.clone(),
                        bus: end.clone(),
                    });
                }
            }
            if l.y.norm() == 0.0 || !crate::phasor::is_finite(l.y) {
                return Err(NetworkError::ZeroAdmittance(l.id.clone()));
            }
        }

        let net = PfNetwork {
            buses,
            lines,
            index,
            slack: slacks[0],
        };
        net.check_connected()?;
        Ok(net)
    }

    fn check_connected(&self) -> Result<(), NetworkError> {
        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for l in &self.lines {
            let (a, b) = (self.index[&l.from], self.index[&l.to]);
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![self.slack];
        seen[self.slack] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(NetworkError::Disconnected(self.buses[i].id.clone())),
            None => Ok(()),
        }
    }

    pub fn buses(&self) -> &[PfBus] {
        &self.buses
    }

    pub fn lines(&self) -> &[PfLine] {
        &self.lines
    }

    pub fn bus_index(&self, id: &BusId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn bus(&self, id: &BusId) -> Option<&PfBus> {
        self.bus_index(id).map(|i| &self.buses[i])
    }

    pub fn slack_index(&self) -> usize {
        self.slack
    }

    pub fn line(&self, id: &LineId) -> Option<&PfLine> {
        self.lines.iter().find(|l| &l.id == id)
    }

    pub fn has_distributed_slack(&self) -> bool {
        self.buses.iter().any(|b| b.participation > 0.0)
    }

    /// Total PQ consumption as a complex power.
    pub fn total_load(&self) -> Phasor {
        self.buses
            .iter()
            .filter(|b| b.kind == BusKind::Pq)
            .map(|b| Phasor::new(b.p, b.q))
            .sum()
    }

    /// Replaces the consumption at PQ bus `id`.
    pub fn set_load(&mut self, id: &BusId, p: f64, q: f64) -> Result<(), NetworkError> {
        let i = self.bus_index(id).ok_or_else(|| NetworkError::BadBus {
            bus: id.clone(),
            msg: "no such bus".into(),
        })?;
        let bus = &mut self.buses[i];
        if bus.kind != BusKind::Pq {
            return Err(NetworkError::BadBus {
                bus: id.clone(),
                msg: "not a PQ bus".into(),
            });
        }
        if !(p.is_finite() && q.is_finite()) || p < 0.0 {
            return Err(NetworkError::NegativeLoad(id.clone()));
        }
        bus.p = p;
        bus.q = q;
        Ok(())
    }

    /// Dense bus admittance matrix in bus order.
    pub fn admittance_matrix(&self) -> nalgebra::DMatrix<Phasor> {
        let n = self.buses.len();
        let mut y = nalgebra::DMatrix::from_element(n, n, Phasor::new(0.0, 0.0));
        for l in &self.lines {
            let (a, b) = (self.index[&l.from], self.index[&l.to]);
            y[(a, a)] += l.y;
            y[(b, b)] += l.y;
            y[(a, b)] -= l.y;
            y[(b, a)] -= l.y;
        }
        y
    }

    /// Parses a network document; JSON if it starts with `{`, TOML otherwise.
    pub fn parse(text: &str) -> Result<Self, NetworkError> {
        NetworkFile::parse(text)?.into_network()
    }

    pub fn load(path: &Path) -> Result<Self, NetworkError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NetworkError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_file_doc(&self) -> NetworkFile {
        NetworkFile {
            buses: self
                .buses
                .iter()
                .map(|b| BusRecord {
                    id: b.id.clone(),
                    kind: b.kind,
                    v_set: (b.kind != BusKind::Pq).then_some(b.v_set),
                    angle_deg: (b.kind == BusKind::Slack).then_some(b.angle_deg),
                    p: (b.kind != BusKind::Slack).then_some(b.p),
                    q: (b.kind == BusKind::Pq).then_some(b.q),
                    participation: (b.participation > 0.0).then_some(b.participation),
                })
                .collect(),
            lines: self.lines.iter().map(LineRecord::from).collect(),
        }
    }
}

/// On-disk bus record `{id, kind, v_set?, angle_deg?, p?, q?, participation?}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BusRecord {
    pub id: BusId,
    pub kind: BusKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_set: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participation: Option<f64>,
}

/// On-disk line record `{id, from, to, g, b}` with `Y = g + jb`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LineRecord {
    pub id: LineId,
    pub from: BusId,
    pub to: BusId,
    pub g: f64,
    pub b: f64,
}

impl From<&PfLine> for LineRecord {
    fn from(l: &PfLine) -> Self {
        LineRecord {
            id: l.id.clone(),
            from: l.from.clone(),
            to: l.to.clone(),
            g: l.y.re,
            b: l.y.im,
        }
    }
}

impl From<LineRecord> for PfLine {
    fn from(r: LineRecord) -> Self {
        PfLine {
            id: r.id,
            from: r.from,
            to: r.to,
            y: Phasor::new(r.g, r.b),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkFile {
    #[serde(default)]
    pub buses: Vec<BusRecord>,
    pub lines: Vec<LineRecord>,
}

impl NetworkFile {
    /// Parses the document without building a network, so a file holding
    /// only `lines` is accepted. JSON if it starts with `{`, TOML otherwise.
    pub fn parse(text: &str) -> Result<Self, NetworkError> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| NetworkError::Parse(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| NetworkError::Parse(e.to_string()))
        }
    }

    pub fn into_network(self) -> Result<PfNetwork, NetworkError> {
        let buses = self
            .buses
            .into_iter()
            .map(|r| {
                let missing = |what: &str| NetworkError::BadBus {
                    bus: r.id.clone(),
                    msg: format!("{what} required"),
                };
                Ok(match r.kind {
                    BusKind::Slack => PfBus {
                        id: r.id.clone(),
                        kind: BusKind::Slack,
                        v_set: r.v_set.ok_or_else(|| missing("v_set"))?,
                        angle_deg: r.angle_deg.unwrap_or(0.0),
                        p: 0.0,
                        q: 0.0,
                        participation: r.participation.unwrap_or(0.0),
                    },
                    BusKind::Pv => PfBus {
                        id: r.id.clone(),
                        kind: BusKind::Pv,
                        v_set: r.v_set.ok_or_else(|| missing("v_set"))?,
                        angle_deg: 0.0,
                        p: r.p.ok_or_else(|| missing("p"))?,
                        q: 0.0,
                        participation: r.participation.unwrap_or(0.0),
                    },
                    BusKind::Pq => PfBus {
                        id: r.id.clone(),
                        kind: BusKind::Pq,
                        v_set: 1.0,
                        angle_deg: 0.0,
                        p: r.p.ok_or_else(|| missing("p"))?,
                        q: r.q.unwrap_or(0.0),
                        participation: r.participation.unwrap_or(0.0),
                    },
                })
            })
            .collect::<Result<Vec<_>, NetworkError>>()?;
        PfNetwork::new(buses, self.lines.into_iter().map(PfLine::from).collect())
    }
}

/// Converged power-flow state.
#[derive(Clone, Debug, PartialEq)]
pub struct PfSolution {
    pub bus_voltages: BTreeMap<BusId, Phasor>,
    /// Oriented `from -> to` as listed in the network.
    pub line_currents: BTreeMap<LineId, Phasor>,
    /// Complex power injected into the network at each bus.
    pub injections: BTreeMap<BusId, Phasor>,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
}

impl PfSolution {
    pub fn voltage(&self, bus: &str) -> Phasor {
        self.bus_voltages[&BusId::new(bus)]
    }

    pub fn current(&self, line: &str) -> Phasor {
        self.line_currents[&LineId::new(line)]
    }

    /// Voltages in network bus order, for warm starts.
    pub fn voltages_in_order(&self, net: &PfNetwork) -> Vec<Phasor> {
        net.buses()
            .iter()
            .map(|b| self.bus_voltages[&b.id])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_two_slacks_and_islands() {
        let err = PfNetwork::new(
            vec![PfBus::slack("a", 1.0, 0.0), PfBus::slack("b", 1.0, 0.0)],
            vec![PfLine::new("ab", "a", "b", Phasor::new(0.0, -10.0))],
        )
        .unwrap_err();
        assert_eq!(err, NetworkError::SlackCount(2));

        let err = PfNetwork::new(
            vec![
                PfBus::slack("a", 1.0, 0.0),
                PfBus::pq("b", 0.1, 0.0),
                PfBus::pq("c", 0.1, 0.0),
            ],
            vec![PfLine::new("ab", "a", "b", Phasor::new(0.0, -10.0))],
        )
        .unwrap_err();
        assert_eq!(err, NetworkError::Disconnected(BusId::new("c")));
    }

    #[test]
    fn rejects_negative_load() {
        let err = PfNetwork::new(
            vec![PfBus::slack("a", 1.0, 0.0), PfBus::pq("b", -1.0, 0.0)],
            vec![PfLine::new("ab", "a", "b", Phasor::new(0.0, -10.0))],
        )
        .unwrap_err();
        assert_eq!(err, NetworkError::NegativeLoad(BusId::new("b")));
    }

    #[test]
    fn network_file_round_trip() {
        let text = r#"
[[buses]]
id = "g"
kind = "Slack"
v_set = 1.0
angle_deg = 0.0

[[buses]]
id = "l"
kind = "PQ"
p = 1.0
q = 0.25

[[lines]]
id = "gl"
from = "g"
to = "l"
g = 0.0
b = -10.0
"#;
        let net = PfNetwork::parse(text).unwrap();
        assert_eq!(net.buses().len(), 2);
        assert_eq!(net.lines()[0].y, Phasor::new(0.0, -10.0));
        let json = serde_json::to_string(&net.to_file_doc()).unwrap();
        assert_eq!(PfNetwork::parse(&json).unwrap(), net);
    }

    #[test]
    fn pv_bus_requires_p() {
        let text = r#"{"buses":[{"id":"g","kind":"Slack","v_set":1.0},{"id":"h","kind":"PV","v_set":1.0}],
            "lines":[{"id":"gh","from":"g","to":"h","g":0.0,"b":-5.0}]}"#;
        assert!(matches!(
            PfNetwork::parse(text),
            Err(NetworkError::BadBus { .. })
        ));
    }
}
