//! Corridor topology and synchrophasor frames.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phasor::{self, Phasor};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub String);

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LineId(pub String);

impl BusId {
    pub fn new(s: impl Into<String>) -> Self {
        BusId(s.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl LineId {
    pub fn new(s: impl Into<String>) -> Self {
        LineId(s.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for LineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A line as listed in a topology file: identifier plus endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineSpec {
    pub id: LineId,
    pub from: BusId,
    pub to: BusId,
}

impl LineSpec {
    pub fn new(id: &str, from: &str, to: &str) -> Self {
        LineSpec {
            id: LineId::new(id),
            from: BusId::new(from),
            to: BusId::new(to),
        }
    }
}

/// A corridor line with its endpoints sorted into generator and load side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorridorLine {
    pub id: LineId,
    pub gen_bus: BusId,
    pub load_bus: BusId,
    /// True when the source listing ran load -> gen.
    pub reversed: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("line `{line}` references unknown bus `{bus}`")]
    DanglingEndpoint { line: LineId, bus: BusId },
    #[error("line `{0}` does not join a generator bus to a load bus")]
    NotACorridorLine(LineId),
    #[error("intra-area line `{0}` must join two generator buses or two load buses")]
    NotAnIntraAreaLine(LineId),
    #[error("topology needs at least one {0}")]
    Empty(&'static str),
    #[error("topology file: {0}")]
    Parse(String),
    #[error("reading topology file: {0}")]
    Io(String),
}

/// Boundary buses and corridor lines of a monitored area.
#[derive(Clone, Debug, PartialEq)]
pub struct CorridorTopology {
    gen_buses: Vec<BusId>,
    load_buses: Vec<BusId>,
    corridor_lines: Vec<CorridorLine>,
    intra_area_lines: Vec<LineSpec>,
}

/// On-disk topology document. Accepted as TOML or JSON.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TopologyFile {
    pub gen_buses: Vec<BusId>,
    pub load_buses: Vec<BusId>,
    pub corridor_lines: Vec<LineSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub intra_area_lines: Vec<LineSpec>,
}

/// Validates identifiers and line placement and returns the topology.
pub fn build_topology(
    gen_buses: Vec<BusId>,
    load_buses: Vec<BusId>,
    corridor_lines: Vec<LineSpec>,
    intra_area_lines: Vec<LineSpec>,
) -> Result<CorridorTopology, TopologyError> {
    if gen_buses.is_empty() {
        return Err(TopologyError::Empty("generator bus"));
    }
    if load_buses.is_empty() {
        return Err(TopologyError::Empty("load bus"));
    }
    if corridor_lines.is_empty() {
        return Err(TopologyError::Empty("corridor line"));
    }

    let mut seen = HashSet::new();
    for bus in gen_buses.iter().chain(&load_buses) {
        if !seen.insert(bus.0.clone()) {
            return Err(TopologyError::DuplicateId(bus.0.clone()));
        }
    }
    let gens: HashSet<&BusId> = gen_buses.iter().collect();
    let loads: HashSet<&BusId> = load_buses.iter().collect();

    let mut line_ids = HashSet::new();
    for line in corridor_lines.iter().chain(&intra_area_lines) {
        if !line_ids.insert(line.id.0.clone()) {
            return Err(TopologyError::DuplicateId(line.id.0.clone()));
        }
        for end in [&line.from, &line.to] {
            if !gens.contains(end) && !loads.contains(end) {
                return Err(TopologyError::DanglingEndpoint {
                    line: line.id.clone(),
                    bus: end.clone(),
                });
            }
        }
    }

    let mut sorted = Vec::with_capacity(corridor_lines.len());
    for line in corridor_lines {
        let from_gen = gens.contains(&line.from);
        let to_gen = gens.contains(&line.to);
        let cl = match (from_gen, to_gen) {
            (true, false) => CorridorLine {
                id: line.id,
                gen_bus: line.from,
                load_bus: line.to,
                reversed: false,
            },
            (false, true) => CorridorLine {
                id: line.id,
                gen_bus: line.to,
                load_bus: line.from,
                reversed: true,
            },
            _ => return Err(TopologyError::NotACorridorLine(line.id)),
        };
        sorted.push(cl);
    }
    for line in &intra_area_lines {
        if gens.contains(&line.from) != gens.contains(&line.to) {
            return Err(TopologyError::NotAnIntraAreaLine(line.id.clone()));
        }
    }

    Ok(CorridorTopology {
        gen_buses,
        load_buses,
        corridor_lines: sorted,
        intra_area_lines,
    })
}

impl CorridorTopology {
    pub fn from_file_doc(doc: TopologyFile) -> Result<Self, TopologyError> {
        build_topology(
            doc.gen_buses,
            doc.load_buses,
            doc.corridor_lines,
            doc.intra_area_lines,
        )
    }

    /// Parses a topology document; JSON if it starts with `{`, TOML otherwise.
    pub fn parse(text: &str) -> Result<Self, TopologyError> {
        let doc: TopologyFile = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| TopologyError::Parse(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| TopologyError::Parse(e.to_string()))?
        };
        Self::from_file_doc(doc)
    }

    pub fn load(path: &Path) -> Result<Self, TopologyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TopologyError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_file_doc(&self) -> TopologyFile {
        TopologyFile {
            gen_buses: self.gen_buses.clone(),
            load_buses: self.load_buses.clone(),
            corridor_lines: self
                .corridor_lines
                .iter()
                .map(|l| {
                    let (from, to) = if l.reversed {
                        (l.load_bus.clone(), l.gen_bus.clone())
                    } else {
                        (l.gen_bus.clone(), l.load_bus.clone())
                    };
                    LineSpec {
                        id: l.id.clone(),
                        from,
                        to,
                    }
                })
                .collect(),
            intra_area_lines: self.intra_area_lines.clone(),
        }
    }

    pub fn gen_buses(&self) -> &[BusId] {
        &self.gen_buses
    }

    pub fn load_buses(&self) -> &[BusId] {
        &self.load_buses
    }

    /// Generator buses followed by load buses.
    pub fn boundary_buses(&self) -> impl Iterator<Item = &BusId> {
        self.gen_buses.iter().chain(&self.load_buses)
    }

    pub fn corridor_lines(&self) -> &[CorridorLine] {
        &self.corridor_lines
    }

    pub fn intra_area_lines(&self) -> &[LineSpec] {
        &self.intra_area_lines
    }

    pub fn corridor_line(&self, id: &LineId) -> Option<&CorridorLine> {
        self.corridor_lines.iter().find(|l| &l.id == id)
    }
}

/// One timestamped snapshot of boundary voltages and corridor currents.
///
/// Line currents are oriented from the generator-side endpoint to the
/// load-side endpoint. Lines listed in `out_of_service` carry no current
/// measurement and are dropped from the reduction for this frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SynchroFrame {
    pub timestamp_us: i64,
    pub bus_voltages: BTreeMap<BusId, Phasor>,
    pub line_currents: BTreeMap<LineId, Phasor>,
    pub out_of_service: BTreeSet<LineId>,
}

impl SynchroFrame {
    pub fn new(timestamp_us: i64) -> Self {
        SynchroFrame {
            timestamp_us,
            ..Default::default()
        }
    }

    pub fn with_voltage(mut self, bus: &str, v: Phasor) -> Self {
        self.bus_voltages.insert(BusId::new(bus), v);
        self
    }

    pub fn with_current(mut self, line: &str, i: Phasor) -> Self {
        self.line_currents.insert(LineId::new(line), i);
        self
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FrameError {
    #[error("missing measurement for `{0}`")]
    MissingMeasurement(String),
    #[error("non-finite measurement for `{0}`")]
    NonFiniteValue(String),
}

/// Measurements at both ends of one in-service corridor line.
#[derive(Clone, Debug, PartialEq)]
pub struct LineMeasurement {
    pub line: LineId,
    pub gen_bus: BusId,
    pub load_bus: BusId,
    pub v_gen: Phasor,
    pub v_load: Phasor,
    pub current: Phasor,
}

/// A frame checked against a topology, with every lookup already resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedFrame {
    frame: SynchroFrame,
    gen_voltages: Vec<(BusId, Phasor)>,
    load_voltages: Vec<(BusId, Phasor)>,
    lines: Vec<LineMeasurement>,
}

impl ValidatedFrame {
    pub fn timestamp_us(&self) -> i64 {
        self.frame.timestamp_us
    }

    pub fn frame(&self) -> &SynchroFrame {
        &self.frame
    }

    pub fn into_frame(self) -> SynchroFrame {
        self.frame
    }

    pub fn gen_voltages(&self) -> &[(BusId, Phasor)] {
        &self.gen_voltages
    }

    pub fn load_voltages(&self) -> &[(BusId, Phasor)] {
        &self.load_voltages
    }

    /// In-service corridor lines in topology order.
    pub fn lines(&self) -> &[LineMeasurement] {
        &self.lines
    }
}

/// Checks that `frame` covers every boundary bus and corridor line of `topo`
/// with finite values.
pub fn validate_frame(
    frame: SynchroFrame,
    topo: &CorridorTopology,
) -> Result<ValidatedFrame, FrameError> {
    let voltage = |bus: &BusId| -> Result<Phasor, FrameError> {
        let v = *frame
            .bus_voltages
            .get(bus)
            .ok_or_else(|| FrameError::MissingMeasurement(bus.0.clone()))?;
        if !phasor::is_finite(v) {
            return Err(FrameError::NonFiniteValue(bus.0.clone()));
        }
        Ok(v)
    };

    let gen_voltages = topo
        .gen_buses()
        .iter()
        .map(|b| voltage(b).map(|v| (b.clone(), v)))
        .collect::<Result<Vec<_>, _>>()?;
    let load_voltages = topo
        .load_buses()
        .iter()
        .map(|b| voltage(b).map(|v| (b.clone(), v)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut lines = Vec::with_capacity(topo.corridor_lines().len());
    for cl in topo.corridor_lines() {
        if frame.out_of_service.contains(&cl.id) {
            continue;
        }
        let current = *frame
            .line_currents
            .get(&cl.id)
            .ok_or_else(|| FrameError::MissingMeasurement(cl.id.0.clone()))?;
        if !phasor::is_finite(current) {
            return Err(FrameError::NonFiniteValue(cl.id.0.clone()));
        }
        lines.push(LineMeasurement {
            line: cl.id.clone(),
            gen_bus: cl.gen_bus.clone(),
            load_bus: cl.load_bus.clone(),
            v_gen: voltage(&cl.gen_bus)?,
            v_load: voltage(&cl.load_bus)?,
            current,
        });
    }

    Ok(ValidatedFrame {
        frame,
        gen_voltages,
        load_voltages,
        lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(xs: &[&str]) -> Vec<BusId> {
        xs.iter().map(|s| BusId::new(*s)).collect()
    }

    pub(crate) fn fig5() -> CorridorTopology {
        build_topology(
            ids(&["g1", "g2"]),
            ids(&["l1", "l2"]),
            vec![
                LineSpec::new("g1l1", "g1", "l1"),
                LineSpec::new("g2l2", "g2", "l2"),
            ],
            vec![
                LineSpec::new("g1g2", "g1", "g2"),
                LineSpec::new("l1l2", "l1", "l2"),
            ],
        )
        .unwrap()
    }

    fn full_frame() -> SynchroFrame {
        SynchroFrame::new(0)
            .with_voltage("g1", Phasor::new(1.0, 0.0))
            .with_voltage("g2", Phasor::new(1.0, 0.0))
            .with_voltage("l1", Phasor::new(0.5, -0.2))
            .with_voltage("l2", Phasor::new(0.5, -0.2))
            .with_current("g1l1", Phasor::new(5.72, -8.79))
            .with_current("g2l2", Phasor::new(17.14, -26.32))
    }

    #[test]
    fn fig5_topology_is_valid() {
        let t = fig5();
        assert_eq!(t.corridor_lines().len(), 2);
        assert_eq!(t.intra_area_lines().len(), 2);
        assert_eq!(t.boundary_buses().count(), 4);
    }

    #[test]
    fn single_line_topology() {
        let t = build_topology(
            ids(&["g"]),
            ids(&["l"]),
            vec![LineSpec::new("gl", "g", "l")],
            vec![],
        )
        .unwrap();
        assert_eq!(t.corridor_lines()[0].gen_bus, BusId::new("g"));
    }

    #[test]
    fn reversed_line_is_normalised() {
        let t = build_topology(
            ids(&["g"]),
            ids(&["l"]),
            vec![LineSpec::new("lg", "l", "g")],
            vec![],
        )
        .unwrap();
        let cl = &t.corridor_lines()[0];
        assert_eq!(cl.gen_bus, BusId::new("g"));
        assert!(cl.reversed);
        assert_eq!(t.to_file_doc().corridor_lines[0].from, BusId::new("l"));
    }

    #[test]
    fn gen_to_gen_corridor_line_rejected() {
        let err = build_topology(
            ids(&["g1", "g2"]),
            ids(&["l1"]),
            vec![LineSpec::new("g1g2", "g1", "g2")],
            vec![],
        )
        .unwrap_err();
        assert_eq!(err, TopologyError::NotACorridorLine(LineId::new("g1g2")));
    }

    #[test]
    fn duplicate_and_dangling() {
        let dup = build_topology(
            ids(&["g", "g"]),
            ids(&["l"]),
            vec![LineSpec::new("a", "g", "l")],
            vec![],
        );
        assert_eq!(dup.unwrap_err(), TopologyError::DuplicateId("g".into()));
        let overlap = build_topology(
            ids(&["g"]),
            ids(&["g"]),
            vec![LineSpec::new("a", "g", "g")],
            vec![],
        );
        assert_eq!(overlap.unwrap_err(), TopologyError::DuplicateId("g".into()));
        let dup_line = build_topology(
            ids(&["g"]),
            ids(&["l"]),
            vec![LineSpec::new("a", "g", "l"), LineSpec::new("a", "g", "l")],
            vec![],
        );
        assert_eq!(
            dup_line.unwrap_err(),
            TopologyError::DuplicateId("a".into())
        );
        let dangling = build_topology(
            ids(&["g"]),
            ids(&["l"]),
            vec![LineSpec::new("a", "g", "x")],
            vec![],
        );
        assert!(matches!(
            dangling.unwrap_err(),
            TopologyError::DanglingEndpoint { .. }
        ));
        let empty = build_topology(ids(&["g"]), ids(&["l"]), vec![], vec![]);
        assert!(matches!(empty.unwrap_err(), TopologyError::Empty(_)));
    }

    #[test]
    fn intra_line_must_stay_on_one_side() {
        let err = build_topology(
            ids(&["g"]),
            ids(&["l"]),
            vec![LineSpec::new("a", "g", "l")],
            vec![LineSpec::new("b", "g", "l")],
        )
        .unwrap_err();
        assert_eq!(err, TopologyError::NotAnIntraAreaLine(LineId::new("b")));
    }

    #[test]
    fn topology_file_toml_and_json() {
        let toml_doc = r#"
gen_buses = ["g1", "g2"]
load_buses = ["l1", "l2"]
corridor_lines = [
  { id = "g1l1", from = "g1", to = "l1" },
  { id = "g2l2", from = "g2", to = "l2" },
]
intra_area_lines = [
  { id = "g1g2", from = "g1", to = "g2" },
  { id = "l1l2", from = "l1", to = "l2" },
]
"#;
        let t = CorridorTopology::parse(toml_doc).unwrap();
        assert_eq!(t, fig5());
        let json = serde_json::to_string(&t.to_file_doc()).unwrap();
        assert_eq!(CorridorTopology::parse(&json).unwrap(), t);
    }

    #[test]
    fn complete_frame_accepted() {
        let v = validate_frame(full_frame(), &fig5()).unwrap();
        assert_eq!(v.lines().len(), 2);
        assert_eq!(v.lines()[1].v_load, Phasor::new(0.5, -0.2));
    }

    #[test]
    fn missing_current_rejected() {
        let mut f = full_frame();
        f.line_currents.remove(&LineId::new("g2l2"));
        assert_eq!(
            validate_frame(f, &fig5()).unwrap_err(),
            FrameError::MissingMeasurement("g2l2".into())
        );
    }

    #[test]
    fn nan_voltage_rejected() {
        let f = full_frame().with_voltage("l1", Phasor::new(f64::NAN, 0.0));
        assert_eq!(
            validate_frame(f, &fig5()).unwrap_err(),
            FrameError::NonFiniteValue("l1".into())
        );
    }

    #[test]
    fn out_of_service_line_skipped() {
        let mut f = full_frame();
        f.line_currents.remove(&LineId::new("g2l2"));
        f.out_of_service.insert(LineId::new("g2l2"));
        let v = validate_frame(f, &fig5()).unwrap();
        assert_eq!(v.lines().len(), 1);
    }
}
