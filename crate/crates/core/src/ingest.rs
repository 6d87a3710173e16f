//! Frame CSV input, per-frame report output and the streaming monitor.
//!
//! Frame CSV: a header `t_us`, then `V:<bus>:mag,V:<bus>:ang` for each
//! boundary bus, then `I:<line>:mag,I:<line>:ang` for each corridor line.
//! Magnitudes are per unit, angles in degrees. Both fields of a current left
//! empty mark the line out of service for that frame.
//!
//! Report CSV: `t_us,index_apparent_pct,index_impedance_pct,voltage_ratio,alarm`.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::margin::{self, IndexKind, MarginConfig, MarginReport, DEFAULT_THRESHOLD_PCT};
use crate::network::{validate_frame, BusId, CorridorTopology, LineId, SynchroFrame};
use crate::phasor::{from_polar_deg, Phasor};
use crate::powerflow::{NetworkFile, PfLine};
use crate::reduction::{corridor_admittance, reduce_frame, AdmittanceSource, LineAdmittanceSet};

pub const REPORT_HEADER: &str = "t_us,index_apparent_pct,index_impedance_pct,voltage_ratio,alarm";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("frame header does not match topology: {0}")]
    HeaderMismatch(String),
    #[error("malformed row at line {line}, column {column}")]
    MalformedRow { line: usize, column: usize },
    #[error("timestamp {timestamp_us} at line {line} does not increase")]
    NonMonotoneTimestamp { line: usize, timestamp_us: i64 },
    #[error("empty frame input")]
    EmptyInput,
    #[error("{0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> IngestError {
    let context = context.into();
    move |source| IngestError::Io { context, source }
}

#[derive(Clone, Debug, PartialEq)]
enum Column {
    Voltage(BusId),
    Current(LineId),
}

/// Column binding of a frame CSV header to a topology.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameLayout {
    columns: Vec<Column>,
}

impl FrameLayout {
    /// Canonical layout: boundary buses then corridor lines, topology order.
    pub fn for_topology(topo: &CorridorTopology) -> Self {
        let columns = topo
            .boundary_buses()
            .map(|b| Column::Voltage(b.clone()))
            .chain(
                topo.corridor_lines()
                    .iter()
                    .map(|l| Column::Current(l.id.clone())),
            )
            .collect();
        FrameLayout { columns }
    }

    pub fn header(&self) -> String {
        let mut out = String::from("t_us");
        for c in &self.columns {
            let (kind, id) = match c {
                Column::Voltage(b) => ("V", b.as_str()),
                Column::Current(l) => ("I", l.as_str()),
            };
            out.push_str(&format!(",{kind}:{id}:mag,{kind}:{id}:ang"));
        }
        out
    }

    /// Number of comma-separated fields in a row.
    pub fn width(&self) -> usize {
        1 + 2 * self.columns.len()
    }

    /// Binds a header line. Buses must precede lines and each id must
    /// appear exactly once; order within each group is free.
    pub fn bind(header: &str, topo: &CorridorTopology) -> Result<Self, IngestError> {
        let mismatch = |m: String| IngestError::HeaderMismatch(m);
        let fields: Vec<&str> = header
            .trim_end_matches(['\r', '\n'])
            .split(',')
            .map(str::trim)
            .collect();
        if fields.first() != Some(&"t_us") {
            return Err(mismatch("first column must be `t_us`".into()));
        }
        if fields.len() % 2 != 1 {
            return Err(mismatch("phasor columns must come in mag/ang pairs".into()));
        }
        let mut columns = Vec::new();
        let mut seen_current = false;
        for pair in fields[1..].chunks(2) {
            let parse = |f: &str| -> Option<(String, String, String)> {
                let mut it = f.splitn(3, ':');
                Some((it.next()?.into(), it.next()?.into(), it.next()?.into()))
            };
            let (k0, id0, p0) =
                parse(pair[0]).ok_or_else(|| mismatch(format!("bad column `{}`", pair[0])))?;
            let (k1, id1, p1) =
                parse(pair[1]).ok_or_else(|| mismatch(format!("bad column `{}`", pair[1])))?;
            if k0 != k1 || id0 != id1 || p0 != "mag" || p1 != "ang" {
                return Err(mismatch(format!(
                    "expected `{k0}:{id0}:mag,{k0}:{id0}:ang`"
                )));
            }
            match k0.as_str() {
                "V" if !seen_current => columns.push(Column::Voltage(BusId::new(id0))),
                "V" => {
                    return Err(mismatch(
                        "voltage columns must precede current columns".into(),
                    ))
                }
                "I" => {
                    seen_current = true;
                    columns.push(Column::Current(LineId::new(id0)));
                }
                other => return Err(mismatch(format!("unknown column kind `{other}`"))),
            }
        }

        let buses: BTreeSet<&BusId> = topo.boundary_buses().collect();
        let lines: BTreeSet<&LineId> = topo.corridor_lines().iter().map(|l| &l.id).collect();
        let mut got_buses = BTreeSet::new();
        let mut got_lines = BTreeSet::new();
        for c in &columns {
            let fresh = match c {
                Column::Voltage(b) => {
                    if !buses.contains(b) {
                        return Err(mismatch(format!("`{b}` is not a boundary bus")));
                    }
                    got_buses.insert(b)
                }
                Column::Current(l) => {
                    if !lines.contains(l) {
                        return Err(mismatch(format!("`{l}` is not a corridor line")));
                    }
                    got_lines.insert(l)
                }
            };
            if !fresh {
                return Err(mismatch("duplicate column".into()));
            }
        }
        if let Some(b) = buses.iter().find(|b| !got_buses.contains(**b)) {
            return Err(mismatch(format!("no columns for bus `{b}`")));
        }
        if let Some(l) = lines.iter().find(|l| !got_lines.contains(**l)) {
            return Err(mismatch(format!("no columns for line `{l}`")));
        }
        Ok(FrameLayout { columns })
    }

    /// Parses one data row. `line` is the 1-based line number for errors;
    /// `column` in an error is the 1-based field index.
    pub fn parse_row(&self, text: &str, line: usize) -> Result<SynchroFrame, IngestError> {
        let fields: Vec<&str> = text
            .trim_end_matches(['\r', '\n'])
            .split(',')
            .map(str::trim)
            .collect();
        if fields.len() != self.width() {
            let column = fields.len().min(self.width()) + 1;
            return Err(IngestError::MalformedRow { line, column });
        }
        let bad = |column: usize| IngestError::MalformedRow { line, column };
        let num = |k: usize| fields[k].parse::<f64>().map_err(|_| bad(k + 1));
        let timestamp_us = fields[0].parse::<i64>().map_err(|_| bad(1))?;

        let mut frame = SynchroFrame::new(timestamp_us);
        for (n, c) in self.columns.iter().enumerate() {
            let (km, ka) = (1 + 2 * n, 2 + 2 * n);
            match c {
                Column::Voltage(b) => {
                    let v = from_polar_deg(num(km)?, num(ka)?);
                    frame.bus_voltages.insert(b.clone(), v);
                }
                Column::Current(l) => match (fields[km].is_empty(), fields[ka].is_empty()) {
                    (true, true) => {
                        frame.out_of_service.insert(l.clone());
                    }
                    (true, false) => return Err(bad(km + 1)),
                    (false, true) => return Err(bad(ka + 1)),
                    (false, false) => {
                        let i = from_polar_deg(num(km)?, num(ka)?);
                        frame.line_currents.insert(l.clone(), i);
                    }
                },
            }
        }
        Ok(frame)
    }

    /// Serializes one frame; out-of-service or unmeasured lines get empty
    /// fields. Values use the shortest exact decimal form.
    pub fn format_row(&self, frame: &SynchroFrame) -> String {
        let mut out = frame.timestamp_us.to_string();
        let push = |out: &mut String, p: Option<Phasor>| match p {
            Some(p) => out.push_str(&format!(",{},{}", p.norm(), p.arg().to_degrees())),
            None => out.push_str(",,"),
        };
        for c in &self.columns {
            match c {
                Column::Voltage(b) => push(&mut out, frame.bus_voltages.get(b).copied()),
                Column::Current(l) => push(
                    &mut out,
                    frame
                        .line_currents
                        .get(l)
                        .copied()
                        .filter(|_| !frame.out_of_service.contains(l)),
                ),
            }
        }
        out
    }
}

/// Streams frames out of a CSV reader, enforcing increasing timestamps.
pub struct FrameReader<R> {
    lines: io::Lines<R>,
    layout: FrameLayout,
    line_no: usize,
    last_ts: Option<i64>,
}

impl<R: BufRead> FrameReader<R> {
    /// Reads and binds the header.
    pub fn new(reader: R, topo: &CorridorTopology) -> Result<Self, IngestError> {
        let mut lines = reader.lines();
        let mut line_no = 0;
        let header = loop {
            line_no += 1;
            match lines.next() {
                None => return Err(IngestError::EmptyInput),
                Some(l) => {
                    let l = l.map_err(io_err("reading frame header"))?;
                    if !l.trim().is_empty() {
                        break l;
                    }
                }
            }
        };
        let layout = FrameLayout::bind(&header, topo)?;
        Ok(FrameReader {
            lines,
            layout,
            line_no,
            last_ts: None,
        })
    }

    pub fn layout(&self) -> &FrameLayout {
        &self.layout
    }
}

impl<R: BufRead> Iterator for FrameReader<R> {
    type Item = Result<SynchroFrame, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line_no += 1;
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(io_err(format!("reading line {}", self.line_no))(e))),
            };
            if line.trim().is_empty() {
                continue;
            }
            let frame = match self.layout.parse_row(&line, self.line_no) {
                Ok(f) => f,
                Err(e) => return Some(Err(e)),
            };
            if self.last_ts.is_some_and(|t| frame.timestamp_us <= t) {
                return Some(Err(IngestError::NonMonotoneTimestamp {
                    line: self.line_no,
                    timestamp_us: frame.timestamp_us,
                }));
            }
            self.last_ts = Some(frame.timestamp_us);
            return Some(Ok(frame));
        }
    }
}

/// Parses a whole frame CSV document.
pub fn parse_frame_csv(
    text: &str,
    topo: &CorridorTopology,
) -> Result<Vec<SynchroFrame>, IngestError> {
    FrameReader::new(text.as_bytes(), topo)?.collect()
}

/// Writes frames in the canonical layout for `topo`.
pub fn write_frame_csv<W: Write>(
    mut out: W,
    frames: &[SynchroFrame],
    topo: &CorridorTopology,
) -> io::Result<()> {
    let layout = FrameLayout::for_topology(topo);
    writeln!(out, "{}", layout.header())?;
    for f in frames {
        writeln!(out, "{}", layout.format_row(f))?;
    }
    Ok(())
}

/// One report line for an evaluated frame. Indices that could not be
/// computed are left empty.
pub fn report_row(r: &MarginReport) -> String {
    let cell = |x: &Result<f64, margin::MarginError>| match x {
        Ok(v) => format!("{v:.6}"),
        Err(_) => String::new(),
    };
    format!(
        "{},{},{},{},{}",
        r.timestamp_us,
        cell(&r.apparent_power_index_pct),
        cell(&r.impedance_match_pct),
        cell(&r.voltage_ratio),
        r.alarm
    )
}

/// Report line for a frame whose reduction or chosen index failed.
pub fn diagnostic_row(timestamp_us: i64) -> String {
    format!("{timestamp_us},,,,false")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InputSource {
    Stdin,
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutputSink {
    Stdout,
    File(PathBuf),
}

impl InputSource {
    /// `-` means standard input.
    pub fn from_arg(s: &str) -> Self {
        if s == "-" {
            InputSource::Stdin
        } else {
            InputSource::File(s.into())
        }
    }
}

impl OutputSink {
    pub fn from_arg(s: &str) -> Self {
        if s == "-" {
            OutputSink::Stdout
        } else {
            OutputSink::File(s.into())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AdmittanceMode {
    Estimate,
    /// Line file in the network `lines` format.
    Static(PathBuf),
}

impl AdmittanceMode {
    /// `estimate`, or a path to a line file.
    pub fn from_arg(s: &str) -> Self {
        if s == "estimate" {
            AdmittanceMode::Estimate
        } else {
            AdmittanceMode::Static(s.into())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonitorConfig {
    pub topology_path: PathBuf,
    pub input: InputSource,
    pub admittance: AdmittanceMode,
    pub index: IndexKind,
    pub threshold_pct: f64,
    pub output: OutputSink,
}

impl MonitorConfig {
    pub fn new(topology_path: impl Into<PathBuf>, input: InputSource) -> Self {
        MonitorConfig {
            topology_path: topology_path.into(),
            input,
            admittance: AdmittanceMode::Estimate,
            index: IndexKind::Apparent,
            threshold_pct: DEFAULT_THRESHOLD_PCT,
            output: OutputSink::Stdout,
        }
    }
}

/// Outcome of a monitoring run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MonitorSummary {
    pub frames: usize,
    pub alarms: usize,
    pub diagnostics: usize,
    pub first_alarm_us: Option<i64>,
}

impl MonitorSummary {
    /// 0 when every frame was processed without alarm, 2 when any alarm fired.
    pub fn exit_code(&self) -> i32 {
        if self.alarms > 0 {
            2
        } else {
            0
        }
    }
}

/// Reads the static line admittances and checks they cover the corridor.
pub fn load_static_admittances(
    path: &Path,
    topo: &CorridorTopology,
) -> Result<LineAdmittanceSet, IngestError> {
    let text =
        std::fs::read_to_string(path).map_err(io_err(format!("reading {}", path.display())))?;
    let doc = NetworkFile::parse(&text)
        .map_err(|e| IngestError::Config(format!("{}: {e}", path.display())))?;
    let lines: Vec<PfLine> = doc.lines.into_iter().map(PfLine::from).collect();
    let set = LineAdmittanceSet::from_lines(&lines);
    corridor_admittance(&set, topo)
        .map_err(|e| IngestError::Config(format!("{}: {e}", path.display())))?;
    Ok(set)
}

/// Runs the per-frame pipeline from an open reader to an open writer.
///
/// Each frame is validated, reduced and evaluated on its own. A frame that
/// fails any of those steps yields a diagnostic row and the stream goes on;
/// malformed rows and timestamps that do not increase stop it.
pub fn run_monitor<R: BufRead, W: Write>(
    reader: R,
    mut out: W,
    topo: &CorridorTopology,
    source: &AdmittanceSource,
    config: &MarginConfig,
) -> Result<MonitorSummary, IngestError> {
    let frames = FrameReader::new(reader, topo)?;
    let write_err = || io_err("writing report");
    writeln!(out, "{REPORT_HEADER}").map_err(write_err())?;
    let mut summary = MonitorSummary::default();
    for frame in frames {
        let frame = frame?;
        let ts = frame.timestamp_us;
        summary.frames += 1;
        let report = validate_frame(frame, topo)
            .map_err(|e| e.to_string())
            .and_then(|vf| reduce_frame(&vf, topo, source).map_err(|e| e.to_string()))
            .and_then(|rs| margin::evaluate(&rs, config).map_err(|e| e.to_string()));
        let row = match report {
            Ok(r) => {
                if r.alarm {
                    summary.alarms += 1;
                    summary.first_alarm_us.get_or_insert(ts);
                }
                report_row(&r)
            }
            Err(e) => {
                log::warn!("frame {ts}: {e}");
                summary.diagnostics += 1;
                diagnostic_row(ts)
            }
        };
        writeln!(out, "{row}").map_err(write_err())?;
    }
    out.flush().map_err(write_err())?;
    Ok(summary)
}

/// Opens everything named in `config` and runs the monitor.
pub fn stream_monitor(config: &MonitorConfig) -> Result<MonitorSummary, IngestError> {
    let margin_cfg = MarginConfig::new(config.index, config.threshold_pct)
        .map_err(|e| IngestError::Config(e.to_string()))?;
    let topo = CorridorTopology::load(&config.topology_path)
        .map_err(|e| IngestError::Config(e.to_string()))?;
    let source = match &config.admittance {
        AdmittanceMode::Estimate => AdmittanceSource::estimate(),
        AdmittanceMode::Static(p) => AdmittanceSource::Static(load_static_admittances(p, &topo)?),
    };
    let reader: Box<dyn BufRead> = match &config.input {
        InputSource::Stdin => Box::new(io::stdin().lock()),
        InputSource::File(p) => Box::new(BufReader::new(
            File::open(p).map_err(io_err(format!("opening {}", p.display())))?,
        )),
    };
    let writer: Box<dyn Write> = match &config.output {
        OutputSink::Stdout => Box::new(BufWriter::new(io::stdout().lock())),
        OutputSink::File(p) => Box::new(BufWriter::new(
            File::create(p).map_err(io_err(format!("creating {}", p.display())))?,
        )),
    };
    run_monitor(reader, writer, &topo, &source, &margin_cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::FourBusCase;
    use crate::phasor::relative_error;

    const FIG5_HEADER: &str =
        "t_us,V:g1:mag,V:g1:ang,V:g2:mag,V:g2:ang,V:l1:mag,V:l1:ang,V:l2:mag,V:l2:ang,\
                               I:g1l1:mag,I:g1l1:ang,I:g2l2:mag,I:g2l2:ang";
    const TABLE1_ROW: &str =
        "1000000,1.0,0.0,1.0,0.0,0.53852,-21.801,0.53852,-21.801,10.626,-54.95,31.95,-54.82";

    fn topo() -> CorridorTopology {
        FourBusCase::topology()
    }

    #[test]
    fn canonical_header() {
        assert_eq!(FrameLayout::for_topology(&topo()).header(), FIG5_HEADER);
    }

    #[test]
    fn table1_row_parses() {
        let frames = parse_frame_csv(&format!("{FIG5_HEADER}\n{TABLE1_ROW}\n"), &topo()).unwrap();
        assert_eq!(frames.len(), 1);
        let f = &frames[0];
        assert_eq!(f.timestamp_us, 1_000_000);
        let vl = f.bus_voltages[&BusId::new("l1")];
        assert!(relative_error(vl, Phasor::new(0.5, -0.2)) < 1e-5);
        // The example currents are the rounded printed ones, not Y dV.
        let i1 = f.line_currents[&LineId::new("g1l1")];
        assert!(relative_error(i1, Phasor::new(6.1, -8.7)) < 1e-3);
        let i2 = f.line_currents[&LineId::new("g2l2")];
        assert!(relative_error(i2, Phasor::new(18.4, -26.1)) < 1e-3);
    }

    #[test]
    fn short_row_is_malformed() {
        let row = "1000000,1.0,0.0,1.0,0.0,0.53852,-21.801,0.53852,-21.801,10.626,-54.95";
        let err = parse_frame_csv(&format!("{FIG5_HEADER}\n{row}\n"), &topo()).unwrap_err();
        assert!(
            matches!(
                err,
                IngestError::MalformedRow {
                    line: 2,
                    column: 12
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn bad_number_names_column() {
        let row = TABLE1_ROW.replace("0.53852,-21.801,0.53852", "0.53852,x,0.53852");
        let err = parse_frame_csv(&format!("{FIG5_HEADER}\n{row}\n"), &topo()).unwrap_err();
        assert!(
            matches!(err, IngestError::MalformedRow { line: 2, column: 7 }),
            "{err}"
        );
    }

    #[test]
    fn repeated_timestamp_rejected() {
        let text = format!("{FIG5_HEADER}\n{TABLE1_ROW}\n{TABLE1_ROW}\n");
        let err = parse_frame_csv(&text, &topo()).unwrap_err();
        assert!(
            matches!(err, IngestError::NonMonotoneTimestamp { line: 3, .. }),
            "{err}"
        );
    }

    #[test]
    fn header_must_match_topology() {
        let t = topo();
        assert!(FrameLayout::bind(&FIG5_HEADER.replace("g2l2", "x"), &t).is_err());
        assert!(FrameLayout::bind(&FIG5_HEADER.replace("t_us", "t"), &t).is_err());
        let without_l2 = FIG5_HEADER.replace(",V:l2:mag,V:l2:ang", "");
        assert!(matches!(
            FrameLayout::bind(&without_l2, &t),
            Err(IngestError::HeaderMismatch(_))
        ));
        // Reordered groups are fine.
        let swapped = FIG5_HEADER.replace(
            "V:g1:mag,V:g1:ang,V:g2:mag,V:g2:ang",
            "V:g2:mag,V:g2:ang,V:g1:mag,V:g1:ang",
        );
        let layout = FrameLayout::bind(&swapped, &t).unwrap();
        assert_eq!(layout.width(), 13);
    }

    #[test]
    fn empty_current_is_out_of_service() {
        let row = "5,1,0,1,0,0.5,-20,0.5,-20,10,-50,,";
        let f = &parse_frame_csv(&format!("{FIG5_HEADER}\n{row}\n"), &topo()).unwrap()[0];
        assert!(f.out_of_service.contains(&LineId::new("g2l2")));
        let half = "5,1,0,1,0,0.5,-20,0.5,-20,10,-50,,3";
        assert!(parse_frame_csv(&format!("{FIG5_HEADER}\n{half}\n"), &topo()).is_err());
    }

    #[test]
    fn frame_csv_round_trip() {
        let t = topo();
        let mut f = FourBusCase::published().frame(42);
        let mut buf = Vec::new();
        write_frame_csv(&mut buf, std::slice::from_ref(&f), &t).unwrap();
        let back = parse_frame_csv(std::str::from_utf8(&buf).unwrap(), &t).unwrap();
        for (k, v) in &f.bus_voltages {
            assert!(relative_error(back[0].bus_voltages[k], *v) < 1e-14);
        }
        f.out_of_service.insert(LineId::new("g1l1"));
        let layout = FrameLayout::for_topology(&t);
        assert!(layout.format_row(&f).contains(",,"));
    }

    fn run(text: &str) -> (MonitorSummary, String) {
        let mut out = Vec::new();
        let s = run_monitor(
            text.as_bytes(),
            &mut out,
            &topo(),
            &AdmittanceSource::estimate(),
            &MarginConfig::default(),
        )
        .unwrap();
        (s, String::from_utf8(out).unwrap())
    }

    #[test]
    fn table1_frame_alarms() {
        let t = topo();
        let mut buf = Vec::new();
        write_frame_csv(&mut buf, &[FourBusCase::published().frame(1_000_000)], &t).unwrap();
        let (s, out) = run(std::str::from_utf8(&buf).unwrap());
        assert_eq!(s.exit_code(), 2);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], REPORT_HEADER);
        assert!(
            lines[1].starts_with("1000000,100.000000,100.000000,1.000000,true"),
            "{}",
            lines[1]
        );
    }

    #[test]
    fn no_load_frames_give_diagnostics() {
        let rows: String = (0..3)
            .map(|k| format!("{k},1,0,1,0,1,0,1,0,0,0,0,0\n"))
            .collect();
        let (s, out) = run(&format!("{FIG5_HEADER}\n{rows}"));
        assert_eq!(s.exit_code(), 0);
        assert_eq!(s.diagnostics, 3);
        assert_eq!(out.lines().nth(2), Some("1,,,,false"));
    }

    #[test]
    fn bad_frame_does_not_stop_stream() {
        let text = format!("{FIG5_HEADER}\n1,1,0,1,0,NaN,0,1,0,0,0,0,0\n{TABLE1_ROW}\n");
        let (s, out) = run(&text);
        assert_eq!(s.frames, 2);
        assert_eq!(s.diagnostics, 1);
        assert_eq!(out.lines().count(), 3);
    }

    #[test]
    fn static_admittances_from_line_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lines.toml");
        std::fs::write(
            &p,
            "[[lines]]\nid = \"g1l1\"\nfrom = \"g1\"\nto = \"l1\"\ng = 3.8\nb = -19.1\n\
             [[lines]]\nid = \"g2l2\"\nfrom = \"g2\"\nto = \"l2\"\ng = 11.4\nb = -57.2\n",
        )
        .unwrap();
        let set = load_static_admittances(&p, &topo()).unwrap();
        assert_eq!(
            set.get(&LineId::new("g2l2")),
            Some(Phasor::new(11.4, -57.2))
        );
        std::fs::write(&p, "lines = []\n").unwrap();
        assert!(load_static_admittances(&p, &topo()).is_err());
    }
}
