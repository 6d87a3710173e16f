//! Reference experiments: the perfect-reduction example and the reduction
//! error sweep over load imbalance.

mod table;

pub use table::{emit_table, parse_sweep_csv, TableFormat, SWEEP_CSV_HEADER};

use rayon::prelude::*;
use thiserror::Error;

use crate::margin::{self, MarginConfig, MarginReport};
use crate::network::{
    build_topology, validate_frame, BusId, CorridorTopology, FrameError, LineSpec, SynchroFrame,
};
use crate::phasor::{relative_error, Phasor};
use crate::powerflow::{
    frame_from_solution, max_loadability, two_bus_max_power, BusKind, LoadDirection,
    LoadabilityResult, PfBus, PfLine, PfNetwork,
};
use crate::reduction::{reduce_frame, AdmittanceSource, ReducedSystem};

/// Default sweep network, topology and splits shipped with the crate.
pub const DEFAULT_NETWORK: &str = include_str!("../../data/sweep_network.toml");
pub const DEFAULT_TOPOLOGY: &str = include_str!("../../data/sweep_topology.toml");
pub const DEFAULT_SPLITS: &str = include_str!("../../data/sweep_splits.csv");

/// Relative tolerance against the published, rounded example values.
pub const PUBLISHED_TOLERANCE: f64 = 0.05;
/// Tolerance for our own pipeline's algebraic self-consistency.
pub const SELF_CONSISTENCY_TOLERANCE: f64 = 1e-10;
/// Full network versus reduced line maximum power at equal boundary voltages.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(
        "{quantity}: expected {expected}, got {actual} (relative error {rel_err:.3e} > {tol:e})"
    )]
    AssertionFailure {
        quantity: String,
        expected: String,
        actual: String,
        rel_err: f64,
        tol: f64,
    },
    #[error("split {index}: base case infeasible: {reason}")]
    BaseCaseInfeasible { index: usize, reason: String },
    #[error("invalid split {index}: {reason}")]
    BadSplit { index: usize, reason: String },
    #[error("sweep needs exactly two load buses, topology has {0}")]
    LoadCount(usize),
    #[error("{0}")]
    Pipeline(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl From<FrameError> for HarnessError {
    fn from(e: FrameError) -> Self {
        HarnessError::Pipeline(e.to_string())
    }
}

/// One compared quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub quantity: &'static str,
    pub expected: Phasor,
    pub actual: Phasor,
    pub rel_err: f64,
    pub tol: f64,
}

impl Check {
    fn new(quantity: &'static str, expected: Phasor, actual: Phasor, tol: f64) -> Self {
        Check {
            quantity,
            expected,
            actual,
            rel_err: relative_error(actual, expected),
            tol,
        }
    }

    fn real(quantity: &'static str, expected: f64, actual: f64, tol: f64) -> Self {
        Self::new(
            quantity,
            Phasor::new(expected, 0.0),
            Phasor::new(actual, 0.0),
            tol,
        )
    }

    pub fn passed(&self) -> bool {
        self.rel_err <= self.tol
    }

    fn into_result(self) -> Result<Check, HarnessError> {
        if self.passed() {
            Ok(self)
        } else {
            Err(HarnessError::AssertionFailure {
                quantity: self.quantity.to_string(),
                expected: format!("{}", self.expected),
                actual: format!("{}", self.actual),
                rel_err: self.rel_err,
                tol: self.tol,
            })
        }
    }
}

/// Two generators, two loads, one corridor line per pair plus the two ties.
#[derive(Clone, Debug, PartialEq)]
pub struct FourBusCase {
    pub y_g1l1: Phasor,
    pub y_g2l2: Phasor,
    pub y_g1g2: Phasor,
    pub y_l1l2: Phasor,
    /// Common generator voltage.
    pub v_g: Phasor,
    /// Common load voltage.
    pub v_l: Phasor,
}

impl FourBusCase {
    /// The published perfect-reduction example.
    pub fn published() -> Self {
        FourBusCase {
            y_g1l1: Phasor::new(3.8, -19.1),
            y_g2l2: Phasor::new(11.4, -57.2),
            y_g1g2: Phasor::new(5.2, -25.8),
            y_l1l2: Phasor::new(8.2, -34.8),
            v_g: Phasor::new(1.0, 0.0),
            v_l: Phasor::new(0.5, -0.2),
        }
    }

    pub fn topology() -> CorridorTopology {
        build_topology(
            vec![BusId::new("g1"), BusId::new("g2")],
            vec![BusId::new("l1"), BusId::new("l2")],
            vec![
                LineSpec::new("g1l1", "g1", "l1"),
                LineSpec::new("g2l2", "g2", "l2"),
            ],
            vec![
                LineSpec::new("g1g2", "g1", "g2"),
                LineSpec::new("l1l2", "l1", "l2"),
            ],
        )
        .expect("fixed four-bus topology is valid")
    }

    /// Two-ended measurements at the equal-voltage operating point. Tie
    /// currents vanish because both ends of each tie sit at one voltage.
    pub fn frame(&self, timestamp_us: i64) -> SynchroFrame {
        let dv = self.v_g - self.v_l;
        SynchroFrame::new(timestamp_us)
            .with_voltage("g1", self.v_g)
            .with_voltage("g2", self.v_g)
            .with_voltage("l1", self.v_l)
            .with_voltage("l2", self.v_l)
            .with_current("g1l1", self.y_g1l1 * dv)
            .with_current("g2l2", self.y_g2l2 * dv)
    }

    /// Power-flow model whose loads are those drawn at the equal-voltage
    /// operating point, with generation shared in proportion to the
    /// generator-side corridor conductance.
    pub fn network(&self) -> PfNetwork {
        let dv = self.v_g - self.v_l;
        let s1 = self.v_l * (self.y_g1l1 * dv).conj();
        let s2 = self.v_l * (self.y_g2l2 * dv).conj();
        let y = self.y_g1l1 + self.y_g2l2;
        let k1 = (self.y_g1l1 / y).re;
        PfNetwork::new(
            vec![
                PfBus::slack("g1", self.v_g.norm(), self.v_g.arg().to_degrees())
                    .with_participation(k1),
                PfBus::pv("g2", 0.0, self.v_g.norm()).with_participation(1.0 - k1),
                PfBus::pq("l1", s1.re, s1.im),
                PfBus::pq("l2", s2.re, s2.im),
            ],
            vec![
                PfLine::new("g1l1", "g1", "l1", self.y_g1l1),
                PfLine::new("g2l2", "g2", "l2", self.y_g2l2),
                PfLine::new("g1g2", "g1", "g2", self.y_g1g2),
                PfLine::new("l1l2", "l1", "l2", self.y_l1l2),
            ],
        )
        .expect("four-bus case network is valid")
    }
}

/// Published values of the perfect-reduction example (rounded as printed).
pub mod published {
    use crate::phasor::Phasor;

    pub const Y_GL: Phasor = Phasor::new(15.3, -76.3);
    pub const Y_GL_ABS: f64 = 77.82;
    pub const Y_L_ABS: f64 = 77.82;
    pub const W_1: f64 = 0.25;
    pub const W_2: f64 = 0.75;
    pub const V_G: Phasor = Phasor::new(1.0, 0.0);
    pub const V_L: Phasor = Phasor::new(0.5, -0.2);
    pub const V_GL: Phasor = Phasor::new(0.5, 0.2);
    pub const I_GL: Phasor = Phasor::new(24.5, -34.8);
    pub const S_GL: Phasor = Phasor::new(4.6, 22.8);
    pub const S_L_ABS: f64 = 23.3;
    pub const S_GL_ABS: f64 = 23.3;
    pub const INDEX_PCT: f64 = 100.0;
}

#[derive(Clone, Debug)]
pub struct PerfectReduction {
    pub case: FourBusCase,
    pub reduced: ReducedSystem,
    pub margin: MarginReport,
    /// Reduced load power `V_l conj(I_gl)`.
    pub s_l: Phasor,
    /// Power absorbed by the equivalent line, `V_gl conj(I_gl)`.
    pub s_gl: Phasor,
    /// Maximum loadability of the full four-bus network at the operating
    /// point's load mix.
    pub full: LoadabilityResult,
    /// Maximum power of the reduced line at the same power factor.
    pub reduced_max: Phasor,
    /// Internal consistency checks, all at [`SELF_CONSISTENCY_TOLERANCE`]
    /// except the full/reduced equivalence at [`EQUIVALENCE_TOLERANCE`].
    pub self_checks: Vec<Check>,
    /// Comparisons against the published values; empty for custom cases.
    pub published_checks: Vec<Check>,
}

/// Reduces the equal-voltage four-bus case and checks it against the full
/// network's maximum loadability.
pub fn perfect_reduction(case: &FourBusCase) -> Result<PerfectReduction, HarnessError> {
    let topo = FourBusCase::topology();
    let frame = validate_frame(case.frame(0), &topo)?;
    let reduced = reduce_frame(&frame, &topo, &AdmittanceSource::estimate())
        .map_err(|e| HarnessError::Pipeline(e.to_string()))?;
    let margin = margin::evaluate(&reduced, &MarginConfig::default())
        .map_err(|e| HarnessError::Pipeline(e.to_string()))?;
    let th = reduced
        .thevenin
        .ok_or_else(|| HarnessError::Pipeline("no corridor current".into()))?;
    let s_l = reduced.v_l * reduced.i_gl.conj();
    let s_gl = reduced.v_gl * reduced.i_gl.conj();

    let full = max_loadability(&case.network(), &LoadDirection::proportional(), true)
        .map_err(|e| HarnessError::Pipeline(e.to_string()))?;
    let reduced_max = two_bus_max_power(reduced.v_g, reduced.y_gl, s_l.arg())
        .map_err(|e| HarnessError::Pipeline(e.to_string()))?;

    let lines_current: Phasor = reduced
        .admittances
        .0
        .values()
        .map(|y| y * (case.v_g - case.v_l))
        .sum();
    let tol = SELF_CONSISTENCY_TOLERANCE;
    let self_checks = vec![
        Check::new(
            "Y_gl (V_g - V_l) = sum Y_ij dV_ij",
            lines_current,
            reduced.y_gl * reduced.v_gl,
            tol,
        ),
        Check::new(
            "Z_gl I_gl = V_gl",
            reduced.v_gl,
            th.z_gl * reduced.i_gl,
            tol,
        ),
        Check::new("Z_l I_gl = V_l", reduced.v_l, th.z_l * reduced.i_gl, tol),
        Check::new("V_g", case.v_g, reduced.v_g, tol),
        Check::new("V_l", case.v_l, reduced.v_l, tol),
        Check::new(
            "sum w_g",
            Phasor::new(1.0, 0.0),
            reduced.weights.gen_weights.values().sum(),
            tol,
        ),
        Check::new(
            "sum w_l",
            Phasor::new(1.0, 0.0),
            reduced.weights.load_weights.values().sum(),
            tol,
        ),
        Check::real(
            "index = 100 |V_gl| / |V_l|",
            100.0 * reduced.v_gl.norm() / reduced.v_l.norm(),
            margin.apparent_power_index_pct.clone().unwrap_or(f64::NAN),
            tol,
        ),
        Check::real(
            "full-network |S_max| = reduced |S_max|",
            reduced_max.norm(),
            full.total_load_s_max.norm(),
            EQUIVALENCE_TOLERANCE,
        ),
    ];
    for c in &self_checks {
        c.clone().into_result()?;
    }

    Ok(PerfectReduction {
        case: case.clone(),
        reduced,
        margin,
        s_l,
        s_gl,
        full,
        reduced_max,
        self_checks,
        published_checks: Vec::new(),
    })
}

/// Runs the published perfect-reduction example and compares every reported
/// quantity with the printed values.
pub fn run_perfect_reduction() -> Result<PerfectReduction, HarnessError> {
    let mut out = perfect_reduction(&FourBusCase::published())?;
    let rs = &out.reduced;
    let th = rs.thevenin.expect("checked in perfect_reduction");
    let tol = PUBLISHED_TOLERANCE;
    let checks = vec![
        Check::new("Y_gl", published::Y_GL, rs.y_gl, tol),
        Check::real("|Y_gl|", published::Y_GL_ABS, rs.y_gl.norm(), tol),
        Check::real("|Y_l|", published::Y_L_ABS, th.z_l.inv().norm(), tol),
        Check::new(
            "w_1",
            Phasor::new(published::W_1, 0.0),
            rs.weights.gen("g1"),
            tol,
        ),
        Check::new(
            "w_2",
            Phasor::new(published::W_2, 0.0),
            rs.weights.gen("g2"),
            tol,
        ),
        Check::new("V_g", published::V_G, rs.v_g, tol),
        Check::new("V_l", published::V_L, rs.v_l, tol),
        Check::new("V_gl", published::V_GL, rs.v_gl, tol),
        Check::new("I_gl", published::I_GL, rs.i_gl, tol),
        Check::new("S_gl", published::S_GL, out.s_gl, tol),
        Check::real("|S_gl|", published::S_GL_ABS, out.s_gl.norm(), tol),
        Check::real("|S_l|", published::S_L_ABS, out.s_l.norm(), tol),
        Check::real(
            "Index",
            published::INDEX_PCT,
            out.margin
                .apparent_power_index_pct
                .clone()
                .unwrap_or(f64::NAN),
            tol,
        ),
    ];
    for c in &checks {
        c.clone().into_result()?;
    }
    out.published_checks = checks;
    Ok(out)
}

/// One row of the reduction error sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub p_max_l1: f64,
    pub p_max_l2: f64,
    pub p_max_total: f64,
    /// `|V_l1| - |V_l2|` at the complete system's limit, per unit.
    pub dv_mag: f64,
    /// `angle(V_l1) - angle(V_l2)` in degrees.
    pub d_angle_deg: f64,
    pub p_max_reduced: f64,
    /// `100 (p_max_total - p_max_reduced) / p_max_reduced`; negative when
    /// the reduced line overestimates.
    pub error_pct: f64,
}

/// Real-power shares per load bus, in topology load order.
#[derive(Clone, Debug, PartialEq)]
pub struct Split(pub Vec<f64>);

/// Parses a splits file: a header naming the load buses, then one row of
/// real-power shares per split.
pub fn parse_splits(text: &str, topo: &CorridorTopology) -> Result<Vec<Split>, HarnessError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (hline, header) = lines.next().ok_or(HarnessError::Parse {
        line: 1,
        reason: "empty file".into(),
    })?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let order: Vec<usize> = topo
        .load_buses()
        .iter()
        .map(|b| {
            names
                .iter()
                .position(|n| *n == b.as_str())
                .ok_or(HarnessError::Parse {
                    line: hline + 1,
                    reason: format!("no column for load bus `{b}`"),
                })
        })
        .collect::<Result<_, _>>()?;
    if names.len() != order.len() {
        return Err(HarnessError::Parse {
            line: hline + 1,
            reason: "header must name exactly the load buses".into(),
        });
    }
    lines
        .map(|(n, l)| {
            let fields: Vec<f64> = l
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| HarnessError::Parse {
                    line: n + 1,
                    reason: e.to_string(),
                })?;
            if fields.len() != names.len() {
                return Err(HarnessError::Parse {
                    line: n + 1,
                    reason: format!("expected {} fields, found {}", names.len(), fields.len()),
                });
            }
            Ok(Split(order.iter().map(|&i| fields[i]).collect()))
        })
        .collect()
}

/// Redistributes the base network's total real load according to `split`,
/// keeping each load's own power factor.
fn split_network(
    base: &PfNetwork,
    topo: &CorridorTopology,
    split: &Split,
    index: usize,
) -> Result<PfNetwork, HarnessError> {
    let bad = |reason: String| HarnessError::BadSplit { index, reason };
    if split.0.len() != topo.load_buses().len() {
        return Err(bad("one share per load bus required".into()));
    }
    if split.0.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(bad("shares must be finite and nonnegative".into()));
    }
    let total_share: f64 = split.0.iter().sum();
    if total_share <= 0.0 {
        return Err(bad("shares sum to zero".into()));
    }
    let total_p: f64 = topo
        .load_buses()
        .iter()
        .map(|b| base.bus(b).map(|x| x.p).unwrap_or(0.0))
        .sum();
    let mut net = base.clone();
    for (bus, share) in topo.load_buses().iter().zip(&split.0) {
        let b = base
            .bus(bus)
            .filter(|b| b.kind == BusKind::Pq)
            .ok_or_else(|| bad(format!("load bus `{bus}` is not a PQ bus of the network")))?;
        if b.p <= 0.0 {
            return Err(bad(format!(
                "load `{bus}` needs positive base real power to fix its power factor"
            )));
        }
        let p = total_p * share / total_share;
        net.set_load(bus, p, p * b.q / b.p)
            .map_err(|e| bad(e.to_string()))?;
    }
    Ok(net)
}

fn sweep_row(
    base: &PfNetwork,
    topo: &CorridorTopology,
    split: &Split,
    index: usize,
) -> Result<SweepRow, HarnessError> {
    // (1) complete system limit under proportional load increase
    let net = split_network(base, topo, split, index)?;
    let full = max_loadability(&net, &LoadDirection::proportional(), true).map_err(|e| {
        HarnessError::BaseCaseInfeasible {
            index,
            reason: e.to_string(),
        }
    })?;
    let sol = &full.critical_solution;

    // (2) reduce the boundary measurements at that limit
    let frame = frame_from_solution(sol, &full.critical_network, topo, 0)
        .map_err(|e| HarnessError::Pipeline(e.to_string()))?;
    let frame = validate_frame(frame, topo)?;
    let reduced = reduce_frame(&frame, topo, &AdmittanceSource::estimate())
        .map_err(|e| HarnessError::Pipeline(e.to_string()))?;

    // (3) reduced line limit at the complete system's load power factor
    let s_total = full.total_load_s_max;
    let s_red = two_bus_max_power(reduced.v_g, reduced.y_gl, s_total.arg())
        .map_err(|e| HarnessError::Pipeline(e.to_string()))?;

    // (4) signed error
    let (l1, l2) = (&topo.load_buses()[0], &topo.load_buses()[1]);
    let load_p = |b: &BusId| full.critical_network.bus(b).map(|x| x.p).unwrap_or(0.0);
    let (v1, v2) = (sol.bus_voltages[l1], sol.bus_voltages[l2]);
    let mut d_angle = (v1.arg() - v2.arg()).to_degrees();
    if d_angle > 180.0 {
        d_angle -= 360.0;
    } else if d_angle < -180.0 {
        d_angle += 360.0;
    }
    Ok(SweepRow {
        p_max_l1: load_p(l1),
        p_max_l2: load_p(l2),
        p_max_total: s_total.re,
        dv_mag: v1.norm() - v2.norm(),
        d_angle_deg: d_angle,
        p_max_reduced: s_red.re,
        error_pct: 100.0 * (s_total.re - s_red.re) / s_red.re,
    })
}

/// Runs the four-step error assessment for each load split. Rows are
/// computed in parallel and returned in split order.
pub fn error_sweep(
    base: &PfNetwork,
    topo: &CorridorTopology,
    splits: &[Split],
) -> Result<Vec<SweepRow>, HarnessError> {
    if topo.load_buses().len() != 2 {
        return Err(HarnessError::LoadCount(topo.load_buses().len()));
    }
    splits
        .par_iter()
        .enumerate()
        .map(|(i, s)| sweep_row(base, topo, s, i))
        .collect()
}

/// The shipped sweep inputs.
pub fn default_sweep_inputs() -> (PfNetwork, CorridorTopology, Vec<Split>) {
    let net = PfNetwork::parse(DEFAULT_NETWORK).expect("bundled network parses");
    let topo = CorridorTopology::parse(DEFAULT_TOPOLOGY).expect("bundled topology parses");
    let splits = parse_splits(DEFAULT_SPLITS, &topo).expect("bundled splits parse");
    (net, topo, splits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_example_reproduces() {
        let out = run_perfect_reduction().unwrap();
        assert!(out.published_checks.iter().all(Check::passed));
        assert!(out.margin.alarm);
        // The published operating point sits on the nose of its own load mix.
        assert!(
            (out.full.lambda_max - 1.0).abs() < 1e-3,
            "{}",
            out.full.lambda_max
        );
    }

    #[test]
    fn symmetric_variant_splits_evenly() {
        let mut case = FourBusCase::published();
        case.y_g2l2 = case.y_g1l1;
        let out = perfect_reduction(&case).unwrap();
        assert!((out.reduced.weights.gen("g1") - Phasor::new(0.5, 0.0)).norm() < 1e-12);
        assert!((out.reduced.weights.load("l2") - Phasor::new(0.5, 0.0)).norm() < 1e-12);
        let idx = out.margin.apparent_power_index_pct.unwrap();
        assert!((idx - 100.0).abs() < 1e-10);
    }

    #[test]
    fn default_inputs_parse() {
        let (net, topo, splits) = default_sweep_inputs();
        assert_eq!(net.buses().len(), 4);
        assert_eq!(topo.load_buses().len(), 2);
        assert_eq!(splits.len(), 13);
        assert_eq!(splits[0], Split(vec![1.0, 0.0]));
    }

    #[test]
    fn splits_follow_header_order() {
        let topo = FourBusCase::topology();
        let s = parse_splits("l2,l1\n0.7,0.3\n", &topo).unwrap();
        assert_eq!(s, vec![Split(vec![0.3, 0.7])]);
        assert!(parse_splits("l1\n1.0\n", &topo).is_err());
        assert!(parse_splits("l1,l2\n1.0\n", &topo).is_err());
        assert!(parse_splits("l1,l2\n1.0,x\n", &topo).is_err());
    }

    #[test]
    fn bad_split_rejected() {
        let (net, topo, _) = default_sweep_inputs();
        let err = error_sweep(&net, &topo, &[Split(vec![-1.0, 2.0])]).unwrap_err();
        assert!(matches!(err, HarnessError::BadSplit { index: 0, .. }));
        let err = error_sweep(&net, &topo, &[Split(vec![0.0, 0.0])]).unwrap_err();
        assert!(matches!(err, HarnessError::BadSplit { .. }));
    }

    #[test]
    fn balanced_split_has_no_error() {
        let (net, topo, _) = default_sweep_inputs();
        let rows = error_sweep(&net, &topo, &[Split(vec![0.25, 0.75])]).unwrap();
        let r = &rows[0];
        assert!(r.error_pct.abs() <= 0.5, "{r:?}");
        assert!(r.dv_mag.abs() < 1e-3 && r.d_angle_deg.abs() < 0.1, "{r:?}");
        assert!((r.p_max_total - 19.9).abs() < 0.1);
    }
}
