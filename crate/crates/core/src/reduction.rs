//! Reduction of a multi-line corridor to one equivalent line.
//!
//! Contracting all generator boundary buses into one bus `g` and all load
//! boundary buses into one bus `l` puts every corridor line in parallel, so
//! the equivalent admittance is the plain sum `Y_gl = sum Y_ij`. Requiring
//! the current entering the reduced line to equal the total corridor current
//!
//! ```text
//! Y_gl (V_g - V_l) = sum_ij Y_ij (V_gi - V_lj)
//! ```
//!
//! and splitting generator and load terms gives `V_g = sum_i w_gi V_gi`
//! and `V_l = sum_j w_lj V_lj`, where a bus weight is the admittance of the
//! corridor lines incident on that bus divided by `Y_gl`. Weights are
//! complex and each side sums to one. `V_gl = V_g - V_l` is the area
//! voltage across the corridor.
//!
//! Intra-area ties (generator to generator, load to load) never enter any
//! of these sums.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::network::{BusId, CorridorTopology, LineId, LineMeasurement, ValidatedFrame};
use crate::phasor::Phasor;
use crate::powerflow::PfLine;

/// Default smallest usable voltage difference across a line, per unit.
pub const EPSILON_DV: f64 = 1e-9;

/// Aggregate corridor currents below this are treated as zero.
pub const EPSILON_CURRENT: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ReductionError {
    #[error("voltage difference across line {line} is below {epsilon:e} pu")]
    DegenerateVoltageDifference { line: String, epsilon: f64 },
    #[error("no admittance for corridor line `{0}`")]
    MissingAdmittance(LineId),
    #[error("corridor admittance is zero")]
    ZeroCorridorAdmittance,
    #[error("admittance of line `{0}` is zero or non-finite")]
    BadAdmittance(LineId),
    #[error("no corridor line in service")]
    NoLinesInService,
}

/// `Y = I / (V_gen - V_load)` for one line.
pub fn line_admittance(
    v_gen_side: Phasor,
    v_load_side: Phasor,
    current: Phasor,
    epsilon_dv: f64,
) -> Result<Phasor, ReductionError> {
    let dv = v_gen_side - v_load_side;
    if !(dv.norm() > epsilon_dv) {
        return Err(ReductionError::DegenerateVoltageDifference {
            line: String::new(),
            epsilon: epsilon_dv,
        });
    }
    Ok(current / dv)
}

/// Admittance per corridor line, per unit.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LineAdmittanceSet(pub BTreeMap<LineId, Phasor>);

impl LineAdmittanceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, line: &str, y: Phasor) -> Self {
        self.0.insert(LineId::new(line), y);
        self
    }

    pub fn get(&self, line: &LineId) -> Option<Phasor> {
        self.0.get(line).copied()
    }

    /// Known line parameters, e.g. the `lines` of a network file.
    pub fn from_lines<'a>(lines: impl IntoIterator<Item = &'a PfLine>) -> Self {
        LineAdmittanceSet(lines.into_iter().map(|l| (l.id.clone(), l.y)).collect())
    }

    /// Every admittance multiplied by `k`.
    pub fn scaled(&self, k: Phasor) -> Self {
        LineAdmittanceSet(self.0.iter().map(|(id, y)| (id.clone(), y * k)).collect())
    }

    /// Estimates each in-service line's admittance from its two-ended
    /// measurements.
    pub fn estimate(frame: &ValidatedFrame, epsilon_dv: f64) -> Result<Self, ReductionError> {
        frame
            .lines()
            .iter()
            .map(|m| {
                line_admittance(m.v_gen, m.v_load, m.current, epsilon_dv)
                    .map(|y| (m.line.clone(), y))
                    .map_err(|e| match e {
                        ReductionError::DegenerateVoltageDifference { epsilon, .. } => {
                            ReductionError::DegenerateVoltageDifference {
                                line: m.line.0.clone(),
                                epsilon,
                            }
                        }
                        other => other,
                    })
            })
            .collect::<Result<BTreeMap<_, _>, _>>()
            .map(LineAdmittanceSet)
    }
}

/// Complex bus weights on each side of the corridor.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSet {
    pub gen_weights: BTreeMap<BusId, Phasor>,
    pub load_weights: BTreeMap<BusId, Phasor>,
}

impl WeightSet {
    pub fn gen(&self, bus: &str) -> Phasor {
        self.gen_weights[&BusId::new(bus)]
    }

    pub fn load(&self, bus: &str) -> Phasor {
        self.load_weights[&BusId::new(bus)]
    }
}

/// A corridor line reduced to what the sums need.
struct Branch<'a> {
    gen_bus: &'a BusId,
    load_bus: &'a BusId,
    y: Phasor,
}

fn branches<'a>(
    lines: &LineAdmittanceSet,
    in_service: impl Iterator<Item = (&'a LineId, &'a BusId, &'a BusId)>,
) -> Result<Vec<Branch<'a>>, ReductionError> {
    let out = in_service
        .map(|(id, gen_bus, load_bus)| {
            let y = lines
                .get(id)
                .ok_or_else(|| ReductionError::MissingAdmittance(id.clone()))?;
            if !(y.norm() > 0.0) || !crate::phasor::is_finite(y) {
                return Err(ReductionError::BadAdmittance(id.clone()));
            }
            Ok(Branch {
                gen_bus,
                load_bus,
                y,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if out.is_empty() {
        return Err(ReductionError::NoLinesInService);
    }
    Ok(out)
}

fn sum_admittance(branches: &[Branch<'_>]) -> Phasor {
    branches.iter().map(|b| b.y).sum()
}

fn weights(topo: &CorridorTopology, branches: &[Branch<'_>]) -> Result<WeightSet, ReductionError> {
    let y_gl = sum_admittance(branches);
    if !(y_gl.norm() > 0.0) {
        return Err(ReductionError::ZeroCorridorAdmittance);
    }
    let side = |buses: &[BusId], gen_side: bool| {
        buses
            .iter()
            .map(|bus| {
                let incident: Phasor = branches
                    .iter()
                    .filter(|b| {
                        if gen_side {
                            b.gen_bus == bus
                        } else {
                            b.load_bus == bus
                        }
                    })
                    .map(|b| b.y)
                    .sum();
                (bus.clone(), incident / y_gl)
            })
            .collect::<BTreeMap<_, _>>()
    };
    Ok(WeightSet {
        gen_weights: side(topo.gen_buses(), true),
        load_weights: side(topo.load_buses(), false),
    })
}

fn all_lines(topo: &CorridorTopology) -> impl Iterator<Item = (&LineId, &BusId, &BusId)> {
    topo.corridor_lines()
        .iter()
        .map(|l| (&l.id, &l.gen_bus, &l.load_bus))
}

/// `Y_gl`: sum of the corridor line admittances.
pub fn corridor_admittance(
    lines: &LineAdmittanceSet,
    topo: &CorridorTopology,
) -> Result<Phasor, ReductionError> {
    Ok(sum_admittance(&branches(lines, all_lines(topo))?))
}

/// Bus weights for the whole corridor.
pub fn compute_weights(
    lines: &LineAdmittanceSet,
    topo: &CorridorTopology,
) -> Result<WeightSet, ReductionError> {
    weights(topo, &branches(lines, all_lines(topo))?)
}

/// Where line admittances come from when reducing a frame.
#[derive(Clone, Debug, PartialEq)]
pub enum AdmittanceSource {
    /// `Y = I / dV` from the frame itself.
    EstimateFromFrame { epsilon_dv: f64 },
    /// Fixed, known line parameters.
    Static(LineAdmittanceSet),
}

impl AdmittanceSource {
    pub fn estimate() -> Self {
        AdmittanceSource::EstimateFromFrame {
            epsilon_dv: EPSILON_DV,
        }
    }
}

/// Thevenin quantities seen from the reduced load bus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thevenin {
    /// `(V_g - V_l) / I_gl`
    pub z_gl: Phasor,
    /// `V_l / I_gl`
    pub z_l: Phasor,
}

/// Single equivalent line for one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedSystem {
    pub timestamp_us: i64,
    pub v_g: Phasor,
    pub v_l: Phasor,
    pub v_gl: Phasor,
    pub i_gl: Phasor,
    pub y_gl: Phasor,
    /// `None` when the corridor carries no current.
    pub thevenin: Option<Thevenin>,
    pub weights: WeightSet,
    pub admittances: LineAdmittanceSet,
}

/// Reduces one validated frame to its equivalent line.
///
/// Lines flagged out of service in the frame are left out of `Y_gl`, the
/// weights and the current sum.
pub fn reduce_frame(
    frame: &ValidatedFrame,
    topo: &CorridorTopology,
    source: &AdmittanceSource,
) -> Result<ReducedSystem, ReductionError> {
    let admittances = match source {
        AdmittanceSource::EstimateFromFrame { epsilon_dv } => {
            LineAdmittanceSet::estimate(frame, *epsilon_dv)?
        }
        AdmittanceSource::Static(set) => set.clone(),
    };
    let in_service = frame
        .lines()
        .iter()
        .map(|m: &LineMeasurement| (&m.line, &m.gen_bus, &m.load_bus));
    let br = branches(&admittances, in_service)?;
    let y_gl = sum_admittance(&br);
    let weights = weights(topo, &br)?;

    let v_g: Phasor = frame
        .gen_voltages()
        .iter()
        .map(|(bus, v)| weights.gen_weights[bus] * v)
        .sum();
    let v_l: Phasor = frame
        .load_voltages()
        .iter()
        .map(|(bus, v)| weights.load_weights[bus] * v)
        .sum();
    let v_gl = v_g - v_l;
    let i_gl: Phasor = frame.lines().iter().map(|m| m.current).sum();

    let thevenin = (i_gl.norm() >= EPSILON_CURRENT).then(|| Thevenin {
        z_gl: v_gl / i_gl,
        z_l: v_l / i_gl,
    });

    let used = frame
        .lines()
        .iter()
        .map(|m| (m.line.clone(), admittances.0[&m.line]))
        .collect();

    Ok(ReducedSystem {
        timestamp_us: frame.timestamp_us(),
        v_g,
        v_l,
        v_gl,
        i_gl,
        y_gl,
        thevenin,
        weights,
        admittances: LineAdmittanceSet(used),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_topology, validate_frame, LineSpec, SynchroFrame};
    use crate::phasor::relative_error;

    fn c(re: f64, im: f64) -> Phasor {
        Phasor::new(re, im)
    }

    fn fig5() -> CorridorTopology {
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
        .unwrap()
    }

    fn table1_lines() -> LineAdmittanceSet {
        LineAdmittanceSet::new()
            .with("g1l1", c(3.8, -19.1))
            .with("g2l2", c(11.4, -57.2))
    }

    #[test]
    fn unit_difference_gives_current() {
        let y = line_admittance(c(1.0, 0.0), c(0.0, 0.0), c(2.0, -4.0), EPSILON_DV).unwrap();
        assert_eq!(y, c(2.0, -4.0));
    }

    #[test]
    fn forward_multiplication_recovers_admittance() {
        let (vg, vl, y_true) = (c(1.0, 0.0), c(0.5, -0.2), c(3.8, -19.1));
        let i = y_true * (vg - vl);
        assert!(relative_error(i, c(5.72, -8.79)) < 1e-12);
        let y = line_admittance(vg, vl, i, EPSILON_DV).unwrap();
        assert!(relative_error(y, y_true) < 1e-12);
    }

    #[test]
    fn equal_ends_are_degenerate() {
        let err = line_admittance(c(1.0, 0.0), c(1.0, 0.0), c(3.0, 1.0), EPSILON_DV).unwrap_err();
        assert!(matches!(
            err,
            ReductionError::DegenerateVoltageDifference { .. }
        ));
    }

    #[test]
    fn table1_corridor_admittance() {
        let y = corridor_admittance(&table1_lines(), &fig5()).unwrap();
        assert!(relative_error(y, c(15.2, -76.3)) < 1e-12);
        assert!((y.norm() - 77.8).abs() < 0.05);
    }

    #[test]
    fn single_and_parallel_sums() {
        let single = build_topology(
            vec![BusId::new("g")],
            vec![BusId::new("l")],
            vec![LineSpec::new("gl", "g", "l")],
            vec![],
        )
        .unwrap();
        let set = LineAdmittanceSet::new().with("gl", c(1.5, -7.0));
        assert_eq!(corridor_admittance(&set, &single).unwrap(), c(1.5, -7.0));
        let w = compute_weights(&set, &single).unwrap();
        assert!(relative_error(w.gen("g"), c(1.0, 0.0)) < 1e-15);
        assert!(relative_error(w.load("l"), c(1.0, 0.0)) < 1e-15);

        let four = build_topology(
            vec![BusId::new("g1"), BusId::new("g2")],
            vec![BusId::new("l1"), BusId::new("l2")],
            vec![
                LineSpec::new("a", "g1", "l1"),
                LineSpec::new("b", "g1", "l2"),
                LineSpec::new("c", "g2", "l1"),
                LineSpec::new("d", "g2", "l2"),
            ],
            vec![],
        )
        .unwrap();
        let y = c(2.0, -9.0);
        let set = ["a", "b", "c", "d"]
            .iter()
            .fold(LineAdmittanceSet::new(), |s, id| s.with(id, y));
        assert!(relative_error(corridor_admittance(&set, &four).unwrap(), 4.0 * y) < 1e-15);
    }

    #[test]
    fn table1_weights_are_quarter_and_three_quarters() {
        let w = compute_weights(&table1_lines(), &fig5()).unwrap();
        assert!((w.gen("g1") - c(0.25, 0.0)).norm() < 0.01);
        assert!((w.gen("g2") - c(0.75, 0.0)).norm() < 0.01);
        // Load side uses column sums, so it mirrors the generator side here.
        assert!(relative_error(w.load("l1"), w.gen("g1")) < 1e-12);
        assert!(w.gen("g1").im.abs() < 1e-3);
    }

    #[test]
    fn identical_lines_split_evenly() {
        let set = LineAdmittanceSet::new()
            .with("g1l1", c(2.0, -10.0))
            .with("g2l2", c(2.0, -10.0));
        let w = compute_weights(&set, &fig5()).unwrap();
        for bus in ["g1", "g2"] {
            assert!(relative_error(w.gen(bus), c(0.5, 0.0)) < 1e-15);
        }
        for bus in ["l1", "l2"] {
            assert!(relative_error(w.load(bus), c(0.5, 0.0)) < 1e-15);
        }
    }

    #[test]
    fn cancelling_admittances_are_rejected() {
        let set = LineAdmittanceSet::new()
            .with("g1l1", c(1.0, -5.0))
            .with("g2l2", c(-1.0, 5.0));
        assert_eq!(
            compute_weights(&set, &fig5()).unwrap_err(),
            ReductionError::ZeroCorridorAdmittance
        );
    }

    #[test]
    fn missing_admittance_reported() {
        let set = LineAdmittanceSet::new().with("g1l1", c(1.0, -5.0));
        assert_eq!(
            corridor_admittance(&set, &fig5()).unwrap_err(),
            ReductionError::MissingAdmittance(LineId::new("g2l2"))
        );
    }

    fn table1_frame() -> SynchroFrame {
        let (vg, vl) = (c(1.0, 0.0), c(0.5, -0.2));
        SynchroFrame::new(1_000_000)
            .with_voltage("g1", vg)
            .with_voltage("g2", vg)
            .with_voltage("l1", vl)
            .with_voltage("l2", vl)
            .with_current("g1l1", c(3.8, -19.1) * (vg - vl))
            .with_current("g2l2", c(11.4, -57.2) * (vg - vl))
    }

    #[test]
    fn table1_frame_reduction() {
        let topo = fig5();
        let vf = validate_frame(table1_frame(), &topo).unwrap();
        let rs = reduce_frame(&vf, &topo, &AdmittanceSource::estimate()).unwrap();
        assert!(relative_error(rs.v_g, c(1.0, 0.0)) < 1e-12);
        assert!(relative_error(rs.v_l, c(0.5, -0.2)) < 1e-12);
        assert!(relative_error(rs.v_gl, c(0.5, 0.2)) < 1e-12);
        assert_eq!(rs.v_gl, rs.v_g - rs.v_l);
        // Printed I_gl = 24.5 - j34.8 is rounded; ours is Y_gl * dV.
        assert!(relative_error(rs.i_gl, c(24.5, -34.8)) < 0.05);
        assert!(relative_error(rs.i_gl, rs.y_gl * rs.v_gl) < 1e-12);
        let th = rs.thevenin.unwrap();
        assert!(relative_error(th.z_gl * rs.i_gl, rs.v_gl) < 1e-12);
        assert!(relative_error(th.z_l * rs.i_gl, rs.v_l) < 1e-12);

        let static_rs =
            reduce_frame(&vf, &topo, &AdmittanceSource::Static(table1_lines())).unwrap();
        assert!(relative_error(static_rs.v_gl, rs.v_gl) < 1e-12);
    }

    #[test]
    fn out_of_service_line_drops_out() {
        let topo = fig5();
        let mut f = table1_frame();
        f.line_currents.remove(&LineId::new("g2l2"));
        f.out_of_service.insert(LineId::new("g2l2"));
        let vf = validate_frame(f, &topo).unwrap();
        let rs = reduce_frame(&vf, &topo, &AdmittanceSource::estimate()).unwrap();
        assert!(relative_error(rs.y_gl, c(3.8, -19.1)) < 1e-12);
        assert!(relative_error(rs.weights.gen("g1"), c(1.0, 0.0)) < 1e-12);
        assert_eq!(rs.weights.gen("g2"), c(0.0, 0.0));
        assert!(relative_error(rs.v_l, c(0.5, -0.2)) < 1e-12);
    }

    #[test]
    fn all_lines_out_is_an_error() {
        let topo = fig5();
        let mut f = table1_frame();
        f.line_currents.clear();
        f.out_of_service.insert(LineId::new("g1l1"));
        f.out_of_service.insert(LineId::new("g2l2"));
        let vf = validate_frame(f, &topo).unwrap();
        assert_eq!(
            reduce_frame(&vf, &topo, &AdmittanceSource::estimate()).unwrap_err(),
            ReductionError::NoLinesInService
        );
    }

    #[test]
    fn zero_current_keeps_voltages() {
        let topo = fig5();
        let mut f = table1_frame();
        for i in f.line_currents.values_mut() {
            *i = c(0.0, 0.0);
        }
        let vf = validate_frame(f, &topo).unwrap();
        let rs = reduce_frame(&vf, &topo, &AdmittanceSource::Static(table1_lines())).unwrap();
        assert!(rs.thevenin.is_none());
        assert!(relative_error(rs.v_gl, c(0.5, 0.2)) < 1e-12);
    }

    #[test]
    fn degenerate_line_named_in_error() {
        let topo = fig5();
        let f = table1_frame().with_voltage("l2", c(1.0, 0.0));
        let vf = validate_frame(f, &topo).unwrap();
        let err = reduce_frame(&vf, &topo, &AdmittanceSource::estimate()).unwrap_err();
        assert_eq!(
            err,
            ReductionError::DegenerateVoltageDifference {
                line: "g2l2".into(),
                epsilon: EPSILON_DV
            }
        );
    }
}
