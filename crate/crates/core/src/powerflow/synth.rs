use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use super::{solve_power_flow, LoadDirection, PfError, PfNetwork, PfSolution, SolverOptions};
use crate::network::{CorridorTopology, SynchroFrame};
use crate::phasor::Phasor;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("topology does not match network: {0}")]
    TopologyMismatch(String),
    #[error("noise standard deviation must be finite and nonnegative")]
    BadNoise,
}

/// Settings for a synthetic synchrophasor stream.
#[derive(Clone, Debug)]
pub struct FrameSource {
    pub direction: LoadDirection,
    pub pf_constant: bool,
    pub start_us: i64,
    pub interval_us: i64,
    /// Standard deviation of additive Gaussian noise on each rectangular
    /// component of every phasor, per unit.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for FrameSource {
    fn default() -> Self {
        FrameSource {
            direction: LoadDirection::proportional(),
            pf_constant: true,
            start_us: 0,
            interval_us: 33_333,
            noise_std: 0.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedFrames {
    pub frames: Vec<SynchroFrame>,
    pub solutions: Vec<PfSolution>,
    /// Trajectory index and error where the stream stopped early.
    pub stopped: Option<(usize, PfError)>,
}

/// Builds the frame a perfect set of two-ended synchrophasors would report
/// for `sol`, with corridor currents oriented generator side to load side.
pub fn frame_from_solution(
    sol: &PfSolution,
    net: &PfNetwork,
    topo: &CorridorTopology,
    timestamp_us: i64,
) -> Result<SynchroFrame, SynthError> {
    let mut frame = SynchroFrame::new(timestamp_us);
    for bus in topo.boundary_buses() {
        let v = sol
            .bus_voltages
            .get(bus)
            .ok_or_else(|| SynthError::TopologyMismatch(format!("no bus `{bus}`")))?;
        frame.bus_voltages.insert(bus.clone(), *v);
    }
    for cl in topo.corridor_lines() {
        let line = net
            .line(&cl.id)
            .ok_or_else(|| SynthError::TopologyMismatch(format!("no line `{}`", cl.id)))?;
        let i = sol.line_currents[&cl.id];
        let oriented = if line.from == cl.gen_bus && line.to == cl.load_bus {
            i
        } else if line.from == cl.load_bus && line.to == cl.gen_bus {
            -i
        } else {
            return Err(SynthError::TopologyMismatch(format!(
                "line `{}` endpoints differ between network and topology",
                cl.id
            )));
        };
        frame.line_currents.insert(cl.id.clone(), oriented);
    }
    Ok(frame)
}

/// Solves the network at each loading factor of `trajectory` and emits one
/// frame per point. The stream stops at the first point that does not solve.
pub fn generate_frames(
    net: &PfNetwork,
    topo: &CorridorTopology,
    trajectory: &[f64],
    source: &FrameSource,
) -> Result<GeneratedFrames, SynthError> {
    if !(source.noise_std.is_finite() && source.noise_std >= 0.0) {
        return Err(SynthError::BadNoise);
    }
    let noise = Normal::new(0.0, source.noise_std).map_err(|_| SynthError::BadNoise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(source.seed);
    let opts = SolverOptions::default();

    let mut out = GeneratedFrames {
        frames: Vec::with_capacity(trajectory.len()),
        solutions: Vec::with_capacity(trajectory.len()),
        stopped: None,
    };
    let mut warm: Option<Vec<Phasor>> = None;
    for (k, &lambda) in trajectory.iter().enumerate() {
        let loaded = source.direction.apply(net, lambda, source.pf_constant);
        let solved = solve_power_flow(&loaded, warm.as_deref(), &opts).or_else(|e| {
            if warm.is_some() {
                solve_power_flow(&loaded, None, &opts)
            } else {
                Err(e)
            }
        });
        let sol = match solved {
            Ok(sol) => sol,
            Err(e) => {
                log::warn!("trajectory point {k} (lambda = {lambda}) did not solve: {e}");
                out.stopped = Some((k, e));
                break;
            }
        };
        let ts = source.start_us + k as i64 * source.interval_us;
        let mut frame = frame_from_solution(&sol, &loaded, topo, ts)?;
        if source.noise_std > 0.0 {
            for v in frame
                .bus_voltages
                .values_mut()
                .chain(frame.line_currents.values_mut())
            {
                *v += Phasor::new(noise.sample(&mut rng), noise.sample(&mut rng));
            }
        }
        warm = Some(sol.voltages_in_order(&loaded));
        out.frames.push(frame);
        out.solutions.push(sol);
    }
    Ok(out)
}
