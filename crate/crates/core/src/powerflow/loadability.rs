use std::collections::BTreeMap;

use thiserror::Error;

use super::{solve_power_flow, BusKind, PfError, PfNetwork, PfSolution, SolverOptions};
use crate::network::BusId;
use crate::phasor::Phasor;

/// Relative resolution on the loading factor guaranteed by [`max_loadability`].
pub const LAMBDA_RESOLUTION: f64 = 1e-5;

// The search stops well inside the advertised resolution.
const SEARCH_TOLERANCE: f64 = 1e-7;
const MAX_LAMBDA: f64 = 1e9;

#[derive(Debug, Error, PartialEq)]
pub enum LoadabilityError {
    #[error("base case does not solve: {0}")]
    BaseCaseInfeasible(PfError),
    #[error("invalid load direction: {0}")]
    InvalidDirection(String),
    #[error("no loadability limit found up to lambda = {0:e}")]
    Unbounded(f64),
    #[error("invalid two-bus input: {0}")]
    InvalidInput(&'static str),
}

/// Per-bus participation of PQ loads in a loading ray.
///
/// At loading factor `lambda` a PQ bus with base consumption `p + jq` and
/// factor `d` consumes `lambda * d * p`. Buses without an explicit factor
/// use 1, so the empty direction scales every load proportionally.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoadDirection {
    factors: BTreeMap<BusId, f64>,
}

impl LoadDirection {
    pub fn proportional() -> Self {
        Self::default()
    }

    pub fn with(mut self, bus: &str, factor: f64) -> Self {
        self.factors.insert(BusId::new(bus), factor);
        self
    }

    pub fn factor(&self, bus: &BusId) -> f64 {
        self.factors.get(bus).copied().unwrap_or(1.0)
    }

    /// The network with every PQ load moved to loading factor `lambda`.
    ///
    /// With `pf_constant` the reactive consumption scales with the real
    /// consumption, preserving each load's power factor; otherwise it stays
    /// at its base value.
    pub fn apply(&self, base: &PfNetwork, lambda: f64, pf_constant: bool) -> PfNetwork {
        let mut net = base.clone();
        for b in base.buses().iter().filter(|b| b.kind == BusKind::Pq) {
            let scale = lambda * self.factor(&b.id);
            let q = if pf_constant { scale * b.q } else { b.q };
            net.set_load(&b.id, scale * b.p, q)
                .expect("scaled load stays nonnegative");
        }
        net
    }

    fn validate(&self, base: &PfNetwork) -> Result<(), LoadabilityError> {
        for (bus, &f) in &self.factors {
            if !(f.is_finite() && f >= 0.0) {
                return Err(LoadabilityError::InvalidDirection(format!(
                    "factor for `{bus}` must be finite and nonnegative"
                )));
            }
            match base.bus(bus) {
                Some(b) if b.kind == BusKind::Pq => {}
                _ => {
                    return Err(LoadabilityError::InvalidDirection(format!(
                        "`{bus}` is not a PQ bus"
                    )))
                }
            }
        }
        let growth: f64 = base
            .buses()
            .iter()
            .filter(|b| b.kind == BusKind::Pq)
            .map(|b| self.factor(&b.id) * Phasor::new(b.p, b.q).norm())
            .sum();
        if growth <= 0.0 {
            return Err(LoadabilityError::InvalidDirection(
                "direction does not increase any load".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadabilityResult {
    pub lambda_max: f64,
    pub total_load_p_max: f64,
    /// Total consumed complex power at `lambda_max` (positive Q is inductive).
    pub total_load_s_max: Phasor,
    /// Converged state at the last feasible loading.
    pub critical_solution: PfSolution,
    /// The network loaded to `lambda_max`.
    pub critical_network: PfNetwork,
}

/// Largest loading factor along `direction` for which the power flow still
/// solves, found by bracketing and bisection with warm-started Newton solves.
pub fn max_loadability(
    base: &PfNetwork,
    direction: &LoadDirection,
    pf_constant: bool,
) -> Result<LoadabilityResult, LoadabilityError> {
    direction.validate(base)?;
    let opts = SolverOptions::default();

    let at = |lambda: f64, warm: &PfSolution| -> Option<(PfNetwork, PfSolution)> {
        let net = direction.apply(base, lambda, pf_constant);
        let guess = warm.voltages_in_order(&net);
        solve_power_flow(&net, Some(&guess), &opts)
            .or_else(|_| solve_power_flow(&net, None, &opts))
            .ok()
            .map(|sol| (net, sol))
    };

    let net0 = direction.apply(base, 0.0, pf_constant);
    let sol0 =
        solve_power_flow(&net0, None, &opts).map_err(LoadabilityError::BaseCaseInfeasible)?;

    let mut lo = 0.0;
    let mut best = (net0, sol0);
    let mut step = 1.0;
    let mut hi: Option<f64> = None;

    loop {
        let trial = match hi {
            None => lo + step,
            Some(h) => {
                if h - lo <= SEARCH_TOLERANCE * lo.max(f64::MIN_POSITIVE) {
                    break;
                }
                0.5 * (lo + h)
            }
        };
        if trial > MAX_LAMBDA {
            return Err(LoadabilityError::Unbounded(MAX_LAMBDA));
        }
        match at(trial, &best.1) {
            Some(found) => {
                lo = trial;
                best = found;
                if hi.is_none() {
                    step *= 2.0;
                }
            }
            None => hi = Some(trial),
        }
    }

    let (critical_network, critical_solution) = best;
    let total = critical_network.total_load();
    log::debug!("max loadability lambda = {lo:.9}, total load = {total}");
    Ok(LoadabilityResult {
        lambda_max: lo,
        total_load_p_max: total.re,
        total_load_s_max: total,
        critical_solution,
        critical_network,
    })
}

/// Whether a source `e` behind series admittance `y` can deliver the
/// consumed complex power `s` to a constant-power load.
///
/// The two-bus power flow reduces to
/// `|V|^4 + (2(PR + QX) - |E|^2)|V|^2 + |Z|^2 |S|^2 = 0`; the load is
/// feasible when this has a real nonnegative root in `|V|^2`.
pub fn two_bus_feasible(e: Phasor, y: Phasor, s: Phasor) -> bool {
    let z = y.inv();
    let e2 = e.norm_sqr();
    let b = 2.0 * (s.re * z.re + s.im * z.im) - e2;
    let c = z.norm_sqr() * s.norm_sqr();
    let disc = b * b - 4.0 * c;
    disc >= 0.0 && (-b + disc.sqrt()) >= 0.0
}

/// Maximum consumed complex power deliverable from `e` through `1/y` into a
/// load with power-factor angle `pf_angle` (radians, positive lagging).
///
/// Bisects on the apparent power using [`two_bus_feasible`].
pub fn two_bus_max_power(e: Phasor, y: Phasor, pf_angle: f64) -> Result<Phasor, LoadabilityError> {
    if !(y.norm() > 0.0) || !crate::phasor::is_finite(y) {
        return Err(LoadabilityError::InvalidInput("|Y| must be positive"));
    }
    if !(e.norm() > 0.0) || !crate::phasor::is_finite(e) {
        return Err(LoadabilityError::InvalidInput("|E| must be positive"));
    }
    if !pf_angle.is_finite() {
        return Err(LoadabilityError::InvalidInput(
            "power factor angle must be finite",
        ));
    }
    let unit = Phasor::from_polar(1.0, pf_angle);
    let feasible = |m: f64| two_bus_feasible(e, y, unit * m);

    let mut lo = 0.0;
    let mut hi = e.norm_sqr() * y.norm();
    let mut doublings = 0;
    while feasible(hi) {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(LoadabilityError::Unbounded(hi));
        }
    }
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(unit * lo)
}
