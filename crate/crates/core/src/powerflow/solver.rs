use nalgebra::{DMatrix, DVector};

use super::{BusKind, PfError, PfNetwork, PfSolution};
use crate::phasor::Phasor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Largest allowed complex power mismatch at convergence, per unit.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-8,
            max_iterations: 50,
        }
    }
}

// Mismatch beyond this is treated as divergence.
const DIVERGED: f64 = 1e12;

struct Layout {
    /// Buses whose angle is unknown (all but the slack).
    angle_vars: Vec<usize>,
    /// Buses whose magnitude is unknown (PQ).
    mag_vars: Vec<usize>,
    /// Buses with a real-power equation.
    p_rows: Vec<usize>,
    distributed: bool,
}

impl Layout {
    fn new(net: &PfNetwork) -> Self {
        let slack = net.slack_index();
        let distributed = net.has_distributed_slack();
        let angle_vars: Vec<usize> = (0..net.buses().len()).filter(|&i| i != slack).collect();
        let mag_vars: Vec<usize> = net
            .buses()
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == BusKind::Pq)
            .map(|(i, _)| i)
            .collect();
        let p_rows = if distributed {
            (0..net.buses().len()).collect()
        } else {
            angle_vars.clone()
        };
        Layout {
            angle_vars,
            mag_vars,
            p_rows,
            distributed,
        }
    }

    fn size(&self) -> usize {
        self.angle_vars.len() + self.mag_vars.len() + usize::from(self.distributed)
    }
}

/// Solves the AC power flow by Newton-Raphson in polar coordinates.
///
/// `initial_guess` is a voltage per bus in network order; slack and PV
/// magnitudes (and the slack angle) are reset to their set points. Without a
/// guess the solve starts flat at `v_set` / 1 pu and zero angle.
pub fn solve_power_flow(
    net: &PfNetwork,
    initial_guess: Option<&[Phasor]>,
    opts: &SolverOptions,
) -> Result<PfSolution, PfError> {
    let n = net.buses().len();
    let ybus = net.admittance_matrix();
    let layout = Layout::new(net);

    let mut mag = vec![1.0; n];
    let mut ang = vec![0.0; n];
    if let Some(guess) = initial_guess.filter(|g| g.len() == n) {
        for (i, v) in guess.iter().enumerate() {
            mag[i] = v.norm();
            ang[i] = v.arg();
        }
    }
    for (i, b) in net.buses().iter().enumerate() {
        match b.kind {
            BusKind::Slack => {
                mag[i] = b.v_set;
                ang[i] = b.angle_deg.to_radians();
            }
            BusKind::Pv => mag[i] = b.v_set,
            BusKind::Pq => {}
        }
    }
    let mut share = 0.0;

    let mut iterations = 0;
    loop {
        let v: Vec<Phasor> = (0..n).map(|i| Phasor::from_polar(mag[i], ang[i])).collect();
        let vv = DVector::from_vec(v.clone());
        let ibus = &ybus * &vv;
        let s_calc: Vec<Phasor> = (0..n).map(|i| v[i] * ibus[i].conj()).collect();

        let mismatch = mismatch_vector(net, &layout, &s_calc, share);
        let max_mismatch = mismatch.amax();
        if !max_mismatch.is_finite() || max_mismatch > DIVERGED {
            return Err(PfError::NonConvergence {
                iterations,
                mismatch: max_mismatch,
            });
        }
        if max_mismatch <= opts.tolerance {
            return Ok(build_solution(net, v, s_calc, iterations, max_mismatch));
        }
        if iterations >= opts.max_iterations {
            return Err(PfError::NonConvergence {
                iterations,
                mismatch: max_mismatch,
            });
        }
        iterations += 1;

        let jac = jacobian(net, &layout, &ybus, &v, &ibus);
        let step = jac
            .lu()
            .solve(&(-mismatch))
            .filter(|dx| dx.iter().all(|x| x.is_finite()))
            .ok_or(PfError::SingularJacobian(iterations))?;

        let na = layout.angle_vars.len();
        for (k, &i) in layout.angle_vars.iter().enumerate() {
            ang[i] += step[k];
        }
        for (k, &i) in layout.mag_vars.iter().enumerate() {
            mag[i] += step[na + k];
        }
        if layout.distributed {
            share += step[layout.size() - 1];
        }
    }
}

fn mismatch_vector(
    net: &PfNetwork,
    layout: &Layout,
    s_calc: &[Phasor],
    share: f64,
) -> DVector<f64> {
    let mut f = DVector::zeros(layout.p_rows.len() + layout.mag_vars.len());
    for (row, &i) in layout.p_rows.iter().enumerate() {
        let b = &net.buses()[i];
        let p_spec = match b.kind {
            BusKind::Pq => -b.p,
            BusKind::Pv => b.p + b.participation * share,
            BusKind::Slack => b.participation * share,
        };
        f[row] = s_calc[i].re - p_spec;
    }
    let off = layout.p_rows.len();
    for (row, &i) in layout.mag_vars.iter().enumerate() {
        let b = &net.buses()[i];
        f[off + row] = s_calc[i].im + b.q;
    }
    f
}

fn jacobian(
    net: &PfNetwork,
    layout: &Layout,
    ybus: &DMatrix<Phasor>,
    v: &[Phasor],
    ibus: &DVector<Phasor>,
) -> DMatrix<f64> {
    let j = Phasor::new(0.0, 1.0);
    let vnorm: Vec<Phasor> = v.iter().map(|x| x / x.norm()).collect();

    // dS_i/dtheta_k and dS_i/d|V_k| for the full bus set.
    let ds_dang = |i: usize, k: usize| -> Phasor {
        let mut t = -ybus[(i, k)] * v[k];
        if i == k {
            t += ibus[i];
        }
        j * v[i] * t.conj()
    };
    let ds_dmag = |i: usize, k: usize| -> Phasor {
        let mut t = v[i] * (ybus[(i, k)] * vnorm[k]).conj();
        if i == k {
            t += ibus[i].conj() * vnorm[i];
        }
        t
    };

    let size = layout.size();
    let mut jac = DMatrix::zeros(size, size);
    let na = layout.angle_vars.len();
    let rows: Vec<(usize, bool)> = layout
        .p_rows
        .iter()
        .map(|&i| (i, true))
        .chain(layout.mag_vars.iter().map(|&i| (i, false)))
        .collect();
    for (r, &(i, is_p)) in rows.iter().enumerate() {
        let pick = |s: Phasor| if is_p { s.re } else { s.im };
        for (c, &k) in layout.angle_vars.iter().enumerate() {
            jac[(r, c)] = pick(ds_dang(i, k));
        }
        for (c, &k) in layout.mag_vars.iter().enumerate() {
            jac[(r, na + c)] = pick(ds_dmag(i, k));
        }
        if layout.distributed && is_p {
            jac[(r, size - 1)] = -net.buses()[i].participation;
        }
    }
    debug_assert_eq!(rows.len(), size);
    jac
}

fn build_solution(
    net: &PfNetwork,
    v: Vec<Phasor>,
    s_calc: Vec<Phasor>,
    iterations: usize,
    max_mismatch: f64,
) -> PfSolution {
    let bus_voltages = net
        .buses()
        .iter()
        .zip(&v)
        .map(|(b, &x)| (b.id.clone(), x))
        .collect();
    let injections = net
        .buses()
        .iter()
        .zip(&s_calc)
        .map(|(b, &s)| (b.id.clone(), s))
        .collect();
    let line_currents = net
        .lines()
        .iter()
        .map(|l| {
            let a = v[net.bus_index(&l.from).unwrap()];
            let b = v[net.bus_index(&l.to).unwrap()];
            (l.id.clone(), l.y * (a - b))
        })
        .collect();
    PfSolution {
        bus_voltages,
        line_currents,
        injections,
        converged: true,
        iterations,
        max_mismatch,
    }
}
