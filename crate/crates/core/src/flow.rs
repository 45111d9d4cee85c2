//! Explicit time stepping of ∂_s u = −(H − 𝓗) v.

use crate::checkpoint::Checkpoint;
use crate::error::{GrwError, Result};
use crate::graph::{divergence_laplacian, GeometrySnapshot, GraphState, DEFAULT_EPS_SL};
use crate::mesh::BaseMesh;
use crate::par;
use crate::warp::{check_timelike_convergence, TimelikeMode, WarpingFunction, TIMELIKE_SEED};

#[derive(Debug, Clone, PartialEq)]
pub enum PrescribedKind {
    Constant(f64),
    /// Values read from a grid file.
    Grid,
    /// −m f′(c)/f(c), so that the slice u ≡ c is stationary.
    SliceMatching { c: f64 },
}

/// The prescribed mean curvature 𝓗 as a nodal field.
#[derive(Debug, Clone, PartialEq)]
pub struct PrescribedCurvature {
    pub kind: PrescribedKind,
    pub values: Vec<f64>,
}

impl PrescribedCurvature {
    pub fn constant(mesh: &BaseMesh, value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(GrwError::InvalidParameters("prescribed curvature must be finite".into()));
        }
        Ok(Self { kind: PrescribedKind::Constant(value), values: vec![value; mesh.len()] })
    }

    pub fn slice_matching(mesh: &BaseMesh, w: &WarpingFunction, c: f64) -> Self {
        let (f, f1, _) = w.eval(c);
        let value = -(mesh.m as f64) * f1 / f;
        Self { kind: PrescribedKind::SliceMatching { c }, values: vec![value; mesh.len()] }
    }

    pub fn grid(mesh: &BaseMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(GrwError::InvalidParameters(format!(
                "prescribed grid has {} values, mesh has {} nodes",
                values.len(),
                mesh.len()
            )));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(GrwError::InvalidParameters("prescribed grid has non-finite values".into()));
        }
        Ok(Self { kind: PrescribedKind::Grid, values })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// sup|𝓗| + sup |∂𝓗| with the discrete Euclidean gradient.
    pub fn c1_norm(&self, mesh: &BaseMesh) -> f64 {
        let sup = self.values.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let dsup = (0..mesh.len())
            .map(|k| {
                let d = mesh.jet_gradient(&self.values, k);
                (d[0] * d[0] + d[1] * d[1]).sqrt()
            })
            .fold(0.0f64, f64::max);
        sup + dsup
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    Rk4,
}

/// Which scalar equation drives u.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowSpeed {
    /// ∂_s u = −(H − 𝓗)v, the graphical equation.
    Graphical,
    /// ∂_s u = −(H − 𝓗)/v: the graph of the normal flow ∂_s F = −(H − 𝓗)μ.
    Normal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub integrator: Integrator,
    pub speed: FlowSpeed,
    pub cfl: f64,
    pub s_end: f64,
    pub eps_sl: f64,
    /// Emit a checkpoint every this many steps; 0 disables.
    pub checkpoint_every: u64,
    /// Require min(H(0) − 𝓗) ≥ δ before stepping.
    pub upper_barrier: Option<f64>,
    /// Require the timelike convergence condition in the given mode.
    pub timelike: Option<TimelikeMode>,
    /// t-range for the timelike check; defaults to [inf u₀ − 1, sup u₀].
    pub timelike_range: Option<(f64, f64)>,
    /// Require min 𝓗 ≥ δ.
    pub prescribed_min: Option<f64>,
    /// Stop cleanly after this many total steps, writing a checkpoint.
    pub stop_after_steps: Option<u64>,
}

pub const DEFAULT_UPPER_BARRIER: f64 = 1e-6;
pub const TIMELIKE_SAMPLES: usize = 4096;

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            integrator: Integrator::Euler,
            speed: FlowSpeed::Graphical,
            cfl: 0.2,
            s_end: 1.0,
            eps_sl: DEFAULT_EPS_SL,
            checkpoint_every: 0,
            upper_barrier: Some(DEFAULT_UPPER_BARRIER),
            timelike: None,
            timelike_range: None,
            prescribed_min: None,
            stop_after_steps: None,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GrwError::InvalidParameters(m));
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.s_end > 0.0 && self.s_end.is_finite()) {
            return bad(format!("s_end must be positive, got {}", self.s_end));
        }
        if !(self.eps_sl >= 0.0 && self.eps_sl < 1.0) {
            return bad(format!("eps_sl must lie in [0, 1), got {}", self.eps_sl));
        }
        for (name, d) in [("upper barrier", self.upper_barrier), ("prescribed minimum", self.prescribed_min)] {
            if let Some(d) = d {
                if !d.is_finite() {
                    return bad(format!("{name} delta must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// One monitor sample, a pure function of the state at time s.
///
/// `dt` is the stability step computed from this state (before clipping
/// to s_end). Curvature and v monitors range over interior nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRow {
    pub s: f64,
    pub u_sup: f64,
    pub u_inf: f64,
    pub v_sup: f64,
    pub sup_h_err: f64,
    pub min_h_err: f64,
    pub dt: f64,
    pub lambda_max: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowRecord {
    pub rows: Vec<MonitorRow>,
    pub events: Vec<String>,
    pub checkpoints: Vec<Checkpoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    /// Stopped by `stop_after_steps`.
    Interrupted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowOutcome {
    pub record: FlowRecord,
    pub state: GraphState,
    pub steps: u64,
    pub termination: Termination,
}

/// Receives monitor rows, checkpoints and events as they are produced.
pub trait FlowObserver {
    fn row(&mut self, _row: &MonitorRow) {}
    fn checkpoint(&mut self, _ckpt: &Checkpoint) {}
    fn event(&mut self, _msg: &str) {}
    /// Called after each step with the new state.
    fn state(&mut self, _steps: u64, _state: &GraphState) {}
}

pub struct NoObserver;
impl FlowObserver for NoObserver {}

/// −(H − 𝓗)·v, zero at Dirichlet boundary nodes.
pub fn rhs_compact(snap: &GeometrySnapshot, mesh: &BaseMesh, hcal: &PrescribedCurvature) -> Vec<f64> {
    par::map_nodes(mesh.len(), |k| {
        if mesh.is_boundary(k) {
            0.0
        } else {
            let n = &snap.nodes[k];
            -(n.mean - hcal.values[k]) * n.v
        }
    })
}

/// −(H − 𝓗)/v, zero at Dirichlet boundary nodes.
pub fn rhs_normal(snap: &GeometrySnapshot, mesh: &BaseMesh, hcal: &PrescribedCurvature) -> Vec<f64> {
    par::map_nodes(mesh.len(), |k| {
        if mesh.is_boundary(k) {
            0.0
        } else {
            let n = &snap.nodes[k];
            -(n.mean - hcal.values[k]) / n.v
        }
    })
}

/// −Δu + (f′/f)(m + |∇̃u|²/(f² − |∇̃u|²)) + 𝓗 f/√(f² − |∇̃u|²), with Δ in divergence form.
pub fn rhs_graphical(
    mesh: &BaseMesh,
    w: &WarpingFunction,
    u: &[f64],
    hcal: &PrescribedCurvature,
    eps_sl: f64,
) -> Result<Vec<f64>> {
    let snap = GeometrySnapshot::build(mesh, w, u, eps_sl)?;
    let lap = divergence_laplacian(&snap, mesh, u);
    let mf = mesh.m as f64;
    Ok((0..mesh.len())
        .map(|k| {
            let n = &snap.nodes[k];
            let q = n.grad_norm2_tilde;
            -lap[k] + n.f1 / n.f * (mf + q / n.radicand) + hcal.values[k] * n.f / n.radicand.sqrt()
        })
        .collect())
}

/// dt = cfl·h²/(2m·Λ_max); returns (dt, Λ_max).
pub fn stability_dt(snap: &GeometrySnapshot, mesh: &BaseMesh, cfl: f64) -> (f64, f64) {
    let lam = snap.lambda_max();
    (cfl * mesh.h * mesh.h / (2.0 * mesh.m as f64 * lam), lam)
}

pub fn monitor_row(
    state: &GraphState,
    snap: &GeometrySnapshot,
    mesh: &BaseMesh,
    hcal: &PrescribedCurvature,
    dt: f64,
    lambda_max: f64,
) -> MonitorRow {
    let n = mesh.len();
    let interior = |k: usize| !mesh.is_boundary(k);
    let err = |k: usize| snap.nodes[k].mean - hcal.values[k];
    MonitorRow {
        s: state.s,
        u_sup: par::max_nodes(n, |k| state.u[k]),
        u_inf: par::min_nodes(n, |k| state.u[k]),
        v_sup: par::max_nodes(n, |k| if interior(k) { snap.nodes[k].v } else { f64::NEG_INFINITY }),
        sup_h_err: par::max_nodes(n, |k| if interior(k) { err(k).abs() } else { f64::NEG_INFINITY }),
        min_h_err: par::min_nodes(n, |k| if interior(k) { err(k) } else { f64::INFINITY }),
        dt,
        lambda_max,
    }
}

/// The flow problem: mesh, warp, 𝓗 and stepping parameters.
pub struct FlowEngine<'a> {
    pub mesh: &'a BaseMesh,
    pub warp: &'a WarpingFunction,
    pub hcal: &'a PrescribedCurvature,
    pub config: FlowConfig,
}

impl<'a> FlowEngine<'a> {
    pub fn new(
        mesh: &'a BaseMesh,
        warp: &'a WarpingFunction,
        hcal: &'a PrescribedCurvature,
        config: FlowConfig,
    ) -> Result<Self> {
        config.validate()?;
        if hcal.values.len() != mesh.len() {
            return Err(GrwError::InvalidParameters("prescribed curvature does not match mesh".into()));
        }
        Ok(Self { mesh, warp, hcal, config })
    }

    pub fn snapshot(&self, u: &[f64]) -> Result<GeometrySnapshot> {
        GeometrySnapshot::build(self.mesh, self.warp, u, self.config.eps_sl)
    }

    fn check_finite(&self, u: &[f64], step: u64) -> Result<()> {
        match u.iter().position(|x| !x.is_finite()) {
            Some(node) => Err(GrwError::NumericalBlowup { step, node }),
            None => Ok(()),
        }
    }

    fn rhs_of(&self, snap: &GeometrySnapshot) -> Vec<f64> {
        match self.config.speed {
            FlowSpeed::Graphical => rhs_compact(snap, self.mesh, self.hcal),
            FlowSpeed::Normal => rhs_normal(snap, self.mesh, self.hcal),
        }
    }

    fn rhs(&self, u: &[f64], step: u64) -> Result<Vec<f64>> {
        self.check_finite(u, step)?;
        Ok(self.rhs_of(&self.snapshot(u)?))
    }

    /// Advances by a given dt. `first` is the snapshot of `state`, reused for the first stage.
    pub fn step_with(&self, state: &GraphState, first: &GeometrySnapshot, dt: f64, step: u64) -> Result<GraphState> {
        let k1 = self.rhs_of(first);
        let axpy = |base: &[f64], k: &[f64], a: f64| -> Vec<f64> {
            base.iter().zip(k).map(|(x, y)| x + a * y).collect()
        };
        let u = match self.config.integrator {
            Integrator::Euler => axpy(&state.u, &k1, dt),
            Integrator::Rk4 => {
                let k2 = self.rhs(&axpy(&state.u, &k1, 0.5 * dt), step)?;
                let k3 = self.rhs(&axpy(&state.u, &k2, 0.5 * dt), step)?;
                let k4 = self.rhs(&axpy(&state.u, &k3, dt), step)?;
                (0..state.u.len())
                    .map(|i| state.u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect()
            }
        };
        self.check_finite(&u, step)?;
        Ok(GraphState { u, s: state.s + dt })
    }

    /// One step at the stability dt, clipped so that s does not pass s_end.
    pub fn step(&self, state: &GraphState) -> Result<(GraphState, f64)> {
        let snap = self.snapshot(&state.u)?;
        let (dt, _) = stability_dt(&snap, self.mesh, self.config.cfl);
        let remaining = self.config.s_end - state.s;
        if remaining <= 0.0 {
            return Ok((state.clone(), 0.0));
        }
        let dt = dt.min(remaining);
        let mut next = self.step_with(state, &snap, dt, 0)?;
        if dt == remaining {
            next.s = self.config.s_end;
        }
        Ok((next, dt))
    }

    /// Integrates to exactly `target`, clipping the last step.
    pub fn advance_to(&self, state: &GraphState, target: f64) -> Result<GraphState> {
        let mut st = state.clone();
        let mut step = 0;
        while st.s < target {
            let snap = self.snapshot(&st.u)?;
            let (dt, _) = stability_dt(&snap, self.mesh, self.config.cfl);
            let remaining = target - st.s;
            let dt = dt.min(remaining);
            st = self.step_with(&st, &snap, dt, step)?;
            if dt == remaining {
                st.s = target;
            }
            step += 1;
        }
        Ok(st)
    }

    fn check_assumptions(&self, u0: &[f64], snap: &GeometrySnapshot, obs: &mut dyn FlowObserver, record: &mut FlowRecord) -> Result<()> {
        let mut log = |msg: String, record: &mut FlowRecord| {
            obs.event(&msg);
            record.events.push(msg);
        };
        if let Some(delta) = self.config.upper_barrier {
            let gap = (0..self.mesh.len())
                .filter(|&k| !self.mesh.is_boundary(k))
                .map(|k| snap.nodes[k].mean - self.hcal.values[k])
                .fold(f64::INFINITY, f64::min);
            if !(gap >= delta) {
                return Err(GrwError::AssumptionViolated(format!(
                    "upper barrier: min(H(0) - H_presc) = {gap:e} < delta = {delta:e}"
                )));
            }
            log(format!("upper barrier holds: min(H(0) - H_presc) = {gap:e} >= {delta:e}"), record);
        }
        if let Some(delta) = self.config.prescribed_min {
            let lo = self.hcal.min();
            if !(lo >= delta) {
                return Err(GrwError::AssumptionViolated(format!(
                    "prescribed curvature minimum {lo:e} < delta = {delta:e}"
                )));
            }
            log(format!("prescribed curvature minimum {lo:e} >= {delta:e}"), record);
        }
        if let Some(mode) = self.config.timelike {
            let range = self.config.timelike_range.unwrap_or_else(|| {
                let lo = u0.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = u0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo - 1.0, hi)
            });
            let rep = check_timelike_convergence(self.warp, self.mesh, range, TIMELIKE_SAMPLES, mode, TIMELIKE_SEED)?;
            if !rep.pass {
                return Err(GrwError::AssumptionViolated(format!(
                    "timelike convergence ({mode:?}) fails on [{}, {}]: min Ric(X,X) = {:e}",
                    range.0, range.1, rep.min
                )));
            }
            log(format!("timelike convergence ({mode:?}) holds: min Ric(X,X) = {:e}", rep.min), record);
        }
        Ok(())
    }

    pub fn run(&self, u0: Vec<f64>) -> Result<FlowOutcome> {
        self.run_observed(u0, &mut NoObserver)
    }

    pub fn run_observed(&self, u0: Vec<f64>, obs: &mut dyn FlowObserver) -> Result<FlowOutcome> {
        if u0.len() != self.mesh.len() {
            return Err(GrwError::InvalidParameters("initial data does not match mesh".into()));
        }
        self.check_finite(&u0, 0)?;
        let snap = self.snapshot(&u0)?;
        let mut record = FlowRecord::default();
        self.check_assumptions(&u0, &snap, obs, &mut record)?;
        self.drive(GraphState::new(u0), 0, Some(snap), record, obs)
    }

    pub fn resume(&self, ckpt: &Checkpoint) -> Result<FlowOutcome> {
        self.resume_observed(ckpt, &mut NoObserver)
    }

    /// Continues from a checkpoint; the continuation reproduces the
    /// uninterrupted run bitwise.
    pub fn resume_observed(&self, ckpt: &Checkpoint, obs: &mut dyn FlowObserver) -> Result<FlowOutcome> {
        if ckpt.mesh != self.mesh.spec {
            return Err(GrwError::CorruptCheckpoint("checkpoint mesh differs from the configured mesh".into()));
        }
        if ckpt.u.len() != self.mesh.len() || !ckpt.s.is_finite() {
            return Err(GrwError::CorruptCheckpoint("checkpoint state is inconsistent".into()));
        }
        let mut record = FlowRecord::default();
        let msg = format!("resumed at step {} (s = {})", ckpt.steps, ckpt.s);
        obs.event(&msg);
        record.events.push(msg);
        self.drive(GraphState { u: ckpt.u.clone(), s: ckpt.s }, ckpt.steps, None, record, obs)
    }

    fn checkpoint_of(&self, state: &GraphState, steps: u64) -> Checkpoint {
        Checkpoint { mesh: self.mesh.spec, s: state.s, steps, u: state.u.clone() }
    }

    fn drive(
        &self,
        mut state: GraphState,
        mut steps: u64,
        mut cached: Option<GeometrySnapshot>,
        mut record: FlowRecord,
        obs: &mut dyn FlowObserver,
    ) -> Result<FlowOutcome> {
        let s_end = self.config.s_end;
        let termination = loop {
            if self.config.stop_after_steps == Some(steps) && state.s < s_end {
                let ck = self.checkpoint_of(&state, steps);
                obs.checkpoint(&ck);
                record.checkpoints.push(ck);
                let msg = format!("interrupted after step {steps} (s = {})", state.s);
                obs.event(&msg);
                record.events.push(msg);
                break Termination::Interrupted;
            }
            let snap = match cached.take() {
                Some(s) => s,
                None => self.snapshot(&state.u)?,
            };
            let (dt_stab, lam) = stability_dt(&snap, self.mesh, self.config.cfl);
            let row = monitor_row(&state, &snap, self.mesh, self.hcal, dt_stab, lam);
            obs.row(&row);
            record.rows.push(row);
            if state.s >= s_end {
                break Termination::Completed;
            }
            let remaining = s_end - state.s;
            let dt = dt_stab.min(remaining);
            let mut next = self.step_with(&state, &snap, dt, steps + 1)?;
            if dt == remaining {
                next.s = s_end;
            }
            state = next;
            steps += 1;
            obs.state(steps, &state);
            if self.config.checkpoint_every > 0 && steps.is_multiple_of(self.config.checkpoint_every) {
                let ck = self.checkpoint_of(&state, steps);
                obs.checkpoint(&ck);
                record.checkpoints.push(ck);
            }
        };
        Ok(FlowOutcome { record, state, steps, termination })
    }
}
