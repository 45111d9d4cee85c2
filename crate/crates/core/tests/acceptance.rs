//! Acceptance criteria A1–A12. One PASS/FAIL line per criterion; exits
//! non-zero if any fails.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use grwflow::decay::trailing_half_fit;
use grwflow::flow::{FlowObserver, FlowOutcome, MonitorRow, Termination};
use grwflow::graph::{GeometrySnapshot, GraphState, DEFAULT_EPS_SL};
use grwflow::identities::{
    property_suite, ricci_normal, run_spatial_ladder, run_temporal_ladder, HcalSpec, IdentityPlan, LadderReport,
    RicciMode, TEMPORAL_IDS,
};
use grwflow::mesh::MeshSpec;
use grwflow::sampling::random_state;
use grwflow::warp::TimelikeMode;
use grwflow::{
    BaseMesh, Checkpoint, FlowConfig, FlowEngine, InitProfile, Integrator, PrescribedCurvature, Topology, WarpKind,
    WarpingFunction,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Largest per-step change of u.
#[derive(Default)]
struct StepDelta {
    prev: Option<Vec<f64>>,
    worst: f64,
}

impl FlowObserver for StepDelta {
    fn state(&mut self, _steps: u64, state: &GraphState) {
        if let Some(p) = &self.prev {
            let d = p.iter().zip(&state.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            self.worst = self.worst.max(d);
        }
        self.prev = Some(state.u.clone());
    }
}

/// v_sup growth over one run: (v_sup(0), max v_sup).
fn v_growth(rows: &[MonitorRow]) -> (f64, f64) {
    (rows[0].v_sup, rows.iter().map(|r| r.v_sup).fold(0.0, f64::max))
}

#[derive(Default)]
struct Runs {
    /// (label, v_sup(0), max v_sup) for every flow run in A1–A9.
    growth: Vec<(&'static str, f64, f64)>,
    /// Labels of runs that ended in an error.
    errors: Vec<String>,
}

impl Runs {
    fn record(&mut self, label: &'static str, out: &grwflow::Result<FlowOutcome>) {
        match out {
            Ok(o) => {
                let (v0, vmax) = v_growth(&o.record.rows);
                self.growth.push((label, v0, vmax));
            }
            Err(e) => self.errors.push(format!("{label}: {e}")),
        }
    }
}

fn sin_warp() -> WarpingFunction {
    WarpingFunction::new(WarpKind::Sinusoidal { a: 2.0, b: 0.5, omega: 1.0 }).unwrap()
}

fn a1(runs: &mut Runs) -> Outcome {
    let t0 = Instant::now();
    let mesh = BaseMesh::flat(1, Topology::Periodic, 64, TAU).unwrap();
    let w = sin_warp();
    let c = 0.3;
    let hcal = PrescribedCurvature::slice_matching(&mesh, &w, c);
    let cfg = FlowConfig { upper_barrier: None, s_end: 1e9, stop_after_steps: Some(1000), ..Default::default() };
    let engine = FlowEngine::new(&mesh, &w, &hcal, cfg).unwrap();
    let mut obs = StepDelta { prev: Some(vec![c; 64]), worst: 0.0 };
    let out = engine.run_observed(vec![c; 64], &mut obs);
    let elapsed = t0.elapsed();
    runs.record("A1", &out);
    let Ok(out) = out else { return outcome(false, "run failed") };
    let pass = out.steps == 1000 && obs.worst <= 1e-12 && elapsed < Duration::from_secs(5);
    outcome(pass, format!("{} steps, max |du| per step {:.2e}, {:.2?}", out.steps, obs.worst, elapsed))
}

fn a2(runs: &mut Runs) -> Outcome {
    let mut worst: f64 = 0.0;
    for (m, n) in [(1, 32), (2, 16)] {
        let mesh = BaseMesh::flat(m, Topology::Periodic, n, TAU).unwrap();
        let w = WarpingFunction::constant(1.0).unwrap();
        let hcal = PrescribedCurvature::constant(&mesh, 0.0).unwrap();
        let u0 = vec![0.7; mesh.len()];
        let snap = GeometrySnapshot::build(&mesh, &w, &u0, DEFAULT_EPS_SL).unwrap();
        for nd in &snap.nodes {
            worst = worst.max(nd.mean.abs()).max((nd.v - 1.0).abs());
        }
        let cfg = FlowConfig { upper_barrier: None, s_end: 0.05, ..Default::default() };
        let out = FlowEngine::new(&mesh, &w, &hcal, cfg).unwrap().run(u0);
        runs.record("A2", &out);
        let Ok(out) = out else { return outcome(false, "run failed") };
        for r in &out.record.rows {
            worst = worst.max(r.sup_h_err).max((r.v_sup - 1.0).abs()).max((r.u_sup - 0.7).abs());
        }
    }
    outcome(worst <= 1e-13, format!("max |H|, |v − 1|, |u − c| = {worst:.2e}"))
}

fn spatial_plan() -> IdentityPlan {
    IdentityPlan::new(
        MeshSpec::new(1, Topology::Periodic, 32, TAU),
        sin_warp(),
        InitProfile::Sine { level: 0.3, amplitude: 0.2 },
        HcalSpec::Constant(0.0),
        vec![32, 64, 128],
    )
}

fn ladder_line(r: &LadderReport) -> String {
    format!("{} {:.3}", r.id, r.order_sup.unwrap_or(f64::NAN))
}

fn a3() -> Outcome {
    let plan = spatial_plan();
    let ids = ["laplacian_u", "h_cross_check", "h_gradu", "gradient_covector", "volume_form", "metric_norms"];
    let mut pass = true;
    let mut parts = Vec::new();
    for id in ids {
        let t0 = Instant::now();
        let r = run_spatial_ladder(id, &plan).unwrap();
        let dt = t0.elapsed();
        pass &= r.pass && r.order_sup.is_some_and(|o| o >= 1.8) && dt < Duration::from_secs(10);
        parts.push(format!("{} ({:.0?})", ladder_line(&r), dt));
    }
    outcome(pass, format!("orders: {}", parts.join(", ")))
}

fn a4() -> Outcome {
    let r = run_spatial_ladder("rhs_equivalence", &spatial_plan()).unwrap();
    let sups: Vec<String> = r.levels.iter().map(|l| format!("{:.2e}", l.report.sup)).collect();
    outcome(r.order_sup.is_some_and(|o| o >= 1.8), format!("{} over sup {:?}", ladder_line(&r), sups))
}

fn a5() -> Outcome {
    let t0 = Instant::now();
    let plan = IdentityPlan::new(
        MeshSpec::new(1, Topology::Periodic, 32, TAU),
        WarpingFunction::constant(1.0).unwrap(),
        InitProfile::Bump { level: 0.0, amplitude: 0.3, center: 3.0, width: 1.0 },
        HcalSpec::Constant(0.0),
        vec![32, 64, 128],
    );
    let reports = match run_temporal_ladder(&TEMPORAL_IDS, &plan) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("ladder failed: {e}")),
    };
    let dt = t0.elapsed();
    let pass = reports.iter().all(|r| r.order_sup.is_some_and(|o| o >= 1.5)) && dt < Duration::from_secs(120);
    let parts: Vec<String> = reports.iter().map(ladder_line).collect();
    outcome(pass, format!("joint orders: {} ({:.2?})", parts.join(", "), dt))
}

fn a6() -> Outcome {
    let total = 1000;
    let mut worst_minus: f64 = 0.0;
    let mut plus_far = 0;
    for seed in 0..total {
        let st = random_state(seed);
        let snap = st.snapshot();
        let direct = ricci_normal(&snap, &st.mesh, &st.warp, RicciMode::Direct);
        let minus = ricci_normal(&snap, &st.mesh, &st.warp, RicciMode::Closed { sigma: -1.0 });
        let plus = ricci_normal(&snap, &st.mesh, &st.warp, RicciMode::Closed { sigma: 1.0 });
        let gap = |o: &[f64]| direct.iter().zip(o).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst_minus = worst_minus.max(gap(&minus));
        if gap(&plus) > 1e-3 {
            plus_far += 1;
        }
    }
    let pass = worst_minus <= 1e-10 && plus_far * 100 >= total * 99;
    outcome(
        pass,
        format!("sigma=-1 max gap {worst_minus:.2e}; sigma=+1 off by > 1e-3 on {plus_far}/{total}"),
    )
}

/// Shared configuration of A7, A8 and A12: a tanh warp with Ric ≥ 0 on
/// t ∈ [−2, 0], 𝓗 = 0.15 and a small bump on the slice t = −0.5.
struct Barrier {
    mesh: BaseMesh,
    warp: WarpingFunction,
    hcal: PrescribedCurvature,
    u0: Vec<f64>,
}

impl Barrier {
    fn new() -> Self {
        let mesh = BaseMesh::flat(1, Topology::Periodic, 64, TAU).unwrap();
        let warp = WarpingFunction::new(WarpKind::Tanh { a: 2.0, b: -1.0 }).unwrap();
        let hcal = PrescribedCurvature::constant(&mesh, 0.15).unwrap();
        let u0 = InitProfile::Bump { level: -0.5, amplitude: 0.05, center: 3.0, width: 1.0 }.sample(&mesh);
        Self { mesh, warp, hcal, u0 }
    }

    fn config(&self) -> FlowConfig {
        FlowConfig {
            integrator: Integrator::Rk4,
            cfl: 0.8,
            s_end: 40.0,
            upper_barrier: Some(0.1),
            timelike: Some(TimelikeMode::NonNeg),
            timelike_range: Some((-2.0, 0.0)),
            prescribed_min: Some(0.1),
            ..Default::default()
        }
    }

    fn run(&self, cfg: FlowConfig) -> grwflow::Result<FlowOutcome> {
        FlowEngine::new(&self.mesh, &self.warp, &self.hcal, cfg)?.run(self.u0.clone())
    }
}

fn a7_a8(runs: &mut Runs) -> (Outcome, Outcome) {
    let b = Barrier::new();
    let out = b.run(b.config());
    runs.record("A7/A8", &out);
    let out = match out {
        Ok(o) => o,
        Err(e) => {
            let msg = format!("run failed: {e}");
            return (outcome(false, msg.clone()), outcome(false, msg));
        }
    };
    let rows = &out.record.rows;
    let gap0 = rows[0].min_h_err;
    let worst_rise = rows.windows(2).map(|p| p[1].u_sup - p[0].u_sup).fold(f64::NEG_INFINITY, f64::max);
    let min_gap = rows.iter().map(|r| r.min_h_err).fold(f64::INFINITY, f64::min);
    let a7 = outcome(
        gap0 >= 0.1 && worst_rise <= 1e-8 && min_gap > 0.0,
        format!(
            "min(H(0)-Hp) {gap0:.4}, largest u_sup rise per step {worst_rise:.2e}, min(H-Hp) over run {min_gap:.2e}, {} steps",
            out.steps
        ),
    );
    let s: Vec<f64> = rows.iter().map(|r| r.s).collect();
    let e: Vec<f64> = rows.iter().map(|r| r.sup_h_err).collect();
    let a8 = match trailing_half_fit(&s, &e) {
        Some(fit) => outcome(
            fit.slope < 0.0 && fit.r2 >= 0.98,
            format!("trailing-half slope {:.4}, R^2 {:.6}, final sup|H-Hp| {:.2e}", fit.slope, fit.r2, e[e.len() - 1]),
        ),
        None => outcome(false, "fit unavailable"),
    };
    (a7, a8)
}

fn a9(runs: &mut Runs) -> Outcome {
    let t0 = Instant::now();
    let mesh = BaseMesh::flat(2, Topology::DirichletRectangle, 64, 1.0).unwrap();
    let w = WarpingFunction::constant(1.0).unwrap();
    let hcal = PrescribedCurvature::constant(&mesh, 0.0).unwrap();
    let u0 = InitProfile::Sine { level: 0.0, amplitude: 0.01 }.sample(&mesh);
    let s_end = 1.2;
    let cfg = FlowConfig { cfl: 0.8, s_end, upper_barrier: None, ..Default::default() };
    let engine = FlowEngine::new(&mesh, &w, &hcal, cfg.clone()).unwrap();
    let half = engine.advance_to(&GraphState::new(u0.clone()), s_end / 2.0);
    let out = engine.run(u0);
    let elapsed = t0.elapsed();
    runs.record("A9", &out);
    let (Ok(out), Ok(half)) = (out, half) else { return outcome(false, "run failed") };
    let final_err = out.record.rows.last().unwrap().sup_h_err;
    let du = out.state.u.iter().zip(&half.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let pass = final_err <= 1e-5 && du <= 1e-6 && elapsed < Duration::from_secs(300);
    outcome(
        pass,
        format!("final sup|H| {final_err:.2e}, sup|u(s)-u(s/2)| {du:.2e}, {} steps, {:.2?}", out.steps, elapsed),
    )
}

fn a10(runs: &Runs) -> Outcome {
    let worst = runs
        .growth
        .iter()
        .map(|&(_, v0, vmax)| vmax - (2.0 * v0 + 1.0))
        .fold(f64::NEG_INFINITY, f64::max);
    let parts: Vec<String> = runs.growth.iter().map(|(l, v0, vm)| format!("{l} {v0:.4}->{vm:.4}")).collect();
    let pass = runs.errors.is_empty() && worst <= 0.0;
    let mut detail = format!("v_sup(0)->max: {}", parts.join(", "));
    if !runs.errors.is_empty() {
        detail.push_str(&format!("; errors: {}", runs.errors.join("; ")));
    }
    outcome(pass, detail)
}

fn a11() -> Outcome {
    let total = 1000;
    let mut failed = Vec::new();
    for seed in 0..total {
        let st = random_state(seed);
        let report = property_suite(&st.snapshot(), &st.mesh, &st.warp, &st.hcal);
        if !report.pass() {
            failed.push(seed);
        }
    }
    outcome(failed.is_empty(), format!("{}/{} states pass; failing seeds {:?}", total - failed.len() as u64, total, failed))
}

fn a12() -> Outcome {
    let b = Barrier::new();
    let cfg = FlowConfig { s_end: 5.0, ..b.config() };
    let whole = match b.run(cfg.clone()) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let cut = whole.steps / 2 + 1;
    let first = b.run(FlowConfig { stop_after_steps: Some(cut), ..cfg.clone() }).unwrap();
    if first.termination != Termination::Interrupted {
        return outcome(false, "first half did not stop");
    }
    let bytes = first.record.checkpoints.last().unwrap().encode();
    let ck = Checkpoint::decode(&bytes).unwrap();
    let second = FlowEngine::new(&b.mesh, &b.warp, &b.hcal, cfg).unwrap().resume(&ck).unwrap();
    let bits = |rows: &[MonitorRow]| -> Vec<[u64; 8]> {
        rows.iter()
            .map(|r| {
                [r.s, r.u_sup, r.u_inf, r.v_sup, r.sup_h_err, r.min_h_err, r.dt, r.lambda_max].map(f64::to_bits)
            })
            .collect()
    };
    let mut joined = bits(&first.record.rows);
    joined.extend(bits(&second.record.rows));
    let same = joined == bits(&whole.record.rows) && second.state.u == whole.state.u;
    outcome(same, format!("split at step {cut} of {}; {} rows compared bitwise", whole.steps, joined.len()))
}

fn main() {
    let start = Instant::now();
    let mut runs = Runs::default();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("A1", a1(&mut runs)));
    results.push(("A2", a2(&mut runs)));
    results.push(("A3", a3()));
    results.push(("A4", a4()));
    results.push(("A5", a5()));
    results.push(("A6", a6()));
    let (r7, r8) = a7_a8(&mut runs);
    results.push(("A7", r7));
    results.push(("A8", r8));
    results.push(("A9", a9(&mut runs)));
    results.push(("A10", a10(&runs)));
    results.push(("A11", a11()));
    results.push(("A12", a12()));
    let mut failures = 0;
    for (id, o) in &results {
        println!("{} {id}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failures += usize::from(!o.pass);
    }
    println!("{} of {} criteria pass ({:.1?})", results.len() - failures, results.len(), start.elapsed());
    if failures > 0 {
        std::process::exit(1);
    }
}
