//! Geometric identities evaluated as numerical residuals, with
//! refinement-ladder order fits.

mod properties;
mod report;
mod ricci;
mod spatial;
mod temporal;

pub use properties::{property_suite, PropertyItem, PropertyReport, EPSILONS};
pub use report::{fit_order, linear_fit, Contract, LadderLevel, LadderReport, ResidualReport, EXACT_TOL};
pub use ricci::{ricci_normal, ricci_normal_at, RicciMode};
pub use spatial::{
    check_gradient_covector, check_h_cross, check_h_gradu, check_laplacian_u, check_laplacian_u_assembled,
    check_metric_norms, check_rhs_equivalence, check_volume_form, covector_residual_components,
};
pub use temporal::{
    check_mean_curvature_evolution, check_mean_curvature_squared, check_metric_evolution, check_v_evolution,
    check_v_time_derivative, Parametrization, SnapshotTriple, TangentField, VEvolutionForm,
};

use crate::error::{GrwError, Result};
use crate::flow::{FlowConfig, FlowEngine, FlowSpeed, Integrator, PrescribedCurvature};
use crate::graph::{GeometrySnapshot, DEFAULT_EPS_SL};
use crate::mesh::{BaseMesh, MeshSpec};
use crate::profile::InitProfile;
use crate::warp::WarpingFunction;

pub const SPATIAL_IDS: [&str; 7] = [
    "laplacian_u",
    "h_cross_check",
    "h_gradu",
    "gradient_covector",
    "volume_form",
    "metric_norms",
    "rhs_equivalence",
];

pub const TEMPORAL_IDS: [&str; 5] = [
    "v_time_derivative",
    "v_evolution",
    "metric_evolution",
    "inverse_metric_evolution",
    "mean_curvature_evolution",
];

/// The squared form of the H − 𝓗 evolution, run on the same triples.
pub const SQUARED_ID: &str = "mean_curvature_squared";

pub const RICCI_ID: &str = "ricci_normal";

fn is_temporal(id: &str) -> bool {
    TEMPORAL_IDS.contains(&id) || id == SQUARED_ID
}

pub const SPATIAL_ORDER: f64 = 1.8;
pub const JOINT_ORDER: f64 = 1.5;
pub const RICCI_TOL: f64 = 1e-10;

pub fn all_ids() -> Vec<&'static str> {
    let mut v: Vec<&str> = SPATIAL_IDS.to_vec();
    v.push(RICCI_ID);
    v.extend(TEMPORAL_IDS);
    v.push(SQUARED_ID);
    v
}

/// 𝓗 in a mesh-independent form, so it can be rebuilt on every ladder level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HcalSpec {
    Constant(f64),
    SliceMatching(f64),
}

impl HcalSpec {
    pub fn build(&self, mesh: &BaseMesh, w: &WarpingFunction) -> Result<PrescribedCurvature> {
        match *self {
            HcalSpec::Constant(v) => PrescribedCurvature::constant(mesh, v),
            HcalSpec::SliceMatching(c) => Ok(PrescribedCurvature::slice_matching(mesh, w, c)),
        }
    }
}

/// Everything needed to run identity ladders.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityPlan {
    pub mesh: MeshSpec,
    pub warp: WarpingFunction,
    pub profile: InitProfile,
    pub hcal: HcalSpec,
    pub ladder: Vec<usize>,
    /// Centre time of the snapshot triple.
    pub triple_center: f64,
    /// Triple spacing on the coarsest level; scaled with h on finer levels.
    pub triple_ds: f64,
    pub integrator: Integrator,
    /// Flow generating the triples. The evolution identities describe the
    /// normal flow; the graphical speed differs from it by a factor v².
    pub speed: FlowSpeed,
    pub cfl: f64,
    pub eps_sl: f64,
    pub ricci_sigma: f64,
    pub v_form: VEvolutionForm,
}

impl IdentityPlan {
    pub fn new(mesh: MeshSpec, warp: WarpingFunction, profile: InitProfile, hcal: HcalSpec, ladder: Vec<usize>) -> Self {
        Self {
            mesh,
            warp,
            profile,
            hcal,
            ladder,
            triple_center: 0.05,
            triple_ds: 0.01,
            integrator: Integrator::Rk4,
            speed: FlowSpeed::Normal,
            cfl: 0.2,
            eps_sl: DEFAULT_EPS_SL,
            ricci_sigma: -1.0,
            v_form: VEvolutionForm::Rederived,
        }
    }

    fn level_mesh(&self, n: usize) -> Result<BaseMesh> {
        MeshSpec { n, ..self.mesh }.build()
    }
}

/// Residual of one spatial identity (or the Ricci comparison) on one mesh.
pub fn spatial_residual(id: &str, plan: &IdentityPlan, mesh: &BaseMesh) -> Result<ResidualReport> {
    let w = &plan.warp;
    let u = plan.profile.sample(mesh);
    let snap = GeometrySnapshot::build(mesh, w, &u, plan.eps_sl)?;
    Ok(match id {
        "laplacian_u" => check_laplacian_u(&snap, mesh, &u),
        "h_cross_check" => check_h_cross(&snap, mesh, &u),
        "h_gradu" => check_h_gradu(&snap, mesh),
        "gradient_covector" => check_gradient_covector(&snap, mesh),
        "volume_form" => check_volume_form(&snap, mesh, w, &plan.profile),
        "metric_norms" => check_metric_norms(&snap, mesh, w, &plan.profile),
        "rhs_equivalence" => {
            let hcal = plan.hcal.build(mesh, w)?;
            check_rhs_equivalence(mesh, w, &u, &hcal, plan.eps_sl)?
        }
        "ricci_normal" => {
            let direct = ricci_normal(&snap, mesh, w, RicciMode::Direct);
            let closed = ricci_normal(&snap, mesh, w, RicciMode::Closed { sigma: plan.ricci_sigma });
            let res = direct.iter().zip(&closed).map(|(a, b)| a - b).collect();
            ResidualReport::from_field(RICCI_ID, res, mesh)
        }
        other => return Err(GrwError::InvalidParameters(format!("unknown spatial identity '{other}'"))),
    })
}

pub fn run_spatial_ladder(id: &str, plan: &IdentityPlan) -> Result<LadderReport> {
    let mut levels = Vec::new();
    for &n in &plan.ladder {
        let mesh = plan.level_mesh(n)?;
        let report = spatial_residual(id, plan, &mesh)?;
        levels.push(LadderLevel { n, h: mesh.h, ds: None, report });
    }
    let contract = if id == RICCI_ID { Contract::Tolerance(RICCI_TOL) } else { Contract::Order(SPATIAL_ORDER) };
    Ok(LadderReport::new(id, levels, contract))
}

/// Temporal residuals on one mesh at triple spacing ds.
pub fn temporal_residuals(ids: &[&str], plan: &IdentityPlan, mesh: &BaseMesh, ds: f64) -> Result<Vec<ResidualReport>> {
    let w = &plan.warp;
    let hcal = plan.hcal.build(mesh, w)?;
    let cfg = FlowConfig {
        integrator: plan.integrator,
        speed: plan.speed,
        cfl: plan.cfl,
        s_end: plan.triple_center + ds,
        eps_sl: plan.eps_sl,
        upper_barrier: None,
        ..Default::default()
    };
    let engine = FlowEngine::new(mesh, w, &hcal, cfg)?;
    let triple = SnapshotTriple::along_flow(&engine, plan.profile.sample(mesh), plan.triple_center, ds)?;
    let (metric, inverse) = check_metric_evolution(&triple, mesh, &hcal);
    let mut out = Vec::new();
    for id in ids {
        out.push(match *id {
            "v_time_derivative" => check_v_time_derivative(&triple, mesh, &hcal, TangentField::Definition),
            "v_evolution" => check_v_evolution(&triple, mesh, w, &hcal, plan.v_form),
            "metric_evolution" => metric.clone(),
            "inverse_metric_evolution" => inverse.clone(),
            "mean_curvature_evolution" => check_mean_curvature_evolution(&triple, mesh, w, &hcal),
            "mean_curvature_squared" => check_mean_curvature_squared(&triple, mesh, w, &hcal),
            other => return Err(GrwError::InvalidParameters(format!("unknown temporal identity '{other}'"))),
        });
    }
    Ok(out)
}

/// Joint (h, Δs) ladder with Δs proportional to h.
pub fn run_temporal_ladder(ids: &[&str], plan: &IdentityPlan) -> Result<Vec<LadderReport>> {
    let mut per_id: Vec<Vec<LadderLevel>> = vec![Vec::new(); ids.len()];
    let mut h0 = None;
    for &n in &plan.ladder {
        let mesh = plan.level_mesh(n)?;
        let h0 = *h0.get_or_insert(mesh.h);
        let ds = plan.triple_ds * mesh.h / h0;
        let reports = temporal_residuals(ids, plan, &mesh, ds)?;
        for (slot, report) in per_id.iter_mut().zip(reports) {
            slot.push(LadderLevel { n, h: mesh.h, ds: Some(ds), report });
        }
    }
    Ok(ids
        .iter()
        .zip(per_id)
        .map(|(id, levels)| LadderReport::new(id, levels, Contract::Order(JOINT_ORDER)))
        .collect())
}

/// Runs the selected identities (all when `selection` is empty).
pub fn run_identities(plan: &IdentityPlan, selection: &[String]) -> Result<Vec<LadderReport>> {
    let chosen: Vec<&str> = if selection.is_empty() {
        all_ids()
    } else {
        let known = all_ids();
        let mut v = Vec::new();
        for s in selection {
            match known.iter().find(|k| **k == s.as_str()) {
                Some(k) => v.push(*k),
                None => return Err(GrwError::InvalidParameters(format!("unknown identity '{s}'"))),
            }
        }
        v
    };
    let mut out = Vec::new();
    for id in chosen.iter().filter(|id| !is_temporal(id)) {
        out.push(run_spatial_ladder(id, plan)?);
    }
    let temporal: Vec<&str> = chosen.iter().copied().filter(|id| is_temporal(id)).collect();
    if !temporal.is_empty() {
        out.extend(run_temporal_ladder(&temporal, plan)?);
    }
    Ok(out)
}
