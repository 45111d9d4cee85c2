use super::report::ResidualReport;
use crate::error::Result;
use crate::flow::{rhs_compact, rhs_graphical, PrescribedCurvature};
use crate::graph::{
    apply_induced_laplacian, cross_check_h, divergence_laplacian, metric_equivalence_constants,
    volume_density_check, GeometrySnapshot, GraphNode,
};
use crate::mesh::BaseMesh;
use crate::profile::InitProfile;
use crate::tensor::{dot, mat_vec, quad, Vec2, ZERO22};
use crate::warp::WarpingFunction;

fn u_identity_rhs(n: &GraphNode, m: usize) -> f64 {
    n.v * n.mean + n.f1 / n.f * (m as f64 + n.v * n.v - 1.0)
}

/// Δu − (vH + (f′/f)(m + v² − 1)), with Δu in divergence form.
pub fn check_laplacian_u(snap: &GeometrySnapshot, mesh: &BaseMesh, u: &[f64]) -> ResidualReport {
    let lap = divergence_laplacian(snap, mesh, u);
    let res = (0..mesh.len()).map(|k| lap[k] - u_identity_rhs(&snap.nodes[k], snap.m)).collect();
    ResidualReport::from_field("laplacian_u", res, mesh)
}

/// Same identity with the assembled non-divergence operator; algebraically
/// exact on the discrete jets, so this isolates sign conventions.
pub fn check_laplacian_u_assembled(snap: &GeometrySnapshot, mesh: &BaseMesh, u: &[f64]) -> ResidualReport {
    let lap = apply_induced_laplacian(snap, mesh, u);
    let res = (0..mesh.len()).map(|k| lap[k] - u_identity_rhs(&snap.nodes[k], snap.m)).collect();
    ResidualReport::from_field("laplacian_u_assembled", res, mesh)
}

pub fn check_h_cross(snap: &GeometrySnapshot, mesh: &BaseMesh, u: &[f64]) -> ResidualReport {
    ResidualReport::from_field("h_cross_check", cross_check_h(snap, mesh, u), mesh)
}

/// h(∇u,∇u) + g(∇u,∇v) + (f′/f)|∇u|²_g v, with ∇v differentiated from the v field.
pub fn check_h_gradu(snap: &GeometrySnapshot, mesh: &BaseMesh) -> ResidualReport {
    let v = snap.v();
    let res = (0..mesh.len())
        .map(|k| {
            let n = &snap.nodes[k];
            let dv = mesh.jet_gradient(&v, k);
            quad(&n.h, &n.grad_u_g, &n.grad_u_g) + dot(&n.grad_u_g, &dv) + n.f1 / n.f * n.grad_norm2_g * n.v
        })
        .collect();
    ResidualReport::from_field("h_gradu", res, mesh)
}

/// Components of v_i + g^jk u_j h_ki + (f′/f) v u_i.
pub fn covector_residual_components(snap: &GeometrySnapshot, mesh: &BaseMesh) -> Vec<Vec2> {
    let v = snap.v();
    (0..mesh.len())
        .map(|k| {
            let n = &snap.nodes[k];
            let dv = mesh.jet_gradient(&v, k);
            let hg = mat_vec(&n.h, &n.grad_u_g);
            let mut r = [0.0; 2];
            for i in 0..snap.m {
                r[i] = dv[i] + hg[i] + n.f1 / n.f * n.v * n.du[i];
            }
            r
        })
        .collect()
}

pub fn check_gradient_covector(snap: &GeometrySnapshot, mesh: &BaseMesh) -> ResidualReport {
    let res = covector_residual_components(snap, mesh)
        .iter()
        .map(|r| r[0].abs().max(r[1].abs()))
        .collect();
    ResidualReport::from_field("gradient_covector", res, mesh)
}

fn exact_nodes(mesh: &BaseMesh, w: &WarpingFunction, profile: &InitProfile) -> Vec<Option<GraphNode>> {
    (0..mesh.len())
        .map(|k| {
            let (u, du) = profile.eval(mesh, mesh.node(k).x);
            GraphNode::from_jet(mesh.m, mesh.node(k), w, u, du, ZERO22, 0.0).ok()
        })
        .collect()
}

/// Discrete f^m/v against the value from the exact gradient; side condition:
/// f^m/v and √det g/√det g̃ agree to 1e−10.
pub fn check_volume_form(snap: &GeometrySnapshot, mesh: &BaseMesh, w: &WarpingFunction, profile: &InitProfile) -> ResidualReport {
    let exact = exact_nodes(mesh, w, profile);
    let res = (0..mesh.len())
        .map(|k| match &exact[k] {
            Some(e) => snap.nodes[k].vol_density - e.vol_density,
            None => f64::NAN,
        })
        .collect();
    let route = volume_density_check(snap, mesh).into_iter().fold(0.0, f64::max);
    ResidualReport::from_field("volume_form", res, mesh).with_side("determinant_route", route, 1e-10)
}

/// Closed-form |g|²_g̃ and |g̃|²_g against exact values; side condition:
/// closed forms equal the direct contractions to 1e−10.
pub fn check_metric_norms(snap: &GeometrySnapshot, mesh: &BaseMesh, w: &WarpingFunction, profile: &InitProfile) -> ResidualReport {
    let exact = exact_nodes(mesh, w, profile);
    let mf = mesh.m as f64;
    let norms = metric_equivalence_constants(snap, mesh);
    let mut route: f64 = 0.0;
    let res = (0..mesh.len())
        .map(|k| {
            let nm = &norms[k];
            route = route
                .max((nm.g_in_tilde - nm.g_in_tilde_direct).abs())
                .max((nm.tilde_in_g - nm.tilde_in_g_direct).abs());
            match &exact[k] {
                Some(e) => {
                    let f2 = e.f * e.f;
                    let v2 = e.v * e.v;
                    let a = (f2 / v2).powi(2) + f2 * f2 * (mf - 1.0);
                    let b = (mf - 1.0 + v2 * v2) / (f2 * f2);
                    (nm.g_in_tilde - a).abs().max((nm.tilde_in_g - b).abs())
                }
                None => f64::NAN,
            }
        })
        .collect();
    ResidualReport::from_field("metric_norms", res, mesh).with_side("direct_contraction", route, 1e-10)
}

/// rhs_graphical − rhs_compact.
pub fn check_rhs_equivalence(
    mesh: &BaseMesh,
    w: &WarpingFunction,
    u: &[f64],
    hcal: &PrescribedCurvature,
    eps_sl: f64,
) -> Result<ResidualReport> {
    let snap = GeometrySnapshot::build(mesh, w, u, eps_sl)?;
    let a = rhs_graphical(mesh, w, u, hcal, eps_sl)?;
    let b = rhs_compact(&snap, mesh, hcal);
    let res = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    Ok(ResidualReport::from_field("rhs_equivalence", res, mesh))
}
