use super::report::ResidualReport;
use super::ricci::{ricci_normal, RicciMode};
use crate::error::{GrwError, Result};
use crate::flow::{FlowEngine, FlowSpeed, PrescribedCurvature};
use crate::graph::{apply_induced_laplacian, GeometrySnapshot, GraphNode, GraphState};
use crate::mesh::BaseMesh;
use crate::tensor::{dot, max_abs_diff, quad, Mat2, Vec2, matmul};
use crate::warp::WarpingFunction;

/// How s-derivatives of the triple are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parametrization {
    /// Difference quotients at a fixed base point.
    Graph,
    /// Follow the normal trajectories: the base point drifts with
    /// W = −(H−𝓗) v g̃⁻¹du / f², so a transport term is added.
    Normal,
}

/// States at s − Δs, s, s + Δs on one mesh.
#[derive(Debug, Clone)]
pub struct SnapshotTriple {
    pub s: f64,
    pub ds: f64,
    pub u: [Vec<f64>; 3],
    pub snaps: [GeometrySnapshot; 3],
    pub param: Parametrization,
}

impl SnapshotTriple {
    pub fn new(
        mesh: &BaseMesh,
        w: &WarpingFunction,
        u: [Vec<f64>; 3],
        s: f64,
        ds: f64,
        eps_sl: f64,
        param: Parametrization,
    ) -> Result<Self> {
        if !(ds > 0.0) {
            return Err(GrwError::InvalidParameters("triple spacing must be positive".into()));
        }
        let snaps = [
            GeometrySnapshot::build(mesh, w, &u[0], eps_sl)?,
            GeometrySnapshot::build(mesh, w, &u[1], eps_sl)?,
            GeometrySnapshot::build(mesh, w, &u[2], eps_sl)?,
        ];
        Ok(Self { s, ds, u, snaps, param })
    }

    /// Integrates from `u0` at s = 0 and records the states at s ∓ Δs and s.
    /// A normal-speed engine yields a triple read in the normal parametrization.
    pub fn along_flow(engine: &FlowEngine, u0: Vec<f64>, s: f64, ds: f64) -> Result<Self> {
        if !(s - ds >= 0.0) {
            return Err(GrwError::InvalidParameters("triple must start at s >= 0".into()));
        }
        let a = engine.advance_to(&GraphState::new(u0), s - ds)?;
        let b = engine.advance_to(&a, s)?;
        let c = engine.advance_to(&b, s + ds)?;
        let param = match engine.config.speed {
            FlowSpeed::Graphical => Parametrization::Graph,
            FlowSpeed::Normal => Parametrization::Normal,
        };
        Self::new(engine.mesh, engine.warp, [a.u, b.u, c.u], s, ds, engine.config.eps_sl, param)
    }

    pub fn center(&self) -> &GeometrySnapshot {
        &self.snaps[1]
    }

    /// Base-point drift of the normal trajectories; zero in graph parametrization.
    pub fn drift(&self, hcal: &PrescribedCurvature) -> Vec<Vec2> {
        self.center()
            .nodes
            .iter()
            .zip(&hcal.values)
            .map(|(n, h)| match self.param {
                Parametrization::Graph => [0.0; 2],
                Parametrization::Normal => {
                    let c = -(n.mean - h) * n.v;
                    [c * n.b[0], c * n.b[1]]
                }
            })
            .collect()
    }

    fn quotient(&self, k: usize, f: &dyn Fn(&GraphNode) -> f64) -> f64 {
        (f(&self.snaps[2].nodes[k]) - f(&self.snaps[0].nodes[k])) / (2.0 * self.ds)
    }

    /// ∂_s of a nodal scalar, transported along `drift`.
    fn ddt(&self, mesh: &BaseMesh, drift: &[Vec2], f: impl Fn(&GraphNode) -> f64) -> Vec<f64> {
        let center: Vec<f64> = self.center().nodes.iter().map(&f).collect();
        (0..mesh.len())
            .map(|k| self.quotient(k, &f) + dot(&drift[k], &mesh.jet_gradient(&center, k)))
            .collect()
    }

    /// ∂_s of a nodal symmetric 2-tensor plus its Lie derivative along `drift`.
    /// `upper` selects contravariant indices.
    fn ddt_mat(&self, mesh: &BaseMesh, drift: &[Vec2], upper: bool, f: impl Fn(&GraphNode) -> Mat2) -> Vec<Mat2> {
        let m = mesh.m;
        let c = self.center();
        let comp = |i: usize, j: usize| -> Vec<f64> { c.nodes.iter().map(|n| f(n)[i][j]).collect() };
        let mut grads = [[vec![[0.0; 2]; mesh.len()], vec![[0.0; 2]; mesh.len()]], [vec![[0.0; 2]; mesh.len()], vec![[0.0; 2]; mesh.len()]]];
        for (i, row) in grads.iter_mut().enumerate().take(m) {
            for (j, g) in row.iter_mut().enumerate().take(m) {
                let field = comp(i, j);
                *g = (0..mesh.len()).map(|k| mesh.jet_gradient(&field, k)).collect();
            }
        }
        let mut dw = vec![[[0.0; 2]; 2]; mesh.len()];
        for a in 0..m {
            let field: Vec<f64> = drift.iter().map(|x| x[a]).collect();
            for (k, d) in dw.iter_mut().enumerate() {
                d[a] = mesh.jet_gradient(&field, k);
            }
        }
        (0..mesh.len())
            .map(|k| {
                let t = f(&c.nodes[k]);
                let a = f(&self.snaps[0].nodes[k]);
                let b = f(&self.snaps[2].nodes[k]);
                let w = drift[k];
                // dw[k][a][i] = ∂_i W^a
                let d = &dw[k];
                let mut out = [[0.0; 2]; 2];
                for i in 0..m {
                    for j in 0..m {
                        let mut lie = 0.0;
                        for l in 0..m {
                            lie += w[l] * grads[i][j][k][l];
                            if upper {
                                lie -= t[l][j] * d[i][l] + t[i][l] * d[j][l];
                            } else {
                                lie += t[l][j] * d[l][i] + t[i][l] * d[l][j];
                            }
                        }
                        out[i][j] = (b[i][j] - a[i][j]) / (2.0 * self.ds) + lie;
                    }
                }
                out
            })
            .collect()
    }
}

fn h_err(snap: &GeometrySnapshot, hcal: &PrescribedCurvature) -> Vec<f64> {
    snap.nodes.iter().zip(&hcal.values).map(|(n, h)| n.mean - h).collect()
}

/// Which vector field plays V in V(H − 𝓗).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentField {
    /// V with DF(V) = (∂_t)^⊤, V^j = −g^ij u_i.
    Definition,
    /// The vector −g̃^ij u_i / f² displayed alongside the estimate for V(𝓗).
    Displayed,
}

/// ∂_s v − [V(H−𝓗) − (H−𝓗)f′/f + (H−𝓗)(f′/f)v²].
pub fn check_v_time_derivative(
    triple: &SnapshotTriple,
    mesh: &BaseMesh,
    hcal: &PrescribedCurvature,
    tangent: TangentField,
) -> ResidualReport {
    let c = triple.center();
    let phi = h_err(c, hcal);
    let dv = triple.ddt(mesh, &triple.drift(hcal), |x| x.v);
    let res = (0..mesh.len())
        .map(|k| {
            let n = &c.nodes[k];
            let dphi = mesh.jet_gradient(&phi, k);
            let vt = match tangent {
                TangentField::Definition => n.tangent_t,
                TangentField::Displayed => [-n.b[0], -n.b[1]],
            };
            let ratio = n.f1 / n.f;
            let rhs = dot(&vt, &dphi) - phi[k] * ratio + phi[k] * ratio * n.v * n.v;
            dv[k] - rhs
        })
        .collect();
    ResidualReport::from_field("v_time_derivative", res, mesh)
}

/// Sign of the two f″ terms on the right of the v evolution equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VEvolutionForm {
    /// +m(f″/f)v − (f″/f)|∇u|²v, as printed in the source.
    AsPrinted,
    /// −m(f″/f)v + (f″/f)|∇u|²v, re-derived; the two coincide when f″ = 0.
    Rederived,
}

/// (∂_s + Δ)v minus the full right-hand side of the v evolution equation.
pub fn check_v_evolution(
    triple: &SnapshotTriple,
    mesh: &BaseMesh,
    w: &WarpingFunction,
    hcal: &PrescribedCurvature,
    form: VEvolutionForm,
) -> ResidualReport {
    let c = triple.center();
    let m = mesh.m as f64;
    let v = c.v();
    let lap_v = apply_induced_laplacian(c, mesh, &v);
    let ric = ricci_normal(c, mesh, w, RicciMode::Direct);
    let dvs = triple.ddt(mesh, &triple.drift(hcal), |x| x.v);
    let sgn = match form {
        VEvolutionForm::AsPrinted => 1.0,
        VEvolutionForm::Rederived => -1.0,
    };
    let res = (0..mesh.len())
        .map(|k| {
            let n = &c.nodes[k];
            let hc = hcal.values[k];
            let dh = mesh.jet_gradient(&hcal.values, k);
            let dv = mesh.jet_gradient(&v, k);
            let r1 = n.f1 / n.f;
            let r2 = n.f2 / n.f;
            let gn = n.grad_norm2_g;
            let rhs = -n.h_norm2 * n.v - ric[k] * n.v - 2.0 * r1 * n.mean + r1 * hc
                - dot(&n.tangent_t, &dh)
                - r1 * hc * n.v * n.v
                + 2.0 * r1 * dot(&n.grad_u_g, &dv)
                + sgn * (m * r2 * n.v - r2 * gn * n.v)
                - r1 * r1 * gn * n.v
                - m * r1 * r1 * n.v;
            dvs[k] + lap_v[k] - rhs
        })
        .collect();
    ResidualReport::from_field("v_evolution", res, mesh)
}

/// ∂_s g_ij − 2(H−𝓗)h_ij and ∂_s g^ij + 2(H−𝓗)g^ik h_kl g^lj.
pub fn check_metric_evolution(
    triple: &SnapshotTriple,
    mesh: &BaseMesh,
    hcal: &PrescribedCurvature,
) -> (ResidualReport, ResidualReport) {
    let c = triple.center();
    let m = mesh.m;
    let phi = h_err(c, hcal);
    let drift = triple.drift(hcal);
    let dgs = triple.ddt_mat(mesh, &drift, false, |x| x.g);
    let dgis = triple.ddt_mat(mesh, &drift, true, |x| x.g_inv);
    let mut lower = Vec::with_capacity(mesh.len());
    let mut upper = Vec::with_capacity(mesh.len());
    for k in 0..mesh.len() {
        let n = &c.nodes[k];
        let (dg, dgi) = (dgs[k], dgis[k]);
        let want = crate::tensor::scale(&n.h, 2.0 * phi[k]);
        lower.push(max_abs_diff(m, &dg, &want));
        let raised = matmul(&matmul(&n.g_inv, &n.h), &n.g_inv);
        let want_inv = crate::tensor::scale(&raised, -2.0 * phi[k]);
        upper.push(max_abs_diff(m, &dgi, &want_inv));
    }
    (
        ResidualReport::from_field("metric_evolution", lower, mesh),
        ResidualReport::from_field("inverse_metric_evolution", upper, mesh),
    )
}

/// (∂_s + Δ)(H−𝓗) + (H−𝓗)(‖h‖² + Ric(μ,μ)).
pub fn check_mean_curvature_evolution(
    triple: &SnapshotTriple,
    mesh: &BaseMesh,
    w: &WarpingFunction,
    hcal: &PrescribedCurvature,
) -> ResidualReport {
    let c = triple.center();
    let phi = h_err(c, hcal);
    let lap = apply_induced_laplacian(c, mesh, &phi);
    let ric = ricci_normal(c, mesh, w, RicciMode::Direct);
    let dh = triple.ddt(mesh, &triple.drift(hcal), |x| x.mean);
    let res = (0..mesh.len())
        .map(|k| {
            let n = &c.nodes[k];
            dh[k] + lap[k] + phi[k] * (n.h_norm2 + ric[k])
        })
        .collect();
    ResidualReport::from_field("mean_curvature_evolution", res, mesh)
}

/// (∂_s + Δ)(H−𝓗)² + 2|∇(H−𝓗)|² + 2(H−𝓗)²(‖h‖² + Ric(μ,μ)).
pub fn check_mean_curvature_squared(
    triple: &SnapshotTriple,
    mesh: &BaseMesh,
    w: &WarpingFunction,
    hcal: &PrescribedCurvature,
) -> ResidualReport {
    let c = triple.center();
    let phi = h_err(c, hcal);
    let sq: Vec<f64> = phi.iter().map(|p| p * p).collect();
    let lap = apply_induced_laplacian(c, mesh, &sq);
    let ric = ricci_normal(c, mesh, w, RicciMode::Direct);
    // 𝓗 is held fixed in s at each base point, so ∂_s(H−𝓗)² = 2(H−𝓗)∂_s H.
    let dh = triple.ddt(mesh, &triple.drift(hcal), |x| x.mean);
    let res = (0..mesh.len())
        .map(|k| {
            let n = &c.nodes[k];
            let dphi = mesh.jet_gradient(&phi, k);
            let grad2 = quad(&n.g_inv, &dphi, &dphi);
            let dt = 2.0 * phi[k] * dh[k];
            dt + lap[k] + 2.0 * grad2 + 2.0 * sq[k] * (n.h_norm2 + ric[k])
        })
        .collect();
    ResidualReport::from_field("mean_curvature_squared", res, mesh)
}
