//! Extrinsic geometry of the graph {(u(p), p)} in the warped product.

use crate::error::{GrwError, Result};
use crate::mesh::{BaseMesh, NodeGeometry};
use crate::par;
use crate::tensor::{
    add, det, eye, frob, inverse, mat_vec, matmul, max_abs_diff, norm2_cov, outer, quad, scale,
    sym_eigs, Mat2, Vec2, ZERO2, ZERO22,
};
use crate::warp::WarpingFunction;

/// Default relative space-likeness margin: require f² − |∇̃u|² > ε_sl·f².
pub const DEFAULT_EPS_SL: f64 = 1e-6;

/// The evolving unknown: height u over the base and flow time s.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphState {
    pub u: Vec<f64>,
    pub s: f64,
}

impl GraphState {
    pub fn new(u: Vec<f64>) -> Self {
        Self { u, s: 0.0 }
    }
}

/// Derived geometry at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphNode {
    pub u: f64,
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
    /// Covariant u_i.
    pub du: Vec2,
    /// ∇̃u = g̃^ij u_j.
    pub du_up: Vec2,
    /// Covariant base Hessian ũ_ij.
    pub hess: Mat2,
    /// |∇̃u|²_g̃.
    pub grad_norm2_tilde: f64,
    /// f² − |∇̃u|²_g̃.
    pub radicand: f64,
    pub v: f64,
    pub g: Mat2,
    pub g_inv: Mat2,
    /// Contravariant ∇u with respect to g.
    pub grad_u_g: Vec2,
    /// |∇u|²_g.
    pub grad_norm2_g: f64,
    /// Spatial components of the unit normal divided by v: b^j = g̃^ij u_i / f².
    pub b: Vec2,
    /// V with DF(V) = (∂_t)^⊤, i.e. V^j = −g^ij u_i = −v² b^j.
    pub tangent_t: Vec2,
    pub h: Mat2,
    pub mean: f64,
    pub h_norm2: f64,
    pub vol_density: f64,
    /// ∇v by the chain rule from the jet (u, u_i, ũ_ij).
    pub dv: Vec2,
}

impl GraphNode {
    /// Pointwise geometry from a base point and a 2-jet of u.
    ///
    /// Returns the radicand on failure of the space-likeness guard.
    pub fn from_jet(
        m: usize,
        base: &NodeGeometry,
        w: &WarpingFunction,
        u: f64,
        du: Vec2,
        hess: Mat2,
        eps_sl: f64,
    ) -> std::result::Result<Self, (f64, f64)> {
        let (f, f1, f2) = w.eval(u);
        let f_sq = f * f;
        let du_up = mat_vec(&base.metric_inv, &du);
        let q = crate::tensor::dot(&du, &du_up);
        let r = f_sq - q;
        let margin = eps_sl * f_sq;
        if !(r > margin) || !r.is_finite() {
            return Err((r, margin));
        }
        let sr = r.sqrt();
        let v = f / sr;
        let g = add(&scale(&outer(&du, &du), -1.0), &scale(&base.metric, f_sq));
        let g_inv = add(
            &scale(&base.metric_inv, 1.0 / f_sq),
            &scale(&outer(&du_up, &du_up), 1.0 / (f_sq * r)),
        );
        let grad_u_g = [du_up[0] / r, du_up[1] / r];
        let b = [du_up[0] / f_sq, du_up[1] / f_sq];
        let tangent_t = [-du_up[0] / r, -du_up[1] / r];
        let ratio = f1 / f;
        let mut h = ZERO22;
        for i in 0..m {
            for j in 0..m {
                h[i][j] = -v * (hess[i][j] - 2.0 * ratio * du[i] * du[j] + f * f1 * base.metric[i][j]);
            }
        }
        let mean = frob(&g_inv, &h);
        let h_norm2 = norm2_cov(&h, &g_inv);
        // ∂_i q = 2 ũ^j ũ_ji, ∂_i r = 2ff′u_i − ∂_i q
        let dq = mat_vec(&hess, &du_up);
        let mut dv = ZERO2;
        for i in 0..m {
            let dr = 2.0 * f * f1 * du[i] - 2.0 * dq[i];
            dv[i] = f1 * du[i] / sr - 0.5 * f * dr / (r * sr);
        }
        Ok(Self {
            u,
            f,
            f1,
            f2,
            du,
            du_up,
            hess,
            grad_norm2_tilde: q,
            radicand: r,
            v,
            g,
            g_inv,
            grad_u_g,
            grad_norm2_g: q / r,
            b,
            tangent_t,
            h,
            mean,
            h_norm2,
            vol_density: f.powi(m as i32) / v,
            dv,
        })
    }

    /// Largest eigenvalue of g^ij, the second-order symbol of Δ.
    pub fn symbol_max(&self, m: usize) -> f64 {
        sym_eigs(m, &self.g_inv).1
    }
}

/// Immutable per-node geometry of one graph state.
#[derive(Debug, Clone)]
pub struct GeometrySnapshot {
    pub m: usize,
    pub eps_sl: f64,
    pub nodes: Vec<GraphNode>,
}

impl GeometrySnapshot {
    pub fn build(mesh: &BaseMesh, w: &WarpingFunction, u: &[f64], eps_sl: f64) -> Result<Self> {
        if u.len() != mesh.len() {
            return Err(GrwError::InvalidParameters(format!(
                "field has {} nodes, mesh has {}",
                u.len(),
                mesh.len()
            )));
        }
        let m = mesh.m;
        let nodes = par::try_map_nodes(mesh.len(), |k| {
            let du = mesh.jet_gradient(u, k);
            let hess = mesh.tilde_hessian_at(u, k);
            GraphNode::from_jet(m, mesh.node(k), w, u[k], du, hess, eps_sl).map_err(
                |(radicand, margin)| GrwError::NotSpacelike { node: k, radicand, margin },
            )
        })?;
        Ok(Self { m, eps_sl, nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn field<F: Fn(&GraphNode) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes.iter().map(f).collect()
    }

    pub fn v(&self) -> Vec<f64> {
        self.field(|n| n.v)
    }

    pub fn mean_curvature(&self) -> Vec<f64> {
        self.field(|n| n.mean)
    }

    pub fn h_norm2(&self) -> Vec<f64> {
        self.field(|n| n.h_norm2)
    }

    pub fn volume_density(&self) -> Vec<f64> {
        self.field(|n| n.vol_density)
    }

    /// Λ_max: largest eigenvalue of g^ij over all nodes.
    pub fn lambda_max(&self) -> f64 {
        let m = self.m;
        par::max_nodes(self.len(), |k| self.nodes[k].symbol_max(m))
    }

    /// Worst violation of the pointwise invariants of a space-like snapshot.
    pub fn invariant_errors(&self) -> SnapshotInvariants {
        let m = self.m;
        let mut out = SnapshotInvariants::default();
        for n in &self.nodes {
            out.min_v = out.min_v.min(n.v);
            out.grad_norm = out.grad_norm.max((n.grad_norm2_g - (n.v * n.v - 1.0)).abs());
            out.ric_identity = out.ric_identity.max(
                (n.v * n.v * n.grad_norm2_tilde - n.f * n.f * n.grad_norm2_g).abs(),
            );
            out.metric_inverse = out
                .metric_inverse
                .max(max_abs_diff(m, &matmul(&n.g, &n.g_inv), &eye(m)));
            for j in 0..m {
                out.tangent = out.tangent.max((n.tangent_t[j] + n.v * n.v * n.b[j]).abs());
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotInvariants {
    pub min_v: f64,
    /// max | |∇u|²_g − (v² − 1) |
    pub grad_norm: f64,
    /// max | v²|∇̃u|² − f²|∇u|²_g |
    pub ric_identity: f64,
    /// max |g·g⁻¹ − I|
    pub metric_inverse: f64,
    /// max |V^j + v² b^j|
    pub tangent: f64,
}

impl Default for SnapshotInvariants {
    fn default() -> Self {
        Self { min_v: f64::INFINITY, grad_norm: 0.0, ric_identity: 0.0, metric_inverse: 0.0, tangent: 0.0 }
    }
}

/// g_ij = −u_i u_j + f(u)² g̃_ij; fails if some nodal g is not positive definite.
pub fn induced_metric(mesh: &BaseMesh, w: &WarpingFunction, u: &[f64]) -> Result<Vec<Mat2>> {
    let m = mesh.m;
    par::try_map_nodes(mesh.len(), |k| {
        let du = mesh.jet_gradient(u, k);
        let (f, _, _) = w.eval(u[k]);
        let g = add(&scale(&outer(&du, &du), -1.0), &scale(&mesh.node(k).metric, f * f));
        let lo = sym_eigs(m, &g).0;
        if lo > 0.0 {
            Ok(g)
        } else {
            Err(GrwError::NotSpacelike { node: k, radicand: lo, margin: 0.0 })
        }
    })
}

/// g^ij in closed form.
pub fn inverse_metric(mesh: &BaseMesh, w: &WarpingFunction, u: &[f64]) -> Result<Vec<Mat2>> {
    Ok(GeometrySnapshot::build(mesh, w, u, 0.0)?.nodes.iter().map(|n| n.g_inv).collect())
}

/// v = f/√(f² − |∇̃u|²).
pub fn gradient_function(mesh: &BaseMesh, w: &WarpingFunction, u: &[f64]) -> Result<Vec<f64>> {
    Ok(GeometrySnapshot::build(mesh, w, u, 0.0)?.v())
}

pub fn second_fundamental_form(mesh: &BaseMesh, w: &WarpingFunction, u: &[f64]) -> Result<Vec<Mat2>> {
    Ok(GeometrySnapshot::build(mesh, w, u, 0.0)?.nodes.iter().map(|n| n.h).collect())
}

/// Δφ in non-divergence form, assembled from Δ̃, Δ̂ and the first-order
/// corrections. Positive-operator convention: Δ = −trace of the Hessian.
pub fn apply_induced_laplacian(snap: &GeometrySnapshot, mesh: &BaseMesh, phi: &[f64]) -> Vec<f64> {
    let m = snap.m;
    let mf = m as f64;
    par::map_nodes(mesh.len(), |k| {
        let n = &snap.nodes[k];
        let base = mesh.node(k);
        let dphi = mesh.jet_gradient(phi, k);
        let hphi = mesh.tilde_hessian_at(phi, k);
        let r = n.radicand;
        let f_sq = n.f * n.f;
        let lap_tilde = |hs: &Mat2| -frob(&base.metric_inv, hs);
        let lap_hat = |hs: &Mat2| -quad(hs, &n.du_up, &n.du_up) / r;
        let p = crate::tensor::dot(&n.du_up, &dphi);
        (lap_tilde(&hphi) + lap_hat(&hphi)) / f_sq
            + p * (lap_tilde(&n.hess) + lap_hat(&n.hess)) / (f_sq * r)
            - (mf - 1.0) * p * n.f1 / (n.f * r)
            + p * n.f * n.f1 / (r * r)
    })
}

/// Δφ = −(1/√det g) ∂_i(√det g · g^ij ∂_j φ), with nodal fluxes.
pub fn divergence_laplacian(snap: &GeometrySnapshot, mesh: &BaseMesh, phi: &[f64]) -> Vec<f64> {
    let m = snap.m;
    let sqrt_g: Vec<f64> = (0..mesh.len())
        .map(|k| mesh.node(k).sqrt_det * snap.nodes[k].vol_density)
        .collect();
    let flux: Vec<Vec2> = par::map_nodes(mesh.len(), |k| {
        let d = mesh.jet_gradient(phi, k);
        let up = mat_vec(&snap.nodes[k].g_inv, &d);
        [sqrt_g[k] * up[0], sqrt_g[k] * up[1]]
    });
    let comps: Vec<Vec<f64>> = (0..m).map(|a| flux.iter().map(|x| x[a]).collect()).collect();
    par::map_nodes(mesh.len(), |k| {
        let mut div = 0.0;
        for (a, c) in comps.iter().enumerate() {
            div += mesh.partial(c, k, a);
        }
        -div / sqrt_g[k]
    })
}

/// |f^m/v − √det g/√det g̃| per node.
pub fn volume_density_check(snap: &GeometrySnapshot, mesh: &BaseMesh) -> Vec<f64> {
    let m = snap.m;
    (0..mesh.len())
        .map(|k| {
            let n = &snap.nodes[k];
            let by_det = det(m, &n.g).sqrt() / mesh.node(k).sqrt_det;
            (n.vol_density - by_det).abs()
        })
        .collect()
}

/// Norms |g|²_g̃ and |g̃|²_g from the closed formulas and by direct contraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricNorms {
    pub g_in_tilde: f64,
    pub tilde_in_g: f64,
    pub g_in_tilde_direct: f64,
    pub tilde_in_g_direct: f64,
}

pub fn metric_equivalence_constants(snap: &GeometrySnapshot, mesh: &BaseMesh) -> Vec<MetricNorms> {
    let mf = snap.m as f64;
    (0..mesh.len())
        .map(|k| {
            let n = &snap.nodes[k];
            let base = mesh.node(k);
            let f2 = n.f * n.f;
            let v2 = n.v * n.v;
            MetricNorms {
                g_in_tilde: (f2 / v2).powi(2) + f2 * f2 * (mf - 1.0),
                tilde_in_g: (mf - 1.0 + v2 * v2) / (f2 * f2),
                g_in_tilde_direct: norm2_cov(&n.g, &base.metric_inv),
                tilde_in_g_direct: norm2_cov(&base.metric, &n.g_inv),
            }
        })
        .collect()
}

/// |A(Y, Z)| ≤ |A|·|Y|·|Z| at every node, norms taken in `metric`.
pub fn tensor_pairing_bound_check(
    m: usize,
    a: &[Mat2],
    y: &[Vec2],
    z: &[Vec2],
    metric: &[Mat2],
) -> bool {
    (0..a.len()).all(|k| {
        let p = inverse(m, &metric[k]);
        let lhs = quad(&a[k], &y[k], &z[k]).abs();
        let rhs = norm2_cov(&a[k], &p).sqrt()
            * quad(&metric[k], &y[k], &y[k]).sqrt()
            * quad(&metric[k], &z[k], &z[k]).sqrt();
        lhs <= rhs * (1.0 + 1e-12) + f64::MIN_POSITIVE
    })
}

/// Residual of v·h_ij = −(u_ij − Γ^k_ij u_k) − f f′ g̃_ij, with Γ the
/// Christoffels of g from finite differences of the nodal g_ij.
/// Returns the largest absolute component per node.
pub fn cross_check_h(snap: &GeometrySnapshot, mesh: &BaseMesh, u: &[f64]) -> Vec<f64> {
    let m = snap.m;
    let comp = |i: usize, j: usize| -> Vec<f64> { snap.nodes.iter().map(|n| n.g[i][j]).collect() };
    let gij: Vec<Vec<Vec<f64>>> = (0..m).map(|i| (0..m).map(|j| comp(i, j)).collect()).collect();
    par::map_nodes(mesh.len(), |k| {
        let n = &snap.nodes[k];
        // dg[l][i][j] = ∂_l g_ij
        let mut dg = [[[0.0; 2]; 2]; 2];
        for l in 0..m {
            for i in 0..m {
                for j in 0..m {
                    dg[l][i][j] = mesh.partial(&gij[i][j], k, l);
                }
            }
        }
        let (du, d2u) = mesh.jet(u, k);
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let mut corr = 0.0;
                for kk in 0..m {
                    let mut gam = 0.0;
                    for l in 0..m {
                        gam += 0.5 * n.g_inv[kk][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                    }
                    corr += gam * du[kk];
                }
                let res = n.v * n.h[i][j] + (d2u[i][j] - corr) + n.f * n.f1 * mesh.node(k).metric[i][j];
                worst = worst.max(res.abs());
            }
        }
        worst
    })
}
