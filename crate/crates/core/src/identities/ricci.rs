use crate::graph::{GeometrySnapshot, GraphNode};
use crate::mesh::{BaseMesh, NodeGeometry};
use crate::tensor::quad;
use crate::warp::{ambient_ricci, WarpingFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RicciMode {
    /// v²·[Ric(∂t,∂t) + 2bⁱRic(∂t,∂i) + bⁱbʲRic(∂i,∂j)] with the ambient tensor.
    Direct,
    /// σ·m v² f″/f + (v²/f⁴) ric̃(∇̃u,∇̃u) + (f″/f)|∇u|² + (m−1)(f′/f)²|∇u|².
    Closed { sigma: f64 },
}

/// Ric(μ, μ) at one node.
pub fn ricci_normal_at(m: usize, base: &NodeGeometry, w: &WarpingFunction, n: &GraphNode, mode: RicciMode) -> f64 {
    match mode {
        RicciMode::Direct => {
            let c = ambient_ricci(w, n.u, m, &base.metric, &base.ricci);
            n.v * n.v * c.ric_xx(1.0, &n.b)
        }
        RicciMode::Closed { sigma } => {
            let mf = m as f64;
            let v2 = n.v * n.v;
            let f4 = n.f.powi(4);
            sigma * mf * v2 * n.f2 / n.f
                + v2 / f4 * quad(&base.ricci, &n.du_up, &n.du_up)
                + n.f2 / n.f * n.grad_norm2_g
                + (mf - 1.0) * (n.f1 / n.f).powi(2) * n.grad_norm2_g
        }
    }
}

pub fn ricci_normal(snap: &GeometrySnapshot, mesh: &BaseMesh, w: &WarpingFunction, mode: RicciMode) -> Vec<f64> {
    (0..mesh.len())
        .map(|k| ricci_normal_at(snap.m, mesh.node(k), w, &snap.nodes[k], mode))
        .collect()
}
