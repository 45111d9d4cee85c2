use super::ricci::{ricci_normal_at, RicciMode};
use crate::flow::PrescribedCurvature;
use crate::graph::GeometrySnapshot;
use crate::mesh::BaseMesh;
use crate::tensor::{dot, matmul, quad, sym_eigs};
use crate::warp::WarpingFunction;

/// One inequality with its computed constant and worst slack over nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyItem {
    pub name: String,
    pub constant: f64,
    /// max over nodes of lhs − rhs (≤ 0 when the inequality holds).
    pub worst: f64,
    pub pass: bool,
    /// Informational items document variants that are expected to fail.
    pub counted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub items: Vec<PropertyItem>,
}

impl PropertyReport {
    pub fn pass(&self) -> bool {
        self.items.iter().filter(|i| i.counted).all(|i| i.pass)
    }

    pub fn item(&self, name: &str) -> Option<&PropertyItem> {
        self.items.iter().find(|i| i.name == name)
    }
}

pub const EPSILONS: [f64; 3] = [0.1, 1.0, 10.0];

/// Round-off allowance in lhs ≤ rhs.
fn holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + 1e-12) + 1e-13
}

struct Acc {
    name: String,
    constant: f64,
    worst: f64,
    pass: bool,
    counted: bool,
}

impl Acc {
    fn new(name: &str, constant: f64, counted: bool) -> Self {
        Self { name: name.into(), constant, worst: f64::NEG_INFINITY, pass: true, counted }
    }
    fn push(&mut self, lhs: f64, rhs: f64) {
        self.worst = self.worst.max(lhs - rhs);
        self.pass &= holds(lhs, rhs);
    }
    fn done(self) -> PropertyItem {
        PropertyItem { name: self.name, constant: self.constant, worst: self.worst, pass: self.pass, counted: self.counted }
    }
}

/// The structural inequalities with explicit constants.
///
/// ∇v uses the chain rule on the 2-jet, so (a) is tested on the continuous
/// identity rather than on a difference quotient.
pub fn property_suite(
    snap: &GeometrySnapshot,
    mesh: &BaseMesh,
    w: &WarpingFunction,
    hcal: &PrescribedCurvature,
) -> PropertyReport {
    let m = mesh.m;
    let mf = m as f64;
    let (c1, c2, c3) = (w.c1, w.c2, w.c3);
    let c4 = mesh
        .nodes()
        .iter()
        .map(|g| {
            let (lo, hi) = sym_eigs(m, &matmul(&g.metric_inv, &g.ricci));
            lo.abs().max(hi.abs())
        })
        .fold(0.0, f64::max);
    let ginv_sup = mesh
        .nodes()
        .iter()
        .map(|g| sym_eigs(m, &g.metric_inv).1)
        .fold(0.0, f64::max);
    let c_ric = mf * c3 + c4 * c1.powi(-2).max(c1.powi(-4)) + c3 + (mf - 1.0) * c2 * c2;
    let c_ric_stated = mf * c3 + c4 / c1.powi(4) + c3 + (mf - 1.0) * c2 * c2;
    let c_v = ginv_sup.max(1.0) / c1;
    let hc1 = hcal.c1_norm(mesh);

    let mut a = Acc::new("a: |g(du,dv)| <= |h||du|^2 + c2|du|^2 v", c2, true);
    let mut b = Acc::new("b: |Ric(mu,mu)| <= c v^2", c_ric, true);
    let mut b_stated = Acc::new("b (stated constant c4/c1^4)", c_ric_stated, false);
    let mut cs: Vec<Acc> = EPSILONS
        .iter()
        .map(|e| Acc::new(&format!("c: |H + h(du,du)| <= eps v |h|^2 + (m+2) v^3/eps, eps={e}"), mf + 2.0, true))
        .collect();
    let mut cs_stated: Vec<Acc> = EPSILONS
        .iter()
        .map(|e| Acc::new(&format!("c (stated form eps v |h|), eps={e}"), mf + 2.0, false))
        .collect();
    let mut d = Acc::new("d: |b(H_presc)| <= c |du| |H_presc|_C1", c_v, true);
    let mut d_def = Acc::new("d': |V(H_presc)| <= c v |du| |H_presc|_C1", c_v, true);
    let mut e = Acc::new("e: |du|^2 <= v^2 and v >= 1", 1.0, true);

    for k in 0..mesh.len() {
        let n = &snap.nodes[k];
        let base = mesh.node(k);
        let gn = n.grad_norm2_g;
        let hn = n.h_norm2.sqrt();
        let gdv = dot(&n.grad_u_g, &n.dv);
        a.push(gdv.abs(), hn * gn + c2 * gn * n.v);
        let ric = ricci_normal_at(m, base, w, n, RicciMode::Direct);
        b.push(ric.abs(), c_ric * n.v * n.v);
        b_stated.push(ric.abs(), c_ric_stated * n.v * n.v);
        let lhs = (n.mean + quad(&n.h, &n.grad_u_g, &n.grad_u_g)).abs();
        for (i, eps) in EPSILONS.iter().enumerate() {
            let tail = (mf + 2.0) * n.v.powi(3) / eps;
            cs[i].push(lhs, eps * n.v * n.h_norm2 + tail);
            cs_stated[i].push(lhs, eps * n.v * hn + tail);
        }
        let dh = mesh.jet_gradient(&hcal.values, k);
        let grad = gn.sqrt();
        d.push(dot(&n.b, &dh).abs(), c_v * grad * hc1);
        d_def.push(dot(&n.tangent_t, &dh).abs(), c_v * n.v * grad * hc1);
        e.push(gn, n.v * n.v);
        e.push(1.0, n.v);
    }
    let mut items = vec![a.done(), b.done(), b_stated.done()];
    items.extend(cs.into_iter().map(Acc::done));
    items.extend(cs_stated.into_iter().map(Acc::done));
    items.extend([d.done(), d_def.done(), e.done()]);
    PropertyReport { items }
}
