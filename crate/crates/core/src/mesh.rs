//! Structured-grid discretization of the base manifold (M, g̃).

use crate::error::{GrwError, Result};
use crate::par;
use crate::tensor::{eye, inverse, quad, scale, Chris, Mat2, Vec2, ZERO2, ZERO22, ZERO222};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Torus: nodes at x = i·h, h = L/n, indices wrap modulo n.
    Periodic,
    /// Closed square [0, L]^m: nodes at x = i·h, h = L/(n−1), boundary included.
    DirichletRectangle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricSpec {
    Flat,
    /// g̃ = e^{2φ}δ with φ = A·Π_k sin(2π x_k / L).
    ConformalSine { amplitude: f64 },
    /// g̃ = e^{2φ}δ with a caller-supplied nodal φ.
    ConformalCustom,
}

/// Everything needed to rebuild a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSpec {
    pub m: usize,
    pub topology: Topology,
    pub n: usize,
    pub length: f64,
    pub metric: MetricSpec,
}

impl MeshSpec {
    pub fn new(m: usize, topology: Topology, n: usize, length: f64) -> Self {
        Self { m, topology, n, length, metric: MetricSpec::Flat }
    }

    pub fn conformal_sine(mut self, amplitude: f64) -> Self {
        self.metric = MetricSpec::ConformalSine { amplitude };
        self
    }

    pub fn build(&self) -> Result<BaseMesh> {
        let mut mesh = BaseMesh::flat(self.m, self.topology, self.n, self.length)?;
        match self.metric {
            MetricSpec::Flat => {}
            MetricSpec::ConformalSine { amplitude } => {
                if !amplitude.is_finite() {
                    return Err(GrwError::InvalidParameters("phi amplitude must be finite".into()));
                }
                let l = self.length;
                let m = self.m;
                let phi = mesh.sample(|x| {
                    let mut p = amplitude;
                    for xk in x.iter().take(m) {
                        p *= (std::f64::consts::TAU * xk / l).sin();
                    }
                    p
                });
                mesh.conformal_geometry(&phi)?;
                mesh.spec.metric = self.metric;
            }
            MetricSpec::ConformalCustom => {
                return Err(GrwError::InvalidParameters(
                    "custom conformal meshes are built with BaseMesh::conformal_geometry".into(),
                ))
            }
        }
        Ok(mesh)
    }
}

/// Base geometry at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGeometry {
    pub x: Vec2,
    pub metric: Mat2,
    pub metric_inv: Mat2,
    pub christoffel: Chris,
    pub ricci: Mat2,
    pub sqrt_det: f64,
    /// Coordinate distance to the boundary; infinite on the torus.
    pub x_bdy: f64,
}

#[derive(Debug, Clone)]
pub struct BaseMesh {
    pub spec: MeshSpec,
    pub m: usize,
    pub topology: Topology,
    pub n: usize,
    pub length: f64,
    pub h: f64,
    phi: Option<Vec<f64>>,
    nodes: Vec<NodeGeometry>,
}

/// One-axis stencil: (index offset, weight) pairs.
type Stencil<const K: usize> = [(isize, f64); K];

impl BaseMesh {
    pub fn flat(m: usize, topology: Topology, n: usize, length: f64) -> Result<Self> {
        if !(m == 1 || m == 2) {
            return Err(GrwError::InvalidParameters(format!("dimension m must be 1 or 2, got {m}")));
        }
        let min_n = match topology {
            Topology::Periodic => 3,
            Topology::DirichletRectangle => 4,
        };
        if n < min_n {
            return Err(GrwError::InvalidParameters(format!("need at least {min_n} nodes per axis, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(GrwError::InvalidParameters(format!("axis length must be positive, got {length}")));
        }
        let h = match topology {
            Topology::Periodic => length / n as f64,
            Topology::DirichletRectangle => length / (n - 1) as f64,
        };
        let total = n.pow(m as u32);
        let nodes = (0..total)
            .map(|node| {
                let (i, j) = (node % n, node / n);
                let x = [i as f64 * h, if m == 2 { j as f64 * h } else { 0.0 }];
                let x_bdy = match topology {
                    Topology::Periodic => f64::INFINITY,
                    Topology::DirichletRectangle => {
                        let mut d = f64::INFINITY;
                        for &idx in [i, j].iter().take(m) {
                            let lo = idx as f64 * h;
                            let hi = (n - 1 - idx) as f64 * h;
                            d = d.min(lo.min(hi));
                        }
                        d
                    }
                };
                NodeGeometry {
                    x,
                    metric: eye(m),
                    metric_inv: eye(m),
                    christoffel: ZERO222,
                    ricci: ZERO22,
                    sqrt_det: 1.0,
                    x_bdy,
                }
            })
            .collect();
        Ok(Self {
            spec: MeshSpec::new(m, topology, n, length),
            m,
            topology,
            n,
            length,
            h,
            phi: None,
            nodes,
        })
    }

    /// Replaces the metric by g̃ = e^{2φ}δ, with Γ̃ and ric̃ from discrete derivatives of φ.
    pub fn conformal_geometry(&mut self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.len() {
            return Err(GrwError::InvalidParameters("phi has the wrong number of nodes".into()));
        }
        if phi.iter().any(|p| !p.is_finite()) {
            return Err(GrwError::InvalidParameters("phi must be finite".into()));
        }
        let m = self.m;
        let mf = m as f64;
        let updated: Vec<NodeGeometry> = par::map_nodes(self.len(), |node| {
            let (dphi, d2phi) = self.jet(phi, node);
            let e2 = (2.0 * phi[node]).exp();
            let mut chris = ZERO222;
            for k in 0..m {
                for i in 0..m {
                    for j in 0..m {
                        let mut c = 0.0;
                        if k == i {
                            c += dphi[j];
                        }
                        if k == j {
                            c += dphi[i];
                        }
                        if i == j {
                            c -= dphi[k];
                        }
                        chris[k][i][j] = c;
                    }
                }
            }
            let lap0: f64 = (0..m).map(|k| d2phi[k][k]).sum();
            let grad2: f64 = (0..m).map(|k| dphi[k] * dphi[k]).sum();
            let mut ricci = ZERO22;
            for i in 0..m {
                for j in 0..m {
                    let mut r = -(mf - 2.0) * (d2phi[i][j] - dphi[i] * dphi[j]);
                    if i == j {
                        r -= lap0 + (mf - 2.0) * grad2;
                    }
                    ricci[i][j] = r;
                }
            }
            NodeGeometry {
                metric: scale(&eye(m), e2),
                metric_inv: scale(&eye(m), 1.0 / e2),
                christoffel: chris,
                ricci,
                sqrt_det: (mf * phi[node]).exp(),
                ..self.nodes[node]
            }
        });
        self.nodes = updated;
        self.phi = Some(phi.to_vec());
        self.spec.metric = MetricSpec::ConformalCustom;
        Ok(())
    }

    pub fn phi(&self) -> Option<&[f64]> {
        self.phi.as_deref()
    }

    pub fn is_flat(&self) -> bool {
        self.phi.is_none()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, node: usize) -> &NodeGeometry {
        &self.nodes[node]
    }

    pub fn nodes(&self) -> &[NodeGeometry] {
        &self.nodes
    }

    /// Volume of one grid cell, h^m.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.m as i32)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n * j
    }

    pub fn coords(&self, node: usize) -> (usize, usize) {
        (node % self.n, node / self.n)
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        if self.topology == Topology::Periodic {
            return false;
        }
        let (i, j) = self.coords(node);
        let last = self.n - 1;
        i == 0 || i == last || (self.m == 2 && (j == 0 || j == last))
    }

    /// Interior nodes for the rectangle, every node on the torus.
    pub fn active_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| !self.is_boundary(k)).collect()
    }

    /// Samples a function of the node coordinates.
    pub fn sample<F: Fn(Vec2) -> f64 + Sync + Send>(&self, f: F) -> Vec<f64> {
        par::map_nodes(self.len(), |k| f(self.nodes[k].x))
    }

    fn shift(&self, i: usize, off: isize) -> usize {
        match self.topology {
            Topology::Periodic => (i as isize + off).rem_euclid(self.n as isize) as usize,
            Topology::DirichletRectangle => (i as isize + off) as usize,
        }
    }

    fn d1_stencil(&self, i: usize) -> Stencil<3> {
        if self.topology == Topology::DirichletRectangle {
            if i == 0 {
                return [(0, -1.5), (1, 2.0), (2, -0.5)];
            }
            if i == self.n - 1 {
                return [(0, 1.5), (-1, -2.0), (-2, 0.5)];
            }
        }
        [(-1, -0.5), (0, 0.0), (1, 0.5)]
    }

    fn d2_stencil(&self, i: usize) -> Stencil<4> {
        if self.topology == Topology::DirichletRectangle {
            if i == 0 {
                return [(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)];
            }
            if i == self.n - 1 {
                return [(0, 2.0), (-1, -5.0), (-2, 4.0), (-3, -1.0)];
            }
        }
        [(-1, 1.0), (0, -2.0), (1, 1.0), (0, 0.0)]
    }

    fn along(&self, node: usize, axis: usize, off: isize) -> usize {
        let (i, j) = self.coords(node);
        if axis == 0 {
            self.index(self.shift(i, off), j)
        } else {
            self.index(i, self.shift(j, off))
        }
    }

    /// ∂_a φ at one node.
    pub fn partial(&self, phi: &[f64], node: usize, axis: usize) -> f64 {
        let (i, j) = self.coords(node);
        let pos = if axis == 0 { i } else { j };
        let mut acc = 0.0;
        for (off, w) in self.d1_stencil(pos) {
            if w != 0.0 {
                acc += w * phi[self.along(node, axis, off)];
            }
        }
        acc / self.h
    }

    /// ∂_a∂_b φ at one node. Mixed entries compose the two first-derivative
    /// stencils, which is the 4-point cross in the interior and exactly symmetric.
    pub fn second_partial(&self, phi: &[f64], node: usize, a: usize, b: usize) -> f64 {
        let (i, j) = self.coords(node);
        let h2 = self.h * self.h;
        if a == b {
            let pos = if a == 0 { i } else { j };
            let mut acc = 0.0;
            for (off, w) in self.d2_stencil(pos) {
                if w != 0.0 {
                    acc += w * phi[self.along(node, a, off)];
                }
            }
            return acc / h2;
        }
        let mut acc = 0.0;
        for (ox, wx) in self.d1_stencil(i) {
            if wx == 0.0 {
                continue;
            }
            let ii = self.shift(i, ox);
            for (oy, wy) in self.d1_stencil(j) {
                if wy != 0.0 {
                    acc += wx * wy * phi[self.index(ii, self.shift(j, oy))];
                }
            }
        }
        acc / h2
    }

    /// Discrete gradient and plain second partials at one node.
    pub fn jet(&self, phi: &[f64], node: usize) -> (Vec2, Mat2) {
        let mut d = ZERO2;
        let mut dd = ZERO22;
        for a in 0..self.m {
            d[a] = self.partial(phi, node, a);
            for b in a..self.m {
                let v = self.second_partial(phi, node, a, b);
                dd[a][b] = v;
                dd[b][a] = v;
            }
        }
        (d, dd)
    }

    /// Covariant Hessian φ_ij − Γ̃^k_ij φ_k at one node.
    pub fn tilde_hessian_at(&self, phi: &[f64], node: usize) -> Mat2 {
        let (d, mut dd) = self.jet(phi, node);
        let chris = &self.nodes[node].christoffel;
        for i in 0..self.m {
            for j in 0..self.m {
                for (k, dk) in d.iter().enumerate().take(self.m) {
                    dd[i][j] -= chris[k][i][j] * dk;
                }
            }
        }
        dd
    }

    /// Covariant components φ_i and contravariant g̃^ij φ_j.
    pub fn tilde_gradient(&self, phi: &[f64]) -> (Vec<Vec2>, Vec<Vec2>) {
        let cov: Vec<Vec2> = par::map_nodes(self.len(), |k| self.jet_gradient(phi, k));
        let contra = par::map_nodes(self.len(), |k| crate::tensor::mat_vec(&self.nodes[k].metric_inv, &cov[k]));
        (cov, contra)
    }

    pub fn jet_gradient(&self, phi: &[f64], node: usize) -> Vec2 {
        let mut d = ZERO2;
        for (a, da) in d.iter_mut().enumerate().take(self.m) {
            *da = self.partial(phi, node, a);
        }
        d
    }

    pub fn tilde_hessian(&self, phi: &[f64]) -> Vec<Mat2> {
        par::map_nodes(self.len(), |k| self.tilde_hessian_at(phi, k))
    }

    /// Minimal-image coordinate displacement between two nodes.
    fn displacement(&self, p: usize, q: usize) -> Vec2 {
        let (pi, pj) = self.coords(p);
        let (qi, qj) = self.coords(q);
        let wrap = |a: usize, b: usize| {
            let mut d = b as isize - a as isize;
            if self.topology == Topology::Periodic {
                let n = self.n as isize;
                d = d.rem_euclid(n);
                if d > n / 2 {
                    d -= n;
                }
            }
            d as f64 * self.h
        };
        [wrap(pi, qi), if self.m == 2 { wrap(pj, qj) } else { 0.0 }]
    }

    /// Discrete distance: g̃-length of the coordinate displacement, with g̃
    /// averaged over the two end nodes.
    pub fn node_distance(&self, p: usize, q: usize) -> f64 {
        let d = self.displacement(p, q);
        let ga = &self.nodes[p].metric;
        let gb = &self.nodes[q].metric;
        (0.5 * (quad(ga, &d, &d) + quad(gb, &d, &d))).sqrt()
    }

    /// max |φ(p) − φ(q)| / d(p, q)^α over node pairs with 0 < d ≤ δ_loc.
    pub fn holder_seminorm(&self, phi: &[f64], alpha: f64, delta_loc: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(GrwError::InvalidParameters(format!("Hölder exponent must lie in (0,1), got {alpha}")));
        }
        if !(delta_loc > 0.0 && delta_loc.is_finite()) {
            return Err(GrwError::InvalidParameters(format!("locality radius must be positive, got {delta_loc}")));
        }
        let lam_min = self
            .nodes
            .iter()
            .map(|g| crate::tensor::sym_eigs(self.m, &g.metric).0)
            .fold(f64::INFINITY, f64::min);
        let reach = (delta_loc / lam_min.sqrt() / self.h).ceil() as isize;
        let reach = match self.topology {
            Topology::Periodic => reach.min(self.n as isize / 2),
            Topology::DirichletRectangle => reach.min(self.n as isize - 1),
        };
        let jr = if self.m == 2 { reach } else { 0 };
        let n = self.n as isize;
        Ok(par::max_nodes(self.len(), |p| {
            let (pi, pj) = self.coords(p);
            let mut best: f64 = 0.0;
            for dj in -jr..=jr {
                for di in -reach..=reach {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (qi, qj) = (pi as isize + di, pj as isize + dj);
                    let q = match self.topology {
                        Topology::Periodic => self.index(qi.rem_euclid(n) as usize, qj.rem_euclid(n) as usize),
                        Topology::DirichletRectangle => {
                            if qi < 0 || qi >= n || qj < 0 || qj >= n {
                                continue;
                            }
                            self.index(qi as usize, qj as usize)
                        }
                    };
                    if q == p {
                        continue;
                    }
                    let d = self.node_distance(p, q);
                    if d <= delta_loc && d > 0.0 {
                        best = best.max((phi[p] - phi[q]).abs() / d.powf(alpha));
                    }
                }
            }
            best
        })
        .max(0.0))
    }

    /// sup x_bdy^ε |φ| on the rectangle.
    pub fn weighted_sup_norm(&self, phi: &[f64], eps: f64) -> Result<f64> {
        if self.topology != Topology::DirichletRectangle {
            return Err(GrwError::WrongTopology { expected: "dirichlet-rectangle" });
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(GrwError::InvalidParameters(format!("weight exponent must be non-negative, got {eps}")));
        }
        Ok(par::max_nodes(self.len(), |k| self.nodes[k].x_bdy.powf(eps) * phi[k].abs()).max(0.0))
    }

    /// Inverse of g̃ by direct inversion, for invariant checks.
    pub fn metric_identity_error(&self) -> f64 {
        self.nodes
            .iter()
            .map(|g| {
                let prod = crate::tensor::matmul(&g.metric, &g.metric_inv);
                crate::tensor::max_abs_diff(self.m, &prod, &eye(self.m))
                    .max(crate::tensor::max_abs_diff(self.m, &g.metric_inv, &inverse(self.m, &g.metric)))
            })
            .fold(0.0, f64::max)
    }
}
