//! Warp and base-mesh geometry against finite differences of the metric itself.

use std::f64::consts::{PI, TAU};

use grwflow::identities::fit_order;
use grwflow::mesh::{BaseMesh, MeshSpec, Topology};
use grwflow::warp::{ambient_christoffels, ambient_ricci, WarpKind, WarpingFunction};

type Metric = dyn Fn(&[f64]) -> Vec<Vec<f64>>;

fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, p);
        inv.swap(c, p);
        let d = m[c][c];
        for j in 0..n {
            m[c][j] /= d;
            inv[c][j] /= d;
        }
        for r in 0..n {
            if r != c {
                let k = m[r][c];
                for j in 0..n {
                    m[r][j] -= k * m[c][j];
                    inv[r][j] -= k * inv[c][j];
                }
            }
        }
    }
    inv
}

fn shifted(x: &[f64], a: usize, d: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[a] += d;
    y
}

/// Γ^k_ij from central differences of g with step e.
fn christoffel(g: &Metric, x: &[f64], e: f64) -> Vec<Vec<Vec<f64>>> {
    let n = x.len();
    let gi = invert(&g(x));
    let dg: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|a| {
            let p = g(&shifted(x, a, e));
            let q = g(&shifted(x, a, -e));
            (0..n).map(|i| (0..n).map(|j| (p[i][j] - q[i][j]) / (2.0 * e)).collect()).collect()
        })
        .collect();
    (0..n)
        .map(|k| {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            (0..n).map(|l| 0.5 * gi[k][l] * (dg[i][l][j] + dg[j][l][i] - dg[l][i][j])).sum()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// R_bd = ∂_a Γ^a_bd − ∂_d Γ^a_ba + Γ^a_ae Γ^e_bd − Γ^a_de Γ^e_ba.
fn ricci(g: &Metric, x: &[f64], e: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let c = christoffel(g, x, e * 1e-2);
    let dc: Vec<Vec<Vec<Vec<f64>>>> = (0..n)
        .map(|a| {
            let p = christoffel(g, &shifted(x, a, e), e * 1e-2);
            let q = christoffel(g, &shifted(x, a, -e), e * 1e-2);
            (0..n)
                .map(|k| (0..n).map(|i| (0..n).map(|j| (p[k][i][j] - q[k][i][j]) / (2.0 * e)).collect()).collect())
                .collect()
        })
        .collect();
    let mut r = vec![vec![0.0; n]; n];
    for b in 0..n {
        for d in 0..n {
            let mut s = 0.0;
            for a in 0..n {
                s += dc[a][a][b][d] - dc[d][a][b][a];
                for e2 in 0..n {
                    s += c[a][a][e2] * c[e2][b][d] - c[a][d][e2] * c[e2][b][a];
                }
            }
            r[b][d] = s;
        }
    }
    r
}

fn phi(x: &[f64]) -> f64 {
    0.2 * x[0].sin() * (0.5 * x[1]).cos() + 0.1 * x[1].sin()
}

fn base_metric(x: &[f64]) -> Vec<Vec<f64>> {
    let e = (2.0 * phi(x)).exp();
    vec![vec![e, 0.0], vec![0.0, e]]
}

fn to_mat(a: &[Vec<f64>]) -> [[f64; 2]; 2] {
    [[a[0][0], a[0][1]], [a[1][0], a[1][1]]]
}

#[test]
fn ambient_christoffels_and_ricci_match_metric_differences() {
    let warps = [
        WarpingFunction::new(WarpKind::Sinusoidal { a: 2.0, b: 0.7, omega: 1.3 }).unwrap(),
        WarpingFunction::new(WarpKind::Tanh { a: 2.0, b: -1.0 }).unwrap(),
    ];
    for w in warps {
        let full = move |y: &[f64]| -> Vec<Vec<f64>> {
            let (f, _, _) = w.eval(y[0]);
            let gt = base_metric(&y[1..]);
            let mut g = vec![vec![0.0; 3]; 3];
            g[0][0] = -1.0;
            for i in 0..2 {
                for j in 0..2 {
                    g[i + 1][j + 1] = f * f * gt[i][j];
                }
            }
            g
        };
        for &pt in &[[0.3, 0.4, 1.1], [-0.8, 2.0, -0.5]] {
            let x = &pt[1..];
            let ct = christoffel(&base_metric, x, 1e-5);
            let mut gamma_t = [[[0.0; 2]; 2]; 2];
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        gamma_t[k][i][j] = ct[k][i][j];
                    }
                }
            }
            let gt = to_mat(&base_metric(x));
            let table = ambient_christoffels(&w, pt[0], 2, &gt, &gamma_t);
            let oracle = christoffel(&full, &pt, 1e-5);
            for a in 0..3 {
                for b in 0..3 {
                    for c in 0..3 {
                        assert!((table.gamma[a][b][c] - oracle[a][b][c]).abs() < 1e-7, "Γ^{a}_{b}{c}");
                    }
                }
            }
            let ric_t = to_mat(&ricci(&base_metric, x, 1e-3));
            let curv = ambient_ricci(&w, pt[0], 2, &gt, &ric_t).full();
            let oracle = ricci(&full, &pt, 1e-3);
            for a in 0..3 {
                for b in 0..3 {
                    assert!((curv[a][b] - oracle[a][b]).abs() < 1e-5, "Ric_{a}{b}: {} vs {}", curv[a][b], oracle[a][b]);
                }
            }
        }
    }
}

#[test]
fn conformal_mesh_geometry_converges_to_metric_oracle() {
    let mut errs = Vec::new();
    for n in [16, 32, 64] {
        let mut mesh = BaseMesh::flat(2, Topology::Periodic, n, TAU * 2.0).unwrap();
        let field = mesh.sample(|x| phi(&x));
        mesh.conformal_geometry(&field).unwrap();
        let mut worst: f64 = 0.0;
        for k in (0..mesh.len()).step_by(7) {
            let node = mesh.node(k);
            let ct = christoffel(&base_metric, &node.x, 1e-5);
            let rt = ricci(&base_metric, &node.x, 1e-3);
            for a in 0..2 {
                for b in 0..2 {
                    worst = worst.max((node.ricci[a][b] - rt[a][b]).abs());
                    for c in 0..2 {
                        worst = worst.max((node.christoffel[a][b][c] - ct[a][b][c]).abs());
                    }
                }
            }
        }
        errs.push((mesh.h, worst));
    }
    let order = fit_order(&errs).unwrap();
    assert!(order >= 1.9, "{errs:?} order {order}");
}

#[test]
fn sine_base_metric_identity_and_volume() {
    let mesh = MeshSpec::new(2, Topology::Periodic, 24, TAU).conformal_sine(0.1).build().unwrap();
    assert!(mesh.metric_identity_error() < 1e-13);
    for k in 0..mesh.len() {
        let n = mesh.node(k);
        assert!((n.sqrt_det - (n.metric[0][0] * n.metric[1][1]).sqrt()).abs() < 1e-13);
    }
}

fn stencil_errors(topology: Topology, length: f64) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let (mut first, mut second) = (Vec::new(), Vec::new());
    let kx = 2.0 * PI / length;
    for n in [16, 32, 64, 128] {
        let mesh = BaseMesh::flat(2, topology, n, length).unwrap();
        let u = mesh.sample(|x| (kx * x[0]).sin() * (kx * x[1] + 0.3).cos());
        let (mut e1, mut e2) = (0.0f64, 0.0f64);
        for k in 0..mesh.len() {
            let x = mesh.node(k).x;
            let (s0, c0) = ((kx * x[0]).sin(), (kx * x[0]).cos());
            let (s1, c1) = ((kx * x[1] + 0.3).sin(), (kx * x[1] + 0.3).cos());
            let exact_d = [kx * c0 * c1, -kx * s0 * s1];
            let exact_h = [[-kx * kx * s0 * c1, -kx * kx * c0 * s1], [-kx * kx * c0 * s1, -kx * kx * s0 * c1]];
            for a in 0..2 {
                e1 = e1.max((mesh.partial(&u, k, a) - exact_d[a]).abs());
                for b in 0..2 {
                    e2 = e2.max((mesh.second_partial(&u, k, a, b) - exact_h[a][b]).abs());
                }
            }
        }
        first.push((mesh.h, e1));
        second.push((mesh.h, e2));
    }
    (first, second)
}

#[test]
fn stencil_orders_on_torus_and_rectangle() {
    for (topology, length) in [(Topology::Periodic, TAU), (Topology::DirichletRectangle, 1.0)] {
        let (first, second) = stencil_errors(topology, length);
        let o1 = fit_order(&first[1..]).unwrap();
        let o2 = fit_order(&second[1..]).unwrap();
        assert!(o1 >= 1.9, "{topology:?} first {first:?}");
        assert!(o2 >= 1.9, "{topology:?} second {second:?}");
    }
}

#[test]
fn derivatives_commute_with_torus_translations() {
    let mesh = BaseMesh::flat(2, Topology::Periodic, 20, TAU).unwrap();
    let u = mesh.sample(|x| (x[0] + 0.2 * x[1]).sin().exp());
    let shift = |f: &[f64]| -> Vec<f64> {
        (0..mesh.len())
            .map(|k| {
                let (i, j) = mesh.coords(k);
                f[mesh.index((i + 3) % mesh.n, (j + 5) % mesh.n)]
            })
            .collect()
    };
    let su = shift(&u);
    for a in 0..2 {
        let du: Vec<f64> = (0..mesh.len()).map(|k| mesh.partial(&u, k, a)).collect();
        let dsu: Vec<f64> = (0..mesh.len()).map(|k| mesh.partial(&su, k, a)).collect();
        assert_eq!(shift(&du), dsu);
        for b in 0..2 {
            let d2: Vec<f64> = (0..mesh.len()).map(|k| mesh.second_partial(&u, k, a, b)).collect();
            let d2s: Vec<f64> = (0..mesh.len()).map(|k| mesh.second_partial(&su, k, a, b)).collect();
            assert_eq!(shift(&d2), d2s);
        }
    }
}
