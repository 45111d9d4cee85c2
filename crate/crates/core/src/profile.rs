//! Closed-form initial height profiles.

use std::f64::consts::{PI, TAU};

use crate::mesh::{BaseMesh, Topology};
use crate::tensor::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitProfile {
    /// u ≡ level
    Constant { level: f64 },
    /// Torus: level + A·Π sin(2πx_k/L). Rectangle: level + A·Π sin(πx_k/L).
    Sine { level: f64, amplitude: f64 },
    /// Torus: level + A·exp(width·Σ(cos(2π(x_k − c)/L) − 1)).
    /// Rectangle: level + A·Π sin²(πx_k/L), centred in the square.
    Bump { level: f64, amplitude: f64, center: f64, width: f64 },
}

impl InitProfile {
    /// Value and coordinate gradient at x.
    pub fn eval(&self, mesh: &BaseMesh, x: Vec2) -> (f64, Vec2) {
        let m = mesh.m;
        let l = mesh.length;
        let periodic = mesh.topology == Topology::Periodic;
        match *self {
            InitProfile::Constant { level } => (level, [0.0; 2]),
            InitProfile::Sine { level, amplitude } => {
                let k = if periodic { TAU / l } else { PI / l };
                let s: Vec<(f64, f64)> = (0..m).map(|a| ((k * x[a]).sin(), k * (k * x[a]).cos())).collect();
                let prod: f64 = s.iter().map(|p| p.0).product();
                let mut g = [0.0; 2];
                for a in 0..m {
                    let others: f64 = (0..m).filter(|&b| b != a).map(|b| s[b].0).product();
                    g[a] = amplitude * s[a].1 * others;
                }
                (level + amplitude * prod, g)
            }
            InitProfile::Bump { level, amplitude, center, width } => {
                if periodic {
                    let k = TAU / l;
                    let e: f64 = (0..m).map(|a| (k * (x[a] - center)).cos() - 1.0).sum();
                    let val = amplitude * (width * e).exp();
                    let mut g = [0.0; 2];
                    for a in 0..m {
                        g[a] = -val * width * k * (k * (x[a] - center)).sin();
                    }
                    (level + val, g)
                } else {
                    let k = PI / l;
                    let s: Vec<(f64, f64)> = (0..m)
                        .map(|a| {
                            let (sn, cs) = (k * x[a]).sin_cos();
                            (sn * sn, 2.0 * k * sn * cs)
                        })
                        .collect();
                    let prod: f64 = s.iter().map(|p| p.0).product();
                    let mut g = [0.0; 2];
                    for a in 0..m {
                        let others: f64 = (0..m).filter(|&b| b != a).map(|b| s[b].0).product();
                        g[a] = amplitude * s[a].1 * others;
                    }
                    (level + amplitude * prod, g)
                }
            }
        }
    }

    pub fn sample(&self, mesh: &BaseMesh) -> Vec<f64> {
        mesh.sample(|x| self.eval(mesh, x).0)
    }
}
