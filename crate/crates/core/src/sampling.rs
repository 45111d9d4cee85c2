//! Seeded random space-like states for randomized checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

use crate::flow::PrescribedCurvature;
use crate::graph::{GeometrySnapshot, DEFAULT_EPS_SL};
use crate::mesh::{BaseMesh, Topology};
use crate::warp::{WarpKind, WarpingFunction};

#[derive(Debug, Clone)]
pub struct RandomState {
    pub mesh: BaseMesh,
    pub warp: WarpingFunction,
    pub u: Vec<f64>,
    pub hcal: PrescribedCurvature,
}

impl RandomState {
    pub fn snapshot(&self) -> GeometrySnapshot {
        GeometrySnapshot::build(&self.mesh, &self.warp, &self.u, DEFAULT_EPS_SL)
            .expect("random states are space-like by construction")
    }
}

/// A few random Fourier modes on the 2π-torus.
fn smooth_field(rng: &mut ChaCha8Rng, mesh: &BaseMesh, amplitude: f64) -> Vec<f64> {
    let modes: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(1..=2) as f64,
                if mesh.m == 2 { rng.random_range(0..=2) as f64 } else { 0.0 },
                rng.random_range(0.0..TAU),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    mesh.sample(|x| modes.iter().map(|&(kx, ky, th, a)| amplitude * a * (kx * x[0] + ky * x[1] + th).sin()).sum())
}

/// A random state on a small 2π-torus with a non-constant warp.
///
/// The slope is scaled so that max |∇̃u|²/f² lands near a random target in
/// [0.05, 0.9], which spreads v over roughly [1, 3].
pub fn random_state(seed: u64) -> RandomState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = if rng.random::<bool>() { 2 } else { 1 };
    let n = if m == 2 { 12 } else { 24 };
    let mut mesh = BaseMesh::flat(m, Topology::Periodic, n, TAU).unwrap();
    if rng.random_range(0.0..1.0) < 0.75 {
        let amp = rng.random_range(0.02..0.3);
        let phi = smooth_field(&mut rng, &mesh, amp);
        mesh.conformal_geometry(&phi).unwrap();
    }
    let a = rng.random_range(1.0..3.0);
    let b = a * rng.random_range(-0.8..0.8);
    let kind = if rng.random::<bool>() {
        WarpKind::Sinusoidal { a, b, omega: rng.random_range(0.5..2.0) }
    } else {
        WarpKind::Tanh { a, b }
    };
    let warp = WarpingFunction::new(kind).unwrap();
    let level = rng.random_range(-2.0..2.0);
    let shape = smooth_field(&mut rng, &mesh, 1.0);
    let target = rng.random_range(0.05..0.9);
    let mut scale = 1.0;
    let u = loop {
        let u: Vec<f64> = shape.iter().map(|s| level + scale * s).collect();
        let worst = match GeometrySnapshot::build(&mesh, &warp, &u, 0.0) {
            Ok(sn) => sn.nodes.iter().map(|x| x.grad_norm2_tilde / (x.f * x.f)).fold(0.0, f64::max),
            Err(_) => f64::INFINITY,
        };
        if worst <= target {
            break u;
        }
        scale *= if worst.is_finite() { 0.99 * (target / worst).sqrt() } else { 0.5 };
    };
    let hamp = rng.random_range(0.0..1.0);
    let hvals: Vec<f64> = smooth_field(&mut rng, &mesh, hamp);
    let hcal = PrescribedCurvature::grid(&mesh, hvals).unwrap();
    RandomState { mesh, warp, u, hcal }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn states_are_space_like_and_reproducible() {
        for seed in 0..20 {
            let a = random_state(seed);
            let b = random_state(seed);
            assert_eq!(a.u, b.u);
            let snap = a.snapshot();
            assert!(snap.nodes.iter().all(|x| x.v >= 1.0));
        }
    }
}
