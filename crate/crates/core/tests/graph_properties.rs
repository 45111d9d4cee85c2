use std::f64::consts::TAU;

use proptest::prelude::*;

use grwflow::graph::{
    gradient_function, induced_metric, inverse_metric, metric_equivalence_constants, tensor_pairing_bound_check,
    GeometrySnapshot, DEFAULT_EPS_SL,
};
use grwflow::identities::{property_suite, ricci_normal, RicciMode};
use grwflow::mesh::{BaseMesh, Topology};
use grwflow::sampling::random_state;
use grwflow::warp::{WarpKind, WarpingFunction};
use grwflow::GrwError;

fn warp_strategy() -> impl Strategy<Value = WarpingFunction> {
    prop_oneof![
        (1.0..3.0f64, -0.8..0.8f64, 0.3..2.0f64)
            .prop_map(|(a, r, omega)| WarpingFunction::new(WarpKind::Sinusoidal { a, b: a * r, omega }).unwrap()),
        (1.0..3.0f64, -0.8..0.8f64).prop_map(|(a, r)| WarpingFunction::new(WarpKind::Tanh { a, b: a * r }).unwrap()),
    ]
}

/// u = level + slope · (sin x + cos(2x + phase)) on a 1D torus, kept space-like.
fn state(w: &WarpingFunction, level: f64, slope: f64, phase: f64) -> (BaseMesh, Vec<f64>) {
    let mesh = BaseMesh::flat(1, Topology::Periodic, 32, TAU).unwrap();
    let fmin = (0..64).map(|i| w.eval(level - 3.0 + 6.0 * i as f64 / 63.0).0).fold(f64::INFINITY, f64::min);
    let amp = slope * fmin / 3.0;
    let u = mesh.sample(|x| level + amp * (x[0].sin() + 0.5 * (2.0 * x[0] + phase).cos()));
    (mesh, u)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snapshot_invariants(w in warp_strategy(), level in -1.5..1.5f64, slope in 0.0..0.9f64, phase in 0.0..TAU) {
        let (mesh, u) = state(&w, level, slope, phase);
        let snap = GeometrySnapshot::build(&mesh, &w, &u, DEFAULT_EPS_SL).unwrap();
        let inv = snap.invariant_errors();
        prop_assert!(inv.min_v >= 1.0);
        prop_assert!(inv.grad_norm < 1e-10);
        prop_assert!(inv.metric_inverse < 1e-10);
        prop_assert!(inv.tangent < 1e-10);
        prop_assert!(inv.ric_identity < 1e-9);
        let g = induced_metric(&mesh, &w, &u).unwrap();
        let gi = inverse_metric(&mesh, &w, &u).unwrap();
        let v = gradient_function(&mesh, &w, &u).unwrap();
        for k in 0..mesh.len() {
            prop_assert!(g[k][0][0] > 0.0);
            prop_assert!((g[k][0][0] * gi[k][0][0] - 1.0).abs() < 1e-12);
            prop_assert_eq!(v[k], snap.nodes[k].v);
        }
    }

    #[test]
    fn lambda_grows_with_slope(w in warp_strategy(), level in -1.0..1.0f64, slope in 0.05..0.8f64) {
        let (mesh, lo) = state(&w, level, slope, 0.0);
        let (_, hi) = state(&w, level, slope + 0.1, 0.0);
        let a = GeometrySnapshot::build(&mesh, &w, &lo, DEFAULT_EPS_SL).unwrap();
        let b = GeometrySnapshot::build(&mesh, &w, &hi, DEFAULT_EPS_SL).unwrap();
        prop_assert!(b.lambda_max() > a.lambda_max());
    }

    #[test]
    fn metric_norms_match_contraction(w in warp_strategy(), level in -1.0..1.0f64, slope in 0.0..0.9f64) {
        let (mesh, u) = state(&w, level, slope, 1.0);
        let snap = GeometrySnapshot::build(&mesh, &w, &u, DEFAULT_EPS_SL).unwrap();
        for n in metric_equivalence_constants(&snap, &mesh) {
            prop_assert!((n.g_in_tilde - n.g_in_tilde_direct).abs() <= 1e-10 * n.g_in_tilde.max(1.0));
            prop_assert!((n.tilde_in_g - n.tilde_in_g_direct).abs() <= 1e-10 * n.tilde_in_g.max(1.0));
        }
    }

    #[test]
    fn pairing_bound(a in proptest::array::uniform4(-2.0..2.0f64), y in proptest::array::uniform2(-2.0..2.0f64),
                     z in proptest::array::uniform2(-2.0..2.0f64), s in 0.2..3.0f64) {
        let metric = [[s, 0.1], [0.1, 1.0]];
        let t = [[a[0], a[1]], [a[2], a[3]]];
        prop_assert!(tensor_pairing_bound_check(2, &[t], &[y], &[z], &[metric]));
    }
}

#[test]
fn guard_rejects_null_slopes() {
    let mesh = BaseMesh::flat(1, Topology::Periodic, 32, TAU).unwrap();
    let w = WarpingFunction::constant(1.0).unwrap();
    // |u'| = 1.2 somewhere: not space-like.
    let u = mesh.sample(|x| 1.2 * x[0].sin());
    match GeometrySnapshot::build(&mesh, &w, &u, DEFAULT_EPS_SL) {
        Err(GrwError::NotSpacelike { .. }) => {}
        other => panic!("expected the guard to trip, got {other:?}"),
    }
}

#[test]
fn randomized_states_satisfy_properties_and_ricci_sign() {
    let mut plus_far = 0;
    let total = 200;
    for seed in 0..total {
        let st = random_state(seed);
        let snap = st.snapshot();
        let report = property_suite(&snap, &st.mesh, &st.warp, &st.hcal);
        assert!(report.pass(), "seed {seed}: {:?}", report.items.iter().filter(|i| i.counted && !i.pass).collect::<Vec<_>>());
        let direct = ricci_normal(&snap, &st.mesh, &st.warp, RicciMode::Direct);
        let minus = ricci_normal(&snap, &st.mesh, &st.warp, RicciMode::Closed { sigma: -1.0 });
        let plus = ricci_normal(&snap, &st.mesh, &st.warp, RicciMode::Closed { sigma: 1.0 });
        let dm = direct.iter().zip(&minus).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let dp = direct.iter().zip(&plus).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dm <= 1e-10, "seed {seed}: {dm:e}");
        if dp > 1e-3 {
            plus_far += 1;
        }
    }
    assert!(plus_far * 100 >= total * 99, "{plus_far}/{total}");
}
