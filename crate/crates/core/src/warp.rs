//! Ambient spacetime data for ḡ = −dt² + f(t)² g̃.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GrwError, Result};
use crate::mesh::BaseMesh;
use crate::tensor::{quad, Chris, Mat2, Vec2, ZERO2};

/// Catalog of admissible warping functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WarpKind {
    /// f = a
    Constant { a: f64 },
    /// f = a + b sin(ωt), a > |b|
    Sinusoidal { a: f64, b: f64, omega: f64 },
    /// f = a + b tanh(t), a > |b|
    Tanh { a: f64, b: f64 },
}

/// A validated warping function with its uniform bounds.
///
/// `c1 ≤ f`, `|f'/f| ≤ c2`, `|f''/f| ≤ c3` hold for every real t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpingFunction {
    pub kind: WarpKind,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl WarpingFunction {
    pub fn new(kind: WarpKind) -> Result<Self> {
        let bad = |msg: String| Err(GrwError::InvalidParameters(msg));
        let (c1, c2, c3) = match kind {
            WarpKind::Constant { a } => {
                if !(a.is_finite() && a > 0.0) {
                    return bad(format!("constant warp needs a > 0, got {a}"));
                }
                (a, 0.0, 0.0)
            }
            WarpKind::Sinusoidal { a, b, omega } => {
                if !(a.is_finite() && b.is_finite() && omega.is_finite()) {
                    return bad("sinusoidal warp parameters must be finite".into());
                }
                if a <= b.abs() {
                    return bad(format!("sinusoidal warp needs a > |b|, got a={a}, b={b}"));
                }
                // sup |cos θ/(a + b sin θ)| = 1/√(a²−b²), attained at sin θ = −b/a;
                // sin θ/(a + b sin θ) is monotone in sin θ.
                let c2 = (b * omega).abs() / (a * a - b * b).sqrt();
                let c3 = b.abs() * omega * omega / (a - b.abs());
                (a - b.abs(), c2, c3)
            }
            WarpKind::Tanh { a, b } => {
                if !(a.is_finite() && b.is_finite()) {
                    return bad("tanh warp parameters must be finite".into());
                }
                if a <= b.abs() {
                    return bad(format!("tanh warp needs a > |b|, got a={a}, b={b}"));
                }
                let (c2, c3) = tanh_bounds(a, b);
                (a - b.abs(), c2, c3)
            }
        };
        Ok(Self { kind, c1, c2, c3 })
    }

    pub fn constant(a: f64) -> Result<Self> {
        Self::new(WarpKind::Constant { a })
    }

    /// (f, f′, f″) at t.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        match self.kind {
            WarpKind::Constant { a } => (a, 0.0, 0.0),
            WarpKind::Sinusoidal { a, b, omega } => {
                let (s, c) = (omega * t).sin_cos();
                (a + b * s, b * omega * c, -b * omega * omega * s)
            }
            WarpKind::Tanh { a, b } => {
                let th = t.tanh();
                let sech2 = 1.0 - th * th;
                (a + b * th, b * sech2, -2.0 * b * th * sech2)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self.kind {
            WarpKind::Constant { .. } => true,
            WarpKind::Sinusoidal { b, omega, .. } => b == 0.0 || omega == 0.0,
            WarpKind::Tanh { b, .. } => b == 0.0,
        }
    }
}

/// Exact sup|f′/f| and sup|f″/f| for f = a + b tanh t, in terms of τ = tanh t ∈ (−1, 1).
fn tanh_bounds(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        return (0.0, 0.0);
    }
    // f′/f = b(1−τ²)/(a+bτ): stationary where bτ² + 2aτ + b = 0.
    let tau = (-a + (a * a - b * b).sqrt()) / b;
    let c2 = (b * (1.0 - tau * tau) / (a + b * tau)).abs();
    // f″/f = −2bτ(1−τ²)/(a+bτ): stationary where p(τ) = 2bτ³ + 3aτ² − a = 0.
    // p(0) < 0 < p(±1) and p is monotone on (−1,0) and (0,1), so one root in each.
    let p = |t: f64| 2.0 * b * t * t * t + 3.0 * a * t * t - a;
    let k = |t: f64| (2.0 * b * t * (1.0 - t * t) / (a + b * t)).abs();
    let root = |mut lo: f64, mut hi: f64| {
        // p(lo) and p(hi) have opposite signs
        let slo = p(lo).signum();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p(mid).signum() == slo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let c3 = k(root(-1.0, 0.0)).max(k(root(0.0, 1.0)));
    (c2, c3)
}

/// Christoffel symbols Γ̄^α_βη of ḡ, index 0 = t, 1..=m spatial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChristoffelTable {
    pub m: usize,
    pub gamma: [[[f64; 3]; 3]; 3],
}

pub fn ambient_christoffels(
    w: &WarpingFunction,
    t: f64,
    m: usize,
    g_tilde: &Mat2,
    gamma_tilde: &Chris,
) -> ChristoffelTable {
    let (f, f1, _) = w.eval(t);
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for i in 0..m {
        for j in 0..m {
            gamma[0][i + 1][j + 1] = f * f1 * g_tilde[i][j];
            for k in 0..m {
                gamma[k + 1][i + 1][j + 1] = gamma_tilde[k][i][j];
            }
        }
        gamma[i + 1][0][i + 1] = f1 / f;
        gamma[i + 1][i + 1][0] = f1 / f;
    }
    ChristoffelTable { m, gamma }
}

/// Ricci and the R_0ij0 block of ḡ at one (t, point).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientCurvature {
    pub m: usize,
    pub ric_tt: f64,
    pub ric_ti: Vec2,
    pub ric_ij: Mat2,
    pub riem_0ij0: Mat2,
}

impl AmbientCurvature {
    /// Ric(X, X) for X = x⁰∂_t + xⁱ∂_i.
    pub fn ric_xx(&self, x0: f64, x: &Vec2) -> f64 {
        self.ric_tt * x0 * x0 + 2.0 * x0 * (self.ric_ti[0] * x[0] + self.ric_ti[1] * x[1])
            + quad(&self.ric_ij, x, x)
    }

    /// Full (m+1)×(m+1) Ricci matrix, index 0 = t.
    pub fn full(&self) -> [[f64; 3]; 3] {
        let mut r = [[0.0; 3]; 3];
        r[0][0] = self.ric_tt;
        for i in 0..self.m {
            r[0][i + 1] = self.ric_ti[i];
            r[i + 1][0] = self.ric_ti[i];
            for j in 0..self.m {
                r[i + 1][j + 1] = self.ric_ij[i][j];
            }
        }
        r
    }
}

pub fn ambient_ricci(
    w: &WarpingFunction,
    t: f64,
    m: usize,
    g_tilde: &Mat2,
    ric_tilde: &Mat2,
) -> AmbientCurvature {
    let (f, f1, f2) = w.eval(t);
    let mf = m as f64;
    let coeff = f * f2 + (mf - 1.0) * f1 * f1;
    let mut ric_ij = [[0.0; 2]; 2];
    let mut riem = [[0.0; 2]; 2];
    for i in 0..m {
        for j in 0..m {
            ric_ij[i][j] = ric_tilde[i][j] + coeff * g_tilde[i][j];
            riem[i][j] = -f * f2 * g_tilde[i][j];
        }
    }
    AmbientCurvature {
        m,
        ric_tt: -mf * f2 / f,
        ric_ti: ZERO2,
        ric_ij,
        riem_0ij0: riem,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimelikeMode {
    /// Ric(X, X) > 0
    Strict,
    /// Ric(X, X) ≥ 0
    NonNeg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimelikeReport {
    pub mode: TimelikeMode,
    pub samples: usize,
    pub min: f64,
    pub max: f64,
    pub mixed_sign: bool,
    pub pass: bool,
}

/// Round-off allowance for the non-negative mode.
pub const NONNEG_SLACK: f64 = 1e-12;

pub const TIMELIKE_SEED: u64 = 0x6772_7766;

/// Samples Ric(X, X) over t ∈ `t_range` and random mesh nodes.
///
/// Each sample evaluates X = ∂_t and X = ∂_t + a with a random spatial
/// direction scaled so that f²g̃(a, a) = 1/2, i.e. ḡ(X, X) = −1/2.
pub fn check_timelike_convergence(
    w: &WarpingFunction,
    mesh: &BaseMesh,
    t_range: (f64, f64),
    n_samples: usize,
    mode: TimelikeMode,
    seed: u64,
) -> Result<TimelikeReport> {
    if n_samples == 0 {
        return Err(GrwError::InvalidParameters("n_samples must be at least 1".into()));
    }
    let (t0, t1) = t_range;
    if !(t0.is_finite() && t1.is_finite() && t0 <= t1) {
        return Err(GrwError::InvalidParameters(format!(
            "bad t-range [{t0}, {t1}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = mesh.m;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..n_samples {
        let t = if t1 > t0 { rng.random_range(t0..=t1) } else { t0 };
        let node = rng.random_range(0..mesh.len());
        let geo = mesh.node(node);
        let curv = ambient_ricci(w, t, m, &geo.metric, &geo.ricci);
        let (f, _, _) = w.eval(t);
        let e: Vec2 = if m == 1 {
            [if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0]
        } else {
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            [th.cos(), th.sin()]
        };
        let len = quad(&geo.metric, &e, &e).sqrt() * f;
        let s = 0.5f64.sqrt() / len;
        let a = [e[0] * s, e[1] * s];
        for val in [curv.ric_xx(1.0, &ZERO2), curv.ric_xx(1.0, &a)] {
            lo = lo.min(val);
            hi = hi.max(val);
        }
    }
    let pass = match mode {
        TimelikeMode::Strict => lo > 0.0,
        TimelikeMode::NonNeg => lo >= -NONNEG_SLACK,
    };
    Ok(TimelikeReport {
        mode,
        samples: n_samples,
        min: lo,
        max: hi,
        mixed_sign: lo < 0.0 && hi > 0.0,
        pass,
    })
}
