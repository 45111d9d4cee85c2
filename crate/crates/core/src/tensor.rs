//! Small fixed-size tensor helpers for base dimension m ∈ {1, 2}.
//!
//! Everything is stored at size 2; for m = 1 the unused components are zero,
//! so full-size contractions are still correct. Only operations that depend
//! on the block size (identity, inverse, determinant, eigenvalues) take `m`.

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];
/// Christoffel table indexed `[k][i][j]` for Γ^k_ij.
pub type Chris = [[[f64; 2]; 2]; 2];

pub const ZERO2: Vec2 = [0.0; 2];
pub const ZERO22: Mat2 = [[0.0; 2]; 2];
pub const ZERO222: Chris = [[[0.0; 2]; 2]; 2];

pub fn eye(m: usize) -> Mat2 {
    let mut a = ZERO22;
    for (i, row) in a.iter_mut().enumerate().take(m) {
        row[i] = 1.0;
    }
    a
}

pub fn scale(a: &Mat2, s: f64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

pub fn add(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}

pub fn sub(a: &Mat2, b: &Mat2) -> Mat2 {
    add(a, &scale(b, -1.0))
}

pub fn outer(x: &Vec2, y: &Vec2) -> Mat2 {
    [[x[0] * y[0], x[0] * y[1]], [x[1] * y[0], x[1] * y[1]]]
}

pub fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = ZERO22;
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn mat_vec(a: &Mat2, x: &Vec2) -> Vec2 {
    [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
}

pub fn dot(x: &Vec2, y: &Vec2) -> f64 {
    x[0] * y[0] + x[1] * y[1]
}

/// a(x, y) = a_ij x^i y^j.
pub fn quad(a: &Mat2, x: &Vec2, y: &Vec2) -> f64 {
    dot(x, &mat_vec(a, y))
}

/// Full trace contraction a_ij b^ij.
pub fn frob(a: &Mat2, b: &Mat2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// |A|² = p^ik p^jl A_ij A_kl for a covariant 2-tensor A and inverse metric p.
pub fn norm2_cov(a: &Mat2, p: &Mat2) -> f64 {
    let raised = matmul(&matmul(p, a), p);
    frob(&raised, a)
}

pub fn det(m: usize, a: &Mat2) -> f64 {
    if m == 1 {
        a[0][0]
    } else {
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    }
}

pub fn inverse(m: usize, a: &Mat2) -> Mat2 {
    if m == 1 {
        return [[1.0 / a[0][0], 0.0], [0.0, 0.0]];
    }
    let d = det(2, a);
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

/// Eigenvalues (ascending) of the symmetric m×m block.
pub fn sym_eigs(m: usize, a: &Mat2) -> (f64, f64) {
    if m == 1 {
        return (a[0][0], a[0][0]);
    }
    let tr = 0.5 * (a[0][0] + a[1][1]);
    let dd = 0.5 * (a[0][0] - a[1][1]);
    let r = (dd * dd + a[0][1] * a[1][0]).max(0.0).sqrt();
    (tr - r, tr + r)
}

pub fn max_abs_diff(m: usize, a: &Mat2, b: &Mat2) -> f64 {
    let mut e: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            e = e.max((a[i][j] - b[i][j]).abs());
        }
    }
    e
}
