use crate::mesh::BaseMesh;

/// Residual of one identity on one state.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub id: String,
    /// Per-node residual magnitude.
    pub residual: Vec<f64>,
    /// Sup over active nodes.
    pub sup: f64,
    /// Discrete L² norm over active nodes.
    pub l2: f64,
    /// Side conditions that must hold to a fixed tolerance: (name, value, tolerance).
    pub side: Vec<(String, f64, f64)>,
}

impl ResidualReport {
    pub fn from_field(id: &str, residual: Vec<f64>, mesh: &BaseMesh) -> Self {
        let mut sup: f64 = 0.0;
        let mut sum = 0.0;
        for k in 0..mesh.len() {
            if mesh.is_boundary(k) {
                continue;
            }
            let r = residual[k].abs();
            if r.is_nan() {
                sup = f64::NAN;
            } else {
                sup = sup.max(r);
            }
            sum += r * r;
        }
        Self {
            id: id.to_string(),
            residual,
            sup,
            l2: (sum * mesh.cell_volume()).sqrt(),
            side: Vec::new(),
        }
    }

    pub fn with_side(mut self, name: &str, value: f64, tol: f64) -> Self {
        self.side.push((name.to_string(), value, tol));
        self
    }

    pub fn side_ok(&self) -> bool {
        self.side.iter().all(|(_, v, t)| *v <= *t)
    }
}

/// Least-squares slope of log(err) against log(h); needs at least three
/// positive levels.
pub fn fit_order(levels: &[(f64, f64)]) -> Option<f64> {
    if levels.len() < 3 || levels.iter().any(|&(h, e)| !(h > 0.0 && e > 0.0 && e.is_finite())) {
        return None;
    }
    let pts: Vec<(f64, f64)> = levels.iter().map(|&(h, e)| (h.ln(), e.ln())).collect();
    Some(linear_fit(&pts).0)
}

/// Ordinary least squares y = a·x + b; returns (slope, intercept, R²).
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, intercept, r2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Contract {
    /// Fitted order at least this, unless every level is exact (≤ 1e−12).
    Order(f64),
    /// Every level below this tolerance.
    Tolerance(f64),
}

pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LadderLevel {
    pub n: usize,
    pub h: f64,
    pub ds: Option<f64>,
    pub report: ResidualReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderReport {
    pub id: String,
    pub levels: Vec<LadderLevel>,
    pub order_sup: Option<f64>,
    pub order_l2: Option<f64>,
    pub contract: Contract,
    pub pass: bool,
}

impl LadderReport {
    pub fn new(id: &str, levels: Vec<LadderLevel>, contract: Contract) -> Self {
        let sup: Vec<(f64, f64)> = levels.iter().map(|l| (l.h, l.report.sup)).collect();
        let l2: Vec<(f64, f64)> = levels.iter().map(|l| (l.h, l.report.l2)).collect();
        let order_sup = fit_order(&sup);
        let order_l2 = fit_order(&l2);
        let sides = levels.iter().all(|l| l.report.side_ok());
        let worst = levels.iter().map(|l| l.report.sup).fold(0.0f64, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) });
        let main = match contract {
            Contract::Order(req) => {
                worst <= EXACT_TOL || order_sup.is_some_and(|o| o >= req)
            }
            Contract::Tolerance(tol) => worst <= tol,
        };
        Self { id: id.to_string(), levels, order_sup, order_l2, contract, pass: main && sides }
    }

    pub fn max_sup(&self) -> f64 {
        self.levels.iter().map(|l| l.report.sup).fold(0.0, f64::max)
    }
}
