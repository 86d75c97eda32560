//! Gauss quadrature rules (Jacobi family, including Legendre) generated by
//! the Golub-Welsch algorithm, with a process-wide cache.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Nodes and weights of a Gauss rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Total weight mass (the integral of 1 against the rule's weight).
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Integrate `f` against the rule's weight function on [-1, 1].
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Nodes and weights affinely mapped from [-1, 1] to [a, b].
    /// Only meaningful for the Legendre rule (unit weight).
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let nodes = self.nodes.iter().map(|&x| mid + half * x).collect();
        let weights = self.weights.iter().map(|&w| half * w).collect();
        (nodes, weights)
    }
}

type RuleCache = Mutex<HashMap<(usize, u64, u64), Arc<GaussRule>>>;

fn cache() -> &'static RuleCache {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss-Jacobi rule of order `n` for the weight (1-x)^alpha (1+x)^beta.
///
/// Built from the symmetric Jacobi matrix of the monic three-term
/// recurrence; nodes are its eigenvalues and the weights come from the
/// first eigenvector components scaled by the total weight mass.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<Arc<GaussRule>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "quadrature order must be at least 2, got {n}"
        )));
    }
    if !(alpha.is_finite() && alpha > -1.0 && beta.is_finite() && beta > -1.0) {
        return Err(Error::InvalidParameter(format!(
            "Jacobi exponents must be finite and > -1, got alpha={alpha}, beta={beta}"
        )));
    }
    let key = (n, alpha.to_bits(), beta.to_bits());
    if let Some(rule) = cache().lock().unwrap().get(&key) {
        return Ok(rule.clone());
    }

    let ab = alpha + beta;
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jacobi[(k, k)] = diag;
    }
    for k in 1..n {
        let kf = k as f64;
        // Squared off-diagonal of the monic recurrence. The k=1 case is kept
        // separate: the general formula is 0/0 when alpha+beta = -1.
        let b2 = if k == 1 {
            4.0 * (alpha + 1.0) * (beta + 1.0) / ((ab + 2.0) * (ab + 2.0) * (ab + 3.0))
        } else {
            let s = 2.0 * kf + ab;
            4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
        if !(b2.is_finite() && b2 > 0.0) {
            return Err(Error::NumericFailure(format!(
                "Jacobi recurrence coefficient non-positive at k={k} (alpha={alpha}, beta={beta})"
            )));
        }
        let b = b2.sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }

    let eig = jacobi.symmetric_eigen();
    // mu0 = 2^(a+b+1) B(a+1, b+1)
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
        - ln_gamma(ab + 2.0))
    .exp();

    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let rule = Arc::new(GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    });
    cache().lock().unwrap().insert(key, rule.clone());
    Ok(rule)
}

/// Gauss-Legendre rule of order `n` (unit weight on [-1, 1]).
pub fn gauss_legendre(n: usize) -> Result<Arc<GaussRule>> {
    gauss_jacobi(n, 0.0, 0.0)
}

/// Composite Gauss-Legendre nodes over consecutive panels, `per_panel`
/// nodes on each.
pub fn legendre_panels(edges: &[f64], per_panel: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let base = gauss_legendre(per_panel.max(2))?;
    let mut nodes = Vec::with_capacity(per_panel * (edges.len() - 1));
    let mut weights = Vec::with_capacity(per_panel * (edges.len() - 1));
    for win in edges.windows(2) {
        let (a, b) = (win[0], win[1]);
        if b - a <= 1e-14 {
            continue;
        }
        let (mut xs, mut ws) = base.mapped(a, b);
        nodes.append(&mut xs);
        weights.append(&mut ws);
    }
    Ok((nodes, weights))
}
