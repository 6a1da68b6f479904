/// Guard added to the denominator of [`normalize_importance`].
pub const NORMALIZE_EPS: f64 = 1e-12;

/// `|v_i| / (Σ|v_k| + ε)`. Absolute values keep the result a distribution
/// even when importances have mixed signs.
pub fn normalize_importance(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().map(|x| x.abs()).sum::<f64>() + NORMALIZE_EPS;
    v.iter().map(|x| x.abs() / total).collect()
}
