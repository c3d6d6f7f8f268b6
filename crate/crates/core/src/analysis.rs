//! Logical fidelity, decay fitting, and error-suppression fitting.
//!
//! F_L(r) = 1 - 2 p_L(r) decays as (1 - 2 eps)^(r - r0); the fit runs as a
//! variance-weighted least squares on ln F_L vs r, starting at round
//! `start` (default 3) to dodge time-boundary effects. The suppression
//! factor comes from ln eps vs (d+1)/2.

use crate::bits::BitVec;
use crate::error::{Error, Result};

/// One measured fidelity point.
#[derive(Clone, Copy, Debug)]
pub struct FidelityPoint {
    pub rounds: usize,
    pub fidelity: f64,
    pub stderr: f64,
    pub shots: usize,
}

/// p_L and F_L with binomial error bars.
pub fn fidelity(corrections: &BitVec, p_true: &BitVec) -> FidelityPoint {
    assert_eq!(corrections.len(), p_true.len());
    let n = corrections.len();
    let errors = (0..n).filter(|&s| corrections.get(s) != p_true.get(s)).count();
    let p = errors as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    FidelityPoint { rounds: 0, fidelity: 1.0 - 2.0 * p, stderr: 2.0 * se, shots: n }
}

/// Pool points at the same round count (e.g. the two prepared states).
pub fn pool_points(points: &[FidelityPoint]) -> Vec<FidelityPoint> {
    let mut by_round: std::collections::BTreeMap<usize, Vec<&FidelityPoint>> = Default::default();
    for p in points {
        by_round.entry(p.rounds).or_default().push(p);
    }
    by_round
        .into_iter()
        .map(|(rounds, group)| {
            let shots: usize = group.iter().map(|p| p.shots).sum();
            // Pool the underlying error counts.
            let errors: f64 =
                group.iter().map(|p| (1.0 - p.fidelity) / 2.0 * p.shots as f64).sum();
            let p = errors / shots as f64;
            let se = (p * (1.0 - p) / shots as f64).sqrt();
            FidelityPoint { rounds, fidelity: 1.0 - 2.0 * p, stderr: 2.0 * se, shots }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct FidelityFit {
    /// Logical error rate per QEC round.
    pub eps: f64,
    pub eps_err: f64,
    pub r0: f64,
    pub r0_err: f64,
    pub start: usize,
    /// Points actually used by the fit.
    pub used: Vec<FidelityPoint>,
    /// Points dropped because F_L <= 0 or r < start.
    pub excluded: Vec<FidelityPoint>,
}

struct Wls {
    slope: f64,
    intercept: f64,
    var_slope: f64,
    var_intercept: f64,
    cov: f64,
}

fn weighted_least_squares(xs: &[f64], ys: &[f64], ws: &[f64]) -> Result<Wls> {
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(ws) {
        s += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let delta = s * sxx - sx * sx;
    if delta.abs() < f64::MIN_POSITIVE || !delta.is_finite() {
        return Err(Error::Numeric("degenerate least-squares system".into()));
    }
    Ok(Wls {
        slope: (s * sxy - sx * sy) / delta,
        intercept: (sxx * sy - sx * sxy) / delta,
        var_slope: s / delta,
        var_intercept: sxx / delta,
        cov: -sx / delta,
    })
}

/// Fit F_L(r) = (1 - 2 eps)^(r - r0) from round `start` on.
pub fn fit_fidelity(points: &[FidelityPoint], start: usize) -> Result<FidelityFit> {
    let mut used = Vec::new();
    let mut excluded = Vec::new();
    for &p in points {
        if p.rounds >= start && p.fidelity > 0.0 {
            used.push(p);
        } else {
            excluded.push(p);
        }
    }
    if used.len() < 2 {
        return Err(Error::invalid(format!(
            "{} usable fidelity points (need at least 2)",
            used.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|p| p.rounds as f64).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.fidelity.ln()).collect();
    let ws: Vec<f64> = used
        .iter()
        .map(|p| {
            if p.stderr > 0.0 {
                let var_ln = (p.stderr / p.fidelity).powi(2);
                1.0 / var_ln
            } else {
                1.0
            }
        })
        .collect();
    let wls = weighted_least_squares(&xs, &ys, &ws)?;
    // slope = ln(1 - 2 eps), intercept = -r0 * slope.
    let eps = 0.5 * (1.0 - wls.slope.exp());
    let eps_err = 0.5 * wls.slope.exp() * wls.var_slope.sqrt();
    let (r0, r0_err) = if wls.slope.abs() < 1e-300 {
        (0.0, f64::INFINITY)
    } else {
        let r0 = -wls.intercept / wls.slope;
        let var = wls.var_intercept / (wls.slope * wls.slope)
            + wls.intercept * wls.intercept * wls.var_slope / wls.slope.powi(4)
            - 2.0 * wls.intercept / wls.slope.powi(3) * wls.cov;
        (r0, var.max(0.0).sqrt())
    };
    Ok(FidelityFit { eps, eps_err, r0, r0_err, start, used, excluded })
}

#[derive(Clone, Debug)]
pub struct LambdaFit {
    pub lambda: f64,
    pub lambda_err: f64,
    pub c: f64,
    pub c_err: f64,
    /// (d, eps, eps_err) inputs.
    pub pairs: Vec<(usize, f64, f64)>,
}

/// Fit eps(d) = C / Lambda^((d+1)/2).
pub fn fit_lambda(pairs: &[(usize, f64, f64)]) -> Result<LambdaFit> {
    if pairs.len() < 2 {
        return Err(Error::invalid("lambda fit needs at least two distances"));
    }
    for &(_, eps, _) in pairs {
        if eps <= 0.0 {
            return Err(Error::invalid("lambda fit requires positive error rates"));
        }
    }
    let xs: Vec<f64> = pairs.iter().map(|&(d, _, _)| (d as f64 + 1.0) / 2.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|&(_, e, _)| e.ln()).collect();
    let ws: Vec<f64> = pairs
        .iter()
        .map(|&(_, e, se)| if se > 0.0 { (e / se).powi(2) } else { 1.0 })
        .collect();
    let wls = weighted_least_squares(&xs, &ys, &ws)?;
    let lambda = (-wls.slope).exp();
    let lambda_err = lambda * wls.var_slope.sqrt();
    let c = wls.intercept.exp();
    let c_err = c * wls.var_intercept.sqrt();
    Ok(LambdaFit { lambda, lambda_err, c, c_err, pairs: pairs.to_vec() })
}

/// CSV of fidelity points: `rounds,fidelity,stderr,shots`.
pub fn fidelity_csv(points: &[FidelityPoint]) -> String {
    let mut s = String::from("rounds,fidelity,stderr,shots\n");
    for p in points {
        s.push_str(&format!("{},{:.9},{:.9},{}\n", p.rounds, p.fidelity, p.stderr, p.shots));
    }
    s
}

/// CSV of (d, eps, err) pairs.
pub fn lambda_csv(fit: &LambdaFit) -> String {
    let mut s = String::from("distance,eps,stderr\n");
    for &(d, e, se) in &fit.pairs {
        s.push_str(&format!("{},{:.9e},{:.9e}\n", d, e, se));
    }
    s.push_str(&format!("# lambda={:.6} lambda_err={:.6} c={:.6e}\n", fit.lambda, fit.lambda_err, fit.c));
    s
}
