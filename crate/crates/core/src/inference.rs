//! Regression estimation and inference for the global treatment effect and
//! the spillover effect, plus dependency-graph diagnostics.
//!
//! The outcome model is linear in own treatment and the treated-neighbor
//! fraction: `Y = alpha + beta*T + gamma*rho + eps`. The global treatment
//! effect is `tau = beta + gamma`; the spillover effect is `gamma`. Standard
//! errors come from the asymptotic variances
//! `var(tau_hat) = 4*sigma²(r_bar²/b + 1)/n` and `var(gamma_hat) = 4*sigma²/(b*n)`,
//! which are functions of the clustering's loss statistics alone.
//!
//! The reported standard errors assume i.i.d. errors; under network-correlated
//! errors they are used as-is (the simulation lab measures the resulting
//! coverage rather than asserting it).

use serde::Serialize;
use thiserror::Error;

use crate::design::EgoClustering;
use crate::graph::Graph;
use crate::normal::{normal_cdf, normal_quantile, NormalError};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("need at least 4 observations to fit 3 coefficients, got {0}")]
    TooFewObservations(usize),
    #[error("input lengths differ: T has {t}, rho has {rho}, Y has {y}")]
    LengthMismatch { t: usize, rho: usize, y: usize },
    #[error("collinear design: spillover exposure indistinguishable from treatment")]
    CollinearDesign,
    #[error("variance formula undefined: the design statistic b is zero")]
    ZeroB,
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error(transparent)]
    Normal(#[from] NormalError),
}

/// Coefficients and residual variance from the three-column regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OlsFit {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub gamma_hat: f64,
    pub sigma2_eps_hat: f64,
    pub n: usize,
}

/// Condition-number cutoff for declaring the Gram matrix singular.
const CONDITION_LIMIT: f64 = 1e12;

/// Eigenvalues of a symmetric 3x3 matrix, descending (trigonometric closed
/// form for the characteristic cubic).
fn symmetric_eigenvalues_3x3(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    if p1 == 0.0 {
        let mut eig = [m[0][0], m[1][1], m[2][2]];
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        return eig;
    }
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det_b / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let eig1 = q + 2.0 * p * phi.cos();
    let eig3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let eig2 = 3.0 * q - eig1 - eig3;
    [eig1, eig2, eig3]
}

/// Solves the 3x3 system `m x = rhs` by Gaussian elimination with partial
/// pivoting.
fn solve_3x3(m: &[[f64; 3]; 3], rhs: &[f64; 3]) -> Option<[f64; 3]> {
    let mut a = [[0.0f64; 4]; 3];
    for i in 0..3 {
        a[i][..3].copy_from_slice(&m[i]);
        a[i][3] = rhs[i];
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col] == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        for row in (col + 1)..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= factor * a[col][k];
            }
        }
    }
    let mut x = [0.0f64; 3];
    for i in (0..3).rev() {
        let mut acc = a[i][3];
        for j in (i + 1)..3 {
            acc -= a[i][j] * x[j];
        }
        x[i] = acc / a[i][i];
    }
    Some(x)
}

/// Fits `Y = alpha + beta*T + gamma*rho + eps` by solving the normal
/// equations of the design matrix `[1, T, rho]`, and estimates the residual
/// variance with `n - 3` degrees of freedom.
///
/// A Gram matrix with condition number above 1e12 is rejected as collinear;
/// this is the degenerate-clustering signal (for instance every loss rate
/// zero, which forces `rho = T`).
pub fn fit_ols(t: &[bool], rho: &[f64], y: &[f64]) -> Result<OlsFit, InferenceError> {
    let n = t.len();
    if rho.len() != n || y.len() != n {
        return Err(InferenceError::LengthMismatch {
            t: n,
            rho: rho.len(),
            y: y.len(),
        });
    }
    if n < 4 {
        return Err(InferenceError::TooFewObservations(n));
    }
    let nf = n as f64;
    let (mut st, mut sr, mut stt, mut srr, mut str_) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut sy, mut sty, mut sry) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let ti = f64::from(u8::from(t[i]));
        let ri = rho[i];
        st += ti;
        sr += ri;
        stt += ti * ti;
        srr += ri * ri;
        str_ += ti * ri;
        sy += y[i];
        sty += ti * y[i];
        sry += ri * y[i];
    }
    let gram = [[nf, st, sr], [st, stt, str_], [sr, str_, srr]];
    let eig = symmetric_eigenvalues_3x3(&gram);
    let (largest, smallest) = (eig[0], eig[2]);
    if !(smallest > 0.0) || largest / smallest > CONDITION_LIMIT {
        return Err(InferenceError::CollinearDesign);
    }
    let coef =
        solve_3x3(&gram, &[sy, sty, sry]).ok_or(InferenceError::CollinearDesign)?;
    let [alpha_hat, beta_hat, gamma_hat] = coef;
    let mut rss = 0.0;
    for i in 0..n {
        let fitted = alpha_hat + beta_hat * f64::from(u8::from(t[i])) + gamma_hat * rho[i];
        let resid = y[i] - fitted;
        rss += resid * resid;
    }
    Ok(OlsFit {
        alpha_hat,
        beta_hat,
        gamma_hat,
        sigma2_eps_hat: rss / (nf - 3.0),
        n,
    })
}

/// Full estimation output for one experiment.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EstimationResult {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub gamma_hat: f64,
    /// Global treatment effect estimate, `beta_hat + gamma_hat`.
    pub tau_hat: f64,
    pub sigma2_eps_hat: f64,
    pub se_tau: f64,
    pub se_gamma: f64,
    pub ci_tau: (f64, f64),
    pub ci_gamma: (f64, f64),
    pub t_tau: f64,
    pub t_gamma: f64,
    pub p_tau: f64,
    pub p_gamma: f64,
    pub level: f64,
    pub n: usize,
    pub k_n: usize,
    pub r_bar: f64,
    pub b: f64,
}

/// Standard errors, confidence intervals, and two-sided tests for `tau_hat`
/// and `gamma_hat` at confidence level `1 - alpha_level`.
pub fn effect_inference(
    fit: &OlsFit,
    r_bar: f64,
    b: f64,
    k_n: usize,
    alpha_level: f64,
) -> Result<EstimationResult, InferenceError> {
    if !(alpha_level > 0.0 && alpha_level < 1.0) {
        return Err(InferenceError::InvalidLevel(alpha_level));
    }
    if b <= 0.0 {
        return Err(InferenceError::ZeroB);
    }
    let n = fit.n;
    let nf = n as f64;
    let sigma_eps = fit.sigma2_eps_hat.sqrt();
    let tau_hat = fit.beta_hat + fit.gamma_hat;
    let gamma_hat = fit.gamma_hat;
    let se_tau = 2.0 * sigma_eps * (r_bar * r_bar / b + 1.0).sqrt() / nf.sqrt();
    let se_gamma = 2.0 * sigma_eps * (1.0 / b).sqrt() / nf.sqrt();
    let z = normal_quantile(1.0 - alpha_level / 2.0)?;
    let t_stat = |estimate: f64, se: f64| {
        if estimate == 0.0 {
            0.0
        } else {
            estimate / se
        }
    };
    let t_tau = t_stat(tau_hat, se_tau);
    let t_gamma = t_stat(gamma_hat, se_gamma);
    let p_of = |t: f64| 2.0 * (1.0 - normal_cdf(t.abs()));
    Ok(EstimationResult {
        alpha_hat: fit.alpha_hat,
        beta_hat: fit.beta_hat,
        gamma_hat,
        tau_hat,
        sigma2_eps_hat: fit.sigma2_eps_hat,
        se_tau,
        se_gamma,
        ci_tau: (tau_hat - z * se_tau, tau_hat + z * se_tau),
        ci_gamma: (gamma_hat - z * se_gamma, gamma_hat + z * se_gamma),
        t_tau,
        t_gamma,
        p_tau: p_of(t_tau),
        p_gamma: p_of(t_gamma),
        level: alpha_level,
        n,
        k_n,
        r_bar,
        b,
    })
}

impl EstimationResult {
    /// Two-row report: one line per effect with estimate, standard error,
    /// confidence interval, test statistic, and p-value.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<8}{:>12}{:>12}{:>12}{:>12}{:>10}{:>12}\n",
            "effect", "estimate", "se", "ci_low", "ci_high", "t", "p"
        ));
        for (name, est, se, ci, t, p) in [
            ("tau", self.tau_hat, self.se_tau, self.ci_tau, self.t_tau, self.p_tau),
            (
                "gamma",
                self.gamma_hat,
                self.se_gamma,
                self.ci_gamma,
                self.t_gamma,
                self.p_gamma,
            ),
        ] {
            out.push_str(&format!(
                "{name:<8}{est:>12.5}{se:>12.5}{:>12.5}{:>12.5}{t:>10.3}{p:>12.6}\n",
                ci.0, ci.1
            ));
        }
        out
    }
}

/// Moment summaries of the dependency graph: two observed triples are
/// dependent exactly when some cluster touches both units' closed
/// neighborhoods.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct DependencyDiagnostics {
    /// Mean dependence-set size, `(1/n) Σ |N_i|`.
    pub mean_n: f64,
    /// `(1/n) Σ |N_i|²`.
    pub mean_n2: f64,
    /// `(1/n) Σ |N_i|³`.
    pub mean_n3: f64,
    /// `(1/n) Σ_{ij} (Λ³)_{ij}`, via three sparse mat-vec products with ones.
    pub mean_l3: f64,
    pub max_n: usize,
}

/// Computes the dependency diagnostics without materializing the dependency
/// matrix densely: an inverted index from clusters to the units whose closed
/// neighborhood touches them yields each dependence set on the fly.
pub fn dependency_diagnostics(g: &Graph, c: &EgoClustering) -> DependencyDiagnostics {
    let n = g.n();
    // touching[i]: sorted cluster ids with a member in N(i;1).
    let mut touching: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut ks: Vec<usize> = g
            .neighbors(i)
            .iter()
            .map(|&j| c.cluster_of(j))
            .chain(std::iter::once(c.cluster_of(i)))
            .collect();
        ks.sort_unstable();
        ks.dedup();
        touching.push(ks);
    }
    // Inverted index: cluster -> units touching it.
    let mut touched_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, ks) in touching.iter().enumerate() {
        for &k in ks {
            touched_by[k].push(i);
        }
    }

    // One pass over rows applies Λ to a vector; visit stamps avoid double
    // counting units reachable through several shared clusters. The stamp
    // epoch grows monotonically so rows never see a stale mark from an
    // earlier pass.
    let mut stamp = vec![0usize; n];
    let mut epoch = 0usize;
    let mut apply = |v: &[f64], out: &mut Vec<f64>, sizes: Option<&mut Vec<usize>>| {
        out.clear();
        out.resize(n, 0.0);
        let mut sizes = sizes;
        for i in 0..n {
            epoch += 1;
            let mut acc = 0.0;
            let mut count = 0usize;
            for &k in &touching[i] {
                for &j in &touched_by[k] {
                    if stamp[j] != epoch {
                        stamp[j] = epoch;
                        acc += v[j];
                        count += 1;
                    }
                }
            }
            out[i] = acc;
            if let Some(sizes) = sizes.as_deref_mut() {
                sizes.push(count);
            }
        }
    };

    let ones = vec![1.0; n];
    let mut v1 = Vec::new();
    let mut sizes = Vec::with_capacity(n);
    apply(&ones, &mut v1, Some(&mut sizes));
    let mut v2 = Vec::new();
    apply(&v1, &mut v2, None);
    let mut v3 = Vec::new();
    apply(&v2, &mut v3, None);

    let nf = n as f64;
    let mut sum = 0u64;
    let mut sum2 = 0u64;
    let mut sum3 = 0u64;
    let mut max_n = 0usize;
    for &s in &sizes {
        let s64 = s as u64;
        sum += s64;
        sum2 += s64 * s64;
        sum3 += s64 * s64 * s64;
        max_n = max_n.max(s);
    }
    let total_l3: f64 = v3.iter().sum();
    DependencyDiagnostics {
        mean_n: sum as f64 / nf,
        mean_n2: sum2 as f64 / nf,
        mean_n3: sum3 as f64 / nf,
        mean_l3: total_l3 / nf,
        max_n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{baselines, DesignKind};
    use crate::seeds::rng_from_seed;
    use rand::RngExt;

    #[test]
    fn noiseless_recovery() {
        let t: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
        let rho: Vec<f64> = (0..40).map(|i| f64::from(i) / 40.0).collect();
        let y: Vec<f64> = t
            .iter()
            .zip(&rho)
            .map(|(&ti, &ri)| 2.0 + 2.5 * f64::from(u8::from(ti)) + 5.0 * ri)
            .collect();
        let fit = fit_ols(&t, &rho, &y).unwrap();
        assert!((fit.alpha_hat - 2.0).abs() < 1e-10);
        assert!((fit.beta_hat - 2.5).abs() < 1e-10);
        assert!((fit.gamma_hat - 5.0).abs() < 1e-10);
        assert!(fit.sigma2_eps_hat.abs() < 1e-18);
    }

    #[test]
    fn rho_equal_t_is_collinear() {
        let t: Vec<bool> = (0..20).map(|i| i % 3 == 0).collect();
        let rho: Vec<f64> = t.iter().map(|&b| f64::from(u8::from(b))).collect();
        let y: Vec<f64> = (0..20).map(|i| f64::from(i)).collect();
        assert!(matches!(
            fit_ols(&t, &rho, &y),
            Err(InferenceError::CollinearDesign)
        ));
    }

    #[test]
    fn too_few_observations() {
        let t = [true, false, true];
        let rho = [0.1, 0.2, 0.3];
        let y = [1.0, 2.0, 3.0];
        assert!(matches!(
            fit_ols(&t, &rho, &y),
            Err(InferenceError::TooFewObservations(3))
        ));
    }

    /// Independent route: assemble X'X explicitly and solve by Cramer's rule.
    fn ols_oracle(t: &[bool], rho: &[f64], y: &[f64]) -> Option<[f64; 3]> {
        let n = t.len() as f64;
        let x_rows: Vec<[f64; 3]> = t
            .iter()
            .zip(rho)
            .map(|(&ti, &ri)| [1.0, f64::from(u8::from(ti)), ri])
            .collect();
        let mut m = [[0.0f64; 3]; 3];
        let mut v = [0.0f64; 3];
        for (row, &yi) in x_rows.iter().zip(y) {
            for a in 0..3 {
                for b in 0..3 {
                    m[a][b] += row[a] * row[b];
                }
                v[a] += row[a] * yi;
            }
        }
        let det3 = |m: &[[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let d = det3(&m);
        if d.abs() < 1e-9 * n {
            return None;
        }
        let mut out = [0.0f64; 3];
        for col in 0..3 {
            let mut mc = m;
            for row in 0..3 {
                mc[row][col] = v[row];
            }
            out[col] = det3(&mc) / d;
        }
        Some(out)
    }

    #[test]
    fn matches_normal_equation_oracle() {
        let mut rng = rng_from_seed(2024);
        let mut checked = 0;
        while checked < 200 {
            let n = 20;
            let t: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            let rho: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let y: Vec<f64> = (0..n).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
            let Some(expected) = ols_oracle(&t, &rho, &y) else {
                continue;
            };
            let fit = fit_ols(&t, &rho, &y).unwrap();
            assert!((fit.alpha_hat - expected[0]).abs() < 1e-8);
            assert!((fit.beta_hat - expected[1]).abs() < 1e-8);
            assert!((fit.gamma_hat - expected[2]).abs() < 1e-8);
            checked += 1;
        }
    }

    #[test]
    fn effect_inference_closed_forms() {
        // sigma_eps = 1, r_bar = 1, b = 1, n = 400.
        let fit = OlsFit {
            alpha_hat: 0.0,
            beta_hat: 1.0,
            gamma_hat: 2.0,
            sigma2_eps_hat: 1.0,
            n: 400,
        };
        let est = effect_inference(&fit, 1.0, 1.0, 400, 0.05).unwrap();
        assert!((est.se_tau - 2.0 * 2.0_f64.sqrt() / 20.0).abs() < 1e-12);
        assert!((est.se_gamma - 0.1).abs() < 1e-12);
        assert_eq!(est.tau_hat, 3.0);
        // Half-width is z_{0.025} * se.
        let half = (est.ci_tau.1 - est.ci_tau.0) / 2.0;
        assert!((half - 1.959964 * est.se_tau).abs() < 1e-5);
        let mid = (est.ci_tau.1 + est.ci_tau.0) / 2.0;
        assert!((mid - est.tau_hat).abs() < 1e-12);
    }

    #[test]
    fn zero_estimate_gives_p_one() {
        let fit = OlsFit {
            alpha_hat: 0.0,
            beta_hat: 1.0,
            gamma_hat: -1.0,
            sigma2_eps_hat: 2.0,
            n: 100,
        };
        let est = effect_inference(&fit, 0.8, 0.4, 50, 0.05).unwrap();
        assert_eq!(est.t_tau, 0.0);
        assert_eq!(est.p_tau, 1.0);
    }

    #[test]
    fn variance_algebra_relations() {
        let fit = OlsFit {
            alpha_hat: 0.3,
            beta_hat: 0.7,
            gamma_hat: 1.1,
            sigma2_eps_hat: 1.7,
            n: 640,
        };
        let (r_bar, b) = (0.62, 0.48);
        let est = effect_inference(&fit, r_bar, b, 200, 0.05).unwrap();
        // se_tau² = r_bar² se_gamma² + 4 sigma²/n and se_tau >= 2 sigma/sqrt(n).
        let lhs = est.se_tau * est.se_tau;
        let rhs = r_bar * r_bar * est.se_gamma * est.se_gamma
            + 4.0 * fit.sigma2_eps_hat / fit.n as f64;
        assert!((lhs - rhs).abs() <= 1e-12 * lhs);
        assert!(est.se_tau >= 2.0 * fit.sigma2_eps_hat.sqrt() / (fit.n as f64).sqrt());
    }

    #[test]
    fn p_values_decrease_in_t() {
        let mut last = f64::INFINITY;
        for i in 0..40 {
            let t = f64::from(i) * 0.2;
            let p = 2.0 * (1.0 - normal_cdf(t));
            assert!(p <= last);
            last = p;
        }
    }

    #[test]
    fn rejects_zero_b_and_bad_level() {
        let fit = OlsFit {
            alpha_hat: 0.0,
            beta_hat: 0.0,
            gamma_hat: 0.0,
            sigma2_eps_hat: 1.0,
            n: 10,
        };
        assert!(matches!(
            effect_inference(&fit, 0.5, 0.0, 5, 0.05),
            Err(InferenceError::ZeroB)
        ));
        assert!(matches!(
            effect_inference(&fit, 0.5, 0.5, 5, 0.0),
            Err(InferenceError::InvalidLevel(_))
        ));
    }

    #[test]
    fn path_diagnostics_under_complete_randomization() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let c = baselines::complete_randomization(&g);
        let d = dependency_diagnostics(&g, &c);
        // Units within distance two are mutually dependent: all three.
        assert_eq!(d.max_n, 3);
        assert_eq!(d.mean_n, 3.0);
        assert_eq!(d.mean_n2, 9.0);
        assert_eq!(d.mean_n3, 27.0);
    }

    #[test]
    fn one_cluster_makes_everyone_dependent() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let c = crate::design::EgoClustering::from_assignment(
            &g,
            vec![0, 0, 0, 0],
            DesignKind::EgoCr,
            1.0,
        )
        .unwrap();
        let d = dependency_diagnostics(&g, &c);
        assert_eq!(d.max_n, 4);
        assert_eq!(d.mean_n, 4.0);
        // Λ is all ones, so every entry of Λ³ is n² = 16; the total over the
        // 16 entries is 256 and the mean over n is 64.
        assert_eq!(d.mean_l3, 64.0);
    }
}
