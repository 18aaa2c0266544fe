//! Outcome simulation under the linear interference model.

use rand::{Rng, RngExt};
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::graph::Graph;

use super::SimError;

/// Confounder loading: one coefficient for every unit, or a per-unit vector.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum EtaSpec {
    Scalar(f64),
    PerUnit(Vec<f64>),
}

/// Error-term model for simulated outcomes.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ErrorModel {
    /// Independent N(0, sigma²) errors.
    IidNormal { sigma: f64 },
    /// Network-correlated errors: eps = A * eps', with eps' i.i.d. standard
    /// normal, so a unit's error is the sum of its neighbors' innovations.
    Correlated,
    /// Independent standard normal errors plus an unobserved community
    /// confounder entering the outcome as eta * Z.
    Confounded { eta: EtaSpec },
}

/// Outcome model `Y = alpha + beta*T + gamma*rho (+ eta*Z) + eps`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutcomeConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub error_model: ErrorModel,
}

/// Simulates outcomes for one realized experiment. `z` is required by the
/// confounded error model and ignored otherwise.
pub fn simulate_outcomes<R: Rng>(
    g: &Graph,
    treatments: &[bool],
    rho: &[f64],
    cfg: &OutcomeConfig,
    z: Option<&[f64]>,
    rng: &mut R,
) -> Result<Vec<f64>, SimError> {
    let n = g.n();
    assert_eq!(treatments.len(), n);
    assert_eq!(rho.len(), n);
    let mut y: Vec<f64> = (0..n)
        .map(|i| cfg.alpha + cfg.beta * f64::from(u8::from(treatments[i])) + cfg.gamma * rho[i])
        .collect();
    match &cfg.error_model {
        ErrorModel::IidNormal { sigma } => {
            for value in &mut y {
                let eps: f64 = rng.sample(StandardNormal);
                *value += sigma * eps;
            }
        }
        ErrorModel::Correlated => {
            let innovations: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            for (i, value) in y.iter_mut().enumerate() {
                let eps: f64 = g.neighbors(i).iter().map(|&j| innovations[j]).sum();
                *value += eps;
            }
        }
        ErrorModel::Confounded { eta } => {
            let z = z.ok_or(SimError::ConfoundedWithoutZ)?;
            if z.len() != n {
                return Err(SimError::Invalid(format!(
                    "confounder Z has length {}, graph has {n} units",
                    z.len()
                )));
            }
            match eta {
                EtaSpec::Scalar(eta) => {
                    for (value, &zi) in y.iter_mut().zip(z) {
                        *value += eta * zi;
                    }
                }
                EtaSpec::PerUnit(etas) => {
                    if etas.len() != n {
                        return Err(SimError::Invalid(format!(
                            "eta vector has length {}, graph has {n} units",
                            etas.len()
                        )));
                    }
                    for ((value, &zi), &ei) in y.iter_mut().zip(z).zip(etas) {
                        *value += ei * zi;
                    }
                }
            }
            for value in &mut y {
                let eps: f64 = rng.sample(StandardNormal);
                *value += eps;
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::rng_from_seed;

    fn iid(sigma: f64) -> OutcomeConfig {
        OutcomeConfig {
            alpha: 2.0,
            beta: 0.0,
            gamma: 0.0,
            error_model: ErrorModel::IidNormal { sigma },
        }
    }

    #[test]
    fn zero_noise_gives_constant_field() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let t = vec![true, false, true, false, true];
        let rho = vec![0.0; 5];
        let y = simulate_outcomes(&g, &t, &rho, &iid(0.0), None, &mut rng_from_seed(0)).unwrap();
        assert!(y.iter().all(|&v| v == 2.0));
    }

    #[test]
    fn correlated_errors_vanish_on_edgeless_graph() {
        let g = Graph::load_edge_list("nodes: 4\n").unwrap();
        let cfg = OutcomeConfig {
            alpha: 1.0,
            beta: 2.0,
            gamma: 3.0,
            error_model: ErrorModel::Correlated,
        };
        let t = vec![true, true, false, false];
        let rho = vec![0.0; 4];
        let a = simulate_outcomes(&g, &t, &rho, &cfg, None, &mut rng_from_seed(1)).unwrap();
        let b = simulate_outcomes(&g, &t, &rho, &cfg, None, &mut rng_from_seed(99)).unwrap();
        assert_eq!(a, b, "no edges means no error term at all");
        assert_eq!(a, vec![3.0, 3.0, 1.0, 1.0]);
    }

    #[test]
    fn iid_noise_variance_concentrates() {
        let n = 100_000;
        let g = Graph::load_edge_list(&format!("nodes: {n}\n")).unwrap();
        let t = vec![false; n];
        let rho = vec![0.0; n];
        let sigma = 1.5;
        let y =
            simulate_outcomes(&g, &t, &rho, &iid(sigma), None, &mut rng_from_seed(42)).unwrap();
        let mean: f64 = y.iter().sum::<f64>() / n as f64;
        let var: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let target = sigma * sigma;
        assert!(
            (var - target).abs() / target < 0.02,
            "sample variance {var}"
        );
    }

    #[test]
    fn confounded_requires_z() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let cfg = OutcomeConfig {
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
            error_model: ErrorModel::Confounded {
                eta: EtaSpec::Scalar(0.8),
            },
        };
        let err = simulate_outcomes(&g, &[true, false], &[0.0, 0.0], &cfg, None, &mut rng_from_seed(0));
        assert!(matches!(err, Err(SimError::ConfoundedWithoutZ)));
    }

    #[test]
    fn confounder_shifts_by_eta_z() {
        let g = Graph::load_edge_list("nodes: 2\n").unwrap();
        let cfg = OutcomeConfig {
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
            error_model: ErrorModel::Confounded {
                eta: EtaSpec::Scalar(0.8),
            },
        };
        let z = [1.0, -1.0];
        let a = simulate_outcomes(&g, &[false, false], &[0.0, 0.0], &cfg, Some(&z), &mut rng_from_seed(3)).unwrap();
        let mut rng = rng_from_seed(3);
        use rand::RngExt;
        let e0: f64 = rng.sample(rand_distr::StandardNormal);
        let e1: f64 = rng.sample(rand_distr::StandardNormal);
        assert!((a[0] - (0.8 + e0)).abs() < 1e-12);
        assert!((a[1] - (-0.8 + e1)).abs() < 1e-12);
    }
}
