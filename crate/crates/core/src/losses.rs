//! Pointwise losses and the fold-averaged gradient used by the half-step.

use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::vector::clip_scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    Huber {
        tau: f64,
    },
    /// Absolute loss. The sign is taken on raw features unless
    /// `sign_on_clipped` is set; the multiplier always uses clipped ones.
    AbsoluteL1 {
        #[serde(default)]
        sign_on_clipped: bool,
    },
    Squared,
}

pub fn huber_value(r: f64, tau: f64) -> f64 {
    if r.abs() < tau {
        0.5 * r * r
    } else {
        tau * r.abs() - 0.5 * tau * tau
    }
}

pub fn huber_deriv(r: f64, tau: f64) -> f64 {
    if r.abs() < tau {
        r
    } else {
        tau * sign(r)
    }
}

/// `sign` with `sign(0) = 0`.
#[inline]
pub fn sign(r: f64) -> f64 {
    if r > 0.0 {
        1.0
    } else if r < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn l1_subgrad(r: f64) -> f64 {
    sign(r)
}

fn clipped_dot(x: &[f64], beta: &[f64], clip: Option<f64>) -> f64 {
    match clip {
        Some(k) => x
            .iter()
            .zip(beta)
            .filter(|(_, b)| **b != 0.0)
            .map(|(v, b)| clip_scalar(*v, k) * b)
            .sum(),
        None => raw_dot(x, beta),
    }
}

fn raw_dot(x: &[f64], beta: &[f64]) -> f64 {
    x.iter()
        .zip(beta)
        .filter(|(_, b)| **b != 0.0)
        .map(|(v, b)| v * b)
        .sum()
}

/// Scalar multiplier `c_i` such that the per-sample gradient term is
/// `c_i * x̃_i`.
pub(crate) fn sample_multiplier(
    sample: &Sample,
    beta: &[f64],
    kind: LossKind,
    clip: Option<f64>,
) -> f64 {
    let y = sample.response;
    match kind {
        LossKind::Huber { tau } => -huber_deriv(y - clipped_dot(&sample.features, beta, clip), tau),
        LossKind::AbsoluteL1 { sign_on_clipped } => {
            let fitted = if sign_on_clipped {
                clipped_dot(&sample.features, beta, clip)
            } else {
                raw_dot(&sample.features, beta)
            };
            l1_subgrad(fitted - y)
        }
        LossKind::Squared => clipped_dot(&sample.features, beta, clip) - y,
    }
}

/// `(1/m) Σ_i g_i` over a fold, where `g_i = c_i · x̃_i` and `x̃_i` is the
/// sample's features clipped at `clip` (unclipped when `None`).
///
/// Huber: `c_i = -ℓ'_τ(y_i - x̃_iᵀβ)`. Absolute: `c_i = sign(x_iᵀβ - y_i)`.
/// Squared: `c_i = x̃_iᵀβ - y_i`.
///
/// Summation runs in sample order, so the result is reproducible.
pub fn batch_gradient(
    fold: &[Sample],
    beta: &[f64],
    kind: LossKind,
    clip: Option<f64>,
) -> Result<Vec<f64>> {
    if fold.is_empty() {
        return Err(Error::InvalidInput("gradient over an empty fold".into()));
    }
    let d = beta.len();
    let mut grad = vec![0.0; d];
    for (i, sample) in fold.iter().enumerate() {
        if sample.features.len() != d {
            return Err(Error::InvalidInput(format!(
                "sample {i} has {} features, beta has {d}",
                sample.features.len()
            )));
        }
        let c = sample_multiplier(sample, beta, kind, clip);
        if c == 0.0 {
            continue;
        }
        match clip {
            Some(k) => {
                for (g, x) in grad.iter_mut().zip(&sample.features) {
                    *g += c * clip_scalar(*x, k);
                }
            }
            None => {
                for (g, x) in grad.iter_mut().zip(&sample.features) {
                    *g += c * x;
                }
            }
        }
    }
    let m = fold.len() as f64;
    grad.iter_mut().for_each(|g| *g /= m);
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::norm_inf;
    use proptest::prelude::*;

    #[test]
    fn huber_examples() {
        assert_eq!(huber_value(0.5, 1.0), 0.125);
        assert_eq!(huber_value(2.0, 1.0), 1.5);
        for tau in [0.1, 1.0, 3.7] {
            let quad = 0.5 * tau * tau;
            let lin = tau * tau - 0.5 * tau * tau;
            assert_eq!(huber_value(tau, tau), lin);
            assert!((quad - lin).abs() < 1e-15);
        }
        assert_eq!(huber_deriv(0.5, 1.0), 0.5);
        assert_eq!(huber_deriv(-2.5, 1.0), -1.0);
        assert_eq!(huber_deriv(0.0, 2.0), 0.0);
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_subgrad(3.7), 1.0);
        assert_eq!(l1_subgrad(-0.2), -1.0);
        assert_eq!(l1_subgrad(0.0), 0.0);
    }

    #[test]
    fn zero_residuals_give_zero_gradient() {
        let beta = vec![1.0, -2.0, 0.0, 0.5];
        let fold: Vec<Sample> = (0..20)
            .map(|i| {
                let x = vec![i as f64 * 0.1, -0.3, 1.0, (i % 3) as f64];
                let y = crate::vector::dot(&x, &beta);
                Sample::new(x, y)
            })
            .collect();
        let g = batch_gradient(&fold, &beta, LossKind::Huber { tau: 1.0 }, Some(100.0)).unwrap();
        assert!(norm_inf(&g) < 1e-10);
    }

    #[test]
    fn single_sample_l1() {
        let s = Sample::new(vec![3.0, -0.5, 1.0], -10.0);
        let beta = vec![0.2, 0.0, 0.0];
        let kind = LossKind::AbsoluteL1 {
            sign_on_clipped: false,
        };
        let g = batch_gradient(std::slice::from_ref(&s), &beta, kind, Some(2.0)).unwrap();
        assert_eq!(g, vec![2.0, -0.5, 1.0]);
    }

    #[test]
    fn sign_reading_flag() {
        // raw fitted value 3*1 = 3 > y = 2.5, clipped fitted value 2 < 2.5
        let s = Sample::new(vec![3.0], 2.5);
        let raw = batch_gradient(
            std::slice::from_ref(&s),
            &[1.0],
            LossKind::AbsoluteL1 {
                sign_on_clipped: false,
            },
            Some(2.0),
        )
        .unwrap();
        let clipped = batch_gradient(
            std::slice::from_ref(&s),
            &[1.0],
            LossKind::AbsoluteL1 {
                sign_on_clipped: true,
            },
            Some(2.0),
        )
        .unwrap();
        assert_eq!(raw, vec![2.0]);
        assert_eq!(clipped, vec![-2.0]);
    }

    #[test]
    fn empty_fold_is_rejected() {
        assert!(matches!(
            batch_gradient(&[], &[0.0], LossKind::Squared, None),
            Err(Error::InvalidInput(_))
        ));
    }

    fn huber_objective(fold: &[Sample], beta: &[f64], tau: f64, k: f64) -> f64 {
        fold.iter()
            .map(|s| {
                let fit: f64 = s
                    .features
                    .iter()
                    .zip(beta)
                    .map(|(x, b)| x.clamp(-k, k) * b)
                    .sum();
                huber_value(s.response - fit, tau)
            })
            .sum::<f64>()
            / fold.len() as f64
    }

    #[test]
    fn huber_gradient_matches_finite_differences() {
        let mut rng = crate::sampling::RngHandle::new(5, 0);
        let (tau, k, h) = (1.0, 2.5, 1e-6);
        let d = 8;
        let fold: Vec<Sample> = (0..50)
            .map(|_| {
                let x: Vec<f64> = (0..d).map(|_| 1.5 * rng.standard_normal()).collect();
                Sample::new(x, 2.0 * rng.standard_normal())
            })
            .collect();
        let beta: Vec<f64> = (0..d).map(|_| 0.3 * rng.standard_normal()).collect();
        let g = batch_gradient(&fold, &beta, LossKind::Huber { tau }, Some(k)).unwrap();
        for j in 0..d {
            let mut up = beta.clone();
            let mut dn = beta.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (huber_objective(&fold, &up, tau, k) - huber_objective(&fold, &dn, tau, k))
                / (2.0 * h);
            assert!(
                (fd - g[j]).abs() <= 1e-5 * g[j].abs().max(1e-3),
                "coord {j}: {fd} vs {}",
                g[j]
            );
        }
    }

    proptest! {
        #[test]
        fn huber_deriv_bounded_and_odd(r in -1e6f64..1e6, tau in 1e-3f64..100.0) {
            prop_assert!(huber_deriv(r, tau).abs() <= tau);
            prop_assert_eq!(huber_deriv(-r, tau), -huber_deriv(r, tau));
        }

        #[test]
        fn per_sample_terms_are_bounded(
            x in prop::collection::vec(-50.0f64..50.0, 4),
            beta in prop::collection::vec(-3.0f64..3.0, 4),
            y in -100.0f64..100.0,
            k in 0.1f64..5.0,
            tau in 0.1f64..5.0,
        ) {
            let s = [Sample::new(x, y)];
            let gh = batch_gradient(&s, &beta, LossKind::Huber { tau }, Some(k)).unwrap();
            prop_assert!(norm_inf(&gh) <= tau * k + 1e-12);
            let gl = batch_gradient(&s, &beta, LossKind::AbsoluteL1 { sign_on_clipped: false }, Some(k)).unwrap();
            prop_assert!(norm_inf(&gl) <= k + 1e-12);
        }
    }
}
