//! Convex loss functions: values, left derivatives, and growth constants.
//!
//! Each loss exposes the structural constants the step-size and stopping
//! rules consume: the growth exponent `q` and constant `c_q` bounding the
//! left derivative as `|V'(y, a)| <= c_q (1 + |a|^q)`, the value bound at
//! zero `v0 = sup_y V(y, 0)`, and, for smooth losses, the Lipschitz
//! constant of the derivative.
//!
//! At kink points (hinge at `ya = 1`, absolute at `a = y`, the tube
//! boundary for the insensitive losses) the LEFT derivative is used, not an
//! arbitrary subgradient.
//!
//! The exponential loss `exp(-ya)` is deliberately unsupported: its
//! derivative outgrows every polynomial, so no finite `(q, c_q)` pair
//! exists for it.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("classification loss needs labels in {{-1, +1}}, got {0}")]
    InvalidLabel(f64),
    #[error("power exponent must be at least 1, got {0}")]
    BadPower(f64),
    #[error("tube width must be positive and finite, got {0}")]
    BadTubeWidth(f64),
    #[error("label bound must be nonnegative and finite, got {0}")]
    BadLabelBound(f64),
}

/// Growth and smoothness constants of a loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Growth {
    /// Exponent in the left-derivative bound `c_q (1 + |a|^q)`.
    pub q: f64,
    /// Constant in the left-derivative bound.
    pub c_q: f64,
    /// `sup_y V(y, 0)` over admissible labels.
    pub sup_at_zero: f64,
    /// Lipschitz constant of `V'(y, .)` when the loss is smooth.
    pub grad_lipschitz: Option<f64>,
}

/// Supported convex losses. Regression losses carry the label bound `B`
/// (`|y| <= B`) their constants depend on; classification losses fix
/// labels to {-1, +1} and need no bound.
#[derive(Debug, Clone, PartialEq)]
pub enum Loss {
    /// `(y - a)^2`
    Square { label_bound: f64 },
    /// `|y - a|`
    Absolute { label_bound: f64 },
    /// `|y - a|^p`, integer `p >= 1`
    PthPower { p: u32, label_bound: f64 },
    /// `max(1 - ya, 0)`, labels in {-1, +1}
    Hinge,
    /// `max(|y - a| - epsilon, 0)`
    EpsInsensitive { epsilon: f64, label_bound: f64 },
    /// `max(|y - a| - epsilon, 0)^p`, real `p > 1`
    EpsInsensitiveP { epsilon: f64, p: f64, label_bound: f64 },
    /// `ln(1 + exp(-ya))`, labels in {-1, +1}
    Logistic,
}

impl Loss {
    pub fn square(label_bound: f64) -> Result<Self, LossError> {
        check_label_bound(label_bound)?;
        Ok(Loss::Square { label_bound })
    }

    pub fn absolute(label_bound: f64) -> Result<Self, LossError> {
        check_label_bound(label_bound)?;
        Ok(Loss::Absolute { label_bound })
    }

    pub fn pth_power(p: u32, label_bound: f64) -> Result<Self, LossError> {
        if p == 0 {
            return Err(LossError::BadPower(0.0));
        }
        check_label_bound(label_bound)?;
        Ok(Loss::PthPower { p, label_bound })
    }

    pub fn hinge() -> Self {
        Loss::Hinge
    }

    pub fn eps_insensitive(epsilon: f64, label_bound: f64) -> Result<Self, LossError> {
        check_tube(epsilon)?;
        check_label_bound(label_bound)?;
        Ok(Loss::EpsInsensitive { epsilon, label_bound })
    }

    pub fn eps_insensitive_p(epsilon: f64, p: f64, label_bound: f64) -> Result<Self, LossError> {
        check_tube(epsilon)?;
        if !(p > 1.0 && p.is_finite()) {
            return Err(LossError::BadPower(p));
        }
        check_label_bound(label_bound)?;
        Ok(Loss::EpsInsensitiveP { epsilon, p, label_bound })
    }

    pub fn logistic() -> Self {
        Loss::Logistic
    }

    /// True for losses whose labels must lie in {-1, +1}.
    pub fn is_classification(&self) -> bool {
        matches!(self, Loss::Hinge | Loss::Logistic)
    }

    /// Validates every label against this loss's domain.
    pub fn check_labels(&self, labels: &[f64]) -> Result<(), LossError> {
        if self.is_classification() {
            for &y in labels {
                check_binary_label(y)?;
            }
        }
        Ok(())
    }

    /// `V(y, a)`.
    pub fn value(&self, y: f64, a: f64) -> Result<f64, LossError> {
        Ok(match self {
            Loss::Square { .. } => (y - a) * (y - a),
            Loss::Absolute { .. } => (y - a).abs(),
            Loss::PthPower { p, .. } => (y - a).abs().powi(*p as i32),
            Loss::Hinge => {
                check_binary_label(y)?;
                (1.0 - y * a).max(0.0)
            }
            Loss::EpsInsensitive { epsilon, .. } => ((y - a).abs() - epsilon).max(0.0),
            Loss::EpsInsensitiveP { epsilon, p, .. } => {
                ((y - a).abs() - epsilon).max(0.0).powf(*p)
            }
            Loss::Logistic => {
                check_binary_label(y)?;
                softplus(-y * a)
            }
        })
    }

    /// Left derivative of `V(y, .)` at `a`; non-decreasing in `a`.
    pub fn left_derivative(&self, y: f64, a: f64) -> Result<f64, LossError> {
        Ok(match self {
            Loss::Square { .. } => 2.0 * (a - y),
            Loss::Absolute { .. } => {
                if a <= y {
                    -1.0
                } else {
                    1.0
                }
            }
            Loss::PthPower { p, .. } => {
                let p = *p;
                if a <= y {
                    -(p as f64) * (y - a).powi(p as i32 - 1)
                } else {
                    (p as f64) * (a - y).powi(p as i32 - 1)
                }
            }
            Loss::Hinge => {
                check_binary_label(y)?;
                if y > 0.0 {
                    // max(1 - a, 0): sloped branch holds up to and including a = 1.
                    if a <= 1.0 {
                        -1.0
                    } else {
                        0.0
                    }
                } else {
                    // max(1 + a, 0): flat branch holds up to and including a = -1.
                    if a <= -1.0 {
                        0.0
                    } else {
                        1.0
                    }
                }
            }
            Loss::EpsInsensitive { epsilon, .. } => {
                // Lower tube edge keeps the sloped branch (left limit),
                // upper edge keeps the flat one.
                let d = a - y;
                if d <= -epsilon {
                    -1.0
                } else if d > *epsilon {
                    1.0
                } else {
                    0.0
                }
            }
            Loss::EpsInsensitiveP { epsilon, p, .. } => {
                let d = a - y;
                if d < -epsilon {
                    -p * (-d - epsilon).powf(p - 1.0)
                } else if d > *epsilon {
                    p * (d - epsilon).powf(p - 1.0)
                } else {
                    0.0
                }
            }
            Loss::Logistic => {
                check_binary_label(y)?;
                -y / (1.0 + (y * a).exp())
            }
        })
    }

    /// Growth exponent, growth constant, value bound at zero, and
    /// derivative Lipschitz constant (when the loss is smooth).
    pub fn growth(&self) -> Growth {
        match self {
            Loss::Square { label_bound } => Growth {
                q: 1.0,
                c_q: 2.0 * label_bound.max(1.0),
                sup_at_zero: label_bound * label_bound,
                grad_lipschitz: Some(2.0),
            },
            Loss::Absolute { label_bound } => Growth {
                q: 0.0,
                c_q: 0.5,
                sup_at_zero: *label_bound,
                grad_lipschitz: None,
            },
            Loss::PthPower { p, label_bound } => {
                if *p == 1 {
                    return Loss::Absolute { label_bound: *label_bound }.growth();
                }
                let pf = *p as f64;
                Growth {
                    q: pf - 1.0,
                    c_q: power_growth_constant(pf, *label_bound),
                    sup_at_zero: label_bound.powi(*p as i32),
                    grad_lipschitz: (*p == 2).then_some(2.0),
                }
            }
            Loss::Hinge => Growth {
                q: 0.0,
                c_q: 0.5,
                sup_at_zero: 1.0,
                grad_lipschitz: None,
            },
            Loss::EpsInsensitive { epsilon, label_bound } => Growth {
                q: 0.0,
                c_q: 0.5,
                sup_at_zero: (label_bound - epsilon).max(0.0),
                grad_lipschitz: None,
            },
            Loss::EpsInsensitiveP { epsilon, p, label_bound } => Growth {
                q: p - 1.0,
                c_q: power_growth_constant(*p, *label_bound),
                sup_at_zero: (label_bound - epsilon).max(0.0).powf(*p),
                grad_lipschitz: (*p == 2.0).then_some(2.0),
            },
            Loss::Logistic => Growth {
                q: 0.0,
                c_q: 1.0,
                sup_at_zero: std::f64::consts::LN_2,
                grad_lipschitz: Some(1.0),
            },
        }
    }
}

/// Growth constant for `|y - a|^p`-type losses with `|y| <= B`:
/// `|V'| <= p (|a| + B)^(p-1) <= c_q (1 + |a|^(p-1))` with
/// `c_q = p * max(1, 2^(p-2)) * max(1, B)^(p-1)`.
fn power_growth_constant(p: f64, label_bound: f64) -> f64 {
    p * 2f64.powf(p - 2.0).max(1.0) * label_bound.max(1.0).powf(p - 1.0)
}

/// Largest absolute label in a sample; the natural bound when none is configured.
pub fn observed_label_bound(labels: &[f64]) -> f64 {
    labels.iter().fold(0.0, |acc, y| acc.max(y.abs()))
}

/// Numerically stable `ln(1 + exp(u))`.
fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

fn check_binary_label(y: f64) -> Result<(), LossError> {
    if y == 1.0 || y == -1.0 {
        Ok(())
    } else {
        Err(LossError::InvalidLabel(y))
    }
}

fn check_tube(epsilon: f64) -> Result<(), LossError> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(LossError::BadTubeWidth(epsilon))
    }
}

fn check_label_bound(b: f64) -> Result<(), LossError> {
    if b >= 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(LossError::BadLabelBound(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_examples() {
        assert_eq!(Loss::hinge().value(1.0, 0.0).unwrap(), 1.0);
        let logistic_at_zero = Loss::logistic().value(1.0, 0.0).unwrap();
        assert!((logistic_at_zero - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(Loss::square(2.0).unwrap().value(2.0, 0.5).unwrap(), 2.25);
    }

    #[test]
    fn left_derivative_examples() {
        assert_eq!(Loss::square(1.0).unwrap().left_derivative(1.0, 3.0).unwrap(), 4.0);
        assert_eq!(Loss::hinge().left_derivative(1.0, 1.0).unwrap(), -1.0);
        assert_eq!(Loss::hinge().left_derivative(1.0, 1.0 + 1e-12).unwrap(), 0.0);
        assert_eq!(Loss::hinge().left_derivative(-1.0, -1.0).unwrap(), 0.0);
        assert_eq!(Loss::hinge().left_derivative(-1.0, -0.5).unwrap(), 1.0);
        assert_eq!(Loss::logistic().left_derivative(1.0, 0.0).unwrap(), -0.5);
    }

    #[test]
    fn absolute_uses_left_derivative_at_kink() {
        let l = Loss::absolute(1.0).unwrap();
        assert_eq!(l.left_derivative(0.7, 0.7).unwrap(), -1.0);
        assert_eq!(l.left_derivative(0.7, 0.7 + 1e-9).unwrap(), 1.0);
    }

    #[test]
    fn eps_insensitive_zones() {
        let l = Loss::eps_insensitive(0.5, 2.0).unwrap();
        assert_eq!(l.left_derivative(1.0, 0.2).unwrap(), -1.0);
        // Lower tube edge: left limit comes from the sloped branch.
        assert_eq!(l.left_derivative(1.0, 0.5).unwrap(), -1.0);
        assert_eq!(l.left_derivative(1.0, 1.0).unwrap(), 0.0);
        // Upper tube edge: left limit comes from inside the tube.
        assert_eq!(l.left_derivative(1.0, 1.5).unwrap(), 0.0);
        assert_eq!(l.left_derivative(1.0, 1.6).unwrap(), 1.0);
        assert_eq!(l.value(1.0, 1.6).unwrap(), 0.10000000000000009);
    }

    #[test]
    fn eps_insensitive_p_is_flat_at_tube_edges() {
        let l = Loss::eps_insensitive_p(0.5, 2.0, 2.0).unwrap();
        assert_eq!(l.left_derivative(1.0, 0.5).unwrap(), 0.0);
        assert_eq!(l.left_derivative(1.0, 1.5).unwrap(), 0.0);
        assert!((l.left_derivative(1.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((l.left_derivative(1.0, 0.0).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn growth_constants() {
        let h = Loss::hinge().growth();
        assert_eq!((h.q, h.c_q, h.sup_at_zero, h.grad_lipschitz), (0.0, 0.5, 1.0, None));

        let lg = Loss::logistic().growth();
        assert_eq!(lg.q, 0.0);
        assert_eq!(lg.c_q, 1.0);
        assert!((lg.sup_at_zero - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(lg.grad_lipschitz, Some(1.0));

        let sq = Loss::square(2.0).unwrap().growth();
        assert_eq!((sq.q, sq.c_q, sq.sup_at_zero, sq.grad_lipschitz), (1.0, 4.0, 4.0, Some(2.0)));

        // p = 2 power loss matches the square loss constants.
        let p2 = Loss::pth_power(2, 2.0).unwrap().growth();
        assert_eq!((p2.q, p2.c_q, p2.sup_at_zero, p2.grad_lipschitz), (1.0, 4.0, 4.0, Some(2.0)));

        // p = 1 power loss matches the absolute loss constants.
        let p1 = Loss::pth_power(1, 3.0).unwrap().growth();
        assert_eq!((p1.q, p1.c_q, p1.sup_at_zero, p1.grad_lipschitz), (0.0, 0.5, 3.0, None));

        let eps = Loss::eps_insensitive(0.5, 2.0).unwrap().growth();
        assert_eq!(eps.sup_at_zero, 1.5);
        let eps_wide = Loss::eps_insensitive(3.0, 2.0).unwrap().growth();
        assert_eq!(eps_wide.sup_at_zero, 0.0);
    }

    #[test]
    fn classification_losses_reject_bad_labels() {
        assert_eq!(
            Loss::hinge().value(0.5, 0.0).unwrap_err(),
            LossError::InvalidLabel(0.5)
        );
        assert_eq!(
            Loss::logistic().left_derivative(2.0, 0.0).unwrap_err(),
            LossError::InvalidLabel(2.0)
        );
        assert!(Loss::hinge().check_labels(&[1.0, -1.0, 1.0]).is_ok());
        assert!(Loss::hinge().check_labels(&[1.0, 0.0]).is_err());
        // Regression losses accept any finite label.
        assert!(Loss::square(5.0).unwrap().check_labels(&[3.7, -4.2]).is_ok());
    }

    #[test]
    fn constructor_validation() {
        assert!(Loss::pth_power(0, 1.0).is_err());
        assert!(Loss::eps_insensitive(0.0, 1.0).is_err());
        assert!(Loss::eps_insensitive_p(0.1, 1.0, 1.0).is_err());
        assert!(Loss::square(-1.0).is_err());
        assert!(Loss::square(f64::NAN).is_err());
    }

    #[test]
    fn observed_bound_is_max_abs() {
        assert_eq!(observed_label_bound(&[0.5, -2.0, 1.5]), 2.0);
        assert_eq!(observed_label_bound(&[]), 0.0);
    }
}
