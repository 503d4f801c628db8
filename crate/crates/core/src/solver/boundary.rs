use std::fmt;

use crate::error::{Error, Result};

/// Boundary data g(x) = |x|²/2 + perturbation(x).
///
/// All kinds except `QuadraticExcess` grow like o(|x|²); that one is the
/// exactly-quadratic negative control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryProfile {
    /// perturbation 0
    QuadraticBase,
    /// a·⟨ê, x⟩ + b with ê = (1, …, 1)/√(2n) the unit diagonal direction
    Linear { a: f64, b: f64 },
    /// c·|x|^α with 0 < α < 2
    Power { c: f64, alpha: f64 },
    /// c·|x|² / ln(e + |x|)
    LogDamped { c: f64 },
    /// c·|x|²
    QuadraticExcess { c: f64 },
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

impl BoundaryProfile {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidProblem(format!("{name} must be finite")))
            }
        };
        match *self {
            Self::QuadraticBase => Ok(()),
            Self::Linear { a, b } => finite(a, "a").and(finite(b, "b")),
            Self::Power { c, alpha } => {
                finite(c, "c")?;
                if alpha > 0.0 && alpha < 2.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidProblem(format!(
                        "power profile needs 0 < alpha < 2, got {alpha}"
                    )))
                }
            }
            Self::LogDamped { c } | Self::QuadraticExcess { c } => finite(c, "c"),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::QuadraticBase => "quadratic_base",
            Self::Linear { .. } => "linear",
            Self::Power { .. } => "power",
            Self::LogDamped { .. } => "logdamped",
            Self::QuadraticExcess { .. } => "quadratic_excess",
        }
    }

    pub fn perturbation(&self, x: &[f64]) -> f64 {
        match *self {
            Self::QuadraticBase => 0.0,
            Self::Linear { a, b } => {
                let s: f64 = x.iter().sum();
                a * s / (x.len() as f64).sqrt() + b
            }
            Self::Power { c, alpha } => c * norm_sq(x).sqrt().powf(alpha),
            Self::LogDamped { c } => {
                let r2 = norm_sq(x);
                c * r2 / (std::f64::consts::E + r2.sqrt()).ln()
            }
            Self::QuadraticExcess { c } => c * norm_sq(x),
        }
    }

    /// perturbation(R·x) / R², the boundary data of the rescaled function u(R·)/R² − |x|²/2.
    pub fn rescaled_perturbation(&self, x: &[f64], scale: f64) -> f64 {
        if scale == 1.0 {
            return self.perturbation(x);
        }
        let y: Vec<f64> = x.iter().map(|v| v * scale).collect();
        self.perturbation(&y) / (scale * scale)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        0.5 * norm_sq(x) + self.perturbation(x)
    }

    pub fn rescaled_value(&self, x: &[f64], scale: f64) -> f64 {
        0.5 * norm_sq(x) + self.rescaled_perturbation(x, scale)
    }

    /// Degree of homogeneity of the perturbation when it has one.
    pub fn homogeneity_degree(&self) -> Option<f64> {
        match *self {
            Self::Linear { b, .. } if b == 0.0 => Some(1.0),
            Self::Power { alpha, .. } => Some(alpha),
            Self::QuadraticExcess { .. } => Some(2.0),
            _ => None,
        }
    }
}

impl fmt::Display for BoundaryProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::QuadraticBase => write!(f, "quadratic_base"),
            Self::Linear { a, b } => write!(f, "linear(a={a}, b={b})"),
            Self::Power { c, alpha } => write!(f, "power(c={c}, alpha={alpha})"),
            Self::LogDamped { c } => write!(f, "logdamped(c={c})"),
            Self::QuadraticExcess { c } => write!(f, "quadratic_excess(c={c})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_alpha_must_be_subquadratic() {
        assert!(BoundaryProfile::Power { c: 0.1, alpha: 2.0 }.validate().is_err());
        assert!(BoundaryProfile::Power { c: 0.1, alpha: 0.0 }.validate().is_err());
        assert!(BoundaryProfile::Power { c: 0.1, alpha: 1.5 }.validate().is_ok());
    }

    #[test]
    fn linear_sup_on_unit_box_corner() {
        let p = BoundaryProfile::Linear { a: 0.3, b: 0.0 };
        let corner = [1.0; 4];
        assert!((p.perturbation(&corner) - 0.3 * 2.0).abs() < 1e-15);
        assert!((p.rescaled_perturbation(&corner, 4.0) - 0.3 * 2.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn rescaling_follows_homogeneity() {
        let x = [0.3, -0.8, 0.5, 1.0];
        for p in [
            BoundaryProfile::Power { c: 0.1, alpha: 1.5 },
            BoundaryProfile::Linear { a: -0.2, b: 0.0 },
            BoundaryProfile::QuadraticExcess { c: 0.1 },
        ] {
            let deg = p.homogeneity_degree().unwrap();
            for r in [2.0_f64, 8.0] {
                let expected = p.perturbation(&x) * r.powf(deg - 2.0);
                assert!((p.rescaled_perturbation(&x, r) - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn log_damped_decays_slowly() {
        let p = BoundaryProfile::LogDamped { c: 0.1 };
        let x = [1.0, 0.0];
        let a = p.rescaled_perturbation(&x, 10.0);
        let b = p.rescaled_perturbation(&x, 1000.0);
        assert!(b < a && b > 0.0);
    }
}
