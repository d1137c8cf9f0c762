use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A lower threshold on `q` together with the range condition on `p` under which the
/// corresponding window `threshold < q ≤ 1` is claimed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowBound {
    pub formula: String,
    pub threshold: Option<f64>,
    pub p_range: String,
    pub p_admissible: bool,
}

impl WindowBound {
    fn new(formula: &str, p_range: &str, p_admissible: bool, value: f64) -> Self {
        Self {
            formula: formula.to_string(),
            threshold: (value.is_finite() && value > 0.0).then_some(value),
            p_range: p_range.to_string(),
            p_admissible,
        }
    }

    /// `q` lies in the open-closed window above the threshold.
    pub fn admits(&self, q: f64) -> bool {
        match self.threshold {
            Some(t) => self.p_admissible && q > t && q <= 1.0,
            None => false,
        }
    }

    pub fn nonempty(&self) -> bool {
        self.p_admissible && self.threshold.is_some_and(|t| t < 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentWindow {
    pub p: f64,
    /// `2p/(1−p)`, truncation tails.
    pub truncation: WindowBound,
    /// `2p/(2−3p)`, classical scaling limit.
    pub classical_limit: WindowBound,
    /// `2p/(1−4p)`, convergence of the truncated maps.
    pub truncated_convergence: WindowBound,
    /// `4p/(p+2)`, orthonormal targets.
    pub orthonormal_targets: WindowBound,
}

pub fn exponent_windows(p: f64) -> Result<ExponentWindow> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!("p = {p} must lie in (0, 1]")));
    }
    Ok(ExponentWindow {
        p,
        truncation: WindowBound::new("2p/(1-p)", "0 < p < 1", p < 1.0, 2.0 * p / (1.0 - p)),
        classical_limit: WindowBound::new("2p/(2-3p)", "0 < p < 2/3", p < 2.0 / 3.0, 2.0 * p / (2.0 - 3.0 * p)),
        truncated_convergence: WindowBound::new(
            "2p/(1-4p)",
            "0 < p < 1/6",
            p < 1.0 / 6.0,
            2.0 * p / (1.0 - 4.0 * p),
        ),
        orthonormal_targets: WindowBound::new("4p/(p+2)", "0 < p < 2/3", p < 2.0 / 3.0, 4.0 * p / (p + 2.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_at_one_tenth() {
        let w = exponent_windows(0.1).unwrap();
        assert!((w.truncation.threshold.unwrap() - 0.2 / 0.9).abs() <= 4.0 * f64::EPSILON);
        assert!((w.classical_limit.threshold.unwrap() - 0.2 / 1.7).abs() <= 4.0 * f64::EPSILON);
        assert!((w.truncated_convergence.threshold.unwrap() - 0.2 / 0.6).abs() <= 4.0 * f64::EPSILON);
        assert!((w.orthonormal_targets.threshold.unwrap() - 0.4 / 2.1).abs() <= 4.0 * f64::EPSILON);
        assert!((w.truncation.threshold.unwrap() - 0.2222222222).abs() < 1e-9);
        assert!((w.classical_limit.threshold.unwrap() - 0.1176470588).abs() < 1e-9);
        assert!((w.truncated_convergence.threshold.unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((w.orthonormal_targets.threshold.unwrap() - 0.1904761905).abs() < 1e-9);
        assert!(w.truncated_convergence.admits(0.5));
        assert!(!w.truncated_convergence.admits(0.3));
    }

    #[test]
    fn boundary_of_the_convergence_window() {
        let w = exponent_windows(1.0 / 6.0).unwrap();
        assert!(!w.truncated_convergence.p_admissible);
        assert!(!w.truncated_convergence.nonempty());
        assert!(w.truncation.nonempty());
    }

    #[test]
    fn small_p_limit_and_range_errors() {
        let w = exponent_windows(1e-9).unwrap();
        for b in [&w.truncation, &w.classical_limit, &w.truncated_convergence, &w.orthonormal_targets] {
            assert!(b.threshold.unwrap() < 1e-8);
        }
        assert!(exponent_windows(0.0).is_err());
        assert!(exponent_windows(1.5).is_err());
        let one = exponent_windows(1.0).unwrap();
        assert!(!one.truncation.p_admissible && one.truncation.threshold.is_none());
    }
}
