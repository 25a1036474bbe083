use serde::{Deserialize, Serialize};

use super::{pair, CompareError, MIN_PAIRS};
use crate::metrics::MetricVector;

/// Relative eigenvalue size below which the fitted covariance is singular.
const DEGENERATE_RATIO: f64 = 1e-12;

/// Equal-density contour of a bivariate normal fitted to `(log10 x, log10 y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    pub center: (f64, f64),
    /// `(major, minor)`, both already scaled for `coverage`.
    pub semi_axes: (f64, f64),
    /// Angle of the major axis from the x axis, in `(-pi/2, pi/2]`.
    pub orientation_radians: f64,
    pub coverage: f64,
    /// Sample covariance `(var x, cov xy, var y)` with the `n - 1` divisor.
    pub covariance: (f64, f64, f64),
    pub n: usize,
    /// Set when the covariance is singular; the minor axis is then 0.
    pub degenerate: bool,
}

impl EllipseParams {
    /// Whether a point given in log space lies inside or on the ellipse.
    pub fn contains(&self, lx: f64, ly: f64) -> bool {
        let (major, minor) = self.semi_axes;
        let (dx, dy) = (lx - self.center.0, ly - self.center.1);
        let (s, c) = self.orientation_radians.sin_cos();
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        if minor == 0.0 {
            return v.abs() <= f64::EPSILON * major.max(1.0) && u.abs() <= major;
        }
        (u / major).powi(2) + (v / minor).powi(2) <= 1.0
    }
}

/// Chi-square quantile with two degrees of freedom: `-2 ln(1 - coverage)`.
pub(crate) fn chi2_two_dof(coverage: f64) -> f64 {
    -2.0 * (-coverage).ln_1p()
}

/// Fits the `coverage` density ellipse to the log-transformed pairs.
pub fn density_ellipse(
    x: &MetricVector,
    y: &MetricVector,
    coverage: f64,
) -> Result<EllipseParams, CompareError> {
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(CompareError::InvalidCoverage(coverage));
    }
    let p = pair(x, y, |v| v > 0.0);
    let n = p.ids.len();
    if n < MIN_PAIRS {
        return Err(CompareError::TooFewPairs { found: n });
    }
    let lx: Vec<f64> = p.xs.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = p.ys.iter().map(|v| v.log10()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in lx.iter().zip(&ly) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let denom = (n - 1) as f64;
    let (vxx, vxy, vyy) = (sxx / denom, sxy / denom, syy / denom);

    // Closed-form eigen decomposition of the symmetric 2x2 covariance.
    let mid = 0.5 * (vxx + vyy);
    let radius = (0.25 * (vxx - vyy).powi(2) + vxy * vxy).sqrt();
    let major_var = mid + radius;
    let mut minor_var = (mid - radius).max(0.0);
    let degenerate = major_var <= 0.0 || minor_var <= DEGENERATE_RATIO * major_var;
    if degenerate {
        minor_var = 0.0;
    }
    let mut orientation = 0.5 * (2.0 * vxy).atan2(vxx - vyy);
    if orientation <= -std::f64::consts::FRAC_PI_2 {
        orientation += std::f64::consts::PI;
    }

    let scale = chi2_two_dof(coverage);
    Ok(EllipseParams {
        center: (mx, my),
        semi_axes: ((major_var * scale).sqrt(), (minor_var * scale).sqrt()),
        orientation_radians: orientation,
        coverage,
        covariance: (vxx, vxy, vyy),
        n,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricName;

    fn from_logs(points: &[(f64, f64)]) -> (MetricVector, MetricVector) {
        let name = |s: &str| MetricName::Custom(s.into());
        let x = MetricVector::from_pairs(
            name("x"),
            points.iter().enumerate().map(|(i, p)| (format!("j{i:03}"), 10f64.powf(p.0))),
        )
        .unwrap();
        let y = MetricVector::from_pairs(
            name("y"),
            points.iter().enumerate().map(|(i, p)| (format!("j{i:03}"), 10f64.powf(p.1))),
        )
        .unwrap();
        (x, y)
    }

    #[test]
    fn identity_covariance_gives_circle() {
        let a = 1.5f64.sqrt();
        let (x, y) = from_logs(&[(2.0 + a, 1.0), (2.0 - a, 1.0), (2.0, 1.0 + a), (2.0, 1.0 - a)]);
        let e = density_ellipse(&x, &y, 0.95).unwrap();
        let expected = (-2.0 * 0.05f64.ln()).sqrt();
        assert!((expected - 2.4477).abs() < 1e-4);
        assert!((e.semi_axes.0 - expected).abs() < 1e-6);
        assert!((e.semi_axes.1 - expected).abs() < 1e-6);
        assert!((e.center.0 - 2.0).abs() < 1e-12 && (e.center.1 - 1.0).abs() < 1e-12);
        assert!(!e.degenerate);
    }

    #[test]
    fn collinear_data_is_degenerate() {
        let (x, y) = from_logs(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0), (3.0, 7.0)]);
        let e = density_ellipse(&x, &y, 0.95).unwrap();
        assert!(e.degenerate);
        assert_eq!(e.semi_axes.1, 0.0);
        assert!((e.orientation_radians - 2f64.atan()).abs() < 1e-9);
    }

    #[test]
    fn orientation_follows_dominant_axis() {
        let (x, y) = from_logs(&[(0.0, 0.0), (4.0, 0.1), (-4.0, -0.1), (0.0, 0.5), (0.0, -0.5)]);
        let e = density_ellipse(&x, &y, 0.5).unwrap();
        assert!(e.orientation_radians.abs() < 0.1);
        assert!(e.semi_axes.0 > e.semi_axes.1);
        let (x, y) = from_logs(&[(0.0, 0.0), (0.1, 4.0), (-0.1, -4.0), (0.5, 0.0), (-0.5, 0.0)]);
        let e = density_ellipse(&x, &y, 0.5).unwrap();
        assert!((e.orientation_radians.abs() - std::f64::consts::FRAC_PI_2).abs() < 0.1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (x, y) = from_logs(&[(0.0, 0.0), (1.0, 2.0), (2.0, 1.0)]);
        assert_eq!(density_ellipse(&x, &y, 1.0), Err(CompareError::InvalidCoverage(1.0)));
        assert_eq!(density_ellipse(&x, &y, 0.0), Err(CompareError::InvalidCoverage(0.0)));
        let (x, y) = from_logs(&[(0.0, 0.0), (1.0, 2.0)]);
        assert_eq!(density_ellipse(&x, &y, 0.9), Err(CompareError::TooFewPairs { found: 2 }));
    }

    #[test]
    fn contains_center_not_far_point() {
        let (x, y) = from_logs(&[(0.0, 0.0), (1.0, 2.0), (2.0, 1.0), (1.5, 1.5)]);
        let e = density_ellipse(&x, &y, 0.95).unwrap();
        assert!(e.contains(e.center.0, e.center.1));
        assert!(!e.contains(e.center.0 + 100.0, e.center.1));
    }
}
