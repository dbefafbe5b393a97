//! Small statistics helpers: ordinary least squares with slope standard
//! error, and the coefficient of determination for bias fits.

/// OLS fit `y = a + b x`.
#[derive(Clone, Copy, Debug)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Standard error of the slope (residual based, `n - 2` dof).
    pub slope_se: f64,
    pub r_squared: f64,
    pub n: usize,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    assert!(n >= 2);
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|xi| (xi - mx) * (xi - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let syy: f64 = y.iter().map(|yi| (yi - my) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let r = yi - intercept - slope * xi;
            r * r
        })
        .sum();
    let slope_se = if n > 2 {
        (ss_res / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    LineFit {
        intercept,
        slope,
        slope_se,
        r_squared,
        n,
    }
}

/// One-sided 95% Student-t quantile for `dof` degrees of freedom; the small
/// table covers the tiny fits used here, larger dof fall back to the normal
/// quantile.
pub fn t_quantile_95(dof: usize) -> f64 {
    const TABLE: [f64; 10] = [
        6.314, 2.920, 2.353, 2.132, 2.015, 1.943, 1.895, 1.860, 1.833, 1.812,
    ];
    if dof == 0 {
        f64::INFINITY
    } else if dof <= TABLE.len() {
        TABLE[dof - 1]
    } else {
        1.645
    }
}

/// "Slope is <= 0 at 95% confidence": the fitted slope is not significantly
/// positive, i.e. `slope <= t_{95%}(dof) * se`.
pub fn slope_nonpositive_95(fit: &LineFit) -> bool {
    if fit.n < 3 {
        return fit.slope <= 0.0;
    }
    fit.slope <= t_quantile_95(fit.n - 2) * fit.slope_se
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn sample_std(x: &[f64]) -> f64 {
    let m = mean(x);
    let v = x.iter().map(|xi| (xi - m) * (xi - m)).sum::<f64>() / (x.len() as f64 - 1.0);
    v.sqrt()
}

/// Standard error of the mean.
pub fn stderr(x: &[f64]) -> f64 {
    sample_std(x) / (x.len() as f64).sqrt()
}
