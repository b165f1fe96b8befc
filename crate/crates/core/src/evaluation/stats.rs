//! Paired two-tailed Student t-test.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=1000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!(
            "incomplete beta needs a, b > 0 and x in [0, 1]; got a={a} b={b} x={x}"
        )));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    Ok(if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    })
}

/// Two-tailed p-value of Student's t with `df` degrees of freedom.
pub fn student_t_two_tailed(t: f64, df: f64) -> Result<f64> {
    if !(df > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "t-test needs df > 0 and finite t; got df={df} t={t}"
        )));
    }
    incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    /// `None` when the differences have zero variance.
    pub t: Option<f64>,
    pub p: f64,
    pub significant: bool,
}

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Paired t-test on per-query differences `a - b`. Zero-variance differences
/// leave `t` undefined, report `p = 1` and are never significant.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "paired t-test: {} vs {} values",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "paired t-test needs at least 2 pairs".into(),
        ));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var <= 0.0 {
        return Ok(TTestResult {
            t: None,
            p: 1.0,
            significant: false,
        });
    }
    let t = mean / (var / n as f64).sqrt();
    let p = student_t_two_tailed(t, (n - 1) as f64)?;
    Ok(TTestResult {
        t: Some(t),
        p,
        significant: p < SIGNIFICANCE_LEVEL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        for x in [0.1, 0.37, 0.5, 0.9] {
            assert!((incomplete_beta(1.0, 1.0, x).unwrap() - x).abs() < 1e-13);
            assert!((incomplete_beta(2.0, 1.0, x).unwrap() - x * x).abs() < 1e-13);
            assert!(
                (incomplete_beta(1.0, 3.0, x).unwrap() - (1.0 - (1.0 - x).powi(3))).abs() < 1e-13
            );
        }
        assert!(incomplete_beta(0.0, 1.0, 0.5).is_err());
        assert!(incomplete_beta(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn t_with_one_df_is_cauchy() {
        for t in [0.3f64, 1.0, 4.0] {
            let expected = 1.0 - 2.0 * t.atan() / std::f64::consts::PI;
            assert!((student_t_two_tailed(t, 1.0).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn worked_example() {
        let a = [0.6, 0.7, 0.45, 0.65, 0.6];
        let b = [0.5; 5];
        let r = paired_t_test(&a, &b).unwrap();
        let t = r.t.unwrap();
        assert!((t - 0.1 / 0.00175f64.sqrt()).abs() < 1e-6, "{t}");
        assert!((r.p - 0.0752).abs() < 5e-4, "{}", r.p);
        assert!(!r.significant);
    }

    #[test]
    fn symmetric_and_degenerate() {
        let a = [0.3, 0.5, 0.9, 0.2];
        let b = [0.1, 0.55, 0.4, 0.0];
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        assert_eq!(ab.p, ba.p);
        assert_eq!(ab.t.unwrap(), -ba.t.unwrap());
        assert!(!paired_t_test(&a, &a).unwrap().significant);
        let r = paired_t_test(&[2.0; 4], &[1.0; 4]).unwrap();
        assert_eq!((r.t, r.significant), (None, false));
        assert!(paired_t_test(&a, &b[..3]).is_err());
        assert!(paired_t_test(&a[..1], &b[..1]).is_err());
    }
}
