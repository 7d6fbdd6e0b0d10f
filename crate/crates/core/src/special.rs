//! Special functions and quantiles used by the interval half-widths.
//!
//! Implemented here rather than pulled from a statistics crate so that
//! results do not shift with a dependency upgrade.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 100_000;

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cont_frac(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cont_frac(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cont_frac(a: f64, x: f64) -> f64 {
    // modified Lentz
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
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
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x > 0.0 {
        gamma_q(0.5, x * x)
    } else {
        1.0 + gamma_p(0.5, x * x)
    }
}

/// Standard normal CDF `Φ(x)`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cont_frac(a, b, x) / a
    } else {
        1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b
    }
}

fn beta_cont_frac(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
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

// Acklam's rational approximation to the normal quantile (relative error
// below 1.15e-9), polished by one Halley step against `erfc`.
const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_690e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const ACKLAM_LOW: f64 = 0.024_25;

fn acklam(p: f64) -> f64 {
    let (a, b, c, d) = (&ACKLAM_A, &ACKLAM_B, &ACKLAM_C, &ACKLAM_D);
    if p < ACKLAM_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    } else if p <= 1.0 - ACKLAM_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    }
}

/// Inverse standard normal CDF.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("probability {p} outside (0, 1)")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let x = acklam(p);
    // Halley step; work in the smaller tail to keep the residual relative.
    let e = if x < 0.0 {
        0.5 * erfc(-x / SQRT_2) - p
    } else {
        (1.0 - p) - 0.5 * erfc(x / SQRT_2)
    };
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    Ok(x - u / (1.0 + 0.5 * x * u))
}

/// Upper tail `P(T > t)` of Student's t for `t >= 0`.
fn t_upper_tail(df: f64, t: f64) -> f64 {
    0.5 * inc_beta(0.5 * df, 0.5, df / (df + t * t))
}

fn ln_t_pdf_const(df: f64) -> f64 {
    ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * (df * PI).ln()
}

/// Student's t CDF.
pub fn student_t_cdf(df: f64, t: f64) -> f64 {
    let tail = t_upper_tail(df, t.abs());
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Inverse CDF of Student's t with `df` degrees of freedom.
pub fn student_t_quantile(df: u64, p: f64) -> Result<f64> {
    if df < 1 {
        return Err(Error::invalid("degrees of freedom must be at least 1"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("probability {p} outside (0, 1)")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let upper = p > 0.5;
    let tail = if upper { 1.0 - p } else { p };
    let t = match df {
        1 => (PI * (0.5 - tail)).tan(),
        2 => {
            let x = 1.0 - 2.0 * tail;
            x / (2.0 * tail * (1.0 - tail)).sqrt()
        }
        _ => t_tail_inverse(df as f64, tail)?,
    };
    Ok(if upper { t } else { -t })
}

/// Solve `P(T > t) = tail` for `t > 0`, `tail < 1/2`.
fn t_tail_inverse(df: f64, tail: f64) -> Result<f64> {
    let z = -normal_quantile(tail)?;
    // Cornish-Fisher start
    let z2 = z * z;
    let mut t = z
        + z * (z2 + 1.0) / (4.0 * df)
        + z * ((5.0 * z2 + 16.0) * z2 + 3.0) / (96.0 * df * df);
    let ln_c = ln_t_pdf_const(df);
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    for _ in 0..200 {
        let f = t_upper_tail(df, t) - tail;
        if f > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
        let pdf = (ln_c - 0.5 * (df + 1.0) * (t * t / df).ln_1p()).exp();
        let mut next = t + f / pdf;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * t.max(1.0) };
        }
        let step = (next - t).abs();
        t = next;
        if step <= 1e-15 * t.abs() {
            break;
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference values from 40-digit arbitrary precision evaluation.
    const NORMAL_PROBES: [(f64, f64); 20] = [
        (1e-12, -7.034_483_825_301_132),
        (1e-8, -5.612_001_244_174_789),
        (1e-5, -4.264_890_793_922_825),
        (0.001, -3.090_232_306_167_813_5),
        (0.01, -2.326_347_874_040_841),
        (0.025, -1.959_963_984_540_054_2),
        (0.05, -1.644_853_626_951_472_7),
        (0.1, -1.281_551_565_544_600_4),
        (0.2, -0.841_621_233_572_914_2),
        (0.3, -0.524_400_512_708_040_8),
        (0.4, -0.253_347_103_135_799_74),
        (0.5, 0.0),
        (0.6, 0.253_347_103_135_799_74),
        (0.75, 0.674_489_750_196_081_7),
        (0.9, 1.281_551_565_544_600_6),
        (0.95, 1.644_853_626_951_472_3),
        (0.975, 1.959_963_984_540_053_9),
        (0.99, 2.326_347_874_040_840_8),
        (0.999, 3.090_232_306_167_813_3),
        (0.999999, 4.753_424_308_817_088),
    ];

    const T_PROBES: [(u64, f64, f64); 20] = [
        (1, 0.975, 12.706_204_736_174_693),
        (1, 0.9, 3.077_683_537_175_254),
        (2, 0.975, 4.302_652_729_749_462),
        (2, 0.6, 0.288_675_134_594_812_8),
        (3, 0.99, 4.540_702_858_568_132),
        (4, 0.95, 2.131_846_786_326_649_5),
        (5, 0.999, 5.893_429_531_356_009),
        (7, 0.75, 0.711_141_778_081_786_3),
        (10, 0.975, 2.228_138_851_986_274_2),
        (12, 0.995, 3.054_539_589_392_901_6),
        (15, 0.9, 1.340_605_607_850_455_7),
        (20, 0.55, 0.127_266_956_684_606_85),
        (29, 0.975, 2.045_229_642_132_704),
        (30, 0.975, 2.042_272_456_301_238),
        (44, 0.99, 2.414_134_368_168_738),
        (49, 0.975, 2.009_575_237_129_239_3),
        (100, 0.975, 1.983_971_518_523_552),
        (250, 0.9999, 3.774_912_790_618_199_5),
        (1000, 0.975, 1.962_339_080_826_408),
        (100_000, 0.975, 1.959_987_707_534_609_3),
    ];

    #[test]
    fn normal_quantile_against_reference() {
        for (p, want) in NORMAL_PROBES {
            let got = normal_quantile(p).unwrap();
            assert!((got - want).abs() <= 1e-9, "p={p}: {got} vs {want}");
        }
    }

    #[test]
    fn normal_quantile_examples() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!((normal_quantile(0.975).unwrap() - 1.959964).abs() < 1e-6);
        assert!((normal_quantile(0.841344746).unwrap() - 1.0).abs() < 1e-6);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn t_quantile_against_reference() {
        for (df, p, want) in T_PROBES {
            let got = student_t_quantile(df, p).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-8);
            let neg = student_t_quantile(df, 1.0 - p).unwrap();
            assert_relative_eq!(neg, -want, max_relative = 1e-8);
        }
    }

    #[test]
    fn t_quantile_examples() {
        assert!((student_t_quantile(1, 0.975).unwrap() - 12.7062).abs() < 1e-4);
        for df in [1, 2, 3, 17, 1000] {
            assert_eq!(student_t_quantile(df, 0.5).unwrap(), 0.0);
        }
        assert!((student_t_quantile(1_000_000, 0.975).unwrap() - 1.95996).abs() < 1e-4);
        assert!(student_t_quantile(0, 0.9).is_err());
        assert!(student_t_quantile(5, 1.0).is_err());
    }

    #[test]
    fn t_cdf_inverts_quantile() {
        for df in [3u64, 8, 31, 500] {
            for p in [0.01, 0.2, 0.7, 0.95, 0.9995] {
                let t = student_t_quantile(df, p).unwrap();
                assert_relative_eq!(student_t_cdf(df as f64, t), p, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn cdf_reference_points() {
        assert_relative_eq!(normal_cdf(1.0), 0.841_344_746_068_543, max_relative = 1e-13);
        assert_eq!(normal_cdf(0.0), 0.5);
        assert_relative_eq!(ln_gamma(0.5), PI.sqrt().ln(), max_relative = 1e-14);
        assert_relative_eq!(ln_gamma(10.0), 362_880f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(inc_beta(2.0, 3.0, 0.4), 0.5248, max_relative = 1e-12);
    }
}
