use core::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
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

/// Gamma function via the Lanczos approximation (g = 7, 9 terms), with the
/// reflection formula below 0.5.
///
/// Relative error stays below 1e-13 over the `[0.1, 30]` range the ratio
/// tables use.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / (libm::sin(PI * x) * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    libm::sqrt(2.0 * PI) * libm::pow(t, x + 0.5) * libm::exp(-t) * acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_arguments_are_factorials() {
        let mut fact = 1.0;
        for n in 1..20u32 {
            let g = gamma(f64::from(n));
            assert!((g - fact).abs() / fact < 1e-13, "gamma({n}) = {g}, want {fact}");
            fact *= f64::from(n);
        }
    }

    #[test]
    fn half_integer() {
        let root_pi = libm::sqrt(PI);
        assert!((gamma(0.5) - root_pi).abs() < 1e-14);
        assert!((gamma(1.5) - root_pi / 2.0).abs() < 1e-14);
    }

    #[test]
    fn matches_statrs_over_table_range() {
        let mut x = 0.1;
        while x <= 30.0 {
            let want = statrs::function::gamma::gamma(x);
            let got = gamma(x);
            assert!(((got - want) / want).abs() < 1e-12, "x = {x}: {got} vs {want}");
            x += 0.0137;
        }
    }
}
