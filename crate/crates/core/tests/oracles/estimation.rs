//! Exact rational evaluation of the dating and weight regressions.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::ToPrimitive;

/// Exact value of a short decimal literal such as "0.0005".
pub fn dec(s: &str) -> BigRational {
    let neg = s.starts_with('-');
    let digits = s.trim_start_matches('-');
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let num: BigInt = format!("{int}{frac}").parse().unwrap();
    let den = num::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(num, den);
    if neg {
        -r
    } else {
        r
    }
}

pub fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

/// `(coefficient, [hc, bpd, ac, fl] exponents)` for each printed term.
pub const GA_TERMS: [(&str, [u32; 4]); 12] = [
    ("10.6", [0, 0, 0, 0]),
    ("-0.168", [0, 1, 0, 0]),
    ("0.045", [1, 0, 0, 0]),
    ("0.03", [0, 0, 1, 0]),
    ("0.058", [0, 0, 0, 1]),
    ("0.002", [0, 2, 0, 0]),
    ("0.002", [0, 0, 0, 2]),
    ("0.0005", [0, 1, 1, 0]),
    ("-0.005", [0, 1, 0, 1]),
    ("-0.0002", [1, 0, 1, 0]),
    ("0.0008", [1, 0, 0, 1]),
    ("0.0005", [0, 0, 1, 1]),
];

pub const EFW_TERMS: [(&str, [u32; 3]); 5] = [
    ("1.326", [0, 0, 0]),
    ("-0.00326", [0, 1, 1]),
    ("0.0107", [1, 0, 0]),
    ("0.0438", [0, 1, 0]),
    ("0.158", [0, 0, 1]),
];

pub fn ga_oracle(hc: f64, bpd: f64, ac: f64, fl: f64) -> f64 {
    let vars = [exact(hc), exact(bpd), exact(ac), exact(fl)];
    let mut sum = BigRational::from_integer(0.into());
    for (c, pows) in GA_TERMS {
        let mut term = dec(c);
        for (v, p) in vars.iter().zip(pows) {
            term *= num::pow(v.clone(), p as usize);
        }
        sum += term;
    }
    sum.to_f64().unwrap()
}

pub fn efw_exponent_oracle(hc: f64, ac: f64, fl: f64) -> f64 {
    let vars = [exact(hc), exact(ac), exact(fl)];
    let mut sum = BigRational::from_integer(0.into());
    for (c, pows) in EFW_TERMS {
        let mut term = dec(c);
        for (v, p) in vars.iter().zip(pows) {
            term *= num::pow(v.clone(), p as usize);
        }
        sum += term;
    }
    sum.to_f64().unwrap()
}

pub fn efw_oracle(hc: f64, ac: f64, fl: f64) -> f64 {
    (efw_exponent_oracle(hc, ac, fl) * std::f64::consts::LN_10).exp()
}

/// 100 points spread over clinical ranges: HC 8-38, BPD 2-10, AC 8-40, FL 1-8.
pub fn grid() -> Vec<[f64; 4]> {
    let mut pts = Vec::new();
    for i in 0..100 {
        let t = |k: usize, m: usize| ((i * k) % m) as f64 / (m - 1) as f64;
        pts.push([
            8.0 + 30.0 * t(7, 11),
            2.0 + 8.0 * t(3, 7),
            8.0 + 32.0 * t(11, 13),
            1.0 + 7.0 * t(13, 17),
        ]);
    }
    pts.dedup();
    assert_eq!(pts.len(), 100);
    pts
}
