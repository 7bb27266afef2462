//! Fixed rating tables and hand-computed sums of squares.

use sonobiometry::agreement::RatingsTable;

pub const READERS: [&str; 4] = ["FUVAI", "ES1", "ES2", "ES3"];

pub const CASES: [&str; 6] = ["c1", "c2", "c3", "c4", "c5", "c6"];

/// `values[reader][case]`.
pub fn table_a() -> Vec<Vec<f64>> {
    let by_case = [
        [20.1, 20.4, 19.8, 20.6],
        [24.3, 24.0, 24.9, 24.1],
        [18.7, 19.2, 18.5, 19.0],
        [30.2, 29.6, 30.8, 30.1],
        [26.4, 26.9, 26.0, 26.7],
        [22.0, 21.5, 22.6, 21.8],
    ];
    (0..4).map(|r| by_case.iter().map(|c| c[r]).collect()).collect()
}

/// Strong reader biases and a weak case effect.
pub fn table_b() -> Vec<Vec<f64>> {
    vec![
        vec![5.0, 5.2, 4.9, 5.1, 5.3, 4.8],
        vec![5.6, 5.9, 5.5, 5.8, 5.7, 5.6],
        vec![4.4, 4.6, 4.1, 4.5, 4.7, 4.3],
        vec![5.0, 5.5, 4.6, 5.2, 5.1, 4.9],
    ]
}

pub fn table(values: &[Vec<f64>]) -> RatingsTable {
    RatingsTable::from_single_reading(&READERS, &CASES, values)
}

/// Sums of squares by total-minus-parts, the textbook spreadsheet route.
pub struct HandSquares {
    pub msr: f64,
    pub msc: f64,
    pub mse: f64,
    pub msw: f64,
    pub sst: f64,
}

pub fn hand_squares(by_reader: &[Vec<f64>]) -> HandSquares {
    let k = by_reader.len();
    let n = by_reader[0].len();
    let all: Vec<f64> = by_reader.iter().flatten().copied().collect();
    let grand = all.iter().sum::<f64>() / all.len() as f64;
    let sst: f64 = all.iter().map(|x| (x - grand) * (x - grand)).sum();
    let mut ssr = 0.0;
    for c in 0..n {
        let m = (0..k).map(|r| by_reader[r][c]).sum::<f64>() / k as f64;
        ssr += k as f64 * (m - grand) * (m - grand);
    }
    let mut ssc = 0.0;
    for r in by_reader {
        let m = r.iter().sum::<f64>() / n as f64;
        ssc += n as f64 * (m - grand) * (m - grand);
    }
    let sse = sst - ssr - ssc;
    let (nf, kf) = (n as f64, k as f64);
    HandSquares {
        msr: ssr / (nf - 1.0),
        msc: ssc / (kf - 1.0),
        mse: sse / ((nf - 1.0) * (kf - 1.0)),
        msw: (ssc + sse) / (nf * (kf - 1.0)),
        sst,
    }
}

pub fn hand_icc21(h: &HandSquares, n: f64, k: f64) -> f64 {
    (h.msr - h.mse) / (h.msr + (k - 1.0) * h.mse + k * (h.msc - h.mse) / n)
}

pub fn hand_anova_f(by_reader: &[Vec<f64>]) -> f64 {
    let k = by_reader.len();
    let total: usize = by_reader.iter().map(Vec::len).sum();
    let all: Vec<f64> = by_reader.iter().flatten().copied().collect();
    let grand = all.iter().sum::<f64>() / total as f64;
    let sst: f64 = all.iter().map(|x| (x - grand) * (x - grand)).sum();
    let ssb: f64 = by_reader
        .iter()
        .map(|g| {
            let m = g.iter().sum::<f64>() / g.len() as f64;
            g.len() as f64 * (m - grand) * (m - grand)
        })
        .sum();
    let ssw = sst - ssb;
    (ssb / (k - 1) as f64) / (ssw / (total - k) as f64)
}

/// Adaptive Simpson on `[a, b]`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    step(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 60)
}

/// Upper tail of F(d1, d2) by integrating the density. With
/// `u = d1 x / (d1 x + d2)` and `u = s²` the integrand is smooth on `[0, 1]`.
pub fn f_tail_by_quadrature(f: f64, d1: f64, d2: f64) -> f64 {
    let g = |s: f64| 2.0 * s.powf(d1 - 1.0) * (1.0 - s * s).powf(d2 / 2.0 - 1.0);
    let s0 = (d1 * f / (d1 * f + d2)).sqrt();
    let whole = simpson(&g, 0.0, 1.0, 1e-14);
    simpson(&g, s0, 1.0, 1e-14) / whole
}
