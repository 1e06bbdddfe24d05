#![allow(clippy::excessive_precision)]
//! Special functions and summation helpers.

/// Euler's constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

/// `e^{-gamma}`, the critical value of `lim i P(nu > i)`.
pub fn exp_neg_gamma() -> f64 {
    (-EULER_GAMMA).exp()
}

/// Threshold `e^{-gamma} pi^2 / 12` separating the regimes of the second-order criterion.
pub fn critical_d() -> f64 {
    exp_neg_gamma() * std::f64::consts::PI.powi(2) / 12.0
}

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

fn lanczos_sum(x: f64) -> f64 {
    // x is the shifted argument (Gamma(x + 1))
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    a
}

/// Gamma function (Lanczos approximation, reflection below 1/2).
pub fn gamma(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    if x < 0.5 {
        return pi / ((pi * x).sin() * gamma(1.0 - x));
    }
    let xm = x - 1.0;
    let t = xm + LANCZOS_G + 0.5;
    (2.0 * pi).sqrt() * t.powf(xm + 0.5) * (-t).exp() * lanczos_sum(xm)
}

/// `ln Gamma(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x >= 12.0 {
        let ln2pi_half = 0.918_938_533_204_672_7;
        return (x - 0.5) * x.ln() - x + ln2pi_half + stirling_tail(x);
    }
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    gamma(x).ln()
}

// B_{2k} / (2k (2k-1)) for k = 1..8
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

fn stirling_tail(x: f64) -> f64 {
    let x2 = x * x;
    let mut p = 1.0 / x;
    let mut s = 0.0;
    for c in STIRLING {
        s += c * p;
        p /= x2;
    }
    s
}

/// `ln Gamma(x + a) - ln Gamma(x)` without the cancellation of the naive difference.
pub fn ln_gamma_ratio(x: f64, a: f64) -> f64 {
    if x < 12.0 || x + a < 12.0 {
        return ln_gamma(x + a) - ln_gamma(x);
    }
    let y = x + a;
    (x - 0.5) * (a / x).ln_1p() + a * y.ln() - a + stirling_tail(y) - stirling_tail(x)
}

/// Natural log of the rising factorial `[a]_k = a (a+1) ... (a+k-1)`, for `a > 0`.
pub fn ln_rising(a: f64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    ln_gamma_ratio(a, k as f64)
}

/// Rising factorial allowing any real `a` (plain product; intended for small `k`).
pub fn rising(a: f64, k: u64) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r *= a + i as f64;
    }
    r
}

pub fn ln_binomial(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// Harmonic number `H_j`.
pub fn harmonic(j: u64) -> f64 {
    if j < 64 {
        let mut s = 0.0;
        for k in (1..=j).rev() {
            s += 1.0 / k as f64;
        }
        return s;
    }
    let x = j as f64;
    let x2 = x * x;
    x.ln() + EULER_GAMMA + 0.5 / x - 1.0 / (12.0 * x2) + 1.0 / (120.0 * x2 * x2)
        - 1.0 / (252.0 * x2 * x2 * x2)
}

/// Hurwitz zeta `sum_{k>=0} (a + k)^{-s}` for `s > 1`, `a > 0`.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0, "hurwitz_zeta requires s > 1 and a > 0");
    let m = if a >= 16.0 { 0 } else { (16.0 - a).ceil() as u32 };
    let mut sum = Neumaier::default();
    for k in 0..m {
        sum.add((a + k as f64).powf(-s));
    }
    let x = a + m as f64;
    sum.add(x.powf(1.0 - s) / (s - 1.0));
    sum.add(0.5 * x.powf(-s));
    const B: [f64; 6] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
    ];
    let mut fact = 1.0;
    let mut poch = 1.0;
    for (j, b) in B.iter().enumerate() {
        let k = 2 * (j + 1);
        fact *= ((k - 1) * k) as f64;
        poch *= if j == 0 { s } else { (s + k as f64 - 3.0) * (s + k as f64 - 2.0) };
        sum.add(b / fact * poch * x.powf(-s - k as f64 + 1.0));
    }
    sum.value()
}

/// Riemann zeta for `s > 1`.
pub fn zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1.0)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss-Legendre quadrature of `f` on `[a, b]` with `panels` pieces.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, rule: &[(f64, f64)]) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = Neumaier::default();
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        for &(x, w) in rule {
            acc.add(0.5 * h * w * f(mid + 0.5 * h * x));
        }
    }
    acc.value()
}

/// Neumaier compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = Neumaier::default();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Sum after sorting by increasing magnitude, with compensation.
pub fn sorted_sum(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    compensated_sum(v)
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return compensated_sum(v.iter().copied());
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}
