//! Numerics for the law `pi(j) = C0 / (j log(1+j)^{beta+1})`, whose tail
//! decays like an inverse power of `log j`. Sums are split into an exact
//! head and an Euler-Maclaurin remainder evaluated in `u = log x`.

use crate::special::{gauss_legendre, integrate, Neumaier};

const HEAD: u64 = 1000;

#[derive(Debug, Clone)]
pub struct LogTail {
    b: f64,
    c0: f64,
    rule: Vec<(f64, f64)>,
}

impl LogTail {
    pub fn new(beta: f64) -> Self {
        let mut lt = LogTail { b: beta + 1.0, c0: 1.0, rule: gauss_legendre(16) };
        lt.c0 = 1.0 / lt.sum_from(1);
        lt
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    fn f(&self, x: f64) -> f64 {
        1.0 / (x * x.ln_1p().powf(self.b))
    }

    fn fprime(&self, x: f64) -> f64 {
        let l = x.ln_1p();
        -self.f(x) * (1.0 / x + self.b / ((1.0 + x) * l))
    }

    /// `int_{u0}^inf log(1 + e^u)^{-b} du`.
    fn log_integral_from(&self, u0: f64) -> f64 {
        let b = self.b;
        let base = u0.powf(1.0 - b) / (b - 1.0);
        let corr = integrate(
            |u| (u + (-u).exp().ln_1p()).powf(-b) - u.powf(-b),
            u0,
            u0 + 40.0,
            20,
            &self.rule,
        );
        base + corr
    }

    /// `sum_{k >= a} 1/(k log(1+k)^b)`.
    fn sum_from(&self, a: u64) -> f64 {
        let k0 = a.max(HEAD);
        let mut acc = Neumaier::default();
        for k in (a..k0).rev() {
            acc.add(self.f(k as f64));
        }
        let x = k0 as f64;
        acc.add(self.log_integral_from(x.ln()));
        acc.add(0.5 * self.f(x));
        acc.add(-self.fprime(x) / 12.0);
        acc.value()
    }

    pub fn pmf(&self, j: u64) -> f64 {
        if j == 0 {
            return 0.0;
        }
        self.c0 * self.f(j as f64)
    }

    /// `P(X > j)`.
    pub fn tail(&self, j: u64) -> f64 {
        if j == 0 {
            return 1.0;
        }
        self.c0 * self.sum_from(j + 1)
    }

    /// `1 - Phi(1 - s) = sum_k pi(k) (1 - (1-s)^k)`.
    pub fn pgf_complement(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return 1.0;
        }
        let t = -(-s).ln_1p();
        if s >= 0.05 {
            let mut acc = Neumaier::default();
            let mut k = 1u64;
            loop {
                let e = (-t * k as f64).exp();
                if e < 1e-18 {
                    break;
                }
                acc.add(self.pmf(k) * e);
                k += 1;
            }
            return 1.0 - acc.value();
        }
        let h = |x: f64| -(-t * x).exp_m1();
        let mut acc = Neumaier::default();
        for k in (1..HEAD).rev() {
            let x = k as f64;
            acc.add(self.f(x) * h(x));
        }
        let x = HEAD as f64;
        let u0 = x.ln();
        let u1 = ((1.0 / t).ln() + 4.0).max(u0);
        if u1 > u0 {
            let panels = ((u1 - u0) / 0.25).ceil() as usize;
            let b = self.b;
            acc.add(integrate(
                |u| -(-t * u.exp()).exp_m1() * (u + (-u).exp().ln_1p()).powf(-b),
                u0,
                u1,
                panels,
                &self.rule,
            ));
        }
        acc.add(self.log_integral_from(u1));
        let d = self.f(x) * h(x);
        let dp = self.fprime(x) * h(x) + self.f(x) * t * (-t * x).exp();
        acc.add(0.5 * d - dp / 12.0);
        self.c0 * acc.value()
    }
}
