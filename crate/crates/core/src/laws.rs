//! Discrete laws on the positive integers (targets and branching numbers),
//! non-summable invariant measures, generating functions, extinction
//! machinery and a finite-difference complete-monotonicity test.

use std::sync::Arc;

use crate::error::{invalid, LabError, Result};
use crate::logtail::LogTail;
use crate::special::{self, harmonic, hurwitz_zeta, ln_binomial, ln_gamma, ln_gamma_ratio, zeta, Neumaier};

/// Default evaluation horizon for heavy-tailed families.
pub const HEAVY_HORIZON: u64 = 1_000_000;
/// Default evaluation horizon for geometrically decaying families.
pub const LIGHT_HORIZON: u64 = 1_000;

const SUM_CAP: u64 = 50_000_000;

#[derive(Debug, Clone)]
pub enum LawKind {
    /// Point mass at 1.
    PointMass,
    Geometric { p: f64 },
    NegBinPositive { alpha: f64, p: f64 },
    NegBinShifted { alpha: f64, p: f64 },
    FisherLog { p: f64 },
    Sibuya { alpha: f64 },
    Pareto { alpha: f64 },
    Zipf { alpha: f64, zeta: f64 },
    LogTail { beta: f64, num: Arc<LogTail> },
    PoissonShifted { lambda: f64 },
    PoissonPositive { lambda: f64 },
    /// Tabulated pmf on `lo..lo+len`, with upper tail sums.
    Finite { lo: u64, pmf: Vec<f64>, tail: Vec<f64> },
    /// `F(j) = j/(1+j)`.
    CountingBranch,
    /// `F(j) = (j(j+1) + 1 - sqrt(1 + 2j(j+1)))/(j(j+1))`.
    LinearBranch,
    /// `F(j) = 1 - exp(-H_j)`.
    HarmonicBranch,
    /// Branching number solving `F_inf(j) = Phi_inf(F(j))` for the boxed target,
    /// evaluated by bisection on the tail side.
    Designed { target: Box<DiscreteLaw> },
}

/// A probability law on `{lo, lo+1, ...}` (`lo` is 0 or 1).
#[derive(Debug, Clone)]
pub struct DiscreteLaw {
    pub kind: LawKind,
    pub label: String,
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return invalid(format!("{name} must lie in (0, 1], got {p}"));
    }
    Ok(())
}

fn check_open_prob(name: &str, p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return invalid(format!("{name} must lie in (0, 1), got {p}"));
    }
    Ok(())
}

fn check_pos(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return invalid(format!("{name} must be positive, got {x}"));
    }
    Ok(())
}

impl DiscreteLaw {
    fn new(kind: LawKind, label: impl Into<String>) -> Self {
        DiscreteLaw { kind, label: label.into() }
    }

    pub fn point_mass() -> Self {
        Self::new(LawKind::PointMass, "point-mass")
    }

    /// `pi(k) = p q^{k-1}`; `p = 1` is the point mass at 1.
    pub fn geometric(p: f64) -> Result<Self> {
        check_prob("p", p)?;
        if p == 1.0 {
            return Ok(Self::point_mass());
        }
        Ok(Self::new(LawKind::Geometric { p }, format!("geometric(p={p})")))
    }

    /// Negative binomial conditioned to be positive: pgf `((p/(1-qz))^a - p^a)/(1-p^a)`.
    pub fn negbin_positive(alpha: f64, p: f64) -> Result<Self> {
        check_pos("alpha", alpha)?;
        check_open_prob("p", p)?;
        Ok(Self::new(LawKind::NegBinPositive { alpha, p }, format!("negbin-positive(alpha={alpha},p={p})")))
    }

    /// One plus a negative binomial: pgf `z (p/(1-qz))^a`.
    pub fn negbin_shifted(alpha: f64, p: f64) -> Result<Self> {
        check_pos("alpha", alpha)?;
        check_open_prob("p", p)?;
        Ok(Self::new(LawKind::NegBinShifted { alpha, p }, format!("negbin-shifted(alpha={alpha},p={p})")))
    }

    /// Fisher log-series: `pi(k) = p^k / (k c)`, `c = -log(1-p)`.
    pub fn fisher_log(p: f64) -> Result<Self> {
        check_open_prob("p", p)?;
        Ok(Self::new(LawKind::FisherLog { p }, format!("fisher-log(p={p})")))
    }

    /// Sibuya law with pgf `1 - (1-z)^alpha`.
    pub fn sibuya(alpha: f64) -> Result<Self> {
        check_open_prob("alpha", alpha)?;
        Ok(Self::new(LawKind::Sibuya { alpha }, format!("sibuya(alpha={alpha})")))
    }

    /// `P(X > i) = (i+1)^{-alpha}`.
    pub fn pareto(alpha: f64) -> Result<Self> {
        check_pos("alpha", alpha)?;
        Ok(Self::new(LawKind::Pareto { alpha }, format!("pareto(alpha={alpha})")))
    }

    /// `pi(i) = i^{-alpha} / zeta(alpha)`, `alpha > 1`.
    pub fn zipf(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return invalid(format!("zipf needs alpha > 1, got {alpha}"));
        }
        Ok(Self::new(LawKind::Zipf { alpha, zeta: zeta(alpha) }, format!("zipf(alpha={alpha})")))
    }

    /// `pi(j) = C0 / (j log(1+j)^{beta+1})`, `beta > 0`.
    pub fn log_tail(beta: f64) -> Result<Self> {
        check_pos("beta", beta)?;
        Ok(Self::new(
            LawKind::LogTail { beta, num: Arc::new(LogTail::new(beta)) },
            format!("log-tail(beta={beta})"),
        ))
    }

    /// One plus a Poisson variable: pgf `z e^{lambda(z-1)}`.
    pub fn poisson_shifted(lambda: f64) -> Result<Self> {
        check_pos("lambda", lambda)?;
        Ok(Self::new(LawKind::PoissonShifted { lambda }, format!("poisson-shifted(lambda={lambda})")))
    }

    /// Poisson conditioned to be positive.
    pub fn poisson_positive(lambda: f64) -> Result<Self> {
        check_pos("lambda", lambda)?;
        Ok(Self::new(LawKind::PoissonPositive { lambda }, format!("poisson-positive(lambda={lambda})")))
    }

    /// Binomial(n, p) conditioned to be positive, on `{1..n}`.
    pub fn binomial_positive(n: u64, p: f64) -> Result<Self> {
        check_open_prob("p", p)?;
        if n == 0 {
            return invalid("binomial needs n >= 1");
        }
        let q = 1.0 - p;
        let norm = -(n as f64 * (-p).ln_1p()).exp_m1();
        let pmf: Vec<f64> = (1..=n)
            .map(|k| {
                let kf = k as f64;
                (ln_binomial(n as f64, kf) + kf * p.ln() + (n - k) as f64 * q.ln()).exp() / norm
            })
            .collect();
        Self::finite_labeled(1, pmf, format!("binomial-positive(n={n},p={p})"))
    }

    /// One plus a Binomial(n-1, p), on `{1..n}`.
    pub fn binomial_shifted(n: u64, p: f64) -> Result<Self> {
        check_open_prob("p", p)?;
        if n == 0 {
            return invalid("binomial needs n >= 1");
        }
        let q = 1.0 - p;
        let m = (n - 1) as f64;
        let pmf: Vec<f64> = (1..=n)
            .map(|k| {
                let i = (k - 1) as f64;
                (ln_binomial(m, i) + i * p.ln() + (m - i) * q.ln()).exp()
            })
            .collect();
        Self::finite_labeled(1, pmf, format!("binomial-shifted(n={n},p={p})"))
    }

    /// Tabulated law with `pmf[i] = P(X = lo + i)`.
    pub fn finite(lo: u64, pmf: Vec<f64>) -> Result<Self> {
        let label = format!("finite(lo={lo},len={})", pmf.len());
        Self::finite_labeled(lo, pmf, label)
    }

    pub fn finite_labeled(lo: u64, pmf: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if pmf.is_empty() {
            return invalid("empty pmf");
        }
        if pmf.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return invalid("pmf entries must be finite and nonnegative");
        }
        let total: f64 = special::compensated_sum(pmf.iter().copied());
        if (total - 1.0).abs() > 1e-10 {
            return invalid(format!("pmf sums to {total}, not 1"));
        }
        let mut tail = vec![0.0; pmf.len()];
        let mut acc = Neumaier::default();
        for i in (0..pmf.len()).rev() {
            tail[i] = acc.value();
            acc.add(pmf[i]);
        }
        Ok(Self::new(LawKind::Finite { lo, pmf, tail }, label))
    }

    /// Branching number with `F(j) = j/(1+j)`.
    pub fn counting_branch() -> Self {
        Self::new(LawKind::CountingBranch, "counting-design")
    }

    pub fn linear_branch() -> Self {
        Self::new(LawKind::LinearBranch, "linear-design")
    }

    pub fn harmonic_branch() -> Self {
        Self::new(LawKind::HarmonicBranch, "harmonic-design")
    }

    /// Branching number whose invariant law is `target`, evaluated lazily.
    pub fn designed_for(target: &DiscreteLaw) -> Result<Self> {
        if target.lo() != 1 {
            return invalid("design targets live on {1, 2, ...}");
        }
        if !(target.pmf(1) > 0.0) {
            return invalid("design targets need pi(1) > 0");
        }
        Ok(Self::new(
            LawKind::Designed { target: Box::new(target.clone()) },
            format!("design[{}]", target.label),
        ))
    }

    /// Smallest support point.
    pub fn lo(&self) -> u64 {
        match &self.kind {
            LawKind::Finite { lo, .. } => *lo,
            _ => 1,
        }
    }

    /// Largest support point for finite laws.
    pub fn upper(&self) -> Option<u64> {
        match &self.kind {
            LawKind::Finite { lo, pmf, .. } => Some(lo + pmf.len() as u64 - 1),
            LawKind::PointMass => Some(1),
            _ => None,
        }
    }

    pub fn is_finite_support(&self) -> bool {
        self.upper().is_some()
    }

    /// `P(X > j)`.
    pub fn tail(&self, j: u64) -> f64 {
        if j < self.lo() {
            return 1.0;
        }
        match &self.kind {
            LawKind::PointMass => 0.0,
            LawKind::Geometric { p } => (1.0 - p).powf(j as f64),
            LawKind::NegBinPositive { alpha, p } => {
                let norm = -(alpha * p.ln()).exp_m1();
                negbin_upper(*alpha, *p, j + 1) / norm
            }
            LawKind::NegBinShifted { alpha, p } => negbin_upper(*alpha, *p, j),
            LawKind::FisherLog { p } => {
                let c = -(-p).ln_1p();
                let mut acc = Neumaier::default();
                let mut k = j + 1;
                let mut pk = p.powf(k as f64);
                while pk / k as f64 > 1e-300 && pk > 1e-18 * acc.value().max(1e-300) {
                    acc.add(pk / k as f64);
                    k += 1;
                    pk *= p;
                }
                acc.value() / c
            }
            LawKind::Sibuya { alpha } => {
                // Gamma(j+1-alpha) / (Gamma(1-alpha) Gamma(j+1))
                (ln_gamma_ratio(j as f64 + 1.0, -alpha) - ln_gamma(1.0 - alpha)).exp()
            }
            LawKind::Pareto { alpha } => (j as f64 + 1.0).powf(-alpha),
            LawKind::Zipf { alpha, zeta } => hurwitz_zeta(*alpha, j as f64 + 1.0) / zeta,
            LawKind::LogTail { num, .. } => num.tail(j),
            LawKind::PoissonShifted { lambda } => poisson_upper(*lambda, j),
            LawKind::PoissonPositive { lambda } => {
                poisson_upper(*lambda, j + 1) / -(-lambda).exp_m1()
            }
            LawKind::Finite { lo, tail, .. } => {
                let i = (j - lo) as usize;
                tail.get(i).copied().unwrap_or(0.0)
            }
            LawKind::CountingBranch => 1.0 / (1.0 + j as f64),
            LawKind::LinearBranch => {
                let jf = j as f64;
                let m = jf * (jf + 1.0);
                2.0 / ((1.0 + 2.0 * m).sqrt() + 1.0)
            }
            LawKind::HarmonicBranch => (-harmonic(j)).exp(),
            LawKind::Designed { target } => designed_tail(target, j),
        }
    }

    /// `P(X <= j) = 1 - P(X > j)`.
    pub fn cdf(&self, j: u64) -> f64 {
        1.0 - self.tail(j)
    }

    pub fn pmf(&self, j: u64) -> f64 {
        if j < self.lo() {
            return 0.0;
        }
        match &self.kind {
            LawKind::PointMass => {
                if j == 1 {
                    1.0
                } else {
                    0.0
                }
            }
            LawKind::Geometric { p } => p * (1.0 - p).powf(j as f64 - 1.0),
            LawKind::NegBinPositive { alpha, p } => {
                negbin_pmf(*alpha, *p, j) / -(alpha * p.ln()).exp_m1()
            }
            LawKind::NegBinShifted { alpha, p } => negbin_pmf(*alpha, *p, j - 1),
            LawKind::FisherLog { p } => {
                let c = -(-p).ln_1p();
                p.powf(j as f64) / (j as f64 * c)
            }
            LawKind::Sibuya { alpha } => {
                // alpha [1-alpha]_{j-1} / j!
                alpha
                    * (special::ln_rising(1.0 - alpha, j - 1) - ln_gamma(j as f64 + 1.0)).exp()
            }
            LawKind::Pareto { alpha } => (j as f64).powf(-alpha) - (j as f64 + 1.0).powf(-alpha),
            LawKind::Zipf { alpha, zeta } => (j as f64).powf(-alpha) / zeta,
            LawKind::LogTail { num, .. } => num.pmf(j),
            LawKind::PoissonShifted { lambda } => poisson_pmf(*lambda, j - 1),
            LawKind::PoissonPositive { lambda } => poisson_pmf(*lambda, j) / -(-lambda).exp_m1(),
            LawKind::Finite { lo, pmf, .. } => pmf.get((j - lo) as usize).copied().unwrap_or(0.0),
            _ => self.tail(j - 1) - self.tail(j),
        }
    }

    /// Probability generating function on `[0, 1]`.
    pub fn pgf(&self, z: f64) -> f64 {
        match &self.kind {
            LawKind::PointMass => z,
            LawKind::Geometric { p } => p * z / (1.0 - (1.0 - p) * z),
            LawKind::NegBinPositive { alpha, p } => {
                let pa = p.powf(*alpha);
                ((p / (1.0 - (1.0 - p) * z)).powf(*alpha) - pa) / (1.0 - pa)
            }
            LawKind::NegBinShifted { alpha, p } => z * (p / (1.0 - (1.0 - p) * z)).powf(*alpha),
            LawKind::FisherLog { p } => (-p * z).ln_1p() / (-p).ln_1p(),
            LawKind::Sibuya { alpha } => 1.0 - (1.0 - z).powf(*alpha),
            LawKind::PoissonShifted { lambda } => z * (lambda * (z - 1.0)).exp(),
            LawKind::PoissonPositive { lambda } => (lambda * z).exp_m1() / lambda.exp_m1(),
            LawKind::Finite { lo, pmf, .. } => {
                let poly = pmf.iter().rev().fold(0.0, |acc, &c| acc * z + c);
                poly * z.powf(*lo as f64)
            }
            _ => 1.0 - self.pgf_complement(1.0 - z),
        }
    }

    /// `1 - Phi(1 - s)`, accurate for small `s`.
    pub fn pgf_complement(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let x = 1.0 - s;
        match &self.kind {
            LawKind::PointMass => s,
            LawKind::Geometric { p } => s / (p + (1.0 - p) * s),
            LawKind::NegBinPositive { alpha, p } => {
                let q = 1.0 - p;
                let num = -(-alpha * (q * s / p).ln_1p()).exp_m1();
                num / -(alpha * p.ln()).exp_m1()
            }
            LawKind::NegBinShifted { alpha, p } => {
                let q = 1.0 - p;
                // 1 - (1-s) (1 + q s/p)^{-alpha}
                let l = (-s).ln_1p() - alpha * (q * s / p).ln_1p();
                -l.exp_m1()
            }
            LawKind::FisherLog { p } => (p * s / (1.0 - p)).ln_1p() / -(-p).ln_1p(),
            LawKind::Sibuya { alpha } => s.powf(*alpha),
            LawKind::LogTail { num, .. } => num.pgf_complement(s),
            LawKind::PoissonShifted { lambda } => {
                let l = (-s).ln_1p() - lambda * s;
                -l.exp_m1()
            }
            LawKind::PoissonPositive { lambda } => (-lambda * s).exp_m1() / (-lambda).exp_m1(),
            LawKind::Finite { lo, pmf, .. } => {
                let ls = (-s).ln_1p();
                let mut acc = Neumaier::default();
                for (i, &m) in pmf.iter().enumerate() {
                    let k = (*lo + i as u64) as f64;
                    acc.add(m * -(k * ls).exp_m1());
                }
                acc.value()
            }
            LawKind::Pareto { .. } | LawKind::Zipf { .. } if s < 0.01 => self.smooth_complement(s),
            _ => {
                // s sum_{k>=0} (1-s)^k P(X > k)
                let mut acc = Neumaier::default();
                let mut xk = 1.0;
                let mut k = 0u64;
                loop {
                    let t = self.tail(k);
                    if t == 0.0 || xk * t < 1e-17 * acc.value().max(1e-300) || k > SUM_CAP {
                        break;
                    }
                    acc.add(xk * t);
                    xk *= x;
                    k += 1;
                }
                s * acc.value()
            }
        }
    }

    /// Tail extended to real arguments, for the power-law families.
    fn smooth_tail(&self, x: f64) -> f64 {
        match &self.kind {
            LawKind::Pareto { alpha } => (x + 1.0).powf(-alpha),
            LawKind::Zipf { alpha, zeta } => hurwitz_zeta(*alpha, x + 1.0) / zeta,
            _ => unreachable!("smooth tail requested for {}", self.label),
        }
    }

    /// `s sum_k (1-s)^k P(X > k)` with an exact head and an Euler-Maclaurin
    /// remainder integrated in `log x`.
    fn smooth_complement(&self, s: f64) -> f64 {
        const K: u64 = 2000;
        let t = -(-s).ln_1p();
        let mut acc = Neumaier::default();
        for k in (0..K).rev() {
            acc.add((-t * k as f64).exp() * self.tail(k));
        }
        let g = |x: f64| (-t * x).exp() * self.smooth_tail(x);
        let x0 = K as f64;
        let u0 = x0.ln();
        let u1 = (x0 + 45.0 / t).ln();
        let panels = ((u1 - u0) / 0.25).ceil().max(1.0) as usize;
        acc.add(special::integrate(|u| u.exp() * g(u.exp()), u0, u1, panels, &special::gauss_legendre(16)));
        let dx = 1e-2 * x0;
        let gp = (g(x0 + dx) - g(x0 - dx)) / (2.0 * dx);
        acc.add(0.5 * g(x0) - gp / 12.0);
        s * acc.value()
    }

    /// Expectation; `f64::INFINITY` when the mean is not finite.
    pub fn mean(&self) -> f64 {
        match &self.kind {
            LawKind::PointMass => 1.0,
            LawKind::Geometric { p } => 1.0 / p,
            LawKind::NegBinPositive { alpha, p } => {
                alpha * (1.0 - p) / p / -(alpha * p.ln()).exp_m1()
            }
            LawKind::NegBinShifted { alpha, p } => 1.0 + alpha * (1.0 - p) / p,
            LawKind::FisherLog { p } => p / ((1.0 - p) * -(-p).ln_1p()),
            LawKind::Sibuya { .. } | LawKind::LogTail { .. } => f64::INFINITY,
            LawKind::Pareto { alpha } => {
                if *alpha > 1.0 {
                    zeta(*alpha)
                } else {
                    f64::INFINITY
                }
            }
            LawKind::Zipf { alpha, zeta: z } => {
                if *alpha > 2.0 {
                    zeta(alpha - 1.0) / z
                } else {
                    f64::INFINITY
                }
            }
            LawKind::PoissonShifted { lambda } => 1.0 + lambda,
            LawKind::PoissonPositive { lambda } => lambda / -(-lambda).exp_m1(),
            LawKind::Finite { lo, pmf, .. } => special::compensated_sum(
                pmf.iter().enumerate().map(|(i, m)| m * (*lo + i as u64) as f64),
            ),
            LawKind::CountingBranch | LawKind::LinearBranch | LawKind::HarmonicBranch => {
                f64::INFINITY
            }
            LawKind::Designed { .. } => {
                let mut acc = Neumaier::default();
                let mut j = 0u64;
                loop {
                    let t = self.tail(j);
                    if t < 1e-17 {
                        break;
                    }
                    if j >= 1 << 20 {
                        // tails decaying like 1/j or slower are not summable;
                        // anything else left at this depth is finite but unresolved
                        if j as f64 * t > 1e-3 {
                            return f64::INFINITY;
                        }
                        break;
                    }
                    acc.add(t);
                    j += 1;
                }
                acc.value()
            }
        }
    }

    /// Whether tails decay geometrically for the default horizon choice.
    pub fn default_horizon(&self) -> u64 {
        match &self.kind {
            LawKind::Sibuya { .. }
            | LawKind::Pareto { .. }
            | LawKind::Zipf { .. }
            | LawKind::LogTail { .. }
            | LawKind::CountingBranch
            | LawKind::LinearBranch
            | LawKind::HarmonicBranch
            | LawKind::Designed { .. } => HEAVY_HORIZON,
            _ => self.upper().unwrap_or(LIGHT_HORIZON),
        }
    }

    /// Smallest dyadic `j` with `P(X > j) <= 1e-8`, if one exists below `2^62`.
    pub fn evaluation_horizon(&self) -> Option<u64> {
        if let Some(u) = self.upper() {
            return Some(u);
        }
        let mut j = 1u64;
        while j < 1 << 62 {
            if self.tail(j) <= 1e-8 {
                return Some(j);
            }
            j <<= 1;
        }
        None
    }

    /// Tabulate `F(0..=j_max)`.
    pub fn cdf_table(&self, j_max: u64) -> Vec<f64> {
        (0..=j_max).map(|j| self.cdf(j)).collect()
    }

    /// Sum `z^j P(X = j)` until the remainder bound `z^{j+1} P(X > j)` drops
    /// below `tol`.
    pub fn pgf_series(&self, z: f64, tol: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&z) {
            return invalid(format!("pgf argument {z} outside [0, 1]"));
        }
        if z == 1.0 {
            return Ok(1.0);
        }
        let mut acc = Neumaier::default();
        let mut j = self.lo();
        let mut zj = z.powf(j as f64);
        loop {
            acc.add(self.pmf(j) * zj);
            zj *= z;
            if zj * self.tail(j) < tol || self.upper().is_some_and(|u| j >= u) {
                return Ok(acc.value());
            }
            j += 1;
            if j > SUM_CAP {
                return Err(LabError::NoConvergence("pgf series did not reach tolerance".into()));
            }
        }
    }
}

fn negbin_pmf(alpha: f64, p: f64, k: u64) -> f64 {
    // [alpha]_k / k! p^alpha q^k
    let kf = k as f64;
    (special::ln_rising(alpha, k) - ln_gamma(kf + 1.0) + alpha * p.ln() + kf * (1.0 - p).ln()).exp()
}

/// `P(Y >= from)` for `Y ~ NB(alpha, p)` by summing the upper terms.
fn negbin_upper(alpha: f64, p: f64, from: u64) -> f64 {
    if from == 0 {
        return 1.0;
    }
    let q = 1.0 - p;
    let mut t = negbin_pmf(alpha, p, from);
    let mut acc = Neumaier::default();
    let mut k = from;
    while t > 1e-18 * acc.value() || k < from + 2 {
        acc.add(t);
        t *= (alpha + k as f64) / (k as f64 + 1.0) * q;
        k += 1;
        if t == 0.0 || k > from + 100_000_000 {
            break;
        }
    }
    acc.value()
}

fn poisson_pmf(lambda: f64, k: u64) -> f64 {
    let kf = k as f64;
    (kf * lambda.ln() - lambda - ln_gamma(kf + 1.0)).exp()
}

/// `P(Y >= from)` for `Y ~ Poisson(lambda)`.
fn poisson_upper(lambda: f64, from: u64) -> f64 {
    if from == 0 {
        return 1.0;
    }
    if (from as f64) < lambda {
        let mut acc = Neumaier::default();
        for k in 0..from {
            acc.add(poisson_pmf(lambda, k));
        }
        return 1.0 - acc.value();
    }
    let mut t = poisson_pmf(lambda, from);
    let mut acc = Neumaier::default();
    let mut k = from;
    while t > 1e-18 * acc.value() || k == from {
        acc.add(t);
        k += 1;
        t *= lambda / k as f64;
        if t == 0.0 {
            break;
        }
    }
    acc.value()
}

/// Tail of the designed branching number: the `s` in `[0, 1]` with
/// `1 - Phi_inf(1 - s) = P(X_inf > j)`.
fn designed_tail(target: &DiscreteLaw, j: u64) -> f64 {
    crate::design::invert_complement_bisection(|s| target.pgf_complement(s), target.tail(j))
}

/// Nonnegative, possibly non-summable sequence `delta(j)`, `j >= 1`.
#[derive(Debug, Clone)]
pub enum PositiveMeasure {
    /// `delta(j) = 1`.
    Counting,
    /// `delta(j) = j`.
    Linear,
    /// `delta(j) = 1/j`.
    Harmonic,
    /// A probability law viewed as a measure.
    Law(DiscreteLaw),
    /// Tabulated weights on `{1..len}`.
    Table(Vec<f64>),
}

impl PositiveMeasure {
    pub fn label(&self) -> String {
        match self {
            PositiveMeasure::Counting => "counting".into(),
            PositiveMeasure::Linear => "linear".into(),
            PositiveMeasure::Harmonic => "harmonic".into(),
            PositiveMeasure::Law(l) => l.label.clone(),
            PositiveMeasure::Table(v) => format!("table(len={})", v.len()),
        }
    }

    pub fn delta(&self, j: u64) -> f64 {
        if j == 0 {
            return 0.0;
        }
        match self {
            PositiveMeasure::Counting => 1.0,
            PositiveMeasure::Linear => j as f64,
            PositiveMeasure::Harmonic => 1.0 / j as f64,
            PositiveMeasure::Law(l) => l.pmf(j),
            PositiveMeasure::Table(v) => v.get(j as usize - 1).copied().unwrap_or(0.0),
        }
    }

    /// `sum_{k <= j} delta(k)`.
    pub fn partial_sum(&self, j: u64) -> f64 {
        match self {
            PositiveMeasure::Counting => j as f64,
            PositiveMeasure::Linear => {
                let jf = j as f64;
                jf * (jf + 1.0) / 2.0
            }
            PositiveMeasure::Harmonic => harmonic(j),
            PositiveMeasure::Law(l) => l.cdf(j),
            PositiveMeasure::Table(v) => {
                special::compensated_sum(v.iter().take(j as usize).copied())
            }
        }
    }

    pub fn summable(&self) -> bool {
        matches!(self, PositiveMeasure::Law(_) | PositiveMeasure::Table(_))
    }

    /// `sum_j delta(j) z^j`; `z = 1` is rejected for non-summable measures.
    pub fn pgf(&self, z: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&z) {
            return invalid(format!("pgf argument {z} outside [0, 1]"));
        }
        if z == 1.0 && !self.summable() {
            return Err(LabError::InvalidArgument(
                "generating function of a non-summable measure is infinite at z = 1".into(),
            ));
        }
        Ok(match self {
            PositiveMeasure::Counting => z / (1.0 - z),
            PositiveMeasure::Linear => z / ((1.0 - z) * (1.0 - z)),
            PositiveMeasure::Harmonic => -(-z).ln_1p(),
            PositiveMeasure::Law(l) => l.pgf(z),
            PositiveMeasure::Table(v) => v.iter().rev().fold(0.0, |acc, &c| acc * z + c) * z,
        })
    }
}

/// Output of [`make_target`].
#[derive(Debug, Clone)]
pub enum Target {
    Law(DiscreteLaw),
    Measure(PositiveMeasure),
}

impl Target {
    pub fn label(&self) -> String {
        match self {
            Target::Law(l) => l.label.clone(),
            Target::Measure(m) => m.label(),
        }
    }
}

/// Family parameters; unused fields are ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FamilyParams {
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub n: Option<u64>,
}

impl FamilyParams {
    /// `p`, or `1 - q` when only `q` is given.
    pub fn prob(&self) -> Result<f64> {
        match (self.p, self.q) {
            (Some(p), Some(q)) if (p + q - 1.0).abs() > 1e-12 => {
                invalid(format!("p = {p} and q = {q} do not sum to 1"))
            }
            (Some(p), _) => Ok(p),
            (None, Some(q)) => Ok(1.0 - q),
            (None, None) => invalid("missing parameter p (or q)"),
        }
    }

    fn req(v: Option<f64>, name: &str) -> Result<f64> {
        v.ok_or_else(|| LabError::InvalidArgument(format!("missing parameter {name}")))
    }
}

pub const FAMILIES: &[&str] = &[
    "point-mass",
    "geometric",
    "negbin-positive",
    "negbin-shifted",
    "fisher-log",
    "sibuya",
    "pareto",
    "zipf",
    "log-tail",
    "binomial-positive",
    "binomial-shifted",
    "poisson-shifted",
    "poisson-positive",
    "counting",
    "linear",
    "harmonic",
];

/// Construct a target law or measure by family name.
pub fn make_target(name: &str, params: &FamilyParams) -> Result<Target> {
    let law = |l: Result<DiscreteLaw>| l.map(Target::Law);
    match name {
        "point-mass" | "delta1" => Ok(Target::Law(DiscreteLaw::point_mass())),
        "geometric" => law(DiscreteLaw::geometric(params.prob()?)),
        "negbin-positive" => law(DiscreteLaw::negbin_positive(
            FamilyParams::req(params.alpha, "alpha")?,
            params.prob()?,
        )),
        "negbin-shifted" => law(DiscreteLaw::negbin_shifted(
            FamilyParams::req(params.alpha, "alpha")?,
            params.prob()?,
        )),
        "fisher-log" => law(DiscreteLaw::fisher_log(params.prob()?)),
        "sibuya" => law(DiscreteLaw::sibuya(FamilyParams::req(params.alpha, "alpha")?)),
        "pareto" => law(DiscreteLaw::pareto(FamilyParams::req(params.alpha, "alpha")?)),
        "zipf" => law(DiscreteLaw::zipf(FamilyParams::req(params.alpha, "alpha")?)),
        "log-tail" => law(DiscreteLaw::log_tail(FamilyParams::req(params.beta, "beta")?)),
        "binomial-positive" | "binomial-shifted" => {
            let n = params
                .n
                .ok_or_else(|| LabError::InvalidArgument("missing parameter N".into()))?;
            if name == "binomial-positive" {
                law(DiscreteLaw::binomial_positive(n, params.prob()?))
            } else {
                law(DiscreteLaw::binomial_shifted(n, params.prob()?))
            }
        }
        "poisson-shifted" => {
            law(DiscreteLaw::poisson_shifted(FamilyParams::req(params.lambda, "lambda")?))
        }
        "poisson-positive" => {
            law(DiscreteLaw::poisson_positive(FamilyParams::req(params.lambda, "lambda")?))
        }
        "counting" => Ok(Target::Measure(PositiveMeasure::Counting)),
        "linear" => Ok(Target::Measure(PositiveMeasure::Linear)),
        "harmonic" => Ok(Target::Measure(PositiveMeasure::Harmonic)),
        other => invalid(format!("unknown family '{other}' (known: {})", FAMILIES.join(", "))),
    }
}

/// Generating function of a law or measure, evaluated with tail tolerance `tol`.
pub fn pgf_eval(target: &Target, z: f64, tol: f64) -> Result<f64> {
    match target {
        Target::Law(l) => {
            if !(0.0..=1.0).contains(&z) {
                return invalid(format!("pgf argument {z} outside [0, 1]"));
            }
            match l.kind {
                LawKind::Pareto { .. } | LawKind::Zipf { .. } if z < 1.0 => l.pgf_series(z, tol),
                _ => Ok(l.pgf(z)),
            }
        }
        Target::Measure(m) => m.pgf(z),
    }
}

/// Smallest root of `phi(z) = z` in `[0, 1]` for a law with mass at 0.
pub fn extinction_probability(nu: &DiscreteLaw) -> Result<f64> {
    if nu.lo() != 0 || !(nu.pmf(0) > 0.0) {
        return invalid("extinction needs P(nu = 0) > 0");
    }
    if nu.mean() <= 1.0 + 1e-14 {
        return Ok(1.0);
    }
    let g = |z: f64| nu.pgf(z) - z;
    // find a point below 1 where g < 0
    let mut hi = 1.0 - 1e-3;
    while g(hi) >= 0.0 {
        hi = 1.0 - (1.0 - hi) * 0.1;
        if 1.0 - hi < 1e-15 {
            return Ok(1.0);
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn finite_pmf(nu: &DiscreteLaw, what: &str) -> Result<Vec<f64>> {
    let upper = match nu.upper() {
        Some(u) => u,
        None => {
            // truncate where the remaining mass is negligible
            let mut j = 1u64;
            while nu.tail(j) > 1e-17 {
                j *= 2;
                if j > 1 << 24 {
                    return invalid(format!("{what} needs a law with light tails"));
                }
            }
            j
        }
    };
    Ok((0..=upper).map(|j| nu.pmf(j)).collect())
}

fn checked_rho(nu: &DiscreteLaw) -> Result<f64> {
    let rho = extinction_probability(nu)?;
    if !(rho > 0.0 && rho < 1.0) {
        return invalid(format!("conditioning needs 0 < rho_e < 1, got {rho}"));
    }
    Ok(rho)
}

/// Law of `nu` given extinction: `p_e(j) = p(j) rho_e^{j-1}`.
pub fn condition_on_extinction(nu: &DiscreteLaw) -> Result<DiscreteLaw> {
    let rho = checked_rho(nu)?;
    let p = finite_pmf(nu, "conditioning")?;
    let pe: Vec<f64> = p
        .iter()
        .enumerate()
        .map(|(j, m)| m * rho.powf(j as f64 - 1.0))
        .collect();
    let total: f64 = special::compensated_sum(pe.iter().copied());
    let pe = pe.into_iter().map(|x| x / total).collect();
    DiscreteLaw::finite_labeled(0, pe, format!("extinct[{}]", nu.label))
}

/// Law with pgf `(phi(rho + z(1-rho)) - rho)/(1-rho)`, by binomial coefficient extraction.
pub fn condition_on_explosion(nu: &DiscreteLaw) -> Result<DiscreteLaw> {
    let rho = checked_rho(nu)?;
    let p = finite_pmf(nu, "conditioning")?;
    let n = p.len();
    let mut out = vec![0.0; n];
    let (lr, l1r) = (rho.ln(), (1.0 - rho).ln());
    for (k, o) in out.iter_mut().enumerate().skip(1) {
        let mut acc = Neumaier::default();
        for (j, &pj) in p.iter().enumerate().skip(k) {
            if pj == 0.0 {
                continue;
            }
            let lb = ln_binomial(j as f64, k as f64);
            acc.add(pj * (lb + (j - k) as f64 * lr + k as f64 * l1r).exp());
        }
        *o = acc.value() / (1.0 - rho);
    }
    let total: f64 = special::compensated_sum(out.iter().copied());
    let out = out.into_iter().map(|x| x / total).collect();
    DiscreteLaw::finite_labeled(0, out, format!("exploding[{}]", nu.label))
}

/// First `(j, k)` where `(-1)^k Delta^k P(X > j) < -1e-12`, for `k <= k_max`, `j <= j_max`.
pub fn cm_violation(law: &DiscreteLaw, k_max: usize, j_max: u64) -> Option<(u64, usize)> {
    let len = j_max as usize + k_max + 1;
    let mut d: Vec<f64> = (0..len as u64).map(|j| law.tail(j)).collect();
    for k in 1..=k_max {
        let next: Vec<f64> = d.windows(2).map(|w| w[0] - w[1]).collect();
        d = next;
        // (-1)^k Delta^k with Delta x_j = x_{j+1} - x_j equals the k-fold
        // backward-sign difference computed above
        for (j, v) in d.iter().enumerate().take(j_max as usize + 1) {
            if *v < -1e-12 {
                return Some((j as u64, k));
            }
        }
    }
    None
}

/// Complete-monotonicity test of the tail sequence.
pub fn cm_check(law: &DiscreteLaw, k_max: usize, j_max: u64) -> bool {
    cm_violation(law, k_max, j_max).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    fn tail_pmf_consistent(l: &DiscreteLaw, js: &[u64]) {
        for &j in js {
            let d = l.tail(j - 1) - l.tail(j);
            assert!((d - l.pmf(j)).abs() < 1e-12, "{} at {j}: {d} vs {}", l.label, l.pmf(j));
        }
    }

    #[test]
    fn families_are_consistent() {
        let laws = vec![
            DiscreteLaw::geometric(0.3).unwrap(),
            DiscreteLaw::negbin_positive(2.5, 0.4).unwrap(),
            DiscreteLaw::negbin_shifted(0.7, 0.6).unwrap(),
            DiscreteLaw::fisher_log(0.8).unwrap(),
            DiscreteLaw::sibuya(0.4).unwrap(),
            DiscreteLaw::pareto(0.8).unwrap(),
            DiscreteLaw::zipf(2.2).unwrap(),
            DiscreteLaw::poisson_shifted(2.0).unwrap(),
            DiscreteLaw::poisson_positive(1.3).unwrap(),
            DiscreteLaw::binomial_positive(6, 0.3).unwrap(),
            DiscreteLaw::binomial_shifted(5, 0.6).unwrap(),
            DiscreteLaw::counting_branch(),
            DiscreteLaw::linear_branch(),
            DiscreteLaw::harmonic_branch(),
        ];
        for l in &laws {
            tail_pmf_consistent(l, &[1, 2, 3, 5]);
            assert_eq!(l.tail(0), 1.0, "{}", l.label);
            for j in 0..20 {
                assert_eq!(l.tail(j) + l.cdf(j), 1.0);
                assert!(l.pmf(j) >= 0.0);
            }
            // pgf and complement agree
            for &z in &[0.1, 0.5, 0.9] {
                assert!(close(l.pgf(z), 1.0 - l.pgf_complement(1.0 - z), 1e-12), "{} z={z}", l.label);
            }
        }
    }

    #[test]
    fn pgf_matches_series() {
        for t in [
            make_target("geometric", &FamilyParams { p: Some(0.35), ..Default::default() }).unwrap(),
            make_target("fisher-log", &FamilyParams { p: Some(0.6), ..Default::default() }).unwrap(),
            make_target("poisson-shifted", &FamilyParams { lambda: Some(1.7), ..Default::default() })
                .unwrap(),
            make_target("negbin-positive", &FamilyParams { alpha: Some(1.5), p: Some(0.5), ..Default::default() })
                .unwrap(),
        ] {
            if let Target::Law(l) = &t {
                for &z in &[0.2, 0.7, 0.95] {
                    let s = l.pgf_series(z, 1e-16).unwrap();
                    assert!((s - l.pgf(z)).abs() < 1e-13, "{} z = {z}", l.label);
                }
            }
        }
    }

    #[test]
    fn geometric_pgf_closed_form() {
        let p = 0.3;
        let t = make_target("geometric", &FamilyParams { p: Some(p), ..Default::default() }).unwrap();
        for &z in &[0.0, 0.25, 0.8, 0.999] {
            let v = pgf_eval(&t, z, 1e-15).unwrap();
            assert!((v - p * z / (1.0 - (1.0 - p) * z)).abs() <= 1e-12);
        }
        let one = make_target("geometric", &FamilyParams { p: Some(1.0), ..Default::default() }).unwrap();
        match one {
            Target::Law(l) => {
                assert_eq!(l.pmf(1), 1.0);
                assert_eq!(l.tail(1), 0.0);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn sibuya_pmf_and_tail_asymptotics() {
        let a = 0.5;
        let l = DiscreteLaw::sibuya(a).unwrap();
        assert!(close(l.pmf(1), 0.5, 1e-15));
        assert!(close(l.pmf(2), 0.5 * 0.5 / 2.0, 1e-14));
        assert!(close(l.pmf(3), 0.5 * 0.5 * 1.5 / 6.0, 1e-14));
        for &alpha in &[0.25, 0.5, 0.75] {
            let l = DiscreteLaw::sibuya(alpha).unwrap();
            let j = 1e6;
            let r = l.tail(1_000_000) * special::gamma(1.0 - alpha) * f64::powf(j, alpha);
            assert!((r - 1.0).abs() < 0.02, "alpha = {alpha}: {r}");
        }
    }

    #[test]
    fn fisher_pmf_exact() {
        let p: f64 = 0.45;
        let l = DiscreteLaw::fisher_log(p).unwrap();
        let c = -(1.0 - p).ln();
        for k in 1..10u64 {
            assert!(close(l.pmf(k), p.powi(k as i32) / (c * k as f64), 1e-14));
        }
    }

    #[test]
    fn power_law_complements_match_direct_sums() {
        for l in [DiscreteLaw::pareto(0.6).unwrap(), DiscreteLaw::zipf(1.8).unwrap()] {
            for &s in &[0.009, 2e-3] {
                let x = 1.0 - s;
                let mut acc = Neumaier::default();
                let mut xk = 1.0;
                for k in 0..20_000_000u64 {
                    acc.add(xk * l.tail(k));
                    xk *= x;
                    if xk < 1e-20 {
                        break;
                    }
                }
                let direct = s * acc.value();
                let fast = l.pgf_complement(s);
                assert!(((fast - direct) / direct).abs() < 1e-11, "{} s={s}: {fast} vs {direct}", l.label);
            }
        }
    }

    #[test]
    fn horizons() {
        let g = DiscreteLaw::geometric(0.5).unwrap();
        assert!((g.cdf(LIGHT_HORIZON) - 1.0).abs() <= 1e-8);
        assert!(g.evaluation_horizon().unwrap() <= 32);
        let s = DiscreteLaw::sibuya(0.5).unwrap();
        let h = s.evaluation_horizon().unwrap();
        assert!((s.cdf(h) - 1.0).abs() <= 1e-8);
        assert!(DiscreteLaw::sibuya(0.25).unwrap().evaluation_horizon().is_none());
    }

    #[test]
    fn measures() {
        let h = PositiveMeasure::Harmonic;
        assert!((h.partial_sum(4) - 25.0 / 12.0).abs() < 1e-15);
        assert!(!h.summable());
        let c = make_target("counting", &FamilyParams::default()).unwrap();
        assert!((pgf_eval(&c, 0.5, 1e-15).unwrap() - 1.0).abs() < 1e-15);
        assert!(pgf_eval(&c, 1.0, 1e-15).is_err());
        assert!((PositiveMeasure::Linear.partial_sum(4) - 10.0).abs() < 1e-15);
    }

    #[test]
    fn parameter_ranges() {
        let bad = |n: &str, p: FamilyParams| assert!(make_target(n, &p).is_err(), "{n}");
        bad("geometric", FamilyParams { p: Some(0.0), ..Default::default() });
        bad("sibuya", FamilyParams { alpha: Some(1.0), ..Default::default() });
        bad("zipf", FamilyParams { alpha: Some(1.0), ..Default::default() });
        bad("log-tail", FamilyParams { beta: Some(0.0), ..Default::default() });
        bad("poisson-shifted", FamilyParams { lambda: Some(-1.0), ..Default::default() });
        bad("nonsense", FamilyParams::default());
    }

    #[test]
    fn extinction_examples() {
        let crit = DiscreteLaw::finite(0, vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(extinction_probability(&crit).unwrap(), 1.0);
        let sub = DiscreteLaw::finite(0, vec![0.6, 0.3, 0.1]).unwrap();
        assert_eq!(extinction_probability(&sub).unwrap(), 1.0);
        let sup = DiscreteLaw::finite(0, vec![0.25, 0.0, 0.75]).unwrap();
        let rho = extinction_probability(&sup).unwrap();
        assert!((rho - 1.0 / 3.0).abs() < 1e-15);

        let e = condition_on_extinction(&sup).unwrap();
        assert!((e.pmf(0) - 0.75).abs() < 1e-14);
        assert!(e.pmf(1).abs() < 1e-15);
        assert!((e.pmf(2) - 0.25).abs() < 1e-14);

        let x = condition_on_explosion(&sup).unwrap();
        assert_eq!(x.pmf(0), 0.0);
        assert!((x.mean() - sup.mean()).abs() < 1e-13);
        assert!((x.pmf(1) - 0.5).abs() < 1e-14 && (x.pmf(2) - 0.5).abs() < 1e-14);
        // pgf identities on a grid
        for &z in &[0.1, 0.4, 0.9] {
            assert!((e.pgf(z) - sup.pgf(z * rho) / rho).abs() < 1e-14);
            let lhs = (sup.pgf(rho + z * (1.0 - rho)) - rho) / (1.0 - rho);
            assert!((x.pgf(z) - lhs).abs() < 1e-14);
        }
        assert!(condition_on_extinction(&crit).is_err());
    }

    #[test]
    fn mixture_of_conditioned_laws_is_not_the_original() {
        let sup = DiscreteLaw::finite(0, vec![0.25, 0.0, 0.75]).unwrap();
        let rho = extinction_probability(&sup).unwrap();
        let e = condition_on_extinction(&sup).unwrap();
        let x = condition_on_explosion(&sup).unwrap();
        let mix1 = rho * e.pmf(1) + (1.0 - rho) * x.pmf(1);
        assert!((mix1 - sup.pmf(1)).abs() > 0.1);
    }

    #[test]
    fn complete_monotonicity() {
        assert!(cm_check(&DiscreteLaw::geometric(0.4).unwrap(), 6, 30));
        assert!(cm_check(&DiscreteLaw::pareto(0.7).unwrap(), 6, 30));
        assert!(!cm_check(&DiscreteLaw::binomial_shifted(4, 0.5).unwrap(), 4, 4));
    }

    #[test]
    fn designed_law_tails() {
        let g = DiscreteLaw::geometric(0.4).unwrap();
        let nu = DiscreteLaw::designed_for(&g).unwrap();
        let q: f64 = 0.6;
        for j in 1..30u64 {
            let expect = 0.4 * q.powi(j as i32) / (1.0 - q.powi(j as i32 + 1));
            assert!((nu.tail(j) - expect).abs() < 1e-14 * expect.max(1e-300) + 1e-300);
        }
    }
}
