//! Truncated Lamperti chains: construction from `F`, stationary vectors and
//! structural checks, plus classification and drift statistics for chains on
//! the positive integers.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, LabError, Result};
use crate::laws::DiscreteLaw;
use crate::special::{self, critical_d, exp_neg_gamma, Neumaier};

/// Dense chain on `{1..N}`; row/column `i-1` is state `i`.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    pub n: usize,
    pub p: DMatrix<f64>,
    /// `P^c(i, j) = F(j)^i`.
    pub pc: DMatrix<f64>,
    /// `F(0..=N)` with `F(0) = 0` and `F(N) = 1`.
    pub f: Vec<f64>,
    pub pi: Option<Vec<f64>>,
}

/// `x^i` by `exp(i log x)`, exact at 0 and 1.
fn power(x: f64, i: usize) -> f64 {
    if x == 0.0 {
        0.0
    } else if x == 1.0 {
        1.0
    } else {
        (i as f64 * x.ln()).exp()
    }
}

/// Build `P(i, j) = F(j)^i - F(j-1)^i` from `F(1..=N)`.
pub fn build_transition(f_states: &[f64]) -> Result<TransitionMatrix> {
    let n = f_states.len();
    if n == 0 {
        return invalid("empty cdf table");
    }
    let mut f = Vec::with_capacity(n + 1);
    f.push(0.0);
    f.extend_from_slice(f_states);
    for j in 1..=n {
        if !(0.0..=1.0).contains(&f[j]) {
            return Err(LabError::Validation(format!("F({j}) = {} is not a probability", f[j])));
        }
        if f[j] < f[j - 1] {
            return Err(LabError::Validation(format!("F decreases at j = {j}")));
        }
    }
    if f[n] != 1.0 {
        return Err(LabError::Validation(format!("F(N) = {} must equal 1", f[n])));
    }
    let pc = DMatrix::from_fn(n, n, |r, c| power(f[c + 1], r + 1));
    let p = DMatrix::from_fn(n, n, |r, c| {
        let lo = if c == 0 { 0.0 } else { pc[(r, c - 1)] };
        pc[(r, c)] - lo
    });
    for r in 0..n {
        let s = special::compensated_sum(p.row(r).iter().copied());
        if (s - 1.0).abs() > 1e-10 {
            return Err(LabError::Validation(format!("row {} sums to {s}", r + 1)));
        }
    }
    Ok(TransitionMatrix { n, p, pc, f, pi: None })
}

impl TransitionMatrix {
    /// Attach the stationary vector.
    pub fn with_stationary(mut self) -> Result<Self> {
        self.pi = Some(stationary_distribution(&self.p)?);
        Ok(self)
    }

    pub fn stationary(&self) -> Result<Vec<f64>> {
        match &self.pi {
            Some(p) => Ok(p.clone()),
            None => stationary_distribution(&self.p),
        }
    }
}

/// `max_j |(pi'P)_j - pi_j|`.
pub fn stationarity_residual(p: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let v = DVector::from_column_slice(pi);
    let r = p.tr_mul(&v) - &v;
    r.amax()
}

/// Solve `pi'P = pi'`, `sum pi = 1`; power iteration above 2000 states.
pub fn stationary_distribution(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = p.nrows();
    if n == 0 || p.ncols() != n {
        return invalid("transition matrix must be square and nonempty");
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }
    if n > 2000 {
        return stationary_by_power(p);
    }
    let mut a = p.transpose() - DMatrix::identity(n, n);
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let lu = a.lu();
    let x = lu
        .solve(&b)
        .ok_or_else(|| LabError::Singular("stationary system is singular (reducible chain?)".into()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LabError::Singular("stationary solve produced non-finite values".into()));
    }
    let mut pi: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let s = special::compensated_sum(pi.iter().copied());
    for v in pi.iter_mut() {
        *v /= s;
    }
    Ok(pi)
}

fn stationary_by_power(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = p.nrows();
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..1_000_000 {
        let mut w = p.tr_mul(&v);
        let s = w.sum();
        w /= s;
        let diff = (&w - &v).amax();
        v = w;
        if diff < 1e-12 {
            return Ok(v.iter().copied().collect());
        }
    }
    Err(LabError::NoConvergence("power iteration for the stationary vector".into()))
}

fn minor_without(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(n - 1, n - 1, |r, c| {
        let rr = if r >= k { r + 1 } else { r };
        let cc = if c >= k { c + 1 } else { c };
        m[(rr, cc)]
    })
}

/// Principal minor of `I - P` with row and column of state `j` removed.
pub fn kirchhoff_pi(p: &DMatrix<f64>, j: usize) -> Result<f64> {
    let n = p.nrows();
    if j == 0 || j > n {
        return invalid(format!("state {j} outside 1..={n}"));
    }
    if n > 12 {
        return invalid("determinant route is limited to N <= 12");
    }
    if n == 1 {
        return Ok(1.0);
    }
    let a = DMatrix::identity(n, n) - p;
    Ok(minor_without(&a, j - 1).determinant())
}

/// All principal minors, normalized to sum 1.
pub fn kirchhoff_vector(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = p.nrows();
    let m: Vec<f64> = (1..=n).map(|j| kirchhoff_pi(p, j)).collect::<Result<_>>()?;
    let s: f64 = special::compensated_sum(m.iter().copied());
    Ok(m.into_iter().map(|x| x / s).collect())
}

/// Row-wise cumulative sums of `P`.
pub fn cumulate(p: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = p.clone();
    for r in 0..c.nrows() {
        for k in 1..c.ncols() {
            c[(r, k)] += c[(r, k - 1)];
        }
    }
    c
}

/// `P^c(i, j)` nonincreasing in `i` for every `j`.
pub fn is_stochastically_monotone(p: &DMatrix<f64>) -> bool {
    let c = cumulate(p);
    (1..c.nrows()).all(|r| (0..c.ncols()).all(|k| c[(r, k)] <= c[(r - 1, k)] + 1e-12))
}

/// All 2x2 minors of `P^c` nonnegative up to `1e-12`.
pub fn is_tp2(pc: &DMatrix<f64>) -> bool {
    let (nr, nc) = pc.shape();
    for i1 in 0..nr {
        for i2 in i1 + 1..nr {
            for j1 in 0..nc {
                for j2 in j1 + 1..nc {
                    let m = pc[(i1, j1)] * pc[(i2, j2)] - pc[(i1, j2)] * pc[(i2, j1)];
                    if m < -1e-12 {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// `D_pi^{-1} P' D_pi`.
pub fn time_reverse(p: &DMatrix<f64>, pi: &[f64]) -> Result<DMatrix<f64>> {
    let n = p.nrows();
    if pi.len() != n || pi.iter().any(|x| !(*x > 0.0)) {
        return invalid("time reversal needs a strictly positive vector of matching size");
    }
    let res = stationarity_residual(p, pi);
    if res > 1e-9 {
        return invalid(format!("vector is not stationary (residual {res:e})"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| pi[j] * p[(j, i)] / pi[i]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// `pi(k) / sum_{k <= N} pi(k)`.
    Renormalize,
    /// Tail mass `P(X > N-1)` placed at `N`.
    Lump,
}

impl std::str::FromStr for Truncation {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "renorm" | "renormalize" => Ok(Truncation::Renormalize),
            "lump" => Ok(Truncation::Lump),
            other => invalid(format!("unknown truncation '{other}' (renorm, lump)")),
        }
    }
}

/// Target law restricted to `{1..N}`.
pub fn truncate_target(target: &DiscreteLaw, n: usize, mode: Truncation) -> Result<Vec<f64>> {
    if n == 0 {
        return invalid("N must be at least 1");
    }
    let mut v: Vec<f64> = (1..=n as u64).map(|k| target.pmf(k)).collect();
    match mode {
        Truncation::Renormalize => {
            let s = special::compensated_sum(v.iter().copied());
            if !(s > 0.0) {
                return invalid("target has no mass on {1..N}");
            }
            for x in v.iter_mut() {
                *x /= s;
            }
        }
        Truncation::Lump => {
            v[n - 1] = target.tail(n as u64 - 1);
            let s = special::compensated_sum(v.iter().copied());
            if !(s > 0.0) {
                return invalid("target has no mass on {1..N}");
            }
            for x in v.iter_mut() {
                *x /= s;
            }
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    PositiveRecurrent,
    NullRecurrent,
    Transient,
    CriticalOpen,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::PositiveRecurrent => "PositiveRecurrent",
            Verdict::NullRecurrent => "NullRecurrent",
            Verdict::Transient => "Transient",
            Verdict::CriticalOpen => "CriticalOpen",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub verdict: Verdict,
    /// Estimate of `lim i P(nu > i)`.
    pub limit_estimate: f64,
    pub d_estimate: Option<f64>,
    /// Distance of the deciding estimate from its threshold, relative to the
    /// threshold.
    pub margin: f64,
    /// `(i, i P(nu > i))` on the dyadic grid.
    pub grid: Vec<(f64, f64)>,
}

/// Relative band around `e^{-gamma}` inside which `d` decides.
pub const TOL_C: f64 = 0.02;
/// Relative band around `+-e^{-gamma} pi^2/12`.
pub const TOL_D: f64 = 0.05;
const K_MIN: u32 = 8;
const K_MAX: u32 = 40;

/// Value at `x = 0` of the polynomial through `(xs[i], ys[i])`.
fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i]);
        }
    }
    p[0]
}

/// Extrapolate `y(x)` to `x = 0` from the last three points, with the
/// spread against the previous window.
fn extrapolate(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let a = neville_at_zero(&xs[n - 3..], &ys[n - 3..]);
    let b = neville_at_zero(&xs[n - 4..n - 1], &ys[n - 4..n - 1]);
    (a, (a - b).abs())
}

/// Recurrence/transience verdict from `i P(nu > i)` on `i = 2^k`, `k <= 40`.
pub fn classify(nu: &DiscreteLaw) -> Result<Classification> {
    if nu.is_finite_support() {
        return Ok(Classification {
            verdict: Verdict::PositiveRecurrent,
            limit_estimate: 0.0,
            d_estimate: None,
            margin: 1.0,
            grid: Vec::new(),
        });
    }
    let mut grid = Vec::new();
    for k in K_MIN..=K_MAX {
        let i = 2f64.powi(k as i32);
        let t = nu.tail(1u64 << k);
        if !t.is_finite() || t < 0.0 {
            return Err(LabError::NoConvergence(format!("tail evaluation failed at i = 2^{k}")));
        }
        grid.push((i, i * t));
    }
    let xs: Vec<f64> = grid.iter().map(|(i, _)| 1.0 / i.ln()).collect();
    let ys: Vec<f64> = grid.iter().map(|(_, a)| *a).collect();
    let c = exp_neg_gamma();
    let thr = critical_d();
    let last = *ys.last().unwrap();
    // tails much lighter or heavier than 1/i need no extrapolation
    if last < 1e-3 * c || !last.is_finite() {
        return Ok(Classification {
            verdict: Verdict::PositiveRecurrent,
            limit_estimate: last,
            d_estimate: None,
            margin: 1.0,
            grid,
        });
    }
    let (limit, spread) = extrapolate(&xs, &ys);
    let growing = ys.windows(2).rev().take(5).all(|w| w[1] > 1.5 * w[0]);
    if growing {
        return Ok(Classification {
            verdict: Verdict::Transient,
            limit_estimate: f64::INFINITY,
            d_estimate: None,
            margin: f64::INFINITY,
            grid,
        });
    }
    let rel = (limit - c) / c;
    let unstable = spread > 0.25 * TOL_C * c;
    if rel.abs() > TOL_C {
        let verdict = if unstable && (rel.abs() - TOL_C) * c < spread {
            Verdict::Inconclusive
        } else if rel > 0.0 {
            Verdict::Transient
        } else {
            Verdict::PositiveRecurrent
        };
        return Ok(Classification { verdict, limit_estimate: limit, d_estimate: None, margin: rel.abs() - TOL_C, grid });
    }
    let bs: Vec<f64> = grid.iter().map(|(i, a)| (a - c) * i.ln()).collect();
    let (d, d_spread) = extrapolate(&xs, &bs);
    let margin_lo = (d + thr) / thr;
    let margin_hi = (d - thr) / thr;
    let verdict = if d_spread > TOL_D * thr {
        Verdict::Inconclusive
    } else if margin_hi.abs() <= TOL_D {
        Verdict::CriticalOpen
    } else if margin_lo.abs() <= TOL_D {
        Verdict::Inconclusive
    } else if d < -thr {
        Verdict::PositiveRecurrent
    } else if d < thr {
        Verdict::NullRecurrent
    } else {
        Verdict::Transient
    };
    let margin = margin_lo.abs().min(margin_hi.abs()) - TOL_D;
    Ok(Classification { verdict, limit_estimate: limit, d_estimate: Some(d), margin, grid })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedMax {
    pub value: f64,
    /// The defining series diverges.
    pub infinite: bool,
}

/// Whether `sum_j P(nu > j)` converges, judged from `2^k P(nu > 2^k)`.
fn tail_summable(nu: &DiscreteLaw) -> bool {
    if nu.is_finite_support() {
        return true;
    }
    let a = |k: u32| 2f64.powi(k as i32) * nu.tail(1u64 << k);
    let (a30, a35, a40) = (a(30), a(35), a(40));
    !(a40 > 0.5 * a35 && a35 > 0.5 * a30 && a40 > 1e-12)
}

/// `E(max of i copies of nu) = sum_{j >= 0} (1 - F(j)^i)`.
pub fn expected_max(nu: &DiscreteLaw, i: u64) -> ExpectedMax {
    if i == 0 {
        return ExpectedMax { value: 0.0, infinite: false };
    }
    if !tail_summable(nu) {
        return ExpectedMax { value: f64::INFINITY, infinite: true };
    }
    let term = |j: u64| -> f64 {
        let t = nu.tail(j);
        if t == 0.0 {
            0.0
        } else if i == 1 {
            t
        } else {
            -(i as f64 * (-t).ln_1p()).exp_m1()
        }
    };
    let mut acc = Neumaier::default();
    let mut prev = f64::INFINITY;
    let mut j = 0u64;
    loop {
        let s = term(j);
        acc.add(s);
        if s == 0.0 {
            break;
        }
        let r = s / prev;
        if j > 0 && r < 1.0 && s * r / (1.0 - r) <= 1e-13 * acc.value() {
            break;
        }
        prev = s;
        j += 1;
        if j > 1 << 26 {
            break;
        }
    }
    ExpectedMax { value: acc.value(), infinite: false }
}

/// Smallest sampled `I <= i_max` with `E(m_i) <= i - 1` for every sampled
/// `i >= I`. All `i <= 64` are sampled, then a doubling grid.
pub fn foster_drift_threshold(nu: &DiscreteLaw, i_max: u64) -> Option<u64> {
    let mut grid: Vec<u64> = (1..=i_max.min(64)).collect();
    let mut i = 128u64;
    while i <= i_max {
        grid.push(i);
        i = i.saturating_mul(2);
    }
    if i_max > 64 && grid.last() != Some(&i_max) {
        grid.push(i_max);
    }
    let mut threshold = None;
    for &i in grid.iter().rev() {
        let e = expected_max(nu, i);
        if e.infinite || e.value > i as f64 - 1.0 {
            break;
        }
        threshold = Some(i);
    }
    threshold
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstState {
    pub mean_return: f64,
    /// Mean return time to 1 started from a step above 1.
    pub mean_positive_excursion: f64,
    /// `F(1) pi(1)`: long-run fraction of steps from 1 to 1.
    pub occupation_rho: f64,
}

/// Return-time statistics of the bottom state.
pub fn worst_state_stats(tm: &TransitionMatrix, pi: &[f64]) -> Result<WorstState> {
    if pi.len() != tm.n {
        return invalid("stationary vector size does not match the chain");
    }
    let (f1, pi1) = (tm.f[1], pi[0]);
    if !(pi1 > 0.0) {
        return invalid("worst-state statistics need pi(1) > 0");
    }
    if !(f1 < 1.0) {
        return invalid("state 1 is absorbing when F(1) = 1");
    }
    Ok(WorstState {
        mean_return: 1.0 / pi1,
        mean_positive_excursion: (1.0 / pi1 - f1) / (1.0 - f1),
        occupation_rho: f1 * pi1,
    })
}

/// Row-major numeric matrix text: header line `N <n>`, then one row per line.
pub fn write_matrix<W: Write>(w: &mut W, m: &DMatrix<f64>) -> Result<()> {
    writeln!(w, "N {}", m.nrows())?;
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|x| crate::io::fmt_f64(*x)).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_matrix<R: BufRead>(r: R) -> Result<DMatrix<f64>> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| LabError::Parse("empty matrix text".into()))??;
    let n: usize = header
        .strip_prefix("N ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| LabError::Parse(format!("bad matrix header '{header}'")))?;
    let mut data = Vec::with_capacity(n * n);
    for _ in 0..n {
        let line = lines.next().ok_or_else(|| LabError::Parse("missing matrix row".into()))??;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| LabError::Parse(format!("'{t}': {e}"))))
            .collect::<Result<_>>()?;
        if row.len() != n {
            return Err(LabError::Parse(format!("row has {} entries, expected {n}", row.len())));
        }
        data.extend(row);
    }
    Ok(DMatrix::from_row_slice(n, n, &data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::design_branching_finite;

    fn geometric_chain(n: usize, q: f64) -> (TransitionMatrix, Vec<f64>) {
        let g = DiscreteLaw::geometric(1.0 - q).unwrap();
        let pi = truncate_target(&g, n, Truncation::Renormalize).unwrap();
        let t = design_branching_finite(&pi).unwrap();
        (build_transition(t.states()).unwrap(), pi)
    }

    #[test]
    fn one_state_chain() {
        let m = build_transition(&[1.0]).unwrap();
        assert_eq!(m.p[(0, 0)], 1.0);
        assert_eq!(stationary_distribution(&m.p).unwrap(), vec![1.0]);
        assert_eq!(kirchhoff_pi(&m.p, 1).unwrap(), 1.0);
    }

    #[test]
    fn first_row_is_branching_pmf() {
        let f = [0.2, 0.5, 0.9, 1.0];
        let m = build_transition(&f).unwrap();
        let pmf = [0.2, 0.3, 0.4, 0.1];
        for j in 0..4 {
            assert!((m.p[(0, j)] - pmf[j]).abs() < 1e-15);
        }
        for i in 0..4 {
            assert!((m.pc[(i, 3)] - 1.0).abs() == 0.0);
        }
        assert!(build_transition(&[0.5, 0.4, 1.0]).is_err());
        assert!(build_transition(&[0.5, 0.9]).is_err());
    }

    #[test]
    fn two_state_balance() {
        let f = 0.3;
        let m = build_transition(&[f, 1.0]).unwrap();
        let pi = stationary_distribution(&m.p).unwrap();
        // P = [[f, 1-f], [f^2, 1-f^2]]
        let a = 1.0 - f;
        let b = f * f;
        assert!((pi[0] - b / (a + b)).abs() < 1e-15);
        let k = kirchhoff_vector(&m.p).unwrap();
        assert!((k[0] - pi[0]).abs() < 1e-14);
        let ka = kirchhoff_pi(&m.p, 1).unwrap();
        assert!((ka - (1.0 - m.p[(1, 1)])).abs() < 1e-15);
    }

    #[test]
    fn geometric_chain_properties() {
        let (m, pi) = geometric_chain(5, 0.5);
        for r in 0..5 {
            assert!((m.p.row(r).sum() - 1.0).abs() < 1e-14);
        }
        let s = stationary_distribution(&m.p).unwrap();
        for k in 0..5 {
            assert!((s[k] - pi[k]).abs() < 1e-12);
        }
        assert!(is_stochastically_monotone(&m.p));
        assert!(is_tp2(&m.pc));
        let k = kirchhoff_vector(&m.p).unwrap();
        for j in 0..5 {
            assert!((k[j] - s[j]).abs() < 1e-12);
        }
        let rev = time_reverse(&m.p, &s).unwrap();
        for r in 0..5 {
            assert!((rev.row(r).sum() - 1.0).abs() < 1e-12);
        }
        assert!(stationarity_residual(&rev, &s) < 1e-12);
        let back = time_reverse(&rev, &s).unwrap();
        assert!((back - &m.p).amax() < 1e-12);
    }

    #[test]
    fn monotonicity_counterexample() {
        let p = DMatrix::from_row_slice(2, 2, &[0.1, 0.9, 0.9, 0.1]);
        assert!(!is_stochastically_monotone(&p));
    }

    #[test]
    fn truncation_modes() {
        let p = 0.3;
        let q: f64 = 0.7;
        let g = DiscreteLaw::geometric(p).unwrap();
        let r = truncate_target(&g, 6, Truncation::Renormalize).unwrap();
        for k in 0..6 {
            assert!((r[k] - p * q.powi(k as i32) / (1.0 - q.powi(6))).abs() < 1e-15);
        }
        let l = truncate_target(&g, 6, Truncation::Lump).unwrap();
        assert!((l[5] - q.powi(5)).abs() < 1e-15);
        assert_eq!(truncate_target(&g, 1, Truncation::Lump).unwrap(), vec![1.0]);
    }

    #[test]
    fn closed_form_branch_classification() {
        let c = classify(&DiscreteLaw::counting_branch()).unwrap();
        assert_eq!(c.verdict, Verdict::Transient);
        assert!((c.limit_estimate - 1.0).abs() < 0.02);
        let l = classify(&DiscreteLaw::linear_branch()).unwrap();
        assert_eq!(l.verdict, Verdict::Transient);
        assert!((l.limit_estimate - 2f64.sqrt()).abs() < 0.02 * 2f64.sqrt());
        let h = classify(&DiscreteLaw::harmonic_branch()).unwrap();
        assert_eq!(h.verdict, Verdict::NullRecurrent);
        assert!(h.d_estimate.unwrap().abs() < 0.05);
        let g = classify(&DiscreteLaw::geometric(0.5).unwrap()).unwrap();
        assert_eq!(g.verdict, Verdict::PositiveRecurrent);
    }

    #[test]
    fn neville_recovers_polynomials() {
        let xs = [0.1, 0.2, 0.3];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 3.0 * x + x * x).collect();
        assert!((neville_at_zero(&xs, &ys) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn expected_max_examples() {
        let d1 = DiscreteLaw::point_mass();
        assert_eq!(expected_max(&d1, 5).value, 1.0);
        assert_eq!(foster_drift_threshold(&d1, 1000), Some(2));
        let law = DiscreteLaw::geometric(0.4).unwrap();
        assert!((expected_max(&law, 1).value - law.mean()).abs() < 1e-12);
        let nu = DiscreteLaw::designed_for(&DiscreteLaw::geometric(0.5).unwrap()).unwrap();
        let p = 0.5;
        let q: f64 = 0.5;
        let direct = 1.0 + p * (1..200).map(|j| q.powi(j) / (1.0 - q.powi(j + 1))).sum::<f64>();
        assert!((expected_max(&nu, 1).value - direct).abs() < 1e-11);
        assert!(foster_drift_threshold(&nu, 4096).is_some());
        assert_eq!(foster_drift_threshold(&DiscreteLaw::counting_branch(), 4096), None);
        assert!(expected_max(&DiscreteLaw::counting_branch(), 3).infinite);
    }

    #[test]
    fn worst_state_identities() {
        let (m, pi) = geometric_chain(8, 0.5);
        let w = worst_state_stats(&m, &pi).unwrap();
        assert!((w.mean_return * pi[0] - 1.0).abs() < 1e-15);
        assert!(w.mean_positive_excursion > 2.0);
        assert!(1.0 / pi[0] > 2.0 - m.f[1]);
    }

    #[test]
    fn matrix_text_round_trip() {
        let (m, _) = geometric_chain(4, 0.3);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m.p).unwrap();
        let back = read_matrix(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, m.p);
    }
}
