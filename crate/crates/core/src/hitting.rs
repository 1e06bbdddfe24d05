//! Hitting times of the top state `N` for truncated chains: strong stationary
//! times and separation, the geometric-convolution structure of the hitting
//! time from stationarity, quasi-stationary analysis and exponential bounds.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::chain::{build_transition, truncate_target, TransitionMatrix, Truncation};
use crate::design::design_branching_finite;
use crate::error::{invalid, LabError, Result};
use crate::laws::DiscreteLaw;
use crate::special::Neumaier;

/// Hard cap on distribution horizons.
pub const HORIZON_CAP: usize = 100_000;
/// Separation level defining the default horizon.
pub const SEP_HORIZON: f64 = 1e-10;

/// Hypothesis checks: an error by default, a recorded note in forced mode.
#[derive(Debug, Clone, Default)]
pub struct Guard {
    pub forced: bool,
    pub notes: Vec<String>,
}

impl Guard {
    pub fn strict() -> Self {
        Guard::default()
    }

    pub fn forced() -> Self {
        Guard { forced: true, notes: Vec::new() }
    }

    pub fn require(&mut self, ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
        if ok {
            return Ok(());
        }
        let m = msg();
        if self.forced {
            self.notes.push(m);
            Ok(())
        } else {
            Err(LabError::Validation(m))
        }
    }
}

/// `pi0(i)/piN(i)` nonincreasing in `i` and `pi0(N) = 0`.
pub fn check_brown_condition(pi0: &[f64], pin: &[f64]) -> bool {
    let n = pin.len();
    if pi0.len() != n || n == 0 || pi0[n - 1] != 0.0 {
        return false;
    }
    let r: Vec<f64> = pi0.iter().zip(pin).map(|(a, b)| a / b).collect();
    r.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
}

/// `pi0(i) = delta_{i,1}` on `N` states.
pub fn delta_one(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    v
}

/// `pi0(i) proportional to z^i piN(i)` on `{1..N-1}`, zero at `N`.
pub fn geometric_tilt(pin: &[f64], z: f64) -> Result<Vec<f64>> {
    if !(z > 0.0 && z < 1.0) {
        return invalid("tilt parameter must lie in (0, 1)");
    }
    let n = pin.len();
    if n < 2 {
        return invalid("tilted start needs N >= 2");
    }
    let mut v: Vec<f64> = (0..n).map(|k| z.powi(k as i32 + 1) * pin[k]).collect();
    v[n - 1] = 0.0;
    let s: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= s;
    }
    Ok(v)
}

fn pi_of(tm: &TransitionMatrix) -> Result<Vec<f64>> {
    let pi = tm.stationary()?;
    if tm.n < 2 {
        return invalid("hitting analysis needs N >= 2");
    }
    Ok(pi)
}

fn check_start(pi0: &[f64], n: usize) -> Result<()> {
    if pi0.len() != n {
        return invalid(format!("initial vector has length {}, expected {n}", pi0.len()));
    }
    if pi0.iter().any(|x| !(*x >= 0.0)) {
        return invalid("initial vector has negative or non-finite entries");
    }
    let s: f64 = pi0.iter().sum();
    if (s - 1.0).abs() > 1e-10 {
        return invalid(format!("initial vector sums to {s}"));
    }
    Ok(())
}

/// Deflated row iteration: `u_{n+1} = u_n P - (u_n 1) pi'`, keeping `u_n 1 = 0`.
struct Deflated<'a> {
    p: &'a DMatrix<f64>,
    pi: &'a [f64],
    u: DVector<f64>,
}

impl<'a> Deflated<'a> {
    fn new(p: &'a DMatrix<f64>, pi: &'a [f64], start: &[f64]) -> Self {
        let u = DVector::from_iterator(pi.len(), start.iter().zip(pi).map(|(a, b)| a - b));
        Deflated { p, pi, u }
    }

    fn step(&mut self) {
        let mut w = self.p.tr_mul(&self.u);
        let s = w.sum();
        for (x, p) in w.iter_mut().zip(self.pi) {
            *x -= s * p;
        }
        self.u = w;
    }
}

/// Separation in both forms for `n = 0..=n_max`: `(max_k form, state-N form)`.
fn separation_pair(p: &DMatrix<f64>, pi: &[f64], pi0: &[f64], n_max: usize) -> (Vec<f64>, Vec<f64>) {
    let n = pi.len();
    let mut it = Deflated::new(p, pi, pi0);
    let mut max_form = Vec::with_capacity(n_max + 1);
    let mut top = Vec::with_capacity(n_max + 1);
    for step in 0..=n_max {
        if step > 0 {
            it.step();
        }
        let m = (0..n).map(|k| -it.u[k] / pi[k]).fold(f64::NEG_INFINITY, f64::max);
        max_form.push(m);
        top.push(-it.u[n - 1] / pi[n - 1]);
    }
    (max_form, top)
}

/// Smallest `n` with `sep(n) < 1e-10`, capped at `HORIZON_CAP`.
pub fn sep_horizon(tm: &TransitionMatrix, pi0: &[f64]) -> Result<usize> {
    let pi = pi_of(tm)?;
    check_start(pi0, tm.n)?;
    let mut it = Deflated::new(&tm.p, &pi, pi0);
    let last = tm.n - 1;
    for n in 0..=HORIZON_CAP {
        if n > 0 {
            it.step();
        }
        if -it.u[last] / pi[last] < SEP_HORIZON {
            return Ok(n);
        }
    }
    Err(LabError::CapBreached(format!("separation stays above {SEP_HORIZON:e} up to n = {HORIZON_CAP}")))
}

/// `P(T <= n) = pi0' P^n e_N / pi(N)` for `n = 0..=n_max`.
pub fn strong_stationary_time_cdf(
    tm: &TransitionMatrix,
    pi0: &[f64],
    n_max: usize,
    guard: &mut Guard,
) -> Result<Vec<f64>> {
    let pi = pi_of(tm)?;
    check_start(pi0, tm.n)?;
    guard.require(check_brown_condition(pi0, &pi), || {
        "initial vector violates the ratio condition needed for a monotone cdf".into()
    })?;
    let (_, top) = separation_pair(&tm.p, &pi, pi0, n_max);
    let cdf: Vec<f64> = top.iter().map(|s| 1.0 - s).collect();
    let worst = cdf.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    guard.require(worst <= 1e-12, || format!("cdf of T decreases by {worst:e}"))?;
    Ok(cdf)
}

/// Separation sequence; the max-over-states form and the state-`N` form are
/// required to agree within `1e-10`.
pub fn separation_sequence(
    tm: &TransitionMatrix,
    pi0: &[f64],
    n_max: usize,
    guard: &mut Guard,
) -> Result<Vec<f64>> {
    let pi = pi_of(tm)?;
    check_start(pi0, tm.n)?;
    guard.require(check_brown_condition(pi0, &pi), || {
        "initial vector violates the ratio condition; separation need not sit at N".into()
    })?;
    let (max_form, top) = separation_pair(&tm.p, &pi, pi0, n_max);
    let gap = max_form.iter().zip(&top).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    guard.require(gap <= 1e-10, || format!("separation forms differ by {gap:e}"))?;
    Ok(top)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Separation {
    pub max_form: f64,
    pub state_n_form: f64,
}

/// Separation at a single `n`, both forms.
pub fn separation_distance(tm: &TransitionMatrix, pi0: &[f64], n: usize) -> Result<Separation> {
    let pi = pi_of(tm)?;
    check_start(pi0, tm.n)?;
    let (m, t) = separation_pair(&tm.p, &pi, pi0, n);
    Ok(Separation { max_form: m[n], state_n_form: t[n] })
}

/// `P(W_1 > n) = (P^n(N,N) - pi(N)) / (1 - pi(N))` for `n = 0..=n_max`.
pub fn w1_tail(tm: &TransitionMatrix, n_max: usize, guard: &mut Guard) -> Result<Vec<f64>> {
    let pi = pi_of(tm)?;
    let pn = pi[tm.n - 1];
    let diffs = top_return_excess(&tm.p, &pi, n_max);
    let worst = diffs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    guard.require(worst <= 1e-12 * (1.0 - pn), || format!("P^n(N,N) increases by {worst:e}"))?;
    Ok(diffs.into_iter().map(|d| d / (1.0 - pn)).collect())
}

/// `P^n(N,N) - pi(N)` for `n = 0..=n_max`.
fn top_return_excess(p: &DMatrix<f64>, pi: &[f64], n_max: usize) -> Vec<f64> {
    let n = pi.len();
    let mut e = vec![0.0; n];
    e[n - 1] = 1.0;
    let mut it = Deflated::new(p, pi, &e);
    let mut out = Vec::with_capacity(n_max + 1);
    for step in 0..=n_max {
        if step > 0 {
            it.step();
        }
        out.push(it.u[n - 1]);
    }
    out
}

/// Substochastic block on `{1..N-1}`.
pub fn substochastic(p: &DMatrix<f64>) -> DMatrix<f64> {
    let n = p.nrows();
    p.view((0, 0), (n - 1, n - 1)).into_owned()
}

fn transient_part(init: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(&init[..init.len() - 1])
}

/// `P(tau > n) = init_0' Q^n 1` for `n = 0..=n_max`; mass at `N` has `tau = 0`.
pub fn hitting_tail(p: &DMatrix<f64>, init: &[f64], n_max: usize) -> Vec<f64> {
    if p.nrows() == 1 {
        return vec![0.0; n_max + 1];
    }
    let q = substochastic(p);
    let mut v = transient_part(init);
    let mut out = Vec::with_capacity(n_max + 1);
    for step in 0..=n_max {
        if step > 0 {
            v = q.tr_mul(&v);
        }
        out.push(v.sum());
    }
    out
}

/// Hitting tail until it drops below `level`.
pub fn hitting_tail_until(p: &DMatrix<f64>, init: &[f64], level: f64, cap: usize) -> Result<Vec<f64>> {
    if p.nrows() == 1 {
        return Ok(vec![0.0]);
    }
    let q = substochastic(p);
    let mut v = transient_part(init);
    let mut out = vec![v.sum()];
    while *out.last().unwrap() >= level {
        if out.len() > cap {
            return Err(LabError::CapBreached(format!("hitting tail stays above {level:e} past n = {cap}")));
        }
        v = q.tr_mul(&v);
        out.push(v.sum());
    }
    Ok(out)
}

fn fundamental_solve(p: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let q = substochastic(p);
    let m = q.nrows();
    let a = DMatrix::identity(m, m) - q;
    a.lu()
        .solve(rhs)
        .ok_or_else(|| LabError::Singular("I - P restricted to {1..N-1} is singular".into()))
}

/// `E(tau) = init_0' (I - Q)^{-1} 1`.
pub fn hitting_mean(p: &DMatrix<f64>, init: &[f64]) -> Result<f64> {
    if p.nrows() == 1 {
        return Ok(0.0);
    }
    let m = p.nrows() - 1;
    let t = fundamental_solve(p, &DVector::from_element(m, 1.0))?;
    Ok(transient_part(init).dot(&t))
}

/// `E(tau^2) = 2 init_0' Z^2 1 - init_0' Z 1` with `Z = (I - Q)^{-1}`.
pub fn hitting_second_moment(p: &DMatrix<f64>, init: &[f64]) -> Result<f64> {
    if p.nrows() == 1 {
        return Ok(0.0);
    }
    let m = p.nrows() - 1;
    let t = fundamental_solve(p, &DVector::from_element(m, 1.0))?;
    let t2 = fundamental_solve(p, &t)?;
    let a = transient_part(init);
    Ok(2.0 * a.dot(&t2) - a.dot(&t))
}

#[derive(Debug, Clone, Serialize)]
pub struct Qsd {
    /// Left eigenvector on `{1..N-1}`, summing to 1.
    pub mu: Vec<f64>,
    /// Rayleigh quotient `mu' Q phi / mu' phi`.
    pub rho: f64,
    /// Right eigenvector scaled so that `mu' phi = 1`.
    pub phi: Vec<f64>,
    /// `sum_j mu(j) F(N-1)^j`.
    pub rho_pgf: f64,
    pub residual: f64,
}

fn perron_vector(a: &DMatrix<f64>, transpose: bool) -> Result<(DVector<f64>, f64)> {
    let m = a.nrows();
    let apply = |v: &DVector<f64>| if transpose { a.tr_mul(v) } else { a * v };
    let mut v = DVector::from_element(m, 1.0 / m as f64);
    let mut lambda = 0.0;
    let resid = |v: &DVector<f64>, l: f64| (apply(v) - v * l).amax() / v.amax();
    for _ in 0..20_000 {
        let w = apply(&v);
        let s = w.sum();
        if !(s > 0.0) {
            return Err(LabError::NoConvergence("substochastic block annihilates the iterate".into()));
        }
        lambda = s / v.sum();
        v = w / s;
        if resid(&v, lambda) <= 1e-13 * lambda.max(1e-300) {
            return Ok((v, lambda));
        }
    }
    // shifted inverse iteration from the power-iteration estimate
    let shift = lambda * (1.0 + 1e-9) + 1e-300;
    let mut b = DMatrix::identity(m, m) * shift - a;
    if transpose {
        b = b.transpose();
    }
    let lu = b.lu();
    for _ in 0..50 {
        let w = lu
            .solve(&v)
            .ok_or_else(|| LabError::NoConvergence("shifted system singular".into()))?;
        let s = w.sum();
        v = w / s;
        let w = apply(&v);
        lambda = w.sum() / v.sum();
        if resid(&v, lambda) <= 1e-13 * lambda {
            return Ok((v, lambda));
        }
    }
    Err(LabError::NoConvergence("dominant eigenvector of the substochastic block".into()))
}

/// Quasi-stationary triple `(mu, rho, phi)` of `P` restricted to `{1..N-1}`.
pub fn qsd(tm: &TransitionMatrix) -> Result<Qsd> {
    if tm.n < 2 {
        return invalid("quasi-stationary analysis needs N >= 2");
    }
    let q = substochastic(&tm.p);
    let (mu, _) = perron_vector(&q, true)?;
    let (phi, _) = perron_vector(&q, false)?;
    let norm = mu.dot(&phi);
    let phi = phi / norm;
    let qphi = &q * &phi;
    let rho = mu.dot(&qphi) / mu.dot(&phi);
    let residual = (q.tr_mul(&mu) - &mu * rho).amax().max((qphi - &phi * rho).amax() / phi.amax());
    let fm = tm.f[tm.n - 1];
    let mut acc = Neumaier::default();
    for (j, m) in mu.iter().enumerate() {
        acc.add(m * fm.powi(j as i32 + 1));
    }
    Ok(Qsd { mu: mu.iter().copied().collect(), rho, phi: phi.iter().copied().collect(), rho_pgf: acc.value(), residual })
}

/// `u_n = P(tau_{pi0} > n) / P(tau_{piN} > n)` for `n = 0..=n_max`.
pub fn tail_ratio_sequence(tm: &TransitionMatrix, pi0: &[f64], n_max: usize) -> Result<Vec<f64>> {
    let pi = pi_of(tm)?;
    check_start(pi0, tm.n)?;
    let a = hitting_tail(&tm.p, pi0, n_max);
    let b = hitting_tail(&tm.p, &pi, n_max);
    Ok(a.iter().zip(&b).map(|(x, y)| x / y).collect())
}

/// `u* = pi_{0,0}' phi / pi_(N-1)' phi`, with the ordering of `phi` checked.
pub fn tail_ratio_limit(tm: &TransitionMatrix, pi0: &[f64], q: &Qsd, guard: &mut Guard) -> Result<f64> {
    let pi = pi_of(tm)?;
    check_start(pi0, tm.n)?;
    guard.require(check_brown_condition(pi0, &pi), || {
        "initial vector violates the ratio condition; the limit need not exceed 1".into()
    })?;
    let m = tm.n - 1;
    let num: f64 = (0..m).map(|k| pi0[k] * q.phi[k]).sum();
    let den: f64 = (0..m).map(|k| pi[k] * q.phi[k]).sum();
    let u = num / den;
    let inc = q.phi.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    guard.require(inc <= 1e-12 * q.phi[0], || format!("right eigenvector increases by {inc:e}"))?;
    guard.require(u >= 1.0 - 1e-12, || format!("tail-ratio limit {u} is below 1"))?;
    Ok(u)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GreenValue {
    pub value: f64,
    pub terms: usize,
    pub converged: bool,
}

/// `G_{N,N}(z) = sum_n z^n P^n(N,N)`, truncated with the bound
/// `diff_n z^{n+1} / (1 - z)` on the excess `diff_n = P^n(N,N) - pi(N)`.
pub fn green_kernel_nn(tm: &TransitionMatrix, z: f64) -> Result<GreenValue> {
    if !(0.0..1.0).contains(&z) {
        return invalid("Green kernel needs z in [0, 1)");
    }
    let pi = pi_of(tm)?;
    let n = tm.n;
    let pn = pi[n - 1];
    let mut e = vec![0.0; n];
    e[n - 1] = 1.0;
    let mut it = Deflated::new(&tm.p, &pi, &e);
    let mut acc = Neumaier::default();
    acc.add(pn / (1.0 - z));
    let mut zn = 1.0;
    for k in 0..1_000_000 {
        if k > 0 {
            it.step();
            zn *= z;
        }
        let d = it.u[n - 1];
        acc.add(zn * d);
        let bound = d.abs() * zn * z / (1.0 - z);
        if bound <= 1e-17 * acc.value() || zn == 0.0 {
            return Ok(GreenValue { value: acc.value(), terms: k + 1, converged: true });
        }
    }
    Ok(GreenValue { value: acc.value(), terms: 1_000_000, converged: false })
}

/// `1 - (1 - z) init_0' (I - z Q)^{-1} 1`.
fn hitting_pgf_resolvent(p: &DMatrix<f64>, init: &[f64], z: f64) -> Result<f64> {
    let q = substochastic(p);
    let m = q.nrows();
    let a = DMatrix::identity(m, m) - q * z;
    let x = a
        .lu()
        .solve(&DVector::from_element(m, 1.0))
        .ok_or_else(|| LabError::Singular("I - zQ is singular".into()))?;
    Ok(1.0 - (1.0 - z) * transient_part(init).dot(&x))
}

#[derive(Debug, Clone, Serialize)]
pub struct PgfPoint {
    pub z: f64,
    /// `pi(N) / ((1 - z) G_{N,N}(z))`.
    pub green_form: f64,
    /// Geometric convolution of `W_1`.
    pub convolution_form: f64,
    /// `1 - (1 - z) pi_(N-1)' (I - zQ)^{-1} 1`.
    pub resolvent_form: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvolutionCheck {
    pub points: Vec<PgfPoint>,
    pub max_residual: f64,
}

/// pgf of `tau_{piN,N}` by the Green-kernel form, the geometric convolution of
/// `W_1` and the resolvent of `Q`; residual is the largest pairwise gap.
pub fn geometric_convolution_check(tm: &TransitionMatrix, z_grid: &[f64]) -> Result<ConvolutionCheck> {
    let pi = pi_of(tm)?;
    let n = tm.n;
    let pn = pi[n - 1];
    let mut points = Vec::new();
    let mut worst: f64 = 0.0;
    for &z in z_grid {
        let g = green_kernel_nn(tm, z)?;
        let green_form = pn / ((1.0 - z) * g.value);
        // sum_n z^n P(W_1 > n) = (G - pi(N)/(1-z)) / (1 - pi(N))
        let w_series = w1_pgf_series(tm, &pi, z);
        let w_pgf = 1.0 - (1.0 - z) * w_series;
        let convolution_form = 1.0 / (1.0 + (1.0 - pn) / pn * (1.0 - w_pgf));
        let resolvent_form = hitting_pgf_resolvent(&tm.p, &pi, z)?;
        let r = (green_form - convolution_form)
            .abs()
            .max((green_form - resolvent_form).abs())
            .max((convolution_form - resolvent_form).abs());
        worst = worst.max(r);
        points.push(PgfPoint { z, green_form, convolution_form, resolvent_form, converged: g.converged });
    }
    Ok(ConvolutionCheck { points, max_residual: worst })
}

/// `sum_n z^n P(W_1 > n)` from the `W_1` tail itself.
fn w1_pgf_series(tm: &TransitionMatrix, pi: &[f64], z: f64) -> f64 {
    let n = tm.n;
    let pn = pi[n - 1];
    let mut e = vec![0.0; n];
    e[n - 1] = 1.0;
    let mut it = Deflated::new(&tm.p, pi, &e);
    let mut acc = Neumaier::default();
    let mut zn = 1.0;
    for k in 0..1_000_000 {
        if k > 0 {
            it.step();
            zn *= z;
        }
        let t = it.u[n - 1] / (1.0 - pn);
        acc.add(zn * t);
        if t.abs() * zn * z / (1.0 - z) <= 1e-17 * acc.value() || zn == 0.0 {
            break;
        }
    }
    acc.value()
}

/// Largest gap in `E(z^{tau_{pi0}}) = E(z^T) E(z^{tau_{piN}})` over the grid,
/// every factor taken from a resolvent.
pub fn factorization_check(tm: &TransitionMatrix, pi0: &[f64], z_grid: &[f64]) -> Result<f64> {
    let pi = pi_of(tm)?;
    check_start(pi0, tm.n)?;
    let n = tm.n;
    let mut worst: f64 = 0.0;
    for &z in z_grid {
        let lhs = hitting_pgf_resolvent(&tm.p, pi0, z)?;
        let a = DMatrix::identity(n, n) - &tm.p * z;
        let mut e = DVector::zeros(n);
        e[n - 1] = 1.0;
        let x = a
            .lu()
            .solve(&e)
            .ok_or_else(|| LabError::Singular("I - zP is singular".into()))?;
        let g0 = DVector::from_column_slice(pi0).dot(&x);
        let t_pgf = (1.0 - z) / pi[n - 1] * g0;
        let rhs = t_pgf * hitting_pgf_resolvent(&tm.p, &pi, z)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Max-norm gap between the law of `tau_{pi0}` and the convolution of the
/// laws of `T` and `tau_{piN}`, over `n <= n_max`.
pub fn convolution_identity_residual(tm: &TransitionMatrix, pi0: &[f64], n_max: usize) -> Result<f64> {
    let pi = pi_of(tm)?;
    check_start(pi0, tm.n)?;
    let (_, sep) = separation_pair(&tm.p, &pi, pi0, n_max);
    let t0 = hitting_tail(&tm.p, pi0, n_max);
    let tp = hitting_tail(&tm.p, &pi, n_max);
    let pmf_of_tail = |tail: &[f64]| -> Vec<f64> {
        let mut v = vec![1.0 - tail[0]];
        v.extend(tail.windows(2).map(|w| w[0] - w[1]));
        v
    };
    let pt = pmf_of_tail(&sep);
    let pp = pmf_of_tail(&tp);
    let p0 = pmf_of_tail(&t0);
    let mut worst: f64 = 0.0;
    for k in 0..=n_max {
        let mut acc = Neumaier::default();
        for m in 0..=k {
            acc.add(pt[m] * pp[k - m]);
        }
        worst = worst.max((acc.value() - p0[k]).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpectedT {
    /// `sum_{n >= 0} P(T > n)`.
    pub by_definition: f64,
    /// `1 - pi0' (I - P + 1 pi')^{-1} e_N / pi(N)`.
    pub fundamental_form: f64,
    /// `1 + pi0' (I - P)^{-1} P e_N / pi(N)` as displayed; `None` because
    /// `I - P` is singular for a stochastic `P`.
    pub printed_form: Option<f64>,
}

pub fn expected_t(tm: &TransitionMatrix, pi0: &[f64]) -> Result<ExpectedT> {
    let pi = pi_of(tm)?;
    check_start(pi0, tm.n)?;
    let n = tm.n;
    let mut it = Deflated::new(&tm.p, &pi, pi0);
    let mut acc = Neumaier::default();
    let mut prev = f64::INFINITY;
    for k in 0..=10 * HORIZON_CAP {
        if k > 0 {
            it.step();
        }
        let s = -it.u[n - 1] / pi[n - 1];
        acc.add(s);
        let r = s / prev;
        if k > 0 && s.abs() < 1e-300 {
            break;
        }
        if k > 2 && r < 1.0 && s * r / (1.0 - r) <= 1e-15 * acc.value() {
            break;
        }
        if k == 10 * HORIZON_CAP {
            return Err(LabError::CapBreached("mean of T not converged".into()));
        }
        prev = s;
    }
    let one_pi = DMatrix::from_fn(n, n, |_, c| pi[c]);
    let a = DMatrix::identity(n, n) - &tm.p + one_pi;
    let mut e = DVector::zeros(n);
    e[n - 1] = 1.0;
    let x = a
        .lu()
        .solve(&e)
        .ok_or_else(|| LabError::Singular("I - P + 1 pi' is singular".into()))?;
    let fundamental_form = 1.0 - DVector::from_column_slice(pi0).dot(&x) / pi[n - 1];
    let printed_form = (DMatrix::identity(n, n) - &tm.p)
        .lu()
        .solve(&(&tm.p * &e))
        .filter(|y| y.iter().all(|v| v.is_finite() && v.abs() < 1e12))
        .map(|y| 1.0 + DVector::from_column_slice(pi0).dot(&y) / pi[n - 1]);
    Ok(ExpectedT { by_definition: acc.value(), fundamental_form, printed_form })
}

/// `sup_t |P(tau / E(tau) > t) - e^{-t}|` over `t` up to where the tail
/// drops below `1e-6`.
pub fn observed_sup_distance(tail: &[f64], mean: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (n, &a) in tail.iter().enumerate() {
        let lo = (-(n as f64) / mean).exp();
        let hi = (-((n + 1) as f64) / mean).exp();
        worst = worst.max((a - lo).abs()).max((a - hi).abs());
        if a < 1e-6 {
            break;
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpBound {
    /// `pi(N) E(W_1^2) / E(W_1)^2`.
    pub bound_pin_w: f64,
    /// `2 (1 - pi(N)) [E(tau^2) / (2 E(tau)^2) - 1]`.
    pub bound_pin_tau: f64,
    /// `E(T) / E(tau_{piN}) + bound_pin_tau`.
    pub bound_pi0: f64,
    pub observed_pin: f64,
    pub observed_pi0: f64,
}

/// Moments of `W_1` from its tail: `(E W, E W^2)`.
fn w1_moments(tm: &TransitionMatrix, pi: &[f64]) -> Result<(f64, f64)> {
    let n = tm.n;
    let pn = pi[n - 1];
    let mut e = vec![0.0; n];
    e[n - 1] = 1.0;
    let mut it = Deflated::new(&tm.p, pi, &e);
    let mut m1 = Neumaier::default();
    let mut m2 = Neumaier::default();
    let mut prev = f64::INFINITY;
    for k in 0..=10 * HORIZON_CAP {
        if k > 0 {
            it.step();
        }
        let t = it.u[n - 1] / (1.0 - pn);
        m1.add(t);
        m2.add((2 * k + 1) as f64 * t);
        let r = t / prev;
        if t.abs() < 1e-300 || (k > 2 && r < 1.0 && (2 * k + 3) as f64 * t * r / (1.0 - r).powi(2) <= 1e-16 * m2.value())
        {
            return Ok((m1.value(), m2.value()));
        }
        prev = t;
    }
    Err(LabError::CapBreached("moments of W_1 not converged".into()))
}

pub fn exponential_bound(tm: &TransitionMatrix, pi0: &[f64], guard: &mut Guard) -> Result<ExpBound> {
    let pi = pi_of(tm)?;
    check_start(pi0, tm.n)?;
    guard.require(check_brown_condition(pi0, &pi), || {
        "initial vector violates the ratio condition; the pi0 bound is not covered".into()
    })?;
    let pn = pi[tm.n - 1];
    let (ew, ew2) = w1_moments(tm, &pi)?;
    let bound_pin_w = pn * ew2 / (ew * ew);
    let et = hitting_mean(&tm.p, &pi)?;
    let et2 = hitting_second_moment(&tm.p, &pi)?;
    let bound_pin_tau = 2.0 * (1.0 - pn) * (et2 / (2.0 * et * et) - 1.0);
    let t_mean = expected_t(tm, pi0)?.by_definition;
    let bound_pi0 = t_mean / et + bound_pin_tau;
    let tail_pin = hitting_tail_until(&tm.p, &pi, 1e-6, 100 * HORIZON_CAP)?;
    let observed_pin = observed_sup_distance(&tail_pin, et);
    let e0 = hitting_mean(&tm.p, pi0)?;
    let tail_0 = hitting_tail_until(&tm.p, pi0, 1e-6, 100 * HORIZON_CAP)?;
    let observed_pi0 = observed_sup_distance(&tail_0, e0);
    guard.require(observed_pin <= bound_pin_tau.max(bound_pin_w) + 1e-9, || {
        format!("observed distance {observed_pin} exceeds the bound {bound_pin_tau}")
    })?;
    guard.require(observed_pi0 <= bound_pi0 + 1e-9, || {
        format!("observed distance {observed_pi0} exceeds the bound {bound_pi0}")
    })?;
    Ok(ExpBound { bound_pin_w, bound_pin_tau, bound_pi0, observed_pin, observed_pi0 })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayRate {
    pub start: usize,
    pub n: usize,
    /// `-(1/n) log P(tau_{i,N} > n)` at the first `n` with tail `<= 1e-8`.
    pub estimate: f64,
    pub limit: f64,
    pub rel_error: f64,
}

/// Decay rate of the hitting tail from `delta_i` against `-log rho`.
pub fn decay_rate(tm: &TransitionMatrix, start: usize, rho: f64) -> Result<DecayRate> {
    if start == 0 || start >= tm.n {
        return invalid(format!("start state must lie in 1..{}", tm.n));
    }
    let mut init = vec![0.0; tm.n];
    init[start - 1] = 1.0;
    let tail = hitting_tail_until(&tm.p, &init, 1e-8, 100 * HORIZON_CAP)?;
    let n = tail.len() - 1;
    let estimate = -tail[n].ln() / n as f64;
    let limit = -rho.ln();
    Ok(DecayRate { start, n, estimate, limit, rel_error: (estimate - limit).abs() / limit })
}

/// Geometric-restricted or other truncated chain built from a countable
/// target.
pub fn truncated_chain(target: &DiscreteLaw, n: usize, mode: Truncation) -> Result<(TransitionMatrix, Vec<f64>)> {
    let pi = truncate_target(target, n, mode)?;
    let table = design_branching_finite(&pi)?;
    let tm = build_transition(table.states())?;
    Ok((tm, pi))
}

/// `||mu_(N-1) - pi_(N-1)/|pi_(N-1)| ||_inf` for each `N`.
pub fn siegmund_pollack_gap(
    target: &DiscreteLaw,
    n_list: &[usize],
    mode: Truncation,
    guard: &mut Guard,
) -> Result<Vec<f64>> {
    let mut gaps = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let (tm, pi) = truncated_chain(target, n, mode)?;
        let q = qsd(&tm)?;
        let s: f64 = pi[..n - 1].iter().sum();
        let g = q.mu.iter().zip(&pi).map(|(m, p)| (m - p / s).abs()).fold(0.0, f64::max);
        gaps.push(g);
    }
    let ok = gaps.windows(2).all(|w| w[1] < w[0]);
    guard.require(ok, || format!("gaps do not decrease: {gaps:?}"))?;
    Ok(gaps)
}

#[derive(Debug, Clone, Serialize)]
pub struct HittingReport {
    pub n_states: usize,
    pub n_max: usize,
    pub t_cdf: Vec<f64>,
    pub sep: Vec<f64>,
    pub w1_tail: Vec<f64>,
    pub tau_tail_pi0: Vec<f64>,
    pub tau_tail_pin: Vec<f64>,
    pub mean_t: f64,
    pub mean_t_forms: ExpectedT,
    pub mean_tau_pi0: f64,
    pub mean_tau_pin: f64,
    pub second_moment_tau_pin: f64,
    pub qsd_mu: Vec<f64>,
    pub rho_n: f64,
    pub rho_pgf: f64,
    pub qsd_phi: Vec<f64>,
    pub u_limit: f64,
    pub exp_bound_pin: f64,
    pub exp_bound_pi0: f64,
    pub exp_bound: ExpBound,
    pub convolution_residual: f64,
    pub pgf_residual: f64,
    pub factorization_residual: f64,
    pub brown_condition: bool,
    pub notes: Vec<String>,
}

pub const PGF_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Full analysis of the hitting time of `N` from `pi0`.
pub fn hitting_report(tm: &TransitionMatrix, pi0: &[f64], guard: &mut Guard) -> Result<HittingReport> {
    let pi = pi_of(tm)?;
    check_start(pi0, tm.n)?;
    let brown = check_brown_condition(pi0, &pi);
    let n_max = sep_horizon(tm, pi0)?;
    let t_cdf = strong_stationary_time_cdf(tm, pi0, n_max, guard)?;
    let sep = separation_sequence(tm, pi0, n_max, guard)?;
    let w1 = w1_tail(tm, n_max, guard)?;
    let tau_tail_pi0 = hitting_tail(&tm.p, pi0, n_max);
    let tau_tail_pin = hitting_tail(&tm.p, &pi, n_max);
    let dom = tau_tail_pi0.iter().zip(&tau_tail_pin).all(|(a, b)| *a >= b - 1e-14);
    guard.require(dom, || "hitting tail from pi0 falls below the tail from stationarity".into())?;
    let mean_t_forms = expected_t(tm, pi0)?;
    let q = qsd(tm)?;
    guard.require((q.rho - q.rho_pgf).abs() <= 1e-10, || {
        format!("eigenvalue {} and pgf value {} disagree", q.rho, q.rho_pgf)
    })?;
    let u_limit = tail_ratio_limit(tm, pi0, &q, guard)?;
    let exp_bound = exponential_bound(tm, pi0, guard)?;
    let pgf = geometric_convolution_check(tm, &PGF_GRID)?;
    Ok(HittingReport {
        n_states: tm.n,
        n_max,
        t_cdf,
        sep,
        w1_tail: w1,
        tau_tail_pi0,
        tau_tail_pin,
        mean_t: mean_t_forms.by_definition,
        mean_t_forms,
        mean_tau_pi0: hitting_mean(&tm.p, pi0)?,
        mean_tau_pin: hitting_mean(&tm.p, &pi)?,
        second_moment_tau_pin: hitting_second_moment(&tm.p, &pi)?,
        qsd_mu: q.mu,
        rho_n: q.rho,
        rho_pgf: q.rho_pgf,
        qsd_phi: q.phi,
        u_limit,
        exp_bound_pin: exp_bound.bound_pin_tau,
        exp_bound_pi0: exp_bound.bound_pi0,
        exp_bound,
        convolution_residual: convolution_identity_residual(tm, pi0, n_max)?,
        pgf_residual: pgf.max_residual,
        factorization_residual: factorization_check(tm, pi0, &PGF_GRID)?,
        brown_condition: brown,
        notes: guard.notes.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo_chain(n: usize) -> (TransitionMatrix, Vec<f64>) {
        truncated_chain(&DiscreteLaw::geometric(0.5).unwrap(), n, Truncation::Renormalize).unwrap()
    }

    #[test]
    fn brown_condition_examples() {
        let (_, pi) = geo_chain(6);
        assert!(check_brown_condition(&delta_one(6), &pi));
        assert!(check_brown_condition(&geometric_tilt(&pi, 0.4).unwrap(), &pi));
        assert!(!check_brown_condition(&pi, &pi));
    }

    #[test]
    fn two_state_closed_forms() {
        let f: f64 = 0.3;
        let tm = build_transition(&[f, 1.0]).unwrap();
        let pi = tm.stationary().unwrap();
        let mut g = Guard::strict();
        let cdf = strong_stationary_time_cdf(&tm, &delta_one(2), 20, &mut g).unwrap();
        // P^n(1,2) = pi(2) (1 - lambda^n), lambda = 1 - (1-f) - f^2 ... trace - 1
        let lambda = tm.p[(0, 0)] + tm.p[(1, 1)] - 1.0;
        for (n, c) in cdf.iter().enumerate() {
            assert!((c - (1.0 - lambda.powi(n as i32))).abs() < 1e-14);
        }
        let w = w1_tail(&tm, 10, &mut g).unwrap();
        for (n, x) in w.iter().enumerate() {
            // P^n(2,2) = pi(2) + pi(1) lambda^n
            let expect = pi[0] * lambda.powi(n as i32) / (1.0 - pi[1]);
            assert!((x - expect).abs() < 1e-14);
        }
        let tail = hitting_tail(&tm.p, &delta_one(2), 10);
        for (n, t) in tail.iter().enumerate() {
            assert!((t - f.powi(n as i32)).abs() < 1e-15);
        }
        assert!((hitting_mean(&tm.p, &delta_one(2)).unwrap() - 1.0 / (1.0 - f)).abs() < 1e-14);
        let q = qsd(&tm).unwrap();
        assert!((q.rho - f).abs() < 1e-15);
        assert!((q.mu[0] - 1.0).abs() < 1e-15 && (q.phi[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_state_hitting_is_immediate() {
        let tm = build_transition(&[1.0]).unwrap();
        assert_eq!(hitting_tail(&tm.p, &[1.0], 3), vec![0.0; 4]);
        assert_eq!(hitting_mean(&tm.p, &[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn brown_structure_on_geometric_chain() {
        let (tm, pi) = geo_chain(6);
        let pi0 = delta_one(6);
        let mut g = Guard::strict();
        let n_max = sep_horizon(&tm, &pi0).unwrap();
        let cdf = strong_stationary_time_cdf(&tm, &pi0, n_max, &mut g).unwrap();
        assert_eq!(cdf[0], 0.0);
        assert!((cdf[n_max] - 1.0).abs() < 1e-10);
        let sep = separation_sequence(&tm, &pi0, n_max, &mut g).unwrap();
        assert!(sep.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(sep[0], 1.0);
        for (s, c) in sep.iter().zip(&cdf) {
            assert!((s - (1.0 - c)).abs() <= 1e-15);
        }
        let one = separation_distance(&tm, &pi0, 5).unwrap();
        assert!((one.max_form - one.state_n_form).abs() < 1e-12);
        assert!(convolution_identity_residual(&tm, &pi0, n_max).unwrap() < 1e-8);
        assert!(factorization_check(&tm, &pi0, &PGF_GRID).unwrap() < 1e-10);
        let c = geometric_convolution_check(&tm, &[0.0, 0.5]).unwrap();
        assert!((c.points[0].green_form - pi[5]).abs() < 1e-15);
        assert!(c.max_residual < 1e-10);
        let et = expected_t(&tm, &pi0).unwrap();
        assert!((et.by_definition - et.fundamental_form).abs() < 1e-8);
        assert!(et.printed_form.is_none());
    }

    #[test]
    fn mean_identity_and_moments() {
        let (tm, pi) = geo_chain(8);
        let pn = pi[7];
        let (ew, _) = w1_moments(&tm, &pi).unwrap();
        let et = hitting_mean(&tm.p, &pi).unwrap();
        assert!((et - (1.0 - pn) / pn * ew).abs() < 1e-8 * et);
        let tail = hitting_tail_until(&tm.p, &pi, 1e-18, 1_000_000).unwrap();
        let s1: f64 = tail.iter().sum();
        let s2: f64 = tail.iter().enumerate().map(|(n, t)| (2 * n + 1) as f64 * t).sum();
        assert!((s1 - et).abs() < 1e-9 * et);
        assert!((s2 - hitting_second_moment(&tm.p, &pi).unwrap()).abs() < 1e-8 * s2);
    }

    #[test]
    fn quasi_stationary_triple() {
        let (tm, pi) = geo_chain(8);
        let q = qsd(&tm).unwrap();
        assert!((q.rho - q.rho_pgf).abs() < 1e-10);
        assert!((q.mu.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let dot: f64 = q.mu.iter().zip(&q.phi).map(|(a, b)| a * b).sum();
        assert!((dot - 1.0).abs() < 1e-14);
        let mut init = q.mu.clone();
        init.push(0.0);
        let tail = hitting_tail(&tm.p, &init, 200);
        for (n, t) in tail.iter().enumerate() {
            assert!((t - q.rho.powi(n as i32)).abs() < 1e-10);
        }
        let mut g = Guard::strict();
        let u = tail_ratio_limit(&tm, &delta_one(8), &q, &mut g).unwrap();
        assert!(u >= 1.0);
        let seq = tail_ratio_sequence(&tm, &delta_one(8), 4000).unwrap();
        assert!(seq.iter().all(|x| *x >= 1.0 - 1e-12));
        assert!((seq[4000] - u).abs() < 1e-6);
        let mut prop = pi[..7].to_vec();
        let s: f64 = prop.iter().sum();
        prop.iter_mut().for_each(|x| *x /= s);
        prop.push(0.0);
        let u2 = tail_ratio_limit(&tm, &prop, &q, &mut g).unwrap();
        assert!((u2 - 1.0 / (1.0 - pi[7])).abs() < 1e-10);
    }

    #[test]
    fn exponential_bounds_dominate() {
        let (tm, _) = geo_chain(8);
        let mut g = Guard::strict();
        let b = exponential_bound(&tm, &delta_one(8), &mut g).unwrap();
        assert!((b.bound_pin_w - b.bound_pin_tau).abs() < 1e-10);
        assert!(b.observed_pin <= b.bound_pin_tau);
        assert!(b.observed_pi0 <= b.bound_pi0);
    }

    #[test]
    fn forced_mode_records_violations() {
        let (tm, pi) = geo_chain(5);
        let mut strict = Guard::strict();
        assert!(strong_stationary_time_cdf(&tm, &pi, 5, &mut strict).is_err());
        let mut forced = Guard::forced();
        assert!(strong_stationary_time_cdf(&tm, &pi, 5, &mut forced).is_ok());
        assert!(!forced.notes.is_empty());
    }

    #[test]
    fn siegmund_pollack_gaps_shrink() {
        let mut g = Guard::strict();
        let gaps =
            siegmund_pollack_gap(&DiscreteLaw::geometric(0.5).unwrap(), &[8, 16, 32], Truncation::Renormalize, &mut g)
                .unwrap();
        assert!(gaps[2] < gaps[1] && gaps[1] < gaps[0]);
    }
}
