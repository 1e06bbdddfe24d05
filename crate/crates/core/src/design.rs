//! Inverse design: from a target invariant law (or measure) to the cdf `F`
//! of the branching number solving `F_inf(j) = Phi_inf(F(j))`.

use crate::error::{invalid, LabError, Result};
use crate::laws::{DiscreteLaw, FamilyParams, PositiveMeasure};
use crate::series::{
    continue_polynomial_inverse, eval_inverse, lagrange_inverse_coeffs_capped, lambert_w, InverseCoeffs, PowerSeries,
    SeriesStatus, DEFAULT_N_MAX,
};
use crate::special::{self, Neumaier};

/// Agreement required between the series and bisection routes.
pub const ORACLE_TOL: f64 = 1e-9;
/// Values within this distance of 1 are set to 1.
pub const SNAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Series,
    Bisection,
    Both,
}

impl std::str::FromStr for Method {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "series" => Ok(Method::Series),
            "bisection" => Ok(Method::Bisection),
            "both" => Ok(Method::Both),
            other => invalid(format!("unknown method '{other}' (series, bisection, both)")),
        }
    }
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Series => "series",
            Method::Bisection => "bisection",
            Method::Both => "both",
        }
    }
}

/// Designed cdf on `0..=j_max`. Index 0 holds `F(0) = 0`.
#[derive(Debug, Clone)]
pub struct CdfTable {
    pub f: Vec<f64>,
    /// `1 - F(j)`, computed directly where the route allows it.
    pub tail: Vec<f64>,
    /// Target cdf `F_inf(j)` (partial sums for measures).
    pub f_inf: Vec<f64>,
    /// Series-route values when they were requested; `None` where the series
    /// could not be summed.
    pub series: Option<Vec<Option<f64>>>,
    /// Largest |series - bisection| over points where both exist.
    pub max_discrepancy: Option<f64>,
    /// Number of points where the inverse series needed acceleration or
    /// continuation.
    pub accelerated: usize,
    pub method: Method,
}

impl CdfTable {
    pub fn j_max(&self) -> u64 {
        self.f.len() as u64 - 1
    }

    /// `F(j) >= F_inf(j)` everywhere (with a rounding allowance).
    pub fn dominates_target(&self) -> bool {
        self.f.iter().zip(&self.f_inf).all(|(f, g)| *f >= *g - 1e-14)
    }

    /// Cdf values `F(1..=j_max)` indexed from state 1.
    pub fn states(&self) -> &[f64] {
        &self.f[1..]
    }
}

/// Solve `phi(x) = y` on `[0, 1]` for an increasing `phi` with `phi(0) = 0`.
pub fn invert_pgf_bisection(phi: impl Fn(f64) -> f64, y: f64) -> Result<f64> {
    let top = phi(1.0);
    if !(0.0..=top).contains(&y) {
        return invalid(format!("value {y} outside the range [0, {top}]"));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y == top {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (elo, ehi) = ((phi(lo) - y).abs(), (phi(hi) - y).abs());
    Ok(if elo <= ehi { lo } else { hi })
}

/// Solve `g(s) = t` on `[0, 1]` for an increasing complement
/// `g(s) = 1 - Phi(1 - s)`; the result is `1 - x` for `Phi(x) = 1 - t`.
pub fn invert_complement_bisection(g: impl Fn(f64) -> f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..2000 {
        // split geometrically while the bracket spans many decades
        let mid = if lo > 0.0 && hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else if lo == 0.0 && hi > 1e-300 {
            if hi > 1e-3 {
                0.5 * hi
            } else {
                hi * 1e-3
            }
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn snap(x: f64) -> f64 {
    if (x - 1.0).abs() < SNAP_TOL {
        1.0
    } else {
        x
    }
}

/// Snap, then check that the table is a cdf without modifying it.
fn validate(f: &mut [f64], tail: &mut [f64]) -> Result<()> {
    for (j, (x, t)) in f.iter_mut().zip(tail.iter_mut()).enumerate() {
        if !x.is_finite() || *x < -SNAP_TOL || *x > 1.0 + SNAP_TOL {
            return Err(LabError::Validation(format!("designed F({j}) = {x} is not a probability")));
        }
        if *x != 1.0 && snap(*x) == 1.0 {
            *x = 1.0;
            *t = 0.0;
        }
        if *x < 0.0 {
            *x = 0.0;
            *t = 1.0;
        }
    }
    for j in 1..f.len() {
        if f[j] < f[j - 1] {
            return Err(LabError::Validation(format!(
                "designed F decreases at j = {j}: {} < {}",
                f[j],
                f[j - 1]
            )));
        }
    }
    Ok(())
}

/// `Psi(z) = sum_k pi(k+1) z^k` to order `n_max - 1`.
fn psi_from_target(target: &DiscreteLaw, n_max: usize) -> Result<PowerSeries> {
    PowerSeries::new((0..n_max).map(|k| target.pmf(k as u64 + 1)).collect())
}

fn series_values(
    coeffs: &InverseCoeffs,
    f_inf: &[f64],
) -> (Vec<Option<f64>>, usize, Option<LabError>) {
    let mut out = vec![Some(0.0)];
    let mut accelerated = 0;
    let mut first_err = None;
    for &y in &f_inf[1..] {
        match eval_inverse(coeffs, y) {
            Ok(v) => {
                if v.status == SeriesStatus::Accelerated {
                    accelerated += 1;
                }
                out.push(Some(v.value));
            }
            Err(e) => {
                first_err.get_or_insert(e);
                out.push(None);
            }
        }
    }
    (out, accelerated, first_err)
}

/// Finite support: sum the inverse series directly where it converges and
/// continue it along the real axis elsewhere.
fn continued_values(
    target: &DiscreteLaw,
    upper: u64,
    coeffs: &InverseCoeffs,
    f_inf: &[f64],
) -> (Vec<Option<f64>>, usize, Option<LabError>) {
    let poly: Vec<f64> = (0..=upper).map(|k| target.pmf(k)).collect();
    let mut out = vec![Some(0.0)];
    let mut accelerated = 0;
    let mut first_err = None;
    for &y in &f_inf[1..] {
        let v = match eval_inverse(coeffs, y) {
            Ok(v) if v.status == SeriesStatus::Converged => Ok(v),
            _ => continue_polynomial_inverse(&poly, y),
        };
        match v {
            Ok(v) => {
                if v.status != SeriesStatus::Converged {
                    accelerated += 1;
                }
                out.push(Some(v.value));
            }
            Err(e) => {
                first_err.get_or_insert(e);
                out.push(None);
            }
        }
    }
    (out, accelerated, first_err)
}

fn assemble(
    method: Method,
    f_inf: Vec<f64>,
    bisect: Option<(Vec<f64>, Vec<f64>)>,
    series: Option<(Vec<Option<f64>>, usize, Option<LabError>)>,
) -> Result<CdfTable> {
    let (mut f, mut tail, series_col, accelerated, max_discrepancy) = match (bisect, series) {
        (Some((f, t)), None) => (f, t, None, 0, None),
        (None, Some((vals, acc, err))) => {
            if let Some(e) = err {
                return Err(e);
            }
            let f: Vec<f64> = vals.iter().map(|v| v.unwrap()).collect();
            let t = f.iter().map(|x| 1.0 - x).collect();
            (f, t, Some(vals), acc, None)
        }
        (Some((f, t)), Some((vals, acc, _))) => {
            let mut worst: f64 = 0.0;
            for (j, v) in vals.iter().enumerate() {
                if let Some(v) = v {
                    worst = worst.max((v - f[j]).abs());
                }
            }
            if worst > ORACLE_TOL {
                return Err(LabError::Validation(format!(
                    "series and bisection routes differ by {worst:e}"
                )));
            }
            (f, t, Some(vals), acc, Some(worst))
        }
        (None, None) => unreachable!(),
    };
    validate(&mut f, &mut tail)?;
    Ok(CdfTable { f, tail, f_inf, series: series_col, max_discrepancy, accelerated, method })
}

/// Design `F(1..=j_max)` for a target law on `{1, 2, ...}`.
pub fn design_branching(target: &DiscreteLaw, j_max: u64, method: Method) -> Result<CdfTable> {
    if target.lo() != 1 {
        return invalid("design targets must be supported on {1, 2, ...}");
    }
    let pi1 = target.pmf(1);
    if !(pi1 > 0.0) {
        return invalid("design needs pi(1) > 0");
    }
    let tails: Vec<f64> = (0..=j_max).map(|j| target.tail(j)).collect();
    let f_inf: Vec<f64> = tails.iter().map(|t| 1.0 - t).collect();

    let bisect = if method != Method::Series {
        let s: Vec<f64> = tails
            .iter()
            .map(|&t| invert_complement_bisection(|s| target.pgf_complement(s), t))
            .collect();
        Some((s.iter().map(|x| 1.0 - x).collect(), s))
    } else {
        None
    };
    let series = if method != Method::Bisection {
        let max_part = target.upper().map(|u| (u - 1) as usize).unwrap_or(usize::MAX);
        let psi = psi_from_target(target, DEFAULT_N_MAX)?;
        let coeffs = lagrange_inverse_coeffs_capped(&psi, DEFAULT_N_MAX, max_part)?;
        match target.upper() {
            Some(u) => Some(continued_values(target, u, &coeffs, &f_inf)),
            None => Some(series_values(&coeffs, &f_inf)),
        }
    } else {
        None
    };
    assemble(method, f_inf, bisect, series)
}

/// Design `F_(N)(1..=N)` for a probability vector on `{1..N}` (`pi_n[0]` is
/// the mass at 1). Both routes are always run; bisection is returned.
pub fn design_branching_finite(pi_n: &[f64]) -> Result<CdfTable> {
    let n = pi_n.len();
    if n == 0 {
        return invalid("empty target");
    }
    let total = special::compensated_sum(pi_n.iter().copied());
    if (total - 1.0).abs() > 1e-10 || pi_n.iter().any(|x| !(*x >= 0.0)) {
        return invalid(format!("target must be a probability vector (sum {total})"));
    }
    if !(pi_n[0] > 0.0) {
        return invalid("design needs pi(1) > 0");
    }
    let law = DiscreteLaw::finite(1, pi_n.to_vec())?;
    let mut table = design_branching(&law, n as u64, Method::Both)?;
    let last = n;
    if (table.f[last] - 1.0).abs() > 1e-10 {
        return Err(LabError::Validation(format!("F_(N)(N) = {} differs from 1", table.f[last])));
    }
    table.f[last] = 1.0;
    table.tail[last] = 0.0;
    Ok(table)
}

/// Design from a positive, possibly non-summable measure. Only the ratios
/// `delta(j)/delta(1)` matter.
pub fn design_from_measure(delta: &PositiveMeasure, j_max: u64, method: Method) -> Result<CdfTable> {
    if let PositiveMeasure::Law(l) = delta {
        return design_branching(l, j_max, method);
    }
    let d1 = delta.delta(1);
    if !(d1 > 0.0) {
        return invalid("design needs delta(1) > 0");
    }
    let f_inf: Vec<f64> = (0..=j_max).map(|j| delta.partial_sum(j)).collect();
    let total = if delta.summable() { Some(delta.partial_sum(u64::MAX >> 1).min(f64::MAX)) } else { None };
    let pgf = |z: f64| -> f64 {
        if z >= 1.0 {
            return total.unwrap_or(f64::INFINITY);
        }
        delta.pgf(z).unwrap_or(f64::INFINITY)
    };
    let bisect = if method != Method::Series {
        let mut f = Vec::with_capacity(f_inf.len());
        for &y in &f_inf {
            let x = if total.is_some_and(|t| y >= t) {
                1.0
            } else {
                bisect_unbounded(&pgf, y)
            };
            f.push(x);
        }
        let t = f.iter().map(|x| 1.0 - x).collect();
        Some((f, t))
    } else {
        None
    };
    let series = if method != Method::Bisection {
        let psi = PowerSeries::new((0..DEFAULT_N_MAX).map(|k| delta.delta(k as u64 + 1) / d1).collect())?;
        let coeffs = lagrange_inverse_coeffs_capped(&psi, DEFAULT_N_MAX, usize::MAX)?;
        let scaled: Vec<f64> = f_inf.iter().map(|y| y / d1).collect();
        Some(series_values(&coeffs, &scaled))
    } else {
        None
    };
    let table = assemble(method, f_inf, bisect, series)?;
    if let Some(t) = total {
        if table.f_inf.last().is_some_and(|y| *y >= t) && *table.f.last().unwrap() != 1.0 {
            return Err(LabError::Validation("designed F does not reach 1".into()));
        }
    }
    Ok(table)
}

fn bisect_unbounded(pgf: &impl Fn(f64) -> f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pgf(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Families with an explicit inverse.
pub const CLOSED_FORMS: &[&str] = &[
    "geometric",
    "sibuya",
    "negbin-positive",
    "fisher-log",
    "poisson-shifted",
    "poisson-positive",
    "counting",
    "linear",
    "harmonic",
];

/// Direct evaluation of `F(0..=j_max)` from the explicit formulas.
pub fn closed_form_design(name: &str, params: &FamilyParams, j_max: u64) -> Result<Vec<f64>> {
    let mut f = vec![0.0; j_max as usize + 1];
    match name {
        "geometric" => {
            let q = 1.0 - params.prob()?;
            for (j, v) in f.iter_mut().enumerate().skip(1) {
                *v = (1.0 - q.powi(j as i32)) / (1.0 - q.powi(j as i32 + 1));
            }
        }
        "sibuya" => {
            let a = params.alpha.ok_or_else(|| LabError::InvalidArgument("missing alpha".into()))?;
            DiscreteLaw::sibuya(a)?;
            // F_inf(j) = alpha sum_{k<=j} [1-alpha]_{k-1}/k!
            let mut pk = a;
            let mut acc = Neumaier::default();
            for (j, v) in f.iter_mut().enumerate().skip(1) {
                acc.add(pk);
                *v = 1.0 - (1.0 - acc.value()).max(0.0).powf(1.0 / a);
                pk *= (j as f64 - a) / (j as f64 + 1.0);
            }
        }
        "negbin-positive" => {
            let a = params.alpha.ok_or_else(|| LabError::InvalidArgument("missing alpha".into()))?;
            let p = params.prob()?;
            DiscreteLaw::negbin_positive(a, p)?;
            let q = 1.0 - p;
            // 1 + sum_{k<=j} [alpha]_k q^k / k!
            let mut term = 1.0;
            let mut acc = Neumaier::default();
            acc.add(1.0);
            for (k, v) in f.iter_mut().enumerate().skip(1) {
                term *= (a + k as f64 - 1.0) / k as f64 * q;
                acc.add(term);
                *v = (1.0 - acc.value().powf(-1.0 / a)) / q;
            }
        }
        "fisher-log" => {
            let p = params.prob()?;
            DiscreteLaw::fisher_log(p)?;
            let mut acc = Neumaier::default();
            let mut pk = 1.0;
            for (k, v) in f.iter_mut().enumerate().skip(1) {
                pk *= p;
                acc.add(pk / k as f64);
                *v = -(-acc.value()).exp_m1() / p;
            }
        }
        "poisson-shifted" => {
            let l = params.lambda.ok_or_else(|| LabError::InvalidArgument("missing lambda".into()))?;
            DiscreteLaw::poisson_shifted(l)?;
            // W_lambda(sum_{k<j} lambda^k/k!) = W(lambda S)/lambda
            let mut term = 1.0;
            let mut acc = Neumaier::default();
            for (j, v) in f.iter_mut().enumerate().skip(1) {
                acc.add(term);
                term *= l / j as f64;
                *v = lambert_w(l * acc.value())? / l;
            }
        }
        "poisson-positive" => {
            let l = params.lambda.ok_or_else(|| LabError::InvalidArgument("missing lambda".into()))?;
            let law = DiscreteLaw::poisson_positive(l)?;
            for (j, v) in f.iter_mut().enumerate().skip(1) {
                *v = (law.cdf(j as u64) * l.exp_m1()).ln_1p() / l;
            }
        }
        "counting" => {
            for (j, v) in f.iter_mut().enumerate().skip(1) {
                *v = j as f64 / (1.0 + j as f64);
            }
        }
        "linear" => {
            for (j, v) in f.iter_mut().enumerate().skip(1) {
                let jf = j as f64;
                let m = jf * (jf + 1.0);
                *v = (m + 1.0 - (1.0 + 2.0 * m).sqrt()) / m;
            }
        }
        "harmonic" => {
            for (j, v) in f.iter_mut().enumerate().skip(1) {
                *v = -(-special::harmonic(j as u64)).exp_m1();
            }
        }
        other => {
            return invalid(format!(
                "no closed-form design for '{other}' (known: {})",
                CLOSED_FORMS.join(", ")
            ))
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{make_target, Target};

    fn params_p(p: f64) -> FamilyParams {
        FamilyParams { p: Some(p), ..Default::default() }
    }

    #[test]
    fn bisection_examples() {
        let p = 0.4;
        let q: f64 = 0.6;
        let phi = |z: f64| p * z / (1.0 - q * z);
        assert_eq!(invert_pgf_bisection(phi, 0.0).unwrap(), 0.0);
        for j in 1..8 {
            let y = 1.0 - q.powi(j);
            let x = invert_pgf_bisection(phi, y).unwrap();
            assert!((x - (1.0 - q.powi(j)) / (1.0 - q.powi(j + 1))).abs() < 1e-15);
            assert!((phi(x) - y).abs() <= 1e-14);
        }
        assert!(invert_pgf_bisection(phi, 1.5).is_err());
        let sib = DiscreteLaw::sibuya(0.5).unwrap();
        let y = sib.cdf(3);
        let x = invert_pgf_bisection(|z| sib.pgf(z), y).unwrap();
        assert!((x - (1.0 - (1.0 - y).powi(2))).abs() < 1e-14);
    }

    #[test]
    fn geometric_design_both_routes() {
        for &p in &[0.5, 0.7, 0.2] {
            let law = DiscreteLaw::geometric(p).unwrap();
            let t = design_branching(&law, 50, Method::Both).unwrap();
            let cf = closed_form_design("geometric", &params_p(p), 50).unwrap();
            for j in 0..=50 {
                assert!((t.f[j] - cf[j]).abs() < 1e-12, "p={p} j={j}");
            }
            assert!(t.max_discrepancy.unwrap() < 1e-10);
            assert!(t.dominates_target());
        }
    }

    #[test]
    fn point_mass_design() {
        let t = design_branching(&DiscreteLaw::point_mass(), 5, Method::Both).unwrap();
        assert!(t.f[1..].iter().all(|&x| x == 1.0));
    }

    #[test]
    fn poisson_positive_design() {
        let l = 1.3;
        let params = FamilyParams { lambda: Some(l), ..Default::default() };
        let law = match make_target("poisson-positive", &params).unwrap() {
            Target::Law(l) => l,
            _ => unreachable!(),
        };
        let t = design_branching(&law, 30, Method::Both).unwrap();
        let cf = closed_form_design("poisson-positive", &params, 30).unwrap();
        for j in 1..=30 {
            assert!((t.f[j] - cf[j]).abs() < 1e-12, "j={j}");
        }
    }

    #[test]
    fn other_closed_forms_agree_with_bisection() {
        let cases: Vec<(&str, FamilyParams)> = vec![
            ("negbin-positive", FamilyParams { alpha: Some(2.5), p: Some(0.4), ..Default::default() }),
            ("fisher-log", params_p(0.7)),
            ("poisson-shifted", FamilyParams { lambda: Some(2.0), ..Default::default() }),
            ("sibuya", FamilyParams { alpha: Some(0.3), ..Default::default() }),
        ];
        for (name, params) in cases {
            let law = match make_target(name, &params).unwrap() {
                Target::Law(l) => l,
                _ => unreachable!(),
            };
            let t = design_branching(&law, 40, Method::Bisection).unwrap();
            let cf = closed_form_design(name, &params, 40).unwrap();
            for j in 1..=40 {
                assert!((t.f[j] - cf[j]).abs() < 1e-12, "{name} j={j}: {} vs {}", t.f[j], cf[j]);
            }
            assert!(t.dominates_target(), "{name}");
        }
    }

    #[test]
    fn closed_form_spot_values() {
        let f = closed_form_design("geometric", &params_p(0.3), 4).unwrap();
        assert!((f[4] - (1.0 - 0.7f64.powi(4)) / (1.0 - 0.7f64.powi(5))).abs() < 1e-15);
        let s = closed_form_design("sibuya", &FamilyParams { alpha: Some(0.5), ..Default::default() }, 1)
            .unwrap();
        assert!((s[1] - 0.75).abs() < 1e-15);
        let l = 1.5;
        let ps = closed_form_design("poisson-shifted", &FamilyParams { lambda: Some(l), ..Default::default() }, 60)
            .unwrap();
        assert!((ps[60] - 1.0).abs() < 1e-14);
        assert!(closed_form_design("zipf", &FamilyParams::default(), 3).is_err());
    }

    #[test]
    fn measure_designs() {
        for (m, name) in [
            (PositiveMeasure::Harmonic, "harmonic"),
            (PositiveMeasure::Counting, "counting"),
            (PositiveMeasure::Linear, "linear"),
        ] {
            let t = design_from_measure(&m, 200, Method::Bisection).unwrap();
            let cf = closed_form_design(name, &FamilyParams::default(), 200).unwrap();
            for j in 1..=200 {
                assert!((t.f[j] - cf[j]).abs() < 1e-12, "{name} j={j}: {} vs {}", t.f[j], cf[j]);
            }
        }
        let t = design_from_measure(&PositiveMeasure::Harmonic, 30, Method::Both).unwrap();
        assert!(t.max_discrepancy.unwrap() < 1e-9);
        assert!(design_from_measure(&PositiveMeasure::Table(vec![0.0, 1.0]), 3, Method::Both).is_err());
    }

    #[test]
    fn finite_binomial_design() {
        let n = 6u64;
        let p: f64 = 0.35;
        let q = 1.0 - p;
        let law = DiscreteLaw::binomial_positive(n, p).unwrap();
        let pi: Vec<f64> = (1..=n).map(|k| law.pmf(k)).collect();
        let t = design_branching_finite(&pi).unwrap();
        let mut acc = 1.0;
        for j in 1..=n {
            acc += special::ln_binomial(n as f64, j as f64).exp() * (p / q).powi(j as i32);
            let expect = (q / p) * (acc.powf(1.0 / n as f64) - 1.0);
            assert!((t.f[j as usize] - expect).abs() < 1e-12, "j={j}");
        }
        assert_eq!(t.f[n as usize], 1.0);
        let one = design_branching_finite(&[1.0]).unwrap();
        assert_eq!(one.f, vec![0.0, 1.0]);
    }

    #[test]
    fn restricted_geometric_routes_agree() {
        let q: f64 = 0.5;
        let n = 6;
        let norm = 1.0 - q.powi(n);
        let pi: Vec<f64> = (0..n).map(|k| (1.0 - q) * q.powi(k) / norm).collect();
        let t = design_branching_finite(&pi).unwrap();
        assert!(t.max_discrepancy.unwrap() <= 1e-10);
        assert!(t.series.as_ref().unwrap().iter().all(|v| v.is_some()));
    }

    #[test]
    fn monotone_violation_is_an_error() {
        let mut f = vec![0.0, 0.5, 0.4, 1.0];
        let mut t = vec![1.0, 0.5, 0.6, 0.0];
        assert!(validate(&mut f, &mut t).is_err());
        let mut f = vec![0.0, 0.5, 1.0 - 1e-13];
        let mut t = vec![1.0, 0.5, 1e-13];
        validate(&mut f, &mut t).unwrap();
        assert_eq!(f[2], 1.0);
    }
}
