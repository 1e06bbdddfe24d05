//! Truncated formal power series and the Lagrange-inversion engine used to
//! invert probability generating functions.

use crate::error::{LabError, Result};
use crate::special::{compensated_sum, rising, sorted_sum};

/// Largest `n - 1` for which partitions are enumerated explicitly.
pub const PARTITION_CAP: usize = 25;
/// Default number of inverse coefficients.
pub const DEFAULT_N_MAX: usize = 200;

/// Truncated real power series; `coeffs[k]` is the coefficient of `z^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    coeffs: Vec<f64>,
}

impl PowerSeries {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(LabError::Series("a series needs at least one coefficient".into()));
        }
        Ok(PowerSeries { coeffs })
    }

    /// Series of `value` with all higher coefficients zero up to `order`.
    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        PowerSeries { coeffs }
    }

    /// Build from a coefficient function on `0..=order`.
    pub fn from_fn(order: usize, f: impl Fn(usize) -> f64) -> Self {
        PowerSeries { coeffs: (0..=order).map(f).collect() }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `z^k`; asking beyond the truncation order is an error.
    pub fn coeff(&self, k: usize) -> Result<f64> {
        self.coeffs.get(k).copied().ok_or_else(|| {
            LabError::Series(format!("coefficient {k} beyond truncation order {}", self.order()))
        })
    }

    pub fn truncate(&self, order: usize) -> Result<Self> {
        check_order(self, order)?;
        Ok(PowerSeries { coeffs: self.coeffs[..=order].to_vec() })
    }

    pub fn scale(&self, c: f64) -> Self {
        PowerSeries { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }
}

fn check_order(a: &PowerSeries, order: usize) -> Result<()> {
    if order > a.order() {
        return Err(LabError::Series(format!(
            "requested order {order} exceeds available order {}",
            a.order()
        )));
    }
    Ok(())
}

/// Cauchy product truncated at `order`.
pub fn fps_mul(a: &PowerSeries, b: &PowerSeries, order: usize) -> Result<PowerSeries> {
    check_order(a, order)?;
    check_order(b, order)?;
    Ok(mul_unchecked(&a.coeffs, &b.coeffs, order))
}

fn mul_unchecked(a: &[f64], b: &[f64], order: usize) -> PowerSeries {
    let coeffs = (0..=order)
        .map(|k| compensated_sum((0..=k).map(|i| a[i] * b[k - i])))
        .collect();
    PowerSeries { coeffs }
}

/// Multiplicative inverse `1/a`; needs a nonzero constant term.
pub fn fps_reciprocal(a: &PowerSeries, order: usize) -> Result<PowerSeries> {
    check_order(a, order)?;
    let a0 = a.coeffs[0];
    if a0 == 0.0 {
        return Err(LabError::Series("reciprocal of a series with zero constant term".into()));
    }
    let mut b = vec![0.0; order + 1];
    b[0] = 1.0 / a0;
    for k in 1..=order {
        let s = compensated_sum((1..=k).map(|i| a.coeffs[i] * b[k - i]));
        b[k] = -s / a0;
    }
    Ok(PowerSeries { coeffs: b })
}

pub fn fps_log(a: &PowerSeries, order: usize) -> Result<PowerSeries> {
    check_order(a, order)?;
    let a0 = a.coeffs[0];
    if !(a0 > 0.0) {
        return Err(LabError::Series(format!("log needs a positive constant term, got {a0}")));
    }
    let mut b = vec![0.0; order + 1];
    b[0] = a0.ln();
    for k in 1..=order {
        let s = compensated_sum((1..k).map(|i| i as f64 * b[i] * a.coeffs[k - i]));
        b[k] = (a.coeffs[k] - s / k as f64) / a0;
    }
    Ok(PowerSeries { coeffs: b })
}

pub fn fps_exp(a: &PowerSeries, order: usize) -> Result<PowerSeries> {
    check_order(a, order)?;
    if a.coeffs[0] != 0.0 {
        return Err(LabError::Series(format!(
            "exp needs a zero constant term, got {}",
            a.coeffs[0]
        )));
    }
    let mut b = vec![0.0; order + 1];
    b[0] = 1.0;
    for k in 1..=order {
        let s = compensated_sum((1..=k).map(|i| i as f64 * a.coeffs[i] * b[k - i]));
        b[k] = s / k as f64;
    }
    Ok(PowerSeries { coeffs: b })
}

/// `a^r`. Integer exponents use repeated multiplication (of `1/a` when `r < 0`),
/// other exponents go through `exp(r log a)`.
pub fn fps_pow(a: &PowerSeries, r: f64, order: usize) -> Result<PowerSeries> {
    check_order(a, order)?;
    if r.fract() == 0.0 && r.abs() <= 1e6 {
        let n = r.abs() as u64;
        let base = if r < 0.0 { fps_reciprocal(a, order)? } else { a.truncate(order)? };
        let mut acc = PowerSeries::constant(1.0, order);
        let mut sq = base;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul_unchecked(&acc.coeffs, &sq.coeffs, order);
            }
            e >>= 1;
            if e > 0 {
                sq = mul_unchecked(&sq.coeffs, &sq.coeffs, order);
            }
        }
        return Ok(acc);
    }
    let a0 = a.coeffs[0];
    let mut l = fps_log(a, order)?;
    l.coeffs[0] = 0.0;
    let e = fps_exp(&l.scale(r), order)?;
    Ok(e.scale(a0.powf(r)))
}

/// Composition `a(b(z))` for `b` with zero constant term.
pub fn fps_compose(a: &PowerSeries, b: &PowerSeries, order: usize) -> Result<PowerSeries> {
    check_order(a, order)?;
    check_order(b, order)?;
    if b.coeffs[0] != 0.0 {
        return Err(LabError::Series("inner series of a composition must vanish at 0".into()));
    }
    let mut out = vec![0.0; order + 1];
    let mut power = PowerSeries::constant(1.0, order);
    for k in 0..=order {
        let ak = a.coeffs[k];
        if ak != 0.0 {
            for (o, p) in out.iter_mut().zip(power.coeffs.iter()) {
                *o += ak * p;
            }
        }
        if k < order {
            power = mul_unchecked(&power.coeffs, &b.coeffs, order);
        }
    }
    Ok(PowerSeries { coeffs: out })
}

/// Coefficientwise magnitude of `a(b(z))` computed with `|a_k|` and `|b_k|`;
/// the floating-point scale against which composition residuals are judged.
pub fn composition_scale(a: &PowerSeries, b: &PowerSeries, order: usize) -> Vec<f64> {
    let abs = |s: &PowerSeries| PowerSeries { coeffs: s.coeffs.iter().map(|c| c.abs()).collect() };
    fps_compose(&abs(a), &abs(b), order).map(|s| s.coeffs).unwrap_or_default()
}

/// Enumerate multisets of parts in `1..=max_part` summing to `total`, calling
/// `visit(k, weight)` with the number of parts and `prod r_m^{k_m} / k_m!`.
fn for_each_partition(
    ratios: &[f64],
    total: usize,
    max_part: usize,
    visit: &mut dyn FnMut(usize, f64),
) {
    fn rec(
        ratios: &[f64],
        rem: usize,
        part: usize,
        parts: usize,
        weight: f64,
        visit: &mut dyn FnMut(usize, f64),
    ) {
        if rem == 0 {
            visit(parts, weight);
            return;
        }
        if part == 0 {
            return;
        }
        let r = ratios.get(part).copied().unwrap_or(0.0);
        // k_m = 0
        rec(ratios, rem, part - 1, parts, weight, visit);
        if r == 0.0 {
            return;
        }
        let mut w = weight;
        let mut km = 0usize;
        let mut used = 0usize;
        while used + part <= rem {
            km += 1;
            used += part;
            w *= r / km as f64;
            rec(ratios, rem - used, part - 1, parts + km, w, visit);
        }
    }
    let top = max_part.min(total);
    rec(ratios, total, top, 0, 1.0, visit);
}

fn star_coeffs_all(ratios: &[f64], n: usize, max_part: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(LabError::InvalidArgument("star sums need n >= 1".into()));
    }
    if n - 1 > PARTITION_CAP {
        return Err(LabError::Series(format!(
            "partition enumeration capped at n-1 <= {PARTITION_CAP}, got {}",
            n - 1
        )));
    }
    let mut terms: Vec<Vec<f64>> = vec![Vec::new(); n];
    for_each_partition(ratios, n - 1, max_part, &mut |k, w| terms[k].push(w));
    Ok(terms.into_iter().map(sorted_sum).collect())
}

/// Star sum `C_{n-1,k}`: over `k_m >= 0` with `sum k_m = k` and `sum m k_m = n-1`,
/// parts `m <= max_part`, of `prod (pi(m+1)/pi(1))^{k_m} / k_m!`.
/// `pi_ratios[m]` holds `pi(m+1)/pi(1)`; index 0 is ignored and missing
/// entries count as zero.
pub fn star_coeff(pi_ratios: &[f64], n: usize, k: usize, max_part: usize) -> Result<f64> {
    if n >= 1 && k > n - 1 {
        return Err(LabError::InvalidArgument(format!("k = {k} exceeds n - 1 = {}", n - 1)));
    }
    if pi_ratios.iter().skip(1).any(|r| *r < 0.0) {
        return Err(LabError::InvalidArgument("ratios must be nonnegative".into()));
    }
    Ok(star_coeffs_all(pi_ratios, n, max_part)?[k])
}

/// Inverse coefficients of `Phi(z) = z Psi(z)`; index 0 of each vector is unused.
#[derive(Debug, Clone)]
pub struct InverseCoeffs {
    pub phi: Vec<f64>,
    pub h: Vec<f64>,
    /// Rounding-error bound on each `h_n`.
    pub noise: Vec<f64>,
    pub pi1: f64,
    /// Largest `n` compared against the partition route.
    pub checked_upto: usize,
    /// Largest scaled discrepancy seen between the two routes.
    pub max_discrepancy: f64,
}

impl InverseCoeffs {
    pub fn n_max(&self) -> usize {
        self.phi.len() - 1
    }
}

/// `phi_n` from the partition route:
/// `(pi1^{-n}/n) sum_k (-1)^k [n]_k C_{n-1,k}`, with the absolute sum of terms.
pub fn partition_route_phi(ratios: &[f64], pi1: f64, n: usize, max_part: usize) -> Result<(f64, f64)> {
    let c = star_coeffs_all(ratios, n, max_part)?;
    let mut terms = Vec::with_capacity(n);
    for (k, ck) in c.iter().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        terms.push(sign * rising(n as f64, k as u64) * ck);
    }
    let abs: f64 = terms.iter().map(|t| t.abs()).sum();
    let scale = pi1.powi(-(n as i32)) / n as f64;
    Ok((sorted_sum(terms) * scale, abs * scale))
}

/// `(phi, h, noise)` from powers of `pi1/Psi`, whose constant term is 1.
fn fps_route(psi: &PowerSeries, pi1: f64, n_max: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let order = n_max - 1;
    let recip = fps_reciprocal(psi, order)?.scale(pi1);
    let abs_recip: Vec<f64> = recip.coeffs.iter().map(|c| c.abs()).collect();
    // each coefficient of 1/Psi carries an absolute error of about eps
    let delta = f64::EPSILON * abs_recip.iter().fold(0.0f64, |m, c| m.max(*c));
    let mut phi = vec![0.0; n_max + 1];
    let mut h = vec![0.0; n_max + 1];
    let mut noise = vec![0.0; n_max + 1];
    let mut power = recip.clone();
    let mut abs_prev = PowerSeries::constant(1.0, order);
    let mut abs_power = PowerSeries { coeffs: abs_recip.clone() };
    for n in 1..=n_max {
        h[n] = power.coeffs[n - 1] / n as f64;
        let spread: f64 = abs_prev.coeffs[..n].iter().sum();
        noise[n] = delta * spread + 4.0 * f64::EPSILON * abs_power.coeffs[n - 1];
        if n < n_max {
            power = mul_unchecked(&power.coeffs, &recip.coeffs, order);
            abs_prev = abs_power;
            abs_power = mul_unchecked(&abs_prev.coeffs, &abs_recip, order);
        }
    }
    h[1] = 1.0;
    noise[1] = 0.0;
    phi[1] = 1.0 / pi1;
    for n in 2..=n_max {
        phi[n] = h[n] * pi1.powi(-(n as i32));
    }

    Ok((phi, h, noise))
}

/// Coefficients `phi_n = [z^n] Phi^{-1}(z) = (1/n) [z^{n-1}] Psi^{-n}` for
/// `n = 1..=n_max`, with a partition-route cross-check for small `n`.
pub fn lagrange_inverse_coeffs(psi: &PowerSeries, n_max: usize) -> Result<InverseCoeffs> {
    lagrange_inverse_coeffs_capped(psi, n_max, usize::MAX)
}

/// As [`lagrange_inverse_coeffs`] with star-sum parts limited to `max_part`
/// (finite support on `{1..N}` uses `N - 1`).
pub fn lagrange_inverse_coeffs_capped(
    psi: &PowerSeries,
    n_max: usize,
    max_part: usize,
) -> Result<InverseCoeffs> {
    if n_max == 0 {
        return Err(LabError::InvalidArgument("n_max must be at least 1".into()));
    }
    let pi1 = psi.coeff(0)?;
    if !(pi1 > 0.0) {
        return Err(LabError::Series("Psi must have a positive constant term".into()));
    }
    let order = n_max - 1;
    check_order(psi, order)?;
    let (phi, h, noise) = fps_route(psi, pi1, n_max)?;

    let ratios: Vec<f64> = psi.coeffs.iter().map(|c| c / pi1).collect();
    let checked_upto = n_max.min(PARTITION_CAP + 1);
    let mut max_discrepancy: f64 = 0.0;
    for n in 1..=checked_upto {
        let (alt, abs) = partition_route_phi(&ratios, pi1, n, max_part)?;
        let tol = 1e-9 * alt.abs().max(phi[n].abs())
            + 1e3 * f64::EPSILON * abs
            + 10.0 * noise[n] * pi1.powi(-(n as i32));
        let diff = (alt - phi[n]).abs();
        let scaled = if tol > 0.0 { diff / tol } else { 0.0 };
        max_discrepancy = max_discrepancy.max(scaled);
        if diff > tol {
            return Err(LabError::Series(format!(
                "series and partition routes disagree at n = {n}: {} vs {alt}",
                phi[n]
            )));
        }
    }
    Ok(InverseCoeffs { phi, h, noise, pi1, checked_upto, max_discrepancy })
}

/// How a series value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesStatus {
    /// Terms fell below the cutoff.
    Converged,
    /// Partial sums were summed by the epsilon algorithm.
    Accelerated,
    /// The series was re-expanded around intermediate points (`terms` counts
    /// the expansions).
    Continued,
}

#[derive(Debug, Clone, Copy)]
pub struct SeriesValue {
    pub value: f64,
    pub status: SeriesStatus,
    pub terms: usize,
}

/// Wynn's epsilon algorithm on a sequence of partial sums; returns the
/// entry of the highest even column.
pub fn wynn_epsilon(s: &[f64]) -> f64 {
    let m = s.len();
    if m == 0 {
        return f64::NAN;
    }
    let mut prev = vec![0.0; m + 1];
    let mut cur: Vec<f64> = s.to_vec();
    let mut best = s[m - 1];
    let mut col = 0usize;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        let mut degenerate = false;
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            if !d.is_finite() || d.abs() <= 4.0 * f64::EPSILON * cur[i].abs().max(cur[i + 1].abs()) {
                degenerate = true;
                break;
            }
            next.push(prev[i + 1] + 1.0 / d);
        }
        if degenerate {
            break;
        }
        col += 1;
        prev = cur;
        cur = next;
        if col.is_multiple_of(2) {
            let v = *cur.last().unwrap();
            if v.is_finite() {
                best = v;
            }
        }
    }
    best
}

/// Sum `sum_{n>=1} c_n x^n`. Terms are added until two consecutive ones drop
/// below `1e-15`; if they instead grow for 10 consecutive indices, or the
/// coefficients run out first, the partial sums are handed to the epsilon
/// algorithm and accepted only if successive estimates settle.
pub fn sum_power_series(c: &[f64], x: f64) -> Result<SeriesValue> {
    sum_power_series_noisy(c, &vec![0.0; c.len()], x)
}

/// As [`sum_power_series`], where `noise[n]` bounds the error of `c[n]`.
/// Coefficients are used only while the propagated error stays below
/// `1e-12` of the largest partial sum.
pub fn sum_power_series_noisy(c: &[f64], noise: &[f64], x: f64) -> Result<SeriesValue> {
    let mut partial = Vec::with_capacity(c.len());
    let mut acc = crate::special::Neumaier::default();
    let mut xn = 1.0;
    let mut small_run = 0;
    let mut grow_run = 0;
    let mut last_abs = f64::INFINITY;
    let mut err = 0.0;
    let mut size: f64 = 0.0;
    for (n, &cn) in c.iter().enumerate().skip(1) {
        xn *= x;
        err += noise.get(n).copied().unwrap_or(0.0) * xn.abs();
        let t = cn * xn;
        if err > 1e-12 * size.max(t.abs()) && n > 1 {
            break;
        }
        acc.add(t);
        partial.push(acc.value());
        size = size.max(acc.value().abs());
        let a = t.abs();
        if a < 1e-15 {
            small_run += 1;
            if small_run >= 2 {
                return Ok(SeriesValue { value: acc.value(), status: SeriesStatus::Converged, terms: n });
            }
        } else {
            small_run = 0;
        }
        if a > last_abs && a >= 1e-15 {
            grow_run += 1;
        } else if a < last_abs {
            grow_run = 0;
        }
        last_abs = a;
        if grow_run >= 10 {
            break;
        }
    }
    accelerate(&partial)
}

/// Epsilon-algorithm limit over the usable prefix. The value is taken at the
/// first pair of successive estimates agreeing to `1e-13`; every later
/// estimate must stay within `1e-7` of it, which rejects prefixes that only
/// look summable.
fn accelerate(partial: &[f64]) -> Result<SeriesValue> {
    let usable = partial.iter().position(|p| p.abs() > 1e12).unwrap_or(partial.len());
    let mut est = Vec::new();
    let mut m = 3;
    while m <= usable {
        est.push((m, wynn_epsilon(&partial[..m])));
        m += 2;
    }
    if est.len() >= 3 {
        for i in 1..est.len() {
            let (m, e) = est[i];
            let scale = e.abs().max(1.0);
            if e.is_finite() && (e - est[i - 1].1).abs() <= 1e-13 * scale {
                if est[i + 1..].iter().all(|(_, x)| (x - e).abs() <= 1e-7 * scale) {
                    return Ok(SeriesValue { value: e, status: SeriesStatus::Accelerated, terms: m });
                }
                break;
            }
        }
    }
    Err(LabError::Series("inverse series diverges and could not be summed".into()))
}

/// Evaluate `Phi^{-1}(y) = sum_n h_n (y/pi1)^n`.
pub fn eval_inverse(coeffs: &InverseCoeffs, y: f64) -> Result<SeriesValue> {
    sum_power_series_noisy(&coeffs.h, &coeffs.noise, y / coeffs.pi1)
}

/// Coefficients of `p(z + u)` in powers of `u`.
fn taylor_shift(p: &[f64], z: f64) -> Vec<f64> {
    let mut b = p.to_vec();
    let n = b.len();
    for i in 0..n {
        for k in (i + 1..n).rev() {
            b[k - 1] += z * b[k];
        }
    }
    b
}

const CONTINUATION_TERMS: usize = 48;

/// `Phi^{-1}(y)` for a polynomial `Phi` (`poly[k]` multiplies `z^k`,
/// `poly[0] = 0`, `poly[1] > 0`), continuing the inverse series along
/// `[0, y]`: at each point the Lagrange coefficients of the shifted
/// polynomial are recomputed and the step is kept inside half the radius
/// estimated from their growth.
pub fn continue_polynomial_inverse(poly: &[f64], y: f64) -> Result<SeriesValue> {
    if poly.len() < 2 || poly[0] != 0.0 || !(poly[1] > 0.0) {
        return Err(LabError::Series("polynomial needs p(0) = 0 and p'(0) > 0".into()));
    }
    let mut z = 0.0;
    let mut done = 0.0;
    let mut steps = 0;
    while done < y {
        steps += 1;
        if steps > 10_000 {
            return Err(LabError::Series("series continuation did not reach its target".into()));
        }
        let b = taylor_shift(poly, z);
        let b1 = b[1];
        if !(b1 > 0.0) {
            return Err(LabError::Series(format!("inverse is singular at z = {z}")));
        }
        let psi = PowerSeries::from_fn(CONTINUATION_TERMS - 1, |k| b.get(k + 1).copied().unwrap_or(0.0));
        let (_, h, _) = fps_route(&psi, b1, CONTINUATION_TERMS)?;
        let growth = (CONTINUATION_TERMS / 2..=CONTINUATION_TERMS)
            .map(|n| h[n].abs().powf(1.0 / n as f64))
            .fold(0.0f64, f64::max);
        let mut step = y - done;
        if growth > 0.0 {
            step = step.min(0.5 * b1 / growth);
        }
        let last = loop {
            let x = step / b1;
            let mut acc = crate::special::Neumaier::default();
            let mut xn = 1.0;
            let mut tail = 0.0f64;
            for (n, hn) in h.iter().enumerate().skip(1) {
                xn *= x;
                acc.add(hn * xn);
                if n + 4 > CONTINUATION_TERMS {
                    tail = tail.max((hn * xn).abs());
                }
            }
            if tail <= 1e-17 * acc.value().abs().max(1e-300) || step < 1e-300 {
                break acc.value();
            }
            step *= 0.5;
        };
        z += last;
        if step >= y - done {
            done = y;
        } else {
            done += step;
        }
    }
    Ok(SeriesValue { value: z, status: SeriesStatus::Continued, terms: steps })
}

/// Principal branch of Lambert W for `x >= 0`, by Newton's method started at
/// `log(1 + x)`.
pub fn lambert_w(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(LabError::InvalidArgument(format!("lambert_w needs a finite x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = x.ln_1p();
    let big = x > std::f64::consts::E;
    let lx = x.ln();
    for _ in 0..100 {
        let step = if big {
            // w + ln w = ln x
            let g = w + w.ln() - lx;
            g / (1.0 + 1.0 / w)
        } else {
            let ew = w.exp();
            (w * ew - x) / (ew * (w + 1.0))
        };
        let next = w - step;
        if (next - w).abs() <= 4.0 * f64::EPSILON * next.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        w = next;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(v: &[f64]) -> PowerSeries {
        PowerSeries::new(v.to_vec()).unwrap()
    }

    #[test]
    fn coefficient_beyond_order_is_error() {
        let a = ps(&[1.0, 2.0]);
        assert!(a.coeff(2).is_err());
        assert_eq!(a.coeff(1).unwrap(), 2.0);
    }

    #[test]
    fn mul_examples() {
        let c = fps_mul(&ps(&[1.0, 1.0, 0.0]), &ps(&[1.0, -1.0, 0.0]), 2).unwrap();
        assert_eq!(c.coeffs(), &[1.0, 0.0, -1.0]);
        let a = ps(&[0.3, -1.2, 4.0]);
        assert_eq!(fps_mul(&a, &PowerSeries::constant(1.0, 2), 2).unwrap(), a);
        let g = PowerSeries::from_fn(3, |k| 0.5 * 0.5f64.powi(k as i32));
        let sq = fps_mul(&g, &g, 3).unwrap();
        for (x, y) in sq.coeffs().iter().zip([0.25, 0.25, 0.1875, 0.125]) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(fps_mul(&ps(&[1.0]), &ps(&[1.0, 2.0]), 1).is_err());
    }

    #[test]
    fn log_exp_pow() {
        let a = ps(&[2.0, -0.5, 0.25, 1.0, -0.125]);
        let back = fps_exp(&{
            let mut l = fps_log(&a, 4).unwrap();
            l.coeffs[0] = 0.0;
            l
        }, 4)
        .unwrap()
        .scale(2.0);
        for (x, y) in back.coeffs().iter().zip(a.coeffs()) {
            assert!((x - y).abs() < 1e-12);
        }
        let p = fps_pow(&ps(&[1.0, -0.5, 0.0, 0.0]), -1.0, 3).unwrap();
        for (x, y) in p.coeffs().iter().zip([1.0, 0.5, 0.25, 0.125]) {
            assert!((x - y).abs() < 1e-15);
        }
        // non-integer power agrees with integer route
        let half = fps_pow(&a, 0.5, 4).unwrap();
        let sq = fps_mul(&half, &half, 4).unwrap();
        for (x, y) in sq.coeffs().iter().zip(a.coeffs()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(fps_log(&ps(&[0.0, 1.0]), 1).is_err());
        assert!(fps_exp(&ps(&[0.1, 1.0]), 1).is_err());
    }

    #[test]
    fn shifted_poisson_power_coefficient() {
        // Psi = e^{lambda (z - 1)}: [z^{n-1}] Psi^{-n} = e^{lambda n} (-n lambda)^{n-1}/(n-1)!
        let lambda: f64 = 0.8;
        let order = 12;
        let psi = PowerSeries::from_fn(order, |k| {
            (-lambda).exp() * lambda.powi(k as i32) / crate::special::gamma(k as f64 + 1.0)
        });
        for n in 1..=10usize {
            let p = fps_pow(&psi, -(n as f64), order).unwrap();
            let nf = n as f64;
            let expect = (lambda * nf).exp() * (-nf * lambda).powi(n as i32 - 1)
                / crate::special::gamma(nf);
            let got = p.coeff(n - 1).unwrap();
            assert!((got - expect).abs() < 1e-10 * expect.abs().max(1.0), "n = {n}");
        }
    }

    #[test]
    fn star_coeff_examples() {
        let r = [1.0, 0.3, 0.7, 0.2];
        assert_eq!(star_coeff(&r, 1, 0, usize::MAX).unwrap(), 1.0);
        assert_eq!(star_coeff(&r, 2, 1, usize::MAX).unwrap(), 0.3);
        assert!((star_coeff(&r, 4, 2, usize::MAX).unwrap() - 0.3 * 0.7).abs() < 1e-15);
        assert!((star_coeff(&r, 3, 2, usize::MAX).unwrap() - 0.045).abs() < 1e-15);
        assert_eq!(star_coeff(&r, 4, 0, usize::MAX).unwrap(), 0.0);
        // parts capped at 1
        assert_eq!(star_coeff(&r, 4, 2, 1).unwrap(), 0.0);
        assert!(star_coeff(&r, 27, 3, usize::MAX).is_err());
    }

    #[test]
    fn star_coeff_brute_force_triples() {
        let r: [f64; 4] = [1.0, 0.4, 0.9, 1.3];
        let mut expect = 0.0;
        for k1 in 0..4u32 {
            for k2 in 0..2u32 {
                for k3 in 0..2u32 {
                    if k1 + 2 * k2 + 3 * k3 == 3 && k1 + k2 + k3 == 1 {
                        let f = |k: u32| (1..=k).product::<u32>() as f64;
                        expect += r[1].powi(k1 as i32) * r[2].powi(k2 as i32) * r[3].powi(k3 as i32)
                            / (f(k1) * f(k2) * f(k3));
                    }
                }
            }
        }
        assert!((star_coeff(&r, 4, 1, usize::MAX).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn geometric_inverse_coefficients() {
        let (p, q) = (0.4f64, 0.6f64);
        let psi = PowerSeries::from_fn(60, |k| p * q.powi(k as i32));
        let c = lagrange_inverse_coeffs(&psi, 60).unwrap();
        for n in 1..=20 {
            let expect = (-1.0f64).powi(n as i32 - 1) * q.powi(n as i32 - 1) / p.powi(n as i32);
            assert!((c.phi[n] - expect).abs() <= 1e-9 * expect.abs(), "n = {n}");
        }
        // h_n = phi_n p^n stays accurate in absolute terms over the whole range
        for n in 1..=40 {
            let expect = (-q).powi(n as i32 - 1);
            assert!((c.h[n] - expect).abs() <= 1e-12, "n = {n}");
        }
        assert_eq!(c.h[1], 1.0);
    }

    #[test]
    fn point_mass_and_sibuya_inverse() {
        let c = lagrange_inverse_coeffs(&PowerSeries::constant(1.0, 9), 10).unwrap();
        assert_eq!(c.phi[1], 1.0);
        assert!(c.phi[2..].iter().all(|v| v.abs() < 1e-15));

        let alpha = 0.5;
        let order = 20;
        // Psi(z) = (1 - (1-z)^alpha)/z = sum_j pi(j+1) z^j
        let psi = PowerSeries::from_fn(order, |k| {
            let j = k as u64 + 1;
            alpha * (crate::special::ln_rising(1.0 - alpha, j - 1)
                - crate::special::ln_gamma(j as f64 + 1.0))
            .exp()
        });
        let c = lagrange_inverse_coeffs(&psi, 21).unwrap();
        assert!((c.phi[1] - 2.0).abs() < 1e-12);
        assert!((c.phi[2] + 1.0).abs() < 1e-12);
        assert!(c.phi[3..=12].iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn compositional_inverse_residual() {
        let pi = [0.45, 0.1, 0.2, 0.05, 0.2];
        let order = 25;
        let n_max = 25;
        let psi = PowerSeries::from_fn(order, |k| pi.get(k).copied().unwrap_or(0.0));
        let c = lagrange_inverse_coeffs(&psi, n_max).unwrap();
        let phi_series = PowerSeries::from_fn(order, |k| if k == 0 { 0.0 } else { pi.get(k - 1).copied().unwrap_or(0.0) });
        let inv = PowerSeries::from_fn(order, |k| if k == 0 { 0.0 } else { c.phi[k] });
        let comp = fps_compose(&inv, &phi_series, order).unwrap();
        let scale = composition_scale(&inv, &phi_series, order);
        for (k, v) in comp.coeffs().iter().enumerate() {
            let expect = if k == 1 { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-8 * scale[k].max(1.0), "k = {k}: {v}");
        }
    }

    #[test]
    fn polynomial_inverse_by_continuation() {
        // Phi(z) = (z + z^2)/2 has inverse (sqrt(1 + 8y) - 1)/2
        let p = [0.0, 0.5, 0.5];
        for &y in &[0.1, 0.5, 0.9, 1.0] {
            let v = continue_polynomial_inverse(&p, y).unwrap();
            let exact = ((1.0 + 8.0 * y).sqrt() - 1.0) / 2.0;
            assert!((v.value - exact).abs() < 1e-14, "y = {y}: {} vs {exact}", v.value);
        }
        let shift = taylor_shift(&[1.0, 2.0, 3.0], 0.5);
        assert_eq!(shift, vec![1.0 + 1.0 + 0.75, 2.0 + 3.0, 3.0]);
    }

    #[test]
    fn wynn_sums_divergent_geometric() {
        // 1 - 4 + 16 - ... = 1/5 in the Abel sense
        let c: Vec<f64> = (0..40).map(|n| if n == 0 { 0.0 } else { (-4.0f64).powi(n as i32 - 1) }).collect();
        let v = sum_power_series(&c, 1.0).unwrap();
        assert_eq!(v.status, SeriesStatus::Accelerated);
        assert!((v.value - 0.2).abs() < 1e-14);
        let conv = sum_power_series(&c, 0.1).unwrap();
        assert_eq!(conv.status, SeriesStatus::Converged);
        assert!((conv.value - 0.1 / 1.4).abs() < 1e-15);
    }

    #[test]
    fn wynn_keeps_exact_geometric_limit() {
        // partial sums of 1 - r + r^2 - ... settle into a constant column
        let r = 0.75;
        let mut s = Vec::new();
        let mut acc = 0.0;
        for n in 0..9 {
            acc += (-r as f64).powi(n);
            s.push(acc);
        }
        assert!((wynn_epsilon(&s) - 1.0 / (1.0 + r)).abs() < 1e-15);
        let psi = PowerSeries::from_fn(200, |k| 0.5 * 0.5f64.powi(k as i32));
        let c = lagrange_inverse_coeffs(&psi, 200).unwrap();
        for j in [2, 17, 28] {
            let y = 1.0 - 0.5f64.powi(j);
            let v = eval_inverse(&c, y).unwrap();
            assert!((v.value - 2.0 * y / (1.0 + y)).abs() < 1e-13, "j={j}");
        }
    }

    #[test]
    fn lambert_examples() {
        assert_eq!(lambert_w(0.0).unwrap(), 0.0);
        assert!((lambert_w(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        let l: f64 = 0.7;
        assert!((lambert_w(l * l.exp()).unwrap() - 0.7).abs() < 1e-15);
        assert!(lambert_w(-0.1).is_err());
        let mut x = 0.0;
        while x <= 1e3 {
            let w = lambert_w(x).unwrap();
            assert!((w * w.exp() - x).abs() <= 1e-13 * x.max(1.0), "x = {x}");
            x += 0.731;
        }
    }
}
