//! Seeded simulation of `X_{n+1} = F^{-1}(U^{1/X_n})` with ergodic averages,
//! regenerative excursion statistics and first-passage samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::{invalid, LabError, Result};
use crate::laws::DiscreteLaw;

/// Recorded in every simulation artifact.
pub const GENERATOR: &str = "ChaCha20 (rand_chacha 0.3); seed_from_u64(seed); stream = replica index; U = 1 - next_f64";
pub const DEFAULT_STATE_CAP: u64 = 1_000_000_000;
const BATCHES: usize = 32;
/// States above this are pooled in `untracked_fraction`.
pub const MAX_TRACKED: u64 = 4096;

/// Where the generating cdf comes from.
#[derive(Debug, Clone)]
pub enum Kernel {
    /// `F(1..=N)` of a truncated chain.
    Table(Vec<f64>),
    /// Countable branching law, searched through its tail.
    Law(DiscreteLaw),
}

impl Kernel {
    pub fn table(f: &[f64]) -> Result<Self> {
        if f.is_empty() || *f.last().unwrap() != 1.0 {
            return invalid("cdf table must end at 1");
        }
        if f.windows(2).any(|w| w[1] < w[0]) || f[0] < 0.0 {
            return invalid("cdf table must be nondecreasing in [0, 1]");
        }
        Ok(Kernel::Table(f.to_vec()))
    }

    fn lowest(&self) -> u64 {
        match self {
            Kernel::Table(f) => f.iter().position(|x| *x > 0.0).unwrap() as u64 + 1,
            Kernel::Law(l) => {
                let mut j = l.lo().max(1);
                while l.pmf(j) == 0.0 && l.tail(j - 1) > 0.0 && j < l.lo() + 1_000_000 {
                    j += 1;
                }
                j
            }
        }
    }

    /// Next state from `x` given `U` in `(0, 1]`.
    fn step(&self, x: u64, u: f64, lowest: u64) -> u64 {
        let y = u.ln() / x as f64;
        if y < -745.0 {
            return lowest;
        }
        match self {
            Kernel::Table(f) => {
                let v = y.exp();
                f.partition_point(|&c| c < v) as u64 + 1
            }
            Kernel::Law(l) => {
                // smallest j with P(nu > j) <= 1 - U^{1/x}
                let s = (-y.exp_m1()).max(f64::MIN_POSITIVE);
                let mut lo = lowest;
                if l.tail(lo) <= s {
                    return lo;
                }
                let cap = l.upper().unwrap_or(u64::MAX);
                let mut hi = lo.saturating_mul(2).max(lo + 1).min(cap);
                while l.tail(hi) > s {
                    if hi == cap {
                        return cap;
                    }
                    lo = hi;
                    hi = hi.saturating_mul(2).min(cap);
                }
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if l.tail(mid) <= s {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Start {
    State(u64),
    /// Probabilities of states `1, 2, ...`.
    Distribution(Vec<f64>),
}

#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub seed: u64,
    pub steps: u64,
    pub burn_in: u64,
    pub replicas: u32,
    pub x0: Start,
    pub state_cap: u64,
}

impl SimConfig {
    pub fn new(seed: u64, steps: u64, burn_in: u64, replicas: u32, x0: Start) -> Result<Self> {
        let cfg = SimConfig { seed, steps, burn_in, replicas, x0, state_cap: DEFAULT_STATE_CAP };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.steps <= self.burn_in {
            return invalid("steps must exceed burn_in");
        }
        if self.replicas == 0 {
            return invalid("at least one replica is required");
        }
        match &self.x0 {
            Start::State(0) => invalid("states start at 1"),
            Start::Distribution(d) => {
                let s: f64 = d.iter().sum();
                if d.iter().any(|p| !(*p >= 0.0)) || (s - 1.0).abs() > 1e-10 {
                    invalid("initial distribution must be a probability vector")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

fn replica_rng(seed: u64, replica: u32) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(replica as u64);
    rng
}

fn uniform(rng: &mut ChaCha20Rng) -> f64 {
    1.0 - rng.gen::<f64>()
}

fn initial_state(x0: &Start, rng: &mut ChaCha20Rng) -> u64 {
    match x0 {
        Start::State(s) => *s,
        Start::Distribution(d) => {
            let u = rng.gen::<f64>();
            let mut acc = 0.0;
            for (k, p) in d.iter().enumerate() {
                acc += p;
                if u < acc {
                    return k as u64 + 1;
                }
            }
            d.iter().rposition(|p| *p > 0.0).unwrap() as u64 + 1
        }
    }
}

/// Path `X_0..=X_steps` of one replica; stops early with `diverged` when the
/// state cap is exceeded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Path {
    pub states: Vec<u64>,
    pub diverged: bool,
}

pub fn simulate_path(kernel: &Kernel, cfg: &SimConfig, replica: u32) -> Result<Path> {
    cfg.validate()?;
    let mut rng = replica_rng(cfg.seed, replica);
    let lowest = kernel.lowest();
    let mut x = initial_state(&cfg.x0, &mut rng);
    let mut states = Vec::with_capacity(cfg.steps as usize + 1);
    states.push(x);
    for _ in 0..cfg.steps {
        x = kernel.step(x, uniform(&mut rng), lowest);
        states.push(x);
        if x > cfg.state_cap {
            return Ok(Path { states, diverged: true });
        }
    }
    Ok(Path { states, diverged: false })
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Excursion {
    /// Fraction of steps `1 -> 1` over complete cycles between entries to 1
    /// from above.
    pub fraction_in_1: f64,
    pub fraction_stderr: f64,
    pub cycles: usize,
    /// Mean first-return time to 1 (`n >= 1` convention).
    pub mean_return: f64,
    pub mean_return_stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimSummary {
    /// Empirical frequencies of states `1..`; together with
    /// `untracked_fraction` they sum to 1.
    pub occupation: Vec<f64>,
    pub occupation_stderr: Vec<f64>,
    /// Fraction of time above `MAX_TRACKED`.
    pub untracked_fraction: f64,
    pub mean_state: f64,
    pub mean_state_stderr: f64,
    pub hit_times: Vec<u64>,
    pub excursion: Excursion,
    pub diverged_replicas: u32,
    pub samples: u64,
}

/// Per-replica accumulators reduced in replica order.
#[derive(Default)]
struct ReplicaStats {
    batch_counts: Vec<Vec<u64>>,
    batch_state_sum: Vec<f64>,
    batch_len: u64,
    cycles_a: Vec<f64>,
    cycles_l: Vec<f64>,
    returns: Vec<f64>,
    hit: Option<u64>,
    diverged: bool,
}

fn run_replica(kernel: &Kernel, cfg: &SimConfig, r: u32, target: Option<u64>) -> ReplicaStats {
    let mut rng = replica_rng(cfg.seed, r);
    let lowest = kernel.lowest();
    let mut x = initial_state(&cfg.x0, &mut rng);
    let kept = cfg.steps - cfg.burn_in;
    let batch_len = (kept / BATCHES as u64).max(1);
    let mut st = ReplicaStats { batch_len, ..Default::default() };
    let mut counts: Vec<u64> = Vec::new();
    let mut state_sum = 0.0;
    let mut in_batch = 0u64;
    let mut prev = x;
    let mut entry: Option<(u64, u64)> = None;
    let mut last_visit_1: Option<u64> = None;
    for n in 1..=cfg.steps {
        x = kernel.step(x, uniform(&mut rng), lowest);
        if x > cfg.state_cap {
            st.diverged = true;
            break;
        }
        if st.hit.is_none() && Some(x) == target {
            st.hit = Some(n);
        }
        if n <= cfg.burn_in {
            prev = x;
            continue;
        }
        let k = x.min(MAX_TRACKED + 1) as usize;
        if counts.len() < k {
            counts.resize(k, 0);
        }
        counts[k - 1] += 1;
        state_sum += x as f64;
        in_batch += 1;
        if in_batch == batch_len && st.batch_counts.len() < BATCHES {
            st.batch_counts.push(std::mem::take(&mut counts));
            st.batch_state_sum.push(state_sum / batch_len as f64);
            state_sum = 0.0;
            in_batch = 0;
        }
        if x == 1 {
            if let Some(t) = last_visit_1 {
                st.returns.push((n - t) as f64);
            }
            last_visit_1 = Some(n);
            if prev > 1 {
                if let Some((start, ones)) = entry {
                    st.cycles_a.push(ones as f64);
                    st.cycles_l.push((n - start) as f64);
                }
                entry = Some((n, 0));
            } else if let Some((_, ones)) = entry.as_mut() {
                *ones += 1;
            }
        }
        prev = x;
    }
    st
}

fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::INFINITY);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn run_all(kernel: &Kernel, cfg: &SimConfig, target: Option<u64>) -> Vec<ReplicaStats> {
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(cfg.replicas as usize);
    if threads <= 1 {
        return (0..cfg.replicas).map(|r| run_replica(kernel, cfg, r, target)).collect();
    }
    let mut out: Vec<Option<ReplicaStats>> = (0..cfg.replicas).map(|_| None).collect();
    std::thread::scope(|s| {
        let chunks: Vec<_> = out.chunks_mut(cfg.replicas.div_ceil(threads as u32) as usize).collect();
        let mut base = 0u32;
        for chunk in chunks {
            let start = base;
            base += chunk.len() as u32;
            s.spawn(move || {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(run_replica(kernel, cfg, start + k as u32, target));
                }
            });
        }
    });
    out.into_iter().map(|s| s.unwrap()).collect()
}

/// Ergodic averages with batch-means standard errors, pooled over replicas.
pub fn simulate(kernel: &Kernel, cfg: &SimConfig, target: Option<u64>) -> Result<SimSummary> {
    cfg.validate()?;
    let reps = run_all(kernel, cfg, target);
    let width = reps
        .iter()
        .flat_map(|r| r.batch_counts.iter().map(|c| c.len()))
        .max()
        .unwrap_or(0)
        .max(if let Kernel::Table(f) = kernel { f.len() } else { 0 });
    let mut per_state: Vec<Vec<f64>> = vec![Vec::new(); width];
    let mut state_means = Vec::new();
    let (mut a, mut l, mut ret) = (Vec::new(), Vec::new(), Vec::new());
    let mut hits = Vec::new();
    let mut diverged = 0;
    let mut samples = 0u64;
    for r in &reps {
        if r.diverged {
            diverged += 1;
        }
        for (b, c) in r.batch_counts.iter().enumerate() {
            samples += r.batch_len;
            for (k, slot) in per_state.iter_mut().enumerate() {
                let cnt = c.get(k).copied().unwrap_or(0);
                slot.push(cnt as f64 / r.batch_len as f64);
            }
            state_means.push(r.batch_state_sum[b]);
        }
        a.extend_from_slice(&r.cycles_a);
        l.extend_from_slice(&r.cycles_l);
        ret.extend_from_slice(&r.returns);
        if let Some(h) = r.hit {
            hits.push(h);
        }
    }
    if samples == 0 {
        return Err(LabError::CapBreached("every replica diverged before the first batch".into()));
    }
    let mut occupation = Vec::with_capacity(width);
    let mut occupation_stderr = Vec::with_capacity(width);
    for v in &per_state {
        let (m, s) = mean_and_stderr(v);
        occupation.push(m);
        occupation_stderr.push(s);
    }
    let total: f64 = occupation.iter().sum();
    for (x, e) in occupation.iter_mut().zip(occupation_stderr.iter_mut()) {
        *x /= total;
        *e /= total;
    }
    let untracked_fraction = if occupation.len() > MAX_TRACKED as usize {
        occupation_stderr.pop();
        occupation.pop().unwrap()
    } else {
        0.0
    };
    let (mean_state, mean_state_stderr) = mean_and_stderr(&state_means);
    let excursion = regenerative_ratio(&a, &l, &ret);
    Ok(SimSummary {
        occupation,
        occupation_stderr,
        untracked_fraction,
        mean_state,
        mean_state_stderr,
        hit_times: hits,
        excursion,
        diverged_replicas: diverged,
        samples,
    })
}

/// Ratio estimator `sum A / sum L` over iid cycles with its delta-method
/// standard error.
fn regenerative_ratio(a: &[f64], l: &[f64], returns: &[f64]) -> Excursion {
    let (mean_return, mean_return_stderr) = mean_and_stderr(returns);
    let n = a.len();
    if n < 2 {
        return Excursion { cycles: n, mean_return, mean_return_stderr, ..Default::default() };
    }
    let sa: f64 = a.iter().sum();
    let sl: f64 = l.iter().sum();
    let r = sa / sl;
    let lbar = sl / n as f64;
    let var = a.iter().zip(l).map(|(x, y)| (x - r * y).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    Excursion {
        fraction_in_1: r,
        fraction_stderr: (var / n as f64).sqrt() / lbar,
        cycles: n,
        mean_return,
        mean_return_stderr,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HitSample {
    pub times: Vec<u64>,
    /// Replicas that reached the path cap before hitting.
    pub censored: u32,
    pub cap: u64,
}

/// First-passage times `inf{n >= 1 : X_n = target}`, one per replica;
/// `cfg.steps` is the path cap.
pub fn empirical_hitting(kernel: &Kernel, cfg: &SimConfig, target: u64) -> Result<HitSample> {
    cfg.validate()?;
    let lowest = kernel.lowest();
    let mut times = Vec::with_capacity(cfg.replicas as usize);
    let mut censored = 0;
    for r in 0..cfg.replicas {
        let mut rng = replica_rng(cfg.seed, r);
        let mut x = initial_state(&cfg.x0, &mut rng);
        let mut hit = None;
        for n in 1..=cfg.steps {
            x = kernel.step(x, uniform(&mut rng), lowest);
            if x == target {
                hit = Some(n);
                break;
            }
            if x > cfg.state_cap {
                break;
            }
        }
        match hit {
            Some(n) => times.push(n),
            None => censored += 1,
        }
    }
    Ok(HitSample { times, censored, cap: cfg.steps })
}

/// `max_n |P_hat(tau > n) - P(tau > n)|` against a tail indexed by `n >= 0`.
/// Beyond the supplied tail the reference is taken as 0.
pub fn ks_statistic(sample: &[u64], tail: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_unstable();
    let m = s.len() as f64;
    let top = s.last().copied().unwrap_or(0) as usize;
    let mut d: f64 = 0.0;
    let mut idx = 0;
    for n in 0..=top.max(tail.len().saturating_sub(1)) {
        while idx < s.len() && s[idx] as usize <= n {
            idx += 1;
        }
        let emp = (s.len() - idx) as f64 / m;
        let reference = tail.get(n).copied().unwrap_or(0.0);
        d = d.max((emp - reference).abs());
    }
    d
}

/// Asymptotic Kolmogorov critical value `sqrt(-ln(alpha/2)/2) / sqrt(n)`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioEstimate {
    pub ratio: f64,
    pub visits_i: u64,
    pub visits_j: u64,
    /// Fewer than 30 visits to either state.
    pub low_confidence: bool,
}

/// Visit-count ratio of states `i` and `j` over post-burn-in steps, summed
/// over replicas.
pub fn ratio_occupation(kernel: &Kernel, cfg: &SimConfig, i: u64, j: u64) -> Result<RatioEstimate> {
    cfg.validate()?;
    let lowest = kernel.lowest();
    let (mut vi, mut vj) = (0u64, 0u64);
    for r in 0..cfg.replicas {
        let mut rng = replica_rng(cfg.seed, r);
        let mut x = initial_state(&cfg.x0, &mut rng);
        for n in 1..=cfg.steps {
            x = kernel.step(x, uniform(&mut rng), lowest);
            if x > cfg.state_cap {
                break;
            }
            if n > cfg.burn_in {
                vi += (x == i) as u64;
                vj += (x == j) as u64;
            }
        }
    }
    if vj == 0 {
        return Err(LabError::Validation(format!("state {j} was never visited")));
    }
    Ok(RatioEstimate { ratio: vi as f64 / vj as f64, visits_i: vi, visits_j: vj, low_confidence: vi < 30 || vj < 30 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{truncate_target, Truncation};
    use crate::design::design_branching_finite;
    use crate::hitting::hitting_tail;

    fn chain8() -> (Vec<f64>, Vec<f64>) {
        let pi = truncate_target(&DiscreteLaw::geometric(0.5).unwrap(), 8, Truncation::Renormalize).unwrap();
        (design_branching_finite(&pi).unwrap().states().to_vec(), pi)
    }

    #[test]
    fn point_mass_path_is_constant() {
        let k = Kernel::Law(DiscreteLaw::point_mass());
        let cfg = SimConfig::new(1, 50, 0, 1, Start::State(1)).unwrap();
        assert!(simulate_path(&k, &cfg, 0).unwrap().states.iter().all(|x| *x == 1));
        let t = Kernel::table(&[1.0]).unwrap();
        assert!(simulate_path(&t, &cfg, 0).unwrap().states.iter().all(|x| *x == 1));
    }

    #[test]
    fn paths_are_reproducible() {
        let (f, _) = chain8();
        let k = Kernel::table(&f).unwrap();
        let cfg = SimConfig::new(42, 1000, 0, 2, Start::State(1)).unwrap();
        let a = simulate_path(&k, &cfg, 1).unwrap();
        assert_eq!(a, simulate_path(&k, &cfg, 1).unwrap());
        assert_ne!(a, simulate_path(&k, &cfg, 0).unwrap());
    }

    #[test]
    fn two_state_transition_frequencies() {
        let f = 0.35;
        let k = Kernel::table(&[f, 1.0]).unwrap();
        let cfg = SimConfig::new(7, 100_000, 0, 1, Start::State(1)).unwrap();
        let path = simulate_path(&k, &cfg, 0).unwrap().states;
        let mut c = [[0.0f64; 2]; 2];
        for w in path.windows(2) {
            c[w[0] as usize - 1][w[1] as usize - 1] += 1.0;
        }
        let p = [f, f * f];
        for i in 0..2 {
            let n = c[i][0] + c[i][1];
            let est = c[i][0] / n;
            let se = (p[i] * (1.0 - p[i]) / n).sqrt();
            assert!((est - p[i]).abs() < 3.0 * se, "row {i}: {est} vs {}", p[i]);
        }
    }

    #[test]
    fn two_state_hitting_is_geometric() {
        let f: f64 = 0.6;
        let k = Kernel::table(&[f, 1.0]).unwrap();
        let cfg = SimConfig::new(3, 10_000, 0, 5000, Start::State(1)).unwrap();
        let s = empirical_hitting(&k, &cfg, 2).unwrap();
        assert_eq!(s.censored, 0);
        let tail: Vec<f64> = (0..200).map(|n| f.powi(n)).collect();
        assert!(ks_statistic(&s.times, &tail) < ks_critical(s.times.len(), 0.01));
    }

    #[test]
    fn chain_occupation_and_excursions() {
        let (f, pi) = chain8();
        let k = Kernel::table(&f).unwrap();
        let cfg = SimConfig::new(11, 200_000, 1000, 2, Start::State(1)).unwrap();
        let s = simulate(&k, &cfg, None).unwrap();
        assert!((s.occupation.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for j in 0..8 {
            assert!((s.occupation[j] - pi[j]).abs() <= 4.0 * s.occupation_stderr[j].max(1e-12));
        }
        let rho = f[0] * pi[0];
        assert!((s.excursion.fraction_in_1 - rho).abs() <= 3.0 * s.excursion.fraction_stderr);
        assert!((s.excursion.mean_return - 1.0 / pi[0]).abs() <= 4.0 * s.excursion.mean_return_stderr);
    }

    #[test]
    fn hitting_sample_matches_matrix_tail() {
        let pi = truncate_target(&DiscreteLaw::geometric(0.5).unwrap(), 6, Truncation::Renormalize).unwrap();
        let t = design_branching_finite(&pi).unwrap();
        let tm = crate::chain::build_transition(t.states()).unwrap();
        let k = Kernel::table(t.states()).unwrap();
        let cfg = SimConfig::new(5, 1_000_000, 0, 10_000, Start::State(1)).unwrap();
        let s = empirical_hitting(&k, &cfg, 6).unwrap();
        assert_eq!(s.censored, 0);
        let mut init = vec![0.0; 6];
        init[0] = 1.0;
        let tail = hitting_tail(&tm.p, &init, *s.times.iter().max().unwrap() as usize);
        assert!(ks_statistic(&s.times, &tail) < ks_critical(s.times.len(), 0.01));
    }

    #[test]
    fn ratio_occupation_examples() {
        let (f, pi) = chain8();
        let k = Kernel::table(&f).unwrap();
        let cfg = SimConfig::new(9, 100_000, 100, 1, Start::State(1)).unwrap();
        assert_eq!(ratio_occupation(&k, &cfg, 2, 2).unwrap().ratio, 1.0);
        let r = ratio_occupation(&k, &cfg, 1, 2).unwrap();
        assert!((r.ratio - pi[0] / pi[1]).abs() < 0.05 * pi[0] / pi[1]);
    }

    #[test]
    fn countable_law_sampling() {
        let k = Kernel::Law(DiscreteLaw::counting_branch());
        let cfg = SimConfig::new(2, 2000, 0, 1, Start::State(1)).unwrap();
        let p = simulate_path(&k, &cfg, 0).unwrap();
        assert!(p.states.iter().all(|x| *x >= 1));
        let g = Kernel::Law(DiscreteLaw::geometric(0.5).unwrap());
        let cfg = SimConfig::new(2, 50_000, 0, 1, Start::State(1)).unwrap();
        let path = simulate_path(&g, &cfg, 0).unwrap().states;
        let ones = path.iter().filter(|x| **x == 1).count() as f64 / path.len() as f64;
        assert!(ones > 0.0 && ones < 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(1, 10, 10, 1, Start::State(1)).is_err());
        assert!(SimConfig::new(1, 10, 0, 0, Start::State(1)).is_err());
        assert!(SimConfig::new(1, 10, 0, 1, Start::Distribution(vec![0.5, 0.4])).is_err());
    }
}
