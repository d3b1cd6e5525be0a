//! Event-driven simulation of the chain: local times up to a fixed horizon,
//! stopping at the inverse local time of a site, and Monte Carlo estimates of
//! local-time functionals.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::chain::{Generator, RangeSpec};
use crate::error::{Error, Result};
use crate::parallel::{chunked_reduce, Moments};

/// Paths per reduction chunk; the reduction tree depends only on this.
pub const PATH_CHUNK: usize = 4096;

/// Default cap on jumps for inverse-local-time stopping.
pub const DEFAULT_MAX_EVENTS: usize = 10_000_000;

/// One simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    /// Jump instants, increasing.
    pub jump_times: Vec<f64>,
    /// `states[0]` is the start; `states[k]` is entered at `jump_times[k-1]`.
    pub states: Vec<usize>,
    pub terminal_state: usize,
    /// Local time of every state (zero if unvisited).
    pub local_times: Vec<f64>,
    pub horizon: f64,
}

impl PathRecord {
    /// Visited states in increasing order.
    pub fn range(&self) -> Vec<usize> {
        let mut r = self.states.clone();
        r.sort_unstable();
        r.dedup();
        r
    }

    /// Tab-separated dump line: seed, path index, jump times, states,
    /// local times of visited states.
    pub fn dump_line(&self, gen: &Generator, seed: u64, index: u64) -> String {
        let mut s = format!("{seed}\t{index}\t");
        join(&mut s, self.jump_times.iter().map(|t| format!("{t:e}")), ",");
        s.push('\t');
        join(&mut s, self.states.iter().map(|&x| gen.label(x).to_string()), ";");
        s.push('\t');
        join(&mut s, self.range().into_iter().map(|x| format!("{}={:e}", gen.label(x), self.local_times[x])), ";");
        s
    }
}

fn join(out: &mut String, items: impl Iterator<Item = String>, sep: &str) {
    for (i, it) in items.enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        let _ = write!(out, "{it}");
    }
}

/// Header matching [`PathRecord::dump_line`].
pub const PATH_DUMP_HEADER: &str = "seed\tpath\tjump_times\tstates\tlocal_times";

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub seed: u64,
    /// Paths on which the event occurred.
    pub accepted: u64,
}

impl McEstimate {
    pub fn no_accepted_paths(&self) -> bool {
        self.accepted == 0
    }
}

/// Per-path RNG: stream `index` of the root seed.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Jump tables of a generator.
#[derive(Debug, Clone)]
pub struct Simulator {
    exit: Vec<f64>,
    targets: Vec<Vec<usize>>,
    cumulative: Vec<Vec<f64>>,
}

impl Simulator {
    pub fn new(gen: &Generator) -> Self {
        let n = gen.len();
        let mut exit = vec![0.0; n];
        let mut targets = vec![Vec::new(); n];
        let mut cumulative = vec![Vec::new(); n];
        for x in 0..n {
            let mut c = 0.0;
            for y in 0..n {
                let r = gen.rate(x, y);
                if y != x && r > 0.0 {
                    c += r;
                    targets[x].push(y);
                    cumulative[x].push(c);
                }
            }
            exit[x] = c;
        }
        Simulator { exit, targets, cumulative }
    }

    pub fn len(&self) -> usize {
        self.exit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exit.is_empty()
    }

    fn hold<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> f64 {
        if self.exit[x] == 0.0 {
            f64::INFINITY
        } else {
            let e: f64 = Exp1.sample(rng);
            e / self.exit[x]
        }
    }

    fn next<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        let cum = &self.cumulative[x];
        let u = rng.random::<f64>() * self.exit[x];
        let i = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
        self.targets[x][i]
    }

    /// Runs to time `t`; `keep` returns false to abandon the path early.
    fn run<R: Rng + ?Sized>(
        &self,
        start: usize,
        t: f64,
        rng: &mut R,
        record: bool,
        keep: &mut dyn FnMut(usize) -> bool,
    ) -> Option<PathRecord> {
        let mut local = vec![0.0; self.len()];
        let mut jump_times = Vec::new();
        let mut states = vec![start];
        let mut x = start;
        let mut now = 0.0;
        loop {
            let hold = self.hold(x, rng);
            if now + hold >= t {
                local[x] += t - now;
                break;
            }
            local[x] += hold;
            now += hold;
            x = self.next(x, rng);
            if !keep(x) {
                return None;
            }
            if record {
                jump_times.push(now);
                states.push(x);
            } else if local[x] == 0.0 && !states.contains(&x) {
                states.push(x);
            }
        }
        Some(PathRecord { jump_times, states, terminal_state: x, local_times: local, horizon: t })
    }

    /// Path on `[0, t]`.
    pub fn sample_path<R: Rng + ?Sized>(&self, start: usize, t: f64, rng: &mut R) -> PathRecord {
        self.run(start, t, rng, true, &mut |_| true).expect("unconditional run")
    }

    /// Path stopped when the local time at `b` reaches `h`.
    pub fn sample_until_inverse_local_time<R: Rng + ?Sized>(
        &self,
        start: usize,
        b: usize,
        h: f64,
        rng: &mut R,
        max_events: usize,
    ) -> Result<PathRecord> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument("level must be positive".into()));
        }
        let mut local = vec![0.0; self.len()];
        let mut jump_times = Vec::new();
        let mut states = vec![start];
        let mut x = start;
        let mut now = 0.0;
        loop {
            let hold = self.hold(x, rng);
            if x == b {
                let need = h - local[b];
                if hold >= need {
                    local[b] = h;
                    now += need;
                    break;
                }
            } else if hold.is_infinite() {
                return Err(Error::Simulation(format!("absorbed at state {x} before reaching the level")));
            }
            local[x] += hold;
            now += hold;
            x = self.next(x, rng);
            jump_times.push(now);
            states.push(x);
            if jump_times.len() >= max_events {
                return Err(Error::Simulation(format!("event cap {max_events} reached before the level")));
            }
        }
        Ok(PathRecord { jump_times, states, terminal_state: x, local_times: local, horizon: now })
    }
}

fn check_horizon(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("horizon must be positive".into()))
    }
}

/// Path of the chain from `start` on `[0, t]`.
pub fn sample_path<R: Rng + ?Sized>(gen: &Generator, start: usize, t: f64, rng: &mut R) -> Result<PathRecord> {
    check_horizon(t)?;
    if start >= gen.len() {
        return Err(Error::UnknownState(start.to_string()));
    }
    Ok(Simulator::new(gen).sample_path(start, t, rng))
}

/// Path stopped at the inverse local time `T_b^h`.
pub fn sample_until_inverse_local_time<R: Rng + ?Sized>(
    gen: &Generator,
    start: usize,
    b: usize,
    h: f64,
    rng: &mut R,
    max_events: usize,
) -> Result<PathRecord> {
    if start >= gen.len() || b >= gen.len() {
        return Err(Error::UnknownState(start.max(b).to_string()));
    }
    Simulator::new(gen).sample_until_inverse_local_time(start, b, h, rng, max_events)
}

/// `n` recorded paths with per-path streams of `seed`.
pub fn sample_paths(gen: &Generator, start: usize, t: f64, n: usize, seed: u64) -> Result<Vec<PathRecord>> {
    check_horizon(t)?;
    if start >= gen.len() {
        return Err(Error::UnknownState(start.to_string()));
    }
    let sim = Simulator::new(gen);
    let parts = chunked_reduce(
        n,
        PATH_CHUNK,
        |range| range.map(|i| sim.sample_path(start, t, &mut path_rng(seed, i as u64))).collect::<Vec<_>>(),
        |mut a, b| {
            a.extend(b);
            a
        },
    );
    Ok(parts.unwrap_or_default())
}

/// Estimate of `E_a[F(l_T) 1{X_T = b} 1{R_T = R}]`; `f` receives the local
/// times of the range in increasing state order.
pub fn mc_event_functional<F>(
    gen: &Generator,
    spec: &RangeSpec,
    t: f64,
    f: F,
    n_paths: u64,
    seed: u64,
) -> Result<McEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_horizon(t)?;
    if n_paths < 2 {
        return Err(Error::InvalidArgument("need at least two paths".into()));
    }
    let sim = Simulator::new(gen);
    let range = spec.range();
    let mut inside = vec![false; gen.len()];
    for &x in range {
        inside[x] = true;
    }
    let mom = chunked_reduce(
        n_paths as usize,
        PATH_CHUNK,
        |paths| {
            let mut mom = Moments::default();
            let mut l = vec![0.0; range.len()];
            for i in paths {
                let mut rng = path_rng(seed, i as u64);
                let Some(p) = sim.run(spec.start(), t, &mut rng, false, &mut |x| inside[x]) else {
                    continue;
                };
                if p.terminal_state != spec.end() || p.states.len() != range.len() {
                    continue;
                }
                for (k, &x) in range.iter().enumerate() {
                    l[k] = p.local_times[x];
                }
                mom.push(f(&l));
            }
            mom
        },
        Moments::merge,
    )
    .unwrap_or_default();
    Ok(McEstimate {
        mean: mom.mean_over(n_paths),
        std_error: mom.std_error_over(n_paths),
        n_paths,
        seed,
        accepted: mom.count,
    })
}

/// Estimate of `P_a(R_T within S, X_T = b)`.
pub fn mc_killed_prob(gen: &Generator, s: &[usize], a: usize, b: usize, t: f64, n_paths: u64, seed: u64) -> Result<McEstimate> {
    check_horizon(t)?;
    let s = gen.check_subset(s)?;
    if !s.contains(&a) || !s.contains(&b) {
        return Err(Error::InvalidRange("start and end must lie in S".into()));
    }
    let sim = Simulator::new(gen);
    let mut inside = vec![false; gen.len()];
    for &x in &s {
        inside[x] = true;
    }
    let mom = chunked_reduce(
        n_paths as usize,
        PATH_CHUNK,
        |paths| {
            let mut mom = Moments::default();
            for i in paths {
                let mut rng = path_rng(seed, i as u64);
                if let Some(p) = sim.run(a, t, &mut rng, false, &mut |x| inside[x]) {
                    if p.terminal_state == b {
                        mom.push(1.0);
                    }
                }
            }
            mom
        },
        Moments::merge,
    )
    .unwrap_or_default();
    Ok(McEstimate {
        mean: mom.mean_over(n_paths),
        std_error: mom.std_error_over(n_paths),
        n_paths,
        seed,
        accepted: mom.count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absorbing_start() {
        let g = Generator::from_rows(&[vec![0.0, 0.0], vec![1.0, -1.0]]).unwrap();
        let p = sample_path(&g, 0, 3.0, &mut path_rng(1, 0)).unwrap();
        assert!(p.jump_times.is_empty());
        assert_eq!(p.local_times, vec![3.0, 0.0]);
    }

    #[test]
    fn local_times_sum_and_support() {
        let g = Generator::box_srw(2, 2, 1.0).unwrap();
        for i in 0..50 {
            let p = sample_path(&g, 12, 5.0, &mut path_rng(9, i)).unwrap();
            let s: f64 = p.local_times.iter().sum();
            assert!((s - 5.0).abs() < 1e-12);
            let support: Vec<usize> = (0..g.len()).filter(|&x| p.local_times[x] > 0.0).collect();
            assert_eq!(support, p.range());
            assert!(p.jump_times.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(p.states.len(), p.jump_times.len() + 1);
        }
    }

    #[test]
    fn inverse_local_time_exact_level() {
        let g = Generator::line_srw(-20, 20, 1.0).unwrap();
        let b = g.index_of("2").unwrap();
        let start = g.index_of("0").unwrap();
        for i in 0..20 {
            let p = sample_until_inverse_local_time(&g, start, b, 1.0, &mut path_rng(4, i), DEFAULT_MAX_EVENTS).unwrap();
            assert_eq!(p.local_times[b], 1.0);
            assert_eq!(p.terminal_state, b);
            assert!((p.local_times.iter().sum::<f64>() - p.horizon).abs() < 1e-9 * p.horizon.max(1.0));
        }
        let trap = Generator::from_rows(&[vec![0.0, 0.0], vec![1.0, -1.0]]).unwrap();
        let p = sample_until_inverse_local_time(&trap, 0, 0, 2.5, &mut path_rng(0, 0), 10).unwrap();
        assert_eq!(p.horizon, 2.5);
        assert_eq!(p.local_times, vec![2.5, 0.0]);
    }

    #[test]
    fn event_cap_is_reported() {
        let g = Generator::line_srw(-200, 200, 1.0).unwrap();
        let b = g.index_of("150").unwrap();
        let r = sample_until_inverse_local_time(&g, g.index_of("0").unwrap(), b, 1.0, &mut path_rng(0, 0), 5);
        assert!(matches!(r, Err(Error::Simulation(_))));
    }

    #[test]
    fn expected_local_time_two_state() {
        let g = Generator::two_state(1.0, 1.0).unwrap();
        let spec_a = RangeSpec::new(&g, &[0, 1], 0, 0).unwrap();
        let spec_b = RangeSpec::new(&g, &[0, 1], 0, 1).unwrap();
        let n = 200_000;
        let ea = mc_event_functional(&g, &spec_a, 1.0, |l| l[0], n, 5).unwrap();
        let eb = mc_event_functional(&g, &spec_b, 1.0, |l| l[0], n, 5).unwrap();
        let single = RangeSpec::new(&g, &[0], 0, 0).unwrap();
        let es = mc_event_functional(&g, &single, 1.0, |l| l[0], n, 5).unwrap();
        let exact = 0.5 + (1.0 - (-2.0f64).exp()) / 4.0;
        let total = ea.mean + eb.mean + es.mean;
        let se = ea.std_error + eb.std_error + es.std_error;
        assert!((total - exact).abs() < 4.0 * se, "{total} vs {exact}");
    }

    #[test]
    fn event_probability_and_unreachable() {
        let g = Generator::two_state(1.0, 1.0).unwrap();
        let spec = RangeSpec::new(&g, &[0, 1], 0, 1).unwrap();
        let e = mc_event_functional(&g, &spec, 1.0, |_| 1.0, 100_000, 1).unwrap();
        let exact = 0.5 * (1.0 - (-2.0f64).exp());
        assert!((e.mean - exact).abs() < 4.0 * e.std_error);
        let g = Generator::from_rows(&[vec![-1.0, 1.0, 0.0], vec![1.0, -1.0, 0.0], vec![0.0, 1.0, -1.0]]).unwrap();
        let spec = RangeSpec::new(&g, &[0, 2], 0, 2).unwrap();
        let e = mc_event_functional(&g, &spec, 1.0, |_| 1.0, 1000, 1).unwrap();
        assert_eq!(e.mean, 0.0);
        assert!(e.no_accepted_paths());
    }

    #[test]
    fn worker_count_does_not_change_estimates() {
        let g = Generator::box_srw(1, 3, 1.0).unwrap();
        let spec = RangeSpec::new(&g, &[2, 3, 4], 3, 3).unwrap();
        let run = |w| {
            crate::parallel::with_workers(Some(w), || mc_event_functional(&g, &spec, 2.0, |l| l[1], 20_000, 42).unwrap()).unwrap()
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn dump_line_format() {
        let g = Generator::two_state(1.0, 1.0).unwrap();
        let p = sample_path(&g, 0, 1.0, &mut path_rng(3, 0)).unwrap();
        let line = p.dump_line(&g, 3, 0);
        assert_eq!(line.split('\t').count(), 5);
        assert!(line.starts_with("3\t0\t"));
    }
}
