use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use super::kernels::{sample_f, sample_pstar};
use super::ks::{ks_critical, ks_two_sample};
use crate::chain::Generator;
use crate::error::{Error, Result};
use crate::parallel::chunked_reduce;
use crate::simulate::{path_rng, Simulator, DEFAULT_MAX_EVENTS, PATH_CHUNK};

/// Local times of one path at `T_b^h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeProfile {
    pub h: f64,
    pub b: i64,
    /// `l(b - x)` for `x = 0..=b`.
    pub inner: Vec<f64>,
    /// `l(b + x)` for `x >= 0`, up to and including the first zero.
    pub right: Vec<f64>,
    /// `l(-x)` for `x >= 0`, up to and including the first zero.
    pub left: Vec<f64>,
    /// An outer segment was still positive at the window edge.
    pub truncated: bool,
}

fn outer(values: impl Iterator<Item = f64>) -> (Vec<f64>, bool) {
    let mut out = Vec::new();
    for v in values {
        out.push(v);
        if v == 0.0 {
            return (out, false);
        }
    }
    (out, true)
}

impl LocalTimeProfile {
    /// Profile from local times on the window `lo..=hi` (index `k` is site
    /// `lo + k`).
    pub fn from_local_times(local: &[f64], lo: i64, b: i64, h: f64) -> Self {
        let at = |site: i64| local[(site - lo) as usize];
        let hi = lo + local.len() as i64 - 1;
        let inner = (0..=b).map(|x| at(b - x)).collect();
        let (right, tr) = outer((0..=hi - b).map(|x| at(b + x)));
        let (left, tl) = outer((0..=-lo).map(|x| at(-x)));
        LocalTimeProfile { h, b, inner, right, left, truncated: tr || tl }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RkOptions {
    /// Sites added beyond `0` and `b` on each side of the simulation window.
    pub margin: i64,
    /// Outer steps tested per side.
    pub outer_steps: usize,
    pub max_events: usize,
    /// Family-wise level of the KS and z tests.
    pub family_alpha: f64,
    pub bins: usize,
    pub min_bin: usize,
}

impl Default for RkOptions {
    fn default() -> Self {
        RkOptions { margin: 40, outer_steps: 3, max_events: DEFAULT_MAX_EVENTS, family_alpha: 0.01, bins: 10, min_bin: 500 }
    }
}

/// One line of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct RkTestLine {
    pub group: &'static str,
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub samples: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RkReport {
    pub b: i64,
    pub h: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Per-test level after Bonferroni correction.
    pub per_test_alpha: f64,
    pub lines: Vec<RkTestLine>,
    pub notes: Vec<String>,
    pub mean_inner_first: f64,
    pub mean_right_first: f64,
    pub truncated_paths: usize,
}

impl RkReport {
    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }

    pub fn group_pass(&self, group: &str) -> bool {
        self.lines.iter().filter(|l| l.group == group).all(|l| l.pass)
    }
}

/// Simulates `n` walks (rate 1 to each neighbor) from 0 until the local
/// time at `b` reaches `h`, on the window `[-margin, b + margin]`. The window
/// walk is the trace of the walk on Z, so local times inside agree.
pub fn simulate_profiles(b: i64, h: f64, n: usize, seed: u64, opts: &RkOptions) -> Result<Vec<LocalTimeProfile>> {
    if b < 1 || !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument("need b >= 1 and h > 0".into()));
    }
    let lo = -opts.margin;
    let gen = Generator::line_srw(lo, b + opts.margin, 1.0)?;
    let sim = Simulator::new(&gen);
    let start = (0 - lo) as usize;
    let target = (b - lo) as usize;
    chunked_reduce(
        n,
        PATH_CHUNK,
        |range| {
            range
                .map(|i| {
                    let p = sim.sample_until_inverse_local_time(start, target, h, &mut path_rng(seed, i as u64), opts.max_events)?;
                    Ok(LocalTimeProfile::from_local_times(&p.local_times, lo, b, h))
                })
                .collect::<Result<Vec<_>>>()
        },
        |a, b| {
            let mut a = a?;
            a.extend(b?);
            Ok(a)
        },
    )
    .unwrap_or(Ok(Vec::new()))
}

struct Battery {
    lines: Vec<(RkTestLine, Kind)>,
    notes: Vec<String>,
}

enum Kind {
    Ks { n: usize, m: usize },
    Z,
    Fixed,
}

impl Battery {
    fn ks(&mut self, group: &'static str, name: String, a: &[f64], b: &[f64]) {
        if a.len() < 2 || b.len() < 2 {
            self.notes.push(format!("{name}: skipped ({} and {} samples)", a.len(), b.len()));
            return;
        }
        let d = ks_two_sample(a, b);
        self.lines.push((
            RkTestLine { group, name, statistic: d, threshold: f64::NAN, samples: a.len(), pass: false },
            Kind::Ks { n: a.len(), m: b.len() },
        ));
    }

    fn z(&mut self, group: &'static str, name: String, z: f64, samples: usize) {
        self.lines.push((RkTestLine { group, name, statistic: z.abs(), threshold: f64::NAN, samples, pass: false }, Kind::Z));
    }

    fn finish(self, alpha: f64) -> (f64, Vec<RkTestLine>, Vec<String>) {
        let m = self.lines.iter().filter(|(_, k)| !matches!(k, Kind::Fixed)).count().max(1);
        let per = alpha / m as f64;
        let zcrit = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(1.0 - per / 2.0);
        let lines = self
            .lines
            .into_iter()
            .map(|(mut l, k)| {
                l.threshold = match k {
                    Kind::Ks { n, m } => ks_critical(per, n, m),
                    Kind::Z => zcrit,
                    Kind::Fixed => l.threshold,
                };
                l.pass = l.statistic <= l.threshold;
                l
            })
            .collect();
        (per, lines, self.notes)
    }
}

fn reference_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_4ef_e4e0ce);
    rng.set_stream(stream);
    rng
}

/// Quantile bins of `(h1, h2)` pairs by `h1`, each with at least `min` pairs.
fn quantile_bins(mut pairs: Vec<(f64, f64)>, bins: usize, min: usize, notes: &mut Vec<String>, label: &str) -> Vec<Vec<(f64, f64)>> {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pairs.len();
    let mut k = bins.max(1);
    while k > 1 && n / k < min {
        k -= 1;
    }
    if k < bins {
        notes.push(format!("{label}: merged to {k} bins ({n} samples)"));
    }
    (0..k).map(|i| pairs[i * n / k..(i + 1) * n / k].to_vec()).collect()
}

/// Increments `h2 - h1` of the pairs with `h1` in the band; with
/// `continuous_only` the pairs absorbed at zero are left out.
fn in_band(pairs: &[(f64, f64)], center: f64, half: f64, continuous_only: bool) -> Vec<f64> {
    pairs
        .iter()
        .filter(|(h1, h2)| (h1 - center).abs() <= half && !(continuous_only && *h2 == 0.0))
        .map(|(h1, h2)| h2 - h1)
        .collect()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Simulates profiles and tests the inner kernel, the outer kernel,
/// homogeneity in the step index and independence of the three segments.
pub fn rk_statistical_test(b: i64, h: f64, n_paths: usize, seed: u64, opts: &RkOptions) -> Result<RkReport> {
    if n_paths < 2 * opts.min_bin {
        return Err(Error::InvalidArgument(format!("need at least {} paths", 2 * opts.min_bin)));
    }
    let profiles = simulate_profiles(b, h, n_paths, seed, opts)?;
    let bu = b as usize;
    let mut bat = Battery { lines: Vec::new(), notes: Vec::new() };
    let mut stream = 0u64;

    let inner_pairs: Vec<Vec<(f64, f64)>> =
        (0..bu).map(|x| profiles.iter().map(|p| (p.inner[x], p.inner[x + 1])).collect()).collect();
    for (x, pairs) in inner_pairs.iter().enumerate() {
        let label = format!("inner step {x}");
        for (k, bin) in quantile_bins(pairs.clone(), if x == 0 { 1 } else { opts.bins }, opts.min_bin, &mut bat.notes, &label)
            .into_iter()
            .enumerate()
        {
            let mut rng = reference_rng(seed, stream);
            stream += 1;
            let reference: Vec<f64> = bin.iter().map(|(h1, _)| sample_f(*h1, &mut rng)).collect();
            let obs: Vec<f64> = bin.iter().map(|p| p.1).collect();
            bat.ks("f-kernel", format!("{label} bin {k} [{:.3},{:.3}]", bin[0].0, bin[bin.len() - 1].0), &obs, &reference);
        }
    }
    let n = n_paths as f64;
    let first: Vec<f64> = profiles.iter().map(|p| p.inner[1]).collect();
    let mean_inner_first = first.iter().sum::<f64>() / n;
    let var_f = 2.0 * h + 1.0;
    bat.z("f-kernel", "mean l(b-1) = 1 + h".into(), (mean_inner_first - (1.0 + h)) / (var_f / n).sqrt(), n_paths);

    let step = |seg: &Vec<f64>, x: usize| -> Option<(f64, f64)> {
        let h1 = *seg.get(x)?;
        let h2 = *seg.get(x + 1).unwrap_or(&0.0);
        Some((h1, h2))
    };
    let sides: [(&str, Vec<&Vec<f64>>); 2] =
        [("right", profiles.iter().map(|p| &p.right).collect()), ("left", profiles.iter().map(|p| &p.left).collect())];
    let mut outer_pairs: Vec<Vec<Vec<(f64, f64)>>> = Vec::new();
    for (side, segs) in &sides {
        let mut per_step = Vec::new();
        for x in 0..opts.outer_steps {
            let pairs: Vec<(f64, f64)> = segs.iter().filter_map(|s| step(s, x)).filter(|(h1, _)| *h1 > 0.0).collect();
            if pairs.len() < opts.min_bin {
                bat.notes.push(format!("{side} step {x}: {} positive starts, not tested", pairs.len()));
                per_step.push(pairs);
                continue;
            }
            let zeros = pairs.iter().filter(|(_, h2)| *h2 == 0.0).count() as f64;
            let (mut e, mut v) = (0.0, 0.0);
            for (h1, _) in &pairs {
                let p = (-h1).exp();
                e += p;
                v += p * (1.0 - p);
            }
            bat.z("pstar-kernel", format!("{side} step {x} atom"), (zeros - e) / v.sqrt(), pairs.len());
            let mut rng = reference_rng(seed, stream);
            stream += 1;
            let reference: Vec<f64> =
                pairs.iter().map(|(h1, _)| sample_pstar(*h1, &mut rng)).filter(|v| *v > 0.0).collect();
            let obs: Vec<f64> = pairs.iter().map(|p| p.1).filter(|v| *v > 0.0).collect();
            bat.ks("pstar-kernel", format!("{side} step {x} continuous part"), &obs, &reference);
            per_step.push(pairs);
        }
        outer_pairs.push(per_step);
    }
    let right_first: Vec<f64> = profiles.iter().map(|p| p.right.get(1).copied().unwrap_or(0.0)).collect();
    let mean_right_first = right_first.iter().sum::<f64>() / n;
    bat.z("pstar-kernel", "mean l(b+1) = h".into(), (mean_right_first - h) / (2.0 * h / n).sqrt(), n_paths);

    let half = 0.05;
    let band_test = |bat: &mut Battery, name: String, a: &[(f64, f64)], bpairs: &[(f64, f64)], center: f64, outer: bool| {
        let da = in_band(a, center, half, outer);
        let db = in_band(bpairs, center, half, outer);
        if da.len() < opts.min_bin || db.len() < opts.min_bin {
            bat.notes.push(format!("{name}: {} and {} samples in band, not tested", da.len(), db.len()));
        } else {
            bat.ks("homogeneity", name, &da, &db);
        }
    };
    let centers = |a: &[(f64, f64)], b: &[(f64, f64)]| -> Vec<f64> {
        let mut pooled: Vec<f64> = a.iter().chain(b).map(|p| p.0).collect();
        pooled.sort_by(f64::total_cmp);
        if pooled.is_empty() {
            return Vec::new();
        }
        let mut c: Vec<f64> = [0.25, 0.5, 0.75].iter().map(|&q| quantile(&pooled, q)).collect();
        c.dedup_by(|x, y| (*x - *y).abs() < 2.0 * half);
        c
    };
    for x in 1..bu {
        band_test(&mut bat, format!("inner step 0 vs {x} at h1 = {h}"), &inner_pairs[0], &inner_pairs[x], h, false);
        if x + 1 < bu {
            for c in centers(&inner_pairs[x], &inner_pairs[x + 1]) {
                band_test(&mut bat, format!("inner step {x} vs {} at h1 = {c:.3}", x + 1), &inner_pairs[x], &inner_pairs[x + 1], c, false);
            }
        }
    }
    if let (Some(r0), Some(l0)) = (outer_pairs[0].first(), outer_pairs[1].first()) {
        band_test(&mut bat, format!("right step 0 vs left step 0 at h1 = {h}"), r0, l0, h, true);
    }
    for (si, side) in ["right", "left"].iter().enumerate() {
        for x in 0..opts.outer_steps.saturating_sub(1) {
            let (a, bp) = (&outer_pairs[si][x], &outer_pairs[si][x + 1]);
            for c in centers(a, bp) {
                if c > 0.0 {
                    band_test(&mut bat, format!("{side} step {x} vs {} at h1 = {c:.3}", x + 1), a, bp, c, true);
                }
            }
        }
    }

    let threshold = 4.0 / n.sqrt();
    let inner_last: Vec<f64> = profiles.iter().map(|p| p.inner[bu]).collect();
    let left_delta: Vec<f64> = profiles.iter().map(|p| p.left.get(1).copied().unwrap_or(0.0) - p.left[0]).collect();
    let pairs: [(&str, &[f64], &[f64]); 5] = [
        ("corr(l(b-1), l(b+1))", &first, &right_first),
        ("corr(l(0), l(b+1))", &inner_last, &right_first),
        ("corr(l(b-1), l(-1) - l(0))", &first, &left_delta),
        ("corr(l(0), l(-1) - l(0))", &inner_last, &left_delta),
        ("corr(l(b+1), l(-1) - l(0))", &right_first, &left_delta),
    ];
    for (name, x, y) in pairs {
        let r = correlation(x, y);
        bat.lines.push((
            RkTestLine { group: "independence", name: name.into(), statistic: r.abs(), threshold, samples: n_paths, pass: false },
            Kind::Fixed,
        ));
    }

    let truncated_paths = profiles.iter().filter(|p| p.truncated).count();
    let (per_test_alpha, lines, notes) = bat.finish(opts.family_alpha);
    Ok(RkReport { b, h, n_paths, seed, per_test_alpha, lines, notes, mean_inner_first, mean_right_first, truncated_paths })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_extraction() {
        // window -2..=4, b = 2
        let local = [0.0, 0.3, 0.5, 0.7, 1.0, 0.2, 0.0];
        let p = LocalTimeProfile::from_local_times(&local, -2, 2, 1.0);
        assert_eq!(p.inner, vec![1.0, 0.7, 0.5]);
        assert_eq!(p.right, vec![1.0, 0.2, 0.0]);
        assert_eq!(p.left, vec![0.5, 0.3, 0.0]);
        assert!(!p.truncated);
    }

    #[test]
    fn profiles_start_at_level() {
        let ps = simulate_profiles(2, 0.5, 200, 3, &RkOptions::default()).unwrap();
        assert!(ps.iter().all(|p| p.inner[0] == 0.5 && p.right[0] == 0.5 && p.inner.iter().all(|v| *v > 0.0)));
    }

    #[test]
    fn small_battery_passes() {
        let r = rk_statistical_test(2, 1.0, 20_000, 11, &RkOptions::default()).unwrap();
        for l in &r.lines {
            assert!(l.pass, "{l:?}");
        }
    }
}
