//! Random trees of a fixed size under the weight measure
//! `P(t) = w(t) / [x^n] F`, Monte Carlo statistics of `a_r`, and the
//! Kolmogorov-Smirnov distance of normalised samples to the standard normal.
//!
//! The main sampler is the recursive method: at a vertex whose fringe
//! subtree must have `m` vertices, pick the out-degree `k` with probability
//! proportional to `w_k [x^{m-1}] F^k`, then split the remaining `m - 1`
//! vertices among the `k` branches one branch at a time. The counts
//! `[x^j] F^k` are exact rationals in principle; they are converted once to
//! floats after rescaling `x -> lambda x` so that all table entries stay in
//! range (`lambda` approximates the radius of `F`).
//!
//! Random streams: samples are drawn in chunks of [`CHUNK_SIZE`]; chunk `i`
//! uses `ChaCha8Rng::seed_from_u64(seed)` switched to stream `i`. Results are
//! therefore identical for any number of worker threads.

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{self, LevelConstants};
use crate::error::{Error, Result};
use crate::series::compute_f;
use crate::tree::{removed_operational, TreeShape};
use crate::weights::{ln_rational, rational_to_f64, WeightFamily};

/// Samples per independent random stream.
pub const CHUNK_SIZE: usize = 1000;

/// Out-degrees whose combined probability at a given budget falls below this
/// fraction are dropped from the degree table.
pub const DEGREE_TAIL_CUTOFF: f64 = 1e-15;

/// Precomputed choice weights for sampling trees of one size.
#[derive(Debug, Clone)]
pub struct SamplerTables {
    family: WeightFamily,
    n: usize,
    /// `f_m = [x^m] F` for `m = 0..=n`.
    counts: Vec<BigRational>,
    /// `f_m lambda^m` as floats.
    scaled: Vec<f64>,
    /// `powers[k][j] = [x^j] F(lambda x)^k` for `j < n`.
    powers: Vec<Vec<f64>>,
    /// `w_k` as floats, for `k < powers.len()`.
    degree_weights: Vec<f64>,
    /// Largest out-degree kept at each budget `m` (index `m`).
    degree_cap: Vec<usize>,
    /// Sum of kept degree weights at each budget.
    degree_total: Vec<f64>,
}

impl SamplerTables {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> &WeightFamily {
        &self.family
    }

    /// Exact `f_m` for `m <= n`.
    pub fn counts(&self) -> &[BigRational] {
        &self.counts
    }

    /// Number of degree rows kept (largest usable out-degree plus one).
    pub fn degree_rows(&self) -> usize {
        self.powers.len()
    }

    /// Draw a tree. Iterative: pending subtrees live on an explicit stack.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TreeShape {
        let mut degrees = Vec::with_capacity(self.n);
        let mut pending = vec![self.n];
        let mut sizes = Vec::new();
        while let Some(m) = pending.pop() {
            let k = self.draw_degree(m, rng);
            degrees.push(k as u32);
            sizes.clear();
            let mut budget = m - 1;
            for left in (1..=k).rev() {
                let s = self.draw_branch_size(left, budget, rng);
                sizes.push(s);
                budget -= s;
            }
            debug_assert_eq!(budget, 0);
            // first branch must be expanded first
            pending.extend(sizes.iter().rev());
        }
        TreeShape::from_degrees(degrees).expect("sampler emits valid preorder sequences")
    }

    fn draw_degree<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> usize {
        if m == 1 {
            return 0;
        }
        let cap = self.degree_cap[m];
        let target = rng.random::<f64>() * self.degree_total[m];
        let mut acc = 0.0;
        let mut last = 0;
        for k in 1..=cap {
            let w = self.degree_weights[k] * self.powers[k][m - 1];
            if w > 0.0 {
                last = k;
                acc += w;
                if target < acc {
                    return k;
                }
            }
        }
        last
    }

    /// Size of the next branch when `left` branches share `budget` vertices.
    fn draw_branch_size<R: Rng + ?Sized>(&self, left: usize, budget: usize, rng: &mut R) -> usize {
        if left == 1 {
            return budget;
        }
        let rest = &self.powers[left - 1];
        let target = rng.random::<f64>() * self.powers[left][budget];
        let mut acc = 0.0;
        let mut last = 0;
        for s in 1..=budget + 1 - left {
            let w = self.scaled[s] * rest[budget - s];
            if w > 0.0 {
                last = s;
                acc += w;
                if target < acc {
                    return s;
                }
            }
        }
        last
    }
}

/// Tables for exact sampling at size `n`.
pub fn build_sampler_tables(f: &WeightFamily, n: usize) -> Result<SamplerTables> {
    if n == 0 || !f.size_matches_period(n) {
        return Err(Error::InvalidSize {
            n,
            period: f.period(),
        });
    }
    let counts = compute_f(f, n).coeffs().to_vec();
    if counts[n].is_zero() {
        return Err(Error::InvalidSize {
            n,
            period: f.period(),
        });
    }

    // ln lambda chosen so that f_1 lambda = f_n lambda^n (both O(1))
    let ln_lambda = if n > 1 {
        -(ln_rational(&counts[n]) - ln_rational(&counts[1])) / (n - 1) as f64
    } else {
        0.0
    };
    let scaled: Vec<f64> = counts
        .iter()
        .enumerate()
        .map(|(m, c)| {
            if c.is_zero() {
                0.0
            } else {
                (ln_rational(c) + m as f64 * ln_lambda).exp()
            }
        })
        .collect();

    // degree totals at budget m: sum_k w_k [x^{m-1}] F^k lambda^{m-1} = f_m lambda^{m-1}
    let totals: Vec<f64> = (0..=n)
        .map(|m| {
            if m == 0 || counts[m].is_zero() {
                0.0
            } else {
                (ln_rational(&counts[m]) + (m - 1) as f64 * ln_lambda).exp()
            }
        })
        .collect();

    let max_support = f.max_degree().unwrap_or(usize::MAX).min(n - 1);
    let mut powers: Vec<Vec<f64>> = Vec::new();
    let mut degree_weights = Vec::new();
    let mut row = vec![0.0; n];
    row[0] = 1.0;
    let mut cum = vec![0.0; n + 1];
    let mut negligible_run = vec![0usize; n + 1];
    let mut degree_cap = vec![0usize; n + 1];
    let mut done: Vec<bool> = (0..=n).map(|m| m <= 1 || counts[m].is_zero()).collect();
    let mut k = 0;
    loop {
        let w = rational_to_f64(&f.phi_coefficient(k));
        for m in 2..=n {
            if done[m] {
                continue;
            }
            let term = w * row[m - 1];
            cum[m] += term;
            if term > 0.0 {
                degree_cap[m] = k;
            }
            if term < 1e-3 * DEGREE_TAIL_CUTOFF * totals[m] {
                negligible_run[m] += 1;
            } else {
                negligible_run[m] = 0;
            }
            let infinite_tail = f.max_degree().is_none();
            let tail_small = totals[m] - cum[m] <= DEGREE_TAIL_CUTOFF * totals[m];
            if k >= m - 1
                || k >= max_support
                || (infinite_tail && k > 0 && (tail_small || negligible_run[m] >= 3))
            {
                done[m] = true;
            }
        }
        powers.push(row.clone());
        degree_weights.push(w);
        if k >= max_support || done.iter().all(|&d| d) {
            break;
        }
        // next power: row * F(lambda x)
        let next: Vec<f64> = (0..n)
            .map(|j| (1..=j).map(|s| scaled[s] * row[j - s]).sum())
            .collect();
        row = next;
        k += 1;
    }
    let degree_total: Vec<f64> = (0..=n)
        .map(|m| {
            if m < 2 {
                return 0.0;
            }
            (1..=degree_cap[m])
                .map(|k| degree_weights[k] * powers[k][m - 1])
                .sum()
        })
        .collect();

    // a branch split over `left` children reads powers[left]; make sure the
    // rows exist for every degree we may draw
    let needed = degree_cap.iter().copied().max().unwrap_or(0);
    while powers.len() <= needed {
        let last = powers.last().expect("row 0 exists");
        let next: Vec<f64> = (0..n)
            .map(|j| (1..=j).map(|s| scaled[s] * last[j - s]).sum())
            .collect();
        degree_weights.push(rational_to_f64(&f.phi_coefficient(powers.len())));
        powers.push(next);
    }

    Ok(SamplerTables {
        family: f.clone(),
        n,
        counts,
        scaled,
        powers,
        degree_weights,
        degree_cap,
        degree_total,
    })
}

pub fn sample_tree<R: Rng + ?Sized>(tables: &SamplerTables, rng: &mut R) -> TreeShape {
    tables.sample(rng)
}

/// Galton-Watson sampler conditioned on size by rejection, with offspring
/// law `pi_k = w_k tau^k / Phi(tau)`. Independent of the recursive tables;
/// used as a cross-check.
#[derive(Debug, Clone)]
pub struct GaltonWatsonSampler {
    n: usize,
    cdf: Vec<f64>,
}

impl GaltonWatsonSampler {
    pub fn new(f: &WeightFamily, n: usize) -> Result<Self> {
        if n == 0 || !f.size_matches_period(n) {
            return Err(Error::InvalidSize {
                n,
                period: f.period(),
            });
        }
        let consts = asymptotics::fundamental_constants(f)?;
        let tau = consts.tau;
        let phi_tau = f.phi_eval(tau, 0)?;
        let max_k = f.max_degree().unwrap_or(usize::MAX).min(n - 1);
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        let mut k = 0;
        let ln_tau = tau.ln();
        let ln_phi = phi_tau.ln();
        loop {
            let w = rational_to_f64(&f.phi_coefficient(k));
            let p = if w > 0.0 {
                (w.ln() + k as f64 * ln_tau - ln_phi).exp()
            } else {
                0.0
            };
            acc += p;
            cdf.push(acc);
            if k >= max_k || (f.max_degree().is_none() && 1.0 - acc < 1e-17 && k > 1) {
                break;
            }
            k += 1;
        }
        Ok(GaltonWatsonSampler { n, cdf })
    }

    fn draw_offspring<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().expect("nonempty cdf");
        let u = rng.random::<f64>() * total;
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }

    /// Draw until a tree with exactly `n` vertices appears.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TreeShape {
        let mut degrees = Vec::with_capacity(self.n);
        loop {
            degrees.clear();
            let mut open: usize = 1;
            while open > 0 && degrees.len() < self.n {
                let k = self.draw_offspring(rng);
                degrees.push(k as u32);
                open = open + k - 1;
            }
            if open == 0 && degrees.len() == self.n {
                return TreeShape::from_degrees(degrees.clone()).expect("closed GW sequence");
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMethod {
    #[default]
    Recursive,
    GaltonWatson,
}

/// Draw `count` values of `a_r` with the given method; deterministic in
/// `seed` and independent of the thread pool size.
pub fn sample_removed(
    f: &WeightFamily,
    r: usize,
    n: usize,
    count: usize,
    seed: u64,
    method: SamplerMethod,
) -> Result<Vec<usize>> {
    let chunks: Vec<(usize, usize)> = (0..count)
        .step_by(CHUNK_SIZE)
        .enumerate()
        .map(|(i, start)| (i, CHUNK_SIZE.min(count - start)))
        .collect();
    let run = |draw: &(dyn Fn(&mut ChaCha8Rng) -> TreeShape + Sync)| -> Vec<usize> {
        chunks
            .par_iter()
            .map(|&(index, len)| {
                let mut rng = chunk_rng(seed, index);
                (0..len)
                    .map(|_| removed_operational(&draw(&mut rng), r))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
            .concat()
    };
    Ok(match method {
        SamplerMethod::Recursive => {
            let tables = build_sampler_tables(f, n)?;
            run(&|rng| tables.sample(rng))
        }
        SamplerMethod::GaltonWatson => {
            let gw = GaltonWatsonSampler::new(f, n)?;
            run(&|rng| gw.sample(rng))
        }
    })
}

/// Random stream for chunk `index`.
pub fn chunk_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Summary of a Monte Carlo run.
#[derive(Debug, Clone, Serialize)]
pub struct SampleStats {
    pub family: String,
    pub r: usize,
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    pub method: SamplerMethod,
    pub degree_tail_cutoff: f64,
    #[serde(skip)]
    pub values: Vec<usize>,
    pub mean: f64,
    /// Unbiased sample variance; `None` for a single sample.
    pub variance: Option<f64>,
    /// Asymptotic constants, when the family has a fundamental constant.
    pub asymptotic: Option<LevelConstants>,
    /// `(a_r - mu_r n) / sqrt(sigma_r^2 n)`; absent when `sigma_r^2` vanishes.
    #[serde(skip)]
    pub residuals: Option<Vec<f64>>,
    pub ks: Option<f64>,
}

/// Variances below this are treated as zero when normalising residuals.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

pub fn monte_carlo(f: &WeightFamily, r: usize, n: usize, m: usize, seed: u64) -> Result<SampleStats> {
    monte_carlo_with(f, r, n, m, seed, SamplerMethod::Recursive)
}

pub fn monte_carlo_with(
    f: &WeightFamily,
    r: usize,
    n: usize,
    m: usize,
    seed: u64,
    method: SamplerMethod,
) -> Result<SampleStats> {
    if r == 0 {
        return Err(Error::InvalidArgument("r must be >= 1".into()));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let values = sample_removed(f, r, n, m, seed, method)?;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / m as f64;
    let variance = (m >= 2).then(|| {
        values
            .iter()
            .map(|&v| (v as f64 - mean).powi(2))
            .sum::<f64>()
            / (m - 1) as f64
    });
    let asymptotic = asymptotics::mu_sigma(f, r).ok();
    let residuals = asymptotic
        .filter(|l| l.sigma2 > DEGENERATE_VARIANCE)
        .map(|l| normalised_residuals(&values, n, l.mu, l.sigma2));
    let ks = residuals.as_deref().map(ks_normal);
    Ok(SampleStats {
        family: f.to_string(),
        r,
        n,
        count: m,
        seed,
        method,
        degree_tail_cutoff: DEGREE_TAIL_CUTOFF,
        values,
        mean,
        variance,
        asymptotic,
        residuals,
        ks,
    })
}

pub fn normalised_residuals(values: &[usize], n: usize, mu: f64, sigma2: f64) -> Vec<f64> {
    let center = mu * n as f64;
    let scale = (sigma2 * n as f64).sqrt();
    values.iter().map(|&v| (v as f64 - center) / scale).collect()
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// `sup_x |F_m(x) - Phi(x)|` for the empirical distribution function `F_m`
/// of `residuals` and the standard normal `Phi`.
pub fn ks_normal(residuals: &[f64]) -> f64 {
    assert!(!residuals.is_empty(), "KS distance needs at least one point");
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = normal_cdf(x);
            ((i + 1) as f64 / m - cdf).max(cdf - i as f64 / m)
        })
        .fold(0.0, f64::max)
}

/// Distance between the empirical distribution function of integer values
/// and the normal law with the same centring and scale, both read on the
/// integer lattice: `max_v |F_m(v) - Phi((v + 1/2 - center) / scale)|`.
pub fn ks_normal_lattice(values: &[usize], center: f64, scale: f64) -> f64 {
    assert!(!values.is_empty(), "KS distance needs at least one point");
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let m = sorted.len() as f64;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        while i < sorted.len() && sorted[i] == v {
            i += 1;
        }
        let below = sorted.partition_point(|&x| x < v) as f64 / m;
        let at = i as f64 / m;
        let z = normal_cdf((v as f64 + 0.5 - center) / scale);
        let z_prev = normal_cdf((v as f64 - 0.5 - center) / scale);
        worst = worst.max((at - z).abs()).max((below - z_prev).abs());
    }
    worst
}
