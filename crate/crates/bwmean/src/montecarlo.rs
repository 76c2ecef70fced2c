//! Direct simulation of Z = √N(μ̂−μ)/σ with a counter-based generator:
//! replication r draws from a stream keyed by (seed, r), so the output
//! vector is identical for any number of worker streams and any chunking.

use serde::Serialize;

use crate::bwm::{mixture_cdf_grid, BwmProblem, PerKMode};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub prob: BwmProblem,
    pub reps: u64,
    pub seed: u64,
    pub streams: u64,
}

impl SimConfig {
    pub fn new(prob: BwmProblem, reps: u64, seed: u64, streams: u64) -> Result<SimConfig> {
        if reps == 0 {
            return Err(Error::EmptySample);
        }
        if streams == 0 || streams > reps {
            return Err(Error::IllegalParameter(format!(
                "streams must be in 1..=reps, got {streams} for {reps} reps"
            )));
        }
        Ok(SimConfig { prob, reps, seed, streams })
    }
}

// P(N <= k) for k = 0..=n, ascending compensated partial sums
fn binomial_cdf_table(prob: &BwmProblem) -> Vec<f64> {
    let n = prob.b.n;
    let mut cum = Vec::with_capacity(n as usize + 1);
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for k in 0..=n {
        let w = crate::binomial::binom_pmf(&prob.b, k as i64).expect("k is in range");
        let t = s + w;
        if s.abs() >= w.abs() {
            c += (s - t) + w;
        } else {
            c += (w - t) + s;
        }
        s = t;
        cum.push(s + c);
    }
    cum
}

fn sample_one(prob: &BwmProblem, cum: &[f64], rng: &mut SplitMix64) -> f64 {
    let u = rng.next_f64();
    // smallest k with P(N <= k) > u; pmf(k) mass maps to k
    let n_draw = cum.partition_point(|&cv| cv <= u).min(prob.b.n as usize) as u64;
    if n_draw == 0 {
        return 0.0; // μ̂ is defined as 0 on the empty-gate event
    }
    let mu = prob.d.mean();
    let sigma = prob.d.variance().sqrt();
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for _ in 0..n_draw {
        let v = prob.d.sample(rng);
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    let total = s + c;
    (total - n_draw as f64 * mu) / ((n_draw as f64).sqrt() * sigma)
}

/// All replications, ordered by global replication index. Stream workers
/// fill disjoint contiguous chunks; replication r always uses the generator
/// keyed by (seed, r), so the result does not depend on `streams`.
pub fn sample_z(cfg: &SimConfig) -> Result<Vec<f64>> {
    let cum = binomial_cdf_table(&cfg.prob);
    let reps = cfg.reps as usize;
    let mut out = vec![0.0f64; reps];
    if cfg.streams == 1 {
        for (r, slot) in out.iter_mut().enumerate() {
            let mut rng = SplitMix64::for_replication(cfg.seed, r as u64);
            *slot = sample_one(&cfg.prob, &cum, &mut rng);
        }
        return Ok(out);
    }
    let streams = cfg.streams as usize;
    std::thread::scope(|scope| {
        let mut rest = out.as_mut_slice();
        let mut start = 0usize;
        for s in 0..streams {
            let end = (s + 1) * reps / streams;
            let (chunk, tail) = rest.split_at_mut(end - start);
            let prob = &cfg.prob;
            let cum = &cum;
            let seed = cfg.seed;
            scope.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    let mut rng = SplitMix64::for_replication(seed, (start + i) as u64);
                    *slot = sample_one(prob, cum, &mut rng);
                }
            });
            rest = tail;
            start = end;
        }
    });
    Ok(out)
}

/// Right-continuous empirical CDF over a frozen sample.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }
}

pub fn empirical_cdf(samples: &[f64]) -> Result<EmpiricalCdf> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(EmpiricalCdf { sorted })
}

/// Dvoretzky–Kiefer–Wolfowitz half-width: with probability >= confidence the
/// empirical CDF stays within ε = √(ln(2/(1−confidence)) / (2·reps)) of the
/// truth simultaneously for all x.
pub fn dkw_band(reps: u64, confidence: f64) -> Result<f64> {
    if reps == 0 {
        return Err(Error::EmptySample);
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::IllegalParameter(format!(
            "confidence must be in (0,1), got {confidence}"
        )));
    }
    Ok(((2.0 / (1.0 - confidence)).ln() / (2.0 * reps as f64)).sqrt())
}

/// Fraction of replications that landed exactly on the atom at 0.
pub fn atom_frequency(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|&&z| z == 0.0).count() as f64 / samples.len() as f64
}

/// Simulation vs exact-mixture comparison on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct McSummary {
    pub reps: u64,
    pub seed: u64,
    pub streams: u64,
    pub grid_points: usize,
    pub sup_deviation: f64,
    pub dkw_epsilon: f64,
    pub inside_band: bool,
    pub atom_frequency: f64,
    pub expected_atom: f64,
    pub atom_standard_errors: f64,
}

impl McSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serialization cannot fail")
    }
}

/// McSummary plus the two curves it was computed from, on the caller's grid.
#[derive(Debug, Clone)]
pub struct McComparison {
    pub summary: McSummary,
    pub empirical: Vec<f64>,
    pub exact: Vec<f64>,
}

/// Simulate, build the empirical CDF, and compare it at every grid point to
/// the exact mixture CDF (oracle per-k terms), against the DKW band of the
/// given confidence.
pub fn mc_compare(cfg: &SimConfig, grid: &[f64], confidence: f64) -> Result<McComparison> {
    let eps = dkw_band(cfg.reps, confidence)?;
    let exact = mixture_cdf_grid(&cfg.prob, grid, PerKMode::OracleExact)?;
    let samples = sample_z(cfg)?;
    let ecdf = empirical_cdf(&samples)?;
    let empirical: Vec<f64> = grid.iter().map(|&x| ecdf.eval(x)).collect();
    let mut sup = 0.0f64;
    for (e, f) in empirical.iter().zip(&exact) {
        sup = sup.max((e - f).abs());
    }
    let freq = atom_frequency(&samples);
    let expected = cfg.prob.b.atom_at_zero();
    let se = (expected * (1.0 - expected) / cfg.reps as f64).sqrt();
    let summary = McSummary {
        reps: cfg.reps,
        seed: cfg.seed,
        streams: cfg.streams,
        grid_points: grid.len(),
        sup_deviation: sup,
        dkw_epsilon: eps,
        inside_band: sup <= eps,
        atom_frequency: freq,
        expected_atom: expected,
        atom_standard_errors: if se > 0.0 { (freq - expected).abs() / se } else { 0.0 },
    };
    Ok(McComparison { summary, empirical, exact })
}

/// `mc_compare` reduced to its summary.
pub fn mc_check(cfg: &SimConfig, grid: &[f64], confidence: f64) -> Result<McSummary> {
    Ok(mc_compare(cfg, grid, confidence)?.summary)
}
