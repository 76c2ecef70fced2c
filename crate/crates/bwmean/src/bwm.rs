//! The Bernoulli-weighted mean μ̂ = ΣY_iT_i/ΣT_i (0 when all gates are
//! closed) and its standardization Z = √N(μ̂−μ)/σ. Three CDF surfaces:
//!
//! * `mixture_cdf` — the exact finite-n decomposition
//!   F_Z(x) = Σ_{k=1}^n P(N=k)·F_k(x) + 1{x≥0}(1−p)^n,
//!   with the per-k CDF either exact (Gamma convolution) or replaced by its
//!   order-q expansion;
//! * `bwm_edgeworth_cdf` — the closed-form expansion
//!   Φ(x) + Σ_j n^{-j/2} p*_j(x) φ(x) with recombined polynomials p*_j;
//! * sup-norm error reports between any two of these on a shared grid.

use serde::Serialize;

use crate::binomial::{bernoulli_sum, inverse_moment_coefficients, BinomialParams};
use crate::distributions::{
    exact_standardized_mean_cdf, standardized_moments, CumulantSet, DistributionSpec,
};
use crate::edgeworth::{edgeworth_polynomials, normal_cdf, normal_pdf, ExpansionSet, Polynomial};
use crate::error::{Error, Result};

/// Which per-k CDF enters the mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerKMode {
    /// Exact Gamma-convolution oracle (Exponential/Gamma families only).
    OracleExact,
    /// Order-q expansion of each F_k.
    Edgeworth,
}

/// A fully validated problem instance: law of Y, gating parameters, order.
#[derive(Debug, Clone)]
pub struct BwmProblem {
    pub d: DistributionSpec,
    pub b: BinomialParams,
    pub q: u32,
}

impl BwmProblem {
    pub fn new(d: DistributionSpec, b: BinomialParams, q: u32) -> Result<BwmProblem> {
        if !(3..=4).contains(&q) {
            return Err(Error::UnsupportedOrder(q));
        }
        if !d.is_continuous() {
            return Err(Error::IllegalParameter(
                "weighted-mean expansion needs a continuous (non-lattice) summand family".into(),
            ));
        }
        if d.variance() <= 0.0 {
            return Err(Error::DegenerateDistribution(d.family_name().to_string()));
        }
        Ok(BwmProblem { d, b, q })
    }
}

// Full summation below this size; above it, terms with pmf < 1e-18 are
// pruned (they are beyond double precision for any CDF-scale target).
const FULL_SUM_LIMIT: u64 = 100_000;
const PRUNE_MASS: f64 = 1e-18;

/// Exact mixture CDF of Z on a grid of x values (ascending not required).
/// The atom at zero enters as an explicit indicator term, so the jump is
/// represented exactly.
pub fn mixture_cdf_grid(prob: &BwmProblem, xs: &[f64], mode: PerKMode) -> Result<Vec<f64>> {
    let n = prob.b.n;
    let p = prob.b.p;
    let atom = prob.b.atom_at_zero();
    let mut out: Vec<f64> = match mode {
        PerKMode::Edgeworth => {
            // Σ_k pmf(k) [Φ + Σ_j k^{-j/2} p_j φ] factorizes through the
            // Bernoulli sums of k^{-j/2}; this is the same value as the
            // term-by-term mixture, computed with compensated sums.
            let c = standardized_moments(&prob.d, prob.q)?;
            let set = edgeworth_polynomials(&c, prob.q)?;
            let mass = 1.0 - atom; // Σ_{k>=1} pmf(k)
            let weights: Vec<f64> =
                set.terms.iter().map(|(e, _)| bernoulli_sum(&prob.b, *e)).collect();
            xs.iter()
                .map(|&x| {
                    let mut v = mass * normal_cdf(x);
                    let pdf = normal_pdf(x);
                    for ((_, poly), w) in set.terms.iter().zip(&weights) {
                        v += w * poly.eval(x) * pdf;
                    }
                    v
                })
                .collect()
        }
        PerKMode::OracleExact => {
            if !prob.d.has_exact_oracle() {
                return Err(Error::NoClosedFormOracle(prob.d.family_name()));
            }
            // Neumaier-compensated accumulation per grid point, k visited
            // from the pmf mode outward.
            let mut sums = vec![0.0f64; xs.len()];
            let mut comps = vec![0.0f64; xs.len()];
            let mut add_k = |k: u64| -> Result<()> {
                let w = crate::binomial::binom_pmf(&prob.b, k as i64)?;
                if n > FULL_SUM_LIMIT && w < PRUNE_MASS {
                    return Ok(());
                }
                if w == 0.0 {
                    return Ok(());
                }
                for (i, &x) in xs.iter().enumerate() {
                    let v = w * exact_standardized_mean_cdf(&prob.d, k, x)?;
                    let t = sums[i] + v;
                    if sums[i].abs() >= v.abs() {
                        comps[i] += (sums[i] - t) + v;
                    } else {
                        comps[i] += (v - t) + sums[i];
                    }
                    sums[i] = t;
                }
                Ok(())
            };
            let mode_k = (((n + 1) as f64 * p).floor() as u64).clamp(1, n);
            add_k(mode_k)?;
            let (mut below, mut above) = (mode_k, mode_k);
            loop {
                let mut moved = false;
                if below > 1 {
                    below -= 1;
                    add_k(below)?;
                    moved = true;
                }
                if above < n {
                    above += 1;
                    add_k(above)?;
                    moved = true;
                }
                if !moved {
                    break;
                }
            }
            sums.iter().zip(&comps).map(|(s, c)| s + c).collect()
        }
    };
    for (v, &x) in out.iter_mut().zip(xs) {
        if x >= 0.0 {
            *v += atom;
        }
    }
    Ok(out)
}

/// Scalar form of `mixture_cdf_grid`.
pub fn mixture_cdf(prob: &BwmProblem, x: f64, mode: PerKMode) -> Result<f64> {
    Ok(mixture_cdf_grid(prob, &[x], mode)?[0])
}

/// Recombined correction polynomials p*_k, k = 1..q-2:
///
///   p*_k(x) = p^{-k/2} · Σ_{j+2i=k, j≥1, i≥0} C_{j/2, i} · p_j(x)
///
/// where C are the inverse-moment expansion coefficients. The grouping is by
/// total exponent of n^{-1/2}: the j-th per-k polynomial carries k^{-j/2},
/// and replacing the Bernoulli sum of k^{-j/2} by its expansion spreads that
/// term over n^{-(j+2i)/2} p^{-(j+2i)/2} with weights C_{j/2,i}. Coefficient
/// tables are requested with K_j = q-2+⌈j/2⌉ orders, the truncation depth
/// that keeps every discarded term at or below n^{-(q-1)/2}.
pub fn star_polynomials(c: &CumulantSet, q: u32, p: f64) -> Result<ExpansionSet> {
    if !(3..=4).contains(&q) {
        return Err(Error::UnsupportedOrder(q));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::IllegalParameter(format!("star polynomials need p in (0,1], got {p}")));
    }
    let base = edgeworth_polynomials(c, q)?;
    let mut terms = Vec::new();
    for k in 1..=(q - 2) {
        let mut star = Polynomial::zero();
        for j in 1..=k {
            if (k - j) % 2 != 0 {
                continue; // parity of contributing j matches parity of k
            }
            let i = ((k - j) / 2) as usize;
            let alpha = j as f64 / 2.0;
            let orders = (q - 2) as usize + (j as usize + 1) / 2;
            let coeff = if p == 1.0 {
                // Binomial(n,1) is degenerate: all central moments vanish,
                // so C_0 = 1 and every higher coefficient is exactly 0.
                if i == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                inverse_moment_coefficients(alpha, orders.max(i + 1), p)?.c[i]
            };
            let p_j = &base.terms[(j - 1) as usize].1;
            star = star.add_scaled(p_j, coeff);
        }
        let scale = p.powf(-(k as f64) / 2.0);
        terms.push((-(k as f64) / 2.0, star.scaled(scale)));
    }
    Ok(ExpansionSet { q, terms })
}

/// Closed-form expansion Φ(x) + Σ_j n^{-j/2} p*_j(x) φ(x); unclamped.
pub fn bwm_edgeworth_cdf(prob: &BwmProblem, x: f64) -> Result<f64> {
    let c = standardized_moments(&prob.d, prob.q)?;
    let stars = star_polynomials(&c, prob.q, prob.b.p)?;
    Ok(stars.eval_cdf(prob.b.n as f64, x))
}

/// Grid form of `bwm_edgeworth_cdf`.
pub fn bwm_edgeworth_grid(prob: &BwmProblem, xs: &[f64]) -> Result<Vec<f64>> {
    let c = standardized_moments(&prob.d, prob.q)?;
    let stars = star_polynomials(&c, prob.q, prob.b.p)?;
    let n = prob.b.n as f64;
    Ok(xs.iter().map(|&x| stars.eval_cdf(n, x)).collect())
}

/// Default evaluation grid: x ∈ [-8, 8] in steps of 0.01, with both sides of
/// the jump at 0 represented (x = -1e-9 and x = 0 exactly).
pub fn default_grid() -> Vec<f64> {
    let mut grid = Vec::with_capacity(1602);
    for i in 0..=1600i64 {
        let x = (i - 800) as f64 / 100.0;
        if x == 0.0 {
            grid.push(-1e-9);
        }
        grid.push(x);
    }
    grid
}

/// One sweep entry: sup-norm error at a single n, raw and rescaled by the
/// target rate n^{(q-1)/2}.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n: u64,
    pub sup_error: f64,
    pub scaled_error: f64,
}

/// Sup-norm comparison of two curves on a shared grid, optionally extended
/// with a per-n table and a fitted log-log slope when produced by a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct UniformErrorReport {
    pub grid: Vec<f64>,
    pub sup_error: f64,
    pub argmax_x: f64,
    pub per_n: Vec<SweepRow>,
    pub fitted_slope: Option<f64>,
}

impl UniformErrorReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// CSV rows (n, p, q, family, supError, scaledError, fittedSlope), one
    /// per sweep entry; the slope column repeats the single fitted value.
    pub fn sweep_to_csv(&self, family: &str, p: f64, q: u32) -> String {
        let mut out = String::from("n,p,q,family,supError,scaledError,fittedSlope\n");
        let slope = self.fitted_slope.map(|s| s.to_string()).unwrap_or_default();
        for row in &self.per_n {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.n, p, q, family, row.sup_error, row.scaled_error, slope
            ));
        }
        out
    }
}

/// Max pointwise absolute difference of two curves over a shared grid.
pub fn sup_error(f: &[f64], g: &[f64], grid: &[f64]) -> Result<UniformErrorReport> {
    if f.len() != g.len() {
        return Err(Error::GridMismatch { left: f.len(), right: g.len() });
    }
    if f.len() != grid.len() {
        return Err(Error::GridMismatch { left: f.len(), right: grid.len() });
    }
    if grid.is_empty() {
        return Err(Error::GridMismatch { left: 0, right: 0 });
    }
    let mut sup = -1.0;
    let mut argmax = grid[0];
    for i in 0..f.len() {
        let d = (f[i] - g[i]).abs();
        if d > sup {
            sup = d;
            argmax = grid[i];
        }
    }
    Ok(UniformErrorReport {
        grid: grid.to_vec(),
        sup_error: sup,
        argmax_x: argmax,
        per_n: Vec::new(),
        fitted_slope: None,
    })
}

/// Least-squares slope of ln(y) against ln(x). Points with y = 0 would be
/// singular and are rejected upstream by construction.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..lx.len() {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    num / den
}

/// Sup-error sweep over sample sizes: for each n, compare the mixture under
/// `mode` against the closed-form expansion on the grid; fit the log-log
/// slope when at least 3 sizes are given. The report's headline sup/argmax
/// are those of the largest size.
pub fn sweep_sup_error(
    d: &DistributionSpec,
    p: f64,
    q: u32,
    sizes: &[u64],
    mode: PerKMode,
    grid: &[f64],
) -> Result<UniformErrorReport> {
    if sizes.is_empty() {
        return Err(Error::IllegalParameter("sweep needs at least one size".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::IllegalParameter("sweep sizes must be strictly increasing".into()));
    }
    let mut per_n = Vec::with_capacity(sizes.len());
    let mut last: Option<UniformErrorReport> = None;
    for &n in sizes {
        let prob = BwmProblem::new(d.clone(), BinomialParams::new(n, p)?, q)?;
        let f = mixture_cdf_grid(&prob, grid, mode)?;
        let g = bwm_edgeworth_grid(&prob, grid)?;
        let r = sup_error(&f, &g, grid)?;
        per_n.push(SweepRow {
            n,
            sup_error: r.sup_error,
            scaled_error: r.sup_error * (n as f64).powf((q as f64 - 1.0) / 2.0),
        });
        last = Some(r);
    }
    let mut report = last.unwrap();
    if sizes.len() >= 3 {
        let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
        let ys: Vec<f64> = per_n.iter().map(|r| r.sup_error).collect();
        report.fitted_slope = Some(fit_loglog_slope(&xs, &ys));
    }
    report.per_n = per_n;
    Ok(report)
}
