//! Parametric laws for the summands Y: closed-form moments, samplers, and
//! the exact standardized-mean CDF oracle for the Gamma-convolution families.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::special::gamma_p;

/// A validated distribution for Y. Continuous families are usable everywhere;
/// `FiniteDiscrete` exists for the lattice diagnostics and is rejected by the
/// expansion machinery (it violates the non-lattice hypothesis there).
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    Gamma { shape: f64, scale: f64 },
    LogNormal { log_mean: f64, log_sd: f64 },
    FiniteDiscrete { atoms: Vec<f64>, probs: Vec<f64> },
}

use DistributionSpec::*;

pub fn make_exponential(rate: f64) -> Result<DistributionSpec> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::IllegalParameter(format!("exponential rate must be > 0, got {rate}")));
    }
    Ok(Exponential { rate })
}

pub fn make_uniform(lo: f64, hi: f64) -> Result<DistributionSpec> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::IllegalParameter(format!("uniform needs lo < hi, got [{lo}, {hi}]")));
    }
    Ok(Uniform { lo, hi })
}

pub fn make_gamma(shape: f64, scale: f64) -> Result<DistributionSpec> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::IllegalParameter(format!("gamma shape must be > 0, got {shape}")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::IllegalParameter(format!("gamma scale must be > 0, got {scale}")));
    }
    Ok(Gamma { shape, scale })
}

pub fn make_lognormal(log_mean: f64, log_sd: f64) -> Result<DistributionSpec> {
    if !log_mean.is_finite() {
        return Err(Error::IllegalParameter(format!("lognormal log-mean must be finite, got {log_mean}")));
    }
    if !(log_sd > 0.0 && log_sd.is_finite()) {
        return Err(Error::IllegalParameter(format!("lognormal log-sd must be > 0, got {log_sd}")));
    }
    Ok(LogNormal { log_mean, log_sd })
}

pub fn make_finite_discrete(atoms: Vec<f64>, probs: Vec<f64>) -> Result<DistributionSpec> {
    if atoms.is_empty() {
        return Err(Error::EmptySupport);
    }
    if atoms.len() != probs.len() {
        return Err(Error::IllegalParameter(format!(
            "finite support: {} atoms vs {} probabilities",
            atoms.len(),
            probs.len()
        )));
    }
    if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::IllegalParameter("finite support: negative or non-finite probability".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::IllegalParameter(format!("finite support: probabilities sum to {total}, not 1")));
    }
    for i in 0..atoms.len() {
        if !atoms[i].is_finite() {
            return Err(Error::IllegalParameter("finite support: non-finite atom".into()));
        }
        for j in (i + 1)..atoms.len() {
            if atoms[i] == atoms[j] {
                return Err(Error::IllegalParameter(format!("finite support: duplicate atom {}", atoms[i])));
            }
        }
    }
    Ok(FiniteDiscrete { atoms, probs })
}

impl DistributionSpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            Exponential { .. } => "exponential",
            Uniform { .. } => "uniform",
            Gamma { .. } => "gamma",
            LogNormal { .. } => "lognormal",
            FiniteDiscrete { .. } => "finite",
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, FiniteDiscrete { .. })
    }

    pub fn mean(&self) -> f64 {
        match self {
            Exponential { rate } => 1.0 / rate,
            Uniform { lo, hi } => 0.5 * (lo + hi),
            Gamma { shape, scale } => shape * scale,
            LogNormal { log_mean, log_sd } => (log_mean + 0.5 * log_sd * log_sd).exp(),
            FiniteDiscrete { atoms, probs } => {
                atoms.iter().zip(probs).map(|(a, p)| a * p).sum()
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Exponential { rate } => 1.0 / (rate * rate),
            Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            Gamma { shape, scale } => shape * scale * scale,
            LogNormal { log_mean, log_sd } => {
                let w = (log_sd * log_sd).exp();
                (w - 1.0) * (2.0 * log_mean + log_sd * log_sd).exp()
            }
            FiniteDiscrete { atoms, probs } => {
                let m = self.mean();
                atoms.iter().zip(probs).map(|(a, p)| (a - m) * (a - m) * p).sum()
            }
        }
    }

    /// True when `exact_standardized_mean_cdf` has a closed form.
    pub fn has_exact_oracle(&self) -> bool {
        matches!(self, Exponential { .. } | Gamma { .. })
    }

    /// One draw of Y.
    pub fn sample(&self, rng: &mut SplitMix64) -> f64 {
        match self {
            Exponential { rate } => rng.next_exponential(*rate),
            Uniform { lo, hi } => lo + (hi - lo) * rng.next_f64(),
            Gamma { shape, scale } => rng.next_gamma(*shape, *scale),
            LogNormal { log_mean, log_sd } => (log_mean + log_sd * rng.next_normal()).exp(),
            FiniteDiscrete { atoms, probs } => {
                let u = rng.next_f64();
                let mut acc = 0.0;
                for (a, p) in atoms.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *a;
                    }
                }
                *atoms.last().unwrap()
            }
        }
    }
}

/// Standardized moment inputs to the correction polynomials:
/// `lambda(3)` is the skewness, `lambda(4)` the excess kurtosis.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantSet {
    q: u32,
    lambda: Vec<f64>,
}

impl CumulantSet {
    /// `lambda[0]` is λ₃, `lambda[1]` is λ₄, ...; entries 3..q must be present.
    pub fn new(q: u32, lambda: Vec<f64>) -> Result<CumulantSet> {
        if q < 3 {
            return Err(Error::UnsupportedOrder(q));
        }
        if lambda.len() != (q - 2) as usize {
            return Err(Error::IllegalParameter(format!(
                "cumulant set for q={q} needs {} entries, got {}",
                q - 2,
                lambda.len()
            )));
        }
        if q >= 4 {
            let l3 = lambda[0];
            let l4 = lambda[1];
            // moment feasibility: kurtosis >= skewness^2 - 2
            if l4 < l3 * l3 - 2.0 - 1e-12 {
                return Err(Error::IllegalParameter(format!(
                    "infeasible moments: lambda4={l4} < lambda3^2 - 2 = {}",
                    l3 * l3 - 2.0
                )));
            }
        }
        Ok(CumulantSet { q, lambda })
    }

    /// All-zero cumulants: the expansion collapses to the normal CDF.
    pub fn gaussian(q: u32) -> CumulantSet {
        CumulantSet { q: q.max(3), lambda: vec![0.0; (q.max(3) - 2) as usize] }
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    /// λ_j for j in 3..=q.
    pub fn lambda(&self, j: u32) -> f64 {
        assert!((3..=self.q).contains(&j), "lambda index {j} outside 3..={}", self.q);
        self.lambda[(j - 3) as usize]
    }
}

/// Closed-form standardized moments of Y up to order q (3 ≤ q ≤ 4).
pub fn standardized_moments(d: &DistributionSpec, q: u32) -> Result<CumulantSet> {
    if q < 3 {
        return Err(Error::UnsupportedOrder(q));
    }
    if q > 4 {
        return Err(Error::UnsupportedOrder(q));
    }
    let var = d.variance();
    if var <= 0.0 {
        return Err(Error::DegenerateDistribution(format!("{} with zero variance", d.family_name())));
    }
    let (l3, l4) = match d {
        Exponential { .. } => (2.0, 6.0),
        Uniform { .. } => (0.0, -1.2),
        Gamma { shape, .. } => (2.0 / shape.sqrt(), 6.0 / shape),
        LogNormal { log_sd, .. } => {
            let w = (log_sd * log_sd).exp();
            let skew = (w + 2.0) * (w - 1.0).sqrt();
            let exkurt = w * w * w * w + 2.0 * w * w * w + 3.0 * w * w - 6.0;
            (skew, exkurt)
        }
        FiniteDiscrete { atoms, probs } => {
            let m: f64 = d.mean();
            let sd = var.sqrt();
            let mut m3 = 0.0;
            let mut m4 = 0.0;
            for (a, p) in atoms.iter().zip(probs) {
                let z = (a - m) / sd;
                m3 += z * z * z * p;
                m4 += z * z * z * z * p;
            }
            (m3, m4 - 3.0)
        }
    };
    let lambda = if q == 3 { vec![l3] } else { vec![l3, l4] };
    CumulantSet::new(q, lambda)
}

/// Exact CDF of Z_k = √k (Ȳ_k − μ)/σ where Ȳ_k is the mean of k i.i.d.
/// copies of Y. Closed form exists for the Gamma-convolution families:
/// the k-fold sum is Gamma(k·shape, scale), so with a = k·shape,
/// F(x) = P(a, a + √a·x) independent of the scale.
pub fn exact_standardized_mean_cdf(d: &DistributionSpec, k: u64, x: f64) -> Result<f64> {
    if k < 1 {
        return Err(Error::IllegalParameter("standardized mean needs k >= 1".into()));
    }
    let shape = match d {
        Exponential { .. } => 1.0,
        Gamma { shape, .. } => *shape,
        other => return Err(Error::NoClosedFormOracle(other.family_name())),
    };
    let a = k as f64 * shape;
    let arg = a + a.sqrt() * x;
    if arg <= 0.0 {
        return Ok(0.0);
    }
    Ok(gamma_p(a, arg))
}

/// Render a spec in the key-value schema, e.g. `family=gamma shape=4 scale=2`.
/// Floats print in shortest round-tripping form; `parse_spec` inverts this.
pub fn format_spec(d: &DistributionSpec) -> String {
    match d {
        Exponential { rate } => format!("family=exponential rate={rate}"),
        Uniform { lo, hi } => format!("family=uniform lo={lo} hi={hi}"),
        Gamma { shape, scale } => format!("family=gamma shape={shape} scale={scale}"),
        LogNormal { log_mean, log_sd } => {
            format!("family=lognormal logmean={log_mean} logsd={log_sd}")
        }
        FiniteDiscrete { atoms, probs } => {
            let a: Vec<String> = atoms.iter().map(|v| v.to_string()).collect();
            let p: Vec<String> = probs.iter().map(|v| v.to_string()).collect();
            format!("family=finite atoms={} probs={}", a.join(","), p.join(","))
        }
    }
}

/// Parse the key-value schema produced by `format_spec`. Unknown or missing
/// keys are rejected.
pub fn parse_spec(text: &str) -> Result<DistributionSpec> {
    let mut family: Option<&str> = None;
    let mut fields: Vec<(&str, &str)> = Vec::new();
    for tok in text.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| Error::IllegalParameter(format!("expected key=value, got '{tok}'")))?;
        if key == "family" {
            family = Some(value);
        } else {
            fields.push((key, value));
        }
    }
    let family = family.ok_or_else(|| Error::IllegalParameter("missing family=...".into()))?;

    fn num(fields: &[(&str, &str)], key: &str) -> Result<f64> {
        for (k, v) in fields {
            if *k == key {
                return v
                    .parse()
                    .map_err(|_| Error::IllegalParameter(format!("bad number for {key}: '{v}'")));
            }
        }
        Err(Error::IllegalParameter(format!("missing {key}=...")))
    }
    fn num_list(fields: &[(&str, &str)], key: &str) -> Result<Vec<f64>> {
        for (k, v) in fields {
            if *k == key {
                return v
                    .split(',')
                    .map(|s| {
                        s.parse().map_err(|_| {
                            Error::IllegalParameter(format!("bad number in {key}: '{s}'"))
                        })
                    })
                    .collect();
            }
        }
        Err(Error::IllegalParameter(format!("missing {key}=...")))
    }
    fn check_keys(fields: &[(&str, &str)], allowed: &[&str]) -> Result<()> {
        for (k, _) in fields {
            if !allowed.contains(k) {
                return Err(Error::IllegalParameter(format!("unknown key '{k}'")));
            }
        }
        Ok(())
    }

    match family {
        "exponential" => {
            check_keys(&fields, &["rate"])?;
            make_exponential(num(&fields, "rate")?)
        }
        "uniform" => {
            check_keys(&fields, &["lo", "hi"])?;
            make_uniform(num(&fields, "lo")?, num(&fields, "hi")?)
        }
        "gamma" => {
            check_keys(&fields, &["shape", "scale"])?;
            make_gamma(num(&fields, "shape")?, num(&fields, "scale")?)
        }
        "lognormal" => {
            check_keys(&fields, &["logmean", "logsd"])?;
            make_lognormal(num(&fields, "logmean")?, num(&fields, "logsd")?)
        }
        "finite" => {
            check_keys(&fields, &["atoms", "probs"])?;
            make_finite_discrete(num_list(&fields, "atoms")?, num_list(&fields, "probs")?)
        }
        other => Err(Error::IllegalParameter(format!("unknown family '{other}'"))),
    }
}
