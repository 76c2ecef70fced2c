//! One resolver + runner per subcommand. A resolver turns the merged
//! key-value map into typed parameters (rejecting unknown keys) and renders
//! them back into the canonical map embedded in output headers; resolving
//! that map again reproduces the same parameters, which is what makes
//! re-runs byte-identical up to the timestamp line.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::json;

use bwmean::binomial::{
    bernoulli_sum, bound_o_rhs, inverse_moment, inverse_moment_coefficients, kl_tail_bound,
    BinomialParams,
};
use bwmean::bwm::{bwm_edgeworth_grid, mixture_cdf_grid, sweep_sup_error, BwmProblem, PerKMode};
use bwmean::cramer::{
    cramer_scan, lattice_check_1d, semilattice_search, Atom, CfTarget, LatticeVerdict, ScanReport,
    SupportSpec, SCAN_DEFAULT_R_MAX, SCAN_DEFAULT_STEP,
};
use bwmean::distributions::{
    format_spec, make_exponential, make_uniform, parse_spec, DistributionSpec,
};
use bwmean::montecarlo::{mc_compare, SimConfig};

use crate::config::{
    parse_atom_list, parse_f64_list, parse_u64_list, render_f64_list, render_u64_list, GridSpec,
    KvReader, OutFormat,
};
use crate::fail::{CliResult, Failure};
use crate::report::{write_out, Emission};

fn parse_dist(text: &str) -> CliResult<DistributionSpec> {
    // distribution syntax errors are configuration errors: nothing has run yet
    parse_spec(text).map_err(|e| Failure::Config(format!("bad dist: {e}")))
}

fn parse_per_k_mode(text: &str) -> CliResult<PerKMode> {
    match text {
        "oracle" => Ok(PerKMode::OracleExact),
        "edgeworth" => Ok(PerKMode::Edgeworth),
        other => Err(Failure::Config(format!(
            "bad mode '{other}': expected oracle or edgeworth"
        ))),
    }
}

fn render_per_k_mode(mode: PerKMode) -> &'static str {
    match mode {
        PerKMode::OracleExact => "oracle",
        PerKMode::Edgeworth => "edgeworth",
    }
}

fn take_grid(r: &mut KvReader) -> CliResult<GridSpec> {
    match r.take("grid") {
        Some(text) => GridSpec::parse(&text),
        None => Ok(GridSpec::Default),
    }
}

fn take_format(r: &mut KvReader, default: OutFormat) -> CliResult<OutFormat> {
    match r.take("format") {
        Some(text) => OutFormat::parse(&text),
        None => Ok(default),
    }
}

fn problem(dist: &DistributionSpec, n: u64, p: f64, q: u32) -> CliResult<BwmProblem> {
    Ok(BwmProblem::new(dist.clone(), BinomialParams::new(n, p)?, q)?)
}

// ---------------------------------------------------------------------------
// expand

struct ExpandParams {
    dist: DistributionSpec,
    n: u64,
    p: f64,
    q: u32,
    grid: GridSpec,
    format: OutFormat,
}

fn resolve_expand(map: BTreeMap<String, String>) -> CliResult<ExpandParams> {
    let mut r = KvReader::new(map);
    let params = ExpandParams {
        dist: parse_dist(&r.require("dist", "expand")?)?,
        n: r.require_u64("n", "expand")?,
        p: r.require_f64("p", "expand")?,
        q: r.u32_or("q", 4)?,
        grid: take_grid(&mut r)?,
        format: take_format(&mut r, OutFormat::Csv)?,
    };
    r.finish("expand")?;
    Ok(params)
}

fn expand_cfg(p: &ExpandParams) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("dist".into(), format_spec(&p.dist)),
        ("n".into(), p.n.to_string()),
        ("p".into(), p.p.to_string()),
        ("q".into(), p.q.to_string()),
        ("grid".into(), p.grid.render()),
        ("format".into(), p.format.render().into()),
    ])
}

pub fn run_expand(map: BTreeMap<String, String>, out: Option<&Path>) -> CliResult<()> {
    let params = resolve_expand(map)?;
    let xs = params.grid.points();
    let prob = problem(&params.dist, params.n, params.p, params.q)?;
    let cdf = bwm_edgeworth_grid(&prob, &xs)?;
    let rows = xs.iter().zip(&cdf).map(|(x, v)| format!("{x},{v}")).collect();
    let emission = Emission {
        command: "expand",
        cfg: expand_cfg(&params),
        meta: Vec::new(),
        csv_header: "x,cdf".into(),
        csv_rows: rows,
        json_report: json!({ "x": xs, "cdf": cdf }),
    };
    write_out(&emission.render(params.format), out)
}

// ---------------------------------------------------------------------------
// mixture

#[derive(Clone, Copy, PartialEq, Eq)]
enum MixMode {
    Oracle,
    Edgeworth,
    Both,
}

impl MixMode {
    fn parse(text: &str) -> CliResult<MixMode> {
        match text {
            "oracle" => Ok(MixMode::Oracle),
            "edgeworth" => Ok(MixMode::Edgeworth),
            "both" => Ok(MixMode::Both),
            other => Err(Failure::Config(format!(
                "bad mode '{other}': expected oracle, edgeworth, or both"
            ))),
        }
    }

    fn render(self) -> &'static str {
        match self {
            MixMode::Oracle => "oracle",
            MixMode::Edgeworth => "edgeworth",
            MixMode::Both => "both",
        }
    }
}

struct MixtureParams {
    dist: DistributionSpec,
    n: u64,
    p: f64,
    q: u32,
    mode: MixMode,
    grid: GridSpec,
    format: OutFormat,
}

fn resolve_mixture(map: BTreeMap<String, String>) -> CliResult<MixtureParams> {
    let mut r = KvReader::new(map);
    let params = MixtureParams {
        dist: parse_dist(&r.require("dist", "mixture")?)?,
        n: r.require_u64("n", "mixture")?,
        p: r.require_f64("p", "mixture")?,
        q: r.u32_or("q", 4)?,
        mode: match r.take("mode") {
            Some(text) => MixMode::parse(&text)?,
            None => MixMode::Both,
        },
        grid: take_grid(&mut r)?,
        format: take_format(&mut r, OutFormat::Csv)?,
    };
    r.finish("mixture")?;
    Ok(params)
}

fn mixture_cfg(p: &MixtureParams) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("dist".into(), format_spec(&p.dist)),
        ("n".into(), p.n.to_string()),
        ("p".into(), p.p.to_string()),
        ("q".into(), p.q.to_string()),
        ("mode".into(), p.mode.render().into()),
        ("grid".into(), p.grid.render()),
        ("format".into(), p.format.render().into()),
    ])
}

pub fn run_mixture(map: BTreeMap<String, String>, out: Option<&Path>) -> CliResult<()> {
    let params = resolve_mixture(map)?;
    let xs = params.grid.points();
    let prob = problem(&params.dist, params.n, params.p, params.q)?;
    let oracle = match params.mode {
        MixMode::Edgeworth => None,
        _ => Some(mixture_cdf_grid(&prob, &xs, PerKMode::OracleExact)?),
    };
    let edgeworth = match params.mode {
        MixMode::Oracle => None,
        _ => Some(mixture_cdf_grid(&prob, &xs, PerKMode::Edgeworth)?),
    };
    let (header, rows) = match (&oracle, &edgeworth) {
        (Some(o), Some(e)) => (
            "x,oracle,edgeworth",
            xs.iter()
                .enumerate()
                .map(|(i, x)| format!("{x},{},{}", o[i], e[i]))
                .collect::<Vec<_>>(),
        ),
        (Some(o), None) => (
            "x,oracle",
            xs.iter().zip(o).map(|(x, v)| format!("{x},{v}")).collect(),
        ),
        (None, Some(e)) => (
            "x,edgeworth",
            xs.iter().zip(e).map(|(x, v)| format!("{x},{v}")).collect(),
        ),
        (None, None) => unreachable!("mode always keeps at least one curve"),
    };
    let emission = Emission {
        command: "mixture",
        cfg: mixture_cfg(&params),
        meta: Vec::new(),
        csv_header: header.into(),
        csv_rows: rows,
        json_report: json!({ "x": xs, "oracle": oracle, "edgeworth": edgeworth }),
    };
    write_out(&emission.render(params.format), out)
}

// ---------------------------------------------------------------------------
// convergence

struct ConvergenceParams {
    dist: DistributionSpec,
    p: f64,
    q: u32,
    sizes: Vec<u64>,
    mode: PerKMode,
    grid: GridSpec,
    format: OutFormat,
}

const DEFAULT_SIZES: [u64; 6] = [50, 100, 200, 400, 800, 1600];

fn resolve_convergence(map: BTreeMap<String, String>) -> CliResult<ConvergenceParams> {
    let mut r = KvReader::new(map);
    let params = ConvergenceParams {
        dist: parse_dist(&r.require("dist", "convergence")?)?,
        p: r.require_f64("p", "convergence")?,
        q: r.u32_or("q", 4)?,
        sizes: match r.take("sizes") {
            Some(text) => parse_u64_list("sizes", &text)?,
            None => DEFAULT_SIZES.to_vec(),
        },
        mode: match r.take("mode") {
            Some(text) => parse_per_k_mode(&text)?,
            None => PerKMode::Edgeworth,
        },
        grid: take_grid(&mut r)?,
        format: take_format(&mut r, OutFormat::Csv)?,
    };
    r.finish("convergence")?;
    Ok(params)
}

fn convergence_cfg(p: &ConvergenceParams) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("dist".into(), format_spec(&p.dist)),
        ("p".into(), p.p.to_string()),
        ("q".into(), p.q.to_string()),
        ("sizes".into(), render_u64_list(&p.sizes)),
        ("mode".into(), render_per_k_mode(p.mode).into()),
        ("grid".into(), p.grid.render()),
        ("format".into(), p.format.render().into()),
    ])
}

pub fn run_convergence(map: BTreeMap<String, String>, out: Option<&Path>) -> CliResult<()> {
    let params = resolve_convergence(map)?;
    let xs = params.grid.points();
    let report = sweep_sup_error(&params.dist, params.p, params.q, &params.sizes, params.mode, &xs)?;
    let table = report.sweep_to_csv(params.dist.family_name(), params.p, params.q);
    let mut lines = table.lines();
    let header = lines.next().expect("sweep csv always has a header").to_string();
    let rows: Vec<String> = lines.map(str::to_string).collect();
    let emission = Emission {
        command: "convergence",
        cfg: convergence_cfg(&params),
        meta: Vec::new(),
        csv_header: header,
        csv_rows: rows,
        json_report: json!({
            "per_n": report.per_n,
            "fitted_slope": report.fitted_slope,
            "sup_error": report.sup_error,
            "argmax_x": report.argmax_x,
        }),
    };
    write_out(&emission.render(params.format), out)
}

// ---------------------------------------------------------------------------
// inverse-moment

struct InverseMomentParams {
    alpha: f64,
    k: usize,
    p: f64,
    sizes: Vec<u64>,
    format: OutFormat,
}

const DEFAULT_IM_SIZES: [u64; 7] = [256, 512, 1024, 2048, 4096, 8192, 16384];

fn resolve_inverse_moment(map: BTreeMap<String, String>) -> CliResult<InverseMomentParams> {
    let mut r = KvReader::new(map);
    let params = InverseMomentParams {
        alpha: r.require_f64("alpha", "inverse-moment")?,
        k: r.u64_or("k", 3)? as usize,
        p: r.require_f64("p", "inverse-moment")?,
        sizes: match r.take("sizes") {
            Some(text) => parse_u64_list("sizes", &text)?,
            None => DEFAULT_IM_SIZES.to_vec(),
        },
        format: take_format(&mut r, OutFormat::Csv)?,
    };
    r.finish("inverse-moment")?;
    Ok(params)
}

fn inverse_moment_cfg(p: &InverseMomentParams) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("alpha".into(), p.alpha.to_string()),
        ("k".into(), p.k.to_string()),
        ("p".into(), p.p.to_string()),
        ("sizes".into(), render_u64_list(&p.sizes)),
        ("format".into(), p.format.render().into()),
    ])
}

pub fn run_inverse_moment(map: BTreeMap<String, String>, out: Option<&Path>) -> CliResult<()> {
    let params = resolve_inverse_moment(map)?;
    let table = inverse_moment_coefficients(params.alpha, params.k, params.p)?;
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    let mut ns = Vec::new();
    let mut abs_resid = Vec::new();
    for &n in &params.sizes {
        let b = BinomialParams::new(n, params.p)?;
        let f = inverse_moment(&b, params.alpha)?;
        let trunc = table.truncation(n);
        let x = n as f64 * params.p;
        let resid = f - trunc;
        let scaled = resid.abs() * x.powf(params.alpha + params.k as f64);
        rows.push(format!("{n},{x},{f},{trunc},{resid},{scaled}"));
        json_rows.push(json!({
            "n": n, "x": x, "f": f, "truncation": trunc,
            "residual": resid, "scaled_residual": scaled,
        }));
        ns.push(n as f64);
        abs_resid.push(resid.abs());
    }
    let order = if ns.len() >= 2 && abs_resid.iter().all(|&r| r > 0.0) {
        Some(bwmean::fit_loglog_slope(&ns, &abs_resid))
    } else {
        None
    };
    let mut meta = vec![("coefficients".to_string(), render_f64_list(&table.c))];
    if let Some(s) = order {
        meta.push(("fittedResidualOrder".to_string(), s.to_string()));
    }
    let emission = Emission {
        command: "inverse-moment",
        cfg: inverse_moment_cfg(&params),
        meta,
        csv_header: "n,x,f,truncation,residual,scaledResidual".into(),
        csv_rows: rows,
        json_report: json!({
            "coefficients": table.c,
            "fitted_residual_order": order,
            "rows": json_rows,
        }),
    };
    write_out(&emission.render(params.format), out)
}

// ---------------------------------------------------------------------------
// lattice-check

enum LatticeTarget {
    OneD { atoms: Vec<Atom>, probs: Vec<f64> },
    Spec(SupportSpec),
}

struct LatticeCheckParams {
    preset: Option<String>,
    atoms: Option<Vec<Atom>>,
    probs: Option<Vec<f64>>,
    rmax: f64,
    step: f64,
    format: OutFormat,
}

fn resolve_lattice_check(map: BTreeMap<String, String>) -> CliResult<LatticeCheckParams> {
    let mut r = KvReader::new(map);
    let preset = r.take("preset");
    let atoms = r.take("atoms").map(|v| parse_atom_list(&v)).transpose()?;
    let probs = r.take("probs").map(|v| parse_f64_list("probs", &v)).transpose()?;
    let rmax = r.f64_or("rmax", SCAN_DEFAULT_R_MAX)?;
    let step = r.f64_or("step", SCAN_DEFAULT_STEP)?;
    let format = take_format(&mut r, OutFormat::Json)?;
    r.finish("lattice-check")?;
    match (&preset, &atoms) {
        (Some(_), Some(_)) | (None, None) => {
            return Err(Failure::Config(
                "lattice-check needs exactly one of preset= or atoms=".into(),
            ));
        }
        _ => {}
    }
    if probs.is_some() && atoms.is_none() {
        return Err(Failure::Config("probs= requires atoms=".into()));
    }
    if format == OutFormat::Csv {
        return Err(Failure::Config(
            "lattice-check reports are structured; only format=json is supported".into(),
        ));
    }
    Ok(LatticeCheckParams { preset, atoms, probs, rmax, step, format })
}

fn render_atom(a: &Atom) -> String {
    if *a == Atom::euler() {
        return "e".into();
    }
    if *a == Atom::pi() {
        return "pi".into();
    }
    match a {
        Atom::Exact(r) => format!("{r}"),
        Atom::Float(x) => x.to_string(),
        Atom::Symbolic { .. } => unreachable!("only e and pi are constructible from the CLI"),
    }
}

fn lattice_check_cfg(p: &LatticeCheckParams, probs_used: Option<&[f64]>) -> BTreeMap<String, String> {
    let mut cfg = BTreeMap::from([
        ("rmax".into(), p.rmax.to_string()),
        ("step".into(), p.step.to_string()),
        ("format".into(), p.format.render().to_string()),
    ]);
    if let Some(preset) = &p.preset {
        cfg.insert("preset".into(), preset.clone());
    }
    if let Some(atoms) = &p.atoms {
        let rendered: Vec<String> = atoms.iter().map(render_atom).collect();
        cfg.insert("atoms".into(), rendered.join(","));
        if let Some(pr) = probs_used {
            cfg.insert("probs".into(), render_f64_list(pr));
        }
    }
    cfg
}

fn preset_target(name: &str) -> CliResult<LatticeTarget> {
    match name {
        "bernoulli" => Ok(LatticeTarget::OneD {
            atoms: vec![Atom::integer(0), Atom::integer(1)],
            probs: vec![0.7, 0.3],
        }),
        "irrational" => Ok(LatticeTarget::OneD {
            atoms: vec![Atom::euler(), Atom::integer(3), Atom::pi()],
            probs: vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        }),
        "hypercube" => Ok(LatticeTarget::Spec(SupportSpec::AtomsNd {
            points: vec![
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
            ],
            probs: vec![0.25; 4],
        })),
        "linear-image" => Ok(LatticeTarget::Spec(SupportSpec::LinearImage {
            coeffs: vec![1.0, 4.0],
            base: make_uniform(0.0, 1.0)?,
        })),
        "gated" => Ok(LatticeTarget::Spec(SupportSpec::BernoulliGated {
            inner: make_exponential(1.0)?,
            p: 0.3,
        })),
        other => Err(Failure::Config(format!(
            "unknown preset '{other}': expected bernoulli, irrational, hypercube, linear-image, or gated"
        ))),
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-".into())
}

fn certificate(verdict: &LatticeVerdict, scan: &ScanReport) -> String {
    let t_star = verdict
        .t_star
        .as_ref()
        .map(|t| format!("[{}]", render_f64_list(t)))
        .unwrap_or_else(|| "-".into());
    let period = match scan.candidate_period {
        Some(period) => format!(
            "{period} ({}, max residual {:.3e})",
            if scan.period_confirmed { "confirmed" } else { "NOT confirmed" },
            scan.period_max_residual
        ),
        None => "-".into(),
    };
    format!(
        "verdict: {:?}\n\
         t*: {t_star}\n\
         x0: {}\n\
         delta: {}\n\
         evidence: {}\n\
         scan max |psi|: {:.15} at r = {} (semi-lattice certified: {})\n\
         scan period 2pi/delta: {period}\n",
        verdict.verdict,
        opt_num(verdict.x0),
        opt_num(verdict.delta),
        verdict.evidence,
        scan.max_tail_modulus,
        scan.argmax_r,
        if scan.certified_semilattice { "yes" } else { "no" },
    )
}

pub fn run_lattice_check(map: BTreeMap<String, String>, out: Option<&Path>) -> CliResult<()> {
    let params = resolve_lattice_check(map)?;
    let target = match (&params.preset, &params.atoms) {
        (Some(name), None) => preset_target(name)?,
        (None, Some(atoms)) => {
            let probs = match &params.probs {
                Some(pr) => pr.clone(),
                None => vec![1.0 / atoms.len() as f64; atoms.len()],
            };
            LatticeTarget::OneD { atoms: atoms.clone(), probs }
        }
        _ => unreachable!("resolver enforces exactly one source"),
    };

    let (verdict, spec, probs_used) = match target {
        LatticeTarget::OneD { atoms, probs } => {
            let v = lattice_check_1d(&atoms, &probs)?;
            (v, SupportSpec::Atoms1D { atoms, probs: probs.clone() }, Some(probs))
        }
        LatticeTarget::Spec(spec) => (semilattice_search(&spec)?, spec, None),
    };

    let direction = verdict.t_star.clone().unwrap_or_else(|| vec![1.0]);
    let candidate = verdict.delta.filter(|&d| d > 0.0);
    let scan = cramer_scan(
        &CfTarget::Support(spec),
        &direction,
        params.rmax,
        params.step,
        candidate,
    )?;

    let cert = certificate(&verdict, &scan);
    let emission = Emission {
        command: "lattice-check",
        cfg: lattice_check_cfg(&params, probs_used.as_deref()),
        meta: Vec::new(),
        csv_header: String::new(),
        csv_rows: Vec::new(),
        json_report: json!({ "verdict": verdict, "scan": scan }),
    };
    write_out(&emission.render(params.format), out)?;
    if out.is_some() {
        print!("{cert}");
    } else {
        eprint!("{cert}");
    }
    if candidate.is_some() && !(scan.certified_semilattice && scan.period_confirmed) {
        return Err(Failure::Invariant(format!(
            "span delta = {} was asserted but the scan did not certify it: \
             max |psi| = {}, period residual = {:.3e}",
            opt_num(verdict.delta),
            scan.max_tail_modulus,
            scan.period_max_residual
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// mc

struct McParams {
    dist: DistributionSpec,
    n: u64,
    p: f64,
    q: u32,
    reps: u64,
    seed: u64,
    streams: u64,
    confidence: f64,
    grid: GridSpec,
    format: OutFormat,
}

fn resolve_mc(map: BTreeMap<String, String>) -> CliResult<McParams> {
    let mut r = KvReader::new(map);
    let params = McParams {
        dist: parse_dist(&r.require("dist", "mc")?)?,
        n: r.require_u64("n", "mc")?,
        p: r.require_f64("p", "mc")?,
        q: r.u32_or("q", 4)?,
        reps: r.u64_or("reps", 1_000_000)?,
        seed: r.u64_or("seed", 1)?,
        streams: r.u64_or("streams", 1)?,
        confidence: r.f64_or("confidence", 0.999)?,
        grid: take_grid(&mut r)?,
        format: take_format(&mut r, OutFormat::Csv)?,
    };
    r.finish("mc")?;
    Ok(params)
}

fn mc_cfg(p: &McParams) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("dist".into(), format_spec(&p.dist)),
        ("n".into(), p.n.to_string()),
        ("p".into(), p.p.to_string()),
        ("q".into(), p.q.to_string()),
        ("reps".into(), p.reps.to_string()),
        ("seed".into(), p.seed.to_string()),
        ("streams".into(), p.streams.to_string()),
        ("confidence".into(), p.confidence.to_string()),
        ("grid".into(), p.grid.render()),
        ("format".into(), p.format.render().into()),
    ])
}

pub fn run_mc(map: BTreeMap<String, String>, out: Option<&Path>) -> CliResult<()> {
    let params = resolve_mc(map)?;
    let xs = params.grid.points();
    let prob = problem(&params.dist, params.n, params.p, params.q)?;
    let cfg = SimConfig::new(prob, params.reps, params.seed, params.streams)?;
    let cmp = mc_compare(&cfg, &xs, params.confidence)?;
    let rows = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let e = cmp.empirical[i];
            let f = cmp.exact[i];
            format!("{x},{e},{f},{}", (e - f).abs())
        })
        .collect();
    let emission = Emission {
        command: "mc",
        cfg: mc_cfg(&params),
        meta: Vec::new(),
        csv_header: "x,empirical,exact,absDeviation".into(),
        csv_rows: rows,
        json_report: json!({
            "summary": cmp.summary,
            "x": xs,
            "empirical": cmp.empirical,
            "exact": cmp.exact,
        }),
    };
    write_out(&emission.render(params.format), out)?;
    let s = &cmp.summary;
    if !s.inside_band {
        return Err(Failure::Invariant(format!(
            "empirical CDF left the {}% DKW band: sup deviation {} > epsilon {}",
            params.confidence * 100.0,
            s.sup_deviation,
            s.dkw_epsilon
        )));
    }
    if s.atom_standard_errors > 5.0 {
        return Err(Failure::Invariant(format!(
            "atom frequency {} vs expected {} is {:.2} standard errors (limit 5)",
            s.atom_frequency, s.expected_atom, s.atom_standard_errors
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// identities

struct IdentitiesParams {
    ns: Vec<u64>,
    ps: Vec<f64>,
    alphas: Vec<f64>,
    format: OutFormat,
}

fn resolve_identities(map: BTreeMap<String, String>) -> CliResult<IdentitiesParams> {
    let mut r = KvReader::new(map);
    let params = IdentitiesParams {
        ns: match r.take("ns") {
            Some(text) => parse_u64_list("ns", &text)?,
            None => vec![1, 2, 5, 10, 50, 200],
        },
        ps: match r.take("ps") {
            Some(text) => parse_f64_list("ps", &text)?,
            None => vec![0.1, 0.3, 0.5, 0.9],
        },
        alphas: match r.take("alphas") {
            Some(text) => parse_f64_list("alphas", &text)?,
            None => vec![-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0],
        },
        format: take_format(&mut r, OutFormat::Csv)?,
    };
    r.finish("identities")?;
    Ok(params)
}

fn identities_cfg(p: &IdentitiesParams) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("ns".into(), render_u64_list(&p.ns)),
        ("ps".into(), render_f64_list(&p.ps)),
        ("alphas".into(), render_f64_list(&p.alphas)),
        ("format".into(), p.format.render().into()),
    ])
}

const SUM_IDENTITY_TOL: f64 = 1e-12;

pub fn run_identities(map: BTreeMap<String, String>, out: Option<&Path>) -> CliResult<()> {
    let params = resolve_identities(map)?;
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    let mut violations: Vec<String> = Vec::new();

    // expectation of the weighted sum vs its two-factor closed form
    for &n in &params.ns {
        for &p in &params.ps {
            let b = BinomialParams::new(n, p)?;
            for &alpha in &params.alphas {
                let lhs = bernoulli_sum(&b, alpha);
                let rhs = bound_o_rhs(&b, alpha);
                let margin = (lhs - rhs).abs() / rhs.abs();
                rows.push(format!("sumIdentity,{n},{p},{alpha},{lhs},{rhs},{margin}"));
                json_rows.push(json!({
                    "check": "sumIdentity", "n": n, "p": p, "param": alpha,
                    "lhs": lhs, "rhs": rhs, "margin": margin,
                }));
                if !(margin <= SUM_IDENTITY_TOL) {
                    violations.push(format!(
                        "sumIdentity n={n} p={p} alpha={alpha}: relative error {margin}"
                    ));
                }
            }
        }
    }

    // exact lower tail vs its large-deviation bound at delta = p/4, p/2, 3p/4
    for &n in &params.ns {
        for &p in &params.ps {
            let b = BinomialParams::new(n, p)?;
            for frac in [0.25, 0.5, 0.75] {
                let delta = frac * p;
                let (exact, bound) = kl_tail_bound(&b, delta)?;
                let margin = bound - exact;
                rows.push(format!("klTail,{n},{p},{delta},{exact},{bound},{margin}"));
                json_rows.push(json!({
                    "check": "klTail", "n": n, "p": p, "param": delta,
                    "lhs": exact, "rhs": bound, "margin": margin,
                }));
                if exact > bound {
                    violations.push(format!(
                        "klTail n={n} p={p} delta={delta}: exact {exact} exceeds bound {bound}"
                    ));
                }
            }
        }
    }

    let emission = Emission {
        command: "identities",
        cfg: identities_cfg(&params),
        meta: Vec::new(),
        csv_header: "check,n,p,param,lhs,rhs,margin".into(),
        csv_rows: rows,
        json_report: json!({ "rows": json_rows }),
    };
    write_out(&emission.render(params.format), out)?;
    if !violations.is_empty() {
        return Err(Failure::Invariant(violations.join("; ")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolve_round_trips_through_rendered_cfg() {
        let mut map = BTreeMap::new();
        map.insert("dist".to_string(), "family=exponential rate=1".to_string());
        map.insert("n".to_string(), "200".to_string());
        map.insert("p".to_string(), "0.3".to_string());
        let params = resolve_expand(map).unwrap();
        assert_eq!(params.q, 4);
        assert_eq!(params.grid, GridSpec::Default);
        let cfg = expand_cfg(&params);
        let again = resolve_expand(cfg.clone()).unwrap();
        assert_eq!(expand_cfg(&again), cfg);
    }

    #[test]
    fn mc_cfg_round_trip_preserves_all_keys() {
        let mut map = BTreeMap::new();
        map.insert("dist".to_string(), "family=gamma shape=4 scale=2".to_string());
        map.insert("n".to_string(), "100".to_string());
        map.insert("p".to_string(), "0.5".to_string());
        map.insert("reps".to_string(), "1000".to_string());
        map.insert("seed".to_string(), "42".to_string());
        map.insert("streams".to_string(), "4".to_string());
        map.insert("grid".to_string(), "-4:4:0.5".to_string());
        let params = resolve_mc(map).unwrap();
        let cfg = mc_cfg(&params);
        let again = resolve_mc(cfg.clone()).unwrap();
        assert_eq!(mc_cfg(&again), cfg);
    }

    #[test]
    fn unknown_and_missing_keys_are_config_failures() {
        let mut map = BTreeMap::new();
        map.insert("dist".to_string(), "family=exponential rate=1".to_string());
        map.insert("n".to_string(), "10".to_string());
        map.insert("p".to_string(), "0.3".to_string());
        map.insert("bogus".to_string(), "1".to_string());
        assert!(matches!(resolve_expand(map), Err(Failure::Config(_))));
        assert!(matches!(resolve_expand(BTreeMap::new()), Err(Failure::Config(_))));
    }

    #[test]
    fn lattice_check_requires_exactly_one_source() {
        let both: BTreeMap<String, String> = BTreeMap::from([
            ("preset".to_string(), "bernoulli".to_string()),
            ("atoms".to_string(), "0,1".to_string()),
        ]);
        assert!(matches!(resolve_lattice_check(both), Err(Failure::Config(_))));
        assert!(matches!(
            resolve_lattice_check(BTreeMap::new()),
            Err(Failure::Config(_))
        ));
    }

    #[test]
    fn atom_rendering_is_canonical() {
        assert_eq!(render_atom(&Atom::euler()), "e");
        assert_eq!(render_atom(&Atom::pi()), "pi");
        assert_eq!(render_atom(&Atom::integer(3)), "3");
        assert_eq!(render_atom(&Atom::rational(2, 6).unwrap()), "1/3");
        assert_eq!(render_atom(&Atom::float(0.5)), "0.5");
    }
}
