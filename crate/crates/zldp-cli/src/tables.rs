//! One builder per subcommand: run the library routine, flatten to tables.
//!
//! Experiment tables lead with `experiment,T`, then parameter columns, then
//! `estimate,reference,ratio,stderr,n,seed`, then any extras.

use crate::config::Resolved;
use serde_json::{json, Value};
use zldp::dirichlet::{self, MollifierInequalityPlan, MomentVariant};
use zldp::experiments as ex;
use zldp::ladder::{self, LadderConfig};
use zldp::majorant;
use zldp::model::{self, ModelBlock};
use zldp::output::{Cell, Table};
use zldp::primes::{self, PrimeRange};
use zldp::rng;
use zldp::stats;
use zldp::zeta::{self, Height};
use zldp::{Exact, Float, Result};

/// Tables plus JSON artifacts (`<name>.json`).
#[derive(Debug, Default)]
pub struct Output {
    pub tables: Vec<Table>,
    pub json: Vec<(String, Value)>,
}

impl From<Vec<Table>> for Output {
    fn from(tables: Vec<Table>) -> Self {
        Self { tables, json: Vec::new() }
    }
}

impl From<Table> for Output {
    fn from(t: Table) -> Self {
        vec![t].into()
    }
}

const TAIL: [&str; 6] = ["estimate", "reference", "ratio", "stderr", "n", "seed"];

fn columns<'a>(params: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
    let mut c = vec!["experiment", "T"];
    c.extend_from_slice(params);
    c.extend_from_slice(&TAIL);
    c.extend_from_slice(extra);
    c
}

fn loglog(x: f64) -> f64 {
    x.ln().ln()
}

fn n_samples(cfg: &Resolved) -> usize {
    cfg.usize("run.samples")
}

fn ladder_cfg(cfg: &Resolved) -> Result<LadderConfig> {
    let big_t = cfg.f64("run.T");
    let alpha = cfg.f64("ladder.alpha");
    let v = cfg.opt_f64("ladder.V").unwrap_or(alpha * loglog(big_t));
    ladder::build_ladder(big_t, alpha, v, &cfg.ledger())
}

pub fn sieve(cfg: &Resolved) -> Result<Output> {
    let limit = cfg.u64("sieve.limit");
    let path = primes::default_cache_path();
    let table = primes::load_or_build_cache(&path, limit)?;
    let ps: Vec<u64> = table.primes().iter().copied().take_while(|&p| p <= limit).collect();
    let mut t = Table::new("sieve", &["limit", "count", "largest", "sum_reciprocal"]);
    let recip = zldp::scalar::compensated_sum(ps.iter().map(|&p| 1.0 / p as Float));
    t.push(vec![limit.into(), ps.len().into(), ps.last().copied().unwrap_or(0).into(), recip.into()]);
    Ok(t.into())
}

pub fn zeta_eval(cfg: &Resolved) -> Result<Output> {
    let checked = cfg.bool("zeta.checked");
    let mut t = Table::new("zeta", &["t", "precision", "re", "im", "abs_log", "err_bound"]);
    for h in cfg.list("zeta.t") {
        let height = if checked { Height::checked(h) } else { Height::fast(h) };
        let z = zeta::zeta_critical(&height)?;
        t.push(vec![h.into(), if checked { "checked" } else { "fast" }.into(), z.re.into(), z.im.into(), z.abs_log.into(), z.err_bound.into()]);
    }
    Ok(t.into())
}

/// The k-th random pair: A on primes <= split, B on primes in (split, T^{1/4}],
/// both of length <= T^{1/4}.
pub fn random_pair(big_t: f64, split: f64, terms: usize, seed: u64, k: u64) -> Result<(dirichlet::Polynomial, dirichlet::Polynomial)> {
    let len = big_t.powf(0.25).floor() as u64;
    let a = dirichlet::random_polynomial(&PrimeRange::between(1.0, split), len, terms, rng::mix(seed, 2 * k))?;
    let b = dirichlet::random_polynomial(&PrimeRange::between(split, len as f64), len, terms, rng::mix(seed, 2 * k + 1))?;
    Ok((a, b))
}

pub fn mean_value(cfg: &Resolved, splitting: bool) -> Result<Output> {
    let big_t = cfg.f64("run.T");
    let seed = cfg.u64("run.seed");
    let n = n_samples(cfg);
    let name = if splitting { "dirichlet_splitting" } else { "dirichlet_mean_value" };
    let mut t = Table::new(name, &columns(&["pair", "N"], &["tolerance", "within"]));
    for k in 0..cfg.u64("dirichlet.pairs") {
        let (a, b) = random_pair(big_t, cfg.f64("dirichlet.split"), cfg.usize("dirichlet.terms"), seed, k)?;
        let tau_seed = rng::mix(seed, 1 << 32 | k);
        let r = if splitting { dirichlet::splitting_check(&a, &b, big_t, n, tau_seed)? } else { dirichlet::mean_value_check(&a.product(&b), big_t, n, tau_seed)? };
        t.push(vec![
            r.experiment.into(),
            big_t.into(),
            k.into(),
            r.n_len.into(),
            r.estimate.into(),
            r.reference.into(),
            r.ratio.into(),
            r.stderr.into(),
            r.n_samples.into(),
            r.seed.into(),
            r.tolerance.into(),
            r.within_tolerance().into(),
        ]);
    }
    Ok(t.into())
}

pub fn dirichlet_moments(cfg: &Resolved) -> Result<Output> {
    let big_t = cfg.f64("run.T");
    let t = loglog(big_t);
    let q = cfg.u64("dirichlet.q") as u32;
    let j = cfg.opt_f64("dirichlet.j").unwrap_or(t / 2.0);
    // largest k with 2q <= e^{t-k}, nudged inside
    let k = cfg.opt_f64("dirichlet.k").unwrap_or(t - (2.0 * q as f64).ln() - 1e-9);
    let mut tab = Table::new("dirichlet_moments", &columns(&["variant", "j", "k", "q"], &["prime_variance"]));
    for variant in [MomentVariant::Complex, MomentVariant::Real] {
        let r = dirichlet::moment_bound_check(j, k, q, big_t, n_samples(cfg), cfg.u64("run.seed"), variant)?;
        tab.push(vec![
            "moments".into(),
            big_t.into(),
            format!("{variant:?}").to_lowercase().into(),
            j.into(),
            k.into(),
            q.into(),
            r.estimate.into(),
            r.reference.into(),
            r.ratio.into(),
            r.stderr.into(),
            r.n_samples.into(),
            r.seed.into(),
            r.prime_variance.into(),
        ]);
    }
    Ok(tab.into())
}

pub fn mollifier_check(cfg: &Resolved) -> Result<Output> {
    let big_t = cfg.f64("run.T");
    let seed = cfg.u64("run.seed");
    let n = n_samples(cfg);
    let lc = ladder_cfg(cfg)?;
    let ell = cfg.usize("dirichlet.ell");
    let plan = MollifierInequalityPlan::new(ell, &lc, &cfg.ledger(), 2.0 * big_t)?;
    let heights = zeta::sample_tau(big_t, n, seed)?;
    let checks = stats::par_map(n, |i| plan.check(heights[i].t));
    let pre = checks.iter().filter(|c| c.precondition_met).count();
    let holds = checks.iter().filter(|c| c.precondition_met && c.holds).count();
    let p = stats::proportion(holds, pre.max(1));
    let mut t = Table::new("dirichlet_mollifier", &columns(&["alpha", "ell", "omega_cap", "n_primes"], &["precondition_met", "holds"]));
    t.push(vec![
        "mollifier-check".into(),
        big_t.into(),
        lc.alpha.into(),
        ell.into(),
        plan.omega_cap().into(),
        plan.n_primes().into(),
        p.p_hat.into(),
        1.0.into(),
        p.p_hat.into(),
        p.stderr.into(),
        n.into(),
        seed.into(),
        pre.into(),
        holds.into(),
    ]);
    Ok(t.into())
}

pub fn constraints(cfg: &Resolved) -> Result<Output> {
    let ledger = cfg.ledger();
    let alpha = <Exact as zldp::scalar::Field>::real(cfg.f64("ladder.alpha"));
    let p = ladder::barrier_params(&alpha, &ledger)?;
    let s = ladder::s_frak(&alpha, &ledger);
    let mut t = Table::new("ladder_constraints", &["alpha", "profile", "name", "relation", "residual", "passed"]);
    for c in ladder::check_constraints(&p, &alpha, &s) {
        t.push(vec![cfg.f64("ladder.alpha").into(), ledger.profile.to_string().into(), c.name.into(), c.relation.into(), c.residual.into(), c.passed.into()]);
    }
    Ok(t.into())
}

pub fn ladder_build(cfg: &Resolved) -> Result<Output> {
    let lc = ladder_cfg(cfg)?;
    let p = ladder::barrier_params(&lc.alpha, &lc.ledger)?;
    let cor = ladder::corridor(&lc, &p);
    let mut t = Table::new("ladder", &["l", "t_l", "width", "iter_log", "lower", "upper"]);
    for l in 0..=lc.l_count {
        let width = if l == 0 { 0.0 } else { lc.width(l) };
        t.push(vec![l.into(), lc.point(l).into(), width.into(), lc.iter_log(l).into(), cor.lower[l].into(), cor.upper[l].into()]);
    }
    let dump = json!({ "ladder": lc, "barrier": p });
    Ok(Output { tables: vec![t], json: vec![("ladder".into(), dump)] })
}

pub fn decompose(cfg: &Resolved) -> Result<Output> {
    let big_t = cfg.f64("run.T");
    let seed = cfg.u64("run.seed");
    let lc = ladder_cfg(cfg)?;
    let p = ladder::barrier_params(&lc.alpha, &lc.ledger)?;
    let traces = ex::event_traces(big_t, &lc, &p, n_samples(cfg), seed)?;
    let r = ladder::decompose(&traces, lc.l_count)?;
    let mut t = Table::new("ladder_decompose", &["T", "alpha", "l_count", "n", "count_h", "first", "middle_total", "last", "pieces_total", "seed"]);
    t.push(vec![
        big_t.into(),
        lc.alpha.into(),
        lc.l_count.into(),
        r.n.into(),
        r.count_h.into(),
        r.first.into(),
        r.middle.iter().sum::<usize>().into(),
        r.last.into(),
        r.pieces_total().into(),
        seed.into(),
    ]);
    Ok(t.into())
}

fn model_block(cfg: &Resolved) -> Result<ModelBlock> {
    match cfg.opt_f64("model.block") {
        Some(j) => ModelBlock::from_ladder(j as usize, &ladder_cfg(cfg)?),
        None => ModelBlock::new(1, PrimeRange::between(cfg.f64("model.lo"), cfg.f64("model.hi"))),
    }
}

pub fn model_mgf(cfg: &Resolved) -> Result<Output> {
    let block = model_block(cfg)?;
    let mut t = Table::new("model_mgf", &["block", "n_primes", "lambda", "estimate", "bound", "ratio", "stderr", "exact", "n", "seed"]);
    for lambda in cfg.list("model.lambda") {
        let r = model::mgf_check(&block, lambda, n_samples(cfg), cfg.u64("run.seed"))?;
        t.push(vec![r.j.into(), block.len().into(), lambda.into(), r.estimate.into(), r.bound.into(), r.ratio.into(), r.stderr.into(), r.exact.into(), r.n_samples.into(), r.seed.into()]);
    }
    Ok(t.into())
}

pub fn berry_esseen(cfg: &Resolved) -> Result<Output> {
    let block = model_block(cfg)?;
    let s = block.surrogate();
    let k = cfg.usize("model.grid").max(2);
    let grid: Vec<f64> = (0..k).map(|i| s.mean + s.sd() * (-4.0 + 8.0 * i as f64 / (k - 1) as f64)).collect();
    let r = model::berry_esseen_distance(&block, &grid, n_samples(cfg), cfg.u64("run.seed"));
    let (wa, wb, we, wg) = r.worst.as_ref().map_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN), |w| (w.a, w.b, w.empirical, w.gaussian));
    let mut t = Table::new("model_berry_esseen", &["block", "n_primes", "mean", "variance", "distance", "worst_a", "worst_b", "empirical", "gaussian", "saddle_point_regime", "n", "seed"]);
    t.push(vec![
        r.j.into(),
        block.len().into(),
        s.mean.into(),
        s.variance.into(),
        r.distance.into(),
        wa.into(),
        wb.into(),
        we.into(),
        wg.into(),
        r.saddle_point_regime.into(),
        r.n_samples.into(),
        r.seed.into(),
    ]);
    Ok(t.into())
}

pub fn saddle(cfg: &Resolved) -> Result<Output> {
    let block = model_block(cfg)?;
    let seed = cfg.u64("run.seed");
    let ys = block.samples(n_samples(cfg), seed);
    let r = model::saddle_scale(&block);
    let mut t = Table::new("model_saddle", &["v", "delta", "r", "estimate", "reference", "ratio", "stderr", "n", "seed"]);
    for v in cfg.list("model.v") {
        for d in cfg.list("model.delta") {
            let s = model::saddle_from_samples(&ys, v, d, r, seed);
            t.push(vec![v.into(), d.into(), r.into(), s.probability.p_hat.into(), s.comparison.into(), s.ratio.into(), s.probability.stderr.into(), s.n_samples.into(), seed.into()]);
        }
    }
    Ok(t.into())
}

pub fn model_moments(cfg: &Resolved) -> Result<Output> {
    let block = model_block(cfg)?;
    let qs: Vec<u32> = cfg.list("model.q").iter().map(|&q| q as u32).collect();
    let rows = model::gaussian_moments(&block, &qs, n_samples(cfg), cfg.u64("run.seed"));
    let mut t = Table::new("model_moments", &["block", "q", "estimate", "reference", "ratio", "stderr", "n", "seed"]);
    for r in rows {
        t.push(vec![block.j.into(), r.q.into(), r.estimate.into(), r.reference.into(), r.ratio.into(), r.stderr.into(), n_samples(cfg).into(), cfg.u64("run.seed").into()]);
    }
    Ok(t.into())
}

fn majorant_spec(cfg: &Resolved) -> Result<(majorant::MajorantSpec, majorant::TruncationPolynomial)> {
    let ledger = cfg.ledger();
    let a = cfg.opt_f64("majorant.A").unwrap_or(ledger.majorant_a);
    let spec = majorant::build_majorant(cfg.f64("majorant.delta"), a, &ledger)?;
    let nu = cfg.opt_f64("majorant.nu").map_or(spec.nu, |n| n as u64);
    let poly = majorant::truncate(&spec, nu)?;
    Ok((spec, poly))
}

fn spec_json(spec: &majorant::MajorantSpec, poly: &majorant::TruncationPolynomial) -> Value {
    json!({
        "delta": spec.delta,
        "A": spec.a,
        "nu": poly.nu,
        "band_limit": spec.band_limit,
        "kernel": spec.kernel,
        "lo": spec.lo,
        "hi": spec.hi,
        "eps": spec.eps,
        "decay": spec.decay,
        "residuals": spec.residuals,
        "n_coeffs": poly.coeffs.len(),
        "ln_error_bound": poly.ln_error_bound,
        "ln_error_bound_sharp": poly.ln_error_bound_sharp,
        "c_sandwich": poly.c_sandwich,
    })
}

pub fn majorant_build(cfg: &Resolved) -> Result<Output> {
    let (spec, poly) = majorant_spec(cfg)?;
    let r = &spec.residuals;
    let mut t = Table::new("majorant_residuals", &["property", "value", "bound", "holds"]);
    let rows: [(&str, f64, f64, bool); 6] = [
        ("min_g", r.min_g, -1e-12, r.min_g >= -1e-12),
        ("max_g", r.max_g, 1.0 + 1e-12, r.max_g <= 1.0 + 1e-12),
        ("l1_fourier", r.l1_fourier, r.l1_bound, r.l1_fourier <= r.l1_bound),
        ("outside_band", r.outside_band, 0.0, r.outside_band == 0.0),
        ("c_lower", r.c_lower, f64::INFINITY, r.c_lower.is_finite()),
        ("c_upper", r.c_upper, f64::INFINITY, r.c_upper.is_finite()),
    ];
    for (name, v, b, ok) in rows {
        t.push(vec![name.into(), v.into(), b.into(), ok.into()]);
    }
    Ok(Output { tables: vec![t], json: vec![("majorant".into(), spec_json(&spec, &poly))] })
}

pub fn majorant_sandwich(cfg: &Resolved) -> Result<Output> {
    let (spec, poly) = majorant_spec(cfg)?;
    let k = cfg.usize("majorant.grid").max(2);
    // uniform on the enlarged interval plus a margin on each side
    let (lo, hi) = (spec.lo - 1.0, spec.hi + 1.0);
    let xs: Vec<f64> = (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect();
    let r = majorant::sandwich_check(&spec, &poly, &xs);
    let mut t = Table::new("majorant_sandwich", &["delta", "A", "nu", "n_points", "c", "violations", "worst_x"]);
    let worst = r.violations.iter().max_by(|a, b| (a.lhs - a.rhs).total_cmp(&(b.lhs - b.rhs))).map_or(f64::NAN, |v| v.x);
    t.push(vec![spec.delta.into(), spec.a.into(), poly.nu.into(), r.n_points.into(), r.c.into(), r.violations.len().into(), worst.into()]);
    Ok(Output { tables: vec![t], json: vec![("majorant".into(), spec_json(&spec, &poly))] })
}

pub fn majorant_reverse(cfg: &Resolved) -> Result<Output> {
    let (spec, poly) = majorant_spec(cfg)?;
    let block = model_block(cfg)?;
    let seed = cfg.u64("run.seed");
    let mut t = Table::new("majorant_reverse", &["u", "estimate", "reference", "ratio", "stderr", "n", "seed", "p_enlarged", "c_reverse", "holds"]);
    for u in cfg.list("majorant.u") {
        let r = majorant::reverse_check(&spec, &poly, &block, u, n_samples(cfg), seed)?;
        t.push(vec![
            u.into(),
            r.lhs.into(),
            r.rhs.into(),
            (r.lhs / r.rhs).into(),
            r.lhs_stderr.into(),
            r.n_samples.into(),
            r.seed.into(),
            r.p_enlarged.into(),
            r.c_reverse.into(),
            r.holds.into(),
        ]);
    }
    Ok(Output { tables: vec![t], json: vec![("majorant".into(), spec_json(&spec, &poly))] })
}

fn tail_row(id: &str, e: &ex::TailEstimate) -> Vec<Cell> {
    vec![
        id.into(),
        e.big_t.into(),
        e.alpha.into(),
        e.v.into(),
        e.p_hat.into(),
        e.gaussian_ref.into(),
        e.ratio.into(),
        e.stderr.into(),
        e.n_samples.into(),
        e.seed.into(),
        e.n_exceed.into(),
        e.near_zero.into(),
        e.upper95.into(),
        e.wide_interval.into(),
        e.model_not_zeta.into(),
    ]
}

pub fn tail(cfg: &Resolved) -> Result<Output> {
    let big_t = cfg.f64("run.T");
    let alphas = cfg.list("experiment.alpha");
    let cols = columns(&["alpha", "V"], &["exceed", "near_zero", "upper95", "wide_interval", "model_not_zeta"]);
    let mut t = Table::new("tail", &cols);
    for e in ex::tail_experiment(big_t, &alphas, n_samples(cfg), cfg.u64("run.seed"))? {
        t.push(tail_row("tail", &e));
    }
    let mut m = Table::new("tail_model", &cols);
    for e in ex::model_tail_experiment(big_t, &alphas, cfg.f64("experiment.model_cutoff"), n_samples(cfg), cfg.u64("run.seed"))? {
        m.push(tail_row("tail_model", &e));
    }
    Ok(vec![t, m].into())
}

pub fn moments(cfg: &Resolved) -> Result<Output> {
    let big_t = cfg.f64("run.T");
    let mut t = Table::new(
        "moments",
        &columns(&["beta"], &["layered", "layered_rel_diff", "negative", "small", "dominant", "upper", "negative_bound", "small_bound", "upper_bound"]),
    );
    for beta in cfg.list("experiment.beta") {
        let e = ex::fractional_moment(big_t, beta, n_samples(cfg), cfg.u64("run.seed"))?;
        let p = &e.pieces;
        t.push(vec![
            "moments".into(),
            big_t.into(),
            beta.into(),
            e.m_hat.into(),
            e.reference.into(),
            e.ratio.into(),
            e.stderr.into(),
            e.n_samples.into(),
            e.seed.into(),
            e.layered.into(),
            e.layered_rel_diff.into(),
            p.negative.into(),
            p.small.into(),
            p.dominant.into(),
            p.upper.into(),
            p.negative_bound.into(),
            p.small_bound.into(),
            p.upper_bound.into(),
        ]);
    }
    Ok(t.into())
}

pub fn fourth(cfg: &Resolved) -> Result<Output> {
    let big_t = cfg.f64("run.T");
    let seed = cfg.u64("run.seed");
    let e = ex::fourth_moment_anchor(big_t, n_samples(cfg), seed)?;
    let mut t = Table::new("fourth", &columns(&[], &[]));
    t.push(vec!["fourth".into(), big_t.into(), e.estimate.into(), e.reference.into(), e.ratio.into(), e.stderr.into(), e.n_samples.into(), seed.into()]);
    let c = ex::selberg_clt(big_t, n_samples(cfg), seed)?;
    let mut k = Table::new("clt", &["experiment", "T", "scale", "ks", "mean", "sd", "n", "seed"]);
    k.push(vec!["clt".into(), big_t.into(), c.scale.into(), c.ks.into(), c.mean.into(), c.sd.into(), c.n_samples.into(), seed.into()]);
    Ok(vec![t, k].into())
}

fn level_table(name: &str, r: &ex::ShortIntervalResult) -> Table {
    let mut t = Table::new(name, &["beta", "V", "level_set"]);
    for &(v, s) in &r.level_set {
        t.push(vec![r.beta.unwrap_or(f64::NAN).into(), v.into(), s.into()]);
    }
    t
}

pub fn max(cfg: &Resolved) -> Result<Output> {
    let big_t = cfg.f64("run.T");
    let theta = cfg.f64("experiment.theta");
    let n = cfg.usize("experiment.windows");
    let seed = cfg.u64("run.seed");
    let r = ex::short_interval_max(big_t, theta, &cfg.list("experiment.y"), n, seed, cfg.f64("experiment.grid_a"))?;
    let mut t = Table::new("max", &columns(&["theta", "y", "log_bound"], &["hits", "upper95"]));
    for e in &r.exceedance {
        t.push(vec![
            "max".into(),
            big_t.into(),
            theta.into(),
            e.y.into(),
            e.log_bound.into(),
            e.freq.into(),
            e.reference.into(),
            (e.freq / e.reference).into(),
            e.stderr.into(),
            n.into(),
            seed.into(),
            e.hits.into(),
            e.upper95.into(),
        ]);
    }
    let mut w = Table::new("max_windows", &["window", "center", "max_log_abs", "refinement_gain"]);
    for (i, ((c, m), g)) in r.result.centers.iter().zip(&r.result.per_window).zip(&r.refinement_gain).enumerate() {
        w.push(vec![i.into(), (*c).into(), (*m).into(), (*g).into()]);
    }
    Ok(vec![t, w, level_table("max_level_set", &r.result)].into())
}

pub fn short_moments(cfg: &Resolved) -> Result<Output> {
    let big_t = cfg.f64("run.T");
    let theta = cfg.f64("experiment.theta");
    let n = cfg.usize("experiment.windows");
    let seed = cfg.u64("run.seed");
    let r = ex::short_interval_moments(big_t, theta, &cfg.list("experiment.short_beta"), n, seed, cfg.f64("experiment.grid_a"))?;
    let mut sub = Table::new("short_moments_sub", &columns(&["theta", "beta", "A", "log_bound"], &[]));
    for s in &r.subcritical {
        sub.push(vec![
            "short-moments-sub".into(),
            big_t.into(),
            theta.into(),
            s.beta.into(),
            s.a.into(),
            s.log_bound.into(),
            s.exceed_freq.into(),
            s.reference.into(),
            (s.exceed_freq / s.reference).into(),
            s.stderr.into(),
            n.into(),
            seed.into(),
        ]);
    }
    let mut sup = Table::new("short_moments_super", &columns(&["theta", "beta", "log_reference"], &["mean_log_z"]));
    for s in &r.supercritical {
        sup.push(vec![
            "short-moments-super".into(),
            big_t.into(),
            theta.into(),
            s.beta.into(),
            s.log_reference.into(),
            s.median_log_z.into(),
            s.log_reference.into(),
            s.median_ratio.into(),
            f64::NAN.into(),
            n.into(),
            seed.into(),
            s.mean_log_z.into(),
        ]);
    }
    let mut mesh = Table::new("short_moments_mesh", &["beta", "j", "v_lo", "v_hi", "a_j", "gaussian_integral", "mean_i", "holds_freq", "e_freq"]);
    for m in &r.mesh {
        mesh.push(vec![m.beta.into(), m.j.into(), m.v_lo.into(), m.v_hi.into(), m.a_j.into(), m.gaussian_integral.into(), m.mean_i.into(), m.holds_freq.into(), r.e_freq.into()]);
    }
    let mut tables = vec![sub, sup, mesh];
    if let Some(f) = &r.freezing {
        let mut fz = Table::new("short_moments_freezing", &["theta", "break_point", "beta_c", "rel_dev", "c0", "q", "sse", "n_beta"]);
        fz.push(vec![theta.into(), f.break_point.into(), f.beta_c.into(), f.rel_dev.into(), f.c0.into(), f.q.into(), f.sse.into(), f.betas.len().into()]);
        tables.push(fz);
    }
    Ok(tables.into())
}

pub fn critical(cfg: &Resolved) -> Result<Output> {
    let big_t = cfg.f64("run.T");
    let n = cfg.usize("experiment.windows");
    let seed = cfg.u64("run.seed");
    let r = ex::critical_check(big_t, &cfg.list("experiment.critical_y"), n, seed, cfg.f64("experiment.grid_a"))?;
    let mut t = Table::new("critical", &columns(&["y", "m_t"], &[]));
    for row in &r.rows {
        t.push(vec![
            "critical".into(),
            big_t.into(),
            row.y.into(),
            r.m_t.into(),
            row.level_set.into(),
            row.shape.into(),
            (row.level_set / row.shape).into(),
            row.stderr.into(),
            n.into(),
            seed.into(),
        ]);
    }
    let mut z = Table::new("critical_z2", &["experiment", "T", "t", "z2_scaled", "stderr", "n", "seed"]);
    z.push(vec!["critical-z2".into(), big_t.into(), r.t.into(), r.z2_scaled.into(), r.z2_scaled_stderr.into(), n.into(), seed.into()]);
    Ok(vec![t, z].into())
}

pub fn pipeline(cfg: &Resolved) -> Result<Output> {
    let big_t = cfg.f64("run.T");
    let alpha = cfg.f64("ladder.alpha");
    let r = ex::event_pipeline(big_t, alpha, n_samples(cfg), cfg.u64("run.seed"), &cfg.ledger())?;
    let mut t = Table::new("pipeline", &columns(&["alpha", "V", "profile", "piece", "level"], &["count", "upper95", "iter_log", "implied_delta"]));
    for p in &r.pieces {
        t.push(vec![
            "pipeline".into(),
            big_t.into(),
            alpha.into(),
            r.v.into(),
            r.profile.clone().into(),
            p.piece.clone().into(),
            p.level.into(),
            p.p_hat.into(),
            p.reference.into(),
            (p.p_hat / p.reference).into(),
            stats::proportion(p.count, r.n_samples).stderr.into(),
            r.n_samples.into(),
            r.seed.into(),
            p.count.into(),
            p.upper95.into(),
            p.iter_log.into(),
            p.implied_delta.into(),
        ]);
    }
    let mut s = Table::new("pipeline_partition", &["n", "count_h", "pieces_total", "l_count"]);
    s.push(vec![r.partition.n.into(), r.partition.count_h.into(), r.partition.pieces_total().into(), r.l_count.into()]);
    Ok(vec![t, s].into())
}
