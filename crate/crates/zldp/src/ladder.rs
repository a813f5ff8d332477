//! Time points t_ℓ, barrier constants and their constraints, the decreasing
//! events A..D and G, the partition of H over the G_ℓ, and the tuple set.

use crate::error::{domain, Error, Result};
use crate::ledger::ConstantsLedger;
use crate::scalar::Field;
use serde::Serialize;
use std::collections::HashSet;

#[derive(Debug, Clone, Serialize)]
pub struct LadderConfig {
    /// log T = e^t; T itself may not be representable.
    pub log_big_t: f64,
    pub t: f64,
    pub alpha: f64,
    pub v: f64,
    pub kappa: f64,
    pub s_frak: f64,
    /// t_0 = 0, t_1, ..., t_ℒ.
    pub points: Vec<f64>,
    /// log_ℓ t for ℓ = 0..=ℒ (log_0 t = t).
    pub iter_logs: Vec<f64>,
    /// t_{ℒ+1}: the next ladder point if defined, else t.
    pub next_point: f64,
    pub l_count: usize,
    pub ledger: ConstantsLedger,
}

impl LadderConfig {
    pub fn big_t(&self) -> f64 {
        self.log_big_t.exp()
    }

    /// t_ℓ for 0 <= ℓ <= ℒ+1; t beyond that.
    pub fn point(&self, l: usize) -> f64 {
        if l <= self.l_count {
            self.points[l]
        } else if l == self.l_count + 1 {
            self.next_point
        } else {
            self.t
        }
    }

    /// Δ_j = t_j - t_{j-1}, with Δ_1 = t_1.
    pub fn width(&self, j: usize) -> f64 {
        self.point(j) - self.point(j - 1)
    }

    pub fn iter_log(&self, l: usize) -> f64 {
        self.iter_logs[l]
    }
}

/// 𝔰 = s_multiplier / ((2-α)²α²).
pub fn s_frak<F: Field>(alpha: &F, ledger: &ConstantsLedger) -> F {
    let two_minus = F::int(2) - alpha.clone();
    F::real(ledger.s_multiplier) / (two_minus.clone() * two_minus * alpha.clone() * alpha.clone())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return domain(format!("alpha = {alpha} outside (0, 2)"));
    }
    Ok(())
}

pub fn build_ladder(big_t: f64, alpha: f64, v: f64, ledger: &ConstantsLedger) -> Result<LadderConfig> {
    if !(big_t > std::f64::consts::E) || !big_t.is_finite() {
        return domain(format!("T = {big_t} must exceed e"));
    }
    build_ladder_from_t(big_t.ln().ln(), alpha, v, ledger)
}

/// Same as [`build_ladder`] with t = log log T given directly, for heights
/// whose T overflows a double.
pub fn build_ladder_from_t(t: f64, alpha: f64, v: f64, ledger: &ConstantsLedger) -> Result<LadderConfig> {
    check_alpha(alpha)?;
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("t = {t} must be positive"));
    }
    let s = s_frak(&alpha, ledger);
    // candidate levels: log_ℓ t defined while the previous iterate exceeds 1
    let mut logs = vec![t];
    let mut pts = vec![0.0];
    loop {
        let prev = *logs.last().expect("non-empty");
        if prev <= 1.0 {
            break;
        }
        let l = prev.ln();
        let p = t - s * l;
        if p <= *pts.last().expect("non-empty") {
            break;
        }
        logs.push(l);
        pts.push(p);
        if logs.len() > 64 {
            break;
        }
    }
    let k = pts.len() - 1;
    if k == 0 {
        return Err(Error::Config(format!(
            "no ladder point t_1 > 0 at t = {t:.6}, 𝔰 = {s:.6e}; use a smaller 𝔰 or the desk ledger"
        )));
    }
    let rhs = ledger.length_fraction.ln() + t;
    let fits = |l: usize| {
        let next = if l < k { pts[l + 1] } else { t };
        let gap = t - pts[l];
        ledger.e_c.ln() + ledger.e_omega * gap.ln() + next <= rhs
    };
    let l_count = match (1..=k).rev().find(|&l| fits(l)) {
        Some(l) => l,
        None => {
            return Err(Error::Config(format!(
                "ladder-end inequality fails for every level at t = {t:.6}, 𝔰 = {s:.6e}; use the desk ledger"
            )))
        }
    };
    let next_point = if l_count < k { pts[l_count + 1] } else { t };
    pts.truncate(l_count + 1);
    logs.truncate(l_count + 1);
    Ok(LadderConfig {
        log_big_t: t.exp(),
        t,
        alpha,
        v,
        kappa: v / t,
        s_frak: s,
        points: pts,
        iter_logs: logs,
        next_point,
        l_count,
        ledger: ledger.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierParams<F> {
    pub a_const: F,
    pub b_const: F,
    pub c_const: F,
    pub d_const: F,
}

pub fn barrier_params<F: Field>(alpha: &F, ledger: &ConstantsLedger) -> Result<BarrierParams<F>> {
    let a = alpha.to_f64();
    if !(*alpha > F::zero() && *alpha < F::int(2)) {
        return domain(format!("alpha = {a} outside (0, 2)"));
    }
    let two = F::int(2);
    let four = F::int(4);
    let two_minus = two.clone() - alpha.clone();
    let three_f = F::int(3) * F::real(ledger.barrier_factor);
    let b = three_f.clone() / (two.clone() * alpha.clone() * two_minus.clone() * two_minus.clone())
        + F::one() / (four.clone() * alpha.clone());
    let c = three_f / (two * alpha.clone() * alpha.clone() * two_minus.clone())
        + F::one() / (four * two_minus);
    Ok(BarrierParams {
        a_const: F::real(ledger.a_const),
        b_const: b,
        c_const: c,
        d_const: F::real(ledger.d_const),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintCheck {
    pub name: &'static str,
    pub relation: &'static str,
    /// lhs - rhs; its sign decides the check.
    pub residual: f64,
    pub passed: bool,
}

pub fn check_constraints<F: Field>(p: &BarrierParams<F>, alpha: &F, s: &F) -> Vec<ConstraintCheck> {
    let one = F::one();
    let two = F::int(2);
    let four = F::int(4);
    let a2 = alpha.clone() * alpha.clone();
    let g = two.clone() - alpha.clone();
    let mk = |name, relation, r: F, positive: bool| ConstraintCheck {
        name,
        relation,
        residual: r.to_f64(),
        passed: if positive { r > F::zero() } else { r < F::zero() },
    };
    vec![
        mk(
            "B_lower",
            "1 + α²𝔰 - 2αℬ < 0",
            one.clone() + a2.clone() * s.clone() - two.clone() * alpha.clone() * p.b_const.clone(),
            false,
        ),
        mk("B_upper", "ℬ - α𝔰 < 0", p.b_const.clone() - alpha.clone() * s.clone(), false),
        mk(
            "C_lower",
            "𝒞 > (1 + (2-α)²𝔰) / (2(2-α))",
            p.c_const.clone() - (one.clone() + g.clone() * g.clone() * s.clone()) / (two.clone() * g.clone()),
            true,
        ),
        mk("C_upper", "𝒞 - (2-α)𝔰 < 0", p.c_const.clone() - g * s.clone(), false),
        mk(
            "A_linear",
            "𝒜 > α²/4 + α𝒞/(2𝔰) + 2",
            p.a_const.clone()
                - (a2.clone() / four.clone()
                    + alpha.clone() * p.c_const.clone() / (two.clone() * s.clone())
                    + two.clone()),
            true,
        ),
        mk(
            "A_square",
            "𝒜² > α² + 2α𝒞/𝔰 + 4",
            p.a_const.clone() * p.a_const.clone()
                - (a2 + two * alpha.clone() * p.c_const.clone() / s.clone() + four),
            true,
        ),
    ]
}

/// Per-level barriers U_ℓ, L_ℓ and products c_ℓ for ℓ = 0..=ℒ (index 0 unused).
#[derive(Debug, Clone, Serialize)]
pub struct Corridor {
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    pub c_prod: Vec<f64>,
}

pub fn corridor(cfg: &LadderConfig, p: &BarrierParams<f64>) -> Corridor {
    let n = cfg.l_count;
    let mut upper = vec![f64::INFINITY; n + 1];
    let mut lower = vec![f64::NEG_INFINITY; n + 1];
    let mut c_prod = vec![1.0; n + 1];
    for l in 1..=n {
        let mid = cfg.kappa * cfg.points[l];
        upper[l] = mid + p.b_const * cfg.iter_logs[l];
        lower[l] = mid - p.c_const * cfg.iter_logs[l];
        c_prod[l] = c_prod[l - 1] * (1.0 + (-cfg.points[l - 1]).exp());
    }
    Corridor { upper, lower, c_prod }
}

/// Raw per-level data for one sample.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LevelInputs {
    /// S_{t_ℓ}.
    pub s: f64,
    /// |S̃_{t_ℓ} - S̃_{t_{ℓ-1}}|.
    pub increment_abs: f64,
    /// |ζ e^{-S_{t_ℓ}}|.
    pub zeta_damped: f64,
    /// |ζ ℳ_1⋯ℳ_ℓ|.
    pub zeta_mollified: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Membership {
    pub a: bool,
    pub b: bool,
    pub c: bool,
    pub d: bool,
    pub g: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EventTrace {
    pub tau: f64,
    /// -inf for near-zero samples.
    pub log_abs_zeta: f64,
    pub levels: Vec<LevelInputs>,
    /// Index ℓ-1 holds the events at level ℓ.
    pub membership: Vec<Membership>,
    pub h: bool,
}

impl EventTrace {
    /// Largest ℓ with the sample in G_ℓ (0 if none).
    pub fn depth(&self) -> usize {
        self.membership.iter().take_while(|m| m.g).count()
    }
}

pub fn classify(
    tau: f64,
    log_abs_zeta: f64,
    levels: &[LevelInputs],
    cfg: &LadderConfig,
    p: &BarrierParams<f64>,
    cor: &Corridor,
) -> Result<EventTrace> {
    if levels.len() < cfg.l_count {
        return domain(format!("trace has {} levels, ladder needs {}", levels.len(), cfg.l_count));
    }
    let mut prev = Membership { a: true, b: true, c: true, d: true, g: true };
    let mut membership = Vec::with_capacity(cfg.l_count);
    for l in 1..=cfg.l_count {
        let x = &levels[l - 1];
        let a = prev.a && x.increment_abs <= p.a_const * cfg.width(l);
        let b = prev.b && x.s <= cor.upper[l];
        let c = prev.c && x.s >= cor.lower[l];
        let d = prev.d
            && x.zeta_damped <= cor.c_prod[l] * x.zeta_mollified + (-p.d_const * (cfg.t - cfg.points[l - 1])).exp();
        let m = Membership { a, b, c, d, g: a && b && c && d };
        membership.push(m);
        prev = m;
    }
    Ok(EventTrace {
        tau,
        log_abs_zeta,
        levels: levels[..cfg.l_count].to_vec(),
        membership,
        h: log_abs_zeta > cfg.v,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionReport {
    pub n: usize,
    pub count_h: usize,
    /// H ∩ G_1^c.
    pub first: usize,
    /// H ∩ G_ℓ ∩ G_{ℓ+1}^c for ℓ = 1..ℒ-1.
    pub middle: Vec<usize>,
    /// H ∩ G_ℒ.
    pub last: usize,
}

impl PartitionReport {
    pub fn pieces_total(&self) -> usize {
        self.first + self.middle.iter().sum::<usize>() + self.last
    }
}

pub fn decompose(traces: &[EventTrace], l_count: usize) -> Result<PartitionReport> {
    let mut r = PartitionReport { n: traces.len(), count_h: 0, first: 0, middle: vec![0; l_count.saturating_sub(1)], last: 0 };
    for tr in traces {
        for w in tr.membership.windows(2) {
            if w[1].g && !w[0].g {
                return Err(Error::Internal(format!("G not decreasing at tau = {}", tr.tau)));
            }
        }
        if !tr.h {
            continue;
        }
        r.count_h += 1;
        match tr.depth() {
            0 => r.first += 1,
            d if d >= l_count => r.last += 1,
            d => r.middle[d - 1] += 1,
        }
    }
    if r.pieces_total() != r.count_h {
        return Err(Error::Internal(format!(
            "partition pieces sum to {} but count(H) = {}",
            r.pieces_total(),
            r.count_h
        )));
    }
    Ok(r)
}

/// Grid tuples u_j ∈ Δ_j^{-1}ℤ, stored as the integers k_j = u_j Δ_j.
#[derive(Debug, Clone, Serialize)]
pub struct TupleSet {
    pub ell: usize,
    pub w: f64,
    pub widths: Vec<f64>,
    pub tuples: Vec<Vec<i64>>,
    /// Emitted tuples with some |u_j| >= 4Δ_j + 2.
    pub bound_violations: usize,
}

impl TupleSet {
    pub fn u(&self, tuple: &[i64], j: usize) -> f64 {
        tuple[j] as f64 / self.widths[j]
    }

    pub fn index(&self) -> HashSet<Vec<i64>> {
        self.tuples.iter().cloned().collect()
    }

    /// Whether the increments fall in the cell of an emitted tuple.
    pub fn covers(&self, index: &HashSet<Vec<i64>>, increments: &[f64]) -> bool {
        // each coordinate sits in cell k or, on a grid line, also k-1
        let mut cand: Vec<Vec<i64>> = vec![Vec::new()];
        for (j, &y) in increments.iter().take(self.ell).enumerate() {
            let x = y * self.widths[j];
            let k = x.floor() as i64;
            let opts: &[i64] = if x == k as f64 { &[k, k - 1] } else { &[k] };
            cand = cand
                .into_iter()
                .flat_map(|c| {
                    opts.iter().map(move |&o| {
                        let mut c2 = c.clone();
                        c2.push(o);
                        c2
                    })
                })
                .collect();
        }
        cand.iter().any(|c| index.contains(c))
    }
}

pub fn tuple_set(ell: usize, w: f64, cfg: &LadderConfig, p: &BarrierParams<f64>) -> Result<TupleSet> {
    if ell == 0 || ell > cfg.l_count {
        return domain(format!("tuple level {ell} outside 1..={}", cfg.l_count));
    }
    let cor = corridor(cfg, p);
    if !(w >= cor.lower[ell] && w <= cor.upper[ell]) {
        return domain(format!("w = {w} outside [L_ℓ, U_ℓ] = [{}, {}]", cor.lower[ell], cor.upper[ell]));
    }
    let widths: Vec<f64> = (1..=ell).map(|j| cfg.width(j)).collect();
    let mut out = TupleSet { ell, w, widths: widths.clone(), tuples: Vec::new(), bound_violations: 0 };
    let mut stack: Vec<i64> = Vec::with_capacity(ell);
    fn rec(
        j: usize,
        partial: f64,
        stack: &mut Vec<i64>,
        out: &mut TupleSet,
        cor: &Corridor,
        cap: usize,
    ) -> Result<()> {
        let ell = out.ell;
        let d = out.widths[j];
        let level = j + 1;
        let mut lo = cor.lower[level] - 1.0 - partial;
        let mut hi = cor.upper[level] + 1.0 - partial;
        if level == ell {
            lo = lo.max(out.w - 1.0 - partial);
            hi = hi.min(out.w + 1.0 - partial);
        }
        let k_lo = (lo * d).ceil() as i64 - 1;
        let k_hi = (hi * d).floor() as i64 + 1;
        for k in k_lo..=k_hi {
            let u = k as f64 / d;
            let s = partial + u;
            if s < cor.lower[level] - 1.0 || s > cor.upper[level] + 1.0 {
                continue;
            }
            if level == ell && (s < out.w - 1.0 || s > out.w + 1.0) {
                continue;
            }
            stack.push(k);
            if level == ell {
                if out.tuples.len() >= cap {
                    return Err(Error::Resource(format!("tuple set exceeds cap {cap}")));
                }
                let bad = stack.iter().enumerate().any(|(i, &ki)| (ki as f64 / out.widths[i]).abs() >= 4.0 * out.widths[i] + 2.0);
                if bad {
                    out.bound_violations += 1;
                }
                out.tuples.push(stack.clone());
            } else {
                rec(j + 1, s, stack, out, cor, cap)?;
            }
            stack.pop();
        }
        Ok(())
    }
    rec(0, 0.0, &mut stack, &mut out, &cor, cfg.ledger.tuple_cap)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn s_frak_paper_at_one() {
        assert_eq!(s_frak(&1.0, &ConstantsLedger::paper()), 2e6);
    }

    #[test]
    fn desk_point_plugin() {
        let mut l = ConstantsLedger::desk();
        l.s_multiplier = 2.0;
        let cfg = build_ladder_from_t(3.0, 1.0, 3.0, &l).unwrap();
        assert_eq!(cfg.points[0], 0.0);
        assert!((cfg.points[1] - (3.0 - 2.0 * 3f64.ln())).abs() < 1e-15);
        assert!((cfg.points[1] - 0.8028).abs() < 1e-4);
    }

    #[test]
    fn paper_ladder_needs_huge_t() {
        let p = ConstantsLedger::paper();
        assert!(matches!(build_ladder(1e6, 1.0, 2.6, &p), Err(Error::Config(_))));
        let cfg = build_ladder_from_t(1e8, 1.0, 1e8, &p).unwrap();
        assert!(cfg.l_count >= 1);
        assert!(cfg.iter_logs[cfg.l_count] > 0.0);
    }

    #[test]
    fn barrier_literals_at_one() {
        let p = barrier_params(&1.0, &ConstantsLedger::paper()).unwrap();
        assert_eq!(p.b_const, 1.5e6 + 0.25);
        assert_eq!(p.c_const, 1.5e6 + 0.25);
        assert_eq!(p.a_const, 1000.0);
        assert_eq!(p.d_const, 10000.0);
        assert!(barrier_params(&2.0, &ConstantsLedger::paper()).is_err());
    }

    #[test]
    fn first_residual_exact() {
        let l = ConstantsLedger::paper();
        let one = BigRational::from_integer(1.into());
        let p = barrier_params(&one, &l).unwrap();
        let checks = check_constraints(&p, &one, &s_frak(&one, &l));
        assert_eq!(checks[0].residual, -999999.5);
        assert!(checks.iter().all(|c| c.passed));
    }

    #[test]
    fn zero_b_fails_first() {
        let l = ConstantsLedger::paper();
        let mut p = barrier_params(&1.0, &l).unwrap();
        p.b_const = 0.0;
        let c = check_constraints(&p, &1.0, &s_frak(&1.0, &l));
        assert!(!c[0].passed);
    }
}
