//! Static classification of a parameter tuple against the sufficient
//! conditions for global existence, blow-up, non-existence of steady states
//! and linear stability. Every entry carries both evaluated sides.
//!
//! Ties follow the inequality as stated: a strict hypothesis met with
//! equality fails, a non-strict one holds, and either way the entry is
//! flagged as a boundary case.

use serde::Serialize;

use crate::diagnostics::{check_gg, concavity_energy, kaplan_threshold, kaplan_tstar, ConcavityConfig};
use crate::eigen::NeumannSpectrum;
use crate::error::{Error, Result};
use crate::grid::{Field, Variable};
use crate::model::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = "<=")]
    LessEq,
    #[serde(rename = ">")]
    Greater,
    #[serde(rename = ">=")]
    GreaterEq,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Less => "<",
            Relation::LessEq => "<=",
            Relation::Greater => ">",
            Relation::GreaterEq => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionEntry {
    pub name: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    pub verdict: Verdict,
    /// Named hypothesis values that fed into `lhs`/`rhs`.
    pub values: Vec<(String, f64)>,
    pub note: Option<String>,
}

impl ConditionEntry {
    fn compare(name: &str, lhs: f64, relation: Relation, rhs: f64) -> Self {
        let ok = match relation {
            Relation::Less => lhs < rhs,
            Relation::LessEq => lhs <= rhs,
            Relation::Greater => lhs > rhs,
            Relation::GreaterEq => lhs >= rhs,
        };
        let verdict = if lhs.is_nan() || rhs.is_nan() {
            Verdict::Inconclusive
        } else if ok {
            Verdict::Holds
        } else {
            Verdict::Fails
        };
        ConditionEntry {
            name: name.to_string(),
            lhs,
            relation,
            rhs,
            verdict,
            values: Vec::new(),
            note: (lhs == rhs).then(|| "boundary case: both sides equal".to_string()),
        }
    }

    fn fixed(name: &str, lhs: f64, relation: Relation, rhs: f64, verdict: Verdict, note: &str) -> Self {
        ConditionEntry {
            name: name.to_string(),
            lhs,
            relation,
            rhs,
            verdict,
            values: Vec::new(),
            note: Some(note.to_string()),
        }
    }

    fn with_values(mut self, values: &[(&str, f64)]) -> Self {
        self.values = values.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        self
    }

    fn with_note(mut self, note: &str) -> Self {
        self.note = Some(match self.note.take() {
            Some(old) => format!("{old}; {note}"),
            None => note.to_string(),
        });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub theorem: String,
    pub entries: Vec<ConditionEntry>,
    pub verdict: Verdict,
    pub summary: String,
    /// Blow-up time bound, when a blow-up criterion holds.
    pub t_star: Option<f64>,
    /// Per-mode growth rates (linear stability only).
    pub rates: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

/// Holds when every entry holds, fails when any fails, inconclusive
/// otherwise.
fn combine(entries: &[ConditionEntry]) -> Verdict {
    if entries.iter().any(|e| e.verdict == Verdict::Fails) {
        Verdict::Fails
    } else if entries.iter().all(|e| e.verdict == Verdict::Holds) {
        Verdict::Holds
    } else {
        Verdict::Inconclusive
    }
}

fn report(theorem: &str, entries: Vec<ConditionEntry>, verdict: Verdict, summary: String) -> RegimeReport {
    RegimeReport {
        theorem: theorem.to_string(),
        entries,
        verdict,
        summary,
        t_star: None,
        rates: None,
        notes: Vec::new(),
    }
}

/// How the ratio `c/d` is read when `d = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReactionRatio {
    Finite(f64),
    /// `d = 0, c < 0`: taken as `−∞`.
    MinusInfinity,
    /// `c = d = 0`: no reaction, the comparison is vacuous.
    Absent,
    /// `d = 0, c > 0`: no meaningful value.
    Undefined,
}

impl ReactionRatio {
    pub fn of(p: &Params) -> Self {
        if p.d != 0.0 {
            ReactionRatio::Finite(p.c / p.d)
        } else if p.c < 0.0 {
            ReactionRatio::MinusInfinity
        } else if p.c == 0.0 {
            ReactionRatio::Absent
        } else {
            ReactionRatio::Undefined
        }
    }

    pub fn note(self) -> &'static str {
        match self {
            ReactionRatio::Finite(_) => "c/d evaluated directly",
            ReactionRatio::MinusInfinity => "d = 0 and c < 0: c/d read as -infinity",
            ReactionRatio::Absent => "c = d = 0: reaction absent, c/d comparison vacuous",
            ReactionRatio::Undefined => "d = 0 and c > 0: c/d undefined",
        }
    }
}

/// Global existence: `max u₀ < a/2b` and `c/d < a/2b`.
pub fn classify_global(p: &Params, u0_max: f64) -> RegimeReport {
    let crit = p.u_crit();
    let mut entries = vec![ConditionEntry::compare("max u0 < a/(2b)", u0_max, Relation::Less, crit)
        .with_values(&[("u0_max", u0_max), ("a", p.a), ("b", p.b)])];
    let ratio = ReactionRatio::of(p);
    let name = "c/d < a/(2b)";
    let entry = match ratio {
        ReactionRatio::Finite(r) => ConditionEntry::compare(name, r, Relation::Less, crit),
        ReactionRatio::MinusInfinity => ConditionEntry::fixed(name, f64::NEG_INFINITY, Relation::Less, crit, Verdict::Holds, ratio.note()),
        ReactionRatio::Absent => ConditionEntry::fixed(name, f64::NAN, Relation::Less, crit, Verdict::Holds, ratio.note()),
        ReactionRatio::Undefined => ConditionEntry::fixed(name, f64::NAN, Relation::Less, crit, Verdict::Inconclusive, ratio.note()),
    };
    entries.push(entry.with_values(&[("c", p.c), ("d", p.d)]));
    let verdict = combine(&entries);
    let summary = match verdict {
        Verdict::Holds => "global classical solution; 0 <= u < a/(2b) for all t".to_string(),
        Verdict::Fails => "global existence criterion not met".to_string(),
        Verdict::Inconclusive => "global existence criterion cannot be decided".to_string(),
    };
    report("global existence", entries, verdict, summary)
}

/// Eigenfunction blow-up criterion: `μb > d` and `A₀ > max(μa − c, 0)/(μb − d)`.
pub fn classify_kaplan(p: &Params, mu: f64, a0: f64) -> RegimeReport {
    let hyp = ConditionEntry::compare("mu*b > d", mu * p.b, Relation::Greater, p.d).with_values(&[("mu", mu), ("b", p.b), ("d", p.d)]);
    if hyp.verdict != Verdict::Holds {
        let entries = vec![hyp];
        return report(
            "eigenfunction blow-up",
            entries,
            Verdict::Inconclusive,
            "hypothesis mu*b > d violated; criterion does not apply".to_string(),
        );
    }
    let threshold = kaplan_threshold(p, mu).expect("mu*b > d checked");
    let cond = ConditionEntry::compare("A0 > max(mu*a - c, 0)/(mu*b - d)", a0, Relation::Greater, threshold)
        .with_values(&[("mu", mu), ("a", p.a), ("c", p.c), ("A0", a0)]);
    let entries = vec![hyp, cond];
    let verdict = combine(&entries);
    let mut r = report(
        "eigenfunction blow-up",
        entries,
        verdict,
        match verdict {
            Verdict::Holds => "finite-time blow-up in the eigenfunction-weighted norm".to_string(),
            _ => "A0 at or below the blow-up threshold".to_string(),
        },
    );
    if verdict == Verdict::Holds {
        r.t_star = kaplan_tstar(p, mu, a0).ok();
    }
    r
}

/// Concavity blow-up criterion for nonnegative shifted data `v₀`.
pub fn classify_concavity(p: &Params, v0: &Field, m: f64) -> Result<RegimeReport> {
    if v0.var != Variable::V {
        return Err(Error::VariableMismatch {
            expected: "v",
            found: v0.var.name(),
        });
    }
    let cfg = ConcavityConfig::new(p, m)?;
    let bound = (p.a * p.d / p.b).min(p.a * p.d / (2.0 * p.b));
    let mut entries = Vec::new();
    let mut cond = ConditionEntry::compare("c <= min(ad/b, ad/(2b))", p.c, Relation::LessEq, bound)
        .with_values(&[("a", p.a), ("b", p.b), ("c", p.c), ("d", p.d)]);
    if m != 2.0 {
        cond = cond.with_note("derived for m = 2; see the sampled condition below");
    }
    entries.push(cond);
    let vmin = v0.min();
    entries.push(ConditionEntry::compare("min v0 >= 0", vmin, Relation::GreaterEq, 0.0));
    if vmin >= 0.0 {
        let e0 = concavity_energy(v0, &cfg, p)?;
        entries.push(ConditionEntry::compare("E(0) > 0", e0, Relation::Greater, 0.0));
    } else {
        entries.push(ConditionEntry::fixed(
            "E(0) > 0",
            f64::NAN,
            Relation::Greater,
            0.0,
            Verdict::Inconclusive,
            "not evaluated for sign-changing data",
        ));
    }
    let s_max = (10.0 * v0.max()).max(1.0);
    let gg = check_gg(&cfg, s_max, 2000)?;
    entries.push(
        ConditionEntry::compare("min_s s^m h(s) - 2H(s) >= 0 (sampled)", gg.min_value, Relation::GreaterEq, 0.0)
            .with_values(&[("s_max", s_max), ("argmin", gg.argmin), ("violations", gg.violations as f64)]),
    );
    // the sampled entry can be slightly negative from quadrature noise; the
    // tolerance-aware report decides it
    let last = entries.last_mut().expect("just pushed");
    last.verdict = if gg.holds() { Verdict::Holds } else { Verdict::Fails };
    let verdict = combine(&entries);
    Ok(report(
        "concavity blow-up",
        entries,
        verdict,
        match verdict {
            Verdict::Holds => "concavity criterion met: the functional Psi diverges in finite time".to_string(),
            Verdict::Fails => "concavity criterion not met".to_string(),
            Verdict::Inconclusive => "concavity criterion cannot be decided".to_string(),
        },
    ))
}

/// Coefficients of `q(s) = bd s² + B s + ac` with `B = ((n−6)ad − (n+6)bc)/6`.
pub fn pohozaev_quadratic(p: &Params) -> (f64, f64, f64) {
    let n = p.n as f64;
    (p.b * p.d, ((n - 6.0) * p.a * p.d - (n + 6.0) * p.b * p.c) / 6.0, p.a * p.c)
}

/// `sup_{s ≥ 0} q(s)`.
pub fn pohozaev_sup(p: &Params) -> f64 {
    let (qa, qb, qc) = pohozaev_quadratic(p);
    if qa > 0.0 || (qa == 0.0 && qb > 0.0) {
        return f64::INFINITY;
    }
    if qa == 0.0 {
        return qc;
    }
    let sv = -qb / (2.0 * qa);
    if sv <= 0.0 {
        qc
    } else {
        qc - qb * qb / (4.0 * qa)
    }
}

pub const STRICTNESS_NOTE: &str =
    "strict inequality is required only where the right-hand side is nonzero; at s = 0 both sides vanish";

/// Non-existence of nontrivial steady states on star-shaped domains via
/// `q(s) ≤ 0` for all `s ≥ 0`.
pub fn pohozaev_nonexistence(p: &Params) -> Result<RegimeReport> {
    p.validate()?;
    if p.n <= 2 {
        return Err(Error::Hypothesis(format!("requires n > 2, got n = {}", p.n)));
    }
    let (qa, qb, qc) = pohozaev_quadratic(p);
    let sup = pohozaev_sup(p);
    let degenerate = qa == 0.0 && qb == 0.0 && qc == 0.0;
    let mut main = ConditionEntry::compare("sup_{s>=0} q(s) <= 0", sup, Relation::LessEq, 0.0).with_values(&[
        ("bd", qa),
        ("B", qb),
        ("ac", qc),
    ]);
    if degenerate {
        main.verdict = Verdict::Inconclusive;
        main = main.with_note("q vanishes identically");
    }
    let mut entries = vec![
        ConditionEntry::compare("ac <= 0", qc, Relation::LessEq, 0.0),
        ConditionEntry::compare("bd <= 0", qa, Relation::LessEq, 0.0),
        main,
    ];
    let verdict = if degenerate { Verdict::Inconclusive } else { combine(&entries) };

    // corollary conditions, reported as cross-checks only
    let n = p.n as f64;
    let k = p.a * p.d * (n - 6.0) - p.b * p.c * (n + 6.0);
    let signs = p.c <= 0.0 && p.d <= 0.0;
    let root = 12.0 * (p.a * p.b * p.c * p.d).max(0.0).sqrt();
    let cor_a = signs && k > 0.0 && k <= root;
    let cor_b = signs && k <= 0.0;
    let mut e = ConditionEntry::compare("corollary: c,d <= 0 and 0 < ad(n-6) - bc(n+6) <= 12 sqrt(abcd)", k, Relation::LessEq, root)
        .with_values(&[("c", p.c), ("d", p.d)]);
    e.verdict = if cor_a { Verdict::Holds } else { Verdict::Fails };
    entries.push(e.with_note("cross-check, not part of the verdict"));
    let mut e = ConditionEntry::compare("corollary: c,d <= 0 and ad(n-6) - bc(n+6) <= 0", k, Relation::LessEq, 0.0);
    e.verdict = if cor_b { Verdict::Holds } else { Verdict::Fails };
    entries.push(e.with_note("cross-check, not part of the verdict"));

    let summary = match verdict {
        Verdict::Holds => "non-existence holds: no nontrivial steady state on star-shaped domains".to_string(),
        Verdict::Fails => "non-existence condition not met".to_string(),
        Verdict::Inconclusive => "non-existence condition degenerate (q vanishes identically)".to_string(),
    };
    let mut r = report("steady-state non-existence", entries, verdict, summary);
    r.notes.push(STRICTNESS_NOTE.to_string());
    r.notes.push("the domain is assumed star-shaped".to_string());
    r.notes
        .push("sharpened boundary-integral condition: not evaluated (requires candidate solution)".to_string());
    Ok(r)
}

/// Linear stability of the equilibrium `c/d` under Neumann conditions.
/// Mode `k` grows at rate `(2bc/d − a)λ_k − c`.
pub fn linear_stability(p: &Params, spectrum: &NeumannSpectrum) -> Result<RegimeReport> {
    if !(p.c > 0.0 && p.d > 0.0) {
        return Err(Error::Hypothesis(format!("requires c, d > 0, got c = {}, d = {}", p.c, p.d)));
    }
    let slope = 2.0 * p.b * p.c / p.d - p.a;
    let rates: Vec<f64> = spectrum.lambdas.iter().map(|l| slope * l - p.c).collect();
    let max_rate = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let closed = ConditionEntry::compare("c/d <= a/(2b)", p.c / p.d, Relation::LessEq, p.u_crit())
        .with_values(&[("slope 2bc/d - a", slope)]);
    let mut modes = ConditionEntry::compare("max_k rate_k < 0 (supplied modes)", max_rate, Relation::Less, 0.0)
        .with_values(&[("modes", rates.len() as f64)]);
    let verdict = closed.verdict;
    if modes.verdict == Verdict::Holds && verdict == Verdict::Fails {
        modes = modes.with_note("positive slope: modes beyond the supplied spectrum grow");
    }
    let entries = vec![closed, modes];
    let mut r = report(
        "linear stability",
        entries,
        verdict,
        match verdict {
            Verdict::Holds => "equilibrium c/d is asymptotically linearly stable".to_string(),
            _ => "equilibrium c/d is linearly unstable".to_string(),
        },
    );
    r.rates = Some(rates);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoundaryKind, Grid};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(a: f64, b: f64, c: f64, d: f64, n: usize) -> Params {
        Params::new(a, b, c, d, n).unwrap()
    }

    #[test]
    fn global_examples() {
        let r = classify_global(&params(2.0, 1.0, 0.5, 1.0, 1), 0.9);
        assert_eq!(r.verdict, Verdict::Holds);
        assert_eq!(r.entries[0].rhs, 1.0);
        let r = classify_global(&params(2.0, 1.0, 0.5, 1.0, 1), 1.0);
        assert_eq!(r.verdict, Verdict::Fails);
        assert!(r.entries[0].note.is_some());
        let r = classify_global(&params(2.0, 1.0, 0.0, 0.0, 1), 0.5);
        assert_eq!(r.verdict, Verdict::Holds);
        assert!(r.entries[1].note.as_deref().unwrap().contains("reaction absent"));
        assert_eq!(classify_global(&params(2.0, 1.0, -1.0, 0.0, 1), 0.5).verdict, Verdict::Holds);
        assert_eq!(classify_global(&params(2.0, 1.0, 1.0, 0.0, 1), 0.5).verdict, Verdict::Inconclusive);
        assert_eq!(classify_global(&params(2.0, 1.0, 1.0, 0.0, 1), 1.5).verdict, Verdict::Fails);
        assert_eq!(classify_global(&params(2.0, 1.0, 3.0, 1.0, 1), 0.5).verdict, Verdict::Fails);
    }

    #[test]
    fn kaplan_examples() {
        let pi2 = std::f64::consts::PI.powi(2);
        let p = params(1.0, 1.0, 0.0, 0.0, 1);
        let r = classify_kaplan(&p, pi2, 1.2);
        assert_eq!(r.verdict, Verdict::Holds);
        assert!(r.t_star.unwrap().is_finite());
        assert!((r.entries[1].rhs - 1.0).abs() < 1e-15);
        assert_eq!(classify_kaplan(&params(1.0, 1.0, 0.0, 20.0, 1), 1.0, 5.0).verdict, Verdict::Inconclusive);
        let at = classify_kaplan(&p, pi2, kaplan_threshold(&p, pi2).unwrap());
        assert_eq!(at.verdict, Verdict::Fails);
        assert!(at.t_star.is_none());
    }

    #[test]
    fn concavity_examples() {
        let g = Grid::unit_interval(100).unwrap();
        let r = classify_concavity(
            &params(2.0, 1.0, 1.0, 1.0, 1),
            &Field::constant(g, BoundaryKind::Neumann, Variable::V, 0.0),
            2.0,
        )
        .unwrap();
        assert_eq!(r.entries[0].rhs, 1.0);
        assert_eq!(r.entries[0].verdict, Verdict::Holds);
        assert_eq!(r.entries[2].verdict, Verdict::Fails);
        assert_eq!(r.verdict, Verdict::Fails);

        let bump = Field::from_fn(g, BoundaryKind::Neumann, Variable::V, |x| (-(x[0] - 0.5).powi(2) / 0.02).exp());
        let r = classify_concavity(&params(2.0, 1.0, 0.0, 0.0, 1), &bump, 2.0).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert!(r.entries[2].lhs > 0.0);

        let r = classify_concavity(&params(2.0, 1.0, 1.5, 1.0, 1), &bump, 2.0).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert_eq!(r.entries[3].verdict, Verdict::Fails);
    }

    #[test]
    fn pohozaev_examples() {
        let p = params(1.0, 1.0, -1.0, -1.0, 3);
        assert_eq!(pohozaev_quadratic(&p), (-1.0, 2.0, -1.0));
        let r = pohozaev_nonexistence(&p).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert_eq!(r.entries[2].lhs, 0.0);
        let cor = &r.entries[3];
        assert_eq!(cor.verdict, Verdict::Holds);
        assert_eq!((cor.lhs, cor.rhs), (12.0, 12.0));
        assert!(r.notes.iter().any(|n| n.contains("not evaluated")));

        let r = pohozaev_nonexistence(&params(1.0, 1.0, 0.0, 0.0, 3)).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert_eq!(pohozaev_nonexistence(&params(1.0, 1.0, -1.0, 0.5, 3)).unwrap().verdict, Verdict::Fails);
        assert!(pohozaev_nonexistence(&params(1.0, 1.0, -1.0, -1.0, 2)).is_err());
        // bd = 0 branch
        assert_eq!(pohozaev_nonexistence(&params(1.0, 1.0, -1.0, 0.0, 4)).unwrap().verdict, Verdict::Fails);
        assert_eq!(pohozaev_nonexistence(&params(1.0, 1.0, 1.0, 0.0, 4)).unwrap().verdict, Verdict::Fails);
        assert_eq!(pohozaev_nonexistence(&params(1.0, 1.0, 0.0, 0.0, 6)).unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn linear_stability_examples() {
        let spec = NeumannSpectrum::new(vec![0.0, 2.0]).unwrap();
        let r = linear_stability(&params(1.0, 1.0, 1.0, 1.0, 1), &spec).unwrap();
        assert_eq!(r.rates.as_ref().unwrap(), &vec![-1.0, 1.0]);
        assert_eq!(r.verdict, Verdict::Fails);
        // c/d = a/2b exactly: slope 0, all rates −c
        let r = linear_stability(&params(2.0, 1.0, 1.0, 1.0, 1), &spec).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert!(r.rates.unwrap().iter().all(|&x| x == -1.0));
        assert!(linear_stability(&params(1.0, 1.0, 0.0, 1.0, 1), &spec).is_err());
    }

    /// `10⁶` log-spaced points of `[0, 10⁶]`.
    fn sample_points() -> Vec<f64> {
        let n = 1_000_000;
        let (lo, hi) = (1e-9f64, 1e6f64);
        let step = (hi / lo).ln() / (n - 2) as f64;
        std::iter::once(0.0).chain((0..n - 1).map(|i| lo * (step * i as f64).exp())).collect()
    }

    fn sampled_max(p: &Params, points: &[f64]) -> f64 {
        let (qa, qb, qc) = pohozaev_quadratic(p);
        points.iter().map(|&s| (qa * s + qb) * s + qc).fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn pohozaev_never_contradicted_by_sampler() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let points = sample_points();
        let mut holds = 0;
        for _ in 0..1000 {
            let p = Params::new(
                rng.random_range(0.1..3.0),
                rng.random_range(0.1..3.0),
                rng.random_range(-3.0..1.0),
                rng.random_range(-3.0..1.0),
                rng.random_range(3..9),
            )
            .unwrap();
            let r = pohozaev_nonexistence(&p).unwrap();
            let sampled = sampled_max(&p, &points);
            if r.verdict == Verdict::Holds {
                holds += 1;
                assert!(sampled <= 1e-12 * (1.0 + pohozaev_quadratic(&p).1.abs()), "{p:?}: {sampled}");
            }
            if sampled > 1e-9 {
                assert_eq!(r.verdict, Verdict::Fails, "{p:?}");
            }
        }
        assert!(holds > 50, "{holds}");
    }

    proptest! {
        #[test]
        fn kaplan_monotone_in_a0(a in 0.1f64..3.0, b in 0.1f64..3.0, c in -3.0f64..3.0, d in -3.0f64..1.0,
                                 a0 in 0.0f64..10.0, extra in 0.0f64..10.0) {
            let p = Params::new(a, b, c, d, 1).unwrap();
            let mu = 9.87;
            if classify_kaplan(&p, mu, a0).verdict == Verdict::Holds {
                prop_assert_eq!(classify_kaplan(&p, mu, a0 + extra).verdict, Verdict::Holds);
            }
        }

        #[test]
        fn stability_closed_form_matches_modes(a in 0.1f64..3.0, b in 0.1f64..3.0, c in 0.1f64..3.0, d in 0.1f64..3.0) {
            let p = Params::new(a, b, c, d, 1).unwrap();
            let slope = 2.0 * b * c / d - a;
            prop_assume!(slope <= 0.0 || slope * 1e4 > c);
            let lambdas: Vec<f64> = (0..200).map(|k| 1e4 * (k as f64 / 199.0).powi(2)).collect();
            let r = linear_stability(&p, &NeumannSpectrum::new(lambdas).unwrap()).unwrap();
            let all_negative = r.rates.as_ref().unwrap().iter().all(|&x| x < 0.0);
            prop_assert_eq!(r.verdict == Verdict::Holds, all_negative);
        }
    }
}
