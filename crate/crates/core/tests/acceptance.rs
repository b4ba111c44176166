//! Acceptance criteria AC-1 .. AC-9, one PASS/FAIL line each.
//!
//! Run with `cargo test -p aggdiff --test acceptance`; pass criterion ids
//! (`AC-4 AC-6`) as arguments to run a subset.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use aggdiff::diagnostics::{
    check_gg, concavity_energy, concavity_series, entropy, entropy_dissipation, kaplan_a, kaplan_defects,
    kaplan_threshold, kaplan_tstar, kaplan_xi, ConcavityConfig,
};
use aggdiff::eigen::{dirichlet_first_numeric, neumann_spectrum_analytic};
use aggdiff::exact::{
    multibump_field, residual_check_with, residual_scale, support_radius, three_bump_example, validate_multibump,
    BarenblattBump, MultiBumpConfig, ResidualOptions,
};
use aggdiff::particles::{compare_to_pde, sample_initial, simulate, KdeBoundary, ParticleConfig};
use aggdiff::pde::{run, run_v_form, step_local, step_nonlocal, DtPolicy, EventKind, Kernel, Model, SolverConfig};
use aggdiff::regimes::{linear_stability, pohozaev_nonexistence, pohozaev_quadratic, Verdict};
use aggdiff::{BoundaryKind, Field, Grid, Params, Variable};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 9] = [
    ("AC-1", "Barenblatt oracle for the v-form solver", ac1_barenblatt),
    ("AC-2", "invariant region under the global-existence hypotheses", ac2_invariant_region),
    ("AC-3", "entropy decay and dissipation identity", ac3_entropy),
    ("AC-4", "eigenfunction blow-up machinery", ac4_kaplan),
    ("AC-5", "concavity functionals", ac5_concavity),
    ("AC-6", "particle system vs nonlocal PDE", ac6_mean_field),
    ("AC-7", "regime certificates", ac7_regimes),
    ("AC-8", "three-bump exact dataset", ac8_three_bumps),
    ("AC-9", "mass conservation over 10^4 steps", ac9_conservation),
];

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with("AC-")).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, title, f) in CRITERIA {
        if !filter.is_empty() && !filter.iter().any(|x| x == id) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        ran += 1;
        if !o.pass {
            failed += 1;
        }
        println!(
            "{id} {} {title}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn params(a: f64, b: f64, c: f64, d: f64, n: usize) -> Params {
    Params::new(a, b, c, d, n).expect("valid parameters")
}

/// L1 error of the v-form solver against the negative bump (T = 1) at
/// t = 0.5, over the whole grid and over `|x| ≤ 0.8 R(t)`.
fn barenblatt_errors(cells_per_unit: usize) -> (f64, f64, f64) {
    // a = 4 keeps u = v + a/2b nonnegative under the bump
    let p = params(4.0, 1.0, 0.0, 0.0, 1);
    let bump = BarenblattBump::negative(1.0, vec![0.0]).unwrap();
    let cfg = MultiBumpConfig::new(vec![bump.clone()]);
    let half = 5.0;
    let g = Grid::interval_on(-half, half, (2.0 * half) as usize * cells_per_unit).unwrap();
    let v0 = multibump_field(&cfg, &g, BoundaryKind::Neumann, 0.0, &p).unwrap();
    let mut sc = SolverConfig::new(Model::Local, 0.5);
    sc.output_stride = usize::MAX;
    let res = run_v_form(&v0, &p, &sc).unwrap();
    assert!(res.completed(), "{:?}", res.events);
    let exact = multibump_field(&cfg, &g, BoundaryKind::Neumann, 0.5, &p).unwrap();
    let num = &res.last().field;
    let w = g.weights();
    let r = support_radius(&bump, 0.5, 1).unwrap();
    let (mut err, mut norm, mut inner) = (0.0, 0.0, 0.0);
    for k in 0..g.len() {
        let e = w[k] * (num.values[k] - exact.values[k]).abs();
        err += e;
        norm += w[k] * exact.values[k].abs();
        if g.point(k)[0].abs() <= 0.8 * r {
            inner += e;
        }
    }
    (err / norm, inner, r)
}

fn ac1_barenblatt() -> Outcome {
    let (rel200, inner200, r) = barenblatt_errors(200);
    let (_, inner100, _) = barenblatt_errors(100);
    let order = (inner100 / inner200).log2();
    outcome(
        rel200 <= 0.05 && order >= 1.5,
        format!("rel L1 error {rel200:.3e} (<= 5e-2), interior order {order:.2} (>= 1.5), R(0.5) = {r:.3}"),
    )
}

fn ac2_invariant_region() -> Outcome {
    let p = params(2.0, 1.0, 0.5, 1.0, 1);
    let eps0 = 0.1;
    let cap = 1.0 - eps0;
    let g = Grid::unit_interval(100).unwrap();
    let mut worst = (f64::INFINITY, f64::NEG_INFINITY);
    let mut events_ok = true;
    for bc in [BoundaryKind::Neumann, BoundaryKind::Dirichlet] {
        let u0 = Field::from_fn(g, bc, Variable::U, |x| {
            (cap * 1.5 * (-(x[0] - 0.4).powi(2) / (2.0 * 0.12f64.powi(2))).exp()).min(cap)
        });
        let res = run(&u0, &p, &SolverConfig::new(Model::Local, 2.0)).unwrap();
        events_ok &= res.events.len() == 1 && res.events[0].kind == EventKind::Completed;
        for s in &res.trajectory {
            worst.0 = worst.0.min(s.field.min());
            worst.1 = worst.1.max(s.field.max());
        }
    }
    outcome(
        events_ok && worst.0 >= -1e-8 && worst.1 <= cap + 1e-8,
        format!("min u {:.3e}, max u {:.12} (cap {cap}), events = [completed]: {events_ok}", worst.0, worst.1),
    )
}

fn ac3_entropy() -> Outcome {
    let p = params(1.0, 1.0, 0.0, 0.0, 1);
    let g = Grid::unit_interval(100).unwrap();
    let u0 = Field::from_fn(g, BoundaryKind::Neumann, Variable::U, |x| 0.25 + 0.15 * (PI * x[0]).cos());
    let dt = 1e-5;
    let mut sc = SolverConfig::new(Model::Local, 0.05);
    sc.dt_policy = DtPolicy::Fixed { dt };
    sc.output_stride = 100;
    let res = run(&u0, &p, &sc).unwrap();
    let e: Vec<f64> = res.trajectory.iter().map(|s| entropy(&s.field, &p).unwrap()).collect();
    let monotone = e.windows(2).all(|w| w[1] <= w[0] + 1e-10);
    // difference quotients over 4Δ and Δ at t = 0.01 (Δ = 1e-3)
    let k = 10;
    let t = &res.trajectory;
    let d = entropy_dissipation(&t[k].field, &p).unwrap();
    let coarse = (e[k + 4] - e[k]) / (t[k + 4].t - t[k].t);
    let fine = (e[k + 1] - e[k]) / (t[k + 1].t - t[k].t);
    let (rc, rf) = (((coarse - d) / d).abs(), ((fine - d) / d).abs());
    outcome(
        monotone && rf <= 0.1 && rf < rc,
        format!("entropy nonincreasing: {monotone}; dE/dt vs D rel. error {rc:.3e} (4x dt) -> {rf:.3e} (<= 0.1)"),
    )
}

struct KaplanRun {
    tau: f64,
    xi_drop: f64,
    min_defect: f64,
}

fn kaplan_run(cells: usize, dt: f64, t_end: f64, epsilon: f64) -> KaplanRun {
    let p = params(1.0, 1.0, 0.0, 0.0, 1);
    let g = Grid::unit_interval(cells).unwrap();
    let ep = dirichlet_first_numeric(&g, 1e-12).unwrap();
    let mu = ep.mu;
    let threshold = kaplan_threshold(&p, mu).unwrap();
    let shape = Field::from_fn(g, BoundaryKind::Dirichlet, Variable::U, |x| (PI * x[0]).sin());
    let scale = 2.0 * threshold / kaplan_a(&shape, &ep).unwrap();
    let mut u = Field::from_fn(g, BoundaryKind::Dirichlet, Variable::U, |x| scale * (PI * x[0]).sin());
    let kernel = Kernel::gaussian(epsilon, &p, &g).unwrap();
    let steps = (t_end / dt).round() as usize;
    let mut times = vec![0.0];
    let mut a = vec![kaplan_a(&u, &ep).unwrap()];
    for k in 1..=steps {
        u = step_nonlocal(&u, &p, &kernel, dt).unwrap();
        times.push(k as f64 * dt);
        a.push(kaplan_a(&u, &ep).unwrap());
    }
    let defects = kaplan_defects(&times, &a, &p, mu).unwrap();
    let min_defect = defects.iter().copied().fold(f64::INFINITY, f64::min);
    let xi: Vec<f64> = times.iter().zip(&a).map(|(&t, &a)| kaplan_xi(t, a, &p, mu)).collect();
    let xi_drop = xi.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    KaplanRun {
        tau: (-min_defect).max(0.0),
        xi_drop,
        min_defect,
    }
}

fn ac4_kaplan() -> Outcome {
    let g = Grid::unit_interval(200).unwrap();
    let mu = dirichlet_first_numeric(&g, 1e-12).unwrap().mu;
    let mu_ok = (mu - PI * PI).abs() <= 1e-3;
    let p1 = params(1.0, 1.0, 0.0, 0.0, 1);
    let thr_ok = (kaplan_threshold(&p1, PI * PI).unwrap() - 1.0).abs() <= 1e-12;
    let q = params(1.0, 2.0, 2.0, 1.0, 1);
    let tstar = kaplan_tstar(&q, 1.0, 1.0).unwrap();
    let tstar_ok = (tstar - 2f64.ln()).abs() <= 1e-12 && kaplan_threshold(&q, 1.0).unwrap() == 0.0;

    // the window ends before the run concentrates at the kernel scale, where
    // the nonlocal dynamics stop tracking the local inequality
    let (t_end, eps) = (0.004, 0.05);
    let coarse = kaplan_run(200, 2e-6, t_end, eps);
    let fine = kaplan_run(400, 1e-6, t_end, eps);
    let xi_ok = coarse.xi_drop <= coarse.tau.max(1e-12) && fine.xi_drop <= fine.tau.max(1e-12);
    let tau_ok = fine.tau <= 0.5 * coarse.tau || fine.tau == 0.0;
    outcome(
        mu_ok && thr_ok && tstar_ok && xi_ok && tau_ok,
        format!(
            "mu = {mu:.6} (|mu - pi^2| = {:.1e}), t* = {tstar:.12}, Xi max drop {:.1e}/{:.1e}, \
             tau_err {:.3e} -> {:.3e} (min defect {:.3e} -> {:.3e})",
            (mu - PI * PI).abs(),
            coarse.xi_drop,
            fine.xi_drop,
            coarse.tau,
            fine.tau,
            coarse.min_defect,
            fine.min_defect
        ),
    )
}

fn ac5_concavity() -> Outcome {
    // c = ad/b (< ad/2b since d < 0) and a superlinear reaction
    let (a, b, d) = (0.1f64, 1.0, -1.0);
    let c = (a * d / b).min(a * d / (2.0 * b));
    let p = params(a, b, c, d, 1);
    let m = 2.0;
    let cfg = ConcavityConfig::new(&p, m).unwrap();
    let g = Grid::unit_interval(400).unwrap();
    let v0 = Field::from_fn(g, BoundaryKind::Neumann, Variable::V, |x| 1.0 + 0.3 * (PI * x[0]).cos());
    let e0 = concavity_energy(&v0, &cfg, &p).unwrap();
    let u0 = aggdiff::model::from_v(&v0, &p).unwrap();
    // short window: the shifted dynamics are backward parabolic and the
    // kernel-scale modes grow at rates ~ 1/eps²
    let mut sc = SolverConfig::new(Model::Nonlocal { epsilon: 0.05 }, 0.01);
    sc.dt_policy = DtPolicy::Fixed { dt: 5e-6 };
    sc.output_stride = 100;
    let res = run(&u0, &p, &sc).unwrap();
    let series = concavity_series(&res, &cfg, &p).unwrap();
    let e = &series.energy;
    let e_drop = e.windows(2).map(|w| (w[0] - w[1]) / w[0].abs()).fold(f64::NEG_INFINITY, f64::max);
    let bound = 2.0 * (m + 1.0) * e0;
    let min_second = series.psi_second.iter().filter(|x| x.is_finite()).copied().fold(f64::INFINITY, f64::min);
    let second_ok = min_second >= bound - 0.01 * bound.abs();
    let gg = check_gg(&cfg, 10.0 * v0.max(), 2000).unwrap();
    let bad = params(a, b, c + 0.5, d, 1);
    let gg_bad = check_gg(&ConcavityConfig::new(&bad, m).unwrap(), 10.0 * v0.max(), 2000).unwrap();
    outcome(
        e0 > 0.0 && e_drop <= 0.01 && second_ok && gg.holds() && !gg_bad.holds(),
        format!(
            "E(0) = {e0:.4e}, E({}) = {:.4e}, max rel E drop {e_drop:.2e} (<= 1e-2), \
             min Psi'' {min_second:.4e} vs 2(m+1)E(0) = {bound:.4e}, gG violations {} / with c+0.5: {}",
            series.times.last().unwrap(),
            e.last().unwrap(),
            gg.violations,
            gg_bad.violations
        ),
    )
}

fn ac6_mean_field() -> Outcome {
    let p = params(0.5, 0.25, 0.0, 0.0, 1);
    let (eps, t_end, dt) = (0.1, 0.2, 0.01);
    let g = Grid::interval_on(-4.0, 4.0, 400).unwrap();
    let sigma = 0.5;
    let u0 = Field::from_fn(g, BoundaryKind::Neumann, Variable::U, |x| {
        (-(x[0] * x[0]) / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
    });
    let mass = u0.integral();
    let mut sc = SolverConfig::new(Model::Nonlocal { epsilon: eps }, t_end);
    sc.output_stride = usize::MAX;
    let pde = run(&u0, &p, &sc).unwrap();
    let mut means = Vec::new();
    for n in [500usize, 2000, 8000] {
        let mut pc = ParticleConfig::new(n, eps, dt, t_end);
        pc.mass = mass;
        pc.record_every = usize::MAX;
        let seeds = 5;
        let total: f64 = (0..seeds)
            .map(|seed| {
                let s0 = sample_initial(&u0, n, 1000 + seed).unwrap();
                let pr = simulate(&s0, &pc, &p).unwrap();
                compare_to_pde(&pr, &pde, &[t_end], None, KdeBoundary::Truncate).unwrap()[0].l1_error
            })
            .sum();
        means.push(total / seeds as f64);
    }
    let ok = means[1] <= 0.1 * mass && means[0] > means[1] && means[1] > means[2];
    outcome(
        ok,
        format!(
            "mean L1 at t = {t_end}: N=500 {:.4}, N=2000 {:.4} (<= {:.3}), N=8000 {:.4}",
            means[0],
            means[1],
            0.1 * mass,
            means[2]
        ),
    )
}

fn ac7_regimes() -> Outcome {
    let p = params(1.0, 1.0, -1.0, -1.0, 3);
    let rep = pohozaev_nonexistence(&p).unwrap();
    let q_ok = pohozaev_quadratic(&p) == (-1.0, 2.0, -1.0);
    let cor = &rep.entries[3];
    let poh_ok = rep.verdict == Verdict::Holds && cor.verdict == Verdict::Holds && cor.lhs == 12.0 && cor.rhs == 12.0;

    let spec = neumann_spectrum_analytic(&Grid::unit_interval(100).unwrap(), 50).unwrap();
    let stable = linear_stability(&params(2.0, 1.0, 0.5, 1.0, 1), &spec).unwrap();
    let edge = linear_stability(&params(2.0, 1.0, 1.0, 1.0, 1), &spec).unwrap();
    let unstable = linear_stability(&params(1.0, 1.0, 1.0, 1.0, 1), &aggdiff::eigen::NeumannSpectrum::new(vec![0.0, 2.0]).unwrap()).unwrap();
    let lin_ok = stable.verdict == Verdict::Holds
        && edge.verdict == Verdict::Holds
        && unstable.rates.as_ref().unwrap()[1] == 1.0;

    // brute-force sampler on 1000 random tuples
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let n_pts = 1_000_000;
    let step = (1e6f64 / 1e-9).ln() / (n_pts - 2) as f64;
    let pts: Vec<f64> = std::iter::once(0.0).chain((0..n_pts - 1).map(|i| 1e-9 * (step * i as f64).exp())).collect();
    let mut contradictions = 0;
    let mut holds = 0;
    for _ in 0..1000 {
        let p = Params::new(
            rng.random_range(0.1..3.0),
            rng.random_range(0.1..3.0),
            rng.random_range(-3.0..1.0),
            rng.random_range(-3.0..1.0),
            rng.random_range(3..10),
        )
        .unwrap();
        let (qa, qb, qc) = pohozaev_quadratic(&p);
        let sampled = pts.iter().map(|&s| (qa * s + qb) * s + qc).fold(f64::NEG_INFINITY, f64::max);
        if pohozaev_nonexistence(&p).unwrap().verdict == Verdict::Holds {
            holds += 1;
            if sampled > 1e-12 * (1.0 + qb.abs()) {
                contradictions += 1;
            }
        }
    }
    outcome(
        q_ok && poh_ok && lin_ok && contradictions == 0,
        format!(
            "q = -(s-1)^2: {q_ok}, corollary {} = {}, stability verdicts ok: {lin_ok}, \
             rate(lambda=2) = {}, sampler contradictions {contradictions}/{holds} certified",
            cor.lhs,
            cor.rhs,
            unstable.rates.as_ref().unwrap()[1]
        ),
    )
}

fn ac8_three_bumps() -> Outcome {
    let (cfg, p, times) = three_bump_example();
    let report = validate_multibump(&cfg, &p);
    let g = Grid::interval_on(-16.0, 16.0, 6400).unwrap();
    let slices_ok = times.iter().all(|&t| {
        multibump_field(&cfg, &g, BoundaryKind::Neumann, t, &p)
            .map(|f| f.is_finite() && f.max() > 0.0 && f.min() < 0.0)
            .unwrap_or(false)
    });
    let opts = ResidualOptions {
        interior_fraction: Some(0.9),
        ..Default::default()
    };
    let h = g.h;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for &t in times.iter().filter(|&&t| t > 0.0) {
        let r = residual_check_with(&cfg, &g, t, &p, &opts).unwrap();
        let bound = 5.0 * h * h * residual_scale(&cfg, t, &p).unwrap();
        worst = worst.max(r.max_residual / bound);
        ok &= r.max_residual <= bound;
    }
    outcome(
        report.is_valid() && slices_ok && ok,
        format!(
            "valid: {}, slices at {times:?} evaluated: {slices_ok}, worst residual / bound = {worst:.3}",
            report.is_valid()
        ),
    )
}

fn ac9_conservation() -> Outcome {
    let p = params(1.0, 1.0, 0.0, 0.0, 1);
    let g = Grid::unit_interval(100).unwrap();
    let u0 = Field::from_fn(g, BoundaryKind::Neumann, Variable::U, |x| 0.25 + 0.15 * (PI * x[0]).cos());
    let m0 = u0.integral();
    let mut local = u0.clone();
    let dt = 2e-5;
    for _ in 0..10_000 {
        local = step_local(&local, &p, dt).unwrap();
    }
    let kernel = Kernel::gaussian(0.05, &p, &g).unwrap();
    let mut nonlocal = u0.clone();
    for _ in 0..10_000 {
        nonlocal = step_nonlocal(&nonlocal, &p, &kernel, dt).unwrap();
    }
    let dl = ((local.integral() - m0) / m0).abs();
    let dn = ((nonlocal.integral() - m0) / m0).abs();
    outcome(
        dl <= 1e-12 && dn <= 1e-12,
        format!("relative mass drift: local {dl:.2e}, nonlocal {dn:.2e} (<= 1e-12)"),
    )
}
