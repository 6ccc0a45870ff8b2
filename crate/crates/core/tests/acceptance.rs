//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use quantpoly::model::{PolynomialQuantileModel, DEFAULT_U_HI, DEFAULT_U_LO};
use quantpoly::percentile::{fit_named, pm_grid, NamedFit};
use quantpoly::pwm::{
    fit_pwm, model_pwm, sample_pwm, weibull_moment_closed_form, weibull_moment_quadrature,
};
use quantpoly::{ReferenceDistribution as Dist, WeibullBase};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MIXTURE_SEED: u64 = 20_240_229;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct SweepRow {
    family: &'static str,
    limit: f64,
    members: Vec<Dist>,
}

fn table1_rows() -> Vec<SweepRow> {
    let mut lognormal = Vec::new();
    for mu in [0.0, 25.0, 50.0, 75.0, 100.0] {
        for sigma in [0.1, 0.25, 0.5, 0.75, 1.0] {
            lognormal.push(Dist::lognormal(mu, sigma).unwrap());
        }
    }
    let normal = [0.5, 1.0, 2.0, 5.0, 10.0].map(|s| Dist::normal(0.0, s).unwrap()).to_vec();
    let mut gamma = Vec::new();
    for a in [1.0, 2.0, 5.0, 10.0, 25.0, 50.0, 100.0] {
        for b in [1.0, 10.0, 100.0] {
            gamma.push(Dist::gamma(a, b).unwrap());
        }
    }
    let mut beta = Vec::new();
    for a in [1.5, 3.0, 5.0, 10.0, 20.0] {
        for b in [1.5, 3.0, 5.0, 10.0, 20.0] {
            beta.push(Dist::beta(a, b).unwrap());
        }
    }
    let rayleigh = [0.01, 0.5, 1.0, 10.0, 100.0, 200.0].map(|v| Dist::rayleigh(v).unwrap()).to_vec();
    let chisquare = [2.0, 3.0, 5.0, 10.0, 25.0, 50.0, 100.0].map(|v| Dist::chisquare(v).unwrap()).to_vec();
    vec![
        SweepRow { family: "lognormal", limit: 0.14, members: lognormal },
        SweepRow { family: "normal", limit: 0.32, members: normal },
        SweepRow { family: "gamma", limit: 0.10, members: gamma },
        SweepRow { family: "beta", limit: 0.17, members: beta },
        SweepRow { family: "rayleigh", limit: 0.0132, members: rayleigh },
        SweepRow { family: "chisquare", limit: 0.15, members: chisquare },
    ]
}

fn t_members() -> Vec<Dist> {
    [2.0, 5.0, 10.0, 50.0, 100.0].map(|v| Dist::student_t(v).unwrap()).to_vec()
}

struct Instance {
    dist: Dist,
    max_limit: f64,
    avg_limit: f64,
}

fn table2_instances() -> Vec<Instance> {
    let inst = |dist: Dist, max: f64, avg: f64| Instance { dist, max_limit: 2.0 * max, avg_limit: 10.0 * avg };
    vec![
        inst(Dist::lognormal(0.0, 1.0).unwrap(), 0.015, 1.8e-5),
        inst(Dist::normal(0.0, 1.0).unwrap(), 0.16, 5.1e-4),
        inst(Dist::gamma(10.0, 1.0).unwrap(), 0.074, 1.4e-4),
        inst(Dist::beta(1.5, 1.5).unwrap(), 0.0085, 1.1e-5),
        inst(Dist::rayleigh(0.5).unwrap(), 0.0015, 2.1e-6),
        inst(Dist::rayleigh(1.0).unwrap(), 0.0015, 2.1e-6),
        inst(Dist::chisquare(3.0).unwrap(), 0.030, 2.6e-5),
    ]
}

fn fit(d: &Dist) -> NamedFit {
    fit_named(d).unwrap_or_else(|e| panic!("{d}: {e}"))
}

fn criterion_1() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for row in table1_rows() {
        let (mut worst, mut at) = (0.0_f64, String::new());
        for d in &row.members {
            let m = fit(d).report.summary.max;
            if m > worst {
                worst = m;
                at = d.to_string();
            }
        }
        let ok = worst <= row.limit;
        pass &= ok;
        parts.push(format!(
            "{} {} max {worst:.3e}% at {at} (limit {}%)",
            if ok { "ok" } else { "OVER" },
            row.family,
            row.limit
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_2() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for inst in table2_instances() {
        let s = fit(&inst.dist).report.summary;
        let ok = s.max <= inst.max_limit && s.average <= inst.avg_limit;
        pass &= ok;
        parts.push(format!(
            "{} {}: max {:.3e}% (limit {:.3e}), avg {:.3e}% (limit {:.3e}), min {:.1e}%",
            if ok { "ok" } else { "OVER" },
            inst.dist,
            s.max,
            inst.max_limit,
            s.average,
            inst.avg_limit,
            s.min
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for d in t_members() {
        let f = fit(&d);
        assert_eq!((f.settings.base.k(), f.settings.grid_count, f.settings.degree), (6.0, 141, 20));
        let m = f.report.summary.max;
        let ok = m <= 1.34;
        pass &= ok;
        parts.push(format!("{} {d} max {m:.4}%", if ok { "ok" } else { "OVER" }));
    }
    outcome(pass, format!("{} (limit 1.34%)", parts.join("; ")))
}

fn criterion_4() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for nu in [0.01, 0.5, 1.0, 10.0, 200.0] {
        let f = fit(&Dist::rayleigh(nu).unwrap());
        let a = f.model.coeffs();
        let want = nu * std::f64::consts::SQRT_2;
        let a2_rel = (a[2] - want).abs() / want;
        let others = a
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 2)
            .map(|(_, c)| c.abs())
            .fold(0.0, f64::max)
            / nu;
        let eps = f.report.summary.max;
        let ok = a2_rel <= 1e-6 && others <= 1e-6 && eps <= 1e-6;
        pass &= ok;
        parts.push(format!(
            "{} nu={nu}: |a2-nu*sqrt2|/(nu*sqrt2) {a2_rel:.2e}, max|ai|/nu {others:.2e}, max eps {eps:.2e}%",
            if ok { "ok" } else { "OVER" }
        ));
    }
    outcome(pass, format!("{} (limits 1e-6, 1e-6, 1e-6%)", parts.join("; ")))
}

fn criterion_5() -> Outcome {
    let mut worst = 0.0_f64;
    let mut at = (0.0, 0, 0);
    for base in [WeibullBase::default(), WeibullBase::student_t_default()] {
        for r in 0..=20 {
            for i in 0..=20 {
                let c = weibull_moment_closed_form(base, r, i);
                let q = weibull_moment_quadrature(base, r, i);
                let rel = (c - q).abs() / q.abs();
                if rel > worst {
                    worst = rel;
                    at = (base.k(), r, i);
                }
            }
        }
    }
    outcome(
        worst <= 1e-8,
        format!("max relative disagreement {worst:.2e} at k={} r={} i={} (limit 1e-8)", at.0, at.1, at.2),
    )
}

fn criterion_6() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let datasets: Vec<(&str, Vec<f64>)> = vec![
        ("gamma(10,1)", Dist::gamma(10.0, 1.0).unwrap().sample_seeded(20_000, 11)),
        ("normal(0,1)", Dist::normal(0.0, 1.0).unwrap().sample_seeded(20_000, 12)),
        ("lognormal(0,0.5)", Dist::lognormal(0.0, 0.5).unwrap().sample_seeded(20_000, 13)),
        ("mixture", Dist::mixture(2.4, 0.5).unwrap().sample_seeded(100_000, MIXTURE_SEED)),
    ];
    for (name, data) in &datasets {
        for degree in [3, 8, 20] {
            let f = match fit_pwm(data, WeibullBase::default(), degree) {
                Ok(f) => f,
                Err(e) => {
                    pass = false;
                    parts.push(format!("FAIL {name} n={degree}: {e}"));
                    continue;
                }
            };
            let sample = &f.diagnostics.sample_pwm.values;
            let back = model_pwm(&f.model, degree).unwrap().values;
            let norm = sample.iter().map(|b| b * b).sum::<f64>().sqrt();
            let gap = sample.iter().zip(&back).map(|(s, b)| (s - b) * (s - b)).sum::<f64>().sqrt();
            let worst = gap / norm;
            let ok = worst <= 1e-8;
            pass &= ok;
            if !ok || degree == 20 {
                parts.push(format!("{} {name} n={degree}: {worst:.2e}", if ok { "ok" } else { "OVER" }));
            }
        }
    }
    outcome(pass, format!("{} (limit 1e-8, normwise relative)", parts.join("; ")))
}

fn criterion_7() -> Outcome {
    let base = WeibullBase::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let reps = 1_000;
    let mut sums = [0.0; 4];
    let mut sq = [0.0; 4];
    for _ in 0..reps {
        let data: Vec<f64> = (0..100).map(|_| base.quantile(rng.random::<f64>()).unwrap()).collect();
        let b = sample_pwm(&data, 3).unwrap();
        for r in 0..4 {
            sums[r] += b.values[r];
            sq[r] += b.values[r] * b.values[r];
        }
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for r in 0..4 {
        let mean = sums[r] / reps as f64;
        let var = (sq[r] / reps as f64 - mean * mean) * reps as f64 / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        let truth = weibull_moment_closed_form(base, r, 1);
        let z = (mean - truth) / se;
        pass &= z.abs() <= 4.0;
        parts.push(format!("r={r}: mean {mean:.6} vs {truth:.6} ({z:+.2} se)"));
    }
    outcome(pass, format!("{} (limit 4 se)", parts.join("; ")))
}

/// Local maxima of the fitted density along an even u-grid of the valid range.
fn density_maxima(model: &PolynomialQuantileModel, count: usize) -> Vec<f64> {
    let grid = pm_grid(count, DEFAULT_U_LO, DEFAULT_U_HI).unwrap();
    let xs: Vec<f64> = grid.iter().map(|&u| model.quantile(u).unwrap()).collect();
    let fs: Vec<f64> = grid.iter().map(|&u| 1.0 / model.quantile_derivative(u).unwrap()).collect();
    (1..count - 1)
        .filter(|&j| fs[j] > fs[j - 1] && fs[j] > fs[j + 1])
        .map(|j| xs[j])
        .collect()
}

fn kolmogorov_distance(model: &PolynomialQuantileModel, truth: &Dist, count: usize) -> f64 {
    // the model CDF equals u at x = Q(u); the tails outside the range add their mass
    let grid = pm_grid(count, DEFAULT_U_LO, DEFAULT_U_HI).unwrap();
    grid.iter()
        .map(|&u| {
            let x = model.quantile(u).unwrap();
            (truth.cdf(x).unwrap() - u).abs()
        })
        .fold(0.0, f64::max)
}

fn criterion_8() -> Outcome {
    let truth = Dist::mixture(2.4, 0.5).unwrap();
    let data = truth.sample_seeded(100_000, MIXTURE_SEED);
    let f = match fit_pwm(&data, WeibullBase::default(), 20) {
        Ok(f) => f,
        Err(e) => return outcome(false, format!("fit failed: {e}")),
    };
    let residual = f.diagnostics.residual;
    let maxima = density_maxima(&f.model, 10_000);
    let modes_ok = maxima.len() == 2 && maxima[0].abs() <= 0.3 && (maxima[1] - 2.4).abs() <= 0.3;
    let ks = kolmogorov_distance(&f.model, &truth, 10_000);
    let (a, b, c) = (residual <= 1e-8, modes_ok, ks <= 0.02);
    let shown: Vec<String> = maxima.iter().take(6).map(|x| format!("{x:.3}")).collect();
    outcome(
        a && b && c,
        format!(
            "(a) {} residual {residual:.2e} (limit 1e-8); (b) {} {} local maxima [{}{}], violations {}; (c) {} KS {ks:.4} (limit 0.02)",
            if a { "ok" } else { "OVER" },
            if b { "ok" } else { "OVER" },
            maxima.len(),
            shown.join(", "),
            if maxima.len() > 6 { ", ..." } else { "" },
            f.diagnostics.monotone.violating_points,
            if c { "ok" } else { "OVER" },
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    let all = table1_rows()
        .into_iter()
        .flat_map(|r| r.members)
        .chain(table2_instances().into_iter().map(|i| i.dist))
        .chain(t_members());
    for d in all {
        let f = fit(&d);
        let rep = f.model.check_monotone(10_000).unwrap();
        checked += 1;
        if !rep.is_monotone() {
            bad.push(format!("{d} ({} points)", rep.violating_points));
        }
    }
    outcome(
        bad.is_empty(),
        format!("{checked} models checked on 10^4 points; non-monotone: [{}]", bad.join(", ")),
    )
}

fn criterion_10() -> Outcome {
    let grid = pm_grid(197, 0.01, 0.99).unwrap();
    let h = 1e-4;
    let (mut worst, mut at) = (0.0_f64, String::new());
    let mut count = 0;
    for d in table1_rows().into_iter().flat_map(|r| r.members) {
        let m = fit(&d).model;
        let q = |u: f64| m.quantile(u).unwrap();
        for &u in &grid {
            let fd = (8.0 * (q(u + h) - q(u - h)) - (q(u + 2.0 * h) - q(u - 2.0 * h))) / (12.0 * h);
            let an = m.quantile_derivative(u).unwrap();
            let rel = (an - fd).abs() / an.abs();
            if rel > worst {
                worst = rel;
                at = format!("{d} at u={u:.4}");
            }
        }
        count += 1;
    }
    outcome(worst <= 1e-5, format!("{count} models, worst relative gap {worst:.2e} ({at}) (limit 1e-5)"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("quantile accuracy over parameter sweeps", criterion_1),
        ("per-instance error statistics", criterion_2),
        ("Student's t with W(1,6) and 141 points", criterion_3),
        ("exact representability of Rayleigh", criterion_4),
        ("moment matrix closed form vs quadrature", criterion_5),
        ("PWM round trip", criterion_6),
        ("sample PWM unbiasedness", criterion_7),
        ("normal-Bernoulli mixture fit", criterion_8),
        ("monotonicity of fitted models", criterion_9),
        ("derivative vs finite differences", criterion_10),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| outcome(false, "panicked"));
        if !result.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2}: {name} [{:.1}s] {}",
            if result.pass { "PASS" } else { "FAIL" },
            n + 1,
            start.elapsed().as_secs_f64(),
            result.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
