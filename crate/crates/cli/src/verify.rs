//! Fast invariant checks against independent oracles.
//!
//! Every check is seeded, so the table (and `verify.csv`) is identical from
//! run to run. `tighten` divides the tolerances of the deterministic checks;
//! the statistical bands are left alone.

use std::path::PathBuf;

use disteval::agents::{run_td, RepresentationSpec, RunConfig, Sampling, StepSchedule};
use disteval::bellman::{
    apply_bellman, apply_projected_bellman, dcfp_solve, distributional_dp, second_order_sigma, sigma_variation,
    DpOptions,
};
use disteval::concentration::{azuma_bound, freedman_bound, shipped_specs, violation_rate};
use disteval::mdp::{draw_state, induced_kernel, ChainInfo, Gallery, Policy, TabularMDP, TransitionSampler};
use disteval::measures::{
    compress, cramer, project_categorical, sup_metric, w1, CategoricalDist, Distribution, Metric, ParticleDist,
    ReturnModel, SupportGrid,
};
use disteval::rng::{stream, SimRng};
use rand::Rng;

use crate::error::{CliError, CliResult};
use crate::spec::load_gallery;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub tighten: f64,
}

/// One row of the table: `observed <= threshold` passes.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub threshold: f64,
}

impl Check {
    fn new(name: impl Into<String>, observed: f64, threshold: f64) -> Self {
        Self { name: name.into(), observed, threshold }
    }

    pub fn passed(&self) -> bool {
        self.observed <= self.threshold
    }
}

fn random_particle(rng: &mut SimRng, atoms: usize, upper: f64) -> ParticleDist {
    let raw: Vec<(f64, f64)> = (0..atoms).map(|_| (rng.random::<f64>() * upper, rng.random::<f64>() + 0.01)).collect();
    let total: f64 = raw.iter().map(|a| a.1).sum();
    ParticleDist::new(raw.into_iter().map(|(x, w)| (x, w / total)).collect()).expect("valid atoms")
}

fn random_categorical(rng: &mut SimRng, grid: SupportGrid) -> CategoricalDist {
    let raw: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    CategoricalDist::new(grid, raw.into_iter().map(|w| w / total).collect()).expect("valid probabilities")
}

fn particle_model(rng: &mut SimRng, n: usize, upper: f64) -> ReturnModel {
    ReturnModel::new((0..n).map(|_| random_particle(rng, 5, upper).into()).collect()).expect("valid model")
}

fn categorical_model(rng: &mut SimRng, n: usize, grid: SupportGrid) -> ReturnModel {
    ReturnModel::new((0..n).map(|_| random_categorical(rng, grid).into()).collect()).expect("valid model")
}

/// `W1` as the integral of the quantile gap, walking both quantile
/// functions over the merged cumulative weights.
fn w1_by_quantiles(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut ca, mut cb) = (a[0].1, b[0].1);
    let mut level = 0.0;
    let mut total = 0.0;
    loop {
        let next = ca.min(cb).min(1.0);
        total += (next - level).max(0.0) * (a[i].0 - b[j].0).abs();
        level = next;
        let adv_a = ca <= next && i + 1 < a.len();
        let adv_b = cb <= next && j + 1 < b.len();
        if !adv_a && !adv_b {
            break;
        }
        if adv_a {
            i += 1;
            ca += a[i].1;
        }
        if adv_b {
            j += 1;
            cb += b[j].1;
        }
    }
    total
}

/// Kolmogorov distance between the empirical law of `samples` and `exact`.
pub fn ks_distance(samples: &mut [f64], exact: &Distribution) -> f64 {
    samples.sort_by(f64::total_cmp);
    let atoms = exact.atoms();
    let mut cum = Vec::with_capacity(atoms.len());
    let mut acc = 0.0;
    for &(_, w) in atoms.iter() {
        acc += w;
        cum.push(acc);
    }
    let n = samples.len() as f64;
    let f_le = |x: f64| {
        let i = atoms.partition_point(|p| p.0 <= x);
        if i == 0 { 0.0 } else { cum[i - 1] }
    };
    let f_lt = |x: f64| {
        let i = atoms.partition_point(|p| p.0 < x);
        if i == 0 { 0.0 } else { cum[i - 1] }
    };
    let mut points: Vec<f64> = samples.to_vec();
    points.extend(atoms.iter().map(|p| p.0));
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
        .iter()
        .map(|&x| {
            let en_le = samples.partition_point(|&s| s <= x) as f64 / n;
            let en_lt = samples.partition_point(|&s| s < x) as f64 / n;
            (en_le - f_le(x)).abs().max((en_lt - f_lt(x)).abs())
        })
        .fold(0.0, f64::max)
}

/// Draws `n` independent returns `r + gamma Z`, `Z ~ eta(s')`, from state `s`.
pub fn sample_targets(rng: &mut SimRng, mdp: &TabularMDP, policy: &Policy, eta: &ReturnModel, s: usize, n: usize) -> CliResult<Vec<f64>> {
    let sampler = TransitionSampler::new(mdp, policy)?;
    let tables: Vec<(Vec<f64>, Vec<f64>)> = eta
        .iter()
        .map(|d| d.atoms().iter().map(|&(x, w)| (x, w)).unzip())
        .collect();
    Ok((0..n)
        .map(|_| {
            let t = sampler.step(rng, s);
            let (xs, ws) = &tables[t.s_next];
            t.r + mdp.gamma() * xs[draw_state(rng, ws)]
        })
        .collect())
}

/// The DKW radius at confidence `1 - fail` for `n` samples.
pub fn dkw_radius(n: usize, fail: f64) -> f64 {
    ((2.0 / fail).ln() / (2.0 * n as f64)).sqrt()
}

fn metric_checks(tol: f64) -> Vec<Check> {
    let mut rng = stream(7001, 0);
    let (mut sandwich, mut quant, mut proj, mut comp) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..300 {
        let gamma = 0.95 * (i as f64 / 300.0);
        let upper = 1.0 / (1.0 - gamma);
        let a = random_particle(&mut rng, 1 + i % 9, upper);
        let b = random_particle(&mut rng, 1 + (i / 3) % 9, upper);
        let (da, db): (Distribution, Distribution) = (a.clone().into(), b.clone().into());
        let (d1, l2) = (w1(&da, &db), cramer(&da, &db));
        sandwich = sandwich.max(l2 * l2 - d1).max(d1 - l2 * upper.sqrt());
        quant = quant.max((d1 - w1_by_quantiles(a.atoms(), b.atoms())).abs());

        let grid = SupportGrid::new(1 + i % 40, gamma).expect("grid");
        let pa: Distribution = project_categorical(&da, &grid).expect("projection").into();
        let again: Distribution = project_categorical(&pa, &grid).expect("projection").into();
        proj = proj.max((pa.mean() - da.mean()).abs()).max(w1(&pa, &again));

        let wide = random_particle(&mut rng, 12, upper);
        let (small, bound) = compress(&wide, 4).expect("compress");
        comp = comp.max(w1(&small.into(), &wide.into()) - bound);
    }
    vec![
        Check::new("metric sandwich (max violation)", sandwich, tol),
        Check::new("w1 vs quantile integral", quant, tol),
        Check::new("projection mean and idempotence", proj, tol),
        Check::new("compression certificate (excess)", comp, tol),
    ]
}

fn contraction_checks(gallery: &Gallery, tol: f64) -> CliResult<Vec<Check>> {
    let (mut exact, mut projected) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (i, e) in gallery.entries().iter().enumerate() {
        let g = e.mdp.gamma();
        let n = e.mdp.n_states();
        let grid = SupportGrid::new(24, g)?;
        let mut rng = stream(7002, i as u64);
        for _ in 0..20 {
            let (a, b) = (particle_model(&mut rng, n, e.mdp.upper()), particle_model(&mut rng, n, e.mdp.upper()));
            let (ta, tb) = (apply_bellman(&e.mdp, &e.policy, &a)?, apply_bellman(&e.mdp, &e.policy, &b)?);
            for (metric, factor) in [(Metric::W1, g), (Metric::Cramer, g.sqrt())] {
                let gap = sup_metric(&ta, &tb, metric)?.sup - factor * sup_metric(&a, &b, metric)?.sup;
                exact = exact.max(gap);
            }
            let (a, b) = (categorical_model(&mut rng, n, grid), categorical_model(&mut rng, n, grid));
            let ta = apply_projected_bellman(&e.mdp, &e.policy, &a, &grid)?;
            let tb = apply_projected_bellman(&e.mdp, &e.policy, &b, &grid)?;
            let gap = sup_metric(&ta, &tb, Metric::Cramer)?.sup - g.sqrt() * sup_metric(&a, &b, Metric::Cramer)?.sup;
            projected = projected.max(gap);
        }
    }
    Ok(vec![
        Check::new("exact operator contraction (excess)", exact, tol),
        Check::new("projected operator contraction (excess)", projected, tol),
    ])
}

fn solver_checks(gallery: &Gallery, tol: f64) -> CliResult<Vec<Check>> {
    let (mut fixed, mut neumann, mut range) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for e in gallery.entries() {
        let g = e.mdp.gamma();
        let grid = SupportGrid::new(32, g)?;
        let direct = dcfp_solve(&e.mdp, &e.policy, &grid)?.model;
        let init = ReturnModel::categorical_uniform(e.mdp.n_states(), grid);
        let dp = distributional_dp(&e.mdp, &e.policy, &init, &DpOptions::categorical(grid, 1e-12))?;
        fixed = fixed.max(sup_metric(&direct, &dp.model, Metric::Cramer)?.sup);

        let sigma = sigma_variation(&e.mdp, &e.policy, &direct)?;
        let solved = second_order_sigma(&e.mdp, &e.policy, &direct)?;
        let kernel = induced_kernel(&e.mdp, &e.policy)?;
        let mut total = sigma.clone();
        let mut term = sigma;
        while term.iter().copied().fold(0.0, f64::max) * g / (1.0 - g) > 1e-14 {
            term = kernel.right_mul(&term).into_iter().map(|x| x * g).collect();
            total.iter_mut().zip(&term).for_each(|(a, b)| *a += b);
        }
        for (a, b) in solved.iter().zip(&total) {
            neumann = neumann.max((a - b).abs());
            range = range.max(a - 1.0 / (1.0 - g)).max(-a);
        }
    }
    Ok(vec![
        Check::new("dcfp vs categorical dp (sup cramer)", fixed, tol * 10.0),
        Check::new("second order vs neumann series", neumann, tol * 1e3),
        Check::new("second order outside [0, 1/(1-gamma)]", range, 0.0),
    ])
}

fn chain_checks(gallery: &Gallery, tol: f64) -> CliResult<Vec<Check>> {
    let (mut balance, mut minimal) = (0.0f64, 0.0f64);
    for e in gallery.entries() {
        let Ok(info) = ChainInfo::compute(&e.mdp, &e.policy) else { continue };
        let back = info.kernel.left_mul(&info.stationary);
        balance = balance.max(back.iter().zip(&info.stationary).map(|(a, b)| (a - b).abs()).sum());
        // recompute the worst-case total variation at t_mix - 1 and t_mix by brute force
        let n = info.kernel.n();
        let tv_at = |t: usize| {
            (0..n)
                .map(|s| {
                    let mut row = vec![0.0; n];
                    row[s] = 1.0;
                    for _ in 0..t {
                        row = info.kernel.left_mul(&row);
                    }
                    0.5 * row.iter().zip(&info.stationary).map(|(a, b)| (a - b).abs()).sum::<f64>()
                })
                .fold(0.0, f64::max)
        };
        if tv_at(info.t_mix) > 0.25 {
            minimal = minimal.max(1.0);
        }
        if info.t_mix > 1 && tv_at(info.t_mix - 1) <= 0.25 {
            minimal = minimal.max(1.0);
        }
    }
    Ok(vec![
        Check::new("stationary balance (l1)", balance, tol),
        Check::new("mixing time minimality (failures)", minimal, 0.0),
    ])
}

fn dkw_check(gallery: &Gallery) -> CliResult<Check> {
    const N: usize = 20_000;
    const FAIL: f64 = 0.01;
    let mut worst = 0.0f64;
    for (i, e) in gallery.entries().iter().enumerate() {
        let grid = SupportGrid::new(16, e.mdp.gamma())?;
        let eta = dcfp_solve(&e.mdp, &e.policy, &grid)?.model;
        let exact = apply_bellman(&e.mdp, &e.policy, &eta)?;
        for s in 0..e.mdp.n_states() {
            let mut rng = stream(7003 + i as u64, s as u64);
            let mut xs = sample_targets(&mut rng, &e.mdp, &e.policy, &eta, s, N)?;
            worst = worst.max(ks_distance(&mut xs, exact.state(s)));
        }
    }
    // one band for all states at once
    let states: usize = gallery.entries().iter().map(|e| e.mdp.n_states()).sum();
    Ok(Check::new("empirical operator within dkw band", worst, dkw_radius(N, FAIL / states as f64)))
}

fn freedman_checks(tol: f64) -> CliResult<Vec<Check>> {
    let mut rate = 0.0f64;
    let mut monotone = 0.0f64;
    for spec in shipped_specs().into_iter().filter(|s| s.n <= 100) {
        let params = spec.default_params(0.2)?;
        let report = violation_rate(&spec, &params, 2_000, 11)?;
        rate = rate.max(report.rate - 0.2);
        let mut last = 0.0;
        for j in 0..=40 {
            let w = params.sigma2 * j as f64 / 20.0;
            let v = freedman_bound(w, &params)?;
            monotone = monotone.max(last - v);
            last = v;
        }
        monotone = monotone.max(azuma_bound(spec.n, spec.b, 0.2)? - azuma_bound(spec.n + 1, spec.b, 0.2)?);
    }
    Ok(vec![
        Check::new("freedman violation rate above delta", rate, 0.0),
        Check::new("bounds monotone in W and n (max drop)", monotone, tol),
    ])
}

fn determinism_check(gallery: &Gallery) -> CliResult<Check> {
    let e = gallery.entries().first().ok_or_else(|| CliError::Gallery("gallery is empty".into()))?;
    let n = e.mdp.n_states();
    let run = |threads: usize| -> CliResult<Vec<f64>> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| CliError::spec("--workers", e))?;
        pool.install(|| {
            let cfg = RunConfig::new(
                &e.mdp,
                &e.policy,
                Sampling::Generative { mu: vec![1.0 / n as f64; n] },
                RepresentationSpec::Categorical { k: 16 },
                StepSchedule::constant(0.05)?,
                2_000,
                5,
            );
            let out = run_td(&cfg, None)?;
            Ok(out.estimate.iter().flat_map(|d| d.atoms().iter().map(|a| a.1).collect::<Vec<_>>()).collect())
        })
    };
    let (a, b) = (run(1)?, run(2)?);
    let diff = if a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()) { 0.0 } else { 1.0 };
    Ok(Check::new("seeded runs bit-identical across pools", diff, 0.0))
}

/// Runs every check. Gallery entries come from `DISTEVAL_GALLERY` if set.
pub fn checks(tighten: f64) -> CliResult<Vec<Check>> {
    let gallery = load_gallery()?;
    let tol = 1e-10 / tighten;
    let mut out = metric_checks(tol);
    out.extend(contraction_checks(&gallery, tol)?);
    out.extend(solver_checks(&gallery, tol)?);
    out.extend(chain_checks(&gallery, tol)?);
    out.push(dkw_check(&gallery)?);
    out.extend(freedman_checks(tol)?);
    out.push(determinism_check(&gallery)?);
    Ok(out)
}

pub fn run_verify(opts: &VerifyOptions) -> CliResult<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = opts.workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::spec("--workers", e))?;
    let results = pool.install(|| checks(opts.tighten))?;
    let width = results.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &results {
        let tag = if c.passed() { "PASS" } else { "FAIL" };
        println!("[{tag}] {:<width$}  observed {:>12.3e}  threshold {:>10.3e}", c.name, c.observed, c.threshold);
    }
    if let Some(dir) = &opts.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join("verify.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["check", "observed", "threshold", "passed"])?;
        for c in &results {
            w.write_record([c.name.clone(), format!("{:e}", c.observed), format!("{:e}", c.threshold), c.passed().to_string()])?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
    }
    let failed = results.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(CliError::Verify(failed));
    }
    Ok(())
}
