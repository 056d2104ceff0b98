//! Executes resolved experiments and writes their artifacts.
//!
//! Every run writes `manifest.json` last. Seeds are processed on a worker
//! pool and collected in seed order, so file contents never depend on the
//! number of workers.

use std::path::{Path, PathBuf};

use disteval::agents::{
    run_td, run_td_datadrop, run_vr, RepresentationSpec, RunConfig, RunResult, TraceRequest, VRConfig,
};
use disteval::bellman::{dcfp_solve, dcfp_solve_capped, distributional_dp, DpOptions};
use disteval::concentration::{azuma_bound, freedman_bound, simulate, violation_rate, write_paths_csv};
use disteval::mdp::{Policy, TabularMDP};
use disteval::measures::{ReturnModel, SupportGrid};
use disteval::rng::stream;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::plot::{LogLogPlot, Series};
use crate::spec::{sweep_point, ExperimentSpec, Kind, Plan, ReferenceSpec, Resolved, TdParams, VrParams};
use crate::stats::quartiles;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
    pub plot: bool,
}

/// Files written by a run, relative to `dir`, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    kind: &'static str,
    resolved_spec: &'a ExperimentSpec,
    outputs: &'a [String],
}

struct Out {
    dir: PathBuf,
    files: Vec<String>,
}

impl Out {
    fn new(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.push(rel.to_string());
        Ok(())
    }

    fn csv(&mut self, rel: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::from(csv::Error::from(e.into_error())))?;
        self.write(rel, &bytes)
    }

    fn json<T: Serialize>(&mut self, rel: &str, v: &T) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(v).map_err(disteval::Error::from)?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn representation(k: Option<usize>, budget: Option<usize>) -> RepresentationSpec {
    match (k, budget) {
        (Some(k), _) => RepresentationSpec::Categorical { k },
        (None, Some(budget)) => RepresentationSpec::Particle { budget },
        (None, None) => unreachable!("resolution picks a representation"),
    }
}

/// Builds the reference model of an error trace. Returns the model and a
/// bound on its distance to the target it stands for (0 for an exact solve).
pub fn reference_model(r: &ReferenceSpec, mdp: &TabularMDP, policy: &Policy) -> CliResult<(ReturnModel, f64)> {
    match *r {
        ReferenceSpec::Dcfp { k } => {
            let grid = SupportGrid::new(k, mdp.gamma())?;
            Ok((dcfp_solve(mdp, policy, &grid)?.model, 0.0))
        }
        ReferenceSpec::ParticleDp { budget, tol } => {
            let init = ReturnModel::dirac(mdp.n_states(), 0.0);
            let out = distributional_dp(mdp, policy, &init, &DpOptions::particle(budget, tol))?;
            Ok((out.model, out.certified_error))
        }
    }
}

#[derive(Serialize)]
struct ReferenceFile<'a> {
    reference: &'a ReferenceSpec,
    certified_error: f64,
    model: &'a ReturnModel,
}

fn write_reference(out: &mut Out, spec: &ReferenceSpec, model: &ReturnModel, certified: f64) -> CliResult<()> {
    out.json("reference.json", &ReferenceFile { reference: spec, certified_error: certified, model })
}

fn states_rows(model: &ReturnModel) -> Vec<Vec<String>> {
    model
        .iter()
        .enumerate()
        .map(|(s, d)| vec![s.to_string(), num(d.mean()), d.atoms().len().to_string()])
        .collect()
}

/// One TD run on a seed. The trace is always present.
pub fn td_run(kind: Kind, p: &TdParams, mdp: &TabularMDP, policy: &Policy, seed: u64, reference: &ReturnModel) -> CliResult<RunResult> {
    let mut cfg = RunConfig::new(
        mdp,
        policy,
        p.sampling.clone().expect("resolved"),
        representation(p.k, p.budget),
        p.schedule.clone().expect("resolved"),
        p.updates.expect("resolved"),
        seed,
    );
    cfg.averaging = p.averaging.expect("resolved");
    let req = TraceRequest {
        reference,
        metric: p.metric.expect("resolved"),
        checkpoints: p.checkpoints.clone().expect("resolved"),
    };
    let result = if kind == Kind::Datadrop {
        cfg.burn_in = p.burn_in.expect("resolved");
        cfg.interval = p.interval.expect("resolved");
        run_td_datadrop(&cfg, Some(&req))?
    } else {
        run_td(&cfg, Some(&req))?
    };
    Ok(result)
}

/// One VR run on a seed with its per-epoch trace.
pub fn vr_run(p: &VrParams, mdp: &TabularMDP, policy: &Policy, seed: u64, reference: &ReturnModel) -> CliResult<RunResult> {
    let cfg = VRConfig {
        mdp,
        policy,
        initial: p.initial.clone().expect("resolved"),
        representation: representation(p.k, p.budget),
        epochs: p.epochs.expect("resolved"),
        n_ref: p.n_ref.expect("resolved"),
        t_epoch: p.t_epoch.expect("resolved"),
        alpha: p.alpha.expect("resolved"),
        seed,
        init: None,
    };
    let req = TraceRequest { reference, metric: p.metric.expect("resolved"), checkpoints: Vec::new() };
    Ok(run_vr(&cfg, Some(&req))?)
}

fn final_error(r: &RunResult) -> f64 {
    r.trace.as_ref().and_then(|t| t.last()).map_or(f64::NAN, |p| p.sup)
}

fn final_row(updates: usize, r: &RunResult) -> Vec<String> {
    vec![
        updates.to_string(),
        r.seed.to_string(),
        r.samples.to_string(),
        num(final_error(r)),
        num(r.compression_w1),
        num(r.clipped_mass),
        num(r.rectification_w1),
    ]
}

const FINAL_HEADER: [&str; 7] = ["updates", "seed", "samples", "final_error", "compression_w1", "clipped_mass", "rectification_w1"];
const SUMMARY_HEADER: [&str; 6] = ["updates", "samples", "seeds", "q1", "median", "q3"];

fn summary_row(updates: usize, samples: usize, errors: &[f64]) -> Vec<String> {
    let (q1, m, q3) = quartiles(errors);
    vec![updates.to_string(), samples.to_string(), errors.len().to_string(), num(q1), num(m), num(q3)]
}

fn trace_csv(r: &RunResult) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    r.trace.as_ref().expect("trace requested").write_csv(&mut buf)?;
    Ok(buf)
}

fn par_seeds<T: Send>(seeds: &[u64], f: impl Fn(u64) -> CliResult<T> + Sync + Send) -> CliResult<Vec<T>> {
    seeds.par_iter().map(|&s| f(s)).collect()
}

fn quartile_series(points: &[(f64, Vec<f64>)]) -> Vec<Series> {
    let pick = |i: usize, name: &str, dashed: bool| Series {
        name: name.to_string(),
        points: points
            .iter()
            .map(|(x, errs)| {
                let q = quartiles(errs);
                (*x, [q.0, q.1, q.2][i])
            })
            .collect(),
        dashed,
    };
    vec![pick(1, "median", false), pick(0, "q1", true), pick(2, "q3", true)]
}

fn run_td_plan(kind: Kind, p: &TdParams, r: &Resolved, out: &mut Out, plot: bool) -> CliResult<()> {
    let (mdp, policy) = r.mdp();
    let reference_spec = p.reference.expect("resolved");
    let (reference, certified) = reference_model(&reference_spec, mdp, policy)?;
    write_reference(out, &reference_spec, &reference, certified)?;
    let results = par_seeds(r.seeds(), |seed| td_run(kind, p, mdp, policy, seed, &reference))?;
    let updates = p.updates.expect("resolved");
    for res in &results {
        out.write(&format!("traces/seed_{}.csv", res.seed), &trace_csv(res)?)?;
    }
    let rows: Vec<_> = results.iter().map(|res| final_row(updates, res)).collect();
    out.csv("final_errors.csv", &FINAL_HEADER, &rows)?;
    let errors: Vec<f64> = results.iter().map(final_error).collect();
    out.csv("summary.csv", &SUMMARY_HEADER, &[summary_row(updates, results[0].samples, &errors)])?;
    if plot {
        let checkpoints = &results[0].trace.as_ref().expect("trace").points;
        let points: Vec<(f64, Vec<f64>)> = (0..checkpoints.len())
            .map(|i| {
                let t = checkpoints[i].t as f64;
                (t, results.iter().map(|res| res.trace.as_ref().expect("trace").points[i].sup).collect())
            })
            .collect();
        let svg = LogLogPlot {
            title: format!("{} on {}", kind.name(), r.model.as_ref().expect("mdp").0),
            x_label: "updates".into(),
            y_label: format!("sup {:?} error", p.metric.expect("resolved")),
            series: quartile_series(&points),
        }
        .render();
        out.write("plot.svg", svg.as_bytes())?;
    }
    Ok(())
}

fn run_sweep(base: Kind, run: &TdParams, sizes: &[usize], r: &Resolved, out: &mut Out, plot: bool) -> CliResult<()> {
    let (mdp, policy) = r.mdp();
    let reference_spec = run.reference.expect("resolved");
    let (reference, certified) = reference_model(&reference_spec, mdp, policy)?;
    write_reference(out, &reference_spec, &reference, certified)?;
    let mut final_rows = Vec::new();
    let mut summary_rows = Vec::new();
    let mut points = Vec::new();
    for &t in sizes {
        let p = sweep_point("sweep", base, run, t, mdp, policy)?;
        let results = par_seeds(r.seeds(), |seed| td_run(base, &p, mdp, policy, seed, &reference))?;
        for res in &results {
            out.write(&format!("traces/T{t}_seed_{}.csv", res.seed), &trace_csv(res)?)?;
            final_rows.push(final_row(t, res));
        }
        let errors: Vec<f64> = results.iter().map(final_error).collect();
        summary_rows.push(summary_row(t, results[0].samples, &errors));
        points.push((t as f64, errors));
    }
    out.csv("final_errors.csv", &FINAL_HEADER, &final_rows)?;
    out.csv("summary.csv", &SUMMARY_HEADER, &summary_rows)?;
    if plot {
        let svg = LogLogPlot {
            title: format!("{} sweep on {}", base.name(), r.model.as_ref().expect("mdp").0),
            x_label: "updates".into(),
            y_label: format!("final sup {:?} error", run.metric.expect("resolved")),
            series: quartile_series(&points),
        }
        .render();
        out.write("plot.svg", svg.as_bytes())?;
    }
    Ok(())
}

fn run_vr_plan(p: &VrParams, r: &Resolved, out: &mut Out, plot: bool) -> CliResult<()> {
    let (mdp, policy) = r.mdp();
    let reference_spec = p.reference.expect("resolved");
    let (reference, certified) = reference_model(&reference_spec, mdp, policy)?;
    write_reference(out, &reference_spec, &reference, certified)?;
    let results = par_seeds(r.seeds(), |seed| vr_run(p, mdp, policy, seed, &reference))?;
    let epochs = p.epochs.expect("resolved");
    let per_epoch = p.n_ref.expect("resolved") + p.t_epoch.expect("resolved");
    for res in &results {
        out.write(&format!("traces/seed_{}.csv", res.seed), &trace_csv(res)?)?;
    }
    let rows: Vec<_> = results.iter().map(|res| final_row(res.updates, res)).collect();
    out.csv("final_errors.csv", &FINAL_HEADER, &rows)?;
    let mut summary = Vec::new();
    let mut points = Vec::new();
    for e in 0..=epochs {
        let errs: Vec<f64> = results.iter().map(|res| res.trace.as_ref().expect("trace").points[e].sup).collect();
        let (q1, m, q3) = quartiles(&errs);
        summary.push(vec![e.to_string(), (e * per_epoch).to_string(), errs.len().to_string(), num(q1), num(m), num(q3)]);
        points.push(((e * per_epoch) as f64, errs));
    }
    out.csv("summary.csv", &["epoch", "samples", "seeds", "q1", "median", "q3"], &summary)?;
    if plot {
        let svg = LogLogPlot {
            title: format!("vr on {}", r.model.as_ref().expect("mdp").0),
            x_label: "samples".into(),
            y_label: format!("sup {:?} error", p.metric.expect("resolved")),
            series: quartile_series(&points),
        }
        .render();
        out.write("plot.svg", svg.as_bytes())?;
    }
    Ok(())
}

fn run_freedman(p: &crate::spec::FreedmanRunParams, seeds: &[u64], out: &mut Out) -> CliResult<()> {
    let specs = p.specs.as_ref().expect("resolved");
    let deltas = p.deltas.as_ref().expect("resolved");
    let trials = p.trials.expect("resolved");
    let mut rows = Vec::new();
    for spec in specs {
        for (di, &delta) in deltas.iter().enumerate() {
            let mut params = spec.default_params(delta)?;
            if let Some(h) = p.h {
                params.h = h;
            }
            for (si, &seed) in seeds.iter().enumerate() {
                let report = violation_rate(spec, &params, trials, seed)?;
                rows.push(vec![
                    spec.name.clone(),
                    spec.n.to_string(),
                    num(spec.b),
                    num(delta),
                    params.h.to_string(),
                    num(params.sigma2),
                    seed.to_string(),
                    report.trials.to_string(),
                    report.violations.to_string(),
                    num(report.rate),
                    num(report.ci_low),
                    num(report.ci_high),
                    num(freedman_bound(params.sigma2, &params)?),
                    num(azuma_bound(spec.n, spec.b, delta)?),
                ]);
                let dump = p.dump_paths.expect("resolved").min(trials);
                if di == 0 && si == 0 && dump > 0 {
                    let paths = (0..dump)
                        .map(|i| Ok((i, simulate(spec, &mut stream(seed, i as u64))?)))
                        .collect::<disteval::Result<Vec<_>>>()?;
                    let mut buf = Vec::new();
                    write_paths_csv(&mut buf, &paths, &params)?;
                    out.write(&format!("paths/{}_n{}.csv", spec.name, spec.n), &buf)?;
                }
            }
        }
    }
    out.csv(
        "violation_rates.csv",
        &[
            "spec", "n", "b", "delta", "h", "sigma2", "seed", "trials", "violations", "rate", "ci_low", "ci_high",
            "freedman_at_sigma2", "azuma",
        ],
        &rows,
    )
}

/// Runs `resolved` and writes its artifacts under `opts.out`.
pub fn execute(resolved: &Resolved, opts: &RunOptions) -> CliResult<Artifacts> {
    let mut out = Out::new(&opts.out)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = opts.workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::spec("--workers", e))?;
    pool.install(|| -> CliResult<()> {
        match &resolved.plan {
            Plan::Dp(p) => {
                let (mdp, policy) = resolved.mdp();
                let grid = p.k.map(|k| SupportGrid::new(k, mdp.gamma())).transpose()?;
                let init = match grid {
                    Some(g) => ReturnModel::categorical_dirac(mdp.n_states(), g, 0),
                    None => ReturnModel::dirac(mdp.n_states(), 0.0),
                };
                let opts = DpOptions {
                    metric: p.metric.expect("resolved"),
                    tol: p.tol.expect("resolved"),
                    max_iter: p.max_iter.expect("resolved"),
                    grid,
                    particle_budget: p.budget,
                };
                let dp = distributional_dp(mdp, policy, &init, &opts)?;
                out.json("model.json", &dp.model)?;
                out.csv("states.csv", &["state", "mean", "atoms"], &states_rows(&dp.model))?;
                out.csv(
                    "summary.csv",
                    &["iterations", "last_gap", "certified_error", "compression"],
                    &[vec![dp.iterations.to_string(), num(dp.last_gap), num(dp.certified_error), num(dp.compression)]],
                )
            }
            Plan::Dcfp(p) => {
                let (mdp, policy) = resolved.mdp();
                let k = p.k.expect("resolved");
                let grid = SupportGrid::new(k, mdp.gamma())?;
                let sol = dcfp_solve_capped(mdp, policy, &grid, p.cap.expect("resolved"))?;
                out.json("model.json", &sol.model)?;
                out.csv("states.csv", &["state", "mean", "atoms"], &states_rows(&sol.model))?;
                out.csv(
                    "summary.csv",
                    &["dimension", "residual", "clipped_mass"],
                    &[vec![(mdp.n_states() * (k + 1)).to_string(), num(sol.residual), num(sol.clipped_mass)]],
                )
            }
            Plan::Td(kind, p) => run_td_plan(*kind, p, resolved, &mut out, opts.plot),
            Plan::Sweep(p) => run_sweep(
                p.base.expect("resolved"),
                p.run.as_ref().expect("resolved"),
                p.updates.as_ref().expect("resolved"),
                resolved,
                &mut out,
                opts.plot,
            ),
            Plan::Vr(p) => run_vr_plan(p, resolved, &mut out, opts.plot),
            Plan::Freedman(p) => run_freedman(p, resolved.seeds(), &mut out),
        }
    })?;
    out.files.push("manifest.json".into());
    out.files.sort();
    let manifest = Manifest {
        tool: "disteval",
        version: env!("CARGO_PKG_VERSION"),
        kind: resolved.spec.kind.name(),
        resolved_spec: &resolved.spec,
        outputs: &out.files,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(disteval::Error::from)?;
    bytes.push(b'\n');
    let path = out.dir.join("manifest.json");
    std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    Ok(Artifacts { dir: out.dir, files: out.files })
}
