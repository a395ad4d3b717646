use rayon::prelude::*;
use serde_json::json;

use parallel_spectra::lattice::build_triple;
use parallel_spectra::spectral::{eig_hermitian, eig_tagged, System};
use parallel_spectra::{CouplingParams, ModelSpec, Tolerances, C64};

use super::{CmdError, Context};
use crate::config::{SweepConfig, SweepParam};
use crate::output::{num, Table};

/// Bracket width at which transition refinement stops.
const BISECTION_WIDTH: f64 = 1e-9;

struct Point {
    eigenvalues: Vec<C64>,
    real_count: usize,
}

struct Sweeper<'a> {
    spec: ModelSpec,
    params: CouplingParams,
    param: SweepParam,
    tol: &'a Tolerances,
}

impl Sweeper<'_> {
    fn system(&self) -> System {
        match self.param {
            SweepParam::Gamma | SweepParam::Delta => System::N,
            SweepParam::Kappa | SweepParam::V => System::H,
        }
    }

    fn eval(&self, x: f64) -> Result<Point, CmdError> {
        let mut params = self.params;
        let mut spec = self.spec.clone();
        match self.param {
            SweepParam::Gamma => params.gamma = x,
            SweepParam::Kappa => params.kappa = x,
            SweepParam::V => params.v = x,
            SweepParam::Delta => match &mut spec {
                ModelSpec::SshChain { dimerization, .. } => *dimerization = x,
                _ => return Err(CmdError::Config("delta sweeps need an ssh model".into())),
            },
        }
        let triple = build_triple(&spec, params)?;
        let es = match self.system() {
            System::H => eig_hermitian(&triple.h, System::H, self.tol)?,
            _ => eig_tagged(&triple.hn, System::N, self.tol)?,
        };
        let real_count = es.eigenvalues.iter().filter(|z| z.im.abs() <= self.tol.real).count();
        Ok(Point { eigenvalues: es.eigenvalues, real_count })
    }
}

fn min_gap(eigenvalues: &[C64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..eigenvalues.len() {
        for j in i + 1..eigenvalues.len() {
            best = best.min((eigenvalues[i] - eigenvalues[j]).norm());
        }
    }
    best
}

fn grid(sw: &SweepConfig) -> Result<Vec<f64>, CmdError> {
    if sw.steps == 0 || sw.to < sw.from || (sw.steps == 1 && sw.to != sw.from) {
        return Err(CmdError::Config(format!("bad sweep range [{}, {}] with {} steps", sw.from, sw.to, sw.steps)));
    }
    if sw.from == sw.to {
        return Ok(vec![sw.from]);
    }
    let h = (sw.to - sw.from) / (sw.steps - 1) as f64;
    Ok((0..sw.steps).map(|k| if k + 1 == sw.steps { sw.to } else { sw.from + k as f64 * h }).collect())
}

fn thread_count() -> usize {
    std::env::var("PARALLEL_SPECTRA_THREADS").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

pub fn run(ctx: &Context) -> Result<(), CmdError> {
    let sw = ctx.cfg.scenario.sweep.clone().ok_or_else(|| CmdError::Config("scenario.sweep is required".into()))?;
    let values = grid(&sw)?;
    let tol = ctx.cfg.tolerances();
    let sweeper = Sweeper { spec: ctx.cfg.model_spec(), params: ctx.cfg.coupling(), param: sw.param, tol: &tol };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| CmdError::Failure(format!("thread pool: {e}")))?;
    let points: Vec<Point> =
        pool.install(|| values.par_iter().map(|&x| sweeper.eval(x)).collect::<Result<Vec<_>, _>>())?;

    let mut table = Table::new(&["param_value", "index", "re", "im"]);
    for (x, p) in values.iter().zip(&points) {
        for (k, z) in p.eigenvalues.iter().enumerate() {
            table.row([num(*x), k.to_string(), num(z.re), num(z.im)]);
        }
    }
    ctx.out.write_table("sweep.csv", table)?;

    let mut transitions = Vec::new();
    for k in 1..values.len() {
        let (before, after) = (points[k - 1].real_count, points[k].real_count);
        if before == after {
            continue;
        }
        let (mut lo, mut hi) = (values[k - 1], values[k]);
        let (mut lo_pt, mut hi_pt) = (None, None);
        while hi - lo > BISECTION_WIDTH * lo.abs().max(1.0) {
            let mid = 0.5 * (lo + hi);
            let p = sweeper.eval(mid)?;
            if p.real_count == before {
                lo = mid;
                lo_pt = Some(p);
            } else {
                hi = mid;
                hi_pt = Some(p);
            }
        }
        let gap_lo = min_gap(&lo_pt.map_or_else(|| points[k - 1].eigenvalues.clone(), |p| p.eigenvalues));
        let gap_hi = min_gap(&hi_pt.map_or_else(|| points[k].eigenvalues.clone(), |p| p.eigenvalues));
        let gap = gap_lo.min(gap_hi);
        transitions.push(json!({
            "location": 0.5 * (lo + hi),
            "bracket": [lo, hi],
            "real_count_before": before,
            "real_count_after": after,
            "min_gap": gap,
            "exceptional_point": gap <= tol.coalescence_radius(),
        }));
    }
    let report = json!({
        "param": sw.param.name(),
        "system": sweeper.system().tag(),
        "points": values.len(),
        "transitions": transitions,
    });
    ctx.out.write_json("transitions.json", &report)?;
    ctx.write_metadata("sweep")
}
