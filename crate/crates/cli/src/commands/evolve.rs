use serde_json::json;

use parallel_spectra::analytic::{gaussian_packet, packet_width, symmetrize_state};
use parallel_spectra::correspondence::{analyze_triple, build_correspondence};
use parallel_spectra::dynamics::{
    evolve, expand_in_common_subspace, parallel_evolve, probability_audit, profile_deviation, uniform_grid,
};
use parallel_spectra::lattice::parity_operator;
use parallel_spectra::{Error, StateVector, System};

use super::{CmdError, Context};
use crate::output::{complex, num, Table};

/// Grid points plus the dump times, sorted and deduplicated.
fn merged_times(grid: &[f64], dumps: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = grid.iter().chain(dumps).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs().max(1.0));
    all
}

fn time_index(times: &[f64], t: f64) -> Option<usize> {
    times.iter().position(|&x| (x - t).abs() <= 1e-9 * t.abs().max(1.0))
}

pub fn run(ctx: &Context) -> Result<(), CmdError> {
    let cfg = &ctx.cfg;
    let sc = &cfg.scenario;
    let triple = ctx.triple()?;
    let tol = cfg.tolerances();
    let parity = parity_operator(&triple)?;
    let n = triple.dimension();

    if sc.dump_times.iter().any(|&t| t < 0.0 || t > sc.t_max) {
        return Err(CmdError::Config(format!("dump times must lie in [0, {}]", sc.t_max)));
    }
    let grid = uniform_grid(sc.dt, sc.t_max)?;
    let times = merged_times(&grid, &sc.dump_times);

    let center = sc.packet.center.unwrap_or(n as f64 / 3.0);
    let width = packet_width(sc.packet.alpha);
    if width >= n as f64 / 2.0 {
        eprintln!("warning: packet width {width:.3} is not small against half the lattice ({})", n / 2);
    }
    let packet = gaussian_packet(n, center, sc.packet.k, sc.packet.alpha)?;
    let psi0 = symmetrize_state(&packet, &parity).map_err(|e| match e {
        Error::NullState => CmdError::Config("packet is parity-odd: symmetrized initial state vanishes".into()),
        other => other.into(),
    })?;

    let spectrum = analyze_triple(&triple, &tol)?;
    let family = build_correspondence(&triple, &spectrum, &parity, &tol)?;
    let expansion = expand_in_common_subspace(&psi0, &family, None)?;
    let leak = expansion.truncation_residual > sc.truncation_threshold;

    let mut audit_json = json!({
        "matched": spectrum.matches.len(),
        "family_size": family.len(),
        "truncation_residual": expansion.truncation_residual,
        "truncation_threshold": sc.truncation_threshold,
        "threshold": sc.audit_threshold,
    });
    if leak {
        audit_json["passes"] = json!(false);
        audit_json["error"] =
            json!(format!("initial state leaks out of the common subspace ({:e})", expansion.truncation_residual));
        ctx.out.write_json("audit.json", &audit_json)?;
        ctx.write_metadata("evolve")?;
        return Err(CmdError::Failure("initial state leaks out of the common subspace".into()));
    }

    let trace = parallel_evolve(&triple, &expansion.phi0, &expansion.phi_tilde0, &expansion.psi_projected, &times)?;
    let audit = probability_audit(&trace)?;

    // Each state against the same state evolved by the bare skeleton.
    let horizon = sc.bulk_time.min(sc.t_max);
    let early = uniform_grid(sc.dt, horizon)?;
    let skeleton = triple.skeleton();
    let starts: [(&StateVector, &_, System); 3] = [
        (&expansion.phi0, &triple.hn, System::N),
        (&expansion.phi_tilde0, &triple.hn_dag, System::NDag),
        (&expansion.psi_projected, &triple.h, System::H),
    ];
    let mut bulk = 0.0f64;
    for (state, m, system) in starts {
        let own = evolve(state, m, system, "own", &early)?;
        let bare = evolve(state, &skeleton, System::Other, "bare", &early)?;
        bulk = profile_deviation(&own.tracks[0], &bare.tracks[0]).into_iter().fold(bulk, f64::max);
    }

    let mut table = Table::new(&["time", "site", "prob_phi", "prob_phitilde", "prob_psi"]);
    for &t in &sc.dump_times {
        let k = time_index(&trace.times, t).expect("dump time is on the merged grid");
        for site in 0..n {
            table.row([
                num(t),
                (site + 1).to_string(),
                num(trace.tracks[0].probabilities[k][site]),
                num(trace.tracks[1].probabilities[k][site]),
                num(trace.tracks[2].probabilities[k][site]),
            ]);
        }
    }
    ctx.out.write_table("trace.csv", table)?;

    let mut globals = Table::new(&[
        "time",
        "norm_phi",
        "norm_phitilde",
        "norm_psi",
        "overlap_re",
        "overlap_im",
        "superposition_defect",
        "parity_defect",
    ]);
    for k in 0..trace.times.len() {
        globals.row([
            num(trace.times[k]),
            num(trace.tracks[0].norms_sqr[k]),
            num(trace.tracks[1].norms_sqr[k]),
            num(trace.tracks[2].norms_sqr[k]),
            num(trace.overlap[k].re),
            num(trace.overlap[k].im),
            num(trace.superposition_defect[k]),
            trace.parity_defect.as_ref().map_or_else(String::new, |p| num(p[k])),
        ]);
    }
    ctx.out.write_table("globals.csv", globals)?;

    let passes = audit.passes(sc.audit_threshold);
    audit_json["theta"] = complex(audit.theta);
    audit_json["deviations"] = json!(audit.checks().into_iter().collect::<std::collections::BTreeMap<_, _>>());
    audit_json["worst"] = json!(audit.worst());
    audit_json["bulk_time"] = json!(horizon);
    audit_json["bulk_evolution_deviation"] = json!(bulk);
    audit_json["passes"] = json!(passes);
    ctx.out.write_json("audit.json", &audit_json)?;
    ctx.write_metadata("evolve")?;
    if passes {
        Ok(())
    } else {
        Err(CmdError::Failure(format!("audit failed: worst deviation {:e}", audit.worst())))
    }
}
