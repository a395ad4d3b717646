use serde_json::{json, Value};

use parallel_spectra::analytic::{ssh_zero_modes, uniform_zero_modes_for_total, ClosedFormState};
use parallel_spectra::spectral::{detect_coalescence, eig_tagged, System};
use parallel_spectra::ModelSpec;

use super::{CmdError, Context};
use crate::output::{complex, num, Table};

fn push_state(table: &mut Table, s: &ClosedFormState) {
    for (site, z) in s.vector.amplitudes().iter().enumerate() {
        table.row([s.source_formula.to_string(), (site + 1).to_string(), num(z.re), num(z.im)]);
    }
}

fn state_json(s: &ClosedFormState) -> Value {
    json!({
        "energy": complex(s.energy),
        "residual": s.residual,
        "norm": s.vector.dirac_norm(),
        "requires": s.required_params,
    })
}

pub fn run(ctx: &Context) -> Result<(), CmdError> {
    let cfg = &ctx.cfg;
    let tol = cfg.tolerances();
    let mut table = Table::new(&["state", "site", "re", "im"]);
    let mut report = match cfg.model_spec() {
        ModelSpec::UniformChain { chain_length, hopping } => {
            let z = uniform_zero_modes_for_total(chain_length + 2, hopping, cfg.params.v)?;
            for s in [&z.phi_minus, &z.phi_plus, &z.psi] {
                push_state(&mut table, s);
            }
            let es = eig_tagged(&z.triple.hn, System::N, &tol)?;
            let left = eig_tagged(&z.triple.hn_dag, System::NDag, &tol)?;
            let clusters: Vec<Value> = detect_coalescence(&es, &left, &tol)
                .iter()
                .map(|c| json!({ "center": complex(c.center), "size": c.size, "min_singular": c.min_singular }))
                .collect();
            json!({
                "model": "uniform",
                "total_sites": z.total_sites,
                "gamma": z.triple.params.gamma,
                "kappa": z.triple.params.kappa,
                "v": z.triple.params.v,
                "states": {
                    "Phi_minus": state_json(&z.phi_minus),
                    "Phi_plus": state_json(&z.phi_plus),
                    "Psi": state_json(&z.psi),
                },
                "biorthogonal_overlap": complex(z.biorthogonal_overlap),
                "proportionality": complex(z.proportionality),
                "proportionality_defect": z.proportionality_defect,
                "exceptional_points": clusters,
            })
        }
        ModelSpec::SshChain { sites, hopping, dimerization } => {
            let z = ssh_zero_modes(sites, hopping, dimerization)?;
            for s in [&z.psi_1, &z.psi_2, &z.psi_plus, &z.psi_minus, &z.phi_zm, &z.eta_zm] {
                push_state(&mut table, s);
            }
            json!({
                "model": "ssh",
                "sites": z.sites,
                "kappa_c": z.kappa_c,
                "gamma_c": z.kappa_c,
                "delta_ratio": z.delta_ratio,
                "norm_ssh": z.norm_ssh,
                "states": {
                    "psi_1": state_json(&z.psi_1),
                    "psi_2": state_json(&z.psi_2),
                    "psi_plus": state_json(&z.psi_plus),
                    "psi_minus": state_json(&z.psi_minus),
                    "phi_zm": state_json(&z.phi_zm),
                    "eta_zm": state_json(&z.eta_zm),
                },
                "biorthogonal_overlap": complex(z.biorthogonal_overlap),
                "sum_proportionality": complex(z.sum_constant),
                "sum_defect": z.sum_defect,
                "difference_proportionality": complex(z.difference_constant),
                "difference_defect": z.difference_defect,
            })
        }
        ModelSpec::CustomGraph(_) => {
            return Err(CmdError::Config("zero modes exist in closed form only for uniform and ssh models".into()))
        }
    };
    report["note"] = json!("coupling parameters are set by the closed forms, not by the config");
    ctx.out.write_table("zero_modes.csv", table)?;
    ctx.out.write_json("zero_modes.json", &report)?;
    ctx.write_metadata("zero-modes")
}
