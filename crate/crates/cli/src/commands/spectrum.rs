use std::collections::HashSet;

use parallel_spectra::spectral::{match_eigensystems, triple_eigensystems};

use super::{CmdError, Context};
use crate::output::{num, Table};

pub fn run(ctx: &Context) -> Result<(), CmdError> {
    let triple = ctx.triple()?;
    let tol = ctx.cfg.tolerances();
    let systems = triple_eigensystems(&triple, &tol)?;

    let matches = ctx.match_spectra.then(|| match_eigensystems(&systems[0], &systems[1], &systems[2], &tol));
    let matched: HashSet<(usize, usize)> =
        matches.iter().flatten().flat_map(|m| [(0, m.idx_h), (1, m.idx_n), (2, m.idx_ndag)]).collect();

    let mut header = vec!["index", "system", "re_energy", "im_energy", "residual"];
    if matches.is_some() {
        header.push("matched");
    }
    let mut table = Table::new(&header);
    for (s, es) in systems.iter().enumerate() {
        for k in 0..es.len() {
            let z = es.eigenvalues[k];
            let mut row = vec![k.to_string(), es.source.tag().to_string(), num(z.re), num(z.im), num(es.residuals[k])];
            if matches.is_some() {
                row.push(matched.contains(&(s, k)).to_string());
            }
            table.row(row);
        }
    }
    ctx.out.write_table("spectrum.csv", table)?;

    if let Some(ms) = &matches {
        let mut t = Table::new(&["energy", "idx_h", "idx_n", "idx_ndag", "match_residual"]);
        for m in ms {
            t.row([
                num(m.energy),
                m.idx_h.to_string(),
                m.idx_n.to_string(),
                m.idx_ndag.to_string(),
                num(m.match_residual),
            ]);
        }
        ctx.out.write_table("matches.csv", t)?;
    }
    ctx.write_metadata("spectrum")
}
