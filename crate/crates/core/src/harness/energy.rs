use super::{CellOutput, Claim, ExperimentConfig, Sink, Table, VerdictKind};
use crate::error::{invalid, Result};
use crate::models::{
    build_free_factor, charge_energy_diagnostic, neutral_lutz_factor, preservation_proxy, reference_generator, EnergyRow,
    Factor, MassAssignment,
};
use crate::row;
use crate::states::{LambdaGrid, ScalingFamily};
use crate::theta::reference_generators;

pub(crate) const FREE_ENERGY: Claim = Claim {
    id: "free_energy_bounded",
    claim: "free factors: max/min of λ⟨H⟩ over the grid below 1.5",
    anchor: "sectors of a free multiplet are preserved in the scaling limit",
    kind: VerdictKind::Proxy,
};

pub(crate) const LUTZ_ENERGY: Claim = Claim {
    id: "lutz_energy_growth",
    claim: "box-damped factor: λ⟨H⟩ grows by more than 10× from λ = 1 to λ = 1e-2",
    anchor: "charged sectors of the damped factor are not preserved",
    kind: VerdictKind::Proxy,
};

pub(crate) const FREE_OWN: Claim = Claim {
    id: "free_own_family",
    claim: "free factor: distance to its own dilation orbit below 1e-10 on the grid",
    anchor: "preservation criterion for a free multiplet",
    kind: VerdictKind::Proxy,
};

pub(crate) const LUTZ_CANDIDATES: Claim = Claim {
    id: "lutz_undamped_candidates",
    claim: "box-damped factor: every fixed undamped candidate stays at distance > 0.9 at the preservation scale",
    anchor: "preservation criterion fails for the damped factor",
    kind: VerdictKind::Proxy,
};

const PLATEAU: Claim = Claim {
    id: "massive_plateau",
    claim: "free factor with unit mass: relative change of λ⟨H⟩ over the last decade",
    anchor: "sectors of a free multiplet are preserved in the scaling limit",
    kind: VerdictKind::Diagnostic,
};

fn free(dims: crate::onep::Dims, mass: f64) -> Result<Factor> {
    Ok(Factor::Free(build_free_factor(
        dims,
        &[MassAssignment {
            irrep: "trivial".into(),
            conjugate: "trivial".into(),
            dim: 1,
            mass,
        }],
    )?))
}

fn push_rows(t: &mut Table, factor: &str, mass: Option<f64>, rows: &[EnergyRow]) {
    for r in rows {
        t.push(row![
            factor,
            mass.unwrap_or(f64::NAN),
            r.lambda,
            r.n_box,
            r.energy,
            r.lambda_energy,
            r.log_norm_sq
        ]);
    }
}

const ENERGY_COLUMNS: [&str; 7] = ["factor", "mass", "lambda", "n_box", "energy", "lambda_energy", "log_norm_sq"];

fn at(grid: &LambdaGrid, rows: &[EnergyRow], lambda: f64) -> Result<f64> {
    grid.index_of(lambda)
        .map(|i| rows[i].lambda_energy)
        .ok_or_else(|| invalid(format!("λ = {lambda} is not a grid point")))
}

pub(crate) fn run(config: &ExperimentConfig, sink: &mut Sink) {
    let settings = &config.quadrature;
    let grid = &config.grid;

    sink.cell("free_energy", format!("masses={:?}", config.energy_masses), &[FREE_ENERGY, PLATEAU], || {
        let dims = config.dims()?;
        let f = reference_generator(dims)?;
        let mut t = Table::new("energy_free", &ENERGY_COLUMNS);
        let mut worst: f64 = 0.0;
        let mut parts = Vec::new();
        let mut plateau = None;
        for &m in &config.energy_masses {
            let rows = charge_energy_diagnostic(&free(dims, m)?, 0, &f, grid, settings)?;
            let le: Vec<f64> = rows.iter().map(|r| r.lambda_energy).collect();
            let ratio = le.iter().cloned().fold(0.0, f64::max) / le.iter().cloned().fold(f64::INFINITY, f64::min);
            worst = worst.max(ratio);
            parts.push(format!("m={m}: {ratio:.4}"));
            if m == 1.0 {
                let n = le.len();
                let back = n.saturating_sub(1 + grid.points_per_decade);
                plateau = Some((le[n - 1] / le[back] - 1.0).abs());
            }
            push_rows(&mut t, "free", Some(m), &rows);
        }
        let mut out = CellOutput::default().verdict(FREE_ENERGY.verdict(worst < 1.5, worst, 1.5, parts.join(", ")));
        if let Some(p) = plateau {
            out = out.verdict(PLATEAU.verdict(true, p, 0.2, "|λE(λ_min)/λE(10·λ_min) − 1|"));
        }
        Ok(out.table(t))
    });

    sink.cell("lutz_energy", format!("schedule={:?}", config.lutz.schedule), &[LUTZ_ENERGY], || {
        let dims = config.dims()?;
        let f = reference_generator(dims)?;
        let lutz = Factor::Lutz(neutral_lutz_factor(dims, config.lutz.schedule, config.lutz.truncation));
        let rows = charge_energy_diagnostic(&lutz, 0, &f, grid, settings)?;
        let growth = at(grid, &rows, 1e-2)? / at(grid, &rows, 1.0)?;
        let mut t = Table::new("energy_lutz", &ENERGY_COLUMNS);
        push_rows(&mut t, "lutz", None, &rows);
        Ok(CellOutput::default()
            .verdict(LUTZ_ENERGY.verdict(growth > 10.0, growth, 10.0, "λE(1e-2) / λE(1)"))
            .table(t))
    });

    sink.cell("preservation", format!("at λ = {}", config.preservation_lambda), &[FREE_OWN, LUTZ_CANDIDATES], || {
        let dims = config.dims()?;
        let f = reference_generator(dims)?;
        let mut t = Table::new("preservation", &["factor", "candidate", "lambda", "distance", "proxy"]);
        let own = ScalingFamily::spacetime_orbit(f.clone(), None, 1.0, grid.clone())?;
        let fr = preservation_proxy(&free(dims, config.masses[0])?, 0, &f, &own, settings)?;
        let own_worst = fr.distances.iter().cloned().fold(0.0, f64::max);
        for (l, d) in fr.lambdas.iter().zip(&fr.distances) {
            t.push(row![format!("free({})", config.masses[0]), "own orbit", *l, *d, fr.proxy]);
        }

        let idx = grid
            .index_of(config.preservation_lambda)
            .ok_or_else(|| invalid(format!("λ = {} is not a grid point", config.preservation_lambda)))?;
        let lutz = Factor::Lutz(neutral_lutz_factor(dims, config.lutz.schedule, config.lutz.truncation));
        let candidates = [
            ("undamped orbit of f", f.clone()),
            ("undamped orbit of g0", reference_generators(dims)?.remove(0)),
        ];
        let mut closest = f64::INFINITY;
        for (name, g) in candidates {
            let fam = ScalingFamily::spacetime_orbit(g, None, 1.0, grid.clone())?;
            let r = preservation_proxy(&lutz, 0, &f, &fam, settings)?;
            closest = closest.min(r.distances[idx]);
            for (l, d) in r.lambdas.iter().zip(&r.distances) {
                t.push(row!["lutz", name, *l, *d, r.proxy]);
            }
        }
        Ok(CellOutput::default()
            .verdict(FREE_OWN.verdict(own_worst < 1e-10, own_worst, 1e-10, "largest distance over the grid"))
            .verdict(LUTZ_CANDIDATES.verdict(closest > 0.9, closest, 0.9, "smallest candidate distance"))
            .table(t))
    });
}
