use super::{CellOutput, Claim, ExperimentConfig, Sink, Table, VerdictKind};
use crate::error::Result;
use crate::models::{build_free_factor, neutral_lutz_factor, reference_generator, Factor, MassAssignment};
use crate::onep::Dims;
use crate::row;
use crate::states::{
    local_state_distance, product_factorization, reference_probes, scaling_limit_estimate, vacuum_form, CauchyDatum,
    ScalingFamily, VacuumModel,
};

pub(crate) const COVARIANCE: Claim = Claim {
    id: "covariance",
    claim: "q_m(δ_λ F) = q_{λm}(F) to relative 1e-6 over the grid, masses and probes",
    anchor: "mass-scaling covariance of the free vacuum form",
    kind: VerdictKind::Identity,
};

pub(crate) const MASSLESS: Claim = Claim {
    id: "massless_invariance",
    claim: "|ω⁰(W(δ_λ F)) − ω⁰(W(F))| < 1e-8 over the grid",
    anchor: "dilation invariance of the massless vacuum",
    kind: VerdictKind::Identity,
};

pub(crate) const CONVERGENCE: Claim = Claim {
    id: "convergence",
    claim: "|ω^m(W(δ_λ F)) − ω⁰(W(F))| at λ_min below 1e-2 of its λ_max value and strictly decreasing per decade",
    anchor: "massive scaling limit equals the massless vacuum",
    kind: VerdictKind::Property,
};

pub(crate) const FACTORIZATION: Claim = Claim {
    id: "factorization",
    claim: "product vacuum on W(F_A ⊕ F_B) equals the product of factor values to 1e-12",
    anchor: "scaling limit of a tensor product is the product of the limits",
    kind: VerdictKind::Identity,
};

const STATE_DISTANCE: Claim = Claim {
    id: "state_distance",
    claim: "probe-restricted local distance between ω^m and ω⁰ along the grid",
    anchor: "local normality of the massive and massless vacua at short distances",
    kind: VerdictKind::Diagnostic,
};

const CAUCHY_RADIUS: f64 = 7.0;

fn probes(config: &ExperimentConfig, dims: Dims) -> Result<Vec<CauchyDatum>> {
    reference_probes(dims)?
        .into_iter()
        .map(|p| p.dilate(config.probe_width))
        .collect()
}

const PROBE_NAMES: [&str; 3] = ["field", "momentum", "mixed"];

fn probe_name(i: usize) -> String {
    PROBE_NAMES.get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("probe{i}"))
}

pub(crate) fn run(config: &ExperimentConfig, sink: &mut Sink) {
    let settings = &config.quadrature;
    let lambdas = config.grid.points();
    let decade_points: Vec<f64> = config.grid.decade_indices().into_iter().map(|i| lambdas[i]).collect();

    sink.cell("covariance", format!("masses={:?}", config.masses), &[COVARIANCE], || {
        let dims = config.dims()?;
        let ps = probes(config, dims)?;
        let mut t = Table::new(
            "covariance",
            &["probe", "mass", "lambda", "q_dilated", "q_scaled_mass", "rel_defect"],
        );
        let mut worst: f64 = 0.0;
        for (i, p) in ps.iter().enumerate() {
            for &m in &config.masses {
                for &l in &lambdas {
                    let a = vacuum_form(&p.dilate(l)?, m, settings)?.q;
                    let b = vacuum_form(p, l * m, settings)?.q;
                    let rel = (a - b).abs() / b;
                    worst = worst.max(rel);
                    t.push(row![probe_name(i), m, l, a, b, rel]);
                }
            }
        }
        Ok(CellOutput::default()
            .verdict(COVARIANCE.verdict(worst < 1e-6, worst, 1e-6, "largest relative defect"))
            .table(t))
    });

    sink.cell("massless_invariance", "m=0", &[MASSLESS], || {
        let dims = config.dims()?;
        let ps = probes(config, dims)?;
        let mut t = Table::new("massless_invariance", &["probe", "lambda", "weyl", "weyl_at_one", "deviation"]);
        let mut worst: f64 = 0.0;
        for (i, p) in ps.iter().enumerate() {
            let base = vacuum_form(p, 0.0, settings)?.weyl_value();
            for &l in &lambdas {
                let w = vacuum_form(&p.dilate(l)?, 0.0, settings)?.weyl_value();
                let d = (w - base).abs();
                worst = worst.max(d);
                t.push(row![probe_name(i), l, w, base, d]);
            }
        }
        Ok(CellOutput::default()
            .verdict(MASSLESS.verdict(worst < 1e-8, worst, 1e-8, "largest Weyl-value deviation"))
            .table(t))
    });

    sink.cell("convergence", format!("masses={:?}", config.masses), &[CONVERGENCE], || {
        let dims = config.dims()?;
        let ps = probes(config, dims)?;
        let mut t = Table::new(
            "convergence",
            &["probe", "mass", "lambda", "weyl", "massless_value", "deviation", "cauchy_defect"],
        );
        let decades = config.grid.decade_indices();
        let mut worst_ratio: f64 = 0.0;
        let mut monotone = true;
        let mut notes = Vec::new();
        for (i, p) in ps.iter().enumerate() {
            let target = vacuum_form(p, 0.0, settings)?.weyl_value();
            let fam = ScalingFamily::dilation_orbit(p.clone(), CAUCHY_RADIUS * config.probe_width, config.grid.clone())?;
            for &m in &config.masses {
                let r = scaling_limit_estimate(&fam, &VacuumModel::Free { mass: m }, settings)?;
                let dev: Vec<f64> = r.values.iter().map(|v| (v - target).abs()).collect();
                for (k, &l) in r.lambdas.iter().enumerate() {
                    t.push(row![probe_name(i), m, l, r.values[k], target, dev[k], r.cauchy_defect]);
                }
                let ratio = dev[dev.len() - 1] / dev[0];
                worst_ratio = worst_ratio.max(ratio);
                let dec = decades.windows(2).all(|w| dev[w[1]] < dev[w[0]]);
                if !dec {
                    monotone = false;
                    notes.push(format!("{} m={m} not decreasing per decade", probe_name(i)));
                }
            }
        }
        let detail = if notes.is_empty() {
            "ratio of deviations λ_min/λ_max; decade steps strictly decreasing".to_string()
        } else {
            notes.join("; ")
        };
        Ok(CellOutput::default()
            .verdict(CONVERGENCE.verdict(worst_ratio < 1e-2 && monotone, worst_ratio, 1e-2, detail))
            .table(t))
    });

    sink.cell("factorization", "free×free, free×generalized", &[FACTORIZATION], || {
        let dims = config.dims()?;
        let ps = probes(config, dims)?;
        let mut t = Table::new("factorization", &["pair", "lambda", "lhs", "rhs", "defect"]);
        let mut worst: f64 = 0.0;
        let fam: Vec<ScalingFamily> = ps
            .iter()
            .map(|p| ScalingFamily::dilation_orbit(p.clone(), CAUCHY_RADIUS * config.probe_width, config.grid.clone()))
            .collect::<Result<_>>()?;
        let mut record = |name: String, c: crate::states::FactorizationCheck, t: &mut Table| {
            worst = worst.max(c.defect);
            t.push(row![name, c.lambda, c.lhs, c.rhs, c.defect]);
        };
        for (a, &ma) in config.masses.iter().enumerate() {
            for &mb in &config.masses[a..] {
                let (fa, fb) = (&fam[0], &fam[fam.len() - 1]);
                for &l in &decade_points {
                    let c = product_factorization(
                        &VacuumModel::Free { mass: ma },
                        &VacuumModel::Free { mass: mb },
                        fa,
                        fb,
                        l,
                        settings,
                    )?;
                    record(format!("free({ma})×free({mb})"), c, &mut t);
                }
            }
        }
        // A free factor against the box-damped generalized free field.
        let lutz = Factor::Lutz(neutral_lutz_factor(dims, config.lutz.schedule, config.lutz.truncation));
        let g = reference_generator(dims)?;
        let lutz_fam = ScalingFamily::spacetime_orbit(g.clone(), Some(config.lutz.schedule), 1.0, config.grid.clone())?;
        let free = Factor::Free(build_free_factor(
            dims,
            &[MassAssignment {
                irrep: "trivial".into(),
                conjugate: "trivial".into(),
                dim: 1,
                mass: config.masses[0],
            }],
        )?);
        let free_fam = ScalingFamily::spacetime_orbit(g, None, 1.0, config.grid.clone())?;
        for &l in &decade_points {
            let c = product_factorization(&free.vacuum_model(0)?, &lutz.vacuum_model(0)?, &free_fam, &lutz_fam, l, settings)?;
            record(format!("free({})×generalized", config.masses[0]), c, &mut t);
        }
        Ok(CellOutput::default()
            .verdict(FACTORIZATION.verdict(worst < 1e-12, worst, 1e-12, "largest |lhs − rhs|"))
            .table(t))
    });

    sink.cell("state_distance", format!("masses={:?}", config.masses), &[STATE_DISTANCE], || {
        let dims = config.dims()?;
        let ps = probes(config, dims)?;
        let mut t = Table::new("state_distance", &["mass", "lambda", "distance"]);
        let mut last: f64 = 0.0;
        for &m in &config.masses {
            for &l in &decade_points {
                let d = local_state_distance(m, 0.0, l, &ps, settings)?;
                t.push(row![m, l, d]);
                if l == decade_points[decade_points.len() - 1] {
                    last = last.max(d);
                }
            }
        }
        Ok(CellOutput::default()
            .verdict(STATE_DISTANCE.verdict(true, last, f64::NAN, "largest distance at the smallest decade point"))
            .table(t))
    });
}
