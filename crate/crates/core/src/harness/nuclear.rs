use super::{CellOutput, Claim, ExperimentConfig, Sink, Table, VerdictKind};
use crate::error::Result;
use crate::models::{build_free_factor, neutral_lutz_factor, Factor, MassAssignment};
use crate::onep::Dims;
use crate::row;
use crate::theta::{
    lutz_spectrum_decay, reference_generators, theta_spectrum, theta_trend, truncation_table, GeneratorFamily,
    NuclearitySpectrum,
};

pub(crate) const FREE_BOUNDED: Claim = Claim {
    id: "free_bounded",
    claim: "free-factor spectrum p-norms stay within 2× their λ = 1 value over the grid",
    anchor: "the free field is asymptotically p-nuclear",
    kind: VerdictKind::Proxy,
};

const FREE_OTHER_MASS: Claim = Claim {
    id: "free_bounded_other_masses",
    claim: "sup/λ=1 ratio of free-factor p-norms at the remaining masses",
    anchor: "the free field is asymptotically p-nuclear",
    kind: VerdictKind::Diagnostic,
};

pub(crate) const LUTZ_DECAY: Claim = Claim {
    id: "lutz_decay",
    claim: "box-damped factor: top singular value at the probe scale below 0.1× its λ₀ value",
    anchor: "nuclearity of the damped generalized free field vanishes at short distances",
    kind: VerdictKind::Proxy,
};

const LUTZ_DECREASING: Claim = Claim {
    id: "lutz_decreasing",
    claim: "box-damped factor: top singular value strictly decreasing over decades below λ₀",
    anchor: "nuclearity of the damped generalized free field vanishes at short distances",
    kind: VerdictKind::Proxy,
};

const SPECTRUM_RANGE: Claim = Claim {
    id: "spectrum_range",
    claim: "every computed spectrum is non-increasing with values in [0, 1]",
    anchor: "the damping operator is a contraction",
    kind: VerdictKind::Property,
};

const BETA_MONOTONE: Claim = Claim {
    id: "beta_monotone",
    claim: "p-norms do not increase when β doubles, and are non-increasing in p",
    anchor: "monotonicity of the damping in the inverse temperature",
    kind: VerdictKind::Property,
};

const TRUNCATION_STABLE: Claim = Claim {
    id: "truncation_stable",
    claim: "truncation ranks N(ε) change by at most 1 under quadrature refinement",
    anchor: "finite-rank truncation of the damping operator",
    kind: VerdictKind::Property,
};

fn free_factor(dims: Dims, mass: f64) -> Result<Factor> {
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

fn spectrum_ok(s: &NuclearitySpectrum) -> bool {
    s.values.iter().all(|&v| (0.0..=1.0).contains(&v)) && s.values.windows(2).all(|w| w[1] <= w[0])
}

fn push_spectrum(t: &mut Table, factor: &str, mass: f64, s: &NuclearitySpectrum) {
    for (i, &v) in s.values.iter().enumerate() {
        t.push(row![factor, mass, s.lambda, s.n_box, i, v, s.label.clone()]);
    }
}

pub(crate) fn run(config: &ExperimentConfig, sink: &mut Sink) {
    let settings = &config.quadrature;
    let mut lambdas = config.grid.points();
    if !lambdas.contains(&1.0) {
        lambdas.insert(0, 1.0);
    }
    let mut masses = config.masses.clone();
    if !masses.contains(&config.nuclearity_mass) {
        masses.push(config.nuclearity_mass);
    }
    let mut all_in_range = true;

    for &m in &masses {
        let claims = if m == config.nuclearity_mass { vec![FREE_BOUNDED] } else { vec![FREE_OTHER_MASS] };
        let mut range_ok = true;
        sink.cell("theta_free", format!("mass={m}"), &claims, || {
            let dims = config.dims()?;
            let gen = GeneratorFamily::neutral(free_factor(dims, m)?, reference_generators(dims)?)?;
            let spectra = theta_trend(&gen, &lambdas, config.beta, &config.p_values, settings)
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let mut spec_t = Table::new(
                format!("theta_free_m{m}"),
                &["factor", "mass", "lambda", "n_box", "index", "value", "label"],
            );
            let mut norm_t = Table::new(
                format!("theta_free_norms_m{m}"),
                &["mass", "lambda", "p", "p_norm", "ratio_to_lambda_one", "floored", "total"],
            );
            let at_one = spectra.iter().find(|s| s.lambda == 1.0).expect("inserted above");
            let mut worst: f64 = 0.0;
            let mut parts = Vec::new();
            for &p in &config.p_values {
                let base = at_one.p_norm(p);
                let sup = spectra.iter().map(|s| s.p_norm(p)).fold(0.0, f64::max);
                let ratio = sup / base;
                worst = worst.max(ratio);
                parts.push(format!("p={p}: sup/λ=1 = {ratio:.4}"));
            }
            for s in &spectra {
                range_ok &= spectrum_ok(s);
                push_spectrum(&mut spec_t, "free", m, s);
                for &p in &config.p_values {
                    let v = s.p_norm(p);
                    norm_t.push(row![m, s.lambda, p, v, v / at_one.p_norm(p), s.floored, s.total]);
                }
            }
            let claim = claims[0];
            let label = format!("m={m}, β={}; {}", config.beta, parts.join(", "));
            Ok(CellOutput::default()
                .verdict(claim.verdict(worst <= 2.0, worst, 2.0, label))
                .table(spec_t)
                .table(norm_t))
        });
        all_in_range &= range_ok;
    }

    let mut lutz_range = true;
    sink.cell(
        "theta_lutz",
        format!("schedule={:?}, probe={}", config.lutz.schedule, config.lutz_probe_lambda),
        &[LUTZ_DECAY, LUTZ_DECREASING],
        || {
            let dims = config.dims()?;
            let lutz = Factor::Lutz(neutral_lutz_factor(dims, config.lutz.schedule, config.lutz.truncation));
            let gen = GeneratorFamily::neutral(lutz, reference_generators(dims)?)?;
            let r = lutz_spectrum_decay(&gen, &config.grid.points(), config.beta, config.lutz_probe_lambda, settings)?;
            let mut t = Table::new("theta_lutz", &["lambda", "n_box", "top", "label"]);
            for (&l, &v) in r.lambdas.iter().zip(&r.top_values) {
                t.push(row![l, gen.factor().n_box(l), v, r.label.clone()]);
                lutz_range &= (0.0..=1.0).contains(&v);
            }
            Ok(CellOutput::default()
                .verdict(LUTZ_DECAY.verdict(r.decays, r.ratio, 0.1, format!("top({}) / top(λ₀)", r.probe_lambda)))
                .verdict(LUTZ_DECREASING.verdict(
                    r.decreasing_over_decades,
                    f64::NAN,
                    f64::NAN,
                    "decade points at and below λ₀",
                ))
                .table(t))
        },
    );
    all_in_range &= lutz_range;

    sink.cell("beta_monotone", format!("mass={}", config.nuclearity_mass), &[BETA_MONOTONE], || {
        let dims = config.dims()?;
        let gen = GeneratorFamily::neutral(free_factor(dims, config.nuclearity_mass)?, reference_generators(dims)?)?;
        let mut ps = config.p_values.clone();
        ps.sort_by(f64::total_cmp);
        let mut t = Table::new("theta_beta", &["lambda", "beta", "p", "p_norm"]);
        let mut ok = true;
        let mut worst: f64 = 0.0;
        for &l in &[1.0, config.grid.lambda_min] {
            let a = theta_spectrum(&gen, l, config.beta, &ps, settings)?;
            let b = theta_spectrum(&gen, l, 2.0 * config.beta, &ps, settings)?;
            for &p in &ps {
                t.push(row![l, a.beta, p, a.p_norm(p)]);
                t.push(row![l, b.beta, p, b.p_norm(p)]);
                let excess = b.p_norm(p) - a.p_norm(p);
                worst = worst.max(excess / a.p_norm(p));
                ok &= excess <= 1e-12 * a.p_norm(p);
            }
            for w in ps.windows(2) {
                ok &= a.p_norm(w[1]) <= a.p_norm(w[0]) * (1.0 + 1e-12);
            }
        }
        Ok(CellOutput::default()
            .verdict(BETA_MONOTONE.verdict(ok, worst, 0.0, "largest relative increase when β doubles"))
            .table(t))
    });

    sink.cell("truncation", format!("q={}, eps={:?}", config.q, config.truncation_eps), &[TRUNCATION_STABLE], || {
        let dims = config.dims()?;
        let gen = GeneratorFamily::neutral(free_factor(dims, config.nuclearity_mass)?, reference_generators(dims)?)?;
        let fine = settings.refined();
        let mut t = Table::new("truncation", &["lambda", "eps", "n", "tail", "n_refined", "tail_refined"]);
        let mut worst = 0usize;
        for &l in &[1.0, config.grid.lambda_min] {
            let a = theta_spectrum(&gen, l, config.beta, &[], settings)?;
            let b = theta_spectrum(&gen, l, config.beta, &[], &fine)?;
            let ra = truncation_table(&a, config.q, &config.truncation_eps)?;
            let rb = truncation_table(&b, config.q, &config.truncation_eps)?;
            for (x, y) in ra.iter().zip(&rb) {
                worst = worst.max(x.n.abs_diff(y.n));
                t.push(row![l, x.eps, x.n, x.tail, y.n, y.tail]);
            }
        }
        Ok(CellOutput::default()
            .verdict(TRUNCATION_STABLE.verdict(worst <= 1, worst as f64, 1.0, "largest |N − N_refined|"))
            .table(t))
    });

    let v = SPECTRUM_RANGE.verdict(all_in_range, f64::NAN, f64::NAN, "free and box-damped spectra");
    sink.verdicts.push(v);
}
