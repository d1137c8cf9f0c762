use super::{CellOutput, Claim, ExperimentConfig, GroupSpec, NormalSpec, Sink, Table, VerdictKind};
use crate::error::{Error, Result};
use crate::row;
use crate::sectors::{
    conjugation_structure, generating_check, sector_table, split, FinitePair, NamedGroup, SectorTable, TorusPair,
};

pub(crate) const SECTOR_COUNTS: Claim = Claim {
    id: "sector_counts",
    claim: "preserved / non-preserved sectors match the expected classification",
    anchor: "only sectors trivial on N are preserved",
    kind: VerdictKind::Identity,
};

pub(crate) const QUOTIENT_COUNT: Claim = Claim {
    id: "quotient_count",
    claim: "number of preserved sectors equals the number of irreps of G/N",
    anchor: "preserved sectors are the representations of G/N",
    kind: VerdictKind::Identity,
};

const ORTHOGONALITY: Claim = Claim {
    id: "character_orthogonality",
    claim: "character tables orthonormal to 1e-10",
    anchor: "character theory of the gauge group",
    kind: VerdictKind::Property,
};

const COLUMNS: [&str; 7] = ["irrep", "dim", "indicator", "trivial_on_n", "preserved", "factor", "quaternionic_doubled"];

fn rows_table(name: String, t: &SectorTable) -> Table {
    let mut out = Table::new(name, &COLUMNS);
    for r in &t.rows {
        let factor = serde_json::to_value(r.factor)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        out.push(row![
            r.irrep.clone(),
            r.dim,
            r.indicator as i64,
            r.trivial_on_n,
            r.preserved,
            factor,
            r.quaternionic_doubled
        ]);
    }
    out
}

fn finite_pair(group: &str, normal: &NormalSpec) -> Result<FinitePair> {
    let g = NamedGroup::try_from(group.to_string())?.build()?;
    let n = match normal {
        NormalSpec::Keyword(k) => match k.as_str() {
            "trivial" => g.trivial_subgroup(),
            "whole" => g.whole(),
            "center" => g.center(),
            other => return Err(Error::Config(format!("unknown subgroup keyword {other:?}"))),
        },
        NormalSpec::Elements(e) => g.subgroup_by_names(e)?,
    };
    FinitePair::new(g, n)
}

pub(crate) fn run(config: &ExperimentConfig, sink: &mut Sink) {
    let mut summary = Table::new(
        "sector_summary",
        &[
            "pair", "preserved", "non_preserved", "quotient_irreps", "iso_verified", "symmetric", "generating", "m1",
            "p1", "m2", "p2", "warnings",
        ],
    );
    let mut orth_worst: f64 = 0.0;
    let mut counts_ok = true;
    let mut quotient_ok = true;
    let mut finite_seen = 0usize;
    let mut checked = 0usize;
    for (i, entry) in config.groups.iter().enumerate() {
        let label = entry.label();
        let mut cell_counts = true;
        let mut cell_quotient = true;
        sink.cell("sector_table", label.clone(), &[], || {
            match entry {
                GroupSpec::Finite {
                    group,
                    normal,
                    delta,
                    expect_preserved,
                    expect_non_preserved,
                } => {
                    let pair = finite_pair(group, normal)?;
                    orth_worst = orth_worst.max(pair.table.orthogonality_defect());
                    let delta = match delta {
                        Some(names) => names.iter().map(|n| pair.irrep(n)).collect::<Result<Vec<_>>>()?,
                        None => pair.default_delta(),
                    };
                    let v = generating_check(&pair.table, pair.group.order(), &delta)?;
                    let sp = split(&pair, &delta)?;
                    let c1 = conjugation_structure(&pair.table, &sp.delta1)?;
                    let c2 = conjugation_structure(&pair.table, &sp.delta2)?;
                    let t = sector_table(&pair, &delta)?;
                    let (np, nn) = (t.preserved().len(), t.non_preserved().len());
                    finite_seen += 1;
                    cell_quotient = Some(np) == t.quotient_irreps;
                    if let Some(e) = expect_preserved {
                        cell_counts &= *e == np;
                        checked += 1;
                    }
                    if let Some(e) = expect_non_preserved {
                        cell_counts &= *e == nn;
                    }
                    summary.push(row![
                        label.clone(),
                        np,
                        nn,
                        t.quotient_irreps.unwrap_or(0),
                        sp.iso_verified,
                        v.symmetric,
                        v.generating,
                        c1.m,
                        c1.p,
                        c2.m,
                        c2.p,
                        t.warnings.join("; ")
                    ]);
                    let name = format!("sectors_{i:02}_{group}_N{}", pair.normal.order());
                    Ok(CellOutput::default().table(rows_table(name, &t)))
                }
                GroupSpec::Torus {
                    rank,
                    subgroup,
                    delta,
                    weight_box,
                    expect_preserved,
                } => {
                    let pair = TorusPair::new(*rank, subgroup.clone())?;
                    let v = pair.generating_check(delta)?;
                    let (d1, d2) = pair.split(delta)?;
                    let c1 = pair.conjugation_structure(&d1)?;
                    let c2 = pair.conjugation_structure(&d2)?;
                    let t = pair.sector_table(delta, *weight_box)?;
                    if let Some(e) = expect_preserved {
                        let want: Vec<String> = e.iter().map(|w| crate::sectors::weight_name(w)).collect();
                        cell_counts &= t.preserved() == want.iter().map(String::as_str).collect::<Vec<_>>();
                        checked += 1;
                    }
                    summary.push(row![
                        label.clone(),
                        t.preserved().len(),
                        t.non_preserved().len(),
                        "n/a",
                        "n/a",
                        v.symmetric,
                        v.generating,
                        c1.m,
                        c1.p,
                        c2.m,
                        c2.p,
                        t.warnings.join("; ")
                    ]);
                    let name = format!("sectors_{i:02}_T{rank}_box{weight_box}");
                    Ok(CellOutput::default().table(rows_table(name, &t)))
                }
            }
        });
        counts_ok &= cell_counts;
        quotient_ok &= cell_quotient;
    }
    sink.tables.push(summary);
    let failed = sink.errors.len();
    let detail = format!("{checked} pairs with expectations, {failed} failed cells");
    sink.verdicts.push(SECTOR_COUNTS.verdict(counts_ok && failed == 0, checked as f64, f64::NAN, detail));
    sink.verdicts.push(QUOTIENT_COUNT.verdict(
        quotient_ok && failed == 0,
        finite_seen as f64,
        f64::NAN,
        "finite pairs compared",
    ));
    sink.verdicts.push(ORTHOGONALITY.verdict(orth_worst < 1e-10, orth_worst, 1e-10, "largest defect"));
}
