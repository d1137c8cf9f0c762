//! Acceptance suite: one line per criterion, non-zero exit if any criterion fails.
//!
//! Criteria 1 to 8 run the library experiments on the default configuration and read
//! the verdicts; criterion 9 runs the `scalelab` binary twice and compares artifacts.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Duration;

use scalelab_core::harness::{run, Cell, Experiment, ExperimentConfig, RunOutput, Status, Table};

struct Line {
    ok: bool,
    text: String,
}

fn time_of(out: &RunOutput, cells: &[&str]) -> Duration {
    out.timings.iter().filter(|t| cells.contains(&t.cell.as_str())).map(|t| t.elapsed).sum()
}

fn total_time(out: &RunOutput) -> Duration {
    out.timings.iter().map(|t| t.elapsed).sum()
}

/// Pass state and a short measurement for each verdict id.
fn check(out: &RunOutput, ids: &[&str]) -> (bool, Vec<String>) {
    let mut ok = true;
    let mut parts = Vec::new();
    for id in ids {
        match out.report.verdict(id) {
            Some(v) => {
                ok &= v.status == Status::Pass;
                let m = v.measured.map(|m| format!("{m:.3e}")).unwrap_or_else(|| "-".into());
                let th = v.threshold.map(|t| format!(" vs {t:e}")).unwrap_or_default();
                parts.push(format!("{id}={m}{th} {:?}", v.status).to_lowercase());
            }
            None => {
                ok = false;
                parts.push(format!("{id} missing"));
            }
        }
    }
    (ok, parts)
}

fn criterion(n: u32, name: &str, ok: bool, parts: Vec<String>) -> Line {
    let status = if ok { "PASS" } else { "FAIL" };
    Line {
        ok,
        text: format!("criterion {n} [{name}]: {status} ({})", parts.join("; ")),
    }
}

fn within(limit_s: f64, d: Duration, parts: &mut Vec<String>) -> bool {
    let s = d.as_secs_f64();
    parts.push(format!("runtime {s:.2}s < {limit_s}s"));
    s < limit_s
}

fn summary_row<'a>(t: &'a Table, pair: &str) -> Option<&'a Vec<Cell>> {
    let c = t.column("pair")?;
    t.rows.iter().find(|r| matches!(&r[c], Cell::Text(s) if s == pair))
}

fn int_at(t: &Table, row: &[Cell], col: &str) -> Option<i64> {
    match row.get(t.column(col)?)? {
        Cell::Int(i) => Some(*i),
        _ => None,
    }
}

fn sectors_line(out: &RunOutput) -> Line {
    let (mut ok, mut parts) = check(out, &["sector_counts", "quotient_count"]);
    let summary = out.table("sector_summary");
    let expect = [("(Z4,{0,2})", 2, 2), ("(S3,{012,120,201})", 2, 1)];
    for (pair, p, n) in expect {
        let got = summary.and_then(|t| {
            let r = summary_row(t, pair)?;
            Some((int_at(t, r, "preserved")?, int_at(t, r, "non_preserved")?))
        });
        ok &= got == Some((p, n));
        parts.push(format!("{pair} -> {got:?}"));
    }
    let torus = out.tables.iter().find(|t| t.name.contains("_T1_box4"));
    let preserved: Option<Vec<String>> = torus.map(|t| {
        let (ci, cp) = (t.column("irrep").unwrap(), t.column("preserved").unwrap());
        t.rows
            .iter()
            .filter(|r| r[cp] == Cell::Bool(true))
            .map(|r| r[ci].render())
            .collect()
    });
    let want: Vec<String> = ["chi_-3", "chi_0", "chi_3"].iter().map(|s| s.to_string()).collect();
    ok &= preserved.as_ref() == Some(&want);
    parts.push(format!("U(1)/Z3 box 4 preserved {preserved:?}"));
    ok &= within(1.0, total_time(out), &mut parts);
    criterion(8, "sector tables", ok, parts)
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("output directory")
        .map(|e| {
            let e = e.expect("entry");
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).expect("readable"))
        })
        .collect()
}

fn determinism_line(config: &ExperimentConfig) -> Line {
    let tmp = tempfile::tempdir().expect("tempdir");
    let cfg_path = tmp.path().join("config.json");
    std::fs::write(&cfg_path, serde_json::to_string_pretty(config).expect("serializes")).expect("write config");
    let mut dirs = Vec::new();
    let mut codes = Vec::new();
    for run_id in ["a", "b"] {
        let out = tmp.path().join(run_id);
        let status = Command::new(env!("CARGO_BIN_EXE_scalelab"))
            .args(["all", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(&out)
            .args(["--seed", "7", "--threads", "2"])
            .stderr(std::process::Stdio::null())
            .status()
            .expect("binary runs");
        codes.push(status.code());
        dirs.push(read_dir(&out));
    }
    let same_names = dirs[0].keys().eq(dirs[1].keys());
    let differing: Vec<&String> = dirs[0]
        .iter()
        .filter(|(k, v)| dirs[1].get(*k) != Some(v))
        .map(|(k, _)| k)
        .collect();
    let ok = same_names && differing.is_empty() && !dirs[0].is_empty() && codes[0] == codes[1];
    criterion(
        9,
        "determinism",
        ok,
        vec![
            format!("{} artifacts per run", dirs[0].len()),
            format!("differing {differing:?}"),
            format!("exit codes {codes:?}"),
        ],
    )
}

fn main() {
    let config = ExperimentConfig::default();
    let mut lines = Vec::new();

    let scaling = run(Experiment::ScalingLimit, &config).expect("default config validates");
    let (ok, mut parts) = check(&scaling, &["covariance"]);
    let ok = within(10.0, time_of(&scaling, &["covariance"]), &mut parts) && ok;
    lines.push(criterion(1, "mass-scaling covariance", ok, parts));
    let (ok, parts) = check(&scaling, &["massless_invariance"]);
    lines.push(criterion(2, "massless dilation invariance", ok, parts));
    let (ok, parts) = check(&scaling, &["convergence"]);
    lines.push(criterion(3, "scaling-limit convergence", ok, parts));
    let (ok, parts) = check(&scaling, &["factorization"]);
    lines.push(criterion(4, "product factorization", ok, parts));

    let nuclear = run(Experiment::Nuclearity, &config).expect("validates");
    let (ok, mut parts) = check(&nuclear, &["free_bounded", "lutz_decay"]);
    let ok = within(60.0, time_of(&nuclear, &["theta_free", "theta_lutz"]), &mut parts) && ok;
    lines.push(criterion(5, "asymptotic-nuclearity trend (one-particle proxy)", ok, parts));

    let energy = run(Experiment::ChargeEnergy, &config).expect("validates");
    let (ok, parts) = check(
        &energy,
        &["free_energy_bounded", "lutz_energy_growth", "free_own_family", "lutz_undamped_candidates"],
    );
    lines.push(criterion(6, "preservation dichotomy (proxy)", ok, parts));

    let appendix = run(Experiment::Appendix, &config).expect("validates");
    let (ok, mut parts) = check(
        &appendix,
        &["orthonormal_reconstruction", "tensor_multiplicativity", "eps_content_rank_one", "exponent_windows"],
    );
    let ok = within(30.0, total_time(&appendix), &mut parts) && ok;
    lines.push(criterion(7, "finite-rank map suite", ok, parts));

    let sectors = run(Experiment::Sectors, &config).expect("validates");
    lines.push(sectors_line(&sectors));

    lines.push(determinism_line(&config));

    for l in &lines {
        println!("{}", l.text);
    }
    let failed = lines.iter().filter(|l| !l.ok).count();
    println!("acceptance: {} of {} criteria pass", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
