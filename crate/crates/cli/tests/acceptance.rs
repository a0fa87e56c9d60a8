//! Acceptance run: one PASS/FAIL line per criterion, with measured values and
//! runtime against its budget. Exits nonzero if any criterion fails.

use hitlab_cli::checks::{self, CheckResult};
use hitlab_cli::config::{AngleSpec, IndicatorParams, KeyLemmaParams, ScheduleSpec};
use hitlab_cli::experiments::indicator_estimates;
use hitlab_cli::RunError;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

const SEED: u64 = 7;

struct Verdict {
    passed: bool,
    detail: String,
}

impl From<CheckResult> for Verdict {
    fn from(c: CheckResult) -> Verdict {
        Verdict {
            passed: c.passed,
            detail: c.detail,
        }
    }
}

fn both(a: CheckResult, b: CheckResult) -> Verdict {
    Verdict {
        passed: a.passed && b.passed,
        detail: format!("{}; {}", a.detail, b.detail),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn c1() -> Result<Verdict, RunError> {
    let st = checks::chain_stats(SEED, 200)?;
    let total = st.failures + st.unit_first_broken;
    Ok(Verdict {
        passed: total == 0,
        detail: format!(
            "{} expansions, {} exact chains, {} failures ({} at n = 0 with a_1 = 1 where q_0 = q_1 makes the first inequality an equality, {} elsewhere)",
            st.expansions, st.chains, total, st.unit_first_broken, st.failures
        ),
    })
}

fn c2() -> Result<Verdict, RunError> {
    Ok(checks::pair_membership(&[1.5, 2.0, 3.0], 8, 1 << 27)?.into())
}

fn c3() -> Result<Verdict, RunError> {
    Ok(checks::hitting_oracle(SEED, 1000, 1_000_000)?.into())
}

fn c4() -> Result<Verdict, RunError> {
    Ok(checks::level_sets(SEED, 30, 4..=9)?.into())
}

fn c5() -> Result<Verdict, RunError> {
    Ok(checks::key_lemma(&KeyLemmaParams::default())?.into())
}

fn c6() -> Result<Verdict, RunError> {
    let p = IndicatorParams {
        schedule: ScheduleSpec {
            base: None,
            n_start: 2,
            n_end: 12,
        },
        ..IndicatorParams::default()
    };
    let pts = indicator_estimates(&p, SEED)?;
    let lows: Vec<f64> = pts.iter().map(|e| e.estimate.r_low).collect();
    let good = lows.iter().filter(|&&r| r >= 1.6).count();
    let bc = checks::borel_cantelli(2.0, 6, 1.8, 5)?;
    Ok(Verdict {
        passed: good >= 45 && bc.passed,
        detail: format!(
            "R_low >= 1.6 for {good} of {} points (need 45), median R_low {:.4}; {}",
            lows.len(),
            median(lows.clone()),
            bc.detail
        ),
    })
}

fn c7() -> Result<Verdict, RunError> {
    let schedule = ScheduleSpec {
        base: None,
        n_start: 2,
        n_end: 20,
    };
    let base = |angle: AngleSpec, recurrence: bool| IndicatorParams {
        angles: vec![angle],
        target: (!recurrence).then(|| vec!["0".to_string()]),
        schedule: schedule.clone(),
        recurrence,
        ..IndicatorParams::default()
    };
    let golden = indicator_estimates(&base(AngleSpec::Golden { depth: 60 }, false), SEED)?;
    let g_low: Vec<f64> = golden.iter().map(|e| e.estimate.r_low).collect();
    let g_in = g_low.iter().filter(|r| (0.85..=1.2).contains(*r)).count();
    let g_med = median(g_low);

    let two = AngleSpec::TypeTwo { depth: 9, c: 1 };
    let hits = indicator_estimates(&base(two.clone(), false), SEED)?;
    let ups: Vec<f64> = hits.iter().filter_map(|e| e.estimate.r_up).collect();
    let up_med = median(ups.clone());
    let rec = indicator_estimates(&base(two, true), SEED)?;
    let rec_med = median(rec.iter().map(|e| e.estimate.r_low).collect());

    let ok_g = (0.85..=1.2).contains(&g_med);
    let ok_up = up_med >= 1.7;
    let ok_rec = rec_med <= 0.65;
    Ok(Verdict {
        passed: ok_g && ok_up && ok_rec,
        detail: format!(
            "golden median R_low {g_med:.4} ({g_in} of {} points in [0.85, 1.2]) {}; type-2 median R_up {up_med:.4} over {} points {}; recurrence median R_low {rec_med:.4} {}",
            golden.len(),
            pf(ok_g),
            ups.len(),
            pf(ok_up),
            pf(ok_rec)
        ),
    })
}

fn c8() -> Result<Verdict, RunError> {
    Ok(both(checks::loglaw(SEED, 20, 100_000)?, checks::exponent_identity_check()?))
}

fn c9() -> Result<Verdict, RunError> {
    Ok(both(checks::flow_inequalities(SEED, 50)?, checks::section_map(SEED, 20)?))
}

fn c10() -> Result<Verdict, RunError> {
    Ok(checks::correlation_controls()?.into())
}

fn verify_all(dir: &Path) -> Result<(), RunError> {
    let status = Command::new(env!("CARGO_BIN_EXE_hitlab"))
        .args(["verify-all", "--seed", &SEED.to_string(), "--out"])
        .arg(dir)
        .output()
        .map_err(|e| RunError::Output(e.to_string()))?;
    if !status.status.success() {
        return Err(RunError::Output(format!(
            "verify-all exited with {}: {}",
            status.status,
            String::from_utf8_lossy(&status.stderr)
        )));
    }
    Ok(())
}

fn c11() -> Result<Verdict, RunError> {
    let io = |e: std::io::Error| RunError::Output(e.to_string());
    let a = tempfile::tempdir().map_err(io)?;
    let b = tempfile::tempdir().map_err(io)?;
    verify_all(a.path())?;
    verify_all(b.path())?;
    let mut names: Vec<String> = std::fs::read_dir(a.path())
        .map_err(io)?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    names.sort();
    let mut compared = 0;
    let mut differ = Vec::new();
    for n in &names {
        if n == "timings.json" {
            continue;
        }
        let x = std::fs::read(a.path().join(n)).map_err(io)?;
        let y = std::fs::read(b.path().join(n)).ok();
        compared += 1;
        if y.as_deref() != Some(&x[..]) {
            differ.push(n.clone());
        }
    }
    let extra = std::fs::read_dir(b.path()).map_err(io)?.count() != names.len();
    Ok(Verdict {
        passed: differ.is_empty() && !extra && compared > 0,
        detail: format!(
            "{compared} files compared byte for byte (timings.json excluded), {} differ{}",
            differ.len(),
            if extra { ", file sets differ" } else { "" }
        ),
    })
}

fn pf(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

type Criterion = (u32, &'static str, u64, fn() -> Result<Verdict, RunError>);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (1, "convergent bounds", 10, c1),
        (2, "pair membership and greedy minimality", 30, c2),
        (3, "hitting oracle equivalence", 120, c3),
        (4, "exact level-set measures", 60, c4),
        (5, "key lemma, exact vs certified", 120, c5),
        (6, "Y_2 lower indicator and Borel-Cantelli sums", 600, c6),
        (7, "golden and type-2 indicators", 60, c7),
        (8, "logarithm law and exponent identities", 60, c8),
        (9, "flow inequalities and section map", 300, c9),
        (10, "correlation controls", 30, c10),
        (11, "determinism of verify-all", 600, c11),
    ];
    let mut failed = 0;
    for (id, name, budget, f) in criteria {
        let start = Instant::now();
        let res = f();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(budget);
        let (ok, detail) = match res {
            Ok(v) => (v.passed && in_time, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {}: {name}: {detail} [{:.2} s, budget {budget} s{}]",
            pf(ok),
            took.as_secs_f64(),
            if in_time { "" } else { ", exceeded" }
        );
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
