//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on any failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use noisytd::config::ExperimentConfig;
use noisytd::verify::{self, SuiteResult, VerifyOptions};
use noisytd_core::impurity::validate_on_grid;
use noisytd_core::ImpurityFn;

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

fn suite_line(
    id: usize,
    name: &'static str,
    limit: Option<Duration>,
    f: impl FnOnce() -> SuiteResult,
) -> Line {
    let start = Instant::now();
    let r = f();
    let took = start.elapsed();
    let in_time = limit.is_none_or(|l| took < l);
    Line {
        id,
        name,
        pass: r.pass() && in_time,
        detail: format!(
            "cases={} failures={} worst={:e} time={:.2}s",
            r.cases,
            r.failures,
            r.worst,
            took.as_secs_f64()
        ),
    }
}

fn lower_bound() -> Line {
    let start = Instant::now();
    let cfg = ExperimentConfig::load(&examples().join("lower_bound.cfg"), &[]).expect("config");
    let line = |pass, detail| Line {
        id: 7,
        name: "lower-bound reproduction",
        pass,
        detail,
    };
    let out = match noisytd::run(&cfg) {
        Ok(o) => o,
        Err(e) => return line(false, e.to_string()),
    };
    let took = start.elapsed();
    let names = [
        "residual",
        "root-gain/gini",
        "root-gain/entropy",
        "root-gain/kmsqrt",
        "clean-error-floor",
        "clean-weak-learnable",
    ];
    let mut pass = took < Duration::from_secs(120) && cfg.size_bound(2) == 1024;
    let mut detail = Vec::new();
    for n in names {
        let rec = out
            .summary
            .invariants
            .iter()
            .find(|r| r.name == format!("lower-bound/{n}"));
        let ok = rec.is_some_and(|r| r.pass);
        pass &= ok;
        detail.push(format!(
            "{n}={}",
            rec.map_or("missing".to_string(), |r| r.detail.clone())
        ));
    }
    detail.push(format!("time={:.2}s", took.as_secs_f64()));
    line(pass, detail.join(" "))
}

fn boost_smoke() -> Line {
    let start = Instant::now();
    let cfg = ExperimentConfig::load(&examples().join("noise_smoke.cfg"), &[]).expect("config");
    let line = |pass, detail| Line {
        id: 9,
        name: "boost under nasty noise",
        pass,
        detail,
    };
    let out = match noisytd::run(&cfg) {
        Ok(o) => o,
        Err(e) => return line(false, e.to_string()),
    };
    let took = start.elapsed();
    let finals: Vec<f64> = out
        .rows
        .iter()
        .filter(|r| r.t == 256)
        .map(|r| r.error_clean)
        .collect();
    let ok = finals.iter().filter(|&&e| e <= 0.1).count();
    let setup = cfg.d == 14 && cfg.eta == 0.01 && cfg.trials == 20 && finals.len() == 20;
    line(
        setup && ok * 10 >= finals.len() * 9 && took < Duration::from_secs(300),
        format!(
            "success {ok}/{} worst={:e} time={:.2}s",
            finals.len(),
            finals.iter().copied().fold(0.0, f64::max),
            took.as_secs_f64()
        ),
    )
}

fn run_binary(threads: &str, out: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_noisytd"))
        .arg("run")
        .arg("--config")
        .arg(examples().join("boost.cfg"))
        .arg("--set")
        .arg(format!("out.dir={}", out.display()))
        .env("NOISYTD_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    let mut files = Vec::new();
    for name in ["report.csv", "summary.json", "plots/boost-noise.svg"] {
        files.push((
            name.to_string(),
            fs::read(out.join(name)).map_err(|e| format!("{name}: {e}"))?,
        ));
    }
    Ok(files)
}

fn determinism() -> Line {
    let line = |pass, detail| Line {
        id: 11,
        name: "determinism across worker counts",
        pass,
        detail,
    };
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut runs = Vec::new();
    // Same out.dir every time; it is echoed into summary.json.
    let out = tmp.path().join("out");
    for threads in ["1", "8", "1", "8"] {
        let _ = fs::remove_dir_all(&out);
        match run_binary(threads, &out) {
            Ok(f) => runs.push(f),
            Err(e) => return line(false, e),
        }
    }
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    let bytes: usize = runs[0].iter().map(|f| f.1.len()).sum();
    line(
        same,
        format!("4 runs (threads 1,8,1,8), {bytes} bytes each"),
    )
}

fn main() -> ExitCode {
    let opts = VerifyOptions::default();
    let entropy_ok = validate_on_grid(&ImpurityFn::entropy()).is_ok();
    let mut lines = vec![
        suite_line(
            1,
            "gini gain identity",
            Some(Duration::from_secs(10)),
            || verify::gain_identity_suite(10_000, &opts),
        ),
        {
            let mut l = suite_line(2, "impurity drop bound", None, || {
                verify::drop_bound_suite(10_000, &opts)
            });
            l.pass &= entropy_ok;
            l.detail
                .push_str(&format!(" entropy-kappa-valid={entropy_ok}"));
            l
        },
        suite_line(3, "moment gaps vs tv", None, || {
            verify::moments_tv_suite(10_000, &opts)
        }),
        suite_line(4, "leaf tv bound", None, || {
            verify::tv_leaves_suite(1_000, &opts)
        }),
        suite_line(5, "influence equals covariance", None, || {
            verify::inf_corr_suite(100, 20, &opts)
        }),
        suite_line(6, "tribes closed forms", None, verify::tribes_suite),
    ];
    lines.push(lower_bound());
    lines.push(suite_line(8, "noiseless per-split drop", None, || {
        verify::noiseless_progress_suite(50, &opts)
    }));
    lines.push(boost_smoke());
    lines.push(suite_line(10, "osss oracle", None, || {
        verify::osss_suite(500, &opts)
    }));
    lines.push(determinism());

    let mut failed = 0;
    for l in &lines {
        println!(
            "criterion {:>2} {:<34} {} {}",
            l.id,
            l.name,
            if l.pass { "PASS" } else { "FAIL" },
            l.detail
        );
        failed += usize::from(!l.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        lines.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
