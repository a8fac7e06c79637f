//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use vortexgauge::cli::{classify, degree_certificate, run_suite, Check, RunConfig, SuiteReport};
use vortexgauge::curve_algebra::Verdict;
use vortexgauge::holomorphization::{ef_bundle_degree_check, kernel_transport, solve_dolbeault};
use vortexgauge::spectral::{assemble_laplacian, dbar_kernel, kernel_window};
use vortexgauge::Result;

struct Outcome {
    pass: bool,
    detail: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, detail: Vec::new() }
    }

    fn check(&mut self, label: &str, ok: bool, msg: String) {
        self.pass &= ok;
        if ok {
            self.detail.push(format!("{label} {msg}"));
        } else {
            self.detail.push(format!("{label} FAILED {msg}"));
        }
    }

    /// Records the selected checks of a suite report (all of them when `only` is empty).
    fn suite(&mut self, label: &str, rep: &SuiteReport, only: &[&str]) {
        let picked: Vec<&Check> =
            rep.checks.iter().filter(|c| only.is_empty() || only.contains(&c.name.as_str())).collect();
        let ok = !picked.is_empty() && picked.iter().all(|c| c.pass);
        let msg = picked
            .iter()
            .map(|c| format!("{}={:.3e}{}", c.name, c.value, if c.pass { "" } else { "!" }))
            .collect::<Vec<_>>()
            .join(" ");
        self.check(label, ok, format!("[res {}] {msg}", rep.resolution));
    }
}

type Criterion = fn() -> Result<Outcome>;

fn cfg(json: &str) -> RunConfig {
    RunConfig::from_json(json).expect("acceptance config")
}

const GENUS2_INSTANCE: &str = r#""geometry": {"kind": "hyperbolic", "genus": 2, "pairing": "opposite"},
    "bundle": {"n": 1, "sigma": [0.5, 0.0, 0.0, 0.0], "expected_kernel": 1}"#;

fn criterion_1() -> Result<Outcome> {
    let mut o = Outcome::new();
    for g in [2, 3] {
        for n in [0, 1, 3] {
            let c = cfg(&format!(
                r#"{{"version": 1, "geometry": {{"genus": {g}}}, "bundle": {{"n": {n}, "random_sigma": true}},
                    "solver": {{"trials": 1000}}, "seed": {}}}"#,
                10 * g + n
            ));
            o.suite(&format!("g{g} n{n}"), &run_suite("cocycle", &c)?, &["cocycle_residual", "unit_modulus"]);
        }
    }
    Ok(o)
}

fn criterion_2() -> Result<Outcome> {
    let mut o = Outcome::new();
    let only = ["total_flux", "pointwise_curvature", "pointwise_refines"];
    for (label, json) in [
        ("g2 n1", r#"{"version": 1, "geometry": {"genus": 2}, "bundle": {"n": 1}, "resolution": 32}"#),
        ("g3 n4", r#"{"version": 1, "geometry": {"genus": 3}, "bundle": {"n": 4}, "resolution": 32}"#),
        ("torus n2", r#"{"version": 1, "geometry": {"kind": "torus"}, "bundle": {"n": 2}, "resolution": 32}"#),
    ] {
        o.suite(label, &run_suite("flux", &cfg(json))?, &only);
    }
    Ok(o)
}

fn criterion_3() -> Result<Outcome> {
    let mut o = Outcome::new();
    for (label, json) in [
        ("g2 n1", r#"{"version": 1, "bundle": {"n": 1, "random_sigma": true}, "resolution": 16, "seed": 3}"#),
        ("g2 n3", r#"{"version": 1, "bundle": {"n": 3, "random_sigma": true}, "resolution": 16, "seed": 4}"#),
        ("g3 n2", r#"{"version": 1, "geometry": {"genus": 3}, "bundle": {"n": 2}, "resolution": 12}"#),
        ("torus n3", r#"{"version": 1, "geometry": {"kind": "torus"}, "bundle": {"n": 3, "random_sigma": true}}"#),
    ] {
        let (mesh, conn) = cfg(json).build_problem()?;
        let r = conn.equivariance_residual(&mesh);
        o.check(label, r < 1e-8, format!("equivariance={r:.3e}"));
    }
    Ok(o)
}

fn criterion_4() -> Result<Outcome> {
    let mut o = Outcome::new();
    for (label, json) in [
        (
            "hyperbolic g2 n1",
            r#"{"version": 1, "bundle": {"n": 1, "random_sigma": true}, "resolution": 32, "seed": 1}"#,
        ),
        (
            "torus n1",
            r#"{"version": 1, "geometry": {"kind": "torus"}, "bundle": {"n": 1, "random_sigma": true}, "resolution": 24, "seed": 2}"#,
        ),
    ] {
        let rep = run_suite("weitzenbock", &cfg(json))?;
        let connections = rep.checks.len();
        o.suite(label, &rep, &[]);
        o.check(label, connections >= 2, format!("connections={connections}"));
    }
    Ok(o)
}

fn criterion_5() -> Result<Outcome> {
    let mut o = Outcome::new();
    let c = cfg(&format!(r#"{{"version": 1, {GENUS2_INSTANCE}, "resolution": 24}}"#));
    o.suite("genus-2 instance", &run_suite("spectrum", &c)?, &["lambda1", "kernel_multiplicity"]);
    for n in 1..=3 {
        let c = cfg(&format!(
            r#"{{"version": 1, "geometry": {{"kind": "torus"}}, "bundle": {{"n": {n}, "sigma": [0.15, 0.4]}}, "resolution": 24}}"#
        ));
        let rep = run_suite("spectrum", &c)?;
        let cross = rep.checks.iter().any(|k| k.name == "kernel_multiplicity" && k.expected == Some(n as f64));
        o.suite(&format!("torus n{n}"), &rep, &["lambda1", "kernel_multiplicity"]);
        o.check(&format!("torus n{n}"), cross, "landau_level_count".into());
    }
    Ok(o)
}

fn criterion_6() -> Result<Outcome> {
    let mut o = Outcome::new();
    let only = ["harmonic_dimension", "orthogonality", "harmonic_supercurrent"];
    for (label, json) in [
        ("g1", r#"{"version": 1, "geometry": {"kind": "torus"}, "bundle": {"n": 1}, "resolution": 16}"#),
        ("g2", &format!(r#"{{"version": 1, {GENUS2_INSTANCE}, "resolution": 16}}"#) as &str),
        ("g3", r#"{"version": 1, "geometry": {"genus": 3}, "bundle": {"n": 4}, "resolution": 12}"#),
    ] {
        let rep = run_suite("hodge", &cfg(json))?;
        o.suite(label, &rep, &only);
        let has_supercurrent = rep.checks.iter().any(|c| c.name == "harmonic_supercurrent");
        o.check(label, has_supercurrent, "kernel_section_present".into());
    }
    Ok(o)
}

fn criterion_7() -> Result<Outcome> {
    let mut o = Outcome::new();
    let g2 = cfg(&format!(r#"{{"version": 1, {GENUS2_INSTANCE}, "resolution": 32, "solver": {{"tolerance": 1e-8}}}}"#));
    o.suite("genus-2 n1", &run_suite("branch", &g2)?, &[]);
    let torus = cfg(r#"{"version": 1, "geometry": {"kind": "torus"}, "bundle": {"n": 1, "sigma": [0.15, 0.4]},
            "resolution": 24, "solver": {"tolerance": 1e-8}}"#);
    o.suite("torus n1", &run_suite("branch", &torus)?, &[]);
    Ok(o)
}

fn criterion_8() -> Result<Outcome> {
    let mut o = Outcome::new();
    let c = cfg(r#"{"version": 1, "seed": 8}"#);
    o.suite("theta", &run_suite("theta", &c)?, &[]);
    o.suite("abel", &run_suite("abel", &c)?, &["abel_theorem"]);
    Ok(o)
}

fn criterion_9() -> Result<Outcome> {
    let mut o = Outcome::new();
    for n in [-2, -1, 3, 4] {
        let rejected = degree_certificate(n, 2).is_some_and(|c| c.verdict == Verdict::NotAdmissible);
        o.check(&format!("degree {n}"), rejected, "rule".into());
    }
    let mut c = cfg(r#"{"version": 1, "bundle": {"n": 3}, "classify": {"samples": 50}, "seed": 9}"#);
    let (_, rows, _) = classify(&c)?;
    let rejected = rows.iter().filter(|r| r.certificate.verdict == Verdict::NotAdmissible).count();
    o.check("n3 sweep", rejected == rows.len(), format!("rejected={rejected}/{}", rows.len()));
    c.bundle.n = 1;
    c.classify.samples = 100;
    let (_, _, s) = classify(&c)?;
    o.check("n1 sweep", s.admissible == s.samples, format!("admissible={}/{}", s.admissible, s.samples));
    let rep = run_suite("abel", &cfg(r#"{"version": 1, "seed": 9}"#))?;
    o.suite(
        "sections",
        &rep,
        &["third_kind_residues", "third_kind_a_periods", "ba_character_unitarity", "ba_linear_decay", "ba_vanishing"],
    );
    Ok(o)
}

fn criterion_10() -> Result<Outcome> {
    let mut o = Outcome::new();
    for res in [16, 32] {
        let (mesh, conn) = cfg(&format!(r#"{{"version": 1, "resolution": {res}}}"#)).build_problem()?;
        let g = solve_dolbeault(&conn, &mesh)?;
        let h = mesh.max_edge_length();
        let r = g.ratio_residual(&mesh);
        o.check(&format!("ratio res {res}"), r < 10.0 * h * h, format!("{r:.3e} < {:.3e}", 10.0 * h * h));
    }
    let (mesh, conn) = cfg(r#"{"version": 1, "bundle": {"n": 3}, "resolution": 16}"#).build_problem()?;
    let g = solve_dolbeault(&conn, &mesh)?;
    let sp = assemble_laplacian(&conn, &mesh)?;
    let k = dbar_kernel(&sp, &mesh, kernel_window(sp.h))?;
    let t = kernel_transport(&g, &mesh, &k.sections);
    o.check(
        "kernel transport",
        t.dimension_in > 0 && t.dimension_in == t.dimension_out,
        format!("dim {} -> {} (dbar {:.3e})", t.dimension_in, t.dimension_out, t.max_dbar_residual),
    );
    for (n, genus) in [(1, 2), (2, 3), (0, 2)] {
        let r = ef_bundle_degree_check(n, genus, 16)?;
        let ok = (r.degree_ef - n as f64).abs() < 1e-12
            && r.degree_f.abs() < 1e-12
            && (r.flux_ef - n as f64).abs() < 0.05
            && r.product_residual < 1e-10;
        o.check(
            &format!("E(x)F n{n} g{genus}"),
            ok,
            format!("deg={} degF={} flux={:.4}", r.degree_ef, r.degree_f, r.flux_ef),
        );
    }
    Ok(o)
}

fn read_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut m = BTreeMap::new();
    for e in fs::read_dir(dir).expect("output dir").flatten() {
        m.insert(e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).expect("output file"));
    }
    m
}

fn criterion_11() -> Result<Outcome> {
    let mut o = Outcome::new();
    let tmp = tempfile::tempdir()?;
    let runs = [
        (
            "verify",
            r#"{"version": 1, "bundle": {"n": 1, "random_sigma": true}, "solver": {"trials": 100}, "suite": "cocycle"}"#,
        ),
        (
            "bifurcate",
            r#"{"version": 1, "geometry": {"kind": "torus"}, "bundle": {"n": 1, "sigma": [0.15, 0.4]}, "resolution": 12, "sweep": [0.025, 0.05]}"#,
        ),
        ("classify", r#"{"version": 1, "bundle": {"n": 2}, "classify": {"samples": 20}}"#),
        ("mesh", r#"{"version": 1, "resolution": 8}"#),
        ("spectrum", r#"{"version": 1, "bundle": {"n": 1, "random_sigma": true}, "resolution": 8}"#),
    ];
    for (sub, json) in runs {
        let config = tmp.path().join(format!("{sub}.json"));
        fs::write(&config, json)?;
        let mut outs = Vec::new();
        for k in 0..2 {
            let dir = tmp.path().join(format!("{sub}_{k}"));
            let status = Command::new(env!("CARGO_BIN_EXE_vortexgauge"))
                .args([sub, "--config"])
                .arg(&config)
                .arg("--out")
                .arg(&dir)
                .args(["--seed", "11"])
                .output()?;
            if !status.status.success() {
                o.check(sub, false, String::from_utf8_lossy(&status.stderr).trim().to_string());
            }
            outs.push(read_outputs(&dir));
        }
        let csv = outs[0].keys().filter(|k| k.ends_with(".csv")).count();
        o.check(sub, !outs[0].is_empty() && outs[0] == outs[1], format!("files={} csv={csv}", outs[0].len()));
    }
    Ok(o)
}

fn main() {
    let criteria: [(&str, Criterion); 11] = [
        ("cocycle", criterion_1),
        ("curvature and flux", criterion_2),
        ("equivariance", criterion_3),
        ("weitzenbock", criterion_4),
        ("spectral bound and kernel", criterion_5),
        ("hodge", criterion_6),
        ("bifurcation scaling", criterion_7),
        ("theta and jacobian", criterion_8),
        ("classification", criterion_9),
        ("holomorphization", criterion_10),
        ("determinism", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = match f() {
            Ok(o) => (o.pass, o.detail.join("; ")),
            Err(e) => (false, format!("error {} {e}", e.code())),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {:>2} {name}: {} ({:.1} s) {detail}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
