use diraclab::config::{Exponent, ExperimentConfig};
use diraclab::harness::{
    admissible, emit_report, read_csv_rows, read_structured, run_equiconv, sweep, write_bundle, write_csv_rows,
    ReportFormat, CSV_HEADER,
};
use diraclab::DiracError;

fn small(potential: &str, extra: &str) -> ExperimentConfig {
    let text = format!(
        r#"{{"name":"small","boundary":"dirichlet_analog","potential":{potential},
            "f":{{"family":"components","first":{{"kind":"trig","sin":[[0,0],[1,0]]}},
                  "second":{{"kind":"polynomial","coeffs":[[0,0],[1,0]]}}}},
            "mu":2,"nu":[2,"inf"],"m_schedule":[2,4],"mesh":{{"panels":64}}{extra}}}"#
    );
    ExperimentConfig::from_json(&text).unwrap()
}

const CONSTANT: &str = r#"{"family":"constant_offdiag","c":[0.3,0]}"#;

#[test]
fn admissibility_examples() {
    let inf = f64::INFINITY;
    let excluded = admissible(inf, 1.0, inf).unwrap();
    assert!(!excluded.admissible && excluded.excluded_case);
    assert!(admissible(2.0, 2.0, inf).unwrap().admissible);
    assert!(admissible(2.0, 1.0, 2.0).unwrap().admissible);
    assert!(!admissible(2.0, 1.0, inf).unwrap().admissible);
    assert!(admissible(inf, 1.0, 2.0).unwrap().admissible);
    // 1/3 + 1/1.5 − 0 = 1 sits exactly on the boundary
    assert!(admissible(3.0, 1.5, inf).unwrap().admissible);
    assert!(matches!(admissible(1.0, 2.0, 2.0), Err(DiracError::OutsideTheorem(_))));
    assert!(matches!(admissible(0.5, 2.0, 2.0), Err(DiracError::OutsideTheorem(_))));
}

#[test]
fn zero_potential_gives_zero_difference() {
    let rep = run_equiconv(&small(r#"{"family":"zero"}"#, "")).unwrap();
    assert_eq!(rep.rows.len(), 4);
    for r in &rep.rows {
        assert!(r.norm_diff < 1e-8, "{r:?}");
        assert!(r.admissible);
    }
}

#[test]
fn csv_header_and_round_trips() {
    let rep = run_equiconv(&small(CONSTANT, "")).unwrap();
    let mut buf = Vec::new();
    write_csv_rows(&rep.rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    assert_eq!(CSV_HEADER, "m,nu,norm_diff,admissible,excluded_case");
    assert!(text.lines().any(|l| l.starts_with("4,inf,")));

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let json = dir.path().join("r.json");
    emit_report(&rep, &csv, ReportFormat::Csv).unwrap();
    emit_report(&rep, &json, ReportFormat::Structured).unwrap();
    let back = read_csv_rows(&csv).unwrap();
    let full = read_structured(&json).unwrap();
    assert_eq!(back.len(), rep.rows.len());
    for ((a, b), c) in rep.rows.iter().zip(&back).zip(&full.rows) {
        for other in [b, c] {
            assert_eq!((a.m, a.nu, a.admissible, a.excluded_case), (other.m, other.nu, other.admissible, other.excluded_case));
            assert!((a.norm_diff - other.norm_diff).abs() <= 1e-15 * a.norm_diff.max(1.0));
        }
    }
    assert_eq!(full.config, rep.config);
}

#[test]
fn reports_are_deterministic() {
    let cfg = small(r#"{"family":"trig","entry":"p2","cos":[[0.2,0],[0.1,0.1]]}"#, r#","seed":5"#);
    let render = || {
        let mut buf = Vec::new();
        write_csv_rows(&run_equiconv(&cfg).unwrap().rows, &mut buf).unwrap();
        buf
    };
    assert_eq!(render(), render());
}

#[test]
fn inadmissible_triples_are_computed_and_flagged() {
    let mut cfg = small(CONSTANT, r#","kappa":"inf""#);
    cfg.mu = Exponent(1.0);
    cfg.nu = vec![Exponent::INF];
    let rep = run_equiconv(&cfg).unwrap();
    assert!(rep.rows.iter().all(|r| !r.admissible && r.excluded_case && r.norm_diff.is_finite()));
    assert!(rep.metadata.warnings.iter().any(|w| w.contains("not admissible")));
}

#[test]
fn sweep_isolates_failures() {
    let empty = sweep(Vec::new());
    assert!(empty.reports.is_empty() && empty.errors.is_empty());

    let bad = ExperimentConfig::from_json(r#"{"boundary":"nowhere","potential":{"family":"zero"}}"#);
    let mut unbuildable = small(CONSTANT, "");
    unbuildable.boundary = diraclab::config::BoundarySpec::Preset("nowhere".into());
    let bundle = sweep(vec![
        ("a".into(), Ok(small(CONSTANT, ""))),
        ("b".into(), bad),
        ("c".into(), Ok(small(r#"{"family":"zero"}"#, ""))),
        ("d".into(), Ok(unbuildable)),
    ]);
    assert_eq!(bundle.reports.len(), 2);
    assert_eq!(bundle.errors.len(), 2);

    let dir = tempfile::tempdir().unwrap();
    let index = write_bundle(&bundle, dir.path()).unwrap();
    assert_eq!(index.reports.len(), 2);
    for name in ["a.csv", "a.json", "c.csv", "c.json", "index.json"] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
    assert!(!dir.path().join("b.csv").exists());
}

#[test]
fn invalid_configs_are_rejected() {
    let base = r#""boundary":"dirichlet_analog","potential":{"family":"zero"},"f":{"family":"random_trig","terms":3}"#;
    for extra in [
        r#""mu":0.5"#,
        r#""mu":2,"nu":[]"#,
        r#""mu":2,"m_schedule":[4,2]"#,
        r#""mu":2,"kappa":0.5"#,
    ] {
        let text = format!("{{{base},{extra}}}");
        assert!(ExperimentConfig::from_json(&text).is_err(), "{extra}");
    }
    assert!(ExperimentConfig::from_json(&format!(r#"{{{base},"mu":"inf","nu":[1,"inf"]}}"#)).is_ok());
}
