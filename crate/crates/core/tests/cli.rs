use std::process::{Command, Output};

fn diraclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diraclab"))
        .args(args)
        .env("DIRACLAB_THREADS", "1")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SMALL: &str = r#"{"name":"small","boundary":"dirichlet_analog",
    "potential":{"family":"constant_offdiag","c":[0.3,0]},
    "f":{"family":"random_trig","terms":4},"mu":2,"nu":[2,"inf"],"m_schedule":[2,4],"mesh":{"panels":48}}"#;

#[test]
fn spectrum_lists_the_window() {
    let o = diraclab(&["spectrum", "--m", "2", "--panels", "32", "--potential", r#"{"family":"constant_offdiag","c":[0.3,0]}"#]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,re_lambda,im_lambda,re_lambda0,im_lambda0,abs_diff,multiplicity");
    assert_eq!(lines.count(), 10);
}

#[test]
fn equiconv_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    std::fs::write(&cfg, SMALL).unwrap();
    let o = diraclab(&["equiconv", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("m,nu,norm_diff,admissible,excluded_case\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn sweep_fails_when_a_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("good.json"), SMALL).unwrap();
    let out = dir.path().join("out");
    let o = diraclab(&["sweep", "--dir", dir.path().to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("good.csv").is_file());

    std::fs::write(dir.path().join("bad.json"), "{not json").unwrap();
    let o = diraclab(&["sweep", "--dir", dir.path().to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(out.join("good.csv").is_file() && out.join("index.json").is_file());
}

#[test]
fn green_resnorm_and_expand_run() {
    let o = diraclab(&["green", "--lambda", "0.5,-1", "--grid", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 17);

    let o = diraclab(&["green", "--lambda", "3,0"]);
    assert!(!o.status.success());

    let o = diraclab(&["resnorm", "--mu", "1", "--nu", "inf", "--y", "4,8,16", "--panels", "32"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("y,estimate,fitted_slope\n"));

    let f = r#"{"family":"components","first":{"kind":"trig","sin":[[0,0],[1,0]]},"second":{"kind":"trig","sin":[[0,0],[1,0]]}}"#;
    let o = diraclab(&["expand", "--f", f, "--m", "2,4", "--panels", "32"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 5);
}
