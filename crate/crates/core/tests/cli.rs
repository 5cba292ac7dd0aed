use std::path::Path;
use std::process::{Command, Output};

fn compfv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compfv")).current_dir(dir).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SYNTH: &str = "classes = 2\ndim = 6\nfeatures_per_image = 8\ntrain_per_class = 4\ntest_per_class = 2\nshared_atoms = 4\nclass_atoms = 2\n";

fn synth(dir: &Path) {
    std::fs::write(dir.join("synth.cfg"), SYNTH).unwrap();
    let o = compfv(dir, &["--config", "synth.cfg", "--out", "data", "synth"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&[][..], &["no-such-command"][..], &["synth", "--bogus"][..]] {
        let o = compfv(dir.path(), args);
        assert_eq!(o.status.code(), Some(2));
        let err = stderr(&o);
        assert!(err.starts_with("error kind=usage msg=\""), "{err}");
        assert_eq!(err.lines().count(), 1);
    }
    let o = compfv(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("bench-classify"));
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "# comment\natom = 3\n").unwrap();
    let o = compfv(dir.path(), &["--config", "bad.cfg", "--out", "d.fvcm", "train-dict"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error kind=config") && err.contains("line 2"), "{err}");

    std::fs::write(dir.path().join("missing.cfg"), "features = nowhere/manifest.csv\n").unwrap();
    let o = compfv(dir.path(), &["--config", "missing.cfg", "--out", "d.fvcm", "train-dict"]);
    assert!(stderr(&o).starts_with("error kind=config"));

    let o = compfv(dir.path(), &["--config", "absent.cfg", "synth"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupt_feature_file_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let file = dir.path().join("data/train/train-c0-0000.fvc");
    assert!(file.exists());
    std::fs::write(&file, b"FVC1\x01").unwrap();
    std::fs::write(dir.path().join("dict.cfg"), "features = data/train/manifest.csv\natoms = 4\nk = 2\n").unwrap();
    let o = compfv(dir.path(), &["--config", "dict.cfg", "--out", "d.fvcm", "train-dict"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error kind=format"), "{}", stderr(&o));
}

#[test]
fn paths_resolve_against_the_config_directory() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    std::fs::create_dir(dir.path().join("cfg")).unwrap();
    std::fs::write(dir.path().join("cfg/dict.cfg"), "features = ../data/train/manifest.csv\natoms = 4\nk = 2\niters = 2\n").unwrap();
    let o = compfv(dir.path(), &["--config", "cfg/dict.cfg", "--out", "d.fvcm", "train-dict"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("d.fvcm").exists());
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    std::fs::write(dir.path().join("dict.cfg"), "features = data/train/manifest.csv\natoms = 5\nk = 2\niters = 3\n").unwrap();
    std::fs::write(dir.path().join("enc.cfg"), "features = data/test/manifest.csv\ndictionary = d.fvcm\nk = 2\n").unwrap();
    let mut runs = Vec::new();
    for threads in ["1", "3"] {
        let o = compfv(dir.path(), &["--threads", threads, "--config", "dict.cfg", "--out", "d.fvcm", "train-dict"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let out = format!("sig{threads}");
        let o = compfv(dir.path(), &["--threads", threads, "--config", "enc.cfg", "--out", &out, "encode"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let sig = std::fs::read(dir.path().join(&out).join("test-c1-0001.fvc")).unwrap();
        runs.push((std::fs::read(dir.path().join("d.fvcm")).unwrap(), sig));
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn bench_resolution_writes_csv_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("res.cfg"),
        "dims = 5\ngmm_sizes = 2\nbasis_counts = 3\ntrue_atoms = 2\ntrain_features = 60\ntest_features = 10\nsparsity = 1\ngmm_iters = 3\ndict_iters = 2\n",
    )
    .unwrap();
    let o = compfv(dir.path(), &["--config", "res.cfg", "bench-resolution"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("model_kind,count,dim,mean_distance"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn evaluate_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let steps: [(&str, &str, &str, &str); 5] = [
        ("gmm.cfg", "features = data/train/manifest.csv\ncomponents = 3\niters = 5\n", "g.fvcm", "train-gmm"),
        ("etr.cfg", "encoder = gmmfvc\nfeatures = data/train/manifest.csv\ngmm = g.fvcm\n", "str", "encode"),
        ("ete.cfg", "encoder = gmmfvc\nfeatures = data/test/manifest.csv\ngmm = g.fvcm\n", "ste", "encode"),
        ("cls.cfg", "signatures = str/manifest.csv\nepochs = 5\n", "lin.fvcm", "classify"),
        ("ev.cfg", "model = lin.fvcm\nsignatures = ste/manifest.csv\n", "metrics.csv", "evaluate"),
    ];
    for (name, text, out, cmd) in steps {
        std::fs::write(dir.path().join(name), text).unwrap();
        let o = compfv(dir.path(), &["--config", name, "--out", out, cmd]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
    }
    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("metric,class_id,value\n"));
    assert!(metrics.contains("accuracy"));
}
