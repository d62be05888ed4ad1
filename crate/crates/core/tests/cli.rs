use std::path::Path;
use std::process::Command;

use pufocal::model::Snapshot;

fn pufocal(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pufocal"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

const DATA: &str = "synth:n=300,d=3,ratio=0.1,sep=3,overlap=0";

#[test]
fn dry_run_counts_paper_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["bench", "--dry-run"];
    let names: Vec<String> = (0..14).map(|i| format!("d{i}.csv")).collect();
    for n in &names {
        args.extend(["--dataset", n]);
    }
    let out = pufocal(&args);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 840);
    drop(dir);
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, format!("datasets = [\"{DATA}\"]\nrepetitions = 4\nmechanisms = [\"SCAR\"]\nlabeled_ratios = [0.5]\n")).unwrap();
    let out = pufocal(&["bench", "--dry-run", "--config", cfg.to_str().unwrap(), "--repetitions", "2"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 2);

    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let out = pufocal(&["bench", "--dry-run", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn bench_writes_report_and_fails_on_bad_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("report");
    let common = [
        "--mechanism", "SCAR", "--ratio", "0.5", "--repetitions", "1", "--epochs", "2", "--hidden", "8",
        "--batch-size", "32", "--threads", "1",
    ];
    let mut args = vec!["bench", "--dataset", DATA, "-o", out_dir.to_str().unwrap()];
    args.extend(common);
    let out = pufocal(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("summary.md").is_file());

    let mut args = vec!["bench", "--dataset", DATA, "--dataset", "/missing/data.csv"];
    args.extend(common);
    let out = pufocal(&args);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_writes_a_loadable_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("model.bin");
    let out = pufocal(&[
        "train", "--dataset", DATA, "--mechanism", "SAR", "--ratio", "0.5", "--epochs", "3", "--hidden", "8",
        "--batch-size", "32", "--snapshot", snap.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("pr_auc="));
    let s = Snapshot::load(&snap).unwrap();
    assert_eq!(s.params.layer_dims(), vec![3, 8, 8, 8, 8, 1]);
    let mut bytes = Vec::new();
    s.write_to(&mut bytes).unwrap();
    assert_eq!(bytes, std::fs::read(&snap).unwrap());
}

#[test]
fn gradcheck_passes() {
    let out = pufocal(&["gradcheck", "--trials", "20", "--seed", "9"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    let out = pufocal(&["gradcheck", "--dims", "10,64,1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_label_status() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("pu.csv");
    let out = pufocal(&["simulate", "--dataset", DATA, "--mechanism", "SCAR", "--ratio", "0.5", "-o", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    check_simulation(&csv);
}

fn check_simulation(path: &Path) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["x0", "x1", "x2", "label", "labeled"]);
    let (mut labeled, mut positives) = (0, 0);
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let pos = &rec[3] == "1";
        positives += usize::from(pos);
        if &rec[4] == "1" {
            assert!(pos, "only positives are labeled");
            labeled += 1;
        }
    }
    assert_eq!((positives, labeled), (30, 15));
}
