use std::path::Path;
use std::process::{Command, Output};

fn torsion_lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torsion-lab")).current_dir(dir).args(args).output().expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect();
    (headers, rows)
}

#[test]
fn birth_death_census_table_has_seven_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = torsion_lab(dir.path(), &["run", "birth-death", "--A", "1000", "--y", "0", "--output-dir", "bd"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (headers, rows) = read_csv(&dir.path().join("bd/result.csv"));
    assert_eq!(rows.len(), 7);
    let label = headers.iter().position(|h| h == "label").unwrap();
    assert_eq!(rows.iter().filter(|r| r[label] == "bd(3)").count(), 1);
    for name in ["result.json", "manifest.json"] {
        assert!(dir.path().join("bd").join(name).is_file());
    }
}

#[test]
fn cheeger_muller_gap_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = torsion_lab(dir.path(), &["run", "cheeger-muller", "--theta", "3.14159265", "--output-dir", "cm"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (headers, rows) = read_csv(&dir.path().join("cm/result.csv"));
    let gap = headers.iter().position(|h| h == "gap_exact").unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0][gap].parse::<f64>().unwrap() <= 1e-6);
    let comb = headers.iter().position(|h| h == "comb").unwrap();
    assert!((rows[0][comb].parse::<f64>().unwrap() + 2f64.ln()).abs() < 1e-12);
}

#[test]
fn csv_dialect_is_lowercase_lf_and_seventeen_digits() {
    let dir = tempfile::tempdir().unwrap();
    let out = torsion_lab(dir.path(), &["run", "cubic", "--output-dir", "c"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("c/result.csv")).unwrap();
    assert!(!text.contains('\r'));
    let header = text.lines().next().unwrap();
    assert_eq!(header, header.to_lowercase());
    let cell = text.lines().nth(2).unwrap().split(',').nth(2).unwrap();
    let mantissa = cell.split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
}

#[test]
fn malformed_config_exits_two_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&str; 3] = [
        "experiment = \"cubic\"\noutput_dir = \"o1\"\ncubic.bogus = 1\n",
        "experiment = \"cubic\"\noutput_dir = \"o2\"\ncubic.n = \n",
        "experiment = \"suspension\"\noutput_dir = \"o3\"\nsuspension.n = 3\n",
    ];
    for (j, text) in cases.iter().enumerate() {
        let path = dir.path().join(format!("bad{j}.toml"));
        std::fs::write(&path, text).unwrap();
        let out = torsion_lab(dir.path(), &["run", "--config", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "case {j}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!dir.path().join(format!("o{}", j + 1)).exists());
    }
    let out = torsion_lab(dir.path(), &["run", "birth-death", "--r2", "0.08", "--output-dir", "o4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1/14"));
    assert!(!dir.path().join("o4").exists());
}

#[test]
fn numeric_failure_exits_three_with_module_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = torsion_lab(dir.path(), &["run", "anomaly", "--t_max", "0.5", "--output-dir", "a"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("increase t_max"));
    assert!(!dir.path().join("a").exists());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "experiment = \"cubic\"\noutput_dir = \"file\"\n[cubic]\nts = [1, 8]\nk = 3\n").unwrap();
    let out = torsion_lab(dir.path(), &["run", "--config", "c.toml", "--k", "4", "--output-dir", "flag"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("file").exists());
    let (_, rows) = read_csv(&dir.path().join("flag/result.csv"));
    assert_eq!(rows.len(), 2 * 4);
}

#[test]
fn identical_config_and_seed_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    for exp in ["torsion", "witten-glue", "suspension"] {
        let mut bytes = Vec::new();
        for (run, threads) in [("a", "1"), ("b", "1"), ("c", "4")] {
            let out_dir = format!("{exp}-{run}");
            let out = Command::new(env!("CARGO_BIN_EXE_torsion-lab"))
                .current_dir(dir.path())
                .env("TORSION_LAB_THREADS", threads)
                .args(["run", exp, "--seed", "11", "--output-dir", &out_dir])
                .output()
                .unwrap();
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            bytes.push(std::fs::read(dir.path().join(&out_dir).join("result.csv")).unwrap());
        }
        assert!(bytes.windows(2).all(|w| w[0] == w[1]), "{exp}");
    }
    let seeded = |seed: &str, name: &str| {
        torsion_lab(dir.path(), &["run", "torsion", "--seed", seed, "--output-dir", name]);
        std::fs::read(dir.path().join(name).join("result.csv")).unwrap()
    };
    assert_ne!(seeded("1", "s1"), seeded("2", "s2"));
}

#[test]
fn verify_mutation_fails_birth_death_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = torsion_lab(dir.path(), &["verify", "--r2", "0.08"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().any(|l| l.starts_with("FAIL  1 birth-death census")), "{text}");
    assert!(text.lines().any(|l| l.starts_with("PASS  8 cubic-model scaling")), "{text}");
}

#[test]
fn invalid_thread_cap_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_torsion-lab"))
        .current_dir(dir.path())
        .env("TORSION_LAB_THREADS", "zero")
        .args(["run", "cubic"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
