use pked::config::ExperimentConfig;
use pked::output::{load_table, load_tables};
use std::fs;
use std::path::{Path, PathBuf};

const CONFIGS: [&str; 5] = [
    "kind = quench\nn = 5, 6\nn_a = 2\nt_points = 10\nem_repeats = 3\nsaturation_points = 2\n",
    "kind = eigenstates\nn = 6\nn_a = 2\ncount = 8\nem_repeats = 3\n",
    "kind = pairwise\nn = 6\nn_a = 2\nenergy_cut = -0.5\ncut_width = 0.2\nbin_width = 0.1\n",
    "kind = models\nn = 6\nn_a = 2\nsector_n_a = 3\ns_a = -0.5\ns_b = 0.5\nt_points = 6\nem_repeats = 3\nsaturation_points = 2\ncount = 6\n",
    "kind = theory\ntheory_samples = 2000\ntheory_states = 4\n",
];

fn run(body: &str, out: &Path, threads: usize) -> Vec<PathBuf> {
    let mut cfg = ExperimentConfig::parse_str(body).unwrap();
    cfg.out = out.to_path_buf();
    cfg.threads = Some(threads);
    let mut t = pked::run(&cfg).unwrap().tables;
    t.sort();
    t
}

#[test]
fn tables_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    for body in CONFIGS {
        let one = run(body, &dir.path().join("t1"), 1);
        let three = run(body, &dir.path().join("t3"), 3);
        assert_eq!(one.len(), three.len());
        for (a, b) in one.iter().zip(&three) {
            assert_eq!(a.file_name(), b.file_name());
            let (x, y) = (fs::read(a).unwrap(), fs::read(b).unwrap());
            assert!(x == y, "{} differs between thread counts", a.display());
            assert!(load_table(a).is_ok());
        }
    }
}

#[test]
fn mixed_configurations_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let body = CONFIGS[1];
    let a = run(body, &dir.path().join("a"), 1);
    let b = run(&format!("{body}seed = 9\n"), &dir.path().join("b"), 1);
    assert!(load_tables(&a).is_ok());
    assert!(load_tables(&[a[0].clone(), b[0].clone()]).is_err());

    let text_a = fs::read_to_string(&a[0]).unwrap();
    let text_b = fs::read_to_string(&b[0]).unwrap();
    let mut lines: Vec<&str> = text_a.lines().take(3).collect();
    lines.extend(text_b.lines().skip(1).take(2));
    let mixed = dir.path().join("mixed.csv");
    fs::write(&mixed, lines.join("\n") + "\n").unwrap();
    assert!(load_table(&mixed).is_err());
}

#[test]
fn identical_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(CONFIGS[0], &dir.path().join("a"), 2);
    let b = run(CONFIGS[0], &dir.path().join("b"), 2);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
}
