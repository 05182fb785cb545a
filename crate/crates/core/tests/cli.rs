use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use cdo_xai::cli::run;

fn invoke(out: &Path, extra: &[&str]) -> i32 {
    let mut args = vec!["cdo-xai".to_string(), "--out-dir".into(), out.display().to_string()];
    args.extend(extra.iter().map(|s| s.to_string()));
    run(args)
}

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn chain(out: &Path) {
    let small = ["rf.n_trees = 15", "gb.n_rounds = 15", "synth.n_flights = 150"].join("\n");
    let cfg = out.with_extension("conf");
    fs::write(&cfg, small).unwrap();
    let c = cfg.to_str().unwrap();
    for stage in ["synth", "ingest", "features", "train", "explain", "fexai", "report"] {
        assert_eq!(invoke(out, &["--config", c, stage]), 0, "stage {stage}");
    }
}

#[test]
fn full_chain_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    chain(&a);
    chain(&b);
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>());
    for (k, v) in &sa {
        assert!(v == &sb[k], "{} differs between runs", k.display());
    }
    for (k, v) in &sa {
        let text = String::from_utf8_lossy(v);
        assert!(
            text.contains("config_hash") && text.contains("42"),
            "{} lacks provenance",
            k.display()
        );
    }
    assert!(sa.keys().any(|k| k.ends_with("report/classification_metrics.csv")));
    assert!(sa.keys().any(|k| k.extension().is_some_and(|e| e == "svg")));
}

#[test]
fn missing_inputs_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    for stage in ["ingest", "features", "train", "explain", "fexai", "report"] {
        assert_eq!(invoke(dir.path(), &[stage]), 2, "stage {stage}");
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(invoke(dir.path(), &["nonsense"]), 1);
    assert_eq!(invoke(dir.path(), &["--seed", "minus", "synth"]), 1);
    assert_eq!(invoke(dir.path(), &["--tma", "1,2", "synth"]), 1);
    assert_eq!(invoke(dir.path(), &["--positive-class", "medium", "train"]), 1);
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "no_such_key = 3\n").unwrap();
    assert_eq!(invoke(dir.path(), &["--config", cfg.to_str().unwrap(), "synth"]), 1);
    fs::write(&cfg, "k_folds = 1\n").unwrap();
    assert_eq!(invoke(dir.path(), &["--config", cfg.to_str().unwrap(), "synth"]), 1);
    assert_eq!(invoke(dir.path(), &["--help"]), 0);
}

#[test]
fn rule_mode_synth_with_custom_rules() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("rules.txt");
    fs::write(
        &rules,
        "IF MDRate IS Low AND FltSegments IS Few AND MDirection IS Straight THEN CDOCAT IS Low\n\
         IF MDRate IS High AND FltSegments IS Few AND MDirection IS Straight THEN CDOCAT IS Not Low\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let args = [
        "synth",
        "--mode",
        "rule",
        "--n-flights",
        "40",
        "--rules",
        rules.to_str().unwrap(),
    ];
    assert_eq!(invoke(&out, &args), 0);
    let truth = fs::read_to_string(out.join("synth/truth.csv")).unwrap();
    assert_eq!(truth.lines().filter(|l| l.starts_with("SYN")).count(), 40);
}
