use fblab_core::commands::{exit_code, run};
use fblab_core::config::{parse_config, Command};
use fblab_core::Error;
use proptest::prelude::*;

const SOLVE: &str =
    "command = \"solve-ks\"\n[time]\nintervals = 16\nratio = 1.2\n[data]\neta_fraction = 0.5\n[solver]\nc_fit = 0.01\n";

#[test]
fn run_record_schema() {
    let cfg = parse_config(SOLVE).unwrap();
    let out = run(&cfg).unwrap();
    assert_eq!(exit_code(&Ok(out.clone())), 0);
    let (name, json) = &out.files[0];
    assert_eq!(name, "solve-ks.json");
    let v: serde_json::Value = serde_json::from_slice(json).unwrap();
    for key in [
        "config",
        "iterate_norms",
        "contraction_rates",
        "final_norms",
        "verdicts",
        "header",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["header"]["config_hash"], cfg.hash());
    assert_eq!(v["header"]["schema_version"], 1);
}

#[test]
fn every_output_carries_hash_and_disclaimer() {
    for text in [
        SOLVE,
        "command = \"decompose\"\n[grid]\nn = 16\n",
        "command = \"verify\"\n[grid]\nn = 16\n[estimate]\nid = \"holder\"\ncalibration = 3\nholdout = 3\n",
    ] {
        let cfg = parse_config(text).unwrap();
        let out = run(&cfg).unwrap();
        for (name, bytes) in &out.files {
            let s = String::from_utf8_lossy(bytes);
            assert!(s.contains(&cfg.hash()), "{name}");
            assert!(s.contains("periodic torus surrogate"), "{name}");
        }
    }
}

#[test]
fn replay_is_byte_identical() {
    let text = "command = \"verify\"\n[grid]\nn = 16\n[estimate]\nid = \"embedding\"\ncalibration = 5\nholdout = 5\n";
    let a = run(&parse_config(text).unwrap()).unwrap();
    let b = run(&parse_config(text).unwrap()).unwrap();
    assert_eq!(a.files, b.files);
}

#[test]
fn estimate_csv_has_one_row_per_trial() {
    let text =
        "command = \"verify\"\n[grid]\nn = 16\n[estimate]\nid = \"bernstein-ii\"\ncalibration = 4\nholdout = 3\n";
    let out = run(&parse_config(text).unwrap()).unwrap();
    let csv = String::from_utf8(out.files[1].1.clone()).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "trial,seed,phase,lhs,rhs,ratio");
    assert_eq!(rows.len(), 1 + 7);
}

#[test]
fn input_errors_map_to_exit_two() {
    let cfg = parse_config("command = \"norm\"\n[data]\nkind = \"snapshot\"\npath = \"/nonexistent.fblb\"\n").unwrap();
    assert_eq!(exit_code(&run(&cfg)), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn unknown_keys_are_all_reported(keys in proptest::collection::btree_set("[a-z]{3,8}_x", 1..6)) {
        let mut text = String::from("command = \"norm\"\n[norm]\n");
        for k in &keys {
            text.push_str(&format!("{k} = 1\n"));
        }
        match parse_config(&text) {
            Err(Error::Config(errs)) => prop_assert_eq!(errs.len(), keys.len()),
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn hash_tracks_content(s in -2.0f64..2.0, n in prop::sample::select(vec![16usize, 32])) {
        let text = format!("command = \"norm\"\n[grid]\nn = {n}\n[norm]\ns = {s:?}\n");
        let a = parse_config(&text).unwrap();
        let b = parse_config(&text).unwrap();
        prop_assert_eq!(a.hash(), b.hash());
        prop_assert_eq!(a.command, Command::Norm);
        let other = parse_config(&format!("command = \"norm\"\n[grid]\nn = {n}\n[norm]\ns = {:?}\n", s + 0.5)).unwrap();
        prop_assert_ne!(a.hash(), other.hash());
    }
}
