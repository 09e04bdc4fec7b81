use std::path::Path;
use std::process::{Command, Output};

fn swarmbench(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swarmbench"))
        .args(args)
        .env("SWARMBENCH_OUT", out)
        .output()
        .expect("binary runs")
}

fn printed_paths(o: &Output) -> Vec<String> {
    String::from_utf8_lossy(&o.stdout).lines().map(str::to_string).collect()
}

#[test]
fn no_arguments_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let o = swarmbench(dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn unknown_flags_and_values_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(swarmbench(dir.path(), &["run", "--bogus"]).status.code(), Some(2));
    let o = swarmbench(dir.path(), &["run", "--map", "nowhere", "--algo", "pf"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_configuration_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let o = swarmbench(dir.path(), &["run", "--map", "corridor", "--algo", "pf", "--robots", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert!(printed_paths(&o).is_empty());
}

#[test]
fn run_writes_the_trial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "--map", "empty_dense", "--algo", "pbc", "--cutoff", "20", "--telemetry"];
    let o = swarmbench(dir.path(), &args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let paths = printed_paths(&o);
    assert_eq!(paths.len(), 4);
    for p in &paths {
        assert!(Path::new(p).is_file(), "{p}");
    }
    let csv = std::fs::read_to_string(paths.iter().find(|p| p.ends_with(".csv")).unwrap()).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("config_hash,seed,algorithm,map,robots,success"));

    // same inputs, same bytes
    let again = tempfile::tempdir().unwrap();
    let o2 = swarmbench(again.path(), &args);
    for (a, b) in paths.iter().zip(printed_paths(&o2)) {
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }
}

#[test]
fn plot_renders_charts_from_trial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for robots in ["2", "4"] {
        let o = swarmbench(dir.path(), &["run", "--map", "empty_spread", "--algo", "pf", "--robots", robots]);
        assert!(o.status.success());
        csvs.extend(printed_paths(&o).into_iter().filter(|p| p.ends_with(".csv")));
    }
    let mut args = vec!["plot"];
    args.extend(csvs.iter().map(String::as_str));
    let o = swarmbench(dir.path(), &args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svgs = printed_paths(&o);
    // bars for 2 robot counts and one scaling chart, for time and distance
    assert_eq!(svgs.len(), 6);
    for p in svgs {
        assert!(std::fs::read_to_string(p).unwrap().starts_with("<svg"));
    }
}

#[test]
fn maps_list_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let o = swarmbench(dir.path(), &["maps", "list"]);
    assert!(o.status.success());
    let listing = String::from_utf8_lossy(&o.stdout);
    for name in ["empty_spread", "empty_dense", "uniform", "corridor", "concave"] {
        assert!(listing.contains(name));
    }
    let o = swarmbench(dir.path(), &["maps", "export", "corridor", "--grid"]);
    assert!(o.status.success());
    let paths = printed_paths(&o);
    assert_eq!(paths.len(), 2);
    assert!(std::fs::read_to_string(&paths[0]).unwrap().contains("width"));
}
