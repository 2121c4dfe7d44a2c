use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn peaklab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peaklab"))
        .args(args)
        .env("PEAKLAB_OUT", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_fit_report_and_dump() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("small.txt");
    std::fs::write(&config, "n = 1\ngrid = 16\nk_max = 8\ncenters = 2\npairs = 10\nsites = 10\nname = small\n").unwrap();
    let out = tmp.path().join("runs");

    let run = peaklab(&out, &["run", config.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let dir = PathBuf::from(stdout(&run).trim());
    assert_eq!(dir, out.join("small"));
    let dir_s = dir.to_str().unwrap();

    let fit = peaklab(&out, &["fit", dir_s]);
    assert!(fit.status.success());
    assert!(stdout(&fit).starts_with("fit over k = [3, 5, 8]"));
    assert!(dir.join("fits.json").exists());

    let report = peaklab(&out, &["report", dir_s]);
    let code = report.status.code().unwrap();
    assert!(code == 0 || code == 1, "exit {code}");
    assert!(stdout(&report).contains("spectral_gap"));
    assert!(dir.join("verdict.json").exists());

    let dump = peaklab(&out, &["dump-spectrum", dir_s, "5"]);
    assert!(dump.status.success());
    let text = stdout(&dump);
    assert!(text.starts_with("# k = 5, dim H_k = 3"));
    assert!(text.lines().count() >= 2 + 7);

    let missing = peaklab(&out, &["dump-spectrum", dir_s, "4"]);
    assert_eq!(missing.status.code(), Some(3));
    std::fs::remove_file(dir.join("records/k_0003.json")).unwrap();
    let incomplete = peaklab(&out, &["report", dir_s]);
    assert_eq!(incomplete.status.code(), Some(2));
}

#[test]
fn bad_config_exits_with_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.txt");
    std::fs::write(&config, "epsilon = 3\n").unwrap();
    let o = peaklab(tmp.path(), &["run", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon"));
}
