use std::process::{Command, Output};

fn cpgcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpgcl"))
        .args(args)
        .current_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/../.."))
        .env_remove("CPGCL_EXAMPLES")
        .output()
        .unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = cpgcl(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn analyze_examples() {
    assert_eq!(stdout(&["analyze", "examples/p_obs1.cpgcl", "--post", "x"]), "1\n");
    assert_eq!(
        stdout(&["analyze", "examples/example2.cpgcl", "--post", "10 + x"]),
        "135/13 (≈10.3846)\n"
    );
    let table = stdout(&[
        "analyze", "examples/abort_coin.cpgcl", "--post", "[y=0]", "--table", "--format", "tsv",
    ]);
    assert_eq!(table.lines().nth(1), Some("2/7\t6/7\t2/3\t2"));
    let nondet = stdout(&["analyze", "example1", "--q", "1/2", "--post", "x"]);
    assert!(nondet.contains("minimum: Undefined"), "{nondet}");
    let sub = stdout(&["analyze", "context_min.rmdp", "--root", "2", "--format", "tsv"]);
    assert_eq!(sub.lines().last(), Some("min (s0=left)\t2"));
}

#[test]
fn bounds_narrow_to_the_closed_form() {
    let out = stdout(&[
        "bounds", "crowds", "--p", "1/2", "--c", "1/2", "--state", "k=2", "--post",
        "[intercepted=0]", "--tol", "1e-6", "--format", "tsv",
    ]);
    let last: Vec<&str> = out.lines().last().unwrap().split('\t').collect();
    let lo = cpgcl::parse_rational(last[2]).unwrap();
    let hi = cpgcl::parse_rational(last[3]).unwrap();
    let want = cpgcl::Rational::new(5.into(), 12.into());
    assert!(lo <= want && want <= hi);
    let finite = stdout(&["bounds", "p_obs2", "--post", "x"]);
    assert_eq!(finite.lines().count(), 1);
    let small = cpgcl(&[
        "bounds", "crowds", "--p", "1/2", "--c", "1/2", "--k", "2", "--post", "[intercepted=0]",
        "--max-states", "40",
    ]);
    assert!(small.status.success());
    assert!(String::from_utf8_lossy(&small.stderr).contains("frontier"));
}

#[test]
fn transformations() {
    let h = stdout(&["transform", "hoist", "examples/example2.cpgcl", "--simplify"]);
    assert!(h.contains("[8/13]") && h.contains("h = 13/20"), "{h}");
    let d = stdout(&["transform", "deobserve", "example3_pre", "--p", "1/3"]);
    assert!(d.contains("while (__rerun = 1)"), "{d}");
    let out = cpgcl(&["transform", "deloop", "crowds", "--p", "1/2", "--c", "1/2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`counter`"));
    assert!(out.stdout.is_empty());
}

#[test]
fn model_export() {
    let dot = stdout(&["model", "examples/example1.cpgcl", "--q", "1/2", "--dot"]);
    assert!(dot.starts_with("digraph"));
    let explicit = stdout(&["model", "context_min"]);
    assert!(explicit.contains("states 8 initial 0"));
    assert_eq!(dot, stdout(&["model", "examples/example1.cpgcl", "--q", "1/2", "--dot"]));
}

#[test]
fn sweep_grid() {
    let out = stdout(&[
        "sweep", "crowds", "--p", "0.6,0.8", "--c", "0.1", "--k", "1..3", "--post",
        "[intercepted=0]", "--format", "tsv",
    ]);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[0].starts_with("3/5\t1/10\t1\t"));
    assert!(rows[5].starts_with("4/5\t1/10\t3\t"));
    let empty = stdout(&["sweep", "crowds", "--p", "", "--c", "0.1", "--k", "1"]);
    assert_eq!(empty.lines().count(), 1);
}

#[test]
fn check_and_json() {
    let out = stdout(&["check", "--property", "correspondence", "--n", "20", "--seed", "3"]);
    assert!(out.starts_with("correspondence: pass"), "{out}");
    let j = stdout(&["analyze", "p_obs1", "--post", "x", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&j).unwrap();
    assert_eq!(v["rows"][0]["value"]["value"], "1");
}

#[test]
fn errors_exit_non_zero() {
    for args in [
        &["analyze", "example1", "--post", "x"][..],
        &["analyze", "nope.cpgcl"],
        &["analyze", "p_obs1", "--post", "x +"],
        &["check", "--property", "bogus"],
    ] {
        let out = cpgcl(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    }
}

#[test]
fn syntax_errors_carry_locations() {
    let dir = std::env::temp_dir().join(format!("cpgcl-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("bad.cpgcl");
    std::fs::write(&file, "x := 1;\ny := ;\n").unwrap();
    let out = cpgcl(&["analyze", file.to_str().unwrap()]);
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("bad.cpgcl:2:"), "{err}");
    let env = Command::new(env!("CARGO_BIN_EXE_cpgcl"))
        .args(["analyze", "bad", "--post", "x"])
        .env("CPGCL_EXAMPLES", &dir)
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&env.stderr).contains("bad.cpgcl:2:"));
    std::fs::remove_dir_all(&dir).unwrap();
}
