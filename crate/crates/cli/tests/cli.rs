use std::path::Path;
use std::process::{Command, Output};

fn brickscan(args: &[&str]) -> Output {
    brickscan_with(args, &[])
}

fn brickscan_with(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_brickscan"));
    cmd.args(args).env_remove("BRICKSCAN_SEED").env_remove("BRICKSCAN_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_lists_the_subcommands() {
    let out = brickscan(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["gen-wall", "bake", "gen-dataset", "train", "detect", "evaluate", "sweep-neighbors", "all"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(brickscan(&["bake", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(brickscan(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(brickscan(&["gen-wall", "--out", "x", "--role", "side"]).status.code(), Some(2));
}

#[test]
fn missing_inputs_exit_1_and_name_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let obj = tmp.path().join("absent.obj");
    let out = brickscan(&["bake", "--obj", path_str(&obj), "--out", path_str(&tmp.path().join("maps"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains(path_str(&obj)), "{}", stderr(&out));

    let cfg = tmp.path().join("absent.toml");
    let out = brickscan(&["--config", path_str(&cfg), "gen-wall", "--out", path_str(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains(path_str(&cfg)));
}

#[test]
fn malformed_config_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("brickscan.toml");
    std::fs::write(&cfg, "seed = 3\nunknown_key = 1\n").unwrap();
    let out = brickscan(&["--config", path_str(&cfg), "gen-wall", "--out", path_str(&tmp.path().join("w"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unknown_key"), "{}", stderr(&out));
}

#[test]
fn gen_wall_and_bake_write_their_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let pattern = tmp.path().join("small.pattern");
    std::fs::write(&pattern, "H H\n. . . . H\n").unwrap();
    let wall = tmp.path().join("wall");
    let out = brickscan(&["gen-wall", "--pattern", path_str(&pattern), "--out", path_str(&wall)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let annotations = std::fs::read_to_string(wall.join("annotations.json")).unwrap();
    assert!(annotations.contains("brickscan-annotations-v1"));
    assert_eq!(annotations.matches("\"brick_id\"").count(), 3);

    let maps = tmp.path().join("maps");
    let obj = wall.join("wall.obj");
    let out = brickscan(&["bake", "--obj", path_str(&obj), "--out", path_str(&maps), "--rays-per-pixel", "4"]);
    assert!(out.status.success(), "{}", stderr(&out));
    for name in ["maps.json", "height.png", "normal.png", "ao.png", "curvature.png"] {
        assert!(maps.join(name).is_file(), "{name} missing");
    }
}

#[test]
fn seed_flag_beats_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = |name: &str| tmp.path().join(name);
    let pattern = dir("pair.pattern");
    std::fs::write(&pattern, "H H\n").unwrap();
    let annotations = |name: &str| std::fs::read(dir(name).join("annotations.json")).unwrap();
    let run = |name: &str, args: &[&str], env: &[(&str, &str)]| {
        let out = dir(name);
        let mut all = vec!["gen-wall", "--pattern", path_str(&pattern), "--out", path_str(&out)];
        all.extend_from_slice(args);
        assert!(brickscan_with(&all, env).status.success());
    };
    run("flag", &["--seed", "3"], &[]);
    run("both", &["--seed", "3"], &[("BRICKSCAN_SEED", "9")]);
    run("env", &[], &[("BRICKSCAN_SEED", "9")]);
    run("env-again", &[], &[("BRICKSCAN_SEED", "9")]);
    assert_eq!(annotations("flag"), annotations("both"));
    assert_eq!(annotations("env"), annotations("env-again"));
    assert_ne!(annotations("flag"), annotations("env"));
}
