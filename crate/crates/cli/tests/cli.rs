use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use navmap_core::model::read_checkpoint;
use navmap_core::road_graph::LocalNavGraph;

const GRID_OSM: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/data/osm/grid.osm");

fn navmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_navmap"))
        .args(args)
        .env_remove("NAVMAP_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = navmap(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn fails(args: &[&str], code: i32, tag: &str) -> String {
    let out = navmap(args);
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert_eq!(out.status.code(), Some(code), "{args:?}: {err}");
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with(&format!("error[{tag}]: ")), "{err}");
    err
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small dataset and an HD teacher shared by the tests below.
struct Shared {
    _dir: tempfile::TempDir,
    data: PathBuf,
    teacher: PathBuf,
    root: PathBuf,
}

const SMALL: [&str; 8] = ["--d", "8", "--hidden", "16", "--k", "3", "--epochs", "2"];

fn shared() -> &'static Shared {
    static S: OnceLock<Shared> = OnceLock::new();
    S.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let data = root.join("data");
        ok(&["--seed", "7", "--threads", "1", "gen", "--n", "150", "--out", s(&data)]);
        let teacher = root.join("teacher.ckpt");
        let mut args = vec![
            "--seed",
            "1",
            "train",
            "--data",
            s(&data),
            "--map",
            "hd",
            "--out",
            s(&teacher),
        ];
        args.extend(SMALL);
        ok(&args);
        Shared {
            _dir: dir,
            data,
            teacher,
            root,
        }
    })
}

#[test]
fn ingest_grid_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.graph");
    ok(&["ingest", "--osm", GRID_OSM, "--frame", "pittsburgh", "--out", s(&out)]);
    let g = LocalNavGraph::from_text(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!((g.node_count(), g.edge_count()), (40, 78));
    assert_eq!(g.frame().name, "pittsburgh");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("grid.graph.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "ingest");
    assert_eq!(manifest["outputs"][0], s(&out));
}

#[test]
fn ingest_errors_and_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.graph");
    fails(
        &["ingest", "--osm", GRID_OSM, "--frame", "atlantis", "--out", s(&out)],
        2,
        "usage",
    );
    fails(
        &[
            "ingest",
            "--osm",
            "/nonexistent.osm",
            "--frame",
            "miami",
            "--out",
            s(&out),
        ],
        3,
        "io",
    );
    let bad = dir.path().join("bad.osm");
    std::fs::write(&bad, "<osm><node id=\"1\" lat=\"x\" lon=\"2\"/></osm>").unwrap();
    let err = fails(
        &["ingest", "--osm", s(&bad), "--frame", "miami", "--out", s(&out)],
        4,
        "parse",
    );
    assert!(err.contains("bad.osm"), "{err}");
    let empty = dir.path().join("empty.osm");
    std::fs::write(&empty, "<osm version=\"0.6\"></osm>").unwrap();
    ok(&["ingest", "--osm", s(&empty), "--frame", "miami", "--out", s(&out)]);
    let g = LocalNavGraph::from_text(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(g.edge_count(), 0);
}

#[test]
fn gen_is_deterministic_and_handles_zero_scenes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        ok(&["--seed", "7", "--threads", "1", "gen", "--n", "40", "--out", s(d)]);
    }
    for f in ["hd.graph", "nav.graph", "train.jsonl", "val.jsonl", "world.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let z = dir.path().join("z");
    ok(&["gen", "--n", "0", "--out", s(&z)]);
    assert_eq!(std::fs::read(z.join("train.jsonl")).unwrap(), b"");
    assert_eq!(std::fs::read(z.join("val.jsonl")).unwrap(), b"");
    fails(&["gen", "--n", "5", "--lanes-max", "4", "--out", s(&z)], 2, "usage");
    fails(&["gen", "--n", "5", "--val-percent", "101", "--out", s(&z)], 2, "usage");
}

#[test]
fn data_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("env-data");
    let out = Command::new(env!("CARGO_BIN_EXE_navmap"))
        .args(["gen", "--n", "10"])
        .env("NAVMAP_DATA_DIR", &data)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(data.join("train.jsonl").exists());
    fails(&["train", "--map", "none", "--out", "x.ckpt"], 2, "usage");
}

#[test]
fn train_flag_conflicts_are_usage_errors() {
    let sh = shared();
    let out = sh.root.join("conflict.ckpt");
    let t = s(&sh.teacher);
    let data = s(&sh.data);
    fails(
        &["train", "--data", data, "--map", "hd", "--distill", t, "--out", s(&out)],
        2,
        "usage",
    );
    fails(
        &[
            "train",
            "--data",
            data,
            "--map",
            "none",
            "--distill",
            t,
            "--out",
            s(&out),
        ],
        2,
        "usage",
    );
    fails(
        &["train", "--data", data, "--map", "nav", "--beta", "0", "--out", s(&out)],
        2,
        "usage",
    );
    fails(
        &[
            "train",
            "--data",
            data,
            "--map",
            "nav",
            "--variant",
            "shared",
            "--out",
            s(&out),
        ],
        2,
        "usage",
    );
    fails(
        &[
            "train",
            "--data",
            data,
            "--map",
            "nav",
            "--distill",
            t,
            "--d",
            "12",
            "--out",
            s(&out),
        ],
        2,
        "usage",
    );
    fails(
        &["train", "--data", data, "--map", "nav", "--lr=-1", "--out", s(&out)],
        6,
        "config",
    );
    let student_of_student = sh.root.join("nav-as-teacher.ckpt");
    let mut args = vec!["train", "--data", data, "--map", "nav", "--out", s(&student_of_student)];
    args.extend(SMALL);
    ok(&args);
    fails(
        &[
            "train",
            "--data",
            data,
            "--map",
            "nav",
            "--distill",
            s(&student_of_student),
            "--out",
            s(&out),
        ],
        2,
        "usage",
    );
}

#[test]
fn zero_beta_student_matches_plain_nav_and_teacher_is_untouched() {
    let sh = shared();
    let before = std::fs::read(&sh.teacher).unwrap();
    let student = sh.root.join("student-b0.ckpt");
    let plain = sh.root.join("plain.ckpt");
    let rest = ["--hidden", "16", "--k", "3", "--epochs", "2"];
    let mut a = vec!["--seed", "4", "train", "--data", s(&sh.data), "--map", "nav"];
    a.extend([
        "--distill",
        s(&sh.teacher),
        "--variant",
        "matched",
        "--beta",
        "0",
        "--out",
        s(&student),
    ]);
    a.extend(rest);
    ok(&a);
    let mut b = vec![
        "--seed",
        "4",
        "train",
        "--data",
        s(&sh.data),
        "--map",
        "nav",
        "--d",
        "8",
    ];
    b.extend(["--out", s(&plain)]);
    b.extend(rest);
    ok(&b);
    let read = |p: &Path| read_checkpoint(&std::fs::read_to_string(p).unwrap()).unwrap();
    let (st, pl) = (read(&student), read(&plain));
    assert_eq!(st.model, pl.model);
    assert_eq!(st.metadata["role"], "student");
    assert_eq!(st.metadata["d_t"], 8);
    assert_eq!(std::fs::read(&sh.teacher).unwrap(), before);
}

#[test]
fn shared_student_eval_and_report() {
    let sh = shared();
    let student = sh.root.join("student.ckpt");
    let mut a = vec!["--seed", "2", "train", "--data", s(&sh.data), "--map", "nav"];
    a.extend(["--distill", s(&sh.teacher), "--variant", "shared", "--out", s(&student)]);
    a.extend(["--hidden", "16", "--k", "3", "--epochs", "2"]);
    ok(&a);
    let ck = read_checkpoint(&std::fs::read_to_string(&student).unwrap()).unwrap();
    assert_eq!(ck.model.config.d, 12);
    let curve = std::fs::read_to_string(sh.root.join("student.ckpt.loss.csv")).unwrap();
    assert_eq!(curve.lines().count(), 3);

    let ev = sh.root.join("eval-student");
    let out = ok(&["eval", "--ckpt", s(&student), "--data", s(&sh.data), "--out", s(&ev)]);
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("k=1") && table.contains("k=3"), "{table}");
    for f in ["metrics.json", "scenes.csv", "hist.csv", "hist.svg", "manifest.json"] {
        assert!(ev.join(f).exists(), "{f}");
    }
    let metrics = ev.join("metrics.json");
    let row = format!("student={}", s(&metrics));
    let out = ok(&["report", &row, &format!("again={}", s(&metrics))]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("student") && text.contains("again"));
    fails(&["report", "nonsense"], 2, "usage");
    fails(
        &["eval", "--ckpt", s(&student), "--data", s(&sh.data), "--split", "test"],
        2,
        "usage",
    );
}

#[test]
fn config_file_is_overridden_by_flags() {
    let sh = shared();
    let cfg = sh.root.join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 11\n[model]\nd = 8\nh = 16\nk = 2\nmap_source = \"none\"\n[train]\nepochs = 1\n",
    )
    .unwrap();
    let out = sh.root.join("cfg.ckpt");
    ok(&[
        "--config",
        s(&cfg),
        "train",
        "--data",
        s(&sh.data),
        "--epochs",
        "3",
        "--out",
        s(&out),
    ]);
    let curve = std::fs::read_to_string(sh.root.join("cfg.ckpt.loss.csv")).unwrap();
    assert_eq!(curve.lines().count(), 4);
    let ck = read_checkpoint(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(ck.metadata["seed"], 11);
    assert_eq!(ck.model.config.k, 2);
    let bad = sh.root.join("bad.toml");
    std::fs::write(&bad, "[train]\nepoch = 1\n").unwrap();
    fails(
        &["--config", s(&bad), "train", "--data", s(&sh.data), "--out", s(&out)],
        6,
        "config",
    );
}

#[test]
fn query_lists_resampled_segments() {
    let sh = shared();
    let graph = sh.data.join("nav.graph");
    let out = ok(&["query", "--graph", s(&graph), "--x", "0", "--y", "0", "--radius", "40"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("edge_id,src,dst,index,x,y"));
    let g = LocalNavGraph::from_text(&std::fs::read_to_string(&graph).unwrap()).unwrap();
    let expected: usize = g
        .segments_in_radius(navmap_core::geo::LocalPoint::new(0.0, 0.0), 40.0, 2.0)
        .iter()
        .map(|s| s.polyline.len())
        .sum();
    assert!(expected > 0);
    assert_eq!(lines.count(), expected);
    fails(
        &[
            "query",
            "--graph",
            s(&graph),
            "--frame",
            "miami",
            "--x",
            "0",
            "--y",
            "0",
            "--radius",
            "5",
        ],
        2,
        "usage",
    );
    ok(&[
        "query",
        "--graph",
        s(&graph),
        "--frame",
        "pittsburgh",
        "--x",
        "-3.5",
        "--y",
        "0",
        "--radius",
        "5",
    ]);
}
