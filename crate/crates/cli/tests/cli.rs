use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 11
players = ["uniform-random", "material-greedy", "center-control"]

[synthetic]
games_per_policy = 10
max_plies = 20

[policy.arch]
hidden = [32, 16]

[policy.pretrain]
epochs = 1

[policy.finetune]
epochs = 1

[autoencoder]
hidden = [64, 32]
latent = 16
epochs = 2

[mcts]
simulations = 8

[metric]
bootstrap_resamples = 5
"#;

fn stylebench(dir: &Path, args: &[&str]) -> Output {
    let data = dir.join("pgn");
    let out = dir.join("out");
    Command::new(env!("CARGO_BIN_EXE_stylebench"))
        .args(args)
        .arg("--data")
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = stylebench(dir, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    stylebench(dir, args).status.code().unwrap()
}

fn small_config(dir: &Path) -> String {
    let p = dir.join("small.toml");
    std::fs::write(&p, SMALL).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    assert_eq!(code(dir.path(), &["no-such-command"]), 1);
    assert_eq!(code(dir.path(), &["-c", &cfg, "--set", "nosuch.key=1", "ingest"]), 1);
    assert_eq!(code(dir.path(), &["-c", "/nonexistent/config.toml", "ingest"]), 3);
    assert_eq!(code(dir.path(), &["-c", &cfg, "ingest"]), 3);
    assert_eq!(code(dir.path(), &["-c", &cfg, "pretrain"]), 3);
    assert_eq!(code(dir.path(), &["-c", &cfg, "search", "--fen", "not a fen"]), 2);
    assert_eq!(code(dir.path(), &["ingest"]), 1, "no players configured");
}

#[test]
fn staged_pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = small_config(d);
    let c = |cmd: &'static str| vec!["-c", cfg.as_str(), cmd];

    assert!(ok(d, &c("synth")).contains("wrote 30 games"));
    let ingest = ok(d, &c("ingest"));
    assert_eq!(ingest.lines().filter(|l| l.contains("train pairs")).count(), 3);
    ok(d, &c("pretrain"));
    ok(d, &c("finetune"));

    let start = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";
    let search = ok(d, &["-c", &cfg, "--set", "mcts.simulations=30", "search", "--fen", start, "--player", "center-control"]);
    let visits: u32 = search
        .lines()
        .filter(|l| !l.starts_with("best"))
        .map(|l| l.split('\t').nth(1).unwrap().parse::<u32>().unwrap())
        .sum();
    assert_eq!(visits, 30);
    assert!(search.lines().last().unwrap().starts_with("best "));

    ok(d, &c("train-ae"));
    ok(d, &c("fit-projector"));
    let acc = ok(d, &c("eval-accuracy"));
    assert!(acc.starts_with("player"), "{acc}");
    ok(d, &c("jsd-matrix"));
    ok(d, &c("align"));

    let reports = d.join("out").join("reports");
    for name in ["divergence.csv", "accuracy.csv", "accuracy.json", "alignment.json", "grid.json"] {
        assert!(reports.join(name).is_file(), "{name}");
    }
    assert!(d.join("out").join("manifest.json").is_file());
}

#[test]
fn report_is_reproducible() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        let cfg = small_config(d);
        ok(d, &["-c", &cfg, "synth"]);
        ok(d, &["-c", &cfg, "--samples", "2", "report"]);
        let r = d.join("out").join("reports");
        ["divergence.csv", "accuracy.csv"].map(|n| std::fs::read_to_string(r.join(n)).unwrap())
    };
    assert_eq!(run(), run());
}
