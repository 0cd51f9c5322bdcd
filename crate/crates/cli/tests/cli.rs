use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const B_STAR: &[u8] = b"jabcdefmrhabcdegkcdefnshabcp";
const COUNTER: &str = " ZER WA\n ICV WA\n OUT WA\n HLT\n";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_macroforge"));
    c.env_remove("MACROFORGE_BUDGET");
    c
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn macroforge")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn put(dir: &TempDir, name: &str, bytes: impl AsRef<[u8]>) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, bytes).unwrap();
    p
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn program(dir: &TempDir) -> PathBuf {
    let o = run(bin().args(["gen", "--seed", "11", "--instructions", "120"]));
    assert_eq!(code(&o), 0);
    put(dir, "prog.s", o.stdout)
}

fn assemble(dir: &TempDir, src: &Path) -> PathBuf {
    let out = dir.path().join("prog.o");
    let o = run(bin().arg("asm").arg(src).arg("-o").arg(&out));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn asm_emits_empty_macro_table() {
    let dir = TempDir::new().unwrap();
    let src = put(&dir, "c.s", " ZER WA\n ICV WA\n HLT\n");
    let obj = assemble(&dir, &src);
    let bytes = fs::read(obj).unwrap();
    assert_eq!(&bytes[..4], b"MCRL");
    assert_eq!(bytes.last(), Some(&0), "macro count");
}

#[test]
fn asm_listing() {
    let dir = TempDir::new().unwrap();
    let src = put(&dir, "c.s", "TOP   ZER WA\n      ICV WA\n      BNE WA, =0003, TOP\n      OUT WA\n      HLT\n");
    let out = dir.path().join("c.o");
    let o = run(bin().arg("asm").arg(&src).arg("-o").arg(&out).arg("--list"));
    assert_eq!(code(&o), 0);
    let listing = stdout(&o);
    let lines: Vec<&str> = listing.lines().collect();
    assert_eq!(lines.len(), 5, "{listing}");
    assert!(lines[0].starts_with("TOP   0100  44 00"), "{listing}");
    assert!(lines[2].contains("BNE WA, =0003, TOP"), "{listing}");
    assert!(lines[4].ends_with("HLT"), "{listing}");
}

#[test]
fn missing_input_is_a_usage_error() {
    let o = run(bin().args(["asm", "/nonexistent/x.s", "-o", "/tmp/never.o"]));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));
}

#[test]
fn malformed_source_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let src = put(&dir, "bad.s", " FROB WA\n");
    let o = run(bin().arg("asm").arg(&src).arg("-o").arg(dir.path().join("bad.o")));
    assert_eq!(code(&o), 2);
}

#[test]
fn pack_reaches_known_objectives() {
    let dir = TempDir::new().unwrap();
    let input = put(&dir, "b.bin", B_STAR);
    let out = dir.path().join("b.mcrl");
    for (mode, v, expected) in [("greedy", "1", 25), ("exact", "2", 24), ("brute", "2", 24)] {
        let o = run(bin()
            .arg("pack")
            .arg(&input)
            .arg("-o")
            .arg(&out)
            .args(["--mode", mode, "--max-macros", v, "--max-len", "5"]));
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let r = json(&o);
        assert_eq!(r["objective"], expected, "{mode}");
        assert_eq!(r["inputBytes"], 28);
        assert_eq!(r["mode"], mode);
    }
}

#[test]
fn pack_unpack_round_trip() {
    let dir = TempDir::new().unwrap();
    let data: Vec<u8> = B_STAR.iter().copied().cycle().take(700).collect();
    let input = put(&dir, "in.bin", &data);
    let packed = dir.path().join("in.mcrl");
    let report = dir.path().join("report.json");
    let o = run(bin().arg("pack").arg(&input).arg("-o").arg(&packed).arg("--report").arg(&report));
    assert_eq!(code(&o), 0);
    assert!(fs::metadata(&packed).unwrap().len() < data.len() as u64);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(report).unwrap()).unwrap();
    assert!(r["savingsBytes"].as_i64().unwrap() > 0);

    let restored = dir.path().join("out.bin");
    let o = run(bin().arg("unpack").arg(&packed).arg("-o").arg(&restored));
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(restored).unwrap(), data);
}

#[test]
fn run_prints_trace() {
    let dir = TempDir::new().unwrap();
    let obj = assemble(&dir, &put(&dir, "c.s", COUNTER));
    let o = run(bin().arg("run").arg(&obj));
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "1\n");
}

#[test]
fn run_rejects_zero_fuel() {
    let dir = TempDir::new().unwrap();
    let obj = assemble(&dir, &put(&dir, "c.s", COUNTER));
    let o = run(bin().arg("run").arg(&obj).args(["--fuel", "0"]));
    assert_eq!(code(&o), 2);
}

#[test]
fn runtime_faults_exit_three() {
    let dir = TempDir::new().unwrap();
    let obj = assemble(&dir, &put(&dir, "f.s", " MOV (XS)+, WA\n HLT\n"));
    let o = run(bin().arg("run").arg(&obj));
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("fault"));

    let obj = assemble(&dir, &put(&dir, "l.s", "TOP   BRN TOP\n"));
    let o = run(bin().arg("run").arg(&obj).args(["--fuel", "50"]));
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("out of fuel"));
}

#[test]
fn verify_passes_and_catches_corruption() {
    let dir = TempDir::new().unwrap();
    let src = program(&dir);
    let o = run(bin().arg("verify").arg(&src));
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).starts_with("pass"));

    let o = run(bin().arg("verify").arg(&src).arg("--corrupt-table"));
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("fail"));
}

#[test]
fn compact_preserves_behaviour() {
    let dir = TempDir::new().unwrap();
    let src = program(&dir);
    let plain = assemble(&dir, &src);
    let compacted = dir.path().join("c.o");
    let o = run(bin().arg("compact").arg(&src).arg("-o").arg(&compacted));
    assert_eq!(code(&o), 0);
    assert!(json(&o)["macroCount"].as_u64().unwrap() > 0);
    assert!(fs::metadata(&compacted).unwrap().len() < fs::metadata(&plain).unwrap().len());
    let a = run(bin().arg("run").arg(&plain));
    let b = run(bin().arg("run").arg(&compacted));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn compact_without_macros_matches_asm() {
    let dir = TempDir::new().unwrap();
    let src = program(&dir);
    let plain = assemble(&dir, &src);
    let compacted = dir.path().join("c.o");
    let o = run(bin().arg("compact").arg(&src).arg("-o").arg(&compacted).args(["--max-macros", "0"]));
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(plain).unwrap(), fs::read(compacted).unwrap());
}

#[test]
fn compact_rejects_object_input() {
    let dir = TempDir::new().unwrap();
    let obj = assemble(&dir, &put(&dir, "c.s", COUNTER));
    let o = run(bin().arg("compact").arg(&obj).arg("-o").arg(dir.path().join("x.o")));
    assert_eq!(code(&o), 2);
}

#[test]
fn compact_rejects_too_many_macros() {
    let dir = TempDir::new().unwrap();
    let src = put(&dir, "c.s", COUNTER);
    let o = run(bin().arg("compact").arg(&src).arg("-o").arg(dir.path().join("x.o")).args(["--max-macros", "177"]));
    assert_eq!(code(&o), 2);
}

#[test]
fn exact_search_respects_budget() {
    let dir = TempDir::new().unwrap();
    let src = program(&dir);
    let o = run(bin()
        .env("MACROFORGE_BUDGET", "1")
        .arg("compact")
        .arg(&src)
        .arg("-o")
        .arg(dir.path().join("x.o"))
        .args(["--mode", "exact"]));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));

    let o = run(bin().env("MACROFORGE_BUDGET", "lots").arg("stats").arg(&src));
    assert_eq!(code(&o), 2);
}

#[test]
fn disasm_marks_macro_lines() {
    let dir = TempDir::new().unwrap();
    let src = program(&dir);
    let compacted = dir.path().join("c.o");
    assert_eq!(code(&run(bin().arg("compact").arg(&src).arg("-o").arg(&compacted))), 0);
    let o = run(bin().arg("disasm").arg(&compacted));
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("***"));
    assert!(text.contains("MACRO TABLE"));
}

#[test]
fn stats_reports_every_field() {
    let dir = TempDir::new().unwrap();
    let src = program(&dir);
    for mode in ["greedy", "freq"] {
        let r = json(&run(bin().arg("stats").arg(&src).args(["--mode", mode])));
        for key in ["inputBytes", "macroCount", "tableBytes", "residualBytes", "objective", "savingsBytes", "savingsPercent", "mode", "elapsed"] {
            assert!(r.get(key).is_some(), "{mode}: {key}");
        }
        assert_eq!(
            r["objective"].as_u64().unwrap(),
            r["tableBytes"].as_u64().unwrap() + r["residualBytes"].as_u64().unwrap()
        );
    }
    let raw = json(&run(bin().arg("stats").arg(&src).arg("--raw")));
    assert_eq!(raw["inputBytes"].as_u64().unwrap(), fs::metadata(&src).unwrap().len());
}

#[test]
fn gen_is_seeded() {
    let a = run(bin().args(["gen", "--seed", "5"]));
    let b = run(bin().args(["gen", "--seed", "5"]));
    let c = run(bin().args(["gen", "--seed", "6"]));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}
