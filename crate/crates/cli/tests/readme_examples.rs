//! Runs every command in the README's worked-examples block.

use std::process::Command;

const START: &str = "<!-- worked-examples:start -->";
const END: &str = "<!-- worked-examples:end -->";

#[test]
fn readme_worked_examples_run() {
    let readme = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../README.md")).unwrap();
    let block = &readme[readme.find(START).expect("start marker") + START.len()..readme.find(END).expect("end marker")];
    let commands: Vec<&str> = block.lines().map(str::trim).filter(|l| l.starts_with("lapnet ")).collect();
    assert!(commands.len() >= 15, "only {} examples found", commands.len());
    for line in commands {
        let args: Vec<&str> = line.split_whitespace().skip(1).collect();
        let out = Command::new(env!("CARGO_BIN_EXE_lapnet")).args(&args).output().unwrap();
        assert!(out.status.success(), "`{line}` failed: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stdout.is_empty(), "`{line}` wrote nothing");
    }
}
