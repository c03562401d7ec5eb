//! Drives the command-line entry point in-process: construct, scan, verify.
//!
//! ```text
//! cargo run --example cli_pipeline
//! ```

fn run(args: &[&str]) -> i32 {
    let code = popdiff::cli::run(std::iter::once("popdiff").chain(args.iter().copied()));
    println!("popdiff {} -> exit {code}", args.join(" "));
    code
}

fn main() {
    let dir = std::env::temp_dir().join(format!("popdiff-example-{}", std::process::id()));
    let out = |sub: &str| dir.join(sub).to_string_lossy().into_owned();
    let (prod, scan) = (out("product"), out("scan"));

    run(&["construct", "product", "--factors", "7", "--seed", "1", "--out", &prod]);
    let f = format!("{prod}/function.json");
    run(&["scan", &f, "--out", &scan]);
    run(&["verify", &f]);
    run(&["construct", "behrend", "--n", "27"]);
    run(&["scan", "/nonexistent.json"]);

    let summary = std::fs::read_to_string(format!("{scan}/summary.json")).expect("scan summary");
    println!("{summary}");
    let _ = std::fs::remove_dir_all(&dir);
}
