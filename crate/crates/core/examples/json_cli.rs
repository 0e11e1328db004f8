//! Drives the command-line front end in-process and reads the JSON back.

use std::io::Cursor;

use bures_wasserstein::cli::{run, ResultEnvelope};

fn main() {
    let pair = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/pair.json");
    let ensemble = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/ensemble.json");

    for args in [
        vec!["bures", "dist", pair],
        vec!["bures", "mean", pair],
        vec!["bures", "geodesic", pair, "--t", "0.25"],
        vec!["bures", "barycenter", ensemble, "--tol", "1e-12"],
        vec!["bures", "mc", ensemble, "--samples", "20000", "--seed", "5"],
    ] {
        let out = run(args.clone(), &mut Cursor::new(Vec::new()));
        println!("$ {}  (exit {})", args[1..].join(" "), out.code);
        print!("{}", out.stdout);
        let envelope: ResultEnvelope = serde_json::from_str(&out.stdout).unwrap();
        if let Some(m) = envelope.result_matrix() {
            println!("parsed {}×{} matrix", m.nrows(), m.ncols());
        }
    }

    // input can also come from standard input
    let stdin = br#"{"matrices": [[[1, 0], [0, 4]], [[9, 0], [0, 16]]]}"#;
    let out = run(["bures", "fidelity"], &mut Cursor::new(stdin.to_vec()));
    print!("$ fidelity < stdin\n{}", out.stdout);

    let bad = br#"{"matrices": [[[1, 2], [2, 1]]]}"#;
    let out = run(["bures", "barycenter"], &mut Cursor::new(bad.to_vec()));
    print!("$ barycenter < indefinite (exit {})\n{}", out.code, out.stdout);
}
