// Drive the `ldp-ab` command in-process.

use ldp_abtest::cli::run;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let argv = [
        "ldp-ab",
        "power",
        "--theta",
        "0.1",
        "--epsilon",
        "1",
        "--m",
        "1",
        "--alpha",
        "0.05",
        "--beta",
        "0.2",
    ];
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(argv, &mut std::io::empty(), &mut out, &mut err);
    print!("{}", String::from_utf8(out)?);
    assert_eq!(code, 0);

    let mut counters = "value\n3\n1\n4\n1\n5\n".as_bytes();
    let mut out = Vec::new();
    let code = run(
        [
            "ldp-ab",
            "randomize",
            "--epsilon",
            "2",
            "--m",
            "5",
            "--seed",
            "9",
        ],
        &mut counters,
        &mut out,
        &mut err,
    );
    print!("{}", String::from_utf8(out)?);
    assert_eq!(code, 0);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
