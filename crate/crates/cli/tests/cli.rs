use std::path::Path;
use std::process::{Command, Output};

use psi_core::fixtures::load_fixtures;
use tempfile::TempDir;

const MATERIAL_A: &str = r#"{"lambda":0.054,"kappa":0.016,"nu":0.33,"phi_cs":25,"n_shape":10,
"r_spacing":12,"m_flow":2.5,"gamma_c":0.908,"e_ref":1,"p_ref":100,"ocr":1.1,"k0":0.6}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cptu-psi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

/// Column `name` of a CSV as strings.
fn column(csv_text: &str, name: &str) -> Vec<String> {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let idx = rdr
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == name)
        .unwrap();
    rdr.records().map(|r| r.unwrap()[idx].to_string()).collect()
}

fn reference_sounding() -> (String, Vec<f64>) {
    let fx = load_fixtures().unwrap();
    let mut text = String::from("depth,qc,u2,u1,u0,sigma_v0,sigma_v0_eff,k0\n");
    let mut psi = Vec::new();
    for (i, row) in fx
        .cptu
        .iter()
        .filter(|r| r.series == "reference")
        .enumerate()
    {
        let r = fx.synthetic_record(row).unwrap();
        text.push_str(&format!(
            "{},{},{},,{},{},{},{}\n",
            i + 1,
            r.q_c,
            r.u2,
            r.u0,
            r.sigma_v0,
            r.sigma_v0_eff,
            r.k0.unwrap()
        ));
        psi.push(row.psi_0);
    }
    (text, psi)
}

#[test]
fn help_on_every_subcommand() {
    for cmd in [
        "invert", "triaxial", "cavity", "fixtures", "figures", "compare",
    ] {
        let o = run(&[cmd, "--help"]);
        assert!(o.status.success(), "{cmd}");
        assert!(stdout(&o).contains("Usage"));
    }
}

#[test]
fn invert_recovers_reference_series() {
    let dir = TempDir::new().unwrap();
    let (text, psi0) = reference_sounding();
    let input = write(&dir, "s.csv", &text);
    let o = run(&[
        "invert", &input, "--lambda", "0.054", "--M", "0.98379", "--c-q", "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("depth,Qp,Bq1,Bq2,Qprime_this_work,psi_this_work,flags\n"));
    let psi: Vec<f64> = column(&out, "psi_this_work")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(psi.len(), 5);
    for (est, exp) in psi.iter().zip(&psi0) {
        assert!((est - exp).abs() <= 0.02, "{est} vs {exp}");
    }
}

#[test]
fn invert_config_file_and_flagged_rows() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "s.csv",
        "depth,qc,u2,u1,u0,sigma_v0,sigma_v0_eff,k0\n2,214.86,400,,0,100,100,\n1,214.86,162.76,,0,100,100,0.6\n",
    );
    let config = write(
        &dir,
        "c.json",
        r#"{"lambda":0.054,"M":0.98379,"k0_policy":"assume_0_7"}"#,
    );
    let o = run(&["invert", &input, "--config", &config, "--method", "plewes"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(column(&out, "depth"), ["1", "2"]);
    let flags = column(&out, "flags");
    assert_eq!(flags[0], "");
    assert_eq!(flags[1], "k0_assumed;plewes:non_physical_resistance");
    assert_eq!(column(&out, "psi_plewes")[1], "");
}

#[test]
fn invert_exit_codes() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "e.csv", "");
    assert_eq!(
        run(&["invert", &empty, "--lambda", "0.054", "--M", "1"])
            .status
            .code(),
        Some(1)
    );
    let header_only = write(
        &dir,
        "h.csv",
        "depth,qc,u2,u1,u0,sigma_v0,sigma_v0_eff,k0\n",
    );
    assert_eq!(
        run(&["invert", &header_only, "--lambda", "0.054", "--M", "1"])
            .status
            .code(),
        Some(1)
    );
    let (text, _) = reference_sounding();
    let ok = write(&dir, "s.csv", &text);
    assert_eq!(run(&["invert", &ok]).status.code(), Some(1));
    let missing = dir.path().join("nope.csv");
    assert_eq!(
        run(&[
            "invert",
            missing.to_str().unwrap(),
            "--lambda",
            "0.05",
            "--M",
            "1"
        ])
        .status
        .code(),
        Some(1)
    );
    let o = run(&[
        "invert",
        &ok,
        "--lambda",
        "0.01",
        "--M",
        "1",
        "--method",
        "pezeshki_ahmadi",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
}

#[test]
fn triaxial_path_and_summary() {
    let dir = TempDir::new().unwrap();
    let mat = write(&dir, "a.json", MATERIAL_A);
    let o = run(&["triaxial", "--material", &mat, "--step", "1e-3"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("eps_q,p_eff,q,du,e\n"));
    assert_eq!(out.lines().count(), 502);
    let summary = String::from_utf8(o.stderr).unwrap();
    let su_res: f64 = summary
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix("su_res="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((su_res - 6.78).abs() <= 0.07 * 6.78, "{summary}");

    let bad = write(&dir, "b.json", r#"{"lambda":0.054}"#);
    assert_eq!(
        run(&["triaxial", "--material", &bad]).status.code(),
        Some(1)
    );
}

#[test]
fn cavity_columns() {
    let dir = TempDir::new().unwrap();
    let mat = write(&dir, "a.json", MATERIAL_A);
    let o = run(&["cavity", "--material", &mat, "--psi0", "0.0887"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(column(&out, "geometry"), ["spherical", "cylindrical"]);
    let q: Vec<f64> = column(&out, "Qeff_bar")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert!(
        (q[0] - 0.31).abs() <= 0.015 && (q[1] - 0.27).abs() <= 0.015,
        "{q:?}"
    );

    let o = run(&[
        "cavity",
        "--material",
        &mat,
        "--geom",
        "cylindrical",
        "--u0",
        "50",
    ]);
    assert_eq!(column(&stdout(&o), "geometry"), ["cylindrical"]);
}

#[test]
fn fixtures_dump() {
    let out = stdout(&run(&["fixtures", "results"]));
    assert_eq!(out.lines().count(), 31);
    assert_eq!(
        out.lines().nth(1).unwrap(),
        "reference,A,0.0887,26.12,6.78,1.93,1.37,1.15,0.29,0.71,0.27,0.31,0.27"
    );
    assert_eq!(stdout(&run(&["fixtures", "materials"])).lines().count(), 6);
    assert_eq!(run(&["fixtures", "nope"]).status.code(), Some(1));
}

#[test]
fn figures_examples() {
    let cq = stdout(&run(&["figures", "cq"]));
    let row = cq.lines().find(|l| l.starts_with("120,")).unwrap();
    assert!(row.split(',').skip(1).all(|v| v == "1"), "{row}");

    let km = stdout(&run(&["figures", "kbar_mbar"]));
    let lambdas = column(&km, "lambda");
    assert_eq!(lambdas.first().unwrap(), "0.02");
    assert_eq!(lambdas.last().unwrap(), "0.25");
    let i = lambdas.iter().position(|l| l == "0.1").unwrap();
    assert_eq!(column(&km, "m_bar_plewes")[i], "8.838");

    let k0 = stdout(&run(&["figures", "k0"]));
    assert!(k0.lines().any(|l| l == "0.7,0.054,0.0120498"));

    let rt = stdout(&run(&["figures", "roundtrip"]));
    assert_eq!(rt.lines().count(), 31);

    assert_eq!(run(&["figures", "nope"]).status.code(), Some(1));
}

#[test]
fn compare_summary() {
    let out = stdout(&run(&["compare"]));
    assert_eq!(
        column(&out, "method"),
        ["this_work", "plewes", "pezeshki_ahmadi"]
    );
    let mae: Vec<f64> = column(&out, "mae")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert!(mae[0] < mae[2] && mae[2] < mae[1], "{mae:?}");
    assert_eq!(column(&out, "rows"), ["25", "25", "24"]);
    let all = stdout(&run(&["compare", "--all"]));
    assert_eq!(column(&all, "rows")[0], "30");
}

#[test]
fn deterministic_and_input_untouched() {
    let dir = TempDir::new().unwrap();
    let (text, _) = reference_sounding();
    let input = write(&dir, "s.csv", &text);
    let out1 = dir.path().join("o1.csv");
    let out2 = dir.path().join("o2.csv");
    for out in [&out1, &out2] {
        let o = run(&[
            "invert",
            &input,
            "--lambda",
            "0.054",
            "--M",
            "0.98",
            "--method",
            "this_work",
            "--method",
            "plewes",
            "--method",
            "pezeshki_ahmadi",
            "-o",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
    }
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&out1), read(&out2));
    assert_eq!(std::fs::read_to_string(&input).unwrap(), text);
}
