use std::fs::File;
use std::io::{BufReader, Write};

use anyhow::Context;
use psi_core::casm::{
    simulate_undrained_triaxial, PreconsolidationAnchor, StartMode, TriaxialConfig,
};
use psi_core::cavity::{total_limit_pressure, CavityGeometry, CavityInput};
use psi_core::fixtures::{load_fixtures, raw_table, FixtureCptuRow, Fixtures};
use psi_core::inversion::{
    cq_factor, effective_resistance_for_method, interpret_profile, invert_psi, k0_correction,
    method_params, read_sounding, write_profile, CptuRecord, InterpretConfig, Method,
};
use psi_core::material::{initialize_in_situ, state_parameter, CasmMaterial};

use crate::format::{num, opt};
use crate::{
    AnchorArg, CavityArgs, CompareArgs, FigureArg, FiguresArgs, FixturesArgs, GeomArg, InvertArgs,
    TableArg, TriaxialArgs,
};

type Out = Box<dyn Write>;

fn csv_writer(out: Out) -> csv::Writer<Out> {
    csv::Writer::from_writer(out)
}

fn interpret_config(a: &InvertArgs) -> anyhow::Result<InterpretConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            let cfg: InterpretConfig =
                serde_json::from_str(&text)
                    .map_err(psi_core::Error::from)
                    .with_context(|| format!("invalid config {}", path.display()))?;
            cfg
        }
        None => {
            let (Some(lambda), Some(m)) = (a.lambda, a.m_tc) else {
                return Err(psi_core::Error::Input(
                    "either --config or both --lambda and --M are required".into(),
                )
                .into());
            };
            InterpretConfig::new(lambda, m)
        }
    };
    if let Some(v) = a.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = a.m_tc {
        cfg.m_tc = v;
    }
    if a.c_q.is_some() {
        cfg.c_q = a.c_q;
    }
    if a.rho.is_some() {
        cfg.rho = a.rho;
        if a.c_q.is_none() {
            cfg.c_q = None;
        }
    }
    if let Some(v) = a.beta {
        cfg.beta = v;
    }
    if let Some(p) = a.k0_policy {
        cfg.k0_policy = p.into();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn invert(a: &InvertArgs, out: Out) -> anyhow::Result<()> {
    let cfg = interpret_config(a)?;
    let file =
        File::open(&a.input).with_context(|| format!("cannot open {}", a.input.display()))?;
    let records = read_sounding(BufReader::new(file))?;
    let mut methods: Vec<Method> = Vec::new();
    for m in &a.methods {
        let m = Method::from(*m);
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    let rows = interpret_profile(&records, &cfg, &methods)?;
    write_profile(out, &rows, &methods, num)?;
    Ok(())
}

fn load_material(path: &std::path::Path) -> anyhow::Result<CasmMaterial> {
    CasmMaterial::from_json_file(path)
        .with_context(|| format!("cannot load material {}", path.display()))
}

pub fn triaxial(a: &TriaxialArgs, out: Out) -> anyhow::Result<()> {
    let mat = load_material(&a.material)?;
    let init = initialize_in_situ(&mat, a.sigma_v0_eff)?;
    let cfg = TriaxialConfig {
        max_dev_strain: a.max_strain,
        step_dev_strain: a.step,
        start_mode: if a.isotropic {
            StartMode::Isotropic
        } else {
            StartMode::InSituAnisotropic
        },
        pc_anchor: match a.anchor {
            AnchorArg::Csl => PreconsolidationAnchor::CriticalStateLine,
            AnchorArg::Ocr => PreconsolidationAnchor::Given,
        },
        ..TriaxialConfig::default()
    };
    let res = simulate_undrained_triaxial(&mat, &init, &cfg)?;
    let mut w = csv_writer(out);
    w.write_record(["eps_q", "p_eff", "q", "du", "e"])?;
    for p in &res.path {
        w.write_record([
            num(p.eps_q),
            num(p.p_eff),
            num(p.q_dev),
            num(p.excess_pore_pressure),
            num(p.void_ratio),
        ])?;
    }
    w.flush()?;
    eprintln!(
        "su_peak={} su_res={} i_b={} psi_0={}",
        num(res.su_peak),
        num(res.su_res),
        num(res.brittleness),
        num(state_parameter(&res.initial, &mat))
    );
    Ok(())
}

pub fn cavity(a: &CavityArgs, out: Out) -> anyhow::Result<()> {
    let mat = load_material(&a.material)?;
    let init = initialize_in_situ(&mat, a.sigma_v0_eff)?;
    let psi0 = a.psi0.unwrap_or_else(|| state_parameter(&init, &mat));
    let geoms = if a.geoms.is_empty() {
        vec![GeomArg::Spherical, GeomArg::Cylindrical]
    } else {
        a.geoms.clone()
    };
    let input = CavityInput::for_material(&mat, init.p_eff, psi0, a.u0);
    let mut w = csv_writer(out);
    w.write_record([
        "geometry",
        "p0_eff",
        "psi_0",
        "sigma_c",
        "sigma_c_eff",
        "u_c",
        "Qp_bar",
        "Bq_bar",
        "Qeff_bar",
    ])?;
    for g in geoms {
        let (name, geom) = match g {
            GeomArg::Spherical => ("spherical", CavityGeometry::Spherical),
            GeomArg::Cylindrical => ("cylindrical", CavityGeometry::Cylindrical),
        };
        let r = total_limit_pressure(&input, &mat, geom)?;
        w.write_record([
            name.to_string(),
            num(input.p_eff_0),
            num(psi0),
            num(r.sigma_c),
            num(r.sigma_c_eff),
            num(r.u_c),
            num(r.q_bar_p),
            num(r.b_bar_q),
            num(r.q_eff_bar),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn fixtures(a: &FixturesArgs, mut out: Out) -> anyhow::Result<()> {
    let name = match a.table {
        TableArg::Materials => "materials",
        TableArg::Results => "results",
        TableArg::Series => "series",
        TableArg::Manifest => "manifest",
    };
    out.write_all(raw_table(name)?.as_bytes())?;
    out.flush()?;
    Ok(())
}

/// ψ estimated by `method` for a fixture row, `None` when not resolvable.
fn fixture_psi(
    fx: &Fixtures,
    row: &FixtureCptuRow,
    method: Method,
    c_q: f64,
    beta_only: bool,
) -> anyhow::Result<Option<f64>> {
    let mut rec: CptuRecord = fx.synthetic_record(row)?;
    if beta_only {
        rec.u1 = None;
    }
    let cfg = fx.interpret_config(row, c_q)?;
    let params = cfg.params(method)?;
    Ok(effective_resistance_for_method(method, &rec, &cfg)
        .and_then(|q| invert_psi(q, &params))
        .ok())
}

const FIG_M: f64 = 1.4;
const FIG_CQ: f64 = 1.35;

fn steps(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| lo + (hi - lo) * i as f64 / n as f64)
}

pub fn figures(a: &FiguresArgs, out: Out) -> anyhow::Result<()> {
    let mut w = csv_writer(out);
    match a.which {
        FigureArg::Cq => {
            let ms = [0.5, 0.98, 1.33, 1.4];
            let mut header = vec!["rho".to_string()];
            header.extend(ms.iter().map(|m| format!("c_q_M{m}")));
            w.write_record(&header)?;
            for rho in steps(90.0, 180.0, 90) {
                let mut rec = vec![num(rho)];
                for m in ms {
                    rec.push(num(cq_factor(rho, m)?));
                }
                w.write_record(&rec)?;
            }
        }
        FigureArg::KbarMbar => {
            let mut header = vec!["lambda".to_string()];
            for m in Method::ALL {
                header.push(format!("k_bar_{m}"));
                header.push(format!("m_bar_{m}"));
            }
            w.write_record(&header)?;
            for lambda in steps(0.02, 0.25, 46) {
                let mut rec = vec![num(lambda)];
                for m in Method::ALL {
                    let p = method_params(m, lambda, FIG_M, FIG_CQ)?;
                    rec.push(num(p.k_bar));
                    rec.push(num(p.m_bar));
                }
                w.write_record(&rec)?;
            }
        }
        FigureArg::Roundtrip => {
            let fx = load_fixtures()?;
            let mut header = vec!["series".to_string(), "material".into(), "psi_0".into()];
            header.extend(Method::ALL.iter().map(|m| format!("psi_{m}")));
            w.write_record(&header)?;
            for row in &fx.cptu {
                let mut rec = vec![row.series.clone(), row.material.clone(), num(row.psi_0)];
                for m in Method::ALL {
                    rec.push(opt(fixture_psi(&fx, row, m, a.c_q, false)?));
                }
                w.write_record(&rec)?;
            }
        }
        FigureArg::K0 => {
            w.write_record(["k0", "lambda", "delta_psi"])?;
            for lambda in [0.02, 0.054, 0.1, 0.15, 0.2, 0.25] {
                for k0 in steps(0.4, 1.0, 12) {
                    w.write_record([num(k0), num(lambda), num(k0_correction(k0, 1.0 / lambda))])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn compare(a: &CompareArgs, out: Out) -> anyhow::Result<()> {
    let fx = load_fixtures()?;
    let rows: Vec<&FixtureCptuRow> = if a.all {
        fx.cptu.iter().collect()
    } else {
        fx.smooth_rows().collect()
    };
    let mut w = csv_writer(out);
    w.write_record([
        "method",
        "rows",
        "unresolved",
        "mae",
        "mean_error",
        "max_abs_error",
    ])?;
    for m in Method::ALL {
        let mut errs = Vec::new();
        let mut unresolved = 0usize;
        for row in &rows {
            match fixture_psi(&fx, row, m, a.c_q, a.beta_only)? {
                Some(psi) => errs.push(psi - row.psi_0),
                None => unresolved += 1,
            }
        }
        let n = errs.len() as f64;
        let mae = errs.iter().map(|e| e.abs()).sum::<f64>() / n;
        let bias = errs.iter().sum::<f64>() / n;
        let max = errs.iter().map(|e| e.abs()).fold(0.0, f64::max);
        w.write_record([
            m.to_string(),
            errs.len().to_string(),
            unresolved.to_string(),
            num(mae),
            num(bias),
            num(max),
        ])?;
    }
    w.flush()?;
    Ok(())
}
