//! Bundled reference data: the five reference materials with their element
//! test results, and the steady-state cone and cavity metrics of six
//! simulation series.
//!
//! The CSV sources live in `data/` and are compiled into the library. Each
//! is checked against a SHA-256 digest on load.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::inversion::{CptuRecord, InterpretConfig};
use crate::material::CasmMaterial;

const MATERIALS_CSV: &str = include_str!("../data/materials.csv");
const RESULTS_CSV: &str = include_str!("../data/results.csv");
const SERIES_CSV: &str = include_str!("../data/series.csv");
const MANIFEST_CSV: &str = include_str!("../data/manifest.csv");

const MATERIALS_SHA256: &str = "61b58616ae85996d69fd45451df578207cd04a2e64f8d75d712d64f476661327";
const RESULTS_SHA256: &str = "6433a09e62441ba56abdc51ec84667387cf98fac713f72206d77deae281edcbd";
const SERIES_SHA256: &str = "869519a1319f130d412522382fe8ee8868a9540f7bda2090c1e1035502123bf8";
const MANIFEST_SHA256: &str = "66a0b9a4d2afad30c3907e24b118e79aded2977e9e49f633f40048d33b84ce88";

/// Parameters shared by every reference material.
pub fn base_material() -> CasmMaterial {
    CasmMaterial {
        lambda: 0.054,
        kappa: 0.016,
        nu: 0.33,
        phi_cs: 25.0,
        n_shape: 10.0,
        r_spacing: 12.0,
        m_flow: 2.5,
        gamma_c: 0.908,
        e_ref: 1.0,
        p_ref: 100.0,
        ocr: 1.1,
        k0: 0.6,
    }
}

/// Vertical effective stress at which every series was initialized, kPa.
pub const SIGMA_V0_EFF: f64 = 100.0;

/// One reference material with its undrained triaxial results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureMaterialRow {
    pub material: String,
    #[serde(rename = "n")]
    pub n_shape: f64,
    #[serde(rename = "r")]
    pub r_spacing: f64,
    pub gamma_c: f64,
    pub psi_0: f64,
    pub su_peak: f64,
    pub su_res: f64,
    pub i_b: f64,
}

impl FixtureMaterialRow {
    pub fn to_material(&self) -> CasmMaterial {
        CasmMaterial {
            n_shape: self.n_shape,
            r_spacing: self.r_spacing,
            gamma_c: self.gamma_c,
            ..base_material()
        }
    }
}

/// One row of the simulation series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureCptuRow {
    pub series: String,
    pub material: String,
    pub psi_0: f64,
    pub su_peak: f64,
    pub su_res: f64,
    pub q_p: f64,
    pub b_q1: f64,
    pub b_q2: f64,
    pub q_eff_u1: f64,
    pub q_eff_u2: f64,
    pub q_eff_beta: f64,
    pub cav_sph: f64,
    pub cav_cyl: f64,
}

/// Parameter overrides of a simulation series relative to the reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub series: String,
    pub label: String,
    pub lambda: Option<f64>,
    pub kappa: Option<f64>,
    pub phi_cs: Option<f64>,
    pub nu: Option<f64>,
    pub k0: Option<f64>,
    /// False for the rough-cone series.
    pub smooth: bool,
    pub note: String,
}

impl SeriesSpec {
    pub fn apply(&self, base: &CasmMaterial) -> CasmMaterial {
        CasmMaterial {
            lambda: self.lambda.unwrap_or(base.lambda),
            kappa: self.kappa.unwrap_or(base.kappa),
            phi_cs: self.phi_cs.unwrap_or(base.phi_cs),
            nu: self.nu.unwrap_or(base.nu),
            k0: self.k0.unwrap_or(base.k0),
            ..*base
        }
    }
}

/// All bundled tables, validated.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixtures {
    pub materials: Vec<FixtureMaterialRow>,
    pub cptu: Vec<FixtureCptuRow>,
    pub series: Vec<SeriesSpec>,
}

impl Fixtures {
    pub fn material_row(&self, material: &str) -> Option<&FixtureMaterialRow> {
        self.materials.iter().find(|m| m.material == material)
    }

    pub fn series_spec(&self, series: &str) -> Option<&SeriesSpec> {
        self.series.iter().find(|s| s.series == series)
    }

    pub fn cptu_row(&self, series: &str, material: &str) -> Option<&FixtureCptuRow> {
        self.cptu
            .iter()
            .find(|r| r.series == series && r.material == material)
    }

    /// Constitutive parameters of `material` within `series`.
    ///
    /// Only the overrides named by the series label are applied; the CSL
    /// intercept stays at its reference value.
    pub fn series_material(&self, series: &str, material: &str) -> Result<CasmMaterial> {
        let spec = self
            .series_spec(series)
            .ok_or_else(|| Error::Input(format!("unknown fixture series '{series}'")))?;
        let row = self
            .material_row(material)
            .ok_or_else(|| Error::Input(format!("unknown fixture material '{material}'")))?;
        Ok(spec.apply(&row.to_material()))
    }

    /// A sounding record reproducing the metrics of `row` at the bundled
    /// initial state: `sigma'_v0 = 100` kPa, no hydrostatic pressure and the
    /// series K0.
    pub fn synthetic_record(&self, row: &FixtureCptuRow) -> Result<CptuRecord> {
        let k0 = self.series_material(&row.series, &row.material)?.k0;
        let p0 = (1.0 + 2.0 * k0) / 3.0 * SIGMA_V0_EFF;
        let net = row.q_p * p0;
        Ok(CptuRecord {
            depth: 0.0,
            q_c: p0 + net,
            u2: row.b_q2 * net,
            u1: Some(row.b_q1 * net),
            u0: 0.0,
            sigma_v0: SIGMA_V0_EFF,
            sigma_v0_eff: SIGMA_V0_EFF,
            k0: Some(k0),
        })
    }

    /// Inversion settings matching the series material, for a cone with
    /// geometric factor `c_q`.
    pub fn interpret_config(&self, row: &FixtureCptuRow, c_q: f64) -> Result<InterpretConfig> {
        let mat = self.series_material(&row.series, &row.material)?;
        Ok(InterpretConfig {
            c_q: Some(c_q),
            ..InterpretConfig::new(mat.lambda, mat.m_tc())
        })
    }

    /// Rows of the smooth-cone series.
    pub fn smooth_rows(&self) -> impl Iterator<Item = &FixtureCptuRow> {
        self.cptu.iter().filter(|r| {
            self.series_spec(&r.series)
                .map(|s| s.smooth)
                .unwrap_or(false)
        })
    }
}

fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn verify(name: &str, data: &str, expected: &str) -> Result<()> {
    let actual = sha256_hex(data.as_bytes());
    if actual != expected {
        return Err(Error::Integrity(format!(
            "{name}: sha256 {actual} does not match {expected}"
        )));
    }
    Ok(())
}

fn parse<T: for<'de> Deserialize<'de>>(data: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(data.as_bytes())
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Raw CSV text of a bundled table: `materials`, `results`, `series` or `manifest`.
pub fn raw_table(name: &str) -> Result<&'static str> {
    let (data, sha) = match name {
        "materials" => (MATERIALS_CSV, MATERIALS_SHA256),
        "results" => (RESULTS_CSV, RESULTS_SHA256),
        "series" => (SERIES_CSV, SERIES_SHA256),
        "manifest" => (MANIFEST_CSV, MANIFEST_SHA256),
        _ => return Err(Error::Input(format!("unknown fixture table '{name}'"))),
    };
    verify(name, data, sha)?;
    Ok(data)
}

fn load_from(materials: &str, results: &str, series: &str) -> Result<Fixtures> {
    let fx = Fixtures {
        materials: parse(materials)?,
        cptu: parse(results)?,
        series: parse(series)?,
    };
    if fx.materials.len() != 5 || fx.cptu.len() != 30 || fx.series.len() != 6 {
        return Err(Error::Integrity(format!(
            "unexpected row counts: {} materials, {} cptu rows, {} series",
            fx.materials.len(),
            fx.cptu.len(),
            fx.series.len()
        )));
    }
    for row in &fx.cptu {
        if fx.material_row(&row.material).is_none() || fx.series_spec(&row.series).is_none() {
            return Err(Error::Integrity(format!(
                "row ({}, {}) refers to an unknown series or material",
                row.series, row.material
            )));
        }
    }
    Ok(fx)
}

/// Loads and verifies the bundled tables.
pub fn load_fixtures() -> Result<Fixtures> {
    load_from(
        raw_table("materials")?,
        raw_table("results")?,
        raw_table("series")?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversion::BETA_DEFAULT;

    #[test]
    fn counts_and_examples() {
        let fx = load_fixtures().unwrap();
        assert_eq!(fx.materials.len(), 5);
        assert_eq!(fx.cptu.len(), 30);
        let a = fx.cptu_row("reference", "A").unwrap();
        assert_eq!((a.q_p, a.b_q1, a.b_q2), (1.93, 1.37, 1.15));
        let e = fx.cptu_row("poisson", "E").unwrap();
        assert_eq!((e.q_p, e.b_q2), (4.31, 0.73));
        assert_eq!(fx.smooth_rows().count(), 25);
        assert!(raw_table("manifest").unwrap().starts_with("file,"));
    }

    #[test]
    fn corrupted_data_is_rejected() {
        let tampered = MATERIALS_CSV.replace("0.908", "0.909");
        assert!(matches!(
            verify("materials", &tampered, MATERIALS_SHA256),
            Err(Error::Integrity(_))
        ));
        let short: String = RESULTS_CSV.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(matches!(
            load_from(MATERIALS_CSV, &short, SERIES_CSV),
            Err(Error::Integrity(_))
        ));
        assert!(raw_table("table").is_err());
    }

    #[test]
    fn brittleness_column_is_consistent() {
        for m in &load_fixtures().unwrap().materials {
            let ib = 1.0 - m.su_res / m.su_peak;
            assert!(
                (ib - m.i_b).abs() <= 0.002,
                "{}: {ib} vs {}",
                m.material,
                m.i_b
            );
        }
    }

    /// Propagated rounding of the printed two-decimal inputs: each of Q_p
    /// and B_q carries up to 0.005, plus 0.005 on the printed result.
    fn rounding_bound(q_p: f64, b: f64, scale: f64) -> f64 {
        0.005 * ((1.0 - scale * b).abs() + scale * q_p) + 0.005 + 1e-9
    }

    #[test]
    fn effective_resistance_columns_are_consistent() {
        for r in &load_fixtures().unwrap().cptu {
            let cases = [
                (r.b_q1, 1.0, r.q_eff_u1),
                (r.b_q2, 1.0, r.q_eff_u2),
                (r.b_q2, BETA_DEFAULT, r.q_eff_beta),
            ];
            for (b, scale, printed) in cases {
                let value = r.q_p * (1.0 - scale * b) + 1.0;
                let bound = rounding_bound(r.q_p, b, scale);
                assert!(
                    (value - printed).abs() <= bound,
                    "({}, {}): {value} vs {printed}, bound {bound}",
                    r.series,
                    r.material
                );
            }
        }
    }

    #[test]
    fn series_overrides() {
        let fx = load_fixtures().unwrap();
        let m = fx.series_material("friction", "C").unwrap();
        assert_eq!((m.phi_cs, m.k0, m.n_shape), (33.0, 0.47, 9.0));
        let m = fx.series_material("plastic_ratio", "A").unwrap();
        assert_eq!((m.lambda, m.kappa), (0.106, 0.016));
        let m = fx.series_material("lambda", "E").unwrap();
        assert_eq!((m.lambda, m.kappa, m.r_spacing), (0.106, 0.032, 2.0));
        assert_eq!(fx.series_material("poisson", "B").unwrap().nu, 0.2);
        assert_eq!(
            fx.series_material("rough", "D").unwrap(),
            fx.series_material("reference", "D").unwrap()
        );
        assert!(!fx.series_spec("rough").unwrap().smooth);
        assert!(fx.series_material("nope", "A").is_err());
        assert!(fx.series_material("reference", "F").is_err());
        for r in &fx.cptu {
            fx.series_material(&r.series, &r.material)
                .unwrap()
                .validate()
                .unwrap();
        }
    }

    #[test]
    fn materials_match_reference_series() {
        let fx = load_fixtures().unwrap();
        for m in &fx.materials {
            let r = fx.cptu_row("reference", &m.material).unwrap();
            assert_eq!((r.su_peak, r.su_res), (m.su_peak, m.su_res));
            assert!((r.psi_0 - m.psi_0).abs() < 0.001);
        }
    }
}
