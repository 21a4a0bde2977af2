//! State parameter inversion from undrained CPTu readings.
//!
//! Every method shares the form `Q' = k_bar exp(-m_bar psi)`, where `Q'` is a
//! normalized effective tip resistance. They differ in how `Q'` is built from
//! the readings and in how `(k_bar, m_bar)` depend on `lambda` and `M`.
//!
//! | method            | excess pressure ratio            | k_bar                  | m_bar              |
//! |-------------------|----------------------------------|------------------------|--------------------|
//! | `this_work`       | `du1/(qc-p0)` or `beta du2/(qc-p0)` | `c_q (1 + 2M/3)`    | `1/lambda`         |
//! | `plewes`          | `du2/(qc-p0)`                    | `M (3 + 0.37/lambda)`  | `11.9 - 30.62 lambda` |
//! | `pezeshki_ahmadi` | `du2/(qc-sigma_v0)`              | `M (3.3 - 0.035/lambda)` | `6 + 0.1735/lambda` |

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Principal stress angle of a smooth cone, degrees.
pub const RHO_SMOOTH: f64 = 120.0;
/// Angle observed at the tip of a rough cone, degrees.
pub const RHO_ROUGH: f64 = 150.0;
/// Default ratio between face and shoulder excess pore pressure ratios.
pub const BETA_DEFAULT: f64 = 1.2;
/// K0 substituted when a record has none and the policy allows it.
pub const K0_ASSUMED: f64 = 0.7;

/// One depth of a CPTu sounding. Stresses and pressures in kPa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CptuRecord {
    pub depth: f64,
    /// Tip resistance (`q_c` or `q_t`; treated identically).
    #[serde(rename = "qc")]
    pub q_c: f64,
    pub u2: f64,
    pub u1: Option<f64>,
    pub u0: f64,
    pub sigma_v0: f64,
    pub sigma_v0_eff: f64,
    pub k0: Option<f64>,
}

impl CptuRecord {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.depth,
            self.q_c,
            self.u2,
            self.u0,
            self.sigma_v0,
            self.sigma_v0_eff,
        ]
        .iter()
        .chain(self.u1.iter())
        .chain(self.k0.iter())
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Input(format!(
                "non-finite value in record at depth {}",
                self.depth
            )));
        }
        if self.depth < 0.0 {
            return Err(Error::Input(format!("negative depth {}", self.depth)));
        }
        if !(self.sigma_v0 >= self.sigma_v0_eff && self.sigma_v0_eff >= 0.0) {
            return Err(Error::Input(format!(
                "depth {}: need sigma_v0 >= sigma_v0_eff >= 0",
                self.depth
            )));
        }
        if let Some(k0) = self.k0 {
            if k0 <= 0.0 {
                return Err(Error::Input(format!(
                    "depth {}: K0 must be positive",
                    self.depth
                )));
            }
        }
        Ok(())
    }

    fn resolved_k0(&self) -> Result<f64> {
        self.k0.ok_or(Error::MissingK0)
    }
}

/// Mean-stress normalized cone metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizedMetrics {
    pub q_p: f64,
    pub b_q1: Option<f64>,
    pub b_q2: f64,
    pub q_eff_u1: Option<f64>,
    pub q_eff_u2: f64,
    /// Initial mean total stress, kPa.
    pub p0: f64,
    /// Initial mean effective stress, kPa.
    pub p0_eff: f64,
}

pub fn normalized_metrics(rec: &CptuRecord) -> Result<NormalizedMetrics> {
    let k0 = rec.resolved_k0()?;
    let p0_eff = (1.0 + 2.0 * k0) / 3.0 * rec.sigma_v0_eff;
    if !(p0_eff > 0.0) {
        return Err(Error::Input(format!(
            "depth {}: initial mean effective stress is not positive",
            rec.depth
        )));
    }
    let p0 = p0_eff + rec.u0;
    let net = rec.q_c - p0;
    if net == 0.0 {
        return Err(Error::UndefinedBq { p0 });
    }
    let q_p = net / p0_eff;
    let b_q2 = (rec.u2 - rec.u0) / net;
    let b_q1 = rec.u1.map(|u1| (u1 - rec.u0) / net);
    Ok(NormalizedMetrics {
        q_p,
        b_q1,
        b_q2,
        q_eff_u1: b_q1.map(|b| q_p * (1.0 - b) + 1.0),
        q_eff_u2: q_p * (1.0 - b_q2) + 1.0,
        p0,
        p0_eff,
    })
}

fn check_rho(rho_deg: f64) -> Result<()> {
    if (90.0..=180.0).contains(&rho_deg) {
        Ok(())
    } else {
        Err(Error::Input(format!(
            "principal stress angle {rho_deg} deg outside [90, 180]"
        )))
    }
}

/// Ratio between the effective cone tip resistance and the spherical
/// effective cavity limit pressure, for a major principal stress at
/// `rho_deg` from the vertical.
pub fn cq_factor(rho_deg: f64, m: f64) -> Result<f64> {
    check_rho(rho_deg)?;
    let two_rho = 2.0 * rho_deg.to_radians();
    let root3 = 3f64.sqrt();
    Ok((m + 3.0 * m * two_rho.cos() - 3.0 * root3 * m * two_rho.sin() + 6.0) / (4.0 * m + 6.0))
}

/// Cone tip resistance for a homogeneous critical-state stress field
/// around a 60 degree cone (closed form).
pub fn cone_resistance_oracle(p_cs_eff: f64, m: f64, rho_deg: f64, u: f64) -> Result<f64> {
    check_rho(rho_deg)?;
    let two_rho = 2.0 * rho_deg.to_radians();
    let root3 = 3f64.sqrt();
    Ok(p_cs_eff
        + p_cs_eff * m * (1.0 / 6.0 + 0.5 * two_rho.cos() - 0.5 * root3 * two_rho.sin())
        + u)
}

/// Same quantity as [`cone_resistance_oracle`], built from the rotated
/// stress tensor and the traction on the cone face.
pub fn cone_resistance_tensor(p_cs_eff: f64, m: f64, rho_deg: f64, u: f64) -> Result<f64> {
    check_rho(rho_deg)?;
    let (s, c) = rho_deg.to_radians().sin_cos();
    let sigma_1 = p_cs_eff * (1.0 + 2.0 * m / 3.0);
    let sigma_3 = p_cs_eff * (1.0 - m / 3.0);
    // Components ordered (r, z, theta).
    let rot = Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0);
    let principal = Matrix3::from_diagonal(&Vector3::new(sigma_3, sigma_1, sigma_3));
    let total = rot * principal * rot.transpose() + Matrix3::identity() * u;

    // Face of a 60 degree cone: normal at 60 degrees from the vertical.
    let face_angle = 60f64.to_radians();
    let normal = Vector3::new(-face_angle.sin(), face_angle.cos(), 0.0);
    let traction = total * normal;
    Ok(traction[1] / face_angle.cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ThisWork,
    Plewes,
    PezeshkiAhmadi,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::ThisWork, Method::Plewes, Method::PezeshkiAhmadi];

    pub fn name(self) -> &'static str {
        match self {
            Method::ThisWork => "this_work",
            Method::Plewes => "plewes",
            Method::PezeshkiAhmadi => "pezeshki_ahmadi",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InversionParams {
    pub method: Method,
    pub k_bar: f64,
    pub m_bar: f64,
}

impl InversionParams {
    /// `k_bar exp(-m_bar psi)`.
    pub fn forward(&self, psi: f64) -> f64 {
        self.k_bar * (-self.m_bar * psi).exp()
    }
}

/// `(k_bar, m_bar)` of a method. `c_q` only affects `this_work`.
pub fn method_params(method: Method, lambda: f64, m: f64, c_q: f64) -> Result<InversionParams> {
    if !(lambda > 0.0) {
        return Err(Error::Input(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let (k_bar, m_bar) = match method {
        Method::ThisWork => (c_q * (1.0 + 2.0 / 3.0 * m), 1.0 / lambda),
        Method::Plewes => (m * (3.0 + 0.37 / lambda), 11.9 - 30.62 * lambda),
        Method::PezeshkiAhmadi => (m * (3.3 - 0.035 / lambda), 6.0 + 0.1735 / lambda),
    };
    if !(k_bar > 0.0) {
        return Err(Error::NonPositiveKBar { k_bar, lambda });
    }
    if !(m_bar > 0.0) {
        return Err(Error::Domain(format!(
            "{method}: m_bar = {m_bar} is not positive at lambda = {lambda}"
        )));
    }
    Ok(InversionParams {
        method,
        k_bar,
        m_bar,
    })
}

/// `psi = -ln(Q' / k_bar) / m_bar`.
pub fn invert_psi(q_prime: f64, params: &InversionParams) -> Result<f64> {
    if !(q_prime > 0.0) {
        return Err(Error::NonPhysicalResistance { q_prime });
    }
    if !(params.k_bar > 0.0) {
        return Err(Error::NonPositiveKBar {
            k_bar: params.k_bar,
            lambda: f64::NAN,
        });
    }
    Ok(-(q_prime / params.k_bar).ln() / params.m_bar)
}

/// Magnitude of the K0 term, `ln(3 / (1 + 2 K0)) / m_bar`.
///
/// Normalizing by `p'_0` rather than `sigma'_v0` multiplies `Q'` by
/// `3 / (1 + 2 K0)`, so `psi = psi_iso - k0_correction(K0, m_bar)`. The
/// term only depends on K0 and on `lambda` through `m_bar`.
pub fn k0_correction(k0: f64, m_bar: f64) -> f64 {
    (3.0 / (1.0 + 2.0 * k0)).ln() / m_bar
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum K0Policy {
    /// Every record must carry K0.
    #[default]
    Given,
    /// Missing K0 is replaced by 0.7 and the row is annotated.
    #[serde(rename = "assume_0_7")]
    Assume07,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpretConfig {
    pub lambda: f64,
    /// Triaxial CSL slope.
    #[serde(rename = "M")]
    pub m_tc: f64,
    /// Geometric factor; takes precedence over `rho`.
    #[serde(default)]
    pub c_q: Option<f64>,
    /// Principal stress angle at the tip, degrees.
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub k0_policy: K0Policy,
}

fn default_beta() -> f64 {
    BETA_DEFAULT
}

impl InterpretConfig {
    pub fn new(lambda: f64, m_tc: f64) -> Self {
        Self {
            lambda,
            m_tc,
            c_q: None,
            rho: None,
            beta: BETA_DEFAULT,
            k0_policy: K0Policy::Given,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.m_tc > 0.0) {
            return Err(Error::Input("config: lambda and M must be positive".into()));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Input(format!(
                "config: beta must be positive, got {}",
                self.beta
            )));
        }
        let c_q = self.c_q_value()?;
        if !(c_q > 0.0) {
            return Err(Error::Input(format!(
                "config: c_q must be positive, got {c_q}"
            )));
        }
        Ok(())
    }

    /// `c_q` if set, otherwise derived from `rho` (smooth cone by default).
    pub fn c_q_value(&self) -> Result<f64> {
        match self.c_q {
            Some(c) => Ok(c),
            None => cq_factor(self.rho.unwrap_or(RHO_SMOOTH), self.m_tc),
        }
    }

    pub fn params(&self, method: Method) -> Result<InversionParams> {
        method_params(method, self.lambda, self.m_tc, self.c_q_value()?)
    }
}

/// `Q'` as each method defines it.
pub fn effective_resistance_for_method(
    method: Method,
    rec: &CptuRecord,
    cfg: &InterpretConfig,
) -> Result<f64> {
    let nm = normalized_metrics(rec)?;
    Ok(match method {
        Method::ThisWork => match nm.q_eff_u1 {
            Some(q) => q,
            None => nm.q_p * (1.0 - cfg.beta * nm.b_q2) + 1.0,
        },
        Method::Plewes => nm.q_eff_u2,
        Method::PezeshkiAhmadi => {
            let net = rec.q_c - rec.sigma_v0;
            if net == 0.0 {
                return Err(Error::UndefinedBq { p0: rec.sigma_v0 });
            }
            let b_q = (rec.u2 - rec.u0) / net;
            nm.q_p * (1.0 - b_q) + 1.0
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodEstimate {
    pub method: Method,
    pub q_prime: Option<f64>,
    pub psi: Option<f64>,
}

/// One interpreted depth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub depth: f64,
    pub metrics: Option<NormalizedMetrics>,
    pub estimates: Vec<MethodEstimate>,
    /// Annotations such as `k0_assumed` or `plewes:non_physical_resistance`.
    pub flags: Vec<String>,
}

impl ProfileRow {
    pub fn psi(&self, method: Method) -> Option<f64> {
        self.estimates
            .iter()
            .find(|e| e.method == method)
            .and_then(|e| e.psi)
    }
}

fn flag_for(err: &Error) -> &'static str {
    match err {
        Error::NonPhysicalResistance { .. } => "non_physical_resistance",
        Error::UndefinedBq { .. } => "undefined_bq",
        Error::MissingK0 => "missing_k0",
        _ => "invalid_record",
    }
}

/// Applies the selected methods to every record, sorted by depth.
///
/// Failures of individual records are reported as flags on their row.
pub fn interpret_profile(
    records: &[CptuRecord],
    cfg: &InterpretConfig,
    methods: &[Method],
) -> Result<Vec<ProfileRow>> {
    if records.is_empty() {
        return Err(Error::Input("empty sounding".into()));
    }
    if methods.is_empty() {
        return Err(Error::Input("no inversion method selected".into()));
    }
    cfg.validate()?;
    let params = methods
        .iter()
        .map(|&m| cfg.params(m))
        .collect::<Result<Vec<_>>>()?;

    let mut sorted: Vec<CptuRecord> = records.to_vec();
    sorted.sort_by(|a, b| a.depth.total_cmp(&b.depth));

    Ok(sorted
        .iter()
        .map(|raw| {
            let mut flags = Vec::new();
            let mut rec = *raw;
            if rec.k0.is_none() && cfg.k0_policy == K0Policy::Assume07 {
                rec.k0 = Some(K0_ASSUMED);
                flags.push("k0_assumed".to_string());
            }
            let metrics = match normalized_metrics(&rec) {
                Ok(m) => Some(m),
                Err(e) => {
                    flags.push(flag_for(&e).to_string());
                    None
                }
            };
            let estimates = params
                .iter()
                .map(|p| {
                    let mut est = MethodEstimate {
                        method: p.method,
                        q_prime: None,
                        psi: None,
                    };
                    if metrics.is_none() {
                        return est;
                    }
                    let result =
                        effective_resistance_for_method(p.method, &rec, cfg).and_then(|q| {
                            est.q_prime = Some(q);
                            invert_psi(q, p)
                        });
                    match result {
                        Ok(psi) => {
                            if psi < 0.0 {
                                flags.push(format!("{}:dilatant_extrapolation", p.method));
                            }
                            est.psi = Some(psi);
                        }
                        Err(e) => flags.push(format!("{}:{}", p.method, flag_for(&e))),
                    }
                    est
                })
                .collect();
            ProfileRow {
                depth: rec.depth,
                metrics,
                estimates,
                flags,
            }
        })
        .collect())
}

/// Reads a sounding with header `depth,qc,u2,u1,u0,sigma_v0,sigma_v0_eff,k0`.
pub fn read_sounding<R: Read>(reader: R) -> Result<Vec<CptuRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    const EXPECTED: [&str; 8] = [
        "depth",
        "qc",
        "u2",
        "u1",
        "u0",
        "sigma_v0",
        "sigma_v0_eff",
        "k0",
    ];
    if headers.iter().ne(EXPECTED.iter().copied()) {
        return Err(Error::Input(format!(
            "sounding header must be '{}', got '{}'",
            EXPECTED.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut records = Vec::new();
    for row in rdr.deserialize() {
        let rec: CptuRecord = row?;
        rec.validate()?;
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::Input("sounding has no records".into()));
    }
    Ok(records)
}

/// Writes `depth,Qp,Bq1,Bq2,Qprime_<method>,psi_<method>,...,flags`.
pub fn write_profile<W: Write>(
    writer: W,
    rows: &[ProfileRow],
    methods: &[Method],
    fmt_num: impl Fn(f64) -> String,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["depth".to_string(), "Qp".into(), "Bq1".into(), "Bq2".into()];
    for m in methods {
        header.push(format!("Qprime_{m}"));
        header.push(format!("psi_{m}"));
    }
    header.push("flags".into());
    w.write_record(&header)?;

    let opt = |v: Option<f64>| v.map(&fmt_num).unwrap_or_default();
    for row in rows {
        let mut rec = vec![
            fmt_num(row.depth),
            opt(row.metrics.map(|m| m.q_p)),
            opt(row.metrics.and_then(|m| m.b_q1)),
            opt(row.metrics.map(|m| m.b_q2)),
        ];
        for &m in methods {
            let est = row.estimates.iter().find(|e| e.method == m);
            rec.push(opt(est.and_then(|e| e.q_prime)));
            rec.push(opt(est.and_then(|e| e.psi)));
        }
        rec.push(row.flags.join(";"));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
