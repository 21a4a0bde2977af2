//! Closed-form undrained limit pressures for spherical and cylindrical
//! cavities in CASM.
//!
//! The effective limit pressure needs only the CSL:
//! `sigma'_c = (1 + alpha M_alpha) p'_0 exp(-psi_0 / lambda)`. The total
//! limit pressure additionally depends on stiffness and on the yield surface
//! shape through the auxiliary terms `A3` and `A4`.

use serde::{Deserialize, Serialize};

use crate::casm::elastic_moduli;
use crate::error::{Error, Result};
use crate::material::{CasmMaterial, LoadingGeometry};

/// Default truncation tolerance of the dilogarithm series.
pub const DILOG_TOL: f64 = 1e-12;
/// Hard cap on the number of series terms.
pub const DILOG_MAX_TERMS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CavityGeometry {
    Spherical,
    Cylindrical,
}

impl CavityGeometry {
    /// 2 for a sphere, 1 for a cylinder.
    pub fn m_d(self) -> f64 {
        match self {
            CavityGeometry::Spherical => 2.0,
            CavityGeometry::Cylindrical => 1.0,
        }
    }

    /// `m_d / (m_d + 1)`: 2/3 or 1/2.
    pub fn alpha(self) -> f64 {
        let md = self.m_d();
        md / (md + 1.0)
    }

    /// Spherical cavities use the triaxial CSL slope, cylindrical ones the
    /// plane-strain slope.
    pub fn loading(self) -> LoadingGeometry {
        match self {
            CavityGeometry::Spherical => LoadingGeometry::Triaxial,
            CavityGeometry::Cylindrical => LoadingGeometry::PlaneStrain,
        }
    }

    pub fn m_alpha(self, material: &CasmMaterial) -> f64 {
        material.m_for(self.loading())
    }
}

impl std::str::FromStr for CavityGeometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spherical" => Ok(Self::Spherical),
            "cylindrical" => Ok(Self::Cylindrical),
            other => Err(Error::Input(format!("unknown cavity geometry '{other}'"))),
        }
    }
}

/// `sigma'_c / p'_0`, the normalized effective cavity resistance.
pub fn normalized_effective_resistance(
    psi_0: f64,
    material: &CasmMaterial,
    geom: CavityGeometry,
) -> f64 {
    (1.0 + geom.alpha() * geom.m_alpha(material)) * (-psi_0 / material.lambda).exp()
}

/// Effective limit cavity pressure, kPa.
pub fn effective_limit_pressure(
    p_eff_0: f64,
    psi_0: f64,
    material: &CasmMaterial,
    geom: CavityGeometry,
) -> f64 {
    p_eff_0 * normalized_effective_resistance(psi_0, material, geom)
}

/// `sum_{k>=1} x^k / k^2`, i.e. the dilogarithm `Li2(x)` for `0 <= x < 1`.
///
/// Terms are added until the geometric bound on the remaining tail,
/// `x^(k+1) / ((k+1)^2 (1 - x))`, drops below `tol`.
pub fn dilog_series(x: f64, tol: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain(format!(
            "dilogarithm series needs 0 <= x < 1, got {x}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Input(format!(
            "series tolerance must be positive, got {tol}"
        )));
    }
    let tail_scale = 1.0 / (1.0 - x);
    let mut sum = 0.0;
    let mut power = 1.0;
    for k in 1..=DILOG_MAX_TERMS {
        let kf = k as f64;
        power *= x;
        let term = power / (kf * kf);
        if term * tail_scale < tol {
            return Ok(sum);
        }
        sum += term;
    }
    Err(Error::SeriesNonConvergence {
        terms: DILOG_MAX_TERMS,
    })
}

/// Inputs of the total limit pressure solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityInput {
    /// Initial mean effective stress, kPa.
    pub p_eff_0: f64,
    /// Initial state parameter.
    pub psi_0: f64,
    /// `p_c0 / p'_0`.
    pub r0: f64,
    /// Shear modulus `G0`, kPa.
    pub shear_modulus: f64,
    /// Ambient pore pressure, kPa.
    pub u0: f64,
}

impl CavityInput {
    /// `R0` from the material OCR and `G0` from the elastic law at `p'_0`.
    pub fn for_material(material: &CasmMaterial, p_eff_0: f64, psi_0: f64, u0: f64) -> Self {
        Self {
            p_eff_0,
            psi_0,
            r0: material.ocr,
            shear_modulus: elastic_moduli(p_eff_0, material, material.e_ref).shear,
            u0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavityResult {
    /// Total limit pressure, kPa.
    pub sigma_c: f64,
    /// Effective limit pressure, kPa.
    pub sigma_c_eff: f64,
    /// Pore pressure at the cavity wall, kPa.
    pub u_c: f64,
    /// `(sigma_c - p_0) / p'_0`.
    pub q_bar_p: f64,
    /// `(u_c - u_0) / (sigma_c - p_0)`.
    pub b_bar_q: f64,
    /// `q_bar_p (1 - b_bar_q) + 1`.
    pub q_eff_bar: f64,
}

/// Total limit pressure, pore pressure and the normalized cavity metrics.
pub fn total_limit_pressure(
    input: &CavityInput,
    material: &CasmMaterial,
    geom: CavityGeometry,
) -> Result<CavityResult> {
    let CavityInput {
        p_eff_0,
        psi_0,
        r0,
        shear_modulus: g0,
        u0,
    } = *input;
    if !(p_eff_0 > 0.0) {
        return Err(Error::Input(format!(
            "p'_0 must be positive, got {p_eff_0}"
        )));
    }
    if !(r0 >= 1.0) {
        return Err(Error::Input(format!("R0 must be >= 1, got {r0}")));
    }
    if !(g0 > 0.0) {
        return Err(Error::Input(format!("G0 must be positive, got {g0}")));
    }

    let md = geom.m_d();
    let m_alpha = geom.m_alpha(material);
    let p_cs = p_eff_0 * (-psi_0 / material.lambda).exp();
    let q_cs = m_alpha * p_cs;

    let shape = (r0.ln() / material.r_spacing.ln()).powf(1.0 / material.n_shape);
    let a3 = -(-shape * m_alpha * p_eff_0 / (2.0 * g0)).exp_m1();
    if !(a3 > 0.0 && a3 < 1.0) {
        return Err(Error::Domain(format!(
            "auxiliary term A3 = {a3} outside (0, 1); R0 = 1 or stiffness is unphysical"
        )));
    }
    let a4 = dilog_series(a3, DILOG_TOL)? / (md + 1.0);

    let sigma_c = p_eff_0 - md / (md + 1.0) * q_cs * a3.ln() + 2.0 * g0 * md * a4 + u0;
    let sigma_c_eff = effective_limit_pressure(p_eff_0, psi_0, material, geom);
    let u_c = sigma_c - sigma_c_eff;
    let p0 = p_eff_0 + u0;
    let q_bar_p = (sigma_c - p0) / p_eff_0;
    let b_bar_q = (u_c - u0) / (sigma_c - p0);
    Ok(CavityResult {
        sigma_c,
        sigma_c_eff,
        u_c,
        q_bar_p,
        b_bar_q,
        q_eff_bar: q_bar_p * (1.0 - b_bar_q) + 1.0,
    })
}
