//! Soil parameter sets, the critical state line and in-situ state setup.
//!
//! Stresses are effective and compression-positive, in kPa. Angles are in
//! degrees. Both the critical state line (CSL) and the isotropic compression
//! line (ICL) are straight in `e - ln p'`:
//!
//! ```text
//! e_cs(p')  = gamma_c - lambda ln(p'/p_ref)
//! e_icl(p') = e_ref   - lambda ln(p'/p_ref)
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Loading geometry used to pick the CSL slope in `p' - q` space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadingGeometry {
    Triaxial,
    PlaneStrain,
}

/// Slope of the CSL in `p' - q` space for a critical-state friction angle.
///
/// Triaxial compression gives `6 sin(phi) / (3 - sin(phi))`; plane strain
/// gives `2 sin(phi)`.
pub fn csl_slope_m(phi_cs_deg: f64, geometry: LoadingGeometry) -> Result<f64> {
    if !(0.0..90.0).contains(&phi_cs_deg) {
        return Err(Error::Input(format!(
            "critical state friction angle {phi_cs_deg} deg outside [0, 90)"
        )));
    }
    let s = phi_cs_deg.to_radians().sin();
    Ok(match geometry {
        LoadingGeometry::Triaxial => 6.0 * s / (3.0 - s),
        LoadingGeometry::PlaneStrain => 2.0 * s,
    })
}

/// Full CASM parameter set. The JSON form uses these field names verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CasmMaterial {
    /// Slope of the CSL and ICL in `e - ln p'`.
    pub lambda: f64,
    /// Slope of the unload-reload line in `e - ln p'`.
    pub kappa: f64,
    /// Poisson's ratio.
    pub nu: f64,
    /// Critical-state friction angle, degrees.
    pub phi_cs: f64,
    /// Yield surface stress-ratio exponent `n`.
    pub n_shape: f64,
    /// Yield surface spacing ratio `r`.
    pub r_spacing: f64,
    /// Dilatancy rule exponent `m`.
    pub m_flow: f64,
    /// CSL void ratio at `p_ref`.
    pub gamma_c: f64,
    /// ICL void ratio at `p_ref`.
    pub e_ref: f64,
    /// Reference pressure, kPa.
    pub p_ref: f64,
    /// Isotropic overconsolidation ratio `p_c0 / p'_0`.
    pub ocr: f64,
    /// Coefficient of earth pressure at rest.
    pub k0: f64,
}

impl CasmMaterial {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Input(format!("material: {what}")));
        let finite = [
            self.lambda,
            self.kappa,
            self.nu,
            self.phi_cs,
            self.n_shape,
            self.r_spacing,
            self.m_flow,
            self.gamma_c,
            self.e_ref,
            self.p_ref,
            self.ocr,
            self.k0,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite");
        }
        if !(self.kappa > 0.0 && self.lambda > self.kappa) {
            return bad("requires lambda > kappa > 0");
        }
        if !(self.nu > 0.0 && self.nu < 0.5) {
            return bad("requires 0 < nu < 0.5");
        }
        if !(self.phi_cs > 0.0 && self.phi_cs < 90.0) {
            return bad("requires 0 < phi_cs < 90");
        }
        if self.r_spacing <= 1.0 {
            return bad("requires r_spacing > 1");
        }
        if self.n_shape < 1.0 {
            return bad("requires n_shape >= 1");
        }
        if self.m_flow <= 1.0 {
            return bad("requires m_flow > 1");
        }
        if self.ocr < 1.0 {
            return bad("requires ocr >= 1");
        }
        if !(self.k0 > 0.0 && self.k0 <= 1.0) {
            return bad("requires 0 < k0 <= 1");
        }
        if self.p_ref <= 0.0 {
            return bad("requires p_ref > 0");
        }
        if self.gamma_c <= 0.0 || self.e_ref <= 0.0 {
            return bad("void ratios must be positive");
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Triaxial-compression CSL slope `M`.
    pub fn m_tc(&self) -> f64 {
        let s = self.phi_cs.to_radians().sin();
        6.0 * s / (3.0 - s)
    }

    /// CSL slope for the given loading geometry.
    pub fn m_for(&self, geometry: LoadingGeometry) -> f64 {
        match geometry {
            LoadingGeometry::Triaxial => self.m_tc(),
            LoadingGeometry::PlaneStrain => 2.0 * self.phi_cs.to_radians().sin(),
        }
    }

    /// `lambda / (1 + e0)`.
    pub fn lambda_star(&self, e0: f64) -> f64 {
        self.lambda / (1.0 + e0)
    }

    /// `kappa / (1 + e0)`.
    pub fn kappa_star(&self, e0: f64) -> f64 {
        self.kappa / (1.0 + e0)
    }

    /// Plastic volumetric ratio `(lambda - kappa) / lambda`.
    pub fn plastic_ratio(&self) -> f64 {
        (self.lambda - self.kappa) / self.lambda
    }

    /// Void ratio on the CSL at mean effective stress `p_eff` (kPa, > 0).
    pub fn csl_void_ratio(&self, p_eff: f64) -> f64 {
        self.gamma_c - self.lambda * (p_eff / self.p_ref).ln()
    }

    /// Mean effective stress on the CSL at void ratio `e`.
    pub fn csl_mean_stress(&self, e: f64) -> f64 {
        self.p_ref * ((self.gamma_c - e) / self.lambda).exp()
    }

    /// Void ratio on the ICL at `p_eff`.
    pub fn icl_void_ratio(&self, p_eff: f64) -> f64 {
        self.e_ref - self.lambda * (p_eff / self.p_ref).ln()
    }

    /// CSL intercept implied by the ICL and the yield surface spacing:
    /// `e_ref - (lambda - kappa) ln r`. Undrained element tests started at
    /// `p_c = OCR p'` reach critical state on this line rather than on
    /// `gamma_c`.
    pub fn implied_gamma(&self) -> f64 {
        self.e_ref - (self.lambda - self.kappa) * self.r_spacing.ln()
    }
}

/// Stress and volume state at a material point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoilState {
    /// Mean effective stress, kPa.
    pub p_eff: f64,
    /// Deviatoric stress, kPa.
    pub q_dev: f64,
    pub void_ratio: f64,
    /// Preconsolidation pressure, kPa.
    pub p_c: f64,
}

impl SoilState {
    pub fn validate(&self) -> Result<()> {
        let ok = self.p_eff > 0.0
            && self.p_c > 0.0
            && self.void_ratio > 0.0
            && self.q_dev >= 0.0
            && self.q_dev.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Input(format!("invalid soil state {self:?}")))
        }
    }

    pub fn stress_ratio(&self) -> f64 {
        self.q_dev / self.p_eff
    }
}

/// State parameter: void ratio minus the CSL void ratio at the same `p'`.
pub fn state_parameter(state: &SoilState, material: &CasmMaterial) -> f64 {
    state.void_ratio - material.csl_void_ratio(state.p_eff)
}

/// Builds the at-rest state for a given effective vertical stress.
///
/// The void ratio comes from loading along the ICL to `p_c = OCR p'` and
/// unloading along `kappa` back to `p'`.
pub fn initialize_in_situ(material: &CasmMaterial, sigma_v0_eff: f64) -> Result<SoilState> {
    if !(sigma_v0_eff > 0.0 && sigma_v0_eff.is_finite()) {
        return Err(Error::Input(format!(
            "effective vertical stress must be positive, got {sigma_v0_eff}"
        )));
    }
    let k0 = material.k0;
    let p_eff = (1.0 + 2.0 * k0) / 3.0 * sigma_v0_eff;
    let q_dev = (1.0 - k0) * sigma_v0_eff;
    let p_c = material.ocr * p_eff;
    let void_ratio = material.icl_void_ratio(p_c) + material.kappa * (p_c / p_eff).ln();
    Ok(SoilState {
        p_eff,
        q_dev,
        void_ratio,
        p_c,
    })
}
