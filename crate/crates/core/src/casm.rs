//! CASM constitutive relations in triaxial invariants and an undrained
//! triaxial compression driver.
//!
//! Volumetric strains are compression-positive. Elasticity has a bulk modulus
//! proportional to `p'` and a constant shear modulus fixed by the initial mean
//! stress. The yield surface is
//!
//! ```text
//! f = (q / (M p'))^n + ln(p' / p_c) / ln r
//! ```
//!
//! with the dilatancy rule `d = (m-1)/m (M^m - eta^m) / eta^(m-1)` and
//! volumetric hardening `dp_c = p_c d(eps_v^p) / (lambda* - kappa*)`.
//!
//! The driver is strain controlled (`eps_v = 0`, `eps_q` increasing) and uses
//! explicit modified Euler substepping with local error control and
//! consistent drift correction back onto the yield surface.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::{state_parameter, CasmMaterial, SoilState};

/// Yield function value; negative inside the elastic domain.
pub fn yield_value(state: &SoilState, material: &CasmMaterial) -> f64 {
    yield_fn(
        state.p_eff,
        state.q_dev,
        state.p_c,
        material.m_tc(),
        material,
    )
}

fn yield_fn(p: f64, q: f64, pc: f64, m: f64, material: &CasmMaterial) -> f64 {
    (q / (m * p)).powf(material.n_shape) + (p / pc).ln() / material.r_spacing.ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticModuli {
    /// Tangent bulk modulus at the given mean stress, kPa.
    pub bulk: f64,
    /// Shear modulus, kPa.
    pub shear: f64,
}

/// Elastic moduli at mean effective stress `p_eff_0`.
///
/// `e0` is the void ratio used in `kappa* = kappa / (1 + e0)`.
pub fn elastic_moduli(p_eff_0: f64, material: &CasmMaterial, e0: f64) -> ElasticModuli {
    let kappa_star = material.kappa_star(e0);
    let nu = material.nu;
    ElasticModuli {
        bulk: p_eff_0 / kappa_star,
        shear: 3.0 * (1.0 - 2.0 * nu) / (2.0 * (1.0 + nu)) * p_eff_0 / kappa_star,
    }
}

/// Plastic dilatancy `d eps_v^p / d eps_q^p` at stress ratio `eta`.
pub fn dilatancy(eta: f64, material: &CasmMaterial) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::SingularFlowRule { eta });
    }
    Ok(dilatancy_unchecked(eta, material.m_tc(), material.m_flow))
}

fn dilatancy_unchecked(eta: f64, m_csl: f64, m_flow: f64) -> f64 {
    (m_flow - 1.0) / m_flow * (m_csl.powf(m_flow) - eta.powf(m_flow)) / eta.powf(m_flow - 1.0)
}

/// Preconsolidation increment for a plastic volumetric strain increment.
pub fn hardening_rate(p_c: f64, d_eps_v_p: f64, material: &CasmMaterial, e0: f64) -> f64 {
    p_c * d_eps_v_p / (material.lambda_star(e0) - material.kappa_star(e0))
}

/// Undrained residual strength `(M/2) p'_0 exp(-psi_0 / lambda)`.
pub fn residual_strength_analytic(p_eff_0: f64, psi_0: f64, material: &CasmMaterial) -> f64 {
    0.5 * material.m_tc() * p_eff_0 * (-psi_0 / material.lambda).exp()
}

/// Initial stress state used by the element test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartMode {
    /// Start from the supplied (usually K0) state.
    #[default]
    InSituAnisotropic,
    /// Same `p'` and void ratio, `q = 0`.
    Isotropic,
}

/// How the initial preconsolidation pressure is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconsolidationAnchor {
    /// `p_c = r p' exp(-psi / (lambda - kappa))`, so the yield surface is
    /// consistent with the material's CSL and the test ends on it.
    #[default]
    CriticalStateLine,
    /// Use `p_c` from the supplied state (e.g. `OCR p'`).
    Given,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriaxialConfig {
    pub max_dev_strain: f64,
    pub step_dev_strain: f64,
    pub substep_rel_tol: f64,
    pub yield_tol: f64,
    pub start_mode: StartMode,
    pub pc_anchor: PreconsolidationAnchor,
}

impl Default for TriaxialConfig {
    fn default() -> Self {
        Self {
            max_dev_strain: 0.50,
            step_dev_strain: 1e-4,
            substep_rel_tol: 1e-6,
            yield_tol: 1e-8,
            start_mode: StartMode::default(),
            pc_anchor: PreconsolidationAnchor::default(),
        }
    }
}

impl TriaxialConfig {
    fn validate(&self) -> Result<()> {
        let positive = [
            self.max_dev_strain,
            self.step_dev_strain,
            self.substep_rel_tol,
            self.yield_tol,
        ];
        if positive.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Input(format!(
                "triaxial config needs positive finite strains and tolerances: {self:?}"
            )))
        }
    }
}

/// One sample along the stress path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathPoint {
    pub eps_q: f64,
    pub p_eff: f64,
    pub q_dev: f64,
    /// Excess pore pressure relative to the start of shearing, kPa.
    pub excess_pore_pressure: f64,
    pub void_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriaxialResult {
    pub path: Vec<PathPoint>,
    /// Peak undrained strength `max q / 2`, kPa.
    pub su_peak: f64,
    /// Strength at the end of the test, kPa.
    pub su_res: f64,
    /// Bishop brittleness `1 - su_res / su_peak`.
    pub brittleness: f64,
    /// State actually used at the start of shearing.
    pub initial: SoilState,
    /// State at `max_dev_strain`.
    pub last: SoilState,
    /// Largest `|f|` after any accepted plastic step.
    pub max_yield_drift: f64,
}

/// Fixed parameters of one element test.
struct Kernel {
    m_csl: f64,
    m_flow: f64,
    n: f64,
    ln_r: f64,
    kappa_star: f64,
    /// `lambda* - kappa*`.
    plastic_star: f64,
    shear: f64,
}

#[derive(Debug, Clone, Copy)]
struct Point {
    p: f64,
    q: f64,
    pc: f64,
}

impl Kernel {
    fn new(material: &CasmMaterial, p0: f64) -> Self {
        let e0 = material.e_ref;
        Self {
            m_csl: material.m_tc(),
            m_flow: material.m_flow,
            n: material.n_shape,
            ln_r: material.r_spacing.ln(),
            kappa_star: material.kappa_star(e0),
            plastic_star: material.lambda_star(e0) - material.kappa_star(e0),
            shear: elastic_moduli(p0, material, e0).shear,
        }
    }

    fn f(&self, s: Point) -> f64 {
        (s.q / (self.m_csl * s.p)).powf(self.n) + (s.p / s.pc).ln() / self.ln_r
    }

    /// Dilatancy, bulk modulus and the plastic-multiplier denominator.
    fn plastic_terms(&self, s: Point) -> (f64, f64, f64, f64) {
        let eta = s.q / s.p;
        let d = dilatancy_unchecked(eta, self.m_csl, self.m_flow);
        let bulk = s.p / self.kappa_star;
        let a = (s.q / (self.m_csl * s.p)).powf(self.n);
        let f_p = (1.0 / self.ln_r - self.n * a) / s.p;
        let f_q = self.n * a / s.q;
        let denom = f_p * bulk * d + 3.0 * self.shear * f_q + d / (self.ln_r * self.plastic_star);
        (d, bulk, f_q, denom)
    }

    /// Elastoplastic increment for a deviatoric strain increment `de`.
    fn increment(&self, s: Point, de: f64) -> Option<Point> {
        if s.q / s.p < 1e-12 {
            // Limit of the flow rule as eta -> 0: no plastic straining.
            return Some(Point {
                p: 0.0,
                q: 3.0 * self.shear * de,
                pc: 0.0,
            });
        }
        let (d, bulk, f_q, denom) = self.plastic_terms(s);
        if !(denom > 0.0) {
            return None;
        }
        let lambda = f_q * 3.0 * self.shear * de / denom;
        let inc = Point {
            p: -bulk * lambda * d,
            q: 3.0 * self.shear * (de - lambda),
            pc: s.pc * lambda * d / self.plastic_star,
        };
        [inc.p, inc.q, inc.pc]
            .iter()
            .all(|v| v.is_finite())
            .then_some(inc)
    }

    /// Returns the state to `|f| <= tol` at fixed total strain.
    fn correct_drift(&self, mut s: Point, tol: f64) -> Option<Point> {
        for _ in 0..50 {
            let f0 = self.f(s);
            if f0.abs() <= tol {
                return Some(s);
            }
            let (d, bulk, _, denom) = self.plastic_terms(s);
            let dl = f0 / denom;
            let cand = Point {
                p: s.p - bulk * dl * d,
                q: s.q - 3.0 * self.shear * dl,
                pc: s.pc + s.pc * dl * d / self.plastic_star,
            };
            let f1 = if cand.p > 0.0 && cand.q > 0.0 {
                self.f(cand)
            } else {
                f64::INFINITY
            };
            s = if f1.abs() < f0.abs() {
                cand
            } else {
                // Normal projection when the consistent correction diverges.
                let a = (s.q / (self.m_csl * s.p)).powf(self.n);
                let f_p = (1.0 / self.ln_r - self.n * a) / s.p;
                let f_q = self.n * a / s.q;
                let k = f0 / (f_p * f_p + f_q * f_q);
                Point {
                    p: s.p - k * f_p,
                    q: s.q - k * f_q,
                    pc: s.pc,
                }
            };
            if !(s.p > 0.0 && s.q >= 0.0) {
                return None;
            }
        }
        (self.f(s).abs() <= tol).then_some(s)
    }
}

const MIN_SUBSTEP: f64 = 1e-10;

/// Drives an undrained triaxial compression test to `max_dev_strain`.
pub fn simulate_undrained_triaxial(
    material: &CasmMaterial,
    initial: &SoilState,
    config: &TriaxialConfig,
) -> Result<TriaxialResult> {
    material.validate()?;
    config.validate()?;
    initial.validate()?;

    let mut start = *initial;
    if config.start_mode == StartMode::Isotropic {
        start.q_dev = 0.0;
    }
    if config.pc_anchor == PreconsolidationAnchor::CriticalStateLine {
        let psi = state_parameter(&start, material);
        start.p_c =
            material.r_spacing * start.p_eff * (-psi / (material.lambda - material.kappa)).exp();
    }
    let f_start = yield_value(&start, material);
    if f_start > config.yield_tol {
        return Err(Error::Input(format!(
            "initial state lies outside the yield surface (f = {f_start:.3e})"
        )));
    }

    let k = Kernel::new(material, start.p_eff);
    let e = start.void_ratio;
    let (p0, q0) = (start.p_eff, start.q_dev);
    let sample = |eps_q: f64, s: Point| PathPoint {
        eps_q,
        p_eff: s.p,
        q_dev: s.q,
        excess_pore_pressure: (s.q - q0) / 3.0 - (s.p - p0),
        void_ratio: e,
    };
    let as_state = |s: Point| SoilState {
        p_eff: s.p,
        q_dev: s.q,
        void_ratio: e,
        p_c: s.pc,
    };

    let n_steps = (config.max_dev_strain / config.step_dev_strain).ceil() as usize;
    let mut path = Vec::with_capacity(n_steps + 1);
    let mut s = Point {
        p: start.p_eff,
        q: start.q_dev,
        pc: start.p_c,
    };
    path.push(sample(0.0, s));
    let mut q_max = s.q;
    let mut max_drift: f64 = 0.0;
    let mut eps = 0.0;

    for i in 1..=n_steps {
        let eps_next = (i as f64 * config.step_dev_strain).min(config.max_dev_strain);
        let de = eps_next - eps;
        let fail = |reason: &str, s: Point| Error::IntegrationFailure {
            eps_q: eps,
            reason: reason.to_string(),
            last_state: as_state(s),
        };

        let elastic = Point {
            q: s.q + 3.0 * k.shear * de,
            ..s
        };
        let f_now = k.f(s);
        let mut remaining = de;
        if k.f(elastic) <= 0.0 {
            s = elastic;
            remaining = 0.0;
        } else if f_now < -config.yield_tol {
            // Bisect for the elastic-plastic transition.
            let (mut lo, mut hi) = (0.0, 1.0);
            let mut alpha = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = k.f(Point {
                    q: s.q + 3.0 * k.shear * de * mid,
                    ..s
                });
                if fm > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    alpha = mid;
                    if fm.abs() <= config.yield_tol {
                        break;
                    }
                }
            }
            s.q += 3.0 * k.shear * de * alpha;
            remaining = de * (1.0 - alpha);
        }

        if remaining > 0.0 {
            let mut t = 0.0;
            let mut dt = 1.0;
            let mut last_failed = false;
            while t < 1.0 {
                let h = dt * remaining;
                let trial = k.increment(s, h).and_then(|k1| {
                    let mid = Point {
                        p: s.p + k1.p,
                        q: s.q + k1.q,
                        pc: s.pc + k1.pc,
                    };
                    if mid.p <= 0.0 || mid.pc <= 0.0 || mid.q < 0.0 {
                        return None;
                    }
                    k.increment(mid, h).map(|k2| (k1, k2))
                });
                let accepted = trial.and_then(|(k1, k2)| {
                    let next = Point {
                        p: s.p + 0.5 * (k1.p + k2.p),
                        q: s.q + 0.5 * (k1.q + k2.q),
                        pc: s.pc + 0.5 * (k1.pc + k2.pc),
                    };
                    if next.p <= 0.0 || next.pc <= 0.0 || next.q < 0.0 {
                        return None;
                    }
                    let stress_err =
                        (k2.p - k1.p).hypot(k2.q - k1.q) / (2.0 * next.p.hypot(next.q));
                    let pc_err = (k2.pc - k1.pc).abs() / (2.0 * next.pc);
                    Some((next, stress_err.max(pc_err).max(f64::EPSILON)))
                });
                match accepted {
                    Some((next, err)) if err <= config.substep_rel_tol => {
                        let corrected = k
                            .correct_drift(next, config.yield_tol)
                            .ok_or_else(|| fail("drift correction diverged", s))?;
                        s = corrected;
                        max_drift = max_drift.max(k.f(s).abs());
                        q_max = q_max.max(s.q);
                        t += dt;
                        let mut grow = (0.9 * (config.substep_rel_tol / err).sqrt()).min(1.1);
                        if last_failed {
                            grow = grow.min(1.0);
                        }
                        dt = (dt * grow).min(1.0 - t);
                        last_failed = false;
                    }
                    Some((_, err)) => {
                        dt *= (0.9 * (config.substep_rel_tol / err).sqrt()).max(0.1);
                        last_failed = true;
                    }
                    None => {
                        dt *= 0.1;
                        last_failed = true;
                    }
                }
                if t < 1.0 && dt < MIN_SUBSTEP {
                    return Err(fail("substep below minimum size", s));
                }
            }
        }
        eps = eps_next;
        q_max = q_max.max(s.q);
        path.push(sample(eps, s));
    }

    let su_peak = 0.5 * q_max;
    let su_res = 0.5 * s.q;
    Ok(TriaxialResult {
        path,
        su_peak,
        su_res,
        brittleness: if su_peak > 0.0 {
            1.0 - su_res / su_peak
        } else {
            0.0
        },
        initial: start,
        last: as_state(s),
        max_yield_drift: max_drift,
    })
}
