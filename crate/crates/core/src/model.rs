//! Ideal-gas closures shared by the sharp-interface and averaged solvers.
//!
//! Each phase is a perfect gas with constant viscosity:
//! `p = (γ - 1) ρ θ`, `e = c_v θ`, `σ = μ ∂ₓu - p`. In a two-phase mixture the
//! homogenized stress is the harmonic-in-viscosity convex combination of the
//! phase stresses, equivalently `σ = μ_eff ∂ₓu - p_eff`.

use crate::error::{Error, Result};

/// Volume-fraction excursions outside `[0, 1]` tolerated as round-off.
pub const ALPHA_ROUNDOFF: f64 = 1e-12;

/// Per-phase material constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseParams {
    mu: f64,
    gamma: f64,
    cv: f64,
}

impl PhaseParams {
    pub fn new(mu: f64, gamma: f64, cv: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::invalid("mu", format!("must be > 0, got {mu}")));
        }
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(Error::invalid("gamma", format!("must be > 1, got {gamma}")));
        }
        if !(cv.is_finite() && cv > 0.0) {
            return Err(Error::invalid("cv", format!("must be > 0, got {cv}")));
        }
        Ok(Self { mu, gamma, cv })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn cv(&self) -> f64 {
        self.cv
    }

    /// Same gas with its viscosity multiplied by `factor`.
    pub fn with_scaled_viscosity(&self, factor: f64) -> Result<Self> {
        Self::new(self.mu * factor, self.gamma, self.cv)
    }

    pub fn pressure(&self, pt: ThermoPoint) -> f64 {
        pressure(self, pt)
    }

    /// Ideal-gas sound speed `sqrt(γ (γ - 1) θ)`.
    pub fn sound_speed(&self, theta: f64) -> f64 {
        (self.gamma * (self.gamma - 1.0) * theta).sqrt()
    }
}

/// The two phases, `+` and `-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Plus,
    Minus,
}

impl Phase {
    pub fn other(self) -> Phase {
        match self {
            Phase::Plus => Phase::Minus,
            Phase::Minus => Phase::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePair {
    pub plus: PhaseParams,
    pub minus: PhaseParams,
}

impl PhasePair {
    pub fn new(plus: PhaseParams, minus: PhaseParams) -> Self {
        Self { plus, minus }
    }

    pub fn get(&self, phase: Phase) -> &PhaseParams {
        match phase {
            Phase::Plus => &self.plus,
            Phase::Minus => &self.minus,
        }
    }

    /// Phase parameters selected by a mesoscopic color (`1` is `+`).
    pub fn by_color(&self, color: u8) -> &PhaseParams {
        if color == 1 {
            &self.plus
        } else {
            &self.minus
        }
    }

    /// Both viscosities multiplied by `eta`.
    pub fn scaled_viscosity(&self, eta: f64) -> Result<Self> {
        Ok(Self {
            plus: self.plus.with_scaled_viscosity(eta)?,
            minus: self.minus.with_scaled_viscosity(eta)?,
        })
    }

    /// The same pair with the labels `+` and `-` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            plus: self.minus,
            minus: self.plus,
        }
    }
}

/// A thermodynamic state with positive density and temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoPoint {
    rho: f64,
    theta: f64,
}

impl ThermoPoint {
    pub fn new(rho: f64, theta: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::invalid("rho", format!("must be > 0, got {rho}")));
        }
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::invalid("theta", format!("must be > 0, got {theta}")));
        }
        Ok(Self { rho, theta })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

pub fn pressure(params: &PhaseParams, pt: ThermoPoint) -> f64 {
    pressure_raw(params.gamma, pt.rho, pt.theta)
}

/// `(γ - 1) ρ θ` without validating the inputs; used in the solver inner loops.
#[inline]
pub(crate) fn pressure_raw(gamma: f64, rho: f64, theta: f64) -> f64 {
    (gamma - 1.0) * rho * theta
}

pub fn internal_energy(params: &PhaseParams, theta: f64) -> f64 {
    params.cv * theta
}

#[inline]
pub fn stress(mu: f64, dudx: f64, p: f64) -> f64 {
    mu * dudx - p
}

/// Clamp a volume fraction into `[0, 1]`.
///
/// Panics if the input lies more than [`ALPHA_ROUNDOFF`] outside the interval:
/// callers are expected to have rejected genuine excursions already.
pub fn clamp_alpha(alpha: f64) -> f64 {
    let excursion = (-alpha).max(alpha - 1.0);
    assert!(
        excursion <= ALPHA_ROUNDOFF,
        "volume fraction {alpha} outside [0, 1] beyond round-off"
    );
    alpha.clamp(0.0, 1.0)
}

/// Homogenized viscosity and pressure `(μ_eff, p_eff)` of a two-phase mixture.
pub fn eff_coefficients(alpha_plus: f64, pair: &PhasePair, p_plus: f64, p_minus: f64) -> (f64, f64) {
    let a_plus = clamp_alpha(alpha_plus);
    let (mu_p, mu_m) = (pair.plus.mu, pair.minus.mu);
    if a_plus == 1.0 {
        return (mu_p, p_plus);
    }
    if a_plus == 0.0 {
        return (mu_m, p_minus);
    }
    let a_minus = 1.0 - a_plus;
    if mu_p == mu_m {
        return (mu_p, a_plus * p_plus + a_minus * p_minus);
    }
    let mobility = a_plus / mu_p + a_minus / mu_m;
    let mu_eff = 1.0 / mobility;
    let p_eff = (a_plus * p_plus / mu_p + a_minus * p_minus / mu_m) * mu_eff;
    (mu_eff, p_eff)
}

/// Homogenized stress as the convex combination of the phase stresses with
/// weights `(α±/μ±) / (α₊/μ₊ + α₋/μ₋)`.
pub fn sigma_convex(alpha_plus: f64, pair: &PhasePair, sigma_plus: f64, sigma_minus: f64) -> f64 {
    let a_plus = clamp_alpha(alpha_plus);
    if a_plus == 1.0 {
        return sigma_plus;
    }
    if a_plus == 0.0 {
        return sigma_minus;
    }
    let w_plus = a_plus / pair.plus.mu;
    let w_minus = (1.0 - a_plus) / pair.minus.mu;
    let total = w_plus + w_minus;
    (w_plus / total) * sigma_plus + (w_minus / total) * sigma_minus
}

/// Lagrangian rate of change of `α₊` driven by the stress imbalance:
/// `α₊α₋ (σ₋ - σ₊) / (α₋μ₊ + α₊μ₋)`. Exactly zero for pure phases.
pub fn relaxation_rate(alpha_plus: f64, pair: &PhasePair, sigma_plus: f64, sigma_minus: f64) -> f64 {
    let a_plus = clamp_alpha(alpha_plus);
    if a_plus == 0.0 || a_plus == 1.0 {
        return 0.0;
    }
    let a_minus = 1.0 - a_plus;
    let denom = a_minus * pair.plus.mu + a_plus * pair.minus.mu;
    a_plus * a_minus * (sigma_minus - sigma_plus) / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn default_pair() -> PhasePair {
        PhasePair::new(
            PhaseParams::new(0.1, 2.0, 1.0).unwrap(),
            PhaseParams::new(0.2, 3.0, 1.0).unwrap(),
        )
    }

    fn gas(gamma: f64) -> PhaseParams {
        PhaseParams::new(0.1, gamma, 1.0).unwrap()
    }

    #[test]
    fn params_reject_bad_values() {
        assert!(PhaseParams::new(0.0, 2.0, 1.0).is_err());
        assert!(PhaseParams::new(0.1, 1.0, 1.0).is_err());
        assert!(PhaseParams::new(0.1, 2.0, -1.0).is_err());
        assert!(PhaseParams::new(f64::NAN, 2.0, 1.0).is_err());
        assert!(ThermoPoint::new(0.0, 1.0).is_err());
        assert!(ThermoPoint::new(1.0, -1.0).is_err());
    }

    #[test]
    fn pressure_examples() {
        assert_eq!(pressure(&gas(2.0), ThermoPoint::new(2.0, 2.0).unwrap()), 4.0);
        assert_eq!(pressure(&gas(3.0), ThermoPoint::new(1.0, 1.0).unwrap()), 2.0);
        assert_relative_eq!(
            pressure(&gas(2.0), ThermoPoint::new(0.2, 0.2).unwrap()),
            0.04,
            max_relative = 1e-15
        );
    }

    #[test]
    fn internal_energy_examples() {
        let p1 = PhaseParams::new(0.1, 2.0, 1.0).unwrap();
        let p2 = PhaseParams::new(0.1, 2.0, 2.0).unwrap();
        assert_eq!(internal_energy(&p1, 2.0), 2.0);
        assert_eq!(internal_energy(&p1, 0.2), 0.2);
        assert_eq!(internal_energy(&p2, 0.5), 1.0);
    }

    #[test]
    fn stress_examples() {
        assert_eq!(stress(0.1, 0.0, 4.0), -4.0);
        assert_eq!(stress(0.2, 10.0, 2.0), 0.0);
        assert_relative_eq!(stress(0.1, 1.0, 0.04), 0.06, max_relative = 1e-14);
    }

    #[test]
    fn eff_coefficient_examples() {
        let pair = default_pair();
        assert_eq!(eff_coefficients(1.0, &pair, 4.0, 123.0), (0.1, 4.0));
        assert_eq!(eff_coefficients(0.0, &pair, 123.0, 2.0), (0.2, 2.0));
        let (mu, p) = eff_coefficients(0.5, &pair, 4.0, 2.0);
        assert_relative_eq!(mu, 1.0 / 7.5, max_relative = 1e-15);
        assert_relative_eq!(p, 25.0 / 7.5, max_relative = 1e-15);
    }

    #[test]
    fn eff_viscosity_is_exact_for_equal_viscosities() {
        let g = PhaseParams::new(0.3, 2.0, 1.0).unwrap();
        let pair = PhasePair::new(g, PhaseParams::new(0.3, 3.0, 2.0).unwrap());
        for &a in &[0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            assert_eq!(eff_coefficients(a, &pair, 1.0, 2.0).0, 0.3);
        }
    }

    #[test]
    fn sigma_convex_examples() {
        let pair = default_pair();
        assert_eq!(sigma_convex(1.0, &pair, -4.0, 7.0), -4.0);
        let equal = PhasePair::new(gas(2.0), gas(3.0));
        assert_eq!(sigma_convex(0.5, &equal, 1.0, 3.0), 2.0);
        assert_relative_eq!(sigma_convex(0.5, &pair, 0.0, 3.0), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn relaxation_rate_examples() {
        let pair = default_pair();
        assert_eq!(relaxation_rate(0.0, &pair, -4.0, -2.0), 0.0);
        assert_eq!(relaxation_rate(1.0, &pair, -4.0, -2.0), 0.0);
        assert_eq!(relaxation_rate(0.3, &pair, -1.5, -1.5), 0.0);
        assert_relative_eq!(
            relaxation_rate(0.5, &pair, -4.0, -2.0),
            10.0 / 3.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn clamp_absorbs_roundoff() {
        assert_eq!(clamp_alpha(1.0 + 1e-13), 1.0);
        assert_eq!(clamp_alpha(-1e-13), 0.0);
        assert_eq!(clamp_alpha(0.25), 0.25);
    }

    #[test]
    #[should_panic]
    fn clamp_rejects_real_excursions() {
        clamp_alpha(1.0 + 1e-9);
    }

    fn arb_pair() -> impl Strategy<Value = PhasePair> {
        (0.01f64..10.0, 1.05f64..3.0, 0.1f64..5.0, 0.01f64..10.0, 1.05f64..3.0, 0.1f64..5.0)
            .prop_map(|(m1, g1, c1, m2, g2, c2)| {
                PhasePair::new(
                    PhaseParams::new(m1, g1, c1).unwrap(),
                    PhaseParams::new(m2, g2, c2).unwrap(),
                )
            })
    }

    proptest! {
        #[test]
        fn convex_form_matches_effective_form(
            alpha in 0.0f64..=1.0,
            pair in arb_pair(),
            d in -50.0f64..50.0,
            p_plus in 0.0f64..20.0,
            p_minus in 0.0f64..20.0,
        ) {
            let s_plus = stress(pair.plus.mu(), d, p_plus);
            let s_minus = stress(pair.minus.mu(), d, p_minus);
            let convex = sigma_convex(alpha, &pair, s_plus, s_minus);
            let (mu_eff, p_eff) = eff_coefficients(alpha, &pair, p_plus, p_minus);
            let effective = stress(mu_eff, d, p_eff);
            let scale = (mu_eff * d).abs().max(p_eff.abs()).max(f64::MIN_POSITIVE);
            prop_assert!((convex - effective).abs() <= 4.0 * f64::EPSILON * scale * 2.0,
                "{convex} vs {effective}");
        }

        #[test]
        fn homogenized_values_stay_in_their_hulls(
            alpha in 0.0f64..=1.0,
            pair in arb_pair(),
            s_plus in -20.0f64..20.0,
            s_minus in -20.0f64..20.0,
        ) {
            let s = sigma_convex(alpha, &pair, s_plus, s_minus);
            let slack = 4.0 * f64::EPSILON * s_plus.abs().max(s_minus.abs());
            prop_assert!(s >= s_plus.min(s_minus) - slack && s <= s_plus.max(s_minus) + slack);

            let (mu_eff, p_eff) = eff_coefficients(alpha, &pair, s_plus.abs(), s_minus.abs());
            let (lo, hi) = (pair.plus.mu().min(pair.minus.mu()), pair.plus.mu().max(pair.minus.mu()));
            prop_assert!(mu_eff >= lo * (1.0 - 1e-15) && mu_eff <= hi * (1.0 + 1e-15));
            let (plo, phi) = (s_plus.abs().min(s_minus.abs()), s_plus.abs().max(s_minus.abs()));
            prop_assert!(p_eff >= plo * (1.0 - 1e-14) - 1e-300 && p_eff <= phi * (1.0 + 1e-14));
        }

        #[test]
        fn closures_are_monotone(
            gamma in 1.01f64..4.0,
            rho in 0.01f64..10.0,
            theta in 0.01f64..10.0,
            bump in 1.001f64..2.0,
            mu in 0.01f64..5.0,
            d in 0.01f64..10.0,
        ) {
            let g = PhaseParams::new(mu, gamma, 1.0).unwrap();
            let p = pressure(&g, ThermoPoint::new(rho, theta).unwrap());
            prop_assert!(p > 0.0);
            prop_assert!(pressure(&g, ThermoPoint::new(rho * bump, theta).unwrap()) > p);
            prop_assert!(pressure(&g, ThermoPoint::new(rho, theta * bump).unwrap()) > p);
            prop_assert!(internal_energy(&g, theta * bump) > internal_energy(&g, theta));
            prop_assert!(stress(mu, d * bump, p) > stress(mu, d, p));
            prop_assert!(stress(mu * bump, d, p) > stress(mu, d, p));
            prop_assert!(stress(mu, d, p * bump) < stress(mu, d, p));
        }
    }
}
