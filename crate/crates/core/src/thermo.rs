//! Barotropic pressure laws and the pressure potential.
//!
//! For the power law `p(rho) = a rho^gamma` the pressure potential
//! `H(rho) = rho * int_1^rho p(z)/z^2 dz` has the closed form
//! `a (rho^gamma - rho) / (gamma - 1)`. Internally `H` is kept split into its
//! power part and its linear part `-a rho / (gamma - 1)`: the linear part is
//! annihilated by both `r H'(r) - H(r)` and the Bregman construction, so the
//! quantities built from them are evaluated without the linear term and do not
//! suffer cancellation at small densities.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureForm {
    /// `p(rho) = a rho^gamma`
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureLaw {
    gamma: f64,
    coeff_a: f64,
    form: PressureForm,
}

impl PressureLaw {
    /// Power law `a rho^gamma`. Requires `gamma > 1` and `a > 0`; the stricter
    /// `gamma > 3/2` needed by the existence theory is enforced by scenario
    /// validation, not here.
    pub fn power(gamma: f64, coeff_a: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!("adiabatic exponent must exceed 1, got {gamma}")));
        }
        if !(coeff_a > 0.0) || !coeff_a.is_finite() {
            return Err(Error::Domain(format!("pressure coefficient must be positive, got {coeff_a}")));
        }
        Ok(Self { gamma, coeff_a, form: PressureForm::Power })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn coeff_a(&self) -> f64 {
        self.coeff_a
    }

    pub fn form(&self) -> PressureForm {
        self.form
    }

    /// `lim p'(rho) / rho^(gamma-1)` as `rho -> infinity`.
    pub fn p_infinity(&self) -> f64 {
        self.coeff_a * self.gamma
    }

    pub fn pressure(&self, rho: f64) -> Result<f64> {
        check_density(rho)?;
        Ok(self.pressure_unchecked(rho))
    }

    /// `p'(rho)`, the squared sound speed.
    pub fn dpressure(&self, rho: f64) -> Result<f64> {
        check_density(rho)?;
        Ok(self.dpressure_unchecked(rho))
    }

    pub fn potential(&self, rho: f64) -> Result<f64> {
        check_density(rho)?;
        Ok(self.potential_unchecked(rho))
    }

    /// `H'(r)`, defined for `r > 0`.
    pub fn dpotential(&self, r: f64) -> Result<f64> {
        check_positive(r)?;
        Ok(self.dpotential_unchecked(r))
    }

    /// `H''(r) = p'(r) / r`.
    pub fn d2potential(&self, r: f64) -> Result<f64> {
        check_positive(r)?;
        Ok(self.d2potential_unchecked(r))
    }

    /// `r H'(r) - H(r) - p(r)`, which vanishes identically.
    pub fn potential_identity_defect(&self, r: f64) -> Result<f64> {
        check_positive(r)?;
        // the linear part of H cancels exactly in r H' - H
        Ok(r * self.dpotential_power(r) - self.potential_power(r) - self.pressure_unchecked(r))
    }

    /// Bregman distance `H(rho) - H'(r)(rho - r) - H(r)`.
    pub fn bregman(&self, rho: f64, r: f64) -> Result<BregmanDensity> {
        check_density(rho)?;
        check_positive(r)?;
        let d = rho - r;
        Ok(BregmanDensity { value: d * d * self.bregman_ratio(rho, r) })
    }

    /// Bregman distance divided by `(rho - r)^2`, evaluated without forming the
    /// quotient. Equals `a r^(gamma-2)/(gamma-1) * phi(x)` with `x = rho/r - 1`
    /// and `phi(x) = ((1+x)^gamma - 1 - gamma x) / x^2`.
    pub(crate) fn bregman_ratio(&self, rho: f64, r: f64) -> f64 {
        let g = self.gamma;
        let x = (rho - r) / r;
        let phi = if g.fract() == 0.0 && g <= 16.0 {
            // terminating binomial sum
            let n = g as i32;
            let mut coeff = 1.0;
            let mut sum = 0.0;
            let mut xp = 1.0;
            for k in 1..=n {
                coeff *= (g - (k - 1) as f64) / k as f64;
                if k >= 2 {
                    sum += coeff * xp;
                    xp *= x;
                }
            }
            sum
        } else if x.abs() <= 0.25 {
            let mut coeff = g * (g - 1.0) / 2.0;
            let mut sum = coeff;
            let mut xp = 1.0;
            for k in 3..60 {
                coeff *= (g - (k - 1) as f64) / k as f64;
                xp *= x;
                let term = coeff * xp;
                sum += term;
                if term.abs() < 1e-18 * sum.abs() {
                    break;
                }
            }
            sum
        } else {
            ((1.0 + x).powf(g) - 1.0 - g * x) / (x * x)
        };
        self.coeff_a * r.powf(g - 2.0) / (g - 1.0) * phi
    }

    pub(crate) fn pressure_unchecked(&self, rho: f64) -> f64 {
        self.coeff_a * rho.powf(self.gamma)
    }

    pub(crate) fn dpressure_unchecked(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        self.coeff_a * self.gamma * rho.powf(self.gamma - 1.0)
    }

    pub(crate) fn potential_unchecked(&self, rho: f64) -> f64 {
        self.potential_power(rho) + self.linear_coeff() * rho
    }

    pub(crate) fn dpotential_unchecked(&self, r: f64) -> f64 {
        self.dpotential_power(r) + self.linear_coeff()
    }

    pub(crate) fn d2potential_unchecked(&self, r: f64) -> f64 {
        self.coeff_a * self.gamma * r.powf(self.gamma - 2.0)
    }

    fn potential_power(&self, rho: f64) -> f64 {
        self.coeff_a * rho.powf(self.gamma) / (self.gamma - 1.0)
    }

    fn dpotential_power(&self, r: f64) -> f64 {
        self.coeff_a * self.gamma * r.powf(self.gamma - 1.0) / (self.gamma - 1.0)
    }

    fn linear_coeff(&self) -> f64 {
        -self.coeff_a / (self.gamma - 1.0)
    }
}

fn check_density(rho: f64) -> Result<()> {
    if rho >= 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("density must be finite and nonnegative, got {rho}")))
    }
}

fn check_positive(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("comparison density must be positive, got {r}")))
    }
}

/// Density part of the relative energy; nonnegative by convexity of `H`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BregmanDensity {
    pub value: f64,
}

/// Empirical constant of the two-branch coercivity estimate of the Bregman
/// density around `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coercivity {
    /// min of Bregman / (rho - r)^2 over the near branch `(r/2, 2r)`.
    pub near: f64,
    /// min of Bregman / (1 + rho^gamma) over `[0, r/2] u [2r, rho_max]`.
    pub far: f64,
}

impl Coercivity {
    pub fn value(&self) -> f64 {
        self.near.min(self.far)
    }
}

/// Samples per branch used by [`coercivity_constant`].
pub const COERCIVITY_SAMPLES: usize = 10_000;

/// Near-branch sample points: interior points of `(r/2, 2r)`.
pub fn near_branch_grid(r: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = (0.5 * r, 2.0 * r);
    (1..=n).map(|k| lo + (hi - lo) * k as f64 / (n + 1) as f64).collect()
}

/// Far-branch sample points: half on `[0, r/2]`, half on `[2r, rho_max]`,
/// endpoints included.
pub fn far_branch_grid(r: f64, rho_max: f64, n: usize) -> Vec<f64> {
    let half = (n / 2).max(2);
    let lin = |a: f64, b: f64| (0..half).map(move |k| a + (b - a) * k as f64 / (half - 1) as f64);
    lin(0.0, 0.5 * r).chain(lin(2.0 * r, rho_max)).collect()
}

pub fn coercivity_constant(law: &PressureLaw, r: f64, rho_max: f64) -> Result<Coercivity> {
    check_positive(r)?;
    if !(rho_max > 2.0 * r) {
        return Err(Error::Precondition(format!("rho_max = {rho_max} must exceed 2r = {}", 2.0 * r)));
    }
    let near = near_branch_grid(r, COERCIVITY_SAMPLES)
        .into_iter()
        .map(|rho| law.bregman_ratio(rho, r))
        .fold(f64::INFINITY, f64::min);
    let mut far = f64::INFINITY;
    for rho in far_branch_grid(r, rho_max, COERCIVITY_SAMPLES) {
        let b = law.bregman(rho, r)?.value;
        far = far.min(b / (1.0 + rho.powf(law.gamma())));
    }
    Ok(Coercivity { near, far })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Composite Simpson rule, independent of the closed forms above.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + k as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn pressure_examples() {
        let law = PressureLaw::power(2.0, 1.0).unwrap();
        assert_eq!(law.pressure(0.0).unwrap(), 0.0);
        assert_eq!(law.pressure(3.0).unwrap(), 9.0);
        let law = PressureLaw::power(1.4, 1.0).unwrap();
        // 2^1.4 evaluated at 30 digits
        assert_relative_eq!(law.pressure(2.0).unwrap(), 2.639_015_821_545_788_5, max_relative = 1e-14);
        assert!(matches!(law.pressure(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn potential_matches_quadrature_definition() {
        let law = PressureLaw::power(2.0, 1.0).unwrap();
        assert_eq!(law.potential(1.0).unwrap(), 0.0);
        assert_eq!(law.potential(2.0).unwrap(), 2.0);
        let quad = 2.0 * simpson(|z| law.pressure_unchecked(z) / (z * z), 1.0, 2.0, 2000);
        assert_relative_eq!(quad, 2.0, max_relative = 1e-12);

        let law = PressureLaw::power(5.0 / 3.0, 1.0).unwrap();
        assert_eq!(law.potential(0.0).unwrap(), 0.0);
        for rho in [0.3, 1.7, 4.0] {
            let quad = if rho >= 1.0 {
                rho * simpson(|z| law.pressure_unchecked(z) / (z * z), 1.0, rho, 4000)
            } else {
                -rho * simpson(|z| law.pressure_unchecked(z) / (z * z), rho, 1.0, 4000)
            };
            assert_relative_eq!(law.potential(rho).unwrap(), quad, max_relative = 1e-10);
        }
    }

    #[test]
    fn identity_defect_examples() {
        let cases = [(2.0, 1.0, 2.0), (1.4, 0.7, 5.0), (3.0, 2.0, 0.1)];
        for (g, a, r) in cases {
            let law = PressureLaw::power(g, a).unwrap();
            let d = law.potential_identity_defect(r).unwrap();
            assert!(d.abs() <= 1e-12 * law.pressure(r).unwrap(), "{g} {a} {r}: {d}");
        }
    }

    #[test]
    fn pressure_time_derivative_identity() {
        // d/dt p(r(t)) = r d/dt H'(r(t)) for r(t) = 2 + sin t, by centered differences
        let law = PressureLaw::power(5.0 / 3.0, 1.3).unwrap();
        let r = |t: f64| 2.0 + t.sin();
        let mut defects = Vec::new();
        for dt in [1e-2, 5e-3] {
            let mut worst: f64 = 0.0;
            for k in 0..20 {
                let t = 0.3 * k as f64;
                let dp = (law.pressure_unchecked(r(t + dt)) - law.pressure_unchecked(r(t - dt))) / (2.0 * dt);
                let dh = (law.dpotential_unchecked(r(t + dt)) - law.dpotential_unchecked(r(t - dt))) / (2.0 * dt);
                worst = worst.max((dp - r(t) * dh).abs());
            }
            defects.push(worst);
        }
        assert!(defects[0] < 1e-3);
        let ratio = defects[0] / defects[1];
        assert!(ratio > 3.5 && ratio < 4.5, "expected O(dt^2) decay, ratio {ratio}");
    }

    #[test]
    fn bregman_examples() {
        let law = PressureLaw::power(2.0, 1.0).unwrap();
        assert_eq!(law.bregman(3.0, 1.0).unwrap().value, 4.0);
        for rho in [0.2, 1.0, 7.5] {
            let l = PressureLaw::power(1.4, 0.5).unwrap();
            assert_eq!(l.bregman(rho, rho).unwrap().value, 0.0);
        }
        assert!(matches!(law.bregman(1.0, 0.0), Err(Error::Domain(_))));

        // integral remainder form, 30-digit reference 0.7622031559045984...
        let law = PressureLaw::power(5.0 / 3.0, 1.0).unwrap();
        let direct = law.bregman(2.0, 1.0).unwrap().value;
        let quad = simpson(|s| (2.0 - s) * law.d2potential_unchecked(s), 1.0, 2.0, 4000);
        assert_relative_eq!(direct, quad, max_relative = 1e-10);
        assert_relative_eq!(direct, 0.762_203_155_904_598_4, max_relative = 1e-13);
    }

    #[test]
    fn bregman_series_and_direct_branches_agree() {
        let law = PressureLaw::power(1.4, 1.0).unwrap();
        let naive = |rho: f64, r: f64| {
            law.potential_unchecked(rho) - law.dpotential_unchecked(r) * (rho - r) - law.potential_unchecked(r)
        };
        for (rho, r) in [(1.2, 1.0), (1.26, 1.0), (0.76, 1.0), (0.74, 1.0), (3.0, 2.0)] {
            assert_relative_eq!(law.bregman(rho, r).unwrap().value, naive(rho, r), max_relative = 1e-9);
        }
    }

    #[test]
    fn coercivity_examples() {
        let law = PressureLaw::power(2.0, 1.0).unwrap();
        let c = coercivity_constant(&law, 1.0, 10.0).unwrap();
        assert_eq!(c.near, 1.0);
        // (rho-1)^2/(1+rho^2) decreases on [0,1] and increases on [1,inf): minimum
        // over [0,1/2] u [2,10] is attained at the inner endpoints, both 1/5
        assert_relative_eq!(c.far, 0.2, max_relative = 1e-12);

        let law = PressureLaw::power(5.0 / 3.0, 1.0).unwrap();
        let c = coercivity_constant(&law, 2.0, 20.0).unwrap();
        assert!(c.value() > 0.0);
        assert!(coercivity_constant(&law, 2.0, 3.0).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PressureLaw::power(1.0, 1.0).is_err());
        assert!(PressureLaw::power(2.0, 0.0).is_err());
        assert!(PressureLaw::power(f64::NAN, 1.0).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn bregman_nonnegative(g in prop::sample::select(vec![1.4, 5.0/3.0, 2.0, 3.0]),
                                   a in 0.1f64..5.0, rho in 0.0f64..50.0, r in 1e-3f64..50.0) {
                let law = PressureLaw::power(g, a).unwrap();
                let b = law.bregman(rho, r).unwrap().value;
                prop_assert!(b >= 0.0);
                if (rho - r).abs() > 1e-6 * r {
                    prop_assert!(b > 0.0);
                }
            }

            #[test]
            fn pressure_monotone(g in 1.05f64..4.0, a in 0.1f64..5.0, x in 0.0f64..100.0, dx in 1e-6f64..10.0) {
                let law = PressureLaw::power(g, a).unwrap();
                prop_assert!(law.pressure(x + dx).unwrap() > law.pressure(x).unwrap());
            }
        }
    }
}
