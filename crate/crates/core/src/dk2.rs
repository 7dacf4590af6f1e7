//! Closed-form transition probabilities for the tanh sweep with constant
//! coupling, their Landau-Zener and sudden limits, and the entanglement
//! entropy of the resulting atom-molecule superposition.
//!
//! The survival `|D1|^2` is a ratio of four hyperbolic sines whose arguments
//! reach `1e6` in practical sweeps, so it is evaluated as
//! `exp(-2 pi T gap + sum of remainders)`, where the remainder
//! `ln sinh(y) - y = ln((1 - e^{-2y}) / 2)` never overflows.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{block_coeffs, PhysicalParams};

/// The four energies entering the closed form, plus the common gap
/// `e_a - e_minus = e_e - e_plus = (e_e + e_a)/2 - k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicEnergies {
    pub e_a: f64,
    pub e_e: f64,
    pub e_plus: f64,
    pub e_minus: f64,
    pub gap: f64,
}

/// `e_a = |(a-k, c)|`, `e_e = |(a+k, c)|`, `e_pm = k +- (e_e - e_a)/2`.
///
/// `e_pm` and the gap are assembled from non-negative terms only
/// (`e - |x| = c^2 / (e + |x|)`), so a weak coupling does not cancel away.
pub fn characteristic_energies(a: f64, k: f64, c: f64) -> CharacteristicEnergies {
    let s = a.abs();
    let low = (s - k).abs();
    let high = s + k;
    let e_low = low.hypot(c);
    let e_high = high.hypot(c);
    let c2 = c * c;
    let r_low = if e_low + low > 0.0 { c2 / (e_low + low) } else { 0.0 };
    let r_high = if e_high + high > 0.0 { c2 / (e_high + high) } else { 0.0 };

    let gap = (s - k).max(0.0) + 0.5 * (r_low + r_high);
    let sum = e_low + e_high;
    // e_e + e_a - 2|a| and e_e + e_a + 2|a|
    let lower = 2.0 * (k - s).max(0.0) + r_low + r_high;
    let upper = sum + 2.0 * s;
    let (e_small, e_large) = (k * lower / sum, k * upper / sum);

    if a >= 0.0 {
        CharacteristicEnergies {
            e_a: e_low,
            e_e: e_high,
            e_plus: e_large,
            e_minus: e_small,
            gap,
        }
    } else {
        CharacteristicEnergies {
            e_a: e_high,
            e_e: e_low,
            e_plus: e_small,
            e_minus: e_large,
            gap,
        }
    }
}

fn check_inputs(a: f64, k: f64, c: f64, t_ramp: f64) -> Result<()> {
    for (name, v) in [("a", a), ("k", k), ("c", c), ("t_ramp", t_ramp)] {
        if !v.is_finite() {
            return Err(Error::param(name, format!("must be finite, got {v}")));
        }
    }
    if k <= 0.0 {
        return Err(Error::param("k", "must be positive"));
    }
    if t_ramp < 0.0 {
        return Err(Error::param("t_ramp", "must be non-negative"));
    }
    Ok(())
}

/// `ln sinh(y) - y` for `y >= 0`; `-inf` at zero.
fn ln_sinh_remainder(y: f64) -> f64 {
    (-0.5 * (-2.0 * y).exp_m1()).ln()
}

/// `ln[sinh(x e_small) / sinh(x e_big)]` with `e_big - e_small = gap`.
/// The `0/0` case `e_big = 0` (zero coupling at `|a| = k`) is taken as 1.
fn ln_sinh_ratio(x: f64, e_small: f64, e_big: f64, gap: f64) -> f64 {
    if e_big == 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return (e_small / e_big).ln();
    }
    -x * gap + ln_sinh_remainder(x * e_small) - ln_sinh_remainder(x * e_big)
}

/// Natural log of the survival `|D1|^2`; `-inf` when the survival is exactly zero.
pub fn ln_survival_probability(a: f64, k: f64, c: f64, t_ramp: f64) -> Result<f64> {
    check_inputs(a, k, c, t_ramp)?;
    let e = characteristic_energies(a, k, c);
    let x = PI * t_ramp;
    let ln = ln_sinh_ratio(x, e.e_minus, e.e_a, e.gap) + ln_sinh_ratio(x, e.e_plus, e.e_e, e.gap);
    Ok(ln.min(0.0))
}

/// `|D1|^2 = sinh(pi T E+) sinh(pi T E-) / (sinh(pi T E_a) sinh(pi T E_e))`:
/// the probability of leaving the sweep on the opposite adiabatic branch,
/// i.e. of remaining in `|e,n_b>` across the crossing.
///
/// At `T = 0` this is the sudden limit `E+ E- / (E_a E_e)`.
pub fn survival_probability(a: f64, k: f64, c: f64, t_ramp: f64) -> Result<f64> {
    Ok(ln_survival_probability(a, k, c, t_ramp)?.exp().clamp(0.0, 1.0))
}

/// Direct evaluation of the sinh ratio. Overflows once any argument passes
/// about 710 and is `NaN` at `T = 0`; kept as a reference path.
pub fn survival_probability_naive(a: f64, k: f64, c: f64, t_ramp: f64) -> f64 {
    let e = characteristic_energies(a, k, c);
    let x = PI * t_ramp;
    (x * e.e_plus).sinh() * (x * e.e_minus).sinh() / ((x * e.e_a).sinh() * (x * e.e_e).sinh())
}

/// Landau-Zener survival `exp[-pi T c^2 / (k (1 - a^2/k^2))]`, valid when
/// `e^{kT} >> 1`.
pub fn lz_limit(a: f64, k: f64, c: f64, t_ramp: f64) -> Result<f64> {
    check_inputs(a, k, c, t_ramp)?;
    if a.abs() >= k {
        return Err(Error::NoCrossing { a_abs: a.abs(), k });
    }
    Ok((-PI * t_ramp * c * c / (k * (1.0 - (a / k).powi(2)))).exp())
}

/// Slope of the diabatic splitting `2k tanh(t/T)` at the crossing time `t0`
/// where `a + k tanh(t0/T) = 0`.
pub fn crossing_sweep_rate(a: f64, k: f64, t_ramp: f64) -> Result<f64> {
    if a.abs() >= k {
        return Err(Error::NoCrossing { a_abs: a.abs(), k });
    }
    let s = -a / k; // tanh(t0 / T)
    Ok(2.0 * k * (1.0 - s * s) / t_ramp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntropyMode {
    /// `-sum |D_i| ln |D_i|`, maximum `ln 2 / sqrt 2`.
    #[default]
    Amplitude,
    /// `-sum |D_i|^2 ln |D_i|^2`, maximum `ln 2`.
    Probability,
}

impl FromStr for EntropyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude" => Ok(EntropyMode::Amplitude),
            "probability" => Ok(EntropyMode::Probability),
            other => Err(Error::param(
                "entropy_mode",
                format!("expected `amplitude` or `probability`, got `{other}`"),
            )),
        }
    }
}

impl fmt::Display for EntropyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntropyMode::Amplitude => "amplitude",
            EntropyMode::Probability => "probability",
        })
    }
}

fn x_ln_x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Entropy of the Schmidt pair `(|D1|, |D2|)`.
pub fn entanglement_entropy(d1_abs: f64, d2_abs: f64, mode: EntropyMode) -> Result<f64> {
    let norm = d1_abs * d1_abs + d2_abs * d2_abs;
    if !(norm - 1.0).abs().le(&1e-9) || d1_abs < 0.0 || d2_abs < 0.0 {
        return Err(Error::NotNormalized { norm });
    }
    let s = match mode {
        EntropyMode::Amplitude => -(x_ln_x(d1_abs) + x_ln_x(d2_abs)),
        EntropyMode::Probability => -(x_ln_x(d1_abs * d1_abs) + x_ln_x(d2_abs * d2_abs)),
    };
    Ok(s.max(0.0))
}

/// Outcome of one sweep through `V_{n_b}` starting in `|e,n_b>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionResult {
    pub n_b: usize,
    pub energies: CharacteristicEnergies,
    /// Probability of staying in `|e,n_b>` (two atoms, `n_b` molecules).
    pub d1_sq: f64,
    /// Probability of ending in `|g,n_b+1>` (one more molecule).
    pub d2_sq: f64,
    /// Molecule formation probability `P = 1 - |D1|^2`.
    pub p_mol: f64,
    pub entropy: f64,
}

pub fn transition_result(n_b: usize, p: &PhysicalParams, mode: EntropyMode) -> Result<TransitionResult> {
    p.validate()?;
    let (a, c) = block_coeffs(n_b, p);
    let ln_d1 = ln_survival_probability(a, p.k, c, p.t_ramp)?;
    let d1_sq = ln_d1.exp();
    // -expm1 keeps the small-P end accurate
    let d2_sq = (-ln_d1.exp_m1()).clamp(0.0, 1.0);
    let entropy = entanglement_entropy(d1_sq.sqrt(), d2_sq.sqrt(), mode)?;
    Ok(TransitionResult {
        n_b,
        energies: characteristic_energies(a, p.k, c),
        d1_sq,
        d2_sq,
        p_mol: d2_sq,
        entropy,
    })
}

/// Molecule formation probability for subspace `n_b`, with amplitude-form entropy.
pub fn molecular_probability(n_b: usize, p: &PhysicalParams) -> Result<TransitionResult> {
    transition_result(n_b, p, EntropyMode::Amplitude)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol
    }

    #[test]
    fn energy_examples() {
        let e = characteristic_energies(0.0, 5.0, 0.0);
        assert_eq!((e.e_a, e.e_e, e.e_plus, e.e_minus), (5.0, 5.0, 5.0, 5.0));
        let e = characteristic_energies(3.0, 5.0, 0.0);
        assert_eq!((e.e_a, e.e_e, e.e_plus, e.e_minus), (2.0, 8.0, 8.0, 2.0));
        let e = characteristic_energies(0.0, 4.0, 4.0);
        assert!(close(e.e_a, 4.0 * 2f64.sqrt(), 1e-14));
        assert!(close(e.e_e, 4.0 * 2f64.sqrt(), 1e-14));
        assert!(close(e.e_plus, 4.0, 1e-14) && close(e.e_minus, 4.0, 1e-14));
    }

    #[test]
    fn energies_match_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let k = rng.gen_range(0.01..100.0);
            let a = rng.gen_range(-2.0 * k..2.0 * k);
            let c = rng.gen_range(0.0..10.0);
            let e = characteristic_energies(a, k, c);
            let ea = ((a - k).powi(2) + c * c).sqrt();
            let ee = ((a + k).powi(2) + c * c).sqrt();
            let scale = 1e-13 * (1.0 + k + a.abs() + c);
            assert!(close(e.e_a, ea, scale));
            assert!(close(e.e_e, ee, scale));
            assert!(close(e.e_plus, k + (ee - ea) / 2.0, scale));
            assert!(close(e.e_minus, k - (ee - ea) / 2.0, scale));
        }
    }

    #[test]
    fn gap_identity_and_positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let k = 10f64.powf(rng.gen_range(-2.0..3.0));
            let a = rng.gen_range(-2.0 * k..2.0 * k);
            let c = 10f64.powf(rng.gen_range(-3.0..2.0));
            let e = characteristic_energies(a, k, c);
            assert!(close(e.e_a - e.e_minus, e.gap, 1e-12 * (1.0 + k)));
            assert!(close(e.e_e - e.e_plus, e.gap, 1e-12 * (1.0 + k)));
            assert!(close((e.e_e + e.e_a) / 2.0 - k, e.gap, 1e-12 * (1.0 + k)));
            assert!(e.gap > 0.0);
        }
    }

    #[test]
    fn survival_reference_value() {
        // 40-digit evaluation of sinh^2(2 pi) / sinh^2(0.1 pi sqrt(401))
        let expected = 0.984_424_308_863_528_8;
        let got = survival_probability(0.0, 20.0, 1.0, 0.1).unwrap();
        assert!(close(got, expected, 1e-14), "{got}");
    }

    #[test]
    fn sudden_limit() {
        let got = survival_probability(0.0, 20.0, 1.0, 0.0).unwrap();
        assert!(close(got, 400.0 / 401.0, 1e-15));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let k = rng.gen_range(0.1..50.0);
            let a = rng.gen_range(-2.0 * k..2.0 * k);
            let c = rng.gen_range(0.01..10.0);
            let e = characteristic_energies(a, k, c);
            let expected = e.e_plus * e.e_minus / (e.e_a * e.e_e);
            assert!(close(survival_probability(a, k, c, 0.0).unwrap(), expected, 1e-12));
        }
    }

    #[test]
    fn zero_coupling_and_degenerate_points() {
        for t in [0.0, 0.3, 5.0, 1e4] {
            assert_eq!(survival_probability(0.0, 5.0, 0.0, t).unwrap(), 1.0);
            assert!(close(survival_probability(2.0, 5.0, 0.0, t).unwrap(), 1.0, 1e-15));
            // c = 0, a = k: 0/0 in the first factor, continued as 1
            assert!(close(survival_probability(5.0, 5.0, 0.0, t).unwrap(), 1.0, 1e-15));
        }
        // without a crossing and without coupling the state never switches branch
        assert_eq!(survival_probability(7.0, 5.0, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(survival_probability(f64::NAN, 1.0, 1.0, 1.0).is_err());
        assert!(survival_probability(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(survival_probability(0.0, 1.0, 1.0, -1.0).is_err());
        assert!(survival_probability(0.0, 1.0, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn lz_examples() {
        let got = lz_limit(0.0, 20.0, 1.0, 2.0).unwrap();
        assert!(close(got, 0.730_402_691_048_645_6, 1e-15));
        assert_eq!(lz_limit(0.3, 20.0, 0.0, 2.0).unwrap(), 1.0);
        assert_eq!(lz_limit(0.3, 20.0, 1.0, 0.0).unwrap(), 1.0);
        assert!(matches!(lz_limit(20.0, 20.0, 1.0, 1.0), Err(Error::NoCrossing { .. })));
        // closed form agrees once e^{kT} >> 1
        let exact = survival_probability(0.0, 20.0, 1.0, 2.0).unwrap();
        assert!(close(exact, got, 1e-3));
    }

    #[test]
    fn lz_is_sweep_rate_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let k = rng.gen_range(1.0..50.0);
            let a = rng.gen_range(-0.9 * k..0.9 * k);
            let c = rng.gen_range(0.1..3.0);
            let t = rng.gen_range(0.01..5.0);
            let rate = crossing_sweep_rate(a, k, t).unwrap();
            let lz = lz_limit(a, k, c, t).unwrap();
            assert!(close(lz, (-2.0 * PI * c * c / rate).exp(), 1e-12));
        }
    }

    #[test]
    fn lz_consistency_in_validity_regime() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let k = rng.gen_range(2.0..100.0);
            let t = rng.gen_range(20.0 / k..20.0 / k * 10.0);
            let a = rng.gen_range(-0.5 * k..0.5 * k);
            let c = rng.gen_range(0.1..3.0);
            let exact = survival_probability(a, k, c, t).unwrap();
            let lz = lz_limit(a, k, c, t).unwrap();
            assert!(close(exact, lz, 0.01), "a={a} k={k} c={c} t={t}: {exact} vs {lz}");
        }
    }

    #[test]
    fn bounded_on_log_grid() {
        let logspace = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            (0..n)
                .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64))
                .collect()
        };
        let mut ts = vec![0.0];
        ts.extend(logspace(-3.0, 3.0, 13));
        for &t in &ts {
            for &k in &logspace(-2.0, 3.0, 11) {
                for &c in &logspace(-3.0, 2.0, 11) {
                    for frac in [-2.0, -1.0, -0.5, 0.0, 0.3, 1.0, 1.7, 2.0] {
                        let s = survival_probability(frac * k, k, c, t).unwrap();
                        assert!((0.0..=1.0).contains(&s), "t={t} k={k} c={c} a={}", frac * k);
                    }
                }
            }
        }
    }

    #[test]
    fn log_domain_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut compared = 0;
        for _ in 0..5000 {
            let k = 10f64.powf(rng.gen_range(-1.0..2.5));
            let a = rng.gen_range(-1.5 * k..1.5 * k);
            let c = 10f64.powf(rng.gen_range(-2.0..1.5));
            let t = 10f64.powf(rng.gen_range(-3.0..1.0));
            let naive = survival_probability_naive(a, k, c, t);
            let fast = survival_probability(a, k, c, t).unwrap();
            if naive.is_finite() && naive > 0.0 {
                compared += 1;
                assert!(((fast - naive) / naive).abs() <= 1e-12, "a={a} k={k} c={c} t={t}");
            }
        }
        assert!(compared > 1000);
    }

    #[test]
    fn huge_arguments_stay_finite() {
        for (a, k, c, t) in [
            (0.0, 1e3, 1.0, 318.0),
            (0.5, 20.0, 1.0, 1e4),
            (10.0, 100.0, 1e-3, 3e3),
            (0.0, 10.0, 100.0, 1e4),
        ] {
            let s = survival_probability(a, k, c, t).unwrap();
            assert!(s.is_finite() && (0.0..=1.0).contains(&s));
            assert!(!survival_probability_naive(a, k, c, t).is_finite() || t < 1.0);
        }
    }

    #[test]
    fn increasing_in_ramp_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let k = 10f64.powf(rng.gen_range(-1.0..2.0));
            let a = rng.gen_range(-0.9 * k..0.9 * k);
            let c = 10f64.powf(rng.gen_range(-1.0..1.0));
            let t = 10f64.powf(rng.gen_range(-2.0..1.0));
            let h = 1e-3 * t;
            let lo = ln_survival_probability(a, k, c, t).unwrap();
            let hi = ln_survival_probability(a, k, c, t + h).unwrap();
            assert!(hi < lo, "a={a} k={k} c={c} t={t}");
        }
    }

    #[test]
    fn increasing_in_molecule_number_in_regime() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut checked = 0;
        while checked < 300 {
            let m = rng.gen_range(0.0..1.0);
            let t = 10f64.powf(rng.gen_range(-2.0..0.5));
            let n = rng.gen_range(0..8usize);
            let k = rng.gen_range(10.0..200.0);
            let p = PhysicalParams::sweep(k, t).with_scattering(m);
            let (a, c) = block_coeffs(n + 1, &p);
            if k < 10.0 * (a + c) {
                continue;
            }
            let lo = molecular_probability(n, &p).unwrap().p_mol;
            let hi = molecular_probability(n + 1, &p).unwrap().p_mol;
            assert!(hi > lo, "n={n} k={k} m={m} t={t}");
            checked += 1;
        }
    }

    #[test]
    fn entropy_examples() {
        let h = 0.5f64.sqrt();
        assert_eq!(entanglement_entropy(1.0, 0.0, EntropyMode::Amplitude).unwrap(), 0.0);
        let s = entanglement_entropy(h, h, EntropyMode::Amplitude).unwrap();
        assert!(close(s, 2f64.ln() / 2f64.sqrt(), 1e-15));
        assert!(close(s, 0.4901, 1e-4));
        let s = entanglement_entropy(h, h, EntropyMode::Probability).unwrap();
        assert!(close(s, 2f64.ln(), 1e-15));
        assert!(matches!(
            entanglement_entropy(0.5, 0.5, EntropyMode::Amplitude),
            Err(Error::NotNormalized { .. })
        ));
        assert_eq!("probability".parse::<EntropyMode>().unwrap(), EntropyMode::Probability);
        assert!("bits".parse::<EntropyMode>().is_err());
    }

    #[test]
    fn figure_two_points() {
        let p = PhysicalParams::sweep(20.0, 5.0).with_scattering(0.5);
        assert!(molecular_probability(5, &p).unwrap().p_mol >= 0.99);
        let p = PhysicalParams::sweep(20.0, 30.0).with_scattering(0.5);
        assert!(molecular_probability(0, &p).unwrap().p_mol >= 0.99);
    }

    #[test]
    fn transition_result_consistency() {
        let p = PhysicalParams::sweep(10.0, 0.7).with_scattering(0.5);
        for n in 0..6 {
            let r = molecular_probability(n, &p).unwrap();
            assert!(close(r.d1_sq + r.d2_sq, 1.0, 1e-15));
            assert_eq!(r.p_mol, r.d2_sq);
            assert!(r.entropy >= 0.0);
        }
    }

    proptest! {
        #[test]
        fn mirror_symmetry(k in 0.01f64..500.0, frac in -2.0f64..2.0, c in 1e-3f64..50.0, t in 0.0f64..50.0) {
            let a = frac * k;
            let s1 = ln_survival_probability(a, k, c, t).unwrap();
            let s2 = ln_survival_probability(-a, k, c, t).unwrap();
            prop_assert!((s1 - s2).abs() <= 1e-12 * (1.0 + s1.abs()));
        }

        #[test]
        fn survival_in_unit_interval(k in 0.01f64..1e3, frac in -2.0f64..2.0, c in 1e-3f64..1e2, t in 0.0f64..1e3) {
            let s = survival_probability(frac * k, k, c, t).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
