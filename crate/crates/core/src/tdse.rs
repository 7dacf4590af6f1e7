//! Brute-force Schrodinger propagation inside one invariant subspace.
//!
//! This is the independent check on the closed form in [`crate::dk2`]: the
//! state starts on the instantaneous eigenvector connected to `|e,n_b>` at
//! `t = -mT`, is integrated with an adaptive Dormand-Prince 5(4) pair to
//! `t = +mT`, and is then projected onto both the diabatic and the
//! instantaneous (adiabatic) basis.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dk2::survival_probability;
use crate::error::{Error, Result};
use crate::model::{BlockSystem, PhysicalParams, TwoByTwo};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub type State = [Complex64; 2];

/// Amplitudes on `(|e,n_b>, |g,n_b+1>)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudePair {
    pub amp_e: Complex64,
    pub amp_g: Complex64,
}

impl AmplitudePair {
    pub fn from_state(s: State) -> Self {
        Self {
            amp_e: s[0],
            amp_g: s[1],
        }
    }

    pub fn state(&self) -> State {
        [self.amp_e, self.amp_g]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp_e.norm_sqr() + self.amp_g.norm_sqr()
    }
}

fn inner(u: &State, v: &State) -> Complex64 {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}

fn normalized(v: State) -> State {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    // phase convention: first nonzero component real and positive
    let p = if v[0].norm() > 0.0 { 0 } else { 1 };
    let phase = v[p].conj() / v[p].norm();
    let mut out = [v[0] * phase / n, v[1] * phase / n];
    out[p] = Complex64::new(v[p].norm() / n, 0.0);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: State,
}

/// Eigenpairs of a Hermitian 2x2 matrix, largest eigenvalue first.
///
/// Each eigenvector is built from whichever matrix row avoids cancellation,
/// so nearly diagonal inputs keep full relative accuracy.
pub fn instantaneous_eigenbasis(h: &TwoByTwo) -> Result<[Eigenpair; 2]> {
    let deviation = h.hermitian_deviation();
    if deviation > 1e-12 * h.max_abs_entry().max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    let (h00, h11) = (h.get(0, 0).re, h.get(1, 1).re);
    let h01 = h.get(0, 1);
    let h10 = h01.conj();
    let mean = 0.5 * (h00 + h11);
    let d = 0.5 * (h00 - h11);
    let r = d.hypot(h01.norm());
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if r == 0.0 {
        return Ok([
            Eigenpair { value: mean, vector: [one, zero] },
            Eigenpair { value: mean, vector: [zero, one] },
        ]);
    }
    let (upper, lower) = if d >= 0.0 {
        ([Complex64::from(d + r), h10], [-h01, Complex64::from(d + r)])
    } else {
        ([h01, Complex64::from(r - d)], [Complex64::from(r - d), -h10])
    };
    Ok([
        Eigenpair { value: mean + r, vector: normalized(upper) },
        Eigenpair { value: mean - r, vector: normalized(lower) },
    ])
}

/// Result of a single adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evolution {
    pub state: State,
    pub steps: usize,
    pub rejected: usize,
    /// Largest `| |psi|^2 - 1 |` seen on an accepted step.
    pub max_norm_drift: f64,
}

// Dormand-Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (coef, k) in terms {
        out[0] += k[0] * (h * coef);
        out[1] += k[1] * (h * coef);
    }
    out
}

/// Integrates `i d psi/dt = H(t) psi` from `t0` to `t1` (either direction).
///
/// Steps are accepted on error per unit step,
/// `|err_i| <= tol (1 + |psi_i|) |h| / |t1 - t0|`, so the local errors of a
/// whole run add up to about `tol` instead of `tol` per step.
pub fn evolve<F>(hamiltonian: F, psi0: State, t0: f64, t1: f64, tol: f64) -> Result<Evolution>
where
    F: Fn(f64) -> TwoByTwo,
{
    let rhs = |t: f64, y: &State| -> State {
        let hy = hamiltonian(t).apply(*y);
        [-I * hy[0], -I * hy[1]]
    };
    let span = t1 - t0;
    let norm0 = psi0[0].norm_sqr() + psi0[1].norm_sqr();
    let mut out = Evolution {
        state: psi0,
        steps: 0,
        rejected: 0,
        max_norm_drift: 0.0,
    };
    if span == 0.0 {
        return Ok(out);
    }
    let dir = span.signum();
    let scale = hamiltonian(t0).max_abs_entry().max(hamiltonian(t1).max_abs_entry());
    let mut h = dir * span.abs().min(0.05 / scale.max(1e-300));
    let mut t = t0;
    let mut y = psi0;
    let mut k1 = rhs(t, &y);

    loop {
        let remaining = t1 - t;
        if remaining * dir <= 0.0 {
            break;
        }
        let last = (h * dir) >= (remaining * dir);
        if last {
            h = remaining;
        }
        let k2 = rhs(t + C2 * h, &axpy(&y, &[(A21, &k1)], h));
        let k3 = rhs(t + C3 * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = rhs(t + C4 * h, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = rhs(
            t + C5 * h,
            &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
        );
        let k6 = rhs(
            t + h,
            &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h),
        );
        let y_new = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let t_new = if last { t1 } else { t + h };
        let k7 = rhs(t_new, &y_new);

        let mut err = 0.0_f64;
        for i in 0..2 {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = tol * (1.0 + y[i].norm().max(y_new[i].norm())) * (h / span).abs();
            err = err.max(e.norm() / sc);
        }

        if err <= 1.0 {
            t = t_new;
            y = y_new;
            k1 = k7;
            out.steps += 1;
            let drift = ((y[0].norm_sqr() + y[1].norm_sqr()) - norm0).abs();
            out.max_norm_drift = out.max_norm_drift.max(drift);
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.25)).clamp(0.2, 5.0) };
            h *= grow;
        } else {
            out.rejected += 1;
            h *= (0.9 * err.powf(-0.25)).clamp(0.1, 0.9);
        }
        if h.abs() <= 1e-14 * t.abs().max(span.abs()) {
            return Err(Error::StepSizeUnderflow {
                t,
                h,
                steps: out.steps,
            });
        }
    }
    out.state = y;
    Ok(out)
}

/// How the state is prepared at `t = -mT`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialState {
    /// Instantaneous eigenvector connected to `|e,n_b>`.
    #[default]
    Adiabatic,
    /// The bare number state `|e,n_b>`.
    Bare,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationSettings {
    /// Integration runs over `[-mT, +mT]`.
    pub window_multiple: f64,
    pub tol: f64,
    pub initial: InitialState,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        Self {
            window_multiple: 8.0,
            tol: 1e-10,
            initial: InitialState::Adiabatic,
        }
    }
}

impl PropagationSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_multiple >= 4.0) || !self.window_multiple.is_finite() {
            return Err(Error::param("window", "window multiple must be at least 4"));
        }
        if !(1e-12..=1e-6).contains(&self.tol) {
            return Err(Error::param("tol", "tolerance must lie in [1e-12, 1e-6]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationReport {
    pub final_state: AmplitudePair,
    /// Population left in `|e,n_b>`.
    pub diabatic_survival: f64,
    /// Population on the adiabatic branch the state started on.
    pub adiabatic_survival: f64,
    /// Population transferred to the other adiabatic branch. This is the
    /// quantity the closed-form survival `|D1|^2` describes.
    pub nonadiabatic: f64,
    pub norm_drift: f64,
    pub window_multiple: f64,
    pub step_count: usize,
}

/// Propagates `sys` with default settings apart from the window and tolerance.
pub fn propagate(sys: &BlockSystem, window_multiple: f64, tol: f64) -> Result<PropagationReport> {
    propagate_with(
        sys,
        &PropagationSettings {
            window_multiple,
            tol,
            ..PropagationSettings::default()
        },
    )
}

pub fn propagate_with(sys: &BlockSystem, settings: &PropagationSettings) -> Result<PropagationReport> {
    settings.validate()?;
    sys.params.validate()?;
    let t_end = settings.window_multiple * sys.params.t_ramp;
    // with T = 0 the sweep is a step: both asymptotic Hamiltonians, no time in between
    let (h_start, h_end) = if sys.params.t_ramp == 0.0 {
        let k = sys.params.k;
        (
            TwoByTwo::real(sys.a - k, sys.c, sys.c, k - sys.a),
            TwoByTwo::real(sys.a + k, sys.c, sys.c, -(sys.a + k)),
        )
    } else {
        (sys.hamiltonian(-t_end), sys.hamiltonian(t_end))
    };

    let start = instantaneous_eigenbasis(&h_start)?;
    // branches never cross for c > 0, so eigenvalue rank identifies the branch
    let branch = if start[0].vector[0].norm() >= start[1].vector[0].norm() { 0 } else { 1 };
    let psi0 = match settings.initial {
        InitialState::Adiabatic => start[branch].vector,
        InitialState::Bare => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    };

    let evolution = if sys.params.t_ramp == 0.0 {
        Evolution {
            state: psi0,
            steps: 0,
            rejected: 0,
            max_norm_drift: 0.0,
        }
    } else {
        evolve(|t| sys.hamiltonian(t), psi0, -t_end, t_end, settings.tol)?
    };
    let limit = 10.0 * settings.tol;
    if evolution.max_norm_drift > limit {
        return Err(Error::ToleranceNotMet {
            norm_drift: evolution.max_norm_drift,
            limit,
        });
    }

    let end = instantaneous_eigenbasis(&h_end)?;
    let psi = evolution.state;
    Ok(PropagationReport {
        final_state: AmplitudePair::from_state(psi),
        diabatic_survival: psi[0].norm_sqr(),
        adiabatic_survival: inner(&end[branch].vector, &psi).norm_sqr(),
        nonadiabatic: inner(&end[1 - branch].vector, &psi).norm_sqr(),
        norm_drift: evolution.max_norm_drift,
        window_multiple: settings.window_multiple,
        step_count: evolution.steps,
    })
}

/// One oracle grid point: subspace index plus model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OraclePoint {
    pub n_b: usize,
    pub params: PhysicalParams,
}

/// Minimum `(k - |a|) / c` for a point to be compared.
pub const REGIME_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub point: OraclePoint,
    pub analytic: f64,
    pub numeric: f64,
    pub diabatic: f64,
    pub deviation: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub comparisons: Vec<Comparison>,
    pub skipped: Vec<OraclePoint>,
    pub max_deviation: f64,
    /// Index into `comparisons` of the worst point.
    pub worst: Option<usize>,
    pub threshold: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.threshold
    }

    pub fn worst_comparison(&self) -> Option<&Comparison> {
        self.worst.map(|i| &self.comparisons[i])
    }
}

/// Compares the closed-form survival against the propagated non-adiabatic
/// population on every in-regime point; points with `k - |a| < 10c` are
/// listed in `skipped`.
pub fn verify_dk2(
    grid: &[OraclePoint],
    settings: &PropagationSettings,
    threshold: f64,
) -> Result<VerifyReport> {
    settings.validate()?;
    let mut inside = Vec::new();
    let mut skipped = Vec::new();
    for point in grid {
        let sys = BlockSystem::new(point.n_b, &point.params)?;
        if sys.in_regime(REGIME_RATIO) {
            inside.push((*point, sys));
        } else {
            skipped.push(*point);
        }
    }
    let comparisons = inside
        .par_iter()
        .map(|(point, sys)| -> Result<Comparison> {
            let report = propagate_with(sys, settings)?;
            let analytic = survival_probability(sys.a, sys.params.k, sys.c, sys.params.t_ramp)?;
            Ok(Comparison {
                point: *point,
                analytic,
                numeric: report.nonadiabatic,
                diabatic: report.diabatic_survival,
                deviation: (analytic - report.nonadiabatic).abs(),
                steps: report.step_count,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut worst = None;
    let mut max_deviation = 0.0;
    for (i, c) in comparisons.iter().enumerate() {
        if worst.is_none() || c.deviation > max_deviation {
            worst = Some(i);
            max_deviation = c.deviation;
        }
    }
    Ok(VerifyReport {
        comparisons,
        skipped,
        max_deviation,
        worst,
        threshold,
    })
}
