//! Physical parameters, the tanh detuning sweep, and the photoassociation
//! Hamiltonian in both its full truncated-ladder form and its 2x2
//! invariant-subspace reduction.
//!
//! Energies are measured in units of the Raman coupling `chi` and times in
//! units of `1/chi`. Inside each subspace `V_n = span{|e,n>, |g,n+1>}` the basis
//! order is `(|e,n>, |g,n+1>)`; `|e>` is the two-atom state and `|g>` the atom
//! vacuum, so `|g,n+1>` holds one more molecule.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Model constants of a single lattice site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Atomic energy.
    pub omega_b: f64,
    /// Molecular energy.
    pub omega_f: f64,
    /// Atom-atom interaction.
    pub u_f: f64,
    /// Atom-molecule interaction.
    pub u_x: f64,
    /// Molecule-molecule interaction.
    pub u_b: f64,
    /// Raman coupling; positive, and the energy unit of every CLI input.
    pub chi: f64,
    /// Sweep amplitude: the detuning runs between `base +- 2k`.
    pub k: f64,
    /// Sweep timescale `T`; zero means an instantaneous step.
    pub t_ramp: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            omega_b: 0.0,
            omega_f: 0.0,
            u_f: 0.0,
            u_x: 0.0,
            u_b: 0.0,
            chi: 1.0,
            k: 20.0,
            t_ramp: 1.0,
        }
    }
}

impl PhysicalParams {
    /// Unit coupling, no interactions, and the given sweep.
    pub fn sweep(k: f64, t_ramp: f64) -> Self {
        Self {
            k,
            t_ramp,
            ..Self::default()
        }
    }

    /// Sets the scattering combination `u_x - u_b/2` to `m` (via `u_x = m`, `u_b = 0`).
    pub fn with_scattering(mut self, m: f64) -> Self {
        self.u_x = m;
        self.u_b = 0.0;
        self
    }

    /// The only interaction combination that enters a block: `u_x - u_b/2`.
    pub fn scattering(&self) -> f64 {
        self.u_x - 0.5 * self.u_b
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_b", self.omega_b),
            ("omega_f", self.omega_f),
            ("u_f", self.u_f),
            ("u_x", self.u_x),
            ("u_b", self.u_b),
            ("chi", self.chi),
            ("k", self.k),
            ("t_ramp", self.t_ramp),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {v}")));
            }
        }
        if self.chi <= 0.0 {
            return Err(Error::param("chi", "must be positive"));
        }
        if self.k <= 0.0 {
            return Err(Error::param("k", "must be positive"));
        }
        if self.t_ramp < 0.0 {
            return Err(Error::param("t_ramp", "must be non-negative"));
        }
        Ok(())
    }

    /// Time-independent part of the detuning, `2 omega_f - omega_b + u_f`.
    pub fn detuning_base(&self) -> f64 {
        2.0 * self.omega_f - self.omega_b + self.u_f
    }

    /// Dressed molecular frequency `omega_b + Delta(t) + u_x`.
    pub fn big_omega_b(&self, t: f64) -> f64 {
        self.omega_b + detuning(t, self) + self.u_x
    }

    /// Dressed pair frequency `omega_f + u_f/2`.
    pub fn big_omega_f(&self) -> f64 {
        self.omega_f + 0.5 * self.u_f
    }
}

/// `tanh(t/T)`, degrading to a sign step (zero at `t = 0`) when `T = 0`.
pub fn sweep_profile(t: f64, t_ramp: f64) -> f64 {
    if t_ramp == 0.0 {
        if t == 0.0 {
            0.0
        } else {
            t.signum()
        }
    } else {
        (t / t_ramp).tanh()
    }
}

/// Raman detuning `Delta(t) = 2 omega_f - omega_b + u_f - 2k tanh(t/T)`.
pub fn detuning(t: f64, p: &PhysicalParams) -> f64 {
    p.detuning_base() - 2.0 * p.k * sweep_profile(t, p.t_ramp)
}

/// Block coefficients `a = n_b (u_x - u_b/2)` and `c = chi sqrt(n_b + 1)`.
pub fn block_coeffs(n_b: usize, p: &PhysicalParams) -> (f64, f64) {
    let n = n_b as f64;
    (n * p.scattering(), p.chi * (n + 1.0).sqrt())
}

/// The two-level problem living in `V_{n_b}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSystem {
    pub n_b: usize,
    pub a: f64,
    pub c: f64,
    pub params: PhysicalParams,
}

impl BlockSystem {
    pub fn new(n_b: usize, params: &PhysicalParams) -> Result<Self> {
        params.validate()?;
        let (a, c) = block_coeffs(n_b, params);
        Ok(Self {
            n_b,
            a,
            c,
            params: *params,
        })
    }

    /// Half splitting of the diabatic energies, `a + k tanh(t/T)`.
    pub fn diabatic_offset(&self, t: f64) -> f64 {
        self.a + self.params.k * sweep_profile(t, self.params.t_ramp)
    }

    pub fn hamiltonian(&self, t: f64) -> TwoByTwo {
        block_hamiltonian(self, t)
    }

    /// `k - |a| >= ratio * c`: the asymptotic eigenstates are close to the
    /// number states and the sweep crosses resonance well inside its range.
    pub fn in_regime(&self, ratio: f64) -> bool {
        self.params.k - self.a.abs() >= ratio * self.c
    }
}

/// A 2x2 complex matrix in the basis `(|e,n_b>, |g,n_b+1>)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoByTwo(pub [[Complex64; 2]; 2]);

impl TwoByTwo {
    pub fn real(h00: f64, h01: f64, h10: f64, h11: f64) -> Self {
        let c = |x| Complex64::new(x, 0.0);
        TwoByTwo([[c(h00), c(h01)], [c(h10), c(h11)]])
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[i][j]
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    /// Largest entrywise distance between the matrix and its adjoint.
    pub fn hermitian_deviation(&self) -> f64 {
        let m = &self.0;
        let off = (m[0][1] - m[1][0].conj()).norm();
        off.max(m[0][0].im.abs() * 2.0).max(m[1][1].im.abs() * 2.0)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `self + shift * I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut m = self.0;
        m[0][0] += shift;
        m[1][1] += shift;
        TwoByTwo(m)
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    pub fn max_entry_distance(&self, other: &TwoByTwo) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }
}

/// Traceless block `[[d, c], [c, -d]]` with `d = a + k tanh(t/T)`.
pub fn block_hamiltonian(sys: &BlockSystem, t: f64) -> TwoByTwo {
    let d = sys.diabatic_offset(t);
    TwoByTwo::real(d, sys.c, sys.c, -d)
}

/// Position of `|g,n>` in the full basis `{|g,0>, |e,0>, |g,1>, |e,1>, ...}`.
pub fn index_g(n: usize) -> usize {
    2 * n
}

/// Position of `|e,n>` in the full basis.
pub fn index_e(n: usize) -> usize {
    2 * n + 1
}

/// Full single-site Hamiltonian truncated at `n_max` molecules.
///
/// The pair states carry `sigma_z = +1` (`|e>`) and `-1` (`|g>`). Only
/// `|e,n> <-> |g,n+1>` is coupled, so the matrix splits into the blocks `V_n`
/// for `n < n_max` plus the unpaired edge states `|g,0>` and `|e,n_max>`.
pub fn full_hamiltonian(n_max: usize, t: f64, p: &PhysicalParams) -> Result<DMatrix<f64>> {
    if n_max < 1 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    p.validate()?;
    let dim = 2 * (n_max + 1);
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let big_b = p.big_omega_b(t);
    let big_f = p.big_omega_f();
    for n in 0..=n_max {
        let nf = n as f64;
        let molecular = big_b * nf + 0.5 * p.u_b * nf * (nf - 1.0);
        for (idx, sz) in [(index_g(n), -1.0), (index_e(n), 1.0)] {
            h[(idx, idx)] = molecular + sz * (big_f + p.u_x * nf);
        }
        if n < n_max {
            // chi b^dag sigma_- and its adjoint
            let coupling = p.chi * (nf + 1.0).sqrt();
            h[(index_g(n + 1), index_e(n))] = coupling;
            h[(index_e(n), index_g(n + 1))] = coupling;
        }
    }
    Ok(h)
}

/// Extracts `V_{n_b}` from a full Hamiltonian and removes its mean diagonal.
pub fn reduce_to_block(full: &DMatrix<f64>, n_b: usize) -> Result<TwoByTwo> {
    if full.nrows() != full.ncols() || !full.nrows().is_multiple_of(2) || full.nrows() < 4 {
        return Err(Error::param("full", "expected a square ladder matrix"));
    }
    let n_max = full.nrows() / 2 - 1;
    if n_b >= n_max {
        return Err(Error::SubspaceOutOfRange { n_b, n_max });
    }
    let (e, g) = (index_e(n_b), index_g(n_b + 1));
    let mean = 0.5 * (full[(e, e)] + full[(g, g)]);
    Ok(TwoByTwo::real(
        full[(e, e)] - mean,
        full[(e, g)],
        full[(g, e)],
        full[(g, g)] - mean,
    ))
}

/// Unshifted `V_{n_b}` block, trace included.
pub fn extract_block(full: &DMatrix<f64>, n_b: usize) -> Result<TwoByTwo> {
    let reduced = reduce_to_block(full, n_b)?;
    let (e, g) = (index_e(n_b), index_g(n_b + 1));
    Ok(reduced.shifted(0.5 * (full[(e, e)] + full[(g, g)])))
}
