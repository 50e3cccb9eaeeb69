//! Zero-temperature Born–Markov dynamics in the polaron frame, the exact
//! joint-evolution oracle, and reduction to the spin factor.

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{CompositeSpace, OperatorMatrix};
use crate::linalg::{eigh, CMatrix, HermitianEigen};
use crate::models::{interaction_terms, vacuum_interaction_norm, ModelParams};
use crate::perturbation::{build_h2_closed, build_h2_sw};
use crate::scalar::{real, RealScalar};

pub const TRACE_TOLERANCE: f64 = 1e-10;
pub const POSITIVITY_TOLERANCE: f64 = 1e-8;
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;
/// Upper bound on `h · (λ_max − λ_min)` for the fixed-step integrator.
pub const STABILITY_LIMIT: f64 = 0.1;

/// Trace-one Hermitian positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: RealScalar> {
    matrix: CMatrix<T>,
}

impl<T: RealScalar> DensityMatrix<T> {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(matrix: CMatrix<T>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.rows(),
                found: matrix.cols(),
            });
        }
        let rho = Self { matrix };
        rho.check_trace()?;
        let herm = rho.matrix.hermiticity_error();
        if herm > tolerance(HERMITICITY_TOLERANCE) {
            return Err(Error::NotHermitian(herm.as_f64()));
        }
        rho.check_positivity()?;
        Ok(rho)
    }

    /// `|ψ⟩⟨ψ|` for a normalized state.
    pub fn pure(psi: &[Complex<T>]) -> Result<Self> {
        let norm = CMatrix::inner(psi, psi).re;
        if (norm - T::one()).abs() > tolerance(TRACE_TOLERANCE) {
            return Err(Error::InvalidState(format!("state norm² {norm} is not 1")));
        }
        Ok(Self {
            matrix: CMatrix::outer(psi, psi),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim).scale(&real(T::one() / T::from_usize(dim))),
        }
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn trace(&self) -> Complex<T> {
        self.matrix.trace()
    }

    /// `⟨u|ρ|v⟩`.
    pub fn element(&self, u: &[Complex<T>], v: &[Complex<T>]) -> Complex<T> {
        self.matrix.sandwich(u, v)
    }

    pub fn min_eigenvalue(&self) -> Result<T> {
        Ok(eigh(&self.matrix)?.values[0])
    }

    pub fn check_trace(&self) -> Result<()> {
        let err = (self.trace() - Complex::one()).norm();
        if err > tolerance(TRACE_TOLERANCE) {
            return Err(Error::InvalidState(format!("trace deviates from 1 by {err}")));
        }
        Ok(())
    }

    pub fn check_positivity(&self) -> Result<()> {
        let min = self.min_eigenvalue()?;
        if min < -tolerance::<T>(POSITIVITY_TOLERANCE) {
            return Err(Error::InvalidState(format!("negative eigenvalue {min}")));
        }
        Ok(())
    }
}

fn tolerance<T: RealScalar>(f64_value: f64) -> T {
    // Single precision cannot resolve the double-precision monitors.
    T::lit(f64_value).max(T::epsilon() * T::lit(64.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<T: RealScalar = f64> {
    pub t_start: T,
    pub t_end: T,
    pub n_steps: usize,
    /// Steps between recorded samples.
    pub sample_stride: usize,
}

impl<T: RealScalar> TimeGrid<T> {
    pub fn new(t_start: T, t_end: T, n_steps: usize, sample_stride: usize) -> Result<Self> {
        let grid = Self {
            t_start,
            t_end,
            n_steps,
            sample_stride,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_end > self.t_start) {
            return Err(Error::InvalidArgument("time grid needs t_end > t_start".into()));
        }
        if self.n_steps == 0 || self.sample_stride == 0 {
            return Err(Error::InvalidArgument("n_steps and sample_stride must be positive".into()));
        }
        Ok(())
    }

    pub fn step(&self) -> T {
        (self.t_end - self.t_start) / T::from_usize(self.n_steps)
    }

    /// Step indices that are recorded: every `sample_stride`-th, always including 0.
    pub fn sample_steps(&self) -> Vec<usize> {
        (0..=self.n_steps).step_by(self.sample_stride).collect()
    }

    pub fn sample_times(&self) -> Vec<T> {
        self.sample_steps()
            .into_iter()
            .map(|k| self.t_start + self.step() * T::from_usize(k))
            .collect()
    }
}

/// Bath state. Only zero temperature (the phonon vacuum) is supported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BathSpec<T: RealScalar = f64> {
    pub temperature: T,
}

impl<T: RealScalar> BathSpec<T> {
    pub fn zero_temperature() -> Self {
        Self {
            temperature: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.temperature != T::zero() {
            return Err(Error::OutOfScope(format!(
                "finite temperature {} is not supported; only the vacuum bath is",
                self.temperature
            )));
        }
        Ok(())
    }

    /// `R0 = |0⟩⟨0|` on the phonon factor.
    pub fn state(&self, space: &CompositeSpace) -> Result<CMatrix<T>> {
        self.validate()?;
        let mut r = CMatrix::zeros(space.dim_phonon(), space.dim_phonon());
        r[(0, 0)] = Complex::one();
        Ok(r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorRoute {
    /// `K = −H2` from the closed-form couplings.
    Closed,
    /// `K = Σ_n ⟨0|H_I|n⟩⟨n|H_I|0⟩/ω_n` from the phonon sum at the model cutoff.
    SwSum,
}

/// Generator of `dρ̃/dt = i[K, ρ̃]` on the spin factor.
#[derive(Clone, Debug)]
pub struct MarkovianGenerator<T: RealScalar> {
    pub k: OperatorMatrix<T>,
    spread: T,
}

impl<T: RealScalar> MarkovianGenerator<T> {
    pub fn from_operator(k: OperatorMatrix<T>) -> Result<Self> {
        let e = eigh(&k)?;
        let spread = e.values[e.values.len() - 1] - e.values[0];
        Ok(Self { k, spread })
    }

    pub fn dim(&self) -> usize {
        self.k.rows()
    }

    /// Eigenvalue spread of `K`, the norm of the commutator superoperator.
    pub fn spread(&self) -> T {
        self.spread
    }

    /// `i[K, ρ]`.
    pub fn apply(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let c = self.k.commutator(rho).expect("matching dimensions");
        c.scale(&Complex::i())
    }
}

pub fn markovian_generator<T: RealScalar>(
    p: &ModelParams<T>,
    route: GeneratorRoute,
    bath: &BathSpec<T>,
) -> Result<MarkovianGenerator<T>> {
    bath.validate()?;
    let h2 = match route {
        GeneratorRoute::Closed => build_h2_closed(p)?,
        GeneratorRoute::SwSum => build_h2_sw(p)?,
    };
    MarkovianGenerator::from_operator(OperatorMatrix::hermitian(h2.scale(&real(-T::one()))))
}

#[derive(Clone, Debug)]
pub struct Trajectory<T: RealScalar> {
    pub times: Vec<T>,
    pub states: Vec<DensityMatrix<T>>,
}

/// Fixed-step RK4 for `dρ̃/dt = i[K, ρ̃]`, symmetrized every step, with trace
/// monitored every step and positivity at every sample.
pub fn evolve_markovian<T: RealScalar>(
    rho0: &DensityMatrix<T>,
    generator: &MarkovianGenerator<T>,
    grid: &TimeGrid<T>,
) -> Result<Trajectory<T>> {
    grid.validate()?;
    if rho0.dim() != generator.dim() {
        return Err(Error::DimensionMismatch {
            expected: generator.dim(),
            found: rho0.dim(),
        });
    }
    let h = grid.step();
    let product = (h * generator.spread()).as_f64();
    if product >= STABILITY_LIMIT {
        let needed = ((grid.t_end - grid.t_start) * generator.spread()).as_f64() / STABILITY_LIMIT;
        return Err(Error::StepSize {
            product,
            limit: STABILITY_LIMIT,
            suggested_steps: needed.ceil() as usize + 1,
        });
    }
    let half = real(h * T::lit(0.5));
    let full = real(h);
    let sixth = real(h / T::lit(6.0));
    let two = real(T::lit(2.0));

    let mut rho = rho0.matrix().clone();
    let mut times = vec![grid.t_start];
    let mut states = vec![rho0.clone()];
    for step in 1..=grid.n_steps {
        let k1 = generator.apply(&rho);
        let mut y = rho.clone();
        y.add_scaled(&half, &k1);
        let k2 = generator.apply(&y);
        let mut y = rho.clone();
        y.add_scaled(&half, &k2);
        let k3 = generator.apply(&y);
        let mut y = rho.clone();
        y.add_scaled(&full, &k3);
        let k4 = generator.apply(&y);
        let mut incr = k1;
        incr.add_scaled(&two, &k2);
        incr.add_scaled(&two, &k3);
        incr.add_scaled(&Complex::one(), &k4);
        rho.add_scaled(&sixth, &incr);
        rho.symmetrize();
        let state = DensityMatrix { matrix: rho.clone() };
        state.check_trace()?;
        if step % grid.sample_stride == 0 {
            state.check_positivity()?;
            times.push(grid.t_start + h * T::from_usize(step));
            states.push(state);
        }
    }
    Ok(Trajectory { times, states })
}

/// Converts interaction-picture states to the Schrödinger picture:
/// `ρ(t) = e^{−i H_s t} ρ̃(t) e^{i H_s t}`.
pub fn to_schrodinger<T: RealScalar>(trajectory: &Trajectory<T>, h_s: &CMatrix<T>) -> Result<Trajectory<T>> {
    let eig = eigh(h_s)?;
    let states = trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .map(|(&t, s)| {
            let u = propagator(&eig, t);
            let m = u.try_matmul(s.matrix())?.try_matmul(&u.adjoint())?;
            Ok(DensityMatrix { matrix: m })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times: trajectory.times.clone(),
        states,
    })
}

fn propagator<T: RealScalar>(eig: &HermitianEigen<T>, t: T) -> CMatrix<T> {
    eig.spectral_map(|e| Complex::new(T::zero(), -e * t).exp())
}

/// `(∫_0^∞ e^{−i(ω_n − iη)τ} dτ, ∫_0^∞ e^{i(ω_n + iη)τ} dτ) = (1/(η + iω_n), 1/(η − iω_n))`.
pub fn finite_eta_integrals<T: RealScalar>(omega_n: T, eta: T) -> Result<(Complex<T>, Complex<T>)> {
    if !(omega_n > T::zero() && omega_n.is_finite()) || !(eta > T::zero() && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "finite-eta integrals need omega_n > 0 and eta > 0 (got {omega_n}, {eta})"
        )));
    }
    let forward = Complex::new(eta, omega_n).inv();
    Ok((forward, forward.conj()))
}

fn check_hermitian<T: RealScalar>(h: &CMatrix<T>) -> Result<()> {
    let err = h.hermiticity_error();
    if err > tolerance::<T>(HERMITICITY_TOLERANCE) * h.max_abs().max(T::one()) {
        return Err(Error::NotHermitian(err.as_f64()));
    }
    Ok(())
}

/// Exact propagation by one spectral decomposition of `h`.
#[derive(Clone, Debug)]
pub struct ExactPropagator<T: RealScalar> {
    eig: HermitianEigen<T>,
}

impl<T: RealScalar> ExactPropagator<T> {
    pub fn new(h: &CMatrix<T>) -> Result<Self> {
        check_hermitian(h)?;
        Ok(Self { eig: eigh(h)? })
    }

    pub fn eigen(&self) -> &HermitianEigen<T> {
        &self.eig
    }

    /// Coefficients of `ψ` in the eigenbasis.
    pub fn coefficients(&self, psi: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = psi.len();
        (0..n)
            .map(|k| (0..n).fold(Complex::zero(), |acc, r| acc + self.eig.vectors[(r, k)].conj() * psi[r]))
            .collect()
    }

    /// `e^{−iht}|ψ0⟩` from precomputed eigenbasis coefficients.
    pub fn state_at(&self, coefficients: &[Complex<T>], t: T) -> Vec<Complex<T>> {
        let n = coefficients.len();
        let phased: Vec<Complex<T>> = coefficients
            .iter()
            .zip(&self.eig.values)
            .map(|(c, &e)| c * Complex::new(T::zero(), -e * t).exp())
            .collect();
        let v = &self.eig.vectors;
        (0..n)
            .map(|r| (0..n).fold(Complex::zero(), |acc, k| acc + v[(r, k)] * phased[k]))
            .collect()
    }

    pub fn density_at(&self, rho0: &CMatrix<T>, t: T) -> Result<CMatrix<T>> {
        let u = propagator(&self.eig, t);
        u.try_matmul(rho0)?.try_matmul(&u.adjoint())
    }
}

/// `|ψ(t)⟩` at every sample time of the grid (relative to `t_start`).
pub fn evolve_exact_pure<T: RealScalar>(
    psi0: &[Complex<T>],
    h: &CMatrix<T>,
    grid: &TimeGrid<T>,
) -> Result<Vec<Vec<Complex<T>>>> {
    grid.validate()?;
    if psi0.len() != h.rows() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            found: psi0.len(),
        });
    }
    let prop = ExactPropagator::new(h)?;
    let c = prop.coefficients(psi0);
    Ok(grid
        .sample_times()
        .into_iter()
        .map(|t| prop.state_at(&c, t - grid.t_start))
        .collect())
}

/// `ρ(t)` at every sample time of the grid.
pub fn evolve_exact_density<T: RealScalar>(
    rho0: &DensityMatrix<T>,
    h: &CMatrix<T>,
    grid: &TimeGrid<T>,
) -> Result<Vec<DensityMatrix<T>>> {
    grid.validate()?;
    if rho0.dim() != h.rows() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            found: rho0.dim(),
        });
    }
    let prop = ExactPropagator::new(h)?;
    grid.sample_times()
        .into_iter()
        .map(|t| {
            Ok(DensityMatrix {
                matrix: prop.density_at(rho0.matrix(), t - grid.t_start)?,
            })
        })
        .collect()
}

/// `ρ_s = Σ_m ⟨m_ph|ρ|m_ph⟩`.
pub fn partial_trace_phonons<T: RealScalar>(rho: &CMatrix<T>, space: &CompositeSpace) -> Result<CMatrix<T>> {
    if rho.rows() != space.dim_total() || !rho.is_square() {
        return Err(Error::DimensionMismatch {
            expected: space.dim_total(),
            found: rho.rows(),
        });
    }
    let ds = space.dim_spin();
    let mut out = CMatrix::zeros(ds, ds);
    for p in 0..space.dim_phonon() {
        for s in 0..ds {
            for t in 0..ds {
                out[(s, t)] = out[(s, t)] + rho[(s + ds * p, t + ds * p)];
            }
        }
    }
    Ok(out)
}

/// Reduced spin state of a pure joint state.
pub fn partial_trace_pure<T: RealScalar>(psi: &[Complex<T>], space: &CompositeSpace) -> Result<CMatrix<T>> {
    if psi.len() != space.dim_total() {
        return Err(Error::DimensionMismatch {
            expected: space.dim_total(),
            found: psi.len(),
        });
    }
    let ds = space.dim_spin();
    let mut out = CMatrix::zeros(ds, ds);
    for chunk in psi.chunks(ds) {
        for s in 0..ds {
            if chunk[s].is_zero() {
                continue;
            }
            for t in 0..ds {
                out[(s, t)] = out[(s, t)] + chunk[s] * chunk[t].conj();
            }
        }
    }
    Ok(out)
}

/// `‖⟨0_ph| H_I |0_ph⟩‖_F`, the first-order term of the master equation at zero temperature.
pub fn first_order_term_check<T: RealScalar>(p: &ModelParams<T>) -> Result<T> {
    if p.phonon_cutoff < 2 {
        return Err(Error::InsufficientCutoff {
            cutoff: p.phonon_cutoff,
            required: 2,
        });
    }
    vacuum_interaction_norm(p)
}

/// Truncated, renormalized product of coherent states `⊗_i |α_i⟩` on the phonon factor.
pub fn coherent_bath_state<T: RealScalar>(space: &CompositeSpace, amplitudes: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    if amplitudes.len() != space.n_sites {
        return Err(Error::DimensionMismatch {
            expected: space.n_sites,
            found: amplitudes.len(),
        });
    }
    let d = space.local_phonon_dim();
    let locals: Vec<Vec<Complex<T>>> = amplitudes
        .iter()
        .map(|&alpha| {
            let mut v = Vec::with_capacity(d);
            let mut c = Complex::one();
            for m in 0..d {
                if m > 0 {
                    c = c * alpha / T::from_usize(m).sqrt();
                }
                v.push(c);
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
            v.into_iter().map(|z| z.unscale(norm)).collect()
        })
        .collect();
    Ok((0..space.dim_phonon())
        .map(|idx| {
            space
                .phonon_occupations(idx)
                .iter()
                .zip(&locals)
                .fold(Complex::one(), |acc, (&m, v)| acc * v[m])
        })
        .collect())
}

/// `‖⟨φ| H_I |φ⟩‖_F` for a phonon-factor state `φ`; zero for the vacuum.
pub fn first_order_term_for_bath<T: RealScalar>(p: &ModelParams<T>, phi: &[Complex<T>]) -> Result<T> {
    let space = p.space()?;
    if phi.len() != space.dim_phonon() {
        return Err(Error::DimensionMismatch {
            expected: space.dim_phonon(),
            found: phi.len(),
        });
    }
    let ds = space.dim_spin();
    let mut op = CMatrix::zeros(ds, ds);
    for term in interaction_terms(p)? {
        let x = term.apply_bath(&space, phi);
        let expectation = CMatrix::inner(phi, &x) - CMatrix::inner(phi, phi);
        op.add_scaled(&expectation, &term.system_operator(p.n_sites));
    }
    Ok(op.frobenius_norm())
}
