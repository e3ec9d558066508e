//! Realistic circuit layer: asymmetric DC-SQUID coupling elements and the
//! single-site electrostatics.
//!
//! Each ±J junction of the ideal array is realized as a two-arm SQUID whose
//! fluxes tune both the magnitude and the sign (phase offset 0 or π) of the
//! effective coupling, absorbing fabrication disorder. The finite arm
//! inductance distorts the potential into higher harmonics controlled by
//! e_LJ = 4π²·L·J_w/Φ₀².
//!
//! SI units throughout: inductances in henries, capacitances in farads,
//! energies in joules (with a kelvin report via k_B where useful).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::{spectral_inverse, SymMatrix};
use crate::scalar::{wrap_pm_pi, Real};

/// Superconducting fluxoid quantum h/2e, in webers.
pub const PHI_0: f64 = 2.067833848e-15;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380649e-23;
/// Electron charge, coulombs.
pub const E_CHARGE: f64 = 1.602176634e-19;

/// Parameters of one asymmetric DC SQUID coupler.
///
/// `phi_w`, `phi_t` are the arm fluxes in units of Φ₀. `e_lj` is the ratio
/// of Josephson to linear inductive energy; it can be given directly or
/// derived from the arm inductance (in which case the inductance is kept
/// and must stay consistent with `e_lj = 4π²·L·J_w/Φ₀²`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquidParams<R> {
    pub j_w: R,
    pub j_t: R,
    pub phi_w: R,
    pub phi_t: R,
    pub e_lj: R,
    /// Arm inductance in henries, when known (requires J_w in joules).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_arm: Option<R>,
}

impl<R: Real> SquidParams<R> {
    pub fn new(j_w: R, j_t: R, phi_w: R, phi_t: R, e_lj: R) -> Result<Self> {
        let p = SquidParams {
            j_w,
            j_t,
            phi_w,
            phi_t,
            e_lj,
            l_arm: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Derive e_LJ from the arm inductance (henries) and J_w (joules).
    pub fn with_inductance(j_w: R, j_t: R, phi_w: R, phi_t: R, l_arm: R) -> Result<Self> {
        if !(l_arm >= R::zero()) {
            return Err(CoreError::invalid("arm inductance must be nonnegative"));
        }
        let e_lj = e_lj_from_inductance(l_arm, j_w);
        let p = SquidParams {
            j_w,
            j_t,
            phi_w,
            phi_t,
            e_lj,
            l_arm: Some(l_arm),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j_w > R::zero()) || !(self.j_t > R::zero()) {
            return Err(CoreError::invalid("junction energies must be positive"));
        }
        let d_j = self.j_t / self.j_w;
        if !(d_j > R::zero() && d_j < R::one()) {
            return Err(CoreError::invalid(format!(
                "junction asymmetry d_J = J_t/J_w must lie in (0,1), got {d_j}"
            )));
        }
        if !(self.e_lj >= R::zero()) {
            return Err(CoreError::invalid("e_LJ must be nonnegative"));
        }
        if let Some(l) = self.l_arm {
            let expect = e_lj_from_inductance(l, self.j_w);
            if (self.e_lj - expect).abs() > R::of(1e-9) * expect.max(R::min_positive_value()) {
                return Err(CoreError::invalid(format!(
                    "e_LJ = {} inconsistent with L = {l} H and J_w = {} J (expect {expect})",
                    self.e_lj, self.j_w
                )));
            }
        }
        Ok(())
    }

    pub fn d_j(&self) -> R {
        self.j_t / self.j_w
    }
}

/// e_LJ = 4π² L J_w / Φ₀² (L in henries, J_w in joules).
pub fn e_lj_from_inductance<R: Real>(l_arm: R, j_w: R) -> R {
    let phi0_sq = R::of(PHI_0 * PHI_0);
    R::of(4.0) * R::PI() * R::PI() * l_arm * j_w / phi0_sq
}

/// Inner minimization of one displaced-oscillator coordinate:
/// min_x [ x²/(2e) − a·cos(u − x) ]. Strictly convex for a·e < 1.
fn minimize_arm<R: Real>(u: R, amplitude: R, e_lj: R) -> Result<(R, R)> {
    if e_lj == R::zero() {
        return Ok((R::zero(), -amplitude * u.cos()));
    }
    if amplitude * e_lj >= R::one() {
        return Err(CoreError::numeric(
            "arm potential is not convex (a·e_LJ >= 1); minimizer unsupported here",
        ));
    }
    // Newton on g'(x) = x/e − a sin(u − x), g'' = 1/e + a cos(u − x) > 0.
    let mut x = e_lj * amplitude * u.sin();
    let mut converged = false;
    for _ in 0..100 {
        let grad = x / e_lj - amplitude * (u - x).sin();
        let hess = R::one() / e_lj + amplitude * (u - x).cos();
        let step = grad / hess;
        x -= step;
        if step.abs() <= R::epsilon() * (R::one() + x.abs()) {
            converged = true;
            break;
        }
    }
    let grad = x / e_lj - amplitude * (u - x).sin();
    if !converged && grad.abs() > R::of(1e-10) {
        return Err(CoreError::numeric(format!(
            "arm minimizer did not converge: residual gradient {grad:e}"
        )));
    }
    Ok((x, x * x / (R::of(2.0) * e_lj) - amplitude * (u - x).cos()))
}

/// Exact SQUID potential at external phase difference δ = φ_n − θ_i,
/// minimized numerically over the two displaced oscillator coordinates.
/// Returns the total energy in the units of `j_w`.
pub fn squid_potential_exact<R: Real>(delta: R, p: &SquidParams<R>) -> Result<R> {
    p.validate()?;
    let two_pi = R::TAU();
    let u_w = delta + two_pi * p.phi_w;
    let u_t = delta + two_pi * p.phi_t;
    let (_, e_w) = minimize_arm(u_w, R::one(), p.e_lj)?;
    let (_, e_t) = minimize_arm(u_t, p.d_j(), p.e_lj)?;
    Ok(p.j_w * (e_w + e_t))
}

/// Effective coupling from the phasor sum of the two arms:
/// J_eff = |J_w e^{2πiΦ_w/Φ₀} + J_t e^{2πiΦ_t/Φ₀}| and the phase offset
/// Φ_tot (in units of Φ₀) from its argument.
pub fn squid_effective_phasor<R: Real>(p: &SquidParams<R>) -> Result<(R, R)> {
    p.validate()?;
    let two_pi = R::TAU();
    let re = p.j_w * (two_pi * p.phi_w).cos() + p.j_t * (two_pi * p.phi_t).cos();
    let im = p.j_w * (two_pi * p.phi_w).sin() + p.j_t * (two_pi * p.phi_t).sin();
    let j_eff = (re * re + im * im).sqrt();
    if j_eff < R::of(1e-9) * (p.j_w + p.j_t) {
        return Err(CoreError::numeric(
            "effective coupling near zero: phase offset is ill-conditioned",
        ));
    }
    let phi_tot = im.atan2(re) / two_pi;
    Ok((j_eff, phi_tot))
}

/// Coefficients of the 4-term harmonic expansion of the SQUID potential in
/// units of J_w, to second order in e_LJ:
///
/// U/J_w ≈ c1·cos(u_w) + c_d·cos(u_t) + c2·cos(2u_w) + c3·cos(3u_w),
/// with u_w = δ + 2πΦ_w/Φ₀ and u_t = δ + 2πΦ_t/Φ₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicCoefficients<R> {
    /// −(1 − e_LJ²/8): renormalized single-Cooper-pair term.
    pub c1: R,
    /// −d_J: the trim arm.
    pub c_d: R,
    /// +e_LJ/4: two-Cooper-pair tunneling.
    pub c2: R,
    /// −e_LJ²/8: three-Cooper-pair tunneling.
    pub c3: R,
}

pub fn squid_harmonic_expansion<R: Real>(p: &SquidParams<R>) -> Result<HarmonicCoefficients<R>> {
    p.validate()?;
    if p.e_lj > R::of(0.3) {
        return Err(CoreError::invalid(format!(
            "harmonic expansion is valid only for e_LJ <= 0.3, got {}",
            p.e_lj
        )));
    }
    let e = p.e_lj;
    Ok(HarmonicCoefficients {
        c1: -(R::one() - e * e / R::of(8.0)),
        c_d: -p.d_j(),
        c2: e / R::of(4.0),
        c3: -e * e / R::of(8.0),
    })
}

/// Evaluate the 4-term series at phase difference δ, in units of J_w.
pub fn squid_harmonic_series<R: Real>(
    delta: R,
    p: &SquidParams<R>,
    c: &HarmonicCoefficients<R>,
) -> R {
    let two_pi = R::TAU();
    let u_w = delta + two_pi * p.phi_w;
    let u_t = delta + two_pi * p.phi_t;
    c.c1 * u_w.cos()
        + c.c_d * u_t.cos()
        + c.c2 * (R::of(2.0) * u_w).cos()
        + c.c3 * (R::of(3.0) * u_w).cos()
}

/// Fourier cosine coefficients a_m of a 2π-periodic sampled function,
/// computed on a uniform grid (spectrally accurate for smooth integrands).
pub fn fourier_cosine_coefficients<R: Real>(
    f: impl Fn(R) -> Result<R>,
    harmonics: usize,
    points: usize,
) -> Result<Vec<R>> {
    let mut sums = vec![R::zero(); harmonics + 1];
    let h = R::TAU() / R::of_usize(points);
    for k in 0..points {
        let x = R::of_usize(k) * h;
        let v = f(x)?;
        for (m, s) in sums.iter_mut().enumerate() {
            *s += v * (R::of_usize(m) * x).cos();
        }
    }
    let n = R::of_usize(points);
    Ok(sums
        .iter()
        .enumerate()
        .map(|(m, &s)| if m == 0 { s / n } else { R::of(2.0) * s / n })
        .collect())
}

/// One junction's calibration requirement: realize `sign·J_target` exactly.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CalibrationTarget<R> {
    /// +1 or −1: the W-matrix entry this coupler implements.
    pub sign: i8,
    pub j_target: R,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FluxSolution<R> {
    /// Arm fluxes in units of Φ₀, canonical in (−1/2, 1/2].
    pub phi_w: R,
    pub phi_t: R,
    /// Round-trip residual |J_eff − J_target| / J_target.
    pub residual: R,
}

fn canonical_flux<R: Real>(phase: R) -> R {
    wrap_pm_pi(phase) / R::TAU()
}

/// Solve the phasor equations for one junction: find arm fluxes such that
/// the effective coupling equals `J_target` with phase offset 0 (sign +1)
/// or Φ₀/2 (sign −1).
///
/// The trim junction is sized as J_t = d_J·J_target; a junction at its
/// design value J_w = (1−d_J)·J_target calibrates to zero applied flux
/// (or to half a fluxoid on both arms for sign −1). Feasible whenever
/// |J_w − J_target| ≤ d_J·J_target. Among the two mirror branches the one
/// with the smaller |Φ_t| (then smaller |Φ_w|) is returned.
pub fn calibrate_junction<R: Real>(
    target: CalibrationTarget<R>,
    j_w_actual: R,
    d_j: R,
) -> Result<FluxSolution<R>> {
    if !(target.j_target > R::zero()) || !(j_w_actual > R::zero()) {
        return Err(CoreError::invalid("junction energies must be positive"));
    }
    if !(d_j > R::zero() && d_j < R::one()) {
        return Err(CoreError::invalid("d_J must lie in (0,1)"));
    }
    if target.sign != 1 && target.sign != -1 {
        return Err(CoreError::invalid("target sign must be ±1"));
    }
    let a = j_w_actual;
    let b = d_j * target.j_target;
    let t = target.j_target;
    let slack = (a - t).abs() - b;
    if slack > R::of(1e-12) * t {
        return Err(CoreError::numeric(format!(
            "disorder out of range: |J_w − J_target| = {} exceeds the tunable span d_J·J_target = {}",
            (a - t).abs(),
            b
        )));
    }

    let psi = if target.sign == 1 { R::zero() } else { R::PI() };
    // Triangle with sides a, b and base t: angle of the w-arm off the base.
    let cos_alpha = ((a * a + t * t - b * b) / (R::of(2.0) * a * t))
        .min(R::one())
        .max(-R::one());
    let alpha = cos_alpha.acos();

    let mut best: Option<FluxSolution<R>> = None;
    for branch in [R::one(), -R::one()] {
        let phase_w = psi + branch * alpha;
        // The trim arm closes the triangle.
        let tx = t * psi.cos() - a * phase_w.cos();
        let ty = -a * phase_w.sin();
        let phase_t = ty.atan2(tx);
        let phi_w = canonical_flux(phase_w);
        let phi_t = canonical_flux(phase_t);

        let params = SquidParams {
            j_w: a,
            j_t: b,
            phi_w,
            phi_t,
            e_lj: R::zero(),
            l_arm: None,
        };
        let (j_eff, _) = squid_effective_phasor(&params)?;
        let residual = (j_eff - t).abs() / t;
        let candidate = FluxSolution {
            phi_w,
            phi_t,
            residual,
        };
        best = Some(match best {
            None => candidate,
            Some(prev) => {
                let better = candidate.phi_t.abs() < prev.phi_t.abs() - R::of(1e-15)
                    || ((candidate.phi_t.abs() - prev.phi_t.abs()).abs() <= R::of(1e-15)
                        && candidate.phi_w.abs() < prev.phi_w.abs());
                if better {
                    candidate
                } else {
                    prev
                }
            }
        });
    }
    Ok(best.expect("at least one branch"))
}

/// Calibrate a batch of junctions; fails listing every junction whose
/// disorder exceeds the feasibility bound.
pub fn calibrate_fluxes<R: Real>(
    targets: &BTreeMap<usize, CalibrationTarget<R>>,
    actual_j_w: &BTreeMap<usize, R>,
    d_j: R,
) -> Result<BTreeMap<usize, FluxSolution<R>>> {
    let mut out = BTreeMap::new();
    let mut infeasible = Vec::new();
    for (&id, &target) in targets {
        let Some(&a) = actual_j_w.get(&id) else {
            return Err(CoreError::invalid(format!(
                "junction {id} has no measured J_w"
            )));
        };
        match calibrate_junction(target, a, d_j) {
            Ok(sol) => {
                out.insert(id, sol);
            }
            Err(e) => infeasible.push(format!("junction {id}: {e}")),
        }
    }
    if !infeasible.is_empty() {
        return Err(CoreError::numeric(infeasible.join("; ")));
    }
    Ok(out)
}

/// All capacitances of a single site (farads). Parasitic suffixes 2 and 3
/// couple next-nearest and outermost parallel wire pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteCapacitances<R> {
    pub c_j: R,
    pub c_m: R,
    pub c_g: R,
    pub c_m_par: R,
    pub c_m_par2: R,
    pub c_m_par3: R,
    pub c_g_par: R,
    pub c_g_par2: R,
    pub c_g_par3: R,
}

impl<R: Real> SiteCapacitances<R> {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.c_j,
            self.c_m,
            self.c_g,
            self.c_m_par,
            self.c_m_par2,
            self.c_m_par3,
            self.c_g_par,
            self.c_g_par2,
            self.c_g_par3,
        ];
        if all.iter().any(|c| !(*c >= R::zero()) || !c.is_finite()) {
            return Err(CoreError::invalid(
                "capacitances must be finite and nonnegative",
            ));
        }
        Ok(())
    }

    /// Typical values: junction capacitance dominant over everything else.
    pub fn junction_dominant(&self) -> bool {
        let others = [
            self.c_m_par,
            self.c_m_par2,
            self.c_m_par3,
            self.c_g_par,
            self.c_g_par2,
            self.c_g_par3,
        ];
        others.iter().all(|&c| self.c_j > R::of(10.0) * c)
    }

    fn parallel(&self, matter: bool, i: usize, j: usize) -> R {
        let dist = i.abs_diff(j);
        match (matter, dist) {
            (true, 1) => self.c_m_par,
            (true, 2) => self.c_m_par2,
            (true, 3) => self.c_m_par3,
            (false, 1) => self.c_g_par,
            (false, 2) => self.c_g_par2,
            (false, 3) => self.c_g_par3,
            _ => R::zero(),
        }
    }
}

/// Maxwell capacitance matrix of one site, ordered (4 matter, 4 gauge).
///
/// Diagonal entries are the total capacitance attached to the wire (self
/// capacitance, four junction capacitances, parasitics to the parallel
/// wires); off-diagonal entries are −C between the pair. Gauge wires carry
/// C_g/2 because each spans two sites. Matter–gauge parasitics sit in
/// parallel with the much larger C_J and are omitted.
pub fn build_capacitance_matrix<R: Real>(sc: &SiteCapacitances<R>) -> Result<SymMatrix<R>> {
    sc.validate()?;
    let mut m = SymMatrix::zeros(8);
    // Matter-gauge junction couplings: every pair.
    for mt in 0..4 {
        for gg in 4..8 {
            m.set(mt, gg, -sc.c_j);
            m.set(gg, mt, -sc.c_j);
        }
    }
    // Intra-species parasitics.
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                m.set(i, j, -sc.parallel(true, i, j));
                m.set(i + 4, j + 4, -sc.parallel(false, i, j));
            }
        }
    }
    // Diagonals: self + 4 C_J + sum of parasitics to the other wires.
    for i in 0..4 {
        let par_m: R = (0..4)
            .filter(|&j| j != i)
            .map(|j| sc.parallel(true, i, j))
            .sum();
        m.set(i, i, sc.c_m + R::of(4.0) * sc.c_j + par_m);
        let par_g: R = (0..4)
            .filter(|&j| j != i)
            .map(|j| sc.parallel(false, i, j))
            .sum();
        m.set(
            i + 4,
            i + 4,
            sc.c_g / R::of(2.0) + R::of(4.0) * sc.c_j + par_g,
        );
    }
    Ok(m)
}

/// Charges on the eight wires of a site, dimensionless in units of 2e
/// (Cooper pairs), ordered like the capacitance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeVector<R> {
    pub q: Vec<R>,
}

impl<R: Real> ChargeVector<R> {
    pub fn zeros(n: usize) -> Self {
        ChargeVector {
            q: vec![R::zero(); n],
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KineticEnergy<R> {
    pub joules: R,
    pub kelvin: R,
    /// Condition number of the capacitance matrix.
    pub condition: R,
}

/// Electrostatic energy ½ Q⃗ᵀ C⁻¹ Q⃗ with Q⃗ = 2e·q. Nonnegative; fails on a
/// singular matrix.
pub fn kinetic_energy<R: Real>(
    q: &ChargeVector<R>,
    cmat: &SymMatrix<R>,
) -> Result<KineticEnergy<R>> {
    if q.q.len() != cmat.dim() {
        return Err(CoreError::invalid(format!(
            "charge vector has {} entries, matrix is {}x{}",
            q.q.len(),
            cmat.dim(),
            cmat.dim()
        )));
    }
    if q.q.iter().any(|x| !x.is_finite()) {
        return Err(CoreError::invalid("charges must be finite"));
    }
    let (inv, condition) = spectral_inverse(cmat)?;
    let n = cmat.dim();
    let mut quad = R::zero();
    for i in 0..n {
        for j in 0..n {
            quad += q.q[i] * inv.get(i, j) * q.q[j];
        }
    }
    let coulomb = R::of(2.0 * E_CHARGE);
    let joules = quad * coulomb * coulomb / R::of(2.0);
    Ok(KineticEnergy {
        joules,
        kelvin: joules / R::of(K_B),
        condition,
    })
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    let mut items = [0usize, 1, 2, 3];
    fn rec(items: &mut [usize; 4], k: usize, out: &mut Vec<[usize; 4]>) {
        if k == 4 {
            out.push(*items);
            return;
        }
        for i in k..4 {
            items.swap(k, i);
            rec(items, k + 1, out);
            items.swap(k, i);
        }
    }
    rec(&mut items, 0, &mut out);
    out
}

/// Degree to which the electrostatics breaks the matter-wire permutation
/// symmetry: max over matter permutations π of
/// ‖P_π C⁻¹ P_πᵀ − C⁻¹‖_F / ‖C⁻¹‖_F. Zero iff C⁻¹ is permutation symmetric.
pub fn symmetry_breaking_metric<R: Real>(sc: &SiteCapacitances<R>) -> Result<R> {
    let cmat = build_capacitance_matrix(sc)?;
    let (inv, _) = spectral_inverse(&cmat)?;
    let norm = inv.frobenius_norm();
    let mut worst = R::zero();
    for perm in permutations4() {
        let full: Vec<usize> = perm.iter().copied().chain(4..8).collect();
        let mut diff = R::zero();
        for i in 0..8 {
            for j in 0..8 {
                let d = inv.get(full[i], full[j]) - inv.get(i, j);
                diff += d * d;
            }
        }
        worst = worst.max(diff.sqrt() / norm);
    }
    Ok(worst)
}
