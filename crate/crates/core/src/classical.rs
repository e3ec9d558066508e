//! Classical Josephson energy and its ground-state manifold.
//!
//! For fixed gauge phases θ the matter phases minimize the site energy in
//! closed form ("tethering"): φ_n = arg Σ_i W_{ni} e^{iθ_i}. The site
//! minimum −8J is reached exactly when the four gauge phases are equal
//! pairwise modulo π, in one of three pairings; those pairings are what
//! turns the ground-state manifold into a fully-packed loop model.
//!
//! This module also certifies the flip paths that take a plaquette between
//! its two ℤ₂ sectors at zero classical energy cost.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::hadamard::{is_hadamard, AutomorphismPair, MonomialMatrix, SignMatrix};
use crate::lattice::{LatticeGeometry, LinkIndex, MatterIndex, PlaquetteIndex, SiteIndex};
use crate::scalar::{dist_mod_pi, wrap_2pi, wrap_pm_pi, Real};

/// Magnitude below which the tethering phase is reported as undefined.
pub const EPS_TETHER: f64 = 1e-9;

/// Default tolerance for pairwise mod-π classification, in radians.
pub const PAIRING_TOL: f64 = 1e-6;

/// Default number of discretization steps for flip paths.
pub const DEFAULT_PATH_STEPS: usize = 64;

/// The three ways to pair the four star legs (slots N=1, E=2, S=3, W=4 in
/// the 1-based labels used below).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pairing {
    /// (12)(34): N with E, S with W.
    P12_34,
    /// (13)(24): N with S, E with W.
    P13_24,
    /// (14)(23): N with W, E with S.
    P14_23,
}

pub const ALL_PAIRINGS: [Pairing; 3] = [Pairing::P12_34, Pairing::P13_24, Pairing::P14_23];

impl Pairing {
    /// The two slot pairs, 0-based.
    pub fn pairs(self) -> [(usize, usize); 2] {
        match self {
            Pairing::P12_34 => [(0, 1), (2, 3)],
            Pairing::P13_24 => [(0, 2), (1, 3)],
            Pairing::P14_23 => [(0, 3), (1, 2)],
        }
    }

    /// The slot paired with `slot`.
    pub fn partner(self, slot: usize) -> usize {
        for (a, b) in self.pairs() {
            if slot == a {
                return b;
            }
            if slot == b {
                return a;
            }
        }
        unreachable!("slot out of range")
    }
}

/// Coupling strength and sign matrix of the Josephson term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams<R> {
    pub j: R,
    pub w: SignMatrix,
}

impl<R: Real> CouplingParams<R> {
    pub fn new(j: R, w: SignMatrix) -> Result<Self> {
        if !(j > R::zero()) {
            return Err(CoreError::invalid("coupling J must be positive"));
        }
        if !is_hadamard(&w) {
            return Err(CoreError::invalid("coupling matrix must be Hadamard"));
        }
        Ok(CouplingParams { j, w })
    }

    /// J = 1 with the canonical sign matrix; energies are then in units of J.
    pub fn unit() -> Self {
        CouplingParams {
            j: R::one(),
            w: SignMatrix::canonical(),
        }
    }
}

/// The eight phases seen by one waffle: its four gauge legs (N,E,S,W) and
/// four matter wires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SitePhases<R> {
    pub theta: [R; 4],
    pub phi: [R; 4],
}

/// Gauge and matter phases for the whole lattice, indexed by the flat link
/// and matter ids of the geometry. All phases are kept in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig<R> {
    pub theta: Vec<R>,
    pub phi: Vec<R>,
}

impl<R: Real> PhaseConfig<R> {
    pub fn new(theta: Vec<R>, phi: Vec<R>) -> Self {
        let mut c = PhaseConfig { theta, phi };
        c.canonicalize();
        c
    }

    pub fn zeros(g: &LatticeGeometry) -> Self {
        PhaseConfig {
            theta: vec![R::zero(); g.n_links()],
            phi: vec![R::zero(); g.n_matter()],
        }
    }

    pub fn canonicalize(&mut self) {
        for t in self.theta.iter_mut() {
            *t = wrap_2pi(*t);
        }
        for p in self.phi.iter_mut() {
            *p = wrap_2pi(*p);
        }
    }

    /// Check that the config covers geometry `g` and every phase is finite.
    pub fn validate(&self, g: &LatticeGeometry) -> Result<()> {
        if self.theta.len() != g.n_links() {
            return Err(CoreError::invalid(format!(
                "phase config has {} link phases, geometry needs {}",
                self.theta.len(),
                g.n_links()
            )));
        }
        if self.phi.len() != g.n_matter() {
            return Err(CoreError::invalid(format!(
                "phase config has {} matter phases, geometry needs {}",
                self.phi.len(),
                g.n_matter()
            )));
        }
        if self
            .theta
            .iter()
            .chain(self.phi.iter())
            .any(|x| !x.is_finite())
        {
            return Err(CoreError::invalid(
                "phase config contains non-finite phases",
            ));
        }
        Ok(())
    }

    pub fn site_phases(&self, g: &LatticeGeometry, s: SiteIndex) -> Result<SitePhases<R>> {
        let star = g.star_links(s)?;
        let mut theta = [R::zero(); 4];
        for (slot, &l) in star.iter().enumerate() {
            theta[slot] = self.theta[g.link_id(l)];
        }
        let mut phi = [R::zero(); 4];
        for (slot, p) in phi.iter_mut().enumerate() {
            *p = self.phi[g.matter_id(MatterIndex {
                x: s.x,
                y: s.y,
                slot,
            })];
        }
        Ok(SitePhases { theta, phi })
    }

    /// Coordinate-keyed form for JSON emission.
    pub fn to_records(&self, g: &LatticeGeometry) -> PhaseConfigRecords<R> {
        PhaseConfigRecords {
            theta: g
                .links()
                .map(|l| LinkPhase {
                    link: l,
                    phase: self.theta[g.link_id(l)],
                })
                .collect(),
            phi: g
                .matter_wires()
                .map(|m| MatterPhase {
                    wire: m,
                    phase: self.phi[g.matter_id(m)],
                })
                .collect(),
        }
    }

    pub fn from_records(g: &LatticeGeometry, records: &PhaseConfigRecords<R>) -> Result<Self> {
        let mut theta = vec![R::nan(); g.n_links()];
        let mut phi = vec![R::nan(); g.n_matter()];
        for r in &records.theta {
            theta[g.link_id(r.link)] = r.phase;
        }
        for r in &records.phi {
            phi[g.matter_id(r.wire)] = r.phase;
        }
        let c = PhaseConfig::new(theta, phi);
        c.validate(g)
            .map_err(|_| CoreError::invalid("phase records do not cover the geometry"))?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkPhase<R> {
    pub link: LinkIndex,
    pub phase: R,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatterPhase<R> {
    pub wire: MatterIndex,
    pub phase: R,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseConfigRecords<R> {
    pub theta: Vec<LinkPhase<R>>,
    pub phi: Vec<MatterPhase<R>>,
}

/// The four complex row sums v_n = Σ_i W_{ni} e^{iθ_i} of one site, as
/// (re, im) pairs.
pub fn site_vectors<R: Real>(theta: &[R; 4], w: &SignMatrix) -> [(R, R); 4] {
    let mut v = [(R::zero(), R::zero()); 4];
    let cs: Vec<(R, R)> = theta.iter().map(|&t| (t.cos(), t.sin())).collect();
    for (n, vn) in v.iter_mut().enumerate() {
        for (i, &(c, s)) in cs.iter().enumerate() {
            let sign = R::of_i64(w.get(n, i) as i64);
            vn.0 += sign * c;
            vn.1 += sign * s;
        }
    }
    v
}

/// Josephson energy of a single waffle given all eight of its phases.
pub fn site_energy<R: Real>(sp: &SitePhases<R>, params: &CouplingParams<R>) -> R {
    let mut sum = R::zero();
    for n in 0..4 {
        for i in 0..4 {
            let sign = R::of_i64(params.w.get(n, i) as i64);
            sum += sign * (sp.phi[n] - sp.theta[i]).cos();
        }
    }
    -params.j * sum
}

/// Total Josephson energy `−J Σ_s Σ_{n,i∈s} W_{ni} cos(φ_n − θ_i)`.
/// Bounded below by `−8J·N_sites`.
pub fn josephson_energy<R: Real>(
    config: &PhaseConfig<R>,
    params: &CouplingParams<R>,
    g: &LatticeGeometry,
) -> Result<R> {
    config.validate(g)?;
    let mut total = R::zero();
    for s in g.sites() {
        let sp = config.site_phases(g, s)?;
        total += site_energy(&sp, params);
    }
    Ok(total)
}

/// Per-wire report of a degenerate tethering denominator.
#[derive(Debug, Clone)]
pub struct TetherDegeneracy {
    /// Matter slots whose phase is undefined (|Σ_i W_{ni} e^{iθ_i}| ≤ ε).
    pub degenerate_wires: Vec<usize>,
}

/// Matter phases minimizing the site energy for fixed gauge phases:
/// φ_n = arg Σ_i W_{ni} e^{iθ_i}.
///
/// Fails with the list of affected wires when a row sum has magnitude below
/// `EPS_TETHER` (the phase is then undefined rather than merely inaccurate).
pub fn tether_matter_phases<R: Real>(
    theta: &[R; 4],
    w: &SignMatrix,
) -> std::result::Result<[R; 4], TetherDegeneracy> {
    let v = site_vectors(theta, w);
    let eps = R::of(EPS_TETHER);
    let degenerate: Vec<usize> = v
        .iter()
        .enumerate()
        .filter(|(_, (re, im))| (re.powi(2) + im.powi(2)).sqrt() <= eps)
        .map(|(n, _)| n)
        .collect();
    if !degenerate.is_empty() {
        return Err(TetherDegeneracy {
            degenerate_wires: degenerate,
        });
    }
    let mut phi = [R::zero(); 4];
    for (n, p) in phi.iter_mut().enumerate() {
        *p = wrap_2pi(v[n].1.atan2(v[n].0));
    }
    Ok(phi)
}

/// Minimal site energy over the matter phases: `−J Σ_n |Σ_i W_{ni} e^{iθ_i}|`.
/// Always ≥ −8J, with equality iff all four magnitudes equal 2.
pub fn site_min_energy<R: Real>(theta: &[R; 4], params: &CouplingParams<R>) -> R {
    let v = site_vectors(theta, &params.w);
    let sum: R = v
        .iter()
        .map(|(re, im)| (re.powi(2) + im.powi(2)).sqrt())
        .sum();
    -params.j * sum
}

/// Classify whether four gauge phases sit on the minimum manifold: equal
/// pairwise modulo π within `tol`. Returns every matching pairing (several
/// when degenerate, e.g. all four phases equal).
pub fn is_min_manifold<R: Real>(theta: &[R; 4], tol: R) -> (bool, Vec<Pairing>) {
    let mut matches = Vec::new();
    for pairing in ALL_PAIRINGS {
        let ok = pairing
            .pairs()
            .iter()
            .all(|&(a, b)| dist_mod_pi(theta[a], theta[b]) <= tol);
        if ok {
            matches.push(pairing);
        }
    }
    (!matches.is_empty(), matches)
}

/// The pairing with the smallest total mod-π mismatch, with the mismatch
/// value. Total function: useful for loop detection in thermal states where
/// a strict tolerance would reject every site.
pub fn best_pairing<R: Real>(theta: &[R; 4]) -> (Pairing, R) {
    let mut best = (Pairing::P12_34, R::infinity());
    for pairing in ALL_PAIRINGS {
        let mismatch: R = pairing
            .pairs()
            .iter()
            .map(|&(a, b)| dist_mod_pi(theta[a], theta[b]))
            .sum();
        if mismatch < best.1 {
            best = (pairing, mismatch);
        }
    }
    best
}

/// Apply an automorphism pair to the eight phases of one waffle: gauge
/// phases pick up π for every −1 in `R`, matter phases are permuted by `L`
/// and shifted by π for every −1 in `L`. The site energy is exactly
/// invariant for a verified pair.
pub fn apply_gauge_transformation_site<R: Real>(
    sp: &SitePhases<R>,
    pair: &AutomorphismPair,
) -> SitePhases<R> {
    let pi = R::PI();
    let mut theta = [R::zero(); 4];
    for (i, t) in theta.iter_mut().enumerate() {
        let shift = if pair.right.signs[i] == -1 {
            pi
        } else {
            R::zero()
        };
        // Diagonal R: gauge wires are never permuted.
        *t = wrap_2pi(sp.theta[pair.right.perm[i]] + shift);
    }
    let mut phi = [R::zero(); 4];
    for (n, p) in phi.iter_mut().enumerate() {
        let shift = if pair.left.signs[n] == -1 {
            pi
        } else {
            R::zero()
        };
        *p = wrap_2pi(sp.phi[pair.left.perm[n]] + shift);
    }
    SitePhases { theta, phi }
}

/// Apply an automorphism pair at one site of a lattice configuration.
///
/// This rewrites the four link phases and four matter phases of `site`.
/// The transformed site's own energy is invariant, but a link shared with a
/// neighbor carries the π shift into that neighbor's star: only the
/// plaquette-coordinated product [`plaquette_flip`] leaves the total
/// lattice energy unchanged.
pub fn apply_gauge_transformation<R: Real>(
    config: &PhaseConfig<R>,
    site: SiteIndex,
    pair: &AutomorphismPair,
    g: &LatticeGeometry,
) -> Result<PhaseConfig<R>> {
    config.validate(g)?;
    let sp = config.site_phases(g, site)?;
    let tp = apply_gauge_transformation_site(&sp, pair);
    let mut out = config.clone();
    for (slot, &l) in g.star_links(site)?.iter().enumerate() {
        out.theta[g.link_id(l)] = tp.theta[slot];
    }
    for slot in 0..4 {
        out.phi[g.matter_id(MatterIndex {
            x: site.x,
            y: site.y,
            slot,
        })] = tp.phi[slot];
    }
    Ok(out)
}

/// Matter-side companion of a diagonal gauge sign pattern: L = W R Wᵀ / 4,
/// when it is monomial (true exactly for the even sign patterns).
pub fn matter_companion(w: &SignMatrix, gauge_signs: [i32; 4]) -> Result<MonomialMatrix> {
    let mut l = [[0i32; 4]; 4];
    for (n, row) in l.iter_mut().enumerate() {
        for (m, lnm) in row.iter_mut().enumerate() {
            let mut acc = 0i32;
            for i in 0..4 {
                acc += w.get(n, i) * gauge_signs[i] * w.get(m, i);
            }
            if acc % 4 != 0 {
                return Err(CoreError::invalid(format!(
                    "gauge sign pattern {gauge_signs:?} has no monomial matter companion"
                )));
            }
            *lnm = acc / 4;
        }
    }
    MonomialMatrix::from_dense(&l).ok_or_else(|| {
        CoreError::invalid(format!(
            "gauge sign pattern {gauge_signs:?} has no monomial matter companion"
        ))
    })
}

/// Shift the four links of plaquette `p` by π and apply the matter-side
/// companion transformation at each corner site. This is the generator of
/// the local gauge symmetry: the total Josephson energy of *any*
/// configuration is exactly invariant.
pub fn plaquette_flip<R: Real>(
    config: &PhaseConfig<R>,
    p: PlaquetteIndex,
    g: &LatticeGeometry,
    w: &SignMatrix,
) -> Result<PhaseConfig<R>> {
    config.validate(g)?;
    let boundary = g.plaquette_links(p)?;
    let mut out = config.clone();
    let pi = R::PI();

    // Matter companions first: they depend only on which of each corner's
    // slots lie on the plaquette, not on the link phases.
    for corner in g.plaquette_corners(p) {
        let mut signs = [1i32; 4];
        for &l in &boundary {
            if let Some(slot) = g.slot_at_site(l, corner) {
                signs[slot] = -1;
            }
        }
        debug_assert_eq!(signs.iter().filter(|&&s| s == -1).count(), 2);
        let left = matter_companion(w, signs)?;
        for slot in 0..4 {
            let shift = if left.signs[slot] == -1 {
                pi
            } else {
                R::zero()
            };
            let src = config.phi[g.matter_id(MatterIndex {
                x: corner.x,
                y: corner.y,
                slot: left.perm[slot],
            })];
            out.phi[g.matter_id(MatterIndex {
                x: corner.x,
                y: corner.y,
                slot,
            })] = wrap_2pi(src + shift);
        }
    }
    for &l in &boundary {
        let id = g.link_id(l);
        out.theta[id] = wrap_2pi(out.theta[id] + pi);
    }
    Ok(out)
}

/// Re-tether every matter phase of a configuration to its gauge phases.
pub fn tether_all<R: Real>(
    config: &mut PhaseConfig<R>,
    g: &LatticeGeometry,
    w: &SignMatrix,
) -> Result<()> {
    for s in g.sites() {
        let star = g.star_links(s)?;
        let mut theta = [R::zero(); 4];
        for (slot, &l) in star.iter().enumerate() {
            theta[slot] = config.theta[g.link_id(l)];
        }
        let phi = tether_matter_phases(&theta, w).map_err(|d| {
            CoreError::numeric(format!(
                "tethering degenerate at site ({},{}), wires {:?}",
                s.x, s.y, d.degenerate_wires
            ))
        })?;
        for slot in 0..4 {
            config.phi[g.matter_id(MatterIndex {
                x: s.x,
                y: s.y,
                slot,
            })] = phi[slot];
        }
    }
    Ok(())
}

/// Which flip path to discretize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathSpec {
    /// The plaquette carries an elementary loop: sweep the shift angle
    /// directly; the configuration stays on the minimum manifold.
    TypeA,
    /// The plaquette is surrounded by four distinct loops: merge their
    /// phases to a common value, sweep the shift angle, then restore.
    TypeB,
    /// Negative control: sweep the shift angle while holding the
    /// surrounding loop phases fixed. Crosses a classical barrier.
    Naive,
}

/// One sample along a flip path.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PathSample<R> {
    pub step: usize,
    /// Shift angle applied to the plaquette links at this step.
    pub delta_theta: R,
    /// Total Josephson energy at this step.
    pub energy: R,
    /// |E(t) − E(0)|.
    pub energy_excursion: R,
}

#[derive(Debug, Clone)]
pub struct FlipPathResult<R> {
    /// max |E(t) − E(0)| along the path.
    pub max_excursion: R,
    pub samples: Vec<PathSample<R>>,
    /// Final configuration (matter re-tethered).
    pub final_config: PhaseConfig<R>,
    /// Max angular deviation of the final gauge phases from the ideal
    /// plaquette-flipped start, radians.
    pub final_deviation: R,
}

fn loop_membership<R: Real>(
    config: &PhaseConfig<R>,
    g: &LatticeGeometry,
    tol: R,
) -> Result<Vec<usize>> {
    let mut pairing = Vec::with_capacity(g.n_sites());
    for s in g.sites() {
        let sp = config.site_phases(g, s)?;
        let (ok, matches) = is_min_manifold(&sp.theta, tol);
        if !ok {
            return Err(CoreError::invalid(format!(
                "configuration is not in the ground-state manifold at site ({},{})",
                s.x, s.y
            )));
        }
        if matches.len() > 1 {
            return Err(CoreError::invalid(format!(
                "ambiguous loop structure at site ({},{}): use distinct loop phases",
                s.x, s.y
            )));
        }
        pairing.push(matches[0]);
    }
    let pc = crate::loops::PairingConfig { pairing };
    let decomposition = crate::loops::loops_from_pairing(&pc, g);
    let mut membership = vec![usize::MAX; g.n_links()];
    for (loop_id, lp) in decomposition.loops.iter().enumerate() {
        for &link_id in &lp.links {
            membership[link_id] = loop_id;
        }
    }
    Ok(membership)
}

/// Discretize a plaquette flip path, re-tethering the matter phases at every
/// step, and record the maximal Josephson-energy excursion.
///
/// The starting configuration must be a ground state with unambiguous loop
/// structure. The final configuration always equals the plaquette-flipped
/// start (for `Naive` too: the barrier sits in the interior of the path).
pub fn flip_path_energy<R: Real>(
    config: &PhaseConfig<R>,
    p: PlaquetteIndex,
    path: PathSpec,
    n_steps: usize,
    params: &CouplingParams<R>,
    g: &LatticeGeometry,
) -> Result<FlipPathResult<R>> {
    if n_steps < 8 {
        return Err(CoreError::invalid("flip paths need at least 8 steps"));
    }
    config.validate(g)?;
    let mut start = config.clone();
    tether_all(&mut start, g, &params.w)?;
    let e0 = josephson_energy(&start, params, g)?;
    let bound = -R::of(8.0) * params.j * R::of_usize(g.n_sites());
    if (e0 - bound).abs() > R::of(1e-6) * params.j * R::of_usize(g.n_sites()) {
        return Err(CoreError::invalid(format!(
            "configuration is not a ground state: energy {e0} vs bound {bound}"
        )));
    }

    let boundary = g.plaquette_links(p)?;
    let boundary_ids: Vec<usize> = boundary.iter().map(|&l| g.link_id(l)).collect();
    let membership = loop_membership(&start, g, R::of(PAIRING_TOL))?;

    let loop_of_boundary: Vec<usize> = boundary_ids.iter().map(|&id| membership[id]).collect();
    let mut distinct = loop_of_boundary.clone();
    distinct.sort_unstable();
    distinct.dedup();

    match path {
        PathSpec::TypeA => {
            if distinct.len() != 1 {
                return Err(CoreError::invalid(
                    "type-a path needs the plaquette to carry a single elementary loop",
                ));
            }
        }
        PathSpec::TypeB | PathSpec::Naive => {
            if distinct.len() != 4 {
                return Err(CoreError::invalid(format!(
                    "type-b path needs four distinct surrounding loops, found {}",
                    distinct.len()
                )));
            }
        }
    }

    // Links of each surrounding loop, and each loop's reference phase taken
    // from its plaquette-boundary link.
    let mut loop_links: Vec<Vec<usize>> = vec![Vec::new(); distinct.len()];
    for (id, &m) in membership.iter().enumerate() {
        if let Some(k) = distinct.iter().position(|&d| d == m) {
            loop_links[k].push(id);
        }
    }
    let ref_phase: Vec<R> = distinct
        .iter()
        .map(|&d| {
            let id = boundary_ids[loop_of_boundary
                .iter()
                .position(|&m| m == d)
                .expect("present")];
            start.theta[id]
        })
        .collect();
    // Common merge target: the phase of the first boundary link's loop.
    let zeta = start.theta[boundary_ids[0]];

    let pi = R::PI();
    let mut samples = Vec::new();
    let mut max_excursion = R::zero();

    let mut eval = |theta: Vec<R>, step: usize, dtheta: R| -> Result<PhaseConfig<R>> {
        let mut c = PhaseConfig::new(theta, start.phi.clone());
        tether_all(&mut c, g, &params.w)?;
        let e = josephson_energy(&c, params, g)?;
        let exc = (e - e0).abs();
        if exc > max_excursion {
            max_excursion = exc;
        }
        samples.push(PathSample {
            step,
            delta_theta: dtheta,
            energy: e,
            energy_excursion: exc,
        });
        Ok(c)
    };

    let mut final_config = start.clone();
    let mut step_counter = 0usize;

    match path {
        PathSpec::TypeA => {
            for k in 0..=n_steps {
                let t = R::of_usize(k) / R::of_usize(n_steps);
                let mut theta = start.theta.clone();
                for &id in &boundary_ids {
                    theta[id] = wrap_2pi(theta[id] + t * pi);
                }
                final_config = eval(theta, step_counter, t * pi)?;
                step_counter += 1;
            }
        }
        PathSpec::TypeB => {
            let merge_delta: Vec<R> = ref_phase.iter().map(|&ph| wrap_pm_pi(zeta - ph)).collect();
            let thirds = n_steps / 3 + 1;
            let stage_theta = |merge_t: R, dtheta: R, restore_t: R| -> Vec<R> {
                let mut theta = start.theta.clone();
                for (k, links) in loop_links.iter().enumerate() {
                    let shift = (merge_t - restore_t) * merge_delta[k];
                    for &id in links {
                        theta[id] = wrap_2pi(theta[id] + shift);
                    }
                }
                for &id in &boundary_ids {
                    theta[id] = wrap_2pi(theta[id] + dtheta);
                }
                theta
            };
            for k in 0..=thirds {
                let t = R::of_usize(k) / R::of_usize(thirds);
                eval(
                    stage_theta(t, R::zero(), R::zero()),
                    step_counter,
                    R::zero(),
                )?;
                step_counter += 1;
            }
            for k in 1..=thirds {
                let t = R::of_usize(k) / R::of_usize(thirds);
                eval(
                    stage_theta(R::one(), t * pi, R::zero()),
                    step_counter,
                    t * pi,
                )?;
                step_counter += 1;
            }
            for k in 1..=thirds {
                let t = R::of_usize(k) / R::of_usize(thirds);
                final_config = eval(stage_theta(R::one(), pi, t), step_counter, pi)?;
                step_counter += 1;
            }
        }
        PathSpec::Naive => {
            for k in 0..=n_steps {
                let t = R::of_usize(k) / R::of_usize(n_steps);
                let mut theta = start.theta.clone();
                for &id in &boundary_ids {
                    theta[id] = wrap_2pi(theta[id] + t * pi);
                }
                final_config = eval(theta, step_counter, t * pi)?;
                step_counter += 1;
            }
        }
    }

    // The endpoint must be the plaquette-flipped start.
    let mut final_deviation = R::zero();
    for id in 0..g.n_links() {
        let expect = if boundary_ids.contains(&id) {
            wrap_2pi(start.theta[id] + pi)
        } else {
            start.theta[id]
        };
        let dev = dist_mod_pi(final_config.theta[id], expect)
            .min((wrap_pm_pi(final_config.theta[id] - expect)).abs());
        if dev > final_deviation {
            final_deviation = dev;
        }
    }

    Ok(FlipPathResult {
        max_excursion,
        samples,
        final_config,
        final_deviation,
    })
}
