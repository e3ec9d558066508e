//! Statistical mechanics of the classical limit: two superimposed loop
//! models.
//!
//! A ground state assigns one of three leg pairings to every site; following
//! pairings through shared links decomposes all links into closed loops, each
//! carrying a free U(1) phase (mod π). On top of that sits a ℤ₂ gas of
//! π-shift variables constrained to even parity on every star. The zero
//! temperature partition function factorizes into the two loop models; this
//! module enumerates both exactly at desk scale, evaluates the loop-fugacity
//! integral, and samples the finite-stiffness system with Metropolis walks.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{
    best_pairing, site_energy, site_min_energy, tether_all, CouplingParams, Pairing, PhaseConfig,
    ALL_PAIRINGS,
};
use crate::error::{CoreError, Result};
use crate::lattice::LatticeGeometry;
use crate::rng::CounterRng;
use crate::scalar::{wrap_2pi, Real};

/// A full assignment of leg pairings, indexed by flat site id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingConfig {
    pub pairing: Vec<Pairing>,
}

/// One closed loop: the flat link ids it visits, in traversal order, and its
/// winding numbers around the torus.
#[derive(Debug, Clone, Serialize)]
pub struct LoopRecord {
    pub links: Vec<usize>,
    pub winding: (i64, i64),
}

impl LoopRecord {
    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn is_winding(&self) -> bool {
        self.winding != (0, 0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LoopDecomposition {
    pub loops: Vec<LoopRecord>,
}

impl LoopDecomposition {
    pub fn n_loops(&self) -> usize {
        self.loops.len()
    }

    pub fn length_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for lp in &self.loops {
            *h.entry(lp.len()).or_insert(0) += 1;
        }
        h
    }
}

/// The alternating-plaquette crystal: every other plaquette carries an
/// elementary loop. Sites with even x+y pair (N,E)(S,W), odd sites (N,W)(E,S).
pub fn crystal_pairing(g: &LatticeGeometry) -> PairingConfig {
    let pairing = g
        .sites()
        .map(|s| {
            if (s.x + s.y) % 2 == 0 {
                Pairing::P12_34
            } else {
                Pairing::P14_23
            }
        })
        .collect();
    PairingConfig { pairing }
}

/// Straight-through pairing everywhere: loops are winding straight lines.
pub fn straight_pairing(g: &LatticeGeometry) -> PairingConfig {
    PairingConfig {
        pairing: vec![Pairing::P13_24; g.n_sites()],
    }
}

fn slot_displacement(slot: usize) -> (i64, i64) {
    match slot {
        0 => (0, 1),
        1 => (1, 0),
        2 => (0, -1),
        3 => (-1, 0),
        _ => unreachable!(),
    }
}

/// Decompose all links into closed loops by following the pairings through
/// sites. Deterministic: loops start at the lowest unvisited link id.
pub fn loops_from_pairing(pc: &PairingConfig, g: &LatticeGeometry) -> LoopDecomposition {
    assert_eq!(
        pc.pairing.len(),
        g.n_sites(),
        "pairing must cover every site"
    );
    let n_links = g.n_links();
    let mut visited = vec![false; n_links];
    let mut loops = Vec::new();

    for start in 0..n_links {
        if visited[start] {
            continue;
        }
        let mut links = Vec::new();
        let mut winding = (0i64, 0i64);

        let start_link = g.link_from_id(start);
        visited[start] = true;
        links.push(start);
        // Traverse the starting link from its first endpoint to its second.
        let [a, b] = g.link_endpoints(start_link);
        let d = match start_link.dir {
            crate::lattice::LinkDir::H => (1, 0),
            crate::lattice::LinkDir::V => (0, 1),
        };
        winding.0 += d.0;
        winding.1 += d.1;
        let _ = a;
        let mut site = b;
        let mut link = start_link;

        loop {
            let slot_in = g.slot_at_site(link, site).expect("link incident on site");
            let slot_out = pc.pairing[g.site_id(site)].partner(slot_in);
            let next = g.star_links(site).expect("in range")[slot_out];
            if next == start_link {
                // Arrived back at the starting endpoint; the start link's
                // displacement was counted when the walk began.
                break;
            }
            let (dx, dy) = slot_displacement(slot_out);
            winding.0 += dx;
            winding.1 += dy;
            let nid = g.link_id(next);
            debug_assert!(!visited[nid], "leg pairing must be a disjoint cycle cover");
            visited[nid] = true;
            links.push(nid);
            let [p, q] = g.link_endpoints(next);
            site = if p == site { q } else { p };
            link = next;
        }

        debug_assert_eq!(winding.0 % g.lx() as i64, 0);
        debug_assert_eq!(winding.1 % g.ly() as i64, 0);
        loops.push(LoopRecord {
            links,
            winding: (winding.0 / g.lx() as i64, winding.1 / g.ly() as i64),
        });
    }

    LoopDecomposition { loops }
}

/// Build a ground-state configuration from a pairing: each loop receives an
/// independent uniform phase keyed by `(seed, loop index)`, matter phases are
/// tethered.
pub fn config_from_pairing<R: Real>(
    g: &LatticeGeometry,
    pc: &PairingConfig,
    w: &crate::hadamard::SignMatrix,
    seed: u64,
) -> Result<PhaseConfig<R>> {
    // Stream ids are offset so loop-phase draws never share a stream with
    // a Metropolis chain keyed by the same master seed.
    const LOOP_PHASE_STREAM: u64 = 0x100f;
    let decomposition = loops_from_pairing(pc, g);
    let mut theta = vec![R::zero(); g.n_links()];
    for (k, lp) in decomposition.loops.iter().enumerate() {
        let mut rng = CounterRng::new(seed, LOOP_PHASE_STREAM + k as u64);
        let phase = R::of(rng.uniform_in(0.0, std::f64::consts::TAU));
        for &id in &lp.links {
            theta[id] = phase;
        }
    }
    let mut config = PhaseConfig::new(theta, vec![R::zero(); g.n_matter()]);
    tether_all(&mut config, g, w)?;
    Ok(config)
}

/// Result of the exact U(1) loop-covering enumeration.
#[derive(Debug, Clone, Serialize)]
pub struct LoopEnumeration {
    /// Number of coverings with a given loop count.
    pub histogram: BTreeMap<usize, u64>,
    /// Partition function Σ λ^{n_ℓ} at the requested fugacity.
    pub partition_function: f64,
    pub lambda: f64,
    pub max_loops: usize,
    /// Number of coverings attaining `max_loops`.
    pub argmax_count: u64,
    /// Up to `max_exemplars` maximizing configurations, decoded.
    pub argmax_exemplars: Vec<ArgmaxExemplar>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArgmaxExemplar {
    pub pairing: Vec<Pairing>,
    pub n_loops: usize,
    pub n_winding_loops: usize,
    pub lengths: Vec<usize>,
}

fn decode_pairing(mut index: u64, n_sites: usize) -> Vec<Pairing> {
    let mut pairing = Vec::with_capacity(n_sites);
    for _ in 0..n_sites {
        pairing.push(ALL_PAIRINGS[(index % 3) as usize]);
        index /= 3;
    }
    pairing
}

/// Count loops of a pairing via union-find over the 4·N site legs. This is
/// the fast path of the exhaustive enumeration and is independent of the
/// traversal in [`loops_from_pairing`].
fn count_loops_union_find(
    pairing_digits: &[u8],
    leg_pairs_by_choice: &[[(u32, u32); 2]; 3],
    link_legs: &[(u32, u32)],
    parent: &mut [u32],
) -> usize {
    for (i, p) in parent.iter_mut().enumerate() {
        *p = i as u32;
    }
    #[inline]
    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    #[inline]
    fn union(parent: &mut [u32], a: u32, b: u32) -> bool {
        let ra = find(parent, a);
        let rb = find(parent, b);
        if ra == rb {
            return false;
        }
        parent[ra as usize] = rb;
        true
    }
    let mut merges = 0usize;
    for (site, &digit) in pairing_digits.iter().enumerate() {
        let base = 4 * site as u32;
        for &(a, b) in &leg_pairs_by_choice[digit as usize] {
            if union(parent, base + a, base + b) {
                merges += 1;
            }
        }
    }
    for &(a, b) in link_legs {
        if union(parent, a, b) {
            merges += 1;
        }
    }
    parent.len() - merges
}

/// Exact sum over all 3^{N_sites} pairing coverings of λ^{n_ℓ}, together
/// with the loop-count histogram and the maximizing configurations.
///
/// Guarded to N_sites ≤ 16 (the 4×4 torus takes a few seconds in release).
pub fn loop_partition_function(
    g: &LatticeGeometry,
    lambda: f64,
    max_exemplars: usize,
) -> Result<LoopEnumeration> {
    let n_sites = g.n_sites();
    if n_sites > 16 {
        return Err(CoreError::guard(format!(
            "exhaustive loop enumeration needs 3^{n_sites} configurations; limit is N_sites <= 16"
        )));
    }

    // Leg pairs for each pairing choice, as local slot pairs.
    let leg_pairs_by_choice: [[(u32, u32); 2]; 3] =
        [[(0, 1), (2, 3)], [(0, 2), (1, 3)], [(0, 3), (1, 2)]];
    // Each link joins two legs (site-id, slot) -> 4*site + slot.
    let link_legs: Vec<(u32, u32)> = (0..g.n_links())
        .map(|id| {
            let l = g.link_from_id(id);
            let [a, b] = g.link_endpoints(l);
            let sa = g.slot_at_site(l, a).expect("incident") as u32;
            let sb = g.slot_at_site(l, b).expect("incident") as u32;
            (4 * g.site_id(a) as u32 + sa, 4 * g.site_id(b) as u32 + sb)
        })
        .collect();

    let total: u64 = 3u64.pow(n_sites as u32);
    let max_possible = g.n_links() / 2;

    // Shard over the leading base-3 digits for parallelism; merge in shard
    // order so results do not depend on scheduling.
    let shard_digits = n_sites.min(7);
    let n_shards: u64 = 3u64.pow(shard_digits as u32);
    let per_shard = total / n_shards;

    #[derive(Clone)]
    struct Shard {
        hist: Vec<u64>,
        max: usize,
        argmax_count: u64,
        exemplars: Vec<u64>,
    }

    let shards: Vec<Shard> = (0..n_shards)
        .into_par_iter()
        .map(|shard| {
            let mut digits = vec![0u8; n_sites];
            let mut idx = shard;
            for d in digits.iter_mut().rev().take(shard_digits) {
                *d = (idx % 3) as u8;
                idx /= 3;
            }
            let mut parent = vec![0u32; 4 * n_sites];
            let mut hist = vec![0u64; max_possible + 1];
            let mut max = 0usize;
            let mut argmax_count = 0u64;
            let mut exemplars: Vec<u64> = Vec::new();
            for local in 0..per_shard {
                let mut v = local;
                for d in digits.iter_mut().take(n_sites - shard_digits) {
                    *d = (v % 3) as u8;
                    v /= 3;
                }
                let n_loops =
                    count_loops_union_find(&digits, &leg_pairs_by_choice, &link_legs, &mut parent);
                hist[n_loops] += 1;
                if n_loops > max {
                    max = n_loops;
                    argmax_count = 0;
                    exemplars.clear();
                }
                if n_loops == max {
                    argmax_count += 1;
                    if exemplars.len() < max_exemplars {
                        // Recover the global config index of this sample.
                        let mut index = 0u64;
                        for &d in digits.iter().rev() {
                            index = index * 3 + d as u64;
                        }
                        exemplars.push(index);
                    }
                }
            }
            Shard {
                hist,
                max,
                argmax_count,
                exemplars,
            }
        })
        .collect();

    let mut hist_total = vec![0u64; max_possible + 1];
    let mut max = 0usize;
    for s in &shards {
        for (n, &c) in s.hist.iter().enumerate() {
            hist_total[n] += c;
        }
        max = max.max(s.max);
    }
    let mut argmax_count = 0u64;
    let mut exemplar_indices: Vec<u64> = Vec::new();
    for s in &shards {
        if s.max == max {
            argmax_count += s.argmax_count;
            for &e in &s.exemplars {
                if exemplar_indices.len() < max_exemplars {
                    exemplar_indices.push(e);
                }
            }
        }
    }

    let histogram: BTreeMap<usize, u64> = hist_total
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(n, &c)| (n, c))
        .collect();
    debug_assert_eq!(histogram.values().sum::<u64>(), total);

    let partition_function: f64 = histogram
        .iter()
        .map(|(&n, &c)| c as f64 * lambda.powi(n as i32))
        .sum();

    let argmax_exemplars = exemplar_indices
        .into_iter()
        .map(|index| {
            let pairing = decode_pairing(index, n_sites);
            let dec = loops_from_pairing(
                &PairingConfig {
                    pairing: pairing.clone(),
                },
                g,
            );
            ArgmaxExemplar {
                n_loops: dec.n_loops(),
                n_winding_loops: dec.loops.iter().filter(|l| l.is_winding()).count(),
                lengths: dec.loops.iter().map(|l| l.len()).collect(),
                pairing,
            }
        })
        .collect();

    Ok(LoopEnumeration {
        histogram,
        partition_function,
        lambda,
        max_loops: max,
        argmax_count,
        argmax_exemplars,
    })
}

/// ℤ₂ link variables τ ∈ {±1}, stored as a bitmask over flat link ids
/// (bit set means τ = −1, i.e. an extra π shift on that link).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Z2Config {
    pub tau_mask: u64,
}

impl Z2Config {
    pub fn identity() -> Self {
        Z2Config { tau_mask: 0 }
    }

    #[inline]
    pub fn tau(&self, link_id: usize) -> i32 {
        if self.tau_mask >> link_id & 1 == 1 {
            -1
        } else {
            1
        }
    }

    /// A valid loop-gas state has even shift parity on every star.
    pub fn is_valid(&self, g: &LatticeGeometry) -> bool {
        g.sites().all(|s| {
            let parity: u32 = g
                .star_links(s)
                .expect("in range")
                .iter()
                .map(|&l| (self.tau_mask >> g.link_id(l) & 1) as u32)
                .sum();
            parity % 2 == 0
        })
    }

    /// Flip the links of plaquette `p`: valid states map to valid states.
    pub fn flip_plaquette(&self, g: &LatticeGeometry, p: crate::lattice::PlaquetteIndex) -> Self {
        let mut mask = 0u64;
        for l in g.plaquette_links(p).expect("in range") {
            mask |= 1 << g.link_id(l);
        }
        Z2Config {
            tau_mask: self.tau_mask ^ mask,
        }
    }

    /// Superimpose the π shifts onto a phase configuration.
    pub fn apply_to<R: Real>(&self, config: &mut PhaseConfig<R>) {
        for (id, t) in config.theta.iter_mut().enumerate() {
            if self.tau_mask >> id & 1 == 1 {
                *t = wrap_2pi(*t + R::PI());
            }
        }
    }
}

/// ℤ₂ loop-gas count: configurations τ ∈ {±1}^{links} with even parity on
/// every star, counted via GF(2) rank. On the torus the star constraints
/// have rank N_sites − 1, so the count is 2^{N_links − N_sites + 1}.
#[derive(Debug, Clone, Serialize)]
pub struct Z2Count {
    pub n_links: usize,
    pub constraint_rank: usize,
    /// log2 of the number of valid configurations.
    pub dimension: usize,
    pub count: u128,
}

pub fn count_z2_configs(g: &LatticeGeometry) -> Result<Z2Count> {
    let n_links = g.n_links();
    if n_links > 120 {
        return Err(CoreError::guard("GF(2) star system limited to 120 links"));
    }
    let mut rows: Vec<u128> = g
        .sites()
        .map(|s| {
            let mut mask = 0u128;
            for l in g.star_links(s).expect("in range") {
                mask |= 1 << g.link_id(l);
            }
            mask
        })
        .collect();
    // Gaussian elimination over GF(2).
    let mut rank = 0usize;
    for bit in 0..n_links {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r] >> bit & 1 == 1) else {
            continue;
        };
        rows.swap(rank, pivot);
        for r in 0..rows.len() {
            if r != rank && rows[r] >> bit & 1 == 1 {
                rows[r] ^= rows[rank];
            }
        }
        rank += 1;
    }
    let dimension = n_links - rank;
    Ok(Z2Count {
        n_links,
        constraint_rank: rank,
        dimension,
        count: 1u128 << dimension,
    })
}

/// Exhaustively enumerate the valid τ configurations. Only for small
/// systems.
pub fn z2_valid_configs_exhaustive(g: &LatticeGeometry) -> Result<Vec<Z2Config>> {
    let n_links = g.n_links();
    if n_links > 20 {
        return Err(CoreError::guard(
            "exhaustive tau enumeration limited to 20 links",
        ));
    }
    let star_masks: Vec<u64> = g
        .sites()
        .map(|s| {
            let mut mask = 0u64;
            for l in g.star_links(s).expect("in range") {
                mask |= 1 << g.link_id(l);
            }
            mask
        })
        .collect();
    Ok((0..(1u64 << n_links))
        .filter(|&tau| star_masks.iter().all(|&m| (tau & m).count_ones() % 2 == 0))
        .map(|tau_mask| Z2Config { tau_mask })
        .collect())
}

/// How to evaluate the loop-fugacity integral.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureSpec {
    /// Product rectangle rule on the (p−1)-torus; spectrally accurate for
    /// this periodic integrand. `points` is per dimension.
    Periodic { points: usize },
    /// Importance-sampled Monte Carlo for loop lengths beyond nested
    /// quadrature reach.
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct FugacityResult {
    /// The cyclic integral Z_C.
    pub value: f64,
    /// Its exact K→∞ asymptotic form (2πK)^{−(p−1)/2} / √p. The √p is the
    /// closure factor of the cyclic chain; see the transfer-matrix oracle
    /// in the integration tests for the derivation.
    pub asymptote: f64,
    /// value / asymptote; tends to 1 from above as K grows.
    pub ratio: f64,
    /// Estimated absolute error of `value`.
    pub error_estimate: f64,
}

fn fugacity_integrand(thetas: &[f64], k_stiff: f64) -> f64 {
    // Cyclic chain with θ_p = 0: links (1,2)...(p−2,p−1), (p−1, p), (p, 1).
    let mut action = 2.0 - thetas[0].cos() - thetas[thetas.len() - 1].cos();
    for w in thetas.windows(2) {
        action += 1.0 - (w[0] - w[1]).cos();
    }
    (-k_stiff * action).exp()
}

fn fugacity_periodic_grid(p: usize, k_stiff: f64, points: usize) -> f64 {
    let dims = p - 1;
    let h = std::f64::consts::TAU / points as f64;
    let mut thetas = vec![0.0f64; dims];
    let total = (points as u64).pow(dims as u32);
    let mut sum = 0.0f64;
    for flat in 0..total {
        let mut v = flat;
        for t in thetas.iter_mut() {
            *t = (v % points as u64) as f64 * h;
            v /= points as u64;
        }
        sum += fugacity_integrand(&thetas, k_stiff);
    }
    sum / total as f64
}

/// Numerically evaluate the cyclic loop integral
/// `Z_C = ∫ ∏ dθ_i/2π · ∏ exp(−K[1 − cos(θ_i − θ_{i+1})])` for a loop of
/// length `p`, and report the ratio to its K→∞ asymptotic form.
pub fn fugacity_integral(p: usize, k_stiff: f64, spec: QuadratureSpec) -> Result<FugacityResult> {
    if p < 3 {
        return Err(CoreError::invalid("loop length must be at least 3"));
    }
    if !(k_stiff >= 0.0) {
        return Err(CoreError::invalid("stiffness must be nonnegative"));
    }

    let (value, error_estimate) = match spec {
        QuadratureSpec::Periodic { points } => {
            if p > 6 {
                return Err(CoreError::guard(
                    "nested quadrature is limited to p <= 6; use monte_carlo for longer loops",
                ));
            }
            if points < 16 || points % 2 != 0 {
                return Err(CoreError::invalid("points must be even and at least 16"));
            }
            let full = fugacity_periodic_grid(p, k_stiff, points);
            let half = fugacity_periodic_grid(p, k_stiff, points / 2);
            (full, (full - half).abs())
        }
        QuadratureSpec::MonteCarlo { samples, seed } => {
            if samples < 1000 {
                return Err(CoreError::invalid(
                    "monte carlo needs at least 1000 samples",
                ));
            }
            // Importance sampling: increments from a normal with variance
            // 1/K (≈ the single-link Boltzmann factor), weight corrected.
            let sigma = if k_stiff > 0.0 {
                (1.0 / k_stiff).sqrt()
            } else {
                1.0
            };
            let mut rng = CounterRng::new(seed, 0xf09);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let dims = p - 1;
            let norm = 1.0 / (std::f64::consts::TAU.sqrt() * sigma);
            for _ in 0..samples {
                let mut weight = 1.0;
                let mut prev = 0.0;
                let mut thetas = vec![0.0; dims];
                // Build θ_{p−1}, ..., θ_1 as a random walk from θ_p = 0.
                for t in thetas.iter_mut().rev() {
                    let xi = rng.normal() * sigma;
                    *t = prev + xi;
                    let q = norm * (-0.5 * (xi / sigma) * (xi / sigma)).exp();
                    weight *= (-k_stiff * (1.0 - xi.cos())).exp() / (std::f64::consts::TAU * q);
                    prev = *t;
                }
                // Closing link (p, 1).
                weight *= (-k_stiff * (1.0 - thetas[0].cos())).exp();
                sum += weight;
                sum_sq += weight * weight;
            }
            let mean = sum / samples as f64;
            let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
            (mean, (var / samples as f64).sqrt())
        }
    };

    let asymptote = if k_stiff > 0.0 {
        (std::f64::consts::TAU * k_stiff).powf(-((p as f64 - 1.0) / 2.0)) / (p as f64).sqrt()
    } else {
        f64::INFINITY
    };
    let ratio = if asymptote.is_finite() {
        value / asymptote
    } else {
        0.0
    };

    if error_estimate > 0.01 * value.abs().max(f64::MIN_POSITIVE) {
        return Err(CoreError::numeric(format!(
            "fugacity quadrature did not converge: value {value:e}, error estimate {error_estimate:e}"
        )));
    }

    Ok(FugacityResult {
        value,
        asymptote,
        ratio,
        error_estimate,
    })
}

/// Which degrees of freedom the Metropolis chain updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McMode {
    /// Sample gauge phases only, with matter integrated out: the Boltzmann
    /// energy is Σ_s min over matter of the site energy.
    EffectiveTheta,
    /// Sample gauge and matter phases under the full Josephson energy.
    FullThetaPhi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McInit {
    Random,
    Crystal,
    Straight,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McConfig<R> {
    pub k_eff: R,
    pub mode: McMode,
    /// Elementary proposals after burn-in.
    pub steps: u64,
    pub burn_in: u64,
    pub measure_every: u64,
    pub seed: u64,
    pub chain_id: u64,
    pub init: McInit,
    /// Sites whose best pairing is this close (total mod-π mismatch, rad)
    /// to the runner-up are counted as ambiguous in the diagnostics.
    pub ambiguity_tol: R,
}

impl<R: Real> McConfig<R> {
    pub fn new(k_eff: R, mode: McMode, steps: u64, seed: u64) -> Self {
        McConfig {
            k_eff,
            mode,
            steps,
            burn_in: steps / 4,
            measure_every: 512,
            seed,
            chain_id: 0,
            init: McInit::Random,
            ambiguity_tol: R::of(1e-3),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelatorBin<R> {
    /// Torus distance between link midpoints, lattice units.
    pub distance: R,
    /// ⟨cos 2(θ_i − θ_j)⟩ over all pairs at this distance.
    pub mean: R,
    /// Standard error from batch means.
    pub stderr: R,
    pub n_pairs: usize,
}

/// Loop observables accumulated by a Metropolis run (or computed exactly
/// from a single decomposition).
#[derive(Debug, Clone, Serialize)]
pub struct LoopStatistics<R> {
    pub n_loops_mean: R,
    pub mean_loop_length: R,
    pub mean_loop_length_stderr: R,
    pub length_histogram: BTreeMap<usize, u64>,
    pub correlators: Vec<CorrelatorBin<R>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct McDiagnostics<R> {
    pub acceptance_rate: R,
    pub final_step_width: R,
    pub plaquette_moves: u64,
    pub energy_mean: R,
    pub n_measurements: usize,
    /// Fraction of (site, measurement) classifications within
    /// `ambiguity_tol` of a second pairing.
    pub ambiguous_site_rate: R,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct McResult<R> {
    pub stats: LoopStatistics<R>,
    pub diagnostics: McDiagnostics<R>,
}

const MC_BATCHES: usize = 16;

struct SiteCache {
    /// Star link ids per site, N,E,S,W.
    stars: Vec<[usize; 4]>,
    /// The two sites incident on each link, with the local slot.
    link_sites: Vec<[(usize, usize); 2]>,
}

impl SiteCache {
    fn new(g: &LatticeGeometry) -> Self {
        let stars: Vec<[usize; 4]> = g
            .sites()
            .map(|s| {
                let links = g.star_links(s).expect("in range");
                [
                    g.link_id(links[0]),
                    g.link_id(links[1]),
                    g.link_id(links[2]),
                    g.link_id(links[3]),
                ]
            })
            .collect();
        let link_sites: Vec<[(usize, usize); 2]> = (0..g.n_links())
            .map(|id| {
                let l = g.link_from_id(id);
                let [a, b] = g.link_endpoints(l);
                [
                    (g.site_id(a), g.slot_at_site(l, a).expect("incident")),
                    (g.site_id(b), g.slot_at_site(l, b).expect("incident")),
                ]
            })
            .collect();
        SiteCache { stars, link_sites }
    }

    fn site_theta<R: Real>(&self, theta: &[R], site: usize) -> [R; 4] {
        let s = &self.stars[site];
        [theta[s[0]], theta[s[1]], theta[s[2]], theta[s[3]]]
    }
}

fn effective_site_energy<R: Real>(
    cache: &SiteCache,
    theta: &[R],
    site: usize,
    params: &CouplingParams<R>,
) -> R {
    site_min_energy(&cache.site_theta(theta, site), params)
}

fn full_site_energy<R: Real>(
    cache: &SiteCache,
    theta: &[R],
    phi: &[R],
    site: usize,
    params: &CouplingParams<R>,
) -> R {
    let st = cache.site_theta(theta, site);
    let mut sp = crate::classical::SitePhases {
        theta: st,
        phi: [R::zero(); 4],
    };
    for slot in 0..4 {
        sp.phi[slot] = phi[4 * site + slot];
    }
    site_energy(&sp, params)
}

/// Metropolis sampling of the loop structure at stiffness `K_eff`.
///
/// Moves are single-phase updates with a step width adapted during burn-in
/// toward 40% acceptance, plus plaquette π-shift proposals, which are exact
/// zero-cost symmetry moves and are always accepted. Two runs with the same
/// config are bit-identical.
pub fn mc_sample<R: Real>(
    g: &LatticeGeometry,
    config: &McConfig<R>,
    params: &CouplingParams<R>,
) -> Result<McResult<R>> {
    if !(config.k_eff > R::zero()) {
        return Err(CoreError::invalid("K_eff must be positive"));
    }
    let cache = SiteCache::new(g);
    let n_links = g.n_links();
    let n_sites = g.n_sites();
    let mut rng = CounterRng::new(config.seed, config.chain_id);

    // Initial state.
    let mut theta: Vec<R> = match config.init {
        McInit::Random => (0..n_links)
            .map(|_| R::of(rng.uniform_in(0.0, std::f64::consts::TAU)))
            .collect(),
        McInit::Crystal => {
            config_from_pairing::<R>(g, &crystal_pairing(g), &params.w, config.seed)?.theta
        }
        McInit::Straight => {
            config_from_pairing::<R>(g, &straight_pairing(g), &params.w, config.seed)?.theta
        }
    };
    let mut phi: Vec<R> = match config.mode {
        McMode::EffectiveTheta => Vec::new(),
        McMode::FullThetaPhi => {
            let mut c = PhaseConfig::new(theta.clone(), vec![R::zero(); g.n_matter()]);
            tether_all(&mut c, g, &params.w)?;
            theta = c.theta;
            c.phi
        }
    };

    let mut site_energies: Vec<R> = (0..n_sites)
        .map(|s| match config.mode {
            McMode::EffectiveTheta => effective_site_energy(&cache, &theta, s, params),
            McMode::FullThetaPhi => full_site_energy(&cache, &theta, &phi, s, params),
        })
        .collect();

    let plaquette_masks: Vec<Vec<usize>> = g
        .plaquettes()
        .map(|p| {
            g.plaquette_links(p)
                .expect("in range")
                .iter()
                .map(|&l| g.link_id(l))
                .collect()
        })
        .collect();
    let plaquette_corner_transforms: Vec<Vec<(usize, crate::hadamard::MonomialMatrix)>> = g
        .plaquettes()
        .map(|p| {
            let boundary = g.plaquette_links(p).expect("in range");
            g.plaquette_corners(p)
                .iter()
                .map(|&corner| {
                    let mut signs = [1i32; 4];
                    for &l in &boundary {
                        if let Some(slot) = g.slot_at_site(l, corner) {
                            signs[slot] = -1;
                        }
                    }
                    let left = crate::classical::matter_companion(&params.w, signs)
                        .expect("even patterns always have companions");
                    (g.site_id(corner), left)
                })
                .collect()
        })
        .collect();

    // One state-touching degree of freedom count for move selection.
    let n_phase_dof = match config.mode {
        McMode::EffectiveTheta => n_links,
        McMode::FullThetaPhi => n_links + g.n_matter(),
    };

    let mut step_width = R::of(0.5);
    let target_acc = 0.4;
    let mut window_prop = 0u64;
    let mut window_acc = 0u64;
    let mut meas_prop = 0u64;
    let mut meas_acc = 0u64;
    let mut plaquette_moves = 0u64;

    // Measurement accumulators.
    let pair_bins: Vec<(u64, usize, usize)> = {
        // (distance key, i, j) for all link pairs, grouped later.
        let mut v = Vec::new();
        for i in 0..n_links {
            for j in (i + 1)..n_links {
                let d = g.link_distance(g.link_from_id(i), g.link_from_id(j));
                v.push(((d * 1e6).round() as u64, i, j));
            }
        }
        v
    };
    let mut distance_keys: Vec<u64> = pair_bins.iter().map(|&(k, _, _)| k).collect();
    distance_keys.sort_unstable();
    distance_keys.dedup();
    let key_index: BTreeMap<u64, usize> = distance_keys
        .iter()
        .enumerate()
        .map(|(i, &k)| (k, i))
        .collect();
    let pairs_per_key: Vec<usize> = {
        let mut counts = vec![0usize; distance_keys.len()];
        for &(k, _, _) in &pair_bins {
            counts[key_index[&k]] += 1;
        }
        counts
    };

    let mut corr_batch = vec![vec![0.0f64; distance_keys.len()]; MC_BATCHES];
    let mut corr_batch_n = [0u64; MC_BATCHES];
    let mut length_hist: BTreeMap<usize, u64> = BTreeMap::new();
    let mut mean_len_batch = [0.0f64; MC_BATCHES];
    let mut n_loops_sum = 0.0f64;
    let mut energy_sum = R::zero();
    let mut n_meas = 0usize;
    let mut ambiguous = 0u64;
    let mut classified = 0u64;

    let total_steps = config.burn_in + config.steps;
    let measure_stride = config.measure_every.max(1);

    for step in 0..total_steps {
        let in_measurement = step >= config.burn_in;
        // Plaquette proposal roughly once per sweep.
        let choice = rng.below(n_phase_dof as u64 + n_sites as u64 / 4 + 1);
        if choice >= n_phase_dof as u64 {
            let p = rng.below(n_sites as u64) as usize;
            for &id in &plaquette_masks[p] {
                theta[id] = wrap_2pi(theta[id] + R::PI());
            }
            if let McMode::FullThetaPhi = config.mode {
                for (site, left) in &plaquette_corner_transforms[p] {
                    let old: [R; 4] = [
                        phi[4 * site],
                        phi[4 * site + 1],
                        phi[4 * site + 2],
                        phi[4 * site + 3],
                    ];
                    for slot in 0..4 {
                        let shift = if left.signs[slot] == -1 {
                            R::PI()
                        } else {
                            R::zero()
                        };
                        phi[4 * site + slot] = wrap_2pi(old[left.perm[slot]] + shift);
                    }
                }
            }
            // Exact symmetry: site energies unchanged by construction.
            plaquette_moves += 1;
        } else {
            let dof = choice as usize;
            let delta = R::of(rng.uniform_in(-1.0, 1.0)) * step_width;
            let (sites_touched, old_phase): ([usize; 2], R) = if dof < n_links {
                let [a, b] = cache.link_sites[dof];
                ([a.0, b.0], theta[dof])
            } else {
                let site = (dof - n_links) / 4;
                ([site, site], phi[dof - n_links])
            };
            let new_phase = wrap_2pi(old_phase + delta);
            if dof < n_links {
                theta[dof] = new_phase;
            } else {
                phi[dof - n_links] = new_phase;
            }
            let mut delta_e = R::zero();
            let mut new_energies = [R::zero(); 2];
            let distinct = if sites_touched[0] == sites_touched[1] {
                1
            } else {
                2
            };
            for (k, &s) in sites_touched.iter().take(distinct).enumerate() {
                let e = match config.mode {
                    McMode::EffectiveTheta => effective_site_energy(&cache, &theta, s, params),
                    McMode::FullThetaPhi => full_site_energy(&cache, &theta, &phi, s, params),
                };
                new_energies[k] = e;
                delta_e += e - site_energies[s];
            }
            let accept = if delta_e <= R::zero() {
                // Consume a uniform either way so the draw count per
                // proposal is fixed.
                let _ = rng.uniform();
                true
            } else {
                let u = rng.uniform();
                let arg = -(config.k_eff * delta_e / params.j)
                    .to_f64()
                    .expect("finite");
                u < arg.exp()
            };
            window_prop += 1;
            if in_measurement {
                meas_prop += 1;
            }
            if accept {
                window_acc += 1;
                if in_measurement {
                    meas_acc += 1;
                }
                for (k, &s) in sites_touched.iter().take(distinct).enumerate() {
                    site_energies[s] = new_energies[k];
                }
            } else if dof < n_links {
                theta[dof] = old_phase;
            } else {
                phi[dof - n_links] = old_phase;
            }

            // Adapt the step width during burn-in only.
            if !in_measurement && window_prop >= 200 {
                let acc = window_acc as f64 / window_prop as f64;
                let factor = (acc / target_acc).clamp(0.5, 2.0);
                step_width = (step_width * R::of(factor)).min(R::PI()).max(R::of(1e-6));
                window_prop = 0;
                window_acc = 0;
            }
        }

        if in_measurement && (step - config.burn_in) % measure_stride == 0 {
            let batch = (n_meas * MC_BATCHES / ((config.steps / measure_stride) as usize + 1))
                .min(MC_BATCHES - 1);
            // Loop structure from the best pairing at each site.
            let mut pairing = Vec::with_capacity(n_sites);
            for s in 0..n_sites {
                let st = cache.site_theta(&theta, s);
                let (best, _) = best_pairing(&st);
                // Ambiguity: distance to the runner-up pairing.
                let mut mismatches: Vec<R> = ALL_PAIRINGS
                    .iter()
                    .map(|p| {
                        p.pairs()
                            .iter()
                            .map(|&(a, b)| crate::scalar::dist_mod_pi(st[a], st[b]))
                            .sum()
                    })
                    .collect();
                mismatches.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                if mismatches[1] - mismatches[0] <= config.ambiguity_tol {
                    ambiguous += 1;
                }
                classified += 1;
                pairing.push(best);
            }
            let dec = loops_from_pairing(&PairingConfig { pairing }, g);
            let n_loops = dec.n_loops();
            n_loops_sum += n_loops as f64;
            mean_len_batch[batch] += n_links as f64 / n_loops as f64;
            for lp in &dec.loops {
                *length_hist.entry(lp.len()).or_insert(0) += 1;
            }
            for &(key, i, j) in &pair_bins {
                let c = ((theta[i] - theta[j]) * R::of(2.0))
                    .cos()
                    .to_f64()
                    .expect("finite");
                corr_batch[batch][key_index[&key]] += c;
            }
            corr_batch_n[batch] += 1;
            energy_sum += site_energies.iter().copied().sum::<R>();
            n_meas += 1;
        }
    }

    if n_meas == 0 {
        return Err(CoreError::invalid(
            "no measurements: steps / measure_every is zero",
        ));
    }

    let acceptance = if meas_prop > 0 {
        meas_acc as f64 / meas_prop as f64
    } else {
        0.0
    };
    let mut warnings = Vec::new();
    if !(0.05..=0.95).contains(&acceptance) {
        warnings.push(format!(
            "single-phase acceptance rate {acceptance:.3} outside [0.05, 0.95]"
        ));
    }

    // Batch-mean statistics.
    let active_batches: Vec<usize> = (0..MC_BATCHES).filter(|&b| corr_batch_n[b] > 0).collect();
    let nb = active_batches.len().max(1);
    let len_means: Vec<f64> = active_batches
        .iter()
        .map(|&b| mean_len_batch[b] / corr_batch_n[b] as f64)
        .collect();
    let len_mean: f64 = len_means.iter().sum::<f64>() / nb as f64;
    let len_var: f64 = len_means
        .iter()
        .map(|m| (m - len_mean) * (m - len_mean))
        .sum::<f64>()
        / nb as f64;
    let len_stderr = (len_var / nb as f64).sqrt();

    let correlators: Vec<CorrelatorBin<R>> = distance_keys
        .iter()
        .enumerate()
        .map(|(ki, &key)| {
            let per_batch: Vec<f64> = active_batches
                .iter()
                .map(|&b| corr_batch[b][ki] / (corr_batch_n[b] as f64 * pairs_per_key[ki] as f64))
                .collect();
            let mean = per_batch.iter().sum::<f64>() / nb as f64;
            let var = per_batch
                .iter()
                .map(|m| (m - mean) * (m - mean))
                .sum::<f64>()
                / nb as f64;
            CorrelatorBin {
                distance: R::of(key as f64 / 1e6),
                mean: R::of(mean),
                stderr: R::of((var / nb as f64).sqrt()),
                n_pairs: pairs_per_key[ki],
            }
        })
        .collect();

    Ok(McResult {
        stats: LoopStatistics {
            n_loops_mean: R::of(n_loops_sum / n_meas as f64),
            mean_loop_length: R::of(len_mean),
            mean_loop_length_stderr: R::of(len_stderr),
            length_histogram: length_hist,
            correlators,
        },
        diagnostics: McDiagnostics {
            acceptance_rate: R::of(acceptance),
            final_step_width: step_width,
            plaquette_moves,
            energy_mean: energy_sum / R::of_usize(n_meas),
            n_measurements: n_meas,
            ambiguous_site_rate: R::of(ambiguous as f64 / classified.max(1) as f64),
            warnings,
        },
    })
}

/// Factorization check at the counting level: every (pairing covering,
/// valid τ) combination is a ground state, so the joint ground-state count
/// is the product of the two loop-model counts.
pub fn factorization_check<R: Real>(g: &LatticeGeometry, seed: u64) -> Result<(u64, u64, u64)> {
    let params = CouplingParams::<R>::unit();
    let n_sites = g.n_sites();
    if n_sites > 4 {
        return Err(CoreError::guard("joint factorization check limited to 2x2"));
    }
    let taus = z2_valid_configs_exhaustive(g)?;
    let total_pairings = 3u64.pow(n_sites as u32);
    let ground = -R::of(8.0) * R::of_usize(n_sites);
    let tol = R::of(1e-9) * R::of_usize(n_sites);

    let mut joint = 0u64;
    for index in 0..total_pairings {
        let pairing = decode_pairing(index, n_sites);
        let base = config_from_pairing::<R>(g, &PairingConfig { pairing }, &params.w, seed)?;
        for tau in &taus {
            let mut c = base.clone();
            tau.apply_to(&mut c);
            tether_all(&mut c, g, &params.w)?;
            let e = crate::classical::josephson_energy(&c, &params, g)?;
            if (e - ground).abs() > tol {
                return Err(CoreError::numeric(format!(
                    "combination (pairing {index}, tau {:#b}) is not a ground state: {e}",
                    tau.tau_mask
                )));
            }
            joint += 1;
        }
    }
    Ok((total_pairings, taus.len() as u64, joint))
}

// Re-export used by the CLI for constructing configs.
pub use crate::classical::PhaseConfig as LoopPhaseConfig;
