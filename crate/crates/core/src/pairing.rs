//! The pairing (configuration) model: uniform perfect matchings on the
//! half-edge points of a degree sequence, their multigraph projection,
//! and loop / parallel-pair counts.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::degree::DegreeSequence;
use crate::union_find::UnionFind;

/// Default largest `m` accepted by [`enumerate_pairings`]; `11!! = 10395`.
pub const DEFAULT_ENUMERATION_CAP: u64 = 6;

const UNPAIRED: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PairingError {
    #[error("instance has m = {m} pairs, above the enumeration cap {cap}")]
    InstanceTooLarge { m: u64, cap: u64 },
    #[error("no simple pairing after {attempts} attempts")]
    AttemptsExhausted { attempts: u64 },
    #[error("max_attempts must be at least 1")]
    ZeroAttempts,
    #[error("point {point}: {reason}")]
    Malformed { point: usize, reason: &'static str },
}

/// Half-edge points of a degree sequence. Points of vertex `i` occupy the
/// contiguous index range `offsets[i] .. offsets[i + 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSpace {
    owner: Vec<u32>,
    offsets: Vec<usize>,
}

impl PointSpace {
    pub fn new(seq: &DegreeSequence) -> Self {
        let mut owner = Vec::with_capacity(seq.two_m() as usize);
        let mut offsets = Vec::with_capacity(seq.n() + 1);
        offsets.push(0);
        for (v, &d) in seq.degrees().iter().enumerate() {
            owner.extend(core::iter::repeat_n(v as u32, d as usize));
            offsets.push(owner.len());
        }
        Self { owner, offsets }
    }

    pub fn total_points(&self) -> usize {
        self.owner.len()
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn owner(&self, point: usize) -> usize {
        self.owner[point] as usize
    }

    pub fn points_of(&self, vertex: usize) -> core::ops::Range<usize> {
        self.offsets[vertex]..self.offsets[vertex + 1]
    }

    pub fn degree(&self, vertex: usize) -> usize {
        self.offsets[vertex + 1] - self.offsets[vertex]
    }
}

/// A fixed-point-free involution on the points of a [`PointSpace`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing<'s> {
    space: &'s PointSpace,
    mate: Vec<u32>,
}

impl<'s> Pairing<'s> {
    /// Validates a mate table: an involution without fixed points.
    pub fn from_mates(space: &'s PointSpace, mate: Vec<u32>) -> Result<Self, PairingError> {
        if mate.len() != space.total_points() {
            return Err(PairingError::Malformed {
                point: mate.len().min(space.total_points()),
                reason: "mate table length differs from the number of points",
            });
        }
        for (s, &t) in mate.iter().enumerate() {
            let t = t as usize;
            if t >= mate.len() {
                return Err(PairingError::Malformed { point: s, reason: "mate out of range" });
            }
            if t == s {
                return Err(PairingError::Malformed { point: s, reason: "point paired with itself" });
            }
            if mate[t] as usize != s {
                return Err(PairingError::Malformed { point: s, reason: "mate relation is not symmetric" });
            }
        }
        Ok(Self { space, mate })
    }

    /// Builds from a list of point pairs covering every point once.
    pub fn from_pairs(space: &'s PointSpace, pairs: &[(u32, u32)]) -> Result<Self, PairingError> {
        let mut mate = vec![UNPAIRED; space.total_points()];
        for &(a, b) in pairs {
            for (x, y) in [(a, b), (b, a)] {
                let slot = mate.get_mut(x as usize).ok_or(PairingError::Malformed {
                    point: x as usize,
                    reason: "point out of range",
                })?;
                if *slot != UNPAIRED {
                    return Err(PairingError::Malformed { point: x as usize, reason: "point paired twice" });
                }
                *slot = y;
            }
        }
        if let Some(s) = mate.iter().position(|&t| t == UNPAIRED) {
            return Err(PairingError::Malformed { point: s, reason: "point left unpaired" });
        }
        Self::from_mates(space, mate)
    }

    pub(crate) fn from_complete_mates(space: &'s PointSpace, mate: Vec<u32>) -> Self {
        debug_assert!(mate.iter().all(|&t| t != UNPAIRED));
        Self { space, mate }
    }

    pub fn space(&self) -> &'s PointSpace {
        self.space
    }

    #[inline]
    pub fn mate(&self, point: usize) -> usize {
        self.mate[point] as usize
    }

    pub fn mates(&self) -> &[u32] {
        &self.mate
    }

    /// Number of matching-pairs, `m`.
    pub fn len(&self) -> usize {
        self.mate.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.mate.is_empty()
    }

    /// Matching-pairs `(s, s')` with `s < s'`, ordered by `s`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.mate
            .iter()
            .enumerate()
            .filter(|&(s, &t)| s < t as usize)
            .map(|(s, &t)| (s, t as usize))
    }

    /// Multigraph edges `(u, v)`, one per matching-pair, in [`Self::pairs`] order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs()
            .map(|(s, t)| (self.space.owner(s), self.space.owner(t)))
    }

    /// Position of this pairing in [`enumerate_pairings`] order.
    ///
    /// The lowest unpaired point is matched with the `k`-th of the other
    /// unpaired points (ascending); the rank is the mixed-radix number of
    /// these choices with radices `2m-1, 2m-3, .., 1`.
    pub fn rank(&self) -> u64 {
        let mut remaining: Vec<u32> = (0..self.mate.len() as u32).collect();
        let mut rank = 0u64;
        while !remaining.is_empty() {
            let first = remaining.remove(0);
            let target = self.mate[first as usize];
            let k = remaining.iter().position(|&p| p == target).expect("involution");
            rank = rank * remaining.len() as u64 + k as u64;
            remaining.remove(k);
        }
        rank
    }
}

/// Draws a uniform pairing: the lowest unpaired point is matched with a
/// uniform choice among all other unpaired points, repeatedly.
pub fn sample_pairing<'s, R: RngCore + ?Sized>(space: &'s PointSpace, rng: &mut R) -> Pairing<'s> {
    let total = space.total_points();
    let mut mate = vec![UNPAIRED; total];
    let mut pool = PointPool::full(total);
    for s in 0..total {
        if mate[s] != UNPAIRED {
            continue;
        }
        pool.remove(s as u32);
        let t = pool.take_uniform(rng);
        mate[s] = t;
        mate[t as usize] = s as u32;
    }
    Pairing::from_complete_mates(space, mate)
}

/// Unpaired points with O(1) removal and uniform draws (swap-remove).
#[derive(Debug, Clone)]
pub(crate) struct PointPool {
    items: Vec<u32>,
    position: Vec<u32>,
}

impl PointPool {
    pub(crate) fn full(total: usize) -> Self {
        Self {
            items: (0..total as u32).collect(),
            position: (0..total as u32).collect(),
        }
    }

    #[inline]
    pub(crate) fn len(&self) -> usize {
        self.items.len()
    }

    #[inline]
    pub(crate) fn remove(&mut self, point: u32) {
        let at = self.position[point as usize] as usize;
        debug_assert_eq!(self.items[at], point);
        let last = self.items.pop().expect("pool not empty");
        if last != point {
            self.items[at] = last;
            self.position[last as usize] = at as u32;
        }
        self.position[point as usize] = u32::MAX;
    }

    #[inline]
    pub(crate) fn take_uniform<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> u32 {
        let at = rng.random_range(0..self.items.len());
        let point = self.items[at];
        self.remove(point);
        point
    }
}

/// Iterator over every pairing of a small instance, each exactly once,
/// in increasing [`Pairing::rank`].
#[derive(Debug, Clone)]
pub struct PairingEnumerator<'s> {
    space: &'s PointSpace,
    digits: Vec<u32>,
    done: bool,
}

impl<'s> Iterator for PairingEnumerator<'s> {
    type Item = Pairing<'s>;

    fn next(&mut self) -> Option<Pairing<'s>> {
        if self.done {
            return None;
        }
        let total = self.space.total_points();
        let mut mate = vec![UNPAIRED; total];
        let mut remaining: Vec<u32> = (0..total as u32).collect();
        for &k in &self.digits {
            let first = remaining.remove(0);
            let other = remaining.remove(k as usize);
            mate[first as usize] = other;
            mate[other as usize] = first;
        }
        // Advance the mixed-radix counter; digit i has radix total - 1 - 2i.
        self.done = true;
        for i in (0..self.digits.len()).rev() {
            let radix = (total - 1 - 2 * i) as u32;
            if self.digits[i] + 1 < radix {
                self.digits[i] += 1;
                self.done = false;
                break;
            }
            self.digits[i] = 0;
        }
        Some(Pairing::from_complete_mates(self.space, mate))
    }
}

/// `(2m - 1)!!`.
pub fn pairing_count(m: u64) -> u128 {
    (1..=m).map(|k| (2 * k - 1) as u128).product()
}

pub fn enumerate_pairings(space: &PointSpace, cap: u64) -> Result<PairingEnumerator<'_>, PairingError> {
    let m = (space.total_points() / 2) as u64;
    if m > cap {
        return Err(PairingError::InstanceTooLarge { m, cap });
    }
    Ok(PairingEnumerator {
        space,
        digits: vec![0; m as usize],
        done: false,
    })
}

/// Matching-pairs with both points on the same vertex.
pub fn count_loops(p: &Pairing<'_>) -> u64 {
    p.edges().filter(|(u, v)| u == v).count() as u64
}

/// `sum_{u != v} C(m_uv, 2)` over unordered vertex pairs, where `m_uv` is
/// the number of matching-pairs joining `u` and `v`. Loops never count.
pub fn count_parallel_pairs(p: &Pairing<'_>) -> u64 {
    multiplicity_profile(p).parallel_pairs
}

struct Multiplicities {
    parallel_pairs: u64,
    max_multiplicity: u64,
}

fn multiplicity_profile(p: &Pairing<'_>) -> Multiplicities {
    let mut links: Vec<(u32, u32)> = p
        .edges()
        .filter(|(u, v)| u != v)
        .map(|(u, v)| (u.min(v) as u32, u.max(v) as u32))
        .collect();
    links.sort_unstable();
    let mut parallel_pairs = 0u64;
    let mut max_multiplicity = 0u64;
    for run in links.chunk_by(|a, b| a == b) {
        let k = run.len() as u64;
        parallel_pairs += k * (k - 1) / 2;
        max_multiplicity = max_multiplicity.max(k);
    }
    Multiplicities {
        parallel_pairs,
        max_multiplicity,
    }
}

/// Component structure and simplicity counters of one realization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentReport {
    /// Component sizes, nonincreasing.
    pub component_sizes: Vec<u32>,
    /// `C_n`.
    pub largest: u32,
    /// `X_n`.
    pub loops: u64,
    /// `Y_n`.
    pub parallel_pairs: u64,
    pub simple: bool,
}

impl ComponentReport {
    pub(crate) fn from_parts(mut component_sizes: Vec<u32>, loops: u64, parallel_pairs: u64) -> Self {
        component_sizes.sort_unstable_by(|a, b| b.cmp(a));
        Self {
            largest: component_sizes.first().copied().unwrap_or(0),
            component_sizes,
            loops,
            parallel_pairs,
            simple: loops == 0 && parallel_pairs == 0,
        }
    }
}

/// Components of the projected multigraph, via union-find.
pub fn project_components(p: &Pairing<'_>) -> ComponentReport {
    let space = p.space();
    let mut uf = UnionFind::new(space.n());
    let mut loops = 0u64;
    for (u, v) in p.edges() {
        if u == v {
            loops += 1;
        } else {
            uf.union(u, v);
        }
    }
    ComponentReport::from_parts(uf.component_sizes(), loops, count_parallel_pairs(p))
}

/// True when every vertex pair is joined at most once and there are no loops.
pub fn has_only_single_edges(p: &Pairing<'_>) -> bool {
    count_loops(p) == 0 && multiplicity_profile(p).max_multiplicity <= 1
}

/// Rejection sampler for the uniform simple graph with the given degrees.
/// Returns the accepted pairing and the 1-based attempt on which it came.
pub fn sample_simple_graph<'s, R: RngCore + ?Sized>(
    space: &'s PointSpace,
    rng: &mut R,
    max_attempts: u64,
) -> Result<(Pairing<'s>, u64), PairingError> {
    if max_attempts == 0 {
        return Err(PairingError::ZeroAttempts);
    }
    for attempt in 1..=max_attempts {
        let p = sample_pairing(space, rng);
        if count_loops(&p) == 0 && count_parallel_pairs(&p) == 0 {
            return Ok((p, attempt));
        }
    }
    Err(PairingError::AttemptsExhausted { attempts: max_attempts })
}
