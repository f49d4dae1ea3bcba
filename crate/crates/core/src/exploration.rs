//! Component discovery by lazy pairing generation.
//!
//! Starting from a root vertex, the first active point (FIFO on global
//! point index) is paired with a uniform choice among all other unpaired
//! points. A partner on a fresh vertex pulls that vertex into the cluster
//! and activates its remaining points; a partner that is itself active
//! removes two active points. The chain state is the number of active
//! points `A(t)` together with the counts `I_j(t)` of untouched vertices
//! of each degree `j`, and `A(t) + I(t) = 2m - 2t` holds at every step.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;
use thiserror::Error;

use crate::pairing::{ComponentReport, Pairing, PointPool, PointSpace};

const UNPAIRED: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExplorationError {
    #[error("no active points left; the component is complete")]
    CannotStep,
    #[error("vertex {vertex} is out of range or already explored")]
    InvalidRoot { vertex: usize },
}

/// The Markov state `(t, A(t), {I_j(t)})` detached from any pairing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainSnapshot {
    pub t: u64,
    pub active: u64,
    /// `I_j` indexed by `j`.
    pub inactive_counts: Vec<u64>,
    /// Total number of points `2m = n d_bar`.
    pub two_m: u64,
}

impl ChainSnapshot {
    pub fn inactive(&self, j: u32) -> u64 {
        self.inactive_counts.get(j as usize).copied().unwrap_or(0)
    }

    /// `I(t) = sum_j j I_j(t)`.
    pub fn inactive_points(&self) -> u64 {
        self.inactive_counts
            .iter()
            .enumerate()
            .map(|(j, &c)| j as u64 * c)
            .sum()
    }

    /// `A(t) + I(t) == 2m - 2t`.
    pub fn conservation_holds(&self) -> bool {
        self.two_m
            .checked_sub(2 * self.t)
            .is_some_and(|rhs| self.active + self.inactive_points() == rhs)
    }

    /// One-step law of the chain; `None` when no step is possible.
    pub fn transition_law(&self) -> Option<TransitionLaw> {
        let pool = (self.active + self.inactive_points()).checked_sub(1)?;
        if self.active == 0 || pool == 0 {
            return None;
        }
        let join_weights = self
            .inactive_counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, &c)| (j as u32, j as u64 * c))
            .collect();
        Some(TransitionLaw {
            pool,
            active_weight: self.active - 1,
            join_weights,
        })
    }

    /// `E[A(t+1) | state]` from the transition law:
    /// `A - 2 (A - 1) / (A + I - 1) + sum_j j I_j (j - 2) / (A + I - 1)`.
    pub fn expected_next_active(&self) -> Option<f64> {
        let law = self.transition_law()?;
        let pool = law.pool as f64;
        let mut drift = -2.0 * law.active_weight as f64 / pool;
        for &(j, w) in &law.join_weights {
            drift += (j as f64 - 2.0) * w as f64 / pool;
        }
        Some(self.active as f64 + drift)
    }
}

/// Partner-choice law out of one state. Weights are point counts over a
/// common denominator `A + I - 1`: `A - 1` for an active partner and
/// `j I_j` for a fresh vertex of degree `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionLaw {
    pub pool: u64,
    pub active_weight: u64,
    pub join_weights: Vec<(u32, u64)>,
}

impl TransitionLaw {
    pub fn active_probability(&self) -> f64 {
        self.active_weight as f64 / self.pool as f64
    }

    /// `P{I_j decreases} = j I_j / (A + I - 1)`.
    pub fn join_probability(&self, j: u32) -> f64 {
        self.join_weights
            .iter()
            .find(|&&(k, _)| k == j)
            .map_or(0.0, |&(_, w)| w as f64 / self.pool as f64)
    }

    /// Integer check that the weights exhaust the pool.
    pub fn is_normalized(&self) -> bool {
        self.active_weight + self.join_weights.iter().map(|&(_, w)| w).sum::<u64>() == self.pool
    }
}

/// What happened in one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepRecord {
    /// Step count after this step.
    pub t: u64,
    /// `A(t)` after this step.
    pub active: u64,
    pub delta_active: i64,
    /// Degree of the vertex that joined, or 0 for an in-cluster partner.
    pub partner_degree: u32,
    pub component_id: u32,
}

/// Live chain over a partially generated pairing.
#[derive(Debug, Clone)]
pub struct ExplorationState<'s> {
    space: &'s PointSpace,
    mate: Vec<u32>,
    pool: PointPool,
    /// Active points, FIFO; entries paired in the meantime are skipped lazily.
    queue: VecDeque<u32>,
    active: u64,
    inactive_counts: Vec<u64>,
    inactive_points: u64,
    visited: Vec<bool>,
    cluster_size: u32,
    t: u64,
    component_id: Option<u32>,
}

impl<'s> ExplorationState<'s> {
    /// State with every vertex inactive and nothing paired.
    pub fn new(space: &'s PointSpace) -> Self {
        let max_degree = (0..space.n()).map(|v| space.degree(v)).max().unwrap_or(0);
        let mut inactive_counts = vec![0u64; max_degree + 1];
        for v in 0..space.n() {
            inactive_counts[space.degree(v)] += 1;
        }
        Self {
            space,
            mate: vec![UNPAIRED; space.total_points()],
            pool: PointPool::full(space.total_points()),
            queue: VecDeque::new(),
            active: 0,
            inactive_counts,
            inactive_points: space.total_points() as u64,
            visited: vec![false; space.n()],
            cluster_size: 0,
            t: 0,
            component_id: None,
        }
    }

    /// Opens a new cluster at an unvisited vertex `v` whose points become
    /// active in index order. Requires the previous cluster to be closed.
    pub fn start_root(&mut self, v: usize) -> Result<(), ExplorationError> {
        if v >= self.space.n() || self.visited[v] || self.active > 0 {
            return Err(ExplorationError::InvalidRoot { vertex: v });
        }
        let d = self.space.degree(v);
        self.visited[v] = true;
        self.inactive_counts[d] -= 1;
        self.inactive_points -= d as u64;
        self.queue.clear();
        self.queue.extend(self.space.points_of(v).map(|p| p as u32));
        self.active = d as u64;
        self.cluster_size = 1;
        self.component_id = Some(self.component_id.map_or(0, |c| c + 1));
        Ok(())
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// `A(t)`.
    pub fn active(&self) -> u64 {
        self.active
    }

    /// `I_j(t)`.
    pub fn inactive(&self, j: u32) -> u64 {
        self.inactive_counts.get(j as usize).copied().unwrap_or(0)
    }

    /// `I(t)`, maintained incrementally.
    pub fn inactive_points(&self) -> u64 {
        self.inactive_points
    }

    pub fn cluster_size(&self) -> u32 {
        self.cluster_size
    }

    pub fn is_visited(&self, v: usize) -> bool {
        self.visited[v]
    }

    pub fn snapshot(&self) -> ChainSnapshot {
        ChainSnapshot {
            t: self.t,
            active: self.active,
            inactive_counts: self.inactive_counts.clone(),
            two_m: self.space.total_points() as u64,
        }
    }

    /// Conservation with `I(t)` recomputed from the counts, plus agreement
    /// of the incremental `I(t)` with the recount.
    pub fn conservation_holds(&self) -> bool {
        let recount: u64 = self
            .inactive_counts
            .iter()
            .enumerate()
            .map(|(j, &c)| j as u64 * c)
            .sum();
        recount == self.inactive_points
            && self.active + recount + 2 * self.t == self.space.total_points() as u64
    }

    /// Full O(2m) audit: every point is exactly one of paired, active
    /// (owned by a current-cluster vertex, queued) or inactive (owned by an
    /// unvisited vertex); the pool holds exactly the unpaired points.
    pub fn audit(&self) -> bool {
        let mut queued = vec![false; self.mate.len()];
        for &p in &self.queue {
            if self.mate[p as usize] == UNPAIRED {
                if queued[p as usize] {
                    return false;
                }
                queued[p as usize] = true;
            }
        }
        let mut active = 0u64;
        let mut inactive = 0u64;
        let mut unpaired = 0usize;
        for s in 0..self.mate.len() {
            let paired = self.mate[s] != UNPAIRED;
            if paired {
                if self.mate[self.mate[s] as usize] as usize != s || queued[s] {
                    return false;
                }
                continue;
            }
            unpaired += 1;
            let owner_visited = self.visited[self.space.owner(s)];
            match (owner_visited, queued[s]) {
                (true, true) => active += 1,
                (false, false) => inactive += 1,
                _ => return false,
            }
        }
        unpaired == self.pool.len() && active == self.active && inactive == self.inactive_points
    }

    /// Advances the chain by one pair.
    pub fn step<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<StepRecord, ExplorationError> {
        if self.active == 0 {
            return Err(ExplorationError::CannotStep);
        }
        let first = loop {
            let p = self.queue.pop_front().expect("queue holds every active point");
            if self.mate[p as usize] == UNPAIRED {
                break p;
            }
        };
        self.pool.remove(first);
        self.active -= 1;
        // A + I = 2m - 2t is even and A >= 1, so a partner exists.
        let partner = self.pool.take_uniform(rng);
        self.mate[first as usize] = partner;
        self.mate[partner as usize] = first;

        let u = self.space.owner(partner as usize);
        let (delta_active, partner_degree) = if self.visited[u] {
            self.active -= 1;
            (-2, 0)
        } else {
            let d = self.space.degree(u);
            self.visited[u] = true;
            self.cluster_size += 1;
            self.inactive_counts[d] -= 1;
            self.inactive_points -= d as u64;
            self.queue.extend(
                self.space
                    .points_of(u)
                    .filter(|&p| p != partner as usize)
                    .map(|p| p as u32),
            );
            self.active += d as u64 - 1;
            (d as i64 - 2, d as u32)
        };
        self.t += 1;
        Ok(StepRecord {
            t: self.t,
            active: self.active,
            delta_active,
            partner_degree,
            component_id: self.component_id.unwrap_or(0),
        })
    }

    /// The finished pairing, once every point is paired.
    pub fn into_pairing(self) -> Option<Pairing<'s>> {
        if self.pool.len() != 0 {
            return None;
        }
        Some(Pairing::from_complete_mates(self.space, self.mate))
    }
}

pub fn start_exploration(space: &PointSpace, v: usize) -> Result<ExplorationState<'_>, ExplorationError> {
    let mut state = ExplorationState::new(space);
    state.start_root(v)?;
    Ok(state)
}

/// Path of a single-root exploration up to its stopping time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplorationTrace {
    pub root: usize,
    pub root_degree: u32,
    /// Empty unless recording was requested.
    pub steps: Vec<StepRecord>,
    /// `T_v`: first `t > 0` with `A(t) = 0` or `I(t) = 0`.
    pub stop_time: u64,
    pub component_size: u32,
}

/// Explores the component of `v` until its stopping time.
pub fn explore_component<R: RngCore + ?Sized>(
    space: &PointSpace,
    v: usize,
    rng: &mut R,
    record_trace: bool,
) -> Result<ExplorationTrace, ExplorationError> {
    explore_component_with(space, v, rng, record_trace, |_, _| {})
}

/// [`explore_component`] with a hook called after every step.
pub fn explore_component_with<R, F>(
    space: &PointSpace,
    v: usize,
    rng: &mut R,
    record_trace: bool,
    mut on_step: F,
) -> Result<ExplorationTrace, ExplorationError>
where
    R: RngCore + ?Sized,
    F: FnMut(&ExplorationState<'_>, &StepRecord),
{
    let mut state = start_exploration(space, v)?;
    let mut steps = Vec::new();
    loop {
        let rec = state.step(rng)?;
        on_step(&state, &rec);
        if record_trace {
            steps.push(rec);
        }
        if state.active() == 0 || state.inactive_points() == 0 {
            break;
        }
    }
    Ok(ExplorationTrace {
        root: v,
        root_degree: space.degree(v) as u32,
        steps,
        stop_time: state.t(),
        component_size: state.cluster_size(),
    })
}

/// Full component decomposition generated by exploration.
#[derive(Debug, Clone)]
pub struct Decomposition<'s> {
    pub pairing: Pairing<'s>,
    /// Sizes in discovery order.
    pub component_sizes: Vec<u32>,
}

impl Decomposition<'_> {
    pub fn largest(&self) -> u32 {
        self.component_sizes.iter().copied().max().unwrap_or(0)
    }

    /// Same fields as [`crate::pairing::project_components`] on the generated pairing.
    pub fn report(&self) -> ComponentReport {
        ComponentReport::from_parts(
            self.component_sizes.clone(),
            crate::pairing::count_loops(&self.pairing),
            crate::pairing::count_parallel_pairs(&self.pairing),
        )
    }
}

/// Explores from the lowest-indexed unvisited vertex until every vertex
/// is placed. Each cluster runs until no active points remain, so after
/// `I = 0` the leftover active points are paired among themselves and the
/// result is one complete uniform pairing.
pub fn largest_component_via_exploration<'s, R: RngCore + ?Sized>(
    space: &'s PointSpace,
    rng: &mut R,
) -> Decomposition<'s> {
    decompose_with(space, rng, |_, _| {})
}

/// [`largest_component_via_exploration`] with a per-step hook.
pub fn decompose_with<'s, R, F>(space: &'s PointSpace, rng: &mut R, mut on_step: F) -> Decomposition<'s>
where
    R: RngCore + ?Sized,
    F: FnMut(&ExplorationState<'s>, &StepRecord),
{
    let mut state = ExplorationState::new(space);
    let mut component_sizes = Vec::new();
    for v in 0..space.n() {
        if state.is_visited(v) {
            continue;
        }
        state.start_root(v).expect("unvisited root with closed cluster");
        while state.active() > 0 {
            let rec = state.step(rng).expect("active points remain");
            on_step(&state, &rec);
        }
        component_sizes.push(state.cluster_size());
    }
    Decomposition {
        pairing: state.into_pairing().expect("every point paired"),
        component_sizes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::degree::DegreeSequence;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn space(d: &[u32]) -> PointSpace {
        PointSpace::new(&DegreeSequence::new(d.to_vec()).unwrap())
    }

    #[test]
    fn initial_states() {
        let s = space(&[3, 3, 3, 3]);
        let st = start_exploration(&s, 0).unwrap();
        assert_eq!((st.active(), st.inactive(3), st.inactive_points()), (3, 3, 9));
        assert!(st.conservation_holds() && st.audit());

        let s = space(&[1, 1]);
        let st = start_exploration(&s, 0).unwrap();
        assert_eq!((st.active(), st.inactive(1)), (1, 1));

        let s = space(&[1, 2, 2, 3]);
        let st = start_exploration(&s, 3).unwrap();
        assert_eq!((st.active(), st.inactive(1), st.inactive(2), st.inactive_points()), (3, 1, 2, 5));
        assert!(st.audit());
    }

    #[test]
    fn bad_roots() {
        let s = space(&[1, 1]);
        assert_eq!(start_exploration(&s, 2).err(), Some(ExplorationError::InvalidRoot { vertex: 2 }));
        let mut st = start_exploration(&s, 0).unwrap();
        assert_eq!(st.start_root(1), Err(ExplorationError::InvalidRoot { vertex: 1 }));
    }

    #[test]
    fn forced_step_on_single_edge() {
        let s = space(&[1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut st = start_exploration(&s, 0).unwrap();
        let rec = st.step(&mut rng).unwrap();
        assert_eq!(rec.delta_active, -1);
        assert_eq!(rec.partner_degree, 1);
        assert_eq!((st.active(), st.cluster_size()), (0, 2));
        assert_eq!(st.step(&mut rng), Err(ExplorationError::CannotStep));
        let trace = explore_component(&s, 0, &mut rng, true).unwrap();
        assert_eq!((trace.stop_time, trace.component_size), (1, 2));
    }

    #[test]
    fn no_inactive_forces_active_partner() {
        // A single vertex of degree 2: A = 2, I = 0.
        let s = space(&[2]);
        let mut st = start_exploration(&s, 0).unwrap();
        let rec = st.step(&mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!((rec.delta_active, rec.partner_degree, rec.active), (-2, 0, 0));
    }

    #[test]
    fn analytic_law_of_a_spot_state() {
        // A = 3, I_2 = 2 (I = 4): 6 candidate partners, 4 on fresh vertices.
        let snap = ChainSnapshot { t: 0, active: 3, inactive_counts: vec![0, 0, 2], two_m: 7 };
        let law = snap.transition_law().unwrap();
        assert!(law.is_normalized());
        assert_eq!(law.pool, 6);
        assert!((law.join_probability(2) - 2.0 / 3.0).abs() < 1e-15);
        assert!((law.active_probability() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn stop_time_bounds_and_conservation() {
        let s = space(&[3; 40]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for v in 0..40 {
            let trace = explore_component_with(&s, v, &mut rng, true, |st, _| {
                assert!(st.conservation_holds());
                assert!(st.audit());
            })
            .unwrap();
            assert!(trace.component_size as u64 <= trace.stop_time + 1);
            assert!(trace.stop_time <= 60);
            assert_eq!(trace.steps.len() as u64, trace.stop_time);
        }
    }

    #[test]
    fn decomposition_covers_everything() {
        let s = space(&[1, 3, 2, 2, 1, 4, 1, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let dec = decompose_with(&s, &mut rng, |st, _| assert!(st.audit()));
            assert_eq!(dec.component_sizes.iter().sum::<u32>(), 8);
            let rep = dec.report();
            let projected = crate::pairing::project_components(&dec.pairing);
            assert_eq!(rep, projected);
        }
    }

    #[test]
    fn decomposition_of_matching_is_pairs() {
        let s = space(&[1, 1, 1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            assert_eq!(largest_component_via_exploration(&s, &mut rng).component_sizes, vec![2, 2]);
        }
    }
}
