//! Degree sequences, their empirical distribution and the scalar
//! functionals derived from it (branching ratio, offspring law,
//! Molloy-Reed sum, maximal-degree cap).
//!
//! All functionals are evaluated from integer sums over the degree
//! histogram with a single final division, so the algebraic identities
//! between them hold exactly in rational arithmetic.

use alloc::vec;
use alloc::vec::Vec;

use num_rational::Ratio;
use thiserror::Error;

/// Exact rational used for the functionals.
pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DegreeError {
    #[error("degree sequence is empty")]
    Empty,
    #[error("vertex {vertex} has degree 0; degrees must be positive")]
    ZeroDegree { vertex: usize },
    #[error("sum of degrees {two_m} is odd")]
    OddSum { two_m: u64 },
    #[error("vertex {vertex} has degree {degree} above the cap {cap}")]
    AboveCap { vertex: usize, degree: u32, cap: u32 },
    #[error("need at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("exponent gamma must exceed 3, got {0}")]
    InvalidGamma(f64),
    #[error("scale c must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("target branching ratio must lie in (0, 1], got {0}")]
    InvalidTarget(f64),
    #[error("no scale in (0, c] reaches nu <= {target} with a vertex at the degree cap {cap}")]
    InfeasibleTarget { target: f64, cap: u32 },
}

/// Parameters of the tail bound `p_j <= c * j^-gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubpowerParams {
    pub gamma: f64,
    pub c: f64,
}

impl SubpowerParams {
    pub fn new(gamma: f64, c: f64) -> Result<Self, DegreeError> {
        if !(gamma > 3.0) || !gamma.is_finite() {
            return Err(DegreeError::InvalidGamma(gamma));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(DegreeError::InvalidScale(c));
        }
        Ok(Self { gamma, c })
    }

    /// `floor((c n)^(1/gamma))`, clamped to at least 1.
    pub fn degree_cap(&self, n: usize) -> u32 {
        degree_cap(n, self.gamma, self.c)
    }
}

/// Largest `j >= 1` with `j^gamma <= c n`, i.e. `floor((c n)^(1/gamma))`.
///
/// The floating root is corrected by direct comparison so exact powers
/// land on the right integer.
pub fn degree_cap(n: usize, gamma: f64, c: f64) -> u32 {
    let budget = c * n as f64;
    if !(budget >= 1.0) {
        return 1;
    }
    let mut j = libm::floor(libm::pow(budget, 1.0 / gamma)).max(1.0) as u64;
    while j > 1 && libm::pow(j as f64, gamma) > budget {
        j -= 1;
    }
    while libm::pow((j + 1) as f64, gamma) <= budget {
        j += 1;
    }
    j.min(u32::MAX as u64) as u32
}

/// A fixed tuple of positive vertex degrees with even sum.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSequence {
    degrees: Vec<u32>,
    two_m: u64,
    subpower: Option<SubpowerParams>,
}

impl DegreeSequence {
    pub fn new(degrees: Vec<u32>) -> Result<Self, DegreeError> {
        if degrees.is_empty() {
            return Err(DegreeError::Empty);
        }
        let mut two_m = 0u64;
        for (vertex, &d) in degrees.iter().enumerate() {
            if d == 0 {
                return Err(DegreeError::ZeroDegree { vertex });
            }
            two_m += u64::from(d);
        }
        if !two_m.is_multiple_of(2) {
            return Err(DegreeError::OddSum { two_m });
        }
        Ok(Self {
            degrees,
            two_m,
            subpower: None,
        })
    }

    /// Attaches tail-bound metadata, enforcing the maximal-degree cap.
    ///
    /// The cap is `max(j_n, 2)`: a single parity-repaired vertex of degree
    /// 2 is admitted even when `j_n = 1`.
    pub fn with_subpower(degrees: Vec<u32>, params: SubpowerParams) -> Result<Self, DegreeError> {
        let mut seq = Self::new(degrees)?;
        let cap = params.degree_cap(seq.n()).max(2);
        if let Some((vertex, &degree)) = seq.degrees.iter().enumerate().find(|(_, &d)| d > cap) {
            return Err(DegreeError::AboveCap { vertex, degree, cap });
        }
        seq.subpower = Some(params);
        Ok(seq)
    }

    /// d-regular sequence on n vertices.
    pub fn regular(n: usize, d: u32) -> Result<Self, DegreeError> {
        Self::new(vec![d; n])
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    /// Number of half-edge points, `sum d_i`.
    pub fn two_m(&self) -> u64 {
        self.two_m
    }

    pub fn m(&self) -> u64 {
        self.two_m / 2
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn degree(&self, v: usize) -> u32 {
        self.degrees[v]
    }

    pub fn max_degree(&self) -> u32 {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// Lowest-indexed vertex of maximal degree.
    pub fn argmax_degree(&self) -> usize {
        let max = self.max_degree();
        self.degrees.iter().position(|&d| d == max).unwrap_or(0)
    }

    pub fn subpower(&self) -> Option<SubpowerParams> {
        self.subpower
    }

    pub fn distribution(&self) -> EmpiricalDistribution {
        empirical_distribution(self)
    }
}

/// Degree histogram of a sequence; `p_j = count_j / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    counts: Vec<u64>,
    n: u64,
    two_m: u64,
}

impl EmpiricalDistribution {
    /// Builds a histogram directly from counts indexed by degree.
    ///
    /// Returns `None` if there are no vertices or `counts[0] != 0`.
    pub fn from_counts(mut counts: Vec<u64>) -> Option<Self> {
        if counts.first().copied().unwrap_or(0) != 0 {
            return None;
        }
        while counts.last() == Some(&0) {
            counts.pop();
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return None;
        }
        let two_m = counts.iter().enumerate().map(|(j, &c)| j as u64 * c).sum();
        Some(Self { counts, n, two_m })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn two_m(&self) -> u64 {
        self.two_m
    }

    /// Number of vertices of degree `j`, i.e. `n p_j`.
    pub fn count(&self, j: u32) -> u64 {
        self.counts.get(j as usize).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn p(&self, j: u32) -> f64 {
        self.count(j) as f64 / self.n as f64
    }

    pub fn p_exact(&self, j: u32) -> Rational {
        Ratio::new(self.count(j) as i128, self.n as i128)
    }

    /// Observed maximum degree.
    pub fn max_degree(&self) -> u32 {
        (self.counts.len().saturating_sub(1)) as u32
    }

    /// Degrees with nonzero count, ascending.
    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, _)| j as u32)
    }

    pub fn d_bar(&self) -> f64 {
        self.two_m as f64 / self.n as f64
    }

    pub fn d_bar_exact(&self) -> Rational {
        Ratio::new(self.two_m as i128, self.n as i128)
    }

    /// `sum_i d_i (d_i - 1)`.
    pub fn second_factorial_sum(&self) -> u128 {
        self.counts
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                let j = j as u128;
                j * j.saturating_sub(1) * c as u128
            })
            .sum()
    }

    pub fn nu(&self) -> f64 {
        self.second_factorial_sum() as f64 / self.two_m as f64
    }

    pub fn nu_exact(&self) -> Rational {
        Ratio::new(self.second_factorial_sum() as i128, self.two_m as i128)
    }

    pub fn molloy_reed_sum(&self) -> f64 {
        self.molloy_reed_numerator() as f64 / self.n as f64
    }

    pub fn molloy_reed_exact(&self) -> Rational {
        Ratio::new(self.molloy_reed_numerator(), self.n as i128)
    }

    /// `sum_i d_i (d_i - 2) = sum_i d_i (d_i - 1) - 2m`.
    fn molloy_reed_numerator(&self) -> i128 {
        self.second_factorial_sum() as i128 - self.two_m as i128
    }

    pub fn offspring_law(&self) -> OffspringLaw {
        let weights = self
            .counts
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, &c)| j as u64 * c)
            .collect();
        OffspringLaw {
            weights,
            total: self.two_m,
        }
    }
}

/// Size-biased offspring law `q_j = (j + 1) p_{j+1} / d_bar`.
///
/// Stored as integer weights `(j + 1) * count_{j+1}` over `2m`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    weights: Vec<u64>,
    total: u64,
}

impl OffspringLaw {
    pub fn q(&self, j: u32) -> f64 {
        self.weight(j) as f64 / self.total as f64
    }

    pub fn q_exact(&self, j: u32) -> Rational {
        Ratio::new(self.weight(j) as i128, self.total as i128)
    }

    fn weight(&self, j: u32) -> u64 {
        self.weights.get(j as usize).copied().unwrap_or(0)
    }

    /// Largest `j` with `q_j` possibly nonzero.
    pub fn max_offspring(&self) -> u32 {
        self.weights.len().saturating_sub(1) as u32
    }

    pub fn total_mass_exact(&self) -> Rational {
        let s: u128 = self.weights.iter().map(|&w| w as u128).sum();
        Ratio::new(s as i128, self.total as i128)
    }

    pub fn mean(&self) -> f64 {
        self.mean_numerator() as f64 / self.total as f64
    }

    pub fn mean_exact(&self) -> Rational {
        Ratio::new(self.mean_numerator() as i128, self.total as i128)
    }

    fn mean_numerator(&self) -> u128 {
        self.weights
            .iter()
            .enumerate()
            .map(|(j, &w)| j as u128 * w as u128)
            .sum()
    }
}

pub fn empirical_distribution(seq: &DegreeSequence) -> EmpiricalDistribution {
    let mut counts = vec![0u64; seq.max_degree() as usize + 1];
    for &d in seq.degrees() {
        counts[d as usize] += 1;
    }
    EmpiricalDistribution {
        counts,
        n: seq.n() as u64,
        two_m: seq.two_m(),
    }
}

pub fn nu(dist: &EmpiricalDistribution) -> f64 {
    dist.nu()
}

pub fn offspring_law(dist: &EmpiricalDistribution) -> OffspringLaw {
    dist.offspring_law()
}

pub fn molloy_reed_sum(dist: &EmpiricalDistribution) -> f64 {
    dist.molloy_reed_sum()
}

/// Deterministic subcritical sequence obeying `p_j <= c j^-gamma`.
///
/// Counts are `floor(s n j^-gamma)` for `j = j_n .. 2`, the rest of the
/// vertices get degree 1, and an odd total is repaired by promoting one
/// degree-1 vertex to degree 2. The scale `s <= c` is the largest one
/// (bisection) whose repaired sequence has `nu <= target_nu`. Vertices
/// are listed by nonincreasing degree.
pub fn build_subpower_sequence(
    n: usize,
    gamma: f64,
    c: f64,
    target_nu: f64,
) -> Result<DegreeSequence, DegreeError> {
    if n < 2 {
        return Err(DegreeError::TooFewVertices(n));
    }
    let params = SubpowerParams::new(gamma, c)?;
    if !(target_nu > 0.0 && target_nu <= 1.0) {
        return Err(DegreeError::InvalidTarget(target_nu));
    }
    let cap = params.degree_cap(n);
    let feasible = |scale: f64| {
        subpower_counts(n, gamma, cap, scale).filter(|counts| counts_nu_at_most(counts, target_nu))
    };

    let counts = match feasible(c) {
        Some(counts) => counts,
        None => {
            let infeasible = DegreeError::InfeasibleTarget { target: target_nu, cap };
            if feasible(0.0).is_none() {
                return Err(infeasible);
            }
            let (mut lo, mut hi) = (0.0f64, c);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if feasible(mid).is_some() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let counts = feasible(lo).ok_or(infeasible.clone())?;
            if cap >= 2 && counts[cap as usize] == 0 {
                return Err(infeasible);
            }
            counts
        }
    };

    let mut degrees = Vec::with_capacity(n);
    for j in (1..counts.len()).rev() {
        degrees.extend(core::iter::repeat_n(j as u32, counts[j] as usize));
    }
    DegreeSequence::with_subpower(degrees, params)
}

/// Degree counts at a given scale, after parity repair. `None` when the
/// high-degree counts do not fit in `n` vertices or parity cannot be
/// repaired.
fn subpower_counts(n: usize, gamma: f64, cap: u32, scale: f64) -> Option<Vec<u64>> {
    let mut counts = vec![0u64; cap.max(2) as usize + 1];
    let mut high = 0u64;
    for j in 2..=cap {
        let c = libm::floor(scale * n as f64 * libm::pow(j as f64, -gamma));
        counts[j as usize] = c as u64;
        high += c as u64;
    }
    counts[1] = (n as u64).checked_sub(high)?;
    let two_m: u64 = counts.iter().enumerate().map(|(j, &c)| j as u64 * c).sum();
    if two_m % 2 == 1 {
        if counts[1] == 0 {
            return None;
        }
        counts[1] -= 1;
        counts[2] += 1;
    }
    Some(counts)
}

fn counts_nu_at_most(counts: &[u64], target: f64) -> bool {
    let mut s1 = 0u128;
    let mut s2 = 0u128;
    for (j, &c) in counts.iter().enumerate() {
        let j = j as u128;
        s1 += j * c as u128;
        s2 += j * j.saturating_sub(1) * c as u128;
    }
    s2 as f64 <= target * s1 as f64
}

/// Per-degree entry of a [`SubpowerReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeBound {
    pub degree: u32,
    pub count: u64,
    /// `c n j^-gamma + 1`.
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubpowerReport {
    pub per_degree: Vec<DegreeBound>,
    pub max_degree: u32,
    /// `floor((c n)^(1/gamma)) + 1`.
    pub max_degree_cap: u32,
    pub max_degree_ok: bool,
    pub parity_ok: bool,
    pub positive_ok: bool,
}

impl SubpowerReport {
    pub fn is_valid(&self) -> bool {
        self.max_degree_ok && self.parity_ok && self.positive_ok && self.per_degree.iter().all(|b| b.ok)
    }
}

/// Checks an arbitrary degree list against `p_j <= c j^-gamma`, with one
/// vertex of slack per degree class and on the maximal degree.
pub fn validate_subpower(degrees: &[u32], gamma: f64, c: f64) -> SubpowerReport {
    let n = degrees.len();
    let max_degree = degrees.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0u64; max_degree as usize + 1];
    for &d in degrees {
        counts[d as usize] += 1;
    }
    let per_degree = counts
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &count)| count > 0)
        .map(|(j, &count)| {
            let bound = c * n as f64 * libm::pow(j as f64, -gamma) + 1.0;
            DegreeBound {
                degree: j as u32,
                count,
                bound,
                ok: count as f64 <= bound,
            }
        })
        .collect();
    let max_degree_cap = degree_cap(n, gamma, c) + 1;
    let two_m: u64 = degrees.iter().map(|&d| u64::from(d)).sum();
    SubpowerReport {
        per_degree,
        max_degree,
        max_degree_cap,
        max_degree_ok: max_degree <= max_degree_cap,
        parity_ok: two_m.is_multiple_of(2),
        positive_ok: !degrees.is_empty() && counts[0] == 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn seq(d: &[u32]) -> DegreeSequence {
        DegreeSequence::new(d.to_vec()).unwrap()
    }

    fn r(a: i128, b: i128) -> Rational {
        Ratio::new(a, b)
    }

    #[test]
    fn rejects_bad_sequences() {
        assert_eq!(DegreeSequence::new(vec![]), Err(DegreeError::Empty));
        assert_eq!(
            DegreeSequence::new(vec![1, 0, 1]),
            Err(DegreeError::ZeroDegree { vertex: 1 })
        );
        assert_eq!(DegreeSequence::new(vec![1, 2]), Err(DegreeError::OddSum { two_m: 3 }));
    }

    #[test]
    fn histogram_examples() {
        let d = seq(&[1, 1]).distribution();
        assert_eq!(d.p_exact(1), r(1, 1));

        let d = seq(&[3, 3, 3, 3]).distribution();
        assert_eq!(d.p_exact(3), r(1, 1));
        assert_eq!(d.d_bar_exact(), r(3, 1));

        let d = seq(&[1, 1, 2, 2]).distribution();
        assert_eq!(d.p_exact(1), r(1, 2));
        assert_eq!(d.p_exact(2), r(1, 2));
        assert_eq!(d.d_bar_exact(), r(3, 2));
        assert_eq!(d.support().collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn nu_examples() {
        for d in 1..8u32 {
            assert_eq!(seq(&[d; 6]).distribution().nu_exact(), r(d as i128 - 1, 1));
        }
        assert_eq!(nu(&seq(&[1, 1]).distribution()), 0.0);
        assert_eq!(nu(&seq(&[2, 2]).distribution()), 1.0);
    }

    #[test]
    fn offspring_examples() {
        let q = seq(&[1, 1]).distribution().offspring_law();
        assert_eq!(q.q_exact(0), r(1, 1));

        let dist = seq(&[3, 3, 3, 3]).distribution();
        let q = dist.offspring_law();
        assert_eq!(q.q_exact(2), r(1, 1));
        assert_eq!(q.mean_exact(), r(2, 1));
        assert_eq!(q.mean_exact(), dist.nu_exact());

        let q = seq(&[1, 1, 2, 2]).distribution().offspring_law();
        assert_eq!(q.q_exact(0), r(1, 3));
        assert_eq!(q.q_exact(1), r(2, 3));
        assert_eq!(q.mean_exact(), r(2, 3));
        assert_eq!(q.total_mass_exact(), r(1, 1));
    }

    #[test]
    fn molloy_reed_examples() {
        assert_eq!(seq(&[2, 2, 2]).distribution().molloy_reed_exact(), r(0, 1));
        let d = seq(&[1, 1]).distribution();
        assert_eq!(d.molloy_reed_exact(), r(-1, 1));
        assert_eq!(molloy_reed_sum(&d), -1.0);
    }

    #[test]
    fn degree_cap_hits_exact_powers() {
        // 2^4 = 16 exactly.
        assert_eq!(degree_cap(16, 4.0, 1.0), 2);
        assert_eq!(degree_cap(15, 4.0, 1.0), 1);
        assert_eq!(degree_cap(10_000, 3.5, 1.0), 13);
        assert_eq!(degree_cap(1, 3.5, 0.5), 1);
    }

    #[test]
    fn build_two_vertices_is_all_ones() {
        let s = build_subpower_sequence(2, 3.5, 1.0, 0.9).unwrap();
        assert_eq!(s.degrees(), &[1, 1]);
        assert_eq!(s.distribution().nu(), 0.0);
    }

    #[test]
    fn build_ten_thousand() {
        let s = build_subpower_sequence(10_000, 3.5, 1.0, 0.9).unwrap();
        assert!(s.max_degree() <= 13);
        assert_eq!(s.max_degree(), 13);
        // direct evaluation of sum d(d-1) / sum d
        let num: u64 = s.degrees().iter().map(|&d| u64::from(d * (d - 1))).sum();
        let den: u64 = s.degrees().iter().map(|&d| u64::from(d)).sum();
        assert!((num as f64 / den as f64) <= 0.9);
        assert_eq!(s.two_m() % 2, 0);
        assert!(s.distribution().molloy_reed_sum() < 0.0);
        assert!(validate_subpower(s.degrees(), 3.5, 1.0).is_valid());
    }

    #[test]
    fn build_shrinks_scale_for_tight_target() {
        let loose = build_subpower_sequence(100_000, 3.5, 1.0, 1.0).unwrap();
        let loose_nu = loose.distribution().nu();
        assert!(loose_nu > 0.7);
        let tight = build_subpower_sequence(100_000, 3.5, 1.0, 0.67).unwrap();
        assert!(tight.distribution().nu() <= 0.67);
        assert_eq!(tight.max_degree(), loose.max_degree());
        assert!(tight.two_m() < loose.two_m());
        // Reaching 0.5 would empty the top degree class.
        assert_eq!(
            build_subpower_sequence(100_000, 3.5, 1.0, 0.5),
            Err(DegreeError::InfeasibleTarget { target: 0.5, cap: 26 })
        );
    }

    #[test]
    fn build_rejects_bad_parameters() {
        assert_eq!(build_subpower_sequence(100, 3.0, 1.0, 0.9), Err(DegreeError::InvalidGamma(3.0)));
        assert_eq!(build_subpower_sequence(100, 3.5, 1.0, 0.0), Err(DegreeError::InvalidTarget(0.0)));
        assert_eq!(build_subpower_sequence(1, 3.5, 1.0, 0.5), Err(DegreeError::TooFewVertices(1)));
        assert!(matches!(
            build_subpower_sequence(3, 3.5, 1.0, 0.1),
            Err(DegreeError::InfeasibleTarget { .. })
        ));
    }

    #[test]
    fn odd_n_parity_repair() {
        let s = build_subpower_sequence(3, 3.5, 1.0, 1.0).unwrap();
        assert_eq!(s.degrees(), &[2, 1, 1]);
    }

    #[test]
    fn validate_examples() {
        assert!(validate_subpower(&[1; 10], 3.5, 1.0).is_valid());
        let mut d = vec![1u32; 10_000];
        d[0] = 9_999;
        let rep = validate_subpower(&d, 3.5, 1.0);
        assert!(rep.parity_ok);
        assert!(!rep.max_degree_ok);
        assert!(!rep.is_valid());
        assert!(!validate_subpower(&[1, 2], 3.5, 1.0).parity_ok);
        assert!(!validate_subpower(&[0, 2], 3.5, 1.0).positive_ok);
    }

    #[test]
    fn with_subpower_enforces_cap() {
        let p = SubpowerParams::new(3.5, 1.0).unwrap();
        let mut d = vec![1u32; 100];
        d[0] = 9;
        d[1] = 3;
        assert!(matches!(
            DegreeSequence::with_subpower(d, p),
            Err(DegreeError::AboveCap { vertex: 0, .. })
        ));
    }
}
