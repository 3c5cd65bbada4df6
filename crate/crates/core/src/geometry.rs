//! Maximal epsilon-separated point sets, Voronoi sampling weights, and the covering and
//! regularity diagnostics.
//!
//! All neighbor searches run on lifted points (see [`Domain::lift`]), where the domain
//! metric is the geodesic distance on the unit sphere and is monotone in chord length.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::hash::{BuildHasherDefault, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{chord, lifted_distance, Domain, DomainKind, Point};
use crate::error::{MzqError, Result};
use crate::io::{points_from_json, points_to_json, reals, unreal, Real};
use crate::oracle::OracleRule;

/// Number of quasi-uniform probes used for covering and regularity checks.
pub const DEFAULT_PROBES: usize = 10_000;
/// Minimum number of weighted grid nodes used to estimate Voronoi cell measures.
pub const MIN_TAU_NODES: usize = 100_000;
/// Minimum number of weighted grid nodes used for ball measures in the regularity check.
pub const REGULARITY_NODES: usize = 20_000;
/// Grid nodes requested per point when estimating cell measures.
pub const TAU_NODES_PER_POINT: usize = 64;

#[derive(Default)]
struct CellHasher(u64);

impl Hasher for CellHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.write_u64(*b as u64);
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = (self.0.rotate_left(5) ^ v).wrapping_mul(0x51_7c_c1_b7_27_22_0a_95);
    }
}

const NONE: u32 = u32::MAX;
const MAX_DENSE_CELLS: i64 = 1 << 25;

enum Heads {
    Dense(Vec<u32>),
    Sparse(HashMap<i64, u32, BuildHasherDefault<CellHasher>>),
}

/// Uniform bucket grid over points on the unit sphere in three dimensions. Ids must be
/// inserted as `0, 1, 2, ...`; each cell is a linked list through `next`.
pub(crate) struct BucketGrid {
    cell: f64,
    side: i64,
    heads: Heads,
    next: Vec<u32>,
}

impl BucketGrid {
    /// Grid whose `for_each_near` query visits every stored point within chord `cell`.
    pub fn new(cell: f64) -> Self {
        let cell = cell.max(1e-9);
        let side = (2.0 / cell).floor() as i64 + 1;
        let heads = match side.checked_pow(3) {
            Some(total) if total <= MAX_DENSE_CELLS => Heads::Dense(vec![NONE; total as usize]),
            _ => Heads::Sparse(HashMap::default()),
        };
        Self {
            cell,
            side,
            heads,
            next: Vec::new(),
        }
    }

    fn coords(&self, v: &[f64; 3]) -> [i64; 3] {
        let c = |x: f64| (((x + 1.0) / self.cell).floor() as i64).clamp(0, self.side - 1);
        [c(v[0]), c(v[1]), c(v[2])]
    }

    fn key(&self, c: [i64; 3]) -> i64 {
        (c[0] * self.side + c[1]) * self.side + c[2]
    }

    fn head(&self, key: i64) -> u32 {
        match &self.heads {
            Heads::Dense(h) => h[key as usize],
            Heads::Sparse(h) => h.get(&key).copied().unwrap_or(NONE),
        }
    }

    pub fn insert(&mut self, id: usize, v: &[f64; 3]) {
        assert_eq!(id, self.next.len(), "bucket grid ids must be sequential");
        let key = self.key(self.coords(v));
        let old = match &mut self.heads {
            Heads::Dense(h) => std::mem::replace(&mut h[key as usize], id as u32),
            Heads::Sparse(h) => h.insert(key, id as u32).unwrap_or(NONE),
        };
        self.next.push(old);
    }

    /// Calls `f` with every stored id in the 27 cells around `v`.
    pub fn for_each_near<F: FnMut(usize)>(&self, v: &[f64; 3], mut f: F) {
        let c = self.coords(v);
        let lo = |x: i64| (x - 1).max(0);
        let hi = |x: i64| (x + 1).min(self.side - 1);
        for x in lo(c[0])..=hi(c[0]) {
            for y in lo(c[1])..=hi(c[1]) {
                for z in lo(c[2])..=hi(c[2]) {
                    let mut id = self.head(self.key([x, y, z]));
                    while id != NONE {
                        f(id as usize);
                        id = self.next[id as usize];
                    }
                }
            }
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    r
}

/// Maps `(u, v)` in the unit square to the domain so that the image of the uniform
/// distribution is uniform on the lifted sphere patch.
pub fn map_unit_square(domain: &Domain, u: f64, v: f64) -> Point {
    match domain.kind {
        DomainKind::Interval => [(PI * u).cos(), 0.0, 0.0],
        DomainKind::Disk => {
            let rho = (1.0 - u * u).max(0.0).sqrt();
            let phi = 2.0 * PI * v;
            [rho * phi.cos(), rho * phi.sin(), 0.0]
        }
        DomainKind::Sphere2 => {
            let z = 2.0 * u - 1.0;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = 2.0 * PI * v;
            [rho * phi.cos(), rho * phi.sin(), z]
        }
    }
}

/// Shifted Halton stream (bases 2 and 3) mapped to the domain.
#[derive(Debug, Clone)]
pub struct CandidateStream {
    domain: Domain,
    shift: [f64; 2],
    index: u64,
}

impl CandidateStream {
    pub fn new(domain: Domain, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            domain,
            shift: [rng.gen(), rng.gen()],
            index: 1,
        }
    }
}

impl Iterator for CandidateStream {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        let i = self.index;
        self.index += 1;
        let u = (radical_inverse(i, 2) + self.shift[0]).fract();
        let v = (radical_inverse(i, 3) + self.shift[1]).fract();
        Some(map_unit_square(&self.domain, u, v))
    }
}

/// `count` quasi-uniform probe points (unshifted Halton, bases 5 and 7).
pub fn probe_points(domain: &Domain, count: usize) -> Vec<Point> {
    (1..=count as u64)
        .map(|i| map_unit_square(domain, radical_inverse(i, 5), radical_inverse(i, 7)))
        .collect()
}

/// Near-uniform ring grid with metric spacing at most about `spacing`.
pub fn ring_grid(domain: &Domain, spacing: f64) -> Vec<Point> {
    let spacing = spacing.max(1e-6);
    match domain.kind {
        DomainKind::Interval => {
            let k = (PI / spacing).ceil() as usize;
            (0..=k).map(|i| [(PI * i as f64 / k as f64).cos(), 0.0, 0.0]).collect()
        }
        DomainKind::Disk | DomainKind::Sphere2 => {
            let top = if domain.kind == DomainKind::Disk { PI / 2.0 } else { PI };
            let rings = (top / spacing).ceil() as usize;
            let mut out = Vec::new();
            for i in 0..=rings {
                let psi = top * i as f64 / rings as f64;
                let (s, c) = psi.sin_cos();
                let k = ((2.0 * PI * s / spacing).ceil() as usize).max(1);
                for j in 0..k {
                    let phi = 2.0 * PI * (j as f64 + 0.5 * (i % 2) as f64) / k as f64;
                    let v = [s * phi.cos(), s * phi.sin(), c];
                    out.push(domain.unlift(&v));
                }
            }
            out
        }
    }
}

/// A finite set of domain points meant to be epsilon-separated and an epsilon-covering.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub domain: Domain,
    pub epsilon: f64,
    pub points: Vec<Point>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn lifted(&self) -> Vec<[f64; 3]> {
        self.points.iter().map(|p| self.domain.lift(p)).collect()
    }

    /// Smallest pairwise distance among pairs closer than `epsilon` (infinity when
    /// no such pair exists, so a value `>= epsilon` means the set is separated).
    pub fn min_separation(&self) -> f64 {
        let lifted = self.lifted();
        let mut grid = BucketGrid::new(chord(self.epsilon));
        for (i, v) in lifted.iter().enumerate() {
            grid.insert(i, v);
        }
        let mut best = f64::INFINITY;
        for (i, v) in lifted.iter().enumerate() {
            grid.for_each_near(v, |j| {
                if j > i {
                    let d = lifted_distance(v, &lifted[j]);
                    if d < self.epsilon {
                        best = best.min(d);
                    }
                }
            });
        }
        best
    }

    /// Largest distance from a probe to its nearest set point.
    pub fn covering_radius(&self, probes: &[Point]) -> f64 {
        let near = NearestIndex::new(self);
        probes
            .iter()
            .map(|p| near.nearest(&self.domain.lift(p)).1)
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self, tau: &[f64]) -> PointSetJson {
        PointSetJson {
            domain: self.domain,
            epsilon: Real(self.epsilon),
            points: points_to_json(&self.domain, &self.points),
            tau: reals(tau),
        }
    }
}

/// Serialized form of a point set with its sampling weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointSetJson {
    pub domain: Domain,
    pub epsilon: Real,
    pub points: Vec<Vec<Real>>,
    pub tau: Vec<Real>,
}

impl PointSetJson {
    pub fn into_parts(self) -> Result<(PointSet, Vec<f64>)> {
        let domain = Domain::new(self.domain.kind, self.domain.mu)?;
        let points = points_from_json(&domain, &self.points)?;
        let tau = unreal(&self.tau);
        if tau.len() != points.len() {
            return Err(MzqError::LengthMismatch {
                expected: points.len(),
                got: tau.len(),
            });
        }
        Ok((
            PointSet {
                domain,
                epsilon: self.epsilon.0,
                points,
            },
            tau,
        ))
    }
}

/// Nearest-point queries against a point set.
struct NearestIndex<'a> {
    lifted: Vec<[f64; 3]>,
    grid: BucketGrid,
    set: &'a PointSet,
}

impl<'a> NearestIndex<'a> {
    fn new(set: &'a PointSet) -> Self {
        let lifted = set.lifted();
        let mut grid = BucketGrid::new(chord(set.epsilon));
        for (i, v) in lifted.iter().enumerate() {
            grid.insert(i, v);
        }
        Self { lifted, grid, set }
    }

    /// Index of and distance to the nearest point; ties go to the lower index.
    fn nearest(&self, v: &[f64; 3]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        self.grid.for_each_near(v, |j| {
            let d = lifted_distance(v, &self.lifted[j]);
            if d < best.1 || (d == best.1 && j < best.0) {
                best = (j, d);
            }
        });
        if best.1 <= self.set.epsilon {
            return best;
        }
        // Not covered within epsilon: scan everything.
        for (j, u) in self.lifted.iter().enumerate() {
            let d = lifted_distance(v, u);
            if d < best.1 || (d == best.1 && j < best.0) {
                best = (j, d);
            }
        }
        best
    }
}

struct GreedyNet {
    domain: Domain,
    epsilon: f64,
    points: Vec<Point>,
    lifted: Vec<[f64; 3]>,
    grid: BucketGrid,
}

impl GreedyNet {
    fn try_accept(&mut self, p: Point) -> bool {
        let v = self.domain.lift(&p);
        let mut clear = true;
        let eps = self.epsilon;
        let lifted = &self.lifted;
        self.grid.for_each_near(&v, |j| {
            if clear && lifted_distance(&v, &lifted[j]) < eps {
                clear = false;
            }
        });
        if clear {
            self.grid.insert(self.points.len(), &v);
            self.points.push(p);
            self.lifted.push(v);
        }
        clear
    }

    fn nearest_distance(&self, v: &[f64; 3]) -> f64 {
        let mut best = f64::INFINITY;
        self.grid.for_each_near(v, |j| best = best.min(lifted_distance(v, &self.lifted[j])));
        best
    }

    /// Accepts every point of maximal distance to the set that is still uncovered, until
    /// none is left. On two-dimensional domains these are the spherical circumcentres of
    /// nearby triples and, on the disk, the boundary points equidistant from nearby pairs;
    /// on the interval they are gap midpoints and the endpoints.
    fn fill_holes(&mut self) {
        loop {
            let before = self.points.len();
            match self.domain.kind {
                DomainKind::Interval => self.fill_interval(),
                _ => self.fill_vertices(),
            }
            if self.points.len() == before {
                break;
            }
        }
    }

    fn fill_interval(&mut self) {
        let mut theta: Vec<f64> = self.points.iter().map(|p| p[0].clamp(-1.0, 1.0).acos()).collect();
        theta.sort_by(f64::total_cmp);
        let mut candidates = vec![0.0, PI];
        candidates.extend(theta.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        for t in candidates {
            self.try_accept([t.cos(), 0.0, 0.0]);
        }
    }

    fn fill_vertices(&mut self) {
        let reach = 2.5 * self.epsilon;
        let mut near = BucketGrid::new(chord(reach.min(PI)));
        for (i, v) in self.lifted.iter().enumerate() {
            near.insert(i, v);
        }
        let count = self.lifted.len();
        let mut neighbors = Vec::new();
        for i in 0..count {
            let vi = self.lifted[i];
            neighbors.clear();
            near.for_each_near(&vi, |j| {
                if j > i && lifted_distance(&vi, &self.lifted[j]) <= reach {
                    neighbors.push(j);
                }
            });
            neighbors.sort_unstable();
            for (a, &j) in neighbors.iter().enumerate() {
                let vj = self.lifted[j];
                if self.domain.kind == DomainKind::Disk {
                    // boundary points equidistant from i and j
                    let dir = cross(&sub(&vi, &vj), &[0.0, 0.0, 1.0]);
                    self.offer_vertex(dir, &vi);
                }
                for &k in &neighbors[a + 1..] {
                    let dir = cross(&sub(&vj, &vi), &sub(&self.lifted[k], &vi));
                    self.offer_vertex(dir, &vi);
                }
            }
        }
    }

    /// Offers both unit vectors along `dir` when they are at least epsilon from `anchor`.
    fn offer_vertex(&mut self, dir: [f64; 3], anchor: &[f64; 3]) {
        let len = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        if len < 1e-14 {
            return;
        }
        for sign in [1.0, -1.0] {
            let c = [sign * dir[0] / len, sign * dir[1] / len, sign * dir[2] / len];
            if self.domain.kind == DomainKind::Disk && c[2] < 0.0 {
                continue;
            }
            if lifted_distance(&c, anchor) >= self.epsilon && self.nearest_distance(&c) >= self.epsilon {
                self.try_accept(self.domain.unlift(&c));
            }
        }
    }
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Greedy maximal epsilon-separated set.
///
/// Candidates come from a seeded low-discrepancy stream in batches of
/// `1024 + 16 |accepted|`; a candidate is accepted when it is at distance `>= epsilon` from
/// every accepted point, and the stream stops once a batch accepts fewer than 1 in 256
/// candidates. A pass over
/// a ring grid of spacing `epsilon / 2` and then over the points of locally maximal distance
/// to the set fills the holes the stream missed, so the result is an epsilon-covering.
pub fn maximal_separated_set(domain: &Domain, epsilon: f64, seed: u64) -> Result<PointSet> {
    if !(epsilon > 0.0 && epsilon < PI) {
        return Err(MzqError::InvalidParameter(format!("epsilon must lie in (0, pi), got {epsilon}")));
    }
    let mut net = GreedyNet {
        domain: *domain,
        epsilon,
        points: Vec::new(),
        lifted: Vec::new(),
        grid: BucketGrid::new(chord(epsilon)),
    };
    let mut stream = CandidateStream::new(*domain, seed);
    loop {
        let batch = 1024 + 16 * net.points.len();
        let mut accepted = 0;
        for p in stream.by_ref().take(batch) {
            if net.try_accept(p) {
                accepted += 1;
            }
        }
        if accepted * 256 < batch {
            break;
        }
    }
    for p in ring_grid(domain, epsilon / 2.0) {
        net.try_accept(p);
    }
    net.fill_holes();

    Ok(PointSet {
        domain: *domain,
        epsilon,
        points: net.points,
    })
}

/// Minimum and maximum over probes of `#{xi : d(x, xi) <= epsilon}`.
pub fn covering_multiplicity(set: &PointSet, probes: &[Point]) -> Result<(usize, usize)> {
    if probes.is_empty() {
        return Err(MzqError::InvalidParameter("probe set is empty".into()));
    }
    let near = NearestIndex::new(set);
    let mut lo = usize::MAX;
    let mut hi = 0;
    for p in probes {
        let v = set.domain.lift(p);
        let mut count = 0;
        near.grid.for_each_near(&v, |j| {
            if lifted_distance(&v, &near.lifted[j]) <= set.epsilon {
                count += 1;
            }
        });
        lo = lo.min(count);
        hi = hi.max(count);
    }
    Ok((lo, hi))
}

/// Voronoi-cell measures estimated on a weighted grid of at least
/// `max(100000, 64 |set|)` nodes.
pub fn assign_tau(set: &PointSet) -> Result<Vec<f64>> {
    assign_tau_with_nodes(set, MIN_TAU_NODES.max(TAU_NODES_PER_POINT * set.len()))
}

pub fn assign_tau_with_nodes(set: &PointSet, min_nodes: usize) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(MzqError::InvalidParameter("point set is empty".into()));
    }
    let grid = OracleRule::dense(set.domain, min_nodes);
    let near = NearestIndex::new(set);
    let mut tau = vec![0.0; set.len()];
    for (x, w) in grid.nodes.iter().zip(&grid.weights) {
        let (j, _) = near.nearest(&set.domain.lift(x));
        tau[j] += w;
    }
    if let Some(i) = tau.iter().position(|&t| t <= 0.0) {
        return Err(MzqError::DegenerateCell {
            index: i,
            point: set.points[i][..set.domain.ambient_dim()].to_vec(),
        });
    }
    Ok(tau)
}

/// Empirical constant `N` of the regularity condition at scale `1/n`:
/// the largest ratio of sampled mass to weighted measure over metric balls of radius `1/n`
/// centred at the default probes and at the set points.
pub fn regularity_constant(set: &PointSet, tau: &[f64], n: f64) -> Result<f64> {
    let mut centres = probe_points(&set.domain, DEFAULT_PROBES);
    centres.extend_from_slice(&set.points);
    regularity_constant_at(set, tau, n, &centres)
}

pub fn regularity_constant_at(set: &PointSet, tau: &[f64], n: f64, centres: &[Point]) -> Result<f64> {
    if !(n > 0.0) {
        return Err(MzqError::InvalidParameter(format!("n must be > 0, got {n}")));
    }
    if tau.len() != set.len() {
        return Err(MzqError::LengthMismatch {
            expected: set.len(),
            got: tau.len(),
        });
    }
    let radius = 1.0 / n;
    let cell = chord(radius.min(PI));
    let lifted = set.lifted();
    let mut point_grid = BucketGrid::new(cell);
    for (i, v) in lifted.iter().enumerate() {
        point_grid.insert(i, v);
    }
    let dense = OracleRule::dense(set.domain, REGULARITY_NODES.max(TAU_NODES_PER_POINT * set.len()));
    let dense_lifted: Vec<[f64; 3]> = dense.nodes.iter().map(|x| set.domain.lift(x)).collect();
    let mut node_grid = BucketGrid::new(cell);
    for (i, v) in dense_lifted.iter().enumerate() {
        node_grid.insert(i, v);
    }
    let mut worst: f64 = 0.0;
    for y in centres {
        let v = set.domain.lift(y);
        let mut mass = 0.0;
        point_grid.for_each_near(&v, |j| {
            if lifted_distance(&v, &lifted[j]) <= radius {
                mass += tau[j];
            }
        });
        let mut measure = 0.0;
        node_grid.for_each_near(&v, |j| {
            if lifted_distance(&v, &dense_lifted[j]) <= radius {
                measure += dense.weights[j];
            }
        });
        if measure > 0.0 {
            worst = worst.max(mass / measure);
        }
    }
    Ok(worst)
}

/// Layer points for degree `n` at density `epsilon = gamma / n`.
pub fn layer_points(domain: &Domain, n: usize, gamma: f64, seed: u64) -> Result<PointSet> {
    let eps = if n == 0 { PI * 0.999 } else { (gamma / n as f64).min(PI * 0.999) };
    maximal_separated_set(domain, eps, seed)
}
