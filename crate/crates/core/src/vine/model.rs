use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paircopula::{CopulaFamily, PairCopula, Rotation};
use crate::rng::{open_uniform, substream};

pub const VINE_SCHEMA_VERSION: &str = "1.0";

/// Translation-invariant D-vine over `(p + 1) * d` time-stacked variables.
///
/// The path visits slice 0 in `cross_order`, then slice 1 in the same order,
/// and so on. Path position `a` holds column `(a / d) * d + cross_order[a % d]`
/// of a block row. Edge `(a, a + t)` of tree `t` belongs to class
/// `(t, a mod d)`; all edges of a class share one pair copula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "VineRecord", try_from = "VineRecord")]
pub struct StationaryVine {
    d: usize,
    p: usize,
    cross_order: Vec<usize>,
    /// `classes[t - 1][c]`.
    classes: Vec<Vec<PairCopula>>,
}

/// Scratch triangle of conditional distribution values: `left[t][a]` is
/// `F(x_a | x_{a+1..a+t-1})` and `right[t][a]` is `F(x_{a+t} | x_{a+1..a+t-1})`.
struct Triangle {
    m: usize,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl Triangle {
    fn new(m: usize) -> Self {
        Self {
            m,
            left: vec![0.0; (m + 1) * m.max(1)],
            right: vec![0.0; (m + 1) * m.max(1)],
        }
    }

    fn idx(&self, t: usize, a: usize) -> usize {
        t * self.m + a
    }

    fn l(&self, t: usize, a: usize) -> f64 {
        self.left[self.idx(t, a)]
    }

    fn r(&self, t: usize, a: usize) -> f64 {
        self.right[self.idx(t, a)]
    }

    fn set_l(&mut self, t: usize, a: usize, v: f64) {
        let i = self.idx(t, a);
        self.left[i] = v;
    }

    fn set_r(&mut self, t: usize, a: usize, v: f64) {
        let i = self.idx(t, a);
        self.right[i] = v;
    }
}

/// One serialized translation class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub tree: usize,
    /// Position within the cross-sectional order of the earlier variable.
    pub from_pos: usize,
    pub to_pos: usize,
    /// Time lag between the two conditioned variables.
    pub displacement: usize,
    pub family: CopulaFamily,
    pub rotation: Rotation,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VineRecord {
    pub schema_version: String,
    pub d: usize,
    pub p: usize,
    pub cross_order: Vec<usize>,
    pub classes: Vec<ClassRecord>,
}

impl From<StationaryVine> for VineRecord {
    fn from(v: StationaryVine) -> Self {
        v.record()
    }
}

impl TryFrom<VineRecord> for StationaryVine {
    type Error = Error;

    fn try_from(r: VineRecord) -> Result<Self> {
        if r.schema_version != VINE_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "vine schema version {} not supported (expected {VINE_SCHEMA_VERSION})",
                r.schema_version
            )));
        }
        let mut vine = StationaryVine::independence(r.d, r.p, r.cross_order)?;
        let mut seen = vec![vec![false; r.d]; vine.m().saturating_sub(1)];
        for c in &r.classes {
            if c.tree == 0 || c.tree >= vine.m() || c.from_pos >= vine.classes_in_tree(c.tree) {
                return Err(Error::Schema(format!("class (tree {}, position {}) out of range", c.tree, c.from_pos)));
            }
            let pc = PairCopula::new(c.family, c.rotation, c.theta).map_err(|e| Error::Schema(e.to_string()))?;
            vine.set_class(c.tree, c.from_pos, pc);
            seen[c.tree - 1][c.from_pos] = true;
        }
        let missing = (1..vine.m()).any(|t| (0..vine.classes_in_tree(t)).any(|c| !seen[t - 1][c]));
        if missing {
            return Err(Error::Schema("vine record does not cover every class".into()));
        }
        Ok(vine)
    }
}

impl StationaryVine {
    /// All classes set to the independence copula.
    pub fn independence(d: usize, p: usize, cross_order: Vec<usize>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Precondition("cross-section size must be positive".into()));
        }
        let mut sorted = cross_order.clone();
        sorted.sort_unstable();
        if sorted != (0..d).collect::<Vec<_>>() {
            return Err(Error::Precondition(format!("cross order {cross_order:?} is not a permutation of 0..{d}")));
        }
        let m = (p + 1) * d;
        let classes = (1..m).map(|t| vec![PairCopula::independence(); d.min(m - t)]).collect();
        Ok(Self {
            d,
            p,
            cross_order,
            classes,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of stacked variables, `(p + 1) * d`.
    pub fn m(&self) -> usize {
        (self.p + 1) * self.d
    }

    pub fn cross_order(&self) -> &[usize] {
        &self.cross_order
    }

    pub fn classes_in_tree(&self, tree: usize) -> usize {
        self.classes[tree - 1].len()
    }

    pub fn class(&self, tree: usize, c: usize) -> &PairCopula {
        &self.classes[tree - 1][c]
    }

    pub fn set_class(&mut self, tree: usize, c: usize, pc: PairCopula) {
        self.classes[tree - 1][c] = pc;
    }

    /// Copula of edge `(a, a + tree)`.
    pub fn pair(&self, tree: usize, a: usize) -> &PairCopula {
        &self.classes[tree - 1][a % self.d]
    }

    /// Block column held by path position `a`.
    pub fn column(&self, a: usize) -> usize {
        (a / self.d) * self.d + self.cross_order[a % self.d]
    }

    /// Number of non-independence classes (one parameter each).
    pub fn parameter_count(&self) -> usize {
        self.classes.iter().flatten().filter(|c| !c.is_independence()).count()
    }

    pub fn record(&self) -> VineRecord {
        let mut classes = Vec::new();
        for t in 1..self.m() {
            for c in 0..self.classes_in_tree(t) {
                let pc = self.class(t, c);
                classes.push(ClassRecord {
                    tree: t,
                    from_pos: c,
                    to_pos: (c + t) % self.d,
                    displacement: (c + t) / self.d,
                    family: pc.family,
                    rotation: pc.rotation,
                    theta: pc.theta,
                });
            }
        }
        VineRecord {
            schema_version: VINE_SCHEMA_VERSION.to_string(),
            d: self.d,
            p: self.p,
            cross_order: self.cross_order.clone(),
            classes,
        }
    }

    fn check_prefix(&self, values: &[f64]) -> Result<()> {
        if values.len() > self.m() || values.len() % self.d != 0 {
            return Err(Error::Precondition(format!(
                "vector of length {} is not a whole number of slices of width {} within {} variables",
                values.len(),
                self.d,
                self.m()
            )));
        }
        Ok(())
    }

    fn to_path(&self, cols: &[f64]) -> Vec<f64> {
        (0..cols.len()).map(|a| cols[self.column(a)]).collect()
    }

    fn from_path(&self, path: &[f64]) -> Vec<f64> {
        let mut cols = vec![0.0; path.len()];
        for (a, &x) in path.iter().enumerate() {
            cols[self.column(a)] = x;
        }
        cols
    }

    /// Adds path value `x_b` and updates every triangle entry it completes.
    fn absorb(&self, tri: &mut Triangle, b: usize, xb: f64) {
        tri.set_l(1, b, xb);
        if b == 0 {
            return;
        }
        tri.set_r(1, b - 1, xb);
        for t in 1..b {
            let a = b - t;
            let v = self.pair(t, a).h_given_first(tri.l(t, a), tri.r(t, a));
            tri.set_r(t + 1, a - 1, v);
        }
        for t in 1..=b {
            let a = b - t;
            let v = self.pair(t, a).h_given_second(tri.l(t, a), tri.r(t, a));
            tri.set_l(t + 1, a, v);
        }
    }

    fn fill(&self, path: &[f64]) -> Triangle {
        let mut tri = Triangle::new(self.m());
        for (b, &x) in path.iter().enumerate() {
            self.absorb(&mut tri, b, x);
        }
        tri
    }

    fn sum_log_pdf(&self, path: &[f64], keep: impl Fn(usize, usize) -> bool) -> Result<f64> {
        let tri = self.fill(path);
        let mut total = 0.0;
        for t in 1..path.len() {
            for a in 0..path.len() - t {
                if keep(t, a) {
                    total += self.pair(t, a).log_pdf(tri.l(t, a), tri.r(t, a));
                }
            }
        }
        if total.is_finite() {
            Ok(total)
        } else {
            Err(Error::NonFiniteDensity { row: 0 })
        }
    }

    /// Log joint copula density of a block row (or a whole-slice prefix).
    pub fn log_density(&self, row: &[f64]) -> Result<f64> {
        self.check_prefix(row)?;
        self.sum_log_pdf(&self.to_path(row), |_, _| true)
    }

    /// Log density of the last slice of a full block row given the earlier slices.
    pub fn conditional_log_density(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.m() {
            return Err(Error::Precondition(format!("block row of length {} (expected {})", row.len(), self.m())));
        }
        let last = self.p * self.d;
        self.sum_log_pdf(&self.to_path(row), |t, a| a + t >= last)
    }

    /// Sequential conditional-probability transform of a block row or prefix.
    pub fn rosenblatt(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_prefix(row)?;
        Ok(self.from_path(&self.rosenblatt_path(&self.to_path(row))))
    }

    fn rosenblatt_path(&self, path: &[f64]) -> Vec<f64> {
        let tri = self.fill(path);
        (0..path.len())
            .map(|b| {
                if b == 0 {
                    path[0]
                } else {
                    self.pair(b, 0).h_given_first(tri.l(b, 0), tri.r(b, 0))
                }
            })
            .collect()
    }

    /// Inverse of [`StationaryVine::rosenblatt`].
    pub fn inverse_rosenblatt(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_prefix(w)?;
        Ok(self.from_path(&self.extend_path(&[], &self.to_path(w))))
    }

    /// Continues a known path prefix with positions drawn from uniforms `w`.
    fn extend_path(&self, prefix: &[f64], w: &[f64]) -> Vec<f64> {
        let total = prefix.len() + w.len();
        let mut tri = Triangle::new(self.m());
        let mut path = Vec::with_capacity(total);
        for b in 0..total {
            let xb = if b < prefix.len() {
                prefix[b]
            } else if b == 0 {
                w[0]
            } else {
                let mut r = self.pair(b, 0).hinv_given_first(w[b - prefix.len()], tri.l(b, 0));
                for t in (1..b).rev() {
                    r = self.pair(t, b - t).hinv_given_first(r, tri.l(t, b - t));
                }
                r
            };
            path.push(xb);
            self.absorb(&mut tri, b, xb);
        }
        path
    }

    /// `n` independent block rows (column order).
    pub fn simulate_unconditional(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let m = self.m();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(seed, "vine-unconditional", i as u64);
                let w: Vec<f64> = (0..m).map(|_| open_uniform(&mut rng)).collect();
                self.from_path(&self.extend_path(&[], &w))
            })
            .collect()
    }

    /// Draws `k` further slices given the leading slices `prefix` (column
    /// order within each slice); returns only the new slices.
    pub fn simulate_from_prefix<R: Rng>(&self, prefix: &[f64], k: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.check_prefix(prefix)?;
        let s = prefix.len() / self.d;
        if s + k > self.p + 1 {
            return Err(Error::HorizonExceedsOrder {
                horizon: s + k - 1,
                order: self.p,
            });
        }
        if prefix.iter().any(|&u| !(u > 0.0 && u < 1.0)) {
            return Err(Error::Domain("conditioning values must lie in (0,1)".into()));
        }
        let w: Vec<f64> = (0..k * self.d).map(|_| open_uniform(rng)).collect();
        let path = self.extend_path(&self.to_path(prefix), &w);
        let cols = self.from_path(&path);
        Ok(cols[prefix.len()..].to_vec())
    }

    /// `n` draws of slices `1..=k` given slice 0; rows are `k * d` wide.
    pub fn simulate_conditional(&self, slice: &[f64], k: usize, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if slice.len() != self.d {
            return Err(Error::Precondition(format!("conditioning slice of length {} (expected {})", slice.len(), self.d)));
        }
        if k > self.p {
            return Err(Error::HorizonExceedsOrder { horizon: k, order: self.p });
        }
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(seed, "vine-conditional", i as u64);
                self.simulate_from_prefix(slice, k, &mut rng)
            })
            .collect()
    }

    /// A stationary Markov path of `n` observations (`n x d`).
    pub fn simulate_series(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let d = self.d;
        let mut rng = substream(seed, "vine-series", 0);
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
        let first: Vec<f64> = (0..self.m()).map(|_| open_uniform(&mut rng)).collect();
        let block = self.from_path(&self.extend_path(&[], &first));
        out.extend(block.chunks(d).take(n).map(<[f64]>::to_vec));
        while out.len() < n {
            let prefix: Vec<f64> = out[out.len() - self.p..].iter().flatten().copied().collect();
            let w: Vec<f64> = (0..d).map(|_| open_uniform(&mut rng)).collect();
            let path = self.extend_path(&self.to_path(&prefix), &w);
            let cols = self.from_path(&path);
            out.push(cols[prefix.len()..].to_vec());
        }
        out
    }
}
