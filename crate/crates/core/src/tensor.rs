//! Dense tensors: pointwise values with variance and conformal weight tags,
//! and tensor fields whose components are jets.

use thiserror::Error;

use crate::jets::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variance {
    Up,
    Down,
}

pub use Variance::{Down, Up};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("slots {0:?} do not share a common variance")]
    MixedVariance(Vec<usize>),
    #[error("tensor is not symmetric (defect {0:.3e})")]
    NotSymmetric(f64),
    #[error("conformal factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("metric is not positive definite")]
    NotPositiveDefinite,
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Row-major flattening of a multi-index.
pub fn flat(dim: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * dim + i)
}

/// All multi-indices of `rank` slots in `dim` values, row-major.
pub fn indices(dim: usize, rank: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = dim.pow(rank as u32);
    (0..total).map(move |mut k| {
        let mut idx = vec![0; rank];
        for slot in (0..rank).rev() {
            idx[slot] = k % dim;
            k /= dim;
        }
        idx
    })
}

/// Pointwise tensor representative in a chosen scale.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorValue {
    pub dim: usize,
    pub variance: Vec<Variance>,
    pub weight: i32,
    pub entries: Vec<f64>,
}

impl TensorValue {
    pub fn zeros(dim: usize, variance: Vec<Variance>, weight: i32) -> TensorValue {
        let n = dim.pow(variance.len() as u32);
        TensorValue { dim, variance, weight, entries: vec![0.0; n] }
    }

    pub fn scalar(v: f64, weight: i32) -> TensorValue {
        TensorValue { dim: 0, variance: vec![], weight, entries: vec![v] }
    }

    pub fn from_fn(dim: usize, variance: Vec<Variance>, weight: i32, mut f: impl FnMut(&[usize]) -> f64) -> TensorValue {
        let rank = variance.len();
        let entries = indices(dim, rank).map(|i| f(&i)).collect();
        TensorValue { dim, variance, weight, entries }
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.entries[flat(self.dim, idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let i = flat(self.dim, idx);
        self.entries[i] = v;
    }

    pub fn value(&self) -> f64 {
        self.entries[0]
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, c: f64) -> TensorValue {
        TensorValue { entries: self.entries.iter().map(|x| x * c).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &TensorValue) -> TensorValue {
        assert_eq!(self.entries.len(), other.entries.len());
        TensorValue { entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(), ..self.clone() }
    }

    pub fn sub(&self, other: &TensorValue) -> TensorValue {
        assert_eq!(self.entries.len(), other.entries.len());
        TensorValue { entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(), ..self.clone() }
    }

    fn common_variance(&self, slots: &[usize]) -> Result<(), TensorError> {
        if slots.iter().any(|&s| self.variance[s] != self.variance[slots[0]]) {
            return Err(TensorError::MixedVariance(slots.to_vec()));
        }
        Ok(())
    }

    /// Average over all permutations of the given slots.
    pub fn symmetrize(&self, slots: &[usize]) -> Result<TensorValue, TensorError> {
        self.common_variance(slots)?;
        Ok(self.permutation_average(slots, false))
    }

    /// Signed average over all permutations of the given slots.
    pub fn antisymmetrize(&self, slots: &[usize]) -> Result<TensorValue, TensorError> {
        self.common_variance(slots)?;
        Ok(self.permutation_average(slots, true))
    }

    fn permutation_average(&self, slots: &[usize], signed: bool) -> TensorValue {
        let perms = permutations(slots.len());
        let n = perms.len() as f64;
        TensorValue::from_fn(self.dim, self.variance.clone(), self.weight, |idx| {
            let mut acc = 0.0;
            for (perm, sign) in &perms {
                let mut j = idx.to_vec();
                for (k, &p) in perm.iter().enumerate() {
                    j[slots[k]] = idx[slots[p]];
                }
                acc += if signed { *sign } else { 1.0 } * self.get(&j);
            }
            acc / n
        })
    }

    pub fn symmetry_defect(&self) -> f64 {
        assert_eq!(self.rank(), 2);
        let mut m: f64 = 0.0;
        for a in 0..self.dim {
            for b in 0..a {
                m = m.max((self.get(&[a, b]) - self.get(&[b, a])).abs());
            }
        }
        m
    }

    /// Contract two slots of opposite variance, or two same-variance slots with `metric`.
    pub fn trace(&self, s1: usize, s2: usize, m: &MetricAtPoint) -> TensorValue {
        let (v1, v2) = (self.variance[s1], self.variance[s2]);
        let rest: Vec<usize> = (0..self.rank()).filter(|&s| s != s1 && s != s2).collect();
        let var: Vec<Variance> = rest.iter().map(|&s| self.variance[s]).collect();
        let d = self.dim;
        TensorValue::from_fn(d, var, self.weight, |idx| {
            let mut full = vec![0; self.rank()];
            for (k, &s) in rest.iter().enumerate() {
                full[s] = idx[k];
            }
            let mut acc = 0.0;
            for a in 0..d {
                for b in 0..d {
                    let w = match (v1, v2) {
                        (Up, Down) | (Down, Up) => {
                            if a == b {
                                1.0
                            } else {
                                continue;
                            }
                        }
                        (Down, Down) => m.g_inv.get(&[a, b]),
                        (Up, Up) => m.g.get(&[a, b]),
                    };
                    full[s1] = a;
                    full[s2] = b;
                    acc += w * self.get(&full);
                }
            }
            acc
        })
    }

    /// `t_ab − (1/D) g_ab g^cd t_cd` for a symmetric down-down tensor.
    pub fn trace_free_part(&self, m: &MetricAtPoint, dim_d: usize) -> Result<TensorValue, TensorError> {
        if self.rank() != 2 || self.variance != [Down, Down] {
            return Err(TensorError::MixedVariance(vec![0, 1]));
        }
        let defect = self.symmetry_defect();
        if defect > 1e-10 * self.norm().max(1.0) {
            return Err(TensorError::NotSymmetric(defect));
        }
        let tr = self.trace(0, 1, m).value();
        let d = dim_d as f64;
        Ok(TensorValue::from_fn(self.dim, self.variance.clone(), self.weight, |i| self.get(i) - tr / d * m.g.get(i)))
    }

    /// Move `slot` between variances with the metric.
    pub fn raise(&self, slot: usize, m: &MetricAtPoint) -> TensorValue {
        self.reindex(slot, Up, &m.g_inv)
    }

    pub fn lower(&self, slot: usize, m: &MetricAtPoint) -> TensorValue {
        self.reindex(slot, Down, &m.g)
    }

    fn reindex(&self, slot: usize, to: Variance, with: &TensorValue) -> TensorValue {
        if self.variance[slot] == to {
            return self.clone();
        }
        let mut var = self.variance.clone();
        var[slot] = to;
        TensorValue::from_fn(self.dim, var, self.weight, |idx| {
            let mut j = idx.to_vec();
            (0..self.dim)
                .map(|e| {
                    j[slot] = e;
                    with.get(&[idx[slot], e]) * self.get(&j)
                })
                .sum()
        })
    }

    /// Representative of the same weight-`w` object in the scale `Ω²g`: entries times `Ω^w`.
    pub fn rescale(&self, omega: f64) -> Result<TensorValue, TensorError> {
        if !(omega > 0.0) {
            return Err(TensorError::NonPositiveScale(omega));
        }
        Ok(self.scale(omega.powi(self.weight)))
    }

    pub fn rescale_jet(&self, omega: &Jet) -> Result<TensorValue, TensorError> {
        self.rescale(omega.value())
    }
}

fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<(Vec<usize>, f64)>) {
        let n = used.len();
        if prefix.len() == n {
            let mut inv = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if prefix[i] > prefix[j] {
                        inv += 1;
                    }
                }
            }
            out.push((prefix.clone(), if inv % 2 == 0 { 1.0 } else { -1.0 }));
            return;
        }
        for k in 0..n {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Metric representative at a point: values, inverse and component jets.
#[derive(Debug, Clone)]
pub struct MetricAtPoint {
    pub g: TensorValue,
    pub g_inv: TensorValue,
    pub g_jet: Vec<Jet>,
}

impl MetricAtPoint {
    pub fn from_jets(g: &Field) -> Result<MetricAtPoint, TensorError> {
        let d = g.dim;
        let gv = g.value(vec![Down, Down], 2);
        let m = nalgebra::DMatrix::from_fn(d, d, |a, b| gv.get(&[a, b]));
        let chol = nalgebra::Cholesky::new(m).ok_or(TensorError::NotPositiveDefinite)?;
        let inv = chol.inverse();
        let g_inv = TensorValue::from_fn(d, vec![Up, Up], -2, |i| inv[(i[0], i[1])]);
        Ok(MetricAtPoint { g: gv, g_inv, g_jet: g.comps.clone() })
    }

    pub fn from_value(g: TensorValue) -> Result<MetricAtPoint, TensorError> {
        let d = g.dim;
        let field = Field::from_fn(d, 2, |i| Jet::constant(d, 0, g.get(i)));
        MetricAtPoint::from_jets(&field)
    }

    pub fn det(&self) -> f64 {
        let d = self.dim();
        nalgebra::DMatrix::from_fn(d, d, |a, b| self.g.get(&[a, b])).determinant()
    }

    pub fn dim(&self) -> usize {
        self.g.dim
    }
}

/// Tensor field given by component jets about a common point.
#[derive(Debug, Clone)]
pub struct Field {
    pub dim: usize,
    pub rank: usize,
    pub comps: Vec<Jet>,
}

impl Field {
    pub fn from_fn(dim: usize, rank: usize, mut f: impl FnMut(&[usize]) -> Jet) -> Field {
        let comps = indices(dim, rank).map(|i| f(&i)).collect();
        Field { dim, rank, comps }
    }

    pub fn scalar(j: Jet) -> Field {
        Field { dim: j.dim(), rank: 0, comps: vec![j] }
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.comps[flat(self.dim, idx)]
    }

    pub fn scalar_jet(&self) -> &Jet {
        &self.comps[0]
    }

    /// Smallest component order.
    pub fn order(&self) -> usize {
        self.comps.iter().map(|j| j.order()).min().unwrap_or(0)
    }

    pub fn value(&self, variance: Vec<Variance>, weight: i32) -> TensorValue {
        assert_eq!(variance.len(), self.rank);
        TensorValue { dim: self.dim, variance, weight, entries: self.comps.iter().map(|j| j.value()).collect() }
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Field {
        Field { dim: self.dim, rank: self.rank, comps: self.comps.iter().map(f).collect() }
    }

    pub fn truncate(&self, order: usize) -> Field {
        self.map(|j| j.truncate(order))
    }

    pub fn add(&self, other: &Field) -> Field {
        assert_eq!(self.comps.len(), other.comps.len());
        Field { dim: self.dim, rank: self.rank, comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Field) -> Field {
        assert_eq!(self.comps.len(), other.comps.len());
        Field { dim: self.dim, rank: self.rank, comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|j| j.scale(c))
    }

    pub fn mul_scalar(&self, s: &Jet) -> Field {
        self.map(|j| j * s)
    }

    /// Permute slots: output slot `k` reads input slot `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Field {
        Field::from_fn(self.dim, self.rank, |idx| {
            let mut src = vec![0; self.rank];
            for (k, &p) in perm.iter().enumerate() {
                src[p] = idx[k];
            }
            self.get(&src).clone()
        })
    }

    /// Apply a rank-2 matrix field to one slot: `T'_{..a..} = Σ_b M_{ab} T_{..b..}`.
    pub fn apply_to_slot(&self, slot: usize, m: &Field) -> Field {
        assert_eq!(m.rank, 2);
        let d = self.dim;
        let order = self.order().min(m.order());
        Field::from_fn(d, self.rank, |idx| {
            let mut acc = Jet::zero(d, order);
            let mut j = idx.to_vec();
            for b in 0..d {
                j[slot] = b;
                acc.add_mul(1.0, m.get(&[idx[slot], b]), self.get(&j));
            }
            acc
        })
    }

    /// Contract slots `s1`, `s2` against a rank-2 field `m^{ab}` (or δ when `m` is `None`).
    pub fn contract(&self, s1: usize, s2: usize, m: Option<&Field>) -> Field {
        let d = self.dim;
        let rest: Vec<usize> = (0..self.rank).filter(|&s| s != s1 && s != s2).collect();
        let order = m.map_or(self.order(), |m| self.order().min(m.order()));
        Field::from_fn(d, rest.len(), |idx| {
            let mut full = vec![0; self.rank];
            for (k, &s) in rest.iter().enumerate() {
                full[s] = idx[k];
            }
            let mut acc = Jet::zero(d, order);
            for a in 0..d {
                match m {
                    None => {
                        full[s1] = a;
                        full[s2] = a;
                        acc.axpy(1.0, self.get(&full));
                    }
                    Some(m) => {
                        for b in 0..d {
                            full[s1] = a;
                            full[s2] = b;
                            acc.add_mul(1.0, m.get(&[a, b]), self.get(&full));
                        }
                    }
                }
            }
            acc
        })
    }

    /// Contract one slot with a vector field `v^a` (or covector with an up slot).
    pub fn contract_vector(&self, slot: usize, v: &Field) -> Field {
        assert_eq!(v.rank, 1);
        let d = self.dim;
        let order = self.order().min(v.order());
        Field::from_fn(d, self.rank - 1, |idx| {
            let mut full: Vec<usize> = idx.to_vec();
            full.insert(slot, 0);
            let mut acc = Jet::zero(d, order);
            for a in 0..d {
                full[slot] = a;
                acc.add_mul(1.0, v.get(&[a]), self.get(&full));
            }
            acc
        })
    }

    /// Tensor product.
    pub fn outer(&self, other: &Field) -> Field {
        let d = self.dim;
        Field::from_fn(d, self.rank + other.rank, |idx| self.get(&idx[..self.rank]) * other.get(&idx[self.rank..]))
    }

    /// Symmetrize a pair of slots.
    pub fn symmetrize_pair(&self, s1: usize, s2: usize) -> Field {
        Field::from_fn(self.dim, self.rank, |idx| {
            let mut j = idx.to_vec();
            j.swap(s1, s2);
            (self.get(idx) + self.get(&j)).scale(0.5)
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, j| m.max(j.max_abs()))
    }
}
