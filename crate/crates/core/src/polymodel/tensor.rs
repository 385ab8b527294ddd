use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::index::{binomial, enumerate_indices, IndexTuple};
use crate::error::{Error, Result};

/// Sparse coefficients `b(I)` over `I(d, n)`; absent tuples are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor {
    d: usize,
    n: usize,
    entries: BTreeMap<IndexTuple, f64>,
}

/// Serialized form of a tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TensorSpec {
    /// `1/√C(n,d)` on every tuple.
    Uniform,
    /// All mass on one tuple (`(1, …, d)` by default).
    Single {
        #[serde(default)]
        index: Option<IndexTuple>,
        #[serde(default = "one")]
        value: f64,
    },
    Entries { entries: Vec<(IndexTuple, f64)> },
    /// Uniformly distributed on the unit sphere.
    RandomUnit { seed: u64 },
}

fn one() -> f64 {
    1.0
}

impl TensorSpec {
    pub fn build(&self, d: usize, n: usize) -> Result<CoefficientTensor> {
        match self {
            TensorSpec::Uniform => CoefficientTensor::uniform(d, n),
            TensorSpec::Single { index, value } => {
                let t = match index {
                    Some(t) => t.clone(),
                    None => IndexTuple::new((1..=d).collect())?,
                };
                let mut c = CoefficientTensor::new(d, n)?;
                c.insert(t, *value)?;
                Ok(c)
            }
            TensorSpec::Entries { entries } => {
                let mut c = CoefficientTensor::new(d, n)?;
                for (t, v) in entries {
                    c.insert(t.clone(), *v)?;
                }
                Ok(c)
            }
            TensorSpec::RandomUnit { seed } => {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
                CoefficientTensor::random_unit(d, n, &mut rng)
            }
        }
    }
}

/// Cache-friendly view used by the samplers: 0-based tuples sorted by last
/// index.
#[derive(Debug, Clone)]
pub(crate) struct CompiledTensor {
    pub d: usize,
    pub n: usize,
    /// Common value when every tuple of `I(d,n)` carries the same coefficient.
    pub uniform: Option<f64>,
    pub idx: Vec<u32>,
    pub vals: Vec<f64>,
}

impl CompiledTensor {
    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn tuple(&self, k: usize) -> &[u32] {
        &self.idx[k * self.d..(k + 1) * self.d]
    }
}

impl CoefficientTensor {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d == 0 || d > n {
            return Err(Error::InvalidTensor(format!("need 1 <= d <= n, got d = {d}, n = {n}")));
        }
        Ok(Self { d, n, entries: BTreeMap::new() })
    }

    pub fn uniform(d: usize, n: usize) -> Result<Self> {
        let mut t = Self::new(d, n)?;
        let v = 1.0 / binomial(n, d).sqrt();
        for idx in enumerate_indices(d, n, None)? {
            t.entries.insert(idx, v);
        }
        Ok(t)
    }

    /// Normalized symmetric Gaussian draws: uniform on the unit sphere of
    /// `R^C(n,d)`.
    pub fn random_unit<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Result<Self> {
        let mut t = Self::new(d, n)?;
        for idx in enumerate_indices(d, n, None)? {
            t.entries.insert(idx, standard_normal(rng));
        }
        t.normalized()
    }

    pub fn insert(&mut self, idx: IndexTuple, value: f64) -> Result<()> {
        idx.check(self.d, self.n)?;
        if !value.is_finite() {
            return Err(Error::InvalidTensor(format!("non-finite coefficient at {:?}", idx.indices())));
        }
        if value == 0.0 {
            self.entries.remove(&idx);
        } else {
            self.entries.insert(idx, value);
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, idx: &IndexTuple) -> f64 {
        self.entries.get(idx).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&IndexTuple, f64)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sum_squares(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum()
    }

    /// Whether `Σ b² = 1` within `1e−12`.
    pub fn is_normalized(&self) -> bool {
        (self.sum_squares() - 1.0).abs() <= 1e-12
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut t = self.clone();
        for v in t.entries.values_mut() {
            *v *= factor;
        }
        t
    }

    pub fn normalized(&self) -> Result<Self> {
        let s = self.sum_squares();
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidTensor("cannot normalize a zero tensor".into()));
        }
        Ok(self.scaled(1.0 / s.sqrt()))
    }

    /// Tuples with `window.0 <= i₁` and `i_d <= window.1`.
    pub fn restricted(&self, lo: usize, hi: usize) -> Self {
        let entries = self
            .entries
            .iter()
            .filter(|(k, _)| k.first() >= lo && k.last() <= hi)
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        Self { d: self.d, n: self.n, entries }
    }

    /// `√(Σ_{I ∈ J(d,k)} b²(I))`, the scale of the terms ending at `k`
    /// (`0` when that set carries no mass).
    pub fn j_scale(&self, k: usize) -> f64 {
        self.entries.iter().filter(|(t, _)| t.last() == k).map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub(crate) fn compile(&self) -> CompiledTensor {
        let mut items: Vec<(&IndexTuple, f64)> = self.iter().collect();
        items.sort_by_key(|(t, _)| (t.last(), t.indices().to_vec()));
        let full = self.entries.len() as f64 == binomial(self.n, self.d);
        let first = items.first().map(|x| x.1);
        let uniform = match first {
            Some(v) if full && items.iter().all(|x| x.1 == v) => Some(v),
            _ => None,
        };
        let mut idx = Vec::with_capacity(items.len() * self.d);
        let mut vals = Vec::with_capacity(items.len());
        for (t, v) in items {
            idx.extend(t.indices().iter().map(|&i| (i - 1) as u32));
            vals.push(v);
        }
        CompiledTensor { d: self.d, n: self.n, uniform, idx, vals }
    }
}

/// `Var Q = Σ_I b²(I)·Π_m σ²(i_m, m)`, with `sigmas[i−1][m−1] = σ(i, m)`.
pub fn variance_of_q(coefficients: &CoefficientTensor, sigmas: &[Vec<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for (idx, b) in coefficients.iter() {
        let mut prod = b * b;
        for (m, &i) in idx.indices().iter().enumerate() {
            let s = sigmas.get(i - 1).and_then(|row| row.get(m)).copied().ok_or(Error::MissingSigma { i, m: m + 1 })?;
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!("sigma({i}, {}) = {s} must be positive", m + 1)));
            }
            prod *= s * s;
        }
        total += prod;
    }
    Ok(total)
}

/// Box–Muller standard normal draw.
fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
