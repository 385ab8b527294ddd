//! Seeded, parallel simulation of `Q_d`, `R_d` and `V_d`.
//!
//! Replications are cut into fixed batches of [`BATCH`]; batch `k` draws from
//! ChaCha8 stream `k` of the seed, so results do not depend on the number of
//! worker threads.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::dist::{Centering, InputDistribution};
use super::model::{Coupling, PolynomialModel};
use super::tensor::{CoefficientTensor, CompiledTensor};
use crate::calculus::RegimeTag;
use crate::error::{Error, Result};

pub const BATCH: usize = 4096;

#[inline]
pub(crate) fn fair_sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

#[inline]
pub(crate) fn omega<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Fills `x[m·n + i]` with one draw of the cells `ξ(i+1, m+1)`, `i < n`, in
/// time order.
pub(crate) fn draw_cells<R: Rng + ?Sized>(model: &PolynomialModel, n: usize, rng: &mut R, x: &mut [f64], scratch: &mut Vec<f64>) {
    let d = model.d();
    let f = model.factors();
    let needs_sign: Vec<bool> = f.iter().map(|l| l.centering() == Centering::SignSymmetric).collect();
    match model.coupling() {
        Coupling::Independent => {
            for i in 0..n {
                for m in 0..d {
                    let w = omega(rng);
                    let s = if needs_sign[m] { fair_sign(rng) } else { 1.0 };
                    x[m * n + i] = f[m].value(w, s);
                }
            }
        }
        Coupling::Coincident => {
            for i in 0..n {
                let w = omega(rng);
                let s = fair_sign(rng);
                for m in 0..d {
                    x[m * n + i] = f[m].value(w, s);
                }
            }
        }
        Coupling::LaggedMagnitude => {
            scratch.clear();
            scratch.extend((0..n + d - 1).map(|_| omega(rng)));
            for i in 0..n {
                for m in 0..d {
                    let s = fair_sign(rng);
                    x[m * n + i] = f[m].value(scratch[i + d - 1 - m], s);
                }
            }
        }
        Coupling::Modulated { spread } => {
            let (mut sum, mut count) = (0.0, 0usize);
            for i in 0..n {
                let w_mod = if count > 0 { 1.0 + spread * sum / count as f64 } else { 1.0 };
                for m in 0..d {
                    let w = omega(rng);
                    let s = if needs_sign[m] { fair_sign(rng) } else { 1.0 };
                    let eta = f[m].value(w, s);
                    x[m * n + i] = eta * w_mod;
                    sum += signum0(eta);
                    count += 1;
                }
            }
        }
        Coupling::VectorModulated { spread } => {
            scratch.clear();
            scratch.resize(d, 0.0);
            for i in 0..n {
                for m in 0..d {
                    let w_mod = if i > 0 { 1.0 + spread * scratch[m] / i as f64 } else { 1.0 };
                    let w = omega(rng);
                    let s = if needs_sign[m] { fair_sign(rng) } else { 1.0 };
                    let eta = f[m].value(w, s);
                    x[m * n + i] = eta * w_mod;
                    scratch[m] += signum0(eta);
                }
            }
        }
    }
}

#[inline]
fn signum0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `Σ b(I)·Π_m x[m·stride + i_m]`; with `running` also the maximum of the
/// partial sums over the last index.
pub(crate) fn evaluate(t: &CompiledTensor, x: &[f64], stride: usize, running: bool) -> (f64, f64) {
    let d = t.d;
    if let Some(c) = t.uniform.filter(|_| stride == t.n) {
        // S_m(k) = S_m(k−1) + S_{m−1}(k−1)·x(k, m)
        let mut s = [0.0f64; 16];
        if d < 16 {
            s[0] = 1.0;
            let mut max = 0.0f64;
            for k in 0..t.n {
                for m in (1..=d).rev() {
                    s[m] += s[m - 1] * x[(m - 1) * stride + k];
                }
                if running {
                    max = max.max((c * s[d]).abs());
                }
            }
            return (c * s[d], max);
        }
    }
    let mut total = 0.0f64;
    let mut max = 0.0f64;
    let mut last = u32::MAX;
    for k in 0..t.len() {
        let tup = t.tuple(k);
        if running && tup[d - 1] != last {
            max = max.max(total.abs());
            last = tup[d - 1];
        }
        let mut prod = t.vals[k];
        for (m, &i) in tup.iter().enumerate() {
            prod *= x[m * stride + i as usize];
        }
        total += prod;
    }
    (total, max.max(total.abs()))
}

/// Splits `reps` into fixed batches, runs `f(rng, count)` on each in
/// parallel (batch `k` on ChaCha8 stream `k`) and concatenates in order.
pub(crate) fn par_batches<T, F>(seed: u64, reps: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> Vec<T> + Sync,
{
    let batches = reps.div_ceil(BATCH);
    let per_batch: Vec<Vec<T>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            f(&mut rng, BATCH.min(reps - b * BATCH))
        })
        .collect();
    per_batch.into_iter().flatten().collect()
}

/// Runs `f` on the cells of `reps` replications. `f` may overwrite the cell
/// buffer.
pub(crate) fn simulate<T, F>(model: &PolynomialModel, n: usize, seed: u64, reps: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut [f64]) -> T + Sync,
{
    par_batches(seed, reps, |rng, count| {
        let mut x = vec![0.0; model.d() * n];
        let mut scratch = Vec::new();
        (0..count)
            .map(|_| {
                draw_cells(model, n, rng, &mut x, &mut scratch);
                f(&mut x)
            })
            .collect()
    })
}

/// `reps` independent draws of one input law.
pub fn sample_distribution(dist: &InputDistribution, seed: u64, reps: usize) -> Result<Vec<f64>> {
    check_reps(reps)?;
    let signed = dist.centering() == Centering::SignSymmetric;
    Ok(par_batches(seed, reps, |rng, count| {
        (0..count)
            .map(|_| {
                let w = omega(rng);
                let s = if signed { fair_sign(rng) } else { 1.0 };
                dist.value(w, s)
            })
            .collect()
    }))
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(Error::TooFewReplications { got: 0, min: 1 });
    }
    Ok(())
}

/// `reps` independent realizations of `Q_d`.
pub fn sample_q(model: &PolynomialModel, seed: u64, reps: usize) -> Result<Vec<f64>> {
    check_reps(reps)?;
    let t = model.coefficients().compile();
    let n = model.n();
    Ok(simulate(model, n, seed, reps, |x| evaluate(&t, x, n, false).0))
}

/// Realizations of `max_{k ≤ n} |Q(d, k, b)|`, the running maximum of the
/// partial sums over the last index.
pub fn sample_running_max(model: &PolynomialModel, seed: u64, reps: usize) -> Result<Vec<f64>> {
    check_reps(reps)?;
    let t = model.coefficients().compile();
    let n = model.n();
    Ok(simulate(model, n, seed, reps, |x| evaluate(&t, x, n, true).1))
}

/// `Q_d` for several coefficient tensors on common draws: `out[rep][k]` is
/// the value under tensor `k`.
pub fn sample_q_multi(model: &PolynomialModel, tensors: &[CoefficientTensor], seed: u64, reps: usize) -> Result<Vec<Vec<f64>>> {
    check_reps(reps)?;
    for t in tensors {
        if t.d() != model.d() || t.n() != model.n() {
            return Err(Error::InvalidTensor("sweep tensor shape differs from the model".into()));
        }
    }
    let compiled: Vec<CompiledTensor> = tensors.iter().map(|t| t.compile()).collect();
    let n = model.n();
    Ok(simulate(model, n, seed, reps, |x| compiled.iter().map(|t| evaluate(t, x, n, false).0).collect()))
}

/// Raw cell draws, `out[rep][m·n + i]`.
pub fn sample_cells(model: &PolynomialModel, seed: u64, reps: usize) -> Result<Vec<Vec<f64>>> {
    check_reps(reps)?;
    Ok(simulate(model, model.n(), seed, reps, |x| x.to_vec()))
}

/// Realizations of the centered polynomial
/// `R = Σ_I b(I)·Π_l [ξ^{k_l}(i_l, l) − E ξ^{k_l}(i_l, l)]` of degree `Σ k_l`.
///
/// `multiplicities[l] ≥ 1` is the power of factor `l`; `k = (d)` on a
/// degree-1 tensor gives the diagonal member `Σ_j b(j)(ξ^d(j) − Eξ^d(j))`.
pub fn sample_r(model: &PolynomialModel, multiplicities: &[usize], seed: u64, reps: usize) -> Result<Vec<f64>> {
    check_reps(reps)?;
    if multiplicities.len() != model.d() || multiplicities.iter().any(|&k| k == 0) {
        return Err(Error::InvalidParameter(format!(
            "multiplicities {multiplicities:?} must be positive, one per factor (d = {})",
            model.d()
        )));
    }
    if model.regime().tag != RegimeTag::CommonIndependent || model.coupling() != Coupling::Independent {
        return Err(Error::Unsupported("centered polynomials need common-independent inputs".into()));
    }
    let means = model
        .factors()
        .iter()
        .zip(multiplicities)
        .map(|(f, &k)| f.signed_moment(k as u32))
        .collect::<Result<Vec<f64>>>()?;
    let t = model.coefficients().compile();
    let n = model.n();
    let ks: Vec<i32> = multiplicities.iter().map(|&k| k as i32).collect();
    Ok(simulate(model, n, seed, reps, |x| {
        for (m, (&k, &mu)) in ks.iter().zip(&means).enumerate() {
            for v in &mut x[m * n..(m + 1) * n] {
                *v = v.powi(k) - mu;
            }
        }
        evaluate(&t, x, n, false).0
    }))
}

/// Realizations of `V_d = Σ b(I)·ξ(I)` over the window `n_start ≤ i₁ < … <
/// i_d ≤ big_n`, with cells generated in reverse time: `ξ(i, ·)` is drawn as
/// the forward cell `big_n − i + 1`, so the sum is a reverse martingale.
pub fn sample_reverse_v(model: &PolynomialModel, seed: u64, reps: usize, n_start: usize, big_n: usize) -> Result<Vec<f64>> {
    check_reps(reps)?;
    let d = model.d();
    if n_start < 1 || big_n > model.n() || big_n + 1 < n_start + d {
        return Err(Error::InvalidParameter(format!(
            "window [{n_start}, {big_n}] cannot hold a degree-{d} tuple within n = {}",
            model.n()
        )));
    }
    let window = model.coefficients().restricted(n_start, big_n);
    let t = window.compile();
    Ok(simulate(model, big_n, seed, reps, |x| {
        for m in 0..d {
            x[m * big_n..(m + 1) * big_n].reverse();
        }
        evaluate(&t, x, big_n, false).0
    }))
}

/// Writes samples as raw little-endian `f64`.
pub fn write_f64le(path: &Path, sample: &[f64]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for v in sample {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_f64le(path: &Path) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Io(format!("{} is not a multiple of 8 bytes", path.display())));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}

/// Writes samples as a one-column CSV with header `value`.
pub fn write_sample_csv(path: &Path, sample: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["value"])?;
    for v in sample {
        w.write_record([format!("{v:?}")])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::DependenceRegime;
    use crate::polymodel::index::IndexTuple;

    fn rademacher_model(d: usize, n: usize, coupling: Coupling, tag: RegimeTag) -> PolynomialModel {
        PolynomialModel::new(
            CoefficientTensor::uniform(d, n).unwrap(),
            DependenceRegime::forward(tag),
            vec![InputDistribution::rademacher(); d],
            coupling,
        )
        .unwrap()
    }

    #[test]
    fn degree_one_single_cell_is_a_sign() {
        let m = rademacher_model(1, 1, Coupling::Independent, RegimeTag::CommonIndependent);
        let s = sample_q(&m, 1, 10_000).unwrap();
        assert!(s.iter().all(|v| *v == 1.0 || *v == -1.0));
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!(mean.abs() < 4.0 / 100.0);
    }

    #[test]
    fn uniform_dp_matches_sparse_sum() {
        let m = rademacher_model(3, 7, Coupling::Modulated { spread: 0.5 }, RegimeTag::Martingale);
        let full = m.coefficients().compile();
        let mut sparse = full.clone();
        sparse.uniform = None;
        let cells = sample_cells(&m, 5, 50).unwrap();
        for x in &cells {
            let (a, ma) = evaluate(&full, x, 7, true);
            let (b, mb) = evaluate(&sparse, x, 7, true);
            assert!((a - b).abs() < 1e-12);
            assert!((ma - mb).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let m = rademacher_model(2, 5, Coupling::Independent, RegimeTag::CommonIndependent);
        assert_eq!(sample_q(&m, 9, 10_000).unwrap(), sample_q(&m, 9, 10_000).unwrap());
        assert_ne!(sample_q(&m, 9, 100).unwrap(), sample_q(&m, 10, 100).unwrap());
    }

    #[test]
    fn rademacher_square_is_degenerate() {
        let m = rademacher_model(1, 4, Coupling::Independent, RegimeTag::CommonIndependent);
        assert!(sample_r(&m, &[2], 1, 1000).unwrap().iter().all(|v| *v == 0.0));
        assert!(sample_r(&m, &[0], 1, 10).is_err());
    }

    #[test]
    fn smallest_reverse_window_is_one_product() {
        let mut b = CoefficientTensor::new(2, 5).unwrap();
        b.insert(IndexTuple::new(vec![4, 5]).unwrap(), 0.5).unwrap();
        let m = PolynomialModel::new(
            b,
            DependenceRegime::forward(RegimeTag::CommonIndependent),
            vec![InputDistribution::rademacher(); 2],
            Coupling::Independent,
        )
        .unwrap();
        let v = sample_reverse_v(&m, 3, 1000, 4, 5).unwrap();
        assert!(v.iter().all(|x| x.abs() == 0.5));
        assert!(sample_reverse_v(&m, 3, 10, 5, 5).is_err());
    }

    #[test]
    fn lagged_magnitudes_coincide_on_diagonal() {
        let f = InputDistribution::pareto_power(4.0, Centering::SignSymmetric).unwrap();
        let m = PolynomialModel::new(
            CoefficientTensor::uniform(2, 4).unwrap(),
            DependenceRegime::forward(RegimeTag::InsideIndependent),
            vec![f.clone(), f],
            Coupling::LaggedMagnitude,
        )
        .unwrap();
        for x in sample_cells(&m, 2, 20).unwrap() {
            for i in 0..3 {
                assert_eq!(x[i].abs(), x[4 + i + 1].abs());
            }
        }
    }

    #[test]
    fn binary_export_round_trip() {
        let dir = std::env::temp_dir().join(format!("polymart-export-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("s.bin");
        let data = vec![1.5, -2.25, 1e-300];
        write_f64le(&p, &data).unwrap();
        assert_eq!(read_f64le(&p).unwrap(), data);
        write_sample_csv(&dir.join("s.csv"), &data).unwrap();
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
