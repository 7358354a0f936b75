//! The support set Ω = (Y − Y) ∩ ℤⁿ and point clouds of the attractor Y.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{box_points, DigitSet, DilationMatrix};

/// Default cap on the number of lattice points in the initial bounding region.
pub const DEFAULT_POINT_CAP: usize = 1_000_000;

/// A finite symmetric set of integer points containing 0, sorted lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SupportSet {
    #[serde(skip)]
    dim: usize,
    points: Vec<Vec<i64>>,
    #[serde(skip)]
    index: HashMap<Vec<i64>, usize>,
}

impl SupportSet {
    /// Build from arbitrary points; they are sorted and deduplicated.
    pub fn from_points(dim: usize, points: impl IntoIterator<Item = Vec<i64>>) -> Result<Self> {
        let set: BTreeSet<Vec<i64>> = points.into_iter().collect();
        if let Some(p) = set.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        let points: Vec<Vec<i64>> = set.into_iter().collect();
        let index = points.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        Ok(SupportSet { dim, points, index })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<i64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        self.index.contains_key(k)
    }

    pub fn position(&self, k: &[i64]) -> Option<usize> {
        self.index.get(k).copied()
    }

    pub fn is_symmetric(&self) -> bool {
        self.points
            .iter()
            .all(|k| self.contains(&k.iter().map(|x| -x).collect::<Vec<_>>()))
    }

    /// Largest absolute coordinate.
    pub fn max_abs(&self) -> i64 {
        self.points.iter().flatten().map(|x| x.abs()).max().unwrap_or(0)
    }
}

/// The difference set Q − Q.
pub fn difference_set(q: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let set: BTreeSet<Vec<i64>> = q
        .iter()
        .flat_map(|a| q.iter().map(move |b| a.iter().zip(b).map(|(x, y)| x - y).collect()))
        .collect();
    set.into_iter().collect()
}

/// Σ_{j≥1} ‖M⁻ʲ‖₂, truncated once a term drops below 1e-12 of the partial sum,
/// plus a certified bound on the remaining tail.
pub fn inverse_power_norm_sum(m: &DilationMatrix) -> f64 {
    let inv = m.inverse_f64();
    let mut power = inv.clone();
    let mut sum = 0.0;
    for _ in 0..100_000 {
        let t = power.norm_spectral_bound();
        sum += t;
        if t < 1e-12 * sum {
            // Σ_{j>J} ‖M⁻ʲ‖ ≤ ‖M⁻ᴶ‖ Σ_{i≥1} ‖M⁻ⁱ‖ ≤ t · sum / (1 − t)
            return sum + t * sum / (1.0 - t);
        }
        power = &power * &inv;
    }
    f64::INFINITY
}

trait SpectralNorm {
    fn norm_spectral_bound(&self) -> f64;
}

impl SpectralNorm for nalgebra::DMatrix<f64> {
    fn norm_spectral_bound(&self) -> f64 {
        // largest singular value, padded by a relative rounding margin
        let s = self.singular_values().max();
        s * (1.0 + 1e-12)
    }
}

/// Options for [`omega_with`].
#[derive(Clone, Copy, Debug)]
pub struct OmegaOptions {
    /// Cap on lattice points in the initial ball.
    pub cap: usize,
    /// Multiplier applied to the certified radius.
    pub radius_factor: f64,
}

impl Default for OmegaOptions {
    fn default() -> Self {
        OmegaOptions {
            cap: DEFAULT_POINT_CAP,
            radius_factor: 1.0,
        }
    }
}

/// Ω for the mask support `q`, with default options.
pub fn omega(m: &DilationMatrix, q: &[Vec<i64>]) -> Result<SupportSet> {
    omega_with(m, q, OmegaOptions::default())
}

/// Greatest set Ω inside a certified ball with: k ∈ Ω ⇔ M k + q′ ∈ Ω for some q′ ∈ Q − Q.
pub fn omega_with(m: &DilationMatrix, q: &[Vec<i64>], opts: OmegaOptions) -> Result<SupportSet> {
    let n = m.dim();
    if q.is_empty() {
        return Err(Error::InvalidMask("empty support".into()));
    }
    if let Some(p) = q.iter().find(|p| p.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.len(),
        });
    }
    let qd = difference_set(q);
    let qmax = qd
        .iter()
        .map(|v| v.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let radius = (qmax * inverse_power_norm_sum(m) * opts.radius_factor + (n as f64).sqrt()).max(0.0);
    let b = radius.floor() as i64;
    let side = 2 * b + 1;
    let count = (side as f64).powi(n as i32);
    if !count.is_finite() || count > opts.cap as f64 {
        return Err(Error::BoundOverflow {
            points: count,
            cap: opts.cap,
        });
    }
    let side = side as usize;
    let total = side.pow(n as u32);
    let encode = |k: &[i64]| -> Option<usize> {
        let mut idx = 0usize;
        for &x in k {
            if x < -b || x > b {
                return None;
            }
            idx = idx * side + (x + b) as usize;
        }
        Some(idx)
    };
    let lo = vec![-b; n];
    let hi = vec![b; n];
    let r2 = radius * radius;
    let mut alive = vec![false; total];
    let mut live: Vec<Vec<i64>> = Vec::new();
    for k in box_points(&lo, &hi) {
        let d2: f64 = k.iter().map(|&x| (x * x) as f64).sum();
        if d2 <= r2 {
            alive[encode(&k).unwrap()] = true;
            live.push(k);
        }
    }
    // images M k are computed once
    let images: Vec<Vec<i64>> = live.iter().map(|k| m.apply(k)).collect();
    let mut current: Vec<usize> = (0..live.len()).collect();
    loop {
        let keep: Vec<bool> = current
            .par_iter()
            .map(|&i| {
                let mk = &images[i];
                let mut buf = vec![0i64; n];
                qd.iter().any(|qp| {
                    for t in 0..n {
                        buf[t] = mk[t] + qp[t];
                    }
                    encode(&buf).is_some_and(|idx| alive[idx])
                })
            })
            .collect();
        if keep.iter().all(|&x| x) {
            break;
        }
        let mut next = Vec::with_capacity(current.len());
        for (&i, &kp) in current.iter().zip(&keep) {
            if kp {
                next.push(i);
            } else {
                alive[encode(&live[i]).unwrap()] = false;
            }
        }
        current = next;
    }
    if current.is_empty() {
        return Err(Error::EmptyResult);
    }
    SupportSet::from_points(n, current.into_iter().map(|i| live[i].clone()))
}

/// Integer check of M⁻¹(Ω + Q′) ∩ ℤⁿ ⊆ Ω.
pub fn is_j0_invariant(m: &DilationMatrix, omega: &SupportSet, q: &[Vec<i64>]) -> bool {
    let qd = difference_set(q);
    omega.points().iter().all(|k| {
        qd.iter().all(|qp| {
            let s: Vec<i64> = k.iter().zip(qp).map(|(a, b)| a + b).collect();
            match m.solve_integer(&s) {
                Some(x) => omega.contains(&x),
                None => true,
            }
        })
    })
}

/// Finite-depth M-adic expansions Σ_{j≤depth} M⁻ʲ d_{i_j}.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TileCloud {
    pub points: Vec<Vec<f64>>,
    pub depth: usize,
    pub count: usize,
    /// True when digit strings were sampled rather than enumerated.
    pub sampled: bool,
}

impl TileCloud {
    /// One point per row, columns x1..xn.
    pub fn to_csv(&self) -> String {
        let n = self.points.first().map_or(0, Vec::len);
        let mut s = (1..=n).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");
        s.push('\n');
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }
}

/// Number of digit strings enumerated before switching to sampling.
pub const DEFAULT_TILE_BUDGET: usize = 1 << 20;

/// Attractor points at the given depth; when m^depth exceeds the budget
/// (`sample`, or [`DEFAULT_TILE_BUDGET`]) that many strings are drawn with `seed`.
pub fn tile_points(
    m: &DilationMatrix,
    digits: &DigitSet,
    depth: usize,
    sample: Option<usize>,
    seed: u64,
) -> Result<TileCloud> {
    if depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    let n = m.dim();
    let inv = m.inverse_f64();
    let ds: Vec<nalgebra::DVector<f64>> = digits
        .digits()
        .iter()
        .map(|d| nalgebra::DVector::from_iterator(n, d.iter().map(|&x| x as f64)))
        .collect();
    let budget = sample.unwrap_or(DEFAULT_TILE_BUDGET);
    let full = (ds.len() as f64).powi(depth as i32);
    if full <= budget as f64 {
        let mut level: Vec<nalgebra::DVector<f64>> = vec![nalgebra::DVector::zeros(n)];
        for _ in 0..depth {
            level = level
                .iter()
                .flat_map(|s| ds.iter().map(|d| &inv * (d + s)).collect::<Vec<_>>())
                .collect();
        }
        let points: Vec<Vec<f64>> = level.into_iter().map(|v| v.iter().copied().collect()).collect();
        return Ok(TileCloud {
            count: points.len(),
            points,
            depth,
            sampled: false,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..budget)
        .map(|_| {
            let mut x = nalgebra::DVector::zeros(n);
            for _ in 0..depth {
                let d = &ds[rng.gen_range(0..ds.len())];
                x = &inv * (d + x);
            }
            x.iter().copied().collect()
        })
        .collect();
    Ok(TileCloud {
        count: points.len(),
        points,
        depth,
        sampled: true,
    })
}

/// Radius of a ball about 0 containing the attractor of (M, D).
pub fn attractor_radius(m: &DilationMatrix, digits: &DigitSet) -> f64 {
    let dmax = digits
        .digits()
        .iter()
        .map(|d| d.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    dmax * inverse_power_norm_sum(m)
}
