//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use refinable::attractor::{omega, SupportSet};
use refinable::bspline::bspline_mask;
use refinable::lattice::{canonical_digits, validate_dilation, DigitSet, DigitTarget, DilationMatrix};
use refinable::transition::{build_transition, restrict, Mask, TransitionMatrix};
use refinable::trigpoly::{face_basis, PolySpace, ZeroConstraint};

pub fn dilation(rows: &[&[i64]]) -> DilationMatrix {
    let rows: Vec<Vec<i64>> = rows.iter().map(|r| r.to_vec()).collect();
    validate_dilation(&rows).unwrap()
}

pub fn digits(m: &DilationMatrix, pts: &[&[i64]]) -> DigitSet {
    DigitSet::new(m, pts.iter().map(|p| p.to_vec()).collect(), DigitTarget::Matrix).unwrap()
}

/// A named tile: dilation matrix and digit set.
pub struct Tile {
    pub name: &'static str,
    pub m: DilationMatrix,
    pub d: DigitSet,
}

impl Tile {
    fn new(name: &'static str, rows: &[&[i64]], pts: &[&[i64]]) -> Self {
        let m = dilation(rows);
        let d = digits(&m, pts);
        Tile { name, m, d }
    }

    pub fn mask(&self, order: usize) -> Mask {
        bspline_mask(&self.d, order)
    }
}

pub fn dyadic() -> Tile {
    Tile::new("dyadic", &[&[2]], &[&[0], &[1]])
}

pub fn square() -> Tile {
    Tile::new("square", &[&[2, 0], &[0, 2]], &[&[0, 0], &[1, 0], &[0, 1], &[1, 1]])
}

pub fn cube() -> Tile {
    let pts: Vec<Vec<i64>> = (0..8).map(|i| vec![i & 1, (i >> 1) & 1, (i >> 2) & 1]).collect();
    let refs: Vec<&[i64]> = pts.iter().map(|p| p.as_slice()).collect();
    Tile::new("cube", &[&[2, 0, 0], &[0, 2, 0], &[0, 0, 2]], &refs)
}

pub fn bear() -> Tile {
    Tile::new("bear", &[&[1, -2], &[1, 0]], &[&[0, 0], &[1, 0]])
}

pub fn dragon() -> Tile {
    Tile::new("dragon", &[&[1, -1], &[1, 1]], &[&[0, 0], &[1, 0]])
}

pub fn three_dig1() -> Tile {
    Tile::new("threedig1", &[&[1, -2], &[1, 1]], &[&[0, 0], &[1, 0], &[0, 1]])
}

pub fn three_dig2() -> Tile {
    Tile::new("threedig2", &[&[1, -1], &[1, 2]], &[&[0, 0], &[1, 0], &[0, 1]])
}

/// diag(3, 2) with a sheared digit set.
pub fn anisotropic() -> Tile {
    Tile::new(
        "anisotropic",
        &[&[3, 0], &[0, 2]],
        &[&[0, 0], &[1, 0], &[2, 0], &[3, 1], &[1, 1], &[2, 1]],
    )
}

/// [0,1] × Bear tile in three dimensions.
pub fn cylinder() -> Tile {
    Tile::new(
        "cylinder",
        &[&[2, 0, 0], &[0, 1, -2], &[0, 1, 0]],
        &[&[0, 0, 0], &[0, 1, 0], &[1, 0, 0], &[1, 1, 0]],
    )
}

pub fn transition(m: &DilationMatrix, mask: &Mask) -> TransitionMatrix {
    let om = omega(m, &mask.support()).unwrap();
    build_transition(m, mask, &om).unwrap()
}

/// (𝒯p)(ξ) = Σ_{d*} |ĉ(η)|² p(η) with η = M^{−T}(ξ + d*), straight from the definition.
pub fn transition_pointwise(m: &DilationMatrix, mask: &Mask, space: &PolySpace, p: &DVector<f64>, xi: &[f64]) -> f64 {
    let n = m.dim();
    let inv_t = m.inverse_f64().transpose();
    let scale = m.m() as f64;
    let dual = canonical_digits(m, true).unwrap();
    dual.digits()
        .iter()
        .map(|d| {
            let shifted = DVector::from_iterator(n, xi.iter().zip(d).map(|(x, &e)| x + e as f64));
            let eta: Vec<f64> = (&inv_t * shifted).iter().copied().collect();
            let (re, im) = mask.symbol(&eta);
            (re * re + im * im) / (scale * scale) * space.evaluate(p, &eta)
        })
        .sum()
}

/// Subset K of Ω with K − K ⊆ Ω, grown greedily from 0 in random order.
pub fn difference_closed_subset<R: Rng>(omega: &SupportSet, size: usize, rng: &mut R) -> Vec<Vec<i64>> {
    let mut pts: Vec<Vec<i64>> = omega.points().to_vec();
    for i in (1..pts.len()).rev() {
        pts.swap(i, rng.gen_range(0..=i));
    }
    let mut k = vec![vec![0; omega.dim()]];
    for p in pts {
        if k.len() >= size {
            break;
        }
        let ok = k.iter().all(|q| {
            let a: Vec<i64> = p.iter().zip(q).map(|(x, y)| x - y).collect();
            omega.contains(&a)
        });
        if ok && !k.contains(&p) {
            k.push(p);
        }
    }
    k
}

/// Folded coefficients of |q|² for q = Σ_{a∈K} q_a e^{−2πi(a,ξ)}.
pub fn squared(space: &PolySpace, support: &[Vec<i64>], q: &[f64]) -> DVector<f64> {
    let mut full: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for (a, qa) in support.iter().zip(q) {
        for (b, qb) in support.iter().zip(q) {
            let d: Vec<i64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            *full.entry(d).or_insert(0.0) += qa * qb;
        }
    }
    space.fold_coefficients(&full).unwrap()
}

/// Relative invariance residual of the face with a zero of order 2(k+1) at the origin.
pub fn origin_face_residual(t: &TransitionMatrix, k: usize) -> f64 {
    let n = t.dilation.dim();
    let face = face_basis(&t.space, &[ZeroConstraint::origin(n, k)]).unwrap();
    if face.dim == 0 {
        return 0.0;
    }
    let tn = &t.matrix * &face.basis;
    let r = face.basis.tr_mul(&tn);
    let diff = &tn - &face.basis * r;
    let scale = tn.norm();
    let residual = if scale == 0.0 { diff.norm() } else { diff.norm() / scale };
    // the library's own check must agree
    assert!(residual > 1e-8 || restrict(t, &face).is_ok());
    residual
}

/// max_{|β| < order} |Σ_k p_k k^β| / Σ_k |p_k k^β| over the unfolded coefficients.
pub fn moment_residual(space: &PolySpace, p: &DVector<f64>, order: usize) -> f64 {
    let n = space.lattice_dim();
    let pts = space.support().points();
    let mut worst: f64 = 0.0;
    for beta in refinable::trigpoly::multi_indices(n, order.saturating_sub(1)) {
        let mut s = 0.0;
        let mut a = 0.0;
        for k in pts {
            let c = p[space.index_of(k).unwrap()];
            let mono: f64 = k.iter().zip(&beta).map(|(&x, &e)| (x as f64).powi(e as i32)).product();
            s += c * mono;
            a += (c * mono).abs();
        }
        if a > 0.0 {
            worst = worst.max(s.abs() / a);
        }
    }
    worst
}

/// Random 8×8 entrywise-nonnegative matrix and nonnegative start vector.
pub fn random_nonnegative<R: Rng>(rng: &mut R, size: usize, density: f64) -> (DMatrix<f64>, DVector<f64>) {
    let a = DMatrix::from_fn(size, size, |_, _| {
        if rng.gen_bool(density) {
            rng.gen_range(0.0..1.0)
        } else {
            0.0
        }
    });
    let mut x = DVector::from_fn(size, |_, _| {
        if rng.gen_bool(0.5) {
            rng.gen_range(0.0..1.0)
        } else {
            0.0
        }
    });
    if x.iter().all(|&v| v == 0.0) {
        x[rng.gen_range(0..size)] = 1.0;
    }
    (a, x)
}

/// (‖Aʲx‖₁)^{1/j} and the spectral radius of A on the coordinate face reachable from supp x.
pub fn cone_growth(a: &DMatrix<f64>, x: &DVector<f64>, j: usize) -> (f64, f64) {
    let n = a.nrows();
    let mut reach: Vec<bool> = x.iter().map(|&v| v > 0.0).collect();
    loop {
        let mut grew = false;
        for src in 0..n {
            if !reach[src] {
                continue;
            }
            for dst in 0..n {
                if !reach[dst] && a[(dst, src)] > 0.0 {
                    reach[dst] = true;
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    let idx: Vec<usize> = (0..n).filter(|&i| reach[i]).collect();
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| a[(idx[r], idx[c])]);
    let rho = sub.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut y = x / x.sum();
    let mut log_norm = 0.0;
    for _ in 0..j {
        y = a * y;
        let s = y.sum();
        if s == 0.0 {
            return (0.0, rho);
        }
        log_norm += s.ln();
        y /= s;
    }
    ((log_norm / j as f64).exp(), rho)
}

/// Values of a polynomial Σ coef_β x^β on the box [−w, w]ⁿ.
pub fn polynomial_data(n: usize, w: i64, terms: &[(Vec<usize>, f64)]) -> BTreeMap<Vec<i64>, f64> {
    let lo = vec![-w; n];
    let hi = vec![w; n];
    refinable::lattice::box_points(&lo, &hi)
        .into_iter()
        .map(|k| {
            let v = terms
                .iter()
                .map(|(beta, c)| c * k.iter().zip(beta).map(|(&x, &e)| (x as f64).powi(e as i32)).product::<f64>())
                .sum();
            (k, v)
        })
        .collect()
}

/// Largest |Δ^β f| with |β| = order over points whose stencil lies in `region`,
/// relative to the largest |f| there.
pub fn difference_residual(f: &BTreeMap<Vec<i64>, f64>, region: &dyn Fn(&[i64]) -> bool, order: usize) -> f64 {
    let n = f.keys().next().map_or(0, Vec::len);
    let betas: Vec<Vec<usize>> = refinable::trigpoly::multi_indices(n, order)
        .into_iter()
        .filter(|b| b.iter().sum::<usize>() == order)
        .collect();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for k in f.keys() {
        if !region(k) {
            continue;
        }
        scale = scale.max(f[k].abs());
        'beta: for beta in &betas {
            // Δ^β f(k) = Σ_{γ ≤ β} (−1)^{|β−γ|} C(β, γ) f(k + γ)
            let hi: Vec<i64> = beta.iter().map(|&b| b as i64).collect();
            let lo = vec![0i64; n];
            let mut s = 0.0;
            for g in refinable::lattice::box_points(&lo, &hi) {
                let pt: Vec<i64> = k.iter().zip(&g).map(|(a, b)| a + b).collect();
                if !region(&pt) {
                    continue 'beta;
                }
                let Some(v) = f.get(&pt) else { continue 'beta };
                let mut coef = 1.0;
                let mut sign = 1.0;
                for (&b, &gi) in beta.iter().zip(&g) {
                    coef *= binomial(b, gi as usize);
                    if (b - gi as usize) % 2 == 1 {
                        sign = -sign;
                    }
                }
                s += sign * coef * v;
            }
            worst = worst.max(s.abs());
        }
    }
    if scale == 0.0 {
        worst
    } else {
        worst / scale
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Sum of level-j data over each residue class of ℤ² / M^jℤ² (2 × 2 matrices).
pub fn residue_sums(m: &DilationMatrix, level: usize, values: &BTreeMap<Vec<i64>, f64>) -> BTreeMap<(i64, i64), f64> {
    assert_eq!(m.dim(), 2);
    let mut p = [[1i64, 0], [0, 1]];
    for _ in 0..level {
        let e = |i: usize, j: usize| m.entry(i, j);
        p = [
            [e(0, 0) * p[0][0] + e(0, 1) * p[1][0], e(0, 0) * p[0][1] + e(0, 1) * p[1][1]],
            [e(1, 0) * p[0][0] + e(1, 1) * p[1][0], e(1, 0) * p[0][1] + e(1, 1) * p[1][1]],
        ];
    }
    let det = (p[0][0] * p[1][1] - p[0][1] * p[1][0]).abs();
    // adj(P) k mod det identifies k + Pℤ²
    let adj = [[p[1][1], -p[0][1]], [-p[1][0], p[0][0]]];
    let mut out: BTreeMap<(i64, i64), f64> = BTreeMap::new();
    for (k, v) in values {
        let a = (adj[0][0] * k[0] + adj[0][1] * k[1]).rem_euclid(det);
        let b = (adj[1][0] * k[0] + adj[1][1] * k[1]).rem_euclid(det);
        *out.entry((a, b)).or_insert(0.0) += v;
    }
    out
}

