//! Dense nonsymmetric eigenvalues: balancing, Householder reduction to
//! Hessenberg form and the Francis double-shift QR iteration.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// 1-based square scratch matrix so the QR sweep reads like the classical algorithm.
struct Work {
    n: usize,
    a: Vec<f64>,
}

impl Work {
    fn from(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut a = vec![0.0; (n + 1) * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                a[(i + 1) * (n + 1) + j + 1] = m[(i, j)];
            }
        }
        Work { n, a }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.n + 1) + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * (self.n + 1) + j]
    }
}

const RADIX: f64 = 2.0;

fn balance(w: &mut Work) {
    let n = w.n;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 1..=n {
                if j != i {
                    c += w.at(j, i).abs();
                    r += w.at(i, j).abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 1..=n {
                        *w.at_mut(i, j) *= g;
                    }
                    for j in 1..=n {
                        *w.at_mut(j, i) *= f;
                    }
                }
            }
        }
    }
}

fn hessenberg(w: &mut Work) {
    let n = w.n;
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n + 1];
    for k in 1..=n - 2 {
        let mut scale = 0.0;
        for i in k + 1..=n {
            scale += w.at(i, k).abs();
        }
        if scale == 0.0 {
            continue;
        }
        let mut h = 0.0;
        for i in k + 1..=n {
            v[i] = w.at(i, k) / scale;
            h += v[i] * v[i];
        }
        let g = if v[k + 1] > 0.0 { -h.sqrt() } else { h.sqrt() };
        h -= v[k + 1] * g;
        v[k + 1] -= g;
        // H = I − v vᵀ / h
        for j in k..=n {
            let mut s = 0.0;
            for i in k + 1..=n {
                s += v[i] * w.at(i, j);
            }
            let f = s / h;
            for i in k + 1..=n {
                *w.at_mut(i, j) -= f * v[i];
            }
        }
        for i in 1..=n {
            let mut s = 0.0;
            for j in k + 1..=n {
                s += v[j] * w.at(i, j);
            }
            let f = s / h;
            for j in k + 1..=n {
                *w.at_mut(i, j) -= f * v[j];
            }
        }
        *w.at_mut(k + 1, k) = scale * g;
        for i in k + 2..=n {
            *w.at_mut(i, k) = 0.0;
        }
    }
}

/// QR sweeps allowed per row of the matrix (at least ten rows are assumed), pooled
/// over all eigenvalues.
pub const SWEEPS_PER_ROW: usize = 30;

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

#[allow(clippy::many_single_char_names)]
fn hqr(w: &mut Work) -> Result<Vec<Complex64>> {
    let n = w.n;
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    let mut frob = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += w.at(i, j).abs();
            frob += w.at(i, j) * w.at(i, j);
        }
    }
    // subdiagonal entries below ε‖H‖_F are negligible in the normwise sense
    let floor = f64::EPSILON * frob.sqrt();
    let budget = SWEEPS_PER_ROW * n.max(10);
    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    let mut total = 0;
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = w.at(l - 1, l - 1).abs() + w.at(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                let h = w.at(l, l - 1).abs();
                if h <= f64::EPSILON * s || h <= floor {
                    *w.at_mut(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = w.at(nn, nn);
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = w.at(nn - 1, nn - 1);
            let mut ww = w.at(nn, nn - 1) * w.at(nn - 1, nn);
            if l == nn - 1 {
                p = 0.5 * (y - x);
                q = p * p + ww;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - ww / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn = nn.saturating_sub(2);
                break;
            }
            if total >= budget {
                return Err(Error::NoConvergence { iterations: total });
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                t += x;
                for i in 1..=nn {
                    *w.at_mut(i, i) -= x;
                }
                let s = w.at(nn, nn - 1).abs() + w.at(nn - 1, nn - 2).abs();
                x = 0.75 * s;
                y = x;
                ww = -0.4375 * s * s;
            }
            its += 1;
            total += 1;
            let mut m = nn - 2;
            let mut z;
            loop {
                z = w.at(m, m);
                r = x - z;
                let s = y - z;
                p = (r * s - ww) / w.at(m + 1, m) + w.at(m, m + 1);
                q = w.at(m + 1, m + 1) - z - r - s;
                r = w.at(m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = w.at(m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (w.at(m - 1, m - 1).abs() + z.abs() + w.at(m + 1, m + 1).abs());
                if u <= f64::EPSILON * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                *w.at_mut(i, i - 2) = 0.0;
                if i != m + 2 {
                    *w.at_mut(i, i - 3) = 0.0;
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = w.at(k, k - 1);
                    q = w.at(k + 1, k - 1);
                    r = 0.0;
                    if k != nn - 1 {
                        r = w.at(k + 2, k - 1);
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            *w.at_mut(k, k - 1) = -w.at(k, k - 1);
                        }
                    } else {
                        *w.at_mut(k, k - 1) = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = w.at(k, j) + q * w.at(k + 1, j);
                        if k != nn - 1 {
                            pp += r * w.at(k + 2, j);
                            *w.at_mut(k + 2, j) -= pp * z;
                        }
                        *w.at_mut(k + 1, j) -= pp * y;
                        *w.at_mut(k, j) -= pp * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * w.at(i, k) + y * w.at(i, k + 1);
                        if k != nn - 1 {
                            pp += z * w.at(i, k + 2);
                            *w.at_mut(i, k + 2) -= pp * r;
                        }
                        *w.at_mut(i, k + 1) -= pp * q;
                        *w.at_mut(i, k) -= pp;
                    }
                }
                k += 1;
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// All eigenvalues of a real square matrix, in no particular order.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    assert_eq!(a.nrows(), a.ncols(), "eigenvalues of a non-square matrix");
    if a.nrows() == 0 {
        return Ok(vec![]);
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Precondition("matrix has non-finite entries".into()));
    }
    let mut w = Work::from(a);
    balance(&mut w);
    hessenberg(&mut w);
    hqr(&mut w)
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Eigen-data of a restricted transition matrix.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub radius: f64,
    /// Present when the dominant eigenvalue is real and simple.
    pub leading_vector: Option<DVector<f64>>,
}

pub fn spectrum(a: &DMatrix<f64>) -> Result<Spectrum> {
    let eigenvalues = eigenvalues(a)?;
    let radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let leading_vector = leading_real(&eigenvalues, radius).and_then(|lam| inverse_iteration(a, lam));
    Ok(Spectrum {
        eigenvalues,
        radius,
        leading_vector,
    })
}

fn leading_real(eig: &[Complex64], radius: f64) -> Option<f64> {
    if radius == 0.0 {
        return None;
    }
    let tol = 1e-8 * radius;
    let top: Vec<&Complex64> = eig.iter().filter(|z| (z.norm() - radius).abs() <= tol).collect();
    if top.len() != 1 || top[0].im.abs() > tol {
        return None;
    }
    Some(top[0].re)
}

/// Eigenvector for a known real eigenvalue, by shifted inverse iteration.
pub fn inverse_iteration(a: &DMatrix<f64>, lambda: f64) -> Option<DVector<f64>> {
    let n = a.nrows();
    let shift = lambda + 1e-10 * lambda.abs().max(1.0);
    let shifted = a - DMatrix::identity(n, n) * shift;
    let lu = shifted.lu();
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.01 * ((i * 7919) % 13) as f64);
    for _ in 0..4 {
        let y = lu.solve(&x)?;
        let norm = y.norm();
        if !norm.is_finite() || norm == 0.0 {
            return None;
        }
        x = y / norm;
    }
    // sign convention: largest-magnitude entry positive
    let imax = x.iamax();
    if x[imax] < 0.0 {
        x = -x;
    }
    Some(x)
}
