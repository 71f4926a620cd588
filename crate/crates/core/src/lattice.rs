//! Exact enumeration of lattice points in the ellipsoid `x M x^t <= T`.
//!
//! Coordinates are fixed from the last one down to the first. When the
//! coordinates `k+1..n` are fixed, the smallest value the form can still
//! reach is given by the Schur complement of the leading `k x k` block,
//! which is kept as an integer matrix over a common denominator. The admissible
//! range for `x_k` is the integer solution set of a quadratic inequality,
//! computed with integer square roots and corrected exactly, so no floating
//! point enters any accept/reject decision.

use std::ops::ControlFlow;

use crate::forms::GramForm;

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub(crate) fn isqrt(n: i128) -> i128 {
    debug_assert!(n >= 0);
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as i128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

/// Scaled Schur complement over coordinates `k..n`: the true complement is
/// `s / den`.
#[derive(Debug, Clone)]
struct Level {
    den: i128,
    size: usize,
    s: Vec<i128>,
}

impl Level {
    fn at(&self, i: usize, j: usize) -> i128 {
        self.s[i * self.size + j]
    }

    /// Coefficients `(a, b, c)` with `den * minvalue(x_k) = a x^2 + 2 b x + c`
    /// given the fixed tail `x_{k+1..n}`.
    fn quadratic(&self, tail: &[i64]) -> (i128, i128, i128) {
        let a = self.at(0, 0);
        let mut b = 0i128;
        let mut c = 0i128;
        for (i, &ti) in tail.iter().enumerate() {
            let ti = ti as i128;
            if ti == 0 {
                continue;
            }
            b += self.at(0, i + 1) * ti;
            let mut row = 0i128;
            for (j, &tj) in tail.iter().enumerate() {
                row += self.at(i + 1, j + 1) * tj as i128;
            }
            c += row * ti;
        }
        (a, b, c)
    }

    /// Eliminates the first coordinate.
    fn reduce(&self) -> Level {
        let m = self.size - 1;
        let p = self.at(0, 0);
        let mut s = Vec::with_capacity(m * m);
        for i in 1..self.size {
            for j in 1..self.size {
                s.push(self.at(i, j) * p - self.at(i, 0) * self.at(0, j));
            }
        }
        let mut den = self.den * p;
        let g = s.iter().fold(den, |g, &v| gcd(g, v));
        if g > 1 {
            den /= g;
            s.iter_mut().for_each(|v| *v /= g);
        }
        Level { den, size: m, s }
    }
}

/// Precomputed elimination data for one positive definite form.
#[derive(Debug, Clone)]
pub(crate) struct Ellipsoid {
    dim: usize,
    // levels[k] is the complement over coordinates k..dim
    levels: Vec<Level>,
}

/// Integer range `lo..=hi` of `x` with `a x^2 + 2 b x + c <= 0`, `a > 0`.
fn admissible(a: i128, b: i128, c: i128) -> Option<(i128, i128)> {
    let disc = b * b - a * c;
    if disc < 0 {
        return None;
    }
    let q = |x: i128| a * x * x + 2 * b * x + c;
    let r = isqrt(disc);
    let mut lo = floor_div(-b - r, a);
    let mut hi = floor_div(-b + r, a) + 1;
    while q(lo - 1) <= 0 {
        lo -= 1;
    }
    while lo <= hi && q(lo) > 0 {
        lo += 1;
    }
    while q(hi + 1) <= 0 {
        hi += 1;
    }
    while hi >= lo && q(hi) > 0 {
        hi -= 1;
    }
    (lo <= hi).then_some((lo, hi))
}

impl Ellipsoid {
    pub(crate) fn new(form: &GramForm) -> Self {
        let n = form.dim();
        let first = Level {
            den: 1,
            size: n,
            s: (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| form.entry(i, j) as i128).collect(),
        };
        let mut levels = vec![first];
        for _ in 1..n {
            let next = levels.last().unwrap().reduce();
            levels.push(next);
        }
        Ellipsoid { dim: n, levels }
    }

    /// Calls `visit(x, value)` for every `x` with `value = x M x^t <= bound`.
    pub(crate) fn for_each_le<F>(&self, bound: u64, mut visit: F) -> ControlFlow<()>
    where
        F: FnMut(&[i64], u64) -> ControlFlow<()>,
    {
        let mut x = vec![0i64; self.dim];
        self.descend_le(self.dim - 1, bound as i128, &mut x, &mut visit)
    }

    fn descend_le<F>(&self, k: usize, bound: i128, x: &mut [i64], visit: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&[i64], u64) -> ControlFlow<()>,
    {
        let level = &self.levels[k];
        let (a, b, c) = level.quadratic(&x[k + 1..]);
        let Some((lo, hi)) = admissible(a, b, c - level.den * bound) else {
            return ControlFlow::Continue(());
        };
        for v in lo..=hi {
            x[k] = v as i64;
            if k == 0 {
                // level 0 is the form itself with den = 1
                let value = a * v * v + 2 * b * v + c;
                visit(x, value as u64)?;
            } else {
                self.descend_le(k - 1, bound, x, visit)?;
            }
        }
        x[k] = 0;
        ControlFlow::Continue(())
    }

    /// Calls `visit(x)` for every `x` with `x M x^t == target`.
    pub(crate) fn for_each_eq<F>(&self, target: u64, mut visit: F) -> ControlFlow<()>
    where
        F: FnMut(&[i64]) -> ControlFlow<()>,
    {
        let mut x = vec![0i64; self.dim];
        self.descend_eq(self.dim - 1, target as i128, &mut x, &mut visit)
    }

    fn descend_eq<F>(&self, k: usize, target: i128, x: &mut [i64], visit: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&[i64]) -> ControlFlow<()>,
    {
        let level = &self.levels[k];
        let (a, b, c) = level.quadratic(&x[k + 1..]);
        if k == 0 {
            // a x^2 + 2 b x + (c - target) = 0
            let c = c - target;
            let disc = b * b - a * c;
            if disc < 0 {
                return ControlFlow::Continue(());
            }
            let r = isqrt(disc);
            if r * r != disc {
                return ControlFlow::Continue(());
            }
            let mut roots = [-b - r, -b + r];
            roots.sort_unstable();
            for (i, num) in roots.into_iter().enumerate() {
                if i == 1 && r == 0 {
                    break;
                }
                if num % a == 0 {
                    x[0] = (num / a) as i64;
                    visit(x)?;
                }
            }
            x[0] = 0;
            return ControlFlow::Continue(());
        }
        let Some((lo, hi)) = admissible(a, b, c - level.den * target) else {
            return ControlFlow::Continue(());
        };
        for v in lo..=hi {
            x[k] = v as i64;
            self.descend_eq(k - 1, target, x, visit)?;
        }
        x[k] = 0;
        ControlFlow::Continue(())
    }

    pub(crate) fn find_eq(&self, target: u64) -> Option<Vec<i64>> {
        let mut found = None;
        let _ = self.for_each_eq(target, |x| {
            found = Some(x.to_vec());
            ControlFlow::Break(())
        });
        found
    }

    pub(crate) fn all_eq(&self, target: u64) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        let _ = self.for_each_eq(target, |x| {
            out.push(x.to_vec());
            ControlFlow::Continue(())
        });
        out
    }
}
