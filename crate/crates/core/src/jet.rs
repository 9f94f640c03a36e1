//! Truncated multivariate Taylor arithmetic ("jets").
//!
//! A [`Jet`] stores the Taylor coefficients of a smooth function of several
//! perturbation variables around an expansion point, truncated to a fixed
//! set of monomials. Arithmetic and the elementary functions propagate the
//! coefficients exactly, so every partial derivative up to the truncation
//! order is available to machine precision.
//!
//! The monomial set is downward closed: it is bounded by a total degree and,
//! optionally, by a cap on the degree in the leading block of variables.
//! Geometry code splits the variables into a position block (`x`) and a
//! direction block (`y`) and caps the `x` degree, since most tensors need
//! many more `y`-derivatives than `x`-derivatives.
//!
//! Differentiating a jet lowers the set of coefficients that remain exact.
//! The coefficients outside that set are still stored but carry no meaning;
//! callers track validity by degree counting.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

/// Numeric type the metric evaluators are generic over.
///
/// Implemented by `f64` (plain evaluation) and [`Jet`] (evaluation with
/// derivatives).
pub trait Scalar:
    Clone
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// The value at the expansion point.
    fn value(&self) -> f64;
    /// A constant living in the same space as `self`.
    fn lift(&self, c: f64) -> Self;
    fn sqrt(self) -> Self;
    fn powf(self, p: f64) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn recip(self) -> Self;

    fn powi(self, k: i32) -> Self {
        if k == 0 {
            return self.lift(1.0);
        }
        let base = if k < 0 { self.recip() } else { self };
        let mut acc = base.clone();
        for _ in 1..k.unsigned_abs() {
            acc = acc * base.clone();
        }
        acc
    }

    fn square(self) -> Self {
        self.clone() * self
    }
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
}

/// Sum of pairwise products.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = a[0].clone() * b[0].clone();
    for (u, v) in a.iter().zip(b).skip(1) {
        acc = acc + u.clone() * v.clone();
    }
    acc
}

/// Monomial layout and multiplication table shared by all jets of one shape.
#[derive(Debug)]
pub struct JetSpace {
    nx: usize,
    ny: usize,
    degree: usize,
    x_cap: usize,
    monomials: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    products: Vec<(u32, u32, u32)>,
    partials: Vec<Vec<(u32, u32, f64)>>,
}

type SpaceKey = (usize, usize, usize, usize);

fn registry() -> &'static Mutex<HashMap<SpaceKey, Arc<JetSpace>>> {
    static REGISTRY: OnceLock<Mutex<HashMap<SpaceKey, Arc<JetSpace>>>> = OnceLock::new();
    REGISTRY.get_or_init(|| Mutex::new(HashMap::new()))
}

impl JetSpace {
    /// Space in `nx + ny` variables, total degree at most `degree`, degree in
    /// the first `nx` variables at most `x_cap`. Spaces are interned.
    pub fn split(nx: usize, ny: usize, degree: usize, x_cap: usize) -> Arc<JetSpace> {
        let key = (nx, ny, degree, x_cap.min(degree));
        let mut reg = registry().lock().expect("jet registry poisoned");
        reg.entry(key)
            .or_insert_with(|| Arc::new(JetSpace::build(nx, ny, degree, x_cap.min(degree))))
            .clone()
    }

    /// Space in `nvars` variables truncated at total degree `degree`.
    pub fn total(nvars: usize, degree: usize) -> Arc<JetSpace> {
        Self::split(0, nvars, degree, 0)
    }

    fn build(nx: usize, ny: usize, degree: usize, x_cap: usize) -> JetSpace {
        let nvars = nx + ny;
        let mut monomials = Vec::new();
        let mut current = vec![0u8; nvars];
        for d in 0..=degree {
            enumerate(&mut current, 0, d, &mut |m| {
                let xd: usize = m[..nx].iter().map(|&e| e as usize).sum();
                if xd <= x_cap {
                    monomials.push(m.to_vec());
                }
            });
        }
        let index: HashMap<Vec<u8>, usize> =
            monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let degrees: Vec<usize> = monomials
            .iter()
            .map(|m| m.iter().map(|&e| e as usize).sum())
            .collect();

        let mut products = Vec::new();
        let mut sum = vec![0u8; nvars];
        for (a, ma) in monomials.iter().enumerate() {
            for (b, mb) in monomials.iter().enumerate() {
                if degrees[a] + degrees[b] > degree {
                    // monomials are sorted by degree
                    break;
                }
                for k in 0..nvars {
                    sum[k] = ma[k] + mb[k];
                }
                if let Some(&r) = index.get(&sum) {
                    products.push((a as u32, b as u32, r as u32));
                }
            }
        }

        let mut partials = vec![Vec::new(); nvars];
        for (v, table) in partials.iter_mut().enumerate() {
            for (src, m) in monomials.iter().enumerate() {
                if m[v] == 0 {
                    continue;
                }
                let mut lowered = m.clone();
                lowered[v] -= 1;
                if let Some(&dst) = index.get(&lowered) {
                    table.push((src as u32, dst as u32, m[v] as f64));
                }
            }
        }

        JetSpace {
            nx,
            ny,
            degree,
            x_cap,
            monomials,
            index,
            products,
            partials,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nx + self.ny
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn x_cap(&self) -> usize {
        self.x_cap
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn index_of(&self, exponents: &[u8]) -> Option<usize> {
        self.index.get(exponents).copied()
    }
}

fn enumerate(current: &mut [u8], pos: usize, remaining: usize, f: &mut impl FnMut(&[u8])) {
    if pos + 1 == current.len() {
        current[pos] = remaining as u8;
        f(current);
        current[pos] = 0;
        return;
    }
    if current.is_empty() {
        if remaining == 0 {
            f(current);
        }
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e as u8;
        enumerate(current, pos + 1, remaining - e, f);
    }
    current[pos] = 0;
}

/// Truncated Taylor expansion over a [`JetSpace`].
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("value", &self.coeffs[0])
            .field("terms", &self.coeffs.len())
            .finish()
    }
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, value: f64) -> Jet {
        let mut coeffs = vec![0.0; space.len()];
        coeffs[0] = value;
        Jet {
            space: space.clone(),
            coeffs,
        }
    }

    /// The perturbation variable `var` expanded around `value`.
    pub fn variable(space: &Arc<JetSpace>, var: usize, value: f64) -> Jet {
        let mut jet = Jet::constant(space, value);
        let mut m = vec![0u8; space.nvars()];
        m[var] = 1;
        if let Some(i) = space.index_of(&m) {
            jet.coeffs[i] = 1.0;
        }
        jet
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    /// Taylor coefficient of the monomial with the given exponents.
    pub fn coefficient(&self, exponents: &[u8]) -> f64 {
        self.space
            .index_of(exponents)
            .map(|i| self.coeffs[i])
            .unwrap_or(0.0)
    }

    /// Partial derivative at the expansion point for a multi-index.
    pub fn derivative(&self, exponents: &[u8]) -> f64 {
        let factorial: f64 = exponents
            .iter()
            .map(|&e| (1..=e as u32).map(f64::from).product::<f64>())
            .product();
        self.coefficient(exponents) * factorial
    }

    /// Partial derivative with respect to the listed variables (repeats allowed).
    pub fn derivative_wrt(&self, vars: &[usize]) -> f64 {
        let mut m = vec![0u8; self.space.nvars()];
        for &v in vars {
            m[v] += 1;
        }
        self.derivative(&m)
    }

    /// The derivative with respect to one variable, as a jet.
    pub fn partial(&self, var: usize) -> Jet {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(src, dst, factor) in &self.space.partials[var] {
            coeffs[dst as usize] += factor * self.coeffs[src as usize];
        }
        Jet {
            space: self.space.clone(),
            coeffs,
        }
    }

    /// f(a + h) = Σ t_k h^k with `a` the value and `h` the nilpotent part.
    fn compose(&self, taylor: &[f64]) -> Jet {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let top = taylor.len() - 1;
        let mut acc = Jet::constant(&self.space, taylor[top]);
        for k in (0..top).rev() {
            acc = acc.mul_ref(&h);
            acc.coeffs[0] += taylor[k];
        }
        acc
    }

    fn mul_ref(&self, other: &Jet) -> Jet {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        let (a, b) = (&self.coeffs, &other.coeffs);
        for &(i, j, r) in &self.space.products {
            coeffs[r as usize] += a[i as usize] * b[j as usize];
        }
        Jet {
            space: self.space.clone(),
            coeffs,
        }
    }

    fn order(&self) -> usize {
        self.space.degree
    }

    fn zip_with(mut self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        debug_assert!(Arc::ptr_eq(&self.space, &other.space), "mixed jet spaces");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a = f(*a, *b);
        }
        self
    }
}

/// Taylor coefficients of x^p at a.
fn power_series(a: f64, p: f64, order: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(order + 1);
    let mut binom = 1.0;
    for k in 0..=order {
        t.push(binom * a.powf(p - k as f64));
        binom *= (p - k as f64) / (k as f64 + 1.0);
    }
    t
}

impl Scalar for Jet {
    fn value(&self) -> f64 {
        self.coeffs[0]
    }

    fn lift(&self, c: f64) -> Self {
        Jet::constant(&self.space, c)
    }

    fn sqrt(self) -> Self {
        let t = power_series(self.value(), 0.5, self.order());
        self.compose(&t)
    }

    fn powf(self, p: f64) -> Self {
        let t = power_series(self.value(), p, self.order());
        self.compose(&t)
    }

    fn ln(self) -> Self {
        let a = self.value();
        let mut t = vec![a.ln()];
        for k in 1..=self.order() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            t.push(sign / (k as f64 * a.powi(k as i32)));
        }
        self.compose(&t)
    }

    fn exp(self) -> Self {
        let ea = self.value().exp();
        let mut t = Vec::new();
        let mut fact = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                fact *= k as f64;
            }
            t.push(ea / fact);
        }
        self.compose(&t)
    }

    fn sin(self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let mut t = Vec::new();
        let mut fact = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                fact *= k as f64;
            }
            t.push(cycle[k % 4] / fact);
        }
        self.compose(&t)
    }

    fn cos(self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let mut t = Vec::new();
        let mut fact = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                fact *= k as f64;
            }
            t.push(cycle[k % 4] / fact);
        }
        self.compose(&t)
    }

    fn recip(self) -> Self {
        let a = self.value();
        let t: Vec<f64> = (0..=self.order())
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign / a.powi(k as i32 + 1)
            })
            .collect();
        self.compose(&t)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        self.zip_with(&rhs, |a, b| a + b)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self.zip_with(&rhs, |a, b| a - b)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.mul_ref(&rhs)
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        self.mul_ref(&rhs.recip())
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.coeffs[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(mut self, rhs: f64) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c /= rhs);
        self
    }
}

/// Solves `A z = b` for jet-valued entries by Gaussian elimination with
/// partial pivoting on the expansion-point values.
pub fn solve_jet_system(mut a: Vec<Vec<Jet>>, mut b: Vec<Jet>) -> Option<Vec<Jet>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .value()
                .abs()
                .total_cmp(&a[j][col].value().abs())
        })?;
        if a[pivot][col].value().abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].clone().recip();
        for row in col + 1..n {
            let factor = a[row][col].clone() * inv.clone();
            for k in col..n {
                let t = factor.clone() * a[col][k].clone();
                a[row][k] = a[row][k].clone() - t;
            }
            let t = factor * b[col].clone();
            b[row] = b[row].clone() - t;
        }
    }
    let mut z: Vec<Option<Jet>> = vec![None; n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for (k, zk) in z.iter().enumerate().skip(row + 1) {
            let zk = zk.as_ref().expect("back substitution order");
            acc = acc - a[row][k].clone() * zk.clone();
        }
        z[row] = Some(acc / a[row][row].clone());
    }
    Some(z.into_iter().map(|v| v.expect("solved")).collect())
}
