//! Exact truncated power series and the tree generating functions.
//!
//! Coefficients are exact rationals ([`TruncSeries`]) or polynomials in a
//! second variable `u` with rational coefficients ([`BivarTruncSeries`]).
//! Nothing in this module touches floating point.
//!
//! The fixed points `F = x Phi(F)` and `A_r = x Phi(A_r) + (1 - 1/u) F_r(xu)`
//! are solved online: the `n`-th coefficient of the solution only depends on
//! `[x^{n-1}] Phi(A)`, which in turn only depends on `A_1..A_{n-1}`, so each
//! coefficient is produced exactly once. This yields the same truncated series
//! as `n + 1` passes of `G <- x Phi(G) + H` starting from `G = 0` (see
//! [`fixed_point_pass`], kept as the reference route).

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::enumeration::{Distribution, Provenance};
use crate::error::{Error, Result};
use crate::weights::{PhiShape, WeightFamily};

/// Coefficient ring of a truncated series.
pub trait Coefficient: Clone + PartialEq + fmt::Debug {
    fn zero_coeff() -> Self;
    fn is_zero_coeff(&self) -> bool;
    fn from_rational(q: BigRational) -> Self;
    fn add_assign_ref(&mut self, other: &Self);
    fn sub_assign_ref(&mut self, other: &Self);
    fn mul_ref(&self, other: &Self) -> Self;
    fn scale(&self, q: &BigRational) -> Self;

    /// `sum_i xs[i] * ys[i]`.
    fn dot<'a, I>(pairs: I) -> Self
    where
        I: Iterator<Item = (&'a Self, &'a Self)>,
        Self: 'a,
    {
        let mut acc = Self::zero_coeff();
        for (x, y) in pairs {
            if !x.is_zero_coeff() && !y.is_zero_coeff() {
                acc.add_assign_ref(&x.mul_ref(y));
            }
        }
        acc
    }
}

impl Coefficient for BigRational {
    fn zero_coeff() -> Self {
        Zero::zero()
    }
    fn is_zero_coeff(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_rational(q: BigRational) -> Self {
        q
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign_ref(&mut self, other: &Self) {
        *self -= other;
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, q: &BigRational) -> Self {
        self * q
    }

    fn dot<'a, I>(pairs: I) -> Self
    where
        I: Iterator<Item = (&'a Self, &'a Self)>,
    {
        // Accumulate over a running common denominator so that the inner loop
        // is integer multiply-add; a single reduction happens at the end.
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        for (x, y) in pairs {
            if Zero::is_zero(x) || Zero::is_zero(y) {
                continue;
            }
            let pn = x.numer() * y.numer();
            let pd = x.denom() * y.denom();
            if pd == den {
                num += pn;
            } else if pd.is_one() {
                num += pn * &den;
            } else {
                num = num * &pd + pn * &den;
                den *= pd;
            }
        }
        BigRational::new(num, den)
    }
}

/// Polynomial in `u` with exact rational coefficients, lowest degree first,
/// without trailing zeros.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct UPoly(Vec<BigRational>);

impl UPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        UPoly(coeffs)
    }

    /// `c * u^m`.
    pub fn monomial(c: BigRational, m: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); m + 1];
        coeffs[m] = c;
        UPoly::new(coeffs)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.0
    }

    pub fn coeff(&self, m: usize) -> BigRational {
        self.0.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    /// Value at `u = 1`.
    pub fn at_one(&self) -> BigRational {
        self.0.iter().fold(BigRational::zero(), |acc, c| acc + c)
    }
}

impl fmt::Debug for UPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        let terms: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, c)| !Zero::is_zero(*c))
            .map(|(m, c)| format!("{c}*u^{m}"))
            .collect();
        f.write_str(&terms.join(" + "))
    }
}

impl Coefficient for UPoly {
    fn zero_coeff() -> Self {
        UPoly(Vec::new())
    }
    fn is_zero_coeff(&self) -> bool {
        self.0.is_empty()
    }
    fn from_rational(q: BigRational) -> Self {
        UPoly::new(vec![q])
    }
    fn add_assign_ref(&mut self, other: &Self) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), BigRational::zero());
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
        let trimmed = std::mem::take(&mut self.0);
        *self = UPoly::new(trimmed);
    }
    fn sub_assign_ref(&mut self, other: &Self) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), BigRational::zero());
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a -= b;
        }
        let trimmed = std::mem::take(&mut self.0);
        *self = UPoly::new(trimmed);
    }
    fn mul_ref(&self, other: &Self) -> Self {
        if self.0.is_empty() || other.0.is_empty() {
            return UPoly::zero_coeff();
        }
        let len = self.0.len() + other.0.len() - 1;
        let coeffs = (0..len)
            .map(|m| {
                let lo = m.saturating_sub(other.0.len() - 1);
                let hi = m.min(self.0.len() - 1);
                BigRational::dot((lo..=hi).map(|i| (&self.0[i], &other.0[m - i])))
            })
            .collect();
        UPoly::new(coeffs)
    }
    fn scale(&self, q: &BigRational) -> Self {
        UPoly::new(self.0.iter().map(|c| c * q).collect())
    }
}

/// Power series truncated after `x^order`.
#[derive(Clone, PartialEq)]
pub struct Series<C> {
    coeffs: Vec<C>,
}

/// Univariate series with exact rational coefficients.
pub type TruncSeries = Series<BigRational>;
/// Series in `x` whose coefficients are polynomials in `u`.
pub type BivarTruncSeries = Series<UPoly>;

impl<C: Coefficient> Series<C> {
    pub fn zero(order: usize) -> Self {
        Series {
            coeffs: vec![C::zero_coeff(); order + 1],
        }
    }

    /// Series from explicit coefficients; `order = coeffs.len() - 1`.
    pub fn from_coeffs(coeffs: Vec<C>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least one coefficient");
        Series { coeffs }
    }

    /// The series `x`.
    pub fn x(order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = C::from_rational(BigRational::one());
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    /// `[x^n]`, zero beyond the truncation order.
    pub fn coeff(&self, n: usize) -> C {
        self.coeffs.get(n).cloned().unwrap_or_else(C::zero_coeff)
    }

    pub fn truncate(&self, order: usize) -> Self {
        assert!(order <= self.order(), "cannot extend a truncated series");
        Series {
            coeffs: self.coeffs[..=order].to_vec(),
        }
    }

    /// Lowest index with a nonzero coefficient, `None` for the zero series.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero_coeff())
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        Series {
            coeffs: self.coeffs.iter().map(|c| c.scale(q)).collect(),
        }
    }

    /// Multiply by `x`; the order grows by one.
    pub fn shift_up(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(C::zero_coeff());
        coeffs.extend(self.coeffs.iter().cloned());
        Series { coeffs }
    }

    /// Divide by `x`; requires a zero constant term. The order drops by one.
    pub fn shift_down(&self) -> Self {
        assert!(self.coeffs[0].is_zero_coeff(), "series has a constant term");
        assert!(self.order() >= 1, "order-0 series cannot be divided by x");
        Series {
            coeffs: self.coeffs[1..].to_vec(),
        }
    }

    /// Truncated product; the result has the smaller of the two orders.
    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let coeffs = (0..=order)
            .map(|n| C::dot((0..=n).map(|k| (&self.coeffs[k], &other.coeffs[n - k]))))
            .collect();
        Series { coeffs }
    }

    /// `Phi(self)` for a series without constant term.
    pub fn compose_phi(&self, shape: PhiShape<'_>) -> Self {
        let mut composer = PhiComposer::<C>::new(shape);
        for c in &self.coeffs[1..] {
            composer.push(c.clone());
        }
        composer.into_series()
    }
}

impl TruncSeries {
    /// Formal termwise derivative; the order drops by one.
    pub fn derivative(&self) -> Self {
        if self.order() == 0 {
            return Series::zero(0);
        }
        let coeffs = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(k, c)| c * BigRational::from_integer(BigInt::from(k + 1)))
            .collect();
        Series { coeffs }
    }

    /// `self / den` for `den` with nonzero constant term.
    pub fn div(&self, den: &Self) -> Self {
        let d0 = &den.coeffs[0];
        assert!(!Zero::is_zero(d0), "division by a series with zero constant term");
        let d0_inv = d0.recip();
        let order = self.order().min(den.order());
        let mut q: Vec<BigRational> = Vec::with_capacity(order + 1);
        for n in 0..=order {
            let s = BigRational::dot((1..=n).map(|k| (&den.coeffs[k], &q[n - k])));
            q.push((&self.coeffs[n] - s) * &d0_inv);
        }
        Series { coeffs: q }
    }

    /// `self / den` where both have valuation at least one and `den` has
    /// valuation exactly one; the order drops by one.
    pub fn div_valuation_one(&self, den: &Self) -> Self {
        assert_eq!(den.valuation(), Some(1), "denominator must have valuation 1");
        self.shift_down().div(&den.shift_down())
    }

    /// Value of the truncated polynomial at `x`.
    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    /// Floating-point value of the truncated polynomial at `x`.
    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + crate::weights::rational_to_f64(c))
    }
}

impl BivarTruncSeries {
    /// Specialise `u = 1`.
    pub fn at_u_one(&self) -> TruncSeries {
        Series {
            coeffs: self.coeffs.iter().map(UPoly::at_one).collect(),
        }
    }
}

impl<C: Coefficient> Add for &Series<C> {
    type Output = Series<C>;
    fn add(self, other: &Series<C>) -> Series<C> {
        let order = self.order().min(other.order());
        let coeffs = (0..=order)
            .map(|n| {
                let mut c = self.coeffs[n].clone();
                c.add_assign_ref(&other.coeffs[n]);
                c
            })
            .collect();
        Series { coeffs }
    }
}

impl<C: Coefficient> Sub for &Series<C> {
    type Output = Series<C>;
    fn sub(self, other: &Series<C>) -> Series<C> {
        let order = self.order().min(other.order());
        let coeffs = (0..=order)
            .map(|n| {
                let mut c = self.coeffs[n].clone();
                c.sub_assign_ref(&other.coeffs[n]);
                c
            })
            .collect();
        Series { coeffs }
    }
}

impl<C: Coefficient> Mul for &Series<C> {
    type Output = Series<C>;
    fn mul(self, other: &Series<C>) -> Series<C> {
        Series::mul(self, other)
    }
}

impl<C: Coefficient> fmt::Debug for Series<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.coeffs).finish()
    }
}

/// Online evaluation of `P = Phi(A)` for `A` with `A_0 = 0`.
///
/// After `A_1..A_m` have been pushed, `P_0..P_m` are available.
pub struct PhiComposer<'a, C> {
    shape: PhiShape<'a>,
    a: Vec<C>,
    p: Vec<C>,
    /// `powers[j - 1]` holds the coefficients of `A^j` (polynomial `Phi` only).
    powers: Vec<Vec<C>>,
}

impl<'a, C: Coefficient> PhiComposer<'a, C> {
    pub fn new(shape: PhiShape<'a>) -> Self {
        let p0 = match shape {
            PhiShape::Geometric | PhiShape::Exponential => BigRational::one(),
            PhiShape::Polynomial(w) => w[0].clone(),
        };
        let degree = match shape {
            PhiShape::Polynomial(w) => w.len() - 1,
            _ => 0,
        };
        PhiComposer {
            shape,
            a: vec![C::zero_coeff()],
            p: vec![C::from_rational(p0)],
            powers: vec![vec![C::zero_coeff()]; degree],
        }
    }

    /// Coefficients of `Phi(A)` computed so far.
    pub fn phi_coeffs(&self) -> &[C] {
        &self.p
    }

    /// Append the next coefficient `A_m` and compute `P_m`.
    pub fn push(&mut self, a_m: C) {
        self.a.push(a_m);
        let m = self.a.len() - 1;
        let a = &self.a;
        let p = &self.p;
        let p_m = match self.shape {
            PhiShape::Geometric => C::dot((1..=m).map(|k| (&a[k], &p[m - k]))),
            PhiShape::Exponential => {
                // m P_m = sum_k k A_k P_{m-k}, from P' = A' P
                let mut acc = C::zero_coeff();
                for k in 1..=m {
                    if a[k].is_zero_coeff() || p[m - k].is_zero_coeff() {
                        continue;
                    }
                    let kq = BigRational::from_integer(BigInt::from(k));
                    acc.add_assign_ref(&a[k].mul_ref(&p[m - k]).scale(&kq));
                }
                acc.scale(&BigRational::new(BigInt::one(), BigInt::from(m)))
            }
            PhiShape::Polynomial(w) => {
                let degree = self.powers.len();
                let mut acc = C::zero_coeff();
                for j in 1..=degree {
                    let c = if j == 1 {
                        a[m].clone()
                    } else if m < j {
                        C::zero_coeff()
                    } else {
                        let prev = &self.powers[j - 2];
                        // A^{j-1} has valuation >= j-1
                        C::dot((1..=m + 1 - j).map(|k| (&a[k], &prev[m - k])))
                    };
                    if !w[j].is_zero() && !c.is_zero_coeff() {
                        acc.add_assign_ref(&c.scale(&w[j]));
                    }
                    self.powers[j - 1].push(c);
                }
                acc
            }
        };
        self.p.push(p_m);
    }

    pub fn into_series(self) -> Series<C> {
        Series { coeffs: self.p }
    }
}

/// Solve `A = x Phi(A) + H` online up to `x^order`, with `H_0 = 0`.
fn solve_fixed_point<C, H>(shape: PhiShape<'_>, order: usize, inhomogeneous: H) -> Series<C>
where
    C: Coefficient,
    H: Fn(usize) -> C,
{
    let mut composer = PhiComposer::<C>::new(shape);
    let mut coeffs = vec![C::zero_coeff()];
    for n in 1..=order {
        let mut a_n = composer.phi_coeffs()[n - 1].clone();
        a_n.add_assign_ref(&inhomogeneous(n));
        coeffs.push(a_n.clone());
        if n < order {
            composer.push(a_n);
        }
    }
    Series { coeffs }
}

/// `F(x)`: the weight generating function of all trees, `F = x Phi(F)`.
pub fn compute_f(f: &WeightFamily, order: usize) -> TruncSeries {
    solve_fixed_point(f.phi_shape(), order, |_| BigRational::zero())
}

/// `F_r(x)`: weight generating function of trees with height `< r`.
pub fn compute_fr(f: &WeightFamily, r: usize, order: usize) -> TruncSeries {
    assert!(r >= 1, "F_r needs r >= 1");
    let mut fr = TruncSeries::x(order);
    for _ in 1..r {
        if order == 0 {
            break;
        }
        fr = fr.truncate(order - 1).compose_phi(f.phi_shape()).shift_up();
    }
    fr
}

/// `A_r(x, u)`: bivariate generating function of `a_r`, from
/// `A_r = x Phi(A_r) + (1 - 1/u) F_r(xu)`.
pub fn compute_ar(f: &WeightFamily, r: usize, order: usize) -> BivarTruncSeries {
    let fr = compute_fr(f, r, order);
    // (1 - 1/u) f_{r,n} (xu)^n = f_{r,n} x^n (u^n - u^{n-1})
    let inhom = |n: usize| {
        let c = fr.coeff(n);
        let mut coeffs = vec![BigRational::zero(); n + 1];
        coeffs[n - 1] = -c.clone();
        coeffs[n] = c;
        UPoly::new(coeffs)
    };
    solve_fixed_point(f.phi_shape(), order, inhom)
}

/// `Phi(g)` by Horner's rule over `w_order, ..., w_0`. Only `w_k` with
/// `k <= order` can contribute because `g` has positive valuation.
pub fn horner_compose(f: &WeightFamily, g: &TruncSeries) -> TruncSeries {
    assert!(Zero::is_zero(&g.coeffs[0]), "inner series must have valuation >= 1");
    let order = g.order();
    let mut acc = TruncSeries::zero(order);
    for k in (0..=order).rev() {
        acc = acc.mul(g);
        acc.coeffs[0] += f.phi_coefficient(k);
    }
    acc
}

/// One pass `G <- x Phi(G)` of the plain fixed-point iteration, computed with
/// [`horner_compose`]. The result keeps the order of `g`.
pub fn fixed_point_pass(f: &WeightFamily, g: &TruncSeries) -> TruncSeries {
    let order = g.order();
    if order == 0 {
        return TruncSeries::zero(0);
    }
    horner_compose(f, &g.truncate(order - 1)).shift_up()
}

fn check_size(f: &WeightFamily, n: usize, fn_coeff: &BigRational) -> Result<()> {
    if n == 0 || Zero::is_zero(fn_coeff) {
        return Err(Error::InvalidSize {
            n,
            period: f.period(),
        });
    }
    Ok(())
}

/// Exact law of `a_r` on random trees of size `n`:
/// `P(a_r = m) = [x^n u^m] A_r / [x^n] F`.
pub fn exact_distribution(f: &WeightFamily, r: usize, n: usize) -> Result<Distribution> {
    if r == 0 {
        return Err(Error::InvalidArgument("r must be >= 1".into()));
    }
    if n == 0 || !f.size_matches_period(n) {
        return Err(Error::InvalidSize {
            n,
            period: f.period(),
        });
    }
    let total = compute_f(f, n).coeff(n);
    check_size(f, n, &total)?;
    let row = compute_ar(f, r, n).coeff(n);
    debug_assert_eq!(row.at_one(), total);
    let probs = row
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| !Zero::is_zero(*c))
        .map(|(m, c)| (m, c / &total))
        .collect();
    Ok(Distribution::new(n, probs, Provenance::Series))
}

/// Mean and variance of `a_r` at a fixed size, as exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactMoments {
    pub mean: BigRational,
    pub variance: BigRational,
}

/// Numerators of the first two factorial moments of `a_r`, valid for every
/// size up to the truncation order.
///
/// With `Q = F_r / F`:
/// - `d/du A_r |_{u=1} = x F' Q`
/// - `d²/du² A_r |_{u=1} = (2Q² - 2Q + 2x F_r'/F) x F' + x² F'' Q² - 2 x² F_r² F'² / F³`
#[derive(Debug, Clone)]
pub struct MomentSeries {
    r: usize,
    f: TruncSeries,
    first: TruncSeries,
    second: TruncSeries,
}

impl MomentSeries {
    pub fn new(family: &WeightFamily, r: usize, order: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidArgument("r must be >= 1".into()));
        }
        // every division by F costs one order
        let k = order + 1;
        let f = compute_f(family, k);
        let fr = compute_fr(family, r, k);
        let xf1 = f.derivative().shift_up(); // x F'
        let x2f2 = f.derivative().derivative().shift_up().shift_up(); // x² F''
        let q = fr.div_valuation_one(&f); // F_r / F
        let xfr1_over_f = fr.derivative().div(&f.shift_down()); // x F_r' / F
        let xf1_over_f = f.derivative().div(&f.shift_down()); // x F' / F
        let first = xf1.mul(&q);

        let q2 = q.mul(&q);
        let two = BigRational::from_integer(BigInt::from(2));
        let bracket = &(&q2 - &q) + &xfr1_over_f;
        let second = &(&bracket.scale(&two).mul(&xf1) + &x2f2.mul(&q2))
            - &q2.mul(&xf1).mul(&xf1_over_f).scale(&two);
        Ok(MomentSeries {
            r,
            f: f.truncate(order),
            first: first.truncate(order),
            second: second.truncate(order),
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn order(&self) -> usize {
        self.f.order()
    }

    pub fn f(&self) -> &TruncSeries {
        &self.f
    }

    /// `[x^n] d/du A_r|_{u=1}` (unnormalised first moment).
    pub fn first_numerator(&self) -> &TruncSeries {
        &self.first
    }

    /// `[x^n] d²/du² A_r|_{u=1}` (unnormalised second factorial moment).
    pub fn second_numerator(&self) -> &TruncSeries {
        &self.second
    }

    pub fn moments(&self, family: &WeightFamily, n: usize) -> Result<ExactMoments> {
        if n > self.order() {
            return Err(Error::TruncationTooShort {
                n,
                order: self.order(),
            });
        }
        let total = self.f.coeff(n);
        check_size(family, n, &total)?;
        let mean = self.first.coeff(n) / &total;
        let falling2 = self.second.coeff(n) / &total;
        // V = E X(X-1) + E X - (E X)²
        let variance = &falling2 + &mean - &mean * &mean;
        Ok(ExactMoments { mean, variance })
    }
}

/// Exact mean and variance of `a_r` at size `n`, from univariate series
/// truncated at `order >= n`.
pub fn exact_moments(f: &WeightFamily, r: usize, n: usize, order: usize) -> Result<ExactMoments> {
    if n > order {
        return Err(Error::TruncationTooShort { n, order });
    }
    if n == 0 || !f.size_matches_period(n) {
        return Err(Error::InvalidSize {
            n,
            period: f.period(),
        });
    }
    MomentSeries::new(f, r, order)?.moments(f, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::parse_rational;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    fn qs(v: &[&str]) -> Vec<BigRational> {
        v.iter().map(|s| q(s)).collect()
    }

    fn families() -> Vec<WeightFamily> {
        vec![
            WeightFamily::plane(),
            WeightFamily::cayley(),
            WeightFamily::binary(),
            WeightFamily::dary(3).unwrap(),
            WeightFamily::custom(vec![(0, q("1")), (1, q("1/2")), (3, q("2/3"))]).unwrap(),
        ]
    }

    #[test]
    fn f_for_builtin_families() {
        assert_eq!(
            compute_f(&WeightFamily::plane(), 5).coeffs(),
            qs(&["0", "1", "1", "2", "5", "14"]).as_slice()
        );
        assert_eq!(
            compute_f(&WeightFamily::cayley(), 4).coeffs(),
            qs(&["0", "1", "1", "3/2", "8/3"]).as_slice()
        );
        assert_eq!(
            compute_f(&WeightFamily::binary(), 5).coeffs(),
            qs(&["0", "1", "0", "1", "0", "2"]).as_slice()
        );
    }

    #[test]
    fn cayley_coefficients_are_n_pow_n_minus_1_over_factorial() {
        let f = compute_f(&WeightFamily::cayley(), 15);
        let mut fact = BigInt::one();
        for n in 1..=15usize {
            fact *= BigInt::from(n);
            let expected = BigRational::new(num_traits::pow(BigInt::from(n), n - 1), fact.clone());
            assert_eq!(f.coeff(n), expected, "n = {n}");
        }
    }

    #[test]
    fn fr_small_cases() {
        for fam in families() {
            assert_eq!(compute_fr(&fam, 1, 3).coeffs(), qs(&["0", "1", "0", "0"]).as_slice());
        }
        assert_eq!(
            compute_fr(&WeightFamily::plane(), 2, 4).coeffs(),
            qs(&["0", "1", "1", "1", "1"]).as_slice()
        );
        assert_eq!(
            compute_fr(&WeightFamily::binary(), 2, 5).coeffs(),
            qs(&["0", "1", "0", "1", "0", "0"]).as_slice()
        );
    }

    #[test]
    fn fr_is_monotone_in_r_and_bounded_by_f() {
        for fam in families() {
            let f = compute_f(&fam, 12);
            let mut prev = compute_fr(&fam, 1, 12);
            for r in 2..=14 {
                let cur = compute_fr(&fam, r, 12);
                for n in 0..=12 {
                    assert!(prev.coeff(n) <= cur.coeff(n));
                    assert!(cur.coeff(n) <= f.coeff(n));
                }
                prev = cur;
            }
            // trees with n vertices have height <= n - 1
            assert_eq!(prev, f);
        }
    }

    #[test]
    fn composer_matches_horner() {
        for fam in families() {
            let g = compute_f(&fam, 10);
            assert_eq!(g.compose_phi(fam.phi_shape()), horner_compose(&fam, &g), "{fam}");
            let h = compute_fr(&fam, 3, 10);
            assert_eq!(h.compose_phi(fam.phi_shape()), horner_compose(&fam, &h), "{fam}");
        }
    }

    #[test]
    fn fixed_point_passes_converge_one_coefficient_at_a_time() {
        for fam in families() {
            let order = 9;
            let target = compute_f(&fam, order);
            let mut g = TruncSeries::zero(order);
            for k in 0..=order {
                let next = fixed_point_pass(&fam, &g);
                // after pass k, coefficients up to x^k are final
                for i in 0..=k {
                    assert_eq!(g.coeff(i), next.coeff(i), "{fam}: pass {k}, coeff {i}");
                }
                g = next;
            }
            assert_eq!(g, target, "{fam}");
        }
    }

    #[test]
    fn ar_plane_r1_is_narayana() {
        let a = compute_ar(&WeightFamily::plane(), 1, 4);
        assert_eq!(a.coeff(4), UPoly::new(qs(&["0", "1", "3", "1"])));
    }

    #[test]
    fn ar_specialises_to_f() {
        for fam in families() {
            for r in 1..=4 {
                let a = compute_ar(&fam, r, 12);
                assert_eq!(a.at_u_one(), compute_f(&fam, 12), "{fam}, r = {r}");
                for n in 0..=12 {
                    let row = a.coeff(n);
                    assert!(row.degree().is_none_or(|d| d <= n));
                    assert!(row.coeffs().iter().all(|c| *c >= BigRational::zero()));
                }
            }
        }
    }

    #[test]
    fn ar_small_trees_are_fully_removed() {
        let fam = WeightFamily::cayley();
        let r = 5;
        let a = compute_ar(&fam, r, 8);
        let f = compute_f(&fam, 8);
        for n in 1..=r {
            assert_eq!(a.coeff(n), UPoly::monomial(f.coeff(n), n));
        }
    }

    #[test]
    fn series_division() {
        let one_minus_x = TruncSeries::from_coeffs(qs(&["1", "-1", "0", "0"]));
        let one = TruncSeries::from_coeffs(qs(&["1", "0", "0", "0"]));
        assert_eq!(one.div(&one_minus_x).coeffs(), qs(&["1", "1", "1", "1"]).as_slice());
        let f = compute_f(&WeightFamily::plane(), 6);
        let ratio = f.div_valuation_one(&f);
        assert_eq!(ratio.coeffs(), qs(&["1", "0", "0", "0", "0", "0"]).as_slice());
    }

    #[test]
    fn exact_distribution_examples() {
        let d = exact_distribution(&WeightFamily::plane(), 1, 4).unwrap();
        assert_eq!(d.probability(1), q("1/5"));
        assert_eq!(d.probability(2), q("3/5"));
        assert_eq!(d.probability(3), q("1/5"));
        assert_eq!(d.support(), vec![1, 2, 3]);

        for r in 4..7 {
            let d = exact_distribution(&WeightFamily::plane(), r, 4).unwrap();
            assert_eq!(d.support(), vec![4]);
        }

        let d = exact_distribution(&WeightFamily::binary(), 1, 5).unwrap();
        assert_eq!(d.support(), vec![3]);
        assert_eq!(d.probability(3), q("1"));
    }

    #[test]
    fn invalid_sizes() {
        assert!(matches!(
            exact_distribution(&WeightFamily::binary(), 1, 4),
            Err(Error::InvalidSize { .. })
        ));
        assert!(matches!(
            exact_moments(&WeightFamily::binary(), 1, 6, 10),
            Err(Error::InvalidSize { .. })
        ));
        assert!(matches!(
            exact_moments(&WeightFamily::plane(), 1, 11, 10),
            Err(Error::TruncationTooShort { .. })
        ));
        assert!(exact_distribution(&WeightFamily::plane(), 0, 3).is_err());
    }

    #[test]
    fn exact_moments_examples() {
        let m = exact_moments(&WeightFamily::plane(), 1, 4, 4).unwrap();
        assert_eq!(m.mean, q("2"));
        assert_eq!(m.variance, q("2/5"));
        let ms = MomentSeries::new(&WeightFamily::binary(), 1, 41).unwrap();
        for n in (1..=41).step_by(2) {
            let m = ms.moments(&WeightFamily::binary(), n).unwrap();
            assert_eq!(m.variance, q("0"), "n = {n}");
            assert_eq!(m.mean, BigRational::from_integer(BigInt::from((n + 1) / 2)));
        }
    }

    #[test]
    fn plane_leaf_mean_is_half_the_size() {
        let fam = WeightFamily::plane();
        let ms = MomentSeries::new(&fam, 1, 200).unwrap();
        for n in 2..=200 {
            let m = ms.moments(&fam, n).unwrap();
            assert_eq!(m.mean, BigRational::new(BigInt::from(n), BigInt::from(2)), "n = {n}");
        }
    }

    #[test]
    fn moments_agree_with_distribution() {
        for fam in families() {
            for r in 1..=3 {
                let ms = MomentSeries::new(&fam, r, 11).unwrap();
                for n in 1..=11 {
                    let Ok(d) = exact_distribution(&fam, r, n) else {
                        assert!(ms.moments(&fam, n).is_err());
                        continue;
                    };
                    let m = ms.moments(&fam, n).unwrap();
                    assert_eq!(m.mean, d.mean(), "{fam} r={r} n={n}");
                    assert_eq!(m.variance, d.variance(), "{fam} r={r} n={n}");
                }
            }
        }
    }
}
