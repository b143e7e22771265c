//! Weight sequences of simply generated tree families.
//!
//! A family is given by nonnegative weights `w_k` (with `w_0 = 1`); a plane
//! tree `t` has weight `prod_j w_j^{N_j(t)}` where `N_j(t)` counts vertices
//! with `j` children, and `Phi(t) = sum_k w_k t^k`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::tree::TreeShape;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyKind {
    /// `w_k = 1` for all `k`.
    Plane,
    /// `w_k = 1/k!` (labelled trees).
    Cayley,
    /// `w_0 = w_d = 1`, all others zero.
    Dary(usize),
    /// Finitely supported rational weights.
    Custom,
}

/// How `Phi` acts on power series; selects the composition algorithm.
#[derive(Debug, Clone, Copy)]
pub enum PhiShape<'a> {
    /// `1 / (1 - t)`
    Geometric,
    /// `exp(t)`
    Exponential,
    /// `sum_k coeffs[k] t^k`
    Polynomial(&'a [BigRational]),
}

/// An immutable weight family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightFamily {
    kind: FamilyKind,
    /// Dense weights `w_0..=w_D` for finitely supported families.
    poly: Vec<BigRational>,
}

#[derive(Deserialize)]
struct CustomFile {
    weights: Vec<(usize, String)>,
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

impl WeightFamily {
    pub fn plane() -> Self {
        WeightFamily {
            kind: FamilyKind::Plane,
            poly: Vec::new(),
        }
    }

    pub fn cayley() -> Self {
        WeightFamily {
            kind: FamilyKind::Cayley,
            poly: Vec::new(),
        }
    }

    pub fn binary() -> Self {
        Self::dary(2).expect("d = 2 is valid")
    }

    pub fn dary(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidFamily(format!(
                "d-ary family needs d >= 2, got {d}"
            )));
        }
        let mut poly = vec![BigRational::zero(); d + 1];
        poly[0] = BigRational::one();
        poly[d] = BigRational::one();
        Ok(WeightFamily {
            kind: FamilyKind::Dary(d),
            poly,
        })
    }

    /// Finitely supported family from `(index, weight)` pairs.
    pub fn custom(pairs: Vec<(usize, BigRational)>) -> Result<Self> {
        let max = pairs
            .iter()
            .map(|(k, _)| *k)
            .max()
            .ok_or_else(|| Error::InvalidFamily("no weights given".into()))?;
        let mut poly: Vec<Option<BigRational>> = vec![None; max + 1];
        for (k, w) in pairs {
            if w.is_negative() {
                return Err(Error::InvalidFamily(format!("negative weight w_{k} = {w}")));
            }
            if poly[k].replace(w).is_some() {
                return Err(Error::InvalidFamily(format!("duplicate weight index {k}")));
            }
        }
        let mut poly: Vec<BigRational> = poly
            .into_iter()
            .map(|w| w.unwrap_or_else(BigRational::zero))
            .collect();
        if !poly[0].is_one() {
            return Err(Error::InvalidFamily("w_0 must be 1".into()));
        }
        while poly.last().is_some_and(Zero::is_zero) {
            poly.pop();
        }
        if !poly.iter().skip(2).any(|w| !w.is_zero()) {
            return Err(Error::InvalidFamily(
                "need some k > 1 with w_k > 0".into(),
            ));
        }
        Ok(WeightFamily {
            kind: FamilyKind::Custom,
            poly,
        })
    }

    /// Parse the custom-family file format `{"weights": [[k, "p/q"], ...]}`.
    pub fn from_json_str(json: &str) -> Result<Self> {
        let file: CustomFile = serde_json::from_str(json)?;
        if !file.weights.iter().any(|(k, _)| *k == 0) {
            return Err(Error::InvalidFamily("weights must include [0, \"1\"]".into()));
        }
        let pairs = file
            .weights
            .into_iter()
            .map(|(k, s)| Ok((k, parse_rational(&s)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::custom(pairs)
    }

    /// Builtin family by name: `plane`, `cayley`, `binary`, or `dary:<d>`.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "plane" => Ok(Self::plane()),
            "cayley" | "labelled" | "labeled" => Ok(Self::cayley()),
            "binary" => Ok(Self::binary()),
            _ => match name.strip_prefix("dary:") {
                Some(d) => Self::dary(
                    d.parse()
                        .map_err(|_| Error::InvalidFamily(format!("bad arity in {name:?}")))?,
                ),
                None => Err(Error::InvalidFamily(format!("unknown family {name:?}"))),
            },
        }
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn phi_shape(&self) -> PhiShape<'_> {
        match self.kind {
            FamilyKind::Plane => PhiShape::Geometric,
            FamilyKind::Cayley => PhiShape::Exponential,
            FamilyKind::Dary(_) | FamilyKind::Custom => PhiShape::Polynomial(&self.poly),
        }
    }

    /// `w_k` exactly; zero beyond the support of a finite family.
    pub fn phi_coefficient(&self, k: usize) -> BigRational {
        match self.kind {
            FamilyKind::Plane => BigRational::one(),
            FamilyKind::Cayley => {
                let fact = (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i));
                BigRational::new(BigInt::one(), fact)
            }
            FamilyKind::Dary(_) | FamilyKind::Custom => {
                self.poly.get(k).cloned().unwrap_or_else(BigRational::zero)
            }
        }
    }

    /// Largest `k` with `w_k > 0`; `None` for infinite support.
    pub fn max_degree(&self) -> Option<usize> {
        match self.kind {
            FamilyKind::Plane | FamilyKind::Cayley => None,
            FamilyKind::Dary(_) | FamilyKind::Custom => Some(self.poly.len() - 1),
        }
    }

    /// Radius of convergence of `Phi`; `f64::INFINITY` for entire `Phi`.
    pub fn radius(&self) -> f64 {
        match self.kind {
            FamilyKind::Plane => 1.0,
            _ => f64::INFINITY,
        }
    }

    /// gcd of `{k >= 1 : w_k > 0}`.
    pub fn period(&self) -> usize {
        match self.kind {
            FamilyKind::Plane | FamilyKind::Cayley => 1,
            FamilyKind::Dary(d) => d,
            FamilyKind::Custom => self
                .poly
                .iter()
                .enumerate()
                .skip(1)
                .filter(|(_, w)| !w.is_zero())
                .fold(0, |g, (k, _)| g.gcd(&k)),
        }
    }

    /// Whether sizes `n` can carry positive total weight modulo the period.
    pub fn size_matches_period(&self, n: usize) -> bool {
        n >= 1 && (n - 1) % self.period() == 0
    }

    /// `Phi^{(order)}(t)` for `0 <= t < R` and `order <= 3`.
    pub fn phi_eval(&self, t: f64, order: usize) -> Result<f64> {
        if order > 3 {
            return Err(Error::InvalidArgument(format!(
                "derivative order {order} not supported"
            )));
        }
        if t.is_nan() || t < 0.0 || t >= self.radius() {
            return Err(Error::Domain(format!(
                "t = {t} outside [0, {}) for {self}",
                self.radius()
            )));
        }
        Ok(match self.kind {
            FamilyKind::Plane => {
                let fact = [1.0, 1.0, 2.0, 6.0][order];
                fact / (1.0 - t).powi(order as i32 + 1)
            }
            FamilyKind::Cayley => t.exp(),
            FamilyKind::Dary(_) | FamilyKind::Custom => {
                // Horner on the order-th derivative's coefficients
                let mut acc = 0.0;
                for k in (order..self.poly.len()).rev() {
                    let falling: f64 = (0..order).map(|i| (k - i) as f64).product();
                    acc = acc * t + falling * rational_to_f64(&self.poly[k]);
                }
                acc
            }
        })
    }

    /// `w(t) = prod_j w_j^{N_j(t)}`.
    pub fn tree_weight(&self, t: &TreeShape) -> BigRational {
        let mut weight = BigRational::one();
        for (j, &count) in t.degree_counts().iter().enumerate() {
            if count == 0 {
                continue;
            }
            let w = self.phi_coefficient(j);
            if w.is_zero() {
                return w;
            }
            weight *= num_traits::pow(w, count);
        }
        weight
    }
}

impl fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FamilyKind::Plane => f.write_str("plane"),
            FamilyKind::Cayley => f.write_str("cayley"),
            FamilyKind::Dary(2) => f.write_str("binary"),
            FamilyKind::Dary(d) => write!(f, "dary:{d}"),
            FamilyKind::Custom => f.write_str("custom"),
        }
    }
}

pub fn tree_weight(f: &WeightFamily, t: &TreeShape) -> BigRational {
    f.tree_weight(t)
}

pub fn phi_coefficient(f: &WeightFamily, k: usize) -> BigRational {
    f.phi_coefficient(k)
}

pub fn phi_eval(f: &WeightFamily, t: f64, order: usize) -> Result<f64> {
    f.phi_eval(t, order)
}

pub fn period(f: &WeightFamily) -> usize {
    f.period()
}

/// Nearest `f64` to a rational, robust to numerators and denominators far
/// outside the `f64` range.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    let (m, e) = rational_to_scaled(q);
    let e = e.clamp(-4000, 4000) as i32;
    m * 2f64.powi(e / 2) * 2f64.powi(e - e / 2)
}

/// `q = m * 2^e` with `0.5 <= |m| < 1` (to double precision). Works for any
/// magnitude; used for log-scale arithmetic on huge counts.
pub fn rational_to_scaled(q: &BigRational) -> (f64, i64) {
    if q.is_zero() {
        return (0.0, 0);
    }
    let num = q.numer();
    let den = q.denom();
    // keep 64 significant bits of each part
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    let ns = (nb - 64).max(0);
    let ds = (db - 64).max(0);
    let n_top: f64 = to_f64_int(&(num.abs() >> ns as usize));
    let d_top: f64 = to_f64_int(&(den >> ds as usize));
    let mut m = n_top / d_top;
    let mut e = ns - ds;
    // normalise m into [0.5, 1)
    let (fm, fe) = frexp(m);
    m = fm;
    e += fe;
    if num.is_negative() {
        m = -m;
    }
    (m, e)
}

/// Natural logarithm of a positive rational of any size.
pub fn ln_rational(q: &BigRational) -> f64 {
    let (m, e) = rational_to_scaled(q);
    m.ln() + e as f64 * std::f64::consts::LN_2
}

fn to_f64_int(x: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().expect("value fits in 64 bits")
}

fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let e = x.abs().log2().floor() as i64 + 1;
    let mut m = x / 2f64.powi(e as i32);
    let mut e = e;
    // guard against log2 rounding at exact powers of two
    if m.abs() >= 1.0 {
        m /= 2.0;
        e += 1;
    } else if m.abs() < 0.5 {
        m *= 2.0;
        e -= 1;
    }
    (m, e)
}
