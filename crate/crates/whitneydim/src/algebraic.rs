//! Exact arithmetic in the real field `Q(2^{1/q})`.
//!
//! Set constructions with contraction ratios of the form `2^{-p/q}` produce
//! coordinates that are polynomials in `θ = 2^{1/q}` with rational
//! coefficients. Since `θ^q − 2` is irreducible over `Q` (Eisenstein at 2),
//! the powers `1, θ, …, θ^{q−1}` form a basis: representation by coefficient
//! vectors is canonical, equality is coefficient equality, and a nonzero
//! element has a determinable sign via interval refinement of `θ`.

use num::{BigInt, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{rat, rat_to_f64, Rat};

/// Element of `Q(2^{1/q})`: the value `Σ coeffs[i] · 2^{i/q}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootExpr {
    q: u32,
    coeffs: Vec<Rat>,
}

impl RootExpr {
    pub fn zero(q: u32) -> Self {
        assert!(q >= 1, "root order must be at least 1");
        RootExpr { q, coeffs: vec![Rat::zero(); q as usize] }
    }

    pub fn from_rat(q: u32, r: Rat) -> Self {
        let mut x = RootExpr::zero(q);
        x.coeffs[0] = r;
        x
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    /// Exact `2^e` for a rational exponent whose denominator divides `q`.
    pub fn pow2(q: u32, e: &Rat) -> Result<Self> {
        let qi = BigInt::from(q);
        let scaled = e.numer() * &qi;
        if (&scaled % e.denom()) != BigInt::zero() {
            return Err(Error::InvalidParams(format!(
                "exponent {e} is not a multiple of 1/{q}"
            )));
        }
        let k: BigInt = scaled / e.denom(); // value = 2^{k/q}
        let (div, rem) = num::integer::div_mod_floor(k, qi);
        let rem: u32 = rem.try_into().expect("floor remainder is nonnegative");
        let mut x = RootExpr::zero(q);
        x.coeffs[rem as usize] = pow2_int(&div);
        Ok(x)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Rat::is_zero)
    }

    pub fn add(&self, other: &RootExpr) -> RootExpr {
        assert_eq!(self.q, other.q, "mixed root orders");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        RootExpr { q: self.q, coeffs }
    }

    pub fn sub(&self, other: &RootExpr) -> RootExpr {
        assert_eq!(self.q, other.q, "mixed root orders");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        RootExpr { q: self.q, coeffs }
    }

    pub fn neg(&self) -> RootExpr {
        RootExpr {
            q: self.q,
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }

    /// Product, reduced by `θ^q = 2`.
    pub fn mul(&self, other: &RootExpr) -> RootExpr {
        assert_eq!(self.q, other.q, "mixed root orders");
        let q = self.q as usize;
        let mut out = vec![Rat::zero(); q];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let prod = a * b;
                let k = i + j;
                if k < q {
                    out[k] += prod;
                } else {
                    out[k - q] += prod * rat(2, 1);
                }
            }
        }
        RootExpr { q: self.q, coeffs: out }
    }

    pub fn scale(&self, r: &Rat) -> RootExpr {
        RootExpr {
            q: self.q,
            coeffs: self.coeffs.iter().map(|a| a * r).collect(),
        }
    }

    pub fn powi(&self, n: u32) -> RootExpr {
        let mut acc = RootExpr::from_rat(self.q, Rat::one());
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        acc
    }

    /// Sign of the value: −1, 0, or +1, decided exactly.
    pub fn sign(&self) -> i32 {
        if self.is_zero() {
            return 0;
        }
        if self.q == 1 {
            return if self.coeffs[0].is_positive() { 1 } else { -1 };
        }
        // Refine a rational bracket of θ = 2^{1/q} until the interval value
        // of the polynomial excludes zero. A nonzero coefficient vector is a
        // nonzero value (basis property), so this terminates.
        let (mut lo, mut hi) = (rat(1, 1), rat(2, 1));
        for _ in 0..256 {
            let (vlo, vhi) = self.interval_value(&lo, &hi);
            if vlo.is_positive() {
                return 1;
            }
            if vhi.is_negative() {
                return -1;
            }
            let mid = (&lo + &hi) / rat(2, 1);
            let mut p = Rat::one();
            for _ in 0..self.q {
                p *= &mid;
            }
            if p < rat(2, 1) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        unreachable!("sign refinement did not converge");
    }

    pub fn is_positive(&self) -> bool {
        self.sign() > 0
    }

    pub fn cmp_val(&self, other: &RootExpr) -> std::cmp::Ordering {
        match self.sub(other).sign() {
            s if s < 0 => std::cmp::Ordering::Less,
            0 => std::cmp::Ordering::Equal,
            _ => std::cmp::Ordering::Greater,
        }
    }

    /// Interval evaluation for `θ ∈ [lo, hi]`, `0 < lo ≤ hi`.
    fn interval_value(&self, lo: &Rat, hi: &Rat) -> (Rat, Rat) {
        let mut plo = Rat::one();
        let mut phi = Rat::one();
        let mut vlo = Rat::zero();
        let mut vhi = Rat::zero();
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                plo *= lo;
                phi *= hi;
            }
            if c.is_positive() {
                vlo += c * &plo;
                vhi += c * &phi;
            } else if c.is_negative() {
                vlo += c * &phi;
                vhi += c * &plo;
            }
        }
        (vlo, vhi)
    }

    /// Rational bracket `[lo, hi]` of the value with `hi − lo ≤ eps`.
    pub fn bracket(&self, eps: &Rat) -> (Rat, Rat) {
        assert!(eps.is_positive());
        if self.q == 1 {
            return (self.coeffs[0].clone(), self.coeffs[0].clone());
        }
        let (mut lo, mut hi) = (rat(1, 1), rat(2, 1));
        loop {
            let (vlo, vhi) = self.interval_value(&lo, &hi);
            if &vhi - &vlo <= *eps {
                return (vlo, vhi);
            }
            let mid = (&lo + &hi) / rat(2, 1);
            let mut p = Rat::one();
            for _ in 0..self.q {
                p *= &mid;
            }
            if p < rat(2, 1) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        let theta = (2.0f64).powf(1.0 / self.q as f64);
        let mut p = 1.0;
        let mut v = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                p *= theta;
            }
            v += rat_to_f64(c) * p;
        }
        v
    }

    /// Nearest rational with the given denominator; error ≤ 1/(2·denom).
    pub fn round_to_denom(&self, denom: u64) -> Rat {
        let eps = Rat::new(BigInt::one(), BigInt::from(4u64) * BigInt::from(denom));
        let (lo, hi) = self.bracket(&eps);
        let mid = (&lo + &hi) / rat(2, 1);
        let scaled = mid * rat(denom as i64, 1);
        let rounded = (scaled + rat(1, 2)).floor();
        Rat::new(rounded.numer().clone(), BigInt::from(denom))
    }
}

/// `2^k` for a (possibly negative) integer exponent, as a rational.
fn pow2_int(k: &BigInt) -> Rat {
    let mag: u32 = k.abs().try_into().expect("exponent magnitude fits u32");
    let p = BigInt::from(2u32).pow(mag);
    if k.is_negative() {
        Rat::new(BigInt::one(), p)
    } else {
        Rat::new(p, BigInt::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow2_half_squares_to_two() {
        let r = RootExpr::pow2(2, &rat(1, 2)).unwrap();
        assert_eq!(r.mul(&r), RootExpr::from_rat(2, rat(2, 1)));
    }

    #[test]
    fn pow2_splits_integer_and_root_parts() {
        // 2^{3/2} = 2·θ and 2^{-3/2} = θ/4 in the basis {1, θ}.
        let a = RootExpr::pow2(2, &rat(3, 2)).unwrap();
        assert_eq!(a.coeffs, vec![rat(0, 1), rat(2, 1)]);
        let b = RootExpr::pow2(2, &rat(-3, 2)).unwrap();
        assert_eq!(b.coeffs, vec![rat(0, 1), rat(1, 4)]);
        assert_eq!(a.mul(&b), RootExpr::from_rat(2, rat(1, 1)));
        assert!(RootExpr::pow2(2, &rat(1, 3)).is_err());
    }

    #[test]
    fn signs_are_exact() {
        // 2^{3/2} − 2 > 0 and 2^{3/2} − 3 < 0 (value ≈ 2.8284).
        let a = RootExpr::pow2(2, &rat(3, 2)).unwrap();
        assert_eq!(a.sub(&RootExpr::from_rat(2, rat(2, 1))).sign(), 1);
        assert_eq!(a.sub(&RootExpr::from_rat(2, rat(3, 1))).sign(), -1);
        assert_eq!(a.sub(&a).sign(), 0);
        // 3 − 2·2^{1/2} > 0 but tiny (≈ 0.1716): needs refinement.
        let t = RootExpr::pow2(2, &rat(1, 2)).unwrap();
        let x = RootExpr::from_rat(2, rat(3, 1)).sub(&t.scale(&rat(2, 1)));
        assert_eq!(x.sign(), 1);
        // 577/408 − 2^{1/2} > 0 (continued-fraction convergent, ≈ 1.5e-6).
        let y = RootExpr::from_rat(2, rat(577, 408)).sub(&t);
        assert_eq!(y.sign(), 1);
    }

    #[test]
    fn float_and_rounded_views() {
        let lam = RootExpr::pow2(2, &rat(-3, 2)).unwrap();
        assert!((lam.to_f64() - 0.35355339059327373).abs() < 1e-15);
        let r = lam.round_to_denom(1 << 20);
        let err = rat_to_f64(&r) - lam.to_f64();
        assert!(err.abs() <= 1.0 / (2.0 * (1u64 << 20) as f64));
        // Rational elements round exactly when representable.
        let half = RootExpr::from_rat(2, rat(1, 2));
        assert_eq!(half.round_to_denom(8), rat(1, 2));
    }

    #[test]
    fn power_and_comparison_helpers() {
        let t = RootExpr::pow2(2, &rat(1, 2)).unwrap();
        assert_eq!(t.powi(4), RootExpr::from_rat(2, rat(4, 1)));
        assert_eq!(t.powi(0), RootExpr::from_rat(2, rat(1, 1)));
        let a = RootExpr::pow2(2, &rat(-1, 2)).unwrap(); // ≈ 0.7071
        let b = RootExpr::from_rat(2, rat(7, 10)); // 0.7
        assert_eq!(a.cmp_val(&b), std::cmp::Ordering::Greater);
    }
}
