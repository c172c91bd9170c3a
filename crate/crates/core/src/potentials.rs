//! Potentials: natural-coefficient polynomials paired with a size, and the
//! three resource monoids built on them.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

/// Dense coefficients, constant term first, never with trailing zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<u64>", into = "Vec<u64>")]
pub struct Polynomial(Vec<u64>);

impl From<Vec<u64>> for Polynomial {
    fn from(v: Vec<u64>) -> Self {
        Polynomial::new(v)
    }
}

impl From<Polynomial> for Vec<u64> {
    fn from(p: Polynomial) -> Self {
        p.0
    }
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<u64>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Polynomial(coeffs)
    }

    pub fn zero() -> Self {
        Polynomial(Vec::new())
    }

    pub fn constant(k: u64) -> Self {
        Polynomial::new(vec![k])
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    /// Horner evaluation, saturating at `u128::MAX`.
    pub fn eval(&self, x: u128) -> u128 {
        self.0
            .iter()
            .rev()
            .fold(0u128, |acc, &c| acc.saturating_mul(x).saturating_add(c as u128))
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.0.len().max(other.0.len());
        let get = |p: &Polynomial, i: usize| p.0.get(i).copied().unwrap_or(0);
        Polynomial::new((0..n).map(|i| get(self, i).saturating_add(get(other, i))).collect())
    }

    pub fn scale(&self, k: u64) -> Polynomial {
        Polynomial::new(self.0.iter().map(|c| c.saturating_mul(k)).collect())
    }

    /// Multiplies by the indeterminate.
    pub fn shift_up(&self) -> Polynomial {
        if self.is_zero() {
            return Polynomial::zero();
        }
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(0);
        v.extend_from_slice(&self.0);
        Polynomial(v)
    }

    /// Coefficients of `p(x + m)`, or `None` on overflow.
    fn taylor_shift(&self, m: u64) -> Option<Vec<i128>> {
        let mut c: Vec<i128> = self.0.iter().map(|&v| v as i128).collect();
        let m = m as i128;
        // Repeated synthetic division by (x - m).
        let n = c.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                c[j] = c[j].checked_add(c[j + 1].checked_mul(m)?)?;
            }
        }
        Some(c)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::add(self, rhs)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.0.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (i, c) {
                (0, _) => write!(f, "{}", c)?,
                (1, 1) => write!(f, "x")?,
                (1, _) => write!(f, "{}x", c)?,
                (_, 1) => write!(f, "x^{}", i)?,
                _ => write!(f, "{}x^{}", c, i)?,
            }
        }
        Ok(())
    }
}

pub fn poly_eval(p: &Polynomial, x: u64) -> u128 {
    p.eval(x as u128)
}

pub fn poly_add(p: &Polynomial, q: &Polynomial) -> Polynomial {
    p.add(q)
}

pub fn poly_scale(k: u64, p: &Polynomial) -> Polynomial {
    p.scale(k)
}

pub fn poly_shift_up(p: &Polynomial) -> Polynomial {
    p.shift_up()
}

/// Sufficient test for `p(k) >= q(k)` for every `k >= m`: all coefficients
/// of `p(x + m) - q(x + m)` are non-negative. Overflow answers `false`.
pub fn dominates_from(p: &Polynomial, q: &Polynomial, m: u64) -> bool {
    let (Some(ps), Some(qs)) = (p.taylor_shift(m), q.taylor_shift(m)) else {
        return false;
    };
    let n = ps.len().max(qs.len());
    (0..n).all(|i| {
        let a = ps.get(i).copied().unwrap_or(0);
        let b = qs.get(i).copied().unwrap_or(0);
        a >= b
    })
}

/// Naturals extended with negative infinity. `NegInf` sorts below every `Fin`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExtNat {
    NegInf,
    Fin(u128),
}

impl ExtNat {
    pub fn is_fin(self) -> bool {
        matches!(self, ExtNat::Fin(_))
    }

    pub fn fin(self) -> Option<u128> {
        match self {
            ExtNat::Fin(k) => Some(k),
            ExtNat::NegInf => None,
        }
    }
}

impl Add for ExtNat {
    type Output = ExtNat;
    fn add(self, rhs: ExtNat) -> ExtNat {
        match (self, rhs) {
            (ExtNat::Fin(a), ExtNat::Fin(b)) => ExtNat::Fin(a.saturating_add(b)),
            _ => ExtNat::NegInf,
        }
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Fin(k) => write!(f, "{}", k),
            ExtNat::NegInf => write!(f, "-inf"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Potential {
    pub size: u64,
    pub poly: Polynomial,
}

impl Potential {
    pub fn new(size: u64, poly: Polynomial) -> Self {
        Potential { size, poly }
    }

    pub fn empty() -> Self {
        Potential::default()
    }

    /// Potential of an iterable datum of size `n`.
    pub fn size(n: u64) -> Self {
        Potential { size: n, poly: Polynomial::zero() }
    }

    /// Raises the polynomial degree by one, keeping the size.
    pub fn raise(&self) -> Self {
        Potential { size: self.size, poly: self.poly.shift_up() }
    }

    /// Multiplies the polynomial part by `m`, keeping the size.
    pub fn scale(&self, m: u64) -> Self {
        Potential { size: self.size, poly: self.poly.scale(m) }
    }

    /// Membership in the zero-size sub-monoid.
    pub fn in_submonoid(&self) -> bool {
        self.size == 0
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.size, self.poly)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MonoidKind {
    /// Sizes alone, composed by addition.
    Nat,
    MaxPoly,
    PlusPoly,
}

impl MonoidKind {
    fn check_nat(self, a: &Potential) {
        if self == MonoidKind::Nat {
            assert!(a.poly.is_zero(), "natural-number potential with a polynomial part: {}", a);
        }
    }

    pub fn plus(self, a: &Potential, b: &Potential) -> Potential {
        self.check_nat(a);
        self.check_nat(b);
        let size = match self {
            MonoidKind::MaxPoly => a.size.max(b.size),
            MonoidKind::PlusPoly | MonoidKind::Nat => a.size.saturating_add(b.size),
        };
        Potential { size, poly: a.poly.add(&b.poly) }
    }

    pub fn sum<'a, I: IntoIterator<Item = &'a Potential>>(self, items: I) -> Potential {
        items.into_iter().fold(Potential::empty(), |acc, p| self.plus(&acc, p))
    }

    pub fn diff(self, a: &Potential, b: &Potential) -> ExtNat {
        self.check_nat(a);
        self.check_nat(b);
        if a.size < b.size {
            return ExtNat::NegInf;
        }
        match self {
            MonoidKind::Nat => ExtNat::Fin((a.size - b.size) as u128),
            MonoidKind::MaxPoly | MonoidKind::PlusPoly => {
                if !dominates_from(&a.poly, &b.poly, a.size) {
                    return ExtNat::NegInf;
                }
                let m = a.size as u128;
                match a.poly.eval(m).cmp(&b.poly.eval(m)) {
                    Ordering::Less => ExtNat::NegInf,
                    _ => ExtNat::Fin(a.poly.eval(m) - b.poly.eval(m)),
                }
            }
        }
    }

    pub fn acct(self, k: u64) -> Potential {
        match self {
            MonoidKind::Nat => Potential::size(k),
            _ => Potential { size: 0, poly: Polynomial::constant(k) },
        }
    }

    /// `n`-fold sum of `a`.
    pub fn n_action(self, n: u64, a: &Potential) -> Potential {
        self.check_nat(a);
        if n == 0 {
            return Potential::empty();
        }
        let size = match self {
            MonoidKind::MaxPoly => a.size,
            _ => a.size.saturating_mul(n),
        };
        Potential { size, poly: a.poly.scale(n) }
    }

    pub fn name(self) -> &'static str {
        match self {
            MonoidKind::Nat => "nat",
            MonoidKind::MaxPoly => "maxpoly",
            MonoidKind::PlusPoly => "pluspoly",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly(v: &[u64]) -> Polynomial {
        Polynomial::new(v.to_vec())
    }

    fn pot(size: u64, v: &[u64]) -> Potential {
        Potential::new(size, poly(v))
    }

    #[test]
    fn canonical_form_strips_trailing_zeros() {
        assert_eq!(poly(&[1, 0, 0]).coeffs(), &[1]);
        assert!(poly(&[0, 0]).is_zero());
        assert_eq!(poly(&[0, 0, 1]).degree(), Some(2));
        assert_eq!(Polynomial::zero().degree(), None);
    }

    #[test]
    fn eval_examples() {
        assert_eq!(poly_eval(&poly(&[1, 2]), 3), 7);
        assert_eq!(poly_eval(&poly(&[]), 5), 0);
        assert_eq!(poly_eval(&poly(&[0, 0, 1]), 4), 16);
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(poly_add(&poly(&[1]), &poly(&[0, 1])), poly(&[1, 1]));
        assert_eq!(poly_shift_up(&poly(&[1, 1])), poly(&[0, 1, 1]));
        assert_eq!(poly_scale(3, &poly(&[2, 1])), poly(&[6, 3]));
        assert_eq!(poly_scale(0, &poly(&[2, 1])), Polynomial::zero());
        assert_eq!(poly_shift_up(&Polynomial::zero()), Polynomial::zero());
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates_from(&poly(&[0, 1]), &poly(&[1]), 1));
        for k in 1..=100u64 {
            assert!(poly_eval(&poly(&[0, 1]), k) >= 1);
        }
        assert!(!dominates_from(&poly(&[1]), &poly(&[0, 1]), 0));
        assert!(dominates_from(&poly(&[3, 0, 2]), &poly(&[3, 0, 2]), 0));
        // x^2 >= 4x from 4 on, although not coefficientwise.
        assert!(dominates_from(&poly(&[0, 0, 1]), &poly(&[0, 4]), 4));
        assert!(!dominates_from(&poly(&[0, 0, 1]), &poly(&[0, 4]), 3));
    }

    #[test]
    fn dominance_overflow_is_conservative() {
        let big = poly(&[u64::MAX, u64::MAX, u64::MAX, u64::MAX, u64::MAX]);
        assert!(!dominates_from(&big, &Polynomial::zero(), u64::MAX));
    }

    #[test]
    fn plus_examples() {
        let a = pot(2, &[1]);
        let b = pot(3, &[0, 1]);
        assert_eq!(MonoidKind::MaxPoly.plus(&a, &b), pot(3, &[1, 1]));
        assert_eq!(MonoidKind::PlusPoly.plus(&a, &b), pot(5, &[1, 1]));
        for k in [MonoidKind::MaxPoly, MonoidKind::PlusPoly] {
            assert_eq!(k.plus(&a, &Potential::empty()), a);
        }
        assert_eq!(MonoidKind::Nat.plus(&pot(2, &[]), &pot(5, &[])), pot(7, &[]));
    }

    #[test]
    #[should_panic]
    fn nat_monoid_rejects_polynomial_part() {
        MonoidKind::Nat.plus(&pot(1, &[1]), &Potential::empty());
    }

    #[test]
    fn diff_examples() {
        assert_eq!(MonoidKind::MaxPoly.diff(&pot(3, &[1, 2]), &Potential::empty()), ExtNat::Fin(7));
        assert_eq!(MonoidKind::MaxPoly.diff(&pot(1, &[1]), &pot(2, &[1])), ExtNat::NegInf);
        assert_eq!(MonoidKind::Nat.diff(&pot(5, &[]), &pot(3, &[])), ExtNat::Fin(2));
        assert_eq!(MonoidKind::Nat.diff(&pot(3, &[]), &pot(5, &[])), ExtNat::NegInf);
    }

    #[test]
    fn acct_examples() {
        assert_eq!(MonoidKind::MaxPoly.acct(4), pot(0, &[4]));
        assert_eq!(MonoidKind::Nat.acct(7), pot(7, &[]));
        assert_eq!(MonoidKind::PlusPoly.acct(0), Potential::empty());
    }

    #[test]
    fn iteration_operation_examples() {
        assert_eq!(Potential::size(3), pot(3, &[]));
        assert_eq!(pot(0, &[4]).raise(), pot(0, &[0, 4]));
        assert_eq!(pot(0, &[3, 1]).scale(2), pot(0, &[6, 2]));
    }

    #[test]
    fn submonoid_examples() {
        assert!(pot(0, &[5, 2]).in_submonoid());
        assert!(!pot(1, &[]).in_submonoid());
        for k in 0..100 {
            assert!(MonoidKind::MaxPoly.acct(k).in_submonoid());
            assert!(MonoidKind::PlusPoly.acct(k).in_submonoid());
        }
    }

    #[test]
    fn n_action_examples() {
        assert_eq!(MonoidKind::PlusPoly.n_action(3, &pot(1, &[1])), pot(3, &[3]));
        assert_eq!(MonoidKind::MaxPoly.n_action(3, &pot(1, &[1])), pot(1, &[3]));
        for k in [MonoidKind::MaxPoly, MonoidKind::PlusPoly] {
            assert_eq!(k.n_action(0, &pot(4, &[2, 2])), Potential::empty());
        }
    }

    #[test]
    fn display_and_json() {
        assert_eq!(poly(&[2, 0, 3]).to_string(), "2 + 3x^2");
        assert_eq!(poly(&[0, 1]).to_string(), "x");
        assert_eq!(Polynomial::zero().to_string(), "0");
    }

    fn arb_poly() -> impl Strategy<Value = Polynomial> {
        proptest::collection::vec(0u64..=16, 0..=5).prop_map(Polynomial::new)
    }

    fn arb_pot(kind: MonoidKind) -> BoxedStrategy<Potential> {
        match kind {
            MonoidKind::Nat => (0u64..64).prop_map(Potential::size).boxed(),
            _ => (0u64..32, arb_poly()).prop_map(|(s, p)| Potential::new(s, p)).boxed(),
        }
    }

    fn arb_kind() -> impl Strategy<Value = MonoidKind> {
        prop_oneof![Just(MonoidKind::Nat), Just(MonoidKind::MaxPoly), Just(MonoidKind::PlusPoly)]
    }

    fn arb_poly_kind() -> impl Strategy<Value = MonoidKind> {
        prop_oneof![Just(MonoidKind::MaxPoly), Just(MonoidKind::PlusPoly)]
    }

    fn three(kind: MonoidKind) -> impl Strategy<Value = (MonoidKind, Potential, Potential, Potential)> {
        (Just(kind), arb_pot(kind), arb_pot(kind), arb_pot(kind))
    }

    fn any_three() -> impl Strategy<Value = (MonoidKind, Potential, Potential, Potential)> {
        arb_kind().prop_flat_map(three)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn canonical_ops(p in arb_poly(), q in arb_poly(), k in 0u64..8) {
            for r in [p.add(&q), p.scale(k), p.shift_up()] {
                prop_assert!(r.coeffs().last() != Some(&0));
            }
            for x in 0u64..6 {
                prop_assert_eq!(poly_eval(&p.add(&q), x), poly_eval(&p, x) + poly_eval(&q, x));
                prop_assert_eq!(poly_eval(&p.scale(k), x), k as u128 * poly_eval(&p, x));
                prop_assert_eq!(poly_eval(&p.shift_up(), x), x as u128 * poly_eval(&p, x));
            }
        }

        #[test]
        fn dominance_is_sound(p in arb_poly(), q in arb_poly(), m in 0u64..40) {
            if dominates_from(&p, &q, m) {
                for k in m..=m + 200 {
                    prop_assert!(poly_eval(&p, k) >= poly_eval(&q, k));
                }
            }
        }

        #[test]
        fn identity_law((kind, a, _b, _c) in any_three()) {
            prop_assert_eq!(kind.diff(&a, &a), ExtNat::Fin(0));
        }

        #[test]
        fn reverse_triangle((kind, a, b, c) in any_three()) {
            prop_assert!(kind.diff(&a, &b) + kind.diff(&b, &c) <= kind.diff(&a, &c));
        }

        #[test]
        fn plus_compatible((kind, a, b, c) in any_three()) {
            prop_assert!(kind.diff(&a, &b) <= kind.diff(&kind.plus(&a, &c), &kind.plus(&b, &c)));
        }

        #[test]
        fn diff_to_empty_is_finite((kind, a, _b, _c) in any_three()) {
            prop_assert!(kind.diff(&a, &Potential::empty()) >= ExtNat::Fin(0));
        }

        #[test]
        fn acct_law(kind in arb_kind(), k in 0u64..=1000) {
            prop_assert!(ExtNat::Fin(k as u128) <= kind.diff(&kind.acct(k), &Potential::empty()));
        }

        #[test]
        fn commutative_monoid((kind, a, b, c) in any_three()) {
            prop_assert_eq!(kind.plus(&a, &b), kind.plus(&b, &a));
            prop_assert_eq!(kind.plus(&kind.plus(&a, &b), &c), kind.plus(&a, &kind.plus(&b, &c)));
            prop_assert_eq!(kind.plus(&a, &Potential::empty()), a.clone());
        }

        #[test]
        fn n_action_is_repeated_sum((kind, a, _b, _c) in any_three(), n in 0u64..8) {
            let folded = (0..n).fold(Potential::empty(), |acc, _| kind.plus(&acc, &a));
            prop_assert_eq!(kind.n_action(n, &a), folded);
        }

        #[test]
        fn raise_preserves_submonoid(kind in arb_poly_kind(), p in arb_poly()) {
            let a = Potential::new(0, p);
            prop_assert!(a.raise().in_submonoid());
            prop_assert!(kind.plus(&a, &kind.acct(3)).in_submonoid());
        }

        #[test]
        fn raise_dominates_scale(kind in arb_poly_kind(), a in arb_pot(MonoidKind::MaxPoly), n in 0u64..=32) {
            let lhs = kind.plus(&a.raise(), &Potential::size(n));
            let rhs = kind.plus(&a.scale(n), &Potential::size(n));
            prop_assert!(kind.diff(&lhs, &rhs) >= ExtNat::Fin(0));
        }

        #[test]
        fn scale_decomposes(kind in arb_poly_kind(), p in arb_poly(), n in 0u64..=32) {
            let a = Potential::new(0, p);
            let lhs = a.scale(1 + n);
            let rhs = kind.plus(&a, &a.scale(n));
            prop_assert!(kind.diff(&lhs, &rhs) >= ExtNat::Fin(0));
        }
    }
}
