//! Dense polynomials over Q, coefficients stored lowest degree first.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::rational::{binom, Q};

pub type Poly = Vec<Q>;

pub fn trim(p: &mut Poly) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

pub fn degree(p: &Poly) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

pub fn add(a: &Poly, b: &Poly) -> Poly {
    let n = a.len().max(b.len());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = a.get(i).cloned().unwrap_or_else(Q::zero);
        let y = b.get(i).cloned().unwrap_or_else(Q::zero);
        out.push(x + y);
    }
    trim(&mut out);
    out
}

pub fn scale(a: &Poly, c: &Q) -> Poly {
    if c.is_zero() {
        return Vec::new();
    }
    a.iter().map(|x| x * c).collect()
}

pub fn mul(a: &Poly, b: &Poly) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Q::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(&mut out);
    out
}

pub fn eval(p: &Poly, x: &Q) -> Q {
    let mut acc = Q::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// `(x + s)^n`.
pub fn linear_power(s: &Q, n: usize) -> Poly {
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        // coefficient of x^k is C(n,k) s^(n-k)
        out.push(binom(n as i64, k) * num_traits::pow(s.clone(), n - k));
    }
    trim(&mut out);
    out
}

/// `p(a x + b)`.
pub fn compose_affine(p: &Poly, a: &Q, b: &Q) -> Poly {
    let mut out: Poly = Vec::new();
    let lin = vec![b.clone(), a.clone()];
    let mut power: Poly = vec![Q::one()];
    for c in p.iter() {
        out = add(&out, &scale(&power, c));
        power = mul(&power, &lin);
    }
    out
}

/// Sum of absolute values of the coefficients of degree `< below`.
pub fn abs_sum_below(p: &Poly, below: usize) -> Q {
    p.iter().take(below).map(|c| c.abs()).fold(Q::zero(), |a, b| a + b)
}

pub fn abs_sum(p: &Poly) -> Q {
    abs_sum_below(p, p.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn compose_and_powers() {
        // (x+1)^2 = 1 + 2x + x^2
        assert_eq!(linear_power(&qi(1), 2), vec![qi(1), qi(2), qi(1)]);
        // p(x) = x^2, p(2x - 1) = 4x^2 - 4x + 1
        let p = vec![qi(0), qi(0), qi(1)];
        assert_eq!(compose_affine(&p, &qi(2), &qi(-1)), vec![qi(1), qi(-4), qi(4)]);
        assert_eq!(eval(&p, &q(1, 2)), q(1, 4));
        assert_eq!(degree(&vec![qi(1), qi(0)]), Some(0));
    }
}
