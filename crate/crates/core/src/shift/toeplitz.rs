use std::ops::Mul;

use crate::rational::Q;

/// An upper-triangular Toeplitz `k × k` matrix, `M[i][j] = λ_{j-i}` for
/// `j ≥ i` and zero below the diagonal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToeplitzMatrix {
    lambdas: Vec<Q>,
}

impl ToeplitzMatrix {
    pub fn new(lambdas: Vec<Q>) -> Self {
        assert!(!lambdas.is_empty(), "order must be at least 1");
        ToeplitzMatrix { lambdas }
    }

    pub fn identity(k: usize) -> Self {
        let mut l = vec![Q::zero(); k];
        l[0] = Q::one();
        Self::new(l)
    }

    /// The nilpotent Jordan block `J`: ones on the superdiagonal.
    pub fn jordan(k: usize) -> Self {
        let mut l = vec![Q::zero(); k];
        if k > 1 {
            l[1] = Q::one();
        }
        Self::new(l)
    }

    pub fn order(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[Q] {
        &self.lambdas
    }

    pub fn entry(&self, i: usize, j: usize) -> Q {
        if j >= i {
            self.lambdas[j - i].clone()
        } else {
            Q::zero()
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<Q>> {
        let k = self.order();
        (0..k).map(|i| (0..k).map(|j| self.entry(i, j)).collect()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.lambdas.iter().all(Q::is_zero)
    }

    pub fn pow(&self, e: usize) -> Self {
        (0..e).fold(Self::identity(self.order()), |acc, _| &acc * self)
    }
}

/// Dense matrix product; the result is checked to stay Toeplitz.
impl Mul for &ToeplitzMatrix {
    type Output = ToeplitzMatrix;

    fn mul(self, rhs: &ToeplitzMatrix) -> ToeplitzMatrix {
        let k = self.order();
        assert_eq!(k, rhs.order(), "order mismatch");
        let a = self.to_dense();
        let b = rhs.to_dense();
        let c: Vec<Vec<Q>> =
            (0..k).map(|i| (0..k).map(|j| (0..k).map(|t| &a[i][t] * &b[t][j]).sum()).collect()).collect();
        let out = ToeplitzMatrix::new(c[0].clone());
        debug_assert_eq!(out.to_dense(), c);
        out
    }
}

/// `λ ⋆ μ`: polynomial product truncated mod `x^k`.
pub fn truncated_product(a: &[Q], b: &[Q]) -> Vec<Q> {
    let k = a.len().min(b.len());
    (0..k).map(|n| (0..=n).map(|i| &a[i] * &b[n - i]).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: &[i64]) -> Vec<Q> {
        v.iter().map(|&x| Q::from_int(x)).collect()
    }

    #[test]
    fn identity_and_jordan() {
        let i = ToeplitzMatrix::new(q(&[1, 0, 0]));
        assert_eq!(i, ToeplitzMatrix::identity(3));
        let j = ToeplitzMatrix::new(q(&[0, 1, 0]));
        assert_eq!(j.to_dense()[0][1], Q::one());
        assert_eq!(j.to_dense()[1][2], Q::one());
        assert!(!j.pow(2).is_zero());
        assert!(j.pow(3).is_zero());
    }

    #[test]
    fn multiplicative() {
        let a = q(&[2, -1, 3, 1]);
        let b = q(&[1, 4, 0, -2]);
        let lhs = &ToeplitzMatrix::new(a.clone()) * &ToeplitzMatrix::new(b.clone());
        assert_eq!(lhs, ToeplitzMatrix::new(truncated_product(&a, &b)));
    }
}
