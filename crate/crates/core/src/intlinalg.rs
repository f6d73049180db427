//! Exact integer matrices: Smith and Hermite normal forms, kernels, cokernels
//! and Diophantine solving.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;

use crate::abgrp::FinAbPresentation;

/// Dense row-major matrix of arbitrary precision integers.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntMatrix{:?}", self.to_rows())
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    /// Builds a matrix from rows. `cols` is needed so that zero-row matrices keep a shape.
    pub fn from_rows(rows: &[Vec<BigInt>], cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged row");
            data.extend(r.iter().cloned());
        }
        IntMatrix { rows: rows.len(), cols, data }
    }

    pub fn from_i64_rows(rows: &[Vec<i64>], cols: usize) -> Self {
        let big: Vec<Vec<BigInt>> =
            rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
        Self::from_rows(&big, cols)
    }

    /// Matrix whose columns are the given vectors, each of length `rows`.
    pub fn from_cols(cols: &[Vec<BigInt>], rows: usize) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows, "ragged column");
            for (i, x) in c.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        m
    }

    pub fn diagonal(entries: &[BigInt]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, e) in entries.iter().enumerate() {
            m.set(i, i, e.clone());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<BigInt> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn to_cols(&self) -> Vec<Vec<BigInt>> {
        (0..self.cols).map(|j| self.col(j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * out.cols + j;
                    out.data[idx] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len(), "shape mismatch in matrix-vector product");
        (0..self.rows)
            .map(|i| {
                let mut acc = BigInt::zero();
                for (j, x) in v.iter().enumerate() {
                    acc += self.get(i, j) * x;
                }
                acc
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// Columns `idx` in the given order.
    pub fn select_cols(&self, idx: &[usize]) -> IntMatrix {
        let cols: Vec<Vec<BigInt>> = idx.iter().map(|&j| self.col(j)).collect();
        Self::from_cols(&cols, self.rows)
    }

    pub fn select_rows(&self, idx: &[usize]) -> IntMatrix {
        let rows: Vec<Vec<BigInt>> = idx.iter().map(|&i| self.row(i)).collect();
        Self::from_rows(&rows, self.cols)
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.rows, other.rows);
        let mut cols = self.to_cols();
        cols.extend(other.to_cols());
        Self::from_cols(&cols, self.rows)
    }

    /// Vertical concatenation.
    pub fn vcat(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.cols);
        let mut rows = self.to_rows();
        rows.extend(other.to_rows());
        Self::from_rows(&rows, self.cols)
    }

    /// Block diagonal `diag(self, other)`.
    pub fn block_diag(&self, other: &IntMatrix) -> IntMatrix {
        let mut m = Self::zeros(self.rows + other.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(i, j, self.get(i, j).clone());
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                m.set(self.rows + i, self.cols + j, other.get(i, j).clone());
            }
        }
        m
    }

    pub fn scale(&self, k: &BigInt) -> IntMatrix {
        IntMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * k).collect() }
    }

    pub fn neg(&self) -> IntMatrix {
        self.scale(&BigInt::from(-1))
    }

    /// Determinant by fraction-free Bareiss elimination.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.to_rows();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(i, k);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = v / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        sign * a[n - 1][n - 1].clone()
    }

    /// Adjugate of a square matrix, so that `A·adj(A) = det(A)·I`.
    pub fn adjugate(&self) -> IntMatrix {
        let n = self.rows;
        assert_eq!(n, self.cols);
        let mut adj = Self::zeros(n, n);
        if n == 1 {
            adj.set(0, 0, BigInt::one());
            return adj;
        }
        for i in 0..n {
            for j in 0..n {
                let keep_r: Vec<usize> = (0..n).filter(|&r| r != j).collect();
                let keep_c: Vec<usize> = (0..n).filter(|&c| c != i).collect();
                let minor = self.select_rows(&keep_r).select_cols(&keep_c).det();
                let v = if (i + j) % 2 == 0 { minor } else { -minor };
                adj.set(i, j, v);
            }
        }
        adj
    }

    pub fn rank(&self) -> usize {
        snf(self).rank()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += k * row[src]
    fn add_row(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = self.get(src, j) * k;
            self.data[dst * self.cols + j] += v;
        }
    }

    /// col[dst] += k * col[src]
    fn add_col(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let v = self.get(i, src) * k;
            self.data[i * self.cols + dst] += v;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let idx = r * self.cols + j;
            self.data[idx] = -self.data[idx].clone();
        }
    }

    fn negate_col(&mut self, c: usize) {
        for i in 0..self.rows {
            let idx = i * self.cols + c;
            self.data[idx] = -self.data[idx].clone();
        }
    }
}

/// `U·A·V = S` with `U`, `V` unimodular and `S` diagonal with a divisibility chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithDecomposition {
    pub u: IntMatrix,
    pub s: IntMatrix,
    pub v: IntMatrix,
    /// Inverse of `u`, tracked alongside so quotient maps can be lifted.
    pub u_inv: IntMatrix,
}

impl SmithDecomposition {
    pub fn diagonal(&self) -> Vec<BigInt> {
        let k = self.s.rows().min(self.s.cols());
        (0..k).map(|i| self.s.get(i, i).clone()).collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().filter(|d| !d.is_zero()).count()
    }
}

/// Smith normal form. The pivot is the entry of least nonzero absolute value in the
/// remaining block, ties broken in row-major order, which keeps `U` and `V` reproducible.
pub fn snf(a: &IntMatrix) -> SmithDecomposition {
    let (m, n) = (a.rows(), a.cols());
    let mut s = a.clone();
    let mut u = IntMatrix::identity(m);
    let mut u_inv = IntMatrix::identity(m);
    let mut v = IntMatrix::identity(n);

    for t in 0..m.min(n) {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..m {
                for j in t..n {
                    let x = s.get(i, j);
                    if x.is_zero() {
                        continue;
                    }
                    match best {
                        Some((bi, bj)) if s.get(bi, bj).abs() <= x.abs() => {}
                        _ => best = Some((i, j)),
                    }
                }
            }
            let Some((pi, pj)) = best else { break };
            s.swap_rows(t, pi);
            u.swap_rows(t, pi);
            u_inv.swap_cols(t, pi);
            s.swap_cols(t, pj);
            v.swap_cols(t, pj);

            let p = s.get(t, t).clone();
            let mut clean = true;
            for i in t + 1..m {
                let q = s.get(i, t).div_floor(&p);
                if !q.is_zero() {
                    let nq = -q.clone();
                    s.add_row(i, t, &nq);
                    u.add_row(i, t, &nq);
                    u_inv.add_col(t, i, &q);
                }
                if !s.get(i, t).is_zero() {
                    clean = false;
                }
            }
            for j in t + 1..n {
                let q = s.get(t, j).div_floor(&p);
                if !q.is_zero() {
                    let nq = -q;
                    s.add_col(j, t, &nq);
                    v.add_col(j, t, &nq);
                }
                if !s.get(t, j).is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // Divisibility: fold an offending row into the pivot row and repeat.
            let mut offender = None;
            'scan: for i in t + 1..m {
                for j in t + 1..n {
                    if !s.get(i, j).is_multiple_of(&p) {
                        offender = Some(i);
                        break 'scan;
                    }
                }
            }
            match offender {
                Some(i) => {
                    let one = BigInt::one();
                    s.add_row(t, i, &one);
                    u.add_row(t, i, &one);
                    u_inv.add_col(i, t, &-one);
                }
                None => break,
            }
        }
        if t < m && t < n && s.get(t, t).is_negative() {
            s.negate_row(t);
            u.negate_row(t);
            u_inv.negate_col(t);
        }
    }
    SmithDecomposition { u, s, v, u_inv }
}

/// `U·A = H` with `H` in row echelon form, positive pivots, entries above each
/// pivot reduced into `[0, pivot)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HermiteDecomposition {
    pub u: IntMatrix,
    pub h: IntMatrix,
}

impl HermiteDecomposition {
    /// Column index of the pivot of each nonzero row.
    pub fn pivots(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for i in 0..self.h.rows() {
            match (0..self.h.cols()).find(|&j| !self.h.get(i, j).is_zero()) {
                Some(j) => out.push(j),
                None => break,
            }
        }
        out
    }
}

pub fn hnf(a: &IntMatrix) -> HermiteDecomposition {
    let (m, n) = (a.rows(), a.cols());
    let mut h = a.clone();
    let mut u = IntMatrix::identity(m);
    let mut r = 0;
    for c in 0..n {
        if r == m {
            break;
        }
        loop {
            let mut best: Option<usize> = None;
            for i in r..m {
                let x = h.get(i, c);
                if x.is_zero() {
                    continue;
                }
                match best {
                    Some(b) if h.get(b, c).abs() <= x.abs() => {}
                    _ => best = Some(i),
                }
            }
            let Some(b) = best else { break };
            h.swap_rows(r, b);
            u.swap_rows(r, b);
            let p = h.get(r, c).clone();
            let mut done = true;
            for i in r + 1..m {
                let q = h.get(i, c).div_floor(&p);
                if !q.is_zero() {
                    let nq = -q;
                    h.add_row(i, r, &nq);
                    u.add_row(i, r, &nq);
                }
                if !h.get(i, c).is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if h.get(r, c).is_zero() {
            continue;
        }
        if h.get(r, c).is_negative() {
            h.negate_row(r);
            u.negate_row(r);
        }
        let p = h.get(r, c).clone();
        for i in 0..r {
            let q = h.get(i, c).div_floor(&p);
            if !q.is_zero() {
                let nq = -q;
                h.add_row(i, r, &nq);
                u.add_row(i, r, &nq);
            }
        }
        r += 1;
    }
    HermiteDecomposition { u, h }
}

/// Lattice basis (as columns) of `{v : A·v = 0}`, in Hermite-reduced form.
/// A trivial kernel gives a `cols × 0` matrix.
pub fn kernel_basis(a: &IntMatrix) -> IntMatrix {
    let n = a.cols();
    let dec = hnf(&a.transpose());
    let rank = dec.pivots().len();
    let kernel_rows: Vec<Vec<BigInt>> = (rank..n).map(|i| dec.u.row(i)).collect();
    if kernel_rows.is_empty() {
        return IntMatrix::zeros(n, 0);
    }
    let reduced = hnf(&IntMatrix::from_rows(&kernel_rows, n)).h;
    reduced.transpose()
}

/// Hermite-reduced lattice basis (as rows) of the row span of `rows`.
pub fn lattice_basis_rows(rows: &IntMatrix) -> IntMatrix {
    let dec = hnf(rows);
    let k = dec.pivots().len();
    dec.h.select_rows(&(0..k).collect::<Vec<_>>())
}

/// `Z^rows / im(A)` in invariant-factor form.
pub fn cokernel(a: &IntMatrix) -> FinAbPresentation {
    FinAbPresentation::from_relations(a.clone())
}

/// One integer solution of `A·x = b`, reduced modulo the kernel lattice so that it is
/// deterministic; `None` when no integer solution exists.
pub fn solve(a: &IntMatrix, b: &[BigInt]) -> Option<Vec<BigInt>> {
    assert_eq!(a.rows(), b.len(), "right-hand side has the wrong length");
    let dec = snf(a);
    let ub = dec.u.mul_vec(b);
    let diag = dec.diagonal();
    let mut y = vec![BigInt::zero(); a.cols()];
    for (i, ubi) in ub.iter().enumerate() {
        let d = diag.get(i).cloned().unwrap_or_else(BigInt::zero);
        if d.is_zero() {
            if !ubi.is_zero() {
                return None;
            }
        } else {
            let (q, r) = ubi.div_rem(&d);
            if !r.is_zero() {
                return None;
            }
            y[i] = q;
        }
    }
    let x = dec.v.mul_vec(&y);
    Some(reduce_mod_kernel(a, x))
}

/// Symmetric reduction of `x` against the Hermite basis of `ker A`: each pivot
/// coordinate lands in `(-p/2, p/2]`.
fn reduce_mod_kernel(a: &IntMatrix, mut x: Vec<BigInt>) -> Vec<BigInt> {
    let k = kernel_basis(a).transpose();
    for i in 0..k.rows() {
        let row = k.row(i);
        let Some(pc) = row.iter().position(|e| !e.is_zero()) else { continue };
        let p = &row[pc];
        let r = x[pc].mod_floor(p);
        let target = if &r * 2 > *p { r - p } else { r };
        let q = (&x[pc] - &target) / p;
        if !q.is_zero() {
            for (xj, rj) in x.iter_mut().zip(row.iter()) {
                *xj -= &q * rj;
            }
        }
    }
    x
}

/// Inverse of a unimodular square matrix.
pub fn unimodular_inverse(u: &IntMatrix) -> IntMatrix {
    let n = u.rows();
    let cols: Vec<Vec<BigInt>> = (0..n)
        .map(|k| {
            let mut e = vec![BigInt::zero(); n];
            e[k] = BigInt::one();
            solve(u, &e).expect("matrix is not unimodular")
        })
        .collect();
    IntMatrix::from_cols(&cols, n)
}

pub fn big(x: i64) -> BigInt {
    BigInt::from(x)
}

pub fn bigvec(xs: &[i64]) -> Vec<BigInt> {
    xs.iter().map(|&x| BigInt::from(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        let cols = rows.first().map_or(0, |r| r.len());
        IntMatrix::from_i64_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), cols)
    }

    fn check_snf(a: &IntMatrix) {
        let d = snf(a);
        assert_eq!(d.u.mul(a).mul(&d.v), d.s);
        assert_eq!(d.u.det().abs(), BigInt::one());
        assert_eq!(d.v.det().abs(), BigInt::one());
        assert_eq!(d.u.mul(&d.u_inv), IntMatrix::identity(a.rows()));
        let diag = d.diagonal();
        for w in diag.windows(2) {
            if w[0].is_zero() {
                assert!(w[1].is_zero());
            } else {
                assert!(w[1].is_multiple_of(&w[0]));
            }
        }
        for i in 0..d.s.rows() {
            for j in 0..d.s.cols() {
                if i != j {
                    assert!(d.s.get(i, j).is_zero());
                }
            }
        }
    }

    #[test]
    fn snf_identity_and_zero() {
        let d = snf(&IntMatrix::identity(2));
        assert_eq!(d.s, IntMatrix::identity(2));
        assert_eq!(d.u, IntMatrix::identity(2));
        assert_eq!(d.v, IntMatrix::identity(2));
        let z = IntMatrix::zeros(2, 3);
        assert_eq!(snf(&z).s, z);
    }

    #[test]
    fn snf_small_example() {
        let a = m(&[&[2, 4], &[6, 8]]);
        check_snf(&a);
        assert_eq!(snf(&a).diagonal(), bigvec(&[2, 4]));
    }

    #[test]
    fn snf_empty_shapes() {
        for (r, c) in [(0, 0), (0, 3), (3, 0)] {
            let a = IntMatrix::zeros(r, c);
            check_snf(&a);
        }
    }

    #[test]
    fn snf_needs_divisibility_fix() {
        let a = m(&[&[2, 0], &[0, 3]]);
        check_snf(&a);
        assert_eq!(snf(&a).diagonal(), bigvec(&[1, 6]));
    }

    #[test]
    fn determinant() {
        assert_eq!(m(&[&[2, 4], &[6, 8]]).det(), big(-8));
        assert_eq!(m(&[&[0, 1], &[1, 0]]).det(), big(-1));
        assert_eq!(IntMatrix::zeros(0, 0).det(), big(1));
        let a = m(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 10]]);
        assert_eq!(a.det(), big(-3));
        assert_eq!(a.mul(&a.adjugate()), IntMatrix::identity(3).scale(&big(-3)));
    }

    #[test]
    fn kernels() {
        assert_eq!(kernel_basis(&IntMatrix::identity(2)).cols(), 0);
        assert_eq!(kernel_basis(&m(&[&[1, 0, -1], &[0, 1, -2]])).col(0), bigvec(&[1, 2, 1]));
        assert_eq!(kernel_basis(&m(&[&[2, -3]])).col(0), bigvec(&[3, 2]));
        let k = kernel_basis(&IntMatrix::zeros(0, 2));
        assert_eq!(k.cols(), 2);
    }

    #[test]
    fn solving() {
        assert_eq!(solve(&IntMatrix::identity(2), &bigvec(&[5, -7])), Some(bigvec(&[5, -7])));
        assert_eq!(solve(&m(&[&[2]]), &bigvec(&[3])), None);
        assert_eq!(solve(&m(&[&[2, 3]]), &bigvec(&[1])), Some(bigvec(&[-1, 1])));
        assert_eq!(solve(&IntMatrix::zeros(0, 2), &[]), Some(bigvec(&[0, 0])));
    }

    #[test]
    fn hermite_form() {
        let a = m(&[&[4, 6], &[2, 3], &[0, 5]]);
        let d = hnf(&a);
        assert_eq!(d.u.mul(&a), d.h);
        assert_eq!(d.u.det().abs(), BigInt::one());
        assert_eq!(d.pivots(), vec![0, 1]);
        assert!(d.h.row(2).iter().all(|x| x.is_zero()));
        let p = d.h.get(1, 1).clone();
        assert!(!d.h.get(0, 1).is_negative() && d.h.get(0, 1) < &p);
    }

    #[test]
    fn inverse_of_unimodular() {
        let u = m(&[&[2, 1], &[1, 1]]);
        assert_eq!(u.mul(&unimodular_inverse(&u)), IntMatrix::identity(2));
    }
}
