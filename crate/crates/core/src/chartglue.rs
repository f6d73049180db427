//! Double overlaps of top-cone charts.
//!
//! Positions on a chart are cover exponents `x ∈ Z^d`, one coordinate per ray of the
//! cone. On an overlap the rays are aligned so that shared rays (sorted by ray index)
//! come first, followed by the remaining rays of the cone (sorted). The overlap chart
//! has exponent coordinates `v = (v_τ, v_λ)`; its weight matrix `chi` has as rows the
//! shared rays and a basis of `L_i ∩ P_j`, where `L_i` is the lattice spanned by the
//! rays of `σ_i` and `P_j` the span of the rays of `σ_j` outside `σ_i`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::abgrp::{hom_cokernel, torsion_subgroup, FinAbPresentation, GroupHom};
use crate::error::{Error, Result};
use crate::intlinalg::{hnf, kernel_basis, lattice_basis_rows, solve, IntMatrix};
use crate::stackyfan::{Chart, StackyFan};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

impl Side {
    pub fn from_index(k: u8) -> Result<Side> {
        match k {
            1 => Ok(Side::First),
            2 => Ok(Side::Second),
            _ => Err(Error::InvalidArgument(format!("side must be 1 or 2, got {k}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ChartIntersection {
    pub i: usize,
    pub j: usize,
    pub chart_i: Chart,
    pub chart_j: Chart,
    /// Shared ray indices, ascending.
    pub shared: Vec<usize>,
    pub ns_i: Vec<usize>,
    pub ns_j: Vec<usize>,
    /// Aligned slot → stored slot in the cone's ray list.
    pub perm_i: Vec<usize>,
    pub perm_j: Vec<usize>,
    pub dg_union: FinAbPresentation,
    pub dh: FinAbPresentation,
    /// `DH → DG_σi` and `DH → DG_σj`.
    pub phi1: GroupHom,
    pub phi2: GroupHom,
    /// `X(K)`, presented on `Z^d ⊕ Z^d = DG_σi ⊕ DG_σj` generators.
    pub k_chars: FinAbPresentation,
    pub proj: GroupHom,
    pub c: IntMatrix,
    pub a: IntMatrix,
    pub chi: IntMatrix,
    pub basis1: Vec<Vec<BigInt>>,
    pub basis2: Vec<Vec<BigInt>>,
    /// Characters `μ_k ∈ X(K)` of the overlap coordinates, as representatives in `Z^{2d}`.
    pub mu: Vec<Vec<BigInt>>,
}

fn aligned_perm(cone: &[usize], order: &[usize]) -> Vec<usize> {
    order.iter().map(|r| cone.iter().position(|x| x == r).expect("ray in cone")).collect()
}

fn ray_rows(fan: &StackyFan, idx: &[usize]) -> Vec<Vec<BigInt>> {
    idx.iter().map(|&r| fan.rays[r][..fan.d].iter().map(|&x| BigInt::from(x)).collect()).collect()
}

/// `X · M^{-1}` for square nonsingular `M`, asserting integrality.
fn right_divide(x: &IntMatrix, m: &IntMatrix) -> Result<IntMatrix> {
    let det = m.det();
    let prod = x.mul(&m.adjugate());
    let mut out = IntMatrix::zeros(prod.rows(), prod.cols());
    for r in 0..prod.rows() {
        for c in 0..prod.cols() {
            let (q, rem) = prod.get(r, c).div_rem(&det);
            if !rem.is_zero() {
                return Err(Error::Internal("overlap weights are not integral".into()));
            }
            out.set(r, c, q);
        }
    }
    Ok(out)
}

/// Coset representatives of `Z^p / H Z^p`: `0 ≤ a_k < h_kk` for the lower-triangular
/// column Hermite form `h` of `m`.
fn coset_reps(m: &IntMatrix) -> Vec<Vec<BigInt>> {
    let p = m.rows();
    let h = hnf(&m.transpose()).h;
    let diag: Vec<i64> = (0..p).map(|k| h.get(k, k).to_i64().expect("small index")).collect();
    let mut out = vec![Vec::new()];
    for d in diag {
        let mut next = Vec::new();
        for e in &out {
            for k in 0..d {
                let mut v = e.clone();
                v.push(BigInt::from(k));
                next.push(v);
            }
        }
        out = next;
    }
    out
}

pub fn intersect(fan: &StackyFan, i: usize, j: usize) -> Result<ChartIntersection> {
    if !fan.is_free() {
        return Err(Error::Unsupported("chart overlaps need a torsion-free lattice".into()));
    }
    fan.check()?;
    if i >= fan.cones.len() {
        return Err(Error::NotTopCone(i));
    }
    if j >= fan.cones.len() {
        return Err(Error::NotTopCone(j));
    }
    if i == j {
        return Err(Error::SameCone(i));
    }
    let d = fan.d;
    let chart_i = fan.chart(i)?;
    let chart_j = fan.chart(j)?;
    let ci = &fan.cones[i];
    let cj = &fan.cones[j];
    let mut shared: Vec<usize> = ci.iter().copied().filter(|r| cj.contains(r)).collect();
    shared.sort_unstable();
    let mut ns_i: Vec<usize> = ci.iter().copied().filter(|r| !shared.contains(r)).collect();
    ns_i.sort_unstable();
    let mut ns_j: Vec<usize> = cj.iter().copied().filter(|r| !shared.contains(r)).collect();
    ns_j.sort_unstable();
    let s = shared.len();
    let p = d - s;
    let order_i: Vec<usize> = shared.iter().chain(&ns_i).copied().collect();
    let order_j: Vec<usize> = shared.iter().chain(&ns_j).copied().collect();
    let perm_i = aligned_perm(ci, &order_i);
    let perm_j = aligned_perm(cj, &order_j);

    // DG of the union cone and its torsion part.
    let union: Vec<usize> = order_i.iter().chain(&ns_j).copied().collect();
    let b_union = IntMatrix::from_rows(&ray_rows(fan, &union), d);
    let dg_union = FinAbPresentation::from_relations(b_union.clone());
    let (dh, dh_incl) = torsion_subgroup(&dg_union);
    let restrict = |cone: &[usize]| {
        let mut m = IntMatrix::zeros(d, union.len());
        for (u, r) in union.iter().enumerate() {
            if let Some(pos) = cone.iter().position(|x| x == r) {
                m.set(pos, u, BigInt::one());
            }
        }
        m
    };
    let r1 = GroupHom::new(dg_union.clone(), chart_i.group.clone(), restrict(ci))?;
    let r2 = GroupHom::new(dg_union.clone(), chart_j.group.clone(), restrict(cj))?;
    let phi1 = r1.compose(&dh_incl);
    let phi2 = r2.compose(&dh_incl);

    let both = chart_i.group.direct_sum(&chart_j.group);
    let pair = GroupHom::new(dh.clone(), both, phi1.matrix.vcat(&phi2.matrix))?;
    let (k_chars, proj) = hom_cokernel(&pair)?;

    // Weight matrix of the overlap chart.
    let m_i_al = IntMatrix::from_rows(&ray_rows(fan, &order_i), d);
    let m_j_al = IntMatrix::from_rows(&ray_rows(fan, &order_j), d);
    let mut chi_rows = ray_rows(fan, &shared);
    if p > 0 {
        let b_i = chart_i.m.transpose();
        let det = b_i.det().abs();
        let p_j = IntMatrix::from_cols(&ray_rows(fan, &ns_j), d);
        let lhs = b_i.adjugate().mul(&p_j).hcat(&IntMatrix::identity(d).scale(&det));
        let kb = kernel_basis(&lhs);
        let w_rows: Vec<Vec<BigInt>> = (0..kb.cols()).map(|c| kb.col(c)[..p].to_vec()).collect();
        let w = lattice_basis_rows(&IntMatrix::from_rows(&w_rows, p));
        if w.rows() != p {
            return Err(Error::Internal("overlap lattice has the wrong rank".into()));
        }
        for l in 0..p {
            chi_rows.push(p_j.mul_vec(&w.row(l)));
        }
    }
    let chi = IntMatrix::from_rows(&chi_rows, d);
    let c = right_divide(&chi, &m_i_al)?;
    let a = right_divide(&chi, &m_j_al)?;

    let mut ci_out = ChartIntersection {
        i,
        j,
        chart_i,
        chart_j,
        shared,
        ns_i,
        ns_j,
        perm_i,
        perm_j,
        dg_union,
        dh,
        phi1,
        phi2,
        k_chars,
        proj,
        c,
        a,
        chi,
        basis1: Vec::new(),
        basis2: Vec::new(),
        mu: Vec::new(),
    };
    ci_out.basis1 = coset_reps(&ci_out.c_pp());
    ci_out.basis2 = coset_reps(&ci_out.a_pp());
    ci_out.mu = ci_out.solve_mu()?;
    Ok(ci_out)
}

impl ChartIntersection {
    pub fn d(&self) -> usize {
        self.c.rows()
    }

    pub fn n_shared(&self) -> usize {
        self.shared.len()
    }

    pub fn p(&self) -> usize {
        self.d() - self.n_shared()
    }

    fn block(m: &IntMatrix, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> IntMatrix {
        m.select_rows(&rows.collect::<Vec<_>>()).select_cols(&cols.collect::<Vec<_>>())
    }

    pub fn c_pp(&self) -> IntMatrix {
        Self::block(&self.c, self.n_shared()..self.d(), self.n_shared()..self.d())
    }

    pub fn c_prime(&self) -> IntMatrix {
        Self::block(&self.c, self.n_shared()..self.d(), 0..self.n_shared())
    }

    pub fn a_pp(&self) -> IntMatrix {
        Self::block(&self.a, self.n_shared()..self.d(), self.n_shared()..self.d())
    }

    pub fn basis(&self, side: Side) -> &[Vec<BigInt>] {
        match side {
            Side::First => &self.basis1,
            Side::Second => &self.basis2,
        }
    }

    pub fn side_matrix(&self, side: Side) -> &IntMatrix {
        match side {
            Side::First => &self.c,
            Side::Second => &self.a,
        }
    }

    pub fn chart(&self, side: Side) -> &Chart {
        match side {
            Side::First => &self.chart_i,
            Side::Second => &self.chart_j,
        }
    }

    pub fn perm(&self, side: Side) -> &[usize] {
        match side {
            Side::First => &self.perm_i,
            Side::Second => &self.perm_j,
        }
    }

    /// `ι` of a chart class (presentation coordinates of `DG_σ`) into `Z^{2d}`, with
    /// the sign carried by the second chart.
    pub fn iota(&self, side: Side, x: &[BigInt]) -> Vec<BigInt> {
        let d = self.d();
        let mut out = vec![BigInt::zero(); 2 * d];
        match side {
            Side::First => out[..d].clone_from_slice(x),
            Side::Second => {
                for (o, v) in out[d..].iter_mut().zip(x) {
                    *o = -v;
                }
            }
        }
        out
    }

    /// Stored-order chart exponent from an aligned one.
    pub fn to_stored(&self, side: Side, aligned: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); aligned.len()];
        for (k, &s) in self.perm(side).iter().enumerate() {
            out[s] = aligned[k].clone();
        }
        out
    }

    pub fn to_aligned(&self, side: Side, stored: &[BigInt]) -> Vec<BigInt> {
        self.perm(side).iter().map(|&s| stored[s].clone()).collect()
    }

    fn solve_mu(&self) -> Result<Vec<Vec<BigInt>>> {
        let d = self.d();
        let ca = self.c.hcat(&self.a);
        let mut x_cols = Vec::with_capacity(d);
        for k in 0..d {
            let mut e = vec![BigInt::zero(); d];
            e[k] = BigInt::one();
            x_cols.push(solve(&ca, &e).ok_or_else(|| Error::Internal("[C|A] has no right inverse".into()))?);
        }
        let targets: Vec<Vec<BigInt>> = (0..2 * d)
            .map(|m| {
                let (side, slot) = if m < d { (Side::First, m) } else { (Side::Second, m - d) };
                let mut e = vec![BigInt::zero(); d];
                e[self.perm(side)[slot]] = BigInt::one();
                self.iota(side, &e)
            })
            .collect();
        let mu: Vec<Vec<BigInt>> = (0..d)
            .map(|k| {
                let mut acc = vec![BigInt::zero(); 2 * d];
                for (m, t) in targets.iter().enumerate() {
                    let coef = &x_cols[k][m];
                    for (a, b) in acc.iter_mut().zip(t) {
                        *a += coef * b;
                    }
                }
                acc
            })
            .collect();
        for (mat, offset) in [(&self.c, 0), (&self.a, d)] {
            for col in 0..d {
                let mut acc = targets[offset + col].iter().map(|x| -x).collect::<Vec<_>>();
                for (k, mu_k) in mu.iter().enumerate() {
                    let coef = mat.get(k, col);
                    for (a, b) in acc.iter_mut().zip(mu_k) {
                        *a += coef * b;
                    }
                }
                if !self.k_chars.is_zero_class(&acc) {
                    return Err(Error::Internal("overlap characters are inconsistent".into()));
                }
            }
        }
        Ok(mu)
    }

    /// `Σ_k c_k μ_k` in `Z^{2d}`.
    pub fn mu_combination(&self, coeffs: &[BigInt]) -> Vec<BigInt> {
        let mut acc = vec![BigInt::zero(); 2 * self.d()];
        for (c, m) in coeffs.iter().zip(&self.mu) {
            for (a, b) in acc.iter_mut().zip(m) {
                *a += c * b;
            }
        }
        acc
    }

    /// Splits an overlap exponent `v` as `M·x + (0, a)` with `a` in the side's basis.
    /// Returns the aligned chart exponent `x` and the index of `a`.
    pub fn decompose(&self, side: Side, v: &[BigInt]) -> (Vec<BigInt>, usize) {
        let s = self.n_shared();
        let mat = self.side_matrix(side);
        for (idx, a) in self.basis(side).iter().enumerate() {
            let mut r = v.to_vec();
            for (k, ak) in a.iter().enumerate() {
                r[s + k] -= ak;
            }
            if let Some(x) = exact_solve(mat, &r) {
                return (x, idx);
            }
        }
        unreachable!("basis monomials cover every coset")
    }

    /// Failures of the structural identities; empty when all hold.
    pub fn audit(&self) -> Vec<String> {
        let mut out = Vec::new();
        let d = self.d();
        let s = self.n_shared();
        let gi = self.chart_i.group.order_usize();
        let gj = self.chart_j.group.order_usize();
        let h = self.dh.order_usize();
        let k = self.k_chars.order_usize();
        if gi * gj != h * k {
            out.push(format!("|DG_i||DG_j| = {} but |DH||X(K)| = {}", gi * gj, h * k));
        }
        if gj % h != 0 || self.basis1.len() != gj / h {
            out.push(format!("|basis1| = {} but |DG_j/DH| = {}/{}", self.basis1.len(), gj, h));
        }
        if gi % h != 0 || self.basis2.len() != gi / h {
            out.push(format!("|basis2| = {} but |DG_i/DH| = {}/{}", self.basis2.len(), gi, h));
        }
        if gi * self.basis1.len() != k || gj * self.basis2.len() != k {
            out.push("multiplicity balance fails".into());
        }
        for (name, f) in [("phi1", &self.phi1), ("phi2", &self.phi2)] {
            if !f.is_injective().unwrap_or(false) {
                out.push(format!("{name} is not injective on DH"));
            }
        }
        let m_i = IntMatrix::from_rows(&self.aligned_rows(Side::First), d);
        let m_j = IntMatrix::from_rows(&self.aligned_rows(Side::Second), d);
        if self.c.mul(&m_i) != self.chi || self.a.mul(&m_j) != self.chi {
            out.push("C·M_i = chi = A·M_j fails".into());
        }
        for r in 0..d {
            for c in 0..d {
                let want_c = if r < s && c < s { Some(r == c) } else if r < s { Some(false) } else { None };
                let want_a = if r < s || c < s { Some(r == c) } else { None };
                if let Some(w) = want_c {
                    if *self.c.get(r, c) != BigInt::from(w as i64) {
                        out.push("C does not have the block shape [[I,0],[C',C_pp]]".into());
                    }
                }
                if let Some(w) = want_a {
                    if *self.a.get(r, c) != BigInt::from(w as i64) {
                        out.push("A does not have the block shape diag(I, A_pp)".into());
                    }
                }
            }
        }
        out.dedup();
        out
    }

    fn aligned_rows(&self, side: Side) -> Vec<Vec<BigInt>> {
        let chart = self.chart(side);
        self.perm(side).iter().map(|&k| chart.m.row(k)).collect()
    }
}

/// The unique integer `x` with `M·x = v` for nonsingular `M`, if it exists.
fn exact_solve(m: &IntMatrix, v: &[BigInt]) -> Option<Vec<BigInt>> {
    let det = m.det();
    let y = m.adjugate().mul_vec(v);
    let mut out = Vec::with_capacity(y.len());
    for t in y {
        let (q, r) = t.div_rem(&det);
        if !r.is_zero() {
            return None;
        }
        out.push(q);
    }
    Some(out)
}

pub fn basis_monomials(ci: &ChartIntersection, side: Side) -> Vec<Vec<BigInt>> {
    ci.basis(side).to_vec()
}

/// Box part of an overlap exponent relative to the side matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftedPoint {
    pub q: Vec<BigRational>,
    pub lattice_point: Vec<BigInt>,
}

/// For each basis monomial `a`, the box part `Q'` of `Q - (0, a)` with respect to the
/// side matrix. Exactly one `Q'` is zero.
pub fn saturation_shift(ci: &ChartIntersection, side: Side, q: &[BigInt]) -> Vec<(ShiftedPoint, Vec<BigInt>)> {
    let s = ci.n_shared();
    let mat = ci.side_matrix(side);
    let det = mat.det();
    let adj = mat.adjugate();
    ci.basis(side)
        .iter()
        .map(|a| {
            let mut r = q.to_vec();
            for (k, ak) in a.iter().enumerate() {
                r[s + k] -= ak;
            }
            let t: Vec<BigRational> =
                adj.mul_vec(&r).into_iter().map(|x| BigRational::new(x, det.clone())).collect();
            let frac: Vec<BigRational> = t.iter().map(|x| x - x.floor()).collect();
            let lattice_point = (0..mat.rows())
                .map(|r| {
                    let mut acc = BigRational::zero();
                    for (c, f) in frac.iter().enumerate() {
                        acc += BigRational::from_integer(mat.get(r, c).clone()) * f;
                    }
                    acc.to_integer()
                })
                .collect();
            (ShiftedPoint { q: frac, lattice_point }, a.clone())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intlinalg::big;

    fn wp1(a: i64, b: i64) -> StackyFan {
        StackyFan::new(1, vec![vec![a], vec![-b]], vec![vec![0], vec![1]])
    }

    fn p2() -> StackyFan {
        StackyFan::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, -1]], vec![vec![0, 1], vec![1, 2], vec![2, 0]])
    }

    fn p112() -> StackyFan {
        StackyFan::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, -2]], vec![vec![0, 1], vec![1, 2], vec![2, 0]])
    }

    #[test]
    fn smooth_overlap() {
        let ci = intersect(&p2(), 0, 1).unwrap();
        assert!(ci.k_chars.is_trivial());
        assert_eq!(ci.basis1.len(), 1);
        assert_eq!(ci.basis2.len(), 1);
        assert!(ci.audit().is_empty(), "{:?}", ci.audit());
    }

    #[test]
    fn weighted_lines() {
        for (a, b, h, k) in [(2, 3, 1, 6), (2, 4, 2, 4), (3, 6, 3, 6), (4, 6, 2, 12)] {
            let ci = intersect(&wp1(a, b), 0, 1).unwrap();
            assert_eq!(ci.dh.order(), Some(big(h)), "{a},{b}");
            assert_eq!(ci.k_chars.order(), Some(big(k)), "{a},{b}");
            assert!(ci.audit().is_empty(), "{:?}", ci.audit());
        }
        let ci = intersect(&wp1(2, 3), 0, 1).unwrap();
        assert_eq!(ci.basis1.len(), 3);
        assert_eq!(ci.basis2.len(), 2);
    }

    #[test]
    fn stacky_plane_overlaps() {
        let f = p112();
        for (i, j) in f.cone_pairs() {
            let ci = intersect(&f, i, j).unwrap();
            assert!(ci.audit().is_empty(), "{i},{j}: {:?}", ci.audit());
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(intersect(&p2(), 1, 1), Err(Error::SameCone(1))));
        assert!(matches!(intersect(&p2(), 0, 5), Err(Error::NotTopCone(5))));
    }

    #[test]
    fn shifts() {
        let ci = intersect(&p2(), 0, 1).unwrap();
        let out = saturation_shift(&ci, Side::First, &[big(0), big(0)]);
        assert_eq!(out.len(), 1);
        assert!(out[0].0.lattice_point.iter().all(|x| x.is_zero()));

        let ci = intersect(&wp1(2, 3), 0, 1).unwrap();
        for (side, q, count) in [(Side::First, 0, 3), (Side::Second, 1, 2)] {
            let out = saturation_shift(&ci, side, &[big(q)]);
            assert_eq!(out.len(), count);
            let zeros = out.iter().filter(|(p, _)| p.q.iter().all(|x| x.is_zero())).count();
            assert_eq!(zeros, 1);
            let mut pts: Vec<_> = out.iter().map(|(p, _)| p.q.clone()).collect();
            pts.sort();
            pts.dedup();
            assert_eq!(pts.len(), count);
        }
    }
}
