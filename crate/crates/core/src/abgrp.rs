//! Finitely generated abelian groups presented as cokernels, and homomorphisms
//! between them.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::intlinalg::{hnf, kernel_basis, lattice_basis_rows, snf, solve, IntMatrix};

/// `Z^ngens / im(relations)` together with its invariant-factor normal form.
///
/// Normalized coordinates list the torsion factors first (ascending) and the free
/// part after. `proj` sends presentation coordinates to normalized ones, `lift` goes
/// back by sending each normalized basis vector to a representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinAbPresentation {
    relations: IntMatrix,
    torsion: Vec<BigInt>,
    free_rank: usize,
    proj: IntMatrix,
    lift: IntMatrix,
}

impl FinAbPresentation {
    pub fn from_relations(relations: IntMatrix) -> Self {
        let m = relations.rows();
        let dec = snf(&relations);
        let diag = dec.diagonal();
        let mut tor_idx = Vec::new();
        let mut torsion = Vec::new();
        for (i, d) in diag.iter().enumerate() {
            if d > &BigInt::one() {
                tor_idx.push(i);
                torsion.push(d.clone());
            }
        }
        let rank = dec.rank();
        let free_idx: Vec<usize> = (rank..m).collect();
        let free_rank = free_idx.len();

        let mut p_tor = dec.u.select_rows(&tor_idx);
        for (r, d) in torsion.iter().enumerate() {
            for c in 0..m {
                let v = p_tor.get(r, c).mod_floor(d);
                p_tor.set(r, c, v);
            }
        }
        let l_tor = dec.u_inv.select_cols(&tor_idx);

        let p_free_raw = dec.u.select_rows(&free_idx);
        let l_free_raw = dec.u_inv.select_cols(&free_idx);
        let h = hnf(&p_free_raw);
        let p_free = h.h;
        let l_free = l_free_raw.mul(&crate::intlinalg::unimodular_inverse(&h.u));

        let proj = p_tor.vcat(&p_free);
        let lift = l_tor.hcat(&l_free);
        FinAbPresentation { relations, torsion, free_rank, proj, lift }
    }

    /// The group `Z/d_1 ⊕ … ⊕ Z/d_k ⊕ Z^r` in its own normalized coordinates.
    pub fn standard(torsion: &[BigInt], free_rank: usize) -> Self {
        let mut diag: Vec<BigInt> = torsion.to_vec();
        diag.extend(std::iter::repeat(BigInt::zero()).take(free_rank));
        Self::from_relations(IntMatrix::diagonal(&diag))
    }

    pub fn trivial() -> Self {
        Self::from_relations(IntMatrix::zeros(0, 0))
    }

    pub fn ngens(&self) -> usize {
        self.relations.rows()
    }

    pub fn relations(&self) -> &IntMatrix {
        &self.relations
    }

    pub fn torsion(&self) -> &[BigInt] {
        &self.torsion
    }

    pub fn free_rank(&self) -> usize {
        self.free_rank
    }

    /// Number of normalized coordinates.
    pub fn dim(&self) -> usize {
        self.torsion.len() + self.free_rank
    }

    pub fn basis_change(&self) -> &IntMatrix {
        &self.proj
    }

    pub fn lift_matrix(&self) -> &IntMatrix {
        &self.lift
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0
    }

    pub fn is_trivial(&self) -> bool {
        self.dim() == 0
    }

    pub fn order(&self) -> Option<BigInt> {
        if self.is_finite() {
            Some(self.torsion.iter().product())
        } else {
            None
        }
    }

    /// Order as a machine integer; panics on infinite groups.
    pub fn order_usize(&self) -> usize {
        self.order().expect("infinite group").to_usize().expect("group too large")
    }

    pub fn same_invariants(&self, other: &FinAbPresentation) -> bool {
        self.torsion == other.torsion && self.free_rank == other.free_rank
    }

    fn reduce(&self, mut y: Vec<BigInt>) -> Vec<BigInt> {
        for (c, d) in y.iter_mut().zip(self.torsion.iter()) {
            *c = c.mod_floor(d);
        }
        y
    }

    /// Canonical normalized coordinates of the class of `x` (presentation coordinates).
    pub fn normalize(&self, x: &[BigInt]) -> Vec<BigInt> {
        self.reduce(self.proj.mul_vec(x))
    }

    pub fn normalize_i64(&self, x: &[i64]) -> Vec<BigInt> {
        let b: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
        self.normalize(&b)
    }

    /// Representative in presentation coordinates of a normalized element.
    pub fn lift(&self, y: &[BigInt]) -> Vec<BigInt> {
        self.lift.mul_vec(y)
    }

    pub fn canonical(&self, y: &[BigInt]) -> Vec<BigInt> {
        self.reduce(y.to_vec())
    }

    pub fn zero(&self) -> Vec<BigInt> {
        vec![BigInt::zero(); self.dim()]
    }

    pub fn is_zero_class(&self, x: &[BigInt]) -> bool {
        self.normalize(x).iter().all(|c| c.is_zero())
    }

    pub fn add(&self, a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
        self.reduce(a.iter().zip(b).map(|(x, y)| x + y).collect())
    }

    pub fn neg(&self, a: &[BigInt]) -> Vec<BigInt> {
        self.reduce(a.iter().map(|x| -x).collect())
    }

    pub fn scale(&self, k: &BigInt, a: &[BigInt]) -> Vec<BigInt> {
        self.reduce(a.iter().map(|x| k * x).collect())
    }

    /// All elements in normalized coordinates, lexicographic; finite groups only.
    pub fn elements(&self) -> Vec<Vec<BigInt>> {
        assert!(self.is_finite(), "cannot enumerate an infinite group");
        let mut out = vec![Vec::new()];
        for d in &self.torsion {
            let d = d.to_i64().expect("torsion factor too large");
            let mut next = Vec::with_capacity(out.len() * d as usize);
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

    pub fn element(&self, y: &[BigInt]) -> GroupElement {
        GroupElement { coords: self.canonical(y) }
    }

    /// `self ⊕ other` with presentation coordinates concatenated.
    pub fn direct_sum(&self, other: &FinAbPresentation) -> FinAbPresentation {
        FinAbPresentation::from_relations(self.relations.block_diag(&other.relations))
    }
}

/// Element in normalized coordinates, torsion entries reduced.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupElement {
    pub coords: Vec<BigInt>,
}

/// Homomorphism given on presentation coordinates.
#[derive(Clone, Debug)]
pub struct GroupHom {
    pub source: FinAbPresentation,
    pub target: FinAbPresentation,
    pub matrix: IntMatrix,
}

impl GroupHom {
    pub fn new(source: FinAbPresentation, target: FinAbPresentation, matrix: IntMatrix) -> Result<Self> {
        if matrix.rows() != target.ngens() || matrix.cols() != source.ngens() {
            return Err(Error::NotAHomomorphism);
        }
        let image = matrix.mul(source.relations());
        for c in 0..image.cols() {
            if !target.is_zero_class(&image.col(c)) {
                return Err(Error::NotAHomomorphism);
            }
        }
        Ok(GroupHom { source, target, matrix })
    }

    pub fn identity(g: &FinAbPresentation) -> Self {
        GroupHom { source: g.clone(), target: g.clone(), matrix: IntMatrix::identity(g.ngens()) }
    }

    /// Image of a normalized source element, in normalized target coordinates.
    pub fn apply(&self, y: &[BigInt]) -> Vec<BigInt> {
        self.target.normalize(&self.matrix.mul_vec(&self.source.lift(y)))
    }

    /// Image of presentation coordinates.
    pub fn apply_raw(&self, x: &[BigInt]) -> Vec<BigInt> {
        self.target.normalize(&self.matrix.mul_vec(x))
    }

    pub fn compose(&self, first: &GroupHom) -> GroupHom {
        GroupHom {
            source: first.source.clone(),
            target: self.target.clone(),
            matrix: self.matrix.mul(&first.matrix),
        }
    }

    pub fn is_zero(&self) -> bool {
        (0..self.source.ngens()).all(|k| {
            let mut e = vec![BigInt::zero(); self.source.ngens()];
            e[k] = BigInt::one();
            self.target.is_zero_class(&self.matrix.mul_vec(&e))
        })
    }

    /// Injectivity on a finite source, by enumeration of the kernel order.
    pub fn is_injective(&self) -> Result<bool> {
        let (k, _) = hom_kernel(self)?;
        Ok(k.is_trivial())
    }
}

/// Kernel of `f` with its inclusion into the source.
pub fn hom_kernel(f: &GroupHom) -> Result<(FinAbPresentation, GroupHom)> {
    let f = GroupHom::new(f.source.clone(), f.target.clone(), f.matrix.clone())?;
    let s = f.source.ngens();
    let rt = f.target.relations();
    let stacked = f.matrix.hcat(&rt.neg());
    let kb = kernel_basis(&stacked);
    let proj_rows: Vec<Vec<BigInt>> = (0..kb.cols()).map(|c| kb.col(c)[..s].to_vec()).collect();
    let gens = if proj_rows.is_empty() {
        IntMatrix::zeros(0, s)
    } else {
        lattice_basis_rows(&IntMatrix::from_rows(&proj_rows, s))
    };
    let g = gens.transpose();
    let rs = f.source.relations();
    let mut rel_cols = Vec::with_capacity(rs.cols());
    for c in 0..rs.cols() {
        let z = solve(&g, &rs.col(c)).ok_or_else(|| {
            Error::Internal("source relation outside the kernel lattice".into())
        })?;
        rel_cols.push(z);
    }
    let rel = IntMatrix::from_cols(&rel_cols, g.cols());
    let kernel = FinAbPresentation::from_relations(rel);
    let inclusion = GroupHom { source: kernel.clone(), target: f.source.clone(), matrix: g };
    Ok((kernel, inclusion))
}

/// Cokernel of `f` with the projection from the target.
pub fn hom_cokernel(f: &GroupHom) -> Result<(FinAbPresentation, GroupHom)> {
    let f = GroupHom::new(f.source.clone(), f.target.clone(), f.matrix.clone())?;
    let rel = f.target.relations().hcat(&f.matrix);
    let coker = FinAbPresentation::from_relations(rel);
    let projection = GroupHom {
        source: f.target.clone(),
        target: coker.clone(),
        matrix: IntMatrix::identity(f.target.ngens()),
    };
    Ok((coker, projection))
}

pub fn torsion_subgroup(g: &FinAbPresentation) -> (FinAbPresentation, GroupHom) {
    let t = g.torsion().len();
    let sub = FinAbPresentation::from_relations(IntMatrix::diagonal(g.torsion()));
    let idx: Vec<usize> = (0..t).collect();
    let inclusion = GroupHom { source: sub.clone(), target: g.clone(), matrix: g.lift_matrix().select_cols(&idx) };
    (sub, inclusion)
}

/// Character group. The finite part is identified with itself coordinate by
/// coordinate (the character `e_i ↦ exp(2πi/d_i)`), the free part with the dual lattice.
pub fn dualize_to_characters(g: &FinAbPresentation) -> FinAbPresentation {
    FinAbPresentation::standard(g.torsion(), g.free_rank())
}

/// Additive order of a normalized element of a finite group.
pub fn element_order(g: &FinAbPresentation, y: &[BigInt]) -> BigInt {
    let mut ord = BigInt::one();
    for (c, d) in y.iter().zip(g.torsion()) {
        let c = c.mod_floor(d);
        if !c.is_zero() {
            ord = ord.lcm(&(d / c.gcd(d)));
        }
    }
    if y[g.torsion().len()..].iter().any(|c| !c.is_zero()) {
        return BigInt::zero();
    }
    ord.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intlinalg::{big, bigvec};

    fn rel(rows: &[&[i64]]) -> FinAbPresentation {
        let cols = rows.first().map_or(0, |r| r.len());
        FinAbPresentation::from_relations(IntMatrix::from_i64_rows(
            &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
            cols,
        ))
    }

    #[test]
    fn invariant_factors() {
        assert!(rel(&[&[1, 0], &[0, 1]]).is_trivial());
        let z2 = rel(&[&[2]]);
        assert_eq!(z2.torsion(), &bigvec(&[2])[..]);
        let p112 = FinAbPresentation::from_relations(IntMatrix::from_i64_rows(&[vec![1, 0, -1], vec![0, 1, -2]], 3).transpose());
        assert_eq!(p112.free_rank(), 1);
        assert!(p112.torsion().is_empty());
        let g = rel(&[&[2, 0], &[0, 3]]);
        assert_eq!(g.torsion(), &bigvec(&[6])[..]);
    }

    #[test]
    fn normalize_respects_relations() {
        let g = rel(&[&[2, 0], &[0, 4], &[0, 0]]);
        assert_eq!(g.torsion(), &bigvec(&[2, 4])[..]);
        assert_eq!(g.free_rank(), 1);
        for c in 0..2 {
            assert!(g.is_zero_class(&g.relations().col(c)));
        }
        for y in [bigvec(&[1, 3, -2]), bigvec(&[0, 1, 5])] {
            assert_eq!(g.normalize(&g.lift(&y)), g.canonical(&y));
        }
    }

    #[test]
    fn kernel_examples() {
        let z = rel(&[&[0]]);
        let (k, _) = hom_kernel(&GroupHom::identity(&z)).unwrap();
        assert!(k.is_trivial());

        let z2 = rel(&[&[2]]);
        let f = GroupHom::new(z.clone(), z2.clone(), IntMatrix::identity(1)).unwrap();
        let (k, inc) = hom_kernel(&f).unwrap();
        assert_eq!(k.free_rank(), 1);
        assert_eq!(inc.matrix.get(0, 0), &big(2));

        let src = rel(&[&[6, 0], &[0, 4]]);
        let f = GroupHom::new(src, z2, IntMatrix::from_i64_rows(&[vec![1, 1]], 2)).unwrap();
        let (k, inc) = hom_kernel(&f).unwrap();
        assert_eq!(k.order(), Some(big(12)));
        assert!(f.compose(&inc).is_zero());
    }

    #[test]
    fn cokernel_examples() {
        let z = rel(&[&[0]]);
        let zero = GroupHom::new(z.clone(), z.clone(), IntMatrix::zeros(1, 1)).unwrap();
        assert_eq!(hom_cokernel(&zero).unwrap().0.free_rank(), 1);
        let two = GroupHom::new(z.clone(), z, IntMatrix::from_i64_rows(&[vec![2]], 1)).unwrap();
        let (c, p) = hom_cokernel(&two).unwrap();
        assert_eq!(c.torsion(), &bigvec(&[2])[..]);
        assert!(p.compose(&two).is_zero());
    }

    #[test]
    fn not_a_homomorphism() {
        let z2 = rel(&[&[2]]);
        let z3 = rel(&[&[3]]);
        assert!(matches!(
            GroupHom::new(z2, z3, IntMatrix::identity(1)),
            Err(Error::NotAHomomorphism)
        ));
    }

    #[test]
    fn torsion_and_duals() {
        let (t, _) = torsion_subgroup(&rel(&[&[0]]));
        assert!(t.is_trivial());
        let g = rel(&[&[0, 0], &[0, 4]]);
        let (t, inc) = torsion_subgroup(&g);
        assert_eq!(t.torsion(), &bigvec(&[4])[..]);
        assert!(inc.is_injective().unwrap());
        let h = rel(&[&[2, 0], &[0, 4]]);
        assert!(dualize_to_characters(&h).same_invariants(&h));
        assert!(dualize_to_characters(&dualize_to_characters(&h)).same_invariants(&h));
        assert_eq!(dualize_to_characters(&rel(&[&[0, 0], &[0, 0]])).free_rank(), 2);
    }

    #[test]
    fn orders_of_elements() {
        let g = rel(&[&[6]]);
        assert_eq!(element_order(&g, &bigvec(&[4])), big(3));
        assert_eq!(element_order(&g, &bigvec(&[0])), big(1));
        assert_eq!(g.elements().len(), 6);
    }
}
