//! Stacky fans `(N, Σ, β)`: validation, Gale duals, local groups and boxes.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::abgrp::{FinAbPresentation, GroupHom};
use crate::error::{Error, Result};
use crate::intlinalg::IntMatrix;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub rank: usize,
    #[serde(default)]
    pub torsion: Vec<i64>,
}

/// Polarization block as written in a fan file; interpreted by `modstab`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarizationSpec {
    #[serde(rename = "H")]
    pub h: Vec<String>,
    #[serde(rename = "Xi")]
    pub xi: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FanFile {
    lattice: LatticeSpec,
    rays: Vec<Vec<i64>>,
    top_cones: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    polarization: Option<PolarizationSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StackyFan {
    pub d: usize,
    pub torsion: Vec<i64>,
    /// Ray vectors in presentation coordinates `Z^{d+r}`.
    pub rays: Vec<Vec<i64>>,
    pub cones: Vec<Vec<usize>>,
    pub labels: Option<Vec<String>>,
    pub polarization: Option<PolarizationSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub failures: Vec<String>,
}

/// A top cone with its torus weights `M_σ = B_σ^T` and local group `coker M_σ`.
#[derive(Clone, Debug)]
pub struct Chart {
    pub index: usize,
    pub ray_indices: Vec<usize>,
    pub m: IntMatrix,
    pub det: BigInt,
    adj: IntMatrix,
    pub group: FinAbPresentation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxElement {
    pub cone: usize,
    pub q: Vec<BigRational>,
    pub lattice_point: Vec<BigInt>,
}

/// Rows `r` with `r·x > 0` cutting out the interior of the cone spanned by the columns.
fn interior_rows(b: &IntMatrix) -> Vec<Vec<BigInt>> {
    let sign = if b.det().is_negative() { BigInt::from(-1) } else { BigInt::one() };
    b.adjugate().to_rows().into_iter().map(|r| r.into_iter().map(|x| x * &sign).collect()).collect()
}

/// Whether two full-dimensional simplicial cones share an interior point, by
/// Fourier-Motzkin elimination on the strict homogeneous system.
fn interiors_meet(a: &IntMatrix, b: &IntMatrix) -> bool {
    let mut rows = interior_rows(a);
    rows.extend(interior_rows(b));
    let d = a.rows();
    for k in 0..d {
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            match r[k].sign() {
                Sign::Plus => pos.push(r),
                Sign::Minus => neg.push(r),
                Sign::NoSign => rest.push(r),
            }
        }
        for p in &pos {
            for n in &neg {
                let (cp, cn) = (-&n[k], p[k].clone());
                let mut r: Vec<BigInt> = p.iter().zip(n).map(|(x, y)| x * &cp + y * &cn).collect();
                let g = r.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
                if !g.is_zero() {
                    r.iter_mut().for_each(|x| *x /= &g);
                }
                rest.push(r);
            }
        }
        rest.sort();
        rest.dedup();
        rows = rest;
    }
    rows.is_empty()
}

impl StackyFan {
    pub fn new(d: usize, rays: Vec<Vec<i64>>, cones: Vec<Vec<usize>>) -> Self {
        StackyFan { d, torsion: Vec::new(), rays, cones, labels: None, polarization: None }
    }

    pub fn with_torsion(d: usize, torsion: Vec<i64>, rays: Vec<Vec<i64>>, cones: Vec<Vec<usize>>) -> Self {
        StackyFan { d, torsion, rays, cones, labels: None, polarization: None }
    }

    /// Parses a fan file. Shape errors are reported as `InvalidArgument`; the
    /// geometric conditions are left to [`StackyFan::validate`].
    pub fn from_json(text: &str) -> Result<Self> {
        let f: FanFile = serde_json::from_str(text).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(StackyFan {
            d: f.lattice.rank,
            torsion: f.lattice.torsion,
            rays: f.rays,
            cones: f.top_cones,
            labels: f.labels,
            polarization: f.polarization,
        })
    }

    pub fn to_json(&self) -> String {
        let f = FanFile {
            lattice: LatticeSpec { rank: self.d, torsion: self.torsion.clone() },
            rays: self.rays.clone(),
            top_cones: self.cones.clone(),
            labels: self.labels.clone(),
            polarization: self.polarization.clone(),
        };
        serde_json::to_string(&f).expect("fan serializes")
    }

    pub fn n(&self) -> usize {
        self.rays.len()
    }

    pub fn is_free(&self) -> bool {
        self.torsion.is_empty()
    }

    fn presentation_dim(&self) -> usize {
        self.d + self.torsion.len()
    }

    /// Resolution `Q` of `N`: zero on the free block, `diag(q)` below.
    pub fn q_matrix(&self) -> IntMatrix {
        let r = self.torsion.len();
        let mut q = IntMatrix::zeros(self.d + r, r);
        for (k, t) in self.torsion.iter().enumerate() {
            q.set(self.d + k, k, BigInt::from(*t));
        }
        q
    }

    /// `[B]` with the rays as columns, in presentation coordinates.
    pub fn ray_matrix(&self) -> IntMatrix {
        IntMatrix::from_cols(
            &self.rays.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect::<Vec<_>>(),
            self.presentation_dim(),
        )
    }

    pub fn validate(&self) -> ValidationReport {
        let mut failures = Vec::new();
        let dim = self.presentation_dim();
        if self.d == 0 {
            failures.push("lattice rank must be positive".to_string());
        }
        for t in &self.torsion {
            if *t < 2 {
                failures.push(format!("torsion factor {t} must be at least 2"));
            }
        }
        if let Some(l) = &self.labels {
            if l.len() != self.n() {
                failures.push(format!("{} labels for {} rays", l.len(), self.n()));
            }
        }
        let mut shape_ok = true;
        for (k, r) in self.rays.iter().enumerate() {
            if r.len() != dim {
                failures.push(format!("ray {k} has {} coordinates, expected {dim}", r.len()));
                shape_ok = false;
            }
        }
        if self.cones.is_empty() {
            failures.push("no top cones".to_string());
        }
        for (c, cone) in self.cones.iter().enumerate() {
            if cone.len() != self.d {
                failures.push(format!("cone {c} has {} rays, expected {}", cone.len(), self.d));
                continue;
            }
            if let Some(&bad) = cone.iter().find(|&&i| i >= self.n()) {
                failures.push(format!("cone {c} references missing ray {bad}"));
                continue;
            }
            let mut sorted = cone.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != cone.len() {
                failures.push(format!("cone {c} is not simplicial: repeated ray"));
                continue;
            }
            if shape_ok && self.free_block(cone).det().is_zero() {
                failures.push(format!("cone {c} is not simplicial: rays are linearly dependent"));
            }
        }
        for (a, ca) in self.cones.iter().enumerate() {
            for cb in self.cones.iter().skip(a + 1) {
                let mut x = ca.clone();
                let mut y = cb.clone();
                x.sort_unstable();
                y.sort_unstable();
                if x == y {
                    failures.push(format!("cone {a} is listed twice"));
                }
            }
        }
        if shape_ok && failures.is_empty() {
            for (a, b) in self.cone_pairs() {
                if interiors_meet(&self.free_block(&self.cones[a]), &self.free_block(&self.cones[b])) {
                    failures.push(format!("cones {a} and {b} overlap"));
                }
            }
        }
        if shape_ok && self.d > 0 && self.n() > 0 {
            let bq = self.ray_matrix().hcat(&self.q_matrix());
            if !FinAbPresentation::from_relations(bq).is_finite() {
                failures.push("ray map has infinite cokernel".to_string());
            }
        } else if self.n() == 0 {
            failures.push("no rays".to_string());
        }
        ValidationReport { valid: failures.is_empty(), failures }
    }

    pub fn check(&self) -> Result<()> {
        let report = self.validate();
        match report.failures.into_iter().next() {
            None => Ok(()),
            Some(f) => Err(Error::InvalidFan(f)),
        }
    }

    /// Free parts of the listed rays as columns (`d × |idx|`).
    fn free_block(&self, idx: &[usize]) -> IntMatrix {
        let cols: Vec<Vec<BigInt>> =
            idx.iter().map(|&i| self.rays[i][..self.d].iter().map(|&x| BigInt::from(x)).collect()).collect();
        IntMatrix::from_cols(&cols, self.d)
    }

    /// `B_σ`: the cone's rays (free parts) as columns in stored order.
    pub fn b_sigma(&self, cone: usize) -> Result<IntMatrix> {
        let c = self.cones.get(cone).ok_or(Error::NotTopCone(cone))?;
        Ok(self.free_block(c))
    }

    /// `DG(β) = coker([BQ]^*)` and `β^∨`, the images of the standard basis of `Z^n`.
    pub fn gale_dual(&self) -> Result<(FinAbPresentation, GroupHom)> {
        self.check()?;
        let bq = self.ray_matrix().hcat(&self.q_matrix());
        let dg = FinAbPresentation::from_relations(bq.transpose());
        let n = self.n();
        let r = self.torsion.len();
        let source = FinAbPresentation::from_relations(IntMatrix::zeros(n, 0));
        let mut incl = IntMatrix::zeros(n + r, n);
        for k in 0..n {
            incl.set(k, k, BigInt::from(1));
        }
        let hom = GroupHom::new(source, dg.clone(), incl)?;
        Ok((dg, hom))
    }

    /// Normalized images `β^∨(e_k)` of the basis vectors.
    pub fn beta_dual_images(&self) -> Result<Vec<Vec<BigInt>>> {
        let (_, hom) = self.gale_dual()?;
        Ok((0..self.n())
            .map(|k| {
                let mut e = vec![BigInt::zero(); self.n()];
                e[k] = BigInt::from(1);
                hom.apply_raw(&e)
            })
            .collect())
    }

    pub fn local_group(&self, cone: usize) -> Result<FinAbPresentation> {
        self.check()?;
        let c = self.cones.get(cone).ok_or(Error::NotTopCone(cone))?;
        let cols: Vec<Vec<BigInt>> =
            c.iter().map(|&i| self.rays[i].iter().map(|&x| BigInt::from(x)).collect()).collect();
        let b = IntMatrix::from_cols(&cols, self.presentation_dim());
        let bq = b.hcat(&self.q_matrix());
        Ok(FinAbPresentation::from_relations(bq.transpose()))
    }

    pub fn torus_weights(&self, cone: usize) -> Result<IntMatrix> {
        if !self.is_free() {
            return Err(Error::Unsupported("torus weights need a torsion-free lattice".into()));
        }
        self.check()?;
        Ok(self.b_sigma(cone)?.transpose())
    }

    pub fn chart(&self, cone: usize) -> Result<Chart> {
        let m = self.torus_weights(cone)?;
        let det = m.det();
        let adj = m.adjugate();
        let group = FinAbPresentation::from_relations(m.clone());
        Ok(Chart { index: cone, ray_indices: self.cones[cone].clone(), m, det, adj, group })
    }

    pub fn charts(&self) -> Result<Vec<Chart>> {
        (0..self.cones.len()).map(|c| self.chart(c)).collect()
    }

    pub fn box_elements(&self, cone: usize) -> Result<Vec<BoxElement>> {
        let chart = self.chart(cone)?;
        let mut out: Vec<BoxElement> = chart
            .group
            .elements()
            .into_iter()
            .map(|g| chart.box_element(&chart.group.lift(&g)))
            .collect();
        out.sort_by(|a, b| a.q.cmp(&b.q));
        Ok(out)
    }

    /// Index pairs of top cones, `i < j`.
    pub fn cone_pairs(&self) -> Vec<(usize, usize)> {
        let k = self.cones.len();
        (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect()
    }
}

impl Chart {
    pub fn d(&self) -> usize {
        self.m.rows()
    }

    pub fn order(&self) -> BigInt {
        self.det.abs()
    }

    /// `M^{-1} v` as exact rationals.
    pub fn t_coords(&self, v: &[BigInt]) -> Vec<BigRational> {
        self.adj
            .mul_vec(v)
            .into_iter()
            .map(|x| BigRational::new(x, self.det.clone()))
            .collect()
    }

    /// Splits `M^{-1} v = q + a` with `q ∈ [0,1)^d` and `a` integral.
    pub fn split(&self, v: &[BigInt]) -> (Vec<BigRational>, Vec<BigInt>) {
        let t = self.t_coords(v);
        let a: Vec<BigInt> = t.iter().map(|x| x.floor().to_integer()).collect();
        let q = t.iter().zip(&a).map(|(x, f)| x - BigRational::from_integer(f.clone())).collect();
        (q, a)
    }

    pub fn box_element(&self, v: &[BigInt]) -> BoxElement {
        let (q, a) = self.split(v);
        let shift = self.m.mul_vec(&a);
        let lattice_point = v.iter().zip(shift).map(|(x, s)| x - s).collect();
        BoxElement { cone: self.index, q, lattice_point }
    }

    /// Class `[v] ∈ DG_σ` of a cover exponent.
    pub fn class(&self, v: &[BigInt]) -> Vec<BigInt> {
        self.group.normalize(v)
    }

    pub fn class_i64(&self, v: &[i64]) -> Vec<BigInt> {
        self.group.normalize_i64(v)
    }

    /// `η_k`, the class of the k-th chart coordinate.
    pub fn eta(&self, k: usize) -> Vec<BigInt> {
        let mut e = vec![BigInt::zero(); self.d()];
        e[k] = BigInt::from(1);
        self.class(&e)
    }

    /// Whether `v` lies in `M Z^d`.
    pub fn is_lattice(&self, v: &[BigInt]) -> bool {
        self.adj.mul_vec(v).iter().all(|x| x.is_multiple_of(&self.det))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intlinalg::{big, bigvec};

    fn p2() -> StackyFan {
        StackyFan::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, -1]], vec![vec![0, 1], vec![1, 2], vec![2, 0]])
    }

    fn p112() -> StackyFan {
        StackyFan::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, -2]], vec![vec![0, 1], vec![1, 2], vec![2, 0]])
    }

    fn wp1(a: i64, b: i64) -> StackyFan {
        StackyFan::new(1, vec![vec![a], vec![-b]], vec![vec![0], vec![1]])
    }

    #[test]
    fn validation() {
        assert!(p2().validate().valid);
        assert!(p112().validate().valid);
        let bad = StackyFan::new(2, vec![vec![1, 0], vec![0, 1]], vec![vec![0, 0]]);
        let r = bad.validate();
        assert!(!r.valid);
        assert!(r.failures[0].contains("not simplicial"));
        let nested = StackyFan::new(2, vec![vec![1, 0], vec![0, 1], vec![1, 1]], vec![vec![0, 1], vec![1, 2], vec![2, 0]]);
        assert!(nested.validate().failures.iter().any(|f| f.contains("overlap")));
        let same_side = StackyFan::new(1, vec![vec![2], vec![3]], vec![vec![0], vec![1]]);
        assert!(!same_side.validate().valid);
        assert!(wp1(2, 3).validate().valid);
        let s3 = StackyFan::new(
            3,
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![-1, -1, -1]],
            vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]],
        );
        assert!(s3.validate().valid);
    }

    #[test]
    fn gale_duals() {
        assert_eq!(p2().beta_dual_images().unwrap(), vec![bigvec(&[1]), bigvec(&[1]), bigvec(&[1])]);
        assert_eq!(p112().beta_dual_images().unwrap(), vec![bigvec(&[1]), bigvec(&[2]), bigvec(&[1])]);
        let (dg, _) = wp1(2, 3).gale_dual().unwrap();
        assert_eq!(dg.free_rank(), 1);
        assert_eq!(wp1(2, 3).beta_dual_images().unwrap(), vec![bigvec(&[3]), bigvec(&[2])]);
    }

    #[test]
    fn local_groups() {
        for c in 0..3 {
            assert!(p2().local_group(c).unwrap().is_trivial());
        }
        assert_eq!(p112().local_group(2).unwrap().order(), Some(big(2)));
        assert_eq!(wp1(2, 3).local_group(0).unwrap().order(), Some(big(2)));
        assert_eq!(wp1(2, 3).local_group(1).unwrap().order(), Some(big(3)));
        assert!(matches!(p2().local_group(7), Err(Error::NotTopCone(7))));
    }

    #[test]
    fn torsion_lattice_groups() {
        let f = StackyFan::with_torsion(1, vec![2], vec![vec![1, 0], vec![-1, 1]], vec![vec![0], vec![1]]);
        assert!(f.validate().valid);
        assert_eq!(f.local_group(0).unwrap().order(), Some(big(2)));
        let (dg, _) = f.gale_dual().unwrap();
        assert_eq!(dg.free_rank(), 1);
        assert!(matches!(f.torus_weights(0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn boxes() {
        assert_eq!(p2().box_elements(0).unwrap().len(), 1);
        let b = wp1(3, 2).box_elements(0).unwrap();
        let pts: Vec<_> = b.iter().map(|e| e.lattice_point[0].clone()).collect();
        assert_eq!(pts, bigvec(&[0, 1, 2]));
        assert_eq!(p112().box_elements(2).unwrap().len(), 2);
        let m = wp1(2, 3).torus_weights(0).unwrap();
        assert_eq!(m, IntMatrix::from_i64_rows(&[vec![2]], 1));
    }
}
