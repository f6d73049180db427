//! Polarizations, intersection numbers and slopes on surfaces, slope stability of rank-2
//! data, and Euler characteristics on weighted projective planes.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::intlinalg::IntMatrix;
use crate::sheafrep::{EquivariantLineBundle, P1Point, Rank2ReflexiveData, SheafData};
use crate::stackyfan::StackyFan;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polarization {
    /// Coefficients of `H = Σ h_i D_i`.
    pub h: Vec<BigRational>,
    /// Summands of the generating sheaf.
    pub xi: Vec<EquivariantLineBundle>,
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let r: BigRational = s
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("not a rational number: {s:?}")))?;
    Ok(r)
}

impl Polarization {
    /// `H = Σ D_i` and `Ξ = ⊕ O(D_i)`, whose summands are `L_{-e_i}` here.
    pub fn standard(fan: &StackyFan) -> Self {
        let n = fan.n();
        let xi = (0..n)
            .map(|i| {
                let mut b = vec![0; n];
                b[i] = -1;
                EquivariantLineBundle::new(b)
            })
            .collect();
        Polarization { h: vec![BigRational::one(); n], xi }
    }

    /// The fan file's polarization block, or the standard one.
    pub fn from_fan(fan: &StackyFan) -> Result<Self> {
        let Some(block) = &fan.polarization else { return Ok(Self::standard(fan)) };
        let h = block.h.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
        if h.len() != fan.n() {
            return Err(Error::InvalidArgument("polarization H needs one entry per ray".into()));
        }
        if block.xi.is_empty() {
            return Err(Error::InvalidArgument("polarization Xi must be non-empty".into()));
        }
        if block.xi.iter().any(|b| b.len() != fan.n()) {
            return Err(Error::InvalidArgument("each Xi summand needs one entry per ray".into()));
        }
        Ok(Polarization { h, xi: block.xi.iter().map(|b| EquivariantLineBundle::new(b.clone())).collect() })
    }
}

/// `D_i · D_j` on a complete simplicial surface fan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntersectionTable {
    pub entries: Vec<Vec<BigRational>>,
}

fn require_surface(fan: &StackyFan) -> Result<()> {
    if fan.d != 2 {
        return Err(Error::Unsupported(format!("needs a surface fan, got dimension {}", fan.d)));
    }
    if !fan.is_free() {
        return Err(Error::Unsupported("needs a torsion-free lattice".into()));
    }
    fan.check()
}

pub fn intersection_table(fan: &StackyFan) -> Result<IntersectionTable> {
    require_surface(fan)?;
    let n = fan.n();
    let mut t = vec![vec![BigRational::zero(); n]; n];
    for c in 0..fan.cones.len() {
        let det = fan.b_sigma(c)?.det().abs();
        let (i, j) = (fan.cones[c][0], fan.cones[c][1]);
        let v = BigRational::new(BigInt::one(), det);
        t[i][j] = v.clone();
        t[j][i] = v;
    }
    for i in 0..n {
        let k = (0..2).find(|&k| fan.rays[i][k] != 0).expect("nonzero ray");
        let mut acc = BigRational::zero();
        for j in (0..n).filter(|&j| j != i) {
            acc += BigRational::from_integer(BigInt::from(fan.rays[j][k])) * &t[j][i];
        }
        t[i][i] = -acc / BigRational::from_integer(BigInt::from(fan.rays[i][k]));
    }
    for i in 0..n {
        for k in 0..2 {
            let mut acc = BigRational::zero();
            for j in 0..n {
                acc += BigRational::from_integer(BigInt::from(fan.rays[j][k])) * &t[j][i];
            }
            if !acc.is_zero() {
                return Err(Error::InvalidFan("linear relations fail; the fan is not complete".into()));
            }
        }
    }
    Ok(IntersectionTable { entries: t })
}

impl IntersectionTable {
    pub fn pair(&self, a: &[BigRational], b: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                acc += x * y * &self.entries[i][j];
            }
        }
        acc
    }

    /// `D_i · H` for every ray.
    pub fn degrees(&self, h: &[BigRational]) -> Vec<BigRational> {
        (0..self.entries.len())
            .map(|i| {
                let mut e = vec![BigRational::zero(); self.entries.len()];
                e[i] = BigRational::one();
                self.pair(&e, h)
            })
            .collect()
    }
}

fn rat(v: &[i64]) -> Vec<BigRational> {
    v.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect()
}

/// `B` in rank 1, `2A + λ` in rank 2.
pub fn c1(data: &SheafData) -> Vec<i64> {
    match data {
        SheafData::LineBundle(b) => b.b.clone(),
        SheafData::Rank1Tf(t) => t.b.clone(),
        SheafData::Rank2(r) => r.a.iter().zip(&r.lam).map(|(a, l)| 2 * a + l).collect(),
    }
}

pub fn modified_slope(fan: &StackyFan, pol: &Polarization, data: &SheafData) -> Result<BigRational> {
    let table = intersection_table(fan)?;
    let c = c1(data);
    if c.len() != fan.n() {
        return Err(Error::InvalidArgument("sheaf data has the wrong number of rays".into()));
    }
    let r = BigRational::from_integer(BigInt::from(data.rank() as i64));
    Ok(table.pair(&rat(&c), &pol.h) / r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    StrictlySemistable,
    Unstable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubLineBundle {
    pub line: P1Point,
    pub b: Vec<i64>,
    pub slope: BigRational,
    /// `μ(F) - μ(L)` measured with the geometric sign; positive for every candidate
    /// exactly when the data is stable.
    pub margin: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilityReport {
    pub verdict: Verdict,
    pub slope: BigRational,
    pub candidates: Vec<SubLineBundle>,
    pub witness: SubLineBundle,
}

/// Maximal equivariant sub-line-bundles: one per distinct filtration line plus one
/// generic line. Filtrations here increase with the exponent, so `L_B` has first Chern
/// class `-Σ B_i D_i` geometrically and slope comparisons run with the sign reversed.
pub fn rank2_slope_stable(fan: &StackyFan, pol: &Polarization, data: &Rank2ReflexiveData) -> Result<StabilityReport> {
    let table = intersection_table(fan)?;
    if data.n() != fan.n() {
        return Err(Error::InvalidArgument("rank-2 data has the wrong number of rays".into()));
    }
    let deg = table.degrees(&pol.h);
    let whole = SheafData::Rank2(data.clone());
    let slope = modified_slope(fan, pol, &whole)?;
    let mut lines = data.distinct_lines();
    lines.push(P1Point::Generic(usize::MAX));
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let candidates: Vec<SubLineBundle> = lines
        .into_iter()
        .map(|q| {
            let b: Vec<i64> = (0..data.n())
                .map(|j| if data.p[j] == q { data.a[j] } else { data.a[j] + data.lam[j] })
                .collect();
            let sub_slope = table.pair(&rat(&b), &pol.h);
            let mut margin = BigRational::zero();
            for j in 0..data.n() {
                let ind = if data.p[j] != q { BigRational::one() } else { BigRational::zero() };
                margin += BigRational::from_integer(BigInt::from(data.lam[j])) * &deg[j] * (ind - &half);
            }
            SubLineBundle { line: q, b, slope: sub_slope, margin }
        })
        .collect();
    let witness = candidates
        .iter()
        .min_by(|x, y| x.margin.cmp(&y.margin))
        .cloned()
        .expect("at least the generic candidate");
    let verdict = if witness.margin.is_positive() {
        Verdict::Stable
    } else if witness.margin.is_zero() {
        Verdict::StrictlySemistable
    } else {
        Verdict::Unstable
    };
    Ok(StabilityReport { verdict, slope, candidates, witness })
}

/// The closed form for `χ_Ξ(O(x))` on `P(a,b,c)`, evaluated as written.
pub fn wps_chi_formula(a: i64, b: i64, c: i64, x: i64) -> Result<BigRational> {
    check_weights(a, b, c)?;
    let big = |v: i64| BigInt::from(v);
    let mut s1 = BigInt::zero();
    let mut s2 = BigInt::zero();
    for k in 0..a * b * c {
        let t = big(x + k);
        s2 += &t * &t;
        s1 += t;
    }
    let head = big(a * a + b * b + c * c + 3 * a * b + 3 * b * c + 3 * c * a);
    let num = head + big(6) * (big(a + b + c) * s1 + s2);
    Ok(BigRational::new(num, big(12)))
}

fn check_weights(a: i64, b: i64, c: i64) -> Result<()> {
    if a < 1 || b < 1 || c < 1 {
        return Err(Error::InvalidArgument("weights must be positive".into()));
    }
    Ok(())
}

/// `#{(i,j,l) ≥ 0 : ai + bj + cl = m}`.
pub fn weighted_monomials(a: i64, b: i64, c: i64, m: i64) -> u64 {
    if m < 0 {
        return 0;
    }
    let mut count = 0;
    for i in 0..=m / a {
        let r = m - a * i;
        for j in 0..=r / b {
            if (r - b * j) % c == 0 {
                count += 1;
            }
        }
    }
    count
}

/// `Σ_{k=0}^{abc-1} #{ai + bj + cl = x - k}`, valid from `x = abc - 1` on.
pub fn wps_chi_oracle(a: i64, b: i64, c: i64, x: i64) -> Result<BigInt> {
    check_weights(a, b, c)?;
    let n = a * b * c;
    if x < n - 1 {
        return Err(Error::OutsideVanishingRange { x, min: n - 1 });
    }
    Ok((0..n).map(|k| BigInt::from(weighted_monomials(a, b, c, x - k))).sum())
}

/// Number of summands of `Ξ` whose fine grading at the fixed point of `cone` is `alpha`.
pub fn skyscraper_chi(fan: &StackyFan, pol: &Polarization, cone: usize, alpha: &[BigInt]) -> Result<usize> {
    let chart = fan.chart(cone)?;
    let target = chart.group.canonical(alpha);
    let mut count = 0;
    for b in &pol.xi {
        if b.b.len() != fan.n() {
            return Err(Error::InvalidArgument("Xi summand has the wrong number of rays".into()));
        }
        if chart.class_i64(&b.slice(fan, cone)) == target {
            count += 1;
        }
    }
    Ok(count)
}

/// `#{m ∈ Z^2 : <m, b_ρ> ≥ c_ρ for all ρ}` on a complete surface fan.
pub fn lattice_h0(fan: &StackyFan, c: &[i64]) -> Result<u64> {
    require_surface(fan)?;
    let n = fan.n();
    let mut lo = [i64::MAX; 2];
    let mut hi = [i64::MIN; 2];
    for i in 0..n {
        for j in i + 1..n {
            let m = IntMatrix::from_i64_rows(&[fan.rays[i].clone(), fan.rays[j].clone()], 2);
            let det = m.det();
            if det.is_zero() {
                continue;
            }
            let p = m.adjugate().mul_vec(&[BigInt::from(c[i]), BigInt::from(c[j])]);
            for k in 0..2 {
                let v = BigRational::new(p[k].clone(), det.clone());
                lo[k] = lo[k].min(v.floor().to_integer().to_i64().expect("small"));
                hi[k] = hi[k].max(v.ceil().to_integer().to_i64().expect("small"));
            }
        }
    }
    if lo[0] > hi[0] {
        return Ok(0);
    }
    let mut count = 0;
    for x in lo[0]..=hi[0] {
        for y in lo[1]..=hi[1] {
            if (0..n).all(|r| fan.rays[r][0] * x + fan.rays[r][1] * y >= c[r]) {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// `Σ_k h^0(L_{B - B^{(k)}})` over the summands of `Ξ`.
pub fn chi0_lattice(fan: &StackyFan, pol: &Polarization, b: &[i64]) -> Result<BigInt> {
    let mut total = BigInt::zero();
    for xi in &pol.xi {
        let c: Vec<i64> = b.iter().zip(&xi.b).map(|(x, y)| x - y).collect();
        total += BigInt::from(lattice_h0(fan, &c)?);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sheafrep::Rank2ReflexiveData;

    fn p2() -> StackyFan {
        StackyFan::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, -1]], vec![vec![0, 1], vec![1, 2], vec![2, 0]])
    }

    fn p112() -> StackyFan {
        StackyFan::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, -2]], vec![vec![0, 1], vec![1, 2], vec![2, 0]])
    }

    fn f1() -> StackyFan {
        StackyFan::new(
            2,
            vec![vec![1, 0], vec![0, 1], vec![-1, 1], vec![0, -1]],
            vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]],
        )
    }

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(d))
    }

    #[test]
    fn tables() {
        let t = intersection_table(&p2()).unwrap();
        assert!(t.entries.iter().flatten().all(|x| *x == q(1, 1)));
        let t = intersection_table(&p112()).unwrap();
        assert_eq!(t.entries[0][1], q(1, 1));
        assert_eq!(t.entries[1][2], q(1, 1));
        assert_eq!(t.entries[0][2], q(1, 2));
        assert_eq!(t.entries[0][0], q(1, 2));
        assert_eq!(t.entries[1][1], q(2, 1));
        assert_eq!(t.entries[2][2], q(1, 2));
        // F1: fibres square to 0, the negative section to -1.
        let t = intersection_table(&f1()).unwrap();
        assert_eq!(t.entries[0][0], q(0, 1));
        assert_eq!(t.entries[2][2], q(0, 1));
        assert_eq!(t.entries[1][1], q(-1, 1));
        assert_eq!(t.entries[3][3], q(1, 1));
        let line = StackyFan::new(1, vec![vec![1], vec![-1]], vec![vec![0], vec![1]]);
        assert!(matches!(intersection_table(&line), Err(Error::Unsupported(_))));
    }

    #[test]
    fn chern_classes_and_slopes() {
        let d = Rank2ReflexiveData::new(vec![1; 3], vec![2; 3], vec![P1Point::Point(1, 0); 3]).unwrap();
        assert_eq!(c1(&SheafData::Rank2(d)), vec![4, 4, 4]);
        let f = p2();
        let mut pol = Polarization::standard(&f);
        pol.h = vec![q(1, 1), q(0, 1), q(0, 1)];
        let d = Rank2ReflexiveData::new(vec![0; 3], vec![1, 0, 0], vec![P1Point::Point(1, 0); 3]).unwrap();
        assert_eq!(modified_slope(&f, &pol, &SheafData::Rank2(d)).unwrap(), q(1, 2));
        let triv = SheafData::LineBundle(EquivariantLineBundle::new(vec![0; 3]));
        assert_eq!(modified_slope(&f, &pol, &triv).unwrap(), q(0, 1));
    }

    #[test]
    fn stability_examples() {
        let f = p2();
        let pol = Polarization::standard(&f);
        let pts = vec![P1Point::Point(1, 0), P1Point::Point(0, 1), P1Point::Point(1, 1)];
        let d = Rank2ReflexiveData::new(vec![0; 3], vec![1; 3], pts).unwrap();
        assert_eq!(rank2_slope_stable(&f, &pol, &d).unwrap().verdict, Verdict::Stable);
        let same = Rank2ReflexiveData::new(vec![0; 3], vec![1; 3], vec![P1Point::Point(1, 1); 3]).unwrap();
        assert_eq!(rank2_slope_stable(&f, &pol, &same).unwrap().verdict, Verdict::Unstable);
        let flat = Rank2ReflexiveData::new(vec![0; 3], vec![0; 3], vec![P1Point::Point(1, 1); 3]).unwrap();
        assert_eq!(rank2_slope_stable(&f, &pol, &flat).unwrap().verdict, Verdict::StrictlySemistable);
    }

    #[test]
    fn wps_values() {
        assert_eq!(wps_chi_formula(1, 1, 1, 1).unwrap(), q(3, 1));
        assert_eq!(wps_chi_formula(1, 1, 1, 0).unwrap(), q(1, 1));
        assert_eq!(wps_chi_formula(1, 1, 2, 0).unwrap(), q(51, 12));
        assert_eq!(wps_chi_oracle(1, 1, 1, 1).unwrap(), BigInt::from(3));
        assert_eq!(wps_chi_oracle(1, 1, 1, 0).unwrap(), BigInt::from(1));
        assert_eq!(wps_chi_oracle(1, 1, 2, 4).unwrap(), BigInt::from(15));
        assert!(matches!(wps_chi_oracle(1, 1, 2, 0), Err(Error::OutsideVanishingRange { x: 0, min: 1 })));
    }

    #[test]
    fn skyscrapers() {
        let f = p2();
        let pol = Polarization::standard(&f);
        assert_eq!(skyscraper_chi(&f, &pol, 0, &[]).unwrap(), 3);
        let f = p112();
        let pol = Polarization {
            h: vec![q(1, 1); 3],
            xi: vec![EquivariantLineBundle::new(vec![0, 0, 0]), EquivariantLineBundle::new(vec![1, 0, 0])],
        };
        let g = f.chart(2).unwrap().group;
        for a in g.elements() {
            assert_eq!(skyscraper_chi(&f, &pol, 2, &a).unwrap(), 1);
        }
    }

    #[test]
    fn lattice_counts() {
        let f = p2();
        assert_eq!(lattice_h0(&f, &[0, 0, -1]).unwrap(), 3);
        assert_eq!(lattice_h0(&f, &[0, 0, -2]).unwrap(), 6);
        assert_eq!(lattice_h0(&f, &[0, 0, 1]).unwrap(), 0);
    }
}
