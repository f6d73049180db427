//! Truncated series in `q^{-1}` and generating functions of rank-1 torsion-free data.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::modstab::{chi0_lattice, skyscraper_chi, wps_chi_formula, wps_chi_oracle, Polarization};
use crate::stackyfan::StackyFan;

/// `q^leading · Σ_{w=0}^{order} coeffs[w] q^{-w}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    pub leading: BigRational,
    pub coeffs: Vec<BigInt>,
}

impl QSeries {
    pub fn one(order: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); order + 1];
        coeffs[0] = BigInt::one();
        QSeries { leading: BigRational::zero(), coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn with_leading(mut self, leading: BigRational) -> Self {
        self.leading = leading;
        self
    }

    pub fn mul(&self, other: &QSeries) -> QSeries {
        let order = self.order().min(other.order());
        let mut coeffs = vec![BigInt::zero(); order + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(order + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(order + 1 - i) {
                coeffs[i + j] += a * b;
            }
        }
        QSeries { leading: &self.leading + &other.leading, coeffs }
    }

    /// Multiplies by `(1 - q^{-e})^{-m}`.
    pub fn inv_factor(&self, e: i64, m: u32) -> Result<QSeries> {
        if e <= 0 {
            return Err(Error::InvalidArgument(format!("factor exponent must be positive, got {e}")));
        }
        let e = e as usize;
        let mut out = self.clone();
        for _ in 0..m {
            for w in e..out.coeffs.len() {
                let prev = out.coeffs[w - e].clone();
                out.coeffs[w] += prev;
            }
        }
        Ok(out)
    }

    /// Exponent of the `w`-th coefficient.
    pub fn exponent(&self, w: usize) -> BigRational {
        &self.leading - BigRational::from_integer(BigInt::from(w))
    }
}

/// `∏_{k≥1} (1 - q^{-ek})^{-1}` truncated.
fn euler_factor(series: &QSeries, e: i64) -> Result<QSeries> {
    let mut out = series.clone();
    let mut k = 1;
    while (e * k) as usize <= series.order() {
        out = out.inv_factor(e * k, 1)?;
        k += 1;
    }
    Ok(out)
}

/// The closed product on `P(a,b,c)`, leading power from the closed χ formula. The third
/// factor is taken as `(1 - q^{-cak})`, matching the other two.
pub fn wps_z_closed(a: i64, b: i64, c: i64, x: i64, order: usize) -> Result<QSeries> {
    let lead = wps_chi_formula(a, b, c, x)?;
    let mut s = QSeries::one(order);
    for e in [a * b, b * c, c * a] {
        s = euler_factor(&s, e)?;
    }
    Ok(s.with_leading(lead))
}

/// Young diagrams with at most `max_boxes` cells, as lists of cells `(u, v)`.
pub fn staircases(max_boxes: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(rows: &mut Vec<usize>, left: usize, cap: usize, out: &mut Vec<Vec<usize>>) {
        out.push(rows.clone());
        for r in 1..=left.min(cap) {
            rows.push(r);
            rec(rows, left - r, r, out);
            rows.pop();
        }
    }
    let mut parts = Vec::new();
    rec(&mut Vec::new(), max_boxes, max_boxes, &mut parts);
    parts
        .into_iter()
        .map(|rows| {
            rows.iter().enumerate().flat_map(|(v, &len)| (0..len).map(move |u| (u, v))).collect()
        })
        .collect()
}

/// Weight of a cell: the skyscraper count of its class `u·η_1 + v·η_2`.
pub fn cell_weights(fan: &StackyFan, pol: &Polarization, cone: usize, size: usize) -> Result<Vec<Vec<usize>>> {
    let chart = fan.chart(cone)?;
    let mut out = vec![vec![0; size]; size];
    for (u, row) in out.iter_mut().enumerate() {
        for (v, cell) in row.iter_mut().enumerate() {
            let class = chart.class_i64(&[u as i64, v as i64]);
            *cell = skyscraper_chi(fan, pol, cone, &class)?;
        }
    }
    Ok(out)
}

/// `Σ_λ t^{w(λ)}` over staircases at one fixed point, truncated at `order`.
pub fn chart_series(fan: &StackyFan, pol: &Polarization, cone: usize, order: usize) -> Result<QSeries> {
    if fan.d != 2 {
        return Err(Error::Unsupported("generating functions need a surface fan".into()));
    }
    let chart = fan.chart(cone)?;
    for alpha in chart.group.elements() {
        if skyscraper_chi(fan, pol, cone, &alpha)? == 0 {
            return Err(Error::NonFiniteCoefficient {
                cone,
                alpha: alpha.iter().map(|x| x.to_string()).collect(),
            });
        }
    }
    let weights = cell_weights(fan, pol, cone, order + 1)?;
    let mut s = QSeries { leading: BigRational::zero(), coeffs: vec![BigInt::zero(); order + 1] };
    for st in staircases(order) {
        let w: usize = st.iter().map(|&(u, v)| weights[u][v]).sum();
        if w <= order {
            s.coeffs[w] += 1;
        }
    }
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZOracle {
    pub series: QSeries,
    pub per_chart: Vec<QSeries>,
    pub chi0: BigInt,
}

/// Product of per-chart staircase series, leading power `Σ_k h^0(L_{c_1 - B^{(k)}})`.
pub fn z_oracle(fan: &StackyFan, pol: &Polarization, c1: &[i64], order: usize) -> Result<ZOracle> {
    if c1.len() != fan.n() {
        return Err(Error::InvalidArgument(format!("c1 needs {} entries", fan.n())));
    }
    let per_chart = (0..fan.cones.len())
        .into_par_iter()
        .map(|c| chart_series(fan, pol, c, order))
        .collect::<Result<Vec<_>>>()?;
    let chi0 = chi0_lattice(fan, pol, c1)?;
    let series = per_chart
        .iter()
        .fold(QSeries::one(order), |acc, s| acc.mul(s))
        .with_leading(BigRational::from_integer(chi0.clone()));
    Ok(ZOracle { series, per_chart, chi0 })
}

/// Counts tuples of staircases, one per chart, by total weight up to `order`.
pub fn z_global(fan: &StackyFan, pol: &Polarization, order: usize) -> Result<Vec<BigInt>> {
    let mut per_chart = Vec::new();
    for c in 0..fan.cones.len() {
        chart_series(fan, pol, c, order)?;
        let weights = cell_weights(fan, pol, c, order + 1)?;
        let ws: Vec<usize> = staircases(order)
            .iter()
            .map(|st| st.iter().map(|&(u, v)| weights[u][v]).sum())
            .filter(|&w| w <= order)
            .collect();
        per_chart.push(ws);
    }
    fn rec(charts: &[Vec<usize>], budget: usize, used: usize, out: &mut [BigInt]) {
        let Some((first, rest)) = charts.split_first() else {
            out[used] += 1;
            return;
        };
        for &w in first {
            if used + w <= budget {
                rec(rest, budget, used + w, out);
            }
        }
    }
    let mut out = vec![BigInt::zero(); order + 1];
    rec(&per_chart, order, 0, &mut out);
    Ok(out)
}

/// Weights `(a, b, c)` of a fan whose Gale dual is `Z` with positive images, and the
/// degree `x` with `L_B = O(x)`, which is `-β^∨ · B`.
pub fn wps_weights(fan: &StackyFan, b: &[i64]) -> Result<Option<([i64; 3], i64)>> {
    let (dg, _) = fan.gale_dual()?;
    if fan.n() != 3 || dg.free_rank() != 1 || !dg.torsion().is_empty() {
        return Ok(None);
    }
    let imgs = fan.beta_dual_images()?;
    let w: Vec<i64> = imgs.iter().map(|v| v[0].to_i64().unwrap_or(0)).collect();
    if w.iter().any(|&x| x <= 0) {
        return Ok(None);
    }
    let x = -w.iter().zip(b).map(|(p, q)| p * q).sum::<i64>();
    Ok(Some(([w[0], w[1], w[2]], x)))
}

/// Oracle χ on a weighted projective plane when `x` is in the vanishing range.
pub fn wps_oracle_chi(weights: [i64; 3], x: i64) -> Option<BigInt> {
    wps_chi_oracle(weights[0], weights[1], weights[2], x).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(s: &QSeries) -> Vec<i64> {
        s.coeffs.iter().map(|c| c.to_i64().unwrap()).collect()
    }

    fn p2() -> StackyFan {
        StackyFan::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, -1]], vec![vec![0, 1], vec![1, 2], vec![2, 0]])
    }

    #[test]
    fn series_factors() {
        let s = QSeries::one(3).inv_factor(1, 1).unwrap();
        assert_eq!(ints(&s), vec![1, 1, 1, 1]);
        let s = QSeries::one(2).inv_factor(1, 3).unwrap();
        assert_eq!(ints(&s), vec![1, 3, 6]);
        let x = QSeries::one(2).inv_factor(2, 1).unwrap();
        assert_eq!(x.mul(&QSeries::one(2)), x);
        assert!(QSeries::one(2).inv_factor(0, 1).is_err());
    }

    #[test]
    fn plane_products() {
        let s = wps_z_closed(1, 1, 1, 0, 5).unwrap();
        assert_eq!(ints(&s), vec![1, 3, 9, 22, 51, 108]);
        assert_eq!(s.leading, BigRational::one());
        let s = wps_z_closed(1, 1, 1, 0, 0).unwrap();
        assert_eq!(ints(&s), vec![1]);
    }

    #[test]
    fn staircase_counts() {
        let counts: Vec<usize> = (0..6)
            .map(|n| staircases(n).iter().filter(|s| s.len() == n).count())
            .collect();
        assert_eq!(counts, vec![1, 1, 2, 3, 5, 7]);
    }

    #[test]
    fn oracle_on_the_plane() {
        let f = p2();
        let pol = Polarization::standard(&f);
        let z = z_oracle(&f, &pol, &[0, 0, 0], 3).unwrap();
        // Each cell weighs 3 on P^2 with three summands.
        assert_eq!(ints(&z.series), vec![1, 0, 0, 3]);
        let unit = Polarization { h: pol.h.clone(), xi: vec![pol.xi[0].clone()] };
        let z = z_oracle(&f, &unit, &[0, 0, 0], 3).unwrap();
        assert_eq!(ints(&z.series), vec![1, 3, 9, 22]);
        assert_eq!(z_oracle(&f, &unit, &[0, 0, 0], 0).unwrap().series.coeffs, vec![BigInt::one()]);
        assert_eq!(z_global(&f, &unit, 3).unwrap(), z.series.coeffs);
    }

    #[test]
    fn weights_of_planes() {
        let f = StackyFan::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, -2]], vec![vec![0, 1], vec![1, 2], vec![2, 0]]);
        assert_eq!(wps_weights(&f, &[1, 0, 0]).unwrap(), Some(([1, 2, 1], -1)));
        assert_eq!(wps_weights(&f, &[0, -1, 0]).unwrap(), Some(([1, 2, 1], 2)));
    }
}
