//! Equivariant sheaf data on charts as finite windows of graded vector spaces.
//!
//! A window stores, at each cover exponent `x` of a chart, the multiset of fine-grading
//! characters `n ∈ DG_σ` of a basis of the weight space. The box summand of an element
//! is `n - [x]`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abgrp::{hom_kernel, GroupHom};
use crate::chartglue::{intersect, ChartIntersection, Side};
use crate::error::{Error, Result};
use crate::intlinalg::IntMatrix;
use crate::stackyfan::{BoxElement, Chart, StackyFan};

/// Multiset of characters in normalized coordinates.
pub type CharMultiset = BTreeMap<Vec<BigInt>, usize>;

fn add_to(ms: &mut CharMultiset, key: Vec<BigInt>, mult: usize) {
    if mult > 0 {
        *ms.entry(key).or_insert(0) += mult;
    }
}

fn total(ms: &CharMultiset) -> usize {
    ms.values().sum()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SFamilyWindow {
    pub cone: usize,
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    /// Per axis, dims are constant (up to the `η_k` shift of characters) from here on.
    pub saturation: Vec<i64>,
    /// Only nonzero positions are stored.
    pub dims: BTreeMap<Vec<i64>, CharMultiset>,
}

/// All integer points of the box `[lo, hi]`, lexicographic.
pub fn box_points(lo: &[i64], hi: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for (l, h) in lo.iter().zip(hi) {
        let mut next = Vec::new();
        for p in &out {
            for v in *l..=*h {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn to_big(x: &[i64]) -> Vec<BigInt> {
    x.iter().map(|&v| BigInt::from(v)).collect()
}

impl SFamilyWindow {
    pub fn empty(cone: usize, lo: Vec<i64>, hi: Vec<i64>, saturation: Vec<i64>) -> Self {
        SFamilyWindow { cone, lo, hi, saturation, dims: BTreeMap::new() }
    }

    pub fn d(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.iter().zip(&self.lo).zip(&self.hi).all(|((v, l), h)| l <= v && v <= h)
    }

    pub fn chars_at(&self, x: &[i64]) -> CharMultiset {
        self.dims.get(x).cloned().unwrap_or_default()
    }

    pub fn dim_at(&self, x: &[i64]) -> usize {
        self.dims.get(x).map_or(0, total)
    }

    pub fn points(&self) -> Vec<Vec<i64>> {
        box_points(&self.lo, &self.hi)
    }

    /// Characters at an arbitrary exponent. Axes flagged in `localize`, and axes past
    /// saturation, are read at the saturation slice and shifted by `η_k`.
    pub fn read(&self, chart: &Chart, x: &[i64], localize: &[bool]) -> Result<CharMultiset> {
        let mut y = x.to_vec();
        for k in 0..self.d() {
            if localize[k] || x[k] > self.saturation[k] {
                if self.saturation[k] > self.hi[k] || self.saturation[k] < self.lo[k] {
                    return Err(Error::InsufficientSaturation { cone: self.cone, axis: k });
                }
                y[k] = self.saturation[k];
            } else if x[k] < self.lo[k] {
                return Err(Error::InsufficientSaturation { cone: self.cone, axis: k });
            }
        }
        let shift: Vec<BigInt> = x.iter().zip(&y).map(|(a, b)| BigInt::from(a - b)).collect();
        let mut out = CharMultiset::new();
        for (n, m) in self.chars_at(&y) {
            let raw: Vec<BigInt> = chart.group.lift(&n).iter().zip(&shift).map(|(a, b)| a + b).collect();
            add_to(&mut out, chart.class(&raw), m);
        }
        Ok(out)
    }

    /// Adds `eps` to every fine-grading character.
    pub fn twist(&self, chart: &Chart, eps: &[BigInt]) -> SFamilyWindow {
        let mut out = self.clone();
        out.dims = self
            .dims
            .iter()
            .map(|(x, ms)| {
                let mut nm = CharMultiset::new();
                for (n, m) in ms {
                    add_to(&mut nm, chart.group.add(n, eps), *m);
                }
                (x.clone(), nm)
            })
            .collect();
        out
    }

    /// Translates positions and window by `t`; characters move by `[t]`.
    pub fn translate(&self, chart: &Chart, t: &[i64]) -> SFamilyWindow {
        let shift = chart.class_i64(t);
        let mv = |v: &[i64]| v.iter().zip(t).map(|(a, b)| a + b).collect::<Vec<_>>();
        let mut out = SFamilyWindow::empty(self.cone, mv(&self.lo), mv(&self.hi), mv(&self.saturation));
        for (x, ms) in &self.dims {
            let mut nm = CharMultiset::new();
            for (n, m) in ms {
                add_to(&mut nm, chart.group.add(n, &shift), *m);
            }
            out.dims.insert(mv(x), nm);
        }
        out
    }

    /// Pointwise direct sum; windows must agree.
    pub fn direct_sum(&self, other: &SFamilyWindow) -> SFamilyWindow {
        assert_eq!(self.lo, other.lo);
        assert_eq!(self.hi, other.hi);
        let mut out = self.clone();
        out.saturation = self.saturation.iter().zip(&other.saturation).map(|(a, b)| *a.max(b)).collect();
        for (x, ms) in &other.dims {
            let e = out.dims.entry(x.clone()).or_default();
            for (n, m) in ms {
                add_to(e, n.clone(), *m);
            }
        }
        out
    }

    /// Structural failures: monotonicity and saturation.
    pub fn audit(&self, chart: &Chart) -> Vec<String> {
        let mut out = Vec::new();
        for x in self.points() {
            let here = self.dim_at(&x);
            for k in 0..self.d() {
                if x[k] < self.hi[k] {
                    let mut y = x.clone();
                    y[k] += 1;
                    if self.dim_at(&y) < here {
                        out.push(format!("dimension drops along axis {k} at {x:?}"));
                    }
                }
                if x[k] > self.saturation[k] && self.saturation[k] >= self.lo[k] {
                    let mut y = x.clone();
                    y[k] = self.saturation[k];
                    let mut expected = CharMultiset::new();
                    let mut step = vec![BigInt::zero(); self.d()];
                    step[k] = BigInt::from(x[k] - self.saturation[k]);
                    for (n, m) in self.chars_at(&y) {
                        let raw: Vec<BigInt> = chart.group.lift(&n).iter().zip(&step).map(|(a, b)| a + b).collect();
                        add_to(&mut expected, chart.class(&raw), m);
                    }
                    if expected != self.chars_at(&x) {
                        out.push(format!("not saturated along axis {k} at {x:?}"));
                    }
                }
            }
        }
        out
    }

    /// Box-summand key `n - [x]` of each element.
    pub fn box_keys(&self, chart: &Chart) -> BTreeMap<Vec<BigInt>, usize> {
        let mut keys = BTreeMap::new();
        for (x, ms) in &self.dims {
            let cx = chart.class_i64(x);
            for (n, m) in ms {
                *keys.entry(chart.group.add(n, &chart.group.neg(&cx))).or_insert(0) += m;
            }
        }
        keys
    }
}

/// Splits a window by box summand.
pub fn box_decompose(chart: &Chart, w: &SFamilyWindow) -> BTreeMap<Vec<BigInt>, SFamilyWindow> {
    let mut out: BTreeMap<Vec<BigInt>, SFamilyWindow> = BTreeMap::new();
    for (x, ms) in &w.dims {
        let cx = chart.class_i64(x);
        for (n, m) in ms {
            let key = chart.group.add(n, &chart.group.neg(&cx));
            let part = out
                .entry(key)
                .or_insert_with(|| SFamilyWindow::empty(w.cone, w.lo.clone(), w.hi.clone(), w.saturation.clone()));
            add_to(part.dims.entry(x.clone()).or_default(), n.clone(), *m);
        }
    }
    out
}

/// `L_B` for `B ∈ Z^n`, one integer per ray.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EquivariantLineBundle {
    #[serde(rename = "B")]
    pub b: Vec<i64>,
}

impl EquivariantLineBundle {
    pub fn new(b: Vec<i64>) -> Self {
        EquivariantLineBundle { b }
    }

    pub fn tensor(&self, other: &EquivariantLineBundle) -> Self {
        EquivariantLineBundle { b: self.b.iter().zip(&other.b).map(|(x, y)| x + y).collect() }
    }

    /// Restriction to a cone: the entries of its rays, in stored order.
    pub fn slice(&self, fan: &StackyFan, cone: usize) -> Vec<i64> {
        fan.cones[cone].iter().map(|&r| self.b[r]).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineBundleChartData {
    pub box_element: BoxElement,
    /// Integral part `A` of `M^{-1} s`.
    pub generator: Vec<BigInt>,
    pub fine_grading: Vec<BigInt>,
    /// Cover exponent of the generator.
    pub position: Vec<i64>,
}

fn check_length(fan: &StackyFan, b: &EquivariantLineBundle) -> Result<()> {
    if b.b.len() != fan.n() {
        return Err(Error::InvalidArgument(format!("B has {} entries, the fan has {} rays", b.b.len(), fan.n())));
    }
    Ok(())
}

pub fn line_bundle_chart_data(fan: &StackyFan, b: &EquivariantLineBundle, cone: usize) -> Result<LineBundleChartData> {
    check_length(fan, b)?;
    let chart = fan.chart(cone)?;
    let s = b.slice(fan, cone);
    let sb = to_big(&s);
    let (_, a) = chart.split(&sb);
    Ok(LineBundleChartData {
        box_element: chart.box_element(&sb),
        generator: a,
        fine_grading: chart.class(&sb),
        position: s,
    })
}

pub fn line_bundle_window(
    fan: &StackyFan,
    b: &EquivariantLineBundle,
    cone: usize,
    lo: &[i64],
    hi: &[i64],
) -> Result<SFamilyWindow> {
    check_length(fan, b)?;
    check_bounds(fan, lo, hi)?;
    let chart = fan.chart(cone)?;
    let s = b.slice(fan, cone);
    let mut w = SFamilyWindow::empty(cone, lo.to_vec(), hi.to_vec(), s.clone());
    if !w.contains(&s) {
        return Err(Error::WindowExcludesGenerator);
    }
    for x in w.points() {
        if x.iter().zip(&s).all(|(a, g)| a >= g) {
            let mut ms = CharMultiset::new();
            add_to(&mut ms, chart.class_i64(&x), 1);
            w.dims.insert(x, ms);
        }
    }
    Ok(w)
}

fn check_bounds(fan: &StackyFan, lo: &[i64], hi: &[i64]) -> Result<()> {
    if lo.len() != fan.d || hi.len() != fan.d {
        return Err(Error::InvalidArgument(format!("window corners need {} coordinates", fan.d)));
    }
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return Err(Error::InvalidArgument("window has lo > hi".into()));
    }
    Ok(())
}

/// Fine gradings of `L_B` on every chart, checked against the overlap congruences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FineGradingSolution {
    pub gradings: Vec<Vec<BigInt>>,
    /// Number of tuples of gradings satisfying the same congruences.
    pub ambiguity: BigInt,
}

pub fn fine_gradings(fan: &StackyFan, b: &EquivariantLineBundle) -> Result<FineGradingSolution> {
    check_length(fan, b)?;
    let charts = fan.charts()?;
    let d = fan.d;
    let gradings: Vec<Vec<BigInt>> =
        (0..charts.len()).map(|c| charts[c].class_i64(&b.slice(fan, c))).collect();
    let pairs = fan.cone_pairs();
    let mut targets = Vec::new();
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    for &(i, j) in &pairs {
        let ci = intersect(fan, i, j)?;
        let s_i = ci.to_aligned(Side::First, &to_big(&b.slice(fan, i)));
        let s_j = ci.to_aligned(Side::Second, &to_big(&b.slice(fan, j)));
        let v: Vec<BigInt> = ci
            .c
            .mul_vec(&s_i)
            .iter()
            .zip(ci.a.mul_vec(&s_j))
            .map(|(x, y)| x - y)
            .collect();
        let rhs = ci.mu_combination(&v);
        let lhs: Vec<BigInt> = ci
            .iota(Side::First, &charts[i].group.lift(&gradings[i]))
            .iter()
            .zip(ci.iota(Side::Second, &charts[j].group.lift(&gradings[j])))
            .map(|(x, y)| x - y)
            .collect();
        let diff: Vec<BigInt> = lhs.iter().zip(&rhs).map(|(x, y)| x - y).collect();
        if !ci.k_chars.is_zero_class(&diff) {
            return Err(Error::Internal(format!("fine gradings fail the congruence on cones {i},{j}")));
        }
        for r in 0..2 * d {
            let mut row = vec![BigInt::zero(); d * charts.len()];
            let (cone, col) = if r < d { (i, r) } else { (j, r - d) };
            row[cone * d + col] = BigInt::one();
            rows.push(row);
        }
        targets.push(ci.k_chars);
    }
    let source = charts.iter().skip(1).fold(charts[0].group.clone(), |acc, c| acc.direct_sum(&c.group));
    let ambiguity = if pairs.is_empty() {
        source.order().unwrap_or_else(BigInt::zero)
    } else {
        let target = targets.iter().skip(1).fold(targets[0].clone(), |acc, g| acc.direct_sum(g));
        let hom = GroupHom::new(source, target, IntMatrix::from_rows(&rows, d * charts.len()))?;
        hom_kernel(&hom)?.0.order().unwrap_or_else(BigInt::zero)
    };
    Ok(FineGradingSolution { gradings, ambiguity })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GlueFailure {
    pub point: Vec<i64>,
    pub lhs: Vec<(Vec<String>, usize)>,
    pub rhs: Vec<(Vec<String>, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GlueReport {
    pub i: usize,
    pub j: usize,
    pub points: usize,
    pub ok: bool,
    pub first_failure: Option<GlueFailure>,
}

fn side_value(
    ci: &ChartIntersection,
    side: Side,
    w: &SFamilyWindow,
    v: &[BigInt],
) -> Result<CharMultiset> {
    let s = ci.n_shared();
    let chart = ci.chart(side);
    let (x_al, a_idx) = ci.decompose(side, v);
    let x = ci.to_stored(side, &x_al);
    let mut localize = vec![false; ci.d()];
    for (slot, &stored) in ci.perm(side).iter().enumerate() {
        localize[stored] = slot >= s;
    }
    let x64: Vec<i64> = x.iter().map(|t| t.to_i64().expect("exponent fits")).collect();
    let ms = w.read(chart, &x64, &localize)?;
    let mut a_full = vec![BigInt::zero(); ci.d()];
    for (k, ak) in ci.basis(side)[a_idx].iter().enumerate() {
        a_full[s + k] = ak.clone();
    }
    let twist = ci.mu_combination(&a_full);
    let mut out = CharMultiset::new();
    for (n, m) in ms {
        let raw: Vec<BigInt> = ci
            .iota(side, &chart.group.lift(&n))
            .iter()
            .zip(&twist)
            .map(|(p, q)| p + q)
            .collect();
        add_to(&mut out, ci.k_chars.normalize(&raw), m);
    }
    Ok(out)
}

fn render(ms: &CharMultiset) -> Vec<(Vec<String>, usize)> {
    ms.iter().map(|(k, m)| (k.iter().map(|x| x.to_string()).collect(), *m)).collect()
}

/// Compares both sides of the overlap equality at every exponent of `[tlo, thi]`
/// (overlap coordinates).
pub fn glue_check(
    ci: &ChartIntersection,
    wi: &SFamilyWindow,
    wj: &SFamilyWindow,
    tlo: &[i64],
    thi: &[i64],
) -> Result<GlueReport> {
    let pts = box_points(tlo, thi);
    let mut report = GlueReport { i: ci.i, j: ci.j, points: pts.len(), ok: true, first_failure: None };
    for p in pts {
        let v = to_big(&p);
        let lhs = side_value(ci, Side::First, wi, &v)?;
        let rhs = side_value(ci, Side::Second, wj, &v)?;
        if lhs != rhs {
            report.ok = false;
            report.first_failure = Some(GlueFailure { point: p, lhs: render(&lhs), rhs: render(&rhs) });
            break;
        }
    }
    Ok(report)
}

/// Default test box: shared coordinates over the common window range, overlap
/// coordinates over a symmetric range wide enough to meet every coset.
pub fn default_test_box(ci: &ChartIntersection, wi: &SFamilyWindow, wj: &SFamilyWindow) -> (Vec<i64>, Vec<i64>) {
    let s = ci.n_shared();
    let det_c = ci.c_pp().det().to_i64().unwrap_or(1).abs();
    let det_a = ci.a_pp().det().to_i64().unwrap_or(1).abs();
    let r = det_c.max(det_a).max(1) + 2;
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for k in 0..ci.d() {
        if k < s {
            let (pi, pj) = (ci.perm_i[k], ci.perm_j[k]);
            lo.push(wi.lo[pi].max(wj.lo[pj]));
            hi.push(wi.hi[pi].min(wj.hi[pj]));
        } else {
            lo.push(-r);
            hi.push(r);
        }
    }
    (lo, hi)
}

/// Checks every pair of top cones in parallel; reports are in pair order.
pub fn glue_check_all(fan: &StackyFan, windows: &[SFamilyWindow]) -> Result<Vec<GlueReport>> {
    if windows.len() != fan.cones.len() {
        return Err(Error::InvalidArgument("one window per top cone is required".into()));
    }
    fan.cone_pairs()
        .par_iter()
        .map(|&(i, j)| {
            let ci = intersect(fan, i, j)?;
            let (tlo, thi) = default_test_box(&ci, &windows[i], &windows[j]);
            glue_check(&ci, &windows[i], &windows[j], &tlo, &thi)
        })
        .collect()
}

/// Default window around a rank-1 or rank-2 family: two steps below the lowest
/// generator and two beyond saturation.
pub fn default_window(gen: &[i64], sat: &[i64]) -> (Vec<i64>, Vec<i64>) {
    (gen.iter().map(|g| g - 2).collect(), sat.iter().map(|s| s + 2).collect())
}

/// Line-bundle windows on every chart with the default margins.
pub fn line_bundle_windows(fan: &StackyFan, b: &EquivariantLineBundle) -> Result<Vec<SFamilyWindow>> {
    check_length(fan, b)?;
    (0..fan.cones.len())
        .map(|c| {
            let s = b.slice(fan, c);
            let (lo, hi) = default_window(&s, &s);
            line_bundle_window(fan, b, c, &lo, &hi)
        })
        .collect()
}

/// A point of `P^1`, or a symbolic generic point distinct from every other point.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum P1Point {
    Point(i64, i64),
    Generic(usize),
}

impl P1Point {
    /// Divides `(x:y)` by the gcd and makes the first nonzero coordinate positive.
    pub fn new(x: i64, y: i64) -> Result<P1Point> {
        if x == 0 && y == 0 {
            return Err(Error::InvalidArgument("(0:0) is not a point of P^1".into()));
        }
        let g = x.gcd(&y);
        let (mut x, mut y) = (x / g, y / g);
        if x < 0 || (x == 0 && y < 0) {
            x = -x;
            y = -y;
        }
        Ok(P1Point::Point(x, y))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rank2ReflexiveData {
    pub a: Vec<i64>,
    pub lam: Vec<i64>,
    pub p: Vec<P1Point>,
}

impl Rank2ReflexiveData {
    pub fn new(a: Vec<i64>, lam: Vec<i64>, p: Vec<P1Point>) -> Result<Self> {
        if a.len() != lam.len() || a.len() != p.len() {
            return Err(Error::InvalidArgument("A, lambda and p must have one entry per ray".into()));
        }
        if lam.iter().any(|&l| l < 0) {
            return Err(Error::InvalidArgument("lambda entries must be non-negative".into()));
        }
        Ok(Rank2ReflexiveData { a, lam, p })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn tensor(&self, b: &EquivariantLineBundle) -> Self {
        Rank2ReflexiveData {
            a: self.a.iter().zip(&b.b).map(|(x, y)| x + y).collect(),
            lam: self.lam.clone(),
            p: self.p.clone(),
        }
    }

    /// The filtration of ray `r` at level `l`: `None` for zero, `Some(None)` for the
    /// whole plane, `Some(Some(p))` for the line `p`.
    fn step(&self, r: usize, l: i64) -> Option<Option<&P1Point>> {
        if l < self.a[r] {
            None
        } else if l < self.a[r] + self.lam[r] {
            Some(Some(&self.p[r]))
        } else {
            Some(None)
        }
    }

    /// `dim ∩_k E^{σ(k)}(x_k)`.
    pub fn dim_at(&self, cone: &[usize], x: &[i64]) -> usize {
        let mut line: Option<&P1Point> = None;
        for (&r, &l) in cone.iter().zip(x) {
            match self.step(r, l) {
                None => return 0,
                Some(None) => {}
                Some(Some(p)) => match line {
                    None => line = Some(p),
                    Some(q) if q == p => {}
                    Some(_) => return 0,
                },
            }
        }
        if line.is_some() {
            1
        } else {
            2
        }
    }

    pub fn window(&self, fan: &StackyFan, cone: usize, lo: &[i64], hi: &[i64]) -> Result<SFamilyWindow> {
        if self.n() != fan.n() {
            return Err(Error::InvalidArgument(format!("data has {} rays, the fan has {}", self.n(), fan.n())));
        }
        check_bounds(fan, lo, hi)?;
        let chart = fan.chart(cone)?;
        let rays = &fan.cones[cone];
        let sat: Vec<i64> = rays.iter().map(|&r| self.a[r] + self.lam[r]).collect();
        let mut w = SFamilyWindow::empty(cone, lo.to_vec(), hi.to_vec(), sat);
        for x in w.points() {
            let dim = self.dim_at(rays, &x);
            if dim > 0 {
                let mut ms = CharMultiset::new();
                add_to(&mut ms, chart.class_i64(&x), dim);
                w.dims.insert(x, ms);
            }
        }
        Ok(w)
    }

    pub fn windows(&self, fan: &StackyFan) -> Result<Vec<SFamilyWindow>> {
        (0..fan.cones.len())
            .map(|c| {
                let rays = &fan.cones[c];
                let gen: Vec<i64> = rays.iter().map(|&r| self.a[r]).collect();
                let sat: Vec<i64> = rays.iter().map(|&r| self.a[r] + self.lam[r]).collect();
                let (lo, hi) = default_window(&gen, &sat);
                self.window(fan, c, &lo, &hi)
            })
            .collect()
    }

    /// Distinct filtration lines among rays with a nontrivial jump, first-seen order.
    pub fn distinct_lines(&self) -> Vec<P1Point> {
        let mut out: Vec<P1Point> = Vec::new();
        for (p, &l) in self.p.iter().zip(&self.lam) {
            if l > 0 && !out.contains(p) {
                out.push(p.clone());
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposability {
    pub decomposable: bool,
    /// Splitting basis of `C^2` when decomposable.
    pub witness: Option<(P1Point, P1Point)>,
}

pub fn rank2_decomposable(data: &Rank2ReflexiveData) -> Decomposability {
    let lines = data.distinct_lines();
    let e1 = P1Point::Point(1, 0);
    let e2 = P1Point::Point(0, 1);
    let witness = match lines.len() {
        0 => Some((e1, e2)),
        1 => {
            let other = if lines[0] == e1 { e2 } else { e1 };
            Some((lines[0].clone(), other))
        }
        2 => Some((lines[0].clone(), lines[1].clone())),
        _ => None,
    };
    Decomposability { decomposable: witness.is_some(), witness }
}

/// Rank-1 torsion-free sheaf: `L_B` with a finite monomial colength at each fixed point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rank1TorsionFreeData {
    pub b: Vec<i64>,
    /// Per top cone, boxes removed below the generator, relative to it (stored order).
    pub staircases: Vec<Vec<Vec<i64>>>,
}

impl Rank1TorsionFreeData {
    pub fn new(b: Vec<i64>, staircases: Vec<Vec<Vec<i64>>>) -> Result<Self> {
        for (c, st) in staircases.iter().enumerate() {
            for bx in st {
                if bx.iter().any(|&v| v < 0) {
                    return Err(Error::InvalidArgument(format!("staircase {c} has a negative box")));
                }
                for k in 0..bx.len() {
                    if bx[k] > 0 {
                        let mut below = bx.clone();
                        below[k] -= 1;
                        if !st.contains(&below) {
                            return Err(Error::InvalidArgument(format!("staircase {c} is not downward closed")));
                        }
                    }
                }
            }
        }
        Ok(Rank1TorsionFreeData { b, staircases })
    }

    pub fn windows(&self, fan: &StackyFan) -> Result<Vec<SFamilyWindow>> {
        if self.staircases.len() != fan.cones.len() {
            return Err(Error::InvalidArgument("one staircase per top cone is required".into()));
        }
        let lb = EquivariantLineBundle::new(self.b.clone());
        check_length(fan, &lb)?;
        (0..fan.cones.len())
            .map(|c| {
                let s = lb.slice(fan, c);
                let st = &self.staircases[c];
                if st.iter().any(|bx| bx.len() != fan.d) {
                    return Err(Error::InvalidArgument(format!("staircase {c} boxes need {} coordinates", fan.d)));
                }
                let mut top = s.clone();
                for bx in st {
                    for k in 0..fan.d {
                        top[k] = top[k].max(s[k] + bx[k] + 1);
                    }
                }
                let (lo, hi) = default_window(&s, &top);
                let mut w = line_bundle_window(fan, &lb, c, &lo, &hi)?;
                for bx in st {
                    let x: Vec<i64> = s.iter().zip(bx).map(|(a, b)| a + b).collect();
                    w.dims.remove(&x);
                }
                w.saturation = top;
                Ok(w)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartFunction {
    pub cone: usize,
    pub box_key: Vec<BigInt>,
    pub m: IntMatrix,
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    pub saturation: Vec<i64>,
    pub dims: BTreeMap<Vec<i64>, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharacteristicFunction {
    pub charts: Vec<ChartFunction>,
}

pub fn characteristic_function(fan: &StackyFan, windows: &[SFamilyWindow]) -> Result<CharacteristicFunction> {
    let mut charts = Vec::new();
    for w in windows {
        let chart = fan.chart(w.cone)?;
        let keys = chart_keys(&chart, w)?;
        charts.push(ChartFunction {
            cone: w.cone,
            box_key: keys,
            m: chart.m.clone(),
            lo: w.lo.clone(),
            hi: w.hi.clone(),
            saturation: w.saturation.clone(),
            dims: w.dims.iter().map(|(x, ms)| (x.clone(), total(ms))).collect(),
        });
    }
    Ok(CharacteristicFunction { charts })
}

fn chart_keys(chart: &Chart, w: &SFamilyWindow) -> Result<Vec<BigInt>> {
    let keys = w.box_keys(chart);
    match keys.len() {
        0 => Ok(chart.group.zero()),
        1 => Ok(keys.into_keys().next().expect("one key")),
        _ => Err(Error::DecomposableCandidate(w.cone)),
    }
}

/// The character `u` that [`frame`] tensors by; positions move by `M_σ u`.
pub fn frame_shift(cf: &CharacteristicFunction) -> Option<Vec<BigInt>> {
    let first = cf.charts.first()?;
    let corner: Vec<BigInt> = to_big(&first.saturation);
    let det = first.m.det();
    let t = first.m.adjugate().mul_vec(&corner);
    Some(t.iter().map(|x| -BigRational::new(x.clone(), det.clone()).floor().to_integer()).collect())
}

/// Twists so that the first chart's saturation corner lies in the fundamental
/// parallelepiped of its weight matrix.
pub fn frame(cf: &CharacteristicFunction) -> CharacteristicFunction {
    let Some(u) = frame_shift(cf) else { return cf.clone() };
    let charts = cf
        .charts
        .iter()
        .map(|c| {
            let shift: Vec<i64> = c.m.mul_vec(&u).iter().map(|x| x.to_i64().expect("shift fits")).collect();
            let mv = |v: &[i64]| v.iter().zip(&shift).map(|(a, b)| a + b).collect::<Vec<_>>();
            ChartFunction {
                cone: c.cone,
                box_key: c.box_key.clone(),
                m: c.m.clone(),
                lo: mv(&c.lo),
                hi: mv(&c.hi),
                saturation: mv(&c.saturation),
                dims: c.dims.iter().map(|(x, v)| (mv(x), *v)).collect(),
            }
        })
        .collect();
    CharacteristicFunction { charts }
}

/// Sheaf file contents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SheafData {
    LineBundle(EquivariantLineBundle),
    Rank2(Rank2ReflexiveData),
    Rank1Tf(Rank1TorsionFreeData),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PointSpec {
    Pair([i64; 2]),
    Token(String),
}

#[derive(Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum SheafFile {
    #[serde(rename = "line_bundle")]
    LineBundle {
        #[serde(rename = "B")]
        b: Vec<i64>,
    },
    #[serde(rename = "rank2_reflexive")]
    Rank2 {
        #[serde(rename = "A")]
        a: Vec<i64>,
        lambda: Vec<i64>,
        p: Vec<PointSpec>,
    },
    #[serde(rename = "rank1_tf")]
    Rank1Tf {
        #[serde(rename = "B")]
        b: Vec<i64>,
        staircases: Vec<Vec<Vec<i64>>>,
    },
}

impl SheafData {
    pub fn from_json(text: &str) -> Result<SheafData> {
        let f: SheafFile = serde_json::from_str(text).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        match f {
            SheafFile::LineBundle { b } => Ok(SheafData::LineBundle(EquivariantLineBundle::new(b))),
            SheafFile::Rank2 { a, lambda, p } => {
                let pts = p
                    .into_iter()
                    .enumerate()
                    .map(|(k, s)| match s {
                        PointSpec::Pair([x, y]) => P1Point::new(x, y),
                        PointSpec::Token(t) if t == "generic" => Ok(P1Point::Generic(k)),
                        PointSpec::Token(t) => Err(Error::InvalidArgument(format!("unknown point token {t:?}"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(SheafData::Rank2(Rank2ReflexiveData::new(a, lambda, pts)?))
            }
            SheafFile::Rank1Tf { b, staircases } => Ok(SheafData::Rank1Tf(Rank1TorsionFreeData::new(b, staircases)?)),
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            SheafData::Rank2(_) => 2,
            _ => 1,
        }
    }

    pub fn windows(&self, fan: &StackyFan) -> Result<Vec<SFamilyWindow>> {
        match self {
            SheafData::LineBundle(b) => line_bundle_windows(fan, b),
            SheafData::Rank2(r) => r.windows(fan),
            SheafData::Rank1Tf(t) => t.windows(fan),
        }
    }

    /// Windows with explicit corners shared by every chart.
    pub fn windows_in(&self, fan: &StackyFan, lo: &[i64], hi: &[i64]) -> Result<Vec<SFamilyWindow>> {
        match self {
            SheafData::LineBundle(b) => (0..fan.cones.len()).map(|c| line_bundle_window(fan, b, c, lo, hi)).collect(),
            SheafData::Rank2(r) => (0..fan.cones.len()).map(|c| r.window(fan, c, lo, hi)).collect(),
            SheafData::Rank1Tf(t) => {
                let mut out = Vec::new();
                for (c, w) in t.windows(fan)?.into_iter().enumerate() {
                    let lb = EquivariantLineBundle::new(t.b.clone());
                    let mut base = line_bundle_window(fan, &lb, c, lo, hi)?;
                    base.dims.retain(|x, _| w.dims.contains_key(x) || !w.contains(x));
                    base.saturation = w.saturation.clone();
                    out.push(base);
                }
                Ok(out)
            }
        }
    }
}

/// Convenience for tests and the CLI: all windows glue on every pair.
pub fn glues(fan: &StackyFan, windows: &[SFamilyWindow]) -> Result<bool> {
    Ok(glue_check_all(fan, windows)?.iter().all(|r| r.ok))
}
