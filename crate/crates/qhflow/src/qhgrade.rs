//! Quasi-homogeneous grading: types, degree computation, monomial bases and
//! trivial-degree sets, graded decompositions of polynomials and fields, and
//! the conservative/dissipative splitting of a quasi-homogeneous field.

use crate::error::{Error, Result};
use crate::ratpoly::{hamiltonian_field, Exp, PlanarField, SparsePolynomial};
use crate::scalar::Coeff;
use num_integer::Integer;
use std::collections::BTreeMap;
use std::fmt;

/// Quasi-homogeneous type `t = (t1, t2)`, positive and coprime.
#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord, Hash)]
pub struct QhType {
    t1: i64,
    t2: i64,
}

impl QhType {
    pub fn new(t1: i64, t2: i64) -> Result<Self> {
        if t1 <= 0 || t2 <= 0 || t1.gcd(&t2) != 1 {
            return Err(Error::InvalidType(t1, t2));
        }
        Ok(QhType { t1, t2 })
    }

    pub fn t1(self) -> i64 {
        self.t1
    }

    pub fn t2(self) -> i64 {
        self.t2
    }

    /// `|t| = t1 + t2`.
    pub fn weight(self) -> i64 {
        self.t1 + self.t2
    }
}

impl fmt::Display for QhType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.t1, self.t2)
    }
}

/// Degree of the monomial `x^i y^j`: `i·t1 + j·t2`.
pub fn qh_degree(exp: Exp, t: QhType) -> i64 {
    i64::from(exp.i) * t.t1 + i64::from(exp.j) * t.t2
}

/// Degrees `k >= 1` whose space of quasi-homogeneous polynomials is trivial,
/// listed up to `bound`. The set is complete once `bound >= t1·t2 − |t|`.
pub fn index_set_complement(t: QhType, bound: i64) -> Vec<i64> {
    let complete = (t.t1 * t.t2 - t.weight()).max(0);
    let hi = bound.max(complete);
    (1..=hi).filter(|&k| basis(t, k).is_empty()).filter(|&k| k <= hi).collect()
}

/// Monomial basis of the degree-`k` space, ordered by increasing y-exponent.
/// Empty exactly when the space is trivial.
pub fn basis(t: QhType, k: i64) -> Vec<Exp> {
    let mut out = Vec::new();
    if k < 0 {
        return out;
    }
    let mut j = 0i64;
    while j * t.t2 <= k {
        let rem = k - j * t.t2;
        if rem % t.t1 == 0 {
            out.push(Exp::new((rem / t.t1) as u32, j as u32));
        }
        j += 1;
    }
    out
}

/// Euler (dissipative) field `D0 = (t1·x, t2·y)`.
pub fn euler_field<C: Coeff>(t: QhType) -> PlanarField<C> {
    let mut c1 = C::zero();
    for _ in 0..t.t1 {
        c1 = c1 + C::one();
    }
    let mut c2 = C::zero();
    for _ in 0..t.t2 {
        c2 = c2 + C::one();
    }
    PlanarField::new(
        SparsePolynomial::monomial(1, 0, c1),
        SparsePolynomial::monomial(0, 1, c2),
    )
}

/// Keep only monomials of quasi-degree at most `max`.
pub fn qh_truncate<C: Coeff>(
    p: &SparsePolynomial<C>,
    t: QhType,
    max: i64,
) -> SparsePolynomial<C> {
    p.filter_terms(|e| qh_degree(e, t) <= max)
}

/// Substitution `x -> fx, y -> fy` truncated at quasi-degree `cap` during the
/// power accumulation. Exact for every kept degree because quasi-degrees only
/// add under multiplication.
pub fn compose_qh<C: Coeff>(
    p: &SparsePolynomial<C>,
    fx: &SparsePolynomial<C>,
    fy: &SparsePolynomial<C>,
    t: QhType,
    cap: i64,
) -> crate::error::Result<SparsePolynomial<C>> {
    let max_i = p.iter_terms().map(|(e, _)| e.i).max().unwrap_or(0) as usize;
    let max_j = p.iter_terms().map(|(e, _)| e.j).max().unwrap_or(0) as usize;
    let fx_t = qh_truncate(fx, t, cap);
    let fy_t = qh_truncate(fy, t, cap);
    let mut xp: Vec<SparsePolynomial<C>> = vec![SparsePolynomial::one()];
    for k in 1..=max_i {
        let next = qh_truncate(&(&xp[k - 1] * &fx_t), t, cap);
        xp.push(next);
    }
    let mut yp: Vec<SparsePolynomial<C>> = vec![SparsePolynomial::one()];
    for k in 1..=max_j {
        let next = qh_truncate(&(&yp[k - 1] * &fy_t), t, cap);
        yp.push(next);
    }
    let mut out = SparsePolynomial::zero();
    for (e, c) in p.iter_terms() {
        let prod = qh_truncate(&(&xp[e.i as usize] * &yp[e.j as usize]), t, cap);
        out = &out + &prod.scalar_mul(c);
    }
    Ok(qh_truncate(&out, t, cap))
}

/// Minimum quasi-degree over the support, if nonzero.
pub fn min_qh_degree<C: Coeff>(p: &SparsePolynomial<C>, t: QhType) -> Option<i64> {
    p.iter_terms().map(|(e, _)| qh_degree(e, t)).min()
}

/// Quasi-degree when the polynomial is quasi-homogeneous; error otherwise.
pub fn homogeneous_degree<C: Coeff>(p: &SparsePolynomial<C>, t: QhType) -> Result<i64> {
    let mut deg = None;
    for (e, _) in p.iter_terms() {
        let d = qh_degree(e, t);
        match deg {
            None => deg = Some(d),
            Some(d0) if d0 == d => {}
            _ => return Err(Error::NotQuasiHomogeneous { t1: t.t1, t2: t.t2 }),
        }
    }
    deg.ok_or(Error::NotQuasiHomogeneous { t1: t.t1, t2: t.t2 })
}

/// Polynomial split into its quasi-homogeneous components.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedPoly<C: Coeff> {
    pub qh: QhType,
    pub components: BTreeMap<i64, SparsePolynomial<C>>,
}

impl<C: Coeff> GradedPoly<C> {
    pub fn sum(&self) -> SparsePolynomial<C> {
        let mut acc = SparsePolynomial::zero();
        for p in self.components.values() {
            acc = &acc + p;
        }
        acc
    }

    pub fn component(&self, k: i64) -> SparsePolynomial<C> {
        self.components.get(&k).cloned().unwrap_or_else(SparsePolynomial::zero)
    }
}

pub fn decompose_poly<C: Coeff>(p: &SparsePolynomial<C>, t: QhType) -> GradedPoly<C> {
    let mut components: BTreeMap<i64, SparsePolynomial<C>> = BTreeMap::new();
    for (e, c) in p.iter_terms() {
        components
            .entry(qh_degree(e, t))
            .or_insert_with(SparsePolynomial::zero)
            .insert_add(e, c.clone());
    }
    GradedPoly { qh: t, components }
}

/// Vector field split into quasi-homogeneous components: the degree-`j`
/// component has `P` of quasi-degree `j + t1` and `Q` of quasi-degree `j + t2`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedField<C: Coeff> {
    pub qh: QhType,
    pub components: BTreeMap<i64, PlanarField<C>>,
}

impl<C: Coeff> GradedField<C> {
    /// Lowest degree `r` with a nonzero component.
    pub fn lowest_degree(&self) -> Option<i64> {
        self.components.keys().next().copied()
    }

    pub fn component(&self, j: i64) -> PlanarField<C> {
        self.components.get(&j).cloned().unwrap_or_else(PlanarField::zero)
    }

    pub fn sum(&self) -> PlanarField<C> {
        let mut acc = PlanarField::zero();
        for f in self.components.values() {
            acc = &acc + f;
        }
        acc
    }

    pub fn truncate(&self, max_degree: i64) -> Self {
        GradedField {
            qh: self.qh,
            components: self
                .components
                .iter()
                .filter(|(k, _)| **k <= max_degree)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }
}

pub fn decompose_field<C: Coeff>(f: &PlanarField<C>, t: QhType) -> GradedField<C> {
    let mut components: BTreeMap<i64, PlanarField<C>> = BTreeMap::new();
    for (e, c) in f.p.iter_terms() {
        components
            .entry(qh_degree(e, t) - t.t1)
            .or_insert_with(PlanarField::zero)
            .p
            .insert_add(e, c.clone());
    }
    for (e, c) in f.q.iter_terms() {
        components
            .entry(qh_degree(e, t) - t.t2)
            .or_insert_with(PlanarField::zero)
            .q
            .insert_add(e, c.clone());
    }
    GradedField { qh: t, components }
}

/// Conservative/dissipative split of a quasi-homogeneous field of degree `k`:
/// `fk = X_g + mu·D0` with `g = (D0 ∧ fk)/(k+|t|)` and `mu = div(fk)/(k+|t|)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitPair<C: Coeff> {
    pub g: SparsePolynomial<C>,
    pub mu: SparsePolynomial<C>,
}

pub fn split_conservative_dissipative<C: Coeff>(
    fk: &PlanarField<C>,
    t: QhType,
    k: i64,
) -> Result<SplitPair<C>> {
    let denom = k + t.weight();
    if denom == 0 {
        return Err(Error::Internal("degree k with k + |t| = 0 in splitting".into()));
    }
    let mut dc = C::zero();
    let (mut m, step) = if denom > 0 { (denom, 1) } else { (-denom, -1) };
    while m > 0 {
        dc = dc + C::one();
        m -= 1;
    }
    if step < 0 {
        dc = -dc;
    }
    let d0 = euler_field::<C>(t);
    let g = d0.wedge(fk).scalar_div(&dc);
    let mu = fk.divergence().scalar_div(&dc);
    // Reconstruction must be exact; a mismatch means fk was not in Q_k.
    let rebuilt = &hamiltonian_field(&g) + &d0.poly_mul(&mu);
    if &rebuilt != fk {
        return Err(Error::Internal(format!(
            "conservative/dissipative split failed to reconstruct the field at degree {k}"
        )));
    }
    Ok(SplitPair { g, mu })
}

/// Hamiltonian potential of a quasi-homogeneous field of degree `r`, with an
/// exactness certificate: returns `h` with `X_h = fr`, or the dissipative
/// residue when `fr` is not Hamiltonian.
pub fn hamiltonian_potential<C: Coeff>(
    fr: &PlanarField<C>,
    t: QhType,
    r: i64,
) -> Result<SparsePolynomial<C>> {
    let split = split_conservative_dissipative(fr, t, r)?;
    if !split.mu.is_zero() {
        return Err(Error::NotHamiltonian { residue: split.mu.to_string() });
    }
    Ok(split.g)
}

/// Candidate quasi-homogeneous types read off the Newton diagram of a field.
/// Support points use the vector-field convention (P-monomials shifted by
/// `(-1, 0)`, Q-monomials by `(0, -1)`); every coprime weight vector that puts
/// two support points on one level line is a candidate, plus the Taylor type.
pub fn newton_type_candidates<C: Coeff>(f: &PlanarField<C>) -> Vec<QhType> {
    let mut pts: Vec<(i64, i64)> = Vec::new();
    for (e, _) in f.p.iter_terms() {
        pts.push((i64::from(e.i) - 1, i64::from(e.j)));
    }
    for (e, _) in f.q.iter_terms() {
        pts.push((i64::from(e.i), i64::from(e.j) - 1));
    }
    let mut cands = vec![QhType::new(1, 1).unwrap()];
    for a in 0..pts.len() {
        for b in (a + 1)..pts.len() {
            let (a1, b1) = pts[a];
            let (a2, b2) = pts[b];
            // Level line: t1·(a1 − a2) = t2·(b2 − b1) with positive weights.
            let da = a1 - a2;
            let db = b2 - b1;
            if da == 0 || db == 0 || da.signum() != db.signum() {
                continue;
            }
            let (da, db) = (da.abs(), db.abs());
            let g = da.gcd(&db);
            if let Ok(t) = QhType::new(db / g, da / g) {
                if !cands.contains(&t) {
                    cands.push(t);
                }
            }
        }
    }
    cands.sort();
    cands
}
