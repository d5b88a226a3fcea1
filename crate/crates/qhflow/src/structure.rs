//! Structural hypotheses on the quasi-homogeneous Hamiltonian: squarefreeness
//! (H1), the complement condition on the operator ranges (H2), monodromy of
//! the origin, and the associated univariate reduction.

use crate::error::{Error, Result};
use crate::lieops::{coords_in_basis, operator_decomposition, spans_codomain};
use crate::qhgrade::{basis, homogeneous_degree, index_set_complement, QhType};
use crate::ratpoly::{sturm_real_root_count, Endpoint, SparsePolynomial, UniPoly};
use crate::scalar::ExactField;

/// Dehomogenization of a quasi-homogeneous `h`: after stripping monomial
/// factors `x^{i0} y^{j0}`, the support lies on `x^{t2(K−m)} y^{t1 m}`,
/// `m = 0..K`, and `q` collects the coefficients along that lattice line.
#[derive(Clone, Debug, PartialEq)]
pub struct UnivariateReduction<C: ExactField> {
    pub i0: u32,
    pub j0: u32,
    pub q: UniPoly<C>,
    pub k: usize,
}

pub fn univariate_reduction<C: ExactField>(
    h: &SparsePolynomial<C>,
    t: QhType,
) -> Result<UnivariateReduction<C>> {
    if h.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    homogeneous_degree(h, t)?;
    let i0 = h.iter_terms().map(|(e, _)| e.i).min().unwrap();
    let j0 = h.iter_terms().map(|(e, _)| e.j).min().unwrap();
    let t1 = t.t1() as u32;
    let t2 = t.t2() as u32;
    // Remaining exponents (a, b) = (t2(K−m), t1 m); recover m from b (or from
    // a when t1 = 1 and b carries no information... b = t1 m always works).
    let mut entries: Vec<(usize, C)> = Vec::new();
    let mut k_max = 0usize;
    for (e, c) in h.iter_terms() {
        let a = e.i - i0;
        let b = e.j - j0;
        if b % t1 != 0 || a % t2 != 0 {
            return Err(Error::Internal("support off the expected lattice line".into()));
        }
        let m = (b / t1) as usize;
        entries.push((m, c.clone()));
        k_max = k_max.max(m + (a / t2) as usize);
    }
    let mut coeffs = vec![C::zero(); k_max + 1];
    for (m, c) in entries {
        coeffs[m] = c;
    }
    let q = UniPoly::new(coeffs);
    let red = UnivariateReduction { i0, j0, q, k: k_max };
    // Exact reconstruction check.
    let rebuilt = reconstruct(&red, t);
    if &rebuilt != h {
        return Err(Error::Internal("univariate reduction failed to reconstruct h".into()));
    }
    Ok(red)
}

fn reconstruct<C: ExactField>(red: &UnivariateReduction<C>, t: QhType) -> SparsePolynomial<C> {
    let t1 = t.t1() as u32;
    let t2 = t.t2() as u32;
    SparsePolynomial::from_terms(red.q.coeffs().iter().enumerate().map(|(m, c)| {
        (
            red.i0 + t2 * (red.k as u32 - m as u32),
            red.j0 + t1 * m as u32,
            c.clone(),
        )
    }))
}

/// H1: the factorization of `h` over the complex polynomials has only simple
/// factors. Equivalent to `i0 ≤ 1`, `j0 ≤ 1` and `q` squarefree.
pub fn check_h1<C: ExactField>(h: &SparsePolynomial<C>, t: QhType) -> Result<bool> {
    let red = univariate_reduction(h, t)?;
    if red.i0 > 1 || red.j0 > 1 {
        return Ok(false);
    }
    if red.q.degree() == Some(0) {
        return Ok(true);
    }
    let g = red.q.gcd(&red.q.derivative())?;
    Ok(g.degree() == Some(0))
}

/// H2 reduces to finitely many checks: `Range(ℓ_{r+|t|+j}) + h·P_j` must
/// cover the degree-`(r+|t|+j)` space for `j ∈ {1..r}` and for the `j > r`
/// whose domain space `P_{j−r}` is trivial; the cyclicity of the coranges
/// settles every other degree. `h·P_j` may strictly contain a complement, so
/// this is a spanning condition, not a direct-sum one. Returns the verdict
/// and the degrees checked.
pub fn check_h2<C: ExactField>(
    h: &SparsePolynomial<C>,
    t: QhType,
) -> Result<(bool, Vec<i64>)> {
    let deg_h = homogeneous_degree(h, t)?;
    let r = deg_h - t.weight();
    let mut degrees: Vec<i64> = (1..=r.max(0)).collect();
    let complement_bound = (t.t1() * t.t2() - t.weight()).max(0);
    for c in index_set_complement(t, complement_bound) {
        degrees.push(r + c);
    }
    degrees.sort();
    degrees.dedup();
    let mut ok = true;
    for &j in &degrees {
        let op_degree = deg_h + j;
        let dec = operator_decomposition(h, t, op_degree)?;
        let hp: Vec<Vec<C>> = basis(t, j)
            .iter()
            .map(|e| {
                let prod = &SparsePolynomial::monomial(e.i, e.j, C::one()) * h;
                coords_in_basis(&prod, &dec.codomain_basis)
                    .ok_or_else(|| Error::Internal("h-multiple leaves the codomain".into()))
            })
            .collect::<Result<_>>()?;
        if !spans_codomain(&dec.matrix, &hp) {
            ok = false;
            break;
        }
    }
    Ok((ok, degrees))
}

/// Monodromy test: the origin is monodromic iff `h` vanishes only there,
/// i.e. no monomial factors and neither slice `h(±1, y)` has a real root.
/// Returns the verdict and the sign of `h` off the origin (0 when not
/// monodromic).
pub fn is_monodromic<C: ExactField>(
    h: &SparsePolynomial<C>,
    t: QhType,
) -> Result<(bool, i8)> {
    let red = univariate_reduction(h, t)?;
    if red.i0 > 0 || red.j0 > 0 {
        return Ok((false, 0));
    }
    for v in [C::one(), -C::one()] {
        let slice = h.substitute_x(&v);
        if slice.is_zero() {
            return Ok((false, 0));
        }
        if sturm_real_root_count(&slice, &Endpoint::NegInf, &Endpoint::PosInf)? > 0 {
            return Ok((false, 0));
        }
    }
    let at_10 = h.eval(&C::one(), &C::zero());
    let sign = if at_10.is_positive() { 1 } else { -1 };
    Ok((true, sign))
}

/// Number of corange computations that pin the normal form, following the
/// two-case bound: `1 + r` when every degree space is nontrivial, otherwise
/// `1 + r + max` over the trivial degrees.
pub fn compute_n0(t: QhType, r: i64) -> i64 {
    let bound = (t.t1() * t.t2() - t.weight()).max(0);
    let complement = index_set_complement(t, bound);
    match complement.last() {
        None => 1 + r,
        Some(m) => 1 + r + m,
    }
}

/// Combined hypothesis report for a Hamiltonian leading part.
#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisReport {
    pub h1: bool,
    pub h2: bool,
    pub h2_checked_degrees: Vec<i64>,
    pub monodromic: bool,
    pub sign: i8,
    pub n0: i64,
}

pub fn hypothesis_report<C: ExactField>(
    h: &SparsePolynomial<C>,
    t: QhType,
) -> Result<HypothesisReport> {
    let deg_h = homogeneous_degree(h, t)?;
    let r = deg_h - t.weight();
    let h1 = check_h1(h, t)?;
    let (h2, checked) = if h1 { check_h2(h, t)? } else { (false, Vec::new()) };
    let (monodromic, sign) = is_monodromic(h, t)?;
    Ok(HypothesisReport {
        h1,
        h2,
        h2_checked_degrees: checked,
        monodromic,
        sign,
        n0: compute_n0(t, r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, RatPoly};

    fn quartic_h() -> RatPoly {
        RatPoly::from_terms([(4, 0, rat(1, 4)), (0, 4, rat(1, 4))])
    }

    fn cusp_h() -> RatPoly {
        RatPoly::from_terms([(4, 0, rat(1, 4)), (0, 3, rat(-1, 3))])
    }

    #[test]
    fn reduction_examples() {
        let t = QhType::new(1, 1).unwrap();
        let red = univariate_reduction(&quartic_h(), t).unwrap();
        assert_eq!((red.i0, red.j0, red.k), (0, 0, 4));
        assert_eq!(red.q, UniPoly::new(vec![rat(1, 4), rat(0, 1), rat(0, 1), rat(0, 1), rat(1, 4)]));

        let t34 = QhType::new(3, 4).unwrap();
        let red = univariate_reduction(&cusp_h(), t34).unwrap();
        assert_eq!((red.i0, red.j0, red.k), (0, 0, 1));
        assert_eq!(red.q, UniPoly::new(vec![rat(1, 4), rat(-1, 3)]));

        let xy = RatPoly::monomial(1, 1, rat(1, 1));
        let red = univariate_reduction(&xy, t).unwrap();
        assert_eq!((red.i0, red.j0, red.k), (1, 1, 0));
        assert_eq!(red.q, UniPoly::constant(rat(1, 1)));

        assert!(univariate_reduction(&RatPoly::zero(), t).is_err());
    }

    #[test]
    fn h1_examples() {
        let t = QhType::new(1, 1).unwrap();
        assert!(check_h1(&quartic_h(), t).unwrap());
        // x^2 y: monomial factor of multiplicity 2
        assert!(!check_h1(&RatPoly::monomial(2, 1, rat(1, 1)), t).unwrap());
        // (y - x)^2 x = x y^2 - 2 x^2 y + x^3: double root
        let dbl = RatPoly::from_terms([(1, 2, rat(1, 1)), (2, 1, rat(-2, 1)), (3, 0, rat(1, 1))]);
        assert!(!check_h1(&dbl, t).unwrap());
    }

    #[test]
    fn h2_examples() {
        let t34 = QhType::new(3, 4).unwrap();
        let (ok, checked) = check_h2(&cusp_h(), t34).unwrap();
        assert!(ok);
        assert_eq!(checked, vec![1, 2, 3, 4, 5, 6, 7, 10]);

        let t = QhType::new(1, 1).unwrap();
        let (ok, checked) = check_h2(&quartic_h(), t).unwrap();
        assert!(ok);
        assert_eq!(checked, vec![1, 2]);

        // cubic with d = 1, a = 1, b = c = 0: h = x^3 + y^3
        let cubic = RatPoly::from_terms([(3, 0, rat(1, 1)), (0, 3, rat(1, 1))]);
        let (ok, _) = check_h2(&cubic, t).unwrap();
        assert!(ok);
    }

    #[test]
    fn monodromy_examples() {
        let t = QhType::new(1, 1).unwrap();
        assert_eq!(is_monodromic(&quartic_h(), t).unwrap(), (true, 1));
        let t34 = QhType::new(3, 4).unwrap();
        assert_eq!(is_monodromic(&cusp_h(), t34).unwrap(), (false, 0));
        assert_eq!(is_monodromic(&RatPoly::monomial(1, 1, rat(1, 1)), t).unwrap(), (false, 0));
        let neg = quartic_h().scalar_mul(&rat(-1, 1));
        assert_eq!(is_monodromic(&neg, t).unwrap(), (true, -1));
        let circle = RatPoly::from_terms([(2, 0, rat(1, 2)), (0, 2, rat(1, 2))]);
        assert_eq!(is_monodromic(&circle, t).unwrap(), (true, 1));
    }

    #[test]
    fn n0_examples() {
        assert_eq!(compute_n0(QhType::new(1, 1).unwrap(), 2), 3);
        // max of the trivial set for (3,4) is 5, so 1 + 5 + 5 = 11
        assert_eq!(compute_n0(QhType::new(3, 4).unwrap(), 5), 11);
        assert_eq!(compute_n0(QhType::new(2, 3).unwrap(), 1), 3);
    }
}
