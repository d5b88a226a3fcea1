//! Exact verification of candidate inverse integrating factors, in power form
//! `W^s` and in polynomial form, and truncated first-integral construction
//! from a factor that is a unit at the origin.

use crate::error::{Error, Result};
use crate::qhgrade::{qh_truncate, QhType};
use crate::ratpoly::{PlanarField, SparsePolynomial};
use crate::scalar::ExactField;

/// Candidate factor `V = W^s`.
#[derive(Clone, Debug, PartialEq)]
pub struct IifCandidate<C: ExactField> {
    pub w: SparsePolynomial<C>,
    pub s: C,
}

impl<C: ExactField> IifCandidate<C> {
    pub fn new(w: SparsePolynomial<C>, s: C) -> Result<Self> {
        if w.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        if s.is_zero() {
            return Err(Error::Parse("factor exponent must be nonzero".into()));
        }
        Ok(IifCandidate { w, s })
    }
}

/// Verify `W^s` as an inverse integrating factor of `f` via the polynomial
/// reduction `s·L_F(W) − div(F)·W = 0`; fractional powers never appear.
/// With `truncate = Some((t, d))` only quasi-homogeneous components of the
/// defect up to degree `d` are required to vanish.
pub fn verify_power_iif<C: ExactField>(
    f: &PlanarField<C>,
    cand: &IifCandidate<C>,
    truncate: Option<(QhType, i64)>,
) -> (bool, SparsePolynomial<C>) {
    let defect =
        &f.lie_derivative(&cand.w).scalar_mul(&cand.s) - &(&f.divergence() * &cand.w);
    let defect = match truncate {
        None => defect,
        Some((t, d)) => qh_truncate(&defect, t, d),
    };
    (defect.is_zero(), defect)
}

/// Exact check of `L_F(v) = div(F)·v` for a polynomial candidate.
pub fn verify_polynomial_iif<C: ExactField>(
    f: &PlanarField<C>,
    v: &SparsePolynomial<C>,
) -> Result<(bool, SparsePolynomial<C>)> {
    if v.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let defect = &f.lie_derivative(v) - &(&f.divergence() * v);
    Ok((defect.is_zero(), defect))
}

fn integrate_x<C: ExactField>(p: &SparsePolynomial<C>) -> SparsePolynomial<C> {
    SparsePolynomial::from_terms(p.iter_terms().map(|(e, c)| {
        (e.i + 1, e.j, c.clone() / crate::nform::c_int::<C>(i64::from(e.i) + 1))
    }))
}

fn integrate_y<C: ExactField>(p: &SparsePolynomial<C>) -> SparsePolynomial<C> {
    SparsePolynomial::from_terms(p.iter_terms().map(|(e, c)| {
        (e.i, e.j + 1, c.clone() / crate::nform::c_int::<C>(i64::from(e.j) + 1))
    }))
}

/// Truncated reciprocal by total degree of a series that is a unit at 0.
fn recip_total<C: ExactField>(v: &SparsePolynomial<C>, cap: u32) -> Result<SparsePolynomial<C>> {
    let c0 = v.coeff(0, 0);
    if c0.is_zero() {
        return Err(Error::Parse("series is not a unit at the origin".into()));
    }
    let d = &v.scalar_div(&c0) - &SparsePolynomial::one();
    let mut acc = SparsePolynomial::one();
    let mut term = SparsePolynomial::one();
    let neg_d = -&d;
    loop {
        term = (&term * &neg_d).truncate_total_degree(cap);
        if term.is_zero() {
            break;
        }
        acc = &acc + &term;
    }
    Ok(acc.scalar_div(&c0))
}

/// Truncated first integral from a unit inverse integrating factor: solves
/// `H_x = Q/v`, `H_y = −P/v` degree by degree, detecting obstructions as a
/// nonzero mixed-partials defect. `H(0,0) = 0` and `L_F(H)` vanishes up to
/// total degree `d`.
pub fn first_integral_truncated<C: ExactField>(
    f: &PlanarField<C>,
    v: &SparsePolynomial<C>,
    d: u32,
) -> Result<SparsePolynomial<C>> {
    if v.coeff(0, 0).is_zero() {
        return Err(Error::Parse("inverse integrating factor must be a unit at the origin".into()));
    }
    let cap = d.max(1) - 1;
    let vinv = recip_total(v, cap)?;
    let a = (&f.q * &vinv).truncate_total_degree(cap);
    let b = (-&(&f.p * &vinv)).truncate_total_degree(cap);
    let defect = (&a.dy() - &b.dx()).truncate_total_degree(cap.saturating_sub(1));
    if !defect.is_zero() {
        let lowest = defect
            .iter_terms()
            .map(|(e, _)| i64::from(e.total()))
            .min()
            .unwrap_or(0);
        return Err(Error::NotClosed { defect: defect.to_string(), lowest_degree: lowest });
    }
    let gy = b.substitute_x(&C::zero());
    let gy_poly = SparsePolynomial::from_terms(
        gy.coeffs().iter().enumerate().map(|(k, c)| (0u32, k as u32, c.clone())),
    );
    let h = &integrate_x(&a) + &integrate_y(&gy_poly);
    Ok(h.truncate_total_degree(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qhgrade::euler_field;
    use crate::ratpoly::hamiltonian_field;
    use crate::{rat, RatPoly, Rational};
    use num_traits::Zero;

    fn quartic_h() -> RatPoly {
        RatPoly::from_terms([(4, 0, rat(1, 4)), (0, 4, rat(1, 4))])
    }

    #[test]
    fn cusp_factor_four_thirds_family() {
        // F = (y^2 + x^3, x^3 + 4/3 x^2 y), W = 4y^3 − 3x^4, s = 13/12.
        let f = PlanarField::new(
            RatPoly::from_terms([(0, 2, rat(1, 1)), (3, 0, rat(1, 1))]),
            RatPoly::from_terms([(3, 0, rat(1, 1)), (2, 1, rat(4, 3))]),
        );
        let w = RatPoly::from_terms([(0, 3, rat(4, 1)), (4, 0, rat(-3, 1))]);
        let cand = IifCandidate::new(w, rat(13, 12)).unwrap();
        let (ok, defect) = verify_power_iif(&f, &cand, None);
        assert!(ok, "defect: {defect}");
    }

    #[test]
    fn lambda_family_exponent_six_fifths() {
        for (ln, ld) in [(1i64, 1i64), (-2, 1), (1, 3)] {
            let lam = rat(ln, ld);
            let f = PlanarField::new(
                RatPoly::from_terms([(0, 2, rat(1, 1))])
                    + RatPoly::monomial(1, 2, rat(60, 1)).scalar_mul(&lam),
                RatPoly::from_terms([(3, 0, rat(1, 1))])
                    + RatPoly::monomial(0, 3, rat(100, 1)).scalar_mul(&lam),
            );
            let w = RatPoly::from_terms([(0, 3, rat(1, 3)), (4, 0, rat(-1, 4))])
                + RatPoly::monomial(5, 0, rat(-3, 1)).scalar_mul(&lam);
            let cand = IifCandidate::new(w, rat(6, 5)).unwrap();
            let (ok, defect) = verify_power_iif(&f, &cand, None);
            assert!(ok, "lambda = {lam}: defect {defect}");
        }
    }

    #[test]
    fn hamiltonian_trivial_case() {
        let h = quartic_h();
        let f = hamiltonian_field(&h);
        let cand = IifCandidate::new(h, rat(1, 1)).unwrap();
        let (ok, _) = verify_power_iif(&f, &cand, None);
        assert!(ok);
    }

    #[test]
    fn power_one_agrees_with_polynomial_form() {
        let f = PlanarField::new(
            RatPoly::from_terms([(0, 2, rat(1, 1)), (1, 1, rat(2, 1))]),
            RatPoly::from_terms([(3, 0, rat(1, 1)), (0, 2, rat(-1, 2))]),
        );
        let v = RatPoly::from_terms([(1, 0, rat(1, 1)), (0, 1, rat(3, 1)), (2, 1, rat(-1, 5))]);
        let cand = IifCandidate::new(v.clone(), rat(1, 1)).unwrap();
        let (ok_pow, d_pow) = verify_power_iif(&f, &cand, None);
        let (ok_poly, d_poly) = verify_polynomial_iif(&f, &v).unwrap();
        assert_eq!(ok_pow, ok_poly);
        assert_eq!(d_pow, d_poly);
    }

    #[test]
    fn constant_factor_on_divergence_free_field() {
        let f = hamiltonian_field(&quartic_h());
        let (ok, _) = verify_polynomial_iif(&f, &RatPoly::one()).unwrap();
        assert!(ok);
    }

    #[test]
    fn h_is_not_a_factor_of_perturbed_field() {
        // v = h on F = X_h + D0: L_F h = 4h, div F = 2, defect = 2h ≠ 0.
        let h = quartic_h();
        let t = QhType::new(1, 1).unwrap();
        let f = &hamiltonian_field(&h) + &euler_field::<Rational>(t);
        let (ok, defect) = verify_polynomial_iif(&f, &h).unwrap();
        assert!(!ok);
        assert_eq!(defect, h.scalar_mul(&rat(2, 1)));
    }

    #[test]
    fn quadratic_nilpotent_family_2b_has_polynomial_factor() {
        // (a12, b03) = (1, 1): F = ((1+x) y^2, x^3 + y^3), V = (1+x)^4.
        let f = PlanarField::new(
            RatPoly::from_terms([(0, 2, rat(1, 1)), (1, 2, rat(1, 1))]),
            RatPoly::from_terms([(3, 0, rat(1, 1)), (0, 3, rat(1, 1))]),
        );
        let v = RatPoly::from_terms([
            (0, 0, rat(1, 1)),
            (1, 0, rat(4, 1)),
            (2, 0, rat(6, 1)),
            (3, 0, rat(4, 1)),
            (4, 0, rat(1, 1)),
        ]);
        let (ok, defect) = verify_polynomial_iif(&f, &v).unwrap();
        assert!(ok, "defect: {defect}");
        // Its truncated first integral satisfies L_F H = 0 to degree 12.
        let h = first_integral_truncated(&f, &v, 12).unwrap();
        assert!(h.coeff(0, 0).is_zero());
        let lie = f.lie_derivative(&h).truncate_total_degree(12);
        assert!(lie.is_zero(), "L_F H = {lie}");
    }

    #[test]
    fn first_integral_of_hamiltonian_is_h() {
        let h = quartic_h();
        let f = hamiltonian_field(&h);
        let got = first_integral_truncated(&f, &RatPoly::one(), 4).unwrap();
        assert_eq!(got, h);
    }

    #[test]
    fn first_integral_obstruction_detected() {
        let h = quartic_h();
        let t = QhType::new(1, 1).unwrap();
        let f = &hamiltonian_field(&h) + &euler_field::<Rational>(t).poly_mul(&h);
        let err = first_integral_truncated(&f, &RatPoly::one(), 8).unwrap_err();
        assert!(matches!(err, Error::NotClosed { .. }));
    }

    #[test]
    fn power_verification_is_scale_invariant() {
        let f = PlanarField::new(
            RatPoly::from_terms([(0, 2, rat(1, 1)), (3, 0, rat(1, 1))]),
            RatPoly::from_terms([(3, 0, rat(1, 1)), (2, 1, rat(4, 3))]),
        );
        let w = RatPoly::from_terms([(0, 3, rat(4, 1)), (4, 0, rat(-3, 1))]);
        for c in [rat(1, 1), rat(-12, 1), rat(7, 5), rat(-1, 3)] {
            let cand = IifCandidate::new(w.scalar_mul(&c), rat(13, 12)).unwrap();
            let (ok, _) = verify_power_iif(&f, &cand, None);
            assert!(ok, "scaling by {c} broke the verification");
        }
        // And a non-factor stays a non-factor under scaling.
        let bad = RatPoly::from_terms([(0, 3, rat(4, 1)), (4, 0, rat(-1, 1))]);
        for c in [rat(1, 1), rat(3, 2)] {
            let cand = IifCandidate::new(bad.scalar_mul(&c), rat(13, 12)).unwrap();
            let (ok, _) = verify_power_iif(&f, &cand, None);
            assert!(!ok);
        }
    }

    #[test]
    fn exponent_identity_for_single_term_systems() {
        use crate::lieops::operator_decomposition;
        use crate::nform::c_int;
        let t11 = QhType::new(1, 1).unwrap();
        let t34 = QhType::new(3, 4).unwrap();
        let cases: Vec<(RatPoly, QhType, i64)> = vec![
            (quartic_h(), t11, 2),
            (RatPoly::from_terms([(4, 0, rat(1, 4)), (0, 3, rat(-1, 3))]), t34, 5),
        ];
        for (h, t, r) in cases {
            let wt = t.weight();
            for nn in 1..=(12 - r).max(1) {
                let rn = r + nn;
                let dec = match operator_decomposition(&h, t, rn) {
                    Ok(d) => d,
                    Err(_) => continue,
                };
                for mu in dec.corange_polys() {
                    let f = &hamiltonian_field(&h)
                        + &euler_field::<Rational>(t).poly_mul(&mu);
                    let s = rat(1, 1) + c_int::<Rational>(nn) / c_int::<Rational>(r + wt);
                    let cand = IifCandidate::new(h.clone(), s).unwrap();
                    let (ok, defect) = verify_power_iif(&f, &cand, None);
                    assert!(ok, "h={h}, mu={mu}: defect {defect}");
                }
            }
        }
    }
}
