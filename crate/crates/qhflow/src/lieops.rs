//! Homological operators as exact matrices, range/kernel/corange bases, exact
//! linear solving, and the Lie-bracket identities used by the normal-form step.

use crate::error::{Error, Result};
use crate::qhgrade::{basis, euler_field, homogeneous_degree, QhType};
use crate::ratpoly::{hamiltonian_field, Exp, PlanarField, SparsePolynomial};
use crate::scalar::{Coeff, ExactField};
use std::fmt;

/// Poisson bracket `{h, p} = h_x p_y − h_y p_x`; the homological operator is
/// `p ↦ {h, p}`.
pub fn poisson<C: Coeff>(
    h: &SparsePolynomial<C>,
    p: &SparsePolynomial<C>,
) -> SparsePolynomial<C> {
    &(&h.dx() * &p.dy()) - &(&h.dy() * &p.dx())
}

/// Lie bracket `[f, g] = Dg·f − Df·g` of planar fields.
pub fn field_bracket<C: Coeff>(f: &PlanarField<C>, g: &PlanarField<C>) -> PlanarField<C> {
    let a = PlanarField::new(
        &(&g.p.dx() * &f.p) + &(&g.p.dy() * &f.q),
        &(&g.q.dx() * &f.p) + &(&g.q.dy() * &f.q),
    );
    let b = PlanarField::new(
        &(&f.p.dx() * &g.p) + &(&f.p.dy() * &g.q),
        &(&f.q.dx() * &g.p) + &(&f.q.dy() * &g.q),
    );
    &a - &b
}

/// `[X_h, X_p]`; equals the Hamiltonian field of `{h, p}`.
pub fn bracket_hamiltonian<C: Coeff>(
    h: &SparsePolynomial<C>,
    p: &SparsePolynomial<C>,
) -> PlanarField<C> {
    field_bracket(&hamiltonian_field(h), &hamiltonian_field(p))
}

/// `[X_h, ξ·D0]`; equals `−r·ξ·X_h + {h,ξ}·D0` with `r = deg h − |t|`.
pub fn bracket_with_euler<C: Coeff>(
    h: &SparsePolynomial<C>,
    xi: &SparsePolynomial<C>,
    t: QhType,
) -> PlanarField<C> {
    field_bracket(&hamiltonian_field(h), &euler_field::<C>(t).poly_mul(xi))
}

/// Dense exact matrix, row-major.
#[derive(Clone, PartialEq, Debug)]
pub struct Mat<C> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<C>,
}

impl<C: ExactField> Mat<C> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![C::zero(); rows * cols] }
    }

    pub fn from_columns(rows: usize, cols: Vec<Vec<C>>) -> Self {
        let ncols = cols.len();
        let mut m = Self::zeros(rows, ncols);
        for (c, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for (r, v) in col.iter().enumerate() {
                m[(r, c)] = v.clone();
            }
        }
        m
    }

    pub fn column(&self, c: usize) -> Vec<C> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    /// Reduced row-echelon form with deterministic leftmost pivoting.
    /// Returns the reduced matrix and the pivot column indices.
    pub fn rref(&self) -> (Mat<C>, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row >= m.rows {
                break;
            }
            let Some(pr) = (row..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(row, pr);
            let inv = C::one() / m[(row, col)].clone();
            for c in col..m.cols {
                m[(row, c)] = m[(row, c)].clone() * inv.clone();
            }
            for r in 0..m.rows {
                if r != row && !m[(r, col)].is_zero() {
                    let f = m[(r, col)].clone();
                    for c in col..m.cols {
                        let delta = f.clone() * m[(row, c)].clone();
                        m[(r, c)] = m[(r, c)].clone() - delta;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Basis of the kernel, one vector per free column.
    pub fn kernel_basis(&self) -> Vec<Vec<C>> {
        let (r, pivots) = self.rref();
        let mut out = Vec::new();
        let pivot_set: Vec<usize> = pivots.clone();
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![C::zero(); self.cols];
            v[free] = C::one();
            for (prow, pcol) in pivot_set.iter().enumerate() {
                v[*pcol] = -r[(prow, free)].clone();
            }
            out.push(v);
        }
        out
    }

    /// Solve `self · z = rhs` choosing zeros on all free columns.
    /// Returns `None` when the system is inconsistent.
    pub fn solve_pivot(&self, rhs: &[C]) -> Option<Vec<C>> {
        assert_eq!(rhs.len(), self.rows);
        let mut aug = Mat::zeros(self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug[(r, c)] = self[(r, c)].clone();
            }
            aug[(r, self.cols)] = rhs[r].clone();
        }
        let (red, pivots) = aug.rref();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut z = vec![C::zero(); self.cols];
        for (prow, pcol) in pivots.iter().enumerate() {
            z[*pcol] = red[(prow, self.cols)].clone();
        }
        Some(z)
    }
}

impl<C> std::ops::Index<(usize, usize)> for Mat<C> {
    type Output = C;
    fn index(&self, (r, c): (usize, usize)) -> &C {
        &self.data[r * self.cols + c]
    }
}

impl<C> std::ops::IndexMut<(usize, usize)> for Mat<C> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C {
        &mut self.data[r * self.cols + c]
    }
}

impl<C: ExactField> fmt::Display for Mat<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self[(r, c)].to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Incremental echelon structure for independence tests over exact scalars.
struct Echelon<C> {
    // Rows in echelon form, each paired with its pivot position.
    rows: Vec<(usize, Vec<C>)>,
}

impl<C: ExactField> Echelon<C> {
    fn new() -> Self {
        Echelon { rows: Vec::new() }
    }

    fn reduce(&self, v: &[C]) -> Vec<C> {
        let mut v = v.to_vec();
        for (piv, row) in &self.rows {
            if !v[*piv].is_zero() {
                let f = v[*piv].clone() / row[*piv].clone();
                for k in 0..v.len() {
                    let delta = f.clone() * row[k].clone();
                    v[k] = v[k].clone() - delta;
                }
            }
        }
        v
    }

    /// Insert if independent; returns whether the vector extended the span.
    fn insert(&mut self, v: &[C]) -> bool {
        let red = self.reduce(v);
        match red.iter().position(|c| !c.is_zero()) {
            None => false,
            Some(p) => {
                self.rows.push((p, red));
                true
            }
        }
    }
}

/// Coordinates of `p` in a monomial basis; `None` if its support leaks out.
pub fn coords_in_basis<C: Coeff>(
    p: &SparsePolynomial<C>,
    basis: &[Exp],
) -> Option<Vec<C>> {
    let mut coords = vec![C::zero(); basis.len()];
    for (e, c) in p.iter_terms() {
        let idx = basis.iter().position(|b| *b == e)?;
        coords[idx] = c.clone();
    }
    Some(coords)
}

pub fn poly_from_coords<C: Coeff>(basis: &[Exp], coords: &[C]) -> SparsePolynomial<C> {
    SparsePolynomial::from_terms(
        basis.iter().zip(coords.iter()).map(|(e, c)| (e.i, e.j, c.clone())),
    )
}

/// The homological operator at degree `j` as an exact matrix, together with
/// bases of its range, kernel, and a deterministically chosen corange.
#[derive(Clone, Debug)]
pub struct OperatorDecomposition<C: ExactField> {
    pub h: SparsePolynomial<C>,
    pub qh: QhType,
    pub j: i64,
    pub r: i64,
    /// Monomials of the domain space (degree `j − r`), y-exponent ascending.
    pub domain_basis: Vec<Exp>,
    /// Monomials of the codomain space (degree `j`), y-exponent ascending.
    pub codomain_basis: Vec<Exp>,
    /// Matrix of the operator in those bases (rows: codomain, cols: domain).
    pub matrix: Mat<C>,
    /// Images of the domain monomials at the pivot columns.
    pub range_basis: Vec<SparsePolynomial<C>>,
    pub kernel_basis: Vec<SparsePolynomial<C>>,
    /// Greedily chosen monomial complement of the range.
    pub corange_basis: Vec<Exp>,
}

impl<C: ExactField> OperatorDecomposition<C> {
    pub fn range_dim(&self) -> usize {
        self.range_basis.len()
    }

    pub fn corange_dim(&self) -> usize {
        self.corange_basis.len()
    }

    pub fn corange_polys(&self) -> Vec<SparsePolynomial<C>> {
        self.corange_basis
            .iter()
            .map(|e| SparsePolynomial::monomial(e.i, e.j, C::one()))
            .collect()
    }
}

/// Build the degree-`j` operator decomposition for a quasi-homogeneous `h`.
/// The corange is selected by scanning codomain monomials in basis order and
/// keeping each one independent of the range plus the monomials already kept.
pub fn operator_decomposition<C: ExactField>(
    h: &SparsePolynomial<C>,
    t: QhType,
    j: i64,
) -> Result<OperatorDecomposition<C>> {
    let deg_h = homogeneous_degree(h, t)?;
    let r = deg_h - t.weight();
    let domain_basis = basis(t, j - r);
    let codomain_basis = basis(t, j);
    let mut cols = Vec::with_capacity(domain_basis.len());
    let mut images = Vec::with_capacity(domain_basis.len());
    for e in &domain_basis {
        let img = poisson(h, &SparsePolynomial::monomial(e.i, e.j, C::one()));
        let coords = coords_in_basis(&img, &codomain_basis).ok_or_else(|| {
            Error::Internal(format!("operator image leaves the codomain at degree {j}"))
        })?;
        cols.push(coords);
        images.push(img);
    }
    let matrix = Mat::from_columns(codomain_basis.len(), cols);
    let (_, pivots) = matrix.rref();
    let range_basis: Vec<SparsePolynomial<C>> =
        pivots.iter().map(|&c| images[c].clone()).collect();
    let kernel_basis: Vec<SparsePolynomial<C>> = matrix
        .kernel_basis()
        .into_iter()
        .map(|v| poly_from_coords(&domain_basis, &v))
        .collect();

    let mut ech = Echelon::new();
    for c in 0..matrix.cols {
        ech.insert(&matrix.column(c));
    }
    let mut corange_basis = Vec::new();
    for (idx, e) in codomain_basis.iter().enumerate() {
        let mut unit = vec![C::zero(); codomain_basis.len()];
        unit[idx] = C::one();
        if ech.insert(&unit) {
            corange_basis.push(*e);
        }
    }
    Ok(OperatorDecomposition {
        h: h.clone(),
        qh: t,
        j,
        r,
        domain_basis,
        codomain_basis,
        matrix,
        range_basis,
        kernel_basis,
        corange_basis,
    })
}

/// Solve `target = M·p + Σ c_i·comp_i` with `p` on pivot coordinates only
/// (zero kernel components). `comp` vectors are codomain coordinate vectors.
pub fn solve_split<C: ExactField>(
    m: &Mat<C>,
    comp: &[Vec<C>],
    target: &[C],
) -> Option<(Vec<C>, Vec<C>)> {
    let rows = m.rows;
    let total = m.cols + comp.len();
    let mut aug = Mat::zeros(rows, total);
    for r in 0..rows {
        for c in 0..m.cols {
            aug[(r, c)] = m[(r, c)].clone();
        }
        for (k, v) in comp.iter().enumerate() {
            aug[(r, m.cols + k)] = v[r].clone();
        }
    }
    let z = aug.solve_pivot(target)?;
    Some((z[..m.cols].to_vec(), z[m.cols..].to_vec()))
}

/// Express `target ∈ P_j` as `ℓ_j(p) + residual` with the residual in the span
/// of the chosen corange and `p` free of kernel directions.
pub fn solve_in_range<C: ExactField>(
    dec: &OperatorDecomposition<C>,
    target: &SparsePolynomial<C>,
) -> Result<(SparsePolynomial<C>, SparsePolynomial<C>)> {
    let t_coords = coords_in_basis(target, &dec.codomain_basis)
        .ok_or_else(|| Error::Internal("target outside the codomain space".into()))?;
    let comp: Vec<Vec<C>> = dec
        .corange_basis
        .iter()
        .map(|e| {
            let idx = dec.codomain_basis.iter().position(|b| b == e).unwrap();
            let mut unit = vec![C::zero(); dec.codomain_basis.len()];
            unit[idx] = C::one();
            unit
        })
        .collect();
    let (p_coords, c_coords) = solve_split(&dec.matrix, &comp, &t_coords)
        .ok_or_else(|| Error::Internal("range ⊕ corange failed to span the codomain".into()))?;
    let p = poly_from_coords(&dec.domain_basis, &p_coords);
    let residual = poly_from_coords(&dec.corange_basis, &c_coords);
    Ok((p, residual))
}

/// Exact check that `candidates` (codomain coordinate vectors) form a valid
/// complement of the range: the stacked matrix has full rank equal to the
/// codomain dimension and the dimensions add up.
pub fn is_valid_complement<C: ExactField>(m: &Mat<C>, candidates: &[Vec<C>]) -> bool {
    let dim = m.rows;
    if m.rank() + candidates.len() != dim {
        return false;
    }
    spans_codomain(m, candidates)
}

/// Exact check that the range together with `candidates` spans the codomain
/// (the sum need not be direct).
pub fn spans_codomain<C: ExactField>(m: &Mat<C>, candidates: &[Vec<C>]) -> bool {
    let dim = m.rows;
    let mut cols: Vec<Vec<C>> = (0..m.cols).map(|c| m.column(c)).collect();
    cols.extend(candidates.iter().cloned());
    Mat::from_columns(dim, cols).rank() == dim
}
