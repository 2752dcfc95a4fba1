//! Sparse Hermitian operators over a [`SectorBasis`] and the complex state
//! vectors they act on.
//!
//! All Hamiltonian terms are real in the site basis, so operators store `f64`
//! values in compressed-row form; only states are complex.

use std::io::Write;
use std::ops::{Deref, DerefMut};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::SectorBasis;
use crate::error::{check_len, Error, Result};
use crate::interactions::{InteractionSpec, PairTable};
use crate::potentials::eval_linear_drive;

const PARALLEL_NNZ: usize = 1 << 18;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StateVector(Vec<Complex64>);

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); dim])
    }

    /// Unit vector on basis state `k`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[k] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn from_vec(values: Vec<Complex64>) -> Self {
        Self(values)
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Degenerate("cannot normalize a zero or non-finite state".into()));
        }
        let inv = 1.0 / n;
        self.0.iter_mut().for_each(|a| *a *= inv);
        Ok(n)
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// `<self|other>`.
    pub fn dot(&self, other: &StateVector) -> Complex64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.0.iter_mut().for_each(|a| *a *= factor);
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.0.iter().map(|a| a.re).collect()
    }
}

impl Deref for StateVector {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for StateVector {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

/// Real symmetric matrix in compressed-row storage.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<f64>,
}

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let dim = values.len();
        Self {
            dim,
            row_ptr: (0..=dim).collect(),
            cols: (0..dim as u32).collect(),
            values: values.to_vec(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(Error::Shape {
                context: "operator triplet",
                expected: dim,
                got: r.max(c) + 1,
            });
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut b = RowBuilder::new(dim);
        let mut it = triplets.into_iter().peekable();
        for row in 0..dim {
            while let Some(&(r, c, v)) = it.peek() {
                if r != row {
                    break;
                }
                b.push(c, v);
                it.next();
            }
            b.finish_row();
        }
        Ok(b.build())
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        check_len("dense operator columns", m.nrows(), m.ncols())?;
        let mut t = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != 0.0 {
                    t.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.values[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_ptr[r + 1] - self.row_ptr[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.dim).map(|r| self.get(r, r)).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|r| self.row(r).all(|(c, _)| c == r))
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn from_parts(dim: usize, row_ptr: Vec<usize>, cols: Vec<u32>, values: Vec<f64>) -> Self {
        debug_assert_eq!(row_ptr.len(), dim + 1);
        debug_assert_eq!(cols.len(), values.len());
        Self {
            dim,
            row_ptr,
            cols,
            values,
        }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        check_len("operator apply", self.dim, psi.len())?;
        let mut out = StateVector::zeros(self.dim);
        self.apply_into(psi, &mut out);
        Ok(out)
    }

    /// `y = A x`; dimensions must already match.
    pub fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let row = |r: usize| {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            let mut acc = Complex64::new(0.0, 0.0);
            for (&c, &v) in self.cols[span.clone()].iter().zip(&self.values[span]) {
                acc += x[c as usize] * v;
            }
            acc
        };
        if self.nnz() >= PARALLEL_NNZ && rayon::current_num_threads() > 1 {
            y.par_chunks_mut(4096).enumerate().for_each(|(chunk, ys)| {
                let base = chunk * 4096;
                for (o, yr) in ys.iter_mut().enumerate() {
                    *yr = row(base + o);
                }
            });
        } else {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = row(r);
            }
        }
    }

    pub fn apply_real_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let row = |r: usize| {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            let mut acc = 0.0;
            for (&c, &v) in self.cols[span.clone()].iter().zip(&self.values[span]) {
                acc += x[c as usize] * v;
            }
            acc
        };
        if self.nnz() >= PARALLEL_NNZ && rayon::current_num_threads() > 1 {
            y.par_chunks_mut(4096).enumerate().for_each(|(chunk, ys)| {
                let base = chunk * 4096;
                for (o, yr) in ys.iter_mut().enumerate() {
                    *yr = row(base + o);
                }
            });
        } else {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = row(r);
            }
        }
    }

    /// `<psi|A|psi>`; real for a symmetric operator.
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        Ok(self.matrix_element(psi, psi)?.re)
    }

    /// `<phi|A|psi>`.
    pub fn matrix_element(&self, phi: &StateVector, psi: &StateVector) -> Result<Complex64> {
        check_len("matrix element bra", self.dim, phi.len())?;
        let a_psi = self.apply(psi)?;
        Ok(phi.dot(&a_psi))
    }

    /// Largest `|A_rc - A_cr|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// `sum_k c_k A_k` over operators of equal dimension.
    pub fn linear_combination(terms: &[(&SparseOperator, f64)]) -> Result<Self> {
        let Some((first, _)) = terms.first() else {
            return Err(Error::domain("empty linear combination"));
        };
        let dim = first.dim;
        let mut b = RowBuilder::new(dim);
        for (op, _) in terms {
            check_len("linear combination", dim, op.dim)?;
        }
        for r in 0..dim {
            for (op, c) in terms {
                for (col, v) in op.row(r) {
                    b.push(col, c * v);
                }
            }
            b.finish_row();
        }
        Ok(b.build())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    /// Debug dump: one `row col value` line per stored entry.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> Result<()> {
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                writeln!(w, "{r} {c} {v:.17e}")?;
            }
        }
        Ok(())
    }
}

/// Row-by-row CSR builder that merges duplicate columns within a row.
pub(crate) struct RowBuilder {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<f64>,
    pending: Vec<(u32, f64)>,
}

impl RowBuilder {
    pub(crate) fn new(dim: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        Self {
            dim,
            row_ptr,
            cols: Vec::new(),
            values: Vec::new(),
            pending: Vec::with_capacity(16),
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, col: usize, value: f64) {
        self.pending.push((col as u32, value));
    }

    pub(crate) fn finish_row(&mut self) {
        self.pending.sort_unstable_by_key(|&(c, _)| c);
        let mut last: Option<u32> = None;
        for &(c, v) in &self.pending {
            if last == Some(c) {
                *self.values.last_mut().unwrap() += v;
            } else {
                self.cols.push(c);
                self.values.push(v);
                last = Some(c);
            }
        }
        self.pending.clear();
        // drop entries that cancelled exactly
        let start = *self.row_ptr.last().unwrap();
        let mut w = start;
        for k in start..self.cols.len() {
            if self.values[k] != 0.0 {
                self.cols[w] = self.cols[k];
                self.values[w] = self.values[k];
                w += 1;
            }
        }
        self.cols.truncate(w);
        self.values.truncate(w);
        self.row_ptr.push(w);
    }

    pub(crate) fn build(self) -> SparseOperator {
        assert_eq!(self.row_ptr.len(), self.dim + 1, "unfinished rows");
        SparseOperator::from_parts(self.dim, self.row_ptr, self.cols, self.values)
    }
}

/// Single-particle hopping `-J` on every nearest-neighbor bond.
pub fn one_body_hopping(geometry: &crate::lattice::LatticeGeometry, hopping: f64) -> SparseOperator {
    let n = geometry.num_sites();
    let mut t = Vec::with_capacity(4 * n);
    for (i, j) in geometry.bonds() {
        t.push((i, j, -hopping));
        t.push((j, i, -hopping));
    }
    SparseOperator::from_triplets(n, t).expect("bond indices are in range")
}

/// Lifts a one-body operator `h` to `h (x) 1 + 1 (x) h` restricted to the sector.
pub fn lift_one_body(basis: &SectorBasis, one_body: &SparseOperator) -> Result<SparseOperator> {
    let n = basis.geometry().num_sites();
    check_len("one-body operator", n, one_body.dim())?;
    if basis.is_single() {
        return Ok(one_body.clone());
    }
    let dim = basis.dim();
    let mut b = RowBuilder::new(dim);
    for k in 0..dim {
        let (terms, count) = basis.expand(k);
        for &((p, q), c) in &terms[..count] {
            for (p2, h) in one_body.row(p) {
                if let Some((m, overlap)) = basis.project_ordered(p2, q) {
                    b.push(m, c * h * overlap);
                }
            }
            for (q2, h) in one_body.row(q) {
                if let Some((m, overlap)) = basis.project_ordered(p, q2) {
                    b.push(m, c * h * overlap);
                }
            }
        }
        b.finish_row();
    }
    Ok(b.build())
}

/// Kinetic term: hopping lifted to the sector.
pub fn assemble_hopping(basis: &SectorBasis, hopping: f64) -> Result<SparseOperator> {
    lift_one_body(basis, &one_body_hopping(basis.geometry(), hopping))
}

/// Potential term `-sum_i V(i) n_i` for a depth field `V`.
pub fn assemble_potential_term(basis: &SectorBasis, field: &[f64]) -> Result<SparseOperator> {
    check_len("potential field", basis.geometry().num_sites(), field.len())?;
    let neg: Vec<f64> = field.iter().map(|v| -v).collect();
    diagonal_one_body(basis, &neg)
}

/// Noninteracting Hamiltonian: hopping plus `-V` on the diagonal.
pub fn assemble_h0(basis: &SectorBasis, field: &[f64], hopping: f64) -> Result<SparseOperator> {
    let kin = assemble_hopping(basis, hopping)?;
    let pot = assemble_potential_term(basis, field)?;
    SparseOperator::linear_combination(&[(&kin, 1.0), (&pot, 1.0)])
}

/// Diagonal pair interaction; only defined for two-particle sectors.
pub fn assemble_interaction(basis: &SectorBasis, spec: &InteractionSpec) -> Result<SparseOperator> {
    if basis.is_single() {
        return Err(Error::domain("interaction operator needs a two-particle basis"));
    }
    spec.validate()?;
    let g = basis.geometry();
    let table = PairTable::new(g, spec);
    let diag: Vec<f64> = (0..basis.dim())
        .map(|k| {
            let (i, j) = basis.pair_of(k);
            table.get(g.coord_unchecked(i), g.coord_unchecked(j))
        })
        .collect();
    Ok(SparseOperator::diagonal(&diag))
}

/// Dipole drive profile `(x - lx/2)/a0` summed over particles.
pub fn assemble_linear_drive(basis: &SectorBasis, bohr_radius: f64) -> Result<SparseOperator> {
    if !(bohr_radius > 0.0) {
        return Err(Error::domain("Bohr radius must be positive"));
    }
    let g = basis.geometry();
    let profile: Vec<f64> = g.sites().map(|s| eval_linear_drive(s, g, bohr_radius)).collect();
    diagonal_one_body(basis, &profile)
}

/// Diagonal operator `sum_particles f(site)`.
pub fn diagonal_one_body(basis: &SectorBasis, site_values: &[f64]) -> Result<SparseOperator> {
    check_len("site values", basis.geometry().num_sites(), site_values.len())?;
    if basis.is_single() {
        return Ok(SparseOperator::diagonal(site_values));
    }
    let diag: Vec<f64> = (0..basis.dim())
        .map(|k| {
            let (i, j) = basis.pair_of(k);
            site_values[i] + site_values[j]
        })
        .collect();
    Ok(SparseOperator::diagonal(&diag))
}
