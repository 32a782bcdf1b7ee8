//! Exact sparse linear algebra over the rationals.
//!
//! Elimination is fraction-free: rows are scaled to integer vectors, reduced
//! by their content, and combined by cross-multiplication, with a fixed
//! column-order pivot rule (leftmost column first, then lowest row index).
//! No magnitude-based pivoting is done, so every result is deterministic for
//! a fixed input regardless of how callers schedule independent computations.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::traits::{One, Zero};
use num::Integer;
use serde::{Deserialize, Serialize};

use crate::rat::Rat;
use crate::{Error, Result};

/// Sparse vector: index -> nonzero coefficient.
pub type SparseVec = BTreeMap<usize, Rat>;

/// `v[i] += c`, dropping the entry if it cancels to zero.
pub fn sv_add(v: &mut SparseVec, i: usize, c: &Rat) {
    if c.is_zero() {
        return;
    }
    let e = v.entry(i).or_insert_with(Rat::zero);
    *e += c;
    if e.is_zero() {
        v.remove(&i);
    }
}

/// `dst += c * src`.
pub fn sv_axpy(dst: &mut SparseVec, c: &Rat, src: &SparseVec) {
    if c.is_zero() {
        return;
    }
    for (i, a) in src {
        sv_add(dst, *i, &(c * a));
    }
}

pub fn sv_scale(v: &SparseVec, c: &Rat) -> SparseVec {
    if c.is_zero() {
        return SparseVec::new();
    }
    v.iter().map(|(i, a)| (*i, a * c)).collect()
}

pub fn sv_unit(i: usize) -> SparseVec {
    let mut v = SparseVec::new();
    v.insert(i, Rat::one());
    v
}

/// A sparse matrix over the rationals. Zero entries are never stored.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct Mat {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), Rat>,
}

#[derive(Serialize, Deserialize)]
struct MatRepr {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, Rat)>,
}

impl Serialize for Mat {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        MatRepr {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .map(|(&(i, j), v)| (i, j, v.clone()))
                .collect(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Mat {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = MatRepr::deserialize(de)?;
        let mut m = Mat::zero(r.rows, r.cols);
        for (i, j, v) in r.entries {
            if i >= r.rows || j >= r.cols {
                return Err(D::Error::custom("matrix entry out of bounds"));
            }
            m.set(i, j, v);
        }
        Ok(m)
    }
}

impl Mat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zero(n, n);
        for i in 0..n {
            m.set(i, i, Rat::one());
        }
        m
    }

    pub fn from_entries<I>(rows: usize, cols: usize, it: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, Rat)>,
    {
        let mut m = Mat::zero(rows, cols);
        for (i, j, v) in it {
            let cur = m.get(i, j);
            m.set(i, j, &cur + &v);
        }
        m
    }

    pub fn from_dense(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Mat::zero(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, Rat::from_int(*v));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero_matrix(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Rat {
        self.entries.get(&(i, j)).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        if v.is_zero() {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), v);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &Rat)> {
        self.entries.iter().map(|(&(i, j), v)| (i, j, v))
    }

    pub fn col(&self, j: usize) -> SparseVec {
        self.entries
            .iter()
            .filter(|((_, c), _)| *c == j)
            .map(|((r, _), v)| (*r, v.clone()))
            .collect()
    }

    pub fn set_col(&mut self, j: usize, v: &SparseVec) {
        for (i, a) in v {
            self.set(*i, j, a.clone());
        }
    }

    pub fn from_cols(rows: usize, cols: &[SparseVec]) -> Self {
        let mut m = Mat::zero(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            m.set_col(j, c);
        }
        m
    }

    pub fn transpose(&self) -> Mat {
        let mut m = Mat::zero(self.cols, self.rows);
        for (i, j, v) in self.iter() {
            m.set(j, i, v.clone());
        }
        m
    }

    pub fn scale(&self, c: &Rat) -> Mat {
        let mut m = Mat::zero(self.rows, self.cols);
        if c.is_zero() {
            return m;
        }
        for (i, j, v) in self.iter() {
            m.set(i, j, v * c);
        }
        m
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut m = self.clone();
        for (i, j, v) in other.iter() {
            let cur = m.get(i, j);
            m.set(i, j, &cur + v);
        }
        m
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        self.add(&other.scale(&Rat::from_int(-1)))
    }

    /// Matrix product, row-sparse against row-sparse.
    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let other_rows = other.row_table();
        let mut out: BTreeMap<(usize, usize), Rat> = BTreeMap::new();
        for (&(i, k), a) in &self.entries {
            if let Some(row) = other_rows.get(&k) {
                for (j, b) in row {
                    let e = out.entry((i, *j)).or_insert_with(Rat::zero);
                    *e += &(a * b);
                }
            }
        }
        out.retain(|_, v| !v.is_zero());
        Mat {
            rows: self.rows,
            cols: other.cols,
            entries: out,
        }
    }

    pub fn mul_vec(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (&(i, j), a) in &self.entries {
            if let Some(x) = v.get(&j) {
                sv_add(&mut out, i, &(a * x));
            }
        }
        out
    }

    /// Columns of `self` followed by columns of `other`.
    pub fn hstack(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        let mut m = Mat::zero(self.rows, self.cols + other.cols);
        for (i, j, v) in self.iter() {
            m.set(i, j, v.clone());
        }
        for (i, j, v) in other.iter() {
            m.set(i, self.cols + j, v.clone());
        }
        m
    }

    fn row_table(&self) -> BTreeMap<usize, Vec<(usize, Rat)>> {
        let mut t: BTreeMap<usize, Vec<(usize, Rat)>> = BTreeMap::new();
        for (&(i, j), v) in &self.entries {
            t.entry(i).or_default().push((j, v.clone()));
        }
        t
    }

    /// Integer-scaled rows: each row multiplied by the lcm of its
    /// denominators and divided by the gcd of the results.
    fn integer_rows(&self) -> Vec<IRow> {
        let table = self.row_table();
        (0..self.rows)
            .map(|i| match table.get(&i) {
                None => Vec::new(),
                Some(row) => {
                    let mut lcm = BigInt::from(1);
                    for (_, v) in row {
                        lcm = lcm.lcm(v.denom());
                    }
                    let ints: Vec<(usize, BigInt)> = row
                        .iter()
                        .map(|(j, v)| (*j, v.numer() * (&lcm / v.denom())))
                        .collect();
                    reduce_content(ints)
                }
            })
            .collect()
    }
}

type IRow = Vec<(usize, BigInt)>;

fn reduce_content(mut row: IRow) -> IRow {
    let mut g = BigInt::zero();
    for (_, v) in &row {
        g = g.gcd(v);
    }
    if !g.is_zero() && !g.is_one() {
        for (_, v) in &mut row {
            *v = &*v / &g;
        }
    }
    row
}

fn irow_get(row: &IRow, col: usize) -> Option<&BigInt> {
    row.binary_search_by_key(&col, |(j, _)| *j)
        .ok()
        .map(|k| &row[k].1)
}

/// `p * target - q * source`, content-reduced. Cancels column `col`.
fn combine(target: &IRow, source: &IRow, p: &BigInt, q: &BigInt) -> IRow {
    let mut out: IRow = Vec::with_capacity(target.len() + source.len());
    let (mut a, mut b) = (0, 0);
    while a < target.len() || b < source.len() {
        let ja = target.get(a).map(|(j, _)| *j);
        let jb = source.get(b).map(|(j, _)| *j);
        match (ja, jb) {
            (Some(x), Some(y)) if x == y => {
                let v = p * &target[a].1 - q * &source[b].1;
                if !v.is_zero() {
                    out.push((x, v));
                }
                a += 1;
                b += 1;
            }
            (Some(x), Some(y)) if x < y => {
                out.push((x, p * &target[a].1));
                a += 1;
            }
            (Some(_), Some(_)) => {
                out.push((jb.unwrap(), -(q * &source[b].1)));
                b += 1;
            }
            (Some(x), None) => {
                out.push((x, p * &target[a].1));
                a += 1;
            }
            (None, Some(y)) => {
                out.push((y, -(q * &source[b].1)));
                b += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    reduce_content(out)
}

/// Row echelon form with pivot bookkeeping.
struct Echelon {
    /// Pivot rows in elimination order; `pivots[k]` is the column of `rows[k]`.
    rows: Vec<IRow>,
    pivots: Vec<usize>,
}

/// Fixed pivot rule: sweep columns left to right; within a column take the
/// surviving row of lowest original index.
fn echelonize(mut rows: Vec<IRow>, ncols: usize) -> Echelon {
    let mut out = Echelon {
        rows: Vec::new(),
        pivots: Vec::new(),
    };
    let mut active: Vec<usize> = (0..rows.len()).collect();
    for col in 0..ncols {
        let Some(pos) = active
            .iter()
            .position(|&r| irow_get(&rows[r], col).is_some())
        else {
            continue;
        };
        let r = active.remove(pos);
        let pivot_row = std::mem::take(&mut rows[r]);
        let p = irow_get(&pivot_row, col).unwrap().clone();
        for &s in &active {
            if let Some(q) = irow_get(&rows[s], col) {
                let q = q.clone();
                rows[s] = combine(&rows[s], &pivot_row, &p, &q);
            }
        }
        out.rows.push(pivot_row);
        out.pivots.push(col);
        if out.pivots.len() == ncols {
            break;
        }
    }
    out
}

impl Echelon {
    /// Back-substitution on the echelon rows given fixed values for the free
    /// columns; returns the full solution vector.
    fn back_substitute(&self, free: &SparseVec, ncols: usize) -> SparseVec {
        let mut x = free.clone();
        for (k, row) in self.rows.iter().enumerate().rev() {
            let c = self.pivots[k];
            let mut acc = Rat::zero();
            for (j, v) in row {
                if *j != c && *j < ncols {
                    if let Some(xv) = x.get(j) {
                        acc += &(&int_rat(v) * xv);
                    }
                }
            }
            if !acc.is_zero() {
                let pv = int_rat(irow_get(row, c).unwrap());
                x.insert(c, &(-&acc) / &pv);
            }
        }
        x.retain(|_, v| !v.is_zero());
        x
    }
}

fn int_rat(v: &BigInt) -> Rat {
    Rat::from_big(v.clone(), BigInt::from(1))
}

/// Exact rank over the rationals.
pub fn rank(m: &Mat) -> usize {
    echelonize(m.integer_rows(), m.cols()).pivots.len()
}

/// Indices of a maximal independent set of columns (the pivot columns under
/// the fixed elimination order).
pub fn pivot_columns(m: &Mat) -> Vec<usize> {
    echelonize(m.integer_rows(), m.cols()).pivots
}

/// A kernel basis in which basis vector `k` has coefficient 1 at
/// `free_cols[k]` and 0 at every other free column. Coordinates of any
/// vector in the span can therefore be read off at the free columns.
pub struct KernelBasis {
    pub basis: Mat,
    pub free_cols: Vec<usize>,
}

impl KernelBasis {
    pub fn dim(&self) -> usize {
        self.free_cols.len()
    }

    pub fn vectors(&self) -> Vec<SparseVec> {
        (0..self.dim()).map(|j| self.basis.col(j)).collect()
    }

    /// Express `v` in this basis; `None` if `v` is not in the span.
    pub fn express(&self, v: &SparseVec) -> Option<Vec<Rat>> {
        let coords: Vec<Rat> = self
            .free_cols
            .iter()
            .map(|c| v.get(c).cloned().unwrap_or_else(Rat::zero))
            .collect();
        let mut check = v.clone();
        for (j, c) in coords.iter().enumerate() {
            if !c.is_zero() {
                sv_axpy(&mut check, &(-c), &self.basis.col(j));
            }
        }
        check.is_empty().then_some(coords)
    }
}

/// Basis of the exact kernel `{v : m v = 0}`, deterministic for a fixed input.
pub fn kernel_basis(m: &Mat) -> KernelBasis {
    let ech = echelonize(m.integer_rows(), m.cols());
    let mut is_pivot = vec![false; m.cols()];
    for &c in &ech.pivots {
        is_pivot[c] = true;
    }
    let free_cols: Vec<usize> = (0..m.cols()).filter(|&c| !is_pivot[c]).collect();
    let mut basis = Mat::zero(m.cols(), free_cols.len());
    for (k, &f) in free_cols.iter().enumerate() {
        let x = ech.back_substitute(&sv_unit(f), m.cols());
        basis.set_col(k, &x);
    }
    KernelBasis { basis, free_cols }
}

/// Solve `m x = b` exactly; `None` when the system is inconsistent.
/// Free variables are fixed to zero.
pub fn solve(m: &Mat, b: &SparseVec) -> Result<Option<SparseVec>> {
    if let Some((&i, _)) = b.last_key_value() {
        if i >= m.rows() {
            return Err(Error::DimensionMismatch(format!(
                "rhs touches row {i} of a {}-row system",
                m.rows()
            )));
        }
    }
    // Augment with b as an extra column that is never eligible as a pivot.
    let mut aug = Mat::zero(m.rows(), m.cols() + 1);
    for (i, j, v) in m.iter() {
        aug.set(i, j, v.clone());
    }
    for (i, v) in b {
        aug.set(*i, m.cols(), v.clone());
    }
    let ech = echelonize(aug.integer_rows(), m.cols());
    // Consistency: eliminate over all columns including the augmented one;
    // a pivot landing there means b is outside the column space.
    let full = echelonize(aug.integer_rows(), m.cols() + 1);
    if full.pivots.contains(&m.cols()) {
        return Ok(None);
    }
    // Consistent: each echelon row (r | beta) encodes the equation r·x = beta.
    let mut x = SparseVec::new();
    for (k, row) in ech.rows.iter().enumerate().rev() {
        let c = ech.pivots[k];
        let mut acc = Rat::zero();
        let mut beta = Rat::zero();
        for (j, v) in row {
            if *j == c {
                continue;
            } else if *j == m.cols() {
                beta = int_rat(v);
            } else if let Some(xv) = x.get(j) {
                acc += &(&int_rat(v) * xv);
            }
        }
        let pv = int_rat(irow_get(row, c).unwrap());
        let val = &(&beta - &acc) / &pv;
        if !val.is_zero() {
            x.insert(c, val);
        }
    }
    Ok(Some(x))
}

/// Basis of `span(a) ∩ span(b)`, where spans are given by matrix columns.
pub fn intersect(a: &Mat, b: &Mat) -> Result<Mat> {
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch(
            "intersect: ambient dimensions differ".into(),
        ));
    }
    let stacked = a.hstack(b);
    let ker = kernel_basis(&stacked);
    let mut acc = RankAccumulator::new(a.rows());
    let mut cols = Vec::new();
    for v in ker.vectors() {
        let u: SparseVec = v.iter().filter(|(j, _)| **j < a.cols()).fold(
            SparseVec::new(),
            |mut acc_u, (j, c)| {
                acc_u.insert(*j, c.clone());
                acc_u
            },
        );
        let w = a.mul_vec(&u);
        if acc.try_add(&w) {
            cols.push(w);
        }
    }
    Ok(Mat::from_cols(a.rows(), &cols))
}

/// Incremental rank tracking: feeds vectors one at a time and reports
/// whether each enlarges the span. Deterministic reduction order.
pub struct RankAccumulator {
    ncols: usize,
    rows: Vec<IRow>,
    pivots: Vec<usize>,
}

impl RankAccumulator {
    pub fn new(ncols: usize) -> Self {
        RankAccumulator {
            ncols,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Returns true when `v` is independent of everything added so far
    /// (and keeps it), false when it already lies in the span.
    pub fn try_add(&mut self, v: &SparseVec) -> bool {
        let mut lcm = BigInt::from(1);
        for (_, c) in v {
            lcm = lcm.lcm(c.denom());
        }
        let mut row: IRow = v
            .iter()
            .map(|(j, c)| (*j, c.numer() * (&lcm / c.denom())))
            .collect();
        row = reduce_content(row);
        for (k, prow) in self.rows.iter().enumerate() {
            if row.is_empty() {
                break;
            }
            let c = self.pivots[k];
            if let Some(q) = irow_get(&row, c) {
                let p = irow_get(prow, c).unwrap().clone();
                let q = q.clone();
                row = combine(&row, prow, &p, &q);
            }
        }
        if row.is_empty() {
            return false;
        }
        let pivot = row[0].0;
        debug_assert!(pivot < self.ncols);
        let pos = self
            .pivots
            .iter()
            .position(|&p| p > pivot)
            .unwrap_or(self.pivots.len());
        self.rows.insert(pos, row);
        self.pivots.insert(pos, pivot);
        true
    }

}

/// Does `v` lie in the span of the columns of `m`?
pub fn span_contains(m: &Mat, v: &SparseVec) -> Result<bool> {
    Ok(solve(m, v)?.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_identity_and_zero() {
        assert_eq!(rank(&Mat::identity(2)), 2);
        assert_eq!(rank(&Mat::zero(3, 5)), 0);
    }

    #[test]
    fn rank_dependent_rows() {
        // Hand row-reduction: second row is twice the first.
        let m = Mat::from_dense(&[vec![1, 2], vec![2, 4]]);
        assert_eq!(rank(&m), 1);
    }

    #[test]
    fn kernel_identity_empty() {
        assert_eq!(kernel_basis(&Mat::identity(3)).dim(), 0);
    }

    #[test]
    fn kernel_zero_matrix_standard_basis() {
        let k = kernel_basis(&Mat::zero(2, 2));
        assert_eq!(k.dim(), 2);
        assert_eq!(k.basis, Mat::identity(2));
    }

    #[test]
    fn kernel_line() {
        // Solved by hand: kernel of [1 1] is the line through (1, -1).
        let m = Mat::from_dense(&[vec![1, 1]]);
        let k = kernel_basis(&m);
        assert_eq!(k.dim(), 1);
        let v = k.basis.col(0);
        let x = v.get(&0).cloned().unwrap_or_else(Rat::zero);
        let y = v.get(&1).cloned().unwrap_or_else(Rat::zero);
        assert_eq!(&x + &y, Rat::zero());
        assert!(!x.is_zero());
    }

    #[test]
    fn kernel_vectors_annihilate() {
        let m = Mat::from_dense(&[vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]);
        let k = kernel_basis(&m);
        assert_eq!(rank(&m) + k.dim(), 3);
        for v in k.vectors() {
            assert!(m.mul_vec(&v).is_empty());
        }
    }

    #[test]
    fn solve_identity() {
        let b: SparseVec = [(0, Rat::from_int(3)), (1, Rat::new(1, 2))].into();
        let x = solve(&Mat::identity(2), &b).unwrap().unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn solve_underdetermined_by_substitution() {
        let m = Mat::from_dense(&[vec![1, 1]]);
        let b: SparseVec = [(0, Rat::from_int(2))].into();
        let x = solve(&m, &b).unwrap().unwrap();
        assert_eq!(m.mul_vec(&x), b);
    }

    #[test]
    fn solve_inconsistent() {
        let m = Mat::from_dense(&[vec![1], vec![1]]);
        let b: SparseVec = [(1, Rat::from_int(1))].into();
        assert!(solve(&m, &b).unwrap().is_none());
    }

    #[test]
    fn solve_dimension_mismatch() {
        let m = Mat::from_dense(&[vec![1, 0]]);
        let b: SparseVec = [(3, Rat::from_int(1))].into();
        assert!(solve(&m, &b).is_err());
    }

    #[test]
    fn intersect_examples() {
        let e1 = Mat::from_dense(&[vec![1], vec![0]]);
        let e2 = Mat::from_dense(&[vec![0], vec![1]]);
        let same = intersect(&e1, &e1).unwrap();
        assert_eq!(rank(&same), 1);
        assert!(span_contains(&e1, &same.col(0)).unwrap());

        assert_eq!(intersect(&e1, &e2).unwrap().cols(), 0);

        // span(e1+e2, e2) ∩ span(e1) = span(e1), by hand.
        let a = Mat::from_dense(&[vec![1, 0], vec![1, 1]]);
        let m = intersect(&a, &e1).unwrap();
        assert_eq!(rank(&m), 1);
        assert!(span_contains(&e1, &m.col(0)).unwrap());
    }

    #[test]
    fn express_in_kernel_basis() {
        let m = Mat::from_dense(&[vec![1, 1, 1]]);
        let k = kernel_basis(&m);
        assert_eq!(k.dim(), 2);
        let mut v = SparseVec::new();
        sv_axpy(&mut v, &Rat::from_int(2), &k.basis.col(0));
        sv_axpy(&mut v, &Rat::from_int(-5), &k.basis.col(1));
        let c = k.express(&v).unwrap();
        assert_eq!(c, vec![Rat::from_int(2), Rat::from_int(-5)]);
        // Something outside the kernel is rejected.
        assert!(k.express(&sv_unit(0)).is_none());
    }

    #[test]
    fn rank_accumulator_filters_dependent() {
        let mut acc = RankAccumulator::new(3);
        assert!(acc.try_add(&sv_unit(0)));
        assert!(acc.try_add(&sv_unit(1)));
        let mut dep = SparseVec::new();
        sv_add(&mut dep, 0, &Rat::from_int(3));
        sv_add(&mut dep, 1, &Rat::from_int(-7));
        assert!(!acc.try_add(&dep));
        assert!(acc.try_add(&sv_unit(2)));
        assert_eq!(acc.rank(), 3);
    }
}
