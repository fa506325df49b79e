//! Block-structured sparse systems and the sparse LU backend.

use super::assembly::Coo;
use crate::error::{Error, Result};
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64;
use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;

/// Field types the solver handles (real cell problems, complex macro problems).
pub trait Scalar:
    faer::traits::ComplexField
    + Copy
    + Default
    + PartialEq
    + Send
    + Sync
    + std::fmt::Debug
    + From<f64>
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Mul<f64, Output = Self>
    + 'static
{
    fn modulus(self) -> f64;
    fn mm_entry(self) -> String;
    fn parts(self) -> (f64, f64);
    fn from_parts(re: f64, im: f64) -> Self;
    const MM_FIELD: &'static str;
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn mm_entry(self) -> String {
        format!("{self:e}")
    }
    fn parts(self) -> (f64, f64) {
        (self, 0.0)
    }
    fn from_parts(re: f64, _: f64) -> Self {
        re
    }
    const MM_FIELD: &'static str = "real";
}

impl Scalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn mm_entry(self) -> String {
        format!("{:e} {:e}", self.re, self.im)
    }
    fn parts(self) -> (f64, f64) {
        (self.re, self.im)
    }
    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    const MM_FIELD: &'static str = "complex";
}

/// Named, contiguous unknown blocks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BlockLayout {
    blocks: Vec<(String, Range<usize>)>,
}

impl BlockLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: &str, len: usize) -> Range<usize> {
        let start = self.n();
        self.blocks.push((name.to_string(), start..start + len));
        start..start + len
    }

    pub fn n(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.1.end)
    }

    pub fn range(&self, name: &str) -> Range<usize> {
        self.blocks
            .iter()
            .find(|b| b.0 == name)
            .map(|b| b.1.clone())
            .unwrap_or_else(|| panic!("no block named {name}"))
    }

    pub fn blocks(&self) -> &[(String, Range<usize>)] {
        &self.blocks
    }

    /// True when the ranges tile [0, n) without gaps or overlap.
    pub fn is_partition(&self) -> bool {
        let mut next = 0;
        for (_, r) in &self.blocks {
            if r.start != next || r.end < r.start {
                return false;
            }
            next = r.end;
        }
        true
    }
}

#[derive(Clone, Debug)]
pub struct SparseSystem<T: Scalar> {
    pub layout: BlockLayout,
    pub triplets: Vec<(usize, usize, T)>,
    pub rhs: Vec<T>,
}

impl<T: Scalar> SparseSystem<T> {
    pub fn new(layout: BlockLayout) -> Self {
        let n = layout.n();
        SparseSystem { layout, triplets: Vec::new(), rhs: vec![T::default(); n] }
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    /// Add `scale * block` at (row block, column block).
    pub fn add(&mut self, row: &str, col: &str, block: &Coo, scale: T) -> Result<()> {
        let (r, c) = (self.layout.range(row), self.layout.range(col));
        if block.nrows != r.len() || block.ncols != c.len() {
            return Err(Error::Solver(format!(
                "block ({row}, {col}) is {}x{}, layout expects {}x{}",
                block.nrows,
                block.ncols,
                r.len(),
                c.len()
            )));
        }
        self.triplets.extend(block.entries.iter().map(|&(i, j, v)| (r.start + i, c.start + j, scale * v)));
        Ok(())
    }

    pub fn add_rhs(&mut self, row: &str, f: &[f64], scale: T) {
        let r = self.layout.range(row);
        assert_eq!(f.len(), r.len());
        for (i, v) in f.iter().enumerate() {
            self.rhs[r.start + i] = self.rhs[r.start + i] + scale * *v;
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::default(); self.n()];
        for &(i, j, v) in &self.triplets {
            y[i] = y[i] + v * x[j];
        }
        y
    }

    /// b − Ax accumulated in double-double arithmetic.
    fn residual_compensated(&self, x: &[T]) -> Vec<T> {
        let mut acc: Vec<[Dd; 2]> = self.rhs.iter().map(|b| {
            let (re, im) = b.parts();
            [Dd(re, 0.0), Dd(im, 0.0)]
        }).collect();
        for &(i, j, v) in &self.triplets {
            let ((a, b), (c, d)) = (v.parts(), x[j].parts());
            let r = &mut acc[i];
            r[0].add_prod(-a, c);
            r[0].add_prod(b, d);
            r[1].add_prod(-a, d);
            r[1].add_prod(-b, c);
        }
        acc.iter().map(|r| T::from_parts(r[0].0 + r[0].1, r[1].0 + r[1].1)).collect()
    }

    /// ‖Ax − b‖∞ / ‖b‖∞ (absolute when b = 0).
    pub fn relative_residual(&self, x: &[T]) -> f64 {
        let ax = self.apply(x);
        let num = ax.iter().zip(&self.rhs).map(|(a, b)| (*a - *b).modulus()).fold(0.0, f64::max);
        let den = self.rhs.iter().map(|b| b.modulus()).fold(0.0, f64::max);
        if den > 0.0 {
            num / den
        } else {
            num
        }
    }

    /// Rows without any stored entry (none may exist in a valid system).
    pub fn empty_rows(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n()];
        for &(i, _, _) in &self.triplets {
            seen[i] = true;
        }
        seen.iter().enumerate().filter(|(_, s)| !**s).map(|(i, _)| i).collect()
    }

    pub fn factorize(&self) -> Result<Factorization<T>> {
        if let Some(&i) = self.empty_rows().first() {
            return Err(Error::Singular { index: i });
        }
        Factorization::new(self.n(), &self.triplets)
    }

    /// Direct solve plus two steps of iterative refinement.
    pub fn solve(&self) -> Result<Vec<T>> {
        let lu = self.factorize()?;
        let mut x = lu.solve(&self.rhs)?;
        for _ in 0..2 {
            let r = self.residual_compensated(&x);
            let dx = lu.solve(&r)?;
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a = *a + *d);
        }
        Ok(x)
    }

    /// Matrix dump in MatrixMarket coordinate format (duplicates summed).
    pub fn write_matrix_market(&self, path: &Path) -> Result<()> {
        let mut merged = std::collections::BTreeMap::new();
        for &(i, j, v) in &self.triplets {
            let e = merged.entry((j, i)).or_insert(T::default());
            *e = *e + v;
        }
        let mut s = format!("%%MatrixMarket matrix coordinate {} general\n", T::MM_FIELD);
        let _ = writeln!(s, "{} {} {}", self.n(), self.n(), merged.len());
        for ((j, i), v) in merged {
            let _ = writeln!(s, "{} {} {}", i + 1, j + 1, v.mm_entry());
        }
        std::fs::write(path, s)?;
        Ok(())
    }
}

/// Unevaluated sum hi + lo.
#[derive(Clone, Copy)]
struct Dd(f64, f64);

impl Dd {
    fn add(&mut self, v: f64) {
        let s = self.0 + v;
        let bb = s - self.0;
        let err = (self.0 - (s - bb)) + (v - bb);
        self.0 = s;
        self.1 += err;
    }

    fn add_prod(&mut self, a: f64, b: f64) {
        let p = a * b;
        self.add(p);
        self.1 += a.mul_add(b, -p);
    }
}

/// Sparse LU factors; immutable and reusable for many right-hand sides.
pub struct Factorization<T: Scalar> {
    lu: Lu<usize, T>,
    n: usize,
}

impl<T: Scalar> Factorization<T> {
    pub fn new(n: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        // one factorization per thread; concurrency comes from the callers
        static SEQ: std::sync::Once = std::sync::Once::new();
        SEQ.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
        let trip: Vec<Triplet<usize, usize, T>> = triplets.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
        let matrix = SparseColMat::<usize, T>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::Solver(format!("matrix construction failed: {e:?}")))?;
        let lu = matrix.sp_lu().map_err(|e| match e {
            faer::sparse::linalg::LuError::SymbolicSingular { index } => Error::Singular { index },
            other => Error::Solver(format!("{other:?}")),
        })?;
        Ok(Factorization { lu, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        Ok(self.solve_many(&[b.to_vec()])?.pop().unwrap())
    }

    pub fn solve_many(&self, bs: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
        use faer::linalg::solvers::Solve;
        let k = bs.len();
        let rhs = Mat::<T>::from_fn(self.n, k, |i, j| bs[j][i]);
        let x = self.lu.solve(&rhs);
        let mut out = Vec::with_capacity(k);
        for j in 0..k {
            let col: Vec<T> = (0..self.n).map(|i| x[(i, j)]).collect();
            if let Some(i) = col.iter().position(|v| !v.modulus().is_finite()) {
                return Err(Error::Singular { index: i });
            }
            out.push(col);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve() {
        let mut layout = BlockLayout::new();
        layout.push("u", 3);
        let mut s = SparseSystem::<f64>::new(layout);
        let mut eye = Coo::new(3, 3);
        for i in 0..3 {
            eye.push(i, i, 1.0);
        }
        s.add("u", "u", &eye, 1.0).unwrap();
        s.add_rhs("u", &[1.0, -2.0, 3.5], 1.0);
        assert_eq!(s.solve().unwrap(), vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn singular_reports_pivot() {
        let mut layout = BlockLayout::new();
        layout.push("u", 2);
        let mut s = SparseSystem::<Complex64>::new(layout);
        let mut a = Coo::new(2, 2);
        a.push(0, 0, 1.0);
        a.push(0, 1, 2.0);
        s.add("u", "u", &a, Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(s.solve(), Err(Error::Singular { index: 1 })));
    }
}
