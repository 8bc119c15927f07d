//! Direct solvers for shifted sparse operators: banded LU with partial
//! pivoting, plus a Woodbury correction for the few entries that fall outside
//! the band (wrap-around couplings of periodic grids).

use super::csr::CsrMatrix;
use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Pivots below `SINGULAR_FACTOR * eps * ||A||` are treated as exact zeros.
const SINGULAR_FACTOR: f64 = 10.0;

/// LU factorization `P A = L U` of a banded matrix with `kl` sub- and `ku`
/// super-diagonals. Fill from pivoting widens `U` to `kl + ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandedLu<T: Scalar> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    band: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    /// Factor the in-band part (`|i - j| <= kl` below, `<= ku` above) of
    /// `entries(i)`, which yields the `(column, value)` pairs of row `i`.
    /// Entries outside the band are ignored.
    pub fn factor<I>(n: usize, kl: usize, ku: usize, mut entries: impl FnMut(usize) -> I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, T)>,
    {
        let width = 2 * kl + ku + 1;
        let mut band = vec![T::zero(); n * width];
        let mut anorm: f64 = 0.0;
        for i in 0..n {
            let mut rowsum = 0.0;
            for (j, v) in entries(i) {
                if j + kl < i || j > i + ku {
                    continue;
                }
                band[i * width + (j + kl - i)] += v;
                rowsum += v.abs();
            }
            anorm = anorm.max(rowsum);
        }
        let mut lu = Self { n, kl, ku, width, band, piv: vec![0; n] };
        lu.eliminate(anorm)?;
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.band[i * self.width + (j + self.kl - i)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.band[i * self.width + (j + self.kl - i)]
    }

    fn eliminate(&mut self, anorm: f64) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let tiny = SINGULAR_FACTOR * f64::EPSILON * anorm.max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);

            let mut p = k;
            let mut best = self.at(k, k).abs();
            for r in k + 1..=last_row {
                let v = self.at(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            self.piv[k] = p;
            if !(best > tiny) || !best.is_finite() {
                return Err(Error::SingularShift { re: f64::NAN, im: f64::NAN });
            }
            if p != k {
                for j in k..=last_col {
                    let a = self.at(k, j);
                    let b = self.at(p, j);
                    *self.at_mut(k, j) = b;
                    *self.at_mut(p, j) = a;
                }
            }

            let pivot = self.at(k, k);
            for r in k + 1..=last_row {
                let l = self.at(r, k) / pivot;
                *self.at_mut(r, k) = l;
                if l == T::zero() {
                    continue;
                }
                let urow = k * self.width + kl - k;
                let rrow = r * self.width + kl - r;
                for j in k + 1..=last_col {
                    let u = self.band[urow + j];
                    self.band[rrow + j] -= l * u;
                }
            }
        }
        Ok(())
    }

    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk == T::zero() {
                continue;
            }
            for r in k + 1..=(k + kl).min(n - 1) {
                b[r] -= self.at(r, k) * bk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for j in k + 1..=(k + kl + ku).min(n - 1) {
                acc -= self.at(k, j) * b[j];
            }
            b[k] = acc / self.at(k, k);
        }
    }

    /// Solve `A^H x = b` in place.
    pub fn solve_adjoint_in_place(&self, b: &mut [T]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        assert_eq!(b.len(), n);
        // U^H y = b (forward substitution).
        for k in 0..n {
            let mut acc = b[k];
            for i in k.saturating_sub(kl + ku)..k {
                acc -= self.at(i, k).conj() * b[i];
            }
            b[k] = acc / self.at(k, k).conj();
        }
        // Undo the elimination steps in reverse order.
        for k in (0..n).rev() {
            let mut acc = b[k];
            for r in k + 1..=(k + kl).min(n - 1) {
                acc -= self.at(r, k).conj() * b[r];
            }
            b[k] = acc;
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
        }
    }
}

/// Dense LU with partial pivoting for the small Woodbury capacitance matrix.
#[derive(Debug, Clone)]
struct DenseLu<T: Scalar> {
    n: usize,
    a: Vec<T>, // row-major
    piv: Vec<usize>,
}

impl<T: Scalar> DenseLu<T> {
    fn factor(n: usize, mut a: Vec<T>) -> Result<Self> {
        let anorm = a.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let tiny = SINGULAR_FACTOR * f64::EPSILON * anorm.max(f64::MIN_POSITIVE);
        let mut piv = vec![0; n];
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x * n + k].abs().total_cmp(&a[y * n + k].abs()))
                .unwrap();
            piv[k] = p;
            if !(a[p * n + k].abs() > tiny) {
                return Err(Error::SingularShift { re: f64::NAN, im: f64::NAN });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
            }
            let pivot = a[k * n + k];
            for r in k + 1..n {
                let l = a[r * n + k] / pivot;
                a[r * n + k] = l;
                for j in k + 1..n {
                    let u = a[k * n + j];
                    a[r * n + j] -= l * u;
                }
            }
        }
        Ok(Self { n, a, piv })
    }

    fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        for k in 0..n {
            b.swap(k, self.piv[k]);
        }
        for r in 0..n {
            let mut acc = b[r];
            for j in 0..r {
                acc -= self.a[r * n + j] * b[j];
            }
            b[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = b[r];
            for j in r + 1..n {
                acc -= self.a[r * n + j] * b[j];
            }
            b[r] = acc / self.a[r * n + r];
        }
    }
}

/// Direct solver for `A - sigma I` where `A` is a sparse matrix whose entries
/// lie within `band` of the diagonal except for a few outliers.
///
/// Outliers are gathered column-wise into `E_C` so that
/// `A - sigma I = B + E_C P_C^T` and solved by the Woodbury identity.
#[derive(Debug, Clone)]
pub struct ShiftedSolver<T: Scalar> {
    lu: BandedLu<T>,
    outlier_cols: Vec<usize>,
    /// `B^{-1} E_C`, column-major `n x |C|`.
    z: Vec<T>,
    capacitance: Option<DenseLu<T>>,
    shift: T,
}

impl<T: Scalar> ShiftedSolver<T> {
    pub fn new(a: &CsrMatrix, band: usize, shift: T) -> Result<Self> {
        let n = a.dim();
        let band = band.min(n.saturating_sub(1));
        let row = |i: usize| {
            a.row(i)
                .map(|(j, v)| (j, T::from_real(v)))
                .chain(std::iter::once((i, -shift)))
                .collect::<Vec<_>>()
        };
        let lu = BandedLu::factor(n, band, band, row).map_err(|e| tag_shift(e, shift))?;

        let mut outlier_cols: Vec<usize> = (0..n)
            .flat_map(|i| a.row(i).filter(move |&(j, _)| i.abs_diff(j) > band).map(|(j, _)| j))
            .collect();
        outlier_cols.sort_unstable();
        outlier_cols.dedup();

        let m = outlier_cols.len();
        if m == 0 {
            return Ok(Self { lu, outlier_cols, z: Vec::new(), capacitance: None, shift });
        }

        let mut z = vec![T::zero(); n * m];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if i.abs_diff(j) > band {
                    let c = outlier_cols.binary_search(&j).unwrap();
                    z[c * n + i] += T::from_real(v);
                }
            }
        }
        for c in 0..m {
            lu.solve_in_place(&mut z[c * n..(c + 1) * n]);
        }
        let mut cap = vec![T::zero(); m * m];
        for r in 0..m {
            for c in 0..m {
                cap[r * m + c] = z[c * n + outlier_cols[r]];
            }
            cap[r * m + r] += T::one();
        }
        let capacitance = Some(DenseLu::factor(m, cap).map_err(|e| tag_shift(e, shift))?);
        Ok(Self { lu, outlier_cols, z, capacitance, shift })
    }

    pub fn shift(&self) -> T {
        self.shift
    }

    pub fn dim(&self) -> usize {
        self.lu.dim()
    }

    /// Solve `(A - sigma I) x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        self.lu.solve_in_place(b);
        if let Some(cap) = &self.capacitance {
            let n = self.dim();
            let mut t: Vec<T> = self.outlier_cols.iter().map(|&c| b[c]).collect();
            cap.solve_in_place(&mut t);
            for (c, tc) in t.iter().enumerate() {
                let col = &self.z[c * n..(c + 1) * n];
                for (bi, zi) in b.iter_mut().zip(col) {
                    *bi -= *zi * *tc;
                }
            }
        }
    }

    /// Solve `(A - sigma I)^H x = b` in place. Only available when the
    /// operator has no out-of-band entries.
    pub fn solve_adjoint_in_place(&self, b: &mut [T]) -> Result<()> {
        if self.capacitance.is_some() {
            return Err(Error::Unsupported(
                "adjoint solves with wrap-around couplings (periodic z)".into(),
            ));
        }
        self.lu.solve_adjoint_in_place(b);
        Ok(())
    }
}

fn tag_shift<T: Scalar>(e: Error, shift: T) -> Error {
    match e {
        Error::SingularShift { .. } => Error::SingularShift { re: shift.re(), im: shift.im() },
        other => other,
    }
}
