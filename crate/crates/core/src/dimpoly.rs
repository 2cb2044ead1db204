//! Exact integer-valued polynomials for class dimensions.
//!
//! For the open XY chain the size of the class labeled N is a degree-N
//! polynomial in the chain length L. The coefficients are rationals (for
//! example 4/15), so everything here runs on arbitrary-precision rational
//! arithmetic; no floating point enters any fit.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Polynomial with exact rational coefficients, index = power of L.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionPolynomial {
    coeffs: Vec<BigRational>,
}

impl DimensionPolynomial {
    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        assert!(!coeffs.is_empty(), "a polynomial needs at least one coefficient");
        DimensionPolynomial { coeffs }
    }

    /// Nominal degree (length of the coefficient vector minus one); leading
    /// coefficients may be zero when a lower-order polynomial was fit with
    /// more nodes than needed.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Degree after stripping zero leading coefficients.
    pub fn effective_degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| !c.is_zero())
            .unwrap_or(0)
    }

    /// Coefficients k_0..k_degree, exact.
    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Exact evaluation at integer argument.
    pub fn eval(&self, l: i64) -> BigRational {
        let x = BigRational::from_integer(BigInt::from(l));
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * &x + c;
        }
        acc
    }

    /// Evaluation that must land on a nonnegative integer.
    pub fn eval_count(&self, l: i64) -> Result<BigInt> {
        let v = self.eval(l);
        if !v.is_integer() || v.is_negative() {
            return Err(Error::Consistency(format!(
                "polynomial value {v} at L={l} is not a nonnegative integer"
            )));
        }
        Ok(v.to_integer())
    }

    /// Check integer-valuedness and nonnegativity over `0..=max_l`.
    pub fn verify_integer_valued(&self, max_l: i64) -> Result<()> {
        for l in 0..=max_l {
            self.eval_count(l)?;
        }
        Ok(())
    }
}

impl std::fmt::Display for DimensionPolynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() && self.coeffs.len() > 1 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match j {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})L")?,
                _ => write!(f, "({c})L^{j}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Where a value-vector entry came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueSource {
    /// Counted by the closure engine.
    Counted,
    /// Filled in from the lower-degree polynomials and the 4^N sum rule.
    Recurrence,
}

/// The N+1 class sizes D^N(0..N) used as interpolation nodes.
#[derive(Debug, Clone)]
pub struct ValueVector {
    values: Vec<BigInt>,
    sources: Vec<ValueSource>,
}

impl ValueVector {
    pub fn new(values: Vec<BigInt>, sources: Vec<ValueSource>) -> Result<Self> {
        if values.is_empty() || values.len() != sources.len() {
            return Err(Error::Consistency(
                "value vector needs matching nonempty values and sources".into(),
            ));
        }
        if values.iter().any(|v| v.is_negative()) {
            return Err(Error::Consistency("class sizes cannot be negative".into()));
        }
        Ok(ValueVector { values, sources })
    }

    pub fn counted(values: Vec<BigInt>) -> Result<Self> {
        let sources = vec![ValueSource::Counted; values.len()];
        ValueVector::new(values, sources)
    }

    pub fn values(&self) -> &[BigInt] {
        &self.values
    }

    pub fn sources(&self) -> &[ValueSource] {
        &self.sources
    }

    pub fn degree(&self) -> usize {
        self.values.len() - 1
    }
}

/// Exact interpolation through points (x_i, y_i) with distinct integer nodes,
/// via Newton divided differences expanded to monomial coefficients.
fn interpolate(xs: &[i64], ys: &[BigRational]) -> DimensionPolynomial {
    let n = xs.len();
    debug_assert!(n > 0 && n == ys.len());
    // divided-difference table, in place
    let mut dd: Vec<BigRational> = ys.to_vec();
    for k in 1..n {
        for i in (k..n).rev() {
            let denom = BigRational::from_integer(BigInt::from(xs[i] - xs[i - k]));
            dd[i] = (&dd[i] - &dd[i - 1]) / denom;
        }
    }
    // expand sum_k dd[k] * prod_{j<k} (x - x_j) into monomial coefficients
    let mut coeffs = vec![BigRational::zero(); n];
    let mut basis: Vec<BigRational> = vec![BigRational::one()];
    for (k, c) in dd.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            coeffs[j] += c * b;
        }
        if k + 1 < n {
            let xk = BigRational::from_integer(BigInt::from(xs[k]));
            let mut next = vec![BigRational::zero(); basis.len() + 1];
            for (j, b) in basis.iter().enumerate() {
                next[j + 1] += b;
                next[j] -= b * &xk;
            }
            basis = next;
        }
    }
    DimensionPolynomial::from_coeffs(coeffs)
}

/// Solve for the degree-N polynomial through the value vector at nodes 0..N.
/// Always solvable: distinct nodes make the Vandermonde system invertible.
pub fn solve_vandermonde(values: &ValueVector) -> DimensionPolynomial {
    let n = values.degree();
    let xs: Vec<i64> = (0..=n as i64).collect();
    let ys: Vec<BigRational> = values
        .values()
        .iter()
        .map(|v| BigRational::from_integer(v.clone()))
        .collect();
    interpolate(&xs, &ys)
}

/// Value vector of the XY class labeled N, filled from the lower-degree
/// polynomials: sizes vanish below half the label, mirror down to an already
/// known class up to the label, and the final entry balances the total
/// operator count 4^N against all lower classes (each counted twice for its
/// mirror image).
pub fn xy_value_vector(n: usize, known: &[DimensionPolynomial]) -> Result<ValueVector> {
    if known.len() < n {
        return Err(Error::Consistency(format!(
            "need polynomials for labels 0..{} to build the label-{n} vector, got {}",
            n.saturating_sub(1),
            known.len()
        )));
    }
    let mut values = Vec::with_capacity(n + 1);
    let mut sources = Vec::with_capacity(n + 1);
    for m in 0..=n {
        if 2 * m < n {
            values.push(BigInt::zero());
            sources.push(ValueSource::Recurrence);
        } else if m < n {
            // chain of length m holds the mirror class 2m - n instead
            let v = known[2 * m - n].eval_count(m as i64)?;
            values.push(v);
            sources.push(ValueSource::Recurrence);
        } else {
            let mut total = BigInt::from(4).pow(n as u32);
            for poly in known.iter().take(n) {
                total -= poly.eval_count(n as i64)? * 2;
            }
            if total.is_negative() {
                return Err(Error::Consistency(format!(
                    "negative final entry for label {n}: lower polynomials overcount"
                )));
            }
            values.push(total);
            sources.push(ValueSource::Recurrence);
        }
    }
    ValueVector::new(values, sources)
}

/// The ladder of XY polynomials for labels 0..=max_label, built from the
/// constant identity class upward.
pub fn xy_polynomial_ladder(max_label: usize) -> Result<Vec<DimensionPolynomial>> {
    let mut known: Vec<DimensionPolynomial> = vec![DimensionPolynomial::from_coeffs(vec![
        BigRational::one(),
    ])];
    for n in 1..=max_label {
        let vec = xy_value_vector(n, &known)?;
        known.push(solve_vandermonde(&vec));
    }
    Ok(known)
}

/// Exact interpolation through every point, degree = len - 1. Unlike
/// [`fit_with_holdout`] nothing is held back, so this only asserts that the
/// nodes are distinct; the caller vouches for the degree.
pub fn interpolate_points(points: &[(i64, BigInt)]) -> Result<DimensionPolynomial> {
    if points.is_empty() {
        return Err(Error::Config("interpolation needs at least 1 point".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for (x, _) in points {
        if !seen.insert(*x) {
            return Err(Error::Config(format!("duplicate node L={x}")));
        }
    }
    let xs: Vec<i64> = points.iter().map(|(x, _)| *x).collect();
    let ys: Vec<BigRational> = points
        .iter()
        .map(|(_, y)| BigRational::from_integer(y.clone()))
        .collect();
    Ok(interpolate(&xs, &ys))
}

/// Interpolate the first `degree + 1` points exactly and require every
/// remaining point to lie on the curve (held-out validation). Errors when
/// there is nothing held out or a held-out point misses.
pub fn fit_with_holdout(points: &[(i64, BigInt)], degree: usize) -> Result<DimensionPolynomial> {
    if points.len() < degree + 2 {
        return Err(Error::Config(format!(
            "degree-{degree} fit needs at least {} points so one is held out, got {}",
            degree + 2,
            points.len()
        )));
    }
    let mut seen = std::collections::HashSet::new();
    for (x, _) in points {
        if !seen.insert(*x) {
            return Err(Error::Config(format!("duplicate node L={x}")));
        }
    }
    let train = &points[..=degree];
    let xs: Vec<i64> = train.iter().map(|(x, _)| *x).collect();
    let ys: Vec<BigRational> = train
        .iter()
        .map(|(_, y)| BigRational::from_integer(y.clone()))
        .collect();
    let poly = interpolate(&xs, &ys);
    for (x, y) in &points[degree + 1..] {
        let predicted = poly.eval(*x);
        let actual = BigRational::from_integer(y.clone());
        if predicted != actual {
            return Err(Error::Consistency(format!(
                "not a degree-{degree} polynomial: held-out L={x} gives {y}, fit predicts {predicted}"
            )));
        }
    }
    Ok(poly)
}

/// Smallest degree whose leading-window fit reproduces every held-out point.
/// At least one point is always held out, so the reported degree never
/// consumes the full data.
pub fn detect_degree(points: &[(i64, BigInt)]) -> Result<(usize, DimensionPolynomial)> {
    if points.len() < 2 {
        return Err(Error::Config("degree detection needs at least 2 points".into()));
    }
    for degree in 0..=points.len() - 2 {
        if let Ok(poly) = fit_with_holdout(points, degree) {
            return Ok((degree, poly));
        }
    }
    Err(Error::Consistency(format!(
        "no polynomial of degree <= {} fits the data",
        points.len() - 2
    )))
}

/// Count classes with the engine over `sizes`, then fit and hold out.
/// The callback maps a chain length to the class size (erroring on an
/// incomplete closure).
pub fn fit_from_engine(
    mut class_size: impl FnMut(u32) -> Result<usize>,
    degree: usize,
    sizes: &[u32],
) -> Result<DimensionPolynomial> {
    let mut points = Vec::with_capacity(sizes.len());
    for &l in sizes {
        points.push((l as i64, BigInt::from(class_size(l)?)));
    }
    fit_with_holdout(&points, degree)
}
