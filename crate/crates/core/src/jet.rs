//! Truncated multivariate Taylor arithmetic ("jets").
//!
//! A [`Jet`] carries the Taylor coefficients of a smooth function of `m`
//! variables around a seed point, up to total degree [`MAX_ORDER`]. Every
//! elementary operation is exact on the retained coefficients, so partial
//! derivatives up to order four come out of ordinary arithmetic without
//! finite differences.
//!
//! Jets also track a *valid order*: differentiating a jet of order `k`
//! yields a jet of order `k - 1`, and binary operations keep the smaller
//! order of their operands. Coefficients above the valid order are never
//! stored, so a stale high-order coefficient can not leak into a result.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

/// Highest total degree carried by a jet.
pub const MAX_ORDER: usize = 4;
/// Largest supported number of variables.
pub const MAX_VARS: usize = 8;

/// Multi-index of a monomial, one exponent per variable.
pub type MultiIndex = [u8; MAX_VARS];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("variable index {index} out of range for {num_vars} variables")]
    IndexOutOfRange { index: usize, num_vars: usize },
    #[error("number of variables {0} not in 1..={MAX_VARS}")]
    UnsupportedDimension(usize),
    #[error("multi-index of degree {degree} exceeds jet order {order}")]
    OrderExceeded { degree: usize, order: usize },
    #[error("multi-index has {got} entries, jet has {num_vars} variables")]
    MultiIndexLength { got: usize, num_vars: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Evaluation of an elementary function outside its domain.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{op} is undefined at {value}")]
pub struct DomainError {
    pub op: &'static str,
    pub value: f64,
}

/// Monomials of total degree at most [`MAX_ORDER`] in graded lexicographic
/// order, with the index tables used by multiplication and differentiation.
#[derive(Debug)]
pub struct MonomialTable {
    num_vars: usize,
    exponents: Vec<MultiIndex>,
    degree_end: [usize; MAX_ORDER + 1],
    // (a, b, c) with x^a * x^b = x^c, sorted by the degree of c
    products: Vec<(u16, u16, u16)>,
    product_end: [usize; MAX_ORDER + 1],
    // per variable: (dst, src, factor) with d/dx_i (x^src) = factor * x^dst
    derivatives: Vec<Vec<(u16, u16, f64)>>,
    derivative_end: Vec<[usize; MAX_ORDER]>,
    // for every non-constant monomial: (index of monomial / x_var, var)
    predecessor: Vec<(u16, u8)>,
    index: HashMap<MultiIndex, usize>,
}

impl MonomialTable {
    fn build(num_vars: usize) -> Self {
        let mut exponents: Vec<MultiIndex> = Vec::new();
        let mut degree_end = [0; MAX_ORDER + 1];
        for degree in 0..=MAX_ORDER {
            let mut current = [0u8; MAX_VARS];
            push_degree(num_vars, 0, degree, &mut current, &mut exponents);
            degree_end[degree] = exponents.len();
        }
        let index: HashMap<MultiIndex, usize> = exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (*e, i))
            .collect();

        let degree = |e: &MultiIndex| e.iter().map(|&d| d as usize).sum::<usize>();

        let mut products = Vec::new();
        for (a, ea) in exponents.iter().enumerate() {
            for (b, eb) in exponents.iter().enumerate() {
                if degree(ea) + degree(eb) > MAX_ORDER {
                    continue;
                }
                let mut ec = [0u8; MAX_VARS];
                for k in 0..MAX_VARS {
                    ec[k] = ea[k] + eb[k];
                }
                products.push((a as u16, b as u16, index[&ec] as u16));
            }
        }
        products.sort_by_key(|&(_, _, c)| (degree(&exponents[c as usize]), c));
        let mut product_end = [0; MAX_ORDER + 1];
        for d in 0..=MAX_ORDER {
            product_end[d] = products
                .iter()
                .take_while(|&&(_, _, c)| degree(&exponents[c as usize]) <= d)
                .count();
        }

        let mut derivatives = Vec::with_capacity(num_vars);
        let mut derivative_end = Vec::with_capacity(num_vars);
        for var in 0..num_vars {
            let mut entries = Vec::new();
            for (dst, e) in exponents.iter().enumerate() {
                if degree(e) >= MAX_ORDER {
                    continue;
                }
                let mut src = *e;
                src[var] += 1;
                entries.push((dst as u16, index[&src] as u16, f64::from(src[var])));
            }
            let mut ends = [0; MAX_ORDER];
            for d in 0..MAX_ORDER {
                ends[d] = entries
                    .iter()
                    .take_while(|&&(dst, _, _)| degree(&exponents[dst as usize]) <= d)
                    .count();
            }
            derivatives.push(entries);
            derivative_end.push(ends);
        }

        let mut predecessor = vec![(0u16, 0u8); exponents.len()];
        for (i, e) in exponents.iter().enumerate().skip(1) {
            let var = e.iter().position(|&d| d > 0).expect("non-constant monomial");
            let mut prev = *e;
            prev[var] -= 1;
            predecessor[i] = (index[&prev] as u16, var as u8);
        }

        Self {
            num_vars,
            exponents,
            degree_end,
            products,
            product_end,
            derivatives,
            derivative_end,
            predecessor,
            index,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Number of monomials of total degree at most `order`.
    pub fn len(&self, order: usize) -> usize {
        self.degree_end[order]
    }

    pub fn exponents(&self) -> &[MultiIndex] {
        &self.exponents
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        self.index.get(alpha).copied()
    }
}

fn push_degree(
    num_vars: usize,
    var: usize,
    remaining: usize,
    current: &mut MultiIndex,
    out: &mut Vec<MultiIndex>,
) {
    if var + 1 == num_vars {
        current[var] = remaining as u8;
        out.push(*current);
        current[var] = 0;
        return;
    }
    for take in (0..=remaining).rev() {
        current[var] = take as u8;
        push_degree(num_vars, var + 1, remaining - take, current, out);
    }
    current[var] = 0;
}

/// Shared monomial table for `num_vars` variables.
pub fn table(num_vars: usize) -> Result<&'static MonomialTable, JetError> {
    static TABLES: [OnceLock<MonomialTable>; MAX_VARS] = [const { OnceLock::new() }; MAX_VARS];
    if num_vars == 0 || num_vars > MAX_VARS {
        return Err(JetError::UnsupportedDimension(num_vars));
    }
    Ok(TABLES[num_vars - 1].get_or_init(|| MonomialTable::build(num_vars)))
}

/// Truncated Taylor expansion of a function of `num_vars` variables.
///
/// Coefficients are stored as Taylor coefficients (the coefficient of
/// `x^α`); [`Jet::partial`] converts to the partial derivative `∂^α`
/// by multiplying with `α!`.
#[derive(Clone)]
pub struct Jet {
    table: &'static MonomialTable,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("num_vars", &self.table.num_vars)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.table.num_vars == other.table.num_vars
            && self.order == other.order
            && self.coeffs == other.coeffs
    }
}

impl Jet {
    /// Coordinate function `x_index` seeded at `value`, carried to order 4.
    pub fn seed_variable(index: usize, value: f64, num_vars: usize) -> Result<Self, JetError> {
        Self::seed_variable_to_order(index, value, num_vars, MAX_ORDER)
    }

    pub fn seed_variable_to_order(
        index: usize,
        value: f64,
        num_vars: usize,
        order: usize,
    ) -> Result<Self, JetError> {
        let table = table(num_vars)?;
        if index >= num_vars {
            return Err(JetError::IndexOutOfRange { index, num_vars });
        }
        let order = order.min(MAX_ORDER);
        let mut coeffs = vec![0.0; table.len(order)];
        coeffs[0] = value;
        if order >= 1 {
            // degree-one monomials follow the constant in variable order
            coeffs[1 + index] = 1.0;
        }
        Ok(Self { table, order, coeffs })
    }

    /// Seeds every coordinate of `point` at once.
    pub fn seed_point(point: &[f64]) -> Result<Vec<Self>, JetError> {
        Self::seed_point_to_order(point, MAX_ORDER)
    }

    pub fn seed_point_to_order(point: &[f64], order: usize) -> Result<Vec<Self>, JetError> {
        (0..point.len())
            .map(|i| Self::seed_variable_to_order(i, point[i], point.len(), order))
            .collect()
    }

    pub fn constant(value: f64, num_vars: usize) -> Result<Self, JetError> {
        let table = table(num_vars)?;
        let mut coeffs = vec![0.0; table.len(MAX_ORDER)];
        coeffs[0] = value;
        Ok(Self { table, order: MAX_ORDER, coeffs })
    }

    /// Builds a jet from raw Taylor coefficients in graded lexicographic order.
    pub fn from_taylor_coeffs(num_vars: usize, order: usize, coeffs: Vec<f64>) -> Result<Self, JetError> {
        let table = table(num_vars)?;
        let order = order.min(MAX_ORDER);
        if coeffs.len() != table.len(order) {
            return Err(JetError::OrderExceeded { degree: coeffs.len(), order });
        }
        Ok(Self { table, order, coeffs })
    }

    /// A constant with the same variable count and order as `self`.
    pub fn lift(&self, value: f64) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        Self { table: self.table, order: self.order, coeffs }
    }

    pub fn zero_like(&self) -> Self {
        self.lift(0.0)
    }

    pub fn num_vars(&self) -> usize {
        self.table.num_vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn taylor_coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn monomials(&self) -> &'static MonomialTable {
        self.table
    }

    /// `true` when every derivative coefficient vanishes.
    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|&c| c == 0.0)
    }

    /// The partial derivative `∂^alpha` at the seed point.
    pub fn partial(&self, alpha: &[u8]) -> Result<f64, JetError> {
        if alpha.len() != self.table.num_vars {
            return Err(JetError::MultiIndexLength {
                got: alpha.len(),
                num_vars: self.table.num_vars,
            });
        }
        let degree: usize = alpha.iter().map(|&a| a as usize).sum();
        if degree > self.order {
            return Err(JetError::OrderExceeded { degree, order: self.order });
        }
        let mut key = [0u8; MAX_VARS];
        key[..alpha.len()].copy_from_slice(alpha);
        let idx = self.table.index_of(&key).expect("degree checked above");
        let factorial: f64 = alpha.iter().map(|&a| factorial(a as usize)).product();
        Ok(self.coeffs[idx] * factorial)
    }

    /// First partial derivative `∂_var` at the seed point.
    pub fn d(&self, var: usize) -> f64 {
        debug_assert!(self.order >= 1);
        self.coeffs.get(1 + var).copied().unwrap_or(0.0)
    }

    /// The jet of `∂f/∂x_var`, valid to one order less.
    ///
    /// # Panics
    ///
    /// Panics when the jet has order zero or `var` is out of range.
    pub fn derivative(&self, var: usize) -> Self {
        assert!(self.order >= 1, "derivative of an order-0 jet");
        assert!(var < self.table.num_vars, "variable index out of range");
        let order = self.order - 1;
        let mut coeffs = vec![0.0; self.table.len(order)];
        let entries = &self.table.derivatives[var][..self.table.derivative_end[var][order]];
        for &(dst, src, factor) in entries {
            coeffs[dst as usize] = factor * self.coeffs[src as usize];
        }
        Self { table: self.table, order, coeffs }
    }

    /// Drops coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self {
            table: self.table,
            order,
            coeffs: self.coeffs[..self.table.len(order)].to_vec(),
        }
    }

    fn check_same_vars(&self, other: &Self) {
        assert_eq!(
            self.table.num_vars, other.table.num_vars,
            "jets over different variable counts"
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_same_vars(other);
        let order = self.order.min(other.order);
        let n = self.table.len(order);
        let coeffs = self.coeffs[..n]
            .iter()
            .zip(&other.coeffs[..n])
            .map(|(a, b)| a + b)
            .collect();
        Self { table: self.table, order, coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_same_vars(other);
        let order = self.order.min(other.order);
        let n = self.table.len(order);
        let coeffs = self.coeffs[..n]
            .iter()
            .zip(&other.coeffs[..n])
            .map(|(a, b)| a - b)
            .collect();
        Self { table: self.table, order, coeffs }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_same_vars(other);
        let order = self.order.min(other.order);
        let mut coeffs = vec![0.0; self.table.len(order)];
        for &(a, b, c) in &self.table.products[..self.table.product_end[order]] {
            coeffs[c as usize] += self.coeffs[a as usize] * other.coeffs[b as usize];
        }
        Self { table: self.table, order, coeffs }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            table: self.table,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add_scalar(&self, value: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    /// In-place `self += factor * other`.
    pub fn axpy(&mut self, factor: f64, other: &Self) {
        self.check_same_vars(other);
        if other.order < self.order {
            self.order = other.order;
            self.coeffs.truncate(self.table.len(self.order));
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += factor * b;
        }
    }

    /// Composes a univariate function with this jet, given the function's
    /// derivatives `f, f', f'', f''', f''''` at the jet value.
    pub fn compose_univariate(&self, derivs: [f64; MAX_ORDER + 1]) -> Self {
        let delta = self.add_scalar(-self.value());
        let mut taylor = [0.0; MAX_ORDER + 1];
        for k in 0..=MAX_ORDER {
            taylor[k] = derivs[k] / factorial(k);
        }
        // Horner in the nilpotent increment
        let mut acc = self.lift(taylor[self.order]);
        for k in (0..self.order).rev() {
            acc = acc.mul(&delta).add_scalar(taylor[k]);
        }
        acc
    }

    pub fn recip(&self) -> Result<Self, DomainError> {
        let v = self.value();
        if v == 0.0 || !v.is_finite() {
            return Err(DomainError { op: "division", value: v });
        }
        let r = 1.0 / v;
        Ok(self.compose_univariate([r, -r * r, 2.0 * r.powi(3), -6.0 * r.powi(4), 24.0 * r.powi(5)]))
    }

    pub fn div(&self, other: &Self) -> Result<Self, DomainError> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose_univariate([e; MAX_ORDER + 1])
    }

    pub fn ln(&self) -> Result<Self, DomainError> {
        let v = self.value();
        if v <= 0.0 || !v.is_finite() {
            return Err(DomainError { op: "ln", value: v });
        }
        let r = 1.0 / v;
        Ok(self.compose_univariate([v.ln(), r, -r * r, 2.0 * r.powi(3), -6.0 * r.powi(4)]))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose_univariate([s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose_univariate([c, -s, -c, s, c])
    }

    pub fn sqrt(&self) -> Result<Self, DomainError> {
        let v = self.value();
        if v <= 0.0 || !v.is_finite() {
            return Err(DomainError { op: "sqrt", value: v });
        }
        self.powf(0.5).map_err(|_| DomainError { op: "sqrt", value: v })
    }

    /// Real power with a constant exponent; the base must be positive unless
    /// the exponent is an integer.
    pub fn powf(&self, p: f64) -> Result<Self, DomainError> {
        if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
            return self.powi(p as i32);
        }
        let v = self.value();
        if v <= 0.0 || !v.is_finite() {
            return Err(DomainError { op: "pow", value: v });
        }
        let mut derivs = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        for (k, d) in derivs.iter_mut().enumerate() {
            *d = coef * v.powf(p - k as f64);
            coef *= p - k as f64;
        }
        Ok(self.compose_univariate(derivs))
    }

    /// Integer power by repeated squaring, exact at negative bases.
    pub fn powi(&self, n: i32) -> Result<Self, DomainError> {
        if n < 0 {
            return self.recip()?.powi(n.checked_neg().unwrap_or(i32::MAX));
        }
        let mut result = self.lift(1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(result)
    }

    /// General power `self^exponent`; integer-valued constant exponents
    /// are specialized so negative bases stay admissible.
    pub fn pow(&self, exponent: &Self) -> Result<Self, DomainError> {
        if exponent.is_constant() {
            return self.powf(exponent.value());
        }
        Ok(self.ln()?.mul(exponent).exp())
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Precomputed monomials in the increments of `inner`, used to substitute
/// the same inner jets into many outer Taylor polynomials.
///
/// An outer jet over `n` variables (the codomain coordinates), expanded
/// around `inner[k].value()`, becomes a jet over the variables of `inner`.
pub struct Composer {
    order: usize,
    outer_vars: usize,
    powers: Vec<Jet>,
}

impl Composer {
    pub fn new(inner: &[Jet], order: usize) -> Result<Self, JetError> {
        let outer = table(inner.len())?;
        let order = inner.iter().map(Jet::order).fold(order.min(MAX_ORDER), usize::min);
        let deltas: Vec<Jet> = inner
            .iter()
            .map(|j| j.truncate(order).add_scalar(-j.value()))
            .collect();
        let count = outer.len(order);
        let mut powers: Vec<Jet> = Vec::with_capacity(count);
        powers.push(deltas[0].lift(1.0));
        for idx in 1..count {
            let (prev, var) = outer.predecessor[idx];
            let next = powers[prev as usize].mul(&deltas[var as usize]);
            powers.push(next);
        }
        Ok(Self { order, outer_vars: inner.len(), powers })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Substitutes the inner jets into `outer`. The result is valid to the
    /// smaller of the two orders.
    ///
    /// # Panics
    ///
    /// Panics when `outer` has a different variable count than the number of
    /// inner jets.
    pub fn apply(&self, outer: &Jet) -> Jet {
        assert_eq!(outer.num_vars(), self.outer_vars, "outer jet dimension mismatch");
        let mut acc = self.powers[0].truncate(outer.order()).scale(outer.coeffs[0]);
        for (power, &c) in self.powers.iter().zip(&outer.coeffs).skip(1) {
            if c != 0.0 {
                acc.axpy(c, power);
            }
        }
        acc
    }
}

/// The arithmetic needed by the expression evaluator, implemented for plain
/// reals and for jets.
pub trait Scalar: Clone + fmt::Debug + Send + Sync {
    /// A constant of the same shape as `self`.
    fn lift(&self, value: f64) -> Self;
    fn value(&self) -> f64;
    fn is_constant(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div(&self, other: &Self) -> Result<Self, DomainError>;
    fn pow(&self, exponent: &Self) -> Result<Self, DomainError>;
    fn exp(&self) -> Self;
    fn ln(&self) -> Result<Self, DomainError>;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sqrt(&self) -> Result<Self, DomainError>;
}

impl Scalar for f64 {
    fn lift(&self, value: f64) -> Self {
        value
    }
    fn value(&self) -> f64 {
        *self
    }
    fn is_constant(&self) -> bool {
        true
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div(&self, other: &Self) -> Result<Self, DomainError> {
        if *other == 0.0 || !other.is_finite() {
            return Err(DomainError { op: "division", value: *other });
        }
        Ok(self / other)
    }
    fn pow(&self, exponent: &Self) -> Result<Self, DomainError> {
        let p = *exponent;
        if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
            if p < 0.0 && *self == 0.0 {
                return Err(DomainError { op: "division", value: 0.0 });
            }
            return Ok(self.powi(p as i32));
        }
        if *self <= 0.0 {
            return Err(DomainError { op: "pow", value: *self });
        }
        Ok(self.powf(p))
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Result<Self, DomainError> {
        if *self <= 0.0 || !self.is_finite() {
            return Err(DomainError { op: "ln", value: *self });
        }
        Ok(f64::ln(*self))
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sqrt(&self) -> Result<Self, DomainError> {
        if *self <= 0.0 || !self.is_finite() {
            return Err(DomainError { op: "sqrt", value: *self });
        }
        Ok(f64::sqrt(*self))
    }
}

impl Scalar for Jet {
    fn lift(&self, value: f64) -> Self {
        Jet::lift(self, value)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn is_constant(&self) -> bool {
        Jet::is_constant(self)
    }
    fn add(&self, other: &Self) -> Self {
        Jet::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        Jet::sub(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        Jet::mul(self, other)
    }
    fn neg(&self) -> Self {
        Jet::neg(self)
    }
    fn div(&self, other: &Self) -> Result<Self, DomainError> {
        Jet::div(self, other)
    }
    fn pow(&self, exponent: &Self) -> Result<Self, DomainError> {
        Jet::pow(self, exponent)
    }
    fn exp(&self) -> Self {
        Jet::exp(self)
    }
    fn ln(&self) -> Result<Self, DomainError> {
        Jet::ln(self)
    }
    fn sin(&self) -> Self {
        Jet::sin(self)
    }
    fn cos(&self) -> Self {
        Jet::cos(self)
    }
    fn sqrt(&self) -> Result<Self, DomainError> {
        Jet::sqrt(self)
    }
}
