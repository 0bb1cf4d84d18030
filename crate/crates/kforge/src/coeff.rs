//! Exact arithmetic over the coefficient rings `Z/p^N` and finite free
//! extensions `(Z/p^N)[X]/(f)`, with precision-tracked division by powers of
//! `p` and canonical (Howell form) linear algebra.
//!
//! The rings handled here are finite chain rings: every element factors as
//! `unit * p^v`, which is what makes a unique canonical row form exist. All
//! matrix routines below rely only on that.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Errors raised by ring construction and exact division.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    /// The chosen `p` is not an odd prime.
    #[error("p = {0} is not an odd prime")]
    CompositeP(u64),
    /// The modulus polynomial is not monic or not irreducible mod p.
    #[error("modulus is not monic irreducible mod p: {0}")]
    ReducibleModulus(String),
    /// Division by `p^s` requested on an element of smaller valuation.
    #[error("element has p-adic valuation {found}, needs at least {need}")]
    NotDivisible { need: u32, found: u32 },
    /// Division by `p^s` with `s >= N` leaves no precision.
    #[error("division by p^{s} exhausts precision {n}")]
    PrecisionExhausted { s: u32, n: u32 },
    /// Attempt to invert a non-unit.
    #[error("element is not a unit")]
    NotUnit,
    /// Mixed operands from different ring contexts.
    #[error("ring context mismatch")]
    CtxMismatch,
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

#[derive(Debug, PartialEq, Eq)]
struct RingCtxInner {
    p: u64,
    precision: u32,
    /// p^precision
    pn: u64,
    /// Coefficients of the monic modulus with the leading 1 dropped, so the
    /// reduction rule is X^d = -sum modulus[i] X^i. Empty means d = 1.
    modulus: Vec<u64>,
}

/// An exact coefficient ring `Z/p^N` or `(Z/p^N)[X]/(f)` with `f` monic and
/// irreducible mod `p`. Cheap to clone, shareable across threads.
#[derive(Clone, PartialEq, Eq)]
pub struct RingCtx(Arc<RingCtxInner>);

impl fmt::Debug for RingCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree() == 1 {
            write!(f, "Z/{}^{}", self.p(), self.precision())
        } else {
            write!(f, "GR({}^{}, {})", self.p(), self.precision(), self.degree())
        }
    }
}

/// An element, stored as a reduced coefficient vector of length `d`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingElt {
    pub coeffs: Vec<u64>,
}

impl fmt::Debug for RingElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.len() == 1 {
            write!(f, "{}", self.coeffs[0])
        } else {
            write!(f, "{:?}", self.coeffs)
        }
    }
}

/// Construct the ring `Z/p^N`, optionally extended by a monic polynomial
/// given by its full coefficient list (constant first, leading 1 last).
pub fn make_ring(p: u64, precision: u32, modulus: Option<&[u64]>) -> Result<RingCtx, RingError> {
    if p < 3 || !is_prime_u64(p) {
        return Err(RingError::CompositeP(p));
    }
    assert!(precision >= 1, "precision must be positive");
    let pn = p.checked_pow(precision).expect("p^N overflows u64");
    assert!(pn < (1u64 << 31), "ring cardinality base too large");
    let modulus = match modulus {
        None => Vec::new(),
        Some(poly) => {
            if poly.len() < 2 || *poly.last().unwrap() % pn != 1 {
                return Err(RingError::ReducibleModulus(
                    "modulus must be monic of degree >= 1".into(),
                ));
            }
            let body: Vec<u64> = poly[..poly.len() - 1].iter().map(|c| c % pn).collect();
            if body.is_empty() {
                // degree-1 modulus: the quotient is Z/p^N again
                Vec::new()
            } else {
                check_irreducible_mod_p(&body, p)?;
                body
            }
        }
    };
    Ok(RingCtx(Arc::new(RingCtxInner { p, precision, pn, modulus })))
}

/// Irreducibility of X^d + body(X) over F_p, by exhaustive root search for
/// d <= 3 and a squarefree/objects-free divisor search for small d. Degrees
/// are desk-scale (d <= 4), so trial division by all monic polynomials of
/// degree <= d/2 is exact and fast.
fn check_irreducible_mod_p(body: &[u64], p: u64) -> Result<(), RingError> {
    let d = body.len();
    let f: Vec<u64> = body
        .iter()
        .map(|c| c % p)
        .chain(std::iter::once(1))
        .collect();
    // trial division by every monic polynomial of degree 1..=d/2 over F_p
    let mut divisor_degree = 1usize;
    while divisor_degree * 2 <= d {
        let count = p.pow(divisor_degree as u32);
        for idx in 0..count {
            let mut g = Vec::with_capacity(divisor_degree + 1);
            let mut k = idx;
            for _ in 0..divisor_degree {
                g.push(k % p);
                k /= p;
            }
            g.push(1);
            if poly_rem_is_zero(&f, &g, p) {
                return Err(RingError::ReducibleModulus(format!(
                    "factor of degree {divisor_degree} found mod {p}"
                )));
            }
        }
        divisor_degree += 1;
    }
    Ok(())
}

fn poly_rem_is_zero(f: &[u64], g: &[u64], p: u64) -> bool {
    let mut r: Vec<u64> = f.to_vec();
    let dg = g.len() - 1;
    while r.len() > dg {
        let lead = *r.last().unwrap() % p;
        if lead != 0 {
            let shift = r.len() - 1 - dg;
            for i in 0..=dg {
                let idx = shift + i;
                let sub = (lead * g[i]) % p;
                r[idx] = (r[idx] + p * p - sub) % p;
            }
        }
        r.pop();
    }
    r.iter().all(|c| c % p == 0)
}

impl RingCtx {
    pub fn p(&self) -> u64 {
        self.0.p
    }
    pub fn precision(&self) -> u32 {
        self.0.precision
    }
    /// p^N, the additive order of 1.
    pub fn pn(&self) -> u64 {
        self.0.pn
    }
    /// Degree of the extension (1 when no modulus).
    pub fn degree(&self) -> usize {
        if self.0.modulus.is_empty() { 1 } else { self.0.modulus.len() }
    }
    /// Total cardinality p^(N*d).
    pub fn cardinality(&self) -> u64 {
        self.0.pn.pow(self.degree() as u32)
    }

    pub fn zero(&self) -> RingElt {
        RingElt { coeffs: vec![0; self.degree()] }
    }
    pub fn one(&self) -> RingElt {
        let mut c = vec![0; self.degree()];
        c[0] = 1;
        RingElt { coeffs: c }
    }
    pub fn from_u64(&self, x: u64) -> RingElt {
        let mut c = vec![0; self.degree()];
        c[0] = x % self.0.pn;
        RingElt { coeffs: c }
    }
    pub fn from_i64(&self, x: i64) -> RingElt {
        let m = self.0.pn as i64;
        self.from_u64(x.rem_euclid(m) as u64)
    }
    /// The generator X of the extension part (equals 0-th basis vector
    /// shifted; panics if the ring has no extension part).
    pub fn gen_x(&self) -> RingElt {
        assert!(self.degree() > 1, "base ring has no X");
        let mut c = vec![0; self.degree()];
        c[1] = 1;
        RingElt { coeffs: c }
    }

    pub fn add(&self, a: &RingElt, b: &RingElt) -> RingElt {
        let pn = self.0.pn;
        RingElt {
            coeffs: a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| (x + y) % pn)
                .collect(),
        }
    }
    pub fn sub(&self, a: &RingElt, b: &RingElt) -> RingElt {
        let pn = self.0.pn;
        RingElt {
            coeffs: a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| (x + pn - y) % pn)
                .collect(),
        }
    }
    pub fn neg(&self, a: &RingElt) -> RingElt {
        let pn = self.0.pn;
        RingElt { coeffs: a.coeffs.iter().map(|x| (pn - x) % pn).collect() }
    }
    pub fn mul(&self, a: &RingElt, b: &RingElt) -> RingElt {
        let pn = self.0.pn;
        let d = self.degree();
        if d == 1 {
            return RingElt { coeffs: vec![(a.coeffs[0] * b.coeffs[0]) % pn] };
        }
        // schoolbook product then reduction by X^d = -modulus
        let mut prod = vec![0u64; 2 * d - 1];
        for i in 0..d {
            if a.coeffs[i] == 0 {
                continue;
            }
            for j in 0..d {
                prod[i + j] = (prod[i + j] + a.coeffs[i] * b.coeffs[j]) % pn;
            }
        }
        for k in (d..2 * d - 1).rev() {
            let c = prod[k];
            if c == 0 {
                continue;
            }
            prod[k] = 0;
            for i in 0..d {
                let sub = (c * self.0.modulus[i]) % pn;
                prod[k - d + i] = (prod[k - d + i] + pn - sub) % pn;
            }
        }
        prod.truncate(d);
        RingElt { coeffs: prod }
    }
    pub fn scale(&self, a: &RingElt, k: u64) -> RingElt {
        let pn = self.0.pn;
        let k = k % pn;
        RingElt { coeffs: a.coeffs.iter().map(|x| (x * k) % pn).collect() }
    }
    pub fn scale_i64(&self, a: &RingElt, k: i64) -> RingElt {
        self.scale(a, k.rem_euclid(self.0.pn as i64) as u64)
    }

    pub fn is_zero(&self, a: &RingElt) -> bool {
        a.coeffs.iter().all(|&c| c == 0)
    }

    /// p-adic valuation, i.e. the largest v with `p^v | a`; `N` for zero.
    pub fn valuation(&self, a: &RingElt) -> u32 {
        let mut v = self.0.precision;
        for &c in &a.coeffs {
            if c == 0 {
                continue;
            }
            let mut c = c;
            let mut w = 0;
            while c % self.0.p == 0 {
                c /= self.0.p;
                w += 1;
            }
            v = v.min(w);
        }
        v
    }

    /// True iff the image of `a` in the residue field is nonzero.
    pub fn is_unit(&self, a: &RingElt) -> bool {
        a.coeffs.iter().any(|&c| c % self.0.p != 0)
    }

    /// Multiplicative inverse of a unit, by lifting the residue-field
    /// inverse with Newton iteration `y <- y(2 - ay)`.
    pub fn inv(&self, a: &RingElt) -> Result<RingElt, RingError> {
        if !self.is_unit(a) {
            return Err(RingError::NotUnit);
        }
        let mut y = self.residue_inverse(a);
        // each step doubles the p-adic accuracy
        let mut acc = 1u32;
        while acc < self.0.precision {
            let ay = self.mul(a, &y);
            let two_minus = self.sub(&self.from_u64(2), &ay);
            y = self.mul(&y, &two_minus);
            acc *= 2;
        }
        Ok(y)
    }

    /// Inverse of `a mod p` in the residue field, lifted to a coefficient
    /// vector. Uses Fermat in F_p for d = 1 and extended Euclid over F_p[X]
    /// otherwise.
    fn residue_inverse(&self, a: &RingElt) -> RingElt {
        let p = self.0.p;
        if self.degree() == 1 {
            let a0 = a.coeffs[0] % p;
            let inv = pow_mod(a0, p - 2, p);
            return self.from_u64(inv);
        }
        // extended gcd of a(X) and f(X) over F_p
        let f: Vec<u64> = self
            .0
            .modulus
            .iter()
            .map(|c| c % p)
            .chain(std::iter::once(1))
            .collect();
        let abar: Vec<u64> = a.coeffs.iter().map(|c| c % p).collect();
        let inv = poly_inverse_mod(&abar, &f, p);
        let mut c = inv;
        c.resize(self.degree(), 0);
        RingElt { coeffs: c }
    }

    /// Write a unit decomposition `a = unit * p^v`; returns `(v, unit)`.
    /// Zero yields `(N, 1)`.
    pub fn unit_part(&self, a: &RingElt) -> (u32, RingElt) {
        let v = self.valuation(a);
        if v >= self.0.precision {
            return (v, self.one());
        }
        let pv = self.0.p.pow(v);
        let shifted = RingElt { coeffs: a.coeffs.iter().map(|c| c / pv).collect() };
        (v, shifted)
    }

    /// Exact division by `p^s`, landing in the ring of precision `N - s`.
    /// Returns the lowered-precision context together with the quotient.
    pub fn exact_div_p_power(&self, a: &RingElt, s: u32) -> Result<(RingCtx, RingElt), RingError> {
        if s >= self.0.precision {
            return Err(RingError::PrecisionExhausted { s, n: self.0.precision });
        }
        if s == 0 {
            return Ok((self.clone(), a.clone()));
        }
        let v = self.valuation(a);
        if v < s {
            return Err(RingError::NotDivisible { need: s, found: v });
        }
        let lowered = self.reduce_precision(self.0.precision - s);
        let ps = self.0.p.pow(s);
        let q = RingElt {
            coeffs: a.coeffs.iter().map(|c| (c / ps) % lowered.pn()).collect(),
        };
        Ok((lowered, q))
    }

    /// The same ring at a smaller precision.
    pub fn reduce_precision(&self, new_precision: u32) -> RingCtx {
        assert!(new_precision >= 1 && new_precision <= self.0.precision);
        if new_precision == self.0.precision {
            return self.clone();
        }
        let pn = self.0.p.pow(new_precision);
        let modulus = self.0.modulus.iter().map(|c| c % pn).collect();
        RingCtx(Arc::new(RingCtxInner {
            p: self.0.p,
            precision: new_precision,
            pn,
            modulus,
        }))
    }

    /// Reduce an element into a smaller-precision copy of this ring.
    pub fn reduce_elt(&self, target: &RingCtx, a: &RingElt) -> RingElt {
        debug_assert_eq!(self.0.p, target.0.p);
        RingElt { coeffs: a.coeffs.iter().map(|c| c % target.pn()).collect() }
    }

    /// Iterate over all ring elements (desk scale only).
    pub fn iter_elements(&self) -> impl Iterator<Item = RingElt> + '_ {
        let card = self.cardinality();
        let d = self.degree();
        let pn = self.0.pn;
        (0..card).map(move |mut k| {
            let mut c = Vec::with_capacity(d);
            for _ in 0..d {
                c.push(k % pn);
                k /= pn;
            }
            RingElt { coeffs: c }
        })
    }

    /// Serialize an element as decimal strings (external interface form).
    pub fn elt_to_json(&self, a: &RingElt) -> serde_json::Value {
        serde_json::Value::Array(
            a.coeffs
                .iter()
                .map(|c| serde_json::Value::String(c.to_string()))
                .collect(),
        )
    }

    pub fn elt_from_json(&self, v: &serde_json::Value) -> Option<RingElt> {
        let arr = v.as_array()?;
        if arr.len() != self.degree() {
            return None;
        }
        let mut coeffs = Vec::with_capacity(arr.len());
        for item in arr {
            let s = item.as_str()?;
            coeffs.push(s.parse::<u64>().ok()? % self.0.pn);
        }
        Some(RingElt { coeffs })
    }
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

/// Inverse of `a` modulo the monic polynomial `f` over F_p. `a` must be
/// coprime to `f` (guaranteed when `f` is irreducible and `a != 0 mod p`).
fn poly_inverse_mod(a: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    let trim = |v: &mut Vec<u64>| {
        while v.len() > 1 && *v.last().unwrap() % p == 0 {
            v.pop();
        }
    };
    let mut r0: Vec<u64> = f.to_vec();
    let mut r1: Vec<u64> = a.to_vec();
    trim(&mut r1);
    let mut t0: Vec<u64> = vec![0];
    let mut t1: Vec<u64> = vec![1];
    // invariant: t_i * a = r_i (mod f)
    while r1.len() > 1 {
        let (q, r) = poly_divmod(&r0, &r1, p);
        let t2 = poly_sub(&t0, &poly_mul(&q, &t1, p), p);
        r0 = r1;
        r1 = r;
        trim(&mut r1);
        t0 = t1;
        t1 = t2;
    }
    // r1 is a nonzero constant
    let c = r1[0] % p;
    debug_assert_ne!(c, 0, "inverse of non-coprime polynomial");
    let cinv = pow_mod(c, p - 2, p);
    t1.iter_mut().for_each(|x| *x = *x * cinv % p);
    t1
}

fn poly_divmod(num: &[u64], den: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
    let mut r: Vec<u64> = num.to_vec();
    let dd = den.len() - 1;
    let lead_inv = pow_mod(den[dd] % p, p - 2, p);
    if r.len() <= dd {
        return (vec![0], r);
    }
    let mut q = vec![0u64; r.len() - dd];
    for k in (dd..r.len()).rev() {
        let coef = r[k] % p * lead_inv % p;
        q[k - dd] = coef;
        for i in 0..=dd {
            let sub = coef * den[i] % p;
            r[k - dd + i] = (r[k - dd + i] + p - sub) % p;
        }
    }
    while r.len() > 1 && *r.last().unwrap() % p == 0 {
        r.pop();
    }
    (q, r)
}

fn poly_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    out
}

fn poly_sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let x = a.get(i).copied().unwrap_or(0) % p;
            let y = b.get(i).copied().unwrap_or(0) % p;
            (x + p - y) % p
        })
        .collect()
}

// ---------------------------------------------------------------------------
// matrices
// ---------------------------------------------------------------------------

/// A dense matrix over a [`RingCtx`]. Rows are module elements; all the
/// canonical-form machinery treats the row span.
#[derive(Clone, PartialEq, Eq)]
pub struct MatrixOverR {
    pub ctx: RingCtx,
    pub rows: usize,
    pub cols: usize,
    data: Vec<RingElt>,
}

impl fmt::Debug for MatrixOverR {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} over {:?}", self.rows, self.cols, self.ctx)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| format!("{:?}", self.at(r, c))).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl MatrixOverR {
    pub fn zero(ctx: &RingCtx, rows: usize, cols: usize) -> Self {
        MatrixOverR {
            ctx: ctx.clone(),
            rows,
            cols,
            data: vec![ctx.zero(); rows * cols],
        }
    }
    pub fn identity(ctx: &RingCtx, n: usize) -> Self {
        let mut m = Self::zero(ctx, n, n);
        for i in 0..n {
            *m.at_mut(i, i) = ctx.one();
        }
        m
    }
    pub fn from_rows(ctx: &RingCtx, rows: Vec<Vec<RingElt>>) -> Self {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend(row);
        }
        MatrixOverR { ctx: ctx.clone(), rows: r, cols: c, data }
    }
    pub fn from_u64_rows(ctx: &RingCtx, rows: &[Vec<u64>]) -> Self {
        Self::from_rows(
            ctx,
            rows.iter()
                .map(|r| r.iter().map(|&x| ctx.from_u64(x)).collect())
                .collect(),
        )
    }
    pub fn from_i64_rows(ctx: &RingCtx, rows: &[Vec<i64>]) -> Self {
        Self::from_rows(
            ctx,
            rows.iter()
                .map(|r| r.iter().map(|&x| ctx.from_i64(x)).collect())
                .collect(),
        )
    }

    pub fn at(&self, r: usize, c: usize) -> &RingElt {
        &self.data[r * self.cols + c]
    }
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut RingElt {
        &mut self.data[r * self.cols + c]
    }
    pub fn row(&self, r: usize) -> &[RingElt] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
    pub fn row_vec(&self, r: usize) -> Vec<RingElt> {
        self.row(r).to_vec()
    }
    pub fn push_row(&mut self, row: Vec<RingElt>) {
        assert_eq!(row.len(), self.cols);
        self.data.extend(row);
        self.rows += 1;
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zero(&self.ctx, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                *out.at_mut(c, r) = self.at(r, c).clone();
            }
        }
        out
    }

    pub fn mul(&self, other: &MatrixOverR) -> MatrixOverR {
        assert_eq!(self.cols, other.rows);
        let ctx = &self.ctx;
        let mut out = Self::zero(ctx, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if ctx.is_zero(a) {
                    continue;
                }
                for j in 0..other.cols {
                    let t = ctx.mul(a, other.at(k, j));
                    *out.at_mut(i, j) = ctx.add(out.at(i, j), &t);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &MatrixOverR) -> MatrixOverR {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let ctx = &self.ctx;
        let mut out = self.clone();
        for i in 0..self.rows * self.cols {
            out.data[i] = ctx.add(&self.data[i], &other.data[i]);
        }
        out
    }
    pub fn sub(&self, other: &MatrixOverR) -> MatrixOverR {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let ctx = &self.ctx;
        let mut out = self.clone();
        for i in 0..self.rows * self.cols {
            out.data[i] = ctx.sub(&self.data[i], &other.data[i]);
        }
        out
    }
    pub fn scale(&self, k: &RingElt) -> MatrixOverR {
        let ctx = &self.ctx;
        let mut out = self.clone();
        for e in &mut out.data {
            *e = ctx.mul(e, k);
        }
        out
    }
    pub fn neg(&self) -> MatrixOverR {
        let ctx = &self.ctx;
        let mut out = self.clone();
        for e in &mut out.data {
            *e = ctx.neg(e);
        }
        out
    }
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| self.ctx.is_zero(e))
    }

    pub fn apply(&self, v: &[RingElt]) -> Vec<RingElt> {
        assert_eq!(v.len(), self.cols);
        let ctx = &self.ctx;
        (0..self.rows)
            .map(|i| {
                let mut acc = ctx.zero();
                for (j, x) in v.iter().enumerate() {
                    acc = ctx.add(&acc, &ctx.mul(self.at(i, j), x));
                }
                acc
            })
            .collect()
    }

    /// Row-vector times matrix.
    pub fn apply_left(&self, v: &[RingElt]) -> Vec<RingElt> {
        assert_eq!(v.len(), self.rows);
        let ctx = &self.ctx;
        (0..self.cols)
            .map(|j| {
                let mut acc = ctx.zero();
                for (i, x) in v.iter().enumerate() {
                    acc = ctx.add(&acc, &ctx.mul(x, self.at(i, j)));
                }
                acc
            })
            .collect()
    }

    /// Determinant by valuation-pivoted elimination (square matrices only).
    pub fn det(&self) -> RingElt {
        assert_eq!(self.rows, self.cols);
        let ctx = self.ctx.clone();
        let n = self.rows;
        let mut m = self.clone();
        let mut acc = ctx.one();
        let mut sign = false;
        for col in 0..n {
            let mut best: Option<(usize, u32)> = None;
            for r in col..n {
                let v = ctx.valuation(m.at(r, col));
                if v < ctx.precision() && best.map(|(_, bv)| v < bv).unwrap_or(true) {
                    best = Some((r, v));
                }
            }
            let Some((piv, _)) = best else { return ctx.zero() };
            if piv != col {
                for c in 0..n {
                    let a = m.at(piv, c).clone();
                    let b = m.at(col, c).clone();
                    *m.at_mut(piv, c) = b;
                    *m.at_mut(col, c) = a;
                }
                sign = !sign;
            }
            let (v, unit) = ctx.unit_part(m.at(col, col));
            let unit_inv = ctx.inv(&unit).unwrap();
            let pivot = m.at(col, col).clone();
            acc = ctx.mul(&acc, &pivot);
            // clear below: row_r -= (e / p^v) * unit_inv * row_col needs e
            // divisible by p^v, which minimal-valuation pivoting guarantees.
            for r in col + 1..n {
                let e = m.at(r, col).clone();
                if ctx.is_zero(&e) {
                    continue;
                }
                let (ev, eunit) = ctx.unit_part(&e);
                debug_assert!(ev >= v);
                let shift = ctx.scale(&eunit, ctx.p().pow(ev - v));
                let q = ctx.mul(&shift, &unit_inv);
                for c in col..n {
                    let t = ctx.mul(&q, m.at(col, c));
                    *m.at_mut(r, c) = ctx.sub(m.at(r, c), &t);
                }
            }
        }
        if sign { ctx.neg(&acc) } else { acc }
    }

    /// Invert a matrix whose determinant is a unit.
    pub fn inverse(&self) -> Result<MatrixOverR, RingError> {
        assert_eq!(self.rows, self.cols);
        let ctx = self.ctx.clone();
        let n = self.rows;
        let mut m = self.clone();
        let mut inv = MatrixOverR::identity(&ctx, n);
        for col in 0..n {
            let mut piv = None;
            for r in col..n {
                if ctx.is_unit(m.at(r, col)) {
                    piv = Some(r);
                    break;
                }
            }
            let Some(piv) = piv else { return Err(RingError::NotUnit) };
            if piv != col {
                for c in 0..n {
                    let a = m.at(piv, c).clone();
                    let b = m.at(col, c).clone();
                    *m.at_mut(piv, c) = b;
                    *m.at_mut(col, c) = a;
                    let a = inv.at(piv, c).clone();
                    let b = inv.at(col, c).clone();
                    *inv.at_mut(piv, c) = b;
                    *inv.at_mut(col, c) = a;
                }
            }
            let u = ctx.inv(m.at(col, col))?;
            for c in 0..n {
                *m.at_mut(col, c) = ctx.mul(m.at(col, c), &u);
                *inv.at_mut(col, c) = ctx.mul(inv.at(col, c), &u);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let q = m.at(r, col).clone();
                if ctx.is_zero(&q) {
                    continue;
                }
                for c in 0..n {
                    let t = ctx.mul(&q, m.at(col, c));
                    *m.at_mut(r, c) = ctx.sub(m.at(r, c), &t);
                    let t = ctx.mul(&q, inv.at(col, c));
                    *inv.at_mut(r, c) = ctx.sub(inv.at(r, c), &t);
                }
            }
        }
        Ok(inv)
    }

    /// Reduce every entry into a lower-precision ring.
    pub fn reduce_to(&self, target: &RingCtx) -> MatrixOverR {
        MatrixOverR {
            ctx: target.clone(),
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|e| self.ctx.reduce_elt(target, e)).collect(),
        }
    }

    /// External-interface JSON form with a `{p, N, modulus}` header.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "p": self.ctx.p(),
            "N": self.ctx.precision(),
            "modulus": if self.ctx.degree() == 1 { serde_json::Value::Null } else {
                serde_json::Value::Array(
                    self.ctx.0.modulus.iter().map(|c| serde_json::Value::String(c.to_string()))
                        .chain(std::iter::once(serde_json::Value::String("1".into())))
                        .collect())
            },
            "rows": self.rows,
            "cols": self.cols,
            "entries": (0..self.rows).map(|r| {
                serde_json::Value::Array((0..self.cols).map(|c| self.ctx.elt_to_json(self.at(r, c))).collect())
            }).collect::<Vec<_>>(),
        })
    }
}

/// Result of the Howell canonicalization: the canonical form, the transform
/// with `transform * input = canonical`, and the pivot data.
#[derive(Clone, Debug)]
pub struct HowellForm {
    pub form: MatrixOverR,
    pub transform: MatrixOverR,
    /// (column, valuation) per canonical row, in row order.
    pub pivots: Vec<(usize, u32)>,
}

impl HowellForm {
    /// Cardinality of the row span.
    pub fn span_cardinality(&self) -> u128 {
        let ctx = &self.form.ctx;
        let d = ctx.degree() as u32;
        self.pivots
            .iter()
            .map(|&(_, v)| (ctx.p() as u128).pow((ctx.precision() - v) * d))
            .product()
    }
}

/// Compute the Howell form of the row span of `m`.
///
/// The form is the unique canonical basis of the row module: echelon with
/// pivots `p^v` at strictly increasing columns, entries above a pivot reduced
/// mod `p^v`, and span-closure under leading-zero truncation (the property
/// that distinguishes Howell from plain echelon over `Z/p^N`).
pub fn howell_form(m: &MatrixOverR) -> HowellForm {
    let ctx = m.ctx.clone();
    let n_prec = ctx.precision();
    let p = ctx.p();
    let cols = m.cols;
    // working rows carry (row entries, transform entries)
    let mut work: Vec<(Vec<RingElt>, Vec<RingElt>)> = (0..m.rows)
        .map(|r| {
            let mut t = vec![ctx.zero(); m.rows];
            t[r] = ctx.one();
            (m.row_vec(r), t)
        })
        .collect();
    let mut done: Vec<(Vec<RingElt>, Vec<RingElt>, usize, u32)> = Vec::new();

    for col in 0..cols {
        // pick the minimal-valuation entry in this column among working rows
        let mut best: Option<(usize, u32)> = None;
        for (i, (row, _)) in work.iter().enumerate() {
            let v = ctx.valuation(&row[col]);
            if v < n_prec && best.map(|(_, bv)| v < bv).unwrap_or(true) {
                best = Some((i, v));
            }
        }
        let Some((idx, v)) = best else { continue };
        let (mut row, mut tr) = work.swap_remove(idx);
        // normalize pivot to exactly p^v
        let (_, unit) = ctx.unit_part(&row[col]);
        let uinv = ctx.inv(&unit).unwrap();
        for e in row.iter_mut().chain(tr.iter_mut()) {
            *e = ctx.mul(e, &uinv);
        }
        // eliminate the column from the remaining working rows
        for (orow, otr) in work.iter_mut() {
            let e = orow[col].clone();
            if ctx.is_zero(&e) {
                continue;
            }
            let (ev, eunit) = ctx.unit_part(&e);
            debug_assert!(ev >= v);
            let q = ctx.scale(&eunit, p.pow(ev - v));
            for (a, b) in orow.iter_mut().zip(row.iter()) {
                *a = ctx.sub(a, &ctx.mul(&q, b));
            }
            for (a, b) in otr.iter_mut().zip(tr.iter()) {
                *a = ctx.sub(a, &ctx.mul(&q, b));
            }
        }
        // Howell closure: p^(N-v) * pivot row re-enters the pool
        if v > 0 {
            let k = p.pow(n_prec - v);
            let crow: Vec<RingElt> = row.iter().map(|e| ctx.scale(e, k)).collect();
            if crow.iter().any(|e| !ctx.is_zero(e)) {
                let ctr: Vec<RingElt> = tr.iter().map(|e| ctx.scale(e, k)).collect();
                work.push((crow, ctr));
            }
        }
        done.push((row, tr, col, v));
    }

    // back-reduce entries above each pivot mod p^v
    for k in 0..done.len() {
        let (prow, ptr, pcol, pv) = {
            let d = &done[k];
            (d.0.clone(), d.1.clone(), d.2, d.3)
        };
        let pvpow = p.pow(pv);
        for i in 0..k {
            let e = done[i].0[pcol].clone();
            // canonical remainder: coefficients mod p^v
            let rem = RingElt { coeffs: e.coeffs.iter().map(|c| c % pvpow).collect() };
            let diff = ctx.sub(&e, &rem);
            if ctx.is_zero(&diff) {
                continue;
            }
            let q = RingElt { coeffs: diff.coeffs.iter().map(|c| c / pvpow).collect() };
            for j in 0..prow.len() {
                let t = ctx.mul(&q, &prow[j]);
                done[i].0[j] = ctx.sub(&done[i].0[j], &t);
            }
            for j in 0..ptr.len() {
                let t = ctx.mul(&q, &ptr[j]);
                done[i].1[j] = ctx.sub(&done[i].1[j], &t);
            }
        }
    }

    let pivots: Vec<(usize, u32)> = done.iter().map(|d| (d.2, d.3)).collect();
    let form = MatrixOverR::from_rows(&ctx, done.iter().map(|d| d.0.clone()).collect());
    let transform = MatrixOverR::from_rows(&ctx, done.iter().map(|d| d.1.clone()).collect());
    let transform = if done.is_empty() {
        MatrixOverR::zero(&ctx, 0, m.rows)
    } else {
        transform
    };
    let form = if done.is_empty() { MatrixOverR::zero(&ctx, 0, cols) } else { form };
    HowellForm { form, transform, pivots }
}

/// Express `target` as a row combination of the Howell basis, if possible.
/// Returns the coefficient vector against `h.form`.
pub fn reduce_against(h: &HowellForm, target: &[RingElt]) -> Option<Vec<RingElt>> {
    let ctx = &h.form.ctx;
    let p = ctx.p();
    let mut rem: Vec<RingElt> = target.to_vec();
    let mut coeffs = vec![ctx.zero(); h.form.rows];
    for (k, &(col, v)) in h.pivots.iter().enumerate() {
        let e = &rem[col];
        if ctx.is_zero(e) {
            continue;
        }
        let ev = ctx.valuation(e);
        if ev < v {
            return None;
        }
        let (_, eunit) = ctx.unit_part(e);
        let q = ctx.scale(&eunit, p.pow(ev - v));
        for (a, b) in rem.iter_mut().zip(h.form.row(k)) {
            *a = ctx.sub(a, &ctx.mul(&q, b));
        }
        coeffs[k] = q;
    }
    if rem.iter().all(|e| ctx.is_zero(e)) {
        Some(coeffs)
    } else {
        None
    }
}

/// Is the vector inside the row span?
pub fn in_span(h: &HowellForm, target: &[RingElt]) -> bool {
    reduce_against(h, target).is_some()
}

/// Canonical representative of `target + rowspan`: the remainder after
/// reduction by the Howell basis with floor-division at each pivot.
pub fn canonical_coset_rep(h: &HowellForm, target: &[RingElt]) -> Vec<RingElt> {
    let ctx = &h.form.ctx;
    let p = ctx.p();
    let mut rem: Vec<RingElt> = target.to_vec();
    for (k, &(col, v)) in h.pivots.iter().enumerate() {
        let pvpow = p.pow(v);
        let e = rem[col].clone();
        let canonical = RingElt { coeffs: e.coeffs.iter().map(|c| c % pvpow).collect() };
        let diff = ctx.sub(&e, &canonical);
        if ctx.is_zero(&diff) {
            continue;
        }
        let q = RingElt { coeffs: diff.coeffs.iter().map(|c| c / pvpow).collect() };
        for (a, b) in rem.iter_mut().zip(h.form.row(k)) {
            *a = ctx.sub(a, &ctx.mul(&q, b));
        }
    }
    rem
}

/// Generators of the left kernel `{x : x * m = 0}`, as a Howell basis.
pub fn left_kernel(m: &MatrixOverR) -> MatrixOverR {
    let ctx = &m.ctx;
    // Howell of [m | I]; rows with zero m-part give the kernel.
    let mut aug = MatrixOverR::zero(ctx, m.rows, m.cols + m.rows);
    for r in 0..m.rows {
        for c in 0..m.cols {
            *aug.at_mut(r, c) = m.at(r, c).clone();
        }
        *aug.at_mut(r, m.cols + r) = ctx.one();
    }
    let h = howell_form(&aug);
    let mut rows = Vec::new();
    for (k, &(col, _)) in h.pivots.iter().enumerate() {
        if col >= m.cols {
            rows.push(h.form.row(k)[m.cols..].to_vec());
        }
    }
    if rows.is_empty() {
        MatrixOverR::zero(ctx, 0, m.rows)
    } else {
        MatrixOverR::from_rows(ctx, rows)
    }
}

/// Generators of the right kernel `{x : m * x = 0}` as rows.
pub fn right_kernel(m: &MatrixOverR) -> MatrixOverR {
    left_kernel(&m.transpose())
}

/// Solve `m * x = b` for a column vector `x`; returns one solution.
pub fn solve_right(m: &MatrixOverR, b: &[RingElt]) -> Option<Vec<RingElt>> {
    // x solves m x = b iff x^T solves (x^T) m^T = b^T as a row problem
    let mt = m.transpose();
    let h = howell_form(&mt);
    let coeffs = reduce_against(&h, b)?;
    // coeffs are against the Howell basis; pull back through the transform
    let x = h.transform.apply_left(&coeffs);
    Some(x)
}

/// A check matrix `C` with `u in rowspan(m) <=> u * C = 0`.
///
/// Exists because the coefficient rings are finite chain rings, where the
/// double annihilator of a row module is the module itself.
pub fn annihilator_check_matrix(m: &MatrixOverR) -> MatrixOverR {
    // right kernel of m, as columns
    let k = right_kernel(m);
    k.transpose()
}

/// Smith-style invariant factors (as exponents of p) of the cokernel
/// `R^cols / rowspan(m)`, sorted ascending. Columns with no pivot contribute
/// exponent `N`.
pub fn cokernel_invariants(m: &MatrixOverR) -> Vec<u32> {
    let ctx = m.ctx.clone();
    let n_prec = ctx.precision();
    let p = ctx.p();
    let mut a = m.clone();
    let rows = a.rows;
    let cols = a.cols;
    let mut exps = Vec::new();
    let mut r0 = 0usize;
    let mut used_cols = vec![false; cols];
    loop {
        // find global minimal-valuation entry in the remaining block
        let mut best: Option<(usize, usize, u32)> = None;
        for r in r0..rows {
            for c in 0..cols {
                if used_cols[c] {
                    continue;
                }
                let v = ctx.valuation(a.at(r, c));
                if v < n_prec && best.map(|(_, _, bv)| v < bv).unwrap_or(true) {
                    best = Some((r, c, v));
                }
            }
        }
        let Some((pr, pc, v)) = best else { break };
        // swap pivot row up
        if pr != r0 {
            for c in 0..cols {
                let x = a.at(pr, c).clone();
                let y = a.at(r0, c).clone();
                *a.at_mut(pr, c) = y;
                *a.at_mut(r0, c) = x;
            }
        }
        // normalize and clear the column and the row
        let (_, unit) = ctx.unit_part(a.at(r0, pc));
        let uinv = ctx.inv(&unit).unwrap();
        for c in 0..cols {
            *a.at_mut(r0, c) = ctx.mul(a.at(r0, c), &uinv);
        }
        for r in r0 + 1..rows {
            let e = a.at(r, pc).clone();
            if ctx.is_zero(&e) {
                continue;
            }
            let (ev, eunit) = ctx.unit_part(&e);
            let q = ctx.scale(&eunit, p.pow(ev - v));
            for c in 0..cols {
                let t = ctx.mul(&q, a.at(r0, c));
                *a.at_mut(r, c) = ctx.sub(a.at(r, c), &t);
            }
        }
        // column operations: clear the pivot row (allowed for cokernel)
        for c in 0..cols {
            if c == pc || used_cols[c] {
                continue;
            }
            let e = a.at(r0, c).clone();
            if ctx.is_zero(&e) {
                continue;
            }
            let (ev, eunit) = ctx.unit_part(&e);
            if ev < v {
                unreachable!("pivot was not minimal");
            }
            let q = ctx.scale(&eunit, p.pow(ev - v));
            for r in r0..rows {
                let t = ctx.mul(&q, a.at(r, pc));
                *a.at_mut(r, c) = ctx.sub(a.at(r, c), &t);
            }
        }
        used_cols[pc] = true;
        exps.push(v);
        r0 += 1;
        if r0 >= rows {
            break;
        }
    }
    for c in 0..cols {
        if !used_cols[c] {
            exps.push(n_prec);
        }
    }
    exps.retain(|&e| e > 0);
    exps.sort_unstable();
    exps
}

// ---------------------------------------------------------------------------
// group-ring layers R[Z/p^alpha]
// ---------------------------------------------------------------------------

/// The commutative layer ring `R[gamma]/(gamma^(p^alpha) - 1)`, used for the
/// anticyclotomic twist at finite layers. Elements are coefficient vectors of
/// length `p^alpha` over the base ring, multiplied by cyclic convolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupRingLayer {
    pub base: RingCtx,
    pub alpha: u32,
    pub rank: usize,
}

impl GroupRingLayer {
    pub fn new(base: &RingCtx, alpha: u32) -> Self {
        let rank = base.p().pow(alpha) as usize;
        GroupRingLayer { base: base.clone(), alpha, rank }
    }
    pub fn cardinality(&self) -> u128 {
        (self.base.cardinality() as u128).pow(self.rank as u32)
    }
    pub fn zero(&self) -> Vec<RingElt> {
        vec![self.base.zero(); self.rank]
    }
    pub fn one(&self) -> Vec<RingElt> {
        let mut v = self.zero();
        v[0] = self.base.one();
        v
    }
    /// The group element gamma^k as a ring element.
    pub fn gamma_pow(&self, k: i64) -> Vec<RingElt> {
        let mut v = self.zero();
        let idx = k.rem_euclid(self.rank as i64) as usize;
        v[idx] = self.base.one();
        v
    }
    pub fn add(&self, a: &[RingElt], b: &[RingElt]) -> Vec<RingElt> {
        a.iter().zip(b).map(|(x, y)| self.base.add(x, y)).collect()
    }
    pub fn mul(&self, a: &[RingElt], b: &[RingElt]) -> Vec<RingElt> {
        let mut out = self.zero();
        for i in 0..self.rank {
            if self.base.is_zero(&a[i]) {
                continue;
            }
            for j in 0..self.rank {
                let k = (i + j) % self.rank;
                let t = self.base.mul(&a[i], &b[j]);
                out[k] = self.base.add(&out[k], &t);
            }
        }
        out
    }
    /// Projection to the layer `alpha - 1` ring, sending gamma to gamma.
    pub fn project(&self, a: &[RingElt]) -> (GroupRingLayer, Vec<RingElt>) {
        assert!(self.alpha >= 1);
        let lower = GroupRingLayer::new(&self.base, self.alpha - 1);
        let mut out = lower.zero();
        for (i, c) in a.iter().enumerate() {
            let k = i % lower.rank;
            out[k] = self.base.add(&out[k], c);
        }
        (lower, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(p: u64, n: u32) -> RingCtx {
        make_ring(p, n, None).unwrap()
    }

    #[test]
    fn make_ring_examples() {
        // (3, 2, none) -> ring of size 9
        let r = z(3, 2);
        assert_eq!(r.cardinality(), 9);
        // (3, 1, X^2+1) -> size 9 with X^2+1 irreducible mod 3
        let e = make_ring(3, 1, Some(&[1, 0, 1])).unwrap();
        assert_eq!(e.cardinality(), 9);
        // (3, 1, X^2-1) -> ReducibleModulus
        let bad = make_ring(3, 1, Some(&[2, 0, 1]));
        assert!(matches!(bad, Err(RingError::ReducibleModulus(_))));
        // composite p
        assert!(matches!(make_ring(9, 1, None), Err(RingError::CompositeP(9))));
        assert!(matches!(make_ring(2, 1, None), Err(RingError::CompositeP(2))));
    }

    #[test]
    fn units_and_inverses() {
        let r = z(3, 3);
        assert!(r.is_unit(&r.from_u64(5)));
        assert!(!r.is_unit(&r.from_u64(6)));
        for x in r.iter_elements() {
            let byg = gcd(x.coeffs[0], 27) == 1;
            assert_eq!(r.is_unit(&x), byg, "unit test vs gcd oracle at {:?}", x);
            if r.is_unit(&x) {
                let inv = r.inv(&x).unwrap();
                assert_eq!(r.mul(&x, &inv), r.one());
            }
        }
        // extension ring inverses
        let e = make_ring(3, 2, Some(&[1, 0, 1])).unwrap();
        let x = e.add(&e.gen_x(), &e.from_u64(4)); // X + 4
        let inv = e.inv(&x).unwrap();
        assert_eq!(e.mul(&x, &inv), e.one());
    }

    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 { a } else { gcd(b, a % b) }
    }

    #[test]
    fn exact_division_examples() {
        // x = 54 in Z/3^5, s = 3 -> 2 in Z/3^2
        let r = z(3, 5);
        let (low, q) = r.exact_div_p_power(&r.from_u64(54), 3).unwrap();
        assert_eq!(low.precision(), 2);
        assert_eq!(q, low.from_u64(2));
        // zero case
        let (_, q0) = r.exact_div_p_power(&r.zero(), 2).unwrap();
        assert!(r.reduce_precision(3).is_zero(&q0));
        // not divisible
        let r3 = z(3, 3);
        assert!(matches!(
            r3.exact_div_p_power(&r3.from_u64(5), 1),
            Err(RingError::NotDivisible { .. })
        ));
        // precision exhausted
        assert!(matches!(
            r3.exact_div_p_power(&r3.from_u64(0), 3),
            Err(RingError::PrecisionExhausted { .. })
        ));
        // lift-back property: p^s * result == original
        for x in 0..27u64 {
            let e = r3.from_u64(x * 3);
            let (low, q) = r3.exact_div_p_power(&e, 1).unwrap();
            let lifted = (q.coeffs[0] * 3) % 27;
            assert_eq!(lifted % (low.pn() * 3), e.coeffs[0] % (low.pn() * 3));
        }
    }

    #[test]
    fn howell_identity_and_canonical() {
        let r = z(3, 2);
        let id = MatrixOverR::identity(&r, 2);
        let h = howell_form(&id);
        assert_eq!(h.form, id);
        // [[3]] over Z/9 is already canonical
        let m = MatrixOverR::from_u64_rows(&r, &[vec![3]]);
        let h = howell_form(&m);
        assert_eq!(h.form, m);
        assert_eq!(h.pivots, vec![(0, 1)]);
    }

    #[test]
    fn howell_idempotent_and_span_preserving() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for &(p, n) in &[(3u64, 1u32), (3, 2), (3, 3), (5, 1), (5, 2), (5, 3)] {
            let r = z(p, n);
            for _ in 0..100 {
                let rows = rng.gen_range(1..5);
                let cols = rng.gen_range(1..7);
                let m = MatrixOverR::from_u64_rows(
                    &r,
                    &(0..rows)
                        .map(|_| (0..cols).map(|_| rng.gen_range(0..r.pn())).collect())
                        .collect::<Vec<_>>(),
                );
                let h = howell_form(&m);
                // transform * m = form
                assert_eq!(h.transform.mul(&m), h.form, "transform property");
                // idempotence
                let h2 = howell_form(&h.form);
                assert_eq!(h2.form, h.form, "idempotence");
                // span equality both ways by membership
                for i in 0..m.rows {
                    assert!(in_span(&h, m.row(i)), "original row in span");
                }
                let hm = howell_form(&m);
                for i in 0..h.form.rows {
                    assert!(in_span(&hm, h.form.row(i)), "canonical row in original span");
                }
            }
        }
    }

    #[test]
    fn kernels_and_annihilators() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let r = z(3, 3);
        for _ in 0..60 {
            let rows = rng.gen_range(1..4);
            let cols = rng.gen_range(1..5);
            let m = MatrixOverR::from_u64_rows(
                &r,
                &(0..rows)
                    .map(|_| (0..cols).map(|_| rng.gen_range(0..27)).collect())
                    .collect::<Vec<_>>(),
            );
            let k = left_kernel(&m);
            for i in 0..k.rows {
                let prod = m.transpose().apply(k.row(i));
                assert!(prod.iter().all(|e| r.is_zero(e)), "left kernel row annihilates");
            }
            // annihilator check matrix characterizes the span exactly
            let c = annihilator_check_matrix(&m);
            let h = howell_form(&m);
            // every span element passes
            for i in 0..m.rows {
                let prod = c.transpose().apply(m.row(i));
                assert!(prod.iter().all(|e| r.is_zero(e)));
            }
            // random vectors: membership agrees with the check matrix
            for _ in 0..20 {
                let v: Vec<RingElt> =
                    (0..cols).map(|_| r.from_u64(rng.gen_range(0..27))).collect();
                let passes = c.transpose().apply(&v).iter().all(|e| r.is_zero(e));
                assert_eq!(passes, in_span(&h, &v), "double annihilator");
            }
        }
    }

    #[test]
    fn solve_right_works() {
        let r = z(3, 2);
        let m = MatrixOverR::from_u64_rows(&r, &[vec![1, 2], vec![3, 4]]);
        let b = vec![r.from_u64(5), r.from_u64(6)];
        let x = solve_right(&m, &b).unwrap();
        assert_eq!(m.apply(&x), b);
    }

    #[test]
    fn group_ring_layer_basics() {
        let r = z(3, 1);
        // alpha = 0 -> base ring itself
        let l0 = GroupRingLayer::new(&r, 0);
        assert_eq!(l0.rank, 1);
        // alpha = 1, p = 3, N = 1 -> ring of size 27
        let l1 = GroupRingLayer::new(&r, 1);
        assert_eq!(l1.cardinality(), 27);
        // projection layer 2 -> layer 1 is a surjective ring map (exhaustive
        // multiplicativity check on a small sample grid)
        let l2 = GroupRingLayer::new(&r, 2);
        let g = l2.gamma_pow(1);
        let a = l2.add(&l2.one(), &g);
        let b = l2.add(&g, &l2.gamma_pow(5));
        let (l1b, pa) = l2.project(&a);
        let (_, pb) = l2.project(&b);
        let (_, pab) = l2.project(&l2.mul(&a, &b));
        assert_eq!(l1b.mul(&pa, &pb), pab, "projection is multiplicative");
        assert_eq!(l1b.rank, 3);
    }

    #[test]
    fn det_and_inverse() {
        let r = z(3, 4);
        let m = MatrixOverR::from_u64_rows(&r, &[vec![2, 3], vec![1, 2]]);
        let d = m.det();
        assert_eq!(d, r.from_u64(1));
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), MatrixOverR::identity(&r, 2));
        let sing = MatrixOverR::from_u64_rows(&r, &[vec![3, 0], vec![0, 3]]);
        assert!(sing.inverse().is_err());
        assert_eq!(sing.det(), r.from_u64(9));
    }

    #[test]
    fn cokernel_invariants_basic() {
        let r = z(3, 2);
        // R^2 / <(3,0)> = Z/3 + Z/9 -> exponents [1, 2]
        let m = MatrixOverR::from_u64_rows(&r, &[vec![3, 0]]);
        assert_eq!(cokernel_invariants(&m), vec![1, 2]);
        // full span -> trivial cokernel
        let m = MatrixOverR::identity(&r, 2);
        assert!(cokernel_invariants(&m).is_empty());
    }
}
