//! Exact arithmetic for coordinates lying in the integer span of a small set
//! of real generators.
//!
//! A [`GeneratorContext`] declares a handful of positive real base generators
//! (decimal literals, `e - 2`, square roots) together with the finite list of
//! monomials in those bases that scalars are allowed to occupy. A
//! [`ModuleScalar`] is an exact rational coefficient vector over that monomial
//! list; addition and scaling act componentwise, so cancellation is exact.
//!
//! Sign decisions are certified: a cheap `f64` interval screen is tried first,
//! then interval evaluation with doubling precision until the enclosure
//! excludes zero. Under the declared independence contract a scalar is zero
//! exactly when all of its coefficients are zero; a nonzero coefficient vector
//! whose enclosures keep straddling zero indicates a violated contract and is
//! reported as an undecidable sign rather than silently resolved.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};
use thiserror::Error;

/// Hard ceiling for sign refinement, in bits.
pub const DEFAULT_PRECISION_CEILING: u32 = 16_384;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("scalars belong to different generator contexts")]
    ContextMismatch,
    #[error("sign undecidable at {bits} bits: independence contract is likely violated")]
    UndecidableSign { bits: u32 },
    #[error("product monomial {0:?} is not declared in the generator context")]
    MonomialOutOfContext(Vec<u32>),
    #[error("coefficient vector has length {got}, context declares {expected} monomials")]
    CoefficientLength { got: usize, expected: usize },
    #[error("invalid decimal literal `{0}`")]
    BadLiteral(String),
    #[error("generator `{0}` is not a positive real")]
    NonPositiveGenerator(String),
    #[error("context with refinable (irrational) generators must declare independence")]
    MissingIndependence,
}

/// Sign of an exact scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

/// How a base generator's value is refined to arbitrary precision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Refinement {
    /// The generator equals its decimal literal exactly.
    Exact,
    /// Euler's number minus two, refined by partial sums of the factorial series.
    EMinusTwo,
    /// Square root of a positive integer, refined by scaled integer square roots.
    Sqrt(u64),
}

/// A named positive real base generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    /// High-precision decimal literal; for `Exact` refinement this is the value.
    pub literal: String,
    pub refinement: Refinement,
}

/// 200-digit decimal literal for e - 2.
pub const E_MINUS_TWO_LITERAL: &str = "0.71828182845904523536028747135266249775724709369995957496696762772407663035354759457138217852516642742746639193200305992181741359662904357290033429526059563073813232862794349076323382988075319525101901";

/// 200-digit decimal literal for sqrt(2).
pub const SQRT_TWO_LITERAL: &str = "1.41421356237309504880168872420969807856967187537694807317667973799073247846210703885038753432764157273501384623091229702492483605585073721264412149709993583141322266592750559275579995050115278206057147";

impl Generator {
    pub fn rational(name: &str, literal: &str) -> Self {
        Generator { name: name.to_string(), literal: literal.to_string(), refinement: Refinement::Exact }
    }

    pub fn e_minus_two(name: &str) -> Self {
        Generator {
            name: name.to_string(),
            literal: E_MINUS_TWO_LITERAL.to_string(),
            refinement: Refinement::EMinusTwo,
        }
    }

    pub fn sqrt(name: &str, n: u64) -> Self {
        let literal = match n {
            2 => SQRT_TWO_LITERAL.to_string(),
            _ => {
                // Literal is informational for non-preset roots; 30 digits via
                // integer square root of n * 10^60.
                let scaled = BigUint::from(n) * BigUint::from(10u32).pow(60);
                let root = scaled.sqrt();
                let s = root.to_string();
                let (int, frac) = s.split_at(s.len().saturating_sub(30));
                if int.is_empty() { format!("0.{frac}") } else { format!("{int}.{frac}") }
            }
        };
        Generator { name: name.to_string(), literal, refinement: Refinement::Sqrt(n) }
    }
}

/// Closed rational interval with exact endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Interval {
    pub fn point(v: BigRational) -> Self {
        Interval { hi: v.clone(), lo: v }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    fn add(&self, o: &Interval) -> Interval {
        Interval { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    fn scale(&self, c: &BigRational) -> Interval {
        if c.is_negative() {
            Interval { lo: &self.hi * c, hi: &self.lo * c }
        } else {
            Interval { lo: &self.lo * c, hi: &self.hi * c }
        }
    }

    /// Product for intervals with nonnegative lower endpoints.
    fn mul_nonneg(&self, o: &Interval) -> Interval {
        Interval { lo: &self.lo * &o.lo, hi: &self.hi * &o.hi }
    }

    pub fn to_f64_mid(&self) -> f64 {
        ((&self.lo + &self.hi) / BigRational::from_integer(2.into())).to_f64().unwrap_or(f64::NAN)
    }
}

/// Conservative f64 enclosure used as a fast sign screen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F64Enclosure {
    pub lo: f64,
    pub hi: f64,
}

const WHOLE: F64Enclosure = F64Enclosure { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

impl F64Enclosure {
    fn point_widened(v: f64) -> Self {
        if v.is_finite() {
            F64Enclosure { lo: v.next_down().next_down(), hi: v.next_up().next_up() }
        } else {
            WHOLE
        }
    }

    fn widen(self) -> Self {
        F64Enclosure { lo: self.lo.next_down(), hi: self.hi.next_up() }
    }

    fn add(self, o: Self) -> Self {
        F64Enclosure { lo: self.lo + o.lo, hi: self.hi + o.hi }.widen()
    }

    fn mul(self, o: Self) -> Self {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in c {
            if v.is_nan() {
                return WHOLE;
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        F64Enclosure { lo, hi }.widen()
    }
}

fn rational_enclosure(r: &BigRational) -> F64Enclosure {
    // Fast path for exactly representable numerator and denominator.
    if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
        if d > 0 && n.abs() < (1 << 52) && d < (1 << 52) {
            return F64Enclosure::point_widened(n as f64 / d as f64);
        }
    }
    match r.to_f64() {
        Some(v) => F64Enclosure::point_widened(v),
        None => WHOLE,
    }
}

struct ContextInner {
    bases: Vec<Generator>,
    base_values: Vec<BigRational>,
    monomials: Vec<Vec<u32>>,
    monomial_index: HashMap<Vec<u32>, usize>,
    monomial_screen: Vec<F64Enclosure>,
    independent: bool,
    precision_ceiling: u32,
    interval_cache: Mutex<HashMap<(usize, u32), Interval>>,
}

impl fmt::Debug for ContextInner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratorContext")
            .field("bases", &self.bases.iter().map(|b| b.name.as_str()).collect::<Vec<_>>())
            .field("monomials", &self.monomials.len())
            .field("independent", &self.independent)
            .finish()
    }
}

/// A shared, immutable generator context. Cheap to clone.
#[derive(Debug, Clone)]
pub struct GeneratorContext(Arc<ContextInner>);

pub fn parse_decimal(s: &str) -> Result<BigRational, ExactError> {
    let t = s.trim();
    let (sign, t) = match t.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = match t.split_once('.') {
        Some((i, f)) => (i, f),
        None => (t, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(ExactError::BadLiteral(s.to_string()));
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(ExactError::BadLiteral(s.to_string()));
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = digits.parse().map_err(|_| ExactError::BadLiteral(s.to_string()))?;
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    Ok(BigRational::new(num * BigInt::from(sign), den))
}

/// Interval for e - 2 with width at most 2^-(bits+2).
fn e_minus_two_interval(bits: u32) -> Interval {
    // e - 2 = sum_{k >= 2} 1/k!; the tail after n terms is below 2/(n+1)!.
    let threshold = BigRational::new(BigInt::one(), BigInt::from(2u32).pow(bits + 2));
    let mut term = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut sum = term.clone();
    let mut k = BigInt::from(2);
    loop {
        k += 1;
        term /= BigRational::from_integer(k.clone());
        sum += &term;
        let tail_bound = &term * BigRational::new(BigInt::from(2), &k + BigInt::one());
        if tail_bound < threshold {
            return Interval { lo: sum.clone(), hi: sum + tail_bound };
        }
    }
}

/// Interval for sqrt(n) with width 2^-(bits+2).
fn sqrt_interval(n: u64, bits: u32) -> Interval {
    let shift = bits + 2;
    let scaled = BigUint::from(n) << (2 * shift);
    let root = scaled.sqrt();
    let den = BigInt::one() << shift;
    let lo = BigRational::new(BigInt::from(root.clone()), den.clone());
    let hi = BigRational::new(BigInt::from(root + BigUint::one()), den);
    Interval { lo, hi }
}

impl GeneratorContext {
    /// Builds a context from base generators and an explicit monomial list.
    ///
    /// The monomial list must contain the constant monomial (all-zero exponent
    /// vector); scalars are dense coefficient vectors over this list.
    pub fn new(
        bases: Vec<Generator>,
        mut monomials: Vec<Vec<u32>>,
        independent: bool,
    ) -> Result<Self, ExactError> {
        let mut base_values = Vec::with_capacity(bases.len());
        for b in &bases {
            let v = parse_decimal(&b.literal)?;
            if !v.is_positive() {
                return Err(ExactError::NonPositiveGenerator(b.name.clone()));
            }
            if b.refinement != Refinement::Exact && !independent {
                return Err(ExactError::MissingIndependence);
            }
            base_values.push(v);
        }
        if !monomials.iter().any(|m| m.iter().all(|&e| e == 0)) {
            monomials.insert(0, vec![0; bases.len()]);
        }
        for m in &mut monomials {
            m.resize(bases.len(), 0);
        }
        let mut monomial_index = HashMap::new();
        for (i, m) in monomials.iter().enumerate() {
            monomial_index.insert(m.clone(), i);
        }
        // Screens come from a coarse but safe interval at 80 bits.
        let base_screens: Vec<F64Enclosure> = bases
            .iter()
            .zip(&base_values)
            .map(|(b, v)| match &b.refinement {
                Refinement::Exact => rational_enclosure(v),
                Refinement::EMinusTwo => {
                    let iv = e_minus_two_interval(80);
                    F64Enclosure { lo: rational_enclosure(&iv.lo).lo, hi: rational_enclosure(&iv.hi).hi }
                }
                Refinement::Sqrt(n) => {
                    let iv = sqrt_interval(*n, 80);
                    F64Enclosure { lo: rational_enclosure(&iv.lo).lo, hi: rational_enclosure(&iv.hi).hi }
                }
            })
            .collect();
        let monomial_screen = monomials
            .iter()
            .map(|m| {
                let mut acc = F64Enclosure { lo: 1.0, hi: 1.0 };
                for (b, &e) in base_screens.iter().zip(m.iter()) {
                    for _ in 0..e {
                        acc = acc.mul(*b);
                    }
                }
                acc
            })
            .collect();
        Ok(GeneratorContext(Arc::new(ContextInner {
            bases,
            base_values,
            monomials,
            monomial_index,
            monomial_screen,
            independent,
            precision_ceiling: DEFAULT_PRECISION_CEILING,
            interval_cache: Mutex::new(HashMap::new()),
        })))
    }

    /// Context spanned by 1, alpha, ..., alpha^degree.
    pub fn alpha_powers(alpha: Generator, degree: u32) -> Result<Self, ExactError> {
        let independent = alpha.refinement != Refinement::Exact;
        let monomials = (0..=degree).map(|e| vec![e]).collect();
        GeneratorContext::new(vec![alpha], monomials, independent)
    }

    /// Context for a pair of rectangle dimensions `(w_a, h_a, w_b, h_b)`:
    /// the four bases, and the four width*height products needed for areas.
    pub fn rect_dims(dims: [Generator; 4], independent: bool) -> Result<Self, ExactError> {
        let mut monomials = vec![vec![0, 0, 0, 0]];
        for i in 0..4 {
            let mut m = vec![0, 0, 0, 0];
            m[i] = 1;
            monomials.push(m);
        }
        // widths are indices 0 (w_a) and 2 (w_b); heights 1 (h_a) and 3 (h_b)
        for w in [0usize, 2] {
            for h in [1usize, 3] {
                let mut m = vec![0, 0, 0, 0];
                m[w] = 1;
                m[h] = 1;
                monomials.push(m);
            }
        }
        GeneratorContext::new(dims.to_vec(), monomials, independent)
    }

    /// Context over the rationals alone (constant monomial only).
    pub fn rational_only() -> Self {
        GeneratorContext::new(Vec::new(), vec![vec![]], false).expect("rational context is always valid")
    }

    pub fn bases(&self) -> &[Generator] {
        &self.0.bases
    }

    pub fn monomials(&self) -> &[Vec<u32>] {
        &self.0.monomials
    }

    pub fn num_generators(&self) -> usize {
        self.0.monomials.len()
    }

    pub fn independent(&self) -> bool {
        self.0.independent
    }

    pub fn same_as(&self, other: &GeneratorContext) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.bases == other.0.bases
                && self.0.monomials == other.0.monomials
                && self.0.independent == other.0.independent)
    }

    fn base_interval(&self, idx: usize, bits: u32) -> Interval {
        match &self.0.bases[idx].refinement {
            Refinement::Exact => Interval::point(self.0.base_values[idx].clone()),
            refinement => {
                let key = (idx, bits);
                if let Some(iv) = self.0.interval_cache.lock().unwrap().get(&key) {
                    return iv.clone();
                }
                let iv = match refinement {
                    Refinement::EMinusTwo => e_minus_two_interval(bits),
                    Refinement::Sqrt(n) => sqrt_interval(*n, bits),
                    Refinement::Exact => unreachable!(),
                };
                self.0.interval_cache.lock().unwrap().insert(key, iv.clone());
                iv
            }
        }
    }

    fn monomial_interval(&self, mono: &[u32], bits: u32) -> Interval {
        let mut acc = Interval::point(BigRational::one());
        for (idx, &e) in mono.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let b = self.base_interval(idx, bits);
            for _ in 0..e {
                acc = acc.mul_nonneg(&b);
            }
        }
        acc
    }

    /// The zero scalar.
    pub fn zero(&self) -> ModuleScalar {
        ModuleScalar::from_coeffs(self, vec![BigRational::zero(); self.num_generators()])
            .expect("length matches by construction")
    }

    /// The rational constant `r`.
    pub fn constant(&self, r: BigRational) -> ModuleScalar {
        let mut coeffs = vec![BigRational::zero(); self.num_generators()];
        let idx = self.0.monomial_index[&vec![0; self.0.bases.len()]];
        coeffs[idx] = r;
        ModuleScalar::from_coeffs(self, coeffs).expect("length matches by construction")
    }

    pub fn one(&self) -> ModuleScalar {
        self.constant(BigRational::one())
    }

    pub fn integer(&self, n: i64) -> ModuleScalar {
        self.constant(BigRational::from_integer(n.into()))
    }

    /// The `idx`-th base generator as a scalar.
    pub fn base(&self, idx: usize) -> ModuleScalar {
        let mut exp = vec![0u32; self.0.bases.len()];
        exp[idx] = 1;
        let mono = self.0.monomial_index[&exp];
        let mut coeffs = vec![BigRational::zero(); self.num_generators()];
        coeffs[mono] = BigRational::one();
        ModuleScalar::from_coeffs(self, coeffs).expect("length matches by construction")
    }
}

impl PartialEq for GeneratorContext {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

/// Exact element of the module spanned by the context's monomials.
#[derive(Clone)]
pub struct ModuleScalar {
    ctx: GeneratorContext,
    coeffs: Vec<BigRational>,
    screen: F64Enclosure,
}

impl fmt::Debug for ModuleScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModuleScalar(~{:.6}, coeffs [", self.to_f64())?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "])")
    }
}

impl ModuleScalar {
    pub fn from_coeffs(ctx: &GeneratorContext, coeffs: Vec<BigRational>) -> Result<Self, ExactError> {
        if coeffs.len() != ctx.num_generators() {
            return Err(ExactError::CoefficientLength { got: coeffs.len(), expected: ctx.num_generators() });
        }
        let mut screen = F64Enclosure { lo: 0.0, hi: 0.0 };
        for (c, m) in coeffs.iter().zip(&ctx.0.monomial_screen) {
            if c.is_zero() {
                continue;
            }
            screen = screen.add(rational_enclosure(c).mul(*m));
        }
        Ok(ModuleScalar { ctx: ctx.clone(), coeffs, screen })
    }

    fn with_screen(ctx: GeneratorContext, coeffs: Vec<BigRational>, screen: F64Enclosure) -> Self {
        ModuleScalar { ctx, coeffs, screen }
    }

    pub fn context(&self) -> &GeneratorContext {
        &self.ctx
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Structural zero test: all coefficients zero. Under the independence
    /// contract this coincides with the value being zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn check_ctx(&self, other: &ModuleScalar) {
        assert!(
            self.ctx.same_as(&other.ctx),
            "scalars from different generator contexts combined"
        );
    }

    /// Exact rational linear combination of scalars sharing one context.
    pub fn linear_combination(terms: &[(BigRational, &ModuleScalar)]) -> Result<ModuleScalar, ExactError> {
        let Some((_, first)) = terms.first() else {
            return Err(ExactError::CoefficientLength { got: 0, expected: 1 });
        };
        let ctx = first.ctx.clone();
        let mut coeffs = vec![BigRational::zero(); ctx.num_generators()];
        for (r, s) in terms {
            if !s.ctx.same_as(&ctx) {
                return Err(ExactError::ContextMismatch);
            }
            for (acc, c) in coeffs.iter_mut().zip(&s.coeffs) {
                *acc += r * c;
            }
        }
        ModuleScalar::from_coeffs(&ctx, coeffs)
    }

    pub fn scale(&self, r: &BigRational) -> ModuleScalar {
        let coeffs = self.coeffs.iter().map(|c| c * r).collect();
        let screen = self.screen.mul(rational_enclosure(r));
        ModuleScalar::with_screen(self.ctx.clone(), coeffs, screen)
    }

    /// Product of two scalars. Square-root generators reduce algebraically
    /// (`sqrt(n)^2 = n`); any remaining product monomial must be declared.
    pub fn try_mul(&self, other: &ModuleScalar) -> Result<ModuleScalar, ExactError> {
        if !self.ctx.same_as(&other.ctx) {
            return Err(ExactError::ContextMismatch);
        }
        let inner = &self.ctx.0;
        let mut coeffs = vec![BigRational::zero(); self.ctx.num_generators()];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let mut exp: Vec<u32> = inner.monomials[i]
                    .iter()
                    .zip(&inner.monomials[j])
                    .map(|(x, y)| x + y)
                    .collect();
                let mut term = a * b;
                for (bi, e) in exp.iter_mut().enumerate() {
                    if *e >= 2 {
                        if let Refinement::Sqrt(n) = inner.bases[bi].refinement {
                            let halves = *e / 2;
                            term *= BigRational::from_integer(BigInt::from(n)).pow(halves as i32);
                            *e %= 2;
                        }
                    }
                }
                let Some(&k) = inner.monomial_index.get(&exp) else {
                    return Err(ExactError::MonomialOutOfContext(exp));
                };
                coeffs[k] += term;
            }
        }
        let screen = self.screen.mul(other.screen);
        Ok(ModuleScalar::with_screen(self.ctx.clone(), coeffs, screen))
    }

    /// Interval evaluation at the requested precision.
    fn eval_interval(&self, bits: u32) -> Interval {
        let mut acc = Interval::point(BigRational::zero());
        for (c, m) in self.coeffs.iter().zip(self.ctx.monomials()) {
            if c.is_zero() {
                continue;
            }
            acc = acc.add(&self.ctx.monomial_interval(m, bits).scale(c));
        }
        acc
    }

    /// Certified sign.
    pub fn sign(&self) -> Result<Sign, ExactError> {
        if self.is_zero() {
            return Ok(Sign::Zero);
        }
        if self.screen.lo > 0.0 {
            return Ok(Sign::Positive);
        }
        if self.screen.hi < 0.0 {
            return Ok(Sign::Negative);
        }
        if !self.ctx.independent() {
            // All bases are exact rationals: evaluate outright.
            let v = self.eval_interval(0);
            debug_assert!(v.lo == v.hi);
            return Ok(if v.lo.is_positive() {
                Sign::Positive
            } else if v.lo.is_negative() {
                Sign::Negative
            } else {
                Sign::Zero
            });
        }
        let ceiling = self.ctx.0.precision_ceiling;
        let mut bits = 64u32;
        loop {
            let iv = self.eval_interval(bits);
            if iv.lo.is_positive() {
                return Ok(Sign::Positive);
            }
            if iv.hi.is_negative() {
                return Ok(Sign::Negative);
            }
            if iv.lo == iv.hi {
                // Point enclosure straddling zero can never be refined away.
                return Err(ExactError::UndecidableSign { bits });
            }
            if bits >= ceiling {
                return Err(ExactError::UndecidableSign { bits });
            }
            bits = (bits * 2).min(ceiling);
        }
    }

    /// An interval of width at most `2^(-bits+4) * (1 + |value|)` containing
    /// the exact value.
    pub fn approx(&self, bits: u32) -> Interval {
        let bits = bits.max(16);
        let mut p = bits + 8;
        loop {
            let iv = self.eval_interval(p);
            let mag = BigRational::one() + iv.lo.abs().max(iv.hi.abs());
            let bound = mag / BigRational::from_integer(BigInt::from(2u32).pow(bits - 4).max(BigInt::one()));
            if iv.width() <= bound {
                return iv;
            }
            p *= 2;
        }
    }

    pub fn to_f64(&self) -> f64 {
        let mid = (self.screen.lo + self.screen.hi) / 2.0;
        if mid.is_finite() && (self.screen.hi - self.screen.lo) < 1e-9 * (1.0 + mid.abs()) {
            mid
        } else {
            self.approx(64).to_f64_mid()
        }
    }

    /// Certified f64 enclosure `(lo, hi)` of the exact value.
    pub fn screen_bounds(&self) -> (f64, f64) {
        (self.screen.lo, self.screen.hi)
    }

    /// Certified comparison via the sign of the difference.
    pub fn cmp_exact(&self, other: &ModuleScalar) -> Result<Ordering, ExactError> {
        self.check_ctx(other);
        // Fast screen on the difference of enclosures.
        if self.screen.lo > other.screen.hi {
            return Ok(Ordering::Greater);
        }
        if self.screen.hi < other.screen.lo {
            return Ok(Ordering::Less);
        }
        let diff = self - other;
        Ok(match diff.sign()? {
            Sign::Negative => Ordering::Less,
            Sign::Zero => Ordering::Equal,
            Sign::Positive => Ordering::Greater,
        })
    }

    pub fn eq_exact(&self, other: &ModuleScalar) -> bool {
        if self.ctx.independent() {
            self.coeffs == other.coeffs
        } else {
            matches!(self.cmp_exact(other), Ok(Ordering::Equal))
        }
    }

    pub fn is_positive_exact(&self) -> Result<bool, ExactError> {
        Ok(self.sign()? == Sign::Positive)
    }

    pub fn min_exact(self, other: ModuleScalar) -> Result<ModuleScalar, ExactError> {
        Ok(match self.cmp_exact(&other)? {
            Ordering::Greater => other,
            _ => self,
        })
    }

    pub fn max_exact(self, other: ModuleScalar) -> Result<ModuleScalar, ExactError> {
        Ok(match self.cmp_exact(&other)? {
            Ordering::Less => other,
            _ => self,
        })
    }

    /// A canonical, hashable key for exact-value grouping.
    ///
    /// Under the independence contract equal values have equal coefficient
    /// vectors, so the serialized coefficients form a sound key.
    pub fn value_key(&self) -> String {
        let mut s = String::new();
        for c in &self.coeffs {
            s.push_str(&c.to_string());
            s.push('|');
        }
        s
    }
}

impl std::ops::Add for &ModuleScalar {
    type Output = ModuleScalar;
    fn add(self, rhs: &ModuleScalar) -> ModuleScalar {
        self.check_ctx(rhs);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        let screen = self.screen.add(rhs.screen);
        ModuleScalar::with_screen(self.ctx.clone(), coeffs, screen)
    }
}

impl std::ops::Sub for &ModuleScalar {
    type Output = ModuleScalar;
    fn sub(self, rhs: &ModuleScalar) -> ModuleScalar {
        self.check_ctx(rhs);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        let screen = self.screen.add(F64Enclosure { lo: -rhs.screen.hi, hi: -rhs.screen.lo });
        ModuleScalar::with_screen(self.ctx.clone(), coeffs, screen)
    }
}

impl std::ops::Neg for &ModuleScalar {
    type Output = ModuleScalar;
    fn neg(self) -> ModuleScalar {
        let coeffs = self.coeffs.iter().map(|c| -c).collect();
        let screen = F64Enclosure { lo: -self.screen.hi, hi: -self.screen.lo };
        ModuleScalar::with_screen(self.ctx.clone(), coeffs, screen)
    }
}

/// Serialized form of a rational: `["num", "den"]`.
pub fn rational_to_json(r: &BigRational) -> (String, String) {
    (r.numer().to_string(), r.denom().to_string())
}

pub fn rational_from_json(num: &str, den: &str) -> Result<BigRational, ExactError> {
    let n: BigInt = num.parse().map_err(|_| ExactError::BadLiteral(num.to_string()))?;
    let d: BigInt = den.parse().map_err(|_| ExactError::BadLiteral(den.to_string()))?;
    if d.is_zero() {
        return Err(ExactError::BadLiteral(format!("{num}/{den}")));
    }
    Ok(BigRational::new(n, d))
}
