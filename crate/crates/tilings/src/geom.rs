//! Half-open axis-aligned boxes with exact corners.
//!
//! All tiles and regions in this crate are half-open (closed below, open
//! above), so "disjoint interiors plus cover" is an exact set partition: a
//! nonempty Boolean combination of half-open boxes always contains a cell of
//! the induced coordinate grid and hence has positive volume.

use crate::exact::{ExactError, GeneratorContext, ModuleScalar, Sign};
use num_rational::BigRational;
use std::cmp::Ordering;

pub type Point = Vec<ModuleScalar>;

/// Half-open box `[lo_1, hi_1) x ... x [lo_d, hi_d)`.
#[derive(Debug, Clone)]
pub struct ExactBox {
    pub lo: Point,
    pub hi: Point,
}

impl ExactBox {
    pub fn new(lo: Point, hi: Point) -> Self {
        assert_eq!(lo.len(), hi.len());
        ExactBox { lo, hi }
    }

    /// Box `[0, extents_i)` at the origin.
    pub fn at_origin(ctx: &GeneratorContext, extents: &[ModuleScalar]) -> Self {
        let lo = vec![ctx.zero(); extents.len()];
        ExactBox { lo, hi: extents.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn extent(&self, i: usize) -> ModuleScalar {
        &self.hi[i] - &self.lo[i]
    }

    pub fn translate(&self, v: &[ModuleScalar]) -> ExactBox {
        ExactBox {
            lo: self.lo.iter().zip(v).map(|(a, b)| a + b).collect(),
            hi: self.hi.iter().zip(v).map(|(a, b)| a + b).collect(),
        }
    }

    /// True when some `hi_i <= lo_i`.
    pub fn is_empty(&self) -> Result<bool, ExactError> {
        for i in 0..self.dim() {
            if self.extent(i).sign()? != Sign::Positive {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn volume(&self) -> Result<ModuleScalar, ExactError> {
        let ctx = self.lo[0].context().clone();
        let mut v = ctx.one();
        for i in 0..self.dim() {
            let e = self.extent(i);
            if e.sign()? != Sign::Positive {
                return Ok(ctx.zero());
            }
            v = v.try_mul(&e)?;
        }
        Ok(v)
    }

    /// Componentwise intersection; `None` when empty.
    pub fn intersect(&self, other: &ExactBox) -> Result<Option<ExactBox>, ExactError> {
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let l = self.lo[i].clone().max_exact(other.lo[i].clone())?;
            let h = self.hi[i].clone().min_exact(other.hi[i].clone())?;
            if (&h - &l).sign()? != Sign::Positive {
                return Ok(None);
            }
            lo.push(l);
            hi.push(h);
        }
        Ok(Some(ExactBox { lo, hi }))
    }

    /// Volume of the intersection (zero when disjoint).
    pub fn intersection_volume(&self, other: &ExactBox) -> Result<ModuleScalar, ExactError> {
        let ctx = self.lo[0].context().clone();
        match self.intersect(other)? {
            Some(b) => b.volume(),
            None => Ok(ctx.zero()),
        }
    }

    pub fn overlaps(&self, other: &ExactBox) -> Result<bool, ExactError> {
        Ok(self.intersect(other)?.is_some())
    }

    /// Half-open membership test.
    pub fn contains_point(&self, p: &[ModuleScalar]) -> Result<bool, ExactError> {
        for i in 0..self.dim() {
            if (&p[i] - &self.lo[i]).sign()? == Sign::Negative {
                return Ok(false);
            }
            if (&self.hi[i] - &p[i]).sign()? != Sign::Positive {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Exact containment `self` within `other`.
    pub fn contained_in(&self, other: &ExactBox) -> Result<bool, ExactError> {
        for i in 0..self.dim() {
            if (&self.lo[i] - &other.lo[i]).sign()? == Sign::Negative {
                return Ok(false);
            }
            if (&other.hi[i] - &self.hi[i]).sign()? == Sign::Negative {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn eq_exact(&self, other: &ExactBox) -> bool {
        self.dim() == other.dim()
            && self.lo.iter().zip(&other.lo).all(|(a, b)| a.eq_exact(b))
            && self.hi.iter().zip(&other.hi).all(|(a, b)| a.eq_exact(b))
    }

    /// f64 bounds `(lo, hi)` per coordinate, widened outward.
    pub fn f64_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.lo.iter().map(|s| s.to_f64() - 1e-9).collect();
        let hi = self.hi.iter().map(|s| s.to_f64() + 1e-9).collect();
        (lo, hi)
    }
}

/// `outer \ notch` with `notch` contained in `outer` (possibly empty).
#[derive(Debug, Clone)]
pub struct NotchedBox {
    pub outer: ExactBox,
    pub notch: ExactBox,
}

impl NotchedBox {
    pub fn volume(&self) -> Result<ModuleScalar, ExactError> {
        let o = self.outer.volume()?;
        let n = self.notch.intersection_volume(&self.outer)?;
        Ok(&o - &n)
    }

    pub fn translate(&self, v: &[ModuleScalar]) -> NotchedBox {
        NotchedBox { outer: self.outer.translate(v), notch: self.notch.translate(v) }
    }

    /// Volume of the intersection of two notched boxes, by inclusion-exclusion.
    pub fn intersection_volume(&self, other: &NotchedBox) -> Result<ModuleScalar, ExactError> {
        let oo = self.outer.intersection_volume(&other.outer)?;
        let on = match self.outer.intersect(&other.outer)? {
            None => return Ok(oo),
            Some(core) => {
                let a = core.intersection_volume(&self.notch)?;
                let b = core.intersection_volume(&other.notch)?;
                let ab = match core.intersect(&self.notch)? {
                    Some(cn) => cn.intersection_volume(&other.notch)?,
                    None => self.outer.lo[0].context().zero(),
                };
                &(&a + &b) - &ab
            }
        };
        Ok(&oo - &on)
    }

    /// For half-open boxes a nonempty difference has positive volume, so
    /// intersection is decided by the volume sign.
    pub fn intersects(&self, other: &NotchedBox) -> Result<bool, ExactError> {
        Ok(self.intersection_volume(other)?.sign()? == Sign::Positive)
    }

    pub fn contains_point(&self, p: &[ModuleScalar]) -> Result<bool, ExactError> {
        Ok(self.outer.contains_point(p)? && !self.notch.contains_point(p)?)
    }
}

/// Exact comparison helper for sorting; panics only on a violated
/// independence contract, which is a usage error upstream.
pub fn cmp_scalar(a: &ModuleScalar, b: &ModuleScalar) -> Ordering {
    a.cmp_exact(b).expect("sign undecidable: independence contract violated")
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Generator;

    fn ctx() -> GeneratorContext {
        GeneratorContext::alpha_powers(Generator::e_minus_two("alpha"), 2).unwrap()
    }

    fn unit_box(ctx: &GeneratorContext) -> ExactBox {
        ExactBox::at_origin(ctx, &[ctx.one(), ctx.one()])
    }

    #[test]
    fn volume_and_intersection() {
        let c = ctx();
        let b = unit_box(&c);
        assert!(b.volume().unwrap().eq_exact(&c.one()));
        let shift = vec![c.one(), c.zero()];
        let b2 = b.translate(&shift);
        assert!(!b.overlaps(&b2).unwrap(), "half-open boxes sharing a face are disjoint");
        let a = c.base(0);
        let b3 = b.translate(&[a.clone(), c.zero()]);
        let inter = b.intersect(&b3).unwrap().unwrap();
        let expected = &c.one() - &a;
        assert!(inter.extent(0).eq_exact(&expected));
    }

    #[test]
    fn notched_volume() {
        let c = ctx();
        let a = c.base(0);
        let one = c.one();
        let two = c.integer(2);
        // outer [0,1) x [0,2), notch [1-a,1) x [2-a,2)
        let outer = ExactBox::new(vec![c.zero(), c.zero()], vec![one.clone(), two.clone()]);
        let notch = ExactBox::new(vec![&one - &a, &two - &a], vec![one.clone(), two.clone()]);
        let nb = NotchedBox { outer, notch };
        let vol = nb.volume().unwrap();
        let expected = &two - &a.try_mul(&a).unwrap();
        assert!(vol.eq_exact(&expected));
        // Disjointness with a far translate.
        let far = nb.translate(&[c.integer(5), c.zero()]);
        assert!(!nb.intersects(&far).unwrap());
        assert!(nb.intersects(&nb.clone()).unwrap());
    }
}
