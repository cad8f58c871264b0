//! Parameters, parameter sources and whole-module helpers.
//!
//! Networks are built by asking a [`ParamSource`] for each named tensor.
//! The same constructor therefore serves three purposes: fresh random
//! initialization ([`InitSource`]), loading from a weights archive
//! ([`ArchiveSource`]) and shape-only traversal for parameter audits
//! ([`ShapeSource`]), where nothing is allocated.

use pvrl_core::archive::Archive;
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{NnError, Result};
use crate::init::Init;
use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    name: String,
    shape: Vec<usize>,
    trainable: bool,
    pub value: Vec<T>,
    pub grad: Vec<T>,
}

impl<T: Real> Param<T> {
    pub fn new(name: &str, shape: &[usize], value: Vec<T>, trainable: bool) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if value.len() != numel {
            return Err(NnError::Shape {
                name: name.to_string(),
                expected: shape.to_vec(),
                got: vec![value.len()],
            });
        }
        let grad = if trainable {
            vec![T::zero(); numel]
        } else {
            Vec::new()
        };
        Ok(Param {
            name: name.to_string(),
            shape: shape.to_vec(),
            trainable,
            value,
            grad,
        })
    }

    /// Shape-only parameter: carries no storage.
    pub fn hollow(name: &str, shape: &[usize], trainable: bool) -> Self {
        Param {
            name: name.to_string(),
            shape: shape.to_vec(),
            trainable,
            value: Vec::new(),
            grad: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn trainable(&self) -> bool {
        self.trainable
    }

    pub fn is_hollow(&self) -> bool {
        self.value.len() != self.numel()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = T::zero());
    }
}

/// Declared shape of one parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub trainable: bool,
}

impl ParamSpec {
    pub fn numel(&self) -> u64 {
        self.shape.iter().map(|&d| d as u64).product()
    }
}

pub trait ParamSource<T: Real> {
    fn param(&mut self, name: &str, shape: &[usize], init: Init, trainable: bool) -> Result<Param<T>>;

    /// True when parameters produced by this source carry no values.
    fn is_shape_only(&self) -> bool {
        false
    }
}

/// Draws every parameter from its initializer.
pub struct InitSource<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
}

impl<'a, R: Rng + ?Sized> InitSource<'a, R> {
    pub fn new(rng: &'a mut R) -> Self {
        InitSource { rng }
    }
}

impl<T: Real, R: Rng + ?Sized> ParamSource<T> for InitSource<'_, R> {
    fn param(&mut self, name: &str, shape: &[usize], init: Init, trainable: bool) -> Result<Param<T>> {
        let values = init.sample(shape, self.rng).into_iter().map(T::lit).collect();
        Param::new(name, shape, values, trainable)
    }
}

/// Records shapes without allocating.
#[derive(Debug, Default)]
pub struct ShapeSource {
    specs: Vec<ParamSpec>,
}

impl ShapeSource {
    pub fn new() -> Self {
        ShapeSource::default()
    }

    pub fn specs(&self) -> &[ParamSpec] {
        &self.specs
    }

    pub fn trainable_count(&self) -> u64 {
        self.specs.iter().filter(|s| s.trainable).map(|s| s.numel()).sum()
    }
}

impl<T: Real> ParamSource<T> for ShapeSource {
    fn param(&mut self, name: &str, shape: &[usize], _init: Init, trainable: bool) -> Result<Param<T>> {
        self.specs.push(ParamSpec {
            name: name.to_string(),
            shape: shape.to_vec(),
            trainable,
        });
        Ok(Param::hollow(name, shape, trainable))
    }

    fn is_shape_only(&self) -> bool {
        true
    }
}

/// Reads parameters from a weights archive, optionally under a name prefix.
pub struct ArchiveSource<'a> {
    archive: &'a Archive,
    prefix: String,
}

impl<'a> ArchiveSource<'a> {
    pub fn new(archive: &'a Archive) -> Self {
        ArchiveSource {
            archive,
            prefix: String::new(),
        }
    }

    pub fn with_prefix(archive: &'a Archive, prefix: &str) -> Self {
        ArchiveSource {
            archive,
            prefix: prefix.to_string(),
        }
    }
}

impl<T: Real> ParamSource<T> for ArchiveSource<'_> {
    fn param(&mut self, name: &str, shape: &[usize], _init: Init, trainable: bool) -> Result<Param<T>> {
        let full = format!("{}{}", self.prefix, name);
        let (got, values) = self.archive.f64(&full)?;
        let numel: usize = shape.iter().product();
        let got_numel: usize = got.iter().product();
        // Archives may store e.g. [1, 1, 768] where we expect [768]; accept
        // any shape with the same element count only if the non-unit dims
        // agree.
        let squeeze = |s: &[usize]| s.iter().copied().filter(|&d| d != 1).collect::<Vec<_>>();
        if got_numel != numel || squeeze(&got) != squeeze(shape) {
            return Err(NnError::Shape {
                name: full,
                expected: shape.to_vec(),
                got,
            });
        }
        Param::new(name, shape, values.into_iter().map(T::lit).collect(), trainable)
    }
}

/// Anything that owns parameters.
pub trait Module<T: Real> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>));
}

impl<T: Real> Module<T> for Param<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        f(self)
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        f(self)
    }
}

impl<T: Real, M: Module<T>> Module<T> for Vec<M> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        for m in self {
            m.visit(f);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        for m in self {
            m.visit_mut(f);
        }
    }
}

impl<T: Real, M: Module<T>> Module<T> for Option<M> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        if let Some(m) = self {
            m.visit(f);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        if let Some(m) = self {
            m.visit_mut(f);
        }
    }
}

/// Whole-module operations built on [`Module::visit`].
pub trait ModuleExt<T: Real>: Module<T> {
    fn params(&self) -> Vec<&Param<T>> {
        let mut out = Vec::new();
        self.visit(&mut |p| out.push(p));
        out
    }

    fn param_count(&self, trainable_only: bool) -> u64 {
        let mut n = 0u64;
        self.visit(&mut |p| {
            if p.trainable() || !trainable_only {
                n += p.numel() as u64;
            }
        });
        n
    }

    fn zero_grad(&mut self) {
        self.visit_mut(&mut |p| p.zero_grad());
    }

    /// SHA-256 over names, shapes and little-endian values.
    fn digest(&self) -> String {
        self.digest_filtered(|_| true)
    }

    fn digest_filtered(&self, keep: impl Fn(&Param<T>) -> bool) -> String {
        let mut h = Sha256::new();
        let mut buf = Vec::new();
        self.visit(&mut |p| {
            if !keep(p) {
                return;
            }
            h.update(p.name().as_bytes());
            for d in p.shape() {
                h.update((*d as u64).to_le_bytes());
            }
            buf.clear();
            for v in &p.value {
                v.write_le(&mut buf);
            }
            h.update(&buf);
        });
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `self ← tau·online + (1 − tau)·self`, elementwise.
    fn soft_update_from(&mut self, online: &Self, tau: T) -> Result<()> {
        let src = online.params();
        pair_apply(self, &src, |dst, s| {
            let keep = T::one() - tau;
            for (d, &v) in dst.value.iter_mut().zip(&s.value) {
                *d = tau * v + keep * *d;
            }
        })
    }

    fn copy_from(&mut self, other: &Self) -> Result<()> {
        let src = other.params();
        pair_apply(self, &src, |dst, s| dst.value.copy_from_slice(&s.value))
    }

    /// `θ ← α·θ + (1 − α)·φ` for every trainable parameter; frozen ones
    /// are left alone.
    fn interpolate_towards(&mut self, fresh: &Self, alpha: T) -> Result<()> {
        let src = fresh.params();
        pair_apply(self, &src, |dst, s| {
            if !dst.trainable() {
                return;
            }
            let beta = T::one() - alpha;
            for (d, &f) in dst.value.iter_mut().zip(&s.value) {
                *d = alpha * *d + beta * f;
            }
        })
    }

    /// Appends every parameter to `archive` as f32 under `prefix`.
    fn export(&self, prefix: &str, archive: &mut Archive) -> Result<()> {
        let mut result = Ok(());
        self.visit(&mut |p| {
            if result.is_err() {
                return;
            }
            let v: Vec<f32> = p.value.iter().map(|x| x.as_f64() as f32).collect();
            result = archive
                .add_f32(&format!("{prefix}{}", p.name()), p.shape(), &v)
                .map_err(NnError::from);
        });
        result
    }

    /// Overwrites parameter values from `archive` entries under `prefix`.
    fn import(&mut self, prefix: &str, archive: &Archive) -> Result<()> {
        let mut result = Ok(());
        self.visit_mut(&mut |p| {
            if result.is_err() {
                return;
            }
            let name = format!("{prefix}{}", p.name());
            match archive.f64(&name) {
                Ok((shape, values)) if shape == p.shape() => {
                    for (d, v) in p.value.iter_mut().zip(values) {
                        *d = T::lit(v);
                    }
                }
                Ok((shape, _)) => {
                    result = Err(NnError::Shape {
                        name,
                        expected: p.shape().to_vec(),
                        got: shape,
                    })
                }
                Err(e) => result = Err(e.into()),
            }
        });
        result
    }
}

impl<T: Real, M: Module<T> + ?Sized> ModuleExt<T> for M {}

fn pair_apply<T: Real, M: Module<T> + ?Sized>(
    dst: &mut M,
    src: &[&Param<T>],
    mut f: impl FnMut(&mut Param<T>, &Param<T>),
) -> Result<()> {
    let mut count = 0usize;
    let mut err = None;
    dst.visit_mut(&mut |p| {
        if err.is_some() {
            return;
        }
        match src.get(count) {
            Some(s) if s.shape() == p.shape() && s.value.len() == p.value.len() => f(p, s),
            Some(s) => {
                err = Some(NnError::Shape {
                    name: p.name().to_string(),
                    expected: p.shape().to_vec(),
                    got: s.shape().to_vec(),
                })
            }
            None => err = Some(NnError::Structure("destination has more parameters".into())),
        }
        count += 1;
    });
    if let Some(e) = err {
        return Err(e);
    }
    if count != src.len() {
        return Err(NnError::Structure(format!(
            "source has {} parameters, destination {count}",
            src.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(name: &str, v: Vec<f64>, trainable: bool) -> Param<f64> {
        let n = v.len();
        Param::new(name, &[n], v, trainable).unwrap()
    }

    #[test]
    fn soft_update_extremes_and_scalar() {
        let online = vec![p("a", vec![1.0, 2.0], true)];
        let mut target = vec![p("a", vec![0.0, 0.0], true)];
        target.soft_update_from(&online, 0.0).unwrap();
        assert_eq!(target[0].value, vec![0.0, 0.0]);
        target.soft_update_from(&online, 0.01).unwrap();
        assert_eq!(target[0].value[0], 0.01);
        target.soft_update_from(&online, 1.0).unwrap();
        assert_eq!(target[0].value, online[0].value);
    }

    #[test]
    fn shape_mismatch_detected() {
        let online = vec![p("a", vec![1.0, 2.0, 3.0], true)];
        let mut target = vec![p("a", vec![0.0, 0.0], true)];
        assert!(target.soft_update_from(&online, 0.5).is_err());
        let mut longer = vec![p("a", vec![0.0; 3], true), p("b", vec![0.0], true)];
        assert!(longer.copy_from(&online).is_err());
    }

    #[test]
    fn interpolation_skips_frozen() {
        let fresh = vec![p("a", vec![0.0], true), p("b", vec![0.0], false)];
        let mut net = vec![p("a", vec![2.0], true), p("b", vec![2.0], false)];
        net.interpolate_towards(&fresh, 0.25).unwrap();
        assert_eq!(net[0].value, vec![0.5]);
        assert_eq!(net[1].value, vec![2.0]);
    }

    #[test]
    fn digest_tracks_values() {
        let a = vec![p("a", vec![1.0], true)];
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b[0].value[0] = 1.0 + 1e-12;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn export_import_round_trip() {
        let a = vec![p("w", vec![0.5, -1.5], true)];
        let mut archive = Archive::new();
        a.export("net.", &mut archive).unwrap();
        let mut b = vec![p("w", vec![0.0, 0.0], true)];
        b.import("net.", &archive).unwrap();
        assert_eq!(a, b);
        assert!(b.import("other.", &archive).is_err());
    }

    #[test]
    fn shape_source_counts_without_allocating() {
        let mut s = ShapeSource::new();
        let w: Param<f32> = s.param("w", &[1000, 1000], Init::Zeros, true).unwrap();
        let _f: Param<f32> = s.param("f", &[10], Init::Zeros, false).unwrap();
        assert!(w.is_hollow());
        assert_eq!(s.trainable_count(), 1_000_000);
        assert_eq!(s.specs().len(), 2);
    }
}
