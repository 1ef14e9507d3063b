use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::symkernel::{Coordinate, Expr};

/// Failure to produce a vector-field coefficient.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("vector field {field} is not defined at coordinate {coord}")]
    Undefined { field: String, coord: String },
}

/// Coefficient rule of an intensional field.
pub type CoeffRule = dyn Fn(&Coordinate) -> Result<Expr, FieldError> + Send + Sync;

enum FieldKind {
    /// Finite support; zero elsewhere.
    Finite(BTreeMap<Coordinate, Expr>),
    /// Known only on the listed coordinates; an error elsewhere.
    Partial(BTreeMap<Coordinate, Expr>),
    Rule(Box<CoeffRule>),
    Combination(Vec<(Expr, VectorField)>),
    Bracket(VectorField, VectorField),
}

struct FieldInner {
    name: String,
    kind: FieldKind,
    in_h: bool,
    cache: Mutex<BTreeMap<Coordinate, Expr>>,
}

/// A derivation `Σ z_c ∂/∂c`, given by its coefficient at every coordinate.
#[derive(Clone)]
pub struct VectorField(Arc<FieldInner>);

impl VectorField {
    fn build(name: impl Into<String>, kind: FieldKind, in_h: bool) -> Self {
        VectorField(Arc::new(FieldInner {
            name: name.into(),
            kind,
            in_h,
            cache: Mutex::new(BTreeMap::new()),
        }))
    }

    pub fn zero() -> Self {
        VectorField::finite("0", BTreeMap::new())
    }

    /// A field with finitely many nonzero coefficients.
    pub fn finite(name: impl Into<String>, coeffs: BTreeMap<Coordinate, Expr>) -> Self {
        let coeffs = coeffs.into_iter().filter(|(_, e)| !e.is_zero()).collect();
        VectorField::build(name, FieldKind::Finite(coeffs), false)
    }

    /// The coordinate field `∂/∂c`.
    pub fn partial(c: Coordinate) -> Self {
        let name = format!("d/d{c}");
        let mut m = BTreeMap::new();
        m.insert(c, Expr::one());
        VectorField::finite(name, m)
    }

    /// A field known only on the given coordinates.
    pub fn partial_field(name: impl Into<String>, coeffs: BTreeMap<Coordinate, Expr>) -> Self {
        VectorField::build(name, FieldKind::Partial(coeffs), false)
    }

    /// An intensional field given by a coefficient rule.
    pub fn rule<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Coordinate) -> Result<Expr, FieldError> + Send + Sync + 'static,
    {
        VectorField::build(name, FieldKind::Rule(Box::new(f)), false)
    }

    /// `Σ c_i X_i`.
    pub fn combination(name: impl Into<String>, terms: Vec<(Expr, VectorField)>) -> Self {
        let in_h = terms.iter().all(|(_, f)| f.in_h());
        VectorField::build(name, FieldKind::Combination(terms), in_h)
    }

    /// The same field with the declared "annihilates Ω" flag set.
    pub fn declared_in_h(self) -> Self {
        let name = self.0.name.clone();
        VectorField::build(name, FieldKind::Combination(vec![(Expr::one(), self)]), true)
    }

    pub fn in_h(&self) -> bool {
        self.0.in_h
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    /// Coefficient `Z(c)` at a coordinate.
    pub fn coeff(&self, c: &Coordinate) -> Result<Expr, FieldError> {
        if let Some(e) = self.0.cache.lock().expect("cache lock").get(c) {
            return Ok(e.clone());
        }
        let e = match &self.0.kind {
            FieldKind::Finite(m) => m.get(c).cloned().unwrap_or_else(Expr::zero),
            FieldKind::Partial(m) => m.get(c).cloned().ok_or_else(|| FieldError::Undefined {
                field: self.0.name.clone(),
                coord: c.to_string(),
            })?,
            FieldKind::Rule(f) => f(c)?,
            FieldKind::Combination(terms) => {
                let mut acc = Expr::zero();
                for (k, f) in terms {
                    acc = acc + k * &f.coeff(c)?;
                }
                acc
            }
            FieldKind::Bracket(x, y) => {
                let yc = y.coeff(c)?;
                let xc = x.coeff(c)?;
                x.apply(&yc)? - y.apply(&xc)?
            }
        };
        self.0.cache.lock().expect("cache lock").insert(c.clone(), e.clone());
        Ok(e)
    }

    /// The derivative `Z(f) = Σ Z(c)·∂f/∂c`.
    pub fn apply(&self, f: &Expr) -> Result<Expr, FieldError> {
        let mut acc = Expr::zero();
        for c in f.coordinates() {
            let d = f.diff(&c);
            if d.is_zero() {
                continue;
            }
            let z = self.coeff(&c)?;
            if !z.is_zero() {
                acc = acc + z * d;
            }
        }
        Ok(acc)
    }

    /// The lazily evaluated bracket `[X, Y]`.
    pub fn bracket(x: &VectorField, y: &VectorField) -> VectorField {
        let name = format!("[{}, {}]", x.name(), y.name());
        let in_h = x.in_h() && y.in_h();
        VectorField::build(name, FieldKind::Bracket(x.clone(), y.clone()), in_h)
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField({})", self.0.name)
    }
}
