//! The interface shared by every ambient group a tuple can live in.

use std::collections::BTreeSet;
use std::fmt::Debug;
use std::hash::Hash;

use crate::bttree::{fixed_set_in_ball, VertexDisplay};
use crate::error::{Error, Result};
use crate::localfield::LocalFieldElement;
use crate::psl2::{IsometryClass, ProjectiveMatrix};
use crate::treeaut::TreePortrait;

/// `compose(a, b)` is the product `a·b`; for tree automorphisms this is
/// `a ∘ b`, so `b` acts first.
pub trait GroupElement: Clone + Debug + Hash + Send + Sync {
    fn compose(&self, other: &Self) -> Result<Self>;
    fn inverse(&self) -> Result<Self>;
    /// Equality at the tracked precision (or depth).
    fn same_as(&self, other: &Self) -> bool;

    fn classify(&self) -> Result<IsometryClass> {
        Err(Error::NotClassifiable)
    }

    fn pow_signed(&self, sign: i8) -> Result<Self> {
        if sign < 0 {
            self.inverse()
        } else {
            Ok(self.clone())
        }
    }
}

/// Elements acting on a tree, with enough access to the action to compare
/// fixed sets.
pub trait TreeIsometry: GroupElement {
    /// Textual keys of the vertices within `radius` of the base vertex that
    /// the element fixes.
    fn fixed_vertex_keys(&self, radius: u32) -> Result<BTreeSet<String>>;
}

/// Matrix groups in which the trace of a commutator is defined.
pub trait CommutatorTrace: GroupElement {
    type Trace: Clone + Debug + PartialEq;
    /// `tr(a b a⁻¹ b⁻¹)`, computed from determinant-one lifts so that the
    /// sign ambiguity of the projective group cancels.
    fn commutator_trace(a: &Self, b: &Self) -> Result<Self::Trace>;
    fn trace_eq(x: &Self::Trace, y: &Self::Trace) -> bool {
        x == y
    }
}

impl GroupElement for ProjectiveMatrix {
    fn compose(&self, other: &Self) -> Result<Self> {
        ProjectiveMatrix::compose(self, other)
    }

    fn inverse(&self) -> Result<Self> {
        Ok(self.invert())
    }

    fn same_as(&self, other: &Self) -> bool {
        self.eq_at_precision(other)
    }

    fn classify(&self) -> Result<IsometryClass> {
        ProjectiveMatrix::classify(self)
    }
}

impl TreeIsometry for ProjectiveMatrix {
    fn fixed_vertex_keys(&self, radius: u32) -> Result<BTreeSet<String>> {
        let spec = self.spec();
        Ok(fixed_set_in_ball(self, radius)?
            .iter()
            .map(|v| VertexDisplay(v, spec).to_string())
            .collect())
    }
}

impl CommutatorTrace for ProjectiveMatrix {
    type Trace = LocalFieldElement;

    fn commutator_trace(a: &Self, b: &Self) -> Result<LocalFieldElement> {
        let (x, y) = (a.lift(), b.lift());
        let c = x.mul(y).mul(&x.adjugate()).mul(&y.adjugate());
        Ok(c.trace())
    }

    fn trace_eq(x: &LocalFieldElement, y: &LocalFieldElement) -> bool {
        x.eq_at_precision(y)
    }
}

impl GroupElement for TreePortrait {
    fn compose(&self, other: &Self) -> Result<Self> {
        TreePortrait::compose(self, other)
    }

    fn inverse(&self) -> Result<Self> {
        self.invert()
    }

    fn same_as(&self, other: &Self) -> bool {
        let d = self.depth().min(other.depth());
        self.restrict(d) == other.restrict(d)
    }

    fn classify(&self) -> Result<IsometryClass> {
        TreePortrait::classify(self)
    }
}

impl TreeIsometry for TreePortrait {
    fn fixed_vertex_keys(&self, radius: u32) -> Result<BTreeSet<String>> {
        let r = radius.min(self.depth());
        Ok(self.fixed_set_in_ball(r)?.iter().map(|w| w.to_string()).collect())
    }
}
