use std::sync::OnceLock;

use crate::error::{Error, Result};

static INSTALLED: OnceLock<Caps> = OnceLock::new();

/// Hard resource limits for polytope computations.
///
/// Vertex counts grow exponentially with dimension, so every conversion
/// checks these limits and reports a [`Error::Resource`] instead of
/// truncating.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    pub max_dim: usize,
    pub max_vertices: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_dim: 6,
            max_vertices: 4096,
        }
    }
}

impl Caps {
    /// Process-wide limits. Fixed at the first call; later calls to
    /// [`Caps::install`] are rejected.
    pub fn global() -> Caps {
        *INSTALLED.get_or_init(Caps::default)
    }

    /// Install process-wide limits. Must happen before any computation reads
    /// them; returns `false` if limits were already fixed to a different value.
    pub fn install(caps: Caps) -> bool {
        INSTALLED.get_or_init(|| caps) == &caps
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if dim > self.max_dim {
            return Err(Error::Resource {
                what: "dimension",
                value: dim,
                limit: self.max_dim,
            });
        }
        Ok(())
    }

    pub fn check_vertices(&self, count: usize) -> Result<()> {
        if count > self.max_vertices {
            return Err(Error::Resource {
                what: "vertex count",
                value: count,
                limit: self.max_vertices,
            });
        }
        Ok(())
    }

    /// Intermediate ray lists in the double description may legitimately
    /// exceed the final vertex count; they get four times the headroom.
    pub(crate) fn check_intermediate(&self, count: usize) -> Result<()> {
        let limit = self.max_vertices.saturating_mul(4);
        if count > limit {
            return Err(Error::Resource {
                what: "intermediate ray count",
                value: count,
                limit,
            });
        }
        Ok(())
    }
}
