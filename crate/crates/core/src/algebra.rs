//! Finite-dimensional C*-algebras in canonical block form.
//!
//! An [`AlgebraSpec`] describes `⊕_i M_{n_i} ⊗ I_{m_i}` acting on the ordered
//! direct sum of blocks `C^{n_i} ⊗ C^{m_i}`. The [`Layout`] fixes which tensor
//! factor of a block carries the matrix algebra, so that an algebra and its
//! commutant are described on one and the same basis:
//!
//! * [`Layout::AlgebraMajor`]: block `i` is `C^{n_i} ⊗ C^{m_i}` and the algebra
//!   acts as `X ⊗ I_{m_i}`. Local index `a * m_i + c`.
//! * [`Layout::MultiplicityMajor`]: block `i` is `C^{m_i} ⊗ C^{n_i}` and the
//!   algebra acts as `I_{m_i} ⊗ X`. Local index `c * n_i + a`.
//!
//! The commutant swaps `(n_i, m_i)` and flips the layout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Operator, C64, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    #[default]
    AlgebraMajor,
    MultiplicityMajor,
}

impl Layout {
    pub fn flipped(self) -> Layout {
        match self {
            Layout::AlgebraMajor => Layout::MultiplicityMajor,
            Layout::MultiplicityMajor => Layout::AlgebraMajor,
        }
    }
}

/// One simple summand `M_n ⊗ I_m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Block {
    pub n: usize,
    pub m: usize,
}

impl Serialize for Block {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.n, self.m].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Block {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [n, m] = <[usize; 2]>::deserialize(d)?;
        Ok(Block { n, m })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct AlgebraSpec {
    blocks: Vec<Block>,
    #[serde(default)]
    layout: Layout,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AlgebraSpecWire {
    blocks: Vec<Block>,
    #[serde(default)]
    layout: Layout,
}

impl<'de> Deserialize<'de> for AlgebraSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = AlgebraSpecWire::deserialize(d)?;
        let blocks = w.blocks.into_iter().map(|b| (b.n, b.m)).collect::<Vec<_>>();
        AlgebraSpec::new(&blocks, w.layout).map_err(serde::de::Error::custom)
    }
}

impl AlgebraSpec {
    pub fn new(blocks: &[(usize, usize)], layout: Layout) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidAlgebra("no blocks".into()));
        }
        if let Some((n, m)) = blocks.iter().find(|(n, m)| *n == 0 || *m == 0) {
            return Err(Error::InvalidAlgebra(format!(
                "block ({n}, {m}) has a zero dimension"
            )));
        }
        Ok(AlgebraSpec {
            blocks: blocks.iter().map(|&(n, m)| Block { n, m }).collect(),
            layout,
        })
    }

    /// Blocks in the default [`Layout::AlgebraMajor`] layout.
    pub fn from_blocks(blocks: &[(usize, usize)]) -> Result<Self> {
        Self::new(blocks, Layout::AlgebraMajor)
    }

    /// All of `B(C^d)`.
    pub fn full(d: usize) -> Self {
        Self::from_blocks(&[(d, 1)]).expect("d >= 1")
    }

    /// `C·I_d`.
    pub fn scalars(d: usize) -> Self {
        Self::from_blocks(&[(1, d)]).expect("d >= 1")
    }

    /// Diagonal matrices in `M_k`.
    pub fn diagonal(k: usize) -> Self {
        Self::from_blocks(&vec![(1, 1); k]).expect("k >= 1")
    }

    /// `M_n ⊗ I_{d_b}` on `C^n ⊗ C^{d_b}`.
    pub fn tensor_left(n: usize, d_b: usize) -> Self {
        Self::new(&[(n, d_b)], Layout::AlgebraMajor).expect("positive dims")
    }

    /// `I_{d_a} ⊗ M_n` on `C^{d_a} ⊗ C^n`.
    pub fn tensor_right(d_a: usize, n: usize) -> Self {
        Self::new(&[(n, d_a)], Layout::MultiplicityMajor).expect("positive dims")
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Dimension of the Hilbert space, `Σ n_i m_i`.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.n * b.m).sum()
    }

    /// Dimension of the algebra as a vector space, `Σ n_i²`.
    pub fn algebra_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.n * b.n).sum()
    }

    pub fn is_factor(&self) -> bool {
        self.blocks.len() == 1
    }

    pub fn offset(&self, block: usize) -> usize {
        self.blocks[..block].iter().map(|b| b.n * b.m).sum()
    }

    /// Global basis index of `|a⟩ ⊗ |c⟩` in block `block`, where `a` indexes
    /// the algebra factor and `c` the multiplicity factor.
    pub fn index(&self, block: usize, a: usize, c: usize) -> usize {
        let Block { n, m } = self.blocks[block];
        debug_assert!(a < n && c < m);
        self.offset(block)
            + match self.layout {
                Layout::AlgebraMajor => a * m + c,
                Layout::MultiplicityMajor => c * n + a,
            }
    }

    /// Block-wise swap `(n, m) ↔ (m, n)` on the same Hilbert-space basis.
    pub fn commutant(&self) -> AlgebraSpec {
        AlgebraSpec {
            blocks: self
                .blocks
                .iter()
                .map(|b| Block { n: b.m, m: b.n })
                .collect(),
            layout: self.layout.flipped(),
        }
    }

    fn check_dim(&self, op: &Operator) -> Result<()> {
        if op.dim() != self.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.total_dim(),
                found: op.dim(),
            });
        }
        Ok(())
    }

    /// Embeds `X ∈ M_{n_i}` as `X ⊗ I_{m_i}` in block `block`, zero elsewhere.
    pub fn embed(&self, block: usize, x: &Operator) -> Result<Operator> {
        let Block { n, m } = self.blocks[block];
        if x.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.dim(),
            });
        }
        let mut out = Operator::zeros(self.total_dim());
        for a in 0..n {
            for b in 0..n {
                let v = x.get(a, b);
                if v == ZERO {
                    continue;
                }
                for c in 0..m {
                    out.set(self.index(block, a, c), self.index(block, b, c), v);
                }
            }
        }
        Ok(out)
    }

    /// `⊕_i X_i ⊗ I_{m_i}`.
    pub fn embed_blocks(&self, xs: &[Operator]) -> Result<Operator> {
        if xs.len() != self.num_blocks() {
            return Err(Error::DimensionMismatch {
                expected: self.num_blocks(),
                found: xs.len(),
            });
        }
        let mut out = Operator::zeros(self.total_dim());
        for (i, x) in xs.iter().enumerate() {
            out += &self.embed(i, x)?;
        }
        Ok(out)
    }

    /// Per block, the partial trace over the multiplicity factor of the
    /// diagonal block: `(Y_i)_{ab} = Σ_c B[(i,a,c), (i,b,c)]`.
    pub fn reduce_blocks(&self, op: &Operator) -> Result<Vec<Operator>> {
        self.check_dim(op)?;
        Ok(self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, &Block { n, m })| {
                Operator::from_fn(n, |a, b| {
                    (0..m)
                        .map(|c| op.get(self.index(i, a, c), self.index(i, b, c)))
                        .sum::<C64>()
                })
            })
            .collect())
    }

    /// Trace-orthogonal projection onto the algebra.
    pub fn conditional_expectation(&self, op: &Operator) -> Result<Operator> {
        let reduced = self.reduce_blocks(op)?;
        let scaled: Vec<Operator> = reduced
            .iter()
            .zip(&self.blocks)
            .map(|(y, b)| y.scale(1.0 / b.m as f64))
            .collect();
        self.embed_blocks(&scaled)
    }

    /// `‖B − E(B)‖_max`: zero exactly for algebra elements.
    pub fn membership_residual(&self, op: &Operator) -> Result<f64> {
        Ok((op - &self.conditional_expectation(op)?).max_abs())
    }

    pub fn contains(&self, op: &Operator, tol: f64) -> bool {
        self.membership_residual(op)
            .map(|r| r <= tol * op.max_abs().max(1.0))
            .unwrap_or(false)
    }

    /// Matrix-unit basis `E^{(i)}_{ab} ⊗ I_{m_i}`, ordered by block, row, column.
    pub fn basis(&self) -> Vec<Operator> {
        let mut out = Vec::with_capacity(self.algebra_dim());
        for (i, b) in self.blocks.iter().enumerate() {
            for r in 0..b.n {
                for c in 0..b.n {
                    out.push(
                        self.embed(i, &Operator::unit(b.n, r, c))
                            .expect("unit has block dimension"),
                    );
                }
            }
        }
        out
    }

    /// Projection onto block `block` (a central element).
    pub fn central_projection(&self, block: usize) -> Operator {
        self.embed(block, &Operator::identity(self.blocks[block].n))
            .expect("identity has block dimension")
    }
}
