//! Partitions of subsystems and weighted sums of positive product terms.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, SepError};
use crate::qmat::{join_index, split_index, HermitianMatrix, ProductState};

/// A k-partition of the subsystem indices `0..m` into disjoint blocks.
/// Canonical form: each block sorted ascending, blocks ordered by first element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSpec {
    blocks: Vec<Vec<usize>>,
    m: usize,
}

impl PartitionSpec {
    pub fn new(blocks: Vec<Vec<usize>>, m: usize) -> Result<Self> {
        if blocks.is_empty() || blocks.iter().any(|b| b.is_empty()) {
            return Err(SepError::InvalidPartition("blocks must be nonempty".into()));
        }
        let mut seen = vec![false; m];
        for b in &blocks {
            for &q in b {
                if q >= m {
                    return Err(SepError::InvalidPartition(format!(
                        "index {} out of range for {} subsystems",
                        q, m
                    )));
                }
                if seen[q] {
                    return Err(SepError::InvalidPartition(format!("index {} repeated", q)));
                }
                seen[q] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(SepError::InvalidPartition("blocks do not cover all subsystems".into()));
        }
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        blocks.sort_by_key(|b| b[0]);
        Ok(Self { blocks, m })
    }

    /// The finest partition: every subsystem its own block.
    pub fn singletons(m: usize) -> Self {
        Self {
            blocks: (0..m).map(|q| vec![q]).collect(),
            m,
        }
    }

    /// All bipartitions of `0..m` into two nonempty blocks.
    pub fn bipartitions(m: usize) -> Vec<Self> {
        let mut out = Vec::new();
        // enumerate subsets containing subsystem 0 to avoid duplicates
        for sub in 0u64..(1 << (m - 1)) {
            let mask = sub << 1 | 1;
            let a: Vec<usize> = (0..m).filter(|&q| mask >> q & 1 == 1).collect();
            let b: Vec<usize> = (0..m).filter(|&q| mask >> q & 1 == 0).collect();
            if b.is_empty() {
                continue;
            }
            out.push(Self::new(vec![a, b], m).expect("valid by construction"));
        }
        out
    }

    /// All partitions of `0..m` into exactly `k` nonempty blocks.
    pub fn k_partitions(m: usize, k: usize) -> Vec<Self> {
        let mut out = Vec::new();
        let mut assignment = vec![0usize; m];
        fn recurse(q: usize, m: usize, k: usize, used: usize, assignment: &mut Vec<usize>, out: &mut Vec<PartitionSpec>) {
            if q == m {
                if used == k {
                    let mut blocks = vec![Vec::new(); k];
                    for (idx, &b) in assignment.iter().enumerate() {
                        blocks[b].push(idx);
                    }
                    out.push(PartitionSpec::new(blocks, m).expect("valid by construction"));
                }
                return;
            }
            // restricted growth: block labels appear in first-use order
            for b in 0..=used.min(k - 1) {
                assignment[q] = b;
                let next_used = used.max(b + 1);
                recurse(q + 1, m, k, next_used, assignment, out);
            }
        }
        recurse(0, m, k, 0, &mut assignment, &mut out);
        out
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn subsystem_count(&self) -> usize {
        self.m
    }

    /// Dimension of each block, given the subsystem dimensions.
    pub fn block_dims(&self, dims: &[usize]) -> Vec<usize> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|&q| dims[q]).product())
            .collect()
    }
}

/// Embeds a product over partition blocks into the full system ordering.
/// Factor `t` acts on block `t` of the partition.
pub fn assemble_embedded(
    product: &ProductState,
    partition: &PartitionSpec,
    dims: &[usize],
) -> Result<HermitianMatrix> {
    let blocks = partition.blocks();
    if product.factors().len() != blocks.len() {
        return Err(SepError::InvalidPartition(format!(
            "{} factors for {} blocks",
            product.factors().len(),
            blocks.len()
        )));
    }
    let block_dims = partition.block_dims(dims);
    for (f, &bd) in product.factors().iter().zip(block_dims.iter()) {
        if f.dim() != bd {
            return Err(SepError::DimensionMismatch(format!(
                "factor dim {} does not match block dim {}",
                f.dim(),
                bd
            )));
        }
    }
    // fast path: blocks in order and contiguous reduce to a plain kron
    let flat: Vec<usize> = blocks.iter().flatten().copied().collect();
    if flat.iter().enumerate().all(|(i, &q)| i == q) {
        return Ok(product.assembled().with_dims(dims.to_vec())?);
    }
    let d: usize = dims.iter().product();
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        let si = split_index(i, dims);
        for j in 0..d {
            let sj = split_index(j, dims);
            let mut val = Complex64::new(1.0, 0.0);
            for (t, block) in blocks.iter().enumerate() {
                let bd: Vec<usize> = block.iter().map(|&q| dims[q]).collect();
                let bi: Vec<usize> = block.iter().map(|&q| si[q]).collect();
                let bj: Vec<usize> = block.iter().map(|&q| sj[q]).collect();
                val *= product.factors()[t].entry(join_index(&bi, &bd), join_index(&bj, &bd));
            }
            out[(i, j)] = val;
        }
    }
    HermitianMatrix::symmetrized(out, Some(dims.to_vec()))
}

#[derive(Debug, Clone)]
pub struct DecompositionTerm {
    pub weight: f64,
    pub product: ProductState,
    pub partition: PartitionSpec,
}

/// Weighted sum of positive product terms, each product across the blocks of
/// its own partition. All partitions share the same block count k.
#[derive(Debug, Clone)]
pub struct SeparableDecomposition {
    terms: Vec<DecompositionTerm>,
    dims: Vec<usize>,
    assembled: HermitianMatrix,
}

impl SeparableDecomposition {
    pub fn new(terms: Vec<DecompositionTerm>, dims: Vec<usize>) -> Result<Self> {
        if terms.is_empty() {
            return Err(SepError::EmptyDecomposition);
        }
        let k = terms[0].partition.block_count();
        for t in &terms {
            if t.weight < 0.0 {
                return Err(SepError::InvalidParameter(format!(
                    "negative weight {}",
                    t.weight
                )));
            }
            if t.partition.block_count() != k {
                return Err(SepError::InvalidPartition(
                    "terms have differing block counts".into(),
                ));
            }
            if t.partition.subsystem_count() != dims.len() {
                return Err(SepError::InvalidPartition(
                    "partition subsystem count does not match dims".into(),
                ));
            }
        }
        let d: usize = dims.iter().product();
        let mut acc = DMatrix::<Complex64>::zeros(d, d);
        for t in &terms {
            let embedded = assemble_embedded(&t.product, &t.partition, &dims)?;
            acc += embedded.raw().scale(t.weight);
        }
        let assembled = HermitianMatrix::symmetrized(acc, Some(dims.clone()))?;
        Ok(Self {
            terms,
            dims,
            assembled,
        })
    }

    /// Convenience constructor for fully-product terms (singleton blocks).
    pub fn from_products(products: Vec<(f64, ProductState)>, dims: Vec<usize>) -> Result<Self> {
        let m = dims.len();
        let terms = products
            .into_iter()
            .map(|(weight, product)| DecompositionTerm {
                weight,
                product,
                partition: PartitionSpec::singletons(m),
            })
            .collect();
        Self::new(terms, dims)
    }

    pub fn terms(&self) -> &[DecompositionTerm] {
        &self.terms
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn block_count(&self) -> usize {
        self.terms[0].partition.block_count()
    }

    pub fn assembled(&self) -> &HermitianMatrix {
        &self.assembled
    }

    /// The i-th term as a full-system matrix, weight included.
    pub fn term_matrix(&self, i: usize) -> Result<HermitianMatrix> {
        let t = &self.terms[i];
        Ok(assemble_embedded(&t.product, &t.partition, &self.dims)?.scaled(t.weight))
    }
}
