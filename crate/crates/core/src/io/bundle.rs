use std::path::Path;

use super::binary::{ByteReader, ByteWriter};
use super::{read_file, write_file};
use crate::error::{Error, Result};
use crate::graph::{Hypergraph, NodeOrigin, PartitionPlan};
use crate::numeric::SparseMatrix;

pub const BUNDLE_MAGIC: &[u8; 4] = b"HGGB";
pub const BUNDLE_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct BundlePartition {
    pub index: usize,
    pub origins: Vec<NodeOrigin>,
    pub spatial: SparseMatrix,
    pub knn: Option<SparseMatrix>,
    pub hypergraph: Option<Hypergraph>,
}

/// A partition plan with the graphs of some or all of its partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBundle {
    pub plan: PartitionPlan,
    pub partitions: Vec<BundlePartition>,
}

/// HGGB layout, all integers little-endian `u64` unless noted:
/// magic, version `u16`; plan (`alpha xi mu tau gamma`, assignment count
/// and entries); partition count; per partition its index, origin count
/// and `(image, superpixel)` `u32` pairs, the spatial adjacency in CSR
/// form, a flag byte and CSR k-NN adjacency, a flag byte and the
/// hypergraph incidence in CSR form followed by its weight list.
pub fn encode_bundle(b: &GraphBundle) -> Vec<u8> {
    let mut w = ByteWriter::with_header(BUNDLE_MAGIC, BUNDLE_VERSION);
    let p = &b.plan;
    for v in [p.alpha, p.xi, p.mu, p.tau, p.gamma, p.assignment.len()] {
        w.usize(v);
    }
    for &a in &p.assignment {
        w.usize(a);
    }
    w.usize(b.partitions.len());
    for part in &b.partitions {
        w.usize(part.index);
        w.usize(part.origins.len());
        for o in &part.origins {
            w.u32(o.image);
            w.u32(o.superpixel);
        }
        w.sparse(&part.spatial);
        w.bool(part.knn.is_some());
        if let Some(k) = &part.knn {
            w.sparse(k);
        }
        w.bool(part.hypergraph.is_some());
        if let Some(h) = &part.hypergraph {
            w.sparse(&h.incidence);
            w.usize(h.edge_weights.len());
            for &x in &h.edge_weights {
                w.f64(x);
            }
        }
    }
    w.into_inner()
}

pub fn decode_bundle(bytes: &[u8]) -> Result<GraphBundle> {
    let mut r = ByteReader::with_header(bytes, BUNDLE_MAGIC, BUNDLE_VERSION)?;
    let (alpha, xi, mu, tau, gamma) = (r.usize()?, r.usize()?, r.usize()?, r.usize()?, r.usize()?);
    let n = r.len(8)?;
    let assignment = (0..n).map(|_| r.usize()).collect::<Result<Vec<_>>>()?;
    if assignment.len() != alpha || assignment.iter().any(|&a| a >= tau) {
        return Err(Error::Malformed("partition assignment inconsistent with plan".into()));
    }
    let plan = PartitionPlan {
        alpha,
        xi,
        mu,
        tau,
        gamma,
        assignment,
    };
    let count = r.len(8)?;
    let mut partitions = Vec::with_capacity(count);
    for _ in 0..count {
        let index = r.usize()?;
        let n = r.len(8)?;
        let origins = (0..n)
            .map(|_| {
                Ok(NodeOrigin {
                    image: r.u32()?,
                    superpixel: r.u32()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let spatial = r.sparse()?;
        if spatial.shape() != (n, n) {
            return Err(Error::Malformed(format!("partition {index}: adjacency size differs from node count")));
        }
        let knn = if r.bool()? { Some(r.sparse()?) } else { None };
        if knn.as_ref().is_some_and(|k| k.shape() != (n, n)) {
            return Err(Error::Malformed(format!("partition {index}: k-NN size differs from node count")));
        }
        let hypergraph = if r.bool()? {
            let h = r.sparse()?;
            let m = r.len(8)?;
            let weights = (0..m).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            if h.rows() != n {
                return Err(Error::Malformed(format!("partition {index}: incidence rows differ from node count")));
            }
            Some(Hypergraph::new(h, weights)?)
        } else {
            None
        };
        partitions.push(BundlePartition {
            index,
            origins,
            spatial,
            knn,
            hypergraph,
        });
    }
    r.finish()?;
    Ok(GraphBundle { plan, partitions })
}

pub fn save_bundle(b: &GraphBundle, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_bundle(b))
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<GraphBundle> {
    decode_bundle(&read_file(path.as_ref())?)
}
