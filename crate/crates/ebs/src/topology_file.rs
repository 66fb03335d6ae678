//! Edge-list topology files.

use std::path::Path;

use ebs_core::topology::parse_edge_list;
use ebs_core::Topology;

use crate::error::{Error, Result};

/// Reads an edge list: UTF-8, one `u v` pair per line, `#` comment lines.
/// With `declared_nodes` the node set is `0..n` and isolated ids are kept.
pub fn load_topology(path: &Path, directed: bool, declared_nodes: Option<u32>) -> Result<Topology> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, directed, declared_nodes).map_err(|source| Error::Topology {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `topology` as an edge list that [`load_topology`] reads back.
pub fn write_edge_list(topology: &Topology, mut w: impl std::io::Write) -> std::io::Result<()> {
    writeln!(w, "# {} nodes, {} edges", topology.len(), topology.edge_count())?;
    for u in topology.node_ids() {
        for v in topology.listeners(u) {
            if topology.is_directed() || u < v {
                writeln!(w, "{} {}", u.0, v.0)?;
            }
        }
    }
    Ok(())
}
