"""Bipartite Tanner-graph structure shared by the BP and GNN decoders.

Edges carry the single canonical ordering used for every per-edge message
array in the package: sorted lexicographically by (check node, variable
node).  The precomputed index arrays make gather/scatter between node and
edge arrays pure fancy-indexing / reduceat operations.
"""

import numpy as np

__all__ = ["TannerGraph", "from_parity_check"]


class TannerGraph:
    """Index structure of a parity-check matrix's bipartite graph.

    Attributes
    ----------
    num_vn, num_cn : int
    vn_of_edge, cn_of_edge : ndarray
        Endpoint of each edge, in canonical (cn, vn) order.
    cn_offsets : ndarray
        Start of each CN's contiguous edge segment (edges are CN-sorted).
    vn_order, vn_offsets : ndarray
        Permutation putting edges in (vn, cn) order and the start of each
        VN's segment within it.
    vn_degree, cn_degree : ndarray
    """

    def __init__(self, num_vn, num_cn, vn_of_edge, cn_of_edge):
        self.num_vn = int(num_vn)
        self.num_cn = int(num_cn)
        order = np.lexsort((vn_of_edge, cn_of_edge))
        self.vn_of_edge = np.asarray(vn_of_edge, dtype=np.int64)[order]
        self.cn_of_edge = np.asarray(cn_of_edge, dtype=np.int64)[order]
        self.num_edges = self.vn_of_edge.size
        self.vn_degree = np.bincount(self.vn_of_edge, minlength=self.num_vn)
        self.cn_degree = np.bincount(self.cn_of_edge, minlength=self.num_cn)
        if (self.vn_degree == 0).any():
            raise ValueError("every variable node needs at least one edge")
        if (self.cn_degree == 0).any():
            raise ValueError("every check node needs at least one edge")
        self.cn_offsets = np.searchsorted(self.cn_of_edge, np.arange(self.num_cn))
        self.vn_order = np.lexsort((self.cn_of_edge, self.vn_of_edge))
        self.vn_offsets = np.searchsorted(
            self.vn_of_edge[self.vn_order], np.arange(self.num_vn)
        )

    @property
    def edges(self):
        """Edge list as (vn, cn) pairs in canonical order."""
        return list(zip(self.vn_of_edge.tolist(), self.cn_of_edge.tolist()))

    def vn_adjacency(self, v):
        """Edge indices incident to variable node v."""
        return self.vn_order[self.vn_offsets[v] : self.vn_offsets[v] + self.vn_degree[v]]

    def cn_adjacency(self, c):
        """Edge indices incident to check node c."""
        return np.arange(self.cn_offsets[c], self.cn_offsets[c] + self.cn_degree[c])

    def sum_per_vn(self, per_edge, axis=-1):
        """Sum a per-edge array over each VN's incident edges along ``axis``."""
        gathered = np.take(per_edge, self.vn_order, axis=axis)
        return np.add.reduceat(gathered, self.vn_offsets, axis=axis)

    def sum_per_cn(self, per_edge, axis=-1):
        """Sum a per-edge array over each CN's incident edges along ``axis``."""
        return np.add.reduceat(per_edge, self.cn_offsets, axis=axis)

    def __repr__(self):
        return (
            f"TannerGraph({self.num_vn} VNs, {self.num_cn} CNs, "
            f"{self.num_edges} edges)"
        )


def from_parity_check(H):
    """Build the TannerGraph of a ParityCheckMatrix."""
    vn, cn = [], []
    for r, idx in enumerate(H.row_index_lists):
        for c in idx:
            vn.append(c)
            cn.append(r)
    return TannerGraph(H.cols, H.rows, np.array(vn), np.array(cn))
