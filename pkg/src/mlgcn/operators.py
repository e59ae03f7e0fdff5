"""Stratified graph construction and normalized propagation operators.

Two composite views of one multi-label graph:

* node-node-label: the original n x n structure with label nodes appended as
  attributes of their member nodes (nodes-first layout);
* label-label-node: labels linked by co-occurrence with member nodes
  appended as attributes (labels-first layout).

Each view yields a truncated symmetric-normalized operator over the full
composite index space plus an intra-block operator over the primary block
alone (with its own self-loops and degrees).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import MultiLabelGraph
from .matrices import SparseMatrix

__all__ = [
    "CompositeAdjacency", "NormalizedOperator", "GraphOperators",
    "build_label_cooccurrence", "build_node_node_label_adj",
    "build_label_label_node_adj", "normalize_symmetric", "truncate_rows",
    "build_operators",
]


@dataclass(frozen=True)
class CompositeAdjacency:
    """Symmetric (n+m) x (n+m) adjacency of one stratified view."""

    full: SparseMatrix
    primary_count: int
    layout: str  # "nodes-first" | "labels-first"


@dataclass(frozen=True)
class NormalizedOperator:
    """Propagation operators for one view: `truncated` keeps the primary
    block's rows of the normalized composite matrix; `intra` is the
    independently normalized primary-block adjacency."""

    truncated: SparseMatrix
    intra: SparseMatrix


@dataclass(frozen=True)
class GraphOperators:
    """Everything the two convolution stacks need, prebuilt once per run."""

    label: NormalizedOperator   # truncated: m x (n+m), intra: normalized co-occurrence
    node: NormalizedOperator    # truncated: n x (n+m), intra: normalized adjacency
    cooccurrence: SparseMatrix  # raw m x m counts (or binarized)


def build_label_cooccurrence(b: SparseMatrix, binarize: bool = False) -> SparseMatrix:
    """Co-occurrence counts C[r,s] = #nodes carrying both labels r and s.

    Equals B^T B with the diagonal zeroed; symmetric by construction. With
    `binarize`, counts collapse to 0/1 indicators.
    """
    bd = b.to_dense()
    c = bd.T @ bd
    np.fill_diagonal(c, 0.0)
    if binarize:
        c = (c > 0).astype(np.float64)
    return SparseMatrix.from_dense(c)


def _composite(primary: SparseMatrix, cross: SparseMatrix | None,
               primary_count: int, attr_count: int) -> SparseMatrix:
    """Assemble [[primary, cross], [cross^T, 0]] in COO form.

    `cross` is primary_count x attr_count; None leaves the off-diagonal
    blocks empty.
    """
    total = primary_count + attr_count
    rows = [primary.row_ids()]
    cols = [primary.indices]
    vals = [primary.values]
    if cross is not None:
        cr = cross.row_ids()
        cc = cross.indices
        rows.append(cr)
        cols.append(cc + primary_count)
        vals.append(cross.values)
        rows.append(cc + primary_count)
        cols.append(cr)
        vals.append(cross.values)
    return SparseMatrix.from_coo(total, total, np.concatenate(rows),
                                 np.concatenate(cols), np.concatenate(vals))


def build_node_node_label_adj(a: SparseMatrix, b: SparseMatrix) -> CompositeAdjacency:
    """Nodes-first composite: node block A, cross blocks B / B^T, zero label block."""
    n, m = b.shape
    return CompositeAdjacency(_composite(a, b, n, m), n, "nodes-first")


def build_label_label_node_adj(c: SparseMatrix, b: SparseMatrix,
                               include_node_attrs: bool = True) -> CompositeAdjacency:
    """Labels-first composite: label block C, cross blocks B^T / B, zero node block.

    `include_node_attrs=False` strips the member-node attachments, leaving
    labels connected through co-occurrence alone.
    """
    n, m = b.shape
    cross = b.transpose() if include_node_attrs else None
    return CompositeAdjacency(_composite(c, cross, m, n), m, "labels-first")


def normalize_symmetric(m: SparseMatrix) -> SparseMatrix:
    """D^{-1/2} (M + I) D^{-1/2} with D the degree matrix of M + I.

    Self-loops guarantee every degree is at least 1, so no division by zero.
    """
    with_loops = m.add_identity()
    inv_sqrt = 1.0 / np.sqrt(with_loops.row_sums())
    return with_loops.scale_symmetric(inv_sqrt, inv_sqrt)


def truncate_rows(m: SparseMatrix, keep: int) -> SparseMatrix:
    """First `keep` rows of a sparse matrix, all columns, values unchanged."""
    return m.take_rows(keep)


def build_operators(g: MultiLabelGraph, variant: str = "full",
                    binarize_cooccurrence: bool = False) -> GraphOperators:
    """Build both views' operators for a graph under a model variant.

    Variant "node" removes the common-node attributes from the label view,
    so the label operator's cross-block columns are all zero.
    """
    a, b = g.adjacency, g.label_assignments
    c = build_label_cooccurrence(b, binarize_cooccurrence)

    e = build_node_node_label_adj(a, b)
    node_trunc = truncate_rows(normalize_symmetric(e.full), g.node_count)
    node_intra = normalize_symmetric(a)

    f = build_label_label_node_adj(c, b, include_node_attrs=(variant != "node"))
    label_trunc = truncate_rows(normalize_symmetric(f.full), g.label_count)
    label_intra = normalize_symmetric(c)

    return GraphOperators(
        label=NormalizedOperator(truncated=label_trunc, intra=label_intra),
        node=NormalizedOperator(truncated=node_trunc, intra=node_intra),
        cooccurrence=c,
    )
