"""Automorphism enumeration for unit networks and canonicity tests for
designs within an automorphism orbit.

An automorphism here is a node permutation that preserves edges (directed
edges keep their direction), maps design nodes to design nodes, and maps
block nodes to block nodes of the same exchangeability class.  The group is
found by a backtracking partial-mapping search: nodes are assigned images one
at a time, candidates restricted to nodes of the same color under an
equitable refinement of the initial (role, degree) coloring, and adjacency
consistency with the mapped prefix is enforced with bitmask comparisons.

Designs related by an automorphism have equal optimality-criterion values, so
a search only needs the orbit's lexicographically smallest member; this
module provides that test (`is_canonical`) plus a brute-force orbit counter
used as a test oracle.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .network import Network

_CHUNK = 2048


class GroupSizeLimitError(RuntimeError):
    """The automorphism group exceeds the configured cap.  Orbit pruning is a
    bad trade for such networks: the per-design canonicity check costs more
    than the evaluations it saves."""


def _rank(keys: list) -> list[int]:
    order = {k: i for i, k in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]


def _refined_colors(net: Network) -> list[int]:
    """Equitable coloring: start from node roles and refine by the multiset
    of neighbor colors (in- and out-neighbors separately) to a fixpoint.
    Automorphisms can only map nodes of equal color."""
    a = net.adjacency
    n = net.n_total
    init = [(0,) if r is None else (1, r.class_id) for r in net.roles]
    colors = _rank(init)
    out_nbrs = [np.nonzero(a[i])[0].tolist() for i in range(n)]
    in_nbrs = [np.nonzero(a[:, i])[0].tolist() for i in range(n)]
    while True:
        keys = [
            (colors[i],
             tuple(sorted(colors[j] for j in out_nbrs[i])),
             tuple(sorted(colors[j] for j in in_nbrs[i])))
            for i in range(n)
        ]
        new = _rank(keys)
        if new == colors:
            return colors
        colors = new


class AutomorphismGroup:
    """The full automorphism group of a network, as an explicit element list.

    Elements are node permutations in one-line notation (tuple p with
    p[i] = image of node i), sorted lexicographically; the identity is always
    present.  Instances are immutable and safe to share.
    """

    def __init__(self, elements: Iterable[Sequence[int]], network: Network):
        self.elements = tuple(sorted(tuple(int(v) for v in p) for p in elements))
        self.network = network
        self._inv_maps: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    @property
    def size(self) -> int:
        return len(self.elements)

    def _inverse_position_maps(self) -> np.ndarray:
        """(z, d) index matrix M with M[k, q] = p meaning: under element k the
        design at position p lands at position q, so the permuted design is
        x[M[k]].  Positions index design nodes in ascending node order."""
        if self._inv_maps is None:
            design = self.network.design_nodes
            pos = {node: p for p, node in enumerate(design)}
            z, d = len(self.elements), len(design)
            fwd = np.empty((z, d), dtype=np.int64)
            for k, perm in enumerate(self.elements):
                fwd[k] = [pos[perm[node]] for node in design]
            inv = np.empty_like(fwd)
            rows = np.arange(z)[:, None]
            inv[rows, fwd] = np.arange(d)[None, :]
            inv.setflags(write=False)
            self._inv_maps = inv
        return self._inv_maps

    def design_images(self, x: Sequence[int]) -> np.ndarray:
        """All z permuted copies of design x, one per group element."""
        x_arr = np.asarray(x, dtype=np.int64)
        return x_arr[self._inverse_position_maps()]

    def is_canonical(self, x: Sequence[int]) -> bool:
        """True iff x is lexicographically smallest in its orbit: no group
        element maps it to a strictly smaller design vector.

        Elements are scanned in geometrically growing chunks: for most
        non-canonical designs some early element already produces a smaller
        image, so the scan rarely touches the whole group."""
        maps = self._inverse_position_maps()
        x_arr = np.asarray(x, dtype=np.int64)
        if x_arr.shape != (maps.shape[1],):
            raise ValueError(f"design length {x_arr.shape} does not match "
                             f"{maps.shape[1]} design nodes")
        z = maps.shape[0]
        lo = 0
        size = 128
        while lo < z:
            y = x_arr[maps[lo:lo + size]]
            neq = y != x_arr
            hit = neq.any(axis=1)
            if hit.any():
                rows = np.nonzero(hit)[0]
                first = neq[rows].argmax(axis=1)
                if (y[rows, first] < x_arr[first]).any():
                    return False
            lo += size
            size = min(size * 8, _CHUNK * 8)
        return True

    def canonical_representative(self, x: Sequence[int]) -> tuple[int, ...]:
        """The lexicographically smallest design in x's orbit."""
        maps = self._inverse_position_maps()
        x_arr = np.asarray(x, dtype=np.int64)
        best: tuple[int, ...] | None = None
        for lo in range(0, maps.shape[0], _CHUNK):
            y = x_arr[maps[lo:lo + _CHUNK]]
            idx = np.lexsort(y.T[::-1])
            cand = tuple(int(v) for v in y[idx[0]])
            if best is None or cand < best:
                best = cand
        return best


def _search_order(net: Network, colors: list[int]) -> list[int]:
    """Order nodes so that each one touches as many already-ordered nodes as
    possible (ties to the smaller color class, then the smaller index): the
    adjacency constraints then prune the partial-mapping tree early instead
    of after whole color classes have been assigned."""
    n = net.n_total
    a = net.adjacency
    linked = [set(np.nonzero((a[i] + a[:, i]) > 0)[0].tolist()) for i in range(n)]
    class_size = {c: colors.count(c) for c in set(colors)}
    remaining = set(range(n))
    ordered: set[int] = set()
    order: list[int] = []
    while remaining:
        nxt = min(remaining,
                  key=lambda i: (-len(linked[i] & ordered),
                                 class_size[colors[i]], i))
        order.append(nxt)
        remaining.remove(nxt)
        ordered.add(nxt)
    return order


def find_automorphisms(net: Network, max_group_size: int = 1_000_000) -> AutomorphismGroup:
    """Enumerate the complete role- and direction-preserving automorphism
    group of `net`.

    Raises GroupSizeLimitError once more than `max_group_size` elements are
    found.  Element order in the result is deterministic (lexicographic by
    permutation image).
    """
    n = net.n_total
    a = net.adjacency
    colors = _refined_colors(net)
    order = _search_order(net, colors)
    candidates = [[j for j in range(n) if colors[j] == colors[src]]
                  for src in order]
    out_mask = [int(sum(1 << j for j in np.nonzero(a[i])[0])) for i in range(n)]
    in_mask = [int(sum(1 << j for j in np.nonzero(a[:, i])[0])) for i in range(n)]
    # earlier order positions adjacent to each position's source node
    below_out = [[s for s in range(t) if a[order[t], order[s]]] for t in range(n)]
    below_in = [[s for s in range(t) if a[order[s], order[t]]] for t in range(n)]

    found: list[tuple[int, ...]] = []
    image = [0] * n

    def extend(t: int, used: int) -> None:
        if t == n:
            perm = [0] * n
            for pos, src in enumerate(order):
                perm[src] = image[pos]
            found.append(tuple(perm))
            if len(found) > max_group_size:
                raise GroupSizeLimitError(
                    f"automorphism group exceeds cap {max_group_size}")
            return
        req_out = 0
        for s in below_out[t]:
            req_out |= 1 << image[s]
        req_in = 0
        for s in below_in[t]:
            req_in |= 1 << image[s]
        for j in candidates[t]:
            bit = 1 << j
            if used & bit:
                continue
            if out_mask[j] & used != req_out:
                continue
            if in_mask[j] & used != req_in:
                continue
            image[t] = j
            extend(t + 1, used | bit)

    extend(0, 0)
    return AutomorphismGroup(found, net)


def is_canonical(x: Sequence[int], group: AutomorphismGroup) -> bool:
    return group.is_canonical(x)


def count_orbits_bruteforce(net: Network, m: int,
                            group: AutomorphismGroup | None = None,
                            max_space: int = 10_000_000) -> int:
    """Partition the full m^d design space into automorphism orbits by
    explicitly applying every group element to every design, and return the
    orbit count.  Test oracle only: refuses spaces above `max_space`."""
    if group is None:
        group = find_automorphisms(net)
    d = net.n_design
    space = m ** d
    if space > max_space:
        raise ValueError(f"design space {m}^{d} exceeds {max_space}")
    maps = group._inverse_position_maps()
    powers = (m ** np.arange(d - 1, -1, -1)).astype(np.int64)
    seen = bytearray(space)
    count = 0
    shape = (m,) * d
    for code in range(space):
        if seen[code]:
            continue
        count += 1
        digits = np.array(np.unravel_index(code, shape), dtype=np.int64)
        orbit_codes = digits[maps] @ powers
        for c in orbit_codes.tolist():
            seen[c] = 1
    return count


def cycle_notation(perm: Sequence[int]) -> str:
    """Cycle form with 1-based node ids, fixed points omitted; the identity
    renders as '()'."""
    n = len(perm)
    done = [False] * n
    parts = []
    for i in range(n):
        if done[i] or perm[i] == i:
            done[i] = True
            continue
        cyc = [i]
        done[i] = True
        j = perm[i]
        while j != i:
            cyc.append(j)
            done[j] = True
            j = perm[j]
        parts.append("(" + " ".join(str(v + 1) for v in cyc) + ")")
    return "".join(parts) if parts else "()"
