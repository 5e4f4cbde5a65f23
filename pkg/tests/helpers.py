"""Independent oracles used by the tests: these deliberately avoid the
library's eigendecomposition / canonicity code paths."""

from __future__ import annotations

import numpy as np

import netdesign as nd


def oracle_value(net: nd.Network, x, m: int) -> float | None:
    """Criterion via Moore-Penrose pseudoinverse of the full information
    matrix plus an explicit projection test per contrast."""
    spec = nd.ModelSpec.for_network(net, m)
    f = nd.build_model_matrix(net, x, spec)
    info = f.T @ f
    pinv = np.linalg.pinv(info)
    total = 0.0
    pairs = 0
    for j in range(1, m):
        for l in range(j + 1, m + 1):
            c = np.zeros(info.shape[0])
            c[j] = 1.0
            if l < m:
                c[l] = -1.0
            if not np.allclose(info @ (pinv @ c), c, atol=1e-8):
                return None
            total += float(c @ pinv @ c)
            pairs += 1
    return total / pairs


def stirling2(n: int, k: int) -> int:
    """Partitions of an n-set into k nonempty parts, by the standard
    recurrence."""
    if k == 0:
        return 1 if n == 0 else 0
    table = [[0] * (k + 1) for _ in range(n + 1)]
    table[0][0] = 1
    for i in range(1, n + 1):
        for j in range(1, min(i, k) + 1):
            table[i][j] = j * table[i - 1][j] + table[i - 1][j - 1]
    return table[n][k]


def burnside_orbit_count(group: nd.AutomorphismGroup, m: int) -> int:
    """Average number of designs fixed by each group element: m^(cycles of
    the induced design-position permutation)."""
    design = group.network.design_nodes
    pos = {node: p for p, node in enumerate(design)}
    total = 0
    for perm in group:
        seen = [False] * len(design)
        cycles = 0
        for p in range(len(design)):
            if seen[p]:
                continue
            cycles += 1
            q = p
            while not seen[q]:
                seen[q] = True
                q = pos[perm[design[q]]]
        total += m ** cycles
    assert total % group.size == 0
    return total // group.size
