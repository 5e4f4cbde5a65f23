"""Model matrices and optimality criteria for experiments on unit networks.

The response of unit i is modeled as an intercept, plus the effect of its own
treatment, plus the summed network effects of the treatments carried by the
nodes it is linked to (block nodes contribute their fixed pseudo-treatment).
For m treatments the last treatment effect is pinned to zero, so the model
matrix F has columns: intercept, indicators for treatments 1..m-1, then one
network-effect column per treatment (including block pseudo-treatments).

The default criterion is the average variance of all pairwise treatment
effect differences, computed from a generalized inverse of F'F.  Designs for
which some pairwise contrast is not estimable evaluate to INVALID, returned
as None; lower values are better.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .network import Network

Design = tuple[int, ...]

# eigenvalues below RANK_TOL * (largest eigenvalue) count as zero, and a
# contrast is estimable when its row-space residual is below the same
# relative tolerance
RANK_TOL = 1e-8

CRITERIA = ("As", "Ds")


@dataclass(frozen=True)
class ModelSpec:
    """Model shape for a network: free treatment count m, total treatment
    count including block pseudo-treatments, criterion choice, and the
    exchangeability class of each block pseudo-treatment (in block node
    order, used to canonicalize nuisance coordinates)."""

    m: int
    total_treatments: int
    criterion: str = "As"
    sigma2: float = 1.0
    block_classes: tuple[int, ...] = ()

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("need at least two treatments")
        if self.total_treatments < self.m:
            raise ValueError("total_treatments cannot be below m")
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if len(self.block_classes) != self.total_treatments - self.m:
            raise ValueError("need one block class per block pseudo-treatment")

    @classmethod
    def for_network(cls, net: Network, m: int, criterion: str = "As") -> "ModelSpec":
        """Spec matching `net`: block nodes (in node order) must be pinned to
        pseudo-treatments m+1, m+2, ..."""
        fixed = [net.roles[b].fixed_treatment for b in net.block_nodes]
        expected = list(range(m + 1, m + 1 + len(fixed)))
        if fixed != expected:
            raise ValueError(f"block nodes carry fixed treatments {fixed}, "
                             f"expected {expected} for m={m}")
        classes = tuple(net.roles[b].class_id for b in net.block_nodes)
        return cls(m=m, total_treatments=m + len(fixed), criterion=criterion,
                   block_classes=classes)

    @property
    def n_params(self) -> int:
        return self.m + self.total_treatments


@lru_cache(maxsize=128)
def _pair_contrasts(m: int, p: int) -> np.ndarray:
    """Rows c for every treatment difference j < l (effect l == m is the
    pinned zero, so that column is absent)."""
    rows = []
    for j in range(1, m):
        for l in range(j + 1, m + 1):
            c = np.zeros(p)
            c[j] = 1.0
            if l < m:
                c[l] = -1.0
            rows.append(c)
    out = np.array(rows)
    out.setflags(write=False)
    return out


def _canonicalize_nuisance(info: np.ndarray, spec: ModelSpec) -> np.ndarray:
    """Reorder the block pseudo-treatment coordinates of `info` into a
    canonical order.

    The criterion only involves treatment-effect contrasts, so symmetric
    permutations of these nuisance coordinates leave it unchanged
    mathematically; sorting them makes designs that are equivalent under a
    network automorphism produce bit-identical matrices, hence bit-identical
    floating-point values.  Coordinates are keyed by (class, row against the
    non-block coordinates, diagonal) and the key is refined by neighbor keys
    within the block coordinates until stable.
    """
    m = spec.m
    fixed_cols = list(range(2 * m))
    block_cols = list(range(2 * m, spec.n_params))
    if len(block_cols) < 2:
        return info
    keys = {
        c: (spec.block_classes[i], tuple(info[c, fixed_cols]), info[c, c])
        for i, c in enumerate(block_cols)
    }
    ranks = _rank_keys(keys)
    for _ in range(len(block_cols)):
        refined = {
            c: (ranks[c], tuple(sorted((ranks[o], info[c, o])
                                       for o in block_cols if o != c)))
            for c in block_cols
        }
        new_ranks = _rank_keys(refined)
        if new_ranks == ranks:
            break
        ranks = new_ranks
    order = sorted(block_cols, key=lambda c: (ranks[c], c))
    if order == block_cols:
        return info
    perm = np.array(fixed_cols + order)
    return info[np.ix_(perm, perm)]


def _rank_keys(keys: dict) -> dict:
    ordered = {k: i for i, k in enumerate(sorted(set(keys.values())))}
    return {c: ordered[k] for c, k in keys.items()}


class DesignEvaluator:
    """Reusable criterion evaluator for one (network, spec) pair.

    Precomputes the measurable-row slice of the adjacency matrix and the
    fixed block pseudo-treatments so that evaluating one design is a handful
    of small dense operations.
    """

    def __init__(self, net: Network, spec: ModelSpec):
        if spec.total_treatments != spec.m + net.n_blocks:
            raise ValueError(f"spec expects {spec.total_treatments - spec.m} "
                             f"block treatments, network has {net.n_blocks}")
        self.net = net
        self.spec = spec
        meas = np.array(net.design_nodes, dtype=np.int64)
        self._meas = meas
        self._a_meas = net.adjacency[meas, :].astype(np.float64)
        t = np.zeros(net.n_total, dtype=np.int64)
        for b in net.block_nodes:
            t[b] = net.roles[b].fixed_treatment
        self._t_template = t

    def model_matrix(self, x: Sequence[int]) -> np.ndarray:
        """Rows: measurable nodes in ascending node order.  Columns:
        intercept, treatment indicators 1..m-1, then network-effect counts
        for every treatment 1..total_treatments."""
        spec = self.spec
        n = self.net.n_total
        t = self._t_template.copy()
        t[self._meas] = np.asarray(x, dtype=np.int64)
        onehot = np.zeros((n, spec.total_treatments))
        onehot[np.arange(n), t - 1] = 1.0
        gamma = self._a_meas @ onehot
        f = np.empty((len(self._meas), spec.n_params))
        f[:, 0] = 1.0
        f[:, 1:spec.m] = onehot[self._meas, :spec.m - 1]
        f[:, spec.m:] = gamma
        return f

    def value(self, x: Sequence[int]) -> float | None:
        f = self.model_matrix(x)
        return evaluate_criterion(f.T @ f, self.spec)


def build_model_matrix(net: Network, x: Sequence[int], spec: ModelSpec) -> np.ndarray:
    _validate_design(net, x, spec)
    return DesignEvaluator(net, spec).model_matrix(x)


def information_matrix(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.size == 0:
        raise ValueError("model matrix is empty")
    return f.T @ f


def evaluate_criterion(info: np.ndarray, spec: ModelSpec) -> float | None:
    """Criterion value of an information matrix, or None (INVALID) when some
    pairwise treatment contrast is not estimable.

    For the pairwise-variance criterion ("As"): the average, over all
    m(m-1)/2 treatment pairs, of the contrast variance read off a
    generalized inverse built by eigendecomposition with relative rank
    tolerance RANK_TOL.  For "Ds": the determinant of the covariance of the
    m-1 free treatment effects.  Lower is better for both.
    """
    info = np.asarray(info, dtype=np.float64)
    p = spec.n_params
    if info.shape != (p, p):
        raise ValueError(f"information matrix shape {info.shape}, expected {(p, p)}")
    if spec.block_classes:
        info = _canonicalize_nuisance(info, spec)
    w, v = np.linalg.eigh(info)
    wmax = w[-1]
    if wmax <= 0:
        return None
    keep = w > RANK_TOL * wmax
    vr = v[:, keep]
    contrasts = _pair_contrasts(spec.m, p)
    cv = contrasts @ vr
    resid = contrasts - cv @ vr.T
    bad = (np.linalg.norm(resid, axis=1)
           > RANK_TOL * np.linalg.norm(contrasts, axis=1))
    if bad.any():
        return None
    if spec.criterion == "As":
        variances = (cv * cv / w[keep]).sum(axis=1)
        return float(variances.mean() * spec.sigma2)
    basis = np.zeros((spec.m - 1, p))
    basis[np.arange(spec.m - 1), np.arange(1, spec.m)] = 1.0
    bv = basis @ vr
    cov = (bv / w[keep]) @ bv.T
    return float(np.linalg.det(cov) * spec.sigma2 ** (spec.m - 1))


def criterion_for_design(net: Network, x: Sequence[int],
                         spec: ModelSpec) -> float | None:
    """Criterion value of design x on `net`; None when not estimable."""
    _validate_design(net, x, spec)
    return DesignEvaluator(net, spec).value(x)


def _validate_design(net: Network, x: Sequence[int], spec: ModelSpec) -> None:
    if len(x) != net.n_design:
        raise ValueError(f"design length {len(x)} does not match "
                         f"{net.n_design} design nodes")
    if any(not 1 <= t <= spec.m for t in x):
        raise ValueError(f"treatments must lie in 1..{spec.m}")
