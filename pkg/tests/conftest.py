from __future__ import annotations

import pytest

import netdesign as nd
from netdesign.search import SearchConfig


@pytest.fixture(scope="session")
def path312() -> nd.Network:
    # three nodes, center node 1 linked to nodes 2 and 3
    return nd.parse_edge_list("1-2, 1-3", 3)


@pytest.fixture(scope="session")
def examples() -> dict[int, nd.Network]:
    return {k: nd.example_network(k) for k in range(1, 7)}


@pytest.fixture(scope="session")
def groups(examples) -> dict[int, nd.AutomorphismGroup]:
    return {k: nd.find_automorphisms(net) for k, net in examples.items()}


def _build_net(key):
    kind = key[0]
    if kind == "ex":
        return nd.example_network(key[1])
    if kind == "blocks":
        return nd.augment_blocks(list(key[1]), key[2])
    if kind == "rowcol":
        return nd.augment_row_column(key[1], key[2], key[3])
    raise ValueError(key)


class ReportCache:
    """Session-wide memo of exhaustive searches so the acceptance criteria
    that need the same run (counters, soundness ties, CD references) pay for
    it once."""

    def __init__(self):
        self._reports = {}
        self._nets = {}

    def network(self, key) -> nd.Network:
        if key not in self._nets:
            self._nets[key] = _build_net(key)
        return self._nets[key]

    def exhaustive(self, key, m: int, use_automorphisms: bool) -> nd.SearchReport:
        rkey = (key, m, use_automorphisms)
        if rkey not in self._reports:
            net = self.network(key)
            spec = nd.ModelSpec.for_network(net, m)
            self._reports[rkey] = nd.exhaustive_search(
                net, spec, SearchConfig(use_automorphisms=use_automorphisms))
        return self._reports[rkey]


@pytest.fixture(scope="session")
def report_cache() -> ReportCache:
    return ReportCache()
