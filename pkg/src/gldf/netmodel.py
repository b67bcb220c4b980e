"""In-memory multiphase network model and its node/branch index maps.

A *node* is one phase of a PQ bus and a *branch* is one phase of a line.
Nodes are numbered from 0 in bus declaration order with phases ``a < b < c``
inside each bus; the slack bus has no node indices. Branches are numbered the
same way over lines.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

PHASES = "abc"
PHASE_NUMBER = {"a": 0, "b": 1, "c": 2}

SLACK = "slack"
PQ = "pq"


class NetworkError(ValueError):
    """Raised when a network violates a structural invariant."""


class NotRadialError(NetworkError):
    """Raised by operations that need a tree rooted at the slack bus."""


def phase_set(phases: str | Iterable[str]) -> str:
    """Normalise a phase collection into an ordered string such as ``"ac"``."""
    items = list(phases)
    if not items:
        raise NetworkError("empty phase set")
    if len(set(items)) != len(items):
        raise NetworkError(f"duplicate phases in {''.join(items)!r}")
    bad = [p for p in items if p not in PHASE_NUMBER]
    if bad:
        raise NetworkError(f"unknown phase(s) {bad}")
    return "".join(sorted(items, key=PHASE_NUMBER.__getitem__))


@dataclass(frozen=True)
class Bus:
    """A bus with constant-power injections ``load`` (p.u., generator convention).

    ``shunt`` maps phase to a shunt admittance to ground in p.u.
    """

    id: str
    phases: str
    kind: str = PQ
    load: Mapping[str, complex] = field(default_factory=dict)
    shunt: Mapping[str, complex] = field(default_factory=dict)
    base_kv: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "phases", phase_set(self.phases))
        if self.kind not in (SLACK, PQ):
            raise NetworkError(f"bus {self.id}: unknown kind {self.kind!r}")
        for name, values in (("load", self.load), ("shunt", self.shunt)):
            extra = set(values) - set(self.phases)
            if extra:
                raise NetworkError(f"bus {self.id}: {name} on absent phase(s) {sorted(extra)}")
        if self.kind == SLACK and any(v != 0 for v in self.load.values()):
            raise NetworkError(f"slack bus {self.id} cannot carry load")


@dataclass(frozen=True, eq=False)
class Line:
    """A series impedance block between two buses.

    ``z`` is the ``|phases| x |phases|`` impedance matrix in p.u.; ``shunt`` is
    an optional admittance block applied at each terminal.
    """

    id: str
    from_bus: str
    to_bus: str
    phases: str
    z: np.ndarray
    shunt: np.ndarray | None = None
    kind: str = "line"
    base_kv: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "phases", phase_set(self.phases))
        z = np.array(self.z, dtype=complex)
        k = len(self.phases)
        if z.shape != (k, k):
            raise NetworkError(f"line {self.id}: z has shape {z.shape}, expected {(k, k)}")
        if not np.allclose(z, z.T, rtol=0, atol=1e-12 * max(1.0, np.abs(z).max())):
            raise NetworkError(f"line {self.id}: z is not symmetric")
        d = np.diag(z)
        if (d.real < 0).any() or (d.imag < 0).any():
            raise NetworkError(f"line {self.id}: negative self resistance or reactance")
        if np.linalg.matrix_rank(z) < k:
            raise NetworkError(f"line {self.id}: singular impedance block")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)
        if self.shunt is not None:
            sh = np.array(self.shunt, dtype=complex)
            if sh.shape != (k, k):
                raise NetworkError(f"line {self.id}: shunt has shape {sh.shape}")
            if not sh.any():
                sh = None
            else:
                sh.setflags(write=False)
            object.__setattr__(self, "shunt", sh)

    @property
    def y(self) -> np.ndarray:
        return np.linalg.inv(self.z)

    def other(self, bus: str) -> str:
        return self.to_bus if bus == self.from_bus else self.from_bus


@dataclass(frozen=True, eq=False)
class Network:
    """Multiphase network with a single slack bus.

    ``slack_voltage`` holds one phasor per slack phase (ordered ``a, b, c``);
    the default is the balanced set ``1∠0°, 1∠-120°, 1∠120°``.
    """

    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    slack_voltage: np.ndarray | None = None
    base_kva: float = 1.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))
        ids = [b.id for b in self.buses]
        dup = {i for i in ids if ids.count(i) > 1}
        if dup:
            raise NetworkError(f"duplicate bus id(s) {sorted(dup)}")
        lids = [ln.id for ln in self.lines]
        dup = {i for i in lids if lids.count(i) > 1}
        if dup:
            raise NetworkError(f"duplicate line id(s) {sorted(dup)}")
        slacks = [b for b in self.buses if b.kind == SLACK]
        if len(slacks) != 1:
            raise NetworkError(f"expected exactly one slack bus, found {len(slacks)}")
        bus_map = {b.id: b for b in self.buses}
        pairs = set()
        for ln in self.lines:
            for end in (ln.from_bus, ln.to_bus):
                if end not in bus_map:
                    raise NetworkError(f"line {ln.id}: unknown bus {end!r}")
            if ln.from_bus == ln.to_bus:
                raise NetworkError(f"line {ln.id}: self-loop at bus {ln.from_bus}")
            pair = frozenset((ln.from_bus, ln.to_bus))
            if pair in pairs:
                raise NetworkError(f"line {ln.id}: parallel line between {sorted(pair)}")
            pairs.add(pair)
            for end in (ln.from_bus, ln.to_bus):
                if not set(ln.phases) <= set(bus_map[end].phases):
                    raise NetworkError(
                        f"line {ln.id}: phases {ln.phases} not available at bus {end}"
                    )
        slack = slacks[0]
        if self.slack_voltage is None:
            vs = np.array([np.exp(-2j * np.pi / 3 * PHASE_NUMBER[p]) for p in slack.phases])
        else:
            vs = np.array(self.slack_voltage, dtype=complex).reshape(-1)
            if vs.shape != (len(slack.phases),):
                raise NetworkError("slack_voltage must have one entry per slack phase")
        vs.setflags(write=False)
        object.__setattr__(self, "slack_voltage", vs)
        object.__setattr__(self, "_bus_map", bus_map)
        if len(_reachable(self, slack.id)) != len(self.buses):
            raise NetworkError("network is not connected")

    @property
    def slack(self) -> Bus:
        return next(b for b in self.buses if b.kind == SLACK)

    @property
    def pq_buses(self) -> tuple[Bus, ...]:
        return tuple(b for b in self.buses if b.kind != SLACK)

    def bus(self, bus_id: str) -> Bus:
        return self._bus_map[bus_id]

    def line(self, line_id: str) -> Line:
        for ln in self.lines:
            if ln.id == line_id:
                return ln
        raise KeyError(line_id)

    def adjacency(self) -> dict[str, list[Line]]:
        adj: dict[str, list[Line]] = {b.id: [] for b in self.buses}
        for ln in self.lines:
            adj[ln.from_bus].append(ln)
            adj[ln.to_bus].append(ln)
        return adj

    @property
    def has_shunts(self) -> bool:
        return any(ln.shunt is not None for ln in self.lines) or any(
            any(v != 0 for v in b.shunt.values()) for b in self.buses
        )

    def without_shunts(self) -> "Network":
        """Return the shunt-free reduction (capacitors and line charging removed)."""
        buses = [Bus(b.id, b.phases, b.kind, dict(b.load), {}, b.base_kv) for b in self.buses]
        lines = [
            Line(ln.id, ln.from_bus, ln.to_bus, ln.phases, ln.z, None, ln.kind, ln.base_kv)
            for ln in self.lines
        ]
        return Network(buses, lines, self.slack_voltage, self.base_kva, self.name)

    def with_loads(self, loads: Mapping[str, Mapping[str, complex]]) -> "Network":
        """Copy of the network with bus loads replaced by ``loads`` (missing buses get none)."""
        buses = [
            Bus(b.id, b.phases, b.kind, dict(loads.get(b.id, {})), dict(b.shunt), b.base_kv)
            for b in self.buses
        ]
        return Network(buses, self.lines, self.slack_voltage, self.base_kva, self.name)


def _reachable(net: Network, start: str) -> set[str]:
    adj = net.adjacency()
    seen = {start}
    queue = deque([start])
    while queue:
        b = queue.popleft()
        for ln in adj[b]:
            o = ln.other(b)
            if o not in seen:
                seen.add(o)
                queue.append(o)
    return seen


@dataclass(frozen=True, eq=False)
class IndexMaps:
    """Bijections between integer node/branch indices and ``(id, phase)`` pairs."""

    nodes: tuple[tuple[str, str], ...]
    branches: tuple[tuple[str, str], ...]
    node_of: Mapping[tuple[str, str], int]
    branch_of: Mapping[tuple[str, str], int]
    bus_nodes: Mapping[str, np.ndarray]
    line_branches: Mapping[str, np.ndarray]
    slack_nodes: tuple[tuple[str, str], ...]

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return len(self.branches)

    def bus_of(self, i: int) -> str:
        return self.nodes[i][0]

    def line_of(self, j: int) -> str:
        return self.branches[j][0]

    def node_phase_numbers(self) -> np.ndarray:
        return np.array([PHASE_NUMBER[p] for _, p in self.nodes])

    def vector(self, values: Mapping[str, Mapping[str, complex]]) -> np.ndarray:
        """Flatten a ``{bus: {phase: value}}`` mapping into a node vector."""
        out = np.zeros(self.n, dtype=complex)
        for bus, per_phase in values.items():
            for ph, v in per_phase.items():
                out[self.node_of[bus, ph]] = v
        return out

    def unflatten(self, x: Sequence[complex]) -> dict[str, dict[str, complex]]:
        out: dict[str, dict[str, complex]] = {}
        for (bus, ph), v in zip(self.nodes, x):
            out.setdefault(bus, {})[ph] = v
        return out


def build_index_maps(net: Network) -> IndexMaps:
    nodes, branches = [], []
    bus_nodes, line_branches = {}, {}
    for b in net.pq_buses:
        start = len(nodes)
        nodes.extend((b.id, p) for p in b.phases)
        bus_nodes[b.id] = np.arange(start, len(nodes))
    for ln in net.lines:
        start = len(branches)
        branches.extend((ln.id, p) for p in ln.phases)
        line_branches[ln.id] = np.arange(start, len(branches))
    for arr in (*bus_nodes.values(), *line_branches.values()):
        arr.setflags(write=False)
    slack = net.slack
    return IndexMaps(
        nodes=tuple(nodes),
        branches=tuple(branches),
        node_of={k: i for i, k in enumerate(nodes)},
        branch_of={k: j for j, k in enumerate(branches)},
        bus_nodes=bus_nodes,
        line_branches=line_branches,
        slack_nodes=tuple((slack.id, p) for p in slack.phases),
    )


def is_radial(net: Network) -> bool:
    """True when the (connected) network is a tree rooted at the slack bus."""
    return len(net.lines) == len(net.pq_buses)


def parent_lines(net: Network) -> dict[str, Line]:
    """Map each PQ bus to the line leading towards the slack bus (BFS tree)."""
    if not is_radial(net):
        raise NotRadialError("bus-to-slack paths are not unique in a meshed network")
    adj = net.adjacency()
    root = net.slack.id
    parent: dict[str, Line] = {}
    seen = {root}
    queue = deque([root])
    while queue:
        b = queue.popleft()
        for ln in adj[b]:
            o = ln.other(b)
            if o not in seen:
                seen.add(o)
                parent[o] = ln
                queue.append(o)
    return parent


def depths(net: Network) -> dict[str, int]:
    """Hop distance of each bus from the slack bus."""
    adj = net.adjacency()
    root = net.slack.id
    depth = {root: 0}
    queue = deque([root])
    while queue:
        b = queue.popleft()
        for ln in adj[b]:
            o = ln.other(b)
            if o not in depth:
                depth[o] = depth[b] + 1
                queue.append(o)
    return depth


def path_to_slack(net: Network, bus: str) -> list[Line]:
    """Lines on the unique slack-to-``bus`` path, starting at the slack bus."""
    parent = parent_lines(net)
    net.bus(bus)
    path = []
    cur = bus
    while cur != net.slack.id:
        ln = parent[cur]
        path.append(ln)
        cur = ln.other(cur)
    path.reverse()
    return path


def all_paths_to_slack(net: Network) -> dict[str, list[Line]]:
    parent = parent_lines(net)
    root = net.slack.id
    out: dict[str, list[Line]] = {root: []}

    def walk(b: str) -> list[Line]:
        if b not in out:
            ln = parent[b]
            out[b] = walk(ln.other(b)) + [ln]
        return out[b]

    for b in net.buses:
        walk(b.id)
    return out


def common_path(net: Network, i: str, j: str) -> set[str]:
    """Ids of the lines shared by the slack paths of buses ``i`` and ``j``."""
    paths = all_paths_to_slack(net)
    return {ln.id for ln in paths[i]} & {ln.id for ln in paths[j]}


def injection_vector(net: Network, idx: IndexMaps | None = None) -> np.ndarray:
    """Bus loads of ``net`` as a node vector of complex injections (p.u.)."""
    idx = idx or build_index_maps(net)
    return idx.vector({b.id: b.load for b in net.pq_buses})
