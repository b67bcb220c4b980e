"""Feeder description files: parsing, validation and per-unit conversion.

A feeder file is a JSON document::

    {
      "name": "ieee13",
      "base_kva": 5000.0,                  # three-phase base power
      "load_scale": 1.0,                   # optional multiplier on all loads
      "zones": {"primary": {"base_kv": 4.16}, "lv": {"base_kv": 0.48}},
      "slack": {"bus": "650", "vm_pu": [1, 1, 1], "va_deg": [0, -120, 120]},
      "buses": [
        {"id": "632", "phases": "abc", "zone": "primary",
         "load_kw": {"a": 10.0}, "load_kvar": {"a": 5.0},
         "shunt_kvar": {"c": 100.0}}
      ],
      "lines": [
        {"id": "650-632", "from": "650", "to": "632", "phases": "abc",
         "kind": "line", "z_ohm": [[[re, im], ...], ...],
         "b_us": [[...]], "zone": "primary"}
      ]
    }

``base_kv`` is line-to-line, so ``z_pu = z_ohm * base_kva / (1000 * base_kv**2)``
and per-phase powers are normalised by ``base_kva / 3``. Line impedances
(already multiplied by length) are referred to the zone of the ``from`` bus
unless the line names its own ``zone``. ``b_us`` is the total line charging
susceptance in microsiemens, split evenly between the two terminals. Loads
are consumption; they become negative injections in the network, after
multiplication by ``load_scale``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .netmodel import PQ, SLACK, Bus, Line, Network, NetworkError, phase_set

BUNDLED = ("ieee13", "ieee37", "ieee123")


class FeederFormatError(ValueError):
    """Structurally invalid feeder document."""


class FeederSyntaxError(FeederFormatError):
    def __init__(self, msg: str, line: int, column: int):
        super().__init__(f"{msg} (line {line}, column {column})")
        self.line = line
        self.column = column


@dataclass
class BusRecord:
    id: str
    phases: str
    zone: str
    load_kw: dict[str, float] = field(default_factory=dict)
    load_kvar: dict[str, float] = field(default_factory=dict)
    shunt_kvar: dict[str, float] = field(default_factory=dict)


@dataclass
class LineRecord:
    id: str
    from_bus: str
    to_bus: str
    phases: str
    z_ohm: np.ndarray
    kind: str = "line"
    b_us: np.ndarray | None = None
    zone: str | None = None


@dataclass
class SlackRecord:
    bus: str
    vm_pu: list[float]
    va_deg: list[float]


@dataclass
class FeederFile:
    name: str
    base_kva: float
    zones: dict[str, float]
    slack: SlackRecord
    buses: list[BusRecord]
    lines: list[LineRecord]
    load_scale: float = 1.0

    def bus(self, bus_id: str) -> BusRecord:
        for b in self.buses:
            if b.id == bus_id:
                return b
        raise KeyError(bus_id)


def _require(obj: dict, key: str, where: str) -> Any:
    if not isinstance(obj, dict) or key not in obj:
        raise FeederFormatError(f"{where}: missing field {key!r}")
    return obj[key]


def _phases(value: Any, where: str) -> str:
    try:
        return phase_set(str(value))
    except NetworkError as exc:
        raise FeederFormatError(f"{where}: {exc}") from None


def _per_phase(rec: dict, key: str, phases: str, where: str) -> dict[str, float]:
    values = rec.get(key, {}) or {}
    if not isinstance(values, dict):
        raise FeederFormatError(f"{where}: {key} must map phase to value")
    out = {}
    for ph, v in values.items():
        if ph not in phases:
            raise FeederFormatError(f"{where}: {key} on absent phase {ph!r}")
        out[ph] = float(v)
    return out


def _complex_block(raw: Any, k: int, where: str) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise FeederFormatError(f"{where}: impedance entries must be [re, im] pairs") from None
    if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[2] != 2:
        raise FeederFormatError(f"{where}: impedance block is not a square matrix of [re, im]")
    if arr.shape[0] != k:
        raise FeederFormatError(
            f"{where}: impedance block is {arr.shape[0]}x{arr.shape[1]} for {k} phase(s)"
        )
    return arr[..., 0] + 1j * arr[..., 1]


def parse_feeder(text: str) -> FeederFile:
    """Parse and structurally validate a feeder document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FeederSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise FeederFormatError("feeder document must be a JSON object")
    zones_raw = _require(doc, "zones", "feeder")
    zones = {}
    for zname, z in zones_raw.items():
        zones[zname] = float(_require(z, "base_kv", f"zone {zname}"))
    slack_raw = _require(doc, "slack", "feeder")
    slack = SlackRecord(
        bus=str(_require(slack_raw, "bus", "slack")),
        vm_pu=[float(v) for v in slack_raw.get("vm_pu", [1.0, 1.0, 1.0])],
        va_deg=[float(v) for v in slack_raw.get("va_deg", [0.0, -120.0, 120.0])],
    )
    buses = []
    for rec in _require(doc, "buses", "feeder"):
        bid = str(_require(rec, "id", "bus"))
        where = f"bus {bid}"
        phases = _phases(_require(rec, "phases", where), where)
        zone = str(rec.get("zone", next(iter(zones), "")))
        if zone not in zones:
            raise FeederFormatError(f"{where}: unknown zone {zone!r}")
        buses.append(
            BusRecord(
                id=bid,
                phases=phases,
                zone=zone,
                load_kw=_per_phase(rec, "load_kw", phases, where),
                load_kvar=_per_phase(rec, "load_kvar", phases, where),
                shunt_kvar=_per_phase(rec, "shunt_kvar", phases, where),
            )
        )
    known = {b.id for b in buses}
    if slack.bus not in known:
        raise FeederFormatError(f"slack: undefined bus {slack.bus!r}")
    lines = []
    for rec in _require(doc, "lines", "feeder"):
        lid = str(_require(rec, "id", "line"))
        where = f"line {lid}"
        a, b = str(_require(rec, "from", where)), str(_require(rec, "to", where))
        for end in (a, b):
            if end not in known:
                raise FeederFormatError(f"{where}: undefined bus {end!r}")
        phases = _phases(_require(rec, "phases", where), where)
        z = _complex_block(_require(rec, "z_ohm", where), len(phases), where)
        b_us = rec.get("b_us")
        if b_us is not None:
            b_us = np.asarray(b_us, dtype=float)
            if b_us.shape != (len(phases), len(phases)):
                raise FeederFormatError(f"{where}: b_us block has shape {b_us.shape}")
        zone = rec.get("zone")
        if zone is not None and zone not in zones:
            raise FeederFormatError(f"{where}: unknown zone {zone!r}")
        lines.append(LineRecord(lid, a, b, phases, z, str(rec.get("kind", "line")), b_us, zone))
    base_kva = float(_require(doc, "base_kva", "feeder"))
    load_scale = float(doc.get("load_scale", 1.0))
    return FeederFile(str(doc.get("name", "")), base_kva, zones, slack, buses, lines, load_scale)


def z_base(base_kva: float, base_kv: float) -> float:
    """Base impedance in ohms for a three-phase kVA base and line-to-line kV."""
    if base_kva <= 0 or base_kv <= 0:
        raise FeederFormatError("base values must be positive")
    return 1000.0 * base_kv**2 / base_kva


def to_network(f: FeederFile) -> Network:
    """Convert a feeder file into a per-unit `Network`."""
    if f.base_kva <= 0 or any(kv <= 0 for kv in f.zones.values()):
        raise FeederFormatError("base values must be positive")
    if not f.load_scale > 0:
        raise FeederFormatError("load_scale must be positive")
    s_phase = f.base_kva / 3.0
    bus_kv = {b.id: f.zones[b.zone] for b in f.buses}
    buses = []
    for b in f.buses:
        kind = SLACK if b.id == f.slack.bus else PQ
        load = {}
        for ph in b.phases:
            s = b.load_kw.get(ph, 0.0) + 1j * b.load_kvar.get(ph, 0.0)
            if s != 0:
                load[ph] = -s * f.load_scale / s_phase
        shunt = {ph: 1j * q / s_phase for ph, q in b.shunt_kvar.items() if q}
        buses.append(Bus(b.id, b.phases, kind, load, shunt, bus_kv[b.id]))
    lines = []
    for ln in f.lines:
        kv = f.zones[ln.zone] if ln.zone is not None else bus_kv[ln.from_bus]
        zb = z_base(f.base_kva, kv)
        shunt = None
        if ln.b_us is not None:
            shunt = 0.5j * ln.b_us * 1e-6 * zb
        try:
            lines.append(Line(ln.id, ln.from_bus, ln.to_bus, ln.phases, ln.z_ohm / zb,
                              shunt, ln.kind, kv))
        except NetworkError as exc:
            raise FeederFormatError(str(exc)) from None
    slack = next(b for b in f.buses if b.id == f.slack.bus)
    k = len(slack.phases)
    if len(f.slack.vm_pu) < k or len(f.slack.va_deg) < k:
        raise FeederFormatError("slack: need one magnitude and angle per slack phase")
    vs = np.asarray(f.slack.vm_pu[:k]) * np.exp(1j * np.deg2rad(f.slack.va_deg[:k]))
    try:
        return Network(buses, lines, vs, f.base_kva, f.name)
    except NetworkError as exc:
        raise FeederFormatError(str(exc)) from None


def to_feeder(
    net: Network, zones: dict[str, float] | None = None, load_scale: float = 1.0
) -> FeederFile:
    """Re-emit a network as a feeder file (inverse of `to_network`).

    Loads are divided by ``load_scale`` so that the file reproduces ``net``.
    """
    if zones is None:
        kvs = sorted({b.base_kv for b in net.buses} | {ln.base_kv for ln in net.lines})
        zones = {f"zone{i}": kv for i, kv in enumerate(kvs)}
    name_of = {}
    for zname, kv in zones.items():
        name_of.setdefault(kv, zname)
    s_phase = net.base_kva / 3.0
    buses = []
    for b in net.buses:
        kw = {ph: -s.real * s_phase / load_scale for ph, s in b.load.items()}
        kvar = {ph: -s.imag * s_phase / load_scale for ph, s in b.load.items()}
        cap = {ph: y.imag * s_phase for ph, y in b.shunt.items()}
        buses.append(BusRecord(b.id, b.phases, name_of[b.base_kv], kw, kvar, cap))
    kv_of = {b.id: b.base_kv for b in net.buses}
    lines = []
    for ln in net.lines:
        zb = z_base(net.base_kva, ln.base_kv)
        b_us = None if ln.shunt is None else (2 * ln.shunt / zb).imag * 1e6
        zone = None if ln.base_kv == kv_of[ln.from_bus] else name_of[ln.base_kv]
        lines.append(LineRecord(ln.id, ln.from_bus, ln.to_bus, ln.phases, ln.z * zb,
                                ln.kind, b_us, zone))
    vs = net.slack_voltage
    slack = SlackRecord(net.slack.id, list(np.abs(vs)), list(np.rad2deg(np.angle(vs))))
    return FeederFile(net.name, net.base_kva, dict(zones), slack, buses, lines, load_scale)


def dump_feeder(f: FeederFile) -> str:
    doc = {
        "name": f.name,
        "base_kva": f.base_kva,
        "load_scale": f.load_scale,
        "zones": {k: {"base_kv": v} for k, v in f.zones.items()},
        "slack": {"bus": f.slack.bus, "vm_pu": f.slack.vm_pu, "va_deg": f.slack.va_deg},
        "buses": [],
        "lines": [],
    }
    for b in f.buses:
        rec: dict[str, Any] = {"id": b.id, "phases": b.phases, "zone": b.zone}
        if b.load_kw or b.load_kvar:
            rec["load_kw"], rec["load_kvar"] = b.load_kw, b.load_kvar
        if b.shunt_kvar:
            rec["shunt_kvar"] = b.shunt_kvar
        doc["buses"].append(rec)
    for ln in f.lines:
        rec = {"id": ln.id, "from": ln.from_bus, "to": ln.to_bus, "phases": ln.phases,
               "kind": ln.kind,
               "z_ohm": [[[float(v.real), float(v.imag)] for v in row] for row in ln.z_ohm]}
        if ln.b_us is not None:
            rec["b_us"] = ln.b_us.tolist()
        if ln.zone is not None:
            rec["zone"] = ln.zone
        doc["lines"].append(rec)
    return json.dumps(doc, indent=1) + "\n"


def bundled_text(name: str) -> str:
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled feeder {name!r}; choose from {', '.join(BUNDLED)}")
    return resources.files("gldf").joinpath("data", f"{name}.json").read_text()


def load_bundled(name: str, shunts: bool = False) -> Network:
    """Load one of the bundled IEEE feeders with its reference loading.

    By default the shunt-free reduction is returned (capacitor banks dropped),
    which is the form the LinDistFlow comparison and the incidence identities
    require.
    """
    net = to_network(parse_feeder(bundled_text(name)))
    return net if shunts else net.without_shunts()


def read_feeder(source: str | Path, shunts: bool = False) -> Network:
    """Load a feeder by bundled name or file path."""
    if str(source) in BUNDLED:
        return load_bundled(str(source), shunts=shunts)
    net = to_network(parse_feeder(Path(source).read_text()))
    return net if shunts else net.without_shunts()
