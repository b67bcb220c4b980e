"""Independent reference computations used by the tests.

None of these go through ``Z`` or ``E``: the Newton solver works on the
rectangular power-balance equations with ``Y`` directly, the path oracle walks
parents by hand, and the two-bus cases are closed forms.
"""

from __future__ import annotations

import numpy as np

from gldf.netmodel import SLACK, Bus, Line, Network


def newton_power_flow(Y_LL, Y_LS, V_S, S, V0=None, tol=1e-13, max_iter=50):
    """Dense Newton on ``V * conj(Y_LL V + Y_LS V_S) = S`` in rectangular form."""
    n = Y_LL.shape[0]
    c = Y_LS @ V_S
    V = np.array(V0 if V0 is not None else -np.linalg.solve(Y_LL, c), dtype=complex)
    for _ in range(max_iter):
        I = Y_LL @ V + c
        F = V * np.conj(I) - S
        if np.abs(F).max() < tol:
            return V
        dV = np.diag(np.conj(I))
        dVc = np.diag(V) @ np.conj(Y_LL)
        J_re = dV + dVc
        J_im = 1j * (dV - dVc)
        J = np.block([[J_re.real, J_im.real], [J_re.imag, J_im.imag]])
        step = np.linalg.solve(J, -np.concatenate([F.real, F.imag]))
        V = V + step[:n] + 1j * step[n:]
    raise RuntimeError("Newton did not converge")


def two_bus_voltage(z: complex, s: complex, vs: complex = 1.0) -> complex:
    """High-voltage solution of ``V = vs + z conj(s) / conj(V)`` (single phase).

    With ``u = |V|^2`` and ``vs = 1`` the equation reduces to
    ``u^2 - (1 + 2 Re(z conj(s))) u + |z|^2 |s|^2 = 0``; ``V = conj(u - z conj(s))``.
    The general ``vs`` case is obtained by rotating and scaling.
    """
    scale = abs(vs)
    rot = vs / scale
    zz = z / scale**2
    b = 1 + 2 * (zz * np.conj(s)).real
    u = (b + np.sqrt(b * b - 4 * abs(zz) ** 2 * abs(s) ** 2)) / 2
    return np.conj(u - zz * np.conj(s)) * rot * scale


def two_bus_network(z: complex, load: complex = 0.0, shunt: complex = 0.0) -> Network:
    buses = [Bus("0", "a", SLACK), Bus("1", "a", load={"a": load} if load else {},
                                        shunt={"a": shunt} if shunt else {})]
    return Network(buses, [Line("01", "0", "1", "a", np.array([[z]]))])


def chain_network(zs, phases="a") -> Network:
    """Single- or multi-phase chain 0-1-...-k with scalar impedances ``zs``."""
    buses = [Bus("0", phases, SLACK)] + [Bus(str(i + 1), phases) for i in range(len(zs))]
    lines = [
        Line(f"L{i + 1}", str(i), str(i + 1), phases, z * np.eye(len(phases)))
        for i, z in enumerate(zs)
    ]
    return Network(buses, lines)


def three_bus_example(z1=None, z2=None) -> Network:
    """Slack 0 (abc) - bus 1 (abc) - bus 2 (ac); lines 1 = (0, 1) and 2 = (1, 2)."""
    if z1 is None:
        z1 = np.array([[0.02 + 0.04j, 0.005 + 0.01j, 0.004 + 0.008j],
                       [0.005 + 0.01j, 0.021 + 0.042j, 0.005 + 0.009j],
                       [0.004 + 0.008j, 0.005 + 0.009j, 0.019 + 0.041j]])
    if z2 is None:
        z2 = np.array([[0.03 + 0.05j, 0.006 + 0.011j], [0.006 + 0.011j, 0.031 + 0.052j]])
    buses = [Bus("0", "abc", SLACK), Bus("1", "abc"), Bus("2", "ac")]
    lines = [Line("1", "0", "1", "abc", z1), Line("2", "1", "2", "ac", z2)]
    return Network(buses, lines)


def parent_map(net: Network) -> dict[str, str]:
    """Parent bus of every non-slack bus, found by repeated relaxation from the slack."""
    parent: dict[str, str] = {}
    reached = {net.slack.id}
    while len(reached) < len(net.buses):
        for ln in net.lines:
            a, b = ln.from_bus, ln.to_bus
            if a in reached and b not in reached:
                parent[b] = a
                reached.add(b)
            elif b in reached and a not in reached:
                parent[a] = b
                reached.add(a)
    return parent


def path_edges(net: Network, bus: str) -> set[frozenset]:
    parent = parent_map(net)
    out = set()
    while bus in parent:
        out.add(frozenset((bus, parent[bus])))
        bus = parent[bus]
    return out
