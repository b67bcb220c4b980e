"""Generate the bundled IEEE 13/37/123 feeder files.

Line configuration impedances (ohm/mile), segment lengths (ft), spot loads
(kW/kvar per phase), capacitors and transformers are transcribed from the
IEEE PES test feeder documents. Device handling:

* regulators: unity tap, modelled as a closed switch at their location;
* closed switches: 0.001 + 0.001j ohm per phase, no mutual coupling;
* open switches: dropped together with any bus only they reach;
* transformers: series impedance referred to the high-voltage side;
* distributed loads: lumped at the receiving bus;
* delta loads: phase AB/BC/CA assigned to phase a/b/c of the bus;
* ZIP load models are all treated as constant power.

Run ``python tools/make_feeders.py`` from the repository root.
"""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "gldf" / "data"
FT_PER_MILE = 5280.0
SWITCH_OHM = (0.001, 0.001)
# Uniform multiplier on the spot loads; with the regulators at unity tap the
# full IEEE loading sags well below the voltage band the comparisons assume.
LOAD_SCALE = {"ieee13": 0.42, "ieee37": 0.85, "ieee123": 0.91}


def sym(phases, upper):
    """Expand an upper-triangular ohm/mile table keyed by phase pair."""
    z = {}
    for (p, q), v in upper.items():
        z[p, q] = v
        z[q, p] = v
    return phases, [[z[p, q] for q in phases] for p in phases]


def scaled(cfg, length_ft):
    phases, z = cfg
    f = length_ft / FT_PER_MILE
    return phases, [[[v.real * f, v.imag * f] for v in row] for row in z]


def switch(phases):
    return phases, [
        [list(SWITCH_OHM) if p == q else [0.0, 0.0] for q in phases] for p in phases
    ]


def transformer(phases, kva, kv, r_pct, x_pct):
    zb = kv**2 * 1000.0 / kva
    r, x = r_pct / 100 * zb, x_pct / 100 * zb
    return phases, [[[r, x] if p == q else [0.0, 0.0] for q in phases] for p in phases]


def feeder(name, base_kva, zones, slack, records, loads, caps, bus_zone):
    """Assemble a feeder dict; bus phases follow the incoming line from the slack."""
    adj = {}
    for rec in records:
        adj.setdefault(rec["from"], []).append(rec)
        adj.setdefault(rec["to"], []).append(rec)
    phases = {slack: "abc"}
    order = [slack]
    stack = [slack]
    oriented = []
    seen = {slack}
    while stack:
        b = stack.pop(0)
        for rec in adj.get(b, []):
            other = rec["to"] if rec["from"] == b else rec["from"]
            if other in seen:
                continue
            seen.add(other)
            phases[other] = rec["phases"]
            order.append(other)
            stack.append(other)
            oriented.append(rec)
    assert len(oriented) == len(records), f"{name}: not a tree"
    buses = []
    for b in order:
        rec = {"id": b, "phases": phases[b], "zone": bus_zone.get(b, "primary")}
        if b in loads:
            kw, kvar = {}, {}
            for ph, (p, q) in zip("abc", loads[b]):
                if p or q:
                    assert ph in phases[b], f"{name}: load on missing phase {b}{ph}"
                    kw[ph], kvar[ph] = p, q
            rec["load_kw"], rec["load_kvar"] = kw, kvar
        if b in caps:
            rec["shunt_kvar"] = {ph: q for ph, q in zip("abc", caps[b]) if q}
        buses.append(rec)
    return {
        "name": name,
        "base_kva": base_kva,
        "load_scale": LOAD_SCALE[name],
        "zones": zones,
        "slack": {"bus": slack, "vm_pu": [1.0, 1.0, 1.0], "va_deg": [0.0, -120.0, 120.0]},
        "buses": buses,
        "lines": records,
    }


def line(a, b, cfg, kind="line"):
    phases, z = cfg
    return {"id": f"{a}-{b}", "from": a, "to": b, "phases": phases, "kind": kind, "z_ohm": z}


def ieee13():
    c601 = sym("abc", {
        ("a", "a"): 0.3465 + 1.0179j, ("b", "b"): 0.3375 + 1.0478j, ("c", "c"): 0.3414 + 1.0348j,
        ("a", "b"): 0.1560 + 0.5017j, ("a", "c"): 0.1580 + 0.4236j, ("b", "c"): 0.1535 + 0.3849j})
    c602 = sym("abc", {
        ("a", "a"): 0.7526 + 1.1814j, ("b", "b"): 0.7475 + 1.1983j, ("c", "c"): 0.7436 + 1.2112j,
        ("a", "b"): 0.1580 + 0.4236j, ("a", "c"): 0.1560 + 0.5017j, ("b", "c"): 0.1535 + 0.3849j})
    c603 = sym("bc", {("b", "b"): 1.3294 + 1.3471j, ("c", "c"): 1.3238 + 1.3569j,
                      ("b", "c"): 0.2066 + 0.4591j})
    c604 = sym("ac", {("a", "a"): 1.3238 + 1.3569j, ("c", "c"): 1.3294 + 1.3471j,
                      ("a", "c"): 0.2066 + 0.4591j})
    c605 = sym("c", {("c", "c"): 1.3292 + 1.3475j})
    c606 = sym("abc", {
        ("a", "a"): 0.7982 + 0.4463j, ("b", "b"): 0.7891 + 0.4041j, ("c", "c"): 0.7982 + 0.4463j,
        ("a", "b"): 0.3192 + 0.0328j, ("a", "c"): 0.2849 - 0.0143j, ("b", "c"): 0.3192 + 0.0328j})
    c607 = sym("a", {("a", "a"): 1.3425 + 0.5124j})
    records = [
        line("650", "632", scaled(c601, 2000)),
        line("632", "633", scaled(c602, 500)),
        line("633", "634", transformer("abc", 500, 4.16, 1.1, 2.0), "transformer"),
        line("632", "645", scaled(c603, 500)),
        line("645", "646", scaled(c603, 300)),
        line("632", "671", scaled(c601, 2000)),
        line("671", "680", scaled(c601, 1000)),
        line("671", "684", scaled(c604, 300)),
        line("684", "611", scaled(c605, 300)),
        line("684", "652", scaled(c607, 800)),
        line("671", "692", switch("abc"), "switch"),
        line("692", "675", scaled(c606, 500)),
    ]
    loads = {
        "634": [(160, 110), (120, 90), (120, 90)],
        "645": [(0, 0), (170, 125), (0, 0)],
        "646": [(0, 0), (230, 132), (0, 0)],
        "652": [(128, 86), (0, 0), (0, 0)],
        # spot 385/220 per phase plus the 632-671 distributed load lumped here
        "671": [(385 + 17, 220 + 10), (385 + 66, 220 + 38), (385 + 117, 220 + 68)],
        "675": [(485, 190), (68, 60), (290, 212)],
        "692": [(0, 0), (0, 0), (170, 151)],
        "611": [(0, 0), (0, 0), (170, 80)],
    }
    caps = {"675": (200, 200, 200), "611": (0, 0, 100)}
    zones = {"primary": {"base_kv": 4.16}, "lv": {"base_kv": 0.48}}
    return feeder("ieee13", 5000.0, zones, "650", records, loads, caps, {"634": "lv"})


def ieee37():
    def cable(zs, zm_ab, zm_ac, zs_b):
        return sym("abc", {
            ("a", "a"): zs, ("b", "b"): zs_b, ("c", "c"): zs,
            ("a", "b"): zm_ab, ("b", "c"): zm_ab, ("a", "c"): zm_ac})

    cfg = {
        "721": cable(0.2926 + 0.1973j, 0.0673 - 0.0368j, 0.0337 - 0.0417j, 0.2646 + 0.1900j),
        "722": cable(0.4751 + 0.2973j, 0.1629 - 0.0326j, 0.1234 - 0.0607j, 0.4488 + 0.2678j),
        "723": cable(1.2936 + 0.6713j, 0.4871 + 0.2111j, 0.4585 + 0.1521j, 1.3022 + 0.6326j),
        "724": cable(2.0952 + 0.7758j, 0.5204 + 0.2738j, 0.4926 + 0.2123j, 2.1068 + 0.7398j),
    }
    segments = [
        ("799", "701", 1850, "721"), ("701", "702", 960, "722"), ("702", "705", 400, "724"),
        ("702", "713", 360, "723"), ("702", "703", 1320, "722"), ("703", "727", 240, "724"),
        ("703", "730", 600, "723"), ("704", "714", 80, "724"), ("704", "720", 800, "723"),
        ("705", "742", 320, "724"), ("705", "712", 240, "724"), ("706", "725", 280, "724"),
        ("707", "724", 760, "724"), ("707", "722", 120, "724"), ("708", "733", 320, "723"),
        ("708", "732", 320, "724"), ("709", "731", 600, "723"), ("709", "708", 320, "723"),
        ("710", "735", 200, "724"), ("710", "736", 1280, "724"), ("711", "741", 400, "723"),
        ("711", "740", 200, "724"), ("713", "704", 520, "723"), ("714", "718", 520, "724"),
        ("720", "707", 920, "724"), ("720", "706", 600, "723"), ("727", "744", 280, "723"),
        ("730", "709", 200, "723"), ("733", "734", 560, "723"), ("734", "737", 640, "723"),
        ("734", "710", 520, "724"), ("737", "738", 400, "723"), ("738", "711", 400, "723"),
        ("744", "728", 200, "724"), ("744", "729", 280, "724"),
    ]
    records = [line(a, b, scaled(cfg[c], ln)) for a, b, ln, c in segments]
    records.append(line("709", "775", transformer("abc", 500, 4.8, 0.09, 1.81), "transformer"))
    # delta loads: AB -> a, BC -> b, CA -> c
    raw = {
        "701": (140, 70, 140, 70, 350, 175), "712": (0, 0, 0, 0, 85, 40),
        "713": (0, 0, 0, 0, 85, 40), "714": (17, 8, 21, 10, 0, 0),
        "718": (85, 40, 0, 0, 0, 0), "720": (0, 0, 0, 0, 85, 40),
        "722": (0, 0, 140, 70, 21, 10), "724": (0, 0, 42, 21, 0, 0),
        "725": (0, 0, 42, 21, 0, 0), "727": (0, 0, 0, 0, 42, 21),
        "728": (42, 21, 42, 21, 42, 21), "729": (42, 21, 0, 0, 0, 0),
        "730": (0, 0, 0, 0, 85, 40), "731": (0, 0, 85, 40, 0, 0),
        "732": (0, 0, 0, 0, 42, 21), "733": (85, 40, 0, 0, 0, 0),
        "734": (0, 0, 0, 0, 42, 21), "735": (0, 0, 0, 0, 85, 40),
        "736": (0, 0, 42, 21, 0, 0), "737": (140, 70, 0, 0, 0, 0),
        "738": (126, 62, 0, 0, 0, 0), "740": (0, 0, 0, 0, 85, 40),
        "741": (0, 0, 0, 0, 42, 21), "742": (8, 4, 85, 40, 0, 0),
        "744": (42, 21, 0, 0, 0, 0),
    }
    loads = {b: [(v[0], v[1]), (v[2], v[3]), (v[4], v[5])] for b, v in raw.items()}
    zones = {"primary": {"base_kv": 4.8}, "lv": {"base_kv": 0.48}}
    return feeder("ieee37", 5000.0, zones, "799", records, loads, {}, {"775": "lv"})


def ieee123():
    s1, s2, s3 = 0.4576 + 1.0780j, 0.4666 + 1.0482j, 0.4615 + 1.0651j
    m1, m2, m3 = 0.1560 + 0.5017j, 0.1580 + 0.4236j, 0.1535 + 0.3849j

    def overhead(order):
        # conductor positions 1..3 hold phases in `order`
        selfs, muts = (s1, s2, s3), {(0, 1): m1, (1, 2): m2, (0, 2): m3}
        upper = {}
        for i, p in enumerate(order):
            upper[p, p] = selfs[i]
            for j in range(i + 1, len(order)):
                upper[p, order[j]] = muts[i, j]
        return sym("abc", {tuple(sorted(k)): v for k, v in upper.items()})

    cfg = {
        1: overhead("abc"),  # A B C N
        2: overhead("cab"),  # C A B N
        3: overhead("bca"),  # B C A N
        4: overhead("cba"),  # C B A N
        5: overhead("bac"),  # B A C N
        6: overhead("acb"),  # A C B N
        7: sym("ac", {("a", "a"): s1, ("c", "c"): s3, ("a", "c"): m3}),
        8: sym("ab", {("a", "a"): s1, ("b", "b"): s3, ("a", "b"): m3}),
        9: sym("a", {("a", "a"): 1.3292 + 1.3475j}),
        10: sym("b", {("b", "b"): 1.3292 + 1.3475j}),
        11: sym("c", {("c", "c"): 1.3292 + 1.3475j}),
        12: sym("abc", {("a", "a"): 1.5209 + 0.7521j, ("b", "b"): 1.5329 + 0.7162j,
                        ("c", "c"): 1.5209 + 0.7521j, ("a", "b"): 0.5198 + 0.2775j,
                        ("b", "c"): 0.5198 + 0.2775j, ("a", "c"): 0.4924 + 0.2157j}),
    }
    segments = [
        (1, 2, 175, 10), (1, 3, 250, 11), (1, 7, 300, 1), (3, 4, 200, 11), (3, 5, 325, 11),
        (5, 6, 250, 11), (7, 8, 200, 1), (8, 12, 225, 10), (8, 9, 225, 9), (8, 13, 300, 1),
        (9, 14, 425, 9), (13, 34, 150, 11), (13, 18, 825, 2), (14, 11, 250, 9),
        (14, 10, 250, 9), (15, 16, 375, 11), (15, 17, 350, 11), (18, 19, 250, 9),
        (18, 21, 300, 2), (19, 20, 325, 9), (21, 22, 525, 10), (21, 23, 250, 2),
        (23, 24, 550, 11), (23, 25, 275, 2), (25, 26, 350, 7), (25, 28, 200, 2),
        (26, 27, 275, 7), (26, 31, 225, 11), (27, 33, 500, 9), (28, 29, 300, 2),
        (29, 30, 350, 2), (30, 250, 200, 2), (31, 32, 300, 11), (34, 15, 100, 11),
        (35, 36, 650, 8), (35, 40, 250, 1), (36, 37, 300, 9), (36, 38, 250, 10),
        (38, 39, 325, 10), (40, 41, 325, 11), (40, 42, 250, 1), (42, 43, 500, 10),
        (42, 44, 200, 1), (44, 45, 200, 9), (44, 47, 250, 1), (45, 46, 300, 9),
        (47, 48, 150, 4), (47, 49, 250, 4), (49, 50, 250, 4), (50, 51, 250, 4),
        (52, 53, 200, 1), (53, 54, 125, 1), (54, 55, 275, 1), (54, 57, 350, 3),
        (55, 56, 275, 1), (57, 58, 250, 10), (57, 60, 750, 3), (58, 59, 250, 10),
        (60, 61, 550, 5), (60, 62, 250, 12), (62, 63, 175, 12), (63, 64, 350, 12),
        (64, 65, 425, 12), (65, 66, 325, 12), (67, 68, 200, 9), (67, 72, 275, 3),
        (67, 97, 250, 3), (68, 69, 275, 9), (69, 70, 325, 9), (70, 71, 275, 9),
        (72, 73, 275, 11), (72, 76, 200, 3), (73, 74, 350, 11), (74, 75, 400, 11),
        (76, 77, 400, 6), (76, 86, 700, 3), (77, 78, 100, 6), (78, 79, 225, 6),
        (78, 80, 475, 6), (80, 81, 475, 6), (81, 82, 250, 6), (81, 84, 675, 11),
        (82, 83, 250, 6), (84, 85, 475, 11), (86, 87, 450, 6), (87, 88, 175, 9),
        (87, 89, 275, 6), (89, 90, 225, 10), (89, 91, 225, 6), (91, 92, 300, 11),
        (91, 93, 225, 6), (93, 94, 275, 9), (93, 95, 300, 6), (95, 96, 200, 10),
        (97, 98, 275, 3), (98, 99, 550, 3), (99, 100, 300, 3), (100, 450, 800, 3),
        (101, 102, 225, 11), (101, 105, 275, 3), (102, 103, 325, 11), (103, 104, 700, 11),
        (105, 106, 225, 10), (105, 108, 325, 3), (106, 107, 575, 10), (108, 109, 450, 9),
        (108, 300, 1000, 3), (109, 110, 300, 9), (110, 111, 575, 9), (110, 112, 125, 9),
        (112, 113, 525, 9), (113, 114, 325, 9), (135, 35, 375, 4), (149, 1, 400, 1),
        (152, 52, 400, 1), (160, 67, 350, 6), (197, 101, 250, 3),
    ]
    records = [line(str(a), str(b), scaled(cfg[c], ln)) for a, b, ln, c in segments]
    for a, b in [(13, 152), (18, 135), (60, 160), (97, 197)]:
        records.append(line(str(a), str(b), switch("abc"), "switch"))
    records.append(line("150", "149", switch("abc"), "regulator"))
    records.append(line("61", "610", transformer("abc", 150, 4.16, 1.27, 2.72), "transformer"))
    raw = {
        1: (40, 20, 0, 0, 0, 0), 2: (0, 0, 20, 10, 0, 0), 4: (0, 0, 0, 0, 40, 20),
        5: (0, 0, 0, 0, 20, 10), 6: (0, 0, 0, 0, 40, 20), 7: (20, 10, 0, 0, 0, 0),
        9: (40, 20, 0, 0, 0, 0), 10: (20, 10, 0, 0, 0, 0), 11: (40, 20, 0, 0, 0, 0),
        12: (0, 0, 20, 10, 0, 0), 16: (0, 0, 0, 0, 40, 20), 17: (0, 0, 0, 0, 20, 10),
        19: (40, 20, 0, 0, 0, 0), 20: (40, 20, 0, 0, 0, 0), 22: (0, 0, 40, 20, 0, 0),
        24: (0, 0, 0, 0, 40, 20), 28: (40, 20, 0, 0, 0, 0), 29: (40, 20, 0, 0, 0, 0),
        30: (0, 0, 0, 0, 40, 20), 31: (0, 0, 0, 0, 20, 10), 32: (0, 0, 0, 0, 20, 10),
        33: (40, 20, 0, 0, 0, 0), 34: (0, 0, 0, 0, 40, 20), 35: (40, 20, 0, 0, 0, 0),
        37: (40, 20, 0, 0, 0, 0), 38: (0, 0, 20, 10, 0, 0), 39: (0, 0, 20, 10, 0, 0),
        41: (0, 0, 0, 0, 20, 10), 42: (20, 10, 0, 0, 0, 0), 43: (0, 0, 40, 20, 0, 0),
        45: (20, 10, 0, 0, 0, 0), 46: (20, 10, 0, 0, 0, 0), 47: (35, 25, 35, 25, 35, 25),
        48: (70, 50, 70, 50, 70, 50), 49: (35, 25, 70, 50, 35, 20), 50: (0, 0, 0, 0, 40, 20),
        51: (20, 10, 0, 0, 0, 0), 52: (40, 20, 0, 0, 0, 0), 53: (40, 20, 0, 0, 0, 0),
        55: (20, 10, 0, 0, 0, 0), 56: (0, 0, 20, 10, 0, 0), 58: (0, 0, 20, 10, 0, 0),
        59: (0, 0, 20, 10, 0, 0), 60: (20, 10, 0, 0, 0, 0), 62: (0, 0, 0, 0, 40, 20),
        63: (40, 20, 0, 0, 0, 0), 64: (0, 0, 75, 35, 0, 0), 65: (35, 25, 35, 25, 70, 50),
        66: (0, 0, 0, 0, 75, 35), 68: (20, 10, 0, 0, 0, 0), 69: (40, 20, 0, 0, 0, 0),
        70: (20, 10, 0, 0, 0, 0), 71: (40, 20, 0, 0, 0, 0), 73: (0, 0, 0, 0, 40, 20),
        74: (0, 0, 0, 0, 40, 20), 75: (0, 0, 0, 0, 40, 20), 76: (105, 80, 70, 50, 70, 50),
        77: (0, 0, 40, 20, 0, 0), 79: (40, 20, 0, 0, 0, 0), 80: (0, 0, 40, 20, 0, 0),
        82: (40, 20, 0, 0, 0, 0), 83: (0, 0, 0, 0, 20, 10), 84: (0, 0, 0, 0, 20, 10),
        85: (0, 0, 0, 0, 40, 20), 86: (0, 0, 20, 10, 0, 0), 87: (0, 0, 40, 20, 0, 0),
        88: (40, 20, 0, 0, 0, 0), 90: (0, 0, 40, 20, 0, 0), 92: (0, 0, 0, 0, 40, 20),
        94: (40, 20, 0, 0, 0, 0), 95: (0, 0, 20, 10, 0, 0), 96: (0, 0, 20, 10, 0, 0),
        98: (40, 20, 0, 0, 0, 0), 99: (0, 0, 40, 20, 0, 0), 100: (0, 0, 0, 0, 40, 20),
        102: (0, 0, 0, 0, 20, 10), 103: (0, 0, 0, 0, 40, 20), 104: (0, 0, 0, 0, 40, 20),
        106: (0, 0, 40, 20, 0, 0), 107: (0, 0, 40, 20, 0, 0), 109: (40, 20, 0, 0, 0, 0),
        111: (20, 10, 0, 0, 0, 0), 112: (20, 10, 0, 0, 0, 0), 113: (40, 20, 0, 0, 0, 0),
        114: (20, 10, 0, 0, 0, 0),
    }
    loads = {str(b): [(v[0], v[1]), (v[2], v[3]), (v[4], v[5])] for b, v in raw.items()}
    caps = {"83": (200, 200, 200), "88": (50, 0, 0), "90": (0, 50, 0), "92": (0, 0, 50)}
    zones = {"primary": {"base_kv": 4.16}, "lv": {"base_kv": 0.48}}
    return feeder("ieee123", 5000.0, zones, "150", records, loads, caps, {"610": "lv"})


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for build in (ieee13, ieee37, ieee123):
        data = build()
        path = OUT / f"{data['name']}.json"
        path.write_text(json.dumps(data, indent=1) + "\n")
        kw = [sum(b.get("load_kw", {}).get(p, 0) for b in data["buses"]) for p in "abc"]
        kvar = [sum(b.get("load_kvar", {}).get(p, 0) for b in data["buses"]) for p in "abc"]
        print(f"{path.name}: {len(data['buses'])} buses, {len(data['lines'])} lines, "
              f"kW {kw}, kvar {kvar}")


if __name__ == "__main__":
    main()
