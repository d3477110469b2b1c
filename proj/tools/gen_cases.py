#!/usr/bin/env python3
"""Regenerate the two large synthetic feeder fixtures.

Both cases are deterministic functions of nothing: values come from fixed
arithmetic patterns, so rerunning the script reproduces the shipped files
byte for byte.

Usage: python3 tools/gen_cases.py [cases-dir]
"""
import json
import sys
from pathlib import Path


def bus(i, p, q, w):
    return {"id": i, "p_load": p, "q_load": q, "weight": w}


def line(i, a, b, r, p_max):
    return {"id": i, "from": a, "to": b, "r": r, "p_max": p_max}


def weight_for(i, critical, important):
    if i in critical:
        return 100.0
    if i in important:
        return 10.0
    return 1.0


def mesh32():
    """32 buses, 36 lines (31-line spanning tree + 5 ties): 5 meshes."""
    buses = [bus(1, 0.0, 0.0, 0.0)]
    critical = {7, 24, 30}
    important = {4, 14, 21, 28}
    for i in range(2, 33):
        p = round(0.02 + 0.002 * ((i * 7) % 13), 4)
        q = round(0.4 * p, 5)
        buses.append(bus(i, p, q, weight_for(i, critical, important)))

    lines = []
    lid = 1

    def chain(ids, r, cap):
        nonlocal lid
        for a, b in zip(ids, ids[1:]):
            lines.append(line(lid, a, b, r, cap))
            lid += 1

    chain(list(range(1, 19)), 0.008, 5.0)          # trunk 1..18
    chain([2] + list(range(19, 23)), 0.012, 1.0)   # lateral off bus 2
    chain([3] + list(range(23, 26)), 0.012, 1.0)   # lateral off bus 3
    chain([6] + list(range(26, 33)), 0.010, 1.5)   # lateral off bus 6
    for a, b in [(8, 21), (9, 15), (12, 22), (18, 32), (25, 29)]:
        lines.append(line(lid, a, b, 0.02, 1.0))
        lid += 1

    return {
        "meta": {"name": "mesh32", "base_mva": 10.0},
        "w0": 0.001,
        "buses": buses,
        "lines": lines,
        "sources": [
            {"bus": 1, "p_max": 5.0, "q_max": 3.0},
            {"bus": 14, "p_max": 0.5, "q_max": 0.3},
            {"bus": 30, "p_max": 0.5, "q_max": 0.3},
        ],
    }


def mesh123():
    """123 buses, 124 lines (122-line spanning tree + 2 ties): 2 meshes."""
    buses = [bus(1, 0.0, 0.0, 0.0)]
    critical = {15, 33, 47, 66, 82, 95, 104, 117}
    important = {5, 20, 28, 41, 55, 71, 88, 99, 110, 120}
    for i in range(2, 124):
        p = round(0.008 + 0.001 * ((i * 5) % 11), 4)
        q = round(0.35 * p, 5)
        buses.append(bus(i, p, q, weight_for(i, critical, important)))

    lines = []
    lid = 1

    def chain(ids, r, cap):
        nonlocal lid
        for a, b in zip(ids, ids[1:]):
            lines.append(line(lid, a, b, r, cap))
            lid += 1

    chain(list(range(1, 61)), 0.006, 4.0)            # trunk 1..60
    chain([10] + list(range(61, 91)), 0.009, 1.5)    # branch off bus 10
    chain([25] + list(range(91, 111)), 0.009, 1.5)   # branch off bus 25
    chain([40] + list(range(111, 124)), 0.009, 1.0)  # branch off bus 40
    lines.append(line(lid, 90, 110, 0.02, 1.0))      # tie
    lid += 1
    lines.append(line(lid, 60, 123, 0.02, 1.0))      # tie

    return {
        "meta": {"name": "mesh123", "base_mva": 10.0},
        "w0": 0.001,
        "buses": buses,
        "lines": lines,
        "sources": [
            {"bus": 1, "p_max": 4.0, "q_max": 2.0},
            {"bus": 75, "p_max": 0.4, "q_max": 0.2},
            {"bus": 100, "p_max": 0.4, "q_max": 0.2},
            {"bus": 118, "p_max": 0.3, "q_max": 0.15},
        ],
    }


def main():
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("cases")
    for case in (mesh32(), mesh123()):
        path = out_dir / f"{case['meta']['name']}.json"
        path.write_text(json.dumps(case, indent=2) + "\n")
        print(f"wrote {path}: {len(case['buses'])} buses, {len(case['lines'])} lines")


if __name__ == "__main__":
    main()
