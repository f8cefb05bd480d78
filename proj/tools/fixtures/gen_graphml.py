#!/usr/bin/env python3
"""Writes a deterministic OSMnx-style street GraphML fixture.

The graph is a jittered 135 x 151 lattice around central Queretaro with
one-way and two-way streets, curved geometries on a share of the edges and
OSMnx attribute names, saved through networkx like osmnx.save_graphml does.
"""
import argparse
import math
import random

import networkx as nx

ROWS, COLS = 135, 151
TWO_WAY = 8653
CENTER = (20.5931, -100.3920)
STEP = 0.00055
HIGHWAYS = ["residential", "tertiary", "secondary", "primary", "unclassified"]
NAMES = ["Avenida Zaragoza", "Calle Madero", "Calle Hidalgo", "Avenida Universidad",
         "Calle Allende", "Calle Corregidora", "Calle Juarez", "Avenida Constituyentes"]


def metres(a, b):
    rad = math.pi / 180.0
    x = (b[1] - a[1]) * rad * math.cos((a[0] + b[0]) / 2 * rad)
    y = (b[0] - a[0]) * rad
    return 6371008.8 * math.hypot(x, y)


def build(seed):
    rng = random.Random(seed)
    g = nx.MultiDiGraph(crs="epsg:4326", created_with="fixture generator", simplified=True)
    coord = {}
    for r in range(ROWS):
        for c in range(COLS):
            osmid = 100000 + r * COLS + c
            lat = round(CENTER[0] + (ROWS / 2 - r) * STEP + rng.uniform(-0.3, 0.3) * STEP, 7)
            lon = round(CENTER[1] + (c - COLS / 2) * STEP + rng.uniform(-0.3, 0.3) * STEP, 7)
            coord[osmid] = (lat, lon)
            g.add_node(osmid, y=lat, x=lon, osmid=osmid, street_count=4 if 0 < r < ROWS - 1 and 0 < c < COLS - 1 else 3)

    pairs = []
    for r in range(ROWS):
        for c in range(COLS):
            u = 100000 + r * COLS + c
            if c + 1 < COLS:
                pairs.append((u, u + 1))
            if r + 1 < ROWS:
                pairs.append((u, u + COLS))
    two_way = set(rng.sample(range(len(pairs)), TWO_WAY))

    way = 500000
    for i, (u, v) in enumerate(pairs):
        if rng.random() < 0.5:
            u, v = v, u
        a, b = coord[u], coord[v]
        pts = [a]
        if rng.random() < 0.3:
            bend = rng.uniform(-0.25, 0.25) * STEP
            for k in range(1, rng.randint(2, 4)):
                f = k / 4
                pts.append((round(a[0] + f * (b[0] - a[0]) + bend, 7), round(a[1] + f * (b[1] - a[1]) - bend, 7)))
        pts.append(b)
        length = round(sum(metres(pts[j - 1], pts[j]) for j in range(1, len(pts))), 3)
        way += 1
        attrs = dict(osmid=way, highway=rng.choice(HIGHWAYS), oneway=i not in two_way,
                     reversed=False, length=length)
        if rng.random() < 0.6:
            attrs["name"] = rng.choice(NAMES)
        if rng.random() < 0.2:
            attrs["lanes"] = str(rng.randint(1, 3))
        if rng.random() < 0.1:
            attrs["maxspeed"] = str(rng.choice([30, 40, 60]))
        geom = None
        if len(pts) > 2:
            geom = "LINESTRING (" + ", ".join(f"{p[1]:.7f} {p[0]:.7f}" for p in pts) + ")"
        g.add_edge(u, v, **attrs, **({"geometry": geom} if geom else {}))
        if i in two_way:
            back = dict(attrs, reversed=True)
            if geom:
                back["geometry"] = "LINESTRING (" + ", ".join(f"{p[1]:.7f} {p[0]:.7f}" for p in reversed(pts)) + ")"
            g.add_edge(v, u, **back)
    return g


def stringify(g):
    # osmnx.save_graphml stores every attribute as a string.
    for key in list(g.graph):
        g.graph[key] = str(g.graph[key])
    for _, data in g.nodes(data=True):
        for key in data:
            data[key] = str(data[key])
    for _, _, data in g.edges(data=True):
        for key in data:
            data[key] = str(data[key])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--seed", type=int, default=76001)
    args = ap.parse_args()
    g = build(args.seed)
    stringify(g)
    nx.write_graphml(g, args.out, encoding="utf-8")


if __name__ == "__main__":
    main()
