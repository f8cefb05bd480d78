#!/usr/bin/env python3
"""Counts nodes and edges of a GraphML file with a plain XML scan."""
import argparse
import hashlib
import json
import xml.etree.ElementTree as ET

NS = "{http://graphml.graphdrawing.org/xmlns}"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("graphml")
    ap.add_argument("out")
    args = ap.parse_args()
    nodes = edges = 0
    for _, elem in ET.iterparse(args.graphml, events=("end",)):
        if elem.tag == NS + "node":
            nodes += 1
            elem.clear()
        elif elem.tag == NS + "edge":
            edges += 1
            elem.clear()
    with open(args.graphml, "rb") as f:
        digest = hashlib.sha256(f.read()).hexdigest()
    with open(args.out, "w") as f:
        json.dump({"file": args.graphml.rsplit("/", 1)[-1], "nodes": nodes, "edges": edges, "sha256": digest}, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
