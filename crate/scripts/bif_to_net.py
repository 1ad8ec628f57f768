#!/usr/bin/env python3
"""Convert a discrete BIF network into the line-oriented .net format.

Usage: bif_to_net.py INPUT.bif [--rename MAP.tsv] > OUTPUT.net

The optional rename map is a two-column TSV (old name, new name). CPT rows are
emitted with the last parent varying fastest.
"""
import argparse
import itertools
import re
import sys


def parse_bif(text):
    variables = {}
    order = []
    for m in re.finditer(r"variable\s+(\S+)\s*\{\s*type\s+discrete\s*\[\s*\d+\s*\]\s*\{([^}]*)\}", text):
        name = m.group(1)
        states = [s.strip() for s in m.group(2).split(",") if s.strip()]
        variables[name] = states
        order.append(name)
    cpts = {}
    for m in re.finditer(r"probability\s*\(\s*([^|)]+?)\s*(?:\|\s*([^)]*))?\)\s*\{([^}]*)\}", text):
        child = m.group(1).strip()
        parents = [p.strip() for p in (m.group(2) or "").split(",") if p.strip()]
        body = m.group(3)
        rows = {}
        table = re.search(r"table\s+([^;]*);", body)
        if table:
            probs = [float(x) for x in table.group(1).replace(",", " ").split()]
            card = len(variables[child])
            configs = list(itertools.product(*[variables[p] for p in parents]))
            # BIF "table" lists the child state slowest; regroup per parent config.
            n_cfg = max(1, len(configs))
            for ci, cfg in enumerate(configs or [()]):
                rows[tuple(cfg)] = [probs[s * n_cfg + ci] for s in range(card)]
        for r in re.finditer(r"\(([^)]*)\)\s*([^;]*);", body):
            cfg = tuple(s.strip() for s in r.group(1).split(","))
            rows[cfg] = [float(x) for x in r.group(2).replace(",", " ").split()]
        cpts[child] = (parents, rows)
    return order, variables, cpts


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("input")
    ap.add_argument("--rename")
    args = ap.parse_args()
    text = open(args.input, encoding="utf-8").read()
    order, variables, cpts = parse_bif(text)
    rename = {}
    if args.rename:
        for line in open(args.rename, encoding="utf-8"):
            line = line.strip()
            if line and not line.startswith("#"):
                old, new = line.split()
                rename[old] = new
    nm = lambda v: rename.get(v, v)
    out = sys.stdout
    for v in order:
        out.write(f"VAR {nm(v)} {' '.join(variables[v])}\n")
    out.write("\n")
    for v in order:
        parents, rows = cpts[v]
        out.write(f"PARENTS {nm(v)} {' '.join(nm(p) for p in parents)}".rstrip() + "\n")
        out.write(f"CPT {nm(v)}\n")
        for cfg in itertools.product(*[variables[p] for p in parents]):
            out.write(" ".join(repr(x) for x in rows[tuple(cfg)]) + "\n")
        out.write("\n")


if __name__ == "__main__":
    main()
