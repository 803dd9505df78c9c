"""Brute-force per-notebook counts and lower medians for mini_corpus/."""
import glob
import json
import os
import re

here = os.path.dirname(os.path.abspath(__file__))


def plain(line):
    line = re.sub(r"^\s*#{1,6}( |$)", "", line)
    line = line.replace("![", "[")
    line = re.sub(r"\[([^\]]*)\]\([^)]*\)", r"\1", line)
    line = re.sub(r"<[A-Za-z/][^>]*>", " ", line)
    line = line.replace("`", "").replace("*", "").replace("~~", "")
    return re.sub(r"(?<![A-Za-z0-9])_|_(?![A-Za-z0-9])", "", line)


def text(src):
    return "".join(src) if isinstance(src, list) else src


rows = []
for path in sorted(glob.glob(os.path.join(here, "mini_corpus", "*.ipynb"))):
    cells = json.load(open(path))["cells"]
    md = [text(c["source"]) for c in cells if c["cell_type"] == "markdown"]
    rows.append({
        "notebook_id": os.path.splitext(os.path.basename(path))[0],
        "total_cells": len(cells),
        "code_cells": sum(c["cell_type"] == "code" for c in cells),
        "markdown_cells": len(md),
        "markdown_words": sum(len(plain(l).split()) for s in md for l in s.splitlines()),
    })


def lower_median(values):
    v = sorted(values)
    return v[(len(v) - 1) // 2]


keys = ["total_cells", "code_cells", "markdown_cells", "markdown_words"]
snapshot = {"notebooks": rows, "medians": {k: lower_median([r[k] for r in rows]) for k in keys}}
with open(os.path.join(here, "mini_corpus_stats.json"), "w") as f:
    json.dump(snapshot, f, indent=1)
    f.write("\n")
