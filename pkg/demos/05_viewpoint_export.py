"""Projecting a model onto the architectural viewpoints.

Each projection selects a slice of the model and renders to Graphviz
DOT. tcv shows a chain's threats against the constituents they touch,
fav overlays activation and detection regions on the activity graphs,
ftcv restricts the structural view to one chain's participants, fts
and fef lay out the whole taxonomy, and erroneous-scenario renders an
actual simulated run.

Run:  python3 demos/05_viewpoint_export.py
"""

import tempfile
from pathlib import Path

from fmaf import SimConfig, VIEW_KINDS, load_bundle, project, run, to_dot

bundle = load_bundle("fault3")
model = bundle.model
out_dir = Path(tempfile.mkdtemp())

print(f"view kinds: {', '.join(VIEW_KINDS)}")
print()

# Chain-focused views take a chain id; fts and fef cover the whole
# model; erroneous-scenario renders one simulated trace.
trace = run(model, bundle.scenarios["F3.2"])
jobs = [
    ("tcv", "F3.2", None),
    ("ftcv", "F3.2", None),
    ("fav", "F3.2", None),
    ("recovery", "F3.2", None),
    ("erroneous-process", "F3.2", None),
    ("fts", None, None),
    ("fef", None, None),
    ("erroneous-scenario", None, trace),
]
for kind, focus, trace_arg in jobs:
    graph = project(model, kind, focus=focus, trace=trace_arg)
    dot = to_dot(graph)
    name = kind if focus is None else f"{kind}-{focus}"
    path = out_dir / f"{name}.dot"
    path.write_text(dot)
    print(f"{name:<26} {len(graph.nodes):>3} nodes {len(graph.edges):>3} edges"
          f" {len(graph.clusters)} clusters -> {path.name}")
print()

# The fav view marks where a chain can activate and which regions each
# detector watches. F3.2 declares its two detections shared-style, so
# both collapse into one detection region.
fav = project(model, "fav", focus="F3.2")
for cluster in fav.clusters:
    print(f"fav cluster {cluster.id}: kind={cluster.kind}, "
          f"{len(cluster.members)} members")
print()

print(f"DOT files in {out_dir}, render with e.g.")
print(f"  dot -Tsvg {out_dir}/tcv-F3.2.dot -o tcv.svg")
print()
print("first lines of tcv-F3.2.dot:")
for line in (out_dir / "tcv-F3.2.dot").read_text().splitlines()[:10]:
    print(f"  | {line}")
