"""Download the political-books co-purchase network and convert it into a
dataset directory (data/polbooks/) that the CLI and tests can load.

The network is V. Krebs' map of 105 books about US politics sold online,
with an edge between books frequently bought together; M. Newman hosts the
GML file. Each book carries a leaning tag (l / n / c) used as its class.

Usage: python3 scripts/fetch_polbooks.py [dest-dir]
"""

import io
import os
import re
import sys
import urllib.error
import urllib.request
import zipfile

SOURCES = (
    "https://websites.umich.edu/~mejn/netdata/polbooks.zip",
    "http://www-personal.umich.edu/~mejn/netdata/polbooks.zip",
)

EXPECTED_NODES = 105
EXPECTED_EDGES = 441


def download():
    last = None
    for url in SOURCES:
        try:
            print(f"fetching {url}")
            with urllib.request.urlopen(url, timeout=30) as resp:
                return resp.read()
        except (urllib.error.URLError, OSError) as exc:
            print(f"  failed: {exc}")
            last = exc
    raise SystemExit(f"could not download polbooks from any source: {last}")


def parse_gml(text):
    """The node/edge subset of GML that this file actually uses."""
    nodes, edges = {}, []
    for block in re.finditer(r"(node|edge)\s*\[(.*?)\]", text, re.DOTALL):
        kind, body = block.group(1), block.group(2)
        fields = dict(re.findall(r'(\w+)\s+("[^"]*"|\S+)', body))
        if kind == "node":
            nodes[int(fields["id"])] = fields["value"].strip('"')
        else:
            edges.append((int(fields["source"]), int(fields["target"])))
    return nodes, edges


def main():
    dest = sys.argv[1] if len(sys.argv) > 1 else os.path.join("data", "polbooks")
    blob = download()
    with zipfile.ZipFile(io.BytesIO(blob)) as zf:
        name = next(n for n in zf.namelist() if n.endswith(".gml"))
        text = zf.read(name).decode("utf-8", errors="replace")

    nodes, edges = parse_gml(text)
    if len(nodes) != EXPECTED_NODES or len(edges) != EXPECTED_EDGES:
        raise SystemExit(
            f"unexpected shape: {len(nodes)} nodes / {len(edges)} edges "
            f"(the published network has {EXPECTED_NODES} / {EXPECTED_EDGES}); "
            "refusing to write a dataset that differs from the source")

    os.makedirs(dest, exist_ok=True)
    with open(os.path.join(dest, "edges.txt"), "w") as fh:
        fh.write("# political-books co-purchase network\n")
        for u, v in edges:
            fh.write(f"{u} {v}\n")
    with open(os.path.join(dest, "labels.txt"), "w") as fh:
        fh.write("# leaning tags: l=liberal, n=neutral, c=conservative\n")
        for v in sorted(nodes):
            fh.write(f"{v} {nodes[v]}\n")

    hist = {}
    for tag in nodes.values():
        hist[tag] = hist.get(tag, 0) + 1
    print(f"wrote {dest}: {len(nodes)} nodes, {len(edges)} edges, "
          f"classes {dict(sorted(hist.items()))}")


if __name__ == "__main__":
    main()
