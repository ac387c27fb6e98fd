"""The batch pipeline: write tables and a config, then run every stage.

Equivalent shell session::

    ivanet all --config run.json --out out
"""

# %% Two years of toy tables on disk
import json
import tempfile
from pathlib import Path

from ivanet.cli import main
from ivanet.ingest import write_io_table
from ivanet.toy import toy_table

root = Path(tempfile.mkdtemp(prefix="ivanet-demo-"))
manifests = []
for year in (2010, 2011):
    table = toy_table(8, 3, blocks=2, seed=year, year=year)
    manifests.append(str(write_io_table(table, root / "tables" / str(year)).relative_to(root)))

(root / "regions.json").write_text(json.dumps({f"C{i:02d}": "East" if i < 4 else "West" for i in range(8)}))
(root / "run.json").write_text(json.dumps({
    "manifests": manifests,
    "k_min": 60, "k_max": 150, "k_step": 30,
    "size_floor": 5, "seeds": 4, "regions": "regions.json",
}, indent=2))

# %% Run all stages; a second run finds every stage cached
status = main(["all", "--config", str(root / "run.json"), "--out", str(root / "out")])
print("exit status", status)
main(["all", "--config", str(root / "run.json"), "--out", str(root / "out")])

# %% What came out
for path in sorted((root / "out").rglob("*")):
    if path.is_file() and not path.name.startswith("."):
        print(path.relative_to(root / "out"))
print((root / "out" / "integration.csv").read_text().split("\n", 1)[1])
