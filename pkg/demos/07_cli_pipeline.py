# %% [markdown]
# # The full command-line pipeline on the fixture corpus
# Same as running `exploitwatch ingest|ground-truth|experiment --config config.toml`.

# %%
import json
import shutil
import tempfile
from pathlib import Path

from exploitwatch.cli import main

src = Path(__file__).resolve().parent.parent / "fixtures" / "corpus"
work = Path(tempfile.mkdtemp()) / "corpus"
shutil.copytree(src, work, ignore=shutil.ignore_patterns("out"))
cfg = str(work / "config.toml")

# %%
for command in ("ingest", "ground-truth", "experiment"):
    print(command, "->", main([command, "--config", cfg]))

# %%
report = json.loads((work / "out" / "report.json").read_text())
for key, res in report["results"].items():
    print(key, {k: round(v, 3) for k, v in res["mean"].items()})
print(report["ttest"])
