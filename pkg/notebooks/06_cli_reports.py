# %% [markdown]
# # Running cases and reading reports
# The `folcoh` command wraps the same entry point used here.

# %%
import json
import tempfile
from pathlib import Path

from folcoh import cli

out = Path(tempfile.mkdtemp()) / "hopf.json"
status = cli.main(["run", "--case", "hopf", "--jmax", "2", "--suite", "all", "--trials", "20", "--out", str(out)])
print("exit status", status)

# %%
rep = json.loads(out.read_text())
print(rep["betti"]["h_a_rank"], rep["discrepancies"])
print("worst identity residual:", max(r["residual"] for r in rep["identities"]))
print([(p["name"], p["status"]) for p in rep["properties"] if p["status"] != "pass"])

# %%
print(out.with_suffix(".spectra.csv").read_text().splitlines()[:4])

# %%
# A paper-table mismatch with a consistent internal battery exits 3.
status = cli.main(["run", "--case", "carriere", "--n-fiber", "6", "--nt", "4", "--out", str(out.with_name("carriere.json"))])
print("exit status", status)
