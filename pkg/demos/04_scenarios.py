"""
Scenario files and reproducible output
======================================

Every run is described by a JSON document. Presets cover the standard
parameter sets; a run writes moments.csv and metadata.json, and reruns of
the same configuration are byte-identical.
"""

# %%
import filecmp
import json
import os
import tempfile

from bohmstat.scenario import list_presets, load_preset, parse_scenario, run_scenario, serialize

for name, description in list_presets():
    print(f"{name:8s} {description}")

# %%
# A preset is an ordinary config: serialize it, edit it, parse it back.
doc = json.loads(serialize(load_preset("fig2")))
doc["name"] = "small-packet"
doc["sampler"]["n"] = 100
cfg = parse_scenario(json.dumps(doc))
print("digest:", cfg.digest())

# %%
with tempfile.TemporaryDirectory() as tmp:
    first = run_scenario(cfg, os.path.join(tmp, "a"))
    second = run_scenario(cfg, os.path.join(tmp, "b"))
    print(open(os.path.join(first, "moments.csv")).read().splitlines()[:3])
    print("identical:", filecmp.cmp(os.path.join(first, "moments.csv"),
                                    os.path.join(second, "moments.csv"), shallow=False))
