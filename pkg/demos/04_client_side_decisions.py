"""
Client-side matching decisions and threshold sweeps
===================================================

The service exposes feature scores, so the client can apply its own global
scoring: a weighted sum with threshold and gap, or a decision tree. With a
truth column a threshold sweep shows the precision/recall trade-off.
"""

import json
import pathlib
import random

from reconkit.client import UserTable, run_reconcile, sweep, write_output
from reconkit.datamodel import load_dataset
from reconkit.globalscore import Leaf, LinearModel, Node
from reconkit.server import serve_in_thread
from reconkit.service import ReconciliationService
from reconkit.synthetic import SCHEMA, perturb, synthetic_csv

dataset = load_dataset(synthetic_csv(1000, seed=3), SCHEMA)
server, url = serve_in_thread(ReconciliationService(dataset))

# A user table of 60 noisy names (and 10 that are not in the register).
rng = random.Random(3)
picked = rng.sample(list(dataset.entities.values()), 60)
lines = ["name,country,truth"]
lines += [f'"{perturb(e.name, rng)}",{e.properties["jurisdiction"][0].value},{e.id}' for e in picked]
lines += [f"unknown venture {i},gb," for i in range(10)]
table = UserTable.from_csv("\n".join(lines) + "\n", "name", bindings={"country": "jurisdiction"}, truth_column="truth")

linear = LinearModel(
    {"name_softtfidf": 0.45, "name_levenshtein": 0.25, "name_qgram": 0.15, "prop:jurisdiction": 0.15},
    threshold=0.7, gap=0.05,
)
results = run_reconcile(table, url, linear, batch_size=10)
report = sweep(results, linear, [0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
print(json.dumps(report.to_json(), indent=1))

# A small tree: trust a strong name score, otherwise require the country too.
tree = Node("name_softtfidf", 0.8,
            Node("name_qgram", 0.6, Leaf(False), Node("prop:jurisdiction", 1.0, Leaf(False), Leaf(True))),
            Leaf(True))
tree_results = run_reconcile(table, url, tree)
correct = sum(r.matched_id == r.truth_id for r in tree_results if r.matched_id)
print(f"tree: {sum(r.matched_id is not None for r in tree_results)} matched, {correct} correct")

print(write_output(results[:3], UserTable(table.columns, table.rows[:3], "name")).decode())
server.shutdown()
