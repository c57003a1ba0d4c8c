"""
Talking to the reconciliation service
=====================================

Start the HTTP service on the fixture register, then send a batch of queries
the way OpenRefine does and read the per-field feature scores.
"""

import json
import pathlib

import requests

from reconkit.datamodel import load_dataset_files
from reconkit.server import serve_in_thread
from reconkit.service import ReconciliationService

DATA = pathlib.Path(__file__).parent / "data"

service = ReconciliationService(load_dataset_files(str(DATA / "companies.csv"), str(DATA / "schema.json")))
server, url = serve_in_thread(service)

manifest = requests.get(url).json()
print("service:", manifest["name"])
for feature in manifest["feature_catalog"]:
    print(f"  {feature['id']:18s} {feature['description']}")

queries = {
    "q0": {"query": "Greentech Distribution"},
    "q1": {"query": "greentech", "properties": [{"pid": "jurisdiction", "v": "fr"}]},
    "q2": {"query": "Acme", "type": "company", "limit": 2},
}
response = requests.post(url, data={"queries": json.dumps(queries)}).json()
for key, entry in response.items():
    print(key, queries[key]["query"])
    for cand in entry["result"]:
        feats = ", ".join(f"{f['id']}={f['value']:.2f}" for f in cand["features"])
        print(f"  {cand['id']} {cand['score']:.3f} match={cand['match']}  [{feats}]")

print(requests.get(url + "/suggest/entity", params={"prefix": "gre"}).json())
ext = {"ids": ["e1", "e2"], "properties": [{"id": "jurisdiction"}, {"id": "parent"}]}
print(requests.post(url + "/extend", data={"extend": json.dumps(ext)}).json()["rows"])

server.shutdown()
