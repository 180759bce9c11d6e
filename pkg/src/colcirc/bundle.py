"""Scheme bundle files: a JSON manifest next to the constituent `.col` files."""

from __future__ import annotations

import json
import os

from .codec import SchemeInstance, codec
from .column import read_col_file, write_col_file
from .errors import ColcircError

MANIFEST_NAME = "manifest.json"


def write_bundle(inst: SchemeInstance, directory) -> str:
    os.makedirs(directory, exist_ok=True)
    entry = codec(inst.scheme_id)
    ordered = entry.form_spec(inst.params)
    manifest = {"scheme": inst.scheme_id, "params": inst.params, "columns": {}}
    for label in ordered:
        fname = label.replace(":", "_") + ".col"
        write_col_file(os.path.join(directory, fname), inst.columns[label])
        manifest["columns"][label] = fname
    path = os.path.join(directory, MANIFEST_NAME)
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def read_bundle(directory) -> SchemeInstance:
    path = os.path.join(directory, MANIFEST_NAME)
    if os.path.isfile(directory):
        path = directory
        directory = os.path.dirname(directory)
    with open(path) as f:
        manifest = json.load(f)
    for key in ("scheme", "params", "columns"):
        if key not in manifest:
            raise ColcircError(f"manifest is missing the {key!r} field")
    columns = {}
    for label, rel in manifest["columns"].items():
        columns[label] = read_col_file(os.path.join(directory, rel))
    return SchemeInstance(manifest["scheme"], manifest["params"], columns)
