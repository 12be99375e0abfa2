"""Report assembly: deterministic JSON payloads for every CLI command."""

from __future__ import annotations

import hashlib
import json

from . import __version__


def inputs_hash(inputs: dict) -> str:
    blob = json.dumps(inputs, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def make_report(command: str, inputs: dict, results, citations: list[str], seed: int) -> dict:
    return {
        "version": __version__,
        "command": command,
        "inputs": inputs,
        "inputs_hash": inputs_hash(inputs),
        "seed": seed,
        "results": results,
        "citations": citations,
    }


def write_json(report: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
