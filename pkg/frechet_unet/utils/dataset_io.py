"""
On-disk dataset directories and graph list files.

A dataset directory holds:
    manifest.json   schema version, ensemble, counts, run seed and per-pair provenance
    inputs.f32      batch mean matrices, little-endian float32, pair-major
    targets.bin     one target graph per pair, as a graph list file
    batches/        members.bin, the N member graphs of every pair, pair-major

A graph list file is a header line "n=<n> count=<rows>" followed by one
upper-triangle bit string per graph.
"""

import json
import logging
import os
import shutil
import tempfile
from typing import Any, Dict, List, Optional

import numpy as np

from frechet_unet.core.graphs import sample_mean
from frechet_unet.models.enums import Ensemble
from frechet_unet.models.errors import DatasetError, GraphError
from frechet_unet.models.graph import Graph
from frechet_unet.models.results import DatasetPair

logger = logging.getLogger('frechet_unet.datasets')

SCHEMA_VERSION = 1
MANIFEST = "manifest.json"
INPUTS = "inputs.f32"
TARGETS = "targets.bin"
MEMBERS = os.path.join("batches", "members.bin")
SPOT_CHECK_EVERY = 10
INPUT_TOLERANCE = 1e-6


def write_graphs(path: str, graphs: List[Graph]):
    """Write graphs of one size as a graph list file."""
    n = graphs[0].n if graphs else 0
    with open(path, "w") as f:
        f.write(f"n={n} count={len(graphs)}\n")
        for g in graphs:
            if g.n != n:
                raise GraphError(f"graph list mixes sizes {n} and {g.n}")
            f.write(g.upper_bits() + "\n")


def read_graphs(path: str) -> List[Graph]:
    """Read a graph list file."""
    try:
        with open(path, "r") as f:
            header = f.readline().split()
            fields = dict(item.split("=", 1) for item in header)
            n, count = int(fields["n"]), int(fields["count"])
            rows = [line.strip() for line in f if line.strip()]
    except (OSError, KeyError, ValueError) as e:
        raise DatasetError(f"unreadable graph list {path}: {e}")
    if len(rows) != count:
        raise DatasetError(f"{path}: header announces {count} graphs, found {len(rows)}")
    try:
        return [Graph.from_bits(n, row) for row in rows]
    except GraphError as e:
        raise DatasetError(f"{path}: {e}")


def save_dataset(pairs: List[DatasetPair], directory: str, run: Optional[Dict[str, Any]] = None) -> str:
    """
    Write a dataset directory, replacing any previous one only once it is complete.

    Args:
        pairs: Pairs of a single ensemble
        directory: Destination directory
        run: Extra provenance (seed, config digest) for the manifest

    Returns:
        str: The dataset directory
    """
    if not pairs:
        raise DatasetError("refusing to write an empty dataset")
    ensembles = {pair.ensemble for pair in pairs}
    if len(ensembles) != 1:
        raise DatasetError(f"a dataset holds one ensemble, got {sorted(e.value for e in ensembles)}")
    sizes = {len(pair.batch) for pair in pairs}
    if len(sizes) != 1 or 0 in sizes:
        raise DatasetError("every pair must keep its batch members, all of the same size")

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "ensemble": pairs[0].ensemble.value,
        "n": pairs[0].n,
        "count": len(pairs),
        "sample_size": sizes.pop(),
        "run": run or {},
        "pairs": [pair.meta() for pair in pairs],
    }
    parent = os.path.dirname(os.path.abspath(directory))
    os.makedirs(parent, exist_ok=True)
    staging = tempfile.mkdtemp(dir=parent, prefix=".dataset-")
    try:
        os.makedirs(os.path.join(staging, "batches"))
        with open(os.path.join(staging, MANIFEST), "w") as f:
            json.dump(manifest, f, indent=2)
        inputs = np.stack([pair.input.w for pair in pairs]).astype("<f4")
        with open(os.path.join(staging, INPUTS), "wb") as f:
            f.write(inputs.tobytes())
        write_graphs(os.path.join(staging, TARGETS), [pair.target for pair in pairs])
        write_graphs(os.path.join(staging, MEMBERS), [g for pair in pairs for g in pair.batch])
        if os.path.exists(directory):
            shutil.rmtree(directory)
        os.replace(staging, directory)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    logger.info(f"Wrote {len(pairs)} {manifest['ensemble']} pairs to {directory}")
    return directory


def load_dataset(directory: str) -> List[DatasetPair]:
    """
    Read a dataset directory.

    Inputs are recomputed from the stored batch members; every tenth pair is checked
    against the stored float32 inputs.

    Raises:
        DatasetError: Missing files, schema mismatch or inconsistent contents
    """
    manifest_path = os.path.join(directory, MANIFEST)
    if not os.path.isfile(manifest_path):
        raise DatasetError(f"no dataset at {directory} (missing {MANIFEST})")
    try:
        with open(manifest_path, "r") as f:
            manifest = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise DatasetError(f"unreadable manifest {manifest_path}: {e}")
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise DatasetError(f"{directory}: unsupported schema version {manifest.get('schema_version')}")

    n, count, size = manifest["n"], manifest["count"], manifest["sample_size"]
    ensemble = Ensemble(manifest["ensemble"])
    targets = read_graphs(os.path.join(directory, TARGETS))
    members = read_graphs(os.path.join(directory, MEMBERS))
    if len(targets) != count or len(members) != count * size:
        raise DatasetError(f"{directory}: expected {count} targets and {count * size} members")
    try:
        stored = np.fromfile(os.path.join(directory, INPUTS), dtype="<f4")
    except OSError as e:
        raise DatasetError(f"{directory}: cannot read {INPUTS}: {e}")
    if stored.size != count * n * n:
        raise DatasetError(f"{directory}: {INPUTS} holds {stored.size} values, expected {count * n * n}")
    stored = stored.reshape(count, n, n)

    pairs = []
    for index, meta in enumerate(manifest["pairs"]):
        batch = members[index * size:(index + 1) * size]
        mean = sample_mean(batch)
        if index % SPOT_CHECK_EVERY == 0 and not np.allclose(mean.w, stored[index], atol=INPUT_TOLERANCE):
            raise DatasetError(f"{directory}: pair {index} input does not match the mean of its batch")
        pairs.append(DatasetPair(
            input=mean,
            target=targets[index],
            ensemble=ensemble,
            params=meta["params"],
            seed=meta["seed"],
            stream=meta["stream"],
            batch=batch,
        ))
    logger.info(f"Loaded {len(pairs)} {ensemble.value} pairs from {directory}")
    return pairs
