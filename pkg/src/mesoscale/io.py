"""JSON and CSV readers/writers for clouds, sources and point sets."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .experiments import source_from_dict, source_to_dict
from .geometry import AmbientDomain, Inclusion, InclusionCloud
from .kernels import SourceTerm


def ambient_from_dict(data) -> AmbientDomain:
    if not data or data.get("kind", "free_space") == "free_space":
        return AmbientDomain.free_space()
    if data["kind"] != "ball":
        raise ValueError(f"unknown ambient kind {data['kind']!r}")
    return AmbientDomain.ball(float(data["radius"]))


def ambient_to_dict(ambient: AmbientDomain) -> dict:
    if ambient.is_free_space:
        return {"kind": "free_space"}
    return {"kind": "ball", "radius": ambient.ball_radius}


def cloud_to_dict(cloud: InclusionCloud, ambient: AmbientDomain) -> dict:
    return {
        "ambient": ambient_to_dict(ambient),
        "inclusions": [{"center": list(i.center), "radius": i.radius} for i in cloud.inclusions],
        "omega": {"center": list(cloud.omega_center), "diameter": cloud.omega_diameter},
    }


def cloud_from_dict(data: dict):
    incs = tuple(
        Inclusion(tuple(float(c) for c in i["center"]), float(i["radius"]))
        for i in data.get("inclusions", [])
    )
    omega = data.get("omega") or {}
    cloud = InclusionCloud(
        incs,
        tuple(omega["center"]) if "center" in omega else None,
        float(omega["diameter"]) if "diameter" in omega else None,
    )
    return cloud, ambient_from_dict(data.get("ambient"))


def read_cloud(path):
    return cloud_from_dict(json.loads(Path(path).read_text()))


def write_cloud(path, cloud: InclusionCloud, ambient: AmbientDomain):
    Path(path).write_text(json.dumps(cloud_to_dict(cloud, ambient), indent=2) + "\n")


def read_source(path) -> SourceTerm:
    return source_from_dict(json.loads(Path(path).read_text()))


def write_source(path, f: SourceTerm):
    Path(path).write_text(json.dumps(source_to_dict(f), indent=2) + "\n")


def parse_point(text: str) -> np.ndarray:
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 3:
        raise ValueError(f"expected three comma-separated coordinates, got {text!r}")
    return np.array(vals)


def read_points(path) -> np.ndarray:
    """Points from a CSV with columns x,y,z (a header row is optional)."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].strip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in rec[:3]])
            except ValueError:
                if rows:
                    raise
    return np.array(rows, dtype=float).reshape(-1, 3)


def write_values(path, points: np.ndarray, values: np.ndarray, flags=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "z", "value", "flags"])
        for i, (p, v) in enumerate(zip(points, values)):
            flag = "" if flags is None else flags[i]
            w.writerow(["%.17g" % p[0], "%.17g" % p[1], "%.17g" % p[2], "%.17g" % v, flag])
