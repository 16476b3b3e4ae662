"""Geometry datasets: deformed clouds, their parameters, codes and QoI.

On disk a dataset is a directory with manifest.json, a reference.off, one
OFF per sample, and params/latents/qoi CSVs (RFC-4180, '.' decimal, LF).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace

import numpy as np

from .geometry import GeometryError, PointCloud, TriMesh, load_off, save_off


def write_csv(path, rows, header=None) -> None:
    """Write numeric rows with round-trip float formatting."""
    lines = []
    if header is not None:
        lines.append(",".join(header))
    for row in np.atleast_2d(np.asarray(rows, dtype=np.float64)):
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path, skip_header: bool = False) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if skip_header:
        lines = lines[1:]
    return np.array([[float(v) for v in ln.split(",")] for ln in lines])


@dataclass(frozen=True)
class GeometryDataset:
    clouds: np.ndarray              # (m, n)
    ffd_params: np.ndarray | None   # (m, p)
    latents: np.ndarray | None      # (m, k)
    qoi: np.ndarray | None          # (m,)
    reference: TriMesh

    def __post_init__(self):
        clouds = np.asarray(self.clouds, dtype=np.float64)
        m, n = clouds.shape
        if n != 3 * self.reference.cloud.n_points:
            raise GeometryError(f"cloud dim {n} does not match reference "
                                f"({3 * self.reference.cloud.n_points})")
        for name in ("ffd_params", "latents"):
            arr = getattr(self, name)
            if arr is not None and np.asarray(arr).shape[0] != m:
                raise GeometryError(f"{name} row count != {m}")
        if self.qoi is not None and np.asarray(self.qoi).reshape(-1).size != m:
            raise GeometryError(f"qoi length != {m}")
        object.__setattr__(self, "clouds", clouds)

    @property
    def m(self) -> int:
        return self.clouds.shape[0]

    @property
    def n(self) -> int:
        return self.clouds.shape[1]

    def cloud(self, i: int) -> PointCloud:
        return PointCloud(self.clouds[i])

    def mesh(self, i: int) -> TriMesh:
        return self.reference.with_cloud(self.cloud(i))

    def with_latents(self, latents) -> "GeometryDataset":
        return replace(self, latents=np.asarray(latents, dtype=np.float64))

    def with_qoi(self, qoi) -> "GeometryDataset":
        return replace(self, qoi=np.asarray(qoi, dtype=np.float64).reshape(-1))


def save_dataset(ds: GeometryDataset, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    save_off(ds.reference, os.path.join(out_dir, "reference.off"))
    names = []
    for i in range(ds.m):
        name = f"sample_{i:04d}.off"
        save_off(ds.mesh(i), os.path.join(out_dir, name))
        names.append(name)
    manifest = {"m": ds.m, "n": ds.n, "reference": "reference.off",
                "samples": names,
                "fields": {"params": ds.ffd_params is not None,
                           "latents": ds.latents is not None,
                           "qoi": ds.qoi is not None}}
    if ds.ffd_params is not None:
        write_csv(os.path.join(out_dir, "params.csv"), ds.ffd_params)
    if ds.latents is not None:
        write_csv(os.path.join(out_dir, "latents.csv"), ds.latents)
    if ds.qoi is not None:
        write_csv(os.path.join(out_dir, "qoi.csv"), np.asarray(ds.qoi).reshape(-1, 1))
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_dataset(in_dir) -> GeometryDataset:
    with open(os.path.join(in_dir, "manifest.json"), "r", encoding="ascii") as fh:
        manifest = json.load(fh)
    reference = load_off(os.path.join(in_dir, manifest["reference"]))
    clouds = np.empty((manifest["m"], manifest["n"]))
    for i, name in enumerate(manifest["samples"]):
        clouds[i] = load_off(os.path.join(in_dir, name)).cloud.coords
    fields = manifest["fields"]
    params = read_csv(os.path.join(in_dir, "params.csv")) if fields["params"] else None
    latents = read_csv(os.path.join(in_dir, "latents.csv")) if fields["latents"] else None
    qoi = read_csv(os.path.join(in_dir, "qoi.csv")).reshape(-1) if fields["qoi"] else None
    return GeometryDataset(clouds=clouds, ffd_params=params, latents=latents,
                           qoi=qoi, reference=reference)
