"""End-to-end study pipelines behind `geolatent reproduce`.

Both studies regenerate their geometry from the config seed, so a rerun
with the same resolved config is bit-identical. Wall-clock measurements go
to separate timing CSVs: every other artifact is deterministic, timings by
nature are not.
"""

from __future__ import annotations

import hashlib
import json
import os
from contextlib import contextmanager

import numpy as np

from . import rng as rngmod
from .config import ConfigError, format_config
from .constraint import constrained_sample, make_constraint
from .dataset import GeometryDataset, save_dataset, write_csv
from .ffd import lattice_for_cloud
from .geometry import (PointCloud, TriMesh, load_off, make_icosphere,
                       surface_integral)
from .genmodels import fit_genmodel, preset_config
from .pointcond import fit_cond, fit_code_prior
from .ppinn import (PROBLEMS, PinnConfig, fit_pinn, pinn_errors,
                    sample_collocation)
from .rom import loo_evaluate


@contextmanager
def experiment_dir(path):
    """Create/own an experiment directory via an exclusive lock file."""
    os.makedirs(path, exist_ok=True)
    lock = os.path.join(path, ".geolatent.lock")
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(f"experiment directory {path} is locked by another run "
                          f"(remove {lock} if stale)") from None
    try:
        os.close(fd)
        yield path
    finally:
        os.unlink(lock)


def module_hashes() -> dict[str, str]:
    root = os.path.dirname(__file__)
    out = {}
    for dirpath, _, files in os.walk(root):
        for name in sorted(files):
            if not name.endswith(".py"):
                continue
            full = os.path.join(dirpath, name)
            rel = os.path.relpath(full, root)
            with open(full, "rb") as fh:
                out[rel] = hashlib.sha256(fh.read()).hexdigest()
    return out


def write_run_metadata(out_dir, cfg: dict) -> None:
    with open(os.path.join(out_dir, "resolved.config"), "w", encoding="utf-8") as fh:
        fh.write(format_config(cfg))
    with open(os.path.join(out_dir, "versions.json"), "w", encoding="utf-8") as fh:
        json.dump(module_hashes(), fh, indent=1, sort_keys=True)
        fh.write("\n")


def base_mesh(cfg: dict) -> TriMesh:
    if cfg["mesh"] == "icosphere":
        return make_icosphere(cfg["subdivisions"], cfg["radius"])
    return load_off(cfg["mesh"])


def generate_training_set(cfg: dict) -> tuple[TriMesh, GeometryDataset, object]:
    mesh = base_mesh(cfg)
    spec = make_constraint(cfg["constraint"], mesh)
    lattice = lattice_for_cloud(cfg["lattice_preset"], mesh.cloud)
    gen_rng = rngmod.stream(cfg["seed"], "cffd-sampling")
    ds = constrained_sample(mesh, lattice, spec, cfg["samples"], gen_rng,
                            low=cfg["deform_low"], high=cfg["deform_high"])
    return mesh, ds, spec


# ---------------------------------------------------------------------------
# bunny-rom: DROM comparison on raw FFD parameters vs generative latents

def _synthetic5_qoi(latents_ref: np.ndarray, seed: int):
    """Smooth QoI of intrinsic dimension 5 over standardized latent codes."""
    mu = latents_ref.mean(axis=0)
    sd = np.maximum(latents_ref.std(axis=0), 1e-8)
    k = latents_ref.shape[1]
    dirs = min(5, k)
    basis_rng = rngmod.stream(seed, "qoi-directions")
    raw = basis_rng.standard_normal((k, dirs))
    V, _ = np.linalg.qr(raw)

    def qoi(latents: np.ndarray) -> np.ndarray:
        w = ((latents - mu) / sd) @ V
        return np.sin(w).sum(axis=1) + 0.25 * w.sum(axis=1) ** 2

    return qoi


def run_bunny_rom(cfg: dict, out_dir) -> dict:
    mesh, train_ds, spec = generate_training_set(cfg)
    n = train_ds.n

    model_cfg = preset_config(cfg["model_kind"], cfg["latent_dim"], n,
                              preset=cfg["net_preset"], epochs=cfg["epochs"],
                              batch_size=cfg["batch_size"], lr=cfg["lr"],
                              seed=cfg["seed"])
    model = fit_genmodel(train_ds.clouds, model_cfg, constraint=spec,
                         reference=mesh, constraint_kind=cfg["constraint"])
    model.save(os.path.join(out_dir, "model.glckpt"))

    # paper pipeline: sample m new geometries, keep their latent codes
    sample_rng = rngmod.stream(cfg["seed"], "genmodel-sampling")
    gen_clouds, gen_codes = model.sample(cfg["samples"], sample_rng)

    if cfg["qoi"] == "synthetic5":
        train_lat = model.encode(train_ds.clouds)
        qoi_fn = _synthetic5_qoi(train_lat, cfg["seed"])
        qoi_train = qoi_fn(model.encode(train_ds.clouds))
        qoi_gen = qoi_fn(model.encode(gen_clouds))
    elif cfg["qoi"] == "surface-exp-z":
        def integral(clouds):
            return np.array([surface_integral(mesh.with_cloud(PointCloud(c)),
                                              lambda x, y, z: np.exp(z))
                             for c in clouds])
        qoi_train = integral(train_ds.clouds)
        qoi_gen = integral(gen_clouds)
    else:
        raise ConfigError(f"unknown qoi {cfg['qoi']!r}")

    train_ds = train_ds.with_qoi(qoi_train).with_latents(model.encode(train_ds.clouds))
    save_dataset(train_ds, os.path.join(out_dir, "data-cffd"))
    gen_ds = GeometryDataset(clouds=gen_clouds, ffd_params=None,
                             latents=gen_codes, qoi=qoi_gen, reference=mesh)
    save_dataset(gen_ds, os.path.join(out_dir, "data-generated"))

    kinds = [k.strip() for k in cfg["rom_kinds"].split(",") if k.strip()]
    rows = []
    for kind in kinds:
        rep_ffd = loo_evaluate(kind, train_ds.ffd_params, qoi_train,
                               repetitions=cfg["repetitions"])
        rep_lat = loo_evaluate(kind, gen_codes, qoi_gen,
                               repetitions=cfg["repetitions"])
        rows.append((kind, "ffd", rep_ffd))
        rows.append((kind, "latent", rep_lat))

    with open(os.path.join(out_dir, "report.csv"), "w", encoding="ascii",
              newline="") as fh:
        fh.write("kind,parametrization,max_error,mean_error\n")
        for kind, name, rep in rows:
            fh.write(f"{kind},{name},{rep.max_error!r},{rep.mean_error!r}\n")
    with open(os.path.join(out_dir, "timings.csv"), "w", encoding="ascii",
              newline="") as fh:
        fh.write("kind,parametrization,cpu_time_s\n")
        for kind, name, rep in rows:
            fh.write(f"{kind},{name},{rep.cpu_time_seconds!r}\n")
    write_run_metadata(out_dir, cfg)
    return {"report": {(k, p): (r.max_error, r.mean_error, r.cpu_time_seconds)
                       for k, p, r in rows}}


# ---------------------------------------------------------------------------
# bunny-pinn: conditional AE codes vs raw FFD parameters for a PPINN

def run_bunny_pinn(cfg: dict, out_dir) -> dict:
    mesh, train_ds, spec = generate_training_set(cfg)

    cond_model, codes = fit_cond(train_ds.clouds, mesh.cloud,
                                 cfg["cond_latent_dim"],
                                 epochs=cfg["cond_epochs"],
                                 width=cfg["cond_width"], seed=cfg["seed"])
    cond_model.save(os.path.join(out_dir, "cond-ae.glckpt"))
    train_ds = train_ds.with_latents(codes)
    save_dataset(train_ds, os.path.join(out_dir, "data-cffd"))

    prior_cfg = preset_config(cfg["prior_kind"], cfg["cond_latent_dim"],
                              cfg["cond_latent_dim"] + 1, preset="desk",
                              epochs=cfg["prior_epochs"], seed=cfg["seed"])
    prior = fit_code_prior(codes, cfg["prior_kind"], prior_cfg)
    sampled_codes = prior.sample(8, rngmod.stream(cfg["seed"], "code-sampling"))
    write_csv(os.path.join(out_dir, "sampled_codes.csv"), sampled_codes)

    g = cfg["pinn_geometries"]
    if g > train_ds.m:
        raise ConfigError(f"pinn_geometries {g} > samples {train_ds.m}")
    meshes = [train_ds.mesh(i) for i in range(g)]
    problem = PROBLEMS[cfg["pinn_problem"]]

    results = {}
    for tag, params in (("latent", codes[:g]), ("ffd", train_ds.ffd_params[:g])):
        pcfg = PinnConfig(param_dim=params.shape[1], width=cfg["pinn_width"],
                          depth=cfg["pinn_depth"], epochs=cfg["pinn_epochs"],
                          lr=cfg["pinn_lr"], lr_final=cfg["pinn_lr_final"],
                          lambda_b=cfg["pinn_lambda_b"], h_rel=cfg["pinn_h_rel"],
                          n_interior=cfg["pinn_interior"],
                          n_boundary=cfg["pinn_boundary"], seed=cfg["seed"])
        model = fit_pinn(meshes, params, problem, pcfg, param_kind=tag)
        model.save(os.path.join(out_dir, f"pinn-{tag}.glckpt"))
        with open(os.path.join(out_dir, f"loss-{tag}.csv"), "w",
                  encoding="ascii", newline="") as fh:
            fh.write("epoch,loss\n")
            for e, v in enumerate(model.history):
                fh.write(f"{e},{v!r}\n")
        with open(os.path.join(out_dir, f"epoch-times-{tag}.csv"), "w",
                  encoding="ascii", newline="") as fh:
            fh.write("epoch,seconds\n")
            for e, v in enumerate(model.epoch_seconds):
                fh.write(f"{e},{v!r}\n")
        results[tag] = model

    if problem.oracle is not None:
        erng = rngmod.stream(cfg["seed"], "pinn-eval-points")
        evsets = {"latent": [], "ffd": []}
        for i, m in enumerate(meshes):
            cs = sample_collocation(m, cfg["eval_interior"], cfg["eval_boundary"], erng)
            pts = np.concatenate([cs.interior, cs.boundary])
            evsets["latent"].append((codes[i], pts))
            evsets["ffd"].append((train_ds.ffd_params[i], pts))
        with open(os.path.join(out_dir, "errors.csv"), "w", encoding="ascii",
                  newline="") as fh:
            fh.write("parametrization,l1_error,l2_error\n")
            for tag in ("latent", "ffd"):
                l1, l2 = pinn_errors(results[tag], evsets[tag], problem.oracle)
                fh.write(f"{tag},{l1!r},{l2!r}\n")

    write_run_metadata(out_dir, cfg)
    return {"models": results}


def run_study(cfg: dict, out_dir) -> dict:
    with experiment_dir(out_dir):
        if cfg["study"] == "bunny-rom":
            return run_bunny_rom(cfg, out_dir)
        if cfg["study"] == "bunny-pinn":
            return run_bunny_pinn(cfg, out_dir)
        raise ConfigError(f"unknown study {cfg['study']!r}")
