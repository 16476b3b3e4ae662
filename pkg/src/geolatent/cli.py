"""geolatent command line: mesh utilities, constrained deformation sampling,
generative-model and PINN training, ROM evaluation, divergence estimates,
and end-to-end study reproduction.

Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import divergence as div
from . import rng as rngmod
from .config import (ConfigError, STUDY_DEFAULTS, load_config,
                     resolve_study_config)
from .constraint import CONSTRAINT_KINDS, constrained_sample, make_constraint
from .dataset import load_dataset, read_csv, save_dataset, write_csv
from .ffd import PRESET_NAMES, lattice_for_cloud
from .geometry import GeometryError, barycenter, load_off, make_icosphere, signed_volume
from .genmodels import KINDS, fit_genmodel, load_genmodel, preset_config
from .pointcond import fit_cond
from .ppinn import (PROBLEMS, PinnConfig, PinnModel, fit_pinn, pinn_errors,
                    sample_collocation)
from .rom import ROM_KINDS, loo_evaluate


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geolatent")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("mesh-info", help="print mesh statistics")
    s.add_argument("mesh")

    s = sub.add_parser("deform", help="sample constrained FFD deformations")
    s.add_argument("--mesh", required=True, help="OFF path or icosphere:N[:radius]")
    s.add_argument("--preset", default="bunny54", choices=PRESET_NAMES)
    s.add_argument("--constraint", default="volume", choices=CONSTRAINT_KINDS)
    s.add_argument("--count", type=int, default=100)
    s.add_argument("--low", type=float, default=0.0)
    s.add_argument("--high", type=float, default=0.2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    s = sub.add_parser("gen-train", help="train a generative model on a dataset")
    s.add_argument("--kind", required=True, choices=KINDS)
    s.add_argument("--data", required=True)
    s.add_argument("--latent-dim", type=int, default=10)
    s.add_argument("--epochs", type=int, default=500)
    s.add_argument("--batch-size", type=int, default=16)
    s.add_argument("--lr", type=float, default=1e-3)
    s.add_argument("--preset", default="desk", choices=("desk", "paper-appendix"))
    s.add_argument("--constraint", default="none",
                   choices=("none",) + CONSTRAINT_KINDS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    s = sub.add_parser("gen-sample", help="sample geometries from a model")
    s.add_argument("--model", required=True)
    s.add_argument("--count", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    s = sub.add_parser("cond-train", help="train the conditional point autoencoder")
    s.add_argument("--data", required=True)
    s.add_argument("--reference", help="reference OFF (defaults to the dataset's)")
    s.add_argument("--latent-dim", type=int, default=5)
    s.add_argument("--epochs", type=int, default=300)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    s = sub.add_parser("rom-eval", help="leave-one-out ROM comparison")
    s.add_argument("--data", required=True)
    s.add_argument("--params", default="ffd", choices=("ffd", "latent"))
    s.add_argument("--kinds", default="gpr,rbf,tree")
    s.add_argument("--reps", type=int, default=10)
    s.add_argument("--out", required=True)

    s = sub.add_parser("pinn-train", help="train a parametrized PINN")
    s.add_argument("--geoms", required=True, help="dataset directory")
    s.add_argument("--params", default="latent", choices=("ffd", "latent"))
    s.add_argument("--problem", default="exp-z", choices=tuple(PROBLEMS))
    s.add_argument("--count", type=int, default=0, help="geometries (0 = all)")
    s.add_argument("--epochs", type=int, default=1000)
    s.add_argument("--lr", type=float, default=3e-3)
    s.add_argument("--h-rel", type=float, default=0.08)
    s.add_argument("--interior", type=int, default=48)
    s.add_argument("--boundary", type=int, default=96)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    s = sub.add_parser("pinn-eval", help="evaluate a PINN against the analytic oracle")
    s.add_argument("--model", required=True)
    s.add_argument("--geoms", required=True)
    s.add_argument("--params", default="latent", choices=("ffd", "latent"))
    s.add_argument("--problem", default="harmonic-z", choices=tuple(PROBLEMS))
    s.add_argument("--count", type=int, default=0)
    s.add_argument("--interior", type=int, default=8)
    s.add_argument("--boundary", type=int, default=8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    s = sub.add_parser("divergence", help="divergence estimates between sample sets")
    s.add_argument("--kind", required=True, choices=("kl", "js", "w1"))
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("reproduce", help="run a named study end to end")
    s.add_argument("study", choices=tuple(STUDY_DEFAULTS))
    s.add_argument("--config", help="key = value config file")
    s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    return p


def _mesh_arg(text: str):
    if text.startswith("icosphere:"):
        parts = text.split(":")
        radius = float(parts[2]) if len(parts) > 2 else 1.0
        return make_icosphere(int(parts[1]), radius)
    return load_off(text)


def _cmd_mesh_info(args) -> int:
    mesh = _mesh_arg(args.mesh)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        vol = signed_volume(mesh)
    bx, by, bz = barycenter(mesh.cloud)
    print(f"points: {mesh.cloud.n_points}")
    print(f"triangles: {mesh.n_triangles}")
    print(f"closed_oriented: {mesh.is_closed_oriented()}")
    print(f"signed_volume: {vol!r}")
    print(f"barycenter: {bx!r} {by!r} {bz!r}")
    return 0


def _cmd_deform(args) -> int:
    mesh = _mesh_arg(args.mesh)
    spec = make_constraint(args.constraint, mesh)
    lattice = lattice_for_cloud(args.preset, mesh.cloud)
    ds = constrained_sample(mesh, lattice, spec, args.count,
                            rngmod.stream(args.seed, "cffd-sampling"),
                            low=args.low, high=args.high)
    save_dataset(ds, args.out)
    resid = max(float(np.abs(spec.residual(ds.cloud(i))).max())
                for i in range(ds.m))
    print(f"wrote {ds.m} constrained clouds to {args.out} "
          f"(max constraint residual {resid:.3e})")
    return 0


def _cmd_gen_train(args) -> int:
    ds = load_dataset(args.data)
    spec = None
    ckind = args.constraint
    if ckind != "none":
        spec = make_constraint(ckind, ds.reference)
    cfg = preset_config(args.kind, args.latent_dim, ds.n, preset=args.preset,
                        epochs=args.epochs, batch_size=args.batch_size,
                        lr=args.lr, seed=args.seed)
    model = fit_genmodel(ds.clouds, cfg, constraint=spec, reference=ds.reference,
                         constraint_kind=ckind)
    model.save(args.out)
    last = {k: v[-1] for k, v in model.history.items() if v}
    print(f"trained {args.kind} on {ds.m} clouds; final {last}")
    return 0


def _cmd_gen_sample(args) -> int:
    model = load_genmodel(args.model)
    clouds, codes = model.sample(args.count, rngmod.stream(args.seed, "gen-sample"))
    if model.reference is None:
        raise GeometryError("model carries no reference mesh; cannot emit OFFs")
    ds_out = None
    from .dataset import GeometryDataset
    ds_out = GeometryDataset(clouds=clouds, ffd_params=None, latents=codes,
                             qoi=None, reference=model.reference)
    save_dataset(ds_out, args.out)
    print(f"sampled {args.count} clouds to {args.out}")
    return 0


def _cmd_cond_train(args) -> int:
    ds = load_dataset(args.data)
    reference = load_off(args.reference).cloud if args.reference else ds.reference.cloud
    model, codes = fit_cond(ds.clouds, reference, args.latent_dim,
                            epochs=args.epochs, seed=args.seed)
    model.save(args.out)
    write_csv(os.path.splitext(args.out)[0] + "-codes.csv", codes)
    print(f"trained conditional AE; final loss {model.history[-1]!r}")
    return 0


def _cmd_rom_eval(args) -> int:
    ds = load_dataset(args.data)
    if ds.qoi is None:
        raise GeometryError("dataset has no qoi.csv")
    X = ds.ffd_params if args.params == "ffd" else ds.latents
    if X is None:
        raise GeometryError(f"dataset has no {args.params} parameters")
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    for kind in kinds:
        if kind not in ROM_KINDS:
            raise ConfigError(f"unknown ROM kind {kind!r}")
    with open(args.out, "w", encoding="ascii", newline="") as fh:
        fh.write("kind,parametrization,max_error,mean_error,cpu_time_s\n")
        for kind in kinds:
            rep = loo_evaluate(kind, X, ds.qoi, repetitions=args.reps)
            fh.write(f"{kind},{args.params},{rep.max_error!r},"
                     f"{rep.mean_error!r},{rep.cpu_time_seconds!r}\n")
            print(f"{kind}/{args.params}: max={rep.max_error:.4g} "
                  f"mean={rep.mean_error:.4g} t={rep.cpu_time_seconds:.4g}s")
    return 0


def _load_pinn_inputs(args):
    ds = load_dataset(args.geoms)
    params = ds.ffd_params if args.params == "ffd" else ds.latents
    if params is None:
        raise GeometryError(f"dataset has no {args.params} parameters")
    count = args.count or ds.m
    meshes = [ds.mesh(i) for i in range(count)]
    return ds, meshes, params[:count]


def _cmd_pinn_train(args) -> int:
    _, meshes, params = _load_pinn_inputs(args)
    cfg = PinnConfig(param_dim=params.shape[1], epochs=args.epochs, lr=args.lr,
                     lr_final=args.lr / 100.0, h_rel=args.h_rel,
                     n_interior=args.interior, n_boundary=args.boundary,
                     seed=args.seed)
    model = fit_pinn(meshes, params, PROBLEMS[args.problem], cfg,
                     param_kind=args.params)
    model.save(args.out)
    hist_path = os.path.splitext(args.out)[0] + "-loss.csv"
    with open(hist_path, "w", encoding="ascii", newline="") as fh:
        fh.write("epoch,loss\n")
        for e, v in enumerate(model.history):
            fh.write(f"{e},{v!r}\n")
    print(f"final loss {model.history[-1]:.6g}; history at {hist_path}")
    return 0


def _cmd_pinn_eval(args) -> int:
    model = PinnModel.load(args.model)
    _, meshes, params = _load_pinn_inputs(args)
    problem = PROBLEMS[args.problem]
    if problem.oracle is None:
        raise GeometryError(f"problem {args.problem} has no analytic oracle")
    erng = rngmod.stream(args.seed, "pinn-eval-points")
    evsets = []
    for i, mesh in enumerate(meshes):
        cs = sample_collocation(mesh, args.interior, args.boundary, erng)
        evsets.append((params[i], np.concatenate([cs.interior, cs.boundary])))
    l1, l2 = pinn_errors(model, evsets, problem.oracle)
    with open(args.out, "w", encoding="ascii", newline="") as fh:
        fh.write("l1_error,l2_error\n")
        fh.write(f"{l1!r},{l2!r}\n")
    print(f"L1_error={l1!r} L2_error={l2!r}")
    return 0


def _cmd_divergence(args) -> int:
    a = read_csv(args.a)
    b = read_csv(args.b)
    if args.kind == "kl":
        var_a = np.maximum(a.var(axis=0), 1e-12)
        var_b = np.maximum(b.var(axis=0), 1e-12)
        value = div.gaussian_kl(a.mean(axis=0), var_a, b.mean(axis=0), var_b)
        print(f"gaussian_kl (moment-fitted diagonal): {value!r}")
    elif args.kind == "js":
        disc = div.fit_discriminator(a, b, seed=args.seed)
        value, se = div.js_lower_bound(a, b, disc, return_se=True)
        print(f"js_lower_bound: {value!r} (mc standard error {se:.3g})")
    else:
        value = div.w1_lower_bound(a, b)
        print(f"w1_lower_bound: {value!r}")
        if a.shape[1] == 1 and a.shape[0] == b.shape[0]:
            print(f"w1_exact_1d: {div.w1_exact_1d(a, b)!r}")
    return 0


def _cmd_reproduce(args) -> int:
    from .experiments import run_study

    file_values = load_config(args.config) if args.config else {}
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    cfg = resolve_study_config(args.study, file_values, overrides)
    run_study(cfg, args.out)
    print(f"study {args.study} complete; artifacts in {args.out}")
    return 0


_COMMANDS = {
    "mesh-info": _cmd_mesh_info,
    "deform": _cmd_deform,
    "gen-train": _cmd_gen_train,
    "gen-sample": _cmd_gen_sample,
    "cond-train": _cmd_cond_train,
    "rom-eval": _cmd_rom_eval,
    "pinn-train": _cmd_pinn_train,
    "pinn-eval": _cmd_pinn_eval,
    "divergence": _cmd_divergence,
    "reproduce": _cmd_reproduce,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GeometryError, OSError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
