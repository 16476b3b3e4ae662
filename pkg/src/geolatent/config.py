"""Flat key=value experiment configuration.

Config files are UTF-8 text, one `key = value` per line, '#' comments.
Every run resolves its study defaults against file values and CLI
overrides, rejects unknown keys, and writes the fully resolved config
beside its outputs.
"""

from __future__ import annotations


class ConfigError(ValueError):
    pass


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {ln}: expected 'key = value', got {body!r}")
        key, value = body.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {ln}: empty key")
        if key in out:
            raise ConfigError(f"line {ln}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def load_config(path) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def format_config(cfg: dict) -> str:
    lines = [f"{k} = {cfg[k]}" for k in sorted(cfg)]
    return "\n".join(lines) + "\n"


# study defaults; value types are inferred from these defaults
STUDY_DEFAULTS: dict[str, dict] = {
    "bunny-rom": {
        "study": "bunny-rom",
        "seed": 0,
        "mesh": "icosphere",           # OFF path or 'icosphere'
        "subdivisions": 2,
        "radius": 1.0,
        "lattice_preset": "bunny54",
        "constraint": "barycenter",
        "deform_low": 0.0,
        "deform_high": 0.2,
        "samples": 100,
        "model_kind": "vae",
        "latent_dim": 10,
        "net_preset": "desk",
        "epochs": 200,
        "batch_size": 16,
        "lr": 1e-3,
        "qoi": "synthetic5",           # synthetic5 | surface-exp-z
        "rom_kinds": "gpr,rbf,tree",
        "repetitions": 3,
    },
    "bunny-pinn": {
        "study": "bunny-pinn",
        "seed": 0,
        "mesh": "icosphere",
        "subdivisions": 2,
        "radius": 1.0,
        "lattice_preset": "bunny54",
        "constraint": "barycenter",
        "deform_low": 0.0,
        "deform_high": 0.2,
        "samples": 24,
        "cond_latent_dim": 5,
        "cond_epochs": 150,
        "cond_width": 64,
        "prior_kind": "nf",
        "prior_epochs": 150,
        "pinn_geometries": 20,
        "pinn_problem": "exp-z",
        "pinn_epochs": 1500,
        "pinn_width": 64,
        "pinn_depth": 2,
        "pinn_lr": 3e-3,
        "pinn_lr_final": 3e-5,
        "pinn_lambda_b": 10.0,
        "pinn_h_rel": 0.08,
        "pinn_interior": 48,
        "pinn_boundary": 96,
        "eval_interior": 8,
        "eval_boundary": 8,
        "fine_subdivisions": 3,
    },
}


def resolve_study_config(study: str, file_values: dict[str, str] | None = None,
                         overrides: dict[str, str] | None = None) -> dict:
    """Defaults <- config file <- CLI overrides, typed; unknown keys rejected."""
    if study not in STUDY_DEFAULTS:
        raise ConfigError(f"unknown study {study!r}; choose from "
                          f"{tuple(STUDY_DEFAULTS)}")
    defaults = STUDY_DEFAULTS[study]
    merged = dict(defaults)
    for source in (file_values or {}), (overrides or {}):
        for key, raw in source.items():
            if key not in defaults:
                raise ConfigError(f"unknown config key {key!r} for study {study!r}")
            merged[key] = _coerce(key, raw, defaults[key])
    if merged["study"] != study:
        raise ConfigError(f"config study {merged['study']!r} != requested {study!r}")
    return merged


def _coerce(key: str, raw, default):
    if isinstance(raw, type(default)) and not isinstance(raw, str):
        return raw
    text = str(raw)
    try:
        if isinstance(default, bool):
            return text.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot parse {text!r} as "
                          f"{type(default).__name__}") from None
    return text
