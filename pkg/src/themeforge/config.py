"""Strict TOML pipeline configuration.

Relative paths are resolved against the directory of the config file.
Every problem found is reported together in one ``ConfigurationError``.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .corpus_ingest import DEFAULT_ID_PATTERN
from .errors import ConfigurationError

_REQUIRED = object()

# section -> key -> (type, default); _REQUIRED marks mandatory keys.
SCHEMA: dict[str, dict[str, tuple]] = {
    "corpus": {
        "input_dir": ("path", _REQUIRED),
        "pattern": (str, DEFAULT_ID_PATTERN),
    },
    "vectorizer": {
        "min_df": (int, 1),
        "max_df_ratio": (float, 1.0),
        "stop_words": ("path", None),
        "idf_mode": (str, "smooth"),
    },
    "nmf": {
        "k": (int, 10),
        "seed": (int, _REQUIRED),
        "max_iter": (int, 500),
        "tol": (float, 1e-6),
        "n_words": (int, 10),
    },
    "cluster": {
        "provider": (str, "lsa"),
        "emb_file": ("path", None),
        "dims": (int, 50),
        "reduce_dims": (int, 5),
        "min_cluster_size": (int, 5),
        "min_samples": (int, None),
        "seed": (int, _REQUIRED),
        "n_words": (int, 10),
        "include_outlier": (bool, False),
        "embed_stop_words": (bool, True),
    },
    "eval": {
        "enabled": (bool, False),
        "truth": ("path", None),
        "annotations": ("path", None),
        "top_n": (int, 5),
    },
    "output": {
        "dir": ("outpath", _REQUIRED),
    },
}


@dataclass(frozen=True)
class PipelineConfig:
    corpus: dict
    vectorizer: dict
    nmf: dict
    cluster: dict
    eval: dict
    output: dict
    source: Path | None = field(default=None, compare=False)


def _check(value, kind, where, base: Path, errors: list[str]):
    if kind in ("path", "outpath"):
        if not isinstance(value, str):
            errors.append(f"{where}: expected a path string, got {type(value).__name__}")
            return None
        p = Path(value)
        p = p if p.is_absolute() else base / p
        if kind == "path" and not p.exists():
            errors.append(f"{where}: path does not exist: {p}")
        return p
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, bool) or not isinstance(value, kind):
        errors.append(f"{where}: expected {kind.__name__}, got {type(value).__name__}")
        return None
    return value


def parse_config(data: dict, base: Path, source: Path | None = None) -> PipelineConfig:
    errors: list[str] = []
    for section in data:
        if section not in SCHEMA:
            errors.append(f"unknown section [{section}]")
    resolved: dict[str, dict] = {}
    for section, keys in SCHEMA.items():
        given = data.get(section, {})
        if not isinstance(given, dict):
            errors.append(f"[{section}] must be a table")
            given = {}
        for key in given:
            if key not in keys:
                errors.append(f"unknown key {section}.{key}")
        out = {}
        for key, (kind, default) in keys.items():
            where = f"{section}.{key}"
            if key in given:
                out[key] = _check(given[key], kind, where, base, errors)
            elif default is _REQUIRED:
                errors.append(f"{where} is required")
                out[key] = None
            else:
                out[key] = default
        resolved[section] = out

    v, n, c, e = resolved["vectorizer"], resolved["nmf"], resolved["cluster"], resolved["eval"]
    if v["idf_mode"] not in ("smooth", "plain"):
        errors.append(f"vectorizer.idf_mode must be 'smooth' or 'plain', got {v['idf_mode']!r}")
    if c["provider"] not in ("lsa", "file"):
        errors.append(f"cluster.provider must be 'lsa' or 'file', got {c['provider']!r}")
    if c["provider"] == "file" and c["emb_file"] is None and "emb_file" not in data.get("cluster", {}):
        errors.append("cluster.emb_file is required when cluster.provider = 'file'")
    if e["enabled"] and e["truth"] is None and "truth" not in data.get("eval", {}):
        errors.append("eval.truth is required when eval.enabled = true")
    for where, value, low in (("nmf.k", n["k"], 1), ("nmf.max_iter", n["max_iter"], 1),
                              ("cluster.min_cluster_size", c["min_cluster_size"], 2),
                              ("cluster.dims", c["dims"], 2), ("cluster.reduce_dims", c["reduce_dims"], 2),
                              ("vectorizer.min_df", v["min_df"], 1)):
        if isinstance(value, int) and value < low:
            errors.append(f"{where} must be >= {low}, got {value}")

    if errors:
        raise ConfigurationError("; ".join(errors), errors)
    return PipelineConfig(**resolved, source=source)


def validate_config(path: Path) -> PipelineConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}", [str(exc)]) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}", [str(exc)]) from exc
    return parse_config(data, path.parent, path)
