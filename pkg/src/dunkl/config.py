"""Run configuration: JSON descriptors, seeds and command-line values."""

from __future__ import annotations

import functools
import importlib.resources
import json
import os
import pathlib

import jsonschema

import dunkl.dihedral
import dunkl.errors
import dunkl.simulate

SEED_ENV = "DUNKL_SEED"


@functools.lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    """Load a bundled JSON schema by name ("system" or "simulation")."""
    resource = importlib.resources.files("dunkl") / "schema"
    text = (resource / f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_record(obj, schema_name: str) -> None:
    """Validate obj against a bundled schema.

    Raises:
        DomainError: With the schema's message when obj does not match.
    """
    try:
        jsonschema.validate(obj, load_schema(schema_name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(part) for part in exc.absolute_path)
        prefix = f"{schema_name} config"
        if where:
            prefix = f"{prefix} at {where}"
        raise dunkl.errors.DomainError(f"{prefix}: {exc.message}") from None


def system_from_descriptor(obj: dict) -> dunkl.dihedral.DihedralSystem:
    """Build a system from {"n", "k0", "k1"?}."""
    validate_record(obj, "system")
    return dunkl.dihedral.make_system(obj["n"], obj["k0"], obj.get("k1"))


def sim_config_from_dict(
    obj: dict, seed: int | None = None
) -> dunkl.simulate.SimConfig:
    """Build a SimConfig; an explicit seed overrides the record's."""
    validate_record(obj, "simulation")
    r, theta = obj["start"]
    return dunkl.simulate.SimConfig(
        t_max=float(obj["t_max"]),
        dt=float(obj["dt"]),
        n_paths=int(obj["n_paths"]),
        seed=resolve_seed(seed if seed is not None else obj.get("seed")),
        start=dunkl.dihedral.PolarPoint(float(r), float(theta)),
        workers=int(obj.get("workers", 1)),
        bridge_correction=bool(obj.get("bridge_correction", True)),
    )


def load_json(path: str) -> dict:
    try:
        return json.loads(pathlib.Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise dunkl.errors.DomainError(
            f"{path}: invalid JSON ({exc})"
        ) from None


def resolve_seed(seed: int | None, environ=None) -> int:
    """Explicit seed, else $DUNKL_SEED, else 0."""
    environ = os.environ if environ is None else environ
    if seed is None:
        raw = environ.get(SEED_ENV, "").strip()
        if not raw:
            return 0
        try:
            seed = int(raw)
        except ValueError:
            raise dunkl.errors.DomainError(
                f"{SEED_ENV} must be an integer: {raw!r}"
            ) from None
    if not 0 <= seed < 2**64:
        raise dunkl.errors.DomainError(f"seed must fit in 64 bits: {seed}")
    return seed


def parse_floats(text: str) -> list[float]:
    """Parse "a,b,c" into floats."""
    parts = [part.strip() for part in text.split(",")]
    try:
        return [float(part) for part in parts if part]
    except ValueError:
        raise dunkl.errors.DomainError(
            f"expected comma-separated numbers: {text!r}"
        ) from None


def parse_point(text: str) -> dunkl.dihedral.PolarPoint:
    """Parse "r,theta" into a PolarPoint."""
    values = parse_floats(text)
    if len(values) != 2:
        raise dunkl.errors.DomainError(f"expected r,theta: {text!r}")
    return dunkl.dihedral.PolarPoint(*values)


def parse_grid(text: str) -> list[float]:
    """Parse "start:stop:count" or a comma list into grid values."""
    if ":" not in text:
        return parse_floats(text)
    pieces = text.split(":")
    if len(pieces) != 3:
        raise dunkl.errors.DomainError(f"expected start:stop:count: {text!r}")
    bounds = parse_floats(f"{pieces[0]},{pieces[1]}")
    if len(bounds) != 2:
        raise dunkl.errors.DomainError(f"expected start:stop:count: {text!r}")
    start, stop = bounds
    try:
        count = int(pieces[2])
    except ValueError:
        raise dunkl.errors.DomainError(
            f"grid count must be an integer: {text!r}"
        ) from None
    if count < 1:
        raise dunkl.errors.DomainError(f"grid count must be >= 1: {count}")
    if count == 1:
        return [start]
    step = (stop - start) / (count - 1)
    return [start + i * step for i in range(count)]
