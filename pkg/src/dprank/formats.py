"""Ballot files, histogram CSVs, experiment configs, CSV output and run manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import re
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .errors import BallotParseError, ConfigError, DegenerateInputError, DimensionError
from .ranking import Histogram, Permutation, PositionalRule
from .simulator import ExperimentConfig

CONFIG_DIR = Path(__file__).parent / "configs"

_RANGE = re.compile(r"^\s*(\S+)\s*\.\.\s*(\S+)\s+step\s+(\S+)\s*$")

CONFIG_KEYS = {"candidates", "rule", "epsilon", "delta", "delta_scale", "voters", "trials", "seed"}
REQUIRED_KEYS = {"candidates", "rule", "epsilon", "voters"}
SWEEP_COLUMNS = ["axis", "value", "trials", "errors", "rate", "ci_lo", "ci_hi", "ties",
                 "bound_theorem1", "bound_lemma3", "bound_rule"]


def fmt(x) -> str:
    """Fixed, platform-stable number formatting (17 significant digits for reals)."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


# ---------------------------------------------------------------- ballots

def parse_ballots(text: str) -> list[Permutation]:
    """One ballot per line as comma-separated candidate ids, best first.

    Blank lines and ``#`` comments are skipped.
    """
    ballots = []
    M = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            p = Permutation(tuple(int(tok) for tok in line.split(",")))
        except ValueError as exc:
            raise BallotParseError(f"malformed ballot {line!r} ({exc})", lineno) from None
        if M is None:
            M = p.M
        elif p.M != M:
            raise DimensionError(f"line {lineno}: ballot ranks {p.M} candidates, expected {M}")
        ballots.append(p)
    if not ballots:
        raise DegenerateInputError("no ballots found")
    return ballots


def read_ballots(path) -> list[Permutation]:
    return parse_ballots(Path(path).read_text())


def parse_histogram_csv(text: str, M: int) -> Histogram:
    """``perm_index,count`` rows; indices not listed count zero."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["perm_index", "count"]:
        raise BallotParseError("histogram CSV must start with header perm_index,count", 1)
    counts = np.zeros(math.factorial(M))
    for lineno, row in enumerate(rows[1:], 2):
        if not row:
            continue
        try:
            k, c = int(row[0]), float(row[1])
        except (ValueError, IndexError):
            raise BallotParseError(f"malformed row {row!r}", lineno) from None
        if not 0 <= k < counts.size:
            raise DimensionError(f"line {lineno}: perm_index {k} out of range for M={M}")
        counts[k] += c
    return Histogram(counts, M)


def histogram_csv(h: Histogram) -> str:
    return to_csv(["perm_index", "count"], enumerate(h.counts.tolist()))


# ---------------------------------------------------------------- configs

def parse_values(text: str) -> list[float]:
    """``a..b step c`` or a comma list."""
    m = _RANGE.match(text)
    if m:
        a, b, c = (float(g) for g in m.groups())
        if c <= 0 or b < a:
            raise ValueError(f"bad range {text!r}")
        n = int(math.floor((b - a) / c + 1e-9))
        return [round(a + k * c, 12) for k in range(n + 1)]
    return [float(tok) for tok in text.split(",") if tok.strip()]


def parse_config_text(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key] = value
    return raw


def _as_int(x, key):
    if float(x) != int(float(x)):
        raise ConfigError("integer expected for", [key])
    return int(float(x))


def build_config(raw: dict) -> ExperimentConfig:
    """Validate a flat key/value mapping into an :class:`ExperimentConfig`."""
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise ConfigError("unknown config keys", unknown)
    missing = REQUIRED_KEYS - set(raw)
    if missing:
        raise ConfigError("missing config keys", missing)
    if ("delta" in raw) == ("delta_scale" in raw):
        raise ConfigError("set exactly one of", ["delta", "delta_scale"])
    bad = set()
    parsed = {}
    for key in ("epsilon", "voters"):
        try:
            parsed[key] = parse_values(str(raw[key]))
        except ValueError:
            bad.add(key)
    if bad:
        raise ConfigError("unparseable values for", bad)
    swept = [k for k in ("epsilon", "voters") if len(parsed[k]) > 1]
    if len(swept) > 1:
        raise ConfigError("only one key may be swept", swept)
    try:
        M = _as_int(raw["candidates"], "candidates")
        rule = PositionalRule.parse(str(raw["rule"]), M)
        voters = [_as_int(v, "voters") for v in parsed["voters"]]
        kwargs = dict(
            M=M, rule=rule, epsilon=parsed["epsilon"][0], N=voters[0],
            trials=_as_int(raw.get("trials", 10_000), "trials"),
            seed=_as_int(raw.get("seed", 0), "seed"),
        )
        if "delta" in raw:
            kwargs["delta"] = float(raw["delta"])
        else:
            kwargs["delta_scale"] = float(raw["delta_scale"])
        if swept == ["epsilon"]:
            kwargs.update(axis="epsilon", values=tuple(parsed["epsilon"]))
        elif swept == ["voters"]:
            kwargs.update(axis="N", values=tuple(voters))
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"invalid config ({exc})", [k for k in raw if k in str(exc)]) from None


def load_config(path_or_name) -> ExperimentConfig:
    """Read a ``.cfg`` file, a manifest ``.json``, or a bundled config by name."""
    path = Path(path_or_name)
    if not path.exists() and (CONFIG_DIR / f"{path_or_name}.cfg").exists():
        path = CONFIG_DIR / f"{path_or_name}.cfg"
    if not path.exists():
        raise ConfigError(f"config not found: {path_or_name}")
    text = path.read_text()
    if path.suffix == ".json":
        return build_config(json.loads(text)["config"])
    return build_config(parse_config_text(text))


def config_to_dict(config: ExperimentConfig) -> dict:
    """Fully resolved flat config, re-loadable by :func:`build_config`."""
    d = {
        "candidates": config.M,
        "rule": config.rule.spec(),
        "epsilon": fmt(config.epsilon),
        "voters": fmt(config.N),
        "trials": config.trials,
        "seed": config.seed,
    }
    if config.axis == "epsilon":
        d["epsilon"] = ",".join(fmt(v) for v in config.values)
    elif config.axis == "N":
        d["voters"] = ",".join(fmt(int(v)) for v in config.values)
    if config.delta is not None:
        d["delta"] = fmt(config.delta)
    else:
        d["delta_scale"] = fmt(config.delta_scale)
    return d


def sweep_csv(rows) -> str:
    out = []
    for r in rows:
        e = r.estimate
        value = int(r.value) if r.axis == "N" else float(r.value)
        out.append([r.axis, value, e.trials, e.errors, e.point, e.ci95[0], e.ci95[1], e.ties,
                    r.general, r.jensen, r.rule_specific])
    return to_csv(SWEEP_COLUMNS, out)


def manifest(command: str, config: dict, output: str, content: str) -> dict:
    return {
        "tool": "dprank",
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "command": command,
        "config": config,
        "output": output,
        "sha256": hashlib.sha256(content.encode()).hexdigest(),
    }


def write_with_manifest(path, content: str, command: str, config: dict) -> Path:
    path = Path(path)
    path.write_text(content, newline="\n")
    mpath = path.with_name(path.name + ".manifest.json")
    mpath.write_text(json.dumps(manifest(command, config, path.name, content), indent=2,
                                sort_keys=True) + "\n")
    return mpath
