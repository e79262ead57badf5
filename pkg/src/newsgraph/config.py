"""Plain-text run configuration.

A config file is a sequence of ``key = value`` lines.  ``#`` starts a
comment, blank lines are skipped, and when a key repeats the last
assignment wins.  Command-line flags override file values; the resolved
result is what ends up in the run manifest, so a run can always be
reproduced from its manifest alone.

Sweep axes use a small grid syntax: ``4..15`` counts through the
integers, ``0.1..0.8`` steps a float range (default step 0.1, or give
one explicitly as ``0.1..0.8:0.05``), and ``2,4,8`` lists values
directly.
"""

from dataclasses import fields, replace

from .trainer import TrainConfig

__all__ = [
    "read_config_file",
    "parse_scalar",
    "parse_grid",
    "resolve_config",
]

_NONE_WORDS = ("none", "null")
_BOOL_WORDS = {"true": True, "false": False, "yes": True, "no": False,
               "1": True, "0": False}


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines into a string-to-string mapping."""
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(
                    f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not key or not value:
                raise ValueError(
                    f"{path}:{lineno}: empty key or value in {raw!r}")
            values[key] = value
    return values


def parse_scalar(text: str):
    """Best-effort typed read: int, then float, bool words, None words,
    comma tuples, falling back to the bare string."""
    text = text.strip()
    if text.lower() in _NONE_WORDS:
        return None
    if text.lower() in ("true", "false", "yes", "no"):
        return _BOOL_WORDS[text.lower()]
    if "," in text:
        return tuple(parse_scalar(part) for part in text.split(","))
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_grid(text: str) -> list:
    """Read a sweep axis: ``a..b``, ``a..b:step``, ``x,y,z`` or one value."""
    text = text.strip()
    if not text:
        raise ValueError("empty grid")
    if "," in text:
        return [parse_scalar(part) for part in text.split(",")]
    if ".." not in text:
        return [parse_scalar(text)]

    head, _, tail = text.partition("..")
    step_text = None
    if ":" in tail:
        tail, _, step_text = tail.partition(":")
    lo, hi = parse_scalar(head), parse_scalar(tail)
    if not all(isinstance(v, (int, float)) for v in (lo, hi)):
        raise ValueError(f"grid endpoints must be numbers: {text!r}")
    if hi < lo:
        raise ValueError(f"grid runs backwards: {text!r}")

    if isinstance(lo, int) and isinstance(hi, int):
        step = parse_scalar(step_text) if step_text else 1
        if not isinstance(step, int) or step < 1:
            raise ValueError(f"integer grid needs a positive integer step: {text!r}")
        return list(range(lo, hi + 1, step))

    step = parse_scalar(step_text) if step_text else 0.1
    if not isinstance(step, (int, float)) or step <= 0:
        raise ValueError(f"float grid needs a positive step: {text!r}")
    count = int(round((hi - lo) / step)) + 1
    values = [round(lo + i * step, 10) for i in range(count)]
    return [v for v in values if v <= hi + 1e-9]


def _coerce(name: str, default, value):
    """Fit a parsed value to the type of the matching TrainConfig field."""
    if value is None:
        if name in ("alpha", "d_hid"):
            return None
        raise ValueError(f"{name} cannot be none")
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, int) and value in (0, 1):
            return bool(value)
        raise ValueError(f"{name} expects true/false, got {value!r}")
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"{name} expects an integer, got {value!r}")
        return value
    if isinstance(default, float) or name == "alpha":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"{name} expects a number, got {value!r}")
        return float(value)
    if isinstance(default, tuple) or name == "split":
        if not isinstance(value, tuple):
            raise ValueError(f"{name} expects comma-separated values")
        return tuple(float(v) for v in value)
    if default is None and name == "d_hid":
        if not isinstance(value, int):
            raise ValueError(f"{name} expects an integer, got {value!r}")
        return value
    return str(value)


_DEFAULTS = {f.name: f.default for f in fields(TrainConfig)}


def resolve_config(file_values: dict | None = None,
                   overrides: dict | None = None,
                   base: TrainConfig | None = None) -> TrainConfig:
    """Merge file values and overrides (overrides win) onto the defaults.

    Both mappings carry raw strings; unknown keys raise so typos never
    silently vanish into a run.
    """
    cfg = base if base is not None else TrainConfig()
    merged: dict = {}
    for source in (file_values or {}, overrides or {}):
        for key, text in source.items():
            if key not in _DEFAULTS:
                raise ValueError(f"unknown config key {key!r}")
            parsed = parse_scalar(text) if isinstance(text, str) else text
            merged[key] = _coerce(key, _DEFAULTS[key], parsed)
    return replace(cfg, **merged)
