"""JSON configuration files.

Schema::

    {
      "warehouse": {"layout": "single" | "two_block", "k": 15,
                    "aisle_length_m": 20, "aisle_width_m": 2.5, "speed_m_per_s": 0.83},
      "order": {"lambda": 10},
      "pick_time": {"type": "zero" | "deterministic" | "exponential" | "gamma", ...},
      "storage": {"type": "random"}
               | {"type": "class_based",
                  "classes": {"demand": [...], "boundaries": [...], "mirror": false}}
               | {"type": "explicit", "subaisles": [{"p": ..., "cdf": {"points": [...]}}]}
    }

Pick-time parameters are ``duration`` (deterministic), ``rate`` (exponential)
and ``shape`` + ``rate`` (gamma). Class boundaries list the interior bounds
``u_1 .. u_{Q-1}`` of every aisle. A two-block layout gives one such list per
block (upper block first), or a single list with ``"mirror": true`` to reuse
it in both blocks. Explicit sub-aisles are ordered aisle by aisle, upper block
first. Keys starting with ``_`` are ignored and may hold comments.
"""

from __future__ import annotations

import json
import math
import re
from importlib import resources
from pathlib import Path
from typing import Any

from .model import (
    PROB_SUM_TOL,
    ClassSpec,
    Layout,
    ModelError,
    OrderModel,
    PickTimeModel,
    PiecewiseLinearCdf,
    StorageProfile,
    SubAisle,
    WarehouseConfig,
    WarehouseGeometry,
    build_class_based_profile,
    build_random_profile,
    mirrored_boundaries,
)

MALFORMED = "E100"
MISSING_FIELD = "E101"
TYPE_MISMATCH = "E102"
OUT_OF_RANGE = "E103"
PROBABILITY_SUM = "E104"
BOUNDARY_ORDER = "E105"
EMPTY_CLASS = "E106"
SIZE_MISMATCH = "E107"
BAD_CDF = "E108"
UNKNOWN_VALUE = "E109"


class ConfigError(ValueError):
    def __init__(self, code: str, message: str, path: str = "", line: int | None = None):
        self.code = code
        self.path = path
        self.line = line
        where = path or "<root>"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"error[{code}] {where}: {message}")


def _line_of(text: str, path: tuple) -> int | None:
    # follow object keys through the raw text; list indices narrow nothing
    pos = 0
    found = False
    for part in path:
        if isinstance(part, str):
            m = re.compile(r'"' + re.escape(part) + r'"\s*:').search(text, pos)
            if m is None:
                break
            pos = m.start()
            found = True
    if not found:
        return None
    return text.count("\n", 0, pos) + 1


def _fmt(path: tuple) -> str:
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else part)
    return out


class _Reader:
    def __init__(self, text: str):
        self.text = text

    def fail(self, code: str, path: tuple, message: str):
        raise ConfigError(code, message, _fmt(path), _line_of(self.text, path))

    def get(self, obj: dict, key: str, path: tuple, default=...):
        if key not in obj:
            if default is not ...:
                return default
            self.fail(MISSING_FIELD, path + (key,), f"missing required field '{key}'")
        return obj[key]

    def obj(self, value, path) -> dict:
        if not isinstance(value, dict):
            self.fail(TYPE_MISMATCH, path, f"expected an object, got {type(value).__name__}")
        return value

    def array(self, value, path) -> list:
        if not isinstance(value, list):
            self.fail(TYPE_MISMATCH, path, f"expected an array, got {type(value).__name__}")
        return value

    def number(self, value, path) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(TYPE_MISMATCH, path, f"expected a number, got {json.dumps(value)}")
        if not math.isfinite(value):
            self.fail(OUT_OF_RANGE, path, "value must be finite")
        return float(value)

    def integer(self, value, path) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(TYPE_MISMATCH, path, f"expected an integer, got {json.dumps(value)}")
        return value

    def string(self, value, path) -> str:
        if not isinstance(value, str):
            self.fail(TYPE_MISMATCH, path, f"expected a string, got {json.dumps(value)}")
        return value

    def positive(self, obj, key, path) -> float:
        v = self.number(self.get(obj, key, path), path + (key,))
        if not v > 0:
            self.fail(OUT_OF_RANGE, path + (key,), f"must be > 0, got {v}")
        return v


def _geometry(r: _Reader, doc: dict) -> WarehouseGeometry:
    path = ("warehouse",)
    w = r.obj(r.get(doc, "warehouse", ()), path)
    layout_name = r.string(r.get(w, "layout", path), path + ("layout",))
    try:
        layout = Layout(layout_name)
    except ValueError:
        r.fail(UNKNOWN_VALUE, path + ("layout",), f"layout must be 'single' or 'two_block', got '{layout_name}'")
    k = r.integer(r.get(w, "k", path), path + ("k",))
    if k < 1:
        r.fail(OUT_OF_RANGE, path + ("k",), f"number of aisles must be >= 1, got {k}")
    length = r.positive(w, "aisle_length_m", path)
    width = r.number(r.get(w, "aisle_width_m", path), path + ("aisle_width_m",))
    if width < 0:
        r.fail(OUT_OF_RANGE, path + ("aisle_width_m",), f"must be >= 0, got {width}")
    speed = r.positive(w, "speed_m_per_s", path)
    return WarehouseGeometry(layout, k, length, width, speed)


def _pick_time(r: _Reader, doc: dict) -> PickTimeModel:
    path = ("pick_time",)
    p = r.obj(r.get(doc, "pick_time", ()), path)
    kind = r.string(r.get(p, "type", path), path + ("type",))
    if kind == "zero":
        return PickTimeModel.zero()
    if kind == "deterministic":
        d = r.number(r.get(p, "duration", path), path + ("duration",))
        if d < 0:
            r.fail(OUT_OF_RANGE, path + ("duration",), f"must be >= 0, got {d}")
        return PickTimeModel.deterministic(d)
    if kind == "exponential":
        return PickTimeModel.exponential(r.positive(p, "rate", path))
    if kind == "gamma":
        return PickTimeModel.gamma(r.positive(p, "shape", path), r.positive(p, "rate", path))
    r.fail(UNKNOWN_VALUE, path + ("type",), f"unknown pick-time type '{kind}'")


def _cdf(r: _Reader, value, path) -> PiecewiseLinearCdf:
    if value is None or value == "uniform":
        return PiecewiseLinearCdf.uniform()
    obj = r.obj(value, path)
    rows = r.array(r.get(obj, "points", path), path + ("points",))
    points = []
    for n, row in enumerate(rows):
        rpath = path + ("points", n)
        row = r.array(row, rpath)
        if len(row) != 3:
            r.fail(BAD_CDF, rpath, "each CDF point must be [x, F_left, F_right]")
        points.append([r.number(v, rpath) for v in row])
    try:
        return PiecewiseLinearCdf.from_points(points)
    except ModelError as exc:
        r.fail(BAD_CDF, path + ("points",), str(exc))


def _explicit(r: _Reader, s: dict, geom: WarehouseGeometry) -> StorageProfile:
    path = ("storage", "subaisles")
    rows = r.array(r.get(s, "subaisles", ("storage",)), path)
    if len(rows) != geom.n_subaisles:
        r.fail(SIZE_MISMATCH, path, f"expected {geom.n_subaisles} sub-aisles, got {len(rows)}")
    subs = []
    for n, row in enumerate(rows):
        rpath = path + (n,)
        row = r.obj(row, rpath)
        p = r.number(r.get(row, "p", rpath), rpath + ("p",))
        if p < 0:
            r.fail(OUT_OF_RANGE, rpath + ("p",), f"probability must be >= 0, got {p}")
        subs.append(SubAisle(p, _cdf(r, row.get("cdf"), rpath + ("cdf",))))
    total = math.fsum(sub.p for sub in subs)
    if abs(total - 1.0) > PROB_SUM_TOL:
        r.fail(PROBABILITY_SUM, path, f"sub-aisle probabilities sum to {total!r}, expected 1")
    b = geom.layout.blocks
    return StorageProfile(tuple(tuple(subs[i * b:(i + 1) * b]) for i in range(geom.k)))


def _boundary_rows(r: _Reader, rows, path, k: int, q: int) -> list[tuple[float, ...]]:
    rows = r.array(rows, path)
    if len(rows) != k:
        r.fail(SIZE_MISMATCH, path, f"expected boundaries for {k} aisles, got {len(rows)}")
    out = []
    for i, row in enumerate(rows):
        rpath = path + (i,)
        row = r.array(row, rpath)
        if len(row) != q - 1:
            r.fail(SIZE_MISMATCH, rpath, f"expected {q - 1} interior boundaries, got {len(row)}")
        full = [0.0] + [r.number(u, rpath) for u in row] + [1.0]
        if any(b < a for a, b in zip(full, full[1:])):
            r.fail(BOUNDARY_ORDER, rpath, "boundaries must be nondecreasing within [0, 1]")
        out.append(tuple(full))
    return out


def _class_based(r: _Reader, s: dict, geom: WarehouseGeometry) -> StorageProfile:
    path = ("storage", "classes")
    c = r.obj(r.get(s, "classes", ("storage",)), path)
    demand = [r.number(d, path + ("demand",)) for d in r.array(r.get(c, "demand", path), path + ("demand",))]
    if not demand:
        r.fail(SIZE_MISMATCH, path + ("demand",), "at least one class is required")
    if any(d < 0 for d in demand):
        r.fail(OUT_OF_RANGE, path + ("demand",), "class demand fractions must be >= 0")
    total = math.fsum(demand)
    if abs(total - 1.0) > PROB_SUM_TOL:
        r.fail(PROBABILITY_SUM, path + ("demand",), f"class demand fractions sum to {total!r}, expected 1")
    q = len(demand)
    bpath = path + ("boundaries",)
    raw = r.get(c, "boundaries", path)
    mirror = c.get("mirror", False)
    if not isinstance(mirror, bool):
        r.fail(TYPE_MISMATCH, path + ("mirror",), "expected true or false")

    if geom.layout is Layout.SINGLE_BLOCK:
        regions = _boundary_rows(r, raw, bpath, geom.k, q)
    elif mirror:
        regions = list(mirrored_boundaries(_boundary_rows(r, raw, bpath, geom.k, q)))
    else:
        blocks = r.array(raw, bpath)
        if len(blocks) != 2:
            r.fail(SIZE_MISMATCH, bpath, "two-block layouts need one boundary list per block")
        upper = _boundary_rows(r, blocks[0], bpath + (0,), geom.k, q)
        lower = _boundary_rows(r, blocks[1], bpath + (1,), geom.k, q)
        regions = [row for pair in zip(upper, lower) for row in pair]

    spec_demand = tuple(demand)
    space = [math.fsum(row[j + 1] - row[j] for row in regions) for j in range(q)]
    for j, (d, f) in enumerate(zip(spec_demand, space)):
        if d > 0 and f <= 0:
            r.fail(EMPTY_CLASS, bpath, f"class {j + 1} has demand {d} but no storage space")
    return build_class_based_profile(geom, ClassSpec(spec_demand, tuple(regions)))


def _storage(r: _Reader, doc: dict, geom: WarehouseGeometry) -> StorageProfile:
    path = ("storage",)
    s = r.obj(r.get(doc, "storage", ()), path)
    kind = r.string(r.get(s, "type", path), path + ("type",))
    if kind == "random":
        return build_random_profile(geom)
    if kind == "class_based":
        return _class_based(r, s, geom)
    if kind == "explicit":
        return _explicit(r, s, geom)
    r.fail(UNKNOWN_VALUE, path + ("type",), f"unknown storage type '{kind}'")


def parse_config_text(text: str) -> WarehouseConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(MALFORMED, exc.msg, line=exc.lineno) from None
    r = _Reader(text)
    doc = r.obj(doc, ())
    geom = _geometry(r, doc)
    order = r.obj(r.get(doc, "order", ()), ("order",))
    lam = r.positive(order, "lambda", ("order",))
    pick = _pick_time(r, doc)
    storage = _storage(r, doc, geom)
    try:
        return WarehouseConfig(geom, OrderModel(lam), pick, storage)
    except ModelError as exc:
        raise ConfigError(OUT_OF_RANGE, str(exc)) from None


def bundled_config_dir():
    return resources.files("pickingtime") / "configs"


def resolve_config_path(path: str | Path) -> Path:
    """Return ``path`` if it exists, else the bundled config of the same name."""
    p = Path(path)
    if p.exists():
        return p
    bundled = bundled_config_dir() / p.name
    if bundled.is_file():
        return Path(str(bundled))
    return p


def parse_config(path: str | Path) -> WarehouseConfig:
    p = resolve_config_path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(MALFORMED, f"cannot read {path}: {exc.strerror}") from None
    return parse_config_text(text)


def config_to_dict(config: WarehouseConfig) -> dict[str, Any]:
    """Normalized form: storage is always written out sub-aisle by sub-aisle."""
    geom = config.geometry
    pick = config.pick_time
    pick_doc: dict[str, Any] = {"type": pick.kind.value}
    if pick.kind.value == "deterministic":
        pick_doc["duration"] = pick.duration
    elif pick.kind.value == "exponential":
        pick_doc["rate"] = pick.rate
    elif pick.kind.value == "gamma":
        pick_doc.update(shape=pick.shape, rate=pick.rate)
    subaisles = [
        {"p": sub.p, "cdf": {"points": sub.cdf.to_points()}}
        for row in config.storage.subaisles
        for sub in row
    ]
    return {
        "warehouse": {
            "layout": geom.layout.value,
            "k": geom.k,
            "aisle_length_m": geom.aisle_length,
            "aisle_width_m": geom.aisle_width,
            "speed_m_per_s": geom.speed,
        },
        "order": {"lambda": config.lam},
        "pick_time": pick_doc,
        "storage": {"type": "explicit", "subaisles": subaisles},
    }


def dump_config(config: WarehouseConfig) -> str:
    return json.dumps(config_to_dict(config), indent=2) + "\n"
