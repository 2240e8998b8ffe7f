"""On-disk caches for group enumerations and section bases.

File layout::

    POINCARE-KERNEL-CACHE 1\\n
    {json header}\\n
    raw array bytes

The header lists each array's name, dtype, shape and byte length, plus a
SHA-256 digest of the header body (without the digest) followed by the
payload.  Loading recomputes the digest; any mismatch or truncation raises
``CacheIntegrityError``.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .errors import CacheIntegrityError, ConfigError
from .geometry import (
    ELEMENT_CAP,
    WORD_CAP,
    LatticeSet,
    MobiusElement,
    MobiusSet,
    space_from_config,
)
from .quadrature import QuadratureSpec

MAGIC = b"POINCARE-KERNEL-CACHE 1\n"
CACHE_ENV = "POINCARE_KERNEL_CACHE"


def cache_dir(path=None) -> Path:
    """Cache directory: explicit path, else $POINCARE_KERNEL_CACHE, else ~/.cache/poincare_kernel."""
    if path is None:
        path = os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "poincare_kernel"
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def write_arrays(path, kind: str, meta: dict, arrays: dict) -> None:
    """Write named arrays with a hashed header; the write is atomic via rename."""
    specs, blobs = [], []
    for name in sorted(arrays):
        a = np.ascontiguousarray(arrays[name])
        a = a.astype(a.dtype.newbyteorder("<"), copy=False)
        blob = a.tobytes()
        specs.append({"name": name, "dtype": a.dtype.str, "shape": list(a.shape), "nbytes": len(blob)})
        blobs.append(blob)
    body = {"kind": kind, "meta": meta, "arrays": specs}
    payload = b"".join(blobs)
    digest = hashlib.sha256(_canonical(body) + payload).hexdigest()
    header = dict(body, sha256=digest)
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_canonical(header) + b"\n")
        fh.write(payload)
    os.replace(tmp, path)


def read_arrays(path):
    """Return (kind, meta, arrays) after checking magic, length and digest."""
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise CacheIntegrityError(f"{path}: not a cache file")
    rest = data[len(MAGIC):]
    nl = rest.find(b"\n")
    if nl < 0:
        raise CacheIntegrityError(f"{path}: truncated header")
    try:
        header = json.loads(rest[:nl])
    except json.JSONDecodeError as exc:
        raise CacheIntegrityError(f"{path}: corrupt header") from exc
    payload = rest[nl + 1:]
    digest = header.pop("sha256", None)
    expected = sum(s["nbytes"] for s in header.get("arrays", []))
    if len(payload) != expected:
        raise CacheIntegrityError(f"{path}: payload has {len(payload)} bytes, expected {expected}")
    if hashlib.sha256(_canonical(header) + payload).hexdigest() != digest:
        raise CacheIntegrityError(f"{path}: content hash mismatch")
    arrays, off = {}, 0
    for s in header["arrays"]:
        buf = payload[off:off + s["nbytes"]]
        arrays[s["name"]] = np.frombuffer(buf, dtype=np.dtype(s["dtype"])).reshape(s["shape"]).copy()
        off += s["nbytes"]
    return header["kind"], header["meta"], arrays


# ---------------------------------------------------------------------------
# group enumerations


def save_group(path, space, elems, radius: float, cap: int = ELEMENT_CAP, word_cap: int = WORD_CAP) -> None:
    meta = {"space": space.to_config(), "radius": float(radius), "cap": int(cap), "word_cap": int(word_cap)}
    if isinstance(elems, LatticeSet):
        arrays = {"m": elems.m, "n": elems.n, "displacement": elems.displacement}
        write_arrays(path, "lattice", meta, arrays)
        return
    arrays = {"a": elems.a, "b": elems.b, "parent": elems.parent, "gen": elems.gen,
              "displacement": elems.displacement}
    for side in ("left", "right"):
        g = getattr(elems, side)
        if g is not None:
            arrays[side] = np.array([g.a, g.b], dtype=complex)
    write_arrays(path, "mobius", meta, arrays)


def load_group(path):
    """Return (space, element set, meta)."""
    kind, meta, arr = read_arrays(path)
    space = space_from_config(meta["space"])
    if kind == "lattice":
        return space, LatticeSet(arr["m"], arr["n"], space.tau, arr["displacement"]), meta
    if kind != "mobius":
        raise CacheIntegrityError(f"{path}: unexpected cache kind {kind!r}")
    side = {k: MobiusElement(complex(arr[k][0]), complex(arr[k][1])) for k in ("left", "right") if k in arr}
    elems = MobiusSet(arr["a"], arr["b"], arr["parent"], arr["gen"], arr["displacement"],
                      side.get("left"), side.get("right"))
    return space, elems, meta


def group_key(space, radius: float, cap: int = ELEMENT_CAP, word_cap: int = WORD_CAP) -> str:
    key = {"space": space.to_config(), "radius": repr(float(radius)), "cap": int(cap), "word_cap": int(word_cap)}
    return hashlib.sha256(_canonical(key)).hexdigest()[:20]


def cached_enumerate(space, radius: float, cap: int = ELEMENT_CAP, word_cap: int = WORD_CAP, directory=None):
    """Ball enumeration around 0, read from the cache when a matching file exists."""
    path = cache_dir(directory) / f"group-{group_key(space, radius, cap, word_cap)}.pkc"
    if path.exists():
        return load_group(path)[1]
    if space.kind == "flat":
        elems = space.enumerate(0j, radius, cap=cap)
    else:
        elems = space.enumerate(0j, radius, cap=cap, word_cap=word_cap)
    save_group(path, space, elems, radius, cap, word_cap)
    return elems


# ---------------------------------------------------------------------------
# section bases


def save_basis(path, basis) -> None:
    q = basis.quadrature
    meta = {"space": basis.space.to_config(), "family": basis.family.describe(), "rank": int(basis.rank),
            "gram_error": float(basis.gram_error), "gram_flagged": bool(basis.gram_flagged),
            "method": basis.method, "quadrature": {"label": q.label, "order": int(q.order),
                                                   "error_estimate": q.error_estimate}}
    arrays = {"gram": basis.gram, "coefficients": basis.coefficients, "nodes": q.nodes, "weights": q.weights}
    write_arrays(path, "basis", meta, arrays)


def _rebuild_family(space, desc: dict):
    from .quotient import PoincareFamily, ThetaFamily

    name = desc.get("family")
    if name == "theta":
        return ThetaFamily(space, int(desc["N"]))
    if name == "poincare-monomials":
        return PoincareFamily(space, int(desc["t"]), J=int(desc["J"]), radius=float(desc["radius"]))
    raise ConfigError(f"cannot rebuild section family {name!r} from its description")


def load_basis(path):
    from .quotient import SectionBasis

    kind, meta, arr = read_arrays(path)
    if kind != "basis":
        raise CacheIntegrityError(f"{path}: expected a basis file, found {kind!r}")
    space = space_from_config(meta["space"])
    family = _rebuild_family(space, meta["family"])
    qm = meta["quadrature"]
    quad = QuadratureSpec(arr["nodes"], arr["weights"], qm["label"], qm["order"], qm["error_estimate"])
    return SectionBasis(family, arr["gram"], arr["coefficients"], meta["rank"], quad, meta["gram_error"],
                        meta["gram_flagged"], meta["method"])
