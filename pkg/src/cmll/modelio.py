"""Versioned binary model files.

Layout: magic line "CMLLMDL", version line "1", a header of typed field
lines (`int`/`float`/`str`/`array name dims...`), an "end" line, then the
raw little-endian float64 payloads of every declared array in order.
Scalars use hexadecimal float notation so round-trips are bit-exact.
"""

from __future__ import annotations

import numpy as np

from .embedding import CmllModel, CmllParams
from .errors import ModelFormatError
from .kernels import KcmllModel, KernelSpec
from .learner import Pipeline, Regressor, Scaler

MAGIC = "CMLLMDL"
VERSION = "1"


# ---------------------------------------------------------------------------
# field-list encoding

def _encode(kind: str, fields) -> bytes:
    header = [MAGIC, VERSION, f"kind {kind}"]
    payload = bytearray()
    for ftype, name, value in fields:
        if ftype == "int":
            header.append(f"int {name} {int(value)}")
        elif ftype == "float":
            header.append(f"float {name} {float(value).hex()}")
        elif ftype == "str":
            header.append(f"str {name} {value}")
        elif ftype == "array":
            arr = np.ascontiguousarray(value, dtype="<f8")
            dims = " ".join(str(d) for d in arr.shape)
            header.append(f"array {name} {dims}")
            payload.extend(arr.tobytes(order="C"))
        else:
            raise ModelFormatError(f"unknown field type {ftype!r}")
    header.append("end")
    return "\n".join(header).encode("ascii") + b"\n" + bytes(payload)


def _read_line(buf: bytes, pos: int):
    nl = buf.find(b"\n", pos)
    if nl < 0:
        raise ModelFormatError("truncated header")
    try:
        return buf[pos:nl].decode("ascii"), nl + 1
    except UnicodeDecodeError as exc:
        raise ModelFormatError("non-ASCII bytes in header") from exc


def _decode(buf: bytes):
    line, pos = _read_line(buf, 0)
    if line != MAGIC:
        raise ModelFormatError(f"bad magic {line!r}")
    line, pos = _read_line(buf, pos)
    if line != VERSION:
        raise ModelFormatError(f"unsupported version tag {line!r}")
    line, pos = _read_line(buf, pos)
    if not line.startswith("kind "):
        raise ModelFormatError("missing kind line")
    kind = line[5:]

    fields: dict = {}
    arrays = []  # (name, shape) in declaration order
    while True:
        line, pos = _read_line(buf, pos)
        if line == "end":
            break
        parts = line.split(" ")
        ftype, name = parts[0], parts[1] if len(parts) > 1 else ""
        try:
            if ftype == "int":
                fields[name] = int(parts[2])
            elif ftype == "float":
                fields[name] = float.fromhex(parts[2])
            elif ftype == "str":
                fields[name] = " ".join(parts[2:])
            elif ftype == "array":
                shape = tuple(int(p) for p in parts[2:])
                if any(d < 0 for d in shape) or not 1 <= len(shape) <= 2:
                    raise ModelFormatError(f"bad dimensions for array {name!r}: {shape}")
                arrays.append((name, shape))
            else:
                raise ModelFormatError(f"unknown field line {line!r}")
        except ModelFormatError:
            raise
        except (ValueError, IndexError) as exc:
            raise ModelFormatError(f"malformed field line {line!r}") from exc

    payload = buf[pos:]
    offset = 0
    for name, shape in arrays:
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(payload):
            raise ModelFormatError(
                f"truncated payload: array {name!r} declares shape {shape} "
                f"but only {(len(payload) - offset) // 8} floats remain"
            )
        fields[name] = np.frombuffer(
            payload, dtype="<f8", count=count, offset=offset
        ).reshape(shape).copy()
        offset += nbytes
    if offset != len(payload):
        raise ModelFormatError(
            f"payload length mismatch: {len(payload) - offset} undeclared trailing bytes"
        )
    return kind, fields


# ---------------------------------------------------------------------------
# per-model field lists

def _params_fields(prefix: str, p: CmllParams):
    return [
        ("float", prefix + "beta", p.beta),
        ("float", prefix + "lambda", p.lam),
        ("int", prefix + "m", p.m),
        ("int", prefix + "d", p.d),
        ("int", prefix + "maxc", p.maxc),
        ("float", prefix + "tol", p.tol),
        ("int", prefix + "seed", p.seed),
    ]


def _params_from(prefix: str, f: dict) -> CmllParams:
    return CmllParams(
        beta=f[prefix + "beta"], lam=f[prefix + "lambda"], m=f[prefix + "m"],
        d=f[prefix + "d"], maxc=f[prefix + "maxc"], tol=f[prefix + "tol"],
        seed=f[prefix + "seed"],
    )


def _trace_array(trace) -> np.ndarray:
    return np.array(trace, dtype=np.float64).reshape(-1, 2)


def _cmll_fields(m: CmllModel, prefix: str = ""):
    return [
        ("str", prefix + "method", m.method),
        *_params_fields(prefix + "p.", m.params),
        ("array", prefix + "P", m.P),
        ("array", prefix + "V", m.V),
        ("array", prefix + "W", m.W),
        ("array", prefix + "feature_means", m.feature_means),
        ("array", prefix + "trace", _trace_array(m.trace)),
    ]


def _cmll_from(f: dict, prefix: str = "") -> CmllModel:
    return CmllModel(
        P=f[prefix + "P"], V=f[prefix + "V"], W=f[prefix + "W"],
        feature_means=f[prefix + "feature_means"],
        params=_params_from(prefix + "p.", f),
        trace=[tuple(row) for row in f[prefix + "trace"]],
        method=f[prefix + "method"],
    )


def _kernel_fields(prefix: str, spec: KernelSpec):
    out = [("str", prefix + "kernel", spec.kind)]
    if spec.kind == "rbf":
        out.append(("float", prefix + "gamma", float(spec.gamma)))
    return out


def _kernel_from(prefix: str, f: dict) -> KernelSpec:
    kind = f[prefix + "kernel"]
    gamma = f.get(prefix + "gamma")
    return KernelSpec(kind=kind, gamma=gamma)


def _kcmll_fields(m: KcmllModel, prefix: str = ""):
    return [
        ("str", prefix + "method", m.method),
        *_params_fields(prefix + "p.", m.params),
        *_kernel_fields(prefix, m.spec),
        ("array", prefix + "R", m.R),
        ("array", prefix + "V", m.V),
        ("array", prefix + "W", m.W),
        ("array", prefix + "X_train", m.X_train),
        ("array", prefix + "q_col_means", m.q_col_means),
        ("array", prefix + "trace", _trace_array(m.trace)),
    ]


def _kcmll_from(f: dict, prefix: str = "") -> KcmllModel:
    return KcmllModel(
        R=f[prefix + "R"], V=f[prefix + "V"], W=f[prefix + "W"],
        X_train=f[prefix + "X_train"], q_col_means=f[prefix + "q_col_means"],
        spec=_kernel_from(prefix, f), params=_params_from(prefix + "p.", f),
        trace=[tuple(row) for row in f[prefix + "trace"]],
        method=f[prefix + "method"],
    )


def _regressor_fields(r: Regressor, prefix: str = "reg."):
    out = [
        ("str", prefix + "kind", r.kind),
        ("float", prefix + "rho", r.rho),
        ("array", prefix + "coef", r.coef),
        ("array", prefix + "input_means", r.input_means),
        ("array", prefix + "target_means", r.target_means),
    ]
    if r.kind == "kernel-ridge":
        out.extend(_kernel_fields(prefix, r.spec))
        out.append(("array", prefix + "U_train", r.U_train))
    return out


def _regressor_from(f: dict, prefix: str = "reg.") -> Regressor:
    kind = f[prefix + "kind"]
    spec = _kernel_from(prefix, f) if kind == "kernel-ridge" else None
    return Regressor(
        kind=kind, coef=f[prefix + "coef"], input_means=f[prefix + "input_means"],
        target_means=f[prefix + "target_means"], rho=f[prefix + "rho"],
        spec=spec, U_train=f.get(prefix + "U_train"),
    )


def _pipeline_fields(p: Pipeline):
    fields = [
        ("str", "method", p.method),
        ("float", "delta", p.delta),
    ]
    if p.embedding is None:
        fields.append(("str", "embedding", "none"))
    elif isinstance(p.embedding, KcmllModel):
        fields.append(("str", "embedding", "kcmll"))
        fields.extend(_kcmll_fields(p.embedding, "emb."))
    else:
        fields.append(("str", "embedding", "cmll"))
        fields.extend(_cmll_fields(p.embedding, "emb."))
    fields.extend(_regressor_fields(p.regressor))
    fields.append(("str", "scaler", "yes" if p.scaler is not None else "no"))
    if p.scaler is not None:
        fields.append(("array", "scaler.means", p.scaler.means))
        fields.append(("array", "scaler.scales", p.scaler.scales))
    return fields


def _pipeline_from(f: dict) -> Pipeline:
    emb_kind = f["embedding"]
    if emb_kind == "none":
        embedding = None
    elif emb_kind == "kcmll":
        embedding = _kcmll_from(f, "emb.")
    elif emb_kind == "cmll":
        embedding = _cmll_from(f, "emb.")
    else:
        raise ModelFormatError(f"unknown embedding kind {emb_kind!r}")
    scaler = None
    if f.get("scaler") == "yes":
        scaler = Scaler(means=f["scaler.means"], scales=f["scaler.scales"])
    return Pipeline(
        regressor=_regressor_from(f), delta=f["delta"], embedding=embedding,
        scaler=scaler, method=f["method"],
    )


# ---------------------------------------------------------------------------
# public API

def save_model(model) -> bytes:
    """Serialize a CmllModel, KcmllModel, or Pipeline to bytes."""
    if isinstance(model, Pipeline):
        return _encode("pipeline", _pipeline_fields(model))
    if isinstance(model, KcmllModel):
        return _encode("kcmll", _kcmll_fields(model))
    if isinstance(model, CmllModel):
        return _encode("cmll", _cmll_fields(model))
    raise ModelFormatError(f"cannot serialize object of type {type(model).__name__}")


def load_model(data: bytes):
    """Inverse of save_model; raises ModelFormatError on any inconsistency."""
    kind, fields = _decode(data)
    try:
        if kind == "pipeline":
            return _pipeline_from(fields)
        if kind == "kcmll":
            return _kcmll_from(fields)
        if kind == "cmll":
            return _cmll_from(fields)
    except KeyError as exc:
        raise ModelFormatError(f"missing field {exc.args[0]!r}") from exc
    raise ModelFormatError(f"unknown model kind {kind!r}")


def save_model_file(model, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_model(model))


def load_model_file(path):
    with open(path, "rb") as fh:
        return load_model(fh.read())
