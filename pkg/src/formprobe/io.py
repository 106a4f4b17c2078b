"""Binary container formats shared across the toolkit.

Every file starts with an ASCII magic line and a one-line JSON header,
then raw little-endian payload.  Form fields store C(N, q) row-major
complex scalar fields in lexicographic multi-index order; transformations
store either a catalog tag or dense per-node perturbation matrices.
"""

from __future__ import annotations

import json

import numpy as np

from .fields import FormField, GridSpec, n_components
from .media import (DENSE, IDENTITY, SCALAR, Transformation,
                    make_transformation, scalar_catalog)

FORM_MAGIC = b"FORMFLD1\n"
BOUNDARY_MAGIC = b"FORMBND1\n"
MEDIA_MAGIC = b"FORMEPS1\n"

MULTI_INDEX_ORDER = "lex-increasing"


def _write_header(fh, magic: bytes, header: dict):
    fh.write(magic)
    fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")


def _read_header(fh, magic: bytes) -> dict:
    got = fh.read(len(magic))
    if got != magic:
        raise ValueError(f"bad magic {got!r}, expected {magic!r}")
    return json.loads(fh.readline().decode("utf-8"))


def _payload_dtype(header: dict, kind: str) -> np.dtype:
    endian = "<" if header.get("endian", "little") == "little" else ">"
    return np.dtype(endian + kind)


# ---------------------------------------------------------------------------
# form fields
# ---------------------------------------------------------------------------

def save_form_field(path, e: FormField):
    if e.spectral:
        raise ValueError("spectral fields are not persisted")
    header = {"N": e.grid.dim, "q": e.rank, "L": e.grid.half_length,
              "n": e.grid.points, "order": MULTI_INDEX_ORDER,
              "endian": "little"}
    with open(path, "wb") as fh:
        _write_header(fh, FORM_MAGIC, header)
        fh.write(np.ascontiguousarray(e.data, "<c16").tobytes())


def load_form_field(path) -> FormField:
    with open(path, "rb") as fh:
        header = _read_header(fh, FORM_MAGIC)
        if header["order"] != MULTI_INDEX_ORDER:
            raise ValueError(f"unsupported multi-index order {header['order']!r}")
        grid = GridSpec(header["N"], header["L"], header["n"])
        nc = n_components(grid.dim, header["q"])
        raw = np.frombuffer(fh.read(), dtype=_payload_dtype(header, "c16"))
        data = raw.reshape((nc,) + grid.shape).astype(np.complex128)
    return FormField(grid, header["q"], data)


# ---------------------------------------------------------------------------
# boundary forms (forms on the (N-1)-plane)
# ---------------------------------------------------------------------------

def save_boundary_form(path, b: FormField):
    header = {"N_boundary": b.grid.dim, "q": b.rank, "L": b.grid.half_length,
              "n": b.grid.points, "order": MULTI_INDEX_ORDER,
              "endian": "little"}
    with open(path, "wb") as fh:
        _write_header(fh, BOUNDARY_MAGIC, header)
        fh.write(np.ascontiguousarray(b.data, "<c16").tobytes())


def load_boundary_form(path) -> FormField:
    with open(path, "rb") as fh:
        header = _read_header(fh, BOUNDARY_MAGIC)
        grid = GridSpec(header["N_boundary"], header["L"], header["n"])
        nc = n_components(grid.dim, header["q"])
        raw = np.frombuffer(fh.read(), dtype=_payload_dtype(header, "c16"))
        data = raw.reshape((nc,) + grid.shape).astype(np.complex128)
    return FormField(grid, header["q"], data)


# ---------------------------------------------------------------------------
# transformations
# ---------------------------------------------------------------------------

def save_transformation(path, eps: Transformation, catalog_tag: str | None = None,
                        catalog_params: dict | None = None):
    """Persist a transformation: catalog tag when given, dense otherwise."""
    header = {"N": eps.grid.dim, "q": eps.rank, "L": eps.grid.half_length,
              "n": eps.grid.points, "kind": eps.kind, "tau": eps.tau,
              "m": eps.smoothness, "decay": eps.decay_kind,
              "endian": "little"}
    if catalog_tag is not None:
        header["catalog"] = catalog_tag
        header["params"] = catalog_params or {}
        with open(path, "wb") as fh:
            _write_header(fh, MEDIA_MAGIC, header)
        return
    if eps.kind == IDENTITY:
        with open(path, "wb") as fh:
            _write_header(fh, MEDIA_MAGIC, header)
        return
    with open(path, "wb") as fh:
        _write_header(fh, MEDIA_MAGIC, header)
        fh.write(np.ascontiguousarray(eps.hat, "<f8").tobytes())


def load_transformation(path) -> Transformation:
    with open(path, "rb") as fh:
        header = _read_header(fh, MEDIA_MAGIC)
        grid = GridSpec(header["N"], header["L"], header["n"])
        if "catalog" in header:
            return scalar_catalog(grid, header["catalog"], **header.get("params", {}))
        kind = header["kind"]
        if kind == IDENTITY:
            return make_transformation(grid, header["q"], IDENTITY,
                                       tau=header["tau"],
                                       decay_kind=header["decay"],
                                       smoothness=header["m"])
        raw = np.frombuffer(fh.read(), dtype=_payload_dtype(header, "f8"))
        if kind == SCALAR:
            hat = raw.reshape(grid.shape).astype(float)
            return make_transformation(grid, header["q"], SCALAR, mu_hat=hat,
                                       tau=header["tau"],
                                       decay_kind=header["decay"],
                                       smoothness=header["m"])
        nc = n_components(grid.dim, header["q"])
        hat = raw.reshape((nc, nc) + grid.shape).astype(float)
        return make_transformation(grid, header["q"], DENSE, hat=hat,
                                   tau=header["tau"],
                                   decay_kind=header["decay"],
                                   smoothness=header["m"])
