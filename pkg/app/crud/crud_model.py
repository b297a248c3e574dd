"""
============================================================================
MODEL CRUD OPERATIONS
============================================================================
Persistence ModelState dalam satu binary container.

Layout (little-endian):
    magic       4 bytes   b"PSCM"
    version     uint16    FORMAT_VERSION
    header_len  uint32
    header      UTF-8 JSON (sorted keys): alphabet, geometry, bg_color,
                provenance, seed, label, history, model_id
    planes      float64 N x K x K, urutan alphabet
    checksum    32 bytes  SHA-256 dari semua bytes sebelumnya

Round trip load(save(s)) bit-identical.
============================================================================
"""

import hashlib
import json
import struct
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from app.core.config import settings
from app.core.errors import ChecksumError, ModelFileError, VersionMismatchError
from app.core.logging import get_logger
from app.crud.base import FileStore, PathLike
from app.schemas.image import GrayImage
from app.schemas.model import ModelState, Prototype, Provenance

logger = get_logger(__name__)

MAGIC = b"PSCM"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sHI")
_DIGEST = 32


class CRUDModel(FileStore[ModelState]):
    """
    File store untuk ModelState.

    Additional methods:
        - read_header: parse header saja (tanpa planes)
        - find_parent: cari file parent di directory yang sama
    """

    suffix = settings.MODEL_SUFFIX
    error_cls = ModelFileError

    def encode(self, state: ModelState) -> bytes:
        header = dict(state.header(), model_id=state.model_id)
        header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
        planes = np.ascontiguousarray(state.planes(), dtype="<f8").tobytes()
        body = _PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)) + header_bytes + planes
        return body + hashlib.sha256(body).digest()

    def _split(self, payload: bytes, path: Path) -> Dict[str, Any]:
        if len(payload) < _PREFIX.size + _DIGEST:
            raise ChecksumError(f"{path}: file truncated ({len(payload)} bytes)")
        magic, version, header_len = _PREFIX.unpack_from(payload)
        if magic != MAGIC:
            raise ModelFileError(f"{path}: not a model file (bad magic {magic!r})")
        if version != FORMAT_VERSION:
            raise VersionMismatchError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
        body, digest = payload[:-_DIGEST], payload[-_DIGEST:]
        if hashlib.sha256(body).digest() != digest:
            raise ChecksumError(f"{path}: checksum mismatch (file truncated or corrupted)")
        start = _PREFIX.size
        try:
            header = json.loads(body[start : start + header_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ModelFileError(f"{path}: unreadable header ({exc})")
        return {"header": header, "planes": body[start + header_len :]}

    def read_header(self, path: PathLike) -> Dict[str, Any]:
        path = Path(path)
        try:
            payload = path.read_bytes()
        except OSError as exc:
            raise ModelFileError(f"cannot read {path}: {exc.strerror or exc}")
        return self._split(payload, path)["header"]

    def decode(self, payload: bytes, path: Path) -> ModelState:
        parts = self._split(payload, path)
        header = parts["header"]
        try:
            side = int(header["proto_side"])
            alphabet = tuple(header["alphabet"])
            expected = len(alphabet) * side * side * 8
            if len(parts["planes"]) != expected:
                raise ModelFileError(f"{path}: plane data has {len(parts['planes'])} bytes, expected {expected}")
            planes = np.frombuffer(parts["planes"], dtype="<f8").reshape(len(alphabet), side, side)
            prov = header["provenance"]
            state = ModelState(
                alphabet=alphabet,
                prototypes=tuple(
                    Prototype(char_id=c, image=GrayImage(data=planes[i])) for i, c in enumerate(alphabet)
                ),
                proto_side=side,
                line_height=int(header["line_height"]),
                bg_color=tuple(header["bg_color"]),
                provenance=Provenance(kind=prov["kind"], parent_id=prov["parent_id"]),
                training_seed=int(header["training_seed"]),
                label=header.get("label", ""),
                history=tuple(header.get("history", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ModelFileError):
                raise
            raise ModelFileError(f"{path}: malformed header ({exc})")
        if header.get("model_id") not in (None, state.model_id):
            raise ChecksumError(f"{path}: content hash does not match the stored model_id")
        return state

    def find_parent(self, parent_id: str, directory: PathLike) -> Optional[Path]:
        for candidate in self.list_paths(directory):
            try:
                if self.read_header(candidate).get("model_id") == parent_id:
                    return candidate
            except ModelFileError:
                continue
        return None


model_store = CRUDModel()


def save_model(state: ModelState, path: PathLike) -> Path:
    """
    Simpan model.

    Example:
        >>> save_model(reference, "out/reference.pscm")
        PosixPath('out/reference.pscm')
    """
    path = model_store.create(state, path=path)
    logger.debug("saved model %s (%s) to %s", state.model_id, state.label or state.provenance.kind, path)
    return path


def load_model(path: PathLike) -> ModelState:
    """
    Load model. Model finetuned yang parent-nya tidak ditemukan di
    directory yang sama tetap di-load, dengan warning dangling parent.

    Raises:
        ModelFileError: File tidak ada / rusak
        ChecksumError: Truncated atau corrupted
        VersionMismatchError: Format version lain
    """
    state = model_store.get(path)
    parent_id = state.provenance.parent_id
    if state.provenance.kind == "finetuned" and parent_id and model_store.find_parent(parent_id, Path(path).parent) is None:
        logger.warning("model %s: parent %s not found next to %s (dangling parent)", state.model_id, parent_id, path)
    return state
