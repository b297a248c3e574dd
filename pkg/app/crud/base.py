"""
============================================================================
BASE FILE STORE
============================================================================
Generic read/write operations untuk artifacts di filesystem.
Setiap store menentukan cara encode/decode object ke bytes; class ini
menyediakan operations: get, list_paths, create.

Usage:
    from app.crud.crud_model import model_store

    model_store.create(state, path="out/reference.pscm")
    state = model_store.get("out/reference.pscm")
    paths = model_store.list_paths("out/")
============================================================================
"""

import os
from pathlib import Path
from typing import Generic, List, TypeVar, Union

from app.core.errors import DataError, UsageError

ObjType = TypeVar("ObjType")
PathLike = Union[str, Path]


class FileStore(Generic[ObjType]):
    """
    Generic file store.

    Type Parameters:
        ObjType: Object yang disimpan (ModelState, CorpusManifest, ...)

    Attributes:
        suffix (str): File suffix yang dipakai list_paths
        error_cls: DataError subclass untuk file yang rusak
    """

    suffix: str = ""
    error_cls = DataError

    def encode(self, obj: ObjType) -> bytes:
        raise NotImplementedError

    def decode(self, payload: bytes, path: Path) -> ObjType:
        raise NotImplementedError

    # ========================================================================
    # READ OPERATIONS
    # ========================================================================

    def get(self, path: PathLike) -> ObjType:
        """
        Load satu object.

        Raises:
            DataError (error_cls): File tidak ada atau tidak bisa dibaca
        """
        path = Path(path)
        try:
            payload = path.read_bytes()
        except FileNotFoundError:
            raise self.error_cls(f"file not found: {path}")
        except OSError as exc:
            raise self.error_cls(f"cannot read {path}: {exc.strerror or exc}")
        return self.decode(payload, path)

    def list_paths(self, directory: PathLike) -> List[Path]:
        directory = Path(directory)
        if not directory.is_dir():
            return []
        return sorted(p for p in directory.iterdir() if p.is_file() and p.name.endswith(self.suffix))

    # ========================================================================
    # CREATE
    # ========================================================================

    def create(self, obj: ObjType, *, path: PathLike) -> Path:
        """
        Tulis object ke `path` (parent directories dibuat). Ditulis ke file
        sementara lalu di-rename, jadi reader tidak pernah melihat file
        setengah jadi.

        Raises:
            UsageError: Directory tidak bisa ditulis
        """
        path = Path(path)
        payload = self.encode(obj)
        tmp = path.with_name(path.name + ".tmp")
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp.write_bytes(payload)
            os.replace(tmp, path)
        except OSError as exc:
            raise UsageError(f"cannot write {path}: {exc.strerror or exc}")
        return path
