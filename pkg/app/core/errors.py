"""
============================================================================
ERRORS MODULE
============================================================================
Exception hierarchy untuk seluruh package.
Setiap exception membawa `exit_code`, mirip HTTPException yang membawa
`status_code`, sehingga CLI bisa langsung map error ke exit status.

Exit codes:
    0 - success
    1 - usage error (flags, config validation)
    2 - data error (manifest, images, labels, model files)
    3 - numeric failure (training/solver problems)

Usage:
    from app.core.errors import UnknownLabelsError

    raise UnknownLabelsError(["q", "z"])
============================================================================
"""

from typing import Iterable, Optional


class ProtoscriptError(Exception):
    """
    Base exception untuk semua error yang diketahui.

    Attributes:
        detail (str): Pesan yang ditampilkan ke user
        exit_code (int): Exit status untuk CLI
    """

    exit_code: int = 2

    def __init__(self, detail: str, *, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


# ============================================================================
# USAGE ERRORS (exit 1)
# ============================================================================

class UsageError(ProtoscriptError):
    exit_code = 1


class ConfigError(UsageError):
    """Config tidak valid. `errors` berisi pesan per field."""

    def __init__(self, errors: Iterable[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


# ============================================================================
# DATA ERRORS (exit 2)
# ============================================================================

class DataError(ProtoscriptError):
    exit_code = 2


class ManifestError(DataError):
    """Manifest tidak bisa di-parse atau melanggar schema."""


class ImageLoadError(DataError):
    """Image hilang atau tidak bisa di-decode. Menyebut doc/line koordinat."""

    def __init__(self, path: str, *, doc_id: str = "", line_index: int = -1, reason: str = ""):
        self.path = path
        self.doc_id = doc_id
        self.line_index = line_index
        where = f" (doc {doc_id!r}, line {line_index})" if doc_id else ""
        super().__init__(f"cannot load image {path}{where}: {reason or 'missing file'}")


class TranscriptionError(DataError):
    """Transcription kosong atau berisi karakter yang ditolak policy."""


class UnknownLabelsError(DataError):
    """Corpus memakai labels yang tidak ada di alphabet model."""

    def __init__(self, labels: Iterable[str]):
        self.labels = sorted(set(labels))
        super().__init__("labels unknown to the reference model: " + " ".join(repr(c) for c in self.labels))


class GeometryMismatchError(DataError):
    """Models tidak bisa dibandingkan (K, H, atau alphabet berbeda)."""


class ModelFileError(DataError):
    """Model file rusak atau tidak kompatibel."""


class ChecksumError(ModelFileError):
    pass


class VersionMismatchError(ModelFileError):
    pass


# ============================================================================
# NUMERIC ERRORS (exit 3)
# ============================================================================

class NumericError(ProtoscriptError):
    exit_code = 3
