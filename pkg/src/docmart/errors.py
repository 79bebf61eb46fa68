"""Error taxonomy shared by every layer.

Each error class carries a stable ``code`` so the CLI and the HTTP API can
map failures uniformly (validation, not-found, syntax, conflict, internal).
"""

from __future__ import annotations

from dataclasses import dataclass


class DocmartError(Exception):
    """Base class for all errors raised by this package."""

    code = "internal"


class ValidationError(DocmartError):
    code = "validation"


class NotFoundError(DocmartError):
    code = "not-found"


class ConflictError(DocmartError):
    code = "conflict"


class StoreError(DocmartError):
    """Persistence failure: unreadable, corrupt, or locked store files."""

    code = "internal"


class QuerySyntaxError(DocmartError):
    """Query text failed to parse; carries the offending position and token."""

    code = "syntax"

    def __init__(self, message: str, position: int, token: str = ""):
        super().__init__(message)
        self.position = position
        self.token = token


@dataclass
class ApiError:
    """Wire-format error payload used by the HTTP gateway."""

    code: str
    message: str
    detail: dict | None = None

    @classmethod
    def from_exception(cls, exc: DocmartError) -> "ApiError":
        detail = None
        if isinstance(exc, QuerySyntaxError):
            detail = {"position": exc.position, "token": exc.token}
        return cls(code=exc.code, message=str(exc), detail=detail)

    def to_json(self) -> dict:
        payload: dict = {"code": self.code, "message": self.message}
        if self.detail is not None:
            payload["detail"] = self.detail
        return payload


# HTTP status for each error code; used by the API layer.
STATUS_BY_CODE = {
    "validation": 400,
    "syntax": 400,
    "not-found": 404,
    "conflict": 409,
    "internal": 500,
}
