from __future__ import annotations

from typing import Any, Dict, Optional


class GvgError(Exception):
    """모든 도메인 에러의 공통 믹스인. kind는 CLI/API의 기계 판독용 키."""

    kind = "error"

    def to_dict(self) -> Dict[str, Any]:
        return {"error": self.kind, "message": str(self)}


class ShapeError(GvgError, ValueError):
    kind = "shape_error"


class InvalidInputError(GvgError, ValueError):
    kind = "invalid_input"


class EmptyInputError(InvalidInputError):
    kind = "empty_input"


class ModeError(GvgError, ValueError):
    kind = "mode_error"


class ExhaustedError(GvgError, RuntimeError):
    kind = "exhausted"


class ContractError(GvgError, RuntimeError):
    kind = "contract_error"


class ModelFileError(GvgError, ValueError):
    kind = "model_file_error"


class FeatureFileError(InvalidInputError):
    kind = "feature_file_error"

    def __init__(self, path: str, field: str, detail: str, video_id: Optional[str] = None):
        self.path = path
        self.field = field
        self.detail = detail
        self.video_id = video_id
        super().__init__(f"{path}: field={field} {detail}")

    def to_dict(self) -> Dict[str, Any]:
        d = super().to_dict()
        d.update({"file": self.path, "field": self.field})
        return d


def error_kind(exc: BaseException) -> str:
    if isinstance(exc, GvgError):
        return exc.kind
    if isinstance(exc, IndexError):
        return "index_error"
    if isinstance(exc, FileNotFoundError):
        return "not_found"
    return "internal_error"
