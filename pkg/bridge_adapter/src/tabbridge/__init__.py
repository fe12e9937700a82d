"""Reference adapter for the line-delimited JSON prediction bridge."""

from .adapter import (
    MODELS,
    ModelError,
    RequestError,
    VERSION as __version__,
    parse_request,
    serve_once,
)

__all__ = [
    "MODELS",
    "ModelError",
    "RequestError",
    "__version__",
    "parse_request",
    "serve_once",
]
