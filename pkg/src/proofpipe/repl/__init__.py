from .header import ImportHeaderKey, canonicalize_header, serialize_header
from .pool import PoolMetrics, ReplPool, SubmitResult
from .wire import ReplMessage, ReplResponse, ReplSorry

__all__ = [
    "ImportHeaderKey",
    "canonicalize_header",
    "serialize_header",
    "ReplPool",
    "PoolMetrics",
    "SubmitResult",
    "ReplMessage",
    "ReplResponse",
    "ReplSorry",
]
