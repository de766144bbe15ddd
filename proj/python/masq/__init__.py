"""Reversible, structure-preserving pseudonymization for incident data.

The heavy lifting lives in the compiled ``masq._core`` extension; this
package re-exports its public surface.
"""

from ._core import (
    Detection,
    DocumentReport,
    MasqError,
    MetricsReport,
    Pseudonymizer,
    Span,
    compute_digest_hex,
    compute_metrics,
    hmac_sha256_hex,
    make_token,
    parse_token,
    recognize,
)

__all__ = [
    "Detection",
    "DocumentReport",
    "MasqError",
    "MetricsReport",
    "Pseudonymizer",
    "Span",
    "compute_digest_hex",
    "compute_metrics",
    "hmac_sha256_hex",
    "make_token",
    "parse_token",
    "recognize",
]
