"""Canonical fully qualified method signatures.

The whole pipeline keys methods by one string form:

    <namespace>.<Type>.<method>(<param-type>,<param-type>,...)

No spaces anywhere. The namespace is the dotted module path (one or more
segments), the type is a single class name, and parameter types are simple
names (``str``, ``int``, ``object``). Constructors use the type name as the
method name, so ``is_constructor`` is decidable from the signature alone.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_SIGNATURE_RE = re.compile(
    rf"^(?P<path>{_IDENT}(?:\.{_IDENT}){{2,}})"
    rf"\((?P<params>(?:{_IDENT}(?:,{_IDENT})*)?)\)$"
)


class SignatureError(ValueError):
    """Raised for text that does not parse under the canonical grammar."""


@dataclass(frozen=True, order=True)
class Signature:
    namespace: str
    type_name: str
    method: str
    param_types: tuple[str, ...]

    @property
    def is_constructor(self) -> bool:
        return self.method == self.type_name

    @property
    def declaring_type(self) -> str:
        return f"{self.namespace}.{self.type_name}"

    @property
    def arity(self) -> int:
        return len(self.param_types)

    def __str__(self) -> str:
        return format_signature(self)


def format_signature(sig: Signature) -> str:
    params = ",".join(sig.param_types)
    return f"{sig.namespace}.{sig.type_name}.{sig.method}({params})"


def parse_signature(text: str) -> Signature:
    """Parse canonical text into a Signature; raises SignatureError otherwise."""
    match = _SIGNATURE_RE.match(text)
    if match is None:
        raise SignatureError(f"not a canonical fully qualified signature: {text!r}")
    segments = match.group("path").split(".")
    params = match.group("params")
    param_types = tuple(params.split(",")) if params else ()
    # Last two segments are <Type>.<method>; everything before is the namespace.
    return Signature(
        namespace=".".join(segments[:-2]),
        type_name=segments[-2],
        method=segments[-1],
        param_types=param_types,
    )


def is_canonical(text: str) -> bool:
    return _SIGNATURE_RE.match(text) is not None


def make_signature(namespace: str, type_name: str, method: str, param_types) -> str:
    """Format the parts and validate the result round-trips."""
    sig = Signature(namespace, type_name, method, tuple(param_types))
    text = format_signature(sig)
    if parse_signature(text) != sig:
        raise SignatureError(f"signature parts do not round-trip: {text!r}")
    return text
