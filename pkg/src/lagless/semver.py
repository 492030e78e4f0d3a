"""Lenient Maven-flavoured semantic versions.

Versions such as ``2.3.4.RELEASE`` or ``1.0-SNAPSHOT`` are common in Maven
repositories, so parsing never insists on strict SemVer: the leading run of
dot-separated integers supplies major/minor/patch (missing parts are zero) and
anything after it becomes the qualifier.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from functools import total_ordering
from typing import Iterable, Sequence

from .errors import OrderingError, ResolutionError, VersionParseError

_LEADING_NUMBERS = re.compile(r"^(\d+)(?:\.(\d+))?(?:\.(\d+))?")
_QUALIFIER_SEPARATORS = ".-_+"


def _token_key(token: str) -> tuple[int, int, str]:
    # numeric identifiers sort before alphanumeric ones, as in SemVer
    if token.isdigit():
        return (0, int(token), "")
    return (1, 0, token)


@total_ordering
@dataclass(frozen=True, eq=False)
class Version:
    major: int
    minor: int
    patch: int
    qualifier: tuple[str, ...] = ()
    raw: str = field(default="", compare=False)

    @classmethod
    def parse(cls, text: str) -> "Version":
        return parse_version(text)

    @property
    def stable(self) -> bool:
        return not self.qualifier

    @property
    def triple(self) -> tuple[int, int, int]:
        return (self.major, self.minor, self.patch)

    def sort_key(self) -> tuple:
        return (
            self.major,
            self.minor,
            self.patch,
            0 if self.qualifier else 1,
            tuple(_token_key(t) for t in self.qualifier),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Version):
            return NotImplemented
        return self.sort_key() == other.sort_key()

    def __lt__(self, other: "Version") -> bool:
        if not isinstance(other, Version):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    def __hash__(self) -> int:
        return hash(self.sort_key())

    def __str__(self) -> str:
        return self.raw or self.canonical()

    def __repr__(self) -> str:
        return f"Version({str(self)!r})"

    def canonical(self) -> str:
        text = f"{self.major}.{self.minor}.{self.patch}"
        if self.qualifier:
            text += "-" + ".".join(self.qualifier)
        return text


def parse_version(text: str) -> Version:
    if not isinstance(text, str) or not text.strip():
        raise VersionParseError(f"empty version string: {text!r}")
    body = text.strip()
    match = _LEADING_NUMBERS.match(body)
    if match:
        numbers = [int(g) if g is not None else 0 for g in match.groups()]
        rest = body[match.end():]
    else:
        numbers = [0, 0, 0]
        rest = body
    rest = rest.lstrip(_QUALIFIER_SEPARATORS)
    qualifier = tuple(t for t in rest.split(".") if t)
    return Version(numbers[0], numbers[1], numbers[2], qualifier, text)


def _coerce(v: Version | str) -> Version:
    return v if isinstance(v, Version) else parse_version(v)


def compare(a: Version | str, b: Version | str) -> int:
    """Return -1, 0 or 1 as ``a`` is older than, equal to or newer than ``b``."""
    ka, kb = _coerce(a).sort_key(), _coerce(b).sort_key()
    return (ka > kb) - (ka < kb)


class LagLevel(enum.IntEnum):
    NONE = 0
    PRE_RELEASE = 1
    PATCH = 2
    MINOR = 3
    MAJOR = 4

    @property
    def label(self) -> str:
        return _LEVEL_LABELS[self]


_LEVEL_LABELS = {
    LagLevel.NONE: "None",
    LagLevel.PRE_RELEASE: "PreRelease",
    LagLevel.PATCH: "Patch",
    LagLevel.MINOR: "Minor",
    LagLevel.MAJOR: "Major",
}

# levels a version lag is broken down into; NONE never counts
LAG_LEVELS = (LagLevel.MAJOR, LagLevel.MINOR, LagLevel.PATCH, LagLevel.PRE_RELEASE)


def classify_step(old: Version | str, new: Version | str) -> LagLevel:
    old, new = _coerce(old), _coerce(new)
    if new < old:
        raise OrderingError(f"cannot classify a downgrade {old} -> {new}")
    if new.major > old.major:
        return LagLevel.MAJOR
    if new.minor > old.minor:
        return LagLevel.MINOR
    if new.patch > old.patch:
        return LagLevel.PATCH
    if new != old:
        return LagLevel.PRE_RELEASE
    return LagLevel.NONE


@dataclass(frozen=True)
class VersionSpec:
    """A declared constraint: an exact version or a Maven-style range."""

    kind: str  # "exact" | "range"
    exact: Version | None = None
    lower: Version | None = None
    lower_inclusive: bool = False
    upper: Version | None = None
    upper_inclusive: bool = False
    raw: str = field(default="", compare=False)

    @classmethod
    def parse(cls, text: str) -> "VersionSpec":
        return parse_spec(text)

    @classmethod
    def exactly(cls, version: Version | str) -> "VersionSpec":
        v = _coerce(version)
        return cls("exact", exact=v, raw=str(v))

    def contains(self, v: Version) -> bool:
        if self.kind == "exact":
            return v == self.exact
        if self.lower is not None:
            if v < self.lower or (v == self.lower and not self.lower_inclusive):
                return False
        if self.upper is not None:
            if v > self.upper or (v == self.upper and not self.upper_inclusive):
                return False
        return True

    def __str__(self) -> str:
        if self.raw:
            return self.raw
        if self.kind == "exact":
            return str(self.exact)
        return "{}{},{}{}".format(
            "[" if self.lower_inclusive else "(",
            self.lower or "",
            self.upper or "",
            "]" if self.upper_inclusive else ")",
        )


def parse_spec(text: str) -> VersionSpec:
    if not isinstance(text, str) or not text.strip():
        raise VersionParseError(f"empty version spec: {text!r}")
    body = text.strip()
    if body[0] not in "[(":
        return VersionSpec("exact", exact=parse_version(body), raw=text)

    if body[-1] not in "])":
        raise VersionParseError(f"unterminated range: {text!r}")
    inner = body[1:-1]
    lower_inc, upper_inc = body[0] == "[", body[-1] == "]"
    if "," not in inner:
        # "[1.0]" pins a hard exact version
        if not (lower_inc and upper_inc) or not inner.strip():
            raise VersionParseError(f"malformed range: {text!r}")
        return VersionSpec("exact", exact=parse_version(inner.strip()), raw=text)
    parts = inner.split(",")
    if len(parts) != 2:
        raise VersionParseError(f"multi-range specs are not supported: {text!r}")
    lo_text, hi_text = (p.strip() for p in parts)
    lower = parse_version(lo_text) if lo_text else None
    upper = parse_version(hi_text) if hi_text else None
    if lower is not None and upper is not None and upper < lower:
        raise VersionParseError(f"range lower bound exceeds upper bound: {text!r}")
    return VersionSpec(
        "range",
        lower=lower,
        lower_inclusive=lower_inc and lower is not None,
        upper=upper,
        upper_inclusive=upper_inc and upper is not None,
        raw=text,
    )


def resolve_spec(spec: VersionSpec, available: Sequence[Version] | Iterable[Version]) -> Version:
    """Pick the version a declaration resolves to.

    Exact specs must match an available version; ranges take the newest
    available version inside the range.
    """
    matching = [v for v in available if spec.contains(v)]
    if not matching:
        raise ResolutionError(f"no available version satisfies {spec}")
    return max(matching)
