"""Aperiodic templates for the non-overlapping matching test.

A template is aperiodic (non-self-overlapping) when no proper suffix of it
equals a prefix, so occurrences in a scanned window can never overlap.
The standard length-9 set (148 templates) ships as package data; other
lengths can be generated on demand.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from typing import List

from ..bitmodel import BitSequence
from ..errors import DomainError

DEFAULT_TEMPLATE_LENGTH = 9

__all__ = [
    "DEFAULT_TEMPLATE_LENGTH",
    "aperiodic_templates",
    "template_self_overlaps",
    "load_default_templates",
    "default_template",
]


def template_self_overlaps(template: BitSequence) -> List[int]:
    """Shifts t (1 <= t < m) where the last t bits equal the first t."""
    s = template.to_string()
    m = len(s)
    return [t for t in range(1, m) if s[m - t :] == s[:t]]


def aperiodic_templates(m: int) -> List[BitSequence]:
    """All non-self-overlapping templates of length m, ascending."""
    if not 1 <= m <= 16:
        raise DomainError(f"template generation supports 1 <= m <= 16, got {m}")
    out = []
    for value in range(2**m):
        tpl = BitSequence.from_int(value, m)
        if not template_self_overlaps(tpl):
            out.append(tpl)
    return out


@lru_cache(maxsize=1)
def _default_template_strings() -> tuple:
    data = (
        resources.files("chanrand.randtests")
        .joinpath("data/template9.txt")
        .read_text(encoding="ascii")
    )
    return tuple(line for line in data.splitlines() if line)


def load_default_templates() -> List[BitSequence]:
    """The bundled length-9 template set."""
    return [BitSequence.from_string(s) for s in _default_template_strings()]


def default_template() -> BitSequence:
    """First template of the bundled set, the all-kinds default."""
    return BitSequence.from_string(_default_template_strings()[0])
