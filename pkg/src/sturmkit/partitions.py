"""Hierarchical (n, alpha)-partitions of words in the Sturmian language.

The level-n partition of ``c_alpha`` cuts it into blocks ``s_n`` and
``s_{n-1}``.  Any factor ``w`` inherits a partition from the window of
``c_alpha`` where it first occurs; only the part of the block hierarchy that
meets the window is ever expanded.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .cf import ContinuedFraction, length_table, word_length
from .errors import (ConfigError, DepthError, InternalConsistencyError,
                     LevelTooCoarseError, MembershipError)
from .words import EMPTY, Word, build_sn, scan_level

S_CUR = "S_CUR"    # block s_n
S_PREV = "S_PREV"  # block s_{n-1}


class Locator(NamedTuple):
    j: int  # 1-based position of the first occurrence in c_alpha


def locate(w: Word, cf: ContinuedFraction) -> Locator:
    """Smallest ``j >= 1`` with ``w = (c_alpha)_j ... (c_alpha)_{j+|w|-1}``.

    The search window is ``s_{n+2}`` for the smallest ``n >= 2`` with
    ``|s_n| > |w|``; every factor of that length already occurs there, so a
    miss means ``w`` is not in the language.
    """
    if len(w) == 0:
        return Locator(1)
    n = scan_level(cf, len(w))
    pos = build_sn(cf, n + 2).find(w)
    if pos < 0:
        raise MembershipError(f"{w!r} is not a factor of c_alpha for {cf}")
    return Locator(pos + 1)


def is_member(w: Word, cf: ContinuedFraction) -> bool:
    try:
        locate(w, cf)
    except MembershipError:
        return False
    return True


@dataclass(frozen=True)
class Partition:
    n: int
    a: Word
    blocks: tuple[str, ...]
    b: Word

    def block_words(self, cf: ContinuedFraction) -> tuple[Word, Word]:
        """``(s_n, s_{n-1})``."""
        return build_sn(cf, self.n), build_sn(cf, self.n - 1)

    def positions(self, cf: ContinuedFraction) -> list[tuple[int, int]]:
        """Offsets ``(start, end)`` of each block inside the partitioned word."""
        cur, prev = word_length(cf, self.n), word_length(cf, self.n - 1)
        out = []
        pos = len(self.a)
        for tag in self.blocks:
            size = cur if tag == S_CUR else prev
            out.append((pos, pos + size))
            pos += size
        return out

    def expand(self, cf: ContinuedFraction) -> Word:
        cur, prev = self.block_words(cf)
        body = b"".join(cur.data if t == S_CUR else prev.data for t in self.blocks)
        return Word(self.a.data + body + self.b.data)

    def validate(self, cf: ContinuedFraction, word: Word | None = None) -> None:
        """Raise :class:`InternalConsistencyError` if any partition invariant fails."""
        cur, prev = self.block_words(cf)

        def fragment_ok(f: Word) -> bool:
            if len(f) == 0:
                return True
            return any(len(f) < len(s) and (s.startswith(f) or s.endswith(f)) for s in (cur, prev))

        if not fragment_ok(self.a):
            raise InternalConsistencyError(f"leading fragment {self.a!r} is not a proper piece of a block")
        if not fragment_ok(self.b):
            raise InternalConsistencyError(f"trailing fragment {self.b!r} is not a proper piece of a block")
        if any(t not in (S_CUR, S_PREV) for t in self.blocks):
            raise InternalConsistencyError("unknown block tag")
        if word is not None and self.expand(cf) != word:
            raise InternalConsistencyError("partition does not reassemble the word")

    def to_json(self, cf: ContinuedFraction) -> dict:
        return {
            "level": self.n,
            "a": str(self.a),
            "blocks": [{"tag": t, "start": s, "end": e}
                       for t, (s, e) in zip(self.blocks, self.positions(cf))],
            "b": str(self.b),
        }


def _window_blocks(cf: ContinuedFraction, n: int, start: int, end: int):
    """Blocks ``(tag, offset, size)`` of the level-n partition of c_alpha that meet
    ``[start, end)``, left to right."""
    root = max(n, 1)
    while word_length(cf, root) < end:
        root += 1
        if root > cf.depth:
            raise DepthError(f"window end {end} lies beyond s_{cf.depth}")
    lengths = length_table(cf, root)
    out = []
    stack = [(root, 0)]
    while stack:
        k, off = stack.pop()
        size = lengths[k]
        if off >= end or off + size <= start:
            continue
        if k == n or k == n - 1:
            out.append((S_CUR if k == n else S_PREV, off, size))
            continue
        if k == 1:
            reps, child, last = cf.a(1) - 1, 0, -1
        else:
            reps, child, last = cf.a(k), k - 1, k - 2
        clen = lengths[child]
        stack.append((last, off + reps * clen))
        lo = max(0, (start - off) // clen)
        hi = min(reps - 1, (end - 1 - off) // clen)
        for i in range(hi, lo - 1, -1):
            stack.append((child, off + i * clen))
    return out


def _restrict(cf: ContinuedFraction, n: int, start: int, end: int) -> Partition:
    blocks = _window_blocks(cf, n, start, end)
    cur, prev = build_sn(cf, n), build_sn(cf, n - 1)
    a = b = EMPTY
    tags = []
    for idx, (tag, off, size) in enumerate(blocks):
        word = cur if tag == S_CUR else prev
        cut_left = off < start
        cut_right = off + size > end
        if cut_left and cut_right:
            raise LevelTooCoarseError(f"window [{start}, {end}) lies inside a single level-{n} block")
        if cut_left:
            a = word[start - off:]
        elif cut_right:
            b = word[:end - off]
        else:
            tags.append(tag)
    return Partition(n, a, tuple(tags), b)


def partition_c_prefix(cf: ContinuedFraction, n: int, L: int) -> Partition:
    """Level-n partition of c_alpha restricted to its first ``L`` letters."""
    if L < 1 or n < 0:
        raise ConfigError("need L >= 1 and n >= 0")
    return _restrict(cf, n, 0, L)


def standard_partition(w: Word, cf: ContinuedFraction, n: int) -> Partition:
    """Partition of ``w`` induced by c_alpha at the first occurrence of ``w``."""
    if n < 0:
        raise ConfigError("level must be >= 0")
    j = locate(w, cf).j
    if w in build_sn(cf, n):
        raise LevelTooCoarseError(f"{w!r} is a factor of s_{n}; no {n}-partition exists")
    return _restrict(cf, n, j - 1, j - 1 + len(w))


def coarsest_level(w: Word, cf: ContinuedFraction) -> int:
    """Largest n for which ``w`` is not a factor of ``s_n`` (-1 if none)."""
    n = -1
    while n + 1 <= cf.depth and w not in build_sn(cf, n + 1):
        n += 1
        if word_length(cf, n) > 4 * len(w) + 4:
            break
    return n


class TwoBlock(NamedTuple):
    t: int
    x: Word
    y: Word


def two_block_decomposition(w: Word, cf: ContinuedFraction) -> TwoBlock:
    """Split ``w = x y`` with ``x`` a suffix of ``s_t`` or ``s_{t-1}`` and ``y`` a
    prefix of ``s_{t+1}``.

    Factors of ``s_1`` are handled directly (suffix of ``s_1`` preferred).
    Otherwise ``t`` is the last level with ``w`` not a factor of ``s_t`` when a
    split exists there, else the smallest level that admits one; the split
    with the shortest ``x`` is returned.
    """
    if len(w) == 0:
        raise ConfigError("two-block decomposition needs a nonempty word")
    locate(w, cf)
    s1 = build_sn(cf, 1)
    if w in s1:
        if s1.endswith(w):
            return TwoBlock(1, w, EMPTY)
        return TwoBlock(1, EMPTY, w)
    m = 2
    while w not in build_sn(cf, m):
        m += 1
    # m - 1 is the level the existence argument uses; with a_1 = 1 it can fail at
    # level 1 (s_0 is then not a prefix of s_1), so smaller levels are tried next
    for t in [m - 1] + [k for k in range(1, m + 1) if k != m - 1]:
        split = _split_at(w, cf, t)
        if split is not None:
            return TwoBlock(t, *split)
    raise InternalConsistencyError(f"no two-block split of {w!r} at levels 1..{m}")


def _split_at(w: Word, cf: ContinuedFraction, t: int):
    st, sprev, snext = build_sn(cf, t), build_sn(cf, t - 1), build_sn(cf, t + 1)
    data = w.data
    for i in range(len(w) + 1):
        x, y = data[:i], data[i:]
        if snext.data.startswith(y) and (st.data.endswith(x) or sprev.data.endswith(x)):
            return Word._raw(x), Word._raw(y)
    return None


def embed_in_sn(w: Word, cf: ContinuedFraction) -> tuple[int, int]:
    """``(n, offset)``: n minimal with ``n >= 2`` and ``|w| < |s_n|``, offset of
    the first occurrence of ``w`` in ``s_{n+2}``."""
    n = scan_level(cf, len(w))
    pos = build_sn(cf, n + 2).find(w)
    if pos < 0:
        raise MembershipError(f"{w!r} is not a factor of c_alpha for {cf}")
    return n, pos


def frame(w: Word, cf: ContinuedFraction, n: int) -> tuple[Word, Word]:
    """Words ``x, y`` with ``x w y = s_{n+3}`` and ``|x|, |y| >= |s_{n+1}|``;
    the leftmost admissible occurrence is used."""
    if n + 3 > cf.depth:
        raise DepthError(f"frame at level {n} needs s_{n + 3}, depth is {cf.depth}")
    if w not in build_sn(cf, n):
        raise ConfigError(f"{w!r} is not a factor of s_{n}")
    big = build_sn(cf, n + 3)
    margin = word_length(cf, n + 1)
    i = big.find(w, margin)
    if i < 0 or len(big) - i - len(w) < margin:
        raise InternalConsistencyError(f"no framed occurrence of {w!r} in s_{n + 3}")
    return big[:i], big[i + len(w):]
