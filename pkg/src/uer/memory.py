"""Reservoir-sampled rehearsal buffer.

The n-th sample ever offered (1-based) is inserted directly while the
buffer is filling; afterwards a slot index j is drawn uniformly from
[0, n) and the sample replaces slot j only when j < capacity. That keeps
every offered sample in the buffer with probability capacity / n at all
times. Retrieval is a uniform draw without replacement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .container import read_container, write_container
from .numeric import Rng


@dataclass
class StoredSample:
    x: np.ndarray
    y: int
    stream_position: int


class MemoryBuffer:
    def __init__(self, capacity: int):
        if capacity < 0:
            raise ValueError(f"capacity must be non-negative, got {capacity}")
        self.capacity = int(capacity)
        self.items: list[StoredSample] = []
        self.seen = 0

    def __len__(self) -> int:
        return len(self.items)


def buffer_update(buf: MemoryBuffer, batch: Sequence[StoredSample], rng: Rng) -> None:
    start = buf.seen
    fill = 0
    while fill < len(batch) and len(buf.items) < buf.capacity:
        buf.items.append(batch[fill])
        fill += 1
    rest = batch[fill:]
    if rest:
        # one vectorized draw for the whole batch: j_i uniform on [0, n_i)
        ns = np.arange(start + fill + 1, start + len(batch) + 1)
        js = rng.integers(0, ns)
        for sample, j in zip(rest, js):
            if j < buf.capacity:
                buf.items[j] = sample
    buf.seen = start + len(batch)


def buffer_retrieve(buf: MemoryBuffer, k: int, rng: Rng) -> list[StoredSample]:
    if k < 0:
        raise ValueError(f"retrieval size must be non-negative, got {k}")
    m = min(k, len(buf.items))
    if m == 0:
        return []
    idx = rng.choice(len(buf.items), size=m, replace=False)
    return [buf.items[i] for i in idx]


SECTION_META = "BUFMETA"
SECTION_X = "BUFXDATA"
SECTION_YPOS = "BUFYPOS"


def save_buffer(path, buf: MemoryBuffer) -> None:
    ys = np.array([s.y for s in buf.items], dtype=np.float64)
    pos = np.array([s.stream_position for s in buf.items], dtype=np.float64)
    sections = {
        SECTION_META: [(0, np.array([buf.capacity, buf.seen], dtype=np.float64))],
        SECTION_X: [(i, s.x) for i, s in enumerate(buf.items)],
        SECTION_YPOS: [(0, ys), (1, pos)],
    }
    write_container(path, sections)


def load_buffer(path) -> MemoryBuffer:
    sections = read_container(path)
    meta = sections[SECTION_META][0][1]
    buf = MemoryBuffer(int(meta[0]))
    buf.seen = int(meta[1])
    (_, ys), (_, pos) = sections[SECTION_YPOS]
    for (_, x), y, p in zip(sections[SECTION_X], ys, pos):
        buf.items.append(StoredSample(x, int(y), int(p)))
    return buf
