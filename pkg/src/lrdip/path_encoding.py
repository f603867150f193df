"""Bitstrings spread over path ranges, and block partitions of a path."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


class CapacityError(ValueError):
    pass


def to_bits(value: int, width: int) -> str:
    if value < 0 or value >= 1 << width:
        raise CapacityError(f"{value} does not fit in {width} bits")
    return format(value, f"0{width}b") if width else ""


def from_bits(bits: str) -> int:
    return int(bits, 2) if bits else 0


def bit_length(value: int) -> int:
    return max(1, int(value).bit_length())


@dataclass(frozen=True)
class DistributedString:
    nodes: tuple[int, ...]
    bits: str
    gap: int = 1
    right_aligned: bool = False

    def __post_init__(self):
        if self.gap < 1:
            raise ValueError("gap must be positive")
        need = len(self.bits) if self.right_aligned else self.gap * len(self.bits)
        if len(self.nodes) < need:
            raise CapacityError(
                f"{len(self.bits)} bits at gap {self.gap} need {need} nodes, range has {len(self.nodes)}")

    @property
    def length(self) -> int:
        return len(self.bits)

    def offsets(self) -> list[int]:
        """Range offsets holding bits, most significant first."""
        if self.right_aligned:
            if self.gap != 1:
                raise ValueError("right alignment is defined for gap 1 only")
            start = len(self.nodes) - len(self.bits)
            return list(range(start, len(self.nodes)))
        return [i * self.gap for i in range(len(self.bits))]

    def placement(self) -> dict[int, int]:
        """node -> bit for every node holding a bit of the string."""
        return {self.nodes[o]: int(b) for o, b in zip(self.offsets(), self.bits)}

    def node_bits(self) -> str:
        """What each node of the range holds ('0' for padding and gap nodes)."""
        out = ["0"] * len(self.nodes)
        for o, b in zip(self.offsets(), self.bits):
            out[o] = b
        return "".join(out)


def write_string(nodes: Sequence[int], bits: str, gap: int = 1, right_aligned: bool = False) -> DistributedString:
    if any(c not in "01" for c in bits):
        raise ValueError(f"not a bitstring: {bits!r}")
    need = len(bits) if right_aligned else gap * len(bits)
    if len(nodes) < need:
        raise CapacityError(f"range of {len(nodes)} nodes cannot hold {len(bits)} bits at gap {gap}")
    return DistributedString(tuple(nodes), bits, gap, right_aligned)


def read_string(ds: DistributedString) -> str:
    pl = ds.placement()
    return "".join(str(pl[ds.nodes[o]]) for o in ds.offsets())


@dataclass(frozen=True)
class EqualityInstance:
    """Two node-disjoint paths carrying strings, joined by a marked bridge edge."""
    alpha: DistributedString
    alpha2: DistributedString
    bridge: tuple[int, int]

    def __post_init__(self):
        if set(self.alpha.nodes) & set(self.alpha2.nodes):
            raise ValueError("paths must be node-disjoint")
        if len(self.alpha.nodes) != len(self.alpha2.nodes):
            raise ValueError("paths must have equal size")
        u, v = self.bridge
        if u not in self.alpha.nodes or v not in self.alpha2.nodes:
            raise ValueError("bridge must join P to P'")

    @property
    def is_yes(self) -> bool:
        return read_string(self.alpha) == read_string(self.alpha2)


def path_pair(bits: str, bits2: str, size: int | None = None, gap: int = 1) -> EqualityInstance:
    """Standard layout: P = 0..m-1, P' = m..2m-1, bridge from the right end of P to the left end of P'."""
    need = max(gap * max(len(bits), len(bits2)), 1)
    m = size if size is not None else need
    a = write_string(range(m), bits, gap)
    b = write_string(range(m, 2 * m), bits2, gap)
    return EqualityInstance(a, b, (m - 1, m))


@dataclass(frozen=True)
class BlockPartition:
    blocks: tuple[range, ...]
    block_size: int

    def pos(self, b: int) -> int:
        return b

    @property
    def count(self) -> int:
        return len(self.blocks)

    def block_of(self, i: int) -> int:
        # index along the path -> block number
        b = min(i // self.block_size, len(self.blocks) - 1)
        return b

    @property
    def pos_width(self) -> int:
        return max(1, (len(self.blocks) - 1).bit_length())


def partition_blocks(path_len: int, block_size: int) -> BlockPartition:
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    if path_len < 1:
        raise ValueError("path_len must be >= 1")
    if block_size >= path_len:
        return BlockPartition((range(0, path_len),), block_size)
    k = path_len // block_size
    blocks = [range(i * block_size, (i + 1) * block_size) for i in range(k - 1)]
    blocks.append(range((k - 1) * block_size, path_len))
    return BlockPartition(tuple(blocks), block_size)
