"""802.11ac/ax channelization over 8 basic 20-MHz channels (UNII-1 + UNII-2).

Channels use the simple 1..8 indexation; 36..64 are display labels only.
A channel set is an ``int`` bitmask where bit ``c - 1`` stands for channel ``c``.
Valid transmission sets are the aligned blocks of width 1, 2, 4 or 8.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence, Union

NUM_CHANNELS = 8
WIDTHS: tuple[int, ...] = (1, 2, 4, 8)
FULL_MASK = (1 << NUM_CHANNELS) - 1
CHANNEL_LABELS = {c: 36 + 4 * (c - 1) for c in range(1, NUM_CHANNELS + 1)}

ChannelsLike = Union[int, Iterable[int]]


class ChannelizationError(ValueError):
    pass


def mask_of(channels: ChannelsLike) -> int:
    """Bitmask of an iterable of channel ids (an int is passed through)."""
    if isinstance(channels, int):
        if not 0 <= channels <= FULL_MASK:
            raise ChannelizationError(f"mask {channels} outside 8 channels")
        return channels
    m = 0
    for c in channels:
        check_channel(c)
        m |= 1 << (c - 1)
    return m


def channels_of(mask: int) -> tuple[int, ...]:
    return tuple(c for c in range(1, NUM_CHANNELS + 1) if mask >> (c - 1) & 1)


def check_channel(c: int) -> None:
    if not isinstance(c, int) or isinstance(c, bool) or not 1 <= c <= NUM_CHANNELS:
        raise ChannelizationError(f"channel {c!r} not in 1..{NUM_CHANNELS}")


def check_widths(widths: Sequence[int]) -> None:
    if list(widths) != sorted(set(widths)):
        raise ChannelizationError("widths must be sorted ascending without repeats")
    for n in widths:
        if n < 1 or n & (n - 1) or n > NUM_CHANNELS:
            raise ChannelizationError(f"width {n} is not a power of two <= {NUM_CHANNELS}")


@lru_cache(maxsize=None)
def tx_mask(p: int, n_c: int, widths: tuple[int, ...] = WIDTHS) -> int:
    """Mask of the aligned block of ``n_c`` channels that contains primary ``p``."""
    check_channel(p)
    if n_c not in widths:
        raise ChannelizationError("width not in channelization")
    start = ((p - 1) // n_c) * n_c
    return ((1 << n_c) - 1) << start


def tx_channel_set(p: int, n_c: int, widths: Sequence[int] = WIDTHS) -> frozenset[int]:
    return frozenset(channels_of(tx_mask(p, n_c, tuple(widths))))


def is_valid_block(mask: int) -> bool:
    n = bin(mask).count("1")
    if n not in WIDTHS:
        return False
    start = (mask & -mask).bit_length() - 1
    return start % n == 0 and mask == ((1 << n) - 1) << start


def valid_blocks(n_c: int) -> list[int]:
    return [((1 << n_c) - 1) << s for s in range(0, NUM_CHANNELS, n_c)]


@dataclass(frozen=True)
class Allocation:
    """A WLAN's allocated bandwidth (aligned block) and its primary channel."""

    channels: frozenset[int]
    primary: int

    def __post_init__(self):
        object.__setattr__(self, "channels", frozenset(self.channels))
        check_channel(self.primary)
        if not is_valid_block(self.mask):
            raise ChannelizationError(
                f"allocation {sorted(self.channels)} is not an aligned block of 1, 2, 4 or 8 channels"
            )
        if self.primary not in self.channels:
            raise ChannelizationError(f"primary {self.primary} outside allocation {sorted(self.channels)}")

    @property
    def mask(self) -> int:
        return mask_of(self.channels)

    @property
    def size(self) -> int:
        return len(self.channels)

    def with_primary(self, p: int) -> "Allocation":
        return Allocation(self.channels, p)


@lru_cache(maxsize=None)
def _allowed_widths(p: int, alloc_mask: int, widths: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(n for n in widths if tx_mask(p, n, widths) & ~alloc_mask == 0)


def allowed_widths(p: int, alloc: Allocation, widths: Sequence[int] = WIDTHS) -> list[int]:
    """Bond widths whose block around ``p`` fits inside the allocation, ascending."""
    check_channel(p)
    if p not in alloc.channels:
        raise ChannelizationError(f"primary {p} outside allocation {sorted(alloc.channels)}")
    return list(_allowed_widths(p, alloc.mask, tuple(widths)))


@lru_cache(maxsize=None)
def _widest(p: int, free_mask: int, alloc_mask: int, widths: tuple[int, ...]) -> int:
    best = 0
    for n in _allowed_widths(p, alloc_mask, widths):
        m = tx_mask(p, n, widths)
        if m & free_mask == m:
            best = n
        else:
            # blocks are nested, a busy channel in a narrow block is in every wider one
            break
    return best


def widest_available(p: int, free: ChannelsLike, alloc: Allocation, widths: Sequence[int] = WIDTHS) -> int:
    """Widest allowed bond around ``p`` whose channels are all free."""
    free_mask = mask_of(free)
    check_channel(p)
    if not free_mask >> (p - 1) & 1:
        raise ChannelizationError("primary busy")
    if p not in alloc.channels:
        raise ChannelizationError(f"primary {p} outside allocation {sorted(alloc.channels)}")
    return _widest(p, free_mask, alloc.mask, tuple(widths))


def widest_available_mask(p: int, free_mask: int, alloc_mask: int, widths: tuple[int, ...] = WIDTHS) -> int:
    """Unchecked fast path for the engine; returns 0 when the primary is busy."""
    return _widest(p, free_mask, alloc_mask, widths)
