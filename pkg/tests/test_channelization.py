import itertools

import pytest
from hypothesis import given, strategies as st

from dcbsim.channelization import (
    FULL_MASK, NUM_CHANNELS, WIDTHS, Allocation, ChannelizationError, allowed_widths, channels_of,
    is_valid_block, mask_of, tx_channel_set, tx_mask, valid_blocks, widest_available, widest_available_mask,
)


def brute_widest(p, free, alloc_channels):
    """Largest width whose aligned block around p lies in the allocation and is all free."""
    best = 0
    for n in WIDTHS:
        start = ((p - 1) // n) * n + 1
        block = set(range(start, start + n))
        if block <= alloc_channels and block <= free:
            best = max(best, n)
    return best


def all_allocations():
    for n in WIDTHS:
        for b in valid_blocks(n):
            chans = frozenset(channels_of(b))
            for p in chans:
                yield Allocation(chans, p)


def test_tx_channel_sets_match_table():
    assert tx_channel_set(3, 1) == {3}
    assert tx_channel_set(3, 2) == {3, 4}
    assert tx_channel_set(3, 4) == {1, 2, 3, 4}
    assert tx_channel_set(6, 4) == {5, 6, 7, 8}
    assert tx_channel_set(6, 8) == set(range(1, 9))


def test_tx_mask_rejects_width_outside_channelization():
    with pytest.raises(ChannelizationError, match="width not in channelization"):
        tx_mask(1, 3)
    with pytest.raises(ChannelizationError):
        tx_mask(9, 1)


def test_valid_blocks_counts():
    assert [len(valid_blocks(n)) for n in WIDTHS] == [8, 4, 2, 1]
    for n in WIDTHS:
        assert all(is_valid_block(b) for b in valid_blocks(n))
    assert not is_valid_block(mask_of({2, 3}))
    assert not is_valid_block(mask_of({1, 2, 3}))


def test_allocation_validation():
    with pytest.raises(ChannelizationError, match="aligned block"):
        Allocation(frozenset({2, 3}), 2)
    with pytest.raises(ChannelizationError, match="outside allocation"):
        Allocation(frozenset({1, 2}), 3)
    a = Allocation(frozenset({5, 6, 7, 8}), 7)
    assert a.size == 4 and a.mask == 0b11110000
    assert a.with_primary(5).primary == 5


def test_allowed_widths_respect_allocation():
    a = Allocation(frozenset({5, 6, 7, 8}), 6)
    assert allowed_widths(6, a) == [1, 2, 4]
    assert allowed_widths(8, Allocation(frozenset({8}), 8)) == [1]


def test_widest_exhaustive_against_brute_force():
    n = 0
    for alloc in all_allocations():
        for free_mask in range(1 << NUM_CHANNELS):
            free = set(channels_of(free_mask))
            p = alloc.primary
            if p in free:
                assert widest_available(p, free_mask, alloc) == brute_widest(p, free, alloc.channels)
            else:
                with pytest.raises(ChannelizationError, match="primary busy"):
                    widest_available(p, free_mask, alloc)
                assert widest_available_mask(p, free_mask, alloc.mask) == 0
            n += 1
    assert n == 256 * sum(n * len(valid_blocks(n)) for n in WIDTHS)


def test_worked_examples():
    full = Allocation(frozenset(range(1, 9)), 1)
    assert widest_available(1, {1, 2, 3, 4}, full) == 4
    assert widest_available(1, {1, 3, 4, 5, 6, 7, 8}, full) == 1
    assert widest_available(1, set(range(1, 9)), full) == 8
    assert widest_available(5, {5, 6, 7}, full.with_primary(5)) == 2


@given(st.integers(0, FULL_MASK), st.integers(1, NUM_CHANNELS))
def test_widest_block_is_free_and_contains_primary(free_mask, p):
    full = Allocation(frozenset(range(1, 9)), p)
    free_mask |= 1 << (p - 1)
    n = widest_available(p, free_mask, full)
    m = tx_mask(p, n)
    assert m & free_mask == m and m >> (p - 1) & 1
    wider = [w for w in WIDTHS if w > n]
    if wider:
        m2 = tx_mask(p, wider[0])
        assert m2 & free_mask != m2


def test_mask_helpers_roundtrip():
    for chans in itertools.combinations(range(1, 9), 3):
        assert channels_of(mask_of(chans)) == chans
    with pytest.raises(ChannelizationError):
        mask_of([0])
    with pytest.raises(ChannelizationError):
        mask_of(256)
