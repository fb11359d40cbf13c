"""
Counter-based random streams keyed by (master_seed, trial_index)

Each stream is a Philox-4x64 generator whose 128-bit key is the pair (master_seed, trial_index).
Variates are drawn in blocks and handed out in order, so how a caller batches its requests never
changes which variate it receives: the k-th uniform of a stream is a pure function of
(master_seed, trial_index, k).
"""
from typing import Dict

import numpy as np

from asep_lab.errors import DomainError

_U64 = 1 << 64
# Philox emits four 64-bit words per counter increment, one double per word
_WORDS_PER_BLOCK = 4


def _check_u64(name: str, value: int) -> int:
    value = int(value)
    if not 0 <= value < _U64:
        raise DomainError(f"{name} must fit in an unsigned 64-bit integer, got {value}")
    return value


class RngStream:
    """Reproducible stream of uniforms on [0, 1) for one trial"""

    def __init__(self, master_seed: int, trial_index: int, block_size: int = 3 * 1024):
        self.master_seed = _check_u64("master_seed", master_seed)
        self.trial_index = _check_u64("trial_index", trial_index)
        self.block_size = int(block_size)
        self._generator = np.random.Generator(np.random.Philox(key=self.key))
        self._buffer = np.empty(0, dtype=np.float64)
        self._pos = 0
        self.counter = 0

    @property
    def key(self) -> np.ndarray:
        return np.array([self.master_seed, self.trial_index], dtype=np.uint64)

    def _ensure(self, n: int) -> None:
        available = self._buffer.size - self._pos
        if available >= n:
            return
        fresh = self._generator.random(max(self.block_size, n - available))
        self._buffer = np.concatenate((self._buffer[self._pos:], fresh))
        self._pos = 0

    def next_uniform(self) -> float:
        self._ensure(1)
        value = float(self._buffer[self._pos])
        self._pos += 1
        self.counter += 1
        return value

    def peek(self, n: int) -> np.ndarray:
        """The next n uniforms without consuming them"""
        self._ensure(n)
        return self._buffer[self._pos:self._pos + n]

    def advance(self, n: int) -> None:
        """Consume n uniforms previously exposed by peek()"""
        if n < 0 or self._pos + n > self._buffer.size:
            raise DomainError(f"cannot advance by {n}: only {self._buffer.size - self._pos} uniforms peeked")
        self._pos += n
        self.counter += n

    def take(self, n: int) -> np.ndarray:
        values = self.peek(n).copy()
        self.advance(n)
        return values

    def uniform_at(self, counter: int) -> float:
        """The variate this stream yields at position `counter`, without touching its state"""
        counter = _check_u64("counter", counter)
        block, word = divmod(counter, _WORDS_PER_BLOCK)
        # the bit generator increments its counter before producing a block
        jumped = np.random.Generator(np.random.Philox(key=self.key, counter=block))
        return float(jumped.random(word + 1)[-1])

    def state(self) -> Dict[str, int]:
        return {"master_seed": self.master_seed, "trial_index": self.trial_index, "counter": self.counter}

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, trial_index={self.trial_index}, counter={self.counter})"


def next_uniform(stream: RngStream) -> float:
    return stream.next_uniform()
