from dataclasses import dataclass

import numpy as np
import torch

from relu_death.errors import RejectedInputError


@dataclass(frozen=True)
class SeedSpec:
    """
    Root of a family of independent random streams.

    Child seeds are a fixed hash (numpy's `SeedSequence` mixing) of `(base_seed, stream_label, index)`,
    so every trial owns its stream no matter which worker runs it or in which order.
    """

    base_seed: int
    stream_label: bytes = b""

    def __post_init__(self):
        if not 0 <= self.base_seed < 2**64:
            raise RejectedInputError(f"base_seed must be an unsigned 64-bit integer, got {self.base_seed}")
        if isinstance(self.stream_label, str):
            object.__setattr__(self, "stream_label", self.stream_label.encode("utf-8"))

    def substream(self, label: str) -> "SeedSpec":
        suffix = label.encode("utf-8")
        joined = self.stream_label + b"/" + suffix if self.stream_label else suffix
        return SeedSpec(self.base_seed, joined)

    def child_seed(self, index: int) -> int:
        label = int.from_bytes(self.stream_label, "little")
        sequence = np.random.SeedSequence(
            entropy=self.base_seed, spawn_key=(len(self.stream_label), label, int(index))
        )
        return int(sequence.generate_state(1, dtype=np.uint64)[0])

    def generator(self, index: int) -> torch.Generator:
        generator = torch.Generator(device="cpu")
        generator.manual_seed(self.child_seed(index))
        return generator

    def describe(self) -> str:
        return f"{self.base_seed}:{self.stream_label.decode('utf-8', errors='replace')}"
