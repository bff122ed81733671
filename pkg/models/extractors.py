# Import necessary libraries and packages
import numpy as np
from abc import ABC, abstractmethod
from typing import List, Tuple

from algorithms.zoom_kernel import ImageGrid
from utils.exceptions import InvalidArgumentError


class DifferentiableFeatureExtractor(ABC):
    """Maps an ImageGrid to a d-vector and back-propagates d-vector gradients
    to the input grid. Stands in for a CNN feature network."""

    @abstractmethod
    def extract(self, grid: ImageGrid) -> np.ndarray:
        ...

    @abstractmethod
    def backward(self, grid: ImageGrid, upstream: np.ndarray) -> np.ndarray:
        """Gradient w.r.t. the grid values (H×W×C) given dL/dfeature."""
        ...

    @abstractmethod
    def output_dim(self, shape: Tuple[int, int, int]) -> int:
        ...


class BlockMeanPooling(DifferentiableFeatureExtractor):
    """Mean of each channel over a blocks_y × blocks_x partition of the grid.

    Features are ordered (block row, block column, channel).
    """

    def __init__(self, blocks_y: int = 2, blocks_x: int = 2):
        if blocks_y < 1 or blocks_x < 1:
            raise InvalidArgumentError("block counts must be >= 1")
        self.blocks_y = blocks_y
        self.blocks_x = blocks_x

    def _regions(self, H: int, W: int) -> List[Tuple[np.ndarray, np.ndarray]]:
        if H < self.blocks_y or W < self.blocks_x:
            raise InvalidArgumentError(
                f"{H}×{W} grid cannot be split into {self.blocks_y}×{self.blocks_x} blocks"
            )
        rows = np.array_split(np.arange(H), self.blocks_y)
        cols = np.array_split(np.arange(W), self.blocks_x)
        return [(r, c) for r in rows for c in cols]

    def output_dim(self, shape: Tuple[int, int, int]) -> int:
        return self.blocks_y * self.blocks_x * shape[2]

    def extract(self, grid: ImageGrid) -> np.ndarray:
        values = grid.values
        return np.concatenate([
            values[r[0]:r[-1] + 1, c[0]:c[-1] + 1].mean(axis=(0, 1))
            for r, c in self._regions(grid.height, grid.width)
        ])

    def backward(self, grid: ImageGrid, upstream: np.ndarray) -> np.ndarray:
        C = grid.channels
        upstream = np.asarray(upstream, dtype=np.float64)
        if upstream.shape != (self.output_dim(grid.shape),):
            raise InvalidArgumentError(f"upstream gradient has shape {upstream.shape}")
        grad = np.zeros(grid.shape)
        for b, (r, c) in enumerate(self._regions(grid.height, grid.width)):
            count = r.size * c.size
            grad[r[0]:r[-1] + 1, c[0]:c[-1] + 1] += upstream[b * C:(b + 1) * C] / count
        return grad


class RandomLinearExtractor(DifferentiableFeatureExtractor):
    """Fixed seeded Gaussian linear map from the flattened grid to d features."""

    def __init__(self, input_shape: Tuple[int, int, int], d: int, seed: int = 0):
        if d < 1:
            raise InvalidArgumentError("feature dimension must be >= 1")
        self.input_shape = tuple(input_shape)
        size = int(np.prod(self.input_shape))
        rng = np.random.RandomState(seed)
        self.matrix = rng.normal(0.0, 1.0 / np.sqrt(size), size=(d, size))

    def output_dim(self, shape: Tuple[int, int, int]) -> int:
        return self.matrix.shape[0]

    def _check(self, grid: ImageGrid):
        if grid.shape != self.input_shape:
            raise InvalidArgumentError(
                f"extractor built for {self.input_shape}, got grid {grid.shape}"
            )

    def extract(self, grid: ImageGrid) -> np.ndarray:
        self._check(grid)
        return self.matrix @ grid.values.reshape(-1)

    def backward(self, grid: ImageGrid, upstream: np.ndarray) -> np.ndarray:
        self._check(grid)
        return (self.matrix.T @ np.asarray(upstream, dtype=np.float64)).reshape(self.input_shape)
