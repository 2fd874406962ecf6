"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operand shapes are incompatible. The message names both shapes."""


class NumericError(ArithmeticError):
    """A numeric guard tripped: overflow, non-convergence, singular system."""


class DegenerateRowError(ValueError):
    """A softmax row has no unmasked entries."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row} is fully masked; softmax undefined")


class DivergenceError(NumericError):
    """Gradient descent produced a non-finite iterate."""

    def __init__(self, epoch: int, mask_norm: float):
        self.epoch = epoch
        self.mask_norm = mask_norm
        super().__init__(
            f"non-finite mask iterate at epoch {epoch} (||M||_F = {mask_norm!r})"
        )
