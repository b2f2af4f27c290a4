"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operand shapes are incompatible with the requested operation."""


class ContractError(ValueError):
    """An argument violates a documented precondition."""


class DegenerateSpectrumError(ContractError):
    """The eigenvalue spectrum does not admit the requested closed form."""


class TrainingDiverged(RuntimeError):
    """A loss or parameter became non-finite during training."""

    def __init__(self, step, detail=""):
        self.step = step
        msg = f"training diverged at step {step}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
