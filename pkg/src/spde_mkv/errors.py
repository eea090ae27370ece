"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class DivergenceError(ArithmeticError):
    """A path produced a nonfinite value (CLI exit code 3)."""

    def __init__(self, step, particle=None, detail=""):
        self.step = step
        self.particle = particle
        where = f"step {step}" if particle is None else f"step {step}, particle {particle}"
        super().__init__(f"nonfinite state at {where}" + (f": {detail}" if detail else ""))


class NonConvergenceError(RuntimeError):
    """The Picard iteration hit max_iter above tolerance (CLI exit code 4)."""
