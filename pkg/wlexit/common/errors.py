class ExitNotReached(RuntimeError):
    """Raised when a chain hits its step cap before reaching the exit set."""

    def __init__(self, steps: int, step_cap: int):
        super().__init__(f"exit not reached after {steps} steps (step cap {step_cap})")
        self.steps = steps
        self.step_cap = step_cap


class QuadratureNotConverged(RuntimeError):
    def __init__(self, relative_change: float, tolerance: float):
        super().__init__(
            f"quadrature not converged: refinement changed weights by {relative_change:.3e} "
            f"(tolerance {tolerance:.1e})"
        )
        self.relative_change = relative_change
        self.tolerance = tolerance
